//! End-to-end plans: steady-state transfer, null control and their sum.

mod report;

pub use report::PlanReport;

use rayon::prelude::*;

use crate::discretize::{
    build_semidiscrete, growth_certificate, GrowthCertificate, SemiDiscreteSystem,
};
use crate::flatness::{
    coefficient_bound_fit, flat_state, flat_table, synthesize_input, FlatTable, RFit, SampledSignal,
};
use crate::gevrey::{endpoint_series, GevreyFit, PsiStep, ReferenceTrajectory, TaylorJet};
use crate::nullcontrol::{flat_output_jets, propagate, NullInput, SmoothedStateJets};
use crate::problem::{NullControlSpec, ParabolicProblem, StateSpec, Task, TransferSpec};
use crate::simulate::{
    integrate, realize_state, step_count, verify, Delayed, FnInput, InputSignal, IntegratorOptions,
    Startup, Sum, Trajectory, VerifyOptions, VerifyReport,
};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    /// Design grid size.
    pub n: usize,
    /// Highest derivative order kept in the input sums.
    pub truncation: usize,
    /// Order of the coefficient table (at least `truncation`).
    pub table_order: usize,
    pub n_sim: usize,
    pub dt: f64,
    /// Terminal-error bound for a plan to count as verified.
    pub tolerance: f64,
    /// Number of stored snapshots of the verification run.
    pub snapshots: usize,
    pub startup: Startup,
    /// Run the verification simulation.
    pub verify: bool,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            n: 500,
            truncation: 20,
            table_order: 25,
            n_sim: 2000,
            dt: 1e-4,
            tolerance: 5e-4,
            snapshots: 20,
            startup: Startup::None,
            verify: true,
        }
    }
}

impl PlanOptions {
    fn check(&self) -> Result<(), Error> {
        if self.truncation > self.table_order {
            return Err(Error::Options(format!(
                "truncation {} exceeds the table order {}",
                self.truncation, self.table_order
            )));
        }
        if self.n_sim == self.n {
            return Err(Error::Options(format!(
                "n_sim = {} must differ from the design n",
                self.n_sim
            )));
        }
        Ok(())
    }

    fn verify_options(&self, t_end: f64) -> Result<VerifyOptions, Error> {
        let steps = step_count(0.0, t_end, self.dt)?;
        Ok(VerifyOptions {
            n_sim: self.n_sim,
            dt: self.dt,
            startup: self.startup,
            snapshot_every: (steps / self.snapshots.max(1)).max(1),
            richardson: true,
        })
    }
}

/// Design system and its coefficient table.
#[derive(Debug, Clone)]
pub struct Design {
    pub sys: SemiDiscreteSystem,
    pub table: FlatTable,
    pub growth: GrowthCertificate,
    pub r_fit: RFit,
}

pub fn design(p: &ParabolicProblem, n: usize, table_order: usize) -> Result<Design, Error> {
    let sys = build_semidiscrete(p, n)?;
    let table = flat_table(&sys, table_order)?;
    let growth = growth_certificate(&sys)?;
    let r_fit = coefficient_bound_fit(&[&table.a]);
    Ok(Design {
        sys,
        table,
        growth,
        r_fit,
    })
}

/// Jet sample times on `[0, t_end]`: the integrator grid refined once, so
/// that runs at `dt` and `dt / 2` only query sample times.
pub fn design_times(t_end: f64, dt: f64) -> Result<Vec<f64>, Error> {
    let m = 2 * step_count(0.0, t_end, dt)?;
    Ok((0..=m).map(|k| t_end * k as f64 / m as f64).collect())
}

fn gevrey_fit(jets: &[TaylorJet], alpha: f64) -> GevreyFit {
    let order = jets.first().map_or(0, |j| j.order());
    let sup = (0..=order)
        .map(|m| jets.iter().map(|j| j.coeffs[m].abs()).fold(0.0, f64::max))
        .collect();
    GevreyFit::fit(sup, alpha)
}

/// Transfer between two endpoint states along a reference flat output.
#[derive(Debug, Clone)]
pub struct TransferLeg {
    pub spec: TransferSpec,
    pub reference: ReferenceTrajectory,
    /// Flat-output jets on the design times.
    pub jets: Vec<TaylorJet>,
    pub surrogate_divergent: bool,
    pub gevrey: GevreyFit,
}

impl TransferLeg {
    pub fn new(
        p: &ParabolicProblem,
        design: &Design,
        spec: &TransferSpec,
        dt: f64,
    ) -> Result<Self, Error> {
        spec.validate()?;
        let order = design.table.k_max;
        let y0 = endpoint_series(p, &spec.initial, &design.sys, order)?;
        let yt = endpoint_series(p, &spec.target, &design.sys, order)?;
        let reference = ReferenceTrajectory::new(
            &y0.values,
            &yt.values,
            spec.horizon,
            spec.gevrey_alpha,
            spec.gevrey_gamma,
        )?;
        let jets = reference.jets(&design_times(spec.horizon, dt)?, order + 1)?;
        let gevrey = gevrey_fit(&jets, spec.gevrey_alpha);
        Ok(Self {
            spec: spec.clone(),
            reference,
            jets,
            surrogate_divergent: y0.surrogate_divergent || yt.surrogate_divergent,
            gevrey,
        })
    }

    pub fn input(&self, table: &FlatTable, truncation: usize) -> Result<SampledSignal, Error> {
        Ok(synthesize_input(table, &self.jets, truncation)?)
    }

    /// Flat states of the design grid at about `count` times.
    pub fn design_trajectory(&self, table: &FlatTable, count: usize) -> Result<Trajectory, Error> {
        let stride = ((self.jets.len() - 1) / count.max(1)).max(1);
        let picked: Vec<&TaylorJet> = self
            .jets
            .iter()
            .enumerate()
            .filter(|(i, _)| i % stride == 0)
            .map(|(_, j)| j)
            .collect();
        let states = picked
            .iter()
            .map(|j| flat_state(table, j))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Trajectory {
            times: picked.iter().map(|j| j.t).collect(),
            states,
        })
    }
}

/// Null-control leg: free evolution over `[0, s]`, then the flat output
/// `phi psi` steered to zero over the window `tau - s`.
#[derive(Debug, Clone)]
pub struct NullLeg {
    pub spec: NullControlSpec,
    pub psi: PsiStep,
    pub jets: SmoothedStateJets,
    pub flat_output: Vec<TaylorJet>,
    pub gevrey: GevreyFit,
}

impl NullLeg {
    pub fn new(design: &Design, spec: &NullControlSpec, dt: f64) -> Result<Self, Error> {
        spec.validate()?;
        let window = spec.window();
        let psi = PsiStep::new(spec.gevrey_alpha, window)?;
        let times = design_times(window, dt)?;
        let jets = propagate(
            &design.sys,
            &spec.initial,
            spec.s,
            &times,
            design.table.k_max + 1,
        )?;
        let flat_output = flat_output_jets(&jets, &psi)?;
        let gevrey = gevrey_fit(&flat_output, spec.gevrey_alpha);
        Ok(Self {
            spec: spec.clone(),
            psi,
            jets,
            flat_output,
            gevrey,
        })
    }

    pub fn input(&self, table: &FlatTable, truncation: usize) -> Result<NullInput, Error> {
        let g = synthesize_input(table, &self.flat_output, truncation)?;
        Ok(NullInput {
            g,
            delay: self.spec.s,
            flat_output: Vec::new(),
        })
    }
}

/// `r = f + g~`.
#[derive(Debug, Clone)]
pub struct CompositeInput {
    pub f: SampledSignal,
    pub g: NullInput,
}

impl CompositeInput {
    pub fn signal(&self) -> impl InputSignal + '_ {
        Sum(
            &self.f,
            Delayed {
                delay: self.g.delay,
                inner: &self.g.g,
            },
        )
    }

    pub fn sample(&self, times: &[f64]) -> Vec<f64> {
        let s = self.signal();
        times.iter().map(|&t| s.value(t)).collect()
    }
}

/// `L2[0, T]` distance of two inputs sampled on `times`, by the trapezoid rule.
pub fn l2_distance(times: &[f64], a: &[f64], b: &[f64]) -> f64 {
    times
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (d0, d1) = (a[i] - b[i], a[i + 1] - b[i + 1]);
            0.5 * (w[1] - w[0]) * (d0 * d0 + d1 * d1)
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone)]
pub struct TransferPlan {
    pub design: Design,
    pub leg: TransferLeg,
    pub input: SampledSignal,
    pub design_trajectory: Trajectory,
    pub verification: Option<VerifyReport>,
    pub report: PlanReport,
}

pub fn plan_transfer(
    p: &ParabolicProblem,
    spec: &TransferSpec,
    opts: &PlanOptions,
) -> Result<TransferPlan, Error> {
    opts.check()?;
    let design = design(p, opts.n, opts.table_order)?;
    let leg = TransferLeg::new(p, &design, spec, opts.dt)?;
    let input = leg.input(&design.table, opts.truncation)?;
    let design_trajectory = leg.design_trajectory(&design.table, opts.snapshots)?;
    let verification = if opts.verify {
        Some(verify(
            p,
            &spec.initial,
            &spec.target,
            &input,
            spec.horizon,
            opts.verify_options(spec.horizon)?,
        )?)
    } else {
        None
    };
    let mut report = PlanReport::new("transfer", opts, &design);
    report.gevrey_transfer = Some(leg.gevrey.d);
    report.gamma_shrunk = leg.reference.gamma_shrunk();
    report.surrogate_divergent = leg.surrogate_divergent;
    report.set_verification(verification.as_ref());
    Ok(TransferPlan {
        design,
        leg,
        input,
        design_trajectory,
        verification,
        report,
    })
}

#[derive(Debug, Clone)]
pub struct NullPlan {
    pub design: Design,
    pub leg: NullLeg,
    pub input: NullInput,
    pub verification: Option<VerifyReport>,
    /// Terminal `||.||_{2d}` of the uncontrolled run.
    pub free_decay: Option<f64>,
    pub report: PlanReport,
}

pub fn plan_null_control(
    p: &ParabolicProblem,
    spec: &NullControlSpec,
    opts: &PlanOptions,
) -> Result<NullPlan, Error> {
    opts.check()?;
    let design = design(p, opts.n, opts.table_order)?;
    let leg = NullLeg::new(&design, spec, opts.dt)?;
    let input = leg.input(&design.table, opts.truncation)?;
    let (verification, free_decay) = if opts.verify {
        let initial = StateSpec::Profile(spec.initial.clone());
        let signal = Delayed {
            delay: input.delay,
            inner: &input.g,
        };
        let vopts = opts.verify_options(spec.tau)?;
        let (controlled, free) = rayon::join(
            || verify(p, &initial, &StateSpec::Zero, &signal, spec.tau, vopts),
            || {
                let quick = VerifyOptions {
                    richardson: false,
                    snapshot_every: 0,
                    ..vopts
                };
                verify(
                    p,
                    &initial,
                    &StateSpec::Zero,
                    &FnInput(|_| 0.0),
                    spec.tau,
                    quick,
                )
            },
        );
        (Some(controlled?), Some(free?.terminal_error))
    } else {
        (None, None)
    };
    let mut report = PlanReport::new("null", opts, &design);
    report.gevrey_null = Some(leg.gevrey.d);
    report.state_growth = Some(leg.jets.growth_constant());
    report.free_decay = free_decay;
    report.set_verification(verification.as_ref());
    Ok(NullPlan {
        design,
        leg,
        input,
        verification,
        free_decay,
        report,
    })
}

#[derive(Debug, Clone)]
pub struct CompositePlan {
    pub design: Design,
    pub transfer: TransferLeg,
    pub null: NullLeg,
    /// Sample times on `[0, tau]`.
    pub times: Vec<f64>,
    pub input: CompositeInput,
    pub verification: Option<VerifyReport>,
    /// `||v_r(tau) - (v_f(tau) + v_g(tau))||_{2d}` of separate runs.
    pub superposition_error: Option<f64>,
    pub report: PlanReport,
}

impl CompositePlan {
    pub fn input_at(&self, truncation: usize) -> Result<CompositeInput, Error> {
        Ok(CompositeInput {
            f: self.transfer.input(&self.design.table, truncation)?,
            g: self.null.input(&self.design.table, truncation)?,
        })
    }
}

pub fn plan_composite(
    p: &ParabolicProblem,
    transfer: &TransferSpec,
    null: &NullControlSpec,
    opts: &PlanOptions,
) -> Result<CompositePlan, Error> {
    opts.check()?;
    if transfer.horizon != null.tau {
        return Err(Error::HorizonMismatch {
            transfer: transfer.horizon,
            null: null.tau,
        });
    }
    let design = design(p, opts.n, opts.table_order)?;
    let (t_leg, n_leg) = rayon::join(
        || TransferLeg::new(p, &design, transfer, opts.dt),
        || NullLeg::new(&design, null, opts.dt),
    );
    let (t_leg, n_leg) = (t_leg?, n_leg?);
    let input = CompositeInput {
        f: t_leg.input(&design.table, opts.truncation)?,
        g: n_leg.input(&design.table, opts.truncation)?,
    };
    let tau = null.tau;
    let times = design_times(tau, opts.dt)?;
    let initial = StateSpec::Profile(null.initial.clone());
    let (verification, superposition_error) = if opts.verify {
        let vopts = opts.verify_options(tau)?;
        let signal = input.signal();
        let verification = verify(p, &initial, &transfer.target, &signal, tau, vopts)?;
        let sys = build_semidiscrete(p, opts.n_sim)?;
        let iopts = IntegratorOptions::new(opts.dt).with_startup(opts.startup);
        let f_run = || -> Result<Trajectory, Error> {
            Ok(integrate(
                &sys,
                &realize_state(&sys, &transfer.initial)?,
                &input.f,
                0.0,
                tau,
                iopts,
            )?)
        };
        let g_run = || -> Result<Trajectory, Error> {
            let g = Delayed {
                delay: input.g.delay,
                inner: &input.g.g,
            };
            Ok(integrate(
                &sys,
                &realize_state(&sys, &initial)?,
                &g,
                0.0,
                tau,
                iopts,
            )?)
        };
        let (a, b) = rayon::join(f_run, g_run);
        let (a, b) = (a?, b?);
        let sum: Vec<f64> = a
            .terminal()
            .values
            .iter()
            .zip(&b.terminal().values)
            .map(|(x, y)| x + y)
            .collect();
        let diff = crate::discretize::GridVector::new(
            verification
                .trajectory
                .terminal()
                .values
                .iter()
                .zip(&sum)
                .map(|(x, y)| x - y)
                .collect(),
        );
        (Some(verification), Some(diff.norm_2d()))
    } else {
        (None, None)
    };
    let mut report = PlanReport::new("composite", opts, &design);
    report.gevrey_transfer = Some(t_leg.gevrey.d);
    report.gevrey_null = Some(n_leg.gevrey.d);
    report.state_growth = Some(n_leg.jets.growth_constant());
    report.gamma_shrunk = t_leg.reference.gamma_shrunk();
    report.surrogate_divergent = t_leg.surrogate_divergent;
    report.superposition_error = superposition_error;
    report.set_verification(verification.as_ref());
    Ok(CompositePlan {
        design,
        transfer: t_leg,
        null: n_leg,
        times,
        input,
        verification,
        superposition_error,
        report,
    })
}

/// Outcome of [`plan`].
#[derive(Debug, Clone)]
pub enum Plan {
    Transfer(Box<TransferPlan>),
    NullControl(Box<NullPlan>),
    Composite(Box<CompositePlan>),
}

impl Plan {
    pub fn report(&self) -> &PlanReport {
        match self {
            Plan::Transfer(p) => &p.report,
            Plan::NullControl(p) => &p.report,
            Plan::Composite(p) => &p.report,
        }
    }
}

pub fn plan(p: &ParabolicProblem, task: &Task, opts: &PlanOptions) -> Result<Plan, Error> {
    Ok(match task {
        Task::Transfer(t) => Plan::Transfer(Box::new(plan_transfer(p, t, opts)?)),
        Task::NullControl(nc) => Plan::NullControl(Box::new(plan_null_control(p, nc, opts)?)),
        Task::Composite {
            transfer,
            null_control,
        } => Plan::Composite(Box::new(plan_composite(p, transfer, null_control, opts)?)),
    })
}

/// Inputs of a composite plan for several truncations, sampled on the plan times.
pub fn truncation_sweep(
    plan: &CompositePlan,
    truncations: &[usize],
) -> Result<Vec<(usize, Vec<f64>)>, Error> {
    truncations
        .par_iter()
        .map(|&i| Ok((i, plan.input_at(i)?.sample(&plan.times))))
        .collect()
}
