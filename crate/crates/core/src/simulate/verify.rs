use rayon::prelude::*;

use crate::discretize::{build_semidiscrete, grid_x, restrict, GridVector, SemiDiscreteSystem};
use crate::problem::{ParabolicProblem, StateSpec, TransferSpec};

use super::{
    integrate, step_count, InputSignal, IntegratorOptions, SimulateError, Startup, Trajectory,
};

/// Relative change of the terminal error allowed when `dt` is halved.
pub const RICHARDSON_REL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub n_sim: usize,
    pub dt: f64,
    pub startup: Startup,
    /// Snapshot stride of the reported trajectory (0 keeps only the ends).
    pub snapshot_every: usize,
    /// Repeat the run at `dt / 2` and compare terminal errors.
    pub richardson: bool,
}

impl VerifyOptions {
    pub fn new(n_sim: usize, dt: f64) -> Self {
        Self {
            n_sim,
            dt,
            startup: Startup::None,
            snapshot_every: 0,
            richardson: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub n_sim: usize,
    pub dt: f64,
    /// `||v(T) - R_{n_sim} u_T||_{2d}`.
    pub terminal_error: f64,
    pub terminal_error_half_dt: Option<f64>,
    /// `||v_dt(T) - v_{dt/2}(T)||_{2d}`.
    pub dt_change: Option<f64>,
    pub richardson_ok: bool,
    pub initial_norm: f64,
    pub target_norm: f64,
    pub trajectory: Trajectory,
    pub target: GridVector,
}

/// `R_n` of an endpoint state; steady states are solved on the grid itself.
pub fn realize_state(
    sys: &SemiDiscreteSystem,
    state: &StateSpec,
) -> Result<GridVector, SimulateError> {
    Ok(match state {
        StateSpec::Zero => GridVector::zeros(sys.n),
        StateSpec::SteadyState { f_ss } => sys.steady_state(*f_ss)?,
        StateSpec::Profile(u) => restrict(u, sys.n),
    })
}

fn distance(a: &GridVector, b: &GridVector) -> f64 {
    GridVector::new(a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect()).norm_2d()
}

/// Simulates `initial -> target` over `[0, t_end]` at `n_sim` under `input`.
pub fn verify(
    p: &ParabolicProblem,
    initial: &StateSpec,
    target: &StateSpec,
    input: &dyn InputSignal,
    t_end: f64,
    opts: VerifyOptions,
) -> Result<VerifyReport, SimulateError> {
    let sys = build_semidiscrete(p, opts.n_sim)?;
    let v0 = realize_state(&sys, initial)?;
    let v_t = realize_state(&sys, target)?;
    let int_opts = IntegratorOptions {
        dt: opts.dt,
        snapshot_every: opts.snapshot_every,
        startup: opts.startup,
    };
    let run = |o: IntegratorOptions| integrate(&sys, &v0, input, 0.0, t_end, o);
    let (trajectory, half) = if opts.richardson {
        let half_opts = IntegratorOptions {
            dt: 0.5 * opts.dt,
            snapshot_every: 0,
            ..int_opts
        };
        let (a, b) = rayon::join(|| run(int_opts), || run(half_opts));
        (a?, Some(b?))
    } else {
        (run(int_opts)?, None)
    };
    let terminal_error = distance(trajectory.terminal(), &v_t);
    let terminal_error_half_dt = half.as_ref().map(|h| distance(h.terminal(), &v_t));
    let dt_change = half
        .as_ref()
        .map(|h| distance(h.terminal(), trajectory.terminal()));
    let target_norm = v_t.norm_2d();
    let richardson_ok = match terminal_error_half_dt {
        None => true,
        Some(e2) => {
            let change = (terminal_error - e2).abs();
            change <= RICHARDSON_REL * e2 || change <= 1e-10 * target_norm.max(1.0)
        }
    };
    Ok(VerifyReport {
        n_sim: opts.n_sim,
        dt: opts.dt,
        terminal_error,
        terminal_error_half_dt,
        dt_change,
        richardson_ok,
        initial_norm: v0.norm_2d(),
        target_norm,
        trajectory,
        target: v_t,
    })
}

pub fn verify_transfer(
    p: &ParabolicProblem,
    spec: &TransferSpec,
    input: &dyn InputSignal,
    opts: VerifyOptions,
) -> Result<VerifyReport, SimulateError> {
    verify(p, &spec.initial, &spec.target, input, spec.horizon, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    /// `sup_t ||v_n(t) - (reference at the x_j)||_{2d}` over snapshots.
    pub sup_error: f64,
    pub terminal_error: f64,
    /// `sup_t |u(0,t) - v_{n,1}(t)|` with `u(0,t)` from the reference closure.
    pub trace_error: f64,
    /// `sup_t |u_x(0,t) - q0 v_{n,1}(t)|`.
    pub flux_trace_error: f64,
    /// Reference nodes coincide with the coarse nodes.
    pub index_matched: bool,
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub n_ref: usize,
    pub snapshot_times: Vec<f64>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceStudy {
    pub fn sup_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.sup_error).collect()
    }

    pub fn write_csv(&self, mut w: impl std::io::Write) -> Result<(), SimulateError> {
        writeln!(w, "n,sup_error,terminal_error,trace_error,flux_trace_error")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.n, r.sup_error, r.terminal_error, r.trace_error, r.flux_trace_error
            )?;
        }
        Ok(())
    }
}

/// Reference values at the coarse nodes: by index when the grids nest, by
/// linear interpolation otherwise.
fn restrict_reference(fine: &GridVector, n: usize) -> (GridVector, bool) {
    let nf = fine.n();
    if (nf + 1) % (n + 1) == 0 {
        let r = (nf + 1) / (n + 1);
        return (
            GridVector::new((1..=n).map(|j| fine.values[j * r - 1]).collect()),
            true,
        );
    }
    let values = (1..=n)
        .map(|j| {
            let pos = grid_x(n, j) * (nf + 1) as f64;
            let i = (pos.floor() as usize).clamp(1, nf - 1);
            let w = pos - i as f64;
            (1.0 - w) * fine.values[i - 1] + w * fine.values[i]
        })
        .collect();
    (GridVector::new(values), false)
}

/// `(u(0), u_x(0))` implied by a grid state and the left boundary condition.
fn left_traces(sys: &SemiDiscreteSystem, v: &[f64]) -> (f64, f64) {
    let bc = &sys.bc;
    let u0 = sys.left_boundary_value(v);
    let ux = if bc.alpha0 != 0.0 {
        -bc.beta0 / bc.alpha0 * u0
    } else {
        (4.0 * v[0] - v[1] - 3.0 * u0) / (2.0 * sys.h)
    };
    (u0, ux)
}

/// Sup-over-snapshot errors of each `n` against a reference run at `n_ref`,
/// all from `u0` under the same input.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    p: &ParabolicProblem,
    u0: &StateSpec,
    input: &dyn InputSignal,
    n_list: &[usize],
    n_ref: usize,
    t_end: f64,
    dt: f64,
    snapshots: usize,
) -> Result<ConvergenceStudy, SimulateError> {
    let steps = step_count(0.0, t_end, dt)?;
    let stride = (steps / snapshots.max(1)).max(1);
    let opts = IntegratorOptions::new(dt).with_snapshots(stride);
    let run = |n: usize| -> Result<(SemiDiscreteSystem, Trajectory), SimulateError> {
        let sys = build_semidiscrete(p, n)?;
        let v0 = realize_state(&sys, u0)?;
        let tr = integrate(&sys, &v0, input, 0.0, t_end, opts)?;
        Ok((sys, tr))
    };
    let (ref_sys, reference) = run(n_ref)?;
    let rows = n_list
        .par_iter()
        .map(|&n| -> Result<ConvergenceRow, SimulateError> {
            let (sys, tr) = run(n)?;
            let mut row = ConvergenceRow {
                n,
                sup_error: 0.0,
                terminal_error: 0.0,
                trace_error: 0.0,
                flux_trace_error: 0.0,
                index_matched: false,
            };
            for (v, r) in tr.states.iter().zip(&reference.states) {
                let (rr, matched) = restrict_reference(r, n);
                let e = distance(v, &rr);
                row.sup_error = row.sup_error.max(e);
                row.terminal_error = e;
                row.index_matched = matched;
                let (u0_ref, ux_ref) = left_traces(&ref_sys, &r.values);
                row.trace_error = row.trace_error.max((u0_ref - v.values[0]).abs());
                row.flux_trace_error = row
                    .flux_trace_error
                    .max((ux_ref - sys.q0 * v.values[0]).abs());
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ConvergenceStudy {
        n_ref,
        snapshot_times: reference.times.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{BoundaryConditions, PiecewiseSmoothFn};
    use crate::simulate::FnInput;

    fn example_problem() -> ParabolicProblem {
        ParabolicProblem::new(
            PiecewiseSmoothFn::from_exprs(&[(0.0, 0.5, "1 + x"), (0.5, 1.0, "2")]).unwrap(),
            PiecewiseSmoothFn::from_exprs(&[(0.0, 0.3, "sin(5*pi*x)"), (0.3, 1.0, "2 - 2*x")])
                .unwrap(),
            PiecewiseSmoothFn::from_exprs(&[(0.0, 0.4, "exp(-5*x)"), (0.4, 1.0, "2*x^4")]).unwrap(),
            BoundaryConditions {
                alpha0: 1.0,
                beta0: 0.0,
                alpha1: 0.0,
                beta1: 1.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_to_zero_is_exact() {
        let spec = TransferSpec {
            horizon: 0.2,
            initial: StateSpec::Zero,
            target: StateSpec::Zero,
            gevrey_alpha: 1.5,
            gevrey_gamma: 0.2,
        };
        let r = verify_transfer(
            &example_problem(),
            &spec,
            &FnInput(|_| 0.0),
            VerifyOptions::new(40, 1e-3),
        )
        .unwrap();
        assert_eq!(r.terminal_error, 0.0);
        assert!(r.richardson_ok);
    }

    #[test]
    fn equilibrium_study_has_zero_error_scale() {
        // The steady state of each grid is its own equilibrium.
        let s = convergence_study(
            &example_problem(),
            &StateSpec::SteadyState { f_ss: 0.5 },
            &FnInput(|_| 0.5),
            &[15, 31],
            63,
            0.05,
            1e-3,
            5,
        )
        .unwrap();
        assert!(s.rows.iter().all(|r| r.index_matched));
        let direct: Vec<f64> = [15, 31]
            .iter()
            .map(|&n| {
                let a = build_semidiscrete(&example_problem(), n)
                    .unwrap()
                    .steady_state(0.5)
                    .unwrap();
                let b = build_semidiscrete(&example_problem(), 63)
                    .unwrap()
                    .steady_state(0.5)
                    .unwrap();
                distance(&a, &restrict_reference(&b, n).0)
            })
            .collect();
        for (r, d) in s.rows.iter().zip(direct) {
            assert!((r.sup_error - d).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_state_under_equilibrium_input() {
        let p = ParabolicProblem::heat(BoundaryConditions {
            alpha0: 1.0,
            beta0: 0.0,
            alpha1: 0.0,
            beta1: 1.0,
        });
        let s = convergence_study(
            &p,
            &StateSpec::SteadyState { f_ss: 1.0 },
            &FnInput(|_| 1.0),
            &[10, 20],
            80,
            0.05,
            1e-3,
            4,
        )
        .unwrap();
        for r in &s.rows {
            assert!(
                r.sup_error < 1e-12 && r.trace_error < 1e-12 && r.flux_trace_error == 0.0,
                "{r:?}"
            );
        }
    }

    #[test]
    fn interpolated_restriction_is_exact_for_linear_states() {
        let fine = crate::discretize::restrict_with(|x| 2.0 * x - 1.0, 100);
        let (c, matched) = restrict_reference(&fine, 7);
        assert!(!matched);
        for (j, v) in c.values.iter().enumerate() {
            assert!((v - (2.0 * grid_x(7, j + 1) - 1.0)).abs() < 1e-14);
        }
    }
}
