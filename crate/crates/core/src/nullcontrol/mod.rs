//! Null control from a smoothed initial state: the flat output follows the
//! free evolution `e^{A_n(t+s)} R_n u0` and is switched off by the step `psi`.

use rayon::prelude::*;

use crate::discretize::{
    build_semidiscrete, restrict, DiscretizeError, SemiDiscreteSystem, SpectralDecomposition,
};
use crate::flatness::{FlatTable, FlatnessError, SampledSignal};
use crate::gevrey::{ln_factorial, GevreyError, PsiStep, TaylorJet};
use crate::problem::{ParabolicProblem, PiecewiseSmoothFn};

/// Jet entries above this abort the computation.
pub const MAGNITUDE_LIMIT: f64 = 1e280;

#[derive(Debug, thiserror::Error)]
pub enum NullControlError {
    #[error("smoothing time s = {0} must be positive")]
    NonPositiveSmoothing(f64),
    #[error(
        "jet entry of order {m} at t = {t} has magnitude {value:e}, above {MAGNITUDE_LIMIT:e}"
    )]
    Magnitude { m: usize, t: f64, value: f64 },
    #[error("jet order {got} is below the truncation {needed}")]
    JetOrder { needed: usize, got: usize },
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
    #[error(transparent)]
    Flatness(#[from] FlatnessError),
    #[error(transparent)]
    Gevrey(#[from] GevreyError),
}

/// Derivative jets of `phi(t) = (alpha0 - beta0 q0) [e^{A_n(t+s)} R_n u0]_1`.
#[derive(Debug, Clone)]
pub struct SmoothedStateJets {
    pub n: usize,
    pub s: f64,
    pub times: Vec<f64>,
    /// `phi_jets[i].coeffs[m] = (alpha0 - beta0 q0) [A_n^m z(times[i])]_1`.
    pub phi_jets: Vec<TaylorJet>,
    /// `z(times[i])` for the first and last time.
    pub z_start: Vec<f64>,
    pub z_end: Vec<f64>,
}

impl SmoothedStateJets {
    pub fn order(&self) -> usize {
        self.phi_jets.first().map_or(0, |j| j.order())
    }

    /// Smallest `c` with `|phi^{(m)}(t)| <= c^{m+1} m!` on the time grid.
    pub fn growth_constant(&self) -> f64 {
        self.phi_jets
            .iter()
            .flat_map(|j| j.coeffs.iter().enumerate())
            .filter(|(_, v)| **v != 0.0)
            .map(|(m, v)| ((v.abs().ln() - ln_factorial(m)) / (m + 1) as f64).exp())
            .fold(0.0, f64::max)
    }
}

/// Evaluates `phi` jets in modal form: `[A^m e^{A t} x]_1 = sum_i w_i lambda_i^m e^{lambda_i t}`.
struct ModalFirstRow {
    eigenvalues: Vec<f64>,
    /// `(P Q)_{1i} c_i`.
    weights: Vec<f64>,
}

impl ModalFirstRow {
    fn new(dec: &SpectralDecomposition, x: &[f64]) -> Result<Self, DiscretizeError> {
        let c = dec.modal(x)?;
        let weights = (0..dec.n())
            .map(|i| dec.p[0] * dec.q[(0, i)] * c[i])
            .collect();
        Ok(Self {
            eigenvalues: dec.eigenvalues.clone(),
            weights,
        })
    }

    fn jet(&self, t: f64, order: usize) -> Vec<f64> {
        let mut out = vec![0.0; order + 1];
        for (l, w) in self.eigenvalues.iter().zip(&self.weights) {
            let mut term = w * (l * t).exp();
            if term == 0.0 {
                continue;
            }
            for o in out.iter_mut() {
                *o += term;
                term *= l;
            }
        }
        out
    }
}

/// Jets of the smoothed state at each time of `times` (all in `[0, T]`),
/// up to derivative order `order`.
pub fn propagate(
    sys: &SemiDiscreteSystem,
    u0_tilde: &PiecewiseSmoothFn,
    s: f64,
    times: &[f64],
    order: usize,
) -> Result<SmoothedStateJets, NullControlError> {
    if !(s > 0.0) {
        return Err(NullControlError::NonPositiveSmoothing(s));
    }
    let x = restrict(u0_tilde, sys.n);
    let dec = SpectralDecomposition::of(sys)?;
    let modal = ModalFirstRow::new(&dec, &x.values)?;
    let factor = sys.bc.alpha0 - sys.bc.beta0 * sys.q0;
    let phi_jets = times
        .par_iter()
        .map(|&t| {
            let mut coeffs = modal.jet(t + s, order);
            for (m, c) in coeffs.iter_mut().enumerate() {
                *c *= factor;
                if !(c.abs() <= MAGNITUDE_LIMIT) {
                    return Err(NullControlError::Magnitude {
                        m,
                        t,
                        value: c.abs(),
                    });
                }
            }
            Ok(TaylorJet::new(t, coeffs))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (t_first, t_last) = (
        times.first().copied().unwrap_or(0.0),
        times.last().copied().unwrap_or(0.0),
    );
    Ok(SmoothedStateJets {
        n: sys.n,
        s,
        times: times.to_vec(),
        phi_jets,
        z_start: dec.propagate(&x.values, t_first + s)?,
        z_end: dec.propagate(&x.values, t_last + s)?,
    })
}

/// Jets of `y_n = phi psi` at each time.
pub fn flat_output_jets(
    jets: &SmoothedStateJets,
    psi: &PsiStep,
) -> Result<Vec<TaylorJet>, NullControlError> {
    let order = jets.order();
    jets.phi_jets
        .par_iter()
        .map(|phi| Ok(phi.mul(&psi.jet(phi.t, order)?)))
        .collect()
}

/// Null-control input on `[0, T]` and its delayed version on `[0, s + T]`.
#[derive(Debug, Clone)]
pub struct NullInput {
    /// `g_n(t) = sum_{k <= i} a_{n,k} y_n^{(k)}(t)` on the jet times.
    pub g: SampledSignal,
    /// Delay `s`: `g~(t) = 0` for `t < s` and `g(t - s)` after.
    pub delay: f64,
    /// `y_n` on the jet times.
    pub flat_output: Vec<TaylorJet>,
}

impl NullInput {
    /// `g~(t)`.
    pub fn delayed(&self, t: f64) -> f64 {
        if t < self.delay {
            0.0
        } else {
            self.g.eval(t - self.delay)
        }
    }

    /// Samples of `g~` on `times`.
    pub fn sample_delayed(&self, times: &[f64]) -> Vec<f64> {
        times.iter().map(|&t| self.delayed(t)).collect()
    }
}

pub fn null_input(
    jets: &SmoothedStateJets,
    psi: &PsiStep,
    tab: &FlatTable,
    truncation: usize,
) -> Result<NullInput, NullControlError> {
    if jets.order() < truncation {
        return Err(NullControlError::JetOrder {
            needed: truncation,
            got: jets.order(),
        });
    }
    let flat_output = flat_output_jets(jets, psi)?;
    let g = crate::flatness::synthesize_input(tab, &flat_output, truncation)?;
    Ok(NullInput {
        g,
        delay: jets.s,
        flat_output,
    })
}

/// Sup-over-time differences of `[A_n^k e^{A_n t} R_n u0]_1` between `n` and
/// `2n` for consecutive doublings in `n_list`.
#[derive(Debug, Clone)]
pub struct SurrogateCheck {
    pub n_list: Vec<usize>,
    /// `(n, k, sup_t |value_{2n} - value_n|)`.
    pub rows: Vec<(usize, usize, f64)>,
}

impl SurrogateCheck {
    pub fn differences(&self, k: usize) -> Vec<f64> {
        self.rows.iter().filter(|r| r.1 == k).map(|r| r.2).collect()
    }
}

pub fn surrogate_convergence_check(
    p: &ParabolicProblem,
    u0_tilde: &PiecewiseSmoothFn,
    times: &[f64],
    k_max: usize,
    n_list: &[usize],
) -> Result<SurrogateCheck, NullControlError> {
    let values: Vec<Vec<Vec<f64>>> = n_list
        .par_iter()
        .map(|&n| -> Result<Vec<Vec<f64>>, NullControlError> {
            let sys = build_semidiscrete(p, n)?;
            let dec = SpectralDecomposition::of(&sys)?;
            let modal = ModalFirstRow::new(&dec, &restrict(u0_tilde, n).values)?;
            Ok(times.iter().map(|&t| modal.jet(t, k_max)).collect())
        })
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (i, &n) in n_list.iter().enumerate() {
        if let Some(i2) = n_list.iter().position(|&m| m == 2 * n) {
            for k in 0..=k_max {
                let d = values[i]
                    .iter()
                    .zip(&values[i2])
                    .map(|(a, b)| (a[k] - b[k]).abs())
                    .fold(0.0, f64::max);
                rows.push((n, k, d));
            }
        }
    }
    Ok(SurrogateCheck {
        n_list: n_list.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::symmetrize;
    use crate::flatness::flat_table;
    use crate::problem::{BoundaryConditions, Piece};

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

    fn w0() -> PiecewiseSmoothFn {
        PiecewiseSmoothFn::from_exprs(&[
            (0.0, 0.3, "exp(x)*sin(2*pi*x)"),
            (0.3, 0.7, "1 - 1/x"),
            (0.7, 1.0, "exp(x)*sin(2*pi*x)"),
        ])
        .unwrap()
    }

    fn grid(t_end: f64, steps: usize) -> Vec<f64> {
        (0..=steps)
            .map(|k| t_end * k as f64 / steps as f64)
            .collect()
    }

    #[test]
    fn zero_initial_state_gives_zero_input() {
        let sys = build_semidiscrete(&example_problem(), 40).unwrap();
        let jets = propagate(
            &sys,
            &PiecewiseSmoothFn::constant(0.0),
            0.05,
            &grid(0.45, 20),
            10,
        )
        .unwrap();
        assert!(jets
            .phi_jets
            .iter()
            .all(|j| j.coeffs.iter().all(|c| *c == 0.0)));
        let tab = flat_table(&sys, 10).unwrap();
        let psi = PsiStep::new(1.5, 0.45).unwrap();
        let g = null_input(&jets, &psi, &tab, 10).unwrap();
        assert!(g.g.values.iter().all(|v| *v == 0.0));
        assert!(matches!(
            null_input(&jets, &psi, &tab, 11),
            Err(NullControlError::JetOrder { .. })
        ));
        assert!(matches!(
            propagate(&sys, &w0(), 0.0, &[0.0], 2),
            Err(NullControlError::NonPositiveSmoothing(_))
        ));
    }

    #[test]
    fn eigenvector_initial_state() {
        let n = 30;
        let sys = build_semidiscrete(&example_problem(), n).unwrap();
        let dec = SpectralDecomposition::new(&symmetrize(&sys).unwrap()).unwrap();
        let idx = n - 3;
        let lam = dec.eigenvalues[idx];
        let mut e = vec![0.0; n];
        e[idx] = 1.0;
        let v = dec.nodal(&e);
        // Interpolate the eigenvector so that R_n reproduces it exactly.
        let xs: Vec<f64> = (1..=n).map(|j| crate::discretize::grid_x(n, j)).collect();
        let vv = v.clone();
        let u0 = PiecewiseSmoothFn::smooth(Piece::custom(move |x| {
            let j = xs.iter().position(|xj| (xj - x).abs() < 1e-12).unwrap_or(0);
            crate::problem::Dual2::constant(vv[j])
        }));
        let s = 0.01;
        let jets = propagate(&sys, &u0, s, &[0.0, 0.1], 4).unwrap();
        for jet in &jets.phi_jets {
            for m in 0..=4 {
                let expect = lam.powi(m as i32) * (lam * (jet.t + s)).exp() * v[0];
                assert!(
                    (jet.coeffs[m] - expect).abs() <= 1e-9 * expect.abs(),
                    "m={m}"
                );
            }
        }
    }

    #[test]
    fn leibniz_matches_finite_differences() {
        let sys = build_semidiscrete(&example_problem(), 60).unwrap();
        let psi = PsiStep::new(1.5, 0.45).unwrap();
        let dt = 1e-5;
        let times: Vec<f64> = (0..=40).map(|k| 0.1 + dt * k as f64).collect();
        let jets = propagate(&sys, &w0(), 0.05, &times, 2).unwrap();
        let y = flat_output_jets(&jets, &psi).unwrap();
        for i in 1..40 {
            let fd = (y[i + 1].coeffs[0] - y[i - 1].coeffs[0]) / (2.0 * dt);
            let exact = y[i].coeffs[1];
            assert!(
                ((fd - exact) / exact).abs() < 1e-6,
                "t={}: {fd} vs {exact}",
                y[i].t
            );
        }
    }

    #[test]
    fn delayed_input_shift() {
        let sys = build_semidiscrete(&example_problem(), 40).unwrap();
        let tab = flat_table(&sys, 8).unwrap();
        let psi = PsiStep::new(1.5, 0.45).unwrap();
        let times = grid(0.45, 90);
        let jets = propagate(&sys, &w0(), 0.05, &times, 8).unwrap();
        let g = null_input(&jets, &psi, &tab, 8).unwrap();
        assert_eq!(g.delayed(0.0), 0.0);
        assert_eq!(g.delayed(0.0499), 0.0);
        for (t, v) in g.g.times.iter().zip(&g.g.values) {
            assert_eq!(g.g.eval(*t), *v);
        }
        assert_eq!(g.delayed(0.05), g.g.values[0]);
    }

    #[test]
    fn surrogate_differences() {
        let p = example_problem();
        let times = grid(0.2, 10)
            .into_iter()
            .map(|t| t + 0.05)
            .collect::<Vec<_>>();
        let zero = surrogate_convergence_check(
            &p,
            &PiecewiseSmoothFn::constant(0.0),
            &times,
            3,
            &[20, 40],
        )
        .unwrap();
        assert!(zero.rows.iter().all(|r| r.2 == 0.0));
        let check = surrogate_convergence_check(&p, &w0(), &times, 3, &[125, 250, 500]).unwrap();
        for k in 0..=3 {
            let d = check.differences(k);
            assert_eq!(d.len(), 2);
            assert!(d[1] < d[0], "k={k}: {d:?}");
        }
    }

    #[test]
    fn growth_constant_is_stable_under_doubling() {
        let times = grid(0.45, 45);
        let c: Vec<f64> = [250, 500]
            .iter()
            .map(|&n| {
                let sys = build_semidiscrete(&example_problem(), n).unwrap();
                propagate(&sys, &w0(), 0.05, &times, 20)
                    .unwrap()
                    .growth_constant()
            })
            .collect();
        assert!(c[0].is_finite() && c[0] > 0.0);
        assert!((c[1] / c[0] - 1.0).abs() < 0.2, "{c:?}");
    }
}
