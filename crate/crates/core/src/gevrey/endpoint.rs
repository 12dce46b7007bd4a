use crate::discretize::{build_semidiscrete, restrict, SemiDiscreteSystem};
use crate::problem::{ParabolicProblem, PiecewiseSmoothFn, StateSpec};

use super::GevreyError;

/// Endpoint derivative data `y_{m,tau}` for `m = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointSeries {
    pub values: Vec<f64>,
    /// Set when the discrete surrogate changed by more than 10% under grid
    /// doubling (the profile is probably not regular enough).
    pub surrogate_divergent: bool,
}

impl EndpointSeries {
    pub fn zeros(m: usize) -> Self {
        Self {
            values: vec![0.0; m + 1],
            surrogate_divergent: false,
        }
    }
}

/// Flat-output derivatives of the state `state` at an endpoint.
pub fn endpoint_series(
    problem: &ParabolicProblem,
    state: &StateSpec,
    sys: &SemiDiscreteSystem,
    m: usize,
) -> Result<EndpointSeries, GevreyError> {
    match state {
        StateSpec::Zero => Ok(EndpointSeries::zeros(m)),
        StateSpec::SteadyState { f_ss } => {
            let mut out = EndpointSeries::zeros(m);
            out.values[0] = steady_flat_value(sys, *f_ss)?;
            Ok(out)
        }
        StateSpec::Profile(u) => {
            let coarse = surrogate(sys, u, m);
            let fine_sys = build_semidiscrete(problem, 2 * sys.n + 1)?;
            let fine = surrogate(&fine_sys, u, m);
            let surrogate_divergent = coarse.iter().zip(&fine).any(|(a, b)| {
                let scale = a.abs().max(b.abs());
                !a.is_finite() || !b.is_finite() || (scale > 0.0 && (a - b).abs() > 0.1 * scale)
            });
            Ok(EndpointSeries {
                values: coarse,
                surrogate_divergent,
            })
        }
    }
}

/// `y` for the steady state of input `f_ss`: `(alpha0 - beta0 q0) u(0)` with
/// the continuum `q0 = -beta0/alpha0` when `alpha0 != 0`, else the working-`n`
/// factor applied to `v_1`.
fn steady_flat_value(sys: &SemiDiscreteSystem, f_ss: f64) -> Result<f64, GevreyError> {
    let v = sys.steady_state(f_ss)?;
    let bc = sys.bc;
    if bc.alpha0 != 0.0 {
        let factor = (bc.alpha0 * bc.alpha0 + bc.beta0 * bc.beta0) / bc.alpha0;
        Ok(factor * sys.left_boundary_value(&v.values))
    } else {
        Ok((bc.alpha0 - sys.q0 * bc.beta0) * v.values[0])
    }
}

/// `(alpha0 - beta0 q0) [A^k R u]_1` for `k = 0..=m`; non-finite entries are
/// left as produced so the caller can flag them.
fn surrogate(sys: &SemiDiscreteSystem, u: &PiecewiseSmoothFn, m: usize) -> Vec<f64> {
    let factor = sys.bc.alpha0 - sys.q0 * sys.bc.beta0;
    let mut v = restrict(u, sys.n).values;
    let mut out = Vec::with_capacity(m + 1);
    for k in 0..=m {
        if k > 0 {
            v = sys.a.matvec(&v);
        }
        out.push(factor * v[0]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{BoundaryConditions, PiecewiseSmoothFn};

    #[test]
    fn zero_and_steady_series() {
        let p = ParabolicProblem::heat(BoundaryConditions {
            alpha0: 1.0,
            beta0: 0.0,
            alpha1: 0.0,
            beta1: 1.0,
        });
        let sys = build_semidiscrete(&p, 50).unwrap();
        assert_eq!(
            endpoint_series(&p, &StateSpec::Zero, &sys, 5)
                .unwrap()
                .values,
            vec![0.0; 6]
        );
        // Insulated left end: the steady heat profile is constant f_ss.
        let s = endpoint_series(&p, &StateSpec::SteadyState { f_ss: 0.5 }, &sys, 5).unwrap();
        assert!((s.values[0] - 0.5).abs() < 1e-12);
        assert!(s.values[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dirichlet_left_steady_value() {
        // u'' = 0, u(0) = 0, u(1) = 2: y0 = -beta0 * u_x(0) = -2.
        let p = ParabolicProblem::heat(BoundaryConditions::dirichlet());
        let values: Vec<f64> = [40, 81]
            .iter()
            .map(|&n| {
                let sys = build_semidiscrete(&p, n).unwrap();
                let y = endpoint_series(&p, &StateSpec::SteadyState { f_ss: 2.0 }, &sys, 0)
                    .unwrap()
                    .values[0];
                let v = sys.steady_state(2.0).unwrap();
                let one_sided = -v.values[0] / sys.h;
                assert!((y - one_sided).abs() <= 1e-12 * y.abs());
                y
            })
            .collect();
        assert!(((values[0] - values[1]) / values[1]).abs() < 0.01);
        assert!((values[1] + 2.0).abs() < 1e-10);
    }

    #[test]
    fn rough_profile_is_flagged() {
        let p = ParabolicProblem::heat(BoundaryConditions {
            alpha0: 1.0,
            beta0: 0.0,
            alpha1: 0.0,
            beta1: 1.0,
        });
        let sys = build_semidiscrete(&p, 40).unwrap();
        let rough = PiecewiseSmoothFn::from_exprs(&[(0.0, 0.1, "1"), (0.1, 1.0, "0")]).unwrap();
        let s = endpoint_series(&p, &StateSpec::Profile(rough), &sys, 4).unwrap();
        assert!(s.surrogate_divergent);
        // cos(pi x / 2) meets both boundary conditions; low orders are stable under refinement.
        let smooth = PiecewiseSmoothFn::from_exprs(&[(0.0, 1.0, "cos(pi*x/2)")]).unwrap();
        let s = endpoint_series(&p, &StateSpec::Profile(smooth), &sys, 1).unwrap();
        assert!(!s.surrogate_divergent, "{:?}", s.values);
    }
}
