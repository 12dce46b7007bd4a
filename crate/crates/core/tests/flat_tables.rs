//! The flat parametrization checked against the ODE itself: for polynomial
//! flat outputs the truncated sums are exact, so `v' = A v + B f` must hold
//! to rounding at any time.

use parabolic_flatness::discretize::{build_semidiscrete, SemiDiscreteSystem};
use parabolic_flatness::flatness::{flat_state, flat_table, synthesize_input, FlatTable};
use parabolic_flatness::gevrey::{factorial, TaylorJet};
use parabolic_flatness::problem::{BoundaryConditions, ParabolicProblem, PiecewiseSmoothFn};

fn problems() -> Vec<ParabolicProblem> {
    let pw = |s: &[(f64, f64, &str)]| PiecewiseSmoothFn::from_exprs(s).unwrap();
    vec![
        ParabolicProblem::heat(BoundaryConditions {
            alpha0: 1.0,
            beta0: 0.0,
            alpha1: 0.0,
            beta1: 1.0,
        }),
        ParabolicProblem::new(
            pw(&[(0.0, 0.5, "1 + x"), (0.5, 1.0, "2")]),
            pw(&[(0.0, 0.3, "sin(5*pi*x)"), (0.3, 1.0, "2 - 2*x")]),
            pw(&[(0.0, 0.4, "exp(-5*x)"), (0.4, 1.0, "2*x^4")]),
            BoundaryConditions {
                alpha0: 1.0,
                beta0: 0.0,
                alpha1: 0.0,
                beta1: 1.0,
            },
        )
        .unwrap(),
        ParabolicProblem::new(
            pw(&[(0.0, 1.0, "0.5 + x^2")]),
            pw(&[(0.0, 1.0, "-1")]),
            pw(&[(0.0, 0.7, "3"), (0.7, 1.0, "-2")]),
            BoundaryConditions {
                alpha0: 1.0,
                beta0: 0.7,
                alpha1: 1.0,
                beta1: 0.3,
            },
        )
        .unwrap(),
        ParabolicProblem::heat(BoundaryConditions {
            alpha0: 0.0,
            beta0: 1.0,
            alpha1: 1.0,
            beta1: 0.0,
        }),
    ]
}

/// Jet of `sum_m c_m t^m / m!`.
fn poly_jet(c: &[f64], t: f64, order: usize) -> TaylorJet {
    let coeffs = (0..=order)
        .map(|k| {
            (k..c.len())
                .map(|m| c[m] * t.powi((m - k) as i32) / factorial(m - k))
                .sum()
        })
        .collect();
    TaylorJet::new(t, coeffs)
}

fn residual(sys: &SemiDiscreteSystem, tab: &FlatTable, c: &[f64], t: f64) -> f64 {
    let k = tab.k_max;
    let jet = poly_jet(c, t, k + 1);
    let v = flat_state(tab, &jet.truncate(k)).unwrap();
    let shifted = TaylorJet::new(t, jet.coeffs[1..].to_vec());
    let v_dot = flat_state(tab, &shifted).unwrap();
    let f = synthesize_input(tab, std::slice::from_ref(&jet), k)
        .unwrap()
        .values[0];
    let rhs = sys.rhs(&v.values, f);
    let av = sys
        .a
        .matvec(&v.values.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let scale =
        av.iter().map(|x| x.abs()).fold(0.0, f64::max) + (sys.input_gain() * f).abs() + 1e-300;
    rhs.iter()
        .zip(&v_dot.values)
        .map(|(r, d)| (r - d).abs())
        .fold(0.0, f64::max)
        / scale
}

#[test]
fn monomials_satisfy_the_state_equation() {
    let n = 12;
    for p in problems() {
        let sys = build_semidiscrete(&p, n).unwrap();
        let tab = flat_table(&sys, n).unwrap();
        for degree in 0..=n {
            let mut c = vec![0.0; degree + 1];
            c[degree] = 1.0;
            for t in [0.0, 0.37, 1.3] {
                let r = residual(&sys, &tab, &c, t);
                assert!(
                    r < 1e-10,
                    "degree {degree}, t = {t}: relative residual {r:e}"
                );
            }
        }
    }
}

#[test]
fn flat_output_reproduced_by_first_node() {
    let n = 12;
    for p in problems() {
        let sys = build_semidiscrete(&p, n).unwrap();
        let tab = flat_table(&sys, n).unwrap();
        let factor = p.bc.alpha0 - sys.q0 * p.bc.beta0;
        let c = [0.3, -1.0, 2.0, 0.5, -0.25];
        for t in [0.0, 0.2, 0.9] {
            let jet = poly_jet(&c, t, n);
            let v = flat_state(&tab, &jet).unwrap();
            let y = jet.coeffs[0];
            assert!(
                (factor * v.values[0] - y).abs() <= 1e-12 * y.abs().max(1.0),
                "t = {t}"
            );
        }
    }
}

#[test]
fn large_tables_stay_triangular() {
    let p = &problems()[1];
    let sys = build_semidiscrete(p, 200).unwrap();
    let tab = flat_table(&sys, 25).unwrap();
    for j in 1..=200 {
        for k in j..=25 {
            assert_eq!(tab.d(j, k), 0.0, "d_({j},{k})");
        }
    }
    assert!(tab.a.iter().all(|a| a.is_finite()));
}
