//! Flat parametrization `v_j = sum_k d_{j,k} y^{(k)}`, `f = sum_k a_k y^{(k)}`
//! of the semi-discrete system with flat output `y = (alpha0 - q0 beta0) v_1`.

mod signal;
mod study;

pub use signal::SampledSignal;
pub use study::{
    coefficient_bound_fit, coefficient_limit_study, tail_bound, CauchyRow, CoefficientStudy, RFit,
    StudyError,
};

use crate::discretize::{GridVector, SemiDiscreteSystem};
use crate::gevrey::TaylorJet;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlatnessError {
    #[error("jet at t = {t} has order {got}, need at least {needed}")]
    JetTooShort { t: f64, needed: usize, got: usize },
    #[error("truncation {truncation} exceeds the table order {k_max}")]
    TruncationTooLarge { truncation: usize, k_max: usize },
    #[error("table order {k_max} exceeds n = {n}")]
    OrderTooLarge { k_max: usize, n: usize },
    #[error("flat-output factor alpha0 - q0 beta0 vanishes")]
    DegenerateFlatOutput,
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
}

/// Coefficients of the flat parametrization up to derivative order `k_max`.
#[derive(Debug, Clone)]
pub struct FlatTable {
    pub n: usize,
    pub k_max: usize,
    /// `d[j - 1][k] = d_{j,k}`.
    pub d: Vec<Vec<f64>>,
    /// `a[k] = a_{n,k}`.
    pub a: Vec<f64>,
    pub alpha0_q0_factor: f64,
    /// Largest `|d_{j,k}|` encountered.
    pub max_abs_d: f64,
}

impl FlatTable {
    /// `d_{j,k}` with one-based `j`.
    pub fn d(&self, j: usize, k: usize) -> f64 {
        self.d[j - 1][k]
    }
}

pub fn flat_table(sys: &SemiDiscreteSystem, k_max: usize) -> Result<FlatTable, FlatnessError> {
    let n = sys.n;
    if k_max > n {
        return Err(FlatnessError::OrderTooLarge { k_max, n });
    }
    let (h, h2) = (sys.h, sys.h * sys.h);
    let (alpha0, beta0) = (sys.bc.alpha0, sys.bc.beta0);
    let factor = alpha0 - sys.q0 * beta0;
    if factor == 0.0 || !factor.is_finite() {
        return Err(FlatnessError::DegenerateFlatOutput);
    }
    let (th, sg, lm) = (&sys.theta, &sys.sigma, &sys.lambda);
    let width = k_max + 1;
    let mut d = vec![vec![0.0; width]; n];
    d[0][0] = 1.0 / factor;

    let denom = (1.0 - sys.r0) * th[0];
    let c_same = 1.0 + sys.q0 * h - h2 * (sg[0] * sys.q0 + lm[0]) / denom;
    let c_dt = h2 / denom;
    for k in 0..width {
        let prev = if k > 0 { d[0][k - 1] } else { 0.0 };
        d[1][k] = c_same * d[0][k] + c_dt * prev;
    }
    for j in 2..n {
        // Row j (one-based) determines d_{j+1, .}.
        let i = j - 1;
        let (t, s, l) = (th[i], sg[i], lm[i]);
        let c_back = (-t + h * s) / t;
        let c_same = (2.0 * t - h * s - h2 * l) / t;
        let c_dt = h2 / t;
        for k in 0..width {
            let prev = if k > 0 { d[i][k - 1] } else { 0.0 };
            d[j][k] = c_back * d[i - 1][k] + c_same * d[i][k] + c_dt * prev;
        }
    }

    let last = n - 1;
    let (t, s, l) = (th[last], sg[last], lm[last]);
    let (b, r1) = (sys.b_n, sys.r1);
    let a = (0..width)
        .map(|k| {
            let prev = if k > 0 { d[last][k - 1] } else { 0.0 };
            h2 / b * prev
                - ((3.0 * r1 - 1.0) * t + h2 * l) / b * d[last][k]
                - (h * s - (1.0 - r1) * t) / b * (d[last][k] - d[last - 1][k])
        })
        .collect();
    let max_abs_d = d.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(FlatTable {
        n,
        k_max,
        d,
        a,
        alpha0_q0_factor: factor,
        max_abs_d,
    })
}

fn check_jet(jet: &TaylorJet, needed: usize) -> Result<(), FlatnessError> {
    if jet.order() < needed {
        Err(FlatnessError::JetTooShort {
            t: jet.t,
            needed,
            got: jet.order(),
        })
    } else {
        Ok(())
    }
}

/// `v_j = sum_{k <= K} d_{j,k} y^{(k)}`.
pub fn flat_state(tab: &FlatTable, jet: &TaylorJet) -> Result<GridVector, FlatnessError> {
    check_jet(jet, tab.k_max)?;
    let y = &jet.coeffs;
    Ok(GridVector::new(
        tab.d
            .iter()
            .map(|row| row.iter().zip(y).map(|(d, yk)| d * yk).sum())
            .collect(),
    ))
}

/// `f(t) = sum_{k <= i} a_k y^{(k)}(t)` at each jet time; derivative samples
/// are attached when the jets carry order `i + 1`.
pub fn synthesize_input(
    tab: &FlatTable,
    jets: &[TaylorJet],
    truncation: usize,
) -> Result<SampledSignal, FlatnessError> {
    if truncation > tab.k_max {
        return Err(FlatnessError::TruncationTooLarge {
            truncation,
            k_max: tab.k_max,
        });
    }
    for j in jets {
        check_jet(j, truncation)?;
    }
    let with_deriv = jets.iter().all(|j| j.order() > truncation);
    let a = &tab.a[..=truncation];
    let times = jets.iter().map(|j| j.t).collect();
    let values = jets
        .iter()
        .map(|j| a.iter().zip(&j.coeffs).map(|(ak, yk)| ak * yk).sum())
        .collect();
    let derivative = with_deriv.then(|| {
        jets.iter()
            .map(|j| a.iter().zip(&j.coeffs[1..]).map(|(ak, yk)| ak * yk).sum())
            .collect()
    });
    SampledSignal::new(times, values, derivative)
}

/// Per-order contributions `a_k y^{(k)}(t)`, indexed `[k][sample]`.
pub fn input_contributions(
    tab: &FlatTable,
    jets: &[TaylorJet],
    truncation: usize,
) -> Result<Vec<Vec<f64>>, FlatnessError> {
    if truncation > tab.k_max {
        return Err(FlatnessError::TruncationTooLarge {
            truncation,
            k_max: tab.k_max,
        });
    }
    for j in jets {
        check_jet(j, truncation)?;
    }
    Ok((0..=truncation)
        .map(|k| jets.iter().map(|j| tab.a[k] * j.coeffs[k]).collect())
        .collect())
}
