use rayon::prelude::*;

use crate::discretize::{build_semidiscrete, DiscretizeError};
use crate::gevrey::ln_factorial;
use crate::problem::ParabolicProblem;

use super::{flat_table, FlatnessError};

/// `ln (2k-2)!` with the convention `(2k-2)! = 1` for `k <= 1`.
fn ln_bound_factorial(k: usize) -> f64 {
    if k <= 1 {
        0.0
    } else {
        ln_factorial(2 * k - 2)
    }
}

/// Fitted `R` with `|a_{n,k}| <= R^{k+1} / (2k-2)!`.
#[derive(Debug, Clone, PartialEq)]
pub struct RFit {
    pub r: f64,
    /// The fit restricted to each input table.
    pub per_table: Vec<f64>,
}

impl RFit {
    /// `ln R^{k+1} / (2k-2)!`.
    pub fn ln_bound(&self, k: usize) -> f64 {
        (k + 1) as f64 * self.r.ln() - ln_bound_factorial(k)
    }

    /// Entries with `|a_k|` above the bound by more than rounding.
    pub fn violations(&self, a: &[f64]) -> Vec<usize> {
        a.iter()
            .enumerate()
            .filter(|(k, v)| **v != 0.0 && v.abs().ln() > self.ln_bound(*k) + 1e-12)
            .map(|(k, _)| k)
            .collect()
    }
}

fn fit_one(a: &[f64]) -> f64 {
    a.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(k, v)| ((v.abs().ln() + ln_bound_factorial(k)) / (k + 1) as f64).exp())
        .fold(0.0, f64::max)
}

/// Smallest `R` bounding every table.
pub fn coefficient_bound_fit(tables: &[&[f64]]) -> RFit {
    let per_table: Vec<f64> = tables.iter().map(|a| fit_one(a)).collect();
    RFit {
        r: per_table.iter().copied().fold(0.0, f64::max),
        per_table,
    }
}

/// `sum_{k=i+1}^{k_end} R^{k+1} L^{k+1} (k!)^alpha / (2k-2)!`.
pub fn tail_bound(r: f64, l: f64, alpha: f64, i: usize, k_end: usize) -> f64 {
    ((i + 1)..=k_end)
        .map(|k| {
            ((k + 1) as f64 * (r * l).ln() + alpha * ln_factorial(k) - ln_bound_factorial(k)).exp()
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct CauchyRow {
    pub n: usize,
    pub k: usize,
    /// `|a_{2n,k} - a_{n,k}|`.
    pub diff: f64,
}

#[derive(Debug, Clone)]
pub struct CoefficientStudy {
    pub n_list: Vec<usize>,
    /// `a[i][k] = a_{n_list[i], k}`.
    pub a: Vec<Vec<f64>>,
    /// Differences for every `n` whose double is also in `n_list`.
    pub cauchy: Vec<CauchyRow>,
    pub fit: RFit,
    /// `(n, k)` entries that underflowed to exactly zero.
    pub underflow: Vec<(usize, usize)>,
}

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
    #[error(transparent)]
    Flatness(#[from] FlatnessError),
}

pub fn coefficient_limit_study(
    p: &ParabolicProblem,
    k_max: usize,
    n_list: &[usize],
) -> Result<CoefficientStudy, StudyError> {
    let a: Vec<Vec<f64>> = n_list
        .par_iter()
        .map(|&n| -> Result<Vec<f64>, StudyError> {
            let sys = build_semidiscrete(p, n)?;
            Ok(flat_table(&sys, k_max)?.a)
        })
        .collect::<Result<_, _>>()?;
    let mut cauchy = Vec::new();
    for (i, &n) in n_list.iter().enumerate() {
        if let Some(i2) = n_list.iter().position(|&m| m == 2 * n) {
            for k in 0..=k_max {
                cauchy.push(CauchyRow {
                    n,
                    k,
                    diff: (a[i2][k] - a[i][k]).abs(),
                });
            }
        }
    }
    let underflow = n_list
        .iter()
        .zip(&a)
        .flat_map(|(&n, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, v)| **v == 0.0)
                .map(move |(k, _)| (n, k))
        })
        .collect();
    let refs: Vec<&[f64]> = a.iter().map(|r| r.as_slice()).collect();
    let fit = coefficient_bound_fit(&refs);
    Ok(CoefficientStudy {
        n_list: n_list.to_vec(),
        a,
        cauchy,
        fit,
        underflow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::BoundaryConditions;

    #[test]
    fn heat_leading_coefficient_is_cauchy() {
        let p = ParabolicProblem::heat(BoundaryConditions {
            alpha0: 1.0,
            beta0: 0.0,
            alpha1: 0.0,
            beta1: 1.0,
        });
        let study = coefficient_limit_study(&p, 3, &[64, 128, 256, 512]).unwrap();
        let k0: Vec<f64> = study
            .cauchy
            .iter()
            .filter(|r| r.k == 0)
            .map(|r| r.diff)
            .collect();
        assert_eq!(k0.len(), 3);
        assert!(k0.windows(2).all(|w| w[1] <= w[0]), "{k0:?}");
        for row in &study.a {
            assert!(study.fit.violations(row).is_empty());
        }
    }

    #[test]
    fn bound_convention_and_tail() {
        assert_eq!(ln_bound_factorial(0), 0.0);
        assert_eq!(ln_bound_factorial(1), 0.0);
        assert!((ln_bound_factorial(3) - 24f64.ln()).abs() < 1e-12);
        let fit = coefficient_bound_fit(&[&[2.0, 0.5, 0.0]]);
        assert!((fit.r - 2.0).abs() < 1e-12);
        assert!(fit.violations(&[2.0, 4.0]).is_empty());
        assert_eq!(fit.violations(&[2.0, 4.1]), vec![1]);
        assert!(tail_bound(1.0, 1.0, 1.5, 5, 10) > 0.0);
        assert_eq!(tail_bound(1.0, 1.0, 1.5, 10, 10), 0.0);
    }
}
