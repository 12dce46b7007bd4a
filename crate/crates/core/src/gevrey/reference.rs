use rayon::prelude::*;

use super::jet::{binomial_row, ln_factorial};
use super::{check_alpha_gamma, GevreyError, PsiStep, TaylorJet};

const SERIES_REL_TOL: f64 = 1e-16;
const SERIES_MAX_TERMS: usize = 60;

/// `y(t) = g_0(t) psi(t) + g_T(t - T) psi(T - t)` with
/// `g_tau(s) = sum_m y_{m,tau} s^m / m!`.
///
/// The right-endpoint series is expanded in `t - T`, so
/// `y^{(m)}(T) = y_{m,T}`.
#[derive(Debug, Clone)]
pub struct ReferenceTrajectory {
    pub horizon: f64,
    pub alpha: f64,
    /// `G` actually used, after any automatic shrink.
    pub gamma: f64,
    pub gamma_requested: f64,
    pub y0_series: Vec<f64>,
    pub yt_series: Vec<f64>,
    /// Fitted `c_tau` with `|y_{m,tau}| <= c_tau^{m+2} (m+2)!`.
    pub c0: f64,
    pub ct: f64,
    psi: PsiStep,
}

/// Sup-norm Gevrey certificate `sup_t |y^{(m)}| <= D^{m+1} (m!)^alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct GevreyFit {
    pub d: f64,
    /// `sup_t |y^{(m)}(t)|` over the sample grid.
    pub sup: Vec<f64>,
}

impl GevreyFit {
    pub fn fit(sup: Vec<f64>, alpha: f64) -> Self {
        let d = sup
            .iter()
            .enumerate()
            .filter(|(_, s)| **s > 0.0)
            .map(|(m, s)| ((s.ln() - alpha * ln_factorial(m)) / (m + 1) as f64).exp())
            .fold(0.0, f64::max);
        Self { d, sup }
    }
}

fn fit_c(series: &[f64]) -> f64 {
    series
        .iter()
        .enumerate()
        .filter(|(_, y)| **y != 0.0)
        .map(|(m, y)| ((y.abs().ln() - ln_factorial(m + 2)) / (m + 2) as f64).exp())
        .fold(0.0, f64::max)
}

/// Keep terms up to the last one with `|y_m| G^m / m! >= tol * partial sum`.
fn truncate_series(
    series: &[f64],
    gamma: f64,
    endpoint: &'static str,
) -> Result<Vec<f64>, GevreyError> {
    let mut partial = 0.0f64;
    let mut keep = None;
    for (m, y) in series.iter().enumerate() {
        if *y == 0.0 {
            continue;
        }
        let term = y.abs() * (m as f64 * gamma.ln() - ln_factorial(m)).exp();
        partial += term;
        if term >= SERIES_REL_TOL * partial {
            keep = Some(m);
        }
    }
    match keep {
        None => Ok(vec![0.0]),
        Some(m) if m >= SERIES_MAX_TERMS => Err(GevreyError::SeriesNonConvergence {
            endpoint,
            terms: SERIES_MAX_TERMS,
        }),
        Some(m) => Ok(series[..=m].to_vec()),
    }
}

/// Jet of `s -> sum_m c_m (s - s0)^m / m!` at `t`.
fn series_jet(c: &[f64], t: f64, shift: f64, order: usize) -> TaylorJet {
    let x = t - shift;
    let coeffs = (0..=order)
        .map(|j| {
            let mut acc = 0.0;
            let mut pow = 1.0;
            for (i, cm) in c.iter().skip(j).enumerate() {
                if i > 0 {
                    pow *= x / i as f64;
                }
                acc += cm * pow;
            }
            acc
        })
        .collect();
    TaylorJet::new(t, coeffs)
}

fn leibniz(f: &[f64], g: &[f64], order: usize) -> Vec<f64> {
    (0..=order)
        .map(|k| {
            let b = binomial_row(k);
            (0..=k).map(|j| b[j] * f[j] * g[k - j]).sum()
        })
        .collect()
}

impl ReferenceTrajectory {
    pub fn new(
        y0_series: &[f64],
        yt_series: &[f64],
        horizon: f64,
        alpha: f64,
        gamma: f64,
    ) -> Result<Self, GevreyError> {
        check_alpha_gamma(alpha, gamma)?;
        if !(horizon > 0.0) || gamma > horizon {
            return Err(GevreyError::InvalidParameters(format!(
                "need 0 < gamma <= T, got gamma = {gamma}, T = {horizon}"
            )));
        }
        let c0 = fit_c(y0_series);
        let ct = fit_c(yt_series);
        let c = c0.max(ct);
        let gamma_requested = gamma;
        let gamma = if c * gamma >= 1.0 { 0.9 / c } else { gamma };
        let y0 = truncate_series(y0_series, gamma, "left")?;
        let yt = truncate_series(yt_series, gamma, "right")?;
        Ok(Self {
            horizon,
            alpha,
            gamma,
            gamma_requested,
            y0_series: y0,
            yt_series: yt,
            c0,
            ct,
            psi: PsiStep::new(alpha, gamma)?,
        })
    }

    pub fn gamma_shrunk(&self) -> bool {
        self.gamma != self.gamma_requested
    }

    pub fn psi(&self) -> &PsiStep {
        &self.psi
    }

    /// Derivatives `y(t), ..., y^{(order)}(t)`.
    pub fn jet(&self, t: f64, order: usize) -> Result<TaylorJet, GevreyError> {
        let big_t = self.horizon;
        let mut out = vec![0.0; order + 1];
        let left = self.psi.jet(t, order)?;
        if self.y0_series.iter().any(|y| *y != 0.0) && left.coeffs.iter().any(|c| *c != 0.0) {
            let g = series_jet(&self.y0_series, t, 0.0, order);
            for (o, v) in out.iter_mut().zip(leibniz(&g.coeffs, &left.coeffs, order)) {
                *o += v;
            }
        }
        let right = self.psi.jet(big_t - t, order)?.reflect();
        if self.yt_series.iter().any(|y| *y != 0.0) && right.coeffs.iter().any(|c| *c != 0.0) {
            let g = series_jet(&self.yt_series, t, big_t, order);
            for (o, v) in out.iter_mut().zip(leibniz(&g.coeffs, &right.coeffs, order)) {
                *o += v;
            }
        }
        Ok(TaylorJet::new(t, out))
    }

    pub fn jets(&self, times: &[f64], order: usize) -> Result<Vec<TaylorJet>, GevreyError> {
        times.par_iter().map(|&t| self.jet(t, order)).collect()
    }

    /// Gevrey fit over `samples + 1` equispaced times in `[0, T]`.
    pub fn gevrey_fit(&self, max_order: usize, samples: usize) -> Result<GevreyFit, GevreyError> {
        let times: Vec<f64> = (0..=samples)
            .map(|k| self.horizon * k as f64 / samples as f64)
            .collect();
        let jets = self.jets(&times, max_order)?;
        let sup = (0..=max_order)
            .map(|m| jets.iter().map(|j| j.coeffs[m].abs()).fold(0.0, f64::max))
            .collect();
        Ok(GevreyFit::fit(sup, self.alpha))
    }
}
