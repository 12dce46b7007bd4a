//! Gevrey building blocks: the bump `psi0`, the step `psi`, endpoint series
//! and the reference trajectory joining two endpoint series.

mod endpoint;
mod jet;
pub mod quad;
mod reference;

pub use endpoint::{endpoint_series, EndpointSeries};
pub use jet::{binomial_row, factorial, ln_factorial, TaylorJet};
pub use reference::{GevreyFit, ReferenceTrajectory};

use crate::discretize::DiscretizeError;

#[derive(Debug, thiserror::Error)]
pub enum GevreyError {
    #[error("reciprocal of a jet with zero value at t = {t}")]
    ZeroReciprocal { t: f64 },
    #[error("real power of a jet with non-positive value {value} at t = {t}")]
    NonPositiveBase { t: f64, value: f64 },
    #[error("quadrature did not converge on [{a}, {b}]: error {error:e} > target {target:e}")]
    Quadrature {
        a: f64,
        b: f64,
        error: f64,
        target: f64,
    },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("{endpoint} endpoint series did not converge within {terms} terms")]
    SeriesNonConvergence {
        endpoint: &'static str,
        terms: usize,
    },
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
}

/// Underflow threshold of `exp(-w)` in 64-bit.
const EXP_UNDERFLOW: f64 = 745.0;

/// Default relative tolerance of the normalization integral.
pub const PSI_QUAD_TOL: f64 = 1e-14;

fn check_alpha_gamma(alpha: f64, gamma: f64) -> Result<(), GevreyError> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(GevreyError::InvalidParameters(format!(
            "alpha = {alpha} must lie in (1, 2)"
        )));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(GevreyError::InvalidParameters(format!(
            "gamma = {gamma} must be positive"
        )));
    }
    Ok(())
}

/// Jet of `psi0(t) = exp(-[(1 - t/G)(t/G)]^{-1/(alpha-1)})` on `(0, G)`, zero
/// elsewhere. Returns the exact zero jet where `psi0` underflows.
pub fn psi0_jet(alpha: f64, gamma: f64, t: f64, order: usize) -> TaylorJet {
    scaled_psi0_jet(alpha, gamma, t, order, 0.0)
}

/// `exp(-[(1 - t/G)(t/G)]^{-p})` with `p = 1/(alpha - 1)`.
pub fn psi0(alpha: f64, gamma: f64, t: f64) -> f64 {
    scaled_psi0(alpha, gamma, t, 0.0)
}

/// `ln psi0(G/2) = -4^{1/(alpha-1)}`.
pub fn ln_psi0_peak(alpha: f64) -> f64 {
    -(4.0f64).powf(1.0 / (alpha - 1.0))
}

/// `u = 1 - 2t/G`, so that `z = (1 - t/G)(t/G) = (1 - u^2)/4`.
fn bump_u(gamma: f64, t: f64) -> f64 {
    (gamma - 2.0 * t) / gamma
}

/// `w - 4^p` for `w = z^{-p}`, accurate near the peak.
fn bump_excess(p: f64, u: f64) -> f64 {
    (4.0f64).powf(p) * (-p * (-u * u).ln_1p()).exp_m1()
}

/// `psi0 * exp(ln_scale)`.
fn scaled_psi0(alpha: f64, gamma: f64, t: f64, ln_scale: f64) -> f64 {
    if !(t > 0.0 && t < gamma) {
        return 0.0;
    }
    let p = 1.0 / (alpha - 1.0);
    (ln_scale + ln_psi0_peak(alpha) - bump_excess(p, bump_u(gamma, t))).exp()
}

fn scaled_psi0_jet(alpha: f64, gamma: f64, t: f64, order: usize, ln_scale: f64) -> TaylorJet {
    if !(t > 0.0 && t < gamma) {
        return TaylorJet::zero(t, order);
    }
    let p = 1.0 / (alpha - 1.0);
    let u = bump_u(gamma, t);
    // ln of psi0 * exp(ln_scale) at t.
    let ln_value = ln_scale + ln_psi0_peak(alpha) - bump_excess(p, u);
    if !(ln_value >= -EXP_UNDERFLOW) {
        return TaylorJet::zero(t, order);
    }
    let z0 = 0.25 * (1.0 - u * u);
    let mut z = vec![0.0; order + 1];
    z[0] = z0;
    if order >= 1 {
        z[1] = u / gamma;
    }
    if order >= 2 {
        z[2] = -1.0 / (gamma * gamma);
    }
    let w = jet::pow_series(&z, -p);
    let neg_w: Vec<f64> = w.iter().map(|v| -v).collect();
    // exp(w(t) - w), rescaled in log space.
    let e = jet::exp_series(&neg_w, 1.0);
    let coeffs = e
        .iter()
        .enumerate()
        .map(|(k, ek)| {
            if *ek == 0.0 {
                0.0
            } else {
                ek.signum() * (ek.abs().ln() + ln_factorial(k) + ln_value).exp()
            }
        })
        .collect();
    TaylorJet::new(t, coeffs)
}

/// `psi(t) = 1 - int_0^t psi0 / int_0^G psi0`: one before `0`, zero after `G`.
///
/// The bump is carried scaled by `1 / psi0(G/2)`, which leaves `psi` unchanged
/// and keeps small `alpha` inside the 64-bit range.
#[derive(Debug, Clone)]
pub struct PsiStep {
    pub alpha: f64,
    pub gamma: f64,
    /// `int_0^G psi0 / psi0(G/2)`.
    pub integral: f64,
    ln_scale: f64,
    rel_tol: f64,
}

impl PsiStep {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self, GevreyError> {
        Self::with_tolerance(alpha, gamma, PSI_QUAD_TOL)
    }

    pub fn with_tolerance(alpha: f64, gamma: f64, rel_tol: f64) -> Result<Self, GevreyError> {
        check_alpha_gamma(alpha, gamma)?;
        let ln_scale = -ln_psi0_peak(alpha);
        let half = quad::integrate(
            |s| scaled_psi0(alpha, gamma, s, ln_scale),
            0.5 * gamma,
            gamma,
            0.0,
            rel_tol,
        )?;
        if !(half > 0.0 && half.is_finite()) {
            return Err(GevreyError::InvalidParameters(format!(
                "normalization integral is not representable for alpha = {alpha}, gamma = {gamma}"
            )));
        }
        Ok(Self {
            alpha,
            gamma,
            integral: 2.0 * half,
            ln_scale,
            rel_tol,
        })
    }

    /// `int_0^G psi0` without scaling; may underflow for small `alpha`.
    pub fn unscaled_integral(&self) -> f64 {
        self.integral * (-self.ln_scale).exp()
    }

    /// `int_t^G psi0` (scaled) for `t` in `[G/2, G]`, to within
    /// `rel_tol * integral` absolutely.
    fn tail(&self, t: f64) -> Result<f64, GevreyError> {
        let (alpha, gamma, ln_scale) = (self.alpha, self.gamma, self.ln_scale);
        quad::integrate(
            |s| scaled_psi0(alpha, gamma, s, ln_scale),
            t,
            gamma,
            self.rel_tol * self.integral,
            self.rel_tol,
        )
    }

    pub fn value(&self, t: f64) -> Result<f64, GevreyError> {
        let g = self.gamma;
        if t <= 0.0 {
            Ok(1.0)
        } else if t >= g {
            Ok(0.0)
        } else if t >= 0.5 * g {
            Ok(self.tail(t)? / self.integral)
        } else {
            // int_0^t psi0 = int_{G-t}^G psi0 by symmetry.
            Ok(1.0 - self.tail(g - t)? / self.integral)
        }
    }

    /// `psi^{(m)} = -psi0^{(m-1)} / int psi0` for `m >= 1`.
    pub fn jet(&self, t: f64, order: usize) -> Result<TaylorJet, GevreyError> {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = self.value(t)?;
        if order >= 1 {
            let b = scaled_psi0_jet(self.alpha, self.gamma, t, order - 1, self.ln_scale);
            for (m, c) in b.coeffs.iter().enumerate() {
                coeffs[m + 1] = -c / self.integral;
            }
        }
        Ok(TaylorJet::new(t, coeffs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi0_midpoint_and_support() {
        let j = psi0_jet(1.5, 0.5, 0.25, 6);
        assert!((j.value() - (-16.0f64).exp()).abs() < 1e-20);
        assert!(j.coeffs[1].abs() < 1e-20);
        for t in [0.0, 0.5, -0.1, 0.7] {
            assert!(psi0_jet(1.5, 0.5, t, 8).coeffs.iter().all(|c| *c == 0.0));
        }
    }

    #[test]
    fn psi0_symmetry() {
        // Dyadic samples keep G - t exact.
        let g = 0.5;
        for k in 1..=20 {
            let t = k as f64 / 64.0;
            let (a, b) = (psi0(1.5, g, t), psi0(1.5, g, g - t));
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn psi0_jet_vs_finite_differences() {
        let (alpha, g) = (1.5, 0.5);
        let h = 1e-5;
        for t in [0.1, 0.2, 0.31, 0.4] {
            let j = psi0_jet(alpha, g, t, 3);
            let f = |s: f64| psi0(alpha, g, s);
            let d1 = (f(t + h) - f(t - h)) / (2.0 * h);
            let d2 = (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
            assert!(((j.coeffs[1] - d1) / j.coeffs[1]).abs() < 1e-5, "t={t}");
            assert!(((j.coeffs[2] - d2) / j.coeffs[2]).abs() < 1e-5, "t={t}");
            let jj = psi0_jet(alpha, g, t + h, 2);
            let jm = psi0_jet(alpha, g, t - h, 2);
            let d3 = (jj.coeffs[2] - jm.coeffs[2]) / (2.0 * h);
            assert!(((j.coeffs[3] - d3) / j.coeffs[3]).abs() < 1e-5, "t={t}");
        }
    }

    #[test]
    fn psi_step_properties() {
        for alpha in [1.2, 1.5, 1.8] {
            let psi = PsiStep::new(alpha, 0.5).unwrap();
            assert_eq!(psi.value(0.25).unwrap(), 0.5);
            let start = psi.jet(0.0, 10).unwrap();
            assert_eq!(start.coeffs[0], 1.0);
            assert!(start.coeffs[1..].iter().all(|c| *c == 0.0));
            let end = psi.jet(0.5, 10).unwrap();
            assert!(end.coeffs.iter().all(|c| *c == 0.0));
            let vals: Vec<f64> = (0..=100)
                .map(|k| psi.value(0.5 * k as f64 / 100.0).unwrap())
                .collect();
            assert!(vals.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn quadrature_tolerance_invariance() {
        let a = PsiStep::with_tolerance(1.5, 0.5, 1e-12).unwrap();
        let b = PsiStep::with_tolerance(1.5, 0.5, 1e-14).unwrap();
        assert!(((a.integral - b.integral) / b.integral).abs() < 1e-11);
    }

    #[test]
    fn psi_derivative_vs_finite_differences() {
        let psi = PsiStep::new(1.5, 0.5).unwrap();
        let h = 1e-5;
        for t in [0.12, 0.2, 0.3, 0.35] {
            let j = psi.jet(t, 2).unwrap();
            let d1 = (psi.value(t + h).unwrap() - psi.value(t - h).unwrap()) / (2.0 * h);
            assert!(
                ((j.coeffs[1] - d1) / j.coeffs[1]).abs() < 1e-5,
                "t={t}: {} vs {d1}",
                j.coeffs[1]
            );
        }
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(PsiStep::new(2.0, 0.5).is_err());
        assert!(PsiStep::new(1.5, 0.0).is_err());
    }
}
