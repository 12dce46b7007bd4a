//! Truncated Taylor arithmetic in the derivative convention.

use super::GevreyError;

/// `coeffs[k] = y^{(k)}(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorJet {
    pub t: f64,
    pub coeffs: Vec<f64>,
}

/// `ln k!` for small integer `k`.
pub fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

pub fn factorial(k: usize) -> f64 {
    (2..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// Row `k` of Pascal's triangle as f64.
pub fn binomial_row(k: usize) -> Vec<f64> {
    let mut row = vec![1.0; k + 1];
    for j in 1..k {
        row[j] = row[j - 1] * (k + 1 - j) as f64 / j as f64;
        row[j] = row[j].round();
    }
    row
}

impl TaylorJet {
    pub fn new(t: f64, coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "jet needs at least the value entry");
        Self { t, coeffs }
    }

    pub fn zero(t: f64, order: usize) -> Self {
        Self {
            t,
            coeffs: vec![0.0; order + 1],
        }
    }

    pub fn constant(t: f64, c: f64, order: usize) -> Self {
        let mut j = Self::zero(t, order);
        j.coeffs[0] = c;
        j
    }

    /// Jet of the identity map `s -> s` at `t`.
    pub fn variable(t: f64, order: usize) -> Self {
        let mut j = Self::constant(t, t, order);
        if order >= 1 {
            j.coeffs[1] = 1.0;
        }
        j
    }

    /// From normalized Taylor coefficients `c_k = y^{(k)} / k!`.
    pub fn from_taylor(t: f64, c: &[f64]) -> Self {
        let mut f = 1.0;
        let coeffs = c
            .iter()
            .enumerate()
            .map(|(k, ck)| {
                if k > 0 {
                    f *= k as f64;
                }
                ck * f
            })
            .collect();
        Self { t, coeffs }
    }

    pub fn to_taylor(&self) -> Vec<f64> {
        let mut f = 1.0;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, v)| {
                if k > 0 {
                    f *= k as f64;
                }
                v / f
            })
            .collect()
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self {
            t: self.t,
            coeffs: self.coeffs[..=order.min(self.order())].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    fn common_order(&self, other: &Self) -> usize {
        self.order().min(other.order())
    }

    pub fn add(&self, other: &Self) -> Self {
        let m = self.common_order(other);
        Self {
            t: self.t,
            coeffs: (0..=m).map(|k| self.coeffs[k] + other.coeffs[k]).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let m = self.common_order(other);
        Self {
            t: self.t,
            coeffs: (0..=m).map(|k| self.coeffs[k] - other.coeffs[k]).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            t: self.t,
            coeffs: self.coeffs.iter().map(|v| c * v).collect(),
        }
    }

    /// Leibniz product.
    pub fn mul(&self, other: &Self) -> Self {
        let m = self.common_order(other);
        let coeffs = (0..=m)
            .map(|k| {
                let b = binomial_row(k);
                (0..=k)
                    .map(|j| b[j] * self.coeffs[j] * other.coeffs[k - j])
                    .sum()
            })
            .collect();
        Self { t: self.t, coeffs }
    }

    pub fn recip(&self) -> Result<Self, GevreyError> {
        let a = self.to_taylor();
        if a[0] == 0.0 {
            return Err(GevreyError::ZeroReciprocal { t: self.t });
        }
        let mut r = vec![0.0; a.len()];
        r[0] = 1.0 / a[0];
        for k in 1..a.len() {
            let s: f64 = (1..=k).map(|j| a[j] * r[k - j]).sum();
            r[k] = -s / a[0];
        }
        Ok(Self::from_taylor(self.t, &r))
    }

    pub fn exp(&self) -> Self {
        let w = self.to_taylor();
        Self::from_taylor(self.t, &exp_series(&w, w[0].exp()))
    }

    /// `self^p` for a jet with positive value.
    pub fn powf(&self, p: f64) -> Result<Self, GevreyError> {
        let z = self.to_taylor();
        if !(z[0] > 0.0) {
            return Err(GevreyError::NonPositiveBase {
                t: self.t,
                value: z[0],
            });
        }
        Ok(Self::from_taylor(self.t, &pow_series(&z, p)))
    }

    /// Jet of `s -> y(-s)` at `-t`.
    pub fn reflect(&self) -> Self {
        Self {
            t: -self.t,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, v)| if k % 2 == 0 { *v } else { -v })
                .collect(),
        }
    }
}

/// Taylor coefficients of `exp(w)` given `exp(w_0) = e0`.
pub(crate) fn exp_series(w: &[f64], e0: f64) -> Vec<f64> {
    let mut e = vec![0.0; w.len()];
    e[0] = e0;
    for k in 1..w.len() {
        let s: f64 = (1..=k).map(|j| j as f64 * w[j] * e[k - j]).sum();
        e[k] = s / k as f64;
    }
    e
}

/// Taylor coefficients of `z^p`, `z_0 > 0`.
pub(crate) fn pow_series(z: &[f64], p: f64) -> Vec<f64> {
    let mut u = vec![0.0; z.len()];
    u[0] = z[0].powf(p);
    for k in 1..z.len() {
        let s: f64 = (1..=k)
            .map(|j| ((p + 1.0) * j as f64 - k as f64) * z[j] * u[k - j])
            .sum();
        u[k] = s / (k as f64 * z[0]);
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_identity() {
        let t = 0.7;
        let j = TaylorJet::variable(t, 3).exp();
        for c in &j.coeffs {
            assert!((c - t.exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn product_of_identity() {
        let x = TaylorJet::variable(1.0, 2);
        assert_eq!(x.mul(&x).coeffs, vec![1.0, 2.0, 2.0]);
    }

    #[test]
    fn reciprocal_and_zero() {
        let x = TaylorJet::variable(2.0, 3);
        let r = x.recip().unwrap();
        // 1/s: -1/s^2, 2/s^3, -6/s^4
        let expect = [0.5, -0.25, 0.25, -0.375];
        for (a, b) in r.coeffs.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(TaylorJet::variable(0.0, 2).recip().is_err());
    }

    #[test]
    fn power_matches_finite_differences() {
        // (s(1-s))^{-2} at s = 1/2 and s = 0.3.
        let f = |s: f64| (s * (1.0 - s)).powi(-2);
        let h = 1e-4;
        for t in [0.5, 0.3] {
            let s = TaylorJet::variable(t, 4);
            let one = TaylorJet::constant(t, 1.0, 4);
            let jet = s.mul(&one.sub(&s)).powf(-2.0).unwrap();
            let fd = [
                f(t),
                (f(t + h) - f(t - h)) / (2.0 * h),
                (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h),
            ];
            for k in 0..3 {
                let scale = jet.coeffs[k].abs().max(1.0);
                assert!((jet.coeffs[k] - fd[k]).abs() < 1e-6 * scale, "t={t} k={k}");
            }
        }
        // At the midpoint 16 (1 - 4u^2)^{-2} = 16 + 128 u^2 + 768 u^4 + ...
        let s = TaylorJet::variable(0.5, 4);
        let one = TaylorJet::constant(0.5, 1.0, 4);
        let jet = s.mul(&one.sub(&s)).powf(-2.0).unwrap();
        assert_eq!(jet.coeffs[3], 0.0);
        assert!((jet.coeffs[4] - 768.0 * 24.0).abs() < 1e-9);
    }

    #[test]
    fn taylor_round_trip_and_binomials() {
        let j = TaylorJet::new(0.0, vec![1.0, 2.0, 6.0, 24.0]);
        assert_eq!(j.to_taylor(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(TaylorJet::from_taylor(0.0, &j.to_taylor()), j);
        assert_eq!(binomial_row(5), vec![1.0, 5.0, 10.0, 10.0, 5.0, 1.0]);
        assert!((ln_factorial(10) - factorial(10).ln()).abs() < 1e-12);
    }
}
