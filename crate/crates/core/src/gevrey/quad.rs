//! Adaptive composite Gauss-Legendre quadrature.

use std::sync::OnceLock;

use super::GevreyError;

/// Nodes and weights of the `m`-point rule on `[-1, 1]`, by Newton iteration
/// on the Legendre polynomial.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * pm - pm1) / (x * x - 1.0);
            let dx = pm / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

fn gl15() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(15))
}

fn panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (x, w) = gl15();
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    r * x
        .iter()
        .zip(w)
        .map(|(xi, wi)| wi * f(c + r * xi))
        .sum::<f64>()
}

/// Integral of `f` over `[a, b]`, refined until each panel agrees with its
/// bisection to within its share of `max(abs_tol, rel_tol * |I|)`.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, GevreyError> {
    const MAX_DEPTH: u32 = 40;
    const MAX_PANELS: usize = 200_000;
    if a == b {
        return Ok(0.0);
    }
    // Coarse estimate fixes the absolute target.
    let coarse: f64 = (0..16)
        .map(|k| {
            panel(
                &f,
                a + (b - a) * k as f64 / 16.0,
                a + (b - a) * (k + 1) as f64 / 16.0,
            )
        })
        .sum();
    let target = abs_tol.max(rel_tol * coarse.abs());
    let width = b - a;
    let mut total = 0.0;
    let mut stack = vec![(a, b, panel(&f, a, b), 0u32)];
    let mut panels = 0usize;
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let (left, right) = (panel(&f, lo, mid), panel(&f, mid, hi));
        let err = (left + right - whole).abs();
        panels += 1;
        // Stop once the discrepancy is at the rounding level of the panel.
        let size = left.abs() + right.abs();
        let noise = (64.0 * f64::EPSILON * size).max(f64::MIN_POSITIVE);
        // Panels this narrow only resolve evaluation noise of a steep integrand.
        let noise_limited = hi - lo <= 1e-9 * width && err <= 1e-6 * size;
        if err <= target * (hi - lo) / width || err <= noise || noise_limited {
            total += left + right;
        } else if depth >= MAX_DEPTH || panels >= MAX_PANELS {
            return Err(GevreyError::Quadrature {
                a: lo,
                b: hi,
                error: err,
                target,
            });
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(15);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for deg in [2, 10, 28] {
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg)).sum();
            assert!((q - 2.0 / (deg + 1) as f64).abs() < 1e-14, "deg {deg}");
        }
        let (x3, w3) = gauss_legendre(3);
        assert!((x3[2] - (0.6f64).sqrt()).abs() < 1e-15);
        assert!((w3[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_peaks() {
        let v = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 0.0, 1e-13).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!(((v - exact) / exact).abs() < 1e-12);
    }
}
