//! Diagonal symmetrization and the eigen-decomposition of `A_n`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{DiscretizeError, SemiDiscreteSystem, Tridiagonal};

/// `P = diag(p)` with `P^{-1} A P` symmetric.
#[derive(Debug, Clone)]
pub struct Symmetrized {
    pub p: Vec<f64>,
    /// `P^{-1} A P` as computed entrywise (symmetric up to rounding).
    pub similar: Tridiagonal,
    /// Exactly symmetric representative: off-diagonals `sqrt(a_{i,i+1} a_{i+1,i})`.
    pub symmetric: Tridiagonal,
}

impl Symmetrized {
    /// `max |M_{i,i+1} - M_{i+1,i}|` of the entrywise similarity transform.
    pub fn asymmetry(&self) -> f64 {
        self.similar
            .sup
            .iter()
            .zip(&self.similar.sub)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `||M - M^T||_inf / ||M||_inf` for `M = P^{-1} A P`.
    pub fn relative_asymmetry(&self) -> f64 {
        let m = &self.similar;
        let n = m.n();
        let d: Vec<f64> = m
            .sup
            .iter()
            .zip(&m.sub)
            .map(|(a, b)| (a - b).abs())
            .collect();
        let skew = (0..n)
            .map(|i| if i > 0 { d[i - 1] } else { 0.0 } + if i + 1 < n { d[i] } else { 0.0 })
            .fold(0.0, f64::max);
        let scale = m.norm_inf();
        if scale == 0.0 {
            0.0
        } else {
            skew / scale
        }
    }

    /// `||P|| ||P^{-1}||` in the spectral norm.
    pub fn condition(&self) -> f64 {
        let (lo, hi) = self.p.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        hi / lo
    }
}

/// Builds `P` with `p_1 = 1` and `p_{i+1} = p_i sqrt(a_{i+1,i} / a_{i,i+1})`.
pub fn symmetrize(sys: &SemiDiscreteSystem) -> Result<Symmetrized, DiscretizeError> {
    let a = &sys.a;
    let n = a.n();
    let mut p = vec![1.0; n];
    for i in 0..n - 1 {
        let product = a.sub[i] * a.sup[i];
        if !(product > 0.0) || a.sub[i] <= 0.0 {
            return Err(DiscretizeError::NotSymmetrizable {
                row: i + 1,
                product,
            });
        }
        p[i + 1] = p[i] * (a.sub[i] / a.sup[i]).sqrt();
    }
    let similar = Tridiagonal::new(
        (0..n - 1).map(|i| a.sub[i] * p[i] / p[i + 1]).collect(),
        a.main.clone(),
        (0..n - 1).map(|i| a.sup[i] * p[i + 1] / p[i]).collect(),
    );
    let off: Vec<f64> = (0..n - 1).map(|i| (a.sub[i] * a.sup[i]).sqrt()).collect();
    let symmetric = Tridiagonal::new(off.clone(), a.main.clone(), off);
    Ok(Symmetrized {
        p,
        similar,
        symmetric,
    })
}

/// `A = P Q diag(lambda) Q^T P^{-1}` with eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors of the symmetric representative, by column.
    pub q: DMatrix<f64>,
    pub p: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn new(sym: &Symmetrized) -> Result<Self, DiscretizeError> {
        let n = sym.p.len();
        let s = &sym.symmetric;
        let m = DMatrix::from_fn(n, n, |i, j| s.get(i, j));
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(DiscretizeError::Eigen);
        }
        let q = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self {
            eigenvalues,
            q,
            p: sym.p.clone(),
        })
    }

    pub fn of(sys: &SemiDiscreteSystem) -> Result<Self, DiscretizeError> {
        Self::new(&symmetrize(sys)?)
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// Modal coordinates `Q^T P^{-1} x`.
    pub fn modal(&self, x: &[f64]) -> Result<Vec<f64>, DiscretizeError> {
        if x.len() != self.n() {
            return Err(DiscretizeError::LengthMismatch {
                expected: self.n(),
                got: x.len(),
            });
        }
        let y = DVector::from_iterator(self.n(), x.iter().zip(&self.p).map(|(xi, pi)| xi / pi));
        Ok((self.q.transpose() * y).iter().copied().collect())
    }

    /// Nodal vector `P Q c` from modal coordinates.
    pub fn nodal(&self, c: &[f64]) -> Vec<f64> {
        let c = DVector::from_column_slice(c);
        (&self.q * c)
            .iter()
            .zip(&self.p)
            .map(|(v, pi)| v * pi)
            .collect()
    }

    /// `e^{A t} x`.
    pub fn propagate(&self, x: &[f64], t: f64) -> Result<Vec<f64>, DiscretizeError> {
        let c = self.modal(x)?;
        let c: Vec<f64> = c
            .iter()
            .zip(&self.eigenvalues)
            .map(|(ci, l)| ci * (l * t).exp())
            .collect();
        Ok(self.nodal(&c))
    }
}

/// `||e^{A_n t}||_{2,d} <= m e^{omega t}` with `m = cond(P)`, `omega = max eig`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthCertificate {
    pub m: f64,
    pub omega: f64,
}

pub fn growth_certificate(sys: &SemiDiscreteSystem) -> Result<GrowthCertificate, DiscretizeError> {
    let sym = symmetrize(sys)?;
    let n = sym.p.len();
    let s = &sym.symmetric;
    let eig = DMatrix::from_fn(n, n, |i, j| s.get(i, j)).symmetric_eigenvalues();
    let omega = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !omega.is_finite() {
        return Err(DiscretizeError::Eigen);
    }
    Ok(GrowthCertificate {
        m: sym.condition(),
        omega,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::build_semidiscrete;
    use crate::problem::{BoundaryConditions, ParabolicProblem, PiecewiseSmoothFn};

    fn problem() -> ParabolicProblem {
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
    fn similarity_is_symmetric() {
        let sys = build_semidiscrete(&problem(), 60).unwrap();
        let sym = symmetrize(&sys).unwrap();
        assert!(
            sym.relative_asymmetry() < 1e-12,
            "{}",
            sym.relative_asymmetry()
        );
        assert_eq!(sym.p[0], 1.0);
    }

    #[test]
    fn decomposition_reconstructs_action() {
        let sys = build_semidiscrete(&problem(), 40).unwrap();
        let sd = SpectralDecomposition::of(&sys).unwrap();
        let x: Vec<f64> = (0..40).map(|i| ((i * 7) as f64).cos()).collect();
        let c = sd.modal(&x).unwrap();
        let lc: Vec<f64> = c.iter().zip(&sd.eigenvalues).map(|(a, b)| a * b).collect();
        let ax = sd.nodal(&lc);
        let direct = sys.a.matvec(&x);
        let scale = direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (u, v) in ax.iter().zip(&direct) {
            assert!((u - v).abs() <= 1e-10 * scale);
        }
        let back = sd.propagate(&x, 0.0).unwrap();
        for (u, v) in back.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn heat_dirichlet_spectrum() {
        // -4/h^2 sin^2(k pi h / 2) for the standard second difference.
        let n = 30;
        let sys = build_semidiscrete(&ParabolicProblem::heat(BoundaryConditions::dirichlet()), n)
            .unwrap();
        let cert = growth_certificate(&sys).unwrap();
        let h = 1.0 / (n + 1) as f64;
        let expect = -4.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
        assert!((cert.omega - expect).abs() < 1e-9 * expect.abs());
        assert!((cert.m - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_off_diagonal_product_rejected() {
        let mut sys = build_semidiscrete(&problem(), 10).unwrap();
        sys.a.sub[3] = -1.0;
        assert!(matches!(
            symmetrize(&sys),
            Err(DiscretizeError::NotSymmetrizable { row: 4, .. })
        ));
    }
}
