//! Tridiagonal storage and direct solves.

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("singular tridiagonal system: pivot {pivot:e} at row {row} (scale {scale:e})")]
    Singular { row: usize, pivot: f64, scale: f64 },
    #[error("dimension mismatch: matrix is {expected}x{expected}, rhs has {got}")]
    Dimension { expected: usize, got: usize },
}

/// `sub[i] = A[i+1][i]`, `main[i] = A[i][i]`, `sup[i] = A[i][i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub main: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(sub: Vec<f64>, main: Vec<f64>, sup: Vec<f64>) -> Self {
        let n = main.len();
        assert!(n >= 1, "empty tridiagonal matrix");
        assert_eq!(sub.len(), n - 1, "sub-diagonal length");
        assert_eq!(sup.len(), n - 1, "super-diagonal length");
        Self { sub, main, sup }
    }

    pub fn n(&self) -> usize {
        self.main.len()
    }

    /// Entry `(i, j)`, zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.main[i]
        } else if j == i + 1 {
            self.sup[i]
        } else if i == j + 1 {
            self.sub[j]
        } else {
            0.0
        }
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(y.len(), n);
        if n == 1 {
            y[0] = self.main[0] * x[0];
            return;
        }
        y[0] = self.main[0] * x[0] + self.sup[0] * x[1];
        for i in 1..n - 1 {
            y[i] = self.sub[i - 1] * x[i - 1] + self.main[i] * x[i] + self.sup[i] * x[i + 1];
        }
        y[n - 1] = self.sub[n - 2] * x[n - 2] + self.main[n - 1] * x[n - 1];
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        self.matvec_into(x, &mut y);
        y
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n())
            .map(|i| {
                let mut s = self.main[i].abs();
                if i > 0 {
                    s += self.sub[i - 1].abs();
                }
                if i + 1 < self.n() {
                    s += self.sup[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// `diag_shift * I + scale * self`.
    pub fn affine(&self, diag_shift: f64, scale: f64) -> Self {
        Self {
            sub: self.sub.iter().map(|v| scale * v).collect(),
            main: self.main.iter().map(|v| diag_shift + scale * v).collect(),
            sup: self.sup.iter().map(|v| scale * v).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            sub: self.sup.clone(),
            main: self.main.clone(),
            sup: self.sub.clone(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Factored tridiagonal matrix, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    kind: LuKind,
}

#[derive(Debug, Clone)]
enum LuKind {
    /// Thomas elimination without pivoting.
    Thomas {
        lower: Vec<f64>,
        diag: Vec<f64>,
        sup: Vec<f64>,
    },
    /// Gaussian elimination with partial pivoting (LAPACK `gttrf` layout).
    Pivoted {
        dl: Vec<f64>,
        d: Vec<f64>,
        du: Vec<f64>,
        du2: Vec<f64>,
        ipiv: Vec<usize>,
    },
}

const PIVOT_TOL: f64 = 1e-14;

impl TridiagonalLu {
    pub fn factor(a: &Tridiagonal) -> Result<Self, SolveError> {
        let scale = a.norm_inf().max(f64::MIN_POSITIVE);
        Self::thomas(a, scale).or_else(|_| Self::pivoted(a, scale))
    }

    fn thomas(a: &Tridiagonal, scale: f64) -> Result<Self, SolveError> {
        let n = a.n();
        let mut lower = vec![0.0; n.saturating_sub(1)];
        let mut diag = vec![0.0; n];
        diag[0] = a.main[0];
        for i in 1..n {
            if diag[i - 1].abs() <= PIVOT_TOL * scale {
                return Err(SolveError::Singular {
                    row: i - 1,
                    pivot: diag[i - 1],
                    scale,
                });
            }
            let l = a.sub[i - 1] / diag[i - 1];
            lower[i - 1] = l;
            diag[i] = a.main[i] - l * a.sup[i - 1];
        }
        if diag[n - 1].abs() <= PIVOT_TOL * scale {
            return Err(SolveError::Singular {
                row: n - 1,
                pivot: diag[n - 1],
                scale,
            });
        }
        Ok(Self {
            kind: LuKind::Thomas {
                lower,
                diag,
                sup: a.sup.clone(),
            },
        })
    }

    fn pivoted(a: &Tridiagonal, scale: f64) -> Result<Self, SolveError> {
        let n = a.n();
        let mut dl = a.sub.clone();
        let mut d = a.main.clone();
        let mut du = a.sup.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut ipiv: Vec<usize> = (0..n).collect();
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                ipiv[i] = i + 1;
            }
        }
        if let Some(row) = d.iter().position(|p| p.abs() <= PIVOT_TOL * scale) {
            return Err(SolveError::Singular {
                row,
                pivot: d[row],
                scale,
            });
        }
        Ok(Self {
            kind: LuKind::Pivoted {
                dl,
                d,
                du,
                du2,
                ipiv,
            },
        })
    }

    pub fn n(&self) -> usize {
        match &self.kind {
            LuKind::Thomas { diag, .. } => diag.len(),
            LuKind::Pivoted { d, .. } => d.len(),
        }
    }

    pub fn is_pivoted(&self) -> bool {
        matches!(self.kind, LuKind::Pivoted { .. })
    }

    /// Overwrites `b` with the solution.
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<(), SolveError> {
        let n = self.n();
        if b.len() != n {
            return Err(SolveError::Dimension {
                expected: n,
                got: b.len(),
            });
        }
        match &self.kind {
            LuKind::Thomas { lower, diag, sup } => {
                for i in 1..n {
                    b[i] -= lower[i - 1] * b[i - 1];
                }
                b[n - 1] /= diag[n - 1];
                for i in (0..n - 1).rev() {
                    b[i] = (b[i] - sup[i] * b[i + 1]) / diag[i];
                }
            }
            LuKind::Pivoted {
                dl,
                d,
                du,
                du2,
                ipiv,
            } => {
                for i in 0..n - 1 {
                    let ip = ipiv[i];
                    let other = if ip == i { i + 1 } else { i };
                    let temp = b[other] - dl[i] * b[ip];
                    b[i] = b[ip];
                    b[i + 1] = temp;
                }
                b[n - 1] /= d[n - 1];
                if n > 1 {
                    b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
                }
                for i in (0..n.saturating_sub(2)).rev() {
                    b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn residual_inf(a: &Tridiagonal, x: &[f64], b: &[f64]) -> f64 {
        a.matvec(x)
            .iter()
            .zip(b)
            .map(|(ax, bi)| (ax - bi).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn pivoting_fallback_on_zero_leading_pivot() {
        // Thomas breaks down on main[0] = 0; pivoted elimination does not.
        let a = Tridiagonal::new(
            vec![1.0, 1.0, 1.0],
            vec![0.0, 1.0, 2.0, 1.0],
            vec![1.0, 3.0, 1.0],
        );
        let lu = TridiagonalLu::factor(&a).unwrap();
        assert!(lu.is_pivoted());
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let x = lu.solve(&b).unwrap();
        assert!(residual_inf(&a, &x, &b) < 1e-13);
    }

    #[test]
    fn singular_matrix_reported() {
        let a = Tridiagonal::new(vec![1.0], vec![1.0, 1.0], vec![1.0]);
        assert!(matches!(
            TridiagonalLu::factor(&a),
            Err(SolveError::Singular { .. })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let a = Tridiagonal::new(vec![0.0], vec![1.0, 1.0], vec![0.0]);
        let lu = TridiagonalLu::factor(&a).unwrap();
        assert!(matches!(
            lu.solve(&[1.0]),
            Err(SolveError::Dimension { .. })
        ));
    }

    proptest! {
        #[test]
        fn solves_random_systems(
            n in 2usize..40,
            seed in proptest::collection::vec(-1.0f64..1.0, 120),
        ) {
            let sub: Vec<f64> = (0..n - 1).map(|i| seed[i]).collect();
            let sup: Vec<f64> = (0..n - 1).map(|i| seed[40 + i]).collect();
            let main: Vec<f64> = (0..n).map(|i| seed[80 + i % 40] * 0.5).collect();
            let a = Tridiagonal::new(sub, main, sup);
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            if let Ok(lu) = TridiagonalLu::factor(&a) {
                let x = lu.solve(&b).unwrap();
                let scale = a.norm_inf() * x.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1.0;
                prop_assert!(residual_inf(&a, &x, &b) <= 1e-9 * scale);
            }
        }
    }
}
