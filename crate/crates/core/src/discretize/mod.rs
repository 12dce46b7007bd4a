//! Finite-difference semi-discretization `v' = A_n v + B_n f`.

mod spectral;
mod tridiag;

use std::io::Write;

pub use spectral::{
    growth_certificate, symmetrize, GrowthCertificate, SpectralDecomposition, Symmetrized,
};
pub use tridiag::{SolveError, Tridiagonal, TridiagonalLu};

use crate::problem::{BoundaryConditions, ParabolicProblem, PiecewiseSmoothFn};

#[derive(Debug, thiserror::Error)]
pub enum DiscretizeError {
    #[error("grid size n = {0} is too small, need n >= 3")]
    TooFewNodes(usize),
    #[error("degenerate boundary denominator {which} = {value:e} at n = {n}; try a larger n")]
    DegenerateDenominator {
        which: &'static str,
        value: f64,
        n: usize,
    },
    #[error("vector length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(
        "system matrix is not symmetrizable: off-diagonal product at row {row} is {product:e}"
    )]
    NotSymmetrizable { row: usize, product: f64 },
    #[error("singular system: {0}")]
    Singular(#[from] SolveError),
    #[error("eigen-decomposition did not produce finite values")]
    Eigen,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// `x_j = j / (n + 1)`, correctly rounded.
#[inline]
pub fn grid_x(n: usize, j: usize) -> f64 {
    j as f64 / (n + 1) as f64
}

/// Nodal values `v_1..v_n` (stored zero-based).
#[derive(Debug, Clone, PartialEq)]
pub struct GridVector {
    pub values: Vec<f64>,
}

impl GridVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n() + 1) as f64
    }

    /// `sqrt(h * sum v_j^2)`: the L2 norm of the step-function extension.
    pub fn norm_2d(&self) -> f64 {
        (self.h() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Step-function extension (`v_j` on `((j-1)h, jh]`, zero on `(nh, 1]`).
    pub fn extend(&self) -> StepFunction {
        StepFunction {
            values: self.values.clone(),
        }
    }
}

/// `R_n f = (f(x_1), ..., f(x_n))`.
pub fn restrict(f: &PiecewiseSmoothFn, n: usize) -> GridVector {
    restrict_with(|x| f.eval(x), n)
}

pub fn restrict_with(f: impl Fn(f64) -> f64, n: usize) -> GridVector {
    GridVector::new((1..=n).map(|j| f(grid_x(n, j))).collect())
}

/// Piecewise-constant function on `[0, 1]` built from grid values.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    values: Vec<f64>,
}

impl StepFunction {
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        if x <= 0.0 {
            return self.values[0];
        }
        let j = (x * (n + 1) as f64).ceil() as usize;
        if j == 0 {
            self.values[0]
        } else if j > n {
            0.0
        } else {
            // Guard the rounding of x * (n+1) at cell edges.
            let j = if x <= grid_x(n, j - 1) { j - 1 } else { j };
            if j == 0 {
                self.values[0]
            } else {
                self.values[j - 1]
            }
        }
    }

    /// Exact L2 norm over `[0, 1]`.
    pub fn l2_norm(&self) -> f64 {
        let h = 1.0 / (self.values.len() + 1) as f64;
        (h * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }
}

/// Tridiagonal system `A_n` with input column `B_n = e_n * b_n / h^2`.
#[derive(Debug, Clone)]
pub struct SemiDiscreteSystem {
    pub n: usize,
    pub h: f64,
    pub a: Tridiagonal,
    pub r0: f64,
    pub r1: f64,
    pub q0: f64,
    pub b_n: f64,
    pub bc: BoundaryConditions,
    /// `theta(x_j)`, `sigma(x_j)`, `lambda(x_j)` for `j = 1..n`.
    pub theta: Vec<f64>,
    pub sigma: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl SemiDiscreteSystem {
    /// Last entry of `B_n`.
    pub fn input_gain(&self) -> f64 {
        self.b_n / (self.h * self.h)
    }

    pub fn b_vector(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.n];
        b[self.n - 1] = self.input_gain();
        b
    }

    /// `A v + B f`.
    pub fn rhs(&self, v: &[f64], f: f64) -> Vec<f64> {
        let mut y = self.a.matvec(v);
        y[self.n - 1] += self.input_gain() * f;
        y
    }

    /// Second-difference part `L_n`.
    pub fn laplacian(&self) -> Tridiagonal {
        let (n, h2) = (self.n, self.h * self.h);
        let mut main = vec![-2.0 / h2; n];
        let mut sub = vec![1.0 / h2; n - 1];
        let mut sup = vec![1.0 / h2; n - 1];
        main[0] = (-2.0 + 4.0 * self.r0) / h2;
        sup[0] = (1.0 - self.r0) / h2;
        sub[n - 2] = (1.0 - self.r1) / h2;
        main[n - 1] = (-2.0 + 4.0 * self.r1) / h2;
        Tridiagonal::new(sub, main, sup)
    }

    /// First-difference part `D_n`.
    pub fn first_difference(&self) -> Tridiagonal {
        let n = self.n;
        let mut main = vec![1.0 / self.h; n];
        main[0] = self.q0;
        Tridiagonal::new(vec![-1.0 / self.h; n - 1], main, vec![0.0; n - 1])
    }

    /// Steady state for constant input: `A v = -B f_ss`.
    pub fn steady_state(&self, f_ss: f64) -> Result<GridVector, DiscretizeError> {
        let lu = TridiagonalLu::factor(&self.a)?;
        let mut b = vec![0.0; self.n];
        b[self.n - 1] = -self.input_gain() * f_ss;
        lu.solve_in_place(&mut b)?;
        Ok(GridVector::new(b))
    }

    /// Value at `x = 0` implied by the left boundary closure.
    pub fn left_boundary_value(&self, v: &[f64]) -> f64 {
        if self.bc.alpha0 != 0.0 {
            self.r0 * (4.0 * v[0] - v[1])
        } else {
            0.0
        }
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<(), DiscretizeError> {
        writeln!(w, "row,x,sub,main,sup,B")?;
        let gain = self.input_gain();
        for i in 0..self.n {
            let sub = if i > 0 { self.a.sub[i - 1] } else { 0.0 };
            let sup = if i + 1 < self.n { self.a.sup[i] } else { 0.0 };
            let b = if i + 1 == self.n { gain } else { 0.0 };
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                i + 1,
                grid_x(self.n, i + 1),
                sub,
                self.a.main[i],
                sup,
                b
            )?;
        }
        Ok(())
    }
}

pub fn build_semidiscrete(
    problem: &ParabolicProblem,
    n: usize,
) -> Result<SemiDiscreteSystem, DiscretizeError> {
    if n < 3 {
        return Err(DiscretizeError::TooFewNodes(n));
    }
    let h = 1.0 / (n + 1) as f64;
    let BoundaryConditions {
        alpha0,
        beta0,
        alpha1,
        beta1,
    } = problem.bc;
    let den_r0 = 3.0 * alpha0 - 2.0 * h * beta0;
    let den_r1 = 3.0 * alpha1 + 2.0 * h * beta1;
    let den_q0 = alpha0 - h * beta0;
    for (which, value) in [
        ("3*alpha0 - 2*h*beta0", den_r0),
        ("3*alpha1 + 2*h*beta1", den_r1),
        ("alpha0 - h*beta0", den_q0),
    ] {
        if value.abs() < 1e-12 {
            return Err(DiscretizeError::DegenerateDenominator { which, value, n });
        }
    }
    let r0 = alpha0 / den_r0;
    let r1 = alpha1 / den_r1;
    let q0 = -beta0 / den_q0;

    let xs: Vec<f64> = (1..=n).map(|j| grid_x(n, j)).collect();
    let theta: Vec<f64> = xs.iter().map(|&x| problem.theta.eval(x)).collect();
    let sigma: Vec<f64> = xs.iter().map(|&x| problem.sigma.eval(x)).collect();
    let lambda: Vec<f64> = xs.iter().map(|&x| problem.lambda.eval(x)).collect();
    let b_n = 2.0 * h * theta[n - 1] / den_r1;

    let mut sys = SemiDiscreteSystem {
        n,
        h,
        a: Tridiagonal::new(vec![0.0; n - 1], vec![0.0; n], vec![0.0; n - 1]),
        r0,
        r1,
        q0,
        b_n,
        bc: problem.bc,
        theta,
        sigma,
        lambda,
    };
    let l = sys.laplacian();
    let d = sys.first_difference();
    let mut main = vec![0.0; n];
    let mut sub = vec![0.0; n - 1];
    let mut sup = vec![0.0; n - 1];
    for i in 0..n {
        main[i] = (sys.theta[i] * l.main[i] + sys.sigma[i] * d.main[i]) + sys.lambda[i];
        if i + 1 < n {
            sup[i] = sys.theta[i] * l.sup[i] + sys.sigma[i] * d.sup[i];
            sub[i] = sys.theta[i + 1] * l.sub[i] + sys.sigma[i + 1] * d.sub[i];
        }
    }
    sys.a = Tridiagonal::new(sub, main, sup);
    Ok(sys)
}

/// `R_n(A xi) - A_n R_n xi - B_n f_xi` for smooth `xi` satisfying the boundary
/// conditions with right-end value `f_xi`.
pub fn consistency_residual(
    problem: &ParabolicProblem,
    sys: &SemiDiscreteSystem,
    xi: &PiecewiseSmoothFn,
    f_xi: f64,
) -> GridVector {
    let n = sys.n;
    let rxi = restrict(xi, n);
    let axi = sys.rhs(&rxi.values, f_xi);
    let values = (0..n)
        .map(|i| {
            let x = grid_x(n, i + 1);
            let d = xi.eval_d2(x);
            let op = problem.theta.eval(x) * d.d2
                + problem.sigma.eval(x) * d.d1
                + problem.lambda.eval(x) * d.v;
            op - axi[i]
        })
        .collect();
    GridVector::new(values)
}
