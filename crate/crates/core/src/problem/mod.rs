//! Problem definition: coefficients, boundary parameters and planning tasks.

mod config;
pub mod expr;
mod piecewise;

pub use config::{load_problem, parse_problem, to_config_json};
pub use expr::{Dual2, Expr, ParseError};
pub use piecewise::{Piece, PieceFn, PiecewiseSmoothFn};

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error ({invariant}): {detail}")]
    Validation {
        invariant: &'static str,
        detail: String,
    },
    #[error("cannot serialize: {0}")]
    Serialize(String),
}

impl ProblemError {
    pub(crate) fn validation(invariant: &'static str, detail: String) -> Self {
        ProblemError::Validation { invariant, detail }
    }
}

/// `alpha0 u_x(0) + beta0 u(0) = 0`, `alpha1 u_x(1) + beta1 u(1) = f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConditions {
    pub alpha0: f64,
    pub beta0: f64,
    pub alpha1: f64,
    pub beta1: f64,
}

impl BoundaryConditions {
    pub const fn dirichlet() -> Self {
        Self {
            alpha0: 0.0,
            beta0: 1.0,
            alpha1: 0.0,
            beta1: 1.0,
        }
    }
}

/// `u_t = theta u_xx + sigma u_x + lambda u` on the unit rod.
#[derive(Debug, Clone)]
pub struct ParabolicProblem {
    pub theta: PiecewiseSmoothFn,
    pub sigma: PiecewiseSmoothFn,
    pub lambda: PiecewiseSmoothFn,
    pub bc: BoundaryConditions,
    interface_points: Vec<f64>,
}

impl ParabolicProblem {
    pub fn new(
        theta: PiecewiseSmoothFn,
        sigma: PiecewiseSmoothFn,
        lambda: PiecewiseSmoothFn,
        bc: BoundaryConditions,
    ) -> Result<Self, ProblemError> {
        let inf_theta = theta.infimum_estimate();
        if !(inf_theta > 0.0) {
            return Err(ProblemError::validation(
                "theta positivity",
                format!("inf theta over [0,1] is {inf_theta}, must be > 0"),
            ));
        }
        if bc.alpha0 == 0.0 && bc.beta0 == 0.0 {
            return Err(ProblemError::validation(
                "left boundary pair",
                "(alpha0, beta0) must not be (0, 0)".into(),
            ));
        }
        if bc.alpha1 == 0.0 && bc.beta1 == 0.0 {
            return Err(ProblemError::validation(
                "right boundary pair",
                "(alpha1, beta1) must not be (0, 0)".into(),
            ));
        }
        for (name, f) in [("sigma", &sigma), ("lambda", &lambda)] {
            if !f.infimum_estimate().is_finite() {
                return Err(ProblemError::validation(
                    "finite coefficients",
                    format!("{name} is not finite on [0,1]"),
                ));
            }
        }
        let mut interface_points: Vec<f64> = [&theta, &sigma, &lambda]
            .iter()
            .flat_map(|f| f.interior_breakpoints().iter().copied())
            .collect();
        interface_points.sort_by(f64::total_cmp);
        interface_points.dedup();
        Ok(Self {
            theta,
            sigma,
            lambda,
            bc,
            interface_points,
        })
    }

    /// Union of coefficient breakpoints in `(0, 1)`.
    pub fn interface_points(&self) -> &[f64] {
        &self.interface_points
    }

    /// theta = 1, sigma = lambda = 0.
    pub fn heat(bc: BoundaryConditions) -> Self {
        Self::new(
            PiecewiseSmoothFn::constant(1.0),
            PiecewiseSmoothFn::constant(0.0),
            PiecewiseSmoothFn::constant(0.0),
            bc,
        )
        .expect("constant-coefficient heat problem is valid")
    }
}

/// Endpoint state of a transfer.
#[derive(Debug, Clone)]
pub enum StateSpec {
    Zero,
    /// Steady state for the constant input `f_ss`.
    SteadyState {
        f_ss: f64,
    },
    Profile(PiecewiseSmoothFn),
}

#[derive(Debug, Clone)]
pub struct TransferSpec {
    pub horizon: f64,
    pub initial: StateSpec,
    pub target: StateSpec,
    pub gevrey_alpha: f64,
    pub gevrey_gamma: f64,
}

impl TransferSpec {
    pub fn validate(&self) -> Result<(), ProblemError> {
        if !(self.horizon > 0.0) {
            return Err(ProblemError::validation(
                "T > 0",
                format!("T = {}", self.horizon),
            ));
        }
        check_alpha(self.gevrey_alpha)?;
        if !(self.gevrey_gamma > 0.0 && self.gevrey_gamma <= self.horizon) {
            return Err(ProblemError::validation(
                "0 < gamma <= T",
                format!("gamma = {}, T = {}", self.gevrey_gamma, self.horizon),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NullControlSpec {
    /// Total horizon.
    pub tau: f64,
    /// Free-evolution smoothing time.
    pub s: f64,
    pub initial: PiecewiseSmoothFn,
    pub gevrey_alpha: f64,
}

impl NullControlSpec {
    pub fn validate(&self) -> Result<(), ProblemError> {
        if !(self.tau > 0.0) {
            return Err(ProblemError::validation(
                "tau > 0",
                format!("tau = {}", self.tau),
            ));
        }
        if !(self.s > 0.0 && self.s < self.tau) {
            return Err(ProblemError::validation(
                "0 < s < tau",
                format!("s = {}, tau = {}", self.s, self.tau),
            ));
        }
        check_alpha(self.gevrey_alpha)
    }

    /// Control window length `tau - s`.
    pub fn window(&self) -> f64 {
        self.tau - self.s
    }
}

fn check_alpha(alpha: f64) -> Result<(), ProblemError> {
    if alpha > 1.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(ProblemError::validation(
            "1 < gevrey_alpha < 2",
            format!("gevrey_alpha = {alpha}"),
        ))
    }
}

#[derive(Debug, Clone)]
pub enum Task {
    Transfer(TransferSpec),
    NullControl(NullControlSpec),
    /// Transfer leg plus null leg over a shared horizon.
    Composite {
        transfer: TransferSpec,
        null_control: NullControlSpec,
    },
}

impl Task {
    pub fn validate(&self) -> Result<(), ProblemError> {
        match self {
            Task::Transfer(t) => t.validate(),
            Task::NullControl(nc) => nc.validate(),
            Task::Composite {
                transfer,
                null_control,
            } => {
                transfer.validate()?;
                null_control.validate()?;
                if transfer.horizon != null_control.tau {
                    return Err(ProblemError::validation(
                        "composite horizons aligned",
                        format!(
                            "transfer T = {} but null tau = {}",
                            transfer.horizon, null_control.tau
                        ),
                    ));
                }
                Ok(())
            }
        }
    }
}
