//! Motion planning for linear parabolic equations with piecewise-smooth
//! coefficients via a flat output of the semi-discretized system.

pub mod discretize;
pub mod flatness;
pub mod gevrey;
pub mod nullcontrol;
pub mod pipeline;
pub mod problem;
pub mod simulate;

/// Any failure of the planning pipeline, tagged by the module it came from.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("problem: {0}")]
    Problem(#[from] problem::ProblemError),
    #[error("discretize: {0}")]
    Discretize(#[from] discretize::DiscretizeError),
    #[error("flatness: {0}")]
    Flatness(#[from] flatness::FlatnessError),
    #[error("flatness: {0}")]
    Study(#[from] flatness::StudyError),
    #[error("gevrey: {0}")]
    Gevrey(#[from] gevrey::GevreyError),
    #[error("nullcontrol: {0}")]
    NullControl(#[from] nullcontrol::NullControlError),
    #[error("simulate: {0}")]
    Simulate(#[from] simulate::SimulateError),
    #[error("pipeline: transfer horizon {transfer} differs from the null-control horizon {null}")]
    HorizonMismatch { transfer: f64, null: f64 },
    #[error("pipeline: {0}")]
    Options(String),
}
