//! Time integration of `v' = A_n v + B_n f` and the verification runs built
//! on it.

mod input;
mod verify;

use std::io::Write;

pub use input::{Delayed, FnInput, InputSignal, Sum};
pub use verify::{
    convergence_study, realize_state, verify, verify_transfer, ConvergenceRow, ConvergenceStudy,
    VerifyOptions, VerifyReport,
};

use crate::discretize::{
    grid_x, DiscretizeError, GridVector, SemiDiscreteSystem, SolveError, TridiagonalLu,
};

#[derive(Debug, thiserror::Error)]
pub enum SimulateError {
    #[error("invalid time step: {0}")]
    InvalidStep(String),
    #[error("initial state has {got} entries, system has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("state became non-finite at t = {0}")]
    NonFinite(f64),
    #[error("time-stepping solve failed: {0}")]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// States at increasing times, all on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GridVector>,
}

impl Trajectory {
    pub fn terminal(&self) -> &GridVector {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }

    pub fn n(&self) -> usize {
        self.states[0].n()
    }

    /// One row per `(t, x, value)`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<(), SimulateError> {
        writeln!(w, "t,x,value")?;
        let n = self.n();
        for (t, v) in self.times.iter().zip(&self.states) {
            for (j, value) in v.values.iter().enumerate() {
                writeln!(w, "{:.16e},{:.16e},{:.16e}", t, grid_x(n, j + 1), value)?;
            }
        }
        Ok(())
    }
}

/// Start-up treatment of the Crank-Nicolson scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Startup {
    /// Plain Crank-Nicolson from the first step.
    None,
    /// The first two steps are replaced by four backward-Euler half steps,
    /// which damps the stiff modes of rough initial data.
    Rannacher,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Requested step; the actual step divides the interval evenly.
    pub dt: f64,
    /// Keep every `snapshot_every`-th state (0 keeps only the ends).
    pub snapshot_every: usize,
    pub startup: Startup,
}

impl IntegratorOptions {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            snapshot_every: 0,
            startup: Startup::None,
        }
    }

    pub fn with_snapshots(mut self, every: usize) -> Self {
        self.snapshot_every = every;
        self
    }

    pub fn with_startup(mut self, startup: Startup) -> Self {
        self.startup = startup;
        self
    }
}

/// Number of steps used for `[t0, t1]` with requested step `dt`.
pub fn step_count(t0: f64, t1: f64, dt: f64) -> Result<usize, SimulateError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimulateError::InvalidStep(format!("dt = {dt}")));
    }
    if !(t1 > t0) {
        return Err(SimulateError::InvalidStep(format!(
            "empty interval [{t0}, {t1}]"
        )));
    }
    Ok((((t1 - t0) / dt) - 1e-9).ceil().max(1.0) as usize)
}

/// Crank-Nicolson integration from `v0` at `t0` to `t1`. The input enters
/// through its one-sided limits at the ends of each step.
pub fn integrate(
    sys: &SemiDiscreteSystem,
    v0: &GridVector,
    input: &dyn InputSignal,
    t0: f64,
    t1: f64,
    opts: IntegratorOptions,
) -> Result<Trajectory, SimulateError> {
    let n = sys.n;
    if v0.n() != n {
        return Err(SimulateError::LengthMismatch {
            expected: n,
            got: v0.n(),
        });
    }
    let steps = step_count(t0, t1, opts.dt)?;
    let time = |k: usize| t0 + (t1 - t0) * k as f64 / steps as f64;
    let half_time = |k2: usize| t0 + (t1 - t0) * k2 as f64 / (2 * steps) as f64;
    let dt = (t1 - t0) / steps as f64;
    let gain = sys.input_gain();
    let implicit = TridiagonalLu::factor(&sys.a.affine(1.0, -0.5 * dt))?;
    let explicit = sys.a.affine(1.0, 0.5 * dt);

    let mut v = v0.values.clone();
    let mut work = vec![0.0; n];
    let mut times = vec![t0];
    let mut states = vec![v0.clone()];
    let startup_steps = match opts.startup {
        Startup::None => 0,
        Startup::Rannacher => steps.min(2),
    };
    for k in 0..steps {
        if k < startup_steps {
            // Two backward-Euler half steps share the matrix I - (dt/2) A.
            for sub in 1..=2 {
                v[n - 1] += 0.5 * dt * gain * input.left_limit(half_time(2 * k + sub));
                implicit.solve_in_place(&mut v)?;
            }
        } else {
            explicit.matvec_into(&v, &mut work);
            work[n - 1] += 0.5 * dt * gain * (input.value(time(k)) + input.left_limit(time(k + 1)));
            implicit.solve_in_place(&mut work)?;
            std::mem::swap(&mut v, &mut work);
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(SimulateError::NonFinite(time(k + 1)));
        }
        let last = k + 1 == steps;
        if last || (opts.snapshot_every > 0 && (k + 1) % opts.snapshot_every == 0) {
            times.push(time(k + 1));
            states.push(GridVector::new(v.clone()));
        }
    }
    Ok(Trajectory { times, states })
}
