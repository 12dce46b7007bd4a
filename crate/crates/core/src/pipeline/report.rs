use std::fmt;

use crate::simulate::VerifyReport;

use super::{Design, PlanOptions};

/// Summary of a plan and its verification run.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    pub kind: &'static str,
    pub n: usize,
    pub truncation: usize,
    pub table_order: usize,
    pub n_sim: usize,
    pub dt: f64,
    pub tolerance: f64,
    /// `R` with `|a_{n,k}| <= R^{k+1} / (2k-2)!`.
    pub coefficient_r: f64,
    pub growth_m: f64,
    pub growth_omega: f64,
    /// Gevrey constant `D` of the transfer flat output.
    pub gevrey_transfer: Option<f64>,
    /// Gevrey constant `D` of the null-control flat output.
    pub gevrey_null: Option<f64>,
    /// Fitted `c` with `|phi^{(m)}| <= c^{m+1} m!`.
    pub state_growth: Option<f64>,
    pub gamma_shrunk: bool,
    pub surrogate_divergent: bool,
    pub terminal_error: Option<f64>,
    pub terminal_error_half_dt: Option<f64>,
    pub richardson_ok: bool,
    pub free_decay: Option<f64>,
    pub superposition_error: Option<f64>,
}

impl PlanReport {
    pub(crate) fn new(kind: &'static str, opts: &PlanOptions, design: &Design) -> Self {
        Self {
            kind,
            n: opts.n,
            truncation: opts.truncation,
            table_order: opts.table_order,
            n_sim: opts.n_sim,
            dt: opts.dt,
            tolerance: opts.tolerance,
            coefficient_r: design.r_fit.r,
            growth_m: design.growth.m,
            growth_omega: design.growth.omega,
            gevrey_transfer: None,
            gevrey_null: None,
            state_growth: None,
            gamma_shrunk: false,
            surrogate_divergent: false,
            terminal_error: None,
            terminal_error_half_dt: None,
            richardson_ok: true,
            free_decay: None,
            superposition_error: None,
        }
    }

    pub(crate) fn set_verification(&mut self, v: Option<&VerifyReport>) {
        if let Some(v) = v {
            self.terminal_error = Some(v.terminal_error);
            self.terminal_error_half_dt = v.terminal_error_half_dt;
            self.richardson_ok = v.richardson_ok;
        }
    }

    /// All flags pass and the terminal error is within tolerance.
    pub fn verified(&self) -> bool {
        self.richardson_ok
            && !self.surrogate_divergent
            && self.terminal_error.is_some_and(|e| e <= self.tolerance)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6e}"))
}

impl fmt::Display for PlanReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "plan: {}", self.kind)?;
        writeln!(f, "design n: {}", self.n)?;
        writeln!(f, "truncation: {}", self.truncation)?;
        writeln!(f, "table order: {}", self.table_order)?;
        writeln!(f, "n_sim: {}", self.n_sim)?;
        writeln!(f, "dt: {:e}", self.dt)?;
        writeln!(f, "coefficient bound R: {:.6e}", self.coefficient_r)?;
        writeln!(f, "growth bound M: {:.6e}", self.growth_m)?;
        writeln!(f, "growth bound omega: {:.6e}", self.growth_omega)?;
        writeln!(f, "gevrey D (transfer): {}", opt(self.gevrey_transfer))?;
        writeln!(f, "gevrey D (null): {}", opt(self.gevrey_null))?;
        writeln!(f, "smoothed state constant c: {}", opt(self.state_growth))?;
        writeln!(f, "gamma shrunk: {}", self.gamma_shrunk)?;
        writeln!(f, "surrogate divergent: {}", self.surrogate_divergent)?;
        writeln!(f, "terminal error: {}", opt(self.terminal_error))?;
        writeln!(
            f,
            "terminal error (dt/2): {}",
            opt(self.terminal_error_half_dt)
        )?;
        writeln!(
            f,
            "dt richardson: {}",
            if self.richardson_ok { "pass" } else { "fail" }
        )?;
        writeln!(f, "free decay norm: {}", opt(self.free_decay))?;
        writeln!(f, "superposition error: {}", opt(self.superposition_error))?;
        writeln!(f, "tolerance: {:e}", self.tolerance)?;
        writeln!(
            f,
            "verified: {}",
            if self.verified() { "yes" } else { "no" }
        )
    }
}
