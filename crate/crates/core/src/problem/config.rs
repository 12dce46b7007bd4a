//! JSON problem files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    BoundaryConditions, NullControlSpec, ParabolicProblem, Piece, PiecewiseSmoothFn, ProblemError,
    StateSpec, Task, TransferSpec,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SegmentRaw {
    from: f64,
    to: f64,
    expr: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BcRaw {
    alpha0: f64,
    beta0: f64,
    alpha1: f64,
    beta1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum StateRaw {
    Zero,
    SteadyState { f_ss: f64 },
    ExplicitProfile { profile: Vec<SegmentRaw> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TransferRaw {
    #[serde(rename = "T")]
    horizon: f64,
    u0: StateRaw,
    #[serde(rename = "uT")]
    u_target: StateRaw,
    gevrey_alpha: f64,
    gevrey_gamma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NullRaw {
    tau: f64,
    s: f64,
    u0_tilde: Vec<SegmentRaw>,
    gevrey_alpha: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TaskRaw {
    Transfer(TransferRaw),
    NullControl(NullRaw),
    Composite {
        transfer: TransferRaw,
        null_control: NullRaw,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConfigRaw {
    theta: Vec<SegmentRaw>,
    sigma: Vec<SegmentRaw>,
    lambda: Vec<SegmentRaw>,
    bc: BcRaw,
    task: TaskRaw,
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<(ParabolicProblem, Task), ProblemError> {
    let text = std::fs::read_to_string(path)?;
    parse_problem(&text)
}

pub fn parse_problem(text: &str) -> Result<(ParabolicProblem, Task), ProblemError> {
    let raw: ConfigRaw =
        serde_json::from_str(text).map_err(|e| ProblemError::Parse(e.to_string()))?;
    let problem = ParabolicProblem::new(
        segments_to_fn("theta", &raw.theta)?,
        segments_to_fn("sigma", &raw.sigma)?,
        segments_to_fn("lambda", &raw.lambda)?,
        BoundaryConditions {
            alpha0: raw.bc.alpha0,
            beta0: raw.bc.beta0,
            alpha1: raw.bc.alpha1,
            beta1: raw.bc.beta1,
        },
    )?;
    let task = match raw.task {
        TaskRaw::Transfer(t) => Task::Transfer(transfer_from_raw(t)?),
        TaskRaw::NullControl(n) => Task::NullControl(null_from_raw(n)?),
        TaskRaw::Composite {
            transfer,
            null_control,
        } => Task::Composite {
            transfer: transfer_from_raw(transfer)?,
            null_control: null_from_raw(null_control)?,
        },
    };
    task.validate()?;
    Ok((problem, task))
}

/// Serialize a problem and task back to the config format. Fails for pieces
/// built from library callables.
pub fn to_config_json(problem: &ParabolicProblem, task: &Task) -> Result<String, ProblemError> {
    let bc = problem.bc;
    let raw = ConfigRaw {
        theta: fn_to_segments(&problem.theta)?,
        sigma: fn_to_segments(&problem.sigma)?,
        lambda: fn_to_segments(&problem.lambda)?,
        bc: BcRaw {
            alpha0: bc.alpha0,
            beta0: bc.beta0,
            alpha1: bc.alpha1,
            beta1: bc.beta1,
        },
        task: match task {
            Task::Transfer(t) => TaskRaw::Transfer(transfer_to_raw(t)?),
            Task::NullControl(n) => TaskRaw::NullControl(null_to_raw(n)?),
            Task::Composite {
                transfer,
                null_control,
            } => TaskRaw::Composite {
                transfer: transfer_to_raw(transfer)?,
                null_control: null_to_raw(null_control)?,
            },
        },
    };
    serde_json::to_string_pretty(&raw).map_err(|e| ProblemError::Serialize(e.to_string()))
}

fn segments_to_fn(name: &str, segs: &[SegmentRaw]) -> Result<PiecewiseSmoothFn, ProblemError> {
    if segs.is_empty() {
        return Err(ProblemError::Parse(format!("'{name}' has no segments")));
    }
    let mut breakpoints = vec![segs[0].from];
    let mut pieces = Vec::with_capacity(segs.len());
    for (i, s) in segs.iter().enumerate() {
        if i > 0 && s.from != breakpoints[i] {
            return Err(ProblemError::validation(
                "breakpoints",
                format!(
                    "{name}: segment {i} starts at {} but previous ends at {}",
                    s.from, breakpoints[i]
                ),
            ));
        }
        breakpoints.push(s.to);
        let piece = Piece::parse(&s.expr)
            .map_err(|e| ProblemError::Parse(format!("{name} segment {i} '{}': {e}", s.expr)))?;
        pieces.push(piece);
    }
    PiecewiseSmoothFn::new(breakpoints, pieces).map_err(|e| match e {
        ProblemError::Validation { invariant, detail } => ProblemError::Validation {
            invariant,
            detail: format!("{name}: {detail}"),
        },
        other => other,
    })
}

fn fn_to_segments(f: &PiecewiseSmoothFn) -> Result<Vec<SegmentRaw>, ProblemError> {
    let bp = f.breakpoints();
    f.pieces()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let expr = p.source().ok_or_else(|| {
                ProblemError::Serialize("custom piece has no expression form".into())
            })?;
            Ok(SegmentRaw {
                from: bp[i],
                to: bp[i + 1],
                expr: expr.to_string(),
            })
        })
        .collect()
}

fn state_from_raw(s: StateRaw) -> Result<StateSpec, ProblemError> {
    Ok(match s {
        StateRaw::Zero => StateSpec::Zero,
        StateRaw::SteadyState { f_ss } => StateSpec::SteadyState { f_ss },
        StateRaw::ExplicitProfile { profile } => {
            StateSpec::Profile(segments_to_fn("profile", &profile)?)
        }
    })
}

fn state_to_raw(s: &StateSpec) -> Result<StateRaw, ProblemError> {
    Ok(match s {
        StateSpec::Zero => StateRaw::Zero,
        StateSpec::SteadyState { f_ss } => StateRaw::SteadyState { f_ss: *f_ss },
        StateSpec::Profile(p) => StateRaw::ExplicitProfile {
            profile: fn_to_segments(p)?,
        },
    })
}

fn transfer_from_raw(t: TransferRaw) -> Result<TransferSpec, ProblemError> {
    let spec = TransferSpec {
        horizon: t.horizon,
        initial: state_from_raw(t.u0)?,
        target: state_from_raw(t.u_target)?,
        gevrey_alpha: t.gevrey_alpha,
        gevrey_gamma: t.gevrey_gamma,
    };
    spec.validate()?;
    Ok(spec)
}

fn transfer_to_raw(t: &TransferSpec) -> Result<TransferRaw, ProblemError> {
    Ok(TransferRaw {
        horizon: t.horizon,
        u0: state_to_raw(&t.initial)?,
        u_target: state_to_raw(&t.target)?,
        gevrey_alpha: t.gevrey_alpha,
        gevrey_gamma: t.gevrey_gamma,
    })
}

fn null_from_raw(n: NullRaw) -> Result<NullControlSpec, ProblemError> {
    let spec = NullControlSpec {
        tau: n.tau,
        s: n.s,
        initial: segments_to_fn("u0_tilde", &n.u0_tilde)?,
        gevrey_alpha: n.gevrey_alpha,
    };
    spec.validate()?;
    Ok(spec)
}

fn null_to_raw(n: &NullControlSpec) -> Result<NullRaw, ProblemError> {
    Ok(NullRaw {
        tau: n.tau,
        s: n.s,
        u0_tilde: fn_to_segments(&n.initial)?,
        gevrey_alpha: n.gevrey_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAT: &str = r#"{
        "theta": [{"from": 0, "to": 1, "expr": "1"}],
        "sigma": [{"from": 0, "to": 1, "expr": "0"}],
        "lambda": [{"from": 0, "to": 1, "expr": "0"}],
        "bc": {"alpha0": 0, "beta0": 1, "alpha1": 0, "beta1": 1},
        "task": {"kind": "transfer", "T": 1, "u0": {"kind": "zero"},
                 "uT": {"kind": "steady_state", "f_ss": 1}, "gevrey_alpha": 1.5, "gevrey_gamma": 1}
    }"#;

    #[test]
    fn constant_coefficient_file() {
        let (p, task) = parse_problem(HEAT).unwrap();
        assert!(p.interface_points().is_empty());
        assert!(matches!(task, Task::Transfer(_)));
    }

    #[test]
    fn malformed_and_invalid_files() {
        assert!(matches!(
            parse_problem("{ not json"),
            Err(ProblemError::Parse(_))
        ));
        let bad_theta = HEAT.replace(r#""expr": "1""#, r#""expr": "-1 + x""#);
        let err = parse_problem(&bad_theta).unwrap_err();
        assert!(err.to_string().contains("theta positivity"), "{err}");
        let bad_gamma = HEAT.replace(r#""gevrey_gamma": 1"#, r#""gevrey_gamma": 2"#);
        let err = parse_problem(&bad_gamma).unwrap_err();
        assert!(err.to_string().contains("gamma"), "{err}");
        let bad_expr = HEAT.replacen(r#""expr": "0""#, r#""expr": "sin(""#, 1);
        assert!(matches!(
            parse_problem(&bad_expr),
            Err(ProblemError::Parse(_))
        ));
    }
}
