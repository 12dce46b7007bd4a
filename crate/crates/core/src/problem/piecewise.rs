use std::fmt;
use std::sync::Arc;

use super::expr::{Dual2, Expr, ParseError};
use super::ProblemError;

/// User-supplied piece: returns value, first and second derivative at `x`.
pub type PieceFn = dyn Fn(f64) -> Dual2 + Send + Sync;

/// One closed-form piece of a [`PiecewiseSmoothFn`].
#[derive(Clone)]
pub enum Piece {
    /// Parsed from the config grammar; the source text is kept for
    /// bit-exact re-serialization.
    Expr { source: String, expr: Expr },
    /// Library-only callable. Cannot be written back to a config file.
    Custom(Arc<PieceFn>),
}

impl Piece {
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        Ok(Piece::Expr {
            source: source.to_string(),
            expr: Expr::parse(source)?,
        })
    }

    pub fn custom(f: impl Fn(f64) -> Dual2 + Send + Sync + 'static) -> Self {
        Piece::Custom(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        Piece::Expr {
            source: format!("{c:?}"),
            expr: Expr::Const(c),
        }
    }

    #[inline]
    pub fn eval_d2(&self, x: f64) -> Dual2 {
        match self {
            Piece::Expr { expr, .. } => expr.eval_d2(x),
            Piece::Custom(f) => f(x),
        }
    }

    pub fn source(&self) -> Option<&str> {
        match self {
            Piece::Expr { source, .. } => Some(source),
            Piece::Custom(_) => None,
        }
    }
}

impl fmt::Debug for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Piece::Expr { source, .. } => write!(f, "Expr({source:?})"),
            Piece::Custom(_) => write!(f, "Custom(<fn>)"),
        }
    }
}

/// Piecewise-smooth function on `[0, 1]`.
///
/// Piece `i` owns `[b_i, b_{i+1})`; the last piece also owns `x = 1`.
#[derive(Clone, Debug)]
pub struct PiecewiseSmoothFn {
    breakpoints: Vec<f64>,
    pieces: Vec<Piece>,
}

impl PiecewiseSmoothFn {
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Piece>) -> Result<Self, ProblemError> {
        if pieces.is_empty() || breakpoints.len() != pieces.len() + 1 {
            return Err(ProblemError::validation(
                "breakpoints",
                format!(
                    "{} breakpoints for {} pieces (need pieces + 1)",
                    breakpoints.len(),
                    pieces.len()
                ),
            ));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(ProblemError::validation(
                "breakpoints",
                "first breakpoint must be 0 and last must be 1".to_string(),
            ));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(ProblemError::validation(
                "breakpoints",
                "breakpoints must be strictly increasing".to_string(),
            ));
        }
        Ok(Self {
            breakpoints,
            pieces,
        })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            breakpoints: vec![0.0, 1.0],
            pieces: vec![Piece::constant(c)],
        }
    }

    /// Single smooth piece on all of `[0, 1]`.
    pub fn smooth(piece: Piece) -> Self {
        Self {
            breakpoints: vec![0.0, 1.0],
            pieces: vec![piece],
        }
    }

    pub fn from_exprs(segments: &[(f64, f64, &str)]) -> Result<Self, ProblemError> {
        let mut breakpoints = Vec::with_capacity(segments.len() + 1);
        let mut pieces = Vec::with_capacity(segments.len());
        for (i, &(from, to, src)) in segments.iter().enumerate() {
            if i == 0 {
                breakpoints.push(from);
            } else if breakpoints[i] != from {
                return Err(ProblemError::validation(
                    "breakpoints",
                    format!(
                        "segment {i} starts at {from} but previous ends at {}",
                        breakpoints[i]
                    ),
                ));
            }
            breakpoints.push(to);
            pieces
                .push(Piece::parse(src).map_err(|e| ProblemError::Parse(format!("'{src}': {e}")))?);
        }
        Self::new(breakpoints, pieces)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Breakpoints strictly inside `(0, 1)`.
    pub fn interior_breakpoints(&self) -> &[f64] {
        &self.breakpoints[1..self.breakpoints.len() - 1]
    }

    /// Index of the piece owning `x` (right-continuous).
    pub fn piece_index(&self, x: f64) -> usize {
        let idx = self.breakpoints.partition_point(|&b| b <= x);
        idx.saturating_sub(1).min(self.pieces.len() - 1)
    }

    #[inline]
    pub fn eval_d2(&self, x: f64) -> Dual2 {
        self.pieces[self.piece_index(x)].eval_d2(x)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_d2(x).v
    }

    pub fn eval_deriv(&self, x: f64) -> f64 {
        self.eval_d2(x).d1
    }

    pub fn eval_second_deriv(&self, x: f64) -> f64 {
        self.eval_d2(x).d2
    }

    /// Lower bound of the function over `[0, 1]`, from endpoint values of every
    /// piece plus refined interior critical points.
    pub fn infimum_estimate(&self) -> f64 {
        const SAMPLES: usize = 256;
        let mut lo = f64::INFINITY;
        for (i, piece) in self.pieces.iter().enumerate() {
            let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
            let xs: Vec<f64> = (0..=SAMPLES)
                .map(|k| a + (b - a) * k as f64 / SAMPLES as f64)
                .collect();
            let vals: Vec<Dual2> = xs.iter().map(|&x| piece.eval_d2(x)).collect();
            for v in &vals {
                lo = lo.min(v.v);
            }
            for k in 0..SAMPLES {
                let (d0, d1) = (vals[k].d1, vals[k + 1].d1);
                if d0 < 0.0 && d1 > 0.0 {
                    let (mut l, mut r) = (xs[k], xs[k + 1]);
                    for _ in 0..60 {
                        let m = 0.5 * (l + r);
                        if piece.eval_d2(m).d1 < 0.0 {
                            l = m;
                        } else {
                            r = m;
                        }
                    }
                    lo = lo.min(piece.eval_d2(0.5 * (l + r)).v);
                }
            }
            if vals.iter().any(|v| !v.v.is_finite()) {
                return f64::NAN;
            }
        }
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_theta() -> PiecewiseSmoothFn {
        PiecewiseSmoothFn::from_exprs(&[(0.0, 0.5, "1 + x"), (0.5, 1.0, "2")]).unwrap()
    }

    #[test]
    fn right_continuous_ownership() {
        let theta = example_theta();
        assert_eq!(theta.eval(0.5), 2.0);
        assert_eq!(theta.eval(0.25), 1.25);
        assert_eq!(theta.eval(1.0), 2.0);
        assert_eq!(theta.eval(0.0), 1.0);
        let sigma =
            PiecewiseSmoothFn::from_exprs(&[(0.0, 0.3, "sin(5*pi*x)"), (0.3, 1.0, "2 - 2*x")])
                .unwrap();
        assert!((sigma.eval(0.3) - 1.4).abs() < 1e-15);
    }

    #[test]
    fn breakpoint_validation() {
        let p = || Piece::constant(1.0);
        assert!(PiecewiseSmoothFn::new(vec![0.0, 0.5, 0.5, 1.0], vec![p(), p(), p()]).is_err());
        assert!(PiecewiseSmoothFn::new(vec![0.1, 1.0], vec![p()]).is_err());
        assert!(PiecewiseSmoothFn::new(vec![0.0, 0.9], vec![p()]).is_err());
        assert!(PiecewiseSmoothFn::new(vec![0.0, 1.0], vec![p(), p()]).is_err());
        assert!(PiecewiseSmoothFn::from_exprs(&[(0.0, 0.4, "1"), (0.5, 1.0, "1")]).is_err());
    }

    #[test]
    fn infimum_finds_interior_minimum() {
        let f = PiecewiseSmoothFn::from_exprs(&[(0.0, 1.0, "1 + (x - 0.3137)^2")]).unwrap();
        assert!((f.infimum_estimate() - 1.0).abs() < 1e-12);
        let g = PiecewiseSmoothFn::from_exprs(&[(0.0, 1.0, "-1 + x")]).unwrap();
        assert_eq!(g.infimum_estimate(), -1.0);
    }

    #[test]
    fn custom_pieces() {
        let f = PiecewiseSmoothFn::smooth(Piece::custom(|x| Dual2 {
            v: x * x,
            d1: 2.0 * x,
            d2: 2.0,
        }));
        assert_eq!(f.eval(0.5), 0.25);
        assert_eq!(f.eval_deriv(0.5), 1.0);
        assert!(f.pieces()[0].source().is_none());
    }
}
