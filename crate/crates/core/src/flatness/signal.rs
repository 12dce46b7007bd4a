use super::FlatnessError;

/// Scalar signal sampled at strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub derivative: Option<Vec<f64>>,
}

impl SampledSignal {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        derivative: Option<Vec<f64>>,
    ) -> Result<Self, FlatnessError> {
        if times.is_empty() || times.len() != values.len() {
            return Err(FlatnessError::InvalidSignal(format!(
                "{} times for {} values",
                times.len(),
                values.len()
            )));
        }
        if let Some(d) = &derivative {
            if d.len() != times.len() {
                return Err(FlatnessError::InvalidSignal(format!(
                    "{} derivative samples for {} times",
                    d.len(),
                    times.len()
                )));
            }
        }
        if let Some(i) = times.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(FlatnessError::InvalidSignal(format!(
                "times not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self {
            times,
            values,
            derivative,
        })
    }

    pub fn zeros(times: Vec<f64>) -> Result<Self, FlatnessError> {
        let n = times.len();
        Self::new(times, vec![0.0; n], None)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Value at `t`: exact at sample times, cubic Hermite between samples when
    /// derivatives are present, linear otherwise. Clamped outside the range.
    pub fn eval(&self, t: f64) -> f64 {
        let ts = &self.times;
        let last = ts.len() - 1;
        if t <= ts[0] {
            return self.values[0];
        }
        if t >= ts[last] {
            return self.values[last];
        }
        let i = ts.partition_point(|&s| s <= t) - 1;
        if ts[i] == t {
            return self.values[i];
        }
        let (t0, t1) = (ts[i], ts[i + 1]);
        let dt = t1 - t0;
        let u = (t - t0) / dt;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        match &self.derivative {
            Some(d) => {
                let (h00, h10) = ((1.0 + 2.0 * u) * (1.0 - u).powi(2), u * (1.0 - u).powi(2));
                let (h01, h11) = (u * u * (3.0 - 2.0 * u), u * u * (u - 1.0));
                h00 * y0 + h10 * dt * d[i] + h01 * y1 + h11 * dt * d[i + 1]
            }
            None => y0 + u * (y1 - y0),
        }
    }

    /// Pointwise sum; both signals must share the time grid.
    pub fn add(&self, other: &Self) -> Result<Self, FlatnessError> {
        if self.times != other.times {
            return Err(FlatnessError::InvalidSignal("time grids differ".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        let derivative = match (&self.derivative, &other.derivative) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| x + y).collect()),
            _ => None,
        };
        Self::new(self.times.clone(), values, derivative)
    }

    /// Trapezoidal `L2` norm over the sampled range.
    pub fn l2_norm(&self) -> f64 {
        l2_trapezoid(&self.times, &self.values)
    }

    /// Trapezoidal `L2` distance; both signals must share the time grid.
    pub fn l2_distance(&self, other: &Self) -> Result<f64, FlatnessError> {
        if self.times != other.times {
            return Err(FlatnessError::InvalidSignal("time grids differ".into()));
        }
        let diff: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(l2_trapezoid(&self.times, &diff))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn l2_trapezoid(t: &[f64], v: &[f64]) -> f64 {
    t.windows(2)
        .zip(v.windows(2))
        .map(|(tw, vw)| 0.5 * (tw[1] - tw[0]) * (vw[0] * vw[0] + vw[1] * vw[1]))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(SampledSignal::new(vec![0.0, 1.0], vec![1.0], None).is_err());
        assert!(SampledSignal::new(vec![0.0, 0.0], vec![1.0, 1.0], None).is_err());
        assert!(SampledSignal::new(vec![0.0, 1.0], vec![1.0, 1.0], Some(vec![0.0])).is_err());
    }

    #[test]
    fn hermite_is_exact_for_cubics() {
        let f = |t: f64| t * t * t - 2.0 * t;
        let df = |t: f64| 3.0 * t * t - 2.0;
        let ts: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let s = SampledSignal::new(
            ts.clone(),
            ts.iter().map(|&t| f(t)).collect(),
            Some(ts.iter().map(|&t| df(t)).collect()),
        )
        .unwrap();
        for t in [0.03, 0.47, 0.999] {
            assert!((s.eval(t) - f(t)).abs() < 1e-14);
        }
        assert_eq!(s.eval(ts[3]), s.values[3]);
    }

    #[test]
    fn norms() {
        let ts: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
        let one = SampledSignal::new(ts.clone(), vec![1.0; 1001], None).unwrap();
        assert!((one.l2_norm() - 1.0).abs() < 1e-14);
        let zero = SampledSignal::zeros(ts).unwrap();
        assert!((one.l2_distance(&zero).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(one.add(&zero).unwrap().values, one.values);
    }
}
