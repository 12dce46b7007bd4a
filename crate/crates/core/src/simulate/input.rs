use crate::flatness::SampledSignal;

/// Boundary input evaluable at any time.
pub trait InputSignal: Sync {
    fn value(&self, t: f64) -> f64;

    /// Limit from the left; differs from `value` only at jumps.
    fn left_limit(&self, t: f64) -> f64 {
        self.value(t)
    }
}

impl<S: InputSignal + ?Sized> InputSignal for &S {
    fn value(&self, t: f64) -> f64 {
        (**self).value(t)
    }

    fn left_limit(&self, t: f64) -> f64 {
        (**self).left_limit(t)
    }
}

impl InputSignal for SampledSignal {
    fn value(&self, t: f64) -> f64 {
        self.eval(t)
    }
}

/// Input given by a closure.
pub struct FnInput<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> InputSignal for FnInput<F> {
    fn value(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

/// Zero before `delay`, `inner(t - delay)` from `delay` on.
pub struct Delayed<S> {
    pub delay: f64,
    pub inner: S,
}

impl<S: InputSignal> InputSignal for Delayed<S> {
    fn value(&self, t: f64) -> f64 {
        if t < self.delay {
            0.0
        } else {
            self.inner.value(t - self.delay)
        }
    }

    fn left_limit(&self, t: f64) -> f64 {
        if t <= self.delay {
            0.0
        } else {
            self.inner.left_limit(t - self.delay)
        }
    }
}

/// Pointwise sum of two inputs.
pub struct Sum<A, B>(pub A, pub B);

impl<A: InputSignal, B: InputSignal> InputSignal for Sum<A, B> {
    fn value(&self, t: f64) -> f64 {
        self.0.value(t) + self.1.value(t)
    }

    fn left_limit(&self, t: f64) -> f64 {
        self.0.left_limit(t) + self.1.left_limit(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delayed_jump_limits() {
        let d = Delayed {
            delay: 0.5,
            inner: FnInput(|t| 1.0 + t),
        };
        assert_eq!(d.value(0.49), 0.0);
        assert_eq!(d.value(0.5), 1.0);
        assert_eq!(d.left_limit(0.5), 0.0);
        assert_eq!(d.left_limit(0.75), 1.25);
        let s = Sum(&d, FnInput(|_| 2.0));
        assert_eq!(s.value(0.5), 3.0);
        assert_eq!(s.left_limit(0.5), 2.0);
    }
}
