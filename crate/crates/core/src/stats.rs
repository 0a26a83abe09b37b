//! Running means and standard errors, accumulated in a fixed order so that
//! results do not depend on how replicates were scheduled.

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub(crate) fn push(&mut self, x: f64) {
        // Welford update.
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub(crate) fn from_iter(values: impl IntoIterator<Item = f64>) -> Self {
        let mut m = Moments::default();
        for v in values {
            m.push(v);
        }
        m
    }

    pub(crate) fn count(&self) -> usize {
        self.count
    }

    pub(crate) fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Sample variance with the `n - 1` denominator; NaN below two values.
    pub(crate) fn variance(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        (self.m2 / (self.count - 1) as f64).max(0.0)
    }

    /// Standard error of the mean; NaN below two values.
    pub(crate) fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Binomial standard error `sqrt(p(1-p)/reps)` with `p` clamped to `[0, 1]`.
pub(crate) fn binomial_se(p: f64, reps: usize) -> f64 {
    let p = p.clamp(0.0, 1.0);
    (p * (1.0 - p) / reps as f64).sqrt()
}
