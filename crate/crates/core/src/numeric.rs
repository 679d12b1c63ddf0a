//! Small numerical helpers shared by the functionals.

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Maximum with its position; ties keep the smaller index so that parallel
/// reductions are order independent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArgMax {
    pub value: f64,
    pub index: usize,
}

impl ArgMax {
    pub const EMPTY: ArgMax = ArgMax {
        value: f64::NEG_INFINITY,
        index: usize::MAX,
    };

    #[inline]
    pub fn merge(self, other: ArgMax) -> ArgMax {
        if other.value > self.value || (other.value == self.value && other.index < self.index) {
            other
        } else {
            self
        }
    }

    pub fn is_empty(&self) -> bool {
        self.index == usize::MAX
    }
}

/// Natural log, positive part.
#[inline]
pub fn log_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.ln()
    } else {
        0.0
    }
}
