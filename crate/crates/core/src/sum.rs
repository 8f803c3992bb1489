//! Compensated (Neumaier) summation.

#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
    count: usize,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
        self.count += 1;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
        // two adds above are bookkeeping, not samples
        self.count = self.count - 2 + other.count;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.total() / self.count as f64
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Compensated mean of a slice.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().copied().collect::<CompensatedSum>().mean()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.total(), 1.0);
    }

    #[test]
    fn partition_independent() {
        let v: Vec<f64> = (0..10_000).map(|i| ((i as f64) * 0.37).sin() * 1e3 + 1e-3).collect();
        let whole: CompensatedSum = v.iter().copied().collect();
        let mut parts = CompensatedSum::new();
        for chunk in v.chunks(777) {
            let c: CompensatedSum = chunk.iter().copied().collect();
            parts.merge(&c);
        }
        assert_eq!(parts.count(), whole.count());
        assert!((parts.total() - whole.total()).abs() <= 1e-12 * whole.total().abs().max(1.0));
    }
}
