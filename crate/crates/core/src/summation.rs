//! Floating-point accumulation with reproducible, bounded rounding error.

/// Neumaier's variant of Kahan summation; also correct when an addend is
/// larger in magnitude than the running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// `ln(sum(exp(x)))` over log-scale terms, accumulated in the given order
/// with compensation after shifting by the largest term.
pub fn log_sum_exp(log_terms: &[f64]) -> f64 {
    let max = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let shifted = compensated_sum(log_terms.iter().map(|&t| (t - max).exp()));
    max + shifted.ln()
}

/// Fixed-shape pairwise reduction: the tree depends only on `values.len()`,
/// so the result is identical however the values were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_lost_low_bits() {
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for _ in 0..10_000 {
            acc.add(1e-16);
        }
        assert!((acc.value() - (1.0 + 1e-12)).abs() < 1e-15);
        // Large addend after small running sum.
        let v = compensated_sum([1e-16, 1e16, 1.0, -1e16]);
        assert_eq!(v, 1.0 + 1e-16);
    }

    #[test]
    fn log_sum_exp_handles_tiny_terms() {
        let terms = [-1000.0, -1000.0];
        assert!((log_sum_exp(&terms) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn pairwise_is_order_stable() {
        let values: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        assert_eq!(pairwise_sum(&values), pairwise_sum(&values.clone()));
        assert!((pairwise_sum(&values) - compensated_sum(values.iter().copied())).abs() < 1e-12);
    }
}
