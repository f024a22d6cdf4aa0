//! Compensated summation and jackknife errors for ratio estimators.

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut s = CompensatedSum::default();
    values.into_iter().for_each(|x| s.add(x));
    s.value()
}

/// Delete-one-batch jackknife for a smooth function of summed batch totals.
///
/// Returns the estimate on the full total and its standard error
/// `√((n−1)/n · Σ(θ_i − θ̄)²)`, where `θ_i` omits batch `i`.
pub fn jackknife<const N: usize, F>(batches: &[[f64; N]], f: F) -> (f64, f64)
where
    F: Fn(&[f64; N]) -> f64,
{
    let n = batches.len();
    let mut total = [0.0; N];
    for (k, t) in total.iter_mut().enumerate() {
        *t = compensated_sum(batches.iter().map(|b| b[k]));
    }
    let estimate = f(&total);
    if n < 2 {
        return (estimate, f64::NAN);
    }
    let leave_out: Vec<f64> = batches
        .iter()
        .map(|b| {
            let mut rest = total;
            for k in 0..N {
                rest[k] -= b[k];
            }
            f(&rest)
        })
        .collect();
    let mean = compensated_sum(leave_out.iter().copied()) / n as f64;
    let spread = compensated_sum(leave_out.iter().map(|t| (t - mean) * (t - mean)));
    (estimate, ((n - 1) as f64 / n as f64 * spread).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_lost_digits() {
        let values = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(values.iter().sum::<f64>(), 0.0);
        assert_eq!(compensated_sum(values), 2.0);
    }

    #[test]
    fn jackknife_of_a_mean_is_the_standard_error() {
        // For f = mean the jackknife reproduces s/√n exactly.
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0];
        let batches: Vec<[f64; 2]> = xs.iter().map(|&x| [x, 1.0]).collect();
        let (est, err) = jackknife(&batches, |t| t[0] / t[1]);
        let mean = 4.0;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 4.0;
        assert!((est - mean).abs() < 1e-15);
        assert!((err - (var / 5.0).sqrt()).abs() < 1e-14);
    }
}
