//! Fixed-order summation shared by the error estimators.

/// Above this many terms the sum switches to Neumaier compensation.
pub(crate) const COMPENSATED_THRESHOLD: usize = 1_000_000;

/// Sums `terms` in iteration order. `len` is the number of terms the caller
/// is about to feed; it selects plain or compensated accumulation so that the
/// result depends only on the inputs and never on how work was scheduled.
pub(crate) fn ordered_sum<I: IntoIterator<Item = f64>>(terms: I, len: usize) -> f64 {
    if len > COMPENSATED_THRESHOLD {
        neumaier_sum(terms)
    } else {
        terms.into_iter().sum()
    }
}

pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
