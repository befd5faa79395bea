//! Order-fixed reductions, so ensemble summaries do not depend on how the
//! work was scheduled.

/// Pairwise sum over index halves.
pub fn tree_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (a, b) = values.split_at(n / 2);
            tree_sum(a) + tree_sum(b)
        }
    }
}

/// Sample mean and its standard error `σ̂/√n`, with `σ̂² = Σ(x − x̄)²/n`.
pub fn mean_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = tree_sum(values) / n as f64;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = tree_sum(&dev) / n as f64;
    (mean, (var / n as f64).sqrt())
}
