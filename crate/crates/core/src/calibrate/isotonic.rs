//! Weighted pool-adjacent-violators for a non-decreasing fit.

/// Least-squares non-decreasing fit of `y` (already ordered by the
/// predictor) with positive weights. Returns one fitted value per input.
pub fn pava(y: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), weights.len());
    // blocks of (weighted mean, total weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&v, &w) in y.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m1, w1, n1) = blocks[blocks.len() - 1];
            let (m0, w0, n0) = blocks[blocks.len() - 2];
            if m0 <= m1 {
                break;
            }
            blocks.pop();
            let wt = w0 + w1;
            *blocks.last_mut().unwrap() = ((m0 * w0 + m1 * w1) / wt, wt, n0 + n1);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, n)| std::iter::repeat_n(m, n))
        .collect()
}
