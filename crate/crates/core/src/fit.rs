//! Tiny least-squares helpers for exponent fits on sweeps.

/// Slope of the least-squares line through `(xs[i], ys[i])`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert!(xs.len() == ys.len() && xs.len() >= 2, "need at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Fitted exponent e of `y ~ C x^e`: the least-squares slope of log y
/// against log x. Points with nonpositive y are rejected.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|&v| v.ln()).collect();
    let ly: Vec<f64> = ys
        .iter()
        .map(|&v| {
            assert!(v > 0.0, "log-log fit needs positive values, got {v}");
            v.ln()
        })
        .collect();
    least_squares_slope(&lx, &ly)
}
