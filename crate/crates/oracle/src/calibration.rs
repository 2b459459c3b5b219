//! Logistic fit of labels on margins by cyclic coordinate bisection on the
//! gradient. Slow, but shares nothing with a Newton solver.

fn sig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Returns (a, b) minimizing cross-entropy of σ(a m + b) against `targets`.
pub fn fit_logistic(margins: &[f64], targets: &[f64]) -> (f64, f64) {
    let grad_a = |a: f64, b: f64| margins.iter().zip(targets).map(|(m, t)| (sig(a * m + b) - t) * m).sum::<f64>();
    let grad_b = |a: f64, b: f64| margins.iter().zip(targets).map(|(m, t)| sig(a * m + b) - t).sum::<f64>();
    // Each partial derivative is increasing in its own coordinate.
    let root = |g: &dyn Fn(f64) -> f64| {
        let (mut lo, mut hi) = (-1e3, 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let (mut a, mut b) = (0.0, 0.0);
    for _ in 0..5000 {
        let (pa, pb) = (a, b);
        a = root(&|v| grad_a(v, b));
        b = root(&|v| grad_b(a, v));
        if (a - pa).abs() < 1e-14 && (b - pb).abs() < 1e-14 {
            break;
        }
    }
    (a, b)
}
