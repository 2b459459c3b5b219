//! Equal error rate by brute-force counting and bisection.

fn far(impostor: &[f64], t: f64) -> f64 {
    impostor.iter().filter(|&&s| s >= t).count() as f64 / impostor.len() as f64
}

fn frr(genuine: &[f64], t: f64) -> f64 {
    genuine.iter().filter(|&&s| s < t).count() as f64 / genuine.len() as f64
}

/// Thresholds are every distinct score plus one above the maximum. FAR and
/// FRR are interpolated linearly between neighbouring thresholds; the EER is
/// where FAR − FRR first reaches zero, located by bisection.
pub fn eer(genuine: &[f64], impostor: &[f64]) -> (f64, f64) {
    let mut ts: Vec<f64> = genuine.iter().chain(impostor).copied().collect();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    let top = *ts.last().unwrap();
    ts.push(top + 1e-6 * top.abs().max(1.0));

    let at = |u: f64| {
        let k = (u.floor() as usize).min(ts.len() - 2);
        let l = u - k as f64;
        let (a, b) = (ts[k], ts[k + 1]);
        let fa = far(impostor, a) + l * (far(impostor, b) - far(impostor, a));
        let fr = frr(genuine, a) + l * (frr(genuine, b) - frr(genuine, a));
        (fa, fr, a + l * (b - a))
    };
    let d = |u: f64| {
        let (fa, fr, _) = at(u);
        fa - fr
    };
    let (mut lo, mut hi) = (0.0, (ts.len() - 1) as f64);
    if d(lo) <= 0.0 {
        hi = lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if d(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (fa, fr, t) = at(hi);
    (0.5 * (fa + fr), t)
}
