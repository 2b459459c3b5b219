//! ReliefF over every instance, written straight from the update rule.

/// Weights for each column; every instance is used once.
pub fn relieff_all(x: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<f64> {
    let n = x.len();
    let d = x[0].len();
    let lo: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let diff = |j: usize, a: usize, b: usize| {
        if hi[j] == lo[j] {
            0.0
        } else {
            (x[a][j] - x[b][j]).abs() / (hi[j] - lo[j])
        }
    };
    let dist = |a: usize, b: usize| (0..d).map(|j| diff(j, a, b)).sum::<f64>();
    let classes: Vec<usize> = {
        let mut c = labels.to_vec();
        c.sort();
        c.dedup();
        c
    };
    let size = |c: usize| labels.iter().filter(|&&l| l == c).count() as f64;
    let mut w = vec![0.0; d];
    for r in 0..n {
        for &c in &classes {
            // k nearest members of class c other than r; ties to lower index.
            let mut cand: Vec<usize> = (0..n).filter(|&i| i != r && labels[i] == c).collect();
            cand.sort_by(|&a, &b| dist(r, a).partial_cmp(&dist(r, b)).unwrap().then(a.cmp(&b)));
            let factor = if c == labels[r] { -1.0 } else { size(c) / (n as f64 - size(labels[r])) };
            for &i in cand.iter().take(k) {
                for (j, wj) in w.iter_mut().enumerate() {
                    *wj += factor * diff(j, r, i) / (n * k) as f64;
                }
            }
        }
    }
    w
}
