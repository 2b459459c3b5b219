//! Dense interior-point solver for the soft-margin SVM dual, used to check
//! the production solver on small problems.
//!
//! min ½ αᵀQα − Σα  s.t.  yᵀα = 0, 0 ≤ α ≤ C, solved with a log barrier
//! and equality-constrained Newton steps.

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting; `a` is row-major n x n.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub weights: Vec<f64>,
    /// Bias minimizing the primal for the recovered weights.
    pub bias: f64,
    pub primal: f64,
    pub dual: f64,
}

pub fn primal(w: &[f64], b: f64, x: &[Vec<f64>], y: &[f64], c: f64) -> f64 {
    0.5 * dot(w, w) + c * x.iter().zip(y).map(|(xi, yi)| (1.0 - yi * (dot(w, xi) + b)).max(0.0)).sum::<f64>()
}

/// `y` entries are ±1.
pub fn solve_svm_dual(x: &[Vec<f64>], y: &[f64], c: f64) -> DualSolution {
    let n = x.len();
    let q: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| y[i] * y[j] * dot(&x[i], &x[j])).collect()).collect();
    let npos = y.iter().filter(|&&v| v > 0.0).count() as f64;
    let nneg = n as f64 - npos;
    let s = c * npos.min(nneg) / 2.0;
    let mut alpha: Vec<f64> = y.iter().map(|&v| if v > 0.0 { s / npos } else { s / nneg }).collect();

    let f = |a: &[f64]| {
        let qa: Vec<f64> = q.iter().map(|r| dot(r, a)).collect();
        0.5 * dot(a, &qa) - a.iter().sum::<f64>()
    };
    let barrier = |a: &[f64], t: f64| {
        let mut v = t * f(a);
        for &ai in a {
            if ai <= 0.0 || ai >= c {
                return f64::INFINITY;
            }
            v -= ai.ln() + (c - ai).ln();
        }
        v
    };

    let mut t = 1.0;
    while (2 * n) as f64 / t > 1e-13 {
        for _ in 0..100 {
            let qa: Vec<f64> = q.iter().map(|r| dot(r, &alpha)).collect();
            let grad: Vec<f64> =
                (0..n).map(|i| t * (qa[i] - 1.0) - 1.0 / alpha[i] + 1.0 / (c - alpha[i])).collect();
            // KKT system [H y; yᵀ 0][dα; ν] = [−g; 0]
            let mut k = vec![vec![0.0; n + 1]; n + 1];
            for i in 0..n {
                for j in 0..n {
                    k[i][j] = t * q[i][j];
                }
                k[i][i] += 1.0 / alpha[i].powi(2) + 1.0 / (c - alpha[i]).powi(2);
                k[i][n] = y[i];
                k[n][i] = y[i];
            }
            let mut rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            rhs.push(0.0);
            let sol = solve_dense(k, rhs);
            // Re-project onto yᵀd = 0; the KKT solve is badly conditioned
            // near the bounds and would otherwise let the constraint drift.
            let drift = dot(y, &sol[..n]) / n as f64;
            let step: Vec<f64> = (0..n).map(|i| sol[i] - drift * y[i]).collect();
            let step = &step[..];
            let decrement = -dot(&grad, step);
            if decrement / 2.0 < 1e-15 {
                break;
            }
            let mut h = 1.0;
            let base = barrier(&alpha, t);
            loop {
                let cand: Vec<f64> = alpha.iter().zip(step).map(|(a, d)| a + h * d).collect();
                if barrier(&cand, t) <= base - 0.25 * h * decrement {
                    alpha = cand;
                    break;
                }
                h *= 0.5;
                if h < 1e-16 {
                    break;
                }
            }
            if h < 1e-16 {
                break;
            }
        }
        t *= 8.0;
    }

    let d = x[0].len();
    let mut w = vec![0.0; d];
    for i in 0..n {
        for k in 0..d {
            w[k] += alpha[i] * y[i] * x[i][k];
        }
    }
    // The primal is convex piecewise linear in b with kinks at yᵢ − w·xᵢ.
    // When the minimum is a flat segment, take its midpoint.
    let kinks: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let b = y[i] - dot(&w, &x[i]);
            (b, primal(&w, b, x, y, c))
        })
        .collect();
    let best = kinks.iter().map(|k| k.1).fold(f64::INFINITY, f64::min);
    let flat: Vec<f64> = kinks.iter().filter(|k| k.1 <= best + 1e-12 * best.max(1.0)).map(|k| k.0).collect();
    let lo = flat.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = flat.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bias = 0.5 * (lo + hi);
    let primal = primal(&w, bias, x, y, c);
    DualSolution { dual: -f(&alpha), alpha, weights: w, bias, primal }
}
