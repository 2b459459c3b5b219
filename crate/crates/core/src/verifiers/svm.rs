//! Soft-margin linear SVM solved in the dual by two-coordinate descent
//! (maximal violating pair), followed by Platt calibration.
//!
//! Primal: min ½‖w‖² + C Σ max(0, 1 − yᵢ(w·xᵢ + b)), bias unregularized.
//! Dual:   min ½ αᵀQα − Σα  s.t. 0 ≤ α ≤ C, Σ yᵢαᵢ = 0,  Q = (yᵢyⱼ xᵢ·xⱼ).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::platt::{fit_platt, Platt};
use super::VerifierError;
use crate::features::NormalizerState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c_penalty: f64,
    pub seed: u64,
    pub max_iterations: usize,
    /// Stopping gap of the maximal violating pair.
    pub tolerance: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { c_penalty: 1.0, seed: 42, max_iterations: 1_000_000, tolerance: 1e-9 }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<(), VerifierError> {
        if !(self.c_penalty > 0.0 && self.c_penalty.is_finite()) {
            return Err(VerifierError::InvalidConfig(format!("c_penalty must be positive, got {}", self.c_penalty)));
        }
        if !(self.tolerance > 0.0) {
            return Err(VerifierError::InvalidConfig("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Raw solver output before calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub alphas: Vec<f64>,
    pub iterations: usize,
}

impl LinearSolution {
    pub fn margin(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub platt_a: f64,
    pub platt_b: f64,
    pub normalizer: NormalizerState,
    pub config: SvmConfig,
}

impl SvmModel {
    pub fn margin(&self, x: &[f64]) -> Result<f64, VerifierError> {
        if x.len() != self.weights.len() {
            return Err(VerifierError::DimensionMismatch { expected: self.weights.len(), got: x.len() });
        }
        Ok(dot(&self.weights, x) + self.bias)
    }

    /// Calibrated probability of an already normalized vector.
    pub fn score(&self, x: &[f64]) -> Result<f64, VerifierError> {
        Ok(self.platt().probability(self.margin(x)?))
    }

    pub fn platt(&self) -> Platt {
        Platt { a: self.platt_a, b: self.platt_b }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// ½‖w‖² + C Σ hinge.
pub fn primal_objective<R: AsRef<[f64]>>(w: &[f64], b: f64, x: &[R], y: &[bool], c: f64) -> f64 {
    let reg = 0.5 * dot(w, w);
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, &yi)| {
            let s = if yi { 1.0 } else { -1.0 };
            (1.0 - s * (dot(w, xi.as_ref()) + b)).max(0.0)
        })
        .sum();
    reg + c * hinge
}

fn check_inputs<R: AsRef<[f64]>>(x: &[R], y: &[bool]) -> Result<usize, VerifierError> {
    if x.len() != y.len() || x.is_empty() {
        return Err(VerifierError::ShapeMismatch(format!("{} rows, {} labels", x.len(), y.len())));
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(VerifierError::SingleClass);
    }
    let d = x[0].as_ref().len();
    if let Some(r) = x.iter().find(|r| r.as_ref().len() != d) {
        return Err(VerifierError::DimensionMismatch { expected: d, got: r.as_ref().len() });
    }
    Ok(d)
}

/// Solves the dual problem without calibration.
pub fn solve_linear_svm<R: AsRef<[f64]>>(x: &[R], y: &[bool], cfg: &SvmConfig) -> Result<LinearSolution, VerifierError> {
    cfg.validate()?;
    let d = check_inputs(x, y)?;
    let n = x.len();
    let c = cfg.c_penalty;

    // The seeded permutation fixes which of several equally violating
    // coordinates is picked; the optimum itself does not depend on it.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let xs: Vec<&[f64]> = order.iter().map(|&i| x[i].as_ref()).collect();
    let ys: Vec<f64> = order.iter().map(|&i| if y[i] { 1.0 } else { -1.0 }).collect();
    let diag: Vec<f64> = xs.iter().map(|r| dot(r, r)).collect();

    let mut alpha = vec![0.0; n];
    // Gradient of the dual objective: G = Qα − 1.
    let mut grad = vec![-1.0; n];
    let mut w = vec![0.0; d];
    let mut iterations = 0;

    let in_up = |a: f64, s: f64| (s > 0.0 && a < c) || (s < 0.0 && a > 0.0);
    let in_low = |a: f64, s: f64| (s > 0.0 && a > 0.0) || (s < 0.0 && a < c);

    loop {
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            let v = -ys[t] * grad[t];
            if in_up(alpha[t], ys[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(alpha[t], ys[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < cfg.tolerance {
            break;
        }
        if iterations >= cfg.max_iterations {
            return Err(VerifierError::NonConvergence(cfg.max_iterations));
        }
        iterations += 1;

        // Move along yᵢeᵢ − yⱼeⱼ, which keeps Σ yα fixed.
        let kij = dot(xs[i], xs[j]);
        let curv = (diag[i] + diag[j] - 2.0 * kij).max(1e-12);
        let mut step = (gmax - gmin) / curv;
        // Box limits expressed in the step variable.
        step = step.min(if ys[i] > 0.0 { c - alpha[i] } else { alpha[i] });
        step = step.min(if ys[j] > 0.0 { alpha[j] } else { c - alpha[j] });
        let di = ys[i] * step;
        let dj = -ys[j] * step;
        alpha[i] = (alpha[i] + di).clamp(0.0, c);
        alpha[j] = (alpha[j] + dj).clamp(0.0, c);
        // Snap to the bounds so index sets stay exact.
        for t in [i, j] {
            if alpha[t] < 1e-14 * c {
                alpha[t] = 0.0;
            } else if alpha[t] > c * (1.0 - 1e-14) {
                alpha[t] = c;
            }
        }

        let (ci, cj) = (di * ys[i], dj * ys[j]);
        for (wk, (a, b)) in w.iter_mut().zip(xs[i].iter().zip(xs[j])) {
            *wk += ci * a + cj * b;
        }
        for t in 0..n {
            grad[t] += ys[t] * (ci * dot(xs[i], xs[t]) + cj * dot(xs[j], xs[t]));
        }
    }

    // Recompute from α to shed accumulated drift.
    w.iter_mut().for_each(|v| *v = 0.0);
    for t in 0..n {
        if alpha[t] != 0.0 {
            for (wk, xv) in w.iter_mut().zip(xs[t]) {
                *wk += alpha[t] * ys[t] * xv;
            }
        }
    }
    let bias = solve_bias(&xs, &ys, &alpha, &w, c);

    let mut alphas = vec![0.0; n];
    for (k, &orig) in order.iter().enumerate() {
        alphas[orig] = alpha[k];
    }
    Ok(LinearSolution { weights: w, bias, alphas, iterations })
}

/// Bias from free support vectors; with none, the midpoint of the feasible
/// interval implied by the bounded ones.
fn solve_bias(xs: &[&[f64]], ys: &[f64], alpha: &[f64], w: &[f64], c: f64) -> f64 {
    let mut free_sum = 0.0;
    let mut free = 0usize;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for t in 0..xs.len() {
        // yₜ − w·xₜ is the bias that puts xₜ exactly on its margin.
        let r = ys[t] - dot(w, xs[t]);
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += r;
            free += 1;
        } else {
            // α = 0 wants y·f ≥ 1, α = C wants y·f ≤ 1.
            let lower_bound = (alpha[t] == 0.0) == (ys[t] > 0.0);
            if lower_bound {
                lo = lo.max(r);
            } else {
                hi = hi.min(r);
            }
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else if lo.is_finite() && hi.is_finite() {
        (lo + hi) / 2.0
    } else if lo.is_finite() {
        lo
    } else {
        hi
    }
}

/// Solves the SVM, then fits Platt calibration on the training margins.
/// Rows of `x` must already be normalized with `normalizer`.
pub fn train_svm<R: AsRef<[f64]>>(
    x: &[R],
    y: &[bool],
    normalizer: NormalizerState,
    cfg: &SvmConfig,
) -> Result<SvmModel, VerifierError> {
    let sol = solve_linear_svm(x, y, cfg)?;
    let margins: Vec<f64> = x.iter().map(|r| sol.margin(r.as_ref())).collect();
    let platt = fit_platt(&margins, y);
    Ok(SvmModel {
        weights: sol.weights,
        bias: sol.bias,
        platt_a: platt.a,
        platt_b: platt.b,
        normalizer,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_two_points() {
        let x = vec![vec![1.0], vec![-1.0]];
        let cfg = SvmConfig { c_penalty: 1e6, ..Default::default() };
        let s = solve_linear_svm(&x, &[true, false], &cfg).unwrap();
        assert!(s.bias.abs() < 1e-6);
        assert!((s.margin(&[1.0]) - 1.0).abs() < 1e-6);
        assert!((s.margin(&[-1.0]) + 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_class_and_bad_c() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(matches!(solve_linear_svm(&x, &[true, true], &SvmConfig::default()), Err(VerifierError::SingleClass)));
        let cfg = SvmConfig { c_penalty: 0.0, ..Default::default() };
        assert!(matches!(solve_linear_svm(&x, &[true, false], &cfg), Err(VerifierError::InvalidConfig(_))));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![(i % 7) as f64, (i % 3) as f64]).collect();
        let y: Vec<bool> = (0..20).map(|i| i % 2 == 0).collect();
        let cfg = SvmConfig { max_iterations: 1, ..Default::default() };
        assert!(matches!(solve_linear_svm(&x, &y, &cfg), Err(VerifierError::NonConvergence(1))));
    }

    #[test]
    fn dimension_mismatch_on_score() {
        let x = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let m = train_svm(&x, &[true, false], NormalizerState::identity(2), &SvmConfig::default()).unwrap();
        assert!(matches!(m.score(&[1.0]), Err(VerifierError::DimensionMismatch { expected: 2, got: 1 })));
    }
}
