//! Platt calibration: p = σ(a·margin + b), fitted by damped Newton on the
//! cross-entropy against Platt's smoothed targets.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Platt {
    pub a: f64,
    pub b: f64,
}

impl Platt {
    pub const IDENTITY: Platt = Platt { a: 1.0, b: 0.0 };

    pub fn probability(&self, margin: f64) -> f64 {
        sigmoid(self.a * margin + self.b)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Targets (N₊+1)/(N₊+2) for positives and 1/(N₋+2) for negatives.
pub fn smoothed_targets(labels: &[bool]) -> Vec<f64> {
    let pos = labels.iter().filter(|&&y| y).count() as f64;
    let neg = labels.len() as f64 - pos;
    let (hi, lo) = ((pos + 1.0) / (pos + 2.0), 1.0 / (neg + 2.0));
    labels.iter().map(|&y| if y { hi } else { lo }).collect()
}

/// Negative log-likelihood of the calibration, written to avoid log(0).
pub fn platt_loss(margins: &[f64], targets: &[f64], p: Platt) -> f64 {
    margins
        .iter()
        .zip(targets)
        .map(|(&m, &t)| {
            let z = p.a * m + p.b;
            // −[t log σ(z) + (1−t) log(1−σ(z))] = log(1+e^z) − t z
            let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            softplus - t * z
        })
        .sum()
}

/// Fits the calibration. A non-increasing fit (a ≤ 0, e.g. margins that
/// carry no label information) falls back to σ(margin) so probabilities
/// stay strictly increasing in the margin.
pub fn fit_platt(margins: &[f64], labels: &[bool]) -> Platt {
    let t = smoothed_targets(labels);
    let pos = labels.iter().filter(|&&y| y).count() as f64;
    let neg = labels.len() as f64 - pos;
    let mut p = Platt { a: 0.0, b: ((pos + 1.0) / (neg + 1.0)).ln() };
    let mut f = platt_loss(margins, &t, p);
    for _ in 0..200 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 1e-12, 0.0, 1e-12);
        for (&m, &ti) in margins.iter().zip(&t) {
            let q = sigmoid(p.a * m + p.b);
            let d = q - ti;
            ga += d * m;
            gb += d;
            let w = q * (1.0 - q);
            haa += w * m * m;
            hab += w * m;
            hbb += w;
        }
        if ga.abs().max(gb.abs()) < 1e-12 * (1.0 + margins.len() as f64) {
            break;
        }
        let det = haa * hbb - hab * hab;
        let da = -(hbb * ga - hab * gb) / det;
        let db = -(haa * gb - hab * ga) / det;
        let slope = ga * da + gb * db;
        let mut step = 1.0;
        let mut moved = false;
        while step >= 1e-10 {
            let cand = Platt { a: p.a + step * da, b: p.b + step * db };
            let fc = platt_loss(margins, &t, cand);
            if fc <= f + 1e-4 * step * slope {
                p = cand;
                f = fc;
                moved = true;
                break;
            }
            step /= 2.0;
        }
        if !moved {
            break;
        }
    }
    if p.a > 0.0 && p.a.is_finite() && p.b.is_finite() {
        p
    } else {
        Platt::IDENTITY
    }
}
