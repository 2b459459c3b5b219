use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Magnitudes below this fraction of the spectral peak are treated as exact
/// zeros, so round-off from the transform never shows up as spectral peaks of
/// constant or silent signals.
pub const MAGNITUDE_FLOOR: f64 = 1e-10;

/// One-sided magnitude spectrum of an untapered real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Bin frequencies `k * rate / n` for `k = 0..=n/2`.
    pub freqs: Vec<f64>,
    pub mags: Vec<f64>,
}

impl Spectrum {
    pub fn new(x: &[f64], rate: f64) -> Self {
        let n = x.len();
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        if n > 0 {
            thread_local! {
                static PLANNER: std::cell::RefCell<FftPlanner<f64>> = std::cell::RefCell::new(FftPlanner::new());
            }
            let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
            fft.process(&mut buf);
        }
        let bins = n / 2 + 1;
        let mut mags: Vec<f64> = buf.iter().take(bins).map(|c| c.norm()).collect();
        apply_floor(&mut mags);
        let freqs = (0..bins).map(|k| k as f64 * rate / n as f64).collect();
        Spectrum { freqs, mags }
    }

    pub fn power(&self) -> Vec<f64> {
        self.mags.iter().map(|m| m * m).collect()
    }

    pub fn len(&self) -> usize {
        self.mags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mags.is_empty()
    }
}

pub fn apply_floor(mags: &mut [f64]) {
    let peak = mags.iter().copied().fold(0.0, f64::max);
    let floor = peak * MAGNITUDE_FLOOR;
    for m in mags.iter_mut() {
        if *m <= floor {
            *m = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_tone_lands_in_one_bin() {
        let x: Vec<f64> = (0..250)
            .map(|i| (2.0 * std::f64::consts::PI * 2.0 * i as f64 / 100.0).sin())
            .collect();
        let s = Spectrum::new(&x, 100.0);
        assert_eq!(s.len(), 126);
        let (k, _) = s
            .mags
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(s.freqs[k], 2.0);
        assert!((s.mags[k] - 125.0).abs() < 1e-9);
    }

    #[test]
    fn constant_signal_is_pure_dc() {
        let s = Spectrum::new(&[0.7; 64], 100.0);
        assert!(s.mags[1..].iter().all(|&m| m == 0.0));
        assert!((s.mags[0] - 0.7 * 64.0).abs() < 1e-12);
    }
}
