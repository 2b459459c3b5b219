//! Per-axis feature computation.
//!
//! Definitions follow the catalog documentation in the README. Degenerate
//! inputs get fixed fallbacks instead of NaN: spectral features of a silent
//! signal are 0, moment ratios of a constant signal are 0, ECDF slope with
//! coincident percentiles is 0, and DFA / Higuchi return 0 when a fluctuation
//! or curve length vanishes.

use std::f64::consts::PI;

use super::catalog::{FeatureKind, FEATURES_PER_AXIS};
use super::spectrum::Spectrum;
use super::FeatureError;

/// The 54 values of one axis, indexed by `FeatureKind::index()`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisFeatures(pub [f64; FEATURES_PER_AXIS]);

impl AxisFeatures {
    pub fn get(&self, kind: FeatureKind) -> f64 {
        self.0[kind.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (FeatureKind, f64)> + '_ {
        FeatureKind::ALL.iter().map(move |&k| (k, self.0[k.index()]))
    }
}

pub const HISTOGRAM_BINS: usize = 10;
pub const HIGUCHI_KMAX: usize = 10;
pub const DFA_SCALES: usize = 10;
pub const WAVELET_WIDTHS: usize = 10;
pub const NEIGHBOURHOOD: usize = 10;
pub const HUMAN_RANGE_HZ: (f64, f64) = (0.6, 2.5);

fn median_of_sorted(s: &[f64]) -> f64 {
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    median_of_sorted(&s)
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(s: &[f64], p: f64) -> f64 {
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

/// Least-squares slope of `y` against `x`.
pub(crate) fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn shannon_bits(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|w| {
            let p = w / total;
            p * p.log2()
        })
        .sum::<f64>()
}

fn histogram(x: &[f64], min: f64, max: f64) -> [usize; HISTOGRAM_BINS] {
    let mut counts = [0usize; HISTOGRAM_BINS];
    let width = (max - min) / HISTOGRAM_BINS as f64;
    for &v in x {
        let idx = if width > 0.0 {
            (((v - min) / width).floor() as usize).min(HISTOGRAM_BINS - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    counts
}

fn higuchi(x: &[f64]) -> f64 {
    let n = x.len();
    let kmax = HIGUCHI_KMAX.min(n / 2);
    if kmax < 2 {
        return 0.0;
    }
    let mut log_inv_k = Vec::with_capacity(kmax);
    let mut log_len = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let mut total = 0.0;
        for m in 0..k {
            let count = (n - 1 - m) / k;
            let mut sum = 0.0;
            for i in 1..=count {
                sum += (x[m + i * k] - x[m + (i - 1) * k]).abs();
            }
            total += sum * (n - 1) as f64 / (count * k) as f64 / k as f64;
        }
        let l = total / k as f64;
        if l <= 0.0 {
            return 0.0;
        }
        log_inv_k.push((1.0 / k as f64).ln());
        log_len.push(l.ln());
    }
    ls_slope(&log_inv_k, &log_len)
}

/// Box sizes for DFA: `DFA_SCALES` log-spaced integers in `[4, n/4]`,
/// deduplicated.
pub fn dfa_box_sizes(n: usize) -> Vec<usize> {
    let max = n / 4;
    if max < 4 {
        return Vec::new();
    }
    let (lo, hi) = (4f64.ln(), (max as f64).ln());
    let mut sizes: Vec<usize> = (0..DFA_SCALES)
        .map(|j| (lo + (hi - lo) * j as f64 / (DFA_SCALES - 1) as f64).exp().round() as usize)
        .collect();
    sizes.dedup();
    sizes
}

fn dfa(x: &[f64], mean: f64) -> f64 {
    let sizes = dfa_box_sizes(x.len());
    if sizes.len() < 2 {
        return 0.0;
    }
    let mut profile = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    for &v in x {
        acc += v - mean;
        profile.push(acc);
    }
    let mut log_s = Vec::with_capacity(sizes.len());
    let mut log_f = Vec::with_capacity(sizes.len());
    for &s in &sizes {
        let boxes = x.len() / s;
        // Regressing on 0..s-1 has closed-form sums.
        let sf = s as f64;
        let mt = (sf - 1.0) / 2.0;
        let stt = sf * (sf * sf - 1.0) / 12.0;
        let mut resid = 0.0;
        for b in 0..boxes {
            let seg = &profile[b * s..(b + 1) * s];
            let my = seg.iter().sum::<f64>() / sf;
            let sty: f64 = seg.iter().enumerate().map(|(i, y)| (i as f64 - mt) * (y - my)).sum();
            let slope = sty / stt;
            resid += seg
                .iter()
                .enumerate()
                .map(|(i, y)| {
                    let e = y - (my + slope * (i as f64 - mt));
                    e * e
                })
                .sum::<f64>();
        }
        let f = (resid / (boxes * s) as f64).sqrt();
        if !(f > 0.0) {
            return 0.0;
        }
        log_s.push(sf.ln());
        log_f.push(f.ln());
    }
    ls_slope(&log_s, &log_f)
}

/// LZ76 phrase count (Kaspar & Schuster scan).
pub fn lz76_complexity(s: &[bool]) -> usize {
    let n = s.len();
    if n == 0 {
        return 0;
    }
    if n == 1 {
        return 1;
    }
    let (mut c, mut l, mut i, mut k, mut k_max) = (1usize, 1usize, 0usize, 1usize, 1usize);
    loop {
        if s[i + k - 1] == s[l + k - 1] {
            k += 1;
            if l + k > n {
                c += 1;
                break;
            }
        } else {
            k_max = k_max.max(k);
            i += 1;
            if i == l {
                c += 1;
                l += k_max;
                if l + 1 > n {
                    break;
                }
                i = 0;
                k = 1;
                k_max = 1;
            } else {
                k = 1;
            }
        }
    }
    c
}

fn lempel_ziv(x: &[f64], med: f64) -> f64 {
    let n = x.len();
    let bits: Vec<bool> = x.iter().map(|&v| v > med).collect();
    let c = lz76_complexity(&bits) as f64;
    c * (n as f64).log2() / n as f64
}

/// Ricker wavelet of width `a` sampled on `len` points centred on zero.
pub fn ricker(len: usize, a: f64) -> Vec<f64> {
    let amp = 2.0 / ((3.0 * a).sqrt() * PI.powf(0.25));
    let centre = (len as f64 - 1.0) / 2.0;
    (0..len)
        .map(|j| {
            let t = j as f64 - centre;
            let q = (t / a) * (t / a);
            amp * (1.0 - q) * (-t * t / (2.0 * a * a)).exp()
        })
        .collect()
}

fn wavelet_entropy(x: &[f64]) -> f64 {
    let n = x.len();
    let mut energies = [0.0f64; WAVELET_WIDTHS];
    for (w, e) in energies.iter_mut().enumerate() {
        let a = (w + 1) as f64;
        let len = (10 * (w + 1)).min(n);
        let psi = ricker(len, a);
        let start = (len - 1) / 2;
        let mut energy = 0.0;
        for out in 0..n {
            // Output `out` of the centred convolution is full-convolution
            // index `out + start`.
            let k = out + start;
            let j_lo = k.saturating_sub(n - 1);
            let j_hi = k.min(len - 1);
            let mut acc = 0.0;
            for j in j_lo..=j_hi {
                acc += x[k - j] * psi[j];
            }
            energy += acc * acc;
        }
        *e = energy;
    }
    shannon_bits(&energies)
}

fn lowest_freq_reaching(freqs: &[f64], weights: &[f64], fraction: f64, strict: bool) -> f64 {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let target = fraction * total;
    let mut acc = 0.0;
    for (f, w) in freqs.iter().zip(weights) {
        acc += w;
        if (strict && acc > target) || (!strict && acc >= target) {
            return *f;
        }
    }
    *freqs.last().expect("non-empty spectrum")
}

struct SpectralMoments {
    centroid: f64,
    spread: f64,
    skewness: f64,
    kurtosis: f64,
}

fn spectral_moments(spec: &Spectrum) -> SpectralMoments {
    let total: f64 = spec.mags.iter().sum();
    if total <= 0.0 {
        return SpectralMoments { centroid: 0.0, spread: 0.0, skewness: 0.0, kurtosis: 0.0 };
    }
    let centroid = spec.freqs.iter().zip(&spec.mags).map(|(f, m)| f * m).sum::<f64>() / total;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for (f, m) in spec.freqs.iter().zip(&spec.mags) {
        let d = f - centroid;
        let d2 = d * d;
        m2 += d2 * m;
        m3 += d2 * d * m;
        m4 += d2 * d2 * m;
    }
    let (m2, m3, m4) = (m2 / total, m3 / total, m4 / total);
    let spread = m2.sqrt();
    if spread <= 0.0 {
        return SpectralMoments { centroid, spread: 0.0, skewness: 0.0, kurtosis: 0.0 };
    }
    SpectralMoments { centroid, spread, skewness: m3 / spread.powi(3), kurtosis: m4 / (m2 * m2) }
}

fn spectral_variation(x: &[f64], rate: f64) -> f64 {
    let h = x.len() / 2;
    if h < 1 {
        return 0.0;
    }
    let a = Spectrum::new(&x[..h], rate);
    let b = Spectrum::new(&x[x.len() - h..], rate);
    let dot: f64 = a.mags.iter().zip(&b.mags).map(|(p, q)| p * q).sum();
    let na = a.mags.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.mags.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        1.0 - dot / (na * nb)
    }
}

/// Computes the full 54-feature catalog of one axis sampled at `rate` Hz.
pub fn compute_axis_features(x: &[f64], rate: f64) -> Result<AxisFeatures, FeatureError> {
    use FeatureKind as K;

    let n = x.len();
    if n < 2 {
        return Err(FeatureError::SeriesTooShort(n));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(FeatureError::InvalidRate(rate));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(FeatureError::NonFinite);
    }
    let nf = n as f64;
    let dt = 1.0 / rate;

    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[n - 1]);
    let constant = min == max;
    let mean = if constant { min } else { x.iter().sum::<f64>() / nf };
    let med = median_of_sorted(&sorted);
    let diffs: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();

    let (mut m2, mut m3, mut m4, mut abs_dev) = (0.0, 0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        abs_dev += d.abs();
    }
    if constant {
        (m2, m3, m4, abs_dev) = (0.0, 0.0, 0.0, 0.0);
    }
    let sum_sq_dev = m2;
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let energy: f64 = x.iter().map(|v| v * v).sum();
    let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();

    let mut out = [0.0f64; FEATURES_PER_AXIS];
    let mut set = |k: FeatureKind, v: f64| out[k.index()] = v;

    set(K::StandardDeviation, m2.sqrt());
    set(K::MinimumValue, min);
    set(K::MeanAbsoluteDeviation, abs_dev / nf);
    let abs_from_median: Vec<f64> = x.iter().map(|v| (v - med).abs()).collect();
    set(K::MedianAbsoluteDeviation, median(&abs_from_median));
    let sad: f64 = diffs.iter().map(|d| d.abs()).sum();
    set(K::MeanAbsoluteDifference, sad / (n - 1) as f64);
    set(K::SumAbsoluteDifferences, sad);
    set(K::SignalDistance, diffs.iter().map(|d| (1.0 + d * d).sqrt()).sum());
    set(K::PeakToPeak, max - min);
    set(K::AbsoluteEnergy, energy);
    set(K::AveragePower, energy / ((n - 1) as f64 * dt));
    set(K::MeanSquaredError, m2);

    let counts = histogram(x, min, max);
    let mode_bin = counts
        .iter()
        .enumerate()
        .fold(0usize, |best, (i, &c)| if c > counts[best] { i } else { best });
    let width = (max - min) / HISTOGRAM_BINS as f64;
    set(K::HistogramMode, min + (mode_bin as f64 + 0.5) * width);
    let weights: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    set(K::HistogramEntropy, shannon_bits(&weights));

    let lo = sorted[(0.5 * nf).ceil() as usize - 1];
    let hi = sorted[(0.75 * nf).ceil() as usize - 1];
    set(K::EcdfSlope, if hi > lo { 0.25 / (hi - lo) } else { 0.0 });

    set(
        K::TemporalCentroid,
        if energy > 0.0 { times.iter().zip(x).map(|(t, v)| t * v * v).sum::<f64>() / energy } else { 0.0 },
    );

    let sign_changes = diffs.windows(2).filter(|w| w[0] * w[1] < 0.0).count() as f64;
    let log_n = nf.log10();
    set(K::PetrosianFractalDimension, log_n / (log_n + (nf / (nf + 0.4 * sign_changes)).log10()));
    set(K::HiguchiFractalDimension, higuchi(x));
    set(K::DetrendedFluctuation, dfa(x, mean));
    set(K::LempelZivComplexity, lempel_ziv(x, med));
    set(K::WaveletEntropy, wavelet_entropy(x));

    // Temporal and remaining statistical features.
    set(K::Mean, mean);
    set(K::Median, med);
    set(K::MaximumValue, max);
    set(K::Variance, sum_sq_dev / (n - 1) as f64);
    set(K::RootMeanSquare, (energy / nf).sqrt());
    set(K::Skewness, if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 });
    set(K::Kurtosis, if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 });
    set(K::InterquartileRange, quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25));
    set(K::ZeroCrossings, x.windows(2).filter(|w| w[0] * w[1] < 0.0).count() as f64);
    set(K::PositiveTurnings, x.windows(3).filter(|w| w[0] < w[1] && w[1] > w[2]).count() as f64);
    set(K::NegativeTurnings, x.windows(3).filter(|w| w[0] > w[1] && w[1] < w[2]).count() as f64);
    let lag1: f64 = if constant {
        0.0
    } else {
        x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / sum_sq_dev
    };
    set(K::Autocorrelation, lag1);
    set(K::LinearTrendSlope, ls_slope(&times, x));
    set(K::TotalEnergy, x.windows(2).map(|w| 0.5 * (w[0] * w[0] + w[1] * w[1])).sum::<f64>() * dt);
    set(K::AreaUnderCurve, x.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>() * dt);
    set(K::MeanDiff, diffs.iter().sum::<f64>() / (n - 1) as f64);
    set(K::MedianDiff, median(&diffs));
    let peaks = if n > 2 * NEIGHBOURHOOD {
        (NEIGHBOURHOOD..n - NEIGHBOURHOOD)
            .filter(|&i| {
                (i - NEIGHBOURHOOD..=i + NEIGHBOURHOOD).all(|j| j == i || x[i] > x[j])
            })
            .count()
    } else {
        0
    };
    set(K::NeighbourhoodPeaks, peaks as f64);

    // Spectral features.
    let spec = Spectrum::new(x, rate);
    let power = spec.power();
    let total_power: f64 = power.iter().sum();
    let bins = spec.len();

    set(
        K::SpectralEntropy,
        if total_power > 0.0 { shannon_bits(&power) / (bins as f64).log2() } else { 0.0 },
    );
    set(K::SpectralSlope, ls_slope(&spec.freqs, &spec.mags));
    let moments = spectral_moments(&spec);
    set(K::SpectralCentroid, moments.centroid);
    set(K::SpectralSpread, moments.spread);
    set(K::SpectralSkewness, moments.skewness);
    set(K::SpectralKurtosis, moments.kurtosis);
    set(K::SpectralRollOff, lowest_freq_reaching(&spec.freqs, &power, 0.95, false));
    set(K::SpectralVariation, spectral_variation(x, rate));
    set(
        K::SpectralPositiveTurning,
        spec.mags.windows(3).filter(|w| w[0] < w[1] && w[1] > w[2]).count() as f64,
    );
    let (band_lo, band_hi) = HUMAN_RANGE_HZ;
    let in_band: f64 = spec
        .freqs
        .iter()
        .zip(&power)
        .filter(|(f, _)| **f >= band_lo && **f <= band_hi)
        .map(|(_, p)| p)
        .sum();
    set(K::HumanRangeEnergy, if total_power > 0.0 { in_band / total_power } else { 0.0 });

    let tail: f64 = spec.mags[1..].iter().sum();
    let decrease = if tail > 0.0 {
        spec.mags[1..]
            .iter()
            .enumerate()
            .map(|(j, m)| (m - spec.mags[0]) / (j + 1) as f64)
            .sum::<f64>()
            / tail
    } else {
        0.0
    };
    set(K::SpectralDecrease, decrease);
    set(K::MedianFrequency, lowest_freq_reaching(&spec.freqs, &spec.mags, 0.5, true));
    set(K::MaxFrequency, lowest_freq_reaching(&spec.freqs, &spec.mags, 0.95, true));
    let fundamental = spec.mags[1..]
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |best, (j, &m)| match best {
            Some((_, bm)) if bm >= m => best,
            _ if m > 0.0 => Some((j + 1, m)),
            _ => best,
        })
        .map_or(0.0, |(k, _)| spec.freqs[k]);
    set(K::FundamentalFrequency, fundamental);
    set(K::MaxPowerSpectrum, power.iter().copied().fold(0.0, f64::max) / (nf * rate));
    let bandwidth = lowest_freq_reaching(&spec.freqs, &power, 0.975, false)
        - lowest_freq_reaching(&spec.freqs, &power, 0.025, false);
    set(K::PowerBandwidth, bandwidth);

    Ok(AxisFeatures(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use FeatureKind as K;

    #[test]
    fn constant_series() {
        let c = 0.37;
        let f = compute_axis_features(&[c; 250], 100.0).unwrap();
        assert_eq!(f.get(K::StandardDeviation), 0.0);
        assert_eq!(f.get(K::SumAbsoluteDifferences), 0.0);
        assert_eq!(f.get(K::PeakToPeak), 0.0);
        assert!((f.get(K::AbsoluteEnergy) - 250.0 * c * c).abs() < 1e-12);
        assert_eq!(f.get(K::EcdfSlope), 0.0);
        assert_eq!(f.get(K::HiguchiFractalDimension), 0.0);
        assert_eq!(f.get(K::DetrendedFluctuation), 0.0);
        assert_eq!(f.get(K::Skewness), 0.0);
        assert_eq!(f.get(K::SpectralPositiveTurning), 0.0);
        assert_eq!(f.get(K::FundamentalFrequency), 0.0);
        assert!(f.0.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn zero_series_spectral_fallbacks() {
        let f = compute_axis_features(&[0.0; 250], 100.0).unwrap();
        for k in FeatureKind::ALL {
            if k.domain() == super::super::catalog::Domain::Spectral {
                assert_eq!(f.get(k), 0.0, "{k}");
            }
        }
        assert_eq!(f.get(K::AbsoluteEnergy), 0.0);
    }

    #[test]
    fn two_hz_sine_is_in_human_range() {
        let x: Vec<f64> = (0..250).map(|i| (2.0 * PI * 2.0 * i as f64 / 100.0).sin()).collect();
        let f = compute_axis_features(&x, 100.0).unwrap();
        assert!((f.get(K::HumanRangeEnergy) - 1.0).abs() < 0.05);
        assert_eq!(f.get(K::FundamentalFrequency), 2.0);
    }

    #[test]
    fn adversarial_inputs_are_finite() {
        let mut impulse = vec![0.0; 250];
        impulse[17] = 5.0;
        let alternating: Vec<f64> = (0..250).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let step: Vec<f64> = (0..250).map(|i| if i < 125 { 0.0 } else { 1.0 }).collect();
        let ramp: Vec<f64> = (0..250).map(|i| i as f64).collect();
        for x in [impulse, alternating, step, ramp, vec![1.0, -1.0], vec![3.0, 3.0]] {
            let f = compute_axis_features(&x, 100.0).unwrap();
            for (k, v) in f.iter() {
                assert!(v.is_finite(), "{k} = {v} for len {}", x.len());
            }
        }
    }

    #[test]
    fn too_short_or_bad_rate() {
        assert!(matches!(compute_axis_features(&[1.0], 100.0), Err(FeatureError::SeriesTooShort(1))));
        assert!(compute_axis_features(&[1.0, 2.0], 0.0).is_err());
        assert!(compute_axis_features(&[1.0, f64::NAN], 100.0).is_err());
    }

    #[test]
    fn lz_known_sequences() {
        // Classic example from Kaspar & Schuster: 0001101001000101 -> 6 phrases.
        let s: Vec<bool> = "0001101001000101".chars().map(|c| c == '1').collect();
        assert_eq!(lz76_complexity(&s), 6);
        assert_eq!(lz76_complexity(&[false; 10]), 2);
    }

    #[test]
    fn dfa_sizes_are_increasing() {
        let s = dfa_box_sizes(250);
        assert_eq!(s.first(), Some(&4));
        assert_eq!(s.last(), Some(&62));
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(dfa_box_sizes(15).is_empty());
    }
}
