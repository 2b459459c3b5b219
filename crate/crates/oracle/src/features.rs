//! Definition-level reference for the per-axis feature catalog.
//!
//! Deliberately slow: naive DFT, explicit full convolutions, direct phrase
//! search for Lempel-Ziv, explicit least squares per DFA box. Shares no code
//! with the production extractor.

use std::collections::BTreeMap;
use std::f64::consts::PI;

const FLOOR: f64 = 1e-10;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    // Normal equations of y = a + b x.
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let den = n * sxx - sx * sx;
    if den == 0.0 {
        0.0
    } else {
        (n * sxy - sx * sy) / den
    }
}

fn entropy_bits(w: &[f64]) -> f64 {
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut h = 0.0;
    for &v in w {
        if v > 0.0 {
            let p = v / total;
            h -= p * p.log2();
        }
    }
    h
}

/// Naive one-sided DFT magnitudes with the relative noise floor applied.
pub fn dft_magnitudes(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut mags: Vec<f64> = (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &v) in x.iter().enumerate() {
                let ang = -2.0 * PI * ((k * j) % n) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect();
    let peak = mags.iter().cloned().fold(0.0, f64::max);
    for m in &mut mags {
        if *m <= peak * FLOOR {
            *m = 0.0;
        }
    }
    mags
}

fn first_freq_where(freqs: &[f64], w: &[f64], frac: f64, strict: bool) -> f64 {
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    for k in 0..w.len() {
        let c: f64 = w[..=k].iter().sum();
        if if strict { c > frac * total } else { c >= frac * total } {
            return freqs[k];
        }
    }
    freqs[freqs.len() - 1]
}

/// Phrase-by-phrase LZ76: each phrase is the shortest substring that is not
/// a substring of everything before its last symbol.
pub fn lz76_naive(s: &[bool]) -> usize {
    let n = s.len();
    let contains = |hay: &[bool], needle: &[bool]| {
        needle.len() <= hay.len() && hay.windows(needle.len()).any(|w| w == needle)
    };
    let mut c = 0;
    let mut i = 0;
    while i < n {
        let mut l = 1;
        while i + l <= n && contains(&s[..i + l - 1], &s[i..i + l]) {
            l += 1;
        }
        c += 1;
        i += l;
    }
    c
}

fn ricker_wavelet(points: usize, a: f64) -> Vec<f64> {
    let norm = 2.0 / ((3.0 * a).sqrt() * PI.powf(0.25));
    (0..points)
        .map(|j| {
            let t = j as f64 - (points as f64 - 1.0) / 2.0;
            norm * (1.0 - t * t / (a * a)) * (-(t * t) / (2.0 * a * a)).exp()
        })
        .collect()
}

fn higuchi(x: &[f64]) -> f64 {
    let n = x.len();
    let kmax = 10.min(n / 2);
    if kmax < 2 {
        return 0.0;
    }
    let mut lx = vec![];
    let mut ly = vec![];
    for k in 1..=kmax {
        let mut lm = vec![];
        for m in 1..=k {
            // 1-based indices m, m+k, ..., m + M k
            let big_m = (n - m) / k;
            let mut s = 0.0;
            for i in 1..=big_m {
                s += (x[m + i * k - 1] - x[m + (i - 1) * k - 1]).abs();
            }
            lm.push(s * (n as f64 - 1.0) / (big_m as f64 * k as f64) / k as f64);
        }
        let l = mean(&lm);
        if l <= 0.0 {
            return 0.0;
        }
        lx.push((1.0 / k as f64).ln());
        ly.push(l.ln());
    }
    slope(&lx, &ly)
}

fn dfa(x: &[f64]) -> f64 {
    let n = x.len();
    let top = n / 4;
    if top < 4 {
        return 0.0;
    }
    let mut sizes: Vec<usize> = (0..10)
        .map(|j| (4f64.ln() + ((top as f64).ln() - 4f64.ln()) * j as f64 / 9.0).exp().round() as usize)
        .collect();
    sizes.dedup();
    if sizes.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    let mut y = vec![0.0; n];
    let mut acc = 0.0;
    for i in 0..n {
        acc += x[i] - m;
        y[i] = acc;
    }
    let mut ls = vec![];
    let mut lf = vec![];
    for &s in &sizes {
        let boxes = n / s;
        let mut total = 0.0;
        for b in 0..boxes {
            let seg = &y[b * s..(b + 1) * s];
            let t: Vec<f64> = (0..s).map(|i| i as f64).collect();
            let bslope = slope(&t, seg);
            let intercept = mean(seg) - bslope * mean(&t);
            for i in 0..s {
                let r = seg[i] - (intercept + bslope * t[i]);
                total += r * r;
            }
        }
        let f = (total / (boxes * s) as f64).sqrt();
        if !(f > 0.0) {
            return 0.0;
        }
        ls.push((s as f64).ln());
        lf.push(f.ln());
    }
    slope(&ls, &lf)
}

/// All 54 per-axis features by name.
pub fn axis_features(x: &[f64], rate: f64) -> BTreeMap<&'static str, f64> {
    let n = x.len();
    let nf = n as f64;
    let dt = 1.0 / rate;
    let mut out = BTreeMap::new();

    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mu = mean(x);
    let med = median(x);
    let d: Vec<f64> = (1..n).map(|i| x[i] - x[i - 1]).collect();
    let t: Vec<f64> = (0..n).map(|i| i as f64 / rate).collect();
    let var_pop = x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / nf;
    let energy: f64 = x.iter().map(|v| v * v).sum();

    out.insert("standard_deviation", var_pop.sqrt());
    out.insert("minimum_value", min);
    out.insert("mean_absolute_deviation", x.iter().map(|v| (v - mu).abs()).sum::<f64>() / nf);
    out.insert("median_absolute_deviation", median(&x.iter().map(|v| (v - med).abs()).collect::<Vec<_>>()));
    out.insert("mean_absolute_difference", d.iter().map(|v| v.abs()).sum::<f64>() / (nf - 1.0));
    out.insert("sum_of_absolute_differences", d.iter().map(|v| v.abs()).sum::<f64>());
    out.insert("signal_distance", d.iter().map(|v| (1.0 + v * v).sqrt()).sum::<f64>());
    out.insert("peak_to_peak_distance", max - min);
    out.insert("absolute_energy", energy);
    out.insert("average_power", energy / (t[n - 1] - t[0]));
    out.insert("mean_squared_error", var_pop);

    // Histogram over [min, max] with 10 equal-width bins, last bin closed.
    let w = (max - min) / 10.0;
    let mut counts = [0.0f64; 10];
    for &v in x {
        let mut placed = false;
        for b in 0..10 {
            let lo = min + b as f64 * w;
            if b == 9 || (v - min) / w < (b + 1) as f64 {
                if (v - min) / w >= b as f64 || b == 0 || v == lo {
                    counts[b] += 1.0;
                    placed = true;
                    break;
                }
            }
        }
        if !placed {
            counts[9] += 1.0;
        }
    }
    let mut best = 0;
    for b in 1..10 {
        if counts[b] > counts[best] {
            best = b;
        }
    }
    out.insert("histogram_mode", min + (best as f64 + 0.5) * w);
    out.insert("histogram_entropy", entropy_bits(&counts));

    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // ECDF value at sorted[i] is (i+1)/n; first point reaching p.
    let ecdf_at = |p: f64| sorted[(0..n).find(|&i| (i + 1) as f64 / nf >= p).unwrap()];
    let (xa, xb) = (ecdf_at(0.5), ecdf_at(0.75));
    out.insert("ecdf_slope", if xb == xa { 0.0 } else { (0.75 - 0.5) / (xb - xa) });

    out.insert(
        "temporal_centroid",
        if energy == 0.0 { 0.0 } else { (0..n).map(|i| t[i] * x[i] * x[i]).sum::<f64>() / energy },
    );
    let nd = (1..d.len()).filter(|&i| d[i] * d[i - 1] < 0.0).count() as f64;
    out.insert("petrosian_fractal_dimension", nf.log10() / (nf.log10() + (nf / (nf + 0.4 * nd)).log10()));
    out.insert("higuchi_fractal_dimension", higuchi(x));
    out.insert("detrended_fluctuation_analysis", dfa(x));
    let bits: Vec<bool> = x.iter().map(|&v| v > med).collect();
    out.insert("lempel_ziv_complexity", lz76_naive(&bits) as f64 / (nf / nf.log2()));

    let mut energies = vec![];
    for a in 1..=10usize {
        let len = (10 * a).min(n);
        let psi = ricker_wavelet(len, a as f64);
        let mut full = vec![0.0; n + len - 1];
        for i in 0..n {
            for j in 0..len {
                full[i + j] += x[i] * psi[j];
            }
        }
        let start = (len - 1) / 2;
        energies.push(full[start..start + n].iter().map(|v| v * v).sum::<f64>());
    }
    out.insert("wavelet_entropy", entropy_bits(&energies));

    let mags = dft_magnitudes(x);
    let freqs: Vec<f64> = (0..mags.len()).map(|k| k as f64 * rate / nf).collect();
    let pow: Vec<f64> = mags.iter().map(|m| m * m).collect();
    let ptot: f64 = pow.iter().sum();
    let mtot: f64 = mags.iter().sum();
    out.insert("spectral_entropy", if ptot == 0.0 { 0.0 } else { entropy_bits(&pow) / (mags.len() as f64).log2() });
    out.insert("spectral_slope", slope(&freqs, &mags));
    let (mut centroid, mut spread, mut skew, mut kurt) = (0.0, 0.0, 0.0, 0.0);
    if mtot > 0.0 {
        centroid = (0..mags.len()).map(|k| freqs[k] * mags[k]).sum::<f64>() / mtot;
        let mom = |p: i32| (0..mags.len()).map(|k| (freqs[k] - centroid).powi(p) * mags[k]).sum::<f64>() / mtot;
        spread = mom(2).sqrt();
        if spread > 0.0 {
            skew = mom(3) / spread.powi(3);
            kurt = mom(4) / spread.powi(4);
        }
    }
    out.insert("spectral_skewness", skew);
    out.insert("spectral_kurtosis", kurt);
    out.insert("spectral_centroid", centroid);
    out.insert("spectral_spread", spread);
    out.insert("spectral_roll_off", first_freq_where(&freqs, &pow, 0.95, false));

    let h = n / 2;
    let ma = dft_magnitudes(&x[..h]);
    let mb = dft_magnitudes(&x[n - h..]);
    let na = ma.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = mb.iter().map(|v| v * v).sum::<f64>().sqrt();
    let var = if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        1.0 - ma.iter().zip(&mb).map(|(a, b)| a * b).sum::<f64>() / (na * nb)
    };
    out.insert("spectral_variation", var);
    out.insert(
        "spectral_positive_turning",
        (1..mags.len() - 1).filter(|&k| mags[k] > mags[k - 1] && mags[k] > mags[k + 1]).count() as f64,
    );
    let band: f64 = (0..mags.len()).filter(|&k| freqs[k] >= 0.6 && freqs[k] <= 2.5).map(|k| pow[k]).sum();
    out.insert("human_range_energy", if ptot == 0.0 { 0.0 } else { band / ptot });

    out.insert("mean", mu);
    out.insert("median", med);
    out.insert("maximum_value", max);
    out.insert("variance", x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (nf - 1.0));
    out.insert("root_mean_square", (energy / nf).sqrt());
    let m2 = var_pop;
    let m3 = x.iter().map(|v| (v - mu).powi(3)).sum::<f64>() / nf;
    let m4 = x.iter().map(|v| (v - mu).powi(4)).sum::<f64>() / nf;
    out.insert("skewness", if m2 == 0.0 { 0.0 } else { m3 / m2.powf(1.5) });
    out.insert("kurtosis", if m2 == 0.0 { 0.0 } else { m4 / (m2 * m2) - 3.0 });
    let q = |p: f64| {
        let pos = p * (nf - 1.0);
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        if i + 1 < n {
            sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
        } else {
            sorted[i]
        }
    };
    out.insert("interquartile_range", q(0.75) - q(0.25));
    out.insert("zero_crossing_count", (1..n).filter(|&i| x[i] * x[i - 1] < 0.0).count() as f64);
    out.insert("positive_turning_count", (1..n - 1).filter(|&i| x[i] > x[i - 1] && x[i] > x[i + 1]).count() as f64);
    out.insert("negative_turning_count", (1..n - 1).filter(|&i| x[i] < x[i - 1] && x[i] < x[i + 1]).count() as f64);
    let den: f64 = x.iter().map(|v| (v - mu).powi(2)).sum();
    out.insert(
        "autocorrelation_lag1",
        if den == 0.0 { 0.0 } else { (0..n - 1).map(|i| (x[i] - mu) * (x[i + 1] - mu)).sum::<f64>() / den },
    );
    out.insert("linear_trend_slope", slope(&t, x));
    out.insert("total_energy", (0..n - 1).map(|i| (t[i + 1] - t[i]) * (x[i].powi(2) + x[i + 1].powi(2)) / 2.0).sum());
    out.insert("area_under_curve", (0..n - 1).map(|i| (t[i + 1] - t[i]) * (x[i] + x[i + 1]) / 2.0).sum());
    out.insert("mean_diff", mean(&d));
    out.insert("median_diff", median(&d));
    let mut peaks = 0.0;
    if n > 20 {
        for i in 10..n - 10 {
            let lo = &x[i - 10..i];
            let hi = &x[i + 1..=i + 10];
            if lo.iter().chain(hi).all(|&v| x[i] > v) {
                peaks += 1.0;
            }
        }
    }
    out.insert("neighbourhood_peaks", peaks);

    let tail: f64 = mags[1..].iter().sum();
    out.insert(
        "spectral_decrease",
        if tail == 0.0 { 0.0 } else { (1..mags.len()).map(|k| (mags[k] - mags[0]) / k as f64).sum::<f64>() / tail },
    );
    out.insert("median_frequency", first_freq_where(&freqs, &mags, 0.5, true));
    out.insert("max_frequency", first_freq_where(&freqs, &mags, 0.95, true));
    let mut fk = 0;
    for k in 1..mags.len() {
        if mags[k] > 0.0 && (fk == 0 || mags[k] > mags[fk]) {
            fk = k;
        }
    }
    out.insert("fundamental_frequency", if fk == 0 { 0.0 } else { freqs[fk] });
    out.insert("max_power_spectrum", pow.iter().cloned().fold(0.0, f64::max) / (nf * rate));
    out.insert(
        "power_bandwidth",
        first_freq_where(&freqs, &pow, 0.975, false) - first_freq_where(&freqs, &pow, 0.025, false),
    );
    let _ = dt;
    out
}
