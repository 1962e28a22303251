//! Sampled autocovariances from continuous-time spectra by folding onto a
//! fine frequency grid and inverting with an FFT.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::fft;

/// How the spectrum behaves beyond the sampled band.
#[derive(Debug, Clone, Copy)]
pub enum Support {
    /// Zero for `|omega| > limit`.
    BandLimited(f64),
    /// Decays like `amp_pos |omega|^-p_pos` at `+inf` and `amp_neg |omega|^-p_neg` at `-inf`.
    PowerTail {
        amp_pos: f64,
        p_pos: f64,
        amp_neg: f64,
        p_neg: f64,
    },
    /// Fast decay; `wraps` images on each side are enough.
    Rapid { wraps: usize },
}

const POWER_WRAPS: i64 = 32;
const MAX_GRID: usize = 1 << 22;

/// Grid size used for `n_lags` lags of a process with decay rate `rate`.
pub fn grid_size(n_lags: usize, delta: f64, rate: f64) -> usize {
    let by_decay = if rate > 0.0 {
        (40.0 / (rate * delta)).ceil() as usize
    } else {
        0
    };
    (8 * n_lags).max(by_decay).max(64).next_power_of_two().min(MAX_GRID)
}

/// Derivative discontinuity of a band-limited spectrum: `f'(x+) - f'(x-)`
/// at position `x`.
#[derive(Debug, Clone, Copy)]
pub struct Kink {
    pub at: f64,
    pub jump: Complex64,
}

/// Band-limited variant of [`lags_from_spectrum`] with trapezoid corrections
/// for derivative discontinuities, which otherwise limit accuracy to `O(h^2)`.
pub fn lags_from_band_limited(
    f: &dyn Fn(f64) -> Complex64,
    n_lags: usize,
    delta: f64,
    limit: f64,
    kinks: &[Kink],
    m: usize,
) -> Vec<Complex64> {
    let mut lags = lags_from_spectrum(f, n_lags, delta, Support::BandLimited(limit), m);
    add_kink_corrections(&mut lags, kinks, delta, m);
    lags
}

fn add_kink_corrections(lags: &mut [Complex64], kinks: &[Kink], delta: f64, m: usize) {
    let h = 2.0 * PI / (m as f64 * delta);
    for k in kinks {
        let theta = (k.at / h).rem_euclid(1.0);
        let b2 = theta * theta - theta + 1.0 / 6.0;
        let coef = k.jump * (h * h * b2 / (4.0 * PI));
        for (tau, v) in lags.iter_mut().enumerate() {
            *v += coef * Complex64::from_polar(1.0, k.at * tau as f64 * delta);
        }
    }
}

/// Frequency beyond which [`lags_with_tail`] replaces the image sum by a
/// tail integral.
pub fn tail_edge(delta: f64, wraps: i64) -> f64 {
    (wraps as f64 + 0.5) * 2.0 * PI / delta
}

/// [`lags_from_spectrum`] over `wraps` images each side, with the
/// folded remainder supplied by `tail(u)`, the integral of `f` over
/// `|omega| > u` on one side. Kinks are corrected as in
/// [`lags_from_band_limited`] and must lie inside the edge.
pub fn lags_with_tail(
    f: &dyn Fn(f64) -> Complex64,
    n_lags: usize,
    delta: f64,
    wraps: i64,
    tail: &dyn Fn(f64) -> Complex64,
    kinks: &[Kink],
    m: usize,
) -> Vec<Complex64> {
    let dw = 2.0 * PI / (m as f64 * delta);
    let mi = m as i64;
    let mut bins = vec![Complex64::new(0.0, 0.0); m];
    for k in -(wraps * mi) - mi / 2..wraps * mi + mi / 2 {
        bins[k.rem_euclid(mi) as usize] += f(k as f64 * dw);
    }
    let period = 2.0 * PI / delta;
    let edge = tail_edge(delta, wraps);
    for (k, b) in bins.iter_mut().enumerate() {
        let signed = if k < m / 2 { k as i64 } else { k as i64 - mi };
        let w = signed as f64 * dw;
        let (a_pos, a_neg) = (edge + w, edge - w);
        // Outward derivatives at both edges, for the midpoint-rule corrections.
        let g = |x: f64| f(a_pos + x) + f(-a_neg - x);
        let hd = period / 16.0;
        let d1 = (g(hd) - g(-hd)) / (2.0 * hd);
        let d3 = (g(2.0 * hd) - 2.0 * g(hd) + 2.0 * g(-hd) - g(-2.0 * hd)) / (2.0 * hd.powi(3));
        *b += (tail(a_pos) + tail(a_neg)) / period + d1 * (period / 24.0)
            - d3 * (7.0 * period.powi(3) / 5760.0);
    }
    fft::inverse(&mut bins);
    let scale = 1.0 / (m as f64 * delta);
    let mut lags: Vec<Complex64> = bins.iter().take(n_lags).map(|v| v * scale).collect();
    add_kink_corrections(&mut lags, kinks, delta, m);
    lags
}

/// `c(k) = (1/2pi) int f(omega) e^{i omega k delta} d omega` for `k = 0..n_lags`.
pub fn lags_from_spectrum(
    f: &dyn Fn(f64) -> Complex64,
    n_lags: usize,
    delta: f64,
    support: Support,
    m: usize,
) -> Vec<Complex64> {
    let dw = 2.0 * PI / (m as f64 * delta);
    let mut bins = vec![Complex64::new(0.0, 0.0); m];
    let mi = m as i64;
    let add_range = |lo: i64, hi: i64, bins: &mut [Complex64]| {
        for k in lo..hi {
            bins[k.rem_euclid(mi) as usize] += f(k as f64 * dw);
        }
    };
    match support {
        Support::BandLimited(limit) => {
            let kmax = (limit / dw).ceil() as i64;
            add_range(-kmax, kmax + 1, &mut bins);
        }
        Support::Rapid { wraps } => {
            let w = wraps as i64;
            add_range(-(w * mi) - mi / 2, w * mi + mi / 2, &mut bins);
        }
        Support::PowerTail {
            amp_pos,
            p_pos,
            amp_neg,
            p_neg,
        } => {
            add_range(-(POWER_WRAPS * mi) - mi / 2, POWER_WRAPS * mi + mi / 2, &mut bins);
            let period = 2.0 * PI / delta;
            let edge = (POWER_WRAPS as f64 + 0.5) * period;
            for (k, b) in bins.iter_mut().enumerate() {
                let signed = if k < m / 2 { k as i64 } else { k as i64 - mi };
                let w = signed as f64 * dw;
                let tail = |amp: f64, p: f64, u: f64| amp * u.powf(1.0 - p) / ((p - 1.0) * period);
                b.re += tail(amp_pos, p_pos, edge + w) + tail(amp_neg, p_neg, edge - w);
            }
        }
    }
    fft::inverse(&mut bins);
    let scale = 1.0 / (m as f64 * delta);
    bins.iter().take(n_lags).map(|v| v * scale).collect()
}
