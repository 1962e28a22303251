//! Tapers, discrete Fourier transforms and spectral estimates.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::series::{FourierGrid, SampledSeries, Sided};

pub const DEFAULT_DPSS_NW: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaperKind {
    Uniform,
    Dpss { nw: f64 },
    Cosine,
}

impl Default for TaperKind {
    fn default() -> Self {
        TaperKind::Uniform
    }
}

impl fmt::Display for TaperKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaperKind::Uniform => write!(f, "uniform"),
            TaperKind::Dpss { nw } => write!(f, "dpss:{nw}"),
            TaperKind::Cosine => write!(f, "cosine"),
        }
    }
}

impl FromStr for TaperKind {
    type Err = Error;

    /// Accepts `uniform`, `cosine`, `dpss` or `dpss:<NW>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "uniform" | "none" => Ok(TaperKind::Uniform),
            "cosine" | "hann" => Ok(TaperKind::Cosine),
            "dpss" => Ok(TaperKind::Dpss {
                nw: DEFAULT_DPSS_NW,
            }),
            _ => match s.strip_prefix("dpss:") {
                Some(v) => v
                    .parse::<f64>()
                    .map(|nw| TaperKind::Dpss { nw })
                    .map_err(|_| Error::Domain(format!("bad dpss bandwidth `{v}`"))),
                None => Err(Error::Domain(format!("unknown taper `{s}`"))),
            },
        }
    }
}

/// A unit-energy data taper together with its autocorrelation sequence
/// `kappa(tau) = sum_t h_t h_{t+tau}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Taper {
    kind: TaperKind,
    weights: Arc<[f64]>,
    autocorrelation: Arc<[f64]>,
}

impl Taper {
    pub fn kind(&self) -> TaperKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn autocorrelation(&self) -> &[f64] {
        &self.autocorrelation
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        self.kind == TaperKind::Uniform
    }

    /// Fraction of energy inside `|f| <= NW/N` for a dpss taper.
    pub fn concentration(&self) -> Option<f64> {
        match self.kind {
            TaperKind::Dpss { nw } => Some(sinc_quadratic_form(&self.weights, nw / self.len() as f64)),
            _ => None,
        }
    }
}

fn sinc_quadratic_form(h: &[f64], w: f64) -> f64 {
    let n = h.len();
    // Toeplitz form: sum over lags of a(tau) * autocorrelation(tau).
    let kappa = autocorrelation(h);
    let mut total = 2.0 * w * kappa[0];
    for (tau, k) in kappa.iter().enumerate().take(n).skip(1) {
        let a = (2.0 * PI * w * tau as f64).sin() / (PI * tau as f64);
        total += 2.0 * a * k;
    }
    total
}

fn autocorrelation(h: &[f64]) -> Vec<f64> {
    let n = h.len();
    let m = (2 * n).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (b, &v) in buf.iter_mut().zip(h) {
        b.re = v;
    }
    fft::forward(&mut buf);
    for b in buf.iter_mut() {
        *b = Complex64::new(b.norm_sqr(), 0.0);
    }
    fft::inverse(&mut buf);
    buf.iter().take(n).map(|c| c.re / m as f64).collect()
}

#[derive(Hash, PartialEq, Eq)]
struct TaperKey(u8, u64, usize);

fn cache() -> &'static RwLock<HashMap<TaperKey, Taper>> {
    static CACHE: OnceLock<RwLock<HashMap<TaperKey, Taper>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Builds (or fetches from the process-wide cache) a taper of length `n`.
pub fn make_taper(kind: TaperKind, n: usize) -> Result<Taper> {
    if n < 2 {
        return Err(Error::Size(format!("taper length must be >= 2, got {n}")));
    }
    let key = match kind {
        TaperKind::Uniform => TaperKey(0, 0, n),
        TaperKind::Dpss { nw } => {
            if !(nw > 0.0) || nw >= n as f64 / 2.0 {
                return Err(Error::Domain(format!(
                    "dpss bandwidth NW must lie in (0, n/2), got {nw} for n = {n}"
                )));
            }
            TaperKey(1, nw.to_bits(), n)
        }
        TaperKind::Cosine => TaperKey(2, 0, n),
    };
    if let Some(t) = cache().read().expect("taper cache poisoned").get(&key) {
        return Ok(t.clone());
    }
    let weights = match kind {
        TaperKind::Uniform => vec![1.0 / (n as f64).sqrt(); n],
        TaperKind::Dpss { nw } => dpss(n, nw),
        TaperKind::Cosine => cosine(n),
    };
    let autocorrelation = match kind {
        TaperKind::Uniform => (0..n).map(|tau| 1.0 - tau as f64 / n as f64).collect(),
        _ => autocorrelation(&weights),
    };
    let taper = Taper {
        kind,
        weights: weights.into(),
        autocorrelation: autocorrelation.into(),
    };
    cache()
        .write()
        .expect("taper cache poisoned")
        .insert(key, taper.clone());
    Ok(taper)
}

fn normalize(mut h: Vec<f64>) -> Vec<f64> {
    let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    h.iter_mut().for_each(|v| *v /= norm);
    h
}

fn cosine(n: usize) -> Vec<f64> {
    normalize(
        (1..=n)
            .map(|t| 1.0 - (2.0 * PI * t as f64 / (n as f64 + 1.0)).cos())
            .collect(),
    )
}

/// Zeroth Slepian sequence via the commuting tridiagonal matrix.
fn dpss(n: usize, nw: f64) -> Vec<f64> {
    let w = nw / n as f64;
    let c = (2.0 * PI * w).cos();
    let diag: Vec<f64> = (0..n)
        .map(|t| {
            let a = (n as f64 - 1.0 - 2.0 * t as f64) / 2.0;
            a * a * c
        })
        .collect();
    let off: Vec<f64> = (1..n).map(|t| t as f64 * (n - t) as f64 / 2.0).collect();
    let lambda = largest_tridiagonal_eigenvalue(&diag, &off);
    let mut v = inverse_iteration(&diag, &off, lambda);
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    normalize(v)
}

/// Number of eigenvalues strictly below `x` (Sturm sequence count).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 { f64::EPSILON * off[i - 1].abs().max(1.0) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn largest_tridiagonal_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    let radius = |i: usize| {
        let l = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let r = if i + 1 < n { off[i].abs() } else { 0.0 };
        l + r
    };
    let mut lo = (0..n).map(|i| diag[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..n).map(|i| diag[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) >= n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn inverse_iteration(diag: &[f64], off: &[f64], lambda: f64) -> Vec<f64> {
    let n = diag.len();
    let scale = diag.iter().chain(off).fold(1.0f64, |m, v| m.max(v.abs()));
    let shift = lambda + 1e-10 * scale;
    let mut v = vec![1.0; n];
    for _ in 0..4 {
        // Thomas algorithm on (T - shift I) x = v.
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let guard = |p: f64| if p.abs() < 1e-300 { 1e-300 } else { p };
        let mut p = guard(diag[0] - shift);
        c[0] = if n > 1 { off[0] / p } else { 0.0 };
        d[0] = v[0] / p;
        for i in 1..n {
            p = guard(diag[i] - shift - off[i - 1] * c[i - 1]);
            c[i] = if i + 1 < n { off[i] / p } else { 0.0 };
            d[i] = (v[i] - off[i - 1] * d[i - 1]) / p;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        v = normalize(x);
    }
    v
}

/// Tapered DFT `J(omega) = sqrt(delta) sum_t h_t X_t e^{-i omega t delta}`,
/// `t = 1..N`, on the two-sided Fourier grid.
#[derive(Debug, Clone)]
pub struct Dft {
    grid: FourierGrid,
    bins: Vec<Complex64>,
}

impl Dft {
    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    /// Value at signed Fourier index `j`.
    pub fn at(&self, j: i64) -> Complex64 {
        self.bins[self.grid.fft_bin(j)]
    }

    /// Values in grid order.
    pub fn values(&self) -> Vec<Complex64> {
        self.grid.indices().iter().map(|&j| self.at(j)).collect()
    }
}

pub fn dft(series: &SampledSeries, taper: &Taper) -> Result<Dft> {
    let n = series.len();
    if taper.len() != n {
        return Err(Error::Size(format!(
            "taper length {} does not match series length {n}",
            taper.len()
        )));
    }
    let mut bins: Vec<Complex64> = series
        .values()
        .iter()
        .zip(taper.weights())
        .map(|(x, h)| x * *h)
        .collect();
    fft::forward(&mut bins);
    let root = series.delta().sqrt();
    for (j, b) in bins.iter_mut().enumerate() {
        *b *= Complex64::from_polar(root, -2.0 * PI * j as f64 / n as f64);
    }
    Ok(Dft {
        grid: FourierGrid::new(n, series.delta(), Sided::Two)?,
        bins,
    })
}

/// `|J(omega)|^2` on a Fourier grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    pub grid: FourierGrid,
    pub values: Vec<f64>,
    pub taper: TaperKind,
}

impl SpectralEstimate {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("omega\ts_hat\n");
        for (w, v) in self.grid.frequencies().iter().zip(&self.values) {
            writeln!(out, "{w}\t{v}").expect("writing to a String cannot fail");
        }
        out
    }
}

/// Tapered periodogram. One-sided suits real series; complex series need
/// the two-sided grid.
pub fn periodogram(series: &SampledSeries, taper: &Taper, sided: Sided) -> Result<SpectralEstimate> {
    let d = dft(series, taper)?;
    let grid = FourierGrid::new(series.len(), series.delta(), sided)?;
    let values = grid.indices().iter().map(|&j| d.at(j).norm_sqr()).collect();
    Ok(SpectralEstimate {
        grid,
        values,
        taper: taper.kind(),
    })
}

/// Rotary DFT pair on the one-sided grid: `J_+(w) = J_Z(w)` and
/// `J_-(w) = conj(J_Z(-w))`.
#[derive(Debug, Clone)]
pub struct RotaryDft {
    pub grid: FourierGrid,
    pub plus: Vec<Complex64>,
    pub minus: Vec<Complex64>,
}

impl RotaryDft {
    /// Cartesian DFTs `(J_X, J_Y)` of the real and imaginary parts.
    pub fn cartesian(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        let i2 = Complex64::new(0.0, 2.0);
        self.plus
            .iter()
            .zip(&self.minus)
            .map(|(p, m)| ((p + m) / 2.0, (p - m) / i2))
            .unzip()
    }
}

pub fn rotary_dft(series: &SampledSeries, taper: &Taper) -> Result<RotaryDft> {
    let d = dft(series, taper)?;
    let grid = FourierGrid::new(series.len(), series.delta(), Sided::One)?;
    let plus = grid.indices().iter().map(|&j| d.at(j)).collect();
    let minus = grid.indices().iter().map(|&j| d.at(-j).conj()).collect();
    Ok(RotaryDft { grid, plus, minus })
}

/// Raw rotary auto- and cross-spectral estimates.
#[derive(Debug, Clone)]
pub struct RotaryEstimate {
    pub grid: FourierGrid,
    pub s_pp: Vec<f64>,
    pub s_mm: Vec<f64>,
    pub s_pm: Vec<Complex64>,
}

impl RotaryEstimate {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("omega\ts_pp\ts_mm\tre_s_pm\tim_s_pm\n");
        for (k, w) in self.grid.frequencies().iter().enumerate() {
            writeln!(
                out,
                "{w}\t{}\t{}\t{}\t{}",
                self.s_pp[k], self.s_mm[k], self.s_pm[k].re, self.s_pm[k].im
            )
            .expect("writing to a String cannot fail");
        }
        out
    }
}

pub fn rotary_cross_estimate(dft: &RotaryDft) -> RotaryEstimate {
    RotaryEstimate {
        grid: dft.grid.clone(),
        s_pp: dft.plus.iter().map(|v| v.norm_sqr()).collect(),
        s_mm: dft.minus.iter().map(|v| v.norm_sqr()).collect(),
        s_pm: dft
            .plus
            .iter()
            .zip(&dft.minus)
            .map(|(p, m)| p * m.conj())
            .collect(),
    }
}

/// Fejer kernel normalized to integrate to one over `[-pi/delta, pi/delta]`.
pub fn fejer_kernel(omega: f64, n: usize, delta: f64) -> f64 {
    let nf = n as f64;
    let s = (omega * delta / 2.0).sin();
    if s.abs() < 1e-8 {
        // Limit expansion around the peaks of the periodic kernel.
        let x = (omega * delta / 2.0) - (omega * delta / (2.0 * PI)).round() * PI;
        let ratio = nf * nf * (1.0 - (nf * nf - 1.0) * x * x / 3.0);
        return delta / (2.0 * PI * nf) * ratio;
    }
    let num = (nf * omega * delta / 2.0).sin();
    delta / (2.0 * PI * nf) * num * num / (s * s)
}

/// One frequency of a spectral matrix in one of three representations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "representation", rename_all = "snake_case")]
pub enum SpectralRow {
    /// `S_XX(w)`, `S_YY(w)`, `S_XY(w)`.
    Cartesian {
        s_xx: f64,
        s_yy: f64,
        s_xy: Complex64,
    },
    /// `S_ZZ(w)`, `S_ZZ(-w)`, `R_ZZ(w)`.
    Complex {
        s_zz: f64,
        s_zz_mirror: f64,
        r_zz: Complex64,
    },
    /// `S_++(|w|)`, `S_--(|w|)`, `S_+-(|w|)`.
    Rotary {
        s_pp: f64,
        s_mm: f64,
        s_pm: Complex64,
    },
    /// Rotary quantities at zero frequency, where `R_+-(0)` is also needed.
    RotaryZero {
        s_pp: f64,
        s_mm: f64,
        s_pm: f64,
        r_pm: Complex64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Cartesian,
    Complex,
    Rotary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencySign {
    Positive,
    Negative,
    Zero,
}

impl FrequencySign {
    pub fn of(omega: f64) -> Self {
        if omega > 0.0 {
            FrequencySign::Positive
        } else if omega < 0.0 {
            FrequencySign::Negative
        } else {
            FrequencySign::Zero
        }
    }
}

fn to_complex(row: SpectralRow, sign: FrequencySign) -> Result<(f64, f64, Complex64)> {
    Ok(match row {
        SpectralRow::Complex {
            s_zz,
            s_zz_mirror,
            r_zz,
        } => (s_zz, s_zz_mirror, r_zz),
        SpectralRow::Cartesian { s_xx, s_yy, s_xy } => {
            // S_XY(-w) = conj(S_XY(w)).
            let sum = s_xx + s_yy;
            (
                sum + 2.0 * s_xy.im,
                sum - 2.0 * s_xy.im,
                Complex64::new(s_xx - s_yy, 2.0 * s_xy.re),
            )
        }
        SpectralRow::Rotary { s_pp, s_mm, s_pm } => match sign {
            FrequencySign::Positive => (s_pp, s_mm, s_pm),
            FrequencySign::Negative => (s_mm, s_pp, s_pm),
            FrequencySign::Zero => {
                return Err(Error::Domain(
                    "rotary rows at zero frequency need the zero-frequency form".into(),
                ))
            }
        },
        SpectralRow::RotaryZero { s_pm, r_pm, .. } => (4.0 * s_pm, 4.0 * s_pm, 4.0 * r_pm),
    })
}

/// Converts one spectral-matrix row between representations.
///
/// Zero frequency is rejected unless `zero_branch` is set, in which case the
/// dedicated zero-frequency relations are used.
pub fn convert_representation(
    row: SpectralRow,
    target: Representation,
    sign: FrequencySign,
    zero_branch: bool,
) -> Result<SpectralRow> {
    if sign == FrequencySign::Zero && !zero_branch {
        return Err(Error::Domain(
            "zero frequency requires the explicit zero-frequency branch".into(),
        ));
    }
    if matches!(row, SpectralRow::RotaryZero { .. }) && sign != FrequencySign::Zero {
        return Err(Error::Domain(
            "zero-frequency rotary row supplied at a nonzero frequency".into(),
        ));
    }
    let (s_zz, s_zz_mirror, r_zz) = to_complex(row, sign)?;
    Ok(match target {
        Representation::Complex => SpectralRow::Complex {
            s_zz,
            s_zz_mirror,
            r_zz,
        },
        Representation::Cartesian => {
            let avg = (s_zz + s_zz_mirror) / 4.0;
            SpectralRow::Cartesian {
                s_xx: avg + r_zz.re / 2.0,
                s_yy: avg - r_zz.re / 2.0,
                s_xy: Complex64::new(r_zz.im / 2.0, (s_zz - s_zz_mirror) / 4.0),
            }
        }
        Representation::Rotary => match sign {
            FrequencySign::Positive => SpectralRow::Rotary {
                s_pp: s_zz,
                s_mm: s_zz_mirror,
                s_pm: r_zz,
            },
            FrequencySign::Negative => SpectralRow::Rotary {
                s_pp: s_zz_mirror,
                s_mm: s_zz,
                s_pm: r_zz,
            },
            FrequencySign::Zero => SpectralRow::RotaryZero {
                s_pp: s_zz / 4.0,
                s_mm: s_zz / 4.0,
                s_pm: s_zz / 4.0,
                r_pm: r_zz / 4.0,
            },
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;

    fn direct_dft(x: &[Complex64], h: &[f64], delta: f64, omega: f64) -> Complex64 {
        x.iter()
            .zip(h)
            .enumerate()
            .map(|(k, (v, w))| {
                let t = (k + 1) as f64;
                v * *w * Complex64::from_polar(1.0, -omega * t * delta)
            })
            .sum::<Complex64>()
            * delta.sqrt()
    }

    #[test]
    fn uniform_taper_kernel_is_triangle() {
        let t = make_taper(TaperKind::Uniform, 10).unwrap();
        for (tau, k) in t.autocorrelation().iter().enumerate() {
            assert_relative_eq!(*k, 1.0 - tau as f64 / 10.0, epsilon = 1e-15);
        }
        assert_relative_eq!(t.weights().iter().map(|h| h * h).sum::<f64>(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn tapers_have_unit_energy() {
        for kind in [TaperKind::Cosine, TaperKind::Dpss { nw: 4.0 }, TaperKind::Dpss { nw: 2.5 }] {
            for n in [16, 101, 512] {
                let t = make_taper(kind, n).unwrap();
                let e: f64 = t.weights().iter().map(|h| h * h).sum();
                assert_relative_eq!(e, 1.0, epsilon = 1e-12);
                assert_relative_eq!(t.autocorrelation()[0], 1.0, epsilon = 1e-12);
                let direct: f64 = (0..n - 3).map(|i| t.weights()[i] * t.weights()[i + 3]).sum();
                assert_relative_eq!(t.autocorrelation()[3], direct, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dpss_matches_dense_sinc_eigenvector() {
        let n = 64;
        let nw = 4.0;
        let w = nw / n as f64;
        let a = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0 * w
            } else {
                let d = i as f64 - j as f64;
                (2.0 * PI * w * d).sin() / (PI * d)
            }
        });
        let eig = SymmetricEigen::new(a);
        let (imax, lmax) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &l)| if l > acc.1 { (i, l) } else { acc });
        let mut v: Vec<f64> = eig.eigenvectors.column(imax).iter().copied().collect();
        if v.iter().sum::<f64>() < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let t = make_taper(TaperKind::Dpss { nw }, n).unwrap();
        for (a, b) in t.weights().iter().zip(&v) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        let conc = t.concentration().unwrap();
        assert!(conc >= 0.9999);
        assert_relative_eq!(conc, lmax, epsilon = 1e-10);
    }

    #[test]
    fn cosine_taper_shape() {
        let t = make_taper(TaperKind::Cosine, 9).unwrap();
        let h = t.weights();
        assert!(h.iter().all(|&v| v > 0.0));
        for i in 0..9 {
            assert_relative_eq!(h[i], h[8 - i], epsilon = 1e-15);
        }
        assert!(h[4] > h[0]);
    }

    #[test]
    fn taper_cache_returns_same_allocation() {
        let a = make_taper(TaperKind::Dpss { nw: 3.0 }, 77).unwrap();
        let b = make_taper(TaperKind::Dpss { nw: 3.0 }, 77).unwrap();
        assert!(Arc::ptr_eq(&a.weights, &b.weights));
    }

    #[test]
    fn taper_parsing() {
        assert_eq!("dpss".parse::<TaperKind>().unwrap(), TaperKind::Dpss { nw: 4.0 });
        assert_eq!("dpss:2.5".parse::<TaperKind>().unwrap(), TaperKind::Dpss { nw: 2.5 });
        assert_eq!("cosine".parse::<TaperKind>().unwrap(), TaperKind::Cosine);
        assert!("kaiser".parse::<TaperKind>().is_err());
        assert!(make_taper(TaperKind::Dpss { nw: 40.0 }, 64).is_err());
    }

    #[test]
    fn dft_of_unit_impulse() {
        let s = SampledSeries::real(vec![1.0, 0.0, 0.0, 0.0], 1.0).unwrap();
        let t = make_taper(TaperKind::Uniform, 4).unwrap();
        let d = dft(&s, &t).unwrap();
        for &j in d.grid().indices() {
            let w = 2.0 * PI * j as f64 / 4.0;
            let expected = Complex64::from_polar(0.5, -w);
            assert!((d.at(j) - expected).norm() < 1e-14);
        }
        let p = periodogram(&s, &t, Sided::One).unwrap();
        assert!(p.values.iter().all(|v| (v - 0.25).abs() < 1e-14));
    }

    #[test]
    fn dft_of_zero_is_zero() {
        let s = SampledSeries::real(vec![0.0; 6], 0.7).unwrap();
        let p = periodogram(&s, &make_taper(TaperKind::Uniform, 6).unwrap(), Sided::Two).unwrap();
        assert!(p.values.iter().all(|&v| v == 0.0));
    }

    proptest! {
        #[test]
        fn dft_matches_direct_sum(xs in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..40),
                                  delta in 0.1f64..3.0) {
            let z: Vec<Complex64> = xs.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
            let s = SampledSeries::complex(z.clone(), delta).unwrap();
            for kind in [TaperKind::Uniform, TaperKind::Cosine] {
                let t = make_taper(kind, z.len()).unwrap();
                let d = dft(&s, &t).unwrap();
                for (&j, &w) in d.grid().indices().iter().zip(d.grid().frequencies()) {
                    let e = direct_dft(&z, t.weights(), delta, w);
                    prop_assert!((d.at(j) - e).norm() <= 1e-10 * (1.0 + e.norm()));
                }
            }
        }

        #[test]
        fn parseval_holds(xs in proptest::collection::vec(-10.0f64..10.0, 2..64), delta in 0.1f64..5.0) {
            let s = SampledSeries::real(xs.clone(), delta).unwrap();
            let t = make_taper(TaperKind::Uniform, xs.len()).unwrap();
            let p = periodogram(&s, &t, Sided::Two).unwrap();
            let lhs = p.values.iter().sum::<f64>() / (xs.len() as f64 * delta);
            let rhs = s.mean_square();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1e-300) + 1e-14);
        }

        #[test]
        fn rotary_and_cartesian_dfts_agree(xs in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..40)) {
            let x: Vec<f64> = xs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = xs.iter().map(|p| p.1).collect();
            let z = SampledSeries::bivariate(&x, &y, 1.0).unwrap();
            let t = make_taper(TaperKind::Uniform, x.len()).unwrap();
            let r = rotary_dft(&z, &t).unwrap();
            let jx = dft(&SampledSeries::real(x, 1.0).unwrap(), &t).unwrap();
            let jy = dft(&SampledSeries::real(y, 1.0).unwrap(), &t).unwrap();
            let (cx, cy) = r.cartesian();
            let i = Complex64::new(0.0, 1.0);
            for (k, &j) in r.grid.indices().iter().enumerate() {
                prop_assert!((cx[k] - jx.at(j)).norm() < 1e-10);
                prop_assert!((cy[k] - jy.at(j)).norm() < 1e-10);
                prop_assert!((r.plus[k] - (jx.at(j) + i * jy.at(j))).norm() < 1e-10);
                prop_assert!((r.minus[k] - (jx.at(j) - i * jy.at(j))).norm() < 1e-10);
            }
        }

        #[test]
        fn representation_round_trip(sxx in 0.1f64..10.0, syy in 0.1f64..10.0, re in -1.0f64..1.0, im in -1.0f64..1.0,
                                     neg in proptest::bool::ANY) {
            let sign = if neg { FrequencySign::Negative } else { FrequencySign::Positive };
            let row = SpectralRow::Cartesian { s_xx: sxx, s_yy: syy, s_xy: Complex64::new(re, im) };
            let rot = convert_representation(row, Representation::Rotary, sign, false).unwrap();
            let cpx = convert_representation(rot, Representation::Complex, sign, false).unwrap();
            let back = convert_representation(cpx, Representation::Cartesian, sign, false).unwrap();
            match back {
                SpectralRow::Cartesian { s_xx, s_yy, s_xy } => {
                    prop_assert!((s_xx - sxx).abs() < 1e-12);
                    prop_assert!((s_yy - syy).abs() < 1e-12);
                    prop_assert!((s_xy - Complex64::new(re, im)).norm() < 1e-12);
                }
                _ => prop_assert!(false),
            }
        }
    }

    #[test]
    fn representation_examples() {
        let row = SpectralRow::Cartesian {
            s_xx: 1.0,
            s_yy: 1.0,
            s_xy: Complex64::new(0.0, 0.0),
        };
        let c = convert_representation(row, Representation::Complex, FrequencySign::Positive, false).unwrap();
        assert_eq!(
            c,
            SpectralRow::Complex {
                s_zz: 2.0,
                s_zz_mirror: 2.0,
                r_zz: Complex64::new(0.0, 0.0)
            }
        );
        let row = SpectralRow::Cartesian {
            s_xx: 1.0,
            s_yy: 2.0,
            s_xy: Complex64::new(0.0, 0.3),
        };
        match convert_representation(row, Representation::Rotary, FrequencySign::Positive, false).unwrap() {
            SpectralRow::Rotary { s_pp, s_mm, s_pm } => {
                assert_relative_eq!(s_pp, 3.6, epsilon = 1e-14);
                assert_relative_eq!(s_mm, 2.4, epsilon = 1e-14);
                assert!((s_pm - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
            }
            other => panic!("{other:?}"),
        }
        assert!(convert_representation(row, Representation::Rotary, FrequencySign::Zero, false).is_err());
    }

    #[test]
    fn zero_frequency_branch() {
        let row = SpectralRow::Cartesian {
            s_xx: 2.0,
            s_yy: 1.0,
            s_xy: Complex64::new(0.5, 0.0),
        };
        let z = convert_representation(row, Representation::Rotary, FrequencySign::Zero, true).unwrap();
        match z {
            SpectralRow::RotaryZero { s_pp, s_mm, s_pm, r_pm } => {
                assert_relative_eq!(s_pp, 0.75, epsilon = 1e-15);
                assert_relative_eq!(s_mm, 0.75, epsilon = 1e-15);
                assert_relative_eq!(s_pm, 0.75, epsilon = 1e-15);
                assert!((r_pm - Complex64::new(0.25, 0.25)).norm() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        let back = convert_representation(z, Representation::Cartesian, FrequencySign::Zero, true).unwrap();
        assert_eq!(back, row);
    }

    #[test]
    fn fejer_integrates_to_one() {
        for (n, delta) in [(16usize, 1.0), (33, 0.25), (200, 2.0)] {
            let m = 200_000;
            let h = 2.0 * PI / delta / m as f64;
            let total: f64 = (0..m)
                .map(|k| fejer_kernel(-PI / delta + (k as f64 + 0.5) * h, n, delta) * h)
                .sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-6);
            assert_relative_eq!(fejer_kernel(0.0, n, delta), n as f64 * delta / (2.0 * PI), epsilon = 1e-12);
        }
    }

    #[test]
    fn rotary_cross_of_real_series_is_auto() {
        let s = SampledSeries::real(vec![1.0, -2.0, 0.5, 3.0, 1.5], 1.0).unwrap();
        let t = make_taper(TaperKind::Uniform, 5).unwrap();
        let e = rotary_cross_estimate(&rotary_dft(&s, &t).unwrap());
        for k in 0..e.s_pp.len() {
            assert_relative_eq!(e.s_pp[k], e.s_mm[k], epsilon = 1e-12);
            assert!((e.s_pm[k] - Complex64::new(e.s_pp[k], 0.0)).norm() < 1e-12);
        }
        assert!(e.to_tsv().starts_with("omega\ts_pp"));
    }
}
