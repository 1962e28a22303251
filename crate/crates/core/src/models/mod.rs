//! Parametric covariance and spectral models.

pub mod bessel;
pub mod complex_ar;
pub mod family;
pub mod matern;
pub mod numeric;
pub mod rotary;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use complex_ar::{complex_ar_moments, ComplexAr};
pub use family::{CoherenceFamily, Family, ModelTemplate};
pub use matern::{
    aliased_acvs_spectrum, differenced_acvs, differenced_model_spectrum, matern_acvs,
    matern_spectrum_ct, AliasedSpectrum, MaternParams,
};
pub use rotary::{
    cartesian_coherency, gneiting_validity, rotary_matern_matrix, BivariateMatern, Coherence,
    RotaryMatern, RotaryMatrix,
};

use crate::error::{Error, Result};
use crate::fft;
use crate::series::SeriesKind;

/// A fully specified model, serialized as `{"model": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "snake_case")]
pub enum ModelSpec {
    WhiteNoise { sigma2: f64 },
    Matern(MaternParams),
    RotaryMatern(RotaryMatern),
    ComplexAr(ComplexAr),
}

fn kind_error(what: &str, spec: &ModelSpec) -> Error {
    Error::Kind(format!("{what} is not available for the {} model", spec.name()))
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::WhiteNoise { .. } => "white_noise",
            ModelSpec::Matern(_) => "matern",
            ModelSpec::RotaryMatern(_) => "rotary_matern",
            ModelSpec::ComplexAr(_) => "complex_ar",
        }
    }

    pub fn kind(&self) -> SeriesKind {
        match self {
            ModelSpec::WhiteNoise { .. } | ModelSpec::Matern(_) => SeriesKind::Real,
            ModelSpec::RotaryMatern(_) | ModelSpec::ComplexAr(_) => SeriesKind::Complex,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::WhiteNoise { sigma2 } if *sigma2 > 0.0 && sigma2.is_finite() => Ok(()),
            ModelSpec::WhiteNoise { sigma2 } => Err(Error::Domain(format!(
                "white-noise variance must be positive, got {sigma2}"
            ))),
            ModelSpec::Matern(m) => m.validate(),
            ModelSpec::RotaryMatern(r) => r.validate(),
            ModelSpec::ComplexAr(a) => a.validate(),
        }
    }

    /// Whether the relation sequence vanishes identically.
    pub fn is_proper(&self) -> bool {
        match self {
            ModelSpec::RotaryMatern(r) => r.is_proper(),
            ModelSpec::ComplexAr(a) => a.is_proper(),
            _ => true,
        }
    }

    /// Sampled autocovariance `s(k delta)`, `k = 0..n`, of a real model.
    pub fn real_lags(&self, n: usize, delta: f64) -> Result<Vec<f64>> {
        self.validate()?;
        match self {
            ModelSpec::WhiteNoise { sigma2 } => {
                let mut v = vec![0.0; n];
                if n > 0 {
                    v[0] = *sigma2;
                }
                Ok(v)
            }
            ModelSpec::Matern(m) => Ok(m.acvs_lags(n, delta)),
            _ => Err(kind_error("a real autocovariance", self)),
        }
    }

    /// Sampled `(s_ZZ(k delta), r_ZZ(k delta))`, `k = 0..n`, of a complex model.
    pub fn complex_lags(&self, n: usize, delta: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        self.validate()?;
        match self {
            ModelSpec::RotaryMatern(r) => Ok(r.lags(n, delta)),
            ModelSpec::ComplexAr(a) => a.moments(n),
            _ => Err(kind_error("a complex autocovariance", self)),
        }
    }

    /// Spectrum used by the standard Whittle likelihood of a real model:
    /// the continuous-time density where one exists.
    pub fn real_standard_spectrum(&self, omega: f64, delta: f64) -> Result<f64> {
        match self {
            ModelSpec::WhiteNoise { sigma2 } => Ok(delta * sigma2),
            ModelSpec::Matern(m) => Ok(m.spectrum(omega)),
            _ => Err(kind_error("a real spectrum", self)),
        }
    }

    /// Standard-Whittle complex spectra `(S_ZZ, R_ZZ)` on the `n`-point
    /// Fourier grid, indexed by FFT bin.
    pub fn standard_complex_bins(&self, n: usize, delta: f64) -> Result<(Vec<f64>, Vec<Complex64>)> {
        self.validate()?;
        match self {
            ModelSpec::RotaryMatern(r) => {
                let rayleigh = 2.0 * std::f64::consts::PI / (n as f64 * delta);
                let omega = |k: usize| {
                    let j = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                    j * rayleigh
                };
                Ok((
                    (0..n).map(|k| r.s_zz(omega(k))).collect(),
                    (0..n).map(|k| r.r_zz(omega(k), delta)).collect(),
                ))
            }
            ModelSpec::ComplexAr(a) => {
                let len = a.decay_length(1e-15).max(n);
                let (s, r) = a.moments(len)?;
                Ok(blur_complex(&s, &r, n, delta, |_| 1.0))
            }
            _ => Err(kind_error("a complex spectrum", self)),
        }
    }
}

/// `delta sum_tau w(tau) s(tau) e^{-i omega_j tau delta}` on the `n`-point
/// grid for a Hermitian `s` and symmetric `r`, with lag weights `w`.
pub(crate) fn blur_complex(
    s: &[Complex64],
    r: &[Complex64],
    n: usize,
    delta: f64,
    weight: impl Fn(usize) -> f64,
) -> (Vec<f64>, Vec<Complex64>) {
    let mut bs = vec![Complex64::new(0.0, 0.0); n];
    let mut br = vec![Complex64::new(0.0, 0.0); n];
    bs[0] += s[0] * weight(0);
    br[0] += r[0] * weight(0);
    for tau in 1..s.len() {
        let w = weight(tau);
        if w == 0.0 {
            continue;
        }
        let (k, kneg) = (tau % n, (n - tau % n) % n);
        bs[k] += s[tau] * w;
        bs[kneg] += s[tau].conj() * w;
        br[k] += r[tau] * w;
        br[kneg] += r[tau] * w;
    }
    fft::forward(&mut bs);
    fft::forward(&mut br);
    (
        bs.iter().map(|v| v.re * delta).collect(),
        br.iter().map(|v| v * delta).collect(),
    )
}

/// Real counterpart of [`blur_complex`] for an even sequence.
pub(crate) fn blur_real(s: &[f64], n: usize, delta: f64, weight: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    b[0].re += s[0] * weight(0);
    for tau in 1..s.len() {
        let w = weight(tau);
        let (k, kneg) = (tau % n, (n - tau % n) % n);
        b[k].re += s[tau] * w;
        b[kneg].re += s[tau] * w;
    }
    fft::forward(&mut b);
    b.iter().map(|v| v.re * delta).collect()
}
