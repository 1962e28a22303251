use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::bessel::bessel_k_scaled;
use crate::error::{Error, Result};
use crate::fft;
use crate::series::{FourierGrid, Sided};

/// Matérn process with spectral density `phi^2 / (omega^2 + alpha^2)^(nu + 1/2)`
/// and autocovariance `s(tau) = (1/2pi) int S(omega) e^{i omega tau} d omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternParams {
    pub phi: f64,
    pub nu: f64,
    pub alpha: f64,
}

impl MaternParams {
    pub fn new(phi: f64, nu: f64, alpha: f64) -> Result<Self> {
        let m = Self { phi, nu, alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("phi", self.phi), ("nu", self.nu), ("alpha", self.alpha)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("Matérn `{name}` must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn spectrum(&self, omega: f64) -> f64 {
        self.phi * self.phi * (omega * omega + self.alpha * self.alpha).powf(-(self.nu + 0.5))
    }

    fn ln_scale(&self) -> f64 {
        2.0 * self.phi.ln()
            - self.nu * 2f64.ln()
            - 0.5 * PI.ln()
            - ln_gamma(self.nu + 0.5)
            - 2.0 * self.nu * self.alpha.ln()
    }

    pub fn variance(&self) -> f64 {
        (2.0 * self.phi.ln() + ln_gamma(self.nu)
            - 2f64.ln()
            - 0.5 * PI.ln()
            - ln_gamma(self.nu + 0.5)
            - 2.0 * self.nu * self.alpha.ln())
        .exp()
    }

    pub fn acvs(&self, tau: f64) -> f64 {
        let x = self.alpha * tau.abs();
        if x == 0.0 {
            return self.variance();
        }
        (self.ln_scale() + self.nu * x.ln() + bessel_k_scaled(self.nu, x).ln() - x).exp()
    }

    /// `s(k delta)` for `k = 0..n`.
    pub fn acvs_lags(&self, n: usize, delta: f64) -> Vec<f64> {
        let ln_scale = self.ln_scale();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let x = self.alpha * k as f64 * delta;
            let v = if k == 0 {
                self.variance()
            } else {
                let e = ln_scale + self.nu * x.ln() - x;
                if e < -745.0 {
                    0.0
                } else {
                    (e + bessel_k_scaled(self.nu, x).ln()).exp()
                }
            };
            out.push(v);
        }
        out
    }
}

pub fn matern_acvs(tau: f64, params: &MaternParams) -> Result<f64> {
    params.validate()?;
    Ok(params.acvs(tau))
}

pub fn matern_spectrum_ct(omega: f64, params: &MaternParams) -> Result<f64> {
    params.validate()?;
    Ok(params.spectrum(omega))
}

/// Sampled-process spectrum obtained from a truncated autocovariance sum.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasedSpectrum {
    pub grid: FourierGrid,
    pub values: Vec<f64>,
    pub cutoff: usize,
    pub tail_converged: bool,
}

const MAX_CUTOFF: usize = 1 << 24;

/// `S(omega) = delta sum_tau s(tau) e^{-i omega tau delta}` with the sum
/// truncated once `|s(tau)| < 1e-12 s(0)`; the cutoff doubles until it holds.
pub fn aliased_acvs_spectrum(
    acvs: impl Fn(usize) -> f64,
    n: usize,
    delta: f64,
    sided: Sided,
) -> Result<AliasedSpectrum> {
    let grid = FourierGrid::new(n, delta, sided)?;
    let s0 = acvs(0);
    let small = |l: usize| (0..4).all(|k| acvs(l + k).abs() < 1e-12 * s0.abs());
    let mut cutoff = n.max(64);
    while !small(cutoff) && cutoff < MAX_CUTOFF {
        cutoff *= 2;
    }
    let tail_converged = small(cutoff);
    let mut folded = vec![Complex64::new(0.0, 0.0); n];
    folded[0].re += s0;
    for tau in 1..=cutoff {
        let v = acvs(tau);
        folded[tau % n].re += v;
        folded[(n - tau % n) % n].re += v;
    }
    fft::forward(&mut folded);
    let values = grid
        .indices()
        .iter()
        .map(|&j| delta * folded[grid.fft_bin(j)].re)
        .collect();
    Ok(AliasedSpectrum {
        grid,
        values,
        cutoff,
        tail_converged,
    })
}

/// Spectrum of the first difference: `2 (1 - cos(omega delta)) S(omega)`.
pub fn differenced_model_spectrum(values: &[f64], frequencies: &[f64], delta: f64) -> Vec<f64> {
    values
        .iter()
        .zip(frequencies)
        .map(|(s, w)| 2.0 * (1.0 - (w * delta).cos()) * s)
        .collect()
}

/// Autocovariance of the first difference, one lag shorter than the input.
pub fn differenced_acvs(acvs: &[f64]) -> Vec<f64> {
    let n = acvs.len();
    (0..n.saturating_sub(1))
        .map(|tau| {
            let prev = if tau == 0 { acvs[1] } else { acvs[tau - 1] };
            2.0 * acvs[tau] - prev - acvs[tau + 1]
        })
        .collect()
}

/// Complex-valued counterpart of [`differenced_acvs`] for `s(-tau) = conj(s(tau))`.
pub fn differenced_acvs_hermitian(acvs: &[Complex64]) -> Vec<Complex64> {
    let n = acvs.len();
    (0..n.saturating_sub(1))
        .map(|tau| {
            let prev = if tau == 0 { acvs[1].conj() } else { acvs[tau - 1] };
            acvs[tau] * 2.0 - prev - acvs[tau + 1]
        })
        .collect()
}

/// Counterpart for symmetric sequences `r(-tau) = r(tau)`.
pub fn differenced_acvs_symmetric(acvs: &[Complex64]) -> Vec<Complex64> {
    let n = acvs.len();
    (0..n.saturating_sub(1))
        .map(|tau| {
            let prev = if tau == 0 { acvs[1] } else { acvs[tau - 1] };
            acvs[tau] * 2.0 - prev - acvs[tau + 1]
        })
        .collect()
}
