use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::matern::MaternParams;
use super::numeric::{
    grid_size, lags_from_band_limited, lags_from_spectrum, lags_with_tail, tail_edge, Kink, Support,
};
use crate::error::{Error, Result};

/// Rotary coherence `rho(omega)` between the counter-rotating components,
/// defined for `omega > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coherence {
    None,
    /// Constant real coherence in `(-1, 1)`.
    Constant { rho: f64 },
    /// `max(0, 1 - c omega delta)`.
    LinearAniso { c: f64 },
    /// Modulus `1 / (1 + exp(q(omega)))` with `q(omega) = sum_k q_k omega^(2k)`,
    /// phase `theta(omega) = sum_k theta_k omega^(2k+1)`.
    Logistic { q: Vec<f64>, theta: Vec<f64> },
}

impl Default for Coherence {
    fn default() -> Self {
        Coherence::None
    }
}

impl Coherence {
    pub fn validate(&self) -> Result<()> {
        match self {
            Coherence::None => Ok(()),
            Coherence::Constant { rho } if rho.abs() < 1.0 => Ok(()),
            Coherence::Constant { rho } => Err(Error::Validity(format!(
                "constant coherence must satisfy |rho| < 1, got {rho}"
            ))),
            Coherence::LinearAniso { c } if *c > 0.0 && c.is_finite() => Ok(()),
            Coherence::LinearAniso { c } => Err(Error::Validity(format!(
                "anisotropy coefficient must be positive, got {c}"
            ))),
            Coherence::Logistic { q, theta } => {
                if q.is_empty() || q.iter().chain(theta).any(|v| !v.is_finite()) {
                    Err(Error::Validity("logistic coherence needs finite coefficients".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Coherence::None) || matches!(self, Coherence::Constant { rho } if *rho == 0.0)
    }

    /// Evaluates at `omega >= 0` (uses `|omega|` otherwise).
    pub fn eval(&self, omega: f64, delta: f64) -> Complex64 {
        let w = omega.abs();
        match self {
            Coherence::None => Complex64::new(0.0, 0.0),
            Coherence::Constant { rho } => Complex64::new(*rho, 0.0),
            Coherence::LinearAniso { c } => Complex64::new((1.0 - c * w * delta).max(0.0), 0.0),
            Coherence::Logistic { q, theta } => cartesian_coherency(q, theta, w),
        }
    }
}

/// Logistic-modulus coherency `sigma(omega) e^{-i theta(omega)}`.
pub fn cartesian_coherency(q: &[f64], theta: &[f64], omega: f64) -> Complex64 {
    let w2 = omega * omega;
    let qv = q.iter().rev().fold(0.0, |acc, c| acc * w2 + c);
    let th = omega * theta.iter().rev().fold(0.0, |acc, c| acc * w2 + c);
    // 1 / (1 + e^q) evaluated without overflow.
    let modulus = if qv > 0.0 {
        let e = (-qv).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + qv.exp())
    };
    Complex64::from_polar(modulus, -th)
}

/// Matérn rotary components with a coherence model between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotaryMatern {
    pub plus: MaternParams,
    pub minus: MaternParams,
    #[serde(default)]
    pub coherence: Coherence,
}

/// Rotary spectral matrix at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotaryMatrix {
    pub s_pp: f64,
    pub s_mm: f64,
    pub s_pm: Complex64,
}

impl RotaryMatrix {
    pub fn determinant(&self) -> f64 {
        self.s_pp * self.s_mm - self.s_pm.norm_sqr()
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.s_pp + self.s_mm);
        let half = 0.5 * (self.s_pp - self.s_mm);
        let r = (half * half + self.s_pm.norm_sqr()).sqrt();
        (mean - r, mean + r)
    }
}

impl RotaryMatern {
    pub fn validate(&self) -> Result<()> {
        self.plus.validate()?;
        self.minus.validate()?;
        self.coherence.validate()
    }

    pub fn is_proper(&self) -> bool {
        self.coherence.is_zero()
    }

    fn symmetric(&self) -> bool {
        self.plus == self.minus
    }

    pub fn matrix(&self, omega: f64, delta: f64) -> RotaryMatrix {
        let s_pp = self.plus.spectrum(omega);
        let s_mm = self.minus.spectrum(omega);
        RotaryMatrix {
            s_pp,
            s_mm,
            s_pm: self.coherence.eval(omega, delta) * (s_pp * s_mm).sqrt(),
        }
    }

    /// Two-sided `S_ZZ(omega)`; the mean of the two sides at zero.
    pub fn s_zz(&self, omega: f64) -> f64 {
        if omega > 0.0 {
            self.plus.spectrum(omega)
        } else if omega < 0.0 {
            self.minus.spectrum(-omega)
        } else {
            0.5 * (self.plus.spectrum(0.0) + self.minus.spectrum(0.0))
        }
    }

    pub fn r_zz(&self, omega: f64, delta: f64) -> Complex64 {
        let w = omega.abs();
        self.coherence.eval(w, delta) * (self.plus.spectrum(w) * self.minus.spectrum(w)).sqrt()
    }

    /// `(s_ZZ(k delta), r_ZZ(k delta))` for `k = 0..n`.
    pub fn lags(&self, n: usize, delta: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let rate = self.plus.alpha.min(self.minus.alpha);
        let m = grid_size(n, delta, rate);
        let s = if self.symmetric() {
            self.plus
                .acvs_lags(n, delta)
                .into_iter()
                .map(|v| Complex64::new(v, 0.0))
                .collect()
        } else {
            let f = |w: f64| Complex64::new(self.s_zz(w), 0.0);
            let support = Support::PowerTail {
                amp_pos: self.plus.phi * self.plus.phi,
                p_pos: 2.0 * self.plus.nu + 1.0,
                amp_neg: self.minus.phi * self.minus.phi,
                p_neg: 2.0 * self.minus.nu + 1.0,
            };
            let mut lags = lags_from_spectrum(&f, n, delta, support, m);
            // Euler-Maclaurin terms for the jump at omega = 0 of
            // g(omega) = f(omega) e^{i omega tau delta}: [g'] = i t J and
            // [g'''] = -i t^3 J + 3 i t [f''], with t = tau delta.
            let pi = std::f64::consts::PI;
            let h = 2.0 * pi / (m as f64 * delta);
            let jump = self.plus.spectrum(0.0) - self.minus.spectrum(0.0);
            let curv = |p: &MaternParams| -(2.0 * p.nu + 1.0) * p.spectrum(0.0) / (p.alpha * p.alpha);
            let jump2 = curv(&self.plus) - curv(&self.minus);
            for (tau, v) in lags.iter_mut().enumerate() {
                let t = tau as f64 * delta;
                let c2 = h * h / (24.0 * pi) * t * jump;
                let c4 = h.powi(4) / (1440.0 * pi) * (t.powi(3) * jump - 3.0 * t * jump2);
                *v += Complex64::new(0.0, c2 + c4);
            }
            lags
        };
        let r = self.relation_lags(n, delta, m);
        (s, r)
    }

    /// `int_u^limit (1 - slope w) sqrt(S+(w) S-(w)) dw` from the large-`w`
    /// expansion of the Matérn factors, exact to `O((alpha / u)^6)`.
    fn aniso_tail(&self, u: f64, limit: f64, slope: f64) -> f64 {
        if u >= limit {
            return 0.0;
        }
        let (a, b) = ((self.plus.nu + 0.5) / 2.0, (self.minus.nu + 0.5) / 2.0);
        let (x, y) = (self.plus.alpha.powi(2), self.minus.alpha.powi(2));
        let p = 2.0 * (a + b);
        let k1 = a * x + b * y;
        let k2 = a * (a + 1.0) / 2.0 * x * x + b * (b + 1.0) / 2.0 * y * y + a * b * x * y;
        let power = |q: f64| {
            if (q - 1.0).abs() < 1e-12 {
                (limit / u).ln()
            } else {
                (u.powf(1.0 - q) - limit.powf(1.0 - q)) / (q - 1.0)
            }
        };
        let series: f64 = [(1.0, p), (-k1, p + 2.0), (k2, p + 4.0)]
            .iter()
            .map(|&(coef, q)| coef * (power(q) - slope * power(q - 1.0)))
            .sum();
        self.plus.phi * self.minus.phi * series
    }

    fn relation_lags(&self, n: usize, delta: f64, m: usize) -> Vec<Complex64> {
        let zero = vec![Complex64::new(0.0, 0.0); n];
        let same_shape = self.plus.nu == self.minus.nu && self.plus.alpha == self.minus.alpha;
        match &self.coherence {
            Coherence::None => zero,
            Coherence::Constant { rho } if same_shape => {
                let amp = MaternParams {
                    phi: (self.plus.phi * self.minus.phi).sqrt(),
                    ..self.plus
                };
                amp.acvs_lags(n, delta)
                    .into_iter()
                    .map(|v| Complex64::new(rho * v, 0.0))
                    .collect()
            }
            Coherence::LinearAniso { c } => {
                let f = |w: f64| self.r_zz(w, delta);
                let limit = 1.0 / (c * delta);
                let amp = |w: f64| (self.plus.spectrum(w) * self.minus.spectrum(w)).sqrt();
                let slope = c * delta;
                let edge = Complex64::new(slope * amp(limit), 0.0);
                let kinks = [
                    Kink { at: 0.0, jump: Complex64::new(-2.0 * slope * amp(0.0), 0.0) },
                    Kink { at: limit, jump: edge },
                    Kink { at: -limit, jump: edge },
                ];
                let alpha_max = self.plus.alpha.max(self.minus.alpha);
                let wraps = TAIL_WRAPS.max((10.0 * alpha_max * delta / (2.0 * std::f64::consts::PI)).ceil() as i64);
                // Kinked spectra decay slowly in lag, so wrap-around needs a finer grid.
                if limit > 2.0 * tail_edge(delta, wraps) {
                    let tail = |u: f64| Complex64::new(self.aniso_tail(u, limit, slope), 0.0);
                    lags_with_tail(&f, n, delta, wraps, &tail, &kinks[..1], 4 * m)
                } else {
                    lags_from_band_limited(&f, n, delta, limit, &kinks, 4 * m)
                }
            }
            Coherence::Constant { rho } => {
                let f = |w: f64| self.r_zz(w, delta);
                let p = self.plus.nu + self.minus.nu + 1.0;
                let amp = rho * self.plus.phi * self.minus.phi;
                let support = Support::PowerTail {
                    amp_pos: amp,
                    p_pos: p,
                    amp_neg: amp,
                    p_neg: p,
                };
                lags_from_spectrum(&f, n, delta, support, m)
            }
            Coherence::Logistic { .. } => {
                let f = |w: f64| self.r_zz(w, delta);
                lags_from_spectrum(&f, n, delta, Support::Rapid { wraps: POWER_FALLBACK_WRAPS }, m)
            }
        }
    }
}

const POWER_FALLBACK_WRAPS: usize = 64;
const TAIL_WRAPS: i64 = 8;

pub fn rotary_matern_matrix(spec: &RotaryMatern, omega: f64, delta: f64) -> Result<RotaryMatrix> {
    spec.validate()?;
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "rotary matrices are defined for omega > 0, got {omega}"
        )));
    }
    Ok(spec.matrix(omega, delta))
}

/// Parameters of a bivariate Matérn cross-covariance model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateMatern {
    pub nu11: f64,
    pub nu22: f64,
    pub nu12: f64,
    pub a11: f64,
    pub a22: f64,
    pub a12: f64,
    pub rho: f64,
}

/// Largest admissible `rho^2` for the bivariate Matérn in one dimension,
/// and whether the supplied `rho` satisfies it.
pub fn gneiting_validity(p: &BivariateMatern) -> Result<(f64, bool)> {
    for v in [p.nu11, p.nu22, p.nu12, p.a11, p.a22, p.a12] {
        if !(v > 0.0) {
            return Err(Error::Domain(format!(
                "bivariate Matérn parameters must be positive, got {v}"
            )));
        }
    }
    let d = 1.0;
    let ln_gammas = ln_gamma(p.nu11 + d / 2.0) + ln_gamma(p.nu22 + d / 2.0)
        - ln_gamma(p.nu11)
        - ln_gamma(p.nu22)
        + 2.0 * ln_gamma(p.nu12)
        - 2.0 * ln_gamma(p.nu12 + d / 2.0);
    let ln_scales = 2.0 * p.nu11 * p.a11.ln() + 2.0 * p.nu22 * p.a22.ln() - 4.0 * p.nu12 * p.a12.ln();
    let ln_ratio = |t2: f64| {
        (2.0 * p.nu12 + d) * (p.a12 * p.a12 + t2).ln()
            - (p.nu11 + d / 2.0) * (p.a11 * p.a11 + t2).ln()
            - (p.nu22 + d / 2.0) * (p.a22 * p.a22 + t2).ln()
    };
    let growth = 4.0 * p.nu12 - 2.0 * p.nu11 - 2.0 * p.nu22;
    let inf = if growth < 0.0 {
        f64::NEG_INFINITY
    } else {
        let scale = p.a11.max(p.a22).max(p.a12);
        let mut best = ln_ratio(0.0);
        let mut best_t = 0.0;
        for k in 0..=4000 {
            let t = scale * 10f64.powf(-6.0 + 12.0 * k as f64 / 4000.0);
            let v = ln_ratio(t * t);
            if v < best {
                best = v;
                best_t = t;
            }
        }
        // Golden-section polish around the best grid point.
        let (mut lo, mut hi) = (best_t / 1.01, best_t * 1.01 + 1e-300);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if ln_ratio(a * a) < ln_ratio(b * b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let polished = ln_ratio((0.5 * (lo + hi)).powi(2));
        let limit = if growth == 0.0 { 0.0 } else { f64::INFINITY };
        best.min(polished).min(limit)
    };
    let bound = (ln_gammas + ln_scales + inf).exp();
    Ok((bound, p.rho * p.rho <= bound * (1.0 + 1e-12)))
}
