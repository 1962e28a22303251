//! Exact and Whittle-type log-likelihoods.
//!
//! All frequency-domain forms are `-sum_Omega [log det S + J^H S^{-1} J]`
//! over a masked Fourier grid, differing only in the model spectrum `S` and
//! the taper applied to the data. The time-domain form is
//! `-log det C - x^T C^{-1} x` with the additive constant dropped.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    blur_complex, blur_real, differenced_acvs, ModelSpec, ModelTemplate,
};
use crate::models::matern::{differenced_acvs_hermitian, differenced_acvs_symmetric};
use crate::series::{FourierGrid, FrequencyMask, MaskSpec, SampledSeries, SeriesKind, Sided};
use crate::spectral::{dft, make_taper, Taper, TaperKind};

pub const DEFAULT_TIME_EXACT_MAX_N: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    TimeExact,
    Standard,
    Blurred,
    Tapered,
    TaperedBlurred,
}

impl Variant {
    pub fn is_blurred(self) -> bool {
        matches!(self, Variant::Blurred | Variant::TaperedBlurred)
    }

    pub fn is_tapered(self) -> bool {
        matches!(self, Variant::Tapered | Variant::TaperedBlurred)
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "time_exact" | "exact" => Ok(Variant::TimeExact),
            "standard" => Ok(Variant::Standard),
            "blurred" => Ok(Variant::Blurred),
            "tapered" => Ok(Variant::Tapered),
            "tapered_blurred" => Ok(Variant::TaperedBlurred),
            _ => Err(Error::config("variant", format!("unknown variant `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Real univariate series on the one-sided grid.
    Real,
    /// Complex series via the rotary pair `(J_+, J_-)` at `omega > 0`.
    Rotary,
    /// Complex series assumed proper, on the two-sided grid.
    Proper,
    /// Complex series via the Cartesian pair `(J_X, J_Y)` at `omega > 0`.
    Cartesian,
}

impl Domain {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Domain::Real),
            "rotary" => Ok(Domain::Rotary),
            "proper" => Ok(Domain::Proper),
            "cartesian" => Ok(Domain::Cartesian),
            _ => Err(Error::config("domain", format!("unknown domain `{s}`"))),
        }
    }

    fn is_complex(self) -> bool {
        !matches!(self, Domain::Real)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub variant: Variant,
    pub domain: Domain,
    /// Taper for the tapered variants; the others use the uniform taper.
    #[serde(default)]
    pub taper: TaperKind,
    #[serde(default)]
    pub mask: MaskSpec,
    /// Fit the first difference of the series.
    #[serde(default)]
    pub difference: bool,
    #[serde(default = "default_max_n")]
    pub time_exact_max_n: usize,
}

fn default_max_n() -> usize {
    DEFAULT_TIME_EXACT_MAX_N
}

impl ObjectiveConfig {
    pub fn new(variant: Variant, domain: Domain) -> Self {
        Self {
            variant,
            domain,
            taper: TaperKind::Uniform,
            mask: MaskSpec {
                exclude_zero: domain == Domain::Rotary || domain == Domain::Cartesian,
                ..MaskSpec::default()
            },
            difference: false,
            time_exact_max_n: DEFAULT_TIME_EXACT_MAX_N,
        }
    }

    pub fn with_taper(mut self, taper: TaperKind) -> Self {
        self.taper = taper;
        self
    }

    pub fn with_mask(mut self, mask: MaskSpec) -> Self {
        self.mask = mask;
        self
    }

    pub fn with_difference(mut self, difference: bool) -> Self {
        self.difference = difference;
        self
    }

    pub fn effective_taper(&self) -> TaperKind {
        if self.variant.is_tapered() {
            self.taper
        } else {
            TaperKind::Uniform
        }
    }
}

#[derive(Debug, Clone)]
enum Data {
    Time,
    /// Per grid position.
    Periodogram(Vec<f64>),
    /// Per one-sided grid position.
    Pairs(Vec<Complex64>, Vec<Complex64>),
}

/// Model spectra in FFT bin order on the objective's grid.
#[derive(Debug, Clone)]
pub enum ModelSpectra {
    Real(Vec<f64>),
    Complex { s: Vec<f64>, r: Vec<Complex64> },
}

/// A log-likelihood bound to data, model template and configuration.
#[derive(Debug, Clone)]
pub struct LikelihoodObjective {
    config: ObjectiveConfig,
    template: ModelTemplate,
    series: SampledSeries,
    grid: FourierGrid,
    mask: FrequencyMask,
    taper: Taper,
    data: Data,
}

impl LikelihoodObjective {
    pub fn new(series: &SampledSeries, template: ModelTemplate, config: ObjectiveConfig) -> Result<Self> {
        template.validate()?;
        let want = if config.domain.is_complex() {
            SeriesKind::Complex
        } else {
            SeriesKind::Real
        };
        if series.kind() != want {
            return Err(Error::Kind(format!(
                "{:?} domain needs a {:?} series, got {:?}",
                config.domain,
                want,
                series.kind()
            )));
        }
        if template.family.kind() != want {
            return Err(Error::Kind(format!(
                "{:?} domain needs a {want:?} model family",
                config.domain
            )));
        }
        let series = if config.difference {
            series.difference()?
        } else {
            series.clone()
        };
        let n = series.len();
        let sided = if config.domain == Domain::Proper {
            Sided::Two
        } else {
            Sided::One
        };
        let grid = FourierGrid::new(n, series.delta(), sided)?;
        if matches!(config.domain, Domain::Rotary | Domain::Cartesian) && !config.mask.exclude_zero {
            return Err(Error::Domain(
                "rotary and Cartesian likelihoods need a mask excluding zero frequency".into(),
            ));
        }
        let mask = FrequencyMask::band(&grid, &config.mask)?;
        let taper = make_taper(config.effective_taper(), n)?;
        let data = if config.variant == Variant::TimeExact {
            if n > config.time_exact_max_n {
                return Err(Error::Size(format!(
                    "time-domain likelihood limited to n <= {}, got {n}",
                    config.time_exact_max_n
                )));
            }
            Data::Time
        } else {
            let d = dft(&series, &taper)?;
            match config.domain {
                Domain::Real | Domain::Proper => {
                    Data::Periodogram(grid.indices().iter().map(|&j| d.at(j).norm_sqr()).collect())
                }
                Domain::Rotary => Data::Pairs(
                    grid.indices().iter().map(|&j| d.at(j)).collect(),
                    grid.indices().iter().map(|&j| d.at(-j).conj()).collect(),
                ),
                Domain::Cartesian => {
                    let i2 = Complex64::new(0.0, 2.0);
                    let (jx, jy) = grid
                        .indices()
                        .iter()
                        .map(|&j| {
                            let p = d.at(j);
                            let m = d.at(-j).conj();
                            ((p + m) / 2.0, (p - m) / i2)
                        })
                        .unzip();
                    Data::Pairs(jx, jy)
                }
            }
        };
        Ok(Self {
            config,
            template,
            series,
            grid,
            mask,
            taper,
            data,
        })
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.config
    }

    pub fn template(&self) -> &ModelTemplate {
        &self.template
    }

    /// The series after preprocessing.
    pub fn series(&self) -> &SampledSeries {
        &self.series
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn mask(&self) -> &FrequencyMask {
        &self.mask
    }

    pub fn taper(&self) -> &Taper {
        &self.taper
    }

    /// Number of two-sided Fourier frequencies represented by the mask.
    pub fn n_eff(&self) -> f64 {
        let n = self.grid.n() as i64;
        self.mask
            .positions()
            .map(|p| {
                let j = self.grid.indices()[p];
                if self.grid.sided() == Sided::Two || j == 0 || 2 * j == n {
                    1.0
                } else {
                    2.0
                }
            })
            .sum()
    }

    /// Masked periodogram values of a real or proper objective.
    pub fn periodogram(&self) -> Option<Vec<f64>> {
        match &self.data {
            Data::Periodogram(p) => Some(self.mask.positions().map(|i| p[i]).collect()),
            _ => None,
        }
    }

    /// Masked positions and their signed Fourier indices.
    pub fn masked_indices(&self) -> Vec<i64> {
        self.mask.positions().map(|p| self.grid.indices()[p]).collect()
    }

    /// Factor `|1 - e^{-i omega delta}|^2` applied when differencing.
    fn difference_gain(&self, bin: usize) -> f64 {
        if !self.config.difference {
            return 1.0;
        }
        let w = 2.0 * std::f64::consts::PI * bin as f64 / self.grid.n() as f64;
        2.0 * (1.0 - w.cos())
    }

    /// Expected periodogram (or spectral matrices) under `spec`.
    pub fn model_spectra(&self, spec: &ModelSpec) -> Result<ModelSpectra> {
        let n = self.grid.n();
        let delta = self.series.delta();
        let difference = self.config.difference;
        let kappa = self.taper.autocorrelation();
        let blurred = self.config.variant.is_blurred();
        match self.config.domain {
            Domain::Real => {
                if blurred {
                    if !difference {
                        return blurred_model_spectrum(spec, n, delta, &self.taper);
                    }
                    let lags = differenced_acvs(&spec.real_lags(n + 1, delta)?);
                    Ok(ModelSpectra::Real(blur_real(&lags, n, delta, |t| kappa[t])))
                } else {
                    let rayleigh = self.grid.rayleigh();
                    (0..n)
                        .map(|k| {
                            let j = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                            Ok(spec.real_standard_spectrum(j * rayleigh, delta)? * self.difference_gain(k))
                        })
                        .collect::<Result<Vec<_>>>()
                        .map(ModelSpectra::Real)
                }
            }
            _ => {
                if blurred {
                    if !difference {
                        return blurred_model_spectrum(spec, n, delta, &self.taper);
                    }
                    let (s, r) = spec.complex_lags(n + 1, delta)?;
                    let (s, r) = (differenced_acvs_hermitian(&s), differenced_acvs_symmetric(&r));
                    let (s, r) = blur_complex(&s, &r, n, delta, |t| kappa[t]);
                    Ok(ModelSpectra::Complex { s, r })
                } else {
                    let (mut s, mut r) = spec.standard_complex_bins(n, delta)?;
                    for k in 0..n {
                        let g = self.difference_gain(k);
                        s[k] *= g;
                        r[k] *= g;
                    }
                    Ok(ModelSpectra::Complex { s, r })
                }
            }
        }
    }

    /// Log-likelihood at a fully specified model.
    pub fn loglik(&self, spec: &ModelSpec) -> Result<f64> {
        spec.validate()?;
        if spec.kind() != self.series.kind() {
            return Err(Error::Kind(format!(
                "model `{}` does not match the series kind",
                spec.name()
            )));
        }
        if self.config.domain == Domain::Proper && !spec.is_proper() {
            return Err(Error::Domain(
                "the proper likelihood needs a model with zero relation spectrum".into(),
            ));
        }
        if self.config.variant == Variant::TimeExact {
            return self.time_exact(spec);
        }
        let spectra = self.model_spectra(spec)?;
        self.whittle(&spectra)
    }

    /// Log-likelihood at free parameter values of the template.
    pub fn loglik_free(&self, free: &[f64]) -> Result<f64> {
        let spec = self.template.build(free)?;
        self.loglik(&spec)
    }

    fn nonpositive(&self, position: usize) -> Error {
        Error::NonpositiveSpectrum {
            omega: self.grid.frequencies()[position],
        }
    }

    fn whittle(&self, spectra: &ModelSpectra) -> Result<f64> {
        let n = self.grid.n();
        let mut total = 0.0;
        match (&self.data, spectra) {
            (Data::Periodogram(p), ModelSpectra::Real(s)) | (Data::Periodogram(p), ModelSpectra::Complex { s, .. }) => {
                for pos in self.mask.positions() {
                    let v = s[self.grid.fft_bin(self.grid.indices()[pos])];
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(self.nonpositive(pos));
                    }
                    total -= v.ln() + p[pos] / v;
                }
            }
            (Data::Pairs(u, v), ModelSpectra::Complex { s, r }) => {
                for pos in self.mask.positions() {
                    let j = self.grid.indices()[pos] as usize;
                    let (a, b, c) = (s[j % n], s[(n - j) % n], r[j % n]);
                    let det = a * b - c.norm_sqr();
                    if !(a > 0.0) || !(b > 0.0) || !(det > 0.0) || !det.is_finite() {
                        return Err(self.nonpositive(pos));
                    }
                    let (x, y) = (u[pos], v[pos]);
                    let term = match self.config.domain {
                        Domain::Rotary => {
                            let quad = (b * x.norm_sqr() + a * y.norm_sqr() - 2.0 * (x.conj() * c * y).re) / det;
                            det.ln() + quad
                        }
                        _ => {
                            let sxx = (a + b) / 4.0 + c.re / 2.0;
                            let syy = (a + b) / 4.0 - c.re / 2.0;
                            let sxy = Complex64::new(c.im / 2.0, (a - b) / 4.0);
                            let det_u = sxx * syy - sxy.norm_sqr();
                            let quad =
                                (syy * x.norm_sqr() + sxx * y.norm_sqr() - 2.0 * (x.conj() * sxy * y).re) / det_u;
                            det_u.ln() + quad
                        }
                    };
                    total -= term;
                }
            }
            _ => return Err(Error::Kind("model spectra do not match the data layout".into())),
        }
        Ok(total)
    }

    fn time_exact(&self, spec: &ModelSpec) -> Result<f64> {
        let n = self.series.len();
        let delta = self.series.delta();
        match self.series.kind() {
            SeriesKind::Real => {
                let lags = if self.config.difference {
                    differenced_acvs(&spec.real_lags(n + 1, delta)?)
                } else {
                    spec.real_lags(n, delta)?
                };
                levinson_loglik(&lags, &self.series.real_parts())
            }
            SeriesKind::Complex => {
                let (s, r) = if self.config.difference {
                    let (s, r) = spec.complex_lags(n + 1, delta)?;
                    (differenced_acvs_hermitian(&s), differenced_acvs_symmetric(&r))
                } else {
                    spec.complex_lags(n, delta)?
                };
                let cov = bivariate_covariance(&s, &r);
                let mut u = self.series.real_parts();
                u.extend(self.series.imag_parts());
                cholesky_loglik(cov, 2 * n, &u)
            }
        }
    }

    pub fn loglik_per_frequency(&self, value: f64) -> f64 {
        if self.config.variant == Variant::TimeExact {
            value / self.series.len() as f64
        } else {
            value / self.mask.count() as f64
        }
    }
}

/// Expected (tapered) periodogram under `spec` on the `n`-point grid, indexed
/// by FFT bin: the lag sequence weighted by the taper autocorrelation.
pub fn blurred_model_spectrum(spec: &ModelSpec, n: usize, delta: f64, taper: &Taper) -> Result<ModelSpectra> {
    if taper.len() != n {
        return Err(Error::Size(format!("taper length {} does not match n = {n}", taper.len())));
    }
    let kappa = taper.autocorrelation();
    match spec.kind() {
        SeriesKind::Real => Ok(ModelSpectra::Real(blur_real(&spec.real_lags(n, delta)?, n, delta, |t| kappa[t]))),
        SeriesKind::Complex => {
            let (s, r) = spec.complex_lags(n, delta)?;
            let (s, r) = blur_complex(&s, &r, n, delta, |t| kappa[t]);
            Ok(ModelSpectra::Complex { s, r })
        }
    }
}

/// `-log det C - x^T C^{-1} x` for a Toeplitz `C` via the innovations from
/// the Durbin recursion.
pub fn levinson_loglik(acvs: &[f64], x: &[f64]) -> Result<f64> {
    let n = x.len();
    if acvs.len() < n {
        return Err(Error::Size(format!("need {n} lags, got {}", acvs.len())));
    }
    let mut phi = vec![0.0; n];
    let mut prev = vec![0.0; n];
    let mut v = acvs[0];
    if !(v > 0.0) {
        return Err(Error::Conditioning { pivot: 0 });
    }
    let mut logdet = v.ln();
    let mut quad = x[0] * x[0] / v;
    for t in 1..n {
        let mut num = acvs[t];
        for k in 1..t {
            num -= prev[k] * acvs[t - k];
        }
        let kappa = num / v;
        phi[t] = kappa;
        for k in 1..t {
            phi[k] = prev[k] - kappa * prev[t - k];
        }
        v *= 1.0 - kappa * kappa;
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Conditioning { pivot: t });
        }
        let mut pred = 0.0;
        for k in 1..=t {
            pred += phi[k] * x[t - k];
        }
        let e = x[t] - pred;
        logdet += v.ln();
        quad += e * e / v;
        prev[1..=t].copy_from_slice(&phi[1..=t]);
    }
    Ok(-logdet - quad)
}

/// Covariance of the stacked vector `(X_1..X_N, Y_1..Y_N)` from
/// `s_ZZ` and `r_ZZ` lags, row-major.
pub fn bivariate_covariance(s: &[Complex64], r: &[Complex64]) -> Vec<f64> {
    let n = s.len();
    let m = 2 * n;
    let mut c = vec![0.0; m * m];
    for a in 0..n {
        for b in 0..n {
            let (tau, forward) = if a >= b { (a - b, true) } else { (b - a, false) };
            let sxx = 0.5 * (s[tau].re + r[tau].re);
            let syy = 0.5 * (s[tau].re - r[tau].re);
            // E[X_{t+tau} Y_t] and E[Y_{t+tau} X_t].
            let gxy = 0.5 * (r[tau].im - s[tau].im);
            let gyx = 0.5 * (r[tau].im + s[tau].im);
            c[a * m + b] = sxx;
            c[(n + a) * m + n + b] = syy;
            let xy = if forward { gxy } else { gyx };
            c[a * m + n + b] = xy;
            c[(n + b) * m + a] = xy;
        }
    }
    c
}

/// `-log det C - x^T C^{-1} x` by dense Cholesky, reporting the failing pivot.
pub fn cholesky_loglik(mut c: Vec<f64>, m: usize, x: &[f64]) -> Result<f64> {
    cholesky_in_place(&mut c, m)?;
    let mut logdet = 0.0;
    let mut z = x.to_vec();
    for i in 0..m {
        let mut acc = z[i];
        for k in 0..i {
            acc -= c[i * m + k] * z[k];
        }
        z[i] = acc / c[i * m + i];
        logdet += 2.0 * c[i * m + i].ln();
    }
    Ok(-logdet - z.iter().map(|v| v * v).sum::<f64>())
}

/// Lower Cholesky factor stored in the lower triangle of `c`.
pub fn cholesky_in_place(c: &mut [f64], m: usize) -> Result<()> {
    for j in 0..m {
        let mut d = c[j * m + j];
        for k in 0..j {
            d -= c[j * m + k] * c[j * m + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Conditioning { pivot: j });
        }
        let d = d.sqrt();
        c[j * m + j] = d;
        for i in j + 1..m {
            let mut acc = c[i * m + j];
            for k in 0..j {
                acc -= c[i * m + k] * c[j * m + k];
            }
            c[i * m + j] = acc / d;
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            c[i * m + j] = 0.0;
        }
    }
    Ok(())
}

/// One-shot evaluation with a fixed model.
pub fn loglik(series: &SampledSeries, spec: &ModelSpec, template: ModelTemplate, config: ObjectiveConfig) -> Result<f64> {
    LikelihoodObjective::new(series, template, config)?.loglik(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Coherence, Family, MaternParams, RotaryMatern};
    use approx::assert_relative_eq;

    fn matern_template() -> ModelTemplate {
        ModelTemplate::new(Family::Matern)
    }

    fn dense_toeplitz_loglik(acvs: &[f64], x: &[f64]) -> f64 {
        let n = x.len();
        let c: Vec<f64> = (0..n * n).map(|k| acvs[(k / n).abs_diff(k % n)]).collect();
        cholesky_loglik(c, n, x).unwrap()
    }

    #[test]
    fn time_exact_examples() {
        let white = ModelSpec::WhiteNoise { sigma2: 1.0 };
        let t = ModelTemplate::new(Family::WhiteNoise);
        let cfg = ObjectiveConfig::new(Variant::TimeExact, Domain::Real);
        let zeros = SampledSeries::real(vec![0.0; 5], 1.0).unwrap();
        assert_eq!(loglik(&zeros, &white, t.clone(), cfg.clone()).unwrap(), 0.0);
        let ones = SampledSeries::real(vec![1.0, 1.0], 1.0).unwrap();
        assert_relative_eq!(loglik(&ones, &white, t, cfg).unwrap(), -2.0, epsilon = 1e-15);
    }

    #[test]
    fn levinson_matches_dense_cholesky() {
        let m = MaternParams::new(2.0, 0.7, 0.3).unwrap();
        let acvs = m.acvs_lags(40, 1.0);
        let x: Vec<f64> = (0..40).map(|t| ((t * 7 % 11) as f64 - 5.0) / 3.0).collect();
        assert_relative_eq!(
            levinson_loglik(&acvs, &x).unwrap(),
            dense_toeplitz_loglik(&acvs, &x),
            max_relative = 1e-10
        );
    }

    #[test]
    fn singular_covariance_reports_pivot() {
        let acvs = vec![1.0, 1.0, 1.0];
        match levinson_loglik(&acvs, &[1.0, 1.0, 1.0]) {
            Err(Error::Conditioning { pivot }) => assert_eq!(pivot, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn whittle_white_noise_by_hand() {
        let s = SampledSeries::real(vec![1.0, -1.0, 2.0, 0.5], 1.0).unwrap();
        let white = ModelSpec::WhiteNoise { sigma2: 2.0 };
        let t = ModelTemplate::new(Family::WhiteNoise);
        let obj = LikelihoodObjective::new(&s, t, ObjectiveConfig::new(Variant::Standard, Domain::Real)).unwrap();
        let p = obj.periodogram().unwrap();
        let want: f64 = -p.iter().map(|v| 2f64.ln() + v / 2.0).sum::<f64>();
        assert_relative_eq!(obj.loglik(&white).unwrap(), want, epsilon = 1e-14);
        assert_eq!(obj.n_eff(), 4.0);
    }

    #[test]
    fn blurred_white_noise_equals_standard() {
        let s = SampledSeries::real(vec![0.3, -1.2, 2.0, 0.5, 0.1, -0.4, 1.1], 0.5).unwrap();
        let white = ModelSpec::WhiteNoise { sigma2: 1.3 };
        let t = ModelTemplate::new(Family::WhiteNoise);
        let a = loglik(&s, &white, t.clone(), ObjectiveConfig::new(Variant::Standard, Domain::Real)).unwrap();
        let b = loglik(&s, &white, t, ObjectiveConfig::new(Variant::Blurred, Domain::Real)).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-13);
    }

    #[test]
    fn blurred_spectrum_matches_direct_sum() {
        let m = MaternParams::new(1.5, 0.9, 0.4).unwrap();
        let n = 24;
        let s = SampledSeries::real(vec![0.0; n], 1.0).unwrap();
        for kind in [TaperKind::Uniform, TaperKind::Cosine] {
            let cfg = ObjectiveConfig::new(Variant::TaperedBlurred, Domain::Real).with_taper(kind);
            let obj = LikelihoodObjective::new(&s, matern_template(), cfg).unwrap();
            let spectra = match obj.model_spectra(&ModelSpec::Matern(m)).unwrap() {
                ModelSpectra::Real(v) => v,
                _ => unreachable!(),
            };
            let h = obj.taper().weights().to_vec();
            let acvs = m.acvs_lags(n, 1.0);
            for j in 0..n {
                let w = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                // E|J|^2 as a double sum over the taper.
                let mut direct = 0.0;
                for t in 0..n {
                    for u in 0..n {
                        direct += h[t] * h[u] * acvs[t.abs_diff(u)] * (w * (t as f64 - u as f64)).cos();
                    }
                }
                assert_relative_eq!(spectra[j], direct, max_relative = 1e-12);
            }
        }
    }

    fn complex_series(n: usize) -> SampledSeries {
        let x: Vec<f64> = (0..n).map(|t| ((t * 5 % 7) as f64 - 3.0) / 2.0).collect();
        let y: Vec<f64> = (0..n).map(|t| ((t * 3 % 5) as f64 - 2.0) / 1.5).collect();
        SampledSeries::bivariate(&x, &y, 1.0).unwrap()
    }

    fn rotary_template(coherence: crate::models::CoherenceFamily) -> ModelTemplate {
        ModelTemplate::new(Family::RotaryMatern { shared: false, coherence })
    }

    #[test]
    fn rotary_minus_cartesian_is_log4_per_frequency() {
        let spec = ModelSpec::RotaryMatern(RotaryMatern {
            plus: MaternParams::new(2.0, 0.8, 0.5).unwrap(),
            minus: MaternParams::new(1.0, 1.2, 0.3).unwrap(),
            coherence: Coherence::Constant { rho: 0.4 },
        });
        let s = complex_series(33);
        let t = rotary_template(crate::models::CoherenceFamily::Constant);
        for variant in [Variant::Standard, Variant::Blurred] {
            let rot = LikelihoodObjective::new(&s, t.clone(), ObjectiveConfig::new(variant, Domain::Rotary)).unwrap();
            let cart = LikelihoodObjective::new(&s, t.clone(), ObjectiveConfig::new(variant, Domain::Cartesian)).unwrap();
            let diff = rot.loglik(&spec).unwrap() - cart.loglik(&spec).unwrap();
            let expect = -(rot.mask().count() as f64) * 4f64.ln();
            assert!((diff - expect).abs() < 1e-10, "{diff} vs {expect}");
        }
    }

    #[test]
    fn proper_form_agrees_with_rotary_without_cross_terms() {
        let spec = ModelSpec::RotaryMatern(RotaryMatern {
            plus: MaternParams::new(2.0, 0.8, 0.5).unwrap(),
            minus: MaternParams::new(1.0, 1.2, 0.3).unwrap(),
            coherence: Coherence::None,
        });
        let s = complex_series(31);
        let t = rotary_template(crate::models::CoherenceFamily::None);
        for variant in [Variant::Standard, Variant::Blurred] {
            let rot = LikelihoodObjective::new(&s, t.clone(), ObjectiveConfig::new(variant, Domain::Rotary)).unwrap();
            let mut cfg = ObjectiveConfig::new(variant, Domain::Proper);
            cfg.mask.exclude_zero = true;
            let proper = LikelihoodObjective::new(&s, t.clone(), cfg).unwrap();
            assert_relative_eq!(
                rot.loglik(&spec).unwrap(),
                proper.loglik(&spec).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn complex_time_exact_matches_real_when_uncoupled() {
        // Proper isotropic model with real s: X and Y independent with acvs s/2.
        let m = MaternParams::new(1.0, 0.5, 0.7).unwrap();
        let spec = ModelSpec::RotaryMatern(RotaryMatern {
            plus: m,
            minus: m,
            coherence: Coherence::None,
        });
        let z = complex_series(12);
        let t = rotary_template(crate::models::CoherenceFamily::None);
        let got = loglik(&z, &spec, t, ObjectiveConfig::new(Variant::TimeExact, Domain::Rotary)).unwrap();
        let half: Vec<f64> = m.acvs_lags(12, 1.0).iter().map(|v| v / 2.0).collect();
        let want = levinson_loglik(&half, &z.real_parts()).unwrap() + levinson_loglik(&half, &z.imag_parts()).unwrap();
        assert_relative_eq!(got, want, max_relative = 1e-10);
    }

    #[test]
    fn rotary_requires_zero_exclusion() {
        let s = complex_series(16);
        let mut cfg = ObjectiveConfig::new(Variant::Blurred, Domain::Rotary);
        cfg.mask.exclude_zero = false;
        let t = rotary_template(crate::models::CoherenceFamily::None);
        assert!(LikelihoodObjective::new(&s, t, cfg).is_err());
    }

    #[test]
    fn kind_mismatch() {
        let s = complex_series(16);
        let r = LikelihoodObjective::new(&s, matern_template(), ObjectiveConfig::new(Variant::Blurred, Domain::Real));
        assert!(matches!(r, Err(Error::Kind(_))));
    }

    #[test]
    fn time_exact_size_cap() {
        let s = SampledSeries::real(vec![0.0; 50], 1.0).unwrap();
        let mut cfg = ObjectiveConfig::new(Variant::TimeExact, Domain::Real);
        cfg.time_exact_max_n = 10;
        assert!(matches!(
            LikelihoodObjective::new(&s, matern_template(), cfg),
            Err(Error::Size(_))
        ));
    }
}
