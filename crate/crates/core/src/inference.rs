//! Fitting, asymptotic covariance, the impropriety test and model choice.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::fft;
use crate::likelihood::{Domain, LikelihoodObjective, ModelSpectra, Variant};
use crate::models::{differenced_acvs, CoherenceFamily, Family, MaternParams, ModelSpec, ModelTemplate};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::series::{FourierGrid, FrequencyMask, MaskSpec, ParameterVector, SampledSeries, SeriesKind, Sided};
use crate::spectral::{dft, make_taper, rotary_dft, Taper, TaperKind};

pub const NU_MIN: f64 = 0.05;
const NU_MAX: f64 = 10.0;
const CORRELATION_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMethod {
    /// `H^{-1} Var(score) H^{-1}` with the exact periodogram covariance.
    Sandwich,
    /// Inverse observed information.
    InverseHessian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelSpec,
    pub template: ModelTemplate,
    pub theta_hat: ParameterVector,
    pub loglik: f64,
    pub loglik_per_frequency: f64,
    pub cov_theta: Option<Vec<Vec<f64>>>,
    pub std_errors: Option<Vec<f64>>,
    pub covariance_method: Option<CovarianceMethod>,
    /// The Hessian was not negative definite and a pseudo-inverse was used.
    pub hessian_indefinite: bool,
    pub aic: f64,
    pub aicc: f64,
    pub n_params: usize,
    pub n_eff: f64,
    pub n_eval: usize,
    pub converged: bool,
    pub variant: Variant,
    pub domain: Domain,
    pub taper: TaperKind,
    pub mask: MaskSpec,
    pub mask_count: usize,
    pub difference: bool,
    pub n: usize,
}

impl FitResult {
    /// Log-likelihood on the scale of a Gaussian log-density, used by the
    /// information criteria.
    pub fn information_loglik(&self) -> f64 {
        information_scale(self.variant) * self.loglik
    }

    pub fn is_complex(&self) -> bool {
        self.model.kind() == SeriesKind::Complex
    }
}

/// The time-domain objective drops the factor one half of the Gaussian
/// log-density; the frequency-domain forms are already on that scale.
fn information_scale(variant: Variant) -> f64 {
    if variant == Variant::TimeExact {
        0.5
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub optimizer: NelderMeadOptions,
    pub covariance: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            optimizer: NelderMeadOptions::default(),
            covariance: true,
        }
    }
}

impl FitOptions {
    pub fn point_only() -> Self {
        Self {
            covariance: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub null: FitResult,
    pub alt: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedModel {
    pub index: usize,
    pub family: Family,
    pub n_params: usize,
    pub aic: f64,
    pub aicc: f64,
    pub delta_aicc: f64,
}

/// Maximizes the objective with Nelder–Mead in unconstrained coordinates.
pub fn fit(objective: &LikelihoodObjective, init: Option<ParameterVector>) -> Result<FitResult> {
    fit_with(objective, init, &FitOptions::default())
}

pub fn fit_with(objective: &LikelihoodObjective, init: Option<ParameterVector>, opts: &FitOptions) -> Result<FitResult> {
    let template = objective.template();
    let init = match init {
        Some(p) => template.free_vector(&p.values())?,
        None => default_init(objective)?,
    };
    let start = objective
        .loglik_free(&init.values())
        .map_err(|e| Error::Init(format!("objective fails at the initial point: {e}")))?;
    if !start.is_finite() {
        return Err(Error::Init("objective is not finite at the initial point".into()));
    }
    let cost = |u: &[f64]| -> f64 {
        match init.from_unconstrained(u) {
            Ok(p) => objective.loglik_free(&p.values()).map(|v| -v).unwrap_or(f64::INFINITY),
            Err(_) => f64::INFINITY,
        }
    };
    let min = nelder_mead(cost, &init.to_unconstrained(), &opts.optimizer);
    let theta = init.from_unconstrained(&min.x)?;
    finish(objective, theta, -min.value, min.evaluations, min.converged, opts)
}

fn finish(
    objective: &LikelihoodObjective,
    theta: ParameterVector,
    loglik: f64,
    n_eval: usize,
    converged: bool,
    opts: &FitOptions,
) -> Result<FitResult> {
    let template = objective.template().clone();
    let model = template.build(&theta.values())?;
    let cfg = objective.config();
    let p = template.n_free();
    let complex = objective.series().kind() == SeriesKind::Complex;
    let n_eff = if cfg.variant == Variant::TimeExact {
        objective.series().len() as f64
    } else {
        objective.n_eff() / taper_bandwidth_factor(objective.taper())
    };
    let info = information_scale(cfg.variant) * loglik;
    let (cov, method, indefinite) = if opts.covariance {
        match covariance(objective, &theta.values()) {
            Ok((c, m, flag)) => (Some(c), Some(m), flag),
            Err(_) => (None, None, true),
        }
    } else {
        (None, None, false)
    };
    let std_errors = cov
        .as_ref()
        .map(|c| (0..p).map(|k| c[k][k].max(0.0).sqrt()).collect());
    Ok(FitResult {
        model,
        template,
        theta_hat: theta,
        loglik,
        loglik_per_frequency: objective.loglik_per_frequency(loglik),
        cov_theta: cov,
        std_errors,
        covariance_method: method,
        hessian_indefinite: indefinite,
        aic: -2.0 * info + 2.0 * p as f64,
        aicc: aicc(info, p, n_eff, complex),
        n_params: p,
        n_eff,
        n_eval,
        converged,
        variant: cfg.variant,
        domain: cfg.domain,
        taper: cfg.effective_taper(),
        mask: cfg.mask,
        mask_count: objective.mask().count(),
        difference: cfg.difference,
        n: objective.series().len(),
    })
}

/// `-2 l + 2pN/(N-p-1)` for real data and `-2 l + 4pN/(2N-p-1)` for complex.
pub fn aicc(loglik: f64, p: usize, n_eff: f64, complex: bool) -> f64 {
    -2.0 * loglik + aicc_penalty(p, n_eff, complex)
}

pub fn aicc_penalty(p: usize, n_eff: f64, complex: bool) -> f64 {
    let p = p as f64;
    let (num, den) = if complex {
        (4.0 * p * n_eff, 2.0 * n_eff - p - 1.0)
    } else {
        (2.0 * p * n_eff, n_eff - p - 1.0)
    };
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// Ranks fits by AICC computed with a common effective sample count.
pub fn model_select(fits: &[FitResult], n_eff: f64, complex: bool) -> Result<Vec<RankedModel>> {
    let first = fits
        .first()
        .ok_or_else(|| Error::Comparability("no fits to compare".into()))?;
    for f in fits {
        if f.mask != first.mask || f.mask_count != first.mask_count || f.n != first.n || f.difference != first.difference {
            return Err(Error::Comparability(
                "fits use different data, masks or preprocessing".into(),
            ));
        }
    }
    let mut ranked: Vec<RankedModel> = fits
        .iter()
        .enumerate()
        .map(|(index, f)| RankedModel {
            index,
            family: f.template.family.clone(),
            n_params: f.n_params,
            aic: -2.0 * f.information_loglik() + 2.0 * f.n_params as f64,
            aicc: aicc(f.information_loglik(), f.n_params, n_eff, complex),
            delta_aicc: 0.0,
        })
        .collect();
    ranked.sort_by(|a, b| a.aicc.total_cmp(&b.aicc));
    let best = ranked[0].aicc;
    for r in &mut ranked {
        r.delta_aicc = r.aicc - best;
    }
    Ok(ranked)
}

/// Offset in Rayleigh units, on a 16x finer grid, at which the white-noise
/// correlation `|sum h_t^2 e^{-i delta t}|` of tapered Fourier coefficients
/// first drops below 0.05. The uniform taper gives 1.
pub fn taper_bandwidth_factor(taper: &Taper) -> f64 {
    if taper.is_uniform() {
        return 1.0;
    }
    let w = taper.weights();
    let n = w.len();
    let energy: f64 = w.iter().map(|h| h * h).sum();
    for k in 1..=16 * n {
        let delta = k as f64 / 16.0;
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, h) in w.iter().enumerate() {
            acc += Complex64::from_polar(h * h, -2.0 * PI * delta * t as f64 / n as f64);
        }
        if acc.norm() / energy < CORRELATION_THRESHOLD {
            return delta.max(1.0);
        }
    }
    n as f64
}

/// Matérn starting values from a log-log regression over the upper half of
/// the given positive frequencies.
pub fn init_matern_from_periodogram(freqs: &[f64], values: &[f64], n: usize, delta: f64) -> Result<MaternParams> {
    let pts: Vec<(f64, f64)> = freqs
        .iter()
        .zip(values)
        .filter(|(w, v)| **w > 0.0 && **v > 0.0 && v.is_finite())
        .map(|(w, v)| (*w, *v))
        .collect();
    if pts.len() < 8 {
        return Err(Error::Init(format!(
            "need at least 8 positive masked frequencies, got {}",
            pts.len()
        )));
    }
    let alpha = 10.0 * 2.0 * PI / (n as f64 * delta);
    let upper = &pts[pts.len() / 2..];
    let (xs, ys): (Vec<f64>, Vec<f64>) = upper.iter().map(|(w, v)| (w.ln(), v.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let nu = if sxx > 1e-12 {
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = -sxy / sxx;
        ((slope - 1.0) / 2.0).clamp(NU_MIN, NU_MAX)
    } else {
        0.5
    };
    let unit = MaternParams { phi: 1.0, nu, alpha };
    let ratio = pts.iter().map(|(w, v)| v / unit.spectrum(*w)).sum::<f64>() / pts.len() as f64;
    MaternParams::new(ratio.sqrt(), nu, alpha)
}

/// Matérn starting values from the periodogram of `series` over `mask`.
pub fn init_matern(series: &SampledSeries, mask: &MaskSpec) -> Result<ParameterVector> {
    let grid = FourierGrid::new(series.len(), series.delta(), Sided::One)?;
    let m = FrequencyMask::band(&grid, mask)?;
    let d = dft(series, &make_taper(TaperKind::Uniform, series.len())?)?;
    let (freqs, values): (Vec<f64>, Vec<f64>) = m
        .positions()
        .map(|p| (grid.frequencies()[p], d.at(grid.indices()[p]).norm_sqr()))
        .unzip();
    let params = match init_matern_from_periodogram(&freqs, &values, series.len(), series.delta()) {
        Ok(p) => p,
        Err(_) => fallback_matern(series)?,
    };
    Family::Matern.parameters(&ModelSpec::Matern(params))
}

fn fallback_matern(series: &SampledSeries) -> Result<MaternParams> {
    let alpha = 10.0 * 2.0 * PI / (series.len() as f64 * series.delta());
    // Unit-amplitude variance at nu = 1/2 is 1/(2 alpha).
    let var = series.mean_square().max(1e-300);
    MaternParams::new((var * 2.0 * alpha).sqrt(), 0.5, alpha)
}

/// Starting values for the objective's free parameters.
pub fn default_init(objective: &LikelihoodObjective) -> Result<ParameterVector> {
    let template = objective.template();
    let series = objective.series();
    let mask = objective.config().mask;
    let n = series.len();
    let delta = series.delta();
    let mut full: BTreeMap<String, f64> = BTreeMap::new();
    let put_matern = |full: &mut BTreeMap<String, f64>, m: &MaternParams, suffix: &str| {
        let key = |b: &str| if suffix.is_empty() { b.to_string() } else { format!("{b}_{suffix}") };
        full.insert(key("phi"), m.phi);
        full.insert(key("nu"), m.nu);
        full.insert(key("alpha"), m.alpha);
    };
    match &template.family {
        Family::WhiteNoise => {
            full.insert("sigma2".into(), series.mean_square().max(1e-300));
        }
        Family::Matern => {
            for e in init_matern(series, &mask)?.entries() {
                full.insert(e.name.clone(), e.value);
            }
        }
        Family::MaternDamping { .. } => {
            full.insert("alpha".into(), 10.0 * 2.0 * PI / (n as f64 * delta));
        }
        Family::RotaryMatern { shared, coherence } => {
            let rd = rotary_dft(series, &make_taper(TaperKind::Uniform, n)?)?;
            let grid = FourierGrid::new(n, delta, Sided::One)?;
            let m = FrequencyMask::band(&grid, &MaskSpec { exclude_zero: true, ..mask })?;
            let pick = |v: &[Complex64]| -> (Vec<f64>, Vec<f64>) {
                m.positions().map(|p| (grid.frequencies()[p], v[p].norm_sqr())).unzip()
            };
            let (fp, sp) = pick(&rd.plus);
            let (_, sm) = pick(&rd.minus);
            let side = |v: &[f64]| init_matern_from_periodogram(&fp, v, n, delta).or_else(|_| fallback_matern(series));
            if *shared {
                let avg: Vec<f64> = sp.iter().zip(&sm).map(|(a, b)| 0.5 * (a + b)).collect();
                put_matern(&mut full, &side(&avg)?, "");
            } else {
                put_matern(&mut full, &side(&sp)?, "plus");
                put_matern(&mut full, &side(&sm)?, "minus");
            }
            for (name, v) in template.family.null_values(n) {
                full.insert(name, v);
            }
            if let CoherenceFamily::Logistic { .. } = coherence {
                full.insert("q0".into(), 2.0);
            }
        }
        Family::ComplexAr { aligned_noise } => {
            for (k, v) in yule_walker_complex_ar(series, *aligned_noise) {
                full.insert(k, v);
            }
        }
    }
    for (k, v) in &template.fixed {
        full.insert(k.clone(), *v);
    }
    let values: Vec<f64> = template
        .free_names()
        .iter()
        .map(|name| {
            full.get(name)
                .copied()
                .ok_or_else(|| Error::Init(format!("no starting value for `{name}`")))
        })
        .collect::<Result<_>>()?;
    let mut init = template.free_vector(&values)?;
    profile_coherence(objective, &mut init)?;
    Ok(init)
}

/// Chooses the coherence scale from a coarse grid with the other
/// parameters held at their starting values.
fn profile_coherence(objective: &LikelihoodObjective, init: &mut ParameterVector) -> Result<()> {
    let n = objective.series().len() as f64;
    let (name, candidates): (&str, Vec<f64>) = if init.get("c").is_some() {
        ("c", (0..14).map(|k| 2.0 * PI * n * 0.5f64.powi(2 * k)).collect())
    } else if init.get("rho").is_some() {
        ("rho", vec![0.0, -0.5, 0.5, -0.9, 0.9])
    } else if init.get("q0").is_some() {
        ("q0", vec![40.0, 5.0, 2.0, 0.0, -2.0])
    } else {
        return Ok(());
    };
    let mut best = (f64::NEG_INFINITY, init.require(name)?);
    for c in candidates {
        let mut trial = init.clone();
        trial.set(name, c)?;
        if let Ok(v) = objective.loglik_free(&trial.values()) {
            if v > best.0 {
                best = (v, c);
            }
        }
    }
    init.set(name, best.1)
}

/// Widely linear Yule–Walker estimates from lag-0 and lag-1 moments.
fn yule_walker_complex_ar(series: &SampledSeries, aligned: bool) -> Vec<(String, f64)> {
    let z = series.values();
    let n = z.len();
    let mean = |f: &dyn Fn(usize) -> Complex64, len: usize| (0..len).map(f).sum::<Complex64>() / len as f64;
    let s0 = mean(&|t| z[t] * z[t].conj(), n).re;
    let r0 = mean(&|t| z[t] * z[t], n);
    let s1 = mean(&|t| z[t + 1] * z[t].conj(), n - 1);
    let r1 = mean(&|t| z[t + 1] * z[t], n - 1);
    // [s0, conj r0; r0, s0] (a, b) = (s1, r1)
    let det = s0 * s0 - r0.norm_sqr();
    let (mut a, mut b) = if det > 1e-12 * s0 * s0 {
        ((s0 * s1 - r0.conj() * r1) / det, (s0 * r1 - r0 * s1) / det)
    } else {
        (s1 / s0, Complex64::new(0.0, 0.0))
    };
    let total = a.norm() + b.norm();
    if total > 0.95 {
        a *= 0.95 / total;
        b *= 0.95 / total;
    }
    let explained = (a.norm_sqr() + b.norm_sqr()) * s0 + 2.0 * (a * b.conj() * r0).re;
    let sigma2 = (s0 - explained).max(1e-3 * s0).max(1e-300);
    let mut out = vec![
        ("lambda1".to_string(), a.norm().max(1e-3)),
        ("phi1".to_string(), a.arg()),
        ("lambda2".to_string(), b.norm().max(1e-3)),
        ("phi2".to_string(), b.arg()),
        ("sigma2".to_string(), sigma2),
    ];
    if !aligned {
        let eps_rel = r0 - a * a * r0 - 2.0 * a * b * s0 - b * b * r0.conj();
        out.push(("relation_ratio".into(), (eps_rel.norm() / sigma2).clamp(0.01, 0.9)));
        out.push(("relation_phase".into(), eps_rel.arg()));
    }
    out
}

/// Per-coordinate finite-difference steps in natural units.
pub fn fd_steps(theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|t| (1e-4 * t.abs()).max(1e-6)).collect()
}

/// Central-difference gradient of `f` at `theta`.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> Result<f64>, theta: &[f64]) -> Result<Vec<f64>> {
    let h = fd_steps(theta);
    (0..theta.len())
        .map(|k| {
            let mut p = theta.to_vec();
            p[k] = theta[k] + h[k];
            let up = f(&p)?;
            p[k] = theta[k] - h[k];
            let down = f(&p)?;
            Ok((up - down) / (2.0 * h[k]))
        })
        .collect()
}

/// Central-difference Hessian of `f` at `theta`.
pub fn fd_hessian(f: &dyn Fn(&[f64]) -> Result<f64>, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = theta.len();
    let h = fd_steps(theta);
    let f0 = f(theta)?;
    let at = |shifts: &[(usize, f64)]| -> Result<f64> {
        let mut p = theta.to_vec();
        for &(k, s) in shifts {
            p[k] += s * h[k];
        }
        f(&p)
    };
    let mut hess = vec![vec![0.0; d]; d];
    for i in 0..d {
        hess[i][i] = (at(&[(i, 1.0)])? - 2.0 * f0 + at(&[(i, -1.0)])?) / (h[i] * h[i]);
        for j in 0..i {
            let v = (at(&[(i, 1.0), (j, 1.0)])? - at(&[(i, 1.0), (j, -1.0)])? - at(&[(i, -1.0), (j, 1.0)])?
                + at(&[(i, -1.0), (j, -1.0)])?)
                / (4.0 * h[i] * h[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    Ok(hess)
}

/// `(-H)^{-1}` for a symmetric `H`, with a pseudo-inverse over the negative
/// eigenvalues when `H` is not negative definite.
fn inverse_negative(hess: &[Vec<f64>]) -> (DMatrix<f64>, bool) {
    let d = hess.len();
    let m = DMatrix::from_fn(d, d, |i, j| -hess[i][j]);
    let eig = SymmetricEigen::new(m);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut indefinite = false;
    let inv_vals = eig.eigenvalues.map(|v| {
        if v > 1e-12 * scale {
            1.0 / v
        } else {
            indefinite = true;
            0.0
        }
    });
    let q = &eig.eigenvectors;
    (q * DMatrix::from_diagonal(&inv_vals) * q.transpose(), indefinite)
}

/// Asymptotic covariance of the estimator at the free parameters `theta`.
pub fn covariance(objective: &LikelihoodObjective, theta: &[f64]) -> Result<(Vec<Vec<f64>>, CovarianceMethod, bool)> {
    let f = |p: &[f64]| objective.loglik_free(p);
    let cfg = objective.config();
    let scale = information_scale(cfg.variant);
    let hess: Vec<Vec<f64>> = fd_hessian(&f, theta)?
        .into_iter()
        .map(|row| row.into_iter().map(|v| v * scale).collect())
        .collect();
    let (hinv, indefinite) = inverse_negative(&hess);
    let to_rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| 0.5 * (m[(i, j)] + m[(j, i)])).collect()).collect()
    };
    if cfg.variant == Variant::TimeExact || cfg.domain != Domain::Real {
        return Ok((to_rows(&hinv), CovarianceMethod::InverseHessian, indefinite));
    }
    let v = score_variance(objective, theta)?;
    let d = theta.len();
    let vm = DMatrix::from_fn(d, d, |i, j| v[i][j]);
    let sandwich = &hinv * vm * &hinv;
    Ok((to_rows(&sandwich), CovarianceMethod::Sandwich, indefinite))
}

fn masked_real_spectrum(objective: &LikelihoodObjective, spec: &ModelSpec) -> Result<Vec<f64>> {
    let grid = objective.grid();
    match objective.model_spectra(spec)? {
        ModelSpectra::Real(s) => Ok(objective
            .masked_indices()
            .iter()
            .map(|&j| s[grid.fft_bin(j)])
            .collect()),
        ModelSpectra::Complex { .. } => Err(Error::Kind("expected a real objective".into())),
    }
}

/// `Var(d l / d theta)` for a real Whittle objective using the exact
/// covariance of periodogram ordinates under the model at `theta`.
pub fn score_variance(objective: &LikelihoodObjective, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
    let template = objective.template();
    let spec = template.build(theta)?;
    let s0 = masked_real_spectrum(objective, &spec)?;
    let h = fd_steps(theta);
    let d = theta.len();
    // w[k][j] = (dS_j / d theta_k) / S_j^2
    let mut w = vec![vec![0.0; s0.len()]; d];
    for k in 0..d {
        let mut p = theta.to_vec();
        p[k] = theta[k] + h[k];
        let up = masked_real_spectrum(objective, &template.build(&p)?)?;
        p[k] = theta[k] - h[k];
        let down = masked_real_spectrum(objective, &template.build(&p)?)?;
        for j in 0..s0.len() {
            w[k][j] = (up[j] - down[j]) / (2.0 * h[k]) / (s0[j] * s0[j]);
        }
    }
    let cov = periodogram_covariance(objective, &spec)?;
    let m = s0.len();
    let mut out = vec![vec![0.0; d]; d];
    for a in 0..d {
        for b in 0..=a {
            let mut acc = 0.0;
            for i in 0..m {
                let row = &cov[i * m..(i + 1) * m];
                let inner: f64 = row.iter().zip(&w[b]).map(|(c, wb)| c * wb).sum();
                acc += w[a][i] * inner;
            }
            out[a][b] = acc;
            out[b][a] = acc;
        }
    }
    Ok(out)
}

/// `Cov(I_j, I_j')` over the masked frequencies of a real objective,
/// row-major, from the exact Gaussian fourth moments.
pub fn periodogram_covariance(objective: &LikelihoodObjective, spec: &ModelSpec) -> Result<Vec<f64>> {
    let series = objective.series();
    let n = series.len();
    let delta = series.delta();
    let acvs = if objective.config().difference {
        differenced_acvs(&spec.real_lags(n + 1, delta)?)
    } else {
        spec.real_lags(n, delta)?
    };
    let idx = objective.masked_indices();
    let cols = dft_covariance_columns(&acvs, objective.taper().weights(), delta, &idx);
    let m = idx.len();
    let mut out = vec![0.0; m * m];
    for (b, col) in cols.iter().enumerate() {
        for (a, &j) in idx.iter().enumerate() {
            let pos = col[j.rem_euclid(n as i64) as usize];
            let neg = col[(-j).rem_euclid(n as i64) as usize];
            out[a * m + b] = pos.norm_sqr() + neg.norm_sqr();
        }
    }
    Ok(out)
}

/// Columns `E[J(omega_k) conj J(omega_j)]` over all FFT bins `k`, for each
/// requested index `j`, given a real autocovariance and taper.
pub fn dft_covariance_columns(acvs: &[f64], taper: &[f64], delta: f64, indices: &[i64]) -> Vec<Vec<Complex64>> {
    let n = taper.len();
    let len = (2 * n).next_power_of_two();
    let mut eig = vec![Complex64::new(0.0, 0.0); len];
    eig[0] = acvs[0].into();
    for tau in 1..n {
        eig[tau] = acvs[tau].into();
        eig[len - tau] = acvs[tau].into();
    }
    fft::forward(&mut eig);
    indices
        .iter()
        .map(|&j| {
            let w = 2.0 * PI * j as f64 / n as f64;
            let mut v = vec![Complex64::new(0.0, 0.0); len];
            for s in 0..n {
                v[s] = Complex64::from_polar(taper[s], w * s as f64);
            }
            fft::forward(&mut v);
            for (x, e) in v.iter_mut().zip(&eig) {
                *x *= e;
            }
            fft::inverse(&mut v);
            let mut y: Vec<Complex64> = (0..n).map(|t| v[t] * (taper[t] * delta / len as f64)).collect();
            fft::forward(&mut y);
            y
        })
        .collect()
}

/// Likelihood-ratio test of a proper null against a coherent alternative,
/// both fitted with the same objective configuration.
pub fn lrt_impropriety(
    series: &SampledSeries,
    null: ModelTemplate,
    alt: ModelTemplate,
    config: crate::likelihood::ObjectiveConfig,
    opts: &FitOptions,
) -> Result<LrtResult> {
    let null_obj = LikelihoodObjective::new(series, null.clone(), config.clone())?;
    let alt_obj = LikelihoodObjective::new(series, alt.clone(), config)?;
    let null_names = null.free_names();
    let alt_names = alt.free_names();
    if !null_names.iter().all(|n| alt_names.contains(n)) || alt_names.len() <= null_names.len() {
        return Err(Error::Nesting(f64::NAN));
    }
    let null_fit = fit_with(&null_obj, None, opts)?;
    let n = alt_obj.series().len();
    let mut embed: BTreeMap<String, f64> = alt.family.null_values(n).into_iter().collect();
    for e in null_fit.theta_hat.entries() {
        embed.insert(e.name.clone(), e.value);
    }
    let values: Vec<f64> = alt_names
        .iter()
        .map(|k| embed.get(k).copied().ok_or_else(|| Error::Nesting(f64::NAN)))
        .collect::<Result<_>>()?;
    let embedded = alt.free_vector(&values)?;
    let embedded_ll = alt_obj.loglik_free(&embedded.values())?;
    let mut start = embedded.clone();
    profile_coherence(&alt_obj, &mut start)?;
    let mut alt_fit = fit_with(&alt_obj, Some(start), opts)?;
    if alt_fit.loglik < embedded_ll {
        let refit = fit_with(&alt_obj, Some(embedded), opts)?;
        if refit.loglik > alt_fit.loglik {
            alt_fit = refit;
        }
    }
    let raw = 2.0 * information_scale(null_fit.variant) * (alt_fit.loglik - null_fit.loglik);
    if raw < -1e-6 {
        return Err(Error::Nesting(raw));
    }
    let statistic = raw.max(0.0);
    let dof = alt_names.len() - null_names.len();
    Ok(LrtResult {
        statistic,
        dof,
        p_value: chi2_sf(statistic, dof),
        null: null_fit,
        alt: alt_fit,
    })
}

/// Upper tail of the chi-squared distribution.
pub fn chi2_sf(x: f64, dof: usize) -> f64 {
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    (1.0 - dist.cdf(x.max(0.0))).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::ObjectiveConfig;
    use approx::assert_relative_eq;

    fn pseudo_noise(n: usize, seed: u64) -> Vec<f64> {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn white_noise_fit_matches_closed_form() {
        let s = SampledSeries::real(pseudo_noise(200, 1), 1.0).unwrap();
        let obj = LikelihoodObjective::new(
            &s,
            ModelTemplate::new(Family::WhiteNoise),
            ObjectiveConfig::new(Variant::Standard, Domain::Real),
        )
        .unwrap();
        let f = fit(&obj, None).unwrap();
        let p = obj.periodogram().unwrap();
        let closed = p.iter().sum::<f64>() / p.len() as f64;
        assert!(f.converged);
        assert_relative_eq!(f.theta_hat.values()[0], closed, max_relative = 1e-6);
    }

    #[test]
    fn init_matern_examples() {
        let freqs: Vec<f64> = (1..=64).map(|j| j as f64 * 0.05).collect();
        let power: Vec<f64> = freqs.iter().map(|w| w.powi(-2)).collect();
        let m = init_matern_from_periodogram(&freqs, &power, 128, 1.0).unwrap();
        assert_relative_eq!(m.nu, 0.5, epsilon = 1e-12);
        let flat = vec![3.0; 64];
        assert_eq!(init_matern_from_periodogram(&freqs, &flat, 128, 1.0).unwrap().nu, NU_MIN);
        let m = init_matern_from_periodogram(&freqs, &flat, 1000, 1.0).unwrap();
        assert_relative_eq!(m.alpha, 0.02 * PI, epsilon = 1e-15);
        assert!(init_matern_from_periodogram(&freqs[..5], &flat[..5], 1000, 1.0).is_err());
    }

    #[test]
    fn aicc_arithmetic() {
        assert_relative_eq!(aicc_penalty(4, 1000.0, true), 16000.0 / 1995.0, epsilon = 1e-12);
        assert!((aicc_penalty(3, 1e12, true) - 6.0).abs() < 1e-9);
        assert!((aicc_penalty(3, 1e12, false) - 6.0).abs() < 1e-9);
        assert_eq!(aicc_penalty(5, 3.0, false), f64::INFINITY);
    }

    #[test]
    fn chi2_quantile() {
        assert!((chi2_sf(3.841458820694124, 1) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn taper_factors() {
        assert_eq!(taper_bandwidth_factor(&make_taper(TaperKind::Uniform, 256).unwrap()), 1.0);
        let dpss = taper_bandwidth_factor(&make_taper(TaperKind::Dpss { nw: 4.0 }, 256).unwrap());
        let cosine = taper_bandwidth_factor(&make_taper(TaperKind::Cosine, 256).unwrap());
        // Oracle: zero-padded FFT of h^2 on the 16x grid.
        let crossing = |kind: TaperKind| {
            let h = make_taper(kind, 256).unwrap();
            let mut buf = vec![Complex64::new(0.0, 0.0); 16 * 256];
            for (t, w) in h.weights().iter().enumerate() {
                buf[t] = (w * w).into();
            }
            fft::forward(&mut buf);
            (1..buf.len()).find(|&k| buf[k].norm() / buf[0].norm() < 0.05).unwrap() as f64 / 16.0
        };
        assert_eq!(dpss, crossing(TaperKind::Dpss { nw: 4.0 }));
        assert_eq!(cosine, crossing(TaperKind::Cosine));
        assert_eq!(dpss, 3.8125);
        assert!(cosine > 1.0 && cosine < dpss, "{cosine}");
    }

    #[test]
    fn periodogram_covariance_matches_dense_oracle() {
        let m = MaternParams::new(2.0, 0.6, 0.4).unwrap();
        let n = 20;
        let s = SampledSeries::real(vec![0.0; n], 1.0).unwrap();
        let cfg = ObjectiveConfig::new(Variant::TaperedBlurred, Domain::Real).with_taper(TaperKind::Cosine);
        let obj = LikelihoodObjective::new(&s, ModelTemplate::new(Family::Matern), cfg).unwrap();
        let spec = ModelSpec::Matern(m);
        let cov = periodogram_covariance(&obj, &spec).unwrap();
        let acvs = m.acvs_lags(n, 1.0);
        let h = obj.taper().weights();
        let idx = obj.masked_indices();
        let c = |w1: f64, w2: f64| -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..n {
                for u in 0..n {
                    acc += Complex64::from_polar(h[t] * h[u] * acvs[t.abs_diff(u)], -w1 * t as f64 + w2 * u as f64);
                }
            }
            acc
        };
        let k = idx.len();
        for (a, &j1) in idx.iter().enumerate() {
            for (b, &j2) in idx.iter().enumerate() {
                let (w1, w2) = (2.0 * PI * j1 as f64 / n as f64, 2.0 * PI * j2 as f64 / n as f64);
                let want = c(w1, w2).norm_sqr() + c(w1, -w2).norm_sqr();
                assert_relative_eq!(cov[a * k + b], want, max_relative = 1e-9, epsilon = 1e-12);
            }
        }
        // Diagonal of the blurred periodogram variance is the squared mean at interior bins.
        let mean = match obj.model_spectra(&spec).unwrap() {
            ModelSpectra::Real(v) => v,
            _ => unreachable!(),
        };
        let j = idx[3];
        assert!(cov[3 * k + 3] >= mean[j as usize].powi(2) * (1.0 - 1e-9));
    }

    #[test]
    fn model_select_rejects_mixed_masks() {
        let s = SampledSeries::real(pseudo_noise(128, 3), 1.0).unwrap();
        let t = ModelTemplate::new(Family::WhiteNoise);
        let a = fit_with(
            &LikelihoodObjective::new(&s, t.clone(), ObjectiveConfig::new(Variant::Standard, Domain::Real)).unwrap(),
            None,
            &FitOptions::point_only(),
        )
        .unwrap();
        let half = MaskSpec {
            max_fraction: 0.5,
            ..MaskSpec::default()
        };
        let b = fit_with(
            &LikelihoodObjective::new(&s, t, ObjectiveConfig::new(Variant::Standard, Domain::Real).with_mask(half)).unwrap(),
            None,
            &FitOptions::point_only(),
        )
        .unwrap();
        assert!(matches!(model_select(&[a, b], 128.0, false), Err(Error::Comparability(_))));
    }
}
