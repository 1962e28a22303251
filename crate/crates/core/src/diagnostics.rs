//! Numerical checks of the DFT covariance bound, the variance of aggregated
//! periodogram ordinates, and score/Hessian behaviour of the blurred
//! objective. The sampling interval is fixed at one throughout.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::{fd_gradient, fd_hessian, fd_steps};
use crate::likelihood::{LikelihoodObjective, ObjectiveConfig, Variant, Domain};
use crate::models::{blur_real, ModelSpec, ModelTemplate};
use crate::series::{SampledSeries, SeriesKind, Sided};
use crate::simulate::{Embedding, Simulator};
use crate::spectral::{make_taper, periodogram, TaperKind};

/// Calibration of the O(1) term in the DFT covariance bound.
pub const PROP1_K: f64 = 4.0;
/// Calibration of the O(log j_p) term in the aggregated variance bound, as a
/// multiple of `log j_p`.
pub const PROP2_K: f64 = 4.0;
/// Quadrature points per sample.
pub const QUADRATURE_OVERSAMPLE: usize = 8;

/// `D_N(x) = sum_{t=0}^{N-1} e^{-i x t}`.
pub fn dirichlet(x: f64, n: usize) -> Complex64 {
    let half = 0.5 * x;
    let s = half.sin();
    let phase = Complex64::from_polar(1.0, -half * (n as f64 - 1.0));
    if s.abs() < 1e-12 {
        return Complex64::new(n as f64, 0.0);
    }
    phase * ((n as f64 * half).sin() / s)
}

fn lag_count(spec: &ModelSpec, m: usize) -> usize {
    let decay = match spec {
        ModelSpec::Matern(p) => (60.0 / p.alpha).ceil().min(1e7) as usize,
        _ => 1,
    };
    m.max(decay)
}

/// Samples of the discrete-time spectrum `sum_tau s(tau) e^{-i w tau}` at
/// `w = 2 pi k / m`, exact up to lag truncation.
fn spectrum_samples(spec: &ModelSpec, m: usize) -> Result<Vec<f64>> {
    if spec.kind() != SeriesKind::Real {
        return Err(Error::Kind("diagnostics cover real-valued models".into()));
    }
    let lags = spec.real_lags(lag_count(spec, m), 1.0)?;
    Ok(blur_real(&lags, m, 1.0, |_| 1.0))
}

/// Quadrature of `(1/2 pi N) int S(w) D_N(w1 - w) D_N^*(w2 - w) dw` on an
/// `8N`-point grid, the covariance of `J(w) = N^{-1/2} sum X_t e^{-i w t}`.
#[derive(Debug, Clone)]
pub struct DftCovariance {
    n: usize,
    spectrum: Vec<f64>,
    kernel: Vec<Complex64>,
}

impl DftCovariance {
    pub fn new(spec: &ModelSpec, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Size(format!("need n >= 2, got {n}")));
        }
        let m = QUADRATURE_OVERSAMPLE * n;
        let spectrum = spectrum_samples(spec, m)?;
        let kernel = (0..m).map(|k| dirichlet(2.0 * PI * k as f64 / m as f64, n)).collect();
        Ok(Self { n, spectrum, kernel })
    }

    /// Largest spectrum value on the quadrature grid.
    pub fn sup_spectrum(&self) -> f64 {
        self.spectrum.iter().cloned().fold(f64::MIN, f64::max)
    }

    pub fn at(&self, omega1: f64, omega2: f64) -> Complex64 {
        let m = self.spectrum.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, s) in self.spectrum.iter().enumerate() {
            let w = 2.0 * PI * k as f64 / m as f64;
            acc += *s * dirichlet(omega1 - w, self.n) * dirichlet(omega2 - w, self.n).conj();
        }
        acc / (self.n * m) as f64
    }

    /// Covariance at Fourier frequencies `2 pi j1 / N` and `2 pi j2 / N`.
    pub fn at_fourier(&self, j1: i64, j2: i64) -> Complex64 {
        let m = self.spectrum.len() as i64;
        let (a, b) = (QUADRATURE_OVERSAMPLE as i64 * j1, QUADRATURE_OVERSAMPLE as i64 * j2);
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, s) in self.spectrum.iter().enumerate() {
            let k = k as i64;
            let d1 = self.kernel[(a - k).rem_euclid(m) as usize];
            let d2 = self.kernel[(b - k).rem_euclid(m) as usize];
            acc += *s * d1 * d2.conj();
        }
        acc / (self.n as f64 * m as f64)
    }
}

pub fn dft_covariance_exact(spec: &ModelSpec, n: usize, omega1: f64, omega2: f64) -> Result<Complex64> {
    for w in [omega1, omega2] {
        if !(w.abs() <= PI) {
            return Err(Error::Domain(format!("frequency {w} outside [-pi, pi]")));
        }
    }
    Ok(DftCovariance::new(spec, n)?.at(omega1, omega2))
}

pub fn default_jp(n: usize) -> usize {
    ((n as f64).cbrt() - 1e-9).ceil() as usize
}

/// `S_inf {1/j_p + 2/(pi^2 (|j1 - j2| - j_p)) [log j_p + K]}`.
pub fn prop1_bound(s_inf: f64, separation: i64, j_p: usize, k: f64) -> f64 {
    let jp = j_p as f64;
    s_inf * (1.0 / jp + 2.0 / (PI * PI * (separation.abs() as f64 - jp)) * (jp.ln() + k))
}

#[derive(Debug, Clone, Serialize)]
pub struct PairCheck {
    pub j1: i64,
    pub j2: i64,
    pub covariance: f64,
    pub bound: Option<f64>,
    /// `None` when the pair violates `0 < j_p < |j1 - j2| - j_p`.
    pub satisfied: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheckReport {
    pub n: usize,
    pub j_p: usize,
    pub k_constant: f64,
    pub s_inf: f64,
    pub pairs: Vec<PairCheck>,
    pub checked: usize,
    pub skipped: usize,
    /// Largest `|C| / bound` over checked pairs.
    pub max_ratio: f64,
    pub all_satisfied: bool,
}

/// All one-sided pairs `0 <= j2 < j1 <= N/2` separated by more than `2 j_p`.
pub fn separated_pairs(n: usize, j_p: usize) -> Vec<(i64, i64)> {
    let top = (n / 2) as i64;
    let gap = 2 * j_p as i64;
    (0..=top)
        .flat_map(|j1| (0..j1).filter(move |j2| j1 - j2 > gap).map(move |j2| (j1, j2)))
        .collect()
}

pub fn check_prop1_bound(spec: &ModelSpec, n: usize, pairs: &[(i64, i64)], j_p: usize) -> Result<BoundCheckReport> {
    let cov = DftCovariance::new(spec, n)?;
    let s_inf = cov.sup_spectrum();
    let checks: Vec<PairCheck> = pairs
        .par_iter()
        .map(|&(j1, j2)| {
            let c = cov.at_fourier(j1, j2).norm();
            let sep = (j1 - j2).abs();
            let valid = j_p > 0 && (j_p as i64) < sep - j_p as i64;
            let bound = valid.then(|| prop1_bound(s_inf, sep, j_p, PROP1_K));
            PairCheck {
                j1,
                j2,
                covariance: c,
                bound,
                satisfied: bound.map(|b| c <= b),
            }
        })
        .collect();
    let checked = checks.iter().filter(|c| c.bound.is_some()).count();
    let max_ratio = checks
        .iter()
        .filter_map(|c| c.bound.map(|b| c.covariance / b))
        .fold(0.0, f64::max);
    Ok(BoundCheckReport {
        n,
        j_p,
        k_constant: PROP1_K,
        s_inf,
        skipped: checks.len() - checked,
        checked,
        all_satisfied: checks.iter().all(|c| c.satisfied != Some(false)),
        max_ratio,
        pairs: checks,
    })
}

/// `a_max^2 S_inf^2 [1/(2N) + 2 j_p/N + 1/j_p^2 + 4 (log^2 j_p + K log j_p) / (3 N pi^2)]`.
pub fn prop2_bound(a_max: f64, s_inf: f64, n: usize, j_p: f64, k: f64) -> f64 {
    let nf = n as f64;
    let l = j_p.ln();
    a_max * a_max
        * s_inf
        * s_inf
        * (0.5 / nf + 2.0 * j_p / nf + 1.0 / (j_p * j_p) + 4.0 * (l * l + k * l.abs()) / (3.0 * nf * PI * PI))
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceCheck {
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub j_p: f64,
    pub k_constant: f64,
    /// Largest `|a_j|`; signed weights enter through their magnitude.
    pub a_max: f64,
    pub s_inf: f64,
    pub empirical_variance: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// Monte Carlo variance of `(1/N) sum_{j=1}^{N/2} a_j S_hat(2 pi j / N)`
/// against its bound at `j_p = N^{1/3}`. `weights[j - 1]` is `a_j`.
pub fn check_prop2_variance(
    spec: &ModelSpec,
    n: usize,
    weights: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<VarianceCheck> {
    let half = n / 2;
    if weights.len() != half {
        return Err(Error::Size(format!("need {half} weights, got {}", weights.len())));
    }
    if replicates < 2 {
        return Err(Error::config("replicates", "must be at least 2"));
    }
    let s_inf = spectrum_samples(spec, QUADRATURE_OVERSAMPLE * n)?
        .into_iter()
        .fold(f64::MIN, f64::max);
    let sim = Simulator::new(spec, n, 1.0, seed, Embedding::Circulant)?;
    let taper = make_taper(TaperKind::Uniform, n)?;
    let stats: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let p = periodogram(&sim.draw(r), &taper, Sided::One)?;
            Ok(weights.iter().zip(&p.values[1..=half]).map(|(a, v)| a * v).sum::<f64>() / n as f64)
        })
        .collect::<Result<_>>()?;
    let mean = stats.iter().sum::<f64>() / replicates as f64;
    let var = stats.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (replicates - 1) as f64;
    let a_max = weights.iter().fold(0.0f64, |a, w| a.max(w.abs()));
    let j_p = (n as f64).cbrt();
    let bound = prop2_bound(a_max, s_inf, n, j_p, PROP2_K);
    Ok(VarianceCheck {
        n,
        replicates,
        seed,
        j_p,
        k_constant: PROP2_K,
        a_max,
        s_inf,
        empirical_variance: var,
        bound,
        satisfied: var <= bound,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoreProbe {
    pub names: Vec<String>,
    pub theta: Vec<f64>,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Mean of `(1/N) d ell / d theta_i`.
    pub mean_score: Vec<f64>,
    pub score_se: Vec<f64>,
    /// Mean of `(1/N) d^2 ell / d theta_i^2`.
    pub mean_hessian: Vec<f64>,
    pub hessian_se: Vec<f64>,
    /// `-(1/2 pi) int_0^pi (d log S_bar / d theta_i)^2 dw`, the large-N
    /// limit of the mean Hessian on the one-sided grid.
    pub limit: Vec<f64>,
}

impl ScoreProbe {
    /// `|mean score| / s.e.` per coordinate.
    pub fn score_z(&self) -> Vec<f64> {
        self.mean_score.iter().zip(&self.score_se).map(|(m, s)| m.abs() / s).collect()
    }

    pub fn hessian_relative_error(&self) -> Vec<f64> {
        self.mean_hessian
            .iter()
            .zip(&self.limit)
            .map(|(h, l)| ((h - l) / l).abs())
            .collect()
    }
}

/// `-(1/2 pi) int_0^pi (d log S_bar_N / d theta)^2 dw` by trapezoid on an
/// `8N`-point grid, with finite-difference parameter derivatives.
pub fn hessian_limit(template: &ModelTemplate, theta: &[f64], n: usize) -> Result<Vec<f64>> {
    let m = QUADRATURE_OVERSAMPLE * n;
    let blurred = |free: &[f64]| -> Result<Vec<f64>> {
        let lags = template.build(free)?.real_lags(n, 1.0)?;
        Ok(blur_real(&lags, m, 1.0, |t| 1.0 - t as f64 / n as f64))
    };
    let h = fd_steps(theta);
    (0..theta.len())
        .map(|i| {
            let mut p = theta.to_vec();
            p[i] = theta[i] + h[i];
            let up = blurred(&p)?;
            p[i] = theta[i] - h[i];
            let down = blurred(&p)?;
            let g = |k: usize| ((up[k].ln() - down[k].ln()) / (2.0 * h[i])).powi(2);
            let half = m / 2;
            let mut sum = 0.5 * (g(0) + g(half));
            sum += (1..half).map(g).sum::<f64>();
            Ok(-sum * (2.0 * PI / m as f64) / (2.0 * PI))
        })
        .collect()
}

/// Mean finite-difference score and Hessian diagonal of the blurred
/// objective at `theta` over replicates drawn from `truth`.
pub fn score_hessian_probe(
    truth: &ModelSpec,
    template: &ModelTemplate,
    theta: &[f64],
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<ScoreProbe> {
    if theta.len() != template.n_free() {
        return Err(Error::Size(format!(
            "template has {} free parameters, got {}",
            template.n_free(),
            theta.len()
        )));
    }
    if replicates < 2 {
        return Err(Error::config("replicates", "must be at least 2"));
    }
    let sim = Simulator::new(truth, n, 1.0, seed, Embedding::Circulant)?;
    let config = ObjectiveConfig::new(Variant::Blurred, Domain::Real);
    let objective = |series: &SampledSeries| LikelihoodObjective::new(series, template.clone(), config.clone());
    // Smoothness precondition: the gradient from two step sizes agrees.
    let probe = objective(&sim.draw(u64::MAX))?;
    smoothness_check(&probe, theta)?;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let obj = objective(&sim.draw(r))?;
            let f = |p: &[f64]| obj.loglik_free(p);
            let g = fd_gradient(&f, theta)?;
            let h = fd_hessian(&f, theta)?;
            let nf = n as f64;
            Ok((g.iter().map(|v| v / nf).collect(), (0..theta.len()).map(|i| h[i][i] / nf).collect()))
        })
        .collect::<Result<_>>()?;
    let moments = |pick: &dyn Fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>| -> (Vec<f64>, Vec<f64>) {
        (0..theta.len())
            .map(|i| {
                let xs: Vec<f64> = rows.iter().map(|r| pick(r)[i]).collect();
                let mean = xs.iter().sum::<f64>() / xs.len() as f64;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
                (mean, (var / xs.len() as f64).sqrt())
            })
            .unzip()
    };
    let (mean_score, score_se) = moments(&|r| &r.0);
    let (mean_hessian, hessian_se) = moments(&|r| &r.1);
    Ok(ScoreProbe {
        names: template.free_names(),
        theta: theta.to_vec(),
        n,
        replicates,
        seed,
        mean_score,
        score_se,
        mean_hessian,
        hessian_se,
        limit: hessian_limit(template, theta, n)?,
    })
}

fn smoothness_check(objective: &LikelihoodObjective, theta: &[f64]) -> Result<()> {
    let f = |p: &[f64]| objective.loglik_free(p);
    let g = fd_gradient(&f, theta)?;
    let h = fd_steps(theta);
    for i in 0..theta.len() {
        let step = 4.0 * h[i];
        let mut p = theta.to_vec();
        p[i] = theta[i] + step;
        let up = f(&p)?;
        p[i] = theta[i] - step;
        let down = f(&p)?;
        let coarse = (up - down) / (2.0 * step);
        let scale = g[i].abs().max(1.0);
        if !((coarse - g[i]).abs() <= 1e-3 * scale) {
            return Err(Error::Domain(format!(
                "objective is not smooth in coordinate {i} at {theta:?}: gradients {} and {coarse}",
                g[i]
            )));
        }
    }
    Ok(())
}

/// Matérn smoothness and damping values of the bound-check grid.
pub const GRID_NU: [f64; 3] = [0.4, 1.0, 2.0];
pub const GRID_ALPHA: [f64; 3] = [0.01, 0.05, 0.5];
pub const GRID_N_PROP1: [usize; 2] = [64, 256];
pub const GRID_N_PROP2: [usize; 2] = [128, 512];

#[derive(Debug, Clone, Serialize)]
pub struct Prop1Summary {
    pub model: ModelSpec,
    pub n: usize,
    pub j_p: usize,
    pub checked: usize,
    pub skipped: usize,
    pub max_ratio: f64,
    pub all_satisfied: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop2Summary {
    pub model: ModelSpec,
    pub check: VarianceCheck,
    /// `bound / empirical`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundSuiteReport {
    pub prop1: Vec<Prop1Summary>,
    pub prop2: Vec<Prop2Summary>,
    pub all_satisfied: bool,
}

/// Every covariance bound over the grid, and the variance bound for
/// white noise and the benchmark Matérn with unit weights.
pub fn run_bound_suite(replicates: usize, seed: u64) -> Result<BoundSuiteReport> {
    use crate::models::MaternParams;
    let mut prop1 = Vec::new();
    for &nu in &GRID_NU {
        for &alpha in &GRID_ALPHA {
            let model = ModelSpec::Matern(MaternParams::new(1.0, nu, alpha)?);
            for &n in &GRID_N_PROP1 {
                let j_p = default_jp(n);
                let r = check_prop1_bound(&model, n, &separated_pairs(n, j_p), j_p)?;
                prop1.push(Prop1Summary {
                    model: model.clone(),
                    n,
                    j_p,
                    checked: r.checked,
                    skipped: r.skipped,
                    max_ratio: r.max_ratio,
                    all_satisfied: r.all_satisfied,
                });
            }
        }
    }
    let mut prop2 = Vec::new();
    for model in [
        ModelSpec::WhiteNoise { sigma2: 1.0 },
        ModelSpec::Matern(crate::simulate::TABLE2_MATERN),
    ] {
        for &n in &GRID_N_PROP2 {
            let check = check_prop2_variance(&model, n, &vec![1.0; n / 2], replicates, seed)?;
            prop2.push(Prop2Summary {
                model: model.clone(),
                ratio: check.bound / check.empirical_variance,
                check,
            });
        }
    }
    let all_satisfied = prop1.iter().all(|p| p.all_satisfied) && prop2.iter().all(|p| p.check.satisfied);
    Ok(BoundSuiteReport {
        prop1,
        prop2,
        all_satisfied,
    })
}
