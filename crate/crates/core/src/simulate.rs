//! Exact Gaussian simulation and the Monte Carlo benchmark harness.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::inference::{fit_with, lrt_impropriety, FitOptions};
use crate::likelihood::{bivariate_covariance, cholesky_in_place, Domain, LikelihoodObjective, ObjectiveConfig, Variant};
use crate::models::{CoherenceFamily, Coherence, ComplexAr, Family, MaternParams, ModelSpec, ModelTemplate, RotaryMatern};
use crate::series::{MaskSpec, SampledSeries, SeriesKind};
use crate::spectral::TaperKind;

const NEGATIVE_TOLERANCE: f64 = 1e-10;
const MAX_PAD_FACTOR: usize = 1 << 6;
const MAX_EMBEDDING: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Embedding {
    #[default]
    Circulant,
    Cholesky,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationPlan {
    pub model: ModelSpec,
    pub n: usize,
    pub delta: f64,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub embedding: Embedding,
}

/// Independent stream for replicate `r` under `seed`.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

#[derive(Debug, Clone)]
enum Method {
    /// Square roots of circulant eigenvalues scaled by `1/sqrt(M)`.
    RealCirculant(Vec<f64>),
    /// Per-frequency 2x2 factors `L_k` of the block-circulant spectrum.
    BivariateCirculant(Vec<[[Complex64; 2]; 2]>),
    /// Dense lower factor, row-major.
    Dense(Vec<f64>),
    Recursion(ComplexAr),
}

/// A prepared sampler; `draw(r)` depends only on the seed and `r`.
#[derive(Debug, Clone)]
pub struct Simulator {
    model: ModelSpec,
    n: usize,
    delta: f64,
    seed: u64,
    method: Method,
    /// Set when circulant embedding failed and the dense factor is used.
    pub fell_back: bool,
}

impl Simulator {
    pub fn new(model: &ModelSpec, n: usize, delta: f64, seed: u64, embedding: Embedding) -> Result<Self> {
        model.validate()?;
        if n < 2 || !(delta > 0.0) {
            return Err(Error::Size(format!("need n >= 2 and delta > 0, got n = {n}, delta = {delta}")));
        }
        let mut fell_back = false;
        let method = match (model, embedding) {
            (ModelSpec::ComplexAr(a), _) => Method::Recursion(*a),
            (_, Embedding::Cholesky) => dense_factor(model, n, delta)?,
            (_, Embedding::Circulant) => match circulant(model, n, delta)? {
                Some(m) => m,
                None => {
                    fell_back = true;
                    dense_factor(model, n, delta)?
                }
            },
        };
        Ok(Self {
            model: model.clone(),
            n,
            delta,
            seed,
            method,
            fell_back,
        })
    }

    pub fn from_plan(plan: &SimulationPlan) -> Result<Self> {
        if plan.replicates == 0 {
            return Err(Error::config("replicates", "must be at least 1"));
        }
        Self::new(&plan.model, plan.n, plan.delta, plan.seed, plan.embedding)
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn draw(&self, replicate: u64) -> SampledSeries {
        let mut rng = replicate_rng(self.seed, replicate);
        let n = self.n;
        let series = match &self.method {
            Method::RealCirculant(root) => {
                let mut v: Vec<Complex64> = root
                    .iter()
                    .map(|r| Complex64::new(r * normal(&mut rng), r * normal(&mut rng)))
                    .collect();
                fft::forward(&mut v);
                SampledSeries::real(v[..n].iter().map(|z| z.re).collect(), self.delta)
            }
            Method::BivariateCirculant(factors) => {
                let m = factors.len();
                let scale = (0.5 / m as f64).sqrt();
                let mut vx = vec![Complex64::new(0.0, 0.0); m];
                let mut vy = vec![Complex64::new(0.0, 0.0); m];
                for (k, l) in factors.iter().enumerate() {
                    let e1 = Complex64::new(normal(&mut rng), normal(&mut rng)) * scale;
                    let e2 = Complex64::new(normal(&mut rng), normal(&mut rng)) * scale;
                    vx[k] = l[0][0] * e1 + l[0][1] * e2;
                    vy[k] = l[1][0] * e1 + l[1][1] * e2;
                }
                // Inverse transform: sum_k e^{+i 2 pi k t / M} V_k.
                fft::inverse(&mut vx);
                fft::inverse(&mut vy);
                let s2 = 2f64.sqrt();
                let x: Vec<f64> = vx[..n].iter().map(|z| s2 * z.re).collect();
                let y: Vec<f64> = vy[..n].iter().map(|z| s2 * z.re).collect();
                SampledSeries::bivariate(&x, &y, self.delta)
            }
            Method::Dense(l) => {
                let m = (l.len() as f64).sqrt() as usize;
                let e: Vec<f64> = (0..m).map(|_| normal(&mut rng)).collect();
                let u: Vec<f64> = (0..m)
                    .map(|i| (0..=i).map(|k| l[i * m + k] * e[k]).sum())
                    .collect();
                if m == n {
                    SampledSeries::real(u, self.delta)
                } else {
                    SampledSeries::bivariate(&u[..n], &u[n..], self.delta)
                }
            }
            Method::Recursion(a) => simulate_ar_path(a, n, self.delta, &mut rng),
        };
        series.expect("simulated values are finite")
    }

    pub fn draw_many(&self, replicates: usize) -> Vec<SampledSeries> {
        (0..replicates as u64).into_par_iter().map(|r| self.draw(r)).collect()
    }
}

fn simulate_ar_path(a: &ComplexAr, n: usize, delta: f64, rng: &mut ChaCha8Rng) -> Result<SampledSeries> {
    let v = a.real_form();
    let l00 = v.q[0][0].sqrt();
    let l10 = if l00 > 0.0 { v.q[1][0] / l00 } else { 0.0 };
    let l11 = (v.q[1][1] - l10 * l10).max(0.0).sqrt();
    let (ca, cb) = (a.a(), a.b());
    let burn = a.burn_in();
    let mut z = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(n);
    for t in 0..burn + n {
        let e1 = normal(rng);
        let e2 = normal(rng);
        z = ca * z + cb * z.conj() + Complex64::new(l00 * e1, l10 * e1 + l11 * e2);
        if t >= burn {
            out.push(z);
        }
    }
    SampledSeries::complex(out, delta)
}

fn circulant(model: &ModelSpec, n: usize, delta: f64) -> Result<Option<Method>> {
    let mut m = (2 * n).next_power_of_two();
    let cap = (n.saturating_mul(MAX_PAD_FACTOR)).min(MAX_EMBEDDING);
    while m <= cap {
        let half = m / 2;
        let ok = match model.kind() {
            SeriesKind::Real => {
                let s = model.real_lags(half + 1, delta)?;
                if s.len() <= half {
                    break;
                }
                let mut c = vec![Complex64::new(0.0, 0.0); m];
                for k in 0..=half {
                    c[k] = s[k].into();
                    c[(m - k) % m] = s[k].into();
                }
                fft::forward(&mut c);
                let max = c.iter().fold(0.0f64, |a, v| a.max(v.re));
                if c.iter().all(|v| v.re >= -NEGATIVE_TOLERANCE * max) {
                    let scale = 1.0 / m as f64;
                    Some(Method::RealCirculant(c.iter().map(|v| (v.re.max(0.0) * scale).sqrt()).collect()))
                } else {
                    None
                }
            }
            SeriesKind::Complex => {
                let (s, r) = model.complex_lags(half + 1, delta)?;
                if s.len() <= half {
                    break;
                }
                bivariate_circulant(&s, &r, m)
            }
        };
        if ok.is_some() {
            return Ok(ok);
        }
        m *= 2;
    }
    Ok(None)
}

/// Block-circulant spectrum of `(X, Y)` from `s_ZZ`, `r_ZZ` lags `0..=M/2`,
/// factored per frequency.
fn bivariate_circulant(s: &[Complex64], r: &[Complex64], m: usize) -> Option<Method> {
    let half = m / 2;
    let mut g = [[vec![Complex64::new(0.0, 0.0); m], vec![Complex64::new(0.0, 0.0); m]],
        [vec![Complex64::new(0.0, 0.0); m], vec![Complex64::new(0.0, 0.0); m]]];
    for k in 0..=half {
        let xx = 0.5 * (s[k].re + r[k].re);
        let yy = 0.5 * (s[k].re - r[k].re);
        let xy = 0.5 * (r[k].im - s[k].im);
        let yx = 0.5 * (r[k].im + s[k].im);
        let neg = (m - k) % m;
        g[0][0][k] = xx.into();
        g[1][1][k] = yy.into();
        g[0][1][k] = xy.into();
        g[1][0][k] = yx.into();
        if neg != k {
            // Gamma(-tau) = Gamma(tau)^T.
            g[0][0][neg] = xx.into();
            g[1][1][neg] = yy.into();
            g[0][1][neg] = yx.into();
            g[1][0][neg] = xy.into();
        }
    }
    for row in g.iter_mut() {
        for col in row.iter_mut() {
            fft::forward(col);
        }
    }
    let mut factors = Vec::with_capacity(m);
    let mut eigs = Vec::with_capacity(m);
    for k in 0..m {
        let a = g[0][0][k].re;
        let d = g[1][1][k].re;
        let b = g[0][1][k];
        let tr = 0.5 * (a + d);
        let disc = (0.25 * (a - d).powi(2) + b.norm_sqr()).sqrt();
        eigs.push((tr - disc, tr + disc, a, b, d));
    }
    let max = eigs.iter().fold(0.0f64, |acc, e| acc.max(e.1));
    if eigs.iter().any(|e| e.0 < -NEGATIVE_TOLERANCE * max) {
        return None;
    }
    for (l1, l2, a, b, d) in eigs {
        factors.push(hermitian_sqrt(l1 * l2, a, b, d));
    }
    Some(Method::BivariateCirculant(factors))
}

/// Principal square root of `[[a, b], [conj b, d]]`: `(M + sqrt(det) I) / sqrt(tr + 2 sqrt(det))`.
/// A slightly negative determinant is clamped to zero.
fn hermitian_sqrt(det: f64, a: f64, b: Complex64, d: f64) -> [[Complex64; 2]; 2] {
    let zero = Complex64::new(0.0, 0.0);
    let s = det.max(0.0).sqrt();
    let t2 = a + d + 2.0 * s;
    if !(t2 > 0.0) {
        return [[zero, zero], [zero, zero]];
    }
    let t = t2.sqrt();
    [[((a + s) / t).into(), b / t], [b.conj() / t, ((d + s) / t).into()]]
}

fn dense_factor(model: &ModelSpec, n: usize, delta: f64) -> Result<Method> {
    let (mut c, m) = match model.kind() {
        SeriesKind::Real => {
            let s = model.real_lags(n, delta)?;
            ((0..n * n).map(|k| s[(k / n).abs_diff(k % n)]).collect::<Vec<f64>>(), n)
        }
        SeriesKind::Complex => {
            let (s, r) = model.complex_lags(n, delta)?;
            (bivariate_covariance(&s, &r), 2 * n)
        }
    };
    cholesky_in_place(&mut c, m)?;
    Ok(Method::Dense(c))
}

pub fn simulate_real(plan: &SimulationPlan) -> Result<Vec<SampledSeries>> {
    if plan.model.kind() != SeriesKind::Real {
        return Err(Error::Kind(format!("`{}` is not a real model", plan.model.name())));
    }
    Ok(Simulator::from_plan(plan)?.draw_many(plan.replicates))
}

pub fn simulate_complex(plan: &SimulationPlan) -> Result<Vec<SampledSeries>> {
    if plan.model.kind() != SeriesKind::Complex {
        return Err(Error::Kind(format!("`{}` is not a complex model", plan.model.name())));
    }
    Ok(Simulator::from_plan(plan)?.draw_many(plan.replicates))
}

/// One estimator in a benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub label: String,
    pub variant: Variant,
    #[serde(default)]
    pub taper: TaperKind,
    #[serde(default)]
    pub difference: bool,
}

impl MethodSpec {
    pub fn new(label: &str, variant: Variant, taper: TaperKind, difference: bool) -> Self {
        Self {
            label: label.to_string(),
            variant,
            taper,
            difference,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPlan {
    pub name: String,
    pub truth: ModelSpec,
    pub template: ModelTemplate,
    pub n: usize,
    pub delta: f64,
    pub replicates: usize,
    pub seed: u64,
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub mask: MaskSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterStats {
    pub name: String,
    pub truth: f64,
    pub bias_pct: f64,
    pub sd_pct: f64,
    pub rmse_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub label: String,
    pub variant: Variant,
    pub taper: TaperKind,
    pub difference: bool,
    pub parameters: Vec<ParameterStats>,
    pub successes: usize,
    pub failures: usize,
    pub nonconverged: usize,
    /// Median wall time per fit; excluded from the deterministic JSON.
    #[serde(skip)]
    pub median_fit_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub name: String,
    pub n: usize,
    pub delta: f64,
    pub replicates: usize,
    pub seed: u64,
    pub truth: ModelSpec,
    pub rows: Vec<MethodRow>,
    /// Per method, per replicate estimates (`None` on failure).
    pub estimates: Vec<Vec<Option<Vec<f64>>>>,
}

impl BenchmarkReport {
    pub fn row(&self, label: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Aligned text table with bias, s.d. and RMSE in percent.
    pub fn to_table(&self) -> String {
        let names: Vec<&str> = self.rows.first().map(|r| r.parameters.iter().map(|p| p.name.as_str()).collect()).unwrap_or_default();
        let mut out = format!("{} (N = {}, {} replicates, seed {})\n", self.name, self.n, self.replicates, self.seed);
        let mut header = format!("{:<26}", "method");
        for (name, p) in names.iter().zip(&self.rows[0].parameters) {
            header.push_str(&format!(" | {:>27}", format!("{name} = {}", p.truth)));
        }
        header.push_str(" |  fits  fail  nconv  sec/fit\n");
        out.push_str(&header);
        let mut sub = format!("{:<26}", "");
        for _ in &names {
            sub.push_str(&format!(" | {:>9}{:>9}{:>9}", "bias%", "sd%", "rmse%"));
        }
        sub.push('\n');
        out.push_str(&sub);
        for row in &self.rows {
            let mut line = format!("{:<26}", row.label);
            for p in &row.parameters {
                line.push_str(&format!(" | {:>9.3}{:>9.3}{:>9.3}", p.bias_pct, p.sd_pct, p.rmse_pct));
            }
            line.push_str(&format!(
                " | {:>5} {:>5} {:>6} {:>8.4}\n",
                row.successes, row.failures, row.nonconverged, row.median_fit_seconds
            ));
            out.push_str(&line);
        }
        out
    }

    /// Timing per method as JSON, kept apart from the deterministic report.
    pub fn timing_json(&self) -> serde_json::Value {
        serde_json::json!(self
            .rows
            .iter()
            .map(|r| serde_json::json!({"label": r.label, "median_fit_seconds": r.median_fit_seconds}))
            .collect::<Vec<_>>())
    }
}

pub fn objective_config(method: &MethodSpec, kind: SeriesKind, mask: MaskSpec) -> ObjectiveConfig {
    let domain = match kind {
        SeriesKind::Real => Domain::Real,
        SeriesKind::Complex => Domain::Rotary,
    };
    let mut cfg = ObjectiveConfig::new(method.variant, domain)
        .with_taper(method.taper)
        .with_difference(method.difference);
    cfg.mask = MaskSpec {
        exclude_zero: cfg.mask.exclude_zero || mask.exclude_zero,
        ..mask
    };
    cfg
}

/// Fits every method to each simulated replicate.
pub fn run_benchmark(plan: &BenchmarkPlan) -> Result<BenchmarkReport> {
    if plan.replicates == 0 {
        return Err(Error::config("replicates", "must be at least 1"));
    }
    if plan.methods.is_empty() {
        return Err(Error::config("methods", "no methods given"));
    }
    let truth = plan.template.free_parameters(&plan.truth)?;
    let sim = Simulator::new(&plan.truth, plan.n, plan.delta, plan.seed, Embedding::Circulant)?;
    let kind = plan.truth.kind();
    for m in &plan.methods {
        // Reject inapplicable methods before any replicate runs.
        let series = sim.draw(0);
        LikelihoodObjective::new(&series, plan.template.clone(), objective_config(m, kind, plan.mask))?;
    }
    let opts = FitOptions::point_only();
    type Outcome = (Option<(Vec<f64>, bool)>, f64);
    let results: Vec<Vec<Outcome>> = (0..plan.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let series = sim.draw(r);
            plan.methods
                .iter()
                .map(|m| {
                    let start = Instant::now();
                    let out = LikelihoodObjective::new(&series, plan.template.clone(), objective_config(m, kind, plan.mask))
                        .and_then(|obj| fit_with(&obj, None, &opts))
                        .ok()
                        .map(|f| (f.theta_hat.values(), f.converged));
                    (out, start.elapsed().as_secs_f64())
                })
                .collect()
        })
        .collect();
    let names: Vec<String> = truth.names().iter().map(|s| s.to_string()).collect();
    let truth_values = truth.values();
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    for (mi, m) in plan.methods.iter().enumerate() {
        let per_rep: Vec<&Outcome> = results.iter().map(|r| &r[mi]).collect();
        let ok: Vec<&Vec<f64>> = per_rep.iter().filter_map(|o| o.0.as_ref().map(|x| &x.0)).collect();
        let nonconverged = per_rep.iter().filter(|o| matches!(o.0, Some((_, false)))).count();
        let mut times: Vec<f64> = per_rep.iter().map(|o| o.1).collect();
        times.sort_by(f64::total_cmp);
        let parameters = names
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let xs: Vec<f64> = ok.iter().map(|v| v[k]).collect();
                percent_stats(name, truth_values[k], &xs)
            })
            .collect();
        rows.push(MethodRow {
            label: m.label.clone(),
            variant: m.variant,
            taper: m.taper,
            difference: m.difference,
            parameters,
            successes: ok.len(),
            failures: per_rep.len() - ok.len(),
            nonconverged,
            median_fit_seconds: times[times.len() / 2],
        });
        estimates.push(per_rep.iter().map(|o| o.0.as_ref().map(|x| x.0.clone())).collect());
    }
    Ok(BenchmarkReport {
        name: plan.name.clone(),
        n: plan.n,
        delta: plan.delta,
        replicates: plan.replicates,
        seed: plan.seed,
        truth: plan.truth.clone(),
        rows,
        estimates,
    })
}

/// Bias, s.d. (population form) and RMSE of `xs` in percent of `truth`, so
/// that `rmse^2 = bias^2 + sd^2` holds exactly.
pub fn percent_stats(name: &str, truth: f64, xs: &[f64]) -> ParameterStats {
    let n = xs.len().max(1) as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let mse = xs.iter().map(|x| (x - truth).powi(2)).sum::<f64>() / n;
    let scale = 100.0 / truth.abs();
    ParameterStats {
        name: name.to_string(),
        truth,
        bias_pct: (mean - truth) * scale,
        sd_pct: var.sqrt() * scale,
        rmse_pct: mse.sqrt() * scale,
    }
}

pub const TABLE2_MATERN: MaternParams = MaternParams {
    phi: 10.0,
    nu: 0.4,
    alpha: 0.05,
};
pub const TABLE3_AMPLITUDE_RATIO: f64 = 1.7725;
pub const TABLE3_ALPHA: f64 = 0.0197;

fn seven_methods(difference_blurred: bool) -> Vec<MethodSpec> {
    let dpss = TaperKind::Dpss { nw: crate::spectral::DEFAULT_DPSS_NW };
    let d = difference_blurred;
    vec![
        MethodSpec::new("Maximum likelihood", Variant::TimeExact, TaperKind::Uniform, false),
        MethodSpec::new("Standard (pdgm)", Variant::Standard, TaperKind::Uniform, false),
        MethodSpec::new("Blurred (pdgm)", Variant::Blurred, TaperKind::Uniform, d),
        MethodSpec::new("Standard (dpss)", Variant::Tapered, dpss, false),
        MethodSpec::new("Blurred (dpss)", Variant::TaperedBlurred, dpss, d),
        MethodSpec::new("Standard (cosine)", Variant::Tapered, TaperKind::Cosine, false),
        MethodSpec::new("Blurred (cosine)", Variant::TaperedBlurred, TaperKind::Cosine, d),
    ]
}

/// Named experiment settings for the benchmark command.
pub fn preset(name: &str, replicates: usize, seed: u64) -> Result<BenchmarkPlan> {
    match name {
        "table2" => Ok(BenchmarkPlan {
            name: "table2".into(),
            truth: ModelSpec::Matern(TABLE2_MATERN),
            template: ModelTemplate::new(Family::Matern),
            n: 1000,
            delta: 1.0,
            replicates,
            seed,
            methods: seven_methods(false),
            mask: MaskSpec::default(),
        }),
        "table3" => Ok(BenchmarkPlan {
            name: "table3".into(),
            truth: ModelSpec::Matern(MaternParams {
                phi: TABLE3_AMPLITUDE_RATIO * TABLE3_ALPHA,
                nu: 1.0,
                alpha: TABLE3_ALPHA,
            }),
            template: ModelTemplate::new(Family::MaternDamping {
                nu: 1.0,
                amplitude_ratio: TABLE3_AMPLITUDE_RATIO,
            }),
            n: 1024,
            delta: 1.0,
            replicates,
            seed,
            methods: seven_methods(true),
            mask: MaskSpec::default(),
        }),
        _ => Err(Error::config("preset", format!("unknown benchmark preset `{name}`"))),
    }
}

/// Impropriety-test Monte Carlo settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtStudyPlan {
    pub truth: ModelSpec,
    pub n: usize,
    pub delta: f64,
    pub replicates: usize,
    pub seed: u64,
    pub variant: Variant,
    pub mask: MaskSpec,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtStudyReport {
    pub plan: LrtStudyPlan,
    pub statistics: Vec<Option<f64>>,
    pub p_values: Vec<Option<f64>>,
    pub rejections: usize,
    pub completed: usize,
    pub rejection_rate: f64,
}

fn lrt_templates() -> (ModelTemplate, ModelTemplate) {
    let family = |coherence| Family::RotaryMatern { shared: true, coherence };
    (
        ModelTemplate::new(family(CoherenceFamily::None)),
        ModelTemplate::new(family(CoherenceFamily::LinearAniso)),
    )
}

/// Linear-aniso scale giving coherence 1/2 at the tenth Fourier frequency.
pub fn aniso_power_c(n: usize) -> f64 {
    n as f64 / (40.0 * PI)
}

/// The `aniso-lrt` settings: a shared-parameter rotary Matérn, proper when
/// `anisotropic` is false, fitted over the lower half band without zero.
pub fn lrt_preset(anisotropic: bool, replicates: usize, seed: u64) -> LrtStudyPlan {
    let n = 1000;
    let coherence = if anisotropic {
        Coherence::LinearAniso { c: aniso_power_c(n) }
    } else {
        Coherence::None
    };
    LrtStudyPlan {
        truth: ModelSpec::RotaryMatern(RotaryMatern {
            plus: TABLE2_MATERN,
            minus: TABLE2_MATERN,
            coherence,
        }),
        n,
        delta: 1.0,
        replicates,
        seed,
        variant: Variant::Blurred,
        mask: MaskSpec {
            min_fraction: 0.0,
            max_fraction: 0.5,
            exclude_zero: true,
        },
        level: 0.05,
    }
}

pub fn run_lrt_study(plan: &LrtStudyPlan) -> Result<LrtStudyReport> {
    let sim = Simulator::new(&plan.truth, plan.n, plan.delta, plan.seed, Embedding::Circulant)?;
    let (null, alt) = lrt_templates();
    let mut cfg = ObjectiveConfig::new(plan.variant, Domain::Rotary);
    cfg.mask = plan.mask;
    let opts = FitOptions::point_only();
    let out: Vec<Option<(f64, f64)>> = (0..plan.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let series = sim.draw(r);
            lrt_impropriety(&series, null.clone(), alt.clone(), cfg.clone(), &opts)
                .ok()
                .map(|t| (t.statistic, t.p_value))
        })
        .collect();
    let completed = out.iter().flatten().count();
    let rejections = out.iter().flatten().filter(|(_, p)| *p < plan.level).count();
    Ok(LrtStudyReport {
        plan: plan.clone(),
        statistics: out.iter().map(|o| o.map(|x| x.0)).collect(),
        p_values: out.iter().map(|o| o.map(|x| x.1)).collect(),
        rejections,
        completed,
        rejection_rate: rejections as f64 / completed.max(1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pooled_acvs(series: &[SampledSeries], lag: usize) -> (f64, f64) {
        let vals: Vec<f64> = series
            .iter()
            .map(|s| {
                let x = s.real_parts();
                let n = x.len() - lag;
                (0..n).map(|t| x[t + lag] * x[t]).sum::<f64>() / n as f64
            })
            .collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        (m, (v / vals.len() as f64).sqrt())
    }

    #[test]
    fn deterministic_per_replicate() {
        let m = ModelSpec::Matern(TABLE2_MATERN);
        let a = Simulator::new(&m, 100, 1.0, 42, Embedding::Circulant).unwrap();
        assert_eq!(a.draw(3), a.draw(3));
        assert_ne!(a.draw(3), a.draw(4));
        let many = a.draw_many(5);
        assert_eq!(many[3], a.draw(3));
    }

    #[test]
    fn white_noise_is_uncorrelated() {
        let plan = SimulationPlan {
            model: ModelSpec::WhiteNoise { sigma2: 2.0 },
            n: 1000,
            delta: 1.0,
            replicates: 1000,
            seed: 5,
            embedding: Embedding::Circulant,
        };
        let s = simulate_real(&plan).unwrap();
        let (m1, se1) = pooled_acvs(&s, 1);
        assert!(m1.abs() < 3.0 * se1, "{m1} {se1}");
        let (m0, se0) = pooled_acvs(&s, 0);
        assert!((m0 - 2.0).abs() < 3.0 * se0);
    }

    #[test]
    fn matern_acvs_recovered() {
        let plan = SimulationPlan {
            model: ModelSpec::Matern(TABLE2_MATERN),
            n: 1000,
            delta: 1.0,
            replicates: 400,
            seed: 9,
            embedding: Embedding::Circulant,
        };
        let s = simulate_real(&plan).unwrap();
        // The sample mean of lag products is unbiased for s(tau).
        for lag in [0usize, 1, 5, 20] {
            let (m, se) = pooled_acvs(&s, lag);
            let want = TABLE2_MATERN.acvs(lag as f64);
            assert!((m - want).abs() < 3.0 * se, "lag {lag}: {m} vs {want} (se {se})");
        }
    }

    #[test]
    fn cholesky_and_circulant_agree() {
        let m = ModelSpec::Matern(MaternParams::new(1.0, 1.0, 0.2).unwrap());
        let a = Simulator::new(&m, 64, 1.0, 1, Embedding::Circulant).unwrap().draw_many(3000);
        let b = Simulator::new(&m, 64, 1.0, 2, Embedding::Cholesky).unwrap().draw_many(3000);
        for lag in 0..=5 {
            let (ma, sa) = pooled_acvs(&a, lag);
            let (mb, sb) = pooled_acvs(&b, lag);
            assert!((ma - mb).abs() < 3.0 * (sa * sa + sb * sb).sqrt(), "lag {lag}");
        }
    }

    fn complex_moments(series: &[SampledSeries], lag: usize) -> (Complex64, Complex64) {
        let mut s = Complex64::new(0.0, 0.0);
        let mut r = Complex64::new(0.0, 0.0);
        let mut count = 0.0;
        for z in series {
            let v = z.values();
            for t in 0..v.len() - lag {
                s += v[t + lag] * v[t].conj();
                r += v[t + lag] * v[t];
                count += 1.0;
            }
        }
        (s / count, r / count)
    }

    #[test]
    fn bivariate_embedding_reproduces_exact_moments() {
        let spec = ModelSpec::RotaryMatern(RotaryMatern {
            plus: MaternParams::new(1.0, 0.8, 0.3).unwrap(),
            minus: MaternParams::new(1.0, 0.8, 0.3).unwrap(),
            coherence: Coherence::Constant { rho: 0.6 },
        });
        let n = 64;
        let sim = Simulator::new(&spec, n, 1.0, 3, Embedding::Circulant).unwrap();
        let draws = sim.draw_many(4000);
        let (s, r) = spec.complex_lags(4, 1.0).unwrap();
        for lag in 0..3 {
            let (es, er) = complex_moments(&draws, lag);
            let tol = 0.06 * s[0].re;
            assert!((es - s[lag]).norm() < tol, "s lag {lag}: {es} vs {}", s[lag]);
            assert!((er - r[lag]).norm() < tol, "r lag {lag}: {er} vs {}", r[lag]);
        }
    }

    #[test]
    fn bivariate_factor_matches_dense_covariance() {
        assert_factor_exact(&ModelSpec::RotaryMatern(RotaryMatern {
            plus: MaternParams::new(1.0, 0.8, 0.3).unwrap(),
            minus: MaternParams::new(0.7, 1.1, 0.5).unwrap(),
            coherence: Coherence::Constant { rho: 0.6 },
        }));
        // Equal components with a real relation spectrum: near-diagonal
        // per-frequency blocks with distinct X and Y power.
        assert_factor_exact(&ModelSpec::RotaryMatern(RotaryMatern {
            plus: MaternParams::new(1.0, 0.8, 0.3).unwrap(),
            minus: MaternParams::new(1.0, 0.8, 0.3).unwrap(),
            coherence: Coherence::LinearAniso { c: 0.8 },
        }));
    }

    /// The block-circulant factor reproduces the target covariance.
    fn assert_factor_exact(spec: &ModelSpec) {
        let n = 16;
        let sim = Simulator::new(spec, n, 1.0, 0, Embedding::Circulant).unwrap();
        let Method::BivariateCirculant(f) = &sim.method else { panic!("expected circulant") };
        let m = f.len();
        let (s, r) = spec.complex_lags(n, 1.0).unwrap();
        let dense = bivariate_covariance(&s, &r);
        // Covariance of sqrt(2) Re V_t with V_t = M^{-1/2} sum_k e^{i 2 pi k t/M} L_k xi_k.
        for a in 0..n {
            for b in 0..n {
                let mut acc = [[Complex64::new(0.0, 0.0); 2]; 2];
                for (k, l) in f.iter().enumerate() {
                    let ph = Complex64::from_polar(1.0 / m as f64, 2.0 * PI * k as f64 * (a as f64 - b as f64) / m as f64);
                    for i in 0..2 {
                        for j in 0..2 {
                            acc[i][j] += ph * (l[i][0] * l[j][0].conj() + l[i][1] * l[j][1].conj());
                        }
                    }
                }
                let got = [[acc[0][0].re, acc[0][1].re], [acc[1][0].re, acc[1][1].re]];
                let want = [
                    [dense[a * 2 * n + b], dense[a * 2 * n + n + b]],
                    [dense[(n + a) * 2 * n + b], dense[(n + a) * 2 * n + n + b]],
                ];
                for i in 0..2 {
                    for j in 0..2 {
                        // Both sides use numerically inverted lags.
                        assert!((got[i][j] - want[i][j]).abs() < 1e-7, "{a},{b}: {got:?} vs {want:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn complex_ar_recursion_moments() {
        let a = ComplexAr {
            lambda1: 0.5,
            phi1: 0.8,
            lambda2: 0.2,
            phi2: -0.6,
            sigma2: 1.0,
            relation: None,
        };
        let spec = ModelSpec::ComplexAr(a);
        let draws = Simulator::new(&spec, 500, 1.0, 8, Embedding::Circulant).unwrap().draw_many(200);
        let (s, r) = a.moments(3).unwrap();
        for lag in 0..3 {
            let (es, er) = complex_moments(&draws, lag);
            assert!((es - s[lag]).norm() < 0.03, "{es} vs {}", s[lag]);
            assert!((er - r[lag]).norm() < 0.03, "{er} vs {}", r[lag]);
        }
    }

    #[test]
    fn rmse_identity() {
        let st = percent_stats("x", 2.0, &[1.9, 2.3, 2.05, 1.7]);
        assert!((st.rmse_pct.powi(2) - st.bias_pct.powi(2) - st.sd_pct.powi(2)).abs() < 1e-9);
    }

    #[test]
    fn presets_have_seven_methods() {
        assert_eq!(preset("table2", 10, 1).unwrap().methods.len(), 7);
        let t3 = preset("table3", 10, 1).unwrap();
        assert!(t3.methods.iter().filter(|m| m.variant.is_blurred()).all(|m| m.difference));
        assert!(preset("nope", 1, 1).is_err());
    }
}
