//! Command-line front end. Every run writes `manifest.json` next to its
//! outputs; replaying the manifest's `argv` reproduces the run.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::diagnostics::{run_bound_suite, score_hessian_probe};
use crate::error::{Error, Result};
use crate::inference::{fit_with, lrt_impropriety, model_select, FitOptions, FitResult};
use crate::likelihood::{Domain, LikelihoodObjective, ModelSpectra, ObjectiveConfig, Variant};
use crate::models::{CoherenceFamily, Family, ModelSpec, ModelTemplate};
use crate::series::{load_series, series_to_csv, CsvFormat, MaskSpec, SampledSeries, SeriesKind, Sided};
use crate::simulate::{lrt_preset, preset, run_benchmark, run_lrt_study, Embedding, Simulator, TABLE2_MATERN};
use crate::spectral::{
    convert_representation, make_taper, periodogram, FrequencySign, Representation, SpectralRow, TaperKind,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NONCONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "whittle", version, about = "Blurred Whittle likelihood inference for time series")]
struct Cli {
    /// Worker threads for replicate loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model and write the estimate plus a spectrum overlay.
    Fit(FitArgs),
    /// Draw replicate series from a model.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo preset.
    Benchmark(BenchmarkArgs),
    /// Likelihood-ratio test of propriety (isotropy).
    Impropriety(ImproprietyArgs),
    /// Fit several models and rank them by AICC.
    ModelSelect(ModelSelectArgs),
    /// Convert spectral-matrix rows between representations.
    Convert(ConvertArgs),
    /// Numerical bound and score/Hessian checks.
    Diagnose(DiagnoseArgs),
    /// Write the (tapered) periodogram of a series.
    Periodogram(PeriodogramArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum InputFormat {
    Real,
    Bivariate,
    Complex,
}

impl From<InputFormat> for CsvFormat {
    fn from(f: InputFormat) -> Self {
        match f {
            InputFormat::Real => CsvFormat::CsvReal,
            InputFormat::Bivariate => CsvFormat::CsvBivariate,
            InputFormat::Complex => CsvFormat::CsvComplex,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "real")]
    format: InputFormat,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long)]
    remove_mean: bool,
}

#[derive(Debug, Clone, Args)]
struct ObjectiveArgs {
    /// time | standard | blurred | tapered | tapered-blurred
    #[arg(long, default_value = "blurred")]
    variant: String,
    /// real | rotary | proper | cartesian (default: real or rotary by input)
    #[arg(long)]
    domain: Option<String>,
    /// uniform | dpss[:NW] | cosine
    #[arg(long, default_value = "uniform")]
    taper: String,
    #[arg(long, default_value_t = 0.0)]
    mask_min: f64,
    #[arg(long, default_value_t = 1.0)]
    mask_max: f64,
    #[arg(long)]
    exclude_zero: bool,
    #[arg(long)]
    difference: bool,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Family shorthand, template JSON, or a path to template JSON.
    #[arg(long, default_value = "matern")]
    model: String,
    #[command(flatten)]
    objective: ObjectiveArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Model specification JSON, or a path to it.
    #[arg(long)]
    model: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "circulant")]
    embedding: EmbeddingArg,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EmbeddingArg {
    Circulant,
    Cholesky,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    /// table2 | table3 | aniso-lrt
    #[arg(long)]
    preset: String,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ImproprietyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "rotary_matern:shared:none")]
    null: String,
    #[arg(long, default_value = "rotary_matern:shared:linear_aniso")]
    alt: String,
    #[command(flatten)]
    objective: ObjectiveArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ModelSelectArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Repeat once per candidate model.
    #[arg(long = "model", required = true)]
    models: Vec<String>,
    #[command(flatten)]
    objective: ObjectiveArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum RepresentationArg {
    Cartesian,
    Complex,
    Rotary,
}

impl From<RepresentationArg> for Representation {
    fn from(r: RepresentationArg) -> Self {
        match r {
            RepresentationArg::Cartesian => Representation::Cartesian,
            RepresentationArg::Complex => Representation::Complex,
            RepresentationArg::Rotary => Representation::Rotary,
        }
    }
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    from: RepresentationArg,
    #[arg(long, value_enum)]
    to: RepresentationArg,
    /// Accept zero-frequency rows using the dedicated relations.
    #[arg(long)]
    zero_branch: bool,
    /// Output TSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[arg(long, default_value_t = 5000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replicates for the score/Hessian probe; 0 skips it.
    #[arg(long, default_value_t = 0)]
    probe_reps: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PeriodogramArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "uniform")]
    taper: String,
    /// one | two (default: one for real input, two for complex)
    #[arg(long)]
    sided: Option<String>,
    /// Output TSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Outcome {
    Ok,
    NotConverged,
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let argv: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let result = match cli.threads {
        Some(0) => Err(Error::config("threads", "must be at least 1")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::config("threads", e.to_string()))
            .and_then(|pool| pool.install(|| dispatch(&cli.command, &argv))),
        None => dispatch(&cli.command, &argv),
    };
    match result {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::NotConverged) => {
            eprintln!("warning: optimizer did not converge; results were written");
            EXIT_NONCONVERGED
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn dispatch(command: &Command, argv: &[String]) -> Result<Outcome> {
    match command {
        Command::Fit(a) => cmd_fit(a, argv),
        Command::Simulate(a) => cmd_simulate(a, argv),
        Command::Benchmark(a) => cmd_benchmark(a, argv),
        Command::Impropriety(a) => cmd_impropriety(a, argv),
        Command::ModelSelect(a) => cmd_model_select(a, argv),
        Command::Convert(a) => cmd_convert(a),
        Command::Diagnose(a) => cmd_diagnose(a, argv),
        Command::Periodogram(a) => cmd_periodogram(a),
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(io_error(path))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, &text)
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_error(dir))
}

fn write_manifest(dir: &Path, subcommand: &str, argv: &[String], config: Value) -> Result<()> {
    let manifest = json!({
        "tool": "whittle",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": subcommand,
        "argv": argv,
        "config": config,
    });
    write_json(&dir.join("manifest.json"), &manifest)
}

fn load_input(a: &InputArgs) -> Result<SampledSeries> {
    if !(a.delta > 0.0) || !a.delta.is_finite() {
        return Err(Error::config("delta", "must be positive"));
    }
    let series = load_series(&a.input, a.format.into(), a.delta)?;
    Ok(if a.remove_mean { series.remove_mean() } else { series })
}

fn parse_variant(s: &str) -> Result<Variant> {
    let key = s.trim().to_ascii_lowercase().replace('-', "_");
    let key = if key == "time" { "time_exact".to_string() } else { key };
    Variant::parse(&key).map_err(|_| {
        Error::config(
            "variant",
            format!("unknown variant `{s}` (time, standard, blurred, tapered, tapered-blurred)"),
        )
    })
}

fn parse_taper(s: &str) -> Result<TaperKind> {
    s.parse::<TaperKind>().map_err(|e| Error::config("taper", e.to_string()))
}

fn objective_config(a: &ObjectiveArgs, kind: SeriesKind) -> Result<ObjectiveConfig> {
    let variant = parse_variant(&a.variant)?;
    let domain = match &a.domain {
        Some(d) => Domain::parse(d).map_err(|e| Error::config("domain", e.to_string()))?,
        None if kind == SeriesKind::Real => Domain::Real,
        None => Domain::Rotary,
    };
    let taper = parse_taper(&a.taper)?;
    if taper != TaperKind::Uniform && !variant.is_tapered() {
        return Err(Error::config(
            "taper",
            format!("a {taper} taper needs a tapered variant, not `{}`", a.variant),
        ));
    }
    for (field, v) in [("mask-min", a.mask_min), ("mask-max", a.mask_max)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::config(field, format!("must lie in [0, 1], got {v}")));
        }
    }
    if a.mask_min >= a.mask_max {
        return Err(Error::config("mask-max", "must exceed mask-min"));
    }
    let mut cfg = ObjectiveConfig::new(variant, domain)
        .with_taper(taper)
        .with_difference(a.difference);
    cfg.mask = MaskSpec {
        min_fraction: a.mask_min,
        max_fraction: a.mask_max,
        exclude_zero: a.exclude_zero || cfg.mask.exclude_zero || a.difference,
    };
    Ok(cfg)
}

fn parse_coherence(s: &str) -> Result<CoherenceFamily> {
    match s {
        "none" => Ok(CoherenceFamily::None),
        "constant" => Ok(CoherenceFamily::Constant),
        "linear_aniso" | "linear-aniso" => Ok(CoherenceFamily::LinearAniso),
        _ => Err(Error::config("model", format!("unknown coherence `{s}`"))),
    }
}

fn read_json_arg(field: &str, s: &str) -> Result<String> {
    let t = s.trim();
    if t.starts_with('{') {
        return Ok(t.to_string());
    }
    let path = Path::new(t);
    if path.is_file() {
        return fs::read_to_string(path).map_err(io_error(path));
    }
    Err(Error::config(field, format!("`{s}` is neither JSON nor a readable file")))
}

/// Family shorthand (`matern`, `white_noise`, `matern_damping:NU:RATIO`,
/// `rotary_matern[:shared][:COHERENCE]`, `complex_ar[:aligned]`), template
/// JSON, or a path to template JSON.
pub fn parse_template(field: &str, s: &str) -> Result<ModelTemplate> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    let number = |v: &str| {
        v.parse::<f64>()
            .map_err(|_| Error::config(field, format!("cannot parse `{v}` in `{s}`")))
    };
    let family = match parts.as_slice() {
        ["white_noise"] => Family::WhiteNoise,
        ["matern"] => Family::Matern,
        ["matern_damping", nu, ratio] => Family::MaternDamping {
            nu: number(nu)?,
            amplitude_ratio: number(ratio)?,
        },
        ["complex_ar"] => Family::ComplexAr { aligned_noise: false },
        ["complex_ar", "aligned"] => Family::ComplexAr { aligned_noise: true },
        ["rotary_matern", rest @ ..] => {
            let shared = rest.first() == Some(&"shared");
            let rest = if shared { &rest[1..] } else { rest };
            let coherence = match rest {
                [] => CoherenceFamily::None,
                [c] => parse_coherence(c)?,
                _ => return Err(Error::config(field, format!("cannot parse model `{s}`"))),
            };
            Family::RotaryMatern { shared, coherence }
        }
        _ => {
            let text = read_json_arg(field, s)?;
            let t: ModelTemplate =
                serde_json::from_str(&text).map_err(|e| Error::config(field, format!("bad template JSON: {e}")))?;
            t.validate().map_err(|e| Error::config(field, e.to_string()))?;
            return Ok(t);
        }
    };
    Ok(ModelTemplate::new(family))
}

pub fn parse_model_spec(s: &str) -> Result<ModelSpec> {
    let text = read_json_arg("model", s)?;
    let spec: ModelSpec =
        serde_json::from_str(&text).map_err(|e| Error::config("model", format!("bad model JSON: {e}")))?;
    spec.validate().map_err(|e| Error::config("model", e.to_string()))?;
    Ok(spec)
}

fn check_kind(template: &ModelTemplate, series: &SampledSeries, field: &str) -> Result<()> {
    if template.family.kind() != series.kind() {
        return Err(Error::config(
            field,
            format!("model is {:?}-valued but the input is {:?}-valued", template.family.kind(), series.kind()),
        ));
    }
    Ok(())
}

fn cmd_fit(a: &FitArgs, argv: &[String]) -> Result<Outcome> {
    let series = load_input(&a.input)?;
    let template = parse_template("model", &a.model)?;
    check_kind(&template, &series, "model")?;
    let cfg = objective_config(&a.objective, series.kind())?;
    let objective = LikelihoodObjective::new(&series, template.clone(), cfg.clone())?;
    let result = fit_with(&objective, None, &FitOptions::default())?;
    prepare_out(&a.out)?;
    write_json(&a.out.join("fit.json"), &result)?;
    write_file(&a.out.join("overlay.tsv"), &overlay_tsv(&objective, &result)?)?;
    write_manifest(
        &a.out,
        "fit",
        argv,
        json!({"input": a.input, "template": template, "objective": cfg}),
    )?;
    Ok(if result.converged { Outcome::Ok } else { Outcome::NotConverged })
}

/// `omega, s_hat, s_model, in_mask` over the full grid of the fitted series.
fn overlay_tsv(objective: &LikelihoodObjective, fit: &FitResult) -> Result<String> {
    let series = objective.series();
    let grid = objective.grid();
    let sided = match series.kind() {
        SeriesKind::Real => Sided::One,
        SeriesKind::Complex => Sided::Two,
    };
    let est = periodogram(series, objective.taper(), sided)?;
    let spectra = objective.model_spectra(&fit.model)?;
    let model = match &spectra {
        ModelSpectra::Real(s) | ModelSpectra::Complex { s, .. } => s,
    };
    let included = objective.mask().included();
    let mut out = String::from("omega\ts_hat\ts_model\tin_mask\n");
    for (pos, (&j, &w)) in est.grid.indices().iter().zip(est.grid.frequencies()).enumerate() {
        let key = if grid.sided() == sided { j } else { j.abs() };
        let flag = grid
            .indices()
            .iter()
            .position(|&g| g == key)
            .map(|p| included[p])
            .unwrap_or(false);
        let m = model[est.grid.fft_bin(j)];
        writeln!(out, "{w}\t{}\t{m}\t{}", est.values[pos], u8::from(flag)).expect("writing to a String cannot fail");
    }
    Ok(out)
}

fn cmd_simulate(a: &SimulateArgs, argv: &[String]) -> Result<Outcome> {
    let spec = parse_model_spec(&a.model)?;
    if a.reps == 0 {
        return Err(Error::config("reps", "must be at least 1"));
    }
    let embedding = match a.embedding {
        EmbeddingArg::Circulant => Embedding::Circulant,
        EmbeddingArg::Cholesky => Embedding::Cholesky,
    };
    let sim = Simulator::new(&spec, a.n, a.delta, a.seed, embedding)?;
    prepare_out(&a.out)?;
    let format = match spec.kind() {
        SeriesKind::Real => CsvFormat::CsvReal,
        SeriesKind::Complex => CsvFormat::CsvComplex,
    };
    let width = (a.reps - 1).to_string().len().max(3);
    for (r, s) in sim.draw_many(a.reps).iter().enumerate() {
        write_file(&a.out.join(format!("series_{r:0width$}.csv")), &series_to_csv(s, format))?;
    }
    write_manifest(
        &a.out,
        "simulate",
        argv,
        json!({"model": spec, "n": a.n, "delta": a.delta, "replicates": a.reps, "seed": a.seed,
               "embedding": embedding, "dense_fallback": sim.fell_back}),
    )?;
    Ok(Outcome::Ok)
}

fn cmd_benchmark(a: &BenchmarkArgs, argv: &[String]) -> Result<Outcome> {
    if a.reps == 0 {
        return Err(Error::config("reps", "must be at least 1"));
    }
    match a.preset.as_str() {
        "aniso-lrt" | "aniso_lrt" => {
            let calibration = run_lrt_study(&lrt_preset(false, a.reps, a.seed))?;
            let power = run_lrt_study(&lrt_preset(true, a.reps, a.seed))?;
            prepare_out(&a.out)?;
            let mut text = String::from("study\tcompleted\trejections\trate\n");
            for (name, r) in [("proper", &calibration), ("anisotropic", &power)] {
                writeln!(text, "{name}\t{}\t{}\t{:.4}", r.completed, r.rejections, r.rejection_rate)
                    .expect("writing to a String cannot fail");
            }
            print!("{text}");
            write_file(&a.out.join("table.txt"), &text)?;
            write_json(&a.out.join("report.json"), &json!({"calibration": calibration, "power": power}))?;
            write_manifest(
                &a.out,
                "benchmark",
                argv,
                json!({"preset": a.preset, "calibration": calibration.plan, "power": power.plan}),
            )?;
        }
        name => {
            let plan = preset(name, a.reps, a.seed)?;
            let report = run_benchmark(&plan)?;
            prepare_out(&a.out)?;
            let table = report.to_table();
            print!("{table}");
            write_file(&a.out.join("table.txt"), &table)?;
            write_json(&a.out.join("report.json"), &report)?;
            write_json(&a.out.join("timing.json"), &report.timing_json())?;
            write_manifest(&a.out, "benchmark", argv, json!({"preset": name, "plan": plan}))?;
        }
    }
    Ok(Outcome::Ok)
}

fn cmd_impropriety(a: &ImproprietyArgs, argv: &[String]) -> Result<Outcome> {
    let series = load_input(&a.input)?;
    let null = parse_template("null", &a.null)?;
    let alt = parse_template("alt", &a.alt)?;
    check_kind(&null, &series, "null")?;
    check_kind(&alt, &series, "alt")?;
    let cfg = objective_config(&a.objective, series.kind())?;
    let result = lrt_impropriety(&series, null.clone(), alt.clone(), cfg.clone(), &FitOptions::default())?;
    prepare_out(&a.out)?;
    write_json(&a.out.join("lrt.json"), &result)?;
    write_manifest(
        &a.out,
        "impropriety",
        argv,
        json!({"input": a.input, "null": null, "alt": alt, "objective": cfg}),
    )?;
    println!("W = {:.6}  dof = {}  p = {:.6}", result.statistic, result.dof, result.p_value);
    Ok(if result.null.converged && result.alt.converged {
        Outcome::Ok
    } else {
        Outcome::NotConverged
    })
}

fn cmd_model_select(a: &ModelSelectArgs, argv: &[String]) -> Result<Outcome> {
    let series = load_input(&a.input)?;
    let cfg = objective_config(&a.objective, series.kind())?;
    let templates = a
        .models
        .iter()
        .map(|m| parse_template("model", m))
        .collect::<Result<Vec<_>>>()?;
    let mut fits = Vec::with_capacity(templates.len());
    for t in &templates {
        check_kind(t, &series, "model")?;
        let objective = LikelihoodObjective::new(&series, t.clone(), cfg.clone())?;
        fits.push(fit_with(&objective, None, &FitOptions::default())?);
    }
    let ranking = model_select(&fits, fits[0].n_eff, series.kind() == SeriesKind::Complex)?;
    prepare_out(&a.out)?;
    write_json(&a.out.join("model_select.json"), &json!({"ranking": ranking, "fits": fits}))?;
    write_manifest(
        &a.out,
        "model-select",
        argv,
        json!({"input": a.input, "templates": templates, "objective": cfg}),
    )?;
    for r in &ranking {
        println!(
            "{}\t{}\tp={}\taicc={:.4}\tdelta={:.4}",
            r.index, a.models[r.index], r.n_params, r.aicc, r.delta_aicc
        );
    }
    Ok(if fits.iter().all(|f| f.converged) {
        Outcome::Ok
    } else {
        Outcome::NotConverged
    })
}

const CARTESIAN_HEADER: &str = "omega\ts_xx\ts_yy\ts_xy_re\ts_xy_im";
const COMPLEX_HEADER: &str = "omega\ts_zz\ts_zz_mirror\tr_zz_re\tr_zz_im";
/// `r_pm` is only read and written on zero-frequency rows.
const ROTARY_HEADER: &str = "omega\ts_pp\ts_mm\ts_pm_re\ts_pm_im\tr_pm_re\tr_pm_im";

fn header(r: RepresentationArg) -> &'static str {
    match r {
        RepresentationArg::Cartesian => CARTESIAN_HEADER,
        RepresentationArg::Complex => COMPLEX_HEADER,
        RepresentationArg::Rotary => ROTARY_HEADER,
    }
}

fn parse_row(
    from: RepresentationArg,
    fields: &[f64],
    zero_branch: bool,
) -> std::result::Result<(f64, SpectralRow), String> {
    let need = header(from).split('\t').count();
    let min = if from == RepresentationArg::Rotary { need - 2 } else { need };
    if fields.len() < min || fields.len() > need {
        return Err(format!("expected {need} columns, found {}", fields.len()));
    }
    let w = fields[0];
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let row = match from {
        RepresentationArg::Cartesian => SpectralRow::Cartesian {
            s_xx: fields[1],
            s_yy: fields[2],
            s_xy: c(fields[3], fields[4]),
        },
        RepresentationArg::Complex => SpectralRow::Complex {
            s_zz: fields[1],
            s_zz_mirror: fields[2],
            r_zz: c(fields[3], fields[4]),
        },
        RepresentationArg::Rotary if w == 0.0 && zero_branch => SpectralRow::RotaryZero {
            s_pp: fields[1],
            s_mm: fields[2],
            s_pm: fields[3],
            r_pm: c(
                fields.get(5).copied().unwrap_or(0.0),
                fields.get(6).copied().unwrap_or(0.0),
            ),
        },
        RepresentationArg::Rotary => SpectralRow::Rotary {
            s_pp: fields[1],
            s_mm: fields[2],
            s_pm: c(fields[3], fields[4]),
        },
    };
    Ok((w, row))
}

fn format_row(w: f64, row: &SpectralRow) -> String {
    match *row {
        SpectralRow::Cartesian { s_xx, s_yy, s_xy } => format!("{w}\t{s_xx}\t{s_yy}\t{}\t{}", s_xy.re, s_xy.im),
        SpectralRow::Complex {
            s_zz,
            s_zz_mirror,
            r_zz,
        } => format!("{w}\t{s_zz}\t{s_zz_mirror}\t{}\t{}", r_zz.re, r_zz.im),
        SpectralRow::Rotary { s_pp, s_mm, s_pm } => format!("{w}\t{s_pp}\t{s_mm}\t{}\t{}\t0\t0", s_pm.re, s_pm.im),
        SpectralRow::RotaryZero { s_pp, s_mm, s_pm, r_pm } => {
            format!("{w}\t{s_pp}\t{s_mm}\t{s_pm}\t0\t{}\t{}", r_pm.re, r_pm.im)
        }
    }
}

/// Converts TSV spectral rows; the first line is a header.
pub fn convert_tsv(text: &str, from: Representation, to: Representation, zero_branch: bool, origin: &Path) -> Result<String> {
    let arg = |r: Representation| match r {
        Representation::Cartesian => RepresentationArg::Cartesian,
        Representation::Complex => RepresentationArg::Complex,
        Representation::Rotary => RepresentationArg::Rotary,
    };
    let (from_arg, to_arg) = (arg(from), arg(to));
    let mut out = String::from(header(to_arg));
    out.push('\n');
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || (i == 0 && line.chars().any(char::is_alphabetic)) {
            continue;
        }
        let parse_error = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            message,
        };
        let fields = line
            .split('\t')
            .map(|f| f.trim().parse::<f64>().map_err(|_| format!("cannot parse `{f}` as a number")))
            .collect::<std::result::Result<Vec<f64>, String>>()
            .map_err(parse_error)?;
        let (w, row) = parse_row(from_arg, &fields, zero_branch).map_err(parse_error)?;
        let converted = convert_representation(row, to, FrequencySign::of(w), zero_branch)
            .map_err(|e| parse_error(e.to_string()))?;
        out.push_str(&format_row(w, &converted));
        out.push('\n');
    }
    Ok(out)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_convert(a: &ConvertArgs) -> Result<Outcome> {
    let text = fs::read_to_string(&a.input).map_err(io_error(&a.input))?;
    let converted = convert_tsv(&text, a.from.into(), a.to.into(), a.zero_branch, &a.input)?;
    emit(&a.out, &converted)?;
    Ok(Outcome::Ok)
}

fn cmd_diagnose(a: &DiagnoseArgs, argv: &[String]) -> Result<Outcome> {
    if a.reps < 2 {
        return Err(Error::config("reps", "must be at least 2"));
    }
    let bounds = run_bound_suite(a.reps, a.seed)?;
    let probes = if a.probe_reps > 0 {
        let m = TABLE2_MATERN;
        let template = ModelTemplate::new(Family::Matern)
            .with_fixed("nu", m.nu)
            .with_fixed("alpha", m.alpha);
        let truth = ModelSpec::Matern(m);
        let at_truth = score_hessian_probe(&truth, &template, &[m.phi], 1024, a.probe_reps, a.seed)?;
        let misspecified = score_hessian_probe(&truth, &template, &[2.0 * m.phi], 1024, a.probe_reps, a.seed)?;
        json!({"truth": at_truth, "misspecified": misspecified})
    } else {
        Value::Null
    };
    prepare_out(&a.out)?;
    write_json(&a.out.join("diagnostics.json"), &json!({"bounds": bounds, "probes": probes}))?;
    write_manifest(
        &a.out,
        "diagnose",
        argv,
        json!({"replicates": a.reps, "seed": a.seed, "probe_replicates": a.probe_reps}),
    )?;
    println!("bound checks satisfied: {}", bounds.all_satisfied);
    Ok(Outcome::Ok)
}

fn cmd_periodogram(a: &PeriodogramArgs) -> Result<Outcome> {
    let series = load_input(&a.input)?;
    let taper = make_taper(parse_taper(&a.taper)?, series.len())?;
    let sided = match a.sided.as_deref() {
        None if series.kind() == SeriesKind::Real => Sided::One,
        None | Some("two") => Sided::Two,
        Some("one") => Sided::One,
        Some(other) => return Err(Error::config("sided", format!("expected one or two, got `{other}`"))),
    };
    emit(&a.out, &periodogram(&series, &taper, sided)?.to_tsv())?;
    Ok(Outcome::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names() {
        assert_eq!(parse_variant("time").unwrap(), Variant::TimeExact);
        assert_eq!(parse_variant("tapered-blurred").unwrap(), Variant::TaperedBlurred);
        assert!(matches!(
            parse_variant("fancy"),
            Err(Error::Config { field, .. }) if field == "variant"
        ));
    }

    #[test]
    fn template_shorthand() {
        let t = parse_template("model", "rotary_matern:shared:linear_aniso").unwrap();
        assert_eq!(
            t.family,
            Family::RotaryMatern {
                shared: true,
                coherence: CoherenceFamily::LinearAniso
            }
        );
        let t = parse_template("model", r#"{"family": "matern", "fixed": {"nu": 0.5}}"#).unwrap();
        assert_eq!(t.fixed["nu"], 0.5);
        assert!(parse_template("model", "nonsense").is_err());
    }

    #[test]
    fn taper_requires_tapered_variant() {
        let a = ObjectiveArgs {
            variant: "blurred".into(),
            domain: None,
            taper: "dpss:4".into(),
            mask_min: 0.0,
            mask_max: 1.0,
            exclude_zero: false,
            difference: false,
        };
        assert!(matches!(
            objective_config(&a, SeriesKind::Real),
            Err(Error::Config { field, .. }) if field == "taper"
        ));
    }

    #[test]
    fn convert_round_trip() {
        let text = "omega\ts_xx\ts_yy\ts_xy_re\ts_xy_im\n0.5\t2\t1\t0.3\t-0.2\n-0.25\t1.5\t0.5\t0.1\t0.4\n";
        let p = Path::new("t.tsv");
        let rot = convert_tsv(text, Representation::Cartesian, Representation::Rotary, false, p).unwrap();
        let back = convert_tsv(&rot, Representation::Rotary, Representation::Cartesian, false, p).unwrap();
        let nums = |s: &str| -> Vec<f64> {
            s.lines().skip(1).flat_map(|l| l.split('\t').map(|f| f.parse::<f64>().unwrap()).collect::<Vec<_>>()).collect()
        };
        for (a, b) in nums(text).iter().zip(nums(&back)) {
            assert!((a - b).abs() < 1e-12);
        }
        let zero = "omega\ts_xx\ts_yy\ts_xy_re\ts_xy_im\n0\t2\t1\t0.3\t0\n";
        assert!(convert_tsv(zero, Representation::Cartesian, Representation::Rotary, false, p).is_err());
        assert!(convert_tsv(zero, Representation::Cartesian, Representation::Rotary, true, p).is_ok());
    }
}
