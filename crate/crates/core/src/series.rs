//! Series, Fourier grid, frequency mask and parameter containers.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocessing {
    None,
    MeanRemoved,
    Differenced,
    MeanRemovedDifferenced,
}

/// A regularly sampled real or complex series `X_t = X(t * delta)`.
///
/// Real series are stored as complex values with an imaginary part that is
/// exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSeries {
    values: Vec<Complex64>,
    delta: f64,
    kind: SeriesKind,
    preprocessing: Preprocessing,
}

impl SampledSeries {
    pub fn real(values: Vec<f64>, delta: f64) -> Result<Self> {
        let values = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        Self::build(values, delta, SeriesKind::Real)
    }

    pub fn complex(values: Vec<Complex64>, delta: f64) -> Result<Self> {
        Self::build(values, delta, SeriesKind::Complex)
    }

    /// Pairs `(x_t, y_t)` stored as `x_t + i y_t`.
    pub fn bivariate(x: &[f64], y: &[f64], delta: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Size(format!(
                "bivariate components differ in length ({} vs {})",
                x.len(),
                y.len()
            )));
        }
        let values = x
            .iter()
            .zip(y)
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        Self::build(values, delta, SeriesKind::Complex)
    }

    fn build(values: Vec<Complex64>, delta: f64, kind: SeriesKind) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Size(format!(
                "a series needs at least 2 samples, got {}",
                values.len()
            )));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!(
                "sampling period must be positive, got {delta}"
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Domain("series contains non-finite values".into()));
        }
        Ok(Self {
            values,
            delta,
            kind,
            preprocessing: Preprocessing::None,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn kind(&self) -> SeriesKind {
        self.kind
    }

    pub fn preprocessing(&self) -> Preprocessing {
        self.preprocessing
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn imag_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.im).collect()
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.values.len() as f64
    }

    /// Subtracts the sample mean from both parts.
    pub fn remove_mean(&self) -> Self {
        let mean = self.mean();
        let mut values: Vec<Complex64> = self.values.iter().map(|v| v - mean).collect();
        if self.kind == SeriesKind::Real {
            values.iter_mut().for_each(|v| v.im = 0.0);
        }
        Self {
            values,
            delta: self.delta,
            kind: self.kind,
            preprocessing: match self.preprocessing {
                Preprocessing::None | Preprocessing::MeanRemoved => Preprocessing::MeanRemoved,
                _ => Preprocessing::MeanRemovedDifferenced,
            },
        }
    }

    /// First difference `v_{t+1} - v_t`, one sample shorter.
    pub fn difference(&self) -> Result<Self> {
        if self.values.len() < 3 {
            return Err(Error::Size(format!(
                "differencing needs at least 3 samples, got {}",
                self.values.len()
            )));
        }
        let values = self.values.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self {
            values,
            delta: self.delta,
            kind: self.kind,
            preprocessing: match self.preprocessing {
                Preprocessing::None | Preprocessing::Differenced => Preprocessing::Differenced,
                _ => Preprocessing::MeanRemovedDifferenced,
            },
        })
    }

    pub fn with_preprocessing(mut self, preprocessing: Preprocessing) -> Self {
        self.preprocessing = preprocessing;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsvFormat {
    CsvReal,
    CsvBivariate,
    CsvComplex,
}

impl CsvFormat {
    fn columns(self) -> usize {
        match self {
            CsvFormat::CsvReal => 1,
            CsvFormat::CsvBivariate | CsvFormat::CsvComplex => 2,
        }
    }
}

fn parse_row(line: &str, columns: usize) -> std::result::Result<Vec<f64>, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != columns {
        return Err(format!("expected {columns} column(s), found {}", fields.len()));
    }
    fields
        .iter()
        .map(|f| match f.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) => Err(format!("non-finite value `{f}`")),
            Err(_) => Err(format!("cannot parse `{f}` as a number")),
        })
        .collect()
}

/// Parses CSV text into a series.
///
/// A first line that does not parse is treated as a header only when data
/// lines follow it.
pub fn parse_series(text: &str, format: CsvFormat, delta: f64, origin: &Path) -> Result<SampledSeries> {
    let columns = format.columns();
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let mut rows = Vec::with_capacity(lines.len());
    for (k, &(line_no, line)) in lines.iter().enumerate() {
        match parse_row(line, columns) {
            Ok(row) => rows.push(row),
            Err(_) if k == 0 && lines.len() > 1 && line.chars().any(char::is_alphabetic) => {}
            Err(message) => {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: line_no,
                    message,
                })
            }
        }
    }
    match format {
        CsvFormat::CsvReal => SampledSeries::real(rows.into_iter().map(|r| r[0]).collect(), delta),
        CsvFormat::CsvBivariate | CsvFormat::CsvComplex => SampledSeries::complex(
            rows.into_iter().map(|r| Complex64::new(r[0], r[1])).collect(),
            delta,
        ),
    }
}

pub fn load_series(path: impl AsRef<Path>, format: CsvFormat, delta: f64) -> Result<SampledSeries> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_series(&text, format, delta, path)
}

/// Renders a series in the given CSV format; values use the shortest
/// representation that round-trips exactly.
pub fn series_to_csv(series: &SampledSeries, format: CsvFormat) -> String {
    let mut out = String::new();
    for v in series.values() {
        match format {
            CsvFormat::CsvReal => writeln!(out, "{}", v.re),
            _ => writeln!(out, "{},{}", v.re, v.im),
        }
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn write_series(series: &SampledSeries, format: CsvFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, series_to_csv(series, format)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sided {
    One,
    Two,
}

/// Discrete Fourier frequencies `2 pi j / (N delta)` in strictly increasing
/// order: `j = 0..=N/2` (one-sided) or `j = -ceil(N/2)+1..=N/2` (two-sided).
#[derive(Debug, Clone, PartialEq)]
pub struct FourierGrid {
    n: usize,
    delta: f64,
    sided: Sided,
    indices: Vec<i64>,
    frequencies: Vec<f64>,
}

impl FourierGrid {
    pub fn new(n: usize, delta: f64, sided: Sided) -> Result<Self> {
        if n < 2 {
            return Err(Error::Size(format!("grid needs n >= 2, got {n}")));
        }
        if !(delta > 0.0) {
            return Err(Error::Domain(format!("delta must be positive, got {delta}")));
        }
        let half = (n / 2) as i64;
        let lo = match sided {
            Sided::One => 0,
            Sided::Two => -(n.div_ceil(2) as i64) + 1,
        };
        let indices: Vec<i64> = (lo..=half).collect();
        let rayleigh = 2.0 * PI / (n as f64 * delta);
        let frequencies = indices.iter().map(|&j| j as f64 * rayleigh).collect();
        Ok(Self {
            n,
            delta,
            sided,
            indices,
            frequencies,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sided(&self) -> Sided {
        self.sided
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn rayleigh(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.delta)
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.delta
    }

    /// Position of signed index `j` in FFT bin order.
    pub fn fft_bin(&self, j: i64) -> usize {
        j.rem_euclid(self.n as i64) as usize
    }
}

pub fn fourier_grid(n: usize, delta: f64, sided: Sided) -> Result<FourierGrid> {
    FourierGrid::new(n, delta, sided)
}

/// Band selection expressed in fractions of the Nyquist frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub min_fraction: f64,
    pub max_fraction: f64,
    pub exclude_zero: bool,
}

impl Default for MaskSpec {
    fn default() -> Self {
        Self {
            min_fraction: 0.0,
            max_fraction: 1.0,
            exclude_zero: false,
        }
    }
}

/// The set of grid frequencies entering a likelihood sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyMask {
    included: Vec<bool>,
    exclude_zero: bool,
}

impl FrequencyMask {
    pub fn from_flags(included: Vec<bool>, exclude_zero: bool) -> Result<Self> {
        let count = included.iter().filter(|&&b| b).count();
        if count < 2 {
            return Err(Error::Domain(format!(
                "frequency mask must include at least 2 frequencies, got {count}"
            )));
        }
        Ok(Self {
            included,
            exclude_zero,
        })
    }

    pub fn full(grid: &FourierGrid, exclude_zero: bool) -> Result<Self> {
        Self::band(
            grid,
            &MaskSpec {
                exclude_zero,
                ..MaskSpec::default()
            },
        )
    }

    pub fn band(grid: &FourierGrid, spec: &MaskSpec) -> Result<Self> {
        if !(0.0..=1.0).contains(&spec.min_fraction)
            || !(0.0..=1.0).contains(&spec.max_fraction)
            || spec.min_fraction > spec.max_fraction
        {
            return Err(Error::Domain(format!(
                "mask fractions must satisfy 0 <= min <= max <= 1, got [{}, {}]",
                spec.min_fraction, spec.max_fraction
            )));
        }
        let nyq = grid.nyquist();
        let tol = 1e-12 * nyq;
        let included = grid
            .frequencies()
            .iter()
            .zip(grid.indices())
            .map(|(&w, &j)| {
                let a = w.abs();
                !(spec.exclude_zero && j == 0)
                    && a + tol >= spec.min_fraction * nyq
                    && a <= spec.max_fraction * nyq + tol
            })
            .collect();
        Self::from_flags(included, spec.exclude_zero)
    }

    pub fn included(&self) -> &[bool] {
        &self.included
    }

    pub fn exclude_zero(&self) -> bool {
        self.exclude_zero
    }

    pub fn count(&self) -> usize {
        self.included.iter().filter(|&&b| b).count()
    }

    pub fn len(&self) -> usize {
        self.included.len()
    }

    pub fn is_empty(&self) -> bool {
        self.included.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.included
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }
}

/// Constraint attached to a parameter, with its map to optimizer space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Positive,
    UnitInterval,
    Correlation,
    Angle,
    Unconstrained,
}

pub fn wrap_angle(x: f64) -> f64 {
    let w = (x + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        -PI
    } else {
        w
    }
}

impl Bound {
    pub fn contains(self, v: f64) -> bool {
        v.is_finite()
            && match self {
                Bound::Positive => v > 0.0,
                Bound::UnitInterval => v > 0.0 && v < 1.0,
                Bound::Correlation => v > -1.0 && v < 1.0,
                Bound::Angle => (-PI..PI).contains(&v),
                Bound::Unconstrained => true,
            }
    }

    pub fn to_unconstrained(self, v: f64) -> f64 {
        match self {
            Bound::Positive => v.ln(),
            Bound::UnitInterval => (v / (1.0 - v)).ln(),
            Bound::Correlation => v.atanh(),
            Bound::Angle => wrap_angle(v),
            Bound::Unconstrained => v,
        }
    }

    pub fn from_unconstrained(self, u: f64) -> f64 {
        match self {
            Bound::Positive => u.exp(),
            Bound::UnitInterval => {
                if u >= 0.0 {
                    1.0 / (1.0 + (-u).exp())
                } else {
                    let e = u.exp();
                    e / (1.0 + e)
                }
            }
            Bound::Correlation => u.tanh(),
            Bound::Angle => wrap_angle(u),
            Bound::Unconstrained => u,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
}

/// Named, bounded parameter values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParameterVector {
    entries: Vec<Parameter>,
}

impl ParameterVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64, bound: Bound) -> Result<()> {
        let name = name.into();
        if !bound.contains(value) {
            return Err(Error::Domain(format!(
                "parameter `{name}` = {value} violates bound {bound:?}"
            )));
        }
        self.entries.push(Parameter { name, value, bound });
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, value: f64, bound: Bound) -> Result<Self> {
        self.push(name, value, bound)?;
        Ok(self)
    }

    pub fn entries(&self) -> &[Parameter] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|p| p.value).collect()
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn bounds(&self) -> Vec<Bound> {
        self.entries.iter().map(|p| p.bound).collect()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn require(&self, name: &str) -> Result<f64> {
        self.get(name)
            .ok_or_else(|| Error::Domain(format!("missing parameter `{name}`")))
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let p = self
            .entries
            .iter_mut()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::Domain(format!("unknown parameter `{name}`")))?;
        if !p.bound.contains(value) {
            return Err(Error::Domain(format!(
                "parameter `{name}` = {value} violates bound {:?}",
                p.bound
            )));
        }
        p.value = value;
        Ok(())
    }

    pub fn to_unconstrained(&self) -> Vec<f64> {
        self.entries
            .iter()
            .map(|p| p.bound.to_unconstrained(p.value))
            .collect()
    }

    /// Same layout, values taken from optimizer space.
    pub fn from_unconstrained(&self, u: &[f64]) -> Result<Self> {
        if u.len() != self.entries.len() {
            return Err(Error::Size(format!(
                "expected {} unconstrained values, got {}",
                self.entries.len(),
                u.len()
            )));
        }
        let mut out = self.clone();
        for (p, &x) in out.entries.iter_mut().zip(u) {
            let v = p.bound.from_unconstrained(x);
            if !p.bound.contains(v) {
                return Err(Error::Domain(format!(
                    "parameter `{}` left its bound ({v})",
                    p.name
                )));
            }
            p.value = v;
        }
        Ok(out)
    }

    /// Same layout, values replaced in natural units.
    pub fn with_values(&self, values: &[f64]) -> Result<Self> {
        if values.len() != self.entries.len() {
            return Err(Error::Size(format!(
                "expected {} values, got {}",
                self.entries.len(),
                values.len()
            )));
        }
        let mut out = self.clone();
        for (p, &v) in out.entries.iter_mut().zip(values) {
            if !p.bound.contains(v) {
                return Err(Error::Domain(format!(
                    "parameter `{}` = {v} violates bound {:?}",
                    p.name, p.bound
                )));
            }
            p.value = v;
        }
        Ok(out)
    }
}
