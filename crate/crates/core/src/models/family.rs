//! Parameter layouts mapping optimizer vectors to model specifications.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Coherence, ComplexAr, MaternParams, ModelSpec, RotaryMatern};
use crate::error::{Error, Result};
use crate::series::{Bound, ParameterVector, SeriesKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoherenceFamily {
    None,
    Constant,
    LinearAniso,
    Logistic { q_terms: usize, theta_terms: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    WhiteNoise,
    Matern,
    /// Matérn with fixed smoothness and amplitude tied to damping,
    /// `phi = amplitude_ratio * alpha`.
    MaternDamping { nu: f64, amplitude_ratio: f64 },
    /// Rotary Matérn; `shared` uses one set of Matérn parameters for both
    /// rotary components.
    RotaryMatern { shared: bool, coherence: CoherenceFamily },
    /// Complex AR(1); `aligned_noise` derives the noise relation from the
    /// conjugate coefficient instead of fitting it.
    ComplexAr { aligned_noise: bool },
}

fn matern_names(prefix: &str) -> [(String, Bound); 3] {
    let name = |p: &str| {
        if prefix.is_empty() {
            p.to_string()
        } else {
            format!("{p}_{prefix}")
        }
    };
    [
        (name("phi"), Bound::Positive),
        (name("nu"), Bound::Positive),
        (name("alpha"), Bound::Positive),
    ]
}

impl Family {
    pub fn kind(&self) -> SeriesKind {
        match self {
            Family::WhiteNoise | Family::Matern | Family::MaternDamping { .. } => SeriesKind::Real,
            _ => SeriesKind::Complex,
        }
    }

    pub fn layout(&self) -> Vec<(String, Bound)> {
        match self {
            Family::WhiteNoise => vec![("sigma2".into(), Bound::Positive)],
            Family::Matern => matern_names("").to_vec(),
            Family::MaternDamping { .. } => vec![("alpha".into(), Bound::Positive)],
            Family::RotaryMatern { shared, coherence } => {
                let mut v: Vec<(String, Bound)> = if *shared {
                    matern_names("").to_vec()
                } else {
                    matern_names("plus")
                        .into_iter()
                        .chain(matern_names("minus"))
                        .collect()
                };
                match coherence {
                    CoherenceFamily::None => {}
                    CoherenceFamily::Constant => v.push(("rho".into(), Bound::Correlation)),
                    CoherenceFamily::LinearAniso => v.push(("c".into(), Bound::Positive)),
                    CoherenceFamily::Logistic {
                        q_terms,
                        theta_terms,
                    } => {
                        v.extend((0..*q_terms).map(|k| (format!("q{k}"), Bound::Unconstrained)));
                        v.extend((1..=*theta_terms).map(|k| (format!("theta{k}"), Bound::Unconstrained)));
                    }
                }
                v
            }
            Family::ComplexAr { aligned_noise } => {
                let mut v = vec![
                    ("lambda1".into(), Bound::Positive),
                    ("phi1".into(), Bound::Angle),
                    ("lambda2".into(), Bound::Positive),
                    ("phi2".into(), Bound::Angle),
                    ("sigma2".into(), Bound::Positive),
                ];
                if !aligned_noise {
                    v.push(("relation_ratio".into(), Bound::UnitInterval));
                    v.push(("relation_phase".into(), Bound::Angle));
                }
                v
            }
        }
    }

    /// Builds a model from a full parameter vector in layout order.
    pub fn build(&self, p: &ParameterVector) -> Result<ModelSpec> {
        let g = |name: &str| p.require(name);
        let matern = |suffix: &str| -> Result<MaternParams> {
            let key = |b: &str| {
                if suffix.is_empty() {
                    b.to_string()
                } else {
                    format!("{b}_{suffix}")
                }
            };
            Ok(MaternParams {
                phi: g(&key("phi"))?,
                nu: g(&key("nu"))?,
                alpha: g(&key("alpha"))?,
            })
        };
        let spec = match self {
            Family::WhiteNoise => ModelSpec::WhiteNoise { sigma2: g("sigma2")? },
            Family::Matern => ModelSpec::Matern(matern("")?),
            Family::MaternDamping { nu, amplitude_ratio } => {
                let alpha = g("alpha")?;
                ModelSpec::Matern(MaternParams {
                    phi: amplitude_ratio * alpha,
                    nu: *nu,
                    alpha,
                })
            }
            Family::RotaryMatern { shared, coherence } => {
                let (plus, minus) = if *shared {
                    let m = matern("")?;
                    (m, m)
                } else {
                    (matern("plus")?, matern("minus")?)
                };
                let coherence = match coherence {
                    CoherenceFamily::None => Coherence::None,
                    CoherenceFamily::Constant => Coherence::Constant { rho: g("rho")? },
                    CoherenceFamily::LinearAniso => Coherence::LinearAniso { c: g("c")? },
                    CoherenceFamily::Logistic {
                        q_terms,
                        theta_terms,
                    } => Coherence::Logistic {
                        q: (0..*q_terms).map(|k| g(&format!("q{k}"))).collect::<Result<_>>()?,
                        theta: (1..=*theta_terms)
                            .map(|k| g(&format!("theta{k}")))
                            .collect::<Result<_>>()?,
                    },
                };
                ModelSpec::RotaryMatern(RotaryMatern {
                    plus,
                    minus,
                    coherence,
                })
            }
            Family::ComplexAr { aligned_noise } => {
                let sigma2 = g("sigma2")?;
                let relation = if *aligned_noise {
                    None
                } else {
                    Some(Complex64::from_polar(
                        sigma2 * g("relation_ratio")?,
                        g("relation_phase")?,
                    ))
                };
                ModelSpec::ComplexAr(ComplexAr {
                    lambda1: g("lambda1")?,
                    phi1: g("phi1")?,
                    lambda2: g("lambda2")?,
                    phi2: g("phi2")?,
                    sigma2,
                    relation,
                })
            }
        };
        Ok(spec)
    }

    /// Full parameter vector describing `spec` in this family's layout.
    pub fn parameters(&self, spec: &ModelSpec) -> Result<ParameterVector> {
        let mismatch = || {
            Error::Kind(format!(
                "model `{}` does not belong to the requested family",
                spec.name()
            ))
        };
        let mut values: BTreeMap<String, f64> = BTreeMap::new();
        let put_matern = |m: &MaternParams, suffix: &str, values: &mut BTreeMap<String, f64>| {
            let key = |b: &str| {
                if suffix.is_empty() {
                    b.to_string()
                } else {
                    format!("{b}_{suffix}")
                }
            };
            values.insert(key("phi"), m.phi);
            values.insert(key("nu"), m.nu);
            values.insert(key("alpha"), m.alpha);
        };
        match (self, spec) {
            (Family::WhiteNoise, ModelSpec::WhiteNoise { sigma2 }) => {
                values.insert("sigma2".into(), *sigma2);
            }
            (Family::Matern, ModelSpec::Matern(m)) => put_matern(m, "", &mut values),
            (Family::MaternDamping { .. }, ModelSpec::Matern(m)) => {
                values.insert("alpha".into(), m.alpha);
            }
            (Family::RotaryMatern { shared, coherence }, ModelSpec::RotaryMatern(r)) => {
                if *shared {
                    put_matern(&r.plus, "", &mut values);
                } else {
                    put_matern(&r.plus, "plus", &mut values);
                    put_matern(&r.minus, "minus", &mut values);
                }
                match (coherence, &r.coherence) {
                    (CoherenceFamily::None, _) => {}
                    (CoherenceFamily::Constant, Coherence::Constant { rho }) => {
                        values.insert("rho".into(), *rho);
                    }
                    (CoherenceFamily::Constant, Coherence::None) => {
                        values.insert("rho".into(), 0.0);
                    }
                    (CoherenceFamily::LinearAniso, Coherence::LinearAniso { c }) => {
                        values.insert("c".into(), *c);
                    }
                    (CoherenceFamily::Logistic { .. }, Coherence::Logistic { q, theta }) => {
                        for (k, v) in q.iter().enumerate() {
                            values.insert(format!("q{k}"), *v);
                        }
                        for (k, v) in theta.iter().enumerate() {
                            values.insert(format!("theta{}", k + 1), *v);
                        }
                    }
                    _ => return Err(mismatch()),
                }
            }
            (Family::ComplexAr { aligned_noise }, ModelSpec::ComplexAr(a)) => {
                values.insert("lambda1".into(), a.lambda1);
                values.insert("phi1".into(), crate::series::wrap_angle(a.phi1));
                values.insert("lambda2".into(), a.lambda2);
                values.insert("phi2".into(), crate::series::wrap_angle(a.phi2));
                values.insert("sigma2".into(), a.sigma2);
                if !aligned_noise {
                    let r = a.noise_relation();
                    values.insert("relation_ratio".into(), r.norm() / a.sigma2);
                    values.insert("relation_phase".into(), crate::series::wrap_angle(r.arg()));
                }
            }
            _ => return Err(mismatch()),
        }
        let mut p = ParameterVector::new();
        for (name, bound) in self.layout() {
            let v = values
                .get(&name)
                .copied()
                .ok_or_else(|| Error::Domain(format!("missing value for `{name}`")))?;
            p.push(name, v, bound)?;
        }
        Ok(p)
    }

    /// Parameter values at which this family reproduces its proper submodel
    /// on an `n`-point grid.
    pub fn null_values(&self, n: usize) -> Vec<(String, f64)> {
        match self {
            Family::RotaryMatern { coherence, .. } => match coherence {
                CoherenceFamily::None => vec![],
                CoherenceFamily::Constant => vec![("rho".into(), 0.0)],
                CoherenceFamily::LinearAniso => vec![("c".into(), 2.0 * PI * n as f64)],
                CoherenceFamily::Logistic {
                    q_terms,
                    theta_terms,
                } => (0..*q_terms)
                    .map(|k| (format!("q{k}"), if k == 0 { 40.0 } else { 0.0 }))
                    .chain((1..=*theta_terms).map(|k| (format!("theta{k}"), 0.0)))
                    .collect(),
            },
            _ => vec![],
        }
    }
}

/// A family with some parameters held fixed; the remaining ones are free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTemplate {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
}

impl ModelTemplate {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            fixed: BTreeMap::new(),
        }
    }

    pub fn with_fixed(mut self, name: &str, value: f64) -> Self {
        self.fixed.insert(name.to_string(), value);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let layout = self.family.layout();
        for (name, value) in &self.fixed {
            let bound = layout
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, b)| *b)
                .ok_or_else(|| Error::config("fixed", format!("unknown parameter `{name}`")))?;
            if !bound.contains(*value) {
                return Err(Error::config(
                    "fixed",
                    format!("`{name}` = {value} violates bound {bound:?}"),
                ));
            }
        }
        if self.free_layout().is_empty() {
            return Err(Error::config("fixed", "no free parameters remain"));
        }
        Ok(())
    }

    pub fn free_layout(&self) -> Vec<(String, Bound)> {
        self.family
            .layout()
            .into_iter()
            .filter(|(n, _)| !self.fixed.contains_key(n))
            .collect()
    }

    pub fn free_names(&self) -> Vec<String> {
        self.free_layout().into_iter().map(|(n, _)| n).collect()
    }

    pub fn n_free(&self) -> usize {
        self.free_layout().len()
    }

    /// Full parameter vector from free values in natural units.
    pub fn assemble(&self, free: &[f64]) -> Result<ParameterVector> {
        let layout = self.family.layout();
        let mut p = ParameterVector::new();
        let mut it = free.iter();
        for (name, bound) in layout {
            let v = match self.fixed.get(&name) {
                Some(v) => *v,
                None => *it.next().ok_or_else(|| {
                    Error::Size(format!("expected {} free values", self.n_free()))
                })?,
            };
            p.push(name, v, bound)?;
        }
        if it.next().is_some() {
            return Err(Error::Size(format!("expected {} free values", self.n_free())));
        }
        Ok(p)
    }

    pub fn build(&self, free: &[f64]) -> Result<ModelSpec> {
        let spec = self.family.build(&self.assemble(free)?)?;
        spec.validate()?;
        Ok(spec)
    }

    /// The free parameters of `spec` as a bounded vector.
    pub fn free_parameters(&self, spec: &ModelSpec) -> Result<ParameterVector> {
        let full = self.family.parameters(spec)?;
        let mut p = ParameterVector::new();
        for e in full.entries() {
            if !self.fixed.contains_key(&e.name) {
                p.push(e.name.clone(), e.value, e.bound)?;
            }
        }
        Ok(p)
    }

    /// An empty-valued vector with the free layout, for transform bookkeeping.
    pub fn free_vector(&self, values: &[f64]) -> Result<ParameterVector> {
        let layout = self.free_layout();
        if layout.len() != values.len() {
            return Err(Error::Size(format!(
                "expected {} free values, got {}",
                layout.len(),
                values.len()
            )));
        }
        let mut p = ParameterVector::new();
        for ((name, bound), v) in layout.into_iter().zip(values) {
            p.push(name, *v, bound)?;
        }
        Ok(p)
    }
}
