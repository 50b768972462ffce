//! Run configuration, schema version 1.
//!
//! A config is a JSON object with `schema_version`, `domain`, `weight`,
//! `command` and optional `seed`, `threads`, `output`. See the README for
//! the full schema.

use std::path::PathBuf;

use abslit_core::asymptotics::{Cluster, HPolicy};
use abslit_core::geometry::{Region, WeightSpec};
use abslit_core::{Domain, DomainKind, Point};
use serde::{Deserialize, Serialize};

use crate::error::LabError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Disk,
    Rectangle { width: f64, height: f64 },
    HalfEllipse { length: f64, eps: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

impl DomainConfig {
    pub fn build(&self) -> Result<Domain, LabError> {
        let kind = match self {
            DomainConfig::Disk => DomainKind::UnitDisk,
            DomainConfig::Rectangle { width, height } => DomainKind::Rectangle { width: *width, height: *height },
            DomainConfig::HalfEllipse { length, eps } => DomainKind::HalfEllipse { length: *length, eps: *eps },
            DomainConfig::Polygon { vertices } => {
                DomainKind::Polygon(vertices.iter().map(|v| Point::new(v[0], v[1])).collect())
            }
        };
        Domain::new(kind).map_err(LabError::invalid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionConfig {
    Disk { center: [f64; 2], radius: f64, value: f64 },
    Rect { min: [f64; 2], max: [f64; 2], value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightConfig {
    Constant {
        value: f64,
    },
    /// Polynomial in `|x|²` with coefficients from the constant term up.
    Radial {
        coefficients: Vec<f64>,
        lower_bound: f64,
    },
    Piecewise {
        regions: Vec<RegionConfig>,
        default: f64,
        lower_bound: f64,
    },
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig::Constant { value: 1.0 }
    }
}

impl WeightConfig {
    pub fn build(&self, domain: &Domain) -> Result<WeightSpec, LabError> {
        let w = match self {
            WeightConfig::Constant { value } => WeightSpec::constant(*value),
            WeightConfig::Radial { coefficients, lower_bound } => {
                WeightSpec::radial(coefficients.clone(), *lower_bound)
            }
            WeightConfig::Piecewise { regions, default, lower_bound } => {
                let regions = regions
                    .iter()
                    .map(|r| match *r {
                        RegionConfig::Disk { center, radius, value } => {
                            (Region::Disk { center: Point::new(center[0], center[1]), radius }, value)
                        }
                        RegionConfig::Rect { min, max, value } => {
                            (Region::Rect { min: Point::new(min[0], min[1]), max: Point::new(max[0], max[1]) }, value)
                        }
                    })
                    .collect();
                WeightSpec::piecewise(regions, *default, *lower_bound)
            }
        };
        w.validate(domain).map_err(LabError::invalid)?;
        Ok(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub n: usize,
    pub m: usize,
}

impl From<ClusterConfig> for Cluster {
    fn from(c: ClusterConfig) -> Self {
        Cluster { n: c.n, m: c.m }
    }
}

fn default_grading() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CommandConfig {
    Spectrum {
        h: f64,
        k: usize,
        /// Also solve on the uniform refinement and extrapolate.
        #[serde(default)]
        richardson: bool,
    },
    CrackSpectrum {
        pole: [f64; 2],
        h: f64,
        k: usize,
        #[serde(default = "default_grading")]
        grading: f64,
        #[serde(default)]
        h_far: Option<f64>,
        #[serde(default)]
        export_mesh: bool,
        #[serde(default)]
        export_matrices: bool,
    },
    Energy {
        pole: [f64; 2],
        cluster: ClusterConfig,
        h: f64,
        #[serde(default = "default_grading")]
        grading: f64,
        #[serde(default)]
        h_far: Option<f64>,
        /// Flag a violation when `max|δ − μ| > threshold·τ²`.
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    Sweep {
        a0: [f64; 2],
        /// Inward direction; defaults to the inner normal at `a0`.
        #[serde(default)]
        direction: Option<[f64; 2]>,
        d: Vec<f64>,
        #[serde(default)]
        k: Option<usize>,
        #[serde(default)]
        cluster: Option<ClusterConfig>,
        #[serde(default)]
        policy: Option<PolicyConfig>,
        /// Plain mesh size for the predicted splitting constant.
        #[serde(default)]
        h_predict: Option<f64>,
    },
    Oracle {
        length: f64,
        alpha: f64,
        #[serde(default = "one")]
        beta: f64,
        eps: Vec<f64>,
    },
    Fit {
        #[serde(default)]
        samples: Option<Vec<[f64; 2]>>,
        #[serde(default)]
        input: Option<PathBuf>,
        #[serde(default)]
        column: Option<String>,
    },
}

fn default_threshold() -> f64 {
    10.0
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub h0: f64,
    pub ratio: f64,
    pub grading: f64,
    pub h_far: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        let p = HPolicy::default();
        Self { h0: p.h0, ratio: p.ratio, grading: p.grading, h_far: p.h_far }
    }
}

impl From<PolicyConfig> for HPolicy {
    fn from(p: PolicyConfig) -> Self {
        HPolicy { h0: p.h0, ratio: p.ratio, grading: p.grading, h_far: p.h_far }
    }
}

fn default_threads() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub domain: DomainConfig,
    #[serde(default)]
    pub weight: WeightConfig,
    pub command: CommandConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

/// A validated config with its geometry built.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: RunConfig,
    pub domain: Domain,
    pub weight: WeightSpec,
}

fn positive(x: f64, what: &'static str) -> Result<(), LabError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(LabError::Validation(format!("{what} must be positive and finite")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| LabError::Validation(format!("malformed JSON: {e}")))?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => return Err(LabError::Validation(format!("unsupported schema_version {v}"))),
            None => return Err(LabError::Validation("missing schema_version".into())),
        }
        serde_json::from_value(value).map_err(|e| LabError::Validation(format!("config does not match schema: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every field and builds the domain and weight. Nothing is
    /// solved before this succeeds.
    pub fn prepare(self) -> Result<Prepared, LabError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(LabError::Validation(format!("unsupported schema_version {}", self.schema_version)));
        }
        if self.threads == 0 {
            return Err(LabError::Validation("threads must be at least 1".into()));
        }
        let domain = self.domain.build()?;
        let weight = self.weight.build(&domain)?;
        match &self.command {
            CommandConfig::Spectrum { h, k, .. } => {
                positive(*h, "h")?;
                if *k == 0 {
                    return Err(LabError::Validation("k must be at least 1".into()));
                }
            }
            CommandConfig::CrackSpectrum { h, k, grading, h_far, .. } => {
                positive(*h, "h")?;
                positive(*grading, "grading")?;
                if let Some(f) = h_far {
                    positive(*f, "h_far")?;
                }
                if *k == 0 {
                    return Err(LabError::Validation("k must be at least 1".into()));
                }
            }
            CommandConfig::Energy { h, cluster, grading, threshold, .. } => {
                positive(*h, "h")?;
                positive(*threshold, "threshold")?;
                positive(*grading, "grading")?;
                if cluster.n == 0 || cluster.m == 0 {
                    return Err(LabError::Validation("cluster n and m are 1-based and positive".into()));
                }
            }
            CommandConfig::Sweep { d, cluster, policy, k, h_predict, .. } => {
                if d.is_empty() || d.iter().any(|&x| !(x > 0.0 && x < 1.0)) || d.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(LabError::Validation("d must be strictly decreasing values in (0, 1)".into()));
                }
                if let Some(c) = cluster {
                    if c.n == 0 || c.m == 0 {
                        return Err(LabError::Validation("cluster n and m are 1-based and positive".into()));
                    }
                }
                if let Some(p) = policy {
                    for (x, name) in [(p.h0, "h0"), (p.ratio, "ratio"), (p.grading, "grading"), (p.h_far, "h_far")] {
                        positive(x, name)?;
                    }
                }
                if k == &Some(0) {
                    return Err(LabError::Validation("k must be at least 1".into()));
                }
                if let Some(h) = h_predict {
                    positive(*h, "h_predict")?;
                }
            }
            CommandConfig::Oracle { length, alpha, beta, eps } => {
                positive(*length, "length")?;
                positive(*beta, "beta")?;
                if *alpha == 0.0 || !alpha.is_finite() {
                    return Err(LabError::Validation("alpha must be non-zero".into()));
                }
                if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0 && e < 0.5 * length)) {
                    return Err(LabError::Validation("eps values must lie in (0, length/2)".into()));
                }
            }
            CommandConfig::Fit { samples, input, column } => match (samples, input) {
                (Some(_), None) => {}
                (None, Some(_)) if column.is_some() => {}
                _ => {
                    return Err(LabError::Validation("fit needs either samples, or input with column".into()));
                }
            },
        }
        Ok(Prepared { config: self, domain, weight })
    }
}

/// Parses `start:stop:geometric[:count]` or a comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, LabError> {
    let bad = || LabError::Validation(format!("cannot parse grid '{text}'"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() >= 3 && parts[2] == "geometric" {
        let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        if !(a > 0.0 && b > 0.0) {
            return Err(bad());
        }
        // default: one point per decade
        let count = match parts.get(3) {
            Some(c) => c.trim().parse::<usize>().map_err(|_| bad())?,
            None => ((a / b).log10().abs().round() as usize) + 1,
        };
        if count < 2 || parts.len() > 4 {
            return Err(bad());
        }
        let r = (b / a).powf(1.0 / (count - 1) as f64);
        let (la, lb) = (a.log10(), b.log10());
        let mut out: Vec<f64> = (0..count)
            .map(|i| {
                // exact decades stay exact: 1e-5, not 1.0000000000000003e-5
                let e = la + (lb - la) * i as f64 / (count - 1) as f64;
                if (e - e.round()).abs() < 1e-9 && (la - la.round()).abs() < 1e-9 {
                    format!("1e{}", e.round() as i32).parse().expect("decade literal")
                } else {
                    a * r.powi(i as i32)
                }
            })
            .collect();
        out[count - 1] = b;
        return Ok(out);
    }
    if parts.len() != 1 {
        return Err(bad());
    }
    text.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect()
}

/// Parses `x,y`.
pub fn parse_point(text: &str) -> Result<[f64; 2], LabError> {
    let v = parse_grid(text)?;
    match v[..] {
        [x, y] => Ok([x, y]),
        _ => Err(LabError::Validation(format!("expected 'x,y', got '{text}'"))),
    }
}

/// Parses `n:m`.
pub fn parse_cluster(text: &str) -> Result<ClusterConfig, LabError> {
    let bad = || LabError::Validation(format!("expected 'n:m', got '{text}'"));
    let (n, m) = text.split_once(':').ok_or_else(bad)?;
    Ok(ClusterConfig { n: n.trim().parse().map_err(|_| bad())?, m: m.trim().parse().map_err(|_| bad())? })
}
