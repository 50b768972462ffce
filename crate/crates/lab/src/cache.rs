//! On-disk reuse of sweep steps across runs, enabled by `AB_CRACK_CACHE_DIR`.
//!
//! Each step is keyed by the SHA-256 of everything that determines it:
//! tool version, domain, weight, pole, mesh options, `k` and cluster.

use std::fs;
use std::path::{Path, PathBuf};

use abslit_core::asymptotics::{Cluster, EnergySummary, SweepStep};
use abslit_core::{MeshOptions, Point, PoleConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{DomainConfig, WeightConfig};

pub const CACHE_ENV: &str = "AB_CRACK_CACHE_DIR";

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub e: f64,
    pub e_cross: f64,
    pub l2_v: f64,
    pub h1_v: f64,
    pub l_norm: f64,
    pub residual: f64,
}

/// Serializable mirror of a [`SweepStep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub d: f64,
    pub pole: [f64; 7],
    pub h: f64,
    pub n_dofs: usize,
    pub lambda_plain: Vec<f64>,
    pub lambda_crack: Vec<f64>,
    pub delta: Vec<f64>,
    pub energies: Vec<EnergyRecord>,
    pub mu: Vec<f64>,
    pub tau: f64,
    pub r_asymmetry: f64,
    pub r_norm: f64,
}

impl From<&SweepStep> for StepRecord {
    fn from(s: &SweepStep) -> Self {
        let p = &s.pole;
        Self {
            d: s.d,
            pole: [p.a.x, p.a.y, p.p_a.x, p.p_a.y, p.d_a, p.omega_a, p.boundary_param],
            h: s.h,
            n_dofs: s.n_dofs,
            lambda_plain: s.lambda_plain.clone(),
            lambda_crack: s.lambda_crack.clone(),
            delta: s.delta.clone(),
            energies: s
                .energies
                .iter()
                .map(|e| EnergyRecord {
                    e: e.e,
                    e_cross: e.e_cross,
                    l2_v: e.l2_v,
                    h1_v: e.h1_v,
                    l_norm: e.l_norm,
                    residual: e.residual,
                })
                .collect(),
            mu: s.mu.clone(),
            tau: s.tau,
            r_asymmetry: s.r_asymmetry,
            r_norm: s.r_norm,
        }
    }
}

impl From<StepRecord> for SweepStep {
    fn from(r: StepRecord) -> Self {
        let p = r.pole;
        SweepStep {
            d: r.d,
            pole: PoleConfig {
                a: Point::new(p[0], p[1]),
                p_a: Point::new(p[2], p[3]),
                d_a: p[4],
                omega_a: p[5],
                boundary_param: p[6],
            },
            h: r.h,
            n_dofs: r.n_dofs,
            lambda_plain: r.lambda_plain,
            lambda_crack: r.lambda_crack,
            delta: r.delta,
            energies: r
                .energies
                .into_iter()
                .map(|e| EnergySummary {
                    e: e.e,
                    e_cross: e.e_cross,
                    l2_v: e.l2_v,
                    h1_v: e.h1_v,
                    l_norm: e.l_norm,
                    residual: e.residual,
                })
                .collect(),
            mu: r.mu,
            tau: r.tau,
            r_asymmetry: r.r_asymmetry,
            r_norm: r.r_norm,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepCache {
    dir: PathBuf,
}

impl StepCache {
    /// The cache named by `AB_CRACK_CACHE_DIR`, if set and non-empty.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(|d| Self { dir: PathBuf::from(d) })
    }

    pub fn at(dir: impl AsRef<Path>) -> Self {
        Self { dir: dir.as_ref().to_path_buf() }
    }

    pub fn key(
        domain: &DomainConfig,
        weight: &WeightConfig,
        pole: &PoleConfig,
        opts: &MeshOptions,
        k: usize,
        cluster: Option<Cluster>,
    ) -> String {
        let bits = |x: f64| format!("{:016x}", x.to_bits());
        let desc = serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "domain": domain,
            "weight": weight,
            "pole": [bits(pole.a.x), bits(pole.a.y)],
            "mesh": [bits(opts.h), bits(opts.grading), bits(opts.h_far), bits(opts.growth), opts.structured.to_string()],
            "k": k,
            "cluster": cluster.map(|c| [c.n, c.m]),
        });
        sha256_hex(desc.to_string().as_bytes())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("step-{key}.json"))
    }

    pub fn load(&self, key: &str) -> Option<SweepStep> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        serde_json::from_str::<StepRecord>(&text).ok().map(SweepStep::from)
    }

    /// Best effort: a cache that cannot be written is skipped.
    pub fn store(&self, key: &str, step: &SweepStep) {
        if fs::create_dir_all(&self.dir).is_err() {
            return;
        }
        let tmp = self.dir.join(format!("step-{key}.json.tmp"));
        let text = serde_json::to_string(&StepRecord::from(step)).expect("record serializes");
        if fs::write(&tmp, text).is_ok() {
            let _ = fs::rename(&tmp, self.path(key));
        }
    }
}
