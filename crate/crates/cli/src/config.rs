//! Run configuration: optional JSON file merged with command-line flags
//! (flags win over file values, file values win over defaults). Unknown
//! fields in any JSON input are rejected.

use fxtsp::certify::{BoundaryConstants, InterconnectionBounds, ReducedConstants};
use fxtsp::gradflow::GradFlowParams;
use fxtsp::highorder::HighOrderParams;
use fxtsp::sim::IntegratorConfig;
use serde::Deserialize;

pub const DEFAULT_SEED: u64 = fxtsp::sampling::DEFAULT_SEED;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub system: Option<String>,
    pub eps: Option<f64>,
    pub theta: Option<f64>,
    pub mu: Option<f64>,
    pub q: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub magnitudes: Option<Vec<f64>>,
    pub directions: Option<usize>,
    pub rate_mode: Option<bool>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub dt_init: Option<f64>,
    pub dt_max_per_eps: Option<f64>,
    pub t_max: Option<f64>,
    pub settle_radius: Option<f64>,
    pub dwell: Option<f64>,
    pub x0: Option<Vec<f64>>,
    pub z0: Option<Vec<f64>>,
    pub out: Option<String>,
}

impl FileConfig {
    pub fn load(path: &str) -> Result<Self, String> {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("cannot read config {path}: {e}"))?;
        serde_json::from_str(&text).map_err(|e| format!("malformed config {path}: {e}"))
    }
}

/// Effective settings after merging flags, file, and defaults.
#[derive(Debug, Clone)]
pub struct Effective {
    pub system: String,
    pub eps: f64,
    pub theta: Option<f64>,
    pub mu: Option<f64>,
    pub q: Option<f64>,
    pub seed: u64,
    pub samples: u64,
    pub magnitudes: Vec<f64>,
    pub directions: usize,
    pub rate_mode: bool,
    pub integrator: IntegratorConfig<f64>,
    pub x0: Option<Vec<f64>>,
    pub z0: Option<Vec<f64>>,
    pub out: Option<String>,
}

pub struct FlagLayer {
    pub system: Option<String>,
    pub eps: Option<f64>,
    pub theta: Option<f64>,
    pub mu: Option<f64>,
    pub q: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub magnitudes: Option<Vec<f64>>,
    pub rate_mode: bool,
    pub out: Option<String>,
}

pub fn merge(flags: FlagLayer, file: FileConfig) -> Effective {
    let defaults = IntegratorConfig::<f64>::default();
    let integrator = IntegratorConfig {
        rel_tol: file.rel_tol.unwrap_or(defaults.rel_tol),
        abs_tol: file.abs_tol.unwrap_or(defaults.abs_tol),
        dt_init: file.dt_init.unwrap_or(defaults.dt_init),
        dt_max_per_eps: file.dt_max_per_eps.unwrap_or(defaults.dt_max_per_eps),
        t_max: file.t_max.unwrap_or(defaults.t_max),
        settle_radius: file.settle_radius.unwrap_or(defaults.settle_radius),
        dwell: file.dwell.unwrap_or(defaults.dwell),
        ..defaults
    };
    Effective {
        system: flags
            .system
            .or(file.system)
            .unwrap_or_else(|| "gradflow".into()),
        eps: flags.eps.or(file.eps).unwrap_or(1e-3),
        theta: flags.theta.or(file.theta),
        mu: flags.mu.or(file.mu),
        q: flags.q.or(file.q),
        seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        samples: flags.samples.or(file.samples).unwrap_or(10_000),
        magnitudes: flags
            .magnitudes
            .or(file.magnitudes)
            .unwrap_or_else(|| vec![1.0, 10.0, 1e2, 1e3, 1e4, 1e6]),
        directions: file.directions.unwrap_or(8),
        rate_mode: flags.rate_mode || file.rate_mode.unwrap_or(false),
        integrator,
        x0: file.x0,
        z0: file.z0,
        out: flags.out.or(file.out),
    }
}

/// Certificate constants supplied directly (the `certify` input record
/// without the derived outputs).
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateInput {
    pub k1: f64,
    pub k2: f64,
    pub a1: f64,
    pub a2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub b1: f64,
    pub b2: f64,
    pub chi1: f64,
    pub delta1: f64,
    pub c1: f64,
    pub chi2: f64,
    pub delta2: f64,
    pub c2: f64,
    #[serde(default)]
    pub theta: Option<f64>,
}

impl CertificateInput {
    pub fn split(
        &self,
    ) -> (
        ReducedConstants<f64>,
        BoundaryConstants<f64>,
        InterconnectionBounds<f64>,
    ) {
        (
            ReducedConstants {
                k1: self.k1,
                k2: self.k2,
                a1: self.a1,
                a2: self.a2,
            },
            BoundaryConstants {
                kappa1: self.kappa1,
                kappa2: self.kappa2,
                b1: self.b1,
                b2: self.b2,
            },
            InterconnectionBounds {
                chi1: self.chi1,
                delta1: self.delta1,
                c1: self.c1,
                chi2: self.chi2,
                delta2: self.delta2,
                c2: self.c2,
            },
        )
    }
}

/// A custom system description: benchmark parameters or bare certificate
/// constants.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CustomSystem {
    GradFlow(GradFlowParams<f64>),
    HighOrder(HighOrderParams<f64>),
    Certificate(CertificateInput),
}

impl CustomSystem {
    pub fn load(path: &str) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read system description {path}: {e}"))?;
        serde_json::from_str(&text).map_err(|e| format!("malformed system description {path}: {e}"))
    }
}
