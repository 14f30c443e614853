//! Flat `key = value` experiment configuration.
//!
//! One key per line, `#` starts a comment, lists are whitespace- or
//! comma-separated. Unknown and duplicate keys are errors, so a config echoed
//! into a manifest re-runs bit-identically.

use crate::CliError;
use hje_core::{
    build_mesh, lf_gamma_default, random_truncated_point, BoundaryMode, CoefficientFn,
    ConvexWeights, DiscreteHamiltonian, DiscreteKind, Graph, Hamiltonian, Mesh, MetricTensor,
    SchemeConfig, SchemeKind,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashMap;
use std::path::Path;

const DEFAULT_LF_R: f64 = 3.828_427_124_746_190_3; // 1 + 2 sqrt(2)

/// Parsed experiment configuration with all defaults applied.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub d: usize,
    /// Row-major weight matrix; complete unit graph when omitted.
    pub weights: Vec<f64>,
    /// Level count; exactly one of `n_levels` / `h` is given in the file.
    pub n_levels: Option<u32>,
    pub h: Option<f64>,
    pub eps: f64,
    pub t_end: f64,
    pub tau: Option<f64>,
    pub tau_over_h: Option<f64>,
    pub tensor: String,
    pub tensor_weights: Option<[f64; 3]>,
    pub hamiltonian: String,
    pub kappa: f64,
    pub coefficient: String,
    pub theta: f64,
    pub lambda1: f64,
    pub discrete: String,
    pub lf_gamma: Option<Vec<f64>>,
    pub lf_gamma_r: f64,
    pub boundary: String,
    pub dirichlet_value: f64,
    pub scheme: String,
    pub max_iters: u32,
    pub tol: f64,
    pub initial: String,
    pub potential: String,
    pub seed: u64,
    pub snapshot_times: Option<Vec<f64>>,
    pub resolutions: Option<Vec<u32>>,
    pub reference_n: u32,
    pub cfl_r: f64,
    pub strict_cfl: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 3,
            weights: Vec::new(),
            n_levels: None,
            h: None,
            eps: 0.01,
            t_end: 0.4,
            tau: None,
            tau_over_h: None,
            tensor: "average".into(),
            tensor_weights: None,
            hamiltonian: "power".into(),
            kappa: 2.0,
            coefficient: "inverse-information".into(),
            theta: 0.5,
            lambda1: 0.5,
            discrete: "osher-sethian".into(),
            lf_gamma: None,
            lf_gamma_r: DEFAULT_LF_R,
            boundary: "linear".into(),
            dirichlet_value: 0.0,
            scheme: "explicit".into(),
            max_iters: 10,
            tol: 1e-6,
            initial: "squared-l2-norm".into(),
            potential: "zero".into(),
            seed: 42,
            snapshot_times: None,
            resolutions: None,
            reference_n: 512,
            cfl_r: DEFAULT_LF_R,
            strict_cfl: false,
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| bad(format!("key '{key}': cannot parse '{value}'")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError> {
    value
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| bad(format!("key '{key}': cannot parse list entry '{s}'")))
        })
        .collect()
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut seen: HashMap<String, ()> = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            if seen.insert(key.to_string(), ()).is_some() {
                return Err(bad(format!("duplicate key '{key}'")));
            }
            match key {
                "d" => cfg.d = parse_scalar(key, value)?,
                "weights" => cfg.weights = parse_list(key, value)?,
                "n_levels" => cfg.n_levels = Some(parse_scalar(key, value)?),
                "h" => cfg.h = Some(parse_scalar(key, value)?),
                "eps" => cfg.eps = parse_scalar(key, value)?,
                "t_end" => cfg.t_end = parse_scalar(key, value)?,
                "tau" => cfg.tau = Some(parse_scalar(key, value)?),
                "tau_over_h" => cfg.tau_over_h = Some(parse_scalar(key, value)?),
                "tensor" => cfg.tensor = value.to_string(),
                "tensor_weights" => {
                    let w: Vec<f64> = parse_list(key, value)?;
                    let arr: [f64; 3] = w
                        .try_into()
                        .map_err(|_| bad("tensor_weights needs exactly 3 entries"))?;
                    cfg.tensor_weights = Some(arr);
                }
                "hamiltonian" => cfg.hamiltonian = value.to_string(),
                "kappa" => cfg.kappa = parse_scalar(key, value)?,
                "coefficient" => cfg.coefficient = value.to_string(),
                "theta" => cfg.theta = parse_scalar(key, value)?,
                "lambda1" => cfg.lambda1 = parse_scalar(key, value)?,
                "discrete" => cfg.discrete = value.to_string(),
                "lf_gamma" => cfg.lf_gamma = Some(parse_list(key, value)?),
                "lf_gamma_r" => cfg.lf_gamma_r = parse_scalar(key, value)?,
                "boundary" => cfg.boundary = value.to_string(),
                "dirichlet_value" => cfg.dirichlet_value = parse_scalar(key, value)?,
                "scheme" => cfg.scheme = value.to_string(),
                "max_iters" => cfg.max_iters = parse_scalar(key, value)?,
                "tol" => cfg.tol = parse_scalar(key, value)?,
                "initial" => cfg.initial = value.to_string(),
                "potential" => cfg.potential = value.to_string(),
                "seed" => cfg.seed = parse_scalar(key, value)?,
                "snapshot_times" => cfg.snapshot_times = Some(parse_list(key, value)?),
                "resolutions" => cfg.resolutions = Some(parse_list(key, value)?),
                "reference_n" => cfg.reference_n = parse_scalar(key, value)?,
                "cfl_r" => cfg.cfl_r = parse_scalar(key, value)?,
                "strict_cfl" => cfg.strict_cfl = parse_scalar(key, value)?,
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        Ok(cfg)
    }

    pub fn graph(&self) -> Result<Graph, CliError> {
        if self.weights.is_empty() {
            Ok(Graph::complete(self.d))
        } else {
            Graph::new(self.d, self.weights.clone()).map_err(|e| bad(e.to_string()))
        }
    }

    /// Mesh size from `n_levels` or `h`; exactly one must be set.
    pub fn mesh_h(&self) -> Result<f64, CliError> {
        match (self.n_levels, self.h) {
            (Some(n), None) => {
                if n == 0 {
                    return Err(bad("n_levels must be positive"));
                }
                Ok((1.0 - self.d as f64 * self.eps) / f64::from(n))
            }
            (None, Some(h)) => Ok(h),
            (None, None) => Err(bad("one of 'n_levels' or 'h' is required")),
            (Some(_), Some(_)) => Err(bad("'n_levels' and 'h' are mutually exclusive")),
        }
    }

    pub fn mesh(&self) -> Result<Mesh, CliError> {
        let graph = self.graph()?;
        build_mesh(&graph, self.mesh_h()?, self.eps).map_err(|e| bad(e.to_string()))
    }

    /// Mesh for a different level count under the same graph and eps.
    pub fn mesh_at(&self, n: u32) -> Result<Mesh, CliError> {
        let graph = self.graph()?;
        let h = (1.0 - self.d as f64 * self.eps) / f64::from(n);
        build_mesh(&graph, h, self.eps).map_err(|e| bad(e.to_string()))
    }

    pub fn tensor(&self) -> Result<MetricTensor, CliError> {
        match self.tensor.as_str() {
            "average" => Ok(MetricTensor::Average),
            "logarithmic" => Ok(MetricTensor::Logarithmic),
            "harmonic" => Ok(MetricTensor::Harmonic),
            "convex" => {
                let w = self
                    .tensor_weights
                    .ok_or_else(|| bad("tensor = convex requires tensor_weights"))?;
                Ok(MetricTensor::Convex(
                    ConvexWeights::new(w[0], w[1], w[2]).map_err(|e| bad(e.to_string()))?,
                ))
            }
            other => Err(bad(format!("unknown tensor '{other}'"))),
        }
    }

    pub fn base_hamiltonian(&self) -> Result<Hamiltonian, CliError> {
        match self.hamiltonian.as_str() {
            "zero" => Ok(Hamiltonian::Zero),
            "power" => {
                let coeff = match self.coefficient.as_str() {
                    "inverse-information" => CoefficientFn::InverseInformationPower {
                        kappa: self.kappa,
                    },
                    "inverse-theta" => CoefficientFn::InverseThetaPower { theta: self.theta },
                    "log-power" => CoefficientFn::LogPower,
                    other => return Err(bad(format!("unknown coefficient '{other}'"))),
                };
                Ok(Hamiltonian::PowerNorm {
                    kappa: self.kappa,
                    coeff,
                })
            }
            other => Err(bad(format!("unknown hamiltonian '{other}'"))),
        }
    }

    pub fn discrete_hamiltonian(&self) -> Result<DiscreteHamiltonian, CliError> {
        let graph = self.graph()?;
        let tensor = self.tensor()?;
        let base = self.base_hamiltonian()?;
        let n_pairs = self.d * (self.d - 1) / 2;
        let kind = match self.discrete.as_str() {
            "osher-sethian" => DiscreteKind::OsherSethian,
            "lax-friedrichs" => {
                let gamma = match &self.lf_gamma {
                    Some(g) => {
                        if g.len() != n_pairs {
                            return Err(bad(format!(
                                "lf_gamma needs {n_pairs} entries, got {}",
                                g.len()
                            )));
                        }
                        g.clone()
                    }
                    None => {
                        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                        let samples: Vec<_> = (0..32)
                            .map(|_| random_truncated_point(self.d, self.eps, &mut rng))
                            .collect();
                        lf_gamma_default(
                            &graph,
                            &tensor,
                            &base,
                            &samples,
                            self.lf_gamma_r,
                            &mut rng,
                        )
                    }
                };
                DiscreteKind::LaxFriedrichs { gamma }
            }
            other => return Err(bad(format!("unknown discrete hamiltonian '{other}'"))),
        };
        Ok(DiscreteHamiltonian::new(
            graph,
            tensor,
            base,
            kind,
            self.lambda1,
        ))
    }

    pub fn boundary_mode(&self) -> Result<BoundaryMode, CliError> {
        match self.boundary.as_str() {
            "constant" => Ok(BoundaryMode::Constant),
            "linear" => Ok(BoundaryMode::Linear),
            "dirichlet" => Ok(BoundaryMode::dirichlet_constant(self.dirichlet_value)),
            other => Err(bad(format!("unknown boundary mode '{other}'"))),
        }
    }

    pub fn scheme_kind(&self) -> Result<SchemeKind, CliError> {
        match self.scheme.as_str() {
            "explicit" => Ok(SchemeKind::Explicit),
            "implicit" => Ok(SchemeKind::Implicit {
                max_iters: self.max_iters,
                tol: self.tol,
            }),
            other => Err(bad(format!("unknown scheme '{other}'"))),
        }
    }

    /// Effective time step for the given mesh size: an explicit `tau` is used
    /// verbatim (the horizon must then divide into whole steps); a ratio is
    /// rounded to the nearest whole-step subdivision of the horizon.
    pub fn effective_tau(&self, h: f64) -> Result<f64, CliError> {
        match (self.tau, self.tau_over_h) {
            (Some(tau), None) => Ok(tau),
            (None, ratio) => {
                let ratio = ratio.unwrap_or(0.05);
                let tau0 = ratio * h;
                if self.t_end == 0.0 {
                    return Ok(tau0);
                }
                let steps = (self.t_end / tau0).round().max(1.0);
                Ok(self.t_end / steps)
            }
            (Some(_), Some(_)) => Err(bad("'tau' and 'tau_over_h' are mutually exclusive")),
        }
    }

    pub fn scheme_config(&self, h: f64) -> Result<SchemeConfig, CliError> {
        Ok(SchemeConfig {
            tau: self.effective_tau(h)?,
            t_end: self.t_end,
            boundary: self.boundary_mode()?,
            kind: self.scheme_kind()?,
            cfl_ratio_check: None,
        })
    }

    pub fn initial_fn(&self) -> Result<impl Fn(&[f64]) -> f64 + Send + Sync + Clone, CliError> {
        let kind = match self.initial.as_str() {
            "squared-l2-norm" => 0u8,
            "min-cos" => 1,
            "neg-min-cos" => 2,
            other => return Err(bad(format!("unknown initial condition '{other}'"))),
        };
        Ok(move |xi: &[f64]| {
            let sq: f64 = xi.iter().map(|c| c * c).sum();
            match kind {
                0 => sq,
                1 => xi.iter().cloned().fold(f64::INFINITY, f64::min) * sq.cos(),
                _ => -xi.iter().cloned().fold(f64::INFINITY, f64::min) * sq.cos(),
            }
        })
    }

    pub fn potential_fn(&self) -> Result<impl Fn(&[f64]) -> f64 + Send + Sync + Clone, CliError> {
        match self.potential.as_str() {
            "zero" => Ok(|_: &[f64]| 0.0),
            other => Err(bad(format!("unknown potential '{other}'"))),
        }
    }
}
