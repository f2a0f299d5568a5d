//! Configuration resolution: command-line flags take precedence over the
//! TOML config file, which takes precedence over built-in defaults. The
//! resolved values are echoed into every artifact.

use clap::Args;
use genfv::mutation::MutationGenerator;
use genfv::XiMeasure;
use serde::{Deserialize, Serialize};

/// Flat TOML schema; every key is optional and mirrors the flag of the same
/// name. Unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileCfg {
    pub family: Option<String>,
    pub sigma2: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
    pub truncation: Option<f64>,
    pub atoms: Option<Vec<Atom>>,
    pub theta: Option<f64>,
    pub types: Option<usize>,
    pub x0: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub orders: Option<Vec<usize>>,
    pub t: Option<f64>,
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
    pub paths: Option<u64>,
    pub seed: Option<u64>,
    pub b_max: Option<usize>,
    pub tol: Option<f64>,
    pub z_max: Option<f64>,
    pub p_max: Option<usize>,
    pub alpha: Option<f64>,
    pub l: Option<f64>,
    pub cells: Option<usize>,
    pub strata: Option<usize>,
    pub omega: Option<f64>,
    pub s0: Option<f64>,
    pub format: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Atom {
    pub weight: f64,
    pub point: Vec<f64>,
}

/// Measure selection flags, shared by every subcommand that needs one.
#[derive(Args, Debug, Default, Clone)]
pub struct MeasureOpts {
    /// kingman | beta | power-law | delta1 | poisson-dirichlet | atoms
    #[arg(long)]
    pub family: Option<String>,
    /// Kingman component (the diffusion coefficient)
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Parameter of the Beta(2-beta, beta) family, in (0, 2)
    #[arg(long)]
    pub beta: Option<f64>,
    /// Parameter of the x^-gamma density family, in (0, 1)
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Parameter of the Poisson-Dirichlet family, > 0
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Restrict a density family to (eps, 1] (required for forward runs)
    #[arg(long)]
    pub truncation: Option<f64>,
}

/// Resolved measure, as echoed into artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct MeasureCfg {
    pub family: String,
    pub sigma2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<Atom>>,
}

pub fn resolve_measure(
    opts: &MeasureOpts,
    file: &FileCfg,
) -> Result<(MeasureCfg, XiMeasure), String> {
    let family = opts
        .family
        .clone()
        .or_else(|| file.family.clone())
        .ok_or("a measure family is required (--family or `family` in the config file)")?;
    let sigma2 = opts.sigma2.or(file.sigma2);
    let truncation = opts.truncation.or(file.truncation);
    let mut cfg = MeasureCfg {
        family: family.clone(),
        sigma2: sigma2.unwrap_or(0.0),
        beta: None,
        gamma: None,
        epsilon: None,
        truncation,
        atoms: None,
    };
    let mut m = match family.as_str() {
        "kingman" => {
            cfg.sigma2 = sigma2.unwrap_or(1.0);
            XiMeasure::kingman(cfg.sigma2).map_err(|e| e.to_string())?
        }
        "beta" => {
            let b = opts.beta.or(file.beta).ok_or("beta family needs --beta")?;
            cfg.beta = Some(b);
            XiMeasure::beta(b).map_err(|e| e.to_string())?
        }
        "power-law" | "powerlaw" => {
            let g = opts
                .gamma
                .or(file.gamma)
                .ok_or("power-law family needs --gamma")?;
            cfg.gamma = Some(g);
            XiMeasure::power_law(g).map_err(|e| e.to_string())?
        }
        "delta1" | "delta-one" | "star" => XiMeasure::delta_one(),
        "poisson-dirichlet" | "pd" => {
            let e = opts
                .epsilon
                .or(file.epsilon)
                .ok_or("poisson-dirichlet family needs --epsilon")?;
            cfg.epsilon = Some(e);
            XiMeasure::poisson_dirichlet(e).map_err(|e| e.to_string())?
        }
        "atoms" => {
            let atoms = file
                .atoms
                .clone()
                .ok_or("atoms family needs `atoms` entries in the config file")?;
            cfg.atoms = Some(atoms.clone());
            XiMeasure::simplex_atoms(atoms.into_iter().map(|a| (a.weight, a.point)).collect())
                .map_err(|e| e.to_string())?
        }
        other => return Err(format!("unknown family `{other}`")),
    };
    if family != "kingman" {
        if let Some(s2) = sigma2 {
            m = m.with_sigma2(s2).map_err(|e| e.to_string())?;
            cfg.sigma2 = s2;
        }
    }
    if let Some(eps) = truncation {
        m = m.truncated(eps).map_err(|e| e.to_string())?;
    }
    Ok((cfg, m))
}

/// Mutation and initial-state flags for the forward and dual commands.
#[derive(Args, Debug, Default, Clone)]
pub struct StateOpts {
    /// Total parent-independent mutation rate (per-lineage rate theta/2)
    #[arg(long)]
    pub theta: Option<f64>,
    /// Number of types
    #[arg(long)]
    pub types: Option<usize>,
    /// Initial frequencies, comma-separated (e.g. 0.3,0.7)
    #[arg(long)]
    pub x0: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateCfg {
    pub theta: f64,
    pub types: usize,
    pub x0: Vec<f64>,
}

pub fn resolve_state(opts: &StateOpts, file: &FileCfg) -> Result<StateCfg, String> {
    let theta = opts.theta.or(file.theta).unwrap_or(0.0);
    if theta < 0.0 {
        return Err("theta must be >= 0".into());
    }
    let x0 = match &opts.x0 {
        Some(s) => s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<f64>, String>>()?,
        None => file.x0.clone().unwrap_or_default(),
    };
    let types = opts
        .types
        .or(file.types)
        .unwrap_or(if x0.is_empty() { 2 } else { x0.len() });
    let x0 = if x0.is_empty() {
        vec![1.0 / types as f64; types]
    } else {
        x0
    };
    if x0.len() != types {
        return Err(format!(
            "x0 has {} entries but there are {types} types",
            x0.len()
        ));
    }
    if (x0.iter().sum::<f64>() - 1.0).abs() > 1e-9 || x0.iter().any(|&v| v < 0.0) {
        return Err("x0 must be a probability vector".into());
    }
    Ok(StateCfg { theta, types, x0 })
}

impl StateCfg {
    /// Symmetric parent-independent generator, or `None` when theta = 0.
    pub fn mutation(&self) -> Result<Option<MutationGenerator>, String> {
        if self.theta == 0.0 {
            return Ok(None);
        }
        let nu0 = vec![1.0 / self.types as f64; self.types];
        MutationGenerator::parent_independent(self.theta, &nu0)
            .map(Some)
            .map_err(|e| e.to_string())
    }
}

pub fn load_file_cfg(path: Option<&std::path::Path>) -> Result<FileCfg, String> {
    match path {
        None => Ok(FileCfg::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            toml::from_str(&text).map_err(|e| format!("bad config {}: {e}", p.display()))
        }
    }
}

/// Seed is mandatory for stochastic commands.
pub fn require_seed(flag: Option<u64>, file: &FileCfg) -> Result<u64, String> {
    flag.or(file.seed)
        .ok_or_else(|| "a seed is required (--seed or `seed` in the config file)".into())
}
