//! TOML scenario configuration: `[chain]`, `[run]` and `[meta]` tables.

use std::path::{Path, PathBuf};

use anyhow::Context;
use lattice_heat::continuum::VelocityModel;
use lattice_heat::diffusion::Stencil;
use lattice_heat::moments::Preparation;
use lattice_heat::ChainParams;
use serde::{Deserialize, Serialize};

/// Environment variable that overrides the output directory of the config.
pub const OUT_ENV: &str = "LATTICE_HEAT_OUT";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub chain: ChainParams,
    pub run: RunSection,
    pub meta: MetaSection,
}

/// Keys used by one or more subcommands. Each subcommand reads the ones it
/// needs and ignores the rest.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub temp_min: Option<f64>,
    pub temp_max: Option<f64>,
    pub temp_steps: Option<usize>,
    pub log_spacing: bool,
    pub stencil: Option<Stencil>,
    pub t_hot: Option<f64>,
    pub t_cold: Option<f64>,
    pub hotspot_width: Option<f64>,
    pub hotspot_center: Option<f64>,
    pub preparation: Option<Preparation>,
    pub t_final: Option<f64>,
    pub sample_interval: Option<f64>,
    pub sample_stride: Option<usize>,
    pub window: Option<[f64; 2]>,
    pub dt_max: Option<f64>,
    pub velocity_model: Option<VelocityModel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetaSection {
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for MetaSection {
    fn default() -> Self {
        Self {
            seed: lattice_heat_verify::DEFAULT_SEED,
            output_dir: None,
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// `--out` beats the environment variable, which beats `meta.output_dir`.
    pub fn resolve_output_dir(&mut self, cli_out: Option<PathBuf>) -> PathBuf {
        let dir = cli_out
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .or_else(|| self.meta.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        self.meta.output_dir = Some(dir.clone());
        dir
    }
}

/// Temperatures of a sweep: `temp_steps` points from `temp_min` to
/// `temp_max` (geometric when `log_spacing`), or `temp_max` alone for a
/// single step. Both ends default to the bath temperature.
pub fn temperatures(run: &RunSection, chain: &ChainParams) -> Result<Vec<f64>, Vec<String>> {
    let lo = run.temp_min.unwrap_or(chain.bath_temp);
    let hi = run.temp_max.unwrap_or(chain.bath_temp);
    let steps = run.temp_steps.unwrap_or(1);
    let mut bad = Vec::new();
    if !(lo >= 0.0) {
        bad.push(format!("run.temp_min = {lo} (need >= 0)"));
    }
    if !(hi >= lo) {
        bad.push(format!("run.temp_max = {hi} (need >= temp_min = {lo})"));
    }
    if steps == 0 {
        bad.push("run.temp_steps = 0 (need >= 1)".into());
    }
    if run.log_spacing && !(lo > 0.0) {
        bad.push("run.log_spacing needs temp_min > 0".into());
    }
    if !bad.is_empty() {
        return Err(bad);
    }
    if steps == 1 {
        return Ok(vec![hi]);
    }
    Ok((0..steps)
        .map(|i| {
            let f = i as f64 / (steps - 1) as f64;
            if run.log_spacing {
                lo * (hi / lo).powf(f)
            } else {
                lo + (hi - lo) * f
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c = ScenarioConfig::parse("").unwrap();
        assert_eq!(c.chain, ChainParams::default());
        assert_eq!(c.meta.seed, lattice_heat_verify::DEFAULT_SEED);
    }

    #[test]
    fn partial_chain_table() {
        let c = ScenarioConfig::parse("[chain]\nn_sites = 8\nlambda = 0.3\n[run]\nstencil = \"mode_sum\"\n").unwrap();
        assert_eq!(c.chain.n_sites, 8);
        assert_eq!(c.chain.lambda_fric, 0.3);
        assert_eq!(c.chain.mass, 1.0);
        assert_eq!(c.run.stencil, Some(Stencil::ModeSum));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ScenarioConfig::parse("[chain]\nomega = 1.0\n").is_err());
        assert!(ScenarioConfig::parse("[other]\n").is_err());
    }

    #[test]
    fn sweeps() {
        let chain = ChainParams::default();
        let run = RunSection {
            temp_min: Some(1.0),
            temp_max: Some(100.0),
            temp_steps: Some(3),
            log_spacing: true,
            ..RunSection::default()
        };
        let t = temperatures(&run, &chain).unwrap();
        assert_eq!(t.len(), 3);
        assert!((t[1] - 10.0).abs() < 1e-12);
        let single = temperatures(&RunSection::default(), &chain).unwrap();
        assert_eq!(single, vec![chain.bath_temp]);
        let bad = RunSection {
            temp_min: Some(5.0),
            temp_max: Some(1.0),
            temp_steps: Some(0),
            ..RunSection::default()
        };
        assert_eq!(temperatures(&bad, &chain).unwrap_err().len(), 2);
    }
}
