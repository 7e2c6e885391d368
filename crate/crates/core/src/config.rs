//! Experiment configuration files (TOML: `key = value` under `[section]`
//! headers).
//!
//! Every section is optional and falls back to defaults. Unknown keys are
//! rejected, and type errors report the dotted key path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{SeedSpec, SimParams};
use crate::error::{Error, Result};
use crate::geo::SyntheticGeography;
use crate::media::{MediaMode, MediaParams};
use crate::netgen::NetGenParams;

/// Environment variable consulted when neither the command line nor the
/// config names an output directory.
pub const OUTPUT_DIR_ENV: &str = "GEODIFFUSION_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "output";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Plain SI: one adopter type, no media, no geographic bias.
    ClassicSi,
    /// Two adopter types on a geographic, homophilous network.
    GeoHomophily,
    /// Media volume read from a weekly series file.
    ExogenousMedia,
    /// Media volume driven by adoption.
    EndogenousMedia,
    /// Early-agent giant component over a homophily grid.
    ComponentCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub beta_r: f64,
    pub ratio_r: f64,
    pub horizon: usize,
    pub seeding: SeedSpec,
    /// Build a fresh network for each run instead of sharing one.
    pub regenerate_network: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        let p = SimParams::default();
        SimSection {
            beta_r: p.beta_r,
            ratio_r: p.ratio_r,
            horizon: p.horizon,
            seeding: p.seeding,
            regenerate_network: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSection {
    pub h_grid: Vec<f64>,
    pub n_networks: usize,
}

impl Default for CurveSection {
    fn default() -> Self {
        CurveSection {
            h_grid: (1..=9).map(|i| i as f64 / 10.0).collect(),
            n_networks: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Root of every random stream. Layout and placement use it directly;
    /// network `k` and run `k` use `seed + k`.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cities_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Synthetic layout, used when `cities_path` is absent.
    #[serde(default = "default_geography")]
    pub geography: SyntheticGeography,
    #[serde(default)]
    pub netgen: NetGenParams,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub media: MediaParams,
    #[serde(default)]
    pub curve: CurveSection,
}

fn default_seed() -> u64 {
    1
}

fn default_runs() -> usize {
    100
}

fn default_geography() -> SyntheticGeography {
    SyntheticGeography::default()
}

impl ExperimentConfig {
    /// Defaults for `scenario`, already resolved.
    pub fn new(scenario: Scenario) -> Self {
        let mut cfg = ExperimentConfig {
            scenario,
            seed: default_seed(),
            n_runs: default_runs(),
            cities_path: None,
            media_path: None,
            output_dir: None,
            geography: default_geography(),
            netgen: NetGenParams::default(),
            sim: SimSection::default(),
            media: MediaParams::default(),
            curve: CurveSection::default(),
        };
        cfg.apply_scenario(&toml::Table::new())
            .expect("defaults satisfy every scenario");
        cfg.sync_seeds();
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config {
            key: String::new(),
            message: e.message().to_string(),
        })?;
        let de = toml::Deserializer::parse(text).map_err(|e| Error::Config {
            key: String::new(),
            message: e.message().to_string(),
        })?;
        let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            Error::Config {
                key: if key == "." { String::new() } else { key },
                message: e.into_inner().message().to_string(),
            }
        })?;
        cfg.apply_scenario(&table)?;
        cfg.sync_seeds();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    /// Fills scenario-implied settings and rejects explicit values that
    /// contradict the scenario. `raw` is the file as written, used to tell
    /// explicit keys from defaults.
    fn apply_scenario(&mut self, raw: &toml::Table) -> Result<()> {
        let given = |section: &str, key: &str| {
            raw.get(section)
                .and_then(|s| s.as_table())
                .and_then(|s| s.get(key))
                .is_some()
        };
        let conflict = |key: &str, message: String| Error::Config {
            key: key.to_string(),
            message,
        };
        match self.scenario {
            Scenario::ClassicSi => {
                if self.sim.ratio_r != 1.0 {
                    return Err(conflict("sim.ratio_r", format!(
                        "classic_si needs ratio_r = 1, got {}",
                        self.sim.ratio_r
                    )));
                }
                if self.media.alpha != 0.0 || self.media.mode != MediaMode::None {
                    return Err(conflict("media", "classic_si runs without media (alpha = 0, mode = none)".into()));
                }
                if given("netgen", "geo_biased") && self.netgen.geo_biased {
                    return Err(conflict("netgen.geo_biased", "classic_si needs geo_biased = false".into()));
                }
                self.netgen.geo_biased = false;
            }
            Scenario::GeoHomophily => {
                if self.media.mode != MediaMode::None {
                    return Err(conflict("media.mode", "geo_homophily runs without media".into()));
                }
            }
            Scenario::ExogenousMedia => {
                if self.media_path.is_none() {
                    return Err(conflict("media_path", "exogenous_media needs a media_path".into()));
                }
                if given("media", "mode") && self.media.mode != MediaMode::Exogenous {
                    return Err(conflict("media.mode", "exogenous_media needs mode = exogenous".into()));
                }
                self.media.mode = MediaMode::Exogenous;
            }
            Scenario::EndogenousMedia => {
                if given("media", "mode") && self.media.mode != MediaMode::Endogenous {
                    return Err(conflict("media.mode", "endogenous_media needs mode = endogenous".into()));
                }
                self.media.mode = MediaMode::Endogenous;
            }
            Scenario::ComponentCurve => {
                if self.curve.h_grid.is_empty() {
                    return Err(conflict("curve.h_grid", "needs at least one value".into()));
                }
                if self.curve.n_networks == 0 {
                    return Err(conflict("curve.n_networks", "must be at least 1".into()));
                }
            }
        }
        Ok(())
    }

    fn sync_seeds(&mut self) {
        self.geography.layout_seed = self.seed;
        self.netgen.rng_seed = self.seed;
    }

    /// Range checks on every section.
    pub fn validate(&self) -> Result<()> {
        let wrap = |section: &str, r: Result<()>| {
            r.map_err(|e| match e {
                Error::Validation(m) => Error::Config {
                    key: section.to_string(),
                    message: m,
                },
                other => other,
            })
        };
        wrap("netgen", self.netgen.validate())?;
        wrap("sim", self.sim_params().validate())?;
        if self.n_runs == 0 {
            return Err(Error::Config {
                key: "n_runs".into(),
                message: "must be at least 1".into(),
            });
        }
        if self.scenario == Scenario::ComponentCurve {
            if let Some(h) = self.curve.h_grid.iter().find(|h| !(0.0..=1.0).contains(*h)) {
                return Err(Error::Config {
                    key: "curve.h_grid".into(),
                    message: format!("homophily {h} outside [0, 1]"),
                });
            }
        }
        Ok(())
    }

    /// Dynamics parameters for run 0; run `k` replaces the seed with
    /// `seed + k`.
    pub fn sim_params(&self) -> SimParams {
        SimParams {
            beta_r: self.sim.beta_r,
            ratio_r: self.sim.ratio_r,
            horizon: self.sim.horizon,
            seeding: self.sim.seeding.clone(),
            media: self.media.clone(),
            rng_seed: self.seed,
        }
    }

    /// Command-line value, then config, then environment, then `output`.
    pub fn resolve_output_dir(&self, cli: Option<&Path>) -> PathBuf {
        cli.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }
}

/// Reads and validates a config file. Relative paths inside it are taken
/// relative to the file's directory.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let mut cfg = ExperimentConfig::from_toml_str(&text)?;
    let base = path.parent().unwrap_or(Path::new(""));
    for p in [&mut cfg.cities_path, &mut cfg.media_path, &mut cfg.output_dir]
        .into_iter()
        .flatten()
    {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::CitySeed;

    fn key_of(err: Error) -> String {
        match err {
            Error::Config { key, .. } => key,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_classic_defaults() {
        let cfg = ExperimentConfig::from_toml_str("scenario = \"classic_si\"\n").unwrap();
        assert_eq!(cfg.netgen.mean_degree, 7.0);
        assert_eq!(cfg.geography.n_cities, 408);
        assert_eq!(cfg.geography.agents_per_city, 1000);
        assert!(!cfg.netgen.geo_biased);
        assert_eq!(cfg.sim.ratio_r, 1.0);
        assert_eq!(cfg.media.alpha, 0.0);
    }

    #[test]
    fn classic_rejects_ratio() {
        let err = ExperimentConfig::from_toml_str("scenario = \"classic_si\"\n[sim]\nratio_r = 3.0\n").unwrap_err();
        assert!(err.is_validation());
        assert_eq!(key_of(err), "sim.ratio_r");
    }

    #[test]
    fn classic_rejects_geo_bias_and_media() {
        let err = ExperimentConfig::from_toml_str("scenario = \"classic_si\"\n[netgen]\ngeo_biased = true\n").unwrap_err();
        assert_eq!(key_of(err), "netgen.geo_biased");
        let err = ExperimentConfig::from_toml_str("scenario = \"classic_si\"\n[media]\nalpha = 0.1\n").unwrap_err();
        assert_eq!(key_of(err), "media");
    }

    #[test]
    fn exogenous_needs_path() {
        let err = ExperimentConfig::from_toml_str("scenario = \"exogenous_media\"\n").unwrap_err();
        assert!(err.is_validation());
        assert_eq!(key_of(err), "media_path");
        let cfg = ExperimentConfig::from_toml_str("scenario = \"exogenous_media\"\nmedia_path = \"m.csv\"\n").unwrap();
        assert_eq!(cfg.media.mode, MediaMode::Exogenous);
    }

    #[test]
    fn unknown_key_has_path() {
        let err = ExperimentConfig::from_toml_str("scenario = \"geo_homophily\"\n[netgen]\nmean_degre = 7\n").unwrap_err();
        let key = key_of(err);
        assert!(key.starts_with("netgen"), "{key}");
    }

    #[test]
    fn type_mismatch_has_path() {
        let err = ExperimentConfig::from_toml_str("scenario = \"geo_homophily\"\n[sim]\nhorizon = \"long\"\n").unwrap_err();
        assert_eq!(key_of(err), "sim.horizon");
    }

    #[test]
    fn missing_scenario() {
        let err = ExperimentConfig::from_toml_str("n_runs = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn rng_seed_only_at_root() {
        let err = ExperimentConfig::from_toml_str("scenario = \"geo_homophily\"\n[netgen]\nrng_seed = 4\n").unwrap_err();
        assert!(key_of(err).starts_with("netgen"));
        let cfg = ExperimentConfig::from_toml_str("scenario = \"geo_homophily\"\nseed = 42\n").unwrap();
        assert_eq!(cfg.netgen.rng_seed, 42);
        assert_eq!(cfg.geography.layout_seed, 42);
        assert_eq!(cfg.sim_params().rng_seed, 42);
    }

    #[test]
    fn range_errors_name_section() {
        let err = ExperimentConfig::from_toml_str("scenario = \"geo_homophily\"\n[sim]\nbeta_r = 0.5\nratio_r = 3.0\n").unwrap_err();
        assert_eq!(key_of(err), "sim");
    }

    #[test]
    fn seeding_forms() {
        let cfg = ExperimentConfig::from_toml_str(
            "scenario = \"geo_homophily\"\n[sim]\nseeding = { cities = [{ city_id = 3, count = 4 }] }\n",
        )
        .unwrap();
        assert_eq!(cfg.sim.seeding, SeedSpec::Cities(vec![CitySeed { city_id: 3, count: 4 }]));
        let cfg = ExperimentConfig::from_toml_str("scenario = \"geo_homophily\"\n[sim]\nseeding = { fraction = 0.01 }\n").unwrap();
        assert_eq!(cfg.sim.seeding, SeedSpec::Fraction(0.01));
    }

    #[test]
    fn round_trip_every_scenario() {
        for scenario in [
            Scenario::ClassicSi,
            Scenario::GeoHomophily,
            Scenario::EndogenousMedia,
            Scenario::ComponentCurve,
        ] {
            let cfg = ExperimentConfig::new(scenario);
            let text = cfg.to_toml_string();
            assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg, "{text}");
        }
        let mut cfg = ExperimentConfig::new(Scenario::GeoHomophily);
        cfg.scenario = Scenario::ExogenousMedia;
        cfg.media_path = Some("news.csv".into());
        cfg.media.mode = MediaMode::Exogenous;
        cfg.media.alpha = 0.2;
        cfg.seed = 99;
        cfg.sync_seeds();
        cfg.sim.seeding = SeedSpec::Fraction(0.002);
        assert_eq!(ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    }

    #[test]
    fn output_dir_precedence() {
        let mut cfg = ExperimentConfig::new(Scenario::ClassicSi);
        cfg.output_dir = Some("from-config".into());
        assert_eq!(cfg.resolve_output_dir(Some(Path::new("cli"))), PathBuf::from("cli"));
        assert_eq!(cfg.resolve_output_dir(None), PathBuf::from("from-config"));
    }

    #[test]
    fn relative_paths_follow_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, "scenario = \"exogenous_media\"\nmedia_path = \"news.csv\"\n").unwrap();
        let cfg = parse_config(&path).unwrap();
        assert_eq!(cfg.media_path.unwrap(), dir.path().join("news.csv"));
    }
}
