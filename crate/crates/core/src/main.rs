use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};

use geodiffusion::config::{parse_config, ExperimentConfig};
use geodiffusion::experiment;
use geodiffusion::{Error, Result};

#[derive(Parser)]
#[command(name = "geodiffusion", version, about = "Adoption contagion on a geographic social network")]
struct Cli {
    /// Worker threads (default: one per processor).
    #[arg(long, global = true, env = "GEODIFFUSION_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build one network and write its edge list.
    GenerateNetwork {
        config: PathBuf,
        /// Edge-list path; a `.meta.json` sidecar is written next to it.
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the configured scenario.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Early-agent giant component over the homophily grid.
    ComponentCurve {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        networks: Option<usize>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Recompute bands and city reports from a simulate output directory.
    Analyze { dir: PathBuf },
    /// Check a config and print it with defaults filled in.
    ValidateConfig { config: PathBuf },
}

/// Flags that replace config values.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    beta_r: Option<f64>,
    #[arg(long)]
    ratio_r: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    homophily: Option<f64>,
    #[arg(long)]
    mean_degree: Option<f64>,
    #[arg(long)]
    geo_biased: Option<bool>,
}

impl Overrides {
    /// Applies the flags to the config text and re-parses it, so scenario
    /// rules see overridden values exactly like values from the file.
    fn apply(&self, cfg: ExperimentConfig) -> Result<ExperimentConfig> {
        let mut table: toml::Table = toml::from_str(&cfg.to_toml_string()).expect("emitted config parses");
        let mut set = |section: Option<&str>, key: &str, value: toml::Value| {
            let target = match section {
                None => &mut table,
                Some(s) => table
                    .entry(s)
                    .or_insert_with(|| toml::Value::Table(Default::default()))
                    .as_table_mut()
                    .expect("sections are tables"),
            };
            target.insert(key.to_string(), value);
        };
        if let Some(v) = self.seed {
            set(None, "seed", toml::Value::Integer(v as i64));
        }
        if let Some(v) = self.runs {
            set(None, "n_runs", toml::Value::Integer(v as i64));
        }
        if let Some(v) = self.beta_r {
            set(Some("sim"), "beta_r", toml::Value::Float(v));
        }
        if let Some(v) = self.ratio_r {
            set(Some("sim"), "ratio_r", toml::Value::Float(v));
        }
        if let Some(v) = self.horizon {
            set(Some("sim"), "horizon", toml::Value::Integer(v as i64));
        }
        if let Some(v) = self.alpha {
            set(Some("media"), "alpha", toml::Value::Float(v));
        }
        if let Some(v) = self.homophily {
            set(Some("netgen"), "homophily_target", toml::Value::Float(v));
        }
        if let Some(v) = self.mean_degree {
            set(Some("netgen"), "mean_degree", toml::Value::Float(v));
        }
        if let Some(v) = self.geo_biased {
            set(Some("netgen"), "geo_biased", toml::Value::Boolean(v));
        }
        ExperimentConfig::from_toml_str(&toml::to_string(&table).expect("table serializes"))
    }
}

fn load(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    overrides.apply(parse_config(path)?)
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Error::Validation(format!("--jobs: {e}")))?;
    }
    match cli.command {
        Command::GenerateNetwork { config, out, overrides } => {
            let cfg = load(&config, &overrides)?;
            let net = experiment::generate_network(&cfg, &out)?;
            info!(
                "{} nodes, {} edges, {} stubs discarded -> {}",
                net.n(),
                net.edge_count(),
                net.discarded_stubs(),
                out.display()
            );
        }
        Command::Simulate { config, output_dir, overrides } => {
            let cfg = load(&config, &overrides)?;
            let out = cfg.resolve_output_dir(output_dir.as_deref());
            let s = experiment::run_simulation(&cfg, Some(&config), &out)?;
            report(&s);
        }
        Command::ComponentCurve { config, output_dir, networks, overrides } => {
            let mut cfg = load(&config, &overrides)?;
            if let Some(n) = networks {
                cfg.curve.n_networks = n;
            }
            let out = cfg.resolve_output_dir(output_dir.as_deref());
            let s = experiment::run_curve(&cfg, Some(&config), &out)?;
            report(&s);
        }
        Command::Analyze { dir } => {
            let files = experiment::analyze_dir(&dir)?;
            info!("wrote {} in {}", files.join(", "), dir.display());
        }
        Command::ValidateConfig { config } => {
            let cfg = parse_config(&config)?;
            print!("{}", cfg.to_toml_string());
        }
    }
    Ok(())
}

fn report(s: &experiment::Summary) {
    info!("wrote {} in {}", s.outputs.join(", "), s.output_dir.display());
    if s.failure_count > 0 {
        warn!("{} runs failed, see manifest.json", s.failure_count);
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
