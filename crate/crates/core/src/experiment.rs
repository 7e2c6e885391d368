//! Runs configured experiments and writes their artifacts.

use std::path::{Path, PathBuf};

use crate::config::{ExperimentConfig, Scenario};
use crate::dynamics::{run_replications, AdoptionTrace, NetworkSource};
use crate::error::{Error, Result};
use crate::geo::{load_cities, place_agents, write_cities, CityTable};
use crate::io::{self, CityReportRow, InputFile, Manifest};
use crate::media::{load_media_series, MediaSeries};
use crate::metrics::{
    city_composition, city_critical_mass, classify_adopters, ensemble_bands, nearest_rank,
    AdopterClass, ReplicationEnsemble,
};
use crate::netgen::{build_network, component_curve, CurveRow, Network};

pub const SEED_RULE: &str =
    "layout and placement use the root seed; network k and run k use root + k";

pub fn load_geography(cfg: &ExperimentConfig) -> Result<CityTable> {
    match &cfg.cities_path {
        Some(p) => load_cities(p),
        None => cfg.geography.build(),
    }
}

fn load_media(cfg: &ExperimentConfig) -> Result<Option<MediaSeries>> {
    match (cfg.scenario, &cfg.media_path) {
        (Scenario::ExogenousMedia, Some(p)) => Ok(Some(load_media_series(p)?)),
        _ => Ok(None),
    }
}

fn input_files(cfg: &ExperimentConfig, config_path: Option<&Path>) -> Result<Vec<InputFile>> {
    let mut inputs = Vec::new();
    if let Some(p) = config_path {
        inputs.push(InputFile::hash("config", p)?);
    }
    if let Some(p) = &cfg.cities_path {
        inputs.push(InputFile::hash("cities", p)?);
    }
    if let (Scenario::ExogenousMedia, Some(p)) = (cfg.scenario, &cfg.media_path) {
        inputs.push(InputFile::hash("media", p)?);
    }
    Ok(inputs)
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))
}

/// What a finished command produced.
#[derive(Debug, Clone)]
pub struct Summary {
    pub output_dir: PathBuf,
    pub outputs: Vec<String>,
    pub failure_count: usize,
}

/// Per-city report over an ensemble: median critical-mass week over the
/// runs where the city got there, and class fractions averaged over the
/// runs where it had adopters. Classes are assigned per run against that
/// run's national timing.
pub fn city_report(traces: &[AdoptionTrace]) -> Result<Vec<CityReportRow>> {
    let Some(first) = traces.first() else {
        return Ok(Vec::new());
    };
    let l = first.n_cities();
    let mut cm: Vec<Vec<f64>> = vec![Vec::new(); l];
    let mut comp_sum = vec![[0.0f64; 4]; l];
    let mut comp_n = vec![0usize; l];
    for t in traces {
        for (c, w) in city_critical_mass(t).into_iter().enumerate() {
            if let Some(w) = w {
                cm[c].push(w as f64);
            }
        }
        let adopters = t.adopters();
        if adopters.len() < 2 {
            continue;
        }
        for (c, comp) in city_composition(&adopters, l)?.into_iter().enumerate() {
            if let Some(comp) = comp {
                for i in 0..4 {
                    comp_sum[c][i] += comp[i];
                }
                comp_n[c] += 1;
            }
        }
    }
    Ok((0..l)
        .map(|c| {
            let mut weeks = cm[c].clone();
            weeks.sort_by(f64::total_cmp);
            CityReportRow {
                city_id: first.city_ids[c],
                cm_week: (!weeks.is_empty()).then(|| nearest_rank(&weeks, 0.5)),
                composition: (comp_n[c] > 0).then(|| comp_sum[c].map(|s| s / comp_n[c] as f64)),
            }
        })
        .collect())
}

/// Groups cities by the same one-standard-deviation rule used for agents,
/// applied to their critical-mass weeks.
pub fn city_groups(report: &[CityReportRow]) -> Result<Vec<(u32, u32, AdopterClass)>> {
    let reached: Vec<(u32, u32)> = report
        .iter()
        .filter_map(|r| r.cm_week.map(|w| (r.city_id, w as u32)))
        .collect();
    if reached.len() < 2 {
        return Ok(Vec::new());
    }
    let weeks: Vec<u32> = reached.iter().map(|r| r.1).collect();
    let classes = classify_adopters(&weeks)?;
    Ok(reached
        .into_iter()
        .zip(classes)
        .map(|((id, w), c)| (id, w, c))
        .collect())
}

/// Bands, city report and city groups for an ensemble. Returns the file
/// names written.
pub fn write_analysis(dir: &Path, ens: &ReplicationEnsemble) -> Result<Vec<String>> {
    let mut outputs = Vec::new();
    if ens.len() >= 2 {
        let bands = ensemble_bands(ens)?;
        io::write_bands(&dir.join(io::BANDS_FILE), &bands)?;
        outputs.push(io::BANDS_FILE.to_string());
    }
    let report = city_report(&ens.traces)?;
    io::write_city_report(&dir.join(io::CITY_REPORT_FILE), &report)?;
    outputs.push(io::CITY_REPORT_FILE.to_string());
    io::write_city_groups(&dir.join(io::CITY_GROUPS_FILE), &city_groups(&report)?)?;
    outputs.push(io::CITY_GROUPS_FILE.to_string());
    Ok(outputs)
}

/// Simulation scenarios: runs `n_runs` replications and writes traces,
/// analysis files and a manifest.
pub fn run_simulation(cfg: &ExperimentConfig, config_path: Option<&Path>, out: &Path) -> Result<Summary> {
    if cfg.scenario == Scenario::ComponentCurve {
        return run_curve(cfg, config_path, out);
    }
    let started_at = now();
    let inputs = input_files(cfg, config_path)?;
    let cities = load_geography(cfg)?;
    let media = load_media(cfg)?;
    let pop = place_agents(&cities, cfg.seed);
    let sim = cfg.sim_params();

    let shared;
    let source = if cfg.sim.regenerate_network {
        NetworkSource::Generate {
            pop: &pop,
            cities: &cities,
            netgen: &cfg.netgen,
        }
    } else {
        shared = build_network(&pop, &cities, &cfg.netgen)?;
        NetworkSource::Fixed(&shared)
    };
    let ens = run_replications(source, &sim, media.as_ref(), cfg.n_runs);

    ensure_dir(out)?;
    let mut outputs = vec![io::GEOGRAPHY_FILE.to_string()];
    write_cities(&cities, out.join(io::GEOGRAPHY_FILE))?;
    for (trace, run) in ens.traces.iter().zip(completed_runs(&ens, cfg.n_runs)) {
        io::write_trace(out, run, trace)?;
    }
    outputs.push(format!("{}/", io::TRACE_DIR));
    outputs.extend(write_analysis(out, &ens)?);

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "simulate".into(),
        config: cfg.to_toml_string(),
        root_seed: cfg.seed,
        seed_rule: SEED_RULE.into(),
        inputs,
        runs_requested: cfg.n_runs,
        runs_completed: ens.len(),
        failure_count: ens.failure_count(),
        failures: ens.failures.clone(),
        outputs: outputs.clone(),
        started_at,
        finished_at: now(),
    };
    io::write_manifest(&out.join(io::MANIFEST_FILE), &manifest)?;
    if ens.is_empty() {
        return Err(Error::Validation(format!(
            "all {} runs failed; first error: {}",
            cfg.n_runs,
            ens.failures.first().map(|f| f.1.as_str()).unwrap_or("none")
        )));
    }
    Ok(Summary {
        output_dir: out.to_path_buf(),
        outputs,
        failure_count: ens.failure_count(),
    })
}

/// Run indices of the successful traces, in order.
fn completed_runs(ens: &ReplicationEnsemble, n_runs: usize) -> Vec<usize> {
    let failed: std::collections::HashSet<usize> = ens.failures.iter().map(|f| f.0).collect();
    (0..n_runs).filter(|k| !failed.contains(k)).collect()
}

pub fn run_curve(cfg: &ExperimentConfig, config_path: Option<&Path>, out: &Path) -> Result<Summary> {
    let started_at = now();
    let inputs = input_files(cfg, config_path)?;
    let cities = load_geography(cfg)?;
    let rows: Vec<CurveRow> = component_curve(&cities, &cfg.netgen, &cfg.curve.h_grid, cfg.curve.n_networks);
    ensure_dir(out)?;
    io::write_curve(&out.join(io::CURVE_FILE), &rows)?;
    let failures: Vec<(usize, String)> = rows
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.errors.iter().map(move |e| (i, format!("h={} geo_biased={}: {e}", r.h, r.geo_biased))))
        .collect();
    let outputs = vec![io::CURVE_FILE.to_string()];
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "component-curve".into(),
        config: cfg.to_toml_string(),
        root_seed: cfg.seed,
        seed_rule: SEED_RULE.into(),
        inputs,
        runs_requested: cfg.curve.h_grid.len() * 2 * cfg.curve.n_networks,
        runs_completed: rows.iter().map(|r| r.networks).sum(),
        failure_count: failures.len(),
        failures,
        outputs: outputs.clone(),
        started_at,
        finished_at: now(),
    };
    io::write_manifest(&out.join(io::MANIFEST_FILE), &manifest)?;
    Ok(Summary {
        output_dir: out.to_path_buf(),
        failure_count: manifest.failure_count,
        outputs,
    })
}

/// Builds the configured network (seed = root) and writes its edge list
/// plus metadata sidecar.
pub fn generate_network(cfg: &ExperimentConfig, path: &Path) -> Result<Network> {
    let cities = load_geography(cfg)?;
    let pop = place_agents(&cities, cfg.seed);
    let net = build_network(&pop, &cities, &cfg.netgen)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    net.write_edge_list(path)?;
    Ok(net)
}

/// Recomputes the analysis files from the traces in a `simulate` output
/// directory.
pub fn analyze_dir(dir: &Path) -> Result<Vec<String>> {
    let cities = load_cities(dir.join(io::GEOGRAPHY_FILE))?;
    let ids: Vec<u32> = cities.cities().iter().map(|c| c.id).collect();
    let n = cities.total_agents();
    let runs = io::list_runs(dir)?;
    if runs.is_empty() {
        return Err(Error::Validation(format!("no traces under {}", dir.join(io::TRACE_DIR).display())));
    }
    let traces = runs
        .iter()
        .map(|&k| io::read_trace(dir, k, &ids, n))
        .collect::<Result<Vec<_>>>()?;
    let weeks = traces[0].weeks();
    if traces.iter().any(|t| t.weeks() != weeks) {
        return Err(Error::Validation("traces have different horizons".into()));
    }
    let ens = ReplicationEnsemble {
        traces,
        failures: Vec::new(),
    };
    write_analysis(dir, &ens)
}
