//! CSV and JSON artifacts written by the command-line tool.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::AdoptionTrace;
use crate::error::{Error, Result};
use crate::metrics::{AdopterClass, BandRow, Composition};
use crate::netgen::CurveRow;

pub const TRACE_DIR: &str = "traces";
pub const BANDS_FILE: &str = "bands.csv";
pub const CITY_REPORT_FILE: &str = "city_report.csv";
pub const CITY_GROUPS_FILE: &str = "city_groups.csv";
pub const CURVE_FILE: &str = "component_curve.csv";
pub const GEOGRAPHY_FILE: &str = "geography.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
    }
    let f = File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn trace_paths(dir: &Path, run: usize) -> (PathBuf, PathBuf) {
    let base = dir.join(TRACE_DIR);
    (
        base.join(format!("run_{run:04}.csv")),
        base.join(format!("run_{run:04}_cities.csv")),
    )
}

/// Writes `week,new_adopters,cumulative,media_volume` and the sparse
/// `week,city_id,new_adopters` file (weeks with no adopters in a city are
/// left out).
pub fn write_trace(dir: &Path, run: usize, trace: &AdoptionTrace) -> Result<()> {
    let (global, cities) = trace_paths(dir, run);
    let mut w = create(&global)?;
    w.write_record(["week", "new_adopters", "cumulative", "media_volume"])?;
    for (week, (new, cum)) in trace.new_adopters.iter().zip(trace.cumulative()).enumerate() {
        w.write_record([
            week.to_string(),
            new.to_string(),
            cum.to_string(),
            trace.media[week].to_string(),
        ])?;
    }
    finish(w, &global)?;

    let mut w = create(&cities)?;
    w.write_record(["week", "city_id", "new_adopters"])?;
    for week in 0..trace.weeks() {
        for (c, &id) in trace.city_ids.iter().enumerate() {
            let k = trace.city_new(c)[week];
            if k > 0 {
                w.write_record([week.to_string(), id.to_string(), k.to_string()])?;
            }
        }
    }
    finish(w, &cities)
}

/// Rebuilds a trace from the two files written by [`write_trace`].
pub fn read_trace(dir: &Path, run: usize, city_ids: &[u32], n_agents: usize) -> Result<AdoptionTrace> {
    #[derive(Deserialize)]
    struct Global {
        week: usize,
        new_adopters: u64,
        #[allow(dead_code)]
        cumulative: u64,
        media_volume: f64,
    }
    #[derive(Deserialize)]
    struct CityRow {
        week: usize,
        city_id: u32,
        new_adopters: u32,
    }
    let parse_err = |path: &Path, e: csv::Error| Error::Parse {
        path: path.to_path_buf(),
        line: e.position().map(|p| p.line()).unwrap_or(0),
        message: e.to_string(),
    };
    let (global, cities) = trace_paths(dir, run);
    let mut new_adopters = Vec::new();
    let mut media = Vec::new();
    let f = File::open(&global).map_err(|e| Error::io(format!("opening {}", global.display()), e))?;
    for (i, row) in csv::Reader::from_reader(f).deserialize::<Global>().enumerate() {
        let row = row.map_err(|e| parse_err(&global, e))?;
        if row.week != i {
            return Err(Error::Validation(format!("{}: weeks must run 0, 1, 2, ...", global.display())));
        }
        new_adopters.push(row.new_adopters);
        media.push(row.media_volume);
    }
    let weeks = new_adopters.len();
    let mut new_by_city_week = vec![0u32; city_ids.len() * weeks];
    let f = File::open(&cities).map_err(|e| Error::io(format!("opening {}", cities.display()), e))?;
    for row in csv::Reader::from_reader(f).deserialize::<CityRow>() {
        let row = row.map_err(|e| parse_err(&cities, e))?;
        let c = city_ids.iter().position(|&id| id == row.city_id).ok_or_else(|| {
            Error::Validation(format!("{}: unknown city {}", cities.display(), row.city_id))
        })?;
        if row.week >= weeks {
            return Err(Error::Validation(format!("{}: week {} past horizon", cities.display(), row.week)));
        }
        new_by_city_week[c * weeks + row.week] += row.new_adopters;
    }
    let trace = AdoptionTrace {
        n_agents,
        city_ids: city_ids.to_vec(),
        new_adopters,
        new_by_city_week,
        media,
    };
    trace.check_invariants().map_err(|m| Error::Validation(format!("run {run}: {m}")))?;
    Ok(trace)
}

/// Indices of the runs present under `dir/traces`, ascending.
pub fn list_runs(dir: &Path) -> Result<Vec<usize>> {
    let base = dir.join(TRACE_DIR);
    let entries = fs::read_dir(&base).map_err(|e| Error::io(format!("listing {}", base.display()), e))?;
    let mut runs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(format!("listing {}", base.display()), e))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(k) = name
            .strip_prefix("run_")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse::<usize>().ok())
        {
            runs.push(k);
        }
    }
    runs.sort_unstable();
    Ok(runs)
}

pub fn write_bands(path: &Path, rows: &[BandRow]) -> Result<()> {
    let mut w = create(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    finish(w, path)
}

/// One row of the per-city report. Missing values are written as empty
/// fields.
#[derive(Debug, Clone, PartialEq)]
pub struct CityReportRow {
    pub city_id: u32,
    pub cm_week: Option<f64>,
    pub composition: Option<Composition>,
}

pub fn write_city_report(path: &Path, rows: &[CityReportRow]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record([
        "city_id",
        "cm_week",
        "frac_early_adopter",
        "frac_early_majority",
        "frac_late_majority",
        "frac_laggard",
    ])?;
    for r in rows {
        let mut rec = vec![r.city_id.to_string(), opt(r.cm_week)];
        for i in 0..4 {
            rec.push(opt(r.composition.map(|c| c[i])));
        }
        w.write_record(&rec)?;
    }
    finish(w, path)
}

pub fn class_name(c: AdopterClass) -> &'static str {
    match c {
        AdopterClass::EarlyAdopter => "early_adopter",
        AdopterClass::EarlyMajority => "early_majority",
        AdopterClass::LateMajority => "late_majority",
        AdopterClass::Laggard => "laggard",
    }
}

/// `city_id,cm_week,group`.
pub fn write_city_groups(path: &Path, rows: &[(u32, u32, AdopterClass)]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["city_id", "cm_week", "group"])?;
    for &(id, week, class) in rows {
        w.write_record([id.to_string(), week.to_string(), class_name(class).to_string()])?;
    }
    finish(w, path)
}

pub fn write_curve(path: &Path, rows: &[CurveRow]) -> Result<()> {
    let mut w = create(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    finish(w, path)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

impl InputFile {
    pub fn hash(role: &str, path: &Path) -> Result<Self> {
        Ok(InputFile {
            role: role.to_string(),
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        })
    }
}

/// Run metadata. Everything except the two timestamps is a function of the
/// config and inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: String,
    pub root_seed: u64,
    pub seed_rule: String,
    pub inputs: Vec<InputFile>,
    pub runs_requested: usize,
    pub runs_completed: usize,
    pub failure_count: usize,
    pub failures: Vec<(usize, String)>,
    pub outputs: Vec<String>,
    pub started_at: String,
    pub finished_at: String,
}

pub fn write_manifest(path: &Path, m: &Manifest) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?);
    serde_json::to_writer_pretty(&mut f, m)?;
    writeln!(f).and_then(|_| f.flush()).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let f = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    Ok(serde_json::from_reader(f)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> AdoptionTrace {
        AdoptionTrace {
            n_agents: 10,
            city_ids: vec![4, 9],
            new_adopters: vec![2, 3, 0, 1],
            new_by_city_week: vec![2, 1, 0, 0, 0, 2, 0, 1],
            media: vec![0.0, 0.25, 0.5, 1.0 / 3.0],
        }
    }

    #[test]
    fn trace_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = sample();
        write_trace(dir.path(), 7, &t).unwrap();
        assert_eq!(list_runs(dir.path()).unwrap(), vec![7]);
        assert_eq!(read_trace(dir.path(), 7, &[4, 9], 10).unwrap(), t);
        let text = fs::read_to_string(trace_paths(dir.path(), 7).0).unwrap();
        assert!(text.starts_with("week,new_adopters,cumulative,media_volume\n0,2,2,0\n1,3,5,0.25\n"));
        let cities = fs::read_to_string(trace_paths(dir.path(), 7).1).unwrap();
        assert_eq!(cities, "week,city_id,new_adopters\n0,4,2\n1,4,1\n1,9,2\n3,9,1\n");
    }

    #[test]
    fn bands_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        let row = BandRow { week: 0, mean: 1.5, lo75: 1.0, hi75: 2.0, lo95: 1.0, hi95: 2.0 };
        write_bands(&p, &[row]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "week,mean,lo75,hi75,lo95,hi95\n0,1.5,1.0,2.0,1.0,2.0\n");
    }

    #[test]
    fn city_report_blanks() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        let rows = [
            CityReportRow { city_id: 1, cm_week: Some(3.0), composition: Some([0.5, 0.5, 0.0, 0.0]) },
            CityReportRow { city_id: 2, cm_week: None, composition: None },
        ];
        write_city_report(&p, &rows).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(
            text,
            "city_id,cm_week,frac_early_adopter,frac_early_majority,frac_late_majority,frac_laggard\n1,3,0.5,0.5,0,0\n2,,,,,\n"
        );
    }

    #[test]
    fn sha_known_value() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        fs::write(&p, b"abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
