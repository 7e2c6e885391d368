//! Giant-component-versus-homophily sweep.

use rayon::prelude::*;
use serde::Serialize;

use crate::geo::{place_agents, CityTable};
use crate::rng;

use super::{build_network, early_giant_component, measure_homophily, NetGenParams, GIANT_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub h: f64,
    pub geo_biased: bool,
    pub mean_gc: f64,
    pub std_err_gc: f64,
    pub mean_homophily: f64,
    pub networks: usize,
    pub failures: usize,
    #[serde(skip)]
    pub errors: Vec<String>,
}

/// For each homophily level and both geography settings, generates
/// `n_networks` networks (seed `p.rng_seed + index`) over one placement and
/// averages the early giant-component fraction.
///
/// Network seeds are shared across cells, so neighbouring cells differ only
/// in the parameter being swept. Generation failures are recorded per cell.
pub fn component_curve(
    cities: &CityTable,
    p: &NetGenParams,
    h_grid: &[f64],
    n_networks: usize,
) -> Vec<CurveRow> {
    let pop = place_agents(cities, p.rng_seed);
    let mut rows = Vec::with_capacity(h_grid.len() * 2);
    for &h in h_grid {
        for geo_biased in [true, false] {
            let results: Vec<Result<(f64, f64), String>> = (0..n_networks)
                .into_par_iter()
                .map(|k| {
                    let params = NetGenParams {
                        homophily_target: h,
                        geo_biased,
                        rng_seed: rng::derive(p.rng_seed, k as u64),
                        ..p.clone()
                    };
                    let net = build_network(&pop, cities, &params).map_err(|e| e.to_string())?;
                    let hom = measure_homophily(&net).unwrap_or(f64::NAN);
                    Ok((early_giant_component(&net), hom))
                })
                .collect();

            let (ok, errors): (Vec<_>, Vec<_>) = results.into_iter().partition(|r| r.is_ok());
            let ok: Vec<(f64, f64)> = ok.into_iter().map(Result::unwrap).collect();
            let errors: Vec<String> = errors.into_iter().map(|e| e.unwrap_err()).collect();
            let m = ok.len() as f64;
            let mean_gc = ok.iter().map(|r| r.0).sum::<f64>() / m;
            let var = if ok.len() > 1 {
                ok.iter().map(|r| (r.0 - mean_gc).powi(2)).sum::<f64>() / (m - 1.0)
            } else {
                0.0
            };
            rows.push(CurveRow {
                h,
                geo_biased,
                mean_gc,
                std_err_gc: (var / m).sqrt(),
                mean_homophily: ok.iter().map(|r| r.1).sum::<f64>() / m,
                networks: ok.len(),
                failures: errors.len(),
                errors,
            });
        }
    }
    rows
}

/// Smallest swept `h` whose mean giant component reaches the threshold.
pub fn smallest_h_with_giant(rows: &[CurveRow], geo_biased: bool) -> Option<f64> {
    rows.iter()
        .filter(|r| r.geo_biased == geo_biased && r.mean_gc >= GIANT_THRESHOLD)
        .map(|r| r.h)
        .fold(None, |acc: Option<f64>, h| Some(acc.map_or(h, |a| a.min(h))))
}
