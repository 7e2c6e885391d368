//! Adopter classes, critical-mass weeks, ensemble bands and the mean-field
//! reference curve.

use serde::Serialize;

use crate::dynamics::AdoptionTrace;
use crate::error::{Error, Result};
use crate::media::CRITICAL_MASS_FRACTION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum AdopterClass {
    EarlyAdopter,
    EarlyMajority,
    LateMajority,
    Laggard,
}

impl AdopterClass {
    pub const ALL: [AdopterClass; 4] = [
        AdopterClass::EarlyAdopter,
        AdopterClass::EarlyMajority,
        AdopterClass::LateMajority,
        AdopterClass::Laggard,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Labels each time by its distance from the mean in population standard
/// deviations. A time sitting exactly on a boundary goes to the earlier of
/// the two classes' closed side: `mu - sigma` is EarlyMajority, `mu` is
/// EarlyMajority, `mu + sigma` is LateMajority.
///
/// Comparisons are done in integer arithmetic, so boundary hits are exact.
pub fn classify_adopters(times: &[u32]) -> Result<Vec<AdopterClass>> {
    if times.len() < 2 {
        return Err(Error::Validation(format!(
            "classification needs at least 2 adoption times, got {}",
            times.len()
        )));
    }
    let n = times.len() as i128;
    let sum: i128 = times.iter().map(|&t| t as i128).sum();
    let sum_sq: i128 = times.iter().map(|&t| (t as i128) * (t as i128)).sum();
    // n^2 * sigma^2
    let spread = n * sum_sq - sum * sum;

    Ok(times
        .iter()
        .map(|&t| {
            // n * (t - mu)
            let d = n * t as i128 - sum;
            let beyond_sigma = d * d > spread;
            if d < 0 && beyond_sigma {
                AdopterClass::EarlyAdopter
            } else if d <= 0 {
                AdopterClass::EarlyMajority
            } else if !beyond_sigma {
                AdopterClass::LateMajority
            } else {
                AdopterClass::Laggard
            }
        })
        .collect())
}

/// Class fractions over one city's adopters, in [`AdopterClass::ALL`] order.
pub type Composition = [f64; 4];

/// Per-city composition under a classification of all adopters together.
/// `adopters` holds `(city index, adoption week)`. Cities without adopters
/// get `None`.
pub fn city_composition(adopters: &[(usize, u32)], n_cities: usize) -> Result<Vec<Option<Composition>>> {
    let times: Vec<u32> = adopters.iter().map(|&(_, t)| t).collect();
    let classes = classify_adopters(&times)?;
    let mut counts = vec![[0usize; 4]; n_cities];
    for (&(city, _), class) in adopters.iter().zip(classes) {
        counts[city][class.index()] += 1;
    }
    Ok(counts
        .into_iter()
        .map(|c| {
            let total: usize = c.iter().sum();
            (total > 0).then(|| c.map(|x| x as f64 / total as f64))
        })
        .collect())
}

/// First week whose cumulative count reaches 13.5% of `final_count`.
pub fn critical_mass_time(cumulative: &[u64], final_count: u64) -> Option<usize> {
    critical_mass_time_at(cumulative, final_count, CRITICAL_MASS_FRACTION)
}

pub fn critical_mass_time_at(cumulative: &[u64], final_count: u64, fraction: f64) -> Option<usize> {
    if final_count == 0 {
        return None;
    }
    let threshold = fraction * final_count as f64;
    cumulative.iter().position(|&c| c as f64 >= threshold)
}

/// Critical-mass week of every city in one trace, `None` for cities that
/// never adopt.
pub fn city_critical_mass(trace: &AdoptionTrace) -> Vec<Option<usize>> {
    (0..trace.n_cities())
        .map(|c| {
            let cum = trace.city_cumulative(c);
            let last = *cum.last().unwrap_or(&0);
            critical_mass_time(&cum, last)
        })
        .collect()
}

/// First week where a cumulative curve reaches half of `n`.
pub fn half_adoption_week(cumulative: &[f64], n: f64) -> Option<usize> {
    cumulative.iter().position(|&c| c >= 0.5 * n)
}

/// Traces from one batch of replications plus the runs that failed.
#[derive(Debug, Clone, Default)]
pub struct ReplicationEnsemble {
    pub traces: Vec<AdoptionTrace>,
    /// `(run index, error message)`.
    pub failures: Vec<(usize, String)>,
}

impl ReplicationEnsemble {
    pub fn failure_count(&self) -> usize {
        self.failures.len()
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Mean cumulative adopters per week.
    pub fn mean_cumulative(&self) -> Vec<f64> {
        let curves: Vec<Vec<u64>> = self.traces.iter().map(|t| t.cumulative()).collect();
        let weeks = curves.first().map_or(0, Vec::len);
        (0..weeks)
            .map(|w| curves.iter().map(|c| c[w] as f64).sum::<f64>() / curves.len() as f64)
            .collect()
    }

    pub fn mean_final(&self) -> f64 {
        let total: u64 = self.traces.iter().map(|t| t.final_adopters()).sum();
        total as f64 / self.traces.len().max(1) as f64
    }
}

/// Nearest-rank quantile of sorted data: the `ceil(p * n)`-th smallest
/// value, with `p = 0` giving the minimum.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let n = sorted.len();
    // Small slack so that p * n landing a hair above an integer does not
    // skip a rank.
    let rank = ((p * n as f64) - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandRow {
    pub week: usize,
    pub mean: f64,
    pub lo75: f64,
    pub hi75: f64,
    pub lo95: f64,
    pub hi95: f64,
}

/// Per-week mean and central 75% / 95% intervals of the cumulative curves.
pub fn ensemble_bands(ens: &ReplicationEnsemble) -> Result<Vec<BandRow>> {
    if ens.traces.len() < 2 {
        return Err(Error::Validation(format!(
            "bands need at least 2 traces, got {}",
            ens.traces.len()
        )));
    }
    let curves: Vec<Vec<u64>> = ens.traces.iter().map(|t| t.cumulative()).collect();
    let weeks = curves[0].len();
    if curves.iter().any(|c| c.len() != weeks) {
        return Err(Error::Validation("traces have different horizons".into()));
    }
    Ok(bands_from_columns(weeks, |w| curves.iter().map(|c| c[w] as f64).collect()))
}

fn bands_from_columns(weeks: usize, column: impl Fn(usize) -> Vec<f64>) -> Vec<BandRow> {
    (0..weeks)
        .map(|week| {
            let mut col = column(week);
            col.sort_by(f64::total_cmp);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            BandRow {
                week,
                mean,
                lo75: nearest_rank(&col, 0.125),
                hi75: nearest_rank(&col, 0.875),
                lo95: nearest_rank(&col, 0.025),
                hi95: nearest_rank(&col, 0.975),
            }
        })
        .collect()
}

/// Discrete-time SI map `I <- I + (N - I)(1 - (1 - beta)^(k I / N))`,
/// returned for weeks `0..=weeks`.
pub fn si_meanfield(beta: f64, mean_degree: f64, n: f64, i0: f64, weeks: usize) -> Vec<f64> {
    let mut curve = Vec::with_capacity(weeks + 1);
    let mut i = i0;
    curve.push(i);
    for _ in 0..weeks {
        let p = 1.0 - (1.0 - beta).powf(mean_degree * i / n);
        i = (i + (n - i) * p).min(n);
        curve.push(i);
    }
    curve
}

/// Average ranks, ties sharing the mean of their positions (1-based).
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson correlation of average ranks).
/// `None` when either side is constant or lengths differ.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Nearest-rank interquartile range.
pub fn iqr(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    nearest_rank(&s, 0.75) - nearest_rank(&s, 0.25)
}

pub fn median(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    nearest_rank(&s, 0.5)
}
