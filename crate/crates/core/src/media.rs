//! Weekly mass-media volume and the media infection channel.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// National critical-mass share (13.5% of the population).
pub const CRITICAL_MASS_FRACTION: f64 = 0.135;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MediaMode {
    #[default]
    None,
    Exogenous,
    Endogenous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediaParams {
    pub mode: MediaMode,
    pub alpha: f64,
    pub shock_scale: f64,
    pub activation_fraction: f64,
    /// Response exponent: base volume is `(I/N)^exponent`. 1 is linear.
    pub exponent: f64,
}

impl Default for MediaParams {
    fn default() -> Self {
        MediaParams {
            mode: MediaMode::None,
            alpha: 0.0,
            shock_scale: 1.0,
            activation_fraction: CRITICAL_MASS_FRACTION,
            exponent: 1.0,
        }
    }
}

impl MediaParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must be in [0, 1], got {}", self.alpha));
        }
        if !(self.shock_scale >= 0.0) {
            return bad(format!("shock_scale must be >= 0, got {}", self.shock_scale));
        }
        if !(0.0..=1.0).contains(&self.activation_fraction) {
            return bad(format!(
                "activation_fraction must be in [0, 1], got {}",
                self.activation_fraction
            ));
        }
        if !(self.exponent > 0.0) {
            return bad(format!("exponent must be > 0, got {}", self.exponent));
        }
        Ok(())
    }
}

/// Weekly probability that the media alone converts a susceptible agent.
pub fn media_prob(alpha: f64, volume: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&volume));
    (alpha * volume).clamp(0.0, 1.0)
}

/// Adoption-driven volume: zero until critical mass, then
/// `(I_prev/N)^exponent` perturbed by a uniform multiplicative shock in
/// `[-shock_scale, +shock_scale]`, clamped to `[0, 1]`.
pub fn endogenous_volume<R: Rng + ?Sized>(
    i_prev: usize,
    n: usize,
    critical_mass_reached: bool,
    shock_scale: f64,
    exponent: f64,
    rng: &mut R,
) -> f64 {
    if !critical_mass_reached || n == 0 {
        return 0.0;
    }
    let base = (i_prev as f64 / n as f64).powf(exponent);
    let shock = if shock_scale > 0.0 {
        base * rng.random_range(-shock_scale..=shock_scale)
    } else {
        0.0
    };
    (base + shock).clamp(0.0, 1.0)
}

/// Max-normalized weekly media volume.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MediaSeries {
    values: Vec<f64>,
}

impl MediaSeries {
    /// Scales raw non-negative volumes so the maximum is 1. An all-zero
    /// series stays all zero.
    pub fn from_raw(raw: &[f64]) -> Result<Self> {
        if let Some((week, v)) = raw.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Validation(format!(
                "media volume at week {week} is {v}, must be finite and non-negative"
            )));
        }
        let max = raw.iter().copied().fold(0.0, f64::max);
        let values = if max > 0.0 {
            raw.iter().map(|v| v / max).collect()
        } else {
            raw.to_vec()
        };
        Ok(MediaSeries { values })
    }

    pub fn constant(value: f64, len: usize) -> Self {
        MediaSeries {
            values: vec![value.clamp(0.0, 1.0); len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Reads `week,volume` rows. Missing weeks between 0 and the last listed
/// week are filled with 0 before max-normalization.
pub fn load_media_series(path: impl AsRef<Path>) -> Result<MediaSeries> {
    #[derive(Deserialize)]
    struct Row {
        week: usize,
        volume: f64,
    }
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut by_week = BTreeMap::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        if !(row.volume >= 0.0) {
            return Err(Error::Validation(format!(
                "{}: week {} has negative volume {}",
                path.display(),
                row.week,
                row.volume
            )));
        }
        if by_week.insert(row.week, row.volume).is_some() {
            return Err(Error::Validation(format!(
                "{}: week {} listed twice",
                path.display(),
                row.week
            )));
        }
    }
    let len = by_week.keys().next_back().map_or(0, |w| w + 1);
    let mut raw = vec![0.0; len];
    for (w, v) in by_week {
        raw[w] = v;
    }
    MediaSeries::from_raw(&raw)
}

pub fn exogenous_volume(series: &MediaSeries, week: usize) -> Result<f64> {
    series.values.get(week).copied().ok_or(Error::MediaOutOfRange {
        week,
        len: series.len(),
    })
}

/// Per-run media state: yields M(t) for each week in order.
#[derive(Debug)]
pub struct MediaSource<'a, R> {
    params: &'a MediaParams,
    series: Option<&'a MediaSeries>,
    rng: R,
    activated: bool,
}

impl<'a, R: Rng> MediaSource<'a, R> {
    pub fn new(params: &'a MediaParams, series: Option<&'a MediaSeries>, rng: R) -> Result<Self> {
        if params.mode == MediaMode::Exogenous && series.is_none() {
            return Err(Error::Validation("exogenous media mode needs a media series".into()));
        }
        Ok(MediaSource {
            params,
            series,
            rng,
            activated: false,
        })
    }

    /// Volume for `week`, given cumulative adopters at the end of the
    /// previous week (`i_prev`) out of `n`.
    pub fn volume(&mut self, week: usize, i_prev: usize, n: usize) -> Result<f64> {
        let m = match self.params.mode {
            MediaMode::None => 0.0,
            MediaMode::Exogenous => exogenous_volume(self.series.expect("checked in new"), week)?,
            MediaMode::Endogenous => {
                if !self.activated
                    && i_prev as f64 >= self.params.activation_fraction * n as f64
                {
                    self.activated = true;
                }
                endogenous_volume(
                    i_prev,
                    n,
                    self.activated,
                    self.params.shock_scale,
                    self.params.exponent,
                    &mut self.rng,
                )
            }
        };
        assert!((0.0..=1.0).contains(&m), "media volume {m} outside [0, 1]");
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use std::io::Write;

    #[test]
    fn media_probability() {
        assert_eq!(media_prob(0.15, 1.0), 0.15);
        assert_eq!(media_prob(0.0, 0.7), 0.0);
        assert!((media_prob(0.15, 0.5) - 0.075).abs() < 1e-15);
    }

    #[test]
    fn saturated_volume() {
        let mut r = rng::stream(0, 0);
        assert_eq!(endogenous_volume(500, 500, true, 0.0, 1.0, &mut r), 1.0);
    }

    #[test]
    fn gated_before_critical_mass() {
        let mut r = rng::stream(0, 0);
        for i in [0, 10, 400, 500] {
            assert_eq!(endogenous_volume(i, 500, false, 1.0, 1.0, &mut r), 0.0);
        }
    }

    #[test]
    fn shocks_at_most_double() {
        let mut r = rng::stream(1, 0);
        let mut max: f64 = 0.0;
        for _ in 0..10_000 {
            let m = endogenous_volume(40, 100, true, 1.0, 1.0, &mut r);
            assert!((0.0..=0.8).contains(&m));
            max = max.max(m);
        }
        assert!(max <= 2.0 * 0.4 && max > 0.75);
    }

    #[test]
    fn superlinear_exponent() {
        let mut r = rng::stream(0, 0);
        assert!((endogenous_volume(50, 100, true, 0.0, 2.0, &mut r) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn exogenous_lookup() {
        let s = MediaSeries::constant(0.5, 3);
        assert_eq!(exogenous_volume(&s, 2).unwrap(), 0.5);
        assert!(matches!(exogenous_volume(&s, 3), Err(Error::MediaOutOfRange { week: 3, len: 3 })));
        assert!((media_prob(0.15, exogenous_volume(&s, 1).unwrap()) - 0.075).abs() < 1e-15);
    }

    fn csv_file(s: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(s.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_normalizes_and_fills_gaps() {
        let f = csv_file("week,volume\n0,20\n1,80\n3,40\n");
        let s = load_media_series(f.path()).unwrap();
        assert_eq!(s.values(), &[0.25, 1.0, 0.0, 0.5]);
    }

    #[test]
    fn load_all_zero() {
        let f = csv_file("week,volume\n0,0\n1,0\n");
        assert_eq!(load_media_series(f.path()).unwrap().values(), &[0.0, 0.0]);
    }

    #[test]
    fn load_rejects_negative() {
        let f = csv_file("week,volume\n0,1\n1,-2\n");
        assert!(matches!(load_media_series(f.path()), Err(Error::Validation(_))));
    }

    #[test]
    fn source_activation_latches() {
        let p = MediaParams {
            mode: MediaMode::Endogenous,
            alpha: 0.15,
            shock_scale: 0.0,
            activation_fraction: 0.5,
            exponent: 1.0,
        };
        let mut src = MediaSource::new(&p, None, rng::stream(0, 0)).unwrap();
        assert_eq!(src.volume(0, 40, 100).unwrap(), 0.0);
        assert_eq!(src.volume(1, 50, 100).unwrap(), 0.5);
        assert_eq!(src.volume(2, 60, 100).unwrap(), 0.6);
    }

    #[test]
    fn exogenous_source_needs_series() {
        let p = MediaParams {
            mode: MediaMode::Exogenous,
            ..Default::default()
        };
        assert!(MediaSource::new(&p, None, rng::stream(0, 0)).is_err());
    }
}
