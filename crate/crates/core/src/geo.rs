//! Cities, great-circle distances and agent placement.

use std::collections::HashSet;
use std::fs::File;
use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const EARTH_RADIUS_KM: f64 = 6371.0;

const CITY_HEADER: [&str; 6] = ["id", "name", "lat", "lon", "n_agents", "frac_early"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct City {
    pub id: u32,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub n_agents: u32,
    pub frac_early: f64,
}

impl City {
    fn check(&self) -> std::result::Result<(), String> {
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err(format!("city {}: latitude {} outside [-90, 90]", self.id, self.lat));
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return Err(format!("city {}: longitude {} outside [-180, 180]", self.id, self.lon));
        }
        if !(0.0..=1.0).contains(&self.frac_early) {
            return Err(format!(
                "city {}: frac_early {} outside [0, 1]",
                self.id, self.frac_early
            ));
        }
        Ok(())
    }

    /// Number of early adopters placed in this city (round half up).
    pub fn early_count(&self) -> u32 {
        let x = self.frac_early * self.n_agents as f64;
        // small slack so 2.5 stored as 2.4999999999 still rounds up
        ((x + 0.5 + 1e-9).floor() as u32).min(self.n_agents)
    }
}

/// Validated, ordered set of cities.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CityTable {
    cities: Vec<City>,
}

impl CityTable {
    pub fn new(cities: Vec<City>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(cities.len());
        for c in &cities {
            c.check().map_err(Error::Validation)?;
            if !seen.insert(c.id) {
                return Err(Error::Validation(format!("duplicate city id {}", c.id)));
            }
        }
        Ok(CityTable { cities })
    }

    pub fn cities(&self) -> &[City] {
        &self.cities
    }

    pub fn len(&self) -> usize {
        self.cities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cities.is_empty()
    }

    pub fn total_agents(&self) -> usize {
        self.cities.iter().map(|c| c.n_agents as usize).sum()
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.cities.iter().position(|c| c.id == id)
    }

    /// Symmetric L x L matrix of great-circle distances, row-major.
    pub fn distance_matrix(&self) -> Vec<f64> {
        let l = self.cities.len();
        let mut d = vec![0.0; l * l];
        for a in 0..l {
            for b in (a + 1)..l {
                let r = distance_km(&self.cities[a], &self.cities[b]);
                d[a * l + b] = r;
                d[b * l + a] = r;
            }
        }
        d
    }
}

/// Reads a city CSV with header `id,name,lat,lon,n_agents,frac_early`.
pub fn load_cities(path: impl AsRef<Path>) -> Result<CityTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.iter().map(str::trim).ne(CITY_HEADER.iter().copied()) {
        return Err(parse_err(
            1,
            format!("expected header `{}`", CITY_HEADER.join(",")),
        ));
    }

    let mut cities = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.deserialize::<City>() {
        let city = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = cities.len() as u64 + 2;
        city.check()
            .map_err(|m| Error::Validation(format!("{}: line {line}: {m}", path.display())))?;
        if !seen.insert(city.id) {
            return Err(Error::Validation(format!(
                "{}: line {line}: duplicate city id {}",
                path.display(),
                city.id
            )));
        }
        cities.push(city);
    }
    Ok(CityTable { cities })
}

/// Writes a table in the same CSV schema `load_cities` reads.
pub fn write_cities(table: &CityTable, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    for c in table.cities() {
        w.serialize(c)?;
    }
    w.flush()
        .map_err(|e| Error::io(format!("writing {}", path.as_ref().display()), e))?;
    Ok(())
}

/// Haversine distance on a sphere of radius 6371 km.
pub fn distance_km(a: &City, b: &City) -> f64 {
    haversine_km(a.lat, a.lon, b.lat, b.lon)
}

pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AdopterType {
    Early,
    Regular,
}

impl AdopterType {
    pub fn is_early(self) -> bool {
        self == AdopterType::Early
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Agent {
    pub id: u32,
    /// Index into the city table (not the city's external id).
    pub city: u32,
    pub adopter_type: AdopterType,
}

/// Agents laid out city by city: agents of city `c` occupy `city_range(c)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentPopulation {
    city_of: Vec<u32>,
    types: Vec<AdopterType>,
    ranges: Vec<Range<u32>>,
    city_ids: Vec<u32>,
}

impl AgentPopulation {
    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn n_cities(&self) -> usize {
        self.ranges.len()
    }

    pub fn city_of(&self, agent: usize) -> usize {
        self.city_of[agent] as usize
    }

    pub fn adopter_type(&self, agent: usize) -> AdopterType {
        self.types[agent]
    }

    pub fn is_early(&self, agent: usize) -> bool {
        self.types[agent].is_early()
    }

    pub fn types(&self) -> &[AdopterType] {
        &self.types
    }

    pub fn cities(&self) -> &[u32] {
        &self.city_of
    }

    /// External id of the city at `index`.
    pub fn city_id(&self, index: usize) -> u32 {
        self.city_ids[index]
    }

    pub fn city_ids(&self) -> &[u32] {
        &self.city_ids
    }

    pub fn city_index(&self, id: u32) -> Option<usize> {
        self.city_ids.iter().position(|&c| c == id)
    }

    pub fn city_range(&self, city: usize) -> Range<u32> {
        self.ranges[city].clone()
    }

    pub fn early_count(&self) -> usize {
        self.types.iter().filter(|t| t.is_early()).count()
    }

    pub fn agent(&self, id: usize) -> Agent {
        Agent {
            id: id as u32,
            city: self.city_of[id],
            adopter_type: self.types[id],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Agent> + '_ {
        (0..self.len()).map(|i| self.agent(i))
    }

    /// Builds a population from explicit per-agent data. Agents must be
    /// grouped by city in ascending city order.
    pub fn from_parts(city_of: Vec<u32>, types: Vec<AdopterType>, n_cities: usize) -> Result<Self> {
        if city_of.len() != types.len() {
            return Err(Error::Validation("city and type vectors differ in length".into()));
        }
        let mut ranges = vec![0..0; n_cities];
        let mut start = 0u32;
        for (c, range) in ranges.iter_mut().enumerate() {
            let mut end = start;
            while (end as usize) < city_of.len() && city_of[end as usize] as usize == c {
                end += 1;
            }
            *range = start..end;
            start = end;
        }
        if start as usize != city_of.len() {
            return Err(Error::Validation(
                "agents must be grouped by ascending city index".into(),
            ));
        }
        Ok(AgentPopulation {
            city_of,
            types,
            ranges,
            city_ids: (0..n_cities as u32).collect(),
        })
    }
}

/// Places every city's agents, marking `round(frac_early * n_agents)` of them
/// Early at random positions within the city's id block.
pub fn place_agents(cities: &CityTable, rng_seed: u64) -> AgentPopulation {
    let mut rng = rng::stream(rng_seed, rng::tags::PLACEMENT);
    let n = cities.total_agents();
    let mut city_of = Vec::with_capacity(n);
    let mut types = Vec::with_capacity(n);
    let mut ranges = Vec::with_capacity(cities.len());

    for (idx, city) in cities.cities().iter().enumerate() {
        let start = city_of.len() as u32;
        let early = city.early_count() as usize;
        let mut block: Vec<AdopterType> = (0..city.n_agents as usize)
            .map(|i| {
                if i < early {
                    AdopterType::Early
                } else {
                    AdopterType::Regular
                }
            })
            .collect();
        block.shuffle(&mut rng);
        types.extend(block);
        city_of.extend(std::iter::repeat_n(idx as u32, city.n_agents as usize));
        ranges.push(start..city_of.len() as u32);
    }

    AgentPopulation {
        city_of,
        types,
        ranges,
        city_ids: cities.cities().iter().map(|c| c.id).collect(),
    }
}

/// Lat/lon box roughly covering the contiguous United States.
pub const US_BOUNDS: (f64, f64, f64, f64) = (25.0, 49.0, -124.5, -67.0);

/// San Francisco, used as the origin city of synthetic layouts.
pub const ORIGIN: (f64, f64) = (37.7749, -122.4194);

/// How Early fractions are spread over a synthetic layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EarlyProfile {
    /// Linear in distance from the origin: `frac_early_max` at the origin
    /// down to `frac_early_min` at the farthest city.
    #[default]
    Gradient,
    /// A random `hub_fraction` of cities (always including the origin) get
    /// `frac_early_max`; the rest get `frac_early_min`.
    Hubs,
}

/// Synthetic city layout used when no city file is supplied.
///
/// City 0 sits at `ORIGIN`; the rest are scattered uniformly over
/// `US_BOUNDS`. Equal min/max fractions give a uniform composition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticGeography {
    pub n_cities: u32,
    pub agents_per_city: u32,
    pub frac_early_min: f64,
    pub frac_early_max: f64,
    pub profile: EarlyProfile,
    pub hub_fraction: f64,
    #[serde(skip)]
    pub layout_seed: u64,
}

impl Default for SyntheticGeography {
    fn default() -> Self {
        SyntheticGeography {
            n_cities: 408,
            agents_per_city: 1000,
            frac_early_min: 0.0,
            frac_early_max: 0.0,
            profile: EarlyProfile::Gradient,
            hub_fraction: 0.0,
            layout_seed: 0,
        }
    }
}

impl SyntheticGeography {
    /// Uniform composition: every city has the same Early fraction.
    pub fn uniform(n_cities: u32, agents_per_city: u32, frac_early: f64, layout_seed: u64) -> Self {
        SyntheticGeography {
            n_cities,
            agents_per_city,
            frac_early_min: frac_early,
            frac_early_max: frac_early,
            layout_seed,
            ..Default::default()
        }
    }

    pub fn build(&self) -> Result<CityTable> {
        if !(0.0..=1.0).contains(&self.frac_early_min)
            || !(0.0..=1.0).contains(&self.frac_early_max)
            || self.frac_early_min > self.frac_early_max
        {
            return Err(Error::Validation(format!(
                "synthetic frac_early range [{}, {}] invalid",
                self.frac_early_min, self.frac_early_max
            )));
        }
        if !(0.0..=1.0).contains(&self.hub_fraction) {
            return Err(Error::Validation(format!(
                "hub_fraction must be in [0, 1], got {}",
                self.hub_fraction
            )));
        }
        let mut rng = rng::stream(self.layout_seed, rng::tags::LAYOUT);
        let (lat0, lat1, lon0, lon1) = US_BOUNDS;
        let coords: Vec<(f64, f64)> = (0..self.n_cities)
            .map(|i| {
                if i == 0 {
                    ORIGIN
                } else {
                    (rng.random_range(lat0..lat1), rng.random_range(lon0..lon1))
                }
            })
            .collect();

        let fracs: Vec<f64> = match self.profile {
            EarlyProfile::Gradient => {
                let dists: Vec<f64> = coords
                    .iter()
                    .map(|&(la, lo)| haversine_km(ORIGIN.0, ORIGIN.1, la, lo))
                    .collect();
                let d_max = dists.iter().copied().fold(0.0, f64::max);
                let span = self.frac_early_max - self.frac_early_min;
                dists
                    .iter()
                    .map(|&d| {
                        if d_max > 0.0 {
                            self.frac_early_max - span * d / d_max
                        } else {
                            self.frac_early_max
                        }
                    })
                    .collect()
            }
            EarlyProfile::Hubs => {
                let n = self.n_cities as usize;
                let n_hubs = ((self.hub_fraction * n as f64).round() as usize).clamp(1, n.max(1));
                let mut others: Vec<usize> = (1..n).collect();
                others.shuffle(&mut rng);
                let mut fr = vec![self.frac_early_min; n];
                for &i in std::iter::once(&0).chain(others.iter().take(n_hubs - 1)) {
                    if i < n {
                        fr[i] = self.frac_early_max;
                    }
                }
                fr
            }
        };

        let cities = coords
            .iter()
            .zip(fracs)
            .enumerate()
            .map(|(i, (&(lat, lon), frac_early))| City {
                id: i as u32,
                name: format!("city-{i}"),
                lat,
                lon,
                n_agents: self.agents_per_city,
                frac_early,
            })
            .collect();
        CityTable::new(cities)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn city(id: u32, lat: f64, lon: f64, n: u32, f: f64) -> City {
        City {
            id,
            name: format!("c{id}"),
            lat,
            lon,
            n_agents: n,
            frac_early: f,
        }
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn header_only_file_is_empty_table() {
        let f = write_tmp("id,name,lat,lon,n_agents,frac_early\n");
        let t = load_cities(f.path()).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.total_agents(), 0);
    }

    #[test]
    fn four_hundred_eight_uniform_cities() {
        let mut s = String::from("id,name,lat,lon,n_agents,frac_early\n");
        for i in 0..408 {
            s.push_str(&format!("{i},c{i},{},{},1000,0.1\n", 30.0 + (i % 10) as f64, -100.0 + (i / 10) as f64 * 0.5));
        }
        let t = load_cities(write_tmp(&s).path()).unwrap();
        assert_eq!(t.len(), 408);
        assert_eq!(t.total_agents(), 408_000);
        assert_eq!(t.cities()[7].id, 7);
    }

    #[test]
    fn rejects_frac_early_out_of_range() {
        let f = write_tmp("id,name,lat,lon,n_agents,frac_early\n0,a,10,10,5,1.5\n");
        assert!(matches!(load_cities(f.path()), Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_duplicate_ids() {
        let f = write_tmp("id,name,lat,lon,n_agents,frac_early\n0,a,10,10,5,0.5\n0,b,11,11,5,0.5\n");
        let err = load_cities(f.path()).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn malformed_row_names_line() {
        let f = write_tmp("id,name,lat,lon,n_agents,frac_early\n0,a,10,10,5,0.5\n1,b,north,11,5,0.5\n");
        match load_cities(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_wrong_header() {
        let f = write_tmp("id,lat,lon\n0,1,2\n");
        assert!(matches!(load_cities(f.path()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn distance_identity_and_symmetry() {
        let sf = city(0, 37.7749, -122.4194, 1, 0.0);
        let bos = city(1, 42.3601, -71.0589, 1, 0.0);
        assert_eq!(distance_km(&sf, &sf), 0.0);
        assert_eq!(distance_km(&sf, &bos), distance_km(&bos, &sf));
    }

    #[test]
    fn sf_to_boston() {
        // Spherical law of cosines as an independent route.
        let (p1, p2) = (37.7749f64.to_radians(), 42.3601f64.to_radians());
        let dl = (-71.0589f64 + 122.4194).to_radians();
        let cosines = EARTH_RADIUS_KM * (p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos()).acos();
        let d = distance_km(&city(0, 37.7749, -122.4194, 1, 0.0), &city(1, 42.3601, -71.0589, 1, 0.0));
        assert!((d - cosines).abs() < 1e-6);
        // 4339 km is what the 6378.137 km equatorial radius gives
        assert!((d - 4333.665).abs() < 1e-3, "{d}");
    }

    #[test]
    fn placement_counts() {
        let t = CityTable::new(vec![city(0, 0.0, 0.0, 1000, 0.1)]).unwrap();
        let pop = place_agents(&t, 1);
        assert_eq!(pop.len(), 1000);
        assert_eq!(pop.early_count(), 100);
    }

    #[test]
    fn placement_zero_early() {
        let t = CityTable::new(vec![city(0, 0.0, 0.0, 50, 0.0), city(1, 1.0, 1.0, 70, 0.0)]).unwrap();
        assert_eq!(place_agents(&t, 9).early_count(), 0);
    }

    #[test]
    fn placement_rounds_half_up() {
        let t = CityTable::new(vec![city(0, 0.0, 0.0, 10, 0.25), city(1, 1.0, 1.0, 10, 0.5)]).unwrap();
        let pop = place_agents(&t, 3);
        let early_in = |c: usize| pop.city_range(c).filter(|&i| pop.is_early(i as usize)).count();
        assert_eq!(early_in(0), 3);
        assert_eq!(early_in(1), 5);
        assert_eq!(pop.city_range(1), 10..20);
        assert!(pop.city_range(1).all(|i| pop.city_of(i as usize) == 1));
    }

    #[test]
    fn placement_is_deterministic() {
        let t = SyntheticGeography {
            n_cities: 20,
            agents_per_city: 30,
            frac_early_min: 0.1,
            frac_early_max: 0.4,
            layout_seed: 5,
            ..Default::default()
        }
        .build()
        .unwrap();
        assert_eq!(place_agents(&t, 11), place_agents(&t, 11));
        assert_ne!(place_agents(&t, 11).types(), place_agents(&t, 12).types());
    }

    #[test]
    fn synthetic_gradient_spans_range() {
        let t = SyntheticGeography {
            n_cities: 50,
            agents_per_city: 10,
            frac_early_min: 0.02,
            frac_early_max: 0.30,
            layout_seed: 1,
            ..Default::default()
        }
        .build()
        .unwrap();
        let fr: Vec<f64> = t.cities().iter().map(|c| c.frac_early).collect();
        assert!((fr[0] - 0.30).abs() < 1e-12);
        let min = fr.iter().copied().fold(1.0, f64::min);
        assert!((min - 0.02).abs() < 1e-12);
    }

    #[test]
    fn hub_profile_counts() {
        let t = SyntheticGeography {
            n_cities: 40,
            agents_per_city: 100,
            frac_early_min: 0.0,
            frac_early_max: 0.4,
            profile: EarlyProfile::Hubs,
            hub_fraction: 0.25,
            layout_seed: 4,
        }
        .build()
        .unwrap();
        let hubs: Vec<usize> = (0..40).filter(|&i| t.cities()[i].frac_early == 0.4).collect();
        assert_eq!(hubs.len(), 10);
        assert_eq!(hubs[0], 0);
        assert_eq!(place_agents(&t, 1).early_count(), 400);
    }

    #[test]
    fn round_trip_through_csv() {
        let t = SyntheticGeography {
            n_cities: 5,
            agents_per_city: 3,
            frac_early_min: 0.1,
            frac_early_max: 0.2,
            layout_seed: 2,
            ..Default::default()
        }
        .build()
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_cities(&t, f.path()).unwrap();
        assert_eq!(load_cities(f.path()).unwrap(), t);
    }
}
