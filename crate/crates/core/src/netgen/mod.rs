//! Social network generation on a city layout.
//!
//! Degrees are Poisson. Stubs are paired one focal stub at a time: the focal
//! stub's owner type decides which partner pool (Early, Regular or any) the
//! partner comes from, and, with geographic bias on, the partner's city is
//! drawn in proportion to `kernel(distance) x open stubs in that city`.

mod components;
mod curve;
mod kernel;

use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{AdopterType, AgentPopulation, CityTable};
use crate::rng::{self, SimRng};

pub use components::{early_giant_component, measure_homophily, UnionFind};
pub use curve::{component_curve, smallest_h_with_giant, CurveRow};
pub use kernel::{floored_kernel_weight, kernel_weight, R_MIN_KM};

/// Redraws allowed per focal stub before it is dropped.
pub const MAX_REDRAWS: usize = 100;

/// Dropped stubs tolerated, as a fraction of all stubs, before generation
/// is reported as failed.
pub const DISCARD_BUDGET: f64 = 0.02;

/// Early-adopter giant component threshold.
pub const GIANT_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetGenParams {
    pub mean_degree: f64,
    pub gamma: f64,
    pub nu_km: f64,
    pub homophily_target: f64,
    pub geo_biased: bool,
    /// Set by the caller from the root seed, never read from config files.
    #[serde(skip)]
    pub rng_seed: u64,
    /// Distance floor applied before the power law (same-city pairs sit at 0 km).
    pub r_min_km: f64,
}

impl Default for NetGenParams {
    fn default() -> Self {
        NetGenParams {
            mean_degree: 7.0,
            gamma: 1.2,
            nu_km: 1000.0,
            homophily_target: 0.1,
            geo_biased: true,
            rng_seed: 1,
            r_min_km: R_MIN_KM,
        }
    }
}

impl NetGenParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(self.mean_degree > 0.0 && self.mean_degree.is_finite()) {
            return bad(format!("mean_degree must be > 0, got {}", self.mean_degree));
        }
        if !(self.gamma > 0.0) {
            return bad(format!("gamma must be > 0, got {}", self.gamma));
        }
        if !(self.r_min_km > 0.0 && self.r_min_km <= self.nu_km) {
            return bad(format!(
                "r_min_km must be in (0, nu_km], got {}",
                self.r_min_km
            ));
        }
        if !(self.nu_km > 0.0) {
            return bad(format!("nu_km must be > 0, got {}", self.nu_km));
        }
        if !(0.0..=1.0).contains(&self.homophily_target) {
            return bad(format!(
                "homophily_target must be in [0, 1], got {}",
                self.homophily_target
            ));
        }
        Ok(())
    }
}

/// Diagnostics for a network that could not be realized.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationFailure {
    pub reason: String,
    pub total_stubs: usize,
    pub discarded_stubs: usize,
    pub early_nodes_with_stubs: usize,
}

impl fmt::Display for GenerationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} of {} stubs discarded, {} early nodes with stubs)",
            self.reason, self.discarded_stubs, self.total_stubs, self.early_nodes_with_stubs
        )
    }
}

impl std::error::Error for GenerationFailure {}

/// Undirected simple graph in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pop: AgentPopulation,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    params: Option<NetGenParams>,
    discarded_stubs: usize,
}

impl Network {
    /// Builds a network from an explicit edge list. Rejects self-loops,
    /// duplicate edges and out-of-range endpoints.
    pub fn from_edges(pop: AgentPopulation, edges: &[(u32, u32)]) -> Result<Self> {
        let n = pop.len();
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a as usize >= n || b as usize >= n {
                return Err(Error::Validation(format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                return Err(Error::Validation(format!("self-loop at {a}")));
            }
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        for (i, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Validation(format!("duplicate edge at node {i}")));
            }
        }
        Ok(Self::from_adjacency(pop, adj, None, 0))
    }

    fn from_adjacency(
        pop: AgentPopulation,
        adj: Vec<Vec<u32>>,
        params: Option<NetGenParams>,
        discarded_stubs: usize,
    ) -> Self {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        let mut targets = Vec::with_capacity(adj.iter().map(Vec::len).sum());
        offsets.push(0);
        for mut list in adj {
            list.sort_unstable();
            targets.extend_from_slice(&list);
            offsets.push(targets.len());
        }
        Network {
            pop,
            offsets,
            targets,
            params,
            discarded_stubs,
        }
    }

    pub fn n(&self) -> usize {
        self.pop.len()
    }

    pub fn population(&self) -> &AgentPopulation {
        &self.pop
    }

    pub fn params(&self) -> Option<&NetGenParams> {
        self.params.as_ref()
    }

    pub fn discarded_stubs(&self) -> usize {
        self.discarded_stubs
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        if self.n() == 0 {
            0.0
        } else {
            self.targets.len() as f64 / self.n() as f64
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors(a).binary_search(&(b as u32)).is_ok()
    }

    /// Edges with `src < dst`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .filter(move |&&j| j as usize > i)
                .map(move |&j| (i as u32, j))
        })
    }

    /// Full scan for symmetry, simplicity and sorted neighbor lists.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for i in 0..self.n() {
            let nbrs = self.neighbors(i);
            for w in nbrs.windows(2) {
                if w[0] >= w[1] {
                    return Err(format!("node {i}: neighbors unsorted or duplicated"));
                }
            }
            for &j in nbrs {
                if j as usize == i {
                    return Err(format!("self-loop at {i}"));
                }
                if !self.has_edge(j as usize, i) {
                    return Err(format!("edge {i}->{j} has no reverse"));
                }
            }
        }
        Ok(())
    }

    /// Writes `src,dst` rows plus a JSON sidecar `<path>.meta.json`.
    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["src", "dst"])?;
        for (a, b) in self.edges() {
            w.write_record([a.to_string(), b.to_string()])?;
        }
        w.flush()
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;

        let meta = serde_json::json!({
            "nodes": self.n(),
            "edges": self.edge_count(),
            "early_nodes": self.pop.early_count(),
            "discarded_stubs": self.discarded_stubs,
            "params": self.params,
            "rng_seed": self.params.as_ref().map(|p| p.rng_seed),
        });
        let meta_path = sidecar_path(path);
        fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
            .map_err(|e| Error::io(format!("writing {}", meta_path.display()), e))?;
        Ok(())
    }
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    s.into()
}

/// I.i.d. Poisson degrees; one entry is bumped when the total is odd.
pub fn sample_degrees<R: Rng + ?Sized>(n: usize, mean_degree: f64, rng: &mut R) -> Vec<u32> {
    let poisson = Poisson::new(mean_degree).expect("mean_degree must be positive and finite");
    let mut degrees: Vec<u32> = (0..n).map(|_| poisson.sample(rng) as u32).collect();
    let total: u64 = degrees.iter().map(|&d| d as u64).sum();
    if total % 2 == 1 && n > 0 {
        let i = rng.random_range(0..n);
        degrees[i] += 1;
    }
    degrees
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pool {
    Early,
    Regular,
    Any,
}

/// Pool-choice probabilities for focal stubs of each type.
///
/// With global Early stub share `f`, an Early focal stub that picks from the
/// Early pool with probability `a` and a Regular one with probability `b`
/// must satisfy `f*a + (1-f)*b = f` for the stub counts to balance, and the
/// expected homophily is then `a`. Each side either restricts its draw to a
/// single pool or falls back to the whole population.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Mixing {
    early_restrict: f64,
    early_pool: Pool,
    regular_restrict: f64,
    regular_pool: Pool,
}

impl Mixing {
    fn new(h: f64, f: f64) -> Self {
        if f <= 0.0 || f >= 1.0 {
            return Mixing {
                early_restrict: 0.0,
                early_pool: Pool::Any,
                regular_restrict: 0.0,
                regular_pool: Pool::Any,
            };
        }
        if h >= f {
            // assortative: a = r + (1-r) f
            let r = (h - f) / (1.0 - f);
            Mixing {
                early_restrict: r,
                early_pool: Pool::Early,
                regular_restrict: r,
                regular_pool: Pool::Regular,
            }
        } else {
            // disassortative: a = (1-g) f, b = g2 + (1-g2) f
            let g = 1.0 - h / f;
            let b = f * (1.0 - h) / (1.0 - f);
            let g2 = ((b - f) / (1.0 - f)).clamp(0.0, 1.0);
            Mixing {
                early_restrict: g,
                early_pool: Pool::Regular,
                regular_restrict: g2,
                regular_pool: Pool::Early,
            }
        }
    }

    fn pick<R: Rng>(&self, early: bool, rng: &mut R) -> Pool {
        let (p, pool) = if early {
            (self.early_restrict, self.early_pool)
        } else {
            (self.regular_restrict, self.regular_pool)
        };
        if p > 0.0 && rng.random::<f64>() < p {
            pool
        } else {
            Pool::Any
        }
    }
}

/// Open stubs, bucketed by owner type and city, with O(1) removal.
struct StubPools {
    n_cities: usize,
    // bucket = type * n_cities + city
    buckets: Vec<Vec<u32>>,
    slot: Vec<u32>,
    bucket_of: Vec<u32>,
    counts: [Vec<f64>; 2],
}

impl StubPools {
    fn new(owner: &[u32], pop: &AgentPopulation) -> Self {
        let n_cities = pop.n_cities();
        let mut buckets = vec![Vec::new(); 2 * n_cities];
        let mut slot = vec![0u32; owner.len()];
        let mut bucket_of = vec![0u32; owner.len()];
        for (s, &node) in owner.iter().enumerate() {
            let node = node as usize;
            let b = type_index(pop.adopter_type(node)) * n_cities + pop.city_of(node);
            slot[s] = buckets[b].len() as u32;
            bucket_of[s] = b as u32;
            buckets[b].push(s as u32);
        }
        let counts = [0, 1].map(|t| {
            (0..n_cities)
                .map(|c| buckets[t * n_cities + c].len() as f64)
                .collect()
        });
        StubPools {
            n_cities,
            buckets,
            slot,
            bucket_of,
            counts,
        }
    }

    fn remove(&mut self, stub: u32) {
        let b = self.bucket_of[stub as usize] as usize;
        let i = self.slot[stub as usize] as usize;
        let bucket = &mut self.buckets[b];
        let last = *bucket.last().expect("stub present in its bucket");
        bucket.swap_remove(i);
        if last != stub {
            self.slot[last as usize] = i as u32;
        }
        self.counts[b / self.n_cities][b % self.n_cities] -= 1.0;
    }

    fn open_in(&self, pool: Pool, city: usize) -> f64 {
        match pool {
            Pool::Early => self.counts[0][city],
            Pool::Regular => self.counts[1][city],
            Pool::Any => self.counts[0][city] + self.counts[1][city],
        }
    }

    /// Draws an open stub from `pool`, choosing its city with probability
    /// proportional to `weights[c] * open(c)` (uniform weights if `None`).
    fn draw<R: Rng>(&self, pool: Pool, weights: Option<&[f64]>, rng: &mut R) -> Option<u32> {
        let total: f64 = match weights {
            Some(w) => (0..self.n_cities).map(|c| w[c] * self.open_in(pool, c)).sum(),
            None => (0..self.n_cities).map(|c| self.open_in(pool, c)).sum(),
        };
        if total <= 0.0 {
            return None;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for c in 0..self.n_cities {
            let m = self.open_in(pool, c);
            if m == 0.0 {
                continue;
            }
            acc += weights.map_or(m, |w| w[c] * m);
            chosen = Some(c);
            if acc > target {
                break;
            }
        }
        let city = chosen?;
        let (ne, nr) = (self.counts[0][city] as usize, self.counts[1][city] as usize);
        let stub = match pool {
            Pool::Early => self.buckets[city][rng.random_range(0..ne)],
            Pool::Regular => self.buckets[self.n_cities + city][rng.random_range(0..nr)],
            Pool::Any => {
                let k = rng.random_range(0..ne + nr);
                if k < ne {
                    self.buckets[city][k]
                } else {
                    self.buckets[self.n_cities + city][k - ne]
                }
            }
        };
        Some(stub)
    }
}

fn type_index(t: AdopterType) -> usize {
    match t {
        AdopterType::Early => 0,
        AdopterType::Regular => 1,
    }
}

/// Generates a network over `pop` (placed on `cities`).
pub fn build_network(pop: &AgentPopulation, cities: &CityTable, p: &NetGenParams) -> Result<Network> {
    p.validate()?;
    if pop.n_cities() != cities.len() {
        return Err(Error::Validation(format!(
            "population spans {} cities, table has {}",
            pop.n_cities(),
            cities.len()
        )));
    }
    let n = pop.len();
    let mut degree_rng = rng::stream(p.rng_seed, rng::tags::DEGREES);
    let degrees = sample_degrees(n, p.mean_degree, &mut degree_rng);

    let mut owner = Vec::with_capacity(degrees.iter().map(|&d| d as usize).sum());
    for (i, &d) in degrees.iter().enumerate() {
        owner.extend(std::iter::repeat_n(i as u32, d as usize));
    }
    let total_stubs = owner.len();
    let early_stubs: usize = (0..n)
        .filter(|&i| pop.is_early(i))
        .map(|i| degrees[i] as usize)
        .sum();
    let early_nodes_with_stubs = (0..n).filter(|&i| pop.is_early(i) && degrees[i] > 0).count();
    let failure = |reason: String, discarded: usize| GenerationFailure {
        reason,
        total_stubs,
        discarded_stubs: discarded,
        early_nodes_with_stubs,
    };

    let f = if total_stubs == 0 {
        0.0
    } else {
        early_stubs as f64 / total_stubs as f64
    };
    let mixing = Mixing::new(p.homophily_target, f);

    let l = cities.len();
    let weights: Option<Vec<f64>> = p.geo_biased.then(|| {
        cities
            .distance_matrix()
            .into_iter()
            .map(|r| floored_kernel_weight(r, p.gamma, p.nu_km, p.r_min_km))
            .collect()
    });

    let mut rng: SimRng = rng::stream(p.rng_seed, rng::tags::MATCHING);
    let mut order: Vec<u32> = (0..total_stubs as u32).collect();
    order.shuffle(&mut rng);

    let mut pools = StubPools::new(&owner, pop);
    let mut open = vec![true; total_stubs];
    let mut adj: Vec<Vec<u32>> = degrees.iter().map(|&d| Vec::with_capacity(d as usize)).collect();
    let mut discarded = 0usize;
    let mut early_discarded = 0usize;

    for &focal in &order {
        if !open[focal as usize] {
            continue;
        }
        open[focal as usize] = false;
        pools.remove(focal);

        let i = owner[focal as usize] as usize;
        let pool = mixing.pick(pop.is_early(i), &mut rng);
        let row = weights.as_ref().map(|w| {
            let c = pop.city_of(i);
            &w[c * l..(c + 1) * l]
        });

        let mut matched = false;
        for _ in 0..MAX_REDRAWS {
            let Some(partner) = pools.draw(pool, row, &mut rng) else {
                break;
            };
            let j = owner[partner as usize] as usize;
            if j == i || adj[i].contains(&(j as u32)) {
                continue;
            }
            open[partner as usize] = false;
            pools.remove(partner);
            adj[i].push(j as u32);
            adj[j].push(i as u32);
            matched = true;
            break;
        }
        if !matched {
            discarded += 1;
            if pop.is_early(i) {
                early_discarded += 1;
            }
        }
    }

    // A couple of leftover stubs per pool is parity, not infeasibility.
    if early_discarded as f64 > DISCARD_BUDGET * early_stubs as f64 + 2.0 {
        return Err(failure(
            format!(
                "{early_discarded} of {early_stubs} early stubs found no partner at homophily_target {}",
                p.homophily_target
            ),
            discarded,
        )
        .into());
    }
    if discarded as f64 > DISCARD_BUDGET * total_stubs as f64 {
        return Err(failure(
            format!(
                "more than {:.0}% of stubs could not be matched",
                DISCARD_BUDGET * 100.0
            ),
            discarded,
        )
        .into());
    }

    let net = Network::from_adjacency(pop.clone(), adj, Some(p.clone()), discarded);
    debug_assert_eq!(net.check_invariants(), Ok(()));
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{place_agents, City, SyntheticGeography};

    fn uniform_geo(n_cities: u32, per_city: u32, frac: f64) -> CityTable {
        SyntheticGeography::uniform(n_cities, per_city, frac, 3)
            .build()
            .unwrap()
    }

    #[test]
    fn degree_sum_is_even() {
        let mut rng = rng::stream(1, 0);
        for n in 1..50 {
            let d = sample_degrees(n, 3.3, &mut rng);
            assert_eq!(d.iter().map(|&x| x as u64).sum::<u64>() % 2, 0);
        }
    }

    #[test]
    fn tiny_mean_gives_zeros() {
        let mut rng = rng::stream(2, 0);
        let d = sample_degrees(10, 1e-9, &mut rng);
        assert!(d.iter().all(|&x| x == 0));
    }

    #[test]
    fn poisson_sample_mean() {
        let mut rng = rng::stream(3, 0);
        let d = sample_degrees(100_000, 7.0, &mut rng);
        let mean = d.iter().map(|&x| x as f64).sum::<f64>() / d.len() as f64;
        assert!((6.95..=7.05).contains(&mean), "{mean}");
    }

    #[test]
    fn from_edges_rejects_bad_input() {
        let pop = AgentPopulation::from_parts(vec![0; 3], vec![AdopterType::Regular; 3], 1).unwrap();
        assert!(Network::from_edges(pop.clone(), &[(0, 0)]).is_err());
        assert!(Network::from_edges(pop.clone(), &[(0, 1), (1, 0)]).is_err());
        assert!(Network::from_edges(pop.clone(), &[(0, 3)]).is_err());
        let g = Network::from_edges(pop, &[(2, 0), (1, 0)]).unwrap();
        assert_eq!(g.neighbors(0), &[1, 2]);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn built_network_is_simple_and_deterministic() {
        let cities = uniform_geo(40, 50, 0.1);
        let pop = place_agents(&cities, 1);
        for geo in [false, true] {
            let p = NetGenParams {
                geo_biased: geo,
                homophily_target: 0.5,
                rng_seed: 9,
                ..Default::default()
            };
            let a = build_network(&pop, &cities, &p).unwrap();
            a.check_invariants().unwrap();
            let b = build_network(&pop, &cities, &p).unwrap();
            assert_eq!(a, b);
            let c = build_network(&pop, &cities, &NetGenParams { rng_seed: 10, ..p }).unwrap();
            assert_ne!(a.edges().collect::<Vec<_>>(), c.edges().collect::<Vec<_>>());
        }
    }

    #[test]
    fn edge_count_near_n_k_over_two() {
        let cities = uniform_geo(100, 100, 0.1);
        let pop = place_agents(&cities, 1);
        for geo in [false, true] {
            let p = NetGenParams {
                geo_biased: geo,
                rng_seed: 4,
                ..Default::default()
            };
            let g = build_network(&pop, &cities, &p).unwrap();
            let e = g.edge_count() as f64;
            assert!((e - 35_000.0).abs() <= 0.02 * 35_000.0, "geo={geo} edges={e}");
            assert!((g.mean_degree() - 7.0).abs() <= 0.14);
        }
    }

    #[test]
    fn random_mixing_at_early_fraction() {
        let cities = uniform_geo(100, 100, 0.1);
        let pop = place_agents(&cities, 1);
        let p = NetGenParams {
            geo_biased: false,
            homophily_target: 0.1,
            rng_seed: 21,
            ..Default::default()
        };
        let h = measure_homophily(&build_network(&pop, &cities, &p).unwrap()).unwrap();
        assert!((h - 0.1).abs() <= 0.02, "{h}");
    }

    #[test]
    fn measured_homophily_tracks_target() {
        let cities = uniform_geo(50, 200, 0.1);
        let pop = place_agents(&cities, 1);
        for target in [0.0, 0.05, 0.3, 0.6, 0.9] {
            let p = NetGenParams {
                geo_biased: false,
                homophily_target: target,
                rng_seed: 5,
                ..Default::default()
            };
            let h = measure_homophily(&build_network(&pop, &cities, &p).unwrap()).unwrap();
            assert!((h - target).abs() < 0.03, "target {target} measured {h}");
        }
    }

    #[test]
    fn full_homophily_segregates_types() {
        let cities = uniform_geo(30, 200, 0.25);
        let pop = place_agents(&cities, 2);
        for geo in [false, true] {
            let p = NetGenParams {
                geo_biased: geo,
                homophily_target: 1.0,
                rng_seed: 8,
                ..Default::default()
            };
            let g = build_network(&pop, &cities, &p).unwrap();
            for i in (0..g.n()).filter(|&i| pop.is_early(i)) {
                assert!(g.neighbors(i).iter().all(|&j| pop.is_early(j as usize)));
            }
            assert_eq!(measure_homophily(&g).unwrap(), 1.0);
        }
    }

    #[test]
    fn single_early_agent_cannot_be_homophilous() {
        let cities = CityTable::new(vec![City {
            id: 0,
            name: "solo".into(),
            lat: 0.0,
            lon: 0.0,
            n_agents: 200,
            frac_early: 0.005,
        }])
        .unwrap();
        let pop = place_agents(&cities, 1);
        assert_eq!(pop.early_count(), 1);
        let p = NetGenParams {
            homophily_target: 1.0,
            ..Default::default()
        };
        match build_network(&pop, &cities, &p) {
            Err(Error::Generation(g)) => {
                assert_eq!(g.early_nodes_with_stubs, 1);
                assert!(g.total_stubs > 0);
            }
            other => panic!("expected generation failure, got {other:?}"),
        }
    }

    #[test]
    fn geo_bias_keeps_ties_local() {
        let cities = uniform_geo(100, 100, 0.1);
        let pop = place_agents(&cities, 1);
        let local_share = |geo| {
            let p = NetGenParams {
                geo_biased: geo,
                rng_seed: 6,
                ..Default::default()
            };
            let g = build_network(&pop, &cities, &p).unwrap();
            let local = g.edges().filter(|&(a, b)| pop.city_of(a as usize) == pop.city_of(b as usize)).count();
            local as f64 / g.edge_count() as f64
        };
        let (biased, unbiased) = (local_share(true), local_share(false));
        assert!(unbiased < 0.05, "{unbiased}");
        assert!(biased > 0.3, "{biased}");
    }

    #[test]
    fn edge_list_export() {
        let cities = uniform_geo(5, 20, 0.2);
        let pop = place_agents(&cities, 1);
        let g = build_network(&pop, &cities, &NetGenParams::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("edges.csv");
        g.write_edge_list(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("src,dst"));
        let rows: Vec<(u32, u32)> = lines
            .map(|l| {
                let (a, b) = l.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect();
        assert_eq!(rows.len(), g.edge_count());
        assert!(rows.iter().all(|&(a, b)| a < b));
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
        assert_eq!(meta["params"]["gamma"], 1.2);
        assert_eq!(meta["rng_seed"], 1);
    }
}
