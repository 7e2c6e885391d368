//! Weekly SI contagion with word-of-mouth and media channels.
//!
//! All infections in week `t` are decided from the week-`t` state. A
//! susceptible agent with `m` infected neighbors stays susceptible with
//! probability `(1 - beta)^m * (1 - alpha * M)`, where `beta` depends on its
//! adopter type. New adopters get adoption week `t + 1` and start
//! transmitting from the following step.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{AgentPopulation, CityTable};
use crate::media::{media_prob, MediaMode, MediaParams, MediaSeries, MediaSource};
use crate::metrics::ReplicationEnsemble;
use crate::netgen::{build_network, NetGenParams, Network};
use crate::rng::{self, AgentCoins};

/// Adoption week of agents that never adopt.
const NEVER: u16 = u16::MAX;

/// Longest supported horizon in weeks.
pub const MAX_HORIZON: usize = (u16::MAX - 1) as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CitySeed {
    pub city_id: u32,
    pub count: usize,
}

/// Who is infected at week 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedSpec {
    /// Per-city counts, filled from each city's Early agents first.
    Cities(Vec<CitySeed>),
    /// A share of the whole population, chosen uniformly.
    Fraction(f64),
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::Cities(vec![CitySeed {
            city_id: 0,
            count: 10,
        }])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimParams {
    pub beta_r: f64,
    /// beta_e / beta_r.
    pub ratio_r: f64,
    pub horizon: usize,
    pub seeding: SeedSpec,
    pub media: MediaParams,
    pub rng_seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            beta_r: 0.05,
            ratio_r: 1.0,
            horizon: 180,
            seeding: SeedSpec::default(),
            media: MediaParams::default(),
            rng_seed: 1,
        }
    }
}

impl SimParams {
    pub fn beta_e(&self) -> f64 {
        self.ratio_r * self.beta_r
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(0.0..=1.0).contains(&self.beta_r) {
            return bad(format!("beta_r must be in [0, 1], got {}", self.beta_r));
        }
        if !(self.ratio_r >= 1.0) {
            return bad(format!("ratio_r must be >= 1, got {}", self.ratio_r));
        }
        if self.beta_e() > 1.0 {
            return bad(format!(
                "beta_e = ratio_r * beta_r = {} exceeds 1",
                self.beta_e()
            ));
        }
        if self.horizon == 0 || self.horizon > MAX_HORIZON {
            return bad(format!(
                "horizon must be in [1, {MAX_HORIZON}], got {}",
                self.horizon
            ));
        }
        if let SeedSpec::Fraction(f) = self.seeding {
            if !(0.0..=1.0).contains(&f) {
                return bad(format!("seed fraction must be in [0, 1], got {f}"));
            }
        }
        self.media.validate()
    }
}

/// Mutable epidemic state of one run.
#[derive(Debug, Clone)]
pub struct SimState {
    week: u32,
    adoption_week: Vec<u16>,
    infected_count: usize,
    susceptible_count: usize,
    media_volume: f64,
    /// Infected-neighbor count per agent.
    exposure: Vec<u32>,
    /// Susceptible agents with at least one infected neighbor.
    frontier: Vec<u32>,
}

impl SimState {
    pub fn new(n: usize) -> Self {
        SimState {
            week: 0,
            adoption_week: vec![NEVER; n],
            infected_count: 0,
            susceptible_count: n,
            media_volume: 0.0,
            exposure: vec![0; n],
            frontier: Vec::new(),
        }
    }

    pub fn week(&self) -> u32 {
        self.week
    }

    pub fn n(&self) -> usize {
        self.adoption_week.len()
    }

    pub fn infected_count(&self) -> usize {
        self.infected_count
    }

    pub fn susceptible_count(&self) -> usize {
        self.susceptible_count
    }

    pub fn media_volume(&self) -> f64 {
        self.media_volume
    }

    #[inline]
    pub fn is_infected(&self, agent: usize) -> bool {
        self.adoption_week[agent] != NEVER
    }

    pub fn adoption_week(&self, agent: usize) -> Option<u32> {
        let w = self.adoption_week[agent];
        (w != NEVER).then_some(w as u32)
    }

    pub fn infected_neighbors(&self, agent: usize) -> u32 {
        self.exposure[agent]
    }

    fn infect(&mut self, agent: usize, week: u32, net: &Network) {
        debug_assert!(!self.is_infected(agent));
        self.adoption_week[agent] = week as u16;
        self.infected_count += 1;
        self.susceptible_count -= 1;
        for &j in net.neighbors(agent) {
            let j = j as usize;
            self.exposure[j] += 1;
            if self.exposure[j] == 1 && !self.is_infected(j) {
                self.frontier.push(j as u32);
            }
        }
    }

    fn check_conservation(&self) {
        assert_eq!(
            self.infected_count + self.susceptible_count,
            self.n(),
            "S + I != N at week {}",
            self.week
        );
        debug_assert_eq!(
            self.adoption_week.iter().filter(|&&w| w != NEVER).count(),
            self.infected_count
        );
    }
}

/// Infects the week-0 adopters described by `spec`.
pub fn seed_infection<R: Rng + ?Sized>(
    state: &mut SimState,
    net: &Network,
    spec: &SeedSpec,
    rng: &mut R,
) -> Result<()> {
    let pop = net.population();
    let week = state.week;
    match spec {
        SeedSpec::Fraction(f) => {
            let k = ((f * pop.len() as f64) + 0.5 + 1e-9).floor() as usize;
            let mut pool: Vec<u32> = (0..pop.len() as u32)
                .filter(|&i| !state.is_infected(i as usize))
                .collect();
            let k = k.min(pool.len());
            let (chosen, _) = pool.partial_shuffle(rng, k);
            let mut chosen = chosen.to_vec();
            chosen.sort_unstable();
            for i in chosen {
                state.infect(i as usize, week, net);
            }
        }
        SeedSpec::Cities(seeds) => {
            for seed in seeds {
                let city = pop.city_index(seed.city_id).ok_or_else(|| {
                    Error::Validation(format!("seed city {} does not exist", seed.city_id))
                })?;
                let (mut early, mut regular): (Vec<u32>, Vec<u32>) = pop
                    .city_range(city)
                    .filter(|&i| !state.is_infected(i as usize))
                    .partition(|&i| pop.is_early(i as usize));
                if seed.count > early.len() + regular.len() {
                    return Err(Error::SeedOversubscribed {
                        city_id: seed.city_id,
                        requested: seed.count,
                        available: early.len() + regular.len(),
                    });
                }
                early.shuffle(rng);
                regular.shuffle(rng);
                for &i in early.iter().chain(regular.iter()).take(seed.count) {
                    state.infect(i as usize, week, net);
                }
            }
        }
    }
    state.frontier.retain(|&i| state.adoption_week[i as usize] == NEVER);
    state.check_conservation();
    Ok(())
}

/// Per-type transmission: `stay[t][m] = (1 - beta_t)^m`.
#[derive(Debug, Clone)]
pub struct Transmission {
    stay_early: Vec<f64>,
    stay_regular: Vec<f64>,
}

impl Transmission {
    pub fn new(beta_e: f64, beta_r: f64, max_degree: usize) -> Self {
        let table = |b: f64| (0..=max_degree).map(|m| (1.0 - b).powi(m as i32)).collect();
        Transmission {
            stay_early: table(beta_e),
            stay_regular: table(beta_r),
        }
    }

    pub fn for_network(net: &Network, p: &SimParams) -> Self {
        let max_degree = (0..net.n()).map(|i| net.degree(i)).max().unwrap_or(0);
        Self::new(p.beta_e(), p.beta_r, max_degree)
    }

    #[inline]
    fn stay(&self, early: bool, m: u32) -> f64 {
        if early {
            self.stay_early[m as usize]
        } else {
            self.stay_regular[m as usize]
        }
    }
}

/// Advances one week under media volume `volume`. Returns the agents newly
/// infected, in ascending order.
pub fn step(
    state: &mut SimState,
    net: &Network,
    transmission: &Transmission,
    alpha: f64,
    volume: f64,
    coins: &AgentCoins,
) -> Vec<u32> {
    let pop = net.population();
    let week = state.week;
    let media_stay = 1.0 - media_prob(alpha, volume);
    let infect_prob = |i: usize| {
        let stay = transmission.stay(pop.is_early(i), state.exposure[i]) * media_stay;
        1.0 - stay
    };

    let mut new: Vec<u32> = if media_stay < 1.0 {
        (0..state.n())
            .filter(|&i| !state.is_infected(i) && coins.uniform(week, i as u32) < infect_prob(i))
            .map(|i| i as u32)
            .collect()
    } else {
        state
            .frontier
            .iter()
            .copied()
            .filter(|&i| coins.uniform(week, i) < infect_prob(i as usize))
            .collect()
    };
    new.sort_unstable();

    for &i in &new {
        state.infect(i as usize, week + 1, net);
    }
    state.frontier.retain(|&i| state.adoption_week[i as usize] == NEVER);
    state.week += 1;
    state.media_volume = volume;
    state.check_conservation();
    new
}

/// Output of one run. Week 0 holds the seeds; weeks `1..=horizon` hold the
/// adoptions produced by each step.
#[derive(Debug, Clone, PartialEq)]
pub struct AdoptionTrace {
    pub n_agents: usize,
    pub city_ids: Vec<u32>,
    /// New adopters per week, length `horizon + 1`.
    pub new_adopters: Vec<u64>,
    /// Row-major `cities x (horizon + 1)`.
    pub new_by_city_week: Vec<u32>,
    /// Media volume acting in the step that produced each week's adopters
    /// (0 for week 0).
    pub media: Vec<f64>,
}

impl AdoptionTrace {
    pub fn weeks(&self) -> usize {
        self.new_adopters.len()
    }

    pub fn horizon(&self) -> usize {
        self.weeks() - 1
    }

    pub fn n_cities(&self) -> usize {
        self.city_ids.len()
    }

    pub fn cumulative(&self) -> Vec<u64> {
        self.new_adopters
            .iter()
            .scan(0u64, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    }

    pub fn final_adopters(&self) -> u64 {
        self.new_adopters.iter().sum()
    }

    pub fn city_new(&self, city: usize) -> &[u32] {
        let w = self.weeks();
        &self.new_by_city_week[city * w..(city + 1) * w]
    }

    pub fn city_cumulative(&self, city: usize) -> Vec<u64> {
        self.city_new(city)
            .iter()
            .scan(0u64, |acc, &x| {
                *acc += x as u64;
                Some(*acc)
            })
            .collect()
    }

    /// `(city index, adoption week)` for every adopter, city-major.
    pub fn adopters(&self) -> Vec<(usize, u32)> {
        let mut out = Vec::with_capacity(self.final_adopters() as usize);
        for c in 0..self.n_cities() {
            for (w, &k) in self.city_new(c).iter().enumerate() {
                out.extend(std::iter::repeat_n((c, w as u32), k as usize));
            }
        }
        out
    }

    /// Checks that city rows sum to the global series, the cumulative count
    /// stays within N and media stays in [0, 1].
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let w = self.weeks();
        if self.new_by_city_week.len() != w * self.n_cities() || self.media.len() != w {
            return Err("series lengths disagree".into());
        }
        for t in 0..w {
            let col: u64 = (0..self.n_cities()).map(|c| self.city_new(c)[t] as u64).sum();
            if col != self.new_adopters[t] {
                return Err(format!("week {t}: city sum {col} != global {}", self.new_adopters[t]));
            }
        }
        if self.final_adopters() > self.n_agents as u64 {
            return Err("more adopters than agents".into());
        }
        if self.media.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err("media volume outside [0, 1]".into());
        }
        if self.media.first().is_some_and(|&m| m != 0.0) {
            return Err("week 0 media volume must be 0".into());
        }
        Ok(())
    }
}

/// Runs one replication: seeding, then `horizon` weekly steps.
pub fn run(net: &Network, p: &SimParams, media_input: Option<&MediaSeries>) -> Result<AdoptionTrace> {
    run_with_state(net, p, media_input).map(|(trace, _)| trace)
}

/// [`run`], also returning the final state (per-agent adoption weeks).
pub fn run_with_state(
    net: &Network,
    p: &SimParams,
    media_input: Option<&MediaSeries>,
) -> Result<(AdoptionTrace, SimState)> {
    p.validate()?;
    if let (MediaMode::Exogenous, Some(series)) = (p.media.mode, media_input) {
        if series.len() < p.horizon {
            return Err(Error::Validation(format!(
                "media series covers {} weeks, horizon is {}",
                series.len(),
                p.horizon
            )));
        }
    }
    let pop = net.population();
    let n = net.n();
    let l = pop.n_cities();
    let weeks = p.horizon + 1;

    let mut seed_rng = rng::stream(p.rng_seed, rng::tags::SEEDING);
    let mut media = MediaSource::new(&p.media, media_input, rng::stream(p.rng_seed, rng::tags::SHOCKS))?;
    let coins = AgentCoins::new(p.rng_seed);
    let transmission = Transmission::for_network(net, p);

    let mut state = SimState::new(n);
    seed_infection(&mut state, net, &p.seeding, &mut seed_rng)?;

    let mut new_adopters = vec![0u64; weeks];
    let mut new_by_city_week = vec![0u32; l * weeks];
    let mut media_series = vec![0.0; weeks];
    new_adopters[0] = state.infected_count() as u64;
    for i in 0..n {
        if state.is_infected(i) {
            new_by_city_week[pop.city_of(i) * weeks] += 1;
        }
    }

    let mut previous = 0usize;
    for t in 0..p.horizon {
        let volume = media.volume(t, previous, n)?;
        previous = state.infected_count();
        let new = step(&mut state, net, &transmission, p.media.alpha, volume, &coins);
        new_adopters[t + 1] = new.len() as u64;
        media_series[t + 1] = volume;
        for &i in &new {
            new_by_city_week[pop.city_of(i as usize) * weeks + t + 1] += 1;
        }
    }

    let trace = AdoptionTrace {
        n_agents: n,
        city_ids: pop.city_ids().to_vec(),
        new_adopters,
        new_by_city_week,
        media: media_series,
    };
    Ok((trace, state))
}

/// Where each replication gets its network.
#[derive(Debug, Clone, Copy)]
pub enum NetworkSource<'a> {
    /// One network shared read-only by every run.
    Fixed(&'a Network),
    /// A fresh network per run, seeded `netgen.rng_seed + run_index`.
    Generate {
        pop: &'a AgentPopulation,
        cities: &'a CityTable,
        netgen: &'a NetGenParams,
    },
}

/// `n_runs` independent runs with seeds `p.rng_seed + run_index`, executed
/// on the current rayon pool. Failed runs are counted, not fatal.
pub fn run_replications(
    source: NetworkSource<'_>,
    p: &SimParams,
    media_input: Option<&MediaSeries>,
    n_runs: usize,
) -> ReplicationEnsemble {
    let results: Vec<Result<AdoptionTrace>> = (0..n_runs)
        .into_par_iter()
        .map(|k| {
            let params = SimParams {
                rng_seed: rng::derive(p.rng_seed, k as u64),
                ..p.clone()
            };
            match source {
                NetworkSource::Fixed(net) => run(net, &params, media_input),
                NetworkSource::Generate { pop, cities, netgen } => {
                    let gen = NetGenParams {
                        rng_seed: rng::derive(netgen.rng_seed, k as u64),
                        ..netgen.clone()
                    };
                    let net = build_network(pop, cities, &gen)?;
                    run(&net, &params, media_input)
                }
            }
        })
        .collect();

    let mut ensemble = ReplicationEnsemble::default();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(trace) => ensemble.traces.push(trace),
            Err(e) => ensemble.failures.push((k, e.to_string())),
        }
    }
    ensemble
}
