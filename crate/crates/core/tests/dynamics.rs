use geodiffusion::dynamics::{
    run, run_replications, run_with_state, CitySeed, NetworkSource, SeedSpec, SimParams,
};
use geodiffusion::geo::{place_agents, SyntheticGeography};
use geodiffusion::media::{MediaMode, MediaParams};
use geodiffusion::metrics::{ensemble_bands, ReplicationEnsemble};
use geodiffusion::netgen::{build_network, NetGenParams, Network};
use proptest::prelude::*;

fn network(n_cities: u32, per_city: u32, frac: f64, seed: u64) -> Network {
    let cities = SyntheticGeography::uniform(n_cities, per_city, frac, seed).build().unwrap();
    let pop = place_agents(&cities, seed);
    let p = NetGenParams {
        homophily_target: frac.max(0.1),
        rng_seed: seed,
        ..Default::default()
    };
    build_network(&pop, &cities, &p).unwrap()
}

fn params(beta_r: f64, ratio_r: f64, horizon: usize, seed: u64) -> SimParams {
    SimParams {
        beta_r,
        ratio_r,
        horizon,
        seeding: SeedSpec::Cities(vec![CitySeed { city_id: 0, count: 3 }]),
        media: MediaParams::default(),
        rng_seed: seed,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Same coins, higher rates: every agent adopts no later.
    #[test]
    fn higher_beta_dominates_pathwise(
        seed in 0u64..10_000,
        b1 in 0.0f64..0.15,
        extra in 0.0f64..0.15,
        ratio in 1.0f64..3.0,
    ) {
        let net = network(5, 60, 0.2, 11);
        let lo = params(b1, ratio, 40, seed);
        let hi = params(b1 + extra, ratio, 40, seed);
        let (_, s_lo) = run_with_state(&net, &lo, None).unwrap();
        let (_, s_hi) = run_with_state(&net, &hi, None).unwrap();
        for i in 0..net.n() {
            if let Some(w) = s_lo.adoption_week(i) {
                let w_hi = s_hi.adoption_week(i);
                prop_assert!(w_hi.is_some_and(|x| x <= w), "agent {i}: {w} vs {w_hi:?}");
            }
        }
    }

    #[test]
    fn traces_satisfy_invariants(
        seed in 0u64..10_000,
        beta in 0.0f64..0.3,
        ratio in 1.0f64..3.0,
        alpha in 0.0f64..0.5,
        activation in 0.0f64..0.3,
        shock in 0.0f64..2.0,
        horizon in 1usize..60,
    ) {
        let net = network(6, 50, 0.25, 5);
        let mut p = params(beta, ratio, horizon, seed);
        p.media = MediaParams {
            mode: MediaMode::Endogenous,
            alpha,
            shock_scale: shock,
            activation_fraction: activation,
            exponent: 1.0,
        };
        let (t, state) = run_with_state(&net, &p, None).unwrap();
        prop_assert!(t.check_invariants().is_ok());
        prop_assert_eq!(t.weeks(), horizon + 1);
        prop_assert_eq!(state.infected_count() + state.susceptible_count(), net.n());
        prop_assert_eq!(state.infected_count() as u64, t.final_adopters());
        let cum = t.cumulative();
        prop_assert!(cum.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(t.media.iter().all(|m| (0.0..=1.0).contains(m)));
        prop_assert_eq!(&t, &run(&net, &p, None).unwrap());
    }
}

#[test]
fn different_seeds_differ() {
    let net = network(5, 60, 0.2, 2);
    let a = run(&net, &params(0.2, 1.0, 30, 1), None).unwrap();
    let b = run(&net, &params(0.2, 1.0, 30, 2), None).unwrap();
    assert_ne!(a.new_adopters, b.new_adopters);
}

#[test]
fn replications_are_reproducible_and_indexed() {
    let net = network(5, 60, 0.2, 2);
    let p = params(0.2, 2.0, 30, 100);
    let ens = run_replications(NetworkSource::Fixed(&net), &p, None, 6);
    assert_eq!(ens.len(), 6);
    // Run k uses seed base + k, regardless of scheduling.
    for (k, t) in ens.traces.iter().enumerate() {
        let single = run(&net, &SimParams { rng_seed: 100 + k as u64, ..p.clone() }, None).unwrap();
        assert_eq!(t, &single);
    }
}

#[test]
fn regenerated_networks_follow_seed_rule() {
    let cities = SyntheticGeography::uniform(4, 50, 0.2, 9).build().unwrap();
    let pop = place_agents(&cities, 9);
    let ng = NetGenParams { rng_seed: 40, ..Default::default() };
    let p = params(0.3, 1.0, 20, 70);
    let ens = run_replications(
        NetworkSource::Generate { pop: &pop, cities: &cities, netgen: &ng },
        &p,
        None,
        3,
    );
    for (k, t) in ens.traces.iter().enumerate() {
        let net = build_network(&pop, &cities, &NetGenParams { rng_seed: 40 + k as u64, ..ng.clone() }).unwrap();
        let single = run(&net, &SimParams { rng_seed: 70 + k as u64, ..p.clone() }, None).unwrap();
        assert_eq!(t, &single);
    }
}

#[test]
fn failed_runs_are_counted() {
    let net = network(3, 20, 0.2, 2);
    let mut p = params(0.2, 1.0, 10, 1);
    p.seeding = SeedSpec::Cities(vec![CitySeed { city_id: 0, count: 500 }]);
    let ens = run_replications(NetworkSource::Fixed(&net), &p, None, 4);
    assert_eq!(ens.failure_count(), 4);
    assert!(ens.is_empty());
}

#[test]
fn ensemble_mean_sits_inside_75_band() {
    let net = network(10, 100, 0.0, 4);
    let p = params(0.05, 1.0, 50, 1);
    let ens: ReplicationEnsemble = run_replications(NetworkSource::Fixed(&net), &p, None, 120);
    let bands = ensemble_bands(&ens).unwrap();
    for b in bands {
        assert!(b.lo95 <= b.lo75 && b.lo75 <= b.hi75 && b.hi75 <= b.hi95);
        assert!(b.lo75 <= b.mean && b.mean <= b.hi75, "{b:?}");
    }
}
