//! Helpers shared by the integration tests: independent oracles and
//! static-topology runs.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use larsim::engine::{LogEntry, RunOutcome};
use larsim::mobility::{quantize, Trajectory};
use larsim::phy::Transmission;
use larsim::routing::{RoutingEvent, ZoneMode};
use larsim::traffic::CbrFlow;
use larsim::{distance, run_with, Position, RequestZone, RunConfig, RunOptions, ScenarioConfig, ScenarioId};
use rand::Rng;

pub const RANGE: f64 = 250.0;

/// Breadth-first reachability over the unit-disk graph; only `origin` and
/// nodes passing `relay` may pass a packet on.
pub fn bfs_reaches(positions: &[Position], origin: usize, target: usize, relay: impl Fn(usize) -> bool) -> bool {
    let mut seen = vec![false; positions.len()];
    seen[origin] = true;
    let mut queue = VecDeque::from([origin]);
    while let Some(u) = queue.pop_front() {
        if u == target {
            return true;
        }
        if u != origin && !relay(u) {
            continue;
        }
        for v in 0..positions.len() {
            if !seen[v] && distance(positions[u], positions[v]) <= RANGE {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    false
}

/// Brute-force reception set of `tx`: every other node within range of the
/// sender, minus those that were transmitting themselves or heard another
/// overlapping frame.
pub fn channel_oracle(tx: &Transmission, schedule: &[Transmission], positions: &[Position]) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for r in 0..positions.len() {
        if r == tx.sender || distance(positions[tx.sender], positions[r]) > RANGE {
            continue;
        }
        let clash = schedule.iter().any(|o| {
            o.id != tx.id
                && o.start < tx.end
                && tx.start < o.end
                && (o.sender == r || distance(positions[o.sender], positions[r]) <= RANGE)
        });
        if !clash {
            out.insert(r);
        }
    }
    out
}

/// Uniform positions in a `side` square, on the micrometre lattice that
/// trajectories store so they survive the round trip unchanged.
pub fn random_positions<R: Rng>(rng: &mut R, n: usize, side: f64) -> Vec<Position> {
    (0..n)
        .map(|_| Position::new(quantize(rng.gen::<f64>() * side), quantize(rng.gen::<f64>() * side)))
        .collect()
}

/// Config for runs over fixed positions in the default 1000 m square.
pub fn static_config(n: usize, sim_time: f64) -> RunConfig {
    let mut cfg = ScenarioConfig::preset(ScenarioId::Custom).run_config(n);
    cfg.sim_time = sim_time;
    cfg.traffic.warmup = 0.0;
    cfg
}

pub fn run_static(cfg: &RunConfig, positions: &[Position], flows: Vec<CbrFlow>, seed: u64) -> RunOutcome {
    let mut cfg = cfg.clone();
    cfg.traffic.flows = flows.len();
    run_with(
        &cfg,
        seed,
        RunOptions {
            event_log: true,
            trajectory: Some(Trajectory::stationary(positions, cfg.sim_time, 1.0)),
            flows: Some(flows),
        },
    )
    .expect("static run")
}

/// A flow that offers exactly one packet at `at`.
pub fn one_packet(source: usize, destination: usize, at: f64) -> CbrFlow {
    CbrFlow {
        source,
        destination,
        packet_size: 512,
        interval: 1.0,
        start: at,
        end: at + 0.5,
    }
}

pub struct Discovery {
    pub zone: RequestZone,
    pub route: Option<Vec<usize>>,
}

/// One discovery from `origin` to `destination` over static positions with
/// contention and fallback off. `assumed_speed` sets the speed in every
/// node's initial location records, and so the expected-zone radius.
pub fn single_discovery(
    positions: &[Position],
    origin: usize,
    destination: usize,
    assumed_speed: f64,
    zone_mode: ZoneMode,
) -> Discovery {
    let mut cfg = static_config(positions.len(), 4.0);
    cfg.contention = false;
    cfg.routing.fallback = false;
    cfg.routing.zone_mode = zone_mode;
    cfg.mobility.mean_speed = assumed_speed;
    cfg.mobility.min_speed = 0.0;
    let out = run_static(&cfg, positions, vec![one_packet(origin, destination, 1.0)], 1);
    let mut zone = None;
    let mut route = None;
    for rec in &out.log {
        if rec.node != origin {
            continue;
        }
        match &rec.entry {
            LogEntry::Routing(RoutingEvent::DiscoveryStarted { zone: z, .. }) if zone.is_none() => zone = Some(*z),
            LogEntry::Routing(RoutingEvent::RouteInstalled { destination: d, route: r }) if *d == destination => {
                route.get_or_insert_with(|| r.clone());
            }
            _ => {}
        }
    }
    Discovery {
        zone: zone.expect("a discovery was started"),
        route,
    }
}

/// Loop-free, starts and ends at the endpoints, every hop within range.
pub fn route_is_valid(route: &[usize], positions: &[Position], origin: usize, destination: usize) -> bool {
    let distinct: BTreeSet<usize> = route.iter().copied().collect();
    distinct.len() == route.len()
        && route.first() == Some(&origin)
        && route.last() == Some(&destination)
        && route.windows(2).all(|w| distance(positions[w[0]], positions[w[1]]) <= RANGE)
}
