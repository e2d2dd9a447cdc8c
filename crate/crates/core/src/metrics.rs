//! Packet accounting, delivery ratio, end-to-end delay and multi-seed
//! aggregation.
//!
//! A packet counts as sent as soon as the application offers it, even if it
//! later falls out of a full route-request queue. Delay runs from the
//! application send time to reception at the final destination, so waiting
//! for a route is part of it. Runs with nothing sent or nothing delivered
//! report 0 and raise a flag instead of leaving a field undefined.

use crate::error::AggregateError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PacketFate {
    InFlight,
    Delivered { delay: f64 },
    DroppedQueue,
    DroppedNoRoute,
    DroppedLink,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsAccumulator {
    pub packets_sent: u64,
    pub packets_received: u64,
    pub delay_sum: f64,
    /// Indexed by packet uid, which the engine hands out densely from zero.
    send_times: Vec<f64>,
    fates: Vec<PacketFate>,
}

impl MetricsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records an application packet; returns its uid.
    pub fn offer(&mut self, time: f64) -> u64 {
        let uid = self.send_times.len() as u64;
        self.send_times.push(time);
        self.fates.push(PacketFate::InFlight);
        self.packets_sent += 1;
        uid
    }

    /// Marks `uid` delivered at `time`; returns the delay, or `None` if the
    /// packet was not in flight.
    pub fn deliver(&mut self, uid: u64, time: f64) -> Option<f64> {
        let idx = uid as usize;
        if self.fates.get(idx) != Some(&PacketFate::InFlight) {
            return None;
        }
        let delay = time - self.send_times[idx];
        self.fates[idx] = PacketFate::Delivered { delay };
        self.packets_received += 1;
        self.delay_sum += delay;
        Some(delay)
    }

    /// Marks `uid` as dropped with the given terminal fate.
    pub fn drop_packet(&mut self, uid: u64, fate: PacketFate) {
        debug_assert!(!matches!(fate, PacketFate::InFlight | PacketFate::Delivered { .. }));
        if let Some(f) = self.fates.get_mut(uid as usize) {
            if *f == PacketFate::InFlight {
                *f = fate;
            }
        }
    }

    pub fn fate(&self, uid: u64) -> Option<PacketFate> {
        self.fates.get(uid as usize).copied()
    }

    pub fn send_time(&self, uid: u64) -> Option<f64> {
        self.send_times.get(uid as usize).copied()
    }

    pub fn fates(&self) -> &[PacketFate] {
        &self.fates
    }

    /// Counts per terminal state: (delivered, queue, no route, link, in flight).
    pub fn fate_counts(&self) -> FateCounts {
        let mut c = FateCounts::default();
        for f in &self.fates {
            match f {
                PacketFate::Delivered { .. } => c.delivered += 1,
                PacketFate::DroppedQueue => c.dropped_queue += 1,
                PacketFate::DroppedNoRoute => c.dropped_no_route += 1,
                PacketFate::DroppedLink => c.dropped_link += 1,
                PacketFate::InFlight => c.in_flight += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FateCounts {
    pub delivered: u64,
    pub dropped_queue: u64,
    pub dropped_no_route: u64,
    pub dropped_link: u64,
    pub in_flight: u64,
}

impl FateCounts {
    pub fn total(&self) -> u64 {
        self.delivered + self.dropped_queue + self.dropped_no_route + self.dropped_link + self.in_flight
    }
}

/// Delivered over sent; 0 when nothing was sent.
pub fn pdr(acc: &MetricsAccumulator) -> f64 {
    if acc.packets_sent == 0 {
        0.0
    } else {
        acc.packets_received as f64 / acc.packets_sent as f64
    }
}

/// Mean delay of delivered packets; 0 when nothing was delivered.
pub fn avg_delay(acc: &MetricsAccumulator) -> f64 {
    if acc.packets_received == 0 {
        0.0
    } else {
        acc.delay_sum / acc.packets_received as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub scenario: String,
    pub node_count: usize,
    pub seed: u64,
    pub pdr: f64,
    pub avg_delay: f64,
    pub packets_sent: u64,
    pub packets_received: u64,
    /// Frame losses at receivers caused by overlapping transmissions.
    pub collisions: u64,
    /// Route discoveries started, retries included.
    pub discoveries: u64,
    pub no_traffic: bool,
    pub no_delivery: bool,
    pub fates: FateCounts,
    pub rreq_forwards: u64,
    pub protocol_errors: u64,
    pub transmissions: u64,
    pub events: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Sample standard deviation; 0 for a single value.
    pub stddev: f64,
}

impl Stats {
    /// Sorts before summing, so the result does not depend on input order.
    pub fn of(values: &[f64]) -> Stats {
        if values.is_empty() {
            return Stats::default();
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let stddev = if v.len() > 1 {
            let mut sq: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
            sq.sort_by(f64::total_cmp);
            (sq.iter().sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Stats {
            mean,
            min: v[0],
            max: v[v.len() - 1],
            stddev,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary {
    pub scenario: String,
    pub node_count: usize,
    pub runs: usize,
    pub pdr: Stats,
    pub avg_delay: Stats,
    pub packets_sent: u64,
    pub packets_received: u64,
    pub collisions: u64,
    pub discoveries: u64,
}

/// Mean (and spread) of PDR and delay over runs of one scenario and node
/// count.
pub fn aggregate(reports: &[RunReport]) -> Result<ScenarioSummary, AggregateError> {
    let first = reports.first().ok_or(AggregateError::Empty)?;
    if let Some(odd) = reports
        .iter()
        .find(|r| r.scenario != first.scenario || r.node_count != first.node_count)
    {
        return Err(AggregateError::Mixed(format!(
            "{}/{} vs {}/{}",
            first.scenario, first.node_count, odd.scenario, odd.node_count
        )));
    }
    let pdrs: Vec<f64> = reports.iter().map(|r| r.pdr).collect();
    let delays: Vec<f64> = reports.iter().map(|r| r.avg_delay).collect();
    Ok(ScenarioSummary {
        scenario: first.scenario.clone(),
        node_count: first.node_count,
        runs: reports.len(),
        pdr: Stats::of(&pdrs),
        avg_delay: Stats::of(&delays),
        packets_sent: reports.iter().map(|r| r.packets_sent).sum(),
        packets_received: reports.iter().map(|r| r.packets_received).sum(),
        collisions: reports.iter().map(|r| r.collisions).sum(),
        discoveries: reports.iter().map(|r| r.discoveries).sum(),
    })
}
