//! Constant-bit-rate application traffic.

use rand::seq::index;
use rand::Rng;

use crate::error::TrafficError;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficParams {
    pub flows: usize,
    pub packet_size: usize,
    /// Seconds between packets of one flow.
    pub interval: f64,
    /// Flows start this long after t = 0 and stop this long before the end.
    pub warmup: f64,
}

impl Default for TrafficParams {
    fn default() -> Self {
        Self {
            flows: 10,
            packet_size: 512,
            interval: 0.25,
            warmup: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbrFlow {
    pub source: NodeId,
    pub destination: NodeId,
    pub packet_size: usize,
    pub interval: f64,
    pub start: f64,
    pub end: f64,
}

impl CbrFlow {
    pub fn validate(&self) -> Result<(), TrafficError> {
        if self.source == self.destination {
            return Err(TrafficError::InvalidFlow(format!("source and destination are both {}", self.source)));
        }
        if !(self.start < self.end) {
            return Err(TrafficError::InvalidFlow(format!(
                "start {} is not before end {}",
                self.start, self.end
            )));
        }
        if !(self.interval > 0.0) {
            return Err(TrafficError::InvalidFlow(format!("interval {} is not positive", self.interval)));
        }
        Ok(())
    }

    /// `floor((end - start) / interval) + 1`
    pub fn packet_count(&self) -> u64 {
        ((self.end - self.start) / self.interval + 1e-9).floor() as u64 + 1
    }

    /// Send time of packet `seq`; computed from the start rather than by
    /// accumulation so stamps do not drift.
    pub fn send_time(&self, seq: u64) -> f64 {
        self.start + seq as f64 * self.interval
    }
}

/// One application packet offered by a flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbrPacket {
    pub seq: u64,
    pub time: f64,
}

/// Every packet `flow` offers: `start, start + interval, ... <= end`.
pub fn emit(flow: &CbrFlow) -> impl Iterator<Item = CbrPacket> + '_ {
    (0..flow.packet_count()).map(move |seq| CbrPacket {
        seq,
        time: flow.send_time(seq),
    })
}

/// Draws `n_flows` distinct ordered (source, destination) pairs uniformly
/// without replacement.
pub fn make_flows<R: Rng + ?Sized>(
    n_flows: usize,
    node_count: usize,
    params: &TrafficParams,
    sim_time: f64,
    rng: &mut R,
) -> Result<Vec<CbrFlow>, TrafficError> {
    if node_count < 2 {
        return Err(TrafficError::TooFewNodes(node_count));
    }
    let pairs = node_count * (node_count - 1);
    if n_flows > pairs {
        return Err(TrafficError::TooManyFlows {
            requested: n_flows,
            available: pairs,
        });
    }
    let start = params.warmup;
    let end = sim_time - params.warmup;
    let flows: Vec<CbrFlow> = index::sample(rng, pairs, n_flows)
        .into_iter()
        .map(|k| {
            // k enumerates ordered pairs with source != destination
            let source = k / (node_count - 1);
            let mut destination = k % (node_count - 1);
            if destination >= source {
                destination += 1;
            }
            CbrFlow {
                source,
                destination,
                packet_size: params.packet_size,
                interval: params.interval,
                start,
                end,
            }
        })
        .collect();
    for f in &flows {
        f.validate()?;
    }
    Ok(flows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn flow(start: f64, end: f64, interval: f64) -> CbrFlow {
        CbrFlow {
            source: 0,
            destination: 1,
            packet_size: 512,
            interval,
            start,
            end,
        }
    }

    #[test]
    fn packet_counts() {
        assert_eq!(emit(&flow(10.0, 12.0, 0.25)).count(), 9);
        assert_eq!(emit(&flow(10.0, 12.0, 5.0)).count(), 1);
        assert_eq!(flow(10.0, 990.0, 0.25).packet_count(), 3921);
    }

    #[test]
    fn stamps_follow_the_schedule() {
        let f = flow(10.0, 12.0, 0.25);
        let pkts: Vec<CbrPacket> = emit(&f).collect();
        for (k, p) in pkts.iter().enumerate() {
            assert_eq!(p.seq, k as u64);
            assert_eq!(p.time, 10.0 + k as f64 * 0.25);
        }
        assert!(pkts.last().unwrap().time <= f.end);
    }

    #[test]
    fn flows_are_distinct_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let flows = make_flows(10, 25, &TrafficParams::default(), 1000.0, &mut rng).unwrap();
        assert_eq!(flows.len(), 10);
        let pairs: HashSet<(usize, usize)> = flows.iter().map(|f| (f.source, f.destination)).collect();
        assert_eq!(pairs.len(), 10);
        for f in &flows {
            assert_ne!(f.source, f.destination);
            assert!(f.source < 25 && f.destination < 25);
            assert_eq!((f.start, f.end), (10.0, 990.0));
        }
    }

    #[test]
    fn two_nodes_force_the_only_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = make_flows(1, 2, &TrafficParams::default(), 100.0, &mut rng).unwrap()[0];
        assert!((f.source, f.destination) == (0, 1) || (f.source, f.destination) == (1, 0));
        let all = make_flows(2, 2, &TrafficParams::default(), 100.0, &mut rng).unwrap();
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn too_many_flows_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = make_flows(7, 3, &TrafficParams::default(), 100.0, &mut rng).unwrap_err();
        assert_eq!(err, TrafficError::TooManyFlows { requested: 7, available: 6 });
        assert_eq!(
            make_flows(1, 1, &TrafficParams::default(), 100.0, &mut rng).unwrap_err(),
            TrafficError::TooFewNodes(1)
        );
    }

    #[test]
    fn same_seed_same_flows() {
        let a = make_flows(10, 50, &TrafficParams::default(), 300.0, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = make_flows(10, 50, &TrafficParams::default(), 300.0, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }
}
