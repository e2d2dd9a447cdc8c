//! Unit-disk radio channel with an interval-overlap collision model.
//!
//! Two nodes hear each other iff they are at most `range` meters apart. A
//! frame occupies the air from `start` to `end = start + bits / bitrate` and
//! reaches a receiver `distance * propagation_delay` seconds after `end`.
//!
//! A frame is lost at receiver `r` when some other frame overlaps it in time
//! (strictly: sharing only an endpoint is not an overlap) and that other
//! frame's sender is within range of `r` or is `r` itself. There is no
//! capture: an overlap destroys both frames at every receiver that hears
//! both senders. Ranges are evaluated with positions at each frame's start.

use rand::Rng;

use crate::geometry::{distance, Position};
use crate::mobility::Trajectory;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Meters.
    pub range: f64,
    /// Bits per second.
    pub bitrate: f64,
    /// Seconds per meter.
    pub propagation_delay: f64,
    pub max_unicast_retries: u32,
    /// Unicast retries wait a uniform draw from `[0, backoff_window]` seconds.
    pub backoff_window: f64,
    /// Broadcasts are delayed by a uniform draw from `[0, broadcast_jitter]`.
    pub broadcast_jitter: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            range: 250.0,
            bitrate: 2e6,
            propagation_delay: 3.336e-9,
            max_unicast_retries: 3,
            backoff_window: 5e-3,
            broadcast_jitter: 10e-3,
        }
    }
}

impl RadioParams {
    /// Serialization time of `bits` at the configured bitrate.
    pub fn airtime(&self, bits: u64) -> f64 {
        bits as f64 / self.bitrate
    }
}

/// Where nodes are at a given time.
pub trait PositionSource {
    fn position(&self, node: NodeId, t: f64) -> Position;
    fn node_count(&self) -> usize;
}

impl PositionSource for [Position] {
    fn position(&self, node: NodeId, _t: f64) -> Position {
        self[node]
    }

    fn node_count(&self) -> usize {
        self.len()
    }
}

impl PositionSource for Vec<Position> {
    fn position(&self, node: NodeId, _t: f64) -> Position {
        self[node]
    }

    fn node_count(&self) -> usize {
        self.len()
    }
}

impl PositionSource for Trajectory {
    fn position(&self, node: NodeId, t: f64) -> Position {
        self.position_at(node, t)
    }

    fn node_count(&self) -> usize {
        Trajectory::node_count(self)
    }
}

/// One frame on the air.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    pub id: u64,
    pub sender: NodeId,
    pub start: f64,
    pub end: f64,
    pub unicast_target: Option<NodeId>,
}

impl Transmission {
    pub fn new(id: u64, sender: NodeId, start: f64, bits: u64, params: &RadioParams, unicast_target: Option<NodeId>) -> Self {
        Self {
            id,
            sender,
            start,
            end: start + params.airtime(bits),
            unicast_target,
        }
    }

    pub fn overlaps(&self, other: &Transmission) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reception {
    pub tx_id: u64,
    pub receiver: NodeId,
    pub time: f64,
}

/// Receivers a frame reached and receivers where it was destroyed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameOutcome {
    pub receptions: Vec<Reception>,
    pub collided: Vec<NodeId>,
}

/// All other nodes within `range` of `node`.
pub fn neighbors(node: NodeId, positions: &[Position], params: &RadioParams) -> Vec<NodeId> {
    let here = positions[node];
    positions
        .iter()
        .enumerate()
        .filter(|&(other, p)| other != node && distance(here, *p) <= params.range)
        .map(|(other, _)| other)
        .collect()
}

fn in_range<P: PositionSource + ?Sized>(tx: &Transmission, receiver: NodeId, positions: &P, params: &RadioParams) -> Option<f64> {
    within(positions.position(tx.sender, tx.start), positions.position(receiver, tx.start), params.range)
}

/// Distance from `a` to `b` if it is at most `range`; the box test skips the
/// square root for most far pairs.
fn within(a: Position, b: Position, range: f64) -> Option<f64> {
    if (a.x - b.x).abs() > range || (a.y - b.y).abs() > range {
        return None;
    }
    let d = distance(a, b);
    (d <= range).then_some(d)
}

/// Whether a frame in `schedule` destroys `tx` at `receiver`.
pub fn collides_at<P: PositionSource + ?Sized>(
    tx: &Transmission,
    receiver: NodeId,
    schedule: &[Transmission],
    positions: &P,
    params: &RadioParams,
) -> bool {
    schedule.iter().any(|other| {
        other.id != tx.id
            && tx.overlaps(other)
            && (other.sender == receiver || in_range(other, receiver, positions, params).is_some())
    })
}

/// Evaluates a frame at every node in range of its sender. With
/// `contention` off, overlaps are ignored.
pub fn deliver_frame<P: PositionSource + ?Sized>(
    tx: &Transmission,
    schedule: &[Transmission],
    positions: &P,
    params: &RadioParams,
    contention: bool,
) -> FrameOutcome {
    let mut out = FrameOutcome::default();
    let here = positions.position(tx.sender, tx.start);
    let interferers: Vec<(&Transmission, Position)> = if contention {
        schedule
            .iter()
            .filter(|o| o.id != tx.id && tx.overlaps(o))
            .map(|o| (o, positions.position(o.sender, o.start)))
            .collect()
    } else {
        Vec::new()
    };
    for receiver in 0..positions.node_count() {
        if receiver == tx.sender {
            continue;
        }
        let p = positions.position(receiver, tx.start);
        let Some(d) = within(here, p, params.range) else {
            continue;
        };
        let collided = interferers.iter().any(|&(o, from)| {
            o.sender == receiver || {
                let at = if o.start == tx.start { p } else { positions.position(receiver, o.start) };
                within(from, at, params.range).is_some()
            }
        });
        if collided {
            out.collided.push(receiver);
        } else {
            out.receptions.push(Reception {
                tx_id: tx.id,
                receiver,
                time: tx.end + d * params.propagation_delay,
            });
        }
    }
    out
}

/// Receptions of a broadcast frame given every other frame in `schedule`.
pub fn broadcast<P: PositionSource + ?Sized>(
    tx: &Transmission,
    schedule: &[Transmission],
    positions: &P,
    params: &RadioParams,
) -> Vec<Reception> {
    deliver_frame(tx, schedule, positions, params, true).receptions
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttemptOutcome {
    Delivered(Reception),
    Collided,
    OutOfRange,
}

/// One unicast attempt, judged at the target only.
pub fn unicast_attempt<P: PositionSource + ?Sized>(
    tx: &Transmission,
    schedule: &[Transmission],
    positions: &P,
    params: &RadioParams,
    contention: bool,
) -> AttemptOutcome {
    let target = tx.unicast_target.expect("unicast frame without a target");
    let Some(d) = in_range(tx, target, positions, params) else {
        return AttemptOutcome::OutOfRange;
    };
    if contention && collides_at(tx, target, schedule, positions, params) {
        AttemptOutcome::Collided
    } else {
        AttemptOutcome::Delivered(Reception {
            tx_id: tx.id,
            receiver: target,
            time: tx.end + d * params.propagation_delay,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnicastResult {
    /// Delivered on attempt number `attempt` (1-based).
    Delivered { attempt: u32, reception: Reception },
    /// The target was out of range when an attempt was about to start.
    LinkFailure { attempt: u32 },
    /// Every attempt collided.
    RetriesExhausted { attempts: u32 },
}

/// Unicast with bounded retransmission against a fixed schedule of other
/// frames. Each retry starts a uniform backoff after the previous attempt
/// ends.
pub fn unicast<P: PositionSource + ?Sized, R: Rng + ?Sized>(
    tx: &Transmission,
    schedule: &[Transmission],
    positions: &P,
    params: &RadioParams,
    rng: &mut R,
) -> UnicastResult {
    let duration = tx.end - tx.start;
    let mut attempt_tx = *tx;
    let attempts = params.max_unicast_retries + 1;
    for attempt in 1..=attempts {
        match unicast_attempt(&attempt_tx, schedule, positions, params, true) {
            AttemptOutcome::Delivered(reception) => return UnicastResult::Delivered { attempt, reception },
            AttemptOutcome::OutOfRange => return UnicastResult::LinkFailure { attempt },
            AttemptOutcome::Collided => {
                let start = attempt_tx.end + rng.gen::<f64>() * params.backoff_window;
                attempt_tx.start = start;
                attempt_tx.end = start + duration;
            }
        }
    }
    UnicastResult::RetriesExhausted { attempts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> RadioParams {
        RadioParams::default()
    }

    #[test]
    fn range_is_boundary_inclusive() {
        let p = params();
        let pos = vec![Position::new(0.0, 0.0), Position::new(250.0, 0.0)];
        assert_eq!(neighbors(0, &pos, &p), vec![1]);
        assert_eq!(neighbors(1, &pos, &p), vec![0]);
        let pos = vec![Position::new(0.0, 0.0), Position::new(250.1, 0.0)];
        assert!(neighbors(0, &pos, &p).is_empty());
        assert!(neighbors(1, &pos, &p).is_empty());
    }

    #[test]
    fn serialization_of_a_512_byte_packet() {
        assert_eq!(params().airtime(512 * 8), 2.048e-3);
    }

    #[test]
    fn lone_broadcast_reaches_every_neighbor() {
        let p = params();
        let pos = vec![
            Position::new(0.0, 0.0),
            Position::new(100.0, 0.0),
            Position::new(0.0, 200.0),
            Position::new(150.0, 150.0),
            Position::new(600.0, 0.0),
        ];
        let tx = Transmission::new(1, 0, 0.0, 512 * 8, &p, None);
        let rx = broadcast(&tx, &[tx], &pos, &p);
        let got: Vec<(NodeId, f64)> = rx.iter().map(|r| (r.receiver, r.time)).collect();
        let d3 = 150f64.hypot(150.0);
        assert_eq!(
            got,
            vec![
                (1, tx.end + 100.0 * p.propagation_delay),
                (2, tx.end + 200.0 * p.propagation_delay),
                (3, tx.end + d3 * p.propagation_delay),
            ]
        );
        assert!(rx.iter().all(|r| r.time >= tx.end));
    }

    #[test]
    fn simultaneous_senders_collide_at_a_shared_receiver() {
        let p = params();
        let pos = vec![Position::new(0.0, 0.0), Position::new(200.0, 0.0), Position::new(400.0, 0.0)];
        let a = Transmission::new(1, 0, 0.0, 1000, &p, None);
        let b = Transmission::new(2, 2, 0.0, 1000, &p, None);
        let schedule = [a, b];
        assert!(broadcast(&a, &schedule, &pos, &p).is_empty());
        assert!(broadcast(&b, &schedule, &pos, &p).is_empty());
    }

    #[test]
    fn back_to_back_frames_do_not_overlap() {
        let p = params();
        let pos = vec![Position::new(0.0, 0.0), Position::new(200.0, 0.0), Position::new(400.0, 0.0)];
        let a = Transmission::new(1, 0, 0.0, 1000, &p, None);
        let b = Transmission::new(2, 2, a.end, 1000, &p, None);
        let schedule = [a, b];
        assert_eq!(broadcast(&a, &schedule, &pos, &p).len(), 1);
    }

    #[test]
    fn unicast_examples() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pos = vec![Position::new(0.0, 0.0), Position::new(200.0, 0.0), Position::new(300.0, 0.0)];
        let clear = Transmission::new(1, 0, 0.0, 4096, &p, Some(1));
        assert!(matches!(
            unicast(&clear, &[clear], &pos, &p, &mut rng),
            UnicastResult::Delivered { attempt: 1, .. }
        ));
        let far = Transmission::new(2, 0, 0.0, 4096, &p, Some(2));
        assert_eq!(unicast(&far, &[far], &pos, &p, &mut rng), UnicastResult::LinkFailure { attempt: 1 });
    }

    #[test]
    fn unicast_recovers_on_the_second_attempt() {
        // node 2 jams node 1 for exactly the first attempt, then the channel is idle
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pos = vec![Position::new(0.0, 0.0), Position::new(200.0, 0.0), Position::new(400.0, 0.0)];
        let tx = Transmission::new(1, 0, 0.0, 4096, &p, Some(1));
        let jam = Transmission {
            id: 2,
            sender: 2,
            start: 0.0,
            end: tx.end,
            unicast_target: None,
        };
        match unicast(&tx, &[tx, jam], &pos, &p, &mut rng) {
            UnicastResult::Delivered { attempt, reception } => {
                assert_eq!(attempt, 2);
                assert!(reception.time > tx.end + tx.end - tx.start);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unicast_gives_up_after_the_retry_budget() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pos = vec![Position::new(0.0, 0.0), Position::new(200.0, 0.0), Position::new(400.0, 0.0)];
        let tx = Transmission::new(1, 0, 0.0, 4096, &p, Some(1));
        let jam = Transmission {
            id: 2,
            sender: 2,
            start: 0.0,
            end: 10.0,
            unicast_target: None,
        };
        assert_eq!(
            unicast(&tx, &[tx, jam], &pos, &p, &mut rng),
            UnicastResult::RetriesExhausted { attempts: 4 }
        );
    }

    #[test]
    fn receiver_that_is_transmitting_loses_the_frame() {
        let p = params();
        let pos = vec![Position::new(0.0, 0.0), Position::new(200.0, 0.0)];
        let a = Transmission::new(1, 0, 0.0, 1000, &p, None);
        let b = Transmission::new(2, 1, 0.0001, 1000, &p, None);
        let out = deliver_frame(&a, &[a, b], &pos, &p, true);
        assert_eq!(out.collided, vec![1]);
        let out = deliver_frame(&a, &[a, b], &pos, &p, false);
        assert_eq!(out.receptions.len(), 1);
    }
}
