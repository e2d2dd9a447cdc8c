//! Discrete-event engine for one simulation run.
//!
//! Events are popped in `(time, sequence)` order, the sequence being the
//! insertion counter, so simultaneous events run in the order they were
//! scheduled and a run is a pure function of its configuration and seed.
//!
//! Vehicle positions come from a [`Trajectory`] sampled once per mobility
//! update interval and interpolated in between. Each node has a single
//! transmitter: frames queue in FIFO order and a unicast frame that collides
//! holds the transmitter through its backoff.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::{Error, Result, TraceError, TrafficError};
use crate::geometry::{distance, LocationRecord};
use crate::metrics::{avg_delay, pdr, MetricsAccumulator, PacketFate, RunReport};
use crate::mobility::Trajectory;
use crate::packet::{DataPacket, Packet};
use crate::phy::{deliver_frame, unicast_attempt, AttemptOutcome, Transmission};
use crate::routing::{Action, DropReason, Lar1Node, LocationTable, NodeContext, RoutingEvent};
use crate::traffic::{make_flows, CbrFlow};
use crate::{rng, NodeId};

/// Min-queue of events ordered by `(time, insertion sequence)`.
#[derive(Debug)]
pub struct EventQueue<E> {
    heap: BinaryHeap<Scheduled<E>>,
    next_seq: u64,
    now: f64,
}

#[derive(Debug)]
struct Scheduled<E> {
    time: f64,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Scheduled<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Scheduled<E> {}

impl<E> PartialOrd for Scheduled<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Scheduled<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now: 0.0,
        }
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Schedules `event` at `time`, which must not lie in the past.
    pub fn push(&mut self, time: f64, event: E) {
        assert!(
            time >= self.now,
            "event scheduled in the past: {time} < {}",
            self.now
        );
        self.heap.push(Scheduled {
            time,
            seq: self.next_seq,
            event,
        });
        self.next_seq += 1;
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|s| s.time)
    }

    pub fn pop(&mut self) -> Option<(f64, E)> {
        let s = self.heap.pop()?;
        self.now = s.time;
        Some((s.time, s.event))
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// One line of the optional event log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub time: f64,
    pub node: NodeId,
    pub entry: LogEntry,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LogEntry {
    AppSend { uid: u64, destination: NodeId },
    Deliver { uid: u64, delay: f64 },
    Drop { uid: u64, reason: DropReason },
    Transmit { tx: u64, kind: &'static str, bytes: usize, target: Option<NodeId> },
    Collision { tx: u64, receiver: NodeId },
    Routing(RoutingEvent),
}

impl fmt::Display for LogRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9} {} ", self.time, self.node)?;
        match &self.entry {
            LogEntry::AppSend { uid, destination } => write!(f, "SEND uid={uid} dst={destination}"),
            LogEntry::Deliver { uid, delay } => write!(f, "DELIVER uid={uid} delay={delay:.9}"),
            LogEntry::Drop { uid, reason } => write!(f, "DROP uid={uid} reason={reason:?}"),
            LogEntry::Transmit { tx, kind, bytes, target } => match target {
                Some(t) => write!(f, "TX id={tx} {kind} bytes={bytes} to={t}"),
                None => write!(f, "TX id={tx} {kind} bytes={bytes} broadcast"),
            },
            LogEntry::Collision { tx, receiver } => write!(f, "COLLISION id={tx} at={receiver}"),
            LogEntry::Routing(e) => match e {
                RoutingEvent::DiscoveryStarted {
                    destination,
                    request_id,
                    attempt,
                    zone,
                } => write!(f, "DISCOVER dst={destination} req={request_id} attempt={attempt} zone={zone}"),
                RoutingEvent::RreqForwarded {
                    origin,
                    request_id,
                    zone,
                    position,
                } => write!(f, "RREQ_FWD origin={origin} req={request_id} zone={zone} at={position}"),
                RoutingEvent::RreqDropped {
                    origin,
                    request_id,
                    reason,
                } => write!(f, "RREQ_DROP origin={origin} req={request_id} reason={reason:?}"),
                RoutingEvent::ReplySent {
                    origin,
                    request_id,
                    route,
                } => write!(f, "RREP origin={origin} req={request_id} route={route:?}"),
                RoutingEvent::RouteInstalled { destination, route } => {
                    write!(f, "ROUTE dst={destination} route={route:?}")
                }
                RoutingEvent::RoutePurged { destination } => write!(f, "PURGE dst={destination}"),
                RoutingEvent::DiscoveryGaveUp { destination, dropped } => {
                    write!(f, "GIVE_UP dst={destination} dropped={dropped}")
                }
                RoutingEvent::ControlLost { kind } => write!(f, "CONTROL_LOST {kind}"),
                RoutingEvent::ProtocolError { kind } => write!(f, "PROTOCOL_ERROR {kind}"),
            },
        }
    }
}

/// Optional inputs and outputs of a run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Record every event into [`RunOutcome::log`].
    pub event_log: bool,
    /// Replay these positions instead of generating mobility from the seed.
    pub trajectory: Option<Trajectory>,
    /// Use these flows instead of drawing them from the seed.
    pub flows: Option<Vec<CbrFlow>>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub metrics: MetricsAccumulator,
    pub flows: Vec<CbrFlow>,
    pub log: Vec<LogRecord>,
    /// Routes held by each node's cache at the end of the run.
    pub final_routes: Vec<Vec<(NodeId, Vec<NodeId>)>>,
}

impl RunOutcome {
    pub fn log_text(&self) -> String {
        let mut s = String::new();
        for r in &self.log {
            s.push_str(&r.to_string());
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone)]
struct Frame {
    packet: Packet,
    target: Option<NodeId>,
    attempts: u32,
}

#[derive(Debug)]
enum Event {
    AppSend { flow: usize, seq: u64 },
    MacEnqueue { node: NodeId, frame: Frame },
    TxEnd { node: NodeId },
    BackoffDone { node: NodeId },
    Reception { receiver: NodeId, packet: Packet },
    Timer { node: NodeId, destination: NodeId, serial: u64 },
}

#[derive(Debug, Default)]
struct Mac {
    queue: VecDeque<Frame>,
    busy: bool,
    current: Option<(Transmission, Frame)>,
    retry: Option<Frame>,
}

struct Sim<'a> {
    cfg: &'a RunConfig,
    trajectory: Trajectory,
    flows: Vec<CbrFlow>,
    nodes: Vec<Lar1Node>,
    macs: Vec<Mac>,
    mac_rngs: Vec<ChaCha8Rng>,
    queue: EventQueue<Event>,
    channel: Vec<Transmission>,
    /// Longest airtime of any frame so far; bounds how far back an overlap can reach.
    max_airtime: f64,
    next_tx: u64,
    metrics: MetricsAccumulator,
    report: RunReport,
    log: Option<Vec<LogRecord>>,
}

/// Simulates one run and returns its report.
pub fn run(cfg: &RunConfig, seed: u64) -> Result<RunReport> {
    Ok(run_with(cfg, seed, RunOptions::default())?.report)
}

/// Simulates one run with optional replayed mobility, fixed flows and an
/// event log.
pub fn run_with(cfg: &RunConfig, seed: u64, options: RunOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    let trajectory = match options.trajectory {
        Some(t) => {
            if t.node_count() != cfg.node_count {
                return Err(TraceError::NodeCountMismatch {
                    expected: cfg.node_count,
                    found: t.node_count(),
                }
                .into());
            }
            t
        }
        None => Trajectory::generate(cfg.node_count, &cfg.grid, &cfg.mobility, cfg.sim_time, seed)?,
    };
    let flows = match options.flows {
        Some(f) => {
            for flow in &f {
                flow.validate()?;
                if flow.source >= cfg.node_count || flow.destination >= cfg.node_count {
                    return Err(TrafficError::InvalidFlow(format!(
                        "flow {}->{} names a node outside 0..{}",
                        flow.source, flow.destination, cfg.node_count
                    ))
                    .into());
                }
            }
            f
        }
        None => make_flows(
            cfg.traffic.flows,
            cfg.node_count,
            &cfg.traffic,
            cfg.sim_time,
            &mut rng::traffic_stream(seed),
        )?,
    };

    let seed_records: Vec<LocationRecord> = (0..cfg.node_count)
        .map(|n| LocationRecord::new(n, trajectory.position_at(n, 0.0), 0.0, cfg.mobility.mean_speed))
        .collect();
    let table = LocationTable::seeded(seed_records);
    let nodes = (0..cfg.node_count)
        .map(|id| Lar1Node::new(id, cfg.routing, table.clone()))
        .collect();

    let mut sim = Sim {
        cfg,
        trajectory,
        flows,
        nodes,
        macs: (0..cfg.node_count).map(|_| Mac::default()).collect(),
        mac_rngs: (0..cfg.node_count).map(|n| rng::mac_stream(seed, n)).collect(),
        queue: EventQueue::new(),
        channel: Vec::new(),
        max_airtime: 0.0,
        next_tx: 0,
        metrics: MetricsAccumulator::new(),
        report: RunReport {
            scenario: cfg.scenario.to_string(),
            node_count: cfg.node_count,
            seed,
            ..RunReport::default()
        },
        log: options.event_log.then(Vec::new),
    };
    sim.run();
    let outcome = sim.finish();
    check_invariants(&outcome.report)?;
    Ok(outcome)
}

/// End-of-run consistency: every offered packet is in exactly one state and
/// no node saw a packet that could not have been addressed to it.
pub fn check_invariants(r: &RunReport) -> Result<()> {
    let fail = |m: String| Err(Error::Invariant(format!("{} nodes={} seed={}: {m}", r.scenario, r.node_count, r.seed)));
    if r.fates.total() != r.packets_sent {
        return fail(format!("{} packet fates for {} sent", r.fates.total(), r.packets_sent));
    }
    if r.fates.delivered != r.packets_received {
        return fail(format!("{} delivered fates for {} received", r.fates.delivered, r.packets_received));
    }
    if r.protocol_errors != 0 {
        return fail(format!("{} protocol errors", r.protocol_errors));
    }
    if !(0.0..=1.0).contains(&r.pdr) || !(r.avg_delay >= 0.0) {
        return fail(format!("pdr {} delay {}", r.pdr, r.avg_delay));
    }
    Ok(())
}

impl Sim<'_> {
    fn now(&self) -> f64 {
        self.queue.now()
    }

    fn ctx(&self, node: NodeId) -> NodeContext {
        let now = self.now();
        NodeContext {
            id: node,
            now,
            position: self.trajectory.position_at(node, now),
            speed: self.trajectory.speed_at(node, now),
        }
    }

    fn record(&mut self, node: NodeId, entry: LogEntry) {
        if let Some(log) = self.log.as_mut() {
            log.push(LogRecord {
                time: self.queue.now(),
                node,
                entry,
            });
        }
    }

    fn run(&mut self) {
        for (flow, f) in self.flows.iter().enumerate() {
            if f.packet_count() > 0 && f.start <= self.cfg.sim_time {
                self.queue.push(f.start, Event::AppSend { flow, seq: 0 });
            }
        }
        while let Some(t) = self.queue.peek_time() {
            if t > self.cfg.sim_time {
                break;
            }
            let (_, event) = self.queue.pop().expect("peeked");
            self.report.events += 1;
            self.handle(event);
        }
    }

    fn handle(&mut self, event: Event) {
        match event {
            Event::AppSend { flow, seq } => self.app_send(flow, seq),
            Event::MacEnqueue { node, frame } => self.mac_enqueue(node, frame),
            Event::TxEnd { node } => self.tx_end(node),
            Event::BackoffDone { node } => {
                let mac = &mut self.macs[node];
                if let Some(frame) = mac.retry.take() {
                    mac.queue.push_front(frame);
                }
                mac.busy = false;
                self.mac_start(node);
            }
            Event::Reception { receiver, packet } => {
                let ctx = self.ctx(receiver);
                let actions = self.nodes[receiver].receive(&ctx, packet);
                self.apply(receiver, actions);
            }
            Event::Timer {
                node,
                destination,
                serial,
            } => {
                let ctx = self.ctx(node);
                let actions = self.nodes[node].on_discovery_timeout(&ctx, destination, serial);
                self.apply(node, actions);
            }
        }
    }

    fn app_send(&mut self, flow: usize, seq: u64) {
        let f = self.flows[flow];
        let now = self.now();
        let uid = self.metrics.offer(now);
        self.record(
            f.source,
            LogEntry::AppSend {
                uid,
                destination: f.destination,
            },
        );
        let packet = DataPacket {
            uid,
            flow,
            seq,
            origin: f.source,
            destination: f.destination,
            size_bytes: f.packet_size,
            sent_at: now,
            route: Vec::new(),
            hop: 0,
        };
        let ctx = self.ctx(f.source);
        let actions = self.nodes[f.source].send_data(&ctx, packet);
        self.apply(f.source, actions);
        if seq + 1 < f.packet_count() {
            let next = f.send_time(seq + 1);
            if next <= self.cfg.sim_time {
                self.queue.push(next, Event::AppSend { flow, seq: seq + 1 });
            }
        }
    }

    fn apply(&mut self, node: NodeId, actions: Vec<Action>) {
        let now = self.now();
        for action in actions {
            match action {
                Action::Broadcast { packet, jitter } => {
                    let frame = Frame {
                        packet,
                        target: None,
                        attempts: 0,
                    };
                    let window = self.cfg.radio.broadcast_jitter;
                    if jitter && window > 0.0 {
                        let delay = self.mac_rngs[node].gen::<f64>() * window;
                        self.queue.push(now + delay, Event::MacEnqueue { node, frame });
                    } else {
                        self.mac_enqueue(node, frame);
                    }
                }
                Action::Unicast { next_hop, packet } => {
                    self.mac_enqueue(
                        node,
                        Frame {
                            packet,
                            target: Some(next_hop),
                            attempts: 0,
                        },
                    );
                }
                Action::Deliver(data) => {
                    if let Some(delay) = self.metrics.deliver(data.uid, now) {
                        self.record(node, LogEntry::Deliver { uid: data.uid, delay });
                    }
                }
                Action::ArmTimer {
                    destination,
                    serial,
                    deadline,
                } => self.queue.push(
                    deadline,
                    Event::Timer {
                        node,
                        destination,
                        serial,
                    },
                ),
                Action::Dropped { packet, reason } => {
                    let fate = match reason {
                        DropReason::QueueOverflow => PacketFate::DroppedQueue,
                        DropReason::NoRoute => PacketFate::DroppedNoRoute,
                        DropReason::LinkFailure | DropReason::Misrouted => PacketFate::DroppedLink,
                    };
                    self.metrics.drop_packet(packet.uid, fate);
                    self.record(node, LogEntry::Drop { uid: packet.uid, reason });
                }
                Action::Event(e) => {
                    match &e {
                        RoutingEvent::DiscoveryStarted { .. } => self.report.discoveries += 1,
                        RoutingEvent::RreqForwarded { .. } => self.report.rreq_forwards += 1,
                        RoutingEvent::ProtocolError { .. } => self.report.protocol_errors += 1,
                        _ => {}
                    }
                    self.record(node, LogEntry::Routing(e));
                }
            }
        }
    }

    fn mac_enqueue(&mut self, node: NodeId, frame: Frame) {
        self.macs[node].queue.push_back(frame);
        if !self.macs[node].busy {
            self.mac_start(node);
        }
    }

    /// Starts the next queued frame if the transmitter is idle. Unicast
    /// frames whose target is out of range fail on the spot.
    fn mac_start(&mut self, node: NodeId) {
        if self.macs[node].busy {
            return;
        }
        // hold the transmitter while failure handling enqueues more frames
        self.macs[node].busy = true;
        let now = self.now();
        while let Some(frame) = self.macs[node].queue.pop_front() {
            if let Some(target) = frame.target {
                let d = distance(
                    self.trajectory.position_at(node, now),
                    self.trajectory.position_at(target, now),
                );
                if d > self.cfg.radio.range {
                    self.link_failure(node, target, frame.packet);
                    continue;
                }
            }
            let bytes = frame.packet.size_bytes();
            let tx = Transmission::new(self.next_tx, node, now, frame.packet.bits(), &self.cfg.radio, frame.target);
            self.next_tx += 1;
            self.max_airtime = self.max_airtime.max(tx.end - tx.start);
            self.report.transmissions += 1;
            self.record(
                node,
                LogEntry::Transmit {
                    tx: tx.id,
                    kind: frame.packet.kind(),
                    bytes,
                    target: frame.target,
                },
            );
            self.channel.push(tx);
            self.queue.push(tx.end, Event::TxEnd { node });
            self.macs[node].current = Some((tx, frame));
            return;
        }
        self.macs[node].busy = false;
    }

    fn link_failure(&mut self, node: NodeId, target: NodeId, packet: Packet) {
        let ctx = self.ctx(node);
        let actions = self.nodes[node].on_link_failure(&ctx, target, packet);
        self.apply(node, actions);
    }

    fn tx_end(&mut self, node: NodeId) {
        let now = self.now();
        let (tx, mut frame) = self.macs[node].current.take().expect("transmission in progress");
        // every frame still on the air started after `horizon`, so frames
        // that ended by then cannot overlap anything again
        let horizon = now - self.max_airtime;
        self.channel.retain(|o| o.end > horizon || o.id == tx.id);
        let overlapping: Vec<Transmission> = self
            .channel
            .iter()
            .filter(|o| o.id != tx.id && o.overlaps(&tx))
            .copied()
            .collect();
        let contention = self.cfg.contention;

        match frame.target {
            None => {
                let outcome = deliver_frame(&tx, &overlapping, &self.trajectory, &self.cfg.radio, contention);
                self.report.collisions += outcome.collided.len() as u64;
                for receiver in outcome.collided {
                    self.record(node, LogEntry::Collision { tx: tx.id, receiver });
                }
                for r in outcome.receptions {
                    self.queue.push(
                        r.time,
                        Event::Reception {
                            receiver: r.receiver,
                            packet: frame.packet.clone(),
                        },
                    );
                }
            }
            Some(target) => match unicast_attempt(&tx, &overlapping, &self.trajectory, &self.cfg.radio, contention) {
                AttemptOutcome::Delivered(r) => {
                    self.queue.push(
                        r.time,
                        Event::Reception {
                            receiver: target,
                            packet: frame.packet,
                        },
                    );
                }
                AttemptOutcome::Collided => {
                    self.report.collisions += 1;
                    self.record(node, LogEntry::Collision { tx: tx.id, receiver: target });
                    frame.attempts += 1;
                    if frame.attempts <= self.cfg.radio.max_unicast_retries {
                        let backoff = self.mac_rngs[node].gen::<f64>() * self.cfg.radio.backoff_window;
                        self.macs[node].retry = Some(frame);
                        self.queue.push(now + backoff, Event::BackoffDone { node });
                        return;
                    }
                    self.macs[node].busy = true;
                    self.link_failure(node, target, frame.packet);
                }
                AttemptOutcome::OutOfRange => {
                    self.macs[node].busy = true;
                    self.link_failure(node, target, frame.packet);
                }
            },
        }
        self.macs[node].busy = false;
        self.mac_start(node);
    }

    fn finish(self) -> RunOutcome {
        let mut report = self.report;
        report.pdr = pdr(&self.metrics);
        report.avg_delay = avg_delay(&self.metrics);
        report.packets_sent = self.metrics.packets_sent;
        report.packets_received = self.metrics.packets_received;
        report.no_traffic = self.metrics.packets_sent == 0;
        report.no_delivery = self.metrics.packets_received == 0;
        report.fates = self.metrics.fate_counts();
        let final_routes = self
            .nodes
            .iter()
            .map(|n| {
                (0..self.cfg.node_count)
                    .filter_map(|d| n.routes().get(d).map(|c| (d, c.route.clone())))
                    .collect()
            })
            .collect();
        RunOutcome {
            report,
            metrics: self.metrics,
            flows: self.flows,
            log: self.log.unwrap_or_default(),
            final_routes,
        }
    }
}
