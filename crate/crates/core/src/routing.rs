//! LAR scheme 1 route discovery and source-routed forwarding.
//!
//! Each node runs a [`Lar1Node`]. The state machine never touches the
//! channel or the clock itself: every entry point takes a [`NodeContext`]
//! (who am I, when, where, how fast) and returns a list of [`Action`]s for
//! the event engine to carry out.
//!
//! Discovery: the origin computes the request zone from its location record
//! for the destination and broadcasts a route request. A node rebroadcasts
//! the request once, and only if it stands inside the zone at that instant.
//! The destination answers every copy with a reply that walks the reversed
//! path by unicast and carries a fresh location snapshot. A discovery that
//! sees no reply within the timeout is retried once over the whole area;
//! after that its queued packets are dropped.
//!
//! Data packets carry the full route. A relay that cannot reach its next hop
//! drops the packet and sends a route error back to the origin, which then
//! forgets the route. Routes are never aged out otherwise.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::geometry::{expected_zone, request_zone, LocationRecord, Position, RequestZone};
use crate::packet::{is_loop_free, DataPacket, Packet, RouteError, RouteReply, RouteRequest};
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZoneMode {
    /// Request zone from the destination's location record.
    Lar1,
    /// Every discovery floods the whole area.
    Flood,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutingParams {
    /// Seconds to wait for a reply before retrying or giving up.
    pub discovery_timeout: f64,
    pub max_discovery_attempts: u32,
    pub queue_limit: usize,
    /// Retry a timed-out discovery over the whole area. When off, a
    /// discovery gives up after its first attempt.
    pub fallback: bool,
    pub zone_mode: ZoneMode,
    pub area_width: f64,
    pub area_height: f64,
}

impl Default for RoutingParams {
    fn default() -> Self {
        Self {
            discovery_timeout: 1.0,
            max_discovery_attempts: 2,
            queue_limit: 64,
            fallback: true,
            zone_mode: ZoneMode::Lar1,
            area_width: 1000.0,
            area_height: 1000.0,
        }
    }
}

impl RoutingParams {
    fn whole_area(&self) -> RequestZone {
        RequestZone::whole_area(self.area_width, self.area_height)
    }

    fn attempts_allowed(&self) -> u32 {
        if self.fallback {
            self.max_discovery_attempts.max(1)
        } else {
            1
        }
    }
}

/// Caller-side facts about the node handling an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeContext {
    pub id: NodeId,
    pub now: f64,
    pub position: Position,
    pub speed: f64,
}

impl NodeContext {
    fn snapshot(&self) -> LocationRecord {
        LocationRecord::new(self.id, self.position, self.now, self.speed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    QueueOverflow,
    NoRoute,
    LinkFailure,
    Misrouted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RreqDrop {
    Duplicate,
    OutsideZone,
    Malformed,
}

/// Observable routing events, for logs and counters.
#[derive(Debug, Clone, PartialEq)]
pub enum RoutingEvent {
    DiscoveryStarted {
        destination: NodeId,
        request_id: u32,
        attempt: u32,
        zone: RequestZone,
    },
    RreqForwarded {
        origin: NodeId,
        request_id: u32,
        zone: RequestZone,
        position: Position,
    },
    RreqDropped {
        origin: NodeId,
        request_id: u32,
        reason: RreqDrop,
    },
    ReplySent {
        origin: NodeId,
        request_id: u32,
        route: Vec<NodeId>,
    },
    RouteInstalled {
        destination: NodeId,
        route: Vec<NodeId>,
    },
    RoutePurged {
        destination: NodeId,
    },
    DiscoveryGaveUp {
        destination: NodeId,
        dropped: usize,
    },
    ControlLost {
        kind: &'static str,
    },
    ProtocolError {
        kind: &'static str,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Broadcast `packet`; `jitter` asks the MAC to hold it for a random
    /// delay first so that simultaneous floods spread out.
    Broadcast { packet: Packet, jitter: bool },
    Unicast { next_hop: NodeId, packet: Packet },
    /// A data packet reached its destination.
    Deliver(DataPacket),
    /// Call [`Lar1Node::on_discovery_timeout`] at `deadline` with `serial`.
    ArmTimer {
        destination: NodeId,
        serial: u64,
        deadline: f64,
    },
    Dropped { packet: DataPacket, reason: DropReason },
    Event(RoutingEvent),
}

/// Last known location of every other node; timestamps never go backwards.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocationTable {
    records: BTreeMap<NodeId, LocationRecord>,
}

impl LocationTable {
    pub fn seeded(records: impl IntoIterator<Item = LocationRecord>) -> Self {
        let mut t = Self::default();
        for r in records {
            t.update(r);
        }
        t
    }

    pub fn get(&self, node: NodeId) -> Option<&LocationRecord> {
        self.records.get(&node)
    }

    /// Stores `record` unless an equally new or newer one is already held.
    pub fn update(&mut self, record: LocationRecord) -> bool {
        match self.records.get(&record.node_id) {
            Some(old) if old.timestamp >= record.timestamp => false,
            _ => {
                self.records.insert(record.node_id, record);
                true
            }
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CachedRoute {
    pub route: Vec<NodeId>,
    pub established_at: f64,
}

/// One source route per destination.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RouteCache {
    routes: BTreeMap<NodeId, CachedRoute>,
}

impl RouteCache {
    pub fn get(&self, destination: NodeId) -> Option<&CachedRoute> {
        self.routes.get(&destination)
    }

    pub fn insert(&mut self, destination: NodeId, route: Vec<NodeId>, now: f64) {
        debug_assert!(is_loop_free(&route));
        self.routes.insert(
            destination,
            CachedRoute {
                route,
                established_at: now,
            },
        );
    }

    /// Drops the route to `destination` if it uses the link `from -> to`.
    pub fn purge_link(&mut self, destination: NodeId, from: NodeId, to: NodeId) -> bool {
        let uses = self
            .routes
            .get(&destination)
            .is_some_and(|c| c.route.windows(2).any(|w| w[0] == from && w[1] == to));
        if uses {
            self.routes.remove(&destination);
        }
        uses
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryState {
    pub destination: NodeId,
    pub attempt: u32,
    pub deadline: f64,
    pub request_id: u32,
    serial: u64,
    pub queue: VecDeque<DataPacket>,
}

#[derive(Debug, Clone)]
pub struct Lar1Node {
    id: NodeId,
    params: RoutingParams,
    locations: LocationTable,
    routes: RouteCache,
    discoveries: BTreeMap<NodeId, DiscoveryState>,
    seen: BTreeSet<(NodeId, u32)>,
    next_request_id: u32,
    next_serial: u64,
}

impl Lar1Node {
    pub fn new(id: NodeId, params: RoutingParams, locations: LocationTable) -> Self {
        Self {
            id,
            params,
            locations,
            routes: RouteCache::default(),
            discoveries: BTreeMap::new(),
            seen: BTreeSet::new(),
            next_request_id: 0,
            next_serial: 0,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn locations(&self) -> &LocationTable {
        &self.locations
    }

    pub fn routes(&self) -> &RouteCache {
        &self.routes
    }

    pub fn discovery(&self, destination: NodeId) -> Option<&DiscoveryState> {
        self.discoveries.get(&destination)
    }

    /// Packets waiting for a route, over all destinations.
    pub fn queued(&self) -> impl Iterator<Item = &DataPacket> {
        self.discoveries.values().flat_map(|d| d.queue.iter())
    }

    /// Request zone for a discovery towards `destination` made now.
    pub fn zone_for(&self, ctx: &NodeContext, destination: NodeId, attempt: u32) -> RequestZone {
        if attempt > 1 || self.params.zone_mode == ZoneMode::Flood {
            return self.params.whole_area();
        }
        self.locations
            .get(destination)
            .and_then(|rec| expected_zone(rec, ctx.now).ok())
            .map(|ez| request_zone(ctx.position, &ez))
            .unwrap_or_else(|| self.params.whole_area())
    }

    /// Starts (or, for `attempt > 1`, restarts) a discovery for
    /// `destination`, keeping any packets already queued for it.
    pub fn initiate_discovery(&mut self, ctx: &NodeContext, destination: NodeId, attempt: u32) -> Vec<Action> {
        let zone = self.zone_for(ctx, destination, attempt);
        let request_id = self.next_request_id;
        self.next_request_id += 1;
        let serial = self.next_serial;
        self.next_serial += 1;
        self.seen.insert((self.id, request_id));
        let deadline = ctx.now + self.params.discovery_timeout;

        let state = self.discoveries.entry(destination).or_insert_with(|| DiscoveryState {
            destination,
            attempt,
            deadline,
            request_id,
            serial,
            queue: VecDeque::new(),
        });
        state.attempt = attempt;
        state.deadline = deadline;
        state.request_id = request_id;
        state.serial = serial;

        let rreq = RouteRequest {
            origin: self.id,
            destination,
            request_id,
            zone,
            path: vec![self.id],
        };
        vec![
            Action::Event(RoutingEvent::DiscoveryStarted {
                destination,
                request_id,
                attempt,
                zone,
            }),
            Action::Broadcast {
                packet: Packet::Rreq(rreq),
                jitter: true,
            },
            Action::ArmTimer {
                destination,
                serial,
                deadline,
            },
        ]
    }

    /// Hands an application packet to routing at its origin.
    pub fn send_data(&mut self, ctx: &NodeContext, mut packet: DataPacket) -> Vec<Action> {
        let destination = packet.destination;
        if let Some(cached) = self.routes.get(destination) {
            packet.route = cached.route.clone();
            packet.hop = 1;
            let next_hop = packet.route[1];
            return vec![Action::Unicast {
                next_hop,
                packet: Packet::Data(packet),
            }];
        }
        let mut actions = Vec::new();
        if !self.discoveries.contains_key(&destination) {
            actions = self.initiate_discovery(ctx, destination, 1);
        }
        let limit = self.params.queue_limit.max(1);
        let state = self.discoveries.get_mut(&destination).expect("discovery armed above");
        if state.queue.len() >= limit {
            if let Some(oldest) = state.queue.pop_front() {
                actions.push(Action::Dropped {
                    packet: oldest,
                    reason: DropReason::QueueOverflow,
                });
            }
        }
        state.queue.push_back(packet);
        actions
    }

    /// Dispatches a packet received over the channel.
    pub fn receive(&mut self, ctx: &NodeContext, packet: Packet) -> Vec<Action> {
        match packet {
            Packet::Rreq(r) => self.handle_rreq(ctx, r),
            Packet::Rrep(r) => self.handle_rrep(ctx, r),
            Packet::Rerr(r) => self.handle_rerr(ctx, r),
            Packet::Data(d) => self.handle_data(ctx, d),
        }
    }

    pub fn handle_rreq(&mut self, ctx: &NodeContext, mut rreq: RouteRequest) -> Vec<Action> {
        let key = (rreq.origin, rreq.request_id);
        let dropped = |reason| {
            vec![Action::Event(RoutingEvent::RreqDropped {
                origin: rreq.origin,
                request_id: rreq.request_id,
                reason,
            })]
        };
        if !is_loop_free(&rreq.path) || rreq.path.first() != Some(&rreq.origin) {
            let mut a = dropped(RreqDrop::Malformed);
            a.push(Action::Event(RoutingEvent::ProtocolError { kind: "malformed RREQ path" }));
            return a;
        }
        if self.id == rreq.destination {
            self.seen.insert(key);
            let mut route = rreq.path;
            route.push(self.id);
            let hop = route.len() - 2;
            let next_hop = route[hop];
            let reply = RouteReply {
                route: route.clone(),
                destination_location: ctx.snapshot(),
                hop,
            };
            return vec![
                Action::Event(RoutingEvent::ReplySent {
                    origin: rreq.origin,
                    request_id: rreq.request_id,
                    route,
                }),
                Action::Unicast {
                    next_hop,
                    packet: Packet::Rrep(reply),
                },
            ];
        }
        if self.seen.contains(&key) || rreq.path.contains(&self.id) {
            return dropped(RreqDrop::Duplicate);
        }
        if !rreq.zone.contains(ctx.position) {
            return dropped(RreqDrop::OutsideZone);
        }
        self.seen.insert(key);
        rreq.path.push(self.id);
        vec![
            Action::Event(RoutingEvent::RreqForwarded {
                origin: rreq.origin,
                request_id: rreq.request_id,
                zone: rreq.zone,
                position: ctx.position,
            }),
            Action::Broadcast {
                packet: Packet::Rreq(rreq),
                jitter: true,
            },
        ]
    }

    pub fn handle_rrep(&mut self, ctx: &NodeContext, mut rrep: RouteReply) -> Vec<Action> {
        if rrep.route.get(rrep.hop) != Some(&self.id) || !is_loop_free(&rrep.route) || rrep.route.len() < 2 {
            return vec![Action::Event(RoutingEvent::ProtocolError { kind: "misrouted RREP" })];
        }
        if rrep.hop > 0 {
            rrep.hop -= 1;
            let next_hop = rrep.route[rrep.hop];
            return vec![Action::Unicast {
                next_hop,
                packet: Packet::Rrep(rrep),
            }];
        }

        let destination = *rrep.route.last().expect("route has two or more entries");
        self.locations.update(rrep.destination_location);
        let pending = self.discoveries.remove(&destination);
        let better = match self.routes.get(destination) {
            None => true,
            Some(c) => rrep.route.len() < c.route.len(),
        };
        let mut actions = Vec::new();
        if pending.is_some() || better {
            self.routes.insert(destination, rrep.route.clone(), ctx.now);
            actions.push(Action::Event(RoutingEvent::RouteInstalled {
                destination,
                route: rrep.route.clone(),
            }));
        }
        if let Some(state) = pending {
            let route = &self.routes.get(destination).expect("installed above").route;
            for mut packet in state.queue {
                packet.route = route.clone();
                packet.hop = 1;
                actions.push(Action::Unicast {
                    next_hop: route[1],
                    packet: Packet::Data(packet),
                });
            }
        }
        actions
    }

    fn handle_data(&mut self, _ctx: &NodeContext, mut data: DataPacket) -> Vec<Action> {
        if data.route.get(data.hop) != Some(&self.id) {
            return vec![
                Action::Event(RoutingEvent::ProtocolError { kind: "misrouted DATA" }),
                Action::Dropped {
                    packet: data,
                    reason: DropReason::Misrouted,
                },
            ];
        }
        if data.hop + 1 == data.route.len() {
            return vec![Action::Deliver(data)];
        }
        data.hop += 1;
        let next_hop = data.route[data.hop];
        vec![Action::Unicast {
            next_hop,
            packet: Packet::Data(data),
        }]
    }

    fn handle_rerr(&mut self, _ctx: &NodeContext, mut rerr: RouteError) -> Vec<Action> {
        if rerr.route.get(rerr.hop) != Some(&self.id) || rerr.broken_at + 1 >= rerr.route.len() {
            return vec![Action::Event(RoutingEvent::ProtocolError { kind: "misrouted RERR" })];
        }
        if rerr.hop == 0 {
            return self.purge(&rerr.route, rerr.broken_at);
        }
        rerr.hop -= 1;
        let next_hop = rerr.route[rerr.hop];
        vec![Action::Unicast {
            next_hop,
            packet: Packet::Rerr(rerr),
        }]
    }

    fn purge(&mut self, route: &[NodeId], broken_at: usize) -> Vec<Action> {
        let destination = *route.last().expect("non-empty route");
        if self.routes.purge_link(destination, route[broken_at], route[broken_at + 1]) {
            vec![Action::Event(RoutingEvent::RoutePurged { destination })]
        } else {
            Vec::new()
        }
    }

    /// The MAC could not get `packet` to `dead_next_hop`.
    pub fn on_link_failure(&mut self, _ctx: &NodeContext, dead_next_hop: NodeId, packet: Packet) -> Vec<Action> {
        match packet {
            Packet::Data(data) => {
                let at = data.hop.saturating_sub(1);
                debug_assert_eq!(data.route.get(at + 1), Some(&dead_next_hop));
                let mut actions = if at == 0 {
                    self.purge(&data.route, 0)
                } else {
                    let rerr = RouteError {
                        route: data.route.clone(),
                        broken_at: at,
                        hop: at - 1,
                    };
                    vec![Action::Unicast {
                        next_hop: data.route[at - 1],
                        packet: Packet::Rerr(rerr),
                    }]
                };
                actions.push(Action::Dropped {
                    packet: data,
                    reason: DropReason::LinkFailure,
                });
                actions
            }
            other => vec![Action::Event(RoutingEvent::ControlLost { kind: other.kind() })],
        }
    }

    /// A discovery timer fired. Stale timers (the discovery finished or was
    /// re-armed since) are ignored.
    pub fn on_discovery_timeout(&mut self, ctx: &NodeContext, destination: NodeId, serial: u64) -> Vec<Action> {
        let Some(state) = self.discoveries.get(&destination) else {
            return Vec::new();
        };
        if state.serial != serial || ctx.now < state.deadline {
            return Vec::new();
        }
        if state.attempt < self.params.attempts_allowed() {
            let next = state.attempt + 1;
            return self.initiate_discovery(ctx, destination, next);
        }
        let state = self.discoveries.remove(&destination).expect("checked above");
        let dropped = state.queue.len();
        let mut actions: Vec<Action> = state
            .queue
            .into_iter()
            .map(|packet| Action::Dropped {
                packet,
                reason: DropReason::NoRoute,
            })
            .collect();
        actions.push(Action::Event(RoutingEvent::DiscoveryGaveUp { destination, dropped }));
        actions
    }
}
