//! Packets exchanged by the routing layer.

use crate::geometry::{LocationRecord, RequestZone};
use crate::NodeId;

/// Fixed header bytes charged to every control packet.
const CONTROL_HEADER_BYTES: usize = 24;
const NODE_ID_BYTES: usize = 4;
const ZONE_BYTES: usize = 16;
const LOCATION_BYTES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct RouteRequest {
    pub origin: NodeId,
    pub destination: NodeId,
    pub request_id: u32,
    pub zone: RequestZone,
    /// Traversed nodes, origin first.
    pub path: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteReply {
    /// Full route, origin first and destination last.
    pub route: Vec<NodeId>,
    pub destination_location: LocationRecord,
    /// Index in `route` of the node currently holding the reply.
    pub hop: usize,
}

/// Notice that the link `route[broken_at] -> route[broken_at + 1]` failed,
/// travelling back towards `route[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteError {
    pub route: Vec<NodeId>,
    pub broken_at: usize,
    pub hop: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPacket {
    /// Unique per run; indexes the metrics table.
    pub uid: u64,
    pub flow: usize,
    pub seq: u64,
    pub origin: NodeId,
    pub destination: NodeId,
    pub size_bytes: usize,
    /// Application send time.
    pub sent_at: f64,
    /// Source route, empty until the origin attaches one.
    pub route: Vec<NodeId>,
    pub hop: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Packet {
    Rreq(RouteRequest),
    Rrep(RouteReply),
    Rerr(RouteError),
    Data(DataPacket),
}

impl Packet {
    /// On-air size. Data frames are charged their payload size only, so a
    /// 512-byte packet occupies the channel for exactly 4096 bit times.
    pub fn size_bytes(&self) -> usize {
        match self {
            Packet::Rreq(r) => CONTROL_HEADER_BYTES + ZONE_BYTES + NODE_ID_BYTES * r.path.len(),
            Packet::Rrep(r) => CONTROL_HEADER_BYTES + LOCATION_BYTES + NODE_ID_BYTES * r.route.len(),
            Packet::Rerr(r) => CONTROL_HEADER_BYTES + NODE_ID_BYTES * r.route.len(),
            Packet::Data(d) => d.size_bytes,
        }
    }

    pub fn bits(&self) -> u64 {
        self.size_bytes() as u64 * 8
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Packet::Rreq(_) => "RREQ",
            Packet::Rrep(_) => "RREP",
            Packet::Rerr(_) => "RERR",
            Packet::Data(_) => "DATA",
        }
    }
}

/// True when `path` lists no node twice.
pub fn is_loop_free(path: &[NodeId]) -> bool {
    // paths are a handful of hops, so the quadratic scan beats hashing
    path.iter().enumerate().all(|(i, n)| !path[..i].contains(n))
}
