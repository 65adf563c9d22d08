//! Frame construction: the WET slot, the RTS/CTS slot application, and the
//! two-stage TDMA allocation (clusters first, then members inside each
//! cluster window).

use std::collections::BTreeMap;
use std::fmt;

use crate::channel::{self, ChannelParams};
use crate::clustering::ClusterPartition;
use crate::energy::{self, HarvestParams};
use crate::geometry::Point;

/// Slot sizing and control-message sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotParams {
    /// WET slot length (s).
    pub t_wet: f64,
    /// Data slot length per packet (s).
    pub seconds_per_packet: f64,
    /// Size of every RTS, CTS and wake-up message (bytes).
    pub control_packet_bytes: u64,
    /// Size of one data packet (bytes).
    pub data_packet_bytes: u64,
}

impl Default for SlotParams {
    fn default() -> Self {
        Self { t_wet: 0.01, seconds_per_packet: 1e-3, control_packet_bytes: 16, data_packet_bytes: 128 }
    }
}

/// One member's slot application.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemberRequest {
    pub node: usize,
    pub position: Point,
    pub packets: u64,
}

/// What a head forwards to the control node in its RTS.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRequest {
    pub head: usize,
    pub head_packets: u64,
    pub members: Vec<MemberRequest>,
}

impl ClusterRequest {
    /// Total data volume of the cluster, head included.
    pub fn total_packets(&self) -> u64 {
        self.head_packets + self.members.iter().map(|m| m.packets).sum::<u64>()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlotRequests {
    /// Ascending head id.
    pub clusters: Vec<ClusterRequest>,
    /// Bytes spent on RTS/CTS so far.
    pub control_bytes: u64,
}

/// Gathers every member's RTS at its head and every head's aggregate RTS
/// at the control node. Each RTS is answered by a CTS.
pub fn collect_slot_requests(
    partition: &ClusterPartition,
    pending: &[u64],
    positions: &[Point],
    control_packet_bytes: u64,
) -> SlotRequests {
    let mut clusters: Vec<ClusterRequest> = partition
        .clusters
        .iter()
        .map(|c| ClusterRequest {
            head: c.head,
            head_packets: pending[c.head],
            members: c
                .members
                .iter()
                .map(|&m| MemberRequest { node: m, position: positions[m], packets: pending[m] })
                .collect(),
        })
        .collect();
    clusters.sort_by_key(|c| c.head);
    let messages: u64 = clusters.iter().map(|c| 2 * c.members.len() as u64 + 2).sum();
    SlotRequests { clusters, control_bytes: messages * control_packet_bytes }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slot {
    pub owner: usize,
    /// Offset from frame start (s).
    pub start: f64,
    pub duration: f64,
}

/// TDMA schedule of one frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameSchedule {
    pub t_wet: f64,
    /// Cluster windows (`T_cc`) in ascending head order, owner = head.
    pub cluster_slots: Vec<Slot>,
    /// Member slots (`T_sc`) inside each cluster window, keyed by head.
    pub member_slots: BTreeMap<usize, Vec<Slot>>,
    pub control_bytes: u64,
    /// Data volume the schedule carries (bytes).
    pub data_bytes: u64,
}

impl FrameSchedule {
    pub fn cluster_slot(&self, head: usize) -> Option<&Slot> {
        self.cluster_slots.iter().find(|s| s.owner == head)
    }

    pub fn member_slot(&self, head: usize, node: usize) -> Option<&Slot> {
        self.member_slots.get(&head)?.iter().find(|s| s.owner == node)
    }
}

/// Stage 1 gives every cluster with data a window proportional to its
/// volume; stage 2 splits the window among members with data, again
/// proportionally. Members with nothing to send get no slot. The control
/// node's wake-up broadcast is one more control message.
pub fn allocate_slots(requests: &SlotRequests, params: &SlotParams) -> FrameSchedule {
    let mut schedule = FrameSchedule {
        t_wet: params.t_wet,
        control_bytes: requests.control_bytes + params.control_packet_bytes,
        ..Default::default()
    };
    let mut cursor = params.t_wet;
    for c in &requests.clusters {
        let total = c.total_packets();
        if total == 0 {
            continue;
        }
        let window = total as f64 * params.seconds_per_packet;
        schedule.cluster_slots.push(Slot { owner: c.head, start: cursor, duration: window });
        let mut inner = cursor;
        let mut slots = Vec::new();
        for m in c.members.iter().filter(|m| m.packets > 0) {
            let d = m.packets as f64 * params.seconds_per_packet;
            slots.push(Slot { owner: m.node, start: inner, duration: d });
            inner += d;
        }
        schedule.member_slots.insert(c.head, slots);
        schedule.data_bytes += total * params.data_packet_bytes;
        cursor += window;
    }
    schedule
}

impl fmt::Display for FrameSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>12} {:>12} {:>8} {:>8}", "start_s", "duration_s", "kind", "owner")?;
        writeln!(f, "{:>12.6} {:>12.6} {:>8} {:>8}", 0.0, self.t_wet, "wet", "nc")?;
        for c in &self.cluster_slots {
            writeln!(f, "{:>12.6} {:>12.6} {:>8} {:>8}", c.start, c.duration, "cluster", c.owner)?;
            for m in self.member_slots.get(&c.owner).into_iter().flatten() {
                writeln!(f, "{:>12.6} {:>12.6} {:>8} {:>8}", m.start, m.duration, "member", m.owner)?;
            }
        }
        write!(f, "control_bytes={} data_bytes={}", self.control_bytes, self.data_bytes)
    }
}

/// A node as seen by the WET phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WetNode {
    pub position: Point,
    pub residual: f64,
    pub capacity: f64,
    pub alive: bool,
}

/// Energy each node collects from the control node's broadcast, capped so
/// no battery exceeds its capacity. Dead nodes collect nothing.
pub fn wet_phase(
    nodes: &[WetNode],
    nc_position: Point,
    nc_power: f64,
    t_wet: f64,
    channel: &ChannelParams,
    harvest: &HarvestParams,
) -> Vec<f64> {
    let f = channel.center_frequency();
    nodes
        .iter()
        .map(|n| {
            if !n.alive {
                return 0.0;
            }
            let d = n.position.distance(&nc_position);
            let h2 = channel::channel_gain(f, d, channel).unwrap_or(0.0);
            let e = energy::harvested_energy(1.0, h2, nc_power, t_wet, harvest);
            e.min((n.capacity - n.residual).max(0.0))
        })
        .collect()
}
