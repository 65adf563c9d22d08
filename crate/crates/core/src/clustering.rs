//! Cluster-head election: the energy-balanced competition scheme (EBACC)
//! with distance- and energy-weighted competition radii, and the classic
//! LEACH rotation used as a baseline.
//!
//! Both elections draw exactly one uniform number per live node, in
//! ascending id order, so paired runs under the same seed see the same
//! random stream regardless of protocol.

use std::collections::BTreeSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// What an election needs to know about one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectionNode {
    pub id: usize,
    pub position: Point,
    pub residual: f64,
    pub alive: bool,
    /// Last round this node served as head, if ever.
    pub last_head_round: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateStatus {
    Sleeping,
    Candidate,
    Head,
    Member,
    Withdrawn,
}

/// Per-node election state.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateState {
    pub node_id: usize,
    pub position: Point,
    pub residual: f64,
    pub competition_radius: f64,
    /// Neighbouring candidates still in the competition.
    pub neighbor_chs: BTreeSet<usize>,
    pub status: CandidateStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub head: usize,
    pub members: Vec<usize>,
}

/// Result of one election.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterPartition {
    /// Ordered by ascending head id; members ascending.
    pub clusters: Vec<Cluster>,
    /// Dead nodes and live nodes that joined no cluster.
    pub unattached: Vec<usize>,
    pub round: u64,
}

impl ClusterPartition {
    pub fn heads(&self) -> impl Iterator<Item = usize> + '_ {
        self.clusters.iter().map(|c| c.head)
    }

    /// Head of the cluster `node` belongs to (a head maps to itself).
    pub fn head_of(&self, node: usize) -> Option<usize> {
        self.clusters.iter().find(|c| c.head == node || c.members.contains(&node)).map(|c| c.head)
    }
}

/// Control message kinds exchanged during an election.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MessageKind {
    CompeteHead,
    GiveUp,
    NoMoreCh,
    ChAdv,
    JoinCluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlMessage {
    pub kind: MessageKind,
    pub from: usize,
    /// `None` for broadcasts.
    pub to: Option<usize>,
    pub bytes: u64,
}

/// Ordered log of the election's control messages.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ElectionTrace {
    pub messages: Vec<ControlMessage>,
}

impl ElectionTrace {
    fn push(&mut self, kind: MessageKind, from: usize, to: Option<usize>, bytes: u64) {
        self.messages.push(ControlMessage { kind, from, to, bytes });
    }

    pub fn total_bytes(&self) -> u64 {
        self.messages.iter().map(|m| m.bytes).sum()
    }

    pub fn count(&self, kind: MessageKind) -> usize {
        self.messages.iter().filter(|m| m.kind == kind).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Election {
    pub partition: ClusterPartition,
    pub candidates: Vec<CandidateState>,
    pub trace: ElectionTrace,
}

/// Knobs shared by both elections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectionParams {
    /// Desired head fraction.
    pub p: f64,
    /// Distance weight in the competition radius.
    pub a: f64,
    /// Energy weight in the competition radius.
    pub b: f64,
    /// Maximum competition radius (m).
    pub r0: f64,
    /// Battery capacity used as the reference energy (J).
    pub e_max: f64,
    pub nc_position: Point,
    /// Size of every election control message (bytes).
    pub message_bytes: u64,
}

impl Default for ElectionParams {
    fn default() -> Self {
        Self {
            p: 1.0 / 3.0,
            a: 0.2,
            b: 0.2,
            r0: 2e-3,
            e_max: 50e-6,
            nc_position: Point::new(11e-3, 5e-3),
            message_bytes: 16,
        }
    }
}

impl ElectionParams {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.p > 0.0 && self.p <= 1.0) {
            out.push("cluster.p must lie in (0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.a) || !(0.0..=1.0).contains(&self.b) {
            out.push("cluster.a and cluster.b must lie in [0, 1]".into());
        }
        if !(self.r0 > 0.0) {
            out.push("cluster.r0 must be > 0".into());
        }
        if !(self.e_max > 0.0) {
            out.push("cluster e_max must be > 0".into());
        }
        out
    }
}

/// Rounds in one rotation epoch, `ceil(1/p)`.
pub fn epoch_length(p: f64) -> u64 {
    ((1.0 / p) - 1e-9).ceil().max(1.0) as u64
}

/// Rotating LEACH factor `p / (1 - p (r mod ceil(1/p)))`, clamped to [0, 1].
pub fn rotation_threshold(round: u64, p: f64) -> f64 {
    let denom = 1.0 - p * (round % epoch_length(p)) as f64;
    if denom <= 0.0 {
        1.0
    } else {
        (p / denom).clamp(0.0, 1.0)
    }
}

/// `(d_max - d_nc) / (d_max - d_min)`, 1 when the span is degenerate.
fn proximity(d_nc: f64, d_max: f64, d_min: f64) -> f64 {
    let span = d_max - d_min;
    if span <= 0.0 {
        1.0
    } else {
        ((d_max - d_nc) / span).clamp(0.0, 1.0)
    }
}

/// Candidate-head threshold: the rotating factor scaled by proximity to
/// the control node.
pub fn candidate_threshold(round: u64, p: f64, d_max: f64, d_min: f64, d_nc: f64) -> f64 {
    (rotation_threshold(round, p) * proximity(d_nc, d_max, d_min)).clamp(0.0, 1.0)
}

/// Competition radius
/// `(1 - a (d_max - d_nc)/(d_max - d_min) - b (e_max - e)/e_max) R0`,
/// clamped to `[0, R0]`.
#[allow(clippy::too_many_arguments)]
pub fn competition_radius(
    d_max: f64,
    d_min: f64,
    d_nc: f64,
    residual: f64,
    e_max: f64,
    a: f64,
    b: f64,
    r0: f64,
) -> f64 {
    let energy_gap = if e_max > 0.0 { ((e_max - residual) / e_max).clamp(0.0, 1.0) } else { 0.0 };
    ((1.0 - a * proximity(d_nc, d_max, d_min) - b * energy_gap) * r0).clamp(0.0, r0)
}

/// Orders candidates by residual energy, higher first; ties go to the
/// smaller id.
fn rank_order(a: &CandidateState, b: &CandidateState) -> std::cmp::Ordering {
    b.residual.total_cmp(&a.residual).then(a.node_id.cmp(&b.node_id))
}

fn live_distances(nodes: &[ElectionNode], nc: Point) -> Result<(Vec<usize>, f64, f64)> {
    let live: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].alive).collect();
    if live.is_empty() {
        return Err(Error::Empty("network"));
    }
    let mut d_max = f64::NEG_INFINITY;
    let mut d_min = f64::INFINITY;
    for &i in &live {
        let d = nodes[i].position.distance(&nc);
        d_max = d_max.max(d);
        d_min = d_min.min(d);
    }
    Ok((live, d_max, d_min))
}

/// Highest-residual live node (smallest id on ties).
fn draft_head(nodes: &[ElectionNode], live: &[usize]) -> usize {
    let mut best = live[0];
    for &i in &live[1..] {
        if nodes[i].residual > nodes[best].residual {
            best = i;
        }
    }
    best
}

/// Every live non-head joins its nearest head; dead nodes are unattached.
fn assemble(
    nodes: &[ElectionNode],
    heads: &BTreeSet<usize>,
    round: u64,
    trace: &mut ElectionTrace,
    bytes: u64,
) -> ClusterPartition {
    for &h in heads {
        trace.push(MessageKind::ChAdv, nodes[h].id, None, bytes);
    }
    let head_list: Vec<usize> = heads.iter().copied().collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); head_list.len()];
    let mut unattached = Vec::new();
    for (i, n) in nodes.iter().enumerate() {
        if !n.alive {
            unattached.push(n.id);
            continue;
        }
        if heads.contains(&i) {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (k, &h) in head_list.iter().enumerate() {
            let d = n.position.distance(&nodes[h].position);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((k, d));
            }
        }
        match best {
            Some((k, _)) => {
                members[k].push(n.id);
                trace.push(MessageKind::JoinCluster, n.id, Some(nodes[head_list[k]].id), bytes);
            }
            None => unattached.push(n.id),
        }
    }
    ClusterPartition {
        clusters: head_list.iter().zip(members).map(|(&h, m)| Cluster { head: nodes[h].id, members: m }).collect(),
        unattached,
        round,
    }
}

/// EBACC election for one round.
///
/// `nodes[i].id` must equal `i`.
pub fn ebacc_elect<R: Rng + ?Sized>(
    nodes: &[ElectionNode],
    round: u64,
    params: &ElectionParams,
    rng: &mut R,
) -> Result<Election> {
    let (live, d_max, d_min) = live_distances(nodes, params.nc_position)?;
    let bytes = params.message_bytes;
    let mut trace = ElectionTrace::default();

    let mut states: Vec<CandidateState> = Vec::with_capacity(live.len());
    for &i in &live {
        let n = &nodes[i];
        let d_nc = n.position.distance(&params.nc_position);
        let rho: f64 = rng.random();
        let t = candidate_threshold(round, params.p, d_max, d_min, d_nc);
        let is_candidate = rho < t;
        let competition_radius = if is_candidate {
            competition_radius(d_max, d_min, d_nc, n.residual, params.e_max, params.a, params.b, params.r0)
        } else {
            0.0
        };
        states.push(CandidateState {
            node_id: n.id,
            position: n.position,
            residual: n.residual,
            competition_radius,
            neighbor_chs: BTreeSet::new(),
            status: if is_candidate { CandidateStatus::Candidate } else { CandidateStatus::Sleeping },
        });
    }

    let cand: Vec<usize> = (0..states.len()).filter(|&k| states[k].status == CandidateStatus::Candidate).collect();
    for &k in &cand {
        trace.push(MessageKind::CompeteHead, states[k].node_id, None, bytes);
    }
    for (x, &i) in cand.iter().enumerate() {
        for &j in &cand[x + 1..] {
            let d = states[i].position.distance(&states[j].position);
            if d < states[i].competition_radius.max(states[j].competition_radius) {
                let (a, b) = (states[i].node_id, states[j].node_id);
                states[i].neighbor_chs.insert(b);
                states[j].neighbor_chs.insert(a);
            }
        }
    }

    // A candidate outranking every neighbour still competing wins and tells
    // them to give up; each of those withdraws with NOMORE_CH and is pruned
    // from the remaining neighbour sets. Processing in rank order realizes
    // the fixed point of that exchange.
    let mut order = cand.clone();
    order.sort_by(|&i, &j| rank_order(&states[i], &states[j]));
    let slot_of = |id: usize, states: &[CandidateState]| states.iter().position(|s| s.node_id == id);
    let mut heads = BTreeSet::new();
    for &k in &order {
        if states[k].status != CandidateStatus::Candidate {
            continue;
        }
        states[k].status = CandidateStatus::Head;
        heads.insert(states[k].node_id);
        let losers: Vec<usize> = states[k].neighbor_chs.iter().copied().collect();
        if !losers.is_empty() {
            trace.push(MessageKind::GiveUp, states[k].node_id, None, bytes);
        }
        for id in losers {
            let Some(l) = slot_of(id, &states) else { continue };
            states[l].status = CandidateStatus::Withdrawn;
            trace.push(MessageKind::NoMoreCh, id, None, bytes);
            let pruned: Vec<usize> = states[l].neighbor_chs.iter().copied().collect();
            for other in pruned {
                if let Some(o) = slot_of(other, &states) {
                    states[o].neighbor_chs.remove(&id);
                }
            }
        }
    }

    if heads.is_empty() {
        let h = draft_head(nodes, &live);
        heads.insert(h);
        if let Some(k) = slot_of(h, &states) {
            states[k].status = CandidateStatus::Head;
        }
    }

    let partition = assemble(nodes, &heads, round, &mut trace, bytes);
    for s in &mut states {
        if s.status != CandidateStatus::Head {
            s.status = CandidateStatus::Member;
        }
    }
    Ok(Election { partition, candidates: states, trace })
}

/// Whether `node` may stand in LEACH this round: it has not been head
/// since the current rotation epoch began.
pub fn leach_eligible(node: &ElectionNode, round: u64, p: f64) -> bool {
    let epoch = epoch_length(p);
    let epoch_start = round - round % epoch;
    node.last_head_round.is_none_or(|last| last < epoch_start)
}

/// LEACH election for one round.
pub fn leach_elect<R: Rng + ?Sized>(
    nodes: &[ElectionNode],
    round: u64,
    params: &ElectionParams,
    rng: &mut R,
) -> Result<Election> {
    let (live, _, _) = live_distances(nodes, params.nc_position)?;
    let t = rotation_threshold(round, params.p);
    let mut heads = BTreeSet::new();
    for &i in &live {
        let rho: f64 = rng.random();
        if leach_eligible(&nodes[i], round, params.p) && rho < t {
            heads.insert(i);
        }
    }
    if heads.is_empty() {
        heads.insert(draft_head(nodes, &live));
    }
    let mut trace = ElectionTrace::default();
    let partition = assemble(nodes, &heads, round, &mut trace, params.message_bytes);
    let candidates = live
        .iter()
        .map(|&i| CandidateState {
            node_id: nodes[i].id,
            position: nodes[i].position,
            residual: nodes[i].residual,
            competition_radius: 0.0,
            neighbor_chs: BTreeSet::new(),
            status: if heads.contains(&i) { CandidateStatus::Head } else { CandidateStatus::Member },
        })
        .collect();
    Ok(Election { partition, candidates, trace })
}
