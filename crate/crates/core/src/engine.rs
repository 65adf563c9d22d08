//! Round state machine: deployment, packet generation, election, frame
//! construction, SWIPT transfers, intra/inter-cluster data movement and
//! death detection.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clustering::{self, ElectionNode};
use crate::config::{Protocol, SimConfig};
use crate::energy::{self, ConsumptionParams};
use crate::error::Result;
use crate::frame::{self, WetNode};
use crate::geometry::Point;
use crate::metrics::{self, RoundMetrics};
use crate::swipt::{self, ClusterLinkState, MemberLink};

/// Stream id of the election random stream; deployment uses stream 0.
const ELECTION_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub origin: usize,
    pub created: u64,
    pub bits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Member,
    Head,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: usize,
    pub position: Point,
    pub residual: f64,
    pub capacity: f64,
    pub alive: bool,
    pub role: Role,
    pub pending: VecDeque<Packet>,
    pub last_head_round: Option<u64>,
    /// Round in which the node died.
    pub death_round: Option<u64>,
}

/// Per-round energy balance. `before - debits + credits == after` up to
/// rounding.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyAudit {
    pub round: u64,
    pub before: f64,
    pub debits: f64,
    pub credits: f64,
    /// Portion of `credits` that came from the control node.
    pub harvested: f64,
    pub after: f64,
}

impl EnergyAudit {
    /// `|before - debits + credits - after|` relative to `before`.
    pub fn relative_error(&self) -> f64 {
        let expected = self.before - self.debits + self.credits;
        let scale = self.before.abs().max(f64::MIN_POSITIVE);
        (expected - self.after).abs() / scale
    }
}

/// Result of a full run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub config: SimConfig,
    pub rounds: Vec<RoundMetrics>,
    pub audits: Vec<EnergyAudit>,
    pub final_nodes: Vec<NodeState>,
    /// Round of the first threshold crossing, recorded independently of
    /// the per-round metrics.
    pub first_death: Option<u64>,
    /// Number of coefficient optimizations performed.
    pub swipt_invocations: u64,
    pub events: Vec<String>,
}

impl SimTrace {
    /// Simulated time of the configured run, including rounds skipped by
    /// an early stop.
    pub fn horizon(&self) -> f64 {
        self.config.horizon(self.config.rounds.max(self.rounds.len() as u64))
    }
}

/// Uniform deployment over the field from the configured seed.
pub fn deploy(config: &SimConfig) -> Result<Vec<NodeState>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    Ok((0..config.node_count)
        .map(|id| {
            let x = rng.random_range(0.0..config.field_width);
            let y = rng.random_range(0.0..config.field_height);
            NodeState {
                id,
                position: Point::new(x, y),
                residual: config.initial_energy,
                capacity: config.initial_energy,
                alive: true,
                role: Role::Member,
                pending: VecDeque::new(),
                last_head_round: None,
                death_round: None,
            }
        })
        .collect())
}

/// Packets a node generates in round `r`: the number of interval
/// boundaries crossed during `[r F, (r+1) F)`.
pub fn packets_due(round: u64, frame: f64, interval: f64) -> u64 {
    let ratio = frame / interval;
    let tick = |r: u64| (r as f64 * ratio + 1e-9).floor() as u64;
    tick(round + 1) - tick(round)
}

/// Forwarding target of a head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hop {
    Nc,
    Head(usize),
}

/// Greedy geographic next hop: the control node if it is within
/// `hop_range`, else the in-range head nearest the control node among
/// those strictly closer to it than `from`, else the control node directly.
pub fn next_hop(from: Point, candidates: &[(usize, Point)], nc: Point, hop_range: f64) -> Hop {
    let own = from.distance(&nc);
    if own <= hop_range {
        return Hop::Nc;
    }
    candidates
        .iter()
        .filter(|(_, p)| p.distance(&nc) < own && p.distance(&from) <= hop_range)
        .min_by(|(ia, a), (ib, b)| a.distance(&nc).total_cmp(&b.distance(&nc)).then(ia.cmp(ib)))
        .map_or(Hop::Nc, |&(id, _)| Hop::Head(id))
}

/// Cumulative counters carried across rounds.
#[derive(Debug, Clone, Copy, Default)]
struct Counters {
    generated: u64,
    delivered: u64,
    lost: u64,
    control_bytes: u64,
    data_bytes: u64,
}

/// A running simulation.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    consumption: ConsumptionParams,
    nodes: Vec<NodeState>,
    rng: ChaCha8Rng,
    round: u64,
    counters: Counters,
    swipt_invocations: u64,
    first_death: Option<u64>,
    log_events: bool,
    events: Vec<String>,
}

/// Energy moved during the current round.
#[derive(Debug, Default)]
struct Flow {
    debits: f64,
    credits: f64,
    harvested: f64,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        let nodes = deploy(&config)?;
        Self::with_nodes(config, nodes)
    }

    /// Starts from an explicit node list; ids must equal indices.
    pub fn with_nodes(config: SimConfig, nodes: Vec<NodeState>) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(ELECTION_STREAM);
        Ok(Self {
            consumption: config.consumption(),
            config,
            nodes,
            rng,
            round: 0,
            counters: Counters::default(),
            swipt_invocations: 0,
            first_death: None,
            log_events: false,
            events: Vec::new(),
        })
    }

    /// Records a textual event log in the trace.
    pub fn with_events(mut self, on: bool) -> Self {
        self.log_events = on;
        self
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn swipt_invocations(&self) -> u64 {
        self.swipt_invocations
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    fn log(&mut self, msg: impl FnOnce() -> String) {
        if self.log_events {
            let m = msg();
            self.events.push(format!("r{} {m}", self.round));
        }
    }

    /// Debits `amount` from `id`. A node that cannot pay dies without
    /// spending anything.
    fn spend(&mut self, id: usize, amount: f64, flow: &mut Flow) -> bool {
        let node = &mut self.nodes[id];
        if !node.alive {
            return false;
        }
        if amount > node.residual {
            self.kill(id);
            return false;
        }
        node.residual -= amount;
        flow.debits += amount;
        true
    }

    fn kill(&mut self, id: usize) {
        let round = self.round;
        let node = &mut self.nodes[id];
        if !node.alive {
            return;
        }
        node.alive = false;
        node.death_round = Some(round);
        self.counters.lost += node.pending.len() as u64;
        node.pending.clear();
        self.first_death.get_or_insert(round);
        self.log(|| format!("node {id} died"));
    }

    fn credit(&mut self, id: usize, amount: f64, flow: &mut Flow) {
        let node = &mut self.nodes[id];
        node.residual += amount;
        flow.credits += amount;
    }

    fn fused_units(&self, packets: usize) -> u64 {
        match (packets, self.config.fusion_capacity) {
            (0, _) => 0,
            (_, 0) => 1,
            (n, cap) => (n as u64).div_ceil(cap),
        }
    }

    /// Moves each member's offered SWIPT energy to `head`, bounded by the
    /// head's headroom and by the level at which donor and head would be
    /// even, so energy only flows toward the poorer node. Returns the
    /// amount credited.
    fn transfer_to_head(&mut self, head: usize, offers: &[(usize, f64)], flow: &mut Flow) -> f64 {
        let mut moved = 0.0;
        for &(id, offered) in offers {
            let donor = self.nodes[id].residual;
            let receiver = self.nodes[head].residual;
            if !self.nodes[id].alive {
                continue;
            }
            let headroom = self.nodes[head].capacity - receiver;
            let amount = offered.min(0.5 * (donor - receiver)).min(headroom);
            if amount > 0.0 && self.spend(id, amount, flow) {
                self.credit(head, amount, flow);
                moved += amount;
            }
        }
        moved
    }

    /// Executes one round and returns its metrics snapshot and energy audit.
    pub fn run_round(&mut self) -> Result<(RoundMetrics, EnergyAudit)> {
        let before: f64 = self.nodes.iter().map(|n| n.residual).sum();
        let mut flow = Flow::default();
        let mut heads = 0;
        if self.nodes.iter().any(|n| n.alive) {
            heads = self.active_round(&mut flow)?;
        }

        for id in 0..self.nodes.len() {
            if self.nodes[id].alive && self.nodes[id].residual <= self.config.death_threshold {
                self.kill(id);
            }
        }

        let after: f64 = self.nodes.iter().map(|n| n.residual).sum();
        let audit = EnergyAudit {
            round: self.round,
            before,
            debits: flow.debits,
            credits: flow.credits,
            harvested: flow.harvested,
            after,
        };
        let c = self.counters;
        let snapshot = RoundMetrics {
            round: self.round,
            dead_count: self.nodes.iter().filter(|n| !n.alive).count(),
            avg_residual_fraction: metrics::avg_remaining_energy(&self.nodes),
            packets_generated: c.generated,
            packets_delivered: c.delivered,
            delivered_bits: c.delivered * self.config.bits_per_packet,
            control_bytes: c.control_bytes,
            total_bytes: c.control_bytes + c.data_bytes,
            heads,
        };
        self.round += 1;
        Ok((snapshot, audit))
    }

    /// Round body for a network with live nodes; returns the head count.
    fn active_round(&mut self, flow: &mut Flow) -> Result<usize> {
        let cfg = self.config.clone();
        let r = self.round;

        // Packet generation.
        let due = packets_due(r, cfg.frame_duration, cfg.packet_interval);
        for node in self.nodes.iter_mut().filter(|n| n.alive) {
            for _ in 0..due {
                node.pending.push_back(Packet { origin: node.id, created: r, bits: cfg.bits_per_packet });
            }
            self.counters.generated += due;
        }

        // Election.
        let electors: Vec<ElectionNode> = self
            .nodes
            .iter()
            .map(|n| ElectionNode {
                id: n.id,
                position: n.position,
                residual: n.residual,
                alive: n.alive,
                last_head_round: n.last_head_round,
            })
            .collect();
        let params = cfg.election_params();
        let election = match cfg.protocol {
            Protocol::Leach => clustering::leach_elect(&electors, r, &params, &mut self.rng)?,
            _ => clustering::ebacc_elect(&electors, r, &params, &mut self.rng)?,
        };
        let partition = election.partition;
        self.counters.control_bytes += election.trace.total_bytes();
        for node in &mut self.nodes {
            node.role = Role::Member;
        }
        for h in partition.heads() {
            self.nodes[h].role = Role::Head;
            self.nodes[h].last_head_round = Some(r);
        }

        // Frame and WET.
        let pending: Vec<u64> = self.nodes.iter().map(|n| n.pending.len() as u64).collect();
        let positions: Vec<Point> = self.nodes.iter().map(|n| n.position).collect();
        let slot_params = cfg.slot_params();
        let requests = frame::collect_slot_requests(&partition, &pending, &positions, cfg.control_packet_bytes);
        let schedule = frame::allocate_slots(&requests, &slot_params);
        self.counters.control_bytes += schedule.control_bytes;

        let mut wet = vec![0.0; self.nodes.len()];
        if cfg.protocol.harvests() {
            let wet_nodes: Vec<WetNode> = self
                .nodes
                .iter()
                .map(|n| WetNode { position: n.position, residual: n.residual, capacity: n.capacity, alive: n.alive })
                .collect();
            wet = frame::wet_phase(
                &wet_nodes,
                cfg.nc_position,
                cfg.nc_power,
                slot_params.t_wet,
                &cfg.channel,
                &cfg.harvest,
            );
            for (id, &e) in wet.iter().enumerate() {
                if e > 0.0 {
                    self.credit(id, e, flow);
                    flow.harvested += e;
                }
            }
        }

        // Intra-cluster phase.
        let tx = energy::tx_energy(&self.consumption);
        let mut bundles: BTreeMap<usize, Vec<Packet>> = BTreeMap::new();
        let live_heads: Vec<(usize, Point)> = partition.heads().map(|h| (h, self.nodes[h].position)).collect();
        for cluster in &requests.clusters {
            let head = cluster.head;
            let mut bundle = Vec::new();

            let coefficients = match cfg.protocol.mechanism() {
                Some(mechanism) if !cluster.members.is_empty() => {
                    let hop = next_hop(self.nodes[head].position, &live_heads, cfg.nc_position, cfg.hop_range);
                    let d_p = match hop {
                        Hop::Nc => self.nodes[head].position.distance(&cfg.nc_position),
                        Hop::Head(h) => self.nodes[head].position.distance(&self.nodes[h].position),
                    };
                    let member_packets: u64 = cluster.members.iter().map(|m| m.packets).sum();
                    let state = ClusterLinkState {
                        ch_id: head,
                        members: cluster
                            .members
                            .iter()
                            .map(|m| MemberLink {
                                id: m.node,
                                residual: self.nodes[m.node].residual - wet[m.node],
                                consumption: tx * m.packets as f64,
                                harvested: wet[m.node],
                                distance: m.position.distance(&self.nodes[head].position),
                            })
                            .collect(),
                        ch_residual: self.nodes[head].residual - wet[head],
                        ch_harvested: wet[head],
                        ch_consumption: cfg.phi * member_packets as f64 + tx,
                        d_p: d_p.max(f64::MIN_POSITIVE),
                        t_sc: cfg.seconds_per_packet,
                        t_cc: cfg.seconds_per_packet,
                        t_wet: slot_params.t_wet,
                        surplus_share: cfg.surplus_share,
                        rate_mode: cfg.rate_mode,
                    };
                    self.swipt_invocations += 1;
                    let coeffs = swipt::optimize_coefficients(&state, &cfg.channel, mechanism, cfg.optimizer)?;
                    self.counters.control_bytes += coeffs.per_member.len() as u64 * cfg.control_packet_bytes;
                    let mut shares = Vec::new();
                    for (&id, &c) in &coeffs.per_member {
                        let e = (1.0 - c) * swipt::member_power(id, &state)? * state.t_sc;
                        if e > 0.0 {
                            shares.push((id, e));
                        }
                    }
                    shares
                }
                _ => Vec::new(),
            };

            for m in &cluster.members {
                while self.nodes[head].alive && self.nodes[m.node].alive {
                    let Some(packet) = self.nodes[m.node].pending.front().copied() else { break };
                    if !self.spend(m.node, tx, flow) {
                        break;
                    }
                    self.nodes[m.node].pending.pop_front();
                    self.counters.data_bytes += cfg.data_packet_bytes;
                    if self.spend(head, cfg.phi, flow) {
                        bundle.push(packet);
                    } else {
                        self.counters.lost += 1;
                    }
                }
            }

            if self.nodes[head].alive && !coefficients.is_empty() {
                let moved = self.transfer_to_head(head, &coefficients, flow);
                if moved > 0.0 {
                    self.log(|| format!("head {head} received {moved:.3e} J by SWIPT"));
                }
            }

            if self.nodes[head].alive {
                bundle.extend(self.nodes[head].pending.drain(..));
                bundles.insert(head, bundle);
            } else {
                self.counters.lost += bundle.len() as u64;
            }
        }

        // Inter-cluster forwarding, farthest head first.
        let nc = cfg.nc_position;
        let mut order: Vec<usize> = bundles.keys().copied().collect();
        order.sort_by(|&a, &b| {
            let da = self.nodes[a].position.distance(&nc);
            let db = self.nodes[b].position.distance(&nc);
            db.total_cmp(&da).then(a.cmp(&b))
        });
        for head in order {
            let Some(bundle) = bundles.remove(&head) else { continue };
            if bundle.is_empty() {
                continue;
            }
            if !self.nodes[head].alive {
                self.counters.lost += bundle.len() as u64;
                continue;
            }
            let units = self.fused_units(bundle.len());
            let relays: Vec<(usize, Point)> =
                bundles.keys().filter(|&&h| self.nodes[h].alive).map(|&h| (h, self.nodes[h].position)).collect();
            let hop = next_hop(self.nodes[head].position, &relays, nc, cfg.hop_range);
            if !self.spend(head, tx * units as f64, flow) {
                self.counters.lost += bundle.len() as u64;
                continue;
            }
            self.counters.data_bytes += units * cfg.data_packet_bytes;
            match hop {
                Hop::Nc => {
                    debug_assert!(bundle.iter().all(|p| p.created <= r));
                    self.counters.delivered += bundle.len() as u64;
                }
                Hop::Head(next) => {
                    if self.spend(next, cfg.phi * units as f64, flow) {
                        bundles.get_mut(&next).expect("relay has a bundle").extend(bundle);
                    } else {
                        self.counters.lost += bundle.len() as u64;
                        if let Some(lost) = bundles.remove(&next) {
                            self.counters.lost += lost.len() as u64;
                        }
                    }
                }
            }
        }
        Ok(partition.clusters.len())
    }

    /// Runs up to `rounds` rounds, stopping early once every node is dead
    /// and no harvesting protocol is active.
    pub fn run(mut self, rounds: u64) -> Result<SimTrace> {
        let mut metrics = Vec::with_capacity(rounds as usize);
        let mut audits = Vec::with_capacity(rounds as usize);
        for _ in 0..rounds {
            let (m, a) = self.run_round()?;
            metrics.push(m);
            audits.push(a);
            if !self.config.protocol.harvests() && self.nodes.iter().all(|n| !n.alive) {
                break;
            }
        }
        Ok(SimTrace {
            config: self.config,
            rounds: metrics,
            audits,
            final_nodes: self.nodes,
            first_death: self.first_death,
            swipt_invocations: self.swipt_invocations,
            events: self.events,
        })
    }
}

/// Validates `config`, deploys and runs it for `config.rounds` rounds.
pub fn run_simulation(config: &SimConfig) -> Result<SimTrace> {
    Simulation::new(config.clone())?.run(config.rounds)
}
