//! Evaluation quantities computed from simulation traces.
//!
//! Counters in [`RoundMetrics`] are cumulative from round 0 up to and
//! including the snapshot round, so every ratio below reads the last row.

use crate::engine::{NodeState, SimTrace};

/// Snapshot taken at the end of a round.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RoundMetrics {
    pub round: u64,
    pub dead_count: usize,
    /// Mean residual over all nodes, as a fraction of capacity.
    pub avg_residual_fraction: f64,
    pub packets_generated: u64,
    pub packets_delivered: u64,
    pub delivered_bits: u64,
    pub control_bytes: u64,
    /// Control plus data bytes.
    pub total_bytes: u64,
    /// Heads elected this round.
    pub heads: usize,
}

/// First round with a dead node.
pub fn network_lifetime(rounds: &[RoundMetrics]) -> Option<u64> {
    rounds.iter().find(|m| m.dead_count > 0).map(|m| m.round)
}

/// Total residual over total capacity. Dead nodes contribute what they
/// still hold.
pub fn avg_remaining_energy(nodes: &[NodeState]) -> f64 {
    let capacity: f64 = nodes.iter().map(|n| n.capacity).sum();
    if capacity <= 0.0 {
        return 0.0;
    }
    let residual: f64 = nodes.iter().map(|n| n.residual).sum();
    (residual / capacity).clamp(0.0, 1.0)
}

/// Delivered over generated packets; `None` when nothing was generated.
pub fn transmission_success_rate(rounds: &[RoundMetrics]) -> Option<f64> {
    let last = rounds.last()?;
    (last.packets_generated > 0).then(|| last.packets_delivered as f64 / last.packets_generated as f64)
}

/// Delivered bits per second of simulated time.
pub fn average_throughput(rounds: &[RoundMetrics], horizon: f64) -> f64 {
    match rounds.last() {
        Some(last) if horizon > 0.0 => last.delivered_bits as f64 / horizon,
        _ => 0.0,
    }
}

/// Control bytes over all bytes sent; `None` without traffic.
pub fn control_overhead_ratio(rounds: &[RoundMetrics]) -> Option<f64> {
    rounds.last().and_then(overhead_at)
}

/// Cumulative overhead ratio as of one snapshot.
pub fn overhead_at(m: &RoundMetrics) -> Option<f64> {
    (m.total_bytes > 0).then(|| m.control_bytes as f64 / m.total_bytes as f64)
}

/// Per-run summary consumed by the CSV writer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub lifetime: Option<u64>,
    pub survivors: usize,
    pub success_rate: Option<f64>,
    pub throughput: f64,
    pub overhead_ratio: Option<f64>,
}

impl Summary {
    pub fn from_trace(trace: &SimTrace) -> Self {
        let n = trace.final_nodes.len();
        Self {
            lifetime: network_lifetime(&trace.rounds),
            survivors: trace.rounds.last().map_or(n, |m| n - m.dead_count),
            success_rate: transmission_success_rate(&trace.rounds),
            throughput: average_throughput(&trace.rounds, trace.horizon()),
            overhead_ratio: control_overhead_ratio(&trace.rounds),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Role;
    use crate::geometry::Point;

    fn row(round: u64, dead: usize, gen: u64, del: u64, ctrl: u64, total: u64) -> RoundMetrics {
        RoundMetrics {
            round,
            dead_count: dead,
            avg_residual_fraction: 1.0,
            packets_generated: gen,
            packets_delivered: del,
            delivered_bits: del * 1024,
            control_bytes: ctrl,
            total_bytes: total,
            heads: 0,
        }
    }

    fn node(residual: f64, capacity: f64) -> NodeState {
        NodeState {
            id: 0,
            position: Point::new(0.0, 0.0),
            residual,
            capacity,
            alive: true,
            role: Role::Member,
            pending: Default::default(),
            last_head_round: None,
            death_round: None,
        }
    }

    #[test]
    fn lifetime() {
        let rounds: Vec<_> = (0..500).map(|r| row(r, usize::from(r >= 412), 0, 0, 0, 0)).collect();
        assert_eq!(network_lifetime(&rounds), Some(412));
        assert_eq!(network_lifetime(&rounds[..412]), None);
        let mut longer = rounds.clone();
        longer.extend((500..600).map(|r| row(r, 5, 0, 0, 0, 0)));
        assert_eq!(network_lifetime(&longer), Some(412));
    }

    #[test]
    fn remaining_energy() {
        let e = 50e-6;
        assert_eq!(avg_remaining_energy(&[node(e, e), node(e, e)]), 1.0);
        let mixed = [node(e, e), node(0.5 * e, e), node(0.0, e)];
        assert!((avg_remaining_energy(&mixed) - 0.5).abs() < 1e-15);
        let delta = 1.4e-13;
        assert!((avg_remaining_energy(&[node(delta, e)]) - delta / e).abs() < 1e-24);
    }

    #[test]
    fn success_rate() {
        assert_eq!(transmission_success_rate(&[row(0, 0, 50, 37, 0, 0)]), Some(0.74));
        assert_eq!(transmission_success_rate(&[row(0, 0, 50, 50, 0, 0)]), Some(1.0));
        assert_eq!(transmission_success_rate(&[row(0, 0, 50, 0, 0, 0)]), Some(0.0));
        assert_eq!(transmission_success_rate(&[row(0, 0, 0, 0, 0, 0)]), None);
    }

    #[test]
    fn throughput() {
        let r = [row(9, 0, 100, 100, 0, 0)];
        assert_eq!(average_throughput(&r, 1.0), 102_400.0);
        assert_eq!(average_throughput(&r, 2.0), 51_200.0);
        assert_eq!(average_throughput(&[row(0, 0, 5, 0, 0, 0)], 1.0), 0.0);
    }

    #[test]
    fn overhead() {
        assert_eq!(control_overhead_ratio(&[row(0, 0, 0, 0, 160, 1000)]), Some(0.16));
        assert_eq!(control_overhead_ratio(&[row(0, 0, 0, 0, 64, 64)]), Some(1.0));
        assert_eq!(control_overhead_ratio(&[row(0, 0, 0, 0, 0, 840)]), Some(0.0));
        assert_eq!(control_overhead_ratio(&[row(0, 0, 0, 0, 0, 0)]), None);
    }
}
