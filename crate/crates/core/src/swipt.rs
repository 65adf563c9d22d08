//! Per-cluster SWIPT link rates under time switching (TS) and power
//! splitting (PS), and the iterative max-min coefficient optimizer.
//!
//! A member `q` transmits to its cluster head in a slot of length `t_sc`
//! with the power its energy surplus allows. Under PS it keeps a share
//! `alpha_q` of that power for information and hands the rest to the head;
//! under TS the share is a fraction `beta_q` of the slot. The head then
//! forwards in its own slot `t_cc`, with the received energy added to its
//! budget. The optimizer lowers the members' information shares until the
//! head's forwarding rate meets the members' common target rate.
//!
//! Rates are `(1/T) log2(1 + E / (PL N))` where `E` is the energy put into
//! the information part of a slot. By default the log term is evaluated at
//! the band-center frequency; [`RateMode::FullBand`] averages it over all
//! subchannels instead.

use std::collections::BTreeMap;

use crate::channel::{self, ChannelParams};
use crate::error::{Error, Result};

/// SWIPT splitting mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mechanism {
    /// Time switching: a fraction of the slot carries information.
    TimeSwitching,
    /// Power splitting: a fraction of the power carries information.
    PowerSplitting,
}

/// How the single-frequency rate expression is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateMode {
    #[default]
    BandCenter,
    /// Mean spectral efficiency over every subchannel center.
    FullBand,
}

/// One cluster member as seen by its head during a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemberLink {
    pub id: usize,
    /// Residual energy at frame start (J).
    pub residual: f64,
    /// Energy the member must spend on its own traffic this frame (J).
    pub consumption: f64,
    /// Energy harvested during the WET slot (J).
    pub harvested: f64,
    /// Distance to the cluster head (m).
    pub distance: f64,
}

/// Energy and geometry of one cluster for a single frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterLinkState {
    pub ch_id: usize,
    pub members: Vec<MemberLink>,
    pub ch_residual: f64,
    pub ch_harvested: f64,
    pub ch_consumption: f64,
    /// Distance from the head to its next hop (m).
    pub d_p: f64,
    /// Member slot duration (s).
    pub t_sc: f64,
    /// Head slot duration (s).
    pub t_cc: f64,
    /// WET slot duration (s).
    pub t_wet: f64,
    /// Fraction of each node's energy surplus committed to this frame's
    /// slot. 1.0 commits the whole surplus.
    pub surplus_share: f64,
    pub rate_mode: RateMode,
}

impl ClusterLinkState {
    fn member(&self, q: usize) -> Result<&MemberLink> {
        self.members
            .iter()
            .find(|m| m.id == q)
            .ok_or_else(|| Error::Domain(format!("node {q} is not a member of cluster {}", self.ch_id)))
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let non_neg = |x: f64| x >= 0.0 && x.is_finite();
        if !(non_neg(self.ch_residual) && non_neg(self.ch_harvested) && non_neg(self.ch_consumption)) {
            out.push("cluster head energies must be finite and >= 0".to_string());
        }
        if !(self.d_p > 0.0) {
            out.push("next-hop distance must be > 0".to_string());
        }
        if !(self.t_sc > 0.0 && self.t_cc > 0.0 && self.t_wet > 0.0) {
            out.push("slot durations must be > 0".to_string());
        }
        if !(self.surplus_share > 0.0 && self.surplus_share <= 1.0) {
            out.push("surplus share must lie in (0, 1]".to_string());
        }
        for m in &self.members {
            if m.id == self.ch_id {
                out.push(format!("head {} listed as its own member", m.id));
            }
            if !(non_neg(m.residual) && non_neg(m.consumption) && non_neg(m.harvested)) {
                out.push(format!("member {} has a negative energy", m.id));
            }
            if !(m.distance > 0.0) {
                out.push(format!("member {} distance must be > 0", m.id));
            }
        }
        out
    }
}

/// Outcome of the coefficient optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct SwiptCoefficients {
    pub mechanism: Mechanism,
    /// `beta_q` (TS) or `alpha_q` (PS) for each participating member.
    pub per_member: BTreeMap<usize, f64>,
    /// Bottleneck rate of the cluster at these coefficients (bit/s).
    pub achieved_rate: f64,
    /// Loop iterations executed.
    pub iterations: usize,
    /// False when `max_iter` was hit before the loop settled.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    /// Relative change in the target rate that ends the loop.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 100 }
    }
}

/// `(1/slot) * log2(1 + energy / (PL N))`, in the state's rate mode.
pub fn link_rate(energy: f64, slot: f64, distance: f64, channel: &ChannelParams, mode: RateMode) -> Result<f64> {
    if !(slot > 0.0) {
        return Err(Error::Domain(format!("slot duration must be > 0, got {slot}")));
    }
    let energy = energy.max(0.0);
    let bits = match mode {
        RateMode::BandCenter => {
            let denom = channel::attenuated_noise(channel.center_frequency(), distance, channel)?;
            (energy / denom).ln_1p() / std::f64::consts::LN_2
        }
        RateMode::FullBand => {
            let mut sum = 0.0;
            for f in channel.subchannel_centers() {
                sum += (energy / channel::attenuated_noise(f, distance, channel)?).ln_1p();
            }
            sum / channel.subchannel_count() as f64 / std::f64::consts::LN_2
        }
    };
    Ok(bits / slot)
}

/// Energy that puts `link_rate` exactly at `rate`.
fn energy_for_rate(rate: f64, slot: f64, distance: f64, channel: &ChannelParams, mode: RateMode) -> Result<f64> {
    let bits = rate * slot;
    match mode {
        RateMode::BandCenter => {
            let denom = channel::attenuated_noise(channel.center_frequency(), distance, channel)?;
            Ok((bits * std::f64::consts::LN_2).exp_m1() * denom)
        }
        RateMode::FullBand => {
            // Monotone in energy; bracket then bisect in log space.
            let mut hi = f64::MIN_POSITIVE;
            while link_rate(hi, slot, distance, channel, mode)? < rate {
                hi *= 2.0;
                if !hi.is_finite() {
                    return Ok(f64::INFINITY);
                }
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = if lo > 0.0 { (lo * hi).sqrt() } else { hi * 0.5 };
                if link_rate(mid, slot, distance, channel, mode)? < rate {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= hi * 1e-15 {
                    break;
                }
            }
            Ok(hi)
        }
    }
}

/// Power a member can spend in its slot:
/// `share * (E_q + E_q^har - E_q^con) / T_sc`.
pub fn member_power(q: usize, state: &ClusterLinkState) -> Result<f64> {
    let m = state.member(q)?;
    let surplus = m.residual + m.harvested - m.consumption;
    if surplus < 0.0 {
        return Err(Error::EnergyDeficit { node: q, deficit: -surplus });
    }
    Ok(state.surplus_share * surplus / state.t_sc)
}

/// Member-to-head rate without SWIPT.
pub fn member_rate_no_swipt(q: usize, state: &ClusterLinkState, channel: &ChannelParams) -> Result<f64> {
    let p = member_power(q, state)?;
    let d = state.member(q)?.distance;
    link_rate(state.t_sc * p, state.t_sc, d, channel, state.rate_mode)
}

/// Head transmit power with `extra` energy received from members.
pub fn ch_power(state: &ClusterLinkState, extra: f64) -> Result<f64> {
    let surplus = state.ch_residual + state.ch_harvested + extra - state.ch_consumption;
    if surplus < 0.0 {
        return Err(Error::EnergyDeficit { node: state.ch_id, deficit: -surplus });
    }
    Ok(state.surplus_share * surplus / state.t_cc)
}

/// Head-to-next-hop rate; `extra = 0` is the no-SWIPT case.
pub fn ch_rate(state: &ClusterLinkState, channel: &ChannelParams, extra: f64) -> Result<f64> {
    let p = ch_power(state, extra)?;
    link_rate(state.t_cc * p, state.t_cc, state.d_p, channel, state.rate_mode)
}

/// TS member rate `(1/(beta T_sc)) log2(1 + T_sc P_q / (PL N))`.
pub fn ts_member_rate(q: usize, beta: f64, state: &ClusterLinkState, channel: &ChannelParams) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain(format!("TS coefficient must lie in (0, 1], got {beta}")));
    }
    Ok(member_rate_no_swipt(q, state, channel)? / beta)
}

/// PS member rate `(1/T_sc) log2(1 + alpha T_sc P_q / (PL N))`.
pub fn ps_member_rate(q: usize, alpha: f64, state: &ClusterLinkState, channel: &ChannelParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("PS coefficient must lie in [0, 1], got {alpha}")));
    }
    let p = member_power(q, state)?;
    let d = state.member(q)?.distance;
    link_rate(alpha * state.t_sc * p, state.t_sc, d, channel, state.rate_mode)
}

fn member_rate(
    mechanism: Mechanism,
    q: usize,
    coef: f64,
    state: &ClusterLinkState,
    channel: &ChannelParams,
) -> Result<f64> {
    match mechanism {
        Mechanism::TimeSwitching => ts_member_rate(q, coef, state, channel),
        Mechanism::PowerSplitting => ps_member_rate(q, coef, state, channel),
    }
}

/// Energy handed to the head: `sum (1 - c_i) P_i T_sc` over the members in
/// the coefficient map. TS and PS share the same expression.
pub fn ch_transfer_energy(coeffs: &SwiptCoefficients, state: &ClusterLinkState) -> Result<f64> {
    transfer_energy(&coeffs.per_member, state)
}

fn transfer_energy(per_member: &BTreeMap<usize, f64>, state: &ClusterLinkState) -> Result<f64> {
    let mut total = 0.0;
    for (&id, &c) in per_member {
        total += (1.0 - c.clamp(0.0, 1.0)) * member_power(id, state)? * state.t_sc;
    }
    Ok(total)
}

/// Members whose surplus is non-negative, with their no-SWIPT rates.
fn eligible_rates(state: &ClusterLinkState, channel: &ChannelParams) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::with_capacity(state.members.len());
    for m in &state.members {
        match member_rate_no_swipt(m.id, state, channel) {
            Ok(r) => out.push((m.id, r)),
            Err(Error::EnergyDeficit { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Bottleneck rate without SWIPT: the slowest of the members (deficit
/// members excluded) and the head.
pub fn cluster_rate_no_swipt(state: &ClusterLinkState, channel: &ChannelParams) -> Result<f64> {
    let ch = ch_rate(state, channel, 0.0)?;
    Ok(eligible_rates(state, channel)?.into_iter().map(|(_, r)| r).fold(ch, f64::min))
}

/// Bottleneck rate for a given coefficient assignment.
pub fn bottleneck_rate(
    mechanism: Mechanism,
    per_member: &BTreeMap<usize, f64>,
    state: &ClusterLinkState,
    channel: &ChannelParams,
) -> Result<f64> {
    let extra = transfer_energy(per_member, state)?;
    let mut rate = ch_rate_or_zero(state, channel, extra)?;
    for (&id, &c) in per_member {
        rate = rate.min(member_rate(mechanism, id, c, state, channel)?);
    }
    Ok(rate)
}

fn ch_rate_or_zero(state: &ClusterLinkState, channel: &ChannelParams, extra: f64) -> Result<f64> {
    match ch_rate(state, channel, extra) {
        Err(Error::EnergyDeficit { .. }) => Ok(0.0),
        other => other,
    }
}

/// Information share member `q` needs to reach `target` exactly, clamped
/// to `[0, 1]`.
fn invert_coefficient(
    mechanism: Mechanism,
    q: usize,
    no_swipt_rate: f64,
    target: f64,
    state: &ClusterLinkState,
    channel: &ChannelParams,
) -> Result<f64> {
    let c = match mechanism {
        // rate = R_q / beta  =>  beta = R_q / target
        Mechanism::TimeSwitching => {
            if target > 0.0 {
                no_swipt_rate / target
            } else {
                1.0
            }
        }
        // rate = log2(1 + alpha E / (PL N)) / T_sc  =>  alpha = E_needed / E
        Mechanism::PowerSplitting => {
            let available = member_power(q, state)? * state.t_sc;
            if available <= 0.0 {
                1.0
            } else {
                let d = state.member(q)?.distance;
                energy_for_rate(target, state.t_sc, d, channel, state.rate_mode)? / available
            }
        }
    };
    Ok(c.clamp(0.0, 1.0))
}

/// Iterative max-min search for the SWIPT coefficients of one cluster.
///
/// The target rate starts at the slowest member. While the head cannot
/// forward at the target, every member's share is set so it exactly meets
/// the target, the freed energy is handed to the head, and the target moves
/// halfway toward the head's new rate. The best assignment seen (by
/// bottleneck rate) is returned; the all-ones assignment is the starting
/// point, so the result is never worse than not using SWIPT.
pub fn optimize_coefficients(
    state: &ClusterLinkState,
    channel: &ChannelParams,
    mechanism: Mechanism,
    options: OptimizerOptions,
) -> Result<SwiptCoefficients> {
    let eligible = eligible_rates(state, channel)?;
    let ch0 = ch_rate_or_zero(state, channel, 0.0)?;

    let mut best: BTreeMap<usize, f64> = eligible.iter().map(|&(id, _)| (id, 1.0)).collect();
    let mut best_rate = eligible.iter().map(|&(_, r)| r).fold(ch0, f64::min);

    let mut r_res = eligible.iter().map(|&(_, r)| r).fold(f64::INFINITY, f64::min);
    if eligible.is_empty() || !(r_res > 0.0) {
        return Ok(SwiptCoefficients {
            mechanism,
            per_member: best,
            achieved_rate: best_rate,
            iterations: 0,
            converged: true,
        });
    }

    let mut r_ch = ch0;
    let mut iterations = 0;
    let mut converged = r_ch >= r_res;
    while !converged && iterations < options.max_iter {
        let mut coeffs = BTreeMap::new();
        for &(id, r) in &eligible {
            coeffs.insert(id, invert_coefficient(mechanism, id, r, r_res, state, channel)?);
        }
        let extra = transfer_energy(&coeffs, state)?;
        r_ch = ch_rate_or_zero(state, channel, extra)?;

        let mut achieved = r_ch;
        for (&id, &c) in &coeffs {
            achieved = achieved.min(member_rate(mechanism, id, c, state, channel)?);
        }
        if achieved > best_rate {
            best_rate = achieved;
            best = coeffs;
        }

        let previous = r_res;
        r_res = 0.5 * (r_ch + r_res);
        iterations += 1;
        if r_ch >= r_res || (r_res - previous).abs() < options.tol * previous {
            converged = true;
        }
    }

    Ok(SwiptCoefficients { mechanism, per_member: best, achieved_rate: best_rate, iterations, converged })
}
