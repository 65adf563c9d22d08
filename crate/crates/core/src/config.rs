//! Simulation configuration with defaults and string-keyed overrides.
//!
//! Every tunable has a dotted key (`sim.node_count`, `channel.k_abs`, ...)
//! so configuration files and environment overrides can address it
//! uniformly through [`SimConfig::set`].

use std::fmt;
use std::str::FromStr;

use crate::channel::ChannelParams;
use crate::clustering::ElectionParams;
use crate::energy::{ConsumptionParams, HarvestParams};
use crate::error::{Error, Result};
use crate::frame::SlotParams;
use crate::geometry::Point;
use crate::swipt::{Mechanism, OptimizerOptions, RateMode};

/// The four compared schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    Leach,
    Ebacc,
    PsEbcnf,
    TsEbcnf,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [Protocol::Leach, Protocol::Ebacc, Protocol::PsEbcnf, Protocol::TsEbcnf];

    /// SWIPT mechanism, for the EBCNF variants.
    pub fn mechanism(self) -> Option<Mechanism> {
        match self {
            Protocol::PsEbcnf => Some(Mechanism::PowerSplitting),
            Protocol::TsEbcnf => Some(Mechanism::TimeSwitching),
            _ => None,
        }
    }

    /// Whether the control node charges the network (WET + SWIPT).
    pub fn harvests(self) -> bool {
        self.mechanism().is_some()
    }

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Leach => "leach",
            Protocol::Ebacc => "ebacc",
            Protocol::PsEbcnf => "ps-ebcnf",
            Protocol::TsEbcnf => "ts-ebcnf",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "leach" => Ok(Protocol::Leach),
            "ebacc" => Ok(Protocol::Ebacc),
            "ps-ebcnf" | "ps" => Ok(Protocol::PsEbcnf),
            "ts-ebcnf" | "ts" => Ok(Protocol::TsEbcnf),
            other => Err(Error::InvalidConfig(vec![format!("unknown protocol '{other}'")])),
        }
    }
}

/// Full parameter set of one simulation run. Lengths in metres, energies
/// in joules, times in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub field_width: f64,
    pub field_height: f64,
    pub nc_position: Point,
    pub node_count: usize,
    pub seed: u64,
    pub protocol: Protocol,
    /// Time between two packets generated by one node.
    pub packet_interval: f64,
    /// Duration of one round (one frame).
    pub frame_duration: f64,
    pub rounds: u64,
    /// Battery capacity and initial residual of every node.
    pub initial_energy: f64,
    /// Residual at or below which a node is dead.
    pub death_threshold: f64,
    /// Node transmit power, spread flat over the band.
    pub tx_power: f64,
    pub bits_per_packet: u64,
    pub t_bit: f64,
    /// Energy per received packet.
    pub phi: f64,
    /// Control node broadcast power during WET.
    pub nc_power: f64,
    /// WET slot as a fraction of the frame.
    pub wet_fraction: f64,
    /// Maximum distance of a head-to-head relay hop.
    pub hop_range: f64,
    /// Origin packets merged into one forwarded packet; 0 merges everything.
    pub fusion_capacity: u64,
    /// Share of a node's energy surplus committed to its SWIPT slot.
    pub surplus_share: f64,
    pub rate_mode: RateMode,
    pub channel: ChannelParams,
    pub harvest: HarvestParams,
    pub p: f64,
    pub a: f64,
    pub b: f64,
    pub r0: f64,
    pub seconds_per_packet: f64,
    pub control_packet_bytes: u64,
    pub data_packet_bytes: u64,
    pub optimizer: OptimizerOptions,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            field_width: 10e-3,
            field_height: 10e-3,
            nc_position: Point::new(11e-3, 5e-3),
            node_count: 100,
            seed: 1,
            protocol: Protocol::Ebacc,
            packet_interval: 0.06,
            frame_duration: 0.1,
            rounds: 3000,
            initial_energy: 50e-6,
            death_threshold: 1.4e-13,
            tx_power: 20e-3,
            bits_per_packet: 1024,
            t_bit: 1e-9,
            phi: 22e-9,
            nc_power: 400.0,
            wet_fraction: 0.1,
            hop_range: 4e-3,
            fusion_capacity: 0,
            surplus_share: 0.05,
            rate_mode: RateMode::BandCenter,
            channel: ChannelParams::default(),
            harvest: HarvestParams::default(),
            p: 1.0 / 3.0,
            a: 0.2,
            b: 0.2,
            r0: 2e-3,
            seconds_per_packet: 1e-3,
            control_packet_bytes: 16,
            data_packet_bytes: 128,
            optimizer: OptimizerOptions::default(),
        }
    }
}

/// Every settable key, in documentation order.
pub const KEYS: &[&str] = &[
    "sim.node_count",
    "sim.seed",
    "sim.protocol",
    "sim.rounds",
    "sim.packet_interval",
    "sim.frame_duration",
    "sim.field_width",
    "sim.field_height",
    "sim.nc_x",
    "sim.nc_y",
    "energy.initial",
    "energy.death_threshold",
    "energy.tx_power",
    "energy.bits_per_packet",
    "energy.t_bit",
    "energy.phi",
    "harvest.a",
    "harvest.b",
    "harvest.ps",
    "harvest.nc_power",
    "harvest.wet_fraction",
    "channel.f_low",
    "channel.f_high",
    "channel.delta_f",
    "channel.k_abs",
    "channel.t0",
    "channel.c",
    "cluster.p",
    "cluster.a",
    "cluster.b",
    "cluster.r0",
    "frame.seconds_per_packet",
    "frame.control_packet_bytes",
    "frame.data_packet_bytes",
    "routing.hop_range",
    "routing.fusion_capacity",
    "swipt.surplus_share",
    "swipt.rate_mode",
    "swipt.tol",
    "swipt.max_iter",
];

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::InvalidConfig(vec![format!("{key}: cannot parse '{}'", value.trim())]))
}

impl SimConfig {
    /// Sets one parameter from its dotted key and textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "sim.node_count" => self.node_count = num(key, value)?,
            "sim.seed" => self.seed = num(key, value)?,
            "sim.protocol" => self.protocol = value.parse()?,
            "sim.rounds" => self.rounds = num(key, value)?,
            "sim.packet_interval" => self.packet_interval = num(key, value)?,
            "sim.frame_duration" => self.frame_duration = num(key, value)?,
            "sim.field_width" => self.field_width = num(key, value)?,
            "sim.field_height" => self.field_height = num(key, value)?,
            "sim.nc_x" => self.nc_position.x = num(key, value)?,
            "sim.nc_y" => self.nc_position.y = num(key, value)?,
            "energy.initial" => self.initial_energy = num(key, value)?,
            "energy.death_threshold" => self.death_threshold = num(key, value)?,
            "energy.tx_power" => self.tx_power = num(key, value)?,
            "energy.bits_per_packet" => self.bits_per_packet = num(key, value)?,
            "energy.t_bit" => self.t_bit = num(key, value)?,
            "energy.phi" => self.phi = num(key, value)?,
            "harvest.a" => self.harvest.a = num(key, value)?,
            "harvest.b" => self.harvest.b = num(key, value)?,
            "harvest.ps" => self.harvest.ps = num(key, value)?,
            "harvest.nc_power" => self.nc_power = num(key, value)?,
            "harvest.wet_fraction" => self.wet_fraction = num(key, value)?,
            "channel.f_low" => self.channel.f_low = num(key, value)?,
            "channel.f_high" => self.channel.f_high = num(key, value)?,
            "channel.delta_f" => self.channel.delta_f = num(key, value)?,
            "channel.k_abs" => self.channel.k_abs = num(key, value)?,
            "channel.t0" => self.channel.t0 = num(key, value)?,
            "channel.c" => self.channel.c = num(key, value)?,
            "cluster.p" => self.p = num(key, value)?,
            "cluster.a" => self.a = num(key, value)?,
            "cluster.b" => self.b = num(key, value)?,
            "cluster.r0" => self.r0 = num(key, value)?,
            "frame.seconds_per_packet" => self.seconds_per_packet = num(key, value)?,
            "frame.control_packet_bytes" => self.control_packet_bytes = num(key, value)?,
            "frame.data_packet_bytes" => self.data_packet_bytes = num(key, value)?,
            "routing.hop_range" => self.hop_range = num(key, value)?,
            "routing.fusion_capacity" => self.fusion_capacity = num(key, value)?,
            "swipt.surplus_share" => self.surplus_share = num(key, value)?,
            "swipt.rate_mode" => {
                self.rate_mode = match value.trim() {
                    "band_center" | "band-center" => RateMode::BandCenter,
                    "full_band" | "full-band" => RateMode::FullBand,
                    other => return Err(Error::InvalidConfig(vec![format!("{key}: unknown rate mode '{other}'")])),
                }
            }
            "swipt.tol" => self.optimizer.tol = num(key, value)?,
            "swipt.max_iter" => self.optimizer.max_iter = num(key, value)?,
            _ => return Err(Error::InvalidConfig(vec![format!("unknown key '{key}'")])),
        }
        Ok(())
    }

    /// Every violated invariant, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("{name} must be > 0"));
            }
        };
        positive("sim.field_width", self.field_width);
        positive("sim.field_height", self.field_height);
        positive("sim.packet_interval", self.packet_interval);
        positive("sim.frame_duration", self.frame_duration);
        positive("energy.initial", self.initial_energy);
        positive("frame.seconds_per_packet", self.seconds_per_packet);
        positive("routing.hop_range", self.hop_range);
        if self.node_count < 1 {
            out.push("sim.node_count must be >= 1".into());
        }
        if !(self.death_threshold >= 0.0 && self.death_threshold < self.initial_energy) {
            out.push("energy.death_threshold must lie in [0, energy.initial)".into());
        }
        if !(self.tx_power >= 0.0) {
            out.push("energy.tx_power must be >= 0".into());
        }
        if !(self.t_bit >= 0.0) || !(self.phi >= 0.0) {
            out.push("energy.t_bit and energy.phi must be >= 0".into());
        }
        if !(self.nc_power >= 0.0) {
            out.push("harvest.nc_power must be >= 0".into());
        }
        if !(self.wet_fraction > 0.0 && self.wet_fraction < 1.0) {
            out.push("harvest.wet_fraction must lie in (0, 1)".into());
        }
        if !(self.surplus_share > 0.0 && self.surplus_share <= 1.0) {
            out.push("swipt.surplus_share must lie in (0, 1]".into());
        }
        if !(self.optimizer.tol > 0.0) {
            out.push("swipt.tol must be > 0".into());
        }
        out.extend(self.channel.violations());
        out.extend(self.harvest.violations());
        out.extend(self.election_params().violations());
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    pub fn consumption(&self) -> ConsumptionParams {
        ConsumptionParams {
            bits_per_packet: self.bits_per_packet,
            psd: self.channel.flat_psd(self.tx_power),
            delta_f: self.channel.bandwidth(),
            t_bit: self.t_bit,
            phi: self.phi,
        }
    }

    pub fn election_params(&self) -> ElectionParams {
        ElectionParams {
            p: self.p,
            a: self.a,
            b: self.b,
            r0: self.r0,
            e_max: self.initial_energy,
            nc_position: self.nc_position,
            message_bytes: self.control_packet_bytes,
        }
    }

    pub fn slot_params(&self) -> SlotParams {
        SlotParams {
            t_wet: self.wet_fraction * self.frame_duration,
            seconds_per_packet: self.seconds_per_packet,
            control_packet_bytes: self.control_packet_bytes,
            data_packet_bytes: self.data_packet_bytes,
        }
    }

    /// Simulated time covered by `rounds` frames.
    pub fn horizon(&self, rounds: u64) -> f64 {
        rounds as f64 * self.frame_duration
    }
}
