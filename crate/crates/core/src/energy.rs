//! Energy bookkeeping: per-packet transmit/receive consumption and the
//! logistic (nonlinear) harvesting model.

use crate::error::{Error, Result};

/// Logistic exponents are clamped to this magnitude before `exp`.
const EXP_CLAMP: f64 = 500.0;

/// Parameters of the transmit/receive consumption model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsumptionParams {
    /// Bits per data packet.
    pub bits_per_packet: u64,
    /// Transmit PSD (W/Hz).
    pub psd: f64,
    /// Bandwidth the transmitter occupies (Hz).
    pub delta_f: f64,
    /// Time to send one bit (s).
    pub t_bit: f64,
    /// Energy to receive one packet (J).
    pub phi: f64,
}

impl Default for ConsumptionParams {
    /// 1024-bit packets at 20 mW spread over a 1 THz band, 1 ns per bit,
    /// 22 nJ per reception.
    fn default() -> Self {
        Self { bits_per_packet: 1024, psd: 20e-3 / 1e12, delta_f: 1e12, t_bit: 1e-9, phi: 22e-9 }
    }
}

impl ConsumptionParams {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [
            ("energy.psd", self.psd),
            ("energy.delta_f", self.delta_f),
            ("energy.t_bit", self.t_bit),
            ("energy.phi", self.phi),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                out.push(format!("{name} must be finite and >= 0"));
            }
        }
        out
    }
}

/// Energy to transmit one packet: `k * delta_f * S * T_bit`.
pub fn tx_energy(params: &ConsumptionParams) -> f64 {
    params.bits_per_packet as f64 * params.delta_f * params.psd * params.t_bit
}

/// Transmission of one packet plus `receives` packet receptions.
pub fn total_consumption(params: &ConsumptionParams, receives: u64) -> f64 {
    tx_energy(params) + receives as f64 * params.phi
}

/// Parameters of the logistic energy harvester.
///
/// `gamma` is not stored; it is always derived from `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarvestParams {
    /// Steepness of the logistic charging curve.
    pub a: f64,
    /// Turn-on threshold of the rectifier (W of received power).
    pub b: f64,
    /// Saturation power of the harvesting circuit (W).
    pub ps: f64,
}

impl Default for HarvestParams {
    fn default() -> Self {
        Self { a: 6400.0, b: 0.003, ps: 1e-6 }
    }
}

impl HarvestParams {
    pub fn new(a: f64, b: f64, ps: f64) -> Result<Self> {
        let p = Self { a, b, ps };
        let v = p.violations();
        if v.is_empty() {
            Ok(p)
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.a > 0.0) {
            out.push("harvest.a must be > 0".into());
        }
        if !(self.b > 0.0) {
            out.push("harvest.b must be > 0".into());
        }
        if !(self.ps > 0.0) {
            out.push("harvest.ps must be > 0".into());
        }
        out
    }

    /// Zero-input offset `1 / (1 + e^{A B})`.
    pub fn gamma(&self) -> f64 {
        logistic(-(self.a * self.b))
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x.clamp(-EXP_CLAMP, EXP_CLAMP)).exp())
}

/// Logistic response `1 / (1 + e^{-A (rho h2 P - B)})`.
pub fn logistic_psi(rho: f64, h2: f64, power: f64, params: &HarvestParams) -> f64 {
    logistic(params.a * (rho * h2 * power - params.b))
}

/// Energy harvested over `duration`: `T Ps (psi - gamma) / (1 - gamma)`,
/// clamped into `[0, T Ps]`.
pub fn harvested_energy(rho: f64, h2: f64, power: f64, duration: f64, params: &HarvestParams) -> f64 {
    if !(duration > 0.0) {
        return 0.0;
    }
    let gamma = params.gamma();
    let psi = logistic_psi(rho, h2, power, params);
    let frac = ((psi - gamma) / (1.0 - gamma)).clamp(0.0, 1.0);
    duration * params.ps * frac
}
