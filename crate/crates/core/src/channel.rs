//! Terahertz channel: spreading and molecular absorption loss, absorption
//! noise, and the multi-subchannel Shannon capacity.
//!
//! All functions are pure. Frequencies are in Hz, distances in metres.

use crate::error::{Error, Result};

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Band and medium description shared by every link in the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Lower band edge (Hz).
    pub f_low: f64,
    /// Upper band edge (Hz).
    pub f_high: f64,
    /// Subchannel width (Hz).
    pub delta_f: f64,
    /// Molecular absorption coefficient (1/m), frequency independent.
    pub k_abs: f64,
    /// Reference temperature (K).
    pub t0: f64,
    /// Boltzmann constant (J/K).
    pub kb: f64,
    /// Propagation speed (m/s).
    pub c: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self { f_low: 0.5e12, f_high: 1.5e12, delta_f: 0.01e12, k_abs: 0.25, t0: 296.0, kb: BOLTZMANN, c: 3.0e8 }
    }
}

impl ChannelParams {
    /// Collects every violated invariant.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.f_low > 0.0) {
            out.push("channel.f_low must be > 0".into());
        }
        if !(self.f_high > self.f_low) {
            out.push("channel.f_high must exceed channel.f_low".into());
        }
        if !(self.delta_f > 0.0) {
            out.push("channel.delta_f must be > 0".into());
        } else if self.f_high > self.f_low {
            let n = (self.f_high - self.f_low) / self.delta_f;
            if (n - n.round()).abs() > 1e-9 * n.max(1.0) || n.round() < 1.0 {
                out.push("channel band width must be an integer multiple of channel.delta_f".into());
            }
        }
        if !(self.k_abs >= 0.0) {
            out.push("channel.k_abs must be >= 0".into());
        }
        if !(self.t0 > 0.0) {
            out.push("channel.t0 must be > 0".into());
        }
        if !(self.kb > 0.0) {
            out.push("channel.kb must be > 0".into());
        }
        if !(self.c > 0.0) {
            out.push("channel.c must be > 0".into());
        }
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

    pub fn bandwidth(&self) -> f64 {
        self.f_high - self.f_low
    }

    pub fn subchannel_count(&self) -> usize {
        (self.bandwidth() / self.delta_f).round() as usize
    }

    /// Midpoint of subchannel `i`: `f_low + (i + 1/2) * delta_f`.
    pub fn subchannel_center(&self, i: usize) -> f64 {
        self.f_low + (i as f64 + 0.5) * self.delta_f
    }

    pub fn subchannel_centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.subchannel_count()).map(move |i| self.subchannel_center(i))
    }

    pub fn center_frequency(&self) -> f64 {
        0.5 * (self.f_low + self.f_high)
    }

    /// Flat transmit PSD that spreads `tx_power` over the whole band.
    pub fn flat_psd(&self, tx_power: f64) -> f64 {
        tx_power / self.bandwidth()
    }
}

/// Distance and transmit spectrum of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub distance: f64,
    pub tx_power: f64,
    /// Transmit PSD (W/Hz), flat over the band.
    pub psd: f64,
}

impl LinkBudget {
    pub fn new(distance: f64, tx_power: f64, params: &ChannelParams) -> Result<Self> {
        if !(distance > 0.0) {
            return Err(Error::Domain(format!("link distance must be > 0, got {distance}")));
        }
        if !(tx_power >= 0.0) {
            return Err(Error::Domain(format!("tx power must be >= 0, got {tx_power}")));
        }
        Ok(Self { distance, tx_power, psd: params.flat_psd(tx_power) })
    }
}

/// Free-space spreading loss `(4 pi f d / c)^2`.
pub fn spreading_loss(f: f64, d: f64, params: &ChannelParams) -> Result<f64> {
    if !(f > 0.0) || !(d > 0.0) {
        return Err(Error::Domain(format!("spreading loss needs f > 0 and d > 0, got f={f}, d={d}")));
    }
    let x = 4.0 * std::f64::consts::PI * f * d / params.c;
    Ok(x * x)
}

/// Molecular absorption loss `e^{k d}`.
pub fn absorption_loss(_f: f64, d: f64, params: &ChannelParams) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::Domain(format!("absorption loss needs d >= 0, got {d}")));
    }
    Ok((params.k_abs * d).exp())
}

/// Total path loss: spreading times absorption.
pub fn path_loss(f: f64, d: f64, params: &ChannelParams) -> Result<f64> {
    Ok(spreading_loss(f, d, params)? * absorption_loss(f, d, params)?)
}

/// Power gain `|h|^2 = 1 / PL(f, d)`.
pub fn channel_gain(f: f64, d: f64, params: &ChannelParams) -> Result<f64> {
    Ok(1.0 / path_loss(f, d, params)?)
}

/// Molecular absorption noise PSD `K_B T0 (1 - e^{-k d})`.
pub fn noise_psd(_f: f64, d: f64, params: &ChannelParams) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::Domain(format!("noise PSD needs d >= 0, got {d}")));
    }
    // -expm1 keeps precision for the tiny k*d typical at millimetre range.
    Ok(params.kb * params.t0 * -(-params.k_abs * d).exp_m1())
}

/// `PL(f,d) * N(f,d)`, the denominator of every SNR in the model.
pub fn attenuated_noise(f: f64, d: f64, params: &ChannelParams) -> Result<f64> {
    let n = noise_psd(f, d, params)?;
    if !(n > 0.0) {
        return Err(Error::Domain(format!("noise PSD is zero at d={d}; signal-to-noise ratio is unbounded")));
    }
    Ok(path_loss(f, d, params)? * n)
}

/// Sum over subchannels of `delta_f * log2(1 + S / (PL N))` (bit/s).
pub fn channel_capacity(budget: &LinkBudget, params: &ChannelParams) -> Result<f64> {
    if !(budget.psd >= 0.0) {
        return Err(Error::Domain(format!("PSD must be >= 0, got {}", budget.psd)));
    }
    let mut total = 0.0;
    for f in params.subchannel_centers() {
        let denom = attenuated_noise(f, budget.distance, params)?;
        total += params.delta_f * (budget.psd / denom).ln_1p() / std::f64::consts::LN_2;
    }
    Ok(total)
}
