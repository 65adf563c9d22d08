//! Benchmarks live in `benches/`; this library only hosts shared fixtures.

use ebcnf_core::swipt::{ClusterLinkState, MemberLink, RateMode};

/// A representative four-member cluster with spare energy everywhere.
pub fn sample_cluster() -> ClusterLinkState {
    let members = (1..=4)
        .map(|id| MemberLink {
            id,
            residual: 8e-12 + id as f64 * 1e-12,
            consumption: 2e-12,
            harvested: 0.5e-12,
            distance: 0.5e-3 * id as f64,
        })
        .collect();
    ClusterLinkState {
        ch_id: 0,
        members,
        ch_residual: 1e-12,
        ch_harvested: 0.0,
        ch_consumption: 0.5e-12,
        d_p: 4e-3,
        t_sc: 1e-3,
        t_cc: 3e-3,
        t_wet: 1e-3,
        surplus_share: 1.0,
        rate_mode: RateMode::BandCenter,
    }
}
