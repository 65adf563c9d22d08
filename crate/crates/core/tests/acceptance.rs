//! Acceptance suite: runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use ebcnf_core::channel::{self, ChannelParams};
use ebcnf_core::clustering::{self, ElectionNode, ElectionParams};
use ebcnf_core::energy::{self, HarvestParams};
use ebcnf_core::engine::{deploy, Simulation};
use ebcnf_core::frame::{self, WetNode};
use ebcnf_core::geometry::Point;
use ebcnf_core::metrics::{self, Summary};
use ebcnf_core::swipt::{self, ClusterLinkState, Mechanism, MemberLink, OptimizerOptions, RateMode};
use ebcnf_core::{run_simulation, Protocol, SimConfig, SimTrace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEEDS: u64 = 10;
const INTERVALS: [f64; 5] = [0.02, 0.04, 0.06, 0.08, 0.1];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Compact view of one run.
struct Run {
    first_death: Option<u64>,
    summary: Summary,
    residual: Vec<f64>,
    overhead: Vec<Option<f64>>,
    dead: Vec<usize>,
    node_count: usize,
}

impl Run {
    fn from_trace(t: &SimTrace) -> Self {
        Self {
            first_death: t.first_death,
            summary: Summary::from_trace(t),
            residual: t.rounds.iter().map(|m| m.avg_residual_fraction).collect(),
            overhead: t.rounds.iter().map(metrics::overhead_at).collect(),
            dead: t.rounds.iter().map(|m| m.dead_count).collect(),
            node_count: t.config.node_count,
        }
    }

    /// Round at which every node is dead, if it happened.
    fn extinction(&self) -> Option<usize> {
        self.dead.iter().position(|&d| d == self.node_count)
    }

    /// Value at round `r`, holding the last row after an early stop.
    fn residual_at(&self, r: usize) -> f64 {
        *self.residual.get(r).unwrap_or_else(|| self.residual.last().unwrap())
    }
}

/// Runs every protocol over the seed set at one packet interval.
fn batch(base: &SimConfig) -> Vec<Vec<Run>> {
    Protocol::ALL
        .iter()
        .map(|&protocol| {
            (1..=SEEDS)
                .into_par_iter()
                .map(|seed| {
                    let c = SimConfig { seed, protocol, ..base.clone() };
                    Run::from_trace(&run_simulation(&c).expect("simulation"))
                })
                .collect()
        })
        .collect()
}

const LEACH: usize = 0;
const EBACC: usize = 1;
const PS: usize = 2;
const TS: usize = 3;

fn lifetime(r: &Run) -> f64 {
    r.first_death.map_or(f64::INFINITY, |x| x as f64)
}

fn criterion_1(runs: &[Vec<Run>]) -> Outcome {
    let life: Vec<Vec<f64>> = runs.iter().map(|p| p.iter().map(lifetime).collect()).collect();
    let med: Vec<f64> = life.iter().map(|l| median(l.clone())).collect();
    let n = SEEDS as usize;
    let ebacc_wins = (0..n).filter(|&i| life[EBACC][i] > life[LEACH][i]).count();
    let ebcnf_wins = (0..n).filter(|&i| life[PS][i].min(life[TS][i]) > life[EBACC][i]).count();
    let pass = med[EBACC] > med[LEACH] && med[PS].min(med[TS]) > med[EBACC] && ebacc_wins >= 8 && ebcnf_wins >= 8;
    outcome(
        pass,
        format!(
            "median first death leach={} ebacc={} ps={} ts={}; ebacc>leach in {ebacc_wins}/{n}, min(ps,ts)>ebacc in {ebcnf_wins}/{n}",
            med[LEACH], med[EBACC], med[PS], med[TS]
        ),
    )
}

fn criterion_2() -> Outcome {
    let base = SimConfig { harvest: HarvestParams { ps: 1e-5, ..HarvestParams::default() }, ..SimConfig::default() };
    // Near-NC node: WET credit per frame against one member frame of traffic.
    let nearest = Point::new(base.field_width, base.nc_position.y);
    let credit = frame::wet_phase(
        &[WetNode { position: nearest, residual: 0.0, capacity: base.initial_energy, alive: true }],
        base.nc_position,
        base.nc_power,
        base.slot_params().t_wet,
        &base.channel,
        &base.harvest,
    )[0];
    let per_frame = base.frame_duration / base.packet_interval;
    let consumption = per_frame * energy::tx_energy(&base.consumption());
    let runs = batch(&base);
    let survivors = |k: usize| -> Vec<usize> {
        runs[k].iter().map(|r| r.node_count - r.dead.last().copied().unwrap_or(0)).collect()
    };
    let ebcnf_alive = [PS, TS].iter().all(|&k| survivors(k).iter().all(|&s| s > 0));
    let baselines_dead = [LEACH, EBACC].iter().all(|&k| survivors(k).iter().all(|&s| s == 0));
    let monotone = runs.iter().flatten().all(|r| r.dead.windows(2).all(|w| w[0] <= w[1]));
    outcome(
        credit >= consumption && ebcnf_alive && baselines_dead && monotone,
        format!(
            "Ps=1e-5 W: near-NC credit {credit:.3e} J >= member use {consumption:.3e} J; survivors at end ps={:?} ts={:?}; leach/ebacc extinct={baselines_dead}; dead counts monotone={monotone}",
            survivors(PS),
            survivors(TS)
        ),
    )
}

fn criterion_3(runs: &[Vec<Run>]) -> Outcome {
    let horizon =
        median(runs[LEACH].iter().map(|r| r.extinction().unwrap_or(r.residual.len()) as f64).collect()) as usize;
    let mut violations = 0;
    for r in 0..horizon {
        let e = median(runs[EBACC].iter().map(|x| x.residual_at(r)).collect());
        let l = median(runs[LEACH].iter().map(|x| x.residual_at(r)).collect());
        if e < l {
            violations += 1;
        }
    }
    let share = violations as f64 / horizon.max(1) as f64;
    outcome(share < 0.05, format!("ebacc below leach in {violations}/{horizon} rounds ({:.1}%)", 100.0 * share))
}

fn criterion_4(by_interval: &[Vec<Vec<Run>>]) -> Outcome {
    let rate: Vec<Vec<f64>> = (0..4)
        .map(|k| {
            by_interval
                .iter()
                .map(|runs| median(runs[k].iter().map(|r| r.summary.success_rate.unwrap_or(0.0)).collect()))
                .collect()
        })
        .collect();
    let pairs = 4 * (INTERVALS.len() - 1);
    let violations: usize = rate.iter().map(|row| row.windows(2).filter(|w| w[1] < w[0]).count()).sum();
    let ordered = (0..INTERVALS.len())
        .filter(|&j| rate[PS][j].min(rate[TS][j]) >= rate[EBACC][j] && rate[EBACC][j] >= rate[LEACH][j])
        .count();
    let fmt = |row: &Vec<f64>| row.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    outcome(
        (violations as f64) < 0.1 * pairs as f64 && ordered == INTERVALS.len(),
        format!(
            "adjacent violations {violations}/{pairs}; ordering holds at {ordered}/{} intervals; leach [{}] ebacc [{}] ps [{}] ts [{}]",
            INTERVALS.len(),
            fmt(&rate[LEACH]),
            fmt(&rate[EBACC]),
            fmt(&rate[PS]),
            fmt(&rate[TS])
        ),
    )
}

fn criterion_5(runs: &[Vec<Run>]) -> Outcome {
    let thr: Vec<f64> = runs.iter().map(|p| median(p.iter().map(|r| r.summary.throughput).collect())).collect();
    let close = (thr[TS] - thr[PS]).abs() <= 0.1 * thr[TS].max(thr[PS]);
    let pass = close && thr[PS].min(thr[TS]) > thr[EBACC] && thr[EBACC] > thr[LEACH];
    outcome(
        pass,
        format!(
            "median bit/s leach={:.0} ebacc={:.0} ps={:.0} ts={:.0}; ps/ts within 10%={close}",
            thr[LEACH], thr[EBACC], thr[PS], thr[TS]
        ),
    )
}

fn criterion_6(runs: &[Vec<Run>]) -> Outcome {
    let measured = runs.iter().flatten().map(|r| r.overhead.len()).min().unwrap_or(0);
    let mut bad = 0;
    for r in 0..measured {
        let m: Vec<f64> =
            runs.iter().map(|p| median(p.iter().map(|x| x.overhead[r].unwrap_or(0.0)).collect())).collect();
        if !(m[PS] > m[EBACC] && m[TS] > m[EBACC] && m[EBACC] > m[LEACH]) {
            bad += 1;
        }
    }
    let last: Vec<f64> =
        runs.iter().map(|p| median(p.iter().map(|r| r.summary.overhead_ratio.unwrap_or(0.0)).collect())).collect();
    outcome(
        bad == 0 && measured > 0,
        format!(
            "ordering violated in {bad}/{measured} rounds; final ratios leach={:.4} ebacc={:.4} ps={:.4} ts={:.4}",
            last[LEACH], last[EBACC], last[PS], last[TS]
        ),
    )
}

/// Rate over one slot, evaluated directly at the 1 THz band centre.
fn oracle_rate(energy: f64, slot: f64, d: f64) -> f64 {
    let f = 1e12;
    let pl = (4.0 * std::f64::consts::PI * f * d / 3e8).powi(2) * (0.25 * d).exp();
    let noise = 1.380649e-23 * 296.0 * -(-0.25 * d).exp_m1();
    (energy / (pl * noise)).ln_1p() / std::f64::consts::LN_2 / slot
}

fn random_cluster(rng: &mut ChaCha8Rng) -> ClusterLinkState {
    let k = rng.random_range(2..=5);
    ClusterLinkState {
        ch_id: 0,
        members: (1..=k)
            .map(|id| {
                let residual = rng.random_range(1e-12..1e-11);
                MemberLink {
                    id,
                    residual,
                    consumption: rng.random_range(0.0..0.5) * residual,
                    harvested: rng.random_range(0.0..1e-12),
                    distance: rng.random_range(0.5e-3..3e-3),
                }
            })
            .collect(),
        ch_residual: rng.random_range(0.0..2e-12),
        ch_harvested: 0.0,
        ch_consumption: rng.random_range(0.0..1e-12),
        d_p: rng.random_range(2e-3..6e-3),
        t_sc: 1e-3,
        t_cc: rng.random_range(1e-3..5e-3),
        t_wet: 1e-3,
        surplus_share: 1.0,
        rate_mode: RateMode::BandCenter,
    }
}

/// Bottleneck rate with one coefficient shared by every member, computed
/// from the closed-form expressions.
fn shared_coefficient_rate(s: &ClusterLinkState, c: f64, mechanism: Mechanism) -> f64 {
    let mut transfer = 0.0;
    let mut rate = f64::INFINITY;
    for m in &s.members {
        let energy = m.residual + m.harvested - m.consumption;
        if energy < 0.0 {
            continue;
        }
        transfer += (1.0 - c) * energy;
        rate = rate.min(match mechanism {
            Mechanism::PowerSplitting => oracle_rate(c * energy, s.t_sc, m.distance),
            Mechanism::TimeSwitching => oracle_rate(energy, s.t_sc, m.distance) / c,
        });
    }
    let ch_energy = s.ch_residual + s.ch_harvested + transfer - s.ch_consumption;
    let ch = if ch_energy < 0.0 { 0.0 } else { oracle_rate(ch_energy, s.t_cc, s.d_p) };
    rate.min(ch)
}

fn grid_oracle(s: &ClusterLinkState, mechanism: Mechanism) -> (f64, f64) {
    let first = match mechanism {
        Mechanism::PowerSplitting => 0,
        // A zero time share is outside the rate formula's domain.
        Mechanism::TimeSwitching => 1,
    };
    (first..=1000)
        .map(|i| {
            let c = i as f64 * 1e-3;
            (c, shared_coefficient_rate(s, c, mechanism))
        })
        .fold((1.0, f64::NEG_INFINITY), |best, x| if x.1 > best.1 { x } else { best })
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let channel = ChannelParams::default();
    let options = OptimizerOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let clusters: Vec<ClusterLinkState> = (0..30).map(|_| random_cluster(&mut rng)).collect();
    let mut lines = Vec::new();
    let mut pass = true;
    for mechanism in [Mechanism::PowerSplitting, Mechanism::TimeSwitching] {
        let mut worst = f64::INFINITY;
        let mut below_baseline = 0;
        for s in &clusters {
            let got = swipt::optimize_coefficients(s, &channel, mechanism, options).expect("optimizer");
            let (_, best) = grid_oracle(s, mechanism);
            let base = swipt::cluster_rate_no_swipt(s, &channel).unwrap_or(0.0);
            worst = worst.min(got.achieved_rate / best);
            if got.achieved_rate < base - options.tol * base {
                below_baseline += 1;
            }
        }
        let ok = worst >= 0.99 && below_baseline == 0;
        pass &= ok;
        lines.push(format!("{mechanism:?}: worst optimizer/grid {worst:.4}, below no-SWIPT {below_baseline}/30"));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 10.0;
    outcome(pass, format!("{}; {secs:.2} s", lines.join("; ")))
}

fn criterion_8() -> Outcome {
    let h = HarvestParams::default();
    let gamma_expected = 1.0 / (1.0 + (6400.0f64 * 0.003).exp());
    let gamma_err = (h.gamma() - gamma_expected).abs() / gamma_expected;
    let c = ChannelParams::default();
    let spreading = channel::spreading_loss(1e12, 1e-3, &c).unwrap();
    let noise = channel::noise_psd(1e12, 1e-3, &c).unwrap();
    let spreading_err = (spreading / 1754.6 - 1.0).abs();
    let noise_err = (noise / 1.021e-24 - 1.0).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut out_of_bounds = 0;
    for _ in 0..100_000 {
        let t = rng.random_range(0.0..1.0);
        let e = energy::harvested_energy(
            rng.random_range(0.0..=1.0),
            10f64.powf(rng.random_range(-9.0..0.0)),
            10f64.powf(rng.random_range(-4.0..4.0)),
            t,
            &h,
        );
        if !(0.0..=t * h.ps).contains(&e) {
            out_of_bounds += 1;
        }
    }
    outcome(
        gamma_err <= 1e-12 && spreading_err <= 1e-3 && noise_err <= 1e-3 && out_of_bounds == 0,
        format!(
            "gamma rel err {gamma_err:.1e}; spreading {spreading:.4} ({spreading_err:.1e}); noise {noise:.4e} ({noise_err:.1e}); harvest outside [0, T Ps] {out_of_bounds}/100000"
        ),
    )
}

/// Head id with its members, in ascending head order.
type Clusters = Vec<(usize, Vec<usize>)>;

/// Election recomputed as a synchronous message exchange: in every step
/// each remaining candidate that outranks all of its remaining neighbours
/// becomes head and silences them, until no candidate remains.
fn election_oracle(
    nodes: &[ElectionNode],
    round: u64,
    params: &ElectionParams,
    seed: u64,
) -> (Clusters, BTreeMap<usize, f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nc = params.nc_position;
    let live: Vec<&ElectionNode> = nodes.iter().filter(|n| n.alive).collect();
    let d = |n: &ElectionNode| n.position.distance(&nc);
    let d_max = live.iter().map(|n| d(n)).fold(f64::NEG_INFINITY, f64::max);
    let d_min = live.iter().map(|n| d(n)).fold(f64::INFINITY, f64::min);
    let epoch = (1..).find(|&k| k as f64 * params.p >= 1.0 - 1e-12).unwrap() as u64;
    let mut radius = BTreeMap::new();
    let mut candidates = Vec::new();
    for n in &live {
        let draw: f64 = rng.random();
        let prox = if d_max > d_min { (d_max - d(n)) / (d_max - d_min) } else { 1.0 };
        let denom = 1.0 - params.p * (round % epoch) as f64;
        let rot = if denom <= 0.0 { 1.0 } else { (params.p / denom).min(1.0) };
        if draw < (rot * prox).clamp(0.0, 1.0) {
            let gap = (params.e_max - n.residual) / params.e_max;
            let r = ((1.0 - params.a * prox - params.b * gap) * params.r0).clamp(0.0, params.r0);
            radius.insert(n.id, r);
            candidates.push(n.id);
        }
    }
    let outranks = |a: usize, b: usize| {
        let (ea, eb) = (nodes[a].residual, nodes[b].residual);
        ea > eb || (ea == eb && a < b)
    };
    let adjacent = |a: usize, b: usize| nodes[a].position.distance(&nodes[b].position) < radius[&a].max(radius[&b]);
    let mut remaining: BTreeSet<usize> = candidates.into_iter().collect();
    let mut heads = BTreeSet::new();
    while !remaining.is_empty() {
        let winners: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&a| remaining.iter().all(|&b| b == a || !adjacent(a, b) || outranks(a, b)))
            .collect();
        assert!(!winners.is_empty(), "exchange must make progress");
        for &w in &winners {
            heads.insert(w);
            remaining.remove(&w);
        }
        remaining.retain(|&b| !winners.iter().any(|&w| adjacent(w, b)));
    }
    if heads.is_empty() {
        let best = live.iter().fold(live[0], |b, n| if n.residual > b.residual { n } else { b });
        heads.insert(best.id);
    }
    let mut clusters: BTreeMap<usize, Vec<usize>> = heads.iter().map(|&h| (h, Vec::new())).collect();
    for n in &live {
        if heads.contains(&n.id) {
            continue;
        }
        let h = heads
            .iter()
            .copied()
            .min_by(|&a, &b| {
                n.position
                    .distance(&nodes[a].position)
                    .total_cmp(&n.position.distance(&nodes[b].position))
                    .then(a.cmp(&b))
            })
            .unwrap();
        clusters.get_mut(&h).unwrap().push(n.id);
    }
    (clusters.into_iter().collect(), radius)
}

fn criterion_9() -> Outcome {
    let params = ElectionParams { p: SimConfig::default().p, ..ElectionParams::default() };
    let mut mismatches = 0;
    let mut separation_failures = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let nodes: Vec<ElectionNode> = (0..20)
            .map(|id| ElectionNode {
                id,
                position: Point::new(rng.random_range(0.0..10e-3), rng.random_range(0.0..10e-3)),
                residual: rng.random_range(1e-6..50e-6),
                alive: rng.random_range(0.0..1.0) < 0.95,
                last_head_round: None,
            })
            .collect();
        if nodes.iter().all(|n| !n.alive) {
            continue;
        }
        let round = rng.random_range(0..30);
        let got = clustering::ebacc_elect(&nodes, round, &params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let (expected, radius) = election_oracle(&nodes, round, &params, seed);
        let actual: Clusters = got.partition.clusters.iter().map(|c| (c.head, c.members.clone())).collect();
        if actual != expected {
            mismatches += 1;
        }
        let heads: Vec<usize> = got.partition.heads().collect();
        let r = |h: usize| radius.get(&h).copied().unwrap_or(0.0);
        for (i, &a) in heads.iter().enumerate() {
            for &b in &heads[i + 1..] {
                if nodes[a].position.distance(&nodes[b].position) < r(a).max(r(b)) {
                    separation_failures += 1;
                }
            }
        }
    }

    let config = SimConfig::default();
    let deployed = deploy(&config).unwrap();
    let mut nodes: Vec<ElectionNode> = deployed
        .iter()
        .map(|n| ElectionNode {
            id: n.id,
            position: n.position,
            residual: n.residual,
            alive: true,
            last_head_round: None,
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut total = 0usize;
    for round in 0..1000u64 {
        let e = clustering::leach_elect(&nodes, round, &params, &mut rng).unwrap();
        for h in e.partition.heads() {
            nodes[h].last_head_round = Some(round);
            total += 1;
        }
    }
    let mean = total as f64 / 1000.0;
    let target = nodes.len() as f64 * params.p;
    let dev = (mean / target - 1.0).abs();
    outcome(
        mismatches == 0 && separation_failures == 0 && dev <= 0.15,
        format!(
            "oracle mismatches {mismatches}/100; separation failures {separation_failures}; leach mean heads {mean:.2} vs n*p {target:.2} ({:.1}%)",
            100.0 * dev
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut identical = true;
    for protocol in Protocol::ALL {
        let c = SimConfig { node_count: 50, rounds: 200, seed: 42, protocol, ..SimConfig::default() };
        let a = format!("{:?}", run_simulation(&c).unwrap());
        let b = format!("{:?}", run_simulation(&c).unwrap());
        identical &= a == b;
    }
    let mut worst_round: f64 = 0.0;
    let mut worst_total: f64 = 0.0;
    for protocol in Protocol::ALL {
        let c = SimConfig { node_count: 50, rounds: 200, seed: 42, protocol, ..SimConfig::default() };
        let sim = Simulation::new(c.clone()).unwrap();
        let trace = sim.run(c.rounds).unwrap();
        for a in &trace.audits {
            worst_round = worst_round.max(a.relative_error());
        }
        let debits: f64 = trace.audits.iter().map(|a| a.debits).sum();
        let credits: f64 = trace.audits.iter().map(|a| a.credits).sum();
        let start = c.initial_energy * c.node_count as f64;
        let end: f64 = trace.final_nodes.iter().map(|n| n.residual).sum();
        worst_total = worst_total.max(((debits - credits) - (start - end)).abs() / start);
    }
    outcome(
        identical && worst_round <= 1e-12 && worst_total <= 1e-12,
        format!("repeat runs identical={identical}; worst per-round audit error {worst_round:.1e}; worst whole-run error {worst_total:.1e}"),
    )
}

fn main() {
    let start = Instant::now();
    let base = SimConfig::default();
    let by_interval: Vec<Vec<Vec<Run>>> =
        INTERVALS.iter().map(|&packet_interval| batch(&SimConfig { packet_interval, ..base.clone() })).collect();
    let default_index = INTERVALS.iter().position(|&i| i == base.packet_interval).expect("default interval is swept");
    let runs = &by_interval[default_index];

    let results = [
        ("1 lifetime ordering", criterion_1(runs)),
        ("2 survivor plateau", criterion_2()),
        ("3 residual-energy dominance", criterion_3(runs)),
        ("4 success-rate monotonicity", criterion_4(&by_interval)),
        ("5 throughput ordering", criterion_5(runs)),
        ("6 overhead ordering", criterion_6(runs)),
        ("7 optimizer vs grid oracle", criterion_7()),
        ("8 analytic unit values", criterion_8()),
        ("9 election correctness", criterion_9()),
        ("10 determinism and conservation", criterion_10()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("criterion {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
