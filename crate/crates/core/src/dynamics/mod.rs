//! Event-driven simulation of the zero range process on the ring.
//!
//! A site holding `k` particles sends one to each neighbour at rate
//! `g(k)/2`, so it fires at total rate `g(k)`. The departure site is drawn
//! from a Fenwick tree over site rates; the running total is kept by deltas
//! and recomputed from scratch every [`RESYNC_EVENTS`] events.

mod fenwick;

use std::collections::HashMap;

use rand::Rng;
use rand_distr::Exp1;

pub use fenwick::Fenwick;

use crate::canonical::OccupancyConfig;
use crate::ensemble::{jump_rate, log_stationary_weight, Alpha};
use crate::error::{Result, ZrpError};
use crate::exec::Exec;
use crate::logconv::log_sum_exp;
use crate::rng::seed_streams;
use crate::series::compensated_sum;

pub const RESYNC_EVENTS: u64 = 1 << 20;
pub const DEFAULT_STATE_CAP: u128 = 1_000_000;

/// How holding intervals are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClockMode {
    /// Exponential holding times; statistics are time averages, which are
    /// stationary under `mu_{N,L}`.
    #[default]
    TimeWeighted,
    /// No clock sampling; every visited state counts once. These are jump
    /// chain statistics and are not `mu_{N,L}`-stationary.
    EventCount,
}

impl ClockMode {
    pub fn name(self) -> &'static str {
        match self {
            ClockMode::TimeWeighted => "time",
            ClockMode::EventCount => "events",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Events(u64),
    Time(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub from: usize,
    pub to: usize,
    /// +1 or -1 around the ring.
    pub direction: i8,
    /// Holding time before the jump (1 in event-count mode).
    pub holding: f64,
}

#[derive(Debug, Clone)]
pub struct DynState {
    alpha: Alpha,
    config: OccupancyConfig,
    rates: Fenwick,
    total_rate: f64,
    time: f64,
    event_count: u64,
    since_sync: u64,
    /// Number of sites at each occupancy, for O(1) maximum tracking.
    level_counts: Vec<u64>,
    max: u64,
    /// Time-integrated occupancy per site, flushed lazily.
    site_area: Vec<f64>,
    site_stamp: Vec<f64>,
}

impl DynState {
    pub fn new(config: OccupancyConfig, alpha: Alpha) -> Self {
        let rates: Vec<f64> = config.occupancies().iter().map(|&k| jump_rate(alpha, k)).collect();
        let total_rate = compensated_sum(rates.iter().copied());
        let mut level_counts = vec![0; config.total() as usize + 1];
        for &k in config.occupancies() {
            level_counts[k as usize] += 1;
        }
        let max = *config.occupancies().iter().max().expect("L >= 1");
        let l = config.len();
        DynState {
            alpha,
            config,
            rates: Fenwick::new(rates),
            total_rate,
            time: 0.0,
            event_count: 0,
            since_sync: 0,
            level_counts,
            max,
            site_area: vec![0.0; l],
            site_stamp: vec![0.0; l],
        }
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn config(&self) -> &OccupancyConfig {
        &self.config
    }

    /// The incrementally maintained total rate.
    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    /// `sum_x g(eta_x)` recomputed from the configuration.
    pub fn fresh_total_rate(&self) -> f64 {
        compensated_sum(self.config.occupancies().iter().map(|&k| jump_rate(self.alpha, k)))
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn event_count(&self) -> u64 {
        self.event_count
    }

    pub fn max_occupancy(&self) -> u64 {
        self.max
    }

    /// Rebuilds the rate tree and total from the configuration.
    pub fn resync(&mut self) {
        for x in 0..self.config.len() {
            let r = jump_rate(self.alpha, self.config.get(x));
            self.rates.set(x, r);
        }
        self.rates.rebuild();
        self.total_rate = self.fresh_total_rate();
        self.since_sync = 0;
    }

    fn propose<R: Rng + ?Sized>(&self, rng: &mut R, mode: ClockMode) -> Result<Jump> {
        if self.total_rate <= 0.0 {
            return Err(ZrpError::Absorbing);
        }
        let holding = match mode {
            ClockMode::TimeWeighted => {
                let e: f64 = rng.sample(Exp1);
                e / self.total_rate
            }
            ClockMode::EventCount => 1.0,
        };
        let u = rng.random::<f64>() * self.total_rate;
        let from = self.rates.find(u);
        let l = self.config.len();
        let (to, direction) = if rng.random::<bool>() {
            ((from + 1) % l, 1)
        } else {
            ((from + l - 1) % l, -1)
        };
        Ok(Jump {
            from,
            to,
            direction,
            holding,
        })
    }

    fn touch(&mut self, x: usize) {
        self.site_area[x] += self.config.get(x) as f64 * (self.time - self.site_stamp[x]);
        self.site_stamp[x] = self.time;
    }

    fn apply(&mut self, jump: &Jump) {
        self.time += jump.holding;
        self.event_count += 1;
        if jump.from == jump.to {
            return;
        }
        self.touch(jump.from);
        self.touch(jump.to);
        let (a, b) = (self.config.get(jump.from), self.config.get(jump.to));
        self.config.move_particle(jump.from, jump.to);
        self.level_counts[a as usize] -= 1;
        self.level_counts[a as usize - 1] += 1;
        self.level_counts[b as usize] -= 1;
        self.level_counts[b as usize + 1] += 1;
        if b + 1 > self.max {
            self.max = b + 1;
        } else if a == self.max && self.level_counts[a as usize] == 0 {
            self.max = a - 1;
        }
        for (x, k) in [(jump.from, a - 1), (jump.to, b + 1)] {
            let r = jump_rate(self.alpha, k);
            self.total_rate += r - self.rates.value(x);
            self.rates.set(x, r);
        }
        self.since_sync += 1;
        if self.since_sync >= RESYNC_EVENTS {
            self.resync();
        }
    }

    /// Time-integrated occupancy of every site up to the current clock.
    pub fn site_areas(&mut self) -> Vec<f64> {
        for x in 0..self.config.len() {
            self.touch(x);
        }
        self.site_area.clone()
    }
}

/// One transition: samples the holding time and the move, then applies it.
pub fn step_event<R: Rng + ?Sized>(state: &mut DynState, rng: &mut R, mode: ClockMode) -> Result<Jump> {
    let jump = state.propose(rng, mode)?;
    state.apply(&jump);
    Ok(jump)
}

/// Receives the trajectory as it is generated.
pub trait Collector {
    /// `config` was occupied for `weight` (a holding time, or 1 per event).
    fn hold(&mut self, config: &OccupancyConfig, weight: f64);
    /// `jump` has just produced `after`.
    fn jump(&mut self, _after: &OccupancyConfig, _jump: &Jump) {}
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats {
    pub mode: ClockMode,
    pub elapsed: f64,
    pub events: u64,
    pub plus_moves: u64,
    pub minus_moves: u64,
    /// Sum of all holding weights fed to collectors.
    pub weight_total: f64,
    /// Weighted average of `M_L / N`.
    pub mean_max_share: f64,
    /// Weighted average occupancy of each site.
    pub site_means: Vec<f64>,
    pub final_config: OccupancyConfig,
    /// `|total_rate - fresh| / fresh` at the end of the run.
    pub rate_drift: f64,
}

/// Runs the process from `initial` up to `horizon`.
pub fn simulate<R: Rng + ?Sized>(
    initial: OccupancyConfig,
    alpha: Alpha,
    horizon: Horizon,
    mode: ClockMode,
    rng: &mut R,
    collectors: &mut [&mut dyn Collector],
) -> Result<TrajectoryStats> {
    match horizon {
        Horizon::Events(_) => {}
        Horizon::Time(t) if t > 0.0 && t.is_finite() => {}
        Horizon::Time(t) => {
            return Err(ZrpError::InvalidArgument(format!("time horizon {t} must be positive")));
        }
    }
    let n = initial.total();
    let mut state = DynState::new(initial, alpha);
    let (mut plus, mut minus) = (0u64, 0u64);
    let mut weight_total = 0.0;
    let mut max_area = 0.0;
    loop {
        if let Horizon::Events(k) = horizon {
            if state.event_count >= k {
                break;
            }
        }
        let jump = match state.propose(rng, mode) {
            Ok(j) => j,
            Err(ZrpError::Absorbing) => break,
            Err(e) => return Err(e),
        };
        let mut w = jump.holding;
        let last = matches!(horizon, Horizon::Time(t) if state.time + w >= t);
        if let Horizon::Time(t) = horizon {
            if last {
                w = t - state.time;
            }
        }
        for c in collectors.iter_mut() {
            c.hold(&state.config, w);
        }
        weight_total += w;
        max_area += w * state.max as f64;
        if last {
            state.time += w;
            break;
        }
        state.apply(&jump);
        if jump.direction > 0 {
            plus += 1;
        } else {
            minus += 1;
        }
        for c in collectors.iter_mut() {
            c.jump(&state.config, &jump);
        }
    }
    let elapsed = state.time;
    let areas = state.site_areas();
    let site_means = areas
        .iter()
        .map(|a| if elapsed > 0.0 { a / elapsed } else { 0.0 })
        .collect();
    let fresh = state.fresh_total_rate();
    let rate_drift = if fresh > 0.0 {
        (state.total_rate - fresh).abs() / fresh
    } else {
        state.total_rate.abs()
    };
    Ok(TrajectoryStats {
        mode,
        elapsed,
        events: state.event_count,
        plus_moves: plus,
        minus_moves: minus,
        weight_total,
        mean_max_share: if weight_total > 0.0 && n > 0 {
            max_area / weight_total / n as f64
        } else {
            0.0
        },
        site_means,
        final_config: state.config,
        rate_drift,
    })
}

/// Independent replicas, replica `i` on stream `(seed, job, i)`; results are
/// returned in replica order whatever the execution policy.
#[allow(clippy::too_many_arguments)]
pub fn simulate_replicas(
    initial: &OccupancyConfig,
    alpha: Alpha,
    horizon: Horizon,
    mode: ClockMode,
    seed: u64,
    job: u32,
    replicas: u32,
    exec: Exec,
) -> Result<Vec<TrajectoryStats>> {
    exec.map(replicas as usize, |i| {
        let mut rng = seed_streams(seed, job, i as u32);
        simulate(initial.clone(), alpha, horizon, mode, &mut rng, &mut [])
    })
    .into_iter()
    .collect()
}

/// Weighted occupation of each state of a small, fully enumerated space,
/// plus transition counts between states.
#[derive(Debug, Clone)]
pub struct StateOccupation {
    index: HashMap<Vec<u64>, usize>,
    weights: Vec<f64>,
    transitions: HashMap<(usize, usize), u64>,
    current: Option<usize>,
}

impl StateOccupation {
    pub fn new(states: &[OccupancyConfig]) -> Self {
        StateOccupation {
            index: states
                .iter()
                .enumerate()
                .map(|(i, s)| (s.occupancies().to_vec(), i))
                .collect(),
            weights: vec![0.0; states.len()],
            transitions: HashMap::new(),
            current: None,
        }
    }

    fn lookup(&self, c: &OccupancyConfig) -> usize {
        *self
            .index
            .get(c.occupancies())
            .expect("trajectory left the enumerated space")
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Normalized occupation law in enumeration order.
    pub fn law(&self) -> Vec<f64> {
        let total = compensated_sum(self.weights.iter().copied());
        self.weights.iter().map(|w| w / total).collect()
    }

    /// Number of observed jumps from state `i` to state `j`.
    pub fn flux(&self, i: usize, j: usize) -> u64 {
        self.transitions.get(&(i, j)).copied().unwrap_or(0)
    }

    pub fn transitions(&self) -> &HashMap<(usize, usize), u64> {
        &self.transitions
    }
}

impl Collector for StateOccupation {
    fn hold(&mut self, config: &OccupancyConfig, weight: f64) {
        let i = match self.current {
            Some(i) => i,
            None => {
                let i = self.lookup(config);
                self.current = Some(i);
                i
            }
        };
        self.weights[i] += weight;
    }

    fn jump(&mut self, after: &OccupancyConfig, _jump: &Jump) {
        let j = self.lookup(after);
        if let Some(i) = self.current {
            *self.transitions.entry((i, j)).or_insert(0) += 1;
        }
        self.current = Some(j);
    }
}

/// `C(n + l - 1, l - 1)`, saturating at `u128::MAX`.
pub fn state_space_size(n: u64, l: usize) -> u128 {
    if l == 0 {
        return 0;
    }
    let k = (l - 1) as u128;
    let top = n as u128 + k;
    let k = k.min(n as u128);
    let mut c: u128 = 1;
    for i in 0..k {
        // c * (top - i) / (i + 1) stays integral at every step.
        c = match c.checked_mul(top - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// All compositions of `n` into `l` parts, in decreasing lexicographic order
/// of `(eta_1, eta_2, ...)`: for `(2, 2)` that is (2,0), (1,1), (0,2).
pub fn enumerate_state_space(n: u64, l: usize, cap: u128) -> Result<Vec<OccupancyConfig>> {
    if l == 0 {
        return Err(ZrpError::InvalidArgument("L must be >= 1".into()));
    }
    let size = state_space_size(n, l);
    if size > cap {
        return Err(ZrpError::StateSpaceTooLarge { size, cap });
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut cur = vec![0u64; l];
    fn rec(pos: usize, remaining: u64, cur: &mut Vec<u64>, out: &mut Vec<OccupancyConfig>) {
        if pos + 1 == cur.len() {
            cur[pos] = remaining;
            out.push(OccupancyConfig::new(cur.clone()).expect("L >= 1"));
            return;
        }
        for k in (0..=remaining).rev() {
            cur[pos] = k;
            rec(pos + 1, remaining - k, cur, out);
        }
    }
    rec(0, n, &mut cur, &mut out);
    Ok(out)
}

/// `mu_{N,L}` evaluated on each of `states`, normalized over the list.
pub fn stationary_law(alpha: Alpha, states: &[OccupancyConfig]) -> Vec<f64> {
    let logs: Vec<f64> = states
        .iter()
        .map(|s| s.occupancies().iter().map(|&k| log_stationary_weight(alpha, k)).sum())
        .collect();
    let z = log_sum_exp(&logs);
    logs.iter().map(|v| (v - z).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    #[test]
    fn enumeration_sizes_and_order() {
        let s = enumerate_state_space(2, 2, DEFAULT_STATE_CAP).unwrap();
        let v: Vec<&[u64]> = s.iter().map(|c| c.occupancies()).collect();
        assert_eq!(v, vec![&[2, 0][..], &[1, 1], &[0, 2]]);
        assert_eq!(enumerate_state_space(4, 3, DEFAULT_STATE_CAP).unwrap().len(), 15);
        assert_eq!(enumerate_state_space(5, 4, DEFAULT_STATE_CAP).unwrap().len(), 56);
        assert_eq!(state_space_size(10, 5), 1001);
        assert_eq!(state_space_size(0, 9), 1);
        assert_eq!(state_space_size(100, 100), u128::MAX);
    }

    #[test]
    fn enumeration_refuses_large_spaces() {
        let r = enumerate_state_space(60, 20, DEFAULT_STATE_CAP);
        assert!(matches!(r, Err(ZrpError::StateSpaceTooLarge { .. })));
    }

    #[test]
    fn step_examples() {
        let mut rng = seed_streams(5, 0, 0);
        let st = DynState::new(OccupancyConfig::new(vec![2, 1, 1]).unwrap(), a(1.0));
        assert_eq!(st.total_rate(), 4.0);
        let mut from_first = 0;
        for _ in 0..100_000 {
            let mut s = st.clone();
            if step_event(&mut s, &mut rng, ClockMode::TimeWeighted).unwrap().from == 0 {
                from_first += 1;
            }
        }
        assert!((from_first as f64 / 1e5 - 0.5).abs() < 0.01);

        let mut s = DynState::new(OccupancyConfig::new(vec![4, 0, 0]).unwrap(), a(2.0));
        assert!((s.total_rate() - 16.0 / 9.0).abs() < 1e-15);
        let j = step_event(&mut s, &mut rng, ClockMode::TimeWeighted).unwrap();
        assert_eq!(j.from, 0);
        assert_eq!(s.config().get(0), 3);

        let mut z = DynState::new(OccupancyConfig::new(vec![0, 0, 0]).unwrap(), a(2.0));
        assert_eq!(
            step_event(&mut z, &mut rng, ClockMode::TimeWeighted),
            Err(ZrpError::Absorbing)
        );
    }

    #[test]
    fn empty_system_returns_at_once() {
        let mut rng = seed_streams(5, 0, 1);
        let st = simulate(
            OccupancyConfig::new(vec![0; 4]).unwrap(),
            a(1.0),
            Horizon::Events(1000),
            ClockMode::TimeWeighted,
            &mut rng,
            &mut [],
        )
        .unwrap();
        assert_eq!(st.events, 0);
        assert_eq!(st.elapsed, 0.0);
    }

    #[test]
    fn time_horizon_is_exact() {
        let mut rng = seed_streams(5, 0, 2);
        let states = enumerate_state_space(4, 3, DEFAULT_STATE_CAP).unwrap();
        let mut occ = StateOccupation::new(&states);
        let st = simulate(
            OccupancyConfig::condensed(4, 3).unwrap(),
            a(2.0),
            Horizon::Time(1000.0),
            ClockMode::TimeWeighted,
            &mut rng,
            &mut [&mut occ],
        )
        .unwrap();
        assert_eq!(st.elapsed, 1000.0);
        let w = compensated_sum(occ.weights().iter().copied());
        assert!((w - 1000.0).abs() < 1e-9);
        assert!((st.site_means.iter().sum::<f64>() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn max_tracking_matches_scan() {
        let mut rng = seed_streams(5, 0, 3);
        let mut s = DynState::new(OccupancyConfig::balanced(37, 7).unwrap(), a(1.5));
        for _ in 0..20_000 {
            step_event(&mut s, &mut rng, ClockMode::EventCount).unwrap();
            assert_eq!(s.max_occupancy(), *s.config().occupancies().iter().max().unwrap());
        }
    }
}
