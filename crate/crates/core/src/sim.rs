//! Scenarios, echo synthesis, the closed detection/learning loop, and Monte Carlo.
//!
//! Random streams are addressed by role so that paired runs see identical draws:
//! clutter of bin `b` at pulse `k` of run `r` always comes from
//! `(BinClutter, r, k, b)`, whatever the beamformer or thread schedule, and the
//! agent's exploration has its own stream. An agent run and an omnidirectional run
//! with the same seed therefore face the same disturbance and target phases.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::agent::{observe_state, reward, sarsa_update, select_action, top_m_bins, AgentConfig, QTable};
use crate::array::{AngleGrid, ArrayGeometry, SpatialFrequency};
use crate::beamform::{max_power_weights_with, omni_weights, BeamWeights, DesignMatrix};
use crate::clutter::{draw_disturbance_columns, paper_model, DisturbanceModel};
use crate::detector::{scan_with, AlphaMode, BinProjector, DetectionMap, QuadFormEstimator};
use crate::error::{Error, Result};
use crate::numerics::{chi2_threshold, Domain, RngStream};
use crate::scalar::{phasor, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target<T> {
    pub freq: SpatialFrequency<T>,
    pub snr_db: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub geometry: ArrayGeometry,
    pub grid: AngleGrid<T>,
    pub targets: Vec<Target<T>>,
    pub disturbance: DisturbanceModel<T>,
    pub p_fa: T,
    pub p_t: T,
    pub k_pulses: usize,
    pub agent: AgentConfig,
    pub k_sec: usize,
    pub mc_runs: usize,
    pub alpha_mode: AlphaMode,
    pub design: DesignMatrix,
    /// Diagonal loading relative to the mean secondary-snapshot energy per entry.
    pub relative_loading: T,
    /// Trailing steps averaged into the per-target detection probability.
    pub pd_window: usize,
    /// Disturbance snapshots used to estimate the per-channel power that SNR refers to.
    pub calibration_draws: usize,
}

/// Bins whose centres lie within this distance of a target count as hosting it.
const BIN_TOL: f64 = 1e-9;

impl<T: Scalar> Scenario<T> {
    pub fn validate(&self) -> Result<()> {
        self.disturbance.validate()?;
        self.agent.validate()?;
        if !(self.p_fa > T::zero() && self.p_fa <= T::one()) {
            return Err(Error::domain(format!("p_fa must lie in (0, 1], got {}", self.p_fa)));
        }
        if !(self.p_t > T::zero()) || !self.p_t.is_finite() {
            return Err(Error::domain(format!("p_t must be positive, got {}", self.p_t)));
        }
        if self.k_pulses == 0 {
            return Err(Error::domain("k_pulses must be at least 1"));
        }
        if self.mc_runs == 0 {
            return Err(Error::domain("mc_runs must be at least 1"));
        }
        if self.k_sec == 0 && self.relative_loading == T::zero() {
            return Err(Error::DegenerateEstimator);
        }
        if !(self.relative_loading >= T::zero()) {
            return Err(Error::domain("relative_loading must be nonnegative"));
        }
        if self.pd_window == 0 || self.pd_window > self.k_pulses {
            return Err(Error::domain(format!(
                "pd_window must lie in 1..={}, got {}",
                self.k_pulses, self.pd_window
            )));
        }
        if self.calibration_draws == 0 {
            return Err(Error::domain("calibration_draws must be at least 1"));
        }
        self.target_bins().map(|_| ())
    }

    /// Grid index of every target; errors when a target is off-grid or two share a bin.
    pub fn target_bins(&self) -> Result<Vec<usize>> {
        let mut bins = Vec::with_capacity(self.targets.len());
        for (k, t) in self.targets.iter().enumerate() {
            let b = self.grid.locate(t.freq, T::lit(BIN_TOL)).ok_or_else(|| {
                Error::domain(format!(
                    "target {k} at ({}, {}) is not on a grid bin centre",
                    t.freq.nu_x, t.freq.nu_y
                ))
            })?;
            if bins.contains(&b) {
                return Err(Error::domain(format!("target {k} shares bin {b} with another target")));
            }
            bins.push(b);
        }
        Ok(bins)
    }
}

/// The reference scenario: 20×20 grid from −0.5 in steps of 0.05, four targets,
/// AR(6)×AR(6) t-clutter, P_FA = 1e-5, P_T = 1, 50 pulses, 10×10 arrays.
pub fn paper_scenario<T: Scalar>() -> Scenario<T> {
    let grid = crate::array::make_grid(20, 20, T::lit(-0.5), T::lit(0.05)).expect("reference grid is valid");
    let targets = [(-0.4, -0.4, -5.0), (0.0, 0.0, -8.0), (0.25, -0.05, -10.0), (0.4, 0.35, -9.0)]
        .iter()
        .map(|&(x, y, snr)| Target {
            freq: SpatialFrequency::new(T::lit(x), T::lit(y)),
            snr_db: T::lit(snr),
        })
        .collect();
    Scenario {
        geometry: ArrayGeometry::square(10, 10).expect("reference geometry is valid"),
        grid,
        targets,
        disturbance: paper_model(),
        p_fa: T::lit(1e-5),
        p_t: T::one(),
        k_pulses: 50,
        agent: AgentConfig::default(),
        k_sec: 512,
        mc_runs: 200,
        alpha_mode: AlphaMode::Ls,
        design: DesignMatrix::Conjugate,
        relative_loading: T::lit(crate::detector::DEFAULT_RELATIVE_LOADING),
        pd_window: 10,
        calibration_draws: 10_000,
    }
}

/// Mean per-channel power `E|c_n|²` of the disturbance, from `draws` snapshots.
pub fn calibrate_disturbance_power<T: Scalar>(
    model: &DisturbanceModel<T>,
    geometry: &ArrayGeometry,
    draws: usize,
    seed: u64,
) -> Result<T> {
    if draws == 0 {
        return Err(Error::domain("calibration needs at least one draw"));
    }
    let mut acc = 0.0f64;
    for d in 0..draws {
        let mut rng = RngStream::derive(seed, Domain::Calibration, &[d as u64]);
        let c = draw_disturbance_columns(model, geometry, geometry.n_t(), &mut rng)?;
        acc += c.iter().map(|z| z.norm_sqr().as_f64()).sum::<f64>();
    }
    let power = acc / (draws * geometry.n()) as f64;
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::domain(format!("calibrated disturbance power is not usable: {power}")));
    }
    Ok(T::lit(power))
}

/// Swerling-0 amplitude: `|α|² = 10^{SNR/10}·P_c`, phase uniform, drawn once.
pub fn snr_to_alpha<T: Scalar>(snr_db: T, disturbance_power: T, rng: &mut RngStream) -> Result<Complex<T>> {
    if !(disturbance_power > T::zero()) {
        return Err(Error::domain(format!(
            "disturbance power must be positive, got {disturbance_power}"
        )));
    }
    let mag = (T::lit(10.0).powf(snr_db / T::lit(10.0)) * disturbance_power).sqrt();
    let turns: f64 = rng.random();
    Ok(phasor(T::lit(turns)) * mag)
}

/// Test hook for the primary clutter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClutterMode {
    #[default]
    Model,
    /// No disturbance in primary or secondary snapshots; the estimator falls back
    /// to absolute diagonal loading.
    Zero,
}

/// Everything about a scenario that stays fixed across episodes.
#[derive(Debug, Clone)]
pub struct EpisodeContext<T: Scalar> {
    pub scenario: Scenario<T>,
    pub seed: u64,
    pub delta: T,
    pub disturbance_power: T,
    pub target_bins: Vec<usize>,
    pub clutter: ClutterMode,
    omni: BeamWeights<T>,
    omni_projector: BinProjector<T>,
}

impl<T: Scalar> EpisodeContext<T> {
    /// Validates the scenario and calibrates the disturbance power from `seed`.
    pub fn new(scenario: Scenario<T>, seed: u64) -> Result<Self> {
        scenario.validate()?;
        let power = calibrate_disturbance_power(
            &scenario.disturbance,
            &scenario.geometry,
            scenario.calibration_draws,
            seed,
        )?;
        Self::with_power(scenario, seed, power)
    }

    /// Skips calibration and uses a known per-channel disturbance power.
    pub fn with_power(scenario: Scenario<T>, seed: u64, disturbance_power: T) -> Result<Self> {
        scenario.validate()?;
        let target_bins = scenario.target_bins()?;
        let omni = omni_weights(scenario.geometry.n_t(), scenario.p_t)?;
        let omni_projector = BinProjector::new(&scenario.grid, &omni, &scenario.geometry)?;
        Ok(Self {
            delta: chi2_threshold(scenario.p_fa)?,
            disturbance_power,
            target_bins,
            clutter: ClutterMode::Model,
            omni,
            omni_projector,
            seed,
            scenario,
        })
    }

    pub fn with_clutter(mut self, mode: ClutterMode) -> Self {
        self.clutter = mode;
        self
    }

    /// Target amplitudes for one run, phases from `(TargetPhase, run, target)`.
    pub fn alphas(&self, run: u64) -> Result<Vec<Complex<T>>> {
        self.scenario
            .targets
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let mut rng = RngStream::derive(self.seed, Domain::TargetPhase, &[run, k as u64]);
                snr_to_alpha(t.snr_db, self.disturbance_power, &mut rng)
            })
            .collect()
    }

    /// Rebuilds the weights a step was transmitted with.
    pub fn weights_for(&self, desc: &WeightsDescriptor) -> Result<BeamWeights<T>> {
        match desc {
            WeightsDescriptor::Omni => Ok(self.omni.clone()),
            WeightsDescriptor::MaxPower { bins } => Ok(self.design(bins)?.0),
        }
    }

    fn design(&self, selected: &[usize]) -> Result<(BeamWeights<T>, Option<BinProjector<T>>)> {
        if selected.is_empty() {
            return Ok((self.omni.clone(), None));
        }
        let freqs: Vec<_> = selected.iter().map(|&b| self.scenario.grid.bins()[b].freq).collect();
        let w = max_power_weights_with(&freqs, &self.scenario.geometry, self.scenario.p_t, self.scenario.design)?;
        let p = BinProjector::new(&self.scenario.grid, &w, &self.scenario.geometry)?;
        Ok((w, Some(p)))
    }
}

/// Per-bin received snapshots `y_b = α_b·h_b + c_b` for one pulse.
///
/// Only the transmit columns that `wts` excites are returned (`N_R·k` entries,
/// `k = wts.active_columns()`); the channel vector is zero beyond them, and the
/// clutter columns are the leading part of the full snapshot drawn from the
/// same stream.
pub fn synthesize_echoes<T: Scalar>(
    ctx: &EpisodeContext<T>,
    wts: &BeamWeights<T>,
    alphas: &[Complex<T>],
    run: u64,
    pulse: u64,
) -> Result<Vec<Vec<Complex<T>>>> {
    let sc = &ctx.scenario;
    if alphas.len() != sc.targets.len() {
        return Err(Error::validation(format!(
            "{} targets but {} amplitudes",
            sc.targets.len(),
            alphas.len()
        )));
    }
    let cols = wts.active_columns().max(1);
    let len = sc.geometry.n_r() * cols;
    let mut out = Vec::with_capacity(sc.grid.len());
    for b in 0..sc.grid.len() {
        let mut y = match ctx.clutter {
            ClutterMode::Model => {
                let mut rng = RngStream::derive(ctx.seed, Domain::BinClutter, &[run, pulse, b as u64]);
                draw_disturbance_columns(&sc.disturbance, &sc.geometry, cols, &mut rng)?
            }
            ClutterMode::Zero => vec![Complex::new(T::zero(), T::zero()); len],
        };
        if let Some(t) = ctx.target_bins.iter().position(|&tb| tb == b) {
            let h = crate::beamform::channel_vector(wts, sc.grid.bins()[b].freq, &sc.geometry);
            for (yv, hv) in y.iter_mut().zip(&h) {
                *yv += alphas[t] * hv;
            }
        }
        out.push(y);
    }
    Ok(out)
}

fn secondary_estimator<T: Scalar>(
    ctx: &EpisodeContext<T>,
    cols: usize,
    run: u64,
    pulse: u64,
) -> Result<QuadFormEstimator<T>> {
    let sc = &ctx.scenario;
    let secondary = (0..sc.k_sec)
        .map(|j| match ctx.clutter {
            ClutterMode::Model => {
                let mut rng = RngStream::derive(ctx.seed, Domain::Secondary, &[run, pulse, j as u64]);
                draw_disturbance_columns(&sc.disturbance, &sc.geometry, cols, &mut rng)
            }
            ClutterMode::Zero => Ok(vec![Complex::new(T::zero(), T::zero()); sc.geometry.n_r() * cols]),
        })
        .collect::<Result<Vec<_>>>()?;
    let len = sc.geometry.n_r() * cols;
    let mean_energy = if secondary.is_empty() {
        T::zero()
    } else {
        secondary.iter().map(|c| crate::scalar::norm_sqr(c)).sum::<T>() / T::lit(secondary.len() as f64)
    };
    let mut loading = sc.relative_loading * mean_energy / T::lit(len as f64);
    if loading == T::zero() {
        // Clutter-free secondary data: fall back to absolute loading so the
        // estimator stays nondegenerate.
        loading = sc.relative_loading;
    }
    QuadFormEstimator::new(secondary, loading)
}

/// Scans one pulse transmitted with `wts`.
pub fn pulse_map<T: Scalar>(
    ctx: &EpisodeContext<T>,
    wts: &BeamWeights<T>,
    projector: &BinProjector<T>,
    alphas: &[Complex<T>],
    run: u64,
    pulse: u64,
) -> Result<DetectionMap<T>> {
    let signals = synthesize_echoes(ctx, wts, alphas, run, pulse)?;
    let est = secondary_estimator(ctx, wts.active_columns().max(1), run, pulse)?;
    scan_with(projector, &signals, &est, ctx.delta, ctx.scenario.alpha_mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Agent,
    Omni,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightsDescriptor {
    Omni,
    MaxPower { bins: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    /// State and action in force while this pulse was transmitted.
    pub state: usize,
    pub action: usize,
    /// Reward earned by the pulse; zero for the omnidirectional baseline.
    pub reward: f64,
    pub weights: WeightsDescriptor,
    pub detections: usize,
    pub detected_bins: Vec<usize>,
    pub max_lambda: f64,
    pub target_detected: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace<T> {
    pub run: u64,
    pub policy: Policy,
    pub steps: Vec<StepRecord>,
    pub q_final: Option<QTable<T>>,
    /// `(step, table)` after every `q_checkpoint` steps, when requested.
    pub q_checkpoints: Vec<(usize, QTable<T>)>,
}

fn record<T: Scalar>(
    map: &DetectionMap<T>,
    ctx: &EpisodeContext<T>,
    state: usize,
    action: usize,
    reward: f64,
    weights: WeightsDescriptor,
) -> StepRecord {
    let detected_bins: Vec<usize> = map
        .records
        .iter()
        .enumerate()
        .filter_map(|(b, r)| r.detected.then_some(b))
        .collect();
    StepRecord {
        state,
        action,
        reward,
        weights,
        detections: detected_bins.len(),
        max_lambda: map.records.iter().map(|r| r.lambda.as_f64()).fold(0.0, f64::max),
        target_detected: ctx.target_bins.iter().map(|&b| map.records[b].detected).collect(),
        detected_bins,
    }
}

/// One closed-loop episode.
///
/// Per pulse: transmit with the current weights, scan every bin, observe the
/// detection count `s'`, score the pulse with the top-`a` bins of the new map as
/// the likely-target set, pick `a'` ε-greedily from row `s'`, apply the SARSA
/// update, and design the next weights toward the top-`a'` bins (omnidirectional
/// when `s' = 0` or `a' = 0`).
pub fn run_episode<T: Scalar>(ctx: &EpisodeContext<T>, run: u64, q_checkpoint: Option<usize>) -> Result<EpisodeTrace<T>> {
    let sc = &ctx.scenario;
    let cfg = &sc.agent;
    let alphas = ctx.alphas(run)?;
    let mut agent_rng = RngStream::derive(ctx.seed, Domain::Agent, &[run]);
    let mut q = QTable::<T>::zeros(cfg.m_max);
    let (mut s, mut a) = (1usize.min(cfg.m_max), 1usize.min(cfg.m_max));
    let mut weights = WeightsDescriptor::Omni;
    let mut design: (BeamWeights<T>, Option<BinProjector<T>>) = (ctx.omni.clone(), None);
    let mut steps = Vec::with_capacity(sc.k_pulses);
    let mut q_checkpoints = Vec::new();

    for k in 0..sc.k_pulses {
        let projector = design.1.as_ref().unwrap_or(&ctx.omni_projector);
        let map = pulse_map(ctx, &design.0, projector, &alphas, run, k as u64)?;
        let s_next = observe_state(&map, cfg.m_max);
        let r = reward(&map, &top_m_bins(&map, a));
        let a_next = select_action(&q, s_next, cfg.epsilon_at(k, sc.k_pulses), &mut agent_rng);
        sarsa_update(&mut q, s, a, r, s_next, a_next, cfg);
        steps.push(record(&map, ctx, s, a, r.as_f64(), weights.clone()));

        let selected = if s_next != 0 { top_m_bins(&map, a_next) } else { Vec::new() };
        design = ctx.design(&selected)?;
        weights = if selected.is_empty() {
            WeightsDescriptor::Omni
        } else {
            WeightsDescriptor::MaxPower { bins: selected }
        };
        s = s_next;
        a = a_next;
        if let Some(every) = q_checkpoint {
            if every > 0 && (k + 1) % every == 0 {
                q_checkpoints.push((k + 1, q.clone()));
            }
        }
    }
    Ok(EpisodeTrace {
        run,
        policy: Policy::Agent,
        steps,
        q_final: Some(q),
        q_checkpoints,
    })
}

/// The same pulses with omnidirectional weights throughout and no agent.
pub fn run_omni_episode<T: Scalar>(ctx: &EpisodeContext<T>, run: u64) -> Result<EpisodeTrace<T>> {
    let alphas = ctx.alphas(run)?;
    let mut steps = Vec::with_capacity(ctx.scenario.k_pulses);
    for k in 0..ctx.scenario.k_pulses {
        let map = pulse_map(ctx, &ctx.omni, &ctx.omni_projector, &alphas, run, k as u64)?;
        steps.push(record(&map, ctx, 0, 0, 0.0, WeightsDescriptor::Omni));
    }
    Ok(EpisodeTrace {
        run,
        policy: Policy::Omni,
        steps,
        q_final: None,
        q_checkpoints: Vec::new(),
    })
}

/// Detection counts and reward curves over a set of runs; merging is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub policy: Policy,
    pub k_pulses: usize,
    pub bins: usize,
    pub target_bins: Vec<usize>,
    pub pd_window: usize,
    /// Run indices included, ascending.
    pub run_ids: Vec<u64>,
    /// `counts[step·bins + bin]`: runs in which the bin fired at that step.
    pub counts: Vec<u64>,
    /// Reward curve per run, in `run_ids` order (empty curves for the baseline).
    pub rewards: Vec<Vec<f64>>,
}

impl Aggregate {
    pub fn empty(policy: Policy, k_pulses: usize, bins: usize, target_bins: Vec<usize>, pd_window: usize) -> Self {
        Self {
            policy,
            k_pulses,
            bins,
            target_bins,
            pd_window,
            run_ids: Vec::new(),
            counts: vec![0; k_pulses * bins],
            rewards: Vec::new(),
        }
    }

    pub fn runs(&self) -> usize {
        self.run_ids.len()
    }

    pub fn add<T: Scalar>(&mut self, trace: &EpisodeTrace<T>) -> Result<()> {
        if trace.steps.len() != self.k_pulses {
            return Err(Error::validation("trace length differs from the aggregate's pulse count"));
        }
        let mut single = Aggregate::empty(self.policy, self.k_pulses, self.bins, self.target_bins.clone(), self.pd_window);
        single.run_ids.push(trace.run);
        for (k, st) in trace.steps.iter().enumerate() {
            for &b in &st.detected_bins {
                single.counts[k * self.bins + b] += 1;
            }
        }
        single.rewards.push(match trace.policy {
            Policy::Agent => trace.steps.iter().map(|s| s.reward).collect(),
            Policy::Omni => Vec::new(),
        });
        self.merge(&single)
    }

    /// Combines aggregates over disjoint run sets.
    pub fn merge(&mut self, other: &Aggregate) -> Result<()> {
        if self.policy != other.policy
            || self.k_pulses != other.k_pulses
            || self.bins != other.bins
            || self.target_bins != other.target_bins
            || self.pd_window != other.pd_window
        {
            return Err(Error::validation("aggregates describe different experiments"));
        }
        if other.run_ids.iter().any(|r| self.run_ids.binary_search(r).is_ok()) {
            return Err(Error::validation("aggregates share runs"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        let mut pairs: Vec<(u64, Vec<f64>)> = self
            .run_ids
            .drain(..)
            .zip(self.rewards.drain(..))
            .chain(other.run_ids.iter().copied().zip(other.rewards.iter().cloned()))
            .collect();
        pairs.sort_by_key(|p| p.0);
        for (r, c) in pairs {
            self.run_ids.push(r);
            self.rewards.push(c);
        }
        Ok(())
    }

    pub fn frequency(&self, step: usize, bin: usize) -> f64 {
        self.counts[step * self.bins + bin] as f64 / self.runs().max(1) as f64
    }

    /// Detection frequency of target `t` per step.
    pub fn target_curve(&self, t: usize) -> Vec<f64> {
        let b = self.target_bins[t];
        (0..self.k_pulses).map(|k| self.frequency(k, b)).collect()
    }

    /// Detection frequency of target `t` averaged over the trailing window.
    pub fn target_pd(&self, t: usize) -> f64 {
        let curve = self.target_curve(t);
        let w = self.pd_window.min(self.k_pulses);
        curve[self.k_pulses - w..].iter().sum::<f64>() / w as f64
    }

    pub fn mean_reward_curve(&self) -> Vec<f64> {
        let curves: Vec<&Vec<f64>> = self.rewards.iter().filter(|c| !c.is_empty()).collect();
        if curves.is_empty() {
            return Vec::new();
        }
        (0..self.k_pulses)
            .map(|k| curves.iter().map(|c| c[k]).sum::<f64>() / curves.len() as f64)
            .collect()
    }

    /// Mean per-bin detection frequency over bins without targets.
    pub fn false_alarm_rate(&self) -> f64 {
        let clean = self.bins - self.target_bins.len();
        if clean == 0 || self.runs() == 0 {
            return 0.0;
        }
        let mut total = 0u64;
        for k in 0..self.k_pulses {
            for b in 0..self.bins {
                if !self.target_bins.contains(&b) {
                    total += self.counts[k * self.bins + b];
                }
            }
        }
        total as f64 / (self.k_pulses * clean * self.runs()) as f64
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::validation(format!("cannot start worker pool: {e}")))
}

/// Runs `runs` (indices `first_run..first_run+runs`) under `policy` on `threads`
/// workers; traces come back in run order.
pub fn run_episodes<T: Scalar>(
    ctx: &EpisodeContext<T>,
    policy: Policy,
    first_run: u64,
    runs: usize,
    threads: usize,
    q_checkpoint: Option<usize>,
) -> Result<Vec<EpisodeTrace<T>>> {
    let work = |r: u64| match policy {
        Policy::Agent => run_episode(ctx, r, q_checkpoint),
        Policy::Omni => run_omni_episode(ctx, r),
    };
    if threads <= 1 {
        return (first_run..first_run + runs as u64).map(work).collect();
    }
    pool(threads)?.install(|| {
        (first_run..first_run + runs as u64)
            .into_par_iter()
            .map(work)
            .collect::<Vec<_>>()
            .into_iter()
            .collect()
    })
}

pub fn aggregate<T: Scalar>(ctx: &EpisodeContext<T>, policy: Policy, traces: &[EpisodeTrace<T>]) -> Result<Aggregate> {
    let sc = &ctx.scenario;
    let mut agg = Aggregate::empty(policy, sc.k_pulses, sc.grid.len(), ctx.target_bins.clone(), sc.pd_window);
    for t in traces {
        agg.add(t)?;
    }
    Ok(agg)
}

/// `mc_runs` agent episodes on disjoint streams.
pub fn run_monte_carlo<T: Scalar>(ctx: &EpisodeContext<T>, threads: usize) -> Result<Aggregate> {
    let traces = run_episodes(ctx, Policy::Agent, 0, ctx.scenario.mc_runs, threads, None)?;
    aggregate(ctx, Policy::Agent, &traces)
}

/// `mc_runs` omnidirectional episodes on the same streams as [`run_monte_carlo`].
pub fn run_omni_baseline<T: Scalar>(ctx: &EpisodeContext<T>, threads: usize) -> Result<Aggregate> {
    let traces = run_episodes(ctx, Policy::Omni, 0, ctx.scenario.mc_runs, threads, None)?;
    aggregate(ctx, Policy::Omni, &traces)
}

/// Target-free omnidirectional scans over `pulses` independent pulses.
///
/// Returns `(bin trials, false alarms)`; pulse `p` uses the streams of run `p`,
/// pulse 0, so the count does not depend on `threads`.
pub fn false_alarm_trials<T: Scalar>(ctx: &EpisodeContext<T>, pulses: usize, threads: usize) -> Result<(u64, u64)> {
    let zero = vec![Complex::new(T::zero(), T::zero()); ctx.scenario.targets.len()];
    let work = |p: u64| -> Result<u64> {
        let map = pulse_map(ctx, &ctx.omni, &ctx.omni_projector, &zero, p, 0)?;
        Ok(map.detections() as u64)
    };
    let counts: Vec<u64> = if threads <= 1 {
        (0..pulses as u64).map(work).collect::<Result<_>>()?
    } else {
        pool(threads)?.install(|| (0..pulses as u64).into_par_iter().map(work).collect::<Result<_>>())?
    };
    Ok(((pulses * ctx.scenario.grid.len()) as u64, counts.iter().sum()))
}
