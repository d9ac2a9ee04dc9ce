//! High-low iteration: the low-frequency part `v` is evolved at the energy
//! level, the high-frequency part as free flow plus a Picard correction
//! `w̃`, and `w̃` is folded into `v` at the end of every step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SpectralField, Trajectory, WaveState};
use crate::norms::{energy, lp_norm, mixed_norm, q_rho, sobolev_norm, HighLowConfig};
use crate::partition::UnitScalePartition;
use crate::propagator::{free_evolve, free_trajectory};
use crate::solver::energy::{energy_solve, SplitOptions};
use crate::solver::picard::{picard_local, PicardOptions};
use crate::solver::{energy_space_norm, relative_sup_l2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "value")]
pub enum KChoice {
    /// `K = max(1, factor · max(A, B, D))` from the sample's own statistics.
    Auto(f64),
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighLowOptions {
    pub k: KChoice,
    pub nodes_per_step: usize,
    pub picard: PicardOptions,
    pub split: SplitOptions,
    pub max_c_halvings: u32,
    /// Keep the full solution at every `record_stride`-th node.
    pub record_stride: usize,
    /// Time nodes for the statistic `D` over `[0, T]`.
    pub stat_nodes: usize,
    /// Refuse configurations needing more steps than this.
    pub max_steps: usize,
}

impl Default for HighLowOptions {
    fn default() -> Self {
        Self {
            k: KChoice::Auto(2.0),
            nodes_per_step: 64,
            picard: PicardOptions::default(),
            split: SplitOptions::default(),
            max_c_halvings: 6,
            record_stride: 8,
            stat_nodes: 65,
            max_steps: 10_000,
        }
    }
}

/// Measured counterparts of the three a priori events.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowHighStatistics {
    /// `‖f_{1,<=N}‖^{(ρ+1)/2}_{L^{ρ+1}}`.
    pub a: f64,
    /// `‖f_{1,<=N}‖_{H^s} + ‖f_{2,<=N}‖_{H^{s-1}}`.
    pub b: f64,
    /// `N^{s-2ε} ‖u_{f,>N}‖_{L^{1/ε}_t L^{2ρ}_x([0,T])}`.
    pub d: f64,
}

impl LowHighStatistics {
    pub fn max(&self) -> f64 {
        self.a.max(self.b).max(self.d)
    }
}

/// One row per step of the high-low iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub step: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// `E(v)` at the start of the step.
    pub energy_v: f64,
    pub w_h1: f64,
    pub w_t_l2: f64,
    pub w_lrho1: f64,
    /// `E(v)^{1/2} (‖w̃‖_{Ḣ¹} + ‖w̃_t‖_{L²})`.
    pub term_kinetic: f64,
    /// `E(v)^{ρ/(ρ+1)} ‖w̃‖_{L^{ρ+1}}`.
    pub term_potential: f64,
    /// `E(w̃)`.
    pub term_w_energy: f64,
    /// Measured `E(v + w̃) - E(v)` at the end of the step.
    pub increment: f64,
    pub v_strichartz: f64,
    /// `‖v‖_{L^q L^{2ρ}} / (K N^{1-s})`.
    pub v_bound_ratio: f64,
    pub w_strichartz: f64,
    pub picard_iterations: usize,
    pub contraction: f64,
    /// `T₁^{1-(ρ-1)/q-ε} K^ρ N^{2ε+(1-s)ρ-1}`.
    pub ball_radius: f64,
    /// `(‖w̃‖_{Ḣ¹} + ‖w̃_t‖_{L²} + ‖w̃‖_{L^{ρ+1}}) / R`.
    pub bound_ratio: f64,
    pub energy_drift: f64,
    pub gluing_jump: f64,
}

impl LedgerRow {
    /// Names of the three increment terms, in column order.
    pub const TERMS: [&'static str; 3] = ["kinetic", "potential", "w_energy"];

    /// Index into [`LedgerRow::TERMS`] of the largest increment term.
    pub fn dominant(&self) -> usize {
        let t = [self.term_kinetic, self.term_potential, self.term_w_energy];
        let mut best = 0;
        for i in 1..3 {
            if t[i] > t[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolveStatus {
    Success,
    PicardDivergence { step: usize, factor: f64 },
    ConditionViolation { violated: Vec<String> },
}

#[derive(Clone, Debug)]
pub struct GlobalSolution {
    /// Configuration actually used (after the choice of `K` and `c`).
    pub config: HighLowConfig,
    pub statistics: LowHighStatistics,
    pub status: SolveStatus,
    pub ledger: Vec<LedgerRow>,
    pub c_halvings: u32,
    /// Step length `T / ⌈T/T₁⌉`.
    pub step_len: f64,
    pub node_dt: f64,
    /// `u = v + u_{f,>N} + w̃` at the recorded nodes.
    pub samples: Vec<WaveState>,
    /// High-frequency data `(f_{1,>N}, f_{2,>N})` at `t = 0`.
    pub high_data: WaveState,
    pub low_data: WaveState,
    /// Final `v + w̃` (the energy-space part) and the full state at `T`.
    pub final_low: WaveState,
    pub final_state: WaveState,
    /// `(E(v_final) - E(v_0)) / (K N^{1-s})²`.
    pub energy_growth: f64,
}

/// Statistics `A`, `B`, `D` of randomized data.
#[allow(clippy::too_many_arguments)]
pub fn low_high_statistics(
    f1w: &SpectralField,
    f2w: &SpectralField,
    part: &UnitScalePartition,
    rho: f64,
    s: f64,
    eps: f64,
    n: f64,
    t: f64,
    stat_nodes: usize,
) -> Result<LowHighStatistics> {
    let (l1, h1) = part.split(f1w, n)?;
    let (l2, h2) = part.split(f2w, n)?;
    let a = lp_norm(&l1, rho + 1.0).powf((rho + 1.0) / 2.0);
    let b = sobolev_norm(&l1, s, false) + sobolev_norm(&l2, s - 1.0, false);
    let high = WaveState::new(h1, h2, 0.0)?;
    let dt = t / (stat_nodes.max(2) - 1) as f64;
    let tr = free_trajectory(&high, t, dt)?;
    let d = n.powf(s - 2.0 * eps) * mixed_norm(&tr, 1.0 / eps, 2.0 * rho)?;
    Ok(LowHighStatistics { a, b, d })
}

/// Run the high-low iteration on already randomized data.
pub fn high_low_solve(
    config: &HighLowConfig,
    f1w: &SpectralField,
    f2w: &SpectralField,
    part: &UnitScalePartition,
    opts: &HighLowOptions,
) -> Result<GlobalSolution> {
    let pre = config.driving_violations();
    if !pre.is_empty() {
        return Err(Error::Hypotheses(pre));
    }
    if *f1w.grid() != *part.grid() || *f2w.grid() != *part.grid() {
        return Err(Error::GridMismatch);
    }
    let rho = config.rho;
    let stats = low_high_statistics(
        f1w,
        f2w,
        part,
        rho,
        config.s,
        config.eps,
        config.n,
        config.t,
        opts.stat_nodes,
    )?;
    let (l1, h1) = part.split(f1w, config.n)?;
    let (l2, h2) = part.split(f2w, config.n)?;
    let low_data = WaveState::new(l1, l2, 0.0)?;
    let high_data = WaveState::new(h1, h2, 0.0)?;

    let mut cfg = match opts.k {
        KChoice::Auto(factor) => config.with_k((factor * stats.max()).max(1.0))?,
        KChoice::Fixed(k) => config.with_k(k)?,
    };
    let mut violated = Vec::new();
    for (name, value) in [("A", stats.a), ("B", stats.b), ("D", stats.d)] {
        if value > cfg.k {
            violated.push(format!("{name} = {value:.6e} exceeds K = {:.6e}", cfg.k));
        }
    }
    let empty = |cfg: HighLowConfig, status: SolveStatus, halvings: u32| GlobalSolution {
        config: cfg,
        statistics: stats,
        status,
        ledger: Vec::new(),
        c_halvings: halvings,
        step_len: 0.0,
        node_dt: 0.0,
        samples: Vec::new(),
        high_data: high_data.clone(),
        low_data: low_data.clone(),
        final_low: low_data.clone(),
        final_state: low_data.add(&high_data),
        energy_growth: 0.0,
    };
    if !violated.is_empty() {
        return Ok(empty(cfg, SolveStatus::ConditionViolation { violated }, 0));
    }

    let mut halvings = 0;
    loop {
        match run_steps(&cfg, &low_data, &high_data, opts)? {
            Ok(mut sol) => {
                sol.statistics = stats;
                sol.c_halvings = halvings;
                return Ok(sol);
            }
            Err((step, factor)) => {
                if halvings >= opts.max_c_halvings {
                    return Ok(empty(cfg, SolveStatus::PicardDivergence { step, factor }, halvings));
                }
                halvings += 1;
                cfg = cfg.with_c(cfg.c / 2.0)?;
            }
        }
    }
}

type StepOutcome = std::result::Result<GlobalSolution, (usize, f64)>;

fn run_steps(
    cfg: &HighLowConfig,
    low_data: &WaveState,
    high_data: &WaveState,
    opts: &HighLowOptions,
) -> Result<StepOutcome> {
    let rho = cfg.rho;
    let steps = cfg.steps();
    if steps > opts.max_steps {
        return Err(Error::InvalidParameter(format!(
            "T / T1 needs {steps} steps (T1 = {:.3e}), above the limit {}",
            cfg.t1, opts.max_steps
        )));
    }
    let tau = cfg.t / steps as f64;
    let nodes = opts.nodes_per_step.max(2);
    let dt = tau / nodes as f64;
    let q = q_rho(rho);
    let radius = cfg.w_bound();
    let v_scale = cfg.k * cfg.n.powf(1.0 - cfg.s);
    let stride = opts.record_stride.max(1);
    let e_start = energy(&low_data.u, &low_data.ut, rho)?;

    let mut v_state = low_data.clone();
    let mut ledger = Vec::with_capacity(steps);
    let mut samples = Vec::new();
    let mut final_state = low_data.add(high_data);
    for step in 0..steps {
        let t0 = step as f64 * tau;
        v_state.t = t0;
        let e_v = energy(&v_state.u, &v_state.ut, rho)?;
        let v_sol = energy_solve(&v_state, tau, rho, dt, opts.split)?;
        let v = &v_sol.trajectory;
        let uh_states: Vec<WaveState> = v.states().iter().map(|s| free_evolve(high_data, s.t)).collect();
        let uh = Trajectory::new(uh_states)?;
        let pic = match picard_local(v, &uh, rho, opts.picard) {
            Ok(p) => p,
            Err(Error::PicardDivergence { factor, .. }) => return Ok(Err((step, factor))),
            Err(e) => return Err(e),
        };
        let w_end = pic.w.last();
        let v_end = v.last();
        let w_h1 = sobolev_norm(&w_end.u, 1.0, true);
        let w_t_l2 = sobolev_norm(&w_end.ut, 0.0, false);
        let w_lrho1 = lp_norm(&w_end.u, rho + 1.0);
        let e_w = energy(&w_end.u, &w_end.ut, rho)?;
        let e_v_end = energy(&v_end.u, &v_end.ut, rho)?;
        let next = v_end.add(w_end);
        let e_next = energy(&next.u, &next.ut, rho)?;
        let v_strichartz = mixed_norm(v, q, 2.0 * rho)?;

        for (j, ((sv, sh), sw)) in v.states().iter().zip(uh.states()).zip(pic.w.states()).enumerate() {
            let global = step * nodes + j;
            if (j > 0 || step == 0) && global % stride == 0 {
                samples.push(sv.add(sh).add(sw));
            }
        }
        let before = v_end.add(&uh.last().clone()).add(w_end);
        let after = next.add(uh.last());
        let jump = energy_space_norm(&before.u.sub(&after.u), &before.ut.sub(&after.ut));
        final_state = before;

        ledger.push(LedgerRow {
            step: step + 1,
            t_start: t0,
            t_end: t0 + tau,
            energy_v: e_v,
            w_h1,
            w_t_l2,
            w_lrho1,
            term_kinetic: e_v.sqrt() * (w_h1 + w_t_l2),
            term_potential: e_v.powf(rho / (rho + 1.0)) * w_lrho1,
            term_w_energy: e_w,
            increment: e_next - e_v_end,
            v_strichartz,
            v_bound_ratio: v_strichartz / v_scale,
            w_strichartz: pic.norm,
            picard_iterations: pic.iterations,
            contraction: pic.contraction,
            ball_radius: radius,
            bound_ratio: (w_h1 + w_t_l2 + w_lrho1) / radius,
            energy_drift: v_sol.drift,
            gluing_jump: jump,
        });
        v_state = next;
    }
    let e_final = energy(&v_state.u, &v_state.ut, rho)?;
    Ok(Ok(GlobalSolution {
        config: cfg.clone(),
        statistics: LowHighStatistics { a: 0.0, b: 0.0, d: 0.0 },
        status: SolveStatus::Success,
        ledger,
        c_halvings: 0,
        step_len: tau,
        node_dt: dt,
        samples,
        high_data: high_data.clone(),
        low_data: low_data.clone(),
        final_low: v_state,
        final_state,
        energy_growth: (e_final - e_start) / cfg.energy_scale(),
    }))
}

impl GlobalSolution {
    /// Times of the recorded samples.
    pub fn sample_times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Relative `L^∞_t L²_x` distance of the recorded samples to a
    /// reference trajectory on a node grid containing them.
    pub fn compare(&self, reference: &Trajectory) -> f64 {
        let refs = crate::solver::states_at(reference, &self.sample_times());
        let n = refs.len().min(self.samples.len());
        relative_sup_l2(&self.samples[..n], &refs[..n])
    }

    /// Fraction of steps whose largest increment term is `term` (see
    /// [`LedgerRow::TERMS`]).
    pub fn dominance(&self, term: usize) -> f64 {
        if self.ledger.is_empty() {
            return 0.0;
        }
        self.ledger.iter().filter(|r| r.dominant() == term).count() as f64 / self.ledger.len() as f64
    }
}
