//! Subcommands. Each reads the resolved config, writes its artifacts
//! through [`Outputs`] and reports whether its pass band held.

use std::path::PathBuf;

use clap::{Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use randwave::experiments::{
    averaging_decay, bernstein_survey, large_deviation_moments, lowfreq_event_rates, norm_equiv_survey, pairwise_sum,
    partition_check, quintic_event_rate, tail_estimate, AveragingSetup, Estimate, McReport, Table, Verdict,
};
use randwave::norms::{energy, lp_norm, sobolev_norm};
use randwave::partition::UnitScalePartition;
use randwave::propagator::free_trajectory;
use randwave::random::{randomize, RandomizedData};
use randwave::solver::{direct_solve, energy_space_norm, high_low_solve, quintic_global_solve, LedgerRow, SolveStatus};
use randwave::{Trajectory, WaveState};

use crate::config::{Config, TailStatistic};
use crate::output::{fmt_f64, table_csv, to_csv, Outputs};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Randomize the configured data; write f^ω as RWF1 and the coefficients as CSV.
    Randomize,
    /// Free evolution of the randomized data; per-node norms.
    EvolveFree,
    /// High-low solve; ledger, summary and final state.
    SolveHl,
    /// Quintic small-data solve with its scattering record.
    SolveQuintic,
    /// Monte Carlo and deterministic audits.
    Verify {
        #[arg(value_enum)]
        target: VerifyTarget,
    },
    /// Reference solvers.
    Oracle {
        #[arg(value_enum)]
        target: OracleTarget,
    },
    /// Repeat the run recorded in a manifest.
    #[serde(skip)]
    Rerun { manifest: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyTarget {
    Partition,
    Bernstein,
    Normequiv,
    Largedev,
    Tail,
    Averaging,
    Lowfreq,
    QuinticRate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleTarget {
    DirectSolve,
}

/// Whether a subcommand's pass band held; errors are reported separately.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Outcome {
    pub passed: bool,
    pub status: String,
}

impl Outcome {
    fn pass() -> Self {
        Self {
            passed: true,
            status: "pass".into(),
        }
    }

    fn verdict(v: Verdict) -> Self {
        let status = match v {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::InsufficientRange => "insufficient_range",
        };
        Self {
            passed: v.passed(),
            status: status.into(),
        }
    }
}

struct Inputs {
    part: UnitScalePartition,
    data: RandomizedData,
    files: Vec<PathBuf>,
}

fn inputs(cfg: &Config) -> Result<Inputs> {
    let part = cfg.partition()?;
    let (f1, f2, files) = cfg.data_pair(part.grid())?;
    let data = randomize(&f1, &f2, &cfg.spec(), &part)?;
    Ok(Inputs { part, data, files })
}

/// Run one subcommand. Returns the outcome and the data files read.
pub fn run(cmd: &Command, cfg: &Config, out: &mut Outputs) -> Result<(Outcome, Vec<PathBuf>)> {
    match cmd {
        Command::Randomize => randomize_cmd(cfg, out),
        Command::EvolveFree => evolve_free(cfg, out),
        Command::SolveHl => solve_hl(cfg, out),
        Command::SolveQuintic => solve_quintic(cfg, out),
        Command::Verify { target } => verify(*target, cfg, out),
        Command::Oracle {
            target: OracleTarget::DirectSolve,
        } => oracle_direct(cfg, out),
        Command::Rerun { .. } => Err("rerun is resolved before dispatch".into()),
    }
}

fn randomize_cmd(cfg: &Config, out: &mut Outputs) -> Result<(Outcome, Vec<PathBuf>)> {
    let inp = inputs(cfg)?;
    out.field("f1w.rwf", &inp.data.f1w)?;
    out.field("f2w.rwf", &inp.data.f2w)?;
    let cols = ["k1", "k2", "k3", "h", "l"].map(String::from);
    let rows: Vec<Vec<String>> = inp
        .data
        .coefficients
        .iter()
        .map(|c| {
            let mut r: Vec<String> = c.k.iter().map(|k| k.to_string()).collect();
            r.push(fmt_f64(c.h));
            r.push(fmt_f64(c.l));
            r
        })
        .collect();
    out.write("coefficients.csv", &to_csv(&cols, &rows))?;
    Ok((Outcome::pass(), inp.files))
}

/// `t, ‖u‖_{H^s}, ‖u_t‖_{H^{s-1}}, ‖(u, u_t)‖_{Ḣ¹×L²}, ‖u‖_{L^{2ρ}}`
/// per node.
fn norm_table(traj: &Trajectory, cfg: &Config) -> Table {
    let mut t = Table::new(&["t", "u_hs", "ut_hs1", "energy_norm", "u_l2rho"]);
    for st in traj.states() {
        t.push(vec![
            st.t,
            sobolev_norm(&st.u, cfg.s, false),
            sobolev_norm(&st.ut, cfg.s - 1.0, false),
            energy_space_norm(&st.u, &st.ut),
            lp_norm(&st.u, 2.0 * cfg.rho),
        ]);
    }
    t
}

fn write_table(out: &mut Outputs, stem: &str, table: &Table) -> Result<()> {
    if out.format.csv() {
        out.write(&format!("{stem}.csv"), &table_csv(table))?;
    }
    if out.format.json() {
        out.json(&format!("{stem}.json"), table)?;
    }
    Ok(())
}

fn final_state(out: &mut Outputs, st: &WaveState) -> Result<()> {
    out.field("final_u.rwf", &st.u)?;
    out.field("final_ut.rwf", &st.ut)
}

fn evolve_free(cfg: &Config, out: &mut Outputs) -> Result<(Outcome, Vec<PathBuf>)> {
    let inp = inputs(cfg)?;
    let state = WaveState::new(inp.data.f1w, inp.data.f2w, 0.0)?;
    let traj = free_trajectory(&state, cfg.T, cfg.dt)?;
    write_table(out, "norms", &norm_table(&traj, cfg))?;
    Ok((Outcome::pass(), inp.files))
}

/// Ledger columns, named as the ledger fields.
fn ledger_csv(rows: &[LedgerRow]) -> Vec<u8> {
    let cols = [
        "step",
        "t_start",
        "t_end",
        "energy_v",
        "w_h1",
        "w_t_l2",
        "w_lrho1",
        "term_kinetic",
        "term_potential",
        "term_w_energy",
        "increment",
        "v_strichartz",
        "v_bound_ratio",
        "w_strichartz",
        "picard_iterations",
        "contraction",
        "ball_radius",
        "bound_ratio",
        "energy_drift",
        "gluing_jump",
    ]
    .map(String::from);
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut c = vec![r.step.to_string()];
            c.extend(
                [
                    r.t_start,
                    r.t_end,
                    r.energy_v,
                    r.w_h1,
                    r.w_t_l2,
                    r.w_lrho1,
                    r.term_kinetic,
                    r.term_potential,
                    r.term_w_energy,
                    r.increment,
                    r.v_strichartz,
                    r.v_bound_ratio,
                    r.w_strichartz,
                ]
                .map(fmt_f64),
            );
            c.push(r.picard_iterations.to_string());
            c.extend(
                [
                    r.contraction,
                    r.ball_radius,
                    r.bound_ratio,
                    r.energy_drift,
                    r.gluing_jump,
                ]
                .map(fmt_f64),
            );
            c
        })
        .collect();
    to_csv(&cols, &cells)
}

fn solve_hl(cfg: &Config, out: &mut Outputs) -> Result<(Outcome, Vec<PathBuf>)> {
    let inp = inputs(cfg)?;
    let sol = high_low_solve(
        &cfg.high_low_config()?,
        &inp.data.f1w,
        &inp.data.f2w,
        &inp.part,
        &cfg.high_low_options(),
    )?;
    out.write("ledger.csv", &ledger_csv(&sol.ledger))?;
    let dominance: serde_json::Map<String, serde_json::Value> = LedgerRow::TERMS
        .iter()
        .enumerate()
        .map(|(i, name)| (name.to_string(), json!(sol.dominance(i))))
        .collect();
    out.json(
        "summary.json",
        &json!({
            "config": sol.config,
            "statistics": sol.statistics,
            "status": sol.status,
            "steps": sol.ledger.len(),
            "c_halvings": sol.c_halvings,
            "step_len": sol.step_len,
            "node_dt": sol.node_dt,
            "energy_growth": sol.energy_growth,
            "dominance": dominance,
        }),
    )?;
    final_state(out, &sol.final_state)?;
    let outcome = match &sol.status {
        SolveStatus::Success => Outcome::pass(),
        SolveStatus::PicardDivergence { .. } => Outcome {
            passed: false,
            status: "picard_divergence".into(),
        },
        SolveStatus::ConditionViolation { .. } => Outcome {
            passed: false,
            status: "condition_violation".into(),
        },
    };
    Ok((outcome, inp.files))
}

fn solve_quintic(cfg: &Config, out: &mut Outputs) -> Result<(Outcome, Vec<PathBuf>)> {
    let inp = inputs(cfg)?;
    let res = quintic_global_solve(&inp.data.f1w, &inp.data.f2w, &cfg.quintic_options())?;
    out.json(
        "summary.json",
        &json!({
            "free_norm": res.free_norm,
            "eps0": cfg.eps0,
            "small": res.small,
            "contraction": res.contraction,
            "iterations": res.iterations,
            "scatter": res.scatter,
        }),
    )?;
    let mut scatter = Table::new(&["t", "norm", "difference"]);
    for p in &res.scatter {
        scatter.push(vec![p.t, p.norm, p.difference]);
    }
    if out.format.csv() {
        out.write("scatter.csv", &table_csv(&scatter))?;
    }
    let free = WaveState::new(inp.data.f1w.clone(), inp.data.f2w.clone(), 0.0)?;
    if let Some(st) = res.w.as_ref().and_then(|w| res.state_at(&free, w.t_end())) {
        final_state(out, &st)?;
    }
    let outcome = if res.small {
        Outcome::pass()
    } else {
        Outcome {
            passed: false,
            status: "not_small".into(),
        }
    };
    Ok((outcome, inp.files))
}

fn oracle_direct(cfg: &Config, out: &mut Outputs) -> Result<(Outcome, Vec<PathBuf>)> {
    let inp = inputs(cfg)?;
    let sol = direct_solve(&inp.data.f1w, &inp.data.f2w, cfg.T, cfg.rho, cfg.dt, cfg.split())?;
    let mut table = norm_table(&sol.trajectory, cfg);
    table.columns.push("energy".into());
    for (row, st) in table.rows.iter_mut().zip(sol.trajectory.states()) {
        row.push(energy(&st.u, &st.ut, cfg.rho)?);
    }
    write_table(out, "norms", &table)?;
    out.json(
        "summary.json",
        &json!({
            "drift": sol.drift,
            "refinements": sol.refinements,
            "substeps": sol.substeps,
            "initial_energy": sol.initial_energy,
        }),
    )?;
    final_state(out, sol.trajectory.last())?;
    Ok((Outcome::pass(), inp.files))
}

fn verify(target: VerifyTarget, cfg: &Config, out: &mut Outputs) -> Result<(Outcome, Vec<PathBuf>)> {
    let seed = cfg.seed;
    let mut files = Vec::new();
    let report = match target {
        VerifyTarget::Partition => {
            let part = cfg.partition()?;
            let defect = partition_check(&part);
            let mut r = McReport::new("partition", 0, seed);
            r.estimates.push(Estimate::new("unity_defect", defect, f64::NAN));
            let mut t = Table::new(&["M", "L", "cells", "unity_defect"]);
            t.push(vec![cfg.M as f64, cfg.L, part.cells().len() as f64, defect]);
            r.table = t;
            r.band = "unity_defect <= 1e-12".into();
            r.verdict = Verdict::from_bool(defect <= 1e-12);
            r
        }
        VerifyTarget::Bernstein => {
            let pairs: Vec<(f64, f64)> = cfg.p_pairs.iter().map(|p| (p[0], p[1])).collect();
            bernstein_survey(&cfg.partition()?, &pairs, cfg.samples, seed)?
        }
        VerifyTarget::Normequiv => {
            let parts = cfg
                .normequiv_M
                .iter()
                .map(|&m| Ok(UnitScalePartition::new(&randwave::TorusGrid::new(m, cfg.L, cfg.dim)?)?))
                .collect::<Result<Vec<_>>>()?;
            norm_equiv_survey(&parts, cfg.s, cfg.samples, seed)?
        }
        VerifyTarget::Largedev => {
            large_deviation_moments(cfg.family(), seed, &cfg.coefficients, &cfg.p_grid, cfg.samples)?
        }
        VerifyTarget::Tail => tail(cfg, &mut files)?,
        VerifyTarget::Averaging => {
            let part = cfg.partition()?;
            let (f1, f2, f) = cfg.data_pair(part.grid())?;
            files = f;
            let setup = AveragingSetup {
                s: cfg.s,
                eps: cfg.eps(),
                rho: cfg.rho,
                n_grid: cfg.N_grid.clone(),
                t: cfg.T,
                dt: cfg.dt,
                samples: cfg.samples,
            };
            averaging_decay(&f1, &f2, &part, &cfg.spec(), &setup)?
        }
        VerifyTarget::Lowfreq => {
            let part = cfg.partition()?;
            let (f1, f2, f) = cfg.data_pair(part.grid())?;
            files = f;
            let grids = match (&cfg.K_grid_A, &cfg.K_grid_B) {
                (Some(a), Some(b)) => Some((a.as_slice(), b.as_slice())),
                (None, None) => None,
                _ => return Err("give both K_grid_A and K_grid_B, or neither".into()),
            };
            lowfreq_event_rates(&f1, &f2, &part, &cfg.spec(), cfg.s, cfg.rho, cfg.N, grids, cfg.samples)?
        }
        VerifyTarget::QuinticRate => {
            let part = cfg.partition()?;
            let (f1, f2, f) = cfg.data_pair(part.grid())?;
            files = f;
            quintic_event_rate(&f1, &f2, &part, &cfg.spec(), cfg.eps0, cfg.samples, cfg.T_max, cfg.dt)?
        }
    };
    out.report(&report)?;
    Ok((Outcome::verdict(report.verdict), files))
}

fn tail(cfg: &Config, files: &mut Vec<PathBuf>) -> Result<McReport> {
    let spec = cfg.spec();
    let lambda = cfg.lambda.as_deref();
    match cfg.tail_statistic {
        TailStatistic::Coefficient => Ok(tail_estimate(
            "tail_coefficient",
            |i| spec.for_sample(i).draw([0, 0, 0], 1),
            cfg.samples,
            cfg.seed,
            lambda,
        )?),
        TailStatistic::LowSobolev => {
            let part = cfg.partition()?;
            let (f1, f2, f) = cfg.data_pair(part.grid())?;
            *files = f;
            let low = part.low_multiplier(cfg.N)?;
            let values = (0..cfg.samples as u64)
                .into_par_iter()
                .map(|i| {
                    let r = randomize(&f1, &f2, &spec.for_sample(i), &part)?;
                    Ok(sobolev_norm(&r.f1w.multiplied(|j| low[j]), cfg.s, false))
                })
                .collect::<randwave::Result<Vec<f64>>>()?;
            let mean = pairwise_sum(&values) / values.len().max(1) as f64;
            let mut r = tail_estimate(
                "tail_low_sobolev",
                |i| values[i as usize] - mean,
                cfg.samples,
                cfg.seed,
                lambda,
            )?;
            r.notes.push(format!("centered at the sample mean {}", fmt_f64(mean)));
            Ok(r)
        }
    }
}
