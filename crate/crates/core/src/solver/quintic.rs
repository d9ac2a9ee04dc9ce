//! Small-data global solver for the quintic equation: `u = u_f + w` with
//! `w` the Picard fixed point over consecutive windows of `[0, T_max]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SpectralField, Trajectory, WaveState};
use crate::norms::mixed_norm;
use crate::propagator::{free_evolve, free_trajectory};
use crate::solver::energy_space_norm;
use crate::solver::picard::{picard_with_data, PicardOptions};

const RHO: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuinticOptions {
    /// Smallness threshold on `‖u_f‖_{L⁵_t L^{10}_x}`.
    pub eps0: f64,
    pub t_max: f64,
    pub dt: f64,
    /// Length of one Picard window.
    pub window: f64,
    pub picard: PicardOptions,
    /// Number of geometric times in the scattering record.
    pub scatter_points: usize,
}

impl Default for QuinticOptions {
    fn default() -> Self {
        Self {
            eps0: 0.1,
            t_max: 8.0,
            dt: 0.05,
            window: 1.0,
            picard: PicardOptions::default(),
            scatter_points: 6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub t: f64,
    /// `‖S(-t)(w(t), w_t(t))‖_{Ḣ¹ × L²}`.
    pub norm: f64,
    /// Distance to the previous pulled-back state; zero for the first.
    pub difference: f64,
}

#[derive(Clone, Debug)]
pub struct QuinticOutcome {
    /// `‖u_f‖_{L⁵_t L^{10}_x([0, T_max])}`.
    pub free_norm: f64,
    pub small: bool,
    /// Nonlinear part `w` on all nodes; `None` when the gate fails.
    pub w: Option<Trajectory>,
    /// Largest contraction factor over the windows.
    pub contraction: f64,
    pub iterations: Vec<usize>,
    pub scatter: Vec<ScatterPoint>,
}

impl QuinticOutcome {
    /// `u = u_f + w` at the node closest to `t`.
    pub fn state_at(&self, free: &WaveState, t: f64) -> Option<WaveState> {
        let w = self.w.as_ref()?;
        let j = ((t - w.t0()) / w.dt()).round() as usize;
        let ws = w.states().get(j)?;
        Some(free_evolve(free, ws.t - free.t).add(ws))
    }
}

/// Gate on the free Strichartz norm, then solve for `w` window by window.
pub fn quintic_global_solve(f1w: &SpectralField, f2w: &SpectralField, opts: &QuinticOptions) -> Result<QuinticOutcome> {
    if !(opts.t_max > 0.0 && opts.dt > 0.0 && opts.window >= opts.dt) {
        return Err(Error::InvalidParameter(format!(
            "need T_max > 0 and window >= dt > 0, got T_max = {}, window = {}, dt = {}",
            opts.t_max, opts.window, opts.dt
        )));
    }
    let data = WaveState::new(f1w.clone(), f2w.clone(), 0.0)?;
    let grid = data.grid().clone();
    let free = free_trajectory(&data, opts.t_max, opts.dt)?;
    let free_norm = mixed_norm(&free, 5.0, 10.0)?;
    if free_norm > opts.eps0 {
        return Ok(QuinticOutcome {
            free_norm,
            small: false,
            w: None,
            contraction: f64::NAN,
            iterations: Vec::new(),
            scatter: Vec::new(),
        });
    }

    let per = ((opts.window / opts.dt).round() as usize).max(1);
    let nodes = free.states();
    let mut all: Vec<WaveState> = vec![WaveState::zeros(&grid, 0.0)];
    let mut iterations = Vec::new();
    let mut contraction = 0.0f64;
    let mut start = 0;
    while start + 1 < nodes.len() {
        let end = (start + per).min(nodes.len() - 1);
        let uh = Trajectory::new(nodes[start..=end].to_vec())?;
        let v = Trajectory::new(
            nodes[start..=end]
                .iter()
                .map(|s| WaveState::zeros(&grid, s.t))
                .collect(),
        )?;
        let w0 = all.last().expect("nonempty").clone();
        let res = picard_with_data(&v, &uh, RHO, Some(&w0), opts.picard)?;
        contraction = contraction.max(res.contraction);
        iterations.push(res.iterations);
        all.extend(res.w.into_states().into_iter().skip(1));
        start = end;
    }
    let w = Trajectory::new(all)?;
    let scatter = scatter_record(&w, opts.scatter_points);
    Ok(QuinticOutcome {
        free_norm,
        small: true,
        w: Some(w),
        contraction,
        iterations,
        scatter,
    })
}

/// Pulled-back states `S(-t) w(t)` at `t = T_max 2^{-i}`, in increasing
/// time, with successive energy-space differences.
fn scatter_record(w: &Trajectory, points: usize) -> Vec<ScatterPoint> {
    let dt = w.dt();
    let last = w.len() - 1;
    let mut idx: Vec<usize> = (0..points)
        .map(|i| (last as f64 / 2f64.powi(i as i32)).round() as usize)
        .filter(|&j| j > 0)
        .collect();
    idx.sort_unstable();
    idx.dedup();
    let mut out = Vec::with_capacity(idx.len());
    let mut prev: Option<WaveState> = None;
    for j in idx {
        let s = &w.states()[j];
        let back = free_evolve(s, -s.t);
        let difference = prev
            .as_ref()
            .map(|p| energy_space_norm(&back.u.sub(&p.u), &back.ut.sub(&p.ut)))
            .unwrap_or(0.0);
        out.push(ScatterPoint {
            t: j as f64 * dt + w.t0(),
            norm: energy_space_norm(&back.u, &back.ut),
            difference,
        });
        prev = Some(back);
    }
    out
}
