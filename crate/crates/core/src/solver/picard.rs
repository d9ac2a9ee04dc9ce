//! Fixed-point iteration for the nonlinear part `w̃` of the high component:
//! `w̃ = S(t)(w_0) - ∫ sin((t-s)|∇|)/|∇| [N(v + u_h + w̃) - N(v)] ds`.
//!
//! Iterates are compared in `L^{q(ρ)}_t L^{2ρ}_x`, with the spatial norm
//! taken on the dealiasing grid where the physical samples already live.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SpectralField, Trajectory, WaveState};
use crate::norms::{lp_norm_samples, q_rho, time_norm};
use crate::propagator::{
    duhamel_all, free_evolve, from_padded_pair, pad_factor, padded_samples_pair, power, DuhamelQuadrature,
    QuadratureRule,
};

/// Relative size below which a Picard difference is rounding noise.
const ROUNDING_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    /// Relative stopping tolerance on successive differences.
    pub tol: f64,
    /// Absolute tolerance, used when `w̃` is (numerically) zero.
    pub abs_tol: f64,
    pub max_iter: usize,
    pub rule: QuadratureRule,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            abs_tol: 0.0,
            max_iter: 60,
            rule: QuadratureRule::Simpson,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PicardResult {
    pub w: Trajectory,
    pub iterations: usize,
    /// Largest ratio of successive differences among iterations whose
    /// difference is above the rounding floor; zero if none is.
    pub contraction: f64,
    /// `‖w^{m+1} - w^m‖` per iteration.
    pub differences: Vec<f64>,
    /// `‖w̃‖_{L^{q(ρ)}_t L^{2ρ}_x}` of the returned iterate.
    pub norm: f64,
}

/// Solve for `w̃` with zero data on the nodes of `v`.
pub fn picard_local(v: &Trajectory, u_high: &Trajectory, rho: f64, opts: PicardOptions) -> Result<PicardResult> {
    picard_with_data(v, u_high, rho, None, opts)
}

/// As [`picard_local`], with optional data for `w̃` at the first node.
pub fn picard_with_data(
    v: &Trajectory,
    u_high: &Trajectory,
    rho: f64,
    initial: Option<&WaveState>,
    opts: PicardOptions,
) -> Result<PicardResult> {
    let n = v.len();
    if u_high.len() != n {
        return Err(Error::Trajectory(format!(
            "{} high nodes for {} low nodes",
            u_high.len(),
            n
        )));
    }
    for (a, b) in v.states().iter().zip(u_high.states()) {
        if (a.t - b.t).abs() > 1e-12 * (1.0 + a.t.abs()) {
            return Err(Error::Trajectory(format!("nodes misaligned at t = {}", a.t)));
        }
    }
    if *v.grid() != *u_high.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = v.grid().clone();
    let fine_weight = grid.padded(pad_factor(rho)).sample_weight();
    let times: Vec<f64> = v.times();
    let dt = if n > 1 { v.dt() } else { 1.0 };
    let quad = DuhamelQuadrature { rule: opts.rule, dt };
    let q = q_rho(rho);
    let r = 2.0 * rho;

    let mut base = Vec::with_capacity(n);
    let mut force_v = Vec::with_capacity(n);
    for (sv, sh) in v.states().iter().zip(u_high.states()) {
        let (xv, xh) = padded_samples_pair(&sv.u, &sh.u, rho);
        force_v.push(xv.iter().map(|&x| power(x, rho)).collect::<Vec<f64>>());
        base.push(xv.iter().zip(&xh).map(|(a, b)| a + b).collect::<Vec<f64>>());
    }

    let free: Vec<WaveState> = match initial {
        Some(w0) => times.iter().map(|&t| free_evolve(w0, t - times[0])).collect(),
        None => times.iter().map(|&t| WaveState::zeros(&grid, t)).collect(),
    };
    let mut w: Vec<WaveState> = free.clone();
    let mut w_x = padded_nodes(&w, rho);
    let mut differences = Vec::new();
    let mut ratios: Vec<f64> = Vec::new();
    let mut resolved = 0.0f64;
    for iter in 1..=opts.max_iter {
        let mut h_x: Vec<Vec<f64>> = Vec::with_capacity(n);
        for j in 0..n {
            h_x.push(
                base[j]
                    .iter()
                    .zip(&w_x[j])
                    .zip(&force_v[j])
                    .map(|((b, x), fv)| power(b + x, rho) - fv)
                    .collect(),
            );
        }
        let h = coarse_nodes(&grid, rho, &h_x);
        let duh = duhamel_all(&h, &times, quad)?;
        let next: Vec<WaveState> = duh
            .into_iter()
            .zip(&free)
            .map(|((du, dut), f)| WaveState {
                u: f.u.add(&du),
                ut: f.ut.add(&dut),
                t: f.t,
            })
            .collect();
        let next_x = padded_nodes(&next, rho);
        let diff_t: Vec<f64> = next_x
            .iter()
            .zip(&w_x)
            .map(|(a, b)| {
                let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                lp_norm_samples(&d, fine_weight, r)
            })
            .collect();
        let norm_t: Vec<f64> = next_x.iter().map(|a| lp_norm_samples(a, fine_weight, r)).collect();
        let (diff, norm) = if n > 1 {
            (time_norm(&diff_t, dt, q)?, time_norm(&norm_t, dt, q)?)
        } else {
            (diff_t[0], norm_t[0])
        };
        if let Some(&prev) = differences.last() {
            let ratio = if prev > 0.0 { diff / prev } else { 0.0 };
            ratios.push(ratio);
            if diff > ROUNDING_FLOOR * norm {
                resolved = resolved.max(ratio);
            }
        }
        differences.push(diff);
        w = next;
        w_x = next_x;
        let contraction = resolved;
        if !diff.is_finite() || !norm.is_finite() {
            return Err(Error::PicardDivergence {
                iterations: iter,
                factor: f64::INFINITY,
            });
        }
        if diff <= opts.tol * norm || diff <= opts.abs_tol {
            if contraction >= 1.0 {
                return Err(Error::PicardDivergence {
                    iterations: iter,
                    factor: contraction,
                });
            }
            return Ok(PicardResult {
                w: Trajectory::new(w)?,
                iterations: iter,
                contraction,
                differences,
                norm,
            });
        }
        let k = ratios.len();
        if k >= 2 && ratios[k - 1] >= 1.0 && ratios[k - 2] >= 1.0 {
            return Err(Error::PicardDivergence {
                iterations: iter,
                factor: contraction,
            });
        }
    }
    Err(Error::PicardDivergence {
        iterations: opts.max_iter,
        factor: ratios.last().copied().unwrap_or(f64::NAN),
    })
}

/// Padded physical samples of `u` at every node, two nodes per transform.
fn padded_nodes(states: &[WaveState], rho: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(states.len());
    let mut j = 0;
    while j < states.len() {
        if j + 1 < states.len() {
            let (a, b) = padded_samples_pair(&states[j].u, &states[j + 1].u, rho);
            out.push(a);
            out.push(b);
            j += 2;
        } else {
            let z = SpectralField::zeros(states[j].grid());
            out.push(padded_samples_pair(&states[j].u, &z, rho).0);
            j += 1;
        }
    }
    out
}

/// Coarse coefficients of padded sample arrays, two per transform.
fn coarse_nodes(grid: &crate::grid::TorusGrid, rho: f64, xs: &[Vec<f64>]) -> Vec<SpectralField> {
    let mut out = Vec::with_capacity(xs.len());
    let mut j = 0;
    while j < xs.len() {
        if j + 1 < xs.len() {
            let (a, b) = from_padded_pair(grid, rho, &xs[j], &xs[j + 1]);
            out.push(a);
            out.push(b);
            j += 2;
        } else {
            out.push(crate::propagator::from_padded(grid, rho, &xs[j]));
            j += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{power_law_field, Phases};
    use crate::grid::TorusGrid;
    use crate::propagator::free_trajectory;
    use crate::solver::{energy_solve, SplitOptions};

    #[test]
    fn zero_inputs_give_zero_after_one_iteration() {
        let g = TorusGrid::new(8, 4.0, 3).unwrap();
        let z = free_trajectory(&WaveState::zeros(&g, 0.0), 0.1, 0.01).unwrap();
        let res = picard_local(&z, &z, 3.0, PicardOptions::default()).unwrap();
        assert_eq!(res.iterations, 1);
        assert!(res.w.states().iter().all(|s| s.u.is_zero()));
    }

    #[test]
    fn source_cancels_without_high_part() {
        let g = TorusGrid::new(16, 4.0, 3).unwrap();
        let v0 = WaveState::new(
            power_law_field(&g, 2.4, 0.02, Phases::Random, 1),
            power_law_field(&g, 1.4, 0.02, Phases::Random, 2),
            0.0,
        )
        .unwrap();
        let v = energy_solve(&v0, 0.1, 3.0, 0.1 / 16.0, SplitOptions::default())
            .unwrap()
            .trajectory;
        let zero = free_trajectory(&WaveState::zeros(&g, 0.0), 0.1, 0.1 / 16.0).unwrap();
        let res = picard_local(&v, &zero, 3.0, PicardOptions::default()).unwrap();
        assert_eq!(res.iterations, 1);
        assert_eq!(res.norm, 0.0);
    }

    #[test]
    fn misaligned_nodes_rejected() {
        let g = TorusGrid::new(8, 4.0, 1).unwrap();
        let a = free_trajectory(&WaveState::zeros(&g, 0.0), 0.1, 0.01).unwrap();
        let b = free_trajectory(&WaveState::zeros(&g, 0.0), 0.2, 0.02).unwrap();
        assert!(picard_local(&a, &b, 3.0, PicardOptions::default()).is_err());
    }
}
