//! Strang splitting for the full nonlinear equation: half kick with the
//! dealiased nonlinearity, exact free flow, half kick.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SpectralField, Trajectory, WaveState};
use crate::norms::energy;
use crate::propagator::{nonlinearity, FreeStep};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitOptions {
    /// Substeps per output node before any refinement.
    pub substeps: usize,
    pub max_refinements: u32,
    pub drift_target: f64,
    pub drift_limit: f64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self {
            substeps: 1,
            max_refinements: 4,
            drift_target: 1e-5,
            drift_limit: 1e-3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EnergySolution {
    pub trajectory: Trajectory,
    /// `max_j |E(t_j) - E(t_0)| / E(t_0)`.
    pub drift: f64,
    pub refinements: u32,
    pub substeps: usize,
    pub initial_energy: f64,
}

/// Evolve `v0` over `[v0.t, v0.t + t_len]` with output nodes `dt` apart,
/// halving the internal step until the energy drift meets the target.
pub fn energy_solve(v0: &WaveState, t_len: f64, rho: f64, dt: f64, opts: SplitOptions) -> Result<EnergySolution> {
    if !(dt > 0.0) || !(t_len >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0 and T >= 0, got {dt}, {t_len}"
        )));
    }
    let nodes = ((t_len / dt) - 1e-9).ceil().max(if t_len > 0.0 { 1.0 } else { 0.0 }) as usize;
    let h = if nodes == 0 { dt } else { t_len / nodes as f64 };
    let e0 = energy(&v0.u, &v0.ut, rho)?;
    let mut last = None;
    for r in 0..=opts.max_refinements {
        let sub = opts.substeps.max(1) << r;
        let (traj, drift) = run(v0, nodes, h, sub, rho, e0)?;
        if drift <= opts.drift_target {
            return Ok(EnergySolution {
                trajectory: traj,
                drift,
                refinements: r,
                substeps: sub,
                initial_energy: e0,
            });
        }
        last = Some((traj, drift, r, sub));
    }
    let (traj, drift, r, sub) = last.expect("at least one attempt");
    if drift > opts.drift_limit || !drift.is_finite() {
        return Err(Error::EnergyDrift {
            drift,
            limit: opts.drift_limit,
            refinements: r,
        });
    }
    Ok(EnergySolution {
        trajectory: traj,
        drift,
        refinements: r,
        substeps: sub,
        initial_energy: e0,
    })
}

fn run(v0: &WaveState, nodes: usize, h: f64, sub: usize, rho: f64, e0: f64) -> Result<(Trajectory, f64)> {
    let step = h / sub as f64;
    let flow = FreeStep::new(v0.grid(), step);
    let mut u = v0.u.clone();
    let mut ut = v0.ut.clone();
    let mut force = nonlinearity(&u, rho);
    let mut states = Vec::with_capacity(nodes + 1);
    states.push(v0.clone());
    let mut drift = 0.0f64;
    for j in 1..=nodes {
        for _ in 0..sub {
            ut.axpy(-0.5 * step, &force);
            flow.apply_in_place(&mut u, &mut ut);
            force = nonlinearity(&u, rho);
            ut.axpy(-0.5 * step, &force);
        }
        let e = energy(&u, &ut, rho)?;
        if e0 > 0.0 {
            drift = drift.max((e - e0).abs() / e0);
        }
        if !drift.is_finite() {
            break;
        }
        states.push(WaveState::new(u.clone(), ut.clone(), v0.t + j as f64 * h)?);
    }
    if states.len() != nodes + 1 {
        return Ok((Trajectory::new(states)?, f64::INFINITY));
    }
    Ok((Trajectory::new(states)?, drift))
}

/// The same scheme started from the full data `(f_1, f_2)` at `t = 0`.
pub fn direct_solve(
    f1: &SpectralField,
    f2: &SpectralField,
    t_len: f64,
    rho: f64,
    dt: f64,
    opts: SplitOptions,
) -> Result<EnergySolution> {
    let v0 = WaveState::new(f1.clone(), f2.clone(), 0.0)?;
    energy_solve(&v0, t_len, rho, dt, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{power_law_field, Phases};
    use crate::grid::TorusGrid;
    use crate::propagator::free_evolve;
    use crate::solver::relative_sup_l2;

    #[test]
    fn zero_data_stay_zero() {
        let g = TorusGrid::new(8, 4.0, 3).unwrap();
        let sol = energy_solve(&WaveState::zeros(&g, 0.0), 0.5, 3.0, 0.1, SplitOptions::default()).unwrap();
        assert_eq!(sol.drift, 0.0);
        assert_eq!(sol.trajectory.len(), 6);
        assert!(sol.trajectory.states().iter().all(|s| s.u.is_zero() && s.ut.is_zero()));
    }

    #[test]
    fn linear_regime_matches_free_flow() {
        let g = TorusGrid::new(16, 4.0, 3).unwrap();
        let u = power_law_field(&g, 2.4, 1e-6, Phases::Random, 3);
        let ut = power_law_field(&g, 1.4, 1e-6, Phases::Random, 4);
        let v0 = WaveState::new(u, ut, 0.0).unwrap();
        let sol = energy_solve(&v0, 1.0, 3.0, 0.05, SplitOptions::default()).unwrap();
        let free: Vec<WaveState> = sol.trajectory.states().iter().map(|s| free_evolve(&v0, s.t)).collect();
        assert!(relative_sup_l2(sol.trajectory.states(), &free) < 1e-8);
    }

    #[test]
    fn moderate_cubic_data_conserve_energy() {
        let g = TorusGrid::new(32, 4.0, 3).unwrap();
        let u = power_law_field(&g, 2.4, 0.05, Phases::Random, 5);
        let ut = power_law_field(&g, 1.4, 0.05, Phases::Random, 6);
        let v0 = WaveState::new(u, ut, 0.0).unwrap();
        let t1 = 0.05;
        let sol = energy_solve(&v0, t1, 3.0, t1 / 64.0, SplitOptions::default()).unwrap();
        assert!(sol.drift < 1e-5, "drift {}", sol.drift);
        let fine = energy_solve(
            &v0,
            t1,
            3.0,
            t1 / 64.0,
            SplitOptions {
                substeps: 4 * sol.substeps,
                ..SplitOptions::default()
            },
        )
        .unwrap();
        assert!(relative_sup_l2(sol.trajectory.states(), fine.trajectory.states()) < 1e-6);
    }
}
