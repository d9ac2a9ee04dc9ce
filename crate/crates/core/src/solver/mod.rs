//! Constructive solvers: the energy-level flow, the Picard iteration for the
//! nonlinear high part, the high-low iteration and the quintic solver.

mod energy;
mod highlow;
mod picard;
mod quintic;

pub use energy::{direct_solve, energy_solve, EnergySolution, SplitOptions};
pub use highlow::{
    high_low_solve, low_high_statistics, GlobalSolution, HighLowOptions, KChoice, LedgerRow, LowHighStatistics,
    SolveStatus,
};
pub use picard::{picard_local, PicardOptions, PicardResult};
pub use quintic::{quintic_global_solve, QuinticOptions, QuinticOutcome, ScatterPoint};

use crate::grid::{SpectralField, Trajectory, WaveState};
use crate::norms::sobolev_norm;

/// `(‖u‖²_{Ḣ¹} + ‖u_t‖²_{L²})^{1/2}`.
pub fn energy_space_norm(u: &SpectralField, ut: &SpectralField) -> f64 {
    (sobolev_norm(u, 1.0, true).powi(2) + sobolev_norm(ut, 0.0, false).powi(2)).sqrt()
}

/// `max_j ‖a(t_j) - b(t_j)‖_{L²} / max_j ‖b(t_j)‖_{L²}` over nodes with
/// matching times.
pub fn relative_sup_l2(a: &[WaveState], b: &[WaveState]) -> f64 {
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        debug_assert!((x.t - y.t).abs() < 1e-9);
        num = num.max(sobolev_norm(&x.u.sub(&y.u), 0.0, false));
        den = den.max(sobolev_norm(&y.u, 0.0, false));
    }
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// States of `traj` whose times match `times` to `1e-9`.
pub fn states_at(traj: &Trajectory, times: &[f64]) -> Vec<WaveState> {
    let dt = traj.dt();
    times
        .iter()
        .filter_map(|&t| {
            let j = ((t - traj.t0()) / dt).round() as usize;
            traj.states().get(j).filter(|s| (s.t - t).abs() < 1e-9).cloned()
        })
        .collect()
}
