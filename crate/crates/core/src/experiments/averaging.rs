//! Decay in `N` of `‖u^ω_{f,>N}‖_{L^{1/ε}_t L^{2ρ}_x([0,T])}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{
    batch_mean, fit_line, free_mixed_norm, par_samples, summary_quantiles, DecayFit, Estimate, McReport, Table,
    Verdict, MIN_FIT_POINTS,
};
use crate::grid::{SpectralField, WaveState};
use crate::partition::UnitScalePartition;
use crate::random::{randomize, RandomSpec};

/// Smallest `ε` allowed here, so that `1/ε <= 50`.
pub const EPS_FLOOR: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragingSetup {
    pub s: f64,
    pub eps: f64,
    pub rho: f64,
    pub n_grid: Vec<f64>,
    pub t: f64,
    pub dt: f64,
    pub samples: usize,
}

impl AveragingSetup {
    /// Geometric grid of `points` cutoffs from `lo` to `hi`.
    pub fn geometric(lo: f64, hi: f64, points: usize) -> Vec<f64> {
        let r = (hi / lo).ln() / (points.max(2) - 1) as f64;
        (0..points).map(|i| lo * (r * i as f64).exp()).collect()
    }
}

/// Monte Carlo mean of the high-frequency free evolution norm per `N`,
/// with a least-squares fit of `log mean` against `log N`. Passes when the
/// slope is at most `-(s - 2ε) + 0.15`.
pub fn averaging_decay(
    f1: &SpectralField,
    f2: &SpectralField,
    part: &UnitScalePartition,
    spec: &RandomSpec,
    setup: &AveragingSetup,
) -> Result<McReport> {
    let eps = setup.eps;
    if !(eps >= EPS_FLOOR && eps < (setup.s / 2.0).min((1.0 - 1.0 / setup.rho) / 2.0)) {
        return Err(Error::InvalidParameter(format!(
            "eps = {eps} must lie in [{EPS_FLOOR}, min(s/2, (1-1/rho)/2))"
        )));
    }
    let resolvable = part.max_cell_norm();
    if setup.n_grid.iter().any(|&n| n < 3.0 || n > resolvable) {
        return Err(Error::InvalidParameter(format!(
            "N grid must lie in [3, {resolvable}] (largest cell norm)"
        )));
    }
    let highs: Vec<Vec<f64>> = setup
        .n_grid
        .iter()
        .map(|&n| part.high_multiplier(n))
        .collect::<Result<_>>()?;
    let q = 1.0 / eps;
    let r = 2.0 * setup.rho;
    let norms: Vec<Vec<f64>> = par_samples(setup.samples, |i| {
        let d = randomize(f1, f2, &spec.for_sample(i), part).expect("grids checked by caller");
        highs
            .iter()
            .map(|h| {
                let state = WaveState {
                    u: d.f1w.multiplied(|j| h[j]),
                    ut: d.f2w.multiplied(|j| h[j]),
                    t: 0.0,
                };
                if state.u.is_zero() && state.ut.is_zero() {
                    0.0
                } else {
                    free_mixed_norm(&state, setup.t, setup.dt, q, r).expect("dt validated")
                }
            })
            .collect()
    });

    let mut report = McReport::new("averaging", setup.samples, spec.master_seed);
    let mut table = Table::new(&["N", "mean", "se", "mean_log_norm", "q10", "q50", "q90", "fitted"]);
    let mut decay = DecayFit {
        n: Vec::new(),
        mean: Vec::new(),
        se: Vec::new(),
        mean_log_norm: Vec::new(),
        fit: None,
        slope_interval: None,
    };
    let (mut fx, mut fy) = (Vec::new(), Vec::new());
    for (j, &n) in setup.n_grid.iter().enumerate() {
        let vals: Vec<f64> = norms.iter().map(|v| v[j]).collect();
        let (m, se) = batch_mean(&vals)?;
        let positive = vals.iter().all(|&v| v > 0.0);
        let mlog = if positive {
            crate::experiments::mean(&vals.iter().map(|v| v.ln()).collect::<Vec<_>>())
        } else {
            f64::NEG_INFINITY
        };
        let qs = summary_quantiles(&vals);
        let fitted = m > 0.0;
        if fitted {
            fx.push(n.ln());
            fy.push(m.ln());
        } else {
            report.notes.push(format!("N = {n}: empty high part, excluded"));
        }
        table.push(vec![
            n,
            m,
            se,
            mlog,
            qs[1].value,
            qs[3].value,
            qs[5].value,
            fitted as u8 as f64,
        ]);
        decay.n.push(n);
        decay.mean.push(m);
        decay.se.push(se);
        decay.mean_log_norm.push(mlog);
    }
    let target = -(setup.s - 2.0 * eps) + 0.15;
    report.band = format!("slope of log mean vs log N <= {target:.4}");
    if fx.len() >= MIN_FIT_POINTS {
        let fit = fit_line(&fx, &fy);
        if let Some(f) = fit {
            decay.slope_interval = Some((f.slope - 2.0 * f.slope_se, f.slope + 2.0 * f.slope_se));
            report.estimates.push(Estimate::new("slope", f.slope, f.slope_se));
            report.verdict = Verdict::from_bool(f.slope <= target);
        } else {
            report.verdict = Verdict::InsufficientRange;
        }
        decay.fit = fit;
    } else {
        report.verdict = Verdict::InsufficientRange;
        report
            .notes
            .push(format!("{} usable N values, need {MIN_FIT_POINTS}", fx.len()));
    }
    report.estimates.push(Estimate::new("target_slope", target, 0.0));
    report.decay = Some(decay);
    report.table = table;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{sharp_pair, Phases};
    use crate::grid::TorusGrid;
    use crate::random::Family;

    fn setup(n_grid: Vec<f64>, samples: usize) -> AveragingSetup {
        AveragingSetup {
            s: 0.8,
            eps: 0.05,
            rho: 3.0,
            n_grid,
            t: 0.5,
            dt: 0.1,
            samples,
        }
    }

    #[test]
    fn cutoff_beyond_cells_is_excluded() {
        let g = TorusGrid::new(16, 4.0, 3).unwrap();
        let p = UnitScalePartition::new(&g).unwrap();
        let (f1, f2) = sharp_pair(&g, 0.8, 1.0, Phases::Random, 1);
        let top = p.max_cell_norm();
        let r = averaging_decay(
            &f1,
            &f2,
            &p,
            &RandomSpec::new(Family::Gaussian, 1),
            &setup(vec![3.0, top], 20),
        )
        .unwrap();
        assert_eq!(r.table.rows[1][1], 0.0);
        assert_eq!(r.verdict, Verdict::InsufficientRange);
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = TorusGrid::new(16, 4.0, 3).unwrap();
        let p = UnitScalePartition::new(&g).unwrap();
        let (f1, f2) = sharp_pair(&g, 0.8, 1.0, Phases::Random, 1);
        let spec = RandomSpec::new(Family::Gaussian, 1);
        let mut s = setup(vec![2.0], 20);
        assert!(averaging_decay(&f1, &f2, &p, &spec, &s).is_err());
        s.n_grid = vec![3.0];
        s.eps = 0.01;
        assert!(averaging_decay(&f1, &f2, &p, &spec, &s).is_err());
    }

    #[test]
    fn geometric_grid_endpoints() {
        let g = AveragingSetup::geometric(3.0, 12.0, 5);
        assert!((g[0] - 3.0).abs() < 1e-15 && (g[4] - 12.0).abs() < 1e-12);
        assert!((g[1] / g[0] - g[2] / g[1]).abs() < 1e-12);
    }
}
