//! Distribution of `‖u^ω_f‖_{L⁵_t L^{10}_x}` and the smallness rate.

use crate::error::{Error, Result};
use crate::experiments::tail::{tail_table, tail_verdict};
use crate::experiments::{
    batch_mean, free_mixed_norm, par_samples, summary_quantiles, tail_fit, Estimate, McReport, Verdict,
};
use crate::grid::{SpectralField, WaveState};
use crate::partition::UnitScalePartition;
use crate::random::{randomize, RandomSpec};

fn free_norm(
    f1: &SpectralField,
    f2: &SpectralField,
    part: &UnitScalePartition,
    spec: &RandomSpec,
    t: f64,
    dt: f64,
) -> f64 {
    let d = randomize(f1, f2, spec, part).expect("grids checked by caller");
    let state = WaveState {
        u: d.f1w,
        ut: d.f2w,
        t: 0.0,
    };
    free_mixed_norm(&state, t, dt, 5.0, 10.0).expect("dt validated")
}

/// Samples `F = ‖u^ω_f‖_{L⁵L^{10}([0, T_max])}` for `f` and, with the same
/// seeds, for `f/2`. Reports `ℙ(F > ε₀)` for both and the tail of `F`
/// against `K²`. Passes when the tail fit is negative with `R² >= 0.95`
/// and halving the data does not raise the exceedance rate.
#[allow(clippy::too_many_arguments)]
pub fn quintic_event_rate(
    f1: &SpectralField,
    f2: &SpectralField,
    part: &UnitScalePartition,
    spec: &RandomSpec,
    eps0: f64,
    samples: usize,
    t_max: f64,
    dt: f64,
) -> Result<McReport> {
    if *f1.grid() != *part.grid() || *f2.grid() != *part.grid() {
        return Err(Error::GridMismatch);
    }
    if !(dt > 0.0 && t_max >= dt) {
        return Err(Error::InvalidParameter(format!(
            "need T_max >= dt > 0, got {t_max}, {dt}"
        )));
    }
    let h1 = f1.scaled(0.5);
    let h2 = f2.scaled(0.5);
    let pairs: Vec<(f64, f64)> = par_samples(samples, |i| {
        let sp = spec.for_sample(i);
        (
            free_norm(f1, f2, part, &sp, t_max, dt),
            free_norm(&h1, &h2, part, &sp, t_max, dt),
        )
    });
    let full: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let half: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let exceed = |v: &[f64]| v.iter().map(|&x| (x > eps0) as u8 as f64).collect::<Vec<f64>>();
    let (rate, rate_se) = batch_mean(&exceed(&full))?;
    let (rate_half, rate_half_se) = batch_mean(&exceed(&half))?;
    let (m, se) = batch_mean(&full)?;

    let mut report = McReport::new("quintic_rate", samples, spec.master_seed);
    report.estimates.push(Estimate::new("mean_norm", m, se));
    report.estimates.push(Estimate::new("rate", rate, rate_se));
    report
        .estimates
        .push(Estimate::new("rate_half", rate_half, rate_half_se));
    report.estimates.push(Estimate::new("small_rate", 1.0 - rate, rate_se));
    report
        .estimates
        .push(Estimate::new("small_rate_half", 1.0 - rate_half, rate_half_se));
    report.quantiles = summary_quantiles(&full);
    let tail = tail_fit(&full, None, |k| k * k);
    if let Some(f) = tail.fit {
        report.estimates.push(Estimate::new("slope", f.slope, f.slope_se));
        report.estimates.push(Estimate::new("r2", f.r2, f64::NAN));
    }
    report.band = "log P(F > K) vs K^2: slope < 0, R^2 >= 0.95; rate(f/2) <= rate(f)".into();
    report.verdict = tail_verdict(&tail).and(Verdict::from_bool(rate_half <= rate));
    report.table = tail_table(&tail, samples);
    report.tail = Some(tail);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::random::Family;

    #[test]
    fn zero_data_zero_rate() {
        let g = TorusGrid::new(16, 4.0, 3).unwrap();
        let p = UnitScalePartition::new(&g).unwrap();
        let z = SpectralField::zeros(&g);
        let r = quintic_event_rate(&z, &z, &p, &RandomSpec::new(Family::Gaussian, 0), 0.1, 100, 1.0, 0.1).unwrap();
        assert_eq!(r.estimate("rate").unwrap().value, 0.0);
        assert_eq!(r.estimate("mean_norm").unwrap().value, 0.0);
        assert_eq!(r.verdict, Verdict::InsufficientRange);
    }
}
