//! Empirical tails `ℙ(|F| > λ)` and their Gaussian-shape fit.

use crate::error::{Error, Result};
use crate::experiments::{
    batch_mean, censored, fit_line, par_samples, sorted, summary_quantiles, Estimate, McReport, Table, TailFit,
    Verdict, MIN_EXCEEDANCES, MIN_FIT_POINTS,
};

/// Survival levels of the default `λ` grid, from the median outwards.
const LEVELS: [f64; 16] = [
    0.5, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4, 5e-5, 2e-5, 1e-5,
];

/// Points with survival above this level are reported but not fitted.
const FIT_LEVEL: f64 = 0.1;

/// Survival of `values` on `lambda` (default: empirical quantiles at the
/// levels above down to `10/n`), fitted as `log ℙ` against `x(λ)` over
/// the tail points with at least [`MIN_EXCEEDANCES`] exceedances.
pub fn tail_fit(values: &[f64], lambda: Option<&[f64]>, x_of: impl Fn(f64) -> f64) -> TailFit {
    let n = values.len();
    let s = sorted(values);
    let grid: Vec<f64> = match lambda {
        Some(l) => l.to_vec(),
        None => LEVELS
            .iter()
            .filter(|&&p| p * n as f64 >= MIN_EXCEEDANCES as f64)
            .map(|&p| crate::experiments::quantile(&s, 1.0 - p))
            .collect(),
    };
    let mut exceedances = Vec::with_capacity(grid.len());
    let mut survival = Vec::with_capacity(grid.len());
    for &l in &grid {
        let count = n - s.partition_point(|&v| v <= l);
        exceedances.push(count);
        survival.push(count as f64 / n as f64);
    }
    let fitted: Vec<bool> = exceedances
        .iter()
        .zip(&survival)
        .map(|(&c, &p)| c >= MIN_EXCEEDANCES && p <= FIT_LEVEL)
        .collect();
    let truncated = exceedances.iter().filter(|&&c| c < MIN_EXCEEDANCES).count();
    let x: Vec<f64> = grid.iter().map(|&l| x_of(l)).collect();
    let (fx, fy): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(&survival)
        .zip(&fitted)
        .filter(|(_, &f)| f)
        .map(|((&a, &p), _)| (a, p.ln()))
        .unzip();
    let fit = if fx.len() >= MIN_FIT_POINTS {
        fit_line(&fx, &fy)
    } else {
        None
    };
    TailFit {
        lambda: grid,
        x,
        exceedances,
        survival,
        fitted,
        fit,
        truncated,
    }
}

/// Verdict of a tail fit: negative slope with `R² >= 0.95`.
pub fn tail_verdict(tail: &TailFit) -> Verdict {
    match tail.fit {
        None => Verdict::InsufficientRange,
        Some(f) => Verdict::from_bool(f.slope < 0.0 && f.r2 >= 0.95),
    }
}

pub(crate) fn tail_table(tail: &TailFit, samples: usize) -> Table {
    let mut t = Table::new(&[
        "lambda",
        "x",
        "exceedances",
        "survival",
        "log_survival",
        "fitted",
        "censored",
    ]);
    for i in 0..tail.lambda.len() {
        t.push(vec![
            tail.lambda[i],
            tail.x[i],
            tail.exceedances[i] as f64,
            tail.survival[i],
            tail.survival[i].ln(),
            tail.fitted[i] as u8 as f64,
            censored(tail.survival[i], samples) as u8 as f64,
        ]);
    }
    t
}

/// Tail of `|F|` for a statistic evaluated on `samples` independent draws
/// (`sampler(i)` must depend only on `i` and the seed it captured).
pub fn tail_estimate(
    id: &str,
    sampler: impl Fn(u64) -> f64 + Sync + Send,
    samples: usize,
    seed: u64,
    lambda: Option<&[f64]>,
) -> Result<McReport> {
    if samples < 100 {
        return Err(Error::InvalidParameter(format!(
            "tail estimate needs >= 100 samples, got {samples}"
        )));
    }
    let values: Vec<f64> = par_samples(samples, sampler).into_iter().map(f64::abs).collect();
    let mut report = McReport::new(id, samples, seed);
    let (m, se) = batch_mean(&values)?;
    report.estimates.push(Estimate::new("mean_abs", m, se));
    report.quantiles = summary_quantiles(&values);
    let tail = tail_fit(&values, lambda, |l| l * l);
    if let Some(f) = tail.fit {
        report.estimates.push(Estimate::new("slope", f.slope, f.slope_se));
        report.estimates.push(Estimate::new("r2", f.r2, f64::NAN));
    }
    if tail.truncated > 0 {
        report.notes.push(format!(
            "{} grid points with fewer than {MIN_EXCEEDANCES} exceedances",
            tail.truncated
        ));
    }
    report.band = "log survival vs lambda^2: slope < 0 and R^2 >= 0.95".into();
    report.verdict = tail_verdict(&tail);
    report.table = tail_table(&tail, samples);
    report.tail = Some(tail);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{Family, RandomSpec};

    #[test]
    fn gaussian_tail_has_half_slope() {
        let spec = RandomSpec::new(Family::Gaussian, 11);
        let r = tail_estimate("tail", |i| spec.for_sample(i).draw([0, 0, 0], 1), 20_000, 11, None).unwrap();
        let slope = r.estimate("slope").unwrap().value;
        assert!(slope < -0.4 && slope > -0.7, "slope {slope}");
        assert!(r.verdict.passed());
    }

    #[test]
    fn bounded_statistic_truncates() {
        let v: Vec<f64> = (0..1000).map(|i| (i % 2) as f64).collect();
        let t = tail_fit(&v, Some(&[0.5, 1.0, 2.0]), |l| l * l);
        assert_eq!(t.exceedances, vec![500, 0, 0]);
        assert_eq!(t.truncated, 2);
        assert!(t.fit.is_none());
        assert_eq!(tail_verdict(&t), Verdict::InsufficientRange);
    }

    #[test]
    fn default_grid_stops_at_resolvable_levels() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let t = tail_fit(&v, None, |l| l);
        assert!(t.exceedances.iter().all(|&c| c >= MIN_EXCEEDANCES));
        assert_eq!(t.lambda.len(), 7);
    }
}
