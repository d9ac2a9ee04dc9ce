//! Moment growth of `Σ c_n l_n(ω)`: `‖Σ c_n l_n‖_{L^p_ω} <= C √p ‖c‖₂`.

use crate::error::{Error, Result};
use crate::experiments::{batch_mean, par_samples, Estimate, McReport, Table, Verdict};
use crate::random::{Family, RandomSpec};

/// `(E|g|^p)^{1/p}` for a standard Gaussian `g`.
pub fn gaussian_abs_moment(p: f64) -> f64 {
    let log = 0.5 * p * std::f64::consts::LN_2 + libm::lgamma((p + 1.0) / 2.0) - 0.5 * std::f64::consts::PI.ln();
    (log / p).exp()
}

/// Empirical `(E|Σ c_n l_n|^p)^{1/p}` for each `p`, and the ratio to
/// `√p ‖c‖₂`. Passes when the ratio is nonincreasing in `p` up to two
/// standard errors.
pub fn large_deviation_moments(
    family: Family,
    seed: u64,
    c: &[f64],
    p_grid: &[f64],
    samples: usize,
) -> Result<McReport> {
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidParameter("coefficient vector is zero".into()));
    }
    if p_grid.is_empty() || p_grid.iter().any(|&p| !(2.0..=20.0).contains(&p)) {
        return Err(Error::InvalidParameter(
            "p grid must be a nonempty subset of [2, 20]".into(),
        ));
    }
    if samples < 10_000 {
        return Err(Error::InvalidParameter(format!("need >= 10^4 samples, got {samples}")));
    }
    let spec = RandomSpec::new(family, seed);
    let sums: Vec<f64> = par_samples(samples, |i| {
        let s = spec.for_sample(i);
        c.iter()
            .enumerate()
            .map(|(n, &cn)| cn * s.draw([n as i32, 0, 0], 1))
            .sum::<f64>()
            .abs()
    });

    let mut report = McReport::new("largedev", samples, seed);
    let mut table = Table::new(&[
        "p",
        "moment",
        "moment_se",
        "ratio",
        "ratio_se",
        "gaussian_moment",
        "z_gaussian",
    ]);
    let mut ratios: Vec<(f64, f64)> = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        // Rescale by the largest |S| so `|S|^p` stays finite.
        let top = sums.iter().cloned().fold(0.0, f64::max);
        let powers: Vec<f64> = sums.iter().map(|&v| (v / top).powf(p)).collect();
        let (m, se) = batch_mean(&powers)?;
        let moment = top * m.powf(1.0 / p);
        let moment_se = moment * se / (p * m);
        let ratio = moment / (p.sqrt() * norm);
        let ratio_se = moment_se / (p.sqrt() * norm);
        let (gauss, z) = if family == Family::Gaussian {
            let g = norm * gaussian_abs_moment(p);
            (g, (moment - g) / moment_se)
        } else {
            (f64::NAN, f64::NAN)
        };
        table.push(vec![p, moment, moment_se, ratio, ratio_se, gauss, z]);
        report
            .estimates
            .push(Estimate::new(format!("ratio_p{p}"), ratio, ratio_se));
        ratios.push((ratio, ratio_se));
    }
    let monotone = ratios
        .windows(2)
        .all(|w| w[1].0 <= w[0].0 + 2.0 * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt());
    let max = ratios.iter().map(|r| r.0).fold(0.0, f64::max);
    report.estimates.push(Estimate::new("max_ratio", max, f64::NAN));
    report.band = "moment / (sqrt(p) |c|_2) nonincreasing in p within 2 standard errors".into();
    report.verdict = Verdict::from_bool(monotone && ratios.iter().all(|r| r.1.is_finite()));
    report.table = table;
    Ok(report)
}
