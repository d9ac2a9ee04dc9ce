//! Event rates `ℙ(A^c)` and `ℙ(B^c)` of the low-frequency statistics.

use crate::error::{Error, Result};
use crate::experiments::tail::{tail_table, tail_verdict};
use crate::experiments::{par_samples, summary_quantiles, tail_fit, Estimate, McReport, TailFit};
use crate::grid::SpectralField;
use crate::norms::{lp_norm, sobolev_norm};
use crate::partition::UnitScalePartition;
use crate::random::{coefficient, RandomSpec, StreamMode};

/// `(A, B)` of one sample: `A = ‖f_{1,<=N}‖^{(ρ+1)/2}_{L^{ρ+1}}`,
/// `B = ‖f_{1,<=N}‖_{H^s} + ‖f_{2,<=N}‖_{H^{s-1}}`, where `f_{<=N}` is the
/// low-pass of the randomized field.
pub fn low_statistics(
    f1: &SpectralField,
    f2: &SpectralField,
    part: &UnitScalePartition,
    low: &[f64],
    spec: &RandomSpec,
    s: f64,
    rho: f64,
    n: f64,
) -> (f64, f64) {
    // cells farther than N + 4 cannot overlap the low-pass support
    let reach = n + 4.0;
    let mut w1 = part.multiplier(|c| {
        if c.norm <= reach {
            coefficient(spec, part, c.k, 1)
        } else {
            0.0
        }
    });
    let mut w2 = part.multiplier(|c| {
        if c.norm <= reach {
            coefficient(spec, part, c.k, 2)
        } else {
            0.0
        }
    });
    let symmetric = spec.mode == StreamMode::Symmetric;
    if symmetric {
        part.symmetrize_nyquist(&mut w1);
        part.symmetrize_nyquist(&mut w2);
    }
    let mut l1 = f1.multiplied(|i| w1[i] * low[i]);
    let mut l2 = f2.multiplied(|i| w2[i] * low[i]);
    l1.set_real(symmetric && f1.is_real());
    l2.set_real(symmetric && f2.is_real());
    let a = lp_norm(&l1, rho + 1.0).powf((rho + 1.0) / 2.0);
    let b = sobolev_norm(&l1, s, false) + sobolev_norm(&l2, s - 1.0, false);
    (a, b)
}

/// Empirical `ℙ(A > K)` fitted against `K^{4/(ρ+1)}` and `ℙ(B > K)`
/// against `K²`. Passes when both fits have negative slope and
/// `R² >= 0.95`.
#[allow(clippy::too_many_arguments)]
pub fn lowfreq_event_rates(
    f1: &SpectralField,
    f2: &SpectralField,
    part: &UnitScalePartition,
    spec: &RandomSpec,
    s: f64,
    rho: f64,
    n: f64,
    k_grid: Option<(&[f64], &[f64])>,
    samples: usize,
) -> Result<McReport> {
    if samples < 10_000 {
        return Err(Error::InvalidParameter(format!("need >= 10^4 samples, got {samples}")));
    }
    if *f1.grid() != *part.grid() || *f2.grid() != *part.grid() {
        return Err(Error::GridMismatch);
    }
    let low = part.low_multiplier(n)?;
    let stats: Vec<(f64, f64)> = par_samples(samples, |i| {
        low_statistics(f1, f2, part, &low, &spec.for_sample(i), s, rho, n)
    });
    let a: Vec<f64> = stats.iter().map(|x| x.0).collect();
    let b: Vec<f64> = stats.iter().map(|x| x.1).collect();
    let ea = 4.0 / (rho + 1.0);
    let ta = tail_fit(&a, k_grid.map(|g| g.0), |k| k.powf(ea));
    let tb = tail_fit(&b, k_grid.map(|g| g.1), |k| k * k);

    let mut report = McReport::new("lowfreq", samples, spec.master_seed);
    let push = |r: &mut McReport, name: &str, t: &TailFit| {
        if let Some(f) = t.fit {
            r.estimates
                .push(Estimate::new(format!("{name}_slope"), f.slope, f.slope_se));
            r.estimates.push(Estimate::new(format!("{name}_r2"), f.r2, f64::NAN));
        }
        if t.truncated > 0 {
            r.notes.push(format!("{name}: {} grid points truncated", t.truncated));
        }
    };
    push(&mut report, "A", &ta);
    push(&mut report, "B", &tb);
    report.quantiles = summary_quantiles(&a);
    report.verdict = tail_verdict(&ta).and(tail_verdict(&tb));
    report.band = format!("log P(A > K) linear in K^{ea}, log P(B > K) linear in K^2: slope < 0, R^2 >= 0.95");
    let mut table = tail_table(&ta, samples);
    table.columns.insert(0, "event".into());
    for row in table.rows.iter_mut() {
        row.insert(0, 0.0);
    }
    for mut row in tail_table(&tb, samples).rows {
        row.insert(0, 1.0);
        table.rows.push(row);
    }
    report.notes.push("event column: 0 = A, 1 = B".into());
    report.table = table;
    report.tail = Some(ta);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{sharp_pair, Phases};
    use crate::grid::TorusGrid;
    use crate::random::{randomize, Family};

    #[test]
    fn statistics_match_full_randomization() {
        let g = TorusGrid::new(32, 4.0, 3).unwrap();
        let p = UnitScalePartition::new(&g).unwrap();
        let (f1, f2) = sharp_pair(&g, 0.8, 0.01, Phases::Random, 2);
        let spec = RandomSpec::new(Family::Gaussian, 9);
        let n = 3.0;
        let low = p.low_multiplier(n).unwrap();
        let (a, b) = low_statistics(&f1, &f2, &p, &low, &spec, 0.8, 3.0, n);
        let r = randomize(&f1, &f2, &spec, &p).unwrap();
        let l1 = p.low_pass(&r.f1w, n).unwrap();
        let l2 = p.low_pass(&r.f2w, n).unwrap();
        let a0 = lp_norm(&l1, 4.0).powi(2);
        let b0 = sobolev_norm(&l1, 0.8, false) + sobolev_norm(&l2, -0.2, false);
        assert!((a - a0).abs() < 1e-12 * a0);
        assert!((b - b0).abs() < 1e-12 * b0);
    }

    #[test]
    fn huge_k_gives_zero_rates() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let t = tail_fit(&v, Some(&[1e6, 2e6]), |k| k);
        assert!(t.survival.iter().all(|&p| p == 0.0));
    }
}
