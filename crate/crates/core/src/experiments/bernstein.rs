//! Deterministic partition checks: the unity defect, unit-scale Bernstein
//! ratios and the square-function norm equivalence.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::experiments::{par_samples, Estimate, McReport, Table, Verdict};
use crate::grid::{SpectralField, TorusGrid};
use crate::partition::UnitScalePartition;
use crate::random::splitmix;

/// `max_ξ |Σ_k ψ_k(ξ) - 1|`.
pub fn partition_check(part: &UnitScalePartition) -> f64 {
    part.unity_defect()
}

/// Field with independent complex Gaussian coefficients times
/// `⟨ξ⟩^{-decay}`, Nyquist planes zeroed.
pub fn gaussian_test_field(grid: &TorusGrid, decay: f64, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..grid.len())
        .map(|i| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            if grid.is_nyquist(i) {
                return Complex64::default();
            }
            let r = grid.magnitude(i);
            Complex64::new(re, im) * (1.0 + r * r).powf(-decay / 2.0)
        })
        .collect();
    SpectralField::from_coeffs(grid, coeffs, false).expect("sizes match")
}

fn sample_seed(seed: u64, i: u64) -> u64 {
    splitmix(splitmix(seed) ^ i)
}

/// For each `p₁ < p₂`, the largest `‖P_k f‖_{p₂} / ‖P_k f‖_{p₁}` over
/// random fields and each unflagged cell. Passes when, for every pair, the
/// maximum over the outer half of cells (by `|k|`) is at most twice the
/// maximum over the inner half.
pub fn bernstein_survey(
    part: &UnitScalePartition,
    p_pairs: &[(f64, f64)],
    samples: usize,
    seed: u64,
) -> Result<McReport> {
    if p_pairs.iter().any(|&(a, b)| !(a >= 1.0 && b >= a)) {
        return Err(Error::InvalidParameter("pairs need 1 <= p1 <= p2".into()));
    }
    let cells: Vec<_> = part.cells().iter().filter(|c| !c.boundary).cloned().collect();
    if cells.len() < 2 {
        return Err(Error::InvalidParameter("fewer than two unflagged cells".into()));
    }
    let grid = part.grid().clone();
    // per sample: per cell: per pair ratio
    let ratios: Vec<Vec<Vec<f64>>> = par_samples(samples, |i| {
        let f = gaussian_test_field(&grid, 0.0, sample_seed(seed, i));
        cells
            .iter()
            .map(|c| {
                let pk = part.project(&f, c.k).expect("known cell");
                let x: Vec<f64> = pk.to_physical().iter().map(|z| z.norm()).collect();
                let w = grid.sample_weight();
                p_pairs
                    .iter()
                    .map(|&(a, b)| crate::norms::lp_norm_samples(&x, w, b) / crate::norms::lp_norm_samples(&x, w, a))
                    .collect()
            })
            .collect()
    });
    let mut norms: Vec<f64> = cells.iter().map(|c| c.norm).collect();
    norms.sort_by(f64::total_cmp);
    let median = norms[(norms.len() - 1) / 2];

    let mut report = McReport::new("bernstein", samples, seed);
    let mut table = Table::new(&["k1", "k2", "k3", "norm", "pair", "p1", "p2", "max_ratio", "mean_ratio"]);
    let mut ok = true;
    for (j, &(a, b)) in p_pairs.iter().enumerate() {
        let mut inner = 0.0f64;
        let mut outer = 0.0f64;
        for (ci, c) in cells.iter().enumerate() {
            let vals: Vec<f64> = ratios.iter().map(|s| s[ci][j]).collect();
            let max = vals.iter().cloned().fold(0.0, f64::max);
            let mean = crate::experiments::mean(&vals);
            if c.norm <= median {
                inner = inner.max(max);
            } else {
                outer = outer.max(max);
            }
            table.push(vec![
                c.k[0] as f64,
                c.k[1] as f64,
                c.k[2] as f64,
                c.norm,
                j as f64,
                a,
                b,
                max,
                mean,
            ]);
        }
        let spread = outer / inner;
        ok &= spread <= 2.0;
        report
            .estimates
            .push(Estimate::new(format!("outer_over_inner_p{a}_p{b}"), spread, f64::NAN));
        report.estimates.push(Estimate::new(
            format!("max_ratio_p{a}_p{b}"),
            inner.max(outer),
            f64::NAN,
        ));
    }
    report
        .notes
        .push(format!("{} unflagged cells, inner half |k| <= {median}", cells.len()));
    report.band = "max ratio over outer cells <= 2 x max ratio over inner cells".into();
    report.verdict = Verdict::from_bool(ok);
    report.table = table;
    Ok(report)
}

/// `Σ_k ψ_k(ξ)²` on the lattice.
pub fn square_sum_multiplier(part: &UnitScalePartition) -> Vec<f64> {
    let mut q = vec![0.0; part.grid().len()];
    for c in part.cells() {
        for (idx, w) in part.weights(c.k).expect("known cell") {
            q[idx] += w * w;
        }
    }
    q
}

/// `(Σ_k ‖P_k f‖²_{H^s})^{1/2} / ‖f‖_{H^s}` for random fields on each
/// grid: whole-lattice fields and fields localized to single unflagged
/// cells. The reported `c₀` is the largest of `ratio` and `1/ratio`;
/// passes when `c₀ <= 30` on every grid and the per-grid values agree
/// within a factor of 2.
pub fn norm_equiv_survey(parts: &[UnitScalePartition], s: f64, samples: usize, seed: u64) -> Result<McReport> {
    if parts.is_empty() {
        return Err(Error::InvalidParameter("no partitions".into()));
    }
    let mut report = McReport::new("normequiv", samples, seed);
    let mut table = Table::new(&[
        "grid_m",
        "grid_l",
        "min_ratio",
        "max_ratio",
        "c0",
        "min_cell_ratio",
        "max_cell_ratio",
    ]);
    let mut c0s = Vec::new();
    for part in parts {
        let grid = part.grid().clone();
        let q = square_sum_multiplier(part);
        let weight = |i: usize| (1.0 + grid.magnitude(i).powi(2)).powf(s);
        let ratio = |f: &SpectralField| {
            let mut num = 0.0;
            let mut den = 0.0;
            for (i, c) in f.coeffs().iter().enumerate() {
                let a = weight(i) * c.norm_sqr();
                num += q[i] * a;
                den += a;
            }
            (num / den).sqrt()
        };
        let whole: Vec<f64> = par_samples(samples, |i| {
            ratio(&gaussian_test_field(&grid, s + 1.6, sample_seed(seed, i)))
        });
        let inner: Vec<_> = part.cells().iter().filter(|c| !c.boundary).collect();
        let cell_ratios: Vec<f64> = inner
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let base = gaussian_test_field(&grid, 0.0, sample_seed(seed ^ 0xC311, j as u64));
                let mut mask = vec![0.0; grid.len()];
                for (idx, w) in part.weights(c.k).expect("known cell") {
                    mask[idx] = if w > 0.0 { 1.0 } else { 0.0 };
                }
                ratio(&base.multiplied(|i| mask[i]))
            })
            .collect();
        let all = whole.iter().chain(&cell_ratios);
        let lo = all.clone().cloned().fold(f64::INFINITY, f64::min);
        let hi = all.cloned().fold(0.0, f64::max);
        let c0 = hi.max(1.0 / lo);
        let wlo = whole.iter().cloned().fold(f64::INFINITY, f64::min);
        let whi = whole.iter().cloned().fold(0.0, f64::max);
        let clo = cell_ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let chi = cell_ratios.iter().cloned().fold(0.0, f64::max);
        table.push(vec![grid.m() as f64, grid.l(), wlo, whi, c0, clo, chi]);
        report
            .estimates
            .push(Estimate::new(format!("c0_m{}", grid.m()), c0, f64::NAN));
        c0s.push(c0);
    }
    let max = c0s.iter().cloned().fold(0.0, f64::max);
    let min = c0s.iter().cloned().fold(f64::INFINITY, f64::min);
    report.estimates.push(Estimate::new("c0", max, f64::NAN));
    report.band = "c0 <= 30 on every grid, per-grid c0 within a factor of 2".into();
    report.verdict = Verdict::from_bool(max <= 30.0 && max / min <= 2.0);
    report.table = table;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::sobolev_norm;

    fn part(m: usize) -> UnitScalePartition {
        UnitScalePartition::new(&TorusGrid::new(m, 4.0, 3).unwrap()).unwrap()
    }

    #[test]
    fn unity_defect_is_tiny() {
        assert!(partition_check(&part(32)) <= 1e-12);
    }

    #[test]
    fn equal_exponents_give_unit_ratios() {
        let r = bernstein_survey(&part(32), &[(4.0, 4.0)], 3, 1).unwrap();
        assert!(r.table.rows.iter().all(|row| (row[7] - 1.0).abs() < 1e-12));
        assert!(r.verdict.passed());
    }

    #[test]
    fn square_sum_matches_projections() {
        let p = part(16);
        let g = p.grid().clone();
        let f = gaussian_test_field(&g, 1.0, 4);
        let mut direct = 0.0;
        for c in p.cells() {
            direct += sobolev_norm(&p.project(&f, c.k).unwrap(), 0.7, false).powi(2);
        }
        let q = square_sum_multiplier(&p);
        let via: f64 = f
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| q[i] * (1.0 + g.magnitude(i).powi(2)).powf(0.7) * c.norm_sqr())
            .sum::<f64>()
            * g.coefficient_weight();
        assert!((direct - via).abs() < 1e-10 * direct);
    }

    #[test]
    fn norm_equivalence_constant_is_moderate() {
        let r = norm_equiv_survey(&[part(16), part(32)], 0.8, 20, 2).unwrap();
        let c0 = r.estimate("c0").unwrap().value;
        assert!(c0 >= 1.0 && c0 <= 27f64.sqrt() + 1e-12, "c0 = {c0}");
        assert!(r.verdict.passed());
    }
}
