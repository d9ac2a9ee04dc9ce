//! Random coefficient families and the randomization `f ↦ f^ω`.
//!
//! Every coefficient is drawn from its own generator, seeded by hashing
//! `(master_seed, k, component)` through a SplitMix64 chain. Values are
//! therefore independent of the order or thread in which cells are visited.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpectralField;
use crate::partition::{Cell, UnitScalePartition};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Rademacher,
    Uniform { a: f64 },
}

impl Family {
    /// Sub-Gaussian constant `c` with `E e^{γX} <= e^{cγ²}`.
    pub fn moment_constant(&self) -> f64 {
        match *self {
            Family::Gaussian | Family::Rademacher => 0.5,
            Family::Uniform { a } => a * a / 6.0,
        }
    }

    /// Closed-form `log E e^{γX}`.
    pub fn log_mgf(&self, gamma: f64) -> f64 {
        match *self {
            Family::Gaussian => 0.5 * gamma * gamma,
            Family::Rademacher => log_cosh(gamma),
            Family::Uniform { a } => log_sinhc(a * gamma),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Family::Gaussian | Family::Rademacher => 1.0,
            Family::Uniform { a } => a * a / 3.0,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Family::Gaussian => StandardNormal.sample(rng),
            Family::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Family::Uniform { a } => rng.gen_range(-a..a),
        }
    }
}

fn log_cosh(x: f64) -> f64 {
    let y = x.abs();
    y + (-2.0 * y).exp().ln_1p() - std::f64::consts::LN_2
}

/// `log(sinh x / x)`.
fn log_sinhc(x: f64) -> f64 {
    let y = x.abs();
    if y < 1e-4 {
        return y * y / 6.0;
    }
    y + (-(-2.0 * y).exp()).ln_1p() - std::f64::consts::LN_2 - y.ln()
}

/// How the coefficients of `k` and `-k` relate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamMode {
    /// `h_{-k} = h_k`, so real data stay real.
    #[default]
    Symmetric,
    /// Every cell independent; the randomized field is complex in general.
    Independent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    #[serde(flatten)]
    pub family: Family,
    pub master_seed: u64,
    #[serde(default)]
    pub mode: StreamMode,
}

impl RandomSpec {
    pub fn new(family: Family, master_seed: u64) -> Self {
        Self {
            family,
            master_seed,
            mode: StreamMode::Symmetric,
        }
    }

    pub fn with_mode(mut self, mode: StreamMode) -> Self {
        self.mode = mode;
        self
    }

    /// Spec of the `i`-th Monte Carlo sample: an independent master seed.
    pub fn for_sample(&self, i: u64) -> Self {
        let mut s = *self;
        s.master_seed = splitmix(splitmix(self.master_seed ^ 0x5341_4D50_4C45_0000) ^ i);
        s
    }

    /// Coefficient of cell `k` and component 1 or 2, without symmetrization.
    pub fn draw(&self, k: [i32; 3], component: u8) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_key(self.master_seed, k, component));
        self.family.draw(&mut rng)
    }
}

/// SplitMix64 finalizer.
pub fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream for `(master_seed, k, component)`.
pub fn stream_key(master_seed: u64, k: [i32; 3], component: u8) -> u64 {
    let mut h = splitmix(master_seed);
    for c in k {
        h = splitmix(h ^ (c as u32 as u64));
    }
    splitmix(h ^ component as u64)
}

/// `(h_k, l_k)` for one cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellCoefficient {
    pub k: [i32; 3],
    pub h: f64,
    pub l: f64,
}

fn key_cell(spec: &RandomSpec, part: &UnitScalePartition, k: [i32; 3]) -> [i32; 3] {
    match spec.mode {
        StreamMode::Independent => k,
        StreamMode::Symmetric => {
            let n = part.neg_cell(k);
            if n > k {
                n
            } else {
                k
            }
        }
    }
}

/// Coefficient of one cell and component under the spec's stream mode.
pub fn coefficient(spec: &RandomSpec, part: &UnitScalePartition, k: [i32; 3], component: u8) -> f64 {
    spec.draw(key_cell(spec, part, k), component)
}

/// Coefficients for every cell of the partition, in cell order.
pub fn sample_coefficients(spec: &RandomSpec, part: &UnitScalePartition) -> Vec<CellCoefficient> {
    part.cells()
        .iter()
        .map(|c| CellCoefficient {
            k: c.k,
            h: coefficient(spec, part, c.k, 1),
            l: coefficient(spec, part, c.k, 2),
        })
        .collect()
}

/// Coefficients for an explicit cell list.
pub fn sample_cells(spec: &RandomSpec, part: &UnitScalePartition, cells: &[Cell]) -> Result<Vec<CellCoefficient>> {
    if cells.is_empty() {
        return Err(Error::InvalidParameter("empty cell list".into()));
    }
    Ok(cells
        .iter()
        .map(|c| CellCoefficient {
            k: c.k,
            h: coefficient(spec, part, c.k, 1),
            l: coefficient(spec, part, c.k, 2),
        })
        .collect())
}

#[derive(Clone, Debug)]
pub struct RandomizedData {
    pub f1w: SpectralField,
    pub f2w: SpectralField,
    pub spec: RandomSpec,
    pub coefficients: Vec<CellCoefficient>,
}

/// `f̂_1^ω = (Σ_k h_k ψ_k) f̂_1` and likewise for `f_2` with `l_k`.
pub fn randomize(
    f1: &SpectralField,
    f2: &SpectralField,
    spec: &RandomSpec,
    part: &UnitScalePartition,
) -> Result<RandomizedData> {
    let coefficients = sample_coefficients(spec, part);
    let (f1w, f2w) = apply_coefficients(f1, f2, &coefficients, spec.mode, part)?;
    Ok(RandomizedData {
        f1w,
        f2w,
        spec: *spec,
        coefficients,
    })
}

/// Randomize with a given coefficient record (in cell order).
pub fn apply_coefficients(
    f1: &SpectralField,
    f2: &SpectralField,
    coefficients: &[CellCoefficient],
    mode: StreamMode,
    part: &UnitScalePartition,
) -> Result<(SpectralField, SpectralField)> {
    if *f1.grid() != *part.grid() || *f2.grid() != *part.grid() {
        return Err(Error::GridMismatch);
    }
    if coefficients.len() != part.cells().len() {
        return Err(Error::SizeMismatch {
            expected: part.cells().len(),
            got: coefficients.len(),
        });
    }
    let mut h = coefficients.iter().map(|c| c.h);
    let mut w1 = part.multiplier(|_| h.next().unwrap_or(0.0));
    let mut l = coefficients.iter().map(|c| c.l);
    let mut w2 = part.multiplier(|_| l.next().unwrap_or(0.0));
    let symmetric = mode == StreamMode::Symmetric;
    if symmetric {
        part.symmetrize_nyquist(&mut w1);
        part.symmetrize_nyquist(&mut w2);
    }
    let mut f1w = f1.multiplied(|i| w1[i]);
    let mut f2w = f2.multiplied(|i| w2[i]);
    f1w.set_real(symmetric && f1.is_real());
    f2w.set_real(symmetric && f2.is_real());
    Ok((f1w, f2w))
}

/// Result of the closed-form moment check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub c: f64,
    /// `max_γ E e^{γX} / e^{cγ²}`.
    pub max_ratio: f64,
    pub argmax_gamma: f64,
    pub satisfied: bool,
}

pub fn verify_moment_condition(family: &Family, c: f64, gammas: &[f64]) -> Result<MomentReport> {
    let lo = gammas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = gammas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo <= -10.0 && hi >= 10.0) {
        return Err(Error::InvalidParameter(format!(
            "γ grid [{lo}, {hi}] must span [-10, 10]"
        )));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("c = {c} must be positive")));
    }
    let mut best = (f64::NEG_INFINITY, 0.0);
    for &g in gammas {
        let log_ratio = family.log_mgf(g) - c * g * g;
        if log_ratio > best.0 {
            best = (log_ratio, g);
        }
    }
    let max_ratio = best.0.exp();
    Ok(MomentReport {
        c,
        max_ratio,
        argmax_gamma: best.1,
        satisfied: best.0 <= 1e-12,
    })
}

/// Uniform grid on `[-γ_max, γ_max]`.
pub fn gamma_grid(gamma_max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| -gamma_max + 2.0 * gamma_max * i as f64 / (points - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::norms::sobolev_norm;
    use proptest::prelude::*;

    fn partition(m: usize, dim: usize) -> UnitScalePartition {
        UnitScalePartition::new(&TorusGrid::new(m, 4.0, dim).unwrap()).unwrap()
    }

    #[test]
    fn rademacher_support_and_determinism() {
        let p = partition(32, 3);
        let spec = RandomSpec::new(Family::Rademacher, 7);
        let a = sample_coefficients(&spec, &p);
        assert!(a.iter().all(|c| c.h.abs() == 1.0 && c.l.abs() == 1.0));
        let b = sample_coefficients(&spec, &p);
        assert_eq!(a, b);
        let other = sample_coefficients(&RandomSpec::new(Family::Rademacher, 8), &p);
        assert_ne!(a, other);
    }

    #[test]
    fn order_independent() {
        let p = partition(16, 3);
        let spec = RandomSpec::new(Family::Gaussian, 99).with_mode(StreamMode::Independent);
        let mut rev: Vec<Cell> = p.cells().to_vec();
        rev.reverse();
        let fwd = sample_coefficients(&spec, &p);
        let mut back = sample_cells(&spec, &p, &rev).unwrap();
        back.reverse();
        assert_eq!(fwd, back);
        assert!(sample_cells(&spec, &p, &[]).is_err());
    }

    #[test]
    fn empirical_mean_within_clt_band() {
        let p = partition(88, 2);
        assert!(p.cells().len() >= 22 * 22);
        for fam in [Family::Gaussian, Family::Rademacher, Family::Uniform { a: 2.0 }] {
            let spec = RandomSpec::new(fam, 2024).with_mode(StreamMode::Independent);
            let mut vals = Vec::new();
            for s in 0..21u64 {
                for c in sample_coefficients(&spec.for_sample(s), &p) {
                    vals.push(c.h);
                }
            }
            let n = vals.len().min(10_000);
            let mean: f64 = vals[..n].iter().sum::<f64>() / n as f64;
            let sd = fam.variance().sqrt();
            assert!(mean.abs() <= 4.0 * sd / (n as f64).sqrt(), "{fam:?}: {mean}");
        }
    }

    #[test]
    fn symmetric_mode_pairs_cells() {
        let p = partition(32, 3);
        let spec = RandomSpec::new(Family::Gaussian, 3);
        let coeffs = sample_coefficients(&spec, &p);
        for (c, cell) in coeffs.iter().zip(p.cells()) {
            let n = p.neg_cell(cell.k);
            assert_eq!(c.h, coefficient(&spec, &p, n, 1));
        }
    }

    #[test]
    fn ones_reproduce_data_and_real_output() {
        let p = partition(16, 3);
        let g = p.grid().clone();
        let f1 = SpectralField::cosine(&g, [1, 2, 3], 1.0);
        let f2 = SpectralField::cosine(&g, [-5, 1, 0], 2.0);
        let ones: Vec<CellCoefficient> = p
            .cells()
            .iter()
            .map(|c| CellCoefficient { k: c.k, h: 1.0, l: 1.0 })
            .collect();
        let (a, b) = apply_coefficients(&f1, &f2, &ones, StreamMode::Symmetric, &p).unwrap();
        assert!(sobolev_norm(&a.sub(&f1), 0.0, false) < 1e-13 * sobolev_norm(&f1, 0.0, false));
        assert!(sobolev_norm(&b.sub(&f2), 0.0, false) < 1e-13 * sobolev_norm(&f2, 0.0, false));
        let mut x = f1.clone();
        x.axpy(1.0, &SpectralField::cosine(&g, [-8, 3, 1], 1.0));
        let r = randomize(&x, &f2, &RandomSpec::new(Family::Gaussian, 5), &p).unwrap();
        assert!(r.f1w.is_real());
        assert!(r.f1w.hermitian_defect() < 1e-12);
    }

    #[test]
    fn mismatched_grid_rejected() {
        let p = partition(16, 3);
        let other = TorusGrid::new(32, 4.0, 3).unwrap();
        let f = SpectralField::zeros(&other);
        assert!(matches!(
            randomize(&f, &f, &RandomSpec::new(Family::Gaussian, 1), &p),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn moment_condition_closed_forms() {
        let grid = gamma_grid(10.0, 2001);
        let g = verify_moment_condition(&Family::Gaussian, 0.5, &grid).unwrap();
        assert!((g.max_ratio - 1.0).abs() < 1e-14);
        let r = verify_moment_condition(&Family::Rademacher, 0.5, &grid).unwrap();
        assert!(r.max_ratio <= 1.0 + 1e-15 && r.satisfied);
        let bad = verify_moment_condition(&Family::Rademacher, 0.05, &grid).unwrap();
        assert!(!bad.satisfied);
        // oracle: cosh(10) e^{-5}
        let direct = 10f64.cosh() * (-0.05f64 * 100.0).exp();
        assert!(direct > 1.0);
        assert!(bad.max_ratio >= direct * (1.0 - 1e-12));
        let u = verify_moment_condition(&Family::Uniform { a: 1.5 }, 1.5 * 1.5 / 6.0, &grid).unwrap();
        assert!(u.satisfied);
        assert!(verify_moment_condition(&Family::Gaussian, 0.5, &gamma_grid(5.0, 11)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn uniform_bound_holds(a in 0.01f64..5.0, gamma in -50.0f64..50.0) {
            let fam = Family::Uniform { a };
            prop_assert!(fam.log_mgf(gamma) <= fam.moment_constant() * gamma * gamma + 1e-12);
        }

        #[test]
        fn log_forms_match_direct(x in -20.0f64..20.0) {
            prop_assert!((log_cosh(x) - x.cosh().ln()).abs() < 1e-12 * (1.0 + x.abs()));
            if x.abs() > 1e-3 {
                prop_assert!((log_sinhc(x) - (x.sinh() / x).ln()).abs() < 1e-11 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn draws_depend_only_on_key(seed in any::<u64>(), k0 in -8i32..8, k1 in -8i32..8) {
            let spec = RandomSpec::new(Family::Gaussian, seed);
            prop_assert_eq!(spec.draw([k0, k1, 0], 1), spec.draw([k0, k1, 0], 1));
            prop_assert!(spec.draw([k0, k1, 0], 1) != spec.draw([k0, k1, 0], 2));
        }
    }
}
