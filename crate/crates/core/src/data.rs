//! Spectral test data with prescribed decay.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{SpectralField, TorusGrid};

/// Extra decay beyond the borderline `⟨ξ⟩^{-s-3/2}`.
pub const PROFILE_MARGIN: f64 = 0.1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phases {
    /// Independent uniform phases, paired for Hermitian symmetry.
    #[default]
    Random,
    /// All phases zero: the field is concentrated near the origin.
    Coherent,
}

/// Real field with `|f̂(ξ)| = amplitude · ⟨ξ⟩^{-decay}` and zeroed Nyquist
/// planes.
pub fn power_law_field(grid: &TorusGrid, decay: f64, amplitude: f64, phases: Phases, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![Complex64::default(); grid.len()];
    for idx in 0..grid.len() {
        if grid.is_nyquist(idx) {
            continue;
        }
        let neg = grid.neg_index(idx);
        if neg < idx {
            coeffs[idx] = coeffs[neg].conj();
            continue;
        }
        let r = grid.magnitude(idx);
        let modulus = amplitude * (1.0 + r * r).powf(-decay / 2.0);
        coeffs[idx] = match phases {
            Phases::Coherent => Complex64::new(modulus, 0.0),
            Phases::Random if neg == idx => {
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                Complex64::new(sign * modulus, 0.0)
            }
            Phases::Random => Complex64::from_polar(modulus, rng.gen_range(0.0..2.0 * PI)),
        };
    }
    SpectralField::from_coeffs(grid, coeffs, true).expect("sizes match")
}

/// Data pair sitting just inside `H^s × H^{s-1}`:
/// `|f̂_1| ~ ⟨ξ⟩^{-s-3/2-0.1}` and `|f̂_2| ~ ⟨ξ⟩^{-(s-1)-3/2-0.1}`.
pub fn sharp_pair(
    grid: &TorusGrid,
    s: f64,
    amplitude: f64,
    phases: Phases,
    seed: u64,
) -> (SpectralField, SpectralField) {
    let d1 = s + 1.5 + PROFILE_MARGIN;
    let f1 = power_law_field(grid, d1, amplitude, phases, seed);
    let f2 = power_law_field(grid, d1 - 1.0, amplitude, phases, seed ^ 0xF2F2_F2F2);
    (f1, f2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_is_real_and_sharp() {
        let g = TorusGrid::new(16, 4.0, 3).unwrap();
        let f = power_law_field(&g, 2.4, 1.0, Phases::Random, 1);
        assert!(f.hermitian_defect() < 1e-15);
        for idx in 0..g.len() {
            let c = f.coeffs()[idx];
            if g.is_nyquist(idx) {
                assert_eq!(c.norm(), 0.0);
            } else {
                let r = g.magnitude(idx);
                assert!((c.norm() - (1.0 + r * r).powf(-1.2)).abs() < 1e-15);
            }
        }
        let x = f.to_physical();
        assert!(x.iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn coherent_profile_peaks_at_origin() {
        let g = TorusGrid::new(16, 4.0, 2).unwrap();
        let f = power_law_field(&g, 2.0, 1.0, Phases::Coherent, 0);
        let x = f.to_physical_real();
        let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(x[0], max);
    }
}
