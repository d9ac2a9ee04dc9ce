//! Unit-scale partition of unity on the frequency lattice.
//!
//! Each cell `k ∈ ℤ^dim` carries the bump `φ_k(ξ) = φ(|ξ - k|)` and the
//! normalized weight `ψ_k = φ_k / Σ_l φ_l`. The lattice is periodic with
//! frequency period `P = M / L`, so cells are taken modulo `P` and their
//! supports wrap. A cell is flagged as a boundary cell when its support
//! needs that wrap.
//!
//! Weights are evaluated on the fly from the bump and a cached per-point
//! normalization; nothing per cell is stored beyond its index.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::grid::{SpectralField, TorusGrid};

/// Smooth transition `θ(y)`: 0 for `y <= 0`, 1 for `y >= 1`.
fn transition(y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / y).exp();
    let b = (-1.0 / (1.0 - y)).exp();
    a / (a + b)
}

/// Radial bump: 1 on `[0, 1]`, 0 on `[2, ∞)`, smooth and nonincreasing.
pub fn bump_profile(r: f64) -> f64 {
    transition(2.0 - r)
}

/// One unit-scale cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    /// Lattice representative with components in `[-P/2, P/2)`.
    pub k: [i32; 3],
    /// Euclidean norm of `k`.
    pub norm: f64,
    /// Support wraps across the Nyquist boundary.
    pub boundary: bool,
}

#[derive(Clone, Debug)]
pub struct UnitScalePartition {
    grid: TorusGrid,
    period: i64,
    cells: Vec<Cell>,
    lookup: HashMap<[i32; 3], usize>,
    inv_sum: Vec<f64>,
    /// `φ(√d² / L)` indexed by the integer squared offset, for integer `L`.
    bump_table: Option<Vec<f64>>,
}

impl UnitScalePartition {
    pub fn new(grid: &TorusGrid) -> Result<Self> {
        let l = grid.l();
        if l < 4.0 {
            return Err(Error::GridTooCoarse(format!("L = {l} < 4")));
        }
        let p = grid.frequency_period();
        let period = p.round() as i64;
        if (p - period as f64).abs() > 1e-9 || period < 4 {
            return Err(Error::GridTooCoarse(format!(
                "frequency period M/L = {p} must be an integer of at least 4"
            )));
        }
        let dim = grid.dim();
        let integer_l = (l - l.round()).abs() < 1e-12;
        let bump_table = integer_l.then(|| {
            let li = l.round() as i64;
            (0..=(4 * li * li) as usize)
                .map(|d2| bump_profile((d2 as f64).sqrt() / l))
                .collect()
        });
        let mut part = Self {
            grid: grid.clone(),
            period,
            cells: Vec::new(),
            lookup: HashMap::new(),
            inv_sum: Vec::new(),
            bump_table,
        };
        part.inv_sum = part.normalization();

        let lo = -(period / 2);
        let reps: Vec<i32> = (lo..lo + period).map(|c| c as i32).collect();
        let mut ks = vec![[0i32; 3]];
        for axis in 0..dim {
            let mut next = Vec::with_capacity(ks.len() * reps.len());
            for k in &ks {
                for &c in &reps {
                    let mut k2 = *k;
                    k2[axis] = c;
                    next.push(k2);
                }
            }
            ks = next;
        }
        for k in ks {
            let norm = (k.iter().map(|&c| (c as f64).powi(2)).sum::<f64>()).sqrt();
            let mut boundary = false;
            part.visit_support(k, |_, _, wrapped| boundary |= wrapped);
            part.lookup.insert(k, part.cells.len());
            part.cells.push(Cell { k, norm, boundary });
        }
        Ok(part)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, k: [i32; 3]) -> Result<&Cell> {
        self.lookup
            .get(&k)
            .map(|&i| &self.cells[i])
            .ok_or(Error::UnknownCell(k))
    }

    /// Frequency period `M / L`.
    pub fn period(&self) -> i64 {
        self.period
    }

    /// Largest `|k|` among the cells.
    pub fn max_cell_norm(&self) -> f64 {
        self.cells.iter().map(|c| c.norm).fold(0.0, f64::max)
    }

    /// Representative of `-k`.
    pub fn neg_cell(&self, k: [i32; 3]) -> [i32; 3] {
        let mut out = [0i32; 3];
        for a in 0..self.grid.dim() {
            out[a] = self.wrap_component(-(k[a] as i64)) as i32;
        }
        out
    }

    fn wrap_component(&self, c: i64) -> i64 {
        let lo = -(self.period / 2);
        (c - lo).rem_euclid(self.period) + lo
    }

    fn bump_at(&self, d2_int: Option<i64>, r2: f64) -> f64 {
        match (&self.bump_table, d2_int) {
            (Some(t), Some(d2)) => t.get(d2 as usize).copied().unwrap_or(0.0),
            _ => bump_profile(r2.sqrt()),
        }
    }

    /// `1 / Σ_{j ∈ ℤ^dim} φ(|ξ - j|)` for every lattice point.
    fn normalization(&self) -> Vec<f64> {
        let g = &self.grid;
        let dim = g.dim();
        let l = g.l();
        let li = l.round() as i64;
        let mut memo: HashMap<[i64; 3], f64> = HashMap::new();
        let mut out = vec![0.0; g.len()];
        for (idx, slot) in out.iter_mut().enumerate() {
            let ms = g.wavenumbers(idx);
            let key = if self.bump_table.is_some() {
                let mut r = [0i64; 3];
                for a in 0..dim {
                    r[a] = ms[a].rem_euclid(li);
                }
                Some(r)
            } else {
                None
            };
            if let Some(v) = key.and_then(|k| memo.get(&k)) {
                *slot = *v;
                continue;
            }
            let xi: Vec<f64> = (0..dim).map(|a| ms[a] as f64 / l).collect();
            let ranges: Vec<(i64, i64)> = xi
                .iter()
                .map(|&x| (x.floor() as i64 - 2, x.ceil() as i64 + 2))
                .collect();
            let mut total = 0.0;
            let lo: [i64; 3] = std::array::from_fn(|a| if a < dim { ranges[a].0 } else { 0 });
            let hi: [i64; 3] = std::array::from_fn(|a| if a < dim { ranges[a].1 } else { 0 });
            let mut j = lo;
            loop {
                let mut r2 = 0.0;
                let mut d2 = 0i64;
                for a in 0..dim {
                    let d = xi[a] - j[a] as f64;
                    r2 += d * d;
                    let di = ms[a] - j[a] * li;
                    d2 += di * di;
                }
                if r2 < 4.0 {
                    total += self.bump_at(self.bump_table.as_ref().map(|_| d2), r2);
                }
                if !advance(&mut j, &lo, &hi, dim) {
                    break;
                }
            }
            let v = 1.0 / total;
            if let Some(k) = key {
                memo.insert(k, v);
            }
            *slot = v;
        }
        out
    }

    /// Call `visit(idx, ψ_k(ξ_idx), wrapped)` for every lattice point with
    /// a positive bump value. Indices may repeat when the support is wider
    /// than the period; callers accumulate.
    fn visit_support(&self, k: [i32; 3], mut visit: impl FnMut(usize, f64, bool)) {
        let g = &self.grid;
        let dim = g.dim();
        let m = g.m() as i64;
        let l = g.l();
        let li = l.round() as i64;
        let half = m / 2;
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for a in 0..dim {
            let c = k[a] as f64;
            lo[a] = ((c - 2.0) * l).floor() as i64;
            hi[a] = ((c + 2.0) * l).ceil() as i64;
        }
        let mut ms = lo;
        loop {
            let mut r2 = 0.0;
            let mut d2 = 0i64;
            let mut idx = 0usize;
            let mut wrapped = false;
            for a in 0..dim {
                let d = ms[a] as f64 / l - k[a] as f64;
                r2 += d * d;
                let di = ms[a] - k[a] as i64 * li;
                d2 += di * di;
                idx = idx * g.m() + ms[a].rem_euclid(m) as usize;
                wrapped |= ms[a] < -half || ms[a] >= half;
            }
            if r2 < 4.0 {
                let phi = self.bump_at(self.bump_table.as_ref().map(|_| d2), r2);
                if phi > 0.0 {
                    visit(idx, phi * self.inv_sum[idx], wrapped);
                }
            }
            if !advance(&mut ms, &lo, &hi, dim) {
                break;
            }
        }
    }

    /// Sparse weights `(idx, ψ_k(ξ_idx))` of one cell, one entry per index.
    pub fn weights(&self, k: [i32; 3]) -> Result<Vec<(usize, f64)>> {
        self.cell(k)?;
        let mut acc: Vec<(usize, f64)> = Vec::new();
        let mut seen: HashMap<usize, usize> = HashMap::new();
        self.visit_support(k, |idx, w, _| match seen.get(&idx) {
            Some(&pos) => acc[pos].1 += w,
            None => {
                seen.insert(idx, acc.len());
                acc.push((idx, w));
            }
        });
        Ok(acc)
    }

    /// Add `coefficient(cell) · ψ_k` into `out` for every cell.
    pub fn accumulate(&self, out: &mut [f64], mut coefficient: impl FnMut(&Cell) -> f64) {
        assert_eq!(out.len(), self.grid.len());
        for cell in &self.cells {
            let h = coefficient(cell);
            if h == 0.0 {
                continue;
            }
            self.visit_support(cell.k, |idx, w, _| out[idx] += h * w);
        }
    }

    /// Multiplier `Σ_k coefficient(k) ψ_k(ξ)` over the lattice.
    pub fn multiplier(&self, coefficient: impl FnMut(&Cell) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        self.accumulate(&mut out, coefficient);
        out
    }

    /// Make an even multiplier consistent on the unpaired Nyquist planes,
    /// where the storage partner of `ξ` is not `-ξ`.
    pub fn symmetrize_nyquist(&self, w: &mut [f64]) {
        let g = &self.grid;
        for idx in 0..g.len() {
            if g.is_nyquist(idx) {
                let n = g.neg_index(idx);
                if n > idx {
                    let avg = 0.5 * (w[idx] + w[n]);
                    w[idx] = avg;
                    w[n] = avg;
                }
            }
        }
    }

    /// `P_k f`: coefficients `ψ_k(ξ) f̂(ξ)`.
    pub fn project(&self, f: &SpectralField, k: [i32; 3]) -> Result<SpectralField> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        self.cell(k)?;
        let mut out = SpectralField::zeros(&self.grid);
        out.set_real(false);
        let src = f.coeffs();
        let dst = out.coeffs_mut();
        self.visit_support(k, |idx, w, _| dst[idx] += src[idx] * w);
        Ok(out)
    }

    /// Even multiplier of the low-frequency sum `Σ_{|k| <= N} ψ_k`.
    pub fn low_multiplier(&self, n: f64) -> Result<Vec<f64>> {
        check_cutoff(n)?;
        let mut w = self.multiplier(|c| if c.norm <= n { 1.0 } else { 0.0 });
        self.symmetrize_nyquist(&mut w);
        Ok(w)
    }

    /// `f_{<=N} = Σ_{|k| <= N} P_k f`.
    pub fn low_pass(&self, f: &SpectralField, n: f64) -> Result<SpectralField> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let w = self.low_multiplier(n)?;
        Ok(f.multiplied(|idx| w[idx]))
    }

    /// Even multiplier of `Σ_{|k| > N} ψ_k`; exactly zero when no cell lies
    /// beyond `N`.
    pub fn high_multiplier(&self, n: f64) -> Result<Vec<f64>> {
        check_cutoff(n)?;
        let mut w = self.multiplier(|c| if c.norm > n { 1.0 } else { 0.0 });
        self.symmetrize_nyquist(&mut w);
        Ok(w)
    }

    /// `f_{>N} = Σ_{|k| > N} P_k f`.
    pub fn high_pass(&self, f: &SpectralField, n: f64) -> Result<SpectralField> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let w = self.high_multiplier(n)?;
        Ok(f.multiplied(|idx| w[idx]))
    }

    /// `(f - f_{>N}, f_{>N})`: the halves add up to `f` exactly.
    pub fn split(&self, f: &SpectralField, n: f64) -> Result<(SpectralField, SpectralField)> {
        let high = self.high_pass(f, n)?;
        Ok((f.sub(&high), high))
    }

    /// `max_ξ |Σ_k ψ_k(ξ) - 1|`, summed cell by cell.
    pub fn unity_defect(&self) -> f64 {
        let total = self.multiplier(|_| 1.0);
        total.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Odometer step over the box `lo..=hi` in the first `dim` axes.
fn advance(j: &mut [i64; 3], lo: &[i64; 3], hi: &[i64; 3], dim: usize) -> bool {
    for a in (0..dim).rev() {
        if j[a] < hi[a] {
            j[a] += 1;
            return true;
        }
        j[a] = lo[a];
    }
    false
}

fn check_cutoff(n: f64) -> Result<()> {
    if !(n >= 3.0) {
        return Err(Error::InvalidParameter(format!("cutoff N = {n} must be at least 3")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::sobolev_norm;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn random_field(grid: &TorusGrid, seed: u64) -> SpectralField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        SpectralField::from_physical_real(grid, &samples).unwrap()
    }

    #[test]
    fn bump_values() {
        assert_eq!(bump_profile(0.0), 1.0);
        assert_eq!(bump_profile(0.5), 1.0);
        assert_eq!(bump_profile(1.0), 1.0);
        assert_eq!(bump_profile(2.0), 0.0);
        assert_eq!(bump_profile(3.0), 0.0);
        assert!((bump_profile(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=200 {
            let v = bump_profile(1.0 + i as f64 / 200.0);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn one_dimensional_cells() {
        let g = TorusGrid::new(64, 4.0, 1).unwrap();
        let p = UnitScalePartition::new(&g).unwrap();
        let ks: Vec<i32> = p.cells().iter().map(|c| c.k[0]).collect();
        assert_eq!(ks, (-8..=7).collect::<Vec<_>>());
        // supports of |k| >= 7 reach past ±8
        for c in p.cells() {
            assert_eq!(c.boundary, c.k[0] <= -7 || c.k[0] >= 7, "cell {:?}", c.k);
        }
    }

    #[test]
    fn rejects_coarse_grids() {
        let g = TorusGrid::new(16, 2.0, 2).unwrap();
        assert!(matches!(UnitScalePartition::new(&g), Err(Error::GridTooCoarse(_))));
        let g = TorusGrid::new(12, 4.0, 1).unwrap();
        assert!(UnitScalePartition::new(&g).is_err());
    }

    #[test]
    fn unity_in_three_dimensions() {
        let g = TorusGrid::new(16, 4.0, 3).unwrap();
        let p = UnitScalePartition::new(&g).unwrap();
        assert!(p.unity_defect() <= 1e-12);
        for (idx, &w) in p.multiplier(|_| 1.0).iter().enumerate() {
            assert!((w - 1.0).abs() <= 1e-12, "idx {idx}");
        }
    }

    #[test]
    fn unity_with_non_integer_scale() {
        let g = TorusGrid::new(36, 4.5, 2).unwrap();
        let p = UnitScalePartition::new(&g).unwrap();
        assert!(p.unity_defect() <= 1e-12);
    }

    #[test]
    fn center_weight_at_least_one_over_27() {
        let g = TorusGrid::new(32, 4.0, 3).unwrap();
        let p = UnitScalePartition::new(&g).unwrap();
        // oracle: brute-force count of integer translates overlapping ξ = k
        let mut s = 0.0;
        for a in -2i32..=2 {
            for b in -2i32..=2 {
                for c in -2i32..=2 {
                    s += bump_profile(((a * a + b * b + c * c) as f64).sqrt());
                }
            }
        }
        let count = (-2i32..=2)
            .flat_map(|a| (-2i32..=2).flat_map(move |b| (-2i32..=2).map(move |c| a * a + b * b + c * c)))
            .filter(|&r2| r2 < 4)
            .count();
        assert_eq!(count, 27);
        for cell in p.cells() {
            let idx = g.index_of([cell.k[0] as i64 * 4, cell.k[1] as i64 * 4, cell.k[2] as i64 * 4]);
            let w = p
                .weights(cell.k)
                .unwrap()
                .into_iter()
                .find(|&(i, _)| i == idx)
                .unwrap()
                .1;
            assert!(w >= 1.0 / 27.0);
            assert!((w - 1.0 / s).abs() < 1e-14);
        }
    }

    #[test]
    fn weights_bounded_and_supported() {
        let g = TorusGrid::new(32, 4.0, 2).unwrap();
        let p = UnitScalePartition::new(&g).unwrap();
        for cell in p.cells().iter().step_by(7) {
            for (idx, w) in p.weights(cell.k).unwrap() {
                assert!((0.0..=1.0 + 1e-15).contains(&w));
                let ms = g.wavenumbers(idx);
                // periodic distance to k
                let mut r2 = 0.0;
                for a in 0..2 {
                    let d = (ms[a] as f64 / 4.0 - cell.k[a] as f64).rem_euclid(8.0);
                    let d = d.min(8.0 - d);
                    r2 += d * d;
                }
                assert!(r2 < 4.0);
            }
        }
    }

    #[test]
    fn sum_of_projections_recovers_field() {
        let g = TorusGrid::new(16, 4.0, 3).unwrap();
        let p = UnitScalePartition::new(&g).unwrap();
        let f = random_field(&g, 3);
        let mut acc = SpectralField::zeros(&g);
        for cell in p.cells() {
            acc.axpy(1.0, &p.project(&f, cell.k).unwrap());
        }
        let err = sobolev_norm(&acc.sub(&f), 0.7, false);
        assert!(err <= 1e-10 * sobolev_norm(&f, 0.7, false));
    }

    #[test]
    fn projection_is_not_idempotent() {
        let g = TorusGrid::new(32, 4.0, 1).unwrap();
        let p = UnitScalePartition::new(&g).unwrap();
        let f = random_field(&g, 1);
        let once = p.project(&f, [1, 0, 0]).unwrap();
        let twice = p.project(&once, [1, 0, 0]).unwrap();
        assert!(sobolev_norm(&once.sub(&twice), 0.0, false) > 1e-3 * sobolev_norm(&once, 0.0, false));
    }

    #[test]
    fn plateau_and_disjoint_support() {
        let g = TorusGrid::new(64, 4.0, 1).unwrap();
        let p = UnitScalePartition::new(&g).unwrap();
        // ξ = 2 sits on the plateau of cell 2 only up to neighbours; use the
        // exact center where ψ_2 = 1/S.
        let f = SpectralField::mode(&g, [8, 0, 0], Complex64::new(1.0, 0.0));
        let far = p.project(&f, [-5, 0, 0]).unwrap();
        assert!(far.is_zero());
        let near = p.project(&f, [2, 0, 0]).unwrap();
        assert!(!near.is_zero());
        assert!(near.coeffs()[g.index_of([8, 0, 0])].re <= 1.0);
        assert!(p.project(&f, [9, 0, 0]).is_err());
    }

    #[test]
    fn low_high_split() {
        let g = TorusGrid::new(32, 4.0, 3).unwrap();
        let p = UnitScalePartition::new(&g).unwrap();
        let f = random_field(&g, 9);
        let n = 3.0;
        let (low, high) = p.split(&f, n).unwrap();
        let back = low.add(&high);
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            assert!((a - b).norm() <= 1e-15 * (1.0 + b.norm()));
        }
        for idx in 0..g.len() {
            if g.magnitude(idx) < n - 2.0 {
                assert!(high.coeffs()[idx].norm() <= 1e-14 * f.coeffs()[idx].norm().max(1e-300));
            }
        }
        assert!(low.hermitian_defect() < 1e-12);
        assert!(high.hermitian_defect() < 1e-12);
        assert!(p.low_pass(&f, 2.5).is_err());
    }

    #[test]
    fn cutoff_beyond_last_cell() {
        let g = TorusGrid::new(16, 4.0, 3).unwrap();
        let p = UnitScalePartition::new(&g).unwrap();
        let f = random_field(&g, 4);
        let high = p.high_pass(&f, p.max_cell_norm() + 1.0).unwrap();
        assert!(sobolev_norm(&high, 0.0, false) <= 1e-14 * sobolev_norm(&f, 0.0, false));
    }

    #[test]
    fn mode_beyond_cutoff_has_no_low_part() {
        let g = TorusGrid::new(128, 4.0, 1).unwrap();
        let p = UnitScalePartition::new(&g).unwrap();
        let n = 4.0;
        // |ξ| = N + 5 = 9 -> wavenumber 36
        let f = SpectralField::mode(&g, [36, 0, 0], Complex64::new(1.0, 0.0));
        assert!(p.low_pass(&f, n).unwrap().is_zero());
    }

    #[test]
    fn negated_cells() {
        let g = TorusGrid::new(32, 4.0, 3).unwrap();
        let p = UnitScalePartition::new(&g).unwrap();
        assert_eq!(p.neg_cell([1, -2, 3]), [-1, 2, -3]);
        assert_eq!(p.neg_cell([-4, 0, 1]), [-4, 0, -1]);
        for c in p.cells() {
            assert!(p.cell(p.neg_cell(c.k)).is_ok());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn unity_holds_across_grids(m_over_l in 4usize..10, l in 4usize..7, dim in 1usize..3) {
            let m = m_over_l * l;
            prop_assume!(m % 2 == 0);
            let g = TorusGrid::new(m, l as f64, dim).unwrap();
            let p = UnitScalePartition::new(&g).unwrap();
            prop_assert!(p.unity_defect() <= 1e-12);
        }

        #[test]
        fn low_plus_high_is_identity(seed in any::<u64>(), n in 3.0f64..6.0) {
            let g = TorusGrid::new(32, 4.0, 2).unwrap();
            let p = UnitScalePartition::new(&g).unwrap();
            let f = random_field(&g, seed);
            let (low, high) = p.split(&f, n).unwrap();
            for ((a, b), c) in low.coeffs().iter().zip(high.coeffs()).zip(f.coeffs()) {
                prop_assert!((a + b - c).norm() <= 1e-15 * (1.0 + c.norm()));
            }
        }
    }
}
