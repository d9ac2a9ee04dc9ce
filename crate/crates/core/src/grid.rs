//! Periodic lattice standing in for the whole space.
//!
//! The torus `[0, 2πL)^dim` is sampled by `M` equispaced points per axis.
//! Its frequency lattice is `{m/L : -M/2 <= m_i < M/2}`. Coefficients are
//! stored in FFT order along every axis (axis index `j` carries wavenumber
//! `j` for `j < M/2` and `j - M` otherwise), row-major with the last axis
//! contiguous.
//!
//! Fourier convention: `f̂(ξ) = (2πL)^{-dim} ∫ f(x) e^{-ix·ξ} dx`, discretized
//! with equal weights, so the forward transform is the DFT divided by
//! `M^dim` and the inverse is the plain exponential sum. Physical integrals
//! use the weight `(2πL)^dim / M^dim` per sample and coefficient sums carry
//! the weight `(2πL)^dim`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

struct GridInner {
    m: usize,
    l: f64,
    dim: usize,
    len: usize,
    magnitudes: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    padded: Mutex<HashMap<usize, TorusGrid>>,
    pad_maps: Mutex<HashMap<usize, Arc<PadMap>>>,
}

/// Index maps between a grid and its `factor`-times finer copy.
pub struct PadMap {
    /// `(coarse idx, fine idx, scale)`: Nyquist entries split in halves.
    pub spread: Vec<(usize, usize, f64)>,
    /// `(fine idx, coarse idx)`: the fine `+M/2` plane folds onto `-M/2`.
    pub fold: Vec<(usize, usize)>,
}

/// Cheap, shareable handle to an immutable lattice.
#[derive(Clone)]
pub struct TorusGrid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("m", &self.inner.m)
            .field("l", &self.inner.l)
            .field("dim", &self.inner.dim)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.m == other.inner.m
                && self.inner.l.to_bits() == other.inner.l.to_bits()
                && self.inner.dim == other.inner.dim)
    }
}

impl TorusGrid {
    pub fn new(m: usize, l: f64, dim: usize) -> Result<Self> {
        if m % 2 != 0 {
            return Err(Error::InvalidGrid(format!("M must be even, got {m}")));
        }
        if m < 8 {
            return Err(Error::InvalidGrid(format!("M must be at least 8, got {m}")));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidGrid(format!("L must be positive, got {l}")));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        let len = m.pow(dim as u32);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let mut grid = GridInner {
            m,
            l,
            dim,
            len,
            magnitudes: Vec::new(),
            forward,
            inverse,
            padded: Mutex::new(HashMap::new()),
            pad_maps: Mutex::new(HashMap::new()),
        };
        grid.magnitudes = (0..len)
            .map(|idx| {
                let ms = unravel(idx, m, dim);
                let mut r2 = 0.0;
                for &j in ms.iter().take(dim) {
                    let xi = wavenumber_of(j, m) as f64 / l;
                    r2 += xi * xi;
                }
                r2.sqrt()
            })
            .collect();
        Ok(Self { inner: Arc::new(grid) })
    }

    pub fn m(&self) -> usize {
        self.inner.m
    }

    pub fn l(&self) -> f64 {
        self.inner.l
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Number of lattice points, `M^dim`.
    pub fn len(&self) -> usize {
        self.inner.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Frequency spacing along each axis.
    pub fn spacing(&self) -> f64 {
        1.0 / self.inner.l
    }

    /// Largest frequency magnitude on the lattice, `√dim · M / (2L)`.
    pub fn max_frequency(&self) -> f64 {
        (self.inner.dim as f64).sqrt() * self.inner.m as f64 / (2.0 * self.inner.l)
    }

    /// Frequency period `M / L` of the lattice along each axis.
    pub fn frequency_period(&self) -> f64 {
        self.inner.m as f64 / self.inner.l
    }

    /// Side length `2πL` of the physical torus.
    pub fn period(&self) -> f64 {
        2.0 * PI * self.inner.l
    }

    pub fn volume(&self) -> f64 {
        self.period().powi(self.inner.dim as i32)
    }

    /// Quadrature weight of one physical sample.
    pub fn sample_weight(&self) -> f64 {
        self.volume() / self.inner.len as f64
    }

    /// Weight turning `Σ |f̂|²` into `‖f‖²_{L²}`.
    pub fn coefficient_weight(&self) -> f64 {
        self.volume()
    }

    /// Signed wavenumber carried by axis index `j`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        wavenumber_of(j, self.inner.m)
    }

    /// Axis indices of a flat index; unused trailing axes are zero.
    pub fn axis_indices(&self, idx: usize) -> [usize; 3] {
        unravel(idx, self.inner.m, self.inner.dim)
    }

    /// Signed integer wavenumbers `m` of a flat index (ξ = m / L).
    pub fn wavenumbers(&self, idx: usize) -> [i64; 3] {
        let js = self.axis_indices(idx);
        let mut out = [0i64; 3];
        for a in 0..self.inner.dim {
            out[a] = self.wavenumber(js[a]);
        }
        out
    }

    pub fn frequency(&self, idx: usize) -> [f64; 3] {
        let ms = self.wavenumbers(idx);
        let mut out = [0.0; 3];
        for a in 0..self.inner.dim {
            out[a] = ms[a] as f64 / self.inner.l;
        }
        out
    }

    /// Flat index of the (periodically wrapped) wavenumber vector.
    pub fn index_of(&self, ms: [i64; 3]) -> usize {
        let m = self.inner.m as i64;
        let mut idx = 0usize;
        for &w in ms.iter().take(self.inner.dim) {
            idx = idx * self.inner.m + w.rem_euclid(m) as usize;
        }
        idx
    }

    /// Index of `-ξ` on the periodic lattice.
    pub fn neg_index(&self, idx: usize) -> usize {
        let m = self.inner.m;
        let js = self.axis_indices(idx);
        let mut out = 0usize;
        for &j in js.iter().take(self.inner.dim) {
            out = out * m + (m - j) % m;
        }
        out
    }

    /// True when some axis sits on the unpaired Nyquist wavenumber `-M/2`.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let js = self.axis_indices(idx);
        js.iter().take(self.inner.dim).any(|&j| j == self.inner.m / 2)
    }

    pub fn magnitude(&self, idx: usize) -> f64 {
        self.inner.magnitudes[idx]
    }

    /// Cached `|ξ|` over the whole lattice in storage order.
    pub fn magnitudes(&self) -> &[f64] {
        &self.inner.magnitudes
    }

    /// Same torus with `factor` times as many points per axis.
    pub fn padded(&self, factor: usize) -> TorusGrid {
        if factor == 1 {
            return self.clone();
        }
        let mut cache = self.inner.padded.lock().expect("padded grid cache poisoned");
        cache
            .entry(factor)
            .or_insert_with(|| {
                TorusGrid::new(self.inner.m * factor, self.inner.l, self.inner.dim)
                    .expect("padding a valid grid yields a valid grid")
            })
            .clone()
    }

    /// Coefficient maps to and from [`TorusGrid::padded`]`(factor)`.
    pub fn pad_map(&self, factor: usize) -> Arc<PadMap> {
        let mut cache = self.inner.pad_maps.lock().expect("pad map cache poisoned");
        cache
            .entry(factor)
            .or_insert_with(|| Arc::new(self.build_pad_map(factor)))
            .clone()
    }

    fn build_pad_map(&self, factor: usize) -> PadMap {
        let fine = self.padded(factor);
        let dim = self.inner.dim;
        let half = (self.inner.m / 2) as i64;
        let mut spread = Vec::new();
        for idx in 0..self.len() {
            let ms = self.wavenumbers(idx);
            let mut variants: Vec<([i64; 3], f64)> = vec![(ms, 1.0)];
            if factor > 1 {
                for a in 0..dim {
                    if ms[a] == -half {
                        let mut next = Vec::with_capacity(variants.len() * 2);
                        for (v, w) in variants {
                            let mut flip = v;
                            flip[a] = half;
                            next.push((v, 0.5 * w));
                            next.push((flip, 0.5 * w));
                        }
                        variants = next;
                    }
                }
            }
            for (v, w) in variants {
                spread.push((idx, fine.index_of(v), w));
            }
        }
        let mut fold = Vec::new();
        'outer: for fidx in 0..fine.len() {
            let mut ms = fine.wavenumbers(fidx);
            for a in 0..dim {
                if ms[a] == half && factor > 1 {
                    ms[a] = -half;
                } else if ms[a] < -half || ms[a] >= half {
                    continue 'outer;
                }
            }
            fold.push((fidx, self.index_of(ms)));
        }
        PadMap { spread, fold }
    }

    /// In-place forward transform: samples to coefficients.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.inner.len);
        self.transform(data, &self.inner.forward);
        let scale = 1.0 / self.inner.len as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    /// In-place inverse transform: coefficients to samples.
    pub fn inverse(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.inner.len);
        self.transform(data, &self.inner.inverse);
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let m = self.inner.m;
        let dim = self.inner.dim;
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        // contiguous last axis
        fft.process_with_scratch(data, &mut scratch);
        if dim == 1 {
            return;
        }
        let mut block = Vec::new();
        for axis in 0..dim - 1 {
            let stride = m.pow((dim - 1 - axis) as u32);
            let span = m * stride;
            block.resize(span, Complex64::default());
            for chunk in data.chunks_exact_mut(span) {
                // (j, s) -> (s, j) so every line is contiguous
                for j in 0..m {
                    let row = &chunk[j * stride..(j + 1) * stride];
                    for (s, &v) in row.iter().enumerate() {
                        block[s * m + j] = v;
                    }
                }
                fft.process_with_scratch(&mut block, &mut scratch);
                for j in 0..m {
                    let row = &mut chunk[j * stride..(j + 1) * stride];
                    for (s, v) in row.iter_mut().enumerate() {
                        *v = block[s * m + j];
                    }
                }
            }
        }
    }
}

fn wavenumber_of(j: usize, m: usize) -> i64 {
    if j < m / 2 {
        j as i64
    } else {
        j as i64 - m as i64
    }
}

fn unravel(mut idx: usize, m: usize, dim: usize) -> [usize; 3] {
    let mut out = [0usize; 3];
    for a in (0..dim).rev() {
        out[a] = idx % m;
        idx /= m;
    }
    out
}

/// Complex Fourier coefficients of a field on a [`TorusGrid`].
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl SpectralField {
    pub fn zeros(grid: &TorusGrid) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::default(); grid.len()],
            real: true,
        }
    }

    pub fn from_coeffs(grid: &TorusGrid, coeffs: Vec<Complex64>, real: bool) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
            real,
        })
    }

    /// Single mode `value · e^{i x·ξ}` at wavenumber vector `ms`.
    pub fn mode(grid: &TorusGrid, ms: [i64; 3], value: Complex64) -> Self {
        let mut f = Self::zeros(grid);
        f.real = false;
        f.coeffs[grid.index_of(ms)] = value;
        f
    }

    /// Real cosine mode `amplitude · cos(x·ξ)`.
    pub fn cosine(grid: &TorusGrid, ms: [i64; 3], amplitude: f64) -> Self {
        let mut f = Self::zeros(grid);
        let idx = grid.index_of(ms);
        let neg = grid.neg_index(idx);
        if idx == neg {
            f.coeffs[idx] = Complex64::new(amplitude, 0.0);
        } else {
            f.coeffs[idx] = Complex64::new(0.5 * amplitude, 0.0);
            f.coeffs[neg] = Complex64::new(0.5 * amplitude, 0.0);
        }
        f
    }

    /// Spatially constant field.
    pub fn constant(grid: &TorusGrid, value: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = Complex64::new(value, 0.0);
        f
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Whether the field is flagged as the transform of a real function.
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn set_real(&mut self, real: bool) {
        self.real = real;
    }

    pub fn to_physical(&self) -> Vec<Complex64> {
        let mut data = self.coeffs.clone();
        self.grid.inverse(&mut data);
        data
    }

    /// Physical samples of a real field (imaginary round-off dropped).
    pub fn to_physical_real(&self) -> Vec<f64> {
        self.to_physical().into_iter().map(|z| z.re).collect()
    }

    pub fn from_physical(grid: &TorusGrid, samples: &[Complex64]) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        let mut data = samples.to_vec();
        grid.forward(&mut data);
        Ok(Self {
            grid: grid.clone(),
            coeffs: data,
            real: false,
        })
    }

    pub fn from_physical_real(grid: &TorusGrid, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        let mut data: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        grid.forward(&mut data);
        Ok(Self {
            grid: grid.clone(),
            coeffs: data,
            real: true,
        })
    }

    /// Largest `|û(-ξ) - conj û(ξ)|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for (idx, c) in self.coeffs.iter().enumerate() {
            let partner = self.coeffs[self.grid.neg_index(idx)];
            worst = worst.max((partner - c.conj()).norm());
        }
        worst / scale
    }

    /// `Σ |û|²` without the torus weight.
    pub fn coeff_norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn same_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= a;
        }
        out
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        assert!(self.grid == other.grid, "axpy across grids");
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += *o * a;
        }
        self.real &= other.real;
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Apply a real multiplier `m(idx)` coefficient-wise.
    pub fn multiplied(&self, multiplier: impl Fn(usize) -> f64) -> SpectralField {
        let mut out = self.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            *c *= multiplier(idx);
        }
        out
    }
}

impl SpectralField {
    /// Same function on the `factor`-times finer grid (zero padding).
    pub fn padded(&self, factor: usize) -> SpectralField {
        if factor == 1 {
            return self.clone();
        }
        let fine = self.grid.padded(factor);
        let map = self.grid.pad_map(factor);
        let mut coeffs = vec![Complex64::default(); fine.len()];
        for &(src, dst, w) in &map.spread {
            coeffs[dst] += self.coeffs[src] * w;
        }
        SpectralField {
            grid: fine,
            coeffs,
            real: self.real,
        }
    }

    /// Projection of a fine-grid field onto `coarse`, which must satisfy
    /// `self.grid() == coarse.padded(factor)`.
    pub fn truncated(&self, coarse: &TorusGrid, factor: usize) -> Result<SpectralField> {
        if factor == 1 {
            return if self.grid == *coarse {
                Ok(self.clone())
            } else {
                Err(Error::GridMismatch)
            };
        }
        if coarse.padded(factor) != self.grid {
            return Err(Error::GridMismatch);
        }
        let map = coarse.pad_map(factor);
        let mut coeffs = vec![Complex64::default(); coarse.len()];
        for &(src, dst) in &map.fold {
            coeffs[dst] += self.coeffs[src];
        }
        Ok(SpectralField {
            grid: coarse.clone(),
            coeffs,
            real: self.real,
        })
    }
}

/// Physical samples of two real fields with a single complex transform.
pub fn to_physical_pair(a: &SpectralField, b: &SpectralField) -> (Vec<f64>, Vec<f64>) {
    assert!(a.grid == b.grid, "pair transform across grids");
    let mut data: Vec<Complex64> = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(&x, &y)| x + Complex64::i() * y)
        .collect();
    a.grid.inverse(&mut data);
    data.into_iter().map(|z| (z.re, z.im)).unzip()
}

/// Coefficients of two real sample arrays with a single complex transform.
pub fn from_physical_pair(grid: &TorusGrid, x: &[f64], y: &[f64]) -> Result<(SpectralField, SpectralField)> {
    if x.len() != grid.len() || y.len() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            got: x.len().min(y.len()),
        });
    }
    let mut data: Vec<Complex64> = x.iter().zip(y).map(|(&a, &b)| Complex64::new(a, b)).collect();
    grid.forward(&mut data);
    let mut fa = vec![Complex64::default(); grid.len()];
    let mut fb = vec![Complex64::default(); grid.len()];
    for idx in 0..grid.len() {
        let z = data[idx];
        let zc = data[grid.neg_index(idx)].conj();
        fa[idx] = (z + zc) * 0.5;
        fb[idx] = (z - zc) * Complex64::new(0.0, -0.5);
    }
    Ok((
        SpectralField::from_coeffs(grid, fa, true)?,
        SpectralField::from_coeffs(grid, fb, true)?,
    ))
}

/// Displacement and velocity of a wave at one instant.
#[derive(Clone, Debug)]
pub struct WaveState {
    pub u: SpectralField,
    pub ut: SpectralField,
    pub t: f64,
}

impl WaveState {
    pub fn new(u: SpectralField, ut: SpectralField, t: f64) -> Result<Self> {
        u.same_grid(&ut)?;
        Ok(Self { u, ut, t })
    }

    pub fn zeros(grid: &TorusGrid, t: f64) -> Self {
        Self {
            u: SpectralField::zeros(grid),
            ut: SpectralField::zeros(grid),
            t,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.u.grid()
    }

    pub fn add(&self, other: &WaveState) -> WaveState {
        WaveState {
            u: self.u.add(&other.u),
            ut: self.ut.add(&other.ut),
            t: self.t,
        }
    }

    pub fn sub(&self, other: &WaveState) -> WaveState {
        WaveState {
            u: self.u.sub(&other.u),
            ut: self.ut.sub(&other.ut),
            t: self.t,
        }
    }

    pub fn scaled(&self, a: f64) -> WaveState {
        WaveState {
            u: self.u.scaled(a),
            ut: self.ut.scaled(a),
            t: self.t,
        }
    }
}

/// Wave states at uniformly spaced, increasing times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    states: Vec<WaveState>,
    dt: f64,
}

impl Trajectory {
    pub fn new(states: Vec<WaveState>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Trajectory("no states".into()));
        }
        let grid = states[0].grid().clone();
        if states.iter().any(|s| *s.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        let dt = if states.len() > 1 {
            (states[states.len() - 1].t - states[0].t) / (states.len() - 1) as f64
        } else {
            0.0
        };
        if states.len() > 1 && !(dt > 0.0) {
            return Err(Error::Trajectory("times must strictly increase".into()));
        }
        for (j, s) in states.iter().enumerate() {
            let expected = states[0].t + j as f64 * dt;
            if (s.t - expected).abs() > 1e-12 * (1.0 + expected.abs()) {
                return Err(Error::Trajectory(format!(
                    "node {j} at t={} breaks uniform spacing {dt}",
                    s.t
                )));
            }
        }
        Ok(Self { states, dt })
    }

    pub fn states(&self) -> &[WaveState] {
        &self.states
    }

    pub fn into_states(self) -> Vec<WaveState> {
        self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.states[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.states[self.states.len() - 1].t
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn first(&self) -> &WaveState {
        &self.states[0]
    }

    pub fn last(&self) -> &WaveState {
        &self.states[self.states.len() - 1]
    }

    pub fn grid(&self) -> &TorusGrid {
        self.states[0].grid()
    }
}
