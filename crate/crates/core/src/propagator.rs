//! Free wave flow, the dealiased power nonlinearity and the Duhamel
//! operator.
//!
//! The Duhamel integral `-∫ sin((t-s)ω)/ω h(s) ds` is evaluated at every
//! node of a trajectory at once through
//! `sin((t-s)ω) = sin(tω)cos(sω) - cos(tω)sin(sω)`, which turns it into two
//! running quadratures per mode.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SpectralField, TorusGrid, Trajectory, WaveState};

/// Zero-padding factor used for `|u|^{ρ-1} u`: 3 makes the quintic exact,
/// 2 makes the cubic exact and only damps aliasing otherwise.
pub fn pad_factor(rho: f64) -> usize {
    if rho > 3.0 + 1e-12 && (rho - rho.round()).abs() < 1e-12 && rho.round() as i64 % 2 == 1 {
        3
    } else {
        2
    }
}

/// `|x|^{ρ-1} x`.
#[inline]
pub fn power(x: f64, rho: f64) -> f64 {
    if rho == 3.0 {
        x * x * x
    } else if rho == 5.0 {
        let x2 = x * x;
        x2 * x2 * x
    } else {
        x.abs().powf(rho - 1.0) * x
    }
}

/// Per-mode multipliers of the free flow over a fixed time increment.
#[derive(Clone, Debug)]
pub struct FreeStep {
    t: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    omega: Vec<f64>,
}

impl FreeStep {
    pub fn new(grid: &TorusGrid, t: f64) -> Self {
        let omega = grid.magnitudes().to_vec();
        let (cos, sin) = omega.iter().map(|&w| ((t * w).cos(), (t * w).sin())).unzip();
        Self { t, cos, sin, omega }
    }

    pub fn apply(&self, state: &WaveState) -> WaveState {
        let mut out = state.clone();
        self.apply_in_place(&mut out.u, &mut out.ut);
        out.t = state.t + self.t;
        out
    }

    pub fn apply_in_place(&self, u: &mut SpectralField, ut: &mut SpectralField) {
        let uc = u.coeffs_mut();
        let vc = ut.coeffs_mut();
        for i in 0..uc.len() {
            let (a, b) = (uc[i], vc[i]);
            let w = self.omega[i];
            if w == 0.0 {
                uc[i] = a + b * self.t;
            } else {
                uc[i] = a * self.cos[i] + b * (self.sin[i] / w);
                vc[i] = -a * (w * self.sin[i]) + b * self.cos[i];
            }
        }
    }
}

/// Exact free evolution by `t`: `cos(t|∇|)u + sin(t|∇|)/|∇| u_t`.
pub fn free_evolve(state: &WaveState, t: f64) -> WaveState {
    FreeStep::new(state.grid(), t).apply(state)
}

/// Free evolution sampled at `state.t + j dt`, `j = 0..=⌊T/dt⌋`, each node
/// computed directly from the initial state.
pub fn free_trajectory(state: &WaveState, t_len: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {dt} must be positive")));
    }
    let n = (t_len / dt + 1e-9).floor() as usize;
    let states = (0..=n).map(|j| free_evolve(state, j as f64 * dt)).collect();
    Trajectory::new(states)
}

/// Dealiased `|u|^{ρ-1} u` on the grid of `u`.
pub fn nonlinearity(u: &SpectralField, rho: f64) -> SpectralField {
    let factor = pad_factor(rho);
    let fine = u.padded(factor);
    let mut samples = fine.to_physical_real();
    for x in samples.iter_mut() {
        *x = power(*x, rho);
    }
    let out = SpectralField::from_physical_real(fine.grid(), &samples).expect("sizes match");
    without_nyquist(out.truncated(u.grid(), factor).expect("padded grid matches"))
}

/// Zero the Nyquist planes. Padding splits a Nyquist coefficient in half,
/// so folding it back is not the adjoint of padding; dropping it keeps the
/// truncated nonlinearity the exact gradient of the padded potential on
/// Nyquist-free fields, and Nyquist-free fields stay Nyquist-free.
fn without_nyquist(mut f: SpectralField) -> SpectralField {
    let g = f.grid().clone();
    for (i, c) in f.coeffs_mut().iter_mut().enumerate() {
        if g.is_nyquist(i) {
            *c = Complex64::default();
        }
    }
    f
}

/// Padded physical samples of a real field.
pub fn padded_samples(u: &SpectralField, rho: f64) -> Vec<f64> {
    u.padded(pad_factor(rho)).to_physical_real()
}

/// Padded samples of two real fields from one transform. A zero input
/// gets exact zero samples rather than the other field's rounding.
pub fn padded_samples_pair(a: &SpectralField, b: &SpectralField, rho: f64) -> (Vec<f64>, Vec<f64>) {
    let f = pad_factor(rho);
    match (a.is_zero(), b.is_zero()) {
        (false, true) => {
            let x = padded_samples(a, rho);
            let n = x.len();
            (x, vec![0.0; n])
        }
        (true, false) => {
            let x = padded_samples(b, rho);
            let n = x.len();
            (vec![0.0; n], x)
        }
        _ => crate::grid::to_physical_pair(&a.padded(f), &b.padded(f)),
    }
}

/// Coefficients on `coarse` of two real padded sample arrays.
pub fn from_padded_pair(coarse: &TorusGrid, rho: f64, x: &[f64], y: &[f64]) -> (SpectralField, SpectralField) {
    let f = pad_factor(rho);
    let fine = coarse.padded(f);
    let (a, b) = crate::grid::from_physical_pair(&fine, x, y).expect("padded sizes");
    (
        without_nyquist(a.truncated(coarse, f).expect("padded grid")),
        without_nyquist(b.truncated(coarse, f).expect("padded grid")),
    )
}

/// Coefficients on `coarse` of one real padded sample array.
pub fn from_padded(coarse: &TorusGrid, rho: f64, x: &[f64]) -> SpectralField {
    let f = pad_factor(rho);
    let fine = coarse.padded(f);
    without_nyquist(
        SpectralField::from_physical_real(&fine, x)
            .expect("padded sizes")
            .truncated(coarse, f)
            .expect("padded grid"),
    )
}

/// `N(a) - N(b)` with one inverse transform for both inputs.
pub fn nonlinear_difference(a: &SpectralField, b: &SpectralField, rho: f64) -> SpectralField {
    let (xa, xb) = padded_samples_pair(a, b, rho);
    let d: Vec<f64> = xa
        .iter()
        .zip(&xb)
        .map(|(&p, &q)| power(p, rho) - power(q, rho))
        .collect();
    from_padded(a.grid(), rho, &d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureRule {
    Simpson,
    Trapezoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuhamelQuadrature {
    pub rule: QuadratureRule,
    pub dt: f64,
}

impl DuhamelQuadrature {
    pub fn simpson(dt: f64) -> Self {
        Self {
            rule: QuadratureRule::Simpson,
            dt,
        }
    }

    pub fn trapezoid(dt: f64) -> Self {
        Self {
            rule: QuadratureRule::Trapezoid,
            dt,
        }
    }
}

/// Running quadrature `∫_0^{τ_j} g` for every node `j` of a uniform grid.
struct Running {
    rule: QuadratureRule,
    dt: f64,
    n: usize,
}

impl Running {
    /// Node weights of the rule ending at node `j`, as `(start, weights)`
    /// of the trailing block added on top of the stored partial sum at
    /// `start`.
    fn block(&self, j: usize) -> (usize, &'static [f64]) {
        const TRAP: [f64; 2] = [0.5, 0.5];
        const SIMPSON: [f64; 3] = [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0];
        const THREE_EIGHTHS: [f64; 4] = [3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0];
        match self.rule {
            QuadratureRule::Trapezoid => (j - 1, &TRAP),
            QuadratureRule::Simpson => {
                if j % 2 == 0 {
                    (j - 2, &SIMPSON)
                } else if j >= 3 {
                    (j - 3, &THREE_EIGHTHS)
                } else {
                    (0, &TRAP)
                }
            }
        }
    }
}

/// Per-mode values of the source at each node, shaped `[node][mode]`.
fn source_coeffs(source: &[SpectralField]) -> Vec<&[Complex64]> {
    source.iter().map(|f| f.coeffs()).collect()
}

/// Duhamel terms at every node of `times` (uniform, starting at `times[0]`):
/// `(-∫ sin((t_j-s)ω)/ω h, -∫ cos((t_j-s)ω) h)` per node.
pub fn duhamel_all(
    source: &[SpectralField],
    times: &[f64],
    quad: DuhamelQuadrature,
) -> Result<Vec<(SpectralField, SpectralField)>> {
    let n = times.len();
    if n == 0 || source.len() != n {
        return Err(Error::Trajectory(format!(
            "{} source nodes for {} times",
            source.len(),
            n
        )));
    }
    let dt = if n > 1 { times[1] - times[0] } else { quad.dt };
    if n > 1 && (dt - quad.dt).abs() > 1e-12 * (1.0 + dt.abs()) {
        return Err(Error::Trajectory(format!(
            "node spacing {dt} differs from quadrature step {}",
            quad.dt
        )));
    }
    for (j, t) in times.iter().enumerate() {
        let expected = times[0] + j as f64 * dt;
        if (t - expected).abs() > 1e-12 * (1.0 + expected.abs()) {
            return Err(Error::Trajectory(format!("node {j} at {t} is misaligned")));
        }
    }
    let grid = source[0].grid().clone();
    if source.iter().any(|f| *f.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    let h = source_coeffs(source);
    let omega = grid.magnitudes();
    let modes = grid.len();
    let run = Running { rule: quad.rule, dt, n };
    let mut out_u = vec![vec![Complex64::default(); modes]; n];
    let mut out_ut = vec![vec![Complex64::default(); modes]; n];
    let tau: Vec<f64> = (0..n).map(|j| j as f64 * dt).collect();
    let mut cs = vec![(0.0, 0.0); n];
    let mut g_c = vec![Complex64::default(); n];
    let mut g_s = vec![Complex64::default(); n];
    let mut acc_c = vec![Complex64::default(); n];
    let mut acc_s = vec![Complex64::default(); n];
    for m in 0..modes {
        let w = omega[m];
        if w == 0.0 {
            // kernel (t - s): ∫ h and ∫ τ h
            for j in 0..n {
                g_c[j] = h[j][m];
                g_s[j] = h[j][m] * tau[j];
            }
        } else {
            for j in 0..n {
                let (s, c) = (w * tau[j]).sin_cos();
                cs[j] = (c, s);
                g_c[j] = h[j][m] * c;
                g_s[j] = h[j][m] * s;
            }
        }
        run.integrate(&g_c, &mut acc_c);
        run.integrate(&g_s, &mut acc_s);
        for j in 0..n {
            if w == 0.0 {
                out_u[j][m] = -(acc_c[j] * tau[j] - acc_s[j]);
                out_ut[j][m] = -acc_c[j];
            } else {
                let (c, s) = cs[j];
                out_u[j][m] = -(acc_c[j] * s - acc_s[j] * c) / w;
                out_ut[j][m] = -(acc_c[j] * c + acc_s[j] * s);
            }
        }
    }
    let real = source.iter().all(|f| f.is_real());
    out_u
        .into_iter()
        .zip(out_ut)
        .map(|(a, b)| {
            Ok((
                SpectralField::from_coeffs(&grid, a, real)?,
                SpectralField::from_coeffs(&grid, b, real)?,
            ))
        })
        .collect()
}

impl Running {
    fn integrate(&self, g: &[Complex64], acc: &mut [Complex64]) {
        acc[0] = Complex64::default();
        for j in 1..self.n {
            if self.rule == QuadratureRule::Simpson && j == 1 && self.n > 2 {
                // quadratic through the first three nodes
                acc[1] = (g[0] * 5.0 + g[1] * 8.0 - g[2]) * (self.dt / 12.0);
                continue;
            }
            let (start, w) = self.block(j);
            let mut sum = Complex64::default();
            for (i, wi) in w.iter().enumerate() {
                sum += g[start + i] * *wi;
            }
            acc[j] = acc[start] + sum * self.dt;
        }
    }
}

/// Duhamel value and time derivative at the last node of `source`.
pub fn duhamel(
    source: &Trajectory,
    source_fields: impl Fn(&WaveState) -> SpectralField,
    t_end: f64,
    quad: DuhamelQuadrature,
) -> Result<(SpectralField, SpectralField)> {
    let states = source.states();
    let last = states
        .iter()
        .rposition(|s| (s.t - t_end).abs() <= 1e-12 * (1.0 + t_end.abs()))
        .ok_or_else(|| Error::Trajectory(format!("no node at t_end = {t_end}")))?;
    let fields: Vec<SpectralField> = states[..=last].iter().map(source_fields).collect();
    let times: Vec<f64> = states[..=last].iter().map(|s| s.t).collect();
    let mut all = duhamel_all(&fields, &times, quad)?;
    Ok(all.pop().expect("at least one node"))
}

/// Duhamel term of a source given as bare fields on uniform nodes starting
/// at `t0`, returned as a trajectory.
pub fn duhamel_trajectory(source: &[SpectralField], t0: f64, dt: f64, quad: DuhamelQuadrature) -> Result<Trajectory> {
    let times: Vec<f64> = (0..source.len()).map(|j| t0 + j as f64 * dt).collect();
    let all = duhamel_all(source, &times, quad)?;
    let states = all
        .into_iter()
        .zip(times)
        .map(|((u, ut), t)| WaveState::new(u, ut, t))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{energy_parts, sobolev_norm};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn random_real(grid: &TorusGrid, seed: u64) -> SpectralField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        SpectralField::from_physical_real(grid, &x).unwrap()
    }

    fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
        sobolev_norm(&a.sub(b), 0.0, false) / sobolev_norm(b, 0.0, false).max(1e-300)
    }

    #[test]
    fn pad_factors() {
        assert_eq!(pad_factor(3.0), 2);
        assert_eq!(pad_factor(5.0), 3);
        assert_eq!(pad_factor(4.0), 2);
        assert_eq!(pad_factor(3.5), 2);
    }

    #[test]
    fn single_mode_free_flow() {
        let g = TorusGrid::new(16, 4.0, 3).unwrap();
        let u0 = SpectralField::mode(&g, [3, 4, 0], Complex64::new(1.0, 0.0));
        let st = WaveState::new(u0, SpectralField::zeros(&g), 0.0).unwrap();
        let t = 1.7;
        let out = free_evolve(&st, t);
        let w = 5.0 / 4.0;
        let idx = g.index_of([3, 4, 0]);
        assert_relative_eq!(out.u.coeffs()[idx].re, (t * w).cos(), epsilon = 1e-15);
        assert_relative_eq!(out.ut.coeffs()[idx].re, -w * (t * w).sin(), epsilon = 1e-15);
        assert_eq!(out.t, t);
    }

    #[test]
    fn zero_mode_grows_linearly() {
        let g = TorusGrid::new(8, 4.0, 3).unwrap();
        let st = WaveState::new(SpectralField::zeros(&g), SpectralField::constant(&g, 2.0), 0.0).unwrap();
        let out = free_evolve(&st, 3.0);
        for x in out.u.to_physical_real() {
            assert_relative_eq!(x, 6.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn group_property_and_energy() {
        let g = TorusGrid::new(16, 4.0, 3).unwrap();
        let st = WaveState::new(random_real(&g, 1), random_real(&g, 2), 0.0).unwrap();
        let a = free_evolve(&free_evolve(&st, 1.3), 2.9);
        let b = free_evolve(&st, 4.2);
        assert!(rel(&a.u, &b.u) < 1e-12);
        assert!(rel(&a.ut, &b.ut) < 1e-12);
        let e0 = energy_parts(&st.u, &st.ut, 3.0).0;
        for t in [0.5, 3.0, 10.0] {
            let s = free_evolve(&st, t);
            assert_relative_eq!(energy_parts(&s.u, &s.ut, 3.0).0, e0, max_relative = 1e-12);
        }
    }

    #[test]
    fn trajectory_nodes() {
        let g = TorusGrid::new(8, 4.0, 1).unwrap();
        let st = WaveState::new(random_real(&g, 5), random_real(&g, 6), 0.0).unwrap();
        let tr = free_trajectory(&st, 1.0, 0.3).unwrap();
        assert_eq!(tr.len(), 4);
        let p = free_evolve(&st, 0.6);
        assert!(rel(&tr.states()[2].u, &p.u) < 1e-15);
        let z = free_trajectory(&WaveState::zeros(&g, 0.0), 1.0, 0.25).unwrap();
        assert!(z.states().iter().all(|s| s.u.is_zero() && s.ut.is_zero()));
        assert!(free_trajectory(&st, 1.0, 0.0).is_err());
    }

    #[test]
    fn cubic_of_constant_and_cosine() {
        let g = TorusGrid::new(8, 4.0, 3).unwrap();
        let n = nonlinearity(&SpectralField::constant(&g, 2.0), 3.0);
        for x in n.to_physical_real() {
            assert_relative_eq!(x, 8.0, epsilon = 1e-12);
        }
        let u = SpectralField::cosine(&g, [1, 0, 0], 1.0);
        let c = nonlinearity(&u, 3.0);
        // cos³ = (3 cos θ + cos 3θ) / 4
        let first = c.coeffs()[g.index_of([1, 0, 0])].re;
        let third = c.coeffs()[g.index_of([3, 0, 0])].re;
        assert_relative_eq!(first, 3.0 / 8.0, epsilon = 1e-14);
        assert_relative_eq!(third, 1.0 / 8.0, epsilon = 1e-14);
        assert_relative_eq!(first / third, 3.0, max_relative = 1e-12);
        for idx in 0..g.len() {
            let m = g.wavenumbers(idx);
            if !(m[1] == 0 && m[2] == 0 && [1, 3].contains(&m[0].abs())) {
                assert!(c.coeffs()[idx].norm() < 1e-14);
            }
        }
    }

    #[test]
    fn quintic_dealiasing_is_exact() {
        // cos(3x)^5 has harmonics 3, 9, 15; on M = 16 only 3 is resolved
        // and the others must not alias back.
        let g = TorusGrid::new(16, 4.0, 1).unwrap();
        let u = SpectralField::cosine(&g, [3, 0, 0], 1.0);
        let q = nonlinearity(&u, 5.0);
        // cos⁵ = (10 cos θ + 5 cos 3θ + cos 5θ)/16
        assert_relative_eq!(q.coeffs()[g.index_of([3, 0, 0])].re, 10.0 / 32.0, epsilon = 1e-14);
        // 9 folds to -7 on M = 16 only through aliasing
        assert!(q.coeffs()[g.index_of([-7, 0, 0])].norm() < 1e-14);
        assert!(q.coeffs()[g.index_of([7, 0, 0])].norm() < 1e-14);
    }

    #[test]
    fn oddness_and_difference() {
        let g = TorusGrid::new(8, 4.0, 3).unwrap();
        let u = random_real(&g, 8);
        for rho in [3.0, 4.0, 5.0, 3.7] {
            let a = nonlinearity(&u, rho);
            let b = nonlinearity(&u.scaled(-1.0), rho);
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                assert_eq!(x.re, -y.re);
                assert_eq!(x.im, -y.im);
            }
            let v = random_real(&g, 9);
            let d = nonlinear_difference(&u, &v, rho);
            let direct = nonlinearity(&u, rho).sub(&nonlinearity(&v, rho));
            assert!(rel(&d, &direct) < 1e-12);
        }
    }

    #[test]
    fn duhamel_zero_and_constant_source() {
        let g = TorusGrid::new(8, 4.0, 3).unwrap();
        let n = 11;
        let dt = 0.1;
        let zeros = vec![SpectralField::zeros(&g); n];
        let tr = duhamel_trajectory(&zeros, 0.0, dt, DuhamelQuadrature::simpson(dt)).unwrap();
        assert!(tr.states().iter().all(|s| s.u.is_zero()));
        let h0 = 1.5;
        let src = vec![SpectralField::constant(&g, h0); n];
        for quad in [DuhamelQuadrature::simpson(dt), DuhamelQuadrature::trapezoid(dt)] {
            let tr = duhamel_trajectory(&src, 0.0, dt, quad).unwrap();
            for s in tr.states() {
                assert_relative_eq!(s.u.coeffs()[0].re, -s.t * s.t * h0 / 2.0, epsilon = 1e-13);
                assert_relative_eq!(s.ut.coeffs()[0].re, -s.t * h0, epsilon = 1e-13);
            }
        }
    }

    fn resonant_error(n: usize) -> f64 {
        // |ξ| = 1 and h(s) = cos(s): -∫ sin(t-s) cos(s) ds = -(t sin t)/2
        let g = TorusGrid::new(16, 4.0, 1).unwrap();
        let t_end = 3.0;
        let dt = t_end / (n - 1) as f64;
        let src: Vec<SpectralField> = (0..n)
            .map(|j| SpectralField::mode(&g, [4, 0, 0], Complex64::new((j as f64 * dt).cos(), 0.0)))
            .collect();
        let tr = duhamel_trajectory(&src, 0.0, dt, DuhamelQuadrature::simpson(dt)).unwrap();
        let idx = g.index_of([4, 0, 0]);
        tr.states()
            .iter()
            .map(|s| (s.u.coeffs()[idx].re + s.t * s.t.sin() / 2.0).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn duhamel_resonant_closed_form_fourth_order() {
        let e1 = resonant_error(25);
        let e2 = resonant_error(49);
        assert!(e1 < 1e-4, "{e1}");
        let order = (e1 / e2).log2();
        assert!(order > 3.5, "observed order {order}");
    }

    #[test]
    fn duhamel_endpoint_matches_trajectory() {
        let g = TorusGrid::new(8, 4.0, 2).unwrap();
        let dt = 0.05;
        let st = WaveState::new(random_real(&g, 11), random_real(&g, 12), 0.0).unwrap();
        let tr = free_trajectory(&st, 0.5, dt).unwrap();
        let quad = DuhamelQuadrature::simpson(dt);
        let (u, ut) = duhamel(&tr, |s| nonlinearity(&s.u, 3.0), 0.35, quad).unwrap();
        let src: Vec<SpectralField> = tr.states()[..8].iter().map(|s| nonlinearity(&s.u, 3.0)).collect();
        let all = duhamel_trajectory(&src, 0.0, dt, quad).unwrap();
        assert!(rel(&u, &all.last().u) < 1e-14);
        assert!(rel(&ut, &all.last().ut) < 1e-14);
        assert!(duhamel(&tr, |s| s.u.clone(), 0.37, quad).is_err());
        assert!(duhamel(&tr, |s| s.u.clone(), 0.35, DuhamelQuadrature::simpson(0.04)).is_err());
    }

    #[test]
    fn self_convergence_and_residual() {
        // smooth source h(s) = cos(2s) P(x); the assembled field must solve
        // u_tt = -|ξ|² u - h to quadrature order
        let g = TorusGrid::new(8, 4.0, 3).unwrap();
        let p = random_real(&g, 21);
        let t_end = 1.0;
        let run = |n: usize| {
            let dt = t_end / (n - 1) as f64;
            let src: Vec<SpectralField> = (0..n).map(|j| p.scaled((2.0 * j as f64 * dt).cos())).collect();
            (
                duhamel_trajectory(&src, 0.0, dt, DuhamelQuadrature::simpson(dt)).unwrap(),
                src,
                dt,
            )
        };
        let (coarse, _, _) = run(41);
        let (fine, src, dt) = run(81);
        assert!(rel(&coarse.last().u, &fine.last().u) < 1e-3);
        let states = fine.states();
        let j = 40;
        for idx in [1usize, 9, 100, 300] {
            let second = (states[j + 1].u.coeffs()[idx] - states[j].u.coeffs()[idx] * 2.0
                + states[j - 1].u.coeffs()[idx])
                / (dt * dt);
            let w = g.magnitude(idx);
            let rhs = -states[j].u.coeffs()[idx] * (w * w) - src[j].coeffs()[idx];
            assert!((second - rhs).norm() < 1e-3 * (1.0 + rhs.norm()), "idx {idx}");
        }
    }
}
