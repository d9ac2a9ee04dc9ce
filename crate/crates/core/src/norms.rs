//! Sobolev, Lebesgue, energy and space-time norms, plus the exponent
//! arithmetic of the high-low scheme.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SpectralField, Trajectory};
use crate::propagator::pad_factor;

/// `‖f‖_{H^s}` with weight `(1+|ξ|²)^s`, or `‖f‖_{Ḣ^s}` with `|ξ|^{2s}` and
/// the zero mode left out.
pub fn sobolev_norm(f: &SpectralField, s: f64, homogeneous: bool) -> f64 {
    let g = f.grid();
    let mags = g.magnitudes();
    let mut acc = 0.0;
    for (c, &r) in f.coeffs().iter().zip(mags) {
        let w = if homogeneous {
            if r == 0.0 {
                continue;
            }
            r.powf(2.0 * s)
        } else if s == 0.0 {
            1.0
        } else {
            (1.0 + r * r).powf(s)
        };
        acc += w * c.norm_sqr();
    }
    (acc * g.coefficient_weight()).sqrt()
}

/// `(Σ |x_i|^p w)^{1/p}`, or `max |x_i|` for `p = ∞`.
pub fn lp_norm_samples(samples: &[f64], weight: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return samples.iter().fold(0.0, |m, x| m.max(x.abs()));
    }
    let scale = samples.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    // rescale so large p cannot overflow
    let sum: f64 = samples.iter().map(|x| (x.abs() / scale).powf(p)).sum();
    scale * (sum * weight).powf(1.0 / p)
}

/// Physical-space `‖f‖_{L^p}` on the field's own grid.
pub fn lp_norm(f: &SpectralField, p: f64) -> f64 {
    let w = f.grid().sample_weight();
    if f.is_real() {
        lp_norm_samples(&f.to_physical_real(), w, p)
    } else {
        let mods: Vec<f64> = f.to_physical().iter().map(|z| z.norm()).collect();
        lp_norm_samples(&mods, w, p)
    }
}

/// Time norm from per-node values `a_i = ‖u(t_i)‖`: composite trapezoid of
/// `a^q`, log-domain for `q >= 50`, max for `q = ∞`.
pub fn time_norm(values: &[f64], dt: f64, q: f64) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::Trajectory("mixed norm needs at least 2 time nodes".into()));
    }
    if q.is_infinite() {
        return Ok(values.iter().fold(0.0, |m, &v| m.max(v)));
    }
    let n = values.len();
    let weight = |i: usize| if i == 0 || i == n - 1 { 0.5 * dt } else { dt };
    if q >= 50.0 {
        let logs: Vec<f64> = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, &v)| q * v.ln() + weight(i).ln())
            .collect();
        if logs.is_empty() {
            return Ok(0.0);
        }
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + logs.iter().map(|x| (x - top).exp()).sum::<f64>().ln();
        return Ok((lse / q).exp());
    }
    let scale = values.iter().fold(0.0, |m: f64, &v| m.max(v));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = values
        .iter()
        .enumerate()
        .map(|(i, &v)| weight(i) * (v / scale).powf(q))
        .sum();
    Ok(scale * sum.powf(1.0 / q))
}

/// `‖u‖_{L^q_t L^r_x}` over the trajectory.
pub fn mixed_norm(traj: &Trajectory, q: f64, r: f64) -> Result<f64> {
    let values: Vec<f64> = traj.states().iter().map(|s| lp_norm(&s.u, r)).collect();
    time_norm(&values, traj.dt(), q)
}

/// Serde for exponents that may be `∞`: written as `null` (JSON has no
/// infinity) and read back as `∞`.
mod exponent {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Outcome of the admissibility test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissiblePair {
    #[serde(with = "exponent")]
    pub q: f64,
    pub r: f64,
    pub gamma: f64,
    pub wave_admissible: bool,
}

fn inv(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

/// Wave admissibility `1/q + 1/r <= 1/2` and the regularity `γ` solving
/// `1/q + 3/r = 3/2 - γ`.
pub fn check_admissible(q: f64, r: f64) -> Result<AdmissiblePair> {
    if !(q >= 2.0) || !(r >= 2.0) || r.is_infinite() {
        return Err(Error::InvalidParameter(format!(
            "exponents (q, r) = ({q}, {r}) need q in [2, ∞], r in [2, ∞)"
        )));
    }
    let gamma = 1.5 - inv(q) - 3.0 * inv(r);
    Ok(AdmissiblePair {
        q,
        r,
        gamma,
        wave_admissible: inv(q) + inv(r) <= 0.5 + 1e-15,
    })
}

/// Regularity of a dual pair: `1/q̃' + 3/r̃' - 2 = 3/2 - γ`, where primes
/// are Hölder conjugates, i.e. `γ = 1/q̃ + 3/r̃ - 1/2`.
pub fn dual_scaling(q_dual: f64, r_dual: f64) -> Result<f64> {
    if !(q_dual >= 1.0) || !(r_dual >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "dual exponents ({q_dual}, {r_dual}) must be at least 1"
        )));
    }
    Ok(inv(q_dual) + 3.0 * inv(r_dual) - 0.5)
}

/// Discrete energy `½‖v‖²_{Ḣ¹} + ½‖v_t‖²_{L²} + ‖v‖^{ρ+1}_{L^{ρ+1}}/(ρ+1)`.
/// The potential is integrated on the dealiasing grid, so the splitting
/// scheme conserves exactly this quantity up to its time error.
pub fn energy(v: &SpectralField, vt: &SpectralField, rho: f64) -> Result<f64> {
    v.same_grid(vt)?;
    let (kin, pot) = energy_parts(v, vt, rho);
    Ok(kin + pot)
}

/// Quadratic and potential parts of [`energy`].
pub fn energy_parts(v: &SpectralField, vt: &SpectralField, rho: f64) -> (f64, f64) {
    let kin = 0.5 * sobolev_norm(v, 1.0, true).powi(2) + 0.5 * sobolev_norm(vt, 0.0, false).powi(2);
    (kin, potential_energy(v, rho))
}

/// `‖v‖^{ρ+1}_{L^{ρ+1}} / (ρ+1)` on the dealiasing grid.
pub fn potential_energy(v: &SpectralField, rho: f64) -> f64 {
    let fine = v.padded(pad_factor(rho));
    let w = fine.grid().sample_weight();
    let p = rho + 1.0;
    let sum: f64 = fine.to_physical_real().iter().map(|x| x.abs().powf(p)).sum();
    sum * w / p
}

/// Time exponent `q(ρ) = 2ρ/(ρ-3)`, infinite at `ρ = 3`.
pub fn q_rho(rho: f64) -> f64 {
    if rho == 3.0 {
        f64::INFINITY
    } else {
        2.0 * rho / (rho - 3.0)
    }
}

/// `α(ρ) = (5-ρ)/2`.
pub fn alpha(rho: f64) -> f64 {
    (5.0 - rho) / 2.0
}

/// Regularity threshold of the high-low scheme.
pub fn s_threshold(rho: f64) -> f64 {
    (rho.powi(3) + 5.0 * rho * rho - 11.0 * rho - 3.0) / (9.0 * rho * rho - 6.0 * rho - 3.0)
}

/// Scaling-critical regularity `3/2 - 2/(ρ-1)`.
pub fn s_critical(rho: f64) -> f64 {
    1.5 - 2.0 / (rho - 1.0)
}

/// Positive root of `2ρ² - 7ρ - 3`, where the threshold meets `s_c`.
pub fn rho_crossover() -> f64 {
    (7.0 + 73f64.sqrt()) / 4.0
}

fn exponent_denominator(rho: f64) -> f64 {
    (5.0 - rho) * (rho + 1.0) * rho
}

/// Exponent of `N` in the energy-growth condition.
pub fn e_n(rho: f64, s: f64, eps: f64) -> f64 {
    let num = rho.powi(3) + 5.0 * rho * rho - 11.0 * rho - 3.0 - s * (9.0 * rho * rho - 6.0 * rho - 3.0);
    num / exponent_denominator(rho) + eps * ((1.0 - s) * 2.0 * (rho - 1.0) / (5.0 - rho) + 2.0)
}

/// Exponent of `K` in the energy-growth condition.
pub fn e_k(rho: f64, eps: f64) -> f64 {
    (9.0 * rho * rho - 6.0 * rho - 3.0) / exponent_denominator(rho) + eps * 2.0 * (rho - 1.0) / (5.0 - rho)
}

/// Exponent of `c` in the energy-growth condition.
pub fn e_c(rho: f64, eps: f64) -> f64 {
    -(rho - 1.0) * inv(q_rho(rho)) - eps
}

/// `T₁ = c (K N^{1-s})^{-(ρ-1)/α(ρ)}`.
pub fn t1(rho: f64, s: f64, k: f64, n: f64, c: f64) -> f64 {
    c * (k * n.powf(1.0 - s)).powf(-(rho - 1.0) / alpha(rho))
}

/// Upper end of the admissible `ε` range.
pub fn eps_bound(rho: f64, s: f64) -> f64 {
    (s / 2.0).min(0.5 * (1.0 - 1.0 / rho))
}

/// Default `ε`: a quarter of the admissible bound, halved until the
/// `N`-exponent is negative (at most 40 halvings).
pub fn default_eps(rho: f64, s: f64) -> f64 {
    let mut eps = eps_bound(rho, s) / 4.0;
    for _ in 0..40 {
        if e_n(rho, s, eps) < 0.0 {
            break;
        }
        eps *= 0.5;
    }
    eps
}

/// All scalars of one high-low run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighLowConfig {
    pub rho: f64,
    pub s: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub eps: f64,
    pub c: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    pub alpha: f64,
    pub t1: f64,
    pub s_threshold: f64,
    pub s_c: f64,
    pub e_n: f64,
    pub e_k: f64,
    pub e_c: f64,
    /// `e_N < 0`.
    pub condition_ok: bool,
}

impl HighLowConfig {
    /// Hypotheses the high-low solver needs beyond [`config_derive`].
    pub fn driving_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.s > self.s_threshold) {
            out.push(format!(
                "s = {} must exceed the threshold {:.6} for rho = {}",
                self.s, self.s_threshold, self.rho
            ));
        }
        if !self.condition_ok {
            out.push(format!("N-exponent e_N = {:.6} is not negative", self.e_n));
        }
        out
    }

    /// Exponent `1 - (ρ-1)/q(ρ) - ε` of `T₁` in the per-step bound.
    pub fn t1_exponent(&self) -> f64 {
        1.0 - (self.rho - 1.0) * inv(self.q) - self.eps
    }

    /// Shape `T₁^{1-(ρ-1)/q-ε} K^ρ N^{2ε+(1-s)ρ-1}` of the per-step bound,
    /// also the ball radius of the contraction argument.
    pub fn w_bound(&self) -> f64 {
        self.t1.powf(self.t1_exponent())
            * self.k.powf(self.rho)
            * self.n.powf(2.0 * self.eps + (1.0 - self.s) * self.rho - 1.0)
    }

    /// Energy scale `(K N^{1-s})²`.
    pub fn energy_scale(&self) -> f64 {
        (self.k * self.n.powf(1.0 - self.s)).powi(2)
    }

    /// `⌈T / T₁⌉`.
    pub fn steps(&self) -> usize {
        (self.t / self.t1 - 1e-12).ceil().max(1.0) as usize
    }

    /// Same parameters with a different `c`.
    pub fn with_c(&self, c: f64) -> Result<Self> {
        config_derive(self.rho, self.s, self.k, self.n, self.eps, c, self.t)
    }

    /// Same parameters with a different `K`.
    pub fn with_k(&self, k: f64) -> Result<Self> {
        config_derive(self.rho, self.s, k, self.n, self.eps, self.c, self.t)
    }
}

/// Validate the hypotheses and fill in every derived scalar.
pub fn config_derive(rho: f64, s: f64, k: f64, n: f64, eps: f64, c: f64, t: f64) -> Result<HighLowConfig> {
    let mut bad = Vec::new();
    if !(3.0..5.0).contains(&rho) {
        bad.push(format!("rho = {rho} must lie in [3, 5)"));
    }
    if !(s > 0.0 && s < 1.0) {
        bad.push(format!("s = {s} must lie in (0, 1)"));
    }
    if !(k > 0.0 && k.is_finite()) {
        bad.push(format!("K = {k} must be positive"));
    }
    if !(n >= 3.0 && n.is_finite()) {
        bad.push(format!("N = {n} must be at least 3"));
    }
    let bound = eps_bound(rho, s);
    if !(eps > 0.0 && eps < bound) {
        bad.push(format!("eps = {eps} must lie in (0, {bound})"));
    }
    if !(c > 0.0 && c < 1.0) {
        bad.push(format!("c = {c} must lie in (0, 1)"));
    }
    if !(t > 0.0 && t.is_finite()) {
        bad.push(format!("T = {t} must be positive"));
    }
    if !bad.is_empty() {
        return Err(Error::Hypotheses(bad));
    }
    let en = e_n(rho, s, eps);
    Ok(HighLowConfig {
        rho,
        s,
        k,
        n,
        eps,
        c,
        t,
        q: q_rho(rho),
        alpha: alpha(rho),
        t1: t1(rho, s, k, n, c),
        s_threshold: s_threshold(rho),
        s_c: s_critical(rho),
        e_n: en,
        e_k: e_k(rho, eps),
        e_c: e_c(rho, eps),
        condition_ok: en < 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{TorusGrid, WaveState};
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn infinite_time_exponent_survives_json() {
        let cfg = config_derive(3.0, 0.8, 2.0, 3.0, 0.05, 0.5, 1.0).unwrap();
        assert!(cfg.q.is_infinite());
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"q\":null"), "{text}");
        let back: HighLowConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let finite = config_derive(4.0, 0.9, 2.0, 3.0, 0.01, 0.5, 1.0).unwrap();
        let back: HighLowConfig = serde_json::from_str(&serde_json::to_string(&finite).unwrap()).unwrap();
        assert_eq!(back, finite);
    }

    #[test]
    fn sobolev_weights() {
        let g = TorusGrid::new(32, 4.0, 3).unwrap();
        // |ξ| = 2 at wavenumber 8
        let f = SpectralField::cosine(&g, [8, 0, 0], 1.0);
        // cos → two modes at ±ξ with value 1/2
        let l2_oracle = (2.0 * 0.25 * g.coefficient_weight()).sqrt();
        assert_relative_eq!(sobolev_norm(&f, 0.0, false), l2_oracle, max_relative = 1e-14);
        assert_relative_eq!(
            sobolev_norm(&f, 1.0, false),
            5f64.sqrt() * l2_oracle,
            max_relative = 1e-14
        );
        assert_relative_eq!(sobolev_norm(&f, 1.0, true), 2.0 * l2_oracle, max_relative = 1e-14);
        let c = SpectralField::constant(&g, 3.0);
        assert_eq!(sobolev_norm(&c, 1.0, true), 0.0);
    }

    #[test]
    fn constant_lp_norms() {
        let g = TorusGrid::new(8, 4.0, 3).unwrap();
        let one = SpectralField::constant(&g, 1.0);
        for p in [1.0, 2.0, 4.0, 10.0] {
            assert_relative_eq!(lp_norm(&one, p), (8.0 * PI).powf(3.0 / p), max_relative = 1e-12);
        }
        assert_relative_eq!(lp_norm(&one, f64::INFINITY), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn l2_agrees_with_plancherel_and_orders() {
        let g = TorusGrid::new(16, 4.0, 3).unwrap();
        let samples: Vec<f64> = (0..g.len()).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let f = SpectralField::from_physical_real(&g, &samples).unwrap();
        assert_relative_eq!(lp_norm(&f, 2.0), sobolev_norm(&f, 0.0, false), max_relative = 1e-10);
        let vol = g.volume();
        let sup = lp_norm(&f, f64::INFINITY);
        for p in [1.0, 2.0, 3.0, 8.0] {
            assert!(sup >= lp_norm(&f, p) / vol.powf(1.0 / p) - 1e-14);
        }
    }

    #[test]
    fn time_norm_constant_and_sup() {
        let vals = vec![2.0; 11];
        assert_relative_eq!(time_norm(&vals, 0.1, 3.0).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(
            time_norm(&vals, 0.2, 4.0).unwrap(),
            2.0 * 2f64.powf(0.25),
            max_relative = 1e-14
        );
        assert_relative_eq!(time_norm(&vals, 0.1, 80.0).unwrap(), 2.0, max_relative = 1e-12);
        let ramp: Vec<f64> = (0..5).map(|i| i as f64).collect();
        assert_eq!(time_norm(&ramp, 1.0, f64::INFINITY).unwrap(), 4.0);
        assert!(time_norm(&[1.0], 1.0, 2.0).is_err());
    }

    #[test]
    fn log_domain_matches_direct_sum() {
        let vals: Vec<f64> = (0..21).map(|i| 1.0 + (i as f64 * 0.3).sin().abs()).collect();
        let q = 60.0;
        let dt = 0.05;
        let direct: f64 = vals
            .iter()
            .enumerate()
            .map(|(i, v)| if i == 0 || i == 20 { 0.5 * dt } else { dt } * v.powf(q))
            .sum::<f64>()
            .powf(1.0 / q);
        assert_relative_eq!(time_norm(&vals, dt, q).unwrap(), direct, max_relative = 1e-12);
        let huge: Vec<f64> = vals.iter().map(|v| v * 1e200).collect();
        assert_relative_eq!(time_norm(&huge, dt, q).unwrap(), direct * 1e200, max_relative = 1e-12);
    }

    #[test]
    fn mixed_norm_constant_trajectory() {
        let g = TorusGrid::new(8, 4.0, 1).unwrap();
        let u = SpectralField::cosine(&g, [1, 0, 0], 1.0);
        let states: Vec<WaveState> = (0..9)
            .map(|j| WaveState::new(u.clone(), SpectralField::zeros(&g), j as f64 * 0.25).unwrap())
            .collect();
        let traj = Trajectory::new(states).unwrap();
        let r = 4.0;
        for q in [2.0, 5.0] {
            assert_relative_eq!(
                mixed_norm(&traj, q, r).unwrap(),
                2f64.powf(1.0 / q) * lp_norm(&u, r),
                max_relative = 1e-12
            );
        }
        assert_relative_eq!(
            mixed_norm(&traj, f64::INFINITY, r).unwrap(),
            lp_norm(&u, r),
            max_relative = 1e-14
        );
    }

    #[test]
    fn admissibility_examples() {
        let a = check_admissible(5.0, 10.0).unwrap();
        assert!(a.wave_admissible);
        assert_relative_eq!(a.gamma, 1.0, epsilon = 1e-15);
        let b = check_admissible(q_rho(4.0), 8.0).unwrap();
        assert_eq!(b.q, 8.0);
        assert!(b.wave_admissible);
        assert_relative_eq!(b.gamma, 1.0, epsilon = 1e-15);
        assert!(!check_admissible(2.0, 4.0).unwrap().wave_admissible);
        assert!(check_admissible(1.0, 4.0).is_err());
        let c = check_admissible(f64::INFINITY, 6.0).unwrap();
        assert!(c.wave_admissible);
        assert_relative_eq!(c.gamma, 1.0, epsilon = 1e-15);
        // (1/ε, 2/(1-2ε)) sits at regularity 2ε
        let eps = 0.05;
        let d = check_admissible(1.0 / eps, 2.0 / (1.0 - 2.0 * eps)).unwrap();
        assert!(d.wave_admissible);
        assert_relative_eq!(d.gamma, 2.0 * eps, epsilon = 1e-14);
        // forcing in L¹_t L²_x (dual of (∞, 2)) has γ = 1
        assert_relative_eq!(dual_scaling(f64::INFINITY, 2.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn derived_scalars() {
        assert_relative_eq!(s_threshold(3.0), 0.6, epsilon = 1e-15);
        assert_relative_eq!(s_threshold(4.0), 97.0 / 117.0, epsilon = 1e-15);
        assert_eq!(s_critical(5.0), 1.0);
        assert!(q_rho(3.0).is_infinite());
        assert_eq!(q_rho(4.0), 8.0);
        let cfg = config_derive(3.0, 0.8, 2.0, 8.0, 0.01, 0.5, 1.0).unwrap();
        let oracle = 0.5 / (2.0 * 8f64.powf(0.2)).powi(2);
        assert_relative_eq!(cfg.t1, oracle, max_relative = 1e-14);
        assert!((cfg.t1 - 0.0544).abs() < 5e-5);
        let cfg4 = config_derive(4.0, 0.9, 2.0, 8.0, 0.01, 0.5, 1.0).unwrap();
        assert!(cfg4.condition_ok);
        assert!(cfg4.driving_violations().is_empty());
    }

    #[test]
    fn hypotheses_reported_individually() {
        match config_derive(5.5, 1.2, -1.0, 2.0, 0.9, 1.5, 0.0) {
            Err(Error::Hypotheses(v)) => assert_eq!(v.len(), 7),
            other => panic!("unexpected {other:?}"),
        }
        let cfg = config_derive(4.0, 0.7, 2.0, 8.0, 0.01, 0.5, 1.0).unwrap();
        assert!(!cfg.driving_violations().is_empty());
    }

    #[test]
    fn default_eps_makes_exponent_negative() {
        for &(rho, s) in &[(3.0, 0.8), (4.0, 0.9), (3.5, 0.75), (4.5, 0.95)] {
            let eps = default_eps(rho, s);
            assert!(eps > 0.0 && eps < eps_bound(rho, s));
            assert!(e_n(rho, s, eps) < 0.0, "rho {rho} s {s}");
        }
    }

    #[test]
    fn energy_terms() {
        let g = TorusGrid::new(8, 4.0, 3).unwrap();
        let z = SpectralField::zeros(&g);
        assert_eq!(energy(&z, &z, 3.0).unwrap(), 0.0);
        let vt = SpectralField::constant(&g, 2.0 / g.volume().sqrt());
        assert_relative_eq!(energy(&z, &vt, 3.0).unwrap(), 2.0, max_relative = 1e-14);
        let v = SpectralField::mode(&g, [1, 0, 0], Complex64::new(0.1, 0.0));
        assert!(energy(&v, &z, 3.0).is_ok());
    }
}
