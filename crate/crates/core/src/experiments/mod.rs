//! Monte Carlo verification of the probabilistic estimates.
//!
//! Every experiment returns an [`McReport`]. Samples are generated from
//! per-sample seeds (see [`RandomSpec::for_sample`]) and mapped in parallel,
//! but results are collected in sample order and reduced with a fixed
//! pairwise tree, so reports do not depend on the thread count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{to_physical_pair, WaveState};
use crate::norms::{lp_norm, lp_norm_samples, time_norm};
use crate::propagator::FreeStep;
#[cfg(doc)]
use crate::random::RandomSpec;

mod averaging;
mod bernstein;
mod largedev;
mod lowfreq;
mod quintic_rate;
mod tail;

pub use averaging::{averaging_decay, AveragingSetup};
pub use bernstein::{bernstein_survey, norm_equiv_survey, partition_check};
pub use largedev::{gaussian_abs_moment, large_deviation_moments};
pub use lowfreq::lowfreq_event_rates;
pub use quintic_rate::quintic_event_rate;
pub use tail::{tail_estimate, tail_fit};

/// Number of batches for standard errors.
pub const BATCHES: usize = 20;
/// Least-squares fits need at least this many points.
pub const MIN_FIT_POINTS: usize = 5;
/// Minimum exceedance count for a point of a tail fit.
pub const MIN_EXCEEDANCES: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn new(name: impl Into<String>, value: f64, se: f64) -> Self {
        Self {
            name: name.into(),
            value,
            se,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantile {
    pub p: f64,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub slope_se: f64,
    pub points: usize,
}

/// Empirical survival on a `λ` grid with a least-squares fit of
/// `log ℙ(|F| > λ)` against `x(λ)` (usually `λ²`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub lambda: Vec<f64>,
    pub x: Vec<f64>,
    pub exceedances: Vec<usize>,
    pub survival: Vec<f64>,
    /// Points entering the fit.
    pub fitted: Vec<bool>,
    pub fit: Option<LineFit>,
    /// Grid points dropped for having fewer than [`MIN_EXCEEDANCES`].
    pub truncated: usize,
}

/// Per-`N` Monte Carlo means of a norm and the slope of `log mean` vs
/// `log N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub n: Vec<f64>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    pub mean_log_norm: Vec<f64>,
    pub fit: Option<LineFit>,
    /// Two-standard-error interval of the slope.
    pub slope_interval: Option<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Too few usable points for the declared fit.
    InsufficientRange,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(&self) -> bool {
        *self == Verdict::Pass
    }

    /// Conjunction; an insufficient range dominates a failure.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::InsufficientRange, _) | (_, Verdict::InsufficientRange) => Verdict::InsufficientRange,
            (Verdict::Pass, Verdict::Pass) => Verdict::Pass,
            _ => Verdict::Fail,
        }
    }
}

/// Plot-ready table: one row per grid point or sample summary.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub experiment: String,
    pub samples: usize,
    pub seed: u64,
    pub estimates: Vec<Estimate>,
    pub quantiles: Vec<Quantile>,
    pub tail: Option<TailFit>,
    pub decay: Option<DecayFit>,
    pub table: Table,
    /// Human-readable pass band.
    pub band: String,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl McReport {
    pub fn new(experiment: &str, samples: usize, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            samples,
            seed,
            estimates: Vec::new(),
            quantiles: Vec::new(),
            tail: None,
            decay: None,
            table: Table::default(),
            band: String::new(),
            verdict: Verdict::Fail,
            notes: Vec::new(),
        }
    }

    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }
}

/// Sum in a fixed binary tree over the slice order.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    match x.len() {
        0 => 0.0,
        1 => x[0],
        n if n <= 8 => x.iter().sum(),
        n => {
            let (a, b) = x.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        f64::NAN
    } else {
        pairwise_sum(x) / x.len() as f64
    }
}

/// Mean and batch-means standard error over [`BATCHES`] contiguous batches.
pub fn batch_mean(x: &[f64]) -> Result<(f64, f64)> {
    if x.len() < BATCHES {
        return Err(Error::InvalidParameter(format!(
            "{} samples is fewer than {BATCHES} batches",
            x.len()
        )));
    }
    let b = x.len() / BATCHES;
    let means: Vec<f64> = (0..BATCHES)
        .map(|i| {
            let end = if i + 1 == BATCHES { x.len() } else { (i + 1) * b };
            mean(&x[i * b..end])
        })
        .collect();
    let m = mean(x);
    let bm = mean(&means);
    let var = pairwise_sum(&means.iter().map(|v| (v - bm).powi(2)).collect::<Vec<_>>()) / (BATCHES - 1) as f64;
    Ok((m, (var / BATCHES as f64).sqrt()))
}

/// Linear-interpolated empirical quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Standard quantile summary.
pub fn summary_quantiles(x: &[f64]) -> Vec<Quantile> {
    let s = sorted(x);
    [0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99]
        .iter()
        .map(|&p| Quantile {
            p,
            value: quantile(&s, p),
        })
        .collect()
}

/// Unweighted least squares `y ≈ slope · x + intercept`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_se = if n > 2 {
        (sse / (n - 2) as f64 / sxx).sqrt()
    } else {
        f64::NAN
    };
    Some(LineFit {
        slope,
        intercept,
        r2,
        slope_se,
        points: n,
    })
}

/// `‖(S(t) data).u‖_{L^r}` at `t = j dt`, `j = 0..=⌊T/dt⌋`, without storing
/// the trajectory. Real data share one transform between two nodes.
pub fn free_node_norms(data: &WaveState, t_len: f64, dt: f64, r: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {dt} must be positive")));
    }
    let grid = data.grid();
    let n = (t_len / dt + 1e-9).floor() as usize;
    let at = |j: usize| FreeStep::new(grid, j as f64 * dt).apply(data).u;
    let real = data.u.is_real() && data.ut.is_real();
    let mut out = Vec::with_capacity(n + 1);
    let mut j = 0;
    while j <= n {
        if real && j < n {
            let (a, b) = to_physical_pair(&at(j), &at(j + 1));
            out.push(lp_norm_samples(&a, grid.sample_weight(), r));
            out.push(lp_norm_samples(&b, grid.sample_weight(), r));
            j += 2;
        } else {
            out.push(lp_norm(&at(j), r));
            j += 1;
        }
    }
    Ok(out)
}

/// `‖S(t) data‖_{L^q_t L^r_x([0,T])}` with the quadrature of
/// [`crate::norms::mixed_norm`].
pub fn free_mixed_norm(data: &WaveState, t_len: f64, dt: f64, q: f64, r: f64) -> Result<f64> {
    time_norm(&free_node_norms(data, t_len, dt, r)?, dt, q)
}

/// Map `f` over `0..n` in parallel, in order.
pub(crate) fn par_samples<T: Send>(n: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n as u64).into_par_iter().map(f).collect()
}

/// `ℙ < 10/samples` is reported as censored.
pub fn censored(p: f64, samples: usize) -> bool {
    p < 10.0 / samples as f64
}
