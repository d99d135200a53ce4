//! Time-weighted decay functionals, rate targets and power-law fits.

use crate::error::{invalid, Result};
use crate::linear_green::RadialBlocks;
use crate::lp_besov::time_norm;

/// Least-squares fit of `log(value)` against `log⟨t⟩` with `⟨t⟩ = 1 + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub samples: usize,
    pub window: (f64, f64),
}

/// Minimum number of samples inside a fit window.
pub const MIN_FIT_SAMPLES: usize = 8;

pub fn fit_decay(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != values.len() {
        return invalid(format!("{} times but {} values", times.len(), values.len()));
    }
    let pts: Vec<(f64, f64)> =
        times.iter().zip(values).filter(|(t, _)| **t >= window.0 && **t <= window.1).map(|(t, v)| (*t, *v)).collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return invalid(format!(
            "fit window [{}, {}] holds {} samples, need at least {MIN_FIT_SAMPLES}",
            window.0,
            window.1,
            pts.len()
        ));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return invalid(format!("fit needs positive finite values, got {v} at t = {t}"));
    }
    let xs: Vec<f64> = pts.iter().map(|(t, _)| t.ln_1p()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return invalid("fit window holds a single distinct time");
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit { slope, intercept, residual, samples: pts.len(), window })
}

/// Exponents of the decay statement for one `(p, N, ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayConfig {
    pub p: f64,
    pub dim: usize,
    pub epsilon: f64,
    /// `2N/p − N/2`.
    pub s0: f64,
    /// `N/p + 1/2 − ε`.
    pub alpha: f64,
    /// Regularities sampled for the supremum over `[ε − s₀, N/2 + 1]`.
    pub s_list: Vec<f64>,
}

pub const DEFAULT_EPSILON: f64 = 0.05;
pub const S_SAMPLES: usize = 7;

/// `2 ≤ p ≤ min(4, 2N/(N−2))`, with `p ≠ 4` when `N = 2`, for `N ≥ 2`.
pub fn check_p_range(p: f64, dim: usize) -> Result<()> {
    if dim < 2 {
        return invalid(format!("the decay statement needs N >= 2, got N = {dim}"));
    }
    let n = dim as f64;
    let upper = if dim == 2 { 4.0 } else { 4.0f64.min(2.0 * n / (n - 2.0)) };
    if !(p >= 2.0 && p <= upper) {
        return invalid(format!("p = {p} violates 2 <= p <= min(4, 2N/(N-2)) for N = {dim}"));
    }
    if dim == 2 && p == 4.0 {
        return invalid("p = 4 is excluded when N = 2 (2 <= p <= min(4, 2N/(N-2)) and p != 4 if N = 2)");
    }
    Ok(())
}

impl DecayConfig {
    pub fn new(p: f64, dim: usize, epsilon: f64) -> Result<Self> {
        check_p_range(p, dim)?;
        let n = dim as f64;
        let s0 = 2.0 * n / p - n / 2.0;
        if !(epsilon > 0.0 && epsilon < n / 2.0 + 1.0 + s0) {
            return invalid(format!("epsilon must be small and positive, got {epsilon}"));
        }
        let lo = epsilon - s0;
        let hi = n / 2.0 + 1.0;
        let s_list = (0..S_SAMPLES).map(|i| lo + (hi - lo) * i as f64 / (S_SAMPLES - 1) as f64).collect();
        Ok(DecayConfig { p, dim, epsilon, s0, alpha: n / p + 0.5 - epsilon, s_list })
    }
}

/// Predicted exponent `−(s + s₀)/2` and the ranges in which it is claimed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayTarget {
    pub s: f64,
    /// `Some` when the rate is claimed for at least one family.
    pub predicted: Option<f64>,
    /// `−s₀ < s ≤ N/p`.
    pub density_valid: bool,
    /// `−s₀ < s ≤ N/p − 1`.
    pub velocity_valid: bool,
    /// The `L²` rate `−N/4` when `p = 2` and `s = 0`.
    pub l2_rate: Option<f64>,
}

pub fn corollary_targets(config: &DecayConfig, s: f64) -> DecayTarget {
    let n = config.dim as f64;
    let np = n / config.p;
    let above = s > -config.s0;
    let density_valid = above && s <= np;
    let velocity_valid = above && s <= np - 1.0;
    let predicted = (density_valid || velocity_valid).then(|| -(s + config.s0) / 2.0);
    let l2_rate = (config.p == 2.0 && s == 0.0).then(|| -n / 4.0);
    DecayTarget { s, predicted, density_valid, velocity_valid, l2_rate }
}

/// Per-time dyadic norm channels of a trajectory.
///
/// Block `i` of every channel is `q = j_min + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSeries {
    pub times: Vec<f64>,
    pub j_min: i32,
    pub j0: i32,
    /// Integrability of the high-frequency channels.
    pub p: f64,
    /// L² block norms of `(c⁺, u⁺, c⁻, u⁻)`.
    pub u2: Vec<Vec<f64>>,
    /// Lᵖ block norms of `(u⁺, u⁻)`.
    pub u_p: Vec<Vec<f64>>,
    /// Lᵖ block norms of `(c⁺, c⁻)`.
    pub c_p: Vec<Vec<f64>>,
    /// Lᵖ block norms of `(∇c⁺, u⁺, ∇c⁻, u⁻)`.
    pub gradc_u_p: Vec<Vec<f64>>,
    /// L² norm of the full state, when recorded.
    pub l2: Option<Vec<f64>>,
}

impl NormSeries {
    /// Channels of a radial linear trajectory; all Lᵖ channels are taken with `p = 2`.
    pub fn from_radial(blocks: &RadialBlocks, j0: i32) -> NormSeries {
        let nt = blocks.times.len();
        NormSeries {
            times: blocks.times.clone(),
            j_min: blocks.q_min,
            j0,
            p: 2.0,
            u2: (0..nt).map(|i| blocks.full(i)).collect(),
            u_p: blocks.velocity.clone(),
            c_p: blocks.density.clone(),
            gradc_u_p: (0..nt).map(|i| blocks.grad_full(i)).collect(),
            l2: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nt = self.times.len();
        if nt == 0 {
            return invalid("norm series is empty");
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("norm series times must be strictly increasing");
        }
        for (name, ch) in [("u2", &self.u2), ("u_p", &self.u_p), ("c_p", &self.c_p), ("gradc_u_p", &self.gradc_u_p)] {
            if ch.len() != nt {
                return invalid(format!("channel {name} has {} rows for {nt} times", ch.len()));
            }
            let width = ch[0].len();
            if ch.iter().any(|row| row.len() != width) {
                return invalid(format!("channel {name} has ragged rows"));
            }
            if ch.iter().flatten().any(|v| !(*v >= 0.0)) {
                return invalid(format!("channel {name} holds negative or NaN norms"));
            }
        }
        Ok(())
    }

    fn q(&self, i: usize) -> i32 {
        self.j_min + i as i32
    }

    fn low_sum(&self, row: &[f64], s: f64) -> f64 {
        row.iter()
            .enumerate()
            .filter(|(i, _)| self.q(*i) <= self.j0)
            .map(|(i, b)| (self.q(i) as f64 * s).exp2() * b)
            .sum()
    }

    /// `Σ_{q ≥ j0} 2^{qs} max_{τ ≤ t_k} w(τ)·b_q(τ)` for each `t_k`.
    fn high_sup_series(&self, ch: &[Vec<f64>], s: f64, weight: impl Fn(f64) -> f64) -> Vec<f64> {
        let width = ch[0].len();
        let mut run = vec![0.0f64; width];
        self.times
            .iter()
            .zip(ch)
            .map(|(&t, row)| {
                for (r, b) in run.iter_mut().zip(row) {
                    *r = r.max(weight(t) * b);
                }
                run.iter()
                    .enumerate()
                    .filter(|(i, _)| self.q(*i) >= self.j0)
                    .map(|(i, b)| (self.q(i) as f64 * s).exp2() * b)
                    .sum()
            })
            .collect()
    }

    /// `Σ_{q in band} 2^{qs} ∫₀^{t_k} b_q` for each `t_k` (trapezoid).
    fn integral_series(&self, ch: &[Vec<f64>], s: f64, low: bool) -> Vec<f64> {
        let width = ch[0].len();
        let mut acc = vec![0.0f64; width];
        let keep = |q: i32| if low { q <= self.j0 } else { q >= self.j0 };
        (0..self.times.len())
            .map(|k| {
                if k > 0 {
                    let dt = self.times[k] - self.times[k - 1];
                    for (i, a) in acc.iter_mut().enumerate() {
                        *a += 0.5 * dt * (ch[k][i] + ch[k - 1][i]);
                    }
                }
                acc.iter()
                    .enumerate()
                    .filter(|(i, _)| keep(self.q(*i)))
                    .map(|(i, a)| (self.q(i) as f64 * s).exp2() * a)
                    .sum()
            })
            .collect()
    }

    fn low_sup_series(&self, ch: &[Vec<f64>], s: f64) -> Vec<f64> {
        let width = ch[0].len();
        let mut run = vec![0.0f64; width];
        ch.iter()
            .map(|row| {
                for (r, b) in run.iter_mut().zip(row) {
                    *r = r.max(*b);
                }
                self.low_sum(&run, s)
            })
            .collect()
    }
}

/// The six-term energy functional, evaluated at every recorded time.
pub fn functional_x(series: &NormSeries, config: &DecayConfig) -> Result<Vec<f64>> {
    series.validate()?;
    let n = config.dim as f64;
    let np = n / series.p;
    let terms = [
        series.low_sup_series(&series.u2, n / 2.0 - 1.0),
        series.integral_series(&series.u2, n / 2.0 + 1.0, true),
        series.high_sup_series(&series.u_p, np - 1.0, |_| 1.0),
        series.high_sup_series(&series.c_p, np, |_| 1.0),
        series.integral_series(&series.u_p, np + 1.0, false),
        series.integral_series(&series.c_p, np + 2.0, false),
    ];
    Ok((0..series.times.len()).map(|k| terms.iter().map(|t| t[k]).sum()).collect())
}

/// The time-weighted decay functional and its parts.
#[derive(Debug, Clone, PartialEq)]
pub struct DSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `sup_s sup_{τ≤t} ⟨τ⟩^{(s+s₀)/2} ‖U(τ)‖^ℓ_{Ḃˢ_{2,1}}`.
    pub low: Vec<f64>,
    /// `Σ_{q≥j0} 2^{q(N/p+1)} sup_{τ≤t} τ^α ‖Δ_q(∇c, u)‖_{Lᵖ}`.
    pub high: Vec<f64>,
    /// `‖U₀‖^ℓ_{Ḃ^{−s₀}_{2,∞}}`.
    pub d0: f64,
    /// `‖(∇c₀, u₀)‖^h_{Ḃ^{N/p−1}_{p,1}}`.
    pub high0: f64,
    /// `D(t) / (D₀ + high0)`.
    pub ratio: Vec<f64>,
}

pub fn functional_d(series: &NormSeries, config: &DecayConfig) -> Result<DSeries> {
    series.validate()?;
    let n = config.dim as f64;
    let np = n / series.p;
    let mut low = vec![0.0f64; series.times.len()];
    for &s in &config.s_list {
        let w = 0.5 * (s + config.s0);
        let mut run = 0.0f64;
        for (k, (&t, row)) in series.times.iter().zip(&series.u2).enumerate() {
            run = run.max((1.0 + t).powf(w) * series.low_sum(row, s));
            low[k] = low[k].max(run);
        }
    }
    let alpha = config.alpha;
    let high = series.high_sup_series(&series.gradc_u_p, np + 1.0, |t| t.powf(alpha));
    let values: Vec<f64> = low.iter().zip(&high).map(|(a, b)| a + b).collect();
    let first = &series.u2[0];
    let d0 = first
        .iter()
        .enumerate()
        .filter(|(i, _)| series.q(*i) <= series.j0)
        .map(|(i, b)| (-(series.q(i) as f64) * config.s0).exp2() * b)
        .fold(0.0, f64::max);
    let high0: f64 = series.gradc_u_p[0]
        .iter()
        .enumerate()
        .filter(|(i, _)| series.q(*i) >= series.j0)
        .map(|(i, b)| (series.q(i) as f64 * (np - 1.0)).exp2() * b)
        .sum();
    let denom = d0 + high0;
    let ratio = values.iter().map(|v| if denom > 0.0 { v / denom } else { 0.0 }).collect();
    Ok(DSeries { times: series.times.clone(), values, low, high, d0, high0, ratio })
}

/// First recorded time at which the lowest block carries at least ten times the rest
/// of the low band.
pub fn saturation_time(series: &NormSeries) -> Option<f64> {
    series.times.iter().zip(&series.u2).find_map(|(&t, row)| {
        let lowest = *row.first()?;
        let rest: f64 = row.iter().enumerate().skip(1).filter(|(i, _)| series.q(*i) <= series.j0).map(|(_, b)| b).sum();
        (lowest > 0.0 && lowest >= 10.0 * rest).then_some(t)
    })
}

/// Last decade of recorded times before saturation.
pub fn default_window(times: &[f64], saturation: Option<f64>) -> (f64, f64) {
    let last = times.iter().cloned().fold(0.0, f64::max);
    let hi = saturation.map_or(last, |s| s.min(last));
    (0.1 * hi, hi)
}

/// `‖f‖_{L^ρ(0,T)}` of a sampled scalar series, re-exported for report assembly.
pub fn series_time_norm(times: &[f64], values: &[f64], rho: f64) -> f64 {
    time_norm(times, values, rho)
}
