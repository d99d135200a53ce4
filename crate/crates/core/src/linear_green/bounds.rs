//! Dyadic heat-kernel sums and time-convolution bounds used by the decay argument.

use crate::error::{invalid, Result};
use crate::quad::integrate;

/// `Σ_{q=q_lo}^{q_hi} t^{σ/2} 2^{qσ} e^{−c₀4^q t}`.
pub fn kernel_sum(sigma: f64, c0: f64, q_lo: i32, q_hi: i32, t: f64) -> f64 {
    let lt = t.ln();
    (q_lo..=q_hi)
        .map(|q| {
            let x = (2.0 * q as f64).exp2() * t;
            (0.5 * sigma * lt + q as f64 * sigma * std::f64::consts::LN_2 - c0 * x).exp()
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSumReport {
    pub sigma: f64,
    pub c0: f64,
    pub q_half_range: i32,
    pub sup: f64,
    pub argmax_t: f64,
    /// Supremum with the q-range doubled.
    pub sup_doubled: f64,
    pub relative_change: f64,
}

/// Supremum of [`kernel_sum`] over `times` for `q ∈ [−q_half, q_half]`, compared
/// with the same supremum over `[−2q_half, 2q_half]`.
pub fn kernel_sum_sup(sigma: f64, c0: f64, q_half: i32, times: &[f64]) -> Result<KernelSumReport> {
    if !(sigma > 0.0 && c0 > 0.0 && q_half > 0) {
        return invalid(format!("kernel sum needs sigma > 0, c0 > 0, q range > 0 (sigma = {sigma}, c0 = {c0})"));
    }
    if times.is_empty() || times.iter().any(|t| !(*t > 0.0)) {
        return invalid("kernel sum needs positive sample times");
    }
    let sup_over = |h: i32| {
        times
            .iter()
            .map(|&t| (kernel_sum(sigma, c0, -h, h, t), t))
            .fold((0.0f64, 0.0), |a, b| if b.0 > a.0 { b } else { a })
    };
    let (sup, argmax_t) = sup_over(q_half);
    let (sup_doubled, _) = sup_over(2 * q_half);
    Ok(KernelSumReport {
        sigma,
        c0,
        q_half_range: q_half,
        sup,
        argmax_t,
        sup_doubled,
        relative_change: (sup_doubled - sup).abs() / sup,
    })
}

/// Time convolutions of algebraic weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvolutionKind {
    /// `∫₀ᵗ (1+t−τ)^{−r₁}(1+τ)^{−r₂} dτ`, bounded by `C(1+t)^{−min(r₁,r₂)}` when `max(r₁, r₂) > 1`.
    TwoPowers { r1: f64, r2: f64 },
    /// `∫₀ᵗ (1+t−τ)^{−r₁} τ^{−θ}(1+τ)^{θ−r₂} dτ`, bounded by `C(1+t)^{−r₁}` when
    /// `0 ≤ r₁ ≤ r₂`, `r₂ > 1`, `0 ≤ θ < 1`.
    SingularWeight { r1: f64, r2: f64, theta: f64 },
}

impl ConvolutionKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ConvolutionKind::TwoPowers { r1, r2 } => {
                if !(r1 > 0.0 && r2 > 0.0 && r1.max(r2) > 1.0) {
                    return invalid(format!("need r1, r2 > 0 and max(r1, r2) > 1 (r1 = {r1}, r2 = {r2})"));
                }
            }
            ConvolutionKind::SingularWeight { r1, r2, theta } => {
                if !(0.0 <= r1 && r1 <= r2 && r2 > 1.0 && (0.0..1.0).contains(&theta)) {
                    return invalid(format!(
                        "need 0 <= r1 <= r2, r2 > 1 and 0 <= theta < 1 (r1 = {r1}, r2 = {r2}, theta = {theta})"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Exponent of the claimed bound `(1+t)^{−rate}`.
    pub fn rate(&self) -> f64 {
        match *self {
            ConvolutionKind::TwoPowers { r1, r2 } => r1.min(r2),
            ConvolutionKind::SingularWeight { r1, .. } => r1,
        }
    }

    fn parts(&self) -> (f64, f64, f64) {
        match *self {
            ConvolutionKind::TwoPowers { r1, r2 } => (r1, r2, 0.0),
            ConvolutionKind::SingularWeight { r1, r2, theta } => (r1, r2, theta),
        }
    }
}

const REL_TOL: f64 = 1e-11;

/// Value of the convolution integral at time `t`.
///
/// The integral is split at `t/2`. The left half uses `τ = w^{1/(1−θ)}` on `[0, 1]`
/// and `τ = e^u` beyond, the right half uses `u = ln(1 + t − τ)`.
pub fn convolution_integral(kind: &ConvolutionKind, t: f64) -> Result<f64> {
    kind.validate()?;
    if !(t >= 0.0) {
        return invalid(format!("convolution needs t >= 0, got {t}"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let (r1, r2, theta) = kind.parts();
    let kernel = |sigma: f64| (1.0 + sigma).powf(-r1);
    let weight = |tau: f64| tau.powf(-theta) * (1.0 + tau).powf(theta - r2);
    let mid = 0.5 * t;
    let a = mid.min(1.0);
    let e = 1.0 / (1.0 - theta);
    let near_zero = integrate(
        |w| {
            let tau = w.powf(e);
            e * kernel(t - tau) * (1.0 + tau).powf(theta - r2)
        },
        0.0,
        a.powf(1.0 - theta),
        0.0,
        REL_TOL,
    )?;
    let left = if mid > 1.0 {
        integrate(
            |u| {
                let tau = u.exp();
                tau * kernel(t - tau) * weight(tau)
            },
            0.0,
            mid.ln(),
            0.0,
            REL_TOL,
        )?
    } else {
        0.0
    };
    let right = integrate(
        |u| {
            let sigma = u.exp_m1();
            u.exp() * kernel(sigma) * weight(t - sigma)
        },
        0.0,
        (1.0 + mid).ln(),
        0.0,
        REL_TOL,
    )?;
    Ok(near_zero + left + right)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionCheck {
    pub kind: ConvolutionKind,
    pub times: Vec<f64>,
    /// `I(t)·(1+t)^{rate}` per sample time.
    pub ratios: Vec<f64>,
    /// Largest ratio: the fitted constant `C`.
    pub constant: f64,
    /// `(max − min)/max` of the ratios over the last decade of `times`.
    pub top_decade_drift: f64,
}

pub fn convolution_constant(kind: &ConvolutionKind, times: &[f64]) -> Result<ConvolutionCheck> {
    kind.validate()?;
    if times.is_empty() {
        return invalid("convolution check needs sample times");
    }
    let ratios = times
        .iter()
        .map(|&t| Ok(convolution_integral(kind, t)? * (1.0 + t).powf(kind.rate())))
        .collect::<Result<Vec<f64>>>()?;
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let top: Vec<f64> = times.iter().zip(&ratios).filter(|(t, _)| **t >= 0.1 * t_max).map(|(_, r)| *r).collect();
    let hi = top.iter().cloned().fold(0.0, f64::max);
    let lo = top.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ConvolutionCheck {
        kind: *kind,
        times: times.to_vec(),
        constant: ratios.iter().cloned().fold(0.0, f64::max),
        ratios,
        top_decade_drift: (hi - lo) / hi,
    })
}
