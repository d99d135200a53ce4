//! Fourier-space propagators of the linearized two-fluid system.
//!
//! The scalar model `â' = k² v̂`, `v̂' = −k² â − ν k² v̂` has an explicit 2×2 Green
//! matrix in three branches. The full per-mode symbol acts on
//! `(ĉ⁺, û⁺, ĉ⁻, û⁻)` and its potential part reduces to a 4×4 system in
//! `(ĉ±, d̂±)` with `d = div u`.

pub mod bounds;
pub mod radial;

use num_complex::Complex64;

use crate::closure::EquilibriumCoefficients;
use crate::error::{invalid, Error, Result};
use crate::linalg::{complexify, CMatrix, ModePropagator};

pub use bounds::{convolution_constant, kernel_sum_sup, ConvolutionCheck, ConvolutionKind, KernelSumReport};
pub use radial::{
    linear_decay_exponent, radial_block_norms, radial_l2_norm, Generator, LinearDecayReport, RadialBlocks,
    RadialProfile,
};

/// Half-width of the band `|ν² − 4| ≤ CRITICAL_BAND` routed to the critical formula.
pub const CRITICAL_BAND: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Oscillatory,
    Critical,
    Overdamped,
}

impl Branch {
    pub fn of(nu: f64) -> Branch {
        let disc = nu * nu - 4.0;
        if disc.abs() <= CRITICAL_BAND {
            Branch::Critical
        } else if disc < 0.0 {
            Branch::Oscillatory
        } else {
            Branch::Overdamped
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Oscillatory => "oscillatory",
            Branch::Critical => "critical",
            Branch::Overdamped => "overdamped",
        }
    }
}

/// Explicit Green matrix of the scalar model at one `(ν, k, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Green2x2 {
    pub nu: f64,
    pub k: f64,
    pub t: f64,
    pub entries: [[f64; 2]; 2],
    pub branch: Branch,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
}

impl Green2x2 {
    pub fn max_entry(&self) -> f64 {
        self.entries.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Roots `λ± = −(ν/2)k² ± k²√(ν²/4 − 1)` of `λ² + νk²λ + k⁴`.
pub fn eigenvalues(nu: f64, k: f64) -> (Complex64, Complex64) {
    let k2 = k * k;
    let re = -0.5 * nu * k2;
    match Branch::of(nu) {
        Branch::Critical => (Complex64::new(re, 0.0), Complex64::new(re, 0.0)),
        Branch::Oscillatory => {
            let w = k2 * (1.0 - 0.25 * nu * nu).sqrt();
            (Complex64::new(re, w), Complex64::new(re, -w))
        }
        Branch::Overdamped => {
            let d = k2 * (0.25 * nu * nu - 1.0).sqrt();
            (Complex64::new(re + d, 0.0), Complex64::new(re - d, 0.0))
        }
    }
}

/// Generator `[[0, k²], [−k², −νk²]]` of the scalar model.
pub fn mode_matrix(nu: f64, k: f64) -> [[f64; 2]; 2] {
    let k2 = k * k;
    [[0.0, k2], [-k2, -nu * k2]]
}

pub fn green_2x2(nu: f64, k: f64, t: f64) -> Result<Green2x2> {
    if !(nu > 0.0 && k > 0.0 && t >= 0.0) || !nu.is_finite() || !k.is_finite() || !t.is_finite() {
        return invalid(format!("green_2x2 needs nu > 0, k > 0, t >= 0 (nu = {nu}, k = {k}, t = {t})"));
    }
    let branch = Branch::of(nu);
    let (lp, lm) = eigenvalues(nu, k);
    let k2 = k * k;
    let a = 0.5 * nu * k2;
    let entries = match branch {
        Branch::Critical => {
            let e = (-a * t).exp();
            [[e * (1.0 + a * t), e * k2 * t], [-e * k2 * t, e * (1.0 - a * t)]]
        }
        Branch::Oscillatory => {
            let w = lp.im;
            let e = (-a * t).exp();
            let (s, c) = (w * t).sin_cos();
            let sw = s / w;
            [[e * (c + a * sw), e * k2 * sw], [-e * k2 * sw, e * (c - a * sw)]]
        }
        Branch::Overdamped => {
            let d = lp.re - lm.re;
            let ep = (lp.re * t).exp();
            let em = (lm.re * t).exp();
            let diff = (ep - em) / d;
            [[(lp.re * em - lm.re * ep) / d, k2 * diff], [-k2 * diff, (lp.re * ep - lm.re * em) / d]]
        }
    };
    Ok(Green2x2 { nu, k, t, entries, branch, lambda_plus: lp, lambda_minus: lm })
}

/// Anything that carries a constant per-mode generator.
pub trait Symbol {
    fn matrix(&self) -> &CMatrix;
}

/// Per-mode generator of the linear system on `(ĉ⁺, û⁺, ĉ⁻, û⁻)`, size `2 + 2N`.
#[derive(Debug, Clone)]
pub struct LinearSymbol {
    pub xi: Vec<f64>,
    pub matrix: CMatrix,
    pub coefficients: EquilibriumCoefficients,
}

impl Symbol for LinearSymbol {
    fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Index of `ĉ⁺`, `û⁺₀`, `ĉ⁻`, `û⁻₀` in the state vector for dimension `n`.
pub fn slots(n: usize) -> (usize, usize, usize, usize) {
    (0, 1, n + 1, n + 2)
}

pub fn build_symbol(xi: &[f64], coeffs: &EquilibriumCoefficients) -> LinearSymbol {
    let n = xi.len();
    let size = 2 + 2 * n;
    let mut m = CMatrix::zeros(size, size);
    let k2: f64 = xi.iter().map(|x| x * x).sum();
    let (cp, up, cm, um) = slots(n);
    let i = Complex64::i();
    let phases = [
        (cp, up, coeffs.beta1 + k2, coeffs.beta2, coeffs.nu1_plus, coeffs.nu2_plus, cm),
        (cm, um, coeffs.beta4 + k2, coeffs.beta3, coeffs.nu1_minus, coeffs.nu2_minus, cp),
    ];
    for (c, u, own, cross, nu1, nu2, other) in phases {
        for a in 0..n {
            m[(c, u + a)] = -i * xi[a];
            m[(u + a, c)] = -i * xi[a] * own;
            m[(u + a, other)] = -i * xi[a] * cross;
            m[(u + a, u + a)] += Complex64::new(-nu1 * k2, 0.0);
            for b in 0..n {
                m[(u + a, u + b)] += Complex64::new(-nu2 * xi[a] * xi[b], 0.0);
            }
        }
    }
    LinearSymbol { xi: xi.to_vec(), matrix: m, coefficients: *coeffs }
}

/// 4×4 generator on `(ĉ⁺, d̂⁺, ĉ⁻, d̂⁻)` with `d̂ = iξ·û`.
#[derive(Debug, Clone)]
pub struct ReducedQSymbol {
    pub k: f64,
    pub matrix: CMatrix,
}

impl Symbol for ReducedQSymbol {
    fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

impl ReducedQSymbol {
    pub fn real_entries(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.matrix[(r, c)].re;
            }
        }
        out
    }
}

pub fn reduce_q_symbol(k: f64, coeffs: &EquilibriumCoefficients) -> Result<ReducedQSymbol> {
    if !(k > 0.0) {
        return invalid(format!("reduced symbol needs k > 0, got {k}"));
    }
    let k2 = k * k;
    #[rustfmt::skip]
    let data = [
        0.0, -1.0, 0.0, 0.0,
        k2 * (coeffs.beta1 + k2), -coeffs.nu_plus * k2, k2 * coeffs.beta2, 0.0,
        0.0, 0.0, 0.0, -1.0,
        k2 * coeffs.beta3, 0.0, k2 * (coeffs.beta4 + k2), -coeffs.nu_minus * k2,
    ];
    Ok(ReducedQSymbol { k, matrix: complexify(4, 4, &data) })
}

/// `e^{tA}` for a symbol's generator.
pub fn propagator(symbol: &impl Symbol, t: f64) -> Result<CMatrix> {
    if !(t >= 0.0) {
        return invalid(format!("propagator needs t >= 0, got {t}"));
    }
    Ok(ModePropagator::new(symbol.matrix().clone()).exp(t))
}

/// Largest admissible prefactor of a fitted envelope.
pub const ENVELOPE_CAP: f64 = 5.0;

/// Fitted bound `|G(k, t)| ≤ C e^{−θ k² t}` on a sample set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEnvelope {
    pub theta: f64,
    pub prefactor: f64,
    /// Low-frequency rate and cutoff when the fit covers the full system.
    pub c0: Option<f64>,
    pub xi0: Option<f64>,
}

/// Input of [`fit_decay_envelope`].
#[derive(Debug, Clone, Copy)]
pub enum EnvelopeSource<'a> {
    /// Max-entry modulus of the 2×2 Green matrix.
    Green { nu: f64 },
    /// Scalar heat factor `e^{−rate·k²t}`.
    Heat { rate: f64 },
    /// Operator norm of the full linear propagator along `ξ = k e₁` in dimension 2.
    TwoFluid(&'a EquilibriumCoefficients),
}

/// One `(k, t, |G|)` sample of an envelope sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSample {
    pub k: f64,
    pub t: f64,
    pub magnitude: f64,
}

pub fn envelope_samples(source: &EnvelopeSource, ks: &[f64], ts: &[f64]) -> Result<Vec<EnvelopeSample>> {
    if ks.is_empty() || ts.is_empty() {
        return invalid("envelope fit needs nonempty k and t samples");
    }
    if ks.iter().any(|&k| !(k > 0.0)) || ts.iter().any(|&t| !(t >= 0.0)) {
        return invalid("envelope fit needs k > 0 and t >= 0");
    }
    let mut out = Vec::with_capacity(ks.len() * ts.len());
    for &k in ks {
        let prop = match source {
            EnvelopeSource::TwoFluid(c) => Some(ModePropagator::new(build_symbol(&[k, 0.0], c).matrix)),
            _ => None,
        };
        for &t in ts {
            let magnitude = match source {
                EnvelopeSource::Green { nu } => green_2x2(*nu, k, t)?.max_entry(),
                EnvelopeSource::Heat { rate } => (-rate * k * k * t).exp(),
                EnvelopeSource::TwoFluid(_) => {
                    crate::linalg::operator_norm(&prop.as_ref().expect("built above").exp(t))
                }
            };
            out.push(EnvelopeSample { k, t, magnitude });
        }
    }
    Ok(out)
}

/// Fits `C e^{−θk²t}` to the samples.
///
/// `θ` minimizes the bound at the mean sample argument `x̄ = mean(k²t)`, i.e. the
/// convex function `L(θ) − θx̄` with `L(θ) = max(0, maxᵢ ln|Gᵢ| + θk²ᵢtᵢ)`,
/// subject to `L(θ) ≤ ln C_cap`; then `C = e^{L(θ)}`.
pub fn fit_envelope_samples(samples: &[EnvelopeSample], cap: f64) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.k * s.k * s.t, s.magnitude.ln())).collect();
    let lncap = cap.ln();
    let big_l = |theta: f64| pts.iter().fold(0.0f64, |m, &(x, y)| m.max(y + theta * x));
    if big_l(0.0) > lncap {
        let w = samples.iter().max_by(|a, b| a.magnitude.total_cmp(&b.magnitude)).expect("nonempty samples");
        return Err(Error::VerificationFailure(format!(
            "|G| = {:.6e} at k = {}, t = {} exceeds the prefactor cap {cap}",
            w.magnitude, w.k, w.t
        )));
    }
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    if xbar <= 0.0 {
        return Ok((f64::INFINITY, big_l(0.0).exp()));
    }
    let mut hi = 1.0;
    while big_l(hi) <= lncap {
        hi *= 2.0;
        if hi > 1e12 {
            return Ok((f64::INFINITY, 1.0));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if big_l(mid) <= lncap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta_max = lo;
    let obj = |theta: f64| big_l(theta) - theta * xbar;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, theta_max);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..200 {
        if obj(c) <= obj(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let theta = 0.5 * (a + b);
    if !(theta > 1e-12) {
        let w = pts
            .iter()
            .zip(samples)
            .filter(|((x, _), _)| *x > 0.0)
            .max_by(|((xa, ya), _), ((xb, yb), _)| (ya / xa).total_cmp(&(yb / xb)))
            .map(|(_, s)| *s);
        return Err(Error::VerificationFailure(match w {
            Some(s) => format!(
                "no positive decay rate fits; slowest sample k = {}, t = {}, |G| = {:.6e}",
                s.k, s.t, s.magnitude
            ),
            None => "no positive decay rate fits the samples".into(),
        }));
    }
    Ok((theta, big_l(theta).exp()))
}

pub fn fit_decay_envelope(source: &EnvelopeSource, ks: &[f64], ts: &[f64]) -> Result<DecayEnvelope> {
    let samples = envelope_samples(source, ks, ts)?;
    let (theta, prefactor) = fit_envelope_samples(&samples, ENVELOPE_CAP)?;
    Ok(match source {
        EnvelopeSource::TwoFluid(_) => {
            DecayEnvelope { theta, prefactor, c0: Some(theta), xi0: ks.iter().cloned().reduce(f64::max) }
        }
        _ => DecayEnvelope { theta, prefactor, c0: None, xi0: None },
    })
}
