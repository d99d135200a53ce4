//! Whole-space radial quadrature of linear decay in dyadic low-frequency norms.
//!
//! For radial data the propagated state at `ξ = k ω` has the same modulus for every
//! direction `ω`, so each dyadic block norm reduces to a one-dimensional integral
//! `|S^{N−1}|/(2π)^N ∫ φ(2^{−q}k)² |e^{tA(k)}Û₀(k)|² k^{N−1} dk`.
//! Along `ξ = k e₁` the potential part is the one-dimensional symbol and each
//! transverse velocity component is a heat mode with rate `ν₁±`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::build_symbol;
use crate::closure::EquilibriumCoefficients;
use crate::decay::{fit_decay, DecayFit};
use crate::error::{invalid, Result};
use crate::linalg::{CVector, ModePropagator};
use crate::lp_besov::phi_j;
use crate::quad::{composite_nodes, gauss_legendre};

/// Linear semigroup integrated by the radial quadrature.
#[derive(Debug, Clone, Copy)]
pub enum Generator {
    /// Scalar heat equation `∂ₜf = rate·Δf`.
    Heat { rate: f64 },
    /// Linearized two-fluid system.
    TwoFluid(EquilibriumCoefficients),
}

/// Radial initial data `Û₀(ξ) = |ξ|^power 1_{|ξ| ≤ radius} · a`, with amplitude vector
/// `a = (c⁺, u⁺, c⁻, u⁻)` expressed in the frame of `ξ`: every velocity component
/// (longitudinal and transverse) carries the same amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    pub radius: f64,
    pub power: f64,
    pub amplitudes: [f64; 4],
}

impl RadialProfile {
    pub fn indicator(radius: f64) -> Self {
        RadialProfile { radius, power: 0.0, amplitudes: [1.0; 4] }
    }

    /// Data whose low-frequency blocks scale exactly like `Ḃ^{−s₀}_{2,∞}` with `s₀ = 2N/p − N/2`.
    pub fn borderline(dim: usize, p: f64) -> Self {
        let n = dim as f64;
        RadialProfile { radius: 1.0, power: 2.0 * n / p - n, amplitudes: [1.0; 4] }
    }

    pub fn with_amplitudes(mut self, amplitudes: [f64; 4]) -> Self {
        self.amplitudes = amplitudes;
        self
    }
}

/// Dyadic block norms of a radially quadratured linear trajectory.
#[derive(Debug, Clone)]
pub struct RadialBlocks {
    pub q_min: i32,
    pub q_max: i32,
    pub times: Vec<f64>,
    /// `[t][q − q_min]`: L² block norm of the density components.
    pub density: Vec<Vec<f64>>,
    /// `[t][q − q_min]`: L² block norm of the velocity components.
    pub velocity: Vec<Vec<f64>>,
    /// `[t][q − q_min]`: L² block norm of `(∇c⁺, ∇c⁻)`.
    pub grad_density: Vec<Vec<f64>>,
}

impl RadialBlocks {
    pub fn block_count(&self) -> usize {
        (self.q_max - self.q_min + 1) as usize
    }

    /// Block norms of the full state `(c⁺, u⁺, c⁻, u⁻)` at time index `i`.
    pub fn full(&self, i: usize) -> Vec<f64> {
        self.density[i].iter().zip(&self.velocity[i]).map(|(d, v)| d.hypot(*v)).collect()
    }

    /// Block norms of `(∇c⁺, u⁺, ∇c⁻, u⁻)` at time index `i`.
    pub fn grad_full(&self, i: usize) -> Vec<f64> {
        self.grad_density[i].iter().zip(&self.velocity[i]).map(|(d, v)| d.hypot(*v)).collect()
    }

    /// `Σ_{q ≤ j0} 2^{qs} b_q` for block norms `b`.
    pub fn low_besov(&self, blocks: &[f64], s: f64, j0: i32) -> f64 {
        blocks
            .iter()
            .enumerate()
            .map(|(i, b)| (self.q_min + i as i32, b))
            .filter(|(q, _)| *q <= j0)
            .map(|(q, b)| (q as f64 * s).exp2() * b)
            .sum()
    }
}

fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!("dimension checked by caller"),
    }
}

struct Node {
    k: f64,
    weight: f64,
    prop: Option<(ModePropagator, CVector)>,
}

/// Slowest relative damping rate `min(−Re λ)/k²` and fastest frequency `max |Im λ|` at `k`.
fn rates_at(gen: &Generator, k: f64) -> (f64, f64) {
    match gen {
        Generator::Heat { rate } => (*rate, 0.0),
        Generator::TwoFluid(c) => {
            let sym = build_symbol(&[k], c);
            let values = crate::linalg::eigen(&sym.matrix).map(|e| e.values).unwrap_or_else(|| {
                let n = sym.matrix.nrows();
                CVector::from_iterator(n, (0..n).map(|i| sym.matrix[(i, i)]))
            });
            let damp = values.iter().map(|l| -l.re / (k * k)).fold(c.nu1_plus.min(c.nu1_minus), f64::min);
            let freq = values.iter().map(|l| l.im.abs()).fold(0.0, f64::max);
            (damp.max(1e-6), freq)
        }
    }
}

fn block_nodes(
    gen: &Generator,
    dim: usize,
    profile: &RadialProfile,
    q: i32,
    t_max: f64,
    rule: &(Vec<f64>, Vec<f64>),
) -> Vec<Node> {
    let scale = (q as f64).exp2();
    let lo = 0.75 * scale;
    let hi = (8.0 / 3.0 * scale).min(profile.radius);
    if hi <= lo {
        return Vec::new();
    }
    let (mut damp, mut freq) = (f64::INFINITY, 0.0f64);
    for i in 0..=8 {
        let k = lo + (hi - lo) * i as f64 / 8.0;
        let (d, f) = rates_at(gen, k);
        damp = damp.min(d);
        freq = freq.max(f / k);
    }
    let t_eff = t_max.min(36.0 / (damp * lo * lo));
    let phase = 2.0 * freq * t_eff * (hi - lo);
    let panels = ((phase / PI).ceil() as usize).max(8);
    let area = sphere_area(dim) / (2.0 * PI).powi(dim as i32);
    composite_nodes(lo, hi, panels, rule)
        .into_iter()
        .map(|(k, w)| {
            let phi = phi_j(q, k);
            make_node(gen, profile, k, w * area * phi * phi * k.powi(dim as i32 - 1))
        })
        .collect()
}

fn make_node(gen: &Generator, profile: &RadialProfile, k: f64, weight: f64) -> Node {
    let prop = match gen {
        Generator::Heat { .. } => None,
        Generator::TwoFluid(c) => {
            let amp = k.powf(profile.power);
            let v0 = CVector::from_iterator(4, profile.amplitudes.iter().map(|x| Complex64::new(x * amp, 0.0)));
            let p = ModePropagator::new(build_symbol(&[k], c).matrix);
            let w0 = p.coords(&v0).unwrap_or(v0);
            Some((p, w0))
        }
    };
    Node { k, weight, prop }
}

/// Squared moduli `(|ĉ|², |û|²)` of the propagated data at one node.
fn node_state(gen: &Generator, dim: usize, profile: &RadialProfile, node: &Node, t: f64) -> (f64, f64) {
    let k = node.k;
    let amp = k.powf(profile.power);
    let a = profile.amplitudes;
    match gen {
        Generator::Heat { rate } => {
            let e = (-rate * k * k * t).exp() * amp * a[0];
            (e * e, 0.0)
        }
        Generator::TwoFluid(c) => {
            let (p, w) = node.prop.as_ref().expect("two-fluid nodes carry a propagator");
            let v = if p.eigensystem().is_some() { p.apply_coords(t, w) } else { p.apply(t, w) };
            let dens = v[0].norm_sqr() + v[2].norm_sqr();
            let mut vel = v[1].norm_sqr() + v[3].norm_sqr();
            let transverse = (dim - 1) as f64;
            let ep = (-c.nu1_plus * k * k * t).exp() * amp * a[1];
            let em = (-c.nu1_minus * k * k * t).exp() * amp * a[3];
            vel += transverse * (ep * ep + em * em);
            (dens, vel)
        }
    }
}

/// Lowest dyadic block index used by the radial quadrature.
pub const Q_MIN: i32 = -40;

/// Per-time dyadic L² block norms of `e^{tA}U₀` over `q ∈ [Q_MIN, q_max]`, where
/// `q_max` is the last block meeting the data support.
pub fn radial_block_norms(gen: &Generator, dim: usize, profile: &RadialProfile, times: &[f64]) -> Result<RadialBlocks> {
    if !(1..=3).contains(&dim) {
        return invalid(format!("radial quadrature supports N in 1..=3, got {dim}"));
    }
    if !(profile.radius > 0.0 && profile.radius.is_finite()) {
        return invalid(format!("profile radius must be positive, got {}", profile.radius));
    }
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return invalid("times must be finite and nonnegative");
    }
    if let Generator::Heat { rate } = gen {
        if !(*rate > 0.0) {
            return invalid(format!("heat rate must be positive, got {rate}"));
        }
    }
    let q_max = (profile.radius / 0.75).log2().ceil() as i32 - 1;
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let rule = gauss_legendre(16);
    let per_block: Vec<Vec<(f64, f64, f64)>> = (Q_MIN..=q_max)
        .into_par_iter()
        .map(|q| {
            let nodes = block_nodes(gen, dim, profile, q, t_max, &rule);
            times
                .iter()
                .map(|&t| {
                    let (mut d, mut v, mut g) = (0.0, 0.0, 0.0);
                    for node in &nodes {
                        let (dn, vn) = node_state(gen, dim, profile, node, t);
                        d += node.weight * dn;
                        v += node.weight * vn;
                        g += node.weight * node.k * node.k * dn;
                    }
                    (d.sqrt(), v.sqrt(), g.sqrt())
                })
                .collect()
        })
        .collect();
    let nt = times.len();
    let pick = |f: fn(&(f64, f64, f64)) -> f64| -> Vec<Vec<f64>> {
        (0..nt).map(|i| per_block.iter().map(|b| f(&b[i])).collect()).collect()
    };
    Ok(RadialBlocks {
        q_min: Q_MIN,
        q_max,
        times: times.to_vec(),
        density: pick(|x| x.0),
        velocity: pick(|x| x.1),
        grad_density: pick(|x| x.2),
    })
}

/// Squared L² norm `(2π)^{−N} ∫ |e^{tA}Û₀|² dξ` by the same radial quadrature,
/// split into geometric shells down to `radius·2^{−60}`.
pub fn radial_l2_norm(gen: &Generator, dim: usize, profile: &RadialProfile, t: f64) -> Result<f64> {
    if !(1..=3).contains(&dim) {
        return invalid(format!("radial quadrature supports N in 1..=3, got {dim}"));
    }
    let rule = gauss_legendre(16);
    let area = sphere_area(dim) / (2.0 * PI).powi(dim as i32);
    let mut total = 0.0;
    for level in 0..60 {
        let hi = profile.radius * (-(level as f64)).exp2();
        let lo = 0.5 * hi;
        let (damp, freq) = rates_at(gen, hi);
        let phase = 2.0 * freq / hi * t.min(36.0 / (damp * lo * lo)) * (hi - lo);
        let panels = ((phase / PI).ceil() as usize).max(4);
        for (k, w) in composite_nodes(lo, hi, panels, &rule) {
            let node = make_node(gen, profile, k, w * area * k.powi(dim as i32 - 1));
            let (d, v) = node_state(gen, dim, profile, &node, t);
            total += node.weight * (d + v);
        }
    }
    Ok(total)
}

/// Fitted large-time slope of a low-frequency Besov norm under the linear semigroup.
#[derive(Debug, Clone)]
pub struct LinearDecayReport {
    pub s: f64,
    pub p: f64,
    pub dim: usize,
    pub s0: f64,
    /// `−(s + s₀)/2`.
    pub predicted: f64,
    pub fit: DecayFit,
    pub times: Vec<f64>,
    /// Low `Ḃˢ_{2,1}` norm of the full state.
    pub values: Vec<f64>,
    /// Same norm restricted to the densities and to the velocities.
    pub density_values: Vec<f64>,
    pub velocity_values: Vec<f64>,
}

/// Evaluates the low-frequency `Ḃˢ_{2,1}` norm (threshold `j0 = 0`) of `e^{tA}U₀` on
/// `times` and fits its slope against `log⟨t⟩` over `window`.
pub fn linear_decay_exponent(
    s: f64,
    p: f64,
    dim: usize,
    gen: &Generator,
    profile: &RadialProfile,
    times: &[f64],
    window: (f64, f64),
) -> Result<LinearDecayReport> {
    let n = dim as f64;
    let s0 = 2.0 * n / p - n / 2.0;
    if !(s + s0 > 0.0) {
        return invalid(format!("decay exponent needs s + s0 > 0 (s = {s}, s0 = {s0})"));
    }
    let blocks = radial_block_norms(gen, dim, profile, times)?;
    let series = |f: &dyn Fn(usize) -> Vec<f64>| -> Vec<f64> {
        (0..times.len()).map(|i| blocks.low_besov(&f(i), s, 0)).collect()
    };
    let values = series(&|i| blocks.full(i));
    let density_values = series(&|i| blocks.density[i].clone());
    let velocity_values = series(&|i| blocks.velocity[i].clone());
    let fit = fit_decay(times, &values, window)?;
    Ok(LinearDecayReport {
        s,
        p,
        dim,
        s0,
        predicted: -(s + s0) / 2.0,
        fit,
        times: times.to_vec(),
        values,
        density_values,
        velocity_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_l2_matches_closed_form() {
        let gen = Generator::Heat { rate: 1.0 };
        let prof = RadialProfile::indicator(1.0);
        for t in [0.1, 1.0, 10.0, 100.0] {
            let got = radial_l2_norm(&gen, 2, &prof, t).unwrap();
            let want = (1.0 - (-2.0 * t).exp()) / (4.0 * t) / (2.0 * PI);
            assert!((got / want - 1.0).abs() < 1e-10, "t = {t}: {got} vs {want}");
        }
    }

    #[test]
    fn block_range_follows_radius() {
        let gen = Generator::Heat { rate: 1.0 };
        let b = radial_block_norms(&gen, 2, &RadialProfile::indicator(1.0), &[0.0]).unwrap();
        assert_eq!(b.q_max, 0);
        let b = radial_block_norms(&gen, 2, &RadialProfile::indicator(1.6), &[0.0]).unwrap();
        assert_eq!(b.q_max, 1);
    }
}
