//! Dealiased pseudo-spectral evaluation of the nonlinear source terms.

use num_complex::Complex64;
use rayon::prelude::*;

use super::FieldState;
use crate::closure::{CoeffEvaluator, CoeffValues, EquilibriumCoefficients};
use crate::error::{Error, Result};
use crate::grid::{dealias, forward_real, inverse_real, Grid, SpectralField};

/// Source terms of the perturbation system, stored spectrally.
#[derive(Debug, Clone)]
pub struct NonlinearTerms {
    /// `−div(c⁺u⁺)`.
    pub h1: SpectralField,
    pub h2: SpectralField,
    /// `−div(c⁻u⁻)`.
    pub h3: SpectralField,
    pub h4: SpectralField,
}

impl NonlinearTerms {
    /// Components in state order `(H₁, H₂, H₃, H₄)`.
    pub fn stacked(&self) -> Vec<Vec<Complex64>> {
        let mut out = Vec::new();
        for f in [&self.h1, &self.h2, &self.h3, &self.h4] {
            out.extend(f.spectral().iter().cloned());
        }
        out
    }
}

/// Physical samples of one phase and its derivatives.
struct PhaseFields {
    c: Vec<f64>,
    grad_c: Vec<Vec<f64>>,
    u: Vec<Vec<f64>>,
    /// `grad_u[i][j] = ∂_j u_i`.
    grad_u: Vec<Vec<Vec<f64>>>,
    lap_u: Vec<Vec<f64>>,
    grad_div_u: Vec<Vec<f64>>,
}

fn derived(grid: &Grid, spec: &[Complex64], mult: impl Fn(usize) -> Complex64 + Sync) -> Vec<f64> {
    let m: Vec<Complex64> = spec.par_iter().enumerate().map(|(i, z)| z * mult(i)).collect();
    inverse_real(grid, &m)
}

fn phase_fields(grid: &Grid, c: &SpectralField, u: &SpectralField) -> PhaseFields {
    let n = grid.dim();
    let cs = &c.spectral()[0];
    let us = u.spectral();
    let ik = |i: usize, a: usize| {
        if grid.is_nyquist(i) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, grid.wavevector(i)[a])
        }
    };
    let k2 = |i: usize| {
        let k = grid.kmag(i);
        Complex64::new(-k * k, 0.0)
    };
    let grad_c = (0..n).map(|a| derived(grid, cs, |i| ik(i, a))).collect();
    let grad_u = (0..n).map(|i| (0..n).map(|j| derived(grid, &us[i], |m| ik(m, j))).collect()).collect();
    let lap_u = (0..n).map(|i| derived(grid, &us[i], k2)).collect();
    let div_hat: Vec<Complex64> =
        (0..grid.len()).into_par_iter().map(|m| (0..n).map(|j| us[j][m] * ik(m, j)).sum()).collect();
    let grad_div_u = (0..n).map(|i| derived(grid, &div_hat, |m| ik(m, i))).collect();
    PhaseFields { c: c.physical()[0].clone(), grad_c, u: u.physical().to_vec(), grad_u, lap_u, grad_div_u }
}

/// Momentum source at sample `m` for one phase.
///
/// `g_own` multiplies the phase's own density gradient and `g_cross` the other one;
/// `h` and `k` weight `∇c⁺` and `∇c⁻` in the viscous cross terms.
#[allow(clippy::too_many_arguments)]
fn momentum_term(
    ph: &PhaseFields,
    grad_plus: &[Vec<f64>],
    grad_minus: &[Vec<f64>],
    m: usize,
    i: usize,
    g_own: f64,
    g_cross: f64,
    own_is_plus: bool,
    h: f64,
    k: f64,
    l: f64,
    mu: f64,
    lambda: f64,
) -> f64 {
    let n = ph.u.len();
    let (own, cross) = if own_is_plus { (grad_plus, grad_minus) } else { (grad_minus, grad_plus) };
    let mut acc = -g_own * own[i][m] - g_cross * cross[i][m];
    let mut div = 0.0;
    for j in 0..n {
        acc -= ph.u[j][m] * ph.grad_u[i][j][m];
        let w = h * grad_plus[j][m] + k * grad_minus[j][m];
        acc += mu * w * (ph.grad_u[i][j][m] + ph.grad_u[j][i][m]);
        div += ph.grad_u[j][j][m];
    }
    acc += lambda * (h * grad_plus[i][m] + k * grad_minus[i][m]) * div;
    acc += mu * l * ph.lap_u[i][m] + (mu + lambda) * l * ph.grad_div_u[i][m];
    acc
}

/// Minimum of `1 + c` over the grid for a scalar perturbation field.
pub fn min_mass(c: &SpectralField) -> f64 {
    c.physical()[0].par_iter().cloned().reduce(|| f64::INFINITY, f64::min) + 1.0
}

/// Evaluates `H₁…H₄` at `state`.
pub fn nonlinear_terms(
    state: &FieldState,
    evaluator: &CoeffEvaluator,
    coeffs: &EquilibriumCoefficients,
) -> Result<NonlinearTerms> {
    let mut guess = None;
    evaluate(state, evaluator, coeffs, &mut guess, true)
}

/// Same as [`nonlinear_terms`]; `guess` carries `ρ⁺` samples between calls to warm-start
/// the pointwise closure solve, and `dealiased` toggles the two-thirds mask.
pub(crate) fn evaluate(
    state: &FieldState,
    evaluator: &CoeffEvaluator,
    coeffs: &EquilibriumCoefficients,
    guess: &mut Option<Vec<f64>>,
    dealiased: bool,
) -> Result<NonlinearTerms> {
    let grid = state.grid().clone();
    let n = grid.dim();
    for (name, c) in [("R+", &state.c_plus), ("R-", &state.c_minus)] {
        let m = min_mass(c);
        if !(m > 0.0) {
            return Err(Error::StateInvalid(format!("mass {name} lost positivity (min {m:e}) at t = {}", state.time)));
        }
    }
    let plus = phase_fields(&grid, &state.c_plus, &state.u_plus);
    let minus = phase_fields(&grid, &state.c_minus, &state.u_minus);

    let seeds = guess.take();
    let evaluated: Vec<(CoeffValues, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|m| {
            let g = seeds.as_ref().map(|s| s[m]);
            evaluator.eval_with_guess(plus.c[m], minus.c[m], g).map(|(v, st)| (v, st.rho_plus))
        })
        .collect::<Result<_>>()?;
    *guess = Some(evaluated.iter().map(|(_, r)| *r).collect());

    let mut h2 = vec![vec![0.0; grid.len()]; n];
    let mut h4 = vec![vec![0.0; grid.len()]; n];
    for i in 0..n {
        h2[i].par_iter_mut().zip(h4[i].par_iter_mut()).enumerate().for_each(|(m, (a, b))| {
            let v = &evaluated[m].0;
            *a = momentum_term(
                &plus,
                &plus.grad_c,
                &minus.grad_c,
                m,
                i,
                v.g_plus,
                v.g_tilde,
                true,
                v.h_plus,
                v.k_plus,
                v.l_plus,
                coeffs.mu_plus,
                coeffs.lambda_plus,
            );
            *b = momentum_term(
                &minus,
                &plus.grad_c,
                &minus.grad_c,
                m,
                i,
                v.g_minus,
                v.g_tilde,
                false,
                v.h_minus,
                v.k_minus,
                v.l_minus,
                coeffs.mu_minus,
                coeffs.lambda_minus,
            );
        });
    }

    let to_spec = |samples: &[f64]| {
        let mut s = forward_real(&grid, samples);
        if dealiased {
            dealias(&grid, &mut s);
        }
        s
    };
    let neg_div_flux = |ph: &PhaseFields| {
        let flux: Vec<Vec<Complex64>> = (0..n)
            .map(|a| {
                let f: Vec<f64> = ph.c.iter().zip(&ph.u[a]).map(|(c, u)| c * u).collect();
                to_spec(&f)
            })
            .collect();
        let out: Vec<Complex64> = (0..grid.len())
            .into_par_iter()
            .map(|m| {
                if grid.is_nyquist(m) {
                    return Complex64::new(0.0, 0.0);
                }
                let k = grid.wavevector(m);
                -(0..n).map(|a| flux[a][m] * Complex64::new(0.0, k[a])).sum::<Complex64>()
            })
            .collect();
        out
    };
    let h1 = neg_div_flux(&plus);
    let h3 = neg_div_flux(&minus);
    let h2: Vec<Vec<Complex64>> = h2.iter().map(|c| to_spec(c)).collect();
    let h4: Vec<Vec<Complex64>> = h4.iter().map(|c| to_spec(c)).collect();
    Ok(NonlinearTerms {
        h1: SpectralField::from_spectral(&grid, vec![h1])?,
        h2: SpectralField::from_spectral(&grid, h2)?,
        h3: SpectralField::from_spectral(&grid, vec![h3])?,
        h4: SpectralField::from_spectral(&grid, h4)?,
    })
}
