//! Pressure-equilibrium closure of the two-fluid model.
//!
//! Given the phase masses `R± = α±ρ±` and barotropic laws `P±(ρ) = A±ρ^γ±`, the
//! common-pressure constraint `P⁺(ρ⁺) = P⁻(ρ⁻)` together with `α⁺ + α⁻ = 1`
//! determines every pointwise thermodynamic quantity. The density `ρ⁺` is the
//! unique root in `(R⁺, ∞)` of
//!
//! ```text
//! φ(ρ⁺) = P⁺(ρ⁺) − P⁻(R⁻ρ⁺ / (ρ⁺ − R⁺)),
//! φ'(ρ⁺) = s⁺² + s⁻² R⁻R⁺ / (ρ⁺ − R⁺)²  > 0.
//! ```

use crate::error::{invalid, Error, Result};

/// Capillary coefficients σ±, fixed to one.
pub const CAPILLARITY: f64 = 1.0;

/// Default relative tolerance of the root solve.
pub const DEFAULT_TOL: f64 = 1e-12;

const BRACKET_DELTA: f64 = 1e-6;
const BISECTION_WIDTH: f64 = 1e-3;
const MAX_EXPANSIONS: usize = 200;
const MAX_NEWTON: usize = 100;

/// Barotropic pressure law `P(ρ) = amplitude · ρ^gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureLaw {
    pub gamma: f64,
    pub amplitude: f64,
}

impl Default for PressureLaw {
    fn default() -> Self {
        PressureLaw { gamma: 2.0, amplitude: 1.0 }
    }
}

impl PressureLaw {
    pub fn new(gamma: f64, amplitude: f64) -> Result<Self> {
        let law = PressureLaw { gamma, amplitude };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 1.0) {
            return invalid(format!("adiabatic exponent must exceed 1, got {}", self.gamma));
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return invalid(format!("pressure amplitude must be positive, got {}", self.amplitude));
        }
        Ok(())
    }

    #[inline]
    pub fn pressure(&self, rho: f64) -> f64 {
        self.amplitude * rho.powf(self.gamma)
    }

    /// Squared sound speed `dP/dρ = γ P / ρ`.
    #[inline]
    pub fn sound_speed2(&self, rho: f64) -> f64 {
        self.gamma * self.amplitude * rho.powf(self.gamma - 1.0)
    }
}

/// Shear and bulk viscosities of both phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viscosities {
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

impl Default for Viscosities {
    fn default() -> Self {
        Viscosities { mu_plus: 1.0, mu_minus: 1.0, lambda_plus: 0.0, lambda_minus: 0.0 }
    }
}

impl Viscosities {
    pub fn validate(&self) -> Result<()> {
        for (name, mu, lambda) in [("+", self.mu_plus, self.lambda_plus), ("-", self.mu_minus, self.lambda_minus)] {
            if !(mu.is_finite() && mu > 0.0) {
                return invalid(format!("shear viscosity mu{name} must be positive, got {mu}"));
            }
            if !(lambda.is_finite() && lambda + 2.0 * mu > 0.0) {
                return invalid(format!(
                    "viscosities of phase {name} violate lambda + 2 mu > 0 (lambda = {lambda}, mu = {mu})"
                ));
            }
        }
        Ok(())
    }
}

/// Pointwise solution of the closure for given masses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureState {
    pub r_plus: f64,
    pub r_minus: f64,
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub s2_plus: f64,
    pub s2_minus: f64,
    pub pressure: f64,
    pub c2: f64,
}

/// Constants of the linearized system at `R± = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumCoefficients {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
    pub nu1_plus: f64,
    pub nu1_minus: f64,
    pub nu2_plus: f64,
    pub nu2_minus: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// Closure state at `(R⁺, R⁻) = (1, 1)`.
    pub reference: ClosureState,
}

/// Values of the nonlinear coefficient functions at one `(c⁺, c⁻)`.
///
/// `g_tilde` is shared by both momentum equations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoeffValues {
    pub g_plus: f64,
    pub g_minus: f64,
    pub g_tilde: f64,
    pub h_plus: f64,
    pub h_minus: f64,
    pub k_plus: f64,
    pub k_minus: f64,
    pub l_plus: f64,
    pub l_minus: f64,
}

/// The closure residual `φ` and its derivative.
#[derive(Debug, Clone, Copy)]
struct Residual {
    r_plus: f64,
    r_minus: f64,
    law_plus: PressureLaw,
    law_minus: PressureLaw,
}

impl Residual {
    #[inline]
    fn rho_minus(&self, rho_plus: f64) -> f64 {
        self.r_minus * rho_plus / (rho_plus - self.r_plus)
    }

    #[inline]
    fn phi(&self, rho_plus: f64) -> f64 {
        self.law_plus.pressure(rho_plus) - self.law_minus.pressure(self.rho_minus(rho_plus))
    }

    #[inline]
    fn dphi(&self, rho_plus: f64) -> f64 {
        let gap = rho_plus - self.r_plus;
        self.law_plus.sound_speed2(rho_plus)
            + self.law_minus.sound_speed2(self.rho_minus(rho_plus)) * self.r_minus * self.r_plus / (gap * gap)
    }

    fn converged(&self, rho_plus: f64, f: f64, tol: f64) -> bool {
        f.abs() <= tol * self.law_plus.pressure(rho_plus).max(1.0)
    }

    /// Safeguarded Newton inside `[lo, hi]`, where `φ(lo) < 0 < φ(hi)`.
    ///
    /// Keeps iterating past the tolerance while the residual still shrinks, so the
    /// returned root is as tight as the floating-point evaluation of `φ` allows.
    fn polish(&self, mut lo: f64, mut hi: f64, mut x: f64, tol: f64) -> Result<f64> {
        let mut best = (x, f64::INFINITY);
        for _ in 0..MAX_NEWTON {
            let f = self.phi(x);
            if f.abs() < best.1 {
                best = (x, f.abs());
            } else if self.converged(best.0, best.1, tol) {
                return Ok(best.0);
            }
            if f == 0.0 {
                return Ok(x);
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let mut next = x - f / self.dphi(x);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
                let fx = self.phi(next);
                if fx.abs() < best.1 {
                    best = (next, fx.abs());
                }
                break;
            }
            x = next;
        }
        if self.converged(best.0, best.1, tol) {
            Ok(best.0)
        } else {
            Err(Error::NoConvergence(format!(
                "closure root polish stalled at rho+ = {} with |phi| = {:e} (bracket [{lo}, {hi}])",
                best.0, best.1
            )))
        }
    }

    /// Lower end `R⁺(1+δ)` with `φ < 0`.
    fn lower_bracket(&self) -> Result<f64> {
        let mut delta = BRACKET_DELTA;
        for _ in 0..8 {
            let lo = self.r_plus * (1.0 + delta);
            if lo > self.r_plus && self.phi(lo) < 0.0 {
                return Ok(lo);
            }
            delta *= 1e-2;
        }
        Err(Error::NoConvergence(format!("could not find a negative residual above R+ = {}", self.r_plus)))
    }

    fn upper_bracket(&self, start: f64) -> Result<f64> {
        let mut hi = start;
        for _ in 0..MAX_EXPANSIONS {
            let f = self.phi(hi);
            if f > 0.0 {
                return Ok(hi);
            }
            if !f.is_finite() {
                break;
            }
            hi = self.r_plus + 2.0 * (hi - self.r_plus);
        }
        Err(Error::NoConvergence(format!("failed to bracket closure root: last bracket [{}, {hi}]", self.r_plus)))
    }
}

fn validate_inputs(r_plus: f64, r_minus: f64, law_plus: &PressureLaw, law_minus: &PressureLaw, tol: f64) -> Result<()> {
    if !(r_plus.is_finite() && r_plus > 0.0 && r_minus.is_finite() && r_minus > 0.0) {
        return invalid(format!("masses must be positive, got R+ = {r_plus}, R- = {r_minus}"));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return invalid(format!("tolerance must be positive, got {tol}"));
    }
    law_plus.validate()?;
    law_minus.validate()
}

/// Unique root `ρ⁺ ∈ (R⁺, ∞)` of the closure residual.
///
/// Brackets by geometric expansion from `R⁺(1+10⁻⁶)`, bisects down to a relative
/// width of `10⁻³` and polishes with safeguarded Newton.
pub fn solve_rho_plus(
    r_plus: f64,
    r_minus: f64,
    law_plus: &PressureLaw,
    law_minus: &PressureLaw,
    tol: f64,
) -> Result<f64> {
    validate_inputs(r_plus, r_minus, law_plus, law_minus, tol)?;
    let res = Residual { r_plus, r_minus, law_plus: *law_plus, law_minus: *law_minus };
    let mut lo = res.lower_bracket()?;
    let mut hi = res.upper_bracket(2.0 * r_plus)?;
    while hi - lo > BISECTION_WIDTH * lo {
        let mid = 0.5 * (lo + hi);
        if res.phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    res.polish(lo, hi, 0.5 * (lo + hi), tol)
}

/// Same root, started from a nearby guess (used for pointwise field evaluation).
pub fn solve_rho_plus_near(
    r_plus: f64,
    r_minus: f64,
    law_plus: &PressureLaw,
    law_minus: &PressureLaw,
    guess: f64,
    tol: f64,
) -> Result<f64> {
    if !(guess.is_finite() && guess > r_plus) {
        return solve_rho_plus(r_plus, r_minus, law_plus, law_minus, tol);
    }
    validate_inputs(r_plus, r_minus, law_plus, law_minus, tol)?;
    let res = Residual { r_plus, r_minus, law_plus: *law_plus, law_minus: *law_minus };
    let f = res.phi(guess);
    let (lo, hi) = if f < 0.0 {
        (guess, res.upper_bracket(guess)?)
    } else {
        let mut lo = r_plus + 0.5 * (guess - r_plus);
        let mut found = false;
        for _ in 0..60 {
            if res.phi(lo) < 0.0 {
                found = true;
                break;
            }
            lo = r_plus + 0.5 * (lo - r_plus);
        }
        if !found {
            return solve_rho_plus(r_plus, r_minus, law_plus, law_minus, tol);
        }
        (lo, guess)
    };
    res.polish(lo, hi, guess, tol)
}

/// Closure residual `φ(ρ⁺)` for the given masses.
pub fn closure_residual(
    r_plus: f64,
    r_minus: f64,
    law_plus: &PressureLaw,
    law_minus: &PressureLaw,
    rho_plus: f64,
) -> f64 {
    Residual { r_plus, r_minus, law_plus: *law_plus, law_minus: *law_minus }.phi(rho_plus)
}

fn assemble_state(
    r_plus: f64,
    r_minus: f64,
    law_plus: &PressureLaw,
    law_minus: &PressureLaw,
    rho_plus: f64,
) -> ClosureState {
    let rho_minus = r_minus * rho_plus / (rho_plus - r_plus);
    let alpha_plus = r_plus / rho_plus;
    let alpha_minus = 1.0 - alpha_plus;
    let pressure = law_plus.pressure(rho_plus);
    let s2_plus = law_plus.gamma * pressure / rho_plus;
    let s2_minus = law_minus.gamma * law_minus.pressure(rho_minus) / rho_minus;
    let c2 = s2_minus * s2_plus / (alpha_minus * rho_plus * s2_plus + alpha_plus * rho_minus * s2_minus);
    ClosureState { r_plus, r_minus, rho_plus, rho_minus, alpha_plus, alpha_minus, s2_plus, s2_minus, pressure, c2 }
}

/// Full closure state for the masses `(R⁺, R⁻)`.
pub fn derived_state(
    r_plus: f64,
    r_minus: f64,
    law_plus: &PressureLaw,
    law_minus: &PressureLaw,
    tol: f64,
) -> Result<ClosureState> {
    let rho_plus = solve_rho_plus(r_plus, r_minus, law_plus, law_minus, tol)?;
    Ok(assemble_state(r_plus, r_minus, law_plus, law_minus, rho_plus))
}

/// `β₁..β₄`, `ν₁±`, `ν₂±`, `ν±` evaluated at the `(1, 1)` state.
pub fn equilibrium_coefficients(
    law_plus: &PressureLaw,
    law_minus: &PressureLaw,
    visc: &Viscosities,
) -> Result<EquilibriumCoefficients> {
    visc.validate()?;
    let st = derived_state(1.0, 1.0, law_plus, law_minus, DEFAULT_TOL)?;
    let nu1_plus = visc.mu_plus / st.rho_plus;
    let nu1_minus = visc.mu_minus / st.rho_minus;
    let nu2_plus = (visc.mu_plus + visc.lambda_plus) / st.rho_plus;
    let nu2_minus = (visc.mu_minus + visc.lambda_minus) / st.rho_minus;
    Ok(EquilibriumCoefficients {
        beta1: st.c2 * st.rho_minus / st.rho_plus,
        beta2: st.c2,
        beta3: st.c2,
        beta4: st.c2 * st.rho_plus / st.rho_minus,
        nu1_plus,
        nu1_minus,
        nu2_plus,
        nu2_minus,
        nu_plus: nu1_plus + nu2_plus,
        nu_minus: nu1_minus + nu2_minus,
        mu_plus: visc.mu_plus,
        mu_minus: visc.mu_minus,
        lambda_plus: visc.lambda_plus,
        lambda_minus: visc.lambda_minus,
        reference: st,
    })
}

/// Evaluates the coefficient functions `g±, g̃, h±, k±, l±` repeatedly against a
/// fixed `(1, 1)` reference state.
#[derive(Debug, Clone, Copy)]
pub struct CoeffEvaluator {
    pub law_plus: PressureLaw,
    pub law_minus: PressureLaw,
    pub tol: f64,
    pub reference: ClosureState,
}

impl CoeffEvaluator {
    pub fn new(law_plus: &PressureLaw, law_minus: &PressureLaw, tol: f64) -> Result<Self> {
        let reference = derived_state(1.0, 1.0, law_plus, law_minus, tol)?;
        Ok(CoeffEvaluator { law_plus: *law_plus, law_minus: *law_minus, tol, reference })
    }

    /// Values at `(c⁺, c⁻)`; `guess` seeds the root solve when it lies above `c⁺ + 1`.
    pub fn eval_with_guess(
        &self,
        c_plus: f64,
        c_minus: f64,
        guess: Option<f64>,
    ) -> Result<(CoeffValues, ClosureState)> {
        if !(c_plus > -1.0 && c_minus > -1.0) {
            return invalid(format!("perturbations must satisfy c + 1 > 0, got c+ = {c_plus}, c- = {c_minus}"));
        }
        let r_plus = c_plus + 1.0;
        let r_minus = c_minus + 1.0;
        let rho_plus = match guess {
            Some(g) => solve_rho_plus_near(r_plus, r_minus, &self.law_plus, &self.law_minus, g, self.tol)?,
            None => solve_rho_plus(r_plus, r_minus, &self.law_plus, &self.law_minus, self.tol)?,
        };
        let st = assemble_state(r_plus, r_minus, &self.law_plus, &self.law_minus, rho_plus);
        let re = &self.reference;
        let values = CoeffValues {
            g_plus: st.c2 * st.rho_minus / st.rho_plus - re.c2 * re.rho_minus / re.rho_plus,
            g_minus: st.c2 * st.rho_plus / st.rho_minus - re.c2 * re.rho_plus / re.rho_minus,
            g_tilde: st.c2 - re.c2,
            h_plus: st.c2 * st.alpha_minus / (r_plus * st.s2_minus),
            h_minus: -st.c2 / (st.rho_minus * st.s2_minus),
            // ∇α⁺/R⁺ carries the factor 1/R⁺ in both terms, so k⁺ = -C²/(ρ⁺ s⁺²).
            k_plus: -st.c2 / (st.s2_plus * st.rho_plus),
            k_minus: st.alpha_plus * st.c2 / (r_minus * st.s2_plus),
            l_plus: 1.0 / st.rho_plus - 1.0 / re.rho_plus,
            l_minus: 1.0 / st.rho_minus - 1.0 / re.rho_minus,
        };
        Ok((values, st))
    }

    pub fn eval(&self, c_plus: f64, c_minus: f64) -> Result<CoeffValues> {
        self.eval_with_guess(c_plus, c_minus, None).map(|(v, _)| v)
    }
}

/// Coefficient functions at `(c⁺, c⁻)` relative to the `(1, 1)` state.
pub fn coeff_functions(
    c_plus: f64,
    c_minus: f64,
    law_plus: &PressureLaw,
    law_minus: &PressureLaw,
    tol: f64,
) -> Result<CoeffValues> {
    if !(c_plus > -1.0 && c_minus > -1.0) {
        return invalid(format!("perturbations must satisfy c + 1 > 0, got c+ = {c_plus}, c- = {c_minus}"));
    }
    CoeffEvaluator::new(law_plus, law_minus, tol)?.eval(c_plus, c_minus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn law(gamma: f64) -> PressureLaw {
        PressureLaw::new(gamma, 1.0).unwrap()
    }

    #[test]
    fn symmetric_laws_give_total_mass() {
        let rho = solve_rho_plus(1.0, 1.0, &law(2.0), &law(2.0), DEFAULT_TOL).unwrap();
        assert_relative_eq!(rho, 2.0, max_relative = 1e-12);
        let rho = solve_rho_plus(0.5, 0.5, &law(1.4), &law(1.4), DEFAULT_TOL).unwrap();
        assert_relative_eq!(rho, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn symmetric_state_values() {
        let st = derived_state(1.0, 1.0, &law(2.0), &law(2.0), DEFAULT_TOL).unwrap();
        assert_relative_eq!(st.rho_plus, 2.0, max_relative = 1e-12);
        assert_relative_eq!(st.rho_minus, 2.0, max_relative = 1e-12);
        assert_relative_eq!(st.alpha_plus, 0.5, max_relative = 1e-12);
        assert_relative_eq!(st.pressure, 4.0, max_relative = 1e-12);
        assert_relative_eq!(st.s2_plus, 4.0, max_relative = 1e-12);
        assert_relative_eq!(st.s2_minus, 4.0, max_relative = 1e-12);
        assert_relative_eq!(st.c2, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(solve_rho_plus(0.0, 1.0, &law(2.0), &law(2.0), 1e-12), Err(Error::InvalidInput(_))));
        assert!(matches!(solve_rho_plus(1.0, -1.0, &law(2.0), &law(2.0), 1e-12), Err(Error::InvalidInput(_))));
        assert!(matches!(solve_rho_plus(1.0, 1.0, &law(2.0), &law(2.0), 0.0), Err(Error::InvalidInput(_))));
        assert!(PressureLaw::new(1.0, 1.0).is_err());
        assert!(PressureLaw::new(2.0, 0.0).is_err());
        assert!(coeff_functions(-1.0, 0.0, &law(2.0), &law(2.0), 1e-12).is_err());
    }

    #[test]
    fn equilibrium_coefficients_symmetric() {
        let c = equilibrium_coefficients(&law(2.0), &law(2.0), &Viscosities::default()).unwrap();
        for b in [c.beta1, c.beta2, c.beta3, c.beta4] {
            assert_relative_eq!(b, 2.0, max_relative = 1e-12);
        }
        assert_relative_eq!(c.nu1_plus, 0.5, max_relative = 1e-12);
        assert_relative_eq!(c.nu2_minus, 0.5, max_relative = 1e-12);
        assert_relative_eq!(c.nu_plus, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn invalid_viscosities_rejected() {
        let v = Viscosities { mu_plus: 1.0, mu_minus: 1.0, lambda_plus: -2.5, lambda_minus: 0.0 };
        assert!(equilibrium_coefficients(&law(2.0), &law(2.0), &v).is_err());
        let v = Viscosities { mu_plus: 0.0, ..Viscosities::default() };
        assert!(equilibrium_coefficients(&law(2.0), &law(2.0), &v).is_err());
    }

    #[test]
    fn coefficient_functions_at_equilibrium() {
        let v = coeff_functions(0.0, 0.0, &law(2.0), &law(2.0), DEFAULT_TOL).unwrap();
        assert_eq!(v.g_plus, 0.0);
        assert_eq!(v.g_minus, 0.0);
        assert_eq!(v.g_tilde, 0.0);
        assert_eq!(v.l_plus, 0.0);
        assert_eq!(v.l_minus, 0.0);
        assert_relative_eq!(v.h_plus, 0.25, max_relative = 1e-12);
        assert_relative_eq!(v.k_minus, 0.25, max_relative = 1e-12);
        assert_relative_eq!(v.h_minus, -0.25, max_relative = 1e-12);
        assert_relative_eq!(v.k_plus, -0.25, max_relative = 1e-12);
    }

    #[test]
    fn near_guess_matches_cold_solve() {
        let (lp, lm) = (law(2.0), law(1.5));
        let cold = solve_rho_plus(1.1, 0.9, &lp, &lm, DEFAULT_TOL).unwrap();
        for guess in [1.2, cold * 0.9, cold, cold * 1.5, 50.0] {
            let warm = solve_rho_plus_near(1.1, 0.9, &lp, &lm, guess, DEFAULT_TOL).unwrap();
            assert_relative_eq!(warm, cold, max_relative = 1e-13);
        }
    }
}
