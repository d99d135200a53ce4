//! Empirical ratios `LHS / RHS` for Bernstein and product estimates in Besov spaces.

use super::{BesovSpec, DyadicFilterBank};
use crate::error::{invalid, Result};
use crate::grid::SpectralField;

/// A named estimate together with its exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InequalityCase {
    /// `‖∇Δ̇_q f‖_p ≤ C 2^q ‖Δ̇_q f‖_p`.
    BernsteinUp { q: i32, p: f64 },
    /// `‖Δ̇_q f‖_p ≤ C 2^{-q} ‖∇Δ̇_q f‖_p`.
    BernsteinDown { q: i32, p: f64 },
    /// `‖fg‖_{Ḃ^s_{p,r}} ≲ ‖f‖_∞‖g‖_{Ḃ^s_{p,r}} + ‖g‖_∞‖f‖_{Ḃ^s_{p,r}}` for `s > 0`.
    ProductPositiveS { s: f64, p: f64, r: f64 },
    /// `‖fg‖_{Ḃ^{s1+s2−N/p}_{p,r}} ≲ ‖f‖_{Ḃ^{s1}_{p,r}}‖g‖_{Ḃ^{s2}_{p,∞}}`.
    ProductSumIndex { s1: f64, s2: f64, p: f64, r: f64 },
    /// `‖T_f g‖_{Ḃ^{s−1+N/2−N/p}_{2,1}} ≲ ‖f‖_{Ḃ^{N/p−1}_{p,1}}‖g‖_{Ḃ^s_{p,1}}`.
    Paraproduct { s: f64, p: f64 },
    /// Same shape for the remainder `R(f, g)`.
    Remainder { s: f64, p: f64 },
    /// `‖u v^h‖^ℓ_{Ḃ^{−s0}_{2,∞}} ≲ (‖u‖_{Ḃ^σ_{p,1}} + ‖Ṡ_{j0+n0}u‖_{L^{p*}})‖v^h‖_{Ḃ^{−σ}_{p,∞}}`.
    MixedLowHigh { sigma: f64, p: f64, n0: i32 },
}

impl InequalityCase {
    pub fn name(&self) -> &'static str {
        match self {
            InequalityCase::BernsteinUp { .. } => "bernstein-up",
            InequalityCase::BernsteinDown { .. } => "bernstein-down",
            InequalityCase::ProductPositiveS { .. } => "product-positive-s",
            InequalityCase::ProductSumIndex { .. } => "product-sum-index",
            InequalityCase::Paraproduct { .. } => "paraproduct",
            InequalityCase::Remainder { .. } => "remainder",
            InequalityCase::MixedLowHigh { .. } => "mixed-low-high",
        }
    }

    /// Rejects exponent combinations outside the estimate's stated range.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let n = dim as f64;
        let p_ok = |p: f64| p >= 1.0;
        match *self {
            InequalityCase::BernsteinUp { p, .. } | InequalityCase::BernsteinDown { p, .. } => {
                if !p_ok(p) {
                    return invalid(format!("p must lie in [1, inf], got {p}"));
                }
            }
            InequalityCase::ProductPositiveS { s, p, r } => {
                BesovSpec::new(s, p, r)?;
                if !(s > 0.0) {
                    return invalid(format!("product-positive-s requires s > 0, got {s}"));
                }
            }
            InequalityCase::ProductSumIndex { s1, s2, p, r } => {
                BesovSpec::new(s1, p, r)?;
                BesovSpec::new(s2, p, r)?;
                if !(s1 < n / p && s2 < n / p && s1 + s2 > 0.0) {
                    return invalid(format!(
                        "product-sum-index requires s1, s2 < N/p and s1 + s2 > 0 (s1 = {s1}, s2 = {s2}, N/p = {})",
                        n / p
                    ));
                }
            }
            InequalityCase::Paraproduct { s, p } => {
                if dim < 2 {
                    return invalid("paraproduct estimate requires N >= 2");
                }
                let upper = if dim == 2 { 4.0 } else { 4.0f64.min(2.0 * n / (n - 2.0)) };
                if !(s.is_finite() && p >= 2.0 && p <= upper) {
                    return invalid(format!("paraproduct estimate requires 2 <= p <= min(4, 2N/(N-2)), got p = {p}"));
                }
            }
            InequalityCase::Remainder { s, p } => {
                if dim < 2 {
                    return invalid("remainder estimate requires N >= 2");
                }
                if !(1.0..=4.0).contains(&p) {
                    return invalid(format!("remainder estimate requires 1 <= p <= 4, got {p}"));
                }
                let conj = if p == 1.0 { f64::INFINITY } else { p / (p - 1.0) };
                let bound = 1.0 - (n / p).min(n / conj);
                if !(s > bound) {
                    return invalid(format!("remainder estimate requires s > 1 - min(N/p, N/p') = {bound}, got {s}"));
                }
            }
            InequalityCase::MixedLowHigh { sigma, p, .. } => {
                if !((2.0..=4.0).contains(&p) && sigma > 0.0) {
                    return invalid(format!(
                        "mixed low-high estimate requires 2 <= p <= 4 and sigma > 0 (p = {p}, sigma = {sigma})"
                    ));
                }
            }
        }
        Ok(())
    }
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

/// Observed `LHS / RHS` of `case` for the trial pair `(f, g)`; `g` is unused by the
/// Bernstein cases. A vanishing left side reports `0`.
pub fn check_inequality(
    case: &InequalityCase,
    f: &SpectralField,
    g: &SpectralField,
    bank: &DyadicFilterBank,
) -> Result<f64> {
    let dim = bank.grid().dim();
    case.validate(dim)?;
    if f.components() != 1 || g.components() != 1 {
        return invalid("inequality checks expect scalar trial fields");
    }
    let n = dim as f64;
    let besov = |h: &SpectralField, s: f64, p: f64, r: f64| bank.besov_norm(h, &BesovSpec { s, p, r });
    match *case {
        InequalityCase::BernsteinUp { q, p } | InequalityCase::BernsteinDown { q, p } => {
            let fq = bank.dyadic_block(f, q)?;
            let grad = fq.gradient()?.lp_norm(p);
            let base = fq.lp_norm(p);
            let scale = (q as f64).exp2();
            Ok(match case {
                InequalityCase::BernsteinUp { .. } => ratio(grad, scale * base),
                _ => ratio(base, grad / scale),
            })
        }
        InequalityCase::ProductPositiveS { s, p, r } => {
            let lhs = besov(&f.product(g)?, s, p, r)?;
            let rhs = f.lp_norm(f64::INFINITY) * besov(g, s, p, r)? + g.lp_norm(f64::INFINITY) * besov(f, s, p, r)?;
            Ok(ratio(lhs, rhs))
        }
        InequalityCase::ProductSumIndex { s1, s2, p, r } => {
            let lhs = besov(&f.product(g)?, s1 + s2 - n / p, p, r)?;
            let rhs = besov(f, s1, p, r)? * besov(g, s2, p, f64::INFINITY)?;
            Ok(ratio(lhs, rhs))
        }
        InequalityCase::Paraproduct { s, p } | InequalityCase::Remainder { s, p } => {
            let parts = bank.bony_decompose(f, g)?;
            let part = match case {
                InequalityCase::Paraproduct { .. } => &parts.paraproduct_fg,
                _ => &parts.remainder,
            };
            let lhs = besov(part, s - 1.0 + n / 2.0 - n / p, 2.0, 1.0)?;
            let rhs = besov(f, n / p - 1.0, p, 1.0)? * besov(g, s, p, 1.0)?;
            Ok(ratio(lhs, rhs))
        }
        InequalityCase::MixedLowHigh { sigma, p, n0 } => {
            let s0 = 2.0 * n / p - n / 2.0;
            let (_, vh) = bank.split_low_high(g)?;
            let prod = f.product(&vh)?;
            let lhs = bank.besov_norm_low(&prod, &BesovSpec { s: -s0, p: 2.0, r: f64::INFINITY })?;
            let p_star = if p == 2.0 { f64::INFINITY } else { 1.0 / (0.5 - 1.0 / p) };
            let low_u = bank.low_sum(f, bank.j0() + n0)?;
            let rhs = (besov(f, sigma, p, 1.0)? + low_u.lp_norm(p_star)) * besov(&vh, -sigma, p, f64::INFINITY)?;
            Ok(ratio(lhs, rhs))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::lp_besov::build_filter_bank;
    use std::f64::consts::PI;

    #[test]
    fn zero_field_reports_zero() {
        let g = Grid::new(2, 32, 2.0 * PI).unwrap();
        let bank = build_filter_bank(&g, 0).unwrap();
        let z = SpectralField::zeros(&g, 1);
        let f = SpectralField::from_fn(&g, |x| x[0].sin());
        for case in [
            InequalityCase::BernsteinUp { q: 1, p: 2.0 },
            InequalityCase::ProductPositiveS { s: 1.0, p: 2.0, r: 1.0 },
            InequalityCase::Paraproduct { s: 1.0, p: 2.0 },
            InequalityCase::Remainder { s: 1.0, p: 2.0 },
            InequalityCase::MixedLowHigh { sigma: 0.5, p: 2.0, n0: 4 },
        ] {
            assert_eq!(check_inequality(&case, &z, &f, &bank).unwrap(), 0.0, "{}", case.name());
        }
    }

    #[test]
    fn stated_ranges_are_enforced() {
        assert!(InequalityCase::ProductPositiveS { s: 0.0, p: 2.0, r: 1.0 }.validate(2).is_err());
        assert!(InequalityCase::ProductSumIndex { s1: 1.5, s2: 0.2, p: 2.0, r: 1.0 }.validate(2).is_err());
        assert!(InequalityCase::ProductSumIndex { s1: -0.5, s2: 0.2, p: 2.0, r: 1.0 }.validate(2).is_err());
        assert!(InequalityCase::ProductSumIndex { s1: 0.5, s2: 0.2, p: 2.0, r: 1.0 }.validate(2).is_ok());
        assert!(InequalityCase::Paraproduct { s: 0.0, p: 5.0 }.validate(2).is_err());
        assert!(InequalityCase::Paraproduct { s: 0.0, p: 4.5 }.validate(3).is_err());
        assert!(InequalityCase::Paraproduct { s: 0.0, p: 2.0 }.validate(1).is_err());
        assert!(InequalityCase::Remainder { s: 0.0, p: 2.0 }.validate(2).is_err());
        assert!(InequalityCase::Remainder { s: 0.5, p: 2.0 }.validate(2).is_ok());
        assert!(InequalityCase::MixedLowHigh { sigma: 0.0, p: 2.0, n0: 4 }.validate(2).is_err());
    }
}
