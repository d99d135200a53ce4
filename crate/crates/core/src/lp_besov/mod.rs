//! Homogeneous Littlewood-Paley analysis on a periodic grid.
//!
//! Blocks use the radial multiplier `φ(ξ) = χ(ξ/2) − χ(ξ)`, where `χ` equals one on
//! `|ξ| ≤ 3/4`, vanishes on `|ξ| ≥ 4/3` and is joined by a C∞ smooth step built from
//! `exp(−1/x)`. The zero mode is excluded from every homogeneous norm.

mod inequality;

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{dealias, forward_real, inverse_real, lp_norm_components, Grid, SpectralField};

pub use inequality::{check_inequality, InequalityCase};

const CHI_INNER: f64 = 0.75;
const CHI_OUTER: f64 = 4.0 / 3.0;

fn ramp(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Radial cutoff: 1 for `r ≤ 3/4`, 0 for `r ≥ 4/3`, smooth and monotone between.
pub fn chi(r: f64) -> f64 {
    if r <= CHI_INNER {
        return 1.0;
    }
    if r >= CHI_OUTER {
        return 0.0;
    }
    let x = (r - CHI_INNER) / (CHI_OUTER - CHI_INNER);
    let a = ramp(1.0 - x);
    a / (a + ramp(x))
}

/// Dyadic annulus multiplier `φ(r) = χ(r/2) − χ(r)`, supported in `[3/4, 8/3]`.
pub fn phi(r: f64) -> f64 {
    chi(0.5 * r) - chi(r)
}

/// `φ(2^{-j} r)`.
#[inline]
pub fn phi_j(j: i32, r: f64) -> f64 {
    phi(r * (-j as f64).exp2())
}

/// Regularity, integrability and summation exponents of a Besov norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovSpec {
    pub s: f64,
    pub p: f64,
    pub r: f64,
}

impl BesovSpec {
    pub fn new(s: f64, p: f64, r: f64) -> Result<Self> {
        let spec = BesovSpec { s, p, r };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.s.is_finite() {
            return invalid(format!("regularity index must be finite, got {}", self.s));
        }
        for (name, v) in [("p", self.p), ("r", self.r)] {
            if !(v >= 1.0) {
                return invalid(format!("exponent {name} must lie in [1, inf], got {v}"));
            }
        }
        Ok(())
    }
}

/// `ℓ^r` norm of a finite sequence (`r = ∞` is the max).
pub fn lr_sum(values: impl IntoIterator<Item = f64>, r: f64) -> f64 {
    if r.is_infinite() {
        values.into_iter().fold(0.0, f64::max)
    } else if r == 1.0 {
        values.into_iter().sum()
    } else {
        values.into_iter().map(|v| v.abs().powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// Radial partition of unity tabulated on one grid.
#[derive(Debug)]
pub struct DyadicFilterBank {
    grid: Arc<Grid>,
    j_min: i32,
    j_max: i32,
    j0: i32,
    tables: Vec<Vec<f64>>,
}

/// Shell range covering every nonzero frequency of the grid.
pub fn resolved_range(grid: &Grid) -> (i32, i32) {
    let (kmin, kmax) = grid.frequency_range();
    let j_min = (kmin * CHI_INNER).log2().floor() as i32;
    let j_max = (kmax / 1.5).log2().ceil() as i32;
    (j_min, j_max)
}

/// Builds the multiplier tables; `j0` must lie inside the resolved range.
pub fn build_filter_bank(grid: &Arc<Grid>, j0: i32) -> Result<DyadicFilterBank> {
    let (j_min, j_max) = resolved_range(grid);
    if j_max - j_min + 1 < 3 {
        return invalid(format!("grid resolves only shells {j_min}..={j_max}; at least three are required"));
    }
    if j0 < j_min || j0 > j_max {
        return invalid(format!("threshold j0 = {j0} outside the resolved range {j_min}..={j_max}"));
    }
    let tables = (j_min..=j_max)
        .into_par_iter()
        .map(|j| grid.kmags().iter().map(|&k| if k == 0.0 { 0.0 } else { phi_j(j, k) }).collect())
        .collect();
    Ok(DyadicFilterBank { grid: grid.clone(), j_min, j_max, j0, tables })
}

impl DyadicFilterBank {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn j0(&self) -> i32 {
        self.j0
    }

    pub fn shells(&self) -> std::ops::RangeInclusive<i32> {
        self.j_min..=self.j_max
    }

    pub fn shell_count(&self) -> usize {
        (self.j_max - self.j_min + 1) as usize
    }

    /// Multiplier values `φ(2^{-j}|ξ|)` on the grid.
    pub fn table(&self, j: i32) -> Result<&[f64]> {
        if j < self.j_min || j > self.j_max {
            return invalid(format!("shell {j} outside {}..={}", self.j_min, self.j_max));
        }
        Ok(&self.tables[(j - self.j_min) as usize])
    }

    fn check_grid(&self, f: &SpectralField) -> Result<()> {
        if **f.grid() != *self.grid {
            return invalid("field and filter bank live on different grids");
        }
        Ok(())
    }

    /// `Δ̇_j f`.
    pub fn dyadic_block(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_grid(f)?;
        let t = self.table(j)?;
        Ok(f.apply_multiplier(|i| t[i]))
    }

    /// `Ṡ_j f = Σ_{k ≤ j−1} Δ̇_k f` over the resolved shells.
    pub fn low_sum(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        self.check_grid(f)?;
        let w = self.sum_weights(self.j_min, j - 1);
        Ok(f.apply_multiplier(|i| w[i]))
    }

    fn sum_weights(&self, lo: i32, hi: i32) -> Vec<f64> {
        let mut w = vec![0.0; self.grid.len()];
        for j in lo.max(self.j_min)..=hi.min(self.j_max) {
            let t = &self.tables[(j - self.j_min) as usize];
            w.iter_mut().zip(t).for_each(|(a, b)| *a += b);
        }
        w
    }

    /// `L^p` norms of every block, indexed from `j_min`.
    pub fn block_norms(&self, f: &SpectralField, p: f64) -> Result<Vec<f64>> {
        self.check_grid(f)?;
        let spec = f.spectral();
        let g = &self.grid;
        Ok(self
            .tables
            .par_iter()
            .map(|t| {
                if p == 2.0 {
                    let s: f64 =
                        spec.iter().map(|c| c.iter().zip(t).map(|(z, w)| z.norm_sqr() * w * w).sum::<f64>()).sum();
                    return (s * g.cell_volume() / g.len() as f64).sqrt();
                }
                let comps: Vec<Vec<f64>> = spec
                    .iter()
                    .map(|c| {
                        let filtered: Vec<Complex64> = c.iter().zip(t).map(|(z, w)| z * w).collect();
                        inverse_real(g, &filtered)
                    })
                    .collect();
                lp_norm_components(g, &comps, p)
            })
            .collect())
    }

    /// `‖f‖_{Ḃ^s_{p,r}}` over the resolved shells.
    pub fn besov_norm(&self, f: &SpectralField, spec: &BesovSpec) -> Result<f64> {
        spec.validate()?;
        let norms = self.block_norms(f, spec.p)?;
        Ok(self.besov_from_blocks(&norms, spec.s, spec.r, self.j_min, self.j_max))
    }

    /// Low part `Σ_{j ≤ j0}` of the Besov sum.
    pub fn besov_norm_low(&self, f: &SpectralField, spec: &BesovSpec) -> Result<f64> {
        spec.validate()?;
        let norms = self.block_norms(f, spec.p)?;
        Ok(self.besov_from_blocks(&norms, spec.s, spec.r, self.j_min, self.j0))
    }

    /// High part `Σ_{j ≥ j0}` of the Besov sum.
    pub fn besov_norm_high(&self, f: &SpectralField, spec: &BesovSpec) -> Result<f64> {
        spec.validate()?;
        let norms = self.block_norms(f, spec.p)?;
        Ok(self.besov_from_blocks(&norms, spec.s, spec.r, self.j0, self.j_max))
    }

    /// Weighted `ℓ^r` sum of precomputed block norms over `lo..=hi`.
    pub fn besov_from_blocks(&self, norms: &[f64], s: f64, r: f64, lo: i32, hi: i32) -> f64 {
        let lo = lo.max(self.j_min);
        let hi = hi.min(self.j_max);
        lr_sum((lo..=hi).map(|j| (j as f64 * s).exp2() * norms[(j - self.j_min) as usize]), r)
    }

    /// `(f_low, f_high)` with `f_low = Σ_{j ≤ j0} Δ̇_j f` and `f_high = f − f_low`.
    pub fn split_low_high(&self, f: &SpectralField) -> Result<(SpectralField, SpectralField)> {
        self.check_grid(f)?;
        let w = self.sum_weights(self.j_min, self.j0);
        let low = f.apply_multiplier(|i| w[i]);
        let high = f.apply_multiplier(|i| 1.0 - w[i]);
        Ok((low, high))
    }

    /// Paraproducts and remainder of the Bony decomposition of `fg`.
    pub fn bony_decompose(&self, f: &SpectralField, g: &SpectralField) -> Result<BonyParts> {
        self.check_grid(f)?;
        self.check_grid(g)?;
        if f.components() != 1 || g.components() != 1 {
            return invalid("Bony decomposition expects scalar fields");
        }
        let grid = &self.grid;
        let shells: Vec<i32> = self.shells().collect();
        let blocks = |h: &SpectralField| -> Vec<Vec<f64>> {
            let s = &h.spectral()[0];
            self.tables
                .par_iter()
                .map(|t| inverse_real(grid, &s.iter().zip(t).map(|(z, w)| z * w).collect::<Vec<_>>()))
                .collect()
        };
        let fb = blocks(f);
        let gb = blocks(g);
        let len = grid.len();
        let partial = |b: &[Vec<f64>], upto: usize| -> Vec<f64> {
            let mut acc = vec![0.0; len];
            for blk in &b[..upto] {
                acc.iter_mut().zip(blk).for_each(|(a, v)| *a += v);
            }
            acc
        };
        let mut t_fg = vec![0.0; len];
        let mut t_gf = vec![0.0; len];
        let mut rem = vec![0.0; len];
        for (idx, _) in shells.iter().enumerate() {
            // S_{j-1} sums shells strictly below j-1.
            let upto = idx.saturating_sub(1);
            let sf = partial(&fb, upto);
            let sg = partial(&gb, upto);
            let lo = idx.saturating_sub(1);
            let hi = (idx + 1).min(shells.len() - 1);
            for x in 0..len {
                t_fg[x] += sf[x] * gb[idx][x];
                t_gf[x] += sg[x] * fb[idx][x];
                let tilde: f64 = (lo..=hi).map(|k| gb[k][x]).sum();
                rem[x] += fb[idx][x] * tilde;
            }
        }
        let finish = |v: Vec<f64>| -> Result<SpectralField> {
            let mut c = forward_real(grid, &v);
            dealias(grid, &mut c);
            SpectralField::from_spectral(grid, vec![c])
        };
        let t_fg = finish(t_fg)?;
        let t_gf = finish(t_gf)?;
        let remainder = finish(rem)?;
        let product = f.product(g)?;
        let sum = t_fg.add(&t_gf)?.add(&remainder)?;
        let residue = sum.sub(&product)?.lp_norm(2.0);
        Ok(BonyParts { paraproduct_fg: t_fg, paraproduct_gf: t_gf, remainder, residue })
    }

    /// Chemin-Lerner norm `‖ ‖2^{js}‖Δ̇_j f(t)‖_{L^p}‖_{L^ρ_t} ‖_{ℓ^r}` from block-norm series.
    pub fn chemin_lerner_from_blocks(
        &self,
        times: &[f64],
        blocks: &[Vec<f64>],
        rho: f64,
        s: f64,
        r: f64,
        range: (i32, i32),
    ) -> Result<f64> {
        check_series(times, blocks, rho)?;
        let (lo, hi) = (range.0.max(self.j_min), range.1.min(self.j_max));
        Ok(lr_sum(
            (lo..=hi).map(|j| {
                let jj = (j - self.j_min) as usize;
                let series: Vec<f64> = blocks.iter().map(|b| b[jj]).collect();
                (j as f64 * s).exp2() * time_norm(times, &series, rho)
            }),
            r,
        ))
    }

    /// Chemin-Lerner norm of a recorded field series over all resolved shells.
    pub fn chemin_lerner_norm(
        &self,
        times: &[f64],
        series: &[SpectralField],
        rho: f64,
        spec: &BesovSpec,
    ) -> Result<f64> {
        spec.validate()?;
        if times.len() != series.len() {
            return invalid("time stamps and fields differ in length");
        }
        let blocks = series.iter().map(|f| self.block_norms(f, spec.p)).collect::<Result<Vec<_>>>()?;
        self.chemin_lerner_from_blocks(times, &blocks, rho, spec.s, spec.r, (self.j_min, self.j_max))
    }

    /// `‖ ‖f(t)‖_{Ḃ^s_{p,r}} ‖_{L^ρ_t}`: time norm outside the shell sum.
    pub fn time_besov_norm(&self, times: &[f64], series: &[SpectralField], rho: f64, spec: &BesovSpec) -> Result<f64> {
        spec.validate()?;
        if times.len() != series.len() {
            return invalid("time stamps and fields differ in length");
        }
        let values = series.iter().map(|f| self.besov_norm(f, spec)).collect::<Result<Vec<_>>>()?;
        check_series(times, &[], rho)?;
        Ok(time_norm(times, &values, rho))
    }
}

fn check_series(times: &[f64], blocks: &[Vec<f64>], rho: f64) -> Result<()> {
    if !(rho >= 1.0) {
        return invalid(format!("time exponent must lie in [1, inf], got {rho}"));
    }
    if times.is_empty() || (times.len() < 2 && rho.is_finite()) {
        return invalid("a finite time exponent needs at least two time samples");
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("time stamps must be strictly increasing");
    }
    if !blocks.is_empty() && blocks.len() != times.len() {
        return invalid("time stamps and block series differ in length");
    }
    Ok(())
}

/// `L^ρ` norm in time by the trapezoid rule (`ρ = ∞` is the max).
pub fn time_norm(times: &[f64], values: &[f64], rho: f64) -> f64 {
    if rho.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let integral: f64 = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0].abs().powf(rho) + v[1].abs().powf(rho)))
        .sum();
    integral.powf(1.0 / rho)
}

/// Output of [`DyadicFilterBank::bony_decompose`].
#[derive(Debug, Clone)]
pub struct BonyParts {
    pub paraproduct_fg: SpectralField,
    pub paraproduct_gf: SpectralField,
    pub remainder: SpectralField,
    /// `L^2` norm of `T_f g + T_g f + R(f, g) − fg`.
    pub residue: f64,
}

/// Helmholtz split `u = Pu + Qu` with `Q̂ = ξξᵀ/|ξ|²`; the zero mode goes to `P`.
pub fn helmholtz(u: &SpectralField) -> Result<(SpectralField, SpectralField)> {
    let g = u.grid().clone();
    let n = g.dim();
    if n < 2 || u.components() != n {
        return invalid("Helmholtz projection needs an N-vector field with N >= 2");
    }
    let s = u.spectral();
    let mut q = vec![vec![Complex64::new(0.0, 0.0); g.len()]; n];
    for i in 0..g.len() {
        let k = g.wavevector(i);
        let k2 = g.kmag(i).powi(2);
        if k2 == 0.0 {
            continue;
        }
        let dot: Complex64 = (0..n).map(|a| s[a][i] * k[a]).sum();
        for a in 0..n {
            q[a][i] = dot * (k[a] / k2);
        }
    }
    let p: Vec<Vec<Complex64>> = (0..n).map(|a| s[a].iter().zip(&q[a]).map(|(x, y)| x - y).collect()).collect();
    Ok((SpectralField::from_spectral(&g, p)?, SpectralField::from_spectral(&g, q)?))
}

/// `Λ^ℓ f` with symbol `|ξ|^ℓ`; the zero mode maps to zero unless `ℓ = 0`.
pub fn fractional_derivative(f: &SpectralField, ell: f64) -> Result<SpectralField> {
    if !ell.is_finite() {
        return invalid(format!("derivative order must be finite, got {ell}"));
    }
    if ell == 0.0 {
        return Ok(f.clone());
    }
    if ell < 0.0 {
        let scale = f.lp_norm(2.0).max(f64::MIN_POSITIVE) / f.grid().volume().sqrt();
        if f.mean().iter().any(|m| m.abs() > 1e-12 * scale.max(1.0)) {
            return Err(Error::InvalidInput(format!("negative order {ell} requires a zero-mean field")));
        }
    }
    let g = f.grid().clone();
    Ok(f.apply_multiplier(|i| {
        let k = g.kmag(i);
        if k == 0.0 {
            0.0
        } else {
            k.powf(ell)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn bank(dim: usize, n: usize) -> DyadicFilterBank {
        let g = Grid::new(dim, n, 2.0 * PI).unwrap();
        build_filter_bank(&g, 0).unwrap()
    }

    #[test]
    fn chi_is_monotone_step() {
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi(1.5), 0.0);
        let mut prev = 1.0;
        for i in 0..=200 {
            let r = 0.75 + (4.0 / 3.0 - 0.75) * i as f64 / 200.0;
            let c = chi(r);
            assert!(c <= prev + 1e-15);
            prev = c;
        }
    }

    #[test]
    fn phi_support_and_plateau() {
        assert_eq!(phi(0.74), 0.0);
        assert_eq!(phi(2.67), 0.0);
        assert_eq!(phi(1.4), 1.0);
        assert!(phi(1.0) > 0.0 && phi(2.0) > 0.0);
    }

    #[test]
    fn resolved_range_for_256_points() {
        for dim in [1, 2] {
            let g = Grid::new(dim, 256, 2.0 * PI).unwrap();
            assert_eq!(resolved_range(&g), (-1, 7));
        }
    }

    #[test]
    fn partition_of_unity_on_lattice() {
        let b = bank(2, 64);
        for i in 1..b.grid().len() {
            let s: f64 = b.shells().map(|j| b.table(j).unwrap()[i]).sum();
            assert!((s - 1.0).abs() <= 1e-12, "sum {s} at index {i}");
        }
    }

    #[test]
    fn rejects_threshold_outside_range() {
        let g = Grid::new(1, 64, 2.0 * PI).unwrap();
        assert!(build_filter_bank(&g, 40).is_err());
        let b = build_filter_bank(&g, 0).unwrap();
        assert!(b.table(b.j_max() + 1).is_err());
    }

    #[test]
    fn blocks_reconstruct_mean_free_field() {
        let b = bank(2, 32);
        let g = b.grid().clone();
        let f = SpectralField::from_fn(&g, |x| (x[0]).sin() + 0.5 * (3.0 * x[1] + x[0]).cos());
        let mut acc = SpectralField::zeros(&g, 1);
        for j in b.shells() {
            acc = acc.add(&b.dyadic_block(&f, j).unwrap()).unwrap();
        }
        let diff = acc.sub(&f).unwrap().lp_norm(f64::INFINITY);
        assert!(diff < 1e-10);
    }

    #[test]
    fn fractional_derivative_rules() {
        let g = Grid::new(1, 32, 2.0 * PI).unwrap();
        let f = SpectralField::from_fn(&g, |x| (3.0 * x[0]).cos());
        let d2 = fractional_derivative(&f, 2.0).unwrap();
        for i in 0..g.len() {
            assert!((d2.physical()[0][i] - 9.0 * f.physical()[0][i]).abs() < 1e-11);
        }
        let shifted = SpectralField::from_fn(&g, |x| 1.0 + (3.0 * x[0]).cos());
        assert!(fractional_derivative(&shifted, -1.0).is_err());
        assert!(fractional_derivative(&f, -1.0).is_ok());
    }

    #[test]
    fn time_norm_trapezoid() {
        let t = [0.0, 1.0, 2.0];
        assert_relative_eq!(time_norm(&t, &[1.0, 1.0, 1.0], 1.0), 2.0);
        assert_relative_eq!(time_norm(&t, &[0.0, 3.0, 1.0], f64::INFINITY), 3.0);
    }
}
