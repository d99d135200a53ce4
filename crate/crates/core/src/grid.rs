//! Periodic grids, N-d FFTs and fields carrying both physical and spectral data.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{invalid, Result};

/// Uniform periodic grid on `[0, L)^N`.
#[derive(Debug)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
    wavevectors: Vec<[f64; 3]>,
    kmag: Vec<f64>,
    modes: Vec<[i64; 3]>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.length == other.length
    }
}

impl Grid {
    /// Builds a shared grid; `points` must be even and `dim` in `1..=3`.
    pub fn new(dim: usize, points: usize, length: f64) -> Result<Arc<Grid>> {
        if !(1..=3).contains(&dim) {
            return invalid(format!("grid dimension must be 1, 2 or 3, got {dim}"));
        }
        if points < 4 || !points.is_multiple_of(2) {
            return invalid(format!("points per axis must be even and at least 4, got {points}"));
        }
        if !(length.is_finite() && length > 0.0) {
            return invalid(format!("torus length must be positive, got {length}"));
        }
        let total = points.pow(dim as u32);
        let dk = 2.0 * PI / length;
        let mut wavevectors = Vec::with_capacity(total);
        let mut kmag = Vec::with_capacity(total);
        let mut modes = Vec::with_capacity(total);
        for idx in 0..total {
            let m = unravel(idx, dim, points);
            let mut k = [0.0; 3];
            let mut mm = [0i64; 3];
            for a in 0..dim {
                let mi = signed_mode(m[a], points);
                mm[a] = mi;
                k[a] = dk * mi as f64;
            }
            kmag.push((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt());
            wavevectors.push(k);
            modes.push(mm);
        }
        Ok(Arc::new(Grid { dim, n: points, length, wavevectors, kmag, modes }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.kmag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kmag.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Wavevector of flat index `idx` (unused trailing entries are zero).
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        self.wavevectors[idx]
    }

    #[inline]
    pub fn kmag(&self, idx: usize) -> f64 {
        self.kmag[idx]
    }

    pub fn kmags(&self) -> &[f64] {
        &self.kmag
    }

    /// Integer multi-index of flat index `idx`, with `|m_i| <= n/2`.
    #[inline]
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        self.modes[idx]
    }

    /// Smallest nonzero and largest resolved frequency magnitude.
    pub fn frequency_range(&self) -> (f64, f64) {
        let dk = 2.0 * PI / self.length;
        let kmax = dk * (self.n / 2) as f64 * (self.dim as f64).sqrt();
        (dk, kmax)
    }

    /// Physical coordinates of flat index `idx`.
    pub fn coordinates(&self, idx: usize) -> [f64; 3] {
        let m = unravel(idx, self.dim, self.n);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = h * m[a] as f64;
        }
        x
    }

    /// True when any axis index sits on the Nyquist frequency.
    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let half = (self.n / 2) as i64;
        self.modes[idx][..self.dim].iter().any(|&m| m.abs() == half)
    }

    /// Two-thirds rule: keep modes with `3|m_i| < n` on every axis.
    #[inline]
    pub fn dealias_keep(&self, idx: usize) -> bool {
        let n = self.n as i64;
        self.modes[idx][..self.dim].iter().all(|&m| 3 * m.abs() < n)
    }

    /// Flat index of the multi-index `m` (negative entries wrap).
    pub fn index_of(&self, m: &[i64]) -> usize {
        let n = self.n as i64;
        let mut idx = 0usize;
        for &mi in m.iter().take(self.dim) {
            idx = idx * self.n + mi.rem_euclid(n) as usize;
        }
        idx
    }
}

fn signed_mode(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn unravel(mut idx: usize, dim: usize, n: usize) -> [usize; 3] {
    let mut m = [0usize; 3];
    for a in (0..dim).rev() {
        m[a] = idx % n;
        idx /= n;
    }
    m
}

type PlanKey = (usize, bool);

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<(FftPlanner<f64>, HashMap<PlanKey, Arc<dyn Fft<f64>>>)>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let (planner, map) = &mut *guard;
    map.entry((n, forward))
        .or_insert_with(|| {
            let dir = if forward { FftDirection::Forward } else { FftDirection::Inverse };
            planner.plan_fft(n, dir)
        })
        .clone()
}

/// In-place N-d complex FFT. The inverse includes the `1/n^N` factor.
pub fn fft_nd(grid: &Grid, data: &mut [Complex64], forward: bool) {
    let n = grid.n;
    let dim = grid.dim;
    assert_eq!(data.len(), grid.len(), "buffer does not match grid");
    let fft = plan(n, forward);
    let lines = data.len() / n;
    for axis in (0..dim).rev() {
        let stride = n.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            data.par_chunks_mut(n).for_each(|row| fft.process(row));
        } else {
            let mut buf = vec![Complex64::new(0.0, 0.0); data.len()];
            {
                let src = &*data;
                buf.par_chunks_mut(n).enumerate().for_each(|(l, row)| {
                    let base = (l / stride) * stride * n + l % stride;
                    for (i, v) in row.iter_mut().enumerate() {
                        *v = src[base + i * stride];
                    }
                    fft.process(row);
                });
            }
            for l in 0..lines {
                let base = (l / stride) * stride * n + l % stride;
                let row = &buf[l * n..(l + 1) * n];
                for (i, v) in row.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
    }
    if !forward {
        let scale = 1.0 / data.len() as f64;
        data.par_iter_mut().for_each(|v| *v *= scale);
    }
}

/// Spectral coefficients `f̂_m = Σ_x f(x) e^{-i k·x}` of real samples.
pub fn forward_real(grid: &Grid, samples: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_nd(grid, &mut buf, true);
    buf
}

/// Real part of the inverse transform.
pub fn inverse_real(grid: &Grid, coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    fft_nd(grid, &mut buf, false);
    buf.into_iter().map(|z| z.re).collect()
}

/// Real field (scalar or vector) with lazily synchronized physical and spectral data.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<Grid>,
    components: usize,
    physical: OnceLock<Vec<Vec<f64>>>,
    spectral: OnceLock<Vec<Vec<Complex64>>>,
}

impl SpectralField {
    pub fn zeros(grid: &Arc<Grid>, components: usize) -> Self {
        let phys = vec![vec![0.0; grid.len()]; components];
        let spec = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; components];
        SpectralField { grid: grid.clone(), components, physical: OnceLock::from(phys), spectral: OnceLock::from(spec) }
    }

    pub fn from_physical(grid: &Arc<Grid>, samples: Vec<Vec<f64>>) -> Result<Self> {
        if samples.is_empty() || samples.iter().any(|c| c.len() != grid.len()) {
            return invalid("physical samples do not match the grid");
        }
        Ok(SpectralField {
            grid: grid.clone(),
            components: samples.len(),
            physical: OnceLock::from(samples),
            spectral: OnceLock::new(),
        })
    }

    pub fn from_spectral(grid: &Arc<Grid>, coeffs: Vec<Vec<Complex64>>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| c.len() != grid.len()) {
            return invalid("spectral coefficients do not match the grid");
        }
        Ok(SpectralField {
            grid: grid.clone(),
            components: coeffs.len(),
            physical: OnceLock::new(),
            spectral: OnceLock::from(coeffs),
        })
    }

    /// Scalar field sampled from a function of position.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn([f64; 3]) -> f64 + Sync) -> Self {
        let samples: Vec<f64> = (0..grid.len()).into_par_iter().map(|i| f(grid.coordinates(i))).collect();
        SpectralField::from_physical(grid, vec![samples]).expect("sizes match")
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn physical(&self) -> &[Vec<f64>] {
        self.physical.get_or_init(|| {
            let spec = self.spectral.get().expect("field has no representation");
            spec.iter().map(|c| inverse_real(&self.grid, c)).collect()
        })
    }

    pub fn spectral(&self) -> &[Vec<Complex64>] {
        self.spectral.get_or_init(|| {
            let phys = self.physical.get().expect("field has no representation");
            phys.iter().map(|c| forward_real(&self.grid, c)).collect()
        })
    }

    /// Mutable physical samples; marks the spectral side stale.
    pub fn physical_mut(&mut self) -> &mut Vec<Vec<f64>> {
        self.physical();
        self.spectral.take();
        self.physical.get_mut().expect("physical samples present")
    }

    /// Mutable spectral coefficients; marks the physical side stale.
    pub fn spectral_mut(&mut self) -> &mut Vec<Vec<Complex64>> {
        self.spectral();
        self.physical.take();
        self.spectral.get_mut().expect("spectral coefficients present")
    }

    pub fn is_physical_current(&self) -> bool {
        self.physical.get().is_some()
    }

    pub fn is_spectral_current(&self) -> bool {
        self.spectral.get().is_some()
    }

    /// New field with every coefficient multiplied by `m(idx)` (shared by all components).
    pub fn apply_multiplier(&self, m: impl Fn(usize) -> f64 + Sync) -> SpectralField {
        let coeffs =
            self.spectral().iter().map(|c| c.par_iter().enumerate().map(|(i, z)| z * m(i)).collect()).collect();
        SpectralField::from_spectral(&self.grid, coeffs).expect("sizes match")
    }

    /// Component `c` as a scalar field.
    pub fn component(&self, c: usize) -> SpectralField {
        if let Some(s) = self.spectral.get() {
            SpectralField::from_spectral(&self.grid, vec![s[c].clone()]).expect("sizes match")
        } else {
            SpectralField::from_physical(&self.grid, vec![self.physical()[c].clone()]).expect("sizes match")
        }
    }

    /// Stacks several fields into one multi-component field.
    pub fn stack(parts: &[&SpectralField]) -> Result<SpectralField> {
        let grid = match parts.first() {
            Some(f) => f.grid.clone(),
            None => return invalid("cannot stack zero fields"),
        };
        if parts.iter().any(|f| *f.grid != *grid) {
            return invalid("fields live on different grids");
        }
        let coeffs = parts.iter().flat_map(|f| f.spectral().iter().cloned()).collect();
        SpectralField::from_spectral(&grid, coeffs)
    }

    /// Spectral gradient of a scalar field (Nyquist modes dropped).
    pub fn gradient(&self) -> Result<SpectralField> {
        if self.components != 1 {
            return invalid("gradient expects a scalar field");
        }
        let g = &self.grid;
        let s = &self.spectral()[0];
        let coeffs = (0..g.dim())
            .map(|a| {
                s.par_iter()
                    .enumerate()
                    .map(|(i, z)| {
                        if g.is_nyquist(i) {
                            Complex64::new(0.0, 0.0)
                        } else {
                            z * Complex64::new(0.0, g.wavevector(i)[a])
                        }
                    })
                    .collect()
            })
            .collect();
        SpectralField::from_spectral(g, coeffs)
    }

    /// Spectral divergence of a vector field (Nyquist modes dropped).
    pub fn divergence(&self) -> Result<SpectralField> {
        let g = &self.grid;
        if self.components != g.dim() {
            return invalid("divergence expects an N-vector field");
        }
        let s = self.spectral();
        let out = (0..g.len())
            .into_par_iter()
            .map(|i| {
                if g.is_nyquist(i) {
                    return Complex64::new(0.0, 0.0);
                }
                let k = g.wavevector(i);
                (0..g.dim()).map(|a| s[a][i] * Complex64::new(0.0, k[a])).sum()
            })
            .collect();
        SpectralField::from_spectral(g, vec![out])
    }

    /// Mean of each component.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.grid.len() as f64;
        self.spectral().iter().map(|c| c[0].re / n).collect()
    }

    /// Pointwise-Euclidean `L^p` norm with cell-volume quadrature; `p = ∞` is the grid max.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm_components(&self.grid, self.physical(), p)
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &SpectralField, sign: f64) -> Result<SpectralField> {
        if *self.grid != *other.grid || self.components != other.components {
            return invalid("fields differ in grid or component count");
        }
        let coeffs = self
            .spectral()
            .iter()
            .zip(other.spectral())
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + sign * y).collect())
            .collect();
        SpectralField::from_spectral(&self.grid, coeffs)
    }

    pub fn scale(&self, factor: f64) -> SpectralField {
        self.apply_multiplier(|_| factor)
    }

    /// Pointwise product of two scalar fields, dealiased by the two-thirds rule.
    pub fn product(&self, other: &SpectralField) -> Result<SpectralField> {
        if *self.grid != *other.grid || self.components != 1 || other.components != 1 {
            return invalid("product expects two scalar fields on the same grid");
        }
        let a = &self.physical()[0];
        let b = &other.physical()[0];
        let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        let mut coeffs = forward_real(&self.grid, &prod);
        dealias(&self.grid, &mut coeffs);
        SpectralField::from_spectral(&self.grid, vec![coeffs])
    }
}

/// Zeroes every coefficient outside the two-thirds band.
pub fn dealias(grid: &Grid, coeffs: &mut [Complex64]) {
    coeffs.par_iter_mut().enumerate().for_each(|(i, z)| {
        if !grid.dealias_keep(i) {
            *z = Complex64::new(0.0, 0.0);
        }
    });
}

/// `L^p` norm of the pointwise Euclidean length of several components.
pub fn lp_norm_components(grid: &Grid, comps: &[Vec<f64>], p: f64) -> f64 {
    let len = grid.len();
    let mag2 = |i: usize| comps.iter().map(|c| c[i] * c[i]).sum::<f64>();
    if p.is_infinite() {
        return (0..len).into_par_iter().map(&mag2).reduce(|| 0.0, f64::max).sqrt();
    }
    let sum: f64 = (0..len).into_par_iter().map(|i| mag2(i).powf(0.5 * p)).sum();
    (sum * grid.cell_volume()).powf(1.0 / p)
}

/// `L^2` norm straight from unnormalized spectral coefficients (Parseval).
pub fn l2_from_spectral(grid: &Grid, comps: &[&[Complex64]]) -> f64 {
    let n = grid.len() as f64;
    let s: f64 = comps.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum();
    (s * grid.cell_volume() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(0, 16, 1.0).is_err());
        assert!(Grid::new(4, 16, 1.0).is_err());
        assert!(Grid::new(2, 15, 1.0).is_err());
        assert!(Grid::new(2, 16, -1.0).is_err());
    }

    #[test]
    fn single_mode_lands_on_its_index() {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let f = SpectralField::from_fn(&g, |x| (3.0 * x[0] - 2.0 * x[1]).cos());
        let s = &f.spectral()[0];
        let half = g.len() as f64 / 2.0;
        assert_relative_eq!(s[g.index_of(&[3, -2])].re, half, epsilon = 1e-9);
        assert_relative_eq!(s[g.index_of(&[-3, 2])].re, half, epsilon = 1e-9);
        let rest: f64 = s.iter().map(|z| z.norm()).sum::<f64>() - 2.0 * half;
        assert!(rest.abs() < 1e-9);
    }

    #[test]
    fn round_trip_three_dims() {
        let g = Grid::new(3, 8, 3.0).unwrap();
        let f = SpectralField::from_fn(&g, |x| (x[0] * 2.0).sin() + x[1] * x[2]);
        let orig = f.physical()[0].clone();
        let back = SpectralField::from_spectral(&g, f.spectral().to_vec()).unwrap();
        for (a, b) in orig.iter().zip(&back.physical()[0]) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn parseval_matches_quadrature() {
        let g = Grid::new(2, 32, 5.0).unwrap();
        let f = SpectralField::from_fn(&g, |x| (x[0]).sin() * (2.0 * x[1]).cos() + 0.3);
        let direct = f.lp_norm(2.0);
        let spec = l2_from_spectral(&g, &[&f.spectral()[0]]);
        assert_relative_eq!(direct, spec, max_relative = 1e-12);
    }

    #[test]
    fn mutation_invalidates_other_side() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let mut f = SpectralField::zeros(&g, 1);
        f.physical_mut()[0][3] = 1.0;
        assert!(!f.is_spectral_current());
        assert_relative_eq!(f.spectral()[0][0].re, 1.0);
    }

    #[test]
    fn gradient_of_sine() {
        let g = Grid::new(1, 32, 2.0 * PI).unwrap();
        let f = SpectralField::from_fn(&g, |x| (2.0 * x[0]).sin());
        let d = f.gradient().unwrap();
        for i in 0..g.len() {
            let x = g.coordinates(i)[0];
            assert!((d.physical()[0][i] - 2.0 * (2.0 * x).cos()).abs() < 1e-12);
        }
    }
}
