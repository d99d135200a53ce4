//! Initial-data generators.

use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::FieldState;
use crate::error::{invalid, Error, Result};
use crate::grid::{inverse_real, Grid, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    GaussianBump,
    RandomBand,
    Oscillating,
}

impl InitKind {
    pub fn name(&self) -> &'static str {
        match self {
            InitKind::GaussianBump => "gaussian-bump",
            InitKind::RandomBand => "random-band",
            InitKind::Oscillating => "oscillating",
        }
    }
}

impl FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-bump" => Ok(InitKind::GaussianBump),
            "random-band" => Ok(InitKind::RandomBand),
            "oscillating" => Ok(InitKind::Oscillating),
            other => invalid(format!(
                "unknown initial-data kind '{other}' (expected gaussian-bump, random-band or oscillating)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitParams {
    pub kind: InitKind,
    pub amplitude: f64,
    /// Standard deviation of the Gaussian profile.
    pub width: f64,
    /// Dyadic shells `[j_lo, j_hi]` populated by random-band data.
    pub band: (i32, i32),
    /// Oscillation length `ε` of the oscillating data.
    pub epsilon_osc: f64,
    /// Support radius of the compact bump.
    pub bump_radius: f64,
    /// Multipliers of `(c⁺, u⁺, c⁻, u⁻)`.
    pub weights: [f64; 4],
}

impl Default for InitParams {
    fn default() -> Self {
        InitParams {
            kind: InitKind::GaussianBump,
            amplitude: 0.01,
            width: 1.0,
            band: (0, 2),
            epsilon_osc: 1.0 / 16.0,
            bump_radius: 2.0,
            weights: [1.0, 1.0, 1.0, 1.0],
        }
    }
}

impl InitParams {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !self.amplitude.is_finite() {
            return invalid(format!("amplitude must be finite, got {}", self.amplitude));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return invalid("initial-data weights must be finite");
        }
        match self.kind {
            InitKind::GaussianBump => {
                if !(self.width > 0.0 && self.width <= grid.length() / 4.0) {
                    return invalid(format!("gaussian width must lie in (0, L/4], got {}", self.width));
                }
            }
            InitKind::RandomBand => {
                if self.band.0 > self.band.1 {
                    return invalid(format!("random band [{}, {}] is empty", self.band.0, self.band.1));
                }
            }
            InitKind::Oscillating => {
                if !(self.epsilon_osc > 0.0) {
                    return invalid(format!("oscillation length must be positive, got {}", self.epsilon_osc));
                }
                if !(self.bump_radius > 0.0 && self.bump_radius < grid.length() / 2.0) {
                    return invalid(format!("bump radius must lie in (0, L/2), got {}", self.bump_radius));
                }
            }
        }
        Ok(())
    }
}

/// Smooth compactly supported profile `exp(1 − 1/(1 − r²/R²))` with peak 1 at `r = 0`.
pub fn bump(r: f64, radius: f64) -> f64 {
    let x = r * r / (radius * radius);
    if x >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x)).exp()
    }
}

fn offset(grid: &Grid, x: [f64; 3]) -> [f64; 3] {
    let c = 0.5 * grid.length();
    let mut d = [0.0; 3];
    for a in 0..grid.dim() {
        d[a] = x[a] - c;
    }
    d
}

/// Periodized Gaussian centred in the box, with peak value close to 1.
fn periodic_gaussian(grid: &Grid, x: [f64; 3], width: f64) -> f64 {
    let d = offset(grid, x);
    let l = grid.length();
    let mut total = 1.0;
    for a in 0..grid.dim() {
        let mut s = 0.0;
        for m in -2..=2 {
            let y = d[a] + m as f64 * l;
            s += (-0.5 * y * y / (width * width)).exp();
        }
        total *= s;
    }
    total
}

fn scalar(grid: &Arc<Grid>, f: impl Fn([f64; 3]) -> f64 + Sync) -> Vec<f64> {
    SpectralField::from_fn(grid, f).physical()[0].clone()
}

fn random_band_field(grid: &Grid, rng: &mut ChaCha8Rng, band: (i32, i32)) -> Vec<f64> {
    let lo = 0.75 * (band.0 as f64).exp2();
    let hi = 8.0 / 3.0 * (band.1 as f64).exp2();
    let coeffs: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            let k = grid.kmag(i);
            if k >= lo && k <= hi && grid.dealias_keep(i) {
                Complex64::new(a, b)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let mut f = inverse_real(grid, &coeffs);
    let peak = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        f.iter_mut().for_each(|v| *v /= peak);
    }
    f
}

/// Builds the initial state of the requested kind.
pub fn init_data(params: &InitParams, grid: &Arc<Grid>, seed: u64) -> Result<FieldState> {
    params.validate(grid)?;
    let n = grid.dim();
    let a = params.amplitude;
    let w = params.weights;
    let zeros = || vec![0.0; grid.len()];
    let (cp, up, cm, um): (Vec<f64>, Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) = match params.kind {
        InitKind::GaussianBump => {
            let g = scalar(grid, |x| periodic_gaussian(grid, x, params.width));
            let sc = |k: f64| g.iter().map(|v| a * k * v).collect::<Vec<f64>>();
            let vel = |k: f64| {
                let mut u = vec![zeros(); n];
                u[0] = sc(k);
                u
            };
            (sc(w[0]), vel(w[1]), sc(w[2]), vel(w[3]))
        }
        InitKind::RandomBand => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draw = |k: f64| -> Vec<f64> {
                random_band_field(grid, &mut rng, params.band).into_iter().map(|v| a * k * v).collect()
            };
            let cp = draw(w[0]);
            let up = (0..n).map(|_| draw(w[1])).collect();
            let cm = draw(w[2]);
            let um = (0..n).map(|_| draw(w[3])).collect();
            (cp, up, cm, um)
        }
        InitKind::Oscillating => {
            let eps = params.epsilon_osc;
            let profile = scalar(grid, |x| {
                let d = offset(grid, x);
                let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                (d[0] / eps).sin() * bump(r, params.bump_radius)
            });
            let vel = |k: f64| {
                let mut u = vec![zeros(); n];
                u[0] = profile.iter().map(|v| a * k * v).collect();
                u
            };
            (zeros(), vel(w[1]), zeros(), vel(w[3]))
        }
    };
    for (name, c) in [("c+", &cp), ("c-", &cm)] {
        let min = c.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(1.0 + min > 0.0) {
            return invalid(format!("initial {name} violates 1 + c > 0 (min 1 + c = {})", 1.0 + min));
        }
    }
    let st = FieldState {
        c_plus: SpectralField::from_physical(grid, vec![cp])?,
        u_plus: SpectralField::from_physical(grid, up)?,
        c_minus: SpectralField::from_physical(grid, vec![cm])?,
        u_minus: SpectralField::from_physical(grid, um)?,
        time: 0.0,
    };
    Ok(st)
}
