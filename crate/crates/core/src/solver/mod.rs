//! Pseudo-spectral time integration of the nonlinear two-fluid system on a periodic torus.
//!
//! The linear part is propagated exactly per Fourier mode. By rotation invariance a mode
//! with wavevector `ξ` splits into the longitudinal block `(ĉ⁺, ξ̂·û⁺, ĉ⁻, ξ̂·û⁻)`, governed
//! by the one-dimensional symbol at `|ξ|`, and transverse velocity parts that diffuse at
//! rates `ν₁±|ξ|²`. The nonlinear forcing is handled by an exponential Euler predictor and
//! a trapezoidal corrector in the interaction frame.

pub mod init;
pub mod snapshot;
pub mod terms;

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

pub use init::{bump, init_data, InitKind, InitParams};
pub use snapshot::{read_snapshot, write_snapshot};
pub use terms::{min_mass, nonlinear_terms, NonlinearTerms};

use crate::closure::{equilibrium_coefficients, CoeffEvaluator, EquilibriumCoefficients, PressureLaw, Viscosities};
use crate::decay::NormSeries;
use crate::error::{invalid, Error, ErrorClass, Result};
use crate::grid::{l2_from_spectral, Grid, SpectralField};
use crate::linalg::ModePropagator;
use crate::linear_green::build_symbol;
use crate::lp_besov::{build_filter_bank, DyadicFilterBank};

type Coeffs = Vec<Vec<Complex64>>;

/// Perturbation state `(c⁺, u⁺, c⁻, u⁻)` with `c± = R± − 1`.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub c_plus: SpectralField,
    pub u_plus: SpectralField,
    pub c_minus: SpectralField,
    pub u_minus: SpectralField,
    pub time: f64,
}

impl FieldState {
    pub fn equilibrium(grid: &Arc<Grid>) -> FieldState {
        FieldState {
            c_plus: SpectralField::zeros(grid, 1),
            u_plus: SpectralField::zeros(grid, grid.dim()),
            c_minus: SpectralField::zeros(grid, 1),
            u_minus: SpectralField::zeros(grid, grid.dim()),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.c_plus.grid()
    }

    /// Spectral coefficients in the order `c⁺, u⁺₁…u⁺_N, c⁻, u⁻₁…u⁻_N`.
    pub fn stacked(&self) -> Coeffs {
        let mut out = Vec::with_capacity(2 + 2 * self.grid().dim());
        for f in [&self.c_plus, &self.u_plus, &self.c_minus, &self.u_minus] {
            out.extend(f.spectral().iter().cloned());
        }
        out
    }

    pub fn from_stacked(grid: &Arc<Grid>, mut coeffs: Coeffs, time: f64) -> Result<FieldState> {
        let n = grid.dim();
        if coeffs.len() != 2 + 2 * n {
            return invalid(format!("state needs {} components, got {}", 2 + 2 * n, coeffs.len()));
        }
        let um = coeffs.split_off(n + 2);
        let cm = coeffs.pop().expect("component");
        let up = coeffs.split_off(1);
        let cp = coeffs.pop().expect("component");
        Ok(FieldState {
            c_plus: SpectralField::from_spectral(grid, vec![cp])?,
            u_plus: SpectralField::from_spectral(grid, up)?,
            c_minus: SpectralField::from_spectral(grid, vec![cm])?,
            u_minus: SpectralField::from_spectral(grid, um)?,
            time,
        })
    }

    /// Physical samples in stacked order.
    pub fn physical_components(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for f in [&self.c_plus, &self.u_plus, &self.c_minus, &self.u_minus] {
            out.extend(f.physical().iter().map(|c| c.as_slice()));
        }
        out
    }

    /// `(∫c⁺, ∫c⁻)` over the torus.
    pub fn total_mass(&self) -> (f64, f64) {
        let vol = self.grid().volume();
        (self.c_plus.mean()[0] * vol, self.c_minus.mean()[0] * vol)
    }

    /// `L²` norm of all components together.
    pub fn l2_norm(&self) -> f64 {
        let s = self.stacked();
        let refs: Vec<&[Complex64]> = s.iter().map(|c| c.as_slice()).collect();
        l2_from_spectral(self.grid(), &refs)
    }

    /// `L²` norm of the deviation from the spatial mean, all components together.
    pub fn fluctuation_l2(&self) -> f64 {
        let mut s = self.stacked();
        s.iter_mut().for_each(|c| c[0] = Complex64::new(0.0, 0.0));
        let refs: Vec<&[Complex64]> = s.iter().map(|c| c.as_slice()).collect();
        l2_from_spectral(self.grid(), &refs)
    }

    /// The same state with the two phases exchanged.
    pub fn swapped(&self) -> FieldState {
        FieldState {
            c_plus: self.c_minus.clone(),
            u_plus: self.u_minus.clone(),
            c_minus: self.c_plus.clone(),
            u_minus: self.u_plus.clone(),
            time: self.time,
        }
    }

    /// Zeroes every mode outside the two-thirds band.
    pub fn dealiased(&self) -> Result<FieldState> {
        let grid = self.grid().clone();
        let mut s = self.stacked();
        for c in s.iter_mut() {
            crate::grid::dealias(&grid, c);
        }
        FieldState::from_stacked(&grid, s, self.time)
    }

    /// Largest pointwise speed of either phase.
    pub fn max_speed(&self) -> f64 {
        [&self.u_plus, &self.u_minus].iter().map(|u| u.lp_norm(f64::INFINITY)).fold(0.0, f64::max)
    }
}

/// Longitudinal block and transverse rates for one `|m|²` shell.
struct ShellPropagator {
    exp: [[Complex64; 4]; 4],
    phi: [[Complex64; 4]; 4],
    /// `(e^{−ν₁⁺k²h}, e^{−ν₁⁻k²h})`.
    heat: (f64, f64),
    /// `∫₀ʰ e^{−ν₁±k²s} ds`.
    heat_phi: (f64, f64),
}

fn to_array(m: &crate::linalg::CMatrix) -> [[Complex64; 4]; 4] {
    let mut a = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    a
}

fn heat_pair(rate: f64, h: f64) -> (f64, f64) {
    let x = rate * h;
    let phi = if x == 0.0 { h } else { -(-x).exp_m1() / rate };
    ((-x).exp(), phi)
}

/// Exact linear propagator over a fixed step `h`, tabulated per `|m|²`.
pub struct LinearPropagator {
    grid: Arc<Grid>,
    h: f64,
    shell_of: Vec<u32>,
    shells: Vec<ShellPropagator>,
}

const DROPPED: u32 = u32::MAX;

impl LinearPropagator {
    pub fn new(grid: &Arc<Grid>, coeffs: &EquilibriumCoefficients, h: f64, dealiased: bool) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return invalid(format!("time step must be positive, got {h}"));
        }
        let mut keys: HashMap<i64, u32> = HashMap::new();
        let mut key_list = Vec::new();
        let shell_of = (0..grid.len())
            .map(|i| {
                if dealiased && !grid.dealias_keep(i) {
                    return DROPPED;
                }
                let m = grid.mode(i);
                let key: i64 = m.iter().map(|v| v * v).sum();
                *keys.entry(key).or_insert_with(|| {
                    key_list.push(key);
                    (key_list.len() - 1) as u32
                })
            })
            .collect();
        let dk = 2.0 * std::f64::consts::PI / grid.length();
        let shells = key_list
            .par_iter()
            .map(|&key| {
                let k = dk * (key as f64).sqrt();
                let k2 = k * k;
                let (hp, hpp) = heat_pair(coeffs.nu1_plus * k2, h);
                let (hm, hmp) = heat_pair(coeffs.nu1_minus * k2, h);
                let (exp, phi) = if key == 0 {
                    let mut e = [[Complex64::new(0.0, 0.0); 4]; 4];
                    let mut p = e;
                    for i in 0..4 {
                        e[i][i] = Complex64::new(1.0, 0.0);
                        p[i][i] = Complex64::new(h, 0.0);
                    }
                    (e, p)
                } else {
                    let sym = build_symbol(&[k], coeffs);
                    let prop = ModePropagator::new(sym.matrix);
                    (to_array(&prop.exp(h)), to_array(&prop.phi1_integral(h)))
                };
                ShellPropagator { exp, phi, heat: (hp, hm), heat_phi: (hpp, hmp) }
            })
            .collect();
        Ok(LinearPropagator { grid: grid.clone(), h, shell_of, shells })
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// `e^{hA}v` (`integral = false`) or `∫₀ʰ e^{sA}ds v` (`integral = true`) for every mode;
    /// dropped modes are zeroed.
    pub fn apply(&self, v: &Coeffs, integral: bool) -> Coeffs {
        let g = &self.grid;
        let n = g.dim();
        let (cp, up, cm, um) = crate::linear_green::slots(n);
        let zero = Complex64::new(0.0, 0.0);
        let out: Vec<[Complex64; 8]> = (0..g.len())
            .into_par_iter()
            .map(|i| {
                let mut r = [zero; 8];
                let sh = self.shell_of[i];
                if sh == DROPPED {
                    return r;
                }
                let p = &self.shells[sh as usize];
                let k = g.kmag(i);
                let xi = g.wavevector(i);
                let unit: [f64; 3] = if k > 0.0 { [xi[0] / k, xi[1] / k, xi[2] / k] } else { [0.0; 3] };
                let long = |base: usize| (0..n).map(|a| v[base + a][i] * unit[a]).sum::<Complex64>();
                let w = [v[cp][i], long(up), v[cm][i], long(um)];
                let m = if integral { &p.phi } else { &p.exp };
                let mut y = [zero; 4];
                for (a, ya) in y.iter_mut().enumerate() {
                    *ya = (0..4).map(|b| m[a][b] * w[b]).sum();
                }
                let (tp, tm) = if integral { p.heat_phi } else { p.heat };
                r[cp] = y[0];
                r[cm] = y[2];
                for a in 0..n {
                    let trans_p = v[up + a][i] - w[1] * unit[a];
                    let trans_m = v[um + a][i] - w[3] * unit[a];
                    r[up + a] = y[1] * unit[a] + trans_p * tp;
                    r[um + a] = y[3] * unit[a] + trans_m * tm;
                }
                r
            })
            .collect();
        (0..2 + 2 * n).map(|c| out.iter().map(|r| r[c]).collect()).collect()
    }
}

fn axpy(a: &mut Coeffs, s: f64, b: &Coeffs) {
    a.par_iter_mut().zip(b.par_iter()).for_each(|(x, y)| x.iter_mut().zip(y).for_each(|(p, q)| *p += q * s));
}

/// Physics inputs shared by stepping and norm recording.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physics {
    pub law_plus: PressureLaw,
    pub law_minus: PressureLaw,
    pub viscosities: Viscosities,
    /// Tolerance of the pointwise closure solve.
    pub closure_tol: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Physics {
            law_plus: PressureLaw::default(),
            law_minus: PressureLaw::default(),
            viscosities: Viscosities::default(),
            closure_tol: 1e-13,
        }
    }
}

/// Maximum number of step halvings after a positivity failure.
pub const MAX_HALVINGS: u32 = 5;

/// Second-order exponential integrator.
pub struct Stepper {
    grid: Arc<Grid>,
    coeffs: EquilibriumCoefficients,
    evaluator: CoeffEvaluator,
    nonlinear: bool,
    dealiased: bool,
    propagators: HashMap<u64, Arc<LinearPropagator>>,
    guess: Option<Vec<f64>>,
    rejections: usize,
}

impl Stepper {
    pub fn new(grid: &Arc<Grid>, physics: &Physics, nonlinear: bool, dealiased: bool) -> Result<Self> {
        let coeffs = equilibrium_coefficients(&physics.law_plus, &physics.law_minus, &physics.viscosities)?;
        let evaluator = CoeffEvaluator::new(&physics.law_plus, &physics.law_minus, physics.closure_tol)?;
        Ok(Stepper {
            grid: grid.clone(),
            coeffs,
            evaluator,
            nonlinear,
            dealiased,
            propagators: HashMap::new(),
            guess: None,
            rejections: 0,
        })
    }

    pub fn coefficients(&self) -> &EquilibriumCoefficients {
        &self.coeffs
    }

    /// Number of rejected (halved) steps so far.
    pub fn rejections(&self) -> usize {
        self.rejections
    }

    pub fn propagator(&mut self, h: f64) -> Result<Arc<LinearPropagator>> {
        if let Some(p) = self.propagators.get(&h.to_bits()) {
            return Ok(p.clone());
        }
        let p = Arc::new(LinearPropagator::new(&self.grid, &self.coeffs, h, self.dealiased)?);
        if self.propagators.len() > 8 {
            self.propagators.clear();
        }
        self.propagators.insert(h.to_bits(), p.clone());
        Ok(p)
    }

    fn forcing(&mut self, u: &Coeffs, time: f64) -> Result<Option<Coeffs>> {
        if !self.nonlinear {
            return Ok(None);
        }
        let st = FieldState::from_stacked(&self.grid, u.clone(), time)?;
        let h = terms::evaluate(&st, &self.evaluator, &self.coeffs, &mut self.guess, self.dealiased)?;
        Ok(Some(h.stacked()))
    }

    fn attempt(&mut self, state: &FieldState, h: f64) -> Result<FieldState> {
        let prop = self.propagator(h)?;
        let u = state.stacked();
        let next = match self.forcing(&u, state.time)? {
            None => prop.apply(&u, false),
            Some(n0) => {
                let mut ustar = prop.apply(&u, false);
                axpy(&mut ustar, 1.0, &prop.apply(&n0, true));
                let n1 = self.forcing(&ustar, state.time + h)?.expect("nonlinear forcing");
                let mut a = u.clone();
                axpy(&mut a, 0.5 * h, &n0);
                let mut out = prop.apply(&a, false);
                axpy(&mut out, 0.5 * h, &n1);
                out
            }
        };
        if next.iter().flatten().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Aborted { time: state.time, reason: "non-finite coefficients after step".into() });
        }
        let out = FieldState::from_stacked(&self.grid, next, state.time + h)?;
        for (name, c) in [("R+", &out.c_plus), ("R-", &out.c_minus)] {
            let m = min_mass(c);
            if !(m > 0.0) {
                return Err(Error::StateInvalid(format!(
                    "mass {name} lost positivity (min {m:e}) at t = {}",
                    out.time
                )));
            }
        }
        Ok(out)
    }

    /// Advances `state` by `h`, halving on positivity loss up to [`MAX_HALVINGS`] times.
    pub fn step(&mut self, state: &FieldState, h: f64) -> Result<FieldState> {
        self.advance(state, h, 0)
    }

    fn advance(&mut self, state: &FieldState, h: f64, depth: u32) -> Result<FieldState> {
        match self.attempt(state, h) {
            Err(Error::StateInvalid(reason)) => {
                if depth >= MAX_HALVINGS {
                    return Err(Error::StepRejected { time: state.time, reason });
                }
                self.rejections += 1;
                self.guess = None;
                let mid = self.advance(state, 0.5 * h, depth + 1)?;
                self.advance(&mid, 0.5 * h, depth + 1)
            }
            other => other,
        }
    }
}

/// One nonlinear (or linear) step of size `h`.
pub fn step(state: &FieldState, h: f64, physics: &Physics, nonlinear: bool) -> Result<FieldState> {
    Stepper::new(state.grid(), physics, nonlinear, true)?.step(state, h)
}

/// Everything a run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub points: usize,
    pub length: f64,
    /// Three-dimensional runs are opt-in.
    pub allow_3d: bool,
    pub physics: Physics,
    pub init: InitParams,
    pub dt: f64,
    pub t_end: f64,
    /// Record norms every this many steps (the final state is always recorded).
    pub output_every: usize,
    pub dealias: bool,
    /// When false the forcing is dropped and the run is purely linear.
    pub nonlinear: bool,
    pub seed: u64,
    /// Integrability of the recorded high-frequency channels.
    pub norm_p: f64,
    /// Low/high threshold of the filter bank.
    pub j0: i32,
    pub keep_states: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dim: 2,
            points: 64,
            length: 2.0 * std::f64::consts::PI,
            allow_3d: false,
            physics: Physics::default(),
            init: InitParams::default(),
            dt: 0.01,
            t_end: 1.0,
            output_every: 10,
            dealias: true,
            nonlinear: true,
            seed: 0,
            norm_p: 2.0,
            j0: 0,
            keep_states: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 3 && !self.allow_3d {
            return invalid("three-dimensional runs need grid.allow_3d = true");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return invalid(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return invalid(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if self.output_every == 0 {
            return invalid("output cadence must be at least one step");
        }
        if !(self.norm_p >= 1.0) {
            return invalid(format!("norm exponent must be >= 1, got {}", self.norm_p));
        }
        if !(self.physics.closure_tol > 0.0) {
            return invalid("closure tolerance must be positive");
        }
        self.physics.law_plus.validate()?;
        self.physics.law_minus.validate()?;
        self.physics.viscosities.validate()
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        self.validate()?;
        Grid::new(self.dim, self.points, self.length)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    Failed { time: f64, class: ErrorClass, message: String },
}

/// Recorded output of a run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub series: NormSeries,
    /// `(∫c⁺, ∫c⁻)` at each recorded time.
    pub mass: Vec<(f64, f64)>,
    /// Recorded states, when requested.
    pub states: Vec<FieldState>,
    pub final_state: FieldState,
    pub status: RunStatus,
    pub steps: usize,
    pub rejections: usize,
    /// Largest `max|u|·dt/dx` seen at the recorded times.
    pub max_cfl: f64,
}

/// Block-norm rows for one state.
pub struct NormRow {
    pub u2: Vec<f64>,
    pub u_p: Vec<f64>,
    pub c_p: Vec<f64>,
    pub gradc_u_p: Vec<f64>,
    /// Mean-free `L²` norm of the whole state.
    pub l2: f64,
}

pub fn norm_row(state: &FieldState, bank: &DyadicFilterBank, p: f64) -> Result<NormRow> {
    let all = SpectralField::stack(&[&state.c_plus, &state.u_plus, &state.c_minus, &state.u_minus])?;
    let u = SpectralField::stack(&[&state.u_plus, &state.u_minus])?;
    let c = SpectralField::stack(&[&state.c_plus, &state.c_minus])?;
    let gp = state.c_plus.gradient()?;
    let gm = state.c_minus.gradient()?;
    let gu = SpectralField::stack(&[&gp, &state.u_plus, &gm, &state.u_minus])?;
    Ok(NormRow {
        u2: bank.block_norms(&all, 2.0)?,
        u_p: bank.block_norms(&u, p)?,
        c_p: bank.block_norms(&c, p)?,
        gradc_u_p: bank.block_norms(&gu, p)?,
        l2: state.fluctuation_l2(),
    })
}

struct Recorder {
    bank: DyadicFilterBank,
    p: f64,
    keep: bool,
    series: NormSeries,
    mass: Vec<(f64, f64)>,
    states: Vec<FieldState>,
    max_cfl: f64,
    dt: f64,
}

impl Recorder {
    fn record(&mut self, st: &FieldState) -> Result<()> {
        if self.series.times.last().is_some_and(|t| *t >= st.time) {
            return Ok(());
        }
        let row = norm_row(st, &self.bank, self.p)?;
        self.series.times.push(st.time);
        self.series.u2.push(row.u2);
        self.series.u_p.push(row.u_p);
        self.series.c_p.push(row.c_p);
        self.series.gradc_u_p.push(row.gradc_u_p);
        self.series.l2.get_or_insert_with(Vec::new).push(row.l2);
        self.mass.push(st.total_mass());
        self.max_cfl = self.max_cfl.max(st.max_speed() * self.dt / st.grid().spacing());
        if self.keep {
            self.states.push(st.clone());
        }
        Ok(())
    }
}

/// Steps from the initial data to `t_end`, recording norms at the output cadence.
///
/// Invalid configurations are errors; failures during stepping end the run early and are
/// reported through [`Trajectory::status`].
pub fn run(config: &RunConfig) -> Result<Trajectory> {
    let grid = config.grid()?;
    let mut state = init_data(&config.init, &grid, config.seed)?;
    if config.dealias {
        state = state.dealiased()?;
    }
    let mut stepper = Stepper::new(&grid, &config.physics, config.nonlinear, config.dealias)?;
    let bank = build_filter_bank(&grid, config.j0)?;
    let mut rec = Recorder {
        series: NormSeries {
            times: Vec::new(),
            j_min: bank.j_min(),
            j0: config.j0,
            p: config.norm_p,
            u2: Vec::new(),
            u_p: Vec::new(),
            c_p: Vec::new(),
            gradc_u_p: Vec::new(),
            l2: None,
        },
        bank,
        p: config.norm_p,
        keep: config.keep_states,
        mass: Vec::new(),
        states: Vec::new(),
        max_cfl: 0.0,
        dt: config.dt,
    };
    rec.record(&state)?;
    let total = (config.t_end / config.dt - 1e-9).ceil().max(0.0) as usize;
    let mut status = RunStatus::Completed;
    let mut steps = 0;
    for k in 0..total {
        let h = if k + 1 == total { config.t_end - state.time } else { config.dt };
        if !(h > 0.0) {
            break;
        }
        match stepper.step(&state, h) {
            Ok(next) => {
                state = next;
                steps += 1;
                if k + 1 == total {
                    state.time = config.t_end;
                }
                if (k + 1) % config.output_every == 0 || k + 1 == total {
                    rec.record(&state)?;
                }
            }
            Err(e) => {
                status = RunStatus::Failed { time: state.time, class: e.class(), message: e.to_string() };
                rec.record(&state)?;
                break;
            }
        }
    }
    Ok(Trajectory {
        series: rec.series,
        mass: rec.mass,
        states: rec.states,
        final_state: state,
        status,
        steps,
        rejections: stepper.rejections(),
        max_cfl: rec.max_cfl,
    })
}
