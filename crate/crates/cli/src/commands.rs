//! The six experiment pipelines.

use anyhow::{Context, Result};
use num_complex::Complex64;
use twofluid::closure::{
    closure_residual, derived_state, equilibrium_coefficients, EquilibriumCoefficients, PressureLaw, Viscosities,
};
use twofluid::decay::{
    check_p_range, corollary_targets, default_window, fit_decay, functional_d, functional_x, saturation_time,
    DecayConfig, NormSeries,
};
use twofluid::grid::Grid;
use twofluid::linear_green::{
    fit_decay_envelope, green_2x2, mode_matrix, radial_block_norms, EnvelopeSource, Generator, RadialProfile,
};
use twofluid::lp_besov::{build_filter_bank, check_inequality, InequalityCase};
use twofluid::solver::{
    init_data, run, write_snapshot, InitKind, InitParams, Physics, RunConfig, RunStatus, Trajectory,
};
use twofluid::ErrorClass;

use crate::config::{ConfigError, Settings};
use crate::report::{num, Check, Output};

/// Result of one pipeline.
pub struct Outcome {
    pub checks: Vec<Check>,
    pub derived: Vec<(String, f64)>,
    /// Set when the pipeline stopped on a runtime failure after writing partial output.
    pub failure: Option<(ErrorClass, String)>,
}

impl Outcome {
    fn new(checks: Vec<Check>, derived: Vec<(String, f64)>) -> Outcome {
        Outcome { checks, derived, failure: None }
    }
}

pub fn physics(s: &Settings) -> Result<Physics> {
    let law_plus = PressureLaw::new(s.f64("physics", "gamma_plus"), s.f64("physics", "a_plus"))?;
    let law_minus = PressureLaw::new(s.f64("physics", "gamma_minus"), s.f64("physics", "a_minus"))?;
    let viscosities = Viscosities {
        mu_plus: s.f64("physics", "mu_plus"),
        mu_minus: s.f64("physics", "mu_minus"),
        lambda_plus: s.f64("physics", "lambda_plus"),
        lambda_minus: s.f64("physics", "lambda_minus"),
    };
    viscosities.validate()?;
    Ok(Physics { law_plus, law_minus, viscosities, closure_tol: s.f64("physics", "closure_tol") })
}

fn coefficients(s: &Settings) -> Result<EquilibriumCoefficients> {
    let ph = physics(s)?;
    Ok(equilibrium_coefficients(&ph.law_plus, &ph.law_minus, &ph.viscosities)?)
}

pub fn dim(s: &Settings) -> Result<usize> {
    Ok(s.usize("grid", "dim")?)
}

pub fn decay_config(s: &Settings) -> Result<DecayConfig> {
    let d = dim(s)?;
    Ok(DecayConfig::new(s.f64("decay", "p"), d, s.f64("decay", "epsilon"))?)
}

pub fn init_params(s: &Settings) -> Result<InitParams> {
    let w = s.floats("init", "weights");
    let weights: [f64; 4] = w
        .as_slice()
        .try_into()
        .map_err(|_| ConfigError(format!("init.weights needs four entries, got {}", w.len())))?;
    Ok(InitParams {
        kind: s.str("init", "kind").parse::<InitKind>()?,
        amplitude: s.f64("init", "amplitude"),
        width: s.f64("init", "width"),
        band: (s.i64("init", "band_lo") as i32, s.i64("init", "band_hi") as i32),
        epsilon_osc: s.f64("init", "epsilon_osc"),
        bump_radius: s.f64("init", "bump_radius"),
        weights,
    })
}

pub fn run_config(s: &Settings) -> Result<RunConfig> {
    let cfg = RunConfig {
        dim: dim(s)?,
        points: s.usize("grid", "points")?,
        length: s.f64("grid", "length"),
        allow_3d: s.bool("grid", "allow_3d"),
        physics: physics(s)?,
        init: init_params(s)?,
        dt: s.f64("time", "dt"),
        t_end: s.f64("time", "t_end"),
        output_every: s.usize("time", "output_every")?,
        dealias: s.bool("grid", "dealias"),
        nonlinear: s.bool("physics", "nonlinear"),
        seed: s.i64("init", "seed") as u64,
        norm_p: s.f64("output", "norm_p"),
        j0: s.i64("grid", "j0") as i32,
        keep_states: s.bool("output", "snapshots"),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Validation shared by every subcommand, and the derived quantities echoed into the manifest.
pub fn validate(s: &Settings) -> Result<Vec<(String, f64)>> {
    let d = dim(s)?;
    if d >= 2 {
        check_p_range(s.f64("decay", "p"), d)?;
    }
    if d == 3 && !s.bool("grid", "allow_3d") {
        return Err(ConfigError("three-dimensional runs need grid.allow_3d = true".into()).into());
    }
    if !(1..=3).contains(&d) {
        return Err(ConfigError(format!("grid.dim must be 1, 2 or 3, got {d}")).into());
    }
    let co = coefficients(s)?;
    let mut out: Vec<(String, f64)> = vec![
        ("beta1".into(), co.beta1),
        ("beta2".into(), co.beta2),
        ("beta3".into(), co.beta3),
        ("beta4".into(), co.beta4),
        ("nu1_plus".into(), co.nu1_plus),
        ("nu1_minus".into(), co.nu1_minus),
        ("nu2_plus".into(), co.nu2_plus),
        ("nu2_minus".into(), co.nu2_minus),
        ("nu_plus".into(), co.nu_plus),
        ("nu_minus".into(), co.nu_minus),
        ("rho_plus_ref".into(), co.reference.rho_plus),
        ("rho_minus_ref".into(), co.reference.rho_minus),
        ("alpha_plus_ref".into(), co.reference.alpha_plus),
        ("alpha_minus_ref".into(), co.reference.alpha_minus),
        ("pressure_ref".into(), co.reference.pressure),
        ("c2_ref".into(), co.reference.c2),
    ];
    if d >= 2 {
        let dc = decay_config(s)?;
        out.push(("s0".into(), dc.s0));
        out.push(("alpha".into(), dc.alpha));
        for (i, v) in dc.s_list.iter().enumerate() {
            out.push((format!("s_list_{i}"), *v));
        }
    }
    Ok(out)
}

pub fn closure(s: &Settings, out: &mut Output) -> Result<Outcome> {
    let ph = physics(s)?;
    let tol = ph.closure_tol;
    let rs = s.floats("closure", "r_values");
    let mut rows = Vec::new();
    let (mut worst_res, mut worst_alpha) = (0.0f64, 0.0f64);
    for &rp in &rs {
        for &rm in &rs {
            let st = derived_state(rp, rm, &ph.law_plus, &ph.law_minus, tol)?;
            let res = closure_residual(rp, rm, &ph.law_plus, &ph.law_minus, st.rho_plus);
            let scale = st.pressure.abs().max(1.0);
            worst_res = worst_res.max(res.abs() / scale);
            worst_alpha = worst_alpha.max((st.alpha_plus + st.alpha_minus - 1.0).abs());
            rows.push(vec![
                num(rp),
                num(rm),
                num(st.rho_plus),
                num(st.rho_minus),
                num(st.alpha_plus),
                num(st.alpha_minus),
                num(st.pressure),
                num(st.c2),
                num(st.s2_plus),
                num(st.s2_minus),
                num(res),
            ]);
        }
    }
    out.csv(
        "closure.csv",
        &[
            "r_plus",
            "r_minus",
            "rho_plus",
            "rho_minus",
            "alpha_plus",
            "alpha_minus",
            "pressure",
            "c2",
            "s2_plus",
            "s2_minus",
            "residual",
        ],
        rows,
    )?;
    let checks = vec![
        Check::new("closure-residual", worst_res <= 1e-12, format!("max relative residual {worst_res:e}")),
        Check::new("volume-fractions", worst_alpha <= 1e-12, format!("max |alpha+ + alpha- - 1| = {worst_alpha:e}")),
    ];
    Ok(Outcome::new(checks, Vec::new()))
}

/// Columns of `e^{tM}` for the 2×2 mode matrix by adaptive Runge-Kutta integration.
fn green_by_ode(nu: f64, k: f64, t: f64) -> Result<[[f64; 2]; 2]> {
    let m = mode_matrix(nu, k);
    let mut g = [[0.0; 2]; 2];
    for col in 0..2 {
        let mut y0 = [Complex64::new(0.0, 0.0); 2];
        y0[col] = Complex64::new(1.0, 0.0);
        let y = twofluid::ode::integrate(
            |_, y, dy| {
                dy[0] = y[0] * m[0][0] + y[1] * m[0][1];
                dy[1] = y[0] * m[1][0] + y[1] * m[1][1];
            },
            0.0,
            &y0,
            t,
            1e-12,
            1e-14,
        )?;
        g[0][col] = y[0].re;
        g[1][col] = y[1].re;
    }
    Ok(g)
}

pub fn green(s: &Settings, out: &mut Output) -> Result<Outcome> {
    let tol = s.f64("green", "tolerance");
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut worst_identity = 0.0f64;
    for &nu in &s.floats("green", "nus") {
        for &k in &s.floats("green", "ks") {
            for &t in &s.floats("green", "ts") {
                let g = green_2x2(nu, k, t)?;
                let o = green_by_ode(nu, k, t)?;
                let err = (0..2)
                    .flat_map(|i| (0..2).map(move |j| (i, j)))
                    .map(|(i, j)| (g.entries[i][j] - o[i][j]).abs())
                    .fold(0.0, f64::max);
                worst = worst.max(err);
                if t == 0.0 {
                    let id = [[1.0, 0.0], [0.0, 1.0]];
                    for i in 0..2 {
                        for j in 0..2 {
                            worst_identity = worst_identity.max((g.entries[i][j] - id[i][j]).abs());
                        }
                    }
                }
                rows.push(vec![
                    num(nu),
                    num(k),
                    num(t),
                    g.branch.name().to_string(),
                    num(g.entries[0][0]),
                    num(g.entries[0][1]),
                    num(g.entries[1][0]),
                    num(g.entries[1][1]),
                    num(err),
                ]);
            }
        }
    }
    out.csv("green.csv", &["nu", "k", "t", "branch", "g11", "g12", "g21", "g22", "oracle_error"], rows)?;

    let mut cont = 0.0f64;
    for &k in &s.floats("green", "ks") {
        for &t in &s.floats("green", "ts") {
            let lo = green_2x2((4.0f64 - 1e-6).sqrt(), k, t)?;
            let hi = green_2x2((4.0f64 + 1e-6).sqrt(), k, t)?;
            for i in 0..2 {
                for j in 0..2 {
                    cont = cont.max((lo.entries[i][j] - hi.entries[i][j]).abs());
                }
            }
        }
    }

    let (k_min, k_max) = (s.f64("green", "k_min"), s.f64("green", "k_max"));
    let nk = s.usize("green", "k_samples")?.max(2);
    let ks: Vec<f64> = (0..nk).map(|i| k_min * (k_max / k_min).powf(i as f64 / (nk - 1) as f64)).collect();
    let (t_max, t_step) = (s.f64("green", "t_max"), s.f64("green", "t_step"));
    if !(t_step > 0.0 && t_max > 0.0 && k_min > 0.0 && k_max > k_min) {
        return Err(ConfigError("green envelope needs 0 < k_min < k_max and positive t_max, t_step".into()).into());
    }
    let ts: Vec<f64> = (0..=((t_max / t_step).round() as usize)).map(|i| i as f64 * t_step).collect();
    let limit = s.f64("green", "prefactor_limit");
    let mut env_rows = Vec::new();
    let mut checks = vec![
        Check::new("green-oracle", worst <= tol, format!("max entry error {worst:e} (limit {tol:e})")),
        Check::new("green-identity", worst_identity <= 1e-12, format!("max |G(0) - I| = {worst_identity:e}")),
        Check::new("branch-continuity", cont <= 1e-4, format!("max jump across nu^2 - 4 = +-1e-6: {cont:e}")),
    ];
    for &nu in &s.floats("green", "nus") {
        match fit_decay_envelope(&EnvelopeSource::Green { nu }, &ks, &ts) {
            Ok(e) => {
                let pass = e.theta > 0.0 && e.prefactor < limit;
                env_rows.push(vec![num(nu), num(e.theta), num(e.prefactor), pass.to_string()]);
                checks.push(Check::new(
                    format!("envelope-nu-{nu}"),
                    pass,
                    format!("theta = {}, C = {}", e.theta, e.prefactor),
                ));
            }
            Err(twofluid::Error::VerificationFailure(msg)) => {
                env_rows.push(vec![num(nu), "nan".into(), "nan".into(), "false".into()]);
                checks.push(Check::new(format!("envelope-nu-{nu}"), false, msg));
            }
            Err(e) => return Err(e.into()),
        }
    }
    out.csv("envelope.csv", &["nu", "theta", "prefactor", "pass"], env_rows)?;
    Ok(Outcome::new(checks, Vec::new()))
}

fn log_times(s: &Settings) -> Result<Vec<f64>> {
    let (lo, hi) = (s.f64("decay", "t_min"), s.f64("decay", "t_max"));
    let per = s.usize("decay", "per_decade")?;
    if !(lo > 0.0 && hi > lo && per > 0) {
        return Err(ConfigError("decay sampling needs 0 < t_min < t_max and per_decade > 0".into()).into());
    }
    let n = ((hi / lo).log10() * per as f64).round() as usize;
    Ok((0..=n).map(|i| lo * (hi / lo).powf(i as f64 / n as f64)).collect())
}

fn window(s: &Settings, times: &[f64], series: &NormSeries) -> (f64, f64) {
    let (lo, hi) = (s.f64("decay", "window_lo"), s.f64("decay", "window_hi"));
    if lo > 0.0 && hi > lo {
        (lo, hi)
    } else {
        default_window(times, saturation_time(series))
    }
}

fn low_besov(series: &NormSeries, k: usize, s: f64) -> f64 {
    series.u2[k]
        .iter()
        .enumerate()
        .filter(|(i, _)| series.j_min + *i as i32 <= series.j0)
        .map(|(i, b)| ((series.j_min + i as i32) as f64 * s).exp2() * b)
        .sum()
}

/// Fitted low-frequency decay rates per regularity, plus the `L²` rate when recorded.
fn rate_rows(s: &Settings, series: &NormSeries, tol_scale: f64) -> Result<(Vec<Vec<String>>, Vec<Check>)> {
    let dc = decay_config(s)?;
    let n = dc.dim as f64;
    let win = window(s, &series.times, series);
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut push =
        |label: String, predicted: f64, values: &[f64], tol: f64, rows: &mut Vec<Vec<String>>| -> Result<()> {
            let fit = fit_decay(&series.times, values, win)?;
            let err = (fit.slope - predicted).abs();
            let pass = err <= tol;
            rows.push(vec![
                label.clone(),
                num(dc.p),
                num(predicted),
                num(fit.slope),
                num(err),
                num(win.0),
                num(win.1),
                if pass { "pass".into() } else { "fail".into() },
            ]);
            checks.push(Check::new(
                format!("rate-{label}"),
                pass,
                format!("fitted {} vs predicted {predicted} (tol {tol})", fit.slope),
            ));
            Ok(())
        };
    for &sv in &s.floats("decay", "s_values") {
        if !(sv > -dc.s0 && sv <= n / 2.0 + 1.0) {
            return Err(ConfigError(format!("decay.s_values entry {sv} lies outside (-s0, N/2 + 1]")).into());
        }
        let tol = if (sv - (n / 2.0 + 1.0)).abs() < 1e-12 {
            s.f64("decay", "tolerance_top")
        } else {
            s.f64("decay", "tolerance")
        };
        let values: Vec<f64> = (0..series.times.len()).map(|k| low_besov(series, k, sv)).collect();
        push(num(sv), -(sv + dc.s0) / 2.0, &values, tol * tol_scale, &mut rows)?;
    }
    if let (Some(l2), Some(rate)) = (&series.l2, corollary_targets(&dc, 0.0).l2_rate) {
        push("l2".into(), rate, l2, s.f64("decay", "tolerance") * tol_scale, &mut rows)?;
    }
    Ok((rows, checks))
}

const RATE_HEADER: [&str; 8] = ["s", "p", "predicted", "fitted", "abs_error", "window_lo", "window_hi", "verdict"];

fn linear_series(s: &Settings) -> Result<NormSeries> {
    let d = dim(s)?;
    let p = s.f64("decay", "p");
    let times = log_times(s)?;
    let gen = Generator::TwoFluid(coefficients(s)?);
    let blocks = radial_block_norms(&gen, d, &RadialProfile::borderline(d, p), &times)?;
    Ok(NormSeries::from_radial(&blocks, s.i64("grid", "j0") as i32))
}

pub fn linear_decay(s: &Settings, out: &mut Output) -> Result<Outcome> {
    let series = linear_series(s)?;
    let (rows, checks) = rate_rows(s, &series, 1.0)?;
    out.csv("linear_decay.csv", &RATE_HEADER, rows)?;
    Ok(Outcome::new(checks, Vec::new()))
}

fn functional_rows(s: &Settings, series: &NormSeries, out: &mut Output) -> Result<Vec<(String, f64)>> {
    let dc = decay_config(s)?;
    let x = functional_x(series, &dc)?;
    let d = functional_d(series, &dc)?;
    let rows = (0..series.times.len()).map(|k| {
        vec![num(series.times[k]), num(x[k]), num(d.values[k]), num(d.low[k]), num(d.high[k]), num(d.ratio[k])]
    });
    out.csv("functionals.csv", &["t", "x", "d", "d_low", "d_high", "d_ratio"], rows)?;
    let sup = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    Ok(vec![
        ("d0".into(), d.d0),
        ("high0".into(), d.high0),
        ("sup_x".into(), sup(&x)),
        ("sup_d".into(), sup(&d.values)),
        ("sup_d_ratio".into(), sup(&d.ratio)),
    ])
}

fn simulation(s: &Settings, out: &mut Output) -> Result<(Trajectory, RunConfig)> {
    let cfg = run_config(s)?;
    let tr = run(&cfg)?;
    if cfg.keep_states {
        let dir = out.path("snapshots");
        std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for (i, st) in tr.states.iter().enumerate() {
            let name = format!("snapshots/state_{i:05}.bin");
            write_snapshot(&out.path(&name), st)?;
            out.note_file(name);
        }
    }
    Ok((tr, cfg))
}

fn status_failure(tr: &Trajectory) -> Option<(ErrorClass, String)> {
    match &tr.status {
        RunStatus::Completed => None,
        RunStatus::Failed { class, message, .. } => Some((*class, message.clone())),
    }
}

pub fn simulate(s: &Settings, out: &mut Output) -> Result<Outcome> {
    let (tr, cfg) = simulation(s, out)?;
    let series = &tr.series;
    let l2 = series.l2.clone().unwrap_or_default();
    let rows =
        (0..series.times.len()).map(|k| vec![num(series.times[k]), num(l2[k]), num(tr.mass[k].0), num(tr.mass[k].1)]);
    out.csv("norms.csv", &["t", "l2", "mass_plus", "mass_minus"], rows)?;
    let mut block_rows = Vec::new();
    for (k, &t) in series.times.iter().enumerate() {
        for (name, ch) in
            [("u2", &series.u2), ("u_p", &series.u_p), ("c_p", &series.c_p), ("gradc_u_p", &series.gradc_u_p)]
        {
            for (i, v) in ch[k].iter().enumerate() {
                block_rows.push(vec![num(t), format!("{name}_q{}", series.j_min + i as i32), num(*v)]);
            }
        }
    }
    out.csv("blocks.csv", &["t", "norm_id", "value"], block_rows)?;
    let vol = cfg.length.powi(cfg.dim as i32);
    let drift = tr
        .mass
        .iter()
        .map(|(p, m)| {
            ((p - tr.mass[0].0) / (vol + tr.mass[0].0)).abs().max(((m - tr.mass[0].1) / (vol + tr.mass[0].1)).abs())
        })
        .fold(0.0, f64::max);
    let steps_factor = (tr.steps as f64 / 100.0).max(1.0);
    let mut checks = vec![Check::new(
        "mass-conservation",
        drift <= 1e-10 * steps_factor,
        format!("max relative mass drift {drift:e} over {} steps", tr.steps),
    )];
    checks.push(Check::new("run-completed", tr.status == RunStatus::Completed, format!("{:?}", tr.status)));
    let derived = vec![
        ("steps".into(), tr.steps as f64),
        ("rejections".into(), tr.rejections as f64),
        ("max_cfl".into(), tr.max_cfl),
        ("final_time".into(), tr.final_state.time),
    ];
    Ok(Outcome { checks, derived, failure: status_failure(&tr) })
}

pub fn decay_report(s: &Settings, out: &mut Output) -> Result<Outcome> {
    let source = s.str("decay", "source").to_string();
    let (series, failure, tol_scale) = match source.as_str() {
        "linear" => (linear_series(s)?, None, 1.0),
        "simulate" => {
            let (tr, _) = simulation(s, out)?;
            let f = status_failure(&tr);
            (tr.series, f, 3.0)
        }
        other => return Err(ConfigError(format!("decay.source must be linear or simulate, got '{other}'")).into()),
    };
    let derived = functional_rows(s, &series, out)?;
    let (rows, checks) = rate_rows(s, &series, tol_scale)?;
    out.csv("rates.csv", &RATE_HEADER, rows)?;
    Ok(Outcome { checks, derived, failure })
}

pub fn lp_check(s: &Settings, out: &mut Output, seed: u64) -> Result<Outcome> {
    let d = dim(s)?;
    let grid = Grid::new(d, s.usize("grid", "points")?, s.f64("grid", "length"))?;
    let bank = build_filter_bank(&grid, s.i64("grid", "j0") as i32)?;
    let (lo, hi) = (bank.j_min(), bank.j_max());
    let (a, b) = (4.0 / 3.0 * (lo as f64).exp2(), 1.5 * (hi as f64).exp2());
    let mut partition = 0.0f64;
    for i in 0..grid.len() {
        let k = grid.kmag(i);
        if k >= a && k <= b {
            let total: f64 = bank.shells().map(|j| bank.table(j).map(|t| t[i]).unwrap_or(0.0)).sum();
            partition = partition.max((total - 1.0).abs());
        }
    }
    let p = s.f64("decay", "p");
    let mut cases = vec![
        InequalityCase::BernsteinUp { q: lo + 1, p },
        InequalityCase::BernsteinDown { q: lo + 1, p },
        InequalityCase::ProductPositiveS { s: 0.5, p, r: 1.0 },
        InequalityCase::ProductSumIndex { s1: 0.5 * d as f64 / p, s2: 0.5 * d as f64 / p, p, r: 1.0 },
        InequalityCase::Paraproduct { s: 0.5, p },
        InequalityCase::Remainder { s: 0.5, p },
        InequalityCase::MixedLowHigh { sigma: 0.5, p, n0: 1 },
    ];
    cases.retain(|c| c.validate(d).is_ok());
    let samples = s.usize("lp", "samples")?;
    let limit = s.f64("lp", "ratio_limit");
    let mut params = init_params(s)?;
    params.kind = InitKind::RandomBand;
    params.amplitude = 0.5;
    params.weights = [1.0; 4];
    let mut rows = Vec::new();
    let mut worst: Vec<f64> = vec![0.0; cases.len()];
    for sample in 0..samples {
        let st = init_data(&params, &grid, seed.wrapping_add(sample as u64))?;
        for (ci, case) in cases.iter().enumerate() {
            let r = check_inequality(case, &st.c_plus, &st.c_minus, &bank)?;
            worst[ci] = if r.is_finite() { worst[ci].max(r) } else { f64::INFINITY };
            rows.push(vec![case.name().to_string(), sample.to_string(), num(r)]);
        }
    }
    out.csv("lp_check.csv", &["case", "sample", "ratio"], rows)?;
    let mut checks = vec![Check::new(
        "partition-of-unity",
        partition <= 1e-10,
        format!("max |sum phi_j - 1| = {partition:e} on covered annuli"),
    )];
    for (case, w) in cases.iter().zip(&worst) {
        checks.push(Check::new(
            format!("estimate-{}", case.name()),
            *w <= limit,
            format!("max ratio {w} (limit {limit})"),
        ));
    }
    Ok(Outcome::new(checks, Vec::new()))
}
