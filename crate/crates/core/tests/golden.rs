mod common;

use std::f64::consts::PI;

use common::{bisect_closure, g, golden, green_oracle};
use rand::{Rng, SeedableRng};
use twofluid::closure::{
    coeff_functions, derived_state, equilibrium_coefficients, PressureLaw, Viscosities, DEFAULT_TOL,
};
use twofluid::decay::{functional_d, DecayConfig, NormSeries};
use twofluid::grid::{Grid, SpectralField};
use twofluid::linear_green::{
    fit_decay_envelope, green_2x2, radial_block_norms, EnvelopeSource, Generator, RadialProfile,
};
use twofluid::lp_besov::{build_filter_bank, check_inequality, phi_j, BesovSpec, InequalityCase};
use twofluid::solver::{init_data, InitKind, InitParams};

fn law(gamma: f64) -> PressureLaw {
    PressureLaw::new(gamma, 1.0).unwrap()
}

fn unit_viscosities() -> Viscosities {
    Viscosities { mu_plus: 1.0, mu_minus: 1.0, lambda_plus: 0.0, lambda_minus: 0.0 }
}

#[test]
fn asymmetric_closure_root() {
    let t = golden();
    let oracle = bisect_closure(1.0, 1.0, 2.0, 1.5);
    let frozen = g(&t, "closure.asymmetric.rho_plus");
    assert!((oracle - frozen).abs() <= 1e-12, "oracle {oracle} vs frozen {frozen}");
    let st = derived_state(1.0, 1.0, &law(2.0), &law(1.5), DEFAULT_TOL).unwrap();
    assert!((st.rho_plus - frozen).abs() <= 1e-12);
    assert!((st.rho_minus - g(&t, "closure.asymmetric.rho_minus")).abs() <= 1e-12);
    assert!((st.pressure - g(&t, "closure.asymmetric.pressure")).abs() <= 1e-12);
    assert!((st.c2 - g(&t, "closure.asymmetric.c2")).abs() <= 1e-12);
}

#[test]
fn symmetric_closure_chain() {
    let t = golden();
    let st = derived_state(1.0, 1.0, &law(2.0), &law(2.0), DEFAULT_TOL).unwrap();
    // Hand chain: rho = R+ + R-, alpha = 1/2, P = rho^2, s^2 = 2P/rho, C^2 = s^2/2.
    let rho = 2.0;
    let p = rho * rho;
    let s2 = 2.0 * p / rho;
    let c2 = s2 * s2 / (0.5 * rho * s2 + 0.5 * rho * s2);
    for (got, hand, key) in [
        (st.rho_plus, rho, "rho"),
        (st.rho_minus, rho, "rho"),
        (st.alpha_plus, 0.5, "alpha"),
        (st.pressure, p, "pressure"),
        (st.s2_plus, s2, "s2"),
        (st.s2_minus, s2, "s2"),
        (st.c2, c2, "c2"),
    ] {
        assert!((got - hand).abs() <= 1e-12);
        assert!((hand - g(&t, &format!("closure.symmetric.{key}"))).abs() <= 1e-15);
    }
}

#[test]
fn symmetric_equilibrium_coefficients() {
    let t = golden();
    let co = equilibrium_coefficients(&law(2.0), &law(2.0), &unit_viscosities()).unwrap();
    let beta = g(&t, "coefficients.symmetric.beta");
    for b in [co.beta1, co.beta2, co.beta3, co.beta4] {
        assert!((b - beta).abs() <= 1e-12, "{b}");
    }
    for (v, key) in [
        (co.nu1_plus, "nu1"),
        (co.nu1_minus, "nu1"),
        (co.nu2_plus, "nu2"),
        (co.nu2_minus, "nu2"),
        (co.nu_plus, "nu"),
        (co.nu_minus, "nu"),
    ] {
        assert!((v - g(&t, &format!("coefficients.symmetric.{key}"))).abs() <= 1e-12, "{key} = {v}");
    }
    let cf = coeff_functions(0.0, 0.0, &law(2.0), &law(2.0), DEFAULT_TOL).unwrap();
    // C^2 alpha / s^2 with C^2 = 2, alpha = 1/2, s^2 = 4.
    let hand = 2.0 * 0.5 / 4.0;
    assert!((cf.h_plus - hand).abs() <= 1e-12);
    assert!((cf.k_minus - hand).abs() <= 1e-12);
    assert_eq!(hand, g(&t, "coefficients.symmetric.h_plus"));
    assert_eq!(hand, g(&t, "coefficients.symmetric.k_minus"));
}

#[test]
fn filter_bank_range_on_256_points() {
    let t = golden();
    let grid = Grid::new(2, 256, 2.0 * PI).unwrap();
    let bank = build_filter_bank(&grid, 0).unwrap();
    let active: Vec<i32> = (-10..20).filter(|&j| grid.kmags().iter().any(|&k| k > 0.0 && phi_j(j, k) > 0.0)).collect();
    let (lo, hi) = (*active.first().unwrap(), *active.last().unwrap());
    assert_eq!((lo as f64, hi as f64), (g(&t, "filter_bank.grid256.j_min"), g(&t, "filter_bank.grid256.j_max")));
    assert_eq!((bank.j_min(), bank.j_max()), (lo, hi));
}

#[test]
fn cosine_mode_block_norm() {
    let t = golden();
    let n = g(&t, "lp.cosine_mode.points") as usize;
    let grid = Grid::new(2, n, 2.0 * PI).unwrap();
    let bank = build_filter_bank(&grid, 0).unwrap();
    let j = 1;
    let k = 1.4 * 2f64.powi(j);
    // |(3, 0)| ≈ 2.8 lies inside the plateau of shell 1.
    let kx = k.round();
    assert!(phi_j(j, kx) == 1.0);
    let f = SpectralField::from_fn(&grid, |x| (kx * x[0]).cos());
    for (p, key) in [(2.0, "l2"), (4.0, "l4")] {
        let h = grid.cell_volume();
        let direct = (0..grid.len()).map(|i| (kx * grid.coordinates(i)[0]).cos().abs().powf(p)).sum::<f64>() * h;
        let direct = direct.powf(1.0 / p);
        let frozen = g(&t, &format!("lp.cosine_mode.{key}"));
        assert!((direct - frozen).abs() <= 1e-12, "{direct} vs {frozen}");
        let blocks = bank.block_norms(&f, p).unwrap();
        for (i, b) in blocks.iter().enumerate() {
            let q = bank.j_min() + i as i32;
            if q == j {
                assert!((b - frozen).abs() <= 1e-10, "block {q}: {b}");
            } else {
                assert!(b.abs() <= 1e-10, "block {q}: {b}");
            }
        }
        let s = 0.7;
        let besov = bank.besov_norm(&f, &BesovSpec::new(s, p, 1.0).unwrap()).unwrap();
        assert!((besov - 2f64.powf(j as f64 * s) * frozen).abs() <= 1e-10);
    }
}

#[test]
fn besov_l2_overlap_bounds() {
    let t = golden();
    let grid = Grid::new(2, 128, 2.0 * PI).unwrap();
    let bank = build_filter_bank(&grid, 0).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let spec = BesovSpec::new(0.0, 2.0, 2.0).unwrap();
    for _ in 0..100 {
        let mut v: Vec<f64> = (0..grid.len()).map(|_| rng.gen::<f64>() - 0.5).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter_mut().for_each(|x| *x -= mean);
        let l2 = (v.iter().map(|x| x * x).sum::<f64>() * grid.cell_volume()).sqrt();
        let f = SpectralField::from_physical(&grid, vec![v]).unwrap();
        let ratio = bank.besov_norm(&f, &spec).unwrap() / l2;
        assert!((std::f64::consts::FRAC_1_SQRT_2..=1.0 + 1e-12).contains(&ratio), "{ratio}");
        assert!(ratio >= g(&t, "lp.overlap.lower") && ratio <= g(&t, "lp.overlap.upper"), "{ratio}");
    }
}

#[test]
fn product_estimate_is_resolution_stable() {
    let t = golden();
    let case = InequalityCase::ProductPositiveS { s: 0.5, p: 2.0, r: 1.0 };
    let params = InitParams { kind: InitKind::RandomBand, amplitude: 0.5, band: (0, 2), ..Default::default() };
    let worst: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| {
            let grid = Grid::new(2, n, 2.0 * PI).unwrap();
            let bank = build_filter_bank(&grid, 0).unwrap();
            (0..20)
                .map(|seed| {
                    let st = init_data(&params, &grid, seed).unwrap();
                    check_inequality(&case, &st.c_plus, &st.c_minus, &bank).unwrap()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let lo = worst.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = worst.iter().cloned().fold(0.0, f64::max);
    assert!((hi - lo) / lo < g(&t, "lp.product_positive_s.max_spread"), "{worst:?}");
}

#[test]
fn critical_green_matrix() {
    let t = golden();
    let frozen = t["green"]["critical"]["entries"].as_array().unwrap();
    let gm = green_2x2(2.0, 1.0, 1.0).unwrap();
    let oracle = green_oracle(2.0, 1.0, 1.0);
    let e = (-1.0f64).exp();
    let hand = [[2.0 * e, e], [-e, 0.0]];
    for i in 0..2 {
        for j in 0..2 {
            let fz = frozen[i].as_array().unwrap()[j].as_float().unwrap();
            assert!((hand[i][j] - fz).abs() <= 1e-15);
            assert!((oracle[i][j] - fz).abs() <= 1e-10, "oracle {i}{j}: {}", oracle[i][j]);
            assert!((gm.entries[i][j] - fz).abs() <= 1e-12, "green {i}{j}: {}", gm.entries[i][j]);
        }
    }
}

#[test]
fn green_envelope_rate_for_unit_viscosity() {
    let t = golden();
    let ks: Vec<f64> = (0..61).map(|i| 0.25 * 16f64.powf(i as f64 / 60.0)).collect();
    let ts: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
    let env = fit_decay_envelope(&EnvelopeSource::Green { nu: 1.0 }, &ks, &ts).unwrap();
    assert!(env.theta >= g(&t, "green.envelope.theta_min_nu1"), "{}", env.theta);
    assert!(env.theta <= 0.5 + 1e-6);
}

#[test]
fn linear_d_functional_stays_bounded() {
    let t = golden();
    let co = equilibrium_coefficients(&law(2.0), &law(2.0), &unit_viscosities()).unwrap();
    let times: Vec<f64> = (0..=40).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
    let blocks = radial_block_norms(&Generator::TwoFluid(co), 2, &RadialProfile::borderline(2, 2.0), &times).unwrap();
    let series = NormSeries::from_radial(&blocks, 0);
    let d = functional_d(&series, &DecayConfig::new(2.0, 2, 0.05).unwrap()).unwrap();
    let sup = d.ratio.iter().cloned().fold(0.0, f64::max);
    assert!(sup <= g(&t, "decay.linear_symmetric.d_ratio_max"), "sup D/(D0 + high) = {sup}");
    let (head, tail) = d.values.split_at(30);
    let head_max = head.iter().cloned().fold(0.0, f64::max);
    assert!(tail.iter().all(|&v| v <= 1.05 * head_max), "D still growing over the last decade");
}
