mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use twofluid::closure::{closure_residual, derived_state, PressureLaw, DEFAULT_TOL};
use twofluid::decay::fit_decay;
use twofluid::grid::{Grid, SpectralField};
use twofluid::linear_green::{green_2x2, mode_matrix};
use twofluid::lp_besov::{build_filter_bank, phi_j};

fn law() -> impl Strategy<Value = PressureLaw> {
    (1.1f64..3.0, 0.5f64..2.0).prop_map(|(g, a)| PressureLaw::new(g, a).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closure_root_is_admissible(rp in 0.1f64..10.0, rm in 0.1f64..10.0, lp in law(), lm in law()) {
        let st = derived_state(rp, rm, &lp, &lm, DEFAULT_TOL).unwrap();
        prop_assert!(st.rho_plus > rp && st.rho_minus > rm);
        prop_assert!((st.alpha_plus + st.alpha_minus - 1.0).abs() <= 1e-14);
        prop_assert!(st.alpha_plus > 0.0 && st.alpha_minus > 0.0);
        let res = closure_residual(rp, rm, &lp, &lm, st.rho_plus);
        prop_assert!(res.abs() <= 1e-12 * st.pressure.max(1.0), "residual {res}");
        prop_assert!((lp.pressure(st.rho_plus) - lm.pressure(st.rho_minus)).abs() <= 1e-12 * st.pressure.max(1.0));
    }

    #[test]
    fn closure_is_symmetric_under_phase_swap(rp in 0.1f64..10.0, rm in 0.1f64..10.0, lp in law(), lm in law()) {
        let a = derived_state(rp, rm, &lp, &lm, DEFAULT_TOL).unwrap();
        let b = derived_state(rm, rp, &lm, &lp, DEFAULT_TOL).unwrap();
        prop_assert!((a.rho_plus - b.rho_minus).abs() <= 1e-10 * a.rho_plus);
        prop_assert!((a.rho_minus - b.rho_plus).abs() <= 1e-10 * a.rho_minus);
        prop_assert!((a.c2 - b.c2).abs() <= 1e-9 * a.c2);
    }

    #[test]
    fn symmetric_laws_give_total_mass(rp in 0.1f64..10.0, rm in 0.1f64..10.0, l in law()) {
        let st = derived_state(rp, rm, &l, &l, DEFAULT_TOL).unwrap();
        prop_assert!((st.rho_plus - (rp + rm)).abs() <= 1e-10 * (rp + rm));
    }

    #[test]
    fn pressure_differential_matches_sound_speed(rp in 0.2f64..5.0, rm in 0.2f64..5.0, lp in law(), lm in law()) {
        let st = derived_state(rp, rm, &lp, &lm, DEFAULT_TOL).unwrap();
        let h = 1e-5;
        let p = |a: f64, b: f64| derived_state(a, b, &lp, &lm, DEFAULT_TOL).unwrap().pressure;
        let dp_plus = (p(rp + h, rm) - p(rp - h, rm)) / (2.0 * h);
        let dp_minus = (p(rp, rm + h) - p(rp, rm - h)) / (2.0 * h);
        prop_assert!((dp_plus - st.c2 * st.rho_minus).abs() <= 1e-5 * (st.c2 * st.rho_minus).max(1.0));
        prop_assert!((dp_minus - st.c2 * st.rho_plus).abs() <= 1e-5 * (st.c2 * st.rho_plus).max(1.0));
    }

    #[test]
    fn dyadic_partition_of_unity(r in 1e-3f64..1e3) {
        let total: f64 = (-20..=20).map(|j| phi_j(j, r)).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        let active = (-20..=20).filter(|&j| phi_j(j, r) > 0.0).count();
        prop_assert!((1..=2).contains(&active));
        for j in -20..=20 {
            let x = r / 2f64.powi(j);
            if phi_j(j, r) > 0.0 {
                prop_assert!(x > 0.75 && x < 8.0 / 3.0);
            }
        }
    }

    #[test]
    fn green_matrix_is_a_semigroup(nu in 0.5f64..4.0, k in 0.2f64..3.0, t in 0.0f64..3.0, s in 0.0f64..3.0) {
        let a = green_2x2(nu, k, t).unwrap().entries;
        let b = green_2x2(nu, k, s).unwrap().entries;
        let c = green_2x2(nu, k, t + s).unwrap().entries;
        for i in 0..2 {
            for j in 0..2 {
                let ab = a[i][0] * b[0][j] + a[i][1] * b[1][j];
                prop_assert!((ab - c[i][j]).abs() <= 1e-10, "({i},{j}) {ab} vs {}", c[i][j]);
            }
        }
    }

    #[test]
    fn green_matrix_solves_the_mode_system(nu in 0.5f64..4.0, k in 0.2f64..3.0, t in 0.1f64..3.0) {
        let m = mode_matrix(nu, k);
        let h = 1e-5 / (k * k);
        let gp = green_2x2(nu, k, t + h).unwrap().entries;
        let gm = green_2x2(nu, k, t - h).unwrap().entries;
        let g0 = green_2x2(nu, k, t).unwrap().entries;
        for i in 0..2 {
            for j in 0..2 {
                let fd = (gp[i][j] - gm[i][j]) / (2.0 * h);
                let mg = m[i][0] * g0[0][j] + m[i][1] * g0[1][j];
                prop_assert!((fd - mg).abs() <= 1e-5 * (1.0 + k * k * nu), "({i},{j}) {fd} vs {mg}");
            }
        }
    }

    #[test]
    fn green_branches_join_continuously(k in 0.2f64..3.0, t in 0.0f64..5.0, delta in 1e-9f64..1e-6) {
        let below = green_2x2((4.0 - delta).sqrt(), k, t).unwrap().entries;
        let at = green_2x2(2.0, k, t).unwrap().entries;
        let above = green_2x2((4.0 + delta).sqrt(), k, t).unwrap().entries;
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((below[i][j] - at[i][j]).abs() <= 1e-4);
                prop_assert!((above[i][j] - at[i][j]).abs() <= 1e-4);
            }
        }
    }

    #[test]
    fn green_matches_rk4(nu in 0.5f64..4.0, k in 0.25f64..2.0, t in 0.0f64..5.0) {
        let g = green_2x2(nu, k, t).unwrap().entries;
        let o = common::green_oracle(nu, k, t);
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((g[i][j] - o[i][j]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn decay_fit_recovers_power_laws(rate in -3.0f64..0.0, c in 0.1f64..10.0) {
        let times: Vec<f64> = (0..=40).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
        let values: Vec<f64> = times.iter().map(|t| c * (1.0 + t).powf(rate)).collect();
        let fit = fit_decay(&times, &values, (10.0, 1e4)).unwrap();
        prop_assert!((fit.slope - rate).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn blocks_reconstruct_and_are_orthogonal(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let grid = Grid::new(2, 32, 2.0 * PI).unwrap();
        let bank = build_filter_bank(&grid, 0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..grid.len()).map(|_| rng.gen::<f64>() - 0.5).collect();
        let f = SpectralField::from_physical(&grid, vec![v]).unwrap();
        let blocks: Vec<SpectralField> = bank.shells().map(|j| bank.dyadic_block(&f, j).unwrap()).collect();
        let fs = &f.spectral()[0];
        for i in 1..grid.len() {
            let sum: num_complex::Complex64 = blocks.iter().map(|b| b.spectral()[0][i]).sum();
            prop_assert!((sum - fs[i]).norm() <= 1e-10 * (1.0 + fs[i].norm()));
        }
        // Blocks two or more shells apart have disjoint Fourier support.
        for a in 0..blocks.len() {
            for b in (a + 2)..blocks.len() {
                let dot: f64 = blocks[a].spectral()[0]
                    .iter()
                    .zip(&blocks[b].spectral()[0])
                    .map(|(x, y)| (x * y.conj()).norm())
                    .sum();
                prop_assert_eq!(dot, 0.0);
            }
        }
    }
}
