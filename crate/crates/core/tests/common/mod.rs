#![allow(dead_code)]

use std::path::Path;

/// Frozen reference values.
pub fn golden() -> toml::Table {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden.toml");
    std::fs::read_to_string(path).unwrap().parse().unwrap()
}

pub fn g(t: &toml::Table, path: &str) -> f64 {
    let mut v: &toml::Value = &t[path.split('.').next().unwrap()];
    for part in path.split('.').skip(1) {
        v = &v[part];
    }
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64)).unwrap_or_else(|| panic!("{path} is not a number"))
}

/// Classical fixed-step RK4 for `y' = A y` on a dense real matrix; returns `e^{tA}` column by column.
pub fn rk4_exp(a: &[Vec<f64>], t: f64, steps: usize) -> Vec<Vec<f64>> {
    let n = a.len();
    let mul = |y: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| a[i][j] * y[j]).sum()).collect() };
    let h = t / steps as f64;
    let mut out = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut y = vec![0.0; n];
        y[col] = 1.0;
        for _ in 0..steps {
            let k1 = mul(&y);
            let y2: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k1[i]).collect();
            let k2 = mul(&y2);
            let y3: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k2[i]).collect();
            let k3 = mul(&y3);
            let y4: Vec<f64> = (0..n).map(|i| y[i] + h * k3[i]).collect();
            let k4 = mul(&y4);
            for i in 0..n {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        for i in 0..n {
            out[i][col] = y[i];
        }
    }
    out
}

/// `e^{t M}` of the 2×2 mode system by RK4 with step about `2e-4 / k²`.
pub fn green_oracle(nu: f64, k: f64, t: f64) -> [[f64; 2]; 2] {
    let m = twofluid::linear_green::mode_matrix(nu, k);
    let steps = ((t * k * k * nu.max(1.0) / 2e-4).ceil() as usize).max(1);
    let e = rk4_exp(&[m[0].to_vec(), m[1].to_vec()], t, steps);
    [[e[0][0], e[0][1]], [e[1][0], e[1][1]]]
}

/// Closure root by sign-change scan and plain bisection.
pub fn bisect_closure(r_plus: f64, r_minus: f64, g_plus: f64, g_minus: f64) -> f64 {
    let phi = |rho: f64| rho.powf(g_plus) - (r_minus * rho / (rho - r_plus)).powf(g_minus);
    let scan: Vec<f64> = (1..=10_000).map(|i| r_plus + i as f64 * 1e-3 * r_plus).collect();
    let w = scan.windows(2).find(|w| phi(w[0]) < 0.0 && phi(w[1]) >= 0.0).expect("sign change");
    let (mut lo, mut hi) = (w[0], w[1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
