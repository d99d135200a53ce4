//! Adaptive Dormand-Prince 5(4) integration of complex ODE systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Integrates `y' = f(t, y)` from `t0` to `t1` with mixed tolerance `atol + rtol |y|`.
pub fn integrate<F>(mut f: F, t0: f64, y0: &[Complex64], t1: f64, rtol: f64, atol: f64) -> Result<Vec<Complex64>>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    if t1 == t0 {
        return Ok(y);
    }
    let dir = (t1 - t0).signum();
    let mut t = t0;
    let mut h = dir * (1e-3 * (t1 - t0).abs()).min(0.1);
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); n]; 7];
    let mut stage = vec![Complex64::default(); n];
    f(t, &y, &mut k[0]);
    for _ in 0..10_000_000 {
        if (t1 - t) * dir <= 0.0 {
            return Ok(y);
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += kj[i] * (h * A[s][j]);
                }
                stage[i] = acc;
            }
            let (done, rest) = k.split_at_mut(s);
            let _ = done;
            f(t + C[s] * h, &stage, &mut rest[0]);
        }
        let mut err = 0.0f64;
        for i in 0..n {
            let mut d = Complex64::default();
            for s in 0..7 {
                d += k[s][i] * (h * (B5[s] - B4[s]));
            }
            let scale = atol + rtol * y[i].norm().max(stage[i].norm());
            err = err.max(d.norm() / scale);
        }
        if !err.is_finite() {
            return Err(Error::NoConvergence(format!("ODE solution became non-finite near t = {t}")));
        }
        if err <= 1.0 {
            t += h;
            y.copy_from_slice(&stage);
            k.swap(0, 6);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::NoConvergence(format!("ODE step size underflow at t = {t}")));
        }
    }
    Err(Error::NoConvergence("ODE step budget exhausted".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let y0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let y = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &y0,
            10.0,
            1e-12,
            1e-14,
        )
        .unwrap();
        assert!((y[0].re - 10.0f64.cos()).abs() < 1e-10);
        assert!((y[1].re + 10.0f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn complex_rotation() {
        let y = integrate(
            |_, y, dy| dy[0] = Complex64::new(-0.5, 2.0) * y[0],
            0.0,
            &[Complex64::new(1.0, 0.0)],
            3.0,
            1e-12,
            1e-14,
        )
        .unwrap();
        let exact = (Complex64::new(-0.5, 2.0) * 3.0).exp();
        assert!((y[0] - exact).norm() < 1e-10);
    }
}
