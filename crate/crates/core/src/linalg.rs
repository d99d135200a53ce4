//! Small dense complex linear algebra: eigendecomposition, Padé exponential and
//! reusable per-mode propagators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Condition number above which the eigenbasis is not trusted.
pub const CONDITION_LIMIT: f64 = 1e8;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `e^z − 1` without cancellation near zero.
pub fn expm1_complex(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let half = (0.5 * y).sin();
    Complex64::new(x.exp_m1() * y.cos() - 2.0 * half * half, x.exp() * y.sin())
}

/// Eigenvalues and right eigenvectors of a square complex matrix.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: CVector,
    pub vectors: CMatrix,
    pub inverse: CMatrix,
    pub condition: f64,
}

/// Complex Schur form followed by triangular back-substitution.
/// Returns `None` when the eigenvector matrix is singular.
pub fn eigen(a: &CMatrix) -> Option<EigenSystem> {
    let n = a.nrows();
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), 1e-15, 10_000)?;
    let (q, t) = schur.unpack();
    let scale = t.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(f64::MIN_POSITIVE);
    let small = scale * f64::EPSILON;
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = ONE;
        for i in (0..k).rev() {
            let mut acc = ZERO;
            for j in i + 1..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < small {
                d = Complex64::new(small, 0.0);
            }
            y[(i, k)] = -acc / d;
        }
    }
    let mut v = q * y;
    for mut col in v.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= Complex64::new(norm, 0.0);
        }
    }
    let condition = match v.clone().try_svd(false, false, f64::EPSILON, 10_000) {
        Some(svd) => {
            let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
            if smin > 0.0 {
                smax / smin
            } else {
                f64::INFINITY
            }
        }
        None => f64::INFINITY,
    };
    let inverse = v.clone().try_inverse()?;
    let values = CVector::from_iterator(n, (0..n).map(|k| t[(k, k)]));
    Some(EigenSystem { values, vectors: v, inverse, condition })
}

fn one_norm(a: &CMatrix) -> f64 {
    a.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by degree-13 Padé approximation with scaling and squaring.
pub fn expm(a: &CMatrix) -> CMatrix {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a * Complex64::new((-squarings as f64).exp2(), 0.0);
    let id = CMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let c = |x: f64| Complex64::new(x, 0.0);
    let u_inner = &a6 * (&a6 * c(B[13]) + &a4 * c(B[11]) + &a2 * c(B[9]))
        + &a6 * c(B[7])
        + &a4 * c(B[5])
        + &a2 * c(B[3])
        + &id * c(B[1]);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * c(B[12]) + &a4 * c(B[10]) + &a2 * c(B[8]))
        + &a6 * c(B[6])
        + &a4 * c(B[4])
        + &a2 * c(B[2])
        + &id * c(B[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Pade denominator is nonsingular after scaling");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// `∫_0^h e^{sA} ds = h φ₁(hA)` via the exponential of an augmented matrix.
pub fn phi1_integral(a: &CMatrix, h: f64) -> CMatrix {
    let n = a.nrows();
    let mut aug = CMatrix::zeros(2 * n, 2 * n);
    let hc = Complex64::new(h, 0.0);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * hc));
    for i in 0..n {
        aug[(i, n + i)] = hc;
    }
    expm(&aug).view((0, n), (n, n)).into_owned()
}

/// Reusable propagator `t ↦ e^{tA}` for one fixed matrix.
///
/// Uses the eigenbasis when its condition number is at most [`CONDITION_LIMIT`] and
/// falls back to Padé scaling-and-squaring otherwise.
#[derive(Debug, Clone)]
pub struct ModePropagator {
    matrix: CMatrix,
    eigen: Option<EigenSystem>,
}

impl ModePropagator {
    pub fn new(matrix: CMatrix) -> Self {
        assert!(matrix.is_square(), "propagator needs a square matrix");
        let eigen = eigen(&matrix).filter(|e| e.condition.is_finite() && e.condition <= CONDITION_LIMIT);
        ModePropagator { matrix, eigen }
    }

    /// Forces the Padé path (used to cross-check the eigenbasis).
    pub fn without_eigenbasis(matrix: CMatrix) -> Self {
        ModePropagator { matrix, eigen: None }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigensystem(&self) -> Option<&EigenSystem> {
        self.eigen.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `e^{tA}`.
    pub fn exp(&self, t: f64) -> CMatrix {
        match &self.eigen {
            Some(e) => {
                let d = e.values.map(|l| (l * t).exp());
                scale_columns(&e.vectors, &d) * &e.inverse
            }
            None => expm(&(&self.matrix * Complex64::new(t, 0.0))),
        }
    }

    /// `∫_0^h e^{sA} ds`.
    pub fn phi1_integral(&self, h: f64) -> CMatrix {
        match &self.eigen {
            Some(e) => {
                let d =
                    e.values.map(
                        |l| {
                            if l.norm() * h < 1e-300 {
                                Complex64::new(h, 0.0)
                            } else {
                                expm1_complex(l * h) / l
                            }
                        },
                    );
                scale_columns(&e.vectors, &d) * &e.inverse
            }
            None => phi1_integral(&self.matrix, h),
        }
    }

    /// Coordinates of `v` in the eigenbasis, for repeated [`Self::apply_coords`] calls.
    pub fn coords(&self, v: &CVector) -> Option<CVector> {
        self.eigen.as_ref().map(|e| &e.inverse * v)
    }

    /// `e^{tA} v`, reusing precomputed eigen-coordinates when available.
    pub fn apply(&self, t: f64, v: &CVector) -> CVector {
        match &self.eigen {
            Some(e) => {
                let w = &e.inverse * v;
                self.apply_coords(t, &w)
            }
            None => self.exp(t) * v,
        }
    }

    /// `Σ_k e^{tλ_k} w_k v_k` for eigen-coordinates `w`.
    pub fn apply_coords(&self, t: f64, w: &CVector) -> CVector {
        let e = self.eigen.as_ref().expect("eigen-coordinates need an eigenbasis");
        let d = CVector::from_iterator(w.len(), e.values.iter().zip(w.iter()).map(|(l, wk)| (l * t).exp() * wk));
        &e.vectors * d
    }
}

fn scale_columns(v: &CMatrix, d: &CVector) -> CMatrix {
    let mut out = v.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= d[j];
    }
    out
}

/// Largest singular value.
pub fn operator_norm(a: &CMatrix) -> f64 {
    if let Some(svd) = a.clone().try_svd(false, false, f64::EPSILON, 10_000) {
        return svd.singular_values.max();
    }
    match (a.adjoint() * a).try_symmetric_eigen(f64::EPSILON, 10_000) {
        Some(e) => e.eigenvalues.max().max(0.0).sqrt(),
        None => f64::NAN,
    }
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Real matrix lifted to complex entries.
pub fn complexify(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)))
}
