//! Small dense complex matrices: spin operators and Hermitian propagators.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn sigma_x() -> Matrix2<C64> {
    Matrix2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Matrix2<C64> {
    Matrix2::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> Matrix2<C64> {
    Matrix2::new(ONE, ZERO, ZERO, -ONE)
}

/// `σ_φ = cos φ σ_x + sin φ σ_y`.
pub fn sigma_phi(phi: f64) -> Matrix2<C64> {
    let e = C64::from_polar(1.0, phi);
    Matrix2::new(ZERO, e.conj(), e, ZERO)
}

pub fn to_dynamic(m: &Matrix2<C64>) -> CMat {
    CMat::from_fn(2, 2, |i, j| m[(i, j)])
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Spin-½ operators `(Iˣ, Iʸ, Iᶻ)` of every site in an `n`-spin register,
/// site 0 being the most significant factor.
pub fn spin_operators(n: usize) -> Vec<[CMat; 3]> {
    let half = C64::new(0.5, 0.0);
    let paulis = [sigma_x(), sigma_y(), sigma_z()].map(|p| to_dynamic(&p) * half);
    let eye2 = CMat::identity(2, 2);
    (0..n)
        .map(|site| {
            paulis.clone().map(|p| {
                (0..n).fold(CMat::identity(1, 1), |acc, k| {
                    kron(&acc, if k == site { &p } else { &eye2 })
                })
            })
        })
        .collect()
}

/// `‖U†U − 1‖_F`.
pub fn unitarity_error(u: &CMat) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMat::identity(n, n)).norm()
}

/// Eigendecomposition of a Hermitian generator, reused for `exp(−iHt)` at
/// any `t`.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    vectors: CMat,
    values: DVector<f64>,
}

impl HermitianEig {
    pub fn new(h: &CMat) -> Self {
        let dim = h.nrows();
        if dim == 1 {
            return Self { vectors: CMat::identity(1, 1), values: DVector::from_element(1, h[(0, 0)].re) };
        }
        let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        // the solver's vectors are unitary only to a few ulps, and that bias
        // compounds coherently over long products of propagators
        let mut vectors = eig.eigenvectors;
        for _ in 0..2 {
            for j in 0..dim {
                for k in 0..j {
                    let proj = vectors.column(k).dotc(&vectors.column(j));
                    let vk = vectors.column(k).clone_owned();
                    vectors.column_mut(j).axpy(-proj, &vk, ONE);
                }
                let n = vectors.column(j).norm();
                vectors.column_mut(j).unscale_mut(n);
            }
        }
        Self { vectors, values: eig.eigenvalues }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `exp(−iHt)`.
    pub fn propagator(&self, t: f64) -> CMat {
        let mut scaled = self.vectors.clone();
        for (j, &e) in self.values.iter().enumerate() {
            let ph = C64::from_polar(1.0, -e * t);
            for v in scaled.column_mut(j).iter_mut() {
                *v *= ph;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// `exp(−iθ n̂·σ)` for a real 3-vector `n` of length `|n|`, i.e. a rotation
/// by `2θ|n|`.
pub fn su2_exp(theta: f64, n: [f64; 3]) -> Matrix2<C64> {
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if norm == 0.0 {
        return Matrix2::identity();
    }
    let a = theta * norm;
    let (s, c) = a.sin_cos();
    let (nx, ny, nz) = (n[0] / norm, n[1] / norm, n[2] / norm);
    Matrix2::new(
        C64::new(c, -s * nz),
        C64::new(-s * ny, -s * nx),
        C64::new(s * ny, -s * nx),
        C64::new(c, s * nz),
    )
}
