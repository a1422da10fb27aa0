//! Dense complex linear algebra for one and two qubits.
//!
//! Everything here is fixed-size: 2×2 single-qubit operators, 4×4 two-qubit
//! operators, and kets over the ordered product basis `HH, HV, VH, VV`.
//! Subsystem `a` is always the left tensor factor (the slow index).

#![allow(clippy::needless_range_loop)]

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance for algebraic identities (hermiticity, normalization, traces).
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Tolerance for eigen-residuals.
pub const EIGEN_TOL: f64 = 1e-9;

const JACOBI_OFF_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix2(pub [[Complex64; 2]; 2]);

/// A 4×4 complex matrix, row-major over `HH, HV, VH, VV`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix4(pub [[Complex64; 4]; 4]);

impl ComplexMatrix2 {
    pub const fn zeros() -> Self {
        Self([[ZERO; 2]; 2])
    }

    pub const fn identity() -> Self {
        Self([[ONE, ZERO], [ZERO, ONE]])
    }

    /// Pauli X.
    pub const fn pauli_x() -> Self {
        Self([[ZERO, ONE], [ONE, ZERO]])
    }

    /// Pauli Z (`|H⟩` is the +1 eigenvector).
    pub const fn pauli_z() -> Self {
        Self([[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]])
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Self([[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]])
    }

    /// `|u⟩⟨v|`
    pub fn outer(u: &[Complex64; 2], v: &[Complex64; 2]) -> Self {
        let mut out = Self::zeros();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = u[i] * v[j].conj();
            }
        }
        out
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|z| *z *= k);
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }
}

impl Add for ComplexMatrix2 {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *a += b;
        }
        self
    }
}

impl Sub for ComplexMatrix2 {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *a -= b;
        }
        self
    }
}

impl Mul for ComplexMatrix2 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = (0..2).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        out
    }
}

impl ComplexMatrix4 {
    pub const fn zeros() -> Self {
        Self([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut out = Self::zeros();
        (0..4).for_each(|i| out.0[i][i] = ONE);
        out
    }

    pub fn diagonal(d: [f64; 4]) -> Self {
        let mut out = Self::zeros();
        (0..4).for_each(|i| out.0[i][i] = c(d[i]));
        out
    }

    /// `|u⟩⟨u|` for a two-qubit ket.
    pub fn projector(psi: &TwoQubitKet) -> Self {
        let mut out = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = psi.0[i] * psi.0[j].conj();
            }
        }
        out
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|z| *z *= k);
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `|M - M†|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_defect() <= ALGEBRA_TOL
    }

    fn ensure_hermitian(&self) -> Result<()> {
        let defect = self.hermitian_defect();
        if defect > ALGEBRA_TOL {
            return Err(Error::NotHermitian {
                max_asymmetry: defect,
            });
        }
        Ok(())
    }

    pub fn apply(&self, psi: &TwoQubitKet) -> [Complex64; 4] {
        let mut out = [ZERO; 4];
        for (i, row) in self.0.iter().enumerate() {
            out[i] = row.iter().zip(psi.0.iter()).map(|(m, v)| m * v).sum();
        }
        out
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> [Complex64; 4] {
        [self.0[0][j], self.0[1][j], self.0[2][j], self.0[3][j]]
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    acc += self.0[i][j].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }
}

impl Add for ComplexMatrix4 {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *a += b;
        }
        self
    }
}

impl Sub for ComplexMatrix4 {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *a -= b;
        }
        self
    }
}

impl Mul for ComplexMatrix4 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = (0..4).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        out
    }
}

/// Kronecker product `a ⊗ b`; `a` indexes the slow (left) factor.
pub fn tensor(a: &ComplexMatrix2, b: &ComplexMatrix2) -> ComplexMatrix4 {
    let mut out = ComplexMatrix4::zeros();
    for i1 in 0..2 {
        for j1 in 0..2 {
            for i2 in 0..2 {
                for j2 in 0..2 {
                    out.0[2 * i1 + i2][2 * j1 + j2] = a.0[i1][j1] * b.0[i2][j2];
                }
            }
        }
    }
    out
}

/// A normalized pure state of two qubits over `HH, HV, VH, VV`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitKet([Complex64; 4]);

impl TwoQubitKet {
    /// Wraps amplitudes that are already normalized.
    pub fn new(amplitudes: [Complex64; 4]) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > ALGEBRA_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self(amplitudes))
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: [Complex64; 4]) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self(amplitudes.map(|z| z / norm)))
    }

    pub fn from_real(amplitudes: [f64; 4]) -> Result<Self> {
        Self::new(amplitudes.map(c))
    }

    /// Product state `|u⟩_a |v⟩_b`.
    pub fn product(u: &[Complex64; 2], v: &[Complex64; 2]) -> Result<Self> {
        Self::new([u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1]])
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.0
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// A two-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4(ComplexMatrix4);

impl DensityMatrix4 {
    /// Validates hermiticity, unit trace and positivity (eigenvalues ≥ −1e−10).
    pub fn new(m: ComplexMatrix4) -> Result<Self> {
        m.ensure_hermitian()?;
        let trace = m.trace();
        if (trace - ONE).norm() > ALGEBRA_TOL {
            return Err(Error::InvalidDensity(format!("trace is {trace}")));
        }
        let spectrum = herm_eigenvalues(&m)?;
        if spectrum[0] < -1e-10 {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {}",
                spectrum[0]
            )));
        }
        Ok(Self(m))
    }

    pub fn pure(psi: &TwoQubitKet) -> Self {
        Self(ComplexMatrix4::projector(psi))
    }

    pub fn maximally_mixed() -> Self {
        Self(ComplexMatrix4::identity().scale(0.25))
    }

    pub fn matrix(&self) -> &ComplexMatrix4 {
        &self.0
    }
}

fn real_part_checked(z: Complex64) -> Result<f64> {
    if z.im.abs() > ALGEBRA_TOL {
        return Err(Error::ImaginaryResidue { imag: z.im });
    }
    Ok(z.re)
}

/// `⟨ψ|M|ψ⟩` for Hermitian `M`.
pub fn expectation(psi: &TwoQubitKet, m: &ComplexMatrix4) -> Result<f64> {
    m.ensure_hermitian()?;
    let m_psi = m.apply(psi);
    let z: Complex64 = psi
        .0
        .iter()
        .zip(m_psi.iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    real_part_checked(z)
}

/// `Tr(ρM)` for Hermitian `M`.
pub fn trace_expectation(rho: &DensityMatrix4, m: &ComplexMatrix4) -> Result<f64> {
    m.ensure_hermitian()?;
    let mut z = ZERO;
    for i in 0..4 {
        for k in 0..4 {
            z += rho.0 .0[i][k] * m.0[k][i];
        }
    }
    real_part_checked(z)
}

/// Eigen-decomposition of a Hermitian 4×4 matrix.
#[derive(Debug, Clone, Copy)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: [f64; 4],
    /// Unitary whose column `k` is the eigenvector for `values[k]`.
    pub vectors: ComplexMatrix4,
    pub sweeps: usize,
}

impl HermitianEigen {
    /// Largest `‖M v − λ v‖` over the four pairs.
    pub fn max_residual(&self, m: &ComplexMatrix4) -> f64 {
        (0..4)
            .map(|k| {
                let v = self.vectors.column(k);
                let ket = TwoQubitKet(v);
                let mv = m.apply(&ket);
                mv.iter()
                    .zip(v.iter())
                    .map(|(a, b)| (a - b * self.values[k]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Cyclic complex Jacobi eigensolver.
///
/// Each rotation first removes the phase of the pivot `a[p][q]` with a
/// diagonal unitary, then annihilates it with a real plane rotation. Sweeps
/// stop once the off-diagonal Frobenius mass drops below
/// `1e-14 * max(1, ‖M‖_F)`; at most 100 sweeps are run.
pub fn herm_eigen(m: &ComplexMatrix4) -> Result<HermitianEigen> {
    m.ensure_hermitian()?;
    // Symmetrize so that round-off in the input does not leak into the sweep.
    let mut a = (*m + m.adjoint()).scale(0.5);
    let mut v = ComplexMatrix4::identity();
    let threshold = JACOBI_OFF_TOL * a.frobenius_norm().max(1.0);

    let mut sweeps = 0;
    while a.off_diagonal_norm() > threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_diagonal: a.off_diagonal_norm(),
            });
        }
        sweeps += 1;
        for p in 0..3 {
            for q in (p + 1)..4 {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order = [0usize, 1, 2, 3];
    let diag = [a.0[0][0].re, a.0[1][1].re, a.0[2][2].re, a.0[3][3].re];
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));

    let mut values = [0.0; 4];
    let mut vectors = ComplexMatrix4::zeros();
    for (k, &src) in order.iter().enumerate() {
        values[k] = diag[src];
        for row in 0..4 {
            vectors.0[row][k] = v.0[row][src];
        }
    }
    Ok(HermitianEigen {
        values,
        vectors,
        sweeps,
    })
}

/// Ascending eigenvalues of a Hermitian 4×4 matrix.
pub fn herm_eigenvalues(m: &ComplexMatrix4) -> Result<[f64; 4]> {
    herm_eigen(m).map(|e| e.values)
}

fn rotate(a: &mut ComplexMatrix4, v: &mut ComplexMatrix4, p: usize, q: usize) {
    let apq = a.0[p][q];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a.0[p][p].re;
    let aqq = a.0[q][q].re;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let cs = 1.0 / (1.0 + t * t).sqrt();
    let sn = t * cs;
    // e^{-iφ} where a[p][q] = |a[p][q]| e^{iφ}
    let phase = apq.conj() / mag;

    // U acts on the (p, q) plane: columns p and q.
    let u_pp = c(cs);
    let u_pq = c(sn);
    let u_qp = phase * (-sn);
    let u_qq = phase * cs;

    // A <- A U
    for row in 0..4 {
        let ap = a.0[row][p];
        let aq = a.0[row][q];
        a.0[row][p] = ap * u_pp + aq * u_qp;
        a.0[row][q] = ap * u_pq + aq * u_qq;
    }
    // A <- U† A
    for col in 0..4 {
        let ap = a.0[p][col];
        let aq = a.0[q][col];
        a.0[p][col] = u_pp.conj() * ap + u_qp.conj() * aq;
        a.0[q][col] = u_pq.conj() * ap + u_qq.conj() * aq;
    }
    a.0[p][q] = ZERO;
    a.0[q][p] = ZERO;
    a.0[p][p] = c(a.0[p][p].re);
    a.0[q][q] = c(a.0[q][q].re);

    // V <- V U
    for row in 0..4 {
        let vp = v.0[row][p];
        let vq = v.0[row][q];
        v.0[row][p] = vp * u_pp + vq * u_qp;
        v.0[row][q] = vp * u_pq + vq * u_qq;
    }
}
