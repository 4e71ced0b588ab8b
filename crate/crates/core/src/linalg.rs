//! Dense complex linear algebra on the fixed single-photon (2) and two-photon (4)
//! dimensional spaces.
//!
//! Two-photon basis vectors are ordered as the tensor product of the single-photon
//! bases with the first factor major: `(1,1), (1,2), (2,1), (2,2)`, i.e. index
//! `2 * i + k` for first-factor index `i` and second-factor index `k`.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Entrywise tolerance for accepting a matrix as Hermitian (relative to its largest entry).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `|‖ψ‖ − 1|` for a state vector.
pub const NORM_TOL: f64 = 1e-12;
/// Largest imaginary residue of `ψ†Mψ` still attributed to rounding.
pub const QUAD_FORM_IMAG_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_OFF_TOL: f64 = 1e-13;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A general 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub fn identity() -> Self {
        Mat2([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Mat2(m.map(|row| row.map(|x| C64::new(x, 0.0))))
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self::from_real([[a, 0.0], [0.0, b]])
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        d
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j];
            }
        }
        Mat2(out)
    }
}

/// A general 4×4 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4(pub [[C64; 4]; 4]);

impl Mat4 {
    pub fn zero() -> Self {
        Mat4([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            m.0[i][i] = ONE;
        }
        m
    }

    pub fn diag(d: [f64; 4]) -> Self {
        let mut m = Self::zero();
        for (i, v) in d.into_iter().enumerate() {
            m.0[i][i] = C64::new(v, 0.0);
        }
        m
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat4(self.0.map(|row| row.map(|z| z * s)))
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    pub fn mul_vec(&self, v: &[C64; 4]) -> [C64; 4] {
        let mut out = [ZERO; 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|j| self.0[i][j] * v[j]).sum();
        }
        out
    }

    /// `ψ†Mψ` without any Hermiticity assumption.
    pub fn expectation(&self, psi: &StateVec4) -> C64 {
        let mv = self.mul_vec(&psi.0);
        psi.0.iter().zip(mv.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Mat4) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for Mat4 {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat4 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl Add for Mat4 {
    type Output = Mat4;

    fn add(self, rhs: Mat4) -> Mat4 {
        let mut out = self;
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }
}

impl Sub for Mat4 {
    type Output = Mat4;

    fn sub(self, rhs: Mat4) -> Mat4 {
        self + (-rhs)
    }
}

impl Neg for Mat4 {
    type Output = Mat4;

    fn neg(self) -> Mat4 {
        Mat4(self.0.map(|row| row.map(|z| -z)))
    }
}

impl Mul for Mat4 {
    type Output = Mat4;

    fn mul(self, rhs: Mat4) -> Mat4 {
        let mut out = Mat4::zero();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..4 {
                    out.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        out
    }
}

/// Kronecker product `a ⊗ b` in the first-factor-major ordering.
pub fn tensor2x2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = Mat4::zero();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out.0[2 * i + k][2 * j + l] = a.0[i][j] * b.0[k][l];
                }
            }
        }
    }
    out
}

/// A 4×4 Hermitian matrix. Construction verifies `M = M†` and stores the exactly
/// symmetrized matrix `(M + M†)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermMat4(Mat4);

impl HermMat4 {
    pub fn new(m: Mat4) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite("Hermitian matrix entry"));
        }
        let deviation = m.max_abs_diff(&m.adjoint());
        if deviation > HERMITIAN_TOL * m.max_abs().max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(HermMat4((m + m.adjoint()).scale(0.5)))
    }

    pub fn identity() -> Self {
        HermMat4(Mat4::identity())
    }

    pub fn diag(d: [f64; 4]) -> Result<Self> {
        Self::new(Mat4::diag(d))
    }

    pub fn as_mat(&self) -> &Mat4 {
        &self.0
    }

    pub fn square(&self) -> HermMat4 {
        HermMat4::new(self.0 * self.0).expect("square of a Hermitian matrix is Hermitian")
    }

    pub fn shifted(&self, c: f64) -> HermMat4 {
        HermMat4(self.0 + Mat4::identity().scale(c))
    }
}

impl From<HermMat4> for Mat4 {
    fn from(h: HermMat4) -> Mat4 {
        h.0
    }
}

/// A unit-norm vector of the two-photon space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVec4(pub(crate) [C64; 4]);

impl StateVec4 {
    /// Accepts amplitudes that are already normalized.
    pub fn new(amps: [C64; 4]) -> Result<Self> {
        if amps.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("state amplitude"));
        }
        let norm = norm4(&amps);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(StateVec4(amps))
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amps: [C64; 4]) -> Result<Self> {
        let norm = norm4(&amps);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NotNormalized { norm });
        }
        Self::new(amps.map(|z| z / norm))
    }

    pub fn amplitudes(&self) -> &[C64; 4] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm4(&self.0)
    }

    /// `⟨self, other⟩` (conjugate-linear in `self`).
    pub fn inner(&self, other: &StateVec4) -> C64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn with_global_phase(&self, phase_rad: f64) -> StateVec4 {
        let p = C64::from_polar(1.0, phase_rad);
        StateVec4(self.0.map(|z| z * p))
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> HermMat4 {
        let mut m = Mat4::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = self.0[i] * self.0[j].conj();
            }
        }
        HermMat4::new(m).expect("outer product is Hermitian")
    }
}

impl Index<usize> for StateVec4 {
    type Output = C64;

    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

fn norm4(v: &[C64; 4]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `ψ†Mψ` for Hermitian `M`.
pub fn quad_form(m: &HermMat4, psi: &StateVec4) -> Result<f64> {
    let value = m.0.expectation(psi);
    if value.im.abs() > QUAD_FORM_IMAG_TOL {
        return Err(Error::ComplexQuadForm { imag: value.im });
    }
    Ok(value.re)
}

/// Spectral decomposition with eigenvalues in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomp4 {
    pub values: [f64; 4],
    pub vectors: [StateVec4; 4],
}

impl EigenDecomp4 {
    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    pub fn min_vector(&self) -> &StateVec4 {
        &self.vectors[0]
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> Mat4 {
        let mut m = Mat4::zero();
        for (lambda, v) in self.values.iter().zip(self.vectors.iter()) {
            m = m + Mat4::from(v.projector()).scale(*lambda);
        }
        m
    }
}

/// Cyclic complex Jacobi eigensolver for a 4×4 Hermitian matrix.
pub fn herm_eig4(m: &HermMat4) -> Result<EigenDecomp4> {
    let mut a = m.0;
    let mut v = Mat4::identity();
    let scale = frobenius(&a).max(1.0);

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= JACOBI_OFF_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > JACOBI_OFF_TOL * scale {
        return Err(Error::EigenNoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
            off_norm: off_diagonal_norm(&a),
        });
    }

    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| a.0[i][i].re.total_cmp(&a.0[j][j].re));

    let values = order.map(|i| a.0[i][i].re);
    let mut vectors = [StateVec4([ZERO; 4]); 4];
    for (slot, &col) in vectors.iter_mut().zip(order.iter()) {
        let amps = [v.0[0][col], v.0[1][col], v.0[2][col], v.0[3][col]];
        *slot = StateVec4::normalized(amps)?;
    }
    Ok(EigenDecomp4 { values, vectors })
}

fn frobenius(a: &Mat4) -> f64 {
    a.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn off_diagonal_norm(a: &Mat4) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                s += a.0[i][j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Annihilates `a[p][q]` with the unitary `U = diag-phase · real rotation` acting on
/// columns `p, q`, updating `a ← U†aU` and `v ← vU`.
fn rotate(a: &mut Mat4, v: &mut Mat4, p: usize, q: usize) {
    let apq = a.0[p][q];
    let b = apq.norm();
    if b < f64::MIN_POSITIVE {
        return;
    }
    let phase = C64::from_polar(1.0, -apq.arg());
    let app = a.0[p][p].re;
    let aqq = a.0[q][q].re;

    let theta = (aqq - app) / (2.0 * b);
    let t = if theta.is_infinite() {
        0.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let u_pp = C64::new(c, 0.0);
    let u_pq = C64::new(s, 0.0);
    let u_qp = phase * -s;
    let u_qq = phase * c;

    for k in 0..4 {
        let (akp, akq) = (a.0[k][p], a.0[k][q]);
        a.0[k][p] = akp * u_pp + akq * u_qp;
        a.0[k][q] = akp * u_pq + akq * u_qq;
        let (vkp, vkq) = (v.0[k][p], v.0[k][q]);
        v.0[k][p] = vkp * u_pp + vkq * u_qp;
        v.0[k][q] = vkp * u_pq + vkq * u_qq;
    }
    for k in 0..4 {
        let (apk, aqk) = (a.0[p][k], a.0[q][k]);
        a.0[p][k] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a.0[q][k] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a.0[p][q] = ZERO;
    a.0[q][p] = ZERO;
    a.0[p][p] = C64::new(a.0[p][p].re, 0.0);
    a.0[q][q] = C64::new(a.0[q][q].re, 0.0);
}
