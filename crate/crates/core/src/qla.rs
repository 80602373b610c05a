//! Dense complex linear algebra for one and two qubits.
//!
//! Matrices are stored row-major. Two-qubit operators use the basis order
//! |00>, |01>, |10>, |11> with qubit 1 as the left Kronecker factor.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;
pub const NORM_TOL: f64 = 1e-9;
pub const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
pub const DENSITY_TRACE_TOL: f64 = 1e-8;
pub const DENSITY_EIGEN_TOL: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 4 {
        Ok(())
    } else {
        Err(Error::InvalidDimension(format!("expected 2 or 4, got {dim}")))
    }
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        check_dim(dim)?;
        if data.len() != dim * dim {
            return Err(Error::InvalidDimension(format!("{} entries for a {dim}x{dim} matrix", data.len())));
        }
        Ok(Self { dim, data })
    }

    pub fn from_real(dim: usize, data: &[f64]) -> Result<Self> {
        Self::new(dim, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 4, "dimension must be 2 or 4");
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m.data[k * dim + k] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Result<Self> {
        let dim = diag.len();
        check_dim(dim)?;
        let mut m = Self::zeros(dim);
        for (k, &d) in diag.iter().enumerate() {
            m.data[k * dim + k] = d;
        }
        Ok(m)
    }

    /// Outer product |a><b|.
    pub fn outer(a: &[C64], b: &[C64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvalidDimension(format!("outer product of {} and {}", a.len(), b.len())));
        }
        let dim = a.len();
        check_dim(dim)?;
        let mut data = Vec::with_capacity(dim * dim);
        for x in a {
            for y in b {
                data.push(x * y.conj());
            }
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.data[c * n + r] = self.data[r * n + c].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|k| self.get(k, k)).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim;
        let mut err: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                err = err.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        err
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() < HERMITIAN_TOL
    }

    pub fn is_unitary(&self) -> bool {
        (&self.dagger() * self).max_abs_diff(&Self::identity(self.dim)) < UNITARY_TOL
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        let n = self.dim;
        (0..n)
            .map(|r| {
                let row = &self.data[r * n..(r + 1) * n];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// [self, other] = self·other − other·self.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// {self, other} = self·other + other·self.
    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| {
                    let z = self.get(r, c);
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * rhs.data[k * n + c];
                }
            }
        }
        out
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        ComplexMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        ComplexMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: f64) -> ComplexMatrix {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Mul<C64> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: C64) -> ComplexMatrix {
        self.scale(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale(-ONE)
    }
}

pub fn identity2() -> ComplexMatrix {
    ComplexMatrix::identity(2)
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix { dim: 2, data: vec![ZERO, ONE, ONE, ZERO] }
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix { dim: 2, data: vec![ZERO, -I, I, ZERO] }
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix { dim: 2, data: vec![ONE, ZERO, ZERO, -ONE] }
}

/// σ+ = (σx + iσy)/2 = |0><1|.
pub fn sigma_plus() -> ComplexMatrix {
    ComplexMatrix { dim: 2, data: vec![ZERO, ONE, ZERO, ZERO] }
}

/// σ− = (σx − iσy)/2 = |1><0|.
pub fn sigma_minus() -> ComplexMatrix {
    ComplexMatrix { dim: 2, data: vec![ZERO, ZERO, ONE, ZERO] }
}

/// Kronecker product of two single-qubit operators.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.dim != 2 || b.dim != 2 {
        return Err(Error::InvalidDimension(format!(
            "kron expects 2x2 factors, got {}x{} and {}x{}",
            a.dim, a.dim, b.dim, b.dim
        )));
    }
    let mut out = ComplexMatrix::zeros(4);
    for ar in 0..2 {
        for ac in 0..2 {
            let x = a.get(ar, ac);
            for br in 0..2 {
                for bc in 0..2 {
                    out.set(2 * ar + br, 2 * ac + bc, x * b.get(br, bc));
                }
            }
        }
    }
    Ok(out)
}

/// `op` acting on qubit 1.
pub fn on_first(op: &ComplexMatrix) -> ComplexMatrix {
    kron(op, &identity2()).expect("single-qubit operator")
}

/// `op` acting on qubit 2.
pub fn on_second(op: &ComplexMatrix) -> ComplexMatrix {
    kron(&identity2(), op).expect("single-qubit operator")
}

/// Computational basis state of dimension `dim`.
pub fn basis(dim: usize, index: usize) -> Vec<C64> {
    let mut v = vec![ZERO; dim];
    v[index] = ONE;
    v
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Builds a state and checks the norm.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let norm = vec_norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("state norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes an arbitrary non-zero vector.
    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let norm = vec_norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(Self { amplitudes })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(dim == 2 || dim == 4, "dimension must be 2 or 4");
        Self { amplitudes: basis(dim, index) }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }

    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    pub fn evolve(&self, u: &ComplexMatrix) -> Self {
        Self { amplitudes: u.apply(&self.amplitudes) }
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
                .expect("state dimension checked at construction"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Builds a density matrix, checking Hermiticity, unit trace and
    /// positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let rho = Self { matrix };
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix without validation; integrators use this for
    /// intermediate states and validate at sample points.
    pub fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn pure(psi: &StateVector) -> Self {
        psi.to_density()
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: &ComplexMatrix::identity(dim) * (1.0 / dim as f64) }
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.matrix.hermiticity_error();
        if herm > DENSITY_HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("density matrix not Hermitian (error {herm:e})")));
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > DENSITY_TRACE_TOL || tr.im.abs() > DENSITY_TRACE_TOL {
            return Err(Error::InvalidState(format!("density matrix trace {tr} differs from 1")));
        }
        let min_eig = self.min_eigenvalue()?;
        if min_eig < -DENSITY_EIGEN_TOL {
            return Err(Error::InvalidState(format!("density matrix has eigenvalue {min_eig:e}")));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        // Symmetrize so round-off does not trip the Hermiticity contract.
        let sym = &(&self.matrix + &self.matrix.dagger()) * 0.5;
        Ok(herm_eig(&sym)?.values[0])
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn population(&self, index: usize) -> f64 {
        self.matrix.get(index, index).re
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// U ρ U†.
    pub fn evolve(&self, u: &ComplexMatrix) -> Self {
        Self { matrix: &(u * &self.matrix) * &u.dagger() }
    }
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Eigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        (0..self.vectors.dim()).map(|r| self.vectors.get(r, k)).collect()
    }

    /// V·diag(f(λ))·V†.
    pub fn reconstruct_with<F: Fn(f64) -> C64>(&self, f: F) -> ComplexMatrix {
        let diag: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        let d = ComplexMatrix::from_diag(&diag).expect("dimension checked");
        &(&self.vectors * &d) * &self.vectors.dagger()
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;
const DEGENERACY_TOL: f64 = 1e-9;

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Each eigenvector has its largest-magnitude component made real and
/// positive (first such index on ties); degenerate clusters are
/// re-orthonormalized after the phase fix.
pub fn herm_eig(h: &ComplexMatrix) -> Result<Eigen> {
    let herm = h.hermiticity_error();
    if herm >= HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(Error::ContractViolation(format!("herm_eig requires a Hermitian matrix (error {herm:e})")));
    }
    let n = h.dim;
    let mut a = h.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale: f64 = a.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a.get(p, q).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-16 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let phase = C64::from_polar(1.0, -apq.arg());
                let theta = 0.5 * (2.0 * r).atan2(a.get(p, p).re - a.get(q, q).re);
                let (s, c) = theta.sin_cos();
                let sp = phase * s;
                let cp = phase * c;
                // A ← A·U, V ← V·U with U acting on columns p, q.
                for m in [&mut a, &mut v] {
                    for k in 0..n {
                        let xp = m.get(k, p);
                        let xq = m.get(k, q);
                        m.set(k, p, xp * c + xq * sp);
                        m.set(k, q, -xp * s + xq * cp);
                    }
                }
                // A ← U†·A on rows p, q.
                for k in 0..n {
                    let xp = a.get(p, k);
                    let xq = a.get(q, k);
                    a.set(p, k, xp * c + xq * sp.conj());
                    a.set(q, k, -xp * s + xq * cp.conj());
                }
                a.set(p, q, ZERO);
                a.set(q, p, ZERO);
                let (pp, qq) = (a.get(p, p).re, a.get(q, q).re);
                a.set(p, p, C64::new(pp, 0.0));
                a.set(q, q, C64::new(qq, 0.0));
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).re.total_cmp(&a.get(j, j).re));
    let values: Vec<f64> = order.iter().map(|&k| a.get(k, k).re).collect();
    let mut columns: Vec<Vec<C64>> = order.iter().map(|&k| (0..n).map(|r| v.get(r, k)).collect()).collect();

    for col in &mut columns {
        fix_phase(col);
    }

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end] - values[start]).abs() <= DEGENERACY_TOL * values[start].abs().max(1.0) {
            end += 1;
        }
        if end - start > 1 {
            for k in start..end {
                for j in start..k {
                    let proj = inner(&columns[j], &columns[k]);
                    let (head, tail) = columns.split_at_mut(k);
                    for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                        *x -= proj * y;
                    }
                }
                let nrm = vec_norm(&columns[k]);
                for x in &mut columns[k] {
                    *x /= nrm;
                }
                fix_phase(&mut columns[k]);
            }
        }
        start = end;
    }

    let mut vectors = ComplexMatrix::zeros(n);
    for (k, col) in columns.iter().enumerate() {
        for (r, &x) in col.iter().enumerate() {
            vectors.set(r, k, x);
        }
    }
    Ok(Eigen { values, vectors })
}

fn fix_phase(col: &mut [C64]) {
    let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = col.iter().position(|z| z.norm() >= max - 1e-12).expect("non-empty column");
    let phase = C64::from_polar(1.0, -col[pivot].arg());
    for x in col.iter_mut() {
        *x *= phase;
    }
    col[pivot] = C64::new(col[pivot].re, 0.0);
}

/// e^{−iht} through the eigendecomposition of `h`.
pub fn expm_unitary(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(h)?;
    Ok(eig.reconstruct_with(|l| C64::from_polar(1.0, -l * t)))
}
