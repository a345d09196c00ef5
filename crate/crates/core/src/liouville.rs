//! Hilbert- and Liouville-space linear algebra.
//!
//! Operators are expanded in an orthogonal basis {Aₙ} with Tr(Aₘ†Aₙ) = c·δₘₙ.
//! The canonical qubit basis is {𝟙, σx, σy, σz} with c = 2, and multi-qubit
//! bases are tensor products of it (c = 2ᵏ). Coefficients are
//! vₙ = Tr(Aₙ† X)/c, so X = Σ vₙ Aₙ. For a density matrix ρ = (𝟙 + r·σ)/2
//! this gives v = (1, r)/2, i.e. the coefficient vector (1, px, py, pz)/2 with
//! p = r the Bloch vector.
//!
//! A superoperator is the matrix M with vec(𝓜 X) = M · vec(X).

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{c, ci, cr, Real, C};

/// Dense complex square matrix on a Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix<T: Real> {
    m: DMatrix<C<T>>,
}

impl<T: Real> OperatorMatrix<T> {
    pub fn new(m: DMatrix<C<T>>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        Ok(Self { m })
    }

    /// Builds a `dim × dim` operator from row-major entries.
    pub fn from_row_slice(dim: usize, entries: &[C<T>]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: entries.len() });
        }
        Ok(Self { m: DMatrix::from_row_slice(dim, dim, entries) })
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C<T>) -> Self {
        Self { m: DMatrix::from_fn(dim, dim, f) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { m: DMatrix::zeros(dim, dim) }
    }

    /// Pauli matrix: 0 → 𝟙, 1 → σx, 2 → σy, 3 → σz.
    pub fn pauli(k: usize) -> Self {
        let (o, z) = (C::<T>::new(T::one(), T::zero()), C::<T>::new(T::zero(), T::zero()));
        let i = C::<T>::new(T::zero(), T::one());
        let e = match k {
            0 => [o, z, z, o],
            1 => [z, o, o, z],
            2 => [z, -i, i, z],
            3 => [o, z, z, -o],
            _ => panic!("pauli index {k} out of range"),
        };
        Self { m: DMatrix::from_row_slice(2, 2, &e) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C<T>> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C<T>> {
        self.m
    }

    pub fn get(&self, r: usize, col: usize) -> C<T> {
        self.m[(r, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn trace(&self) -> C<T> {
        self.m.trace()
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self { m: &self.m * s }
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(c(s, T::zero()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.m.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).modulus())
            .fold(T::zero(), |acc, x| if x > acc { x } else { acc })
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    pub fn is_anti_hermitian(&self, tol: T) -> bool {
        self.max_abs_diff(&self.adjoint().scale_real(-T::one())) <= tol
    }

    pub fn has_unit_trace(&self, tol: T) -> bool {
        (self.trace() - c(T::one(), T::zero())).modulus() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self { m: self.m.kronecker(&other.m) }
    }

    /// Commutator AB − BA.
    pub fn commutator(&self, other: &Self) -> Self {
        Self { m: &self.m * &other.m - &other.m * &self.m }
    }

    /// Conjugation U X U†.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        Self { m: &u.m * &self.m * u.m.adjoint() }
    }

    /// Hermitian eigen-decomposition; the caller guarantees Hermiticity.
    ///
    /// Computed in f64 by faer; nalgebra's solvers lose accuracy on the
    /// heavily degenerate spectra of collective spin operators.
    pub fn hermitian_eigen(&self) -> HermitianEigen<T> {
        let n = self.dim();
        let a = faer::Mat::<faer::c64>::from_fn(n, n, |r, k| {
            let z = self.m[(r, k)];
            faer::c64::new(z.re.to_f64(), z.im.to_f64())
        });
        let e = a.self_adjoint_eigen(faer::Side::Lower).expect("self-adjoint eigensolver converges");
        let (u, s) = (e.U(), e.S().column_vector());
        HermitianEigen {
            values: (0..n).map(|k| T::lit(s[k].re)).collect(),
            vectors: DMatrix::from_fn(n, n, |r, k| c(T::lit(u[(r, k)].re), T::lit(u[(r, k)].im))),
        }
    }
}

macro_rules! op_binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl<'a, T: Real> $tr<&'a OperatorMatrix<T>> for &'a OperatorMatrix<T> {
            type Output = OperatorMatrix<T>;
            fn $f(self, rhs: &'a OperatorMatrix<T>) -> OperatorMatrix<T> {
                OperatorMatrix { m: &self.m $op &rhs.m }
            }
        }
        impl<T: Real> $tr for OperatorMatrix<T> {
            type Output = OperatorMatrix<T>;
            fn $f(self, rhs: OperatorMatrix<T>) -> OperatorMatrix<T> {
                OperatorMatrix { m: self.m $op rhs.m }
            }
        }
    };
}
op_binop!(Add, add, +);
op_binop!(Sub, sub, -);
op_binop!(Mul, mul, *);

impl<T: Real> Neg for OperatorMatrix<T> {
    type Output = OperatorMatrix<T>;
    fn neg(self) -> Self {
        Self { m: -self.m }
    }
}

/// Eigenpairs of a real symmetric matrix, ascending, computed in f64 by faer.
pub(crate) fn real_symmetric_eigen<T: Real>(g: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let n = g.nrows();
    let a = faer::Mat::<f64>::from_fn(n, n, |r, k| g[(r, k)].to_f64());
    let e = a.self_adjoint_eigen(faer::Side::Lower).expect("self-adjoint eigensolver converges");
    let (u, s) = (e.U(), e.S().column_vector());
    ((0..n).map(|k| T::lit(s[k])).collect(), DMatrix::from_fn(n, n, |r, k| T::lit(u[(r, k)])))
}

/// Eigenpairs of a Hermitian matrix, H = V diag(λ) V†.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: DMatrix<C<T>>,
}

impl<T: Real> HermitianEigen<T> {
    /// V diag(f(λ)) V†.
    pub fn map(&self, f: impl Fn(T) -> C<T>) -> OperatorMatrix<T> {
        let d = DVector::from_iterator(self.values.len(), self.values.iter().map(|&l| f(l)));
        let scaled = DMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |r, k| self.vectors[(r, k)] * d[k]);
        OperatorMatrix { m: scaled * self.vectors.adjoint() }
    }

    /// exp(−i H t).
    pub fn unitary(&self, t: T) -> OperatorMatrix<T> {
        self.map(|l| {
            let ph = -l * t;
            c(ph.cos(), ph.sin())
        })
    }
}

/// exp(scale · M).
///
/// Hermitian and anti-Hermitian inputs use an eigen-decomposition; anything
/// else goes through scaling-and-squaring with a Padé approximant.
pub fn expm<T: Real>(m: &OperatorMatrix<T>, scale: T) -> Result<OperatorMatrix<T>> {
    if !m.is_finite() || !scale.is_finite() {
        return Err(Error::NonFinite);
    }
    let tol = T::structural_tol();
    if m.is_hermitian(tol) {
        let e = m.hermitian_eigen();
        return Ok(e.map(|l| c((l * scale).exp(), T::zero())));
    }
    if m.is_anti_hermitian(tol) {
        // M = iH with H Hermitian.
        let h = m.scale(ci(-1.0));
        let e = h.hermitian_eigen();
        return Ok(e.map(|l| {
            let ph = l * scale;
            c(ph.cos(), ph.sin())
        }));
    }
    let scaled = m.matrix() * c(scale, T::zero());
    Ok(OperatorMatrix { m: scaled.exp() })
}

/// Orthogonal operator basis with Tr(Aₘ†Aₙ) = c·δₘₙ.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBasis<T: Real> {
    dim: usize,
    elements: Vec<OperatorMatrix<T>>,
    norm: T,
}

impl<T: Real> OperatorBasis<T> {
    /// {𝟙, σx, σy, σz}, c = 2.
    pub fn pauli() -> Self {
        Self::pauli_product(1)
    }

    /// Tensor-product Pauli basis on `qubits` qubits, c = 2^qubits.
    /// Index ordering is lexicographic with the first qubit most significant.
    pub fn pauli_product(qubits: usize) -> Self {
        let mut elements = vec![OperatorMatrix::identity(1)];
        for _ in 0..qubits {
            elements = elements.iter().flat_map(|e| (0..4).map(move |k| e.kron(&OperatorMatrix::pauli(k)))).collect();
        }
        let dim = 1usize << qubits;
        Self { dim, elements, norm: T::lit(dim as f64) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[OperatorMatrix<T>] {
        &self.elements
    }

    pub fn element(&self, n: usize) -> &OperatorMatrix<T> {
        &self.elements[n]
    }

    /// Normalization constant c.
    pub fn norm_constant(&self) -> T {
        self.norm
    }
}

/// Coefficients vₙ = Tr(Aₙ† X)/c.
pub fn vectorize<T: Real>(op: &OperatorMatrix<T>, basis: &OperatorBasis<T>) -> Result<DVector<C<T>>> {
    if op.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: op.dim() });
    }
    let inv = c(T::one() / basis.norm, T::zero());
    Ok(DVector::from_iterator(
        basis.len(),
        basis.elements.iter().map(|a| a.m.iter().zip(op.m.iter()).map(|(x, y)| x.conj() * y).sum::<C<T>>() * inv),
    ))
}

/// Σ vₙ Aₙ.
pub fn unvectorize<T: Real>(v: &DVector<C<T>>, basis: &OperatorBasis<T>) -> Result<OperatorMatrix<T>> {
    if v.len() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), got: v.len() });
    }
    let mut out = DMatrix::zeros(basis.dim, basis.dim);
    for (a, &vn) in basis.elements.iter().zip(v.iter()) {
        if vn != C::new(T::zero(), T::zero()) {
            out += &a.m * vn;
        }
    }
    Ok(OperatorMatrix { m: out })
}

/// Linear map on operators in a declared basis.
#[derive(Debug, Clone)]
pub struct SuperOperator<T: Real> {
    matrix: DMatrix<C<T>>,
    basis: Arc<OperatorBasis<T>>,
}

impl<T: Real> PartialEq for SuperOperator<T> {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix && self.basis == other.basis
    }
}

impl<T: Real> SuperOperator<T> {
    pub fn from_matrix(matrix: DMatrix<C<T>>, basis: Arc<OperatorBasis<T>>) -> Result<Self> {
        let n = basis.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: matrix.nrows().max(matrix.ncols()) });
        }
        Ok(Self { matrix, basis })
    }

    /// Sensor-qubit superoperator from real row-major entries in the Pauli basis.
    pub fn qubit_from_real(rows: [[f64; 4]; 4]) -> Self {
        let m = DMatrix::from_fn(4, 4, |r, k| cr(rows[r][k]));
        Self { matrix: m, basis: Arc::new(OperatorBasis::pauli()) }
    }

    pub fn identity(basis: Arc<OperatorBasis<T>>) -> Self {
        let n = basis.len();
        Self { matrix: DMatrix::identity(n, n), basis }
    }

    pub fn zeros(basis: Arc<OperatorBasis<T>>) -> Self {
        let n = basis.len();
        Self { matrix: DMatrix::zeros(n, n), basis }
    }

    /// Qubit identity map.
    pub fn qubit_identity() -> Self {
        Self::identity(Arc::new(OperatorBasis::pauli()))
    }

    pub fn matrix(&self) -> &DMatrix<C<T>> {
        &self.matrix
    }

    pub fn basis(&self) -> &Arc<OperatorBasis<T>> {
        &self.basis
    }

    pub fn hilbert_dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn get(&self, r: usize, col: usize) -> C<T> {
        self.matrix[(r, col)]
    }

    /// Real part of entry (r, col); Hermiticity-preserving maps are real in a Pauli basis.
    pub fn re(&self, r: usize, col: usize) -> T {
        self.matrix[(r, col)].re
    }

    pub fn apply(&self, op: &OperatorMatrix<T>) -> Result<OperatorMatrix<T>> {
        let v = vectorize(op, &self.basis)?;
        unvectorize(&(&self.matrix * v), &self.basis)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_same_basis(other)?;
        Ok(Self { matrix: &self.matrix * &other.matrix, basis: self.basis.clone() })
    }

    pub fn scale(&self, s: T) -> Self {
        Self { matrix: &self.matrix * c(s, T::zero()), basis: self.basis.clone() }
    }

    pub fn scale_complex(&self, s: C<T>) -> Self {
        Self { matrix: &self.matrix * s, basis: self.basis.clone() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_basis(other)?;
        Ok(Self { matrix: &self.matrix + &other.matrix, basis: self.basis.clone() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_basis(other)?;
        Ok(Self { matrix: &self.matrix - &other.matrix, basis: self.basis.clone() })
    }

    /// Weighted sum Σ wᵢ Sᵢ; all terms must share a basis.
    pub fn weighted_sum<'a>(
        terms: impl IntoIterator<Item = (T, &'a Self)>,
        basis: Arc<OperatorBasis<T>>,
    ) -> Result<Self>
    where
        T: 'a,
    {
        let mut acc = Self::zeros(basis);
        for (w, s) in terms {
            acc.check_same_basis(s)?;
            acc.matrix += &s.matrix * c(w, T::zero());
        }
        Ok(acc)
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = Self::identity(self.basis.clone());
        for _ in 0..n {
            out.matrix = &self.matrix * &out.matrix;
        }
        out
    }

    pub fn frobenius_norm(&self) -> T {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.matrix.iter().zip(other.matrix.iter()).map(|(a, b)| (a - b).modulus()).fold(T::zero(), |acc, x| {
            if x > acc {
                x
            } else {
                acc
            }
        })
    }

    /// Tensor product; the result lives in the product Pauli basis.
    pub fn kron(&self, other: &Self) -> Self {
        let qubits = (self.hilbert_dim() * other.hilbert_dim()).trailing_zeros() as usize;
        Self { matrix: self.matrix.kronecker(&other.matrix), basis: Arc::new(OperatorBasis::pauli_product(qubits)) }
    }

    fn check_same_basis(&self, other: &Self) -> Result<()> {
        if self.basis.len() != other.basis.len() {
            return Err(Error::DimensionMismatch { expected: self.basis.len(), got: other.basis.len() });
        }
        Ok(())
    }
}

/// The map X ↦ A X B†.
pub fn sandwich_superop<T: Real>(
    a: &OperatorMatrix<T>,
    b: &OperatorMatrix<T>,
    basis: &Arc<OperatorBasis<T>>,
) -> Result<SuperOperator<T>> {
    let d = basis.dim();
    for op in [a, b] {
        if op.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: op.dim() });
        }
    }
    let bd = b.m.adjoint();
    let n = basis.len();
    let mut m = DMatrix::zeros(n, n);
    for (k, e) in basis.elements().iter().enumerate() {
        let out = OperatorMatrix { m: &a.m * &e.m * &bd };
        m.set_column(k, &vectorize(&out, basis)?);
    }
    Ok(SuperOperator { matrix: m, basis: basis.clone() })
}

/// Left multiplication X ↦ B X.
pub fn left_superop<T: Real>(b: &OperatorMatrix<T>, basis: &Arc<OperatorBasis<T>>) -> Result<SuperOperator<T>> {
    sandwich_superop(b, &OperatorMatrix::identity(basis.dim()), basis)
}

/// Right multiplication X ↦ X B.
pub fn right_superop<T: Real>(b: &OperatorMatrix<T>, basis: &Arc<OperatorBasis<T>>) -> Result<SuperOperator<T>> {
    sandwich_superop(&OperatorMatrix::identity(basis.dim()), &b.adjoint(), basis)
}

/// ℬ⁻X = −i(BX − XB)/2.
pub fn comm_superop<T: Real>(b: &OperatorMatrix<T>, basis: &Arc<OperatorBasis<T>>) -> Result<SuperOperator<T>> {
    let l = left_superop(b, basis)?;
    let r = right_superop(b, basis)?;
    Ok(l.sub(&r)?.scale_complex(ci(-0.5)))
}

/// ℬ⁺X = (BX + XB)/2.
pub fn anticomm_superop<T: Real>(b: &OperatorMatrix<T>, basis: &Arc<OperatorBasis<T>>) -> Result<SuperOperator<T>> {
    let l = left_superop(b, basis)?;
    let r = right_superop(b, basis)?;
    Ok(l.add(&r)?.scale(T::lit(0.5)))
}

pub fn kron<T: Real>(a: &OperatorMatrix<T>, b: &OperatorMatrix<T>) -> OperatorMatrix<T> {
    a.kron(b)
}
