use std::sync::Arc;

use nalgebra::{DMatrix, DVector, LU};

use crate::catalog::{canonical_operations, CatalogOperation, CANONICAL_LABELS};
use crate::error::{Error, Result};
use crate::liouville::{OperatorBasis, SuperOperator};
use crate::scalar::{Real, C};

use super::SynthesizedChannel;

/// Names of the sixteen sparse elements ℙ_ij = |i⟩⟨j|, row-major over (𝟙, x, y, z).
pub const SPARSE_LABELS: [&str; 16] =
    ["P00", "P0x", "P0y", "P0z", "Px0", "Pxx", "Pxy", "Pxz", "Py0", "Pyx", "Pyy", "Pyz", "Pz0", "Pzx", "Pzy", "Pzz"];

const Q: f64 = 0.25;
const H: f64 = 0.5;

/// Published catalog weights of each sparse element, rows in [`SPARSE_LABELS`] order
/// and columns in [`CANONICAL_LABELS`] order.
pub const REFERENCE_SPARSE_WEIGHTS: [[f64; 16]; 16] = [
    [-H, Q, Q, Q, Q, Q, Q, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [H, -Q, -Q, -Q, -Q, -Q, -Q, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
    [H, -Q, -Q, -Q, -Q, -Q, -Q, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
    [H, -Q, -Q, -Q, -Q, -Q, -Q, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
    [-H, Q, Q, Q, Q, Q, Q, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0],
    [H, Q, -Q, -Q, Q, -Q, -Q, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [H, -Q, -Q, -Q, -Q, -Q, Q, H, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [H, -Q, Q, -Q, -Q, -Q, -Q, 0.0, 0.0, H, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-H, Q, Q, Q, Q, Q, Q, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0],
    [H, -Q, -Q, Q, -Q, -Q, -Q, H, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [H, -Q, Q, -Q, -Q, Q, -Q, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [H, -Q, -Q, -Q, Q, -Q, -Q, 0.0, H, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-H, Q, Q, Q, Q, Q, Q, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0],
    [H, -Q, -Q, -Q, -Q, Q, -Q, 0.0, 0.0, H, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [H, Q, -Q, -Q, -Q, -Q, -Q, 0.0, H, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [H, -Q, -Q, Q, -Q, -Q, Q, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
];

/// The matrix unit with a single 1 at (i, j).
pub fn sparse_element<T: Real>(i: usize, j: usize) -> SuperOperator<T> {
    let mut rows = [[0.0; 4]; 4];
    rows[i][j] = 1.0;
    SuperOperator::qubit_from_real(rows)
}

/// Looks up a sparse element by name, e.g. `Pxx` or `P0z`.
pub fn sparse_element_label<T: Real>(label: &str) -> Result<SuperOperator<T>> {
    let k = SPARSE_LABELS.iter().position(|l| *l == label).ok_or_else(|| Error::UnknownLabel(label.into()))?;
    Ok(sparse_element(k / 4, k % 4))
}

/// Catalog weights reproducing a target map.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSolution<T: Real> {
    /// Indexed like [`CANONICAL_LABELS`].
    pub weights: [T; 16],
    /// ‖Σ pᵢ𝔾ᵢ′ − target‖_F.
    pub residual: T,
}

impl<T: Real> WeightSolution<T> {
    pub fn get(&self, label: &str) -> Option<T> {
        CANONICAL_LABELS.iter().position(|l| *l == label).map(|k| self.weights[k])
    }

    pub fn labeled(&self) -> impl Iterator<Item = (&'static str, T)> + '_ {
        CANONICAL_LABELS.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn reconstruct(&self) -> SuperOperator<T> {
        self.to_channel().matrix().clone()
    }

    pub fn to_channel(&self) -> SynthesizedChannel<T> {
        SynthesizedChannel::from_weighted(self.weights.iter().copied().zip(canonical_operations()))
    }
}

enum Solver<T: Real> {
    Lu(LU<C<T>, nalgebra::Dyn, nalgebra::Dyn>),
    Pinv(DMatrix<C<T>>),
}

/// Solves T·p = A against the sixteen catalog operations, with T factorized once.
pub struct Decomposer<T: Real> {
    ops: Vec<CatalogOperation<T>>,
    mats: Vec<SuperOperator<T>>,
    solver: Solver<T>,
}

impl<T: Real> Default for Decomposer<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Decomposer<T> {
    pub fn new() -> Self {
        let ops = canonical_operations::<T>();
        let mats: Vec<SuperOperator<T>> = ops.iter().map(|o| o.superop()).collect();
        // T_ji = Tr(𝔾_j† 𝔾ᵢ′) picks entry (m, n) of 𝔾ᵢ′ for 𝔾_j = |m⟩⟨n|.
        let t = DMatrix::from_fn(16, 16, |j, i| mats[i].get(j / 4, j % 4));
        let svd = t.clone().svd(false, false);
        let (smax, smin) = svd.singular_values.iter().fold((T::zero(), T::lit(f64::MAX)), |(hi, lo), &s| {
            (if s > hi { s } else { hi }, if s < lo { s } else { lo })
        });
        let solver = if smin > smax * T::lit(1e-10) {
            Solver::Lu(t.lu())
        } else {
            Solver::Pinv(t.pseudo_inverse(T::lit(1e-12)).expect("svd"))
        };
        Self { ops, mats, solver }
    }

    pub fn operations(&self) -> &[CatalogOperation<T>] {
        &self.ops
    }

    pub fn decompose(&self, target: &SuperOperator<T>) -> Result<WeightSolution<T>> {
        if target.matrix().nrows() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, got: target.matrix().nrows() });
        }
        let a = DVector::from_fn(16, |j, _| target.get(j / 4, j % 4));
        let p = match &self.solver {
            Solver::Lu(lu) => lu.solve(&a).unwrap_or_else(|| DVector::zeros(16)),
            Solver::Pinv(pi) => pi * &a,
        };
        let mut weights = [T::zero(); 16];
        for (w, z) in weights.iter_mut().zip(p.iter()) {
            *w = z.re;
        }
        let basis = Arc::new(OperatorBasis::pauli());
        let recon = SuperOperator::weighted_sum(weights.iter().copied().zip(self.mats.iter()), basis)?;
        let residual = recon.sub(target)?.frobenius_norm();
        Ok(WeightSolution { weights, residual })
    }
}
