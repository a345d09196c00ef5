//! Weight solver for isolating one correlation among all orderings and
//! coupling-term choices over N slots.
//!
//! The channel of slot i is expanded in the sixteen matrix units
//! 𝔼_β = |m⟩⟨n| (β = 4m + n) of the sensor Liouville space, with weights
//! p_{β_N⋯β_1}. The coefficient of one row (η_k, α_k per slot) is
//!
//!   A = 2^Θ oᵀ 𝒮_N 𝔼_{β_N} 𝒮_{N−1} ⋯ 𝒮_1 𝔼_{β_1} r
//!
//! with 𝒮_k the sensor superoperator paired with η_k (comm for +, anticomm
//! for −, identity for 0), o_k = Tr(O σ_k) and r the coefficient vector of ρ_S.
//! Every index pair of this product appears in exactly one factor, so each row
//! is a tensor product of per-slot vectors and the Gram matrix of the rows is a
//! product of small per-slot Gram matrices.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::liouville::{
    anticomm_superop, comm_superop, real_symmetric_eigen, vectorize, OperatorBasis, OperatorMatrix, SuperOperator,
};
use crate::ordering::{vanishing_correlation_filter, Eta, OrderingSequence};
use crate::scalar::Real;

/// Sensor-side coupling operators S_α of V = Σ_α S_α ⊗ B_α.
#[derive(Debug, Clone)]
pub struct CouplingSet<T: Real> {
    ops: Vec<OperatorMatrix<T>>,
}

impl<T: Real> CouplingSet<T> {
    pub fn new(ops: Vec<OperatorMatrix<T>>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidParameter("at least one coupling operator".into()));
        }
        for op in &ops {
            if op.dim() != 2 {
                return Err(Error::DimensionMismatch { expected: 2, got: op.dim() });
            }
            if !op.is_hermitian(T::structural_tol()) {
                return Err(Error::InvalidParameter("coupling operators must be Hermitian".into()));
            }
        }
        Ok(Self { ops })
    }

    /// d = 1: S = σz/2.
    pub fn dephasing() -> Self {
        Self { ops: vec![OperatorMatrix::pauli(3).scale_real(T::lit(0.5))] }
    }

    /// d = 3: S_α = σ_α/2.
    pub fn isotropic() -> Self {
        Self { ops: (1..=3).map(|k| OperatorMatrix::pauli(k).scale_real(T::lit(0.5))).collect() }
    }

    pub fn d(&self) -> usize {
        self.ops.len()
    }
}

/// Ordering entry and coupling term of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SlotChoice {
    pub eta: Eta,
    /// Coupling index α (ignored when `eta` is idle).
    pub alpha: usize,
}

impl SlotChoice {
    pub fn idle() -> Self {
        Self { eta: Eta::Zero, alpha: 0 }
    }

    pub fn new(eta: Eta, alpha: usize) -> Self {
        if eta == Eta::Zero {
            Self::idle()
        } else {
            Self { eta, alpha }
        }
    }
}

/// Count from the geometric sum d(2d)^{N−1} + … + d(2d)⁰ = d((2d)^N − 1)/(2d − 1):
/// vanishing orderings whose entries after the leading commutator are all non-idle.
pub fn idle_free_vanishing_count(d: usize, n: usize) -> usize {
    let q = 2 * d;
    d * (q.pow(n as u32) - 1) / (q - 1)
}

/// Number of rows removed by [`vanishing_correlation_filter`]: d((2d+1)^N − 1)/(2d).
pub fn excluded_row_count(d: usize, n: usize) -> usize {
    let q = 2 * d + 1;
    d * (q.pow(n as u32) - 1) / (q - 1)
}

/// Isolation problem for one target coefficient.
#[derive(Debug, Clone)]
pub struct GeneralWeightProblem<T: Real> {
    slots: usize,
    couplings: CouplingSet<T>,
    /// Earliest slot first.
    target: Vec<SlotChoice>,
    observable: OperatorMatrix<T>,
    rho_s: OperatorMatrix<T>,
}

/// Output of [`GeneralWeightProblem::solve`].
#[derive(Debug, Clone)]
pub struct GeneralSolution<T: Real> {
    /// p over (D⁴)^N entries, flat index Σ β_k 16^k with the earliest slot least significant.
    pub weights: Vec<T>,
    /// Every row, in [`GeneralWeightProblem::rows`] order.
    pub rows: Vec<Vec<SlotChoice>>,
    pub retained: Vec<bool>,
    /// Post hoc coefficient of every row under `weights`.
    pub coefficients: Vec<T>,
    pub target_row: usize,
    /// Largest |coefficient| over retained rows other than the target.
    pub max_off_target: T,
}

impl<T: Real> GeneralSolution<T> {
    pub fn excluded(&self) -> usize {
        self.retained.iter().filter(|r| !**r).count()
    }

    pub fn target_coefficient(&self) -> T {
        self.coefficients[self.target_row]
    }
}

fn choice_count(d: usize) -> usize {
    2 * d + 1
}

fn choice_from_index(k: usize, d: usize) -> SlotChoice {
    match k {
        0 => SlotChoice::idle(),
        k if k <= d => SlotChoice { eta: Eta::Plus, alpha: k - 1 },
        k => SlotChoice { eta: Eta::Minus, alpha: k - d - 1 },
    }
}

fn choice_index(c: SlotChoice, d: usize) -> usize {
    match c.eta {
        Eta::Zero => 0,
        Eta::Plus => 1 + c.alpha,
        Eta::Minus => 1 + d + c.alpha,
    }
}

impl<T: Real> GeneralWeightProblem<T> {
    /// `target` lists slot choices earliest first.
    pub fn new(slots: usize, couplings: CouplingSet<T>, target: Vec<SlotChoice>) -> Result<Self> {
        let d = couplings.d();
        if !(1..=4).contains(&slots) {
            return Err(Error::InvalidParameter(format!("slots must be 1..=4 (got {slots})")));
        }
        if d > 3 {
            return Err(Error::InvalidParameter(format!("at most 3 coupling terms (got {d})")));
        }
        if target.len() != slots {
            return Err(Error::LengthMismatch(target.len(), slots));
        }
        if target.iter().any(|c| c.eta != Eta::Zero && c.alpha >= d) {
            return Err(Error::InvalidParameter("coupling index out of range".into()));
        }
        let target: Vec<SlotChoice> = target.into_iter().map(|c| SlotChoice::new(c.eta, c.alpha)).collect();
        let eta = OrderingSequence::from_earliest(target.iter().map(|c| c.eta).collect())?;
        if vanishing_correlation_filter(&eta) {
            return Err(Error::InvalidParameter(format!("target ordering {eta} vanishes identically")));
        }
        let p = Self {
            slots,
            couplings,
            target,
            observable: OperatorMatrix::pauli(2),
            rho_s: (OperatorMatrix::identity(2) + OperatorMatrix::pauli(3)).scale_real(T::lit(0.5)),
        };
        if !p.feasible() {
            return Err(Error::InvalidParameter("sensor dimension too small for the coupling set".into()));
        }
        Ok(p)
    }

    pub fn with_observable(mut self, o: OperatorMatrix<T>) -> Self {
        self.observable = o;
        self
    }

    pub fn with_rho_s(mut self, rho: OperatorMatrix<T>) -> Self {
        self.rho_s = rho;
        self
    }

    pub fn d(&self) -> usize {
        self.couplings.d()
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn sensor_dim(&self) -> usize {
        2
    }

    /// D⁴ ≥ 2d + 1.
    pub fn feasible(&self) -> bool {
        self.sensor_dim().pow(4) >= 2 * self.d() + 1
    }

    /// All (2d+1)^N rows, earliest slot varying fastest.
    pub fn rows(&self) -> Vec<Vec<SlotChoice>> {
        let (d, k) = (self.d(), choice_count(self.d()));
        (0..k.pow(self.slots as u32))
            .map(|mut idx| {
                (0..self.slots)
                    .map(|_| {
                        let c = choice_from_index(idx % k, d);
                        idx /= k;
                        c
                    })
                    .collect()
            })
            .collect()
    }

    fn row_index(&self, row: &[SlotChoice]) -> usize {
        let (d, k) = (self.d(), choice_count(self.d()));
        row.iter().rev().fold(0, |acc, c| acc * k + choice_index(*c, d))
    }

    fn is_retained(row: &[SlotChoice]) -> bool {
        let eta = OrderingSequence::from_earliest(row.iter().map(|c| c.eta).collect()).expect("nonempty");
        !vanishing_correlation_filter(&eta)
    }

    /// Real 4×4 Pauli-basis matrix of the sensor map paired with a slot choice.
    fn slot_matrix(&self, c: SlotChoice) -> DMatrix<T> {
        let basis = Arc::new(OperatorBasis::pauli());
        let s = match c.eta {
            Eta::Zero => return DMatrix::identity(4, 4),
            Eta::Plus => comm_superop(&self.couplings.ops[c.alpha], &basis),
            Eta::Minus => anticomm_superop(&self.couplings.ops[c.alpha], &basis),
        }
        .expect("qubit");
        DMatrix::from_fn(4, 4, |r, k| s.re(r, k))
    }

    fn observable_dual(&self) -> DVector<T> {
        let mut o = DVector::zeros(4);
        for k in 0..4 {
            o[k] = (self.observable.clone() * OperatorMatrix::pauli(k)).trace().re;
        }
        o
    }

    fn state_vector(&self) -> DVector<T> {
        let v = vectorize(&self.rho_s, &OperatorBasis::pauli()).expect("qubit");
        DVector::from_fn(4, |k, _| v[k].re)
    }

    fn prefactor(row: &[SlotChoice]) -> T {
        let theta = row.iter().filter(|c| c.eta != Eta::Zero).count();
        T::lit(2f64.powi(theta as i32))
    }

    /// p for a product of per-slot channels (earliest first): p_β = Π_k 𝒫_k[m_k, n_k].
    pub fn weights_from_channels(&self, channels: &[SuperOperator<T>]) -> Result<Vec<T>> {
        if channels.len() != self.slots {
            return Err(Error::LengthMismatch(channels.len(), self.slots));
        }
        let total = 16usize.pow(self.slots as u32);
        Ok((0..total)
            .map(|mut idx| {
                let mut w = T::one();
                for ch in channels {
                    let b = idx % 16;
                    idx /= 16;
                    w *= ch.re(b / 4, b % 4);
                }
                w
            })
            .collect())
    }

    /// Coefficients of every row for weights `p`, by direct contraction of the
    /// superoperator product slot by slot.
    pub fn evaluate_coefficients(&self, p: &[T]) -> Result<Vec<T>> {
        let total = 16usize.pow(self.slots as u32);
        if p.len() != total {
            return Err(Error::LengthMismatch(p.len(), total));
        }
        let r = self.state_vector();
        let o = self.observable_dual();
        let k = choice_count(self.d());
        let mats: Vec<DMatrix<T>> = (0..k).map(|i| self.slot_matrix(choice_from_index(i, self.d()))).collect();
        let acc: Vec<[T; 4]> = p.iter().map(|&w| [w * r[0], w * r[1], w * r[2], w * r[3]]).collect();
        let mut out = vec![T::zero(); k.pow(self.slots as u32)];
        self.contract(&acc, 0, 0, 1, &mats, &o, &mut out);
        let rows = self.rows();
        for (v, row) in out.iter_mut().zip(&rows) {
            *v *= Self::prefactor(row);
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn contract(
        &self,
        acc: &[[T; 4]],
        slot: usize,
        row_offset: usize,
        row_stride: usize,
        mats: &[DMatrix<T>],
        o: &DVector<T>,
        out: &mut [T],
    ) {
        // Apply channel `slot` (matrix unit |m⟩⟨n| moves component n to m) and sum over its index.
        let rest = acc.len() / 16;
        let mut w = vec![[T::zero(); 4]; rest];
        for (j, wj) in w.iter_mut().enumerate() {
            for b in 0..16 {
                let (m, n) = (b / 4, b % 4);
                wj[m] += acc[b + 16 * j][n];
            }
        }
        for (ci, s) in mats.iter().enumerate() {
            let idx = row_offset + ci * row_stride;
            if slot + 1 == self.slots {
                let v = &w[0];
                let mut val = T::zero();
                for a in 0..4 {
                    for b in 0..4 {
                        val += o[a] * s[(a, b)] * v[b];
                    }
                }
                out[idx] = val;
            } else {
                let next: Vec<[T; 4]> = w
                    .iter()
                    .map(|v| {
                        let mut y = [T::zero(); 4];
                        for (a, ya) in y.iter_mut().enumerate() {
                            for (b, vb) in v.iter().enumerate() {
                                *ya += s[(a, b)] * *vb;
                            }
                        }
                        y
                    })
                    .collect();
                self.contract(&next, slot + 1, idx, row_stride * mats.len(), mats, o, out);
            }
        }
    }

    /// Minimum-norm p with target coefficient 1 and every other retained coefficient 0.
    pub fn solve(&self) -> Result<GeneralSolution<T>> {
        let d = self.d();
        let k = choice_count(d);
        let rows = self.rows();
        let retained: Vec<bool> = rows.iter().map(|r| Self::is_retained(r)).collect();
        let target_row = self.row_index(&self.target);
        let kept: Vec<usize> = (0..rows.len()).filter(|&i| retained[i]).collect();
        let t_pos = kept.iter().position(|&i| i == target_row).expect("target is retained");

        let mats: Vec<DMatrix<T>> = (0..k).map(|i| self.slot_matrix(choice_from_index(i, d))).collect();
        let o = self.observable_dual();
        let r = self.state_vector();
        let last: Vec<DVector<T>> = mats.iter().map(|s| s.transpose() * &o).collect();
        // Per-slot Gram factors.
        let gl = DMatrix::from_fn(k, k, |a, b| last[a].dot(&last[b]));
        let gm = DMatrix::from_fn(k, k, |a, b| mats[a].dot(&mats[b]));
        let rr = r.dot(&r);
        let codes: Vec<Vec<usize>> =
            kept.iter().map(|&i| rows[i].iter().map(|c| choice_index(*c, d)).collect()).collect();
        let pref: Vec<T> = kept.iter().map(|&i| Self::prefactor(&rows[i])).collect();
        let nk = kept.len();
        let n = self.slots;
        let gram = DMatrix::from_fn(nk, nk, |a, b| {
            let (ca, cb) = (&codes[a], &codes[b]);
            let mut g = pref[a] * pref[b] * rr * gl[(ca[n - 1], cb[n - 1])];
            for s in 0..n - 1 {
                g *= gm[(ca[s], cb[s])];
            }
            g
        });

        if gram[(t_pos, t_pos)] <= T::structural_tol() {
            return Err(Error::Infeasible(vec![target_row]));
        }
        let y = pinv_solve(&gram, t_pos);
        let fit: T = gram.row(t_pos).iter().zip(y.iter()).map(|(g, v)| *g * *v).sum();
        if (fit - T::one()).abs() > T::lit(1e-8) {
            return Err(Error::Infeasible(self.dependency(&gram, t_pos, &kept)));
        }

        // p = Σ_rows y_row A_row.
        let total = 16usize.pow(n as u32);
        let mut weights = vec![T::zero(); total];
        for (a, &ya) in y.iter().enumerate() {
            if ya == T::zero() {
                continue;
            }
            let c = &codes[a];
            let scale = ya * pref[a];
            for (idx, wv) in weights.iter_mut().enumerate() {
                let beta = |s: usize| (idx / 16usize.pow(s as u32)) % 16;
                let mut v = scale * last[c[n - 1]][beta(n - 1) / 4] * r[beta(0) % 4];
                for s in 0..n - 1 {
                    v *= mats[c[s]][(beta(s + 1) % 4, beta(s) / 4)];
                }
                *wv += v;
            }
        }

        let coefficients = self.evaluate_coefficients(&weights)?;
        let mut max_off = T::zero();
        for &i in &kept {
            if i != target_row && coefficients[i].abs() > max_off {
                max_off = coefficients[i].abs();
            }
        }
        if (coefficients[target_row] - T::one()).abs() > T::lit(1e-8) {
            return Err(Error::Infeasible(vec![target_row]));
        }
        Ok(GeneralSolution { weights, rows, retained, coefficients, target_row, max_off_target: max_off })
    }

    /// Retained rows the target row depends on.
    fn dependency(&self, gram: &DMatrix<T>, t_pos: usize, kept: &[usize]) -> Vec<usize> {
        let others: Vec<usize> = (0..kept.len()).filter(|&i| i != t_pos).collect();
        let g = DMatrix::from_fn(others.len(), others.len(), |a, b| gram[(others[a], others[b])]);
        let rhs = DVector::from_fn(others.len(), |a, _| gram[(others[a], t_pos)]);
        let z = g.pseudo_inverse(T::lit(1e-12)).map(|pi| pi * rhs).unwrap_or_else(|_| DVector::zeros(others.len()));
        others.iter().zip(z.iter()).filter(|(_, v)| v.abs() > T::lit(1e-8)).map(|(&i, _)| kept[i]).collect()
    }
}

/// y = G⁺ e_t for a symmetric positive semidefinite G.
fn pinv_solve<T: Real>(g: &DMatrix<T>, t: usize) -> DVector<T> {
    let (values, vectors) = real_symmetric_eigen(g);
    let lmax = values.iter().fold(T::zero(), |a, &b| if b.abs() > a { b.abs() } else { a });
    let cut = lmax * T::lit(1e-12);
    let n = g.nrows();
    let mut y = DVector::zeros(n);
    for (k, &l) in values.iter().enumerate() {
        if l > cut {
            let v = vectors.column(k);
            y += v * (v[t] / l);
        }
    }
    y
}
