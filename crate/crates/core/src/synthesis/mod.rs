//! Channels synthesized as signed weighted sums of catalog operations.

mod decompose;
mod general;

pub use crate::ordering::vanishing_correlation_filter;
pub use decompose::{
    sparse_element, sparse_element_label, Decomposer, WeightSolution, REFERENCE_SPARSE_WEIGHTS, SPARSE_LABELS,
};
pub use general::{
    excluded_row_count, idle_free_vanishing_count, CouplingSet, GeneralSolution, GeneralWeightProblem, SlotChoice,
};

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{ComplexField, DMatrix};

use crate::catalog::{Axis, CatalogOperation, OperationKind};
use crate::error::{Error, Result};
use crate::liouville::{OperatorBasis, OperatorMatrix, SuperOperator};
use crate::scalar::{c, Real};

/// Physical realizability tag of a synthesized channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Physicality {
    /// A single completely positive trace-preserving map.
    Cptp,
    /// Realized only by combining the outcomes of several runs with signed weights.
    SignedPostprocessed,
}

/// One weighted term: a sequence of operations applied first to last.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTerm<T: Real> {
    pub weight: T,
    pub ops: Vec<CatalogOperation<T>>,
}

impl<T: Real> ChannelTerm<T> {
    pub fn single(weight: T, op: CatalogOperation<T>) -> Self {
        Self { weight, ops: vec![op] }
    }

    /// Liouville matrix of the operation sequence (without the weight).
    pub fn superop(&self) -> SuperOperator<T> {
        self.ops.iter().fold(SuperOperator::qubit_identity(), |acc, op| op.superop().compose(&acc).expect("qubit"))
    }
}

/// Weighted combination of catalog operation sequences with its cached matrix.
#[derive(Debug, Clone)]
pub struct SynthesizedChannel<T: Real> {
    terms: Vec<ChannelTerm<T>>,
    matrix: SuperOperator<T>,
    physical: Physicality,
}

impl<T: Real> SynthesizedChannel<T> {
    pub fn new(terms: Vec<ChannelTerm<T>>) -> Self {
        let basis = Arc::new(OperatorBasis::pauli());
        let mats: Vec<(T, SuperOperator<T>)> = terms.iter().map(|t| (t.weight, t.superop())).collect();
        let matrix = SuperOperator::weighted_sum(mats.iter().map(|(w, m)| (*w, m)), basis).expect("qubit");
        let physical = if cptp_check(&matrix).is_cptp() { Physicality::Cptp } else { Physicality::SignedPostprocessed };
        Self { terms, matrix, physical }
    }

    /// Σ wᵢ opᵢ over single operations.
    pub fn from_weighted(terms: impl IntoIterator<Item = (T, CatalogOperation<T>)>) -> Self {
        Self::new(terms.into_iter().map(|(w, op)| ChannelTerm::single(w, op)).collect())
    }

    pub fn single(op: CatalogOperation<T>) -> Self {
        Self::from_weighted([(T::one(), op)])
    }

    pub fn identity() -> Self {
        Self::single(CatalogOperation::identity())
    }

    pub fn terms(&self) -> &[ChannelTerm<T>] {
        &self.terms
    }

    pub fn matrix(&self) -> &SuperOperator<T> {
        &self.matrix
    }

    pub fn physical(&self) -> Physicality {
        self.physical
    }

    /// `self` applied after `first`; terms multiply out.
    pub fn after(&self, first: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * first.terms.len());
        for a in &first.terms {
            for b in &self.terms {
                let mut ops = a.ops.clone();
                ops.extend(b.ops.iter().cloned());
                terms.push(ChannelTerm { weight: a.weight * b.weight, ops });
            }
        }
        Self::new(terms)
    }

    /// n-fold composition.
    pub fn repeat(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("repetition count must be at least 1".into()));
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = self.after(&out);
        }
        Ok(out)
    }

    /// Rebuilds the channel with each operation passed through `f`.
    pub fn map_ops(&self, mut f: impl FnMut(&CatalogOperation<T>) -> CatalogOperation<T>) -> Self {
        Self::new(
            self.terms
                .iter()
                .map(|t| ChannelTerm { weight: t.weight, ops: t.ops.iter().map(&mut f).collect() })
                .collect(),
        )
    }

    /// Text form: one `weight label [label ...]` line per term.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.terms {
            let labels: Vec<&str> = t.ops.iter().map(|o| o.label.as_str()).collect();
            let _ = writeln!(s, "{} {}", t.weight, labels.join(" "));
        }
        s
    }

    /// Parses the text form; `#` starts a comment.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::ChannelParse { line: i + 1, msg };
            let mut it = line.split_whitespace();
            let w: f64 = it.next().unwrap_or("").parse().map_err(|e| err(format!("bad weight: {e}")))?;
            let ops = it
                .map(|l| CatalogOperation::from_label(l).map_err(|e| err(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            if ops.is_empty() {
                return Err(err("missing operation label".into()));
            }
            terms.push(ChannelTerm { weight: T::lit(w), ops });
        }
        if terms.is_empty() {
            return Err(Error::ChannelParse { line: 0, msg: "no terms".into() });
        }
        Ok(Self::new(terms))
    }
}

/// Outcome of a complete-positivity and trace-preservation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptpReport<T: Real> {
    pub hermitian_c: bool,
    pub positive_c: bool,
    pub trace_preserving: bool,
    pub min_choi_eigenvalue: T,
    pub tp_defect: T,
}

impl<T: Real> CptpReport<T> {
    pub fn is_cptp(&self) -> bool {
        self.hermitian_c && self.positive_c && self.trace_preserving
    }
}

/// Checks a Liouville map through its Choi matrix Σ |i⟩⟨j| ⊗ ℰ(|i⟩⟨j|).
pub fn cptp_check<T: Real>(map: &SuperOperator<T>) -> CptpReport<T> {
    let d = map.hilbert_dim();
    let mut choi = DMatrix::zeros(d * d, d * d);
    let mut defect = T::zero();
    for i in 0..d {
        for j in 0..d {
            let unit = OperatorMatrix::from_fn(d, |r, k| {
                if r == i && k == j {
                    c(T::one(), T::zero())
                } else {
                    c(T::zero(), T::zero())
                }
            });
            let out = map.apply(&unit).expect("basis dimension");
            for k in 0..d {
                for l in 0..d {
                    choi[(i * d + k, j * d + l)] = out.get(k, l);
                }
            }
            let want = if i == j { T::one() } else { T::zero() };
            defect += (out.trace() - c(want, T::zero())).modulus().powi(2);
        }
    }
    let choi_op = OperatorMatrix::new(choi).expect("square");
    let tol = T::physics_tol();
    let hermitian_c = choi_op.is_hermitian(tol);
    let herm_part = (choi_op.clone() + choi_op.adjoint()).scale_real(T::lit(0.5));
    let min_eig = herm_part
        .hermitian_eigen()
        .values
        .into_iter()
        .fold(T::max_value().unwrap_or(T::lit(f64::MAX)), |a, b| if b < a { b } else { a });
    let tp_defect = defect.sqrt();
    CptpReport {
        hermitian_c,
        positive_c: min_eig >= -tol,
        trace_preserving: tp_defect <= tol,
        min_choi_eigenvalue: min_eig,
        tp_defect,
    }
}

fn rot<T: Real>(label: &str) -> CatalogOperation<T> {
    CatalogOperation::from_label(label).expect("canonical label")
}

/// (𝒫₁, 𝒫₂) = ([R_y(π/2) + R_−y(π/2)]/2, R_y(π/2)).
pub fn second_order_channels<T: Real>() -> [SynthesizedChannel<T>; 2] {
    let h = T::lit(0.5);
    [
        SynthesizedChannel::from_weighted([(h, rot("Ry+90")), (h, rot("Ry-90"))]),
        SynthesizedChannel::single(rot("Ry+90")),
    ]
}

/// 𝒫₁ = 𝒫₄ = [R_y(π/2) − R_−y(π/2)]/2, 𝒫₂ = [R_x(π/2) − R_−x(π/2)]/2,
/// 𝒫₃ = [R_x(π/2) + R_−x(π/2)]/2.
pub fn fourth_order_channels<T: Real>() -> [SynthesizedChannel<T>; 4] {
    let h = T::lit(0.5);
    let p1 = SynthesizedChannel::from_weighted([(h, rot("Ry+90")), (-h, rot("Ry-90"))]);
    let p2 = SynthesizedChannel::from_weighted([(h, rot("Rx+90")), (-h, rot("Rx-90"))]);
    let p3 = SynthesizedChannel::from_weighted([(h, rot("Rx+90")), (h, rot("Rx-90"))]);
    [p1.clone(), p2, p3, p1]
}

/// Quarter turn about ±a with an angle error: R_{±a}(π/2 + δθ).
pub fn quarter_turn<T: Real>(axis: Axis, positive: bool, dtheta: T) -> CatalogOperation<T> {
    let mut n = axis.unit::<T>();
    if !positive {
        n = n.map(|x| -x);
    }
    if dtheta == T::zero() {
        let sign = if positive { '+' } else { '-' };
        rot(&format!("R{axis}{sign}90"))
    } else {
        CatalogOperation::rotation(T::frac_pi_2() + dtheta, n).expect("unit axis")
    }
}

/// [(R_x(π/2+δθ) + R_−x(π/2+δθ))/2]ⁿ.
pub fn robust_repeat<T: Real>(dtheta: T, n: usize) -> Result<SynthesizedChannel<T>> {
    let h = T::lit(0.5);
    let base = SynthesizedChannel::from_weighted([
        (h, quarter_turn(Axis::X, true, dtheta)),
        (h, quarter_turn(Axis::X, false, dtheta)),
    ]);
    base.repeat(n)
}

/// Angle of a rotation operation, if any.
pub fn rotation_angle<T: Real>(op: &CatalogOperation<T>) -> Option<T> {
    match op.kind {
        OperationKind::Rotation { angle, .. } => Some(angle),
        _ => None,
    }
}
