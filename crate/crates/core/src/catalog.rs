//! The sixteen sensor operations and the sixteen generator superoperators 𝒥.
//!
//! Sign conventions are fixed here. A rotation is ρ ↦ UρU† with
//! U = exp(−iθ n·σ/2), so R_y(π/2) takes the Bloch vector z → x. Qubit labels
//! follow |0⟩ = |−z⟩, which makes 𝒫_z the map onto |−z⟩⟨−z| = (𝟙 − σz)/2.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::liouville::{sandwich_superop, OperatorBasis, OperatorMatrix, SuperOperator};
use crate::scalar::{c, ci, cr, Real};

/// Canonical labels, in catalog order.
pub const CANONICAL_LABELS: [&str; 16] = [
    "R0", "Rx+90", "Ry+90", "Rz+90", "Rx-90", "Ry-90", "Rz-90", "Rxy180", "Ryz180", "Rzx180", "Mx", "My", "Mz", "Px",
    "Py", "Pz",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// Pauli index (1, 2, 3).
    pub fn pauli_index(self) -> usize {
        self as usize + 1
    }

    pub fn unit<T: Real>(self) -> [T; 3] {
        let mut v = [T::zero(); 3];
        v[self as usize] = T::one();
        v
    }

    pub fn sigma<T: Real>(self) -> OperatorMatrix<T> {
        OperatorMatrix::pauli(self.pauli_index())
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            _ => Err(Error::InvalidAxis(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

/// What a catalog operation does to the sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperationKind<T: Real> {
    Identity,
    Rotation { angle: T, axis: [T; 3] },
    Measurement(Axis),
    Polarization(Axis),
}

/// A sensor operation with its canonical label.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogOperation<T: Real> {
    pub kind: OperationKind<T>,
    pub label: String,
}

fn qubit_basis<T: Real>() -> Arc<OperatorBasis<T>> {
    Arc::new(OperatorBasis::pauli())
}

fn check_unit<T: Real>(axis: &[T; 3]) -> Result<()> {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if (n - T::one()).abs() > T::structural_tol() {
        return Err(Error::NonUnitAxis(n.to_f64()));
    }
    Ok(())
}

impl<T: Real> CatalogOperation<T> {
    pub fn identity() -> Self {
        Self { kind: OperationKind::Identity, label: "R0".into() }
    }

    /// Rotation by `angle` about a unit `axis`; the label is canonical when one exists.
    pub fn rotation(angle: T, axis: [T; 3]) -> Result<Self> {
        check_unit(&axis)?;
        let label = rotation_label(angle, &axis);
        Ok(Self { kind: OperationKind::Rotation { angle, axis }, label })
    }

    pub fn measurement(axis: Axis) -> Self {
        Self { kind: OperationKind::Measurement(axis), label: format!("M{axis}") }
    }

    pub fn polarization(axis: Axis) -> Self {
        Self { kind: OperationKind::Polarization(axis), label: format!("P{axis}") }
    }

    /// Parses a canonical label such as `Ry+90`, `Rzx180`, `Mz`, `Px`.
    ///
    /// Axis rotations also accept arbitrary degrees (`Rx+93.5`, `Ry-90`).
    pub fn from_label(label: &str) -> Result<Self> {
        let unknown = || Error::UnknownLabel(label.to_string());
        let diag = |a: usize, b: usize| {
            let h = T::lit(std::f64::consts::FRAC_1_SQRT_2);
            let mut v = [T::zero(); 3];
            v[a] = h;
            v[b] = h;
            v
        };
        match label {
            "R0" => return Ok(Self::identity()),
            "Rxy180" => return Self::rotation(T::pi(), diag(0, 1)),
            "Ryz180" => return Self::rotation(T::pi(), diag(1, 2)),
            "Rzx180" => return Self::rotation(T::pi(), diag(0, 2)),
            _ => {}
        }
        let mut chars = label.chars();
        let head = chars.next().ok_or_else(unknown)?;
        let rest: &str = &label[1..];
        match head {
            'M' => Ok(Self::measurement(rest.parse().map_err(|_| unknown())?)),
            'P' => Ok(Self::polarization(rest.parse().map_err(|_| unknown())?)),
            'R' if rest.len() > 2 => {
                let axis: Axis = rest[..1].parse().map_err(|_| unknown())?;
                let deg: f64 = rest[1..].parse().map_err(|_| unknown())?;
                if !rest[1..].starts_with(['+', '-']) {
                    return Err(unknown());
                }
                let op = Self::rotation(T::lit(deg.to_radians()), axis.unit())?;
                Ok(Self { label: label.to_string(), ..op })
            }
            _ => Err(unknown()),
        }
    }

    /// Liouville matrix on the sensor Pauli basis.
    pub fn superop(&self) -> SuperOperator<T> {
        match self.kind {
            OperationKind::Identity => SuperOperator::qubit_identity(),
            OperationKind::Rotation { angle, axis } => rotation_block(angle, &axis),
            OperationKind::Measurement(a) => measurement_superop(a),
            OperationKind::Polarization(a) => polarization_superop(a),
        }
    }

    /// Signed difference of measurement branches; not realizable as a single CPTP map.
    pub fn is_signed_postprocessed(&self) -> bool {
        matches!(self.kind, OperationKind::Measurement(_))
    }

    pub fn is_rotation(&self) -> bool {
        matches!(self.kind, OperationKind::Rotation { .. })
    }
}

impl<T: Real> fmt::Display for CatalogOperation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn rotation_label<T: Real>(angle: T, axis: &[T; 3]) -> String {
    let deg = angle.to_f64().to_degrees();
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    let n: Vec<f64> = axis.iter().map(|x| x.to_f64()).collect();
    if close(deg, 0.0) {
        return "R0".into();
    }
    for a in Axis::ALL {
        let i = a as usize;
        if close(n[i], 1.0) {
            return format!("R{a}{}{}", if deg >= 0.0 { "+" } else { "" }, fmt_deg(deg));
        }
        if close(n[i], -1.0) {
            return format!("R{a}{}{}", if deg <= 0.0 { "+" } else { "-" }, fmt_deg(deg.abs()));
        }
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (name, (p, q)) in [("xy", (0, 1)), ("yz", (1, 2)), ("zx", (0, 2))] {
        let r = 3 - p - q;
        if close(n[p], h) && close(n[q], h) && close(n[r], 0.0) {
            return format!("R{name}{}", fmt_deg(deg));
        }
    }
    format!("R({:.6},[{:.6},{:.6},{:.6}])", angle.to_f64(), n[0], n[1], n[2])
}

fn fmt_deg(d: f64) -> String {
    if (d - d.round()).abs() < 1e-9 {
        format!("{}", d.round() as i64)
    } else {
        format!("{d}")
    }
}

/// The sixteen canonical operations in catalog order.
pub fn canonical_operations<T: Real>() -> Vec<CatalogOperation<T>> {
    CANONICAL_LABELS.iter().map(|l| CatalogOperation::from_label(l).expect("canonical label")).collect()
}

/// Levi-Civita symbol ε_ijk.
fn levi(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

fn rotation_block<T: Real>(angle: T, n: &[T; 3]) -> SuperOperator<T> {
    let (s, co) = angle.sin_cos();
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = cr(1.0);
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { T::one() } else { T::zero() };
            let mut r = delta * co + n[i] * n[j] * (T::one() - co);
            for (k, nk) in n.iter().enumerate() {
                r -= s * T::lit(levi(i, j, k)) * *nk;
            }
            m[(i + 1, j + 1)] = c(r, T::zero());
        }
    }
    SuperOperator::from_matrix(m, qubit_basis()).expect("4x4")
}

/// diag(1, R(θ, n)) with R the active Bloch rotation.
pub fn rotation_superop<T: Real>(angle: T, axis: [T; 3]) -> Result<SuperOperator<T>> {
    check_unit(&axis)?;
    Ok(rotation_block(angle, &axis))
}

fn projector<T: Real>(axis: Axis, sign: Sign) -> OperatorMatrix<T> {
    let s = match sign {
        Sign::Plus => T::one(),
        Sign::Minus => -T::one(),
    };
    (OperatorMatrix::identity(2) + axis.sigma::<T>().scale_real(s)).scale_real(T::lit(0.5))
}

/// ρ ↦ |+a⟩⟨+a|ρ|+a⟩⟨+a| − |−a⟩⟨−a|ρ|−a⟩⟨−a|.
pub fn measurement_superop<T: Real>(axis: Axis) -> SuperOperator<T> {
    let b = qubit_basis();
    let p = projector::<T>(axis, Sign::Plus);
    let m = projector::<T>(axis, Sign::Minus);
    let sp = sandwich_superop(&p, &p, &b).expect("qubit");
    let sm = sandwich_superop(&m, &m, &b).expect("qubit");
    sp.sub(&sm).expect("same basis")
}

/// Polarization onto |−a⟩ from its Kraus operators.
pub fn polarization_superop<T: Real>(axis: Axis) -> SuperOperator<T> {
    let b = qubit_basis();
    // |−z⟩⟨−z| and |−z⟩⟨+z| in the σz = diag(1, −1) representation.
    let k1 = projector::<T>(Axis::Z, Sign::Minus);
    let z = cr(0.0);
    let k2 = OperatorMatrix::from_row_slice(2, &[z, z, cr(1.0), z]).expect("2x2");
    let pz = sandwich_superop(&k1, &k1, &b)
        .expect("qubit")
        .add(&sandwich_superop(&k2, &k2, &b).expect("qubit"))
        .expect("same basis");
    let half = T::frac_pi_2();
    match axis {
        Axis::Z => pz,
        Axis::X => rotation_block(half, &Axis::Y.unit())
            .compose(&pz)
            .and_then(|m| m.compose(&rotation_block(-half, &Axis::Y.unit())))
            .expect("same basis"),
        Axis::Y => rotation_block(-half, &Axis::X.unit())
            .compose(&pz)
            .and_then(|m| m.compose(&rotation_block(half, &Axis::X.unit())))
            .expect("same basis"),
    }
}

/// Index of one of the sixteen generators 𝒥.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorIndex {
    /// 𝒥₀ρ = ρ.
    Identity,
    /// 𝒥α⁺ρ = (σαρ + ρσα)/2, 𝒥α⁻ρ = −i(σαρ − ρσα)/2.
    Single(Axis, Sign),
    /// 𝒥αβ⁺ρ = (σαρσβ + σβρσα)/2, 𝒥αβ⁻ρ = −i(σαρσβ − σβρσα)/2.
    Pair(Axis, Axis, Sign),
}

impl GeneratorIndex {
    /// The sixteen independent generators: 𝒥₀, 𝒥α^±, 𝒥αβ⁺ (α ≤ β), 𝒥αβ⁻ (α < β).
    pub fn all() -> Vec<GeneratorIndex> {
        use Axis::*;
        let mut v = vec![GeneratorIndex::Identity];
        for s in [Sign::Plus, Sign::Minus] {
            for a in Axis::ALL {
                v.push(GeneratorIndex::Single(a, s));
            }
        }
        for (a, b) in [(X, X), (Y, Y), (Z, Z), (X, Y), (Y, Z), (Z, X)] {
            v.push(GeneratorIndex::Pair(a, b, Sign::Plus));
        }
        for (a, b) in [(X, Y), (Y, Z), (Z, X)] {
            v.push(GeneratorIndex::Pair(a, b, Sign::Minus));
        }
        v
    }
}

/// Liouville matrix of a generator.
pub fn generator_superop<T: Real>(g: GeneratorIndex) -> SuperOperator<T> {
    let b = qubit_basis::<T>();
    let id = OperatorMatrix::<T>::identity(2);
    let sw = |l: &OperatorMatrix<T>, r: &OperatorMatrix<T>| {
        // X ↦ l X r, expressed as a sandwich with B† = r.
        sandwich_superop(l, &r.adjoint(), &b).expect("qubit")
    };
    let combine = |p: SuperOperator<T>, q: SuperOperator<T>, s: Sign| match s {
        Sign::Plus => p.add(&q).expect("same basis").scale(T::lit(0.5)),
        Sign::Minus => p.sub(&q).expect("same basis").scale_complex(ci(-0.5)),
    };
    match g {
        GeneratorIndex::Identity => SuperOperator::identity(b.clone()),
        GeneratorIndex::Single(a, s) => {
            let sa = a.sigma::<T>();
            combine(sw(&sa, &id), sw(&id, &sa), s)
        }
        GeneratorIndex::Pair(a, bb, s) => {
            let (sa, sb) = (a.sigma::<T>(), bb.sigma::<T>());
            combine(sw(&sa, &sb), sw(&sb, &sa), s)
        }
    }
}

/// Table-form generator expansion of 𝒫_a.
pub fn polarization_generator_expansion<T: Real>(axis: Axis) -> SuperOperator<T> {
    use Axis::*;
    let g = |i: GeneratorIndex| generator_superop::<T>(i);
    let (single, pair) = match axis {
        Z => (Z, (X, Y)),
        X => (X, (Y, Z)),
        Y => (Y, (Z, X)),
    };
    let terms = [
        (1.0, g(GeneratorIndex::Identity)),
        (-2.0, g(GeneratorIndex::Single(single, Sign::Plus))),
        (1.0, g(GeneratorIndex::Pair(X, X, Sign::Plus))),
        (1.0, g(GeneratorIndex::Pair(Y, Y, Sign::Plus))),
        (1.0, g(GeneratorIndex::Pair(Z, Z, Sign::Plus))),
        (-2.0, g(GeneratorIndex::Pair(pair.0, pair.1, Sign::Minus))),
    ];
    SuperOperator::weighted_sum(terms.iter().map(|(w, s)| (T::lit(w / 4.0), s)), qubit_basis()).expect("same basis")
}

/// Generator expansion of a rotation by `angle`, with θ = angle/2:
/// cos²θ 𝒥₀ + 2cosθ sinθ nα𝒥α⁻ + sin²θ nαnβ𝒥αβ⁺.
pub fn rotation_generator_expansion<T: Real>(angle: T, axis: [T; 3]) -> SuperOperator<T> {
    let th = angle * T::lit(0.5);
    let (s, co) = th.sin_cos();
    let mut acc = generator_superop::<T>(GeneratorIndex::Identity).scale(co * co);
    for a in Axis::ALL {
        let na = axis[a as usize];
        let term = generator_superop::<T>(GeneratorIndex::Single(a, Sign::Minus)).scale(T::lit(2.0) * co * s * na);
        acc = acc.add(&term).expect("same basis");
        for b in Axis::ALL {
            let nb = axis[b as usize];
            let term = generator_superop::<T>(GeneratorIndex::Pair(a, b, Sign::Plus)).scale(s * s * na * nb);
            acc = acc.add(&term).expect("same basis");
        }
    }
    acc
}

/// Frobenius residual between `rotation_superop` and its generator expansion.
pub fn unitary_generator_expansion_check<T: Real>(angle: T, axis: [T; 3]) -> Result<T> {
    let direct = rotation_superop(angle, axis)?;
    let expanded = rotation_generator_expansion(angle, axis);
    Ok(direct.sub(&expanded)?.frobenius_norm())
}

/// Trace preservation: first row of the Pauli-basis matrix is (1, 0, 0, 0).
pub fn is_trace_preserving<T: Real>(s: &SuperOperator<T>, tol: T) -> bool {
    (0..4).all(|k| {
        let want = if k == 0 { cr::<T>(1.0) } else { cr(0.0) };
        (s.get(0, k) - want).norm_sqr().sqrt() <= tol
    })
}

/// Unitality: the map fixes 𝟙.
pub fn is_unital<T: Real>(s: &SuperOperator<T>, tol: T) -> bool {
    (0..4).all(|k| {
        let want = if k == 0 { cr::<T>(1.0) } else { cr(0.0) };
        (s.get(k, 0) - want).norm_sqr().sqrt() <= tol
    })
}
