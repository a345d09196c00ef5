//! Sequential protocol simulation: channel on the sensor, coupling window,
//! free bath evolution, repeated per slot, then ⟨O⟩ on the sensor.
//!
//! Signed channels are expanded into their operation terms and the signal is
//! the weighted sum of the per-sequence runs, exactly as phase cycling combines
//! separate acquisitions.

mod spectrum;
mod sweep;

pub use spectrum::{spectral_density, sweep_2d, Peak, Spectrum2D};
pub use sweep::{fit_power_law, format_sig17, sweep, PowerLawFit, SweepResult};

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::catalog::Axis;
use crate::error::{Error, Result};
use crate::liouville::{HermitianEigen, OperatorMatrix, SuperOperator};
use crate::scalar::{c, Real, C};
use crate::synthesis::{quarter_turn, robust_repeat, second_order_channels, SynthesizedChannel};
use crate::system::SystemModel;

/// Hamiltonian acting during a coupling window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingMode {
    /// e^{−iVδt}: the bath drive is paused during the window.
    #[default]
    CouplingOnly,
    /// e^{−i(V + 𝟙⊗H_B)δt}.
    CouplingPlusBathDrive,
}

impl fmt::Display for CouplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CouplingMode::CouplingOnly => "coupling-only",
            CouplingMode::CouplingPlusBathDrive => "coupling-plus-bath-drive",
        })
    }
}

impl FromStr for CouplingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupling-only" => Ok(CouplingMode::CouplingOnly),
            "coupling-plus-bath-drive" => Ok(CouplingMode::CouplingPlusBathDrive),
            _ => Err(Error::InvalidParameter(format!("unknown coupling mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolSlot<T: Real> {
    pub channel: SynthesizedChannel<T>,
    /// δt in s.
    pub coupling_window: T,
    /// τ in s.
    pub free_evolution_after: T,
}

impl<T: Real> ProtocolSlot<T> {
    pub fn new(channel: SynthesizedChannel<T>, coupling_window: T, free_evolution_after: T) -> Self {
        Self { channel, coupling_window, free_evolution_after }
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolSpec<T: Real> {
    pub model: SystemModel<T>,
    pub slots: Vec<ProtocolSlot<T>>,
    /// Sensor observable, σ_y by default.
    pub observable: OperatorMatrix<T>,
    pub coupling_mode: CouplingMode,
}

impl<T: Real> ProtocolSpec<T> {
    pub fn new(model: SystemModel<T>, slots: Vec<ProtocolSlot<T>>) -> Result<Self> {
        let spec = Self { model, slots, observable: OperatorMatrix::pauli(2), coupling_mode: CouplingMode::default() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_observable(mut self, o: OperatorMatrix<T>) -> Self {
        self.observable = o;
        self
    }

    pub fn with_mode(mut self, mode: CouplingMode) -> Self {
        self.coupling_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots.is_empty() {
            return Err(Error::InvalidParameter("protocol needs at least one slot".into()));
        }
        for s in &self.slots {
            if s.free_evolution_after < T::zero() || s.coupling_window < T::zero() {
                return Err(Error::InvalidParameter("negative window or delay".into()));
            }
            if s.channel.matrix().hilbert_dim() != self.model.sensor_dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.model.sensor_dim(),
                    got: s.channel.matrix().hilbert_dim(),
                });
            }
        }
        if self.observable.dim() != self.model.sensor_dim() {
            return Err(Error::DimensionMismatch { expected: self.model.sensor_dim(), got: self.observable.dim() });
        }
        Ok(())
    }

    /// Start time of each coupling window on the bath clock, t₁ = 0.
    ///
    /// The bath only evolves between windows in coupling-only mode, so
    /// t_{k+1} = t_k + τ_k; with the drive on during windows t_{k+1} = t_k + δt_k + τ_k.
    pub fn window_times(&self) -> Vec<T> {
        let mut t = T::zero();
        let mut out = Vec::with_capacity(self.slots.len());
        for s in &self.slots {
            out.push(t);
            t += s.free_evolution_after;
            if self.coupling_mode == CouplingMode::CouplingPlusBathDrive {
                t += s.coupling_window;
            }
        }
        out
    }

    /// Number of per-term sequences a run propagates.
    pub fn term_sequences(&self) -> usize {
        self.slots.iter().map(|s| s.channel.terms().len()).product()
    }
}

/// Applies a sensor superoperator (Pauli basis, v_n = Tr(σ_n X)/2) to a joint sensor ⊗ bath operator.
pub fn apply_sensor_superop<T: Real>(map: &SuperOperator<T>, rho: &OperatorMatrix<T>) -> Result<OperatorMatrix<T>> {
    if map.hilbert_dim() != 2 || rho.dim() % 2 != 0 {
        return Err(Error::DimensionMismatch { expected: 2, got: map.hilbert_dim() });
    }
    let d = rho.dim() / 2;
    let m = rho.matrix();
    let blk = |a: usize, b: usize| m.view((a * d, b * d), (d, d)).clone_owned();
    let (r00, r01, r10, r11) = (blk(0, 0), blk(0, 1), blk(1, 0), blk(1, 1));
    let h = c(T::lit(0.5), T::zero());
    let i = c(T::zero(), T::one());
    // R_n = Tr_S[(σ_n ⊗ 𝟙)ρ]/2.
    let r = [(&r00 + &r11) * h, (&r01 + &r10) * h, (&r01 - &r10) * (i * h), (&r00 - &r11) * h];
    let mut out = [DMatrix::<C<T>>::zeros(d, d), DMatrix::zeros(d, d), DMatrix::zeros(d, d), DMatrix::zeros(d, d)];
    for (mi, o) in out.iter_mut().enumerate() {
        for (ni, rn) in r.iter().enumerate() {
            let w = map.get(mi, ni);
            if w != C::new(T::zero(), T::zero()) {
                *o += rn * w;
            }
        }
    }
    let [q0, qx, qy, qz] = out;
    let mut res = DMatrix::zeros(2 * d, 2 * d);
    res.view_mut((0, 0), (d, d)).copy_from(&(&q0 + &qz));
    res.view_mut((d, d), (d, d)).copy_from(&(&q0 - &qz));
    res.view_mut((0, d), (d, d)).copy_from(&(&qx - &qy * i));
    res.view_mut((d, 0), (d, d)).copy_from(&(&qx + &qy * i));
    OperatorMatrix::new(res)
}

/// Precomputed joint propagators for every slot.
struct Propagators<T: Real> {
    coupling: Vec<OperatorMatrix<T>>,
    free: Vec<OperatorMatrix<T>>,
}

fn propagators<T: Real>(spec: &ProtocolSpec<T>) -> Propagators<T> {
    let model = &spec.model;
    let id_s = OperatorMatrix::identity(2);
    let h_window = match spec.coupling_mode {
        CouplingMode::CouplingOnly => model.v.clone(),
        CouplingMode::CouplingPlusBathDrive => &model.v + &id_s.kron(&model.h_b),
    };
    let eig: HermitianEigen<T> = h_window.hermitian_eigen();
    let coupling = spec.slots.iter().map(|s| eig.unitary(s.coupling_window)).collect();
    let free = spec.slots.iter().map(|s| id_s.kron(&model.bath_propagator(s.free_evolution_after))).collect();
    Propagators { coupling, free }
}

fn expectation<T: Real>(spec: &ProtocolSpec<T>, rho: &OperatorMatrix<T>) -> T {
    let o = spec.observable.kron(&OperatorMatrix::identity(spec.model.bath_dim()));
    (&o * rho).trace().re
}

/// Final joint state for one choice of sensor map per slot.
pub fn propagate_maps<T: Real>(spec: &ProtocolSpec<T>, maps: &[SuperOperator<T>]) -> Result<OperatorMatrix<T>> {
    spec.validate()?;
    if maps.len() != spec.slots.len() {
        return Err(Error::LengthMismatch(maps.len(), spec.slots.len()));
    }
    let p = propagators(spec);
    let mut rho = spec.model.initial_state();
    for (k, m) in maps.iter().enumerate() {
        rho = apply_sensor_superop(m, &rho)?;
        rho = rho.conjugate_by(&p.coupling[k]).conjugate_by(&p.free[k]);
    }
    Ok(rho)
}

/// Signal of the full protocol: weighted sum over every per-slot term sequence.
pub fn run<T: Real>(spec: &ProtocolSpec<T>) -> Result<T> {
    spec.validate()?;
    let p = propagators(spec);
    let term_maps: Vec<Vec<(T, SuperOperator<T>)>> =
        spec.slots.iter().map(|s| s.channel.terms().iter().map(|t| (t.weight, t.superop())).collect()).collect();
    let rho = spec.model.initial_state();
    run_tree(spec, &p, &term_maps, 0, &rho, T::one())
}

fn run_tree<T: Real>(
    spec: &ProtocolSpec<T>,
    p: &Propagators<T>,
    terms: &[Vec<(T, SuperOperator<T>)>],
    k: usize,
    rho: &OperatorMatrix<T>,
    weight: T,
) -> Result<T> {
    if k == terms.len() {
        return Ok(weight * expectation(spec, rho));
    }
    let mut total = T::zero();
    for (w, m) in &terms[k] {
        if *w == T::zero() {
            continue;
        }
        let next = apply_sensor_superop(m, rho)?.conjugate_by(&p.coupling[k]).conjugate_by(&p.free[k]);
        total += run_tree(spec, p, terms, k + 1, &next, weight * *w)?;
    }
    Ok(total)
}

/// Signal using each channel's cached matrix in place of the term expansion.
pub fn run_direct<T: Real>(spec: &ProtocolSpec<T>) -> Result<T> {
    let maps: Vec<SuperOperator<T>> = spec.slots.iter().map(|s| s.channel.matrix().clone()).collect();
    let rho = propagate_maps(spec, &maps)?;
    Ok(expectation(spec, &rho))
}

/// (Y + Ȳ)/2 then Y, with windows δt = `model.params.delta_t` and delay τ21 between them.
pub fn second_order_protocol<T: Real>(model: &SystemModel<T>, tau21: T) -> Result<ProtocolSpec<T>> {
    let dt = model.params.delta_t;
    let [p1, p2] = second_order_channels();
    ProtocolSpec::new(model.clone(), vec![ProtocolSlot::new(p1, dt, tau21), ProtocolSlot::new(p2, dt, T::zero())])
}

/// Second-order channels with every quarter turn over-rotated by δθ.
pub fn second_order_channels_with_error<T: Real>(dtheta: T) -> [SynthesizedChannel<T>; 2] {
    let h = T::lit(0.5);
    let p1 = SynthesizedChannel::from_weighted([
        (h, quarter_turn(Axis::Y, true, dtheta)),
        (h, quarter_turn(Axis::Y, false, dtheta)),
    ]);
    [p1, SynthesizedChannel::single(quarter_turn(Axis::Y, true, dtheta))]
}

/// Fourth-order channels with every quarter turn over-rotated by δθ and 𝒫₃ repeated `n` times.
pub fn fourth_order_channels_with_error<T: Real>(n: usize, dtheta: T) -> Result<[SynthesizedChannel<T>; 4]> {
    let h = T::lit(0.5);
    let diff = |axis| {
        SynthesizedChannel::from_weighted([
            (h, quarter_turn(axis, true, dtheta)),
            (-h, quarter_turn(axis, false, dtheta)),
        ])
    };
    let p1 = diff(Axis::Y);
    let p2 = diff(Axis::X);
    let p3 = robust_repeat(dtheta, n)?;
    Ok([p1.clone(), p2, p3, p1])
}

/// 𝒫₁, 𝒫₂, 𝒫₃ⁿ, 𝒫₁ with delays τ21, τ32, τ43 between the windows.
pub fn fourth_order_protocol<T: Real>(
    model: &SystemModel<T>,
    tau21: T,
    tau32: T,
    tau43: T,
    n: usize,
    dtheta: T,
) -> Result<ProtocolSpec<T>> {
    let dt = model.params.delta_t;
    let [p1, p2, p3, p4] = fourth_order_channels_with_error(n, dtheta)?;
    ProtocolSpec::new(
        model.clone(),
        vec![
            ProtocolSlot::new(p1, dt, tau21),
            ProtocolSlot::new(p2, dt, tau32),
            ProtocolSlot::new(p3, dt, tau43),
            ProtocolSlot::new(p4, dt, T::zero()),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::canonical_operations;
    use crate::liouville::OperatorBasis;
    use crate::oracle::{analytic_c_plus_minus, exact_s2};
    use crate::system::ExperimentParams;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn model() -> SystemModel<f64> {
        SystemModel::build(ExperimentParams::default()).unwrap()
    }

    #[test]
    fn sensor_superop_matches_kraus() {
        let m = model();
        let rho = m.initial_state();
        let u = OperatorMatrix::<f64>::from_fn(2, |r, c| {
            let th = 0.3f64;
            match (r, c) {
                (0, 0) | (1, 1) => C::new((th).cos(), 0.0),
                (0, 1) => C::new(-(th).sin(), 0.0),
                _ => C::new((th).sin(), 0.0),
            }
        });
        let map = crate::liouville::sandwich_superop(&u, &u, &Arc::new(OperatorBasis::pauli())).unwrap();
        let got = apply_sensor_superop(&map, &rho).unwrap();
        let want = rho.conjugate_by(&u.kron(&OperatorMatrix::identity(8)));
        assert!(got.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn identity_channels_give_zero() {
        let m = model();
        let slots = vec![
            ProtocolSlot::new(SynthesizedChannel::identity(), 5e-4, 1e-5),
            ProtocolSlot::new(SynthesizedChannel::identity(), 5e-4, 0.0),
        ];
        let spec = ProtocolSpec::new(m, slots).unwrap();
        assert!(run(&spec).unwrap().abs() < 1e-15);
    }

    #[test]
    fn second_order_at_zero_delay() {
        let spec = second_order_protocol(&model(), 0.0).unwrap();
        assert_eq!(spec.slots.len(), 2);
        assert!(run(&spec).unwrap().abs() < 1e-12);
    }

    #[test]
    fn second_order_matches_exact_and_leading_order() {
        let m = model();
        let tau = 8e-6;
        let s = run(&second_order_protocol(&m, tau).unwrap()).unwrap();
        let e = exact_s2(m.params.delta_t, 0.0, tau, &m).unwrap();
        assert!((s - e).abs() < 1e-10);
        let lead = m.params.delta_t.powi(2) * analytic_c_plus_minus(tau, &m.params).unwrap();
        assert!((s / lead - 1.0).abs() < 0.1);
    }

    #[test]
    fn empty_and_mismatched_specs() {
        assert!(ProtocolSpec::new(model(), vec![]).is_err());
        let slots = vec![ProtocolSlot::new(SynthesizedChannel::identity(), 5e-4, -1.0)];
        assert!(ProtocolSpec::new(model(), slots).is_err());
        let spec = second_order_protocol(&model(), 0.0)
            .unwrap()
            .with_observable(OperatorMatrix::pauli(2).kron(&OperatorMatrix::pauli(1)));
        assert!(run(&spec).is_err());
    }

    #[test]
    fn window_times_by_mode() {
        let spec = fourth_order_protocol(&model(), 1e-6, 2e-6, 3e-6, 1, 0.0).unwrap();
        assert_eq!(spec.window_times(), vec![0.0, 1e-6, 3e-6, 6e-6]);
        let spec = spec.with_mode(CouplingMode::CouplingPlusBathDrive);
        let t = spec.window_times();
        assert!((t[3] - (6e-6 + 15e-4)).abs() < 1e-18);
    }

    #[test]
    fn mode_round_trip() {
        for m in [CouplingMode::CouplingOnly, CouplingMode::CouplingPlusBathDrive] {
            assert_eq!(m.to_string().parse::<CouplingMode>().unwrap(), m);
        }
        assert!("both".parse::<CouplingMode>().is_err());
    }

    #[test]
    fn robust_ideal_equals_single() {
        let m = model();
        let a = run(&fourth_order_protocol(&m, 7e-6, 10e-6, 10e-6, 1, 0.0).unwrap()).unwrap();
        let b = run(&fourth_order_protocol(&m, 7e-6, 10e-6, 10e-6, 3, 0.0).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn term_expansion_equals_direct() {
        let m = model();
        let spec = fourth_order_protocol(&m, 5e-6, 3e-6, 9e-6, 3, 0.04).unwrap();
        assert_eq!(spec.term_sequences(), 64);
        assert!((run(&spec).unwrap() - run_direct(&spec).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn cptp_terms_preserve_trace() {
        let m = model();
        let spec = second_order_protocol(&m, 4e-6).unwrap();
        for op in canonical_operations::<f64>() {
            if op.is_signed_postprocessed() {
                continue;
            }
            let maps = vec![op.superop(), op.superop()];
            let rho = propagate_maps(&spec, &maps).unwrap();
            assert!((rho.trace().re - 1.0).abs() < 1e-12, "{}", op.label);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn prop_linearity(w1 in -2.0..2.0f64, w2 in -2.0..2.0f64, a in 0usize..16, b in 0usize..16, tau in 0.0..30e-6f64) {
            let m = model();
            let ops = canonical_operations::<f64>();
            let dt = m.params.delta_t;
            let build = |ch: SynthesizedChannel<f64>| {
                let last = SynthesizedChannel::single(ops[2].clone());
                ProtocolSpec::new(m.clone(), vec![ProtocolSlot::new(ch, dt, tau), ProtocolSlot::new(last, dt, 0.0)]).unwrap()
            };
            let mixed = run(&build(SynthesizedChannel::from_weighted([(w1, ops[a].clone()), (w2, ops[b].clone())]))).unwrap();
            let r1 = run(&build(SynthesizedChannel::single(ops[a].clone()))).unwrap();
            let r2 = run(&build(SynthesizedChannel::single(ops[b].clone()))).unwrap();
            prop_assert!((mixed - (w1 * r1 + w2 * r2)).abs() < 1e-12);
        }
    }
}
