//! Reference values: brute-force correlations, closed forms, sensor
//! coefficients and the exact second- and fourth-order signals.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::liouville::{anticomm_superop, comm_superop, vectorize, OperatorBasis, OperatorMatrix, SuperOperator};
use crate::ordering::{Eta, OrderingSequence};
use crate::scalar::{c, Real, C};
use crate::system::{ExperimentParams, SystemModel};

/// ℬ^η X for η ∈ {+, −, 0}.
pub fn apply_bath_superop<T: Real>(b: &OperatorMatrix<T>, eta: Eta, x: &OperatorMatrix<T>) -> OperatorMatrix<T> {
    match eta {
        Eta::Zero => x.clone(),
        Eta::Plus => (b * x + x * b).scale_real(T::lit(0.5)),
        Eta::Minus => (b * x - x * b).scale(c(T::zero(), T::lit(-0.5))),
    }
}

fn check_times<T: Real>(times: &[T]) -> Result<()> {
    for (k, w) in times.windows(2).enumerate() {
        if w[1] < w[0] {
            return Err(Error::DecreasingTimes(k + 1));
        }
    }
    Ok(())
}

/// C^{η_N⋯η₁} = Tr(ℬ_N^{η_N}⋯ℬ₁^{η₁} ρ_B), with `times[k]` the time of slot k (earliest first).
pub fn correlation<T: Real>(eta: &OrderingSequence, times: &[T], model: &SystemModel<T>) -> Result<T> {
    Ok(correlation_complex(eta, times, model)?.re)
}

/// As [`correlation`], keeping the (vanishing) imaginary part.
pub fn correlation_complex<T: Real>(eta: &OrderingSequence, times: &[T], model: &SystemModel<T>) -> Result<C<T>> {
    if times.len() != eta.len() {
        return Err(Error::LengthMismatch(times.len(), eta.len()));
    }
    check_times(times)?;
    let mut x = model.rho_b.clone();
    for (&e, &t) in eta.entries().iter().zip(times) {
        if e != Eta::Zero {
            x = apply_bath_superop(&model.bath_operator_at(t), e, &x);
        }
    }
    Ok(x.trace())
}

fn require_three_spins<T: Real>(params: &ExperimentParams<T>) -> Result<()> {
    if params.bath_spins != 3 {
        return Err(Error::UnsupportedBath(params.bath_spins));
    }
    Ok(())
}

/// C⁺⁻(τ21) = ¾J²p_H sin(2πντ21).
pub fn analytic_c_plus_minus<T: Real>(tau21: T, params: &ExperimentParams<T>) -> Result<T> {
    require_three_spins(params)?;
    let j = params.j();
    Ok(T::lit(0.75) * j * j * params.p_h * (T::two_pi() * params.nu * tau21).sin())
}

/// C⁺⁻⁻⁺(τ21, τ43) = (3/16)J⁴ sin(2πντ21) sin(2πντ43), independent of p_H.
pub fn analytic_c_pmmp<T: Real>(tau21: T, tau43: T, params: &ExperimentParams<T>) -> Result<T> {
    require_three_spins(params)?;
    let j2 = params.j() * params.j();
    let w = T::two_pi() * params.nu;
    Ok(T::lit(3.0 / 16.0) * j2 * j2 * (w * tau21).sin() * (w * tau43).sin())
}

/// C⁺⁰⁰⁺(τ41) = ¾J² cos(2πντ41).
pub fn analytic_c_p00p<T: Real>(tau41: T, params: &ExperimentParams<T>) -> Result<T> {
    require_three_spins(params)?;
    let j = params.j();
    Ok(T::lit(0.75) * j * j * (T::two_pi() * params.nu * tau41).cos())
}

/// A^{η̄} = 2^Θ Tr_S[O (𝒯Π 𝒮^{η̄_k}𝒫_k) ρ_S] with S = σ_z/2, for the bath-side ordering `eta`.
pub fn coefficient_a<T: Real>(
    channels: &[SuperOperator<T>],
    eta: &OrderingSequence,
    rho_s: &OperatorMatrix<T>,
    observable: &OperatorMatrix<T>,
) -> Result<T> {
    if channels.len() != eta.len() {
        return Err(Error::LengthMismatch(channels.len(), eta.len()));
    }
    let basis = Arc::new(OperatorBasis::pauli());
    let s = OperatorMatrix::pauli(3).scale_real(T::lit(0.5));
    let s_plus = anticomm_superop(&s, &basis)?;
    let s_minus = comm_superop(&s, &basis)?;
    let mut v = vectorize(rho_s, &basis)?;
    for (ch, &e) in channels.iter().zip(eta.entries()) {
        if ch.basis().dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: ch.basis().dim() });
        }
        v = ch.matrix() * v;
        match e.bar() {
            Eta::Zero => {}
            Eta::Plus => v = s_plus.matrix() * v,
            Eta::Minus => v = s_minus.matrix() * v,
        }
    }
    let o = DVector::from_fn(4, |k, _| (observable * basis.element(k)).trace());
    let val: C<T> = o.iter().zip(v.iter()).map(|(a, b)| *a * *b).sum();
    Ok(T::lit(2f64.powi(eta.theta() as i32)) * val.re)
}

/// Which bath superoperator a sine acts through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SineKind {
    /// sin[δt ℬ⁺]: (b_i + b_j)/2 in the eigenbasis of B.
    Anticommutator,
    /// sin[iδt ℬ⁻]: (b_i − b_j)/2 in the eigenbasis of B.
    Commutator,
}

/// sin[δt ℬ⁺]X or sin[iδt ℬ⁻]X through the eigen-decomposition of B.
pub fn superop_sine<T: Real>(b: &OperatorMatrix<T>, kind: SineKind, dt: T, x: &OperatorMatrix<T>) -> OperatorMatrix<T> {
    let e = b.hermitian_eigen();
    let w = &e.vectors;
    let xe = w.adjoint() * x.matrix() * w;
    let h = T::lit(0.5);
    let y = nalgebra::DMatrix::from_fn(xe.nrows(), xe.ncols(), |i, j| {
        let (bi, bj) = (e.values[i], e.values[j]);
        let arg = match kind {
            SineKind::Anticommutator => (bi + bj) * h,
            SineKind::Commutator => (bi - bj) * h,
        };
        xe[(i, j)] * (dt * arg).sin()
    });
    OperatorMatrix::new(w * y * w.adjoint()).expect("square")
}

/// Power-series form of [`superop_sine`]: Σ_k (−1)^k L^{2k+1}X/(2k+1)! with L = δtℬ⁺ or iδtℬ⁻.
pub fn superop_sine_series<T: Real>(
    b: &OperatorMatrix<T>,
    kind: SineKind,
    dt: T,
    x: &OperatorMatrix<T>,
    max_terms: usize,
) -> Result<OperatorMatrix<T>> {
    let h = T::lit(0.5) * dt;
    let l = |y: &OperatorMatrix<T>| match kind {
        SineKind::Anticommutator => (b * y + y * b).scale_real(h),
        SineKind::Commutator => (b * y - y * b).scale_real(h),
    };
    let scale = x.frobenius_norm();
    if scale == T::zero() {
        return Ok(x.clone());
    }
    let mut term = l(x);
    let mut sum = term.clone();
    for k in 1..max_terms {
        let n = T::from_usize((2 * k) * (2 * k + 1)).expect("small");
        term = l(&l(&term)).scale_real(-T::one() / n);
        sum = sum + term.clone();
        if term.frobenius_norm() <= T::lit(1e-18) * scale {
            return Ok(sum);
        }
    }
    Err(Error::SeriesNonConvergence(max_terms))
}

/// S₂ = −i Tr{sin[δt ℬ⁺(t₂)] sin[iδt ℬ⁻(t₁)] ρ_B}.
pub fn exact_s2<T: Real>(dt: T, t1: T, t2: T, model: &SystemModel<T>) -> Result<T> {
    if dt <= T::zero() {
        return Err(Error::InvalidParameter("delta_t must be positive".into()));
    }
    check_times(&[t1, t2])?;
    let x = superop_sine(&model.bath_operator_at(t1), SineKind::Commutator, dt, &model.rho_b);
    let x = superop_sine(&model.bath_operator_at(t2), SineKind::Anticommutator, dt, &x);
    let tr = x.trace();
    Ok((tr * c(T::zero(), -T::one())).re)
}

/// S₄ = −p_C Tr{sin[δtℬ⁺₄] sin[iδtℬ⁻₃] sin[iδtℬ⁻₂] sin[δtℬ⁺₁] ρ_B}.
pub fn exact_s4<T: Real>(dt: T, times: [T; 4], model: &SystemModel<T>, p_c: T) -> Result<T> {
    if dt <= T::zero() {
        return Err(Error::InvalidParameter("delta_t must be positive".into()));
    }
    check_times(&times)?;
    let kinds = [SineKind::Anticommutator, SineKind::Commutator, SineKind::Commutator, SineKind::Anticommutator];
    let mut x = model.rho_b.clone();
    for (t, kind) in times.iter().zip(kinds) {
        x = superop_sine(&model.bath_operator_at(*t), kind, dt, &x);
    }
    Ok(-p_c * x.trace().re)
}

/// Leading and next Taylor coefficients in δt of a nested-sine trace.
///
/// Each factor sin(δt L_k) contributes δt L_k − δt³L_k³/6, with L = ℬ⁺ or iℬ⁻
/// (both real maps), so the next coefficient replaces one factor at a time.
fn nested_sine_taylor<T: Real>(factors: &[(OperatorMatrix<T>, SineKind)], rho: &OperatorMatrix<T>) -> (C<T>, C<T>) {
    let h = T::lit(0.5);
    let apply = |b: &OperatorMatrix<T>, kind: SineKind, x: &OperatorMatrix<T>| match kind {
        SineKind::Anticommutator => (b * x + x * b).scale_real(h),
        SineKind::Commutator => (b * x - x * b).scale_real(h),
    };
    let lead = factors.iter().fold(rho.clone(), |x, (b, k)| apply(b, *k, &x)).trace();
    let mut next = C::new(T::zero(), T::zero());
    for j in 0..factors.len() {
        let mut x = rho.clone();
        for (i, (b, k)) in factors.iter().enumerate() {
            x = apply(b, *k, &x);
            if i == j {
                x = apply(b, *k, &apply(b, *k, &x)).scale_real(-T::one() / T::lit(6.0));
            }
        }
        next += x.trace();
    }
    (lead, next)
}

/// (c₂, c₄) with S₂ = c₂δt² + c₄δt⁴ + O(δt⁶).
pub fn exact_s2_taylor<T: Real>(t1: T, t2: T, model: &SystemModel<T>) -> Result<(T, T)> {
    check_times(&[t1, t2])?;
    let f =
        [(model.bath_operator_at(t1), SineKind::Commutator), (model.bath_operator_at(t2), SineKind::Anticommutator)];
    let (a, b) = nested_sine_taylor(&f, &model.rho_b);
    let mi = c(T::zero(), -T::one());
    Ok(((a * mi).re, (b * mi).re))
}

/// (c₄, c₆) with S₄ = c₄δt⁴ + c₆δt⁶ + O(δt⁸).
pub fn exact_s4_taylor<T: Real>(times: [T; 4], model: &SystemModel<T>, p_c: T) -> Result<(T, T)> {
    check_times(&times)?;
    let kinds = [SineKind::Anticommutator, SineKind::Commutator, SineKind::Commutator, SineKind::Anticommutator];
    let f: Vec<_> = times.iter().zip(kinds).map(|(t, k)| (model.bath_operator_at(*t), k)).collect();
    let (a, b) = nested_sine_taylor(&f, &model.rho_b);
    Ok((-p_c * a.re, -p_c * b.re))
}

/// Largest slot count accepted by [`predicted_signal`].
pub const MAX_PREDICTION_SLOTS: usize = 6;

/// Σ_η δt^Θ A^{η̄} C^η over all orderings with Θ ≤ `max_order`.
pub fn predicted_signal<T: Real>(
    channels: &[SuperOperator<T>],
    model: &SystemModel<T>,
    times: &[T],
    dt: T,
    max_order: usize,
    observable: &OperatorMatrix<T>,
) -> Result<T> {
    let n = channels.len();
    if n > MAX_PREDICTION_SLOTS {
        return Err(Error::Budget(format!("{n} slots exceeds the 3^{MAX_PREDICTION_SLOTS} ordering cap")));
    }
    if max_order > 2 * n {
        return Err(Error::InvalidParameter(format!("max_order {max_order} exceeds 2N = {}", 2 * n)));
    }
    if times.len() != n {
        return Err(Error::LengthMismatch(times.len(), n));
    }
    check_times(times)?;
    let mut total = T::zero();
    for eta in OrderingSequence::enumerate(n) {
        let theta = eta.theta();
        if theta > max_order {
            continue;
        }
        let a = coefficient_a(channels, &eta, &model.rho_s, observable)?;
        if a.abs() <= T::structural_tol() {
            continue;
        }
        let corr = correlation(&eta, times, model)?;
        total += dt.powi(theta as i32) * a * corr;
    }
    Ok(total)
}

/// Main and leakage terms of the error-injected fourth-order signal,
/// p_C cos³δθ δt⁴ C⁺⁻⁻⁺ and p_C cos²δθ (−sin δθ)ⁿ δt² C⁺⁰⁰⁺, for delays (τ21, τ32, τ43).
pub fn leakage_signal<T: Real>(
    dtheta: T,
    n: usize,
    dt: T,
    taus: [T; 3],
    params: &ExperimentParams<T>,
) -> Result<(T, T)> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let [t21, t32, t43] = taus;
    let (s, co) = dtheta.sin_cos();
    let main = params.p_c * co * co * co * dt.powi(4) * analytic_c_pmmp(t21, t43, params)?;
    let leak = params.p_c * co * co * (-s).powi(n as i32) * dt * dt * analytic_c_p00p(t21 + t32 + t43, params)?;
    Ok((main, leak))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::{fourth_order_channels, second_order_channels};
    use proptest::prelude::*;

    fn model() -> SystemModel<f64> {
        SystemModel::build(ExperimentParams::default()).unwrap()
    }

    fn seq(s: &str) -> OrderingSequence {
        s.parse().unwrap()
    }

    fn sy() -> OperatorMatrix<f64> {
        OperatorMatrix::pauli(2)
    }

    #[test]
    fn plus_minus_closed_form() {
        let m = model();
        for tau in [0.0, 3e-6, 10e-6, 31e-6] {
            let got = correlation(&seq("+-"), &[0.0, tau], &m).unwrap();
            let want = analytic_c_plus_minus(tau, &m.params).unwrap();
            assert!((got - want).abs() < 1e-9 * (1.0 + want.abs()) + 1e-6, "{tau}: {got} vs {want}");
        }
    }

    #[test]
    fn leading_commutator_vanishes() {
        let m = model();
        for s in ["-+", "--", "-0", "-+-+", "0-+"] {
            let times: Vec<f64> = (0..s.len()).map(|k| k as f64 * 4e-6).collect();
            assert!(correlation(&seq(s), &times, &m).unwrap().abs() < 1e-12 * 1e8, "{s}");
        }
    }

    #[test]
    fn pmmp_at_quarter_period() {
        let m = model();
        let q = 1.0 / (4.0 * m.params.nu);
        let got = correlation(&seq("+--+"), &[0.0, q, 2.0 * q, 3.0 * q], &m).unwrap();
        let j = m.params.j();
        assert!((got / (3.0 / 16.0 * j.powi(4)) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pmmp_independent_of_bath_polarization() {
        let a = model();
        let b = SystemModel::build(ExperimentParams { p_h: 0.0, ..Default::default() }).unwrap();
        let t = [0.0, 3e-6, 7e-6, 13e-6];
        let x = correlation(&seq("+--+"), &t, &a).unwrap();
        let y = correlation(&seq("+--+"), &t, &b).unwrap();
        assert!((x - y).abs() < 1e-9 * x.abs());
        assert!(correlation(&seq("+-"), &[0.0, 5e-6], &b).unwrap().abs() < 1e-6);
    }

    #[test]
    fn p00p_at_zero() {
        let p = ExperimentParams::<f64>::default();
        let j = p.j();
        assert!((analytic_c_p00p(0.0, &p).unwrap() - 0.75 * j * j).abs() < 1e-9);
        assert_eq!(analytic_c_plus_minus(0.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn closed_forms_need_three_spins() {
        let p = ExperimentParams::<f64> { bath_spins: 2, ..Default::default() };
        assert!(matches!(analytic_c_plus_minus(0.0, &p), Err(Error::UnsupportedBath(2))));
    }

    #[test]
    fn decreasing_times_rejected() {
        let m = model();
        assert!(matches!(correlation(&seq("+-"), &[1e-6, 0.0], &m), Err(Error::DecreasingTimes(1))));
        assert!(correlation(&seq("+-"), &[0.0], &m).is_err());
    }

    #[test]
    fn coefficients_second_order() {
        let m = model();
        let ch: Vec<_> = second_order_channels::<f64>().iter().map(|c| c.matrix().clone()).collect();
        assert!((coefficient_a(&ch, &seq("+-"), &m.rho_s, &sy()).unwrap() - 1.0).abs() < 1e-12);
        for eta in OrderingSequence::enumerate(2) {
            if eta.to_string() != "+-" {
                assert!(coefficient_a(&ch, &eta, &m.rho_s, &sy()).unwrap().abs() < 1e-12, "{eta}");
            }
        }
    }

    #[test]
    fn coefficients_fourth_order() {
        let p = ExperimentParams { p_c: 0.7, ..Default::default() };
        let m = SystemModel::<f64>::build(p).unwrap();
        let ch: Vec<_> = fourth_order_channels::<f64>().iter().map(|c| c.matrix().clone()).collect();
        let a = coefficient_a(&ch, &seq("+--+"), &m.rho_s, &sy()).unwrap();
        assert!((a - 0.7).abs() < 1e-12);
    }

    #[test]
    fn coefficient_length_mismatch() {
        let m = model();
        let ch: Vec<_> = second_order_channels::<f64>().iter().map(|c| c.matrix().clone()).collect();
        assert!(coefficient_a(&ch, &seq("+--+"), &m.rho_s, &sy()).is_err());
    }

    #[test]
    fn s2_small_dt_limit() {
        let m = model();
        let dt = 1e-7;
        let tau = 7e-6;
        let s = exact_s2(dt, 0.0, tau, &m).unwrap();
        let c = analytic_c_plus_minus(tau, &m.params).unwrap();
        assert!((s / (dt * dt) / c - 1.0).abs() < 1e-6);
    }

    #[test]
    fn s4_small_dt_limit() {
        let m = model();
        let dt = 1e-6;
        let t = [0.0, 7e-6, 17e-6, 26e-6];
        let s = exact_s4(dt, t, &m, 1.0).unwrap();
        let c = analytic_c_pmmp(7e-6, 9e-6, &m.params).unwrap();
        assert!((s / dt.powi(4) / c - 1.0).abs() < 1e-6);
    }

    #[test]
    fn s2_half_period_antisymmetry() {
        let m = model();
        let dt = 1e-5;
        let half = 1.0 / (2.0 * m.params.nu);
        for tau in [2e-6, 5e-6, 9e-6] {
            let a = exact_s2(dt, 0.0, tau, &m).unwrap();
            let b = exact_s2(dt, 0.0, tau + half, &m).unwrap();
            assert!((a + b).abs() < 1e-9 * a.abs().max(1e-12) + 1e-12);
        }
    }

    #[test]
    fn taylor_coefficients_match_exact() {
        let m = model();
        let (c2, c4) = exact_s2_taylor(0.0, 9e-6, &m).unwrap();
        assert!((c2 / analytic_c_plus_minus(9e-6, &m.params).unwrap() - 1.0).abs() < 1e-9);
        let h = 2e-5;
        let r = |d: f64| (exact_s2(d, 0.0, 9e-6, &m).unwrap() - c2 * d * d) / d.powi(4);
        assert!(((4.0 * r(h / 2.0) - r(h)) / 3.0 / c4 - 1.0).abs() < 1e-4);
        let t = [0.0, 7e-6, 17e-6, 26e-6];
        let (d4, d6) = exact_s4_taylor(t, &m, 1.0).unwrap();
        assert!((d4 / analytic_c_pmmp(7e-6, 9e-6, &m.params).unwrap() - 1.0).abs() < 1e-9);
        let r = |d: f64| (exact_s4(d, t, &m, 1.0).unwrap() - d4 * d.powi(4)) / d.powi(6);
        assert!(((4.0 * r(h / 2.0) - r(h)) / 3.0 / d6 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn series_matches_eigen() {
        let m = model();
        let b = m.bath_operator_at(3e-6);
        for kind in [SineKind::Anticommutator, SineKind::Commutator] {
            let e = superop_sine(&b, kind, 5e-4, &m.rho_b);
            let s = superop_sine_series(&b, kind, 5e-4, &m.rho_b, 200).unwrap();
            assert!(e.max_abs_diff(&s) < 1e-12);
        }
        assert!(matches!(
            superop_sine_series(&b, SineKind::Anticommutator, 1.0, &m.rho_b, 3),
            Err(Error::SeriesNonConvergence(3))
        ));
    }

    #[test]
    fn predicted_second_order() {
        let m = model();
        let ch: Vec<_> = second_order_channels::<f64>().iter().map(|c| c.matrix().clone()).collect();
        let dt = 5e-4;
        let tau = 6e-6;
        let got = predicted_signal(&ch, &m, &[0.0, tau], dt, 2, &sy()).unwrap();
        let want = dt * dt * analytic_c_plus_minus(tau, &m.params).unwrap();
        assert!((got - want).abs() < 1e-9 * want.abs());
        assert!(predicted_signal(&ch, &m, &[0.0, tau], dt, 0, &sy()).unwrap().abs() < 1e-15);
        assert!(predicted_signal(&ch, &m, &[0.0, tau], dt, 5, &sy()).is_err());
    }

    #[test]
    fn predicted_fourth_order() {
        let m = model();
        let ch: Vec<_> = fourth_order_channels::<f64>().iter().map(|c| c.matrix().clone()).collect();
        let dt = 5e-4;
        let t = [0.0, 5e-6, 15e-6, 25e-6];
        let got = predicted_signal(&ch, &m, &t, dt, 4, &sy()).unwrap();
        let want = dt.powi(4) * analytic_c_pmmp(5e-6, 10e-6, &m.params).unwrap();
        assert!((got - want).abs() < 1e-9 * want.abs());
    }

    #[test]
    fn leakage_terms() {
        let p = ExperimentParams::<f64>::default();
        let taus = [5e-6, 10e-6, 10e-6];
        let (_, l0) = leakage_signal(0.0, 1, 5e-4, taus, &p).unwrap();
        assert_eq!(l0, 0.0);
        let (_, a) = leakage_signal(0.04, 1, 5e-4, taus, &p).unwrap();
        let (_, b) = leakage_signal(0.04, 3, 5e-4, taus, &p).unwrap();
        assert!((b / a - 0.04f64.sin().powi(2)).abs() < 1e-12);
        assert!(leakage_signal(0.04, 0, 5e-4, taus, &p).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn prop_oracle_equivalence(t1 in 0.0..40e-6f64, d21 in 0.0..40e-6f64, d32 in 0.0..40e-6f64, d43 in 0.0..40e-6f64) {
            let m = model();
            let c2 = correlation(&seq("+-"), &[t1, t1 + d21], &m).unwrap();
            let a2 = analytic_c_plus_minus(d21, &m.params).unwrap();
            prop_assert!((c2 - a2).abs() <= 1e-9 * m.params.j().powi(2));
            let t = [t1, t1 + d21, t1 + d21 + d32, t1 + d21 + d32 + d43];
            let c4 = correlation(&seq("+--+"), &t, &m).unwrap();
            let a4 = analytic_c_pmmp(d21, d43, &m.params).unwrap();
            prop_assert!((c4 - a4).abs() <= 1e-9 * m.params.j().powi(4));
            let c00 = correlation(&seq("+00+"), &t, &m).unwrap();
            let a00 = analytic_c_p00p(t[3] - t[0], &m.params).unwrap();
            prop_assert!((c00 - a00).abs() <= 1e-9 * m.params.j().powi(2));
        }
    }
}
