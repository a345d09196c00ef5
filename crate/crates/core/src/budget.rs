//! Error mechanisms, deviation metrics and the δt trade-off.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::catalog::{CatalogOperation, OperationKind};
use crate::error::{Error, Result};
use crate::liouville::OperatorMatrix;
use crate::oracle::{analytic_c_plus_minus, analytic_c_pmmp, exact_s2_taylor, exact_s4_taylor};
use crate::scalar::Real;
use crate::synthesis::SynthesizedChannel;
use crate::system::SystemModel;

/// Readout σ matching the second-order small-signal noise level.
pub const READOUT_SIGMA_SECOND_ORDER: f64 = 1.0575e-3;
/// Readout σ matching the fourth-order small-signal noise level.
pub const READOUT_SIGMA_FOURTH_ORDER: f64 = 3.603e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorParams {
    /// π/2 angle error in rad.
    pub delta_theta: f64,
    /// Amplitude decay rate k in s⁻¹.
    pub k_decay: f64,
    /// Absolute std of the final-signal noise.
    pub readout_sigma: f64,
    /// Variance parameter of the Gaussian inhomogeneity model.
    pub gaussian_s: f64,
    pub seed: u64,
}

impl Default for ErrorParams {
    fn default() -> Self {
        Self { delta_theta: 0.04, k_decay: 2.76e3, readout_sigma: 0.0, gaussian_s: 5e3, seed: 0 }
    }
}

impl ErrorParams {
    pub fn second_order() -> Self {
        Self { readout_sigma: READOUT_SIGMA_SECOND_ORDER, ..Default::default() }
    }

    pub fn fourth_order() -> Self {
        Self { readout_sigma: READOUT_SIGMA_FOURTH_ORDER, ..Default::default() }
    }

    /// All mechanisms off.
    pub fn ideal() -> Self {
        Self { delta_theta: 0.0, k_decay: 0.0, readout_sigma: 0.0, gaussian_s: 0.0, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_decay >= 0.0) || !(self.readout_sigma >= 0.0) || !(self.gaussian_s >= 0.0) {
            return Err(Error::InvalidParameter("k_decay, readout_sigma and gaussian_s must be non-negative".into()));
        }
        if !self.delta_theta.is_finite() {
            return Err(Error::InvalidParameter("delta_theta must be finite".into()));
        }
        Ok(())
    }
}

/// Counts of operations touched by [`inject_pulse_error`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PulseErrorReport {
    pub rotated: usize,
    /// Operations other than ±π/2 rotations, left unchanged.
    pub passed_through: usize,
}

/// Replaces every ±π/2 rotation by ±(π/2 + δθ) about the same axis; weights are kept.
pub fn inject_pulse_error<T: Real>(
    channels: &[SynthesizedChannel<T>],
    dtheta: T,
) -> (Vec<SynthesizedChannel<T>>, PulseErrorReport) {
    let mut report = PulseErrorReport::default();
    let tol = T::lit(1e-9);
    let out = channels
        .iter()
        .map(|ch| {
            ch.map_ops(|op| match op.kind {
                OperationKind::Rotation { angle, axis } if (angle.abs() - T::frac_pi_2()).abs() < tol => {
                    report.rotated += 1;
                    let sign = if angle > T::zero() { T::one() } else { -T::one() };
                    if dtheta == T::zero() {
                        return op.clone();
                    }
                    CatalogOperation::rotation(sign * (T::frac_pi_2() + dtheta), axis).expect("axis already unit")
                }
                _ => {
                    report.passed_through += 1;
                    op.clone()
                }
            })
        })
        .collect();
    (out, report)
}

/// values · e^{−k t}.
pub fn apply_amplitude_decay(values: &[f64], times: &[f64], k: f64) -> Result<Vec<f64>> {
    if values.len() != times.len() {
        return Err(Error::LengthMismatch(values.len(), times.len()));
    }
    if let Some(i) = times.iter().position(|t| *t < 0.0) {
        return Err(Error::DecreasingTimes(i));
    }
    Ok(values.iter().zip(times).map(|(v, t)| v * (-k * t).exp()).collect())
}

/// Decay rate from a log-linear fit of |values| against time.
pub fn fit_decay_rate(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::LengthMismatch(times.len(), values.len()));
    }
    let pts: Vec<(f64, f64)> =
        times.iter().zip(values).filter(|(_, v)| v.abs() > 0.0).map(|(t, v)| (*t, v.abs().ln())).collect();
    if pts.len() < 2 {
        return Err(Error::InvalidParameter("need at least 2 nonzero values".into()));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    Ok(-sty / stt)
}

/// Ensemble-averaged rotation about y by λt with Gaussian rate spread s, using
/// the damping factor e^{−st/2} on the rotating components.
pub fn gaussian_dephasing<T: Real>(rho: &OperatorMatrix<T>, lambda: T, s: T, t: T) -> Result<OperatorMatrix<T>> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: rho.dim() });
    }
    if s < T::zero() {
        return Err(Error::InvalidParameter("variance parameter must be non-negative".into()));
    }
    let half = T::lit(0.5);
    let comp = |k: usize| (rho * &OperatorMatrix::pauli(k)).trace().re;
    let (r0, x, y, z) = (comp(0), comp(1), comp(2), comp(3));
    let damp = (-s * t * half).exp();
    let (sn, cs) = (lambda * t).sin_cos();
    let x2 = (x * cs + z * sn) * damp;
    let z2 = (z * cs - x * sn) * damp;
    let m = OperatorMatrix::identity(2).scale_real(r0)
        + OperatorMatrix::pauli(1).scale_real(x2)
        + OperatorMatrix::pauli(2).scale_real(y)
        + OperatorMatrix::pauli(3).scale_real(z2);
    Ok(m.scale_real(half))
}

/// values + N(0, σ²) from a ChaCha8 stream seeded with `seed`.
pub fn add_readout_noise(values: &[f64], sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParameter("sigma must be non-negative".into()));
    }
    if sigma == 0.0 {
        return Ok(values.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(values.iter().map(|v| v + normal.sample(&mut rng)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    /// |x − y| pointwise.
    pub absolute: Vec<f64>,
    /// ‖x − y‖₂/‖y‖₂.
    pub relative: f64,
}

pub fn deviation_metrics(x: &[f64], y: &[f64]) -> Result<Deviation> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if ny == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let absolute: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - b).abs()).collect();
    let relative = absolute.iter().map(|e| e * e).sum::<f64>().sqrt() / ny;
    Ok(Deviation { absolute, relative })
}

/// Norms over a time grid feeding the total-error model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetNorms {
    /// Θ ∈ {2, 4}.
    pub theta: usize,
    /// ‖A·C^Θ‖, the δt^Θ coefficient of the signal.
    pub target: f64,
    /// ‖C^{Θ+2}‖, the δt^{Θ+2} coefficient.
    pub next: f64,
    /// ‖(1 − e^{−kτ})·C‖/‖C‖ with τ the elapsed delays.
    pub evo: f64,
    /// Grid size M.
    pub points: usize,
}

/// Relative error components at one δt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBreakdown {
    pub dt: f64,
    pub theory: f64,
    pub pulse: f64,
    pub evo: f64,
    pub readout: f64,
    pub total: f64,
}

/// Δ^{π/2}: δθ² for Θ = 2, p_C[1 − (1 − δθ²/2)³] for Θ = 4.
pub fn pulse_error_term(theta: usize, dtheta: f64, p_c: f64) -> Result<f64> {
    match theta {
        2 => Ok(dtheta * dtheta),
        4 => Ok(p_c * (1.0 - (1.0 - dtheta * dtheta / 2.0).powi(3))),
        _ => Err(Error::InvalidParameter(format!("Θ must be 2 or 4 (got {theta})"))),
    }
}

/// Δᵗᵒᵗ(δt) = (δt^{Θ+2}‖C^{Θ+2}‖ + ‖E_r‖)/(δt^Θ‖A·C^Θ‖) + Δ^{π/2} + Δᵉᵛᵒ with ‖E_r‖ = σ√M.
pub fn total_error(dt: f64, norms: &BudgetNorms, params: &ErrorParams, p_c: f64) -> Result<ErrorBreakdown> {
    if norms.target <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }
    let th = norms.theta as i32;
    let scale = dt.powi(th) * norms.target;
    let theory = dt.powi(th + 2) * norms.next / scale;
    let readout = params.readout_sigma * (norms.points as f64).sqrt() / scale;
    let pulse = pulse_error_term(norms.theta, params.delta_theta, p_c)?;
    let total = theory + readout + pulse + norms.evo;
    Ok(ErrorBreakdown { dt, theory, pulse, evo: norms.evo, readout, total })
}

/// Stationary point of a·δt² + b·δt^{−Θ}: (Θ‖E_r‖/(2‖C^{Θ+2}‖))^{1/(Θ+2)}.
pub fn optimal_dt(theta: usize, norm_c_next: f64, norm_e_r: f64) -> Result<f64> {
    if !(norm_c_next > 0.0 && norm_e_r > 0.0) {
        return Err(Error::InvalidParameter("norms must be positive".into()));
    }
    if theta == 0 {
        return Err(Error::InvalidParameter("Θ must be positive".into()));
    }
    let t = theta as f64;
    Ok((t * norm_e_r / (2.0 * norm_c_next)).powf(1.0 / (t + 2.0)))
}

/// Norms for Θ = 2 (delays τ21 on `grid`) or Θ = 4 (τ21 on `grid`, fixed τ32 and τ43).
pub fn budget_norms(
    theta: usize,
    model: &SystemModel<f64>,
    grid: &[f64],
    tau32: f64,
    tau43: f64,
    k: f64,
) -> Result<BudgetNorms> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let p = &model.params;
    let mut lead = Vec::with_capacity(grid.len());
    let mut next = Vec::with_capacity(grid.len());
    let mut corr = Vec::with_capacity(grid.len());
    let mut elapsed = Vec::with_capacity(grid.len());
    for &t21 in grid {
        let (a, b, cv, tau) = match theta {
            2 => {
                let (a, b) = exact_s2_taylor(0.0, t21, model)?;
                (a, b, analytic_c_plus_minus(t21, p)?, t21)
            }
            4 => {
                let times = [0.0, t21, t21 + tau32, t21 + tau32 + tau43];
                let (a, b) = exact_s4_taylor(times, model, p.p_c)?;
                (a, b, analytic_c_pmmp(t21, tau43, p)?, t21 + tau32 + tau43)
            }
            _ => return Err(Error::InvalidParameter(format!("Θ must be 2 or 4 (got {theta})"))),
        };
        lead.push(a);
        next.push(b);
        corr.push(cv);
        elapsed.push(tau);
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let decayed = apply_amplitude_decay(&corr, &elapsed, k)?;
    let diff: Vec<f64> = corr.iter().zip(&decayed).map(|(a, b)| a - b).collect();
    let cn = norm(&corr);
    Ok(BudgetNorms {
        theta,
        target: norm(&lead),
        next: norm(&next),
        evo: if cn > 0.0 { norm(&diff) / cn } else { 0.0 },
        points: grid.len(),
    })
}

/// ¼(1 − δθ²/2)³(Jδt)² / |δθ|ⁿ; above 1 the leakage is suppressed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageMargin {
    pub ratio: f64,
    /// Set when δθ = 0 and the ratio is unbounded.
    pub unbounded: bool,
}

impl LeakageMargin {
    pub fn suppressed(&self) -> bool {
        self.ratio > 1.0
    }
}

pub fn leakage_margin(dtheta: f64, dt: f64, n: usize, j: f64) -> Result<LeakageMargin> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let lhs = 0.25 * (1.0 - dtheta * dtheta / 2.0).powi(3) * (j * dt).powi(2);
    let rhs = dtheta.abs().powi(n as i32);
    if rhs == 0.0 {
        return Ok(LeakageMargin { ratio: f64::INFINITY, unbounded: true });
    }
    Ok(LeakageMargin { ratio: lhs / rhs, unbounded: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, second_order_protocol, ProtocolSlot, ProtocolSpec};
    use crate::synthesis::{fourth_order_channels, second_order_channels};
    use crate::system::ExperimentParams;
    use proptest::prelude::*;

    fn model() -> SystemModel<f64> {
        SystemModel::build(ExperimentParams::default()).unwrap()
    }

    fn grid() -> Vec<f64> {
        (0..40).map(|k| k as f64 * 2e-6).collect()
    }

    #[test]
    fn zero_pulse_error_is_identity() {
        let ch = fourth_order_channels::<f64>().to_vec();
        let (out, rep) = inject_pulse_error(&ch, 0.0);
        for (a, b) in ch.iter().zip(&out) {
            assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-15);
        }
        assert_eq!(rep.rotated, 8);
        assert_eq!(rep.passed_through, 0);
    }

    #[test]
    fn non_rotations_pass_through() {
        let ch = SynthesizedChannel::<f64>::from_weighted([
            (1.0, CatalogOperation::from_label("Mz").unwrap()),
            (1.0, CatalogOperation::from_label("Rxy180").unwrap()),
        ]);
        let (out, rep) = inject_pulse_error(&[ch.clone()], 0.1);
        assert_eq!(rep, PulseErrorReport { rotated: 0, passed_through: 2 });
        assert!(out[0].matrix().max_abs_diff(ch.matrix()) < 1e-15);
    }

    #[test]
    fn second_order_scales_by_cos() {
        let m = model().params.with_delta_t(2e-5);
        let m = SystemModel::build(m).unwrap();
        let ideal = second_order_protocol(&m, 7e-6).unwrap();
        let (ch, _) = inject_pulse_error(&second_order_channels::<f64>(), 0.04);
        let slots = vec![ProtocolSlot::new(ch[0].clone(), 2e-5, 7e-6), ProtocolSlot::new(ch[1].clone(), 2e-5, 0.0)];
        let noisy = ProtocolSpec::new(m, slots).unwrap();
        let r = run(&noisy).unwrap() / run(&ideal).unwrap();
        assert!((r - 0.04f64.cos()).abs() < 1e-4);
    }

    #[test]
    fn p3_gains_sine_entries() {
        let (ch, _) = inject_pulse_error(&fourth_order_channels::<f64>(), 0.04);
        let p3 = ch[2].matrix();
        assert!((p3.re(2, 2) + 0.04f64.sin()).abs() < 1e-12);
        assert!((p3.re(3, 3) + 0.04f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn decay_basics() {
        let v = [1.0, 2.0];
        assert_eq!(apply_amplitude_decay(&v, &[0.0, 5.0], 0.0).unwrap(), v.to_vec());
        let d = apply_amplitude_decay(&[1.0], &[1.0 / 2760.0], 2760.0).unwrap();
        assert!((d[0] - (-1.0f64).exp()).abs() < 1e-15);
        assert!(apply_amplitude_decay(&[1.0], &[-1.0], 1.0).is_err());
    }

    #[test]
    fn decay_fit_round_trip() {
        let k = 2760.0;
        let nu = 24000.0;
        // Peaks of sin(2πνt).
        let t: Vec<f64> = (0..20).map(|i| (0.25 + i as f64) / nu).collect();
        let s: Vec<f64> = t.iter().map(|x| (2.0 * std::f64::consts::PI * nu * x).sin()).collect();
        let d = apply_amplitude_decay(&s, &t, k).unwrap();
        assert!((fit_decay_rate(&t, &d).unwrap() / k - 1.0).abs() < 0.01);
    }

    #[test]
    fn dephasing_printed_matrix() {
        let eps = 0.3;
        let rho = (OperatorMatrix::identity(2) + OperatorMatrix::pauli(3).scale_real(eps)).scale_real(0.5);
        let (l, s, t): (f64, f64, f64) = (2000.0, 5e3, 1e-4);
        let f = gaussian_dephasing(&rho, l, s, t).unwrap();
        let e = (-s * t / 2.0).exp();
        assert!((f.get(0, 0).re - 0.5 * (1.0 + eps * (l * t).cos() * e)).abs() < 1e-15);
        assert!((f.get(0, 1).re - 0.5 * eps * (l * t).sin() * e).abs() < 1e-15);
        assert!((f.get(1, 0).re - 0.5 * eps * (l * t).sin() * e).abs() < 1e-15);
        let pure = gaussian_dephasing(&rho, l, 0.0, t).unwrap();
        let u = crate::catalog::rotation_superop(l * t, [0.0, 1.0, 0.0]).unwrap();
        assert!(pure.max_abs_diff(&u.apply(&rho).unwrap()) < 1e-14);
        assert!(gaussian_dephasing(&rho, l, -1.0, t).is_err());
    }

    #[test]
    fn noise_contract() {
        let v = vec![0.0; 100_000];
        assert_eq!(add_readout_noise(&v[..5], 0.0, 1).unwrap(), vec![0.0; 5]);
        let a = add_readout_noise(&v, 0.5, 42).unwrap();
        assert_eq!(a, add_readout_noise(&v, 0.5, 42).unwrap());
        let n = a.len() as f64;
        let mean = a.iter().sum::<f64>() / n;
        assert!(mean.abs() < 3.0 * 0.5 / n.sqrt());
        let sd = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((sd / 0.5 - 1.0).abs() < 0.02);
    }

    #[test]
    fn deviation_examples() {
        let y = [1.0, -2.0, 3.0];
        assert_eq!(deviation_metrics(&y, &y).unwrap().relative, 0.0);
        let x: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        assert!((deviation_metrics(&x, &y).unwrap().relative - 1.0).abs() < 1e-15);
        assert!(matches!(deviation_metrics(&[1.0], &[0.0]), Err(Error::ZeroNorm)));
    }

    #[test]
    fn total_error_pure_theory() {
        let n = BudgetNorms { theta: 2, target: 2.0, next: 3.0, evo: 0.0, points: 40 };
        let b = total_error(1e-3, &n, &ErrorParams::ideal(), 1.0).unwrap();
        assert!((b.total - 1e-6 * 1.5).abs() < 1e-18);
    }

    #[test]
    fn optimal_dt_is_minimizer() {
        let n = BudgetNorms { theta: 4, target: 2.0, next: 3.0e6, evo: 0.1, points: 40 };
        let p = ErrorParams { readout_sigma: 1e-5, ..Default::default() };
        let opt = optimal_dt(4, n.next, p.readout_sigma * (40f64).sqrt()).unwrap();
        let f = |d: f64| total_error(d, &n, &p, 1.0).unwrap().total;
        // Vertex of the parabola through three points straddling the optimum.
        let h = 1e-5 * opt;
        let (fm, f0, fp) = (f(opt - h), f(opt), f(opt + h));
        assert!(fm > f0 && fp > f0);
        let vertex = opt - h * (fp - fm) / (2.0 * (fp - 2.0 * f0 + fm));
        assert!((vertex / opt - 1.0).abs() < 1e-9);
        let doubled = optimal_dt(4, n.next, 2.0 * p.readout_sigma * (40f64).sqrt()).unwrap();
        assert!((doubled / opt - 2f64.powf(1.0 / 6.0)).abs() < 1e-12);
        assert!(optimal_dt(2, 0.0, 1.0).is_err());
    }

    #[test]
    fn budget_optimum_second_order() {
        let m = model();
        let n = budget_norms(2, &m, &grid(), 0.0, 0.0, 2760.0).unwrap();
        assert!((n.evo - 0.121).abs() < 0.002);
        let p = ErrorParams::second_order();
        let opt = optimal_dt(2, n.next, p.readout_sigma * (n.points as f64).sqrt()).unwrap();
        assert!((opt - 0.35e-3).abs() < 0.05e-3, "{opt}");
    }

    #[test]
    fn budget_optimum_fourth_order() {
        let m = model();
        let n = budget_norms(4, &m, &grid(), 10e-6, 10e-6, 2760.0).unwrap();
        assert!((n.evo - 0.164).abs() < 0.002);
        let p = ErrorParams::fourth_order();
        let opt = optimal_dt(4, n.next, p.readout_sigma * (n.points as f64).sqrt()).unwrap();
        assert!((opt - 0.40e-3).abs() < 0.07e-3, "{opt}");
    }

    #[test]
    fn leakage_margin_values() {
        let j = 2.0 * std::f64::consts::PI * 129.6;
        let a = leakage_margin(0.04, 5e-4, 1, j).unwrap();
        assert!((a.ratio - 1.034).abs() < 0.01);
        let b = leakage_margin(0.04, 5e-4, 3, j).unwrap();
        assert!((b.ratio - 646.0).abs() < 5.0 && b.suppressed());
        let z = leakage_margin(0.0, 5e-4, 1, j).unwrap();
        assert!(z.unbounded && z.ratio.is_infinite());
    }

    #[test]
    fn pulse_term_values() {
        assert!((pulse_error_term(2, 0.04, 1.0).unwrap() - 0.0016).abs() < 1e-15);
        assert!(pulse_error_term(3, 0.04, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn prop_deviation_homogeneous(v in prop::collection::vec(0.1..2.0f64, 5), w in prop::collection::vec(-1.0..1.0f64, 5), c in 0.1..10.0f64) {
            let a = deviation_metrics(&w, &v).unwrap().relative;
            let cw: Vec<f64> = w.iter().map(|x| -c * x).collect();
            let cv: Vec<f64> = v.iter().map(|x| -c * x).collect();
            prop_assert!((a - deviation_metrics(&cw, &cv).unwrap().relative).abs() < 1e-12 * (1.0 + a));
        }

        #[test]
        fn prop_total_error_unimodal(next in 1e3..1e8f64, sigma in 1e-6..1e-3f64) {
            let n = BudgetNorms { theta: 2, target: 1e5, next, evo: 0.0, points: 40 };
            let p = ErrorParams { readout_sigma: sigma, ..ErrorParams::ideal() };
            let opt = optimal_dt(2, next, sigma * 40f64.sqrt()).unwrap();
            let f = |d: f64| total_error(d, &n, &p, 1.0).unwrap().total;
            prop_assert!(f(opt * 0.5) > f(opt * 0.9) && f(opt * 0.9) > f(opt));
            prop_assert!(f(opt * 2.0) > f(opt * 1.1) && f(opt * 1.1) > f(opt));
        }

        #[test]
        fn prop_dephasing_trace_hermitian(x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64, l in 0.0..1e4f64, s in 0.0..1e4f64, t in 0.0..1e-3f64) {
            let rho = (OperatorMatrix::identity(2)
                + OperatorMatrix::pauli(1).scale_real(x)
                + OperatorMatrix::pauli(2).scale_real(y)
                + OperatorMatrix::pauli(3).scale_real(z)).scale_real(0.5);
            let f = gaussian_dephasing(&rho, l, s, t).unwrap();
            prop_assert!(f.has_unit_trace(1e-12));
            prop_assert!(f.is_hermitian(1e-12));
        }
    }
}
