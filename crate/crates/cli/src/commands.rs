use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex;
use qcorr::budget::{
    add_readout_noise, apply_amplitude_decay, budget_norms, deviation_metrics, inject_pulse_error, optimal_dt,
    total_error,
};
use qcorr::engine::{
    format_sig17, fourth_order_protocol, run, second_order_channels_with_error, spectral_density, sweep_2d, SweepResult,
};
use qcorr::oracle::{analytic_c_p00p, analytic_c_plus_minus, analytic_c_pmmp, correlation, predicted_signal};
use qcorr::synthesis::{sparse_element_label, REFERENCE_SPARSE_WEIGHTS, SPARSE_LABELS};
use qcorr::{
    Decomposer, OperatorBasis, OrderingSequence, ProtocolSlot, ProtocolSpec, SuperOperator, SynthesizedChannel,
    SystemModel, WeightSolution,
};
use rayon::prelude::*;

use crate::config::{ProtocolKind, RunConfig, SweepAxis};
use crate::error::CliError;
use crate::output::{companion, write_atomic};

/// Largest reconstruction residual accepted from a decomposition.
pub const RESIDUAL_TOL: f64 = 1e-10;

pub enum SynthTarget<'a> {
    Element(&'a str),
    MatrixFile(&'a Path),
}

/// Reads a 4×4 complex matrix: four rows of four entries such as `1`, `-0.5+2i`,
/// separated by commas or whitespace; `#` starts a comment.
pub fn parse_matrix(text: &str) -> Result<SuperOperator, CliError> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                Complex::<f64>::from_str(s).map_err(|_| CliError::Config(format!("line {}: bad entry `{s}`", i + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != 4 {
            return Err(CliError::Config(format!("line {}: expected 4 entries, got {}", i + 1, row.len())));
        }
        rows.push(row);
    }
    if rows.len() != 4 {
        return Err(CliError::Config(format!("expected 4 rows, got {}", rows.len())));
    }
    if rows.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CliError::Config("non-finite matrix entry".into()));
    }
    let m = DMatrix::from_fn(4, 4, |r, c| rows[r][c]);
    Ok(SuperOperator::from_matrix(m, Arc::new(OperatorBasis::pauli()))?)
}

fn weights_csv(sol: &WeightSolution) -> String {
    let mut s = String::from("label,weight\n");
    for (label, w) in sol.labeled() {
        let _ = writeln!(s, "{label},{}", format_sig17(w));
    }
    let _ = writeln!(s, "residual,{}", format_sig17(sol.residual));
    s
}

pub fn synthesize(target: SynthTarget<'_>, out: Option<&Path>) -> Result<(), CliError> {
    let op = match target {
        SynthTarget::Element(name) => sparse_element_label(name)?,
        SynthTarget::MatrixFile(path) => {
            parse_matrix(&std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?)?
        }
    };
    let sol = Decomposer::new().decompose(&op)?;
    let csv = weights_csv(&sol);
    print!("{csv}");
    if let Some(p) = out {
        write_atomic(p, &csv)?;
    }
    if !(sol.residual <= RESIDUAL_TOL) {
        return Err(CliError::Verification(format!(
            "residual {:.3e} above {RESIDUAL_TOL:e}; the target is outside the catalog span",
            sol.residual
        )));
    }
    Ok(())
}

pub fn verify_table2() -> Result<(), CliError> {
    let d = Decomposer::new();
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    for (label, want) in SPARSE_LABELS.iter().zip(REFERENCE_SPARSE_WEIGHTS.iter()) {
        let sol = d.decompose(&sparse_element_label(label)?)?;
        let dev = sol.weights.iter().zip(want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
        let ok = dev <= RESIDUAL_TOL;
        println!("{label}: max deviation {dev:.3e} {}", if ok { "ok" } else { "MISMATCH" });
        worst = worst.max(dev);
        if !ok {
            failed.push(*label);
        }
    }
    println!("rows: {}, worst deviation {worst:.3e}", SPARSE_LABELS.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("rows {failed:?} deviate by more than {RESIDUAL_TOL:e}")))
    }
}

/// Channels of a custom protocol file: blocks in channel text format separated by `---` lines.
pub fn parse_channel_file(text: &str) -> Result<Vec<SynthesizedChannel>, CliError> {
    let mut blocks = vec![String::new()];
    for line in text.lines() {
        if line.trim() == "---" {
            blocks.push(String::new());
        } else {
            let b = blocks.last_mut().expect("nonempty");
            b.push_str(line);
            b.push('\n');
        }
    }
    let chans = blocks
        .iter()
        .filter(|b| b.lines().any(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#')))
        .map(|b| SynthesizedChannel::parse_text(b))
        .collect::<Result<Vec<_>, _>>()?;
    if chans.is_empty() {
        return Err(CliError::Config("channel file holds no channels".into()));
    }
    Ok(chans)
}

/// Everything needed to build the protocol at one grid point.
struct Plan {
    cfg: RunConfig,
    custom: Vec<SynthesizedChannel>,
    base: SystemModel,
}

impl Plan {
    fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        let custom = match (&cfg.protocol.kind, &cfg.protocol.channels) {
            (ProtocolKind::Custom, Some(path)) => {
                let chans = parse_channel_file(&std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?)?;
                if cfg.protocol.delays.len() != chans.len() {
                    return Err(CliError::Config(format!(
                        "{} channels but {} delays",
                        chans.len(),
                        cfg.protocol.delays.len()
                    )));
                }
                chans
            }
            _ => Vec::new(),
        };
        let base = SystemModel::build(cfg.experiment.params())?;
        Ok(Self { cfg: cfg.clone(), custom, base })
    }

    fn model_at(&self, x: f64) -> Result<SystemModel, CliError> {
        match self.cfg.sweep.axis {
            SweepAxis::Tau21 => Ok(self.base.clone()),
            SweepAxis::DeltaT => Ok(SystemModel::build(self.base.params.with_delta_t(x))?),
        }
    }

    fn tau21_at(&self, x: f64) -> f64 {
        match self.cfg.sweep.axis {
            SweepAxis::Tau21 => x,
            SweepAxis::DeltaT => self.cfg.sweep.tau21,
        }
    }

    fn spec(&self, x: f64, dtheta: f64) -> Result<ProtocolSpec, CliError> {
        let m = self.model_at(x)?;
        let dt = m.params.delta_t;
        let t21 = self.tau21_at(x);
        let p = &self.cfg.protocol;
        let spec = match p.kind {
            ProtocolKind::Second => {
                let [a, b] = second_order_channels_with_error(dtheta);
                ProtocolSpec::new(m, vec![ProtocolSlot::new(a, dt, t21), ProtocolSlot::new(b, dt, 0.0)])?
            }
            ProtocolKind::Fourth => {
                let n = m.params.n_repeat;
                fourth_order_protocol(&m, t21, p.tau32, p.tau43, n, dtheta)?
            }
            ProtocolKind::Custom => {
                let (chans, _) = inject_pulse_error(&self.custom, dtheta);
                let slots = chans
                    .into_iter()
                    .zip(&p.delays)
                    .enumerate()
                    .map(|(i, (c, &d))| {
                        ProtocolSlot::new(
                            c,
                            dt,
                            if i == 0 && self.cfg.sweep.axis == SweepAxis::Tau21 { t21 } else { d },
                        )
                    })
                    .collect();
                ProtocolSpec::new(m, slots)?
            }
        };
        Ok(spec.with_mode(self.cfg.mode()?))
    }

    /// δt^Θ A C for the built-in protocols; for custom ones the ideal-channel
    /// prediction through `protocol.target_order`. Only window times and the model are read.
    fn target(&self, spec: &ProtocolSpec) -> Result<f64, CliError> {
        let m = &spec.model;
        let dt = m.params.delta_t;
        let times = spec.window_times();
        let v = match self.cfg.protocol.kind {
            ProtocolKind::Second => dt * dt * correlation(&"+-".parse::<OrderingSequence>()?, &times, m)?,
            ProtocolKind::Fourth => {
                m.params.p_c * dt.powi(4) * correlation(&"+--+".parse::<OrderingSequence>()?, &times, m)?
            }
            ProtocolKind::Custom => {
                let maps: Vec<SuperOperator> = self.custom.iter().map(|c| c.matrix().clone()).collect();
                predicted_signal(&maps, m, &times, dt, self.cfg.protocol.target_order, &spec.observable)?
            }
        };
        Ok(v)
    }
}

fn elapsed(spec: &ProtocolSpec) -> f64 {
    spec.slots.iter().map(|s| s.free_evolution_after).sum()
}

fn meta_header(meta: &BTreeMap<String, String>) -> String {
    meta.iter().map(|(k, v)| format!("# {k} = {v}\n")).collect()
}

pub fn simulate(cfg: &RunConfig, out: &Path, two_d: bool) -> Result<(), CliError> {
    let errors = cfg.simulate_errors();
    errors.validate()?;
    let resolved = cfg.resolved(&errors);
    let plan = Plan::new(&resolved)?;
    let grid = resolved.sweep.grid();

    let specs = grid.iter().map(|&x| plan.spec(x, errors.delta_theta)).collect::<Result<Vec<_>, _>>()?;
    let raw: Vec<f64> = specs
        .par_iter()
        .enumerate()
        .map(|(index, s)| run(s).map_err(|e| qcorr::Error::AtGridPoint { index, source: Box::new(e) }))
        .collect::<Result<_, _>>()?;
    let times: Vec<f64> = specs.iter().map(elapsed).collect();
    let decayed = apply_amplitude_decay(&raw, &times, errors.k_decay)?;
    let signals = add_readout_noise(&decayed, errors.readout_sigma, errors.seed)?;

    let meta = resolved.metadata();
    let mut result = SweepResult::new(grid.clone(), signals.clone())?;
    result.sigma = vec![errors.readout_sigma; grid.len()];
    result.metadata = meta.clone();
    write_atomic(out, &result.to_csv())?;

    let targets = specs.iter().map(|s| plan.target(s)).collect::<Result<Vec<_>, _>>()?;
    let dev = deviation_metrics(&signals, &targets)?;
    let mut oracle = SweepResult::new(grid.clone(), targets)?;
    oracle.metadata = meta.clone();
    oracle.metadata.insert("deviation_relative".into(), format_sig17(dev.relative));
    let oracle_path = companion(out, "oracle");
    write_atomic(&oracle_path, &oracle.to_csv())?;
    println!("wrote {} ({} points), {}", out.display(), grid.len(), oracle_path.display());
    println!("relative deviation from target: {:.4}%", dev.relative * 100.0);

    if two_d {
        simulate_2d(&resolved, &plan, out, &meta)?;
    }
    Ok(())
}

fn simulate_2d(cfg: &RunConfig, plan: &Plan, out: &Path, meta: &BTreeMap<String, String>) -> Result<(), CliError> {
    if cfg.protocol.kind != ProtocolKind::Fourth {
        return Err(CliError::Config("--2d needs protocol.kind = \"fourth\"".into()));
    }
    let s = &cfg.sweep;
    let axis: Vec<f64> = (0..s.points_2d).map(|k| k as f64 * s.step_2d).collect();
    let mat = sweep_2d(&plan.base, &axis, &axis, cfg.protocol.tau32)?;

    let mut text = meta_header(meta);
    text.push_str("tau21\\tau43");
    for t in &axis {
        let _ = write!(text, ",{}", format_sig17(*t));
    }
    text.push('\n');
    for (r, t) in axis.iter().enumerate() {
        text.push_str(&format_sig17(*t));
        for c in 0..axis.len() {
            let _ = write!(text, ",{}", format_sig17(mat[(r, c)]));
        }
        text.push('\n');
    }
    let mat_path = companion(out, "2d");
    write_atomic(&mat_path, &text)?;

    let spec = spectral_density(&mat, s.step_2d, s.step_2d)?;
    let peaks = spec.peaks(0.5);
    let mut m2 = meta.clone();
    let (bw, _) = spec.bin_width();
    m2.insert("bin_width_hz".into(), format_sig17(bw));
    for (i, p) in peaks.iter().enumerate() {
        m2.insert(
            format!("peak.{i}"),
            format!("{},{},{}", format_sig17(p.freq_row), format_sig17(p.freq_col), format_sig17(p.magnitude)),
        );
    }
    let mut text = meta_header(&m2);
    text.push_str("freq_tau21,freq_tau43,magnitude\n");
    for (r, fr) in spec.freq_rows.iter().enumerate() {
        for (c, fc) in spec.freq_cols.iter().enumerate() {
            let _ =
                writeln!(text, "{},{},{}", format_sig17(*fr), format_sig17(*fc), format_sig17(spec.magnitude[(r, c)]));
        }
    }
    let spec_path = companion(out, "spectrum");
    write_atomic(&spec_path, &text)?;
    println!("wrote {} and {}", mat_path.display(), spec_path.display());
    for p in peaks.iter().take(4) {
        println!("peak at ({:.1}, {:.1}) Hz, magnitude {:.4e}", p.freq_row, p.freq_col, p.magnitude);
    }
    Ok(())
}

pub fn budget(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let errors = cfg.budget_errors();
    errors.validate()?;
    let resolved = cfg.resolved(&errors);
    if resolved.sweep.axis != SweepAxis::Tau21 {
        return Err(CliError::Config("budget needs sweep.axis = \"tau21\" for its delay grid".into()));
    }
    let theta = resolved.budget.theta;
    let model = SystemModel::build(resolved.experiment.params())?;
    let (t32, t43) = if theta == 4 { (resolved.protocol.tau32, resolved.protocol.tau43) } else { (0.0, 0.0) };
    let norms = budget_norms(theta, &model, &resolved.sweep.grid(), t32, t43, errors.k_decay)?;

    let dts = resolved.budget.grid();
    let rows =
        dts.iter().map(|&dt| total_error(dt, &norms, &errors, model.params.p_c)).collect::<Result<Vec<_>, _>>()?;
    let best = rows.iter().enumerate().min_by(|a, b| a.1.total.total_cmp(&b.1.total)).map(|(i, _)| i).unwrap_or(0);
    let interior = best > 0 && best + 1 < rows.len();

    let mut meta = resolved.metadata();
    meta.insert("dt_opt_scan".into(), format_sig17(rows[best].dt));
    meta.insert("interior_minimum".into(), interior.to_string());
    let e_r = errors.readout_sigma * (norms.points as f64).sqrt();
    let closed = optimal_dt(theta, norms.next, e_r).ok();
    if let Some(c) = closed {
        meta.insert("dt_opt_closed_form".into(), format_sig17(c));
    }
    let mut text = meta_header(&meta);
    text.push_str("dt,theory,pulse,evo,readout,total\n");
    for r in &rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            format_sig17(r.dt),
            format_sig17(r.theory),
            format_sig17(r.pulse),
            format_sig17(r.evo),
            format_sig17(r.readout),
            format_sig17(r.total)
        );
    }
    write_atomic(out, &text)?;
    println!("wrote {} ({} points)", out.display(), rows.len());
    println!(
        "minimum total error {:.4}% at dt = {:.4} ms{}",
        rows[best].total * 100.0,
        rows[best].dt * 1e3,
        if interior { "" } else { " (grid edge, no interior minimum)" }
    );
    if let Some(c) = closed {
        println!("closed-form dt_opt = {:.4} ms", c * 1e3);
    }
    Ok(())
}

/// Closed form for the orderings that have one, given earliest-first times.
pub fn analytic(eta: &OrderingSequence, times: &[f64], model: &SystemModel) -> Option<Result<f64, qcorr::Error>> {
    let p = &model.params;
    match (eta.to_string().as_str(), times) {
        ("+-", [t1, t2]) => Some(analytic_c_plus_minus(t2 - t1, p)),
        ("+--+", [t1, t2, t3, t4]) => Some(analytic_c_pmmp(t2 - t1, t4 - t3, p)),
        ("+00+", [t1, _, _, t4]) => Some(analytic_c_p00p(t4 - t1, p)),
        _ => None,
    }
}

pub fn oracle(cfg: &RunConfig, eta: &str, times: &[f64]) -> Result<(), CliError> {
    let eta: OrderingSequence = eta.parse()?;
    let model = SystemModel::build(cfg.experiment.params())?;
    let value = correlation(&eta, times, &model)?;
    println!("value = {}", format_sig17(value));
    if model.params.bath_spins == 3 {
        if let Some(a) = analytic(&eta, times, &model) {
            let a = a?;
            println!("analytic = {}", format_sig17(a));
            println!("difference = {}", format_sig17(value - a));
        }
    }
    Ok(())
}

/// Config embedded in a CSV written by `simulate` or `budget`.
pub fn embedded_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let meta: BTreeMap<String, String> = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    RunConfig::from_metadata(&meta)
}

pub fn output_path(cfg: &RunConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| cfg.output.path.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_parsing() {
        let m = parse_matrix("1 0 0 0\n0, 1, 0, 0\n0 0 1 0 # row\n0 0 0 1+0i\n").unwrap();
        let sol = Decomposer::new().decompose(&m).unwrap();
        assert!((sol.get("R0").unwrap() - 1.0).abs() < 1e-12);
        assert!(parse_matrix("1 0 0\n").is_err());
        assert!(parse_matrix("1 0 0 x\n0 1 0 0\n0 0 1 0\n0 0 0 1").is_err());
        assert!(parse_matrix("1 0 0 0\n0 1 0 0\n0 0 1 0").is_err());
    }

    #[test]
    fn channel_file_blocks() {
        let text = "# first\n0.5 Rx+90\n0.5 Rx-90\n---\n1 Ry+90\n";
        let chans = parse_channel_file(text).unwrap();
        assert_eq!(chans.len(), 2);
        assert!(parse_channel_file("---\n").is_err());
    }

    #[test]
    fn custom_matches_builtin_second_order() {
        let dir = tempfile::tempdir().unwrap();
        let chan = dir.path().join("ch.txt");
        let [a, b] = second_order_channels_with_error::<f64>(0.0);
        std::fs::write(&chan, format!("{}---\n{}", a.to_text(), b.to_text())).unwrap();
        let mut cfg = RunConfig::default();
        cfg.sweep.points = 4;
        let builtin = Plan::new(&cfg).unwrap();
        cfg.protocol.kind = ProtocolKind::Custom;
        cfg.protocol.channels = Some(chan);
        cfg.protocol.delays = vec![0.0, 0.0];
        let custom = Plan::new(&cfg).unwrap();
        for x in cfg.sweep.grid() {
            let s1 = builtin.spec(x, 0.0).unwrap();
            let s2 = custom.spec(x, 0.0).unwrap();
            assert!((run(&s1).unwrap() - run(&s2).unwrap()).abs() < 1e-15);
            assert!((builtin.target(&s1).unwrap() - custom.target(&s2).unwrap()).abs() < 1e-12);
        }
    }
}
