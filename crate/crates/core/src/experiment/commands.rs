// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! One function per CLI subcommand. Each writes its files into the output
//! directory and returns the report it wrote.

use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ConfigFile, DepletionKind, DepletionMethod, SimMode, WeightChoice};
use super::pipeline::{
    calibrate, condition_stream, measure_transients, run_extraction, weight_label, weight_sets, Calibration,
    DepletionSummary, Extraction, SweepSettings,
};
use crate::chain::{self, ChainFit, ChainParams, GainEtaPoint, PumpPoint};
use crate::dynamics::{PulseEnvelope, ReadoutParams, WeightKind};
use crate::error::{Error, Result};
use crate::homodyne::Transients;

/// Exit status for an error: 2 configuration or input file format, 3 physics
/// or simulation input, 4 fit failure, 5 file system.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parse { .. } => 2,
        Error::InvalidInput(_) | Error::DegenerateWeights(_) | Error::SingularSystem(_) => 3,
        Error::FitFailure(_) => 4,
        Error::Io { .. } => 5,
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub shots: Option<usize>,
    pub mode: Option<SimMode>,
}

/// Resolved configuration plus the locations it refers to.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: ConfigFile,
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Context {
    /// Read the config (defaults when `path` is `None`) and apply overrides.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let (config, base_dir) = match path {
            Some(p) => {
                let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (ConfigFile::load(p)?, dir)
            }
            None => (ConfigFile::default(), PathBuf::new()),
        };
        Ok(Self::new(config, base_dir, overrides))
    }

    pub fn new(mut config: ConfigFile, base_dir: PathBuf, overrides: &Overrides) -> Self {
        if let Some(s) = overrides.seed {
            config.seed = Some(s);
        }
        if let Some(n) = overrides.shots {
            config.sweep.snr_shots = n;
        }
        if let Some(m) = overrides.mode {
            config.mode = m;
        }
        let out_dir = match (&overrides.out, &config.output_dir) {
            (Some(o), _) => o.clone(),
            (None, Some(o)) => base_dir.join(o),
            (None, None) => base_dir.join("out"),
        };
        // the report must not depend on where it is written
        config.output_dir = None;
        Context {
            config,
            base_dir,
            out_dir,
        }
    }

    pub fn params(&self) -> Result<ReadoutParams> {
        self.config.readout.to_params()
    }

    pub fn envelope(&self) -> Result<PulseEnvelope> {
        self.config.envelope.build(&self.base_dir)
    }

    fn provenance(&self, command: &'static str) -> Provenance {
        Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: self.config.seed,
            config: self.config.clone(),
        }
    }

    fn prepare_output(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| Error::io(&self.out_dir, e))
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn calibrate(&self, params: &ReadoutParams, kind: DepletionKind) -> Result<Calibration> {
        let mut dep = self.config.depletion;
        dep.kind = kind;
        let seed = self.config.seed()?;
        calibrate(params, &self.envelope()?, &dep, &self.config.sweep, seed, condition_stream(kind, params.delta))
    }
}

/// Written into every report so it can be reproduced from itself.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config: ConfigFile,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::invalid(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::io(path, std::io::Error::other(e))
}

fn save_with<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn write_transients(path: &Path, t: &[Transients; 2], dt: f64) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    w.write_record(["t_ns", "i0", "q0", "i1", "q1"]).map_err(&err)?;
    for k in 0..t[0].mean_i.len() {
        w.write_record(&[
            format!("{}", k as f64 * dt * 1e9),
            format!("{:e}", t[0].mean_i[k]),
            format!("{:e}", t[0].mean_q[k]),
            format!("{:e}", t[1].mean_i[k]),
            format!("{:e}", t[1].mean_q[k]),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn weights_matched(choice: WeightChoice) -> bool {
    matches!(choice, WeightChoice::Optimal | WeightChoice::Both)
}

fn weights_square(choice: WeightChoice) -> bool {
    matches!(choice, WeightChoice::Square | WeightChoice::Both)
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub epsilon_max: f64,
    pub gamma_m_per_eps2: f64,
    pub depletion: DepletionSummary,
    pub weights: Vec<WeightKind>,
}

/// Step 1: depletion setup, averaged transients at `ε_max`, and weights.
///
/// Writes `depletion.json`, `transients.csv`, `weights.csv` (matched filter)
/// and, when square weights are configured, `weights_square.csv`.
pub fn calibrate_weights(ctx: &Context) -> Result<CalibrationReport> {
    ctx.config.validate()?;
    let seed = ctx.config.seed()?;
    let params = ctx.params()?;
    let kind = ctx.config.depletion.kind;
    let cal = ctx.calibrate(&params, kind)?;
    let stream = condition_stream(kind, params.delta);
    let wcfg = &ctx.config.weights;
    let transients = measure_transients(&cal, wcfg.transient_shots, ctx.config.mode, seed, stream)?;
    let mut sets = vec![super::pipeline::matched_weights(&cal, wcfg.source, Some(&transients))?];
    if weights_square(wcfg.kind) {
        sets.push(super::pipeline::box_weights(&cal, wcfg.phi_w)?);
    }

    ctx.prepare_output()?;
    let dt = cal.envelope.sample_period;
    write_transients(&ctx.out("transients.csv"), &transients, dt)?;
    for w in &sets {
        let name = match w.kind {
            WeightKind::Square { .. } => "weights_square.csv",
            _ => "weights.csv",
        };
        let path = ctx.out(name);
        save_with(&path, |f| w.write_csv(dt, f))?;
    }
    if let Some(t) = &cal.tuneup {
        t.save_trace_csv(&ctx.out("depletion_trace.csv"))?;
    }
    let report = CalibrationReport {
        provenance: ctx.provenance("calibrate-weights"),
        epsilon_max: cal.epsilon_max,
        gamma_m_per_eps2: cal.gamma_unit,
        depletion: cal.depletion.clone(),
        weights: sets.iter().map(|w| w.kind).collect(),
    };
    write_json(&ctx.out("depletion.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaReport {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub delta_mhz: f64,
    pub epsilon_max: f64,
    pub depletion: DepletionSummary,
    #[serde(flatten)]
    pub extraction: Extraction,
    pub notes: Vec<String>,
}

fn notes(ctx: &Context, x: &Extraction) -> Vec<String> {
    let mut n = vec![
        "a and sigma_m come from separate experiments (SNR sweep and Ramsey sweep); eta_err treats them as independent"
            .to_string(),
        "the eps = 0 point enters the dephasing fit only; the SNR line is fitted through the origin".to_string(),
    ];
    if ctx.config.mode == SimMode::Noiseless {
        n.push("noiseless mode: exact fringes and model SNR, errors reflect fit residuals only".into());
    }
    if x.decay.chi2_red > 3.0 {
        n.push(format!("dephasing fit has reduced chi2 = {:.2}", x.decay.chi2_red));
    }
    for r in &x.results {
        if r.line.chi2_red > 3.0 {
            n.push(format!("{} SNR line has reduced chi2 = {:.2}", weight_label(&r.weights), r.line.chi2_red));
        }
    }
    n
}

fn extract_for(ctx: &Context, params: &ReadoutParams, kind: DepletionKind, choice: WeightChoice) -> Result<(Calibration, Extraction)> {
    let seed = ctx.config.seed()?;
    let cal = ctx.calibrate(params, kind)?;
    let stream = condition_stream(kind, params.delta);
    let sets = weight_sets(
        &cal,
        &ctx.config.weights,
        weights_matched(choice),
        weights_square(choice),
        ctx.config.mode,
        seed,
        stream,
    )?;
    let s = SweepSettings {
        sweep: &ctx.config.sweep,
        ramsey: &ctx.config.ramsey,
        mode: ctx.config.mode,
        seed,
        stream,
    };
    let x = run_extraction(&cal, &sets, &s)?;
    Ok((cal, x))
}

fn eta_report(ctx: &Context, command: &'static str, cal: &Calibration, x: Extraction) -> EtaReport {
    EtaReport {
        provenance: ctx.provenance(command),
        delta_mhz: cal.params.delta / TAU / 1e6,
        epsilon_max: cal.epsilon_max,
        depletion: cal.depletion.clone(),
        notes: notes(ctx, &x),
        extraction: x,
    }
}

fn write_extraction_tables(dir: &Path, x: &Extraction) -> Result<()> {
    let path = dir.join("coherence.csv");
    let mut w = csv_writer(&path)?;
    for p in &x.coherence {
        w.serialize(p).map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("snr.csv");
    let mut w = csv_writer(&path)?;
    let err = csv_err(&path);
    w.write_record(["weights", "epsilon", "snr", "snr_err"]).map_err(&err)?;
    for r in &x.results {
        for p in &r.snr {
            w.write_record(&[
                weight_label(&r.weights).to_string(),
                format!("{}", p.epsilon),
                format!("{}", p.snr),
                format!("{}", p.snr_err),
            ])
            .map_err(&err)?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("fringes.csv");
    let mut w = csv_writer(&path)?;
    let err = csv_err(&path);
    w.write_record(["epsilon", "phi", "sigma_z"]).map_err(&err)?;
    for f in &x.fringes {
        for (phi, s) in f.phi.iter().zip(&f.sigma_z) {
            w.write_record(&[format!("{}", f.epsilon), format!("{phi}"), format!("{s}")]).map_err(&err)?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

/// Steps 1 to 3 at the configured detuning. Writes `report.json`,
/// `coherence.csv`, `snr.csv` and `fringes.csv`.
pub fn extract_eta(ctx: &Context) -> Result<EtaReport> {
    ctx.config.validate()?;
    let params = ctx.params()?;
    let (cal, x) = extract_for(ctx, &params, ctx.config.depletion.kind, ctx.config.weights.kind)?;
    ctx.prepare_output()?;
    write_extraction_tables(&ctx.out_dir, &x)?;
    let report = eta_report(ctx, "extract-eta", &cal, x);
    write_json(&ctx.out("report.json"), &report)?;
    Ok(report)
}

/// One row of the detuning summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub delta_mhz: f64,
    pub condition: String,
    pub status: String,
    pub eta_e: Option<f64>,
    pub eta_err: Option<f64>,
    pub a: Option<f64>,
    pub a_err: Option<f64>,
    pub sigma_m: Option<f64>,
    pub sigma_m_err: Option<f64>,
    pub model_eta: Option<f64>,
}

/// Spread and trend of `η_e(Δ)` for one condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionStats {
    pub condition: String,
    pub n_ok: usize,
    pub n_failed: usize,
    pub mean: f64,
    pub std: f64,
    /// Least-squares slope of `η_e` against `Δ/2π` (per MHz) and its error.
    pub slope_per_mhz: f64,
    pub slope_err: f64,
    /// `η_e` at the detuning closest to zero.
    pub center: f64,
    /// Mean `η_e` at the largest `|Δ|`.
    pub edge: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub rows: Vec<SweepRow>,
    pub stats: Vec<ConditionStats>,
}

fn failed_row(delta_mhz: f64, condition: &str, e: &Error) -> SweepRow {
    SweepRow {
        delta_mhz,
        condition: condition.to_string(),
        status: format!("failed: {e}"),
        eta_e: None,
        eta_err: None,
        a: None,
        a_err: None,
        sigma_m: None,
        sigma_m_err: None,
        model_eta: None,
    }
}

pub fn condition_stats(condition: &str, rows: &[SweepRow]) -> Option<ConditionStats> {
    let all: Vec<&SweepRow> = rows.iter().filter(|r| r.condition == condition).collect();
    let ok: Vec<(f64, f64)> = all.iter().filter_map(|r| Some((r.delta_mhz, r.eta_e?))).collect();
    if ok.is_empty() {
        return None;
    }
    let n = ok.len() as f64;
    let mean = ok.iter().map(|p| p.1).sum::<f64>() / n;
    let std = if ok.len() > 1 {
        (ok.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let xm = ok.iter().map(|p| p.0).sum::<f64>() / n;
    let sxx: f64 = ok.iter().map(|p| (p.0 - xm).powi(2)).sum();
    let (slope, slope_err) = if ok.len() > 2 && sxx > 0.0 {
        let s = ok.iter().map(|p| (p.0 - xm) * (p.1 - mean)).sum::<f64>() / sxx;
        let rss: f64 = ok.iter().map(|p| (p.1 - mean - s * (p.0 - xm)).powi(2)).sum();
        (s, (rss / (n - 2.0) / sxx).sqrt())
    } else {
        (0.0, f64::INFINITY)
    };
    let center = ok.iter().min_by(|a, b| a.0.abs().total_cmp(&b.0.abs())).map(|p| p.1).unwrap_or(f64::NAN);
    let dmax = ok.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    let edge_pts: Vec<f64> = ok.iter().filter(|p| p.0.abs() >= dmax - 1e-12).map(|p| p.1).collect();
    Some(ConditionStats {
        condition: condition.to_string(),
        n_ok: ok.len(),
        n_failed: all.len() - ok.len(),
        mean,
        std,
        slope_per_mhz: slope,
        slope_err,
        center,
        edge: edge_pts.iter().sum::<f64>() / edge_pts.len() as f64,
    })
}

#[derive(Debug, Clone, Serialize)]
struct DeltaReport {
    #[serde(flatten)]
    provenance: Provenance,
    delta_mhz: f64,
    reports: Vec<DeltaEntry>,
}

#[derive(Debug, Clone, Serialize)]
struct DeltaEntry {
    depletion_kind: DepletionKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    depletion: Option<DepletionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    extraction: Option<Extraction>,
}

/// Steps 1 to 3 at every configured detuning for every condition, each with
/// its own depletion tuneup and weight calibration. A failure at one
/// detuning is recorded and the sweep moves on.
///
/// Writes `sweep/delta_NN.json`, `summary.csv` and `sweep.json`.
pub fn sweep_detuning(ctx: &Context) -> Result<SweepReport> {
    ctx.config.validate()?;
    let deltas = ctx.config.detuning.values_mhz();
    let conditions = &ctx.config.detuning.conditions;
    if deltas.is_empty() || conditions.is_empty() {
        return Err(Error::Config("[detuning] needs at least one detuning and one condition".into()));
    }
    let base = ctx.params()?;
    let dir = ctx.out("sweep");
    ctx.prepare_output()?;
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let mut rows = Vec::new();
    for (k, &d) in deltas.iter().enumerate() {
        let params = base.with_delta(TAU * d * 1e6);
        let mut entries = Vec::new();
        for kind in [DepletionKind::Active, DepletionKind::Passive] {
            let wanted: Vec<_> = conditions.iter().filter(|c| c.is_active() == (kind == DepletionKind::Active)).collect();
            if wanted.is_empty() {
                continue;
            }
            let matched = wanted.iter().any(|c| c.is_optimal());
            let square = wanted.iter().any(|c| !c.is_optimal());
            let choice = match (matched, square) {
                (true, true) => WeightChoice::Both,
                (true, false) => WeightChoice::Optimal,
                _ => WeightChoice::Square,
            };
            match extract_for(ctx, &params, kind, choice) {
                Ok((cal, x)) => {
                    for c in &wanted {
                        let r = x
                            .results
                            .iter()
                            .find(|r| matches!(r.weights, WeightKind::Square { .. }) != c.is_optimal())
                            .expect("result for every requested weight set");
                        rows.push(SweepRow {
                            delta_mhz: d,
                            condition: c.label().to_string(),
                            status: "ok".into(),
                            eta_e: Some(r.eta.eta_e),
                            eta_err: Some(r.eta.eta_err),
                            a: Some(r.eta.a),
                            a_err: Some(r.eta.a_err),
                            sigma_m: Some(r.eta.sigma_m),
                            sigma_m_err: Some(r.eta.sigma_m_err),
                            model_eta: Some(r.model_eta),
                        });
                    }
                    entries.push(DeltaEntry {
                        depletion_kind: kind,
                        error: None,
                        depletion: Some(cal.depletion.clone()),
                        epsilon_max: Some(cal.epsilon_max),
                        extraction: Some(x),
                    });
                }
                Err(e) => {
                    for c in &wanted {
                        rows.push(failed_row(d, c.label(), &e));
                    }
                    entries.push(DeltaEntry {
                        depletion_kind: kind,
                        error: Some(e.to_string()),
                        depletion: None,
                        epsilon_max: None,
                        extraction: None,
                    });
                }
            }
        }
        let report = DeltaReport {
            provenance: ctx.provenance("sweep-detuning"),
            delta_mhz: d,
            reports: entries,
        };
        write_json(&dir.join(format!("delta_{k:02}.json")), &report)?;
    }

    let path = ctx.out("summary.csv");
    let mut w = csv_writer(&path)?;
    for r in &rows {
        w.serialize(r).map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let stats = conditions.iter().filter_map(|c| condition_stats(c.label(), &rows)).collect();
    let report = SweepReport {
        provenance: ctx.provenance("sweep-detuning"),
        rows,
        stats,
    };
    write_json(&ctx.out("sweep.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct DepletionReport {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub delta_mhz: f64,
    #[serde(flatten)]
    pub depletion: DepletionSummary,
}

/// Nelder–Mead depletion tuneup at `ε_max` (noiseless or Monte-Carlo cost per
/// `mode`), compared with the linear solve. Writes `depletion_opt.json` and
/// `trace.csv`.
pub fn optimize_depletion(ctx: &Context) -> Result<DepletionReport> {
    ctx.config.validate()?;
    let params = ctx.params()?;
    let mut dep = ctx.config.depletion;
    dep.kind = DepletionKind::Active;
    dep.method = match ctx.config.mode {
        SimMode::Noiseless => DepletionMethod::Noiseless,
        SimMode::Mc => DepletionMethod::Mc,
    };
    let seed = ctx.config.seed()?;
    let cal = calibrate(
        &params,
        &ctx.envelope()?,
        &dep,
        &ctx.config.sweep,
        seed,
        condition_stream(DepletionKind::Active, params.delta),
    )?;
    ctx.prepare_output()?;
    if let Some(t) = &cal.tuneup {
        t.save_trace_csv(&ctx.out("trace.csv"))?;
    }
    let report = DepletionReport {
        provenance: ctx.provenance("optimize-depletion"),
        delta_mhz: params.delta / TAU / 1e6,
        depletion: cal.depletion,
    };
    write_json(&ctx.out("depletion_opt.json"), &report)?;
    Ok(report)
}

/// Inputs of `fit-chain` that may come from flags instead of the config.
#[derive(Debug, Clone, Default)]
pub struct ChainInputs {
    pub csv: Option<PathBuf>,
    pub freq_ghz: Option<f64>,
    pub n_sections: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub input: String,
    pub points: Vec<GainEtaPoint>,
    pub fit: ChainFit,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pump_optimum: Option<PumpPoint>,
}

/// Fit the chain model to measured `η_e(G)`. Writes `chain_fit.json`,
/// `stages.csv` and, when a pump map is configured, `pump_map.csv`.
pub fn fit_chain(ctx: &Context, inputs: &ChainInputs) -> Result<ChainReport> {
    let section = ctx.config.chain.as_ref();
    let csv = match (&inputs.csv, section.and_then(|c| c.csv.as_ref())) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => ctx.base_dir.join(p),
        (None, None) => return Err(Error::Config("no chain data: pass --csv or set [chain] csv".into())),
    };
    let freq_ghz = inputs
        .freq_ghz
        .or(section.map(|c| c.freq_ghz))
        .ok_or_else(|| Error::Config("no signal frequency: pass --freq-ghz or set [chain] freq_ghz".into()))?;
    let n_sections = inputs
        .n_sections
        .or(section.map(|c| c.n_sections))
        .unwrap_or(chain::DEFAULT_SECTIONS);
    let points = chain::load_points_csv(&csv)?;
    let fit = chain::fit_chain(&points, n_sections, freq_ghz * 1e9)?;

    ctx.prepare_output()?;
    let gmax = points.iter().map(|p| p.gain_db).fold(0.0, f64::max) + 5.0;
    let gains: Vec<f64> = (0..=(gmax * 4.0).ceil() as usize).map(|k| 0.25 * k as f64).collect();
    let path = ctx.out("stages.csv");
    save_with(&path, |f| chain::write_stage_csv(&chain::stage_curves(&fit.params, &gains), f))?;

    let mut pump_optimum = None;
    if let Some(pm) = section.and_then(|c| c.pump_map.as_ref()) {
        let grid = |r: [f64; 2], n: usize| -> Vec<f64> {
            if n <= 1 {
                return vec![r[0]];
            }
            (0..n).map(|k| r[0] + (r[1] - r[0]) * k as f64 / (n - 1) as f64).collect()
        };
        let (map, best) = chain::pump_map(&fit.params, &pm.ridge, &grid(pm.power_dbm, pm.n_power), &grid(pm.freq_ghz, pm.n_freq))?;
        let path = ctx.out("pump_map.csv");
        let mut w = csv_writer(&path)?;
        for p in &map {
            w.serialize(p).map_err(csv_err(&path))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        pump_optimum = Some(best);
    }

    let report = ChainReport {
        provenance: ctx.provenance("fit-chain"),
        input: csv.display().to_string(),
        points,
        fit,
        pump_optimum,
    };
    write_json(&ctx.out("chain_fit.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Fast internal consistency checks on the reference device.
pub fn selftest() -> Vec<Check> {
    let mut checks = Vec::new();
    let mut record = |name: &'static str, r: Result<(bool, String)>| {
        let (passed, detail) = r.unwrap_or_else(|e| (false, e.to_string()));
        checks.push(Check { name, passed, detail });
    };

    record("efficiency identity", (|| {
        let mut worst: f64 = 0.0;
        for d in [-1.4, 0.0, 0.7] {
            let p = ReadoutParams::reference(0.165).with_delta(TAU * d * 1e6);
            let env = PulseEnvelope::square_ramp(600e-9, [200e-9, 200e-9], 100e-9, 1e-9)?.scaled(0.2);
            let env = crate::dynamics::deplete(&p, &env)?;
            let traj = crate::dynamics::trajectory(&p, &env)?;
            let snr = crate::dynamics::analytic_snr(&traj, &p, &crate::dynamics::optimal_weights(&traj, &p)?)?;
            let g = crate::dynamics::dephasing_exponent(&traj, p.chi)?;
            worst = worst.max((snr * snr / (4.0 * g) / p.eta - 1.0).abs());
        }
        Ok((worst < 1e-6, format!("max relative error {worst:.2e}")))
    })());

    record("depletion tuneup", (|| {
        let ctx = Context::new(
            ConfigFile {
                seed: Some(1),
                mode: SimMode::Noiseless,
                ..Default::default()
            },
            PathBuf::new(),
            &Overrides::default(),
        );
        let mut dep = ctx.config.depletion;
        dep.method = DepletionMethod::Noiseless;
        let cal = calibrate(&ctx.params()?, &ctx.envelope()?, &dep, &ctx.config.sweep, 1, 0)?;
        let err = cal.depletion.relative_error.unwrap_or([f64::INFINITY; 4]);
        let worst = err.iter().copied().fold(0.0, f64::max);
        Ok((worst < 1e-3, format!("max relative deviation from linear solve {worst:.2e}")))
    })());

    record("noiseless extraction", (|| {
        let ctx = Context::new(
            ConfigFile {
                seed: Some(1),
                mode: SimMode::Noiseless,
                ..Default::default()
            },
            PathBuf::new(),
            &Overrides::default(),
        );
        let p = ctx.params()?;
        let (_, x) = extract_for(&ctx, &p, DepletionKind::Active, WeightChoice::Optimal)?;
        let eta = x.results[0].eta.eta_e;
        Ok(((eta / p.eta - 1.0).abs() < 1e-6, format!("eta_e = {eta:.9}, injected {}", p.eta)))
    })());

    record("chain round trip", (|| {
        let truth = ChainParams {
            eta_pre: 0.22,
            insertion_loss_db: 4.6,
            n_sections: 50,
            t_noise: 2.6,
            freq: 7.5e9,
        };
        let points: Vec<GainEtaPoint> = (0..=10)
            .map(|k| {
                let g = 2.5 * k as f64;
                GainEtaPoint {
                    gain_db: g,
                    eta_e: chain::eta_chain(&truth, g),
                    eta_err: 1e-3,
                }
            })
            .collect();
        let fit = chain::fit_chain(&points, 50, 7.5e9)?;
        let f = fit.params;
        let worst = [
            f.eta_pre / truth.eta_pre - 1.0,
            f.insertion_loss_db / truth.insertion_loss_db - 1.0,
            f.t_noise / truth.t_noise - 1.0,
        ]
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
        Ok((worst < 1e-3, format!("max relative parameter error {worst:.2e}")))
    })());

    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct_per_class() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::DegenerateWeights("x".into())), 3);
        assert_eq!(exit_code(&Error::FitFailure("x".into())), 4);
        assert_eq!(exit_code(&Error::io("p", std::io::Error::other("x"))), 5);
    }

    #[test]
    fn selftest_passes() {
        for c in selftest() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn stats_of_a_flat_sweep() {
        let row = |d: f64, e: f64| SweepRow {
            delta_mhz: d,
            condition: "c".into(),
            status: "ok".into(),
            eta_e: Some(e),
            eta_err: None,
            a: None,
            a_err: None,
            sigma_m: None,
            sigma_m_err: None,
            model_eta: None,
        };
        let rows = vec![row(-1.0, 0.2), row(0.0, 0.3), row(1.0, 0.2), failed_row(2.0, "c", &Error::FitFailure("x".into()))];
        let s = condition_stats("c", &rows).unwrap();
        assert_eq!((s.n_ok, s.n_failed), (3, 1));
        assert!(s.slope_per_mhz.abs() < 1e-15);
        assert!((s.center - 0.3).abs() < 1e-15 && (s.edge - 0.2).abs() < 1e-15);
    }
}
