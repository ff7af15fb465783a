//! Experiment execution and result persistence.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use eomsim_core::{
    analytic_coherent_fidelity, fock_state, memory_schedule, run_ensemble, sample_thermal_fock,
    tensor_product_state, transduction_schedule, zeta, BasisDescriptor, DensityMatrix,
    EnsembleResult, EnsembleSpec, HamiltonianSpec, InputStateSpec, IntegratorOptions, Mode,
    NoiseChannel, PulseSchedule, StateVector,
};

use crate::config::{ExperimentConfig, ExperimentKind, Quality, TransductionParams};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("output directory {0} already holds results; pass --overwrite to replace them")]
    Collision(PathBuf),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("simulation failure: {0}")]
    Sim(#[from] eomsim_core::SimError),
    #[error("{0}")]
    Report(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// One executed experiment point, persisted as JSON for report assembly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    pub kind: ExperimentKind,
    pub master_seed: u64,
    pub point_seed: u64,
    /// (axis name, value) pairs identifying a sweep point; empty otherwise.
    pub sweep_coords: Vec<(String, f64)>,
    pub q_m: Quality,
    pub nbar: f64,
    pub delta_t: f64,
    pub omega_mu: f64,
    pub area_pi: Option<f64>,
    pub separation_pct: Option<f64>,
    pub n_traj: usize,
    pub dt: f64,
    pub mean_fidelity: f64,
    pub median_fidelity: f64,
    pub q05: f64,
    pub q95: f64,
    pub iqr: f64,
    pub fidelity_of_mean: f64,
    pub analytic_fidelity: Option<f64>,
    pub zeta_o: Option<f64>,
    pub zeta: Option<f64>,
    pub fidelities: Vec<f64>,
    pub max_norm_deviation: f64,
    pub max_top_level: f64,
    pub min_dt_used: f64,
    /// Trace distance to the master-equation oracle (oracle-check only).
    pub oracle_trace_distance: Option<f64>,
    pub runtime_seconds: f64,
}

pub struct PointOutput {
    pub record: ResultRecord,
    pub ensemble: EnsembleResult,
}

fn schedule_for(
    config: &ExperimentConfig,
    transduction: Option<&TransductionParams>,
) -> Result<PulseSchedule, RunError> {
    match config.kind {
        ExperimentKind::Memory | ExperimentKind::OracleCheck => Ok(memory_schedule(
            config.protocol.omega_mu,
            config.protocol.delta_t,
        )?),
        ExperimentKind::Transduce | ExperimentKind::Contour => {
            let t = transduction.ok_or_else(|| {
                RunError::Report("transduction parameters missing".to_string())
            })?;
            Ok(transduction_schedule(
                t.kind,
                t.area_pi,
                t.separation_pct,
                config.protocol.omega_mu,
            )?)
        }
    }
}

fn num_modes(kind: ExperimentKind) -> usize {
    match kind {
        ExperimentKind::Memory | ExperimentKind::OracleCheck => 2,
        ExperimentKind::Transduce | ExperimentKind::Contour => 3,
    }
}

fn readout_mode(kind: ExperimentKind) -> Mode {
    match kind {
        ExperimentKind::Memory | ExperimentKind::OracleCheck => Mode::Microwave,
        ExperimentKind::Transduce | ExperimentKind::Contour => Mode::Optical,
    }
}

/// Execute one experiment point (a full trajectory ensemble).
pub fn run_point(
    config: &ExperimentConfig,
    transduction: Option<&TransductionParams>,
    sweep_coords: &[(String, f64)],
    point_seed: u64,
) -> Result<PointOutput, RunError> {
    let started = Instant::now();
    let schedule = schedule_for(config, transduction)?;
    let base_cutoff = config.base_cutoff();
    let modes = num_modes(config.kind);
    let nbar = config.physics.nbar;
    let gamma = config.physics.q_m.gamma(1.0);
    let reference = config.input.build(base_cutoff)?;
    let input_spec = config.input;
    let record_points = config.numerics.record_points;
    let record_times: Vec<f64> = (0..record_points)
        .map(|k| {
            schedule.t_start
                + (schedule.t_end - schedule.t_start) * k as f64 / (record_points - 1) as f64
        })
        .collect();

    // Oracle-check compares against the dense master equation, which needs a
    // single shared basis; the mechanical mode starts in vacuum there and
    // thermal noise enters only through the channel rates.
    let thermal_prep = config.kind != ExperimentKind::OracleCheck && nbar > 0.0;

    let spec = EnsembleSpec {
        schedule: schedule.clone(),
        channel: NoiseChannel::new(Mode::Mechanical, gamma, nbar)?,
        opts: IntegratorOptions {
            dt: config.numerics.dt,
            drift_form: config.numerics.drift_form,
            auto_halve: true,
        },
        interaction_frame: true,
        omega_m: 1.0,
        n_traj: config.numerics.n_traj,
        master_seed: point_seed,
        record_times,
        readout: readout_mode(config.kind),
        reference: reference.clone(),
        keep_trajectory_records: config.numerics.trace_trajectories,
        mean_full_dim_cap: if config.kind == ExperimentKind::OracleCheck {
            256
        } else {
            0
        },
    };

    let prep = move |_i: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        let n_th = if thermal_prep {
            sample_thermal_fock(nbar, rng)
        } else {
            0
        };
        let cutoff = base_cutoff + n_th;
        let mut factors = Vec::with_capacity(modes);
        factors.push(input_spec.build(cutoff)?);
        factors.push(fock_state(n_th, cutoff)?);
        if modes == 3 {
            factors.push(fock_state(0, cutoff)?);
        }
        tensor_product_state(&factors)
    };

    let ensemble = run_ensemble(&spec, prep)?;

    let oracle_trace_distance = if config.kind == ExperimentKind::OracleCheck {
        Some(oracle_distance(config, &schedule, &spec, &ensemble)?)
    } else {
        None
    };

    let analytic_fidelity = match (config.kind, &config.input) {
        (ExperimentKind::Memory, InputStateSpec::Coherent { alpha_re, alpha_im }) => {
            let alpha_abs = (alpha_re * alpha_re + alpha_im * alpha_im).sqrt();
            Some(analytic_coherent_fidelity(
                alpha_abs,
                1.0,
                config.protocol.delta_t,
                config.physics.q_m.0,
                nbar,
            ))
        }
        _ => None,
    };
    let zeta_point = if config.kind == ExperimentKind::Memory {
        zeta(
            1.0,
            config.protocol.delta_t,
            config.protocol.omega_mu,
            config.physics.q_m.0,
            nbar,
        )
        .ok()
    } else {
        None
    };

    let record = ResultRecord {
        config_hash: config.hash(),
        kind: config.kind,
        master_seed: config.numerics.master_seed,
        point_seed,
        sweep_coords: sweep_coords.to_vec(),
        q_m: config.physics.q_m,
        nbar,
        delta_t: config.protocol.delta_t,
        omega_mu: config.protocol.omega_mu,
        area_pi: transduction.map(|t| t.area_pi),
        separation_pct: transduction.map(|t| t.separation_pct),
        n_traj: config.numerics.n_traj,
        dt: config.numerics.dt,
        mean_fidelity: ensemble.mean_fidelity,
        median_fidelity: ensemble.median_fidelity,
        q05: ensemble.q05,
        q95: ensemble.q95,
        iqr: ensemble.iqr,
        fidelity_of_mean: ensemble.fidelity_of_mean,
        analytic_fidelity,
        zeta_o: zeta_point.as_ref().map(|z| z.zeta_o),
        zeta: zeta_point.as_ref().map(|z| z.zeta),
        fidelities: ensemble.fidelities.clone(),
        max_norm_deviation: ensemble.max_norm_deviation,
        max_top_level: ensemble.max_top_level,
        min_dt_used: ensemble.min_dt_used,
        oracle_trace_distance,
        runtime_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(PointOutput { record, ensemble })
}

fn oracle_distance(
    config: &ExperimentConfig,
    schedule: &PulseSchedule,
    spec: &EnsembleSpec,
    ensemble: &EnsembleResult,
) -> Result<f64, RunError> {
    let mean_full = ensemble
        .mean_full
        .as_ref()
        .ok_or_else(|| RunError::Report("ensemble mean density matrix unavailable".into()))?;
    let base_cutoff = config.base_cutoff();
    let basis = BasisDescriptor::new(&vec![base_cutoff; 2])?;
    let input = config.input.build(base_cutoff)?;
    let vac = fock_state(0, base_cutoff)?;
    let initial = tensor_product_state(&[input, vac])?;
    let hspec = HamiltonianSpec {
        basis,
        schedule: schedule.clone(),
        interaction_frame: true,
        omega_m: 1.0,
    };
    let exact = eomsim_core::lindblad_evolve(
        &DensityMatrix::pure(&initial),
        &hspec,
        &spec.channel,
        (config.numerics.dt / 2.0).min(0.005),
    )?;
    Ok(eomsim_core::trace_distance(mean_full, &exact)?)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:.12e}"))
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    std::fs::write(path, contents).map_err(io_err(path))
}

fn header(config: &ExperimentConfig, point: Option<&ResultRecord>) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# kind={} config={} master_seed={}",
        config.kind,
        config.hash(),
        config.numerics.master_seed
    );
    let _ = writeln!(s, "# units: times in 1/omega_m, rates in omega_m");
    if let Some(r) = point {
        if !r.sweep_coords.is_empty() {
            let coords: Vec<String> = r
                .sweep_coords
                .iter()
                .map(|(n, v)| format!("{n}={v}"))
                .collect();
            let _ = writeln!(s, "# point: {}", coords.join(" "));
        }
    }
    s
}

/// Persist the outputs of one or more executed points into `out_dir`.
pub fn write_outputs(
    config: &ExperimentConfig,
    points: &[PointOutput],
    out_dir: &Path,
    overwrite: bool,
) -> Result<(), RunError> {
    let snapshot = out_dir.join("config.snapshot.json");
    if snapshot.exists() && !overwrite {
        return Err(RunError::Collision(out_dir.to_path_buf()));
    }
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut cfg_json = serde_json::to_string_pretty(config).expect("config serializes");
    cfg_json.push('\n');
    write_file(&snapshot, &cfg_json)?;

    // fidelity.csv: one row per executed point.
    let mut fid = header(config, None);
    fid.push_str(
        "q_m,nbar,delta_t,area_pi,separation_pct,mean,median,q05,q95,iqr,\
         fidelity_of_mean,analytic,zeta_o,zeta\n",
    );
    for p in points {
        let r = &p.record;
        let _ = writeln!(
            fid,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_q(r.q_m.0),
            r.nbar,
            r.delta_t,
            fmt_opt(r.area_pi),
            fmt_opt(r.separation_pct),
            format_args!("{:.12e}", r.mean_fidelity),
            format_args!("{:.12e}", r.median_fidelity),
            format_args!("{:.12e}", r.q05),
            format_args!("{:.12e}", r.q95),
            format_args!("{:.12e}", r.iqr),
            format_args!("{:.12e}", r.fidelity_of_mean),
            fmt_opt(r.analytic_fidelity),
            fmt_opt(r.zeta_o),
            fmt_opt(r.zeta),
        );
    }
    write_file(&out_dir.join("fidelity.csv"), &fid)?;

    // populations.csv: ensemble-mean traces (trajectory_index = -1) plus the
    // first few per-trajectory traces of each point.
    let mut pops = header(config, None);
    pops.push_str("point,trajectory_index,t,n_optical,n_microwave,n_mechanical,norm_drift\n");
    for (pi, p) in points.iter().enumerate() {
        for rec in &p.ensemble.mean_populations {
            let _ = writeln!(
                pops,
                "{pi},-1,{:.6},{},{:.12e},{:.12e},{:.3e}",
                rec.t,
                fmt_opt(rec.n_optical),
                rec.n_microwave,
                rec.n_mechanical,
                rec.norm_drift,
            );
        }
        for (ti, recs) in &p.ensemble.trajectory_records {
            for rec in recs {
                let _ = writeln!(
                    pops,
                    "{pi},{ti},{:.6},{},{:.12e},{:.12e},{:.3e}",
                    rec.t,
                    fmt_opt(rec.n_optical),
                    rec.n_microwave,
                    rec.n_mechanical,
                    rec.norm_drift,
                );
            }
        }
    }
    write_file(&out_dir.join("populations.csv"), &pops)?;

    // histogram.csv: 40 equal bins over [0, 1] per point.
    let bins = 40usize;
    let mut hist = header(config, None);
    hist.push_str("point,bin_left,bin_right,count\n");
    for (pi, p) in points.iter().enumerate() {
        let mut counts = vec![0usize; bins];
        for &f in &p.ensemble.fidelities {
            let b = ((f * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
        for (b, &c) in counts.iter().enumerate() {
            let _ = writeln!(
                hist,
                "{pi},{:.4},{:.4},{c}",
                b as f64 / bins as f64,
                (b + 1) as f64 / bins as f64
            );
        }
    }
    write_file(&out_dir.join("histogram.csv"), &hist)?;

    // records.json: full records for report assembly.
    let records: Vec<&ResultRecord> = points.iter().map(|p| &p.record).collect();
    let mut rec_json = serde_json::to_string_pretty(&records).expect("records serialize");
    rec_json.push('\n');
    write_file(&out_dir.join("records.json"), &rec_json)?;

    // summary.txt.
    let mut summary = String::new();
    let _ = writeln!(summary, "experiment: {}", config.kind);
    let _ = writeln!(summary, "config hash: {}", config.hash());
    let _ = writeln!(summary, "master seed: {}", config.numerics.master_seed);
    let _ = writeln!(
        summary,
        "trajectories per point: {}, dt: {}",
        config.numerics.n_traj, config.numerics.dt
    );
    let _ = writeln!(summary, "units: times in 1/omega_m, rates in omega_m");
    let _ = writeln!(summary, "points: {}", points.len());
    for p in points {
        let r = &p.record;
        let coords = if r.sweep_coords.is_empty() {
            String::new()
        } else {
            let c: Vec<String> = r
                .sweep_coords
                .iter()
                .map(|(n, v)| format!("{n}={v}"))
                .collect();
            format!(" [{}]", c.join(", "))
        };
        let _ = writeln!(
            summary,
            "  Q_m={} nbar={}{}: mean fidelity {:.6} (median {:.6}, 90% interval [{:.6}, {:.6}])",
            fmt_q(r.q_m.0),
            r.nbar,
            coords,
            r.mean_fidelity,
            r.median_fidelity,
            r.q05,
            r.q95
        );
        if let Some(a) = r.analytic_fidelity {
            let _ = writeln!(summary, "    analytic reference: {a:.6}");
        }
        if let Some(d) = r.oracle_trace_distance {
            let _ = writeln!(summary, "    trace distance to master equation: {d:.6}");
        }
        let _ = writeln!(
            summary,
            "    diagnostics: max |norm-1| {:.3e}, max top-level population {:.3e}, min dt {:.4}",
            r.max_norm_deviation, r.max_top_level, r.min_dt_used
        );
        let _ = writeln!(summary, "    runtime: {:.1} s", r.runtime_seconds);
    }
    write_file(&out_dir.join("summary.txt"), &summary)
}

pub fn fmt_q(q: f64) -> String {
    if q.is_infinite() {
        "inf".to_string()
    } else {
        format!("{q}")
    }
}

/// Build and run every point of the config (sweeps expanded), then persist.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
    overwrite: bool,
) -> Result<Vec<ResultRecord>, RunError> {
    let points = crate::sweep::execute(config)?;
    write_outputs(config, &points, out_dir, overwrite)?;
    Ok(points.into_iter().map(|p| p.record).collect())
}

/// Rebuild a single-mode pure state for external checks.
pub fn build_reference(config: &ExperimentConfig) -> Result<StateVector, RunError> {
    Ok(config.input.build(config.base_cutoff())?)
}

/// The complex amplitude of a coherent input, if that is the input kind.
pub fn coherent_alpha(config: &ExperimentConfig) -> Option<C64> {
    match config.input {
        InputStateSpec::Coherent { alpha_re, alpha_im } => Some(C64::new(alpha_re, alpha_im)),
        _ => None,
    }
}
