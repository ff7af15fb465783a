//! Seeded trajectory ensembles with deterministic parallel reduction.
//!
//! Each trajectory draws its initial state and integration seed from a
//! counter-mode RNG keyed by (master seed, trajectory index), so results are
//! independent of worker count and scheduling order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::fock::{partial_trace, DensityMatrix, Mode, StateVector};
use crate::metrics::fidelity_with_pure;
use crate::pulse::PulseSchedule;
use crate::qsd::{
    integrate_trajectory, HamiltonianSpec, IntegratorOptions, NoiseChannel, PopulationSample,
    TrajectoryResult,
};

/// Ensemble-level configuration shared by all trajectories.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub schedule: PulseSchedule,
    pub channel: NoiseChannel,
    pub opts: IntegratorOptions,
    pub interaction_frame: bool,
    pub omega_m: f64,
    pub n_traj: usize,
    pub master_seed: u64,
    pub record_times: Vec<f64>,
    /// Mode whose reduced state is read out and scored.
    pub readout: Mode,
    /// Pure single-mode target state; also fixes the report dimension for the
    /// averaged reduced density matrix.
    pub reference: StateVector,
    /// Keep the full per-record trace of the first this-many trajectories.
    pub keep_trajectory_records: usize,
    /// Accumulate the mean multimode density matrix when every trajectory
    /// shares a basis of dimension at most this (0 disables).
    pub mean_full_dim_cap: usize,
}

/// Aggregated ensemble output.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    /// Per-trajectory readout fidelities, in trajectory order.
    pub fidelities: Vec<f64>,
    pub mean_fidelity: f64,
    pub median_fidelity: f64,
    pub q05: f64,
    pub q95: f64,
    pub iqr: f64,
    /// Fidelity of the averaged reduced state against the reference.
    pub fidelity_of_mean: f64,
    /// Mean reduced density matrix at the report dimension.
    pub mean_reduced: DensityMatrix,
    /// Mean full-space density matrix, when all bases agree and fit the cap.
    pub mean_full: Option<DensityMatrix>,
    /// Ensemble-averaged population records.
    pub mean_populations: Vec<PopulationSample>,
    /// (index, records) for the first few trajectories.
    pub trajectory_records: Vec<(usize, Vec<PopulationSample>)>,
    pub max_norm_deviation: f64,
    pub max_top_level: f64,
    /// Smallest dt any trajectory fell back to.
    pub min_dt_used: f64,
}

/// Sorted-sample quantile with linear interpolation.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

struct TrajOutput {
    index: usize,
    fidelity: f64,
    reduced: DensityMatrix,
    full: Option<DensityMatrix>,
    result: TrajectoryResult,
}

/// Run `n_traj` trajectories. `prep` builds the initial multimode state for a
/// trajectory index from its dedicated RNG stream; the basis may vary between
/// trajectories (thermal sampling enlarges cutoffs as needed).
pub fn run_ensemble<F>(spec: &EnsembleSpec, prep: F) -> Result<EnsembleResult>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<StateVector> + Sync,
{
    if spec.n_traj == 0 {
        return Err(SimError::Domain("n_traj must be positive".into()));
    }
    let report_dim = spec.reference.basis.total_dim();

    let outputs: Vec<Result<TrajOutput>> = (0..spec.n_traj)
        .into_par_iter()
        .map(|i| {
            let mut prep_rng = ChaCha8Rng::seed_from_u64(spec.master_seed);
            prep_rng.set_stream(2 * i as u64 + 1);
            let initial = prep(i, &mut prep_rng)?;
            let traj_seed: u64 = prep_rng.gen();
            let hspec = HamiltonianSpec {
                basis: initial.basis.clone(),
                schedule: spec.schedule.clone(),
                interaction_frame: spec.interaction_frame,
                omega_m: spec.omega_m,
            };
            let result = integrate_trajectory(
                &initial,
                &hspec,
                &spec.channel,
                &spec.opts,
                traj_seed,
                &spec.record_times,
            )?;
            let reduced = partial_trace(&result.final_state, spec.readout)?.resized(report_dim);
            let fidelity = fidelity_with_pure(&spec.reference, &reduced);
            let full = if spec.mean_full_dim_cap > 0
                && initial.basis.total_dim() <= spec.mean_full_dim_cap
            {
                Some(DensityMatrix::pure(&result.final_state))
            } else {
                None
            };
            Ok(TrajOutput {
                index: i,
                fidelity,
                reduced,
                full,
                result,
            })
        })
        .collect();

    let mut outputs: Vec<TrajOutput> = outputs.into_iter().collect::<Result<_>>()?;
    outputs.sort_by_key(|o| o.index);

    let n = outputs.len() as f64;
    let mut fidelities = Vec::with_capacity(outputs.len());
    let mut mean_reduced = DensityMatrix::from_matrix(nalgebra::DMatrix::zeros(
        report_dim, report_dim,
    ));
    let first_basis = outputs[0].result.final_state.basis.clone();
    let mut mean_full = outputs[0].full.as_ref().map(|f| {
        let d = f.dim();
        DensityMatrix::from_matrix(nalgebra::DMatrix::zeros(d, d))
    });
    let mut mean_pops: Vec<PopulationSample> = outputs[0]
        .result
        .records
        .iter()
        .map(|r| PopulationSample {
            t: r.t,
            n_microwave: 0.0,
            n_mechanical: 0.0,
            n_optical: r.n_optical.map(|_| 0.0),
            norm_drift: 0.0,
        })
        .collect();
    let mut trajectory_records = Vec::new();
    let mut max_dev: f64 = 0.0;
    let mut max_top: f64 = 0.0;
    let mut min_dt = f64::INFINITY;

    for out in &outputs {
        fidelities.push(out.fidelity);
        mean_reduced.add_assign(&out.reduced);
        if let Some(acc) = mean_full.as_mut() {
            match &out.full {
                Some(f) if out.result.final_state.basis == first_basis => acc.add_assign(f),
                _ => mean_full = None,
            }
        }
        for (acc, r) in mean_pops.iter_mut().zip(&out.result.records) {
            acc.n_microwave += r.n_microwave / n;
            acc.n_mechanical += r.n_mechanical / n;
            if let (Some(a), Some(v)) = (acc.n_optical.as_mut(), r.n_optical) {
                *a += v / n;
            }
            acc.norm_drift = acc.norm_drift.max(r.norm_drift.abs());
        }
        if out.index < spec.keep_trajectory_records {
            trajectory_records.push((out.index, out.result.records.clone()));
        }
        max_dev = max_dev.max(out.result.max_norm_deviation);
        max_top = max_top.max(out.result.max_top_level);
        min_dt = min_dt.min(out.result.dt_used);
    }
    mean_reduced.scale(1.0 / n);
    if let Some(acc) = mean_full.as_mut() {
        acc.scale(1.0 / n);
    }

    let fidelity_of_mean = fidelity_with_pure(&spec.reference, &mean_reduced);
    let mut sorted = fidelities.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean_fidelity = fidelities.iter().sum::<f64>() / n;

    Ok(EnsembleResult {
        mean_fidelity,
        median_fidelity: quantile(&sorted, 0.5),
        q05: quantile(&sorted, 0.05),
        q95: quantile(&sorted, 0.95),
        iqr: quantile(&sorted, 0.75) - quantile(&sorted, 0.25),
        fidelities,
        fidelity_of_mean,
        mean_reduced,
        mean_full,
        mean_populations: mean_pops,
        trajectory_records,
        max_norm_deviation: max_dev,
        max_top_level: max_top,
        min_dt_used: min_dt,
    })
}
