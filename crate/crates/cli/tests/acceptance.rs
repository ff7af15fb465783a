//! Release-gate checks for the full simulator, one test per criterion.
//!
//! Each test prints a single `acceptance N ...: PASS/FAIL` verdict line
//! (written straight to the terminal, bypassing test capture) and then
//! asserts it, so `cargo test` goes red iff a criterion fails. Tolerances
//! are pinned here, not read from any config.

use std::io::Write as _;

use exp_cli::config::{
    ContourGrid, ExperimentConfig, ExperimentKind, NumericsParams, PhysicsParams, ProtocolParams,
    Quality, TransductionParams, SCHEMA_VERSION,
};
use exp_cli::run::{run_point, PointOutput};
use exp_cli::sweep;

use eomsim_core::{
    fock_state, integrate_trajectory, tensor_product_state, BasisDescriptor, Channel, DriftForm,
    HamiltonianSpec, InputStateSpec, IntegratorOptions, Mode, NoiseChannel, Pulse, PulseSchedule,
    StateVector, TransductionKind,
};

fn verdict(label: &str, pass: bool, detail: String) {
    let line = format!(
        "acceptance {label}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    // bypass libtest output capture so the verdict shows for passing tests too
    if let Ok(mut tty) = std::fs::OpenOptions::new().write(true).open("/dev/stderr") {
        let _ = writeln!(tty, "{line}");
    }
    assert!(pass, "{line}");
}

fn fock_superposition() -> InputStateSpec {
    InputStateSpec::FockSuperposition
}

fn coherent_one() -> InputStateSpec {
    InputStateSpec::Coherent {
        alpha_re: 1.0,
        alpha_im: 0.0,
    }
}

fn config(kind: ExperimentKind, input: InputStateSpec, q_m: f64, nbar: f64) -> ExperimentConfig {
    ExperimentConfig {
        version: SCHEMA_VERSION,
        kind,
        cutoff: None,
        input,
        protocol: ProtocolParams::default_values(),
        physics: PhysicsParams {
            q_m: Quality(q_m),
            nbar,
        },
        numerics: NumericsParams::default_values(),
        contour: None,
    }
}

fn run(cfg: &ExperimentConfig, seed: u64) -> PointOutput {
    cfg.validate().expect("acceptance config is valid");
    run_point(cfg, cfg.protocol.transduction.as_ref(), &[], seed).expect("point runs")
}

fn std_error(fidelities: &[f64]) -> f64 {
    let n = fidelities.len() as f64;
    let mean = fidelities.iter().sum::<f64>() / n;
    let var = fidelities.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

#[test]
fn criterion_01_exact_swap_returns_every_input() {
    let inputs: [(&str, InputStateSpec); 4] = [
        ("coherent", coherent_one()),
        ("fock-superposition", fock_superposition()),
        (
            "cat",
            InputStateSpec::Cat {
                alpha_re: 1.0,
                alpha_im: 0.0,
            },
        ),
        (
            "squeezed",
            InputStateSpec::Squeezed {
                alpha_re: 0.0,
                alpha_im: 0.0,
                xi_re: 0.5,
                xi_im: 0.0,
            },
        ),
    ];
    let mut detail = String::new();
    let mut worst: f64 = 1.0;
    for (name, input) in inputs {
        let mut cfg = config(ExperimentKind::Memory, input, f64::INFINITY, 0.0);
        cfg.numerics.n_traj = 1;
        let f = run(&cfg, 1).record.mean_fidelity;
        worst = worst.min(f);
        detail.push_str(&format!("{name} {f:.8} "));
    }
    verdict(
        "1 exact swap at gamma=0",
        worst >= 1.0 - 1e-6,
        format!("{detail}>= {:.7} required", 1.0 - 1e-6),
    );
}

#[test]
fn criterion_02_coherent_fidelity_matches_analytic_curve() {
    let mut detail = String::new();
    let mut max_err: f64 = 0.0;
    for (i, q) in [1e3, 1e4, 1e5].into_iter().enumerate() {
        let cfg = config(ExperimentKind::Memory, coherent_one(), q, 0.0);
        let rec = run(&cfg, 200 + i as u64).record;
        let analytic = rec.analytic_fidelity.expect("coherent memory has analytic");
        let err = (rec.mean_fidelity - analytic).abs();
        max_err = max_err.max(err);
        detail.push_str(&format!(
            "Q={q:.0e}: sim {:.4} vs analytic {analytic:.4}; ",
            rec.mean_fidelity
        ));
    }
    verdict(
        "2 analytic coherent fidelity, 1000 traj",
        max_err <= 0.02,
        format!("{detail}max deviation {max_err:.4} <= 0.02 required"),
    );
}

#[test]
fn criterion_03_thermal_saturation_value() {
    // Saturation needs gamma*wait >> 1; Q=100 with wait 768 gives 7.7 decay
    // times, leaving the mechanics fully thermalized before retrieval.
    let expected = (-0.25f64).exp() / 4.0;
    let mut cfg = config(ExperimentKind::Memory, coherent_one(), 100.0, 3.0);
    // report cutoff 14 keeps the truncated nbar=3 thermal tail under 2%,
    // which would otherwise bias the saturated fidelity upward
    cfg.cutoff = Some(14);
    cfg.protocol.delta_t = 768.0;
    cfg.numerics.dt = 0.02;
    cfg.numerics.n_traj = 200;
    let rec = run(&cfg, 300).record;
    let err = (rec.mean_fidelity - expected).abs();
    verdict(
        "3 thermal saturation at Q=100, nbar=3",
        err <= 0.03,
        format!(
            "mean {:.4} vs e^(-1/4)/4 = {expected:.4}, |diff| {err:.4} <= 0.03 required",
            rec.mean_fidelity
        ),
    );
}

#[test]
fn criterion_04_fidelity_collapses_onto_zeta() {
    // Points with equal zeta = omega*(wait - pi/Omega)*nbar/Q must agree:
    // (nbar=1, Q) against (nbar=3, 3Q), three zeta values, 3 sigma gate.
    // The collapse carries an O(1/nbar) correction (decoherence scales with
    // 2 nbar + 1, zeta only with nbar), so it is tested at moderate zeta.
    let exposure = 64.0 - std::f64::consts::PI / 0.1;
    let mut detail = String::new();
    let mut pass = true;
    for (i, zeta) in [0.1, 0.25, 0.4].into_iter().enumerate() {
        let q1 = exposure / zeta;
        let mut runs = Vec::new();
        for (nbar, q) in [(1.0, q1), (3.0, 3.0 * q1)] {
            let mut cfg = config(ExperimentKind::Memory, fock_superposition(), q, nbar);
            cfg.numerics.dt = 0.02;
            cfg.numerics.n_traj = 200;
            runs.push(run(&cfg, 400 + i as u64).record);
        }
        let gap = (runs[0].mean_fidelity - runs[1].mean_fidelity).abs();
        let sigma = (std_error(&runs[0].fidelities).powi(2)
            + std_error(&runs[1].fidelities).powi(2))
        .sqrt();
        pass &= gap <= 3.0 * sigma;
        detail.push_str(&format!(
            "zeta={zeta}: {:.4} vs {:.4}, gap {gap:.4} vs 3sigma {:.4}; ",
            runs[0].mean_fidelity,
            runs[1].mean_fidelity,
            3.0 * sigma
        ));
    }
    verdict("4 universal zeta collapse", pass, detail);
}

fn transduce_config(
    kind: TransductionKind,
    area_pi: f64,
    separation_pct: f64,
    q_m: f64,
    nbar: f64,
) -> ExperimentConfig {
    let mut cfg = config(ExperimentKind::Transduce, fock_superposition(), q_m, nbar);
    cfg.protocol.transduction = Some(TransductionParams {
        kind,
        area_pi,
        separation_pct,
    });
    cfg
}

#[test]
fn criterion_05_simultaneous_pulse_transfer() {
    let mut lossless = transduce_config(
        TransductionKind::Simultaneous,
        1.0,
        0.0,
        f64::INFINITY,
        0.0,
    );
    lossless.numerics.n_traj = 1;
    let f_lossless = run(&lossless, 1).record.mean_fidelity;

    let mut thermal = transduce_config(TransductionKind::Simultaneous, 1.0, 0.0, 4525.0, 3.0);
    thermal.numerics.dt = 0.02;
    thermal.numerics.n_traj = 200;
    let f_thermal = run(&thermal, 500).record.mean_fidelity;

    let pass = f_lossless >= 1.0 - 1e-4 && (f_thermal - 0.95).abs() <= 0.02;
    verdict(
        "5 simultaneous sqrt(2)pi transfer",
        pass,
        format!(
            "lossless {f_lossless:.6} >= {:.4}; thermal Q=4525 nbar=3 {f_thermal:.4} in 0.95 +/- 0.02",
            1.0 - 1e-4
        ),
    );
}

#[test]
fn criterion_06_contour_ridges_and_nodes() {
    let mut cfg = transduce_config(TransductionKind::Overlapping, 1.0, 0.0, 1e5, 0.0);
    cfg.kind = ExperimentKind::Contour;
    cfg.numerics.n_traj = 4;
    cfg.numerics.master_seed = 600;
    cfg.contour = Some(ContourGrid {
        areas_pi: vec![1.0, std::f64::consts::SQRT_2, 2.0, 3.0],
        separations_pct: vec![-15.0, 0.0, 10.0, 40.0],
    });
    cfg.validate().unwrap();
    let points = sweep::execute(&cfg).expect("contour grid runs");
    let lookup = |area: f64, sep: f64| -> f64 {
        points
            .iter()
            .find(|p| {
                (p.record.area_pi.unwrap() - area).abs() < 1e-12
                    && (p.record.separation_pct.unwrap() - sep).abs() < 1e-12
            })
            .unwrap_or_else(|| panic!("grid point ({area}, {sep}) missing"))
            .record
            .mean_fidelity
    };
    let ridge_pi = lookup(1.0, 40.0);
    let ridge_sqrt2 = lookup(std::f64::consts::SQRT_2, 0.0);
    let node = lookup(2.0, 40.0);
    let pass = ridge_pi > 0.98 && ridge_sqrt2 > 0.98 && node < 0.1;
    verdict(
        "6 contour structure",
        pass,
        format!(
            "(pi, +40%) {ridge_pi:.4} > 0.98; (sqrt(2)pi, 0) {ridge_sqrt2:.4} > 0.98; \
             (2pi, +40%) {node:.4} < 0.1"
        ),
    );
}

#[test]
fn criterion_07_stirap_transfers_around_the_mechanics() {
    let mut cfg = transduce_config(TransductionKind::Overlapping, 10.0, -14.0, f64::INFINITY, 0.0);
    cfg.numerics.n_traj = 1;
    cfg.numerics.record_points = 256;
    let out = run(&cfg, 1);
    let f = out.record.mean_fidelity;
    let max_mech = out
        .ensemble
        .mean_populations
        .iter()
        .map(|r| r.n_mechanical)
        .fold(0.0f64, f64::max);
    // the (|0> + |1>)/sqrt(2) input starts with 0.5 microwave quanta
    let bound = 0.25 * 0.5;
    let pass = f >= 0.95 && max_mech < bound;
    verdict(
        "7 stirap (10pi, -14%)",
        pass,
        format!("fidelity {f:.4} >= 0.95; max mech population {max_mech:.4} < {bound}"),
    );
}

#[test]
fn criterion_08_ensemble_mean_matches_master_equation() {
    // the Fock superposition is exact at cutoff 4; a coherent input is not.
    // A short, strong-pulse schedule keeps the Monte Carlo spread of the
    // ensemble mean (~1/sqrt(n_traj)) well under the 0.05 budget so the
    // check gates on unraveling correctness, not on sampling noise.
    let mut cfg = config(ExperimentKind::OracleCheck, fock_superposition(), 500.0, 3.0);
    cfg.cutoff = Some(4);
    cfg.protocol.omega_mu = 0.2;
    cfg.protocol.delta_t = 16.0;
    let mut distances = Vec::new();
    for (i, n_traj) in [1000usize, 4000].into_iter().enumerate() {
        cfg.numerics.n_traj = n_traj;
        let rec = run(&cfg, 800 + i as u64).record;
        distances.push(rec.oracle_trace_distance.expect("oracle distance recorded"));
    }
    let pass = distances[0] < 0.05 && distances[1] < distances[0];
    verdict(
        "8 trajectory mean vs master equation",
        pass,
        format!(
            "trace distance {:.4} < 0.05 at 1000 traj, {:.4} at 4000 traj (must shrink)",
            distances[0], distances[1]
        ),
    );
}

#[test]
fn criterion_09_weak_order_two_convergence() {
    // gamma = 0 makes every trajectory deterministic, isolating the
    // deterministic (Heun) part of the stepper; error must scale as dt^2.
    // A single pi pulse is used: over the memory +pi/-pi pair the leading
    // phase error cancels by antisymmetry and the measured order inflates.
    let pulse = Pulse {
        peak: 0.1,
        center: 0.0,
        width: 1.0 / 0.1,
        channel: Channel::ElectroMechanical,
    };
    let off = pulse.tail_offset();
    let schedule = PulseSchedule::new(
        vec![Pulse {
            center: off,
            ..pulse
        }],
        0.0,
        2.0 * off,
    )
    .unwrap();
    let cutoff = 10;
    let basis = BasisDescriptor::new(&[cutoff, cutoff]).unwrap();
    let input = coherent_one().build(cutoff).unwrap();
    let initial = tensor_product_state(&[input, fock_state(0, cutoff).unwrap()]).unwrap();
    let spec = HamiltonianSpec {
        basis,
        schedule: schedule.clone(),
        interaction_frame: true,
        omega_m: 1.0,
    };
    let channel = NoiseChannel::new(Mode::Mechanical, 0.0, 0.0).unwrap();
    let end = [schedule.t_end];
    let solve = |dt: f64| -> StateVector {
        let opts = IntegratorOptions {
            dt,
            drift_form: DriftForm::Standard,
            auto_halve: false,
        };
        integrate_trajectory(&initial, &spec, &channel, &opts, 7, &end)
            .unwrap()
            .final_state
    };
    let reference = solve(0.0025);
    let err = |state: &StateVector| -> f64 {
        state
            .amplitudes
            .iter()
            .zip(&reference.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let e_coarse = err(&solve(0.02));
    let e_fine = err(&solve(0.01));
    let ratio = e_coarse / e_fine;
    let pass = (3.5..=4.5).contains(&ratio);
    verdict(
        "9 integrator order at gamma=0",
        pass,
        format!(
            "error {e_coarse:.3e} at dt=0.02, {e_fine:.3e} at dt=0.01, ratio {ratio:.2} in [3.5, 4.5]"
        ),
    );
}

#[test]
fn criterion_10_distribution_narrows_with_quality() {
    let mut iqrs = Vec::new();
    for (i, q) in [500.0, 1e4].into_iter().enumerate() {
        let mut cfg = config(ExperimentKind::Memory, fock_superposition(), q, 3.0);
        cfg.numerics.dt = 0.02;
        cfg.numerics.n_traj = 400;
        iqrs.push(run(&cfg, 1000 + i as u64).record.iqr);
    }
    verdict(
        "10 fidelity iqr narrows with Q",
        iqrs[1] < iqrs[0],
        format!("iqr {:.4} at Q=1e4 < {:.4} at Q=500", iqrs[1], iqrs[0]),
    );
}
