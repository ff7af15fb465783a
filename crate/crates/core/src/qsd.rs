//! Quantum-state-diffusion trajectory integration.
//!
//! Trajectories follow the normalized diffusive (homodyne-type) unraveling of
//! the master equation with jump operators sqrt(gamma_m (nbar+1)) d and
//! sqrt(gamma_m nbar) d^dag, driven by one real Wiener increment per open
//! channel and renormalized after every step. Steps use a derivative-free
//! Platen-type explicit scheme of weak order 2; with the noise off it reduces
//! to a Heun step with O(dt^3) local error.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SimError};
use crate::fock::{
    acc_lower, acc_number, acc_raise, expectation_number, BasisDescriptor, Mode, StateVector,
};
use crate::pulse::{Channel, PulseSchedule};

/// A mode ladder operator pair with thermal rates: phonons leave at
/// gamma (nbar + 1) and are absorbed at gamma nbar.
#[derive(Debug, Clone, Copy)]
pub struct NoiseChannel {
    pub mode: Mode,
    pub gamma: f64,
    pub nbar: f64,
}

impl NoiseChannel {
    pub fn new(mode: Mode, gamma: f64, nbar: f64) -> Result<Self> {
        if gamma < 0.0 || nbar < 0.0 {
            return Err(SimError::Domain(format!(
                "noise rates must be nonnegative (gamma {gamma}, nbar {nbar})"
            )));
        }
        Ok(Self { mode, gamma, nbar })
    }

    pub fn loss_rate(&self) -> f64 {
        self.gamma * (self.nbar + 1.0)
    }

    pub fn absorption_rate(&self) -> f64 {
        self.gamma * self.nbar
    }
}

/// Which stochastic drift to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftForm {
    /// Normalized diffusive unraveling whose ensemble mean reproduces the
    /// Lindblad master equation.
    #[default]
    Standard,
    /// The drift and diffusion exactly as printed in the source derivation;
    /// kept for comparison against the master-equation oracle.
    PaperPrinted,
}

/// Time-dependent beam-splitter Hamiltonian over a basis.
#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    pub basis: BasisDescriptor,
    pub schedule: PulseSchedule,
    /// Integrate in the frame rotating with omega_m * (total number); the
    /// beam-splitter terms commute with total number, so only the free term
    /// drops. Fidelities are computed in this frame.
    pub interaction_frame: bool,
    pub omega_m: f64,
}

impl HamiltonianSpec {
    pub fn new(basis: BasisDescriptor, schedule: PulseSchedule) -> Result<Self> {
        let spec = Self {
            basis,
            schedule,
            interaction_frame: true,
            omega_m: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        // Every scheduled channel must map onto modes present in the basis.
        Mode::Mechanical.index(&self.basis)?;
        if self.schedule.has_channel(Channel::OptoMechanical) {
            Mode::Optical.index(&self.basis)?;
        }
        Ok(())
    }

    /// dst += scale * H(t) * src.
    pub fn acc_hamiltonian(&self, t: f64, src: &[C64], scale: C64, dst: &mut [C64]) {
        let basis = &self.basis;
        let t = t.clamp(self.schedule.t_start, self.schedule.t_end);
        let omega_mu = self.schedule.coupling_unchecked(Channel::ElectroMechanical, t);
        if omega_mu != 0.0 {
            acc_beamsplitter(basis, 0, 1, src, scale * (-omega_mu / 2.0), dst);
        }
        if basis.num_modes() > 2 {
            let omega_o = self.schedule.coupling_unchecked(Channel::OptoMechanical, t);
            if omega_o != 0.0 {
                acc_beamsplitter(basis, 2, 1, src, scale * (-omega_o / 2.0), dst);
            }
        }
        if !self.interaction_frame {
            for m in 0..basis.num_modes() {
                acc_number(basis, m, src, scale * self.omega_m, dst);
            }
        }
    }
}

/// dst += scale * (x^dag y + x y^dag) * src for distinct modes x, y.
pub fn acc_beamsplitter(
    basis: &BasisDescriptor,
    mode_x: usize,
    mode_y: usize,
    src: &[C64],
    scale: C64,
    dst: &mut [C64],
) {
    let sx = basis.stride(mode_x);
    let sy = basis.stride(mode_y);
    let cx = basis.cutoff(mode_x);
    let cy = basis.cutoff(mode_y);
    for (i, &amp) in src.iter().enumerate() {
        if amp == C64::ZERO {
            continue;
        }
        let nx = (i / sx) % cx;
        let ny = (i / sy) % cy;
        // x^dag y
        if ny > 0 && nx + 1 < cx {
            let f = (((nx + 1) * ny) as f64).sqrt();
            dst[i + sx - sy] += scale * f * amp;
        }
        // x y^dag
        if nx > 0 && ny + 1 < cy {
            let f = ((nx * (ny + 1)) as f64).sqrt();
            dst[i - sx + sy] += scale * f * amp;
        }
    }
}

/// Integrator options.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    pub dt: f64,
    pub drift_form: DriftForm,
    /// Restart the trajectory with dt/2 (up to 4 times) if the step-error
    /// guard trips.
    pub auto_halve: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            drift_form: DriftForm::Standard,
            auto_halve: true,
        }
    }
}

/// Random inputs of a single step: one real Wiener increment per channel and
/// a two-point Levy-area substitute for the mixed double integral.
#[derive(Debug, Clone, Copy)]
pub struct StepNoise {
    pub dw_loss: f64,
    pub dw_absorb: f64,
    /// +-dt with equal probability.
    pub levy: f64,
}

impl StepNoise {
    pub fn zero() -> Self {
        Self {
            dw_loss: 0.0,
            dw_absorb: 0.0,
            levy: 0.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R, dt: f64) -> Self {
        let s = dt.sqrt();
        let g1: f64 = rng.sample(StandardNormal);
        let g2: f64 = rng.sample(StandardNormal);
        let flip: bool = rng.gen();
        Self {
            dw_loss: g1 * s,
            dw_absorb: g2 * s,
            levy: if flip { dt } else { -dt },
        }
    }
}

/// One sampled population record along a trajectory.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct PopulationSample {
    pub t: f64,
    pub n_microwave: f64,
    pub n_mechanical: f64,
    pub n_optical: Option<f64>,
    /// Pre-normalization norm deviation of the most recent step.
    pub norm_drift: f64,
}

/// Output of a single trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryResult {
    pub seed: u64,
    pub final_state: StateVector,
    pub records: Vec<PopulationSample>,
    /// max_t |norm before renormalization - 1|.
    pub max_norm_deviation: f64,
    /// Largest top-Fock-level population seen at record times, over all modes.
    pub max_top_level: f64,
    /// dt actually used (after any automatic halving).
    pub dt_used: f64,
}

struct Engine<'a> {
    spec: &'a HamiltonianSpec,
    mech: usize,
    /// (is_lower, rate amplitude sqrt(rate)) for each active channel.
    ops: Vec<(bool, f64)>,
    form: DriftForm,
    gamma: f64,
    nbar: f64,
}

fn axpy(dst: &mut [C64], scale: C64, src: &[C64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += scale * s;
    }
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

impl<'a> Engine<'a> {
    fn new(spec: &'a HamiltonianSpec, channel: &NoiseChannel) -> Result<Self> {
        let mech = channel.mode.index(&spec.basis)?;
        let mut ops = Vec::new();
        if channel.loss_rate() > 0.0 {
            ops.push((true, channel.loss_rate().sqrt()));
        }
        if channel.absorption_rate() > 0.0 {
            ops.push((false, channel.absorption_rate().sqrt()));
        }
        Ok(Self {
            spec,
            mech,
            ops,
            form: DriftForm::Standard,
            gamma: channel.gamma,
            nbar: channel.nbar,
        })
    }

    /// <d + d^dag> on the ray through `v`.
    fn quadrature(&self, v: &[C64], scratch: &mut [C64]) -> f64 {
        scratch.iter_mut().for_each(|c| *c = C64::ZERO);
        acc_lower(&self.spec.basis, self.mech, v, C64::ONE, scratch);
        let mut dot = C64::ZERO;
        let mut nn = 0.0;
        for (a, b) in v.iter().zip(scratch.iter()) {
            dot += a.conj() * b;
            nn += a.norm_sqr();
        }
        if nn == 0.0 {
            0.0
        } else {
            2.0 * dot.re / nn
        }
    }

    /// out = drift a(v, t); `scratch` is clobbered.
    fn drift(&self, v: &[C64], t: f64, out: &mut [C64], scratch: &mut [C64]) {
        out.iter_mut().for_each(|c| *c = C64::ZERO);
        self.spec
            .acc_hamiltonian(t, v, C64::new(0.0, -1.0), out);
        if self.ops.is_empty() {
            return;
        }
        let basis = &self.spec.basis;
        match self.form {
            DriftForm::Standard => {
                let q = self.quadrature(v, scratch);
                let mut scalar = 0.0;
                for &(is_lower, s) in &self.ops {
                    let m = s * q;
                    // -1/2 L^dag L
                    if is_lower {
                        acc_number(basis, self.mech, v, C64::new(-0.5 * s * s, 0.0), out);
                    } else {
                        // d d^dag = N + 1
                        acc_number(basis, self.mech, v, C64::new(-0.5 * s * s, 0.0), out);
                        scalar += -0.5 * s * s;
                    }
                    // + (m/2) L
                    if is_lower {
                        acc_lower(basis, self.mech, v, C64::new(0.5 * m * s, 0.0), out);
                    } else {
                        acc_raise(basis, self.mech, v, C64::new(0.5 * m * s, 0.0), out);
                    }
                    // - m^2 / 8
                    scalar += -m * m / 8.0;
                }
                axpy(out, C64::new(scalar, 0.0), v);
            }
            DriftForm::PaperPrinted => {
                let q = self.quadrature(v, scratch);
                let g = self.gamma * (2.0 * self.nbar + 1.0);
                acc_number(basis, self.mech, v, C64::new(-0.5 * g, 0.0), out);
                acc_lower(basis, self.mech, v, C64::new(-2.0 * g * q, 0.0), out);
            }
        }
    }

    /// out = diffusion b_k(v).
    fn diffusion(&self, k: usize, v: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        out.iter_mut().for_each(|c| *c = C64::ZERO);
        let basis = &self.spec.basis;
        let (is_lower, s) = self.ops[k];
        match self.form {
            DriftForm::Standard => {
                let q = self.quadrature(v, scratch);
                let m = s * q;
                if is_lower {
                    acc_lower(basis, self.mech, v, C64::new(s, 0.0), out);
                } else {
                    acc_raise(basis, self.mech, v, C64::new(s, 0.0), out);
                }
                axpy(out, C64::new(-0.5 * m, 0.0), v);
            }
            DriftForm::PaperPrinted => {
                // As printed: d sqrt(gamma nbar) dW_d + d^dag sqrt(gamma (nbar+1)) dW_dd.
                // Rate amplitudes are swapped relative to the channel list, so
                // rebuild them from gamma and nbar here.
                if is_lower {
                    let amp = (self.gamma * self.nbar).sqrt();
                    acc_lower(basis, self.mech, v, C64::new(amp, 0.0), out);
                } else {
                    let amp = (self.gamma * (self.nbar + 1.0)).sqrt();
                    acc_raise(basis, self.mech, v, C64::new(amp, 0.0), out);
                }
            }
        }
    }
}

/// Workspace buffers reused across steps.
struct Buffers {
    a0: Vec<C64>,
    abar: Vec<C64>,
    ybar: Vec<C64>,
    b0: [Vec<C64>; 2],
    support: Vec<C64>,
    bp: Vec<C64>,
    bm: Vec<C64>,
    scratch: Vec<C64>,
    next: Vec<C64>,
}

impl Buffers {
    fn new(dim: usize) -> Self {
        let z = || vec![C64::ZERO; dim];
        Self {
            a0: z(),
            abar: z(),
            ybar: z(),
            b0: [z(), z()],
            support: z(),
            bp: z(),
            bm: z(),
            scratch: z(),
            next: z(),
        }
    }
}

/// Advance one step and renormalize. Returns the pre-normalization norm.
fn platen_step(
    engine: &Engine<'_>,
    state: &mut Vec<C64>,
    t: f64,
    dt: f64,
    noise: &StepNoise,
    buf: &mut Buffers,
) -> f64 {
    let m = engine.ops.len();
    let sq = dt.sqrt();
    let dw = [noise.dw_loss, noise.dw_absorb];

    engine.drift(state, t, &mut buf.a0, &mut buf.scratch);
    for j in 0..m {
        let (b0_head, b0_tail) = buf.b0.split_at_mut(1);
        let b0j = if j == 0 { &mut b0_head[0] } else { &mut b0_tail[0] };
        engine.diffusion(j, state, b0j, &mut buf.scratch);
    }

    // ybar = y + a dt + sum_j b_j dW_j
    buf.ybar.copy_from_slice(state);
    axpy(&mut buf.ybar, C64::new(dt, 0.0), &buf.a0);
    for j in 0..m {
        axpy(&mut buf.ybar, C64::new(dw[j], 0.0), &buf.b0[j]);
    }

    // next = y + (a(y) + a(ybar)) dt / 2
    engine.drift(&buf.ybar, t + dt, &mut buf.abar, &mut buf.scratch);
    buf.next.copy_from_slice(state);
    axpy(&mut buf.next, C64::new(0.5 * dt, 0.0), &buf.a0);
    axpy(&mut buf.next, C64::new(0.5 * dt, 0.0), &buf.abar);

    for j in 0..m {
        // R+- = y + a dt +- b_j sqrt(dt)
        for sign in [1.0f64, -1.0] {
            buf.support.copy_from_slice(state);
            axpy(&mut buf.support, C64::new(dt, 0.0), &buf.a0);
            axpy(&mut buf.support, C64::new(sign * sq, 0.0), &buf.b0[j]);
            if sign > 0.0 {
                engine.diffusion(j, &buf.support, &mut buf.bp, &mut buf.scratch);
            } else {
                engine.diffusion(j, &buf.support, &mut buf.bm, &mut buf.scratch);
            }
        }
        let c_sum = 0.25 * dw[j];
        let c_diff = 0.25 * (dw[j] * dw[j] - dt) / sq;
        axpy(&mut buf.next, C64::new(c_sum + c_diff, 0.0), &buf.bp);
        axpy(&mut buf.next, C64::new(c_sum - c_diff, 0.0), &buf.bm);
        axpy(&mut buf.next, C64::new(2.0 * c_sum, 0.0), &buf.b0[j]);

        // Cross terms: U+- = y +- b_r sqrt(dt), r != j.
        for r in 0..m {
            if r == j {
                continue;
            }
            for sign in [1.0f64, -1.0] {
                buf.support.copy_from_slice(state);
                axpy(&mut buf.support, C64::new(sign * sq, 0.0), &buf.b0[r]);
                if sign > 0.0 {
                    engine.diffusion(j, &buf.support, &mut buf.bp, &mut buf.scratch);
                } else {
                    engine.diffusion(j, &buf.support, &mut buf.bm, &mut buf.scratch);
                }
            }
            // V antisymmetric two-point substitute, V_jj = -dt.
            let v_rj = if r < j { noise.levy } else { -noise.levy };
            let c_sum = 0.25 * dw[j];
            let c_diff = 0.25 * (dw[j] * dw[r] + v_rj) / sq;
            axpy(&mut buf.next, C64::new(c_sum + c_diff, 0.0), &buf.bp);
            axpy(&mut buf.next, C64::new(c_sum - c_diff, 0.0), &buf.bm);
            axpy(&mut buf.next, C64::new(-2.0 * c_sum, 0.0), &buf.b0[j]);
        }
    }

    let prenorm = norm_sqr(&buf.next).sqrt();
    if prenorm > 0.0 {
        let inv = 1.0 / prenorm;
        for (s, n) in state.iter_mut().zip(&buf.next) {
            *s = n * inv;
        }
    }
    prenorm
}

/// Step-size guard limit on dt * (max coupling + gamma (2 nbar + 1) cutoff).
pub const STEP_GUARD_LIMIT: f64 = 0.1;

fn check_step_guard(spec: &HamiltonianSpec, channel: &NoiseChannel, dt: f64) -> Result<()> {
    let mech = channel.mode.index(&spec.basis)?;
    let cutoff = spec.basis.cutoff(mech) as f64;
    let product =
        dt * (spec.schedule.max_coupling() + channel.gamma * (2.0 * channel.nbar + 1.0) * cutoff);
    if product > STEP_GUARD_LIMIT {
        return Err(SimError::StepGuard {
            product,
            limit: STEP_GUARD_LIMIT,
        });
    }
    Ok(())
}

/// Advance `state` by one step of the stochastic scheme, renormalizing.
/// Exposed for direct tests of the stepper; trajectory runs should use
/// [`integrate_trajectory`].
pub fn qsd_step(
    state: &StateVector,
    spec: &HamiltonianSpec,
    channel: &NoiseChannel,
    form: DriftForm,
    t: f64,
    dt: f64,
    noise: &StepNoise,
) -> Result<(StateVector, f64)> {
    check_step_guard(spec, channel, dt)?;
    let mut engine = Engine::new(spec, channel)?;
    engine.form = form;
    let nrm = state.norm();
    if (nrm - 1.0).abs() > 1e-8 {
        return Err(SimError::Domain(format!(
            "qsd_step requires a normalized state (norm {nrm})"
        )));
    }
    let mut buf = Buffers::new(state.basis.total_dim());
    let mut amps = state.amplitudes.clone();
    let prenorm = platen_step(&engine, &mut amps, t, dt, noise, &mut buf);
    if !(0.5..=1.5).contains(&prenorm) {
        return Err(SimError::StepSize {
            t,
            seed: 0,
            norm: prenorm,
        });
    }
    Ok((
        StateVector {
            basis: state.basis.clone(),
            amplitudes: amps,
        },
        prenorm,
    ))
}

fn record_sample(
    spec: &HamiltonianSpec,
    amps: &[C64],
    t: f64,
    norm_drift: f64,
) -> PopulationSample {
    let state = StateVector {
        basis: spec.basis.clone(),
        amplitudes: amps.to_vec(),
    };
    let n_optical = if spec.basis.num_modes() > 2 {
        Some(expectation_number(Mode::Optical, &state).unwrap())
    } else {
        None
    };
    PopulationSample {
        t,
        n_microwave: expectation_number(Mode::Microwave, &state).unwrap(),
        n_mechanical: expectation_number(Mode::Mechanical, &state).unwrap(),
        n_optical,
        norm_drift,
    }
}

fn top_level_all_modes(spec: &HamiltonianSpec, amps: &[C64]) -> f64 {
    let state = StateVector {
        basis: spec.basis.clone(),
        amplitudes: amps.to_vec(),
    };
    (0..spec.basis.num_modes())
        .map(|m| {
            let mode = match m {
                0 => Mode::Microwave,
                1 => Mode::Mechanical,
                _ => Mode::Optical,
            };
            state.top_level_population(mode).unwrap()
        })
        .fold(0.0, f64::max)
}

/// Integrate one seeded trajectory over the full schedule.
///
/// Deterministic for a fixed seed. Wiener increments are Gaussian with
/// variance dt. Record times must be sorted and lie within the schedule.
pub fn integrate_trajectory(
    initial: &StateVector,
    spec: &HamiltonianSpec,
    channel: &NoiseChannel,
    opts: &IntegratorOptions,
    seed: u64,
    record_times: &[f64],
) -> Result<TrajectoryResult> {
    spec.validate()?;
    let sched = &spec.schedule;
    for w in record_times.windows(2) {
        if w[1] < w[0] {
            return Err(SimError::Domain("record times not sorted".into()));
        }
    }
    if let (Some(&first), Some(&last)) = (record_times.first(), record_times.last()) {
        if first < sched.t_start - 1e-9 || last > sched.t_end + 1e-9 {
            return Err(SimError::OutsideSchedule {
                t: if first < sched.t_start { first } else { last },
                t_start: sched.t_start,
                t_end: sched.t_end,
            });
        }
    }

    let halvings = if opts.auto_halve { 4 } else { 0 };
    let mut dt = opts.dt;
    let mut last_err = None;
    for _ in 0..=halvings {
        match run_once(initial, spec, channel, opts.drift_form, dt, seed, record_times) {
            Ok(r) => return Ok(r),
            Err(e @ (SimError::StepSize { .. } | SimError::StepGuard { .. })) => {
                last_err = Some(e);
                dt /= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

fn run_once(
    initial: &StateVector,
    spec: &HamiltonianSpec,
    channel: &NoiseChannel,
    form: DriftForm,
    dt: f64,
    seed: u64,
    record_times: &[f64],
) -> Result<TrajectoryResult> {
    check_step_guard(spec, channel, dt)?;
    let mut engine = Engine::new(spec, channel)?;
    engine.form = form;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = Buffers::new(spec.basis.total_dim());
    let mut amps = initial.amplitudes.clone();
    let mut t = spec.schedule.t_start;
    let mut records = Vec::with_capacity(record_times.len());
    let mut rec_iter = record_times.iter().copied().peekable();
    let mut max_dev: f64 = 0.0;
    let mut max_top: f64 = 0.0;
    let mut last_drift = 0.0;
    let t_end = spec.schedule.t_end;
    let stochastic = !engine.ops.is_empty();

    // Emit any records at or before the start.
    while let Some(&rt) = rec_iter.peek() {
        if rt <= t + 1e-12 {
            records.push(record_sample(spec, &amps, rt, last_drift));
            max_top = max_top.max(top_level_all_modes(spec, &amps));
            rec_iter.next();
        } else {
            break;
        }
    }

    while t < t_end - 1e-12 {
        // Land exactly on the next record time and the schedule end.
        let mut target = t + dt;
        if let Some(&rt) = rec_iter.peek() {
            target = target.min(rt);
        }
        target = target.min(t_end);
        let step = target - t;
        let noise = if stochastic {
            StepNoise::sample(&mut rng, step)
        } else {
            StepNoise::zero()
        };
        let prenorm = platen_step(&engine, &mut amps, t, step, &noise, &mut buf);
        if !(0.5..=1.5).contains(&prenorm) {
            return Err(SimError::StepSize {
                t,
                seed,
                norm: prenorm,
            });
        }
        last_drift = prenorm - 1.0;
        max_dev = max_dev.max(last_drift.abs());
        t = target;
        while let Some(&rt) = rec_iter.peek() {
            if rt <= t + 1e-12 {
                records.push(record_sample(spec, &amps, rt, last_drift));
                max_top = max_top.max(top_level_all_modes(spec, &amps));
                rec_iter.next();
            } else {
                break;
            }
        }
    }
    max_top = max_top.max(top_level_all_modes(spec, &amps));

    Ok(TrajectoryResult {
        seed,
        final_state: StateVector {
            basis: spec.basis.clone(),
            amplitudes: amps,
        },
        records,
        max_norm_deviation: max_dev,
        max_top_level: max_top,
        dt_used: dt,
    })
}
