//! Classical steady state of the pumped system, branch selection, and the
//! linearized couplings and shifted detunings used by the quantum modules.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Result, SimError};

/// Pump and cavity parameters. Cavity linewidths enter only here; the quantum
/// evolution takes gamma_o = gamma_mu = 0.
#[derive(Debug, Clone, Copy)]
pub struct PumpParams {
    pub delta_o: f64,
    pub delta_mu: f64,
    pub kappa_o: f64,
    pub kappa_mu: f64,
    /// Bare optomechanical coupling (rad/s per meter).
    pub g_o: f64,
    /// Bare electromechanical coupling (rad/s per meter).
    pub g_mu: f64,
    /// Zero-point length (meters).
    pub x_zp: f64,
    pub omega_m: f64,
    pub drive_o: C64,
    pub drive_mu: C64,
}

/// A stationary point of the classical field equations.
#[derive(Debug, Clone, Copy)]
pub struct SteadyState {
    pub alpha: C64,
    pub beta: C64,
    /// Real mechanical displacement amplitude.
    pub delta: f64,
    /// Max norm of the three stationarity equations at the root.
    pub residual: f64,
}

/// Effective couplings and shifted detunings for the linearized model.
#[derive(Debug, Clone, Copy)]
pub struct LinearizedParams {
    pub omega_o: f64,
    pub omega_mu: f64,
    pub delta_tilde_o: f64,
    pub delta_tilde_mu: f64,
    pub omega_m: f64,
    /// True iff both shifted detunings sit on the red sideband within tol.
    pub resonant: bool,
}

/// Omega = g * X_ZP * field, with the steady-state field taken real.
pub fn effective_coupling(g: f64, x_zp: f64, field: f64) -> f64 {
    g * x_zp * field
}

/// Radiation-pressure-shifted detuning Delta - X_ZP * delta_s * g.
pub fn shifted_detuning(delta: f64, g: f64, x_zp: f64, delta_s: f64) -> f64 {
    delta - x_zp * delta_s * g
}

fn cavity_field(drive: C64, detuning: f64, kappa: f64, g: f64, x_zp: f64, delta: f64) -> C64 {
    // Stationarity: (Delta - i kappa/2) a - (g X/2)(2 delta) a + A = 0.
    -drive / C64::new(detuning - g * x_zp * delta, -kappa / 2.0)
}

impl PumpParams {
    fn fields_at(&self, delta: f64) -> (C64, C64) {
        (
            cavity_field(self.drive_o, self.delta_o, self.kappa_o, self.g_o, self.x_zp, delta),
            cavity_field(
                self.drive_mu,
                self.delta_mu,
                self.kappa_mu,
                self.g_mu,
                self.x_zp,
                delta,
            ),
        )
    }

    /// Radiation-pressure displacement implied by the fields at `delta`.
    fn implied_delta(&self, delta: f64) -> f64 {
        let (a, b) = self.fields_at(delta);
        self.x_zp * (self.g_o * a.norm_sqr() + self.g_mu * b.norm_sqr()) / (2.0 * self.omega_m)
    }

    /// Residuals of the three stationarity equations.
    fn residual(&self, alpha: C64, beta: C64, delta: f64) -> f64 {
        let r1 = C64::new(self.delta_o - self.g_o * self.x_zp * delta, -self.kappa_o / 2.0) * alpha
            + self.drive_o;
        let r2 = C64::new(
            self.delta_mu - self.g_mu * self.x_zp * delta,
            -self.kappa_mu / 2.0,
        ) * beta
            + self.drive_mu;
        let r3 = self.omega_m * delta
            - self.x_zp / 2.0 * (self.g_o * alpha.norm_sqr() + self.g_mu * beta.norm_sqr());
        r1.norm().max(r2.norm()).max(r3.abs())
    }

    fn residual_scale(&self) -> f64 {
        self.drive_o
            .norm()
            .max(self.drive_mu.norm())
            .max(self.omega_m)
    }

    /// Time derivative of (Re a, Im a, Re b, Im b, Re d, Im d).
    fn vector_field(&self, y: &[f64; 6]) -> [f64; 6] {
        let a = C64::new(y[0], y[1]);
        let b = C64::new(y[2], y[3]);
        let d = C64::new(y[4], y[5]);
        let x2 = self.x_zp * (d.re * 2.0) / 2.0; // X_ZP (d + d*)/2
        let da = C64::new(0.0, -1.0)
            * (C64::new(self.delta_o, -self.kappa_o / 2.0) * a - self.g_o * x2 * a + self.drive_o);
        let db = C64::new(0.0, -1.0)
            * (C64::new(self.delta_mu, -self.kappa_mu / 2.0) * b - self.g_mu * x2 * b
                + self.drive_mu);
        let dd = C64::new(0.0, -1.0)
            * (self.omega_m * d
                - C64::new(
                    self.x_zp / 2.0 * (self.g_o * a.norm_sqr() + self.g_mu * b.norm_sqr()),
                    0.0,
                ));
        [da.re, da.im, db.re, db.im, dd.re, dd.im]
    }

    /// All eigenvalue real parts of the Jacobian at this point are <= tol.
    pub fn is_stable(&self, alpha: C64, beta: C64, delta: f64) -> bool {
        let y0 = [alpha.re, alpha.im, beta.re, beta.im, delta, 0.0];
        let scale = self.residual_scale().max(1.0);
        let h = 1e-7 * scale.max(delta.abs()).max(alpha.norm()).max(beta.norm());
        let mut jac = DMatrix::zeros(6, 6);
        for j in 0..6 {
            let mut yp = y0;
            let mut ym = y0;
            yp[j] += h;
            ym[j] -= h;
            let fp = self.vector_field(&yp);
            let fm = self.vector_field(&ym);
            for i in 0..6 {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let tol = 1e-8 * self.omega_m.max(1.0);
        jac.complex_eigenvalues().iter().all(|l| l.re <= tol)
    }
}

const SCAN_POINTS: usize = 4000;
const MAX_NEWTON_ITERS: usize = 200;

/// Solve the classical steady state and return the stable root on the
/// high-intensity branch (largest |alpha|^2 + |beta|^2).
///
/// The reduced cubic system is scanned over real mechanical displacements,
/// each bracketed root is polished by bisection plus damped Newton, and every
/// candidate is stability-tested through the Jacobian of the full six-
/// dimensional classical flow.
pub fn solve_steady_state(p: &PumpParams) -> Result<SteadyState> {
    if !(p.kappa_o > 0.0 && p.kappa_mu > 0.0) {
        return Err(SimError::Domain(
            "solve_steady_state requires kappa_o, kappa_mu > 0".into(),
        ));
    }
    if !(p.omega_m > 0.0 && p.x_zp > 0.0) {
        return Err(SimError::Domain("omega_m and X_ZP must be positive".into()));
    }

    // h(delta) = delta - implied_delta(delta); roots are steady states.
    let h = |d: f64| d - p.implied_delta(d);

    // Scan bound from the uncoupled fields.
    let d0 = p.implied_delta(0.0);
    let hi = if d0 == 0.0 { 1.0 } else { 4.0 * d0.abs().max(1e-300) };
    let lo = if d0 >= 0.0 { 0.0 } else { -4.0 * d0.abs() };

    let mut roots: Vec<f64> = Vec::new();
    let push_root = |d: f64, roots: &mut Vec<f64>| {
        if roots.iter().all(|&r| (r - d).abs() > 1e-9 * (1.0 + d.abs())) {
            roots.push(d);
        }
    };

    let mut prev_d = lo;
    let mut prev_h = h(lo);
    if prev_h == 0.0 {
        push_root(lo, &mut roots);
    }
    for k in 1..=SCAN_POINTS {
        let d = lo + (hi - lo) * k as f64 / SCAN_POINTS as f64;
        let hd = h(d);
        if hd == 0.0 {
            push_root(d, &mut roots);
        } else if prev_h.signum() != hd.signum() {
            // Bracketed: bisect then polish with damped Newton.
            let (mut a, mut b) = (prev_d, d);
            let (mut ha, _) = (prev_h, hd);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let hm = h(m);
                if hm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if ha.signum() == hm.signum() {
                    a = m;
                    ha = hm;
                } else {
                    b = m;
                }
            }
            let mut root = 0.5 * (a + b);
            let eps = 1e-8 * (1.0 + root.abs());
            for _ in 0..MAX_NEWTON_ITERS {
                let f = h(root);
                let df = (h(root + eps) - h(root - eps)) / (2.0 * eps);
                if df == 0.0 {
                    break;
                }
                let mut step = f / df;
                // Damp steps that would escape the bracket scale.
                let cap = 0.5 * (hi - lo) / SCAN_POINTS as f64 * 10.0 + eps;
                step = step.clamp(-cap, cap);
                root -= step;
                if step.abs() < 1e-16 * (1.0 + root.abs()) {
                    break;
                }
            }
            push_root(root, &mut roots);
        }
        prev_d = d;
        prev_h = hd;
    }

    if roots.is_empty() {
        return Err(SimError::IterationLimit(
            "no steady-state root located in the scan window".into(),
        ));
    }

    let tol = 1e-10 * p.residual_scale();
    let mut all_candidates = Vec::new();
    let mut best: Option<(f64, SteadyState)> = None;
    for &d in &roots {
        let (a, b) = p.fields_at(d);
        let res = p.residual(a, b, d);
        all_candidates.push((a.norm(), b.norm(), d));
        if res > tol {
            continue;
        }
        if !p.is_stable(a, b, d) {
            continue;
        }
        let intensity = a.norm_sqr() + b.norm_sqr();
        let ss = SteadyState {
            alpha: a,
            beta: b,
            delta: d,
            residual: res,
        };
        match &best {
            Some((i, _)) if *i >= intensity => {}
            _ => best = Some((intensity, ss)),
        }
    }

    best.map(|(_, ss)| ss).ok_or(SimError::Bistability {
        roots: all_candidates,
    })
}

/// Rotate the pump phases away (alpha_s, beta_s real and nonnegative) and
/// emit the linearized couplings and shifted detunings.
pub fn linearize(p: &PumpParams, ss: &SteadyState) -> LinearizedParams {
    let alpha = ss.alpha.norm();
    let beta = ss.beta.norm();
    let omega_o = effective_coupling(p.g_o, p.x_zp, alpha);
    let omega_mu = effective_coupling(p.g_mu, p.x_zp, beta);
    let dto = shifted_detuning(p.delta_o, p.g_o, p.x_zp, ss.delta);
    let dtm = shifted_detuning(p.delta_mu, p.g_mu, p.x_zp, ss.delta);
    let tol = 1e-6 * p.omega_m;
    LinearizedParams {
        omega_o,
        omega_mu,
        delta_tilde_o: dto,
        delta_tilde_mu: dtm,
        omega_m: p.omega_m,
        resonant: (dto - p.omega_m).abs() <= tol && (dtm - p.omega_m).abs() <= tol,
    }
}
