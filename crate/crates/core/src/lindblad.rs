//! Dense Lindblad master-equation oracle.
//!
//! Ground truth for the trajectory ensembles: RK4 over the full density
//! matrix with jump operators sqrt(gamma (nbar+1)) d and sqrt(gamma nbar)
//! d^dag. Dense matrices only, so the Hilbert-space dimension is capped.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Result, SimError};
use crate::fock::{embed_operator, lower_matrix, DensityMatrix};
use crate::pulse::Channel;
use crate::qsd::{HamiltonianSpec, NoiseChannel};

/// Largest total dimension the dense solver accepts.
pub const LINDBLAD_DIM_CAP: usize = 256;

struct DenseOps {
    h_em: DMatrix<C64>,
    h_om: Option<DMatrix<C64>>,
    h_free: Option<DMatrix<C64>>,
    jumps: Vec<DMatrix<C64>>,
}

fn build_ops(spec: &HamiltonianSpec, channel: &NoiseChannel) -> Result<DenseOps> {
    let basis = &spec.basis;
    let dim = basis.total_dim();
    if dim > LINDBLAD_DIM_CAP {
        return Err(SimError::DimensionCap(dim, LINDBLAD_DIM_CAP));
    }
    let lowers: Vec<DMatrix<C64>> = (0..basis.num_modes())
        .map(|m| embed_operator(basis, m, &lower_matrix(basis.cutoff(m))))
        .collect();
    let bs = |x: usize, y: usize| -> DMatrix<C64> {
        lowers[x].adjoint() * &lowers[y] + lowers[y].adjoint() * &lowers[x]
    };
    // H = -(Omega_mu/2)(b^dag d + b d^dag) - (Omega_o/2)(a^dag d + a d^dag),
    // with the time-dependent prefactors applied per step.
    let h_em = bs(0, 1) * C64::new(-0.5, 0.0);
    let h_om = if basis.num_modes() > 2 {
        Some(bs(2, 1) * C64::new(-0.5, 0.0))
    } else {
        None
    };
    let h_free = if spec.interaction_frame {
        None
    } else {
        let mut n_tot = DMatrix::zeros(dim, dim);
        for l in &lowers {
            n_tot += l.adjoint() * l;
        }
        Some(n_tot * C64::new(spec.omega_m, 0.0))
    };
    let mech = channel.mode.index(basis)?;
    let mut jumps = Vec::new();
    if channel.loss_rate() > 0.0 {
        jumps.push(&lowers[mech] * C64::new(channel.loss_rate().sqrt(), 0.0));
    }
    if channel.absorption_rate() > 0.0 {
        jumps.push(lowers[mech].adjoint() * C64::new(channel.absorption_rate().sqrt(), 0.0));
    }
    Ok(DenseOps {
        h_em,
        h_om,
        h_free,
        jumps,
    })
}

fn liouvillian(ops: &DenseOps, spec: &HamiltonianSpec, t: f64, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let t = t.clamp(spec.schedule.t_start, spec.schedule.t_end);
    let omega_mu = spec.schedule.coupling_unchecked(Channel::ElectroMechanical, t);
    let mut h = &ops.h_em * C64::new(omega_mu, 0.0);
    if let Some(h_om) = &ops.h_om {
        let omega_o = spec.schedule.coupling_unchecked(Channel::OptoMechanical, t);
        h += h_om * C64::new(omega_o, 0.0);
    }
    if let Some(h_free) = &ops.h_free {
        h += h_free;
    }
    let comm = &h * rho - rho * &h;
    let mut out = comm * C64::new(0.0, -1.0);
    for l in &ops.jumps {
        let ldag = l.adjoint();
        let ldl = &ldag * l;
        out += l * rho * &ldag;
        out -= (&ldl * rho + rho * &ldl) * C64::new(0.5, 0.0);
    }
    out
}

/// Evolve `rho0` over the full schedule window with fixed-step RK4.
pub fn lindblad_evolve(
    rho0: &DensityMatrix,
    spec: &HamiltonianSpec,
    channel: &NoiseChannel,
    dt: f64,
) -> Result<DensityMatrix> {
    lindblad_evolve_until(rho0, spec, channel, dt, spec.schedule.t_end)
}

/// Evolve `rho0` from the schedule start to `t_final`.
pub fn lindblad_evolve_until(
    rho0: &DensityMatrix,
    spec: &HamiltonianSpec,
    channel: &NoiseChannel,
    dt: f64,
    t_final: f64,
) -> Result<DensityMatrix> {
    spec.validate()?;
    if rho0.dim() != spec.basis.total_dim() {
        return Err(SimError::Metric(format!(
            "density dimension {} != basis dimension {}",
            rho0.dim(),
            spec.basis.total_dim()
        )));
    }
    if !(dt > 0.0) {
        return Err(SimError::Domain(format!("dt {dt} must be positive")));
    }
    let ops = build_ops(spec, channel)?;
    let t0 = spec.schedule.t_start;
    let duration = t_final - t0;
    if duration < 0.0 {
        return Err(SimError::OutsideSchedule {
            t: t_final,
            t_start: t0,
            t_end: spec.schedule.t_end,
        });
    }
    let steps = (duration / dt).ceil().max(1.0) as usize;
    let h = duration / steps as f64;
    let mut rho = rho0.mat.clone();
    let mut t = t0;
    for _ in 0..steps {
        let k1 = liouvillian(&ops, spec, t, &rho);
        let k2 = liouvillian(&ops, spec, t + h / 2.0, &(&rho + &k1 * C64::new(h / 2.0, 0.0)));
        let k3 = liouvillian(&ops, spec, t + h / 2.0, &(&rho + &k2 * C64::new(h / 2.0, 0.0)));
        let k4 = liouvillian(&ops, spec, t + h, &(&rho + &k3 * C64::new(h, 0.0)));
        rho += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
            * C64::new(h / 6.0, 0.0);
        t += h;
    }
    Ok(DensityMatrix::from_matrix(rho))
}
