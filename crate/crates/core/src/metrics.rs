//! Fidelity metrics and the analytic reference formulas.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Result, SimError};
use crate::fock::{DensityMatrix, StateVector};

const PSD_TOLERANCE: f64 = 1e-8;
const EIGENVALUE_CLAMP: f64 = 1e-10;

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// V f(lambda) V^dag of the Hermitian part, clamping eigenvalues below zero.
fn hermitian_function(
    m: &DMatrix<C64>,
    f: impl Fn(f64) -> f64,
) -> Result<DMatrix<C64>> {
    let herm = hermitian_part(m);
    let eig = SymmetricEigen::new(herm);
    if let Some(&worst) = eig
        .eigenvalues
        .iter()
        .filter(|&&l| l < -PSD_TOLERANCE)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
    {
        return Err(SimError::Metric(format!(
            "matrix not positive semidefinite: eigenvalue {worst}"
        )));
    }
    let dim = m.nrows();
    let mut out = DMatrix::zeros(dim, dim);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let fl = f(if l < EIGENVALUE_CLAMP { 0.0 } else { l });
        if fl == 0.0 {
            continue;
        }
        for i in 0..dim {
            for j in 0..dim {
                out[(i, j)] += v[i] * v[j].conj() * C64::new(fl, 0.0);
            }
        }
    }
    Ok(out)
}

fn validate_density(rho: &DensityMatrix) -> Result<()> {
    if rho.hermiticity_defect() > 1e-8 {
        return Err(SimError::Metric(format!(
            "density matrix not Hermitian (defect {})",
            rho.hermiticity_defect()
        )));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-6 || tr.im.abs() > 1e-8 {
        return Err(SimError::Metric(format!("trace {} != 1", tr)));
    }
    Ok(())
}

/// Uhlmann fidelity F(rho_i, rho_f) = [Tr sqrt(sqrt(rho_i) rho_f sqrt(rho_i))]^2.
pub fn uhlmann_fidelity(rho_i: &DensityMatrix, rho_f: &DensityMatrix) -> Result<f64> {
    if rho_i.dim() != rho_f.dim() {
        return Err(SimError::Metric(format!(
            "dimension mismatch {} vs {}",
            rho_i.dim(),
            rho_f.dim()
        )));
    }
    validate_density(rho_i)?;
    validate_density(rho_f)?;
    let sqrt_i = hermitian_function(&rho_i.mat, f64::sqrt)?;
    let inner = &sqrt_i * &rho_f.mat * &sqrt_i;
    let sqrt_inner = hermitian_function(&inner, f64::sqrt)?;
    let tr: f64 = (0..sqrt_inner.nrows()).map(|i| sqrt_inner[(i, i)].re).sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// Fidelity against a pure single-mode reference: <phi| rho |phi>.
/// `rho` is cropped or padded to the reference dimension first.
pub fn fidelity_with_pure(reference: &StateVector, rho: &DensityMatrix) -> f64 {
    let dim = reference.basis.total_dim();
    let rho = rho.resized(dim);
    let mut acc = C64::ZERO;
    for i in 0..dim {
        for j in 0..dim {
            acc += reference.amplitudes[i].conj() * rho.mat[(i, j)] * reference.amplitudes[j];
        }
    }
    acc.re.clamp(0.0, 1.0)
}

/// Trace distance (1/2) ||rho - sigma||_1.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(SimError::Metric(format!(
            "dimension mismatch {} vs {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let diff = hermitian_part(&(&rho.mat - &sigma.mat));
    let eig = SymmetricEigen::new(diff);
    Ok(0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}

/// Zero-temperature coherent-memory fidelity for decay only between the
/// pulses: exp(-|alpha|^2 (1 - exp(-w dT / 2Q))^2).
pub fn analytic_coherent_fidelity_pure(
    alpha_abs: f64,
    omega_m: f64,
    delta_t: f64,
    q_m: f64,
) -> f64 {
    let x = if q_m.is_infinite() {
        0.0
    } else {
        omega_m * delta_t / (2.0 * q_m)
    };
    (-(alpha_abs * alpha_abs) * (1.0 - (-x).exp()).powi(2)).exp()
}

/// Thermal-saturation overlap F(0) = exp(-|alpha|^2/(1+nbar)) / (1+nbar).
pub fn thermal_saturation_fidelity(alpha_abs: f64, nbar: f64) -> f64 {
    (-(alpha_abs * alpha_abs) / (1.0 + nbar)).exp() / (1.0 + nbar)
}

/// Saturated coherent-memory fidelity F(Q) = F(0) + (1 - F(0)) F_pure(Q).
pub fn analytic_coherent_fidelity(
    alpha_abs: f64,
    omega_m: f64,
    delta_t: f64,
    q_m: f64,
    nbar: f64,
) -> f64 {
    let f0 = thermal_saturation_fidelity(alpha_abs, nbar);
    f0 + (1.0 - f0) * analytic_coherent_fidelity_pure(alpha_abs, omega_m, delta_t, q_m)
}

/// Dimensionless storage-time point under which fidelity curves collapse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub zeta_o: f64,
    pub zeta: f64,
    pub omega_m: f64,
    pub delta_t: f64,
    pub omega_mu: f64,
    pub q_m: f64,
    pub nbar: f64,
}

/// zeta_o = omega_m (dT - pi/Omega_mu) / Q_m, zeta = zeta_o * nbar.
/// The pi-pulse duration pi/Omega_mu is subtracted so zeta reflects the
/// actual storage time.
pub fn zeta(omega_m: f64, delta_t: f64, omega_mu: f64, q_m: f64, nbar: f64) -> Result<ScalingPoint> {
    let stored = delta_t - std::f64::consts::PI / omega_mu;
    if stored < 0.0 {
        return Err(SimError::Domain(format!(
            "delta_t {delta_t} shorter than the pi-pulse duration {}",
            std::f64::consts::PI / omega_mu
        )));
    }
    let zeta_o = if q_m.is_infinite() {
        0.0
    } else {
        omega_m * stored / q_m
    };
    Ok(ScalingPoint {
        zeta_o,
        zeta: zeta_o * nbar,
        omega_m,
        delta_t,
        omega_mu,
        q_m,
        nbar,
    })
}
