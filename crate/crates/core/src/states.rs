//! Input-state constructors and thermal sampling.

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Result, SimError};
use crate::fock::{acc_lower, acc_raise, BasisDescriptor, StateVector};

/// Norm that must survive truncation before renormalization.
const MIN_TRUNCATED_NORM: f64 = 1.0 - 1e-6;

/// Input states studied for memory and transduction.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputStateSpec {
    Coherent { alpha_re: f64, alpha_im: f64 },
    Squeezed {
        alpha_re: f64,
        alpha_im: f64,
        xi_re: f64,
        xi_im: f64,
    },
    Cat { alpha_re: f64, alpha_im: f64 },
    FockSuperposition,
}

impl InputStateSpec {
    pub fn build(&self, cutoff: usize) -> Result<StateVector> {
        match *self {
            InputStateSpec::Coherent { alpha_re, alpha_im } => {
                coherent_state(C64::new(alpha_re, alpha_im), cutoff)
            }
            InputStateSpec::Squeezed {
                alpha_re,
                alpha_im,
                xi_re,
                xi_im,
            } => squeezed_coherent_state(
                C64::new(alpha_re, alpha_im),
                C64::new(xi_re, xi_im),
                cutoff,
            ),
            InputStateSpec::Cat { alpha_re, alpha_im } => {
                cat_state(C64::new(alpha_re, alpha_im), cutoff)
            }
            InputStateSpec::FockSuperposition => fock_superposition(cutoff),
        }
    }

    /// Largest Fock level carrying appreciable weight; used when sizing bases.
    pub fn max_excitation_hint(&self) -> usize {
        match *self {
            InputStateSpec::Coherent { alpha_re, alpha_im }
            | InputStateSpec::Cat { alpha_re, alpha_im } => {
                let n = alpha_re * alpha_re + alpha_im * alpha_im;
                (4.0 * (1.0 + n)).ceil() as usize
            }
            InputStateSpec::Squeezed {
                alpha_re,
                alpha_im,
                xi_re,
                xi_im,
            } => {
                let n = alpha_re * alpha_re + alpha_im * alpha_im;
                let r = (xi_re * xi_re + xi_im * xi_im).sqrt();
                (4.0 * (1.0 + n + r.sinh().powi(2))).ceil() as usize
            }
            InputStateSpec::FockSuperposition => 1,
        }
    }
}

fn single_mode(cutoff: usize) -> Result<BasisDescriptor> {
    BasisDescriptor::new(&[cutoff])
}

fn check_truncation(amps: &mut Vec<C64>, cutoff: usize) -> Result<()> {
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm < MIN_TRUNCATED_NORM {
        return Err(SimError::Truncation {
            norm,
            required: MIN_TRUNCATED_NORM,
            cutoff,
        });
    }
    let inv = 1.0 / norm;
    for a in amps.iter_mut() {
        *a *= inv;
    }
    Ok(())
}

/// Fock state |n>.
pub fn fock_state(n: usize, cutoff: usize) -> Result<StateVector> {
    if n >= cutoff {
        return Err(SimError::InvalidBasis(format!(
            "fock level {n} >= cutoff {cutoff}"
        )));
    }
    Ok(StateVector::basis_state(single_mode(cutoff)?, &[n]))
}

/// (|0> + |1>)/sqrt(2).
pub fn fock_superposition(cutoff: usize) -> Result<StateVector> {
    let mut s = StateVector::zero(single_mode(cutoff)?);
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    s.amplitudes[0] = r;
    s.amplitudes[1] = r;
    Ok(s)
}

/// Truncated coherent state, amplitudes proportional to alpha^n / sqrt(n!).
pub fn coherent_state(alpha: C64, cutoff: usize) -> Result<StateVector> {
    let basis = single_mode(cutoff)?;
    let mut amps = Vec::with_capacity(cutoff);
    let mut term = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..cutoff {
        if n > 0 {
            term *= alpha / (n as f64).sqrt();
        }
        amps.push(term);
    }
    check_truncation(&mut amps, cutoff)?;
    StateVector::from_amplitudes(basis, amps)
}

/// exp(A)|psi> by the Taylor series of the truncated generator, where
/// A = lin_raise * a^dag + lin_lower * a + quad_raise * a^dag^2 + quad_lower * a^2.
fn apply_exponential(
    state: &StateVector,
    lin_raise: C64,
    lin_lower: C64,
    quad_raise: C64,
    quad_lower: C64,
) -> StateVector {
    let basis = &state.basis;
    let dim = basis.total_dim();
    let mut out = state.amplitudes.clone();
    let mut term = state.amplitudes.clone();
    let mut scratch = vec![C64::ZERO; dim];
    for k in 1..500 {
        scratch.iter_mut().for_each(|c| *c = C64::ZERO);
        let inv_k = C64::new(1.0 / k as f64, 0.0);
        if lin_raise != C64::ZERO {
            acc_raise(basis, 0, &term, lin_raise * inv_k, &mut scratch);
        }
        if lin_lower != C64::ZERO {
            acc_lower(basis, 0, &term, lin_lower * inv_k, &mut scratch);
        }
        if quad_raise != C64::ZERO {
            let mut tmp = vec![C64::ZERO; dim];
            acc_raise(basis, 0, &term, C64::ONE, &mut tmp);
            acc_raise(basis, 0, &tmp, quad_raise * inv_k, &mut scratch);
        }
        if quad_lower != C64::ZERO {
            let mut tmp = vec![C64::ZERO; dim];
            acc_lower(basis, 0, &term, C64::ONE, &mut tmp);
            acc_lower(basis, 0, &tmp, quad_lower * inv_k, &mut scratch);
        }
        std::mem::swap(&mut term, &mut scratch);
        for (o, t) in out.iter_mut().zip(&term) {
            *o += *t;
        }
        let sz: f64 = term.iter().map(|c| c.norm_sqr()).sum();
        if sz < 1e-32 {
            break;
        }
    }
    StateVector {
        basis: basis.clone(),
        amplitudes: out,
    }
}

/// Displaced squeezed vacuum D(alpha) S(xi) |0>, built by applying the
/// operator exponentials on the truncated space and renormalizing.
pub fn squeezed_coherent_state(alpha: C64, xi: C64, cutoff: usize) -> Result<StateVector> {
    let vac = fock_state(0, cutoff)?;
    // S(xi) = exp((xi* a^2 - xi a^dag^2)/2)
    let squeezed = apply_exponential(
        &vac,
        C64::ZERO,
        C64::ZERO,
        -xi / 2.0,
        xi.conj() / 2.0,
    );
    // D(alpha) = exp(alpha a^dag - alpha* a)
    let displaced = apply_exponential(&squeezed, alpha, -alpha.conj(), C64::ZERO, C64::ZERO);
    let mut amps = displaced.amplitudes;
    check_truncation(&mut amps, cutoff)?;
    StateVector::from_amplitudes(displaced.basis, amps)
}

/// Normalized even cat state N (|alpha> + |-alpha>).
pub fn cat_state(alpha: C64, cutoff: usize) -> Result<StateVector> {
    let plus = coherent_state(alpha, cutoff)?;
    let minus = coherent_state(-alpha, cutoff)?;
    let mut amps: Vec<C64> = plus
        .amplitudes
        .iter()
        .zip(&minus.amplitudes)
        .map(|(a, b)| a + b)
        .collect();
    check_truncation(&mut amps, cutoff)?;
    StateVector::from_amplitudes(plus.basis, amps)
}

/// Draw a Fock occupation from the thermal distribution
/// P_n = nbar^n / (nbar + 1)^(n+1).
pub fn sample_thermal_fock<R: Rng + ?Sized>(nbar: f64, rng: &mut R) -> usize {
    assert!(nbar >= 0.0, "nbar must be nonnegative");
    if nbar == 0.0 {
        return 0;
    }
    // Geometric law with success probability 1/(nbar+1); inverse-CDF sampling.
    let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let ratio = nbar / (nbar + 1.0);
    (u.ln() / ratio.ln()).floor() as usize
}

/// P_n of the thermal distribution.
pub fn thermal_probability(nbar: f64, n: usize) -> f64 {
    if nbar == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    nbar.powi(n as i32) / (nbar + 1.0).powi(n as i32 + 1)
}
