//! Truncated multimode Fock-space algebra.
//!
//! A [`BasisDescriptor`] fixes per-mode cutoffs over the tensor-product
//! Hilbert space with mode order (microwave, mechanical, optical); two-mode
//! systems omit the optical slot. Ladder operators act matrix-free by index
//! arithmetic, never through materialized `total_dim x total_dim` matrices.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Result, SimError};

/// Default cap on the number of amplitudes in a basis.
pub const DEFAULT_MAX_AMPLITUDES: usize = 1_000_000;

/// Bosonic mode labels. Index order in a basis is fixed as
/// (microwave, mechanical, optical).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    Microwave,
    Mechanical,
    Optical,
}

impl Mode {
    /// Resolve this mode to its index in `basis`, or fail if absent.
    pub fn index(self, basis: &BasisDescriptor) -> Result<usize> {
        let n = basis.num_modes();
        let idx = match self {
            Mode::Microwave => 0,
            Mode::Mechanical => 1,
            Mode::Optical => 2,
        };
        if idx < n {
            Ok(idx)
        } else {
            Err(SimError::UnknownMode(self, n))
        }
    }
}

/// Ladder operator kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Lower,
    Raise,
}

/// Per-mode Fock cutoffs and the row-major flat-index map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisDescriptor {
    cutoffs: Vec<usize>,
    strides: Vec<usize>,
    total_dim: usize,
}

impl BasisDescriptor {
    pub fn new(cutoffs: &[usize]) -> Result<Self> {
        Self::with_capacity(cutoffs, DEFAULT_MAX_AMPLITUDES)
    }

    pub fn with_capacity(cutoffs: &[usize], max_amplitudes: usize) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(SimError::InvalidBasis("no modes".into()));
        }
        if let Some(&c) = cutoffs.iter().find(|&&c| c < 2) {
            return Err(SimError::InvalidBasis(format!("cutoff {c} < 2")));
        }
        let mut total: usize = 1;
        for &c in cutoffs {
            total = total.checked_mul(c).ok_or(SimError::Capacity {
                requested: usize::MAX,
                limit: max_amplitudes,
            })?;
        }
        if total > max_amplitudes {
            return Err(SimError::Capacity {
                requested: total,
                limit: max_amplitudes,
            });
        }
        // Row-major: the last mode varies fastest.
        let mut strides = vec![1usize; cutoffs.len()];
        for i in (0..cutoffs.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * cutoffs[i + 1];
        }
        Ok(Self {
            cutoffs: cutoffs.to_vec(),
            strides,
            total_dim: total,
        })
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn cutoff(&self, mode: usize) -> usize {
        self.cutoffs[mode]
    }

    pub fn stride(&self, mode: usize) -> usize {
        self.strides[mode]
    }

    pub fn num_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Row-major mixed-radix value of an occupation tuple.
    pub fn flat_index(&self, occupation: &[usize]) -> usize {
        debug_assert_eq!(occupation.len(), self.cutoffs.len());
        occupation
            .iter()
            .zip(&self.strides)
            .map(|(&n, &s)| n * s)
            .sum()
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn occupation(&self, flat: usize) -> Vec<usize> {
        self.cutoffs
            .iter()
            .zip(&self.strides)
            .map(|(&c, &s)| (flat / s) % c)
            .collect()
    }

    /// Occupation of a single mode at a flat index.
    pub fn occupation_of(&self, flat: usize, mode: usize) -> usize {
        (flat / self.strides[mode]) % self.cutoffs[mode]
    }
}

/// Normalized complex amplitude array over a tensor-product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub basis: BasisDescriptor,
    pub amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn zero(basis: BasisDescriptor) -> Self {
        let dim = basis.total_dim();
        Self {
            basis,
            amplitudes: vec![C64::ZERO; dim],
        }
    }

    /// Basis state |n1, ..., nk>.
    pub fn basis_state(basis: BasisDescriptor, occupation: &[usize]) -> Self {
        let idx = basis.flat_index(occupation);
        let mut s = Self::zero(basis);
        s.amplitudes[idx] = C64::ONE;
        s
    }

    pub fn from_amplitudes(basis: BasisDescriptor, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.total_dim() {
            return Err(SimError::InvalidBasis(format!(
                "amplitude length {} != total_dim {}",
                amplitudes.len(),
                basis.total_dim()
            )));
        }
        Ok(Self { basis, amplitudes })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            for a in &mut self.amplitudes {
                *a *= inv;
            }
        }
    }

    pub fn dot(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Summed squared amplitude in the top Fock level of `mode`; used to
    /// monitor truncation during production runs.
    pub fn top_level_population(&self, mode: Mode) -> Result<f64> {
        let m = mode.index(&self.basis)?;
        let top = self.basis.cutoff(m) - 1;
        let mut p = 0.0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            if self.basis.occupation_of(i, m) == top {
                p += a.norm_sqr();
            }
        }
        Ok(p)
    }
}

/// dst += scale * (lower_mode src): |n> -> sqrt(n) |n-1>.
pub fn acc_lower(basis: &BasisDescriptor, mode: usize, src: &[C64], scale: C64, dst: &mut [C64]) {
    let stride = basis.stride(mode);
    let cutoff = basis.cutoff(mode);
    let block = stride * cutoff;
    let dim = basis.total_dim();
    let mut base = 0;
    while base < dim {
        for n in 1..cutoff {
            let f = scale * (n as f64).sqrt();
            let row = base + n * stride;
            for k in 0..stride {
                dst[row - stride + k] += f * src[row + k];
            }
        }
        base += block;
    }
}

/// dst += scale * (raise_mode src): |n> -> sqrt(n+1) |n+1>, discarding the
/// contribution that would leave the truncated space.
pub fn acc_raise(basis: &BasisDescriptor, mode: usize, src: &[C64], scale: C64, dst: &mut [C64]) {
    let stride = basis.stride(mode);
    let cutoff = basis.cutoff(mode);
    let block = stride * cutoff;
    let dim = basis.total_dim();
    let mut base = 0;
    while base < dim {
        for n in 0..cutoff - 1 {
            let f = scale * ((n + 1) as f64).sqrt();
            let row = base + n * stride;
            for k in 0..stride {
                dst[row + stride + k] += f * src[row + k];
            }
        }
        base += block;
    }
}

/// dst += scale * n_mode * src (number operator).
pub fn acc_number(basis: &BasisDescriptor, mode: usize, src: &[C64], scale: C64, dst: &mut [C64]) {
    let stride = basis.stride(mode);
    let cutoff = basis.cutoff(mode);
    let block = stride * cutoff;
    let dim = basis.total_dim();
    let mut base = 0;
    while base < dim {
        for n in 1..cutoff {
            let f = scale * n as f64;
            let row = base + n * stride;
            for k in 0..stride {
                dst[row + k] += f * src[row + k];
            }
        }
        base += block;
    }
}

/// Apply a single ladder operator, returning the (unnormalized) image.
pub fn apply_ladder(mode: Mode, kind: Ladder, state: &StateVector) -> Result<StateVector> {
    let m = mode.index(&state.basis)?;
    let mut out = StateVector::zero(state.basis.clone());
    match kind {
        Ladder::Lower => acc_lower(
            &state.basis,
            m,
            &state.amplitudes,
            C64::ONE,
            &mut out.amplitudes,
        ),
        Ladder::Raise => acc_raise(
            &state.basis,
            m,
            &state.amplitudes,
            C64::ONE,
            &mut out.amplitudes,
        ),
    }
    Ok(out)
}

/// <n_mode> of a normalized state.
pub fn expectation_number(mode: Mode, state: &StateVector) -> Result<f64> {
    let m = mode.index(&state.basis)?;
    let basis = &state.basis;
    let mut acc = 0.0;
    for (i, a) in state.amplitudes.iter().enumerate() {
        let n = basis.occupation_of(i, m);
        if n > 0 {
            acc += n as f64 * a.norm_sqr();
        }
    }
    Ok(acc)
}

/// <c + c^dag> of a normalized state (c = lowering operator of `mode`).
pub fn expectation_quadrature(mode: Mode, state: &StateVector) -> Result<f64> {
    let m = mode.index(&state.basis)?;
    let mut lowered = vec![C64::ZERO; state.basis.total_dim()];
    acc_lower(&state.basis, m, &state.amplitudes, C64::ONE, &mut lowered);
    let braket: C64 = state
        .amplitudes
        .iter()
        .zip(&lowered)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(2.0 * braket.re)
}

/// Complex dim x dim density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub mat: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn from_matrix(mat: DMatrix<C64>) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self { mat }
    }

    /// |psi><psi| of a (possibly multimode) state.
    pub fn pure(state: &StateVector) -> Self {
        let dim = state.basis.total_dim();
        let mut mat = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                mat[(i, j)] = state.amplitudes[i] * state.amplitudes[j].conj();
            }
        }
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim() {
            for j in 0..=i {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    /// Crop or zero-pad to `dim` (top-left block). Cropping drops the trace
    /// mass held above the report cutoff.
    pub fn resized(&self, dim: usize) -> Self {
        let mut mat = DMatrix::zeros(dim, dim);
        let n = dim.min(self.dim());
        for i in 0..n {
            for j in 0..n {
                mat[(i, j)] = self.mat[(i, j)];
            }
        }
        Self { mat }
    }

    pub fn scale(&mut self, s: f64) {
        self.mat *= C64::new(s, 0.0);
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.mat += &other.mat;
    }
}

/// Reduced density matrix of `keep`, tracing out every other mode.
pub fn partial_trace(state: &StateVector, keep: Mode) -> Result<DensityMatrix> {
    let m = keep.index(&state.basis)?;
    let basis = &state.basis;
    let c = basis.cutoff(m);
    let stride = basis.stride(m);
    let block = stride * c;
    let dim = basis.total_dim();
    let mut mat = DMatrix::zeros(c, c);
    let mut base = 0;
    while base < dim {
        for i in 0..c {
            for j in 0..c {
                let mut acc = C64::ZERO;
                for k in 0..stride {
                    acc += state.amplitudes[base + i * stride + k]
                        * state.amplitudes[base + j * stride + k].conj();
                }
                mat[(i, j)] += acc;
            }
        }
        base += block;
    }
    Ok(DensityMatrix::from_matrix(mat))
}

/// Reduced density matrix of `keep` from a multimode density matrix.
pub fn partial_trace_density(
    rho: &DensityMatrix,
    basis: &BasisDescriptor,
    keep: Mode,
) -> Result<DensityMatrix> {
    if rho.dim() != basis.total_dim() {
        return Err(SimError::InvalidBasis(format!(
            "density dimension {} != basis dimension {}",
            rho.dim(),
            basis.total_dim()
        )));
    }
    let m = keep.index(basis)?;
    let c = basis.cutoff(m);
    let stride = basis.stride(m);
    let block = stride * c;
    let dim = basis.total_dim();
    let mut mat = DMatrix::zeros(c, c);
    let mut base = 0;
    while base < dim {
        for i in 0..c {
            for j in 0..c {
                let mut acc = C64::ZERO;
                for k in 0..stride {
                    acc += rho.mat[(base + i * stride + k, base + j * stride + k)];
                }
                mat[(i, j)] += acc;
            }
        }
        base += block;
    }
    Ok(DensityMatrix::from_matrix(mat))
}

/// Tensor product of single-mode factors, in basis mode order.
pub fn tensor_product_state(factors: &[StateVector]) -> Result<StateVector> {
    if factors.is_empty() {
        return Err(SimError::ModeCountMismatch {
            expected: 1,
            got: 0,
        });
    }
    for f in factors {
        if f.basis.num_modes() != 1 {
            return Err(SimError::InvalidBasis(
                "tensor factors must be single-mode".into(),
            ));
        }
    }
    let cutoffs: Vec<usize> = factors.iter().map(|f| f.basis.cutoff(0)).collect();
    let basis = BasisDescriptor::new(&cutoffs)?;
    let mut amplitudes = vec![C64::ONE];
    for f in factors {
        let mut next = Vec::with_capacity(amplitudes.len() * f.amplitudes.len());
        for &a in &amplitudes {
            for &b in &f.amplitudes {
                next.push(a * b);
            }
        }
        amplitudes = next;
    }
    StateVector::from_amplitudes(basis, amplitudes)
}

/// Dense single-mode lowering matrix; the small-dimension oracle used in tests
/// and in the master-equation solver.
pub fn lower_matrix(cutoff: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    m
}

/// Dense operator acting as `op` on `mode` and identity elsewhere.
pub fn embed_operator(basis: &BasisDescriptor, mode: usize, op: &DMatrix<C64>) -> DMatrix<C64> {
    let mut full = DMatrix::identity(1, 1);
    for (i, &c) in basis.cutoffs().iter().enumerate() {
        let factor = if i == mode {
            op.clone()
        } else {
            DMatrix::identity(c, c)
        };
        full = full.kronecker(&factor);
    }
    full
}
