use approx::assert_abs_diff_eq;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use eomsim_core::fock::*;
use eomsim_core::SimError;

fn random_state(basis: &BasisDescriptor, seed: u64) -> StateVector {
    // Deterministic pseudo-random amplitudes via a simple LCG.
    let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
    let mut amps = Vec::with_capacity(basis.total_dim());
    for _ in 0..basis.total_dim() {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let re = ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let im = ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
        amps.push(C64::new(re, im));
    }
    let mut s = StateVector::from_amplitudes(basis.clone(), amps).unwrap();
    s.normalize();
    s
}

fn to_vector(s: &StateVector) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_iterator(s.amplitudes.len(), s.amplitudes.iter().copied())
}

#[test]
fn flat_index_matches_row_major_example() {
    let basis = BasisDescriptor::new(&[3, 4, 5]).unwrap();
    assert_eq!(basis.total_dim(), 60);
    assert_eq!(basis.flat_index(&[0, 0, 0]), 0);
    assert_eq!(basis.flat_index(&[0, 0, 1]), 1);
    assert_eq!(basis.flat_index(&[0, 1, 0]), 5);
    assert_eq!(basis.flat_index(&[1, 0, 0]), 20);
    assert_eq!(basis.flat_index(&[2, 3, 4]), 59);
}

#[test]
fn cutoff_below_two_rejected() {
    assert!(matches!(
        BasisDescriptor::new(&[1, 4]),
        Err(SimError::InvalidBasis(_))
    ));
}

#[test]
fn capacity_cap_enforced() {
    assert!(matches!(
        BasisDescriptor::with_capacity(&[100, 100, 200], 1_000_000),
        Err(SimError::Capacity { .. })
    ));
}

#[test]
fn optical_mode_absent_in_two_mode_basis() {
    let basis = BasisDescriptor::new(&[4, 4]).unwrap();
    assert!(Mode::Optical.index(&basis).is_err());
    assert_eq!(Mode::Microwave.index(&basis).unwrap(), 0);
    assert_eq!(Mode::Mechanical.index(&basis).unwrap(), 1);
}

#[test]
fn ladder_matches_dense_oracle() {
    let basis = BasisDescriptor::new(&[3, 4, 5]).unwrap();
    let s = random_state(&basis, 7);
    for mode in 0..3 {
        let dense_low = embed_operator(&basis, mode, &lower_matrix(basis.cutoff(mode)));
        let mode_lbl = [Mode::Microwave, Mode::Mechanical, Mode::Optical][mode];
        let got = apply_ladder(mode_lbl, Ladder::Lower, &s).unwrap();
        let want = &dense_low * to_vector(&s);
        for i in 0..basis.total_dim() {
            assert_abs_diff_eq!(got.amplitudes[i].re, want[i].re, epsilon = 1e-12);
            assert_abs_diff_eq!(got.amplitudes[i].im, want[i].im, epsilon = 1e-12);
        }
        let got = apply_ladder(mode_lbl, Ladder::Raise, &s).unwrap();
        let want = dense_low.adjoint() * to_vector(&s);
        // Raising discards amplitude that would leave the truncation; the
        // dense adjoint agrees because lower_matrix already truncates.
        for i in 0..basis.total_dim() {
            assert_abs_diff_eq!(got.amplitudes[i].re, want[i].re, epsilon = 1e-12);
            assert_abs_diff_eq!(got.amplitudes[i].im, want[i].im, epsilon = 1e-12);
        }
    }
}

#[test]
fn number_operator_matches_dense_oracle() {
    let basis = BasisDescriptor::new(&[4, 3]).unwrap();
    let s = random_state(&basis, 11);
    for mode in 0..2 {
        let low = embed_operator(&basis, mode, &lower_matrix(basis.cutoff(mode)));
        let num = low.adjoint() * &low;
        let mut got = vec![C64::ZERO; basis.total_dim()];
        acc_number(&basis, mode, &s.amplitudes, C64::ONE, &mut got);
        let want = num * to_vector(&s);
        for i in 0..basis.total_dim() {
            assert_abs_diff_eq!(got[i].re, want[i].re, epsilon = 1e-12);
        }
        let mode_lbl = [Mode::Microwave, Mode::Mechanical][mode];
        let direct = expectation_number(mode_lbl, &s).unwrap();
        let braket: C64 = s
            .amplitudes
            .iter()
            .zip(got.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert_abs_diff_eq!(direct, braket.re, epsilon = 1e-12);
    }
}

#[test]
fn quadrature_of_coherent_state() {
    // <a + a^dag> = 2 Re alpha.
    let alpha = C64::new(0.7, -0.3);
    let s = eomsim_core::coherent_state(alpha, 24).unwrap();
    assert_abs_diff_eq!(
        expectation_quadrature(Mode::Microwave, &s).unwrap(),
        2.0 * alpha.re,
        epsilon = 1e-9
    );
}

#[test]
fn partial_trace_of_product_state_is_pure_factor() {
    let a = eomsim_core::coherent_state(C64::new(0.8, 0.2), 10).unwrap();
    let b = eomsim_core::fock_state(2, 6).unwrap();
    let joint = tensor_product_state(&[a.clone(), b.clone()]).unwrap();
    let rho_a = partial_trace(&joint, Mode::Microwave).unwrap();
    let rho_b = partial_trace(&joint, Mode::Mechanical).unwrap();
    assert_abs_diff_eq!(rho_a.purity(), 1.0, epsilon = 1e-10);
    assert_abs_diff_eq!(rho_b.purity(), 1.0, epsilon = 1e-10);
    let overlap = eomsim_core::fidelity_with_pure(&a, &rho_a);
    assert_abs_diff_eq!(overlap, 1.0, epsilon = 1e-10);
    assert_abs_diff_eq!(rho_b.mat[(2, 2)].re, 1.0, epsilon = 1e-12);
}

#[test]
fn partial_trace_density_consistent_with_state_version() {
    let basis = BasisDescriptor::new(&[3, 4, 3]).unwrap();
    let s = random_state(&basis, 23);
    let rho = DensityMatrix::pure(&s);
    for mode in [Mode::Microwave, Mode::Mechanical, Mode::Optical] {
        let from_state = partial_trace(&s, mode).unwrap();
        let from_density = partial_trace_density(&rho, &basis, mode).unwrap();
        let diff = (&from_state.mat - &from_density.mat).norm();
        assert!(diff < 1e-12, "mode {mode:?}: diff {diff}");
    }
}

#[test]
fn bell_like_state_has_mixed_marginal() {
    let basis = BasisDescriptor::new(&[2, 2]).unwrap();
    let mut s = StateVector::zero(basis);
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    s.amplitudes[0] = r; // |00>
    s.amplitudes[3] = r; // |11>
    let rho = partial_trace(&s, Mode::Microwave).unwrap();
    assert_abs_diff_eq!(rho.purity(), 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(rho.mat[(0, 0)].re, 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(rho.mat[(0, 1)].norm(), 0.0, epsilon = 1e-12);
}

#[test]
fn density_resize_crops_and_pads() {
    let s = eomsim_core::fock_state(1, 4).unwrap();
    let rho = DensityMatrix::pure(&s);
    let padded = rho.resized(6);
    assert_eq!(padded.dim(), 6);
    assert_abs_diff_eq!(padded.trace().re, 1.0, epsilon = 1e-12);
    let cropped = rho.resized(2);
    assert_abs_diff_eq!(cropped.trace().re, 1.0, epsilon = 1e-12);
    let over = rho.resized(1);
    assert_abs_diff_eq!(over.trace().re, 0.0, epsilon = 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flat_index_round_trip(
        c1 in 2usize..6, c2 in 2usize..6, c3 in 2usize..6, flat_frac in 0.0f64..1.0
    ) {
        let basis = BasisDescriptor::new(&[c1, c2, c3]).unwrap();
        let flat = ((basis.total_dim() - 1) as f64 * flat_frac) as usize;
        let occ = basis.occupation(flat);
        prop_assert_eq!(basis.flat_index(&occ), flat);
        for (m, &n) in occ.iter().enumerate() {
            prop_assert_eq!(basis.occupation_of(flat, m), n);
        }
    }

    #[test]
    fn ladder_linearity(seed1 in 1u64..1000, seed2 in 1000u64..2000, cr in -1.0f64..1.0, ci in -1.0f64..1.0) {
        let basis = BasisDescriptor::new(&[3, 4]).unwrap();
        let u = random_state(&basis, seed1);
        let v = random_state(&basis, seed2);
        let c = C64::new(cr, ci);
        let combo_amps: Vec<C64> = u.amplitudes.iter().zip(&v.amplitudes)
            .map(|(a, b)| a + c * b).collect();
        let combo = StateVector::from_amplitudes(basis.clone(), combo_amps).unwrap();
        let lhs = apply_ladder(Mode::Mechanical, Ladder::Lower, &combo).unwrap();
        let lu = apply_ladder(Mode::Mechanical, Ladder::Lower, &u).unwrap();
        let lv = apply_ladder(Mode::Mechanical, Ladder::Lower, &v).unwrap();
        for i in 0..basis.total_dim() {
            let rhs = lu.amplitudes[i] + c * lv.amplitudes[i];
            prop_assert!((lhs.amplitudes[i] - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn commutator_on_interior_states(n in 0usize..6) {
        // [a, a^dag] |n> = |n> whenever |n+1> is still inside the cutoff.
        let cutoff = 8;
        let s = eomsim_core::fock_state(n, cutoff).unwrap();
        let up = apply_ladder(Mode::Microwave, Ladder::Raise, &s).unwrap();
        let down_up = apply_ladder(Mode::Microwave, Ladder::Lower, &up).unwrap();
        let down = apply_ladder(Mode::Microwave, Ladder::Lower, &s).unwrap();
        let up_down = apply_ladder(Mode::Microwave, Ladder::Raise, &down).unwrap();
        for i in 0..cutoff {
            let comm = down_up.amplitudes[i] - up_down.amplitudes[i];
            let expect = s.amplitudes[i];
            prop_assert!((comm - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_is_valid_density(seed in 1u64..500) {
        let basis = BasisDescriptor::new(&[3, 3, 3]).unwrap();
        let s = random_state(&basis, seed);
        let rho = partial_trace(&s, Mode::Mechanical).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(rho.hermiticity_defect() < 1e-12);
        for ev in rho.eigenvalues() {
            prop_assert!(ev > -1e-10);
        }
    }

    #[test]
    fn raise_then_lower_is_number_plus_one(seed in 1u64..500) {
        let basis = BasisDescriptor::new(&[5, 4]).unwrap();
        let s = random_state(&basis, seed);
        let up = apply_ladder(Mode::Microwave, Ladder::Raise, &s).unwrap();
        // <psi| a a^dag |psi> = <n> + 1 minus the weight lost at the cutoff.
        let n = expectation_number(Mode::Microwave, &s).unwrap();
        let top = s.top_level_population(Mode::Microwave).unwrap();
        let lost = top * basis.cutoff(0) as f64;
        prop_assert!((up.dot(&up).re - (n + 1.0 - lost)).abs() < 1e-9);
    }
}
