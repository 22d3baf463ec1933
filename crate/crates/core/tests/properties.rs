mod common;

use common::{random_cp_model, random_model, rng};
use lindblad_witness::dynamics::{choi_matrix, evolve, propagator, DensityMatrix};
use lindblad_witness::linalg::{self, c, CMatrix, CVector};
use lindblad_witness::model::ModelFile;
use lindblad_witness::search::capability_in_basis;
use lindblad_witness::witness::{analyze, witness_from_flips, DEFAULT_TOL_MINOR};
use lindblad_witness::{
    complement_basis, flip_vectors, gellmann_basis, partial_transpose_conjugate, pauli_basis,
    principal_minors, validate_cp, witness_matrix, FlipVectors, ProductState,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn random_state(d: usize, r: &mut rand_chacha::ChaCha8Rng) -> ProductState {
    let psi = CVector::from_fn(d, |_, _| c(common::gaussian(r), common::gaussian(r)));
    let phi = CVector::from_fn(d, |_, _| c(common::gaussian(r), common::gaussian(r)));
    ProductState::from_unnormalized(psi, phi).unwrap()
}

fn sorted_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut e = linalg::hermitian_eigenvalues(m);
    e.sort_by(f64::total_cmp);
    e
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Flip vectors recomputed from explicitly chosen orthonormal bases.
fn flips_from_bases(
    model: &lindblad_witness::GeneratorModel,
    psi_basis: Vec<CVector>,
    phi_basis: Vec<CVector>,
) -> FlipVectors {
    let basis = &model.basis;
    let vec_for = |first: &CVector, other: &CVector, signed: bool| {
        CVector::from_iterator(
            basis.len(),
            basis.elements.iter().enumerate().map(|(i, f)| {
                let s = if signed { basis.sign(i) } else { 1.0 };
                linalg::sandwich(first, f, other) * c(s, 0.0)
            }),
        )
    };
    let u = psi_basis[1..].iter().map(|o| vec_for(&psi_basis[0], o, false)).collect();
    let v = phi_basis[1..].iter().map(|o| vec_for(&phi_basis[0], o, true)).collect();
    FlipVectors {
        u,
        v,
        psi_basis,
        phi_basis,
    }
}

fn phase(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn propagator_at_zero_is_identity(seed in any::<u64>(), d in 2usize..4) {
        let model = random_model(d, &mut rng(seed));
        let p = propagator(&model.generator().superoperator(), 0.0).unwrap();
        let n = p.matrix.nrows();
        let err = linalg::max_abs(&(&p.matrix - CMatrix::identity(n, n)));
        prop_assert!(err < 1e-12, "|exp(0) - I| = {err}");
    }

    #[test]
    fn semigroup_law(seed in any::<u64>(), s in 0.0f64..0.7, t in 0.0f64..0.7) {
        let model = random_cp_model(2, &mut rng(seed));
        let sup = model.generator().superoperator();
        let lhs = propagator(&sup, s + t).unwrap().matrix;
        let rhs = propagator(&sup, s).unwrap().compose(&propagator(&sup, t).unwrap()).matrix;
        let err = linalg::max_abs(&(&lhs - &rhs));
        prop_assert!(err < 1e-10 * linalg::max_abs(&lhs).max(1.0), "semigroup error {err}");
    }

    #[test]
    fn cp_generators_give_positive_choi(seed in any::<u64>(), t in 0.01f64..1.0) {
        let model = random_cp_model(2, &mut rng(seed));
        let p = propagator(&model.generator().superoperator(), t).unwrap();
        let choi = choi_matrix(&p);
        let min = linalg::min_hermitian_eigenvalue(&choi);
        prop_assert!(min > -1e-9, "Choi minimum {min}");
    }

    #[test]
    fn cp_evolution_keeps_trace_and_positivity(seed in any::<u64>(), t in 0.0f64..2.0) {
        let mut r = rng(seed);
        let model = random_cp_model(2, &mut r);
        let rho0 = DensityMatrix::from_product_state(&random_state(2, &mut r));
        let rho = evolve(&model.generator().superoperator(), &rho0, t).unwrap();
        prop_assert!(rho.trace_error() < 1e-10);
        prop_assert!(linalg::min_hermitian_eigenvalue(rho.matrix()) > -1e-9);
    }

    #[test]
    fn witness_is_gauge_invariant(
        seed in any::<u64>(),
        d in 2usize..4,
        angles in prop::collection::vec(-3.2f64..3.2, 8),
    ) {
        let mut r = rng(seed);
        let model = random_model(d, &mut r);
        let state = random_state(d, &mut r);
        let reference = sorted_eigenvalues(&witness_matrix(&model, &state).unwrap().m);
        let tol = 1e-10 * reference.iter().fold(1.0f64, |a, v| a.max(v.abs()));

        // global phases on ψ and φ
        let phased = ProductState::new(&state.psi * phase(angles[0]), &state.phi * phase(angles[1])).unwrap();
        let got = sorted_eigenvalues(&witness_matrix(&model, &phased).unwrap().m);
        prop_assert!(max_diff(&got, &reference) < tol);

        // independent phases on every complement vector
        let flips = flip_vectors(&state, &model.basis).unwrap();
        let psi_basis: Vec<CVector> = flips.psi_basis.iter().enumerate()
            .map(|(k, b)| if k == 0 { b.clone() } else { b * phase(angles[2 + k % 3]) }).collect();
        let phi_basis: Vec<CVector> = flips.phi_basis.iter().enumerate()
            .map(|(k, b)| if k == 0 { b.clone() } else { b * phase(angles[5 + k % 3]) }).collect();
        let m = witness_from_flips(&model, flips_from_bases(&model, psi_basis, phi_basis)).unwrap();
        let got = sorted_eigenvalues(&m.m);
        prop_assert!(max_diff(&got, &reference) < tol);
    }

    #[test]
    fn witness_ignores_choice_of_complement(seed in any::<u64>(), theta in -3.2f64..3.2) {
        // rotate ψ₂, ψ₃ within the complement of ψ for d = 3
        let mut r = rng(seed);
        let model = random_model(3, &mut r);
        let state = random_state(3, &mut r);
        let reference = sorted_eigenvalues(&witness_matrix(&model, &state).unwrap().m);
        let flips = flip_vectors(&state, &model.basis).unwrap();
        let b = &flips.psi_basis;
        let (cs, sn) = (theta.cos(), theta.sin());
        let rotated = vec![
            b[0].clone(),
            &b[1] * c(cs, 0.0) + &b[2] * phase(0.3) * c(sn, 0.0),
            &b[2] * c(cs, 0.0) - &b[1] * phase(-0.3) * c(sn, 0.0),
        ];
        let m = witness_from_flips(&model, flips_from_bases(&model, rotated, flips.phi_basis.clone())).unwrap();
        let got = sorted_eigenvalues(&m.m);
        let tol = 1e-10 * reference.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        prop_assert!(max_diff(&got, &reference) < tol, "{got:?} vs {reference:?}");
    }

    #[test]
    fn witness_matches_conjugated_generator(seed in any::<u64>(), d in 2usize..4) {
        let mut r = rng(seed);
        let model = random_model(d, &mut r);
        let state = random_state(d, &mut r);
        let w = witness_matrix(&model, &state).unwrap();
        let y = partial_transpose_conjugate(&model).generator().apply(&state.transposed_projector());
        let size = 2 * w.block();
        for i in 0..size {
            for j in 0..size {
                let direct = linalg::sandwich(&w.direction(i), &y, &w.direction(j));
                let err = (direct - w.m[(i, j)]).norm();
                prop_assert!(err < 1e-10 * linalg::max_abs(&w.m).max(1.0), "M[{i},{j}]: {} vs {direct}", w.m[(i, j)]);
            }
        }
    }

    #[test]
    fn cp_models_have_nonnegative_blocks(seed in any::<u64>(), d in 2usize..4) {
        let mut r = rng(seed);
        let model = random_cp_model(d, &mut r);
        let state = random_state(d, &mut r);
        let w = witness_matrix(&model, &state).unwrap();
        let scale = w.scale().max(1.0);
        for i in 0..w.m.nrows() {
            prop_assert!(w.m[(i, i)].re > -1e-10 * scale);
        }
        for minor in principal_minors(&w).iter().filter(|m| m.skipped) {
            let bound = 1e-10 * scale.powi(minor.order() as i32);
            prop_assert!(minor.value > -bound, "skipped minor {:?} = {}", minor.indices, minor.value);
        }
    }

    #[test]
    fn verdict_is_scale_invariant(seed in any::<u64>(), factor in 0.05f64..20.0) {
        let mut r = rng(seed);
        let model = random_model(2, &mut r);
        let state = random_state(2, &mut r);
        let a = witness_matrix(&model, &state).unwrap();
        let b = witness_matrix(&model.scaled(factor), &state).unwrap();
        let err = linalg::max_abs(&(&b.m - &a.m * c(factor, 0.0)));
        prop_assert!(err < 1e-10 * factor * linalg::max_abs(&a.m).max(1.0));
        let va = analyze(&model, &state, DEFAULT_TOL_MINOR).unwrap().verdict;
        let vb = analyze(&model.scaled(factor), &state, DEFAULT_TOL_MINOR).unwrap().verdict;
        prop_assert_eq!(va.label(), vb.label());
    }

    #[test]
    fn qubit_determinant_at_ground_state(seed in any::<u64>()) {
        // |00⟩ in the Pauli basis: u = (1, −i, 0), v = (1, i, 0)
        let model = random_model(2, &mut rng(seed));
        let state = ProductState::basis_state(2, 0, 0).unwrap();
        let w = witness_matrix(&model, &state).unwrap();
        let u = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, -1.0), c(0.0, 0.0)]);
        let v = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let k = &model.kossakowski;
        let h12 = &model.hamiltonian.h12;
        let cross = CMatrix::from_fn(3, 3, |i, j| c(k.b[(j, i)].re, -h12[(j, i)]));
        let cc = linalg::sandwich(&v, &k.c.transpose(), &v).re;
        let aa = linalg::sandwich(&u, &k.a, &u).re;
        let x = linalg::sandwich(&v, &cross, &u);
        let expected = cc * aa - x.norm_sqr();
        let det = w.m.determinant().re;
        prop_assert!((det - expected).abs() < 1e-10 * expected.abs().max(1.0), "{det} vs {expected}");
    }

    #[test]
    fn complement_is_orthonormal(re_im in prop::collection::vec(-1.0f64..1.0, 8), d in 2usize..5) {
        let x = CVector::from_fn(d, |i, _| c(re_im[2 * i], re_im[2 * i + 1]));
        prop_assume!(x.norm() > 1e-3);
        let x = x.normalize();
        let basis = complement_basis(&x).unwrap();
        prop_assert!((&basis[0] - &x).norm() < 1e-14);
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let g = a.dotc(b);
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g - c(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn model_file_round_trip(values in prop::collection::vec(-5.0f64..5.0, 27), alias in any::<bool>()) {
        let row = |k: usize| format!("[{}, {}, [{}, {}]]", values[k], values[k + 1], values[k + 2], 0.0);
        let text = format!(
            "basis = \"pauli\"\n[params]\ns = {}\n[kossakowski]\nA = [{}, {}, {}]\nB = [[\"s*2\", 0, 0], [0, \"-(s+1)\", 0], [0, 0, 1]]\nC = {}\n[hamiltonian]\nh1 = [{}, 0, 0]\nh12 = {{ entries = [[\"x\", \"y\", {}]] }}\n",
            values[20],
            row(0), row(3), row(6),
            if alias { "\"A\"".to_string() } else { format!("[{}, {}, {}]", row(9), row(12), row(15)) },
            values[21],
            values[22],
        );
        let parsed = ModelFile::parse(&text).unwrap();
        let again = ModelFile::parse(&parsed.to_toml().unwrap()).unwrap();
        prop_assert_eq!(&parsed, &again);
    }

    #[test]
    fn capability_is_rotation_invariant(seed in any::<u64>()) {
        // conjugating both parties by a local unitary rotates h12 by the
        // adjoint action; the capability is unchanged
        let mut r = rng(seed);
        let h12 = DMatrix::from_fn(3, 3, |_, _| common::gaussian(&mut r));
        let angle: f64 = r.random_range(-3.0..3.0);
        let (cs, sn) = (angle.cos(), angle.sin());
        let rot = DMatrix::from_row_slice(3, 3, &[cs, -sn, 0.0, sn, cs, 0.0, 0.0, 0.0, 1.0]);
        let rotated = &rot * &h12 * rot.transpose();
        let a = capability_in_basis(&h12, &pauli_basis(), 8, 1).unwrap();
        let b = capability_in_basis(&rotated, &pauli_basis(), 8, 1).unwrap();
        prop_assert!(a.closed_form && b.closed_form);
        prop_assert!((a.eta_max - b.eta_max).abs() < 1e-10 * a.eta_max.max(1.0));
        for report in [&a, &b] {
            prop_assert!(report.eta_found <= report.eta_max * (1.0 + 1e-9) + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn validate_cp_matches_spectrum(seed in any::<u64>(), d in 2usize..4) {
        let mut r = rng(seed);
        let cp = random_cp_model(d, &mut r);
        prop_assert!(validate_cp(&cp.kossakowski).is_cp);
        let any = random_model(d, &mut r);
        let min = linalg::min_hermitian_eigenvalue(&any.kossakowski.assemble());
        prop_assert_eq!(validate_cp(&any.kossakowski).is_cp, min >= -1e-10);
    }

    #[test]
    fn witness_agrees_with_oracle(seed in any::<u64>()) {
        let a = common::witness_oracle_agreement(seed, 4);
        prop_assert!(a.failures.is_empty(), "{:?}", a.failures);
    }
}

#[test]
fn gellmann_witness_has_expected_size() {
    let basis = gellmann_basis(3).unwrap();
    assert_eq!(basis.len(), 8);
    let model = random_model(3, &mut rng(3));
    let w = witness_matrix(&model, &ProductState::basis_state(3, 0, 2).unwrap()).unwrap();
    assert_eq!(w.m.shape(), (4, 4));
    assert_eq!(principal_minors(&w).len(), 15);
}
