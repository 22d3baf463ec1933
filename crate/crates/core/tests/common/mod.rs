#![allow(dead_code)]

use lindblad_witness::dynamics::{negativity_curve, DensityMatrix, TOL_NEG};
use lindblad_witness::linalg::{c, CMatrix};
use lindblad_witness::{
    gellmann_basis, pauli_basis, GeneratorModel, HamiltonianSpec, KossakowskiBlocks, ProductState,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn complex_gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(gaussian(rng), gaussian(rng)))
}

fn split(k: &CMatrix, n: usize) -> KossakowskiBlocks {
    let a = k.view((0, 0), (n, n)).into_owned();
    let b = k.view((0, n), (n, n)).into_owned();
    let cm = k.view((n, n), (n, n)).into_owned();
    KossakowskiBlocks::new(a, b, cm).expect("Hermitian by construction")
}

/// Random PSD Kossakowski matrix of size `2n`, normalized to unit trace
/// norm per dimension.
pub fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> KossakowskiBlocks {
    random_psd_rank(n, 2 * n, rng)
}

pub fn random_psd_rank(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> KossakowskiBlocks {
    let g = complex_gaussian(2 * n, rank, rng);
    let k = &g * g.adjoint() / c((2 * n) as f64, 0.0);
    split(&k, n)
}

/// Random Hermitian Kossakowski matrix with eigenvalues `spectrum`.
pub fn with_spectrum(spectrum: &[f64], rng: &mut ChaCha8Rng) -> KossakowskiBlocks {
    let m = spectrum.len();
    let q = complex_gaussian(m, m, rng).qr().q();
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(m, spectrum.iter().map(|&v| c(v, 0.0))));
    let k = &q * d * q.adjoint();
    let k = (&k + k.adjoint()) * c(0.5, 0.0);
    split(&k, m / 2)
}

pub fn random_hamiltonian(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> HamiltonianSpec {
    let mut v = || (0..n).map(|_| scale * gaussian(rng)).collect::<Vec<_>>();
    let h1 = v();
    let h2 = v();
    let h12 = DMatrix::from_fn(n, n, |_, _| scale * gaussian(rng));
    HamiltonianSpec::new(h1, h2, h12).unwrap()
}

pub fn basis_for(d: usize) -> lindblad_witness::BasisSet {
    if d == 2 {
        pauli_basis()
    } else {
        gellmann_basis(d).unwrap()
    }
}

/// Random model with PSD `K` and a random Hamiltonian.
pub fn random_cp_model(d: usize, rng: &mut ChaCha8Rng) -> GeneratorModel {
    let basis = basis_for(d);
    let n = basis.len();
    let k = random_psd(n, rng);
    let h = random_hamiltonian(n, 0.5, rng);
    GeneratorModel::new(basis, k, h).unwrap()
}

/// Random model whose `K` need not be PSD.
pub fn random_model(d: usize, rng: &mut ChaCha8Rng) -> GeneratorModel {
    let basis = basis_for(d);
    let n = basis.len();
    let spectrum: Vec<f64> = (0..2 * n).map(|_| rng.random::<f64>() * 2.0 - 0.5).collect();
    let k = with_spectrum(&spectrum, rng);
    let h = random_hamiltonian(n, 0.5, rng);
    GeneratorModel::new(basis, k, h).unwrap()
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Largest negativity of `exp(tL)[Q]` over `times`.
pub fn max_negativity(model: &GeneratorModel, state: &ProductState, times: &[f64]) -> f64 {
    let s = model.generator().superoperator();
    negativity_curve(&s, &DensityMatrix::from_product_state(state), model.d(), times)
        .unwrap()
        .max_negativity()
}

/// Smallest partial-transpose eigenvalue of `exp(tL)[Q]` over `times`.
pub fn min_pt(model: &GeneratorModel, state: &ProductState, times: &[f64]) -> f64 {
    let s = model.generator().superoperator();
    negativity_curve(&s, &DensityMatrix::from_product_state(state), model.d(), times)
        .unwrap()
        .min_pt_eigenvalues
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

pub const ORACLE_TOL: f64 = TOL_NEG;

#[derive(Debug, Default)]
pub struct Agreement {
    pub entangling: usize,
    pub no_violation: usize,
    pub marginal: usize,
    pub failures: Vec<String>,
}

/// Checks first-order verdicts against the evolution oracle on `count`
/// random PSD `d = 2` models, each at a random product state.
pub fn witness_oracle_agreement(seed: u64, count: usize) -> Agreement {
    use lindblad_witness::witness::DEFAULT_TOL_MINOR;
    use lindblad_witness::{first_order_verdict, sample_product_state, FirstOrderVerdict};
    let mut out = Agreement::default();
    let mut r = rng(seed);
    let late = log_grid(1e-4, 0.5, 60);
    for i in 0..count {
        // low-rank K entangles far more often than full-rank K
        let model = if i % 2 == 0 {
            random_cp_model(2, &mut r)
        } else {
            let k = random_psd_rank(3, 1 + i % 3, &mut r);
            let h = random_hamiltonian(3, 0.5, &mut r);
            GeneratorModel::new(pauli_basis(), k, h).unwrap()
        };
        let state = sample_product_state(2, seed.wrapping_mul(1000) + i as u64).unwrap();
        match first_order_verdict(&model, &state, DEFAULT_TOL_MINOR).unwrap() {
            FirstOrderVerdict::Entangling { certificate } => {
                out.entangling += 1;
                let neg = max_negativity(&model, &state, &late);
                if neg <= ORACLE_TOL {
                    out.failures.push(format!("model {i}: minor {:.3e} but negativity {neg:.3e}", certificate.value));
                }
            }
            FirstOrderVerdict::NoViolation => {
                out.no_violation += 1;
                let early = first_order_window(&model, &state);
                let m = min_pt(&model, &state, &early);
                if m < -ORACLE_TOL {
                    out.failures.push(format!("model {i}: no violation but min PT eigenvalue {m:.3e}"));
                }
            }
            FirstOrderVerdict::Marginal { .. } => out.marginal += 1,
        }
    }
    out
}

/// Grid on `[0, τ]` with `τ = min(0.05, ½ λ_min(M) / ‖S‖²)`, where the first-order
/// term `t·λ_min(M)` still dominates second-order corrections of size `t²‖S‖²`.
pub fn first_order_window(model: &GeneratorModel, state: &ProductState) -> Vec<f64> {
    let m = lindblad_witness::witness_matrix(model, state).unwrap();
    let lambda = lindblad_witness::linalg::min_hermitian_eigenvalue(&m.m).max(0.0);
    let s = model.generator().superoperator().matrix;
    let norm = s.singular_values().iter().copied().fold(0.0, f64::max);
    let tau = (0.5 * lambda / (norm * norm).max(1e-300)).min(0.05);
    (0..26).map(|i| tau * i as f64 / 25.0).collect()
}
