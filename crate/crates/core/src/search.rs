//! Searches over product states: entangling certificates and the entangling
//! capability of a coupling Hamiltonian.
//!
//! A unit vector in `C^d` is parametrized by `d − 1` hyperspherical angles
//! for the moduli and `d − 1` relative phases, so a product state has
//! `4(d − 1)` real parameters. Local refinement is coordinate-wise
//! golden-section search with a shrinking window.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::basis::{gellmann_basis, pauli_basis, BasisSet};
use crate::dynamics::{negativity_curve, DensityMatrix, TOL_NEG};
use crate::generator::GeneratorModel;
use crate::linalg::{self, c, re, CVector};
use crate::witness::{analyze, flip_vectors, FirstOrderVerdict, MinorReport, ProductState};
use crate::{Error, Result};

/// Starts evaluated between checks for an early certificate.
const BATCH: usize = 8;

fn gaussian_unit_vector(d: usize, rng: &mut ChaCha8Rng) -> CVector {
    loop {
        let v = CVector::from_fn(d, |_, _| {
            c(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
        });
        let n = v.norm();
        if n > 1e-12 {
            return v / re(n);
        }
    }
}

fn start_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Haar-random product state; identical seeds give identical states.
pub fn sample_product_state(d: usize, seed: u64) -> Result<ProductState> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("local dimension must be >= 2, got {d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(d, &mut rng)
}

fn sample_with(d: usize, rng: &mut ChaCha8Rng) -> Result<ProductState> {
    let psi = gaussian_unit_vector(d, rng);
    let phi = gaussian_unit_vector(d, rng);
    ProductState::from_unnormalized(psi, phi)
}

fn angles_of(x: &CVector) -> Vec<f64> {
    let d = x.len();
    let mut p = Vec::with_capacity(2 * (d - 1));
    for k in 0..d - 1 {
        let tail: f64 = x.rows(k + 1, d - k - 1).norm();
        p.push(tail.atan2(x[k].norm()));
    }
    let base = x[0].arg();
    for k in 1..d {
        p.push(x[k].arg() - base);
    }
    p
}

fn vector_of(p: &[f64], d: usize) -> CVector {
    let mut out = CVector::zeros(d);
    let mut sin_prod = 1.0;
    for k in 0..d {
        let modulus = if k < d - 1 {
            sin_prod * p[k].cos()
        } else {
            sin_prod
        };
        if k < d - 1 {
            sin_prod *= p[k].sin();
        }
        let phase = if k == 0 { 0.0 } else { p[d - 1 + k - 1] };
        out[k] = c(modulus * phase.cos(), modulus * phase.sin());
    }
    out
}

fn state_params(state: &ProductState) -> Vec<f64> {
    let mut p = angles_of(&state.psi);
    p.extend(angles_of(&state.phi));
    p
}

fn state_of(p: &[f64], d: usize) -> ProductState {
    let half = 2 * (d - 1);
    ProductState::from_unnormalized(vector_of(&p[..half], d), vector_of(&p[half..], d))
        .expect("angle parametrization yields unit vectors")
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Minimizes `f` along coordinate `i` inside `[p_i − w, p_i + w]`.
fn golden_section(f: &mut impl FnMut(&[f64]) -> f64, p: &mut [f64], i: usize, w: f64, current: f64) -> f64 {
    let x0 = p[i];
    let (mut a, mut b) = (x0 - w, x0 + w);
    let mut at = |x: f64, p: &mut [f64]| {
        p[i] = x;
        f(p)
    };
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = at(x1, p);
    let mut f2 = at(x2, p);
    for _ in 0..24 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = at(x1, p);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = at(x2, p);
        }
    }
    let (xb, fb) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    if fb < current {
        p[i] = xb;
        fb
    } else {
        p[i] = x0;
        current
    }
}

struct Refined {
    params: Vec<f64>,
    value: f64,
    evaluations: usize,
}

/// Coordinate descent; stops early once `stop(value)` holds.
fn refine(
    mut f: impl FnMut(&[f64]) -> f64,
    start: Vec<f64>,
    stop: impl Fn(f64) -> bool,
) -> Refined {
    let mut evaluations = 0usize;
    let mut counted = |p: &[f64]| {
        evaluations += 1;
        f(p)
    };
    let mut p = start;
    let mut value = counted(&p);
    let mut w = 0.8;
    let mut sweeps = 0;
    while w > 1e-7 && sweeps < 200 && !stop(value) {
        let before = value;
        for i in 0..p.len() {
            value = golden_section(&mut counted, &mut p, i, w, value);
            if stop(value) {
                break;
            }
        }
        if before - value < 1e-12 * (1.0 + value.abs()) {
            w *= 0.3;
        }
        sweeps += 1;
    }
    Refined {
        params: p,
        value,
        evaluations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchVerdict {
    CertificateFound,
    /// Heuristic evidence only: no start reached a negative minor.
    NoViolationFound,
}

#[derive(Debug, Clone)]
pub struct SearchReport {
    pub best_state: ProductState,
    pub best_minor: MinorReport,
    pub evaluations: usize,
    pub starts: usize,
    pub verdict: SearchVerdict,
}

fn most_negative_minor(model: &GeneratorModel, state: &ProductState, tol_minor: f64) -> (f64, MinorReport, bool) {
    let analysis = analyze(model, state, tol_minor).expect("dimensions checked by caller");
    let certified = matches!(analysis.verdict, FirstOrderVerdict::Entangling { .. });
    let minor = analysis
        .min_minor()
        .cloned()
        .expect("at least one non-skipped minor");
    (minor.value, minor, certified)
}

/// Multistart search for a product state with a negative non-skipped minor.
///
/// Start 0 is `|0…0⟩ ⊗ |0…0⟩`; the rest are Haar samples drawn from
/// per-start streams of `seed`. Starts run in parallel in fixed batches and
/// the search stops after the first batch containing a certificate, so the
/// report depends only on the inputs.
pub fn find_entangling_state(
    model: &GeneratorModel,
    budget: usize,
    seed: u64,
    tol_minor: f64,
) -> Result<SearchReport> {
    if budget < 1 {
        return Err(Error::InvalidArgument("search budget must be at least 1".into()));
    }
    let d = model.d();
    let run = |index: usize| -> Result<(f64, usize, ProductState, usize, bool)> {
        let start = if index == 0 {
            ProductState::basis_state(d, 0, 0)?
        } else {
            sample_with(d, &mut start_rng(seed, index))?
        };
        let certified = |s: &ProductState| most_negative_minor(model, s, tol_minor).2;
        if certified(&start) {
            let (v, _, _) = most_negative_minor(model, &start, tol_minor);
            return Ok((v, index, start, 1, true));
        }
        let objective = |p: &[f64]| most_negative_minor(model, &state_of(p, d), tol_minor).0;
        // Stop refining once a clear certificate is reached.
        let r = refine(objective, state_params(&start), |v| v < -1e-3);
        let state = state_of(&r.params, d);
        let found = certified(&state);
        Ok((r.value, index, state, r.evaluations + 1, found))
    };

    let mut best: Option<(f64, usize, ProductState)> = None;
    let mut evaluations = 0;
    let mut starts = 0;
    let mut found = false;
    for batch_start in (0..budget).step_by(BATCH) {
        let batch_end = (batch_start + BATCH).min(budget);
        let results: Vec<_> = (batch_start..batch_end)
            .into_par_iter()
            .map(run)
            .collect::<Result<_>>()?;
        for (value, index, state, evals, certified) in results {
            evaluations += evals;
            starts += 1;
            found |= certified;
            let better = match &best {
                None => true,
                Some((bv, bi, _)) => value < *bv || (value == *bv && index < *bi),
            };
            if better {
                best = Some((value, index, state));
            }
        }
        if found {
            break;
        }
    }
    let (_, _, state) = best.expect("budget >= 1");
    let state = state.canonical();
    let (_, best_minor, certified) = most_negative_minor(model, &state, tol_minor);
    Ok(SearchReport {
        best_state: state,
        best_minor,
        evaluations,
        starts,
        verdict: if certified {
            SearchVerdict::CertificateFound
        } else {
            SearchVerdict::NoViolationFound
        },
    })
}

/// Log-spaced check that `exp(tL)[Q]` has negativity above [`TOL_NEG`] for
/// some `t ∈ [1e-4, 0.5]`.
pub fn oracle_confirms(model: &GeneratorModel, state: &ProductState) -> Result<bool> {
    let superop = model.generator().superoperator();
    let rho0 = DensityMatrix::from_product_state(state);
    let n = 60;
    let (lo, hi) = (1e-4f64.ln(), 0.5f64.ln());
    let grid: Vec<f64> = (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect();
    let curve = negativity_curve(&superop, &rho0, model.d(), &grid)?;
    Ok(curve.max_negativity() > TOL_NEG)
}

#[derive(Debug, Clone)]
pub struct CapabilityReport {
    /// Descending.
    pub singular_values: Vec<f64>,
    /// Closed form for `d = 2`, numerical maximum otherwise.
    pub eta_max: f64,
    /// Largest `|⟨u|h12|v⟩|²` found by the search.
    pub eta_found: f64,
    pub closed_form: bool,
    pub maximizer: ProductState,
}

/// `max_{n,m} |⟨u⁽ⁿ⁾|h12|v⁽ᵐ⁾⟩|²` at `state`.
pub fn hamiltonian_condition(h12: &DMatrix<f64>, basis: &BasisSet, state: &ProductState) -> Result<f64> {
    let flips = flip_vectors(state, basis)?;
    let h = h12.map(re);
    let mut best = 0.0f64;
    for u in &flips.u {
        for v in &flips.v {
            best = best.max(linalg::sandwich(u, &h, v).norm_sqr());
        }
    }
    Ok(best)
}

fn default_basis(n: usize) -> Result<BasisSet> {
    let d = ((n + 1) as f64).sqrt().round() as usize;
    if d < 2 || d * d != n + 1 {
        return Err(Error::Dimension(format!("h12 of size {n} is not (d²−1)-square")));
    }
    if d == 2 {
        Ok(pauli_basis())
    } else {
        gellmann_basis(d)
    }
}

/// Entangling capability of `h12` in the Pauli basis (`d = 2`) or the
/// Gell-Mann basis (`d > 2`).
pub fn capability(h12: &DMatrix<f64>, budget: usize, seed: u64) -> Result<CapabilityReport> {
    let basis = default_basis(h12.nrows())?;
    capability_in_basis(h12, &basis, budget, seed)
}

pub fn capability_in_basis(
    h12: &DMatrix<f64>,
    basis: &BasisSet,
    budget: usize,
    seed: u64,
) -> Result<CapabilityReport> {
    let n = basis.len();
    if h12.nrows() != n || h12.ncols() != n {
        return Err(Error::Dimension(format!(
            "h12 is {}x{}, basis has {n} elements",
            h12.nrows(),
            h12.ncols()
        )));
    }
    if h12.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("h12".into()));
    }
    if budget < 1 {
        return Err(Error::InvalidArgument("search budget must be at least 1".into()));
    }
    let mut singular_values: Vec<f64> = h12.clone().svd(false, false).singular_values.iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));

    let d = basis.d;
    let run = |index: usize| -> (f64, usize, Vec<f64>) {
        let start = if index == 0 {
            ProductState::basis_state(d, 0, 0).expect("d >= 2")
        } else {
            sample_with(d, &mut start_rng(seed, index)).expect("d >= 2")
        };
        let objective = |p: &[f64]| {
            -hamiltonian_condition(h12, basis, &state_of(p, d)).expect("dimensions checked")
        };
        let r = refine(objective, state_params(&start), |_| false);
        (r.value, index, r.params)
    };
    let (value, _, params) = (0..budget)
        .into_par_iter()
        .map(run)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .expect("budget >= 1");
    let maximizer = state_of(&params, d).canonical();
    let eta_found = -value;

    let closed_form = d == 2;
    let eta_max = if closed_form {
        let scale = basis.norm_const / 2.0;
        (scale * (singular_values[0] + singular_values[1])).powi(2)
    } else {
        eta_found
    };
    Ok(CapabilityReport {
        singular_values,
        eta_max,
        eta_found,
        closed_form,
        maximizer,
    })
}
