//! First-order entanglement-generation witnesses.
//!
//! For a product state `Q = |ψ⟩⟨ψ| ⊗ |φ⟩⟨φ|` the partial transpose is
//! `Q̃ = |ψ⟩⟨ψ| ⊗ |φ*⟩⟨φ*|`. Complete `ψ` and `φ*` to orthonormal bases
//! `{ψ_k}`, `{φ_ℓ}` and enumerate `Ψ_{d(k−1)+ℓ} = ψ_k ⊗ φ_ℓ`. Only the
//! `2(d−1)` vectors with `k = 1` or `ℓ = 1` (other than `Ψ₁`) see a nonzero
//! first-order response `⟨Ψ_i|L̃[Q̃]|Ψ_j⟩`; that block is the witness
//! matrix `M`, ordered as `ψ₁⊗φ₂ … ψ₁⊗φ_d` (the C-block) followed by
//! `ψ₂⊗φ₁ … ψ_d⊗φ₁` (the A-block).
//!
//! A negative principal minor of `M` yields a direction `Φ ⊥ Ψ₁` with
//! `⟨Φ|L̃[Q̃]|Φ⟩ < 0`, so `exp(tL̃)[Q̃]` leaves the positive cone for small
//! `t > 0` and `exp(tL)[Q]` is entangled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::basis::BasisSet;
use crate::generator::{partial_transpose_conjugate, Generator, GeneratorModel};
use crate::linalg::{self, c, kron_vec, re, CMatrix, CVector};
use crate::{Error, Result};

/// Default marginality band, relative to the scale of `M`.
pub const DEFAULT_TOL_MINOR: f64 = 1e-9;

/// Highest expansion order tried when resolving a marginal case.
pub const MAX_EXPANSION_ORDER: usize = 3;

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    pub psi: CVector,
    pub phi: CVector,
}

impl ProductState {
    pub fn new(psi: CVector, phi: CVector) -> Result<Self> {
        if psi.len() != phi.len() {
            return Err(Error::Dimension(format!(
                "party vectors have lengths {} and {}",
                psi.len(),
                phi.len()
            )));
        }
        if psi.len() < 2 {
            return Err(Error::InvalidArgument("local dimension must be at least 2".into()));
        }
        for v in [&psi, &phi] {
            let n = v.norm();
            if (n - 1.0).abs() > NORM_TOL {
                return Err(Error::NotNormalized(n));
            }
        }
        Ok(ProductState { psi, phi })
    }

    pub fn from_unnormalized(psi: CVector, phi: CVector) -> Result<Self> {
        let (np, nf) = (psi.norm(), phi.norm());
        if np == 0.0 || nf == 0.0 || !np.is_finite() || !nf.is_finite() {
            return Err(Error::InvalidArgument("state vector has zero or non-finite norm".into()));
        }
        Self::new(psi / re(np), phi / re(nf))
    }

    /// `|k⟩ ⊗ |l⟩` in the computational basis.
    pub fn basis_state(d: usize, k: usize, l: usize) -> Result<Self> {
        if k >= d || l >= d {
            return Err(Error::InvalidArgument(format!(
                "basis state |{k}{l}> out of range for d = {d}"
            )));
        }
        let e = |i| {
            let mut v = CVector::zeros(d);
            v[i] = re(1.0);
            v
        };
        Self::new(e(k), e(l))
    }

    pub fn d(&self) -> usize {
        self.psi.len()
    }

    /// `|ψ⟩ ⊗ |φ⟩`.
    pub fn product_vector(&self) -> CVector {
        kron_vec(&self.psi, &self.phi)
    }

    pub fn projector(&self) -> CMatrix {
        let v = self.product_vector();
        &v * v.adjoint()
    }

    /// `T⁽²⁾[Q] = |ψ⟩⟨ψ| ⊗ |φ*⟩⟨φ*|`.
    pub fn transposed_projector(&self) -> CMatrix {
        let v = kron_vec(&self.psi, &self.phi.conjugate());
        &v * v.adjoint()
    }

    /// Same physical state with the first nonzero amplitude of each factor
    /// made real and non-negative.
    pub fn canonical(&self) -> Self {
        ProductState {
            psi: gauge_fix(&self.psi),
            phi: gauge_fix(&self.phi),
        }
    }
}

fn gauge_fix(v: &CVector) -> CVector {
    match v.iter().find(|z| z.norm() > 1e-15) {
        Some(first) => v * (first.conj() / re(first.norm())),
        None => v.clone(),
    }
}

/// Orthonormal basis of `C^d` whose first element is exactly `x`.
///
/// Built from the Householder reflection `H` that maps `e₁` to `e^{−iθ} x`
/// (`θ` the phase of `x₀`); the remaining columns are `e^{iθ} H e_k`. For a
/// computational basis vector `e_j` this is the canonical basis with `e₁` and
/// `e_j` swapped.
pub fn complement_basis(x: &CVector) -> Result<Vec<CVector>> {
    let d = x.len();
    let norm = x.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::InvalidArgument("cannot complete a zero vector".into()));
    }
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(norm));
    }
    let phase = if x[0].norm() > 0.0 {
        x[0] / re(x[0].norm())
    } else {
        re(1.0)
    };
    let y = x * phase.conj();
    let mut w = -y.clone();
    w[0] += re(1.0);
    let wn2 = w.norm_squared();
    let mut out = Vec::with_capacity(d);
    out.push(x.clone());
    for k in 1..d {
        let mut col = CVector::zeros(d);
        col[k] = re(1.0);
        if wn2 > 1e-30 {
            let proj = w[k].conj() * re(2.0 / wn2);
            col -= &w * proj;
        }
        out.push(col * phase);
    }
    Ok(out)
}

/// The vectors `u⁽ⁿ⁾_i = ⟨ψ₁|F_i|ψ_n⟩` and `v⁽ᵐ⁾_i = η_i ⟨φ₁|F_i|φ_m⟩`
/// (`φ₁ = φ*`), for `n, m = 2..d`.
#[derive(Debug, Clone)]
pub struct FlipVectors {
    pub u: Vec<CVector>,
    pub v: Vec<CVector>,
    /// `ψ₁ = ψ, ψ₂, …, ψ_d`.
    pub psi_basis: Vec<CVector>,
    /// `φ₁ = φ*, φ₂, …, φ_d`.
    pub phi_basis: Vec<CVector>,
}

pub fn flip_vectors(state: &ProductState, basis: &BasisSet) -> Result<FlipVectors> {
    if state.d() != basis.d {
        return Err(Error::Dimension(format!(
            "state has local dimension {} but the basis has d = {}",
            state.d(),
            basis.d
        )));
    }
    let psi_basis = complement_basis(&state.psi)?;
    let phi_basis = complement_basis(&state.phi.conjugate())?;
    let flips = |first: &CVector, others: &[CVector], signed: bool| -> Vec<CVector> {
        others
            .iter()
            .map(|other| {
                CVector::from_iterator(
                    basis.len(),
                    basis.elements.iter().enumerate().map(|(i, f)| {
                        let s = if signed { basis.sign(i) } else { 1.0 };
                        linalg::sandwich(first, f, other) * re(s)
                    }),
                )
            })
            .collect()
    };
    let u = flips(&psi_basis[0], &psi_basis[1..], false);
    let v = flips(&phi_basis[0], &phi_basis[1..], true);
    Ok(FlipVectors {
        u,
        v,
        psi_basis,
        phi_basis,
    })
}

#[derive(Debug, Clone)]
pub struct WitnessMatrix {
    pub m: CMatrix,
    pub flips: FlipVectors,
}

impl WitnessMatrix {
    /// `d − 1`, the side of each diagonal block.
    pub fn block(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn d(&self) -> usize {
        self.block() + 1
    }

    /// Spectral norm (largest |eigenvalue|).
    pub fn scale(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.m)
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Composite vector `Ψ` associated with row `i` of `M`.
    pub fn direction(&self, i: usize) -> CVector {
        let m = self.block();
        let f = &self.flips;
        if i < m {
            kron_vec(&f.psi_basis[0], &f.phi_basis[i + 1])
        } else {
            kron_vec(&f.psi_basis[i - m + 1], &f.phi_basis[0])
        }
    }

    /// Maps coefficients over the rows of `M` to a vector in `C^{d²}`.
    pub fn embed(&self, coefficients: &CVector) -> CVector {
        let mut out = CVector::zeros(self.d() * self.d());
        for (i, a) in coefficients.iter().enumerate() {
            out += self.direction(i) * *a;
        }
        out
    }

    /// `Ψ_{d(k−1)+ℓ} = ψ_k ⊗ φ_ℓ`, with 1-based `k, ℓ`.
    pub fn composite_basis_vector(&self, k: usize, l: usize) -> CVector {
        kron_vec(&self.flips.psi_basis[k - 1], &self.flips.phi_basis[l - 1])
    }
}

/// Builds `M` from the flip vectors:
///
/// * C-block: `⟨v⁽ᵅ⁾|Cᵀ|v⁽ᵝ⁾⟩`
/// * A-block: `⟨u⁽ᵅ⁾|A|u⁽ᵝ⁾⟩`
/// * cross block (C rows, A columns): `−⟨v⁽ᵅ⁾|(Re B)ᵀ − i h12ᵀ|u⁽ᵝ⁾⟩`
pub fn witness_matrix(model: &GeneratorModel, state: &ProductState) -> Result<WitnessMatrix> {
    let flips = flip_vectors(state, &model.basis)?;
    witness_from_flips(model, flips)
}

/// [`witness_matrix`] for explicitly supplied flip vectors.
pub fn witness_from_flips(model: &GeneratorModel, flips: FlipVectors) -> Result<WitnessMatrix> {
    let n = model.n();
    if flips.u.iter().chain(&flips.v).any(|x| x.len() != n) || flips.u.len() != flips.v.len() {
        return Err(Error::Dimension(format!("flip vectors must have length {n}")));
    }
    let k = &model.kossakowski;
    let ct = k.c.transpose();
    let cross = CMatrix::from_fn(n, n, |i, j| {
        c(k.b[(j, i)].re, -model.hamiltonian.h12[(j, i)])
    });
    let m = flips.u.len();
    let mut out = CMatrix::zeros(2 * m, 2 * m);
    for a in 0..m {
        for b in 0..m {
            out[(a, b)] = linalg::sandwich(&flips.v[a], &ct, &flips.v[b]);
            out[(m + a, m + b)] = linalg::sandwich(&flips.u[a], &k.a, &flips.u[b]);
            let x = -linalg::sandwich(&flips.v[a], &cross, &flips.u[b]);
            out[(a, m + b)] = x;
            out[(m + b, a)] = x.conj();
        }
    }
    Ok(WitnessMatrix { m: out, flips })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinorReport {
    /// Zero-based rows/columns of `M` selected.
    pub indices: Vec<usize>,
    pub value: f64,
    /// Lies entirely inside one diagonal block; such minors are minors of a
    /// Gram matrix of a PSD block and cannot be negative when `K ⪰ 0`.
    pub skipped: bool,
}

impl MinorReport {
    pub fn order(&self) -> usize {
        self.indices.len()
    }
}

/// All `2^{2(d−1)} − 1` principal minors in increasing bitmask order.
pub fn principal_minors(m: &WitnessMatrix) -> Vec<MinorReport> {
    let size = m.m.nrows();
    let block = m.block();
    let low_mask = (1usize << block) - 1;
    let high_mask = low_mask << block;
    (1usize..(1 << size))
        .map(|mask| {
            let indices: Vec<usize> = (0..size).filter(|i| mask & (1 << i) != 0).collect();
            let sub = linalg::principal_submatrix(&m.m, &indices);
            MinorReport {
                value: sub.determinant().re,
                skipped: mask & !low_mask == 0 || mask & !high_mask == 0,
                indices,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub enum FirstOrderVerdict {
    Entangling { certificate: MinorReport },
    NoViolation,
    Marginal {
        minor: MinorReport,
        /// Orthonormal null directions of `M`, embedded in `C^{d²}`.
        null_vectors: Vec<CVector>,
    },
}

impl FirstOrderVerdict {
    pub fn is_entangling(&self) -> bool {
        matches!(self, FirstOrderVerdict::Entangling { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            FirstOrderVerdict::Entangling { .. } => "entangling",
            FirstOrderVerdict::NoViolation => "no_violation",
            FirstOrderVerdict::Marginal { .. } => "marginal",
        }
    }
}

/// Everything computed at first order for one state.
#[derive(Debug, Clone)]
pub struct WitnessAnalysis {
    pub matrix: WitnessMatrix,
    pub minors: Vec<MinorReport>,
    pub verdict: FirstOrderVerdict,
}

impl WitnessAnalysis {
    /// Most negative non-skipped minor.
    pub fn min_minor(&self) -> Option<&MinorReport> {
        self.minors
            .iter()
            .filter(|r| !r.skipped)
            .min_by(|a, b| a.value.total_cmp(&b.value))
    }
}

fn minor_band(tol_minor: f64, scale: f64, order: usize) -> f64 {
    tol_minor * scale.powi(order as i32)
}

pub fn analyze(model: &GeneratorModel, state: &ProductState, tol_minor: f64) -> Result<WitnessAnalysis> {
    let matrix = witness_matrix(model, state)?;
    let minors = principal_minors(&matrix);
    let scale = matrix.scale();

    let mut certificate: Option<&MinorReport> = None;
    let mut marginal: Option<&MinorReport> = None;
    for r in minors.iter().filter(|r| !r.skipped) {
        let band = minor_band(tol_minor, scale, r.order());
        if r.value < -band {
            // lowest order first, then most negative
            if certificate.is_none_or(|c| (r.order(), r.value) < (c.order(), c.value)) {
                certificate = Some(r);
            }
        } else if r.value <= band && marginal.is_none() {
            marginal = Some(r);
        }
    }

    let verdict = match (certificate, marginal) {
        (Some(cert), _) => FirstOrderVerdict::Entangling {
            certificate: cert.clone(),
        },
        (None, Some(minor)) => FirstOrderVerdict::Marginal {
            minor: minor.clone(),
            null_vectors: null_directions(&matrix, minor, tol_minor * scale),
        },
        (None, None) => FirstOrderVerdict::NoViolation,
    };
    Ok(WitnessAnalysis {
        matrix,
        minors,
        verdict,
    })
}

fn null_directions(matrix: &WitnessMatrix, minor: &MinorReport, threshold: f64) -> Vec<CVector> {
    let mut kernel: Vec<CVector> = linalg::hermitian_eigen(&matrix.m)
        .into_iter()
        .filter(|(v, _)| v.abs() <= threshold)
        .map(|(_, vec)| vec)
        .collect();
    if kernel.is_empty() {
        // M itself is regular (only possible for non-PSD K); use the kernel of
        // the marginal submatrix padded with zeros.
        let sub = linalg::principal_submatrix(&matrix.m, &minor.indices);
        let (_, vec) = linalg::hermitian_eigen(&sub)
            .into_iter()
            .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
            .expect("non-empty submatrix");
        let mut padded = CVector::zeros(matrix.m.nrows());
        for (pos, &i) in minor.indices.iter().enumerate() {
            padded[i] = vec[pos];
        }
        kernel.push(padded);
    }
    let embedded: Vec<CVector> = kernel.iter().map(|y| matrix.embed(y)).collect();
    linalg::orthonormalize(&embedded, 1e-8)
}

pub fn first_order_verdict(
    model: &GeneratorModel,
    state: &ProductState,
    tol_minor: f64,
) -> Result<FirstOrderVerdict> {
    Ok(analyze(model, state, tol_minor)?.verdict)
}

/// `⟨φ|L̃ᵏ[Q̃]|φ⟩`, the coefficient of `tᵏ/k!` in `⟨φ|exp(tL̃)[Q̃]|φ⟩`.
pub fn expansion_coefficient(
    model: &GeneratorModel,
    state: &ProductState,
    phi: &CVector,
    k: usize,
) -> Result<f64> {
    let conj = partial_transpose_conjugate(model).generator();
    expansion_with(&conj, state, phi, k).map(|(value, _)| value)
}

/// Returns the coefficient and the Frobenius norm of `L̃ᵏ[Q̃]`.
fn expansion_with(
    conj: &Generator,
    state: &ProductState,
    phi: &CVector,
    k: usize,
) -> Result<(f64, f64)> {
    if k < 1 {
        return Err(Error::InvalidArgument("expansion order must be at least 1".into()));
    }
    if phi.len() != conj.dim() {
        return Err(Error::Dimension(format!(
            "direction has length {}, expected {}",
            phi.len(),
            conj.dim()
        )));
    }
    let q = state.transposed_projector();
    let scale = phi.norm_squared().max(1.0);
    let overlap = linalg::sandwich(phi, &q, phi).re;
    if overlap.abs() > 1e-10 * scale {
        return Err(Error::InvalidArgument(format!(
            "direction is not orthogonal to the transposed state (overlap {overlap:.3e})"
        )));
    }
    let y = conj.apply_power(&q, k);
    let value = linalg::sandwich(phi, &y, phi);
    let size = y.norm();
    if value.im.abs() > 1e-10 * (size * phi.norm_squared()).max(1.0) {
        return Err(Error::ToleranceBreach(format!(
            "expansion coefficient has imaginary part {:.3e}",
            value.im
        )));
    }
    Ok((value.re, size))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionStep {
    pub order: usize,
    /// Smallest coefficient over the candidate directions at this order.
    pub min_coefficient: f64,
    pub band: f64,
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedVerdict {
    Entangling { order: usize },
    NoViolation { order: usize },
    Undecided,
}

impl ResolvedVerdict {
    pub fn is_entangling(&self) -> bool {
        matches!(self, ResolvedVerdict::Entangling { .. })
    }

    /// `entangling@k`, `no_violation@k` or `undecided`.
    pub fn label(&self) -> String {
        match self {
            ResolvedVerdict::Entangling { order } => format!("entangling@{order}"),
            ResolvedVerdict::NoViolation { order } => format!("no_violation@{order}"),
            ResolvedVerdict::Undecided => "undecided".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Resolution {
    pub analysis: WitnessAnalysis,
    pub steps: Vec<ExpansionStep>,
    pub verdict: ResolvedVerdict,
}

const RANDOM_KERNEL_COMBINATIONS: usize = 8;

/// First-order verdict, with marginal cases pushed to second and third order.
///
/// Candidate directions are the null vectors of `M` plus a few fixed
/// pseudo-random combinations of them. At each order a candidate below the
/// band decides `Entangling`; candidates inside the band carry over to the
/// next order; if none remain the verdict is `NoViolation` at that order.
pub fn resolve_verdict(model: &GeneratorModel, state: &ProductState, tol_minor: f64) -> Result<Resolution> {
    let analysis = analyze(model, state, tol_minor)?;
    let null_vectors = match &analysis.verdict {
        FirstOrderVerdict::Entangling { .. } => {
            return Ok(Resolution {
                analysis,
                steps: Vec::new(),
                verdict: ResolvedVerdict::Entangling { order: 1 },
            })
        }
        FirstOrderVerdict::NoViolation => {
            return Ok(Resolution {
                analysis,
                steps: Vec::new(),
                verdict: ResolvedVerdict::NoViolation { order: 1 },
            })
        }
        FirstOrderVerdict::Marginal { null_vectors, .. } => null_vectors.clone(),
    };

    let mut candidates = null_vectors.clone();
    if null_vectors.len() > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..RANDOM_KERNEL_COMBINATIONS {
            let mut combo = CVector::zeros(null_vectors[0].len());
            for v in &null_vectors {
                let w = c(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                combo += v * w;
            }
            let n = combo.norm();
            if n > 1e-12 {
                candidates.push(combo / re(n));
            }
        }
    }

    let conj = partial_transpose_conjugate(model).generator();
    let mut steps = Vec::new();
    for order in 2..=MAX_EXPANSION_ORDER {
        let mut values = Vec::with_capacity(candidates.len());
        let mut size = 0.0f64;
        for phi in &candidates {
            let (value, s) = expansion_with(&conj, state, phi, order)?;
            size = size.max(s);
            values.push(value);
        }
        let band = tol_minor * size;
        let min_coefficient = values.iter().copied().fold(f64::INFINITY, f64::min);
        steps.push(ExpansionStep {
            order,
            min_coefficient,
            band,
            candidates: candidates.len(),
        });
        if min_coefficient < -band {
            return Ok(Resolution {
                analysis,
                steps,
                verdict: ResolvedVerdict::Entangling { order },
            });
        }
        candidates = candidates
            .into_iter()
            .zip(values)
            .filter(|(_, v)| v.abs() <= band)
            .map(|(phi, _)| phi)
            .collect();
        if candidates.is_empty() {
            return Ok(Resolution {
                analysis,
                steps,
                verdict: ResolvedVerdict::NoViolation { order },
            });
        }
    }
    Ok(Resolution {
        analysis,
        steps,
        verdict: ResolvedVerdict::Undecided,
    })
}
