//! Lindblad generators `L = −i[H_eff, ·] + D` for two `d`-level parties.
//!
//! The dissipator uses the operators `G = (F⊗I …, I⊗F …)` of the model's
//! basis and the Kossakowski matrix `K = [[A, B], [B†, C]]` in GKS order:
//!
//! ```text
//! D[ρ] = Σ_ab K_ab (G_a ρ G_b − ½{G_b G_a, ρ})
//! ```
//!
//! so `A_ij` multiplies `F_i⁽¹⁾ ρ F_j⁽¹⁾`, `C_ij` multiplies `F_i⁽²⁾ ρ F_j⁽²⁾`
//! and `B_ij` multiplies `F_i⁽¹⁾ ρ F_j⁽²⁾` (party-1 row index). The effective
//! Hamiltonian is `Σ h1_i F_i⊗I + Σ h2_i I⊗F_i + Σ h12_ij F_i⊗F_j`.

use nalgebra::DMatrix;

use crate::basis::BasisSet;
use crate::linalg::{self, hermiticity_error, kron, re, CMatrix, I};
use crate::{Error, Result};

/// Eigenvalues of `K` above `−TOL_PSD` count as non-negative.
pub const TOL_PSD: f64 = 1e-10;

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct KossakowskiBlocks {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
}

impl KossakowskiBlocks {
    pub fn new(a: CMatrix, b: CMatrix, c: CMatrix) -> Result<Self> {
        let n = a.nrows();
        for (name, m) in [("A", &a), ("B", &b), ("C", &c)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Dimension(format!(
                    "Kossakowski block {name} is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        for (name, m) in [("A", &a), ("C", &c)] {
            let deviation = hermiticity_error(m);
            if deviation > HERMITIAN_TOL {
                return Err(Error::NotHermitian {
                    name: name.into(),
                    deviation,
                });
            }
        }
        Ok(KossakowskiBlocks { a, b, c })
    }

    pub fn zeros(n: usize) -> Self {
        KossakowskiBlocks {
            a: CMatrix::zeros(n, n),
            b: CMatrix::zeros(n, n),
            c: CMatrix::zeros(n, n),
        }
    }

    /// Side length of each block, `d² − 1`.
    pub fn size(&self) -> usize {
        self.a.nrows()
    }

    /// The full `2n × 2n` matrix `[[A, B], [B†, C]]`.
    pub fn assemble(&self) -> CMatrix {
        let n = self.size();
        let mut k = CMatrix::zeros(2 * n, 2 * n);
        k.view_mut((0, 0), (n, n)).copy_from(&self.a);
        k.view_mut((0, n), (n, n)).copy_from(&self.b);
        k.view_mut((n, 0), (n, n)).copy_from(&self.b.adjoint());
        k.view_mut((n, n), (n, n)).copy_from(&self.c);
        k
    }

    pub fn scaled(&self, factor: f64) -> Self {
        KossakowskiBlocks {
            a: &self.a * re(factor),
            b: &self.b * re(factor),
            c: &self.c * re(factor),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub h12: DMatrix<f64>,
}

impl HamiltonianSpec {
    pub fn new(h1: Vec<f64>, h2: Vec<f64>, h12: DMatrix<f64>) -> Result<Self> {
        let n = h1.len();
        if h2.len() != n || h12.nrows() != n || h12.ncols() != n {
            return Err(Error::Dimension(format!(
                "Hamiltonian coefficients have lengths h1={}, h2={}, h12={}x{}",
                n,
                h2.len(),
                h12.nrows(),
                h12.ncols()
            )));
        }
        if h1.iter().chain(&h2).chain(h12.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Hamiltonian coefficient".into()));
        }
        Ok(HamiltonianSpec { h1, h2, h12 })
    }

    pub fn zeros(n: usize) -> Self {
        HamiltonianSpec {
            h1: vec![0.0; n],
            h2: vec![0.0; n],
            h12: DMatrix::zeros(n, n),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorModel {
    pub basis: BasisSet,
    pub kossakowski: KossakowskiBlocks,
    pub hamiltonian: HamiltonianSpec,
}

impl GeneratorModel {
    pub fn new(
        basis: BasisSet,
        kossakowski: KossakowskiBlocks,
        hamiltonian: HamiltonianSpec,
    ) -> Result<Self> {
        let n = basis.len();
        if kossakowski.size() != n {
            return Err(Error::Dimension(format!(
                "Kossakowski blocks are {0}x{0} but the basis has {n} elements",
                kossakowski.size()
            )));
        }
        if hamiltonian.h1.len() != n {
            return Err(Error::Dimension(format!(
                "Hamiltonian has {} coefficients but the basis has {n} elements",
                hamiltonian.h1.len()
            )));
        }
        Ok(GeneratorModel {
            basis,
            kossakowski,
            hamiltonian,
        })
    }

    /// Purely dissipative model.
    pub fn dissipative(basis: BasisSet, kossakowski: KossakowskiBlocks) -> Result<Self> {
        let n = basis.len();
        Self::new(basis, kossakowski, HamiltonianSpec::zeros(n))
    }

    /// Local dimension of each party.
    pub fn d(&self) -> usize {
        self.basis.d
    }

    /// Number of basis elements per party, `d² − 1`.
    pub fn n(&self) -> usize {
        self.basis.len()
    }

    /// Total Hilbert space dimension `d²`.
    pub fn dim(&self) -> usize {
        self.d() * self.d()
    }

    /// The `2n` operators `F_k ⊗ I` followed by `I ⊗ F_k`.
    pub fn jump_operators(&self) -> Vec<CMatrix> {
        let id = linalg::identity(self.d());
        let mut ops: Vec<CMatrix> = self.basis.elements.iter().map(|f| kron(f, &id)).collect();
        ops.extend(self.basis.elements.iter().map(|f| kron(&id, f)));
        ops
    }

    pub fn effective_hamiltonian(&self) -> CMatrix {
        let d = self.d();
        let id = linalg::identity(d);
        let h = &self.hamiltonian;
        let mut out = CMatrix::zeros(d * d, d * d);
        for (k, f) in self.basis.elements.iter().enumerate() {
            if h.h1[k] != 0.0 {
                out += kron(f, &id) * re(h.h1[k]);
            }
            if h.h2[k] != 0.0 {
                out += kron(&id, f) * re(h.h2[k]);
            }
        }
        for (i, fi) in self.basis.elements.iter().enumerate() {
            for (j, fj) in self.basis.elements.iter().enumerate() {
                if h.h12[(i, j)] != 0.0 {
                    out += kron(fi, fj) * re(h.h12[(i, j)]);
                }
            }
        }
        out
    }

    /// Precomputes the operators needed to apply the generator.
    pub fn generator(&self) -> Generator {
        let dim = self.dim();
        let g = self.jump_operators();
        let k = self.kossakowski.assemble();
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut anti = CMatrix::zeros(dim, dim);
        for (a, ga) in g.iter().enumerate() {
            let mut w = CMatrix::zeros(dim, dim);
            let mut any = false;
            for (b, gb) in g.iter().enumerate() {
                let kab = k[(a, b)];
                if kab.norm() != 0.0 {
                    w += gb * kab;
                    any = true;
                }
            }
            if any {
                anti += &w * ga;
                left.push(ga.clone());
                right.push(w);
            }
        }
        Generator {
            dim,
            hamiltonian: self.effective_hamiltonian(),
            left,
            right,
            anti,
        }
    }

    /// Same model with all rates and couplings multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let h = &self.hamiltonian;
        GeneratorModel {
            basis: self.basis.clone(),
            kossakowski: self.kossakowski.scaled(factor),
            hamiltonian: HamiltonianSpec {
                h1: h.h1.iter().map(|v| v * factor).collect(),
                h2: h.h2.iter().map(|v| v * factor).collect(),
                h12: &h.h12 * factor,
            },
        }
    }
}

/// A generator in operator form, `ρ ↦ −i[H, ρ] + Σ_a G_a ρ W_a − ½{N, ρ}`.
#[derive(Debug, Clone)]
pub struct Generator {
    dim: usize,
    hamiltonian: CMatrix,
    left: Vec<CMatrix>,
    right: Vec<CMatrix>,
    anti: CMatrix,
}

impl Generator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let h = &self.hamiltonian;
        let mut out = (h * x - x * h) * (-I);
        for (g, w) in self.left.iter().zip(&self.right) {
            out += g * x * w;
        }
        out -= (&self.anti * x + x * &self.anti) * re(0.5);
        out
    }

    /// `L^k[x]`.
    pub fn apply_power(&self, x: &CMatrix, k: usize) -> CMatrix {
        let mut y = x.clone();
        for _ in 0..k {
            y = self.apply(&y);
        }
        y
    }

    pub fn superoperator(&self) -> Superoperator {
        let dim = self.dim;
        let id = linalg::identity(dim);
        let h = &self.hamiltonian;
        let mut s = (kron(&id, h) - kron(&h.transpose(), &id)) * (-I);
        for (g, w) in self.left.iter().zip(&self.right) {
            s += kron(&w.transpose(), g);
        }
        s -= (kron(&id, &self.anti) + kron(&self.anti.transpose(), &id)) * re(0.5);
        Superoperator { dim, matrix: s }
    }
}

/// Matrix of a linear map on `dim × dim` matrices acting on column-stacked
/// vectors.
#[derive(Debug, Clone)]
pub struct Superoperator {
    pub dim: usize,
    pub matrix: CMatrix,
}

impl Superoperator {
    pub fn zeros(dim: usize) -> Self {
        Superoperator {
            dim,
            matrix: CMatrix::zeros(dim * dim, dim * dim),
        }
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        apply(self, x)
    }

    /// `Self ∘ other` as a superoperator.
    pub fn compose(&self, other: &Superoperator) -> Superoperator {
        Superoperator {
            dim: self.dim,
            matrix: &self.matrix * &other.matrix,
        }
    }
}

pub fn apply(superop: &Superoperator, x: &CMatrix) -> Result<CMatrix> {
    let dim = superop.dim;
    if x.nrows() != dim || x.ncols() != dim {
        return Err(Error::Dimension(format!(
            "superoperator acts on {dim}x{dim} matrices, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    let v = &superop.matrix * linalg::vectorize(x);
    Ok(linalg::unvectorize(&v, dim))
}

pub fn build_superoperator(model: &GeneratorModel) -> Superoperator {
    model.generator().superoperator()
}

/// The superoperator of `T⁽²⁾`, partial transposition on the second factor of
/// `C^d ⊗ C^d`.
pub fn partial_transpose_superoperator(d: usize) -> Superoperator {
    let dim = d * d;
    let mut p = CMatrix::zeros(dim * dim, dim * dim);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let (src_r, src_c) = (i * d + j, k * d + l);
                    let (dst_r, dst_c) = (i * d + l, k * d + j);
                    p[(dst_r + dim * dst_c, src_r + dim * src_c)] = re(1.0);
                }
            }
        }
    }
    Superoperator { dim, matrix: p }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpReport {
    /// Eigenvalues of the assembled `K`, ascending.
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub is_cp: bool,
}

pub fn validate_cp(blocks: &KossakowskiBlocks) -> CpReport {
    let eigenvalues = linalg::hermitian_eigenvalues(&blocks.assemble());
    let min_eigenvalue = eigenvalues.first().copied().unwrap_or(0.0);
    CpReport {
        is_cp: min_eigenvalue >= -TOL_PSD,
        eigenvalues,
        min_eigenvalue,
    }
}

/// The model whose generator is `T⁽²⁾ ∘ L ∘ T⁽²⁾`.
///
/// With `η` the transposition signs of the basis:
///
/// * `Ã = A`, `C̃_ij = η_i η_j C_ji`
/// * `B̃_ij = −η_j (Re B_ij + i h12_ij)`: the interaction Hamiltonian moves
///   into the dissipative cross block
/// * `h̃1 = h1`, `h̃2_i = −η_i h2_i`
/// * `h̃12_ij = −η_j Im B_ij`: the anti-Hermitian part of `B` becomes a
///   Hamiltonian coupling (zero for real `B`)
///
/// `K̃` is generally not positive semidefinite.
pub fn partial_transpose_conjugate(model: &GeneratorModel) -> GeneratorModel {
    let n = model.n();
    let eta: Vec<f64> = (0..n).map(|k| model.basis.sign(k)).collect();
    let k = &model.kossakowski;
    let h = &model.hamiltonian;

    let b = CMatrix::from_fn(n, n, |i, j| {
        let bij = k.b[(i, j)];
        crate::linalg::c(-eta[j] * bij.re, -eta[j] * h.h12[(i, j)])
    });
    let c = CMatrix::from_fn(n, n, |i, j| k.c[(j, i)] * re(eta[i] * eta[j]));
    let h12 = DMatrix::from_fn(n, n, |i, j| -eta[j] * k.b[(i, j)].im);
    let h2 = h.h2.iter().zip(&eta).map(|(v, s)| -s * v).collect();

    GeneratorModel {
        basis: model.basis.clone(),
        kossakowski: KossakowskiBlocks {
            a: k.a.clone(),
            b,
            c,
        },
        hamiltonian: HamiltonianSpec {
            h1: h.h1.clone(),
            h2,
            h12,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::pauli_basis;
    use crate::linalg::{c, CVector};
    use crate::presets::collective_qubits;

    fn assert_spectrum(got: &[f64], expected: &mut Vec<f64>, tol: f64) {
        expected.sort_by(f64::total_cmp);
        assert_eq!(got.len(), expected.len());
        for (g, e) in got.iter().zip(expected.iter()) {
            assert!((g - e).abs() < tol, "got {got:?}, expected {expected:?}");
        }
    }

    #[test]
    fn collective_qubits_kossakowski_is_cp_at_threshold() {
        let report = validate_cp(&collective_qubits(1.0).kossakowski);
        assert!(report.is_cp);
        assert!(report.min_eigenvalue.abs() < 1e-12);
    }

    #[test]
    fn zero_blocks_are_cp() {
        let report = validate_cp(&KossakowskiBlocks::zeros(3));
        assert!(report.is_cp);
        assert!(report.eigenvalues.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn collective_qubits_conjugated_spectrum() {
        for x in [1.0, 2.0] {
            let conj = partial_transpose_conjugate(&collective_qubits(x));
            let eig = validate_cp(&conj.kossakowski).eigenvalues;
            let s2 = 2f64.sqrt();
            let r = (1.0 + x * x).sqrt();
            let mut expected = vec![1.0 + s2, 1.0 - s2, x + r, x - r, 0.0, 0.0];
            assert_spectrum(&eig, &mut expected, 1e-10);
            assert!(!validate_cp(&conj.kossakowski).is_cp);
        }
    }

    #[test]
    fn collective_qubits_conjugated_blocks() {
        let m = collective_qubits(1.3);
        let conj = partial_transpose_conjugate(&m);
        let a = &m.kossakowski.a;
        let re_a = a.map(|z| re(z.re));
        assert_eq!(conj.kossakowski.b, -re_a);
        assert_eq!(conj.kossakowski.c, a.transpose());
        assert_eq!(conj.kossakowski.a, *a);
    }

    #[test]
    fn diagonal_case_keeps_c() {
        let basis = pauli_basis();
        let cdiag = CMatrix::from_diagonal(&CVector::from_vec(vec![re(0.3), re(0.7), re(1.1)]));
        let blocks = KossakowskiBlocks::new(CMatrix::zeros(3, 3), CMatrix::zeros(3, 3), cdiag.clone()).unwrap();
        let m = GeneratorModel::dissipative(basis, blocks).unwrap();
        let conj = partial_transpose_conjugate(&m);
        assert_eq!(conj.kossakowski.c, cdiag);
        assert_eq!(conj.kossakowski.b, CMatrix::zeros(3, 3));
    }

    #[test]
    fn zero_model_gives_zero_superoperator() {
        let m = GeneratorModel::dissipative(pauli_basis(), KossakowskiBlocks::zeros(3)).unwrap();
        let s = build_superoperator(&m);
        assert_eq!(s.matrix.norm(), 0.0);
    }

    #[test]
    fn local_z_rotation_leaves_commuting_state() {
        let mut h = HamiltonianSpec::zeros(3);
        h.h1[2] = 0.8;
        let m = GeneratorModel::new(pauli_basis(), KossakowskiBlocks::zeros(3), h).unwrap();
        let rho = kron(
            &CMatrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(0.0)]),
            &(linalg::identity(2) * re(0.5)),
        );
        let out = build_superoperator(&m).apply(&rho).unwrap();
        assert!(out.norm() < 1e-15);
    }

    #[test]
    fn trace_preserved_on_maximally_mixed() {
        let s = build_superoperator(&collective_qubits(1.0));
        let out = s.apply(&(linalg::identity(4) * re(0.25))).unwrap();
        assert!(out.trace().norm() < 1e-14);
    }

    #[test]
    fn apply_rejects_wrong_shape() {
        let s = Superoperator::zeros(4);
        assert!(s.apply(&CMatrix::zeros(3, 3)).is_err());
        let zero = s.apply(&CMatrix::identity(4, 4)).unwrap();
        assert_eq!(zero.norm(), 0.0);
    }

    #[test]
    fn block_shape_and_hermiticity_checked() {
        let a = CMatrix::from_row_slice(2, 2, &[re(1.0), re(1.0), re(0.0), re(1.0)]);
        assert!(matches!(
            KossakowskiBlocks::new(a, CMatrix::zeros(2, 2), CMatrix::zeros(2, 2)),
            Err(Error::NotHermitian { .. })
        ));
        assert!(matches!(
            KossakowskiBlocks::new(CMatrix::zeros(2, 2), CMatrix::zeros(3, 3), CMatrix::zeros(2, 2)),
            Err(Error::Dimension(_))
        ));
        assert!(GeneratorModel::dissipative(pauli_basis(), KossakowskiBlocks::zeros(8)).is_err());
    }

    #[test]
    fn operator_and_matrix_forms_agree() {
        let m = collective_qubits(1.7);
        let g = m.generator();
        let s = g.superoperator();
        let x = CMatrix::from_fn(4, 4, |i, j| c((i + 2 * j) as f64 * 0.1, (i as f64 - j as f64) * 0.3));
        let diff = g.apply(&x) - s.apply(&x).unwrap();
        assert!(diff.norm() < 1e-13);
    }

    #[test]
    fn partial_transpose_superoperator_is_involution() {
        let p = partial_transpose_superoperator(3);
        let pp = p.compose(&p);
        assert!((pp.matrix - CMatrix::identity(81, 81)).norm() < 1e-15);
    }
}
