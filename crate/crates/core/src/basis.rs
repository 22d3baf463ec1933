//! Traceless Hermitian operator bases with transposition signs.
//!
//! Every basis stores its elements `F_k` (identity excluded), the signs
//! `η_k ∈ {+1, −1}` with `F_kᵀ = η_k F_k`, and the normalization constant
//! `c` with `Tr(F_i F_j) = c δ_ij`.
//!
//! Element ordering is part of the model-file contract:
//!
//! * [`pauli_basis`]: `σ₁, σ₂, σ₃`, labelled `X, Y, Z`.
//! * [`gellmann_basis`]: symmetric family `S_jk`, then antisymmetric family
//!   `A_jk` (both over `j < k` in row-major order), then diagonal family
//!   `D_l`, `l = 1..d−1`. Labels use 1-based level indices, e.g. `S12`.
//! * [`tensor_pauli_basis`]: Pauli words over `I < X < Y < Z` in lexicographic
//!   order (first factor most significant) with the all-identity word removed.

use crate::linalg::{c, re, CMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Pauli,
    GellMann,
    TensorPauli { qubits: usize },
}

#[derive(Debug, Clone)]
pub struct BasisSet {
    pub kind: BasisKind,
    pub d: usize,
    pub elements: Vec<CMatrix>,
    pub signs: Vec<i8>,
    pub norm_const: f64,
    pub labels: Vec<String>,
}

impl BasisSet {
    fn from_elements(
        kind: BasisKind,
        d: usize,
        elements: Vec<CMatrix>,
        labels: Vec<String>,
        norm_const: f64,
    ) -> Self {
        let signs = elements.iter().map(transposition_sign).collect();
        BasisSet {
            kind,
            d,
            elements,
            signs,
            norm_const,
            labels,
        }
    }

    /// Number of traceless elements, `d² − 1`.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn sign(&self, k: usize) -> f64 {
        f64::from(self.signs[k])
    }

    /// Position of the element carrying `label`, if any.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.eq_ignore_ascii_case(label))
    }
}

/// `+1` if `F` is symmetric, `−1` if antisymmetric. Constructors only ever
/// produce one of the two, so anything else is a construction bug.
fn transposition_sign(f: &CMatrix) -> i8 {
    let t = f.transpose();
    if &t == f {
        1
    } else if t == -f.clone() {
        -1
    } else {
        panic!("basis element is neither symmetric nor antisymmetric under transposition")
    }
}

fn pauli_matrices() -> [CMatrix; 4] {
    let z = re(0.0);
    let one = re(1.0);
    [
        CMatrix::identity(2, 2),
        CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        CMatrix::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
        CMatrix::from_row_slice(2, 2, &[one, z, z, re(-1.0)]),
    ]
}

/// Pauli matrices in the `σ₃` eigenbasis, `c = 2`, signs `(+1, −1, +1)`.
pub fn pauli_basis() -> BasisSet {
    let p = pauli_matrices();
    BasisSet::from_elements(
        BasisKind::Pauli,
        2,
        vec![p[1].clone(), p[2].clone(), p[3].clone()],
        vec!["X".into(), "Y".into(), "Z".into()],
        2.0,
    )
}

/// Generalized Gell-Mann matrices, orthonormal (`c = 1`).
pub fn gellmann_basis(d: usize) -> Result<BasisSet> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "Gell-Mann basis needs d >= 2, got {d}"
        )));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut elements = Vec::with_capacity(d * d - 1);
    let mut labels = Vec::with_capacity(d * d - 1);

    for j in 0..d {
        for k in j + 1..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = re(s);
            m[(k, j)] = re(s);
            elements.push(m);
            labels.push(format!("S{}{}", j + 1, k + 1));
        }
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = c(0.0, -s);
            m[(k, j)] = c(0.0, s);
            elements.push(m);
            labels.push(format!("A{}{}", j + 1, k + 1));
        }
    }
    for l in 1..d {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for j in 0..l {
            m[(j, j)] = re(norm);
        }
        m[(l, l)] = re(-(l as f64) * norm);
        elements.push(m);
        labels.push(format!("D{l}"));
    }
    Ok(BasisSet::from_elements(
        BasisKind::GellMann,
        d,
        elements,
        labels,
        1.0,
    ))
}

/// Non-identity `n`-fold tensor products of Pauli matrices, `d = 2ⁿ`, `c = 2ⁿ`.
pub fn tensor_pauli_basis(n: usize) -> Result<BasisSet> {
    if n < 1 {
        return Err(Error::InvalidArgument(
            "tensor Pauli basis needs at least one qubit".into(),
        ));
    }
    if n > 6 {
        return Err(Error::InvalidArgument(format!(
            "tensor Pauli basis with {n} qubits per party is too large"
        )));
    }
    let paulis = pauli_matrices();
    const LETTERS: [char; 4] = ['I', 'X', 'Y', 'Z'];
    let count = 4usize.pow(n as u32);
    let mut elements = Vec::with_capacity(count - 1);
    let mut labels = Vec::with_capacity(count - 1);
    for word in 1..count {
        let mut m = CMatrix::identity(1, 1);
        let mut label = String::with_capacity(n);
        for pos in (0..n).rev() {
            let letter = (word / 4usize.pow(pos as u32)) % 4;
            m = crate::linalg::kron(&m, &paulis[letter]);
            label.push(LETTERS[letter]);
        }
        elements.push(m);
        labels.push(label);
    }
    let d = 1usize << n;
    Ok(BasisSet::from_elements(
        BasisKind::TensorPauli { qubits: n },
        d,
        elements,
        labels,
        d as f64,
    ))
}
