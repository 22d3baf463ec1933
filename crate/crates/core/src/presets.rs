//! Ready-made generator models used by tests, the CLI and the bundled model files.

use crate::basis::{pauli_basis, tensor_pauli_basis};
use crate::generator::{GeneratorModel, KossakowskiBlocks};
use crate::linalg::{c, re, CMatrix};

/// Two qubits under a collective dissipator with `A = B = C` and
/// `A = [[1, 0, i], [0, 0, 0], [−i, 0, x]]` (Pauli basis). Completely
/// positive for `x ≥ 1`.
pub fn collective_qubits(x: f64) -> GeneratorModel {
    let z = re(0.0);
    let a = CMatrix::from_row_slice(
        3,
        3,
        &[re(1.0), z, c(0.0, 1.0), z, z, z, c(0.0, -1.0), z, re(x)],
    );
    let blocks = KossakowskiBlocks::new(a.clone(), a.clone(), a).expect("Hermitian by construction");
    GeneratorModel::dissipative(pauli_basis(), blocks).expect("consistent dimensions")
}

fn single_qubit_block(z: f64) -> CMatrix {
    let o = re(0.0);
    CMatrix::from_row_slice(
        3,
        3,
        &[re(1.0), c(0.0, z), o, c(0.0, -z), re(1.0), o, o, o, o],
    )
}

fn cross_qubit_block(x: f64) -> CMatrix {
    let o = re(0.0);
    CMatrix::from_row_slice(3, 3, &[re(x), o, o, o, re(-x), o, o, o, o])
}

/// Four qubits grouped as two parties of two qubits each (tensor-Pauli basis,
/// `d = 4`). Every qubit sees the single-qubit block `[[1, iz, 0], [−iz, 1, 0],
/// [0, 0, 0]]`; every pair of distinct qubits is coupled by
/// `diag(x, −x, 0)`. Completely positive iff `z² + 9x² ≤ 1`.
pub fn four_qubit_pairs(x: f64, z: f64) -> GeneratorModel {
    let basis = tensor_pauli_basis(2).expect("two qubits");
    let n = basis.len();
    let single = single_qubit_block(z);
    let cross = cross_qubit_block(x);
    // Positions of σ_i on qubit q of a party: q = 0 → "σI", q = 1 → "Iσ".
    let slot = |qubit: usize, i: usize| {
        let letter = ['X', 'Y', 'Z'][i];
        let label = if qubit == 0 {
            format!("{letter}I")
        } else {
            format!("I{letter}")
        };
        basis.index_of(&label).expect("label exists")
    };
    let mut a = CMatrix::zeros(n, n);
    let mut b = CMatrix::zeros(n, n);
    for p in 0..2 {
        for q in 0..2 {
            for i in 0..3 {
                for j in 0..3 {
                    let within = if p == q { single[(i, j)] } else { cross[(i, j)] };
                    a[(slot(p, i), slot(q, j))] += within;
                    b[(slot(p, i), slot(q, j))] += cross[(i, j)];
                }
            }
        }
    }
    let blocks = KossakowskiBlocks::new(a.clone(), b, a).expect("Hermitian by construction");
    GeneratorModel::dissipative(basis, blocks).expect("consistent dimensions")
}

/// Reduction of [`four_qubit_pairs`] to one qubit per party:
/// `K = [[C¹, C²], [C², C¹]]` in the Pauli basis.
pub fn qubit_pair(x: f64, z: f64) -> GeneratorModel {
    let single = single_qubit_block(z);
    let blocks = KossakowskiBlocks::new(single.clone(), cross_qubit_block(x), single)
        .expect("Hermitian by construction");
    GeneratorModel::dissipative(pauli_basis(), blocks).expect("consistent dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::validate_cp;

    #[test]
    fn four_qubit_spectrum() {
        let (x, z) = (0.2, 0.5);
        let report = validate_cp(&four_qubit_pairs(x, z).kossakowski);
        let mut nonzero: Vec<f64> = report
            .eigenvalues
            .iter()
            .copied()
            .filter(|v| v.abs() > 1e-12)
            .collect();
        nonzero.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let mut expected = vec![
            1.0 - (x * x + z * z).sqrt(),
            1.0 + (x * x + z * z).sqrt(),
            1.0 - (9.0 * x * x + z * z).sqrt(),
            1.0 + (9.0 * x * x + z * z).sqrt(),
        ];
        expected.sort_by(f64::total_cmp);
        assert_eq!(nonzero.len(), 4, "{:?}", report.eigenvalues);
        for (g, e) in nonzero.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-10);
        }
        assert!(report.is_cp);
    }

    #[test]
    fn four_qubit_cp_boundary() {
        assert!(!validate_cp(&four_qubit_pairs(0.2, 0.9).kossakowski).is_cp);
        assert!(validate_cp(&four_qubit_pairs(0.2, -0.72).kossakowski).is_cp);
    }
}
