//! Brute-force evolution oracle.
//!
//! States are propagated with the full semigroup `exp(tL)`, partially
//! transposed and checked for negative eigenvalues. For `d = 2` a negative
//! partial-transpose eigenvalue is equivalent to entanglement; for `d ≥ 3` it
//! only implies it.

use rayon::prelude::*;

use crate::generator::{GeneratorModel, Superoperator};
use crate::linalg::{self, re, CMatrix};
use crate::witness::ProductState;
use crate::{Error, Result};

/// Negativity threshold for calling a state entangled.
pub const TOL_NEG: f64 = 1e-8;

/// Allowed trace and Hermiticity drift of an evolved state.
pub const TOL_DRIFT: f64 = 1e-9;

const TOL_STATE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: CMatrix,
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity, each to 1e-10.
    pub fn new(rho: CMatrix) -> Result<Self> {
        if rho.nrows() != rho.ncols() || rho.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "density matrix must be square, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("density matrix entry".into()));
        }
        let herm = linalg::hermiticity_error(&rho);
        if herm > TOL_STATE {
            return Err(Error::NotHermitian {
                name: "rho".into(),
                deviation: herm,
            });
        }
        let tr = rho.trace();
        if (tr - re(1.0)).norm() > TOL_STATE {
            return Err(Error::InvalidArgument(format!("density matrix has trace {tr}")));
        }
        let min = linalg::min_hermitian_eigenvalue(&rho);
        if min < -TOL_STATE {
            return Err(Error::InvalidArgument(format!(
                "density matrix has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(DensityMatrix { rho })
    }

    /// Evolved states are not re-checked for positivity: a non-CP generator
    /// legitimately leaves the state cone.
    fn evolved(rho: CMatrix) -> Self {
        DensityMatrix { rho }
    }

    pub fn from_product_state(state: &ProductState) -> Self {
        DensityMatrix {
            rho: state.projector(),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> CMatrix {
        self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace_error(&self) -> f64 {
        (self.rho.trace() - re(1.0)).norm()
    }
}

/// `exp(t S)` as a superoperator.
pub fn propagator(superop: &Superoperator, t: f64) -> Result<Superoperator> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("evolution time must be >= 0, got {t}")));
    }
    let matrix = (&superop.matrix * re(t)).exp();
    if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite(format!("propagator at t = {t}")));
    }
    Ok(Superoperator {
        dim: superop.dim,
        matrix,
    })
}

fn propagate(prop: &Superoperator, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    let rho = prop.apply(rho0.matrix())?;
    if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("evolved state".into()));
    }
    let out = DensityMatrix::evolved(rho);
    let drift = out.trace_error();
    if drift > TOL_DRIFT {
        return Err(Error::ToleranceBreach(format!("trace drifted by {drift:.3e}")));
    }
    let herm = linalg::hermiticity_error(out.matrix());
    if herm > TOL_DRIFT {
        return Err(Error::ToleranceBreach(format!("Hermiticity drifted by {herm:.3e}")));
    }
    Ok(out)
}

/// `exp(tL)[ρ₀]`, without renormalization.
pub fn evolve(superop: &Superoperator, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    if rho0.dim() != superop.dim {
        return Err(Error::Dimension(format!(
            "state is {}x{}, superoperator acts on {}x{}",
            rho0.dim(),
            rho0.dim(),
            superop.dim,
            superop.dim
        )));
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    propagate(&propagator(superop, t)?, rho0)
}

/// Transposes the second tensor factor: `ρ[(i,j),(k,l)] → ρ[(i,l),(k,j)]`.
pub fn partial_transpose(rho: &CMatrix, d: usize) -> Result<CMatrix> {
    let dim = d * d;
    if d == 0 || rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::Dimension(format!(
            "expected a {dim}x{dim} matrix for d = {d}, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let mut out = CMatrix::zeros(dim, dim);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    out[(i * d + l, k * d + j)] = rho[(i * d + j, k * d + l)];
                }
            }
        }
    }
    Ok(out)
}

/// Smallest eigenvalue of the partial transpose.
pub fn min_pt_eigenvalue(rho: &DensityMatrix, d: usize) -> Result<f64> {
    let pt = partial_transpose(rho.matrix(), d)?;
    Ok(linalg::min_hermitian_eigenvalue(&pt))
}

/// Sum of the absolute values of the negative partial-transpose eigenvalues.
pub fn negativity(rho: &DensityMatrix, d: usize) -> Result<f64> {
    let pt = partial_transpose(rho.matrix(), d)?;
    Ok(pt_negativity(&pt).0)
}

/// `(negativity, min eigenvalue)` of an already transposed matrix.
fn pt_negativity(pt: &CMatrix) -> (f64, f64) {
    let ev = linalg::hermitian_eigenvalues(pt);
    let neg = ev.iter().filter(|v| **v < 0.0).fold(0.0, |acc, v| acc - v);
    (neg, ev.first().copied().unwrap_or(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegativityCurve {
    pub times: Vec<f64>,
    pub negativities: Vec<f64>,
    pub min_pt_eigenvalues: Vec<f64>,
    pub trace_errors: Vec<f64>,
}

impl NegativityCurve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest negativity on the grid.
    pub fn max_negativity(&self) -> f64 {
        self.negativities.iter().copied().fold(0.0, f64::max)
    }

    pub fn first_entangled(&self) -> Option<usize> {
        self.negativities.iter().position(|n| *n > TOL_NEG)
    }
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("time grid is empty".into()));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidArgument("time grid must be finite and nonnegative".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Evaluates negativity along `times`. Grid points are independent and run in
/// parallel.
pub fn negativity_curve(
    superop: &Superoperator,
    rho0: &DensityMatrix,
    d: usize,
    times: &[f64],
) -> Result<NegativityCurve> {
    check_grid(times)?;
    let row = |rho: &DensityMatrix| -> Result<(f64, f64, f64)> {
        let pt = partial_transpose(rho.matrix(), d)?;
        let (neg, min) = pt_negativity(&pt);
        Ok((neg, min, rho.trace_error()))
    };
    let rows: Vec<(f64, f64, f64)> = if let Some(h) = uniform_step(times) {
        // one exponential, then repeated application
        let step = propagator(superop, h)?;
        let mut rho = evolve(superop, rho0, times[0])?;
        let mut rows = Vec::with_capacity(times.len());
        rows.push(row(&rho)?);
        for _ in 1..times.len() {
            rho = propagate(&step, &rho)?;
            rows.push(row(&rho)?);
        }
        rows
    } else {
        times
            .par_iter()
            .map(|&t| row(&evolve(superop, rho0, t)?))
            .collect::<Result<_>>()?
    };
    Ok(NegativityCurve {
        times: times.to_vec(),
        negativities: rows.iter().map(|r| r.0).collect(),
        min_pt_eigenvalues: rows.iter().map(|r| r.1).collect(),
        trace_errors: rows.iter().map(|r| r.2).collect(),
    })
}

fn uniform_step(times: &[f64]) -> Option<f64> {
    if times.len() < 3 {
        return None;
    }
    let h = times[1] - times[0];
    let tol = 1e-12 * times[times.len() - 1].max(1.0);
    times.windows(2).all(|w| (w[1] - w[0] - h).abs() <= tol).then_some(h)
}

/// `steps` equally spaced points on `[0, t_max]`.
pub fn uniform_grid(t_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
    }
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 steps, got {steps}")));
    }
    let h = t_max / (steps - 1) as f64;
    Ok((0..steps).map(|i| if i + 1 == steps { t_max } else { i as f64 * h }).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Onset {
    Found { t: f64, negativity: f64 },
    NoneFound,
}

impl Onset {
    pub fn time(&self) -> Option<f64> {
        match self {
            Onset::Found { t, .. } => Some(*t),
            Onset::NoneFound => None,
        }
    }
}

const ONSET_REL_PRECISION: f64 = 1e-3;

/// First time on `t_grid` at which `exp(tL)[Q]` has negativity above
/// [`TOL_NEG`], refined by bisection against the previous grid point.
pub fn entanglement_onset(model: &GeneratorModel, state: &ProductState, t_grid: &[f64]) -> Result<Onset> {
    check_grid(t_grid)?;
    let d = model.d();
    if state.d() != d {
        return Err(Error::Dimension(format!(
            "state has local dimension {}, model has d = {d}",
            state.d()
        )));
    }
    let superop = model.generator().superoperator();
    let rho0 = DensityMatrix::from_product_state(state);
    let curve = negativity_curve(&superop, &rho0, d, t_grid)?;
    let Some(idx) = curve.first_entangled() else {
        return Ok(Onset::NoneFound);
    };
    if idx == 0 {
        return Ok(Onset::Found {
            t: t_grid[0],
            negativity: curve.negativities[0],
        });
    }
    let (mut lo, mut hi) = (t_grid[idx - 1], t_grid[idx]);
    let mut neg_hi = curve.negativities[idx];
    while hi - lo > ONSET_REL_PRECISION * hi {
        let mid = 0.5 * (lo + hi);
        let rho = evolve(&superop, &rho0, mid)?;
        let pt = partial_transpose(rho.matrix(), d)?;
        let (neg, min) = pt_negativity(&pt);
        if min < -TOL_NEG {
            hi = mid;
            neg_hi = neg;
        } else {
            lo = mid;
        }
    }
    Ok(Onset::Found {
        t: hi,
        negativity: neg_hi,
    })
}

/// Choi matrix `Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)` of the map with matrix `superop`.
pub fn choi_matrix(superop: &Superoperator) -> CMatrix {
    let dim = superop.dim;
    let mut choi = CMatrix::zeros(dim * dim, dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            // column-stacked |i⟩⟨j| has a single 1 at i + dim·j
            let col = superop.matrix.column(i + dim * j);
            for r in 0..dim {
                for s in 0..dim {
                    choi[(i * dim + r, j * dim + s)] = col[r + dim * s];
                }
            }
        }
    }
    choi
}
