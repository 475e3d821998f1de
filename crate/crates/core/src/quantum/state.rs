use num_complex::Complex64;
use rand::Rng;

use super::{check_visibility, CMatrix, DENSE_LIMIT};
use crate::bounds::Bipartition;
use crate::scenario::BellScenario;
use crate::{Error, Result};

const HERMITIAN_TOLERANCE: f64 = 1e-12;
const TRACE_TOLERANCE: f64 = 1e-12;
const PSD_TOLERANCE: f64 = 1e-10;

/// A validated `d^N x d^N` density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    scenario: BellScenario,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Checks shape, hermiticity, unit trace and positivity.
    pub fn new(scenario: BellScenario, matrix: CMatrix) -> Result<Self> {
        let dim = dense_dimension(&scenario)?;
        check_density(&matrix, dim)?;
        Ok(Self { scenario, matrix })
    }

    pub fn scenario(&self) -> &BellScenario {
        &self.scenario
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        // Tr(rho rho) = sum |rho_ij|^2 for Hermitian rho
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Validates a raw density matrix of side `dim`.
pub(crate) fn check_density(matrix: &CMatrix, dim: usize) -> Result<()> {
    if matrix.nrows() != dim || matrix.ncols() != dim {
        return Err(Error::InvalidState(format!(
            "expected {dim}x{dim}, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidState("non-finite entries".into()));
    }
    for i in 0..dim {
        for j in i..dim {
            let defect = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
            if defect > HERMITIAN_TOLERANCE {
                return Err(Error::InvalidState(format!("not Hermitian at ({i}, {j}): defect {defect:e}")));
            }
        }
    }
    let trace = matrix.trace();
    if (trace.re - 1.0).abs() > TRACE_TOLERANCE || trace.im.abs() > TRACE_TOLERANCE {
        return Err(Error::InvalidState(format!("trace is {trace}, expected 1")));
    }
    let min_eig = matrix.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -PSD_TOLERANCE {
        return Err(Error::InvalidState(format!(
            "not positive semidefinite: smallest eigenvalue {min_eig:e}"
        )));
    }
    Ok(())
}

fn dense_dimension(scenario: &BellScenario) -> Result<usize> {
    let dim = scenario.hilbert_dimension();
    if dim > DENSE_LIMIT as u128 {
        return Err(Error::TooLarge { dimension: dim, limit: DENSE_LIMIT });
    }
    Ok(dim as usize)
}

/// `|GHZ> = d^{-1/2} sum_j |j j .. j>` as a density matrix.
pub fn ghz_state(scenario: BellScenario) -> Result<DensityMatrix> {
    let dim = dense_dimension(&scenario)?;
    let d = scenario.dimension();
    // index of |j j .. j> is j * (1 + d + .. + d^{N-1})
    let step: usize = (0..scenario.n_parties()).map(|n| d.pow(n as u32)).sum();
    let amp = Complex64::new(1.0 / d as f64, 0.0);
    let mut matrix = CMatrix::zeros(dim, dim);
    for a in 0..d {
        for b in 0..d {
            matrix[(a * step, b * step)] = amp;
        }
    }
    Ok(DensityMatrix { scenario, matrix })
}

/// `1 / d^N`.
pub fn maximally_mixed(scenario: BellScenario) -> Result<DensityMatrix> {
    let dim = dense_dimension(&scenario)?;
    let matrix = CMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0);
    Ok(DensityMatrix { scenario, matrix })
}

/// `V rho + (1 - V) 1 / d^N`.
pub fn mix_with_noise(rho: &DensityMatrix, visibility: f64) -> Result<DensityMatrix> {
    check_visibility(visibility)?;
    let dim = rho.matrix.nrows();
    let mut matrix = rho.matrix.clone() * Complex64::new(visibility, 0.0);
    let noise = (1.0 - visibility) / dim as f64;
    for i in 0..dim {
        matrix[(i, i)] += noise;
    }
    Ok(DensityMatrix { scenario: rho.scenario, matrix })
}

/// `rho_A (x) rho_B` placed on the parties of each block.
///
/// `rho_a` acts on the parties of block A in increasing order (first of them
/// fastest-varying), likewise `rho_b` on block B.
pub fn product_state(
    scenario: BellScenario,
    partition: &Bipartition,
    rho_a: &CMatrix,
    rho_b: &CMatrix,
) -> Result<DensityMatrix> {
    if partition.n_parties() != scenario.n_parties() {
        return Err(Error::InvalidPartition(format!(
            "partition over {} parties used with {scenario}",
            partition.n_parties()
        )));
    }
    let dim = dense_dimension(&scenario)?;
    let d = scenario.dimension();
    let dim_a = d.pow(partition.block_a().len() as u32);
    let dim_b = d.pow(partition.block_b().len() as u32);
    check_density(rho_a, dim_a)?;
    check_density(rho_b, dim_b)?;

    let split = |block: &[usize], index: usize| -> usize {
        block.iter().rev().fold(0, |acc, &p| acc * d + (index / d.pow(p as u32)) % d)
    };
    let ia: Vec<usize> = (0..dim).map(|i| split(partition.block_a(), i)).collect();
    let ib: Vec<usize> = (0..dim).map(|i| split(partition.block_b(), i)).collect();
    let matrix = CMatrix::from_fn(dim, dim, |i, j| rho_a[(ia[i], ia[j])] * rho_b[(ib[i], ib[j])]);
    DensityMatrix::new(scenario, matrix)
}

/// Random full-rank density matrix `G G^dagger / Tr(G G^dagger)` with `G`
/// having independent entries uniform in the unit square around zero.
pub fn random_density_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g =
        CMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let mut rho = &g * g.adjoint();
    let tr = rho.trace().re;
    rho /= Complex64::new(tr, 0.0);
    (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0)
}
