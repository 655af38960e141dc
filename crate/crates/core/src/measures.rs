//! Figures of merit for two-qubit states.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    eigenvalues_general, eigenvalues_hermitian, hermitian_eigen, partial_transpose,
    singular_values, ComplexMatrix, C64, TAU_IMAG, TAU_PSD,
};
use crate::states::DensityOperator;

/// Smallest largest-eigenvalue accepted for a "pure" target.
pub const PURE_TOL: f64 = 1e-10;

/// `σ_y ⊗ σ_y` in the computational basis.
fn spin_flip() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
    ])
}

fn require_two_qubits(rho: &DensityOperator) -> Result<()> {
    if rho.n_qubits() != 2 {
        return Err(Error::QubitCountMismatch {
            dim: rho.dim(),
            n_qubits: 2,
        });
    }
    Ok(())
}

/// `ρ (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`.
pub fn concurrence_product(rho: &DensityOperator) -> ComplexMatrix {
    let yy = spin_flip();
    let m = rho.matrix();
    &(&(m * &yy) * &m.conj()) * &yy
}

/// Eigenvalues `λ_i` of [`concurrence_product`], real and descending.
///
/// Goes through the general eigen-solver. Imaginary parts above `TAU_IMAG`
/// and negative values below `-TAU_PSD` are errors; smaller negatives clip
/// to zero.
pub fn concurrence_eigenvalues(rho: &DensityOperator) -> Result<Vec<f64>> {
    require_two_qubits(rho)?;
    let eigs = eigenvalues_general(&concurrence_product(rho))?;
    let mut out = Vec::with_capacity(4);
    for z in eigs {
        if z.im.abs() > TAU_IMAG {
            return Err(Error::ComplexSpectrum { imag: z.im });
        }
        if z.re < -TAU_PSD {
            return Err(Error::NotPositive { min: z.re });
        }
        out.push(z.re.max(0.0));
    }
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// `√λ_i` in descending order, computed as the singular values of
/// `Aᵀ (σ_y⊗σ_y) A` for a factor `ρ = A A†`.
///
/// This carries the same values as the square roots of
/// [`concurrence_eigenvalues`] but without the `√ε` blow-up of a vanishing
/// eigenvalue, since singular values are computed to absolute accuracy.
pub fn concurrence_roots(rho: &DensityOperator) -> Result<Vec<f64>> {
    require_two_qubits(rho)?;
    let eig = hermitian_eigen(rho.matrix())?;
    let mut factor = eig.vectors.clone();
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda < -TAU_PSD {
            return Err(Error::NotPositive { min: lambda });
        }
        let root = lambda.max(0.0).sqrt();
        for i in 0..4 {
            factor[(i, k)] *= root;
        }
    }
    let t = &(&factor.transpose() * &spin_flip()) * &factor;
    singular_values(&t)
}

/// `(C, √λ₁ - Σ_{j≥2} √λ_j)`, with `C = max(0, signed)`.
pub fn concurrence(rho: &DensityOperator) -> Result<(f64, f64)> {
    let roots = concurrence_roots(rho)?;
    let signed = roots[0] - roots[1..].iter().sum::<f64>();
    Ok((signed.max(0.0), signed))
}

/// `(4/3)(1 - Tr ρ²)`; two qubits only.
pub fn linear_entropy(rho: &DensityOperator) -> Result<f64> {
    require_two_qubits(rho)?;
    Ok(4.0 / 3.0 * (1.0 - rho.purity()))
}

/// Eigenvalues of the partial transpose on the second qubit, descending.
pub fn partial_transpose_spectrum(rho: &DensityOperator) -> Result<Vec<f64>> {
    require_two_qubits(rho)?;
    eigenvalues_hermitian(&partial_transpose(rho.matrix(), 2, 1)?)
}

/// `2 Σ |negative eigenvalues of ρ^{T_B}|`; a Bell state scores one.
pub fn negativity(rho: &DensityOperator) -> Result<f64> {
    let spectrum = partial_transpose_spectrum(rho)?;
    Ok(2.0
        * spectrum
            .iter()
            .filter(|&&l| l < 0.0)
            .fold(0.0, |acc, l| acc - l))
}

/// `⟨t|ρ|t⟩` for a pure target `|t⟩⟨t|`.
pub fn fidelity_pure(target: &DensityOperator, out: &DensityOperator) -> Result<f64> {
    if target.dim() != out.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            found: out.dim(),
        });
    }
    let eig = hermitian_eigen(target.matrix())?;
    if eig.values[0] < 1.0 - PURE_TOL {
        return Err(Error::MixedTarget {
            largest: eig.values[0],
        });
    }
    Ok(fidelity_with_ket(&eig.vector(0), out))
}

/// `⟨t|ρ|t⟩` for a normalized ket.
pub fn fidelity_with_ket(ket: &[C64], out: &DensityOperator) -> f64 {
    out.matrix().expectation(ket).re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntanglementReport {
    pub concurrence: f64,
    pub signed_concurrence: f64,
    pub linear_entropy: f64,
    pub purity: f64,
    pub negativity: f64,
    pub ppt_positive: bool,
}

impl EntanglementReport {
    pub fn of(rho: &DensityOperator) -> Result<Self> {
        let (concurrence, signed_concurrence) = concurrence(rho)?;
        let negativity = negativity(rho)?;
        Ok(Self {
            concurrence,
            signed_concurrence,
            linear_entropy: linear_entropy(rho)?,
            purity: rho.purity(),
            negativity,
            ppt_positive: negativity <= TAU_PSD,
        })
    }
}
