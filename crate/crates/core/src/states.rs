//! Channel and target states: the two MEMS families, Werner states, the
//! pure `φ`/`ψ` targets, Bloch-form decomposition and random mixed states.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, kron, pauli_x, pauli_y, pauli_z, ComplexMatrix, C64, TAU_HERM, TAU_PSD, ZERO,
};

/// Boundary between the two MEMS families.
pub const FAMILY_BOUNDARY: f64 = 2.0 / 3.0;

const TRACE_TOL: f64 = 1e-12;

/// Validated density operator on `n_qubits` qubits.
#[derive(Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    n_qubits: usize,
}

impl DensityOperator {
    /// Checks Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let n_qubits = matrix.qubit_count()?;
        let deviation = matrix.hermiticity_deviation();
        if deviation > TAU_HERM {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotNormalized { trace });
        }
        let min = *linalg::eigenvalues_hermitian(&matrix)?.last().unwrap();
        if min < -TAU_PSD {
            return Err(Error::NotPositive { min });
        }
        Ok(Self { matrix, n_qubits })
    }

    /// Normalizes a positive operator by its trace before validating.
    pub fn normalized(matrix: ComplexMatrix) -> Result<Self> {
        let trace = matrix.trace().re;
        if trace.abs() < f64::MIN_POSITIVE {
            return Err(Error::NotNormalized { trace });
        }
        Self::new(matrix.scale_real(1.0 / trace))
    }

    pub fn pure(ket: &[C64]) -> Result<Self> {
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let unit: Vec<C64> = ket.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::projector(&unit))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigenvalues_hermitian(&self.matrix).expect("validated state is Hermitian")
    }

    /// Largest eigenvalue is one within `tol`.
    pub fn is_pure(&self, tol: f64) -> bool {
        self.eigenvalues()[0] >= 1.0 - tol
    }
}

impl fmt::Debug for DensityOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "DensityOperator[{} qubits] {:?}",
            self.n_qubits, self.matrix
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelFamily {
    /// High-entanglement MEMS family, `r ∈ [2/3, 1]`.
    Mems1,
    /// Low-entanglement MEMS family, `r ∈ [0, 2/3]`.
    Mems2,
    /// `p |Ψ⁻⟩⟨Ψ⁻| + (1 - p) I/4`, `p ∈ [0, 1]`.
    Werner,
}

impl ChannelFamily {
    pub fn range(self) -> (f64, f64) {
        match self {
            ChannelFamily::Mems1 => (FAMILY_BOUNDARY, 1.0),
            ChannelFamily::Mems2 => (0.0, FAMILY_BOUNDARY),
            ChannelFamily::Werner => (0.0, 1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelFamily::Mems1 => "mems1",
            ChannelFamily::Mems2 => "mems2",
            ChannelFamily::Werner => "werner",
        }
    }

    pub fn contains(self, r: f64) -> bool {
        let (lo, hi) = self.range();
        // 2/3 is not representable; allow a few ulps either side
        r >= lo - 1e-15 && r <= hi + 1e-15
    }
}

impl fmt::Display for ChannelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A channel family and its quality parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub family: ChannelFamily,
    pub r: f64,
}

impl ChannelSpec {
    pub fn new(family: ChannelFamily, r: f64) -> Result<Self> {
        if !family.contains(r) || !r.is_finite() {
            let (min, max) = family.range();
            return Err(Error::OutOfRange {
                name: "r",
                value: r,
                min,
                max,
            });
        }
        Ok(Self { family, r })
    }

    pub fn mems1(r: f64) -> Result<Self> {
        Self::new(ChannelFamily::Mems1, r)
    }

    pub fn mems2(r: f64) -> Result<Self> {
        Self::new(ChannelFamily::Mems2, r)
    }

    pub fn werner(p: f64) -> Result<Self> {
        Self::new(ChannelFamily::Werner, p)
    }

    /// Builds the channel's two-qubit state.
    pub fn state(&self) -> Result<DensityOperator> {
        match self.family {
            ChannelFamily::Werner => make_werner(self.r),
            _ => make_mems(*self),
        }
    }
}

/// The MEMS matrix for `spec` in the basis `|00⟩, |01⟩, |10⟩, |11⟩`.
pub fn make_mems(spec: ChannelSpec) -> Result<DensityOperator> {
    let ChannelSpec { family, r } = ChannelSpec::new(spec.family, spec.r)?;
    let h = r / 2.0;
    let rows = match family {
        ChannelFamily::Mems1 => [
            [h, 0.0, 0.0, h],
            [0.0, 1.0 - r, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [h, 0.0, 0.0, h],
        ],
        ChannelFamily::Mems2 => {
            let t = 1.0 / 3.0;
            [
                [t, 0.0, 0.0, h],
                [0.0, t, 0.0, 0.0],
                [0.0, 0.0, 0.0, 0.0],
                [h, 0.0, 0.0, t],
            ]
        }
        ChannelFamily::Werner => {
            return Err(Error::Config(
                "make_mems called with the Werner family".into(),
            ));
        }
    };
    DensityOperator::new(ComplexMatrix::from_real_rows(&rows))
}

/// `p |Ψ⁻⟩⟨Ψ⁻| + (1 - p) I/4`.
pub fn make_werner(p: f64) -> Result<DensityOperator> {
    ChannelSpec::werner(p)?;
    let s = FRAC_1_SQRT_2;
    let psi_minus = [ZERO, C64::new(s, 0.0), C64::new(-s, 0.0), ZERO];
    let singlet = ComplexMatrix::projector(&psi_minus).scale_real(p);
    let noise = ComplexMatrix::identity(4).scale_real((1.0 - p) / 4.0);
    DensityOperator::new(&singlet + &noise)
}

/// Concurrence and linear entropy of the MEMS family member with quality `r`.
pub fn mems_curve_point(family: ChannelFamily, r: f64) -> Result<(f64, f64)> {
    ChannelSpec::new(family, r)?;
    match family {
        ChannelFamily::Mems1 => Ok((r, 8.0 * r * (1.0 - r) / 3.0)),
        ChannelFamily::Mems2 => Ok((r, 8.0 / 9.0 - 2.0 * r * r / 3.0)),
        ChannelFamily::Werner => Err(Error::Config(
            "Werner states are not on the MEMS curve".into(),
        )),
    }
}

/// Largest concurrence any two-qubit state with linear entropy `s` can have.
pub fn mems_boundary_concurrence(s: f64) -> f64 {
    let s = s.max(0.0);
    let s_joint = 16.0 / 27.0;
    if s <= s_joint {
        // invert S = 8r(1 - r)/3 on the branch r ≥ 2/3
        (1.0 + (1.0 - 1.5 * s).max(0.0).sqrt()) / 2.0
    } else if s < 8.0 / 9.0 {
        // invert S = 8/9 - 2r²/3
        (1.5 * (8.0 / 9.0 - s)).sqrt()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetForm {
    /// `α|00⟩ + √(1-α²)|11⟩`.
    Phi,
    /// `α|01⟩ + √(1-α²)|10⟩`.
    Psi,
    /// Any two-qubit state supplied by the caller.
    Explicit,
}

/// State to teleport.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub form: TargetForm,
    pub c_in: f64,
    pub explicit_state: Option<DensityOperator>,
}

impl TargetSpec {
    pub fn new(form: TargetForm, c_in: f64) -> Result<Self> {
        check_unit("c_in", c_in)?;
        Ok(Self {
            form,
            c_in,
            explicit_state: None,
        })
    }

    pub fn phi(c_in: f64) -> Result<Self> {
        Self::new(TargetForm::Phi, c_in)
    }

    pub fn psi(c_in: f64) -> Result<Self> {
        Self::new(TargetForm::Psi, c_in)
    }

    /// Wraps a two-qubit state; `c_in` is left at zero and is not used.
    pub fn explicit(state: DensityOperator) -> Result<Self> {
        if state.n_qubits() != 2 {
            return Err(Error::QubitCountMismatch {
                dim: state.dim(),
                n_qubits: 2,
            });
        }
        Ok(Self {
            form: TargetForm::Explicit,
            c_in: 0.0,
            explicit_state: Some(state),
        })
    }

    /// Amplitude `α = √((1 + √(1 - C²))/2)` of the pure target forms.
    pub fn alpha(&self) -> f64 {
        alpha_for_concurrence(self.c_in)
    }

    /// State vector for the pure forms.
    pub fn ket(&self) -> Option<Vec<C64>> {
        let a = self.alpha();
        let b = (1.0 - a * a).max(0.0).sqrt();
        match self.form {
            TargetForm::Phi => Some(vec![C64::new(a, 0.0), ZERO, ZERO, C64::new(b, 0.0)]),
            TargetForm::Psi => Some(vec![ZERO, C64::new(a, 0.0), C64::new(b, 0.0), ZERO]),
            TargetForm::Explicit => None,
        }
    }
}

pub fn alpha_for_concurrence(c_in: f64) -> f64 {
    ((1.0 + (1.0 - c_in * c_in).max(0.0).sqrt()) / 2.0).sqrt()
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::OutOfRange {
            name,
            value,
            min: 0.0,
            max: 1.0,
        });
    }
    Ok(())
}

pub fn make_target(spec: &TargetSpec) -> Result<DensityOperator> {
    match spec.form {
        TargetForm::Explicit => spec
            .explicit_state
            .clone()
            .ok_or(Error::MissingExplicitState),
        _ => {
            check_unit("c_in", spec.c_in)?;
            DensityOperator::pure(&spec.ket().expect("pure form"))
        }
    }
}

/// Local Bloch vectors and correlation tensor of a two-qubit state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochDecomposition {
    pub beta: [f64; 3],
    pub gamma: [f64; 3],
    pub chi: [[f64; 3]; 3],
}

fn paulis() -> [ComplexMatrix; 3] {
    [pauli_x(), pauli_y(), pauli_z()]
}

fn real_trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    // Tr(ab) without forming the product
    let n = a.dim();
    let mut t = ZERO;
    for i in 0..n {
        for k in 0..n {
            t += a[(i, k)] * b[(k, i)];
        }
    }
    t.re
}

pub fn bloch_decompose(rho: &DensityOperator) -> Result<BlochDecomposition> {
    if rho.n_qubits() != 2 {
        return Err(Error::QubitCountMismatch {
            dim: rho.dim(),
            n_qubits: 2,
        });
    }
    let id = ComplexMatrix::identity(2);
    let s = paulis();
    let m = rho.matrix();
    let mut out = BlochDecomposition {
        beta: [0.0; 3],
        gamma: [0.0; 3],
        chi: [[0.0; 3]; 3],
    };
    for k in 0..3 {
        out.beta[k] = real_trace_product(m, &kron(&s[k], &id));
        out.gamma[k] = real_trace_product(m, &kron(&id, &s[k]));
        for l in 0..3 {
            out.chi[k][l] = real_trace_product(m, &kron(&s[k], &s[l]));
        }
    }
    Ok(out)
}

impl BlochDecomposition {
    /// `¼[I⊗I + Σ β_k σ_k⊗I + γ_k I⊗σ_k + Σ χ_kl σ_k⊗σ_l]`.
    pub fn reassemble(&self) -> ComplexMatrix {
        let id = ComplexMatrix::identity(2);
        let s = paulis();
        let mut m = ComplexMatrix::identity(4);
        for k in 0..3 {
            m = &m + &kron(&s[k], &id).scale_real(self.beta[k]);
            m = &m + &kron(&id, &s[k]).scale_real(self.gamma[k]);
            for l in 0..3 {
                m = &m + &kron(&s[k], &s[l]).scale_real(self.chi[k][l]);
            }
        }
        m.scale_real(0.25)
    }
}

/// Elementary two-level unitary acting on levels `i < j`.
fn two_level_rotation(
    dim: usize,
    i: usize,
    j: usize,
    phi: f64,
    psi: f64,
    chi: f64,
) -> ComplexMatrix {
    let mut e = ComplexMatrix::identity(dim);
    let (s, c) = phi.sin_cos();
    e[(i, i)] = C64::from_polar(c, psi);
    e[(i, j)] = C64::from_polar(s, chi);
    e[(j, i)] = -C64::from_polar(s, -chi);
    e[(j, j)] = C64::from_polar(c, -psi);
    e
}

/// Haar-random unitary from Hurwitz's composite Euler-angle parameterization.
///
/// `U = e^{iα} E₁ E₂ … E_{N-1}` with
/// `E_s = Π_{r=s-1…0} E^{(N-r-2, N-r-1)}(φ_rs, ψ_rs, χ_s δ_{r0})`.
/// The phases `α, ψ_rs, χ_s` are uniform on `[0, 2π)`; the polar angles are
/// `φ_rs = arcsin(ξ^{1/(2r+2)})` with `ξ` uniform on `[0, 1]`, which is what
/// makes the product Haar distributed. For `N = 4` this uses 16 angles.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let mut u = ComplexMatrix::identity(dim);
    for s in 1..dim {
        let mut block = ComplexMatrix::identity(dim);
        for r in (0..s).rev() {
            let xi: f64 = rng.gen();
            let phi = xi.powf(1.0 / (2.0 * r as f64 + 2.0)).asin();
            let psi = rng.gen::<f64>() * 2.0 * PI;
            let chi = if r == 0 {
                rng.gen::<f64>() * 2.0 * PI
            } else {
                0.0
            };
            let e = two_level_rotation(dim, dim - r - 2, dim - r - 1, phi, psi, chi);
            block = &block * &e;
        }
        u = &u * &block;
    }
    let alpha = rng.gen::<f64>() * 2.0 * PI;
    u.scale(C64::from_polar(1.0, alpha))
}

/// Uniform point on the probability simplex (sorted-uniform spacings).
pub fn random_simplex_point<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..dim - 1).map(|_| rng.gen()).collect();
    cuts.sort_by(f64::total_cmp);
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(dim);
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(1.0 - prev);
    out
}

/// `U D U†` with `U` Haar random and `D` uniform on the simplex.
pub fn random_density_with<R: Rng + ?Sized>(
    rng: &mut R,
    n_qubits: usize,
) -> Result<DensityOperator> {
    if n_qubits == 0 {
        return Err(Error::Config(
            "random_density needs at least one qubit".into(),
        ));
    }
    let dim = 1usize << n_qubits;
    let u = haar_unitary(rng, dim);
    let d = ComplexMatrix::from_real_diagonal(&random_simplex_point(rng, dim));
    let rho = d.conjugate_by(&u);
    // re-impose exact Hermiticity lost to rounding
    let rho = (&rho + &rho.dagger()).scale_real(0.5);
    DensityOperator::normalized(rho)
}

/// Deterministic random state for `seed` (ChaCha20 stream).
pub fn random_density(seed: u64, n_qubits: usize) -> Result<DensityOperator> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    random_density_with(&mut rng, n_qubits)
}
