//! The entanglement teleportation engine.
//!
//! Register layout (most significant first): `a1, a2, b1, b2, b3, b4`.
//! The target lives on `(a1, a2)`, channel one on `(b1, b2)`, channel two on
//! `(b3, b4)`. Bell measurements act on `(a1, b1)` and `(a2, b3)`; the
//! teleported state is read off `(b2, b4)`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    basis_ket, embed, kron, kron_all, partial_trace, pauli_x, pauli_y, pauli_z, ComplexMatrix, C64,
    ZERO,
};
use crate::measures::{concurrence, fidelity_with_ket, PURE_TOL};
use crate::states::{
    make_target, ChannelFamily, ChannelSpec, DensityOperator, TargetForm, TargetSpec,
    FAMILY_BOUNDARY,
};

pub const A1: usize = 0;
pub const A2: usize = 1;
pub const B1: usize = 2;
pub const B2: usize = 3;
pub const B3: usize = 4;
pub const B4: usize = 5;
pub const N_QUBITS: usize = 6;

/// Outcomes with smaller probability are rejected rather than normalized.
pub const TAU_PROB: f64 = 1e-12;

/// Best fidelity reachable with LOCC alone.
pub const LOCC_FIDELITY: f64 = 2.0 / 3.0;

/// Pauli operators, labelled `σ₁ = X, σ₂ = Y, σ₃ = Z, σ₄ = I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
    I,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::X, Pauli::Y, Pauli::Z, Pauli::I];

    pub fn from_index(mu: u8) -> Result<Self> {
        match mu {
            1 => Ok(Pauli::X),
            2 => Ok(Pauli::Y),
            3 => Ok(Pauli::Z),
            4 => Ok(Pauli::I),
            other => Err(Error::BadBellIndex(other)),
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::X => pauli_x(),
            Pauli::Y => pauli_y(),
            Pauli::Z => pauli_z(),
            Pauli::I => ComplexMatrix::identity(2),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
            Pauli::I => 'I',
        }
    }
}

/// Local correction on the receiving qubit after outcome `|B_μ⟩`.
///
/// `|B_μ⟩ = (σ_μ ⊗ 1)|Ψ⁺⟩ = (σ_μ σ_x ⊗ 1)|Φ⁺⟩`, so the received qubit carries
/// `σ_μ σ_x` (up to phase and transposition) and is undone by
/// `1 → I, 2 → Z, 3 → Y, 4 → X`.
pub fn correction_for(mu: u8) -> Result<Pauli> {
    match mu {
        1 => Ok(Pauli::I),
        2 => Ok(Pauli::Z),
        3 => Ok(Pauli::Y),
        4 => Ok(Pauli::X),
        other => Err(Error::BadBellIndex(other)),
    }
}

/// Bell-basis element `|B_μ⟩ = (σ_μ ⊗ 1)|Ψ⁺⟩`; `μ = 1` is `|Φ⁺⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BellProjector {
    mu: u8,
}

impl BellProjector {
    pub fn new(mu: u8) -> Result<Self> {
        Pauli::from_index(mu)?;
        Ok(Self { mu })
    }

    pub fn mu(&self) -> u8 {
        self.mu
    }

    pub fn ket(&self) -> Vec<C64> {
        let s = FRAC_1_SQRT_2;
        let psi_plus = [ZERO, C64::new(s, 0.0), C64::new(s, 0.0), ZERO];
        let sigma = Pauli::from_index(self.mu)
            .expect("validated index")
            .matrix();
        kron(&sigma, &ComplexMatrix::identity(2)).apply(&psi_plus)
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::projector(&self.ket())
    }
}

/// `|Φ⁺⟩ = (|00⟩ + |11⟩)/√2`.
pub fn phi_plus() -> Vec<C64> {
    let s = FRAC_1_SQRT_2;
    vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]
}

#[derive(Debug, Clone)]
pub struct ProtocolResult {
    /// Normalized state of `(b2, b4)` after any correction.
    pub output_state: DensityOperator,
    /// Trace of the projected state before normalization.
    pub probability: f64,
    pub c_out: f64,
    pub signed_c_out: f64,
    /// Against the target, when the target is pure.
    pub fidelity: Option<f64>,
    pub outcome: (u8, u8),
    pub correction_applied: (Pauli, Pauli),
}

impl ProtocolResult {
    pub fn correction_label(&self) -> String {
        format!(
            "{}{}",
            self.correction_applied.0.symbol(),
            self.correction_applied.1.symbol()
        )
    }
}

/// A prepared six-qubit composite state, reusable across outcomes.
pub struct Protocol {
    composite: ComplexMatrix,
    target_ket: Option<Vec<C64>>,
}

impl fmt::Debug for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Protocol")
            .field("pure_target", &self.target_ket.is_some())
            .finish()
    }
}

/// Target ⊗ channel one ⊗ channel two, in register order.
pub fn composite_state(
    target: &DensityOperator,
    ch1: &DensityOperator,
    ch2: &DensityOperator,
) -> Result<ComplexMatrix> {
    for s in [target, ch1, ch2] {
        if s.n_qubits() != 2 {
            return Err(Error::QubitCountMismatch {
                dim: s.dim(),
                n_qubits: 2,
            });
        }
    }
    Ok(kron_all(&[target.matrix(), ch1.matrix(), ch2.matrix()]))
}

fn target_ket_of(spec: &TargetSpec, state: &DensityOperator) -> Option<Vec<C64>> {
    match spec.form {
        TargetForm::Explicit => {
            let eig = crate::linalg::hermitian_eigen(state.matrix()).ok()?;
            (eig.values[0] >= 1.0 - PURE_TOL).then(|| eig.vector(0))
        }
        _ => spec.ket(),
    }
}

impl Protocol {
    pub fn new(target: &TargetSpec, ch1: &ChannelSpec, ch2: &ChannelSpec) -> Result<Self> {
        let target_state = make_target(target)?;
        let composite = composite_state(&target_state, &ch1.state()?, &ch2.state()?)?;
        let target_ket = target_ket_of(target, &target_state);
        Ok(Self {
            composite,
            target_ket,
        })
    }

    pub fn composite(&self) -> &ComplexMatrix {
        &self.composite
    }

    /// Unnormalized `Tr_{a1,a2,b1,b3}[(Π_μ ⊗ Π_ν) ρ (Π_μ ⊗ Π_ν)]` on `(b2, b4)`.
    pub fn projected_output(&self, mu: u8, nu: u8) -> Result<ComplexMatrix> {
        let pi = kron(
            &BellProjector::new(mu)?.projector(),
            &BellProjector::new(nu)?.projector(),
        );
        let full = embed(&pi, N_QUBITS, &[A1, B1, A2, B3])?;
        let projected = &(&full * &self.composite) * &full;
        partial_trace(&projected, N_QUBITS, &[B2, B4])
    }

    pub fn probability(&self, mu: u8, nu: u8) -> Result<f64> {
        Ok(self.projected_output(mu, nu)?.trace().re)
    }

    /// All 16 outcome probabilities, indexed `[μ-1][ν-1]`.
    pub fn probabilities(&self) -> Result<[[f64; 4]; 4]> {
        let mut out = [[0.0; 4]; 4];
        for mu in 1..=4u8 {
            for nu in 1..=4u8 {
                out[mu as usize - 1][nu as usize - 1] = self.probability(mu, nu)?;
            }
        }
        Ok(out)
    }

    /// Measures outcome `(μ, ν)` and applies the given corrections.
    pub fn run_with_correction(
        &self,
        mu: u8,
        nu: u8,
        correction: (Pauli, Pauli),
    ) -> Result<ProtocolResult> {
        let raw = self.projected_output(mu, nu)?;
        let probability = raw.trace().re;
        if probability < TAU_PROB {
            return Err(Error::DegenerateOutcome { probability });
        }
        let local = kron(&correction.0.matrix(), &correction.1.matrix());
        let corrected = raw.conjugate_by(&local).scale_real(1.0 / probability);
        let hermitian = (&corrected + &corrected.dagger()).scale_real(0.5);
        let output_state = DensityOperator::new(hermitian)?;
        let (c_out, signed_c_out) = concurrence(&output_state)?;
        let fidelity = self
            .target_ket
            .as_ref()
            .map(|k| fidelity_with_ket(k, &output_state));
        Ok(ProtocolResult {
            output_state,
            probability,
            c_out,
            signed_c_out,
            fidelity,
            outcome: (mu, nu),
            correction_applied: correction,
        })
    }

    /// Outcome `(μ, ν)` followed by the standard correction.
    pub fn run(&self, mu: u8, nu: u8) -> Result<ProtocolResult> {
        self.run_with_correction(mu, nu, (correction_for(mu)?, correction_for(nu)?))
    }

    /// Post-selection on `|Φ⁺⟩|Φ⁺⟩`, no correction.
    pub fn run_rigid(&self) -> Result<ProtocolResult> {
        self.run_with_correction(1, 1, (Pauli::I, Pauli::I))
    }

    /// Probability-weighted fidelity over all 16 corrected outcomes.
    pub fn average_fidelity(&self) -> Result<Option<f64>> {
        if self.target_ket.is_none() {
            return Ok(None);
        }
        let mut total = 0.0;
        for mu in 1..=4u8 {
            for nu in 1..=4u8 {
                match self.run(mu, nu) {
                    Ok(res) => total += res.probability * res.fidelity.unwrap_or(0.0),
                    Err(Error::DegenerateOutcome { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(Some(total))
    }
}

/// Rigid protocol: both Bell measurements post-selected on `|Φ⁺⟩`.
pub fn teleport_rigid(
    target: &TargetSpec,
    ch1: &ChannelSpec,
    ch2: &ChannelSpec,
) -> Result<ProtocolResult> {
    Protocol::new(target, ch1, ch2)?.run_rigid()
}

/// Outcome `(μ, ν)` with the matching by-product correction on `(b2, b4)`.
pub fn teleport_general(
    target: &TargetSpec,
    ch1: &ChannelSpec,
    ch2: &ChannelSpec,
    outcome: (u8, u8),
) -> Result<ProtocolResult> {
    Protocol::new(target, ch1, ch2)?.run(outcome.0, outcome.1)
}

/// Splits a channel state on its second qubit:
/// `ρ = Σ_{s,t} O_{st} ⊗ |s⟩⟨t|`, returned as `[A, B, C, D] = [O₀₀, O₀₁, O₁₀, O₁₁]`.
pub fn channel_blocks(channel: &DensityOperator) -> [ComplexMatrix; 4] {
    let m = channel.matrix();
    let block = |s: usize, t: usize| ComplexMatrix::from_fn(2, |x, y| m[(2 * x + s, 2 * y + t)]);
    [block(0, 0), block(0, 1), block(1, 0), block(1, 1)]
}

/// The 16 values `⟨Φ⁺|(|l⟩⟨m| ⊗ O_p)|Φ⁺⟩`, indexed `[l][m][p]`.
pub fn bell_expectations(blocks: &[ComplexMatrix; 4]) -> [[[C64; 4]; 2]; 2] {
    let bell = phi_plus();
    std::array::from_fn(|l| {
        std::array::from_fn(|m| {
            let lm = ComplexMatrix::outer(&basis_ket(2, l), &basis_ket(2, m));
            std::array::from_fn(|p| kron(&lm, &blocks[p]).expectation(&bell))
        })
    })
}

/// Rigid-protocol output assembled from the per-channel operator blocks
/// instead of the six-qubit state.
pub fn effective_channel_output(
    target: &TargetSpec,
    ch1: &ChannelSpec,
    ch2: &ChannelSpec,
) -> Result<DensityOperator> {
    let rho = make_target(target)?;
    let e1 = bell_expectations(&channel_blocks(&ch1.state()?));
    let e2 = bell_expectations(&channel_blocks(&ch2.state()?));
    let t = rho.matrix();
    // block index p for output coherence |s⟩⟨t|
    let block_of = |s: usize, t: usize| 2 * s + t;

    let mut out = ComplexMatrix::zeros(4);
    for s1 in 0..2 {
        for s2 in 0..2 {
            for t1 in 0..2 {
                for t2 in 0..2 {
                    let (p1, p2) = (block_of(s1, t1), block_of(s2, t2));
                    let mut acc = ZERO;
                    for l1 in 0..2 {
                        for l2 in 0..2 {
                            for m1 in 0..2 {
                                for m2 in 0..2 {
                                    let coeff = t[(2 * l1 + l2, 2 * m1 + m2)];
                                    if coeff == ZERO {
                                        continue;
                                    }
                                    acc += coeff * e1[l1][m1][p1] * e2[l2][m2][p2];
                                }
                            }
                        }
                    }
                    out[(2 * s1 + s2, 2 * t1 + t2)] = acc;
                }
            }
        }
    }
    let probability = out.trace().re;
    if probability < TAU_PROB {
        return Err(Error::DegenerateOutcome { probability });
    }
    DensityOperator::new(out.scale_real(1.0 / probability))
}

/// Closed-form `(b2, b4)` state for a `φ` target through two `ρ²(r)` channels.
pub fn mems2_phi_output(alpha: f64, r: f64) -> ComplexMatrix {
    let a2 = alpha * alpha;
    let norm = 1.0 + 3.0 * a2;
    let coh = 9.0 * r * r * alpha * (1.0 - a2).max(0.0).sqrt() / (4.0 * norm);
    let d = a2 / norm;
    ComplexMatrix::from_real_rows(&[
        [d, 0.0, 0.0, coh],
        [0.0, d, 0.0, 0.0],
        [0.0, 0.0, d, 0.0],
        [coh, 0.0, 0.0, 1.0 / norm],
    ])
}

/// Closed-form `(b2, b4)` state for a `ψ` target through two `ρ²(r)` channels.
pub fn mems2_psi_output(alpha: f64, r: f64) -> ComplexMatrix {
    let a2 = alpha * alpha;
    let coh = 9.0 * r * r * alpha * (1.0 - a2).max(0.0).sqrt() / 8.0;
    ComplexMatrix::from_real_rows(&[
        [0.0, 0.0, 0.0, 0.0],
        [0.0, a2 / 2.0, coh, 0.0],
        [0.0, coh, (1.0 - a2) / 2.0, 0.0],
        [0.0, 0.0, 0.0, 0.5],
    ])
}

fn check_c_in(c_in: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&c_in) {
        return Err(Error::OutOfRange {
            name: "c_in",
            value: c_in,
            min: 0.0,
            max: 1.0,
        });
    }
    Ok(())
}

/// Output concurrence of a `ψ` target through two equal MEMS channels:
/// `r C/(2 - r)` for `ρ¹`, `9 r² C/8` for `ρ²`.
pub fn analytic_c_out(family: ChannelFamily, r: f64, c_in: f64) -> Result<f64> {
    check_c_in(c_in)?;
    ChannelSpec::new(family, r)?;
    match family {
        ChannelFamily::Mems1 => Ok(r / (2.0 - r) * c_in),
        ChannelFamily::Mems2 => Ok(9.0 * r * r / 8.0 * c_in),
        ChannelFamily::Werner => Err(Error::Config("no closed form for Werner channels".into())),
    }
}

/// Channel quality above which a `φ` target through `ρ¹ ⊗ ρ¹` stays entangled.
pub fn threshold_r(c_in: f64) -> Result<f64> {
    check_c_in(c_in)?;
    if c_in == 0.0 {
        return Err(Error::ThresholdUndefined);
    }
    let root = (1.0 - c_in * c_in).sqrt();
    Ok((4.0 - 2.0 * c_in + 4.0 * root) / (3.0 + 5.0 * root))
}

/// Finds the simulated zero crossing of the signed output concurrence for a
/// `φ` target through `ρ¹(r) ⊗ ρ¹(r)` by bisection on `r ∈ [2/3, 1]`.
pub fn locate_threshold(c_in: f64, r_tol: f64) -> Result<f64> {
    let target = TargetSpec::phi(c_in)?;
    let signed = |r: f64| -> Result<f64> {
        let ch = ChannelSpec::mems1(r)?;
        Ok(teleport_rigid(&target, &ch, &ch)?.signed_c_out)
    };
    let (mut lo, mut hi) = (FAMILY_BOUNDARY, 1.0);
    if signed(lo)? > 0.0 {
        return Ok(lo);
    }
    if signed(hi)? <= 0.0 {
        return Err(Error::ThresholdUndefined);
    }
    while hi - lo > r_tol {
        let mid = 0.5 * (lo + hi);
        if signed(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The two printed fidelity laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FidelityLaw {
    /// `(9r² + 4) C²/16`, `r ∈ [0, 2/3]`.
    F1,
    /// `r C²/(2 - r)`, `r ∈ [2/3, 1]`.
    F2,
}

impl FidelityLaw {
    pub fn range(self) -> (f64, f64) {
        match self {
            FidelityLaw::F1 => (0.0, FAMILY_BOUNDARY),
            FidelityLaw::F2 => (FAMILY_BOUNDARY, 1.0),
        }
    }

    /// The law whose `r` range covers `family`.
    pub fn for_family(family: ChannelFamily) -> Option<Self> {
        match family {
            ChannelFamily::Mems1 => Some(FidelityLaw::F2),
            ChannelFamily::Mems2 => Some(FidelityLaw::F1),
            ChannelFamily::Werner => None,
        }
    }
}

pub fn analytic_fidelity(law: FidelityLaw, r: f64, c_in: f64) -> Result<f64> {
    check_c_in(c_in)?;
    let (min, max) = law.range();
    if !(r >= min - 1e-15 && r <= max + 1e-15) {
        return Err(Error::OutOfRange {
            name: "r",
            value: r,
            min,
            max,
        });
    }
    let c2 = c_in * c_in;
    Ok(match law {
        FidelityLaw::F1 => (9.0 * r * r + 4.0) / 16.0 * c2,
        FidelityLaw::F2 => r / (2.0 - r) * c2,
    })
}

/// Inclusive, uniformly spaced grid of `steps` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Grid {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        let g = Self { min, max, steps };
        g.validate()?;
        Ok(g)
    }

    pub fn single(value: f64) -> Self {
        Self {
            min: value,
            max: value,
            steps: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("grid needs at least one point".into()));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return Err(Error::Config(format!(
                "bad grid bounds [{}, {}]",
                self.min, self.max
            )));
        }
        if self.steps == 1 && self.min != self.max {
            return Err(Error::Config("single-point grid needs min == max".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let last = self.steps - 1;
        (0..self.steps)
            .map(|i| {
                if i == last {
                    self.max
                } else {
                    self.min + (self.max - self.min) * i as f64 / last as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub target: TargetForm,
    pub family1: ChannelFamily,
    pub family2: ChannelFamily,
    pub r_grid: Grid,
    /// Independent grid for channel two; `None` means both channels share `r`.
    pub r2_grid: Option<Grid>,
    pub c_in_grid: Grid,
    /// Also evaluate the probability-weighted fidelity over all outcomes.
    pub average_outcomes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub r1: f64,
    pub r2: f64,
    pub c_in: f64,
    pub c_out: f64,
    pub signed_c_out: f64,
    pub fidelity_rigid: f64,
    pub fidelity_average: Option<f64>,
    pub probability: f64,
    pub locc_bound: f64,
}

fn check_grid_in_family(grid: &Grid, family: ChannelFamily) -> Result<()> {
    grid.validate()?;
    if !family.contains(grid.min) || !family.contains(grid.max) {
        let (lo, hi) = family.range();
        return Err(Error::Config(format!(
            "r grid [{}, {}] outside the {} range [{lo}, {hi}]",
            grid.min, grid.max, family
        )));
    }
    Ok(())
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target == TargetForm::Explicit {
            return Err(Error::Config("sweeps need a phi or psi target".into()));
        }
        check_grid_in_family(&self.r_grid, self.family1)?;
        match &self.r2_grid {
            Some(g) => check_grid_in_family(g, self.family2)?,
            None => check_grid_in_family(&self.r_grid, self.family2)?,
        }
        self.c_in_grid.validate()?;
        if self.c_in_grid.min < 0.0 || self.c_in_grid.max > 1.0 {
            return Err(Error::Config("c_in grid outside [0, 1]".into()));
        }
        Ok(())
    }

    /// `(r1, r2, c_in)` in output order: `r1` outermost, `c_in` innermost.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let r1s = self.r_grid.points();
        let cs = self.c_in_grid.points();
        let mut out = Vec::new();
        for &r1 in &r1s {
            let r2s = match &self.r2_grid {
                Some(g) => g.points(),
                None => vec![r1],
            };
            for &r2 in &r2s {
                for &c in &cs {
                    out.push((r1, r2, c));
                }
            }
        }
        out
    }
}

/// Evaluates the rigid protocol on every grid point, in parallel, returning
/// rows in grid order.
pub fn sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    config
        .points()
        .into_par_iter()
        .map(|(r1, r2, c_in)| {
            let target = TargetSpec::new(config.target, c_in)?;
            let ch1 = ChannelSpec::new(config.family1, r1)?;
            let ch2 = ChannelSpec::new(config.family2, r2)?;
            let protocol = Protocol::new(&target, &ch1, &ch2)?;
            let rigid = protocol.run_rigid()?;
            let fidelity_average = if config.average_outcomes {
                protocol.average_fidelity()?
            } else {
                None
            };
            Ok(SweepRow {
                r1,
                r2,
                c_in,
                c_out: rigid.c_out,
                signed_c_out: rigid.signed_c_out,
                fidelity_rigid: rigid.fidelity.expect("pure target"),
                fidelity_average,
                probability: rigid.probability,
                locc_bound: LOCC_FIDELITY,
            })
        })
        .collect()
}

/// The ideal channel `ρ¹(1) = |Φ⁺⟩⟨Φ⁺|`.
pub fn ideal_channel() -> ChannelSpec {
    ChannelSpec {
        family: ChannelFamily::Mems1,
        r: 1.0,
    }
}
