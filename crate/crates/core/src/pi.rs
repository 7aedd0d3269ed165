//! Discrimination with post-measurement information.
//!
//! The measurement has outcomes `ω = (ω₀, ω₁) ∈ Ω = (A₀ ∪ {?}) × (A₁ ∪ {?})`.
//! Once the subensemble index `b` is revealed, `ω_b` is the guess. Besides
//! the global optimum this module holds the minimum-error quantity
//! `p_guess` and the product-vector test that decides whether it bounds the
//! LOCC value.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::{Ensemble, EnsembleError, Label, ProductState, SUBENSEMBLE_LABELS};
use crate::linalg::{
    jacobi_eig, project_psd_mat, sum_ops, CMat, CVec, HermitianOp, LinalgError, C64,
    DEFAULT_TOL,
};

/// Completeness tolerance for PI POVMs.
pub const PI_COMPLETENESS_TOL: f64 = 1e-10;
/// Error-free tolerance for PI POVMs.
pub const PI_ERROR_FREE_TOL: f64 = 1e-10;
/// Accuracy target of [`solve_oud_pi`].
pub const PI_SOLVE_TOL: f64 = 1e-5;
/// Tolerance for accepting a minimum-error certificate.
pub const ME_CERTIFY_TOL: f64 = 1e-6;
/// Overlaps at or below this count as zero in the obstruction analysis.
pub const OBSTRUCTION_TOL: f64 = 1e-10;

const ALM_GAP: f64 = 1e-7;
const ALM_OUTER_MAX: usize = 2000;
const ALM_INNER: usize = 40;
const ALM_PENALTY: f64 = 1.0;
const ME_MAX_ITER: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PiError {
    #[error("effect {label} is not PSD (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { label: OmegaLabel, min_eigenvalue: f64 },
    #[error("effects do not sum to the identity (residual {residual:.3e})")]
    Incomplete { residual: f64 },
    #[error("effect {label} has dimension {dim}, expected 4")]
    BadDimension { label: OmegaLabel, dim: usize },
    #[error("invalid outcome label {0:?}")]
    BadOmega(String),
    #[error("pair ({0}, {1}) is not in A0 x A1")]
    PairNotInProduct(Label, Label),
    #[error("pair ({0}, {1}) has zero combined prior")]
    DegeneratePair(Label, Label),
    #[error("tilde-form evaluation differs by {mismatch:.3e}")]
    TildeMismatch { mismatch: f64 },
    #[error("solver did not converge: best value {best:.9}, gap {gap:.3e}")]
    NotConverged { best: f64, gap: f64 },
    #[error("priors and states differ in length ({priors} vs {states})")]
    LengthMismatch { priors: usize, states: usize },
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// An outcome `(ω₀, ω₁)` with `ω₀ ∈ {0, 1, ?}` and `ω₁ ∈ {+, -, ?}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct OmegaLabel {
    w0: Option<Label>,
    w1: Option<Label>,
}

impl OmegaLabel {
    pub const ALL: [OmegaLabel; 9] = [
        OmegaLabel::raw(Some(Label::Zero), Some(Label::Plus)),
        OmegaLabel::raw(Some(Label::Zero), Some(Label::Minus)),
        OmegaLabel::raw(Some(Label::One), Some(Label::Plus)),
        OmegaLabel::raw(Some(Label::One), Some(Label::Minus)),
        OmegaLabel::raw(Some(Label::Zero), None),
        OmegaLabel::raw(Some(Label::One), None),
        OmegaLabel::raw(None, Some(Label::Plus)),
        OmegaLabel::raw(None, Some(Label::Minus)),
        OmegaLabel::raw(None, None),
    ];

    /// The four pairs in `A₀ × A₁`.
    pub const PAIRS: [OmegaLabel; 4] = [
        OmegaLabel::ALL[0],
        OmegaLabel::ALL[1],
        OmegaLabel::ALL[2],
        OmegaLabel::ALL[3],
    ];

    pub const INCONCLUSIVE: OmegaLabel = OmegaLabel::raw(None, None);

    const fn raw(w0: Option<Label>, w1: Option<Label>) -> Self {
        OmegaLabel { w0, w1 }
    }

    pub fn new(w0: Option<Label>, w1: Option<Label>) -> Result<Self, PiError> {
        let ok0 = w0.is_none_or(|l| l.subensemble() == 0);
        let ok1 = w1.is_none_or(|l| l.subensemble() == 1);
        if !(ok0 && ok1) {
            return Err(PiError::BadOmega(format!(
                "{},{}",
                outcome_str(w0),
                outcome_str(w1)
            )));
        }
        Ok(OmegaLabel { w0, w1 })
    }

    pub fn w0(self) -> Option<Label> {
        self.w0
    }

    pub fn w1(self) -> Option<Label> {
        self.w1
    }

    /// `ω_b`.
    pub fn guess(self, b: usize) -> Option<Label> {
        if b == 0 {
            self.w0
        } else {
            self.w1
        }
    }

    /// Position in [`OmegaLabel::ALL`].
    pub fn index(self) -> usize {
        OmegaLabel::ALL.iter().position(|&o| o == self).unwrap()
    }

    /// The states this outcome must never fire on.
    pub fn forbidden(self) -> Vec<Label> {
        let mut out = Vec::new();
        match self.w0 {
            Some(Label::Zero) => out.push(Label::One),
            Some(Label::One) => out.push(Label::Zero),
            _ => {}
        }
        match self.w1 {
            Some(Label::Plus) => out.push(Label::Minus),
            Some(Label::Minus) => out.push(Label::Plus),
            _ => {}
        }
        out
    }
}

fn outcome_str(o: Option<Label>) -> &'static str {
    o.map_or("?", Label::as_str)
}

impl fmt::Display for OmegaLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", outcome_str(self.w0), outcome_str(self.w1))
    }
}

impl FromStr for OmegaLabel {
    type Err = PiError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PiError::BadOmega(s.to_string());
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        let part = |t: &str| -> Result<Option<Label>, PiError> {
            match t.trim() {
                "?" => Ok(None),
                other => other.parse().map(Some).map_err(|_| bad()),
            }
        };
        OmegaLabel::new(part(a)?, part(b)?).map_err(|_| bad())
    }
}

impl From<OmegaLabel> for String {
    fn from(o: OmegaLabel) -> String {
        o.to_string()
    }
}

impl TryFrom<String> for OmegaLabel {
    type Error = PiError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Nine-outcome POVM over `Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiPovm {
    effects: [HermitianOp; 9],
}

impl PiPovm {
    /// Effects in [`OmegaLabel::ALL`] order; checks positivity and completeness.
    pub fn new(effects: [HermitianOp; 9]) -> Result<Self, PiError> {
        for (label, m) in OmegaLabel::ALL.iter().zip(&effects) {
            if m.dim() != 4 {
                return Err(PiError::BadDimension {
                    label: *label,
                    dim: m.dim(),
                });
            }
            let min_eigenvalue = m.min_eigenvalue();
            if min_eigenvalue < -DEFAULT_TOL {
                return Err(PiError::NotPsd {
                    label: *label,
                    min_eigenvalue,
                });
            }
        }
        let residual = sum_ops(4, effects.iter()).distance(&HermitianOp::identity(4));
        if residual > PI_COMPLETENESS_TOL {
            return Err(PiError::Incomplete { residual });
        }
        Ok(PiPovm { effects })
    }

    /// Builds from `(label, effect)` pairs; missing outcomes are zero and
    /// repeated outcomes add up.
    pub fn from_pairs(
        pairs: impl IntoIterator<Item = (OmegaLabel, HermitianOp)>,
    ) -> Result<Self, PiError> {
        let mut effects: [HermitianOp; 9] = std::array::from_fn(|_| HermitianOp::zeros(4));
        for (label, m) in pairs {
            if m.dim() != 4 {
                return Err(PiError::BadDimension { label, dim: m.dim() });
            }
            let slot = &mut effects[label.index()];
            *slot = &*slot + &m;
        }
        PiPovm::new(effects)
    }

    /// All weight on `(?, ?)`.
    pub fn trivial() -> Self {
        let mut effects: [HermitianOp; 9] = std::array::from_fn(|_| HermitianOp::zeros(4));
        effects[8] = HermitianOp::identity(4);
        PiPovm { effects }
    }

    pub fn effect(&self, label: OmegaLabel) -> &HermitianOp {
        &self.effects[label.index()]
    }

    pub fn effects(&self) -> &[HermitianOp; 9] {
        &self.effects
    }

    pub fn iter(&self) -> impl Iterator<Item = (OmegaLabel, &HermitianOp)> {
        OmegaLabel::ALL.into_iter().zip(self.effects.iter())
    }

    pub fn completeness_residual(&self) -> f64 {
        sum_ops(4, self.effects.iter()).distance(&HermitianOp::identity(4))
    }
}

/// One error-free residual `Tr(ρ_state M_outcome)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiResidual {
    pub state: Label,
    pub outcome: OmegaLabel,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiVerdict {
    pub accepted: bool,
    pub residuals: Vec<PiResidual>,
    pub max_residual: f64,
}

/// Checks every zero condition: `Tr[ρ₋ M_(i,+)] = Tr[ρ₊ M_(i,-)] = 0` for
/// `i ∈ {0,1,?}` and `Tr[ρ₁ M_(0,j)] = Tr[ρ₀ M_(1,j)] = 0` for `j ∈ {+,-,?}`.
pub fn verify_pi_unambiguous(p: &PiPovm, e: &Ensemble, tol: f64) -> PiVerdict {
    let mut residuals = Vec::with_capacity(12);
    for outcome in OmegaLabel::ALL {
        for state in outcome.forbidden() {
            residuals.push(PiResidual {
                state,
                outcome,
                value: e.rho(state).trace_product(p.effect(outcome)),
            });
        }
    }
    let max_residual = residuals.iter().map(|r| r.value.abs()).fold(0.0, f64::max);
    PiVerdict {
        accepted: max_residual <= tol,
        residuals,
        max_residual,
    }
}

/// `Σ_b Σ_{ω_b ≠ ?} η_{ω_b} ρ_{ω_b}`, the objective weight of outcome `ω`.
fn objective_weight(e: &Ensemble, omega: OmegaLabel) -> HermitianOp {
    let mut c = HermitianOp::zeros(4);
    for label in [omega.w0, omega.w1].into_iter().flatten() {
        c = &c + &e.rho(label).scale(e.prior(label));
    }
    c
}

/// `Σ_b Σ_{i ∈ A_b} η_i Tr[ρ_i Σ_{ω_b = i} M_ω]`, cross-checked against the
/// rewriting with the pair states `ρ̃_ω` plus the one-sided terms.
pub fn pi_success_probability(p: &PiPovm, e: &Ensemble) -> Result<f64, PiError> {
    let mut direct = 0.0;
    for (b, labels) in SUBENSEMBLE_LABELS.iter().enumerate() {
        for &i in labels {
            let rho = e.rho(i);
            for (omega, m) in p.iter() {
                if omega.guess(b) == Some(i) {
                    direct += e.prior(i) * rho.trace_product(m);
                }
            }
        }
    }

    // the pair terms carry weight 2η̃_ω = η_{ω₀} + η_{ω₁}
    let mut rewritten = 0.0;
    for omega in OmegaLabel::PAIRS {
        let (a, b) = (omega.w0.unwrap(), omega.w1.unwrap());
        let weight = e.prior(a) + e.prior(b);
        if weight > 0.0 {
            let t = tilde_pair(e, omega)?;
            rewritten += 2.0 * t.eta * t.rho.trace_product(p.effect(omega));
        }
    }
    for omega in &OmegaLabel::ALL[4..8] {
        let i = omega.w0.or(omega.w1).unwrap();
        rewritten += e.prior(i) * e.rho(i).trace_product(p.effect(*omega));
    }
    let mismatch = (direct - rewritten).abs();
    if mismatch > 1e-12 {
        return Err(PiError::TildeMismatch { mismatch });
    }
    Ok(direct)
}

/// `η̃_ω = (η_{ω₀} + η_{ω₁}) / 2` and `ρ̃_ω = (η_{ω₀}ρ_{ω₀} + η_{ω₁}ρ_{ω₁}) / (η_{ω₀} + η_{ω₁})`.
#[derive(Clone, Debug, PartialEq)]
pub struct TildePair {
    pub omega: OmegaLabel,
    pub eta: f64,
    pub rho: HermitianOp,
}

fn tilde_pair(e: &Ensemble, omega: OmegaLabel) -> Result<TildePair, PiError> {
    let (a, b) = match (omega.w0, omega.w1) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(PiError::BadOmega(omega.to_string())),
    };
    let (ea, eb) = (e.prior(a), e.prior(b));
    let total = ea + eb;
    if !(total > 0.0) {
        return Err(PiError::DegeneratePair(a, b));
    }
    let rho = (&e.rho(a).scale(ea) + &e.rho(b).scale(eb)).scale(1.0 / total);
    Ok(TildePair {
        omega,
        eta: total / 2.0,
        rho,
    })
}

/// The four pair states over `A₀ × A₁`.
pub fn tilde_ensemble(e: &Ensemble) -> Result<[TildePair; 4], PiError> {
    let pairs: Vec<TildePair> = OmegaLabel::PAIRS
        .iter()
        .map(|&o| tilde_pair(e, o))
        .collect::<Result<_, _>>()?;
    Ok(pairs.try_into().unwrap())
}

/// Result of [`solve_oud_pi`].
#[derive(Clone, Debug)]
pub struct PiSolution {
    pub povm: PiPovm,
    /// Objective of `povm`; the best certified lower bound seen.
    pub value: f64,
    /// Dual upper bound on the optimum.
    pub upper_bound: f64,
    pub iterations: usize,
}

struct Block {
    /// Orthonormal basis of the admissible subspace, as columns.
    v: CMat,
    /// `V† C V`.
    c: CMat,
    /// Full-space objective weight.
    c_full: CMat,
}

/// Orthonormal basis of the complement of `span(vs)`, as columns.
fn complement_basis(vs: &[CVec]) -> CMat {
    let mut q: Vec<CVec> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for u in &q {
            w = &w - &u.scale(u.inner(&w));
        }
        if w.norm() > 1e-12 {
            q.push(w.normalized().unwrap());
        }
    }
    let mut proj = CMat::identity(4);
    for u in &q {
        proj = &proj - &u.outer();
    }
    let eig = jacobi_eig(&proj);
    let cols: Vec<CVec> = eig
        .values
        .iter()
        .zip(&eig.vectors)
        .filter(|(x, _)| **x > 0.5)
        .map(|(_, v)| v.clone())
        .collect();
    CMat::from_columns(&cols)
}

fn lift(v: &CMat, x: &CMat) -> CMat {
    &(v * x) * &v.adjoint()
}

fn restrict(v: &CMat, m: &CMat) -> CMat {
    &(&v.adjoint() * m) * v
}

/// Maximizes the PI objective over unambiguous nine-outcome POVMs.
///
/// Each constrained effect lives on the complement of its forbidden states,
/// so error-freeness holds by construction. Completeness is handled by an
/// augmented Lagrangian whose inner problem is solved by accelerated
/// projected gradient. Every outer round produces a feasible POVM (lower
/// bound) and a dual-feasible multiplier (upper bound).
pub fn solve_oud_pi(e: &Ensemble) -> Result<PiSolution, PiError> {
    let blocks: Vec<Block> = OmegaLabel::ALL
        .iter()
        .map(|&omega| {
            let forbidden: Vec<CVec> = omega.forbidden().iter().map(|&l| e.ket(l).clone()).collect();
            let v = complement_basis(&forbidden);
            let c_full = objective_weight(e, omega).into_matrix();
            let c = restrict(&v, &c_full);
            Block { v, c, c_full }
        })
        .collect();
    let identity = CMat::identity(4);
    let rho = ALM_PENALTY;
    let step = 1.0 / (9.0 * rho);

    let mut x: Vec<CMat> = blocks.iter().map(|b| CMat::zeros(b.v.cols(), b.v.cols())).collect();
    let mut y = CMat::zeros(4, 4);
    let mut best: Option<(f64, Vec<CMat>)> = None;
    let mut upper = f64::INFINITY;
    let mut iterations = 0;

    for _ in 0..ALM_OUTER_MAX {
        iterations += 1;
        // inner: FISTA on the augmented Lagrangian
        let mut prev = x.clone();
        let mut z = x.clone();
        let mut tk: f64 = 1.0;
        for _ in 0..ALM_INNER {
            let total = blocks
                .iter()
                .zip(&z)
                .fold(CMat::zeros(4, 4), |acc, (b, xi)| &acc + &lift(&b.v, xi));
            let shift = &y + &(&total - &identity).scale_real(rho);
            let next: Vec<CMat> = blocks
                .iter()
                .zip(&z)
                .map(|(b, zi)| {
                    let grad = &b.c - &restrict(&b.v, &shift);
                    project_psd_mat(&(zi + &grad.scale_real(step)))
                })
                .collect();
            let tn = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
            let mom = (tk - 1.0) / tn;
            z = next
                .iter()
                .zip(&prev)
                .map(|(n, p)| n + &(n - p).scale_real(mom))
                .collect();
            prev = next;
            tk = tn;
        }
        x = prev;

        let total = blocks
            .iter()
            .zip(&x)
            .fold(CMat::zeros(4, 4), |acc, (b, xi)| &acc + &lift(&b.v, xi));
        y = &y + &(&total - &identity).scale_real(rho);
        y = y.hermitian_part();

        // lower bound: shrink into ΣM ⪯ 1, remainder to (?,?)
        let lam = jacobi_eig(&total).max().max(1.0);
        let lower: f64 = blocks
            .iter()
            .zip(&x)
            .map(|(b, xi)| b.c.trace_product(xi).re / lam)
            .sum();
        if best.as_ref().is_none_or(|(v, _)| lower > *v) {
            best = Some((lower, x.iter().map(|xi| xi.scale_real(1.0 / lam)).collect()));
        }

        // upper bound: Y + t·1 is dual feasible
        let deficit = blocks
            .iter()
            .map(|b| -jacobi_eig(&restrict(&b.v, &(&y - &b.c_full))).min())
            .fold(0.0, f64::max);
        upper = upper.min(y.trace().re + 4.0 * deficit);

        let lb = best.as_ref().unwrap().0;
        if upper - lb <= ALM_GAP {
            break;
        }
    }

    let (value, xs) = best.expect("at least one outer round");
    let mut effects: Vec<HermitianOp> = blocks
        .iter()
        .zip(&xs)
        .map(|(b, xi)| HermitianOp::from_hermitian_part(&lift(&b.v, xi)))
        .collect();
    let rest = &HermitianOp::identity(4) - &sum_ops(4, effects.iter());
    effects[8] = &effects[8] + &rest;
    let povm = PiPovm::new(effects.try_into().unwrap())?;
    let gap = upper - value;
    if gap > PI_SOLVE_TOL {
        return Err(PiError::NotConverged { best: value, gap });
    }
    let value = pi_success_probability(&povm, e)?;
    Ok(PiSolution {
        povm,
        value,
        upper_bound: upper,
        iterations,
    })
}

/// Which tensor factor a zero constraint `<c_j ⊗ d_j | a ⊗ b> = 0` is put on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Factor {
    /// `a ⊥ c_j`.
    A,
    /// `b ⊥ d_j`.
    B,
}

/// How a branch of the case analysis ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BranchOutcome {
    /// Both zero constraints land on one factor that cannot be orthogonal
    /// to two non-parallel vectors.
    Inconsistent { factor: Factor },
    /// The forced vector is orthogonal to the state of `label`.
    VanishingOverlap { label: Label, overlap: f64 },
    Witness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    /// Factor choice for the two zero constraints, in label order.
    pub choice: [Factor; 2],
    pub outcome: BranchOutcome,
}

/// Case analysis for one pair `(ω₀, ω₁)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObstructionReport {
    pub pair: (Label, Label),
    /// The two labels whose overlaps must vanish.
    pub zero_labels: [Label; 2],
    pub branches: Vec<Branch>,
    /// A product vector with nonzero overlap on the pair and zero overlap
    /// on the other two states, if any.
    pub witness: Option<ProductState>,
}

impl ObstructionReport {
    /// True when no product vector exists.
    pub fn is_empty(&self) -> bool {
        self.witness.is_none()
    }
}

fn parallel(u: &CVec, v: &CVec) -> bool {
    u.inner(v).norm() >= 1.0 - OBSTRUCTION_TOL
}

/// Unit vectors not orthogonal to either of `d0`, `d1` whenever one exists.
fn free_factor_candidates(d0: &CVec, d1: &CVec) -> Vec<CVec> {
    let i = C64::new(0.0, 1.0);
    [
        d0.clone(),
        d1.clone(),
        d0 + d1,
        d0 - d1,
        d0 + &d1.scale(i),
        d0 - &d1.scale(i),
    ]
    .into_iter()
    .filter_map(|v| v.normalized().ok())
    .collect()
}

/// Decides whether a product vector `v = a ⊗ b` exists with
/// `<φ_i|v> != 0` for `i ∈ {ω₀, ω₁}` and `<φ_j|v> = 0` for the other two.
///
/// Each zero constraint forces `a ⊥ c_j` or `b ⊥ d_j`; the four branch
/// combinations fix `a` and/or `b` up to phase, so the enumeration is exact.
pub fn product_vector_obstruction(
    e: &Ensemble,
    pair: (Label, Label),
) -> Result<ObstructionReport, PiError> {
    let (p0, p1) = pair;
    if p0.subensemble() != 0 || p1.subensemble() != 1 {
        return Err(PiError::PairNotInProduct(p0, p1));
    }
    let zero: Vec<Label> = Label::ALL.into_iter().filter(|&l| l != p0 && l != p1).collect();
    let zero_labels = [zero[0], zero[1]];
    let (j1, j2) = (e.state(zero_labels[0]), e.state(zero_labels[1]));
    let (s0, s1) = (e.state(p0), e.state(p1));

    let check = |a: &CVec, b: &CVec| -> BranchOutcome {
        for (label, s) in [(p0, s0), (p1, s1)] {
            let overlap = (s.a.inner(a) * s.b.inner(b)).norm();
            if overlap <= OBSTRUCTION_TOL {
                return BranchOutcome::VanishingOverlap { label, overlap };
            }
        }
        BranchOutcome::Witness
    };

    let mut branches = Vec::with_capacity(4);
    let mut witness = None;
    for choice in [
        [Factor::A, Factor::A],
        [Factor::A, Factor::B],
        [Factor::B, Factor::A],
        [Factor::B, Factor::B],
    ] {
        let found: Result<(CVec, CVec), BranchOutcome> = match choice {
            [Factor::A, Factor::A] | [Factor::B, Factor::B] => {
                let on_a = choice[0] == Factor::A;
                let (u1, u2) = if on_a { (&j1.a, &j2.a) } else { (&j1.b, &j2.b) };
                if !parallel(u1, u2) {
                    Err(BranchOutcome::Inconsistent { factor: choice[0] })
                } else {
                    let fixed = u1.orthogonal_qubit();
                    let (d0, d1) = if on_a { (&s0.b, &s1.b) } else { (&s0.a, &s1.a) };
                    let mut last = BranchOutcome::Inconsistent { factor: choice[0] };
                    let mut hit = None;
                    for free in free_factor_candidates(d0, d1) {
                        let (a, b) = if on_a {
                            (fixed.clone(), free)
                        } else {
                            (free, fixed.clone())
                        };
                        match check(&a, &b) {
                            BranchOutcome::Witness => {
                                hit = Some((a, b));
                                break;
                            }
                            other => last = other,
                        }
                    }
                    hit.ok_or(last)
                }
            }
            [Factor::A, Factor::B] => Ok((j1.a.orthogonal_qubit(), j2.b.orthogonal_qubit())),
            [Factor::B, Factor::A] => Ok((j2.a.orthogonal_qubit(), j1.b.orthogonal_qubit())),
        };
        let outcome = match found {
            Ok((a, b)) => {
                let outcome = check(&a, &b);
                if outcome == BranchOutcome::Witness && witness.is_none() {
                    witness = Some(ProductState::new(a, b));
                }
                outcome
            }
            Err(outcome) => outcome,
        };
        branches.push(Branch { choice, outcome });
    }
    Ok(ObstructionReport {
        pair,
        zero_labels,
        branches,
        witness,
    })
}

/// `K_me`, the dual operator of the minimum-error problem.
#[derive(Clone, Debug, PartialEq)]
pub struct MeCertificate {
    pub k: HermitianOp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeMethod {
    /// Square-root fixed-point iteration.
    FixedPoint,
    /// Projected gradient with square-root renormalization.
    ProjectedGradient,
}

/// Result of [`solve_me`].
#[derive(Clone, Debug)]
pub struct MeSolution {
    /// One effect per state, in input order.
    pub effects: Vec<HermitianOp>,
    pub value: f64,
    pub certificate: MeCertificate,
    /// `min_i λ_min(K_me - η_i ρ_i)`.
    pub certificate_residual: f64,
    pub iterations: usize,
    pub method: MeMethod,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeVerdict {
    pub accepted: bool,
    /// `min_i λ_min(K_me - η_i ρ_i)`, must be `>= -tol`.
    pub feasibility: f64,
    pub trace_k: f64,
    /// `|Tr K_me - value|` when a value to match was supplied.
    pub tightness: Option<f64>,
}

fn me_residual(k: &HermitianOp, priors: &[f64], rhos: &[HermitianOp]) -> f64 {
    priors
        .iter()
        .zip(rhos)
        .map(|(&p, r)| (k - &r.scale(p)).min_eigenvalue())
        .fold(f64::INFINITY, f64::min)
}

fn me_certificate(priors: &[f64], rhos: &[HermitianOp], m: &[CMat]) -> HermitianOp {
    let mut k = CMat::zeros(4, 4);
    for ((&p, r), mi) in priors.iter().zip(rhos).zip(m) {
        k = &k + &(r.matrix() * mi).scale_real(p);
    }
    HermitianOp::from_hermitian_part(&k)
}

fn me_value(priors: &[f64], rhos: &[HermitianOp], m: &[CMat]) -> f64 {
    priors
        .iter()
        .zip(rhos)
        .zip(m)
        .map(|((&p, r), mi)| p * r.matrix().trace_product(mi).re)
        .sum()
}

/// `A^{-1/2}` on the support of `a`, zero on its kernel.
fn inv_sqrt_on_support(a: &CMat) -> (CMat, CMat) {
    let eig = jacobi_eig(a);
    let cut = 1e-13 * eig.max().abs().max(1.0);
    let inv = eig.map(|x| if x > cut { 1.0 / x.sqrt() } else { 0.0 });
    let kernel = eig.map(|x| if x > cut { 0.0 } else { 1.0 });
    (inv, kernel)
}

/// Maximum of `Σ η_i Tr(ρ_i M_i)` over all four-outcome POVMs.
pub fn solve_me(e: &Ensemble) -> Result<MeSolution, PiError> {
    let rhos: Vec<HermitianOp> = Label::ALL.iter().map(|&l| e.rho(l)).collect();
    solve_me_states(&e.priors(), &rhos)
}

/// Minimum-error discrimination of arbitrary weighted two-qubit states.
///
/// Runs the square-root fixed-point iteration and, if its certificate is
/// still infeasible, a projected-gradient pass; the better result wins.
pub fn solve_me_states(priors: &[f64], rhos: &[HermitianOp]) -> Result<MeSolution, PiError> {
    if priors.len() != rhos.len() || priors.is_empty() {
        return Err(PiError::LengthMismatch {
            priors: priors.len(),
            states: rhos.len(),
        });
    }
    for r in rhos {
        if r.dim() != 4 {
            return Err(LinalgError::DimensionMismatch {
                expected: 4,
                found: r.dim(),
            }
            .into());
        }
    }
    let fixed = me_fixed_point(priors, rhos);
    let sol = if fixed.certificate_residual >= -ME_CERTIFY_TOL {
        fixed
    } else {
        let pg = me_projected_gradient(priors, rhos);
        if pg.certificate_residual > fixed.certificate_residual {
            pg
        } else {
            fixed
        }
    };
    if sol.certificate_residual < -ME_CERTIFY_TOL {
        return Err(PiError::NotConverged {
            best: sol.value,
            gap: -sol.certificate_residual,
        });
    }
    Ok(sol)
}

fn finish_me(
    priors: &[f64],
    rhos: &[HermitianOp],
    m: Vec<CMat>,
    iterations: usize,
    method: MeMethod,
) -> MeSolution {
    let k = me_certificate(priors, rhos, &m);
    let certificate_residual = me_residual(&k, priors, rhos);
    MeSolution {
        value: me_value(priors, rhos, &m),
        effects: m.iter().map(HermitianOp::from_hermitian_part).collect(),
        certificate: MeCertificate { k },
        certificate_residual,
        iterations,
        method,
    }
}

fn me_fixed_point(priors: &[f64], rhos: &[HermitianOp]) -> MeSolution {
    let n = priors.len();
    let mut m: Vec<CMat> = vec![CMat::identity(4).scale_real(1.0 / n as f64); n];
    let mut last_value = f64::NEG_INFINITY;
    let mut stable = 0;
    let mut iterations = 0;
    while iterations < ME_MAX_ITER {
        iterations += 1;
        let weighted: Vec<CMat> = priors
            .iter()
            .zip(rhos)
            .zip(&m)
            .map(|((&p, r), mi)| r.matrix().sandwich(mi).scale_real(p * p))
            .collect();
        let gamma2 = weighted.iter().fold(CMat::zeros(4, 4), |acc, w| &acc + w);
        let (inv, kernel) = inv_sqrt_on_support(&gamma2);
        m = weighted.iter().map(|w| inv.sandwich(w).hermitian_part()).collect();
        m[0] = &m[0] + &kernel;

        if iterations % 10 == 0 {
            let k = me_certificate(priors, rhos, &m);
            if me_residual(&k, priors, rhos) >= -1e-12 {
                break;
            }
            let value = me_value(priors, rhos, &m);
            if (value - last_value).abs() <= 1e-15 {
                stable += 1;
                if stable >= 10 {
                    break;
                }
            } else {
                stable = 0;
            }
            last_value = value;
        }
    }
    finish_me(priors, rhos, m, iterations, MeMethod::FixedPoint)
}

fn me_projected_gradient(priors: &[f64], rhos: &[HermitianOp]) -> MeSolution {
    let n = priors.len();
    let mut m: Vec<CMat> = vec![CMat::identity(4).scale_real(1.0 / n as f64); n];
    let mut iterations = 0;
    let step = 0.5;
    while iterations < ME_MAX_ITER {
        iterations += 1;
        let moved: Vec<CMat> = priors
            .iter()
            .zip(rhos)
            .zip(&m)
            .map(|((&p, r), mi)| project_psd_mat(&(mi + &r.matrix().scale_real(step * p))))
            .collect();
        let total = moved.iter().fold(CMat::zeros(4, 4), |acc, x| &acc + x);
        let (inv, kernel) = inv_sqrt_on_support(&total);
        m = moved.iter().map(|x| inv.sandwich(x).hermitian_part()).collect();
        m[0] = &m[0] + &kernel;
        if iterations % 10 == 0 {
            let k = me_certificate(priors, rhos, &m);
            if me_residual(&k, priors, rhos) >= -1e-12 {
                break;
            }
        }
    }
    finish_me(priors, rhos, m, iterations, MeMethod::ProjectedGradient)
}

/// Accepts iff `K_me - η_i ρ_i ⪰ 0` within `tol` for all `i` and, when
/// `value` is given, `Tr K_me` matches it within `tol`.
pub fn verify_me_certificate(
    c: &MeCertificate,
    e: &Ensemble,
    tol: f64,
    value: Option<f64>,
) -> MeVerdict {
    let rhos: Vec<HermitianOp> = Label::ALL.iter().map(|&l| e.rho(l)).collect();
    let feasibility = me_residual(&c.k, &e.priors(), &rhos);
    let trace_k = c.k.trace();
    let tightness = value.map(|v| (trace_k - v).abs());
    MeVerdict {
        accepted: feasibility >= -tol && tightness.is_none_or(|t| t <= tol),
        feasibility,
        trace_k,
        tightness,
    }
}

/// `p_guess` when no pair admits a product vector, otherwise `None`.
pub fn guess_upper_bound(e: &Ensemble) -> Result<Option<f64>, PiError> {
    for omega in OmegaLabel::PAIRS {
        let report = product_vector_obstruction(e, (omega.w0.unwrap(), omega.w1.unwrap()))?;
        if !report.is_empty() {
            return Ok(None);
        }
    }
    Ok(Some(solve_me(e)?.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{computational_basis, make_lock_example, make_unlock_example, ExampleParams};

    const GRID: [f64; 4] = [2.0, 3.0, 5.0, 10.0];

    fn params(g: f64) -> ExampleParams {
        ExampleParams::new(g).unwrap()
    }

    fn om(s: &str) -> OmegaLabel {
        s.parse().unwrap()
    }

    fn proj(v: &CVec) -> HermitianOp {
        HermitianOp::projector(v)
    }

    fn pi_closed_form(g: f64) -> f64 {
        0.5 * (1.0 + (1.0 + g * g).sqrt() / (1.0 + g))
    }

    fn fmem(g: f64) -> PiPovm {
        let r = g / (2.0 * (1.0 + g * g).sqrt());
        let nu_p = CVec::from_real(&[(0.5 - r).sqrt(), (0.5 + r).sqrt()]);
        let nu_m = CVec::from_real(&[(0.5 + r).sqrt(), -(0.5 - r).sqrt()]);
        let (k0, k1, kp, km) = (CVec::ket0(), CVec::ket1(), CVec::ket_plus(), CVec::ket_minus());
        PiPovm::from_pairs([
            (om("0,?"), proj(&nu_m.kron(&k0))),
            (om("1,?"), proj(&nu_m.kron(&k1))),
            (om("?,+"), proj(&nu_p.kron(&kp))),
            (om("?,-"), proj(&nu_p.kron(&km))),
        ])
        .unwrap()
    }

    fn lock_product_povm() -> PiPovm {
        let (k0, k1, kp, km) = (CVec::ket0(), CVec::ket1(), CVec::ket_plus(), CVec::ket_minus());
        let mut pairs = Vec::new();
        for (y, ly) in [(&k0, "0"), (&k1, "1")] {
            for (x, lx) in [(&kp, "+"), (&km, "-")] {
                pairs.push((om(&format!("{ly},{lx}")), proj(&x.kron(y))));
            }
        }
        PiPovm::from_pairs(pairs).unwrap()
    }

    #[test]
    fn omega_has_nine_distinct_labels() {
        let mut strings: Vec<String> = OmegaLabel::ALL.iter().map(|o| o.to_string()).collect();
        assert_eq!(strings[0], "0,+");
        assert_eq!(strings[8], "?,?");
        strings.sort();
        strings.dedup();
        assert_eq!(strings.len(), 9);
        for o in OmegaLabel::ALL {
            assert_eq!(o.to_string().parse::<OmegaLabel>().unwrap(), o);
            assert_eq!(OmegaLabel::ALL[o.index()], o);
        }
        assert!("+,0".parse::<OmegaLabel>().is_err());
        assert!("0".parse::<OmegaLabel>().is_err());
        let json = serde_json::to_string(&om("1,-")).unwrap();
        assert_eq!(json, "\"1,-\"");
        assert_eq!(serde_json::from_str::<OmegaLabel>(&json).unwrap(), om("1,-"));
    }

    #[test]
    fn twelve_zero_conditions() {
        let n: usize = OmegaLabel::ALL.iter().map(|o| o.forbidden().len()).sum();
        assert_eq!(n, 12);
    }

    #[test]
    fn povm_validation() {
        let mut effects: [HermitianOp; 9] = std::array::from_fn(|_| HermitianOp::zeros(4));
        assert!(matches!(
            PiPovm::new(effects.clone()),
            Err(PiError::Incomplete { .. })
        ));
        effects[8] = HermitianOp::identity(4).scale(1.5);
        effects[0] = HermitianOp::identity(4).scale(-0.5);
        assert!(matches!(PiPovm::new(effects), Err(PiError::NotPsd { .. })));
    }

    #[test]
    fn fmem_is_unambiguous_and_hits_closed_form() {
        for g in GRID {
            let e = make_unlock_example(params(g));
            let p = fmem(g);
            let v = verify_pi_unambiguous(&p, &e, PI_ERROR_FREE_TOL);
            assert!(v.accepted, "{v:?}");
            assert_eq!(v.residuals.len(), 12);
            let value = pi_success_probability(&p, &e).unwrap();
            assert!((value - pi_closed_form(g)).abs() < 1e-12);
        }
    }

    #[test]
    fn trivial_povm() {
        let e = make_unlock_example(params(2.0));
        let p = PiPovm::trivial();
        assert!(verify_pi_unambiguous(&p, &e, 1e-12).accepted);
        assert_eq!(pi_success_probability(&p, &e).unwrap(), 0.0);
    }

    #[test]
    fn direct_violation_is_reported() {
        let e = make_unlock_example(params(2.0));
        let phi1 = e.ket(Label::One).clone();
        let p = PiPovm::from_pairs([
            (om("0,+"), proj(&phi1)),
            (OmegaLabel::INCONCLUSIVE, &HermitianOp::identity(4) - &proj(&phi1)),
        ])
        .unwrap();
        let v = verify_pi_unambiguous(&p, &e, PI_ERROR_FREE_TOL);
        assert!(!v.accepted);
        let r = v
            .residuals
            .iter()
            .find(|r| r.state == Label::One && r.outcome == om("0,+"))
            .unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lock_product_povm_is_perfect() {
        for g in GRID {
            let e = make_lock_example(params(g));
            let p = lock_product_povm();
            assert!(verify_pi_unambiguous(&p, &e, PI_ERROR_FREE_TOL).accepted);
            assert!((pi_success_probability(&p, &e).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tilde_pairs() {
        let e = make_lock_example(params(2.0));
        let t = tilde_ensemble(&e).unwrap();
        assert!((t[0].eta - 0.25).abs() < 1e-15);
        let want = (&e.rho(Label::Zero).scale(2.0) + &e.rho(Label::Plus)).scale(1.0 / 3.0);
        assert!(t[0].rho.distance(&want) < 1e-15);
        for p in &t {
            assert!((p.rho.trace() - 1.0).abs() < 1e-12);
            assert!(p.rho.is_psd(1e-12));
        }
        let total: f64 = t.iter().map(|p| p.eta).sum();
        assert!((total - 1.0).abs() < 1e-12);

        let u = tilde_ensemble(&computational_basis([0.25; 4]).unwrap()).unwrap();
        assert!(u.iter().all(|p| (p.eta - 0.25).abs() < 1e-15));
    }

    #[test]
    fn tilde_rejects_degenerate_pair() {
        let e = computational_basis([0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(tilde_ensemble(&e).is_ok());
        let e = computational_basis([0.0, 0.5, 0.0, 0.5]).unwrap();
        assert!(matches!(
            tilde_ensemble(&e),
            Err(PiError::DegeneratePair(Label::Zero, Label::Plus))
        ));
    }

    #[test]
    fn solve_pi_examples() {
        for g in [2.0, 5.0, 100.0] {
            for e in [make_lock_example(params(g)), make_unlock_example(params(g))] {
                let sol = solve_oud_pi(&e).unwrap();
                assert!((sol.value - 1.0).abs() < PI_SOLVE_TOL, "{g} {}", sol.value);
                assert!(sol.upper_bound >= sol.value - 1e-9);
                assert!(verify_pi_unambiguous(&sol.povm, &e, PI_ERROR_FREE_TOL).accepted);
                assert!(sol.povm.completeness_residual() < PI_COMPLETENESS_TOL);
            }
        }
        let sol = solve_oud_pi(&computational_basis([0.25; 4]).unwrap()).unwrap();
        assert!((sol.value - 1.0).abs() < PI_SOLVE_TOL);
    }

    #[test]
    fn obstruction_unlock_has_no_witness() {
        let e = make_unlock_example(params(2.0));
        for omega in OmegaLabel::PAIRS {
            let r = product_vector_obstruction(&e, (omega.w0().unwrap(), omega.w1().unwrap())).unwrap();
            assert!(r.is_empty(), "{omega}");
            assert_eq!(r.branches.len(), 4);
        }
        let r = product_vector_obstruction(&e, (Label::Zero, Label::Plus)).unwrap();
        assert_eq!(r.zero_labels, [Label::One, Label::Minus]);
        // a cannot be orthogonal to both |0> and |+>
        assert_eq!(
            r.branches[0].outcome,
            BranchOutcome::Inconsistent { factor: Factor::A }
        );
    }

    #[test]
    fn obstruction_lock_pair_has_witness() {
        let e = make_lock_example(params(2.0));
        let r = product_vector_obstruction(&e, (Label::Zero, Label::Plus)).unwrap();
        let w = r.witness.unwrap();
        let v = w.ket();
        let want = CVec::ket_plus().kron(&CVec::ket0());
        assert!((v.inner(&want).norm() - 1.0).abs() < 1e-12);
        assert!(e.ket(Label::One).inner(&v).norm() < 1e-12);
        assert!(e.ket(Label::Minus).inner(&v).norm() < 1e-12);
        assert!(e.ket(Label::Zero).inner(&v).norm() > 0.5);
        assert!(e.ket(Label::Plus).inner(&v).norm() > 0.5);
    }

    #[test]
    fn obstruction_rejects_bad_pair() {
        let e = make_lock_example(params(2.0));
        assert!(matches!(
            product_vector_obstruction(&e, (Label::Plus, Label::Zero)),
            Err(PiError::PairNotInProduct(..))
        ));
        assert!(product_vector_obstruction(&e, (Label::Zero, Label::One)).is_err());
    }

    #[test]
    fn me_unlock_closed_form() {
        for g in GRID {
            let e = make_unlock_example(params(g));
            let sol = solve_me(&e).unwrap();
            assert!((sol.value - pi_closed_form(g)).abs() < 1e-6, "{g} {}", sol.value);
            let fm = pi_success_probability(&fmem(g), &e).unwrap();
            assert!(sol.value >= fm - 1e-9);
            let v = verify_me_certificate(&sol.certificate, &e, ME_CERTIFY_TOL, Some(sol.value));
            assert!(v.accepted, "{v:?}");
        }
        let e = make_unlock_example(params(2.0));
        let k = solve_me(&e).unwrap().certificate;
        assert!((k.k.trace() - 0.872_677_996_2).abs() < 1e-6);
    }

    #[test]
    fn me_orthonormal_basis() {
        let e = computational_basis([0.1, 0.2, 0.3, 0.4]).unwrap();
        let sol = solve_me(&e).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn me_certificate_guards() {
        let e = make_unlock_example(params(2.0));
        let loose = MeCertificate {
            k: HermitianOp::identity(4),
        };
        let v = verify_me_certificate(&loose, &e, ME_CERTIFY_TOL, None);
        assert!(v.accepted);
        assert_eq!(v.trace_k, 4.0);
        let v = verify_me_certificate(&loose, &e, ME_CERTIFY_TOL, Some(pi_closed_form(2.0)));
        assert!(!v.accepted);
        let zero = MeCertificate {
            k: HermitianOp::zeros(4),
        };
        assert!(!verify_me_certificate(&zero, &e, ME_CERTIFY_TOL, None).accepted);
    }

    #[test]
    fn me_two_state_matches_helstrom() {
        let e = make_lock_example(params(3.0));
        for (a, b) in [(Label::Zero, Label::Plus), (Label::Zero, Label::One), (Label::Plus, Label::Minus)] {
            let (pa, pb) = (e.prior(a), e.prior(b));
            let (ra, rb) = (e.rho(a), e.rho(b));
            let sol = solve_me_states(&[pa, pb], &[ra.clone(), rb.clone()]).unwrap();
            let helstrom = 0.5 * (pa + pb) + 0.5 * (&ra.scale(pa) - &rb.scale(pb)).trace_norm();
            assert!((sol.value - helstrom).abs() < 1e-8, "{a}{b}: {} vs {helstrom}", sol.value);
        }
    }

    #[test]
    fn guess_bound_closes() {
        for g in GRID {
            let e = make_unlock_example(params(g));
            let bound = guess_upper_bound(&e).unwrap().unwrap();
            assert!((bound - pi_closed_form(g)).abs() < 1e-6);
        }
        assert_eq!(guess_upper_bound(&make_lock_example(params(2.0))).unwrap(), None);
    }

    #[test]
    fn guess_bound_computational_basis_matches_enumeration() {
        let e = computational_basis([0.25; 4]).unwrap();
        let any_witness = OmegaLabel::PAIRS.iter().any(|o| {
            !product_vector_obstruction(&e, (o.w0().unwrap(), o.w1().unwrap()))
                .unwrap()
                .is_empty()
        });
        assert_eq!(guess_upper_bound(&e).unwrap().is_none(), any_witness);
    }
}
