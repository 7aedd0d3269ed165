//! Two-round LOCC protocols and the bounds on what LOCC can achieve.
//!
//! A protocol is one local measurement by the first party followed by a
//! measurement of the other party chosen by the first outcome. Every leaf
//! `(i, j)` carries a label from the alphabet of its mode: `Λ ∪ {?}` for
//! plain unambiguous discrimination, `Ω` when post-measurement information
//! is used.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::{reciprocal_basis, Ensemble, EnsembleError, ExampleParams, Label, Outcome};
use crate::linalg::{kron, sum_ops, CVec, HermitianOp, LinalgError, DEFAULT_TOL};
use crate::pi::{pi_success_probability, verify_pi_unambiguous, OmegaLabel, PiError, PiPovm};

/// Completeness tolerance for local and compiled measurements.
pub const LOCAL_COMPLETENESS_TOL: f64 = 1e-10;
/// Error-free tolerance when scoring a protocol.
pub const LOCC_ERROR_FREE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoccError {
    #[error("local effect {index} of party {party} is not a PSD qubit operator")]
    BadLocalEffect { party: Party, index: usize },
    #[error("local measurement of party {party} is incomplete (residual {residual:.3e})")]
    Incomplete { party: Party, residual: f64 },
    #[error("round-two measurement after outcome {outcome} must be made by party {expected}")]
    WrongParty { outcome: usize, expected: Party },
    #[error("no round-two measurement for round-one outcome {0}")]
    MissingRound2(usize),
    #[error("round-two measurement given for nonexistent outcome {0}")]
    ExtraRound2(usize),
    #[error("leaf ({0}, {1}) has no label")]
    UnlabeledLeaf(usize, usize),
    #[error("label on nonexistent leaf ({0}, {1})")]
    ExtraLabel(usize, usize),
    #[error("leaf label {label} does not belong to the {mode} alphabet")]
    ModeMismatch { label: LeafLabel, mode: Mode },
    #[error("compiled effects do not sum to the identity (residual {residual:.3e})")]
    NotComplete { residual: f64 },
    #[error("operator is not PSD (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("protocol is not unambiguous for this ensemble: Tr(rho_{state} M_{outcome}) = {value:.3e}")]
    ErrorFreeViolated { state: Label, outcome: String, value: f64 },
    #[error(transparent)]
    Pi(#[from] PiError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::A => "A",
            Party::B => "B",
        })
    }
}

/// Outcome alphabet of a protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `Λ ∪ {?}`.
    Plain,
    /// `Ω`.
    Pi,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Plain => "plain",
            Mode::Pi => "pi",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LeafLabel {
    Plain(Outcome),
    Pi(OmegaLabel),
}

impl LeafLabel {
    pub fn mode(self) -> Mode {
        match self {
            LeafLabel::Plain(_) => Mode::Plain,
            LeafLabel::Pi(_) => Mode::Pi,
        }
    }

    pub fn parse(s: &str, mode: Mode) -> Result<Self, LoccError> {
        match mode {
            Mode::Plain => match s.trim() {
                "?" => Ok(LeafLabel::Plain(None)),
                other => Ok(LeafLabel::Plain(Some(other.parse()?))),
            },
            Mode::Pi => Ok(LeafLabel::Pi(s.parse()?)),
        }
    }
}

impl fmt::Display for LeafLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LeafLabel::Plain(None) => f.write_str("?"),
            LeafLabel::Plain(Some(l)) => write!(f, "{l}"),
            LeafLabel::Pi(o) => write!(f, "{o}"),
        }
    }
}

/// A complete qubit measurement by one party.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalMeasurement {
    party: Party,
    effects: Vec<HermitianOp>,
}

impl LocalMeasurement {
    pub fn new(party: Party, effects: Vec<HermitianOp>) -> Result<Self, LoccError> {
        for (index, m) in effects.iter().enumerate() {
            if m.dim() != 2 || !m.is_psd(DEFAULT_TOL) {
                return Err(LoccError::BadLocalEffect { party, index });
            }
        }
        let residual = sum_ops(2, effects.iter()).distance(&HermitianOp::identity(2));
        if effects.is_empty() || residual > LOCAL_COMPLETENESS_TOL {
            return Err(LoccError::Incomplete { party, residual });
        }
        Ok(LocalMeasurement { party, effects })
    }

    /// Projective measurement onto an orthonormal qubit basis.
    pub fn projective(party: Party, basis: [&CVec; 2]) -> Result<Self, LoccError> {
        LocalMeasurement::new(party, basis.iter().map(|v| HermitianOp::projector(v)).collect())
    }

    /// `{|0><0|, |1><1|}`.
    pub fn computational(party: Party) -> Self {
        LocalMeasurement::projective(party, [&CVec::ket0(), &CVec::ket1()]).unwrap()
    }

    /// `{|+><+|, |-><-|}`.
    pub fn hadamard(party: Party) -> Self {
        LocalMeasurement::projective(party, [&CVec::ket_plus(), &CVec::ket_minus()]).unwrap()
    }

    /// The single effect `1`.
    pub fn trivial(party: Party) -> Self {
        LocalMeasurement {
            party,
            effects: vec![HermitianOp::identity(2)],
        }
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn effects(&self) -> &[HermitianOp] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }
}

/// One measurement by `first_party`, then one by the other party chosen by
/// the first outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct LoccProtocol {
    mode: Mode,
    round1: LocalMeasurement,
    round2: Vec<LocalMeasurement>,
    labels: BTreeMap<(usize, usize), LeafLabel>,
}

impl LoccProtocol {
    pub fn new(
        mode: Mode,
        round1: LocalMeasurement,
        round2: Vec<LocalMeasurement>,
        labels: BTreeMap<(usize, usize), LeafLabel>,
    ) -> Result<Self, LoccError> {
        let second = round1.party().other();
        if round2.len() < round1.len() {
            return Err(LoccError::MissingRound2(round2.len()));
        }
        if round2.len() > round1.len() {
            return Err(LoccError::ExtraRound2(round1.len()));
        }
        for (outcome, m) in round2.iter().enumerate() {
            if m.party() != second {
                return Err(LoccError::WrongParty {
                    outcome,
                    expected: second,
                });
            }
            for j in 0..m.len() {
                if !labels.contains_key(&(outcome, j)) {
                    return Err(LoccError::UnlabeledLeaf(outcome, j));
                }
            }
        }
        for (&(i, j), &label) in &labels {
            if i >= round2.len() || j >= round2[i].len() {
                return Err(LoccError::ExtraLabel(i, j));
            }
            if label.mode() != mode {
                return Err(LoccError::ModeMismatch { label, mode });
            }
        }
        Ok(LoccProtocol {
            mode,
            round1,
            round2,
            labels,
        })
    }

    /// Same second-round measurement after every first outcome.
    pub fn one_way(
        mode: Mode,
        round1: LocalMeasurement,
        round2: LocalMeasurement,
        labels: BTreeMap<(usize, usize), LeafLabel>,
    ) -> Result<Self, LoccError> {
        let n = round1.len();
        LoccProtocol::new(mode, round1, vec![round2; n], labels)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn first_party(&self) -> Party {
        self.round1.party()
    }

    pub fn round1(&self) -> &LocalMeasurement {
        &self.round1
    }

    pub fn round2(&self) -> &[LocalMeasurement] {
        &self.round2
    }

    pub fn labels(&self) -> &BTreeMap<(usize, usize), LeafLabel> {
        &self.labels
    }

    /// Reads a plain protocol in the PI alphabet: a guess `i ∈ A_b` becomes
    /// `ω_b = i` with `?` on the other side. Its PI score equals its plain
    /// score, so `p_L^PI >= p_L`. PI protocols are returned unchanged.
    pub fn lift_to_pi(&self) -> LoccProtocol {
        let labels = self
            .labels
            .iter()
            .map(|(&k, &l)| {
                let lifted = match l {
                    LeafLabel::Plain(None) => OmegaLabel::INCONCLUSIVE,
                    LeafLabel::Plain(Some(i)) if i.subensemble() == 0 => {
                        OmegaLabel::new(Some(i), None).unwrap()
                    }
                    LeafLabel::Plain(Some(i)) => OmegaLabel::new(None, Some(i)).unwrap(),
                    LeafLabel::Pi(o) => o,
                };
                (k, LeafLabel::Pi(lifted))
            })
            .collect();
        LoccProtocol {
            mode: Mode::Pi,
            round1: self.round1.clone(),
            round2: self.round2.clone(),
            labels,
        }
    }
}

/// A protocol compiled to global effects.
#[derive(Clone, Debug)]
pub struct CompiledProtocol {
    pub mode: Mode,
    /// `(label, E_i ⊗ F_ij)` per leaf, party A's factor first.
    pub leaves: Vec<(LeafLabel, HermitianOp)>,
    /// Leaf effects summed per label.
    pub effects: BTreeMap<LeafLabel, HermitianOp>,
}

impl CompiledProtocol {
    pub fn effect(&self, label: LeafLabel) -> HermitianOp {
        self.effects
            .get(&label)
            .cloned()
            .unwrap_or_else(|| HermitianOp::zeros(4))
    }

    /// `M_i` for `i ∈ Λ` followed by `M_?`.
    pub fn plain_effects(&self) -> [HermitianOp; 5] {
        let mut out: [HermitianOp; 5] = std::array::from_fn(|_| HermitianOp::zeros(4));
        for (label, m) in &self.effects {
            if let LeafLabel::Plain(o) = label {
                let slot = o.map_or(4, Label::index);
                out[slot] = &out[slot] + m;
            }
        }
        out
    }

    pub fn to_pi_povm(&self) -> Result<PiPovm, LoccError> {
        let pairs = self.effects.iter().map(|(label, m)| match label {
            LeafLabel::Pi(o) => Ok((*o, m.clone())),
            other => Err(LoccError::ModeMismatch {
                label: *other,
                mode: Mode::Pi,
            }),
        });
        Ok(PiPovm::from_pairs(pairs.collect::<Result<Vec<_>, _>>()?)?)
    }

    pub fn completeness_residual(&self) -> f64 {
        sum_ops(4, self.effects.values()).distance(&HermitianOp::identity(4))
    }
}

/// Leaf effect `(round-1 effect) ⊗ (round-2 effect)` with A's factor first,
/// aggregated by label.
pub fn compile_protocol(p: &LoccProtocol) -> Result<CompiledProtocol, LoccError> {
    let mut leaves = Vec::new();
    let mut effects: BTreeMap<LeafLabel, HermitianOp> = BTreeMap::new();
    for (i, first) in p.round1.effects().iter().enumerate() {
        for (j, second) in p.round2[i].effects().iter().enumerate() {
            let label = *p.labels.get(&(i, j)).ok_or(LoccError::UnlabeledLeaf(i, j))?;
            let m = match p.first_party() {
                Party::A => kron(first, second)?,
                Party::B => kron(second, first)?,
            };
            let slot = effects.entry(label).or_insert_with(|| HermitianOp::zeros(4));
            *slot = &*slot + &m;
            leaves.push((label, m));
        }
    }
    let compiled = CompiledProtocol {
        mode: p.mode,
        leaves,
        effects,
    };
    let residual = compiled.completeness_residual();
    if residual > LOCAL_COMPLETENESS_TOL {
        return Err(LoccError::NotComplete { residual });
    }
    Ok(compiled)
}

/// Success probability of the protocol on `e` in the requested mode.
///
/// Plain mode scores `Σ η_i Tr(ρ_i M_i)`; PI mode scores the objective with
/// the subensemble revealed afterwards. The protocol must be unambiguous
/// for `e`.
pub fn locc_success(p: &LoccProtocol, e: &Ensemble, mode: Mode) -> Result<f64, LoccError> {
    if let Some((_, &label)) = p.labels.iter().find(|(_, l)| l.mode() != mode) {
        return Err(LoccError::ModeMismatch { label, mode });
    }
    let compiled = compile_protocol(p)?;
    match mode {
        Mode::Plain => {
            let m = compiled.plain_effects();
            for state in Label::ALL {
                let rho = e.rho(state);
                for outcome in Label::ALL {
                    if outcome == state {
                        continue;
                    }
                    let value = rho.trace_product(&m[outcome.index()]);
                    if value.abs() > LOCC_ERROR_FREE_TOL {
                        return Err(LoccError::ErrorFreeViolated {
                            state,
                            outcome: outcome.to_string(),
                            value,
                        });
                    }
                }
            }
            Ok(Label::ALL
                .iter()
                .map(|&l| e.prior(l) * e.rho(l).trace_product(&m[l.index()]))
                .sum())
        }
        Mode::Pi => {
            let povm = compiled.to_pi_povm()?;
            let verdict = verify_pi_unambiguous(&povm, e, LOCC_ERROR_FREE_TOL);
            if let Some(r) = verdict
                .residuals
                .iter()
                .find(|r| r.value.abs() > LOCC_ERROR_FREE_TOL)
            {
                return Err(LoccError::ErrorFreeViolated {
                    state: r.state,
                    outcome: r.outcome.to_string(),
                    value: r.value,
                });
            }
            Ok(pi_success_probability(&povm, e)?)
        }
    }
}

/// Positive-partial-transpose test, exact for two qubits.
pub fn is_separable_effect(m: &HermitianOp, tol: f64) -> Result<bool, LoccError> {
    let min_eigenvalue = m.min_eigenvalue();
    if min_eigenvalue < -tol {
        return Err(LoccError::NotPsd { min_eigenvalue });
    }
    Ok(m.partial_transpose()?.is_psd(tol))
}

/// A PSD operator offered as an upper-bound witness for `p_L`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCertificateH {
    h: HermitianOp,
}

impl BoundCertificateH {
    pub fn new(h: HermitianOp) -> Result<Self, LoccError> {
        if h.dim() != 4 {
            return Err(LinalgError::DimensionMismatch {
                expected: 4,
                found: h.dim(),
            }
            .into());
        }
        let min_eigenvalue = h.min_eigenvalue();
        if min_eigenvalue < -DEFAULT_TOL {
            return Err(LoccError::NotPsd { min_eigenvalue });
        }
        Ok(BoundCertificateH { h })
    }

    pub fn h(&self) -> &HermitianOp {
        &self.h
    }
}

/// `Tr H` if `<φ̃_i|H|φ̃_i> >= η_i - tol` for every product reciprocal
/// vector `φ̃_i`; entangled reciprocal vectors impose nothing.
pub fn separable_upper_bound(
    h: &BoundCertificateH,
    e: &Ensemble,
    tol: f64,
) -> Result<Option<f64>, LoccError> {
    let rb = reciprocal_basis(e)?;
    for label in Label::ALL {
        if rb.is_product(label) && h.h.expectation(rb.vector(label)) < e.prior(label) - tol {
            return Ok(None);
        }
    }
    Ok(Some(h.h.trace()))
}

/// `H = 1/(4(1+γ)) |1><1| ⊗ (|+><+| + |-><-|)` for the lock example.
pub fn lock_bound_operator(p: ExampleParams) -> BoundCertificateH {
    let one = HermitianOp::projector(&CVec::ket1());
    let h = kron(&one, &HermitianOp::identity(2))
        .unwrap()
        .scale(1.0 / (4.0 * (1.0 + p.gamma())));
    BoundCertificateH { h }
}

fn labels<L: Copy>(entries: &[((usize, usize), L)], wrap: fn(L) -> LeafLabel) -> BTreeMap<(usize, usize), LeafLabel> {
    entries.iter().map(|&(k, l)| (k, wrap(l))).collect()
}

/// A measures `{|0>,|1>}`, B measures `{|+>,|->}`; `(1,±) → ±`, `(0,·) → ?`.
pub fn builtin_loccud2_protocol() -> LoccProtocol {
    LoccProtocol::one_way(
        Mode::Plain,
        LocalMeasurement::computational(Party::A),
        LocalMeasurement::hadamard(Party::B),
        labels(
            &[
                ((0, 0), None),
                ((0, 1), None),
                ((1, 0), Some(Label::Plus)),
                ((1, 1), Some(Label::Minus)),
            ],
            LeafLabel::Plain,
        ),
    )
    .unwrap()
}

/// A measures `{|+>,|->}`, B measures `{|0>,|1>}`; `(-,y) → y`, `(+,·) → ?`.
pub fn builtin_oudm_protocol() -> LoccProtocol {
    LoccProtocol::one_way(
        Mode::Plain,
        LocalMeasurement::hadamard(Party::A),
        LocalMeasurement::computational(Party::B),
        labels(
            &[
                ((0, 0), None),
                ((0, 1), None),
                ((1, 0), Some(Label::Zero)),
                ((1, 1), Some(Label::One)),
            ],
            LeafLabel::Plain,
        ),
    )
    .unwrap()
}

/// `|ν±> = sqrt(1/2 ∓ r)|0> ± sqrt(1/2 ± r)|1>` with `r = γ / (2 sqrt(1+γ²))`.
pub fn nu_vectors(p: ExampleParams) -> (CVec, CVec) {
    let g = p.gamma();
    let r = g / (2.0 * (1.0 + g * g).sqrt());
    let plus = CVec::from_real(&[(0.5 - r).sqrt(), (0.5 + r).sqrt()]);
    let minus = CVec::from_real(&[(0.5 + r).sqrt(), -(0.5 - r).sqrt()]);
    (plus, minus)
}

/// A measures `{|ν₊>, |ν₋>}`; after `ν₊` B measures `{|+>,|->}` and the
/// leaf is `(?, x)`, after `ν₋` B measures `{|0>,|1>}` and the leaf is `(y, ?)`.
pub fn builtin_fmem_protocol(p: ExampleParams) -> LoccProtocol {
    let (nu_p, nu_m) = nu_vectors(p);
    let om = |s: &str| s.parse::<OmegaLabel>().unwrap();
    LoccProtocol::new(
        Mode::Pi,
        LocalMeasurement::projective(Party::A, [&nu_p, &nu_m]).unwrap(),
        vec![
            LocalMeasurement::hadamard(Party::B),
            LocalMeasurement::computational(Party::B),
        ],
        labels(
            &[
                ((0, 0), om("?,+")),
                ((0, 1), om("?,-")),
                ((1, 0), om("0,?")),
                ((1, 1), om("1,?")),
            ],
            LeafLabel::Pi,
        ),
    )
    .unwrap()
}

/// A measures `{|+>,|->}`, B measures `{|0>,|1>}`, leaf `(x, y) → (y, x)`;
/// perfect on the lock example once the subensemble is revealed.
pub fn builtin_lock_pi_protocol() -> LoccProtocol {
    let om = |s: &str| s.parse::<OmegaLabel>().unwrap();
    LoccProtocol::one_way(
        Mode::Pi,
        LocalMeasurement::hadamard(Party::A),
        LocalMeasurement::computational(Party::B),
        labels(
            &[
                ((0, 0), om("0,+")),
                ((0, 1), om("1,+")),
                ((1, 0), om("0,-")),
                ((1, 1), om("1,-")),
            ],
            LeafLabel::Pi,
        ),
    )
    .unwrap()
}

/// Both parties measure `{1}`; every outcome is `?`.
pub fn trivial_protocol(mode: Mode) -> LoccProtocol {
    let label = match mode {
        Mode::Plain => LeafLabel::Plain(None),
        Mode::Pi => LeafLabel::Pi(OmegaLabel::INCONCLUSIVE),
    };
    LoccProtocol::one_way(
        mode,
        LocalMeasurement::trivial(Party::A),
        LocalMeasurement::trivial(Party::B),
        BTreeMap::from([((0, 0), label)]),
    )
    .unwrap()
}
