//! Four-state product ensembles over the labels `{0, 1, +, -}`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{c, schmidt_rank_one, CMat, CVec, HermitianOp, LinalgError, C64};

/// Schmidt tolerance used to flag reciprocal vectors as product vectors.
pub const PRODUCT_TOL: f64 = 1e-8;
const PRIOR_SUM_TOL: f64 = 1e-12;
const UNIT_TOL: f64 = 1e-9;
const GRAM_DET_MIN: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("gamma must be a finite number >= 2, got {0}")]
    GammaOutOfRange(f64),
    #[error("eta0 must lie in [1/3, 1/2), got {0}")]
    Eta0OutOfRange(f64),
    #[error("priors must be nonnegative and sum to 1 (got sum {sum})")]
    InvalidPriors { sum: f64 },
    #[error("local factor for label {label} is not a unit qubit vector")]
    NotUnit { label: Label },
    #[error("states do not form a basis (Gram determinant {det:.3e})")]
    NotABasis { det: f64 },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("labels must be a permutation of 0, 1, +, -")]
    BadLabelSet,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A label in `Λ = {0, 1, +, -}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::Zero, Label::One, Label::Plus, Label::Minus];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Which subensemble the label belongs to: `0` for `{0,1}`, `1` for `{+,-}`.
    pub fn subensemble(self) -> usize {
        match self {
            Label::Zero | Label::One => 0,
            Label::Plus | Label::Minus => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Zero => "0",
            Label::One => "1",
            Label::Plus => "+",
            Label::Minus => "-",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = EnsembleError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "0" => Ok(Label::Zero),
            "1" => Ok(Label::One),
            "+" => Ok(Label::Plus),
            "-" | "−" => Ok(Label::Minus),
            other => Err(EnsembleError::UnknownLabel(other.to_string())),
        }
    }
}

/// A label in `Λ ∪ {?}`; `None` is the inconclusive outcome.
pub type Outcome = Option<Label>;

pub const SUBENSEMBLE_LABELS: [[Label; 2]; 2] =
    [[Label::Zero, Label::One], [Label::Plus, Label::Minus]];

/// Parameter of the two example families, `γ ∈ [2, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleParams {
    gamma: f64,
}

impl ExampleParams {
    pub fn new(gamma: f64) -> Result<Self, EnsembleError> {
        if !gamma.is_finite() || gamma < 2.0 {
            return Err(EnsembleError::GammaOutOfRange(gamma));
        }
        Ok(ExampleParams { gamma })
    }

    pub fn from_eta0(eta0: f64) -> Result<Self, EnsembleError> {
        Self::new(eta0_to_gamma(eta0)?)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `η₀ = η₁ = γ / (2(1+γ))`.
    pub fn eta0(&self) -> f64 {
        gamma_to_eta0(self.gamma)
    }

    /// `η₊ = η₋ = 1 / (2(1+γ))`.
    pub fn eta_plus(&self) -> f64 {
        1.0 / (2.0 * (1.0 + self.gamma))
    }
}

pub fn gamma_to_eta0(gamma: f64) -> f64 {
    gamma / (2.0 * (1.0 + gamma))
}

/// Inverse of [`gamma_to_eta0`] on `[1/3, 1/2)`.
pub fn eta0_to_gamma(eta0: f64) -> Result<f64, EnsembleError> {
    // 1/3 is not representable; accept anything that rounds to it
    if !(1.0 / 3.0 - 1e-15..0.5).contains(&eta0) {
        return Err(EnsembleError::Eta0OutOfRange(eta0));
    }
    Ok((2.0 * eta0 / (1.0 - 2.0 * eta0)).max(2.0))
}

/// Which of the two example families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleKind {
    /// States `|00>, |01>, |++>, |-->`.
    Lock,
    /// States `|00>, |01>, |++>, |+->`.
    Unlock,
}

impl ExampleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExampleKind::Lock => "lock",
            ExampleKind::Unlock => "unlock",
        }
    }
}

impl FromStr for ExampleKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lock" => Ok(ExampleKind::Lock),
            "unlock" => Ok(ExampleKind::Unlock),
            other => Err(format!("unknown example {other:?} (expected lock or unlock)")),
        }
    }
}

/// A pure product state `a ⊗ b` with both factors kept.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductState {
    pub a: CVec,
    pub b: CVec,
}

impl ProductState {
    pub fn new(a: CVec, b: CVec) -> Self {
        ProductState { a, b }
    }

    pub fn ket(&self) -> CVec {
        self.a.kron(&self.b)
    }
}

/// Four labeled product pure states with priors; the states form a basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    priors: [f64; 4],
    states: [ProductState; 4],
    kets: [CVec; 4],
}

impl Ensemble {
    pub fn new(priors: [f64; 4], states: [ProductState; 4]) -> Result<Self, EnsembleError> {
        let sum: f64 = priors.iter().sum();
        if priors.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(EnsembleError::InvalidPriors { sum });
        }
        let mut normalized = Vec::with_capacity(4);
        for (state, label) in states.into_iter().zip(Label::ALL) {
            let mut factors = Vec::with_capacity(2);
            for v in [state.a, state.b] {
                if v.dim() != 2 || (v.norm() - 1.0).abs() > UNIT_TOL {
                    return Err(EnsembleError::NotUnit { label });
                }
                factors.push(v.normalized()?);
            }
            let b = factors.pop().unwrap();
            let a = factors.pop().unwrap();
            normalized.push(ProductState { a, b });
        }
        let states: [ProductState; 4] = normalized.try_into().unwrap();
        let kets = states.clone().map(|s| s.ket());

        let det = gram_determinant(&kets);
        if det < GRAM_DET_MIN {
            return Err(EnsembleError::NotABasis { det });
        }
        Ok(Ensemble {
            priors,
            states,
            kets,
        })
    }

    pub fn prior(&self, label: Label) -> f64 {
        self.priors[label.index()]
    }

    pub fn priors(&self) -> [f64; 4] {
        self.priors
    }

    pub fn state(&self, label: Label) -> &ProductState {
        &self.states[label.index()]
    }

    pub fn states(&self) -> &[ProductState; 4] {
        &self.states
    }

    /// `|φ_i>`.
    pub fn ket(&self, label: Label) -> &CVec {
        &self.kets[label.index()]
    }

    pub fn kets(&self) -> &[CVec; 4] {
        &self.kets
    }

    /// `ρ_i = |φ_i><φ_i|`.
    pub fn rho(&self, label: Label) -> HermitianOp {
        HermitianOp::projector(self.ket(label))
    }

    /// Gram matrix `G_ij = <φ_i|φ_j>`.
    pub fn gram(&self) -> CMat {
        let basis = CMat::from_columns(&self.kets);
        &basis.adjoint() * &basis
    }

    /// Same states with new priors.
    pub fn with_priors(&self, priors: [f64; 4]) -> Result<Self, EnsembleError> {
        Ensemble::new(priors, self.states.clone())
    }
}

fn gram_determinant(kets: &[CVec; 4]) -> f64 {
    // det(G) = |det(Φ)|^2; the Cholesky diagonal gives it directly
    let basis = CMat::from_columns(kets);
    let gram = &basis.adjoint() * &basis;
    match gram.cholesky() {
        Some(l) => (0..4).map(|i| l[(i, i)].re * l[(i, i)].re).product(),
        None => 0.0,
    }
}

fn example_states(kind: ExampleKind) -> [ProductState; 4] {
    let (k0, k1, kp, km) = (CVec::ket0(), CVec::ket1(), CVec::ket_plus(), CVec::ket_minus());
    let last = match kind {
        ExampleKind::Lock => ProductState::new(km.clone(), km),
        ExampleKind::Unlock => ProductState::new(kp.clone(), km),
    };
    [
        ProductState::new(k0.clone(), k0.clone()),
        ProductState::new(k0, k1),
        ProductState::new(kp.clone(), kp),
        last,
    ]
}

fn example_priors(p: ExampleParams) -> [f64; 4] {
    let (e0, ep) = (p.eta0(), p.eta_plus());
    [e0, e0, ep, ep]
}

pub fn make_example(kind: ExampleKind, p: ExampleParams) -> Ensemble {
    Ensemble::new(example_priors(p), example_states(kind)).expect("example ensembles are valid")
}

/// `|00>, |01>, |++>, |-->` with priors `(γ, γ, 1, 1) / (2(1+γ))`.
pub fn make_lock_example(p: ExampleParams) -> Ensemble {
    make_example(ExampleKind::Lock, p)
}

/// `|00>, |01>, |++>, |+->` with priors `(γ, γ, 1, 1) / (2(1+γ))`.
pub fn make_unlock_example(p: ExampleParams) -> Ensemble {
    make_example(ExampleKind::Unlock, p)
}

/// The computational product basis `|00>, |01>, |10>, |11>` with the given priors.
pub fn computational_basis(priors: [f64; 4]) -> Result<Ensemble, EnsembleError> {
    let (k0, k1) = (CVec::ket0(), CVec::ket1());
    Ensemble::new(
        priors,
        [
            ProductState::new(k0.clone(), k0.clone()),
            ProductState::new(k0.clone(), k1.clone()),
            ProductState::new(k1.clone(), k0),
            ProductState::new(k1.clone(), k1),
        ],
    )
}

/// Dual basis `<φ_i|φ̃_j> = δ_ij` together with the primal kets.
#[derive(Clone, Debug)]
pub struct ReciprocalBasis {
    vectors: [CVec; 4],
    product: [bool; 4],
    kets: [CVec; 4],
}

impl ReciprocalBasis {
    /// `|φ̃_i>`.
    pub fn vector(&self, label: Label) -> &CVec {
        &self.vectors[label.index()]
    }

    pub fn vectors(&self) -> &[CVec; 4] {
        &self.vectors
    }

    pub fn is_product(&self, label: Label) -> bool {
        self.product[label.index()]
    }

    pub fn kets(&self) -> &[CVec; 4] {
        &self.kets
    }

    /// Largest deviation of `<φ_i|φ̃_j>` from `δ_ij`.
    pub fn duality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.kets[i].inner(&self.vectors[j]) - c(want, 0.0)).norm());
            }
        }
        worst
    }
}

/// Rows of `Φ⁻¹` conjugated, where `Φ` has the kets as columns.
pub fn reciprocal_basis(e: &Ensemble) -> Result<ReciprocalBasis, EnsembleError> {
    let basis = CMat::from_columns(e.kets());
    let inv = basis.inverse().map_err(|_| EnsembleError::NotABasis { det: 0.0 })?;
    let vectors: [CVec; 4] = std::array::from_fn(|j| {
        CVec::new(inv.row(j).into_iter().map(|z: C64| z.conj()).collect())
    });
    let mut product = [false; 4];
    for (flag, v) in product.iter_mut().zip(&vectors) {
        *flag = schmidt_rank_one(v, PRODUCT_TOL)?.is_some();
    }
    Ok(ReciprocalBasis {
        vectors,
        product,
        kets: e.kets().clone(),
    })
}

/// One of the two halves of the ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct Subensemble {
    pub labels: [Label; 2],
    /// Conditional priors; uniform when the preparation probability is zero.
    pub priors: [f64; 2],
    pub preparation: f64,
}

pub fn split_subensembles(e: &Ensemble) -> [Subensemble; 2] {
    SUBENSEMBLE_LABELS.map(|labels| {
        let raw = labels.map(|l| e.prior(l));
        let preparation = raw[0] + raw[1];
        let priors = if preparation > 0.0 {
            raw.map(|p| p / preparation)
        } else {
            [0.5, 0.5]
        };
        Subensemble {
            labels,
            priors,
            preparation,
        }
    })
}
