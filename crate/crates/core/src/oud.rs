//! Globally optimal unambiguous discrimination.
//!
//! An unambiguous POVM is fixed by nonnegative weights `s_i` on the
//! reciprocal vectors: `M_i = s_i |φ̃_i><φ̃_i|`, `M_? = 1 - Σ M_i`. Since
//! `Φ† M_? Φ = G - diag(s)` for the Gram matrix `G`, feasibility is the
//! four-variable matrix inequality `diag(s) ⪯ G`, which is what the solver
//! works with.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::{reciprocal_basis, Ensemble, EnsembleError, ExampleKind, ExampleParams, Label};
use crate::linalg::{cr, sum_ops, CMat, CVec, HermitianOp, DEFAULT_TOL};

/// Completeness tolerance for compiled POVMs.
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Error-free tolerance, `Tr(ρ_i M_j)` for `i != j`.
pub const ERROR_FREE_TOL: f64 = 1e-10;
/// Tolerance for certifying optimality.
pub const CERTIFY_TOL: f64 = 1e-6;

const BARRIER_GAP: f64 = 1e-11;
const BARRIER_MU: f64 = 8.0;
const NEWTON_MAX: usize = 200;
const OUTER_MAX: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OudError {
    #[error("weights must be nonnegative (s[{label}] = {value})")]
    NegativeWeight { label: Label, value: f64 },
    #[error("inconclusive effect is not PSD (min eigenvalue {min_eigenvalue:.3e})")]
    Infeasible { min_eigenvalue: f64 },
    #[error("error-free condition violated: Tr(rho_{state} M_{outcome}) = {value:.3e}")]
    ErrorFreeViolated { state: Label, outcome: Label, value: f64 },
    #[error("POVM was compiled against a different basis (mismatch {mismatch:.3e})")]
    BasisMismatch { mismatch: f64 },
    #[error("solver did not converge: best value {best:.9}, duality gap {gap:.3e}")]
    NotConverged { best: f64, gap: f64 },
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

/// Unambiguous five-outcome POVM over `Λ ∪ {?}`.
#[derive(Clone, Debug)]
pub struct UnambiguousPovm {
    s: [f64; 4],
    conclusive: [HermitianOp; 4],
    inconclusive: HermitianOp,
}

impl UnambiguousPovm {
    pub fn weights(&self) -> [f64; 4] {
        self.s
    }

    /// `M_i` for a conclusive label.
    pub fn effect(&self, label: Label) -> &HermitianOp {
        &self.conclusive[label.index()]
    }

    /// `M_?`.
    pub fn inconclusive(&self) -> &HermitianOp {
        &self.inconclusive
    }

    pub fn effects(&self) -> impl Iterator<Item = &HermitianOp> {
        self.conclusive.iter().chain(std::iter::once(&self.inconclusive))
    }

    /// Largest entrywise deviation of `Σ M` from the identity.
    pub fn completeness_residual(&self) -> f64 {
        sum_ops(4, self.effects()).distance(&HermitianOp::identity(4))
    }
}

/// Builds `M_i = s_i |φ̃_i><φ̃_i|` and `M_? = 1 - Σ M_i`, then re-verifies
/// positivity, completeness and the error-free condition.
pub fn compile_povm(
    s: [f64; 4],
    rb: &crate::ensemble::ReciprocalBasis,
) -> Result<UnambiguousPovm, OudError> {
    for label in Label::ALL {
        let value = s[label.index()];
        if !(value >= 0.0) {
            return Err(OudError::NegativeWeight { label, value });
        }
    }
    let conclusive: [HermitianOp; 4] = std::array::from_fn(|i| {
        HermitianOp::projector(&rb.vectors()[i]).scale(s[i])
    });
    let inconclusive = &HermitianOp::identity(4) - &sum_ops(4, conclusive.iter());
    let min_eigenvalue = inconclusive.min_eigenvalue();
    if min_eigenvalue < -DEFAULT_TOL {
        return Err(OudError::Infeasible { min_eigenvalue });
    }
    for state in Label::ALL {
        let rho = HermitianOp::projector(&rb.kets()[state.index()]);
        for outcome in Label::ALL {
            if outcome == state {
                continue;
            }
            let value = rho.trace_product(&conclusive[outcome.index()]);
            if value.abs() > ERROR_FREE_TOL {
                return Err(OudError::ErrorFreeViolated {
                    state,
                    outcome,
                    value,
                });
            }
        }
    }
    Ok(UnambiguousPovm {
        s,
        conclusive,
        inconclusive,
    })
}

/// `Σ η_i s_i`, cross-checked against `Σ η_i Tr(ρ_i M_i)`.
pub fn success_probability(p: &UnambiguousPovm, e: &Ensemble) -> Result<f64, OudError> {
    let from_weights: f64 = Label::ALL
        .iter()
        .map(|&l| e.prior(l) * p.s[l.index()])
        .sum();
    let from_traces: f64 = Label::ALL
        .iter()
        .map(|&l| e.prior(l) * e.rho(l).trace_product(p.effect(l)))
        .sum();
    let mismatch = (from_weights - from_traces).abs();
    if mismatch > 1e-12 {
        return Err(OudError::BasisMismatch { mismatch });
    }
    Ok(from_weights)
}

/// A dual operator `K` for the optimality conditions.
#[derive(Clone, Debug)]
pub struct OudCertificate {
    pub k: HermitianOp,
}

/// Residuals of the three optimality conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateVerdict {
    pub accepted: bool,
    /// `min_i (<φ̃_i|K|φ̃_i> - η_i)`, must be `>= -tol`.
    pub dual_feasibility: f64,
    /// `|Tr[M_i (K - η_i ρ_i)]|` per label.
    pub slackness: [f64; 4],
    /// `|Tr(M_? K)|`.
    pub inconclusive: f64,
    /// Smallest eigenvalue of `K`.
    pub k_min_eigenvalue: f64,
    /// `Tr K`, the certified optimum when accepted.
    pub trace_k: f64,
    /// Success probability of the POVM being certified.
    pub success: f64,
}

pub fn verify_certificate(
    c: &OudCertificate,
    p: &UnambiguousPovm,
    e: &Ensemble,
    tol: f64,
) -> Result<CertificateVerdict, OudError> {
    let rb = reciprocal_basis(e)?;
    let k = &c.k;
    let dual_feasibility = Label::ALL
        .iter()
        .map(|&l| k.expectation(rb.vector(l)) - e.prior(l))
        .fold(f64::INFINITY, f64::min);
    let slackness = Label::ALL.map(|l| {
        let shifted = k - &e.rho(l).scale(e.prior(l));
        p.effect(l).trace_product(&shifted).abs()
    });
    let inconclusive = p.inconclusive().trace_product(k).abs();
    let k_min_eigenvalue = k.min_eigenvalue();
    let trace_k = k.trace();
    let success = success_probability(p, e)?;
    let accepted = k_min_eigenvalue >= -tol
        && dual_feasibility >= -tol
        && slackness.iter().all(|&x| x <= tol)
        && inconclusive <= tol
        && (trace_k - success).abs() <= tol;
    Ok(CertificateVerdict {
        accepted,
        dual_feasibility,
        slackness,
        inconclusive,
        k_min_eigenvalue,
        trace_k,
        success,
    })
}

fn ket2(a: &CVec, b: &CVec) -> HermitianOp {
    HermitianOp::projector(&a.kron(b))
}

/// The closed-form certificates of the two examples:
/// lock `K = γ/(4(1+γ)) (|Φ₋><Φ₋| + |Ψ₋><Ψ₋|)`,
/// unlock `K = γ/(4(1+γ)) |-><-| ⊗ 1`.
pub fn example_certificate(kind: ExampleKind, p: ExampleParams) -> OudCertificate {
    let g = p.gamma();
    let weight = g / (4.0 * (1.0 + g));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let k = match kind {
        ExampleKind::Lock => {
            let phi_minus = CVec::from_real(&[h, 0.0, 0.0, -h]);
            let psi_minus = CVec::from_real(&[0.0, h, -h, 0.0]);
            &HermitianOp::projector(&phi_minus) + &HermitianOp::projector(&psi_minus)
        }
        ExampleKind::Unlock => {
            let m = CVec::ket_minus();
            &ket2(&m, &CVec::ket0()) + &ket2(&m, &CVec::ket1())
        }
    };
    OudCertificate { k: k.scale(weight) }
}

/// Result of [`solve_oud`].
#[derive(Clone, Debug)]
pub struct OudSolution {
    pub povm: UnambiguousPovm,
    /// Success probability of `povm` (a lower bound on the optimum).
    pub value: f64,
    /// Dual certificate built from the barrier's central point.
    pub certificate: OudCertificate,
    /// `Tr K - value`, an upper bound on the suboptimality.
    pub gap: f64,
    pub newton_steps: usize,
}

struct Barrier<'a> {
    gram: &'a CMat,
    eta: [f64; 4],
    t: f64,
}

impl Barrier<'_> {
    fn slack(&self, s: &[f64; 4]) -> CMat {
        let mut m = self.gram.clone();
        for i in 0..4 {
            m[(i, i)] -= cr(s[i]);
        }
        m
    }

    /// `-t η·s - log det(G - diag s) - Σ log s_i`, or `None` outside the domain.
    fn value(&self, s: &[f64; 4]) -> Option<f64> {
        if s.iter().any(|&x| !(x > 0.0)) {
            return None;
        }
        let l = self.slack(s).cholesky()?;
        let logdet: f64 = (0..4).map(|i| 2.0 * l[(i, i)].re.ln()).sum();
        let lin: f64 = (0..4).map(|i| self.eta[i] * s[i]).sum();
        Some(-self.t * lin - logdet - s.iter().map(|x| x.ln()).sum::<f64>())
    }

    fn gradient_hessian(&self, s: &[f64; 4], inv: &CMat) -> ([f64; 4], [[f64; 4]; 4]) {
        let mut g = [0.0; 4];
        let mut h = [[0.0; 4]; 4];
        for i in 0..4 {
            g[i] = -self.t * self.eta[i] + inv[(i, i)].re - 1.0 / s[i];
            for j in 0..4 {
                h[i][j] = inv[(i, j)].norm_sqr();
            }
            h[i][i] += 1.0 / (s[i] * s[i]);
        }
        (g, h)
    }
}

fn solve_spd4(h: &[[f64; 4]; 4], g: &[f64; 4]) -> Option<[f64; 4]> {
    let m = CMat::from_fn(4, 4, |i, j| cr(h[i][j]));
    let l = m.cholesky()?;
    let mut y = [0.0; 4];
    for i in 0..4 {
        let mut acc = g[i];
        for k in 0..i {
            acc -= l[(i, k)].re * y[k];
        }
        y[i] = acc / l[(i, i)].re;
    }
    let mut x = [0.0; 4];
    for i in (0..4).rev() {
        let mut acc = y[i];
        for k in i + 1..4 {
            acc -= l[(k, i)].re * x[k];
        }
        x[i] = acc / l[(i, i)].re;
    }
    Some(x)
}

/// Dual point `Z` from the barrier, repaired so `Z_ii >= η_i`, and mapped to
/// `K = Φ Z Φ†`.
fn certificate_from_slack(e: &Ensemble, inv: &CMat, t: f64) -> OudCertificate {
    let mut z = inv.scale_real(1.0 / t).hermitian_part();
    for l in Label::ALL {
        let i = l.index();
        let short = e.prior(l) - z[(i, i)].re;
        if short > 0.0 {
            z[(i, i)] += cr(short);
        }
    }
    let phi = CMat::from_columns(e.kets());
    let k = phi.sandwich(&z).hermitian_part();
    OudCertificate {
        k: HermitianOp::new(k).expect("sandwich of a Hermitian matrix"),
    }
}

/// Maximizes `Σ η_i s_i` subject to `s >= 0` and `M_? ⪰ 0`.
///
/// Log-barrier path following with damped Newton steps on the four weights.
/// The barrier's central point yields a dual certificate, so the returned
/// `gap` bounds the distance to the true optimum.
pub fn solve_oud(e: &Ensemble) -> Result<OudSolution, OudError> {
    let rb = reciprocal_basis(e)?;
    let gram = e.gram();
    let eta = e.priors();

    // strictly feasible start: half the smallest eigenvalue of G on every axis
    let lambda_min = HermitianOp::new(gram.clone())
        .map_err(EnsembleError::from)?
        .min_eigenvalue();
    let mut s = [0.5 * lambda_min; 4];
    let mut barrier = Barrier {
        gram: &gram,
        eta,
        t: 1.0,
    };
    let mut newton_steps = 0;
    let mut best: Option<(f64, [f64; 4], OudCertificate, f64)> = None;

    for _ in 0..OUTER_MAX {
        for _ in 0..NEWTON_MAX {
            let Some(inv) = barrier.slack(&s).inverse().ok() else {
                break;
            };
            let (g, h) = barrier.gradient_hessian(&s, &inv);
            let Some(step) = solve_spd4(&h, &g) else {
                break;
            };
            let decrement: f64 = (0..4).map(|i| g[i] * step[i]).sum();
            if decrement <= 1e-20 {
                break;
            }
            newton_steps += 1;
            // damped Newton step, safe for self-concordant barriers without
            // evaluating the (badly scaled) barrier value
            let mut alpha = if decrement > 0.25 {
                1.0 / (1.0 + decrement.sqrt())
            } else {
                1.0
            };
            loop {
                let trial: [f64; 4] = std::array::from_fn(|i| s[i] - alpha * step[i]);
                if barrier.value(&trial).is_some() {
                    s = trial;
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-12 {
                    break;
                }
            }
            if alpha < 1e-12 || decrement <= 1e-20 {
                break;
            }
        }

        if let Ok(inv) = barrier.slack(&s).inverse() {
            let cert = certificate_from_slack(e, &inv, barrier.t);
            let value: f64 = (0..4).map(|i| eta[i] * s[i]).sum();
            let gap = cert.k.trace() - value;
            let best_gap = best.as_ref().map_or(f64::INFINITY, |b| b.3);
            if gap < best_gap {
                best = Some((value, s, cert, gap));
            } else if gap > 4.0 * best_gap {
                // the slack is too ill-conditioned for a better dual point
                break;
            }
            if gap <= BARRIER_GAP {
                break;
            }
        }
        barrier.t *= BARRIER_MU;
    }

    let (value, s, certificate, gap) = best.ok_or(OudError::NotConverged {
        best: 0.0,
        gap: f64::INFINITY,
    })?;
    if gap > CERTIFY_TOL {
        return Err(OudError::NotConverged { best: value, gap });
    }
    let s = push_to_boundary(&gram, s);
    let povm = compile_povm(s, &rb)?;
    let value = success_probability(&povm, e)?;
    Ok(OudSolution {
        povm,
        value,
        certificate,
        gap,
        newton_steps,
    })
}

/// Scale `s` up to the edge of the feasible set, which only raises the objective.
fn push_to_boundary(gram: &CMat, s: [f64; 4]) -> [f64; 4] {
    let feasible = |tau: f64| {
        let d = CMat::diag(&s.map(|x| tau * x));
        (gram - &d).cholesky().is_some()
    };
    let (mut lo, mut hi) = (1.0, 2.0);
    if !feasible(lo) {
        return s;
    }
    while feasible(hi) {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    s.map(|x| lo * x)
}

/// `λ_min(M_?)` for given weights; negative means infeasible.
pub fn inconclusive_min_eigenvalue(s: [f64; 4], e: &Ensemble) -> Result<f64, OudError> {
    let rb = reciprocal_basis(e)?;
    let mut m = HermitianOp::identity(4);
    for (v, w) in rb.vectors().iter().zip(s) {
        m = &m - &HermitianOp::projector(v).scale(w);
    }
    Ok(m.min_eigenvalue())
}
