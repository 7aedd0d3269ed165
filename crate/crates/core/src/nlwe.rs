//! Gap reports: global versus LOCC success, with and without
//! post-measurement information, and the resulting lock/unlock verdict.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::{make_example, Ensemble, ExampleKind, ExampleParams};
use crate::locc::{
    builtin_fmem_protocol, builtin_lock_pi_protocol, builtin_loccud2_protocol,
    builtin_oudm_protocol, separable_upper_bound, locc_success, lock_bound_operator, trivial_protocol,
    BoundCertificateH, LoccProtocol, Mode,
};
use crate::oud::{example_certificate, solve_oud, verify_certificate, CertificateVerdict, OudCertificate, CERTIFY_TOL};
use crate::pi::{guess_upper_bound, solve_me, solve_oud_pi};

/// Separates a real gap from solver noise.
pub const GAP_THRESHOLD: f64 = 1e-6;
/// Slack allowed before an interval counts as crossed.
pub const INTERVAL_TOL: f64 = 1e-9;
/// Premise tolerance for LOCC bound certificates.
pub const BOUND_PREMISE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NlweError {
    #[error("{quantity} interval crossed: lower {lower:.12} > upper {upper:.12}")]
    CrossedInterval {
        quantity: &'static str,
        lower: f64,
        upper: f64,
    },
}

/// `[lower, upper]` bracket on an LOCC value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    Yes,
    No,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    LockedByPI,
    UnlockedByPI,
    NoEffect,
    Undetermined,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::LockedByPI => "LockedByPI",
            Classification::UnlockedByPI => "UnlockedByPI",
            Classification::NoEffect => "NoEffect",
            Classification::Undetermined => "Undetermined",
        }
    }
}

/// A certificate offered to [`analyze`].
#[derive(Clone, Debug)]
pub enum Certificate {
    /// Dual operator for the global optimum.
    Oud(OudCertificate),
    /// Upper-bound witness for the LOCC optimum.
    LoccBound(BoundCertificateH),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Duality gap reported by the global solver.
    pub oud_gap: Option<f64>,
    /// Verdicts of supplied global certificates against the solver's POVM.
    pub oud_certificates: Vec<CertificateVerdict>,
    /// Dual bound of the PI solver.
    pub pi_upper_bound: Option<f64>,
    /// `min_i λ_min(K_me - η_i ρ_i)` of the minimum-error solution.
    pub me_certificate_residual: Option<f64>,
    /// Whether no pair admits a product vector, so `p_guess` bounds `p_L^PI`.
    pub guess_bound_applies: Option<bool>,
    /// Scores of the protocols that are unambiguous for the ensemble.
    pub plain_protocol_values: Vec<f64>,
    pub pi_protocol_values: Vec<f64>,
    /// Values of bound certificates whose premise held.
    pub locc_bounds: Vec<f64>,
    /// Candidates that did not apply and solver failures.
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    #[serde(rename = "p_G")]
    pub p_g: Option<f64>,
    #[serde(rename = "p_L")]
    pub p_l: Option<Interval>,
    #[serde(rename = "p_G_PI")]
    pub p_g_pi: Option<f64>,
    #[serde(rename = "p_L_PI")]
    pub p_l_pi: Option<Interval>,
    pub p_guess: Option<f64>,
    pub nlwe_without_pi: Flag,
    pub nlwe_with_pi: Flag,
    pub classification: Classification,
    pub diagnostics: Diagnostics,
}

fn flag(global: Option<f64>, interval: Option<Interval>) -> Flag {
    match (global, interval) {
        (Some(g), Some(i)) if i.upper < g - GAP_THRESHOLD => Flag::Yes,
        (Some(g), Some(i)) if i.lower >= g - GAP_THRESHOLD => Flag::No,
        _ => Flag::Undetermined,
    }
}

pub fn classify(without_pi: Flag, with_pi: Flag) -> Classification {
    match (without_pi, with_pi) {
        (Flag::Yes, Flag::No) => Classification::LockedByPI,
        (Flag::No, Flag::Yes) => Classification::UnlockedByPI,
        (Flag::No, Flag::No) | (Flag::Yes, Flag::Yes) => Classification::NoEffect,
        _ => Classification::Undetermined,
    }
}

fn checked_interval(
    quantity: &'static str,
    lower: f64,
    upper: f64,
) -> Result<Interval, NlweError> {
    if lower > upper + INTERVAL_TOL {
        return Err(NlweError::CrossedInterval {
            quantity,
            lower,
            upper,
        });
    }
    Ok(Interval {
        lower,
        upper: upper.max(lower),
    })
}

/// Protocols that need no parameters.
pub fn builtin_protocols() -> Vec<LoccProtocol> {
    vec![
        trivial_protocol(Mode::Plain),
        trivial_protocol(Mode::Pi),
        builtin_loccud2_protocol(),
        builtin_oudm_protocol(),
        builtin_lock_pi_protocol(),
    ]
}

/// Builds the report from the solvers, the built-in protocols and the
/// supplied candidates.
///
/// Every unambiguous LOCC protocol is also a global unambiguous
/// measurement, so the global values are taken as the larger of the solver
/// value and the best protocol. Plain protocols also count in the PI
/// setting through [`LoccProtocol::lift_to_pi`]. Without an applicable
/// bound certificate an LOCC interval is capped by the global value.
pub fn analyze(
    e: &Ensemble,
    protocols: &[LoccProtocol],
    certificates: &[Certificate],
) -> Result<GapReport, NlweError> {
    let mut d = Diagnostics::default();
    let all: Vec<LoccProtocol> = builtin_protocols().into_iter().chain(protocols.iter().cloned()).collect();

    let mut best_plain: Option<f64> = None;
    let mut best_pi: Option<f64> = None;
    for (k, p) in all.iter().enumerate() {
        if p.mode() == Mode::Plain {
            match locc_success(p, e, Mode::Plain) {
                Ok(v) => {
                    d.plain_protocol_values.push(v);
                    best_plain = Some(best_plain.map_or(v, |b| b.max(v)));
                }
                Err(err) => d.notes.push(format!("protocol {k}: {err}")),
            }
        }
        if let Ok(v) = locc_success(&p.lift_to_pi(), e, Mode::Pi) {
            d.pi_protocol_values.push(v);
            best_pi = Some(best_pi.map_or(v, |b| b.max(v)));
        }
    }

    let solved = solve_oud(e);
    let p_g = match &solved {
        Ok(sol) => {
            d.oud_gap = Some(sol.gap);
            for c in certificates {
                if let Certificate::Oud(k) = c {
                    match verify_certificate(k, &sol.povm, e, CERTIFY_TOL) {
                        Ok(v) => d.oud_certificates.push(v),
                        Err(err) => d.notes.push(format!("certificate: {err}")),
                    }
                }
            }
            Some(best_plain.map_or(sol.value, |b| sol.value.max(b)))
        }
        Err(err) => {
            d.notes.push(format!("global solver: {err}"));
            None
        }
    };

    for c in certificates {
        if let Certificate::LoccBound(h) = c {
            match separable_upper_bound(h, e, BOUND_PREMISE_TOL) {
                Ok(Some(v)) => d.locc_bounds.push(v),
                Ok(None) => d.notes.push("bound certificate: premise fails".to_string()),
                Err(err) => d.notes.push(format!("bound certificate: {err}")),
            }
        }
    }
    let p_l = match (best_plain, p_g) {
        (Some(lower), Some(g)) => {
            let upper = d.locc_bounds.iter().copied().fold(g, f64::min);
            Some(checked_interval("p_L", lower, upper)?)
        }
        _ => None,
    };

    let p_g_pi = match solve_oud_pi(e) {
        Ok(sol) => {
            d.pi_upper_bound = Some(sol.upper_bound);
            let base = p_g.map_or(sol.value, |g| sol.value.max(g));
            Some(best_pi.map_or(base, |b| base.max(b)))
        }
        Err(err) => {
            d.notes.push(format!("PI solver: {err}"));
            None
        }
    };

    let p_guess = match solve_me(e) {
        Ok(sol) => {
            d.me_certificate_residual = Some(sol.certificate_residual);
            Some(sol.value)
        }
        Err(err) => {
            d.notes.push(format!("minimum-error solver: {err}"));
            None
        }
    };
    let guess_bound = match guess_upper_bound(e) {
        Ok(b) => {
            d.guess_bound_applies = Some(b.is_some());
            b
        }
        Err(err) => {
            d.notes.push(format!("product-vector analysis: {err}"));
            None
        }
    };
    let p_l_pi = match (best_pi, p_g_pi) {
        (Some(lower), Some(g)) => {
            let upper = guess_bound.map_or(g, |b| b.min(g));
            Some(checked_interval("p_L_PI", lower, upper)?)
        }
        _ => None,
    };

    let nlwe_without_pi = flag(p_g, p_l);
    let nlwe_with_pi = flag(p_g_pi, p_l_pi);
    Ok(GapReport {
        p_g,
        p_l,
        p_g_pi,
        p_l_pi,
        p_guess,
        nlwe_without_pi,
        nlwe_with_pi,
        classification: classify(nlwe_without_pi, nlwe_with_pi),
        diagnostics: d,
    })
}

/// [`analyze`] on one of the two example families with their protocols
/// and certificates.
pub fn analyze_example(kind: ExampleKind, p: ExampleParams) -> Result<GapReport, NlweError> {
    let e = make_example(kind, p);
    let mut certificates = vec![Certificate::Oud(example_certificate(kind, p))];
    if kind == ExampleKind::Lock {
        certificates.push(Certificate::LoccBound(lock_bound_operator(p)));
    }
    analyze(&e, &[builtin_fmem_protocol(p)], &certificates)
}
