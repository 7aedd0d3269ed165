use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use rayon::prelude::*;
use serde_json::{json, Value};

use nlwe_core::audit::{self, Check};
use nlwe_core::ensemble::{Ensemble, ExampleKind, ExampleParams, Label};
use nlwe_core::io::{matrix_to_json, pi_povm_to_json, read_ensemble, PovmJson};
use nlwe_core::nlwe::{analyze_example, GapReport, Interval};
use nlwe_core::oud::{solve_oud, verify_certificate, CERTIFY_TOL, ERROR_FREE_TOL};
use nlwe_core::pi::{
    solve_me, solve_oud_pi, verify_me_certificate, verify_pi_unambiguous, ME_CERTIFY_TOL,
    PI_ERROR_FREE_TOL,
};

use crate::format::sig;
use crate::{CliError, SolveMode};

pub const SWEEP_HEADER: [&str; 10] = [
    "eta0",
    "gamma",
    "p_G",
    "p_L_lower",
    "p_L_upper",
    "p_G_PI",
    "p_L_PI_lower",
    "p_L_PI_upper",
    "p_guess",
    "classification",
];

const CSV_DIGITS: usize = 9;
const TABLE_DIGITS: usize = 6;

fn params(gamma: Option<f64>, eta0: Option<f64>) -> Result<ExampleParams, CliError> {
    let p = match (gamma, eta0) {
        (Some(g), _) => ExampleParams::new(g),
        (None, Some(e)) => ExampleParams::from_eta0(e),
        (None, None) => return Err(CliError::Input("one of --gamma, --eta0 is required".into())),
    };
    p.map_err(|e| CliError::Input(e.to_string()))
}

fn to_json_string(v: &Value) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Output(e.to_string()))
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Output(e.to_string())),
        _ => Ok(()),
    }
}

fn interval(i: Option<Interval>) -> String {
    match i {
        Some(i) => format!("[{}, {}]", sig(i.lower, TABLE_DIGITS), sig(i.upper, TABLE_DIGITS)),
        None => "n/a".into(),
    }
}

fn value(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |x| sig(x, TABLE_DIGITS))
}

fn table(kind: ExampleKind, p: ExampleParams, r: &GapReport) -> String {
    let mut t = format!(
        "{} example, gamma = {}, eta0 = {}\n",
        kind.as_str(),
        sig(p.gamma(), TABLE_DIGITS),
        sig(p.eta0(), TABLE_DIGITS)
    );
    let flag = |f| serde_json::to_value(f).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let rows = [
        ("p_G", value(r.p_g)),
        ("p_L", interval(r.p_l)),
        ("p_G^PI", value(r.p_g_pi)),
        ("p_L^PI", interval(r.p_l_pi)),
        ("p_guess", value(r.p_guess)),
        ("NLWE without PI", flag(r.nlwe_without_pi)),
        ("NLWE with PI", flag(r.nlwe_with_pi)),
        ("classification", r.classification.as_str().to_string()),
    ];
    for (k, v) in rows {
        t += &format!("  {k:<16} {v}\n");
    }
    for note in &r.diagnostics.notes {
        t += &format!("  note: {note}\n");
    }
    t
}

pub fn example(
    kind: ExampleKind,
    gamma: Option<f64>,
    eta0: Option<f64>,
    json: bool,
) -> Result<ExitCode, CliError> {
    let p = params(gamma, eta0)?;
    let report = analyze_example(kind, p).map_err(|e| CliError::Solver(e.to_string()))?;
    if json {
        let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Output(e.to_string()))?;
        emit(&(text + "\n"))?;
    } else {
        emit(&table(kind, p, &report))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep_row(kind: ExampleKind, eta0: f64) -> Result<Vec<String>, CliError> {
    let p = ExampleParams::from_eta0(eta0).map_err(|e| CliError::Input(e.to_string()))?;
    let r = analyze_example(kind, p).map_err(|e| CliError::Solver(format!("eta0 = {eta0}: {e}")))?;
    let missing = |what: &str| CliError::Solver(format!("eta0 = {eta0}: no value for {what}"));
    let (pl, plp) = (r.p_l.ok_or_else(|| missing("p_L"))?, r.p_l_pi.ok_or_else(|| missing("p_L_PI"))?);
    let numbers = [
        eta0,
        p.gamma(),
        r.p_g.ok_or_else(|| missing("p_G"))?,
        pl.lower,
        pl.upper,
        r.p_g_pi.ok_or_else(|| missing("p_G_PI"))?,
        plp.lower,
        plp.upper,
        r.p_guess.ok_or_else(|| missing("p_guess"))?,
    ];
    let mut row: Vec<String> = numbers.iter().map(|&x| sig(x, CSV_DIGITS)).collect();
    row.push(r.classification.as_str().to_string());
    Ok(row)
}

pub fn sweep(
    kind: ExampleKind,
    from: f64,
    to: f64,
    steps: usize,
    out: Option<&Path>,
) -> Result<ExitCode, CliError> {
    // 1/3 itself is not representable
    let valid = from.is_finite() && to.is_finite() && from >= 1.0 / 3.0 - 1e-15 && from < to && to < 0.5;
    if !valid {
        return Err(CliError::Input(format!(
            "need 1/3 <= from < to < 1/2, got from = {from}, to = {to}"
        )));
    }
    if steps < 2 {
        return Err(CliError::Input(format!("need steps >= 2, got {steps}")));
    }
    let h = (to - from) / (steps - 1) as f64;
    let grid: Vec<f64> = (0..steps)
        .map(|k| if k + 1 == steps { to } else { from + k as f64 * h })
        .collect();
    let rows = grid
        .par_iter()
        .map(|&eta0| sweep_row(kind, eta0))
        .collect::<Result<Vec<_>, _>>()?;

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(SWEEP_HEADER).map_err(fail)?;
    for row in &rows {
        w.write_record(row).map_err(fail)?;
    }
    let text = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?,
        None => emit(&String::from_utf8_lossy(&text))?,
    }
    Ok(ExitCode::SUCCESS)
}

fn tolerance_override() -> Result<Option<f64>, CliError> {
    match std::env::var("NLWE_TOL") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(t) if t > 0.0 && t.is_finite() => Ok(Some(t)),
            _ => Err(CliError::Input(format!("NLWE_TOL must be a positive number, got {s:?}"))),
        },
    }
}

fn matrix(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.id.len()).max().unwrap_or(5).max(5);
    let mut t = format!("{:<width$}  {:>9}  {:>9}  result  description\n", "check", "tol", "worst");
    for c in checks {
        t += &format!(
            "{:<width$}  {:>9}  {:>9}  {:<6}  {}\n",
            c.id,
            sig(c.tolerance, 3),
            sig(c.worst, 3),
            if c.passed { "PASS" } else { "FAIL" },
            c.description
        );
        if let Some(f) = &c.failure {
            t += &format!("{:<width$}    {f}\n", "");
        }
    }
    t
}

pub fn verify_all(seed: u64) -> Result<ExitCode, CliError> {
    let checks = audit::verify_all(tolerance_override()?, seed);
    let failed = checks.iter().filter(|c| !c.passed).count();
    emit(&format!("{}{} of {} checks passed\n", matrix(&checks), checks.len() - failed, checks.len()))?;
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn solve_oud_json(e: &Ensemble) -> Result<Value, CliError> {
    let sol = solve_oud(e).map_err(|x| CliError::Solver(x.to_string()))?;
    let verdict = verify_certificate(&sol.certificate, &sol.povm, e, CERTIFY_TOL)
        .map_err(|x| CliError::Solver(x.to_string()))?;
    // probability of a wrong conclusive answer, per true state
    let error_free = Label::ALL
        .iter()
        .map(|&truth| {
            Label::ALL
                .iter()
                .filter(|&&guess| guess != truth)
                .map(|&guess| e.rho(truth).trace_product(sol.povm.effect(guess)).abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    Ok(json!({
        "mode": "oud",
        "value": sol.value,
        "upper_bound": sol.value + sol.gap,
        "povm": PovmJson::from_povm(&sol.povm),
        "certificate": { "K": matrix_to_json(sol.certificate.k.matrix()), "verdict": verdict },
        "residuals": {
            "completeness": sol.povm.completeness_residual(),
            "error_free": error_free,
            "error_free_tol": ERROR_FREE_TOL,
            "duality_gap": sol.gap,
        },
    }))
}

fn solve_pi_json(e: &Ensemble) -> Result<Value, CliError> {
    let sol = solve_oud_pi(e).map_err(|x| CliError::Solver(x.to_string()))?;
    let verdict = verify_pi_unambiguous(&sol.povm, e, PI_ERROR_FREE_TOL);
    Ok(json!({
        "mode": "oud-pi",
        "value": sol.value,
        "upper_bound": sol.upper_bound,
        "povm": pi_povm_to_json(&sol.povm),
        "residuals": {
            "completeness": sol.povm.completeness_residual(),
            "error_free": verdict.max_residual,
            "error_free_tol": PI_ERROR_FREE_TOL,
            "duality_gap": sol.upper_bound - sol.value,
            "checks": verdict.residuals,
        },
    }))
}

fn solve_me_json(e: &Ensemble) -> Result<Value, CliError> {
    let sol = solve_me(e).map_err(|x| CliError::Solver(x.to_string()))?;
    let verdict = verify_me_certificate(&sol.certificate, e, ME_CERTIFY_TOL, Some(sol.value));
    let effects: serde_json::Map<String, Value> = Label::ALL
        .iter()
        .zip(&sol.effects)
        .map(|(l, m)| (l.to_string(), json!(matrix_to_json(m.matrix()))))
        .collect();
    Ok(json!({
        "mode": "me",
        "value": sol.value,
        "method": sol.method,
        "povm": effects,
        "certificate": { "K": matrix_to_json(sol.certificate.k.matrix()), "verdict": verdict },
        "residuals": {
            "certificate": sol.certificate_residual,
            "iterations": sol.iterations,
        },
    }))
}

pub fn solve(file: &Path, mode: SolveMode) -> Result<ExitCode, CliError> {
    let e = read_ensemble(file).map_err(|x| CliError::Input(format!("{}: {x}", file.display())))?;
    let out = match mode {
        SolveMode::Oud => solve_oud_json(&e)?,
        SolveMode::OudPi => solve_pi_json(&e)?,
        SolveMode::Me => solve_me_json(&e)?,
    };
    emit(&(to_json_string(&out)? + "\n"))?;
    Ok(ExitCode::SUCCESS)
}
