//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C;
use rand::Rng;

use nlwe_core::audit::{lock_product_pi_povm, pi_gap_closed_form, GAMMA_GRID};
use nlwe_core::ensemble::{
    make_example, make_lock_example, make_unlock_example, reciprocal_basis, Ensemble, ExampleKind,
    ExampleParams, Label, ProductState,
};
use nlwe_core::linalg::{hermitian_eig, CVec, HermitianOp};
use nlwe_core::locc::{
    builtin_fmem_protocol, builtin_lock_pi_protocol, builtin_loccud2_protocol,
    builtin_oudm_protocol, compile_protocol, is_separable_effect, separable_upper_bound, locc_success,
    lock_bound_operator, trivial_protocol, LeafLabel, LocalMeasurement, LoccProtocol, Mode, Party,
};
use nlwe_core::nlwe::{analyze_example, Classification};
use nlwe_core::oud::{example_certificate, solve_oud, verify_certificate};
use nlwe_core::pi::{
    guess_upper_bound, pi_success_probability, product_vector_obstruction, solve_me,
    solve_me_states, solve_oud_pi, verify_me_certificate, verify_pi_unambiguous, OmegaLabel,
};
use nlwe_core::sampling::{random_hermitian, random_priors, random_product_ensemble, random_unit, seeded};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn params(g: f64) -> ExampleParams {
    ExampleParams::new(g).unwrap()
}

fn eta0(g: f64) -> f64 {
    g / (2.0 * (1.0 + g))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// 1. global optimum

fn criterion_1() -> Outcome {
    let mut slowest = Duration::ZERO;
    let mut worst: f64 = 0.0;
    for g in GAMMA_GRID {
        for kind in [ExampleKind::Lock, ExampleKind::Unlock] {
            let e = make_example(kind, params(g));
            let start = Instant::now();
            let sol = solve_oud(&e).map_err(|err| format!("{kind:?} {g}: {err}"))?;
            slowest = slowest.max(start.elapsed());
            let r = (sol.value - eta0(g)).abs();
            worst = worst.max(r);
            ensure(r <= 1e-6, || format!("{kind:?} gamma {g}: value {} off by {r:.3e}", sol.value))?;
            let v = verify_certificate(&example_certificate(kind, params(g)), &sol.povm, &e, 1e-6)
                .map_err(|err| err.to_string())?;
            ensure(v.accepted, || format!("{kind:?} gamma {g}: certificate rejected {v:?}"))?;
        }
    }
    ensure(slowest < Duration::from_secs(1), || format!("slowest solve {slowest:?}"))?;
    Ok(format!("worst |p_G - eta0| = {worst:.2e}, slowest solve {slowest:.2?}"))
}

// 2. lock example LOCC sandwich

fn criterion_2() -> Outcome {
    for g in GAMMA_GRID {
        let e = make_lock_example(params(g));
        let want = 1.0 / (2.0 * (1.0 + g));
        let lower = locc_success(&builtin_loccud2_protocol(), &e, Mode::Plain).map_err(|x| x.to_string())?;
        ensure((lower - want).abs() <= 1e-12, || format!("gamma {g}: protocol {lower}"))?;
        let upper = separable_upper_bound(&lock_bound_operator(params(g)), &e, 1e-12)
            .map_err(|x| x.to_string())?
            .ok_or_else(|| format!("gamma {g}: bound premise fails"))?;
        ensure((upper - want).abs() <= 1e-12, || format!("gamma {g}: bound {upper}"))?;
    }
    Ok("p_L = eta_plus closed from both sides on the grid".into())
}

// 3. unlock example, no gap without PI

fn criterion_3() -> Outcome {
    for g in GAMMA_GRID {
        let e = make_unlock_example(params(g));
        let v = locc_success(&builtin_oudm_protocol(), &e, Mode::Plain).map_err(|x| x.to_string())?;
        ensure((v - eta0(g)).abs() <= 1e-12, || format!("gamma {g}: protocol {v}"))?;
        let pg = solve_oud(&e).map_err(|x| x.to_string())?.value;
        ensure((v - pg).abs() <= 1e-6, || format!("gamma {g}: p_L {v} vs p_G {pg}"))?;
    }
    Ok("p_L = p_G = eta0 on the grid".into())
}

// 4. perfect discrimination with PI

fn criterion_4() -> Outcome {
    let mut worst: f64 = 0.0;
    let product = lock_product_pi_povm();
    for g in GAMMA_GRID {
        for kind in [ExampleKind::Lock, ExampleKind::Unlock] {
            let e = make_example(kind, params(g));
            let sol = solve_oud_pi(&e).map_err(|x| format!("{kind:?} {g}: {x}"))?;
            let r = (sol.value - 1.0).abs();
            worst = worst.max(r);
            ensure(r <= 1e-5, || format!("{kind:?} gamma {g}: p_G^PI = {}", sol.value))?;
        }
        let e = make_lock_example(params(g));
        let v = verify_pi_unambiguous(&product, &e, 1e-10);
        ensure(v.accepted, || format!("gamma {g}: product measurement rejected {v:?}"))?;
        let p = pi_success_probability(&product, &e).map_err(|x| x.to_string())?;
        ensure((p - 1.0).abs() <= 1e-12, || format!("gamma {g}: product measurement gives {p}"))?;
    }
    Ok(format!("worst |p_G^PI - 1| = {worst:.2e}"))
}

// 5. PI gap on the unlock example

fn criterion_5() -> Outcome {
    for g in GAMMA_GRID {
        let p = params(g);
        let e = make_unlock_example(p);
        let want = pi_gap_closed_form(g);
        let v = locc_success(&builtin_fmem_protocol(p), &e, Mode::Pi).map_err(|x| x.to_string())?;
        ensure((v - want).abs() <= 1e-12, || format!("gamma {g}: protocol {v} vs {want}"))?;
        let me = solve_me(&e).map_err(|x| x.to_string())?;
        ensure((me.value - want).abs() <= 1e-6, || format!("gamma {g}: p_guess {}", me.value))?;
        let verdict = verify_me_certificate(&me.certificate, &e, 1e-6, Some(me.value));
        ensure(verdict.accepted, || format!("gamma {g}: certificate {verdict:?}"))?;
        for omega in OmegaLabel::PAIRS {
            let r = product_vector_obstruction(&e, (omega.w0().unwrap(), omega.w1().unwrap()))
                .map_err(|x| x.to_string())?;
            ensure(r.is_empty(), || format!("gamma {g}: pair {omega} has a product vector"))?;
        }
        let bound = guess_upper_bound(&e)
            .map_err(|x| x.to_string())?
            .ok_or_else(|| format!("gamma {g}: bound does not apply"))?;
        ensure((bound - v).abs() <= 1e-6, || format!("gamma {g}: bound {bound} vs {v}"))?;
    }
    let at2 = pi_gap_closed_form(2.0);
    ensure((at2 - 0.872_677_996_2).abs() < 1e-10, || format!("value at 2: {at2}"))?;
    Ok(format!("p_L^PI closed at gamma=2: {at2:.10}"))
}

// 6. classification

fn criterion_6() -> Outcome {
    for g in GAMMA_GRID {
        for (kind, want) in [
            (ExampleKind::Lock, Classification::LockedByPI),
            (ExampleKind::Unlock, Classification::UnlockedByPI),
        ] {
            let r = analyze_example(kind, params(g)).map_err(|x| x.to_string())?;
            ensure(r.classification == want, || {
                format!("{kind:?} gamma {g}: {:?}", r.classification)
            })?;
        }
    }
    Ok("lock -> LockedByPI, unlock -> UnlockedByPI on the grid".into())
}

// ---------------------------------------------------------------------------
// 7. oracles

/// Cholesky-based PSD test of `G - diag(s)`, written independently of the
/// library's linear algebra.
fn psd_by_cholesky(g: &[[C; 4]; 4], s: &[f64; 4]) -> bool {
    let mut l = [[C::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let mut sum = g[i][j];
            if i == j {
                sum -= s[i];
            }
            for (lik, ljk) in l[i].iter().zip(&l[j]).take(j) {
                sum -= lik * ljk.conj();
            }
            if i == j {
                if sum.re < -1e-13 {
                    return false;
                }
                l[i][i] = C::new(sum.re.max(1e-300).sqrt(), 0.0);
            } else {
                l[i][j] = sum / l[j][j].re;
            }
        }
    }
    true
}

struct GridOracle {
    g: [[C; 4]; 4],
    eta: [f64; 4],
    s_max: [f64; 4],
}

impl GridOracle {
    fn new(e: &Ensemble) -> Self {
        let kets = e.kets();
        let g = std::array::from_fn(|i| std::array::from_fn(|j| kets[i].inner(&kets[j])));
        let rb = reciprocal_basis(e).unwrap();
        let s_max = std::array::from_fn(|i| 1.0 / rb.vectors()[i].norm().powi(2));
        GridOracle {
            g,
            eta: e.priors(),
            s_max,
        }
    }

    /// Value of the feasible point furthest out along direction `u` (a point
    /// of the simplex), found by bisection; the feasible set is convex and
    /// contains the origin.
    fn radial(&self, u: [f64; 3]) -> Option<f64> {
        let u = [u[0], u[1], u[2], 1.0 - u[0] - u[1] - u[2]];
        if u.iter().any(|&x| x < -1e-15) {
            return None;
        }
        let mut hi = u
            .iter()
            .zip(&self.s_max)
            .filter(|(&x, _)| x > 0.0)
            .map(|(&x, &m)| m / x)
            .fold(f64::INFINITY, f64::min);
        let mut lo = 0.0;
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if psd_by_cholesky(&self.g, &u.map(|x| x.max(0.0) * mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo * (0..4).map(|i| self.eta[i] * u[i].max(0.0)).sum::<f64>())
    }

    /// Grid over the simplex of directions, then lattice refinement around
    /// the incumbent with shrinking step down to 1e-6.
    fn maximize(&self) -> f64 {
        let n = 40;
        let h = 1.0 / n as f64;
        let mut best = (0.0, [0.0; 3]);
        for a in 0..=n {
            for b in 0..=n - a {
                for c in 0..=n - a - b {
                    let u = [a as f64 * h, b as f64 * h, c as f64 * h];
                    if let Some(v) = self.radial(u) {
                        if v > best.0 {
                            best = (v, u);
                        }
                    }
                }
            }
        }
        let mut step = h;
        while step > 1e-6 {
            let centre = best.1;
            for a in -2..=2 {
                for b in -2..=2 {
                    for c in -2..=2 {
                        let u = [
                            centre[0] + a as f64 * step,
                            centre[1] + b as f64 * step,
                            centre[2] + c as f64 * step,
                        ];
                        if u.iter().any(|&x| x < 0.0) {
                            continue;
                        }
                        if let Some(v) = self.radial(u) {
                            if v > best.0 {
                                best = (v, u);
                            }
                        }
                    }
                }
            }
            if best.1 == centre {
                step /= 2.0;
            }
        }
        best.0
    }
}

fn bloch(theta: f64, phi: f64) -> [C; 2] {
    [
        C::new((theta / 2.0).cos(), 0.0),
        C::from_polar((theta / 2.0).sin(), phi),
    ]
}

fn dot(u: &[C; 2], v: &[C; 2]) -> C {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}

/// Minimum eigenpair of a 2×2 Hermitian matrix `[[p, q], [q*, r]]`.
fn min_eig2(p: f64, q: C, r: f64) -> (f64, f64, [C; 2]) {
    let mean = 0.5 * (p + r);
    let rad = (0.25 * (p - r).powi(2) + q.norm_sqr()).sqrt();
    let (lmin, lmax) = (mean - rad, mean + rad);
    let v = if q.norm() > 1e-300 {
        [q, C::new(lmin - p, 0.0)]
    } else if p <= r {
        [C::new(1.0, 0.0), C::new(0.0, 0.0)]
    } else {
        [C::new(0.0, 0.0), C::new(1.0, 0.0)]
    };
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    (lmin, lmax, [v[0] / n, v[1] / n])
}

/// Numeric search for a product vector `a ⊗ b` with vanishing overlap on
/// two states and nonvanishing overlap on the other two.
///
/// `a` runs over a Bloch-sphere grid; for each `a` the best `b` is the
/// bottom eigenvector of `Σ_j |<c_j|a>|² |d_j><d_j|` over the states that
/// must be missed. Low points of the residual are polished by compass search.
struct BlochSearch {
    n: usize,
    points: Vec<[C; 2]>,
}

/// Residual amplitude and smallest kept overlap for one `a`.
#[derive(Clone, Copy)]
struct Probe {
    residual: f64,
    overlap: f64,
}

impl Probe {
    fn is_witness(self) -> bool {
        self.residual <= 1e-8 && self.overlap >= 1e-6
    }
}

struct PairFactors {
    zero: [([C; 2], [C; 2]); 2],
    keep: [([C; 2], [C; 2]); 2],
}

impl PairFactors {
    fn new(e: &Ensemble, pair: (Label, Label)) -> Self {
        let factors = |l: Label| {
            let s = e.state(l);
            ([s.a[0], s.a[1]], [s.b[0], s.b[1]])
        };
        let zero: Vec<Label> = Label::ALL.into_iter().filter(|&l| l != pair.0 && l != pair.1).collect();
        PairFactors {
            zero: [factors(zero[0]), factors(zero[1])],
            keep: [factors(pair.0), factors(pair.1)],
        }
    }

    fn probe_b(&self, a: &[C; 2], b: &[C; 2]) -> Probe {
        let res: f64 = self.zero.iter().map(|(c, d)| (dot(c, a) * dot(d, b)).norm_sqr()).sum();
        let overlap = self
            .keep
            .iter()
            .map(|(c, d)| (dot(c, a) * dot(d, b)).norm())
            .fold(f64::INFINITY, f64::min);
        Probe {
            residual: res.sqrt(),
            overlap,
        }
    }

    fn probe(&self, a: &[C; 2]) -> Probe {
        let mut p = 0.0;
        let mut q = C::new(0.0, 0.0);
        let mut r = 0.0;
        for (c, d) in &self.zero {
            let w = dot(c, a).norm_sqr();
            p += w * d[0].norm_sqr();
            r += w * d[1].norm_sqr();
            q += d[0] * d[1].conj() * w;
        }
        let (_, lmax, b) = min_eig2(p, q, r);
        if lmax > 1e-8 {
            return self.probe_b(a, &b);
        }
        // `b` barely constrained: pick it to keep the overlaps large
        let mut best = self.probe_b(a, &b);
        for i in 0..=40 {
            for j in 0..40 {
                let cand = self.probe_b(a, &bloch(PI * i as f64 / 40.0, 2.0 * PI * j as f64 / 40.0));
                if cand.residual <= 1e-8 && cand.overlap > best.overlap {
                    best = cand;
                }
            }
        }
        best
    }

    fn refine(&self, mut theta: f64, mut phi: f64, mut step: f64) -> Probe {
        let mut cur = self.probe(&bloch(theta, phi));
        while step > 1e-13 {
            let mut moved = false;
            for (dt, dp) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                let cand = self.probe(&bloch(theta + dt, phi + dp));
                if cand.residual < cur.residual {
                    cur = cand;
                    theta += dt;
                    phi += dp;
                    moved = true;
                    break;
                }
            }
            if !moved {
                step /= 2.0;
            }
        }
        cur
    }
}

impl BlochSearch {
    fn new(n: usize) -> Self {
        let mut points = Vec::with_capacity(n * n + 2);
        for i in 0..n {
            for j in 0..n {
                points.push(bloch(Self::theta(n, i), Self::phi(n, j)));
            }
        }
        BlochSearch { n, points }
    }

    fn theta(n: usize, i: usize) -> f64 {
        PI * (i as f64 + 0.5) / n as f64
    }

    fn phi(n: usize, j: usize) -> f64 {
        2.0 * PI * j as f64 / n as f64
    }

    /// Dense scan plus polishing. A hit is a genuine witness whichever grid
    /// found it, so a coarse pass runs first and the dense grid decides the
    /// rest.
    fn has_witness(&self, coarse: &BlochSearch, e: &Ensemble, pair: (Label, Label)) -> bool {
        let f = PairFactors::new(e, pair);
        coarse.scan(&f) || self.scan(&f)
    }

    fn scan(&self, f: &PairFactors) -> bool {
        let n = self.n;
        let mut grid = Vec::with_capacity(n * n);
        for a in &self.points {
            let pr = f.probe(a);
            if pr.is_witness() {
                return true;
            }
            grid.push(pr.residual);
        }
        for theta in [0.0, PI] {
            if f.probe(&bloch(theta, 0.0)).is_witness() {
                return true;
            }
        }
        // local minima of the residual, with periodic φ
        let mut minima: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = grid[i * n + j];
                let lower_neighbour = (-1i64..=1).any(|di| {
                    (-1i64..=1).any(|dj| {
                        let ii = i as i64 + di;
                        if (di, dj) == (0, 0) || ii < 0 || ii >= n as i64 {
                            return false;
                        }
                        let jj = (j as i64 + dj).rem_euclid(n as i64) as usize;
                        grid[ii as usize * n + jj] < v
                    })
                });
                if !lower_neighbour {
                    minima.push((v, i, j));
                }
            }
        }
        minima.sort_by(|x, y| x.0.total_cmp(&y.0));
        minima.dedup_by(|x, y| x.0 == y.0);
        minima
            .iter()
            .take(8)
            .any(|&(_, i, j)| f.refine(Self::theta(n, i), Self::phi(n, j), PI / n as f64).is_witness())
    }
}

fn random_local_unitary_image(rng: &mut impl Rng, e: &Ensemble) -> Ensemble {
    let (ua0, ua1) = (random_unit(rng, 2), random_unit(rng, 2));
    let ub0 = random_unit(rng, 2);
    let ub1 = ub0.orthogonal_qubit();
    // orthonormal columns for A
    let ua1 = {
        let w = &ua1 - &ua0.scale(ua0.inner(&ua1));
        w.normalized().unwrap()
    };
    let apply = |cols: (&CVec, &CVec), v: &CVec| {
        let entries = (0..2).map(|k| cols.0[k] * v[0] + cols.1[k] * v[1]).collect();
        CVec::new(entries)
    };
    let states: [ProductState; 4] = std::array::from_fn(|i| {
        let s = &e.states()[i];
        ProductState::new(apply((&ua0, &ua1), &s.a), apply((&ub0, &ub1), &s.b))
    });
    Ensemble::new(random_priors(rng), states).unwrap()
}

fn shared_factor_ensemble(rng: &mut impl Rng) -> Ensemble {
    loop {
        let pool_a = [random_unit(rng, 2), random_unit(rng, 2)];
        let pool_b = [random_unit(rng, 2), random_unit(rng, 2), random_unit(rng, 2)];
        let states: [ProductState; 4] = std::array::from_fn(|_| {
            ProductState::new(
                pool_a[rng.random_range(0..2)].clone(),
                pool_b[rng.random_range(0..3)].clone(),
            )
        });
        if let Ok(e) = Ensemble::new(random_priors(rng), states) {
            return e;
        }
    }
}

fn criterion_7() -> Outcome {
    let mut rng = seeded(0);

    // solve_oud against the grid search
    let mut worst: f64 = 0.0;
    let mut cases: Vec<(String, Ensemble)> = Vec::new();
    for g in [2.0, 3.0, 5.0] {
        for kind in [ExampleKind::Lock, ExampleKind::Unlock] {
            cases.push((format!("{kind:?} gamma {g}"), make_example(kind, params(g))));
        }
    }
    for k in 0..20 {
        cases.push((format!("random ensemble {k}"), random_product_ensemble(&mut rng)));
    }
    for (k, e) in &cases {
        let sol = solve_oud(e).map_err(|x| format!("{k}: {x}"))?;
        let oracle = GridOracle::new(e);
        let shrunk = sol.povm.weights().map(|w| w * (1.0 - 1e-9));
        ensure(psd_by_cholesky(&oracle.g, &shrunk), || format!("{k}: solver weights infeasible"))?;
        let grid = oracle.maximize();
        let r = (sol.value - grid).abs();
        worst = worst.max(r);
        ensure(r <= 2e-3, || format!("{k}: solver {} vs grid {grid}", sol.value))?;
    }

    // product-vector obstruction against the Bloch-grid search
    let mut ensembles = Vec::with_capacity(1000);
    for k in 0..1000 {
        let e = match k % 4 {
            0 | 1 => random_product_ensemble(&mut rng),
            2 => {
                let base = if k % 8 == 2 {
                    make_unlock_example(params(2.0 + rng.random::<f64>() * 8.0))
                } else {
                    make_lock_example(params(2.0 + rng.random::<f64>() * 8.0))
                };
                random_local_unitary_image(&mut rng, &base)
            }
            _ => shared_factor_ensemble(&mut rng),
        };
        ensembles.push(e);
    }
    let (search, coarse) = (BlochSearch::new(400), BlochSearch::new(50));
    let mut disagreements = 0;
    let mut witnesses = 0;
    let mut first = None;
    for (k, e) in ensembles.iter().enumerate() {
        for omega in OmegaLabel::PAIRS {
            let pair = (omega.w0().unwrap(), omega.w1().unwrap());
            let exact = !product_vector_obstruction(e, pair).map_err(|x| x.to_string())?.is_empty();
            let numeric = search.has_witness(&coarse, e, pair);
            witnesses += exact as usize;
            if exact != numeric {
                disagreements += 1;
                first.get_or_insert(format!("ensemble {k} pair {omega}: exact {exact}, grid {numeric}"));
                if std::env::var("DBG").is_ok() {
                    eprintln!("{k} {omega} {:?}\n{:?}", e.states(), product_vector_obstruction(e, pair).unwrap().branches);
                }
            }
        }
    }
    ensure(disagreements == 0, || {
        format!("{disagreements} disagreements, first: {}", first.unwrap_or_default())
    })?;

    // two-state minimum error against Helstrom
    let mut worst_h: f64 = 0.0;
    for _ in 0..20 {
        let e = random_product_ensemble(&mut rng);
        for (i, a) in Label::ALL.iter().enumerate() {
            for b in &Label::ALL[i + 1..] {
                let (pa, pb) = (e.prior(*a), e.prior(*b));
                let (ra, rb) = (e.rho(*a), e.rho(*b));
                let sol = solve_me_states(&[pa, pb], &[ra.clone(), rb.clone()])
                    .map_err(|x| x.to_string())?;
                let helstrom = 0.5 * (pa + pb) + 0.5 * (&ra.scale(pa) - &rb.scale(pb)).trace_norm();
                let r = (sol.value - helstrom).abs();
                worst_h = worst_h.max(r);
                ensure(r <= 1e-8, || format!("pair ({a},{b}): {} vs {helstrom}", sol.value))?;
            }
        }
    }
    Ok(format!(
        "grid search worst {worst:.2e}; obstruction 4000 pairs, {witnesses} witnesses, 0 disagreements; Helstrom worst {worst_h:.2e}"
    ))
}

// ---------------------------------------------------------------------------
// 8. numerical hygiene

fn random_local_protocol(rng: &mut impl Rng) -> LoccProtocol {
    let first = if rng.random::<bool>() { Party::A } else { Party::B };
    let mut measure = |party| {
        let v = random_unit(rng, 2);
        let w = v.orthogonal_qubit();
        LocalMeasurement::projective(party, [&v, &w]).unwrap()
    };
    let round1 = measure(first);
    let round2 = vec![measure(first.other()), measure(first.other())];
    let outcomes = [None, Some(Label::Zero), Some(Label::One), Some(Label::Plus), Some(Label::Minus)];
    let labels = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|k| (k, LeafLabel::Plain(outcomes[rng.random_range(0..5)])))
        .collect();
    LoccProtocol::new(Mode::Plain, round1, round2, labels).unwrap()
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(8);
    let mut dual: f64 = 0.0;
    let mut recon: f64 = 0.0;

    let mut ensembles = Vec::new();
    for g in GAMMA_GRID {
        ensembles.push(make_lock_example(params(g)));
        ensembles.push(make_unlock_example(params(g)));
    }
    for _ in 0..1000 {
        ensembles.push(random_product_ensemble(&mut rng));
    }
    for e in &ensembles {
        dual = dual.max(reciprocal_basis(e).map_err(|x| x.to_string())?.duality_residual());
    }

    let mut protocols = vec![
        builtin_loccud2_protocol(),
        builtin_oudm_protocol(),
        builtin_lock_pi_protocol(),
        trivial_protocol(Mode::Plain),
        trivial_protocol(Mode::Pi),
    ];
    protocols.extend(GAMMA_GRID.iter().map(|&g| builtin_fmem_protocol(params(g))));
    for _ in 0..1000 {
        protocols.push(random_local_protocol(&mut rng));
    }
    let mut effects = 0;
    for p in &protocols {
        let c = compile_protocol(p).map_err(|x| x.to_string())?;
        for m in c.leaves.iter().map(|(_, m)| m).chain(c.effects.values()) {
            effects += 1;
            ensure(is_separable_effect(m, 1e-9).unwrap_or(false), || {
                "a compiled LOCC effect fails the partial-transpose test".to_string()
            })?;
        }
    }

    // built-in operators and random Hermitians
    let mut ops: Vec<HermitianOp> = Vec::new();
    for g in GAMMA_GRID {
        let e = make_lock_example(params(g));
        ops.extend(Label::ALL.iter().map(|&l| e.rho(l)));
        ops.push(example_certificate(ExampleKind::Lock, params(g)).k);
        ops.push(example_certificate(ExampleKind::Unlock, params(g)).k);
        ops.push(lock_bound_operator(params(g)).h().clone());
    }
    for dim in [2, 4] {
        for _ in 0..1000 {
            ops.push(random_hermitian(&mut rng, dim));
        }
    }
    for a in &ops {
        let eig = hermitian_eig(a);
        recon = recon.max((&eig.reconstruct() - a.matrix()).frobenius_norm());
    }

    ensure(dual <= 1e-10, || format!("dual-basis residual {dual:.3e}"))?;
    ensure(recon <= 1e-10, || format!("reconstruction error {recon:.3e}"))?;
    Ok(format!(
        "dual residual {dual:.2e}, {effects} effects separable, reconstruction {recon:.2e}, {:.2?}",
        start.elapsed()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("global optimum closed forms and certificates", criterion_1),
        ("lock example LOCC sandwich", criterion_2),
        ("unlock example has no gap without PI", criterion_3),
        ("perfect discrimination with PI", criterion_4),
        ("PI gap on the unlock example", criterion_5),
        ("lock/unlock classification", criterion_6),
        ("oracle equivalences", criterion_7),
        ("numerical hygiene", criterion_8),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        match run() {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{:.2?}]", k + 1, t.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail} [{:.2?}]", k + 1, t.elapsed());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed, {:.2?}", criteria.len() - failed, start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
