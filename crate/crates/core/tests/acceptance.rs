//! Acceptance criteria 1 to 10. Runs without the test harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ncgauge::calculus::{
    canonical_theta, dprime, evaluate, graded_commutator, hodge, nc_integrate, wedge, DerForm,
    Derivation,
};
use ncgauge::gauge::{
    action, action_via_integral, curvature, flat_connection_check, gauge_transform, minimize,
    spin_connection, MatrixConnection,
};
use ncgauge::lattice::{lattice_action, mass_spectrum, vacuum_config, VacuumKind};
use ncgauge::linalg::{c, gellmann_basis, identity, max_abs, random, CMatrix, MatrixBasis, C64, ONE, ZERO};
use ncgauge::optimize::{DescentParams, DescentStatus};
use ncgauge::spectral::{
    check_axioms, fluctuated_dirac, inner_gauge, ko_signs, represent_form, sm_algebra,
    sm_algebra_fixture, sm_operator, two_point_action, two_point_action_operator,
    two_point_triple, AlgebraElement, FiniteSpectralTriple, MeasuredSigns,
};
use ncgauge::universal::{two_point_connection, two_point_one_form};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn basis(n: usize) -> Arc<MatrixBasis> {
    Arc::new(gellmann_basis(n).unwrap())
}

fn diff(a: &DerForm, b: &DerForm) -> f64 {
    a.sub(b).unwrap().max_abs()
}

fn phase(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
}

fn calculus_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = [0.0f64; 5];
    for n in [2, 3] {
        let b = basis(n);
        let d = b.dim();
        let theta = canonical_theta(&b).unwrap();
        worst[3] = worst[3].max(diff(&dprime(&theta), &wedge(&theta, &theta).unwrap()));
        for _ in 0..200 {
            let p = rng.gen_range(0..=3);
            let q = rng.gen_range(0..=3);
            let w = DerForm::random(&mut rng, &b, p);
            let e = DerForm::random(&mut rng, &b, q);
            worst[0] = worst[0].max(dprime(&dprime(&w)).max_abs());
            let sign = if p % 2 == 0 { ONE } else { -ONE };
            let rhs = wedge(&dprime(&w), &e)
                .unwrap()
                .add(&wedge(&w, &dprime(&e)).unwrap().scale(sign))
                .unwrap();
            worst[1] = worst[1].max(diff(&dprime(&wedge(&w, &e).unwrap()), &rhs));

            // d'a two ways: [iθ, a], and d'a(∂_k) = [iE_k, a] directly
            let a = random::complex(&mut rng, n, n);
            let da = dprime(&DerForm::scalar(&b, a.clone()));
            let inner = graded_commutator(&theta, &DerForm::scalar(&b, a.clone())).unwrap();
            worst[2] = worst[2].max(diff(&da, &inner));
            for k in 0..d {
                let ik = b.element(k) * c(0.0, 1.0);
                let v = evaluate(&da, &[Derivation::partial(&b, k)]).unwrap();
                worst[2] = worst[2].max(max_abs(&(v - (&ik * &a - &a * &ik))));
            }

            let eta = DerForm::random(&mut rng, &b, d - 1);
            worst[4] = worst[4].max(nc_integrate(&dprime(&eta)).norm());
        }
    }
    let passed = worst.iter().all(|r| *r < 1e-10);
    outcome(
        passed,
        format!(
            "d'^2 {:.1e}, Leibniz {:.1e}, d'a {:.1e}, closure {:.1e}, Stokes {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

fn hodge_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let b = basis(2);
    let d = b.dim();
    let mut star2: f64 = 0.0;
    for _ in 0..10 {
        for p in 0..=d {
            let w = DerForm::random(&mut rng, &b, p);
            let sign = if (p * (d - p)) % 2 == 0 { ONE } else { -ONE };
            star2 = star2.max(diff(&hodge(&hodge(&w).unwrap()).unwrap(), &w.scale(sign)));
        }
    }
    let mut routes: f64 = 0.0;
    for _ in 0..100 {
        let conn = MatrixConnection::random(&mut rng, &b, 2, 1.0);
        routes = routes.max((action(&conn) - action_via_integral(&conn).unwrap()).abs());
    }
    outcome(star2 < 1e-8 && routes < 1e-8, format!("star-star {star2:.1e}, action routes {routes:.1e}"))
}

fn matrix_vacua() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let b = basis(2);
    let mut min_action = f64::INFINITY;
    for _ in 0..200 {
        let scale = rng.gen_range(0.01..3.0);
        min_action = min_action.min(action(&MatrixConnection::random(&mut rng, &b, 2, scale)));
    }
    let zero = action(&MatrixConnection::zero(&b, 2)).abs();
    let canonical = action(&MatrixConnection::canonical(&b)).abs();
    let params = DescentParams {
        tol: 1e-10,
        ..DescentParams::default()
    };
    let (mut worst_s, mut worst_f, mut all_converged) = (0.0f64, 0.0f64, true);
    for seed in 0..20 {
        let conn0 = MatrixConnection::random(&mut ChaCha8Rng::seed_from_u64(seed), &b, 2, 1.0);
        let rep = minimize(&conn0, &params);
        all_converged &= rep.status == DescentStatus::Converged;
        worst_s = worst_s.max(rep.final_action);
        worst_f = worst_f.max(flat_connection_check(&rep.connection).curvature_residual);
    }
    let passed = min_action >= 0.0 && zero < 1e-12 && canonical < 1e-12 && worst_s < 1e-8 && worst_f < 1e-8;
    outcome(
        passed,
        format!(
            "min S {min_action:.2e}, S(0) {zero:.1e}, S(iE) {canonical:.1e}, 20 runs: max S {worst_s:.1e}, max F {worst_f:.1e}, converged {all_converged}"
        ),
    )
}

fn gauge_covariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let (mut ds, mut df) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let n = 2 + i % 2;
        let b = basis(n);
        let conn = MatrixConnection::random(&mut rng, &b, n, 1.0);
        let g = random::unitary(&mut rng, n);
        let t = gauge_transform(&conn, &g).unwrap();
        ds = ds.max((action(&t) - action(&conn)).abs());
        let (f, ft) = (curvature(&conn), curvature(&t));
        let gi = g.adjoint();
        for k in 0..b.dim() {
            for l in 0..b.dim() {
                df = df.max(max_abs(&(ft.get(k, l) - &gi * f.get(k, l) * &g)));
            }
        }
    }
    outcome(ds < 1e-10 && df < 1e-10, format!("action {ds:.1e}, curvature {df:.1e}"))
}

fn flat_classification() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let b = basis(2);
    let half = flat_connection_check(&spin_connection(&b, &[1]).unwrap());
    let one = flat_connection_check(&spin_connection(&b, &[2]).unwrap());
    let half_triv = flat_connection_check(&spin_connection(&b, &[1, 0]).unwrap());
    let g = random::unitary(&mut rng, 3);
    let one_conj = flat_connection_check(&gauge_transform(&spin_connection(&b, &[2]).unwrap(), &g).unwrap());
    // -A_k A^k = 4 j(j+1) on spin j
    let casimir_ok = (half.casimir - 6.0).abs() < 1e-10
        && (one.casimir - 24.0).abs() < 1e-10
        && (half_triv.casimir - 6.0).abs() < 1e-10;
    let flat = half.flat && one.flat && half_triv.flat && one_conj.flat;
    let separates = !one.same_orbit_invariants(&half_triv, 1e-8) && one.same_orbit_invariants(&one_conj, 1e-8);
    outcome(
        flat && casimir_ok && separates,
        format!(
            "flat {flat}, Casimir 1/2 {:.3}, 1 {:.3}, 1/2+0 {:.3}, separates {separates}",
            half.casimir, one.casimir, half_triv.casimir
        ),
    )
}

fn lattice_higgs() -> Outcome {
    let b = basis(2);
    let mu = 0.6;
    let sym = lattice_action(&vacuum_config(VacuumKind::Symmetric, &[16], &b, mu).unwrap()).abs();
    let brk = lattice_action(&vacuum_config(VacuumKind::Broken, &[16], &b, mu).unwrap()).abs();
    let s1 = mass_spectrum(&vacuum_config(VacuumKind::Broken, &[16], &b, mu).unwrap());
    let s2 = mass_spectrum(&vacuum_config(VacuumKind::Broken, &[16], &b, 2.0 * mu).unwrap());
    let psd = s1.eigenvalues[0] > -1e-8 && s2.eigenvalues[0] > -1e-8;
    let top1 = *s1.eigenvalues.last().unwrap();
    let top2 = *s2.eigenvalues.last().unwrap();
    let ratio = top2 / top1;
    // massive modes at μ²/2
    let value_ok = (top1 - mu * mu / 2.0).abs() < 1e-6;
    let zero_mode = s1.identity_mode_residual.max(s2.identity_mode_residual);
    let passed = sym < 1e-12 && brk < 1e-12 && psd && (ratio - 4.0).abs() < 1e-3 && value_ok && zero_mode < 1e-6;
    outcome(
        passed,
        format!(
            "S sym {sym:.1e}, S broken {brk:.1e}, spectrum {:?}, ratio {ratio:.6}, zero mode {zero_mode:.1e}",
            s1.eigenvalues.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn two_point_model() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let mut routes: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(1..=5);
        let m = random::complex(&mut rng, n, n);
        let phi = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        routes = routes.max((two_point_action(phi, &m) - two_point_action_operator(phi, &m).unwrap()).abs());
    }
    let m = random::complex(&mut rng, 3, 3);
    let circle = (0..64)
        .map(|k| two_point_action(C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 64.0), &m).abs())
        .fold(0.0, f64::max);
    let origin = (1..=6)
        .map(|n| (two_point_action(ZERO, &identity(n)) - 2.0 * n as f64).abs())
        .fold(0.0, f64::max);
    outcome(
        routes < 1e-10 && circle < 1e-12 && origin < 1e-12,
        format!("routes {routes:.1e}, |phi|=1 max {circle:.1e}, S(0)-2N {origin:.1e}"),
    )
}

fn caught(t: &FiniteSpectralTriple, line: &str) -> bool {
    check_axioms(t).line(line).is_some_and(|l| !l.passed)
}

fn spectral_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    // KO signs (ε, ε', ε'') for n mod 8 = 0..7
    let expected: [(i8, i8, Option<i8>); 8] = [
        (1, 1, Some(1)),
        (1, -1, None),
        (-1, 1, Some(-1)),
        (-1, 1, None),
        (-1, 1, Some(1)),
        (-1, -1, None),
        (1, 1, Some(-1)),
        (1, 1, None),
    ];
    let ko_ok = (0..16).all(|k| {
        let s = ko_signs(k);
        (s.eps, s.eps_prime, s.eps_second) == expected[k % 8]
    });

    let mut failing = Vec::new();
    let mut signs_ok = true;
    let mut first_order: f64 = 0.0;
    for n in 1..=4 {
        let t = two_point_triple(n, &random::complex(&mut rng, n, n)).unwrap();
        let rep = check_axioms(&t);
        signs_ok &= rep.measured == Some(MeasuredSigns { eps: Some(1), eps_prime: Some(1), eps_second: Some(1) });
        for name in rep.failed() {
            if !failing.contains(&name.to_string()) {
                failing.push(name.to_string());
            }
        }
        first_order = first_order.max(rep.line("first_order").unwrap().residual);
    }

    let n = 2;
    let t = two_point_triple(n, &random::complex(&mut rng, n, n)).unwrap();
    let d = t.dirac().clone();
    let h = 2 * n;
    let mut skew = d.clone();
    skew[(0, n)] += ONE;
    let gamma = t.gamma().unwrap().clone();
    let dy = &d * c(0.0, 1.0);
    let mut gens = t.generators().to_vec();
    gens[0] = &gens[0] * c(2.0, 0.0);
    let mutations = [
        caught(&t.with_dirac(skew).unwrap(), "dirac_self_adjoint"),
        caught(&t.with_gamma(Some(&gamma * c(2.0, 0.0))).unwrap(), "chirality_involution"),
        caught(&t.with_gamma(Some(identity(h))).unwrap(), "chirality_anticommutes_dirac"),
        caught(&t.with_gamma(Some(&gamma * c(0.0, 1.0))).unwrap(), "chirality_self_adjoint"),
        caught(&t.with_ko_dim(4).unwrap(), "reality_square"),
        caught(&t.with_ko_dim(6).unwrap(), "reality_chirality"),
        caught(&t.with_ko_dim(1).unwrap(), "chirality_parity"),
        caught(&t.with_dirac(dy.clone()).unwrap().with_ko_dim(0).unwrap(), "reality_dirac")
            || caught(&t.with_dirac(dy).unwrap(), "dirac_self_adjoint"),
        caught(&t.with_reality(Some(t.reality().unwrap() * c(2.0, 0.0))).unwrap(), "reality_antiunitary"),
        caught(&t.with_generators(gens).unwrap(), "representation_homomorphism"),
        caught(&t.with_reality(Some(identity(h))).unwrap().with_gamma(Some(gamma.clone())).unwrap(), "reality_dirac"),
    ];
    let mutations_ok = mutations.iter().all(|x| *x);
    let passed = ko_ok && signs_ok && mutations_ok && failing.is_empty();
    outcome(
        passed,
        format!(
            "KO table {ko_ok}, signs (1,1,1) {signs_ok}, mutations caught {}/{}, failing axioms {failing:?} (first-order residual {first_order:.2e})",
            mutations.iter().filter(|x| **x).count(),
            mutations.len()
        ),
    )
}

fn gauge_coincidence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let (mut worst, mut oracle, mut conj) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.gen_range(1..=8);
        let m = random::complex(&mut rng, n, n);
        let t = two_point_triple(n, &m).unwrap();
        let r1 = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let r2 = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (u0, u1) = (phase(&mut rng), phase(&mut rng));
        let u = AlgebraElement::points(&[u0, u1]);
        let g = inner_gauge(&t, &u, &two_point_one_form(r1, r2)).unwrap();
        worst = worst.max(g.residual);
        conj = conj.max(g.conjugation_residual);
        // ω^u = uωu* + u d u* on the two off-diagonal values
        let s1 = u0 * r1 * u1.conj() + u0 * u1.conj() - ONE;
        let s2 = u1 * r2 * u0.conj() + u1 * u0.conj() - ONE;
        let a = represent_form(&t, &two_point_one_form(s1, s2)).unwrap();
        let closed = fluctuated_dirac(&t, &a).unwrap();
        oracle = oracle.max(max_abs(&(closed - &g.transformed)));
    }
    // Hermitian connections too
    for _ in 0..20 {
        let n = rng.gen_range(1..=8);
        let t = two_point_triple(n, &random::complex(&mut rng, n, n)).unwrap();
        let omega = two_point_connection(c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let u = AlgebraElement::points(&[phase(&mut rng), phase(&mut rng)]);
        worst = worst.max(inner_gauge(&t, &u, &omega).unwrap().residual);
    }
    outcome(
        worst < 1e-10 && oracle < 1e-10,
        format!("routes {worst:.1e}, closed form {oracle:.1e} (U D U* diagnostic {conj:.2e})"),
    )
}

/// `(A₁, A₂)` blocks of `diag(λ, λ̄, q) ⊕ diag(λ, m)`.
fn sm_blocks(a: &AlgebraElement) -> (CMatrix, CMatrix) {
    let op = sm_operator(a);
    // column-major vec: the 4×4 left factor sits in the first diagonal block
    (op.view((0, 0), (4, 4)).into_owned(), op.view((16, 16), (4, 4)).into_owned())
}

fn sm_fixture() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let t = sm_algebra_fixture(None).unwrap();
    let rep = check_axioms(&t);
    let hom = rep.line("representation_homomorphism").unwrap().residual;
    let zeroth = rep.line("zeroth_order").unwrap().residual;
    let alg = sm_algebra();
    let mut direct: f64 = 0.0;
    let mut mult: f64 = 0.0;
    for _ in 0..20 {
        let (x, y) = (alg.random(&mut rng), alg.random(&mut rng));
        mult = mult.max(max_abs(&(sm_operator(&x.mul(&y)) - sm_operator(&x) * sm_operator(&y))));
        // [a, J b J⁻¹] on matrices: J(Ψ₁, Ψ₂) = (Ψ₂*, Ψ₁*), J⁻¹ = J
        let (a1, a2) = sm_blocks(&x);
        let (b1, b2) = sm_blocks(&y);
        let p1 = random::complex(&mut rng, 4, 4);
        let p2 = random::complex(&mut rng, 4, 4);
        let jbj = |q1: &CMatrix, q2: &CMatrix| {
            let (j1, j2) = (q2.adjoint(), q1.adjoint());
            let (k1, k2) = (&b1 * j1, &b2 * j2);
            (k2.adjoint(), k1.adjoint())
        };
        let (l1, l2) = jbj(&(&a1 * &p1), &(&a2 * &p2));
        let (r1, r2) = jbj(&p1, &p2);
        direct = direct.max(max_abs(&(l1 - &a1 * r1)).max(max_abs(&(l2 - &a2 * r2))));
    }
    let passed = hom < 1e-10 && zeroth < 1e-10 && mult < 1e-10 && direct < 1e-10;
    outcome(
        passed,
        format!("homomorphism {hom:.1e} / {mult:.1e}, zeroth order {zeroth:.1e} / {direct:.1e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Duration, fn() -> Outcome); 10] = [
        (1, "calculus identities", Duration::from_secs(10), calculus_identities),
        (2, "Hodge consistency", Duration::from_secs(5), hodge_consistency),
        (3, "matrix vacua", Duration::from_secs(60), matrix_vacua),
        (4, "gauge covariance", Duration::from_secs(5), gauge_covariance),
        (5, "flat-connection classification", Duration::from_secs(5), flat_classification),
        (6, "lattice vacua and Higgs mechanism", Duration::from_secs(120), lattice_higgs),
        (7, "two-point model", Duration::from_secs(5), two_point_model),
        (8, "spectral axioms", Duration::from_secs(5), spectral_axioms),
        (9, "gauge coincidence", Duration::from_secs(10), gauge_coincidence),
        (10, "SM fixture", Duration::from_secs(5), sm_fixture),
    ];
    let mut failures = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let ok = o.passed && elapsed < budget;
        failures += usize::from(!ok);
        println!(
            "criterion {id:>2} {}  {name}: {} [{:.2}s / {}s]",
            if ok { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
