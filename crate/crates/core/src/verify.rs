//! Randomized invariant suites over every module, driven by one seed.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{canonical_theta, dprime, graded_commutator, hodge, nc_integrate, wedge, DerForm};
use crate::error::{Error, Result};
use crate::gauge::{
    action, action_via_integral, curvature, flat_connection_check, gauge_transform, spin_connection,
    MatrixConnection,
};
use crate::lattice::{
    lattice_action, lattice_gauge_transform, mass_spectrum, vacuum_config, LatticeSpec, VacuumKind,
};
use crate::linalg::{c, gellmann_basis, max_abs, random, CMatrix, C64, MatrixBasis, ONE, TAU_ALG, TAU_NUM};
use crate::spectral::{
    check_axioms, inner_gauge, ko_signs, sm_algebra_fixture, two_point_action, two_point_action_operator,
    two_point_triple, AlgebraElement, KO_TABLE,
};
use crate::universal::two_point_connection;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Worst residual over all samples.
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    /// Reported quantities that do not affect `passed`.
    pub diagnostics: Vec<Check>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub n: usize,
    pub seed: u64,
    pub samples: usize,
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
}

struct Suite {
    name: &'static str,
    checks: Vec<Check>,
    diagnostics: Vec<Check>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    fn make(name: &str, residual: f64, tolerance: f64) -> Check {
        Check {
            name: name.to_string(),
            residual,
            tolerance,
            passed: residual < tolerance,
        }
    }

    fn check(&mut self, name: &str, residual: f64, tolerance: f64) {
        self.checks.push(Self::make(name, residual, tolerance));
    }

    fn diagnostic(&mut self, name: &str, residual: f64, tolerance: f64) {
        self.diagnostics.push(Self::make(name, residual, tolerance));
    }

    fn finish(self) -> SuiteReport {
        SuiteReport {
            suite: self.name.to_string(),
            passed: self.checks.iter().all(|c| c.passed),
            checks: self.checks,
            diagnostics: self.diagnostics,
        }
    }
}

fn sub(a: &DerForm, b: &DerForm) -> f64 {
    a.sub(b).expect("same basis").max_abs()
}

pub fn calculus_suite(basis: &Arc<MatrixBasis>, rng: &mut ChaCha8Rng, samples: usize) -> Result<SuiteReport> {
    let mut s = Suite::new("calculus");
    let d = basis.dim();
    let n = basis.n();
    let theta = canonical_theta(basis)?;
    let (mut dd, mut leibniz, mut inner, mut stokes) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let p = rng.gen_range(0..=3.min(d));
        let q = rng.gen_range(0..=2.min(d));
        let w = DerForm::random(rng, basis, p);
        let e = DerForm::random(rng, basis, q);
        dd = dd.max(dprime(&dprime(&w)).max_abs());
        let lhs = dprime(&wedge(&w, &e)?);
        let sign = if p % 2 == 0 { ONE } else { -ONE };
        let rhs = wedge(&dprime(&w), &e)?.add(&wedge(&w, &dprime(&e))?.scale(sign))?;
        leibniz = leibniz.max(sub(&lhs, &rhs));
        let a = DerForm::scalar(basis, random::complex(rng, n, n));
        inner = inner.max(sub(&dprime(&a), &graded_commutator(&theta, &a)?));
        let top = DerForm::random(rng, basis, d - 1);
        stokes = stokes.max(nc_integrate(&dprime(&top)).norm());
    }
    s.check("d_squared", dd, TAU_ALG);
    s.check("graded_leibniz", leibniz, TAU_ALG);
    s.check("inner_differential", inner, TAU_ALG);
    s.check("theta_closure", sub(&dprime(&theta), &wedge(&theta, &theta)?), TAU_ALG);
    s.check("stokes", stokes, TAU_ALG);
    Ok(s.finish())
}

pub fn hodge_suite(basis: &Arc<MatrixBasis>, rng: &mut ChaCha8Rng, samples: usize) -> Result<SuiteReport> {
    let mut s = Suite::new("hodge");
    let d = basis.dim();
    let mut star2: f64 = 0.0;
    for p in 0..=d {
        let w = DerForm::random(rng, basis, p);
        let sign = if (p * (d - p)) % 2 == 0 { ONE } else { -ONE };
        star2 = star2.max(sub(&hodge(&hodge(&w)?)?, &w.scale(sign)));
    }
    let mut routes: f64 = 0.0;
    for _ in 0..samples {
        let conn = MatrixConnection::random(rng, basis, basis.n(), 1.0);
        let a = action(&conn);
        routes = routes.max((a - action_via_integral(&conn)?).abs() / a.max(1.0));
    }
    s.check("hodge_square", star2, TAU_NUM);
    s.check("action_routes", routes, TAU_NUM);
    Ok(s.finish())
}

pub fn gauge_suite(basis: &Arc<MatrixBasis>, rng: &mut ChaCha8Rng, samples: usize) -> Result<SuiteReport> {
    let mut s = Suite::new("gauge");
    let n = basis.n();
    let (mut neg, mut act, mut curv) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let conn = MatrixConnection::random(rng, basis, n, 1.0);
        let g = random::unitary(rng, n);
        let t = gauge_transform(&conn, &g)?;
        let a = action(&conn);
        neg = neg.max(-a);
        act = act.max((action(&t) - a).abs() / a.max(1.0));
        let f = curvature(&conn);
        let ft = curvature(&t);
        let gi = g.adjoint();
        for k in 0..basis.dim() {
            for l in 0..basis.dim() {
                curv = curv.max(max_abs(&(ft.get(k, l) - &gi * f.get(k, l) * &g)));
            }
        }
    }
    s.check("action_non_negative", neg, TAU_ALG);
    s.check("action_zero_at_zero", action(&MatrixConnection::zero(basis, n)).abs(), TAU_ALG);
    s.check("action_zero_at_canonical", action(&MatrixConnection::canonical(basis)).abs(), TAU_ALG);
    s.check("action_covariance", act, TAU_ALG);
    s.check("curvature_covariance", curv, TAU_ALG);
    Ok(s.finish())
}

pub fn flat_suite(basis: &Arc<MatrixBasis>) -> Result<SuiteReport> {
    let mut s = Suite::new("flat_connections");
    let can = flat_connection_check(&MatrixConnection::canonical(basis));
    s.check("canonical_flat", can.curvature_residual, TAU_ALG);
    // spin embeddings live over sl_2 whatever the module size
    let sl2 = Arc::new(gellmann_basis(2)?);
    let half = flat_connection_check(&spin_connection(&sl2, &[1])?);
    let one = flat_connection_check(&spin_connection(&sl2, &[2])?);
    let half_triv = flat_connection_check(&spin_connection(&sl2, &[1, 0])?);
    s.check("spin_half_flat", half.curvature_residual, TAU_ALG);
    s.check("spin_one_flat", one.curvature_residual, TAU_ALG);
    let separated = !one.same_orbit_invariants(&half_triv, 1e-8);
    s.check("casimir_separates", if separated { 0.0 } else { 1.0 }, 0.5);
    Ok(s.finish())
}

pub fn lattice_suite(n: usize, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut s = Suite::new("lattice");
    let basis = Arc::new(gellmann_basis(n)?);
    let mu = 0.7;
    let sym = vacuum_config(VacuumKind::Symmetric, &[8], &basis, mu)?;
    let broken = vacuum_config(VacuumKind::Broken, &[8], &basis, mu)?;
    s.check("symmetric_vacuum", lattice_action(&sym).abs(), 1e-12);
    s.check("broken_vacuum", lattice_action(&broken).abs(), 1e-12);
    let cfg = LatticeSpec {
        dims: vec![4, 3],
        n,
        mu,
        seed: rng.gen(),
        init: crate::lattice::InitMode::Random,
        noise: 0.3,
        spacing: 1.0,
    }
    .build()?;
    let g = random::unitary(rng, n);
    let t = lattice_gauge_transform(&cfg, &vec![g; cfg.sites()])?;
    let a = lattice_action(&cfg);
    s.check("constant_gauge_invariance", (lattice_action(&t) - a).abs() / a.max(1.0), TAU_NUM);
    let spec = mass_spectrum(&broken);
    s.check("identity_zero_mode", spec.identity_mode_residual, 1e-6);
    s.check("hessian_semidefinite", (-spec.eigenvalues[0]).max(0.0), 1e-6);
    Ok(s.finish())
}

fn random_phase(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
}

pub fn two_point_suite(rng: &mut ChaCha8Rng, samples: usize) -> Result<SuiteReport> {
    let mut s = Suite::new("two_point");
    let (mut routes, mut circle) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let n = rng.gen_range(1..=4);
        let m = random::complex(rng, n, n);
        let phi = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let a = two_point_action(phi, &m);
        routes = routes.max((a - two_point_action_operator(phi, &m)?).abs() / a.max(1.0));
        circle = circle.max(two_point_action(random_phase(rng), &m).abs());
    }
    s.check("action_routes", routes, 1e-10);
    s.check("unit_circle_minimum", circle, 1e-10);
    let n = 3;
    s.check("origin_value", (two_point_action(C64::new(0.0, 0.0), &crate::linalg::identity(n)) - 2.0 * n as f64).abs(), 1e-12);
    Ok(s.finish())
}

pub fn spectral_suite(rng: &mut ChaCha8Rng, samples: usize) -> Result<SuiteReport> {
    let mut s = Suite::new("spectral");
    let ko = KO_TABLE
        .iter()
        .enumerate()
        .filter(|(i, row)| ko_signs(*i + 8) != **row)
        .count();
    s.check("ko_table_periodic", ko as f64, 0.5);

    let n = rng.gen_range(1..=4);
    let m = random::complex(rng, n, n);
    let rep = check_axioms(&two_point_triple(n, &m)?);
    let worst = rep
        .lines
        .iter()
        .filter(|l| l.name != "first_order")
        .map(|l| if l.passed { l.residual } else { f64::INFINITY })
        .fold(0.0, f64::max);
    s.check("two_point_axioms", worst, TAU_ALG);
    if let Some(l) = rep.line("first_order") {
        s.diagnostic("two_point_first_order", l.residual, TAU_ALG);
    }
    let flat = check_axioms(&two_point_triple(n, &CMatrix::zeros(n, n))?);
    s.check("two_point_axioms_m_zero", if flat.passed { 0.0 } else { 1.0 }, 0.5);

    let (mut coincide, mut conj) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let n = rng.gen_range(1..=8);
        let t = two_point_triple(n, &random::complex(rng, n, n))?;
        let omega = two_point_connection(c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let u = AlgebraElement::points(&[random_phase(rng), random_phase(rng)]);
        let g = inner_gauge(&t, &u, &omega)?;
        coincide = coincide.max(g.residual);
        conj = conj.max(g.conjugation_residual);
    }
    s.check("gauge_coincidence", coincide, TAU_ALG);
    s.diagnostic("gauge_by_conjugation", conj, TAU_ALG);

    let sm = check_axioms(&sm_algebra_fixture(None)?);
    for name in ["representation_homomorphism", "representation_star", "zeroth_order"] {
        let l = sm.line(name).ok_or(Error::MissingStructure("axiom line"))?;
        s.check(&format!("sm_{name}"), l.residual, TAU_ALG);
    }
    Ok(s.finish())
}

/// Runs every suite for `n × n` matrices; `samples` random draws per
/// property. The same `(n, seed, samples)` always gives the same report.
pub fn verify_all(n: usize, seed: u64, samples: usize) -> Result<VerifyReport> {
    if !(2..=4).contains(&n) {
        return Err(Error::ConfigInvalid(format!("n must be in 2..=4, got {n}")));
    }
    if samples == 0 {
        return Err(Error::ConfigInvalid("samples must be positive".into()));
    }
    let basis = Arc::new(gellmann_basis(n)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // the form-level suites scale as 2^(n²-1); keep n = 4 affordable
    let form_samples = if n > 3 { samples.min(4) } else { samples };
    let suites = vec![
        calculus_suite(&basis, &mut rng, form_samples)?,
        hodge_suite(&basis, &mut rng, form_samples)?,
        gauge_suite(&basis, &mut rng, samples)?,
        flat_suite(&basis)?,
        lattice_suite(n, &mut rng)?,
        two_point_suite(&mut rng, samples)?,
        spectral_suite(&mut rng, samples)?,
    ];
    Ok(VerifyReport {
        n,
        seed,
        samples,
        passed: suites.iter().all(|s| s.passed),
        suites,
    })
}
