//! Finite real even spectral triples.
//!
//! The algebra is a real algebra given as a sum of summands `ℂ`, `ℍ` and
//! `M_k(ℂ)`; its representation is stored as the images of a real basis, so
//! real-linear (not necessarily complex-linear) representations such as
//! `λ ↦ diag(λ, λ̄)` are allowed. The reality operator is antiunitary and is
//! encoded as `J v = U_J v̄`, so that `J X J⁻¹ = U_J X̄ U_J†` and
//! `J² = U_J Ū_J`.

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, commutator, hermitian_residual, identity, kron, max_abs, trace, unitary_residual, zeros,
    CMatrix, C64, I, ONE, TAU_ALG, ZERO,
};
use crate::universal::{
    connection_curvature, duniv, two_point_connection, uproduct, UniversalForm,
};

/// A simple summand of a finite-dimensional real algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Summand {
    Complex,
    /// Quaternions as `[[α, β], [-β̄, ᾱ]]`.
    Quaternion,
    Matrix(usize),
}

impl Summand {
    pub fn real_dim(self) -> usize {
        match self {
            Summand::Complex => 2,
            Summand::Quaternion => 4,
            Summand::Matrix(k) => 2 * k * k,
        }
    }

    pub fn block_size(self) -> usize {
        match self {
            Summand::Complex => 1,
            Summand::Quaternion => 2,
            Summand::Matrix(k) => k,
        }
    }
}

pub fn quaternion(alpha: C64, beta: C64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[alpha, beta, -beta.conj(), alpha.conj()])
}

/// Element of an [`Algebra`], one block per summand.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    blocks: Vec<CMatrix>,
}

impl AlgebraElement {
    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    /// Element of `ℂ^k` from its point values.
    pub fn points(values: &[C64]) -> Self {
        Self {
            blocks: values.iter().map(|z| CMatrix::from_element(1, 1, *z)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            blocks: self.blocks.iter().map(|a| a.adjoint()).collect(),
        }
    }

    /// `max ‖u u* - 1‖` over blocks.
    pub fn unitary_residual(&self) -> f64 {
        self.blocks.iter().map(unitary_residual).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Algebra {
    summands: Vec<Summand>,
}

impl Algebra {
    pub fn new(summands: Vec<Summand>) -> Result<Self> {
        if summands.is_empty() || summands.contains(&Summand::Matrix(0)) {
            return Err(Error::InvalidArgument("empty algebra summand".into()));
        }
        Ok(Self { summands })
    }

    /// `ℂ^k`, functions on `k` points.
    pub fn points(k: usize) -> Result<Self> {
        Self::new(vec![Summand::Complex; k])
    }

    pub fn summands(&self) -> &[Summand] {
        &self.summands
    }

    pub fn real_dim(&self) -> usize {
        self.summands.iter().map(|s| s.real_dim()).sum()
    }

    /// Number of points when every summand is `ℂ`.
    pub fn point_count(&self) -> Option<usize> {
        self.summands
            .iter()
            .all(|s| *s == Summand::Complex)
            .then_some(self.summands.len())
    }

    pub fn one(&self) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .summands
                .iter()
                .map(|s| identity(s.block_size()))
                .collect(),
        }
    }

    /// Real coordinates: `(re, im)` for `ℂ`; `(Re α, Im α, Re β, Im β)` for
    /// `ℍ`; `(re, im)` per entry, row by row, for `M_k`.
    pub fn from_coords(&self, coords: &[f64]) -> Result<AlgebraElement> {
        if coords.len() != self.real_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.real_dim(),
                found: coords.len(),
            });
        }
        let mut blocks = Vec::with_capacity(self.summands.len());
        let mut at = 0;
        for s in &self.summands {
            let x = &coords[at..at + s.real_dim()];
            at += s.real_dim();
            blocks.push(match s {
                Summand::Complex => CMatrix::from_element(1, 1, c(x[0], x[1])),
                Summand::Quaternion => quaternion(c(x[0], x[1]), c(x[2], x[3])),
                Summand::Matrix(k) => {
                    CMatrix::from_fn(*k, *k, |i, j| c(x[2 * (i * k + j)], x[2 * (i * k + j) + 1]))
                }
            });
        }
        Ok(AlgebraElement { blocks })
    }

    pub fn coords(&self, a: &AlgebraElement) -> Result<Vec<f64>> {
        if a.blocks.len() != self.summands.len() {
            return Err(Error::DimensionMismatch {
                expected: self.summands.len(),
                found: a.blocks.len(),
            });
        }
        let mut out = Vec::with_capacity(self.real_dim());
        for (s, b) in self.summands.iter().zip(&a.blocks) {
            if b.nrows() != s.block_size() || b.ncols() != s.block_size() {
                return Err(Error::DimensionMismatch {
                    expected: s.block_size(),
                    found: b.nrows(),
                });
            }
            match s {
                Summand::Complex => out.extend([b[(0, 0)].re, b[(0, 0)].im]),
                Summand::Quaternion => {
                    let q = quaternion(b[(0, 0)], b[(0, 1)]);
                    if max_abs(&(&q - b)) >= TAU_ALG {
                        return Err(Error::InvalidArgument("block is not a quaternion".into()));
                    }
                    out.extend([b[(0, 0)].re, b[(0, 0)].im, b[(0, 1)].re, b[(0, 1)].im]);
                }
                Summand::Matrix(k) => {
                    for i in 0..*k {
                        for j in 0..*k {
                            out.extend([b[(i, j)].re, b[(i, j)].im]);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn basis(&self) -> Vec<AlgebraElement> {
        let d = self.real_dim();
        (0..d)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                self.from_coords(&e).expect("basis length")
            })
            .collect()
    }

    pub fn random<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> AlgebraElement {
        let coords: Vec<f64> = (0..self.real_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        self.from_coords(&coords).expect("coordinate length")
    }
}

/// Signs `(ε, ε', ε'')` of KO-dimension `n mod 8`; `ε''` only for even `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KoSigns {
    pub eps: i8,
    pub eps_prime: i8,
    pub eps_second: Option<i8>,
}

pub const KO_TABLE: [KoSigns; 8] = [
    KoSigns { eps: 1, eps_prime: 1, eps_second: Some(1) },
    KoSigns { eps: 1, eps_prime: -1, eps_second: None },
    KoSigns { eps: -1, eps_prime: 1, eps_second: Some(-1) },
    KoSigns { eps: -1, eps_prime: 1, eps_second: None },
    KoSigns { eps: -1, eps_prime: 1, eps_second: Some(1) },
    KoSigns { eps: -1, eps_prime: -1, eps_second: None },
    KoSigns { eps: 1, eps_prime: 1, eps_second: Some(-1) },
    KoSigns { eps: 1, eps_prime: 1, eps_second: None },
];

pub fn ko_signs(n: usize) -> KoSigns {
    KO_TABLE[n % 8]
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpectralTriple {
    /// `None` when only the images of a real spanning set are known, as for
    /// tensor products.
    algebra: Option<Algebra>,
    generators: Vec<CMatrix>,
    dirac: CMatrix,
    gamma: Option<CMatrix>,
    reality: Option<CMatrix>,
    ko_dim: u8,
}

impl FiniteSpectralTriple {
    /// `generators[i]` is the image of the `i`-th real basis element of
    /// `algebra` (or of a spanning set when `algebra` is `None`).
    pub fn new(
        algebra: Option<Algebra>,
        generators: Vec<CMatrix>,
        dirac: CMatrix,
        gamma: Option<CMatrix>,
        reality: Option<CMatrix>,
        ko_dim: u8,
    ) -> Result<Self> {
        let h = dirac.nrows();
        if h == 0 || !dirac.is_square() {
            return Err(Error::InvalidArgument("Dirac operator must be square and non-empty".into()));
        }
        if ko_dim >= 8 {
            return Err(Error::InvalidArgument(format!("ko_dim {ko_dim} not in 0..8")));
        }
        if let Some(alg) = &algebra {
            if alg.real_dim() != generators.len() {
                return Err(Error::DimensionMismatch {
                    expected: alg.real_dim(),
                    found: generators.len(),
                });
            }
        }
        let ops = generators.iter().chain(&gamma).chain(&reality);
        for m in ops {
            if m.nrows() != h || m.ncols() != h {
                return Err(Error::DimensionMismatch {
                    expected: h,
                    found: m.nrows(),
                });
            }
        }
        Ok(Self {
            algebra,
            generators,
            dirac,
            gamma,
            reality,
            ko_dim,
        })
    }

    pub fn algebra(&self) -> Option<&Algebra> {
        self.algebra.as_ref()
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    pub fn hilbert_dim(&self) -> usize {
        self.dirac.nrows()
    }

    pub fn dirac(&self) -> &CMatrix {
        &self.dirac
    }

    pub fn gamma(&self) -> Option<&CMatrix> {
        self.gamma.as_ref()
    }

    /// The unitary part `U_J` of `J = U_J ∘ conj`.
    pub fn reality(&self) -> Option<&CMatrix> {
        self.reality.as_ref()
    }

    pub fn ko_dim(&self) -> u8 {
        self.ko_dim
    }

    pub fn signs(&self) -> KoSigns {
        ko_signs(self.ko_dim as usize)
    }

    pub fn with_dirac(&self, dirac: CMatrix) -> Result<Self> {
        Self::new(self.algebra.clone(), self.generators.clone(), dirac, self.gamma.clone(), self.reality.clone(), self.ko_dim)
    }

    pub fn with_gamma(&self, gamma: Option<CMatrix>) -> Result<Self> {
        Self::new(self.algebra.clone(), self.generators.clone(), self.dirac.clone(), gamma, self.reality.clone(), self.ko_dim)
    }

    pub fn with_reality(&self, reality: Option<CMatrix>) -> Result<Self> {
        Self::new(self.algebra.clone(), self.generators.clone(), self.dirac.clone(), self.gamma.clone(), reality, self.ko_dim)
    }

    pub fn with_ko_dim(&self, ko_dim: u8) -> Result<Self> {
        Self::new(self.algebra.clone(), self.generators.clone(), self.dirac.clone(), self.gamma.clone(), self.reality.clone(), ko_dim)
    }

    pub fn with_generators(&self, generators: Vec<CMatrix>) -> Result<Self> {
        Self::new(self.algebra.clone(), generators, self.dirac.clone(), self.gamma.clone(), self.reality.clone(), self.ko_dim)
    }

    /// `π(a)`, extended real-linearly from the basis images.
    pub fn represent(&self, a: &AlgebraElement) -> Result<CMatrix> {
        let alg = self.algebra.as_ref().ok_or(Error::MissingStructure("algebra presentation"))?;
        let coords = alg.coords(a)?;
        let h = self.hilbert_dim();
        let mut out = zeros(h, h);
        for (x, g) in coords.iter().zip(&self.generators) {
            if *x != 0.0 {
                out += g * c(*x, 0.0);
            }
        }
        Ok(out)
    }

    /// `J X J⁻¹ = U_J X̄ U_J†`.
    pub fn j_conjugate(&self, x: &CMatrix) -> Result<CMatrix> {
        let u = self.reality.as_ref().ok_or(Error::MissingStructure("real structure J"))?;
        Ok(u * x.map(|z| z.conj()) * u.adjoint())
    }

    pub fn to_record(&self) -> TripleRecord {
        TripleRecord {
            algebra: self.algebra.as_ref().map(|a| a.summands.clone()),
            generators: self.generators.iter().map(to_rows).collect(),
            dirac: to_rows(&self.dirac),
            gamma: self.gamma.as_ref().map(to_rows),
            reality: self.reality.as_ref().map(to_rows),
            ko_dim: self.ko_dim,
        }
    }
}

type Rows = Vec<Vec<[f64; 2]>>;

fn to_rows(m: &CMatrix) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn from_rows(rows: &Rows) -> Result<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::ConfigInvalid("ragged matrix".into()));
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::ConfigInvalid("non-finite matrix entry".into()));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

/// JSON form of a triple; matrices are rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleRecord {
    pub algebra: Option<Vec<Summand>>,
    pub generators: Vec<Rows>,
    pub dirac: Rows,
    pub gamma: Option<Rows>,
    pub reality: Option<Rows>,
    pub ko_dim: u8,
}

impl TripleRecord {
    pub fn to_triple(&self) -> Result<FiniteSpectralTriple> {
        let algebra = self.algebra.clone().map(Algebra::new).transpose()?;
        let generators = self.generators.iter().map(from_rows).collect::<Result<_>>()?;
        FiniteSpectralTriple::new(
            algebra,
            generators,
            from_rows(&self.dirac)?,
            self.gamma.as_ref().map(from_rows).transpose()?,
            self.reality.as_ref().map(from_rows).transpose()?,
            self.ko_dim,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomLine {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
}

/// Signs actually realised by `J`, when they are `±1` at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasuredSigns {
    pub eps: Option<i8>,
    pub eps_prime: Option<i8>,
    pub eps_second: Option<i8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub ko_dim: u8,
    pub expected: KoSigns,
    pub measured: Option<MeasuredSigns>,
    pub lines: Vec<AxiomLine>,
    pub passed: bool,
}

impl AxiomReport {
    pub fn line(&self, name: &str) -> Option<&AxiomLine> {
        self.lines.iter().find(|l| l.name == name)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.lines.iter().filter(|l| !l.passed).map(|l| l.name.as_str()).collect()
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = self.expected;
        let second = e.eps_second.map_or("-".to_string(), |s| s.to_string());
        writeln!(
            f,
            "KO-dimension {} (eps, eps', eps'') = ({}, {}, {})",
            self.ko_dim, e.eps, e.eps_prime, second
        )?;
        for l in &self.lines {
            let tag = if l.passed { "PASS" } else { "FAIL" };
            writeln!(f, "  {tag}  {:<30} {:.3e}", l.name, l.residual)?;
        }
        write!(f, "overall: {}", if self.passed { "PASS" } else { "FAIL" })
    }
}

fn sign_residual(x: &CMatrix, y: &CMatrix, s: i8) -> f64 {
    max_abs(&(x - y * c(s as f64, 0.0)))
}

fn measured_sign(x: &CMatrix, y: &CMatrix) -> Option<i8> {
    [1i8, -1].into_iter().find(|s| sign_residual(x, y, *s) < TAU_ALG)
}

/// Runs every algebraic axiom of a finite real even spectral triple. The
/// analytic axioms (compact resolvent, summability) hold automatically in
/// finite dimension and are recorded as such.
pub fn check_axioms(t: &FiniteSpectralTriple) -> AxiomReport {
    let mut lines = Vec::new();
    let mut push = |name: &str, residual: f64| {
        lines.push(AxiomLine {
            name: name.to_string(),
            passed: residual < TAU_ALG,
            residual,
        });
    };
    let h = t.hilbert_dim();
    let d = &t.dirac;
    let gens = &t.generators;
    let expected = t.signs();

    push("finite_analytic", 0.0);
    push("dirac_self_adjoint", hermitian_residual(d));

    if let Some(alg) = &t.algebra {
        let basis = alg.basis();
        let mut hom = max_abs(&(t.represent(&alg.one()).expect("own algebra") - identity(h)));
        let mut star: f64 = 0.0;
        for (i, bi) in basis.iter().enumerate() {
            for (j, bj) in basis.iter().enumerate() {
                let prod = t.represent(&bi.mul(bj)).expect("own algebra");
                hom = hom.max(max_abs(&(prod - &gens[i] * &gens[j])));
            }
            let adj = t.represent(&bi.adjoint()).expect("own algebra");
            star = star.max(max_abs(&(adj - gens[i].adjoint())));
        }
        push("representation_homomorphism", hom);
        push("representation_star", star);
    }

    if let Some(g) = &t.gamma {
        push("chirality_parity", if t.ko_dim % 2 == 0 { 0.0 } else { 1.0 });
        push("chirality_self_adjoint", hermitian_residual(g));
        push("chirality_involution", max_abs(&(g * g - identity(h))));
        push("chirality_anticommutes_dirac", max_abs(&(g * d + d * g)));
        let comm = gens.iter().map(|a| max_abs(&commutator(g, a))).fold(0.0, f64::max);
        push("chirality_commutes_algebra", comm);
    }

    let mut measured = None;
    if let Some(u) = &t.reality {
        let ubar = u.map(|z| z.conj());
        let jj = u * &ubar;
        let jd = t.j_conjugate(d).expect("reality present");
        push("reality_antiunitary", unitary_residual(u));
        push("reality_square", sign_residual(&jj, &identity(h), expected.eps));
        push("reality_dirac", sign_residual(&jd, d, expected.eps_prime));
        let mut second = None;
        if let Some(g) = &t.gamma {
            let jg = t.j_conjugate(g).expect("reality present");
            second = measured_sign(&jg, g);
            if let Some(s) = expected.eps_second {
                push("reality_chirality", sign_residual(&jg, g, s));
            }
        }
        measured = Some(MeasuredSigns {
            eps: measured_sign(&jj, &identity(h)),
            eps_prime: measured_sign(&jd, d),
            eps_second: second,
        });
        let right: Vec<CMatrix> = gens.iter().map(|b| t.j_conjugate(b).expect("reality present")).collect();
        let mut zeroth: f64 = 0.0;
        let mut first: f64 = 0.0;
        for a in gens {
            let da = commutator(d, a);
            for jb in &right {
                zeroth = zeroth.max(max_abs(&commutator(jb, a)));
                first = first.max(max_abs(&commutator(&da, jb)));
            }
        }
        push("zeroth_order", zeroth);
        push("first_order", first);
    }

    let passed = lines.iter().all(|l| l.passed);
    AxiomReport {
        ko_dim: t.ko_dim,
        expected,
        measured,
        lines,
        passed,
    }
}

/// Projections `π(e_x)` onto the points of a commutative point algebra.
fn point_projections(t: &FiniteSpectralTriple) -> Result<Vec<CMatrix>> {
    let alg = t.algebra.as_ref().ok_or(Error::MissingStructure("algebra presentation"))?;
    let k = alg.point_count().ok_or_else(|| {
        Error::InvalidArgument("universal forms need an algebra of functions on points".into())
    })?;
    // basis of each ℂ summand is (1, i)
    Ok((0..k).map(|x| t.generators[2 * x].clone()).collect())
}

/// `π_D(ω) = Σ ω(x_0, …, x_p) π(e_{x_0}) [D, π(e_{x_1})] ⋯ [D, π(e_{x_p})]` for a
/// universal form over the points of a commutative algebra.
pub fn represent_form(t: &FiniteSpectralTriple, omega: &UniversalForm) -> Result<CMatrix> {
    let p = omega.degree();
    if p > 2 {
        return Err(Error::DegreeUnsupported(p));
    }
    let proj = point_projections(t)?;
    let k = omega.base().size();
    if k != proj.len() {
        return Err(Error::DimensionMismatch {
            expected: proj.len(),
            found: k,
        });
    }
    let dp: Vec<CMatrix> = proj.iter().map(|q| commutator(&t.dirac, q)).collect();
    let h = t.hilbert_dim();
    let mut out = zeros(h, h);
    let mut idx = vec![0usize; p + 1];
    for flat in 0..k.pow(p as u32 + 1) {
        let mut rest = flat;
        for slot in idx.iter_mut().rev() {
            *slot = rest % k;
            rest /= k;
        }
        let v = omega.at(&idx);
        if v == ZERO {
            continue;
        }
        let mut term = proj[idx[0]].clone();
        for &x in &idx[1..] {
            term *= &dp[x];
        }
        out += term * v;
    }
    Ok(out)
}

/// `Σ_i π(a_i) [D, π(b_i^1)] ⋯ [D, π(b_i^p)]` for explicit generator lists.
pub fn represent_terms(
    t: &FiniteSpectralTriple,
    terms: &[(AlgebraElement, Vec<AlgebraElement>)],
) -> Result<CMatrix> {
    let h = t.hilbert_dim();
    let mut out = zeros(h, h);
    for (a, bs) in terms {
        if bs.len() > 2 {
            return Err(Error::DegreeUnsupported(bs.len()));
        }
        let mut term = t.represent(a)?;
        for b in bs {
            term *= commutator(&t.dirac, &t.represent(b)?);
        }
        out += term;
    }
    Ok(out)
}

/// `D_ω = D + A + ε' J A J⁻¹` for `A = π_D(ω)`.
pub fn fluctuated_dirac(t: &FiniteSpectralTriple, a: &CMatrix) -> Result<CMatrix> {
    let ja = t.j_conjugate(a)?;
    Ok(&t.dirac + a + ja * c(t.signs().eps_prime as f64, 0.0))
}

pub fn fluctuate(t: &FiniteSpectralTriple, a: &CMatrix) -> Result<FiniteSpectralTriple> {
    t.with_dirac(fluctuated_dirac(t, a)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeCoincidence {
    /// `D + π(u)Aπ(u)* + π(u)[D, π(u)*] + ε'J(…)J⁻¹`.
    pub transformed: CMatrix,
    /// `D_{ω^u}` with `ω^u = u ω u* + u d_U u*` built in the universal calculus.
    pub from_transformed_form: CMatrix,
    pub residual: f64,
    pub matches: bool,
    /// `‖U D_ω U* - transformed‖` with `U = π(u) J π(u) J⁻¹`; this identity
    /// relies on the first-order condition.
    pub conjugation_residual: f64,
    /// `‖U J U⁻¹ - J‖`.
    pub j_invariance_residual: f64,
    /// `‖U γ U* - γ‖`, zero when there is no chirality.
    pub gamma_invariance_residual: f64,
}

/// Compares the two implementations of a gauge transformation by a unitary
/// `u` of a commutative point algebra.
pub fn inner_gauge(
    t: &FiniteSpectralTriple,
    u: &AlgebraElement,
    omega: &UniversalForm,
) -> Result<GaugeCoincidence> {
    let residual = u.unitary_residual();
    if residual >= TAU_ALG {
        return Err(Error::NotUnitary { residual });
    }
    let uj = t.reality.as_ref().ok_or(Error::MissingStructure("real structure J"))?;
    let eps_p = c(t.signs().eps_prime as f64, 0.0);
    let d = &t.dirac;

    let a = represent_form(t, omega)?;
    let pu = t.represent(u)?;
    let pus = pu.adjoint();
    let inner = &pu * &a * &pus + &pu * commutator(d, &pus);
    let transformed = d + &inner + t.j_conjugate(&inner)? * eps_p;

    let base = omega.base();
    let vals: Vec<C64> = u.blocks().iter().map(|b| b[(0, 0)]).collect();
    let uf = UniversalForm::function(base, &vals)?;
    let usf = UniversalForm::function(base, &vals.iter().map(|z| z.conj()).collect::<Vec<_>>())?;
    let omega_u = uproduct(&uproduct(&uf, omega)?, &usf)?.add(&uproduct(&uf, &duniv(&usf)?)?)?;
    let from_transformed_form = fluctuated_dirac(t, &represent_form(t, &omega_u)?)?;

    let big_u = &pu * t.j_conjugate(&pu)?;
    let d_omega = fluctuated_dirac(t, &a)?;
    let conjugated = &big_u * d_omega * big_u.adjoint();
    let j_inv = max_abs(&(&big_u * uj * big_u.transpose() - uj));
    let g_inv = t
        .gamma
        .as_ref()
        .map_or(0.0, |g| max_abs(&(&big_u * g * big_u.adjoint() - g)));

    let residual = max_abs(&(&transformed - &from_transformed_form));
    Ok(GaugeCoincidence {
        conjugation_residual: max_abs(&(conjugated - &transformed)),
        transformed,
        from_transformed_form,
        residual,
        matches: residual < TAU_ALG,
        j_invariance_residual: j_inv,
        gamma_invariance_residual: g_inv,
    })
}

/// Even real product: `D = D₁ ⊗ 1 + γ₁ ⊗ D₂`, `γ = γ₁ ⊗ γ₂`, `J = J₁ ⊗ J₂`,
/// KO-dimensions added mod 8.
pub fn product_triple(t1: &FiniteSpectralTriple, t2: &FiniteSpectralTriple) -> Result<FiniteSpectralTriple> {
    let g1 = t1.gamma.as_ref().ok_or(Error::MissingStructure("chirality"))?;
    let g2 = t2.gamma.as_ref().ok_or(Error::MissingStructure("chirality"))?;
    let u1 = t1.reality.as_ref().ok_or(Error::MissingStructure("real structure J"))?;
    let u2 = t2.reality.as_ref().ok_or(Error::MissingStructure("real structure J"))?;
    let id1 = identity(t1.hilbert_dim());
    let id2 = identity(t2.hilbert_dim());
    let dirac = kron(&t1.dirac, &id2) + kron(g1, &t2.dirac);
    let mut generators = Vec::with_capacity(t1.generators.len() * t2.generators.len());
    for a in &t1.generators {
        for b in &t2.generators {
            generators.push(kron(a, b));
        }
    }
    let _ = id1;
    FiniteSpectralTriple::new(
        None,
        generators,
        dirac,
        Some(kron(g1, g2)),
        Some(kron(u1, u2)),
        (t1.ko_dim + t2.ko_dim) % 8,
    )
}

/// `(ℂ, ℂ, 0, γ = 1, J = conj)`, the unit for [`product_triple`].
pub fn trivial_triple() -> FiniteSpectralTriple {
    let one = identity(1);
    FiniteSpectralTriple::new(
        Some(Algebra::points(1).expect("one point")),
        vec![one.clone(), one.clone() * I],
        zeros(1, 1),
        Some(one.clone()),
        Some(one),
        0,
    )
    .expect("consistent shapes")
}

fn two_point_parts(n: usize, m: &CMatrix) -> Result<(Vec<CMatrix>, CMatrix, CMatrix)> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.nrows().max(m.ncols()),
        });
    }
    let z = zeros(n, n);
    let id = identity(n);
    let p0 = crate::linalg::block_diag(&[&id, &z]);
    let p1 = crate::linalg::block_diag(&[&z, &id]);
    let generators = vec![p0.clone(), &p0 * I, p1.clone(), &p1 * I];
    let mut dirac = zeros(2 * n, 2 * n);
    dirac.view_mut((0, n), (n, n)).copy_from(&m.adjoint());
    dirac.view_mut((n, 0), (n, n)).copy_from(m);
    let gamma = crate::linalg::block_diag(&[&id, &(-id.clone())]);
    Ok((generators, dirac, gamma))
}

/// The two-point space: `A = ℂ ⊕ ℂ` on `ℂ^N ⊕ ℂ^N`, `D = [[0, M*], [M, 0]]`,
/// `γ = diag(1, -1)`, KO-dimension 0.
///
/// The real structure is `J = diag(V Vᵀ, W Wᵀ) ∘ conj` for the singular value
/// decomposition `M = W Σ V*`; it squares to 1, commutes with `D` and `γ`,
/// and satisfies the zeroth-order condition. The first-order condition holds
/// only for `M = 0`.
pub fn two_point_triple(n: usize, m: &CMatrix) -> Result<FiniteSpectralTriple> {
    let (generators, dirac, gamma) = two_point_parts(n, m)?;
    let svd = m.clone().svd(true, true);
    let w = svd.u.expect("requested");
    let v = svd.v_t.expect("requested").adjoint();
    let uj = crate::linalg::block_diag(&[&(&v * v.transpose()), &(&w * w.transpose())]);
    FiniteSpectralTriple::new(
        Some(Algebra::points(2)?),
        generators,
        dirac,
        Some(gamma),
        Some(uj),
        0,
    )
}

/// The two-point space with `J` swapping the two copies of `ℂ^N` and
/// conjugating. `J` anticommutes with `γ` and commutes with `D` only for
/// symmetric `M`, which puts it in KO-dimension 6.
pub fn two_point_swap_triple(n: usize, m: &CMatrix) -> Result<FiniteSpectralTriple> {
    let (generators, dirac, gamma) = two_point_parts(n, m)?;
    let mut uj = zeros(2 * n, 2 * n);
    uj.view_mut((0, n), (n, n)).copy_from(&identity(n));
    uj.view_mut((n, 0), (n, n)).copy_from(&identity(n));
    FiniteSpectralTriple::new(
        Some(Algebra::points(2)?),
        generators,
        dirac,
        Some(gamma),
        Some(uj),
        6,
    )
}

/// `S(φ) = 2 (|φ|² - 1)² tr((M* M)²)`.
pub fn two_point_action(phi: C64, m: &CMatrix) -> f64 {
    let mm = m.adjoint() * m;
    let t = trace(&(&mm * &mm)).re;
    2.0 * (phi.norm_sqr() - 1.0).powi(2) * t
}

/// `tr(π_D(Ω)²)` for the curvature `Ω` of the Hermitian connection
/// `ω = (φ - 1, φ̄ - 1)`, computed through the universal calculus.
pub fn two_point_action_operator(phi: C64, m: &CMatrix) -> Result<f64> {
    let t = two_point_triple(m.nrows(), m)?;
    let omega = two_point_connection(phi - ONE);
    let curv = connection_curvature(&omega)?;
    let rep = represent_form(&t, &curv)?;
    Ok(trace(&(&rep * &rep)).re)
}

/// `⟨ψ, D ψ⟩` with the Dirac operator of `t` (pass a fluctuated triple for
/// `D_ω`).
pub fn fermionic_pairing(t: &FiniteSpectralTriple, psi: &[C64]) -> Result<C64> {
    if psi.len() != t.hilbert_dim() {
        return Err(Error::DimensionMismatch {
            expected: t.hilbert_dim(),
            found: psi.len(),
        });
    }
    let v = DVector::from_column_slice(psi);
    Ok(v.dotc(&(&t.dirac * &v)))
}

/// `ℂ ⊕ ℍ ⊕ M_3(ℂ)`.
pub fn sm_algebra() -> Algebra {
    Algebra::new(vec![Summand::Complex, Summand::Quaternion, Summand::Matrix(3)])
        .expect("non-empty summands")
}

pub fn sm_element(lambda: C64, q: &CMatrix, m: &CMatrix) -> AlgebraElement {
    AlgebraElement {
        blocks: vec![CMatrix::from_element(1, 1, lambda), q.clone(), m.clone()],
    }
}

/// Left multiplication by `diag(λ, λ̄, q) ⊕ diag(λ, m)` on `M_4 ⊕ M_4`, with
/// each `M_4` flattened column by column.
pub fn sm_operator(a: &AlgebraElement) -> CMatrix {
    let lambda = a.blocks[0][(0, 0)];
    let mut left = zeros(4, 4);
    left[(0, 0)] = lambda;
    left[(1, 1)] = lambda.conj();
    left.view_mut((2, 2), (2, 2)).copy_from(&a.blocks[1]);
    let mut right = zeros(4, 4);
    right[(0, 0)] = lambda;
    right.view_mut((1, 1), (3, 3)).copy_from(&a.blocks[2]);
    let id4 = identity(4);
    crate::linalg::block_diag(&[&kron(&id4, &left), &kron(&id4, &right)])
}

/// `J_F(Ψ₁ ⊕ Ψ₂) = Ψ₂* ⊕ Ψ₁*`, encoded as `U_J = [[0, T], [T, 0]]` with `T`
/// the transpose permutation of flattened `4 × 4` matrices.
pub fn sm_reality() -> CMatrix {
    let mut t = zeros(16, 16);
    for i in 0..4 {
        for j in 0..4 {
            t[(i + 4 * j, j + 4 * i)] = ONE;
        }
    }
    let mut u = zeros(32, 32);
    u.view_mut((0, 16), (16, 16)).copy_from(&t);
    u.view_mut((16, 0), (16, 16)).copy_from(&t);
    u
}

/// The finite algebra of the Standard Model on `ℂ³²` with the swap-adjoint
/// `J_F`. `D_F` is opaque input (zero when absent); no chirality is attached.
pub fn sm_algebra_fixture(d_f: Option<CMatrix>) -> Result<FiniteSpectralTriple> {
    let d_f = d_f.unwrap_or_else(|| zeros(32, 32));
    if d_f.nrows() != 32 || d_f.ncols() != 32 {
        return Err(Error::ConfigInvalid(format!(
            "D_F must be 32 x 32, got {} x {}",
            d_f.nrows(),
            d_f.ncols()
        )));
    }
    if d_f.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::ConfigInvalid("D_F has non-finite entries".into()));
    }
    let alg = sm_algebra();
    let generators = alg.basis().iter().map(sm_operator).collect();
    FiniteSpectralTriple::new(Some(alg), generators, d_f, None, Some(sm_reality()), 6)
}
