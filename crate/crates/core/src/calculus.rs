//! Derivation-based differential calculus on `M_n`:
//! `Ω•_der(M_n) ≅ M_n ⊗ Λ•(sl_n*)`.
//!
//! Forms are sparse sums `Σ a_K ⊗ θ^K` over strictly increasing multi-indices
//! `K`, stored as bitmasks. The dual basis `θ^k` pairs with the real
//! derivations `∂_k = ad(i E_k)` of the chosen [`MatrixBasis`]. The
//! differential `d'` is the Chevalley-Eilenberg differential, built from its
//! values on generators; [`koszul_evaluate`] recomputes it independently from
//! the Koszul formula.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    commutator, hermitian_residual, max_abs, trace, zeros, CMatrix, MatrixBasis, C64, I, ONE,
    TAU_ALG, ZERO,
};

/// Largest supported `n²-1`; multi-indices are `u32` bitmasks.
const MAX_DIM: usize = 31;

/// A strictly increasing multi-index `k_1 < … < k_p`, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(u32);

impl Monomial {
    pub const EMPTY: Monomial = Monomial(0);

    pub fn from_sorted(indices: &[usize]) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Monomial(indices.iter().fold(0, |m, &k| m | (1 << k)))
    }

    pub fn top(dim: usize) -> Self {
        Monomial(((1u64 << dim) - 1) as u32)
    }

    pub fn degree(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn indices(self) -> Vec<usize> {
        (0..32).filter(|k| self.0 & (1 << k) != 0).collect()
    }

    pub fn contains(self, k: usize) -> bool {
        self.0 & (1 << k) != 0
    }

    /// `θ^K θ^L = sign · θ^{K∪L}`, or `None` when the index sets overlap.
    pub fn product(self, other: Monomial) -> Option<(f64, Monomial)> {
        if self.0 & other.0 != 0 {
            return None;
        }
        let mut swaps = 0u32;
        let mut rest = other.0;
        while rest != 0 {
            let l = rest.trailing_zeros();
            rest &= rest - 1;
            // indices of K strictly above l must move past θ^l
            swaps += (self.0 >> l).count_ones();
        }
        let sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
        Some((sign, Monomial(self.0 | other.0)))
    }
}

/// Sorts `indices` in place and returns the permutation sign, or `None` when
/// an index repeats.
pub fn sort_with_sign(indices: &mut [usize]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..indices.len() {
        let mut j = i;
        while j > 0 && indices[j - 1] > indices[j] {
            indices.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if indices.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

fn same_basis(a: &Arc<MatrixBasis>, b: &Arc<MatrixBasis>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// An element of `M_n ⊗ Λ•(sl_n*)`, possibly of mixed degree.
#[derive(Clone, PartialEq)]
pub struct DerForm {
    basis: Arc<MatrixBasis>,
    terms: BTreeMap<Monomial, CMatrix>,
}

impl fmt::Debug for DerForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (k, a) in &self.terms {
            m.entry(&k.indices(), a);
        }
        m.finish()
    }
}

impl DerForm {
    pub fn zero(basis: &Arc<MatrixBasis>) -> Self {
        Self {
            basis: Arc::clone(basis),
            terms: BTreeMap::new(),
        }
    }

    /// The degree-0 form `a ⊗ 1`.
    pub fn scalar(basis: &Arc<MatrixBasis>, a: CMatrix) -> Self {
        Self::monomial(basis, a, &[])
    }

    pub fn unit(basis: &Arc<MatrixBasis>) -> Self {
        let n = basis.n();
        Self::scalar(basis, CMatrix::identity(n, n))
    }

    /// `a ⊗ θ^{k_1} ⋯ θ^{k_p}` for indices in any order; repeated indices
    /// give zero.
    pub fn monomial(basis: &Arc<MatrixBasis>, a: CMatrix, indices: &[usize]) -> Self {
        assert!(basis.dim() <= MAX_DIM, "sl_n too large for bitmask indices");
        assert_eq!(a.nrows(), basis.n(), "coefficient must be n x n");
        assert!(indices.iter().all(|&k| k < basis.dim()), "index out of range");
        let mut out = Self::zero(basis);
        let mut idx = indices.to_vec();
        if let Some(sign) = sort_with_sign(&mut idx) {
            out.accumulate(Monomial::from_sorted(&idx), &a, C64::new(sign, 0.0));
        }
        out
    }

    pub fn basis(&self) -> &Arc<MatrixBasis> {
        &self.basis
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn terms(&self) -> impl Iterator<Item = (Monomial, &CMatrix)> {
        self.terms.iter().map(|(k, a)| (*k, a))
    }

    pub fn coefficient(&self, indices: &[usize]) -> CMatrix {
        let mut idx = indices.to_vec();
        match sort_with_sign(&mut idx) {
            Some(sign) => self
                .terms
                .get(&Monomial::from_sorted(&idx))
                .map(|a| a * C64::new(sign, 0.0))
                .unwrap_or_else(|| zeros(self.n(), self.n())),
            None => zeros(self.n(), self.n()),
        }
    }

    fn accumulate(&mut self, key: Monomial, a: &CMatrix, s: C64) {
        let n = self.basis.n();
        let entry = self.terms.entry(key).or_insert_with(|| zeros(n, n));
        *entry += a * s;
    }

    fn prune(mut self) -> Self {
        self.terms.retain(|_, a| a.iter().any(|z| *z != ZERO));
        self
    }

    /// `Some(p)` when every nonzero component has degree `p`; the zero form
    /// reports `Some(0)`.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let mut degrees = self.terms.keys().map(|k| k.degree());
        match degrees.next() {
            None => Some(0),
            Some(p) => degrees.all(|q| q == p).then_some(p),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|a| a.iter().all(|z| *z == ZERO))
    }

    /// Component of degree `p`.
    pub fn part(&self, p: usize) -> Self {
        Self {
            basis: Arc::clone(&self.basis),
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.degree() == p)
                .map(|(k, a)| (*k, a.clone()))
                .collect(),
        }
    }

    /// Largest entry modulus over all components.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, a| m.max(max_abs(a)))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            basis: Arc::clone(&self.basis),
            terms: self.terms.iter().map(|(k, a)| (*k, a * s)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if !same_basis(&self.basis, &other.basis) {
            return Err(Error::BasisMismatch);
        }
        let mut out = self.clone();
        for (k, a) in &other.terms {
            out.accumulate(*k, a, ONE);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    /// `a ω` for a matrix `a`.
    pub fn left_mul(&self, a: &CMatrix) -> Self {
        Self {
            basis: Arc::clone(&self.basis),
            terms: self.terms.iter().map(|(k, b)| (*k, a * b)).collect(),
        }
    }

    /// `ω a` for a matrix `a`.
    pub fn right_mul(&self, a: &CMatrix) -> Self {
        Self {
            basis: Arc::clone(&self.basis),
            terms: self.terms.iter().map(|(k, b)| (*k, b * a)).collect(),
        }
    }

    /// Random homogeneous `p`-form: each monomial is present with
    /// probability 0.7 and carries a Gaussian coefficient.
    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R, basis: &Arc<MatrixBasis>, p: usize) -> Self {
        let mut out = Self::zero(basis);
        for mask in 0u32..(1 << basis.dim()) {
            if mask.count_ones() as usize == p && rng.gen_bool(0.7) {
                let a = crate::linalg::random::complex(rng, basis.n(), basis.n());
                out.terms
                    .entry(Monomial(mask))
                    .and_modify(|c| *c += &a)
                    .or_insert(a);
            }
        }
        out
    }

    pub fn to_record(&self) -> DerFormRecord {
        let mut terms: Vec<TermRecord> = self
            .terms
            .iter()
            .map(|(k, a)| TermRecord {
                indices: k.indices(),
                entries: (0..a.nrows())
                    .map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
                    .collect(),
            })
            .collect();
        terms.sort_by(|x, y| {
            x.indices
                .len()
                .cmp(&y.indices.len())
                .then_with(|| x.indices.cmp(&y.indices))
        });
        DerFormRecord {
            basis: "gell-mann".to_string(),
            n: self.n(),
            terms,
        }
    }
}

/// JSON-friendly form of a [`DerForm`]: basis id, index tuples (0-based) and
/// matrix entries as `[re, im]` pairs, row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerFormRecord {
    pub basis: String,
    pub n: usize,
    pub terms: Vec<TermRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub indices: Vec<usize>,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl DerFormRecord {
    pub fn to_form(&self, basis: &Arc<MatrixBasis>) -> Result<DerForm> {
        if self.n != basis.n() {
            return Err(Error::BasisMismatch);
        }
        let mut out = DerForm::zero(basis);
        for t in &self.terms {
            if t.indices.iter().any(|&k| k >= basis.dim()) {
                return Err(Error::InvalidArgument("index out of range".into()));
            }
            if t.entries.len() != self.n || t.entries.iter().any(|r| r.len() != self.n) {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    found: t.entries.len(),
                });
            }
            let a = CMatrix::from_fn(self.n, self.n, |i, j| {
                C64::new(t.entries[i][j][0], t.entries[i][j][1])
            });
            out = out.add(&DerForm::monomial(basis, a, &t.indices))?;
        }
        Ok(out)
    }
}

/// Graded product `(a ⊗ θ^K)(b ⊗ θ^L) = ab ⊗ θ^K θ^L`.
pub fn wedge(omega: &DerForm, eta: &DerForm) -> Result<DerForm> {
    if !same_basis(&omega.basis, &eta.basis) {
        return Err(Error::BasisMismatch);
    }
    let mut out = DerForm::zero(&omega.basis);
    for (k, a) in &omega.terms {
        for (l, b) in &eta.terms {
            if let Some((sign, kl)) = k.product(*l) {
                out.accumulate(kl, &(a * b), C64::new(sign, 0.0));
            }
        }
    }
    Ok(out.prune())
}

/// `d' θ^k = -½ C^k_lm θ^l θ^m = -Σ_{l<m} C^k_lm θ^l θ^m`, as (sign, monomial) pairs.
fn dtheta(basis: &MatrixBasis, k: usize) -> Vec<(f64, usize, usize)> {
    let d = basis.dim();
    let mut out = Vec::new();
    for l in 0..d {
        for m in (l + 1)..d {
            let ck = basis.c(k, l, m);
            if ck != 0.0 {
                out.push((-ck, l, m));
            }
        }
    }
    out
}

/// The differential `d'` from its generator values `d' 1 = 0`,
/// `d' a = Σ_l [i E_l, a] θ^l` and `d' θ^k = -½ C^k_lm θ^l θ^m`, extended by
/// the graded Leibniz rule.
pub fn dprime(omega: &DerForm) -> DerForm {
    let basis = &omega.basis;
    let d = basis.dim();
    let ie: Vec<CMatrix> = basis.elements().iter().map(|e| e * I).collect();
    let dth: Vec<_> = (0..d).map(|k| dtheta(basis, k)).collect();
    let mut out = DerForm::zero(basis);
    for (key, a) in &omega.terms {
        // (d'a) θ^K
        for (l, iel) in ie.iter().enumerate() {
            if let Some((sign, lk)) = Monomial::from_sorted(&[l]).product(*key) {
                out.accumulate(lk, &commutator(iel, a), C64::new(sign, 0.0));
            }
        }
        // a d'(θ^K) = a Σ_i (-1)^i θ^{k_0} ⋯ d'θ^{k_i} ⋯
        let idx = key.indices();
        for (pos, &k) in idx.iter().enumerate() {
            let pos_sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
            for &(c, l, m) in &dth[k] {
                let mut list: Vec<usize> = Vec::with_capacity(idx.len() + 1);
                list.extend_from_slice(&idx[..pos]);
                list.push(l);
                list.push(m);
                list.extend_from_slice(&idx[pos + 1..]);
                if let Some(sign) = sort_with_sign(&mut list) {
                    out.accumulate(
                        Monomial::from_sorted(&list),
                        a,
                        C64::new(pos_sign * sign * c, 0.0),
                    );
                }
            }
        }
    }
    out.prune()
}

/// The canonical 1-form `iθ = i E_k ⊗ θ^k`.
pub fn canonical_theta(basis: &Arc<MatrixBasis>) -> Result<DerForm> {
    if basis.n() < 2 {
        return Err(Error::InvalidArgument("iθ needs n ≥ 2".into()));
    }
    let mut out = DerForm::zero(basis);
    for (k, e) in basis.elements().iter().enumerate() {
        out.accumulate(Monomial::from_sorted(&[k]), e, I);
    }
    Ok(out)
}

/// The inner derivation `ad_γ : a ↦ [γ, a]` for traceless `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    gamma: CMatrix,
}

impl Derivation {
    pub fn inner(gamma: CMatrix) -> Result<Self> {
        if !gamma.is_square() {
            return Err(Error::InvalidArgument("derivation generator must be square".into()));
        }
        if trace(&gamma).norm() >= TAU_ALG {
            return Err(Error::InvalidArgument("derivation generator must be traceless".into()));
        }
        Ok(Self { gamma })
    }

    /// The real basis derivation `∂_k = ad(i E_k)`.
    pub fn partial(basis: &MatrixBasis, k: usize) -> Self {
        Self {
            gamma: basis.element(k) * I,
        }
    }

    pub fn gamma(&self) -> &CMatrix {
        &self.gamma
    }

    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        commutator(&self.gamma, a)
    }

    /// `[ad_γ, ad_η] = ad_[γ, η]`.
    pub fn bracket(&self, other: &Self) -> Self {
        Self {
            gamma: commutator(&self.gamma, &other.gamma),
        }
    }

    /// Coefficients `X^k` in `X = X^k ∂_k`, i.e. the values `θ^k(X)`.
    pub fn components(&self, basis: &MatrixBasis) -> Vec<C64> {
        // γ = i X^k E_k
        basis.decompose(&self.gamma).1.into_iter().map(|z| -I * z).collect()
    }

    /// Real derivations are generated by anti-Hermitian `γ`.
    pub fn is_real(&self) -> bool {
        hermitian_residual(&(&self.gamma * I)) < TAU_ALG
    }
}

/// Evaluates a homogeneous `p`-form on `p` derivations:
/// `(a ⊗ θ^{k_1} ⋯ θ^{k_p})(X_1, …, X_p) = a det[θ^{k_i}(X_j)]`.
pub fn evaluate(omega: &DerForm, ders: &[Derivation]) -> Result<CMatrix> {
    let p = ders.len();
    if let Some((k, _)) = omega.terms.iter().find(|(k, _)| k.degree() != p) {
        return Err(Error::DegreeMismatch {
            expected: p,
            found: k.degree(),
        });
    }
    let comps: Vec<Vec<C64>> = ders.iter().map(|x| x.components(&omega.basis)).collect();
    let n = omega.n();
    let mut out = zeros(n, n);
    for (key, a) in &omega.terms {
        let idx = key.indices();
        let m = DMatrix::from_fn(p, p, |i, j| comps[j][idx[i]]);
        let det = if p == 0 { ONE } else { m.determinant() };
        out += a * det;
    }
    Ok(out)
}

/// `d'ω(X_0, …, X_p)` recomputed from the Koszul formula
/// `Σ_i (-1)^i X_i·ω(…X̂_i…) + Σ_{i<j} (-1)^{i+j} ω([X_i, X_j], …X̂_i…X̂_j…)`.
pub fn koszul_evaluate(omega: &DerForm, ders: &[Derivation]) -> Result<CMatrix> {
    if ders.is_empty() {
        return Err(Error::DegreeMismatch {
            expected: 1,
            found: 0,
        });
    }
    let n = omega.n();
    let mut out = zeros(n, n);
    let sign = |k: usize| if k % 2 == 0 { ONE } else { -ONE };
    for i in 0..ders.len() {
        let rest: Vec<Derivation> = ders
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, x)| x.clone())
            .collect();
        out += ders[i].apply(&evaluate(omega, &rest)?) * sign(i);
    }
    for i in 0..ders.len() {
        for j in (i + 1)..ders.len() {
            let mut args = vec![ders[i].bracket(&ders[j])];
            args.extend(
                ders.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != i && *k != j)
                    .map(|(_, x)| x.clone()),
            );
            out += evaluate(omega, &args)? * sign(i + j);
        }
    }
    Ok(out)
}

/// Hodge star
/// `⋆(a θ^{k_1…k_p}) = 1/(D-p)! √|g| g^{k_1 l_1} ⋯ g^{k_p l_p} ε_{l_1…l_D} a θ^{l_{p+1}…l_D}`.
///
/// Summing the free indices in increasing order turns the contraction into
/// `√|g| Σ_S det(g^{-1}[K, S]) ε(S, S^c) a θ^{S^c}` over `p`-subsets `S`.
pub fn hodge(omega: &DerForm) -> Result<DerForm> {
    let basis = &omega.basis;
    let d = basis.dim();
    let p = omega.homogeneous_degree().ok_or(Error::DegreeMismatch {
        expected: omega.terms.keys().next().map_or(0, |k| k.degree()),
        found: omega.terms.keys().map(|k| k.degree()).max().unwrap_or(0),
    })?;
    let top = Monomial::top(d);
    let subsets: Vec<Monomial> = (0..=top.0)
        .map(Monomial)
        .filter(|s| s.degree() == p)
        .collect();
    let g_inv = &basis.metric().g_inv;
    let root = basis.sqrt_det();
    let mut out = DerForm::zero(basis);
    for (key, a) in &omega.terms {
        let k_idx = key.indices();
        for s in &subsets {
            let s_idx = s.indices();
            let minor = if p == 0 {
                1.0
            } else {
                DMatrix::from_fn(p, p, |i, j| g_inv[(k_idx[i], s_idx[j])]).determinant()
            };
            if minor.abs() < 1e-300 {
                continue;
            }
            let comp = Monomial(top.0 & !s.0);
            let (eps, _) = s.product(comp).expect("disjoint");
            out.accumulate(comp, a, C64::new(root * minor * eps, 0.0));
        }
    }
    Ok(out.prune())
}

/// `∫ ω = (1/n) tr(a)` for the top component written as `a √|g| θ^1 ⋯ θ^D`,
/// zero when there is no top component.
pub fn nc_integrate(omega: &DerForm) -> C64 {
    let basis = &omega.basis;
    let top = Monomial::top(basis.dim());
    match omega.terms.get(&top) {
        Some(c) => trace(c) / (basis.n() as f64 * basis.sqrt_det()),
        None => ZERO,
    }
}

/// Involution `(a ⊗ θ^K)* = a† ⊗ θ^K`.
///
/// The `θ^k` are real on the real derivations `∂_k`, and reversing a product
/// of `p` one-forms contributes `(-1)^{p(p-1)/2}` twice, so only the matrix
/// coefficient is adjointed.
pub fn dinvolution(omega: &DerForm) -> DerForm {
    DerForm {
        basis: Arc::clone(&omega.basis),
        terms: omega.terms.iter().map(|(k, a)| (*k, a.adjoint())).collect(),
    }
}

/// `[ω, η]` graded commutator `ωη - (-1)^{pq} ηω` for homogeneous forms.
pub fn graded_commutator(omega: &DerForm, eta: &DerForm) -> Result<DerForm> {
    let p = omega.homogeneous_degree().ok_or(Error::DegreeUnsupported(usize::MAX))?;
    let q = eta.homogeneous_degree().ok_or(Error::DegreeUnsupported(usize::MAX))?;
    let sign = if (p * q) % 2 == 0 { -ONE } else { ONE };
    wedge(omega, eta)?.add(&wedge(eta, omega)?.scale(sign))
}
