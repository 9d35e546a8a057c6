//! Connections on right modules over `M_n`: the algebra itself, rectangular
//! modules `M_{r,n}`, free modules `A^N` and projective modules `p A^N`.
//!
//! A [`MatrixConnection`] stores the components `A_k` of the 1-form `A`
//! relative to the canonical gauge-invariant connection `∇^{-iθ}`, so that
//! `∇_k m = -m (i E_k) + A_k m` and gauge transformations act by conjugation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::{dinvolution, dprime, hodge, nc_integrate, wedge, DerForm};
use crate::error::{Error, Result};
use crate::linalg::{
    anti_hermitian_residual, c, commutator, hermitian_eigenvalues, max_abs, pack_anti_hermitian,
    trace, unitary_residual, unpack_anti_hermitian, zeros, CMatrix, MatrixBasis, C64, I, ONE,
    TAU_ALG,
};
use crate::optimize::{gradient_descent, DescentParams, DescentStatus, TraceRow};

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixConnection {
    basis: Arc<MatrixBasis>,
    r: usize,
    a: Vec<CMatrix>,
}

impl MatrixConnection {
    /// Components `A_k`, one `r × r` matrix per basis direction.
    pub fn new(basis: &Arc<MatrixBasis>, a: Vec<CMatrix>) -> Result<Self> {
        if a.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: a.len(),
            });
        }
        let r = a.first().map_or(basis.n(), |m| m.nrows());
        if let Some(bad) = a.iter().find(|m| m.nrows() != r || m.ncols() != r) {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: bad.nrows().max(bad.ncols()),
            });
        }
        Ok(Self {
            basis: Arc::clone(basis),
            r,
            a,
        })
    }

    /// `A = 0`, i.e. the canonical connection `∇^{-iθ}` itself.
    pub fn zero(basis: &Arc<MatrixBasis>, r: usize) -> Self {
        Self {
            basis: Arc::clone(basis),
            r,
            a: vec![zeros(r, r); basis.dim()],
        }
    }

    /// `A_k = i E_k` on the module `A` (`r = n`).
    pub fn canonical(basis: &Arc<MatrixBasis>) -> Self {
        Self {
            basis: Arc::clone(basis),
            r: basis.n(),
            a: basis.elements().iter().map(|e| e * I).collect(),
        }
    }

    pub fn random<R: rand::Rng + ?Sized>(
        rng: &mut R,
        basis: &Arc<MatrixBasis>,
        r: usize,
        scale: f64,
    ) -> Self {
        let a = (0..basis.dim())
            .map(|_| crate::linalg::random::anti_hermitian(rng, r) * c(scale, 0.0))
            .collect();
        Self {
            basis: Arc::clone(basis),
            r,
            a,
        }
    }

    pub fn basis(&self) -> &Arc<MatrixBasis> {
        &self.basis
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn components(&self) -> &[CMatrix] {
        &self.a
    }

    pub fn component(&self, k: usize) -> &CMatrix {
        &self.a[k]
    }

    /// Real coordinates of the anti-Hermitian parts, concatenated over `k`.
    pub fn to_coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.a.len() * self.r * self.r);
        for m in &self.a {
            pack_anti_hermitian(m, &mut out);
        }
        out
    }

    pub fn from_coords(basis: &Arc<MatrixBasis>, r: usize, coords: &[f64]) -> Result<Self> {
        let block = r * r;
        if coords.len() != block * basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: block * basis.dim(),
                found: coords.len(),
            });
        }
        let a = coords
            .chunks(block)
            .map(|ch| unpack_anti_hermitian(r, ch))
            .collect();
        Ok(Self {
            basis: Arc::clone(basis),
            r,
            a,
        })
    }

    /// `∇_k m = -m (i E_k) + A_k m` for `m ∈ M_{r,n}`.
    pub fn covariant_derivative(&self, k: usize, m: &CMatrix) -> CMatrix {
        -(m * self.basis.element(k) * I) + &self.a[k] * m
    }

    /// The 1-form `A_k ⊗ θ^k`; only defined on the module `A` itself.
    pub fn to_form(&self) -> Result<DerForm> {
        self.require_square()?;
        let mut out = DerForm::zero(&self.basis);
        for (k, a) in self.a.iter().enumerate() {
            out = out.add(&DerForm::monomial(&self.basis, a.clone(), &[k]))?;
        }
        Ok(out)
    }

    fn require_square(&self) -> Result<()> {
        if self.r == self.basis.n() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.basis.n(),
                found: self.r,
            })
        }
    }

    pub fn max_anti_hermitian_residual(&self) -> f64 {
        self.a.iter().map(anti_hermitian_residual).fold(0.0, f64::max)
    }
}

/// `F_kl = [A_k, A_l] - C^m_kl A_m`, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    dim: usize,
    f: Vec<CMatrix>,
}

impl CurvatureTensor {
    pub fn get(&self, k: usize, l: usize) -> &CMatrix {
        &self.f[k * self.dim + l]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_abs(&self) -> f64 {
        self.f.iter().map(max_abs).fold(0.0, f64::max)
    }

    /// `F^{kl} = g^{ka} g^{lb} F_ab`.
    pub fn raised(&self, basis: &MatrixBasis) -> Vec<CMatrix> {
        let d = self.dim;
        let r = self.f[0].nrows();
        let gi = &basis.metric().g_inv;
        // two passes of one index each
        let mut half = vec![zeros(r, r); d * d];
        for k in 0..d {
            for b in 0..d {
                for a in 0..d {
                    if gi[(k, a)] != 0.0 {
                        half[k * d + b] += self.get(a, b) * c(gi[(k, a)], 0.0);
                    }
                }
            }
        }
        let mut out = vec![zeros(r, r); d * d];
        for k in 0..d {
            for l in 0..d {
                for b in 0..d {
                    if gi[(l, b)] != 0.0 {
                        out[k * d + l] += &half[k * d + b] * c(gi[(l, b)], 0.0);
                    }
                }
            }
        }
        out
    }

    /// `F = ½ F_kl θ^k θ^l = Σ_{k<l} F_kl θ^k θ^l`.
    pub fn to_form(&self, basis: &Arc<MatrixBasis>) -> Result<DerForm> {
        let mut out = DerForm::zero(basis);
        for k in 0..self.dim {
            for l in (k + 1)..self.dim {
                out = out.add(&DerForm::monomial(basis, self.get(k, l).clone(), &[k, l]))?;
            }
        }
        Ok(out)
    }
}

pub fn curvature(conn: &MatrixConnection) -> CurvatureTensor {
    let d = conn.basis.dim();
    let r = conn.r;
    let mut f = vec![zeros(r, r); d * d];
    for k in 0..d {
        for l in (k + 1)..d {
            let mut fkl = commutator(&conn.a[k], &conn.a[l]);
            for m in 0..d {
                let cm = conn.basis.c(m, k, l);
                if cm != 0.0 {
                    fkl -= &conn.a[m] * c(cm, 0.0);
                }
            }
            f[l * d + k] = -fkl.clone();
            f[k * d + l] = fkl;
        }
    }
    CurvatureTensor { dim: d, f }
}

/// `A_k ↦ g⁻¹ A_k g` for a unitary `g`.
pub fn gauge_transform(conn: &MatrixConnection, g: &CMatrix) -> Result<MatrixConnection> {
    if g.nrows() != conn.r || g.ncols() != conn.r {
        return Err(Error::DimensionMismatch {
            expected: conn.r,
            found: g.nrows(),
        });
    }
    let residual = unitary_residual(g);
    if residual >= TAU_ALG {
        return Err(Error::NotUnitary { residual });
    }
    let gi = g.adjoint();
    Ok(MatrixConnection {
        basis: Arc::clone(&conn.basis),
        r: conn.r,
        a: conn.a.iter().map(|a| &gi * a * g).collect(),
    })
}

/// `S[A] = -(1/4n) tr(F_kl F^kl)`, the trace form of `½ ∫ F* ⋆ F`.
pub fn action(conn: &MatrixConnection) -> f64 {
    let f = curvature(conn);
    action_from_curvature(&conn.basis, &f)
}

fn action_from_curvature(basis: &MatrixBasis, f: &CurvatureTensor) -> f64 {
    let up = f.raised(basis);
    let mut sum = C64::new(0.0, 0.0);
    for (lo, hi) in f.f.iter().zip(&up) {
        sum += (lo * hi).trace();
    }
    -sum.re / (4.0 * basis.n() as f64)
}

/// `½ ∫ F* ⋆ F` through the form calculus; `r = n` only.
pub fn action_via_integral(conn: &MatrixConnection) -> Result<f64> {
    conn.require_square()?;
    let f = curvature(conn).to_form(&conn.basis)?;
    let integrand = wedge(&dinvolution(&f), &hodge(&f)?)?;
    Ok(0.5 * nc_integrate(&integrand).re)
}

/// Gradient of [`action`] with respect to the anti-Hermitian components, as
/// matrices `G_m` with `dS = Re tr(G_m† δA_m)`:
/// `G_m = (1/2n) (2 Σ_l [A_l, F^{ml}] - C^m_kl F^{kl})`.
pub fn action_gradient(conn: &MatrixConnection) -> Vec<CMatrix> {
    let f = curvature(conn);
    gradient_from_curvature(conn, &f)
}

fn gradient_from_curvature(conn: &MatrixConnection, f: &CurvatureTensor) -> Vec<CMatrix> {
    let basis = &conn.basis;
    let d = basis.dim();
    let up = f.raised(basis);
    let scale = c(1.0 / (2.0 * basis.n() as f64), 0.0);
    (0..d)
        .map(|m| {
            let mut x = zeros(conn.r, conn.r);
            for l in 0..d {
                x += commutator(&conn.a[l], &up[m * d + l]) * c(2.0, 0.0);
            }
            for k in 0..d {
                for l in 0..d {
                    let cm = basis.c(m, k, l);
                    if cm != 0.0 {
                        x -= &up[k * d + l] * c(cm, 0.0);
                    }
                }
            }
            x * scale
        })
        .collect()
}

/// Gradient in the real coordinates of [`MatrixConnection::to_coords`].
pub fn coordinate_gradient(conn: &MatrixConnection) -> Vec<f64> {
    let mut out = Vec::new();
    for g in action_gradient(conn) {
        pack_anti_hermitian(&g, &mut out);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeReport {
    pub connection: MatrixConnection,
    pub status: DescentStatus,
    pub iterations: usize,
    pub initial_action: f64,
    pub final_action: f64,
    pub grad_norm: f64,
    pub trace: Vec<TraceRow>,
}

/// Gradient descent on `S[A]` over anti-Hermitian connections.
pub fn minimize(conn0: &MatrixConnection, params: &DescentParams) -> MinimizeReport {
    let basis = Arc::clone(&conn0.basis);
    let r = conn0.r;
    let result = gradient_descent(
        conn0.to_coords(),
        |x| {
            let conn = MatrixConnection::from_coords(&basis, r, x).expect("coordinate length");
            let f = curvature(&conn);
            let v = action_from_curvature(&basis, &f);
            let mut g = Vec::with_capacity(x.len());
            for gm in gradient_from_curvature(&conn, &f) {
                pack_anti_hermitian(&gm, &mut g);
            }
            (v, g)
        },
        params,
    );
    MinimizeReport {
        connection: MatrixConnection::from_coords(&basis, r, &result.x).expect("coordinate length"),
        status: result.status,
        iterations: result.iterations,
        initial_action: result.trace[0].action,
        final_action: result.value,
        grad_norm: result.grad_norm,
        trace: result.trace,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub flat: bool,
    pub r: usize,
    /// `max ‖F_kl‖` entrywise, i.e. the residual of `[A_k, A_l] = C^m_kl A_m`.
    pub curvature_residual: f64,
    /// `tr(-A_k A^k)`.
    pub casimir: f64,
    /// Sorted eigenvalues of the Casimir operator `-A_k A^k`.
    pub casimir_spectrum: Vec<f64>,
}

impl FlatnessReport {
    /// Partial equivalence test for flat connections: same size, Casimir
    /// trace and Casimir spectrum.
    pub fn same_orbit_invariants(&self, other: &Self, tol: f64) -> bool {
        self.r == other.r
            && (self.casimir - other.casimir).abs() < tol
            && self
                .casimir_spectrum
                .iter()
                .zip(&other.casimir_spectrum)
                .all(|(a, b)| (a - b).abs() < tol)
    }
}

/// Flat iff `k ↦ A_k` is a Lie algebra representation of `sl_n`.
pub fn flat_connection_check(conn: &MatrixConnection) -> FlatnessReport {
    let residual = curvature(conn).max_abs();
    let d = conn.basis.dim();
    let gi = &conn.basis.metric().g_inv;
    let mut cas = zeros(conn.r, conn.r);
    for k in 0..d {
        for l in 0..d {
            if gi[(k, l)] != 0.0 {
                cas -= &conn.a[k] * &conn.a[l] * c(gi[(k, l)], 0.0);
            }
        }
    }
    // Hermitian for anti-Hermitian A; symmetrize against roundoff
    let herm = (&cas + cas.adjoint()) * c(0.5, 0.0);
    FlatnessReport {
        flat: residual < TAU_ALG,
        r: conn.r,
        curvature_residual: residual,
        casimir: trace(&cas).re,
        casimir_spectrum: hermitian_eigenvalues(&herm),
    }
}

/// Spin-`j` generators `J_1, J_2, J_3` with `[J_1, J_2] = i J_3`, for
/// `two_j = 2j`.
pub fn spin_generators(two_j: usize) -> [CMatrix; 3] {
    let dim = two_j + 1;
    let j = two_j as f64 / 2.0;
    let mut jp = zeros(dim, dim);
    let mut jz = zeros(dim, dim);
    for a in 0..dim {
        let m = j - a as f64;
        jz[(a, a)] = c(m, 0.0);
        if a > 0 {
            // J+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>
            jp[(a - 1, a)] = c((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * c(0.5, 0.0);
    let jy = (&jp - &jm) * c(0.0, -0.5);
    [jx, jy, jz]
}

/// Flat connection `A_k = 2i J_k` on `M_{r,2}` for a direct sum of spins,
/// given as a list of `2j` values; the factor 2 matches `[σ_1, σ_2] = 2iσ_3`.
pub fn spin_connection(basis: &Arc<MatrixBasis>, two_js: &[usize]) -> Result<MatrixConnection> {
    if basis.n() != 2 {
        return Err(Error::InvalidArgument("spin embeddings need sl_2".into()));
    }
    if two_js.is_empty() {
        return Err(Error::InvalidArgument("at least one spin block".into()));
    }
    let gens: Vec<[CMatrix; 3]> = two_js.iter().map(|&t| spin_generators(t)).collect();
    let a = (0..3)
        .map(|k| {
            let blocks: Vec<&CMatrix> = gens.iter().map(|g| &g[k]).collect();
            crate::linalg::block_diag(&blocks) * c(0.0, 2.0)
        })
        .collect();
    MatrixConnection::new(basis, a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub compatible: bool,
    /// `max_k ‖A_k + A_k†‖`.
    pub anti_hermitian_residual: f64,
    /// Largest defect of `⟨∇_k a, b⟩ + ⟨a, ∇_k b⟩ = ∂_k ⟨a, b⟩` over matrix units.
    pub identity_residual: f64,
}

/// Compatibility with `⟨a, b⟩ = a* b`, decided on the components and
/// cross-checked on the defining identity.
pub fn hermitian_compatibility_check(conn: &MatrixConnection) -> CompatibilityReport {
    let n = conn.basis.n();
    let r = conn.r;
    let units: Vec<CMatrix> = (0..r * n)
        .map(|idx| {
            let mut m = zeros(r, n);
            m[(idx / n, idx % n)] = ONE;
            m
        })
        .collect();
    let mut worst: f64 = 0.0;
    for k in 0..conn.basis.dim() {
        let iek = conn.basis.element(k) * I;
        for a in &units {
            let na = conn.covariant_derivative(k, a);
            for b in &units {
                let nb = conn.covariant_derivative(k, b);
                let lhs = na.adjoint() * b + a.adjoint() * &nb;
                let rhs = commutator(&iek, &(a.adjoint() * b));
                worst = worst.max(max_abs(&(lhs - rhs)));
            }
        }
    }
    let res = conn.max_anti_hermitian_residual();
    CompatibilityReport {
        compatible: res < TAU_ALG,
        anti_hermitian_residual: res,
        identity_residual: worst,
    }
}

/// An `N × N` matrix of forms, used for connections on `A^N` and `p A^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormMatrix {
    size: usize,
    entries: Vec<DerForm>,
}

impl FormMatrix {
    pub fn zero(basis: &Arc<MatrixBasis>, size: usize) -> Self {
        Self {
            size,
            entries: vec![DerForm::zero(basis); size * size],
        }
    }

    pub fn from_entries(size: usize, entries: Vec<DerForm>) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                found: entries.len(),
            });
        }
        Ok(Self { size, entries })
    }

    /// Degree-0 matrix from `N × N` blocks given row by row.
    pub fn from_blocks(basis: &Arc<MatrixBasis>, size: usize, blocks: &[CMatrix]) -> Result<Self> {
        Self::from_entries(
            size,
            blocks
                .iter()
                .map(|b| DerForm::scalar(basis, b.clone()))
                .collect(),
        )
    }

    pub fn identity(basis: &Arc<MatrixBasis>, size: usize) -> Self {
        let mut out = Self::zero(basis, size);
        for i in 0..size {
            out.entries[i * size + i] = DerForm::unit(basis);
        }
        out
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> &DerForm {
        &self.entries[i * self.size + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(DerForm::max_abs).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(Self {
            size: self.size,
            entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            size: self.size,
            entries: self.entries.iter().map(|e| e.scale(s)).collect(),
        }
    }

    /// `(PQ)_ij = Σ_k P_ik Q_kj` with the graded product of forms.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let n = self.size;
        let basis = self.entries[0].basis();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = DerForm::zero(basis);
                for k in 0..n {
                    acc = acc.add(&wedge(self.get(i, k), other.get(k, j))?)?;
                }
                entries.push(acc);
            }
        }
        Ok(Self { size: n, entries })
    }

    pub fn dprime(&self) -> Self {
        Self {
            size: self.size,
            entries: self.entries.iter().map(dprime).collect(),
        }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.size != other.size {
            return Err(Error::DimensionMismatch {
                expected: self.size,
                found: other.size,
            });
        }
        Ok(())
    }
}

fn projector_residual(p: &FormMatrix) -> Result<f64> {
    Ok(p.mul(p)?.sub(p)?.max_abs())
}

/// Curvature `p (d'p)(d'p)` of the Grassmann connection `p ∘ d'` on `p A^N`;
/// `p` is given as `N × N` blocks in `M_n`, row by row.
pub fn grassmann_connection(
    basis: &Arc<MatrixBasis>,
    p: &[CMatrix],
    size: usize,
) -> Result<FormMatrix> {
    let pm = FormMatrix::from_blocks(basis, size, p)?;
    let residual = projector_residual(&pm)?;
    if residual >= TAU_ALG {
        return Err(Error::NotProjector { residual });
    }
    let dp = pm.dprime();
    pm.mul(&dp)?.mul(&dp)
}

/// Connection `p (d' + ω)` on `p A^N`, or `d' + ω` on `A^N` when no projector
/// is given.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleConnectionForm {
    omega: FormMatrix,
    projector: Option<FormMatrix>,
}

impl ModuleConnectionForm {
    pub fn free(omega: FormMatrix) -> Self {
        Self {
            omega,
            projector: None,
        }
    }

    /// `ω` is compressed to `p ω p`.
    pub fn projective(omega: FormMatrix, p: FormMatrix) -> Result<Self> {
        let residual = projector_residual(&p)?;
        if residual >= TAU_ALG {
            return Err(Error::NotProjector { residual });
        }
        let omega = p.mul(&omega)?.mul(&p)?;
        Ok(Self {
            omega,
            projector: Some(p),
        })
    }

    pub fn omega(&self) -> &FormMatrix {
        &self.omega
    }

    /// `d'ω + ωω`, compressed to `p (d'p d'p + d'ω + ωω) p` on `p A^N`.
    pub fn curvature(&self) -> Result<FormMatrix> {
        let base = self.omega.dprime().add(&self.omega.mul(&self.omega)?)?;
        match &self.projector {
            None => Ok(base),
            Some(p) => {
                let dp = p.dprime();
                let inner = dp.mul(&dp)?.add(&base)?;
                p.mul(&inner)?.mul(p)
            }
        }
    }

    /// `ω ↦ g⁻¹ ω g + g⁻¹ d'g` on the free module.
    pub fn gauge_transform(&self, g: &FormMatrix, g_inv: &FormMatrix) -> Result<Self> {
        if self.projector.is_some() {
            return Err(Error::InvalidArgument(
                "gauge transformations are only implemented on free modules".into(),
            ));
        }
        let id = FormMatrix::identity(self.omega.entries[0].basis(), self.omega.size);
        if g_inv.mul(g)?.sub(&id)?.max_abs() >= TAU_ALG {
            return Err(Error::InvalidArgument("g_inv is not the inverse of g".into()));
        }
        let omega = g_inv
            .mul(&self.omega)?
            .mul(g)?
            .add(&g_inv.mul(&g.dprime())?)?;
        Ok(Self::free(omega))
    }
}
