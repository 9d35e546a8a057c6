//! Dense complex matrices, Hermitian traceless bases of `sl_n`, their
//! structure constants and the trace metric `g_kl = (1/n) tr(E_k E_l)`.
//!
//! Conventions: `[E_k, E_l] = -i C^m_kl E_m` with real `C`, so that the real
//! derivations `∂_k = ad(i E_k)` satisfy `[∂_k, ∂_l] = C^m_kl ∂_m`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Absolute tolerance for exact algebraic identities (n ≤ 4).
pub const TAU_ALG: f64 = 1e-10;
/// Tolerance for quantities obtained along two numerically different routes.
pub const TAU_NUM: f64 = 1e-8;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

pub fn trace(a: &CMatrix) -> C64 {
    a.trace()
}

/// Largest entry modulus; the residual norm used by every identity check.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `tr(X† X)`.
pub fn norm_sq(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// `Re tr(X† Y)`, the Euclidean inner product on real matrix coordinates.
pub fn real_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn hermitian_residual(a: &CMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}

pub fn anti_hermitian_residual(a: &CMatrix) -> f64 {
    max_abs(&(a + a.adjoint()))
}

pub fn unitary_residual(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let id = identity(u.nrows());
    max_abs(&(u.adjoint() * u - &id)).max(max_abs(&(u * u.adjoint() - id)))
}

pub fn is_hermitian(a: &CMatrix, tol: f64) -> bool {
    a.is_square() && hermitian_residual(a) < tol
}

pub fn is_anti_hermitian(a: &CMatrix, tol: f64) -> bool {
    a.is_square() && anti_hermitian_residual(a) < tol
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    unitary_residual(u) < tol
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Block-diagonal matrix from square or rectangular blocks.
pub fn block_diag(blocks: &[&CMatrix]) -> CMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r, c0), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &RMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `exp(i H)` for Hermitian `H`, computed through its spectral decomposition.
pub fn expi_hermitian(h: &CMatrix) -> CMatrix {
    let eig = SymmetricEigen::new(h.clone());
    let phases = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, l)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Real structure constants, stored densely with `get(m, k, l) = C^m_kl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureConstants {
    dim: usize,
    data: Vec<f64>,
}

impl StructureConstants {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, m: usize, k: usize, l: usize) -> f64 {
        self.data[(m * self.dim + k) * self.dim + l]
    }

    /// Maximal Jacobi-identity violation
    /// `C^p_kl C^q_pm + C^p_lm C^q_pk + C^p_mk C^q_pl`.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0_f64;
        for k in 0..d {
            for l in 0..d {
                for m in 0..d {
                    for q in 0..d {
                        let s: f64 = (0..d)
                            .map(|p| {
                                self.get(p, k, l) * self.get(q, p, m)
                                    + self.get(p, l, m) * self.get(q, p, k)
                                    + self.get(p, m, k) * self.get(q, p, l)
                            })
                            .sum();
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

/// The trace metric together with its inverse and determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub g: RMatrix,
    pub g_inv: RMatrix,
    pub g_det: f64,
}

/// A Hermitian traceless basis `{E_k}` of `sl_n` with its structure constants
/// and metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixBasis {
    n: usize,
    elements: Vec<CMatrix>,
    structure: StructureConstants,
    metric: Metric,
}

impl MatrixBasis {
    /// Wraps an arbitrary Hermitian traceless basis of `sl_n`.
    pub fn from_elements(n: usize, elements: Vec<CMatrix>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if elements.len() != n * n - 1 {
            return Err(Error::InvalidArgument(format!(
                "sl_{n} needs {} basis elements, got {}",
                n * n - 1,
                elements.len()
            )));
        }
        for (k, e) in elements.iter().enumerate() {
            if e.nrows() != n || e.ncols() != n {
                return Err(Error::InvalidArgument(format!("E_{k} is not {n}x{n}")));
            }
            if hermitian_residual(e) >= TAU_ALG || trace(e).norm() >= TAU_ALG {
                return Err(Error::InvalidArgument(format!(
                    "E_{k} is not Hermitian and traceless"
                )));
            }
        }
        let metric = metric(n, &elements)?;
        let structure = project_structure_constants(n, &elements, &metric.g_inv)?;
        Ok(Self {
            n,
            elements,
            structure,
            metric,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `n² - 1`, the number of algebraic directions.
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn element(&self, k: usize) -> &CMatrix {
        &self.elements[k]
    }

    pub fn structure(&self) -> &StructureConstants {
        &self.structure
    }

    pub fn c(&self, m: usize, k: usize, l: usize) -> f64 {
        self.structure.get(m, k, l)
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn g(&self, k: usize, l: usize) -> f64 {
        self.metric.g[(k, l)]
    }

    pub fn g_inv(&self, k: usize, l: usize) -> f64 {
        self.metric.g_inv[(k, l)]
    }

    pub fn sqrt_det(&self) -> f64 {
        self.metric.g_det.abs().sqrt()
    }

    /// Components of a matrix along `{1, E_k}`: `a = a0·1 + a^k E_k`.
    pub fn decompose(&self, a: &CMatrix) -> (C64, Vec<C64>) {
        let n = self.n as f64;
        let a0 = trace(a) / n;
        // (1/n) tr(E_j a) = g_jk a^k
        let proj: Vec<C64> = self
            .elements
            .iter()
            .map(|e| (e * a).trace() / n)
            .collect();
        let coeffs = (0..self.dim())
            .map(|k| {
                (0..self.dim())
                    .map(|j| proj[j] * self.metric.g_inv[(k, j)])
                    .sum()
            })
            .collect();
        (a0, coeffs)
    }

    /// Maximal residual of `[E_k, E_l] + i C^m_kl E_m` over all pairs.
    pub fn commutator_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for k in 0..d {
            for l in 0..d {
                let mut r = commutator(&self.elements[k], &self.elements[l]);
                for m in 0..d {
                    r += &self.elements[m] * (I * self.c(m, k, l));
                }
                worst = worst.max(max_abs(&r));
            }
        }
        worst
    }
}

/// Generalized Gell-Mann matrices of size `n`.
///
/// Ordering is nested along `su(2) ⊂ su(3) ⊂ …`: for each `k = 1..n-1`, the
/// symmetric and antisymmetric pair `(j, k)` for `j < k`, then the diagonal
/// element `sqrt(2/(k(k+1))) diag(1, …, 1, -k, 0, …)`. This reproduces the
/// Pauli matrices for `n = 2` and `λ_1 … λ_8` for `n = 3`.
pub fn gellmann_matrices(n: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(n * n - 1);
    for k in 1..n {
        for j in 0..k {
            let mut s = zeros(n, n);
            s[(j, k)] = ONE;
            s[(k, j)] = ONE;
            out.push(s);
            let mut a = zeros(n, n);
            a[(j, k)] = -I;
            a[(k, j)] = I;
            out.push(a);
        }
        let kf = k as f64;
        let norm = (2.0 / (kf * (kf + 1.0))).sqrt();
        let mut d = zeros(n, n);
        for i in 0..k {
            d[(i, i)] = c(norm, 0.0);
        }
        d[(k, k)] = c(-kf * norm, 0.0);
        out.push(d);
    }
    out
}

pub fn gellmann_basis(n: usize) -> Result<MatrixBasis> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    MatrixBasis::from_elements(n, gellmann_matrices(n))
}

/// `g_kl = (1/n) tr(E_k E_l)` with inverse and determinant.
pub fn metric(n: usize, basis: &[CMatrix]) -> Result<Metric> {
    let d = basis.len();
    let nf = n as f64;
    let g = RMatrix::from_fn(d, d, |k, l| ((&basis[k] * &basis[l]).trace() / nf).re);
    if d == 0 {
        return Ok(Metric {
            g_inv: g.clone(),
            g,
            g_det: 1.0,
        });
    }
    if symmetric_eigenvalues(&g)[0] <= TAU_ALG {
        return Err(Error::SingularMetric);
    }
    let g_det = g.determinant();
    let g_inv = g.clone().try_inverse().ok_or(Error::SingularMetric)?;
    Ok(Metric { g, g_inv, g_det })
}

/// Structure constants of a Hermitian traceless basis, obtained by projecting
/// each commutator back onto the basis through the Gram matrix.
pub fn structure_constants(basis: &[CMatrix]) -> Result<StructureConstants> {
    let d = basis.len();
    if d == 0 {
        return Ok(StructureConstants {
            dim: 0,
            data: Vec::new(),
        });
    }
    let n = basis[0].nrows();
    let gram = RMatrix::from_fn(d, d, |k, l| ((&basis[k] * &basis[l]).trace() / n as f64).re);
    let g_inv = gram.try_inverse().ok_or(Error::SingularBasis)?;
    if g_inv.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularBasis);
    }
    project_structure_constants(n, basis, &g_inv)
}

fn project_structure_constants(
    n: usize,
    basis: &[CMatrix],
    g_inv: &RMatrix,
) -> Result<StructureConstants> {
    let d = basis.len();
    let nf = n as f64;
    let mut data = vec![0.0; d * d * d];
    for k in 0..d {
        for l in (k + 1)..d {
            let br = commutator(&basis[k], &basis[l]);
            let proj: Vec<C64> = basis.iter().map(|e| (e * &br).trace() / nf).collect();
            for m in 0..d {
                // [E_k, E_l] = coef^m E_m = -i C^m_kl E_m  =>  C^m_kl = i coef^m
                let coef: C64 = (0..d).map(|j| proj[j] * g_inv[(m, j)]).sum();
                let cm = (I * coef).re;
                data[(m * d + k) * d + l] = cm;
                data[(m * d + l) * d + k] = -cm;
            }
        }
    }
    Ok(StructureConstants { dim: d, data })
}

/// Orthonormal real coordinates on anti-Hermitian `r × r` matrices with
/// respect to `Re tr(X† Y)`.
///
/// Ordering: `i e_jj` for each `j`, then for `j < k` the pair
/// `(e_jk - e_kj)/√2`, `i (e_jk + e_kj)/√2`.
pub fn anti_hermitian_basis(r: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(r * r);
    for j in 0..r {
        let mut m = zeros(r, r);
        m[(j, j)] = I;
        out.push(m);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..r {
        for k in (j + 1)..r {
            let mut a = zeros(r, r);
            a[(j, k)] = c(s, 0.0);
            a[(k, j)] = c(-s, 0.0);
            out.push(a);
            let mut b = zeros(r, r);
            b[(j, k)] = c(0.0, s);
            b[(k, j)] = c(0.0, s);
            out.push(b);
        }
    }
    out
}

/// Coordinates of `x` along [`anti_hermitian_basis`]; the anti-Hermitian part
/// is extracted implicitly.
pub fn pack_anti_hermitian(x: &CMatrix, out: &mut Vec<f64>) {
    let r = x.nrows();
    for j in 0..r {
        out.push(x[(j, j)].im);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..r {
        for k in (j + 1)..r {
            out.push(s * (x[(j, k)].re - x[(k, j)].re));
            out.push(s * (x[(j, k)].im + x[(k, j)].im));
        }
    }
}

pub fn unpack_anti_hermitian(r: usize, coords: &[f64]) -> CMatrix {
    let mut x = zeros(r, r);
    for j in 0..r {
        x[(j, j)] = c(0.0, coords[j]);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut idx = r;
    for j in 0..r {
        for k in (j + 1)..r {
            let (a, b) = (coords[idx], coords[idx + 1]);
            idx += 2;
            x[(j, k)] = c(s * a, s * b);
            x[(k, j)] = c(-s * a, s * b);
        }
    }
    x
}

/// Seeded random matrices for tests, verification suites and the CLI.
pub mod random {
    use super::*;
    use rand::Rng;

    pub fn complex<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
        let a = complex(rng, n, n);
        (&a + a.adjoint()) * c(0.5, 0.0)
    }

    pub fn anti_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
        hermitian(rng, n) * I
    }

    pub fn traceless<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
        let mut a = complex(rng, n, n);
        let t = a.trace() / n as f64;
        for i in 0..n {
            a[(i, i)] -= t;
        }
        a
    }

    /// Unitary `exp(i H)` with a random Hermitian `H` of entries in `[-π, π]`.
    pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
        expi_hermitian(&(hermitian(rng, n) * c(std::f64::consts::PI, 0.0)))
    }

    pub fn vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }
}
