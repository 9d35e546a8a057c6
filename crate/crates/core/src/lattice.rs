//! Yang-Mills-Higgs model on `C∞(M) ⊗ M_n` with `M` a small periodic lattice.
//!
//! The connection splits into a gauge potential `a_μ(x)` along the lattice
//! directions and a potential `b_k(x)` along the algebraic directions `∂_k`.
//! Derivatives are forward periodic differences with spacing `h`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    anti_hermitian_residual, c, commutator, gellmann_basis, norm_sq, pack_anti_hermitian,
    real_inner, symmetric_eigenvalues, unitary_residual, unpack_anti_hermitian, zeros, CMatrix,
    MatrixBasis, RMatrix, I, TAU_ALG,
};
use crate::optimize::{gradient_descent, DescentParams, DescentStatus, TraceRow};

pub const MAX_EXTENT: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeConfig {
    dims: Vec<usize>,
    spacing: f64,
    basis: Arc<MatrixBasis>,
    mu: f64,
    /// `a[site * m + μ]`
    a: Vec<CMatrix>,
    /// `b[site * D + k]`
    b: Vec<CMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VacuumKind {
    /// `a = 0, b = 0`
    Symmetric,
    /// `a = 0, b_k = i E_k`
    Broken,
}

fn validate_shape(dims: &[usize], spacing: f64, mu: f64) -> Result<()> {
    if dims.is_empty() || dims.len() > 2 {
        return Err(Error::ConfigInvalid(format!(
            "lattice must have 1 or 2 directions, got {}",
            dims.len()
        )));
    }
    if let Some(&l) = dims.iter().find(|&&l| l == 0 || l > MAX_EXTENT) {
        return Err(Error::ConfigInvalid(format!(
            "extent {l} outside 1..={MAX_EXTENT}"
        )));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::ConfigInvalid(format!("spacing must be positive, got {spacing}")));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::ConfigInvalid(format!("mu must be positive, got {mu}")));
    }
    Ok(())
}

impl LatticeConfig {
    pub fn new(
        basis: &Arc<MatrixBasis>,
        dims: Vec<usize>,
        spacing: f64,
        mu: f64,
        a: Vec<CMatrix>,
        b: Vec<CMatrix>,
    ) -> Result<Self> {
        validate_shape(&dims, spacing, mu)?;
        let sites: usize = dims.iter().product();
        let n = basis.n();
        if a.len() != sites * dims.len() {
            return Err(Error::DimensionMismatch {
                expected: sites * dims.len(),
                found: a.len(),
            });
        }
        if b.len() != sites * basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: sites * basis.dim(),
                found: b.len(),
            });
        }
        if let Some(m) = a.iter().chain(&b).find(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.nrows(),
            });
        }
        if a.iter().chain(&b).any(|m| anti_hermitian_residual(m) >= TAU_ALG) {
            return Err(Error::ConfigInvalid("fields must be anti-Hermitian".into()));
        }
        Ok(Self {
            dims,
            spacing,
            basis: Arc::clone(basis),
            mu,
            a,
            b,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn basis(&self) -> &Arc<MatrixBasis> {
        &self.basis
    }

    pub fn sites(&self) -> usize {
        self.dims.iter().product()
    }

    /// Number of lattice directions `m`.
    pub fn directions(&self) -> usize {
        self.dims.len()
    }

    pub fn a(&self, site: usize, mu: usize) -> &CMatrix {
        &self.a[site * self.dims.len() + mu]
    }

    pub fn b(&self, site: usize, k: usize) -> &CMatrix {
        &self.b[site * self.basis.dim() + k]
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        validate_shape(&self.dims, self.spacing, mu)?;
        Ok(Self { mu, ..self.clone() })
    }

    /// Forward periodic neighbour of `site` along direction `mu`.
    pub fn neighbour(&self, site: usize, mu: usize) -> usize {
        let mut coords = self.coords(site);
        coords[mu] = (coords[mu] + 1) % self.dims[mu];
        self.site_index(&coords)
    }

    pub fn coords(&self, mut site: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for d in (0..self.dims.len()).rev() {
            out[d] = site % self.dims[d];
            site /= self.dims[d];
        }
        out
    }

    fn site_index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.dims).fold(0, |acc, (x, l)| acc * l + x)
    }

    fn volume_element(&self) -> f64 {
        self.spacing.powi(self.dims.len() as i32)
    }

    pub fn to_coords(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for m in self.a.iter().chain(&self.b) {
            pack_anti_hermitian(m, &mut out);
        }
        out
    }

    pub fn with_coords(&self, coords: &[f64]) -> Result<Self> {
        let n = self.basis.n();
        let block = n * n;
        let total = self.a.len() + self.b.len();
        if coords.len() != total * block {
            return Err(Error::DimensionMismatch {
                expected: total * block,
                found: coords.len(),
            });
        }
        let mut mats = coords.chunks(block).map(|ch| unpack_anti_hermitian(n, ch));
        let a = mats.by_ref().take(self.a.len()).collect();
        let b = mats.collect();
        Ok(Self {
            a,
            b,
            ..self.clone()
        })
    }
}

/// Symmetric or broken vacuum with unit spacing.
pub fn vacuum_config(
    kind: VacuumKind,
    dims: &[usize],
    basis: &Arc<MatrixBasis>,
    mu: f64,
) -> Result<LatticeConfig> {
    vacuum_config_with_spacing(kind, dims, 1.0, basis, mu)
}

pub fn vacuum_config_with_spacing(
    kind: VacuumKind,
    dims: &[usize],
    spacing: f64,
    basis: &Arc<MatrixBasis>,
    mu: f64,
) -> Result<LatticeConfig> {
    validate_shape(dims, spacing, mu)?;
    let sites: usize = dims.iter().product();
    let n = basis.n();
    let a = vec![zeros(n, n); sites * dims.len()];
    let b = match kind {
        VacuumKind::Symmetric => vec![zeros(n, n); sites * basis.dim()],
        VacuumKind::Broken => (0..sites)
            .flat_map(|_| basis.elements().iter().map(|e| e * I))
            .collect(),
    };
    LatticeConfig::new(basis, dims.to_vec(), spacing, mu, a, b)
}

struct Weights {
    field: f64,
    kinetic: f64,
    higgs: f64,
}

fn weights(cfg: &LatticeConfig) -> Weights {
    let n = cfg.basis.n() as f64;
    let mu2 = cfg.mu * cfg.mu;
    Weights {
        field: 1.0 / (4.0 * n),
        kinetic: mu2 / (8.0 * n * n),
        higgs: mu2 * mu2 / (16.0 * n * n),
    }
}

fn field_strength(cfg: &LatticeConfig, x: usize, mu: usize, nu: usize) -> CMatrix {
    let inv_h = c(1.0 / cfg.spacing, 0.0);
    let xm = cfg.neighbour(x, mu);
    let xn = cfg.neighbour(x, nu);
    (cfg.a(xm, nu) - cfg.a(x, nu)) * inv_h - (cfg.a(xn, mu) - cfg.a(x, mu)) * inv_h
        + commutator(cfg.a(x, mu), cfg.a(x, nu))
}

fn covariant_b(cfg: &LatticeConfig, x: usize, mu: usize, k: usize) -> CMatrix {
    let inv_h = c(1.0 / cfg.spacing, 0.0);
    let xm = cfg.neighbour(x, mu);
    (cfg.b(xm, k) - cfg.b(x, k)) * inv_h + commutator(cfg.a(x, mu), cfg.b(x, k))
}

fn higgs_defect(cfg: &LatticeConfig, x: usize, k: usize, l: usize) -> CMatrix {
    let mut out = commutator(cfg.b(x, k), cfg.b(x, l));
    for m in 0..cfg.basis.dim() {
        let cm = cfg.basis.c(m, k, l);
        if cm != 0.0 {
            out -= cfg.b(x, m) * c(cm, 0.0);
        }
    }
    out
}

/// The three non-negative contributions to the action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionTerms {
    pub field: f64,
    pub kinetic: f64,
    pub higgs: f64,
}

impl ActionTerms {
    pub fn total(&self) -> f64 {
        self.field + self.kinetic + self.higgs
    }
}

pub fn lattice_action_terms(cfg: &LatticeConfig) -> ActionTerms {
    let w = weights(cfg);
    let m = cfg.directions();
    let d = cfg.basis.dim();
    let (mut f, mut kin, mut hig) = (0.0, 0.0, 0.0);
    for x in 0..cfg.sites() {
        for mu in 0..m {
            for nu in 0..m {
                if mu != nu {
                    f += norm_sq(&field_strength(cfg, x, mu, nu));
                }
            }
            for k in 0..d {
                kin += norm_sq(&covariant_b(cfg, x, mu, k));
            }
        }
        for k in 0..d {
            for l in 0..d {
                if k != l {
                    hig += norm_sq(&higgs_defect(cfg, x, k, l));
                }
            }
        }
    }
    let vol = cfg.volume_element();
    ActionTerms {
        field: vol * w.field * f,
        kinetic: vol * w.kinetic * kin,
        higgs: vol * w.higgs * hig,
    }
}

/// `S = Σ_x h^m { (1/4n) Σ_μν ‖F_μν‖² + (μ²/8n²) Σ_μk ‖D_μ b_k‖²
/// + (μ⁴/16n²) Σ_kl ‖[b_k, b_l] - C^m_kl b_m‖² }`.
pub fn lattice_action(cfg: &LatticeConfig) -> f64 {
    lattice_action_terms(cfg).total()
}

/// Gradient of [`lattice_action`] as matrices `G` with
/// `dS = Σ Re tr(G† δfield)`, in the layout of the config (`a` then `b`).
pub fn lattice_gradient(cfg: &LatticeConfig) -> (Vec<CMatrix>, Vec<CMatrix>) {
    let w = weights(cfg);
    let n = cfg.basis.n();
    let m = cfg.directions();
    let d = cfg.basis.dim();
    let vol = cfg.volume_element();
    let inv_h = c(1.0 / cfg.spacing, 0.0);
    let mut ga = vec![zeros(n, n); cfg.a.len()];
    let mut gb = vec![zeros(n, n); cfg.b.len()];
    let ai = |x: usize, mu: usize| x * m + mu;
    let bi = |x: usize, k: usize| x * d + k;
    for x in 0..cfg.sites() {
        for mu in 0..m {
            let xm = cfg.neighbour(x, mu);
            for nu in 0..m {
                if mu == nu {
                    continue;
                }
                let xn = cfg.neighbour(x, nu);
                let two_x = field_strength(cfg, x, mu, nu) * c(2.0 * vol * w.field, 0.0);
                let step = &two_x * inv_h;
                ga[ai(xm, nu)] += &step;
                ga[ai(x, nu)] -= &step;
                ga[ai(xn, mu)] -= &step;
                ga[ai(x, mu)] += &step;
                ga[ai(x, nu)] += commutator(&cfg.a(x, mu).adjoint(), &two_x);
                ga[ai(x, mu)] -= commutator(&cfg.a(x, nu).adjoint(), &two_x);
            }
            for k in 0..d {
                let two_x = covariant_b(cfg, x, mu, k) * c(2.0 * vol * w.kinetic, 0.0);
                let step = &two_x * inv_h;
                gb[bi(xm, k)] += &step;
                gb[bi(x, k)] -= &step;
                gb[bi(x, k)] += commutator(&cfg.a(x, mu).adjoint(), &two_x);
                ga[ai(x, mu)] -= commutator(&cfg.b(x, k).adjoint(), &two_x);
            }
        }
        for k in 0..d {
            for l in 0..d {
                if k == l {
                    continue;
                }
                let two_x = higgs_defect(cfg, x, k, l) * c(2.0 * vol * w.higgs, 0.0);
                gb[bi(x, k)] -= commutator(&cfg.b(x, l).adjoint(), &two_x);
                gb[bi(x, l)] += commutator(&cfg.b(x, k).adjoint(), &two_x);
                for q in 0..d {
                    let cq = cfg.basis.c(q, k, l);
                    if cq != 0.0 {
                        gb[bi(x, q)] -= &two_x * c(cq, 0.0);
                    }
                }
            }
        }
    }
    (ga, gb)
}

/// Gradient in the real coordinates of [`LatticeConfig::to_coords`].
pub fn lattice_coordinate_gradient(cfg: &LatticeConfig) -> Vec<f64> {
    let (ga, gb) = lattice_gradient(cfg);
    let mut out = Vec::new();
    for g in ga.iter().chain(&gb) {
        pack_anti_hermitian(g, &mut out);
    }
    out
}

/// `a_μ ↦ g⁻¹ a_μ g + g⁻¹ Δ_μ g`, `b_k ↦ g⁻¹ b_k g` with `g` given per site.
pub fn lattice_gauge_transform(cfg: &LatticeConfig, g: &[CMatrix]) -> Result<LatticeConfig> {
    if g.len() != cfg.sites() {
        return Err(Error::DimensionMismatch {
            expected: cfg.sites(),
            found: g.len(),
        });
    }
    let n = cfg.basis.n();
    for gx in g {
        if gx.nrows() != n || gx.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: gx.nrows(),
            });
        }
        let residual = unitary_residual(gx);
        if residual >= TAU_ALG {
            return Err(Error::NotUnitary { residual });
        }
    }
    let m = cfg.directions();
    let d = cfg.basis.dim();
    let inv_h = c(1.0 / cfg.spacing, 0.0);
    let mut a = Vec::with_capacity(cfg.a.len());
    let mut b = Vec::with_capacity(cfg.b.len());
    for x in 0..cfg.sites() {
        let gi = g[x].adjoint();
        for mu in 0..m {
            let dg = (&g[cfg.neighbour(x, mu)] - &g[x]) * inv_h;
            a.push(&gi * cfg.a(x, mu) * &g[x] + &gi * dg);
        }
        for k in 0..d {
            b.push(&gi * cfg.b(x, k) * &g[x]);
        }
    }
    // g⁻¹Δg is anti-Hermitian only up to O(h); keep the exact transform
    Ok(LatticeConfig {
        a,
        b,
        ..cfg.clone()
    })
}

/// Orthonormal basis of `u(n)` under `Re tr(X† Y)` starting with `i 1/√n`,
/// followed by the Gram-Schmidt completion of the `i E_k`.
pub fn fluctuation_basis(basis: &MatrixBasis) -> Vec<CMatrix> {
    let n = basis.n();
    let mut out: Vec<CMatrix> = Vec::with_capacity(n * n);
    let seeds = std::iter::once(crate::linalg::identity(n) * I)
        .chain(basis.elements().iter().map(|e| e * I));
    for mut v in seeds {
        for u in &out {
            let p = real_inner(u, &v);
            v -= u * c(p, 0.0);
        }
        let norm = real_inner(&v, &v).sqrt();
        out.push(v * c(1.0 / norm, 0.0));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassSpectrum {
    /// Ascending eigenvalues of the zero-momentum Hessian per unit volume.
    pub eigenvalues: Vec<f64>,
    /// Rows: `(μ, j)` pairs in the order of [`fluctuation_basis`].
    pub hessian: Vec<Vec<f64>>,
    /// `‖H v‖` for the identity direction of every lattice direction.
    pub identity_mode_residual: f64,
}

/// Finite-difference Hessian of `S / volume` with respect to constant shifts
/// `a_μ(x) → a_μ(x) + Σ_j t_{μj} e_j` around `cfg`.
pub fn mass_spectrum(cfg: &LatticeConfig) -> MassSpectrum {
    let basis_u = fluctuation_basis(&cfg.basis);
    let m = cfg.directions();
    let per = basis_u.len();
    let p = m * per;
    let volume = cfg.sites() as f64 * cfg.volume_element();
    let eps = 1e-4;
    let shifted = |t: &[(usize, f64)]| -> f64 {
        let mut shifted = cfg.clone();
        for x in 0..cfg.sites() {
            for &(idx, s) in t {
                let (mu, j) = (idx / per, idx % per);
                shifted.a[x * m + mu] += &basis_u[j] * c(s, 0.0);
            }
        }
        lattice_action(&shifted) / volume
    };
    let mut h = RMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v = if i == j {
                let s2 = shifted(&[(i, 2.0 * eps)]);
                let s0 = shifted(&[]);
                let sm = shifted(&[(i, -2.0 * eps)]);
                (s2 - 2.0 * s0 + sm) / (4.0 * eps * eps)
            } else {
                let pp = shifted(&[(i, eps), (j, eps)]);
                let pm = shifted(&[(i, eps), (j, -eps)]);
                let mp = shifted(&[(i, -eps), (j, eps)]);
                let mm = shifted(&[(i, -eps), (j, -eps)]);
                (pp - pm - mp + mm) / (4.0 * eps * eps)
            };
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let mut identity_residual: f64 = 0.0;
    for mu in 0..m {
        let col = h.column(mu * per);
        identity_residual = identity_residual.max(col.norm());
    }
    MassSpectrum {
        eigenvalues: symmetric_eigenvalues(&h),
        hessian: (0..p).map(|i| h.row(i).iter().copied().collect()).collect(),
        identity_mode_residual: identity_residual,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeMinimizeReport {
    pub config: LatticeConfig,
    pub status: DescentStatus,
    pub iterations: usize,
    pub initial_action: f64,
    pub final_action: f64,
    pub grad_norm: f64,
    pub trace: Vec<TraceRow>,
}

pub fn minimize_lattice(cfg0: &LatticeConfig, params: &DescentParams) -> LatticeMinimizeReport {
    let result = gradient_descent(
        cfg0.to_coords(),
        |x| {
            let cfg = cfg0.with_coords(x).expect("coordinate length");
            (lattice_action(&cfg), lattice_coordinate_gradient(&cfg))
        },
        params,
    );
    LatticeMinimizeReport {
        config: cfg0.with_coords(&result.x).expect("coordinate length"),
        status: result.status,
        iterations: result.iterations,
        initial_action: result.trace[0].action,
        final_action: result.value,
        grad_norm: result.grad_norm,
        trace: result.trace,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Symmetric,
    Broken,
    Random,
}

/// On-disk description of a lattice run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub dims: Vec<usize>,
    pub n: usize,
    pub mu: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_init")]
    pub init: InitMode,
    /// Amplitude of random anti-Hermitian noise added on top of `init`.
    #[serde(default)]
    pub noise: f64,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_init() -> InitMode {
    InitMode::Random
}

fn default_spacing() -> f64 {
    1.0
}

impl LatticeSpec {
    pub fn build(&self) -> Result<LatticeConfig> {
        if !(2..=5).contains(&self.n) {
            return Err(Error::ConfigInvalid(format!("n must be in 2..=5, got {}", self.n)));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::ConfigInvalid("noise must be non-negative".into()));
        }
        let basis = Arc::new(gellmann_basis(self.n)?);
        let kind = match self.init {
            InitMode::Broken => VacuumKind::Broken,
            _ => VacuumKind::Symmetric,
        };
        let mut cfg = vacuum_config_with_spacing(kind, &self.dims, self.spacing, &basis, self.mu)?;
        let amplitude = match self.init {
            InitMode::Random if self.noise == 0.0 => 1.0,
            _ => self.noise,
        };
        if amplitude > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            for f in cfg.a.iter_mut().chain(cfg.b.iter_mut()) {
                *f += crate::linalg::random::anti_hermitian(&mut rng, self.n) * c(amplitude, 0.0);
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expi_hermitian, max_abs, random};

    fn basis(n: usize) -> Arc<MatrixBasis> {
        Arc::new(gellmann_basis(n).unwrap())
    }

    fn random_cfg(rng: &mut ChaCha8Rng, n: usize, dims: &[usize]) -> LatticeConfig {
        LatticeSpec {
            dims: dims.to_vec(),
            n,
            mu: 1.3,
            seed: rng.gen(),
            init: InitMode::Random,
            noise: 0.7,
            spacing: 0.8,
        }
        .build()
        .unwrap()
    }

    use rand::Rng;

    #[test]
    fn vacua_have_zero_action() {
        for n in [2, 3] {
            let b = basis(n);
            for dims in [vec![16], vec![4, 5]] {
                for kind in [VacuumKind::Symmetric, VacuumKind::Broken] {
                    let cfg = vacuum_config(kind, &dims, &b, 1.7).unwrap();
                    assert!(lattice_action(&cfg).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn higgs_identity_for_basis() {
        let b = basis(3);
        for k in 0..8 {
            for l in 0..8 {
                let mut x = commutator(&(b.element(k) * I), &(b.element(l) * I));
                for m in 0..8 {
                    x -= b.element(m) * I * c(b.c(m, k, l), 0.0);
                }
                assert!(max_abs(&x) < TAU_ALG);
            }
        }
    }

    #[test]
    fn doubled_higgs_field_costs_action() {
        let b = basis(2);
        let mut cfg = vacuum_config(VacuumKind::Broken, &[8], &b, 1.0).unwrap();
        for f in cfg.b.iter_mut() {
            *f *= c(2.0, 0.0);
        }
        let terms = lattice_action_terms(&cfg);
        assert!(terms.higgs > 0.0);
        assert_eq!(terms.field, 0.0);
        // [2iσ_k, 2iσ_l] - C (2iσ_m) = 2 C iσ_m: six ordered pairs of norm² 32 per site
        let want = 8.0 * 6.0 * 32.0 / 64.0;
        assert!((terms.higgs - want).abs() < 1e-10);
    }

    #[test]
    fn positivity_and_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for (n, dims) in [(2, vec![5]), (2, vec![3, 4]), (3, vec![3])] {
            let cfg = random_cfg(&mut rng, n, &dims);
            assert!(lattice_action(&cfg) > 0.0);
            let x = cfg.to_coords();
            let grad = lattice_coordinate_gradient(&cfg);
            let h = 1e-5;
            let mut worst: f64 = 0.0;
            let scale = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            for i in (0..x.len()).step_by(7) {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (lattice_action(&cfg.with_coords(&xp).unwrap())
                    - lattice_action(&cfg.with_coords(&xm).unwrap()))
                    / (2.0 * h);
                worst = worst.max((fd - grad[i]).abs());
            }
            assert!(worst / scale < 1e-6, "n={n} dims={dims:?}: {}", worst / scale);
        }
    }

    #[test]
    fn constant_gauge_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let cfg = random_cfg(&mut rng, 2, &[4, 3]);
        let u = random::unitary(&mut rng, 2);
        let g = vec![u; cfg.sites()];
        let t = lattice_gauge_transform(&cfg, &g).unwrap();
        assert!((lattice_action(&t) - lattice_action(&cfg)).abs() < 1e-8);

        let id = vec![crate::linalg::identity(2); cfg.sites()];
        assert_eq!(lattice_gauge_transform(&cfg, &id).unwrap(), cfg);

        let mut bad = id.clone();
        bad[3] *= c(1.5, 0.0);
        assert!(matches!(lattice_gauge_transform(&cfg, &bad), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn broken_vacuum_orbit() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let b = basis(3);
        let cfg = vacuum_config(VacuumKind::Broken, &[6], &b, 0.9).unwrap();
        let g = vec![random::unitary(&mut rng, 3); 6];
        let t = lattice_gauge_transform(&cfg, &g).unwrap();
        assert!(lattice_action(&t).abs() < 1e-12);
    }

    // Smooth 1-D config and gauge function on [0, 1) sampled at L sites: a
    // strong gauge field and a gently varying gauge function, so the O(h)
    // part of the drift dominates already on coarse grids.
    fn drift(l: usize) -> f64 {
        let b = basis(2);
        let h = 1.0 / l as f64;
        let tau = std::f64::consts::TAU;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let coef: Vec<CMatrix> = (0..4).map(|_| random::anti_hermitian(&mut rng, 2)).collect();
        let gh = (random::hermitian(&mut rng, 2), random::hermitian(&mut rng, 2));
        let mut a = Vec::new();
        let mut bf = Vec::new();
        let mut g = Vec::new();
        for i in 0..l {
            let x = i as f64 * h;
            a.push(&coef[0] * c(2.0 * (tau * x).sin(), 0.0));
            for k in 0..3 {
                let wave = c((tau * x + k as f64).sin(), 0.0);
                bf.push(&coef[k + 1] * wave + b.element(k) * I);
            }
            let hx = &gh.0 * c(0.1 * (tau * x).cos(), 0.0) + &gh.1 * c(0.1 * (tau * x).sin(), 0.0);
            g.push(expi_hermitian(&hx));
        }
        let cfg = LatticeConfig::new(&b, vec![l], h, 1.0, a, bf).unwrap();
        let t = lattice_gauge_transform(&cfg, &g).unwrap();
        lattice_action(&t) - lattice_action(&cfg)
    }

    #[test]
    fn local_gauge_drift_is_first_order() {
        let (d16, d32, d64) = (drift(16), drift(32), drift(64));
        let ratio = d16 / d32;
        assert!(d16.abs() > 1e-4);
        assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
        // Richardson: (4 d(h/2) - d(h)) / h estimates the O(h) coefficient
        let a16 = (4.0 * d32 - d16) * 16.0;
        let a32 = (4.0 * d64 - d32) * 32.0;
        assert!(a32.abs() > 1e-3);
        assert!((a16 - a32).abs() < 0.1 * a32.abs(), "{a16} vs {a32}");
    }

    #[test]
    fn mass_spectrum_broken_n2() {
        let b = basis(2);
        let cfg = vacuum_config(VacuumKind::Broken, &[8], &b, 1.0).unwrap();
        let spec = mass_spectrum(&cfg);
        // (μ²/8n²) Σ_k ‖[a, iσ_k]‖² gives μ²/2 on each traceless direction
        let want = [0.0, 0.5, 0.5, 0.5];
        for (e, w) in spec.eigenvalues.iter().zip(want) {
            assert!((e - w).abs() < 1e-6, "{:?}", spec.eigenvalues);
        }
        assert!(spec.identity_mode_residual < 1e-6);
        let spec2 = mass_spectrum(&cfg.with_mu(2.0).unwrap());
        for (e1, e2) in spec.eigenvalues.iter().zip(&spec2.eigenvalues).skip(1) {
            assert!((e2 / e1 - 4.0).abs() < 1e-3);
        }
    }

    #[test]
    fn mass_spectrum_matches_quadratic_form() {
        let b = basis(3);
        let cfg = vacuum_config(VacuumKind::Broken, &[2, 2], &b, 0.7).unwrap();
        let spec = mass_spectrum(&cfg);
        let u = fluctuation_basis(&b);
        let n2 = 9.0;
        let w = 2.0 * 0.49 / (8.0 * n2);
        for mu in 0..2 {
            for i in 0..9 {
                for j in 0..9 {
                    let mut want = 0.0;
                    for k in 0..8 {
                        let iek = b.element(k) * I;
                        want += real_inner(&commutator(&u[i], &iek), &commutator(&u[j], &iek));
                    }
                    want *= w;
                    let got = spec.hessian[mu * 9 + i][mu * 9 + j];
                    assert!((got - want).abs() < 1e-6);
                }
            }
        }
        assert!(spec.eigenvalues[0] > -1e-8);
    }

    #[test]
    fn symmetric_vacuum_is_massless() {
        let b = basis(2);
        let cfg = vacuum_config(VacuumKind::Symmetric, &[5], &b, 1.0).unwrap();
        assert!(mass_spectrum(&cfg).eigenvalues.iter().all(|e| e.abs() < 1e-6));
    }

    #[test]
    fn lattice_minimization_descends() {
        let spec = LatticeSpec {
            dims: vec![4],
            n: 2,
            mu: 1.0,
            seed: 5,
            init: InitMode::Broken,
            noise: 0.05,
            spacing: 1.0,
        };
        let cfg = spec.build().unwrap();
        let params = DescentParams {
            max_iter: 2000,
            ..DescentParams::default()
        };
        let rep = minimize_lattice(&cfg, &params);
        assert!(rep.trace.windows(2).all(|w| w[1].action <= w[0].action));
        // near-gauge directions are soft, so the tail is slow
        assert!(rep.final_action < 1e-7, "{}", rep.final_action);
        assert!(rep.final_action < 1e-5 * rep.initial_action);
    }

    #[test]
    fn spec_validation() {
        let mut spec = LatticeSpec {
            dims: vec![4, 4, 4],
            n: 2,
            mu: 1.0,
            seed: 0,
            init: InitMode::Symmetric,
            noise: 0.0,
            spacing: 1.0,
        };
        assert!(matches!(spec.build(), Err(Error::ConfigInvalid(_))));
        spec.dims = vec![65];
        assert!(matches!(spec.build(), Err(Error::ConfigInvalid(_))));
        spec.dims = vec![4];
        spec.mu = -1.0;
        assert!(matches!(spec.build(), Err(Error::ConfigInvalid(_))));
        let json = r#"{"dims":[4],"n":2,"mu":1.0,"init":"broken"}"#;
        let parsed: LatticeSpec = serde_json::from_str(json).unwrap();
        assert!(lattice_action(&parsed.build().unwrap()).abs() < 1e-12);
    }
}
