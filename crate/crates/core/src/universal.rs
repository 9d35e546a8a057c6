//! Universal differential calculus over the functions on a finite set `X`.
//!
//! A `p`-form is a function on `X^{p+1}` that vanishes whenever two
//! consecutive arguments coincide. Products concatenate at the shared point,
//! the differential is the alternating finite difference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C64, ONE, ZERO};

/// Highest supported form degree.
pub const MAX_DEGREE: usize = 3;
/// Upper bound on the number of stored values `|X|^{p+1}`.
pub const MAX_ENTRIES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteSet {
    size: usize,
}

impl FiniteSet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidArgument("finite set must be non-empty".into()));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalForm {
    degree: usize,
    base: FiniteSet,
    values: Vec<C64>,
}

fn storage_len(base: FiniteSet, degree: usize) -> Result<usize> {
    if degree > MAX_DEGREE {
        return Err(Error::DegreeUnsupported(degree));
    }
    let mut len: usize = 1;
    for _ in 0..=degree {
        len = len
            .checked_mul(base.size)
            .filter(|&l| l <= MAX_ENTRIES)
            .ok_or(Error::FormTooLarge(base.size.saturating_pow(degree as u32 + 1)))?;
    }
    Ok(len)
}

fn has_consecutive_repeat(pts: &[usize]) -> bool {
    pts.windows(2).any(|w| w[0] == w[1])
}

impl UniversalForm {
    pub fn zero(base: FiniteSet, degree: usize) -> Result<Self> {
        let len = storage_len(base, degree)?;
        Ok(Self {
            degree,
            base,
            values: vec![ZERO; len],
        })
    }

    /// Builds a form from a function of the `p+1` points. Values on tuples
    /// with a repeated consecutive point are discarded.
    pub fn from_fn(base: FiniteSet, degree: usize, mut f: impl FnMut(&[usize]) -> C64) -> Result<Self> {
        let mut out = Self::zero(base, degree)?;
        let mut pts = vec![0; degree + 1];
        for idx in 0..out.values.len() {
            out.decode(idx, &mut pts);
            if degree == 0 || !has_consecutive_repeat(&pts) {
                out.values[idx] = f(&pts);
            }
        }
        Ok(out)
    }

    /// Degree-0 form, i.e. a function on `X`.
    pub fn function(base: FiniteSet, values: &[C64]) -> Result<Self> {
        if values.len() != base.size {
            return Err(Error::DimensionMismatch {
                expected: base.size,
                found: values.len(),
            });
        }
        Self::from_fn(base, 0, |p| values[p[0]])
    }

    pub fn constant(base: FiniteSet, value: C64) -> Result<Self> {
        Self::from_fn(base, 0, |_| value)
    }

    /// Row-major values over `X^{p+1}`, rejecting data that does not vanish on
    /// consecutive repeated points.
    pub fn from_values(base: FiniteSet, degree: usize, values: Vec<C64>) -> Result<Self> {
        let len = storage_len(base, degree)?;
        if values.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: values.len(),
            });
        }
        let out = Self {
            degree,
            base,
            values,
        };
        if degree > 0 {
            let mut pts = vec![0; degree + 1];
            for idx in 0..len {
                out.decode(idx, &mut pts);
                if has_consecutive_repeat(&pts) && out.values[idx] != ZERO {
                    return Err(Error::InvalidArgument(format!(
                        "form does not vanish at repeated points {pts:?}"
                    )));
                }
            }
        }
        Ok(out)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn base(&self) -> FiniteSet {
        self.base
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    fn decode(&self, mut idx: usize, pts: &mut [usize]) {
        for slot in pts.iter_mut().rev() {
            *slot = idx % self.base.size;
            idx /= self.base.size;
        }
    }

    fn encode(&self, pts: &[usize]) -> usize {
        pts.iter().fold(0, |acc, &p| acc * self.base.size + p)
    }

    /// Value at the `p+1` points `pts`.
    pub fn at(&self, pts: &[usize]) -> C64 {
        assert_eq!(pts.len(), self.degree + 1, "wrong number of points");
        self.values[self.encode(pts)]
    }

    /// Largest modulus over all stored values.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    /// Largest value on tuples with a repeated consecutive point; zero for a
    /// valid form of positive degree.
    pub fn diagonal_leak(&self) -> f64 {
        if self.degree == 0 {
            return 0.0;
        }
        let mut pts = vec![0; self.degree + 1];
        let mut worst = 0.0_f64;
        for (idx, v) in self.values.iter().enumerate() {
            self.decode(idx, &mut pts);
            if has_consecutive_repeat(&pts) {
                worst = worst.max(v.norm());
            }
        }
        worst
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.base != other.base {
            return Err(Error::BaseMismatch {
                left: self.base.size,
                right: other.base.size,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                found: other.degree,
            });
        }
        Ok(Self {
            degree: self.degree,
            base: self.base,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            degree: self.degree,
            base: self.base,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }
}

/// `(fg)(x_1, …, x_{p+q+1}) = f(x_1, …, x_{p+1}) g(x_{p+1}, …, x_{p+q+1})`.
pub fn uproduct(f: &UniversalForm, g: &UniversalForm) -> Result<UniversalForm> {
    f.check_same(g)?;
    let (p, q) = (f.degree, g.degree);
    UniversalForm::from_fn(f.base, p + q, |pts| {
        f.at(&pts[..=p]) * g.at(&pts[p..])
    })
}

/// `(d_U f)(x_1, …, x_{p+2}) = Σ_i (-1)^{i+1} f(x_1, …, x̂_i, …, x_{p+2})`.
pub fn duniv(f: &UniversalForm) -> Result<UniversalForm> {
    let p = f.degree;
    let mut omitted = Vec::with_capacity(p + 1);
    UniversalForm::from_fn(f.base, p + 1, |pts| {
        let mut acc = ZERO;
        for i in 0..pts.len() {
            omitted.clear();
            omitted.extend(pts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| *x));
            let term = f.values[f.encode(&omitted)];
            if i % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    })
}

/// The involution induced by complex conjugation on `A`.
///
/// In the function picture `f*(x_1, …, x_{p+1}) = (-1)^{p(p+1)/2}
/// conj f(x_{p+1}, …, x_1)`, which is the image of
/// `(a d b_1 ⋯ d b_p)* = (-1)^{p(p-1)/2} d b_p* ⋯ d b_1* a*`.
pub fn uinvolution(f: &UniversalForm) -> UniversalForm {
    let p = f.degree;
    let sign = if (p * (p + 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let mut rev = vec![0; p + 1];
    UniversalForm::from_fn(f.base, p, |pts| {
        for (dst, src) in rev.iter_mut().zip(pts.iter().rev()) {
            *dst = *src;
        }
        f.at(&rev).conj() * sign
    })
    .expect("same shape as a valid form")
}

/// Hermitian connection `ω = (r, conj r)` on the right module `ℂ ⊕ ℂ`, i.e.
/// the 1-form with `ω(p_1, p_2) = r` and `ω(p_2, p_1) = conj r`.
pub fn two_point_connection(r: C64) -> UniversalForm {
    two_point_one_form(r, r.conj())
}

/// The 1-form `(r_1, r_2)` on the two-point set.
pub fn two_point_one_form(r1: C64, r2: C64) -> UniversalForm {
    let base = FiniteSet::new(2).expect("two points");
    UniversalForm::from_fn(base, 1, |p| if p[0] == 0 { r1 } else { r2 }).expect("small form")
}

/// Curvature `Ω = d_U ω + ω²` of a connection 1-form on the module `A`.
pub fn connection_curvature(omega: &UniversalForm) -> Result<UniversalForm> {
    if omega.degree != 1 {
        return Err(Error::DegreeMismatch {
            expected: 1,
            found: omega.degree,
        });
    }
    duniv(omega)?.add(&uproduct(omega, omega)?)
}

/// Value of the curvature of `ω = (r, conj r)` at `(p_1, p_2, p_1)`, computed
/// through the universal calculus. Equals `r + conj r + |r|² = |r + 1|² - 1`.
pub fn two_point_curvature(r: C64) -> C64 {
    let omega = two_point_connection(r);
    connection_curvature(&omega)
        .expect("degree-one form")
        .at(&[0, 1, 0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_form(rng: &mut ChaCha8Rng, size: usize, degree: usize) -> UniversalForm {
        let base = FiniteSet::new(size).unwrap();
        let vals: Vec<C64> = (0..size.pow(degree as u32 + 1))
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        UniversalForm::from_fn(base, degree, |p| vals[p.iter().fold(0, |a, &x| a * size + x)])
            .unwrap()
    }

    #[test]
    fn unit_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_form(&mut rng, 3, 2);
        let one = UniversalForm::constant(g.base(), ONE).unwrap();
        assert_eq!(uproduct(&one, &g).unwrap(), g);
        assert_eq!(uproduct(&g, &one).unwrap(), g);
    }

    #[test]
    fn product_two_point_example() {
        let base = FiniteSet::new(2).unwrap();
        let f = UniversalForm::function(base, &[c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        let g = UniversalForm::from_fn(base, 1, |p| if p == [0, 1] { ONE } else { ZERO }).unwrap();
        let fg = uproduct(&f, &g).unwrap();
        assert_eq!(fg.at(&[0, 1]), c(2.0, 0.0));
        assert_eq!(fg.at(&[1, 0]), ZERO);
    }

    #[test]
    fn product_matches_brute_force_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_form(&mut rng, 3, 1);
        let g = random_form(&mut rng, 3, 1);
        let fg = uproduct(&f, &g).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                for d in 0..3 {
                    let want = f.values()[a * 3 + b] * g.values()[b * 3 + d];
                    assert!((fg.at(&[a, b, d]) - want).norm() < 1e-15);
                }
            }
        }
        assert_eq!(fg.diagonal_leak(), 0.0);
    }

    #[test]
    fn differential_of_functions() {
        let base = FiniteSet::new(2).unwrap();
        let f = UniversalForm::function(base, &[c(1.5, 0.5), c(-2.0, 1.0)]).unwrap();
        let df = duniv(&f).unwrap();
        assert_eq!(df.at(&[0, 1]), f.at(&[1]) - f.at(&[0]));
        assert_eq!(df.at(&[1, 0]), f.at(&[0]) - f.at(&[1]));
        let one = UniversalForm::constant(base, ONE).unwrap();
        assert_eq!(duniv(&one).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn d_squared_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for size in 1..=4 {
            for degree in 0..=1 {
                let f = random_form(&mut rng, size, degree);
                let ddf = duniv(&duniv(&f).unwrap()).unwrap();
                assert!(ddf.max_abs() < 1e-12, "size {size} degree {degree}");
            }
        }
    }

    #[test]
    fn degree_cap_enforced() {
        let base = FiniteSet::new(2).unwrap();
        assert_eq!(
            UniversalForm::zero(base, 4).unwrap_err(),
            Error::DegreeUnsupported(4)
        );
        let f = UniversalForm::zero(base, 3).unwrap();
        assert!(duniv(&f).is_err());
        let big = FiniteSet::new(40).unwrap();
        assert!(matches!(
            UniversalForm::zero(big, 3),
            Err(Error::FormTooLarge(_))
        ));
    }

    #[test]
    fn invalid_values_rejected() {
        let base = FiniteSet::new(2).unwrap();
        let bad = vec![ONE, ONE, ONE, ZERO];
        assert!(UniversalForm::from_values(base, 1, bad).is_err());
        assert!(FiniteSet::new(0).is_err());
    }

    #[test]
    fn base_mismatch() {
        let f = UniversalForm::constant(FiniteSet::new(2).unwrap(), ONE).unwrap();
        let g = UniversalForm::constant(FiniteSet::new(3).unwrap(), ONE).unwrap();
        assert_eq!(
            uproduct(&f, &g).unwrap_err(),
            Error::BaseMismatch { left: 2, right: 3 }
        );
    }

    #[test]
    fn involution_two_point_one_form() {
        let (r1, r2) = (c(0.3, -1.2), c(2.0, 0.7));
        let w = two_point_one_form(r1, r2);
        let ws = uinvolution(&w);
        assert_eq!(ws.at(&[0, 1]), -r2.conj());
        assert_eq!(ws.at(&[1, 0]), -r1.conj());
    }

    #[test]
    fn involution_on_real_function_and_square() {
        let base = FiniteSet::new(3).unwrap();
        let f = UniversalForm::function(base, &[c(1.0, 0.0), c(-2.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert_eq!(uinvolution(&f), f);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for degree in 0..=3 {
            let w = random_form(&mut rng, 3, degree);
            assert_eq!(uinvolution(&uinvolution(&w)), w);
        }
    }

    #[test]
    fn involution_matches_generator_formula() {
        // (a d b)* = (d b*) a*  for degree one, evaluated pointwise
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let base = FiniteSet::new(3).unwrap();
        let a = random_form(&mut rng, 3, 0);
        let b = random_form(&mut rng, 3, 0);
        let adb = uproduct(&a, &duniv(&b).unwrap()).unwrap();
        let rhs = uproduct(&duniv(&uinvolution(&b)).unwrap(), &uinvolution(&a)).unwrap();
        assert!(uinvolution(&adb).sub(&rhs).unwrap().max_abs() < 1e-14);
        // degree two: (a db1 db2)* = - db2* db1* a*
        let b2 = random_form(&mut rng, 3, 0);
        let w = uproduct(&adb, &duniv(&b2).unwrap()).unwrap();
        let rhs2 = uproduct(
            &uproduct(&duniv(&uinvolution(&b2)).unwrap(), &duniv(&uinvolution(&b)).unwrap())
                .unwrap(),
            &uinvolution(&a),
        )
        .unwrap()
        .scale(-ONE);
        assert!(uinvolution(&w).sub(&rhs2).unwrap().max_abs() < 1e-14);
        let _ = base;
    }

    #[test]
    fn two_point_curvature_values() {
        assert!(two_point_curvature(ZERO).norm() < 1e-15);
        assert!((two_point_curvature(c(-1.0, 0.0)) + ONE).norm() < 1e-15);
        for k in 0..16 {
            let th = k as f64 * 0.4;
            let r = C64::from_polar(1.0, th) - ONE;
            assert!(two_point_curvature(r).norm() < 1e-14);
        }
        let omega = two_point_connection(c(0.4, 0.9));
        let curv = connection_curvature(&omega).unwrap();
        assert_eq!(curv.at(&[0, 1, 0]), curv.at(&[1, 0, 1]));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn form_strategy(size: usize, degree: usize) -> impl Strategy<Value = UniversalForm> {
            let len = size.pow(degree as u32 + 1);
            prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), len).prop_map(move |v| {
                let base = FiniteSet::new(size).unwrap();
                UniversalForm::from_fn(base, degree, |p| {
                    let (re, im) = v[p.iter().fold(0, |a, &x| a * size + x)];
                    c(re, im)
                })
                .unwrap()
            })
        }

        proptest! {
            #[test]
            fn graded_leibniz(f in form_strategy(3, 1), g in form_strategy(3, 1)) {
                let lhs = duniv(&uproduct(&f, &g).unwrap()).unwrap();
                let rhs = uproduct(&duniv(&f).unwrap(), &g).unwrap()
                    .sub(&uproduct(&f, &duniv(&g).unwrap()).unwrap()).unwrap();
                prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
            }

            #[test]
            fn products_keep_invariant_and_associate(
                f in form_strategy(4, 1), g in form_strategy(4, 0), h in form_strategy(4, 1)
            ) {
                let left = uproduct(&uproduct(&f, &g).unwrap(), &h).unwrap();
                let right = uproduct(&f, &uproduct(&g, &h).unwrap()).unwrap();
                prop_assert!(left.sub(&right).unwrap().max_abs() < 1e-12);
                prop_assert_eq!(left.diagonal_leak(), 0.0);
                prop_assert_eq!(duniv(&left).unwrap().diagonal_leak(), 0.0);
                prop_assert_eq!(uinvolution(&left).diagonal_leak(), 0.0);
            }

            #[test]
            fn d_squared_degree_two(f in form_strategy(4, 1)) {
                let ddf = duniv(&duniv(&f).unwrap()).unwrap();
                prop_assert!(ddf.max_abs() < 1e-12);
            }

            #[test]
            fn involution_reverses_products(
                f in form_strategy(3, 1), g in form_strategy(3, 2), h in form_strategy(3, 1)
            ) {
                // (fg)* = (-1)^{pq} g* f*
                let lhs = uinvolution(&uproduct(&f, &g).unwrap());
                let rhs = uproduct(&uinvolution(&g), &uinvolution(&f)).unwrap();
                prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
                let lhs = uinvolution(&uproduct(&f, &h).unwrap());
                let rhs = uproduct(&uinvolution(&h), &uinvolution(&f)).unwrap().scale(-ONE);
                prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
            }

            #[test]
            fn d_commutes_with_involution(f in form_strategy(3, 1)) {
                let lhs = uinvolution(&duniv(&f).unwrap());
                let rhs = duniv(&uinvolution(&f)).unwrap();
                prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
            }

            #[test]
            fn curvature_is_modulus_shift(re in -3.0f64..3.0, im in -3.0f64..3.0) {
                let r = c(re, im);
                let want = (r + ONE).norm_sqr() - 1.0;
                prop_assert!((two_point_curvature(r) - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }
}
