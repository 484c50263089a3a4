//! Lag plants `P(λ) = n̂(λ)/d̂(λ)` and their primal and dual realizations.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::{serde_scalar_vec, Scalar};

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("numerator and denominator must both have m + 1 >= 2 coefficients (got {n} and {d})")]
    BadLength { n: usize, d: usize },
    #[error("plant has direct feedthrough (n0 != 0); only lag plants are supported")]
    FeedthroughNotSupported,
    #[error("denominator has d0 = 0 or dm = 0")]
    SingularD,
    #[error("numerator and denominator share a non-constant factor")]
    NotCoprime,
    #[error("cannot read plant file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed plant file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Validated plant of order `m` with `n0 = 0` and `d0 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PlantModel<S: Scalar> {
    #[serde(with = "serde_scalar_vec")]
    n: Vec<S>,
    #[serde(with = "serde_scalar_vec")]
    d: Vec<S>,
}

/// `x⁺ = A x + B u`, `y = C x`.
#[derive(Debug, Clone)]
pub struct PrimalRealization<S: Scalar> {
    pub a: Matrix<S>,
    pub b: Vec<S>,
    pub c: Vec<S>,
}

/// `x*⁺ = A* x* + B* y*`, `u* = C* x* + D* y*`.
#[derive(Debug, Clone)]
pub struct DualRealization<S: Scalar> {
    pub a_star: Matrix<S>,
    pub b_star: Vec<S>,
    pub c_star: Vec<S>,
    pub d_star: S,
}

/// Validate coefficient lists and normalize so that `d0 = 1`.
pub fn parse_plant<S: Scalar>(n_coeffs: &[S], d_coeffs: &[S]) -> Result<PlantModel<S>, PlantError> {
    if n_coeffs.len() != d_coeffs.len() || n_coeffs.len() < 2 {
        return Err(PlantError::BadLength { n: n_coeffs.len(), d: d_coeffs.len() });
    }
    if !n_coeffs[0].is_zero() {
        return Err(PlantError::FeedthroughNotSupported);
    }
    let m = n_coeffs.len() - 1;
    if d_coeffs[0].is_zero() || d_coeffs[m].is_zero() {
        return Err(PlantError::SingularD);
    }
    let d0 = d_coeffs[0].clone();
    let n: Vec<S> = n_coeffs.iter().map(|c| c.clone() / &d0).collect();
    let d: Vec<S> = d_coeffs.iter().map(|c| c.clone() / &d0).collect();
    if poly_degree(&poly_gcd(&n, &d)) != Some(0) {
        return Err(PlantError::NotCoprime);
    }
    Ok(PlantModel { n, d })
}

impl<S: Scalar> PlantModel<S> {
    pub fn order(&self) -> usize {
        self.n.len() - 1
    }

    /// Numerator coefficients `n0..nm`.
    pub fn numerator(&self) -> &[S] {
        &self.n
    }

    /// Denominator coefficients `d0..dm` (with `d0 = 1`).
    pub fn denominator(&self) -> &[S] {
        &self.d
    }

    pub fn n_m(&self) -> &S {
        &self.n[self.order()]
    }

    pub fn d_m(&self) -> &S {
        &self.d[self.order()]
    }

    /// Output row `C = (nm, ..., n1)`.
    pub fn output_row(&self) -> Vec<S> {
        let m = self.order();
        (0..m).map(|j| self.n[m - j].clone()).collect()
    }

    pub fn from_json_str(text: &str) -> Result<Self, PlantError> {
        let raw: PlantModel<S> = serde_json::from_str(text)?;
        parse_plant(&raw.n, &raw.d)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, PlantError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plant serializes")
    }

    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> PlantModel<T> {
        PlantModel { n: self.n.iter().map(&f).collect(), d: self.d.iter().map(&f).collect() }
    }
}

/// Companion-form realization; `A` is invertible because `dm != 0`.
pub fn primal_realization<S: Scalar>(p: &PlantModel<S>) -> PrimalRealization<S> {
    let m = p.order();
    let mut a = Matrix::zeros(m, m);
    for i in 0..m - 1 {
        a[(i, i + 1)] = S::one();
    }
    for j in 0..m {
        a[(m - 1, j)] = -p.d[m - j].clone();
    }
    let mut b = vec![S::zero(); m];
    b[m - 1] = S::one();
    PrimalRealization { a, b, c: p.output_row() }
}

/// Minimal realization of the dual system.
///
/// Also valid for `m = 1`, where `A* = [-1/d1]`.
pub fn dual_realization<S: Scalar>(p: &PlantModel<S>) -> DualRealization<S> {
    let m = p.order();
    let dm = p.d_m().clone();
    let nm = p.n_m().clone();
    let mut a_star = Matrix::zeros(m, m);
    for i in 0..m {
        a_star[(i, 0)] = -(p.d[m - 1 - i].clone() / &dm);
        if i + 1 < m {
            a_star[(i, i + 1)] = S::one();
        }
    }
    let ratio = nm.clone() / &dm;
    let b_star = (0..m)
        .map(|i| p.n[m - 1 - i].clone() - p.d[m - 1 - i].mul_ref(&ratio))
        .collect();
    let mut c_star = vec![S::zero(); m];
    c_star[0] = -(S::one() / &dm);
    let dual = DualRealization { a_star, b_star, c_star, d_star: -ratio };
    // (A* f)_m = -(f)_1 / dm, checked on the standard basis.
    for j in 0..m {
        let expected = if j == 0 { -(S::one() / &dm) } else { S::zero() };
        assert!(dual.a_star[(m - 1, j)].same(&expected), "dual realization lost its last-row structure");
    }
    dual
}

fn trim<S: Scalar>(p: &mut Vec<S>) {
    while p.last().is_some_and(Scalar::is_zero) {
        p.pop();
    }
}

/// Degree of a coefficient vector (low order first); `None` for the zero polynomial.
pub fn poly_degree<S: Scalar>(p: &[S]) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

fn poly_rem<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    let mut r = a.to_vec();
    trim(&mut r);
    let db = poly_degree(b).expect("division by zero polynomial");
    let lead = b[db].clone();
    while let Some(dr) = poly_degree(&r) {
        if dr < db {
            break;
        }
        let factor = r[dr].clone() / &lead;
        for i in 0..=db {
            let delta = factor.mul_ref(&b[i]);
            r[dr - db + i] = r[dr - db + i].clone() - &delta;
        }
        r[dr] = S::zero();
        trim(&mut r);
    }
    r
}

/// Greatest common divisor by the Euclidean algorithm (not normalized).
pub fn poly_gcd<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    trim(&mut x);
    trim(&mut y);
    while poly_degree(&y).is_some() {
        let r = poly_rem(&x, &y);
        x = y;
        y = r;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn qs(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| Rational::from_i64(x)).collect()
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn parse_examples() {
        let p = parse_plant(&qs(&[0, 1, 0]), &qs(&[1, 0, -1])).unwrap();
        assert_eq!(p.order(), 2);
        assert!(matches!(
            parse_plant(&qs(&[1, 1]), &qs(&[1, 2])),
            Err(PlantError::FeedthroughNotSupported)
        ));
        assert!(matches!(parse_plant(&qs(&[0, 1, 1]), &qs(&[1, 1, 0])), Err(PlantError::SingularD)));
        assert!(matches!(parse_plant(&qs(&[0, 1, 1]), &qs(&[0, 1, 1])), Err(PlantError::SingularD)));
        // n̂ = λ(1+λ), d̂ = (1+λ)(1+2λ)
        assert!(matches!(parse_plant(&qs(&[0, 1, 1]), &qs(&[1, 3, 2])), Err(PlantError::NotCoprime)));
        assert!(matches!(parse_plant(&qs(&[0, 0, 0]), &qs(&[1, 3, 2])), Err(PlantError::NotCoprime)));
        assert!(matches!(parse_plant(&qs(&[0, 1]), &qs(&[1, 2, 3])), Err(PlantError::BadLength { .. })));
    }

    #[test]
    fn parse_normalizes_d0() {
        let p = parse_plant(&qs(&[0, 2, 4]), &qs(&[2, 0, -2])).unwrap();
        assert_eq!(p.denominator(), qs(&[1, 0, -1]).as_slice());
        assert_eq!(p.numerator(), qs(&[0, 1, 2]).as_slice());
        let again = parse_plant(p.numerator(), p.denominator()).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn primal_examples() {
        let p = parse_plant(&qs(&[0, 1, 0]), &qs(&[1, 0, -1])).unwrap();
        let r = primal_realization(&p);
        assert_eq!(r.a, Matrix::from_rows(vec![qs(&[0, 1]), qs(&[1, 0])]));
        assert_eq!(r.b, qs(&[0, 1]));
        assert_eq!(r.c, qs(&[0, 1]));

        let p = parse_plant(&qs(&[0, 1]), &qs(&[1, 2])).unwrap();
        let r = primal_realization(&p);
        assert_eq!(r.a, Matrix::from_rows(vec![qs(&[-2])]));
        assert_eq!(r.b, qs(&[1]));
        assert_eq!(r.c, qs(&[1]));

        let p = parse_plant(&qs(&[0, 0, 1]), &qs(&[1, 3, 2])).unwrap();
        let r = primal_realization(&p);
        assert_eq!(r.a, Matrix::from_rows(vec![qs(&[0, 1]), qs(&[-2, -3])]));
        assert_eq!(r.b, qs(&[0, 1]));
        assert_eq!(r.c, qs(&[1, 0]));
    }

    #[test]
    fn dual_examples() {
        let p = parse_plant(&qs(&[0, 1, 0]), &qs(&[1, 0, -1])).unwrap();
        let r = dual_realization(&p);
        assert_eq!(r.a_star, Matrix::from_rows(vec![qs(&[0, 1]), qs(&[1, 0])]));
        assert_eq!(r.b_star, qs(&[1, 0]));
        assert_eq!(r.c_star, qs(&[1, 0]));
        assert_eq!(r.d_star, q(0, 1));

        let p = parse_plant(&qs(&[0, 0, 1]), &qs(&[1, 3, 2])).unwrap();
        let r = dual_realization(&p);
        assert_eq!(
            r.a_star,
            Matrix::from_rows(vec![vec![q(-3, 2), q(1, 1)], vec![q(-1, 2), q(0, 1)]])
        );
        assert_eq!(r.b_star, vec![q(-3, 2), q(-1, 2)]);
        assert_eq!(r.c_star, vec![q(-1, 2), q(0, 1)]);
        assert_eq!(r.d_star, q(-1, 2));

        // (f)_1 = 0 ⇒ (A* f)_m = 0
        let f = vec![q(0, 1), q(7, 3)];
        assert!(r.a_star.mul_vec(&f)[1].is_zero());
    }

    #[test]
    fn plant_json_round_trip() {
        let p = PlantModel::<Rational>::from_json_str(r#"{"n": ["0", "1/2", 1], "d": ["1", "-1/4", "0.5"]}"#).unwrap();
        assert_eq!(p.numerator(), &[q(0, 1), q(1, 2), q(1, 1)]);
        let back = PlantModel::<Rational>::from_json_str(&p.to_json()).unwrap();
        assert_eq!(back, p);
        assert!(PlantModel::<Rational>::from_json_str(r#"{"n": ["1", "1"], "d": ["1", "2"]}"#).is_err());
    }

    #[test]
    fn gcd_detects_common_root() {
        // (1 - λ/2)(1 + λ) and λ(1 - λ/2)
        let a = vec![q(1, 1), q(1, 2), q(-1, 2)];
        let b = vec![q(0, 1), q(1, 1), q(-1, 2)];
        assert_eq!(poly_degree(&poly_gcd(&a, &b)), Some(1));
    }
}
