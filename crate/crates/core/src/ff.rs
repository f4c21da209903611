// SPDX-License-Identifier: Apache-2.0

//! Arithmetic in the Mersenne prime field `p = 2^61 - 1` and dense univariate
//! polynomials over it.

use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// The field modulus, `2^61 - 1`.
pub const MODULUS: u64 = (1 << 61) - 1;

/// An element of `GF(2^61 - 1)` held in canonical form.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement(u64);

#[inline]
fn reduce128(x: u128) -> u64 {
    // x < 2^122 for products of canonical values, so two folds suffice.
    let folded = (x & MODULUS as u128) + (x >> 61);
    let folded = ((folded & MODULUS as u128) + (folded >> 61)) as u64;
    if folded >= MODULUS {
        folded - MODULUS
    } else {
        folded
    }
}

impl FieldElement {
    pub const ZERO: Self = Self(0);
    pub const ONE: Self = Self(1);

    /// Reduces an arbitrary `u64` into the field.
    pub const fn new(value: u64) -> Self {
        let folded = (value & MODULUS) + (value >> 61);
        if folded >= MODULUS {
            Self(folded - MODULUS)
        } else {
            Self(folded)
        }
    }

    /// Accepts `value` only if it is already canonical.
    pub fn from_canonical(value: u64) -> Option<Self> {
        (value < MODULUS).then_some(Self(value))
    }

    pub const fn value(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Interprets `bytes` as a big-endian integer and reduces it modulo p.
    pub fn from_be_bytes_mod_order(bytes: &[u8]) -> Self {
        // 2^8 folds cleanly: acc * 256 + b stays below 2^69 before reduction.
        bytes.iter().fold(Self::ZERO, |acc, &b| {
            Self(reduce128(((acc.0 as u128) << 8) + b as u128))
        })
    }

    pub fn pow(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = Self::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= base;
            }
            base *= base;
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inverse(self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(MODULUS - 2))
    }

    /// Samples uniformly from `[0, p)` by rejection on 61-bit draws.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let candidate = rng.random::<u64>() >> 3;
            if candidate < MODULUS {
                return Self(candidate);
            }
        }
    }

    pub fn to_le_bytes(self) -> [u8; 8] {
        self.0.to_le_bytes()
    }

    pub fn from_le_bytes(bytes: [u8; 8]) -> Result<Self> {
        let raw = u64::from_le_bytes(bytes);
        Self::from_canonical(raw)
            .ok_or_else(|| Error::Decode(format!("non-canonical field element {raw}")))
    }

    /// 16 lowercase hex digits.
    pub fn to_hex(self) -> String {
        format!("{:016x}", self.0)
    }

    /// Strict inverse of [`FieldElement::to_hex`]: exactly 16 lowercase hex
    /// digits encoding a canonical value.
    pub fn from_hex(s: &str) -> Result<Self> {
        let well_formed = s.len() == 16
            && s
                .bytes()
                .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
        if !well_formed {
            return Err(Error::Decode(format!("bad field element hex `{s}`")));
        }
        let raw = u64::from_str_radix(s, 16).map_err(|e| Error::Decode(e.to_string()))?;
        Self::from_canonical(raw)
            .ok_or_else(|| Error::Decode(format!("non-canonical field element {raw}")))
    }
}

pub fn fe_add(a: FieldElement, b: FieldElement) -> FieldElement {
    a + b
}

pub fn fe_sub(a: FieldElement, b: FieldElement) -> FieldElement {
    a - b
}

pub fn fe_mul(a: FieldElement, b: FieldElement) -> FieldElement {
    a * b
}

pub fn fe_inv(a: FieldElement) -> Result<FieldElement> {
    a.inverse()
}

pub fn fe_random<R: Rng + ?Sized>(rng: &mut R) -> FieldElement {
    FieldElement::random(rng)
}

impl From<u32> for FieldElement {
    fn from(v: u32) -> Self {
        Self(v as u64)
    }
}

impl From<u64> for FieldElement {
    fn from(v: u64) -> Self {
        Self::new(v)
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for FieldElement {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let sum = self.0 + rhs.0;
        if sum >= MODULUS {
            Self(sum - MODULUS)
        } else {
            Self(sum)
        }
    }
}

impl Sub for FieldElement {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        if self.0 >= rhs.0 {
            Self(self.0 - rhs.0)
        } else {
            Self(self.0 + MODULUS - rhs.0)
        }
    }
}

impl Mul for FieldElement {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self(reduce128(self.0 as u128 * rhs.0 as u128))
    }
}

impl Neg for FieldElement {
    type Output = Self;
    fn neg(self) -> Self {
        Self::ZERO - self
    }
}

impl AddAssign for FieldElement {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for FieldElement {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl MulAssign for FieldElement {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl Sum for FieldElement {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

impl Product for FieldElement {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ONE, Mul::mul)
    }
}

impl Serialize for FieldElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for FieldElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Dense polynomial; `coeffs[i]` is the coefficient of `X^i`. Always
/// normalized: no trailing zero coefficients, empty for the zero polynomial.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FieldElement>", into = "Vec<FieldElement>")]
pub struct Polynomial {
    coeffs: Vec<FieldElement>,
}

impl TryFrom<Vec<FieldElement>> for Polynomial {
    type Error = Error;
    fn try_from(coeffs: Vec<FieldElement>) -> Result<Self> {
        if coeffs.last().is_some_and(|c| c.is_zero()) {
            return Err(Error::Decode("polynomial has a zero leading coefficient".into()));
        }
        Ok(Self { coeffs })
    }
}

impl From<Polynomial> for Vec<FieldElement> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: FieldElement) -> Self {
        Self::new(vec![c])
    }

    /// Builds a polynomial from low-to-high coefficients, trimming zeros.
    pub fn new(mut coeffs: Vec<FieldElement>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// `∏ (X - r)` over `roots`.
    pub fn from_roots(roots: &[FieldElement]) -> Self {
        let mut coeffs = vec![FieldElement::ONE];
        for &r in roots {
            let mut next = vec![FieldElement::ZERO; coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * r;
            }
            coeffs = next;
        }
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading_coefficient(&self) -> Option<FieldElement> {
        self.coeffs.last().copied()
    }

    /// Horner evaluation.
    pub fn eval(&self, x: FieldElement) -> FieldElement {
        self.coeffs
            .iter()
            .rev()
            .fold(FieldElement::ZERO, |acc, &c| acc * x + c)
    }

    pub fn scale(&self, k: FieldElement) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * k).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| self.coeff(i) + other.coeff(i))
            .collect();
        Self::new(coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| self.coeff(i) - other.coeff(i))
            .collect();
        Self::new(coeffs)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![FieldElement::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self::new(coeffs)
    }

    /// Euclidean division: returns `(q, r)` with `self = divisor·q + r` and
    /// `deg r < deg divisor`.
    pub fn divrem(&self, divisor: &Self) -> Result<(Self, Self)> {
        let lead = divisor
            .leading_coefficient()
            .ok_or(Error::ZeroPolynomialDivisor)?;
        let dlen = divisor.coeffs.len();
        if self.coeffs.len() < dlen {
            return Ok((Self::zero(), self.clone()));
        }
        let lead_inv = lead.inverse()?;
        let mut rem = self.coeffs.clone();
        let mut quot = vec![FieldElement::ZERO; rem.len() - dlen + 1];
        for shift in (0..quot.len()).rev() {
            let factor = rem[shift + dlen - 1] * lead_inv;
            quot[shift] = factor;
            if factor.is_zero() {
                continue;
            }
            for (k, &d) in divisor.coeffs.iter().enumerate() {
                rem[shift + k] -= factor * d;
            }
        }
        rem.truncate(dlen - 1);
        Ok((Self::new(quot), Self::new(rem)))
    }

    /// Lagrange interpolation through `points`; the result has degree
    /// strictly less than `points.len()`.
    pub fn interpolate(points: &[(FieldElement, FieldElement)]) -> Result<Self> {
        let xs: Vec<FieldElement> = points.iter().map(|&(x, _)| x).collect();
        let basis = lagrange_basis(&xs)?;
        let mut acc = vec![FieldElement::ZERO; points.len()];
        for (basis_poly, &(_, y)) in basis.iter().zip(points) {
            if y.is_zero() {
                continue;
            }
            for (slot, &c) in acc.iter_mut().zip(basis_poly.coeffs()) {
                *slot += c * y;
            }
        }
        Ok(Self::new(acc))
    }

    fn coeff(&self, i: usize) -> FieldElement {
        self.coeffs.get(i).copied().unwrap_or_default()
    }
}

/// Lagrange basis polynomials `L_i` for the nodes `xs`, with
/// `L_i(xs[j]) = [i == j]`.
pub fn lagrange_basis(xs: &[FieldElement]) -> Result<Vec<Polynomial>> {
    for (i, a) in xs.iter().enumerate() {
        if xs[..i].contains(a) {
            return Err(Error::DuplicateAbscissa(a.to_string()));
        }
    }
    let master = Polynomial::from_roots(xs);
    xs.iter()
        .map(|&xi| {
            // Synthetic division of the master polynomial by (X - xi).
            let m = master.coeffs();
            let mut quot = vec![FieldElement::ZERO; m.len() - 1];
            let mut carry = FieldElement::ZERO;
            for k in (1..m.len()).rev() {
                carry = m[k] + carry * xi;
                quot[k - 1] = carry;
            }
            let numerator = Polynomial::new(quot);
            let denom = numerator.eval(xi).inverse()?;
            Ok(numerator.scale(denom))
        })
        .collect()
}

pub fn poly_eval(p: &Polynomial, x: FieldElement) -> FieldElement {
    p.eval(x)
}

pub fn poly_interpolate(points: &[(FieldElement, FieldElement)]) -> Result<Polynomial> {
    Polynomial::interpolate(points)
}

pub fn poly_mul(p: &Polynomial, q: &Polynomial) -> Polynomial {
    p.mul(q)
}

pub fn poly_divrem(p: &Polynomial, d: &Polynomial) -> Result<(Polynomial, Polynomial)> {
    p.divrem(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn fe(v: u64) -> FieldElement {
        FieldElement::new(v)
    }

    fn poly(cs: &[i64]) -> Polynomial {
        Polynomial::new(
            cs.iter()
                .map(|&c| {
                    if c < 0 {
                        -fe(c.unsigned_abs())
                    } else {
                        fe(c as u64)
                    }
                })
                .collect(),
        )
    }

    #[test]
    fn wraparound_and_identity() {
        assert_eq!(fe_add(fe(MODULUS - 1), FieldElement::ONE), FieldElement::ZERO);
        assert_eq!(fe_sub(FieldElement::ZERO, FieldElement::ONE), fe(MODULUS - 1));
        let x = fe(123_456_789_012_345);
        assert_eq!(fe_mul(x, FieldElement::ONE), x);
    }

    #[test]
    fn product_of_two_pow31_reduces_to_two() {
        // 2^62 mod (2^61 - 1), computed with Python big integers.
        assert_eq!(fe_mul(fe(1 << 31), fe(1 << 31)), fe(2));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(fe_inv(FieldElement::ONE).unwrap(), FieldElement::ONE);
        assert_eq!(fe_inv(fe(2)).unwrap().value(), 1_152_921_504_606_846_976);
        assert!(matches!(fe_inv(FieldElement::ZERO), Err(Error::DivisionByZero)));
    }

    #[test]
    fn new_reduces() {
        assert_eq!(FieldElement::new(MODULUS), FieldElement::ZERO);
        assert_eq!(FieldElement::new(u64::MAX).value(), u64::MAX % MODULUS);
        assert!(FieldElement::from_canonical(MODULUS).is_none());
    }

    #[test]
    fn random_is_seed_deterministic_and_in_range() {
        let a = fe_random(&mut ChaCha20Rng::seed_from_u64(7));
        let b = fe_random(&mut ChaCha20Rng::seed_from_u64(7));
        assert_eq!(a, b);
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        for _ in 0..10_000 {
            assert!(fe_random(&mut rng).value() < MODULUS);
        }
    }

    #[test]
    fn distinct_seeds_give_distinct_draws() {
        let draws: std::collections::HashSet<_> = (0..200u64)
            .map(|s| fe_random(&mut ChaCha20Rng::seed_from_u64(s)))
            .collect();
        assert_eq!(draws.len(), 200);
    }

    #[test]
    fn hex_and_bytes() {
        let x = fe(0xdead_beef);
        assert_eq!(x.to_hex(), "00000000deadbeef");
        assert_eq!(FieldElement::from_hex(&x.to_hex()).unwrap(), x);
        assert!(FieldElement::from_hex("00000000DEADBEEF").is_err());
        assert!(FieldElement::from_hex("1fffffffffffffff").is_err());
        assert_eq!(FieldElement::from_le_bytes(x.to_le_bytes()).unwrap(), x);
        assert!(FieldElement::from_le_bytes(MODULUS.to_le_bytes()).is_err());
    }

    #[test]
    fn be_bytes_reduction_matches_small_values() {
        assert_eq!(FieldElement::from_be_bytes_mod_order(&[1, 0]), fe(256));
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&MODULUS.to_be_bytes());
        assert_eq!(FieldElement::from_be_bytes_mod_order(&bytes), FieldElement::ZERO);
    }

    #[test]
    fn eval_examples() {
        assert_eq!(poly(&[0, 0, 1]).eval(fe(3)), fe(9));
        assert_eq!(Polynomial::zero().eval(fe(42)), FieldElement::ZERO);
    }

    #[test]
    fn interpolate_examples() {
        let pts = [(fe(1), fe(1)), (fe(2), fe(4)), (fe(3), fe(9))];
        assert_eq!(poly_interpolate(&pts).unwrap(), poly(&[0, 0, 1]));
        assert_eq!(
            poly_interpolate(&[(fe(5), fe(7))]).unwrap(),
            Polynomial::constant(fe(7))
        );
        assert!(matches!(
            poly_interpolate(&[(fe(1), fe(1)), (fe(1), fe(2))]),
            Err(Error::DuplicateAbscissa(_))
        ));
        assert!(poly_interpolate(&[]).unwrap().is_zero());
    }

    #[test]
    fn mul_and_divrem_examples() {
        let prod = poly_mul(&poly(&[-1, 1]), &poly(&[1, 1]));
        assert_eq!(prod, poly(&[-1, 0, 1]));
        let (q, r) = poly_divrem(&prod, &poly(&[-1, 1])).unwrap();
        assert_eq!(q, poly(&[1, 1]));
        assert!(r.is_zero());
        assert!(matches!(
            poly_divrem(&prod, &Polynomial::zero()),
            Err(Error::ZeroPolynomialDivisor)
        ));
    }

    #[test]
    fn from_roots_vanishes_on_roots() {
        let roots: Vec<_> = (1..=5).map(fe).collect();
        let t = Polynomial::from_roots(&roots);
        assert_eq!(t.degree(), Some(5));
        assert!(roots.iter().all(|&r| t.eval(r).is_zero()));
        assert!(!t.eval(fe(6)).is_zero());
    }

    #[test]
    fn polynomial_json_rejects_unnormalized() {
        let p = poly(&[1, 2, 3]);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<Polynomial>(&json).unwrap(), p);
        let bad = r#"["0000000000000001","0000000000000000"]"#;
        assert!(serde_json::from_str::<Polynomial>(bad).is_err());
    }
}
