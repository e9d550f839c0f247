//! The polynomial `F̃_p(T;X)`, the rational function `A_{S,T}(X)` built
//! from it, the derivative `α′ = A′(1)`, and the closed expression for the
//! intersection number together with its relation to `α′`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::quadform::TInvariants;

/// A polynomial with exact rational coefficients, lowest degree first.
/// Trailing zero coefficients are trimmed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct IntPolynomial {
    coeffs: Vec<BigRational>,
}

impl IntPolynomial {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::from_coeffs(vec![c])
    }

    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    /// `c · X^k`.
    pub fn monomial(c: BigRational, k: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); k + 1];
        coeffs[k] = c;
        Self::from_coeffs(coeffs)
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    /// Adds `c · X^k` in place.
    pub fn add_term(&mut self, c: &BigRational, k: usize) {
        if self.coeffs.len() <= k {
            self.coeffs.resize(k + 1, BigRational::zero());
        }
        self.coeffs[k] += c;
        self.trim();
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * BigRational::from_integer(BigInt::from(k)))
            .collect();
        Self::from_coeffs(coeffs)
    }

    /// `P(-X)`.
    pub fn reflect(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 1 { -c } else { c.clone() })
            .collect();
        Self::from_coeffs(coeffs)
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|c| c * s).collect())
    }
}

impl Add for &IntPolynomial {
    type Output = IntPolynomial;
    fn add(self, rhs: &IntPolynomial) -> IntPolynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        IntPolynomial::from_coeffs((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &IntPolynomial {
    type Output = IntPolynomial;
    fn sub(self, rhs: &IntPolynomial) -> IntPolynomial {
        self + &(-rhs)
    }
}

impl Neg for &IntPolynomial {
    type Output = IntPolynomial;
    fn neg(self) -> IntPolynomial {
        IntPolynomial::from_coeffs(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &IntPolynomial {
    type Output = IntPolynomial;
    fn mul(self, rhs: &IntPolynomial) -> IntPolynomial {
        if self.is_zero() || rhs.is_zero() {
            return IntPolynomial::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPolynomial::from_coeffs(out)
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (sign, mag) = if c.is_negative() { ("-", -c) } else { ("+", c.clone()) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            match (k, mag.is_one()) {
                (0, _) => write!(f, "{mag}")?,
                (_, true) => {}
                _ => write!(f, "{mag}*")?,
            }
            match k {
                0 => {}
                1 => write!(f, "X")?,
                _ => write!(f, "X^{k}")?,
            }
        }
        Ok(())
    }
}

fn rat(x: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(x.into())
}

fn pow_p(p: u64, k: i64) -> BigRational {
    let base = rat(p);
    if k >= 0 {
        num_traits::pow(base, k as usize)
    } else {
        num_traits::pow(base.recip(), (-k) as usize)
    }
}

/// Halves an exponent expression that must be even.
pub(crate) fn half(x: i64, what: &str) -> Result<i64> {
    if x % 2 != 0 {
        return Err(Error::NonIntegral(format!("{what} = {x}/2")));
    }
    Ok(x / 2)
}

/// Shape data shared by `F̃` and the closed formula.
struct SumShape {
    a1: i64,
    a2: i64,
    a3: i64,
    sigma: i64,
    /// `(a_1 + a_2 - σ)/2`
    h: i64,
    /// Upper index of the inner sum in the `ξ̃`-part.
    j3: i64,
}

impl SumShape {
    fn of(inv: &TInvariants) -> Result<Self> {
        let [a1, a2, a3] = inv.a.map(i64::from);
        let sigma = i64::from(inv.sigma);
        let h = half(a1 + a2 - sigma, "a1 + a2 - sigma")?;
        Ok(Self { a1, a2, a3, sigma, h, j3: a3 - a2 + 2 * sigma - 4 })
    }

    /// Calls `f(coefficient, exponent of X)` for every term of `F̃`.
    fn for_each_term(&self, inv: &TInvariants, mut f: impl FnMut(BigRational, i64)) {
        let p = inv.prime;
        let eta = rat(inv.eta);
        for i in 0..=self.a1 {
            for j in 0..=(self.h - i) {
                f(pow_p(p, i + j), i + 2 * j);
                f(&eta * pow_p(p, self.h - j), self.a3 + self.sigma + i + 2 * j);
            }
        }
        if inv.xi_tilde != 0 {
            let xi = rat(inv.xi_tilde);
            let lead = pow_p(p, self.h + 1) * &xi * &xi;
            for i in 0..=self.a1 {
                for j in 0..=self.j3 {
                    let c = &lead * num_traits::pow(xi.clone(), j as usize);
                    f(c, self.a2 - self.sigma + 2 + i + j);
                }
            }
        }
    }
}

/// The polynomial `F̃_p(T;X)`.
pub fn ftilde(inv: &TInvariants) -> Result<IntPolynomial> {
    let shape = SumShape::of(inv)?;
    let mut poly = IntPolynomial::zero();
    let mut bad = None;
    shape.for_each_term(inv, |c, k| match usize::try_from(k) {
        Ok(k) => poly.add_term(&c, k),
        Err(_) => bad = Some(k),
    });
    if let Some(k) = bad {
        return Err(Error::ConsistencyViolation(format!("negative power X^{k} in F-tilde")));
    }
    Ok(poly)
}

/// `(1 + p⁻²X)(1 - p⁻²X²)·F̃(-X)`.
pub fn a_series(inv: &TInvariants) -> Result<IntPolynomial> {
    let p2 = pow_p(inv.prime, -2);
    let lin = IntPolynomial::from_coeffs(vec![BigRational::one(), p2.clone()]);
    let quad = IntPolynomial::from_coeffs(vec![BigRational::one(), BigRational::zero(), -p2]);
    Ok(&(&lin * &quad) * &ftilde(inv)?.reflect())
}

/// `A′(1)`.
pub fn alpha_prime(inv: &TInvariants) -> Result<BigRational> {
    Ok(a_series(inv)?.derivative().eval(&BigRational::one()))
}

/// The scalar `-p⁴ / ((p²+1)(p²-1))` relating `α′` to the intersection number.
pub fn density_scale(p: u64) -> BigRational {
    let p2 = rat(p) * rat(p);
    -(&p2 * &p2) / ((&p2 + BigRational::one()) * (&p2 - BigRational::one()))
}

/// The closed expression for the intersection number, evaluated term by
/// term (it equals `-d/dX F̃(-X)` at `X = 1`, but is summed directly here).
pub fn closed_intersection(inv: &TInvariants) -> Result<BigInt> {
    if !inv.is_admissible() {
        return Err(Error::Inadmissible);
    }
    let s = SumShape::of(inv)?;
    let p = inv.prime;
    let pi = |k: i64| num_traits::pow(BigInt::from(p), k as usize);
    let sgn = |k: i64| if k.rem_euclid(2) == 0 { BigInt::one() } else { -BigInt::one() };
    let eta = BigInt::from(inv.eta);
    let mut total = BigInt::zero();
    for i in 0..=s.a1 {
        for j in 0..=(s.h - i) {
            total -= pi(i + j) * sgn(i) * (i + 2 * j);
            total -= &eta * pi(s.h - j) * sgn(s.a3 + s.sigma + i) * (s.a3 + s.sigma + i + 2 * j);
        }
    }
    if inv.xi_tilde != 0 {
        let xi = BigInt::from(inv.xi_tilde);
        for i in 0..=s.a1 {
            for j in 0..=s.j3 {
                let xj = num_traits::pow(xi.clone(), j as usize);
                total -= pi(s.h + 1) * xj * sgn(s.a2 - s.sigma + i + j) * (s.a2 - s.sigma + 2 + i + j);
            }
        }
    }
    Ok(total)
}

/// Both sides of the relation between the intersection number and `α′`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationReport {
    pub closed: BigInt,
    pub alpha_prime: BigRational,
    /// `-p⁴/((p²+1)(p²-1)) · α′`
    pub from_density: BigRational,
}

/// Checks `closed = -p⁴/((p²+1)(p²-1)) · α′` exactly.
pub fn relation_check(inv: &TInvariants) -> Result<RelationReport> {
    let closed = closed_intersection(inv)?;
    let ap = alpha_prime(inv)?;
    let from_density = density_scale(inv.prime) * &ap;
    if from_density != BigRational::from_integer(closed.clone()) {
        return Err(Error::ConsistencyViolation(format!(
            "closed value {closed} but density side gives {from_density} for {:?}",
            inv.a
        )));
    }
    Ok(RelationReport { closed, alpha_prime: ap, from_density })
}
