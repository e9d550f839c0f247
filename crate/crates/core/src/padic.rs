//! Finite-precision arithmetic in `Z_p` and in the unramified quadratic
//! extension `Z_{p^2} = Z_p[δ]`, `δ² = Δ`.
//!
//! Values are residues modulo `p^N` that remember their precision `N`.
//! Arithmetic between values of different precision happens at the smaller
//! one. A value is either *known* to be exactly zero, or it is a residue
//! whose valuation can be read off as long as it stays below `N - GUARD`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Digits at the top of the working precision that are never trusted when
/// reading off a valuation.
pub const GUARD: u32 = 4;

/// Working precision used when the largest exponent in play is `a_max`.
pub fn default_precision(a_max: u32) -> u32 {
    2 * a_max + 12
}

/// Fails unless `p` is an odd prime.
pub fn check_prime(p: u64) -> Result<()> {
    if p < 3 || p.is_multiple_of(2) {
        return Err(Error::InvalidPrime(p));
    }
    let mut d = 3u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return Err(Error::InvalidPrime(p));
        }
        d += 2;
    }
    Ok(())
}

/// The smallest positive integer that is a non-square unit mod `p`.
pub fn nonsquare_unit(p: u64) -> u64 {
    (2..p)
        .find(|&d| legendre_u64(d, p) == -1)
        .expect("every odd prime has a non-square unit")
}

fn pow_mod_u64(b: u64, mut e: u64, m: u64) -> u64 {
    let m = m as u128;
    let mut acc = 1u128;
    let mut base = b as u128 % m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        e >>= 1;
    }
    acc as u64
}

/// Legendre symbol of `u` modulo `p` for machine-sized inputs; 0 if `p | u`.
pub fn legendre_u64(u: u64, p: u64) -> i8 {
    let u = u % p;
    if u == 0 {
        return 0;
    }
    if pow_mod_u64(u, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Legendre symbol of an arbitrary integer modulo `p`; 0 if `p | u`.
pub fn legendre(u: &BigInt, p: u64) -> i8 {
    let r = u.mod_floor(&BigInt::from(p)).to_u64().expect("residue below p");
    legendre_u64(r, p)
}

/// `p`-adic valuation of a nonzero integer.
pub fn int_valuation(x: &BigInt, p: u64) -> Option<u32> {
    if x.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut k = 0;
    let mut y = x.clone();
    loop {
        let (q, r) = y.div_rem(&pb);
        if !r.is_zero() {
            return Some(k);
        }
        y = q;
        k += 1;
    }
}

/// `p^k` as a big integer.
pub fn pow_big(p: u64, k: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), k as usize)
}

/// Either a finite valuation or the marker for an exact zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(u32),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<u32> {
        match self {
            Valuation::Finite(k) => Some(k),
            Valuation::Infinite => None,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(k) => write!(f, "{k}"),
            Valuation::Infinite => write!(f, "inf"),
        }
    }
}

/// An element of `Z_p` known modulo `p^precision`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PAdicValue {
    prime: u64,
    precision: u32,
    residue: BigInt,
    known_zero: bool,
}

impl PAdicValue {
    /// Reduces `value` modulo `p^precision`.
    pub fn new(prime: u64, precision: u32, value: impl Into<BigInt>) -> Result<Self> {
        check_prime(prime)?;
        if precision == 0 {
            return Err(Error::InvalidInput("precision must be positive".into()));
        }
        Ok(Self::reduced(prime, precision, value.into(), false))
    }

    /// The exact zero.
    pub fn zero(prime: u64, precision: u32) -> Result<Self> {
        let mut z = Self::new(prime, precision, 0)?;
        z.known_zero = true;
        Ok(z)
    }

    /// `num / den` for a denominator prime to `p`.
    pub fn from_ratio(prime: u64, precision: u32, num: &BigInt, den: &BigInt) -> Result<Self> {
        let n = Self::new(prime, precision, num.clone())?;
        let d = Self::new(prime, precision, den.clone())?;
        if den.is_zero() || legendre(den, prime) == 0 {
            return Err(Error::NotAUnit);
        }
        let value = &n * &d.inverse()?;
        Ok(Self { known_zero: num.is_zero(), ..value })
    }

    fn reduced(prime: u64, precision: u32, value: BigInt, known_zero: bool) -> Self {
        let residue = value.mod_floor(&pow_big(prime, precision));
        Self { prime, precision, residue, known_zero }
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Canonical representative in `[0, p^N)`.
    pub fn residue(&self) -> &BigInt {
        &self.residue
    }

    pub fn is_known_zero(&self) -> bool {
        self.known_zero
    }

    pub fn modulus(&self) -> BigInt {
        pow_big(self.prime, self.precision)
    }

    /// Same value re-read at a lower precision.
    pub fn truncate(&self, precision: u32) -> Self {
        let n = precision.min(self.precision);
        Self::reduced(self.prime, n, self.residue.clone(), self.known_zero)
    }

    /// The `p`-adic valuation. A residue that vanishes modulo `p^{N-GUARD}`
    /// without being a known zero is reported as [`Error::ImpreciseZero`].
    pub fn valuation(&self) -> Result<Valuation> {
        if self.known_zero {
            return Ok(Valuation::Infinite);
        }
        let trusted = self.precision.saturating_sub(GUARD);
        match int_valuation(&self.residue, self.prime) {
            Some(k) if k < trusted => Ok(Valuation::Finite(k)),
            _ => Err(Error::ImpreciseZero { precision: self.precision }),
        }
    }

    /// Valuation of the residue itself, without the precision guard; `None`
    /// for a vanishing residue. Used where the caller bounds valuations
    /// independently.
    pub fn raw_valuation(&self) -> Option<u32> {
        int_valuation(&self.residue, self.prime).filter(|&k| k < self.precision)
    }

    pub fn is_unit(&self) -> bool {
        legendre(&self.residue, self.prime) != 0
    }

    /// Splits `x = p^k u` with `u` a unit known to precision `N - k`.
    pub fn unit_part(&self) -> Result<(u32, PAdicValue)> {
        let k = self
            .valuation()?
            .finite()
            .ok_or_else(|| Error::InvalidInput("zero has no unit part".into()))?;
        Ok((k, self.shift_down(k)))
    }

    /// Exact division by `p^k`; requires `p^k` to divide the residue.
    pub fn shift_down(&self, k: u32) -> PAdicValue {
        let pk = pow_big(self.prime, k);
        debug_assert!(self.residue.is_multiple_of(&pk));
        Self::reduced(
            self.prime,
            self.precision - k.min(self.precision - 1),
            &self.residue / pk,
            self.known_zero,
        )
    }

    /// Multiplication by `p^k` (precision grows accordingly).
    pub fn shift_up(&self, k: u32) -> PAdicValue {
        Self::reduced(
            self.prime,
            self.precision + k,
            &self.residue * pow_big(self.prime, k),
            self.known_zero,
        )
    }

    /// Multiplicative inverse of a unit.
    pub fn inverse(&self) -> Result<PAdicValue> {
        if !self.is_unit() {
            return Err(Error::NotAUnit);
        }
        let m = self.modulus();
        let g = self.residue.extended_gcd(&m);
        debug_assert!(g.gcd.is_one());
        Ok(Self::reduced(self.prime, self.precision, g.x, false))
    }

    /// Quadratic residue character of a unit.
    pub fn chi(&self) -> Result<i8> {
        match legendre(&self.residue, self.prime) {
            0 => Err(Error::NotAUnit),
            s => Ok(s),
        }
    }

    /// Signed representative in `(-p^N/2, p^N/2]`.
    pub fn signed_residue(&self) -> BigInt {
        let m = self.modulus();
        if &self.residue * 2 > m {
            &self.residue - m
        } else {
            self.residue.clone()
        }
    }

    fn combine(&self, other: &Self) -> (u64, u32) {
        assert_eq!(self.prime, other.prime, "p-adic operands with different primes");
        (self.prime, self.precision.min(other.precision))
    }
}

impl fmt::Display for PAdicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {}^{})", self.residue, self.prime, self.precision)
    }
}

impl Add for &PAdicValue {
    type Output = PAdicValue;
    fn add(self, rhs: &PAdicValue) -> PAdicValue {
        let (p, n) = self.combine(rhs);
        PAdicValue::reduced(p, n, &self.residue + &rhs.residue, self.known_zero && rhs.known_zero)
    }
}

impl Sub for &PAdicValue {
    type Output = PAdicValue;
    fn sub(self, rhs: &PAdicValue) -> PAdicValue {
        let (p, n) = self.combine(rhs);
        PAdicValue::reduced(p, n, &self.residue - &rhs.residue, self.known_zero && rhs.known_zero)
    }
}

impl Mul for &PAdicValue {
    type Output = PAdicValue;
    fn mul(self, rhs: &PAdicValue) -> PAdicValue {
        let (p, n) = self.combine(rhs);
        PAdicValue::reduced(p, n, &self.residue * &rhs.residue, self.known_zero || rhs.known_zero)
    }
}

impl Neg for &PAdicValue {
    type Output = PAdicValue;
    fn neg(self) -> PAdicValue {
        PAdicValue::reduced(self.prime, self.precision, -&self.residue, self.known_zero)
    }
}

/// An element `c0 + c1·δ` of `Z_{p^2}` with `δ² = Δ`, `Δ` the smallest
/// non-square unit mod `p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadExtValue {
    pub c0: PAdicValue,
    pub c1: PAdicValue,
}

impl QuadExtValue {
    pub fn new(c0: PAdicValue, c1: PAdicValue) -> Self {
        assert_eq!(c0.prime, c1.prime, "components with different primes");
        Self { c0, c1 }
    }

    pub fn from_ints(prime: u64, precision: u32, c0: impl Into<BigInt>, c1: impl Into<BigInt>) -> Result<Self> {
        Ok(Self::new(
            PAdicValue::new(prime, precision, c0)?,
            PAdicValue::new(prime, precision, c1)?,
        ))
    }

    /// The generator `δ`.
    pub fn delta(prime: u64, precision: u32) -> Result<Self> {
        Ok(Self::new(PAdicValue::zero(prime, precision)?, PAdicValue::new(prime, precision, 1)?))
    }

    pub fn prime(&self) -> u64 {
        self.c0.prime
    }

    pub fn big_delta(&self) -> BigInt {
        BigInt::from(nonsquare_unit(self.c0.prime))
    }

    /// Galois conjugation `c0 + c1δ ↦ c0 - c1δ`.
    pub fn conj(&self) -> Self {
        Self { c0: self.c0.clone(), c1: -&self.c1 }
    }

    /// `x · conj(x) = c0² - Δ c1²`, an element of `Z_p`.
    pub fn norm(&self) -> PAdicValue {
        let d = PAdicValue::reduced(self.c0.prime, self.c0.precision, self.big_delta(), false);
        let n = &(&self.c0 * &self.c0) - &(&d * &(&self.c1 * &self.c1));
        PAdicValue { known_zero: self.c0.known_zero && self.c1.known_zero, ..n }
    }

    /// Minimum of the component valuations (the valuation in `Z_{p^2}`).
    pub fn valuation(&self) -> Result<Valuation> {
        if self.c0.known_zero && self.c1.known_zero {
            return Ok(Valuation::Infinite);
        }
        let v0 = if self.c0.known_zero { Valuation::Infinite } else { self.c0.valuation().unwrap_or(Valuation::Infinite) };
        let v1 = if self.c1.known_zero { Valuation::Infinite } else { self.c1.valuation().unwrap_or(Valuation::Infinite) };
        match v0.min(v1) {
            Valuation::Infinite => Err(Error::ImpreciseZero { precision: self.c0.precision.min(self.c1.precision) }),
            v => Ok(v),
        }
    }

    pub fn is_unit(&self) -> bool {
        self.c0.is_unit() || self.c1.is_unit()
    }

    /// Inverse of a unit, `conj(x) / norm(x)`.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.norm().inverse()?;
        let c = self.conj();
        Ok(Self { c0: &c.c0 * &n, c1: &c.c1 * &n })
    }

    pub fn is_known_zero(&self) -> bool {
        self.c0.known_zero && self.c1.known_zero
    }

    /// Valuation of the residue pair without the precision guard; `None`
    /// when both residues vanish.
    pub fn raw_valuation(&self) -> Option<u32> {
        match (self.c0.raw_valuation(), self.c1.raw_valuation()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Exact division by `p^k`.
    pub fn shift_down(&self, k: u32) -> Self {
        Self { c0: self.c0.shift_down(k), c1: self.c1.shift_down(k) }
    }

    /// Multiplication by an element of `Z_p`.
    pub fn scale(&self, s: &PAdicValue) -> Self {
        Self { c0: &self.c0 * s, c1: &self.c1 * s }
    }
}

impl Add for &QuadExtValue {
    type Output = QuadExtValue;
    fn add(self, rhs: &QuadExtValue) -> QuadExtValue {
        QuadExtValue { c0: &self.c0 + &rhs.c0, c1: &self.c1 + &rhs.c1 }
    }
}

impl Sub for &QuadExtValue {
    type Output = QuadExtValue;
    fn sub(self, rhs: &QuadExtValue) -> QuadExtValue {
        QuadExtValue { c0: &self.c0 - &rhs.c0, c1: &self.c1 - &rhs.c1 }
    }
}

impl Mul for &QuadExtValue {
    type Output = QuadExtValue;
    fn mul(self, rhs: &QuadExtValue) -> QuadExtValue {
        let d = PAdicValue::reduced(self.c0.prime, self.c0.precision, self.big_delta(), false);
        QuadExtValue {
            c0: &(&self.c0 * &rhs.c0) + &(&d * &(&self.c1 * &rhs.c1)),
            c1: &(&self.c0 * &rhs.c1) + &(&self.c1 * &rhs.c0),
        }
    }
}

impl Neg for &QuadExtValue {
    type Output = QuadExtValue;
    fn neg(self) -> QuadExtValue {
        QuadExtValue { c0: -&self.c0, c1: -&self.c1 }
    }
}

/// Quadratic residue character of a nonzero integer's unit part.
pub fn chi_of_unit_part(x: &BigInt, p: u64) -> i8 {
    let k = int_valuation(x, p).expect("nonzero");
    let u = x / pow_big(p, k);
    let s = legendre(&u.abs(), p);
    if x.is_negative() {
        s * legendre_u64(p - 1, p)
    } else {
        s
    }
}
