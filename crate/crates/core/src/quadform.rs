//! Ternary quadratic forms over `Z_p`: diagonalization up to
//! `GL_3(Z_p)`-equivalence and the invariants `σ`, `ξ̃`, `η` together with
//! the representability sign.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::padic::{check_prime, default_precision, int_valuation, legendre, legendre_u64, nonsquare_unit, PAdicValue, GUARD};

/// A symmetric 3×3 integer matrix read over `Z_p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymMatrix3 {
    prime: u64,
    entries: [[BigInt; 3]; 3],
}

impl SymMatrix3 {
    pub fn new(prime: u64, entries: [[BigInt; 3]; 3]) -> Result<Self> {
        check_prime(prime)?;
        for i in 0..3 {
            for j in 0..i {
                if entries[i][j] != entries[j][i] {
                    return Err(Error::InvalidInput(format!("entry ({i},{j}) differs from ({j},{i})")));
                }
            }
        }
        Ok(Self { prime, entries })
    }

    pub fn from_i64(prime: u64, rows: [[i64; 3]; 3]) -> Result<Self> {
        Self::new(prime, rows.map(|r| r.map(BigInt::from)))
    }

    pub fn diag(prime: u64, d: [i64; 3]) -> Result<Self> {
        Self::from_i64(prime, [[d[0], 0, 0], [0, d[1], 0], [0, 0, d[2]]])
    }

    /// Accepts rational entries whose denominators are prime to `p` and
    /// returns the integral matrix `d² T` (with `d` the common denominator),
    /// which is `GL_3(Z_p)`-equivalent to `T`.
    pub fn from_rationals(prime: u64, rows: [[BigRational; 3]; 3]) -> Result<Self> {
        check_prime(prime)?;
        let mut d = BigInt::one();
        for r in &rows {
            for x in r {
                d = d.lcm(x.denom());
            }
        }
        if legendre(&d, prime) == 0 {
            return Err(Error::InvalidInput(format!("denominator {d} is divisible by {prime}")));
        }
        let d2 = BigRational::from_integer(&d * &d);
        let entries = rows.map(|r| r.map(|x| (x * &d2).to_integer()));
        Self::new(prime, entries)
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn entries(&self) -> &[[BigInt; 3]; 3] {
        &self.entries
    }

    pub fn det(&self) -> BigInt {
        let m = &self.entries;
        &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
            - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
            + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
    }

    /// `Uᵗ T U`.
    pub fn conjugate(&self, u: &[[BigInt; 3]; 3]) -> Self {
        let mut out: [[BigInt; 3]; 3] = Default::default();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = BigInt::zero();
                for k in 0..3 {
                    for l in 0..3 {
                        s += &u[k][i] * &self.entries[k][l] * &u[l][j];
                    }
                }
                out[i][j] = s;
            }
        }
        Self { prime: self.prime, entries: out }
    }
}

/// Result of diagonalizing a ternary form: sorted exponents with unit
/// representatives reduced to `{1, Δ}`, plus the raw data that certifies
/// the equivalence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagonalForm {
    pub prime: u64,
    pub precision: u32,
    /// `(a_i, ε_i)` with `a_1 ≤ a_2 ≤ a_3` and `ε_i ∈ {1, Δ}`.
    pub blocks: [(u32, PAdicValue); 3],
    /// Diagonal entries of `Pᵗ T P` in the sorted order.
    pub raw_diagonal: [PAdicValue; 3],
    /// Columns of the transformation matrix `P`, a unit-determinant matrix
    /// over `Z_p` known to `precision` digits.
    pub transform: [[PAdicValue; 3]; 3],
}

impl DiagonalForm {
    /// Builds a form directly from exponents and residue characters of the
    /// unit parts (sorted stably by exponent).
    pub fn from_exponents(prime: u64, a: [u32; 3], classes: [i8; 3]) -> Result<Self> {
        check_prime(prime)?;
        let n = default_precision(*a.iter().max().unwrap_or(&0));
        let delta = nonsquare_unit(prime);
        let mut idx = [0usize, 1, 2];
        idx.sort_by_key(|&i| a[i]);
        let mk = |i: usize| -> Result<(u32, PAdicValue)> {
            let e = if classes[i] == 1 { 1 } else { delta };
            Ok((a[i], PAdicValue::new(prime, n, e)?))
        };
        let blocks = [mk(idx[0])?, mk(idx[1])?, mk(idx[2])?];
        let raw = |k: usize| PAdicValue::new(prime, n, crate::padic::pow_big(prime, blocks[k].0) * blocks[k].1.residue());
        let raw_diagonal = [raw(0)?, raw(1)?, raw(2)?];
        let one = PAdicValue::new(prime, n, 1)?;
        let zero = PAdicValue::zero(prime, n)?;
        let mut transform: [[PAdicValue; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| zero.clone()));
        for (c, &i) in idx.iter().enumerate() {
            transform[i][c] = one.clone();
        }
        Ok(Self { prime, precision: n, blocks, raw_diagonal, transform })
    }

    pub fn exponents(&self) -> [u32; 3] {
        self.blocks.clone().map(|b| b.0)
    }

    /// Residue characters `χ(ε_i)`.
    pub fn classes(&self) -> [i8; 3] {
        self.blocks.clone().map(|b| b.1.chi().expect("unit representative"))
    }
}

/// Diagonalizes a nonsingular symmetric matrix over `Z_p` (Jordan splitting
/// for odd `p`).
pub fn diagonalize(t: &SymMatrix3) -> Result<DiagonalForm> {
    let vdet = int_valuation(&t.det(), t.prime).ok_or(Error::SingularMatrix)?;
    diagonalize_at(t, default_precision(vdet))
}

/// [`diagonalize`] with residues carried to `n` digits.
pub fn diagonalize_at(t: &SymMatrix3, n: u32) -> Result<DiagonalForm> {
    let p = t.prime;
    int_valuation(&t.det(), p).ok_or(Error::SingularMatrix)?;
    let lift = |x: &BigInt| -> Result<PAdicValue> {
        if x.is_zero() {
            PAdicValue::zero(p, n)
        } else {
            PAdicValue::new(p, n, x.clone())
        }
    };
    let mut w: [[PAdicValue; 3]; 3] = [[lift(&t.entries[0][0])?, lift(&t.entries[0][1])?, lift(&t.entries[0][2])?],
        [lift(&t.entries[1][0])?, lift(&t.entries[1][1])?, lift(&t.entries[1][2])?],
        [lift(&t.entries[2][0])?, lift(&t.entries[2][1])?, lift(&t.entries[2][2])?]];
    let zero = PAdicValue::zero(p, n)?;
    let one = PAdicValue::new(p, n, 1)?;
    let mut pm: [[PAdicValue; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| if i == j { one.clone() } else { zero.clone() }));

    let val = |x: &PAdicValue| -> Option<u32> {
        if x.is_known_zero() {
            None
        } else {
            x.raw_valuation()
        }
    };

    for k in 0..3 {
        // pivot search
        let mut best_diag: Option<(u32, usize)> = None;
        for i in k..3 {
            if let Some(v) = val(&w[i][i]) {
                if best_diag.is_none_or(|(bv, _)| v < bv) {
                    best_diag = Some((v, i));
                }
            }
        }
        let mut best_off: Option<(u32, usize, usize)> = None;
        for i in k..3 {
            for j in (i + 1)..3 {
                if let Some(v) = val(&w[i][j]) {
                    if best_off.is_none_or(|(bv, _, _)| v < bv) {
                        best_off = Some((v, i, j));
                    }
                }
            }
        }
        let pivot = match (best_diag, best_off) {
            (Some((dv, i)), Some((ov, _, _))) if dv <= ov => (dv, i),
            (Some((dv, i)), None) => (dv, i),
            (_, Some((ov, i, j))) => {
                add_into(&mut w, &mut pm, i, j);
                (ov, i)
            }
            (None, None) => return Err(Error::SingularMatrix),
        };
        if pivot.0 + GUARD >= w[pivot.1][pivot.1].precision() {
            return Err(Error::PrecisionExhausted(format!("pivot valuation {} at step {k}", pivot.0)));
        }
        swap(&mut w, &mut pm, k, pivot.1);
        let (v, u) = w[k][k].unit_part()?;
        let uinv = u.inverse()?;
        for r in (k + 1)..3 {
            if w[r][k].is_known_zero() {
                continue;
            }
            if w[r][k].raw_valuation().is_some_and(|x| x < v) {
                return Err(Error::PrecisionExhausted(format!("pivot at step {k} is not of minimal valuation")));
            }
            let f = &w[r][k].shift_down(v) * &uinv;
            for c in 0..3 {
                let t = &f * &w[k][c];
                w[r][c] = &w[r][c] - &t;
            }
            for rr in 0..3 {
                let t = &f * &w[rr][k];
                w[rr][r] = &w[rr][r] - &t;
            }
            for rr in 0..3 {
                let t = &f * &pm[rr][k];
                pm[rr][r] = &pm[rr][r] - &t;
            }
            w[r][k] = zero.clone();
            w[k][r] = zero.clone();
        }
    }

    let delta = nonsquare_unit(p);
    let mut diag: Vec<(u32, PAdicValue, usize)> = Vec::with_capacity(3);
    for i in 0..3 {
        let v = w[i][i].valuation()?.finite().ok_or(Error::SingularMatrix)?;
        diag.push((v, w[i][i].clone(), i));
    }
    diag.sort_by_key(|d| d.0);
    let mut blocks = Vec::with_capacity(3);
    for (a, d, _) in &diag {
        let (_, u) = d.unit_part()?;
        let e = if u.chi()? == 1 { 1 } else { delta };
        blocks.push((*a, PAdicValue::new(p, n, e)?));
    }
    let transform = std::array::from_fn(|r| std::array::from_fn(|c| pm[r][diag[c].2].clone()));
    Ok(DiagonalForm {
        prime: p,
        precision: n,
        blocks: [blocks[0].clone(), blocks[1].clone(), blocks[2].clone()],
        raw_diagonal: [diag[0].1.clone(), diag[1].1.clone(), diag[2].1.clone()],
        transform,
    })
}

fn add_into(w: &mut [[PAdicValue; 3]; 3], pm: &mut [[PAdicValue; 3]; 3], i: usize, j: usize) {
    for c in 0..3 {
        let t = w[j][c].clone();
        w[i][c] = &w[i][c] + &t;
    }
    for r in 0..3 {
        let t = w[r][j].clone();
        w[r][i] = &w[r][i] + &t;
    }
    for r in 0..3 {
        let t = pm[r][j].clone();
        pm[r][i] = &pm[r][i] + &t;
    }
}

fn swap(w: &mut [[PAdicValue; 3]; 3], pm: &mut [[PAdicValue; 3]; 3], i: usize, j: usize) {
    if i == j {
        return;
    }
    w.swap(i, j);
    for row in w.iter_mut() {
        row.swap(i, j);
    }
    for row in pm.iter_mut() {
        row.swap(i, j);
    }
}

/// The invariants of a diagonalized ternary form that feed the formula layer.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TInvariants {
    pub prime: u64,
    /// Sorted exponents `a_1 ≤ a_2 ≤ a_3`.
    pub a: [u32; 3],
    /// `χ(ε_i)` for the unit parts, aligned with `a`.
    pub classes: [i8; 3],
    pub sigma: u32,
    pub xi_tilde: i8,
    pub eta: i8,
    pub eps_sign: i8,
    /// `χ(-ε_i ε_j)` for the pairs (1,2), (1,3), (2,3) when `a_i ≡ a_j (mod 2)`.
    pub chi_pairs: [Option<i8>; 3],
}

impl TInvariants {
    /// Computes the invariants from exponents and unit classes (sorted
    /// stably by exponent first).
    pub fn from_exponents(prime: u64, a: [u32; 3], classes: [i8; 3]) -> Result<Self> {
        check_prime(prime)?;
        if classes.iter().any(|c| c.abs() != 1) {
            return Err(Error::InvalidInput("unit classes must be ±1".into()));
        }
        let mut idx = [0usize, 1, 2];
        idx.sort_by_key(|&i| a[i]);
        let a = idx.map(|i| a[i]);
        let c = idx.map(|i| classes[i]);
        let chi_m1 = legendre_u64(prime - 1, prime);
        let pair = |i: usize, j: usize| chi_m1 * c[i] * c[j];
        let same = |i: usize, j: usize| (a[i] + a[j]) % 2 == 0;

        let sigma = if same(0, 1) { 2 } else { 1 };
        let xi_tilde = if sigma == 2 { pair(0, 1) } else { 0 };
        let (i, j) = [(0, 1), (0, 2), (1, 2)]
            .into_iter()
            .find(|&(i, j)| same(i, j))
            .expect("two of three integers share a parity");
        let k = 3 - i - j;
        let isotropic = pair(i, j) == 1 || same(k, j);
        let eta = if isotropic { 1 } else { -1 };

        let s = a[0] + a[1] + a[2];
        let sym2 = a[0] * a[1] + a[1] * a[2] + a[0] * a[2];
        let pow = |base: i8, e: u32| if e.is_multiple_of(2) { 1 } else { base };
        let eps_sign = pow(-1, s)
            * pow(chi_m1, s + sym2)
            * pow(c[0], a[1] + a[2])
            * pow(c[1], a[0] + a[2])
            * pow(c[2], a[0] + a[1]);
        let chi_pairs = [(0, 1), (0, 2), (1, 2)].map(|(i, j)| same(i, j).then(|| pair(i, j)));
        Ok(Self { prime, a, classes: c, sigma, xi_tilde, eta, eps_sign, chi_pairs })
    }

    pub fn is_admissible(&self) -> bool {
        self.eps_sign == -1
    }

    /// `χ(-ε_i ε_j)` for any two slots, regardless of parity.
    pub fn chi_pair(&self, i: usize, j: usize) -> i8 {
        legendre_u64(self.prime - 1, self.prime) * self.classes[i] * self.classes[j]
    }

    /// A copy with `ξ̃` replaced; used to check formula-level invariance.
    pub fn with_xi_tilde(&self, xi: i8) -> Self {
        Self { xi_tilde: xi, ..self.clone() }
    }
}

/// Invariants of a diagonal form.
pub fn compute_invariants(d: &DiagonalForm) -> TInvariants {
    TInvariants::from_exponents(d.prime, d.exponents(), d.classes()).expect("diagonal forms carry valid data")
}

/// `Uᵗ T U` for a pseudorandom `U` whose determinant is a `p`-adic unit.
pub fn random_unimodular_conjugate(t: &SymMatrix3, seed: u64) -> SymMatrix3 {
    let u = random_unimodular(t.prime, seed);
    t.conjugate(&u)
}

/// A pseudorandom integer matrix with determinant prime to `p`.
pub fn random_unimodular(p: u64, seed: u64) -> [[BigInt; 3]; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let m: [[i64; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-4..=4)));
        let d = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        if d.rem_euclid(p as i64) != 0 {
            return m.map(|r| r.map(BigInt::from));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv_of(p: u64, rows: [[i64; 3]; 3]) -> TInvariants {
        compute_invariants(&diagonalize(&SymMatrix3::from_i64(p, rows).unwrap()).unwrap())
    }

    #[test]
    fn permuted_diagonal() {
        let d = diagonalize(&SymMatrix3::diag(3, [3, 1, 2]).unwrap()).unwrap();
        assert_eq!(d.exponents(), [0, 0, 1]);
        assert_eq!(d.classes(), [1, -1, 1]);
    }

    #[test]
    fn hyperbolic_plane() {
        let d = diagonalize(&SymMatrix3::from_i64(3, [[0, 1, 0], [1, 0, 0], [0, 0, 1]]).unwrap()).unwrap();
        assert_eq!(d.exponents(), [0, 0, 0]);
        let prod: i8 = d.classes().iter().product();
        assert_eq!(prod, legendre_u64(2, 3));
    }

    #[test]
    fn already_diagonal() {
        let d = diagonalize(&SymMatrix3::diag(3, [1, 2, 9]).unwrap()).unwrap();
        assert_eq!(d.exponents(), [0, 0, 2]);
        assert_eq!(d.classes(), [1, -1, 1]);
    }

    #[test]
    fn invariants_of_examples() {
        let i = inv_of(3, [[1, 0, 0], [0, 2, 0], [0, 0, 3]]);
        assert_eq!((i.sigma, i.xi_tilde, i.eta, i.eps_sign), (2, 1, 1, -1));
        let i = inv_of(3, [[1, 0, 0], [0, 1, 0], [0, 0, 3]]);
        assert_eq!(i.eps_sign, 1);
        let i = inv_of(3, [[1, 0, 0], [0, 3, 0], [0, 0, 3]]);
        assert_eq!((i.a, i.sigma, i.xi_tilde, i.eta, i.eps_sign), ([0, 1, 1], 1, 0, -1, -1));
    }

    #[test]
    fn singular_is_rejected() {
        let t = SymMatrix3::from_i64(3, [[1, 1, 0], [1, 1, 0], [0, 0, 3]]).unwrap();
        assert_eq!(diagonalize(&t), Err(Error::SingularMatrix));
    }

    #[test]
    fn transform_certifies_equivalence() {
        let t = SymMatrix3::from_i64(5, [[10, 5, 3], [5, 0, 1], [3, 1, 25]]).unwrap();
        let d = diagonalize(&t).unwrap();
        let n = d.precision;
        let m = crate::padic::pow_big(5, n);
        for i in 0..3 {
            for j in 0..3 {
                let mut s = BigInt::zero();
                for k in 0..3 {
                    for l in 0..3 {
                        s += d.transform[k][i].residue() * &t.entries[k][l] * d.transform[l][j].residue();
                    }
                }
                let expect = if i == j { d.raw_diagonal[i].residue().clone() } else { BigInt::zero() };
                let prec = d.raw_diagonal.iter().map(|x| x.precision()).min().unwrap();
                let mp = crate::padic::pow_big(5, prec);
                assert_eq!(s.mod_floor(&mp), expect.mod_floor(&mp), "entry ({i},{j}) mod {m}");
            }
        }
    }

    #[test]
    fn rational_input_is_cleared() {
        let half = BigRational::new(1.into(), 2.into());
        let z = BigRational::zero();
        let rows = [
            [half.clone(), z.clone(), z.clone()],
            [z.clone(), BigRational::from_integer(2.into()), z.clone()],
            [z.clone(), z.clone(), BigRational::from_integer(3.into())],
        ];
        let t = SymMatrix3::from_rationals(3, rows).unwrap();
        assert_eq!(t.entries()[0][0], BigInt::from(2));
        let bad = [[BigRational::new(1.into(), 3.into()), z.clone(), z.clone()], [z.clone(), z.clone(), z.clone()], [z.clone(), z.clone(), z]];
        assert!(SymMatrix3::from_rationals(3, bad).is_err());
    }

    #[test]
    fn negative_entries() {
        let i = inv_of(7, [[-1, 0, 0], [0, 7, 0], [0, 0, -49]]);
        assert_eq!(i.a, [0, 1, 2]);
        assert!(BigInt::from(-1).is_negative());
    }
}
