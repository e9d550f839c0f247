//! Intersection calculus: the case table of second differences, the
//! telescoping reassembly of the full intersection number from it, the
//! divisor calculus inside a difference divisor on the tree, and the
//! cross-checked report that ties all routes together.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::building::{sample_orthogonal_triple, LocusData, SpecialEndo, TreeBall};
use crate::error::{Error, Result};
use crate::padic::{default_precision, legendre_u64};
use crate::quadform::{compute_invariants, diagonalize, SymMatrix3, TInvariants};
use crate::siegel::{alpha_prime, closed_intersection, density_scale, half};

fn pow(p: u64, k: i64) -> Result<BigInt> {
    if k < 0 {
        return Err(Error::NonIntegral(format!("p^{k}")));
    }
    Ok(num_traits::pow(BigInt::from(p), k as usize))
}

/// `x · p^k`, allowing negative `k` when the division is exact.
fn scaled_by_power(p: u64, k: i64, x: BigInt) -> Result<BigInt> {
    if k >= 0 {
        return Ok(x * pow(p, k)?);
    }
    let d = pow(p, -k)?;
    if (&x % &d).is_zero() {
        Ok(x / d)
    } else {
        Err(Error::NonIntegral(format!("{x} * p^{k}")))
    }
}

fn sort_by_exponent(a: [i64; 3], c: [i8; 3]) -> ([i64; 3], [i8; 3]) {
    let mut idx = [0usize, 1, 2];
    idx.sort_by_key(|&i| a[i]);
    (idx.map(|i| a[i]), idx.map(|i| c[i]))
}

/// The closed intersection number for exponents `a` (any order) and unit
/// classes `χ(ε_i)`; zero as soon as one exponent is negative.
pub fn closed_from_exponents(p: u64, a: [i64; 3], classes: [i8; 3]) -> Result<BigInt> {
    if a.iter().any(|&x| x < 0) {
        return Ok(BigInt::zero());
    }
    let inv = TInvariants::from_exponents(p, a.map(|x| x as u32), classes)?;
    closed_intersection(&inv)
}

/// Which slots take part in a second difference.
pub const ALL_SLOTS: [bool; 3] = [true, true, true];
/// Slots 1 and 3: the mixed product with the second slot left undifferenced.
pub const OUTER_SLOTS: [bool; 3] = [true, false, true];

fn shifts(slots: [bool; 3]) -> impl Iterator<Item = [i64; 3]> {
    (0..8u8)
        .map(|m| [i64::from(m & 1), i64::from((m >> 1) & 1), i64::from((m >> 2) & 1)])
        .filter(move |u| (0..3).all(|k| slots[k] || u[k] == 0))
}

fn sign(u: &[i64; 3]) -> i64 {
    if u.iter().sum::<i64>() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `Σ_u (-1)^{|u|} G(a - 2u)` over the shifts `u` supported on `slots`,
/// with `G` the closed intersection number and `G = 0` for negative
/// exponents.
pub fn ddd_second_difference(p: u64, a: [u32; 3], classes: [i8; 3], slots: [bool; 3]) -> Result<BigInt> {
    let mut total = BigInt::zero();
    for u in shifts(slots) {
        let b = [0, 1, 2].map(|k| i64::from(a[k]) - 2 * u[k]);
        total += closed_from_exponents(p, b, classes)? * sign(&u);
    }
    Ok(total)
}

/// A matched row of the case table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseValue {
    pub name: &'static str,
    pub value: BigInt,
    /// Unit classes after the rescaling reduction (sorted order).
    pub classes: [i8; 3],
    /// Slots that carry a difference divisor in this row.
    pub slots: [bool; 3],
}

/// Flips the classes of two slots with equal exponents, which multiplies
/// both units by `Δ` and leaves the form's equivalence class unchanged.
pub fn rescale_options(a: [i64; 3], c: [i8; 3]) -> Vec<[i8; 3]> {
    [(0, 1), (0, 2), (1, 2)]
        .into_iter()
        .filter(|&(i, j)| a[i] == a[j])
        .map(|(i, j)| {
            let mut e = c;
            e[i] = -e[i];
            e[j] = -e[j];
            e
        })
        .collect()
}

/// Looks up the closed expression for the second difference of the
/// intersection number at `a` (all exponents at least 1). Tries the
/// classes as given, then one round of rescaled classes.
pub fn case_formula(p: u64, a: [u32; 3], classes: [i8; 3]) -> Result<CaseValue> {
    let (a, c) = sort_by_exponent(a.map(i64::from), classes);
    if a[0] < 1 {
        return Err(Error::InvalidInput(format!("case table needs exponents at least 1, got {a:?}")));
    }
    let tried = std::iter::once(c).chain(rescale_options(a, c));
    for cc in tried {
        if let Some((name, value)) = case_direct(p, a, cc)? {
            let slots = if name == "2-DZD" { OUTER_SLOTS } else { ALL_SLOTS };
            return Ok(CaseValue { name, value, classes: cc, slots });
        }
    }
    Err(Error::NoCaseMatches(format!("exponents {a:?} with classes {c:?}")))
}

fn case_direct(p: u64, a: [i64; 3], c: [i8; 3]) -> Result<Option<(&'static str, BigInt)>> {
    let [a1, a2, a3] = a;
    let pb = BigInt::from(p);
    let chi_m1 = legendre_u64(p - 1, p);
    let cc = |i: usize, j: usize| chi_m1 * c[i] * c[j];
    let h = || -> Result<BigInt> { Ok(BigInt::from(half(a1 + 1, "a1 + 1")?) * &pb - half(a1 - 1, "a1 - 1")?) };
    let ev = a.map(|x| x % 2 == 0);
    let two = BigInt::from(2);
    let pm1 = &pb - BigInt::one();
    let pp1 = &pb + BigInt::one();
    let row = match ev {
        [true, false, _] => ("1-i", &two * pow(p, half(a1 + a2 - 3, "a1 + a2 - 3")?)? * &pm1),
        [false, true, false] => ("1-ii", BigInt::zero()),
        [false, false, true] => ("1-iii", -(&two * scaled_by_power(p, half(a1 + a2 - 4, "a1 + a2 - 4")?, h()?)? * &pm1)),
        [false, true, true] if a2 < a3 => ("1-iv", BigInt::zero()),
        [false, true, true] => ("1-v", -(&two * pow(p, half(a1 + a2 - 3, "a1 + a2 - 3")?)? * h()?)),
        [true, true, _] => {
            let s = half(a1 + a2, "a1 + a2")?;
            ("2-DZD", pow(p, s)? + pow(p, s - 1)? - &two * pow(p, a1 - 1)?)
        }
        [false, false, false] => {
            let (c12, c13, c23) = (cc(0, 1), cc(0, 2), cc(1, 2));
            if a1 == a2 && a2 == a3 {
                let k = BigInt::from(half(a1 + 1, "a + 1")?);
                let head = -(&k * pow(p, a1)?) + BigInt::from(3) * &k * pow(p, a1 - 1)?;
                let tail = scaled_by_power(p, a1 - 2, BigInt::from(a1 - 1))?;
                match (c12, c13, c23) {
                    (-1, -1, 1) => ("3-i", head - tail),
                    (-1, -1, -1) => ("3-ii", head - &two * tail),
                    _ => return Ok(None),
                }
            } else {
                let q4h = || scaled_by_power(p, half(a1 + a2 - 4, "a1 + a2 - 4")?, h()?);
                if a2 < a3 && c12 == -1 {
                    ("3-iii", -(&two * q4h()? * &pm1))
                } else if a1 == a2 && a2 < a3 && c12 == 1 {
                    ("3-iv", &two * pow(p, a1 - 1)?)
                } else if a1 < a2 && a2 == a3 && c12 == 1 && c13 == 1 {
                    ("3-v", -(q4h()? * &pp1))
                } else if a1 < a2 && a2 == a3 && c12 == -1 && c13 == 1 {
                    ("3-vi", -(q4h()? * &pm1))
                } else if a1 < a2 && a2 < a3 && c12 == 1 {
                    ("3-vii", BigInt::zero())
                } else {
                    return Ok(None);
                }
            }
        }
    };
    Ok(Some(row))
}

/// Rebuilds the intersection number from the case table alone: with
/// `G(a) = 0` for negative exponents and `G` taken from the closed formula
/// when the smallest exponent is 0, each case-table row determines `G(a)`
/// from values at strictly smaller exponents.
pub fn reassemble_from_cases(p: u64, a: [u32; 3], classes: [i8; 3]) -> Result<BigInt> {
    let mut memo = HashMap::new();
    reassemble(p, a.map(i64::from), classes, &mut memo)
}

fn reassemble(p: u64, a: [i64; 3], c: [i8; 3], memo: &mut HashMap<([i64; 3], [i8; 3]), BigInt>) -> Result<BigInt> {
    if a.iter().any(|&x| x < 0) {
        return Ok(BigInt::zero());
    }
    let (a, c) = sort_by_exponent(a, c);
    if let Some(v) = memo.get(&(a, c)) {
        return Ok(v.clone());
    }
    let value = if a[0] == 0 {
        closed_from_exponents(p, a, c)?
    } else {
        let row = case_formula(p, a.map(|x| x as u32), c)?;
        let mut t = row.value.clone();
        for u in shifts(row.slots).filter(|u| u.iter().any(|&x| x != 0)) {
            let b = [0, 1, 2].map(|k| a[k] - 2 * u[k]);
            t -= reassemble(p, b, row.classes, memo)? * sign(&u);
        }
        t
    };
    memo.insert((a, c), value.clone());
    Ok(value)
}

/// A horizontal component inside the ambient difference divisor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Horizontal {
    pub attach_edge: (usize, usize),
    pub pairing_weight: BigInt,
}

/// `D(j_l) ∩ D(j_i)` viewed as a divisor on `D(j_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleDivisorInD {
    pub ambient: usize,
    pub vertical: BTreeMap<usize, BigInt>,
    pub horizontals: Vec<Horizontal>,
}

/// Multiplicity of a common line of `D(j_i)_p` and `D(j_l)_p` in their
/// intersection, from the fiber exponents `r_i`, `r_l`.
pub fn pair_multiplicity(p: u64, r_i: u32, r_l: u32, b_i: i64, b_l: i64, chi_il: i8) -> Result<BigInt> {
    if r_i != r_l {
        return pow(p, i64::from(r_i.min(r_l)));
    }
    if b_i == b_l && chi_il == 1 {
        return Err(Error::UnsupportedConfiguration("equal odd exponents with chi(-e_i e_l) = +1".into()));
    }
    let a_min = b_i.min(b_l);
    if a_min % 2 == 0 {
        return Err(Error::UnsupportedConfiguration(format!("equal fiber exponents with even partner {a_min}")));
    }
    let r = i64::from(r_i);
    Ok(BigInt::from(half(a_min + 1, "a_min + 1")? - r) * pow(p, r)?)
}

/// A sampled triple with its fixed-locus data on a common ball.
#[derive(Clone, Debug)]
pub struct TripleGeometry {
    pub ball: TreeBall,
    pub endos: [SpecialEndo; 3],
    pub data: [LocusData; 3],
}

impl TripleGeometry {
    pub fn new(endos: [SpecialEndo; 3], ball: TreeBall) -> Result<Self> {
        let data = [
            LocusData::compute(&endos[0], &ball)?,
            LocusData::compute(&endos[1], &ball)?,
            LocusData::compute(&endos[2], &ball)?,
        ];
        Ok(Self { ball, endos, data })
    }

    fn chi_pair(&self, i: usize, l: usize) -> i8 {
        let p = self.ball.prime;
        legendre_u64(p - 1, p) * self.data[i].unit_class * self.data[l].unit_class
    }
}

/// Restricts `D(j_l)` to the ambient `D(j_i)` at exponents `b`.
pub fn restrict_to_d(geo: &TripleGeometry, i: usize, l: usize, b: [i64; 3]) -> Result<CycleDivisorInD> {
    let p = geo.ball.prime;
    let (bi, bl) = (b[i], b[l]);
    let mut vertical = BTreeMap::new();
    for v in 0..geo.ball.len() {
        let Some(ri) = geo.data[i].fiber_exponent(v, bi) else { continue };
        let Some(rl) = geo.data[l].fiber_exponent(v, bl) else { continue };
        vertical.insert(v, pair_multiplicity(p, ri, rl, bi, bl, geo.chi_pair(i, l))?);
    }
    let weight = if bl == 0 {
        Some(BigInt::one())
    } else if bl % 2 == 0 && bl < bi {
        Some(pow(p, half(bl, "b_l")? - 1)? * (BigInt::from(p) - 1))
    } else {
        None
    };
    let mut horizontals = Vec::new();
    if let Some(w) = weight {
        let edge = geo.data[l]
            .core_edge()
            .ok_or_else(|| Error::ConsistencyViolation("even partner without a fixed edge".into()))?;
        horizontals.push(Horizontal { attach_edge: edge, pairing_weight: w });
    }
    Ok(CycleDivisorInD { ambient: i, vertical, horizontals })
}

/// `(D(j_1), D(j_2), D(j_3))` at exponents `b`, formed inside an odd
/// ambient difference divisor.
pub fn triple_d_level(geo: &TripleGeometry, b: [i64; 3]) -> Result<BigInt> {
    let mut odd: Vec<usize> = (0..3).filter(|&k| b[k] % 2 != 0).collect();
    odd.sort_by_key(|&k| std::cmp::Reverse(b[k]));
    let mut last = Error::UnsupportedConfiguration("no odd exponent".into());
    for i in odd {
        let (l, k) = match i {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let (dl, dk) = match (restrict_to_d(geo, i, l, b), restrict_to_d(geo, i, k, b)) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(e), _) | (_, Err(e)) => {
                last = e;
                continue;
            }
        };
        if !dl.horizontals.is_empty() && !dk.horizontals.is_empty() {
            if b[i] == 1 && b[l] == 0 && b[k] == 0 {
                return Ok(BigInt::one());
            }
            last = Error::UnsupportedConfiguration("two horizontal components".into());
            continue;
        }
        return pair_divisors(geo, b[i], &dl, &dk);
    }
    Err(last)
}

/// Intersection of two divisors on the ambient `D(j_i)`.
fn pair_divisors(geo: &TripleGeometry, b_i: i64, dl: &CycleDivisorInD, dk: &CycleDivisorInD) -> Result<BigInt> {
    let ball = &geo.ball;
    let data = &geo.data[dl.ambient];
    let mut total = BigInt::zero();
    for (&u, mu) in &dl.vertical {
        for w in std::iter::once(u).chain(ball.adj[u].iter().copied()) {
            let Some(mw) = dk.vertical.get(&w) else { continue };
            if !ball.is_interior(u) || !ball.is_interior(w) {
                return Err(Error::RadiusTooSmall { radius: ball.radius, needed: ball.radius + 1 });
            }
            total += mu * mw * crate::building::line_pairing(data, b_i, ball, u, w)?;
        }
    }
    for (h, other) in dl.horizontals.iter().map(|h| (h, dk)).chain(dk.horizontals.iter().map(|h| (h, dl))) {
        let (x, y) = h.attach_edge;
        let on_edge: BigInt = [x, y].iter().filter_map(|v| other.vertical.get(v)).sum();
        total += &h.pairing_weight * on_edge;
    }
    Ok(total)
}

/// `(Z(j_1), Z(j_2), Z(j_3))` as the sum of `D`-level triples over all
/// `(j_1/p^l, j_2/p^m, j_3/p^n)`.
pub fn triple_combinatorial(geo: &TripleGeometry, a: [u32; 3]) -> Result<BigInt> {
    let mut total = BigInt::zero();
    for l in 0..=a[0] / 2 {
        for m in 0..=a[1] / 2 {
            for n in 0..=a[2] / 2 {
                let b = [a[0] - 2 * l, a[1] - 2 * m, a[2] - 2 * n].map(i64::from);
                total += triple_d_level(geo, b)?;
            }
        }
    }
    Ok(total)
}

/// Default ball radius for exponents `a`.
pub fn default_radius(a: [u32; 3]) -> u32 {
    a.iter().map(|&x| x.saturating_sub(1) / 2).max().unwrap_or(0) + 2
}

/// Options for [`full_intersection`].
#[derive(Clone, Debug)]
pub struct IntersectOptions {
    pub combinatorial: bool,
    /// Ball radius for the tree route; `None` uses [`default_radius`].
    pub radius: Option<u32>,
    /// Extra radius allowed when a contributing line reaches the boundary.
    pub radius_slack: u32,
    pub seed: u64,
    pub global_multiplier: Option<BigInt>,
}

impl Default for IntersectOptions {
    fn default() -> Self {
        Self { combinatorial: false, radius: None, radius_slack: 1, seed: 1, global_multiplier: None }
    }
}

/// Values of every route for one matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleReport {
    pub invariants: TInvariants,
    pub value_closed: BigInt,
    pub alpha_prime: BigRational,
    /// `-p⁴/((p²+1)(p²-1)) · α′`
    pub value_density: BigRational,
    pub value_case_table: BigInt,
    pub value_combinatorial: Option<BigInt>,
    /// Radius of the ball that produced the combinatorial value.
    pub radius_used: Option<u32>,
    pub notes: Vec<String>,
    /// `value_closed · multiplier` when a global multiplier was supplied.
    pub global_value: Option<BigInt>,
    pub agreement: bool,
}

/// Samples an orthogonal triple realizing `inv` whose fixed loci all meet
/// the ball, trying consecutive seeds from `seed`.
pub fn sample_geometry(inv: &TInvariants, seed: u64, ball: &TreeBall) -> Result<TripleGeometry> {
    const ATTEMPTS: u64 = 64;
    let targets = [0, 1, 2].map(|k| (inv.a[k], inv.classes[k]));
    let mut last = None;
    for s in seed..seed + ATTEMPTS {
        let endos = sample_orthogonal_triple(inv.prime, targets, s, ball.precision)?;
        match TripleGeometry::new(endos, ball.clone()) {
            Ok(geo) => return Ok(geo),
            Err(e @ Error::RadiusTooSmall { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// The tree route on a prebuilt ball. A triple whose contributing lines
/// reach the boundary is replaced by a fresh sample a few times before
/// giving up; the intersection number does not depend on the triple.
pub fn combinatorial_on_ball(inv: &TInvariants, seed: u64, ball: &TreeBall) -> Result<BigInt> {
    const RESAMPLES: u64 = 8;
    let mut last = None;
    for k in 0..RESAMPLES {
        match triple_combinatorial(&sample_geometry(inv, seed + 1000 * k, ball)?, inv.a) {
            Err(e @ Error::RadiusTooSmall { .. }) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one sample"))
}

/// Runs the tree route on a sampled triple, widening the ball when a
/// contributing line touches its boundary.
pub fn combinatorial_value(inv: &TInvariants, opts: &IntersectOptions) -> Result<(BigInt, u32)> {
    let start = opts.radius.unwrap_or_else(|| default_radius(inv.a));
    let mut last = None;
    for radius in start..=start + opts.radius_slack {
        let ball = TreeBall::build(inv.prime, radius, default_precision(inv.a[2] + radius))?;
        match combinatorial_on_ball(inv, opts.seed, &ball) {
            Ok(v) => return Ok((v, radius)),
            Err(e @ Error::RadiusTooSmall { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one radius tried"))
}

/// All routes for a nonsingular admissible matrix, cross-checked.
pub fn full_intersection(t: &SymMatrix3, opts: &IntersectOptions) -> Result<TripleReport> {
    let inv = compute_invariants(&diagonalize(t)?);
    intersection_for_invariants(&inv, opts)
}

pub fn intersection_for_invariants(inv: &TInvariants, opts: &IntersectOptions) -> Result<TripleReport> {
    if !inv.is_admissible() {
        return Err(Error::Inadmissible);
    }
    let p = inv.prime;
    let value_closed = closed_intersection(inv)?;
    let ap = alpha_prime(inv)?;
    let value_density = density_scale(p) * &ap;
    let value_case_table = reassemble_from_cases(p, inv.a, inv.classes)?;
    let mut notes = Vec::new();
    let (value_combinatorial, radius_used) = if opts.combinatorial {
        match combinatorial_value(inv, opts) {
            Ok((v, r)) => (Some(v), Some(r)),
            Err(e @ (Error::UnsupportedConfiguration(_) | Error::RadiusTooSmall { .. })) => {
                notes.push(format!("combinatorial route skipped: {e}; the case-table route covers it"));
                (None, None)
            }
            Err(e) => return Err(e),
        }
    } else {
        (None, None)
    };
    let closed_q = BigRational::from_integer(value_closed.clone());
    let mut disagree = Vec::new();
    if value_density != closed_q {
        disagree.push(format!("density {value_density}"));
    }
    if value_case_table != value_closed {
        disagree.push(format!("case table {value_case_table}"));
    }
    if let Some(v) = &value_combinatorial {
        if v != &value_closed {
            disagree.push(format!("combinatorial {v}"));
        }
    }
    if !disagree.is_empty() {
        return Err(Error::ConsistencyViolation(format!("closed {value_closed} vs {}", disagree.join(", "))));
    }
    let global_value = opts.global_multiplier.as_ref().map(|m| m * &value_closed);
    Ok(TripleReport {
        invariants: inv.clone(),
        value_closed,
        alpha_prime: ap,
        value_density,
        value_case_table,
        value_combinatorial,
        radius_used,
        notes,
        global_value,
        agreement: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(x: i64) -> BigInt {
        BigInt::from(x)
    }

    #[test]
    fn second_difference_examples() {
        assert_eq!(ddd_second_difference(3, [0, 1, 1], [1, 1, 1], ALL_SLOTS).unwrap(), big(2));
        for p in [3u64, 5, 7] {
            let d = nonsquare(p);
            let cl = [1, crate::padic::legendre_u64(d, p), 1];
            let inv = TInvariants::from_exponents(p, [1, 1, 1], cl).unwrap();
            if inv.is_admissible() {
                assert_eq!(ddd_second_difference(p, [1, 1, 1], cl, ALL_SLOTS).unwrap(), big(3 - p as i64));
            }
        }
    }

    fn nonsquare(p: u64) -> u64 {
        crate::padic::nonsquare_unit(p)
    }

    #[test]
    fn case_rows_from_examples() {
        let row = case_formula(3, [2, 3, 5], [1, 1, 1]).unwrap();
        assert_eq!((row.name, row.value), ("1-i", big(12)));
        assert_eq!(case_formula(3, [3, 4, 5], [1, 1, 1]).unwrap().value, big(0));
        let row = case_formula(3, [3, 3, 4], [1, 1, 1]).unwrap();
        assert_eq!((row.name, row.value), ("1-iii", big(-60)));
        assert!(case_formula(3, [0, 1, 1], [1, 1, 1]).is_err());
    }

    #[test]
    fn pair_multiplicities() {
        assert_eq!(pair_multiplicity(3, 0, 1, 1, 3, -1).unwrap(), big(1));
        assert_eq!(pair_multiplicity(3, 1, 1, 3, 5, -1).unwrap(), big(3));
        assert_eq!(pair_multiplicity(3, 0, 0, 3, 5, -1).unwrap(), big(2));
        assert!(pair_multiplicity(3, 0, 0, 3, 3, 1).is_err());
    }

    #[test]
    fn reassembly_matches_closed() {
        for (a, c) in [([1, 1, 3], [1, 1, 1]), ([2, 3, 3], [1, 1, 1]), ([3, 3, 3], [1, 1, 1]), ([2, 2, 3], [1, -1, 1])] {
            let inv = TInvariants::from_exponents(3, a, c).unwrap();
            if !inv.is_admissible() {
                continue;
            }
            assert_eq!(reassemble_from_cases(3, a, c).unwrap(), closed_intersection(&inv).unwrap(), "{a:?}");
        }
    }

    #[test]
    fn full_report_examples() {
        let opts = IntersectOptions::default();
        let r = full_intersection(&SymMatrix3::diag(3, [1, 2, 3]).unwrap(), &opts).unwrap();
        assert_eq!(r.value_closed, big(1));
        let r = full_intersection(&SymMatrix3::diag(3, [1, 3, 3]).unwrap(), &opts).unwrap();
        assert_eq!(r.value_closed, big(2));
        let r = full_intersection(&SymMatrix3::diag(3, [1, 2, 27]).unwrap(), &opts).unwrap();
        assert_eq!(r.value_closed, big(2));
        assert_eq!(
            full_intersection(&SymMatrix3::diag(3, [1, 1, 3]).unwrap(), &opts),
            Err(Error::Inadmissible)
        );
    }

    #[test]
    fn combinatorial_small_tuples() {
        let opts = IntersectOptions { combinatorial: true, ..Default::default() };
        for d in [[1, 2, 3], [1, 3, 3]] {
            let r = full_intersection(&SymMatrix3::diag(3, d).unwrap(), &opts).unwrap();
            assert_eq!(r.value_combinatorial.as_ref(), Some(&r.value_closed), "{d:?}");
        }
    }
}
