//! The Bruhat–Tits tree of `PGL_2(Q_{p²})`, special endomorphisms in the
//! coordinates `x₁s₁ + x₂s₂ + x₃s₃ + x₄s₄`, the semilinear action they
//! induce on lattice classes, fixed loci, and the special-fiber divisors
//! `Z(j)_p` and `D(j)_p = Z(j)_p - Z(j/p)_p` described by distances to the
//! fixed locus.
//!
//! A vertex is the homothety class of the `Z_{p²}`-lattice spanned by the
//! columns of `[[p^{e1}, x], [0, p^{e2}]]`, with `x` reduced modulo
//! `p^{e1}` and `min(e1, e2, ν(x)) = 0`. Every lattice class has exactly one
//! such form, so the tuple `(e1, e2, x)` is a hash key.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::padic::{chi_of_unit_part, int_valuation, nonsquare_unit, pow_big, PAdicValue, QuadExtValue};
use crate::quadform::TInvariants;

/// A 2×2 matrix over `Z_{p²}`, row-major.
pub type Mat2 = [[QuadExtValue; 2]; 2];

fn quad(p: u64, n: u32, c0: impl Into<BigInt>, c1: impl Into<BigInt>) -> Result<QuadExtValue> {
    QuadExtValue::from_ints(p, n, c0, c1)
}

fn quad_zero(p: u64, n: u32) -> Result<QuadExtValue> {
    Ok(QuadExtValue::new(PAdicValue::zero(p, n)?, PAdicValue::zero(p, n)?))
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| &(&a[i][0] * &b[0][j]) + &(&a[i][1] * &b[1][j])))
}

fn mat_conj(a: &Mat2) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j].conj()))
}

/// Canonical representative of a vertex of the tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeVertex {
    pub e1: u32,
    pub e2: u32,
    /// Coordinates of `x = x0 + x1·δ`, both in `[0, p^{e1})`.
    pub x0: BigInt,
    pub x1: BigInt,
}

impl LatticeVertex {
    /// The class of the standard lattice `Z_{p²}²`.
    pub fn standard() -> Self {
        Self { e1: 0, e2: 0, x0: BigInt::zero(), x1: BigInt::zero() }
    }

    /// The basis matrix `[[p^{e1}, x], [0, p^{e2}]]` at precision `n`.
    pub fn basis(&self, p: u64, n: u32) -> Result<Mat2> {
        Ok([
            [quad(p, n, pow_big(p, self.e1), 0)?, quad(p, n, self.x0.clone(), self.x1.clone())?],
            [quad_zero(p, n)?, quad(p, n, pow_big(p, self.e2), 0)?],
        ])
    }
}

impl std::fmt::Display for LatticeVertex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{},{};{}+{}d]", self.e1, self.e2, self.x0, self.x1)
    }
}

fn lt_val(a: Option<u32>, b: Option<u32>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x < y,
        (Some(_), None) => true,
        _ => false,
    }
}

/// Reduces the lattice spanned by the columns of `g` to its canonical form.
pub fn canonicalize(g: &Mat2) -> Result<LatticeVertex> {
    let p = g[0][0].prime();
    let (mut c0, mut c1) = ((g[0][0].clone(), g[1][0].clone()), (g[0][1].clone(), g[1][1].clone()));
    if lt_val(c0.1.raw_valuation(), c1.1.raw_valuation()) {
        std::mem::swap(&mut c0, &mut c1);
    }
    let e2 = c1.1.raw_valuation().ok_or(Error::SingularMatrix)?;
    let ui = c1.1.shift_down(e2).inverse()?;
    c1 = (&c1.0 * &ui, &c1.1 * &ui);
    let f = c0.1.shift_down(e2);
    let z = &c0.0 - &(&f * &c1.0);
    let e1 = z.raw_valuation().ok_or(Error::SingularMatrix)?;
    let q = pow_big(p, e1);
    let x0 = c1.0.c0.residue().mod_floor(&q);
    let x1 = c1.0.c1.residue().mod_floor(&q);
    let vx = match (int_valuation(&x0, p), int_valuation(&x1, p)) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let m = e1.min(e2).min(vx.unwrap_or(u32::MAX));
    let pm = pow_big(p, m);
    Ok(LatticeVertex { e1: e1 - m, e2: e2 - m, x0: x0 / &pm, x1: x1 / &pm })
}

/// The `p² + 1` neighbors of a vertex.
pub fn neighbors(v: &LatticeVertex, p: u64, n: u32) -> Result<Vec<LatticeVertex>> {
    let g = v.basis(p, n)?;
    let one = quad(p, n, 1, 0)?;
    let zero = quad_zero(p, n)?;
    let pp = quad(p, n, p, 0)?;
    let mut out = Vec::with_capacity((p * p + 1) as usize);
    for t0 in 0..p {
        for t1 in 0..p {
            let step = [[one.clone(), zero.clone()], [quad(p, n, t0, t1)?, pp.clone()]];
            out.push(canonicalize(&mat_mul(&g, &step))?);
        }
    }
    out.push(canonicalize(&mat_mul(&g, &[[pp.clone(), zero.clone()], [zero, one]]))?);
    let distinct: BTreeSet<&LatticeVertex> = out.iter().collect();
    if distinct.len() != (p * p + 1) as usize {
        return Err(Error::ConsistencyViolation(format!("{v} has {} distinct neighbors", distinct.len())));
    }
    Ok(out)
}

/// All vertices within `radius` of the standard vertex, with adjacency.
#[derive(Clone, Debug)]
pub struct TreeBall {
    pub prime: u64,
    pub radius: u32,
    pub precision: u32,
    pub vertices: Vec<LatticeVertex>,
    pub index: HashMap<LatticeVertex, usize>,
    /// Distance from the center (index 0).
    pub dist: Vec<u32>,
    pub parent: Vec<Option<usize>>,
    /// Neighbors inside the ball. Interior vertices have all `p² + 1`.
    pub adj: Vec<Vec<usize>>,
}

impl TreeBall {
    pub fn build(p: u64, radius: u32, precision: u32) -> Result<Self> {
        crate::padic::check_prime(p)?;
        let mut ball = Self {
            prime: p,
            radius,
            precision,
            vertices: vec![LatticeVertex::standard()],
            index: HashMap::from([(LatticeVertex::standard(), 0)]),
            dist: vec![0],
            parent: vec![None],
            adj: vec![Vec::new()],
        };
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            if ball.dist[u] >= radius {
                continue;
            }
            let mut seen_old = 0;
            for w in neighbors(&ball.vertices[u], p, precision)? {
                if let Some(&iw) = ball.index.get(&w) {
                    if Some(iw) != ball.parent[u] {
                        return Err(Error::ConsistencyViolation(format!("cycle through {w}")));
                    }
                    seen_old += 1;
                    continue;
                }
                let iw = ball.vertices.len();
                ball.index.insert(w.clone(), iw);
                ball.vertices.push(w);
                ball.dist.push(ball.dist[u] + 1);
                ball.parent.push(Some(u));
                ball.adj.push(vec![u]);
                ball.adj[u].push(iw);
                queue.push_back(iw);
            }
            if seen_old != usize::from(u != 0) {
                return Err(Error::ConsistencyViolation(format!("vertex {u} sees {seen_old} known neighbors")));
            }
        }
        Ok(ball)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_interior(&self, v: usize) -> bool {
        self.dist[v] < self.radius
    }

    /// Vertices on the geodesic from `u` to `w`, both included.
    pub fn path(&self, u: usize, w: usize) -> Vec<usize> {
        let ancestors = |mut v: usize| {
            let mut out = vec![v];
            while let Some(q) = self.parent[v] {
                out.push(q);
                v = q;
            }
            out
        };
        let (au, aw) = (ancestors(u), ancestors(w));
        let on_w: HashMap<usize, usize> = aw.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let (ku, kw) = au.iter().enumerate().find_map(|(k, v)| on_w.get(v).map(|&kw| (k, kw))).expect("common root");
        let mut out: Vec<usize> = au[..=ku].to_vec();
        out.extend(aw[..kw].iter().rev());
        out
    }

    pub fn lookup(&self, v: &LatticeVertex) -> Option<usize> {
        self.index.get(v).copied()
    }

    /// Number of vertices at distance at most `r` from the center in a full
    /// `(q+1)`-regular tree, `q = p²`.
    pub fn expected_size(p: u64, r: u32) -> u64 {
        let q = p * p;
        1 + (0..r).map(|k| (q + 1) * q.pow(k)).sum::<u64>()
    }
}

/// `x₁s₁ + x₂s₂ + x₃s₃ + x₄s₄` in the matrix coordinates
/// `[[a, b], [c, p·conj(a)]]` with `b, c ∈ δ·Z_p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecialEndo {
    pub prime: u64,
    pub coords: [BigInt; 4],
    pub a: QuadExtValue,
    pub b: QuadExtValue,
    pub c: QuadExtValue,
    /// `p·a·conj(a) - b·c = x₁² - x₂² + p·x₃² - Δp·x₄²`
    pub q_value: BigInt,
}

/// The Gram form of the coordinate basis, `diag(1, -1, p, -Δp)`.
pub fn coordinate_gram(p: u64) -> [BigInt; 4] {
    let d = nonsquare_unit(p);
    [BigInt::one(), -BigInt::one(), BigInt::from(p), -BigInt::from(d * p)]
}

pub fn endo_from_coords(p: u64, coords: [BigInt; 4], precision: u32) -> Result<SpecialEndo> {
    crate::padic::check_prime(p)?;
    let g = coordinate_gram(p);
    let q_value: BigInt = (0..4).map(|k| &g[k] * &coords[k] * &coords[k]).sum();
    let [x1, x2, x3, x4] = coords.clone();
    let zero = PAdicValue::zero(p, precision)?;
    let a = QuadExtValue::new(PAdicValue::new(p, precision, x3)?, PAdicValue::new(p, precision, x4)?);
    let b = QuadExtValue::new(zero.clone(), PAdicValue::new(p, precision, &x2 - &x1)?);
    let c1 = PAdicValue::from_ratio(p, precision, &(&x1 + &x2), &BigInt::from(nonsquare_unit(p)))?;
    let c = QuadExtValue::new(zero, c1);
    let pp = PAdicValue::new(p, precision, p)?;
    let q = &(&a * &a.conj()).scale(&pp) - &(&b * &c);
    let expect = PAdicValue::new(p, precision, q_value.clone())?;
    if !q.c1.residue().is_zero() || q.c0.residue() != expect.residue() {
        return Err(Error::ConsistencyViolation(format!("Q(x) mismatch for {coords:?}")));
    }
    Ok(SpecialEndo { prime: p, coords, a, b, c, q_value })
}

impl SpecialEndo {
    pub fn from_i64(p: u64, coords: [i64; 4], precision: u32) -> Result<Self> {
        endo_from_coords(p, coords.map(BigInt::from), precision)
    }

    /// `ν_p(Q(j))`.
    pub fn exponent(&self) -> Result<u32> {
        int_valuation(&self.q_value, self.prime).ok_or_else(|| Error::InvalidInput("Q(j) = 0".into()))
    }

    /// `χ` of the unit part of `Q(j)`.
    pub fn unit_class(&self) -> i8 {
        chi_of_unit_part(&self.q_value, self.prime)
    }

    /// The bilinear form with `B(x, x) = Q(x)`.
    pub fn gram(&self, other: &Self) -> BigInt {
        let g = coordinate_gram(self.prime);
        (0..4).map(|k| &g[k] * &self.coords[k] * &other.coords[k]).sum()
    }

    pub fn scaled(&self, k: u32) -> Result<Self> {
        let s = pow_big(self.prime, k);
        endo_from_coords(self.prime, self.coords.clone().map(|c| c * &s), self.a.c0.precision())
    }
}

/// The semilinear action of `β`, stored as `p·M_β` so that all entries are
/// integral; the homothety class is unaffected by the factor `p`.
#[derive(Clone, Debug)]
pub struct BetaAction {
    /// `[[p·conj(a), p·conj(b)], [conj(c), p·a]]`, applied to `conj(g)`.
    pub nmat: Mat2,
    /// `ν_p(det M_β)`
    pub det_valuation: i64,
}

impl BetaAction {
    /// Image of a vertex.
    pub fn act(&self, v: &LatticeVertex) -> Result<LatticeVertex> {
        let p = self.nmat[0][0].prime();
        let n = self.nmat[0][0].c0.precision();
        canonicalize(&mat_mul(&self.nmat, &mat_conj(&v.basis(p, n)?)))
    }
}

pub fn beta_action(j: &SpecialEndo) -> Result<BetaAction> {
    let p = j.prime;
    let n = j.a.c0.precision();
    let pp = PAdicValue::new(p, n, p)?;
    let nmat: Mat2 = [[j.a.conj().scale(&pp), j.b.conj().scale(&pp)], [j.c.conj(), j.a.scale(&pp)]];
    let det = &(&nmat[0][0] * &nmat[1][1]) - &(&nmat[0][1] * &nmat[1][0]);
    let found = det.raw_valuation().map(i64::from).ok_or(Error::SingularMatrix)? - 2;
    let expected = i64::from(j.exponent()?) - 1;
    if found != expected {
        return Err(Error::InconsistentDeterminant { found, expected });
    }
    Ok(BetaAction { nmat, det_valuation: found })
}

/// The fixed point set of `β` inside a ball.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FixedLocus {
    /// Fixed vertices (a `(p+1)`-regular subtree, truncated by the ball).
    Subtree(Vec<usize>),
    /// `β` swaps the two endpoints; the fixed point is the midpoint.
    Edge(usize, usize),
}

impl FixedLocus {
    pub fn kind(&self) -> &'static str {
        match self {
            FixedLocus::Subtree(_) => "subtree",
            FixedLocus::Edge(..) => "edge",
        }
    }
}

/// Locates the fixed locus from the midpoint of `[o, β(o)]` and grows it
/// through fixed neighbors.
pub fn fixed_locus(j: &SpecialEndo, ball: &TreeBall) -> Result<FixedLocus> {
    let a = j.exponent()?;
    let needed = a / 2 + 1;
    if ball.radius < needed {
        return Err(Error::RadiusTooSmall { radius: ball.radius, needed });
    }
    let beta = beta_action(j)?;
    let image = beta.act(&ball.vertices[0])?;
    let iw = ball.lookup(&image).ok_or(Error::RadiusTooSmall { radius: ball.radius, needed: ball.radius + 1 })?;
    let path = ball.path(0, iw);
    let len = path.len() - 1;
    let locus = if len.is_multiple_of(2) {
        let mid = path[len / 2];
        if beta.act(&ball.vertices[mid])? != ball.vertices[mid] {
            return Err(Error::ShapeViolation("midpoint of [o, beta(o)] is not fixed".into()));
        }
        FixedLocus::Subtree(grow_fixed(&beta, ball, mid)?)
    } else {
        let (u, w) = (path[len / 2], path[len / 2 + 1]);
        if beta.act(&ball.vertices[u])? != ball.vertices[w] || beta.act(&ball.vertices[w])? != ball.vertices[u] {
            return Err(Error::ShapeViolation("middle edge of [o, beta(o)] is not inverted".into()));
        }
        FixedLocus::Edge(u.min(w), u.max(w))
    };
    let parity_ok = matches!((&locus, a % 2), (FixedLocus::Subtree(_), 1) | (FixedLocus::Edge(..), 0));
    if !parity_ok {
        return Err(Error::ShapeViolation(format!("{} locus for exponent {a}", locus.kind())));
    }
    Ok(locus)
}

fn grow_fixed(beta: &BetaAction, ball: &TreeBall, start: usize) -> Result<Vec<usize>> {
    let p = ball.prime;
    let mut is_fixed: HashMap<usize, bool> = HashMap::from([(start, true)]);
    let mut order = vec![start];
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        if !ball.is_interior(v) {
            continue;
        }
        let mut count = 0;
        for &w in &ball.adj[v] {
            let f = match is_fixed.get(&w) {
                Some(&f) => f,
                None => {
                    let f = beta.act(&ball.vertices[w])? == ball.vertices[w];
                    is_fixed.insert(w, f);
                    if f {
                        order.push(w);
                        queue.push_back(w);
                    }
                    f
                }
            };
            count += usize::from(f);
        }
        if count as u64 != p + 1 {
            return Err(Error::ShapeViolation(format!("fixed vertex {v} has {count} fixed neighbors")));
        }
    }
    order.sort_unstable();
    Ok(order)
}

/// Fixed vertices found by testing every vertex of the ball.
pub fn fixed_vertices_by_scan(j: &SpecialEndo, ball: &TreeBall) -> Result<Vec<usize>> {
    let beta = beta_action(j)?;
    let mut out = Vec::new();
    for (i, v) in ball.vertices.iter().enumerate() {
        if &beta.act(v)? == v {
            out.push(i);
        }
    }
    Ok(out)
}

/// Doubled distance from each vertex to the fixed locus (half-integral for
/// an edge midpoint).
pub fn doubled_distances(locus: &FixedLocus, ball: &TreeBall) -> Vec<Option<u32>> {
    let (sources, offset) = match locus {
        FixedLocus::Subtree(vs) => (vs.clone(), 0),
        FixedLocus::Edge(u, w) => (vec![*u, *w], 1),
    };
    let mut d = vec![None; ball.len()];
    let mut queue = VecDeque::new();
    for s in sources {
        d[s] = Some(offset);
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        let du = d[u].expect("queued vertices carry a distance");
        for &w in &ball.adj[u] {
            if d[w].is_none() {
                d[w] = Some(du + 2);
                queue.push_back(w);
            }
        }
    }
    d
}

/// Fixed locus and distance labels of one endomorphism on a ball. The same
/// data serves `j/p^l` for every `l`, since scaling does not move the locus.
#[derive(Clone, Debug)]
pub struct LocusData {
    pub exponent: u32,
    pub unit_class: i8,
    pub locus: FixedLocus,
    pub d2: Vec<Option<u32>>,
}

impl LocusData {
    pub fn compute(j: &SpecialEndo, ball: &TreeBall) -> Result<Self> {
        let locus = fixed_locus(j, ball)?;
        let d2 = doubled_distances(&locus, ball);
        Ok(Self { exponent: j.exponent()?, unit_class: j.unit_class(), locus, d2 })
    }

    /// Fiber exponent `r = ((b-1) - 2d)/2` of a vertex in `D(j)_p` when
    /// `ν(Q) = b`, or `None` off the support.
    pub fn fiber_exponent(&self, v: usize, b: i64) -> Option<u32> {
        let d = i64::from(self.d2[v]?);
        (b >= 1 && d < b).then(|| ((b - 1 - d) / 2) as u32)
    }

    pub fn core_edge(&self) -> Option<(usize, usize)> {
        match self.locus {
            FixedLocus::Edge(u, w) => Some((u, w)),
            FixedLocus::Subtree(_) => None,
        }
    }

    pub fn fixed_set(&self) -> BTreeSet<usize> {
        match &self.locus {
            FixedLocus::Subtree(v) => v.iter().copied().collect(),
            FixedLocus::Edge(..) => BTreeSet::new(),
        }
    }
}

/// Lines with multiplicities plus the horizontal `s`-component.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FiberDivisor {
    pub lines: BTreeMap<usize, BigInt>,
    /// Zero when there is no `s`-part.
    pub s_multiplicity: BigInt,
    pub s_attach: Option<(usize, usize)>,
}

fn check_radius(ball: &TreeBall, exponent: u32) -> Result<()> {
    let needed = exponent.saturating_sub(1) / 2 + 1;
    if ball.radius < needed {
        return Err(Error::RadiusTooSmall { radius: ball.radius, needed });
    }
    Ok(())
}

/// `Z(j)_p` for `ν(Q(j)) = exponent`: lines at distance `d ≤ (a-1)/2` with
/// multiplicity `1 + p + … + p^{(a-1)/2-d}`, plus `p^{a/2}·s` for even `a`.
pub fn special_fiber_divisor(exponent: u32, data: &LocusData, ball: &TreeBall) -> Result<FiberDivisor> {
    check_radius(ball, exponent)?;
    let p = BigInt::from(ball.prime);
    let mut lines = BTreeMap::new();
    for v in 0..ball.len() {
        if let Some(r) = data.fiber_exponent(v, i64::from(exponent)) {
            let m: BigInt = (0..=r).map(|k| num_traits::pow(p.clone(), k as usize)).sum();
            lines.insert(v, m);
        }
    }
    let (s_multiplicity, s_attach) = if exponent.is_multiple_of(2) {
        (num_traits::pow(p, (exponent / 2) as usize), data.core_edge())
    } else {
        (BigInt::zero(), None)
    };
    Ok(FiberDivisor { lines, s_multiplicity, s_attach })
}

/// `D(j)_p`: multiplicity `p^{(a-1)/2-d}` on lines, `s`-part
/// `p^{a/2-1}(p-1)` for even `a ≥ 2` and `1` for `a = 0`.
pub fn difference_fiber_divisor(exponent: u32, data: &LocusData, ball: &TreeBall) -> Result<FiberDivisor> {
    check_radius(ball, exponent)?;
    let p = BigInt::from(ball.prime);
    let mut lines = BTreeMap::new();
    for v in 0..ball.len() {
        if let Some(r) = data.fiber_exponent(v, i64::from(exponent)) {
            lines.insert(v, num_traits::pow(p.clone(), r as usize));
        }
    }
    let (s_multiplicity, s_attach) = match exponent {
        0 => (BigInt::one(), data.core_edge()),
        a if a % 2 == 0 => (num_traits::pow(p.clone(), (a / 2 - 1) as usize) * (&p - 1), data.core_edge()),
        _ => (BigInt::zero(), None),
    };
    Ok(FiberDivisor { lines, s_multiplicity, s_attach })
}

/// Relative position of the special fibers of two orthogonal cycles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairGeometry {
    /// Both odd: the fixed subtrees share exactly one vertex.
    SingleLine,
    /// Both odd: the fixed subtrees share a bi-infinite geodesic.
    Apartment,
    /// One even: its fixed edge has both endpoints in the odd one's subtree.
    CoreOnEdge,
}

/// The geometry predicted by exponent parities and `χ(-ε₁ε₂)`.
pub fn predicted_pair_geometry(p: u64, a1: u32, e1: i8, a2: u32, e2: i8) -> Option<PairGeometry> {
    let chi_m1 = crate::padic::legendre_u64(p - 1, p);
    match (a1 % 2, a2 % 2) {
        (1, 1) if chi_m1 * e1 * e2 == 1 => Some(PairGeometry::SingleLine),
        (1, 1) => Some(PairGeometry::Apartment),
        (0, 0) => None,
        _ => Some(PairGeometry::CoreOnEdge),
    }
}

/// Reads the pair geometry off the fixed loci and checks it against the
/// residue-character prediction.
pub fn classify_pair_geometry(d1: &LocusData, d2: &LocusData, ball: &TreeBall) -> Result<PairGeometry> {
    let p = ball.prime;
    let predicted = predicted_pair_geometry(p, d1.exponent, d1.unit_class, d2.exponent, d2.unit_class)
        .ok_or_else(|| Error::UnsupportedConfiguration("both exponents even".into()))?;
    let observed = match (&d1.locus, &d2.locus) {
        (FixedLocus::Subtree(_), FixedLocus::Subtree(_)) => {
            let shared: BTreeSet<usize> = d1.fixed_set().intersection(&d2.fixed_set()).copied().collect();
            let shared_nbrs = |v: usize| ball.adj[v].iter().filter(|w| shared.contains(w)).count();
            if shared.len() == 1 && shared.iter().all(|&v| ball.is_interior(v) && shared_nbrs(v) == 0) {
                PairGeometry::SingleLine
            } else if shared.len() > 1
                && shared.iter().all(|&v| !ball.is_interior(v) || shared_nbrs(v) == 2)
                && shared.iter().filter(|&&v| !ball.is_interior(v)).count() == 2
            {
                PairGeometry::Apartment
            } else {
                return Err(Error::GeometryViolation(format!("{} shared fixed vertices", shared.len())));
            }
        }
        (FixedLocus::Subtree(_), FixedLocus::Edge(u, w)) | (FixedLocus::Edge(u, w), FixedLocus::Subtree(_)) => {
            let sub = if matches!(d1.locus, FixedLocus::Subtree(_)) { d1.fixed_set() } else { d2.fixed_set() };
            if sub.contains(u) && sub.contains(w) {
                PairGeometry::CoreOnEdge
            } else {
                return Err(Error::GeometryViolation("fixed edge leaves the odd subtree".into()));
            }
        }
        _ => return Err(Error::UnsupportedConfiguration("both loci are edges".into())),
    };
    if observed != predicted {
        return Err(Error::GeometryViolation(format!("observed {observed:?}, predicted {predicted:?}")));
    }
    Ok(observed)
}

/// Draws three pairwise orthogonal endomorphisms with `ν_p(Q(j_i)) = a_i`
/// and `χ` of the unit part equal to the target class: random small
/// coordinate vectors are projected onto the orthogonal complement of the
/// ones already chosen, made primitive, and scaled by a power of `p`.
pub fn sample_orthogonal_triple(p: u64, targets: [(u32, i8); 3], seed: u64, precision: u32) -> Result<[SpecialEndo; 3]> {
    const RESTARTS: usize = 40;
    const TRIES: usize = 2_000;
    let inv = TInvariants::from_exponents(p, targets.map(|t| t.0), targets.map(|t| t.1))?;
    if !inv.is_admissible() {
        return Err(Error::Inadmissible);
    }
    let g = coordinate_gram(p);
    let form = |x: &[BigInt; 4], y: &[BigInt; 4]| -> BigInt { (0..4).map(|k| &g[k] * &x[k] * &y[k]).sum() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // A poor early choice can leave a complement lattice whose primitive
    // vectors all have too large a valuation, so stuck draws restart.
    'restart: for _ in 0..RESTARTS {
        let mut chosen: Vec<[BigInt; 4]> = Vec::new();
        for &(a, class) in &targets {
            let mut found = None;
            for _ in 0..TRIES {
                let x: [BigInt; 4] = std::array::from_fn(|_| BigInt::from(rng.gen_range(-4i64..=4)));
                let Some(y) = project_out(&x, &chosen, &form) else { continue };
                let q = form(&y, &y);
                let Some(k) = int_valuation(&q, p) else { continue };
                if k > a || (a - k) % 2 != 0 || chi_of_unit_part(&q, p) != class {
                    continue;
                }
                let s = pow_big(p, (a - k) / 2);
                found = Some(y.map(|c| c * &s));
                break;
            }
            match found {
                Some(v) => chosen.push(v),
                None => continue 'restart,
            }
        }
        let mut out = Vec::with_capacity(3);
        for c in chosen {
            out.push(endo_from_coords(p, c, precision)?);
        }
        return Ok(out.try_into().expect("three endomorphisms"));
    }
    Err(Error::SearchExhausted(format!("no orthogonal triple for targets {targets:?}")))
}

/// Primitive integral vector along `x` minus its projection onto the span
/// of the (pairwise orthogonal) `basis`.
fn project_out(x: &[BigInt; 4], basis: &[[BigInt; 4]], form: &dyn Fn(&[BigInt; 4], &[BigInt; 4]) -> BigInt) -> Option<[BigInt; 4]> {
    let mut v: [BigRational; 4] = x.clone().map(BigRational::from_integer);
    for b in basis {
        let coef = BigRational::new(form(x, b), form(b, b));
        for k in 0..4 {
            v[k] -= &coef * BigRational::from_integer(b[k].clone());
        }
    }
    let den = v.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: [BigInt; 4] = v.map(|c| (c * BigRational::from_integer(den.clone())).to_integer());
    let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
    if g.is_zero() {
        return None;
    }
    Some(ints.map(|c| c / &g))
}

/// Intersection number of two lines inside `D(j)_p` with `ν(Q(j)) = b`:
/// 1 for adjacent lines, 0 for distinct non-adjacent ones, and for the
/// self-intersection `-(p+1)` if `b = 1`, `-2p` if the line already lies in
/// `Z(j/p)` and `-p` otherwise.
pub fn line_pairing(data: &LocusData, b: i64, ball: &TreeBall, u: usize, w: usize) -> Result<BigInt> {
    if data.fiber_exponent(u, b).is_none() || data.fiber_exponent(w, b).is_none() {
        return Err(Error::NotInAmbient);
    }
    let p = BigInt::from(ball.prime);
    Ok(if u != w {
        if ball.adj[u].contains(&w) {
            BigInt::one()
        } else {
            BigInt::zero()
        }
    } else if b == 1 {
        -(p + BigInt::one())
    } else if i64::from(data.d2[u].expect("in support")) <= b - 3 {
        -(p * BigInt::from(2))
    } else {
        -p
    })
}

/// Checks `(P, D(j)_p) = 0` for every interior line `P` of the support.
pub fn check_zero_pairing(data: &LocusData, b: u32, ball: &TreeBall) -> Result<usize> {
    let div = difference_fiber_divisor(b, data, ball)?;
    let bb = i64::from(b);
    let mut checked = 0;
    for &u in div.lines.keys() {
        if !ball.is_interior(u) {
            continue;
        }
        let mut total = BigInt::zero();
        for w in std::iter::once(u).chain(ball.adj[u].iter().copied()) {
            if let Some(m) = div.lines.get(&w) {
                total += m * line_pairing(data, bb, ball, u, w)?;
            }
        }
        if let Some((x, y)) = div.s_attach {
            if u == x || u == y {
                total += &div.s_multiplicity;
            }
        }
        if !total.is_zero() {
            return Err(Error::ConsistencyViolation(format!("(P, D(j)) = {total} at vertex {u}")));
        }
        checked += 1;
    }
    Ok(checked)
}

/// Number of vertices of the ball at a given distance from the center.
pub fn shell_size(ball: &TreeBall, r: u32) -> usize {
    ball.dist.iter().filter(|&&d| d == r).count()
}

/// The fundamental matrix `(B(j_i, j_k))` of a triple.
pub fn fundamental_matrix(js: &[SpecialEndo; 3]) -> [[BigInt; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|k| js[i].gram(&js[k])))
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: u32 = 24;

    #[test]
    fn neighbor_symmetry() {
        for p in [3u64, 5] {
            let o = LatticeVertex::standard();
            let nb = neighbors(&o, p, N).unwrap();
            assert_eq!(nb.len() as u64, p * p + 1);
            for w in &nb {
                assert!(neighbors(w, p, N).unwrap().contains(&o));
            }
        }
    }

    #[test]
    fn ball_size() {
        let ball = TreeBall::build(3, 3, N).unwrap();
        assert_eq!(ball.len() as u64, TreeBall::expected_size(3, 3));
        assert_eq!(ball.len(), 911);
        assert_eq!(shell_size(&ball, 1), 10);
    }

    #[test]
    fn coordinate_q_values() {
        let s = |k: usize| {
            let mut c = [0i64; 4];
            c[k] = 1;
            SpecialEndo::from_i64(3, c, N).unwrap()
        };
        assert_eq!(s(0).q_value, BigInt::from(1));
        assert_eq!(s(1).q_value, BigInt::from(-1));
        assert_eq!(s(2).q_value, BigInt::from(3));
        assert_eq!(s(3).q_value, BigInt::from(-6));
        assert_eq!(s(0).gram(&s(2)), BigInt::zero());
    }

    #[test]
    fn determinant_valuations() {
        let b = |c: [i64; 4]| beta_action(&SpecialEndo::from_i64(3, c, N).unwrap()).unwrap().det_valuation;
        assert_eq!(b([0, 0, 1, 0]), 0);
        assert_eq!(b([1, 0, 0, 0]), -1);
        assert_eq!(b([0, 0, 3, 0]), 2);
    }

    #[test]
    fn fixed_loci_shapes() {
        let ball = TreeBall::build(3, 3, N).unwrap();
        let e = |c: [i64; 4]| SpecialEndo::from_i64(3, c, N).unwrap();
        let l3 = fixed_locus(&e([0, 0, 1, 0]), &ball).unwrap();
        match &l3 {
            FixedLocus::Subtree(v) => {
                assert_eq!(v.len(), 1 + 4 + 12 + 36);
                assert!(v.contains(&0));
                assert_eq!(v, &fixed_vertices_by_scan(&e([0, 0, 1, 0]), &ball).unwrap());
            }
            other => panic!("{other:?}"),
        }
        let l1 = fixed_locus(&e([1, 0, 0, 0]), &ball).unwrap();
        assert!(matches!(l1, FixedLocus::Edge(..)));
        assert!(fixed_vertices_by_scan(&e([1, 0, 0, 0]), &ball).unwrap().is_empty());
        assert_eq!(fixed_locus(&e([3, 0, 0, 0]), &ball).unwrap(), l1);
    }

    #[test]
    fn divisor_patterns() {
        let ball = TreeBall::build(3, 3, N).unwrap();
        let j = SpecialEndo::from_i64(3, [0, 0, 3, 0], N).unwrap();
        let data = LocusData::compute(&j, &ball).unwrap();
        let z = special_fiber_divisor(3, &data, &ball).unwrap();
        let d = difference_fiber_divisor(3, &data, &ball).unwrap();
        for (&v, m) in &z.lines {
            let dist = data.d2[v].unwrap() / 2;
            let (zm, dm) = if dist == 0 { (4, 3) } else { (1, 1) };
            assert_eq!(m, &BigInt::from(zm));
            assert_eq!(d.lines[&v], BigInt::from(dm));
        }
        assert!(z.s_multiplicity.is_zero());
        let j0 = SpecialEndo::from_i64(3, [1, 0, 0, 0], N).unwrap();
        let d0 = difference_fiber_divisor(0, &LocusData::compute(&j0, &ball).unwrap(), &ball).unwrap();
        assert!(d0.lines.is_empty());
        assert_eq!(d0.s_multiplicity, BigInt::one());
        assert!(d0.s_attach.is_some());
    }

    #[test]
    fn zero_pairing_small() {
        let ball = TreeBall::build(3, 3, N).unwrap();
        for (c, b) in [([0, 0, 1, 0], 1), ([0, 0, 3, 0], 3), ([1, 0, 0, 0], 0), ([3, 0, 0, 0], 2)] {
            let j = SpecialEndo::from_i64(3, c, N).unwrap();
            let data = LocusData::compute(&j, &ball).unwrap();
            check_zero_pairing(&data, b, &ball).unwrap();
        }
    }

    #[test]
    fn pair_geometry_of_coordinate_vectors() {
        let ball = TreeBall::build(3, 3, N).unwrap();
        let data = |c: [i64; 4]| LocusData::compute(&SpecialEndo::from_i64(3, c, N).unwrap(), &ball).unwrap();
        let (s1, s3, s4) = (data([1, 0, 0, 0]), data([0, 0, 1, 0]), data([0, 0, 0, 1]));
        assert_eq!(classify_pair_geometry(&s3, &s4, &ball).unwrap(), PairGeometry::Apartment);
        assert_eq!(classify_pair_geometry(&s1, &s3, &ball).unwrap(), PairGeometry::CoreOnEdge);
    }

    #[test]
    fn sampled_triples_are_orthogonal() {
        let js = sample_orthogonal_triple(3, [(0, 1), (0, -1), (1, 1)], 7, N).unwrap();
        let t = fundamental_matrix(&js);
        for i in 0..3 {
            for k in 0..3 {
                if i != k {
                    assert!(t[i][k].is_zero());
                }
            }
        }
        assert_eq!(js.iter().map(|j| j.exponent().unwrap()).collect::<Vec<_>>(), vec![0, 0, 1]);
        assert!(matches!(sample_orthogonal_triple(3, [(0, 1), (0, 1), (0, 1)], 1, N), Err(Error::Inadmissible)));
    }
}
