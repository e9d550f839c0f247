//! Representation densities `α_p(S, U)` computed from the counting
//! definition: the number of `x ∈ M_{m,n}(Z/p^t)` with `xᵗ S x ≡ U`,
//! normalized by `p^{-t·n(2m-n-1)/2}`, at increasing `t` until two
//! consecutive levels agree.
//!
//! Counting is column by column. For one column the admissible vectors are
//! counted by a dynamic program over the coordinates whose state is the
//! partial value of `Q(x_k)` and of the pairings `B(x_i, x_k)` against the
//! columns already fixed. Solutions can be listed by walking the stored
//! layers backwards.
//!
//! With [`Strategy::Transport`], a column whose target block so far is
//! unimodular (diagonal `S` with unit entries, diagonal `U`) is not
//! enumerated: the orthogonal group of `S` modulo `p^t` permutes its
//! solutions transitively while preserving every earlier column, so the
//! number of completions is the same for each of them. One representative
//! is carried forward and the completion count is multiplied by the number
//! of solutions. [`Strategy::Enumerate`] recurses into every solution and
//! serves as the cross-check.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::padic::{check_prime, int_valuation, nonsquare_unit, pow_big};
use crate::quadform::{diagonalize, SymMatrix3};

/// Default cap on elementary operations (one state update counts as one).
pub const DEFAULT_BUDGET: u64 = 2_000_000_000;

/// A nonsingular symmetric integer matrix read over `Z_p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GramMatrix {
    prime: u64,
    entries: Vec<Vec<BigInt>>,
}

impl GramMatrix {
    pub fn new(prime: u64, entries: Vec<Vec<BigInt>>) -> Result<Self> {
        check_prime(prime)?;
        let m = entries.len();
        if m == 0 || entries.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidInput("Gram matrix must be square and non-empty".into()));
        }
        for i in 0..m {
            for j in 0..i {
                if entries[i][j] != entries[j][i] {
                    return Err(Error::InvalidInput(format!("entry ({i},{j}) differs from ({j},{i})")));
                }
            }
        }
        let g = Self { prime, entries };
        if g.det().is_zero() {
            return Err(Error::SingularMatrix);
        }
        Ok(g)
    }

    pub fn diag(prime: u64, d: &[i64]) -> Result<Self> {
        let m = d.len();
        let entries = (0..m)
            .map(|i| (0..m).map(|j| if i == j { BigInt::from(d[i]) } else { BigInt::zero() }).collect())
            .collect();
        Self::new(prime, entries)
    }

    /// `diag(1, -1, 1, -Δ)`, the anisotropic quaternary form of discriminant
    /// class `Δ`.
    pub fn standard_s(prime: u64) -> Result<Self> {
        check_prime(prime)?;
        Self::diag(prime, &[1, -1, 1, -(nonsquare_unit(prime) as i64)])
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<BigInt>] {
        &self.entries
    }

    pub fn is_diagonal(&self) -> bool {
        let m = self.size();
        (0..m).all(|i| (0..m).all(|j| i == j || self.entries[i][j].is_zero()))
    }

    /// Determinant by fraction-free elimination.
    pub fn det(&self) -> BigInt {
        let m = self.size();
        let mut a = self.entries.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..m {
            if a[k][k].is_zero() {
                match (k + 1..m).find(|&r| !a[r][k].is_zero()) {
                    Some(r) => {
                        a.swap(k, r);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..m {
                for j in k + 1..m {
                    a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        sign * &a[m - 1][m - 1]
    }
}

/// `S ⊕ I_r ⊕ (-I_r)`.
pub fn extend_s_r(s: &GramMatrix, r: usize) -> GramMatrix {
    let m = s.size();
    let n = m + 2 * r;
    let mut entries = vec![vec![BigInt::zero(); n]; n];
    for i in 0..m {
        for j in 0..m {
            entries[i][j] = s.entries[i][j].clone();
        }
    }
    for k in 0..r {
        entries[m + 2 * k][m + 2 * k] = BigInt::one();
        entries[m + 2 * k + 1][m + 2 * k + 1] = -BigInt::one();
    }
    GramMatrix { prime: s.prime, entries }
}

/// How columns after the first solution are handled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Multiply by orbit sizes where the unimodular-prefix argument applies.
    Transport,
    /// Recurse into every solution of every non-final column.
    Enumerate,
}

/// A count at one truncation level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountResult {
    pub t: u32,
    pub raw_count: BigInt,
    /// `p^{-t·n(2m-n-1)/2} · raw_count`
    pub normalized: BigRational,
    pub stabilized: bool,
    /// Elementary operations spent on this level.
    pub ops: u64,
}

/// Counts `x ∈ M_{m,n}(Z/p^t)` with `xᵗ S x ≡ U (mod p^t)`.
pub fn brute_density(s: &GramMatrix, u: &GramMatrix, t: u32, budget: u64) -> Result<CountResult> {
    brute_density_with(s, u, t, budget, Strategy::Transport)
}

pub fn brute_density_with(s: &GramMatrix, u: &GramMatrix, t: u32, budget: u64, strategy: Strategy) -> Result<CountResult> {
    if s.prime != u.prime {
        return Err(Error::Mismatch);
    }
    if t == 0 {
        return Err(Error::InvalidInput("truncation level must be at least 1".into()));
    }
    let (m, n) = (s.size(), u.size());
    if n > m {
        return Err(Error::InvalidInput(format!("cannot represent rank {n} by rank {m}")));
    }
    if !s.is_diagonal() {
        return Err(Error::InvalidInput("the representing form must be diagonal".into()));
    }
    if strategy == Strategy::Transport && n == 3 && !u.is_diagonal() {
        let d = diagonal_equivalent(u, t)?;
        return brute_density_with(s, &d, t, budget, strategy);
    }
    let p = s.prime;
    let modulus = pow_big(p, t);
    let mm = modulus
        .to_u64()
        .filter(|&x| x < (1 << 31))
        .ok_or_else(|| Error::BudgetExceeded { estimated: modulus.clone(), budget })?;

    let order = column_order(u);
    let red = |x: &BigInt| x.mod_floor(&modulus).to_u64().expect("reduced below modulus");
    let targets: Vec<Vec<u64>> = order.iter().map(|&i| order.iter().map(|&j| red(&u.entries[i][j])).collect()).collect();
    let unit_col: Vec<bool> = order.iter().map(|&i| int_valuation(&u.entries[i][i], p) == Some(0)).collect();
    let s_diag: Vec<u64> = (0..m).map(|k| red(&s.entries[k][k])).collect();
    let s_unimodular = (0..m).all(|k| int_valuation(&s.entries[k][k], p) == Some(0));

    let mut ctx = Counter {
        modulus: mm,
        s_diag,
        targets,
        transport_ok: strategy == Strategy::Transport && s_unimodular && u.is_diagonal(),
        unit_col,
        budget,
        ops: 0,
    };
    let raw = ctx.count_from(&mut Vec::new())?;
    let exp = u64::from(t) * (n as u64) * (2 * m as u64 - n as u64 - 1) / 2;
    let normalized = BigRational::new(BigInt::from(raw), num_traits::pow(BigInt::from(p), exp as usize));
    Ok(CountResult { t, raw_count: BigInt::from(raw), normalized, stabilized: false, ops: ctx.ops })
}

/// Columns sorted by the valuation of their diagonal target, smallest
/// first; ties keep the input order.
fn column_order(u: &GramMatrix) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..u.size()).collect();
    idx.sort_by_key(|&i| int_valuation(&u.entries[i][i], u.prime).unwrap_or(u32::MAX));
    idx
}

struct Counter {
    modulus: u64,
    s_diag: Vec<u64>,
    /// Target matrix in processing order, reduced mod `p^t`.
    targets: Vec<Vec<u64>>,
    transport_ok: bool,
    unit_col: Vec<bool>,
    budget: u64,
    ops: u64,
}

/// The forward tables of the per-column dynamic program.
struct Layers {
    dims: usize,
    /// `tables[c][state]` counts assignments of coordinates `0..c`.
    tables: Vec<Vec<u128>>,
}

impl Counter {
    fn charge(&mut self, cost: u128) -> Result<()> {
        let total = u128::from(self.ops) + cost;
        if total > u128::from(self.budget) {
            return Err(Error::BudgetExceeded { estimated: BigInt::from(total), budget: self.budget });
        }
        self.ops = total as u64;
        Ok(())
    }

    fn encode(&self, comps: &[u64]) -> usize {
        comps.iter().rev().fold(0usize, |acc, &c| acc * self.modulus as usize + c as usize)
    }

    fn decode(&self, mut idx: usize, dims: usize, out: &mut [u64]) {
        for slot in out.iter_mut().take(dims) {
            *slot = (idx % self.modulus as usize) as u64;
            idx /= self.modulus as usize;
        }
    }

    /// Change of `(Q, B_0, …)` when coordinate `c` takes the value `v`.
    fn delta(&self, prefix: &[Vec<u64>], c: usize, v: u64, out: &mut [u64]) {
        let m = self.modulus as u128;
        let s = u128::from(self.s_diag[c]);
        let v = u128::from(v);
        out[0] = (s * v % m * v % m) as u64;
        for (i, col) in prefix.iter().enumerate() {
            out[i + 1] = (s * u128::from(col[c]) % m * v % m) as u64;
        }
    }

    fn target_state(&self, k: usize) -> Vec<u64> {
        let mut comps = vec![self.targets[k][k]];
        comps.extend((0..k).map(|i| self.targets[i][k]));
        comps
    }

    fn run_dp(&mut self, prefix: &[Vec<u64>], keep: bool) -> Result<Layers> {
        let dims = prefix.len() + 1;
        let mm = self.modulus as u128;
        let nstates = mm.checked_pow(dims as u32).unwrap_or(u128::MAX);
        let m = self.s_diag.len() as u128;
        self.charge(m.saturating_mul(nstates).saturating_mul(mm).saturating_mul(dims as u128))?;
        let nstates = nstates as usize;
        let mut cur = vec![0u128; nstates];
        cur[0] = 1;
        let mut tables = Vec::new();
        let mut comps = vec![0u64; dims];
        let mut d = vec![0u64; dims];
        let deltas: Vec<Vec<Vec<u64>>> = (0..self.s_diag.len())
            .map(|c| {
                (0..self.modulus)
                    .map(|v| {
                        self.delta(prefix, c, v, &mut d);
                        d.clone()
                    })
                    .collect()
            })
            .collect();
        for dc in &deltas {
            let mut next = vec![0u128; nstates];
            for (s, &w) in cur.iter().enumerate() {
                if w == 0 {
                    continue;
                }
                self.decode(s, dims, &mut comps);
                for dv in dc {
                    let mut idx = 0usize;
                    for k in (0..dims).rev() {
                        let x = (comps[k] + dv[k]) % self.modulus;
                        idx = idx * self.modulus as usize + x as usize;
                    }
                    next[idx] += w;
                }
            }
            if keep {
                tables.push(std::mem::replace(&mut cur, next));
            } else {
                cur = next;
            }
        }
        tables.push(cur);
        Ok(Layers { dims, tables })
    }

    /// Lists solutions of the column constraint by walking the layers
    /// backwards from the target state; stops after `limit` solutions.
    fn solutions(&mut self, prefix: &[Vec<u64>], layers: &Layers, target: &[u64], limit: usize) -> Result<Vec<Vec<u64>>> {
        let m = self.s_diag.len();
        let mut out = Vec::new();
        let mut partial = vec![0u64; m];
        let mut d = vec![0u64; layers.dims];
        self.walk(prefix, layers, m, target.to_vec(), &mut partial, &mut d, &mut out, limit)?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        &mut self,
        prefix: &[Vec<u64>],
        layers: &Layers,
        c: usize,
        state: Vec<u64>,
        partial: &mut Vec<u64>,
        d: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
        limit: usize,
    ) -> Result<()> {
        if out.len() >= limit {
            return Ok(());
        }
        if c == 0 {
            out.push(partial.clone());
            return Ok(());
        }
        self.charge(u128::from(self.modulus))?;
        for v in 0..self.modulus {
            self.delta(prefix, c - 1, v, d);
            let prev: Vec<u64> = state.iter().zip(d.iter()).map(|(&s, &x)| (s + self.modulus - x) % self.modulus).collect();
            if layers.tables[c - 1][self.encode(&prev)] > 0 {
                partial[c - 1] = v;
                self.walk(prefix, layers, c - 1, prev, partial, d, out, limit)?;
                if out.len() >= limit {
                    return Ok(());
                }
            }
        }
        Ok(())
    }

    /// Number of ways to complete the columns fixed in `prefix`.
    fn count_from(&mut self, prefix: &mut Vec<Vec<u64>>) -> Result<u128> {
        let k = prefix.len();
        let n = self.targets.len();
        if k == n {
            return Ok(1);
        }
        let last = k + 1 == n;
        let layers = self.run_dp(prefix, !last)?;
        let target = self.target_state(k);
        let count = layers.tables.last().expect("final layer")[self.encode(&target)];
        if last || count == 0 {
            return Ok(count);
        }
        if self.transport_ok && self.unit_col[..=k].iter().all(|&u| u) {
            let rep = self.solutions(prefix, &layers, &target, 1)?.pop().ok_or_else(|| {
                Error::ConsistencyViolation("positive count but no solution found".into())
            })?;
            prefix.push(rep);
            let rest = self.count_from(prefix)?;
            prefix.pop();
            return Ok(count * rest);
        }
        let sols = self.solutions(prefix, &layers, &target, usize::MAX)?;
        let mut total = 0u128;
        for x in sols {
            prefix.push(x);
            total += self.count_from(prefix)?;
            prefix.pop();
        }
        Ok(total)
    }
}

/// A diagonal integral target `VᵗUV` with `V ∈ GL_3(Z_p)`, correct modulo
/// `p^t`. Counts are unchanged since `x ↦ xV` permutes the solutions.
fn diagonal_equivalent(u: &GramMatrix, t: u32) -> Result<GramMatrix> {
    let entries: [[BigInt; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| u.entries[i][j].clone()));
    let form = diagonalize(&SymMatrix3::new(u.prime, entries)?)?;
    let known = form.raw_diagonal.iter().map(|x| x.precision()).min().unwrap_or(0);
    if known < t {
        return Err(Error::PrecisionExhausted(format!("target known to {known} digits, level {t}")));
    }
    let diag = form.raw_diagonal.iter().map(|x| x.residue().clone()).collect::<Vec<_>>();
    let rows = (0..3)
        .map(|i| (0..3).map(|j| if i == j { diag[i].clone() } else { BigInt::zero() }).collect())
        .collect();
    GramMatrix::new(u.prime, rows)
}

/// Computes levels `t = 1, 2, …` until two consecutive normalized values
/// agree and returns the later one, marked as stabilized.
pub fn stabilized_density(s: &GramMatrix, u: &GramMatrix, t_max: u32, budget: u64) -> Result<CountResult> {
    if t_max < 2 {
        return Err(Error::InvalidInput("t_max must be at least 2".into()));
    }
    let mut prev = brute_density(s, u, 1, budget)?;
    let mut spent = prev.ops;
    for t in 2..=t_max {
        let mut cur = brute_density(s, u, t, budget.saturating_sub(spent))?;
        spent += cur.ops;
        if cur.normalized == prev.normalized {
            cur.stabilized = true;
            cur.ops = spent;
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NoStabilization { t_max, last: prev.normalized })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn hyperbolic_plane_single_column() {
        let s = GramMatrix::diag(3, &[1, -1]).unwrap();
        for u in [1, 2] {
            let uu = GramMatrix::diag(3, &[u]).unwrap();
            for t in 1..=3 {
                let c = brute_density(&s, &uu, t, DEFAULT_BUDGET).unwrap();
                assert_eq!(c.normalized, r(2, 3), "u={u} t={t}");
            }
        }
    }

    #[test]
    fn extension_shapes() {
        let s = GramMatrix::standard_s(3).unwrap();
        assert_eq!(extend_s_r(&s, 0), s);
        let s1 = extend_s_r(&s, 1);
        assert_eq!(s1.size(), 6);
        assert_eq!(s1.entries()[4][4], BigInt::from(1));
        assert_eq!(s1.entries()[5][5], BigInt::from(-1));
        assert_eq!(extend_s_r(&s, 2).size(), 8);
    }

    #[test]
    fn determinant() {
        let g = GramMatrix::new(3, vec![vec![2.into(), 1.into()], vec![1.into(), 2.into()]]).unwrap();
        assert_eq!(g.det(), BigInt::from(3));
        assert_eq!(GramMatrix::standard_s(3).unwrap().det(), BigInt::from(2));
        assert!(GramMatrix::new(3, vec![vec![1.into(), 1.into()], vec![1.into(), 1.into()]]).is_err());
    }

    #[test]
    fn transport_matches_enumeration() {
        let s = GramMatrix::standard_s(3).unwrap();
        let cases: [(&[i64], u32); 6] = [(&[1, 2, 3], 1), (&[1, 1, 3], 1), (&[1, 2, 1], 1), (&[1, 2, 6], 1), (&[1, 3], 2), (&[2, 1], 2)];
        for (d, t_max) in cases {
            let u = GramMatrix::diag(3, d).unwrap();
            for t in 1..=t_max {
                let a = brute_density_with(&s, &u, t, DEFAULT_BUDGET, Strategy::Transport).unwrap();
                let b = brute_density_with(&s, &u, t, DEFAULT_BUDGET, Strategy::Enumerate).unwrap();
                assert_eq!(a.raw_count, b.raw_count, "{d:?} t={t}");
            }
        }
    }

    #[test]
    fn non_diagonal_target() {
        let s = GramMatrix::diag(3, &[1, -1, 1]).unwrap();
        let u = GramMatrix::new(3, vec![vec![2.into(), 1.into()], vec![1.into(), 2.into()]]).unwrap();
        let ud = GramMatrix::diag(3, &[2, 6]).unwrap();
        // [[2,1],[1,2]] is equivalent over Z_3 to diag(2, 3/2) ~ diag(2, 6)
        let a = brute_density(&s, &u, 2, DEFAULT_BUDGET).unwrap();
        let b = brute_density(&s, &ud, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(a.raw_count, b.raw_count);
    }

    #[test]
    fn budget_is_enforced() {
        let s = GramMatrix::standard_s(3).unwrap();
        let u = GramMatrix::diag(3, &[1, 2, 3]).unwrap();
        assert!(matches!(brute_density(&s, &u, 2, 10), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn unit_targets_stabilize_immediately() {
        let s = GramMatrix::standard_s(3).unwrap();
        let u = GramMatrix::diag(3, &[1, 2]).unwrap();
        let c = stabilized_density(&s, &u, 4, DEFAULT_BUDGET).unwrap();
        assert_eq!(c.t, 2);
        assert!(c.stabilized);
    }

    #[test]
    fn anisotropic_target_vanishes() {
        let s = GramMatrix::standard_s(3).unwrap();
        let u = GramMatrix::diag(3, &[1, 2, 3]).unwrap();
        let c = stabilized_density(&s, &u, 4, DEFAULT_BUDGET).unwrap();
        assert!(c.normalized.is_zero());
    }
}
