//! The five subcommands. Each returns a complete [`Report`] or an error;
//! nothing is printed until a command has fully succeeded.

use std::collections::BTreeMap;

use locint::building::{classify_pair_geometry, special_fiber_divisor, FixedLocus};
use locint::density::{extend_s_r, stabilized_density, GramMatrix};
use locint::intersect::{default_radius, intersection_for_invariants, sample_geometry, triple_combinatorial, IntersectOptions, TripleReport};
use locint::padic::default_precision;
use locint::siegel::{a_series, alpha_prime, closed_intersection, density_scale, ftilde};
use locint::{compute_invariants, diagonalize_at, Error, Result, TInvariants, TreeBall};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::input::ParsedInput;
use crate::report::Report;

/// Largest ball radius the intersect command builds without an explicit
/// `--radius`.
const AUTO_TREE_RADIUS: u32 = 5;

#[derive(Clone, Debug, Default)]
pub struct Provenance {
    pub prime: u64,
    pub precision: Option<u32>,
    pub radius: Option<u32>,
    pub seed: Option<u64>,
    pub budget: Option<u64>,
}

impl Provenance {
    fn to_json(&self) -> Value {
        let s = |x: Option<String>| x.map_or(Value::Null, Value::String);
        json!({
            "p": self.prime.to_string(),
            "precision": s(self.precision.map(|x| x.to_string())),
            "radius": s(self.radius.map(|x| x.to_string())),
            "seed": s(self.seed.map(|x| x.to_string())),
            "budget": s(self.budget.map(|x| x.to_string())),
            "version": env!("CARGO_PKG_VERSION"),
        })
    }
}

fn strs<T: ToString>(xs: &[T]) -> Value {
    Value::Array(xs.iter().map(|x| Value::String(x.to_string())).collect())
}

fn invariants_json(inv: &TInvariants) -> Value {
    json!({
        "exponents": strs(&inv.a),
        "classes": strs(&inv.classes),
        "sigma": inv.sigma.to_string(),
        "xi_tilde": inv.xi_tilde.to_string(),
        "eta": inv.eta.to_string(),
        "eps_sign": inv.eps_sign.to_string(),
        "admissible": inv.is_admissible(),
    })
}

fn invariant_columns(inv: &TInvariants) -> Vec<(String, String)> {
    let mut row = vec![("p".to_string(), inv.prime.to_string())];
    for k in 0..3 {
        row.push((format!("a{}", k + 1), inv.a[k].to_string()));
    }
    for k in 0..3 {
        row.push((format!("c{}", k + 1), inv.classes[k].to_string()));
    }
    row.extend([
        ("sigma".into(), inv.sigma.to_string()),
        ("xi_tilde".into(), inv.xi_tilde.to_string()),
        ("eta".into(), inv.eta.to_string()),
        ("eps_sign".into(), inv.eps_sign.to_string()),
        ("admissible".into(), inv.is_admissible().to_string()),
    ]);
    row
}

fn opt_str<T: ToString>(x: Option<&T>) -> Value {
    x.map_or(Value::Null, |v| Value::String(v.to_string()))
}

fn values_json(r: &TripleReport) -> Value {
    json!({
        "closed": r.value_closed.to_string(),
        "density": r.value_density.to_string(),
        "case_table": r.value_case_table.to_string(),
        "combinatorial": opt_str(r.value_combinatorial.as_ref()),
    })
}

fn value_columns(r: &TripleReport) -> Vec<(String, String)> {
    vec![
        ("closed".into(), r.value_closed.to_string()),
        ("density".into(), r.value_density.to_string()),
        ("case_table".into(), r.value_case_table.to_string()),
        ("combinatorial".into(), r.value_combinatorial.as_ref().map_or(String::new(), |v| v.to_string())),
        ("agreement".into(), r.agreement.to_string()),
    ]
}

fn invariants_of(input: &ParsedInput, precision: Option<u32>) -> Result<(TInvariants, u32)> {
    let vdet = locint::padic::int_valuation(&input.matrix.det(), input.prime).ok_or(Error::SingularMatrix)?;
    let n = precision.unwrap_or_else(|| default_precision(vdet));
    Ok((compute_invariants(&diagonalize_at(&input.matrix, n)?), n))
}

pub fn invariants(input: &ParsedInput, precision: Option<u32>) -> Result<Report> {
    let (inv, n) = invariants_of(input, precision)?;
    let prov = Provenance { prime: input.prime, precision: Some(n), ..Default::default() };
    let json = json!({
        "input": input.to_json(),
        "invariants": invariants_json(&inv),
        "provenance": prov.to_json(),
    });
    Ok(Report { json, rows: vec![invariant_columns(&inv)] })
}

pub struct IntersectArgs {
    pub precision: Option<u32>,
    pub radius: Option<u32>,
    pub seed: u64,
    pub skip_tree: bool,
    pub global_multiplier: Option<BigInt>,
}

pub fn intersect(input: &ParsedInput, args: &IntersectArgs) -> Result<Report> {
    let (inv, n) = invariants_of(input, args.precision)?;
    if !inv.is_admissible() {
        return Err(Error::Inadmissible);
    }
    let tree = !args.skip_tree && (args.radius.is_some() || default_radius(inv.a) <= AUTO_TREE_RADIUS);
    let opts = IntersectOptions {
        combinatorial: tree,
        radius: args.radius,
        seed: args.seed,
        global_multiplier: args.global_multiplier.clone(),
        ..Default::default()
    };
    let report = intersection_for_invariants(&inv, &opts)?;
    let mut notes = report.notes.clone();
    if !tree {
        notes.push("tree route not run; pass --radius to force it".into());
    }
    let prov = Provenance {
        prime: input.prime,
        precision: Some(n),
        radius: report.radius_used,
        seed: Some(args.seed),
        budget: None,
    };
    let mut json = json!({
        "input": input.to_json(),
        "invariants": invariants_json(&inv),
        "values": values_json(&report),
        "agreement": report.agreement,
    });
    if let (Some(m), Some(g)) = (&args.global_multiplier, &report.global_value) {
        json["global"] = json!({ "multiplier": m.to_string(), "value": g.to_string() });
    }
    json["notes"] = json!(notes);
    json["provenance"] = prov.to_json();
    let mut row = invariant_columns(&inv);
    row.extend(value_columns(&report));
    Ok(Report { json, rows: vec![row] })
}

pub struct DensityArgs {
    pub precision: Option<u32>,
    pub levels: Vec<u32>,
    pub oracle: bool,
    pub budget: u64,
    pub t_max: u32,
}

pub fn density(input: &ParsedInput, args: &DensityArgs) -> Result<Report> {
    let (inv, n) = invariants_of(input, args.precision)?;
    let p = input.prime;
    let series = a_series(&inv)?;
    let ap = alpha_prime(&inv)?;
    let scaled = density_scale(p) * &ap;
    let mut levels = Vec::new();
    let mut rows = Vec::new();
    let s = GramMatrix::standard_s(p)?;
    let u = GramMatrix::new(p, input.matrix.entries().iter().map(|r| r.to_vec()).collect())?;
    for &r in &args.levels {
        let x = BigRational::new(BigInt::one(), locint::padic::pow_big(p, r));
        let analytic = series.eval(&x);
        let mut level = json!({ "r": r.to_string(), "series_value": analytic.to_string(), "oracle": Value::Null });
        let mut row = vec![("r".to_string(), r.to_string()), ("series_value".to_string(), analytic.to_string())];
        if args.oracle {
            let c = stabilized_density(&extend_s_r(&s, r as usize), &u, args.t_max, args.budget)?;
            if c.normalized != analytic {
                return Err(Error::ConsistencyViolation(format!(
                    "r={r}: counted density {} differs from series value {analytic}",
                    c.normalized
                )));
            }
            level["oracle"] = json!({
                "t": c.t.to_string(),
                "raw_count": c.raw_count.to_string(),
                "normalized": c.normalized.to_string(),
                "operations": c.ops.to_string(),
            });
            row.push(("oracle".into(), c.normalized.to_string()));
        }
        levels.push(level);
        rows.push(row);
    }
    let admissible = inv.is_admissible();
    let closed = if admissible { Some(closed_intersection(&inv)?) } else { None };
    if let Some(c) = &closed {
        if BigRational::from_integer(c.clone()) != scaled {
            return Err(Error::ConsistencyViolation(format!("closed {c} vs density value {scaled}")));
        }
    }
    let prov = Provenance {
        prime: p,
        precision: Some(n),
        budget: args.oracle.then_some(args.budget),
        ..Default::default()
    };
    let json = json!({
        "input": input.to_json(),
        "invariants": invariants_json(&inv),
        "ftilde": ftilde(&inv)?.to_string(),
        "a_series": series.to_string(),
        "alpha_prime": ap.to_string(),
        "values": { "closed": opt_str(closed.as_ref()), "density": scaled.to_string() },
        "interpretation": if admissible { "intersection number" } else { "density derivative only; T is not admissible" },
        "levels": levels,
        "provenance": prov.to_json(),
    });
    Ok(Report { json, rows })
}

pub fn building(input: &ParsedInput, precision: Option<u32>, radius: Option<u32>, seed: u64) -> Result<Report> {
    let (inv, n) = invariants_of(input, precision)?;
    if !inv.is_admissible() {
        return Err(Error::Inadmissible);
    }
    let radius = radius.unwrap_or_else(|| default_radius(inv.a));
    let ball = TreeBall::build(inv.prime, radius, default_precision(inv.a[2] + radius))?;
    let geo = sample_geometry(&inv, seed, &ball)?;
    let mut endos = Vec::new();
    for (k, (j, data)) in geo.endos.iter().zip(&geo.data).enumerate() {
        let locus = match &data.locus {
            FixedLocus::Subtree(vs) => json!({ "kind": "subtree", "vertices_in_ball": vs.len().to_string() }),
            FixedLocus::Edge(u, w) => {
                json!({ "kind": "edge", "ends": [ball.vertices[*u].to_string(), ball.vertices[*w].to_string()] })
            }
        };
        let div = special_fiber_divisor(inv.a[k], data, &ball)?;
        let mut table: BTreeMap<BigInt, usize> = BTreeMap::new();
        for m in div.lines.values() {
            *table.entry(m.clone()).or_default() += 1;
        }
        let table: Map<String, Value> = table.into_iter().map(|(m, c)| (m.to_string(), json!(c.to_string()))).collect();
        endos.push(json!({
            "coordinates": strs(&j.coords),
            "q": j.q_value.to_string(),
            "exponent": inv.a[k].to_string(),
            "class": inv.classes[k].to_string(),
            "locus": locus,
            "fiber_lines_by_multiplicity": table,
            "s_multiplicity": div.s_multiplicity.to_string(),
        }));
    }
    let mut pairs = Vec::new();
    for (i, l) in [(0, 1), (0, 2), (1, 2)] {
        let geometry = match classify_pair_geometry(&geo.data[i], &geo.data[l], &ball) {
            Ok(g) => json!(format!("{g:?}")),
            Err(Error::UnsupportedConfiguration(_)) => Value::Null,
            Err(e) => return Err(e),
        };
        pairs.push(json!({ "pair": [i.to_string(), l.to_string()], "geometry": geometry }));
    }
    let closed = closed_intersection(&inv)?;
    let (combinatorial, note) = match triple_combinatorial(&geo, inv.a) {
        Ok(v) => (Some(v), Value::Null),
        Err(e @ (Error::UnsupportedConfiguration(_) | Error::RadiusTooSmall { .. })) => (None, json!(e.to_string())),
        Err(e) => return Err(e),
    };
    if let Some(v) = &combinatorial {
        if v != &closed {
            return Err(Error::ConsistencyViolation(format!("tree value {v} vs closed {closed}")));
        }
    }
    let prov = Provenance { prime: inv.prime, precision: Some(n), radius: Some(radius), seed: Some(seed), budget: None };
    let mut row = invariant_columns(&inv);
    row.push(("closed".into(), closed.to_string()));
    row.push(("combinatorial".into(), combinatorial.as_ref().map_or(String::new(), |v| v.to_string())));
    let json = json!({
        "input": input.to_json(),
        "invariants": invariants_json(&inv),
        "ball": { "radius": radius.to_string(), "vertices": ball.len().to_string() },
        "endomorphisms": endos,
        "pairs": pairs,
        "values": { "closed": closed.to_string(), "combinatorial": opt_str(combinatorial.as_ref()) },
        "agreement": combinatorial.is_none() || combinatorial.as_ref() == Some(&closed),
        "notes": note,
        "provenance": prov.to_json(),
    });
    Ok(Report { json, rows: vec![row] })
}

/// Every admissible `(p, a, classes)` with `a_1 ≤ a_2 ≤ a_3 ≤ max_a`.
fn grid(primes: &[u64], max_a: u32) -> Result<Vec<TInvariants>> {
    let mut out = Vec::new();
    for &p in primes {
        for a1 in 0..=max_a {
            for a2 in a1..=max_a {
                for a3 in a2..=max_a {
                    for mask in 0..8u8 {
                        let c = [0, 1, 2].map(|k| if mask >> k & 1 == 1 { -1 } else { 1 });
                        let inv = TInvariants::from_exponents(p, [a1, a2, a3], c)?;
                        if inv.is_admissible() {
                            out.push(inv);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn verify(primes: &[u64], max_a: u32) -> Result<Report> {
    let tuples = grid(primes, max_a)?;
    let opts = IntersectOptions::default();
    let results: Vec<(TInvariants, Result<TripleReport>)> =
        tuples.into_par_iter().map(|inv| (inv.clone(), intersection_for_invariants(&inv, &opts))).collect();
    let mut failures = Vec::new();
    let mut rows_json = Vec::new();
    let mut rows = Vec::new();
    for (inv, res) in &results {
        match res {
            Ok(r) => {
                rows_json.push(json!({
                    "p": inv.prime.to_string(),
                    "exponents": strs(&inv.a),
                    "classes": strs(&inv.classes),
                    "values": values_json(r),
                    "agreement": r.agreement,
                }));
                let mut row = invariant_columns(inv);
                row.extend(value_columns(r));
                rows.push(row);
            }
            Err(e) => failures.push(format!("p={} a={:?} classes={:?}: {e}", inv.prime, inv.a, inv.classes)),
        }
    }
    if !failures.is_empty() {
        return Err(Error::ConsistencyViolation(failures.join("; ")));
    }
    let zero_count = results.iter().filter(|(_, r)| r.as_ref().is_ok_and(|r| r.value_closed.is_zero())).count();
    let json = json!({
        "input": { "primes": strs(primes), "max_a": max_a.to_string() },
        "summary": { "tuples": results.len().to_string(), "vanishing": zero_count.to_string(), "disagreements": "0" },
        "rows": rows_json,
        "provenance": { "primes": strs(primes), "version": env!("CARGO_PKG_VERSION") },
    });
    Ok(Report { json, rows })
}
