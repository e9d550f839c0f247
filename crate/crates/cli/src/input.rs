//! Parsing of matrix and tuple arguments into a symmetric matrix over `Z_p`.

use std::str::FromStr;

use locint::padic::{nonsquare_unit, pow_big};
use locint::{Error, Result, SymMatrix3};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde_json::{json, Value};

/// Where the matrix came from, kept for the report's `input` block.
#[derive(Clone, Debug)]
pub enum Source {
    Diag,
    Matrix,
    Tuple { exponents: [u32; 3], classes: [i8; 3] },
}

#[derive(Clone, Debug)]
pub struct ParsedInput {
    pub prime: u64,
    pub source: Source,
    /// Entries as given (rationals allowed), row-major.
    pub given: [[BigRational; 3]; 3],
    pub matrix: SymMatrix3,
}

impl ParsedInput {
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self.given.iter().map(|r| r.iter().map(|x| json!(x.to_string())).collect()).collect();
        let mut v = json!({ "p": self.prime.to_string(), "source": "", "matrix": rows });
        match &self.source {
            Source::Diag => v["source"] = json!("diag"),
            Source::Matrix => v["source"] = json!("matrix"),
            Source::Tuple { exponents, classes } => {
                v["source"] = json!("tuple");
                v["exponents"] = json!(exponents.map(|a| a.to_string()));
                v["classes"] = json!(classes.map(|c| c.to_string()));
            }
        }
        v
    }
}

/// Splits a comma-separated list, reporting the 1-based column of a bad
/// entry.
fn parse_list<T: FromStr>(flag: &str, text: &str, what: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    let mut column = 1;
    for (k, piece) in text.split(',').enumerate() {
        let trimmed = piece.trim();
        let value = trimmed.parse::<T>().map_err(|_| {
            Error::InvalidInput(format!("{flag}: entry {} at column {column}: '{trimmed}' is not {what}", k + 1))
        })?;
        out.push(value);
        column += piece.chars().count() + 1;
    }
    Ok(out)
}

fn rational_list(flag: &str, text: &str, len: usize) -> Result<Vec<BigRational>> {
    let xs = parse_list::<BigRational>(flag, text, "an integer or rational")?;
    if xs.len() != len {
        return Err(Error::InvalidInput(format!("{flag}: expected {len} entries, got {}", xs.len())));
    }
    Ok(xs)
}

/// Builds the input from exactly one of `--diag`, `--matrix` or
/// `--exponents` (with optional `--classes`).
pub fn parse_input(
    prime: u64,
    diag: Option<&str>,
    matrix: Option<&str>,
    exponents: Option<&str>,
    classes: Option<&str>,
) -> Result<ParsedInput> {
    let given = [diag.is_some(), matrix.is_some(), exponents.is_some()].iter().filter(|&&b| b).count();
    if given != 1 {
        return Err(Error::InvalidInput("give exactly one of --diag, --matrix, --exponents".into()));
    }
    let zero = || BigRational::zero();
    let (source, rows): (Source, [[BigRational; 3]; 3]) = if let Some(d) = diag {
        let xs = rational_list("--diag", d, 3)?;
        let rows = std::array::from_fn(|i| std::array::from_fn(|j| if i == j { xs[i].clone() } else { zero() }));
        (Source::Diag, rows)
    } else if let Some(m) = matrix {
        let xs = rational_list("--matrix", m, 9)?;
        (Source::Matrix, std::array::from_fn(|i| std::array::from_fn(|j| xs[3 * i + j].clone())))
    } else {
        let a = parse_list::<u32>("--exponents", exponents.unwrap_or_default(), "a non-negative integer")?;
        let c = match classes {
            Some(c) => parse_list::<i8>("--classes", c, "1 or -1")?,
            None => vec![1, 1, 1],
        };
        if a.len() != 3 || c.len() != 3 || c.iter().any(|&x| x != 1 && x != -1) {
            return Err(Error::InvalidInput("--exponents needs 3 entries and --classes 3 entries in {1,-1}".into()));
        }
        let delta = BigInt::from(nonsquare_unit(prime));
        let rows = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                if i != j {
                    return zero();
                }
                let unit = if c[i] == 1 { BigInt::from(1) } else { delta.clone() };
                BigRational::from_integer(pow_big(prime, a[i]) * unit)
            })
        });
        let tuple = Source::Tuple { exponents: [a[0], a[1], a[2]], classes: [c[0], c[1], c[2]] };
        (tuple, rows)
    };
    let matrix = SymMatrix3::from_rationals(prime, rows.clone())?;
    Ok(ParsedInput { prime, source, given: rows, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_column_of_bad_entry() {
        let err = parse_input(3, Some("1, 2,x"), None, None, None).unwrap_err();
        assert!(err.to_string().contains("entry 3 at column 6"), "{err}");
    }

    #[test]
    fn rational_entries_are_cleared() {
        let input = parse_input(3, Some("1/2,1,3"), None, None, None).unwrap();
        assert_eq!(input.matrix.entries()[0][0], BigInt::from(2));
        assert_eq!(input.matrix.entries()[1][1], BigInt::from(4));
    }

    #[test]
    fn tuple_input_uses_nonsquare_for_minus_one() {
        let input = parse_input(3, None, None, Some("0,1,1"), Some("1,-1,1")).unwrap();
        assert_eq!(input.matrix.entries()[1][1], BigInt::from(6));
    }
}
