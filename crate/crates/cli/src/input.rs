//! Reading JSON inputs given inline, as a file path, or on stdin (`-`).

use std::io::Read;
use std::path::Path;

use serde_json::Value;

use crate::Failure;

/// Resolves `--input`: `-` reads stdin, text starting with `[` or `{` is
/// inline JSON, anything else is a file path.
pub fn read_source(arg: &str) -> Result<String, Failure> {
    let trimmed = arg.trim_start();
    if arg == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::unreadable(format!("cannot read stdin: {e}")))?;
        Ok(s)
    } else if trimmed.starts_with('[') || trimmed.starts_with('{') {
        Ok(arg.to_string())
    } else {
        let p = Path::new(arg);
        std::fs::read_to_string(p).map_err(|e| Failure::unreadable(format!("cannot read {}: {e}", p.display())))
    }
}

pub fn parse_json(text: &str) -> Result<Value, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::malformed(format!("malformed JSON: {e}")))
}

/// One operand of `verify`: a tuple or a square matrix.
#[derive(Debug, Clone)]
pub enum Operand {
    Tuple(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

fn number(v: &Value, what: &str) -> Result<f64, Failure> {
    v.as_f64().ok_or_else(|| Failure::malformed(format!("{what}: expected a number, got {v}")))
}

fn operand(v: &Value, what: &str) -> Result<Operand, Failure> {
    let items = v
        .as_array()
        .ok_or_else(|| Failure::malformed(format!("{what}: expected an array of numbers or of rows, got {v}")))?;
    if items.first().is_some_and(Value::is_array) {
        let rows = items
            .iter()
            .enumerate()
            .map(|(i, row)| matrix_row(row, &format!("{what} row {i}")))
            .collect::<Result<_, _>>()?;
        Ok(Operand::Matrix(rows))
    } else {
        Ok(Operand::Tuple(items.iter().map(|x| number(x, what)).collect::<Result<_, _>>()?))
    }
}

fn matrix_row(v: &Value, what: &str) -> Result<Vec<f64>, Failure> {
    v.as_array()
        .ok_or_else(|| Failure::malformed(format!("{what}: expected an array of numbers")))?
        .iter()
        .map(|x| number(x, what))
        .collect()
}

/// Parses a matrix given as an array of row arrays.
pub fn matrix(v: &Value) -> Result<Vec<Vec<f64>>, Failure> {
    let rows = v.as_array().ok_or_else(|| Failure::malformed("matrix: expected an array of row arrays"))?;
    rows.iter().enumerate().map(|(i, r)| matrix_row(r, &format!("matrix row {i}"))).collect()
}

/// Key pairs accepted for the two operands of `verify`.
const PAIR_KEYS: [(&str, &str); 4] = [("y", "a"), ("x", "d"), ("z", "c"), ("p1", "p2")];

/// The two operands of `verify` and, when the input is a saved report, the
/// formulation it was produced with.
#[derive(Debug, Clone)]
pub struct VerifyInput {
    pub first: Operand,
    pub second: Operand,
    pub formulation: Option<String>,
}

/// Accepts `[first, second]` or an object holding one of the key pairs
/// `y/a`, `x/d`, `z/c`, `p1/p2`. Other keys are ignored, so a saved
/// counterexample or verify report can be fed back in; its
/// `report.formulation` is picked up when present.
pub fn verify_input(v: &Value) -> Result<VerifyInput, Failure> {
    if let Some(items) = v.as_array() {
        if items.len() != 2 {
            return Err(Failure::malformed(format!("expected two operands, got {}", items.len())));
        }
        return Ok(VerifyInput {
            first: operand(&items[0], "first operand")?,
            second: operand(&items[1], "second operand")?,
            formulation: None,
        });
    }
    let obj = v
        .as_object()
        .ok_or_else(|| Failure::malformed("expected [first, second] or an object with operand keys"))?;
    let (k1, k2) = PAIR_KEYS
        .iter()
        .find(|(a, b)| obj.contains_key(*a) && obj.contains_key(*b))
        .ok_or_else(|| Failure::malformed("object needs one of the key pairs y/a, x/d, z/c, p1/p2"))?;
    let formulation = obj
        .get("report")
        .and_then(|r| r.get("formulation"))
        .or_else(|| obj.get("formulation"))
        .and_then(Value::as_str)
        .map(str::to_string);
    Ok(VerifyInput { first: operand(&obj[*k1], k1)?, second: operand(&obj[*k2], k2)?, formulation })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operand_shapes() {
        let v = parse_json(r#"{"y": [1, 2, 3], "a": [[1, 0], [0, 1]], "note": "x"}"#).unwrap();
        let i = verify_input(&v).unwrap();
        assert!(matches!(i.first, Operand::Tuple(ref t) if t == &[1.0, 2.0, 3.0]));
        assert!(matches!(i.second, Operand::Matrix(ref m) if m.len() == 2));
        assert!(i.formulation.is_none());
    }

    #[test]
    fn saved_report_formulation() {
        let v = parse_json(r#"{"y": [1, 2], "a": [2, 1], "report": {"formulation": "exp"}}"#).unwrap();
        assert_eq!(verify_input(&v).unwrap().formulation.as_deref(), Some("exp"));
    }

    #[test]
    fn bad_shapes_are_malformed() {
        for text in [r#"[1, 2, 3]"#, r#"{"y": [1]}"#, r#"[[1, "x"], [1, 2]]"#, r#""str""#] {
            let v = parse_json(text).unwrap();
            assert_eq!(verify_input(&v).unwrap_err().code, crate::EXIT_MALFORMED, "{text}");
        }
        assert_eq!(parse_json("{").unwrap_err().code, crate::EXIT_MALFORMED);
    }

    #[test]
    fn inline_detection() {
        assert_eq!(read_source(" [1]").unwrap(), " [1]");
        assert_eq!(read_source("/no/such/file").unwrap_err().code, crate::EXIT_UNREADABLE);
    }
}
