//! Golden file of exact moments and polynomials.
//!
//! Each non-comment line is `moment <nu> = <expr>` or `poly <nu> = <expr>`,
//! where `<nu>` is a comma-separated family and `<expr>` uses the formal
//! polynomial grammar.

use super::HarnessError;
use crate::algebra::{CoefPoly, FormalPoly};
use crate::gbe::IndexFamily;

/// The appendix table shipped with the crate.
pub const APPENDIX: &str = include_str!("../../golden/appendix.txt");

#[derive(Debug, Clone, PartialEq)]
pub enum GoldenEntry {
    Moment { nu: IndexFamily, value: CoefPoly },
    Poly { nu: IndexFamily, value: FormalPoly },
}

impl GoldenEntry {
    pub fn nu(&self) -> &IndexFamily {
        match self {
            GoldenEntry::Moment { nu, .. } | GoldenEntry::Poly { nu, .. } => nu,
        }
    }
}

pub fn parse_golden(text: &str) -> Result<Vec<GoldenEntry>, HarnessError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| HarnessError::Golden { line: i + 1, msg };
        let (head, expr) = line.split_once('=').ok_or_else(|| err("missing '='".into()))?;
        let mut words = head.split_whitespace();
        let kind = words.next().ok_or_else(|| err("missing kind".into()))?;
        let nu: IndexFamily = words
            .next()
            .ok_or_else(|| err("missing family".into()))?
            .parse()
            .map_err(|e| err(format!("{e}")))?;
        if words.next().is_some() {
            return Err(err("trailing tokens before '='".into()));
        }
        let entry = match kind {
            "moment" => GoldenEntry::Moment { nu, value: expr.parse().map_err(|e| err(format!("{e}")))? },
            "poly" => GoldenEntry::Poly { nu, value: expr.parse().map_err(|e| err(format!("{e}")))? },
            other => return Err(err(format!("unknown kind {other:?}"))),
        };
        out.push(entry);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn appendix_parses() {
        let entries = parse_golden(APPENDIX).unwrap();
        let moments = entries.iter().filter(|e| matches!(e, GoldenEntry::Moment { .. })).count();
        assert_eq!(moments, 8);
        assert_eq!(entries.len() - moments, 11);
    }

    #[test]
    fn malformed_lines() {
        assert!(parse_golden("moment 2 n").is_err());
        assert!(parse_golden("mode 2 = n").is_err());
        assert!(parse_golden("poly 2 x = n").is_err());
        assert!(parse_golden("poly 2 = Y(").is_err());
        assert!(parse_golden("# only a comment\n\n").unwrap().is_empty());
    }
}
