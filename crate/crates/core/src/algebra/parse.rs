//! Recursive-descent parser for the canonical polynomial rendering.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := power ('*' power)*
//! power  := atom ['^' uint]
//! atom   := uint ['/' uint] | 'beta' | 'n' | 'Y(' uint ',' uint ')'
//!         | 'Yc(' uint ',' uint ')' | '(' expr ')' | '-' power
//! ```

use super::{AlgebraError, CoefPoly, FormalPoly, Rational, Var};
use num_bigint::BigInt;
use num_traits::Zero;

const MAX_INPUT: usize = 1 << 16;
const MAX_DEPTH: usize = 64;
const MAX_EXPONENT: u32 = 64;
const MAX_INDEX: u32 = 4096;
const MAX_TERMS: usize = 1 << 16;
const MAX_DIGITS: usize = 1024;

pub(crate) fn parse_formal(s: &str) -> Result<FormalPoly, AlgebraError> {
    if s.len() > MAX_INPUT {
        return Err(AlgebraError::TooLarge(format!("{} bytes of input", s.len())));
    }
    let mut p = Parser { src: s.as_bytes(), pos: 0, depth: 0 };
    let out = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> AlgebraError {
        AlgebraError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), AlgebraError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let end = self.pos + kw.len();
        if self.src.get(self.pos..end) == Some(kw.as_bytes()) {
            let next = self.src.get(end).copied();
            if next.is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_') {
                return false;
            }
            self.pos = end;
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> Result<(), AlgebraError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.err("nesting too deep"));
        }
        Ok(())
    }

    fn check_size(&self, p: &FormalPoly) -> Result<(), AlgebraError> {
        if p.len() > MAX_TERMS {
            return Err(AlgebraError::TooLarge(format!("{} terms", p.len())));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<FormalPoly, AlgebraError> {
        self.enter()?;
        let mut acc = if self.eat(b'-') { -&self.term()? } else { self.term()? };
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                break;
            }
            self.check_size(&acc)?;
        }
        self.depth -= 1;
        Ok(acc)
    }

    fn term(&mut self) -> Result<FormalPoly, AlgebraError> {
        let mut acc = self.power()?;
        while self.eat(b'*') {
            let rhs = self.power()?;
            if acc.len().saturating_mul(rhs.len()) > MAX_TERMS {
                return Err(AlgebraError::TooLarge("product".into()));
            }
            acc = &acc * &rhs;
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<FormalPoly, AlgebraError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let e = self.uint()?;
            if e > u64::from(MAX_EXPONENT) {
                return Err(self.err("exponent too large"));
            }
            let e = e as u32;
            if base.len() > 1 && (base.len() as f64).powi(e as i32) > MAX_TERMS as f64 {
                return Err(AlgebraError::TooLarge("power".into()));
            }
            let out = base.pow(e);
            self.check_size(&out)?;
            return Ok(out);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<FormalPoly, AlgebraError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'-') => {
                self.pos += 1;
                self.enter()?;
                let p = self.power()?;
                self.depth -= 1;
                Ok(-&p)
            }
            Some(c) if c.is_ascii_digit() => {
                let num = self.bigint()?;
                let value = if self.eat(b'/') {
                    let den = self.bigint()?;
                    if den.is_zero() {
                        return Err(self.err("zero denominator"));
                    }
                    Rational::new(num, den)
                } else {
                    Rational::from_integer(num)
                };
                Ok(FormalPoly::rational(value))
            }
            _ => {
                if self.eat_keyword("beta") {
                    Ok(FormalPoly::constant(CoefPoly::beta()))
                } else if self.eat_keyword("n") {
                    Ok(FormalPoly::constant(CoefPoly::n()))
                } else if self.eat_keyword("Yc") {
                    let (a, b) = self.index_pair()?;
                    if b < 2 || a + 1 != b {
                        return Err(self.err("Yc indices must be consecutive, starting at 1"));
                    }
                    Ok(FormalPoly::var(Var::Check(b)))
                } else if self.eat_keyword("Y") {
                    let (a, b) = self.index_pair()?;
                    if a == 0 || b == 0 {
                        return Err(self.err("indices start at 1"));
                    }
                    if a > b {
                        return Err(self.err("Y(k,l) requires k <= l"));
                    }
                    Ok(FormalPoly::var(Var::y(a, b)))
                } else {
                    Err(self.err("expected a number, beta, n, Y, Yc or '('"))
                }
            }
        }
    }

    fn index_pair(&mut self) -> Result<(u32, u32), AlgebraError> {
        self.expect(b'(')?;
        let a = self.index()?;
        self.expect(b',')?;
        let b = self.index()?;
        self.expect(b')')?;
        Ok((a, b))
    }

    fn index(&mut self) -> Result<u32, AlgebraError> {
        let v = self.uint()?;
        if v > u64::from(MAX_INDEX) {
            return Err(self.err("index too large"));
        }
        Ok(v as u32)
    }

    fn digits(&mut self) -> Result<&[u8], AlgebraError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected digits"));
        }
        Ok(&self.src[start..self.pos])
    }

    fn uint(&mut self) -> Result<u64, AlgebraError> {
        let d = self.digits()?;
        std::str::from_utf8(d)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.err("integer out of range"))
    }

    fn bigint(&mut self) -> Result<BigInt, AlgebraError> {
        let d = self.digits()?;
        if d.len() > MAX_DIGITS {
            return Err(self.err("integer literal too long"));
        }
        BigInt::parse_bytes(d, 10).ok_or_else(|| self.err("bad integer"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_canonical_forms() {
        let p = parse_formal("(1/2*beta*n^2 - 1/2*beta*n + n)*Y(1,1)").unwrap();
        assert_eq!(p, FormalPoly::constant(CoefPoly::dimension()) * FormalPoly::var(Var::Diag(1)));
        assert!(parse_formal("0").unwrap().is_zero());
        assert_eq!(parse_formal("-Y(1,2)^2").unwrap().to_string(), "-Y(1,2)^2");
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in ["", "Y(1,1", "Yc(2,3)*", "1/0", "Y(2,1)", "Yc(1,3)", "beta^99", "x", "Y(0,0)", "((((" ] {
            assert!(parse_formal(bad).is_err(), "{bad:?} should fail");
        }
        let deep = "(".repeat(200) + "1" + &")".repeat(200);
        assert!(parse_formal(&deep).is_err());
    }

    #[test]
    fn huge_powers_are_refused() {
        assert!(matches!(
            parse_formal("(Y(1,1) + Y(2,2) + Y(3,3) + beta + n)^60"),
            Err(AlgebraError::TooLarge(_))
        ));
    }
}
