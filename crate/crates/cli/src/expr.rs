//! Payoff expressions over scenario prices.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := '-' unary | atom
//! atom   := number | 'max' '(' expr ',' expr ')' | 'S' '[' t ']' '[' j ']' | '(' expr ')'
//! ```
//!
//! Numbers are integers or decimals. `S[t][j]` is the price of asset `j`
//! (counted from 1) at time `t`.

use scenario_arb::{MarketModel, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(Rational),
    Price { t: usize, j: usize },
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("payoff expression, column {column}: {message}")]
pub struct ExprError {
    pub column: usize,
    pub message: String,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError {
            column: self.pos + 1,
            message: message.into(),
        })
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

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.error(format!("expected '{}'", c as char))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while self.eat(b'*') {
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.atom()
        }
    }

    fn digits(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits")
    }

    fn index(&mut self) -> Result<usize, ExprError> {
        self.expect(b'[')?;
        self.skip_ws();
        let digits = self.digits().to_string();
        let Ok(value) = digits.parse() else {
            return self.error("expected an index");
        };
        self.expect(b']')?;
        Ok(value)
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let whole = self.digits().to_string();
        let mut frac = String::new();
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac = self.digits().to_string();
            if frac.is_empty() {
                return self.error("expected digits after '.'");
            }
        }
        let text = if frac.is_empty() {
            whole
        } else {
            format!("{whole}{frac}/1{}", "0".repeat(frac.len()))
        };
        match text.parse::<Rational>() {
            Ok(v) => Ok(Expr::Const(v)),
            Err(_) => self.error("number out of range"),
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(b'S') => {
                self.pos += 1;
                let t = self.index()?;
                let j = self.index()?;
                if j == 0 {
                    return self.error("asset indices start at 1");
                }
                Ok(Expr::Price { t, j })
            }
            Some(b'm') if self.src[self.pos..].starts_with(b"max") => {
                self.pos += 3;
                self.expect(b'(')?;
                let a = self.expr()?;
                self.expect(b',')?;
                let b = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::Max(Box::new(a), Box::new(b)))
            }
            Some(c) => self.error(format!("unexpected '{}'", c as char)),
            None => self.error("unexpected end of expression"),
        }
    }
}

pub fn parse(text: &str) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.error("trailing input");
    }
    Ok(e)
}

impl Expr {
    /// Checks every price reference against the market's horizon and assets.
    pub fn check(&self, market: &MarketModel) -> Result<(), String> {
        match self {
            Expr::Const(_) => Ok(()),
            Expr::Price { t, j } => {
                if *t > market.horizon() {
                    Err(format!("S[{t}][{j}]: time beyond horizon {}", market.horizon()))
                } else if *j > market.num_assets() {
                    Err(format!("S[{t}][{j}]: the market has {} assets", market.num_assets()))
                } else {
                    Ok(())
                }
            }
            Expr::Neg(a) => a.check(market),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Max(a, b) => {
                a.check(market)?;
                b.check(market)
            }
        }
    }

    pub fn eval(&self, market: &MarketModel, w: usize) -> Rational {
        match self {
            Expr::Const(v) => v.clone(),
            Expr::Price { t, j } => market.price(w, *t)[j - 1].clone(),
            Expr::Neg(a) => -a.eval(market, w),
            Expr::Add(a, b) => a.eval(market, w) + b.eval(market, w),
            Expr::Sub(a, b) => a.eval(market, w) - b.eval(market, w),
            Expr::Mul(a, b) => a.eval(market, w) * b.eval(market, w),
            Expr::Max(a, b) => a.eval(market, w).max(b.eval(market, w)),
        }
    }
}
