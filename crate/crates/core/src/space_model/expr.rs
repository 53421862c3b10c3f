use std::fmt;

use super::action::{char_symbol, symbol_char};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Anchor {
    /// No `@`: position 0, level 1, or a point.
    Origin,
    Pos(i64),
    Pos2(i64, i64),
    /// Odometer level, counted from 1.
    Level(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cylinder {
    pub symbols: Vec<u32>,
    pub anchor: Anchor,
    /// Product factor selector (`#f`).
    pub factor: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ClopenExpr {
    Empty,
    Full,
    Cyl(Cylinder),
    Not(Box<ClopenExpr>),
    Union(Box<ClopenExpr>, Box<ClopenExpr>),
    Inter(Box<ClopenExpr>, Box<ClopenExpr>),
}

impl ClopenExpr {
    pub fn cyl(symbols: Vec<u32>, anchor: Anchor) -> Self {
        ClopenExpr::Cyl(Cylinder {
            symbols,
            anchor,
            factor: None,
        })
    }

    pub fn not(self) -> Self {
        ClopenExpr::Not(Box::new(self))
    }

    pub fn or(self, other: ClopenExpr) -> Self {
        ClopenExpr::Union(Box::new(self), Box::new(other))
    }

    pub fn and(self, other: ClopenExpr) -> Self {
        ClopenExpr::Inter(Box::new(self), Box::new(other))
    }

    pub fn minus(self, other: ClopenExpr) -> Self {
        self.and(other.not())
    }

    /// Left-folded union; `Empty` for no terms.
    pub fn union_all(terms: impl IntoIterator<Item = ClopenExpr>) -> Self {
        terms
            .into_iter()
            .reduce(ClopenExpr::or)
            .unwrap_or(ClopenExpr::Empty)
    }

    /// Left-folded intersection; `Full` for no terms.
    pub fn inter_all(terms: impl IntoIterator<Item = ClopenExpr>) -> Self {
        terms
            .into_iter()
            .reduce(ClopenExpr::and)
            .unwrap_or(ClopenExpr::Full)
    }

    pub fn cylinders(&self) -> Vec<&Cylinder> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a Cylinder>) {
        match self {
            ClopenExpr::Empty | ClopenExpr::Full => {}
            ClopenExpr::Cyl(c) => out.push(c),
            ClopenExpr::Not(e) => e.collect(out),
            ClopenExpr::Union(a, b) | ClopenExpr::Inter(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    pub fn map_cylinders<F>(&self, f: &mut F) -> Result<ClopenExpr>
    where
        F: FnMut(&Cylinder) -> Result<ClopenExpr>,
    {
        Ok(match self {
            ClopenExpr::Empty => ClopenExpr::Empty,
            ClopenExpr::Full => ClopenExpr::Full,
            ClopenExpr::Cyl(c) => f(c)?,
            ClopenExpr::Not(e) => ClopenExpr::Not(Box::new(e.map_cylinders(f)?)),
            ClopenExpr::Union(a, b) => {
                ClopenExpr::Union(Box::new(a.map_cylinders(f)?), Box::new(b.map_cylinders(f)?))
            }
            ClopenExpr::Inter(a, b) => {
                ClopenExpr::Inter(Box::new(a.map_cylinders(f)?), Box::new(b.map_cylinders(f)?))
            }
        })
    }
}

impl fmt::Display for Cylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for &s in &self.symbols {
            write!(f, "{}", symbol_char(s))?;
        }
        write!(f, "]")?;
        match self.anchor {
            Anchor::Origin => {}
            Anchor::Pos(i) => write!(f, "@{i}")?,
            Anchor::Pos2(x, y) => write!(f, "@({x},{y})")?,
            Anchor::Level(k) => write!(f, "@L{k}")?,
        }
        if let Some(i) = self.factor {
            write!(f, "#{i}")?;
        }
        Ok(())
    }
}

fn is_binary(e: &ClopenExpr) -> bool {
    matches!(e, ClopenExpr::Union(..) | ClopenExpr::Inter(..))
}

impl fmt::Display for ClopenExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClopenExpr::Empty => write!(f, "empty"),
            ClopenExpr::Full => write!(f, "full"),
            ClopenExpr::Cyl(c) => write!(f, "{c}"),
            ClopenExpr::Not(e) => match **e {
                ClopenExpr::Cyl(_) | ClopenExpr::Empty | ClopenExpr::Full => write!(f, "~{e}"),
                _ => write!(f, "~({e})"),
            },
            ClopenExpr::Union(a, b) | ClopenExpr::Inter(a, b) => {
                let op = if matches!(self, ClopenExpr::Union(..)) {
                    '|'
                } else {
                    '&'
                };
                if is_binary(b) {
                    write!(f, "{a} {op} ({b})")
                } else {
                    write!(f, "{a} {op} {b}")
                }
            }
        }
    }
}

/// Parses the clopen expression language. Binary operators share one precedence level
/// and associate to the left.
pub fn parse_clopen(text: &str) -> Result<ClopenExpr> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, msg: &str) -> Error {
        let mut line = 1;
        let mut col = 1;
        for &c in &self.chars[..self.pos.min(self.chars.len())] {
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        Error::Parse {
            line,
            col,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<ClopenExpr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some('|') => {
                    self.pos += 1;
                    acc = acc.or(self.term()?);
                }
                Some('&') => {
                    self.pos += 1;
                    acc = acc.and(self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<ClopenExpr> {
        if self.peek() == Some('~') {
            self.pos += 1;
            Ok(self.atom()?.not())
        } else {
            self.atom()
        }
    }

    fn atom(&mut self) -> Result<ClopenExpr> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some('[') => self.cylinder(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphabetic() {
                    self.pos += 1;
                }
                let word: String = self.chars[start..self.pos].iter().collect();
                match word.as_str() {
                    "empty" => Ok(ClopenExpr::Empty),
                    "full" => Ok(ClopenExpr::Full),
                    _ => {
                        self.pos = start;
                        Err(self.error(&format!("unknown keyword '{word}'")))
                    }
                }
            }
            Some(_) => Err(self.error("expected '(', '[' or a keyword")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn cylinder(&mut self) -> Result<ClopenExpr> {
        self.expect('[')?;
        let mut symbols = Vec::new();
        while let Some(&c) = self.chars.get(self.pos) {
            if c == ']' {
                break;
            }
            let s = char_symbol(c).ok_or_else(|| self.error(&format!("'{c}' is not a symbol")))?;
            symbols.push(s);
            self.pos += 1;
        }
        if symbols.is_empty() {
            return Err(self.error("a cylinder needs at least one symbol"));
        }
        self.expect(']')?;
        let mut anchor = Anchor::Origin;
        if self.chars.get(self.pos) == Some(&'@') {
            self.pos += 1;
            anchor = match self.chars.get(self.pos) {
                Some('L') => {
                    self.pos += 1;
                    let k = self.int()?;
                    if k < 1 || k > u32::MAX as i64 {
                        return Err(self.error("levels start at 1"));
                    }
                    Anchor::Level(k as u32)
                }
                Some('(') => {
                    self.pos += 1;
                    let x = self.int()?;
                    self.expect(',')?;
                    let y = self.int()?;
                    self.expect(')')?;
                    Anchor::Pos2(x, y)
                }
                _ => Anchor::Pos(self.int()?),
            };
        }
        let mut factor = None;
        if self.chars.get(self.pos) == Some(&'#') {
            self.pos += 1;
            let f = self.int()?;
            if f < 0 {
                return Err(self.error("factor index must be nonnegative"));
            }
            factor = Some(f as usize);
        }
        Ok(ClopenExpr::Cyl(Cylinder {
            symbols,
            anchor,
            factor,
        }))
    }

    fn int(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.chars.get(self.pos), Some('-') | Some('+')) {
            self.pos += 1;
        }
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse::<i64>().map_err(|_| {
            self.pos = start;
            self.error("expected an integer")
        })
    }
}
