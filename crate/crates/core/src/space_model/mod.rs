//! Group actions on symbolic spaces and the clopen expression language.

mod action;
mod depth;
mod eval;
mod expr;
mod word;

pub use action::{
    char_symbol, symbol_char, ActionSpec, FiniteAction, LeafKind, OdometerBase, ShiftRule,
};
pub use depth::Depth;
pub use eval::{
    apply_word, canonicalize, check_expr, common_partition, disjoint, eval, is_empty,
    is_empty_auto, is_subset, minimal_form, parse_clopen_for, resolve_factor, same_set, support,
    AtomSet,
};
pub use expr::{parse_clopen, Anchor, ClopenExpr, Cylinder};
pub use word::{GroupKind, GroupSchema, GroupWord, NormalForm};

/// A bounded clopen subset of `X × ℕ`: clopens on strictly increasing copies.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TypeExpr {
    pub summands: Vec<(usize, ClopenExpr)>,
}

impl TypeExpr {
    pub fn zero() -> Self {
        TypeExpr::default()
    }

    pub fn single(e: ClopenExpr) -> Self {
        TypeExpr {
            summands: vec![(0, e)],
        }
    }

    /// `n` disjoint copies of `e`.
    pub fn multiple(n: usize, e: &ClopenExpr) -> Self {
        TypeExpr {
            summands: (0..n).map(|i| (i, e.clone())).collect(),
        }
    }

    /// Formal sum of the given clopens, placed on copies `0, 1, …`.
    pub fn sum(es: impl IntoIterator<Item = ClopenExpr>) -> Self {
        TypeExpr {
            summands: es.into_iter().enumerate().collect(),
        }
    }

    /// Parses `k*E + E' + …`; summands are separated by `+` outside brackets and parentheses.
    pub fn parse(action: &ActionSpec, text: &str) -> crate::Result<Self> {
        let text = text.trim();
        if text == "0" || text.is_empty() {
            return Ok(TypeExpr::zero());
        }
        let mut parts = Vec::new();
        let mut depth = 0i32;
        let mut start = 0;
        for (i, ch) in text.char_indices() {
            match ch {
                '(' | '[' => depth += 1,
                ')' | ']' => depth -= 1,
                '+' if depth == 0 && !text[..i].trim_end().ends_with('@') => {
                    parts.push(&text[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
        parts.push(&text[start..]);
        let mut es = Vec::new();
        for part in parts {
            let part = part.trim();
            let (n, body) = match part.split_once('*') {
                Some((k, rest))
                    if k.trim().chars().all(|c| c.is_ascii_digit()) && !k.trim().is_empty() =>
                {
                    (
                        k.trim().parse::<usize>().map_err(|_| {
                            crate::Error::Input(format!("bad multiplicity in '{part}'"))
                        })?,
                        rest,
                    )
                }
                _ => (1, part),
            };
            let e = parse_clopen_for(action, body)?;
            es.extend(std::iter::repeat_n(e, n));
        }
        Ok(TypeExpr::sum(es))
    }

    pub fn validate(&self, action: &ActionSpec) -> crate::Result<()> {
        for w in self.summands.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(crate::Error::Input(
                    "copy indices must strictly increase".into(),
                ));
            }
        }
        for (_, e) in &self.summands {
            check_expr(action, e)?;
            if is_empty_auto(action, e)? {
                return Err(crate::Error::Input(format!("summand {e} is empty")));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.summands.is_empty()
    }
}

impl std::fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.summands.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .summands
            .iter()
            .map(|(i, e)| format!("{e}⊗{i}"))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}
