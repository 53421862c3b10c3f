//! Bounded search for (sub)equidecompositions of clopen sets and of type-semigroup
//! elements, with independent witness verification.

mod csp;
mod exact;
mod matching;
mod zsubset;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::space_model::{
    apply_word, canonicalize, disjoint, is_empty_auto, is_subset, parse_clopen_for, same_set,
    ActionSpec, ClopenExpr, Depth, GroupWord, TypeExpr,
};

pub use matching::{alternating_reach, kuhn, FlowNetwork};
pub use zsubset::{
    density_bounds, zsubset_equidecompose, HallViolation, ZOutcome, ZSubsetSpec, ZWitness,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub word_len: usize,
    pub max_depth: usize,
    pub max_nodes: u64,
    pub time_cap_secs: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            word_len: 4,
            max_depth: 6,
            max_nodes: 200_000,
            time_cap_secs: 30.0,
        }
    }
}

impl SearchBudget {
    pub fn with_word_len(word_len: usize) -> Self {
        SearchBudget {
            word_len,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_nodes == 0 || self.time_cap_secs.is_nan() || self.time_cap_secs <= 0.0 {
            return Err(Error::Input("node and time caps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Images land inside the target.
    Sub,
    /// Images exactly tile the target.
    Equi,
}

/// Piece of copy `copy` of the source moved by `word` into copy `to` of the target.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub copy: usize,
    pub to: usize,
    pub clopen: ClopenExpr,
    pub word: GroupWord,
    pub image: ClopenExpr,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchingGraph {
    pub left: Vec<String>,
    pub right: Vec<String>,
    /// `(left, right, word)` for every available move.
    pub edges: Vec<(usize, usize, String)>,
    pub matched: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquidecompositionWitness {
    pub pieces: Vec<Piece>,
    pub mode: Mode,
    pub budget: SearchBudget,
    pub depth: Option<Depth>,
    pub matching: Option<MatchingGraph>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExhaustionReport {
    pub budget: SearchBudget,
    pub depths_tried: Vec<String>,
    pub nodes: u64,
    pub cap_hit: Option<String>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SearchOutcome {
    Found(EquidecompositionWitness),
    Exhausted(ExhaustionReport),
}

impl SearchOutcome {
    pub fn witness(&self) -> Option<&EquidecompositionWitness> {
        match self {
            SearchOutcome::Found(w) => Some(w),
            SearchOutcome::Exhausted(_) => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, SearchOutcome::Found(_))
    }
}

/// Search engine for one action and budget. Partitions and word permutations are
/// cached across queries.
pub struct Equidecomposer {
    action: ActionSpec,
    budget: SearchBudget,
    ball: Vec<GroupWord>,
    exact: exact::LevelCache,
}

impl Equidecomposer {
    pub fn new(action: &ActionSpec, budget: &SearchBudget) -> Result<Self> {
        action.validate()?;
        budget.validate()?;
        let ball = action.schema().ball(budget.word_len);
        Ok(Equidecomposer {
            action: action.clone(),
            budget: budget.clone(),
            ball,
            exact: exact::LevelCache::default(),
        })
    }

    pub fn action(&self) -> &ActionSpec {
        &self.action
    }

    pub fn budget(&self) -> &SearchBudget {
        &self.budget
    }

    pub fn ball(&self) -> &[GroupWord] {
        &self.ball
    }

    /// Clopen search: matching on atoms when words permute a finite partition,
    /// depth-first piece assignment otherwise.
    pub fn clopen(&self, a: &ClopenExpr, b: &ClopenExpr, mode: Mode) -> Result<SearchOutcome> {
        let ta = TypeExpr::single(a.clone());
        let tb = TypeExpr::single(b.clone());
        if let Some(out) = self.trivial(&ta, &tb, mode)? {
            return Ok(out);
        }
        let out = if self.action.is_permutation_type() {
            exact::clopen(self, a, b, mode)?
        } else {
            csp::search(self, &ta, &tb, mode)?
        };
        self.checked(&ta, &tb, out)
    }

    /// Type-semigroup search with copies: max-flow on atom multiplicities or the
    /// depth-first backend per copy.
    pub fn types(&self, a: &TypeExpr, b: &TypeExpr, mode: Mode) -> Result<SearchOutcome> {
        a.validate(&self.action)?;
        b.validate(&self.action)?;
        if let Some(out) = self.trivial(a, b, mode)? {
            return Ok(out);
        }
        let out = if self.action.is_permutation_type() {
            exact::types(self, a, b, mode)?
        } else {
            csp::search(self, a, b, mode)?
        };
        self.checked(a, b, out)
    }

    fn trivial(&self, a: &TypeExpr, b: &TypeExpr, mode: Mode) -> Result<Option<SearchOutcome>> {
        let mut a_empty = true;
        for (_, e) in &a.summands {
            a_empty &= is_empty_auto(&self.action, e)?;
        }
        if !a_empty {
            return Ok(None);
        }
        let mut b_empty = true;
        for (_, e) in &b.summands {
            b_empty &= is_empty_auto(&self.action, e)?;
        }
        Ok(Some(if mode == Mode::Sub || b_empty {
            SearchOutcome::Found(self.witness(Vec::new(), mode, None, None))
        } else {
            self.exhausted(
                Vec::new(),
                0,
                None,
                "source is empty but the target is not".into(),
            )
        }))
    }

    fn checked(&self, a: &TypeExpr, b: &TypeExpr, out: SearchOutcome) -> Result<SearchOutcome> {
        if let SearchOutcome::Found(w) = &out {
            if let Err(msg) = verify_witness(&self.action, a, b, w)? {
                return Err(Error::Invariant(format!(
                    "search produced an invalid witness: {msg}"
                )));
            }
        }
        Ok(out)
    }

    fn witness(
        &self,
        pieces: Vec<Piece>,
        mode: Mode,
        depth: Option<Depth>,
        matching: Option<MatchingGraph>,
    ) -> EquidecompositionWitness {
        EquidecompositionWitness {
            pieces,
            mode,
            budget: self.budget.clone(),
            depth,
            matching,
        }
    }

    fn exhausted(
        &self,
        depths_tried: Vec<String>,
        nodes: u64,
        cap_hit: Option<String>,
        reason: String,
    ) -> SearchOutcome {
        SearchOutcome::Exhausted(ExhaustionReport {
            budget: self.budget.clone(),
            depths_tried,
            nodes,
            cap_hit,
            reason,
        })
    }

    /// Piece from a union of atoms, in canonical form, with its image.
    fn piece(
        &self,
        copy: usize,
        to: usize,
        clopen: &ClopenExpr,
        word: &GroupWord,
    ) -> Result<Piece> {
        let clopen = canonicalize(&self.action, clopen)?;
        let image = canonicalize(&self.action, &apply_word(&self.action, word, &clopen)?)?;
        Ok(Piece {
            copy,
            to,
            clopen,
            word: word.clone(),
            image,
        })
    }

    fn out_of_time(&self, start: Instant) -> bool {
        start.elapsed().as_secs_f64() > self.budget.time_cap_secs
    }
}

/// `[A] ≤ [B]` by a witness using words of length at most `budget.word_len`.
pub fn subequidecompose(
    action: &ActionSpec,
    a: &ClopenExpr,
    b: &ClopenExpr,
    budget: &SearchBudget,
) -> Result<SearchOutcome> {
    Equidecomposer::new(action, budget)?.clopen(a, b, Mode::Sub)
}

/// `[A] = [B]` with images tiling `B`.
pub fn equidecompose(
    action: &ActionSpec,
    a: &ClopenExpr,
    b: &ClopenExpr,
    budget: &SearchBudget,
) -> Result<SearchOutcome> {
    Equidecomposer::new(action, budget)?.clopen(a, b, Mode::Equi)
}

pub fn type_leq(
    action: &ActionSpec,
    a: &TypeExpr,
    b: &TypeExpr,
    budget: &SearchBudget,
) -> Result<SearchOutcome> {
    Equidecomposer::new(action, budget)?.types(a, b, Mode::Sub)
}

/// Independent check of a witness using only word application and emptiness tests.
/// The inner error describes the first violated condition.
pub fn verify_witness(
    action: &ActionSpec,
    a: &TypeExpr,
    b: &TypeExpr,
    w: &EquidecompositionWitness,
) -> Result<std::result::Result<(), String>> {
    let schema = action.schema();
    let copy_of = |t: &TypeExpr, c: usize| {
        t.summands
            .iter()
            .find(|(i, _)| *i == c)
            .map(|(_, e)| e.clone())
    };
    let mut images = Vec::with_capacity(w.pieces.len());
    for (k, p) in w.pieces.iter().enumerate() {
        schema.check(&p.word)?;
        if schema.length(&p.word) > w.budget.word_len {
            return Ok(Err(format!("piece {k} uses a word longer than the budget")));
        }
        let Some(src) = copy_of(a, p.copy) else {
            return Ok(Err(format!(
                "piece {k} sits on copy {} which the source lacks",
                p.copy
            )));
        };
        let Some(dst) = copy_of(b, p.to) else {
            return Ok(Err(format!(
                "piece {k} targets copy {} which the target lacks",
                p.to
            )));
        };
        if is_empty_auto(action, &p.clopen)? {
            return Ok(Err(format!("piece {k} is empty")));
        }
        if !is_subset(action, &p.clopen, &src)? {
            return Ok(Err(format!(
                "piece {k} leaves copy {} of the source",
                p.copy
            )));
        }
        let img = apply_word(action, &p.word, &p.clopen)?;
        if !is_subset(action, &img, &dst)? {
            return Ok(Err(format!(
                "image of piece {k} leaves copy {} of the target",
                p.to
            )));
        }
        images.push(img);
    }
    for i in 0..w.pieces.len() {
        for j in i + 1..w.pieces.len() {
            let (p, q) = (&w.pieces[i], &w.pieces[j]);
            if p.copy == q.copy && !disjoint(action, &p.clopen, &q.clopen)? {
                return Ok(Err(format!("pieces {i} and {j} overlap")));
            }
            if p.to == q.to && !disjoint(action, &images[i], &images[j])? {
                return Ok(Err(format!("images of pieces {i} and {j} overlap")));
            }
        }
    }
    for (c, e) in &a.summands {
        let cover = ClopenExpr::union_all(
            w.pieces
                .iter()
                .filter(|p| p.copy == *c)
                .map(|p| p.clopen.clone()),
        );
        if !same_set(action, &cover, e)? {
            return Ok(Err(format!("pieces do not cover copy {c} of the source")));
        }
    }
    if w.mode == Mode::Equi {
        for (c, e) in &b.summands {
            let cover = ClopenExpr::union_all(
                w.pieces
                    .iter()
                    .zip(&images)
                    .filter(|(p, _)| p.to == *c)
                    .map(|(_, img)| img.clone()),
            );
            if !same_set(action, &cover, e)? {
                return Ok(Err(format!("images do not tile copy {c} of the target")));
            }
        }
    }
    Ok(Ok(()))
}

/// One step of the greedy absorption `A_n = (A ∖ ⋃A_i) ∩ γ_n⁻¹(B ∖ ⋃γ_i A_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExhaustionStep {
    pub word: GroupWord,
    pub piece: ClopenExpr,
    pub image: ClopenExpr,
    pub residual: ClopenExpr,
}

pub fn exhaustion_compare(
    action: &ActionSpec,
    a: &ClopenExpr,
    b: &ClopenExpr,
    words: &[GroupWord],
    depth: Option<&Depth>,
) -> Result<Vec<ExhaustionStep>> {
    let schema = action.schema();
    let at_depth = |e: &ClopenExpr| -> Result<ClopenExpr> {
        match depth {
            Some(d) => {
                let p = crate::space_model::common_partition(action, &[e], Some(d))?;
                Ok(p.set_expr(&crate::space_model::eval(&p, e)?))
            }
            None => Ok(e.clone()),
        }
    };
    let mut rem_a = canonicalize(action, a)?;
    let mut rem_b = canonicalize(action, b)?;
    let mut steps = Vec::new();
    for w in words {
        let pulled = apply_word(action, &schema.inverse(w), &rem_b)?;
        let piece = canonicalize(action, &at_depth(&rem_a.clone().and(pulled))?)?;
        let image = canonicalize(action, &apply_word(action, w, &piece)?)?;
        rem_a = canonicalize(action, &rem_a.minus(piece.clone()))?;
        rem_b = canonicalize(action, &rem_b.minus(image.clone()))?;
        steps.push(ExhaustionStep {
            word: w.clone(),
            piece,
            image,
            residual: rem_a.clone(),
        });
    }
    Ok(steps)
}

/// Composes witnesses for `[A] ≤ [B]` and `[B] ≤ [C]` into one for `[A] ≤ [C]`.
pub fn compose(
    action: &ActionSpec,
    first: &EquidecompositionWitness,
    second: &EquidecompositionWitness,
) -> Result<EquidecompositionWitness> {
    let schema = action.schema();
    let mut merged: BTreeMap<
        (usize, usize, crate::space_model::NormalForm),
        (GroupWord, Vec<ClopenExpr>),
    > = BTreeMap::new();
    for p in &first.pieces {
        for q in second.pieces.iter().filter(|q| q.copy == p.to) {
            let pulled = apply_word(action, &schema.inverse(&p.word), &q.clopen)?;
            let part = p.clopen.clone().and(pulled);
            if is_empty_auto(action, &part)? {
                continue;
            }
            let word = schema.canonical(&schema.compose(&q.word, &p.word));
            let key = (p.copy, q.to, schema.normal_form(&word));
            merged
                .entry(key)
                .or_insert_with(|| (word, Vec::new()))
                .1
                .push(part);
        }
    }
    let mut pieces = Vec::new();
    for ((copy, to, _), (word, parts)) in merged {
        let clopen = canonicalize(action, &ClopenExpr::union_all(parts))?;
        let image = canonicalize(action, &apply_word(action, &word, &clopen)?)?;
        pieces.push(Piece {
            copy,
            to,
            clopen,
            word,
            image,
        });
    }
    let mode = if first.mode == Mode::Equi && second.mode == Mode::Equi {
        Mode::Equi
    } else {
        Mode::Sub
    };
    let budget = SearchBudget {
        word_len: first.budget.word_len + second.budget.word_len,
        max_depth: first.budget.max_depth.max(second.budget.max_depth),
        max_nodes: first.budget.max_nodes.max(second.budget.max_nodes),
        time_cap_secs: first.budget.time_cap_secs.max(second.budget.time_cap_secs),
    };
    Ok(EquidecompositionWitness {
        pieces,
        mode,
        budget,
        depth: None,
        matching: None,
    })
}

impl EquidecompositionWitness {
    pub fn to_json(&self, action: &ActionSpec) -> Value {
        let schema = action.schema();
        let pieces: Vec<Value> = self
            .pieces
            .iter()
            .map(|p| {
                json!({
                    "copy": p.copy,
                    "to": p.to,
                    "clopen": p.clopen.to_string(),
                    "word": schema.format(&p.word),
                    "image": p.image.to_string(),
                })
            })
            .collect();
        let mut v = json!({
            "pieces": pieces,
            "mode": self.mode,
            "budget": self.budget,
            "depth": self.depth.as_ref().map(Depth::describe),
        });
        if let Some(m) = &self.matching {
            v["matching"] = serde_json::to_value(m).expect("matching serializes");
        }
        v
    }

    /// Reads the JSON produced by [`to_json`](Self::to_json); images are recomputed.
    pub fn from_json(action: &ActionSpec, v: &Value) -> Result<Self> {
        let schema = action.schema();
        let bad = |m: &str| Error::Input(format!("witness JSON: {m}"));
        let mode: Mode =
            serde_json::from_value(v.get("mode").cloned().ok_or_else(|| bad("missing mode"))?)
                .map_err(|e| bad(&e.to_string()))?;
        let budget: SearchBudget = match v.get("budget") {
            Some(b) => serde_json::from_value(b.clone()).map_err(|e| bad(&e.to_string()))?,
            None => SearchBudget::default(),
        };
        let mut pieces = Vec::new();
        for p in v
            .get("pieces")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing pieces"))?
        {
            let copy = p.get("copy").and_then(Value::as_u64).unwrap_or(0) as usize;
            let to = p.get("to").and_then(Value::as_u64).unwrap_or(0) as usize;
            let clopen = parse_clopen_for(
                action,
                p.get("clopen")
                    .and_then(Value::as_str)
                    .ok_or_else(|| bad("piece without clopen"))?,
            )?;
            let word = schema.parse(
                p.get("word")
                    .and_then(Value::as_str)
                    .ok_or_else(|| bad("piece without word"))?,
            )?;
            let image = apply_word(action, &word, &clopen)?;
            pieces.push(Piece {
                copy,
                to,
                clopen,
                word,
                image,
            });
        }
        Ok(EquidecompositionWitness {
            pieces,
            mode,
            budget,
            depth: None,
            matching: None,
        })
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Bipartite DOT graph: the atom matching when one was recorded, piece → image otherwise.
pub fn emit_dot(action: &ActionSpec, w: &EquidecompositionWitness) -> String {
    let schema = action.schema();
    let mut out = String::from("graph witness {\n");
    if let Some(m) = &w.matching {
        out.push_str("  rankdir=LR;\n");
        for (i, l) in m.left.iter().enumerate() {
            out.push_str(&format!("  L{i} [label=\"{}\"];\n", dot_escape(l)));
        }
        for (j, r) in m.right.iter().enumerate() {
            out.push_str(&format!("  R{j} [label=\"{}\"];\n", dot_escape(r)));
        }
        for (i, j, word) in &m.edges {
            let style = if m.matched.contains(&(*i, *j)) {
                ", color=red, penwidth=2"
            } else {
                ", color=gray"
            };
            out.push_str(&format!(
                "  L{i} -- R{j} [label=\"{}\"{style}];\n",
                dot_escape(word)
            ));
        }
    } else if !w.pieces.is_empty() {
        out.push_str("  rankdir=LR;\n");
        for (k, p) in w.pieces.iter().enumerate() {
            out.push_str(&format!(
                "  P{k} [label=\"{}: {}\"];\n",
                p.copy,
                dot_escape(&p.clopen.to_string())
            ));
            out.push_str(&format!(
                "  Q{k} [label=\"{}: {}\"];\n",
                p.to,
                dot_escape(&p.image.to_string())
            ));
        }
        for (k, p) in w.pieces.iter().enumerate() {
            out.push_str(&format!(
                "  P{k} -- Q{k} [label=\"{}\"];\n",
                dot_escape(&schema.format(&p.word))
            ));
        }
    }
    out.push_str("}\n");
    out
}

/// Depth sequence `d`, `d` grown by 1, …, `d` grown by `max`, without repeats.
fn depth_sequence(base: &Depth, max: usize) -> Vec<Depth> {
    let mut out: Vec<Depth> = Vec::new();
    for n in 0..=max {
        let d = grow(base, n);
        if !out.contains(&d) {
            out.push(d);
        }
    }
    out
}

fn grow(d: &Depth, n: usize) -> Depth {
    match d {
        Depth::Window1 { lo, len } => Depth::Window1 {
            lo: *lo,
            len: len + n,
        },
        Depth::Window2 { w: 0, .. } | Depth::Window2 { h: 0, .. } => Depth::Window2 {
            x0: 0,
            y0: 0,
            w: n,
            h: n,
        },
        Depth::Window2 { x0, y0, w, h } => Depth::Window2 {
            x0: *x0,
            y0: *y0,
            w: w + n,
            h: h + n,
        },
        Depth::Level(k) => Depth::Level(k + n as u32),
        Depth::Points => Depth::Points,
        Depth::Product(ds) => Depth::Product(ds.iter().map(|x| grow(x, n)).collect()),
    }
}

#[cfg(test)]
mod tests;
