//! The URL-generation language: string atoms concatenated into a pattern
//! that is matched against a ranked list of candidate URLs.
//!
//! Strings are handled as `char` sequences; all indices are char offsets,
//! end-exclusive.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Default delimiter vocabulary for `Replace` and literal tokens.
pub const DEFAULT_DELIMITERS: &[&str] = &[" ", ",", "-", "_", "/", ".", ":", "#", "+", "&", "="];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseMode {
    Lower,
    Upper,
    Prop,
    Iden,
}

impl CaseMode {
    pub const ALL: [CaseMode; 4] = [CaseMode::Iden, CaseMode::Lower, CaseMode::Upper, CaseMode::Prop];

    fn name(self) -> &'static str {
        match self {
            CaseMode::Lower => "lower",
            CaseMode::Upper => "upper",
            CaseMode::Prop => "prop",
            CaseMode::Iden => "iden",
        }
    }
}

/// Applies a case transform. `Prop` upper-cases the first letter of each
/// maximal alphabetic run and lower-cases the rest.
pub fn to_case(s: &[char], case: CaseMode) -> Vec<char> {
    match case {
        CaseMode::Iden => s.to_vec(),
        CaseMode::Lower => s.iter().map(|c| c.to_ascii_lowercase()).collect(),
        CaseMode::Upper => s.iter().map(|c| c.to_ascii_uppercase()).collect(),
        CaseMode::Prop => {
            let mut prev_alpha = false;
            s.iter()
                .map(|&c| {
                    let a = c.is_ascii_alphabetic();
                    let out = if a && !prev_alpha { c.to_ascii_uppercase() } else { c.to_ascii_lowercase() };
                    prev_alpha = a;
                    out
                })
                .collect()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TokenClass {
    Caps,
    ProperCase,
    Lowercase,
    Digits,
    Alphabets,
    AlphaNum,
}

impl TokenClass {
    pub const ALL: [TokenClass; 6] = [
        TokenClass::Caps,
        TokenClass::ProperCase,
        TokenClass::Lowercase,
        TokenClass::Digits,
        TokenClass::Alphabets,
        TokenClass::AlphaNum,
    ];

    fn name(self) -> &'static str {
        match self {
            TokenClass::Caps => "CAPS",
            TokenClass::ProperCase => "ProperCase",
            TokenClass::Lowercase => "lowercase",
            TokenClass::Digits => "Digits",
            TokenClass::Alphabets => "Alphabets",
            TokenClass::AlphaNum => "AlphaNum",
        }
    }

    /// Length of the longest match starting at `i`, if any.
    fn longest_at(self, s: &[char], i: usize) -> Option<usize> {
        let run = |from: usize, p: fn(&char) -> bool| s[from..].iter().take_while(|c| p(c)).count();
        let n = match self {
            TokenClass::Caps => run(i, char::is_ascii_uppercase),
            TokenClass::Lowercase => run(i, char::is_ascii_lowercase),
            TokenClass::Digits => run(i, char::is_ascii_digit),
            TokenClass::Alphabets => run(i, char::is_ascii_alphabetic),
            TokenClass::AlphaNum => run(i, char::is_ascii_alphanumeric),
            TokenClass::ProperCase => {
                if s[i].is_ascii_uppercase() {
                    let tail = run(i + 1, char::is_ascii_lowercase);
                    if tail > 0 {
                        tail + 1
                    } else {
                        0
                    }
                } else {
                    0
                }
            }
        };
        (n > 0).then_some(n)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Token {
    Literal(String),
    Class(TokenClass),
}

/// Match spans of `token` in `s`: maximal leftmost runs for classes,
/// non-overlapping left-to-right occurrences for literals.
pub fn token_matches(token: &Token, s: &[char]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    match token {
        Token::Class(c) => {
            let mut i = 0;
            while i < s.len() {
                match c.longest_at(s, i) {
                    Some(n) => {
                        out.push((i, i + n));
                        i += n;
                    }
                    None => i += 1,
                }
            }
        }
        Token::Literal(lit) => {
            let lit: Vec<char> = lit.chars().collect();
            if lit.is_empty() {
                return out;
            }
            let mut i = 0;
            while i + lit.len() <= s.len() {
                if s[i..i + lit.len()] == lit[..] {
                    out.push((i, i + lit.len()));
                    i += lit.len();
                } else {
                    i += 1;
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    Start,
    End,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Position {
    ConstPos(i32),
    TokenPos { token: Token, k: i32, dir: Dir },
}

/// Resolves a position to a gap index in `0..=s.len()`.
pub fn eval_position(pos: &Position, s: &[char]) -> Option<usize> {
    let len = s.len() as i64;
    match pos {
        Position::ConstPos(k) => {
            let k = *k as i64;
            let i = if k >= 0 { k } else { len + k + 1 };
            (0..=len).contains(&i).then_some(i as usize)
        }
        Position::TokenPos { token, k, dir } => {
            if *k == 0 {
                return None;
            }
            let m = token_matches(token, s);
            let idx = if *k > 0 { *k as usize - 1 } else { m.len().checked_sub(k.unsigned_abs() as usize)? };
            let (a, b) = *m.get(idx)?;
            Some(if *dir == Dir::Start { a } else { b })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AtomicExpr {
    ConstStr(String),
    SubStr { col: usize, pl: Position, pr: Position, case: CaseMode },
    Replace { col: usize, pl: Position, pr: Position, case: CaseMode, s1: String, s2: String },
    AnyStr,
}

impl AtomicExpr {
    /// Ranking weight: SubStr = Replace > ConstStr > AnyStr.
    pub fn rank(&self) -> i64 {
        match self {
            AtomicExpr::SubStr { .. } | AtomicExpr::Replace { .. } => 3,
            AtomicExpr::ConstStr(_) => 2,
            AtomicExpr::AnyStr => 1,
        }
    }

    pub fn is_input_derived(&self) -> bool {
        matches!(self, AtomicExpr::SubStr { .. } | AtomicExpr::Replace { .. })
    }
}

/// A value of an atom on one row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AtomValue {
    Lit(Vec<char>),
    Gap,
}

/// Cuts `cell[pl..pr]` and applies the case transform.
pub fn eval_substr(cell: &[char], pl: &Position, pr: &Position, case: CaseMode) -> Option<Vec<char>> {
    let a = eval_position(pl, cell)?;
    let b = eval_position(pr, cell)?;
    (a <= b).then(|| to_case(&cell[a..b], case))
}

/// Replaces every non-overlapping occurrence of `from` with `to`.
pub fn replace_all(s: &[char], from: &[char], to: &[char]) -> Vec<char> {
    if from.is_empty() {
        return s.to_vec();
    }
    let mut out = Vec::with_capacity(s.len());
    let mut i = 0;
    while i < s.len() {
        if s[i..].starts_with(from) {
            out.extend_from_slice(to);
            i += from.len();
        } else {
            out.push(s[i]);
            i += 1;
        }
    }
    out
}

pub fn eval_atomic(f: &AtomicExpr, row: &InputRow) -> Option<AtomValue> {
    match f {
        AtomicExpr::ConstStr(s) => Some(AtomValue::Lit(s.chars().collect())),
        AtomicExpr::AnyStr => Some(AtomValue::Gap),
        AtomicExpr::SubStr { col, pl, pr, case } => {
            let cell = row.chars(*col)?;
            eval_substr(&cell, pl, pr, *case).map(AtomValue::Lit)
        }
        AtomicExpr::Replace { col, pl, pr, case, s1, s2 } => {
            let cell = row.chars(*col)?;
            let s = eval_substr(&cell, pl, pr, *case)?;
            let from: Vec<char> = s1.chars().collect();
            let to: Vec<char> = s2.chars().collect();
            Some(AtomValue::Lit(replace_all(&s, &from, &to)))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Predicate {
    pub atoms: Vec<AtomicExpr>,
}

impl Predicate {
    pub fn new(atoms: Vec<AtomicExpr>) -> Self {
        debug_assert!(!atoms.is_empty());
        Predicate { atoms }
    }

    /// Merges neighbouring constants; semantics are unchanged.
    pub fn merged_constants(&self) -> Predicate {
        let mut atoms: Vec<AtomicExpr> = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            if let (Some(AtomicExpr::ConstStr(prev)), AtomicExpr::ConstStr(s)) = (atoms.last_mut(), a) {
                prev.push_str(s);
                continue;
            }
            atoms.push(a.clone());
        }
        Predicate { atoms }
    }

    pub fn has_gap(&self) -> bool {
        self.atoms.contains(&AtomicExpr::AnyStr)
    }

    pub fn input_derived_atoms(&self) -> usize {
        self.atoms.iter().filter(|a| a.is_input_derived()).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UrlProgram {
    pub pred: Predicate,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Segment {
    Lit(Vec<char>),
    Gap,
}

/// Evaluated predicate: literals and `Σ+` gaps, adjacent literals merged.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct UrlPattern {
    pub segments: Vec<Segment>,
}

impl UrlPattern {
    pub fn push(&mut self, v: AtomValue) {
        match v {
            AtomValue::Gap => self.segments.push(Segment::Gap),
            AtomValue::Lit(s) => {
                if s.is_empty() {
                    return;
                }
                if let Some(Segment::Lit(prev)) = self.segments.last_mut() {
                    prev.extend(s);
                } else {
                    self.segments.push(Segment::Lit(s));
                }
            }
        }
    }

    pub fn has_gap(&self) -> bool {
        self.segments.contains(&Segment::Gap)
    }

    /// The literal string when the pattern has no gap.
    pub fn literal(&self) -> Option<String> {
        if self.has_gap() {
            return None;
        }
        Some(
            self.segments
                .iter()
                .flat_map(|s| match s {
                    Segment::Lit(l) => l.iter().copied(),
                    Segment::Gap => unreachable!(),
                })
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InputRow {
    pub cells: Vec<String>,
}

impl InputRow {
    pub fn new<S: Into<String>>(cells: impl IntoIterator<Item = S>) -> Self {
        InputRow { cells: cells.into_iter().map(Into::into).collect() }
    }

    pub fn chars(&self, col: usize) -> Option<Vec<char>> {
        self.cells.get(col).map(|c| c.chars().collect())
    }

    /// The row with one more cell appended.
    pub fn with_cell(&self, extra: impl Into<String>) -> InputRow {
        let mut cells = self.cells.clone();
        cells.push(extra.into());
        InputRow { cells }
    }
}

pub fn eval_predicate(phi: &Predicate, row: &InputRow) -> Option<UrlPattern> {
    let mut p = UrlPattern::default();
    for a in &phi.atoms {
        p.push(eval_atomic(a, row)?);
    }
    Some(p)
}

/// Bitset over the positions `0..=len` of a string.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ends {
    bits: Vec<u64>,
}

impl Ends {
    pub fn start(len: usize) -> Self {
        let mut e = Ends { bits: vec![0; len / 64 + 1] };
        e.set(0);
        e
    }

    fn empty_like(&self) -> Self {
        Ends { bits: vec![0; self.bits.len()] }
    }

    fn set(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits.get(i / 64).is_some_and(|w| w >> (i % 64) & 1 == 1)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    fn min(&self) -> Option<usize> {
        self.bits.iter().enumerate().find(|(_, &w)| w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    /// True if some reachable end lies strictly before `len`.
    pub fn any_before(&self, len: usize) -> bool {
        self.min().is_some_and(|m| m < len)
    }

    /// Advances every reachable end over one segment of `s`.
    pub fn step(&self, seg: &AtomValue, s: &[char]) -> Ends {
        let mut out = self.empty_like();
        match seg {
            AtomValue::Gap => {
                if let Some(m) = self.min() {
                    for i in m + 1..=s.len() {
                        out.set(i);
                    }
                }
            }
            AtomValue::Lit(l) => {
                if l.is_empty() {
                    return self.clone();
                }
                for j in 0..=s.len() {
                    if self.get(j) && s[j..].starts_with(l) {
                        out.set(j + l.len());
                    }
                }
            }
        }
        out
    }
}

/// Anchored match; every gap consumes at least one char.
pub fn pattern_matches(p: &UrlPattern, s: &str) -> bool {
    let s: Vec<char> = s.chars().collect();
    let mut ends = Ends::start(s.len());
    for seg in &p.segments {
        let v = match seg {
            Segment::Lit(l) => AtomValue::Lit(l.clone()),
            Segment::Gap => AtomValue::Gap,
        };
        ends = ends.step(&v, &s);
        if ends.is_empty() {
            return false;
        }
    }
    ends.get(s.len())
}

/// First candidate matched by the evaluated program, in oracle order.
pub fn run_filter<'c>(prog: &UrlProgram, row: &InputRow, candidates: &'c [String]) -> Option<&'c str> {
    let p = eval_predicate(&prog.pred, row)?;
    candidates.iter().find(|c| pattern_matches(&p, c)).map(String::as_str)
}

fn quote(s: &str) -> String {
    format!("{s:?}")
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Literal(s) => f.write_str(&quote(s)),
            Token::Class(c) => f.write_str(c.name()),
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::ConstPos(k) => write!(f, "ConstPos({k})"),
            Position::TokenPos { token, k, dir } => write!(f, "({token},{k},{dir:?})"),
        }
    }
}

impl fmt::Display for CaseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for AtomicExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomicExpr::ConstStr(s) => write!(f, "ConstStr({})", quote(s)),
            AtomicExpr::AnyStr => f.write_str("AnyStr"),
            AtomicExpr::SubStr { col, pl, pr, case } => write!(f, "SubStr({col}, {pl}, {pr}, {case})"),
            AtomicExpr::Replace { col, pl, pr, case, s1, s2 } => {
                write!(f, "Replace({col}, {pl}, {pr}, {case}, {}, {})", quote(s1), quote(s2))
            }
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Concat(")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for UrlProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Filter({})", self.pred)
    }
}
