//! Version-space DAGs over output positions.

use std::collections::{BTreeMap, HashMap, VecDeque};

use super::layers::LayerConfig;
use crate::url_dsl::{
    replace_all, to_case, token_matches, AtomicExpr, CaseMode, Dir, InputRow, Position, Token, TokenClass,
    DEFAULT_DELIMITERS,
};

/// Knobs for atom enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub delimiters: Vec<String>,
    /// Largest |k| enumerated for token positions.
    pub max_k: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { delimiters: DEFAULT_DELIMITERS.iter().map(|s| s.to_string()).collect(), max_k: 4 }
    }
}

/// Atoms on one edge.
///
/// `ConstStr` and `AnyStr` are stored as flags since their content follows
/// from the edge span. Replace atoms that act as the identity on every
/// example (their `s1` never occurs in the span) are implied by the SubStr
/// with the same arguments and the `absent` mask, instead of being listed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeSet {
    /// SubStr and explicit Replace atoms, sorted and deduplicated.
    pub exprs: Vec<AtomicExpr>,
    pub konst: bool,
    pub any: bool,
    /// Bit i set when delimiter i is absent from the span in every example.
    pub absent: u32,
}

impl EdgeSet {
    pub fn is_empty(&self) -> bool {
        self.exprs.is_empty() && !self.konst && !self.any
    }

    fn has(&self, e: &AtomicExpr) -> bool {
        self.exprs.binary_search(e).is_ok()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dag {
    pub n: usize,
    pub edges: BTreeMap<(usize, usize), EdgeSet>,
    /// Example outputs folded into this DAG.
    pub outputs: Vec<Vec<char>>,
    /// Per vertex, its position in each output.
    pub coords: Vec<Vec<usize>>,
    pub delimiters: Vec<String>,
}

fn substr_of(col: usize, pl: &Position, pr: &Position, case: CaseMode) -> AtomicExpr {
    AtomicExpr::SubStr { col, pl: pl.clone(), pr: pr.clone(), case }
}

/// Positions resolving to each gap index of one cell.
struct CellIndex {
    chars: Vec<char>,
    lower: Vec<char>,
    at: Vec<Vec<Position>>,
}

impl CellIndex {
    fn new(cell: &str, cfg: &GenConfig) -> Self {
        let chars: Vec<char> = cell.chars().collect();
        let len = chars.len();
        let mut at: Vec<Vec<Position>> = vec![Vec::new(); len + 1];
        for (i, slot) in at.iter_mut().enumerate() {
            slot.push(Position::ConstPos(i as i32));
            slot.push(Position::ConstPos(i as i32 - len as i32 - 1));
        }
        let mut tokens: Vec<Token> = TokenClass::ALL.iter().map(|&c| Token::Class(c)).collect();
        tokens.extend(cfg.delimiters.iter().map(|d| Token::Literal(d.clone())));
        let max_k = cfg.max_k.max(1);
        for t in tokens {
            let m = token_matches(&t, &chars);
            let cnt = m.len();
            for (j, &(a, b)) in m.iter().enumerate() {
                let mut ks = Vec::with_capacity(2);
                if j < max_k {
                    ks.push(j as i32 + 1);
                }
                if cnt - j <= max_k {
                    ks.push(-((cnt - j) as i32));
                }
                for k in ks {
                    at[a].push(Position::TokenPos { token: t.clone(), k, dir: Dir::Start });
                    at[b].push(Position::TokenPos { token: t.clone(), k, dir: Dir::End });
                }
            }
        }
        let lower = chars.iter().map(|c| c.to_ascii_lowercase()).collect();
        CellIndex { chars, lower, at }
    }

    fn emit(&self, col: usize, a: usize, b: usize, case: CaseMode, out: &mut Vec<AtomicExpr>) {
        for pl in &self.at[a] {
            for pr in &self.at[b] {
                out.push(substr_of(col, pl, pr, case));
            }
        }
    }

    fn emit_replace(
        &self,
        col: usize,
        a: usize,
        b: usize,
        case: CaseMode,
        s1: &str,
        s2: &str,
        out: &mut Vec<AtomicExpr>,
    ) {
        for pl in &self.at[a] {
            for pr in &self.at[b] {
                out.push(AtomicExpr::Replace {
                    col,
                    pl: pl.clone(),
                    pr: pr.clone(),
                    case,
                    s1: s1.to_string(),
                    s2: s2.to_string(),
                });
            }
        }
    }
}

fn index_row(row: &InputRow, cfg: &GenConfig) -> Vec<CellIndex> {
    row.cells.iter().map(|c| CellIndex::new(c, cfg)).collect()
}

/// SubStr atoms of `row` producing `o[k..l]`, via every position pair.
pub fn gen_substr(k: usize, l: usize, row: &InputRow, o: &str, cfg: &GenConfig) -> Vec<AtomicExpr> {
    let o: Vec<char> = o.chars().collect();
    let cells = index_row(row, cfg);
    let mut out = Vec::new();
    substr_span(&cells, &o[k..l], &mut out);
    out.sort();
    out.dedup();
    out
}

fn substr_span(cells: &[CellIndex], t: &[char], out: &mut Vec<AtomicExpr>) {
    let n = t.len();
    let tl: Vec<char> = t.iter().map(|c| c.to_ascii_lowercase()).collect();
    for (col, ci) in cells.iter().enumerate() {
        if ci.chars.len() < n {
            continue;
        }
        for a in 0..=ci.chars.len() - n {
            if ci.lower[a..a + n] != tl[..] {
                continue;
            }
            for case in CaseMode::ALL {
                if to_case(&ci.chars[a..a + n], case) == t {
                    ci.emit(col, a, a + n, case, out);
                }
            }
        }
    }
}

/// Replace atoms producing `o[k..l]` whose `s2` occurs in the span.
pub fn gen_replace(k: usize, l: usize, row: &InputRow, o: &str, cfg: &GenConfig) -> Vec<AtomicExpr> {
    let o: Vec<char> = o.chars().collect();
    let cells = index_row(row, cfg);
    let mut out = Vec::new();
    replace_span(&cells, &o[k..l], &cfg.delimiters, &mut out);
    out.sort();
    out.dedup();
    out
}

fn replace_span(cells: &[CellIndex], t: &[char], delims: &[String], out: &mut Vec<AtomicExpr>) {
    let maxlen = cells.iter().map(|c| c.chars.len()).max().unwrap_or(0);
    for s2 in delims {
        let s2c: Vec<char> = s2.chars().collect();
        if s2c.is_empty() || !t.windows(s2c.len()).any(|w| w == &s2c[..]) {
            continue;
        }
        // A span made only of s2 copies is a constant, not a rewrite of input.
        if replace_all(t, &s2c, &[]).is_empty() {
            continue;
        }
        for s1 in delims {
            if s1 == s2 {
                continue;
            }
            let s1c: Vec<char> = s1.chars().collect();
            let inv = replace_all(t, &s2c, &s1c);
            let n = inv.len();
            if n > maxlen {
                continue;
            }
            let invl: Vec<char> = inv.iter().map(|c| c.to_ascii_lowercase()).collect();
            for (col, ci) in cells.iter().enumerate() {
                if ci.chars.len() < n {
                    continue;
                }
                for a in 0..=ci.chars.len() - n {
                    if ci.lower[a..a + n] != invl[..] {
                        continue;
                    }
                    for case in CaseMode::ALL {
                        let cased = to_case(&ci.chars[a..a + n], case);
                        if replace_all(&cased, &s1c, &s2c) == t {
                            ci.emit_replace(col, a, a + n, case, s1, s2, out);
                        }
                    }
                }
            }
        }
    }
}

fn absent_mask(t: &[char], delims: &[String]) -> u32 {
    let mut m = 0u32;
    for (i, d) in delims.iter().enumerate().take(32) {
        let dc: Vec<char> = d.chars().collect();
        if dc.is_empty() || !t.windows(dc.len()).any(|w| w == &dc[..]) {
            m |= 1 << i;
        }
    }
    m
}

/// Builds the DAG of all gated atoms producing `o` from `row`.
pub fn gen_dag(row: &InputRow, o: &str, layer: &LayerConfig, cfg: &GenConfig) -> Dag {
    let oc: Vec<char> = o.chars().collect();
    let len = oc.len();
    let cells = index_row(row, cfg);
    let mut edges = BTreeMap::new();
    for k in 0..len {
        for l in k + 1..=len {
            let span = &oc[k..l];
            let mut es = EdgeSet::default();
            if layer.lambda_s.eval(k, l, &oc) {
                substr_span(&cells, span, &mut es.exprs);
                replace_span(&cells, span, &cfg.delimiters, &mut es.exprs);
                es.exprs.sort();
                es.exprs.dedup();
            }
            es.konst = layer.lambda_c.eval(k, l, &oc);
            es.any = layer.lambda_a.eval(k, l, &oc);
            if !es.is_empty() {
                es.absent = absent_mask(span, &cfg.delimiters);
                edges.insert((k, l), es);
            }
        }
    }
    Dag {
        n: len + 1,
        edges,
        outputs: vec![oc],
        coords: (0..=len).map(|i| vec![i]).collect(),
        delimiters: cfg.delimiters.clone(),
    }
}

impl Dag {
    pub fn source(&self) -> usize {
        0
    }

    pub fn target(&self) -> usize {
        self.n - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of explicitly stored atoms, counting constant and gap flags.
    pub fn atom_count(&self) -> usize {
        self.edges.values().map(|e| e.exprs.len() + e.konst as usize + e.any as usize).sum()
    }

    /// Span of edge `(k, l)` in the `ex`-th output.
    pub fn segment(&self, ex: usize, k: usize, l: usize) -> &[char] {
        &self.outputs[ex][self.coords[k][ex]..self.coords[l][ex]]
    }

    pub fn const_str(&self, k: usize, l: usize) -> String {
        self.segment(0, k, l).iter().collect()
    }

    /// Implied identity Replace atoms of an edge.
    pub fn implicit_replaces(&self, es: &EdgeSet) -> Vec<AtomicExpr> {
        let mut out = Vec::new();
        for e in &es.exprs {
            let AtomicExpr::SubStr { col, pl, pr, case } = e else { continue };
            for (i, s1) in self.delimiters.iter().enumerate().take(32) {
                if es.absent >> i & 1 == 0 {
                    continue;
                }
                for s2 in &self.delimiters {
                    if s2 != s1 {
                        let r = AtomicExpr::Replace {
                            col: *col,
                            pl: pl.clone(),
                            pr: pr.clone(),
                            case: *case,
                            s1: s1.clone(),
                            s2: s2.clone(),
                        };
                        if !es.has(&r) {
                            out.push(r);
                        }
                    }
                }
            }
        }
        out
    }

    /// Every atom on an edge, implied ones included.
    pub fn atoms(&self, k: usize, l: usize) -> Vec<AtomicExpr> {
        let Some(es) = self.edges.get(&(k, l)) else { return Vec::new() };
        let mut v = es.exprs.clone();
        v.extend(self.implicit_replaces(es));
        if es.konst {
            v.push(AtomicExpr::ConstStr(self.const_str(k, l)));
        }
        if es.any {
            v.push(AtomicExpr::AnyStr);
        }
        v
    }

    fn delim_index(&self, s: &str) -> Option<usize> {
        self.delimiters.iter().position(|d| d == s).filter(|&i| i < 32)
    }

    /// Membership of one atom on edge `(k, l)`.
    pub fn edge_contains(&self, k: usize, l: usize, f: &AtomicExpr) -> bool {
        let Some(es) = self.edges.get(&(k, l)) else { return false };
        match f {
            AtomicExpr::ConstStr(s) => es.konst && self.segment(0, k, l).iter().copied().eq(s.chars()),
            AtomicExpr::AnyStr => es.any,
            AtomicExpr::SubStr { .. } => es.has(f),
            AtomicExpr::Replace { col, pl, pr, case, s1, s2 } => {
                es.has(f)
                    || (s1 != s2
                        && self.delim_index(s2).is_some()
                        && self.delim_index(s1).is_some_and(|i| es.absent >> i & 1 == 1)
                        && es.has(&substr_of(*col, pl, pr, *case)))
            }
        }
    }

    /// True when `atoms` spells a source-to-target path.
    pub fn contains_program(&self, atoms: &[AtomicExpr]) -> bool {
        let mut cur = vec![false; self.n];
        cur[0] = true;
        for f in atoms {
            let mut next = vec![false; self.n];
            for &(k, l) in self.edges.keys() {
                if cur[k] && !next[l] && self.edge_contains(k, l, f) {
                    next[l] = true;
                }
            }
            cur = next;
        }
        cur[self.target()]
    }

    pub fn out_edges(&self) -> Vec<Vec<(usize, &EdgeSet)>> {
        let mut out: Vec<Vec<(usize, &EdgeSet)>> = vec![Vec::new(); self.n];
        for (&(k, l), es) in &self.edges {
            out[k].push((l, es));
        }
        out
    }

    pub fn has_path(&self) -> bool {
        if self.n == 1 {
            return true;
        }
        let mut seen = vec![false; self.n];
        seen[0] = true;
        for &(k, l) in self.edges.keys() {
            if seen[k] {
                seen[l] = true;
            }
        }
        seen[self.target()]
    }

    /// Keeps only atoms admitted by `layer` on every folded example.
    pub fn restrict(&self, layer: &LayerConfig) -> Dag {
        let mut edges = BTreeMap::new();
        for (&(k, l), es) in &self.edges {
            let all = |f: super::layers::LayerFn| {
                (0..self.outputs.len()).all(|e| f.eval(self.coords[k][e], self.coords[l][e], &self.outputs[e]))
            };
            let r = EdgeSet {
                exprs: if all(layer.lambda_s) { es.exprs.clone() } else { Vec::new() },
                konst: es.konst && all(layer.lambda_c),
                any: es.any && all(layer.lambda_a),
                absent: es.absent,
            };
            if !r.is_empty() {
                edges.insert((k, l), r);
            }
        }
        Dag { edges, ..self.clone() }.pruned()
    }

    /// Drops vertices off every source-to-target path and renumbers.
    pub fn pruned(self) -> Dag {
        let t = self.target();
        let mut fwd = vec![false; self.n];
        fwd[0] = true;
        for &(k, l) in self.edges.keys() {
            if fwd[k] {
                fwd[l] = true;
            }
        }
        let mut bwd = vec![false; self.n];
        bwd[t] = true;
        for (&(k, l), _) in self.edges.iter().rev() {
            if bwd[l] {
                bwd[k] = true;
            }
        }
        if !fwd[t] {
            return self.emptied();
        }
        let keep: Vec<usize> = (0..self.n).filter(|&v| fwd[v] && bwd[v]).collect();
        let mut map = vec![usize::MAX; self.n];
        for (i, &v) in keep.iter().enumerate() {
            map[v] = i;
        }
        let edges = self
            .edges
            .into_iter()
            .filter(|((k, l), _)| map[*k] != usize::MAX && map[*l] != usize::MAX)
            .map(|((k, l), es)| ((map[k], map[l]), es))
            .collect();
        Dag {
            n: keep.len(),
            edges,
            coords: keep.iter().map(|&v| self.coords[v].clone()).collect(),
            outputs: self.outputs,
            delimiters: self.delimiters,
        }
    }

    fn emptied(self) -> Dag {
        let t = self.target();
        Dag {
            n: 2,
            edges: BTreeMap::new(),
            coords: vec![self.coords[0].clone(), self.coords[t].clone()],
            outputs: self.outputs,
            delimiters: self.delimiters,
        }
    }

    /// Product construction; edge sets intersect by atom identity.
    pub fn intersect(&self, other: &Dag) -> Dag {
        self.intersect_within(other, usize::MAX).expect("unbounded")
    }

    /// Like `intersect`, giving up once the product holds more than
    /// `max_edges` edges.
    pub fn intersect_within(&self, other: &Dag, max_edges: usize) -> Option<Dag> {
        let out1 = self.out_edges();
        let out2 = other.out_edges();
        let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut verts: Vec<(usize, usize)> = Vec::new();
        let mut raw: Vec<((usize, usize), (usize, usize), EdgeSet)> = Vec::new();
        let mut queue = VecDeque::new();
        ids.insert((0, 0), 0);
        verts.push((0, 0));
        queue.push_back((0, 0));
        while let Some((u1, u2)) = queue.pop_front() {
            for &(l1, e1) in &out1[u1] {
                for &(l2, e2) in &out2[u2] {
                    let es = self.intersect_edge(other, (u1, l1), e1, (u2, l2), e2);
                    if es.is_empty() {
                        continue;
                    }
                    if let std::collections::hash_map::Entry::Vacant(e) = ids.entry((l1, l2)) {
                        e.insert(verts.len());
                        verts.push((l1, l2));
                        queue.push_back((l1, l2));
                    }
                    raw.push(((u1, u2), (l1, l2), es));
                    if raw.len() > max_edges {
                        return None;
                    }
                }
            }
        }
        let tgt = (self.target(), other.target());
        if !ids.contains_key(&tgt) {
            verts.push(tgt);
        }
        verts.sort();
        let index: HashMap<(usize, usize), usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut outputs = self.outputs.clone();
        outputs.extend(other.outputs.iter().cloned());
        let coords = verts
            .iter()
            .map(|&(a, b)| {
                let mut c = self.coords[a].clone();
                c.extend(other.coords[b].iter().copied());
                c
            })
            .collect();
        let edges = raw.into_iter().map(|(a, b, es)| ((index[&a], index[&b]), es)).collect();
        let mut d = Dag { n: verts.len(), edges, outputs, coords, delimiters: self.delimiters.clone() };
        // The target pair must sort last; anything past it cannot reach it.
        let t = index[&tgt];
        if t != d.n - 1 {
            d.edges.retain(|&(_, l), _| l <= t);
            d.coords.truncate(t + 1);
            d.n = t + 1;
        }
        Some(d.pruned())
    }

    fn intersect_edge(
        &self,
        other: &Dag,
        (k1, l1): (usize, usize),
        e1: &EdgeSet,
        (k2, l2): (usize, usize),
        e2: &EdgeSet,
    ) -> EdgeSet {
        let mut exprs = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < e1.exprs.len() && j < e2.exprs.len() {
            match e1.exprs[i].cmp(&e2.exprs[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    exprs.push(e1.exprs[i].clone());
                    i += 1;
                    j += 1;
                }
            }
        }
        // Explicit Replace on one side, implied by SubStr on the other.
        for (ea, eb, da) in [(e2, e1, self), (e1, e2, self)] {
            for r in &ea.exprs {
                let AtomicExpr::Replace { col, pl, pr, case, s1, .. } = r else { continue };
                if eb.has(r) {
                    continue;
                }
                let Some(bit) = da.delim_index(s1) else { continue };
                if eb.absent >> bit & 1 == 1 && eb.has(&substr_of(*col, pl, pr, *case)) {
                    exprs.push(r.clone());
                }
            }
        }
        exprs.sort();
        exprs.dedup();
        let konst = e1.konst && e2.konst && self.segment(0, k1, l1) == other.segment(0, k2, l2);
        EdgeSet { exprs, konst, any: e1.any && e2.any, absent: e1.absent & e2.absent }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::url_synth::layers::{layer_predicates, LayerConfig};

    fn row(cells: &[&str]) -> InputRow {
        InputRow::new(cells.iter().copied())
    }

    fn sub(col: usize, a: i32, b: i32, case: CaseMode) -> AtomicExpr {
        AtomicExpr::SubStr { col, pl: Position::ConstPos(a), pr: Position::ConstPos(b), case }
    }

    #[test]
    fn currency_substrings() {
        let r = row(&["EUR", "USD", "03, November, 16"]);
        let o = "eur-usd-historical-data";
        let g = GenConfig::default();
        assert!(gen_substr(0, 3, &r, o, &g).contains(&sub(0, 0, -1, CaseMode::Lower)));
        assert!(gen_substr(19, 20, &r, o, &g).contains(&sub(1, 2, 3, CaseMode::Lower)));
        assert!(gen_substr(0, 1, &row(&["xyz"]), "q", &g).is_empty());
    }

    #[test]
    fn replace_candidates() {
        let g = GenConfig::default();
        let want = AtomicExpr::Replace {
            col: 0,
            pl: Position::ConstPos(0),
            pr: Position::ConstPos(-1),
            case: CaseMode::Iden,
            s1: " ".into(),
            s2: "_".into(),
        };
        assert!(gen_replace(0, 13, &row(&["United States"]), "United_States", &g).contains(&want));
        let dash = gen_replace(0, 3, &row(&["a b"]), "a-b", &g);
        assert!(dash.iter().any(|a| matches!(a, AtomicExpr::Replace { s1, s2, .. } if s1 == " " && s2 == "-")));
    }

    #[test]
    fn identity_replace_is_implied() {
        let g = GenConfig::default();
        let d = gen_dag(&row(&["India"]), "India", &LayerConfig::FULL, &g);
        let r = AtomicExpr::Replace {
            col: 0,
            pl: Position::ConstPos(0),
            pr: Position::ConstPos(-1),
            case: CaseMode::Iden,
            s1: " ".into(),
            s2: "_".into(),
        };
        assert!(d.edge_contains(0, 5, &r));
        let us = gen_dag(&row(&["United States"]), "United_States", &LayerConfig::FULL, &g);
        let both = d.intersect(&us);
        assert!(both.contains_program(&[r]));
    }

    #[test]
    fn single_char_full_layer() {
        let d = gen_dag(&row(&["a"]), "a", &LayerConfig::FULL, &GenConfig::default());
        let atoms = d.atoms(0, 1);
        assert!(atoms.contains(&AtomicExpr::ConstStr("a".into())));
        assert!(atoms.contains(&AtomicExpr::AnyStr));
        assert!(atoms.contains(&sub(0, 0, -1, CaseMode::Iden)));
    }

    #[test]
    fn layer_one_is_sparse() {
        let r = row(&["EUR", "USD", "03, November, 16"]);
        let o = "http://www.investing.com/currencies/eur-usd-historical-data";
        let g = GenConfig::default();
        let l1 = gen_dag(&r, o, &layer_predicates()[0], &g);
        let l4 = gen_dag(&r, o, &layer_predicates()[3], &g);
        assert!(!l1.edges.keys().any(|&(k, l)| (k, l) == (55, 56)));
        assert!(l4.edge_count() >= 5 * l1.edge_count());
        assert!(l1.has_path());
    }

    #[test]
    fn self_intersection_keeps_shape() {
        let r = row(&["EUR", "USD"]);
        let d = gen_dag(&r, "eur-usd", &layer_predicates()[0], &GenConfig::default()).pruned();
        let dd = d.intersect(&d);
        assert_eq!(dd.n, d.n);
        assert_eq!(dd.edges.len(), d.edges.len());
        for ((k, l), es) in &d.edges {
            assert_eq!(dd.edges[&(*k, *l)].exprs, es.exprs);
        }
    }

    #[test]
    fn mismatched_constants_drop() {
        let g = GenConfig::default();
        let a = gen_dag(&row(&["x"]), "ab", &LayerConfig::FULL, &g);
        let b = gen_dag(&row(&["y"]), "ac", &LayerConfig::FULL, &g);
        let d = a.intersect(&b);
        assert!(d.has_path());
        assert!(!d.contains_program(&[AtomicExpr::ConstStr("ab".into())]));
        assert!(d.contains_program(&[AtomicExpr::ConstStr("a".into()), AtomicExpr::AnyStr]));
    }
}
