//! Exhaustive enumerators over small bounded program spaces, used as test
//! oracles. They share the evaluators with the synthesizers but none of
//! the DAG or graph machinery.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::dom::{Axis, DomTree, NodeId};
use crate::extract_dsl::{eval_pred, AttrPred, CountPred, ExtractProgram, NodePred, Path, PathNode, PosPred, Pred};
use crate::extract_synth::ExtractExample;
use crate::url_dsl::{
    eval_position, eval_substr, replace_all, AtomicExpr, CaseMode, Dir, InputRow, Position, Predicate, Token,
    TokenClass, DEFAULT_DELIMITERS,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("bounds exceeded: {0}")]
    Bounds(String),
}

#[derive(Clone, Debug)]
pub struct UrlBounds {
    pub max_len: usize,
    pub max_cell: usize,
    pub max_atoms: usize,
    pub max_k: i32,
    pub const_str: bool,
    pub substr: bool,
    pub replace: bool,
    pub any_str: bool,
    pub max_results: usize,
}

impl Default for UrlBounds {
    fn default() -> Self {
        UrlBounds {
            max_len: 10,
            max_cell: 12,
            max_atoms: 3,
            max_k: 4,
            const_str: true,
            substr: true,
            replace: true,
            any_str: true,
            max_results: 200_000,
        }
    }
}

fn positions(cell: &[char], max_k: i32) -> Vec<Position> {
    let len = cell.len() as i32;
    let mut out: Vec<Position> = (-(len + 1)..=len).map(Position::ConstPos).collect();
    let mut tokens: Vec<Token> = TokenClass::ALL.iter().map(|&c| Token::Class(c)).collect();
    tokens.extend(DEFAULT_DELIMITERS.iter().map(|d| Token::Literal(d.to_string())));
    for t in tokens {
        for k in (-max_k..=max_k).filter(|&k| k != 0) {
            for dir in [Dir::Start, Dir::End] {
                out.push(Position::TokenPos { token: t.clone(), k, dir });
            }
        }
    }
    out
}

/// Input-derived atoms of `row`, keyed by their non-empty output. Replace
/// atoms whose `s1` does not occur act as the identity and are left out,
/// since the SubStr with the same arguments already covers them. Outputs
/// made only of `s2` copies are outside the language.
fn derived_atoms(row: &InputRow, b: &UrlBounds) -> HashMap<Vec<char>, Vec<AtomicExpr>> {
    let mut m: HashMap<Vec<char>, Vec<AtomicExpr>> = HashMap::new();
    for (col, cell) in row.cells.iter().enumerate() {
        let cell: Vec<char> = cell.chars().collect();
        let mut at: BTreeMap<usize, Vec<Position>> = BTreeMap::new();
        for p in positions(&cell, b.max_k) {
            if let Some(i) = eval_position(&p, &cell) {
                at.entry(i).or_default().push(p);
            }
        }
        for (&a, pls) in &at {
            for (_, prs) in at.range(a..) {
                for case in CaseMode::ALL {
                    let Some(v) = eval_substr(&cell, &pls[0], &prs[0], case) else { continue };
                    let mut outs: Vec<(Vec<char>, Option<(&str, &str)>)> = Vec::new();
                    if b.substr && !v.is_empty() {
                        outs.push((v.clone(), None));
                    }
                    if b.replace {
                        for s1 in DEFAULT_DELIMITERS {
                            let s1c: Vec<char> = s1.chars().collect();
                            if !v.windows(s1c.len()).any(|w| w == &s1c[..]) {
                                continue;
                            }
                            for s2 in DEFAULT_DELIMITERS.iter().filter(|s2| *s2 != s1) {
                                let s2c: Vec<char> = s2.chars().collect();
                                let r = replace_all(&v, &s1c, &s2c);
                                if !replace_all(&r, &s2c, &[]).is_empty() {
                                    outs.push((r, Some((s1, s2))));
                                }
                            }
                        }
                    }
                    for (out, rep) in outs {
                        let e = m.entry(out).or_default();
                        for pl in pls {
                            for pr in prs {
                                e.push(match rep {
                                    None => AtomicExpr::SubStr { col, pl: pl.clone(), pr: pr.clone(), case },
                                    Some((s1, s2)) => AtomicExpr::Replace {
                                        col,
                                        pl: pl.clone(),
                                        pr: pr.clone(),
                                        case,
                                        s1: s1.to_string(),
                                        s2: s2.to_string(),
                                    },
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    m
}

fn check_url_bounds(row: &InputRow, o: &[char], b: &UrlBounds) -> Result<(), OracleError> {
    if o.is_empty() || o.len() > b.max_len {
        return Err(OracleError::Bounds(format!("output length {} not in 1..={}", o.len(), b.max_len)));
    }
    if let Some(c) = row.cells.iter().find(|c| c.chars().count() > b.max_cell) {
        return Err(OracleError::Bounds(format!("cell {c:?} longer than {}", b.max_cell)));
    }
    if b.max_atoms > 4 {
        return Err(OracleError::Bounds(format!("{} atoms", b.max_atoms)));
    }
    Ok(())
}

fn segment_atoms(seg: &[char], derived: &HashMap<Vec<char>, Vec<AtomicExpr>>, b: &UrlBounds) -> Vec<AtomicExpr> {
    let mut v = derived.get(seg).cloned().unwrap_or_default();
    if b.const_str {
        v.push(AtomicExpr::ConstStr(seg.iter().collect()));
    }
    if b.any_str {
        v.push(AtomicExpr::AnyStr);
    }
    v
}

/// Every predicate of at most `max_atoms` atoms producing exactly `o`.
/// Atoms with empty output are not enumerated.
pub fn brute_force_url_oracle(row: &InputRow, o: &str, b: &UrlBounds) -> Result<BTreeSet<Predicate>, OracleError> {
    let o: Vec<char> = o.chars().collect();
    check_url_bounds(row, &o, b)?;
    let derived = derived_atoms(row, b);
    let mut out = BTreeSet::new();
    let mut stack: Vec<AtomicExpr> = Vec::new();
    fn go(
        at: usize,
        o: &[char],
        derived: &HashMap<Vec<char>, Vec<AtomicExpr>>,
        b: &UrlBounds,
        stack: &mut Vec<AtomicExpr>,
        out: &mut BTreeSet<Predicate>,
    ) -> Result<(), OracleError> {
        if at == o.len() {
            out.insert(Predicate { atoms: stack.clone() });
            if out.len() > b.max_results {
                return Err(OracleError::Bounds(format!("more than {} programs", b.max_results)));
            }
            return Ok(());
        }
        if stack.len() == b.max_atoms {
            return Ok(());
        }
        for end in at + 1..=o.len() {
            for f in segment_atoms(&o[at..end], derived, b) {
                stack.push(f);
                go(end, o, derived, b, stack, out)?;
                stack.pop();
            }
        }
        Ok(())
    }
    go(0, &o, &derived, b, &mut stack, &mut out)?;
    Ok(out)
}

/// Whether the bounded space holds any predicate producing `o`.
pub fn url_oracle_nonempty(row: &InputRow, o: &str, b: &UrlBounds) -> Result<bool, OracleError> {
    let o: Vec<char> = o.chars().collect();
    check_url_bounds(row, &o, b)?;
    let derived = derived_atoms(row, b);
    // fewest atoms to reach each position
    let mut best = vec![usize::MAX; o.len() + 1];
    best[0] = 0;
    for at in 0..o.len() {
        if best[at] >= b.max_atoms {
            continue;
        }
        for end in at + 1..=o.len() {
            if !segment_atoms(&o[at..end], &derived, b).is_empty() {
                best[end] = best[end].min(best[at] + 1);
            }
        }
    }
    Ok(best[o.len()] <= b.max_atoms)
}

#[derive(Clone, Debug)]
pub struct ExtractBounds {
    pub max_nodes: usize,
    pub max_path_len: usize,
    pub max_preds: usize,
}

impl Default for ExtractBounds {
    fn default() -> Self {
        ExtractBounds { max_nodes: 15, max_path_len: 3, max_preds: 2 }
    }
}

/// Node predicates true at `n`: constant attribute values and counts.
fn node_preds(tree: &DomTree, n: NodeId) -> Vec<NodePred> {
    let node = tree.node(n);
    let mut v: Vec<NodePred> = node
        .attrs
        .iter()
        .filter(|(k, val)| !val.is_empty() && !node.attr_oversize(k))
        .map(|(k, val)| {
            NodePred::Attr(AttrPred { name: k.clone(), value: Predicate::new(vec![AtomicExpr::ConstStr(val.clone())]) })
        })
        .collect();
    v.extend(Axis::ALL.iter().map(|&axis| NodePred::Count(CountPred { axis, k: tree.neighbor_count(n, axis) })));
    v
}

/// Hop chains from `target` obeying the path grammar.
fn chains(tree: &DomTree, target: NodeId, max_len: usize) -> Vec<Vec<(NodeId, Axis, usize)>> {
    let mut out = Vec::new();
    let mut cur: Vec<Vec<(NodeId, Axis, usize)>> = Vec::new();
    for axis in Axis::ALL {
        for (i, m) in tree.neighbors(target, axis).into_iter().enumerate() {
            cur.push(vec![(m, axis, i + 1)]);
        }
    }
    while let Some(c) = cur.pop() {
        let &(last, axis, _) = c.last().unwrap();
        if axis != Axis::Ancestor {
            out.push(c.clone());
        }
        if c.len() == max_len {
            continue;
        }
        let next: &[Axis] = if axis == Axis::Ancestor { &[Axis::Left, Axis::Right] } else { &[Axis::Child] };
        for &ax in next {
            for (i, m) in tree.neighbors(last, ax).into_iter().enumerate() {
                let mut d = c.clone();
                d.push((m, ax, i + 1));
                cur.push(d);
            }
        }
    }
    out.sort();
    out
}

/// Atomic predicates true at the target: its own node predicates, and path
/// predicates along every grammar chain with exact, bounded or free
/// positions per step and at most one node predicate per path.
pub fn enumerate_atomic_preds(tree: &DomTree, target: NodeId, b: &ExtractBounds) -> Vec<Pred> {
    let mut out: Vec<Pred> = node_preds(tree, target).into_iter().map(Pred::Node).collect();
    for chain in chains(tree, target, b.max_path_len) {
        let pos_opts: Vec<Vec<PosPred>> = chain
            .iter()
            .map(|&(_, _, d)| {
                let mut v = vec![PosPred::Eq(d), PosPred::Any];
                if d > 1 {
                    v.push(PosPred::Leq(d));
                }
                v
            })
            .collect();
        let mut extra: Vec<Option<(usize, NodePred)>> = vec![None];
        for (i, &(n, _, _)) in chain.iter().enumerate() {
            extra.extend(node_preds(tree, n).into_iter().map(|p| Some((i, p))));
        }
        let total: usize = pos_opts.iter().map(Vec::len).product();
        for mut idx in 0..total {
            let mut nodes = Vec::with_capacity(chain.len());
            for (i, &(n, axis, _)) in chain.iter().enumerate() {
                let k = pos_opts[i].len();
                nodes.push(PathNode { name: tree.node(n).tag.clone(), axis, pos: pos_opts[i][idx % k], preds: vec![] });
                idx /= k;
            }
            for e in &extra {
                let mut p = Path { nodes: nodes.clone() };
                if let Some((i, np)) = e {
                    p.nodes[*i].preds.push(np.clone());
                }
                out.push(Pred::Path(p));
            }
        }
    }
    out
}

/// Programs of at most `max_preds` atomic predicates selecting exactly the
/// target. Predicates with the same selection on the page are merged, so
/// one representative is returned per distinct way of narrowing.
pub fn brute_force_extract_oracle(ex: &ExtractExample, b: &ExtractBounds) -> Result<Vec<ExtractProgram>, OracleError> {
    let tree = &ex.tree;
    if tree.len() > b.max_nodes {
        return Err(OracleError::Bounds(format!("{} nodes > {}", tree.len(), b.max_nodes)));
    }
    if b.max_path_len > 3 || b.max_preds > 2 {
        return Err(OracleError::Bounds("path length or predicate count too large".into()));
    }
    let tag = &tree.node(ex.target).tag;
    let pool: Vec<NodeId> = tree.all_nodes().filter(|&n| tree.node(n).tag == *tag).collect();
    let mut by_sel: BTreeMap<BTreeSet<NodeId>, Pred> = BTreeMap::new();
    for p in enumerate_atomic_preds(tree, ex.target, b) {
        let sel: BTreeSet<NodeId> = pool.iter().copied().filter(|&n| eval_pred(&p, &ex.row, tree, n)).collect();
        by_sel.entry(sel).or_insert(p);
    }
    let goal = BTreeSet::from([ex.target]);
    let prog = |preds: Vec<Pred>| ExtractProgram { name: tag.clone(), preds };
    let mut out = Vec::new();
    if pool.len() == 1 {
        out.push(prog(vec![]));
    }
    if b.max_preds >= 1 {
        if let Some(p) = by_sel.get(&goal) {
            out.push(prog(vec![p.clone()]));
        }
    }
    if b.max_preds >= 2 {
        let sels: Vec<(&BTreeSet<NodeId>, &Pred)> = by_sel.iter().collect();
        for i in 0..sels.len() {
            for j in i + 1..sels.len() {
                if sels[i].0.intersection(sels[j].0).copied().collect::<BTreeSet<_>>() == goal {
                    out.push(prog(vec![sels[i].1.clone(), sels[j].1.clone()]));
                }
            }
        }
    }
    Ok(out)
}
