//! Ranked best-program search with output constraints.

use std::cmp::{Ordering, Reverse};

use super::dag::{Dag, EdgeSet};
use super::{UnseenInput, UrlExample};
use crate::url_dsl::{
    eval_atomic, eval_predicate, pattern_matches, AtomicExpr, CaseMode, Ends, Position, Predicate, UrlProgram,
};

/// Tie-break cost of an atom: whole-cell bounds are cheapest, then token
/// positions by |k|, then other constant offsets.
pub fn atom_cost(f: &AtomicExpr) -> i64 {
    fn pos(p: &Position) -> i64 {
        match p {
            Position::ConstPos(0) | Position::ConstPos(-1) => 0,
            Position::TokenPos { k, .. } => k.unsigned_abs() as i64,
            Position::ConstPos(_) => 5,
        }
    }
    fn case(c: CaseMode) -> i64 {
        match c {
            CaseMode::Iden => 0,
            CaseMode::Lower | CaseMode::Upper => 1,
            CaseMode::Prop => 2,
        }
    }
    match f {
        AtomicExpr::SubStr { pl, pr, case: c, .. } | AtomicExpr::Replace { pl, pr, case: c, .. } => {
            pos(pl) + pos(pr) + case(*c)
        }
        _ => 0,
    }
}

/// Total order on programs: higher rank sum, then fewer atoms, fewer
/// Replace atoms, lower cost, and finally canonical text.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RankKey {
    score: Reverse<i64>,
    atoms: usize,
    replaces: usize,
    cost: i64,
    canon: String,
}

impl RankKey {
    pub fn of(atoms: &[AtomicExpr]) -> RankKey {
        let mut k = RankKey { score: Reverse(0), atoms: 0, replaces: 0, cost: 0, canon: String::new() };
        for a in atoms {
            k = k.plus(a);
        }
        k
    }

    fn plus(&self, f: &AtomicExpr) -> RankKey {
        let mut canon = self.canon.clone();
        if !canon.is_empty() {
            canon.push_str(", ");
        }
        canon.push_str(&f.to_string());
        RankKey {
            score: Reverse(self.score.0 + f.rank()),
            atoms: self.atoms + 1,
            replaces: self.replaces + matches!(f, AtomicExpr::Replace { .. }) as usize,
            cost: self.cost + atom_cost(f),
            canon,
        }
    }
}

fn atom_order(a: &AtomicExpr, b: &AtomicExpr) -> Ordering {
    (Reverse(a.rank()), matches!(a, AtomicExpr::Replace { .. }), atom_cost(a))
        .cmp(&(Reverse(b.rank()), matches!(b, AtomicExpr::Replace { .. }), atom_cost(b)))
        .then_with(|| a.to_string().cmp(&b.to_string()))
}

/// Search knobs.
#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub kappa: usize,
    /// Output-constrained ranking: generalization and uniqueness checks.
    pub oc_ranking: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { kappa: 10, oc_ranking: true }
    }
}

#[derive(Clone)]
struct Prefix {
    atoms: Vec<AtomicExpr>,
    key: RankKey,
    has_any: bool,
    ex: Vec<Ends>,
    /// Per unseen input with candidates, per candidate.
    un: Vec<Vec<Ends>>,
}

struct Ctx<'a> {
    examples: &'a [UrlExample],
    urls: Vec<Vec<char>>,
    unseen: Vec<(&'a UnseenInput, Vec<Vec<char>>)>,
    cfg: &'a SearchConfig,
}

impl<'a> Ctx<'a> {
    fn new(examples: &'a [UrlExample], unseen: &'a [UnseenInput], cfg: &'a SearchConfig) -> Self {
        let unseen = if cfg.oc_ranking {
            unseen
                .iter()
                .filter(|u| !u.candidates.is_empty())
                .map(|u| (u, u.candidates.iter().map(|c| c.chars().collect()).collect()))
                .collect()
        } else {
            Vec::new()
        };
        Ctx { examples, urls: examples.iter().map(|e| e.url.chars().collect()).collect(), unseen, cfg }
    }

    fn root(&self) -> Prefix {
        Prefix {
            atoms: Vec::new(),
            key: RankKey::of(&[]),
            has_any: false,
            ex: self.urls.iter().map(|u| Ends::start(u.len())).collect(),
            un: self.unseen.iter().map(|(_, cs)| cs.iter().map(|c| Ends::start(c.len())).collect()).collect(),
        }
    }

    /// Consistent + Generalizes for `p + f`; uniqueness when `last`.
    fn extend(&self, p: &Prefix, f: &AtomicExpr, last: bool) -> Option<Prefix> {
        let mut ex = Vec::with_capacity(p.ex.len());
        for ((e, ends), url) in self.examples.iter().zip(&p.ex).zip(&self.urls) {
            let v = eval_atomic(f, &e.row)?;
            let next = ends.step(&v, url);
            let ok = if last { next.get(url.len()) } else { next.any_before(url.len()) };
            if !ok {
                return None;
            }
            ex.push(next);
        }
        let mut un = Vec::with_capacity(p.un.len());
        for ((u, cands), ends) in self.unseen.iter().zip(&p.un) {
            let v = eval_atomic(f, &u.row)?;
            let next: Vec<Ends> = ends.iter().zip(cands).map(|(e, c)| e.step(&v, c)).collect();
            let ok = next.iter().zip(cands).any(|(e, c)| if last { e.get(c.len()) } else { !e.is_empty() });
            if !ok {
                return None;
            }
            un.push(next);
        }
        let mut atoms = p.atoms.clone();
        atoms.push(f.clone());
        let q = Prefix { key: p.key.plus(f), has_any: p.has_any || *f == AtomicExpr::AnyStr, atoms, ex, un };
        if last && !self.unique(&q) {
            return None;
        }
        Some(q)
    }

    fn unique(&self, q: &Prefix) -> bool {
        let phi = Predicate { atoms: q.atoms.clone() };
        self.examples.iter().all(|e| {
            if e.candidates.is_empty() {
                return !q.has_any;
            }
            let Some(pat) = eval_predicate(&phi, &e.row) else { return false };
            if self.cfg.oc_ranking {
                e.candidates.contains(&e.url) && e.candidates.iter().all(|c| *c == e.url || !pattern_matches(&pat, c))
            } else {
                e.candidates.iter().find(|c| pattern_matches(&pat, c)) == Some(&e.url)
            }
        })
    }
}

fn insert(list: &mut Vec<Prefix>, q: Prefix, kappa: usize) {
    if list.iter().any(|p| p.atoms == q.atoms) {
        return;
    }
    let at = list.partition_point(|p| p.key < q.key);
    if at >= kappa {
        return;
    }
    list.insert(at, q);
    list.truncate(kappa);
}

/// Ranked atoms of one edge; implied Replace atoms are built on demand.
struct EdgeAtoms<'d> {
    dag: &'d Dag,
    es: &'d EdgeSet,
    k: usize,
    l: usize,
    substr: Vec<AtomicExpr>,
    tail: Option<Vec<AtomicExpr>>,
}

impl<'d> EdgeAtoms<'d> {
    fn new(dag: &'d Dag, k: usize, l: usize, es: &'d EdgeSet) -> Self {
        let mut substr: Vec<AtomicExpr> =
            es.exprs.iter().filter(|e| matches!(e, AtomicExpr::SubStr { .. })).cloned().collect();
        substr.sort_by(atom_order);
        EdgeAtoms { dag, es, k, l, substr, tail: None }
    }

    fn tail(&mut self) -> &[AtomicExpr] {
        if self.tail.is_none() {
            let mut reps: Vec<AtomicExpr> =
                self.es.exprs.iter().filter(|e| matches!(e, AtomicExpr::Replace { .. })).cloned().collect();
            reps.extend(self.dag.implicit_replaces(self.es));
            let mut keyed: Vec<(String, AtomicExpr)> = reps.into_iter().map(|r| (r.to_string(), r)).collect();
            keyed.sort_by(|a, b| atom_cost(&a.1).cmp(&atom_cost(&b.1)).then_with(|| a.0.cmp(&b.0)));
            let mut t: Vec<AtomicExpr> = keyed.into_iter().map(|(_, r)| r).collect();
            if self.es.konst {
                t.push(AtomicExpr::ConstStr(self.dag.const_str(self.k, self.l)));
            }
            if self.es.any {
                t.push(AtomicExpr::AnyStr);
            }
            self.tail = Some(t);
        }
        self.tail.as_deref().unwrap()
    }
}

/// Best program of `dag` under the rank order, subject to consistency on
/// `examples`, generalization on `unseen`, and uniqueness at the target.
pub fn search_best_prog(
    dag: &Dag,
    examples: &[UrlExample],
    unseen: &[UnseenInput],
    cfg: &SearchConfig,
) -> Option<UrlProgram> {
    if dag.n < 2 || examples.is_empty() {
        return None;
    }
    let ctx = Ctx::new(examples, unseen, cfg);
    let target = dag.target();
    let kappa = cfg.kappa.max(1);
    let mut prefixes: Vec<Vec<Prefix>> = vec![Vec::new(); dag.n];
    prefixes[0].push(ctx.root());
    let out = dag.out_edges();
    for v in 0..dag.n {
        if prefixes[v].is_empty() {
            continue;
        }
        let here = std::mem::take(&mut prefixes[v]);
        // A gap extends a prefix the same way whatever the edge's end.
        let mut gap_ext: Vec<Option<Option<Prefix>>> = vec![None; here.len()];
        for &(l, es) in &out[v] {
            let last = l == target;
            if !last && es.any && !es.konst && es.exprs.is_empty() {
                for (i, p) in here.iter().enumerate() {
                    let q = gap_ext[i].get_or_insert_with(|| ctx.extend(p, &AtomicExpr::AnyStr, false));
                    if let Some(q) = q {
                        insert(&mut prefixes[l], q.clone(), kappa);
                    }
                    if !p.has_any {
                        break;
                    }
                }
                continue;
            }
            let mut atoms = EdgeAtoms::new(dag, v, l, es);
            for p in &here {
                let mut found = None;
                for f in atoms.substr.iter() {
                    if let Some(q) = ctx.extend(p, f, last) {
                        found = Some(q);
                        break;
                    }
                }
                if let Some(q) = found {
                    insert(&mut prefixes[l], q, kappa);
                } else {
                    for f in atoms.tail().to_vec() {
                        if let Some(q) = ctx.extend(p, &f, last) {
                            insert(&mut prefixes[l], q, kappa);
                            if f != AtomicExpr::AnyStr {
                                break;
                            }
                        }
                    }
                }
                if !p.has_any {
                    break;
                }
            }
        }
        prefixes[v] = here;
    }
    let best = prefixes[target].first()?;
    Some(UrlProgram { pred: Predicate { atoms: best.atoms.clone() }.merged_constants() })
}

/// Evaluates `prog` like the harness does: filter when candidates exist,
/// otherwise the literal of a gap-free pattern.
pub fn apply_url(prog: &UrlProgram, row: &crate::url_dsl::InputRow, candidates: &[String]) -> Option<String> {
    if candidates.is_empty() {
        return eval_predicate(&prog.pred, row)?.literal();
    }
    crate::url_dsl::run_filter(prog, row, candidates).map(str::to_string)
}
