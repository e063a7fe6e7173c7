//! Ranked path enumeration, attribute materialization and the predicate
//! search with output constraints.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::time::Instant;

use super::graph::{build_predicates_graph, refine_path, GraphPath, PredicatesGraph};
use super::{ExtractConfig, ExtractExample, UnseenPage};
use crate::dom::{Axis, DomTree};
use crate::extract_dsl::{eval_program, AttrPred, CountPred, ExtractProgram, NodePred, Path, PathNode, PosPred, Pred};
use crate::url_dsl::{AtomicExpr, InputRow, Predicate};
use crate::url_synth::{search_best_prog as url_search, Dag, Timings, UnseenInput, UrlExample};

/// Distinct values of attribute `name` on nodes tagged `tag`.
fn page_values(tree: &DomTree, tag: &str, name: &str) -> Vec<String> {
    let set: BTreeSet<&str> =
        tree.nodes.iter().filter(|n| n.tag == tag).filter_map(|n| n.attr(name)).filter(|v| !v.is_empty()).collect();
    set.into_iter().map(str::to_string).collect()
}

/// Best expression of an attribute DAG, trying each layer in turn.
///
/// `rows` are the rows folded into `dag`, in order. `pages` supplies the
/// attribute values seen on each example page and `unseen` those on pages
/// without a known target.
pub fn materialize_attr(
    dag: &Dag,
    rows: &[&InputRow],
    pages: &[Vec<String>],
    unseen: &[(&InputRow, Vec<String>)],
    cfg: &ExtractConfig,
) -> Option<Predicate> {
    if rows.len() != dag.outputs.len() {
        return None;
    }
    let examples: Vec<UrlExample> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| UrlExample {
            row: (*r).clone(),
            url: dag.outputs[i].iter().collect(),
            candidates: pages.get(i).cloned().unwrap_or_default(),
        })
        .collect();
    if dag.edges.values().all(|e| e.exprs.is_empty() && !e.any) {
        return constant_attr(dag, &examples, unseen, cfg);
    }
    let unseen: Vec<UnseenInput> =
        unseen.iter().map(|(r, c)| UnseenInput { row: (*r).clone(), candidates: c.clone() }).collect();
    for i in 0..cfg.url.layers.len() {
        let layer = cfg.attr_layer(i);
        let d = dag.restrict(&layer);
        if !d.has_path() {
            continue;
        }
        if let Some(p) = url_search(&d, &examples, &unseen, &cfg.url.search) {
            return Some(p.pred);
        }
    }
    None
}

/// A DAG without input-derived atoms or gaps denotes a single string, so
/// the layered search reduces to checking that constant directly.
fn constant_attr(
    dag: &Dag,
    examples: &[UrlExample],
    unseen: &[(&InputRow, Vec<String>)],
    cfg: &ExtractConfig,
) -> Option<Predicate> {
    let value = &examples.first()?.url;
    if examples.iter().any(|e| e.url != *value) || value.is_empty() {
        return None;
    }
    if !(0..cfg.url.layers.len()).any(|i| dag.restrict(&cfg.attr_layer(i)).has_path()) {
        return None;
    }
    if cfg.url.search.oc_ranking && unseen.iter().any(|(_, c)| !c.is_empty() && !c.contains(value)) {
        return None;
    }
    if examples.iter().any(|e| !e.candidates.is_empty() && !e.candidates.contains(value)) {
        return None;
    }
    Some(Predicate::new(vec![AtomicExpr::ConstStr(value.clone())]))
}

/// Number of input-derived atoms in the context-free best expression.
fn attr_score(dag: &Dag, row: &InputRow, cfg: &ExtractConfig) -> usize {
    if dag.edges.values().all(|e| e.exprs.is_empty()) {
        return 0;
    }
    materialize_attr(dag, &[row], &[], &[], cfg).map_or(0, |p| p.input_derived_atoms())
}

fn side(g: &PredicatesGraph, a: usize) -> u8 {
    g.hops_to(a)
        .iter()
        .find_map(|h| match h.axis {
            Axis::Left => Some(0),
            Axis::Right => Some(2),
            _ => None,
        })
        .unwrap_or(1)
}

/// Path endpoints in rank order: input-derived attribute values first,
/// then left before right, then shorter, then by canonical text.
pub fn enumerate_paths(g: &PredicatesGraph, row: &InputRow, cfg: &ExtractConfig) -> Vec<usize> {
    let mut keyed: Vec<_> = g
        .endpoints()
        .map(|a| {
            let score = g.anchors[a].attrs.iter().map(|(_, d)| attr_score(d, row, cfg)).max().unwrap_or(0);
            let dist: usize = g.hops_to(a).iter().map(|h| h.dist).sum();
            (Reverse(score), side(g, a), dist, g.path_to_string(a), a)
        })
        .collect();
    keyed.sort();
    keyed.into_iter().map(|k| k.4).collect()
}

impl PredicatesGraph {
    fn path_to_string(&self, a: usize) -> String {
        self.path_to(a).to_string()
    }
}

/// A graph path whose attribute DAGs have been replaced by expressions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaterialPath {
    pub steps: Vec<MaterialStep>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaterialStep {
    pub name: String,
    pub axis: Option<Axis>,
    pub pos: PosPred,
    /// Attribute predicates with their input-derived atom counts.
    pub attrs: Vec<(AttrPred, usize)>,
    pub counts: Vec<CountPred>,
}

impl MaterialPath {
    pub fn is_target(&self) -> bool {
        self.steps.len() == 1 && self.steps[0].axis.is_none()
    }

    /// Predicates keeping the node predicates chosen by `keep(step, pred)`.
    /// With `relax_child`, positions on child steps are dropped.
    pub fn preds(&self, keep: &dyn Fn(usize, &NodePred) -> bool, relax_child: bool) -> Vec<Pred> {
        let chosen = |i: usize, s: &MaterialStep| -> Vec<NodePred> {
            s.attrs
                .iter()
                .map(|(a, _)| NodePred::Attr(a.clone()))
                .chain(s.counts.iter().map(|c| NodePred::Count(*c)))
                .filter(|p| keep(i, p))
                .collect()
        };
        if self.is_target() {
            return chosen(0, &self.steps[0]).into_iter().map(Pred::Node).collect();
        }
        let nodes = self
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let axis = s.axis.expect("non-target steps have axes");
                PathNode {
                    name: s.name.clone(),
                    axis,
                    pos: if relax_child && axis == Axis::Child { PosPred::Any } else { s.pos },
                    preds: chosen(i, s),
                }
            })
            .collect();
        vec![Pred::Path(Path { nodes })]
    }

    pub fn maximal(&self) -> Vec<Pred> {
        self.preds(&|_, _| true, false)
    }

    /// Candidate predicate sets, most preferred first.
    pub fn candidates(&self) -> Vec<Vec<Pred>> {
        let last = self.steps.len() - 1;
        let end = &self.steps[last];
        let mut attrs: Vec<&(AttrPred, usize)> = end.attrs.iter().collect();
        attrs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.name.cmp(&b.0.name)));
        let mut out = Vec::new();
        for (a, _) in attrs {
            out.push(self.preds(&|i, p| i == last && matches!(p, NodePred::Attr(x) if x == a), true));
        }
        if !self.is_target() {
            out.push(self.preds(&|_, _| false, true));
        }
        for c in &end.counts {
            out.push(self.preds(&|i, p| i == last && *p == NodePred::Count(*c), true));
        }
        out.push(self.maximal());
        out.retain(|c| !c.is_empty());
        out
    }
}

/// Materialized attributes keyed by step tag, attribute name and DAG.
/// The bucket key holds the outputs; DAGs are compared in full inside it.
#[derive(Default)]
struct AttrCache {
    buckets: HashMap<(String, String, Vec<Vec<char>>), Vec<(Dag, Option<Predicate>)>>,
}

/// Replaces each attribute DAG of `p` by its best expression over all
/// examples; attributes without one are left out.
pub fn materialize_path(
    p: &GraphPath,
    examples: &[ExtractExample],
    unseen: &[UnseenPage],
    cfg: &ExtractConfig,
) -> MaterialPath {
    materialize_cached(p, examples, unseen, cfg, &mut AttrCache::default())
}

fn materialize_cached(
    p: &GraphPath,
    examples: &[ExtractExample],
    unseen: &[UnseenPage],
    cfg: &ExtractConfig,
    cache: &mut AttrCache,
) -> MaterialPath {
    let rows: Vec<&InputRow> = examples.iter().map(|e| &e.row).collect();
    let steps = p
        .steps
        .iter()
        .map(|s| {
            let mut attrs = Vec::new();
            for (name, dag) in &s.attrs {
                let bucket = cache.buckets.entry((s.name.clone(), name.clone(), dag.outputs.clone())).or_default();
                let v = match bucket.iter().find(|(d, _)| d == dag) {
                    Some((_, v)) => v.clone(),
                    None => {
                        let pages: Vec<Vec<String>> =
                            examples.iter().map(|e| page_values(&e.tree, &s.name, name)).collect();
                        let un: Vec<(&InputRow, Vec<String>)> =
                            unseen.iter().map(|u| (&u.row, page_values(&u.tree, &s.name, name))).collect();
                        let v = materialize_attr(dag, &rows, &pages, &un, cfg);
                        bucket.push((dag.clone(), v.clone()));
                        v
                    }
                };
                if let Some(v) = v {
                    let score = v.input_derived_atoms();
                    attrs.push((AttrPred { name: name.clone(), value: v }, score));
                }
            }
            MaterialStep { name: s.name.clone(), axis: s.axis, pos: s.pos, attrs, counts: s.counts.clone() }
        })
        .collect();
    MaterialPath { steps }
}

/// `p` with each attribute fixed to its value on example `i`.
fn literal_path(p: &GraphPath, i: usize) -> MaterialPath {
    let steps = p
        .steps
        .iter()
        .map(|s| MaterialStep {
            name: s.name.clone(),
            axis: s.axis,
            pos: s.pos,
            attrs: s
                .attrs
                .iter()
                .filter_map(|(name, d)| {
                    let v: String = d.outputs.get(i)?.iter().collect();
                    let value = Predicate::new(vec![AtomicExpr::ConstStr(v)]);
                    Some((AttrPred { name: name.clone(), value }, 0))
                })
                .collect(),
            counts: s.counts.clone(),
        })
        .collect();
    MaterialPath { steps }
}

/// Folds `p` through the graphs of the remaining examples.
fn refine_all(p: GraphPath, graphs: &[PredicatesGraph], cap: usize) -> Vec<GraphPath> {
    let mut cur = vec![p];
    for g in graphs {
        let mut next = Vec::new();
        for q in &cur {
            for r in refine_path(q, g, cap) {
                if next.len() < cap {
                    next.push(r);
                }
            }
        }
        cur = next;
        if cur.is_empty() {
            break;
        }
    }
    cur
}

/// Best predicate set for the examples' targets, or `None` when no set
/// reachable from the graph identifies every target alone.
pub fn search_best_prog(
    g: &PredicatesGraph,
    examples: &[ExtractExample],
    unseen: &[UnseenPage],
    cfg: &ExtractConfig,
    t: &mut Timings,
) -> Option<ExtractProgram> {
    let first = examples.first()?;
    let tag = first.tree.node(first.target).tag.clone();
    if examples.iter().any(|e| e.tree.node(e.target).tag != tag) {
        return None;
    }
    let t0 = Instant::now();
    let graphs: Vec<PredicatesGraph> = examples[1..]
        .iter()
        .map(|e| build_predicates_graph(e, cfg.radius, &cfg.attr_dag_layer(), &cfg.url.gen))
        .collect();
    t.pred += t0.elapsed();

    let mut prog = ExtractProgram { name: tag, preds: Vec::new() };
    let mut results: Vec<BTreeSet<usize>> = examples.iter().map(|e| eval_program(&prog, &e.row, &e.tree)).collect();
    let done = |r: &[BTreeSet<usize>]| r.iter().zip(examples).all(|(s, e)| s.len() == 1 && s.contains(&e.target));
    if done(&results) {
        return Some(prog);
    }
    let mut tried: HashSet<Vec<Pred>> = HashSet::new();
    let mut cache = AttrCache::default();
    let s0 = Instant::now();
    let order = enumerate_paths(g, &first.row, cfg);
    let mut intersect_time = std::time::Duration::ZERO;
    for a in order {
        let i0 = Instant::now();
        let refined = refine_all(g.path_to(a), &graphs, cfg.max_refined);
        intersect_time += i0.elapsed();
        for rp in refined {
            // Candidates only relax the maximal predicate, and every attribute
            // expression equals the literal value on its own example.
            let can_shrink = examples.iter().zip(&results).enumerate().any(|(i, (e, r))| {
                let mut trial = prog.clone();
                trial.preds.extend(literal_path(&rp, i).maximal());
                eval_program(&trial, &e.row, &e.tree).len() < r.len()
            });
            if !can_shrink {
                continue;
            }
            let mp = materialize_cached(&rp, examples, unseen, cfg, &mut cache);
            for cand in mp.candidates() {
                if !tried.insert(cand.clone()) {
                    continue;
                }
                let mut trial = prog.clone();
                trial.preds.extend(cand);
                let next: Vec<BTreeSet<usize>> =
                    examples.iter().map(|e| eval_program(&trial, &e.row, &e.tree)).collect();
                let sound = next.iter().zip(examples).all(|(s, e)| s.contains(&e.target));
                let shrinks = next.iter().zip(&results).any(|(n, r)| n.len() < r.len());
                if !sound || !shrinks {
                    continue;
                }
                if !unseen.iter().all(|u| !eval_program(&trial, &u.row, &u.tree).is_empty()) {
                    continue;
                }
                prog = trial;
                results = next;
                if done(&results) {
                    t.intersect += intersect_time;
                    t.search += s0.elapsed() - intersect_time;
                    return Some(prog);
                }
            }
        }
    }
    t.intersect += intersect_time;
    t.search += s0.elapsed() - intersect_time;
    None
}
