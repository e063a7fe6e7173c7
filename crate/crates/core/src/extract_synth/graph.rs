//! Predicates graphs, graph paths, and path intersection.

use std::collections::HashMap;
use std::fmt;

use crate::dom::{Axis, DomTree, NodeId};
use crate::extract_dsl::{CountPred, NodePred, Path, PosPred};
use crate::url_dsl::InputRow;
use crate::url_synth::{gen_dag, Dag, GenConfig, LayerConfig};

use super::ExtractExample;

/// A node of the graph with its learned node predicates. Attribute values
/// are kept as DAGs of every expression producing them from the row.
#[derive(Clone, Debug)]
pub struct Anchor {
    pub id: usize,
    pub node: NodeId,
    pub name: String,
    pub attrs: Vec<(String, Dag)>,
    pub counts: Vec<CountPred>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hop {
    pub from: usize,
    pub to: usize,
    pub axis: Axis,
    pub dist: usize,
}

/// Rooted at the target; every anchor is reached by exactly one hop chain.
#[derive(Clone, Debug)]
pub struct PredicatesGraph {
    pub anchors: Vec<Anchor>,
    pub hops: Vec<Hop>,
    pub target: usize,
    pub radius: usize,
    /// Hop index entering each anchor.
    into: Vec<Option<usize>>,
    by_skeleton: HashMap<Vec<(String, Option<Axis>)>, Vec<usize>>,
}

/// Step shape: tag plus axis, `None` for the target itself.
pub type Skeleton = Vec<(String, Option<Axis>)>;

struct Builder<'a> {
    row: &'a InputRow,
    tree: &'a DomTree,
    layer: LayerConfig,
    gen: &'a GenConfig,
    radius: usize,
    g: PredicatesGraph,
}

impl Builder<'_> {
    fn anchor(&mut self, node: NodeId, from: Option<(usize, Axis, usize)>) -> usize {
        let n = self.tree.node(node);
        let mut attrs = Vec::new();
        for (k, v) in &n.attrs {
            if v.is_empty() || n.attr_oversize(k) {
                continue;
            }
            attrs.push((k.clone(), gen_dag(self.row, v, &self.layer, self.gen)));
        }
        let counts =
            Axis::ALL.iter().map(|&axis| CountPred { axis, k: self.tree.neighbor_count(node, axis) }).collect();
        let id = self.g.anchors.len();
        self.g.anchors.push(Anchor { id, node, name: n.tag.clone(), attrs, counts });
        self.g.into.push(None);
        if let Some((f, axis, dist)) = from {
            self.g.into[id] = Some(self.g.hops.len());
            self.g.hops.push(Hop { from: f, to: id, axis, dist });
        }
        id
    }

    fn children(&mut self, a: usize, depth: usize) {
        if depth >= self.radius {
            return;
        }
        let node = self.g.anchors[a].node;
        for (i, c) in self.tree.neighbors(node, Axis::Child).into_iter().enumerate() {
            let id = self.anchor(c, Some((a, Axis::Child, i + 1)));
            self.children(id, depth + 1);
        }
    }

    fn siblings(&mut self, a: usize, depth: usize) {
        if depth >= self.radius {
            return;
        }
        let node = self.g.anchors[a].node;
        for axis in [Axis::Left, Axis::Right] {
            for (i, s) in self.tree.neighbors(node, axis).into_iter().enumerate() {
                let id = self.anchor(s, Some((a, axis, i + 1)));
                self.children(id, depth + 1);
            }
        }
    }

    fn ancestors(&mut self, a: usize) {
        if self.radius == 0 {
            return;
        }
        let node = self.g.anchors[a].node;
        for (i, p) in self.tree.neighbors(node, Axis::Ancestor).into_iter().enumerate() {
            let id = self.anchor(p, Some((a, Axis::Ancestor, i + 1)));
            self.siblings(id, 1);
        }
    }
}

/// Builds the graph of `ex` within `radius` hops of the target.
pub fn build_predicates_graph(
    ex: &ExtractExample,
    radius: usize,
    layer: &LayerConfig,
    gen: &GenConfig,
) -> PredicatesGraph {
    let g =
        PredicatesGraph { anchors: vec![], hops: vec![], target: 0, radius, into: vec![], by_skeleton: HashMap::new() };
    let mut b = Builder { row: &ex.row, tree: &ex.tree, layer: *layer, gen, radius, g };
    let t = b.anchor(ex.target, None);
    b.children(t, 0);
    b.siblings(t, 0);
    b.ancestors(t);
    let mut g = b.g;
    for a in 0..g.anchors.len() {
        if g.is_endpoint(a) {
            let sk = g.skeleton(a);
            g.by_skeleton.entry(sk).or_default().push(a);
        }
    }
    g
}

impl PredicatesGraph {
    /// Hop chain from the target to `a`.
    pub fn hops_to(&self, a: usize) -> Vec<Hop> {
        let mut out = Vec::new();
        let mut cur = a;
        while let Some(h) = self.into[cur] {
            out.push(self.hops[h]);
            cur = self.hops[h].from;
        }
        out.reverse();
        out
    }

    /// Paths may not end on an ancestor.
    pub fn is_endpoint(&self, a: usize) -> bool {
        self.into[a].is_none_or(|h| self.hops[h].axis != Axis::Ancestor)
    }

    pub fn skeleton(&self, a: usize) -> Skeleton {
        if a == self.target {
            return vec![(self.anchors[a].name.clone(), None)];
        }
        self.hops_to(a).iter().map(|h| (self.anchors[h.to].name.clone(), Some(h.axis))).collect()
    }

    /// Endpoints whose path has the given skeleton.
    pub fn with_skeleton(&self, sk: &Skeleton) -> &[usize] {
        self.by_skeleton.get(sk).map_or(&[], |v| v.as_slice())
    }

    /// Every valid path endpoint, target included.
    pub fn endpoints(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.anchors.len()).filter(|&a| self.is_endpoint(a))
    }

    /// The path to `a` with the maximal predicate: exact distances and
    /// every node predicate on every step.
    pub fn path_to(&self, a: usize) -> GraphPath {
        let step = |an: &Anchor, axis, pos| Step {
            name: an.name.clone(),
            axis,
            pos,
            attrs: an.attrs.clone(),
            counts: an.counts.clone(),
        };
        if a == self.target {
            return GraphPath { steps: vec![step(&self.anchors[a], None, PosPred::Any)] };
        }
        GraphPath {
            steps: self
                .hops_to(a)
                .iter()
                .map(|h| step(&self.anchors[h.to], Some(h.axis), PosPred::Eq(h.dist)))
                .collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Step {
    pub name: String,
    pub axis: Option<Axis>,
    pub pos: PosPred,
    pub attrs: Vec<(String, Dag)>,
    pub counts: Vec<CountPred>,
}

/// A path through one or more folded predicates graphs. A single step with
/// no axis stands for the target's own predicates.
#[derive(Clone, Debug)]
pub struct GraphPath {
    pub steps: Vec<Step>,
}

fn pos_intersect(a: PosPred, b: PosPred) -> PosPred {
    let bound = |p| match p {
        PosPred::Eq(k) | PosPred::Leq(k) => Some(k),
        PosPred::Any => None,
    };
    match (a, b) {
        (PosPred::Eq(x), PosPred::Eq(y)) if x == y => a,
        _ => match (bound(a), bound(b)) {
            (Some(x), Some(y)) => PosPred::Leq(x.max(y)),
            _ => PosPred::Any,
        },
    }
}

/// Distances admitted by `inner` all admitted by `outer`.
fn pos_within(inner: PosPred, outer: PosPred) -> bool {
    match (inner, outer) {
        (_, PosPred::Any) => true,
        (PosPred::Any, _) => false,
        (PosPred::Eq(d), PosPred::Eq(k)) => d == k,
        (PosPred::Eq(d) | PosPred::Leq(d), PosPred::Leq(k)) => d <= k,
        (PosPred::Leq(d), PosPred::Eq(k)) => d == 1 && k == 1,
    }
}

impl GraphPath {
    pub fn is_target(&self) -> bool {
        self.steps.len() == 1 && self.steps[0].axis.is_none()
    }

    pub fn skeleton(&self) -> Skeleton {
        self.steps.iter().map(|s| (s.name.clone(), s.axis)).collect()
    }

    /// Outputs folded into the attribute DAGs.
    pub fn examples_folded(&self) -> usize {
        self.steps.iter().flat_map(|s| s.attrs.iter()).map(|(_, d)| d.outputs.len()).next().unwrap_or(1)
    }

    /// Pairwise step intersection; `None` when the skeletons differ.
    pub fn intersect(&self, other: &GraphPath) -> Option<GraphPath> {
        if self.skeleton() != other.skeleton() {
            return None;
        }
        let steps = self
            .steps
            .iter()
            .zip(&other.steps)
            .map(|(p, q)| {
                let mut attrs = Vec::new();
                for (name, d) in &p.attrs {
                    if let Some((_, e)) = q.attrs.iter().find(|(n, _)| n == name) {
                        let i = d.intersect(e);
                        if i.has_path() {
                            attrs.push((name.clone(), i));
                        }
                    }
                }
                let counts = p.counts.iter().filter(|c| q.counts.contains(c)).copied().collect();
                Step { name: p.name.clone(), axis: p.axis, pos: pos_intersect(p.pos, q.pos), attrs, counts }
            })
            .collect();
        Some(GraphPath { steps })
    }

    /// True when `refined` keeps every predicate of `self` unchanged. Only
    /// decidable here for constant attributes; a DAG with input-derived
    /// atoms may lose some of them in the intersection.
    pub fn same_predicates(&self, refined: &GraphPath) -> bool {
        self.steps.iter().zip(&refined.steps).all(|(p, q)| {
            p.pos == q.pos
                && p.counts == q.counts
                && p.attrs.len() == q.attrs.len()
                && p.attrs.iter().zip(&q.attrs).all(|(a, b)| a.0 == b.0)
                && p.attrs.iter().all(|(_, d)| d.edges.values().all(|e| e.exprs.is_empty()))
        })
    }

    /// Whether a concrete path predicate is among those this path encodes.
    pub fn admits_path(&self, path: &Path) -> bool {
        !self.is_target()
            && self.steps.len() == path.nodes.len()
            && self.steps.iter().zip(&path.nodes).all(|(s, n)| {
                s.name == n.name && s.axis == Some(n.axis) && pos_within(s.pos, n.pos) && step_admits(s, &n.preds)
            })
    }

    /// Whether target-level node predicates are among those encoded.
    pub fn admits_node_preds(&self, preds: &[NodePred]) -> bool {
        self.is_target() && step_admits(&self.steps[0], preds)
    }
}

fn step_admits(s: &Step, preds: &[NodePred]) -> bool {
    preds.iter().all(|p| match p {
        NodePred::Count(c) => s.counts.contains(c),
        NodePred::Attr(a) => s.attrs.iter().any(|(n, d)| *n == a.name && d.contains_program(&a.value.atoms)),
    })
}

/// Intersects `p` with every same-skeleton path of `g` that holds at its
/// target. A lossless match is returned alone.
pub fn refine_path(p: &GraphPath, g: &PredicatesGraph, cap: usize) -> Vec<GraphPath> {
    let mut out = Vec::new();
    for &a in g.with_skeleton(&p.skeleton()) {
        let Some(r) = p.intersect(&g.path_to(a)) else { continue };
        if p.same_predicates(&r) {
            return vec![r];
        }
        if out.len() < cap {
            out.push(r);
        }
    }
    out
}

pub fn intersect_path(p: &GraphPath, q: &GraphPath) -> Option<GraphPath> {
    p.intersect(q)
}

impl fmt::Display for GraphPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .steps
            .iter()
            .map(|s| match s.axis {
                None => format!("({},self)", s.name),
                Some(a) => format!("({},{},{})", s.name, a, s.pos),
            })
            .collect();
        f.write_str(&parts.join("/"))
    }
}
