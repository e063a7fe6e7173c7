//! Extraction language: programs select DOM nodes by tag and by attribute,
//! count and path predicates. Attribute values are string expressions over
//! the input row.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dom::{Axis, DomTree, NodeId};
use crate::url_dsl::{eval_predicate, pattern_matches, InputRow, Predicate};

/// `[attr(name) == value]`; a gap in `value` matches anchored, like a URL filter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AttrPred {
    pub name: String,
    pub value: Predicate,
}

/// `[count(axis) == k]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CountPred {
    pub axis: Axis,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodePred {
    Attr(AttrPred),
    Count(CountPred),
}

/// Distance filter on a path step; distances are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PosPred {
    Eq(usize),
    Leq(usize),
    Any,
}

impl PosPred {
    pub fn admits(self, dist: usize) -> bool {
        match self {
            PosPred::Eq(k) => dist == k,
            PosPred::Leq(k) => dist >= 1 && dist <= k,
            PosPred::Any => dist >= 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PathNode {
    pub name: String,
    pub axis: Axis,
    pub pos: PosPred,
    pub preds: Vec<NodePred>,
}

/// Steps start with a child, a sibling, or an ancestor followed by a
/// sibling; every later step goes to a child.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<PathNode>,
}

impl Path {
    pub fn is_valid(&self) -> bool {
        let axes: Vec<Axis> = self.nodes.iter().map(|n| n.axis).collect();
        let rest = match axes.as_slice() {
            [] => return false,
            [Axis::Ancestor, Axis::Left | Axis::Right, rest @ ..] => rest,
            [Axis::Ancestor, ..] => return false,
            [_, rest @ ..] => rest,
        };
        rest.iter().all(|&a| a == Axis::Child)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pred {
    Node(NodePred),
    Path(Path),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExtractProgram {
    pub name: String,
    pub preds: Vec<Pred>,
}

pub fn eval_node_pred(pred: &NodePred, row: &InputRow, tree: &DomTree, node: NodeId) -> bool {
    match pred {
        NodePred::Attr(a) => {
            let Some(v) = tree.node(node).attr(&a.name) else { return false };
            match eval_predicate(&a.value, row) {
                Some(pat) => pattern_matches(&pat, v),
                None => false,
            }
        }
        NodePred::Count(c) => tree.neighbor_count(node, c.axis) == c.k,
    }
}

fn check(step: &PathNode, row: &InputRow, tree: &DomTree, node: NodeId) -> bool {
    tree.node(node).tag == step.name && step.preds.iter().all(|p| eval_node_pred(p, row, tree, node))
}

pub fn eval_path(path: &Path, row: &InputRow, tree: &DomTree, start: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
    let mut cur = start.clone();
    for step in &path.nodes {
        let mut next = BTreeSet::new();
        for &n in &cur {
            let nb = tree.neighbors(n, step.axis);
            for (i, &m) in nb.iter().enumerate() {
                if step.pos.admits(i + 1) && check(step, row, tree, m) {
                    next.insert(m);
                }
            }
        }
        if next.is_empty() {
            return next;
        }
        cur = next;
    }
    cur
}

pub fn eval_pred(pred: &Pred, row: &InputRow, tree: &DomTree, node: NodeId) -> bool {
    match pred {
        Pred::Node(p) => eval_node_pred(p, row, tree, node),
        Pred::Path(p) => !eval_path(p, row, tree, &BTreeSet::from([node])).is_empty(),
    }
}

/// Selected nodes; ids follow document order.
pub fn eval_program(prog: &ExtractProgram, row: &InputRow, tree: &DomTree) -> BTreeSet<NodeId> {
    tree.all_nodes()
        .filter(|&n| tree.node(n).tag == prog.name && prog.preds.iter().all(|p| eval_pred(p, row, tree, n)))
        .collect()
}

impl fmt::Display for NodePred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodePred::Attr(a) => write!(f, "attr({:?})=={}", a.name, a.value),
            NodePred::Count(c) => write!(f, "count({})=={}", c.axis, c.k),
        }
    }
}

impl fmt::Display for PosPred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PosPred::Eq(k) => write!(f, "pos=={k}"),
            PosPred::Leq(k) => write!(f, "pos<={k}"),
            PosPred::Any => f.write_str("_"),
        }
    }
}

impl fmt::Display for PathNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if self.pos != PosPred::Any {
            parts.push(self.pos.to_string());
        }
        parts.extend(self.preds.iter().map(|p| p.to_string()));
        write!(f, "({},{},[{}])", self.name, self.axis, parts.join(", "))
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.nodes.iter().map(|n| n.to_string()).collect();
        f.write_str(&s.join("/"))
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pred::Node(p) => write!(f, "[{p}]"),
            Pred::Path(p) => write!(f, "{p}"),
        }
    }
}

impl fmt::Display for ExtractProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.preds.iter().map(|p| p.to_string()).collect();
        write!(f, "({}, [{}])", self.name, s.join(", "))
    }
}
