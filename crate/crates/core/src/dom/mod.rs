//! Page snapshots as immutable trees with dense, document-ordered node ids.
//!
//! Text is reified as a child node tagged `text` with a single `text`
//! attribute, so extraction paths can address it like any other element.

mod html;
mod json;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use html::parse_html_min;
pub use json::{parse_dom_json, to_dom_json};

/// Index of a node inside its [`DomTree`].
pub type NodeId = usize;

/// Tag used for text nodes.
pub const TEXT_TAG: &str = "text";

/// Attribute holding the content of a text node.
pub const TEXT_ATTR: &str = "text";

/// Attribute values longer than this are kept but flagged oversize.
pub const OVERSIZE_ATTR_LEN: usize = 200;

/// Navigation direction, shared by the DOM and the extraction language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    Child,
    Ancestor,
    Left,
    Right,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::Child, Axis::Ancestor, Axis::Left, Axis::Right];

    pub fn inverse(self) -> Axis {
        match self {
            Axis::Child => Axis::Ancestor,
            Axis::Ancestor => Axis::Child,
            Axis::Left => Axis::Right,
            Axis::Right => Axis::Left,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::Child => "Child",
            Axis::Ancestor => "Ancestor",
            Axis::Left => "Left",
            Axis::Right => "Right",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomNode {
    pub id: NodeId,
    pub tag: String,
    /// Attributes in source order.
    pub attrs: Vec<(String, String)>,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

impl DomNode {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    pub fn is_text(&self) -> bool {
        self.tag == TEXT_TAG
    }

    /// True when the named attribute exists and exceeds [`OVERSIZE_ATTR_LEN`] chars.
    pub fn attr_oversize(&self, name: &str) -> bool {
        self.attr(name).is_some_and(|v| v.chars().count() > OVERSIZE_ATTR_LEN)
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DomError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("node {path}: {msg}")]
    Node { path: String, msg: String },
    #[error("{line}:{col}: {msg}")]
    Html { line: usize, col: usize, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomTree {
    pub nodes: Vec<DomNode>,
    pub root: NodeId,
}

/// Builder used by both parsers; assigns ids in pre-order.
#[derive(Default)]
pub(crate) struct TreeBuilder {
    nodes: Vec<DomNode>,
}

impl TreeBuilder {
    pub(crate) fn push(&mut self, tag: String, attrs: Vec<(String, String)>, parent: Option<NodeId>) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(DomNode { id, tag, attrs, parent, children: Vec::new() });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        id
    }

    pub(crate) fn finish(self) -> DomTree {
        DomTree { nodes: self.nodes, root: 0 }
    }
}

impl DomTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &DomNode {
        &self.nodes[id]
    }

    /// All node ids in document order.
    pub fn all_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        0..self.nodes.len()
    }

    /// Neighbours of `node` along `axis`; the k-th entry is at distance k.
    pub fn neighbors(&self, node: NodeId, axis: Axis) -> Vec<NodeId> {
        let n = &self.nodes[node];
        match axis {
            Axis::Child => n.children.clone(),
            Axis::Ancestor => {
                let mut out = Vec::new();
                let mut cur = n.parent;
                while let Some(p) = cur {
                    out.push(p);
                    cur = self.nodes[p].parent;
                }
                out
            }
            Axis::Left | Axis::Right => {
                let Some(p) = n.parent else { return Vec::new() };
                let sibs = &self.nodes[p].children;
                let at = sibs.iter().position(|&c| c == node).expect("child listed in parent");
                if axis == Axis::Left {
                    sibs[..at].iter().rev().copied().collect()
                } else {
                    sibs[at + 1..].to_vec()
                }
            }
        }
    }

    /// Number of neighbours along `axis` without materializing them.
    pub fn neighbor_count(&self, node: NodeId, axis: Axis) -> usize {
        let n = &self.nodes[node];
        match axis {
            Axis::Child => n.children.len(),
            Axis::Ancestor => {
                let mut k = 0;
                let mut cur = n.parent;
                while let Some(p) = cur {
                    k += 1;
                    cur = self.nodes[p].parent;
                }
                k
            }
            Axis::Left | Axis::Right => self.neighbors(node, axis).len(),
        }
    }

    /// The neighbour at 1-based distance `dist` along `axis`.
    pub fn neighbor_at(&self, node: NodeId, axis: Axis, dist: usize) -> Option<NodeId> {
        if dist == 0 {
            return None;
        }
        self.neighbors(node, axis).get(dist - 1).copied()
    }

    /// Concatenated text of all text descendants, joined by single spaces.
    pub fn text_content(&self, node: NodeId) -> String {
        let mut parts = Vec::new();
        self.collect_text(node, &mut parts);
        parts.join(" ")
    }

    fn collect_text<'a>(&'a self, node: NodeId, out: &mut Vec<&'a str>) {
        let n = &self.nodes[node];
        if n.is_text() {
            if let Some(t) = n.attr(TEXT_ATTR) {
                out.push(t);
            }
            return;
        }
        for &c in &n.children {
            self.collect_text(c, out);
        }
    }

    /// Checks every structural invariant; used by tests and after parsing.
    pub fn validate(&self) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("empty tree".into());
        }
        if self.nodes[self.root].parent.is_some() {
            return Err("root has a parent".into());
        }
        let mut roots = 0;
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(format!("node {i} carries id {}", n.id));
            }
            match n.parent {
                None => roots += 1,
                Some(p) => {
                    let Some(pn) = self.nodes.get(p) else {
                        return Err(format!("node {i} has dangling parent {p}"));
                    };
                    if pn.children.iter().filter(|&&c| c == i).count() != 1 {
                        return Err(format!("node {i} not listed exactly once under {p}"));
                    }
                }
            }
            if n.is_text() && !n.children.is_empty() {
                return Err(format!("text node {i} has children"));
            }
            for &c in &n.children {
                match self.nodes.get(c) {
                    Some(cn) if cn.parent == Some(i) => {}
                    _ => return Err(format!("node {i} lists bad child {c}")),
                }
            }
            if n.children.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("children of {i} out of document order"));
            }
        }
        if roots != 1 {
            return Err(format!("{roots} parentless nodes"));
        }
        Ok(())
    }

    /// Tag counts, handy for diagnostics.
    pub fn tag_histogram(&self) -> BTreeMap<&str, usize> {
        let mut m = BTreeMap::new();
        for n in &self.nodes {
            *m.entry(n.tag.as_str()).or_insert(0) += 1;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_kids() -> DomTree {
        let mut b = TreeBuilder::default();
        let r = b.push("ul".into(), vec![], None);
        for _ in 0..3 {
            b.push("li".into(), vec![], Some(r));
        }
        b.finish()
    }

    #[test]
    fn root_has_no_ancestors() {
        let t = three_kids();
        assert!(t.neighbors(t.root, Axis::Ancestor).is_empty());
        assert!(t.neighbors(t.root, Axis::Left).is_empty());
    }

    #[test]
    fn middle_sibling_left_is_nearest() {
        let t = three_kids();
        assert_eq!(t.neighbors(2, Axis::Left), vec![1]);
        assert_eq!(t.neighbors(2, Axis::Right), vec![3]);
        assert_eq!(t.neighbors(3, Axis::Left), vec![2, 1]);
        assert_eq!(t.neighbor_at(3, Axis::Left, 2), Some(1));
        assert_eq!(t.neighbor_count(1, Axis::Right), 2);
    }

    #[test]
    fn oversize_flag() {
        let n = DomNode {
            id: 0,
            tag: "a".into(),
            attrs: vec![("href".into(), "x".repeat(201)), ("id".into(), "y".repeat(200))],
            parent: None,
            children: vec![],
        };
        assert!(n.attr_oversize("href"));
        assert!(!n.attr_oversize("id"));
        assert!(!n.attr_oversize("missing"));
    }
}
