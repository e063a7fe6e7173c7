//! Learning extraction programs from example target nodes, plus string
//! transforms over extracted values.

mod graph;
mod search;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dom::{DomTree, NodeId};
use crate::extract_dsl::{eval_program, ExtractProgram};
use crate::url_dsl::{eval_predicate, InputRow, UrlProgram};
use crate::url_synth::{learn_url, LayerConfig, Timings, UrlConfig, UrlExample};

pub use graph::{
    build_predicates_graph, intersect_path, refine_path, Anchor, GraphPath, Hop, PredicatesGraph, Skeleton, Step,
};
pub use search::{enumerate_paths, materialize_attr, materialize_path, search_best_prog, MaterialPath, MaterialStep};

#[derive(Clone, Debug)]
pub struct ExtractExample {
    pub row: InputRow,
    pub tree: DomTree,
    pub target: NodeId,
}

/// A page for a row whose target is not known.
#[derive(Clone, Debug)]
pub struct UnseenPage {
    pub row: InputRow,
    pub tree: DomTree,
}

#[derive(Clone, Debug)]
pub struct ExtractConfig {
    pub radius: usize,
    /// Allow gaps in attribute expressions.
    pub attr_gaps: bool,
    /// Layers, atom enumeration and ranking used for attribute values.
    pub url: UrlConfig,
    /// Upper bound on refined variants kept per path.
    pub max_refined: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig { radius: 5, attr_gaps: false, url: UrlConfig::default(), max_refined: 64 }
    }
}

impl ExtractConfig {
    pub fn with_radius(mut self, radius: usize) -> Self {
        self.radius = radius;
        self
    }

    /// Layer used to build attribute DAGs.
    pub fn attr_dag_layer(&self) -> LayerConfig {
        if self.attr_gaps {
            LayerConfig::FULL
        } else {
            LayerConfig::FULL.without_gaps()
        }
    }

    pub(crate) fn attr_layer(&self, i: usize) -> LayerConfig {
        let l = self.url.layers[i];
        if self.attr_gaps {
            l
        } else {
            l.without_gaps()
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExtractOutcome {
    pub program: Option<ExtractProgram>,
    pub timings: Timings,
}

pub fn learn_extract_traced(examples: &[ExtractExample], unseen: &[UnseenPage], cfg: &ExtractConfig) -> ExtractOutcome {
    let mut timings = Timings::default();
    let Some(first) = examples.first() else { return ExtractOutcome { program: None, timings } };
    let t0 = Instant::now();
    let g = build_predicates_graph(first, cfg.radius, &cfg.attr_dag_layer(), &cfg.url.gen);
    timings.pred += t0.elapsed();
    let program = search_best_prog(&g, examples, unseen, cfg, &mut timings);
    ExtractOutcome { program, timings }
}

pub fn learn_extract(
    examples: &[ExtractExample],
    unseen: &[UnseenPage],
    cfg: &ExtractConfig,
) -> Option<ExtractProgram> {
    learn_extract_traced(examples, unseen, cfg).program
}

/// Text of the first selected node in document order.
pub fn extract_value(prog: &ExtractProgram, row: &InputRow, tree: &DomTree) -> Option<String> {
    eval_program(prog, row, tree).into_iter().next().map(|n| tree.text_content(n))
}

/// One example for a transform over an extracted string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostExample {
    pub row: InputRow,
    pub extracted: String,
    pub desired: String,
}

/// Learns a gap-free string program over the row with the extracted value
/// appended as its last column.
pub fn learn_post_transform(examples: &[PostExample], cfg: &UrlConfig) -> Option<UrlProgram> {
    let mut cfg = cfg.clone();
    cfg.any_str = false;
    let ex: Vec<UrlExample> = examples
        .iter()
        .map(|e| UrlExample { row: e.row.with_cell(e.extracted.clone()), url: e.desired.clone(), candidates: vec![] })
        .collect();
    learn_url(&ex, &[], &cfg)
}

pub fn apply_post_transform(prog: &UrlProgram, row: &InputRow, extracted: &str) -> Option<String> {
    eval_predicate(&prog.pred, &row.with_cell(extracted))?.literal()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::{parse_html_min, Axis};
    use crate::extract_dsl::{PosPred, Pred};
    use crate::url_dsl::AtomicExpr;

    fn table(r1: (&str, &str), r2: (&str, &str)) -> DomTree {
        parse_html_min(&format!(
            "<html><div><table><tr><td>{}</td><td>{}</td></tr><tr><td>{}</td><td>{}</td></tr></table></div></html>",
            r1.0, r1.1, r2.0, r2.1
        ))
        .unwrap()
    }

    fn text_node(t: &DomTree, s: &str) -> NodeId {
        t.all_nodes().find(|&n| t.node(n).attr("text") == Some(s)).unwrap()
    }

    fn example(date: &str, page_date: &str) -> ExtractExample {
        let tree = table(("foo", "Rate"), (page_date, "1.0867"));
        let target = tree.node(text_node(&tree, "1.0867")).parent.unwrap();
        ExtractExample { row: InputRow::new(["EUR", date]), tree, target }
    }

    #[test]
    fn graph_of_text_target() {
        let ex = example("2016-10-16", "10-16-2016");
        let target = text_node(&ex.tree, "1.0867");
        let ex = ExtractExample { target, ..ex };
        let cfg = ExtractConfig::default();
        let g = build_predicates_graph(&ex, 5, &cfg.attr_dag_layer(), &cfg.url.gen);
        assert_eq!(g.anchors[g.target].name, "text");
        let date = g.anchors.iter().find(|a| a.node == text_node(&ex.tree, "10-16-2016")).unwrap();
        let sk: Vec<_> = g.hops_to(date.id).iter().map(|h| (h.axis, h.dist)).collect();
        assert_eq!(sk, vec![(Axis::Ancestor, 1), (Axis::Left, 1), (Axis::Child, 1)]);
        let order = enumerate_paths(&g, &ex.row, &cfg);
        let foo = g.anchors.iter().find(|a| a.node == text_node(&ex.tree, "foo")).unwrap().id;
        let pos = |a| order.iter().position(|&x| x == a).unwrap();
        assert!(pos(date.id) < pos(foo));
        assert!(order.iter().all(|&a| g.is_endpoint(a)));
    }

    #[test]
    fn lone_node_graph() {
        let tree = parse_html_min("<p></p>").unwrap();
        let ex = ExtractExample { row: InputRow::new(["x"]), tree, target: 0 };
        let cfg = ExtractConfig::default();
        let g = build_predicates_graph(&ex, 5, &cfg.attr_dag_layer(), &cfg.url.gen);
        assert_eq!(g.anchors.len(), 1);
        assert!(g.hops.is_empty());
        assert!(g.anchors[0].counts.iter().all(|c| c.k == 0));
    }

    #[test]
    fn radius_one_keeps_neighbours() {
        let ex = example("2016-10-16", "10-16-2016");
        let cfg = ExtractConfig::default();
        let g = build_predicates_graph(&ex, 1, &cfg.attr_dag_layer(), &cfg.url.gen);
        // own text child, the left td, and the tr/table/div/html ancestors
        assert_eq!(g.anchors.len(), 1 + 1 + 1 + 4);
    }

    #[test]
    fn currency_one_example() {
        let ex = example("2016-10-16", "10-16-2016");
        let p = learn_extract(std::slice::from_ref(&ex), &[], &ExtractConfig::default()).unwrap();
        assert_eq!(eval_program(&p, &ex.row, &ex.tree).into_iter().collect::<Vec<_>>(), vec![ex.target]);
        let Pred::Path(path) = &p.preds[0] else { panic!("{p}") };
        assert_eq!((path.nodes[0].axis, path.nodes[0].pos), (Axis::Left, PosPred::Eq(1)));
        assert!(p.to_string().contains("SubStr(1"), "{p}");
        // the date expression carries over to a new row and page
        let other = example("2017-01-05", "01-05-2017");
        assert_eq!(extract_value(&p, &other.row, &other.tree).as_deref(), Some("1.0867"));
    }

    #[test]
    fn unique_tag_needs_nothing() {
        let tree = parse_html_min("<div><b>x</b><i>y</i></div>").unwrap();
        let target = tree.all_nodes().find(|&n| tree.node(n).tag == "b").unwrap();
        let ex = ExtractExample { row: InputRow::new(["q"]), tree, target };
        let p = learn_extract(&[ex], &[], &ExtractConfig::default()).unwrap();
        assert_eq!(p.to_string(), "(b, [])");
    }

    #[test]
    fn intersection_rules() {
        let a = example("2016-10-16", "10-16-2016");
        let b = ExtractExample { row: InputRow::new(["EUR", "2016-10-15"]), ..example("2016-10-15", "10-15-2016") };
        let cfg = ExtractConfig::default();
        let ga = build_predicates_graph(&a, 5, &cfg.attr_dag_layer(), &cfg.url.gen);
        let gb = build_predicates_graph(&b, 5, &cfg.attr_dag_layer(), &cfg.url.gen);
        let pa = ga.path_to(ga.endpoints().find(|&x| ga.anchors[x].node == text_node(&a.tree, "10-16-2016")).unwrap());
        // input-derived attributes can lose programs, constants cannot
        assert!(!pa.same_predicates(&pa.intersect(&pa).unwrap()));
        let foo = ga.path_to(ga.endpoints().find(|&x| ga.anchors[x].node == text_node(&a.tree, "foo")).unwrap());
        assert!(foo.same_predicates(&foo.intersect(&foo).unwrap()));
        let refined = refine_path(&pa, &gb, 64);
        assert_eq!(refined.len(), 1);
        let text_attrs = &refined[0].steps.last().unwrap().attrs;
        assert_eq!(text_attrs.len(), 1);
        assert_eq!(text_attrs[0].1.outputs.len(), 2);

        let mut p2 = pa.clone();
        p2.steps[0].pos = PosPred::Eq(2);
        p2.steps[0].counts[0].k += 1;
        let m = pa.intersect(&p2).unwrap();
        assert_eq!(m.steps[0].pos, PosPred::Leq(2));
        assert_eq!(m.steps[0].counts.len(), pa.steps[0].counts.len() - 1);
    }

    #[test]
    fn citations_transform() {
        let ex = PostExample {
            row: InputRow::new(["Some Paper"]),
            extracted: "Cited by 2316".into(),
            desired: "2316".into(),
        };
        let p = learn_post_transform(&[ex], &UrlConfig::default()).unwrap();
        assert!(p.pred.atoms.iter().all(|a| matches!(a, AtomicExpr::SubStr { col: 1, .. })), "{p}");
        assert_eq!(apply_post_transform(&p, &InputRow::new(["Other"]), "Cited by 87").as_deref(), Some("87"));
    }

    #[test]
    fn inconsistent_transform() {
        let a = PostExample { row: InputRow::new(["a"]), extracted: "x".into(), desired: "1".into() };
        let b = PostExample { row: InputRow::new(["a"]), extracted: "x".into(), desired: "2".into() };
        assert!(learn_post_transform(&[a, b], &UrlConfig::default()).is_none());
    }
}
