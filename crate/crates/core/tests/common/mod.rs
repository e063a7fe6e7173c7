//! Generators and independent reference evaluators shared by the
//! integration suites.
#![allow(dead_code)]

use std::cell::Cell;
use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use webrelate::dom::{parse_html_min, Axis, DomTree, NodeId};
use webrelate::extract_dsl::{AttrPred, ExtractProgram, NodePred, Path, Pred};
use webrelate::extract_synth::{
    build_predicates_graph, materialize_path, ExtractConfig, ExtractExample, GraphPath, PredicatesGraph, UnseenPage,
};
use webrelate::harness::Benchmark;
use webrelate::url_dsl::{eval_predicate, pattern_matches, InputRow};
use webrelate::url_synth::{UnseenInput, UrlExample};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks")
}

pub fn bench(name: &str) -> Benchmark {
    Benchmark::load(&corpus_dir().join(format!("{name}.json"))).expect("bundled benchmark loads")
}

const WORDS: &[&str] = &["EUR", "usd", "New York", "Seattle WA", "msft", "10-16", "a_b", "Oct 3", "x", "GOOG"];
const TEXTS: &[&str] = &["x", "y", "10", "EUR", "Seattle", "Rate", "a b"];
const TAGS: &[&str] = &["div", "p", "td", "span"];

pub fn random_row(r: &mut ChaCha8Rng, cols: usize) -> InputRow {
    InputRow::new((0..cols).map(|_| WORDS.choose(r).unwrap().to_string()))
}

/// A random element tree with at most `max_nodes` nodes, text nodes
/// included. Only leaves carry text.
pub fn random_tree(r: &mut ChaCha8Rng, max_nodes: usize) -> DomTree {
    fn element(r: &mut ChaCha8Rng, budget: &mut usize, depth: usize, out: &mut String) {
        *budget -= 1;
        let tag = TAGS.choose(r).unwrap();
        out.push('<');
        out.push_str(tag);
        if r.gen_bool(0.4) {
            out.push_str(&format!(" class=\"{}\"", ["a", "b", "EUR"].choose(r).unwrap()));
        }
        out.push('>');
        let kids = if depth >= 3 { 0 } else { r.gen_range(0..=3) };
        let mut made = 0;
        for _ in 0..kids {
            if *budget < 2 {
                break;
            }
            element(r, budget, depth + 1, out);
            made += 1;
        }
        if made == 0 && *budget >= 1 && r.gen_bool(0.8) {
            *budget -= 1;
            out.push_str(TEXTS.choose(r).unwrap());
        }
        out.push_str(&format!("</{tag}>"));
    }
    let mut budget = max_nodes.max(1);
    let mut html = String::new();
    element(r, &mut budget, 0, &mut html);
    let t = parse_html_min(&html).expect("generated html parses");
    assert!(t.len() <= max_nodes.max(1), "{html}");
    t
}

/// A random node of `t` that is not the root, when one exists.
pub fn random_target(r: &mut ChaCha8Rng, t: &DomTree) -> NodeId {
    if t.len() == 1 {
        return t.root;
    }
    r.gen_range(0..t.len()).max(1)
}

/// Neighbours computed from parent and child links alone.
pub fn naive_neighbors(t: &DomTree, n: NodeId, axis: Axis) -> Vec<NodeId> {
    match axis {
        Axis::Child => t.nodes[n].children.clone(),
        Axis::Ancestor => {
            let mut v = Vec::new();
            let mut c = n;
            while let Some(p) = t.nodes[c].parent {
                v.push(p);
                c = p;
            }
            v
        }
        Axis::Left | Axis::Right => {
            let Some(p) = t.nodes[n].parent else { return vec![] };
            let sibs = &t.nodes[p].children;
            let i = sibs.iter().position(|&c| c == n).unwrap();
            let mut v: Vec<NodeId> = Vec::new();
            if axis == Axis::Left {
                let mut j = i;
                while j > 0 {
                    j -= 1;
                    v.push(sibs[j]);
                }
            } else {
                v.extend(&sibs[i + 1..]);
            }
            v
        }
    }
}

fn naive_node_pred(p: &NodePred, row: &InputRow, t: &DomTree, n: NodeId) -> bool {
    match p {
        NodePred::Attr(AttrPred { name, value }) => {
            let Some((_, v)) = t.nodes[n].attrs.iter().find(|(k, _)| k == name) else { return false };
            eval_predicate(value, row).is_some_and(|pat| pattern_matches(&pat, v))
        }
        NodePred::Count(c) => naive_neighbors(t, n, c.axis).len() == c.k,
    }
}

fn naive_path_from(p: &Path, i: usize, row: &InputRow, t: &DomTree, n: NodeId) -> bool {
    let Some(step) = p.nodes.get(i) else { return true };
    naive_neighbors(t, n, step.axis).into_iter().enumerate().any(|(d, m)| {
        step.pos.admits(d + 1)
            && t.nodes[m].tag == step.name
            && step.preds.iter().all(|q| naive_node_pred(q, row, t, m))
            && naive_path_from(p, i + 1, row, t, m)
    })
}

/// Reference program evaluation by depth-first search over each path.
pub fn naive_eval(prog: &ExtractProgram, row: &InputRow, t: &DomTree) -> BTreeSet<NodeId> {
    (0..t.nodes.len())
        .filter(|&n| {
            t.nodes[n].tag == prog.name
                && prog.preds.iter().all(|p| match p {
                    Pred::Node(q) => naive_node_pred(q, row, t, n),
                    Pred::Path(q) => naive_path_from(q, 0, row, t, n),
                })
        })
        .collect()
}

/// A URL made of constant pieces and case-mapped cells of `row`.
#[derive(Clone, Debug)]
pub enum Piece {
    Const(&'static str),
    Cell(usize, u8),
}

pub fn random_template(r: &mut ChaCha8Rng, cols: usize) -> Vec<Piece> {
    const CONSTS: &[&str] = &["http://", "/", "q?s=", ".com/", "-", "x", "="];
    let n = r.gen_range(1..=4);
    let mut v: Vec<Piece> = (0..n)
        .map(|_| {
            if r.gen_bool(0.5) {
                Piece::Const(CONSTS.choose(r).unwrap())
            } else {
                Piece::Cell(r.gen_range(0..cols), r.gen_range(0..3))
            }
        })
        .collect();
    if !v.iter().any(|p| matches!(p, Piece::Cell(..))) {
        v.push(Piece::Cell(0, 0));
    }
    v
}

pub fn render(t: &[Piece], row: &InputRow) -> String {
    t.iter()
        .map(|p| match p {
            Piece::Const(s) => s.to_string(),
            Piece::Cell(c, 0) => row.cells[*c].clone(),
            Piece::Cell(c, 1) => row.cells[*c].to_lowercase(),
            Piece::Cell(c, _) => row.cells[*c].to_uppercase(),
        })
        .collect()
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Up to three URL examples from one random template, the rest unseen.
/// Half the instances carry candidate lists.
pub fn url_case(seed: u64) -> (Vec<UrlExample>, Vec<UnseenInput>) {
    let mut r = rng(seed);
    let cols = r.gen_range(1..=2);
    let t = random_template(&mut r, cols);
    let rows: Vec<_> = (0..4).map(|_| random_row(&mut r, cols)).collect();
    let urls: Vec<String> = rows.iter().map(|row| render(&t, row)).collect();
    let with_cands = r.gen_bool(0.5);
    let cands = |i: usize| -> Vec<String> {
        if !with_cands {
            return vec![];
        }
        let mut c: Vec<String> = urls.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        c.push(format!("{}x", urls[i]));
        c
    };
    let n = r.gen_range(1..=3);
    let examples =
        (0..n).map(|i| UrlExample { row: rows[i].clone(), url: urls[i].clone(), candidates: cands(i) }).collect();
    let unseen = (n..4).map(|i| UnseenInput { row: rows[i].clone(), candidates: cands(i) }).collect();
    (examples, unseen)
}

/// One or two extraction examples over random trees; a second tree with
/// no node of the target's tag becomes an unseen page.
pub fn extract_case(seed: u64) -> (Vec<ExtractExample>, Vec<UnseenPage>) {
    let mut r = rng(seed);
    let t1 = random_tree(&mut r, 15);
    let target = random_target(&mut r, &t1);
    let tag = t1.node(target).tag.clone();
    let mut examples = vec![ExtractExample { row: random_row(&mut r, 1), tree: t1, target }];
    let t2 = random_tree(&mut r, 15);
    let same: Vec<usize> = t2.all_nodes().filter(|&n| t2.node(n).tag == tag).collect();
    let row2 = random_row(&mut r, 1);
    let mut unseen = vec![];
    if !same.is_empty() && r.gen_bool(0.5) {
        let target = same[r.gen_range(0..same.len())];
        examples.push(ExtractExample { row: row2, tree: t2, target });
    } else {
        unseen.push(UnseenPage { row: row2, tree: t2 });
    }
    (examples, unseen)
}

/// A single extraction example on a tree of at most 15 nodes.
pub fn small_example(seed: u64) -> ExtractExample {
    let mut r = rng(seed);
    let tree = random_tree(&mut r, 15);
    let target = random_target(&mut r, &tree);
    ExtractExample { row: random_row(&mut r, 1), tree, target }
}

/// A second example whose target shares the tag `tag`.
pub fn partner(seed: u64, tag: &str) -> Option<ExtractExample> {
    let mut r = rng(seed ^ 0x5eed);
    for _ in 0..20 {
        let tree = random_tree(&mut r, 15);
        let same: Vec<usize> = tree.all_nodes().filter(|&n| tree.node(n).tag == tag).collect();
        if !same.is_empty() {
            let target = same[r.gen_range(0..same.len())];
            return Some(ExtractExample { row: random_row(&mut r, 1), tree, target });
        }
    }
    None
}

pub fn graph(ex: &ExtractExample, cfg: &ExtractConfig) -> PredicatesGraph {
    build_predicates_graph(ex, cfg.radius, &cfg.attr_dag_layer(), &cfg.url.gen)
}

/// Materialized predicates of `p`: every candidate plus random subsets.
pub fn predicate_sets(p: &GraphPath, examples: &[ExtractExample], seed: u64) -> Vec<Vec<Pred>> {
    let mp = materialize_path(p, examples, &[], &ExtractConfig::default());
    let mut out = mp.candidates();
    let mut r = rng(seed);
    for _ in 0..4 {
        let mask: u64 = r.gen();
        let relax = r.gen_bool(0.5);
        let bit = Cell::new(0);
        let keep = |_: usize, _: &NodePred| {
            bit.set(bit.get() + 1);
            mask >> (bit.get() % 64) & 1 == 1
        };
        out.push(mp.preds(&keep, relax));
    }
    out
}

/// An output of at most 10 chars stitched from pieces of the row, now and
/// then with a stray character.
pub fn short_output(r: &mut ChaCha8Rng, row: &InputRow) -> String {
    let mut o = String::new();
    for _ in 0..r.gen_range(1..=3) {
        let cell: Vec<char> = row.cells.choose(r).unwrap().chars().collect();
        let a = r.gen_range(0..cell.len());
        let b = r.gen_range(a + 1..=cell.len());
        let piece: String = cell[a..b].iter().collect();
        o.push_str(&match r.gen_range(0..3) {
            0 => piece,
            1 => piece.to_lowercase(),
            _ => piece.to_uppercase(),
        });
        if r.gen_bool(0.2) {
            o.push(*['-', '/', 'z'].choose(r).unwrap());
        }
    }
    o.chars().take(10).collect()
}
