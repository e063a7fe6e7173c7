//! Learning URL programs from examples with layered version spaces.

mod dag;
mod layers;
mod search;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::url_dsl::{InputRow, UrlProgram};

pub use dag::{gen_dag, gen_replace, gen_substr, Dag, EdgeSet, GenConfig};
pub use layers::{inside_words, layer_predicates, multiple_words, only_words, LayerConfig, LayerFn};
pub use search::{apply_url, atom_cost, search_best_prog, RankKey, SearchConfig};

/// An input row with its desired URL and the oracle's candidates for it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlExample {
    pub row: InputRow,
    pub url: String,
    /// Ranked oracle output; empty means the URL is built directly.
    #[serde(default)]
    pub candidates: Vec<String>,
}

/// A row without a known output, with the oracle's candidates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnseenInput {
    pub row: InputRow,
    #[serde(default)]
    pub candidates: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct UrlConfig {
    pub layers: Vec<LayerConfig>,
    pub gen: GenConfig,
    pub search: SearchConfig,
    /// When false, gap atoms are disabled in every layer.
    pub any_str: bool,
    /// A layer whose intersected DAG outgrows this many edges is skipped.
    pub max_edges: usize,
}

impl Default for UrlConfig {
    fn default() -> Self {
        UrlConfig {
            layers: layer_predicates().to_vec(),
            gen: GenConfig::default(),
            search: SearchConfig::default(),
            any_str: true,
            max_edges: 1_000_000,
        }
    }
}

impl UrlConfig {
    /// Selects layers by 1-based digits, e.g. `"1234"` or `"4"`.
    pub fn with_layers(mut self, digits: &str) -> Result<Self, String> {
        let all = layer_predicates();
        let mut v = Vec::new();
        for c in digits.chars() {
            match c.to_digit(10) {
                Some(d @ 1..=4) => v.push(all[d as usize - 1]),
                _ => return Err(format!("bad layer `{c}` in `{digits}`")),
            }
        }
        if v.is_empty() {
            return Err("no layers selected".into());
        }
        self.layers = v;
        Ok(self)
    }

    pub fn with_kappa(mut self, kappa: usize) -> Self {
        self.search.kappa = kappa;
        self
    }

    pub fn effective_layer(&self, i: usize) -> LayerConfig {
        let l = self.layers[i];
        if self.any_str {
            l
        } else {
            l.without_gaps()
        }
    }
}

/// Where the time went in one learning call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timings {
    pub pred: Duration,
    pub intersect: Duration,
    pub search: Duration,
}

impl Timings {
    pub fn total(&self) -> Duration {
        self.pred + self.intersect + self.search
    }

    pub fn add(&mut self, o: &Timings) {
        self.pred += o.pred;
        self.intersect += o.intersect;
        self.search += o.search;
    }
}

#[derive(Clone, Debug)]
pub struct UrlOutcome {
    pub program: Option<UrlProgram>,
    /// Index into the configured layers that produced the program.
    pub layer: Option<usize>,
    /// Edge count of the last intersected DAG built.
    pub dag_edges: usize,
    pub timings: Timings,
}

/// Runs GenProg for one layer: per-example DAGs, intersection, search.
pub fn gen_prog(
    examples: &[UrlExample],
    unseen: &[UnseenInput],
    layer: &LayerConfig,
    cfg: &UrlConfig,
    t: &mut Timings,
) -> (Option<UrlProgram>, usize) {
    let t0 = Instant::now();
    let dags: Vec<Dag> = examples.iter().map(|e| gen_dag(&e.row, &e.url, layer, &cfg.gen)).collect();
    let t1 = Instant::now();
    t.pred += t1 - t0;
    let mut it = dags.into_iter();
    let Some(mut d) = it.next() else { return (None, 0) };
    for other in it {
        if !d.has_path() {
            break;
        }
        match d.intersect_within(&other, cfg.max_edges) {
            Some(x) => d = x,
            None => {
                t.intersect += t1.elapsed();
                return (None, cfg.max_edges);
            }
        }
    }
    let t2 = Instant::now();
    t.intersect += t2 - t1;
    let edges = d.edge_count();
    let p = if d.has_path() { search_best_prog(&d, examples, unseen, &cfg.search) } else { None };
    t.search += t2.elapsed();
    (p, edges)
}

/// Tries each layer in order and reports the first program found.
pub fn learn_url_traced(examples: &[UrlExample], unseen: &[UnseenInput], cfg: &UrlConfig) -> UrlOutcome {
    let mut out = UrlOutcome { program: None, layer: None, dag_edges: 0, timings: Timings::default() };
    if examples.is_empty() || examples.iter().any(|e| e.url.is_empty()) {
        return out;
    }
    // Uniqueness rejects gaps on examples without candidates, so such
    // examples rule gap atoms out of every layer.
    let gaps = examples.iter().all(|e| !e.candidates.is_empty());
    for i in 0..cfg.layers.len() {
        let layer = if gaps { cfg.effective_layer(i) } else { cfg.effective_layer(i).without_gaps() };
        let (p, edges) = gen_prog(examples, unseen, &layer, cfg, &mut out.timings);
        out.dag_edges = edges;
        if p.is_some() {
            out.program = p;
            out.layer = Some(i);
            break;
        }
    }
    out
}

pub fn learn_url(examples: &[UrlExample], unseen: &[UnseenInput], cfg: &UrlConfig) -> Option<UrlProgram> {
    learn_url_traced(examples, unseen, cfg).program
}
