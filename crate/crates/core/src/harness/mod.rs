//! Benchmark specs, the incremental-example protocol, reports, saved
//! programs and brute-force oracles for tests.

mod oracle;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dom::{parse_dom_json, parse_html_min, DomError, DomTree, NodeId};
use crate::extract_dsl::{eval_program, ExtractProgram};
use crate::extract_synth::{
    apply_post_transform, extract_value, learn_extract_traced, learn_post_transform, ExtractConfig, ExtractExample,
    PostExample, UnseenPage,
};
use crate::url_dsl::{InputRow, UrlProgram};
use crate::url_synth::{apply_url, learn_url_traced, Timings, UnseenInput, UrlConfig, UrlExample};

pub use oracle::{
    brute_force_extract_oracle, brute_force_url_oracle, enumerate_atomic_preds, url_oracle_nonempty, ExtractBounds,
    OracleError, UrlBounds,
};

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Json { path: PathBuf, msg: String },
    #[error("{path}: {source}")]
    Dom { path: PathBuf, source: DomError },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UrlTask {
    /// Rows usable as examples, with their URLs.
    pub examples: BTreeMap<usize, String>,
    /// Ranked oracle candidates per row; missing rows have none.
    #[serde(default)]
    pub candidates: BTreeMap<usize, Vec<String>>,
    pub expected: BTreeMap<usize, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractTask {
    /// Page file per row, relative to the spec file.
    pub pages: BTreeMap<usize, String>,
    pub example_targets: BTreeMap<usize, NodeId>,
    pub expected_values: BTreeMap<usize, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostTask {
    /// Extracted string per row; defaults to the extraction task's values.
    #[serde(default)]
    pub extracted: BTreeMap<usize, String>,
    pub examples: BTreeMap<usize, String>,
    pub expected: BTreeMap<usize, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub name: String,
    pub inputs: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url_task: Option<UrlTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extract_task: Option<ExtractTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_transform: Option<PostTask>,
}

/// A spec with its pages parsed.
#[derive(Clone, Debug)]
pub struct Benchmark {
    pub spec: BenchmarkSpec,
    pub dir: PathBuf,
    pub pages: BTreeMap<usize, DomTree>,
}

fn load_page(path: &FsPath) -> Result<DomTree, SpecError> {
    let src = fs::read_to_string(path).map_err(|source| SpecError::Io { path: path.into(), source })?;
    let name = path.to_string_lossy();
    let tree = if name.ends_with(".dom.json") || name.ends_with(".json") {
        parse_dom_json(&src)
    } else {
        parse_html_min(&src)
    };
    tree.map_err(|source| SpecError::Dom { path: path.into(), source })
}

impl BenchmarkSpec {
    pub fn rows(&self) -> Vec<InputRow> {
        self.inputs.iter().map(|r| InputRow::new(r.iter().cloned())).collect()
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let n = self.inputs.len();
        let bad =
            |what: &str, r: usize| SpecError::Invalid(format!("{}: {what} row {r} out of range ({n} rows)", self.name));
        let cover = |what: &str, ex: Vec<usize>, exp: Vec<usize>| -> Result<(), SpecError> {
            for &r in ex.iter().chain(&exp) {
                if r >= n {
                    return Err(bad(what, r));
                }
            }
            if ex.is_empty() {
                return Err(SpecError::Invalid(format!("{}: {what} has no examples", self.name)));
            }
            for r in 0..n {
                if !ex.contains(&r) && !exp.contains(&r) {
                    return Err(SpecError::Invalid(format!("{}: {what} has no expected value for row {r}", self.name)));
                }
            }
            Ok(())
        };
        if let Some(u) = &self.url_task {
            cover("url_task", u.examples.keys().copied().collect(), u.expected.keys().copied().collect())?;
            if let Some(&r) = u.candidates.keys().find(|&&r| r >= n) {
                return Err(bad("url_task candidates", r));
            }
        }
        if let Some(x) = &self.extract_task {
            cover(
                "extract_task",
                x.example_targets.keys().copied().collect(),
                x.expected_values.keys().copied().collect(),
            )?;
            for r in 0..n {
                if !x.pages.contains_key(&r) {
                    return Err(SpecError::Invalid(format!("{}: extract_task has no page for row {r}", self.name)));
                }
            }
        }
        if let Some(p) = &self.post_transform {
            cover("post_transform", p.examples.keys().copied().collect(), p.expected.keys().copied().collect())?;
            if p.extracted.is_empty() && self.extract_task.is_none() {
                return Err(SpecError::Invalid(format!("{}: post_transform needs extracted values", self.name)));
            }
        }
        Ok(())
    }
}

impl Benchmark {
    pub fn load(path: &FsPath) -> Result<Benchmark, SpecError> {
        let src = fs::read_to_string(path).map_err(|source| SpecError::Io { path: path.into(), source })?;
        let spec: BenchmarkSpec =
            serde_json::from_str(&src).map_err(|e| SpecError::Json { path: path.into(), msg: e.to_string() })?;
        spec.validate()?;
        let dir = path.parent().map(FsPath::to_path_buf).unwrap_or_default();
        let mut pages = BTreeMap::new();
        if let Some(x) = &spec.extract_task {
            for (&r, f) in &x.pages {
                pages.insert(r, load_page(&dir.join(f))?);
            }
        }
        for (&r, &t) in spec.extract_task.iter().flat_map(|x| x.example_targets.iter()) {
            if t >= pages[&r].len() {
                return Err(SpecError::Invalid(format!("{}: target {t} not in page of row {r}", spec.name)));
            }
        }
        Ok(Benchmark { spec, dir, pages })
    }

    /// Every `*.json` spec directly inside `dir`, sorted by file name.
    pub fn load_dir(dir: &FsPath) -> Result<Vec<Benchmark>, SpecError> {
        let rd = fs::read_dir(dir).map_err(|source| SpecError::Io { path: dir.into(), source })?;
        let mut files: Vec<PathBuf> = rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json") && !p.to_string_lossy().ends_with(".dom.json"))
            .collect();
        files.sort();
        files.iter().map(|f| Benchmark::load(f)).collect()
    }

    /// Ground truth URL per row.
    pub fn url_truth(&self) -> BTreeMap<usize, String> {
        let u = self.spec.url_task.as_ref().expect("url task");
        u.expected.iter().chain(&u.examples).map(|(&r, s)| (r, s.clone())).collect()
    }

    /// Ground truth extracted value per row.
    pub fn extract_truth(&self) -> BTreeMap<usize, String> {
        let x = self.spec.extract_task.as_ref().expect("extract task");
        let mut m: BTreeMap<usize, String> = x.expected_values.clone();
        for (&r, &t) in &x.example_targets {
            m.entry(r).or_insert_with(|| self.pages[&r].text_content(t));
        }
        m
    }

    /// Target node for `row`: the listed one, else the first node tagged
    /// like `tag` whose text equals the expected value.
    pub fn target_for(&self, row: usize, tag: &str) -> Option<NodeId> {
        let x = self.spec.extract_task.as_ref()?;
        if let Some(&t) = x.example_targets.get(&row) {
            return Some(t);
        }
        let want = self.extract_truth().get(&row)?.clone();
        let page = self.pages.get(&row)?;
        page.all_nodes().find(|&n| page.node(n).tag == tag && page.text_content(n) == want)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Url,
    Extract,
    Post,
}

/// Outcome of one phase of one benchmark: the final learning iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub benchmark: String,
    pub phase: Phase,
    pub examples: usize,
    pub t_pred_ms: f64,
    pub t_intersect_ms: f64,
    pub t_search_ms: f64,
    pub success: bool,
    pub program: Option<String>,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

impl RunReport {
    fn new(name: &str, phase: Phase, examples: usize, t: &Timings, program: Option<String>, success: bool) -> Self {
        RunReport {
            benchmark: name.to_string(),
            phase,
            examples,
            t_pred_ms: ms(t.pred),
            t_intersect_ms: ms(t.intersect),
            t_search_ms: ms(t.search),
            success,
            program,
        }
    }

    pub fn total_ms(&self) -> f64 {
        self.t_pred_ms + self.t_intersect_ms + self.t_search_ms
    }
}

#[derive(Clone, Debug, Default)]
pub struct HarnessConfig {
    pub url: UrlConfig,
    pub extract: ExtractConfig,
}

/// A learned program as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SavedProgram {
    Url { program: UrlProgram },
    Extract { program: ExtractProgram },
    Post { program: UrlProgram },
}

/// Result of a learning phase together with its program.
#[derive(Clone, Debug)]
pub struct PhaseResult {
    pub report: RunReport,
    pub program: Option<SavedProgram>,
}

/// First row in `0..n` whose output differs from the truth.
fn first_mismatch(n: usize, out: impl Fn(usize) -> Option<String>, truth: &BTreeMap<usize, String>) -> Option<usize> {
    (0..n).find(|&r| out(r).as_ref() != truth.get(&r))
}

pub fn run_url(b: &Benchmark, cfg: &UrlConfig) -> PhaseResult {
    let name = &b.spec.name;
    let u = b.spec.url_task.as_ref().expect("url task");
    let rows = b.spec.rows();
    let truth = b.url_truth();
    let cands = |r: usize| u.candidates.get(&r).cloned().unwrap_or_default();
    let mut ex_rows = vec![*u.examples.keys().next().expect("validated")];
    loop {
        let examples: Vec<UrlExample> = ex_rows
            .iter()
            .map(|&r| UrlExample { row: rows[r].clone(), url: truth[&r].clone(), candidates: cands(r) })
            .collect();
        let unseen: Vec<UnseenInput> = (0..rows.len())
            .filter(|r| !ex_rows.contains(r))
            .map(|r| UnseenInput { row: rows[r].clone(), candidates: cands(r) })
            .collect();
        let o = learn_url_traced(&examples, &unseen, cfg);
        let Some(p) = o.program else {
            return PhaseResult {
                report: RunReport::new(name, Phase::Url, ex_rows.len(), &o.timings, None, false),
                program: None,
            };
        };
        let miss = first_mismatch(rows.len(), |r| apply_url(&p, &rows[r], &cands(r)), &truth);
        match miss {
            Some(r) if !ex_rows.contains(&r) => ex_rows.push(r),
            _ => {
                let report =
                    RunReport::new(name, Phase::Url, ex_rows.len(), &o.timings, Some(p.to_string()), miss.is_none());
                return PhaseResult { report, program: Some(SavedProgram::Url { program: p }) };
            }
        }
    }
}

pub fn run_extract(b: &Benchmark, cfg: &ExtractConfig) -> PhaseResult {
    let name = &b.spec.name;
    let x = b.spec.extract_task.as_ref().expect("extract task");
    let rows = b.spec.rows();
    let truth = b.extract_truth();
    let first = *x.example_targets.keys().next().expect("validated");
    let tag = b.pages[&first].node(x.example_targets[&first]).tag.clone();
    let mut ex_rows = vec![first];
    let fail = |n: usize, t: &Timings| PhaseResult {
        report: RunReport::new(name, Phase::Extract, n, t, None, false),
        program: None,
    };
    loop {
        let mut examples = Vec::new();
        for &r in &ex_rows {
            let Some(target) = b.target_for(r, &tag) else { return fail(ex_rows.len(), &Timings::default()) };
            examples.push(ExtractExample { row: rows[r].clone(), tree: b.pages[&r].clone(), target });
        }
        let unseen: Vec<UnseenPage> = (0..rows.len())
            .filter(|r| !ex_rows.contains(r))
            .map(|r| UnseenPage { row: rows[r].clone(), tree: b.pages[&r].clone() })
            .collect();
        let o = learn_extract_traced(&examples, &unseen, cfg);
        let Some(p) = o.program else { return fail(ex_rows.len(), &o.timings) };
        let miss = first_mismatch(rows.len(), |r| extract_value(&p, &rows[r], &b.pages[&r]), &truth);
        match miss {
            Some(r) if !ex_rows.contains(&r) => ex_rows.push(r),
            _ => {
                let report = RunReport::new(
                    name,
                    Phase::Extract,
                    ex_rows.len(),
                    &o.timings,
                    Some(p.to_string()),
                    miss.is_none(),
                );
                return PhaseResult { report, program: Some(SavedProgram::Extract { program: p }) };
            }
        }
    }
}

fn post_inputs(b: &Benchmark) -> BTreeMap<usize, String> {
    let p = b.spec.post_transform.as_ref().expect("post task");
    if p.extracted.is_empty() {
        b.extract_truth()
    } else {
        p.extracted.clone()
    }
}

pub fn run_post(b: &Benchmark, cfg: &UrlConfig) -> PhaseResult {
    let name = &b.spec.name;
    let p = b.spec.post_transform.as_ref().expect("post task");
    let rows = b.spec.rows();
    let extracted = post_inputs(b);
    let truth: BTreeMap<usize, String> = p.expected.iter().chain(&p.examples).map(|(&r, s)| (r, s.clone())).collect();
    let mut ex_rows = vec![*p.examples.keys().next().expect("validated")];
    loop {
        let t0 = std::time::Instant::now();
        let examples: Vec<PostExample> = ex_rows
            .iter()
            .map(|&r| PostExample {
                row: rows[r].clone(),
                extracted: extracted.get(&r).cloned().unwrap_or_default(),
                desired: truth[&r].clone(),
            })
            .collect();
        let prog = learn_post_transform(&examples, cfg);
        let t = Timings { search: t0.elapsed(), ..Timings::default() };
        let Some(prog) = prog else {
            return PhaseResult {
                report: RunReport::new(name, Phase::Post, ex_rows.len(), &t, None, false),
                program: None,
            };
        };
        let out = |r: usize| extracted.get(&r).and_then(|e| apply_post_transform(&prog, &rows[r], e));
        let miss = first_mismatch(rows.len(), out, &truth);
        match miss {
            Some(r) if !ex_rows.contains(&r) => ex_rows.push(r),
            _ => {
                let report =
                    RunReport::new(name, Phase::Post, ex_rows.len(), &t, Some(prog.to_string()), miss.is_none());
                return PhaseResult { report, program: Some(SavedProgram::Post { program: prog }) };
            }
        }
    }
}

/// Runs every phase the spec defines, in url, extract, post order.
pub fn run_benchmark(b: &Benchmark, cfg: &HarnessConfig) -> Vec<RunReport> {
    let mut out = Vec::new();
    if b.spec.url_task.is_some() {
        out.push(run_url(b, &cfg.url).report);
    }
    if b.spec.extract_task.is_some() {
        out.push(run_extract(b, &cfg.extract).report);
    }
    if b.spec.post_transform.is_some() {
        out.push(run_post(b, &cfg.url).report);
    }
    out
}

/// Output of a saved program on every row, `None` where it yields nothing.
pub fn apply_saved(b: &Benchmark, prog: &SavedProgram) -> Result<Vec<Option<String>>, SpecError> {
    let rows = b.spec.rows();
    let need = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(SpecError::Invalid(format!("{}: spec has no {what}", b.spec.name)))
        }
    };
    Ok(match prog {
        SavedProgram::Url { program } => {
            need(b.spec.url_task.is_some(), "url_task")?;
            let u = b.spec.url_task.as_ref().unwrap();
            (0..rows.len())
                .map(|r| apply_url(program, &rows[r], u.candidates.get(&r).map_or(&[][..], |c| c.as_slice())))
                .collect()
        }
        SavedProgram::Extract { program } => {
            need(b.spec.extract_task.is_some(), "extract_task")?;
            (0..rows.len()).map(|r| extract_value(program, &rows[r], &b.pages[&r])).collect()
        }
        SavedProgram::Post { program } => {
            need(b.spec.post_transform.is_some(), "post_transform")?;
            let ex = post_inputs(b);
            (0..rows.len()).map(|r| ex.get(&r).and_then(|e| apply_post_transform(program, &rows[r], e))).collect()
        }
    })
}

/// Nodes an extraction program selects on every page, for diagnostics.
pub fn selected_nodes(b: &Benchmark, prog: &ExtractProgram) -> BTreeMap<usize, Vec<NodeId>> {
    let rows = b.spec.rows();
    b.pages.iter().map(|(&r, t)| (r, eval_program(prog, &rows[r], t).into_iter().collect())).collect()
}
