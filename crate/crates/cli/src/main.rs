use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use webrelate::harness::{
    apply_saved, run_benchmark, run_extract, run_url, Benchmark, HarnessConfig, PhaseResult, RunReport, SavedProgram,
};
use webrelate::url_synth::UrlConfig;

#[derive(Parser)]
#[command(name = "webrelate", version, about = "Learn URL and extraction programs from examples")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct UrlOpts {
    /// Prefixes kept per DAG vertex during search.
    #[arg(long, default_value_t = 10)]
    kappa: usize,
    /// Layers to try, in order, as digits 1-4.
    #[arg(long, default_value = "1234")]
    layers: String,
    /// Disable output-constrained ranking.
    #[arg(long)]
    no_ranking: bool,
    /// Disable gap atoms.
    #[arg(long)]
    no_anystr: bool,
}

impl UrlOpts {
    fn config(&self) -> Result<UrlConfig, String> {
        let mut c = UrlConfig::default().with_layers(&self.layers)?.with_kappa(self.kappa);
        c.search.oc_ranking = !self.no_ranking;
        c.any_str = !self.no_anystr;
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Learn a URL program for one benchmark spec.
    LearnUrl {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        url: UrlOpts,
        /// Write the learned program here.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Learn an extraction program for one benchmark spec.
    LearnExtract {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 5)]
        radius: usize,
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Run every phase of every spec in a directory.
    RunBench {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Write all reports as a JSON array.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        url: UrlOpts,
    },
    /// Apply a saved program to every row of a spec.
    Apply {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        spec: PathBuf,
    },
}

enum Failure {
    Learn(String),
    Spec(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Spec(e)
    }
}

fn load(spec: &Path) -> Result<Benchmark, Failure> {
    Benchmark::load(spec).map_err(|e| Failure::Spec(e.into()))
}

fn finish(res: PhaseResult, save: Option<&PathBuf>) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(&res.report).context("serializing report")?);
    if let (Some(path), Some(p)) = (save, &res.program) {
        let s = serde_json::to_string_pretty(p).context("serializing program")?;
        fs::write(path, s + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    if res.report.success {
        Ok(())
    } else {
        Err(Failure::Learn(format!("{}: no program reproduces every row", res.report.benchmark)))
    }
}

fn summary(r: &RunReport) -> String {
    format!(
        "{:<12} {:<8} {} examples={} time={:.1}ms",
        r.benchmark,
        format!("{:?}", r.phase).to_lowercase(),
        if r.success { "ok  " } else { "FAIL" },
        r.examples,
        r.total_ms()
    )
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::LearnUrl { spec, url, save } => {
            let cfg = url.config().map_err(|e| Failure::Spec(anyhow::anyhow!(e)))?;
            let b = load(&spec)?;
            if b.spec.url_task.is_none() {
                return Err(Failure::Spec(anyhow::anyhow!("{}: spec has no url_task", spec.display())));
            }
            finish(run_url(&b, &cfg), save.as_ref())
        }
        Cmd::LearnExtract { spec, radius, save } => {
            let b = load(&spec)?;
            if b.spec.extract_task.is_none() {
                return Err(Failure::Spec(anyhow::anyhow!("{}: spec has no extract_task", spec.display())));
            }
            let cfg = HarnessConfig::default().extract.with_radius(radius);
            finish(run_extract(&b, &cfg), save.as_ref())
        }
        Cmd::RunBench { dir, jobs, report, url } => {
            let url = url.config().map_err(|e| Failure::Spec(anyhow::anyhow!(e)))?;
            let cfg = HarnessConfig { url, ..HarnessConfig::default() };
            let benches = Benchmark::load_dir(&dir).map_err(|e| Failure::Spec(e.into()))?;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().context("thread pool")?;
            let reports: Vec<RunReport> =
                pool.install(|| benches.par_iter().flat_map_iter(|b| run_benchmark(b, &cfg)).collect());
            for r in &reports {
                println!("{}", summary(r));
            }
            if let Some(path) = report {
                let s = serde_json::to_string_pretty(&reports).context("serializing reports")?;
                fs::write(&path, s + "\n").with_context(|| format!("writing {}", path.display()))?;
            }
            let failed = reports.iter().filter(|r| !r.success).count();
            if failed > 0 {
                return Err(Failure::Learn(format!("{failed} of {} phases failed", reports.len())));
            }
            Ok(())
        }
        Cmd::Apply { program, spec } => {
            let src = fs::read_to_string(&program).with_context(|| format!("reading {}", program.display()))?;
            let p: SavedProgram =
                serde_json::from_str(&src).with_context(|| format!("parsing {}", program.display()))?;
            let b = load(&spec)?;
            let out = apply_saved(&b, &p).map_err(|e| Failure::Spec(e.into()))?;
            for (i, o) in out.iter().enumerate() {
                println!("{i}\t{}", o.as_deref().unwrap_or("<none>"));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Learn(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Spec(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
