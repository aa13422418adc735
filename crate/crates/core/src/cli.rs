//! Command-line front end.
//!
//! `run` parses arguments, writes records to the given sinks and returns the
//! process exit code: 0 when every instance produced a record, 1 when some
//! failed (their error records are still written), 2 on configuration or
//! input problems.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bridge::{self, BridgeClient, DEFAULT_TIMEOUT};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, EvaluationConfig, EvaluationReport};
use crate::explainer::{Explainer, ExplainerConfig, Explanation};
use crate::model::{read_texts, Corpus, Models, TokenSequence};
use crate::toy::{reviews, Lexicon, ToyBackend, ToyDecoderKind, DEFAULT_DIM};

#[derive(Debug, Parser)]
#[command(name = "proxplain", version, about = "Explain black-box text classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Explain one text, or every line of --input.
    Explain {
        text: Option<String>,
        #[arg(long, value_name = "FILE", conflicts_with = "text")]
        input: Option<PathBuf>,
    },
    /// Score guided and baseline editions over a test file.
    Evaluate {
        test_file: PathBuf,
    },
    /// Serve the toy models over the bridge protocol on stdin/stdout.
    Serve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Toy,
    Bridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ToyDecoder {
    Corpus,
    Greedy,
}

#[derive(Debug, Args)]
pub struct Options {
    #[arg(long, value_enum, default_value = "toy", global = true)]
    pub backend: Backend,
    /// Shell command launching a bridge server.
    #[arg(long, value_name = "COMMAND", global = true)]
    pub bridge_cmd: Option<String>,
    /// Seconds to wait for each bridge reply.
    #[arg(long, default_value_t = DEFAULT_TIMEOUT.as_secs(), global = true)]
    pub bridge_timeout: u64,
    /// Landmark corpus, one pre-tokenized text per line.
    #[arg(long, value_name = "PATH", global = true)]
    pub corpus: Option<PathBuf>,
    /// Toy lexicon (`token<TAB>weight` lines); defaults to the built-in review lexicon.
    #[arg(long, value_name = "PATH", global = true)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "corpus", global = true)]
    pub toy_decoder: ToyDecoder,
    #[arg(long, default_value_t = DEFAULT_DIM, global = true)]
    pub toy_dim: usize,
    #[arg(long, env = "PROXPLAIN_SEED", global = true)]
    pub seed: Option<u64>,
    /// JSON run configuration; flags override its values.
    #[arg(long, value_name = "PATH", global = true)]
    pub config: Option<PathBuf>,
    /// Interpolation steps.
    #[arg(long, global = true)]
    pub s: Option<usize>,
    /// Landmark count.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Neighbors kept per class.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Surrogate kernel width.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Exemplar diversity weight in [0, 1].
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Importance threshold.
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Raised threshold for evaluate.
    #[arg(long, global = true)]
    pub eta_high: Option<f64>,
    /// Write output here instead of stdout.
    #[arg(long, value_name = "PATH", global = true)]
    pub out: Option<PathBuf>,
    /// Human-readable output instead of JSON.
    #[arg(long, global = true)]
    pub pretty: bool,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0, global = true)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub explainer: ExplainerConfig,
    pub evaluation: EvaluationConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&raw).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// Apply command-line overrides and validate.
    pub fn resolve(opts: &Options) -> Result<Self> {
        let mut cfg = match &opts.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let ex = &mut cfg.explainer;
        if let Some(v) = opts.s {
            ex.neighborhood.s = v;
        }
        if let Some(v) = opts.k {
            ex.neighborhood.k = v;
        }
        if let Some(v) = opts.n {
            ex.neighborhood.n = v;
        }
        if let Some(v) = opts.sigma {
            ex.surrogate.sigma = v;
        }
        if let Some(v) = opts.lambda {
            ex.exemplars.lambda = v;
        }
        if let Some(v) = opts.eta {
            ex.eta = v;
            cfg.evaluation.eta = v;
        }
        if let Some(v) = opts.eta_high {
            cfg.evaluation.eta_high = v;
        }
        cfg.explainer.validate()?;
        cfg.evaluation.validate()?;
        Ok(cfg)
    }
}

enum Loaded {
    Toy(ToyBackend),
    Bridge(BridgeClient),
}

impl Loaded {
    fn models(&self) -> Models<'_> {
        match self {
            Loaded::Toy(b) => b.models(),
            Loaded::Bridge(c) => Models::new(c, c, c),
        }
    }
}

fn load_lexicon(opts: &Options) -> Result<Lexicon> {
    match &opts.lexicon {
        Some(p) => Lexicon::load(p),
        None => Ok(reviews::lexicon()),
    }
}

fn load_backend(opts: &Options) -> Result<(Loaded, Corpus)> {
    let path = opts
        .corpus
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("--corpus is required".into()))?;
    let texts = read_texts(path)?;
    if texts.is_empty() {
        return Err(Error::InvalidArgument(format!("{}: corpus is empty", path.display())));
    }
    match opts.backend {
        Backend::Toy => {
            let kind = match opts.toy_decoder {
                ToyDecoder::Corpus => ToyDecoderKind::CorpusNearest,
                ToyDecoder::Greedy => ToyDecoderKind::GreedyBagOfWords,
            };
            let (backend, corpus) = ToyBackend::build(load_lexicon(opts)?, texts, opts.toy_dim, kind)?;
            Ok((Loaded::Toy(backend), corpus))
        }
        Backend::Bridge => {
            let cmd = opts
                .bridge_cmd
                .as_deref()
                .ok_or_else(|| Error::InvalidArgument("--backend bridge needs --bridge-cmd".into()))?;
            let client = BridgeClient::spawn(cmd, Duration::from_secs(opts.bridge_timeout))?;
            let corpus = Corpus::build(texts, &client, &client)?;
            Ok((Loaded::Bridge(client), corpus))
        }
    }
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {jobs} workers: {e}")))
}

fn open_out<'w>(out: &Option<PathBuf>, stdout: &'w mut dyn Write) -> Result<Box<dyn Write + 'w>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(stdout),
    })
}

/// Parse `args` (program name first) and run the selected command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let opts = &cli.opts;
    let cfg = RunConfig::resolve(opts)?;
    if let Command::Serve = cli.command {
        return serve_toy(opts, stdout);
    }
    let seed = match opts.seed {
        Some(s) => s,
        None => {
            let s = rand::random::<u64>();
            writeln!(stderr, "seed: {s}").map_err(|e| Error::io("<stderr>", e))?;
            s
        }
    };
    let queries: Vec<TokenSequence> = match &cli.command {
        Command::Explain { text: Some(t), .. } => {
            let q = TokenSequence::parse(t);
            q.ensure_non_empty()?;
            vec![q]
        }
        Command::Explain { input: Some(p), .. } => read_texts(p)?,
        Command::Explain { .. } => {
            return Err(Error::InvalidArgument("explain needs a TEXT or --input FILE".into()))
        }
        Command::Evaluate { test_file } => read_texts(test_file)?,
        Command::Serve => unreachable!(),
    };
    let (loaded, corpus) = load_backend(opts)?;
    let explainer = Explainer::new(&corpus, loaded.models(), cfg.explainer.clone())?;
    let pool = thread_pool(opts.jobs)?;
    let mut out = open_out(&opts.out, stdout)?;
    let out_name = opts.out.clone().unwrap_or_else(|| "<stdout>".into());
    let io_err = |e: io::Error| Error::io(&out_name, e);

    let code = match &cli.command {
        Command::Explain { .. } => {
            let results: Vec<Result<Explanation>> = pool.install(|| {
                queries
                    .par_iter()
                    .enumerate()
                    .map(|(i, q)| explainer.explain(q, seed, i as u64))
                    .collect()
            });
            let mut failed = 0;
            for (q, r) in queries.iter().zip(&results) {
                let line = match r {
                    Ok(ex) if opts.pretty => render_explanation(ex),
                    Ok(ex) => serde_json::to_string(&ex.to_record()).expect("record serializes"),
                    Err(e) => {
                        failed += 1;
                        writeln!(stderr, "error: {q}: {e}").map_err(io_err)?;
                        serde_json::json!({"query": q.to_string(), "error": e.to_string()}).to_string()
                    }
                };
                writeln!(out, "{line}").map_err(io_err)?;
            }
            i32::from(failed > 0)
        }
        Command::Evaluate { .. } => {
            let report = pool.install(|| evaluate(&queries, &explainer, &cfg.evaluation, seed))?;
            if opts.pretty {
                write!(out, "{}", render_report(&report)).map_err(io_err)?;
            } else {
                let s = serde_json::to_string_pretty(&report).expect("report serializes");
                writeln!(out, "{s}").map_err(io_err)?;
            }
            for f in &report.failures {
                writeln!(stderr, "error: instance {}: {}", f.index, f.error).map_err(io_err)?;
            }
            i32::from(!report.failures.is_empty())
        }
        Command::Serve => unreachable!(),
    };
    out.flush().map_err(io_err)?;
    Ok(code)
}

fn serve_toy(opts: &Options, stdout: &mut dyn Write) -> Result<i32> {
    if opts.backend != Backend::Toy {
        return Err(Error::InvalidArgument("serve only hosts the toy backend".into()));
    }
    let (loaded, _) = load_backend(opts)?;
    let m = loaded.models();
    bridge::serve(io::stdin().lock(), stdout, m.encoder, m.decoder, m.blackbox)
        .map_err(|e| Error::io("<stdio>", e))?;
    Ok(0)
}

pub fn render_explanation(ex: &Explanation) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{}\n  prediction: {} (p_pos {:.3}, p_neg {:.3})",
        ex.query,
        ex.class.as_str(),
        ex.prediction.p_pos,
        ex.prediction.p_neg
    );
    let _ = writeln!(s, "  saliency:");
    for w in ex.intrinsic() {
        let _ = writeln!(s, "    {:>8.3}  {}", w.weight, w.token);
    }
    let _ = writeln!(s, "  extrinsic:");
    for w in ex.extrinsic() {
        let _ = writeln!(s, "    {:>8.3}  {}", w.weight, w.token);
    }
    for (name, set) in [("factuals", &ex.factuals), ("counterfactuals", &ex.counterfactuals)] {
        let _ = writeln!(s, "  {name}:");
        for n in set {
            let _ = writeln!(s, "    [{:.3}] {}", n.confidence.p_pos, n.text);
        }
    }
    let _ = writeln!(s, "  editions:");
    for e in &ex.editions {
        let mark = if e.flipped { " (flipped)" } else { "" };
        let _ = writeln!(s, "    {} {}: {}{}", e.op.as_str(), e.word, e.edited, mark);
    }
    s
}

pub fn render_report(r: &EvaluationReport) -> String {
    let mut s = String::new();
    let h = &r.header;
    let _ = writeln!(
        s,
        "eta {} / {}  seed {}  evaluated {}/{}",
        h.eta, h.eta_high, h.seed, h.evaluated, h.instances
    );
    let _ = writeln!(s, "{:<10} {:>18} {:>18} {:>10}", "method", "completeness", "compactness", "delta_eta");
    for (name, m) in [("guided", &r.guided), ("baseline", &r.baseline)] {
        let a = &m.aggregate;
        let _ = writeln!(
            s,
            "{:<10} {:>8.3} +- {:<6.3} {:>8.3} +- {:<6.3} {:>10}",
            name,
            a.completeness.mean,
            a.completeness.std,
            a.compactness.mean,
            a.compactness.std,
            m.correctness.map_or("-".to_owned(), |c| format!("{c:+.3}")),
        );
    }
    if !r.failures.is_empty() {
        let _ = writeln!(s, "failures: {}", r.failures.len());
    }
    s
}
