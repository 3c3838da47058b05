//! Command-line front end for the `kimura` library.
//!
//! [`dispatch`] parses arguments, runs one subcommand and returns the
//! process exit code: 0 on success, 1 when a check fails, 2 on usage or
//! input errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use kimura::config::{Tolerances, DEFAULT_MAX_LEAVES};
use kimura::fourier::{p_to_q, q_to_p, EdgeParams, Frame, PatternDistribution, QVector};
use kimura::group::{slice_patterns, Pattern};
use kimura::invariants::lci;
use kimura::model::{phi, ModelParams};
use kimura::scoring::{empirical_frequencies, rank_q, read_fasta, simulate, Aggregation};
use kimura::tree::{enumerate_topologies_up_to, parse_newick, Tree};
use kimura::verify::{check_tree, CheckOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "kimura", version, about = "Phylogenetic invariants for the Kimura 3-parameter model")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Seed for every stochastic step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Only errors and warnings on the diagnostic stream.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Largest leaf count for exhaustive topology enumeration.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_LEAVES)]
    pub max_n: usize,
    /// Relative singular-value cutoff for rank checks.
    #[arg(long, global = true)]
    pub svd_cutoff: Option<f64>,
    /// Allowed |q_A..A - 1| before scoring refuses input.
    #[arg(long, global = true)]
    pub normalization_tol: Option<f64>,
    /// Score gap below which the best topologies are reported as tied.
    #[arg(long, global = true)]
    pub tie_tol: Option<f64>,
    /// Denominator floor for normalized residuals.
    #[arg(long, global = true)]
    pub residual_floor: Option<f64>,
    /// Tolerance for stochastic-matrix checks.
    #[arg(long, global = true)]
    pub simplex_tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the generator set of a tree.
    Gen {
        /// Newick string or file.
        #[arg(long)]
        tree: String,
        /// Write the set as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fourier transform of a probability vector or pattern-count table.
    Transform {
        /// Input file (default: standard input).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Fourier coordinates to probabilities.
        #[arg(long)]
        inverse: bool,
    },
    /// Fourier coordinates of the model at given edge parameters.
    Eval {
        #[arg(long)]
        tree: String,
        /// One line per edge in canonical order, four reals per line.
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value = "prob")]
        frame: Frame,
    },
    /// Run the oracle checks on generator sets.
    Verify {
        #[arg(long)]
        n: usize,
        /// Check every topology instead of the first one.
        #[arg(long)]
        all_topologies: bool,
        /// Also check the Jacobian rank.
        #[arg(long)]
        rank: bool,
        /// Seeded model points per tree for numeric checks.
        #[arg(long, default_value_t = 3)]
        points: usize,
    },
    /// Rank topologies for an alignment.
    Score {
        #[arg(long)]
        alignment: PathBuf,
        #[arg(long, default_value = "mean")]
        agg: Aggregation,
        #[arg(long, default_value_t = 0.0)]
        pseudocount: f64,
        /// File with one Newick per line, or "all".
        #[arg(long, default_value = "all")]
        topologies: String,
    },
    /// Draw an alignment from the model.
    Simulate {
        #[arg(long)]
        tree: String,
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value = "prob")]
        frame: Frame,
        #[arg(long)]
        sites: usize,
        /// FASTA output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List all topologies on k leaves.
    Topologies {
        #[arg(long)]
        n: usize,
    },
}

/// Resolved settings shared by every subcommand.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub max_n: usize,
    pub tolerances: Tolerances,
    pub json: bool,
    pub quiet: bool,
    pub threads: Option<usize>,
}

impl From<&GlobalArgs> for RunConfig {
    fn from(g: &GlobalArgs) -> RunConfig {
        let mut tolerances = Tolerances::default();
        if let Some(v) = g.svd_cutoff {
            tolerances.svd_cutoff = v;
        }
        if let Some(v) = g.normalization_tol {
            tolerances.normalization = v;
        }
        if let Some(v) = g.tie_tol {
            tolerances.tie = v;
        }
        if let Some(v) = g.residual_floor {
            tolerances.residual_floor = v;
        }
        if let Some(v) = g.simplex_tol {
            tolerances.simplex = v;
        }
        RunConfig { seed: g.seed, max_n: g.max_n, tolerances, json: g.json, quiet: g.quiet, threads: g.threads }
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Parses `args` (program name first), runs the subcommand, and returns
/// the exit code. Output goes to `out`, diagnostics to `err`.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let cfg = RunConfig::from(&cli.global);
    if cfg.quiet {
        log::set_max_level(log::LevelFilter::Warn);
    }
    let mut io = Io { out, err };
    if let Some(k) = cfg.threads {
        // The global pool can be configured once per process.
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            log::debug!("thread pool already configured: {e}");
        }
    }
    let result = run(&cli.command, &cfg, &mut io);
    match result {
        Ok(code) => code,
        // A closed downstream pipe (`kimura gen ... | head`) is not a failure.
        Err(e)
            if e.chain().any(|c| {
                c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            }) =>
        {
            EXIT_OK
        }
        Err(e) => {
            if cfg.json {
                let _ = writeln!(io.err, "{}", serde_json::json!({ "error": format!("{e:#}") }));
            } else {
                let _ = writeln!(io.err, "error: {e:#}");
            }
            EXIT_USAGE
        }
    }
}

fn run(cmd: &Command, cfg: &RunConfig, io: &mut Io) -> anyhow::Result<i32> {
    match cmd {
        Command::Gen { tree, out } => cmd_gen(tree, out.as_deref(), cfg, io),
        Command::Transform { input, inverse } => cmd_transform(input.as_deref(), *inverse, cfg, io),
        Command::Eval { tree, params, frame } => cmd_eval(tree, params, *frame, cfg, io),
        Command::Verify { n, all_topologies, rank, points } => cmd_verify(*n, *all_topologies, *rank, *points, cfg, io),
        Command::Score { alignment, agg, pseudocount, topologies } => {
            cmd_score(alignment, *agg, *pseudocount, topologies, cfg, io)
        }
        Command::Simulate { tree, params, frame, sites, out } => {
            cmd_simulate(tree, params, *frame, *sites, out.as_deref(), cfg, io)
        }
        Command::Topologies { n } => cmd_topologies(*n, cfg, io),
    }
}

/// A Newick string, or the path of a file holding one.
fn load_tree(arg: &str) -> anyhow::Result<Tree> {
    let text = if arg.trim_start().starts_with('(') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading tree file {arg}"))?
    };
    Ok(parse_newick(text.trim())?)
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// One edge per non-empty line, four reals each; `#` starts a comment.
pub fn parse_params(text: &str, frame: Frame) -> anyhow::Result<Vec<EdgeParams>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let values = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().with_context(|| format!("line {}: bad number {s:?}", i + 1)))
            .collect::<anyhow::Result<Vec<f64>>>()?;
        if values.len() != 4 {
            bail!("line {}: expected 4 values, got {}", i + 1, values.len());
        }
        let coords = [values[0], values[1], values[2], values[3]];
        out.push(EdgeParams { coords, frame });
    }
    Ok(out)
}

fn load_params(tree: Tree, path: &Path, frame: Frame) -> anyhow::Result<ModelParams<f64>> {
    let edges = parse_params(&read_text(path)?, frame)?;
    Ok(ModelParams::from_edge_params(Arc::new(tree), &edges)?)
}

fn write_json<T: Serialize>(w: &mut dyn Write, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

fn join_patterns(ps: &[Pattern]) -> String {
    ps.iter().map(Pattern::to_string).collect::<Vec<_>>().join(" ")
}

fn cmd_gen(tree: &str, out: Option<&Path>, cfg: &RunConfig, io: &mut Io) -> anyhow::Result<i32> {
    let t = load_tree(tree)?;
    let set = lci(&t);
    if let Some(path) = out {
        fs::write(path, set.to_json() + "\n").with_context(|| format!("writing {}", path.display()))?;
        if !cfg.quiet {
            writeln!(io.err, "wrote {} generators to {}", set.len(), path.display())?;
        }
    } else if cfg.json {
        writeln!(io.out, "{}", set.to_json())?;
    } else {
        for g in set.generators() {
            let minus = if g.is_hyperplane() { "1".to_string() } else { join_patterns(g.minus().factors()) };
            writeln!(io.out, "{}\t{} - {}", g.tag(), join_patterns(g.plus().factors()), minus)?;
        }
    }
    Ok(EXIT_OK)
}

/// Reads either plain reals in pattern-id order or `PATTERN count` lines.
/// Count tables are normalized to frequencies.
pub fn parse_transform_input(text: &str) -> anyhow::Result<Vec<f64>> {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
    let is_table = !lines.is_empty()
        && lines.iter().all(|l| {
            let mut it = l.split_whitespace();
            matches!((it.next(), it.next(), it.next()), (Some(p), Some(_), None) if p.parse::<Pattern>().is_ok())
        });
    if !is_table {
        return lines
            .iter()
            .flat_map(|l| l.split_whitespace())
            .map(|s| s.parse::<f64>().with_context(|| format!("bad number {s:?}")))
            .collect();
    }
    let mut n = None;
    let mut counts: Vec<f64> = Vec::new();
    for l in lines {
        let mut it = l.split_whitespace();
        let p: Pattern = it.next().expect("checked").parse()?;
        let c: f64 = it.next().expect("checked").parse().with_context(|| format!("bad count in {l:?}"))?;
        if c < 0.0 {
            bail!("negative count in {l:?}");
        }
        match n {
            None => {
                n = Some(p.len());
                counts = vec![0.0; kimura::group::pattern_count(p.len())];
            }
            Some(k) if k != p.len() => bail!("pattern {p} has length {}, expected {k}", p.len()),
            _ => {}
        }
        counts[p.id()] += c;
    }
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        bail!("count table is empty");
    }
    Ok(counts.into_iter().map(|c| c / total).collect())
}

fn cmd_transform(input: Option<&Path>, inverse: bool, cfg: &RunConfig, io: &mut Io) -> anyhow::Result<i32> {
    let text = match input {
        Some(p) => read_text(p)?,
        None => {
            let mut s = String::new();
            std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)?;
            s
        }
    };
    let values = parse_transform_input(&text)?;
    let result = if inverse {
        q_to_p(&QVector::new(values)?).into_values()
    } else {
        p_to_q(&PatternDistribution::new(values)?).into_values()
    };
    if cfg.json {
        write_json(io.out, &result)?;
    } else {
        for v in result {
            writeln!(io.out, "{v}")?;
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct PatternValue {
    pattern: String,
    value: f64,
}

fn cmd_eval(tree: &str, params: &Path, frame: Frame, cfg: &RunConfig, io: &mut Io) -> anyhow::Result<i32> {
    let t = load_tree(tree)?;
    let n = t.leaf_count();
    let params = load_params(t, params, frame)?;
    let q = phi(&params);
    let rows: Vec<PatternValue> =
        slice_patterns(n).map(|p| PatternValue { pattern: p.to_string(), value: q.get(&p) }).collect();
    if cfg.json {
        write_json(io.out, &rows)?;
    } else {
        for r in rows {
            writeln!(io.out, "{}\t{}", r.pattern, r.value)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_verify(n: usize, all: bool, rank: bool, points: usize, cfg: &RunConfig, io: &mut Io) -> anyhow::Result<i32> {
    let mut trees = enumerate_topologies_up_to(n, cfg.max_n)?;
    if !all {
        trees.truncate(1);
    }
    let opts = CheckOptions { seed: cfg.seed, rank, numeric_points: points, tolerances: cfg.tolerances };
    let mut failed = 0usize;
    let mut total = 0usize;
    let mut records = Vec::new();
    for t in &trees {
        for r in check_tree(t, &opts) {
            total += 1;
            if !r.passed {
                failed += 1;
            }
            if cfg.json {
                records.push(serde_json::json!({
                    "topology": r.topology, "tag": r.tag, "index": r.index,
                    "passed": r.passed, "detail": r.detail,
                }));
            } else {
                let status = if r.passed { "PASS" } else { "FAIL" };
                writeln!(io.out, "{status} {} {} {}", r.topology, r.tag, r.index)?;
                if !r.passed {
                    writeln!(io.err, "  {}", r.detail)?;
                }
            }
        }
    }
    if cfg.json {
        write_json(io.out, &records)?;
    }
    if !cfg.quiet {
        writeln!(io.err, "{} checks on {} topologies, {} failed", total, trees.len(), failed)?;
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_CHECK_FAILED })
}

#[derive(Serialize)]
struct ScoreRecord {
    newick: String,
    score: f64,
    per_tag_subscores: std::collections::BTreeMap<&'static str, f64>,
    off_slice_mass: f64,
}

fn cmd_score(
    alignment: &Path,
    agg: Aggregation,
    pseudocount: f64,
    topologies: &str,
    cfg: &RunConfig,
    io: &mut Io,
) -> anyhow::Result<i32> {
    let a = read_fasta(&read_text(alignment)?)?;
    if a.skipped() > 0 && !cfg.quiet {
        writeln!(io.err, "skipped {} of {} columns with non-ACGT symbols", a.skipped(), a.length())?;
    }
    let n = a.sequence_count();
    let candidates = if topologies == "all" {
        enumerate_topologies_up_to(n, cfg.max_n)?
    } else {
        let text = read_text(Path::new(topologies))?;
        let trees = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(parse_newick)
            .collect::<kimura::Result<Vec<Tree>>>()?;
        if let Some(t) = trees.iter().find(|t| t.leaf_count() != n) {
            bail!("candidate {} has {} leaves, alignment has {n} sequences", t.to_newick(), t.leaf_count());
        }
        if trees.is_empty() {
            bail!("no candidate topologies in {topologies}");
        }
        trees
    };
    let q = p_to_q(&empirical_frequencies(&a, pseudocount)?);
    let ranking = rank_q(&q, &candidates, agg, &cfg.tolerances)?;
    if cfg.json {
        let records: Vec<ScoreRecord> = ranking
            .scores
            .iter()
            .map(|s| ScoreRecord {
                newick: s.tree.to_newick(),
                score: s.score,
                per_tag_subscores: s.per_tag_subscores(agg),
                off_slice_mass: s.off_slice_mass,
            })
            .collect();
        write_json(io.out, &records)?;
    } else {
        for (i, s) in ranking.scores.iter().enumerate() {
            writeln!(io.out, "{}\t{:.6e}\t{}", i + 1, s.score, s.tree.to_newick())?;
        }
        if !cfg.quiet {
            writeln!(io.err, "off-slice Fourier mass: {:.6e}", ranking.best().off_slice_mass)?;
        }
    }
    if ranking.tie {
        writeln!(
            io.err,
            "warning: tie: {} topologies share the best score {:.6e}",
            ranking.tied_count(cfg.tolerances.tie),
            ranking.best().score
        )?;
    }
    Ok(EXIT_OK)
}

fn cmd_simulate(
    tree: &str,
    params: &Path,
    frame: Frame,
    sites: usize,
    out: Option<&Path>,
    cfg: &RunConfig,
    io: &mut Io,
) -> anyhow::Result<i32> {
    let t = load_tree(tree)?;
    let params = load_params(t, params, frame)?;
    let a = simulate(&params, sites, cfg.seed, &cfg.tolerances)?;
    let fasta = a.to_fasta();
    match out {
        Some(path) => {
            fs::write(path, fasta).with_context(|| format!("writing {}", path.display()))?;
            if !cfg.quiet {
                writeln!(io.err, "wrote {sites} sites to {}", path.display())?;
            }
        }
        None => io.out.write_all(fasta.as_bytes())?,
    }
    Ok(EXIT_OK)
}

fn cmd_topologies(n: usize, cfg: &RunConfig, io: &mut Io) -> anyhow::Result<i32> {
    let trees: Vec<String> = enumerate_topologies_up_to(n, cfg.max_n)?.iter().map(Tree::to_newick).collect();
    if cfg.json {
        write_json(io.out, &trees)?;
    } else {
        for t in trees {
            writeln!(io.out, "{t}")?;
        }
    }
    Ok(EXIT_OK)
}
