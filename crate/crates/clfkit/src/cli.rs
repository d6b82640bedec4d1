//! The `clfkit` command line. Exit status: 0 on success, 1 on bad input data,
//! 2 on usage errors.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use clfkit_core::exec::GraphSource;
use clfkit_core::metrics::{index_predictions, PredictionIndex, ProgramChoice};
use clfkit_core::scene::build_alias_dictionary;
use clfkit_core::seed::DEFAULT_SEED;
use clfkit_core::testgen::builtin_rules;
use clfkit_core::{AliasDictionary, GraphMap};
use serde::Deserialize;

use crate::io;
use crate::pipeline::{self, EvalInput};
use crate::report;

/// Relative input paths resolve against this directory when it is set.
pub const DATA_ENV: &str = "CLFKIT_DATA";

#[derive(Debug, Parser)]
#[command(
    name = "clfkit",
    version,
    about = "Program execution and OOD test generation over scene graphs"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Graphs {
    Gold,
    Generated,
}

#[derive(Debug, Default, Args)]
pub struct Common {
    /// TOML file with defaults for any of the flags below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub graphs_gold: Option<PathBuf>,
    #[arg(long, global = true)]
    pub graphs_generated: Option<PathBuf>,
    /// Restricts execution and scoring to one graph source.
    #[arg(long, global = true, value_enum)]
    pub graphs: Option<Graphs>,
    #[arg(long, global = true)]
    pub examples: Option<PathBuf>,
    #[arg(long, global = true)]
    pub predictions: Option<PathBuf>,
    #[arg(long, global = true)]
    pub rules: Option<PathBuf>,
    #[arg(long, global = true)]
    pub dict: Option<PathBuf>,
    /// Seed for every random choice [default: 20220517].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads [default: available cores].
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Emit per-step traces and event details in outcome files.
    #[arg(long, global = true)]
    pub trace: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Translate OLF programs (a program, a list of programs or an examples file) to CLF.
    Translate {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Execute gold programs, or predicted ones with --predictions, and write outcomes.
    Execute,
    /// Build the mention alias dictionary from grounded training programs.
    BuildAliasDict {
        /// Sidecar groundings: example id to [{mention, image_id?, object_id}].
        #[arg(long)]
        alignments: Option<PathBuf>,
    },
    /// Generate the segment-combine split.
    GenSegcomb {
        /// Distractor pool; defaults to the gold graphs.
        #[arg(long)]
        pool: Option<PathBuf>,
    },
    /// Generate the quantifier contrast split.
    GenContrast {
        /// Where to write coherency pairs.
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
    /// Score predictions and write a report.
    Eval {
        /// Coherency pairs; both ids of each pair must be in --examples.
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Execute gold programs instead of predicted ones.
        #[arg(long)]
        gold_programs: bool,
        #[arg(long, default_value = "test")]
        split: String,
        /// Also write the plain-text table here.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Append k seeded contrast examples to a training file.
    FewShot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        contrast: PathBuf,
        #[arg(long)]
        k: usize,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    graphs_gold: Option<PathBuf>,
    graphs_generated: Option<PathBuf>,
    graphs: Option<Graphs>,
    examples: Option<PathBuf>,
    predictions: Option<PathBuf>,
    rules: Option<PathBuf>,
    dict: Option<PathBuf>,
    seed: Option<u64>,
    jobs: Option<usize>,
    format: Option<Format>,
}

/// Missing or conflicting arguments.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Flags merged over the config file, with input paths resolved.
struct Resolved {
    c: Common,
    data_root: Option<PathBuf>,
}

impl Resolved {
    fn new(mut c: Common) -> anyhow::Result<Self> {
        if let Some(path) = c.config.clone() {
            let text = io::read_text(&path)?;
            let f: ConfigFile = toml::from_str(&text)
                .with_context(|| format!("{}: malformed config", path.display()))?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            let rel =
                |p: Option<PathBuf>| p.map(|p| if p.is_absolute() { p } else { base.join(p) });
            c.graphs_gold = c.graphs_gold.or(rel(f.graphs_gold));
            c.graphs_generated = c.graphs_generated.or(rel(f.graphs_generated));
            c.examples = c.examples.or(rel(f.examples));
            c.predictions = c.predictions.or(rel(f.predictions));
            c.rules = c.rules.or(rel(f.rules));
            c.dict = c.dict.or(rel(f.dict));
            c.graphs = c.graphs.or(f.graphs);
            c.seed = c.seed.or(f.seed);
            c.jobs = c.jobs.or(f.jobs);
            c.format = c.format.or(f.format);
        }
        let data_root = std::env::var_os(DATA_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from);
        Ok(Resolved { c, data_root })
    }

    fn input(&self, p: &Path) -> PathBuf {
        match &self.data_root {
            Some(root) if p.is_relative() => root.join(p),
            _ => p.to_path_buf(),
        }
    }

    fn require(&self, p: &Option<PathBuf>, flag: &str) -> anyhow::Result<PathBuf> {
        p.as_deref()
            .map(|p| self.input(p))
            .ok_or_else(|| usage(format!("this command needs {flag}")))
    }

    fn seed(&self) -> u64 {
        self.c.seed.unwrap_or(DEFAULT_SEED)
    }

    fn dict(&self) -> anyhow::Result<Option<AliasDictionary>> {
        self.c
            .dict
            .as_deref()
            .map(|p| io::load_alias_dictionary(&self.input(p)))
            .transpose()
            .map_err(Into::into)
    }

    fn gold(&self) -> anyhow::Result<Option<GraphMap>> {
        self.c
            .graphs_gold
            .as_deref()
            .map(|p| io::load_scene_graphs(&self.input(p)))
            .transpose()
            .map_err(Into::into)
    }

    fn generated(&self) -> anyhow::Result<Option<GraphMap>> {
        self.c
            .graphs_generated
            .as_deref()
            .map(|p| io::load_scene_graphs(&self.input(p)))
            .transpose()
            .map_err(Into::into)
    }

    fn emit(&self, text: &str) -> anyhow::Result<()> {
        match &self.c.out {
            Some(p) => io::write_text(p, text),
            None => {
                std::io::stdout().lock().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

/// Parses `argv` and runs the command, returning the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let r = Resolved::new(cli.common)?;
    let jobs = r.c.jobs;
    crate::par::with_jobs(jobs, move || command(&r, cli.command))?
}

fn command(r: &Resolved, cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Translate { input } => {
            let path = r.input(&input);
            let text = io::read_text(&path)?;
            let out =
                pipeline::translate_text(&text).with_context(|| path.display().to_string())?;
            r.emit(&out)
        }
        Command::Execute => {
            let examples = io::load_examples(&r.require(&r.c.examples, "--examples")?)?;
            let (graphs, source) = match r.c.graphs {
                Some(Graphs::Generated) => (r.generated()?, GraphSource::Generated),
                Some(Graphs::Gold) => (r.gold()?, GraphSource::Gold),
                None => match r.gold()? {
                    Some(g) => (Some(g), GraphSource::Gold),
                    None => (r.generated()?, GraphSource::Generated),
                },
            };
            let graphs = graphs
                .ok_or_else(|| usage("this command needs --graphs-gold or --graphs-generated"))?;
            let preds = predictions(r, &examples)?;
            let dict = r.dict()?;
            let records = pipeline::execute_examples(
                &examples,
                preds.as_ref(),
                &graphs,
                source,
                dict.as_ref(),
                r.c.trace,
            );
            let fatal = records.iter().filter(|o| o.fatal).count();
            eprintln!(
                "executed {} examples on {source} graphs, {fatal} fatal",
                records.len()
            );
            r.emit(&io::to_jsonl(records))
        }
        Command::BuildAliasDict { alignments } => {
            let examples = io::load_examples(&r.require(&r.c.examples, "--examples")?)?;
            let graphs = r
                .gold()?
                .ok_or_else(|| usage("this command needs --graphs-gold"))?;
            let al = alignments
                .map(|p| io::load_alignments(&r.input(&p)))
                .transpose()?;
            let b = build_alias_dictionary(&examples, &graphs, al.as_ref());
            for u in &b.ungroundable {
                log::warn!(
                    "{}: ungroundable mention {:?}: {}",
                    u.example_id,
                    u.mention,
                    u.reason
                );
            }
            eprintln!(
                "{} mentions in dictionary, {} ungroundable",
                b.dictionary.len(),
                b.ungroundable.len()
            );
            r.emit(&io::alias_dictionary_to_json(&b.dictionary))
        }
        Command::GenSegcomb { pool } => {
            let examples = io::load_examples(&r.require(&r.c.examples, "--examples")?)?;
            let pool = match pool {
                Some(p) => io::load_scene_graphs(&r.input(&p))?,
                None => r
                    .gold()?
                    .ok_or_else(|| usage("this command needs --graphs-gold or --pool"))?,
            };
            let dict = r.dict()?;
            let (text, s) = pipeline::segcomb_split(&examples, &pool, r.seed(), dict.as_ref());
            eprintln!(
                "{} cases ({} verified, {} out of range), {} failed, {} unsupported",
                s.cases, s.verified, s.out_of_range, s.failed, s.unsupported
            );
            r.emit(&text)
        }
        Command::GenContrast { pairs } => {
            let examples = io::load_examples(&r.require(&r.c.examples, "--examples")?)?;
            let graphs = r
                .gold()?
                .ok_or_else(|| usage("this command needs --graphs-gold"))?;
            let rules = match &r.c.rules {
                Some(p) => io::load_rules(&r.input(p))?,
                None => builtin_rules(),
            };
            let dict = r.dict()?;
            let split = pipeline::contrast_split(&examples, &rules, &graphs, dict.as_ref())?;
            eprintln!(
                "{} contrast examples from {} sources, {} skipped",
                split.stats.generated, split.stats.sources, split.stats.skipped
            );
            if let Some(p) = pairs {
                io::write_text(&p, &split.pairs)?;
            }
            r.emit(&split.examples)
        }
        Command::Eval {
            pairs,
            gold_programs,
            split,
            table,
        } => {
            let examples = io::load_examples(&r.require(&r.c.examples, "--examples")?)?;
            let preds = predictions(r, &examples)?;
            if preds.is_none() && !gold_programs {
                return Err(usage("eval needs --predictions or --gold-programs"));
            }
            let preds = preds.unwrap_or_default();
            let (gold, generated) = match r.c.graphs {
                Some(Graphs::Gold) => (r.gold()?, None),
                Some(Graphs::Generated) => (None, r.generated()?),
                None => (r.gold()?, r.generated()?),
            };
            if gold.is_none() && generated.is_none() {
                return Err(usage("eval needs --graphs-gold or --graphs-generated"));
            }
            let pairs = pairs.map(|p| io::load_pairs(&r.input(&p))).transpose()?;
            let dict = r.dict()?;
            let report = pipeline::evaluate(&EvalInput {
                split: &split,
                examples: &examples,
                preds: &preds,
                gold_graphs: gold.as_ref(),
                generated_graphs: generated.as_ref(),
                dict: dict.as_ref(),
                choice: if gold_programs {
                    ProgramChoice::Gold
                } else {
                    ProgramChoice::Predicted
                },
                pairs: pairs.as_deref(),
            })?;
            let text = match r.c.format.unwrap_or(Format::Csv) {
                Format::Csv => report::to_csv(&report)?,
                Format::Json => report::to_json(&report),
            };
            let rendered = report::render_table(&report);
            if let Some(p) = table {
                io::write_text(&p, &rendered)?;
            }
            if r.c.out.is_some() {
                print!("{rendered}");
            }
            r.emit(&text)
        }
        Command::FewShot { input, contrast, k } => {
            let train_path = r.input(&input);
            let train_text = io::read_text(&train_path)?;
            // Validates the training file without altering its bytes.
            io::parse_examples(&train_path, &train_text)?;
            let cpath = r.input(&contrast);
            let contrast = io::parse_examples(&cpath, &io::read_text(&cpath)?)?;
            let out = pipeline::few_shot_text(&train_text, &contrast, k, r.seed())?;
            if let Some(o) = &r.c.out {
                if same_file(o, &train_path) {
                    return Err(usage("--out must differ from --in"));
                }
            }
            r.emit(&out)
        }
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

fn predictions(
    r: &Resolved,
    examples: &[clfkit_core::QaExample],
) -> anyhow::Result<Option<PredictionIndex>> {
    let Some(p) = &r.c.predictions else {
        return Ok(None);
    };
    let path = r.input(p);
    let preds = io::load_predictions(&path)?;
    Ok(Some(
        index_predictions(preds, examples).with_context(|| path.display().to_string())?,
    ))
}
