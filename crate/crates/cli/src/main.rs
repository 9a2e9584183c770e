//! `rise`: command-line front end.
//!
//! Exit status is 0 on success, 1 when a query could not be handled
//! (failed translation, dialect difference found by `validate`, unparseable
//! input) and 2 on infrastructure errors: unreachable executors or model,
//! unreadable files, bad configuration.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rise_core::oracle::{validate, Executor, OracleError};
use rise_core::pipeline::{
    open_executor, open_provider, run_corpus, translate, ConfigError, FinalStatus, PipelineConfig, PipelineError, PipelineOptions,
    RuleStore, StoreError,
};
use rise_core::reduce::{llm_reduce, random_reduce, ReduceError};
use rise_core::rewrite::{apply_rules, RewriteError};
use rise_core::rule::{mine_rule, rule_to_file, validate_rule, Provenance, RuleError};
use rise_core::sql::ParseDiagnostic;
use rise_core::{parse, render, Query};

#[derive(Parser)]
#[command(name = "rise", version, about = "Rule-driven SQL dialect translation")]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Progress messages on stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    /// Where to write the JSON report.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Executors {
    /// Source executor: a scripted fixture directory or a DSN.
    #[arg(long)]
    source_exec: Option<String>,
    /// Target executor: a scripted fixture directory or a DSN.
    #[arg(long)]
    target_exec: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Translate one query, or every `*.sql` file of a directory.
    Translate {
        #[arg(long, required_unless_present = "corpus", conflicts_with = "corpus")]
        query: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        executors: Executors,
        /// Rule store directory; overrides the configuration.
        #[arg(long)]
        rules: Option<PathBuf>,
    },
    /// Shrink a query while it keeps failing the same way on the target.
    Reduce {
        #[arg(long)]
        query: PathBuf,
        #[command(flatten)]
        executors: Executors,
        /// Skip the model-guided step.
        #[arg(long)]
        no_llm: bool,
    },
    /// Mine a rule from a query and its translation and print it.
    ExtractRule {
        /// The query in the source dialect.
        #[arg(long)]
        source: PathBuf,
        /// Its translation.
        #[arg(long)]
        target: PathBuf,
        /// Also add the rule to this store.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long, default_value = "")]
        note: String,
        /// Creation time recorded in the rule; now by default.
        #[arg(long)]
        timestamp: Option<String>,
    },
    /// Rewrite a query with stored rules.
    ApplyRules {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Repeat passes until nothing matches.
        #[arg(long)]
        fixpoint: bool,
    },
    /// Compare a query with a candidate translation.
    Validate {
        #[arg(long)]
        source_query: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        #[command(flatten)]
        executors: Executors,
    },
    /// Inspect the rule store.
    Rules {
        #[arg(long, global = true)]
        rules: Option<PathBuf>,
        #[command(subcommand)]
        action: RulesAction,
    },
}

#[derive(Subcommand)]
enum RulesAction {
    List,
    Show { id: String },
}

/// Why a command did not succeed.
#[derive(Debug)]
enum Failure {
    Query(String),
    Infra(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Query(_) => 1,
            Failure::Infra(_) => 2,
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Infrastructure { .. } => Failure::Infra(e.to_string()),
            OracleError::SourceFailed { .. } => Failure::Query(e.to_string()),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_infrastructure() {
            Failure::Infra(e.to_string())
        } else {
            Failure::Query(e.to_string())
        }
    }
}

impl From<ReduceError> for Failure {
    fn from(e: ReduceError) -> Self {
        match e {
            ReduceError::Oracle(e) => e.into(),
            ReduceError::Llm(e) => Failure::Infra(e.to_string()),
            ReduceError::Contract(m) => Failure::Query(m),
        }
    }
}

macro_rules! failure_from {
    ($($t:ty => $variant:ident),*) => {
        $(impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::$variant(e.to_string())
            }
        })*
    };
}

failure_from!(ConfigError => Infra, StoreError => Infra, ParseDiagnostic => Query, RuleError => Query, RewriteError => Query);

type Outcome = Result<(), Failure>;
type ExecutorPair = (Box<dyn Executor>, Box<dyn Executor>);

struct Context {
    cfg: PipelineConfig,
    seed: u64,
    verbose: bool,
    report: Option<PathBuf>,
}

impl Context {
    fn say(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("rise: {}", msg.as_ref());
        }
    }

    fn executors(&self, flags: &Executors) -> Result<ExecutorPair, Failure> {
        let pick = |flag: &Option<String>, cfg: &Option<String>, which: &str| {
            flag.clone()
                .or_else(|| cfg.clone())
                .ok_or_else(|| Failure::Infra(format!("no {which} executor: pass --{which}-exec or set {which}_executor in the config")))
        };
        let src = open_executor(&pick(&flags.source_exec, &self.cfg.source_executor, "source")?)?;
        let tgt = open_executor(&pick(&flags.target_exec, &self.cfg.target_executor, "target")?)?;
        self.say(format!("executors {} -> {}", src.name(), tgt.name()));
        Ok((src, tgt))
    }

    fn rules_dir(&self, flag: &Option<PathBuf>) -> Option<PathBuf> {
        flag.clone().or_else(|| self.cfg.rules_dir.clone())
    }

    /// Opens an existing store; a missing directory is an error.
    fn existing_store(&self, flag: &Option<PathBuf>) -> Result<RuleStore, Failure> {
        let dir =
            self.rules_dir(flag).ok_or_else(|| Failure::Infra("no rule store: pass --rules or set rules_dir in the config".into()))?;
        if !dir.is_dir() {
            return Err(Failure::Infra(format!("rule store {} does not exist", dir.display())));
        }
        Ok(RuleStore::open(&dir)?)
    }

    fn write_report(&self, json: &str) -> Outcome {
        if let Some(path) = &self.report {
            write(path, json)?;
            self.say(format!("report written to {}", path.display()));
        }
        Ok(())
    }
}

/// Writes to stdout; a closed pipe (`rise rules list | head`) ends the
/// process quietly.
fn emit(text: &str) {
    let mut stdout = io::stdout().lock();
    if let Err(e) = stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        if e.kind() == io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("rise: stdout: {e}");
        std::process::exit(2);
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Infra(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Infra(format!("{}: {e}", path.display())))
}

fn pretty(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn run_translate(
    ctx: &Context,
    query: &Option<PathBuf>,
    corpus: &Option<PathBuf>,
    executors: &Executors,
    rules: &Option<PathBuf>,
) -> Outcome {
    let (mut src, mut tgt) = ctx.executors(executors)?;
    let llm = open_provider(&ctx.cfg.llm)?;
    let mut store = match ctx.rules_dir(rules) {
        Some(dir) => RuleStore::open(&dir)?,
        None => {
            ctx.say("no rule store configured; mined rules are kept in memory only");
            RuleStore::in_memory()
        }
    };
    ctx.say(format!("{} stored rule(s)", store.len()));
    let opts = PipelineOptions { seed: ctx.seed, max_iterations: ctx.cfg.max_iterations, timestamp: None };

    if let Some(dir) = corpus {
        let report = run_corpus(dir, &mut store, &mut *src, &mut *tgt, &*llm, &opts)
            .map_err(|e| Failure::Infra(format!("{}: {e}", dir.display())))?;
        for q in &report.queries {
            emit(&format!("{}\t{}\n", q.query_id, pretty(&q.final_status).trim_matches('"')));
        }
        let accuracy = report.accuracy.map(|a| format!("{:.1}%", a * 100.0)).unwrap_or_else(|| "n/a".into());
        emit(&format!(
            "translated {}/{} ({accuracy}), unchanged {}, failed {}\n",
            report.translated, report.total, report.unchanged, report.failed
        ));
        ctx.write_report(&report.to_json())?;
        if report.infrastructure_errors > 0 {
            return Err(Failure::Infra(format!("{} infrastructure error(s)", report.infrastructure_errors)));
        }
        if report.failed > 0 {
            return Err(Failure::Query(format!("{} of {} queries failed", report.failed, report.total)));
        }
        return Ok(());
    }

    let path = query.as_ref().expect("clap requires --query or --corpus");
    let q = Query::new(read(path)?.trim(), src.name().to_string());
    let (out, report) = translate(&q, &mut store, &mut *src, &mut *tgt, &*llm, &opts)?;
    for line in &report.log {
        ctx.say(line);
    }
    emit(&format!("{}\n", out.text));
    ctx.write_report(&pretty(&report))?;
    match report.final_status {
        FinalStatus::Failed => Err(Failure::Query(report.error.unwrap_or_else(|| "no valid translation found".into()))),
        _ => Ok(()),
    }
}

fn run_reduce(ctx: &Context, query: &Path, executors: &Executors, no_llm: bool) -> Outcome {
    let (mut src, mut tgt) = ctx.executors(executors)?;
    let text = read(query)?;
    let tree = parse(&text)?;
    let q = Query::new(text.trim(), src.name().to_string());
    let original = tgt.execute(&q)?;
    let failed = !original.is_ok();
    let Some(original_error) = original.error_message.filter(|_| failed) else {
        return Err(Failure::Query(format!("{} runs on {}; nothing to reduce", query.display(), tgt.name())));
    };
    ctx.say(format!("target error: {original_error}"));

    let state = random_reduce(&tree, &mut *src, &mut *tgt, &original_error, ctx.seed)?;
    ctx.say(format!("random reduction: {} -> {} tokens", state.initial_tokens, state.tokens()));
    let mut best = state.sql();
    let llm_step = if no_llm {
        None
    } else {
        let llm = open_provider(&ctx.cfg.llm)?;
        let r = llm_reduce(&Query::new(best.clone(), src.name().to_string()), &original_error, &*llm, &mut *src, &mut *tgt)?;
        if let Some(shorter) = &r.query {
            ctx.say(format!("model reduction accepted: {}", shorter.text));
            best = shorter.text.clone();
        }
        Some(r)
    };
    emit(&format!("{best}\n"));

    let log = serde_json::json!({
        "query": query.display().to_string(),
        "original_error": original_error,
        "reduced": best,
        "random": state,
        "reduction_rate": state.reduction_rate(),
        "llm": llm_step,
    });
    let path = ctx.report.clone().unwrap_or_else(|| query.with_extension("attempts.json"));
    write(&path, &pretty(&log))?;
    ctx.say(format!("attempts log written to {}", path.display()));
    Ok(())
}

fn run_extract(ctx: &Context, source: &Path, target: &Path, rules: &Option<PathBuf>, note: &str, timestamp: &Option<String>) -> Outcome {
    let (s_text, t_text) = (read(source)?, read(target)?);
    let provenance = Provenance {
        simplified_query: s_text.trim().to_string(),
        translated_query: t_text.trim().to_string(),
        created_at: timestamp.clone().unwrap_or_else(|| chrono::Utc::now().to_rfc3339()),
    };
    let rule = mine_rule(&parse(&s_text)?, &parse(&t_text)?, provenance, note)?;
    if let Err(violations) = validate_rule(&rule) {
        let why: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Failure::Query(format!("mined rule is not well formed: {}", why.join("; "))));
    }
    let file = String::from_utf8(rule_to_file(&rule)).expect("rule files are UTF-8");
    emit(&file);
    if let Some(dir) = ctx.rules_dir(rules) {
        let added = RuleStore::open(&dir)?.add(rule)?;
        ctx.say(if added { "added to the store" } else { "already in the store" });
    }
    ctx.write_report(&file)
}

fn run_apply(ctx: &Context, query: &Path, rules: &Option<PathBuf>, fixpoint: bool) -> Outcome {
    let store = ctx.existing_store(rules)?;
    let tree = parse(&read(query)?)?;
    let (out, report) = apply_rules(&tree, store.rules(), fixpoint)?;
    ctx.say(format!("{} replacement(s) in {} pass(es)", report.total(), report.passes));
    let json = pretty(&report.matches);
    emit(&format!("{}\n", render(&out).expect("rewritten trees contain no pattern symbols")));
    emit(&format!("{json}\n"));
    ctx.write_report(&json)
}

fn run_validate(ctx: &Context, source_query: &Path, candidate: &Path, executors: &Executors) -> Outcome {
    let (mut src, mut tgt) = ctx.executors(executors)?;
    let q_s = Query::new(read(source_query)?.trim(), src.name().to_string());
    let q_c = Query::new(read(candidate)?.trim(), tgt.name().to_string());
    let verdict = validate(&q_s, &q_c, &mut *src, &mut *tgt)?;
    let json = pretty(&verdict);
    emit(&format!("{json}\n"));
    ctx.write_report(&json)?;
    if verdict.is_equivalent() {
        Ok(())
    } else {
        Err(Failure::Query(format!("dialect difference: {}", verdict.signature())))
    }
}

fn run_rules(ctx: &Context, rules: &Option<PathBuf>, action: &RulesAction) -> Outcome {
    let store = ctx.existing_store(rules)?;
    match action {
        RulesAction::List => {
            for r in store.rules() {
                let note = if r.dialect_note.is_empty() { String::new() } else { format!("\t{}", r.dialect_note) };
                emit(&format!("{}\t{} -> {}{note}\n", r.id, r.source, r.target));
            }
            ctx.say(format!("{} rule(s)", store.len()));
            Ok(())
        }
        RulesAction::Show { id } => {
            let rule = store.get(id).ok_or_else(|| Failure::Query(format!("no rule with id {id}")))?;
            emit(&String::from_utf8(rule_to_file(rule)).expect("rule files are UTF-8"));
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    let ctx = Context { seed: cli.seed.unwrap_or(cfg.seed), cfg, verbose: cli.verbose, report: cli.report.clone() };
    match &cli.command {
        Command::Translate { query, corpus, executors, rules } => run_translate(&ctx, query, corpus, executors, rules),
        Command::Reduce { query, executors, no_llm } => run_reduce(&ctx, query, executors, *no_llm),
        Command::ExtractRule { source, target, rules, note, timestamp } => run_extract(&ctx, source, target, rules, note, timestamp),
        Command::ApplyRules { query, rules, fixpoint } => run_apply(&ctx, query, rules, *fixpoint),
        Command::Validate { source_query, candidate, executors } => run_validate(&ctx, source_query, candidate, executors),
        Command::Rules { rules, action } => run_rules(&ctx, rules, action),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Query(m) | Failure::Infra(m)) = &f;
            eprintln!("rise: {m}");
            ExitCode::from(f.code())
        }
    }
}
