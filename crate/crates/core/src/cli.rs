//! The `magic` command-line tool.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::bottomup::{least_model_for, EvalStrategy};
use crate::error::Error;
use crate::parser::{parse_program, parse_query};
use crate::syntax::{Pred, Program, Query};
use crate::topdown::{ld_trace_with, Budget, Strategy};
use crate::transform::{magic_adorned, magic_transform, MagicProgram, SelectionMap, Supplement, VariantFlags};
use crate::verify::{self, check_all, CheckOptions, CheckReport, FuzzConfig, RandomConfig};

#[derive(Parser, Debug)]
#[command(name = "magic", version, about = "Magic transformation, evaluation and verification for definite programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the magic program with provenance comments.
    Transform(InstanceArgs),
    /// Print the adorned program and its magic program.
    Adorn(InstanceArgs),
    /// Answer the query by LD-resolution.
    Solve(InstanceArgs),
    /// Print the least model, or that of the magic program with `--magic`.
    Eval {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        magic: bool,
        #[arg(long, value_enum, default_value_t = EvalArg::SemiNaive)]
        eval: EvalArg,
    },
    /// Answer the query and report the procedure calls and successes.
    Trace(InstanceArgs),
    /// Check every correctness claim on one instance.
    Check {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Also check the adorned pipeline.
        #[arg(long)]
        adorned: bool,
    },
    /// Check every claim over random programs and selections.
    Fuzz(FuzzArgs),
}

#[derive(Args, Debug)]
pub struct InstanceArgs {
    /// Program file (`-` for stdin).
    pub program: PathBuf,
    #[arg(long, short)]
    pub query: String,
    /// Selected positions, as `pred:i,j` (an empty list selects nothing).
    /// Unlisted predicates get all positions.
    #[arg(long, num_args = 1..)]
    pub select: Vec<String>,
    #[arg(long, conflicts_with_all = ["select", "select_none"])]
    pub select_all: bool,
    #[arg(long, conflicts_with = "select")]
    pub select_none: bool,
    /// Omit `pre_H` from the guarded clause copies.
    #[arg(long)]
    pub drop_pre_head: bool,
    /// Delete positions from a call-propagation body, as `clause:i:pos,pos`.
    #[arg(long, num_args = 1..)]
    pub prune: Vec<String>,
    /// Add `pre_Bj` to the clause generated for `B_i`, as `clause:i:j`.
    #[arg(long, num_args = 1..)]
    pub supplement: Vec<String>,
    /// Maximum LD-derivation length.
    #[arg(long, default_value_t = 100)]
    pub budget: usize,
    #[arg(long)]
    pub max_answers: Option<usize>,
    #[arg(long, default_value_t = Budget::DEFAULT_MAX_STEPS)]
    pub max_steps: usize,
    /// Plain depth-first search instead of iterative deepening.
    #[arg(long)]
    pub depth_first: bool,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct FuzzArgs {
    #[arg(long, default_value_t = 1000)]
    pub seeds: u64,
    /// First seed of the campaign.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub selections: usize,
    #[arg(long, default_value_t = 4)]
    pub max_preds: usize,
    #[arg(long, default_value_t = 2)]
    pub max_arity: usize,
    #[arg(long, default_value_t = 6)]
    pub max_clauses: usize,
    #[arg(long, default_value_t = 3)]
    pub max_body: usize,
    #[arg(long, default_value_t = 3)]
    pub consts: usize,
    #[arg(long, default_value_t = verify::TRACE_MAX_STEPS)]
    pub max_steps: usize,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    pub output: Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EvalArg {
    Naive,
    SemiNaive,
}

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub struct Failure {
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { message: message.into() }
}

struct Instance {
    program: Program,
    query: Query,
}

fn load(args: &InstanceArgs) -> Result<Instance, Failure> {
    let path = args.program.display().to_string();
    let text = if path == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s).map_err(|e| usage(format!("stdin: {e}")))?;
        s
    } else {
        std::fs::read_to_string(&args.program).map_err(|e| usage(format!("{path}: {e}")))?
    };
    let program = parse_program(&text).map_err(|e| usage(format!("{path}:{e}")))?;
    let query = parse_query(&args.query).map_err(|e| usage(format!("query:{e}")))?;
    Ok(Instance { program, query })
}

fn parse_positions(s: &str, what: &str) -> Result<Vec<usize>, Failure> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| usage(format!("bad {what} `{s}`"))))
        .collect()
}

fn selection(args: &InstanceArgs, inst: &Instance) -> Result<SelectionMap, Failure> {
    let sig = inst.program.signature_with(&inst.query)?;
    if args.select_none {
        return Ok(SelectionMap::no_positions(&sig));
    }
    let mut sel = SelectionMap::new();
    for item in &args.select {
        let (name, positions) = item
            .split_once(':')
            .ok_or_else(|| usage(format!("selection `{item}` is not of the form pred:i,j")))?;
        let pred = Pred::new(name);
        if !sig.contains_key(&pred) {
            return Err(Error::UnknownPredicate(name.to_string()).into());
        }
        sel.select(pred, parse_positions(positions, "selection")?);
    }
    sel.complete_with_all(&sig);
    sel.validate(&sig)?;
    Ok(sel)
}

fn variants(args: &InstanceArgs) -> Result<VariantFlags, Failure> {
    let mut flags = VariantFlags {
        drop_pre_head: args.drop_pre_head,
        ..VariantFlags::default()
    };
    let clause_index = |s: &str, item: &str| -> Result<usize, Failure> {
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(k - 1),
            _ => Err(usage(format!("bad clause number in `{item}` (clauses count from 1)"))),
        }
    };
    for item in &args.prune {
        let parts: Vec<&str> = item.splitn(3, ':').collect();
        let [k, i, pos] = parts[..] else {
            return Err(usage(format!("prune `{item}` is not of the form clause:i:pos,pos")));
        };
        let i = i.parse().map_err(|_| usage(format!("bad prune `{item}`")))?;
        flags
            .body_prune
            .entry((clause_index(k, item)?, i))
            .or_default()
            .extend(parse_positions(pos, "prune")?);
    }
    for item in &args.supplement {
        let parts: Vec<&str> = item.split(':').collect();
        let [k, i, j] = parts[..] else {
            return Err(usage(format!("supplement `{item}` is not of the form clause:i:j")));
        };
        let bad = || usage(format!("bad supplement `{item}`"));
        flags.supplementary.push(Supplement {
            clause: clause_index(k, item)?,
            i: i.parse().map_err(|_| bad())?,
            j: j.parse().map_err(|_| bad())?,
        });
    }
    Ok(flags)
}

fn budget(args: &InstanceArgs) -> Budget {
    Budget::new(args.budget, args.max_answers.unwrap_or(usize::MAX)).with_max_steps(args.max_steps)
}

fn strategy(args: &InstanceArgs) -> Strategy {
    if args.depth_first {
        Strategy::DepthFirst
    } else {
        Strategy::IterativeDeepening
    }
}

fn magic_json(m: &MagicProgram) -> Value {
    let clauses: Vec<Value> = m
        .annotated()
        .map(|(c, p)| json!({"clause": c.to_string(), "provenance": p}))
        .collect();
    json!({"query": m.query.to_string(), "clauses": clauses})
}

fn strings<T: ToString>(xs: impl IntoIterator<Item = T>) -> Vec<String> {
    xs.into_iter().map(|x| x.to_string()).collect()
}

fn emit(out: &mut impl Write, output: Output, text: &str, value: &Value) -> std::io::Result<()> {
    match output {
        Output::Text => write!(out, "{text}"),
        Output::Json => writeln!(out, "{}", serde_json::to_string_pretty(value).expect("json values serialize")),
    }
}

fn report_text(reports: &[CheckReport]) -> String {
    let mut s = String::new();
    for r in reports {
        let status = if r.holds { "holds" } else { "FAILS" };
        s.push_str(&format!("{:<14} {status}  ({})\n", r.claim.to_string(), r.scope_note));
        for w in &r.witnesses {
            s.push_str(&format!("    witness: {w}\n"));
        }
    }
    s
}

/// Runs one parsed command, writing its output to `out`. Returns the exit code.
pub fn execute(cli: &Cli, out: &mut impl Write) -> Result<i32, Failure> {
    let io = |e: std::io::Error| usage(format!("write failed: {e}"));
    match &cli.command {
        Command::Transform(args) => {
            let inst = load(args)?;
            let m = magic_transform(&inst.program, &inst.query, &selection(args, &inst)?, &variants(args)?)?;
            emit(out, args.output, &m.render_annotated(), &magic_json(&m)).map_err(io)?;
        }
        Command::Adorn(args) => {
            let inst = load(args)?;
            let am = magic_adorned(&inst.program, &inst.query)?;
            let text = format!(
                "% adorned program, query {}\n{}\n% magic program\n{}",
                am.adorned.adorned_query,
                am.adorned.program,
                am.magic.render_annotated()
            );
            let origin: BTreeMap<String, String> = am
                .adorned
                .origin
                .iter()
                .map(|(a, o)| (a.to_string(), o.to_string()))
                .collect();
            let value = json!({
                "adorned_query": am.adorned.adorned_query.to_string(),
                "adorned": strings(am.adorned.program.clauses()),
                "origin": origin,
                "magic": magic_json(&am.magic),
            });
            emit(out, args.output, &text, &value).map_err(io)?;
        }
        Command::Solve(args) | Command::Trace(args) => {
            let inst = load(args)?;
            let b = budget(args);
            let report = ld_trace_with(&inst.program, &inst.query, &b, strategy(args));
            let tracing = matches!(cli.command, Command::Trace(_));
            let mut text = String::new();
            for a in &report.answers {
                text.push_str(&format!("{a}\n"));
            }
            if tracing {
                for c in &report.calls {
                    text.push_str(&format!("call    {c}\n"));
                }
                for s in &report.successes {
                    text.push_str(&format!("success {s}\n"));
                }
            }
            text.push_str(if report.complete { "complete\n" } else { "incomplete (budget reached)\n" });
            let mut value = json!({
                "answers": strings(&report.answers),
                "complete": report.complete,
                "budget": b,
            });
            if tracing {
                value["calls"] = json!(strings(&report.calls));
                value["successes"] = json!(strings(&report.successes));
                value["steps"] = json!(report.steps);
            }
            emit(out, args.output, &text, &value).map_err(io)?;
        }
        Command::Eval { instance: args, magic, eval } => {
            let inst = load(args)?;
            let strategy = match eval {
                EvalArg::Naive => EvalStrategy::Naive,
                EvalArg::SemiNaive => EvalStrategy::SemiNaive,
            };
            let model = if *magic {
                let m = magic_transform(&inst.program, &inst.query, &selection(args, &inst)?, &variants(args)?)?;
                least_model_for(&m.program, &inst.query, strategy)?
            } else {
                least_model_for(&inst.program, &inst.query, strategy)?
            };
            let text: String = model.atoms.iter().map(|a| format!("{a}.\n")).collect();
            emit(out, args.output, &text, &serde_json::to_value(&model).expect("model serializes")).map_err(io)?;
        }
        Command::Check { instance: args, adorned } => {
            let inst = load(args)?;
            let sel = selection(args, &inst)?;
            let flags = variants(args)?;
            if !flags.supplementary_only() {
                return Err(usage("check accepts only --supplement among the variant flags"));
            }
            let opts = CheckOptions {
                supplementary: (!flags.supplementary.is_empty()).then_some(flags),
                include_adorned: *adorned,
                budget: None,
            };
            let reports = check_all(&inst.program, &inst.query, &sel, &opts)?;
            let value = serde_json::to_value(&reports).expect("reports serialize");
            emit(out, args.output, &report_text(&reports), &value).map_err(io)?;
            if reports.iter().any(|r| !r.holds) {
                return Ok(EXIT_VIOLATION);
            }
        }
        Command::Fuzz(args) => {
            let config = FuzzConfig {
                seeds: args.seeds,
                first_seed: args.seed,
                selections: args.selections,
                program: RandomConfig {
                    max_preds: args.max_preds,
                    max_arity: args.max_arity,
                    max_clauses: args.max_clauses,
                    max_body: args.max_body,
                    const_count: args.consts,
                },
                max_steps: args.max_steps,
            };
            if [args.max_preds, args.max_arity, args.max_clauses, args.max_body, args.consts].contains(&0) {
                return Err(usage("program bounds must be at least 1"));
            }
            let summary = verify::fuzz(&config);
            let mut text = format!(
                "{} programs ({} recursive, {} with exhausted LD-trees), {} selections each\n",
                summary.programs, summary.recursive_programs, summary.complete_traces, config.selections
            );
            for (claim, t) in &summary.claims {
                text.push_str(&format!("{:<14} {}/{} hold", claim.to_string(), t.holds, t.runs));
                if t.partial > 0 {
                    text.push_str(&format!(" ({} on budget-limited traces)", t.partial));
                }
                text.push('\n');
                for c in &t.counterexamples {
                    text.push_str(&format!(
                        "    seed {} selection [{}]\n    minimal program:\n{}    query {}\n",
                        c.seed,
                        c.selection,
                        indent(&c.shrunk_program),
                        c.shrunk_query
                    ));
                }
            }
            let value = serde_json::to_value(&summary).expect("summary serializes");
            emit(out, args.output, &text, &value).map_err(io)?;
            if !summary.all_hold() {
                return Ok(EXIT_VIOLATION);
            }
        }
    }
    Ok(EXIT_OK)
}

fn indent(s: &str) -> String {
    s.lines().map(|l| format!("      {l}\n")).collect()
}

/// Entry point: parses `argv`, runs the command and returns the exit code.
pub fn main_with_args(argv: impl IntoIterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(&cli, &mut out) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            EXIT_USAGE
        }
    }
}
