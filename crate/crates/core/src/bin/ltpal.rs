use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use ltpal::io::{self, ScoresDocument};
use ltpal::mppe::{self, ExternalScorer, Overlap, ScoreTable};
use ltpal::query::{
    check_missing_wrapped, check_wrapped, quantify, CheckOptions, PathSet, Quantifier, Reading,
    Scope, Template, VerdictReport, Window, DEFAULT_PATH_CAP,
};
use ltpal::{parse_formula, parse_pal, pretty, AgentId, Error, Pal, Result, TransitionSystem};

/// Model checker for temporal-epistemic queries over classifier frame streams.
#[derive(Parser)]
#[command(name = "ltpal", version)]
struct Cli {
    /// Worker threads for path checking.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Largest number of total paths examined before a verdict is undecided.
    #[arg(long, global = true, env = "LTPAL_PATH_CAP", default_value_t = DEFAULT_PATH_CAP)]
    cap: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a transition system from a frames document.
    Build {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// List total paths in enumeration order.
    Paths {
        #[arg(long)]
        ts: PathBuf,
        #[arg(long, default_value_t = 1000)]
        max: u64,
    },
    /// Check a formula on one path, on all paths, or on the most probable path.
    Check {
        #[arg(long)]
        ts: PathBuf,
        #[arg(long)]
        formula: String,
        #[command(flatten)]
        which: WhichPaths,
        /// Evaluate from the first frame instead of the initial dummy.
        #[arg(long)]
        skip_dummies: bool,
    },
    /// Classify a query template.
    Classify {
        #[arg(long)]
        ts: PathBuf,
        #[arg(long)]
        template: String,
        /// Comma-separated hole fillers (atoms, or epistemic formulas).
        #[arg(long)]
        atoms: String,
        /// Agent ids separated by commas, or a group name from the frames document.
        #[arg(long, conflicts_with = "agent", required_unless_present = "agent")]
        group: Option<String>,
        #[arg(long)]
        agent: Option<String>,
        #[arg(long, value_enum)]
        mode: Mode,
        /// JSON list of candidate announcements for the missing-information modes.
        #[arg(long)]
        candidates: Option<PathBuf>,
        #[arg(long)]
        skip_dummies: bool,
    },
    /// Extract the most probable path.
    Mppe {
        #[arg(long)]
        ts: PathBuf,
        #[command(flatten)]
        scoring: Scoring,
        /// Write the per-frame corrected labels here.
        #[arg(long)]
        emit_corrected: Option<PathBuf>,
        /// Write the system with its edge scores here.
        #[arg(long)]
        save_ts: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(multiple = false)]
struct WhichPaths {
    /// Index of a total path.
    #[arg(long)]
    path: Option<u64>,
    /// Every total path (the default).
    #[arg(long)]
    all: bool,
    /// Only the most probable path under the stored or overlap scores.
    #[arg(long)]
    mppe_only: bool,
}

#[derive(Args)]
#[group(multiple = false)]
struct Scoring {
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long, value_enum)]
    scorer: Option<BuiltinScorer>,
    /// Shell command speaking the line-delimited JSON scorer protocol.
    #[arg(long)]
    scorer_cmd: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BuiltinScorer {
    Overlap,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Verified,
    Possible,
    Robust,
    PossibleAgent,
    MissingVerified,
    MissingPossible,
}

impl Mode {
    fn reading(self) -> Reading {
        match self {
            Mode::Verified | Mode::Robust | Mode::MissingVerified => Reading::Verified,
            Mode::Possible | Mode::PossibleAgent | Mode::MissingPossible => Reading::Possible,
        }
    }

    fn missing(self) -> bool {
        matches!(self, Mode::MissingVerified | Mode::MissingPossible)
    }
}

#[derive(Serialize)]
struct CheckReport {
    mode: &'static str,
    formula: String,
    result: Option<bool>,
    witness: Option<Vec<String>>,
    paths_checked: u64,
    capped: bool,
    evaluation: &'static str,
}

fn emit<T: Serialize>(value: &T) {
    print!("{}", io::to_json(value));
}

fn verdict_code(result: Option<bool>) -> u8 {
    match result {
        Some(true) => 0,
        Some(false) => 1,
        None => 3,
    }
}

/// Split on commas that are not nested inside brackets.
fn split_args(list: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in list.char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                out.push(list[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(list[start..].trim());
    out
}

fn resolve_group(ts: &TransitionSystem, arg: &str) -> Result<BTreeSet<AgentId>> {
    if let Some(g) = ts.groups().get(arg.trim()) {
        return Ok(g.clone());
    }
    let group = arg
        .split(',')
        .map(|s| {
            let a = AgentId::new(s.trim())?;
            if ts.agents().contains(&a) {
                Ok(a)
            } else {
                Err(Error::UnknownAgent(a.to_string()))
            }
        })
        .collect::<Result<BTreeSet<_>>>()?;
    if group.is_empty() {
        return Err(Error::EmptyGroup);
    }
    Ok(group)
}

fn resolve_agent(ts: &TransitionSystem, name: &str) -> Result<AgentId> {
    let a = AgentId::new(name.trim())?;
    if ts.agents().contains(&a) {
        Ok(a)
    } else {
        Err(Error::UnknownAgent(a.to_string()))
    }
}

fn table_for(
    ts: &TransitionSystem,
    stored: Option<ScoreTable>,
    scoring: Option<&Scoring>,
) -> Result<ScoreTable> {
    if let Some(s) = scoring {
        if let Some(path) = &s.scores {
            let doc: ScoresDocument = io::read_json(path)?;
            return io::scores_table(ts, &doc).map_err(|e| prefix(path, e));
        }
        if let Some(cmd) = &s.scorer_cmd {
            let mut ext = ExternalScorer::spawn(cmd)?;
            return mppe::score_edges(ts, &mut ext);
        }
        if s.scorer.is_some() {
            return mppe::score_edges(ts, &mut Overlap);
        }
    }
    match stored {
        Some(t) => Ok(t),
        None => mppe::score_edges(ts, &mut Overlap),
    }
}

fn prefix(path: &Path, e: Error) -> Error {
    match e {
        Error::Ingest {
            path: inner,
            message,
        } => Error::Ingest {
            path: format!("{}: {inner}", path.display()),
            message,
        },
        other => other,
    }
}

fn run(cli: Cli) -> Result<u8> {
    let parallel = cli.jobs > 1 && ltpal::par::AVAILABLE;
    if cli.jobs > 1 && !ltpal::par::AVAILABLE {
        eprintln!("note: built without parallel support, --jobs ignored");
    }
    #[cfg(feature = "parallel")]
    if parallel {
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    let cap = cli.cap;

    match cli.command {
        Command::Build {
            frames,
            rules,
            output,
        } => {
            let doc = io::read_frames(&frames)?;
            let rules = rules.map(|r| io::read_rules(&r)).transpose()?;
            let ts = io::ingest(&doc, rules.as_ref()).map_err(|e| prefix(&frames, e))?;
            io::write_system(&output, &ts, None)?;
            emit(&json!({
                "frames": ts.frame_count(),
                "states": ts.state_count(),
                "edges": ts.edge_count(),
                "total_paths": ts.total_path_count(),
                "output": output.display().to_string(),
            }));
            Ok(0)
        }
        Command::Paths { ts, max } => {
            let (ts, _) = io::read_system(&ts)?;
            let count = ts.total_path_count();
            let paths: Vec<Vec<&str>> = ts
                .total_paths()
                .take(max as usize)
                .map(|p| p.ids(&ts))
                .collect();
            let truncated = count.is_none_or(|c| c > paths.len() as u128);
            emit(&json!({ "count": count, "truncated": truncated, "paths": paths }));
            Ok(0)
        }
        Command::Check {
            ts,
            formula,
            which,
            skip_dummies,
        } => {
            let (ts, stored) = io::read_system(&ts)?;
            let phi = parse_formula(&formula)?.resolve_groups(ts.groups());
            let paths = if let Some(i) = which.path {
                PathSet::Single(ts.path_at(i as u128)?)
            } else if which.mppe_only {
                let table = table_for(&ts, stored, None)?;
                PathSet::Single(mppe::mppe(&ts, &table).path)
            } else {
                PathSet::Exhaustive { cap }
            };
            let evaluation = match (&paths, which.mppe_only) {
                (PathSet::Exhaustive { .. }, _) => "exhaustive",
                (_, true) => "mppe_only",
                _ => "single_path",
            };
            let opts = CheckOptions {
                paths,
                window: if skip_dummies {
                    Window::FromFirstFrame
                } else {
                    Window::Total
                },
                parallel,
            };
            let v = quantify(&ts, &phi, Quantifier::All, &opts)?;
            emit(&CheckReport {
                mode: "check",
                formula: pretty(&phi),
                result: v.result,
                witness: v
                    .path
                    .as_ref()
                    .map(|p| p.ids(&ts).into_iter().map(String::from).collect()),
                paths_checked: v.paths_checked,
                capped: v.capped,
                evaluation,
            });
            Ok(verdict_code(v.result))
        }
        Command::Classify {
            ts,
            template,
            atoms,
            group,
            agent,
            mode,
            candidates,
            skip_dummies,
        } => {
            let (ts, _) = io::read_system(&ts)?;
            let template = Template::new(
                Template::parse(&template)?
                    .skeleton()
                    .resolve_groups(ts.groups()),
            )?;
            let args = split_args(&atoms)
                .into_iter()
                .map(|a| Ok(parse_pal(a)?.resolve_groups(ts.groups())))
                .collect::<Result<Vec<Pal>>>()?;
            if args.iter().any(|a| !matches!(a, Pal::Atom(_))) {
                eprintln!("note: non-atomic hole fillers, checking the generalized query");
            }
            let scope = match (&group, &agent) {
                (Some(g), _) => Scope::Group(resolve_group(&ts, g)?),
                (None, Some(a)) => Scope::Agent(resolve_agent(&ts, a)?),
                (None, None) => unreachable!("clap requires one of --group/--agent"),
            };
            let group_mode = matches!(mode, Mode::Verified | Mode::Possible);
            let agent_mode = matches!(mode, Mode::Robust | Mode::PossibleAgent);
            match (&scope, group_mode, agent_mode) {
                (Scope::Agent(_), true, _) => {
                    return Err(Error::Ingest {
                        path: "--mode".into(),
                        message: "this mode needs --group".into(),
                    })
                }
                (Scope::Group(_), _, true) => {
                    return Err(Error::Ingest {
                        path: "--mode".into(),
                        message: "this mode needs --agent".into(),
                    })
                }
                _ => {}
            }
            let opts = CheckOptions {
                paths: PathSet::Exhaustive { cap },
                window: if skip_dummies {
                    Window::FromFirstFrame
                } else {
                    Window::Total
                },
                parallel,
            };
            let reading = mode.reading();
            if mode.missing() {
                let Some(file) = candidates else {
                    return Err(Error::NoCandidates);
                };
                let text = fs::read_to_string(&file).map_err(|e| Error::Ingest {
                    path: file.display().to_string(),
                    message: e.to_string(),
                })?;
                let pool: Vec<Pal> = io::parse_candidates(&text)
                    .map_err(|e| prefix(&file, e))?
                    .into_iter()
                    .map(|p| p.resolve_groups(ts.groups()))
                    .collect();
                let r =
                    check_missing_wrapped(&ts, &template, &args, &scope, reading, &pool, &opts)?;
                let report = VerdictReport::from_missing(&ts, &scope, reading, &r, &opts);
                emit(&report);
                Ok(verdict_code(report.result))
            } else {
                let v = check_wrapped(&ts, &template, &args, &scope, reading, &opts)?;
                emit(&VerdictReport::from_verdict(
                    &ts, &scope, reading, &v, &opts,
                ));
                Ok(verdict_code(v.result))
            }
        }
        Command::Mppe {
            ts,
            scoring,
            emit_corrected,
            save_ts,
        } => {
            let (ts, stored) = io::read_system(&ts)?;
            let table = table_for(&ts, stored, Some(&scoring))?;
            let (best, stats) = mppe::mppe_with_stats(&ts, &table, parallel);
            if let Some(out) = emit_corrected {
                let frames = mppe::correct_stream(&ts, &table);
                fs::write(&out, io::to_json(&json!({ "frames": frames }))).map_err(|e| {
                    Error::Ingest {
                        path: out.display().to_string(),
                        message: e.to_string(),
                    }
                })?;
            }
            if let Some(out) = save_ts {
                io::write_system(&out, &ts, Some(&table))?;
            }
            emit(&json!({
                "path": best.path.ids(&ts),
                "score": best.score(),
                "log_score": best.log_score,
                "edge_visits": stats.edge_visits,
            }));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
