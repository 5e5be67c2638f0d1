//! Reliability verdicts for query templates.
//!
//! A [`Template`] is a temporal formula with holes `$1 .. $k`. Each check
//! fills hole `k` with a wrapped atom and quantifies over total paths:
//!
//! | check            | wrapper       | quantifier |
//! |------------------|---------------|------------|
//! | verified (group) | `D{A} p`      | all paths  |
//! | possible (group) | `!D{A} !p`    | some path  |
//! | robust (agent)   | `K{i} p`      | all paths  |
//! | possible (agent) | `!K{i} !p`    | some path  |
//!
//! Missing-information checks look for announcements `psi` that repair a
//! failing check: the plain check must fail (some path fails in the
//! universal readings, every path fails in the existential ones) while the
//! template filled with `[psi] wrapper(p)` passes. Candidates come from the
//! caller; nothing is synthesized.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::formula::{Formula, Pal};
use crate::model::{AgentId, Atom};
use crate::par;
use crate::syntax::{parse_formula, pretty_pal};
use crate::system::{ExecPath, TransitionSystem};
use crate::temporal::CompiledFormula;

pub const DEFAULT_PATH_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    skeleton: Formula,
    arity: usize,
}

impl Template {
    /// Arity is the largest hole index; every index below it must occur.
    pub fn new(skeleton: Formula) -> Result<Self> {
        let holes = skeleton.placeholders();
        let arity = holes.iter().next_back().copied().unwrap_or(0);
        if let Some(missing) = (1..=arity).find(|k| !holes.contains(k)) {
            return Err(Error::Template(format!(
                "placeholder ${missing} is missing (arity {arity})"
            )));
        }
        Ok(Template { skeleton, arity })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Template::new(parse_formula(text)?)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn skeleton(&self) -> &Formula {
        &self.skeleton
    }
}

/// Fill hole `k` with `args[k - 1]`.
pub fn substitute(template: &Template, args: &[Pal]) -> Result<Formula> {
    if args.len() != template.arity {
        return Err(Error::Template(format!(
            "template takes {} arguments, got {}",
            template.arity,
            args.len()
        )));
    }
    Ok(template
        .skeleton
        .map_pal(&mut |p| p.fill(&mut |k| args[k - 1].clone())))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    Group(BTreeSet<AgentId>),
    Agent(AgentId),
}

/// Universal (`D`/`K`) or existential (`!D!`/`!K!`) reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reading {
    Verified,
    Possible,
}

impl Reading {
    fn quantifier(self) -> Quantifier {
        match self {
            Reading::Verified => Quantifier::All,
            Reading::Possible => Quantifier::Exists,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    All,
    Exists,
}

/// Which part of a total path formulas are evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    /// The whole path, dummy endpoints included.
    #[default]
    Total,
    /// The path minus the initial dummy.
    FromFirstFrame,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathSet {
    /// Enumerate total paths in order, at most `cap` of them.
    Exhaustive { cap: u64 },
    /// Only this total path, typically the most probable one.
    Single(ExecPath),
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub paths: PathSet,
    pub window: Window,
    pub parallel: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            paths: PathSet::Exhaustive {
                cap: DEFAULT_PATH_CAP,
            },
            window: Window::Total,
            parallel: par::AVAILABLE,
        }
    }
}

/// Outcome of quantifying a formula over paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    /// `None` when the cap was hit before the answer was settled.
    pub result: Option<bool>,
    /// Witness for a true existential, counterexample for a false universal.
    pub path: Option<ExecPath>,
    pub paths_checked: u64,
    pub capped: bool,
}

/// Quantify `phi` over the configured paths. The reported path is always the
/// first deciding one in enumeration order.
pub fn quantify(
    ts: &TransitionSystem,
    phi: &Formula,
    quantifier: Quantifier,
    opts: &CheckOptions,
) -> Result<Verdict> {
    let compiled = CompiledFormula::new(ts, phi)?;
    let window = opts.window;
    let sat = |p: &ExecPath| match window {
        Window::Total => compiled.eval(p),
        Window::FromFirstFrame => compiled.eval(&p.slice(1, p.len())),
    };
    let deciding = |p: &ExecPath| match quantifier {
        Quantifier::All => !sat(p),
        Quantifier::Exists => sat(p),
    };
    let settled = quantifier == Quantifier::Exists;
    match &opts.paths {
        PathSet::Single(path) => {
            let hit = deciding(path);
            Ok(Verdict {
                result: Some(if hit { settled } else { !settled }),
                path: hit.then(|| path.clone()),
                paths_checked: 1,
                capped: false,
            })
        }
        PathSet::Exhaustive { cap } => {
            let total = ts.total_path_count().unwrap_or(u128::MAX);
            let limit = total.min(*cap as u128) as u64;
            let capped = total > *cap as u128;
            let found = par::find_first(limit, opts.parallel, |i| {
                deciding(&ts.path_at(i as u128).expect("index below path count"))
            });
            Ok(match found {
                Some(i) => Verdict {
                    result: Some(settled),
                    path: Some(ts.path_at(i as u128)?),
                    paths_checked: i + 1,
                    capped: false,
                },
                None => Verdict {
                    result: if capped { None } else { Some(!settled) },
                    path: None,
                    paths_checked: limit,
                    capped,
                },
            })
        }
    }
}

/// The hole filler for `atom` under `scope` and `reading`.
pub fn wrap(scope: &Scope, reading: Reading, atom: Pal) -> Pal {
    let modal = |p: Pal| match scope {
        Scope::Group(g) => Pal::Dist(g.clone(), Box::new(p)),
        Scope::Agent(i) => Pal::knows(i.clone(), p),
    };
    match reading {
        Reading::Verified => modal(atom),
        Reading::Possible => Pal::not(modal(Pal::not(atom))),
    }
}

/// The template instance checked for `scope`/`reading`, with every filler
/// optionally placed under the announcement `[psi]`.
pub fn wrapped_formula(
    template: &Template,
    args: &[Pal],
    scope: &Scope,
    reading: Reading,
    announce: Option<&Pal>,
) -> Result<Formula> {
    if let Scope::Group(g) = scope {
        if g.is_empty() {
            return Err(Error::EmptyGroup);
        }
    }
    let fillers: Vec<Pal> = args
        .iter()
        .map(|a| {
            let w = wrap(scope, reading, a.clone());
            match announce {
                Some(psi) => Pal::announce(psi.clone(), w),
                None => w,
            }
        })
        .collect();
    substitute(template, &fillers)
}

/// Check `template` with arbitrary epistemic arguments in place of atoms.
pub fn check_wrapped(
    ts: &TransitionSystem,
    template: &Template,
    args: &[Pal],
    scope: &Scope,
    reading: Reading,
    opts: &CheckOptions,
) -> Result<Verdict> {
    let phi = wrapped_formula(template, args, scope, reading, None)?;
    quantify(ts, &phi, reading.quantifier(), opts)
}

fn atoms_as_pal(atoms: &[Atom]) -> Vec<Pal> {
    atoms.iter().cloned().map(Pal::Atom).collect()
}

/// Every total path satisfies the template with holes `D{A} p_k`.
pub fn check_verified_group(
    ts: &TransitionSystem,
    template: &Template,
    atoms: &[Atom],
    group: &BTreeSet<AgentId>,
    opts: &CheckOptions,
) -> Result<Verdict> {
    let scope = Scope::Group(group.clone());
    check_wrapped(
        ts,
        template,
        &atoms_as_pal(atoms),
        &scope,
        Reading::Verified,
        opts,
    )
}

/// Some total path satisfies the template with holes `!D{A} !p_k`.
pub fn check_possible_group(
    ts: &TransitionSystem,
    template: &Template,
    atoms: &[Atom],
    group: &BTreeSet<AgentId>,
    opts: &CheckOptions,
) -> Result<Verdict> {
    let scope = Scope::Group(group.clone());
    check_wrapped(
        ts,
        template,
        &atoms_as_pal(atoms),
        &scope,
        Reading::Possible,
        opts,
    )
}

/// Every total path satisfies the template with holes `K{i} p_k`.
pub fn check_robust_agent(
    ts: &TransitionSystem,
    template: &Template,
    atoms: &[Atom],
    agent: &AgentId,
    opts: &CheckOptions,
) -> Result<Verdict> {
    let scope = Scope::Agent(agent.clone());
    check_wrapped(
        ts,
        template,
        &atoms_as_pal(atoms),
        &scope,
        Reading::Verified,
        opts,
    )
}

/// Some total path satisfies the template with holes `!K{i} !p_k`.
pub fn check_possible_agent(
    ts: &TransitionSystem,
    template: &Template,
    atoms: &[Atom],
    agent: &AgentId,
    opts: &CheckOptions,
) -> Result<Verdict> {
    let scope = Scope::Agent(agent.clone());
    check_wrapped(
        ts,
        template,
        &atoms_as_pal(atoms),
        &scope,
        Reading::Possible,
        opts,
    )
}

#[derive(Debug, Clone)]
pub struct Qualified {
    /// Position in the candidate list.
    pub index: usize,
    pub candidate: Pal,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct MissingReport {
    /// The plain check; candidates are only considered when it is `Some(false)`.
    pub base: Verdict,
    pub qualifying: Vec<Qualified>,
    /// Candidates whose announced check hit the path cap.
    pub undecided: Vec<usize>,
}

impl MissingReport {
    /// `None` if the answer depends on paths beyond the cap.
    pub fn result(&self) -> Option<bool> {
        match self.base.result {
            None => None,
            Some(true) => Some(false),
            Some(false) if !self.qualifying.is_empty() => Some(true),
            Some(false) if !self.undecided.is_empty() => None,
            Some(false) => Some(false),
        }
    }
}

/// Candidates that qualify as verified-missing (`Reading::Verified`) or
/// possible-missing (`Reading::Possible`) information.
pub fn check_missing_info(
    ts: &TransitionSystem,
    template: &Template,
    atoms: &[Atom],
    scope: &Scope,
    reading: Reading,
    candidates: &[Pal],
    opts: &CheckOptions,
) -> Result<MissingReport> {
    let args = atoms_as_pal(atoms);
    check_missing_wrapped(ts, template, &args, scope, reading, candidates, opts)
}

/// [`check_missing_info`] with arbitrary epistemic arguments.
pub fn check_missing_wrapped(
    ts: &TransitionSystem,
    template: &Template,
    args: &[Pal],
    scope: &Scope,
    reading: Reading,
    candidates: &[Pal],
    opts: &CheckOptions,
) -> Result<MissingReport> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let base = check_wrapped(ts, template, args, scope, reading, opts)?;
    let mut report = MissingReport {
        base,
        qualifying: Vec::new(),
        undecided: Vec::new(),
    };
    if report.base.result != Some(false) {
        return Ok(report);
    }
    for (index, psi) in candidates.iter().enumerate() {
        let phi = wrapped_formula(template, args, scope, reading, Some(psi))?;
        let verdict = quantify(ts, &phi, reading.quantifier(), opts)?;
        match verdict.result {
            Some(true) => report.qualifying.push(Qualified {
                index,
                candidate: psi.clone(),
                verdict,
            }),
            Some(false) => {}
            None => report.undecided.push(index),
        }
    }
    Ok(report)
}

/// Stable name of a check, as used in reports.
pub fn mode_name(scope: &Scope, reading: Reading, missing: bool) -> &'static str {
    match (scope, reading, missing) {
        (Scope::Group(_), Reading::Verified, false) => "verified_group",
        (Scope::Group(_), Reading::Possible, false) => "possible_group",
        (Scope::Agent(_), Reading::Verified, false) => "robust_agent",
        (Scope::Agent(_), Reading::Possible, false) => "possible_agent",
        (Scope::Group(_), Reading::Verified, true) => "missing_verified_group",
        (Scope::Group(_), Reading::Possible, true) => "missing_possible_group",
        (Scope::Agent(_), Reading::Verified, true) => "missing_verified_agent",
        (Scope::Agent(_), Reading::Possible, true) => "missing_possible_agent",
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MissingEntry {
    pub formula: String,
    pub witness: Option<Vec<String>>,
}

/// JSON verdict report.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct VerdictReport {
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agent: Option<String>,
    pub result: Option<bool>,
    pub witness: Option<Vec<String>>,
    pub paths_checked: u64,
    pub capped: bool,
    pub evaluation: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qualifying: Option<Vec<MissingEntry>>,
}

fn ids(ts: &TransitionSystem, p: &Option<ExecPath>) -> Option<Vec<String>> {
    p.as_ref()
        .map(|p| p.ids(ts).into_iter().map(String::from).collect())
}

impl VerdictReport {
    fn header(scope: &Scope) -> (Option<Vec<String>>, Option<String>) {
        match scope {
            Scope::Group(g) => (Some(g.iter().map(|a| a.to_string()).collect()), None),
            Scope::Agent(i) => (None, Some(i.to_string())),
        }
    }

    pub fn from_verdict(
        ts: &TransitionSystem,
        scope: &Scope,
        reading: Reading,
        verdict: &Verdict,
        opts: &CheckOptions,
    ) -> Self {
        let (group, agent) = Self::header(scope);
        VerdictReport {
            mode: mode_name(scope, reading, false).to_string(),
            group,
            agent,
            result: verdict.result,
            witness: ids(ts, &verdict.path),
            paths_checked: verdict.paths_checked,
            capped: verdict.capped,
            evaluation: evaluation_name(opts),
            qualifying: None,
        }
    }

    pub fn from_missing(
        ts: &TransitionSystem,
        scope: &Scope,
        reading: Reading,
        report: &MissingReport,
        opts: &CheckOptions,
    ) -> Self {
        let (group, agent) = Self::header(scope);
        let paths_checked = report.base.paths_checked
            + report
                .qualifying
                .iter()
                .map(|q| q.verdict.paths_checked)
                .sum::<u64>();
        VerdictReport {
            mode: mode_name(scope, reading, true).to_string(),
            group,
            agent,
            result: report.result(),
            witness: ids(ts, &report.base.path),
            paths_checked,
            capped: report.base.capped || !report.undecided.is_empty(),
            evaluation: evaluation_name(opts),
            qualifying: Some(
                report
                    .qualifying
                    .iter()
                    .map(|q| MissingEntry {
                        formula: pretty_pal(&q.candidate),
                        witness: ids(ts, &q.verdict.path),
                    })
                    .collect(),
            ),
        }
    }
}

fn evaluation_name(opts: &CheckOptions) -> &'static str {
    match opts.paths {
        PathSet::Exhaustive { .. } => "exhaustive",
        PathSet::Single(_) => "mppe_only",
    }
}
