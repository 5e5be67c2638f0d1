//! Most probable path extraction.
//!
//! Transitions are scored by how similar the labels of their endpoints are;
//! the best total path maximizes the product of its edge scores. Products are
//! accumulated as sums of logarithms so long streams do not underflow.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Atom;
use crate::par;
use crate::system::{ExecPath, TransitionSystem};

/// Smallest score an edge can carry.
pub const SCORE_FLOOR: f64 = 1e-6;

/// Similarity between the class tags of two worlds.
pub trait Similarity {
    fn score(&mut self, a: &BTreeSet<String>, b: &BTreeSet<String>) -> Result<f64>;
}

/// Jaccard overlap of the two tag sets; two empty sets are identical.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overlap;

impl Similarity for Overlap {
    fn score(&mut self, a: &BTreeSet<String>, b: &BTreeSet<String>) -> Result<f64> {
        let union = a.union(b).count();
        if union == 0 {
            return Ok(1.0);
        }
        Ok(a.intersection(b).count() as f64 / union as f64)
    }
}

#[derive(Serialize)]
struct ScorerRequest<'a> {
    a: &'a BTreeSet<String>,
    b: &'a BTreeSet<String>,
}

#[derive(Deserialize)]
struct ScorerResponse {
    score: f64,
}

/// An external process speaking line-delimited JSON: one
/// `{"a":[...],"b":[...]}` request per line, one `{"score":x}` reply per line.
pub struct ExternalScorer {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl ExternalScorer {
    /// Run `command` through `sh -c`.
    pub fn spawn(command: &str) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ExternalScorer {
            child,
            stdin,
            stdout,
        })
    }
}

impl Similarity for ExternalScorer {
    fn score(&mut self, a: &BTreeSet<String>, b: &BTreeSet<String>) -> Result<f64> {
        let req = serde_json::to_string(&ScorerRequest { a, b }).expect("string sets serialize");
        writeln!(self.stdin, "{req}")?;
        self.stdin.flush()?;
        let mut line = String::new();
        if self.stdout.read_line(&mut line)? == 0 {
            return Err(Error::Scorer("external scorer closed its output".into()));
        }
        let resp: ScorerResponse = serde_json::from_str(line.trim())
            .map_err(|e| Error::Scorer(format!("bad reply {:?}: {e}", line.trim())))?;
        Ok(resp.score)
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Score for every edge: `scores[k][i][j]` is the edge from world `i` of
/// layer `k` to world `j` of layer `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    scores: Vec<Vec<Vec<f64>>>,
}

fn validate(raw: f64, what: impl FnOnce() -> String) -> Result<f64> {
    if raw.is_nan() || raw < 0.0 {
        return Err(Error::Scorer(format!("invalid score {raw} for {}", what())));
    }
    Ok(raw.clamp(SCORE_FLOOR, 1.0))
}

impl ScoreTable {
    /// Every edge scored `value`.
    pub fn uniform(ts: &TransitionSystem, value: f64) -> Result<Self> {
        let value = validate(value, || "uniform table".into())?;
        let scores = ts
            .layers()
            .windows(2)
            .map(|w| vec![vec![value; w[1].len()]; w[0].len()])
            .collect();
        Ok(ScoreTable { scores })
    }

    /// Table from explicit `(from, to, score)` entries. Real edges must all be
    /// present; edges touching a dummy endpoint default to `1.0`.
    pub fn from_edges<S: AsRef<str>>(
        ts: &TransitionSystem,
        edges: impl IntoIterator<Item = (S, S, f64)>,
    ) -> Result<Self> {
        let last = ts.layers().len() - 2;
        let mut scores: Vec<Vec<Vec<Option<f64>>>> = ts
            .layers()
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let default = (k == 0 || k == last).then_some(1.0);
                vec![vec![default; w[1].len()]; w[0].len()]
            })
            .collect();
        for (n, (from, to, raw)) in edges.into_iter().enumerate() {
            let (from, to) = (from.as_ref(), to.as_ref());
            let path = format!("edges[{n}]");
            let (kf, i) = ts
                .locate(from)
                .ok_or_else(|| Error::ingest(&path, format!("unknown world id `{from}`")))?;
            let (kt, j) = ts
                .locate(to)
                .ok_or_else(|| Error::ingest(&path, format!("unknown world id `{to}`")))?;
            if kt != kf + 1 {
                return Err(Error::ingest(
                    path,
                    format!("`{from}` -> `{to}` is not a transition"),
                ));
            }
            scores[kf][i][j] = Some(validate(raw, || format!("{from} -> {to}"))?);
        }
        let mut out = Vec::with_capacity(scores.len());
        for (k, layer) in scores.into_iter().enumerate() {
            let mut rows = Vec::with_capacity(layer.len());
            for (i, row) in layer.into_iter().enumerate() {
                let mut vals = Vec::with_capacity(row.len());
                for (j, s) in row.into_iter().enumerate() {
                    vals.push(s.ok_or_else(|| {
                        Error::ingest(
                            "edges",
                            format!(
                                "no score for `{}` -> `{}`",
                                ts.world_id(k, i),
                                ts.world_id(k + 1, j)
                            ),
                        )
                    })?);
                }
                rows.push(vals);
            }
            out.push(rows);
        }
        Ok(ScoreTable { scores: out })
    }

    pub fn get(&self, layer: usize, from: usize, to: usize) -> f64 {
        self.scores[layer][from][to]
    }

    /// Score of the edge between two world ids, if it is a transition.
    pub fn score(&self, ts: &TransitionSystem, from: &str, to: &str) -> Option<f64> {
        let (kf, i) = ts.locate(from)?;
        let (kt, j) = ts.locate(to)?;
        (kt == kf + 1).then(|| self.scores[kf][i][j])
    }

    /// `(from, to, score)` in lexicographic edge order.
    pub fn entries<'a>(
        &'a self,
        ts: &'a TransitionSystem,
    ) -> impl Iterator<Item = (&'a str, &'a str, f64)> + 'a {
        ts.edges().map(move |(k, i, j)| {
            (
                ts.world_id(k, i),
                ts.world_id(k + 1, j),
                self.scores[k][i][j],
            )
        })
    }

    pub fn covers(&self, ts: &TransitionSystem) -> bool {
        self.scores.len() + 1 == ts.layers().len()
            && self.scores.iter().enumerate().all(|(k, rows)| {
                rows.len() == ts.layer(k).len()
                    && rows.iter().all(|r| r.len() == ts.layer(k + 1).len())
            })
    }

    /// Sum of log-scores along `path`.
    pub fn log_score(&self, path: &ExecPath) -> f64 {
        let p = path.positions();
        p.windows(2)
            .enumerate()
            .map(|(n, w)| self.scores[path.start_layer() + n][w[0]][w[1]].ln())
            .sum()
    }
}

fn tags(atoms: &BTreeSet<Atom>) -> BTreeSet<String> {
    atoms.iter().map(|a| a.class().to_string()).collect()
}

/// Score every transition with `scorer`, clamped to `[SCORE_FLOOR, 1]`.
/// Edges leaving the initial or entering the final dummy score exactly `1.0`.
pub fn score_edges(ts: &TransitionSystem, scorer: &mut dyn Similarity) -> Result<ScoreTable> {
    let last = ts.layers().len() - 2;
    let mut scores = Vec::with_capacity(last + 1);
    for (k, pair) in ts.layers().windows(2).enumerate() {
        let (from, to) = (&pair[0], &pair[1]);
        let mut rows = Vec::with_capacity(from.len());
        for u in from.worlds() {
            let mut row = Vec::with_capacity(to.len());
            for v in to.worlds() {
                if k == 0 || k == last {
                    row.push(1.0);
                    continue;
                }
                let raw = scorer.score(&tags(&u.atoms), &tags(&v.atoms))?;
                row.push(validate(raw, || format!("{} -> {}", u.id, v.id))?);
            }
            rows.push(row);
        }
        scores.push(rows);
    }
    Ok(ScoreTable { scores })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPath {
    pub path: ExecPath,
    pub log_score: f64,
}

impl ScoredPath {
    /// Product of the edge scores.
    pub fn score(&self) -> f64 {
        self.log_score.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MppeStats {
    /// Edges relaxed by the dynamic program.
    pub edge_visits: usize,
}

/// Most probable total path. Ties go to the predecessor with the smaller
/// world id.
pub fn mppe(ts: &TransitionSystem, table: &ScoreTable) -> ScoredPath {
    mppe_with_stats(ts, table, par::AVAILABLE).0
}

pub fn mppe_with_stats(
    ts: &TransitionSystem,
    table: &ScoreTable,
    parallel: bool,
) -> (ScoredPath, MppeStats) {
    assert!(table.covers(ts), "score table does not match the system");
    let layers = ts.layers();
    let mut best: Vec<f64> = vec![0.0; layers[0].len()];
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(layers.len());
    back.push(vec![0; layers[0].len()]);
    let mut visits = 0;
    for k in 0..layers.len() - 1 {
        let prev = &layers[k];
        let scores = &table.scores[k];
        let relaxed = par::map_range(layers[k + 1].len(), parallel, |j| {
            let mut arg = 0;
            let mut val = f64::NEG_INFINITY;
            for i in 0..prev.len() {
                let cand = best[i] + scores[i][j].ln();
                let better = cand > val || (cand == val && prev.world(i).id < prev.world(arg).id);
                if better {
                    val = cand;
                    arg = i;
                }
            }
            (val, arg)
        });
        visits += prev.len() * layers[k + 1].len();
        best = relaxed.iter().map(|r| r.0).collect();
        back.push(relaxed.iter().map(|r| r.1).collect());
    }
    let mut worlds = vec![0; layers.len()];
    for k in (1..layers.len()).rev() {
        worlds[k - 1] = back[k][worlds[k]];
    }
    (
        ScoredPath {
            path: ExecPath::new(0, worlds),
            log_score: best[0],
        },
        MppeStats {
            edge_visits: visits,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectedFrame {
    pub frame: usize,
    pub world: String,
    pub atoms: Vec<(String, String)>,
}

/// The most probable path restricted to the real frames: one world per frame.
pub fn correct_stream(ts: &TransitionSystem, table: &ScoreTable) -> Vec<CorrectedFrame> {
    let best = mppe(ts, table);
    let positions = best.path.positions();
    (1..ts.layers().len() - 1)
        .map(|k| {
            let w = ts.layer(k).world(positions[k]);
            CorrectedFrame {
                frame: k - 1,
                world: w.id.clone(),
                atoms: w
                    .atoms
                    .iter()
                    .map(|a| (a.data().to_string(), a.class().to_string()))
                    .collect(),
            }
        })
        .collect()
}
