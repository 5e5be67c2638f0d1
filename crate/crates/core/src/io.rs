//! JSON documents: frames, rules, serialized systems, edge scores and
//! candidate announcements.
//!
//! Schema errors carry the JSON path of the offending value, and so do the
//! semantic checks that follow parsing (`frames[0].relations.c1[1]: ...`).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::Pal;
use crate::model::{enrich_model, AgentId, Atom, PalModel, RuleSet, World};
use crate::mppe::ScoreTable;
use crate::syntax::parse_pal;
use crate::system::{build_ts, TransitionSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldDoc {
    pub id: String,
    #[serde(default)]
    pub atoms: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameDoc {
    pub worlds: Vec<WorldDoc>,
    #[serde(default)]
    pub relations: BTreeMap<String, Vec<(String, String)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramesDocument {
    pub agents: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub groups: BTreeMap<String, Vec<String>>,
    pub frames: Vec<FrameDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleDoc {
    pub class: String,
    pub implies: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulesDocument {
    pub rules: Vec<RuleDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// A serialized transition system. `layers` includes both dummies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDocument {
    pub agents: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub groups: BTreeMap<String, Vec<String>>,
    pub layers: Vec<FrameDoc>,
    #[serde(default)]
    pub edges: Vec<EdgeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoredEdge {
    pub from: String,
    pub to: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoresDocument {
    pub edges: Vec<ScoredEdge>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum CandidatesDocument {
    List(Vec<String>),
    Wrapped { candidates: Vec<String> },
}

/// Deserialize `text`, reporting the JSON path of the first schema error.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        Error::Json {
            path,
            source: e.into_inner(),
        }
    })?;
    de.end().map_err(|source| Error::Json {
        path: ".".into(),
        source,
    })?;
    Ok(value)
}

/// Read and deserialize a file; errors are prefixed with the file name.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::ingest(path.display().to_string(), e.to_string()))?;
    from_json(&text).map_err(|e| match e {
        Error::Json {
            path: inner,
            source,
        } => Error::Json {
            path: format!("{}: {inner}", path.display()),
            source,
        },
        other => other,
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

fn agent_roster(agents: &[String]) -> Result<Vec<AgentId>> {
    let mut seen = HashSet::new();
    agents
        .iter()
        .enumerate()
        .map(|(n, a)| {
            let path = format!("agents[{n}]");
            if !seen.insert(a) {
                return Err(Error::ingest(path, format!("duplicate agent `{a}`")));
            }
            AgentId::new(a.clone()).map_err(|e| Error::ingest(path, e.to_string()))
        })
        .collect()
}

fn group_table(
    groups: &BTreeMap<String, Vec<String>>,
    agents: &[AgentId],
) -> Result<BTreeMap<String, BTreeSet<AgentId>>> {
    let mut out = BTreeMap::new();
    for (name, members) in groups {
        let path = format!("groups.{name}");
        if !crate::model::is_identifier(name) {
            return Err(Error::ingest(path, format!("invalid group name {name:?}")));
        }
        if agents.iter().any(|a| a.as_str() == name) {
            return Err(Error::ingest(
                path,
                format!("group `{name}` shadows an agent"),
            ));
        }
        if members.is_empty() {
            return Err(Error::ingest(path, "group must not be empty"));
        }
        let mut set = BTreeSet::new();
        for (n, m) in members.iter().enumerate() {
            let Some(a) = agents.iter().find(|a| a.as_str() == m) else {
                return Err(Error::ingest(
                    format!("{path}[{n}]"),
                    format!("unknown agent `{m}`"),
                ));
            };
            set.insert(a.clone());
        }
        out.insert(name.clone(), set);
    }
    Ok(out)
}

fn frame_model(frame: &FrameDoc, agents: &[AgentId], path: &str) -> Result<PalModel> {
    if frame.worlds.is_empty() {
        return Err(Error::ingest(
            format!("{path}.worlds"),
            "frame has no worlds",
        ));
    }
    let mut ids = HashSet::new();
    let mut worlds = Vec::with_capacity(frame.worlds.len());
    for (i, w) in frame.worlds.iter().enumerate() {
        let wpath = format!("{path}.worlds[{i}]");
        if !ids.insert(w.id.as_str()) {
            return Err(Error::ingest(
                format!("{wpath}.id"),
                format!("duplicate world id `{}`", w.id),
            ));
        }
        let atoms = w
            .atoms
            .iter()
            .enumerate()
            .map(|(n, (d, c))| {
                Atom::new(d.clone(), c.clone())
                    .map_err(|e| Error::ingest(format!("{wpath}.atoms[{n}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        worlds.push(
            World::new(w.id.clone(), atoms)
                .map_err(|e| Error::ingest(format!("{wpath}.id"), e.to_string()))?,
        );
    }
    let mut pairs = BTreeMap::new();
    for (agent, list) in &frame.relations {
        let rpath = format!("{path}.relations.{agent}");
        let Some(a) = agents.iter().find(|a| a.as_str() == agent) else {
            return Err(Error::ingest(
                rpath,
                format!("agent `{agent}` is not in the roster"),
            ));
        };
        for (n, (x, y)) in list.iter().enumerate() {
            for id in [x, y] {
                if !ids.contains(id.as_str()) {
                    return Err(Error::ingest(
                        format!("{rpath}[{n}]"),
                        format!("unknown world id `{id}`"),
                    ));
                }
            }
        }
        pairs.insert(a.clone(), list.clone());
    }
    PalModel::from_pairs(worlds, agents.to_vec(), &pairs)
        .map_err(|e| Error::ingest(path.to_string(), e.to_string()))
}

impl RulesDocument {
    pub fn rule_set(&self) -> Result<RuleSet> {
        let mut rules = RuleSet::new();
        for (n, r) in self.rules.iter().enumerate() {
            rules
                .add(r.class.clone(), r.implies.iter().cloned())
                .map_err(|e| Error::ingest(format!("rules[{n}]"), e.to_string()))?;
        }
        Ok(rules)
    }
}

impl FramesDocument {
    /// The frames as models, relations closed and valuations rule-closed.
    pub fn models(&self, rules: &RuleSet) -> Result<Vec<PalModel>> {
        let agents = agent_roster(&self.agents)?;
        if self.frames.is_empty() {
            return Err(Error::ingest("frames", "need at least one frame"));
        }
        self.frames
            .iter()
            .enumerate()
            .map(|(k, f)| {
                Ok(enrich_model(
                    &frame_model(f, &agents, &format!("frames[{k}]"))?,
                    rules,
                ))
            })
            .collect()
    }

    pub fn groups(&self) -> Result<BTreeMap<String, BTreeSet<AgentId>>> {
        group_table(&self.groups, &agent_roster(&self.agents)?)
    }
}

/// Frames plus optional rules to a transition system.
pub fn ingest(frames: &FramesDocument, rules: Option<&RulesDocument>) -> Result<TransitionSystem> {
    let rules = match rules {
        Some(r) => r.rule_set()?,
        None => RuleSet::new(),
    };
    let models = frames.models(&rules)?;
    build_ts(models)?.with_groups(frames.groups()?)
}

fn frame_doc(model: &PalModel) -> FrameDoc {
    let worlds = model
        .worlds()
        .iter()
        .map(|w| WorldDoc {
            id: w.id.clone(),
            atoms: w
                .atoms
                .iter()
                .map(|a| (a.data().to_string(), a.class().to_string()))
                .collect(),
        })
        .collect();
    let relations = model
        .agents()
        .iter()
        .zip(model.relations())
        .map(|(a, r)| {
            let pairs = r
                .pairs()
                .map(|(x, y)| (model.world(x).id.clone(), model.world(y).id.clone()))
                .collect();
            (a.to_string(), pairs)
        })
        .collect();
    FrameDoc { worlds, relations }
}

/// Serialize `ts`, listing every edge; scores are included when given.
pub fn system_document(ts: &TransitionSystem, scores: Option<&ScoreTable>) -> SystemDocument {
    let edges = ts
        .edges()
        .map(|(k, i, j)| EdgeDoc {
            from: ts.world_id(k, i).to_string(),
            to: ts.world_id(k + 1, j).to_string(),
            score: scores.map(|t| t.get(k, i, j)),
        })
        .collect();
    SystemDocument {
        agents: ts.agents().iter().map(|a| a.to_string()).collect(),
        groups: ts
            .groups()
            .iter()
            .map(|(g, m)| (g.clone(), m.iter().map(|a| a.to_string()).collect()))
            .collect(),
        layers: ts.layers().iter().map(frame_doc).collect(),
        edges,
    }
}

/// Rebuild a system and its scores, if every edge carries one. An empty
/// edge list is accepted; otherwise the list must name each transition once.
pub fn load_system(doc: &SystemDocument) -> Result<(TransitionSystem, Option<ScoreTable>)> {
    let agents = agent_roster(&doc.agents)?;
    let layers = doc
        .layers
        .iter()
        .enumerate()
        .map(|(k, l)| frame_model(l, &agents, &format!("layers[{k}]")))
        .collect::<Result<Vec<_>>>()?;
    let ts = TransitionSystem::from_layers(agents.clone(), layers)?
        .with_groups(group_table(&doc.groups, &agents)?)?;
    if doc.edges.is_empty() {
        return Ok((ts, None));
    }
    let mut seen = HashSet::new();
    for (n, e) in doc.edges.iter().enumerate() {
        let path = format!("edges[{n}]");
        let from = ts
            .locate(&e.from)
            .ok_or_else(|| Error::ingest(&path, format!("unknown world id `{}`", e.from)))?;
        let to = ts
            .locate(&e.to)
            .ok_or_else(|| Error::ingest(&path, format!("unknown world id `{}`", e.to)))?;
        if to.0 != from.0 + 1 {
            return Err(Error::ingest(
                path,
                format!("`{}` -> `{}` is not a transition", e.from, e.to),
            ));
        }
        if !seen.insert((from, to)) {
            return Err(Error::ingest(
                path,
                format!("duplicate edge `{}` -> `{}`", e.from, e.to),
            ));
        }
    }
    if seen.len() != ts.edge_count() {
        return Err(Error::ingest(
            "edges",
            format!("lists {} of {} transitions", seen.len(), ts.edge_count()),
        ));
    }
    let scored = doc.edges.iter().filter(|e| e.score.is_some()).count();
    if scored == 0 {
        return Ok((ts, None));
    }
    if scored != doc.edges.len() {
        return Err(Error::ingest(
            "edges",
            "either every edge has a score or none does",
        ));
    }
    let table = ScoreTable::from_edges(
        &ts,
        doc.edges
            .iter()
            .map(|e| (e.from.as_str(), e.to.as_str(), e.score.unwrap())),
    )?;
    Ok((ts, Some(table)))
}

pub fn read_frames(path: &Path) -> Result<FramesDocument> {
    read_json(path)
}

pub fn read_rules(path: &Path) -> Result<RulesDocument> {
    read_json(path)
}

pub fn read_system(path: &Path) -> Result<(TransitionSystem, Option<ScoreTable>)> {
    let doc: SystemDocument = read_json(path)?;
    load_system(&doc)
}

pub fn write_system(path: &Path, ts: &TransitionSystem, scores: Option<&ScoreTable>) -> Result<()> {
    fs::write(path, to_json(&system_document(ts, scores)))
        .map_err(|e| Error::ingest(path.display().to_string(), e.to_string()))
}

/// Scores file for `ts`; edges touching a dummy may be omitted.
pub fn scores_table(ts: &TransitionSystem, doc: &ScoresDocument) -> Result<ScoreTable> {
    ScoreTable::from_edges(
        ts,
        doc.edges
            .iter()
            .map(|e| (e.from.as_str(), e.to.as_str(), e.score)),
    )
}

/// Candidate announcements: a JSON array of formula strings, or an object
/// with a `candidates` array.
pub fn parse_candidates(text: &str) -> Result<Vec<Pal>> {
    let doc: CandidatesDocument = from_json(text)?;
    let list = match doc {
        CandidatesDocument::List(l) | CandidatesDocument::Wrapped { candidates: l } => l,
    };
    list.iter()
        .enumerate()
        .map(|(n, s)| {
            parse_pal(s).map_err(|e| Error::ingest(format!("candidates[{n}]"), e.to_string()))
        })
        .collect()
}
