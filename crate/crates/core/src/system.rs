//! Layered transition systems over a stream of frames.
//!
//! Layer `0` and the last layer are single-world dummies with empty labels.
//! Every world of layer `i` steps to every world of layer `i + 1`, so the
//! transition relation is implicit.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::model::{AgentId, Atom, PalModel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSystem {
    agents: Vec<AgentId>,
    groups: BTreeMap<String, BTreeSet<AgentId>>,
    layers: Vec<PalModel>,
    locate: HashMap<String, (usize, usize)>,
}

fn fresh_id(preferred: String, taken: &HashSet<String>) -> String {
    let mut id = preferred;
    while taken.contains(&id) {
        id.push('\'');
    }
    id
}

/// Build the transition system for `frames`, adding the dummy endpoints.
///
/// If any world id occurs in more than one frame, every world of real layer
/// `k` is renamed to `L<k>_<id>`.
pub fn build_ts(frames: Vec<PalModel>) -> Result<TransitionSystem> {
    let first = frames.first().ok_or(Error::EmptyFrames)?;
    let agents = first.agents().to_vec();
    for (k, f) in frames.iter().enumerate() {
        if f.agents() != agents.as_slice() {
            return Err(Error::RosterMismatch {
                frame: k,
                expected: agents.iter().map(|a| a.to_string()).collect(),
                found: f.agents().iter().map(|a| a.to_string()).collect(),
            });
        }
    }
    let mut seen = HashSet::new();
    let collides = frames
        .iter()
        .flat_map(|f| f.worlds())
        .any(|w| !seen.insert(w.id.clone()));
    let frames = if collides {
        frames
            .iter()
            .enumerate()
            .map(|(k, f)| f.rename_worlds(|id| format!("L{}_{id}", k + 1)))
            .collect::<Result<Vec<_>>>()?
    } else {
        frames
    };
    let taken: HashSet<String> = frames
        .iter()
        .flat_map(|f| f.worlds().iter().map(|w| w.id.clone()))
        .collect();
    let n = frames.len() + 1;
    let start = fresh_id("w00".to_string(), &taken);
    let mut taken_end = taken;
    taken_end.insert(start.clone());
    let end = fresh_id(format!("w{n}0"), &taken_end);

    let mut layers = Vec::with_capacity(n + 1);
    layers.push(PalModel::dummy(start, agents.clone())?);
    layers.extend(frames);
    layers.push(PalModel::dummy(end, agents.clone())?);
    TransitionSystem::from_layers(agents, layers)
}

impl TransitionSystem {
    /// Assemble from complete layers, dummies included. Checks the dummy
    /// shape, the shared roster and global id uniqueness.
    pub fn from_layers(agents: Vec<AgentId>, layers: Vec<PalModel>) -> Result<Self> {
        if layers.len() < 3 {
            return Err(Error::EmptyFrames);
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.agents() != agents.as_slice() {
                return Err(Error::RosterMismatch {
                    frame: k,
                    expected: agents.iter().map(|a| a.to_string()).collect(),
                    found: layer.agents().iter().map(|a| a.to_string()).collect(),
                });
            }
        }
        for k in [0, layers.len() - 1] {
            let l = &layers[k];
            if l.len() != 1 || !l.world(0).atoms.is_empty() {
                return Err(Error::ingest(
                    format!("layers[{k}]"),
                    "endpoint layer must hold exactly one world with no atoms",
                ));
            }
        }
        let mut locate = HashMap::new();
        for (k, layer) in layers.iter().enumerate() {
            for (i, w) in layer.worlds().iter().enumerate() {
                if locate.insert(w.id.clone(), (k, i)).is_some() {
                    return Err(Error::Duplicate {
                        kind: "world",
                        id: w.id.clone(),
                    });
                }
            }
        }
        Ok(TransitionSystem {
            agents,
            groups: BTreeMap::new(),
            layers,
            locate,
        })
    }

    /// Attach named agent groups usable as `D{name}`.
    pub fn with_groups(mut self, groups: BTreeMap<String, BTreeSet<AgentId>>) -> Result<Self> {
        for (name, members) in &groups {
            if self.agents.iter().any(|a| a.as_str() == name) {
                return Err(Error::Duplicate {
                    kind: "agent or group name",
                    id: name.clone(),
                });
            }
            if members.is_empty() {
                return Err(Error::EmptyGroup);
            }
            if let Some(a) = members.iter().find(|a| !self.agents.contains(a)) {
                return Err(Error::UnknownAgent(a.to_string()));
            }
        }
        self.groups = groups;
        Ok(self)
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn groups(&self) -> &BTreeMap<String, BTreeSet<AgentId>> {
        &self.groups
    }

    /// All layers, dummies included.
    pub fn layers(&self) -> &[PalModel] {
        &self.layers
    }

    pub fn layer(&self, k: usize) -> &PalModel {
        &self.layers[k]
    }

    /// Number of frames (layers without the two dummies).
    pub fn frame_count(&self) -> usize {
        self.layers.len() - 2
    }

    pub fn initial(&self) -> &str {
        &self.layers[0].world(0).id
    }

    pub fn terminal(&self) -> &str {
        &self.layers[self.layers.len() - 1].world(0).id
    }

    pub fn state_count(&self) -> usize {
        self.layers.iter().map(PalModel::len).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.layers
            .windows(2)
            .map(|w| w[0].len() * w[1].len())
            .sum()
    }

    /// Edges as `(layer, from, to)` positions, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.layers.windows(2).enumerate().flat_map(|(k, w)| {
            let (a, b) = (w[0].len(), w[1].len());
            (0..a).flat_map(move |i| (0..b).map(move |j| (k, i, j)))
        })
    }

    /// `(layer, position)` of a world id.
    pub fn locate(&self, id: &str) -> Option<(usize, usize)> {
        self.locate.get(id).copied()
    }

    pub fn world_id(&self, layer: usize, i: usize) -> &str {
        &self.layers[layer].world(i).id
    }

    /// `L(w)`.
    pub fn labels(&self, id: &str) -> Option<&BTreeSet<Atom>> {
        self.locate(id).map(|(k, i)| &self.layers[k].world(i).atoms)
    }

    /// `|Π|`, or `None` if it does not fit in a `u128`.
    pub fn total_path_count(&self) -> Option<u128> {
        self.layers
            .iter()
            .try_fold(1u128, |acc, l| acc.checked_mul(l.len() as u128))
    }

    /// Total paths in lexicographic order of per-layer positions.
    pub fn total_paths(&self) -> TotalPaths<'_> {
        TotalPaths {
            ts: self,
            next: Some(vec![0; self.layers.len()]),
        }
    }

    /// The `index`-th total path in enumeration order.
    pub fn path_at(&self, index: u128) -> Result<ExecPath> {
        let count = self.total_path_count().unwrap_or(u128::MAX);
        if index >= count {
            return Err(Error::PathIndex {
                index: index.min(u64::MAX as u128) as u64,
                count,
            });
        }
        let mut worlds = vec![0; self.layers.len()];
        let mut rest = index;
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let n = layer.len() as u128;
            worlds[k] = (rest % n) as usize;
            rest /= n;
        }
        Ok(ExecPath { start: 0, worlds })
    }

    /// Build a path from world ids; they must sit in consecutive layers.
    pub fn path_from_ids<S: AsRef<str>>(&self, ids: &[S]) -> Result<ExecPath> {
        let mut worlds = Vec::with_capacity(ids.len());
        let mut start = 0;
        for (n, id) in ids.iter().enumerate() {
            let id = id.as_ref();
            let (k, i) = self
                .locate(id)
                .ok_or_else(|| Error::UnknownWorld(id.to_string()))?;
            if n == 0 {
                start = k;
            } else if k != start + n {
                return Err(Error::ingest(
                    format!("path[{n}]"),
                    format!("`{id}` is not in the layer after its predecessor"),
                ));
            }
            worlds.push(i);
        }
        Ok(ExecPath { start, worlds })
    }
}

/// A run `w_i ... w_j` through consecutive layers, stored as the first layer
/// index and the world position chosen in each layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExecPath {
    start: usize,
    worlds: Vec<usize>,
}

impl ExecPath {
    pub fn new(start: usize, worlds: Vec<usize>) -> Self {
        ExecPath { start, worlds }
    }

    pub fn start_layer(&self) -> usize {
        self.start
    }

    pub fn positions(&self) -> &[usize] {
        &self.worlds
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    /// Runs from the initial to the final dummy.
    pub fn is_total(&self, ts: &TransitionSystem) -> bool {
        self.start == 0 && self.worlds.len() == ts.layers().len()
    }

    pub fn ids<'a>(&self, ts: &'a TransitionSystem) -> Vec<&'a str> {
        self.worlds
            .iter()
            .enumerate()
            .map(|(n, &i)| ts.world_id(self.start + n, i))
            .collect()
    }

    /// Drop the first `k` worlds. `k == len` gives the empty path.
    pub fn suffix(&self, k: usize) -> Result<ExecPath> {
        if k > self.worlds.len() {
            return Err(Error::PathOffset {
                offset: k,
                len: self.worlds.len(),
            });
        }
        Ok(ExecPath {
            start: self.start + k,
            worlds: self.worlds[k..].to_vec(),
        })
    }

    /// Keep worlds `from..to`.
    pub fn slice(&self, from: usize, to: usize) -> ExecPath {
        ExecPath {
            start: self.start + from,
            worlds: self.worlds[from..to].to_vec(),
        }
    }
}

/// Free-function form of [`ExecPath::suffix`].
pub fn path_suffix(path: &ExecPath, k: usize) -> Result<ExecPath> {
    path.suffix(k)
}

pub struct TotalPaths<'a> {
    ts: &'a TransitionSystem,
    next: Option<Vec<usize>>,
}

impl Iterator for TotalPaths<'_> {
    type Item = ExecPath;

    fn next(&mut self) -> Option<ExecPath> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        for k in (0..succ.len()).rev() {
            succ[k] += 1;
            if succ[k] < self.ts.layers[k].len() {
                self.next = Some(succ);
                break;
            }
            succ[k] = 0;
        }
        Some(ExecPath {
            start: 0,
            worlds: cur,
        })
    }
}
