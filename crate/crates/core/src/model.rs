//! Atoms, worlds and per-frame epistemic models.
//!
//! A [`PalModel`] is one frame's Kripke model: the possible worlds produced by
//! the classifiers, one indistinguishability partition per agent, and the
//! valuation carried by each world. Relations are always stored as partitions
//! so they are equivalence relations by construction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

const RESERVED: &[char] = &[':', ',', '(', ')', '[', ']', '{', '}', '!', '&', '|', '$'];

/// Whether `s` can be used as a data, class, agent or world identifier.
///
/// Identifiers are non-empty runs of printable, non-whitespace characters that
/// avoid the formula grammar's punctuation and never contain `->`.
pub fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && !s.contains("->")
        && s.chars()
            .all(|c| !c.is_whitespace() && !c.is_control() && !RESERVED.contains(&c))
}

fn check_identifier(s: &str) -> Result<()> {
    if is_identifier(s) {
        Ok(())
    } else {
        Err(Error::InvalidIdentifier(s.to_string()))
    }
}

/// The propositional letter `(x, c)`: datum `x` was classified as `c`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    data: String,
    class: String,
}

impl Atom {
    pub fn new(data: impl Into<String>, class: impl Into<String>) -> Result<Self> {
        let (data, class) = (data.into(), class.into());
        check_identifier(&data)?;
        check_identifier(&class)?;
        Ok(Atom { data, class })
    }

    /// A bare propositional letter `p`, stored as `(p, p)`.
    pub fn letter(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        Atom::new(name.clone(), name)
    }

    pub fn data(&self) -> &str {
        &self.data
    }

    pub fn class(&self) -> &str {
        &self.class
    }

    pub fn with_class(&self, class: &str) -> Atom {
        Atom {
            data: self.data.clone(),
            class: class.to_string(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.data, self.class)
    }
}

/// One classifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(String);

impl AgentId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        check_identifier(&name)?;
        Ok(AgentId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct World {
    pub id: String,
    pub atoms: BTreeSet<Atom>,
}

impl World {
    pub fn new(id: impl Into<String>, atoms: impl IntoIterator<Item = Atom>) -> Result<Self> {
        let id = id.into();
        check_identifier(&id)?;
        Ok(World {
            id,
            atoms: atoms.into_iter().collect(),
        })
    }
}

/// A partition of world indices `0..n` into blocks.
///
/// Blocks are sorted ascending internally and ordered by their smallest
/// member, so two partitions are equal exactly when they describe the same
/// equivalence relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    block_of: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn identity(n: usize) -> Self {
        Partition {
            block_of: (0..n).collect(),
            blocks: (0..n).map(|i| vec![i]).collect(),
        }
    }

    /// Finest partition of `0..n` in which every pair shares a block.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut uf = UnionFind::new(n);
        for (a, b) in pairs {
            uf.union(a, b);
        }
        let mut by_root: Vec<Option<usize>> = vec![None; n];
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let block_of = (0..n)
            .map(|i| {
                let root = uf.find(i);
                let b = *by_root[root].get_or_insert_with(|| {
                    blocks.push(Vec::new());
                    blocks.len() - 1
                });
                blocks[b].push(i);
                b
            })
            .collect();
        Partition { block_of, blocks }
    }

    pub fn len(&self) -> usize {
        self.block_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_of.is_empty()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// The block containing world `i`.
    pub fn block(&self, i: usize) -> &[usize] {
        &self.blocks[self.block_of[i]]
    }

    pub fn same_block(&self, a: usize, b: usize) -> bool {
        self.block_of[a] == self.block_of[b]
    }

    /// Keep only the worlds in `keep` (sorted old indices), renumbered densely.
    pub fn restrict(&self, keep: &[usize]) -> Partition {
        let pairs = keep.iter().enumerate().flat_map(|(new_a, &a)| {
            keep.iter()
                .enumerate()
                .skip(new_a + 1)
                .find(|(_, &b)| self.same_block(a, b))
                .map(|(new_b, _)| (new_a, new_b))
        });
        Partition::from_pairs(keep.len(), pairs)
    }

    /// Generating pairs: each non-singleton block as a star around its least member.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.blocks
            .iter()
            .flat_map(|b| b[1..].iter().map(move |&o| (b[0], o)))
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        let mut root = i;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[i] != root {
            let next = self.parent[i];
            self.parent[i] = root;
            i = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Normalize a relation given as bare pairs into the equivalence classes it
/// generates over `worlds`. Unpaired worlds end up in singleton blocks.
pub fn equivalence_closure<S: AsRef<str>>(
    pairs: &[(S, S)],
    worlds: &[S],
) -> Result<Vec<BTreeSet<String>>> {
    let index: HashMap<&str, usize> = worlds
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_ref(), i))
        .collect();
    let lookup = |id: &S| {
        index
            .get(id.as_ref())
            .copied()
            .ok_or_else(|| Error::UnknownWorld(id.as_ref().to_string()))
    };
    let idx_pairs = pairs
        .iter()
        .map(|(a, b)| Ok((lookup(a)?, lookup(b)?)))
        .collect::<Result<Vec<_>>>()?;
    let partition = Partition::from_pairs(worlds.len(), idx_pairs);
    Ok(partition
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&i| worlds[i].as_ref().to_string()).collect())
        .collect())
}

/// Class-implication rules `c -> {c', ...}`, applied to every datum.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    rules: BTreeMap<String, BTreeSet<String>>,
}

impl RuleSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add `class -> implied`, merging with any existing entry for `class`.
    pub fn add<I, S>(&mut self, class: impl Into<String>, implied: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let class = class.into();
        check_identifier(&class)?;
        let entry = self.rules.entry(class).or_default();
        for c in implied {
            let c = c.into();
            check_identifier(&c)?;
            entry.insert(c);
        }
        Ok(())
    }

    pub fn implied(&self, class: &str) -> impl Iterator<Item = &str> {
        self.rules
            .get(class)
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.rules.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Least superset of `atoms` closed under `rules`.
pub fn rule_closure(atoms: &BTreeSet<Atom>, rules: &RuleSet) -> BTreeSet<Atom> {
    let mut closed = atoms.clone();
    let mut pending: Vec<Atom> = atoms.iter().cloned().collect();
    while let Some(atom) = pending.pop() {
        for implied in rules.implied(atom.class()) {
            let derived = atom.with_class(implied);
            if !closed.contains(&derived) {
                closed.insert(derived.clone());
                pending.push(derived);
            }
        }
    }
    closed
}

/// A single frame's Kripke model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PalModel {
    worlds: Vec<World>,
    agents: Vec<AgentId>,
    relations: Vec<Partition>,
    index: HashMap<String, usize>,
}

impl PalModel {
    /// Build a model; `relations[k]` is the partition for `agents[k]`, over
    /// world positions in `worlds`.
    pub fn new(
        worlds: Vec<World>,
        agents: Vec<AgentId>,
        relations: Vec<Partition>,
    ) -> Result<Self> {
        if worlds.is_empty() {
            return Err(Error::EmptyModel);
        }
        Self::build(worlds, agents, relations)
    }

    /// Same as [`PalModel::new`] but relations are generating pairs of world ids.
    pub fn from_pairs(
        worlds: Vec<World>,
        agents: Vec<AgentId>,
        pairs: &BTreeMap<AgentId, Vec<(String, String)>>,
    ) -> Result<Self> {
        let index: HashMap<&str, usize> = worlds
            .iter()
            .enumerate()
            .map(|(i, w)| (w.id.as_str(), i))
            .collect();
        for agent in pairs.keys() {
            if !agents.contains(agent) {
                return Err(Error::UnknownAgent(agent.to_string()));
            }
        }
        let relations = agents
            .iter()
            .map(|a| {
                let list = pairs.get(a).map(Vec::as_slice).unwrap_or_default();
                let idx = list
                    .iter()
                    .map(|(x, y)| {
                        let get = |id: &String| {
                            index
                                .get(id.as_str())
                                .copied()
                                .ok_or_else(|| Error::UnknownWorld(id.clone()))
                        };
                        Ok((get(x)?, get(y)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Partition::from_pairs(worlds.len(), idx))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(worlds, agents, relations)
    }

    fn build(worlds: Vec<World>, agents: Vec<AgentId>, relations: Vec<Partition>) -> Result<Self> {
        let mut index = HashMap::with_capacity(worlds.len());
        for (i, w) in worlds.iter().enumerate() {
            if index.insert(w.id.clone(), i).is_some() {
                return Err(Error::Duplicate {
                    kind: "world",
                    id: w.id.clone(),
                });
            }
        }
        let mut seen = BTreeSet::new();
        for a in &agents {
            if !seen.insert(a) {
                return Err(Error::Duplicate {
                    kind: "agent",
                    id: a.to_string(),
                });
            }
        }
        assert_eq!(agents.len(), relations.len(), "one relation per agent");
        for r in &relations {
            assert_eq!(r.len(), worlds.len(), "relation must cover every world");
        }
        Ok(PalModel {
            worlds,
            agents,
            relations,
            index,
        })
    }

    /// Single world with an empty valuation and reflexive relations, used for
    /// the initial and final states of a transition system.
    pub fn dummy(id: impl Into<String>, agents: Vec<AgentId>) -> Result<Self> {
        let relations = vec![Partition::identity(1); agents.len()];
        Self::new(vec![World::new(id, [])?], agents, relations)
    }

    pub fn worlds(&self) -> &[World] {
        &self.worlds
    }

    pub fn world(&self, i: usize) -> &World {
        &self.worlds[i]
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn world_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn agent_index(&self, agent: &AgentId) -> Option<usize> {
        self.agents.iter().position(|a| a == agent)
    }

    pub fn relation(&self, agent: &AgentId) -> Result<&Partition> {
        self.agent_index(agent)
            .map(|k| &self.relations[k])
            .ok_or_else(|| Error::UnknownAgent(agent.to_string()))
    }

    pub fn relations(&self) -> &[Partition] {
        &self.relations
    }

    /// Submodel on the worlds at sorted positions `keep`; may be empty.
    pub fn restrict(&self, keep: &[usize]) -> PalModel {
        let worlds = keep.iter().map(|&i| self.worlds[i].clone()).collect();
        let relations = self.relations.iter().map(|r| r.restrict(keep)).collect();
        Self::build(worlds, self.agents.clone(), relations).expect("restriction keeps ids unique")
    }

    /// Rename every world id with `f`.
    pub fn rename_worlds(&self, f: impl Fn(&str) -> String) -> Result<PalModel> {
        let worlds = self
            .worlds
            .iter()
            .map(|w| World::new(f(&w.id), w.atoms.iter().cloned()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(worlds, self.agents.clone(), self.relations.clone())
    }
}

/// Replace every world's valuation by its rule closure. Relations are untouched.
pub fn enrich_model(model: &PalModel, rules: &RuleSet) -> PalModel {
    let mut out = model.clone();
    if rules.is_empty() {
        return out;
    }
    for w in &mut out.worlds {
        w.atoms = rule_closure(&w.atoms, rules);
    }
    out
}
