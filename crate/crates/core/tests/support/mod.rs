//! Seeded generators and brute-force reference evaluators shared by the
//! integration and acceptance tests.
//!
//! The references work on explicit relation matrices built from the raw
//! generating pairs, so they share no code with the partition-based
//! implementation beyond the formula types.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use ltpal::{build_ts, AgentId, Atom, Formula, Pal, PalModel, TransitionSystem, World};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const LETTERS: [&str; 3] = ["p", "q", "r"];

pub fn agents(n: usize) -> Vec<AgentId> {
    (1..=n)
        .map(|i| AgentId::new(format!("a{i}")).unwrap())
        .collect()
}

pub fn letter(s: &str) -> Atom {
    Atom::letter(s).unwrap()
}

/// A model as it was generated: labels plus raw relation pairs.
#[derive(Debug, Clone)]
pub struct RawModel {
    pub ids: Vec<String>,
    pub atoms: Vec<BTreeSet<Atom>>,
    pub agents: Vec<AgentId>,
    pub pairs: BTreeMap<AgentId, Vec<(usize, usize)>>,
}

impl RawModel {
    pub fn dummy(id: &str, agents: &[AgentId]) -> Self {
        RawModel {
            ids: vec![id.to_string()],
            atoms: vec![BTreeSet::new()],
            agents: agents.to_vec(),
            pairs: BTreeMap::new(),
        }
    }

    pub fn model(&self) -> PalModel {
        let worlds = self
            .ids
            .iter()
            .zip(&self.atoms)
            .map(|(id, a)| World::new(id.clone(), a.iter().cloned()).unwrap())
            .collect();
        let pairs = self
            .pairs
            .iter()
            .map(|(a, ps)| {
                let named = ps
                    .iter()
                    .map(|&(x, y)| (self.ids[x].clone(), self.ids[y].clone()))
                    .collect();
                (a.clone(), named)
            })
            .collect();
        PalModel::from_pairs(worlds, self.agents.clone(), &pairs).unwrap()
    }

    /// Reflexive, symmetric, transitive closure by Warshall's algorithm.
    pub fn explicit(&self) -> Explicit {
        let n = self.ids.len();
        let rel = self
            .agents
            .iter()
            .map(|a| {
                let mut m = vec![vec![false; n]; n];
                for (i, row) in m.iter_mut().enumerate() {
                    row[i] = true;
                }
                for &(x, y) in self.pairs.get(a).map(Vec::as_slice).unwrap_or_default() {
                    m[x][y] = true;
                    m[y][x] = true;
                }
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            if m[i][k] && m[k][j] {
                                m[i][j] = true;
                            }
                        }
                    }
                }
                (a.clone(), m)
            })
            .collect();
        Explicit {
            atoms: self.atoms.clone(),
            rel,
        }
    }
}

pub fn random_model(
    rng: &mut TestRng,
    max_worlds: usize,
    agents: &[AgentId],
    prefix: &str,
) -> RawModel {
    let n = rng.gen_range(1..=max_worlds);
    let ids = (0..n).map(|i| format!("{prefix}{i}")).collect();
    let atoms = (0..n)
        .map(|_| {
            LETTERS
                .iter()
                .filter(|_| rng.gen_bool(0.5))
                .map(|l| letter(l))
                .collect()
        })
        .collect();
    let pairs = agents
        .iter()
        .map(|a| {
            let k = rng.gen_range(0..=n);
            let ps = (0..k)
                .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
                .collect();
            (a.clone(), ps)
        })
        .collect();
    RawModel {
        ids,
        atoms,
        agents: agents.to_vec(),
        pairs,
    }
}

/// A model with relations as explicit boolean matrices.
#[derive(Debug, Clone)]
pub struct Explicit {
    pub atoms: Vec<BTreeSet<Atom>>,
    pub rel: BTreeMap<AgentId, Vec<Vec<bool>>>,
}

impl Explicit {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn sat(&self, w: usize, phi: &Pal) -> bool {
        let alive = vec![true; self.len()];
        self.eval(&alive, w, phi)
    }

    /// Truth at `w` in the submodel of `alive` worlds.
    fn eval(&self, alive: &[bool], w: usize, phi: &Pal) -> bool {
        let n = self.len();
        match phi {
            Pal::Top => true,
            Pal::Atom(a) => self.atoms[w].contains(a),
            Pal::Placeholder(k) => panic!("unfilled ${k}"),
            Pal::Not(p) => !self.eval(alive, w, p),
            Pal::And(a, b) => self.eval(alive, w, a) && self.eval(alive, w, b),
            Pal::Knows(i, p) => {
                let r = &self.rel[i];
                (0..n)
                    .filter(|&v| alive[v] && r[w][v])
                    .all(|v| self.eval(alive, v, p))
            }
            Pal::Dist(g, p) => (0..n)
                .filter(|&v| alive[v] && g.iter().all(|i| self.rel[i][w][v]))
                .all(|v| self.eval(alive, v, p)),
            Pal::Announce(psi, p) => {
                if !self.eval(alive, w, psi) {
                    return true;
                }
                let next: Vec<bool> = (0..n)
                    .map(|v| alive[v] && self.eval(alive, v, psi))
                    .collect();
                self.eval(&next, w, p)
            }
        }
    }
}

pub fn random_group(rng: &mut TestRng, agents: &[AgentId]) -> BTreeSet<AgentId> {
    loop {
        let g: BTreeSet<_> = agents
            .iter()
            .filter(|_| rng.gen_bool(0.5))
            .cloned()
            .collect();
        if !g.is_empty() {
            return g;
        }
    }
}

pub fn random_pal(rng: &mut TestRng, depth: usize, agents: &[AgentId]) -> Pal {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..10) {
            0 => Pal::Top,
            1 => Pal::bottom(),
            _ => Pal::Atom(letter(LETTERS.choose(rng).unwrap())),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..8) {
        0 => Pal::not(random_pal(rng, d, agents)),
        1 => Pal::and(random_pal(rng, d, agents), random_pal(rng, d, agents)),
        2 => Pal::or(random_pal(rng, d, agents), random_pal(rng, d, agents)),
        3 => Pal::implies(random_pal(rng, d, agents), random_pal(rng, d, agents)),
        4 => Pal::knows(
            agents.choose(rng).unwrap().clone(),
            random_pal(rng, d, agents),
        ),
        5 => {
            let g = random_group(rng, agents);
            Pal::dist(g, random_pal(rng, d, agents)).unwrap()
        }
        _ => Pal::announce(random_pal(rng, d, agents), random_pal(rng, d, agents)),
    }
}

/// Random temporal formula; leaves are PAL formulas of depth at most
/// `leaf_depth`, or holes `$1..$arity` when `arity > 0`.
pub fn random_formula(
    rng: &mut TestRng,
    depth: usize,
    leaf_depth: usize,
    arity: usize,
    agents: &[AgentId],
) -> Formula {
    if depth == 0 || rng.gen_bool(0.15) {
        if arity > 0 && rng.gen_bool(0.5) {
            return Formula::Pal(Pal::Placeholder(rng.gen_range(1..=arity)));
        }
        return Formula::Pal(random_pal(rng, leaf_depth, agents));
    }
    let d = depth - 1;
    let sub = |rng: &mut TestRng| random_formula(rng, d, leaf_depth, arity, agents);
    match rng.gen_range(0..10) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::implies(sub(rng), sub(rng)),
        4 => Formula::next(sub(rng)),
        5 => Formula::until(sub(rng), sub(rng)),
        6 => Formula::future(sub(rng)),
        7 => Formula::global(sub(rng)),
        8 => Formula::release(sub(rng), sub(rng)),
        _ => Formula::weak_until(sub(rng), sub(rng)),
    }
}

/// A template using every hole `$1..$arity`.
pub fn random_template(
    rng: &mut TestRng,
    depth: usize,
    arity: usize,
    agents: &[AgentId],
) -> Formula {
    let mut f = random_formula(rng, depth, 1, arity, agents);
    for k in 1..=arity {
        if !f.placeholders().contains(&k) {
            let hole = Formula::Pal(Pal::Placeholder(k));
            let g = if rng.gen_bool(0.5) {
                Formula::future(hole)
            } else {
                hole
            };
            f = if rng.gen_bool(0.5) {
                Formula::and(f, g)
            } else {
                Formula::or(f, g)
            };
        }
    }
    f
}

/// Frames plus the explicit form of every layer, dummies included.
pub struct RawSystem {
    pub frames: Vec<RawModel>,
    pub layers: Vec<Explicit>,
    pub ts: TransitionSystem,
}

impl RawSystem {
    pub fn new(frames: Vec<RawModel>) -> Self {
        let ts = build_ts(frames.iter().map(RawModel::model).collect()).unwrap();
        let agents = ts.agents().to_vec();
        let mut layers = vec![RawModel::dummy(ts.initial(), &agents).explicit()];
        layers.extend(frames.iter().map(RawModel::explicit));
        layers.push(RawModel::dummy(ts.terminal(), &agents).explicit());
        RawSystem { frames, layers, ts }
    }

    /// Every total path as world positions, by nested enumeration.
    pub fn all_paths(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for layer in &self.layers {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..layer.len()).map(move |w| {
                        let mut q = p.clone();
                        q.push(w);
                        q
                    })
                })
                .collect();
        }
        out
    }

    /// Truth of `phi` on the path suffix starting at `pos`, where `path`
    /// begins at layer `start`.
    pub fn sem(&self, start: usize, path: &[usize], pos: usize, phi: &Formula) -> bool {
        if pos >= path.len() {
            return false;
        }
        match phi {
            Formula::Pal(p) => self.layers[start + pos].sat(path[pos], p),
            Formula::Not(f) => !self.sem(start, path, pos, f),
            Formula::And(a, b) => self.sem(start, path, pos, a) && self.sem(start, path, pos, b),
            Formula::Next(f) => self.sem(start, path, pos + 1, f),
            Formula::Until(a, b) => (pos..path.len()).any(|m| {
                self.sem(start, path, m, b) && (pos..m).all(|k| self.sem(start, path, k, a))
            }),
        }
    }
}

pub fn random_system(
    rng: &mut TestRng,
    max_frames: usize,
    max_worlds: usize,
    agents: &[AgentId],
) -> RawSystem {
    let n = rng.gen_range(1..=max_frames);
    let frames = (0..n)
        .map(|k| random_model(rng, max_worlds, agents, &format!("f{k}w")))
        .collect();
    RawSystem::new(frames)
}

/// Replace holes without going through the library's substitution.
pub fn fill(f: &Formula, args: &[Pal]) -> Formula {
    match f {
        Formula::Pal(p) => Formula::Pal(fill_pal(p, args)),
        Formula::Not(g) => Formula::Not(Box::new(fill(g, args))),
        Formula::Next(g) => Formula::Next(Box::new(fill(g, args))),
        Formula::And(a, b) => Formula::And(Box::new(fill(a, args)), Box::new(fill(b, args))),
        Formula::Until(a, b) => Formula::Until(Box::new(fill(a, args)), Box::new(fill(b, args))),
    }
}

fn fill_pal(p: &Pal, args: &[Pal]) -> Pal {
    let b = |q: &Pal| Box::new(fill_pal(q, args));
    match p {
        Pal::Placeholder(k) => args[k - 1].clone(),
        Pal::Top | Pal::Atom(_) => p.clone(),
        Pal::Not(q) => Pal::Not(b(q)),
        Pal::And(x, y) => Pal::And(b(x), b(y)),
        Pal::Knows(i, q) => Pal::Knows(i.clone(), b(q)),
        Pal::Dist(g, q) => Pal::Dist(g.clone(), b(q)),
        Pal::Announce(x, y) => Pal::Announce(b(x), b(y)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Def {
    VerifiedGroup,
    PossibleGroup,
    RobustAgent,
    PossibleAgent,
}

/// The filler for one atom under a definition, optionally announced.
pub fn def_filler(
    def: Def,
    group: &BTreeSet<AgentId>,
    agent: &AgentId,
    atom: &Atom,
    psi: Option<&Pal>,
) -> Pal {
    let p = Pal::Atom(atom.clone());
    let d = |q: Pal| Pal::Dist(group.clone(), Box::new(q));
    let k = |q: Pal| Pal::Knows(agent.clone(), Box::new(q));
    let neg = |q: Pal| Pal::Not(Box::new(q));
    let w = match def {
        Def::VerifiedGroup => d(p),
        Def::PossibleGroup => neg(d(neg(p))),
        Def::RobustAgent => k(p),
        Def::PossibleAgent => neg(k(neg(p))),
    };
    match psi {
        Some(psi) => Pal::Announce(Box::new(psi.clone()), Box::new(w)),
        None => w,
    }
}

pub fn def_check(
    sys: &RawSystem,
    template: &Formula,
    atoms: &[Atom],
    def: Def,
    group: &BTreeSet<AgentId>,
    agent: &AgentId,
    psi: Option<&Pal>,
) -> bool {
    let args: Vec<Pal> = atoms
        .iter()
        .map(|a| def_filler(def, group, agent, a, psi))
        .collect();
    let phi = fill(template, &args);
    let paths = sys.all_paths();
    let holds = |p: &Vec<usize>| sys.sem(0, p, 0, &phi);
    match def {
        Def::VerifiedGroup | Def::RobustAgent => paths.iter().all(holds),
        Def::PossibleGroup | Def::PossibleAgent => paths.iter().any(holds),
    }
}

/// Indices of qualifying candidates, or `None` when the base check passes.
pub fn missing_oracle(
    sys: &RawSystem,
    template: &Formula,
    atoms: &[Atom],
    def: Def,
    group: &BTreeSet<AgentId>,
    agent: &AgentId,
    candidates: &[Pal],
) -> Option<Vec<usize>> {
    if def_check(sys, template, atoms, def, group, agent, None) {
        return None;
    }
    Some(
        candidates
            .iter()
            .enumerate()
            .filter(|(_, psi)| def_check(sys, template, atoms, def, group, agent, Some(psi)))
            .map(|(i, _)| i)
            .collect(),
    )
}

/// Random scores for every edge, dummy edges included.
pub fn random_scores(rng: &mut TestRng, ts: &TransitionSystem) -> HashMap<(String, String), f64> {
    ts.edges()
        .map(|(k, i, j)| {
            let s = rng.gen_range(0.01..=1.0);
            (
                (
                    ts.world_id(k, i).to_string(),
                    ts.world_id(k + 1, j).to_string(),
                ),
                s,
            )
        })
        .collect()
}

/// Best log-score over all total paths, by enumeration.
pub fn best_log_score(sys: &RawSystem, scores: &HashMap<(String, String), f64>) -> f64 {
    let ts = &sys.ts;
    sys.all_paths()
        .iter()
        .map(|p| {
            p.windows(2)
                .enumerate()
                .map(|(k, w)| {
                    let key = (
                        ts.world_id(k, w[0]).to_string(),
                        ts.world_id(k + 1, w[1]).to_string(),
                    );
                    scores[&key].ln()
                })
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

const SYNTAX_ATOMS: [(&str, &str); 8] = [
    ("x", "Cat"),
    ("p", "p"),
    ("q", "q"),
    ("U", "U"),
    ("true", "c"),
    ("X", "F"),
    ("x1", "UV"),
    ("cam_2", "Person"),
];

fn syntax_agents() -> Vec<AgentId> {
    ["c1", "c2", "A", "robot.7"]
        .iter()
        .map(|a| AgentId::new(*a).unwrap())
        .collect()
}

fn syntax_pal(rng: &mut TestRng, depth: usize, agents: &[AgentId]) -> Pal {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..12) {
            0 => Pal::Top,
            1 => Pal::bottom(),
            2 => Pal::Placeholder(rng.gen_range(1..=3)),
            _ => {
                let (d, c) = SYNTAX_ATOMS.choose(rng).unwrap();
                Pal::Atom(Atom::new(*d, *c).unwrap())
            }
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..8) {
        0 => Pal::not(syntax_pal(rng, d, agents)),
        1 => Pal::and(syntax_pal(rng, d, agents), syntax_pal(rng, d, agents)),
        2 => Pal::or(syntax_pal(rng, d, agents), syntax_pal(rng, d, agents)),
        3 => Pal::implies(syntax_pal(rng, d, agents), syntax_pal(rng, d, agents)),
        4 => Pal::knows(
            agents.choose(rng).unwrap().clone(),
            syntax_pal(rng, d, agents),
        ),
        5 => {
            let g = random_group(rng, agents);
            Pal::dist(g, syntax_pal(rng, d, agents)).unwrap()
        }
        _ => Pal::announce(syntax_pal(rng, d, agents), syntax_pal(rng, d, agents)),
    }
}

/// Random canonical formula of depth at most `depth` over a pool of atoms
/// that includes keyword-named ones, with holes and several agent names.
pub fn syntax_formula(rng: &mut TestRng, depth: usize) -> Formula {
    let agents = syntax_agents();
    syntax_formula_in(rng, depth, &agents)
}

fn syntax_formula_in(rng: &mut TestRng, depth: usize, agents: &[AgentId]) -> Formula {
    if depth == 0 || rng.gen_bool(0.15) {
        return Formula::Pal(syntax_pal(rng, depth.min(3), agents));
    }
    let d = depth - 1;
    let sub = |rng: &mut TestRng| syntax_formula_in(rng, d, agents);
    match rng.gen_range(0..11) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::implies(sub(rng), sub(rng)),
        4 => Formula::next(sub(rng)),
        5 => Formula::until(sub(rng), sub(rng)),
        6 => Formula::future(sub(rng)),
        7 => Formula::global(sub(rng)),
        8 => Formula::release(sub(rng), sub(rng)),
        9 => Formula::weak_until(sub(rng), sub(rng)),
        _ => Formula::Pal(syntax_pal(rng, d.min(4), agents)),
    }
}

/// Random frames document plus rules. World ids collide across frames about
/// half of the time.
pub fn random_frames_document(
    rng: &mut TestRng,
) -> (ltpal::io::FramesDocument, ltpal::io::RulesDocument) {
    use ltpal::io::{FrameDoc, FramesDocument, RuleDoc, RulesDocument, WorldDoc};
    const CLASSES: [&str; 6] = ["Cat", "Dog", "Chair", "Person", "Animal", "UV"];
    let n_agents = rng.gen_range(1..=3);
    let agents: Vec<String> = (1..=n_agents).map(|i| format!("c{i}")).collect();
    let mut groups = BTreeMap::new();
    if rng.gen_bool(0.5) {
        groups.insert("A".to_string(), agents.clone());
    }
    let shared_ids = rng.gen_bool(0.5);
    let frames = (0..rng.gen_range(1..=4))
        .map(|k| {
            let n = rng.gen_range(1..=3);
            let ids: Vec<String> = (0..n)
                .map(|i| {
                    if shared_ids {
                        format!("w{i}")
                    } else {
                        format!("w{}{i}", k + 1)
                    }
                })
                .collect();
            let worlds = ids
                .iter()
                .map(|id| WorldDoc {
                    id: id.clone(),
                    atoms: CLASSES
                        .iter()
                        .filter_map(|c| {
                            let data = if rng.gen_bool(0.5) { "x" } else { "y" };
                            rng.gen_bool(0.3).then(|| (data.to_string(), c.to_string()))
                        })
                        .collect(),
                })
                .collect();
            let mut relations = BTreeMap::new();
            for a in &agents {
                if rng.gen_bool(0.8) {
                    let ps = (0..rng.gen_range(0..=n))
                        .map(|_| {
                            (
                                ids.choose(rng).unwrap().clone(),
                                ids.choose(rng).unwrap().clone(),
                            )
                        })
                        .collect();
                    relations.insert(a.clone(), ps);
                }
            }
            FrameDoc { worlds, relations }
        })
        .collect();
    let rules = (0..rng.gen_range(0..=3))
        .map(|_| RuleDoc {
            class: CLASSES.choose(rng).unwrap().to_string(),
            implies: vec![CLASSES.choose(rng).unwrap().to_string()],
        })
        .collect();
    (
        FramesDocument {
            agents,
            groups,
            frames,
        },
        RulesDocument { rules },
    )
}

/// Four frames watched by cameras `c1`, `c2` (group `A`): UV on in an empty
/// room, then a person present for two frames, then an empty room. With
/// `inject`, the third frame gains a UV-on hypothesis the group cannot rule
/// out.
pub fn clean_room_frames(inject: bool) -> String {
    let third = if inject {
        r#"[["x","Human"],["x","UV"]]"#
    } else {
        r#"[["x","Human"]]"#
    };
    format!(
        r#"{{
  "agents": ["c1", "c2"],
  "groups": {{"A": ["c1", "c2"]}},
  "frames": [
    {{"worlds": [{{"id": "a0", "atoms": [["x","UV"]]}}, {{"id": "a1", "atoms": [["x","UV"]]}}],
     "relations": {{"c1": [["a0","a1"]]}}}},
    {{"worlds": [{{"id": "b0", "atoms": [["x","Human"]]}}, {{"id": "b1", "atoms": [["x","Human"]]}}],
     "relations": {{"c1": [["b0","b1"]]}}}},
    {{"worlds": [{{"id": "c0", "atoms": [["x","Human"]]}}, {{"id": "c1", "atoms": {third}}}],
     "relations": {{"c1": [["c0","c1"]], "c2": [["c0","c1"]]}}}},
    {{"worlds": [{{"id": "d0", "atoms": []}}]}}
  ]
}}
"#
    )
}

pub const TWO_FRAME_FRAMES: &str = r#"{
  "agents": ["c1"],
  "frames": [
    {"worlds": [{"id": "w10", "atoms": [["x","Cat"]]},
                {"id": "w11", "atoms": [["x","Dog"]]},
                {"id": "w12", "atoms": [["x","Cat"]]}]},
    {"worlds": [{"id": "w20", "atoms": [["x","Cat"]]},
                {"id": "w21", "atoms": [["x","Dog"]]}]}
  ]
}
"#;

pub const TWO_FRAME_SCORES: &str = r#"{"edges": [
  {"from": "w00", "to": "w10", "score": 0.2},
  {"from": "w00", "to": "w11", "score": 0.2},
  {"from": "w00", "to": "w12", "score": 0.2},
  {"from": "w10", "to": "w20", "score": 0.8},
  {"from": "w10", "to": "w21", "score": 0.3},
  {"from": "w11", "to": "w20", "score": 0.5},
  {"from": "w11", "to": "w21", "score": 0.4},
  {"from": "w12", "to": "w20", "score": 0.5},
  {"from": "w12", "to": "w21", "score": 0.1},
  {"from": "w20", "to": "w30", "score": 0.2},
  {"from": "w21", "to": "w30", "score": 0.1}
]}
"#;

/// Runs the `ltpal` binary in a scratch directory.
pub struct Cli {
    pub dir: tempfile::TempDir,
}

pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

impl Cli {
    pub fn new() -> Self {
        Cli {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    pub fn write(&self, name: &str, text: &str) -> String {
        let p = self.dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.display().to_string()
    }

    pub fn path(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }

    pub fn run(&self, args: &[&str]) -> Outcome {
        self.run_env(args, &[])
    }

    pub fn run_env(&self, args: &[&str], env: &[(&str, &str)]) -> Outcome {
        let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_ltpal"));
        cmd.args(args)
            .current_dir(self.dir.path())
            .env_remove("LTPAL_PATH_CAP");
        for (k, v) in env {
            cmd.env(k, v);
        }
        let out = cmd.output().unwrap();
        Outcome {
            code: out.status.code().unwrap_or(-1),
            stdout: String::from_utf8(out.stdout).unwrap(),
            stderr: String::from_utf8(out.stderr).unwrap(),
        }
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// One random template over `sys`: the four base checks and both group
/// missing-information checks against the references, plus the singleton
/// group against the individual agent.
pub fn definitions_case(
    rng: &mut TestRng,
    sys: &RawSystem,
    agents: &[AgentId],
    parallel: bool,
) -> Result<(), String> {
    use ltpal::query::*;

    let arity = rng.gen_range(1..=2);
    let skeleton = random_template(rng, 3, arity, agents);
    let template = Template::new(skeleton.clone()).map_err(|e| e.to_string())?;
    let atoms: Vec<_> = (0..arity)
        .map(|_| letter(LETTERS[rng.gen_range(0..3)]))
        .collect();
    let group = random_group(rng, agents);
    let agent = agents[rng.gen_range(0..agents.len())].clone();
    let opts = CheckOptions {
        parallel,
        ..CheckOptions::default()
    };
    let ts = &sys.ts;
    let shown = ltpal::pretty(&skeleton);

    let cases = [
        (
            Def::VerifiedGroup,
            check_verified_group(ts, &template, &atoms, &group, &opts),
        ),
        (
            Def::PossibleGroup,
            check_possible_group(ts, &template, &atoms, &group, &opts),
        ),
        (
            Def::RobustAgent,
            check_robust_agent(ts, &template, &atoms, &agent, &opts),
        ),
        (
            Def::PossibleAgent,
            check_possible_agent(ts, &template, &atoms, &agent, &opts),
        ),
    ];
    for (def, verdict) in cases {
        let v = verdict.map_err(|e| e.to_string())?;
        let expected = def_check(sys, &skeleton, &atoms, def, &group, &agent, None);
        ensure(v.result == Some(expected), || {
            format!(
                "{def:?} on {shown}: got {:?}, reference {expected}",
                v.result
            )
        })?;
        if let Some(path) = &v.path {
            let args: Vec<_> = atoms
                .iter()
                .map(|a| def_filler(def, &group, &agent, a, None))
                .collect();
            let existential = matches!(def, Def::PossibleGroup | Def::PossibleAgent);
            ensure(
                sys.sem(0, path.positions(), 0, &fill(&skeleton, &args)) == existential,
                || format!("{def:?} on {shown}: reported path does not decide"),
            )?;
        }
    }

    let singleton: BTreeSet<_> = [agent.clone()].into();
    let g = check_verified_group(ts, &template, &atoms, &singleton, &opts)
        .map_err(|e| e.to_string())?;
    let k = check_robust_agent(ts, &template, &atoms, &agent, &opts).map_err(|e| e.to_string())?;
    ensure(g.result == k.result, || {
        format!("singleton group differs from agent on {shown}")
    })?;

    let candidates: Vec<_> = (0..4).map(|_| random_pal(rng, 2, agents)).collect();
    for (reading, def) in [
        (Reading::Verified, Def::VerifiedGroup),
        (Reading::Possible, Def::PossibleGroup),
    ] {
        let scope = Scope::Group(group.clone());
        let r = check_missing_info(ts, &template, &atoms, &scope, reading, &candidates, &opts)
            .map_err(|e| e.to_string())?;
        let got: Vec<usize> = r.qualifying.iter().map(|q| q.index).collect();
        let expected = missing_oracle(sys, &skeleton, &atoms, def, &group, &agent, &candidates);
        let ok = match &expected {
            None => r.base.result == Some(true) && got.is_empty() && r.result() == Some(false),
            Some(list) => {
                r.base.result == Some(false) && &got == list && r.result() == Some(!list.is_empty())
            }
        };
        ensure(ok, || {
            format!("missing {def:?} on {shown}: got {got:?}, reference {expected:?}")
        })?;
    }
    Ok(())
}
