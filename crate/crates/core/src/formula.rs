//! Two-level formula syntax trees.
//!
//! [`Pal`] is the epistemic layer (atoms, negation, conjunction, individual and
//! distributed knowledge, announcements). [`Formula`] is the temporal layer on
//! top of it. The smart constructors on [`Formula`] keep trees canonical: any
//! subtree free of temporal operators is stored as a single `Formula::Pal`
//! leaf. The parser and every derived operator go through them.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{AgentId, Atom};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pal {
    Top,
    Atom(Atom),
    /// Template hole `$k`, 1-based.
    Placeholder(usize),
    Not(Box<Pal>),
    And(Box<Pal>, Box<Pal>),
    Knows(AgentId, Box<Pal>),
    Dist(BTreeSet<AgentId>, Box<Pal>),
    /// `[psi] phi`: after truthfully announcing `psi`, `phi` holds.
    Announce(Box<Pal>, Box<Pal>),
}

impl Pal {
    pub fn atom(a: Atom) -> Pal {
        Pal::Atom(a)
    }

    pub fn bottom() -> Pal {
        Pal::Not(Box::new(Pal::Top))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(p: Pal) -> Pal {
        Pal::Not(Box::new(p))
    }

    pub fn and(a: Pal, b: Pal) -> Pal {
        Pal::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Pal, b: Pal) -> Pal {
        Pal::not(Pal::and(Pal::not(a), Pal::not(b)))
    }

    pub fn implies(a: Pal, b: Pal) -> Pal {
        Pal::not(Pal::and(a, Pal::not(b)))
    }

    pub fn knows(agent: AgentId, p: Pal) -> Pal {
        Pal::Knows(agent, Box::new(p))
    }

    pub fn dist(group: impl IntoIterator<Item = AgentId>, p: Pal) -> Result<Pal> {
        let group: BTreeSet<_> = group.into_iter().collect();
        if group.is_empty() {
            return Err(Error::EmptyGroup);
        }
        Ok(Pal::Dist(group, Box::new(p)))
    }

    pub fn announce(psi: Pal, phi: Pal) -> Pal {
        Pal::Announce(Box::new(psi), Box::new(phi))
    }

    pub fn depth(&self) -> usize {
        match self {
            Pal::Top | Pal::Atom(_) | Pal::Placeholder(_) => 0,
            Pal::Not(p) | Pal::Knows(_, p) | Pal::Dist(_, p) => 1 + p.depth(),
            Pal::And(a, b) | Pal::Announce(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Rebuild with every placeholder replaced by `f(k)`.
    pub fn fill(&self, f: &mut impl FnMut(usize) -> Pal) -> Pal {
        match self {
            Pal::Placeholder(k) => f(*k),
            Pal::Top | Pal::Atom(_) => self.clone(),
            Pal::Not(p) => Pal::not(p.fill(f)),
            Pal::And(a, b) => Pal::and(a.fill(f), b.fill(f)),
            Pal::Knows(i, p) => Pal::knows(i.clone(), p.fill(f)),
            Pal::Dist(g, p) => Pal::Dist(g.clone(), Box::new(p.fill(f))),
            Pal::Announce(a, b) => Pal::announce(a.fill(f), b.fill(f)),
        }
    }

    pub fn visit(&self, f: &mut impl FnMut(&Pal)) {
        f(self);
        match self {
            Pal::Top | Pal::Atom(_) | Pal::Placeholder(_) => {}
            Pal::Not(p) | Pal::Knows(_, p) | Pal::Dist(_, p) => p.visit(f),
            Pal::And(a, b) | Pal::Announce(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Expand group aliases inside `D{...}`. Names that are not aliases are kept.
    pub fn resolve_groups(&self, groups: &BTreeMap<String, BTreeSet<AgentId>>) -> Pal {
        match self {
            Pal::Top | Pal::Atom(_) | Pal::Placeholder(_) => self.clone(),
            Pal::Not(p) => Pal::not(p.resolve_groups(groups)),
            Pal::And(a, b) => Pal::and(a.resolve_groups(groups), b.resolve_groups(groups)),
            Pal::Knows(i, p) => Pal::knows(i.clone(), p.resolve_groups(groups)),
            Pal::Dist(g, p) => {
                let members = g
                    .iter()
                    .flat_map(|a| match groups.get(a.as_str()) {
                        Some(m) => m.iter().cloned().collect::<Vec<_>>(),
                        None => vec![a.clone()],
                    })
                    .collect();
                Pal::Dist(members, Box::new(p.resolve_groups(groups)))
            }
            Pal::Announce(a, b) => {
                Pal::announce(a.resolve_groups(groups), b.resolve_groups(groups))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Pal(Pal),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
}

impl From<Pal> for Formula {
    fn from(p: Pal) -> Self {
        Formula::Pal(p)
    }
}

impl Formula {
    pub fn top() -> Formula {
        Formula::Pal(Pal::Top)
    }

    pub fn bottom() -> Formula {
        Formula::Pal(Pal::bottom())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::Pal(p) => Formula::Pal(Pal::not(p)),
            f => Formula::Not(Box::new(f)),
        }
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        match (a, b) {
            (Formula::Pal(a), Formula::Pal(b)) => Formula::Pal(Pal::and(a, b)),
            (a, b) => Formula::And(Box::new(a), Box::new(b)),
        }
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(a, Formula::not(b)))
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    /// `F f` as `(true U f)`.
    pub fn future(f: Formula) -> Formula {
        Formula::until(Formula::top(), f)
    }

    /// `(a R b)` as `!(!a U !b)`.
    pub fn release(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::until(Formula::not(a), Formula::not(b)))
    }

    /// `(a W b)` as `(b R (a | b))`.
    pub fn weak_until(a: Formula, b: Formula) -> Formula {
        Formula::release(b.clone(), Formula::or(a, b))
    }

    /// `G f` as `(false R f)`.
    pub fn global(f: Formula) -> Formula {
        Formula::release(Formula::bottom(), f)
    }

    pub fn as_pal(&self) -> Option<&Pal> {
        match self {
            Formula::Pal(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_temporal(&self) -> bool {
        !matches!(self, Formula::Pal(_))
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Pal(p) => p.depth(),
            Formula::Not(f) | Formula::Next(f) => 1 + f.depth(),
            Formula::And(a, b) | Formula::Until(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Apply `f` to every PAL leaf, rebuilding through the smart constructors.
    pub fn map_pal(&self, f: &mut impl FnMut(&Pal) -> Pal) -> Formula {
        match self {
            Formula::Pal(p) => Formula::Pal(f(p)),
            Formula::Not(g) => Formula::not(g.map_pal(f)),
            Formula::And(a, b) => Formula::and(a.map_pal(f), b.map_pal(f)),
            Formula::Next(g) => Formula::next(g.map_pal(f)),
            Formula::Until(a, b) => Formula::until(a.map_pal(f), b.map_pal(f)),
        }
    }

    pub fn visit_pal(&self, f: &mut impl FnMut(&Pal)) {
        match self {
            Formula::Pal(p) => f(p),
            Formula::Not(g) | Formula::Next(g) => g.visit_pal(f),
            Formula::And(a, b) | Formula::Until(a, b) => {
                a.visit_pal(f);
                b.visit_pal(f);
            }
        }
    }

    /// Placeholder indices occurring anywhere in the formula.
    pub fn placeholders(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.visit_pal(&mut |p| {
            p.visit(&mut |q| {
                if let Pal::Placeholder(k) = q {
                    out.insert(*k);
                }
            })
        });
        out
    }

    pub fn resolve_groups(&self, groups: &BTreeMap<String, BTreeSet<AgentId>>) -> Formula {
        if groups.is_empty() {
            return self.clone();
        }
        self.map_pal(&mut |p| p.resolve_groups(groups))
    }
}
