//! Truth of epistemic formulas at a world of a single-frame model.
//!
//! Announcements are evaluated by materializing the updated model: `[psi] phi`
//! at `w` holds when `psi` fails at `w`, or `phi` holds at `w` in the submodel
//! of `psi`-worlds.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::formula::Pal;
use crate::model::{AgentId, PalModel};

/// `M, w |= phi`.
pub fn pal_sat(model: &PalModel, world: &str, phi: &Pal) -> Result<bool> {
    let w = model
        .world_index(world)
        .ok_or_else(|| Error::UnknownWorld(world.to_string()))?;
    sat_at(model, w, phi)
}

/// As [`pal_sat`], addressing the world by position.
pub fn sat_at(model: &PalModel, w: usize, phi: &Pal) -> Result<bool> {
    Ok(match phi {
        Pal::Top => true,
        Pal::Atom(a) => model.world(w).atoms.contains(a),
        Pal::Placeholder(k) => return Err(Error::Placeholder(*k)),
        Pal::Not(p) => !sat_at(model, w, p)?,
        Pal::And(a, b) => sat_at(model, w, a)? && sat_at(model, w, b)?,
        Pal::Knows(agent, p) => {
            let rel = model.relation(agent)?;
            all_sat(model, rel.block(w), p)?
        }
        Pal::Dist(group, p) => {
            let block = group_block_at(model, group, w)?;
            all_sat(model, &block, p)?
        }
        Pal::Announce(psi, p) => {
            if !sat_at(model, w, psi)? {
                true
            } else {
                let (updated, survivors) = update(model, psi)?;
                let nw = survivors
                    .binary_search(&w)
                    .expect("a world satisfying the announcement survives it");
                sat_at(&updated, nw, p)?
            }
        }
    })
}

fn all_sat(model: &PalModel, worlds: &[usize], p: &Pal) -> Result<bool> {
    for &v in worlds {
        if !sat_at(model, v, p)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn update(model: &PalModel, psi: &Pal) -> Result<(PalModel, Vec<usize>)> {
    let mut keep = Vec::with_capacity(model.len());
    for v in 0..model.len() {
        if sat_at(model, v, psi)? {
            keep.push(v);
        }
    }
    Ok((model.restrict(&keep), keep))
}

/// The model after publicly announcing `psi`: only `psi`-worlds remain and
/// every relation is restricted to them. The result may have no worlds.
pub fn announce_update(model: &PalModel, psi: &Pal) -> Result<PalModel> {
    update(model, psi).map(|(m, _)| m)
}

fn group_block_at(model: &PalModel, group: &BTreeSet<AgentId>, w: usize) -> Result<Vec<usize>> {
    let mut agents = group.iter();
    let first = agents.next().ok_or(Error::EmptyGroup)?;
    let mut block = model.relation(first)?.block(w).to_vec();
    for agent in agents {
        let rel = model.relation(agent)?;
        block.retain(|&v| rel.same_block(v, w));
    }
    Ok(block)
}

/// Worlds the group cannot tell apart from `world`: the intersection of each
/// member's block.
pub fn group_block(
    model: &PalModel,
    group: &BTreeSet<AgentId>,
    world: &str,
) -> Result<BTreeSet<String>> {
    let w = model
        .world_index(world)
        .ok_or_else(|| Error::UnknownWorld(world.to_string()))?;
    Ok(group_block_at(model, group, w)?
        .into_iter()
        .map(|v| model.world(v).id.clone())
        .collect())
}
