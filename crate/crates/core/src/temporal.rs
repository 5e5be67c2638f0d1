//! Finite-path semantics for temporal formulas.
//!
//! [`tems`] follows the recursive definition directly, including the
//! loop-based reading of until (left operand required strictly before the
//! witness position). [`CompiledFormula`] computes the same relation with one
//! backward pass per subformula and precomputed epistemic truth tables; it is
//! what the path-quantifying checks use.

use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::pal::sat_at;
use crate::system::{ExecPath, TransitionSystem};

fn check_path(ts: &TransitionSystem, path: &ExecPath) -> Result<()> {
    let layers = ts.layers();
    for (n, &i) in path.positions().iter().enumerate() {
        let k = path.start_layer() + n;
        if k >= layers.len() || i >= layers[k].len() {
            return Err(Error::ingest(
                format!("path[{n}]"),
                "position does not exist in the transition system",
            ));
        }
    }
    Ok(())
}

/// `TS, path |= phi`. The empty path satisfies nothing.
pub fn tems(ts: &TransitionSystem, path: &ExecPath, phi: &Formula) -> Result<bool> {
    check_path(ts, path)?;
    holds(ts, path, 0, phi)
}

fn holds(ts: &TransitionSystem, path: &ExecPath, pos: usize, phi: &Formula) -> Result<bool> {
    if pos >= path.len() {
        return Ok(false);
    }
    Ok(match phi {
        Formula::Pal(p) => {
            let layer = ts.layer(path.start_layer() + pos);
            sat_at(layer, path.positions()[pos], p)?
        }
        Formula::Not(f) => !holds(ts, path, pos, f)?,
        Formula::And(a, b) => holds(ts, path, pos, a)? && holds(ts, path, pos, b)?,
        Formula::Next(f) => holds(ts, path, pos + 1, f)?,
        Formula::Until(a, b) => {
            if holds(ts, path, pos, b)? {
                return Ok(true);
            }
            let mut i = pos;
            while holds(ts, path, i, a)? {
                i += 1;
                if holds(ts, path, i, b)? {
                    return Ok(true);
                }
            }
            false
        }
    })
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Leaf(usize),
    Not(usize),
    And(usize, usize),
    Next(usize),
    Until(usize, usize),
}

/// A formula prepared for repeated evaluation over paths of one system.
#[derive(Debug, Clone)]
pub struct CompiledFormula {
    /// Children always precede their parents.
    nodes: Vec<Node>,
    /// `leaf_truth[leaf][layer][world]`.
    leaf_truth: Vec<Vec<Vec<bool>>>,
}

impl CompiledFormula {
    pub fn new(ts: &TransitionSystem, phi: &Formula) -> Result<Self> {
        let mut out = CompiledFormula {
            nodes: Vec::new(),
            leaf_truth: Vec::new(),
        };
        out.push(ts, phi)?;
        Ok(out)
    }

    fn push(&mut self, ts: &TransitionSystem, phi: &Formula) -> Result<usize> {
        let node = match phi {
            Formula::Pal(p) => {
                let table = ts
                    .layers()
                    .iter()
                    .map(|m| (0..m.len()).map(|w| sat_at(m, w, p)).collect())
                    .collect::<Result<Vec<Vec<bool>>>>()?;
                self.leaf_truth.push(table);
                Node::Leaf(self.leaf_truth.len() - 1)
            }
            Formula::Not(f) => Node::Not(self.push(ts, f)?),
            Formula::Next(f) => Node::Next(self.push(ts, f)?),
            Formula::And(a, b) => {
                let a = self.push(ts, a)?;
                Node::And(a, self.push(ts, b)?)
            }
            Formula::Until(a, b) => {
                let a = self.push(ts, a)?;
                Node::Until(a, self.push(ts, b)?)
            }
        };
        self.nodes.push(node);
        Ok(self.nodes.len() - 1)
    }

    /// Evaluate on `path`, which must lie in the system this was compiled for.
    pub fn eval(&self, path: &ExecPath) -> bool {
        let n = path.len();
        if n == 0 {
            return false;
        }
        // Row `n` stands for the empty suffix, where everything is false.
        let mut rows: Vec<Vec<bool>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let mut row = vec![false; n + 1];
            match *node {
                Node::Leaf(l) => {
                    let t = &self.leaf_truth[l];
                    for (pos, &w) in path.positions().iter().enumerate() {
                        row[pos] = t[path.start_layer() + pos][w];
                    }
                }
                Node::Not(a) => {
                    for pos in 0..n {
                        row[pos] = !rows[a][pos];
                    }
                }
                Node::And(a, b) => {
                    for pos in 0..n {
                        row[pos] = rows[a][pos] && rows[b][pos];
                    }
                }
                Node::Next(a) => {
                    row[..n].copy_from_slice(&rows[a][1..=n]);
                }
                Node::Until(a, b) => {
                    for pos in (0..n).rev() {
                        row[pos] = rows[b][pos] || (rows[a][pos] && row[pos + 1]);
                    }
                }
            }
            rows.push(row);
        }
        rows.last().expect("formula has a root")[0]
    }
}
