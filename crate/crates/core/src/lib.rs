//! Model checking for linear temporal public announcement logic.
//!
//! Classifier output for each frame of a stream arrives as a Kripke model
//! over possible worlds. Frames are chained into a layered transition
//! system, temporal-epistemic queries are checked over its execution paths,
//! and the most probable path is extracted from pairwise similarity scores.
//!
//! ```
//! use ltpal::{parse_formula, pretty};
//! let f = parse_formula("G (D{c1,c2} x:Human -> X D{c1,c2} !x:UV)").unwrap();
//! assert_eq!(parse_formula(&pretty(&f)).unwrap(), f);
//! ```

pub mod error;
pub mod formula;
pub mod io;
pub mod model;
pub mod mppe;
pub mod pal;
pub mod par;
pub mod query;
pub mod syntax;
pub mod system;
pub mod temporal;

pub use error::{Error, Result};
pub use formula::{Formula, Pal};
pub use model::{
    enrich_model, equivalence_closure, rule_closure, AgentId, Atom, PalModel, Partition, RuleSet,
    World,
};
pub use mppe::{correct_stream, mppe, score_edges, ScoreTable, ScoredPath};
pub use pal::{announce_update, group_block, pal_sat};
pub use query::{CheckOptions, Template, Verdict};
pub use syntax::{parse_formula, parse_pal, pretty, pretty_pal};
pub use system::{build_ts, path_suffix, ExecPath, TransitionSystem};
pub use temporal::{tems, CompiledFormula};
