//! Procedural Raven's-progressive-matrix data: generation under 40
//! relational rules, exact rule inference, an oracle panel-completion
//! solver, consistency and completion metrics, memorization analysis and
//! bit-exact dataset files.

pub mod cli;
pub mod error;
pub mod eval;
pub mod gen;
pub mod inventory;
pub mod io;
pub mod mem;
pub mod rng;
pub mod rules;
pub mod solver;
pub mod types;

pub use error::{Error, Result};
pub use inventory::{rule_inventory, Attribute, Dimension, Relation, RuleId, RuleSet};
pub use types::{decode_sample, encode_sample, Grid, ObjectSpec, Panel, Row, Sample, Slot};
