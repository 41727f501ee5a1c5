//! Online tracking of maximal frequent itemsets in a transaction stream.
//!
//! Every tracked pattern is a point in the plane. Patterns that occur in the
//! same records are pulled together, patterns that occur apart are pushed
//! apart, and close frequent patterns are merged into larger candidates while
//! infrequent ones are split into smaller ones. Supports are counted exactly
//! while a pattern is young and estimated over a sliding window afterwards.
//!
//! The crate also ships an exact oracle ([`oracle`]) for measuring how well
//! the model approximates the true maximal frequent itemsets, synthetic
//! stream generators ([`generators`]), and file formats for streams,
//! snapshots, metrics and SVG plots ([`io`]).

pub mod cli;
pub mod generators;
pub mod geometry;
pub mod io;
pub mod itemset;
pub mod model;
pub mod oracle;
pub mod support;

pub use geometry::Point2;
pub use itemset::{Item, Itemset};
pub use model::{Model, ModelSnapshot, Params, TrackedPattern};
pub use support::{SupportMode, SupportState};
