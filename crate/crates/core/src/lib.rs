//! Timetabling for the increasing-rounds traveling tournament problem:
//! instances, feasibility checks, lower bounds, a matching-based heuristic,
//! a small exact solver and integer-program export.

pub mod bounds;
pub mod construct;
pub mod error;
pub mod exact;
pub mod heuristic;
pub mod instance;
pub mod matching;
pub mod modelgen;
pub mod schedule;
pub mod trips;

pub use error::{Error, Result};
pub use instance::{Family, Instance};
pub use schedule::{validate, HapAssignment, Timetable, Venue};
