//! Symbolic timed observational equivalence for security protocols with a
//! Dolev-Yao intruder.

pub mod comparison;
pub mod derivability;
pub mod intruder;
pub mod terms;
pub mod timecon;
pub mod protocol;
pub mod semantics;
pub mod equivalence;
pub mod oracle;
