//! The four run commands.

pub mod rerank;
pub mod simulate;
pub mod sweep;
pub mod theory;
