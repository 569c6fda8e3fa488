//! Model containment for quantified constraint satisfaction, entailment of
//! positive Horn sentences, and Q-cores of finite relational structures.

pub mod containment;
pub mod entailment;
pub mod error;
pub mod format;
pub mod game;
pub mod generate;
pub mod hom;
pub mod qcore;
pub mod sentence;
pub mod structure;

pub use error::{Error, Result};
pub use sentence::PhSentence;
pub use structure::{Signature, SizeLimits, Structure};
