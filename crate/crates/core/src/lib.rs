//! Markability and controllability of finite sets of unitary gates.
//!
//! A set is *markable* under a partition when one use of the unknown gate
//! both applies it undisturbed and leaves an ancilla labelling its block;
//! it is *controllable* when one use suffices to implement the controlled
//! gate. This crate decides both, synthesizes the circuits, and checks every
//! circuit by dense simulation.

pub mod boards;
pub mod cli;
pub mod control;
pub mod discrimination;
pub mod error;
pub mod format;
pub mod gateset;
pub mod markability;
pub mod numkernel;

pub use error::{Error, Result};
pub use gateset::{GateSet, Partition, Unitary};
pub use numkernel::{CMatrix, CVector, Tolerance};
