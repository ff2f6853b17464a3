//! Wrist-sensor handwashing quality assessment.
//!
//! The crate turns a 9-axis IMU stream into per-window features
//! ([`signal`]), classifies handwashing steps with a hybrid convolutional /
//! recurrent network ([`model`]), compresses that network under a FLOPs budget
//! with an actor-critic search ([`compress`]), scores the event against the
//! ten-step guideline with spoken-style feedback ([`assess`]) and drives
//! reminders from beacon readings and user utterances ([`context`]).
//! [`harness`] holds the synthetic data generator, evaluation protocols and
//! the pieces behind the `handwash` command-line tool.

pub mod assess;
pub mod compress;
pub mod context;
pub mod error;
pub mod harness;
pub mod model;
pub mod optim;
pub mod signal;

pub use error::{Error, Result};
