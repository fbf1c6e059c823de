//! Model-driven assembly toolchain.
//!
//! Product structural models ([`psm`]), platform models ([`aspm`]) and
//! assembly process models ([`apm`]) are checked against their meta-models,
//! transformed ([`xform`]), lowered onto a platform with a schedule
//! ([`lower`]), evaluated by discrete-event simulation ([`sim`]) and kept in
//! a URI-addressed repository ([`repo`]).

pub mod apm;
pub mod aspm;
pub mod catalog;
pub mod dag;
pub mod deploy;
pub mod document;
pub mod ids;
pub mod lower;
pub mod psm;
pub mod repo;
pub mod report;
pub mod schedule;
pub mod sim;
pub mod time;
pub mod xform;

pub use report::{Finding, Rule, ValidationReport};
pub use time::Time;
