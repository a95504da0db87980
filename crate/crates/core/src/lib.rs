//! Two-sided heat kernel and Green function estimates for stable-like jump
//! processes with critical killing on the upper half-space, together with
//! independent numerical oracles used to check them.

pub mod error;
pub mod geometry;
pub mod green;
pub mod hke;
pub mod killing;
pub mod oracle;
pub mod quadrature;
pub mod report;
pub mod special;
pub mod suite;

pub use error::{DklError, DklResult};
