//! Example models.

pub mod entry;
pub mod intersection;
