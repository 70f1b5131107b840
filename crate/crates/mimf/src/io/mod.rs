//! File formats: free-format MPS for models and a strict JSON schema for
//! benchmark instances.

mod json;
mod mps;

pub use json::{instance_from_json, instance_to_json};
pub use mps::{models_structurally_equal, read_mps, write_mps};
