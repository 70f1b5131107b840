//! Strict JSON schema for benchmark instances: exactly the instance
//! fields plus a `version` tag, unknown fields rejected.

use serde::{Deserialize, Serialize};

use crate::bench::Instance;
use crate::error::{Error, Result};

const SCHEMA_VERSION: &str = "1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    version: String,
    n: usize,
    k: usize,
    c: Vec<f64>,
    d: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    demand: f64,
    seed: u64,
}

pub fn instance_to_json(instance: &Instance) -> String {
    let file = InstanceFile {
        version: SCHEMA_VERSION.to_string(),
        n: instance.n,
        k: instance.k,
        c: instance.c.clone(),
        d: instance.d.clone(),
        lower: instance.lower.clone(),
        upper: instance.upper.clone(),
        demand: instance.demand,
        seed: instance.seed,
    };
    serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
}

pub fn instance_from_json(text: &str) -> Result<Instance> {
    let file: InstanceFile =
        serde_json::from_str(text).map_err(|e| Error::InstanceJson(e.to_string()))?;
    if file.version != SCHEMA_VERSION {
        return Err(Error::InstanceJson(format!(
            "unsupported schema version '{}'",
            file.version
        )));
    }
    let instance = Instance {
        n: file.n,
        k: file.k,
        c: file.c,
        d: file.d,
        lower: file.lower,
        upper: file.upper,
        demand: file.demand,
        seed: file.seed,
    };
    instance.validate()?;
    Ok(instance)
}
