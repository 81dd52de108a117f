//! Versioned JSON snapshots of a [`CopulaState`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Boost, CopulaConfig, CopulaState, MarginalSketch};
use crate::error::{Error, Result};
use crate::ingest::TypedSchema;

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    dim: usize,
    step: u64,
    config: CopulaConfig,
    schema: TypedSchema,
    boost: Option<Boost>,
    /// Row-major.
    sigma: Vec<f64>,
    sketches: Vec<MarginalSketch>,
}

impl CopulaState {
    pub fn to_snapshot(&self) -> Result<String> {
        let d = self.dim();
        let snapshot = Snapshot {
            version: SNAPSHOT_VERSION,
            dim: d,
            step: self.step,
            config: self.config.clone(),
            schema: self.schema.clone(),
            boost: self.boost.clone(),
            sigma: (0..d)
                .flat_map(|i| (0..d).map(move |j| (i, j)))
                .map(|(i, j)| self.sigma[(i, j)])
                .collect(),
            sketches: self.sketches.clone(),
        };
        Ok(serde_json::to_string_pretty(&snapshot)?)
    }

    pub fn from_snapshot(text: &str) -> Result<CopulaState> {
        let snap: Snapshot = serde_json::from_str(text)?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported snapshot version {} (expected {SNAPSHOT_VERSION})",
                snap.version
            )));
        }
        let d = snap.dim;
        if snap.sigma.len() != d * d || snap.sketches.len() != d || snap.schema.dim() != d {
            return Err(Error::Snapshot(format!("inconsistent sizes for dim {d}")));
        }
        let mut sketches = snap.sketches;
        for s in &mut sketches {
            s.restore_sorted();
        }
        Ok(CopulaState {
            schema: snap.schema,
            config: snap.config,
            sketches,
            sigma: DMatrix::from_row_slice(d, d, &snap.sigma),
            step: snap.step,
            boost: snap.boost,
        })
    }
}
