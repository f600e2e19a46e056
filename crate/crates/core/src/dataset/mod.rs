//! Balanced clean/jammed corpora: generation, labelling, manifest storage
//! and split iteration.

mod generate;
mod manifest;

pub use generate::{
    build_dataset, random_jammer, record_id, synthesize_example, Dataset, GenerationConfig,
    SynthesizedExample,
};
pub use manifest::{
    generate_dataset, iterate_split, load_manifest, save_dataset, DatasetManifest, ManifestHeader,
    SplitBatches, SplitView, MANIFEST_FILE, MANIFEST_VERSION,
};

use serde::{Deserialize, Serialize};

use crate::synth::{JammerKind, JammerSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(crate::Error::config(format!("unknown split '{other}'"))),
        }
    }
}

/// One line of the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub id: String,
    /// Relative to the manifest directory.
    pub grid_path: String,
    pub label: u8,
    pub jammer_kind: JammerKind,
    pub jsr_db: Option<f64>,
    pub snr_db: f64,
    pub slot_duration_s: f64,
    pub onset_s: Option<f64>,
    pub seed: u64,
    pub split: Split,
    pub jammer: Option<JammerSpec>,
}

/// 1 iff a jammer is present at or above the threshold.
pub fn label_example(jammer_kind: JammerKind, jsr_db: Option<f64>, threshold_db: f64) -> u8 {
    match (jammer_kind, jsr_db) {
        (JammerKind::None, _) | (_, None) => 0,
        (_, Some(jsr)) => u8::from(jsr >= threshold_db),
    }
}
