//! Counter-based random streams.
//!
//! Every unit of work (one generated sample, one oracle completion) owns a
//! ChaCha8 stream keyed by `(seed, purpose, split)` with the 64-bit ChaCha
//! stream id set to the unit's coordinates. Streams never depend on
//! scheduling or on which other units are requested.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

/// Human-readable description of the keying scheme, recorded in manifests.
pub const RNG_SCHEME: &str = "chacha8; key = seed_le64 || purpose_le64 || split_le64 || 0u64; \
     stream = (rule_index << 40) | sample_index for generation, context index for completion";

/// Which pipeline stage a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Generate = 1,
    Complete = 2,
    Baseline = 3,
}

/// Named data split; each split draws from a disjoint key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Test,
    Control,
}

impl Split {
    pub fn label(self) -> u64 {
        match self {
            Split::Train => 0x74_7261_696e,        // "train"
            Split::Test => 0x7465_7374,            // "test"
            Split::Control => 0x63_6f6e_7472_6f6c, // "control"
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Control => "control",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            "control" => Ok(Split::Control),
            other => Err(format!("unknown split `{other}` (expected train, test or control)")),
        }
    }
}

pub fn stream_rng(seed: u64, purpose: Purpose, split: Split, stream: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(&split.label().to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Stream for sample `index` of `rule_index` in a generated dataset.
pub fn sample_rng(seed: u64, split: Split, rule_index: usize, index: u64) -> StreamRng {
    debug_assert!(index < 1 << 40);
    stream_rng(seed, Purpose::Generate, split, ((rule_index as u64) << 40) | index)
}
