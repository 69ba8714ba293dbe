//! Reproducible random streams for replications.
//!
//! Every replication owns a ChaCha8 key built from `(master_seed,
//! replication_index)`; each kind of draw (inputs, noise, frozen-copy noise,
//! ...) reads its own ChaCha stream under that key. Within a stream, row `i`
//! and coordinate `j` of a `w`-wide block always occupy word `i * w + j`, so
//! the values do not depend on how replications are scheduled.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::interval::normal_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReplicationSeed {
    pub master_seed: u64,
    pub replication_index: u64,
}

impl ReplicationSeed {
    pub const fn new(master_seed: u64, replication_index: u64) -> Self {
        Self {
            master_seed,
            replication_index,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Inputs = 0,
    Noise = 1,
    FrozenNoise = 2,
}

pub struct UniformStream(ChaCha8Rng);

impl UniformStream {
    pub fn new(seed: ReplicationSeed, role: StreamRole) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&seed.replication_index.to_le_bytes());
        key[16..24].copy_from_slice(b"sobolrep");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(role as u64);
        Self(rng)
    }

    /// Uniform on the open interval (0, 1), 53 bits of resolution.
    pub fn next_open01(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via the inverse CDF.
    pub fn next_gaussian(&mut self) -> f64 {
        normal_quantile(self.next_open01())
    }
}
