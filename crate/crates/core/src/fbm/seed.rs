use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Identifies one counter-based random stream.
///
/// The same `(master_seed, stream_index)` always yields the same draws,
/// independent of which thread asks for them or in which order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    /// Child stream for a work unit (path index, component, ...).
    pub fn child(&self, index: u64) -> Self {
        Self {
            master_seed: self.master_seed,
            stream_index: splitmix64(splitmix64(self.stream_index) ^ index),
        }
    }

    /// Stream for component `component` of path `path`.
    pub fn path_component(&self, path: u64, component: u64) -> Self {
        self.child(path).child(component)
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    pub fn fill_normals(&self, out: &mut [f64]) {
        let mut rng = self.rng();
        for x in out.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
        }
    }

    pub fn normals(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        self.fill_normals(&mut v);
        v
    }
}
