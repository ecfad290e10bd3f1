use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed for every random stream in the crate.
///
/// Identical seeds with identical call sequences produce identical streams on
/// every platform (ChaCha8 is portable and reproducible).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent child seed for sub-stream `index` (flow step, chain id, ...).
    pub fn derive(self, index: u64) -> RngSeed {
        let mut rng = self.rng();
        rng.set_stream(index.wrapping_add(1));
        RngSeed(rng.next_u64())
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed(seed)
    }
}
