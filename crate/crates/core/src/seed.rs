use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derive an independent seed for a sub-task (fold, cluster, arm) so that
/// work can be scheduled in any order and still reproduce serial results.
pub(crate) fn sub_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) mod stream {
    pub const FOLDS: u64 = 1;
    pub const POOL: u64 = 2;
    pub const INNER_CV: u64 = 3;
    pub const BAGS: u64 = 4;
    pub const ABLATE_C1: u64 = 5;
    pub const ABLATE_C2: u64 = 6;
    pub const ABLATE_C3: u64 = 7;
    pub const EVIDENCE: u64 = 8;
    pub const OUTER_FOLD: u64 = 9;
}
