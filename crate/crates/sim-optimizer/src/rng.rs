use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Counter-based stream: one independent generator per (master seed, grid
/// index, replication index), so results do not depend on scheduling.
pub fn replication_rng(master: u64, grid_index: u64, replication: u64) -> ChaCha8Rng {
    let mixed = splitmix64(splitmix64(splitmix64(master) ^ grid_index) ^ replication);
    ChaCha8Rng::seed_from_u64(mixed)
}
