use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Counter-based stream for ensemble member `member` of run `seed`. Streams
/// are independent of evaluation order.
pub fn member_rng(seed: u64, member: u64) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(member);
    r
}
