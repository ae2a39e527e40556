use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) type Rng = ChaCha8Rng;

pub(crate) fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `b` distinct indices in `[0, n)`, in draw order.
pub(crate) fn draw_distinct(rng: &mut Rng, n: usize, b: usize) -> Vec<usize> {
    rand::seq::index::sample(rng, n, b).into_vec()
}
