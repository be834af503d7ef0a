//! Seeded random streams.
//!
//! Every randomized routine takes a `seed` and derives one independent
//! ChaCha stream per trial index, so results do not depend on how trials are
//! scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `index` of the generator family identified by `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform nonnegative vector in `[0, 1)`.
pub fn uniform_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// Sparse nonnegative vector with heavy-tailed magnitudes.
///
/// Roughly `density * n` entries are nonzero (at least one); magnitudes are
/// `U^{-1/2}` (Pareto tail with index 2).
pub fn spiky_vec<R: Rng>(rng: &mut R, n: usize, density: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    if n == 0 {
        return v;
    }
    let forced = rng.random_range(0..n);
    for (i, x) in v.iter_mut().enumerate() {
        if i == forced || rng.random::<f64>() < density {
            let u: f64 = rng.random::<f64>().max(1e-12);
            *x = u.powf(-0.5);
        }
    }
    v
}

/// Mixture used by most samplers: dense uniform, sparse spiky, or smooth bump.
pub fn mixed_nonneg_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    match rng.random_range(0..3u8) {
        0 => uniform_vec(rng, n),
        1 => spiky_vec(rng, n, 0.2),
        _ => {
            let center = rng.random_range(0.0..n as f64);
            let width = rng.random_range(0.5..(n as f64 / 4.0).max(1.0));
            (0..n)
                .map(|i| {
                    let d = (i as f64 + 0.5 - center) / width;
                    (-d * d).exp()
                })
                .collect()
        }
    }
}

/// Random vector with entries of both signs, used for linear-operator inputs.
pub fn signed_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}
