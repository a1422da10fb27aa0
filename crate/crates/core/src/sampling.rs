//! Reproducible random draws for the counting simulation.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded from a `u64`;
//! its output stream is specified independently of platform and word size.
//! Binomial variates use inverse-CDF search over a probability table built
//! outward from the mode, so the number of uniforms consumed per draw is
//! exactly one and large `n` does not underflow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sub-stream `index` of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(1)))
}

// Terms below this fraction of the modal weight are dropped from the table.
const TAIL_CUTOFF: f64 = 1e-20;

/// Draws from Binomial(n, p).
pub fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    let u: f64 = rng.gen();
    binomial_inverse_cdf(n, p, u)
}

/// Smallest `k` with `F(k) > u` for Binomial(n, p).
pub fn binomial_inverse_cdf(n: u64, p: f64, u: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    let odds = p / (1.0 - p);
    let mode = (((n + 1) as f64) * p).floor().min(n as f64) as u64;

    // Unnormalized weights w(k)/w(mode) via the ratio recurrence
    // w(k+1)/w(k) = (n-k)/(k+1) * p/(1-p).
    let mut below = Vec::new();
    let mut w = 1.0;
    let mut k = mode;
    while k > 0 {
        w *= k as f64 / ((n - k + 1) as f64 * odds);
        if w < TAIL_CUTOFF {
            break;
        }
        below.push(w);
        k -= 1;
    }
    let lo = mode - below.len() as u64;

    let mut above = Vec::new();
    let mut w = 1.0;
    let mut k = mode;
    while k < n {
        w *= (n - k) as f64 / (k + 1) as f64 * odds;
        if w < TAIL_CUTOFF {
            break;
        }
        above.push(w);
        k += 1;
    }

    let weights: Vec<f64> = below
        .iter()
        .rev()
        .copied()
        .chain(std::iter::once(1.0))
        .chain(above.iter().copied())
        .collect();
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return lo + i as u64;
        }
    }
    lo + weights.len() as u64 - 1
}

/// Multinomial draw of `trials` over `probs`, as sequential conditional
/// binomials. `probs` must be nonnegative; it is renormalized.
pub fn multinomial<R: Rng + ?Sized, const K: usize>(
    rng: &mut R,
    trials: u64,
    probs: &[f64; K],
) -> [u64; K] {
    let mut counts = [0u64; K];
    let mut remaining = trials;
    let mut mass: f64 = probs.iter().sum();
    for i in 0..K {
        if remaining == 0 {
            break;
        }
        if i == K - 1 {
            counts[i] = remaining;
            break;
        }
        let p = if mass > 0.0 {
            (probs[i] / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = binomial(rng, remaining, p);
        counts[i] = draw;
        remaining -= draw;
        mass -= probs[i];
    }
    counts
}
