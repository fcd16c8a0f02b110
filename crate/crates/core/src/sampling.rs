//! Deterministic low-discrepancy point sets on S^4.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{norm, SpherePoint};

const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// The `i`-th point of the 6-dimensional Halton sequence.
pub fn halton6(i: u64) -> [f64; 6] {
    std::array::from_fn(|k| radical_inverse(i, PRIMES[k]))
}

/// `count` points of the Halton sequence, shifted modulo 1 (a Cranley–Patterson
/// rotation) by a seed-dependent vector, mapped to Gaussian vectors by
/// Box–Muller and projected radially. Seed 0 applies no shift.
pub fn sphere_points(count: usize, seed: u64) -> Vec<SpherePoint> {
    let shift: [f64; 6] = if seed == 0 {
        [0.0; 6]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        std::array::from_fn(|_| rng.random::<f64>())
    };
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    while out.len() < count {
        let h = halton6(i);
        i += 1;
        let u: [f64; 6] = std::array::from_fn(|k| (h[k] + shift[k]).fract());
        let mut g = [0.0; 6];
        for pair in 0..3 {
            let r = (-2.0 * (1.0 - u[2 * pair]).ln()).sqrt();
            let theta = 2.0 * PI * u[2 * pair + 1];
            g[2 * pair] = r * theta.cos();
            g[2 * pair + 1] = r * theta.sin();
        }
        let c: [f64; 5] = std::array::from_fn(|k| g[k]);
        let n = norm(&c);
        if !n.is_finite() || n <= 1e-6 {
            continue;
        }
        out.push(SpherePoint::new(c).expect("nonzero"));
    }
    out
}
