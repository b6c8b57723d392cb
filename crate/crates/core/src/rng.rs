//! Deterministic random streams.
//!
//! Every parallel task draws from a ChaCha stream selected by its task index,
//! so results never depend on how tasks are scheduled across workers.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha8Rng;

/// RNG for task `stream` of an experiment seeded with `seed`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform point on the unit sphere of `C^n` (as `2n` real Gaussians normalized).
pub fn unit_sphere<const N: usize>(rng: &mut StreamRng) -> [Complex<f64>; N] {
    loop {
        let mut v = [Complex::new(0.0, 0.0); N];
        let mut norm2 = 0.0;
        for c in v.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *c = Complex::new(re, im);
            norm2 += re * re + im * im;
        }
        if norm2 > 1e-300 {
            let inv = 1.0 / norm2.sqrt();
            for c in v.iter_mut() {
                *c *= inv;
            }
            return v;
        }
    }
}

/// Uniform point in the disk of radius `radius` in `C`.
pub fn disk(rng: &mut StreamRng, radius: f64) -> Complex<f64> {
    let r = radius * rng.random::<f64>().sqrt();
    Complex::from_polar(r, phase(rng))
}

/// Uniform phase in `[0, 2pi)`.
pub fn phase(rng: &mut StreamRng) -> f64 {
    std::f64::consts::TAU * rng.random::<f64>()
}

/// Uniform point in the ball of radius `radius` in `C^n` (real dimension `2n`).
pub fn ball<const N: usize>(rng: &mut StreamRng, radius: f64) -> [Complex<f64>; N] {
    let dir = unit_sphere::<N>(rng);
    let r = radius * rng.random::<f64>().powf(1.0 / (2 * N) as f64);
    dir.map(|c| c * r)
}
