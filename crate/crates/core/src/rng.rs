//! Seeded random streams.
//!
//! Every consumer draws from ChaCha8 keyed by the run seed, on its own
//! stream number. Adding a new consumer means adding a new stream; existing
//! streams never shift. Only `+ - * /` and `sqrt` are applied to raw draws,
//! so sampled values are identical on every IEEE-754 platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Placement = 1,
    Velocities = 2,
    Kick = 3,
    Reference = 4,
}

pub fn stream(seed: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}

/// Uniform unit vector, drawn by rejection from the unit disk.
pub fn unit_vector<R: Rng>(rng: &mut R) -> [f64; 2] {
    loop {
        let x = 2.0 * rng.gen::<f64>() - 1.0;
        let y = 2.0 * rng.gen::<f64>() - 1.0;
        let r2 = x * x + y * y;
        if r2 > 1e-12 && r2 <= 1.0 {
            let r = r2.sqrt();
            return [x / r, y / r];
        }
    }
}
