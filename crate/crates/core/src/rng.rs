//! Seeded random substreams.
//!
//! Every draw in a simulation is tied to a `(trial, ue, link)` triple. The
//! trial selects the ChaCha key, the `(ue, link)` pair selects the stream, so
//! any single channel draw can be reproduced without replaying the others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::tensor::C64;

/// Which part of a realization a substream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Link {
    UePosition = 1,
    Direct = 2,
    BsRis = 3,
    RisUe = 4,
    JointGain = 5,
    RandomPhase = 6,
    PhaseInit = 7,
    Synthetic = 8,
}

/// UE index used for draws shared by all UEs.
pub const SHARED: u64 = 0xFFFF;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for one `(seed, trial, ue, link)` substream.
pub fn substream(seed: u64, trial: u64, ue: u64, link: Link) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(trial)));
    rng.set_stream((ue << 8) | link as u64);
    rng
}

/// `CN(0, var)` sample.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// Uniform phase on the unit circle.
pub fn unit_phase<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    C64::from_polar(1.0, theta)
}
