//! Fixtures shared by the criterion benches.

use risopt_core::synth::{instance, seeded, Dims, Instance};
use risopt_core::{ConcatPhase, EffectiveTensor, C64};

/// A synthetic problem with its effective tensor and concatenated phases.
pub struct Fixture {
    pub inst: Instance,
    pub eff: EffectiveTensor,
    pub psi: Vec<C64>,
}

pub fn fixture(m: usize, n: usize, k: usize, l: usize) -> Fixture {
    let mut rng = seeded(0x5eed);
    let inst = instance(&mut rng, Dims::new(m, n, k, l), 100.0, 0.5);
    let eff = EffectiveTensor::new(&inst.real, &inst.bfs).expect("fixture dimensions agree");
    let psi = ConcatPhase::from_phi(&inst.phi).psi;
    Fixture { inst, eff, psi }
}

/// Sizes swept by the benches: `(M, N, K, L)`.
pub const SIZES: [(usize, usize, usize, usize); 3] = [(8, 2, 4, 16), (8, 4, 4, 32), (8, 4, 4, 64)];
