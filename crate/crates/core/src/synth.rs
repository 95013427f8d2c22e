//! Random problem instances with i.i.d. `CN(0, 1)` entries.
//!
//! These bypass the geometric channel model and are what the numerical
//! checks, the gradient checker and the benchmarks run on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::ChannelRealization;
use crate::rng::{complex_normal, unit_phase};
use crate::tensor::{CMatrix, CTensor3, CVector, C64};
use crate::wmmse::BeamformerSet;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_cmatrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = complex_normal(rng, 1.0);
        }
    }
    m
}

pub fn random_cvec<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CVector {
    CVector::from_fn(len, |_, _| complex_normal(rng, 1.0))
}

pub fn random_tensor<R: Rng + ?Sized>(rng: &mut R, d1: usize, d2: usize, d3: usize) -> CTensor3 {
    let mut t = CTensor3::zeros(d1, d2, d3);
    for j in 0..d2 {
        for i in 0..d1 {
            for k in 0..d3 {
                t.set(i, j, k, complex_normal(rng, 1.0));
            }
        }
    }
    t
}

pub fn random_phases<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<C64> {
    (0..len).map(|_| unit_phase(rng)).collect()
}

/// Dimensions of a synthetic multi-user instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub l: usize,
}

impl Dims {
    pub fn new(m: usize, n: usize, k: usize, l: usize) -> Self {
        Self { m, n, k, l }
    }

    /// Uniform draw with every extent in `1..=max`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max: Dims) -> Self {
        Self {
            m: rng.random_range(1..=max.m),
            n: rng.random_range(1..=max.n),
            k: rng.random_range(1..=max.k),
            l: rng.random_range(1..=max.l),
        }
    }
}

/// A random realization plus random normalized beamformers and phases.
#[derive(Debug, Clone)]
pub struct Instance {
    pub real: ChannelRealization,
    pub bfs: BeamformerSet,
    pub phi: Vec<C64>,
}

/// Random instance. `snr` is `E_tx / σ²` with `E_tx = 1`; the RIS slabs are
/// scaled by `ris_scale` relative to the direct channel.
pub fn instance<R: Rng + ?Sized>(rng: &mut R, d: Dims, snr: f64, ris_scale: f64) -> Instance {
    let direct = (0..d.k).map(|_| random_cmatrix(rng, d.m, d.n)).collect();
    let ris = (0..d.k)
        .map(|_| {
            let mut t = random_tensor(rng, d.m, d.l, d.n);
            t.scale(C64::new(ris_scale, 0.0));
            t
        })
        .collect();
    let real = ChannelRealization::new(direct, ris, 1.0, 1.0 / snr)
        .expect("synthetic dimensions are consistent");
    let raw: Vec<CMatrix> = (0..d.k).map(|_| random_cmatrix(rng, d.m, d.n)).collect();
    let bfs = BeamformerSet::normalized(raw, 1.0).expect("random beamformers are nonzero");
    let phi = random_phases(rng, d.l);
    Instance { real, bfs, phi }
}
