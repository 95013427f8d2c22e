//! WMMSE transmit beamforming for fixed effective channels.
//!
//! Channels are `H_k ∈ C^{M×N}` and UE `k` observes `H_kᴴ Σ_i B_i s_i + n`.
//! Rates are in nats; use [`nats_to_bits`] for bits per channel use.

use crate::error::{Error, Result};
use crate::tensor::{hermitize, inv_hpd, logdet_hermitian_psd, solve_hpd, CMatrix, C64};

pub fn nats_to_bits(r: f64) -> f64 {
    r / std::f64::consts::LN_2
}

/// Per-UE precoders `B_k ∈ C^{M×N}` sharing the power budget `E_tx`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub per_ue: Vec<CMatrix>,
    pub tx_power: f64,
}

impl BeamformerSet {
    /// Scales `raw` so that `Σ_k Tr(B_k B_kᴴ) = tx_power`.
    pub fn normalized(raw: Vec<CMatrix>, tx_power: f64) -> Result<Self> {
        let p: f64 = raw.iter().map(|b| b.norm_squared()).sum();
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Degenerate("beamformers carry no power".into()));
        }
        let s = C64::new((tx_power / p).sqrt(), 0.0);
        Ok(Self {
            per_ue: raw.into_iter().map(|b| b * s).collect(),
            tx_power,
        })
    }

    pub fn total_power(&self) -> f64 {
        self.per_ue.iter().map(|b| b.norm_squared()).sum()
    }

    pub fn num_ues(&self) -> usize {
        self.per_ue.len()
    }
}

/// MMSE receive filters `A_k` and weights `W_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WmmseState {
    pub filters: Vec<CMatrix>,
    pub weights: Vec<CMatrix>,
}

fn check_noise(noise_var: f64) -> Result<()> {
    if noise_var > 0.0 && noise_var.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("noise variance must be positive, got {noise_var}")))
    }
}

/// `σ²I + Σ_{i∈users} H_kᴴ B_i B_iᴴ H_k`.
fn received_cov<'a>(h_k: &CMatrix, users: impl Iterator<Item = &'a CMatrix>, noise_var: f64) -> CMatrix {
    let n = h_k.ncols();
    let mut r = CMatrix::identity(n, n) * C64::new(noise_var, 0.0);
    for b in users {
        let f = b.adjoint() * h_k;
        r += f.adjoint() * f;
    }
    hermitize(&r)
}

/// `R_ñk = σ²I + Σ_{i≠k} H_kᴴ B_i B_iᴴ H_k`.
pub fn interference_cov(h_k: &CMatrix, k: usize, bfs: &BeamformerSet, noise_var: f64) -> CMatrix {
    received_cov(
        h_k,
        bfs.per_ue.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, b)| b),
        noise_var,
    )
}

/// `A_k = B_kᴴ H_k (Σ_i H_kᴴ B_i B_iᴴ H_k + σ²I)⁻¹`.
pub fn mmse_filter(h_k: &CMatrix, k: usize, bfs: &BeamformerSet, noise_var: f64) -> Result<CMatrix> {
    check_noise(noise_var)?;
    let c = received_cov(h_k, bfs.per_ue.iter(), noise_var);
    let rhs = h_k.adjoint() * &bfs.per_ue[k];
    Ok(solve_hpd(&c, &rhs)?.adjoint())
}

/// `W_k = I + B_kᴴ H_k R_ñk⁻¹ H_kᴴ B_k`.
pub fn weight_matrix(h_k: &CMatrix, b_k: &CMatrix, r_eff: &CMatrix) -> Result<CMatrix> {
    let ch = hermitize(r_eff)
        .cholesky()
        .ok_or_else(|| Error::Domain("interference covariance is not positive definite".into()))?;
    let x = b_k.adjoint() * h_k;
    let y = ch.solve(&x.adjoint());
    let n = x.nrows();
    Ok(hermitize(&(CMatrix::identity(n, n) + x * y)))
}

pub fn wmmse_state(channels: &[CMatrix], bfs: &BeamformerSet, noise_var: f64) -> Result<WmmseState> {
    check_noise(noise_var)?;
    let mut filters = Vec::with_capacity(channels.len());
    let mut weights = Vec::with_capacity(channels.len());
    for (k, h) in channels.iter().enumerate() {
        filters.push(mmse_filter(h, k, bfs, noise_var)?);
        let r = interference_cov(h, k, bfs, noise_var);
        weights.push(weight_matrix(h, &bfs.per_ue[k], &r)?);
    }
    Ok(WmmseState { filters, weights })
}

/// Beamformer update from given filters and weights, normalized to `E_tx`.
pub fn beamformers_from_state(channels: &[CMatrix], state: &WmmseState, tx_power: f64, noise_var: f64) -> Result<BeamformerSet> {
    let m = channels[0].nrows();
    let mut gram = CMatrix::zeros(m, m);
    let mut reg = 0.0;
    let mut rhs = Vec::with_capacity(channels.len());
    for ((h, a), w) in channels.iter().zip(&state.filters).zip(&state.weights) {
        let awa = a.adjoint() * w * a;
        reg += awa.trace().re;
        gram += h * &awa * h.adjoint();
        rhs.push(h * a.adjoint() * w);
    }
    if !(reg > 0.0) {
        return Err(Error::Degenerate("all MMSE filters vanish".into()));
    }
    gram += CMatrix::identity(m, m) * C64::new(reg * noise_var / tx_power, 0.0);
    let inv = inv_hpd(&gram)?;
    BeamformerSet::normalized(rhs.iter().map(|r| &inv * r).collect(), tx_power)
}

/// One WMMSE iteration: filters and weights at `bfs`, then the regularized
/// beamformer solve and power normalization.
pub fn wmmse_step(channels: &[CMatrix], bfs: &BeamformerSet, noise_var: f64) -> Result<BeamformerSet> {
    let state = wmmse_state(channels, bfs, noise_var)?;
    beamformers_from_state(channels, &state, bfs.tx_power, noise_var)
}

/// Rate of UE `k` in nats.
pub fn user_rate(channels: &[CMatrix], bfs: &BeamformerSet, noise_var: f64, k: usize) -> Result<f64> {
    let r = interference_cov(&channels[k], k, bfs, noise_var);
    logdet_hermitian_psd(&weight_matrix(&channels[k], &bfs.per_ue[k], &r)?)
}

/// Sum rate in nats.
pub fn sum_rate(channels: &[CMatrix], bfs: &BeamformerSet, noise_var: f64) -> Result<f64> {
    check_noise(noise_var)?;
    (0..channels.len()).map(|k| user_rate(channels, bfs, noise_var, k)).sum()
}

/// Eigen-beamforming start: the left singular vectors of each `H_k`, padded
/// with zero columns to `N`, with equal power per UE.
pub fn init_beamformers(channels: &[CMatrix], tx_power: f64) -> Result<BeamformerSet> {
    let raw: Vec<CMatrix> = channels
        .iter()
        .map(|h| {
            let (m, n) = h.shape();
            let svd = h.clone().svd(true, false);
            let u = svd.u.expect("requested U");
            let mut b = CMatrix::zeros(m, n);
            let cols = u.ncols().min(n);
            b.columns_mut(0, cols).copy_from(&u.columns(0, cols));
            let p = b.norm_squared();
            if p > 0.0 {
                b /= C64::new(p.sqrt(), 0.0);
            }
            b
        })
        .collect();
    BeamformerSet::normalized(raw, tx_power)
}
