//! Single-user MIMO: SVD beamforming with water-filling, and RIS ascent
//! alternated with either the SVD or the WMMSE beamformer.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::maxr::{alternate, ascent_step, grad_q_first_single, rate_gradient_from_first};
use crate::rate::{signal_matrix, sum_rate_psi, ConcatPhase, EffectiveTensor};
use crate::solver::{Convergence, LineSearchCfg, OptOutcome, SolverCfg};
use crate::tensor::{CMatrix, C64};
use crate::wmmse::{init_beamformers, nats_to_bits, sum_rate, BeamformerSet};

/// Per-stream powers and the water level `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillAllocation {
    pub powers: Vec<f64>,
    pub water_level: f64,
}

/// Water-filling over channel gains `g_i = d_i²/σ²`:
/// `p_i = max(0, μ − 1/g_i)` with `Σ p_i = E_tx`. Solved exactly by growing
/// the active set over the gains in decreasing order.
pub fn waterfill(gains: &[f64], tx_power: f64) -> Result<WaterfillAllocation> {
    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    let active: Vec<usize> = order.into_iter().filter(|&i| gains[i] > 0.0).collect();
    if active.is_empty() {
        return Err(Error::Degenerate("channel has no nonzero singular value".into()));
    }
    let mut mu = 0.0;
    let mut inv_sum = 0.0;
    for (m, &i) in active.iter().enumerate() {
        let cand_sum = inv_sum + 1.0 / gains[i];
        let cand_mu = (tx_power + cand_sum) / (m + 1) as f64;
        if m > 0 && cand_mu <= 1.0 / gains[i] {
            break;
        }
        inv_sum = cand_sum;
        mu = cand_mu;
    }
    let powers = gains
        .iter()
        .map(|&g| if g > 0.0 { (mu - 1.0 / g).max(0.0) } else { 0.0 })
        .collect();
    Ok(WaterfillAllocation { powers, water_level: mu })
}

/// Singular values of `h` in decreasing order with the matching left
/// singular vectors as columns.
fn sorted_svd(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let svd = h.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let d = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let cols: Vec<_> = idx.iter().map(|&i| u.column(i).into_owned()).collect();
    (d, CMatrix::from_columns(&cols))
}

/// `B = U_N diag(√p)` for `H = U D Vᴴ`, with zero columns for idle streams
/// and for `N > M`.
pub fn svd_waterfill_beamformer(h: &CMatrix, tx_power: f64, noise_var: f64) -> Result<(CMatrix, WaterfillAllocation)> {
    let (m, n) = h.shape();
    let (d, u) = sorted_svd(h);
    let gains: Vec<f64> = d.iter().map(|x| x * x / noise_var).collect();
    let alloc = waterfill(&gains, tx_power)?;
    let mut b = CMatrix::zeros(m, n);
    for (c, p) in alloc.powers.iter().enumerate().take(n.min(u.ncols())) {
        b.set_column(c, &(u.column(c) * C64::new(p.sqrt(), 0.0)));
    }
    Ok((b, alloc))
}

/// Single-user rate gradient: `q_0 = XXᴴ/σ²` and first-level gradients
/// `(1/σ²) G_ℓ Xᴴ`, then the shared recursion.
pub fn su_rate_gradient(psi: &[C64], eff: &EffectiveTensor, noise_var: f64) -> Result<Vec<C64>> {
    if eff.num_ues() != 1 {
        return Err(Error::dim(format!("single-user gradient with {} UEs", eff.num_ues())));
    }
    let x = signal_matrix(0, psi, eff)?;
    let q0 = &x * x.adjoint() / C64::new(noise_var, 0.0);
    rate_gradient_from_first(&q0, grad_q_first_single(psi, eff, noise_var)?)
}

fn su_step(real: &ChannelRealization, bfs: &BeamformerSet, phi: &[C64], cfg: &LineSearchCfg) -> Result<(Vec<C64>, bool)> {
    let eff = EffectiveTensor::new(real, bfs)?;
    let psi = ConcatPhase::from_phi(phi).psi;
    let grad = su_rate_gradient(&psi, &eff, real.noise_var)?;
    let out = ascent_step(&psi, &grad, |p| sum_rate_psi(p, &eff, real.noise_var), cfg)?;
    let accepted = out.accepted();
    Ok((ConcatPhase { psi: out.psi }.phi(), accepted))
}

fn require_single_user(real: &ChannelRealization) -> Result<()> {
    if real.num_ues() != 1 {
        return Err(Error::config(format!("single-user optimizer needs num_ues = 1, got {}", real.num_ues())));
    }
    Ok(())
}

fn waterfill_set(real: &ChannelRealization, chans: &[CMatrix]) -> Result<BeamformerSet> {
    match svd_waterfill_beamformer(&chans[0], real.tx_power, real.noise_var) {
        Ok((b, _)) => Ok(BeamformerSet { per_ue: vec![b], tx_power: real.tx_power }),
        Err(Error::Degenerate(_)) => init_beamformers(chans, real.tx_power),
        Err(e) => Err(e),
    }
}

/// Water-filling beamformer alternated with RIS gradient ascent.
pub fn gd_svd(real: &ChannelRealization, phi0: &[C64], cfg: &SolverCfg) -> Result<OptOutcome> {
    require_single_user(real)?;
    if phi0.len() != real.ris_elements() {
        return Err(Error::dim(format!("φ of length {} for L = {}", phi0.len(), real.ris_elements())));
    }
    let s2 = real.noise_var;
    let mut phi = phi0.to_vec();
    let mut chans = real.channels(&phi)?;
    let mut bfs = waterfill_set(real, &chans)?;
    let mut rate = sum_rate(&chans, &bfs, s2)?;
    let mut out = OptOutcome {
        beamformers: bfs.clone(),
        phi: phi.clone(),
        rate_trace: vec![nats_to_bits(rate)],
        wmse_trace: Vec::new(),
        outer_iterations: 0,
        stagnations: 0,
    };
    let mut conv = Convergence::new(cfg);
    for _ in 0..cfg.max_outer {
        let (next, accepted) = su_step(real, &bfs, &phi, &cfg.line_search)?;
        if !accepted {
            out.stagnations += 1;
        }
        phi = next;
        chans = real.channels(&phi)?;
        bfs = waterfill_set(real, &chans)?;
        let r = sum_rate(&chans, &bfs, s2)?;
        let delta = nats_to_bits(r - rate);
        rate = r;
        out.rate_trace.push(nats_to_bits(rate));
        out.outer_iterations += 1;
        if conv.push(delta) {
            break;
        }
    }
    out.beamformers = bfs;
    out.phi = phi;
    Ok(out)
}

/// WMMSE beamformer alternated with RIS gradient ascent.
pub fn gd_wmmse(real: &ChannelRealization, phi0: &[C64], cfg: &SolverCfg) -> Result<OptOutcome> {
    require_single_user(real)?;
    alternate(real, phi0, cfg, |real, bfs, _, phi| {
        let (next, accepted) = su_step(real, bfs, phi, &cfg.line_search)?;
        Ok((next, accepted, None))
    })
}
