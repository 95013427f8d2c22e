//! Sum-rate gradient in `ψ` and projected gradient ascent on the RIS phases.
//!
//! Gradients are Wirtinger derivatives `∂R/∂ψ` with `ψ*` held fixed. For a
//! real objective the real-coordinate gradient is `(2 Re g, −2 Im g)`, so the
//! ascent direction in `ψ` is `g*`.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::rate::{
    noise_cov_from_mixed, project_unit_modulus, q_levels, signal_matrix, sum_rate_psi, ConcatPhase,
    EffectiveTensor,
};
use crate::solver::{Convergence, LineSearchCfg, OptOutcome, SolverCfg};
use crate::tensor::{inv_hpd, CMatrix, C64, ONE, ZERO};
use crate::wmmse::{beamformers_from_state, init_beamformers, nats_to_bits, sum_rate, wmmse_state, BeamformerSet, WmmseState};

/// `∇_ψ q_n^{ij}` for the pairs `i, j ≥ n` of one level.
#[derive(Debug, Clone)]
pub struct GradTable {
    level: usize,
    n: usize,
    l1: usize,
    data: Vec<C64>,
    present: Vec<bool>,
}

impl GradTable {
    fn empty(level: usize, n: usize, l1: usize) -> Self {
        Self {
            level,
            n,
            l1,
            data: vec![ZERO; n * n * l1],
            present: vec![false; n * n],
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn get(&self, i: usize, j: usize) -> Result<&[C64]> {
        if i >= self.n || j >= self.n || !self.present[i * self.n + j] {
            return Err(Error::Internal(format!(
                "gradient of q^({i},{j}) missing at level {}",
                self.level
            )));
        }
        let s = (i * self.n + j) * self.l1;
        Ok(&self.data[s..s + self.l1])
    }

    fn slot(&mut self, i: usize, j: usize) -> &mut [C64] {
        self.present[i * self.n + j] = true;
        let s = (i * self.n + j) * self.l1;
        &mut self.data[s..s + self.l1]
    }
}

/// `∂R_ñk/∂ψ_ℓ = Σ_{i≠k} F_{k,i}ᴴ G_{k,i,ℓ}`.
pub fn grad_noise_cov(k: usize, psi: &[C64], eff: &EffectiveTensor, ell: usize) -> CMatrix {
    let n = eff.streams();
    let mut d = CMatrix::zeros(n, n);
    for i in (0..eff.num_ues()).filter(|&i| i != k) {
        d += eff.mixed(k, i, psi).adjoint() * eff.block(k, i, ell);
    }
    d
}

/// Level-0 table: `∇_{ψ_ℓ} q_0^{ij} = [(G_{k,k,ℓ} − X R⁻¹ ∂_ℓR) R⁻¹ Xᴴ](i, j)`.
pub fn grad_q_first(k: usize, psi: &[C64], eff: &EffectiveTensor, r_inv: &CMatrix) -> Result<GradTable> {
    let n = eff.streams();
    let l1 = eff.psi_len();
    let x = signal_matrix(k, psi, eff)?;
    let y = r_inv * x.adjoint();
    let z = &x * r_inv;
    let corr: Vec<(usize, CMatrix)> = (0..eff.num_ues())
        .filter(|&i| i != k)
        .map(|i| (i, &z * eff.mixed(k, i, psi).adjoint()))
        .collect();
    let mut t = GradTable::empty(0, n, l1);
    for ell in 0..l1 {
        let mut d = eff.block(k, k, ell).clone();
        for (i, c) in &corr {
            d -= c * eff.block(k, *i, ell);
        }
        let mm = d * &y;
        for i in 0..n {
            for j in 0..n {
                t.slot(i, j)[ell] = mm[(i, j)];
            }
        }
    }
    Ok(t)
}

/// Level-0 table without interference: `(1/σ²) G_{k,k,ℓ} Xᴴ`.
pub fn grad_q_first_single(psi: &[C64], eff: &EffectiveTensor, noise_var: f64) -> Result<GradTable> {
    let n = eff.streams();
    let l1 = eff.psi_len();
    let xh = signal_matrix(0, psi, eff)?.adjoint() / C64::new(noise_var, 0.0);
    let mut t = GradTable::empty(0, n, l1);
    for ell in 0..l1 {
        let mm = eff.block(0, 0, ell) * &xh;
        for i in 0..n {
            for j in 0..n {
                t.slot(i, j)[ell] = mm[(i, j)];
            }
        }
    }
    Ok(t)
}

/// Next level from `prev` and the q values at `prev`'s level:
///
/// ```text
/// ∇q_n^{ij} = ∇q^{ij} − (q^{mj}/d)∇q^{im} − (q^{im}/d)∇q^{mj} + (q^{im}q^{mj}/d²)∇q^{mm}
/// ```
///
/// with `m = n − 1` and `d = 1 + q^{mm}`.
pub fn grad_q_recursive(prev: &GradTable, q_prev: &CMatrix) -> Result<GradTable> {
    let lvl = prev.level + 1;
    let m = prev.level;
    let (n, l1) = (prev.n, prev.l1);
    let den = ONE + q_prev[(m, m)];
    let gmm = prev.get(m, m)?.to_vec();
    let mut t = GradTable::empty(lvl, n, l1);
    for i in lvl..n {
        let gim = prev.get(i, m)?;
        let qim = q_prev[(i, m)];
        for j in lvl..n {
            let gij = prev.get(i, j)?;
            let gmj = prev.get(m, j)?;
            let qmj = q_prev[(m, j)];
            let (a, b, c) = (qmj / den, qim / den, qim * qmj / (den * den));
            let out: Vec<C64> = (0..l1)
                .map(|l| gij[l] - a * gim[l] - b * gmj[l] + c * gmm[l])
                .collect();
            t.slot(i, j).copy_from_slice(&out);
        }
    }
    Ok(t)
}

/// `∇R_k = Σ_n ∇q_n^{nn} / (1 + q_n^{nn})` from `q_0` and its gradient table.
pub fn rate_gradient_from_first(q0: &CMatrix, first: GradTable) -> Result<Vec<C64>> {
    let levels = q_levels(q0)?;
    let l1 = first.l1;
    let mut grad = vec![ZERO; l1];
    let mut table = first;
    for (n, q) in levels.iter().enumerate() {
        let den = 1.0 + q[(n, n)].re;
        for (g, d) in grad.iter_mut().zip(table.get(n, n)?) {
            *g += d / den;
        }
        if n + 1 < levels.len() {
            table = grad_q_recursive(&table, q)?;
        }
    }
    Ok(grad)
}

/// `∂R_k/∂ψ` for one UE.
pub fn user_rate_gradient(k: usize, psi: &[C64], eff: &EffectiveTensor, r_inv: &CMatrix) -> Result<Vec<C64>> {
    let x = signal_matrix(k, psi, eff)?;
    let q0 = &x * r_inv * x.adjoint();
    rate_gradient_from_first(&q0, grad_q_first(k, psi, eff, r_inv)?)
}

/// `∂(Σ_k R_k)/∂ψ`.
pub fn sum_rate_gradient(psi: &[C64], eff: &EffectiveTensor, noise_var: f64) -> Result<Vec<C64>> {
    let mut grad = vec![ZERO; eff.psi_len()];
    for k in 0..eff.num_ues() {
        let r = noise_cov_from_mixed(k, &eff.mixed_row(k, psi), noise_var);
        let g = user_rate_gradient(k, psi, eff, &inv_hpd(&r)?)?;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    Ok(grad)
}

/// Result of one RIS ascent step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub psi: Vec<C64>,
    /// Sum rate in nats at `psi`.
    pub rate: f64,
    /// Accepted step size, 0 when the step was rejected.
    pub beta: f64,
}

impl StepOutcome {
    pub fn accepted(&self) -> bool {
        self.beta > 0.0
    }
}

/// Projected ascent `ψ' = P(ψ + β g*)` with `β` chosen by bisection: a trial
/// `β` that improves the sum rate becomes the new lower end, otherwise the
/// new upper end. The last improving `β` is used; if none improved, `ψ` is
/// returned unchanged.
pub fn ascent_step(
    psi: &[C64],
    grad: &[C64],
    rate: impl Fn(&[C64]) -> Result<f64>,
    cfg: &LineSearchCfg,
) -> Result<StepOutcome> {
    let r0 = rate(psi)?;
    let unchanged = StepOutcome { psi: psi.to_vec(), rate: r0, beta: 0.0 };
    if grad.iter().all(|g| *g == ZERO) {
        return Ok(unchanged);
    }
    let trial = |beta: f64| -> Vec<C64> {
        let raw: Vec<C64> = psi.iter().zip(grad).map(|(p, g)| p + g.conj() * beta).collect();
        project_unit_modulus(&raw)
    };
    let (mut lo, mut hi) = (cfg.beta_min, cfg.beta_max);
    let mut best: Option<(f64, Vec<C64>, f64)> = None;
    for _ in 0..cfg.iterations {
        let beta = 0.5 * (lo + hi);
        let cand = trial(beta);
        let r = rate(&cand)?;
        if r > r0 {
            lo = beta;
            best = Some((beta, cand, r));
        } else {
            hi = beta;
        }
    }
    Ok(match best {
        Some((beta, psi, rate)) => StepOutcome { psi, rate, beta },
        None => unchanged,
    })
}

/// One RIS update at fixed beamformers. The returned `ψ` is re-gauged so that
/// `ψ_0 = 1`.
pub fn maxr_step(psi: &[C64], eff: &EffectiveTensor, noise_var: f64, cfg: &LineSearchCfg) -> Result<StepOutcome> {
    let grad = sum_rate_gradient(psi, eff, noise_var)?;
    let mut out = ascent_step(psi, &grad, |p| sum_rate_psi(p, eff, noise_var), cfg)?;
    out.psi = ConcatPhase::from_phi(&ConcatPhase { psi: out.psi }.phi()).psi;
    Ok(out)
}

/// Alternating WMMSE beamforming and RIS gradient ascent.
pub fn maxr_wmmse(real: &ChannelRealization, phi0: &[C64], cfg: &SolverCfg) -> Result<OptOutcome> {
    alternate(real, phi0, cfg, |real, bfs, _, phi| {
        let eff = EffectiveTensor::new(real, bfs)?;
        let step = maxr_step(&ConcatPhase::from_phi(phi).psi, &eff, real.noise_var, &cfg.line_search)?;
        let accepted = step.accepted();
        Ok((ConcatPhase { psi: step.psi }.phi(), accepted, None))
    })
}

/// Beamforming only, with the RIS held at `phi0`.
pub fn wmmse_only(real: &ChannelRealization, phi0: &[C64], cfg: &SolverCfg) -> Result<OptOutcome> {
    alternate(real, phi0, cfg, |_, _, _, phi| Ok((phi.to_vec(), true, None)))
}

/// Outer loop shared by the WMMSE-based optimizers: one WMMSE step, then one
/// RIS update, until the rate settles or the cap is reached. A degenerate
/// beamformer update ends the run at the last feasible point.
pub(crate) fn alternate(
    real: &ChannelRealization,
    phi0: &[C64],
    cfg: &SolverCfg,
    mut ris_update: impl FnMut(&ChannelRealization, &BeamformerSet, &WmmseState, &[C64]) -> Result<(Vec<C64>, bool, Option<f64>)>,
) -> Result<OptOutcome> {
    if phi0.len() != real.ris_elements() {
        return Err(Error::dim(format!("φ of length {} for L = {}", phi0.len(), real.ris_elements())));
    }
    let s2 = real.noise_var;
    let mut phi = phi0.to_vec();
    let mut chans = real.channels(&phi)?;
    let mut bfs = init_beamformers(&chans, real.tx_power)?;
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
        // The RIS update sees the filters and weights that produced `bfs`.
        let state = wmmse_state(&chans, &bfs, s2)?;
        bfs = match beamformers_from_state(&chans, &state, real.tx_power, s2) {
            Ok(b) => b,
            Err(Error::Degenerate(_)) => break,
            Err(e) => return Err(e),
        };
        let (next, accepted, wmse) = ris_update(real, &bfs, &state, &phi)?;
        if !accepted {
            out.stagnations += 1;
        }
        if let Some(w) = wmse {
            out.wmse_trace.push(w);
        }
        phi = next;
        chans = real.channels(&phi)?;
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{fd_sum_rate_gradient, real_gradient, relative_error};
    use crate::rate::noise_cov_inverses;
    use crate::synth::{instance, random_cmatrix, random_tensor, seeded, Dims};
    use crate::tensor::CTensor3;

    fn setup(seed: u64, d: Dims, ris_scale: f64) -> (crate::synth::Instance, EffectiveTensor, Vec<C64>) {
        let mut rng = seeded(seed);
        let inst = instance(&mut rng, d, 20.0, ris_scale);
        let eff = EffectiveTensor::new(&inst.real, &inst.bfs).unwrap();
        let psi = ConcatPhase::from_phi(&inst.phi).psi;
        (inst, eff, psi)
    }

    #[test]
    fn noise_cov_gradient_vanishes_without_interference() {
        let (_, eff, psi) = setup(1, Dims::new(4, 2, 1, 3), 0.5);
        for ell in 0..4 {
            assert_eq!(grad_noise_cov(0, &psi, &eff, ell), CMatrix::zeros(2, 2));
        }
    }

    #[test]
    fn noise_cov_gradient_matches_finite_differences() {
        let (inst, eff, psi) = setup(2, Dims::new(5, 3, 3, 4), 0.5);
        let s2 = inst.real.noise_var;
        let h = 1e-6;
        for ell in 0..5 {
            let d = grad_noise_cov(1, &psi, &eff, ell);
            // Holomorphic part: move ψ_ℓ along 1 and i and combine.
            let shift = |z: C64| {
                let mut p = psi.clone();
                p[ell] += z;
                crate::rate::effective_noise_cov(1, &p, &eff, s2).unwrap()
            };
            let dre = (shift(C64::new(h, 0.0)) - shift(C64::new(-h, 0.0))) / C64::new(2.0 * h, 0.0);
            let dim = (shift(C64::new(0.0, h)) - shift(C64::new(0.0, -h))) / C64::new(2.0 * h, 0.0);
            let wirt = (dre - dim * C64::new(0.0, 1.0)) * C64::new(0.5, 0.0);
            assert!((&wirt - &d).norm() <= 1e-5 * d.norm().max(1e-12), "{ell}");
        }
    }

    #[test]
    fn first_gradient_without_interference_is_plain_product() {
        let (inst, eff, psi) = setup(3, Dims::new(4, 3, 1, 4), 0.5);
        let r_inv = noise_cov_inverses(&psi, &eff, inst.real.noise_var).unwrap();
        let t = grad_q_first(0, &psi, &eff, &r_inv[0]).unwrap();
        let psi_conj: Vec<C64> = psi.iter().map(|z| z.conj()).collect();
        let pc = crate::tensor::CVector::from_column_slice(&psi_conj);
        for i in 0..3 {
            for j in 0..3 {
                let want = eff.hbar(0, i) * &r_inv[0] * eff.hbar(0, j).adjoint() * &pc;
                let got = t.get(i, j).unwrap();
                for l in 0..5 {
                    assert!((got[l] - want[l]).norm() < 1e-10 * want.norm());
                }
            }
        }
        let single = grad_q_first_single(&psi, &eff, inst.real.noise_var).unwrap();
        for l in 0..5 {
            assert!((single.get(1, 2).unwrap()[l] - t.get(1, 2).unwrap()[l]).norm() < 1e-10 * want_norm(&t));
        }
    }

    fn want_norm(t: &GradTable) -> f64 {
        t.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn first_gradient_is_homogeneous_without_interference() {
        let (inst, eff, psi) = setup(4, Dims::new(4, 2, 1, 3), 0.5);
        let r_inv = CMatrix::identity(2, 2) / C64::new(inst.real.noise_var, 0.0);
        let psi2: Vec<C64> = psi.iter().map(|z| z * 2.0).collect();
        let a = grad_q_first(0, &psi, &eff, &r_inv).unwrap();
        let b = grad_q_first(0, &psi2, &eff, &r_inv).unwrap();
        for l in 0..4 {
            assert!((b.get(0, 1).unwrap()[l] - a.get(0, 1).unwrap()[l] * 2.0).norm() < 1e-9);
        }
    }

    #[test]
    fn first_gradient_matches_finite_differences() {
        let (inst, eff, psi) = setup(5, Dims::new(5, 3, 3, 4), 0.7);
        let s2 = inst.real.noise_var;
        let q = |p: &[C64], i: usize, j: usize| -> C64 {
            let r = crate::rate::effective_noise_cov(0, p, &eff, s2).unwrap();
            let x = signal_matrix(0, p, &eff).unwrap();
            (x.row(i) * crate::tensor::inv_hpd(&r).unwrap() * x.row(j).adjoint())[(0, 0)]
        };
        // Only q^{ii} is real, so check the real gradient of q^{ii}.
        let r_inv = noise_cov_inverses(&psi, &eff, s2).unwrap();
        let t = grad_q_first(0, &psi, &eff, &r_inv[0]).unwrap();
        for i in 0..3 {
            let g = t.get(i, i).unwrap();
            let analytic = real_gradient(g);
            let f = |p: &[C64]| q(p, i, i).re;
            let fd = crate::gradcheck::central_differences(&f, &psi, 1e-6);
            assert!(relative_error(&analytic, &fd) < 1e-5);
        }
    }

    #[test]
    fn two_stream_recursion_matches_expanded_formula() {
        let (inst, eff, psi) = setup(6, Dims::new(5, 2, 2, 4), 0.5);
        let r_inv = noise_cov_inverses(&psi, &eff, inst.real.noise_var).unwrap();
        let x = signal_matrix(0, &psi, &eff).unwrap();
        let q0 = &x * &r_inv[0] * x.adjoint();
        let t0 = grad_q_first(0, &psi, &eff, &r_inv[0]).unwrap();
        let t1 = grad_q_recursive(&t0, &q0).unwrap();
        // q_1^{11} = q^{11} − |q^{10}|²/(1+q^{00}); differentiate by hand.
        let d = ONE + q0[(0, 0)];
        for l in 0..5 {
            let g = |i, j| t0.get(i, j).unwrap()[l];
            let want = g(1, 1)
                - (g(1, 0) * q0[(0, 1)] + q0[(1, 0)] * g(0, 1)) / d
                + q0[(1, 0)] * q0[(0, 1)] * g(0, 0) / (d * d);
            assert!((t1.get(1, 1).unwrap()[l] - want).norm() < 1e-12 * want.norm().max(1.0));
        }
        assert!(matches!(t1.get(0, 0), Err(Error::Internal(_))));
    }

    #[test]
    fn end_to_end_gradient_matches_finite_differences() {
        for seed in 0..10 {
            let (inst, eff, psi) = setup(100 + seed, Dims::new(5, 3, 3, 6), 0.6);
            let s2 = inst.real.noise_var;
            let g = sum_rate_gradient(&psi, &eff, s2).unwrap();
            let fd = fd_sum_rate_gradient(&psi, &eff, s2, 1e-6).unwrap();
            let err = relative_error(&real_gradient(&g), &fd);
            assert!(err < 1e-5, "seed {seed}: {err}");
        }
    }

    #[test]
    fn zero_gradient_keeps_psi() {
        let psi = vec![ONE; 3];
        let out = ascent_step(&psi, &[ZERO; 3], |_| Ok(1.0), &LineSearchCfg::default()).unwrap();
        assert_eq!(out.psi, psi);
        assert!(!out.accepted());
    }

    #[test]
    fn step_never_lowers_the_rate() {
        for seed in 0..10 {
            let (inst, eff, psi) = setup(200 + seed, Dims::new(6, 3, 3, 8), 0.5);
            let s2 = inst.real.noise_var;
            let r0 = sum_rate_psi(&psi, &eff, s2).unwrap();
            let out = maxr_step(&psi, &eff, s2, &LineSearchCfg::default()).unwrap();
            assert!(out.rate >= r0 - 1e-12);
            assert_eq!(out.psi[0], ONE);
            assert!(out.psi.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
            let r1 = sum_rate_psi(&out.psi, &eff, s2).unwrap();
            assert!((r1 - out.rate).abs() < 1e-10);
        }
    }

    #[test]
    fn miso_single_element_aligns_with_direct_path() {
        let mut rng = seeded(7);
        let hd = random_cmatrix(&mut rng, 1, 1);
        let t = random_tensor(&mut rng, 1, 1, 1);
        let hr = t.get(0, 0, 0);
        let real = ChannelRealization::new(vec![hd.clone()], vec![t], 1.0, 0.1).unwrap();
        let cfg = SolverCfg::default();
        let out = maxr_wmmse(&real, &[ONE], &cfg).unwrap();
        let want = (hd[(0, 0)].arg() - hr.arg()).rem_euclid(2.0 * std::f64::consts::PI);
        // Grid search over the phase for the best |h_d + φ h_r|.
        let mut best = (0.0, f64::MIN);
        for i in 0..10_000 {
            let th = 2.0 * std::f64::consts::PI * i as f64 / 10_000.0;
            let g = (hd[(0, 0)] + C64::from_polar(1.0, th) * hr).norm();
            if g > best.1 {
                best = (th, g);
            }
        }
        let got = out.phi[0].arg().rem_euclid(2.0 * std::f64::consts::PI);
        let wrap = |a: f64| (a + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
        assert!(wrap(got - best.0).abs() < 1e-3, "{got} vs {}", best.0);
        assert!(wrap(got - want).abs() < 1e-3);
    }

    #[test]
    fn traces_are_monotone_and_feasible() {
        for seed in 0..5 {
            let mut rng = seeded(300 + seed);
            let inst = instance(&mut rng, Dims::new(6, 2, 3, 8), 100.0, 0.4);
            let out = maxr_wmmse(&inst.real, &vec![ONE; 8], &SolverCfg { max_outer: 60, ..SolverCfg::default() }).unwrap();
            for w in out.rate_trace.windows(2) {
                assert!(w[1] - w[0] >= -1e-9, "{:?}", w);
            }
            assert!(out.phi.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
            let chans = inst.real.channels(&out.phi).unwrap();
            let r = nats_to_bits(sum_rate(&chans, &out.beamformers, inst.real.noise_var).unwrap());
            assert!((r - out.final_rate()).abs() < 1e-10);
        }
    }

    #[test]
    fn without_ris_matches_wmmse_only() {
        let mut rng = seeded(8);
        let inst = instance(&mut rng, Dims::new(4, 2, 2, 5), 50.0, 0.5);
        let real = inst.real.without_ris();
        let cfg = SolverCfg::default();
        let a = maxr_wmmse(&real, &inst.phi, &cfg).unwrap();
        let b = wmmse_only(&real, &inst.phi, &cfg).unwrap();
        assert_eq!(a.rate_trace, b.rate_trace);
        assert!(a.phi.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn reruns_are_bit_identical() {
        let mut rng = seeded(9);
        let inst = instance(&mut rng, Dims::new(4, 2, 2, 6), 50.0, 0.5);
        let cfg = SolverCfg { max_outer: 20, ..SolverCfg::default() };
        let a = maxr_wmmse(&inst.real, &inst.phi, &cfg).unwrap();
        let b = maxr_wmmse(&inst.real, &inst.phi, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let mut rng = seeded(10);
        let inst = instance(&mut rng, Dims::new(2, 1, 1, 3), 10.0, 1.0);
        let _ = CTensor3::zeros(1, 1, 1);
        assert!(maxr_wmmse(&inst.real, &[ONE; 2], &SolverCfg::default()).is_err());
    }
}
