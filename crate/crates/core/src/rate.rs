//! Per-UE rate as a product of scalar quadratic forms in `ψ = [1; φ]`.
//!
//! With the concatenated channel `ℋ_k = [H_d,k : ℋ_R,k]`, the blocks
//! `G_{k,i,ℓ} = B_iᴴ [[ℋ_k(:,ℓ,:)]]` give `B_iᴴ H_k = Σ_ℓ ψ_ℓ G_{k,i,ℓ}`. Writing
//! `x_n` for row `n` of `X = B_kᴴ H_k`, the determinant lemma turns
//!
//! ```text
//! R_k = ln det(I + X R_ñk⁻¹ Xᴴ) = Σ_n ln(1 + x_n P_n x_nᴴ)
//! ```
//!
//! where `P_1 = R_ñk⁻¹` and each `P_{n+1}` is a rank-one downdate of `P_n`.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::tensor::{
    hermitize, inv_hpd, logdet_hermitian_psd, mode_matrix_product, Axis, CMatrix, CTensor3, C64, ONE, ZERO,
};
use crate::wmmse::BeamformerSet;

/// Smallest accepted `1 + x_n P_n x_nᴴ` before the chain is declared broken.
const MIN_DENOMINATOR: f64 = 0.5;

/// `ψ = [1; φ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcatPhase {
    pub psi: Vec<C64>,
}

impl ConcatPhase {
    pub fn from_phi(phi: &[C64]) -> Self {
        let mut psi = Vec::with_capacity(phi.len() + 1);
        psi.push(ONE);
        psi.extend_from_slice(phi);
        Self { psi }
    }

    /// `φ = ψ_{1:}/ψ_0`, which removes the global phase.
    pub fn phi(&self) -> Vec<C64> {
        let p0 = self.psi[0];
        self.psi[1..].iter().map(|z| z / p0).collect()
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }
}

/// `exp(j∠x)` elementwise, with `∠0 = 0`.
pub fn project_unit_modulus(x: &[C64]) -> Vec<C64> {
    x.iter().map(|z| C64::from_polar(1.0, z.im.atan2(z.re))).collect()
}

/// Effective tensors `ℋ_k ×₁ B_i*` for every `(k, i)`, with their slabs
/// cached as `N×N` blocks.
#[derive(Debug, Clone)]
pub struct EffectiveTensor {
    num_ues: usize,
    n: usize,
    l1: usize,
    blocks: Vec<CMatrix>,
}

impl EffectiveTensor {
    pub fn new(real: &ChannelRealization, bfs: &BeamformerSet) -> Result<Self> {
        let kk = real.num_ues();
        if bfs.num_ues() != kk {
            return Err(Error::dim(format!("{} beamformers for {kk} UEs", bfs.num_ues())));
        }
        let concat: Vec<CTensor3> = (0..kk).map(|k| real.concatenated(k)).collect();
        Self::from_concatenated(&concat, bfs)
    }

    pub fn from_concatenated(concat: &[CTensor3], bfs: &BeamformerSet) -> Result<Self> {
        let kk = concat.len();
        let [m, l1, n] = concat[0].dims();
        let mut blocks = Vec::with_capacity(kk * kk * l1);
        for t in concat {
            for b in &bfs.per_ue {
                if b.shape() != (m, n) {
                    return Err(Error::dim(format!("beamformer {:?} against M={m}, N={n}", b.shape())));
                }
                let eff = mode_matrix_product(t, &b.conjugate(), Axis::One)?;
                blocks.extend(eff.slabs());
            }
        }
        Ok(Self { num_ues: kk, n, l1, blocks })
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn streams(&self) -> usize {
        self.n
    }

    /// `L + 1`.
    pub fn psi_len(&self) -> usize {
        self.l1
    }

    /// `G_{k,i,ℓ} = B_iᴴ [[ℋ_k(:,ℓ,:)]]`.
    #[inline]
    pub fn block(&self, k: usize, i: usize, ell: usize) -> &CMatrix {
        &self.blocks[(k * self.num_ues + i) * self.l1 + ell]
    }

    /// `ℋ̃_{k,i} = ℋ_k ×₁ B_i*` as an `N×(L+1)×N` tensor.
    pub fn tensor(&self, k: usize, i: usize) -> CTensor3 {
        let slabs: Vec<CMatrix> = (0..self.l1).map(|l| self.block(k, i, l).clone()).collect();
        CTensor3::from_slabs(&slabs).expect("at least one slab")
    }

    /// `H̄_{k,n} = [[ℋ̃_k(n,:,:)]] ∈ C^{(L+1)×N}`.
    pub fn hbar(&self, k: usize, n: usize) -> CMatrix {
        CMatrix::from_fn(self.l1, self.n, |l, c| self.block(k, k, l)[(n, c)])
    }

    /// `H̃_{k,i,n} = [[ℋ̃_{k,i}(:,:,n)]] ∈ C^{N×(L+1)}`.
    pub fn htilde(&self, k: usize, i: usize, n: usize) -> CMatrix {
        CMatrix::from_fn(self.n, self.l1, |a, l| self.block(k, i, l)[(a, n)])
    }

    /// `F_{k,i} = [[ℋ̃_{k,i} ×₂ ψ]] = B_iᴴ H_k`.
    pub fn mixed(&self, k: usize, i: usize, psi: &[C64]) -> CMatrix {
        let mut f = CMatrix::zeros(self.n, self.n);
        for (l, &p) in psi.iter().enumerate() {
            f += self.block(k, i, l) * p;
        }
        f
    }

    /// All `F_{k,i}` for one `k`.
    pub fn mixed_row(&self, k: usize, psi: &[C64]) -> Vec<CMatrix> {
        (0..self.num_ues).map(|i| self.mixed(k, i, psi)).collect()
    }

    fn check_psi(&self, psi: &[C64]) -> Result<()> {
        if psi.len() == self.l1 {
            Ok(())
        } else {
            Err(Error::dim(format!("ψ of length {} against L+1 = {}", psi.len(), self.l1)))
        }
    }
}

/// `R_ñk = σ²I + Σ_{i≠k} F_{k,i}ᴴ F_{k,i}` from precomputed `F_{k,·}`.
pub fn noise_cov_from_mixed(k: usize, mixed: &[CMatrix], noise_var: f64) -> CMatrix {
    let n = mixed[0].nrows();
    let mut r = CMatrix::identity(n, n) * C64::new(noise_var, 0.0);
    for (i, f) in mixed.iter().enumerate() {
        if i != k {
            r += f.adjoint() * f;
        }
    }
    hermitize(&r)
}

/// `R_ñk` evaluated through the effective tensors.
pub fn effective_noise_cov(k: usize, psi: &[C64], eff: &EffectiveTensor, noise_var: f64) -> Result<CMatrix> {
    eff.check_psi(psi)?;
    Ok(noise_cov_from_mixed(k, &eff.mixed_row(k, psi), noise_var))
}

/// `R_ñk` as the quadratic form `(I⊗ψᴴ) 𝒢 (I⊗ψ)` with
/// `𝒢_{ℓ,ℓ'} = Σ_{i≠k} G_{k,i,ℓ}ᴴ G_{k,i,ℓ'}`.
pub fn effective_noise_cov_structured(k: usize, psi: &[C64], eff: &EffectiveTensor, noise_var: f64) -> Result<CMatrix> {
    eff.check_psi(psi)?;
    let n = eff.n;
    let mut r = CMatrix::identity(n, n) * C64::new(noise_var, 0.0);
    for i in (0..eff.num_ues).filter(|&i| i != k) {
        for (l, pl) in psi.iter().enumerate() {
            for (lp, plp) in psi.iter().enumerate() {
                let g = eff.block(k, i, l).adjoint() * eff.block(k, i, lp);
                r += g * (pl.conj() * plp);
            }
        }
    }
    Ok(r)
}

/// The downdate chain `P_1, …, P_N` of one UE.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjChain {
    pub mats: Vec<CMatrix>,
}

impl ProjChain {
    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }
}

/// `X = B_kᴴ H_k` with rows `x_n = ψᵀ H̄_{k,n}`.
pub fn signal_matrix(k: usize, psi: &[C64], eff: &EffectiveTensor) -> Result<CMatrix> {
    eff.check_psi(psi)?;
    Ok(eff.mixed(k, k, psi))
}

/// `P_1 = R⁻¹`, `P_{n+1} = P_n − P_n x_nᴴ x_n P_n / (1 + x_n P_n x_nᴴ)`.
pub fn proj_chain(k: usize, psi: &[C64], eff: &EffectiveTensor, r_inv: &CMatrix) -> Result<ProjChain> {
    let x = signal_matrix(k, psi, eff)?;
    chain_from_rows(&x, r_inv)
}

fn chain_from_rows(x: &CMatrix, r_inv: &CMatrix) -> Result<ProjChain> {
    let n = x.nrows();
    let mut mats = Vec::with_capacity(n);
    mats.push(r_inv.clone());
    for row in 0..n.saturating_sub(1) {
        let p = &mats[row];
        let xr = x.row(row);
        let px = p * xr.adjoint();
        let den = ONE + (xr * &px)[(0, 0)];
        check_denominator(den)?;
        let next = hermitize(&(p - &px * px.adjoint() / den));
        mats.push(next);
    }
    Ok(ProjChain { mats })
}

fn check_denominator(den: C64) -> Result<()> {
    if den.re < MIN_DENOMINATOR || !den.re.is_finite() {
        return Err(Error::Numerical(format!("projection chain denominator {den} below {MIN_DENOMINATOR}")));
    }
    Ok(())
}

/// `q_{k,n}^{i,j} = x_i P_n x_jᴴ` evaluated directly (`n` is 0-based).
pub fn q_value(k: usize, n: usize, i: usize, j: usize, psi: &[C64], eff: &EffectiveTensor, chain: &ProjChain) -> Result<C64> {
    let x = signal_matrix(k, psi, eff)?;
    if n >= chain.len() || i >= x.nrows() || j >= x.nrows() {
        return Err(Error::dim(format!("q index ({n}, {i}, {j}) out of range for N = {}", x.nrows())));
    }
    Ok((x.row(i) * &chain.mats[n] * x.row(j).adjoint())[(0, 0)])
}

/// Levels `q_0, …, q_{N−1}` of the auxiliary table. Level 0 is `X R⁻¹ Xᴴ`;
/// level `n` is obtained from level `n−1` by
/// `q_n^{ij} = q^{ij} − q^{i,n−1} q^{n−1,j} / (1 + q^{n−1,n−1})`. Entries
/// with `i` or `j` below `n` are left at zero.
pub fn q_levels(q0: &CMatrix) -> Result<Vec<CMatrix>> {
    let n = q0.nrows();
    let mut levels = Vec::with_capacity(n);
    levels.push(q0.clone());
    for lvl in 1..n {
        let prev = &levels[lvl - 1];
        let m = lvl - 1;
        let den = ONE + prev[(m, m)];
        check_denominator(den)?;
        let mut next = CMatrix::zeros(n, n);
        for i in lvl..n {
            for j in lvl..n {
                next[(i, j)] = prev[(i, j)] - prev[(i, m)] * prev[(m, j)] / den;
            }
        }
        levels.push(next);
    }
    Ok(levels)
}

/// `R_k = Σ_n ln(1 + x_n P_n x_nᴴ)` in nats.
pub fn rate_semiquadratic(k: usize, psi: &[C64], eff: &EffectiveTensor, r_inv: &CMatrix) -> Result<f64> {
    let x = signal_matrix(k, psi, eff)?;
    let chain = chain_from_rows(&x, r_inv)?;
    let mut total = 0.0;
    for (n, p) in chain.mats.iter().enumerate() {
        let q = (x.row(n) * p * x.row(n).adjoint())[(0, 0)];
        total += (1.0 + q.re).ln();
    }
    Ok(total)
}

/// Sum rate in nats at `ψ` for the beamformers baked into `eff`.
pub fn sum_rate_psi(psi: &[C64], eff: &EffectiveTensor, noise_var: f64) -> Result<f64> {
    eff.check_psi(psi)?;
    let mut total = 0.0;
    for k in 0..eff.num_ues {
        let mixed = eff.mixed_row(k, psi);
        let r = noise_cov_from_mixed(k, &mixed, noise_var);
        let x = &mixed[k];
        let y = crate::tensor::solve_hpd(&r, &x.adjoint())?;
        let w = hermitize(&(CMatrix::identity(eff.n, eff.n) + x * y));
        total += logdet_hermitian_psd(&w)?;
    }
    Ok(total)
}

/// Determinant lemma: `det(I + X B Y) = Π_m (1 + x_m P_m y_m)` with
/// `P_1 = B` and `P_{m+1} = P_m − P_m y_m x_m P_m / (1 + x_m P_m y_m)`, where
/// `x_m` is row `m` of `X` and `y_m` column `m` of `Y`.
pub fn lemma1_factors(x: &CMatrix, b: &CMatrix, y: &CMatrix) -> Result<Vec<C64>> {
    let n = x.nrows();
    if y.ncols() != n || x.ncols() != b.nrows() || b.ncols() != y.nrows() {
        return Err(Error::dim(format!(
            "lemma shapes X {:?}, B {:?}, Y {:?}",
            x.shape(),
            b.shape(),
            y.shape()
        )));
    }
    let mut p = b.clone();
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        let xm = x.row(m);
        let ym = y.column(m);
        let py = &p * ym;
        let xp = xm * &p;
        let den = ONE + (xm * &py)[(0, 0)];
        out.push(den);
        if den == ZERO {
            return Err(Error::Numerical("determinant lemma hit a zero factor".into()));
        }
        p -= &py * &xp / den;
    }
    Ok(out)
}

/// `R_ñk⁻¹` for every UE.
pub fn noise_cov_inverses(psi: &[C64], eff: &EffectiveTensor, noise_var: f64) -> Result<Vec<CMatrix>> {
    (0..eff.num_ues)
        .map(|k| inv_hpd(&effective_noise_cov(k, psi, eff, noise_var)?))
        .collect()
}
