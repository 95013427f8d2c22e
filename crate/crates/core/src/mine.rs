//! Closed-form RIS update that minimizes the weighted MSE.
//!
//! With `T_{k,i}(φ) = B_iᴴ H_k(φ) A_kᴴ = H̃_{k,i} + Σ_ℓ φ_ℓ S_{k,i,ℓ}`, the MSE
//! matrix of UE `k` is `Σ_i T_iᴴT_i − T_kᴴ − T_k + I + σ²A_kA_kᴴ` and the
//! weighted sum `Σ_k Tr(W_k E_k)` is a quadratic in `φ`:
//!
//! ```text
//! φᴴ Q φ + 2 Re(cᴴ φ) + c₀
//! ```
//!
//! The update takes the stationary point of the Lagrangian with a scalar
//! multiplier `λ = 1/ρ_max(Q)` and projects it onto the unit circle.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::maxr::alternate;
use crate::rate::{project_unit_modulus, EffectiveTensor};
use crate::solver::{OptOutcome, SolverCfg};
use crate::tensor::{hermitize, solve_hpd, CMatrix, CVector, C64, ONE, ZERO};
use crate::wmmse::{BeamformerSet, WmmseState};

/// `E[E_k]` for channel `h_k` and filter `a_k`.
pub fn mse_matrix_direct(h_k: &CMatrix, k: usize, bfs: &BeamformerSet, a_k: &CMatrix, noise_var: f64) -> CMatrix {
    let n = a_k.nrows();
    let ah = a_k * h_k.adjoint();
    let mut e = CMatrix::identity(n, n) + a_k * a_k.adjoint() * C64::new(noise_var, 0.0);
    for b in &bfs.per_ue {
        let t = &ah * b;
        e += &t * t.adjoint();
    }
    let t = &ah * &bfs.per_ue[k];
    e -= &t + t.adjoint();
    e
}

/// `E[E_k]` at phases `phi`, using the filters in `state`.
pub fn mse_matrix(k: usize, real: &ChannelRealization, bfs: &BeamformerSet, state: &WmmseState, phi: &[C64]) -> Result<CMatrix> {
    let h = real.effective_channel(k, phi)?;
    Ok(mse_matrix_direct(&h, k, bfs, &state.filters[k], real.noise_var))
}

/// `E[E_k]` assembled from `T_{k,i}(φ) = H̃_{k,i} + Σ_ℓ φ_ℓ S_{k,i,ℓ}`.
pub fn mse_matrix_expanded(
    k: usize,
    eff: &EffectiveTensor,
    a_k: &CMatrix,
    phi: &[C64],
    noise_var: f64,
) -> CMatrix {
    let n = a_k.nrows();
    let ah = a_k.adjoint();
    let t = |i: usize| -> CMatrix {
        let mut m = eff.block(k, i, 0) * &ah;
        for (l, p) in phi.iter().enumerate() {
            m += eff.block(k, i, l + 1) * &ah * *p;
        }
        m
    };
    let mut e = CMatrix::identity(n, n) + a_k * &ah * C64::new(noise_var, 0.0);
    for i in 0..eff.num_ues() {
        let ti = t(i);
        e += ti.adjoint() * &ti;
    }
    let tk = t(k);
    e -= &tk + tk.adjoint();
    e
}

/// `Σ_k Tr(W_k E[E_k])`.
pub fn total_wmse(real: &ChannelRealization, bfs: &BeamformerSet, state: &WmmseState, phi: &[C64]) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..real.num_ues() {
        let e = mse_matrix(k, real, bfs, state, phi)?;
        total += (&state.weights[k] * e).trace().re;
    }
    Ok(total)
}

/// `WMSE(φ) = φᴴ quad φ + 2 Re(linearᴴ φ) + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct MseQuadratic {
    pub quad: CMatrix,
    pub linear: CVector,
    pub constant: f64,
}

impl MseQuadratic {
    pub fn eval(&self, phi: &[C64]) -> f64 {
        let p = CVector::from_column_slice(phi);
        let q = (p.adjoint() * &self.quad * &p)[(0, 0)].re;
        let l = (self.linear.adjoint() * &p)[(0, 0)].re;
        q + 2.0 * l + self.constant
    }

    pub fn len(&self) -> usize {
        self.linear.len()
    }

    pub fn is_empty(&self) -> bool {
        self.linear.is_empty()
    }
}

fn vec_of(m: &CMatrix) -> impl Iterator<Item = C64> + '_ {
    m.iter().copied()
}

/// Assembles the quadratic from `S_{k,i,ℓ} = B_iᴴ H_{R,k,ℓ} A_kᴴ` and
/// `H̃_{k,i} = B_iᴴ H_d,k A_kᴴ`:
///
/// * `quad(ℓ, ℓ') = Σ_{k,i} Tr(W_k S_ℓᴴ S_ℓ')`,
/// * `conj(linear_ℓ) = Σ_k [Σ_i Tr(W_k H̃_{k,i}ᴴ S_{k,i,ℓ}) − Tr(W_k S_{k,k,ℓ})]`,
/// * `constant = Σ_k Tr(W_k O_k)` with the φ-free part `O_k` of `E_k`.
pub fn build_mse_quadratic(real: &ChannelRealization, bfs: &BeamformerSet, state: &WmmseState) -> Result<MseQuadratic> {
    let eff = EffectiveTensor::new(real, bfs)?;
    Ok(mse_quadratic_from_eff(&eff, state, real.noise_var))
}

pub fn mse_quadratic_from_eff(eff: &EffectiveTensor, state: &WmmseState, noise_var: f64) -> MseQuadratic {
    let kk = eff.num_ues();
    let n = eff.streams();
    let l = eff.psi_len() - 1;
    let nn = n * n;
    let mut quad = CMatrix::zeros(l, l);
    let mut c = CVector::zeros(l);
    let mut constant = 0.0;
    for k in 0..kk {
        let a = &state.filters[k];
        let ah = a.adjoint();
        let w = &state.weights[k];
        let mut o = CMatrix::identity(n, n) + a * &ah * C64::new(noise_var, 0.0);
        for i in 0..kk {
            let ht = eff.block(k, i, 0) * &ah;
            let mut v = CMatrix::zeros(nn, l);
            let mut t = CMatrix::zeros(nn, l);
            for ell in 0..l {
                let s = eff.block(k, i, ell + 1) * &ah;
                let sw = &s * w;
                for (r, z) in vec_of(&s).enumerate() {
                    v[(r, ell)] = z;
                }
                for (r, z) in vec_of(&sw).enumerate() {
                    t[(r, ell)] = z;
                }
            }
            quad += v.adjoint() * &t;
            let hvec = CVector::from_iterator(nn, vec_of(&ht));
            c += (hvec.adjoint() * &t).transpose();
            if i == k {
                let ivec = CVector::from_iterator(nn, vec_of(&CMatrix::identity(n, n)));
                c -= (ivec.adjoint() * &t).transpose();
                o -= &ht + ht.adjoint();
            }
            o += ht.adjoint() * &ht;
        }
        constant += (w * o).trace().re;
    }
    MseQuadratic {
        quad: hermitize(&quad),
        linear: c.map(|z| z.conj()),
        constant,
    }
}

/// Largest eigenvalue of a Hermitian PSD matrix by power iteration from the
/// all-ones vector.
pub fn largest_eigenvalue(a: &CMatrix, tol: f64, max_iter: usize) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = CVector::from_element(n, C64::new(1.0 / (n as f64).sqrt(), 0.0));
    let mut rho = 0.0;
    for _ in 0..max_iter {
        let w = a * &v;
        let next = (v.adjoint() * &w)[(0, 0)].re;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / C64::new(norm, 0.0);
        if (next - rho).abs() <= tol * next.abs() {
            return next;
        }
        rho = next;
    }
    rho
}

/// Output of the closed-form update.
#[derive(Debug, Clone, PartialEq)]
pub struct MineSolution {
    /// Projected phases.
    pub phi: Vec<C64>,
    /// Unconstrained stationary point `−(Q + λI)⁻¹ linear`.
    pub phi_star: Vec<C64>,
    /// Scalar multiplier `1/ρ_max`; zero when `Q = 0`.
    pub lambda: f64,
}

/// `φ* = −(Q + λI)⁻¹ linear`, `λ = 1/ρ_max(Q)`, then `φ = exp(j∠φ*)`.
pub fn mine_phi(mq: &MseQuadratic) -> Result<MineSolution> {
    let l = mq.len();
    let rho = largest_eigenvalue(&mq.quad, 1e-10, 10_000);
    if !(rho > 0.0) {
        if mq.linear.iter().all(|z| *z == ZERO) {
            return Ok(MineSolution { phi: vec![ONE; l], phi_star: vec![ZERO; l], lambda: 0.0 });
        }
        let neg: Vec<C64> = mq.linear.iter().map(|z| -z).collect();
        return Ok(MineSolution { phi: project_unit_modulus(&neg), phi_star: neg, lambda: 0.0 });
    }
    let lambda = 1.0 / rho;
    let sys = &mq.quad + CMatrix::identity(l, l) * C64::new(lambda, 0.0);
    let rhs = CMatrix::from_column_slice(l, 1, mq.linear.as_slice()).map(|z| -z);
    let star = solve_hpd(&sys, &rhs)?;
    if star.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("stationary point is not finite".into()));
    }
    let phi_star: Vec<C64> = star.iter().copied().collect();
    Ok(MineSolution { phi: project_unit_modulus(&phi_star), phi_star, lambda })
}

/// `‖Qφ* + linear + λφ*‖ / ‖linear‖`.
pub fn stationarity_residual(mq: &MseQuadratic, sol: &MineSolution) -> f64 {
    let p = CVector::from_column_slice(&sol.phi_star);
    let r = &mq.quad * &p + &mq.linear + &p * C64::new(sol.lambda, 0.0);
    let scale = mq.linear.norm();
    if scale > 0.0 {
        r.norm() / scale
    } else {
        r.norm()
    }
}

/// Alternating WMMSE beamforming and closed-form WMSE phase update. The phase
/// update reuses the filters and weights that produced the new beamformers.
pub fn mine_wmmse(real: &ChannelRealization, phi0: &[C64], cfg: &SolverCfg) -> Result<OptOutcome> {
    alternate(real, phi0, cfg, |real, bfs, state, _| {
        let mq = build_mse_quadratic(real, bfs, state)?;
        let sol = mine_phi(&mq)?;
        let wmse = mq.eval(&sol.phi);
        Ok((sol.phi, true, Some(wmse)))
    })
}
