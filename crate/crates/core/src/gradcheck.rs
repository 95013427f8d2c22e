//! Finite-difference check of the analytic sum-rate gradient.
//!
//! The reference only evaluates the log-det sum rate, so it shares no code
//! with the gradient recursion.

use crate::error::Result;
use crate::maxr::sum_rate_gradient;
use crate::rate::{sum_rate_psi, ConcatPhase, EffectiveTensor};
use crate::synth::{instance, seeded, Dims};
use crate::tensor::C64;

/// Real-coordinate gradient `[2 Re g; −2 Im g]` of a real function whose
/// Wirtinger derivative is `g`.
pub fn real_gradient(g: &[C64]) -> Vec<f64> {
    g.iter().map(|z| 2.0 * z.re).chain(g.iter().map(|z| -2.0 * z.im)).collect()
}

/// Central differences of `f` over `[Re ψ; Im ψ]`.
pub fn central_differences(f: &dyn Fn(&[C64]) -> f64, psi: &[C64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * psi.len());
    for dir in [C64::new(h, 0.0), C64::new(0.0, h)] {
        for l in 0..psi.len() {
            let mut p = psi.to_vec();
            p[l] = psi[l] + dir;
            let up = f(&p);
            p[l] = psi[l] - dir;
            let down = f(&p);
            out.push((up - down) / (2.0 * h));
        }
    }
    out
}

/// `‖a − b‖ / ‖b‖`, or the absolute error when `b = 0`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let nb = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if nb > 0.0 {
        diff / nb
    } else {
        diff
    }
}

pub fn fd_sum_rate_gradient(psi: &[C64], eff: &EffectiveTensor, noise_var: f64, h: f64) -> Result<Vec<f64>> {
    // Surface evaluation errors before differencing.
    sum_rate_psi(psi, eff, noise_var)?;
    let f = |p: &[C64]| sum_rate_psi(p, eff, noise_var).unwrap_or(f64::NAN);
    Ok(central_differences(&f, psi, h))
}

/// Outcome of a batch of gradient checks.
#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Instances whose gradient norm was below `1e-10`.
    pub skipped: usize,
}

impl GradcheckReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_rel_error <= tol
    }
}

/// Checks `instances` random problems of size `dims` at step `h`.
pub fn run_gradcheck(dims: Dims, seed: u64, instances: usize, h: f64) -> Result<GradcheckReport> {
    let mut rng = seeded(seed);
    let mut report = GradcheckReport { max_rel_error: 0.0, checked: 0, skipped: 0 };
    for _ in 0..instances {
        let inst = instance(&mut rng, dims, 20.0, 0.5);
        let eff = EffectiveTensor::new(&inst.real, &inst.bfs)?;
        let psi = ConcatPhase::from_phi(&inst.phi).psi;
        let g = real_gradient(&sum_rate_gradient(&psi, &eff, inst.real.noise_var)?);
        if g.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-10 {
            report.skipped += 1;
            continue;
        }
        let fd = fd_sum_rate_gradient(&psi, &eff, inst.real.noise_var, h)?;
        report.max_rel_error = report.max_rel_error.max(relative_error(&g, &fd));
        report.checked += 1;
    }
    Ok(report)
}
