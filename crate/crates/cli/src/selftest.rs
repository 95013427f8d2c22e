//! Fast versions of the library's numerical oracles.

use std::process::ExitCode;

use risopt_core::gradcheck::run_gradcheck;
use risopt_core::mine::{build_mse_quadratic, mine_phi, stationarity_residual, total_wmse};
use risopt_core::rate::{lemma1_factors, sum_rate_psi};
use risopt_core::synth::{instance, random_cmatrix, random_phases, seeded, Dims};
use risopt_core::wmmse::{sum_rate, wmmse_state};
use risopt_core::{CMatrix, ConcatPhase, EffectiveTensor, Error, C64};

type Check = (&'static str, f64, fn() -> Result<f64, Error>);

fn lemma() -> Result<f64, Error> {
    let mut rng = seeded(1);
    let mut worst = 0.0f64;
    for n in 1..=6 {
        let a = random_cmatrix(&mut rng, n, 5);
        let g = random_cmatrix(&mut rng, n, n);
        let b = &g * g.adjoint() + CMatrix::identity(n, n) * C64::new(0.1, 0.0);
        let prod = lemma1_factors(&a.transpose(), &b, &a)?
            .iter()
            .fold(C64::new(1.0, 0.0), |acc, z| acc * z);
        let det = (CMatrix::identity(5, 5) + a.transpose() * &b * &a).determinant();
        worst = worst.max((prod - det).norm() / det.norm());
    }
    Ok(worst)
}

fn rate_forms() -> Result<f64, Error> {
    let mut rng = seeded(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let inst = instance(&mut rng, Dims::new(6, 3, 3, 10), 30.0, 0.5);
        let eff = EffectiveTensor::new(&inst.real, &inst.bfs)?;
        let tensor = sum_rate_psi(&ConcatPhase::from_phi(&inst.phi).psi, &eff, inst.real.noise_var)?;
        let direct = sum_rate(&inst.real.channels(&inst.phi)?, &inst.bfs, inst.real.noise_var)?;
        worst = worst.max((tensor - direct).abs() / direct.abs());
    }
    Ok(worst)
}

fn gradient() -> Result<f64, Error> {
    Ok(run_gradcheck(Dims::new(4, 2, 3, 6), 3, 10, 1e-6)?.max_rel_error)
}

fn wmse() -> Result<f64, Error> {
    let mut rng = seeded(4);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let inst = instance(&mut rng, Dims::new(5, 2, 3, 8), 30.0, 0.5);
        let state = wmmse_state(&inst.real.channels(&inst.phi)?, &inst.bfs, inst.real.noise_var)?;
        let mq = build_mse_quadratic(&inst.real, &inst.bfs, &state)?;
        let phi = random_phases(&mut rng, 8);
        let direct = total_wmse(&inst.real, &inst.bfs, &state, &phi)?;
        worst = worst.max((mq.eval(&phi) - direct).abs() / direct.abs());
        worst = worst.max(stationarity_residual(&mq, &mine_phi(&mq)?));
    }
    Ok(worst)
}

const CHECKS: [Check; 4] = [
    ("determinant lemma", 1e-9, lemma),
    ("rate forms", 1e-9, rate_forms),
    ("rate gradient", 1e-5, gradient),
    ("WMSE quadratic and stationarity", 1e-8, wmse),
];

pub fn run() -> Result<ExitCode, Error> {
    let mut ok = true;
    for (name, tol, check) in CHECKS {
        let err = check()?;
        let pass = err <= tol;
        ok &= pass;
        println!("{:<34} {err:.2e} (tol {tol:.0e}) {}", name, if pass { "PASS" } else { "FAIL" });
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(4) })
}
