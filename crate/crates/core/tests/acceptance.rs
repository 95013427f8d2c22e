//! End-to-end acceptance checks. Each test prints one `acceptance N: PASS|FAIL`
//! line on stderr, visible without `--nocapture`.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use risopt_core::harness::{csv_string, mean_and_stderr, run_sweep, run_sweep_with_threads};
use risopt_core::maxr::sum_rate_gradient;
use risopt_core::mine::{build_mse_quadratic, mine_phi, stationarity_residual, total_wmse};
use risopt_core::gradcheck::{fd_sum_rate_gradient, real_gradient, relative_error};
use risopt_core::rate::{lemma1_factors, noise_cov_inverses, rate_semiquadratic, sum_rate_psi};
use risopt_core::synth::{instance, random_cmatrix, random_phases, seeded, Dims};
use risopt_core::tensor::{hadamard2, logdet_hermitian_psd};
use risopt_core::wmmse::{user_rate, wmmse_state, BeamformerSet};
use risopt_core::*;

/// Writes to the raw stderr handle, which the test harness does not capture,
/// so every criterion shows up in a plain `cargo test` log.
fn report(n: u32, what: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "acceptance {n}: {verdict} {what} ({detail})");
    assert!(pass, "acceptance {n} failed: {detail}");
}

fn sweep_config(lines: &str) -> Config {
    Config::parse(lines).expect("acceptance config parses")
}

/// Mean of paired differences `a − b` per trial.
fn paired(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    mean_and_stderr(&d)
}

fn rates(res: &SweepResult, value: f64, opt: Optimizer) -> Vec<f64> {
    res.records
        .iter()
        .filter(|r| r.axis_value == value && r.optimizer == opt)
        .map(|r| r.sum_rate_bpcu)
        .collect()
}

#[test]
fn c01_determinant_lemma() {
    let mut rng = seeded(101);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let m = rng.random_range(1..=8);
        let eps = rng.random_range(1e-3..1.0);
        let a = random_cmatrix(&mut rng, n, m);
        let g = random_cmatrix(&mut rng, n, n);
        let b = &g * g.adjoint() + CMatrix::identity(n, n) * C64::new(eps, 0.0);
        let factors = lemma1_factors(&a.transpose(), &b, &a).unwrap();
        let prod = factors.iter().fold(C64::new(1.0, 0.0), |acc, z| acc * z);
        let det = (CMatrix::identity(m, m) + a.transpose() * &b * &a).determinant();
        worst = worst.max((prod - det).norm() / det.norm());
    }
    report(1, "determinant lemma", worst <= 1e-9, format!("max rel err {worst:.2e} over 1000"));
}

#[test]
fn c02_rate_forms_agree() {
    let mut rng = seeded(202);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let d = Dims::random(&mut rng, Dims::new(8, 4, 4, 32));
        let inst = instance(&mut rng, d, 30.0, 0.3);
        let s2 = inst.real.noise_var;
        let chans = inst.real.channels(&inst.phi).unwrap();
        let eff = EffectiveTensor::new(&inst.real, &inst.bfs).unwrap();
        let psi = ConcatPhase::from_phi(&inst.phi).psi;
        let r_inv = noise_cov_inverses(&psi, &eff, s2).unwrap();
        let state = wmmse_state(&chans, &inst.bfs, s2).unwrap();
        for k in 0..d.k {
            let logdet = user_rate(&chans, &inst.bfs, s2, k).unwrap();
            let semi = rate_semiquadratic(k, &psi, &eff, &r_inv[k]).unwrap();
            let weight = logdet_hermitian_psd(&state.weights[k]).unwrap();
            let scale = 1.0 + logdet.abs();
            worst = worst.max((semi - logdet).abs() / scale).max((weight - logdet).abs() / scale);
        }
    }
    report(2, "rate forms", worst <= 1e-9, format!("max rel diff {worst:.2e} over 1000 instances"));
}

#[test]
fn c03_gradient_matches_finite_differences() {
    let mut rng = seeded(303);
    let results: Vec<(usize, f64)> = (0..200)
        .map(|i| {
            let mut d = Dims::random(&mut rng, Dims::new(8, 4, 4, 32));
            if i % 2 == 0 {
                d.k = rng.random_range(2..=4);
            }
            let seed: u64 = rng.random();
            (d.k, seed, d)
        })
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(k, seed, d)| {
            let mut rng = seeded(seed);
            let inst = instance(&mut rng, d, 20.0, 0.5);
            let eff = EffectiveTensor::new(&inst.real, &inst.bfs).unwrap();
            let psi = ConcatPhase::from_phi(&inst.phi).psi;
            let s2 = inst.real.noise_var;
            let g = real_gradient(&sum_rate_gradient(&psi, &eff, s2).unwrap());
            let fd = fd_sum_rate_gradient(&psi, &eff, s2, 1e-6).unwrap();
            (k, relative_error(&g, &fd))
        })
        .collect();
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let multi = results.iter().filter(|r| r.0 > 1).count();
    report(
        3,
        "gradient vs central differences",
        worst <= 1e-5 && multi >= 100,
        format!("max rel err {worst:.2e}, {multi}/200 with K>1"),
    );
}

#[test]
fn c04_wmse_quadratic_matches_direct() {
    let mut rng = seeded(404);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let d = Dims::random(&mut rng, Dims::new(8, 4, 4, 16));
        let inst = instance(&mut rng, d, 30.0, 0.5);
        let chans = inst.real.channels(&inst.phi).unwrap();
        let state = wmmse_state(&chans, &inst.bfs, inst.real.noise_var).unwrap();
        let mq = build_mse_quadratic(&inst.real, &inst.bfs, &state).unwrap();
        let phi = random_phases(&mut rng, d.l);
        let direct = total_wmse(&inst.real, &inst.bfs, &state, &phi).unwrap();
        worst = worst.max((mq.eval(&phi) - direct).abs() / direct.abs().max(1e-300));
    }
    report(4, "WMSE quadratic form", worst <= 1e-9, format!("max rel diff {worst:.2e} over 1000"));
}

#[test]
fn c05_mine_stationarity() {
    let mut rng = seeded(505);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let d = Dims::random(&mut rng, Dims::new(8, 4, 4, 32));
        let inst = instance(&mut rng, d, 30.0, 0.5);
        let chans = inst.real.channels(&inst.phi).unwrap();
        let state = wmmse_state(&chans, &inst.bfs, inst.real.noise_var).unwrap();
        let mq = build_mse_quadratic(&inst.real, &inst.bfs, &state).unwrap();
        let sol = mine_phi(&mq).unwrap();
        worst = worst.max(stationarity_residual(&mq, &sol));
    }
    report(5, "MinE stationarity", worst <= 1e-8, format!("max residual {worst:.2e} over 200"));
}

#[test]
fn c06_monotone_and_convergent_traces() {
    let cfg = ScenarioConfig::default();
    let ones = vec![C64::new(1.0, 0.0); cfg.ris_geometry.total()];
    // MinE has no ascent guarantee and drifts slowly, so it gets a larger
    // iteration budget than the default cap.
    let mine_cfg = SolverCfg { max_outer: 20_000, ..SolverCfg::default() };
    let out: Vec<(u64, f64, f64)> = (0..100u64)
        .into_par_iter()
        .map(|trial| {
            let real = realize(&cfg, trial).unwrap();
            let maxr = maxr_wmmse(&real, &ones, &SolverCfg::default()).unwrap();
            let min_delta = maxr.rate_trace.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            let mine = mine_wmmse(&real, &ones, &mine_cfg).unwrap();
            let t = &mine.rate_trace;
            let tail = if t.len() >= 11 {
                t[t.len() - 11..].windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            (trial, min_delta, tail)
        })
        .collect();
    let min_delta = out.iter().map(|o| o.1).fold(f64::INFINITY, f64::min);
    let stuck: Vec<String> = out
        .iter()
        .filter(|o| o.2 >= 1e-6)
        .map(|o| format!("trial {} tail {:.2e}", o.0, o.2))
        .collect();
    report(
        6,
        "monotone MaxR, convergent MinE",
        min_delta >= -1e-9 && stuck.is_empty(),
        format!(
            "MaxR min delta {min_delta:.2e}; MinE converged on {}/100 within 20000 iterations; not converged: [{}]",
            100 - stuck.len(),
            stuck.join(", ")
        ),
    );
}

#[test]
fn c07_optimized_ris_gain_ratio() {
    let cfg = sweep_config(
        "sweep_axis = num_ues\nsweep_values = 2, 4\ntrials = 200\n\
         optimizers = maxr_wmmse, random_phase, no_ris\n",
    );
    let res = run_sweep(&cfg.sweep_spec().unwrap()).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for k in [2.0, 4.0] {
        let none = rates(&res, k, Optimizer::NoRis);
        let (opt, _) = paired(&rates(&res, k, Optimizer::MaxrWmmse), &none);
        let (unopt, _) = paired(&rates(&res, k, Optimizer::RandomPhase), &none);
        let ratio = opt / unopt;
        pass &= unopt > 0.0 && (3.5..=14.0).contains(&ratio);
        detail.push(format!("K={k}: gains {opt:.3}/{unopt:.3} bpcu, ratio {ratio:.2}"));
    }
    report(7, "optimized vs unoptimized RIS gain", pass, detail.join("; "));
}

/// `a ≥ b` by at least two standard errors of the paired difference, or a
/// statistical tie.
fn dominates(a: &[f64], b: &[f64]) -> (bool, String) {
    let (m, se) = paired(a, b);
    let verdict = if m >= 2.0 * se {
        "ahead"
    } else if m.abs() < 2.0 * se {
        "tie"
    } else {
        "behind"
    };
    (verdict != "behind", format!("{m:+.3}±{se:.3} {verdict}"))
}

#[test]
fn c08_qualitative_orderings() {
    let blocked = sweep_config(
        "direct_channel = blocked\nsweep_axis = ris_elements\nsweep_values = 64\ntrials = 200\n\
         optimizers = maxr_wmmse, mine_wmmse, random_phase\n",
    );
    let res = run_sweep(&blocked.sweep_spec().unwrap()).unwrap();
    let maxr = rates(&res, 64.0, Optimizer::MaxrWmmse);
    let mine = rates(&res, 64.0, Optimizer::MineWmmse);
    let random = rates(&res, 64.0, Optimizer::RandomPhase);
    let (p1, d1) = dominates(&maxr, &mine);
    let (p2, d2) = dominates(&mine, &random);

    let mut smaller = blocked.clone();
    smaller.sweep_values = vec![16.0, 32.0];
    smaller.optimizers = vec![Optimizer::MaxrWmmse];
    let res_l = run_sweep(&smaller.sweep_spec().unwrap()).unwrap();
    let by_l: Vec<f64> = [16.0, 32.0]
        .iter()
        .map(|&l| mean_and_stderr(&rates(&res_l, l, Optimizer::MaxrWmmse)).0)
        .chain(std::iter::once(mean_and_stderr(&maxr).0))
        .collect();
    let p3 = by_l.windows(2).all(|w| w[1] > w[0]);

    let su = sweep_config(
        "num_ues = 1\nsweep_axis = ris_elements\nsweep_values = 32\ntrials = 200\n\
         optimizers = gd_svd, gd_wmmse\n",
    );
    let res_su = run_sweep(&su.sweep_spec().unwrap()).unwrap();
    let (p4, d4) = dominates(&rates(&res_su, 32.0, Optimizer::GdSvd), &rates(&res_su, 32.0, Optimizer::GdWmmse));

    report(
        8,
        "orderings",
        p1 && p2 && p3 && p4,
        format!(
            "MaxR-MinE {d1}; MinE-random {d2}; MaxR over L=16,32,64 {:.3}, {:.3}, {:.3}; GD-SVD-GD-WMMSE {d4}",
            by_l[0], by_l[1], by_l[2]
        ),
    );
}

#[test]
fn c09_miso_matches_diag_model() {
    let mut rng = seeded(909);
    let mut worst_h = 0.0f64;
    let mut worst_r = 0.0f64;
    for _ in 0..100 {
        let m = rng.random_range(1..=8);
        let l = rng.random_range(1..=32);
        let k = rng.random_range(1..=4);
        let noise_var = 0.1;
        let g = random_cmatrix(&mut rng, m, l);
        let direct: Vec<CMatrix> = (0..k).map(|_| random_cmatrix(&mut rng, m, 1)).collect();
        let hops: Vec<CMatrix> = (0..k).map(|_| random_cmatrix(&mut rng, l, 1)).collect();
        let ris = hops.iter().map(|r| hadamard2(&g, r).unwrap()).collect();
        let real = ChannelRealization::new(direct.clone(), ris, 1.0, noise_var).unwrap();
        let phi = random_phases(&mut rng, l);
        let diag = CMatrix::from_diagonal(&CVector::from_column_slice(&phi));
        let closed: Vec<CMatrix> = (0..k).map(|u| &direct[u] + &g * &diag * &hops[u]).collect();
        for u in 0..k {
            let h = real.effective_channel(u, &phi).unwrap();
            worst_h = worst_h.max((&h - &closed[u]).norm() / closed[u].norm());
        }
        let bfs = BeamformerSet::normalized((0..k).map(|_| random_cmatrix(&mut rng, m, 1)).collect(), 1.0).unwrap();
        let eff = EffectiveTensor::new(&real, &bfs).unwrap();
        let tensor_rate = sum_rate_psi(&ConcatPhase::from_phi(&phi).psi, &eff, noise_var).unwrap();
        let scalar_rate: f64 = (0..k)
            .map(|u| {
                let gain = |i: usize| (closed[u].adjoint() * &bfs.per_ue[i])[(0, 0)].norm_sqr();
                let interference: f64 = (0..k).filter(|&i| i != u).map(gain).sum();
                (1.0 + gain(u) / (noise_var + interference)).ln()
            })
            .sum();
        worst_r = worst_r.max((tensor_rate - scalar_rate).abs() / scalar_rate.abs().max(1e-300));
    }
    report(
        9,
        "MISO diag model",
        worst_h <= 1e-12 && worst_r <= 1e-12,
        format!("channel rel err {worst_h:.2e}, rate rel err {worst_r:.2e} over 100"),
    );
}

#[test]
fn c10_deterministic_csv() {
    let cfg = sweep_config(
        "ris_elements = 8\nnum_ues = 2\nmax_outer = 40\nsweep_axis = ris_elements\nsweep_values = 4, 8\ntrials = 6\n\
         optimizers = maxr_wmmse, mine_wmmse, random_phase, no_ris, wmmse_only\nphase_init = random\n",
    );
    let spec = cfg.sweep_spec().unwrap();
    let a = csv_string(&run_sweep_with_threads(&spec, 1).unwrap().records);
    let b = csv_string(&run_sweep_with_threads(&spec, 1).unwrap().records);
    let c = csv_string(&run_sweep_with_threads(&spec, 4).unwrap().records);
    report(
        10,
        "byte-identical CSV",
        a == b && a == c,
        format!("{} bytes, runs equal {}, threads 1 vs 4 equal {}", a.len(), a == b, a == c),
    );
}
