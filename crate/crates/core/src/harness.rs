//! Monte-Carlo sweeps over one scenario parameter.
//!
//! Each `(point, trial)` pair draws one realization, and every requested
//! optimizer runs on that same realization. Work units run on the current
//! rayon pool; records are sorted by `(axis_value, trial, optimizer)` before
//! they are returned, so the output does not depend on the thread count.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::channel::{realize, ArrayGeometry, ChannelRealization, ScenarioConfig};
use crate::error::{Error, Result};
use crate::maxr::{maxr_wmmse, wmmse_only};
use crate::mine::mine_wmmse;
use crate::rng::{substream, unit_phase, Link, SHARED};
use crate::solver::{OptOutcome, PhaseInit, SolverCfg};
use crate::su::{gd_svd, gd_wmmse};
use crate::tensor::{C64, ONE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Optimizer {
    MaxrWmmse,
    MineWmmse,
    GdSvd,
    GdWmmse,
    RandomPhase,
    NoRis,
    WmmseOnly,
}

impl Optimizer {
    pub const ALL: [Optimizer; 7] = [
        Optimizer::MaxrWmmse,
        Optimizer::MineWmmse,
        Optimizer::GdSvd,
        Optimizer::GdWmmse,
        Optimizer::RandomPhase,
        Optimizer::NoRis,
        Optimizer::WmmseOnly,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::MaxrWmmse => "maxr_wmmse",
            Self::MineWmmse => "mine_wmmse",
            Self::GdSvd => "gd_svd",
            Self::GdWmmse => "gd_wmmse",
            Self::RandomPhase => "random_phase",
            Self::NoRis => "no_ris",
            Self::WmmseOnly => "wmmse_only",
        }
    }

    /// Accepts the canonical names plus `maxr` and `mine`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "maxr" => Ok(Self::MaxrWmmse),
            "mine" => Ok(Self::MineWmmse),
            other => Self::ALL
                .iter()
                .find(|o| o.name() == other)
                .copied()
                .ok_or_else(|| Error::config(format!("unknown optimizer {other:?}"))),
        }
    }

    pub fn single_user_only(&self) -> bool {
        matches!(self, Self::GdSvd | Self::GdWmmse)
    }
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    RisElements,
    NumUes,
    BsAntennas,
    UeAntennas,
    TxPowerDbm,
    NumPaths,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::RisElements => "ris_elements",
            Self::NumUes => "num_ues",
            Self::BsAntennas => "bs_antennas",
            Self::UeAntennas => "ue_antennas",
            Self::TxPowerDbm => "tx_power_dbm",
            Self::NumPaths => "num_paths",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [
            Self::RisElements,
            Self::NumUes,
            Self::BsAntennas,
            Self::UeAntennas,
            Self::TxPowerDbm,
            Self::NumPaths,
        ]
        .into_iter()
        .find(|a| a.name() == s.trim())
        .ok_or_else(|| Error::config(format!("sweep_axis: unknown axis {s:?}")))
    }

    fn integral(&self) -> bool {
        !matches!(self, Self::TxPowerDbm)
    }

    /// `base` with the axis set to `value`.
    pub fn apply(&self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        if self.integral() && !(value >= 1.0 && value.fract() == 0.0) {
            return Err(Error::config(format!(
                "sweep_values: {} needs positive integers, got {value}",
                self.name()
            )));
        }
        let count = value as usize;
        match self {
            Self::RisElements => cfg.ris_geometry = with_total(&base.ris_geometry, count),
            Self::NumUes => cfg.num_ues = count,
            Self::BsAntennas => cfg.bs_geometry = with_total(&base.bs_geometry, count),
            Self::UeAntennas => cfg.ue_geometry = with_total(&base.ue_geometry, count),
            Self::TxPowerDbm => cfg.tx_power_dbm = value,
            Self::NumPaths => {
                cfg.paths_direct = count;
                cfg.paths_bs_ris = count;
                cfg.paths_ris_ue = count;
            }
        }
        Ok(cfg)
    }
}

fn with_total(g: &ArrayGeometry, total: usize) -> ArrayGeometry {
    ArrayGeometry {
        spacing: g.spacing,
        ..ArrayGeometry::from_total(total)
    }
}

/// A sweep over one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub trials: usize,
    pub base: ScenarioConfig,
    pub solver: SolverCfg,
    pub optimizers: Vec<Optimizer>,
    /// Record wall-clock times; when off, `wall_ms` is written as 0 so that
    /// output files are reproducible byte for byte.
    pub timing: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("sweep_values is empty"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.optimizers.is_empty() {
            return Err(Error::config("optimizers is empty"));
        }
        self.solver.line_search.validate()?;
        for &v in &self.values {
            let cfg = self.axis.apply(&self.base, v)?;
            cfg.validate()?;
            if cfg.num_ues != 1 {
                if let Some(o) = self.optimizers.iter().find(|o| o.single_user_only()) {
                    return Err(Error::config(format!(
                        "optimizer {o} needs num_ues = 1, got {} at {} = {v}",
                        cfg.num_ues,
                        self.axis.name()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One optimizer on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub axis: SweepAxis,
    pub axis_value: f64,
    pub trial: usize,
    pub optimizer: Optimizer,
    pub sum_rate_bpcu: f64,
    pub outer_iterations: usize,
    pub wall_ms: f64,
    pub seed: u64,
}

/// Mean and standard error of one `(axis_value, optimizer)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub axis_value: f64,
    pub optimizer: Optimizer,
    pub trials: usize,
    pub mean: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRow>,
}

/// Uniform random phases shared by `random_phase` and `phase_init=random`.
pub fn random_phases_for(seed: u64, trial: u64, len: usize) -> Vec<C64> {
    let mut rng = substream(seed, trial, SHARED, Link::RandomPhase);
    (0..len).map(|_| unit_phase(&mut rng)).collect()
}

/// Runs `opt` on one realization.
pub fn run_optimizer(
    opt: Optimizer,
    real: &ChannelRealization,
    solver: &SolverCfg,
    seed: u64,
    trial: u64,
) -> Result<OptOutcome> {
    let l = real.ris_elements();
    let random = || random_phases_for(seed, trial, l);
    let init = match solver.phase_init {
        PhaseInit::Ones => vec![ONE; l],
        PhaseInit::Random => random(),
    };
    match opt {
        Optimizer::MaxrWmmse => maxr_wmmse(real, &init, solver),
        Optimizer::MineWmmse => mine_wmmse(real, &init, solver),
        Optimizer::GdSvd => gd_svd(real, &init, solver),
        Optimizer::GdWmmse => gd_wmmse(real, &init, solver),
        Optimizer::RandomPhase => wmmse_only(real, &random(), solver),
        Optimizer::NoRis => wmmse_only(&real.without_ris(), &vec![ONE; l], solver),
        Optimizer::WmmseOnly => wmmse_only(real, &init, solver),
    }
}

fn run_unit(spec: &SweepSpec, value: f64, cfg: &ScenarioConfig, trial: usize) -> Result<Vec<TrialRecord>> {
    let real = realize(cfg, trial as u64)?;
    spec.optimizers
        .iter()
        .map(|&opt| {
            let start = Instant::now();
            let out = run_optimizer(opt, &real, &spec.solver, cfg.rng_seed, trial as u64)?;
            let wall_ms = if spec.timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            Ok(TrialRecord {
                axis: spec.axis,
                axis_value: value,
                trial,
                optimizer: opt,
                sum_rate_bpcu: out.final_rate(),
                outer_iterations: out.outer_iterations,
                wall_ms,
                seed: cfg.rng_seed,
            })
        })
        .collect()
}

/// Runs the sweep on the current rayon pool.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let points: Vec<(f64, ScenarioConfig)> = spec
        .values
        .iter()
        .map(|&v| Ok((v, spec.axis.apply(&spec.base, v)?)))
        .collect::<Result<_>>()?;
    let units: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let nested: Vec<Vec<TrialRecord>> = units
        .par_iter()
        .map(|&(p, t)| run_unit(spec, points[p].0, &points[p].1, t))
        .collect::<Result<_>>()?;
    let mut records: Vec<TrialRecord> = nested.into_iter().flatten().collect();
    records.sort_by(|a, b| {
        a.axis_value
            .total_cmp(&b.axis_value)
            .then(a.trial.cmp(&b.trial))
            .then(a.optimizer.name().cmp(b.optimizer.name()))
    });
    let aggregates = aggregate(&records);
    Ok(SweepResult { records, aggregates })
}

/// Runs the sweep on a dedicated pool with `threads` workers.
pub fn run_sweep_with_threads(spec: &SweepSpec, threads: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep(spec))
}

/// Mean and `std/√n` per `(axis_value, optimizer)`, using the sample standard
/// deviation.
pub fn aggregate(records: &[TrialRecord]) -> Vec<AggregateRow> {
    let mut keys: Vec<(f64, Optimizer)> = Vec::new();
    for r in records {
        if !keys.iter().any(|(v, o)| *v == r.axis_value && *o == r.optimizer) {
            keys.push((r.axis_value, r.optimizer));
        }
    }
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.name().cmp(b.1.name())));
    keys.into_iter()
        .map(|(v, o)| {
            let xs: Vec<f64> = records
                .iter()
                .filter(|r| r.axis_value == v && r.optimizer == o)
                .map(|r| r.sum_rate_bpcu)
                .collect();
            let (mean, std_err) = mean_and_stderr(&xs);
            AggregateRow { axis_value: v, optimizer: o, trials: xs.len(), mean, std_err }
        })
        .collect()
}

pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub const CSV_HEADER: &str = "axis,axis_value,trial,optimizer,sum_rate_bpcu,outer_iters,wall_ms,seed";

pub fn write_csv<W: Write>(records: &[TrialRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{:.9},{},{:.3},{}",
            r.axis.name(),
            r.axis_value,
            r.trial,
            r.optimizer.name(),
            r.sum_rate_bpcu,
            r.outer_iterations,
            r.wall_ms,
            r.seed
        )?;
    }
    Ok(())
}

pub fn csv_string(records: &[TrialRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ASCII output")
}
