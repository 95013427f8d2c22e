//! Settings and results shared by the alternating optimizers.

use crate::tensor::C64;
use crate::wmmse::BeamformerSet;

/// Bisection over the ascent step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchCfg {
    pub beta_max: f64,
    pub beta_min: f64,
    pub iterations: usize,
}

impl Default for LineSearchCfg {
    fn default() -> Self {
        Self {
            beta_max: 100.0,
            beta_min: 0.0,
            iterations: 30,
        }
    }
}

impl LineSearchCfg {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.beta_max > self.beta_min && self.beta_min >= 0.0) || self.iterations == 0 {
            return Err(crate::Error::Config(
                "line search needs beta_max > beta_min >= 0 and at least one iteration".into(),
            ));
        }
        Ok(())
    }
}

/// Starting phases for the RIS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseInit {
    Ones,
    /// The same random phases the `random_phase` baseline uses.
    Random,
}

/// Outer-loop settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverCfg {
    /// Stop once `|ΔR|` (bpcu) stays below this for `patience` iterations.
    pub tol: f64,
    pub patience: usize,
    pub max_outer: usize,
    pub line_search: LineSearchCfg,
    pub phase_init: PhaseInit,
}

impl Default for SolverCfg {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            patience: 10,
            max_outer: 300,
            line_search: LineSearchCfg::default(),
            phase_init: PhaseInit::Ones,
        }
    }
}

/// Result of one optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptOutcome {
    pub beamformers: BeamformerSet,
    pub phi: Vec<C64>,
    /// Sum rate in bpcu; entry 0 is the starting point.
    pub rate_trace: Vec<f64>,
    /// Weighted MSE after each RIS update (MinE only).
    pub wmse_trace: Vec<f64>,
    pub outer_iterations: usize,
    /// RIS steps the line search rejected.
    pub stagnations: usize,
}

impl OptOutcome {
    pub fn final_rate(&self) -> f64 {
        *self.rate_trace.last().expect("trace holds the initial rate")
    }
}

/// Tracks the stopping rule.
#[derive(Debug, Clone)]
pub(crate) struct Convergence {
    tol: f64,
    patience: usize,
    quiet: usize,
}

impl Convergence {
    pub(crate) fn new(cfg: &SolverCfg) -> Self {
        Self {
            tol: cfg.tol,
            patience: cfg.patience.max(1),
            quiet: 0,
        }
    }

    /// Records one delta; true once the run has converged.
    pub(crate) fn push(&mut self, delta: f64) -> bool {
        if delta.abs() < self.tol {
            self.quiet += 1;
        } else {
            self.quiet = 0;
        }
        self.quiet >= self.patience
    }
}
