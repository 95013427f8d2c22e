//! Joint transmit beamforming and RIS phase-shift optimization for
//! multi-user and single-user MIMO downlinks.
//!
//! * [`channel`]: geometric channels and the RIS channel tensor.
//! * [`wmmse`]: WMMSE beamforming and rate evaluation.
//! * [`rate`], [`maxr`]: the rate as a product of quadratic forms in the RIS
//!   phases, its closed-form gradient, and projected gradient ascent.
//! * [`mine`]: the closed-form weighted-MSE phase update.
//! * [`su`]: the single-user specialization.
//! * [`harness`], [`config`]: Monte-Carlo sweeps and their configuration.

pub mod channel;
pub mod config;
mod error;
pub mod gradcheck;
pub mod harness;
pub mod maxr;
pub mod mine;
pub mod rate;
pub mod rng;
pub mod solver;
pub mod su;
pub mod synth;
pub mod tensor;
pub mod wmmse;

pub use channel::{
    realize, ArrayGeometry, ChannelRealization, DirectChannel, GainModel, PathSpec, RisResponseModel,
    ScenarioConfig,
};
pub use config::Config;
pub use error::{Error, Result};
pub use harness::{
    run_optimizer, run_sweep, run_sweep_with_threads, AggregateRow, Optimizer, SweepAxis, SweepResult,
    SweepSpec, TrialRecord,
};
pub use maxr::{maxr_wmmse, wmmse_only, GradTable};
pub use mine::{mine_wmmse, MseQuadratic};
pub use rate::{ConcatPhase, EffectiveTensor, ProjChain};
pub use solver::{LineSearchCfg, OptOutcome, PhaseInit, SolverCfg};
pub use su::{gd_svd, gd_wmmse, WaterfillAllocation};
pub use tensor::{CMatrix, CTensor3, CVector, C64};
pub use wmmse::{BeamformerSet, WmmseState};
