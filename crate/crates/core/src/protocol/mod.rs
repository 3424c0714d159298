//! Simulation protocols for a feasible channel `ρ(w|s)`.
//!
//! In the master protocol Alice draws the whole outcome array and sends it;
//! Bob reads off the entry of his measurement. The child protocol replaces
//! the array by the index of a shared sample picked with rejection
//! sampling, which costs about the channel capacity plus a double-log
//! overhead instead of `log₂` of the number of arrays.

mod code;
mod parties;
mod sampler;
mod stats;

pub use code::{elias_delta_decode, elias_delta_encode, elias_delta_length, Message};
pub use parties::{child_protocol_run, master_sample, Alice, Bob, ProtocolTranscript};
pub use sampler::{child_encode, role_rng, Prior, Role, SharedRandomness, MAX_REJECTION_STEPS};
pub use stats::{chi_square_fit, cost_upper_bound, CostSummary, OutcomeFit};

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::game::GameTensor;
use crate::info::{blahut_arimoto_capacity, Distribution, InfoError};
use crate::joint::JointChannel;
use crate::solver::{membership_residual, SolverError};

/// Feasibility a channel must meet before it is used to simulate a game.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("target puts mass {target:e} on joint outcome {outcome}, which the prior excludes")]
    SupportViolation { outcome: usize, target: f64 },
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("rejection sampler gave up after {steps} steps")]
    StepCap { steps: u64 },
    #[error("cannot decode message: {0}")]
    Decode(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("channel violates the game marginals by {residual:e}")]
    Infeasible { residual: f64 },
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// A game, a feasible channel for it, and the shared prior: the
/// capacity-achieving output distribution of the channel.
#[derive(Debug, Clone)]
pub struct ProtocolSetup {
    pub game: GameTensor,
    pub channel: JointChannel,
    pub prior: Prior,
    /// Capacity of the channel in bits.
    pub capacity: f64,
    pub capacity_input: Distribution,
}

impl ProtocolSetup {
    pub fn new(game: GameTensor, channel: JointChannel, capacity_tol: f64) -> Result<Self, ProtocolError> {
        let residual = membership_residual(&channel, &game)?;
        if residual > FEASIBILITY_TOL {
            return Err(ProtocolError::Infeasible { residual });
        }
        let report = blahut_arimoto_capacity(&channel.as_conditional(), capacity_tol, 1_000_000)?;
        let prior = Prior::new(report.output.clone())?;
        Ok(ProtocolSetup {
            game,
            channel,
            prior,
            capacity: report.capacity,
            capacity_input: report.input,
        })
    }

    pub fn run(&self, seed: u64, run: u64, s: usize, m: usize) -> Result<ProtocolTranscript, ProtocolError> {
        child_protocol_run(&self.channel, &self.prior, seed, run, s, m)
    }

    /// Outcome counts of `runs` child-protocol executions at `(s, m)`.
    /// Run ids are `base, base+1, …`.
    pub fn outcome_counts(
        &self,
        seed: u64,
        base: u64,
        s: usize,
        m: usize,
        runs: u64,
    ) -> Result<Vec<u64>, ProtocolError> {
        let n = self.game.outcomes()[m];
        (base..base + runs)
            .into_par_iter()
            .try_fold(
                || vec![0u64; n],
                |mut acc, r| {
                    acc[self.run(seed, r, s, m)?.outcome] += 1;
                    Ok::<_, ProtocolError>(acc)
                },
            )
            .try_reduce(
                || vec![0u64; n],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    Ok(a)
                },
            )
    }

    /// Pooled chi-square test of `runs_per_pair` executions per `(s, m)`
    /// against the game probabilities.
    pub fn outcome_fit(&self, seed: u64, runs_per_pair: u64, alpha: f64) -> Result<OutcomeFit, ProtocolError> {
        let mut observed = Vec::new();
        let mut expected = Vec::new();
        let mm = self.game.measurements();
        for s in 0..self.game.states() {
            for m in 0..mm {
                let base = (s * mm + m) as u64 * runs_per_pair;
                observed.push(self.outcome_counts(seed, base, s, m, runs_per_pair)?);
                expected.push(self.game.row(s, m).to_vec());
            }
        }
        Ok(chi_square_fit(&observed, &expected, alpha))
    }

    /// Message lengths over `runs` executions with `s ~ input` drawn by
    /// Alice and `m` uniform drawn by Bob.
    pub fn measure_cost(&self, input: &Distribution, runs: u64, seed: u64) -> Result<CostSummary, ProtocolError> {
        Ok(CostSummary::from_transcripts(&self.cost_transcripts(input, runs, seed)?, self.capacity))
    }

    pub fn cost_transcripts(
        &self,
        input: &Distribution,
        runs: u64,
        seed: u64,
    ) -> Result<Vec<ProtocolTranscript>, ProtocolError> {
        if input.len() != self.game.states() {
            return Err(ProtocolError::Dimension(format!(
                "input over {} states, game has {}",
                input.len(),
                self.game.states()
            )));
        }
        if runs == 0 {
            return Err(ProtocolError::Dimension("at least one run is required".into()));
        }
        let states = WeightedIndex::new(input.as_slice()).map_err(|e| ProtocolError::Dimension(e.to_string()))?;
        let mm = self.game.measurements();
        (0..runs)
            .into_par_iter()
            .map(|r| {
                let s = states.sample(&mut role_rng(seed, r, Role::Alice));
                let m = role_rng(seed, r, Role::Bob).random_range(0..mm);
                self.run(seed, r, s, m)
            })
            .collect()
    }
}

/// `measure_cost` for a channel and game without building the setup first.
pub fn measure_cost(
    game: &GameTensor,
    ch: &JointChannel,
    input: &Distribution,
    runs: u64,
    seed: u64,
) -> Result<CostSummary, ProtocolError> {
    ProtocolSetup::new(game.clone(), ch.clone(), 1e-10)?.measure_cost(input, runs, seed)
}

/// Writes one JSON line per transcript followed by a summary line.
pub fn write_transcript_log(
    out: &mut impl Write,
    transcripts: &[ProtocolTranscript],
    summary: &CostSummary,
) -> std::io::Result<()> {
    for t in transcripts {
        serde_json::to_writer(&mut *out, t)?;
        out.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut *out, &serde_json::json!({ "summary": summary }))?;
    out.write_all(b"\n")
}
