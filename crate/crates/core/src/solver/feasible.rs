use crate::game::GameTensor;
use crate::info::{blahut_arimoto_capacity, CapacityReport};
use crate::joint::{marginal_into, scale_by_digit, JointChannel, JointOutcomeIndex, DEFAULT_JOINT_GUARD};

use super::SolverError;

/// Budget for standalone capacity evaluations.
const CAPACITY_MAX_ITER: usize = 1_000_000;

/// `ρ(w|s) = Π_m P(w_m|s,m)`, always in the feasible set.
pub fn product_channel(game: &GameTensor) -> Result<JointChannel, SolverError> {
    product_channel_with_guard(game, DEFAULT_JOINT_GUARD)
}

pub fn product_channel_with_guard(game: &GameTensor, guard: usize) -> Result<JointChannel, SolverError> {
    let index = JointOutcomeIndex::new(game.outcomes(), guard)?;
    let mut ch = JointChannel::from_fn(index.clone(), game.states(), |_, _| 1.0);
    for (s, row) in ch.rows_mut().enumerate() {
        for (m, &n) in index.radices().iter().enumerate() {
            scale_by_digit(n, index.stride(m), row, game.row(s, m));
        }
    }
    Ok(ch)
}

/// Largest marginal violation and where it occurs (zero-based indices).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipReport {
    pub residual: f64,
    pub state: usize,
    pub measurement: usize,
    pub outcome: usize,
}

fn check_dimensions(ch: &JointChannel, game: &GameTensor) -> Result<(), SolverError> {
    if ch.states() != game.states() || ch.index().radices() != game.outcomes() {
        return Err(SolverError::Dimension(format!(
            "channel is {}×{:?}, game is {}×{:?}",
            ch.states(),
            ch.index().radices(),
            game.states(),
            game.outcomes()
        )));
    }
    Ok(())
}

pub fn membership_report(ch: &JointChannel, game: &GameTensor) -> Result<MembershipReport, SolverError> {
    check_dimensions(ch, game)?;
    let index = ch.index();
    let mut worst = MembershipReport {
        residual: 0.0,
        state: 0,
        measurement: 0,
        outcome: 0,
    };
    let mut marg = vec![0.0; index.radices().iter().copied().max().unwrap_or(1)];
    for s in 0..ch.states() {
        for (m, &n) in index.radices().iter().enumerate() {
            marginal_into(n, index.stride(m), ch.row(s), &mut marg[..n]);
            for (w, (&a, &b)) in marg[..n].iter().zip(game.row(s, m)).enumerate() {
                let gap = (a - b).abs();
                if gap > worst.residual || gap.is_nan() {
                    worst = MembershipReport {
                        residual: gap,
                        state: s,
                        measurement: m,
                        outcome: w,
                    };
                }
            }
        }
    }
    Ok(worst)
}

/// `max_{s,m,w} |Σ_{w': w'_m = w} ρ(w'|s) − P(w|s,m)|`.
pub fn membership_residual(ch: &JointChannel, game: &GameTensor) -> Result<f64, SolverError> {
    Ok(membership_report(ch, game)?.residual)
}

/// Capacity of a joint channel in bits (Blahut–Arimoto lower estimate).
pub fn joint_capacity(ch: &JointChannel, tol: f64) -> Result<f64, SolverError> {
    Ok(joint_capacity_report(ch, tol)?.capacity)
}

pub fn joint_capacity_report(ch: &JointChannel, tol: f64) -> Result<CapacityReport, SolverError> {
    Ok(blahut_arimoto_capacity(&ch.as_conditional(), tol, CAPACITY_MAX_ITER)?)
}
