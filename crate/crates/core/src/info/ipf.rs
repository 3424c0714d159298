//! Iterative proportional fitting of joint rows to per-measurement marginals.
//!
//! Rows are independent, so each one is fitted on its own with cyclic
//! sweeps over the measurements `m = 1..M`. One sweep rescales every
//! marginal in turn; the residual of a row is the largest total-variation
//! gap between a marginal and its target after a full sweep.

use rayon::prelude::*;

use super::{InfoError, PARALLEL_THRESHOLD};
use crate::game::GameTensor;
use crate::joint::{marginal_into, scale_by_digit, JointChannel, JointOutcomeIndex, JointRowSet};

/// Consecutive sweeps without relative progress before IPF gives up.
const STAGNATION_WINDOW: usize = 200;

/// Per-row, per-measurement target marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTargets {
    radices: Vec<usize>,
    offsets: Vec<usize>,
    block: usize,
    rows: usize,
    data: Vec<f64>,
}

impl MarginalTargets {
    /// Targets `P(·|s,m)` of a game, one row per state.
    pub fn from_game(game: &GameTensor) -> Self {
        let (offsets, block) = offsets_of(game.outcomes());
        let data = (0..game.states())
            .flat_map(|s| game.state_block(s).iter().copied())
            .collect();
        MarginalTargets {
            radices: game.outcomes().to_vec(),
            offsets,
            block,
            rows: game.states(),
            data,
        }
    }

    /// Explicit targets `targets[row][m][w]`; each target must sum to 1.
    pub fn new(radices: &[usize], targets: &[Vec<Vec<f64>>]) -> Result<Self, InfoError> {
        let (offsets, block) = offsets_of(radices);
        let mut data = Vec::with_capacity(targets.len() * block);
        for (r, per_row) in targets.iter().enumerate() {
            if per_row.len() != radices.len() {
                return Err(InfoError::Dimension(format!(
                    "row {r} has {} targets for {} measurements",
                    per_row.len(),
                    radices.len()
                )));
            }
            for (m, t) in per_row.iter().enumerate() {
                if t.len() != radices[m] {
                    return Err(InfoError::Dimension(format!(
                        "target (row {r}, m {m}) has {} entries, expected {}",
                        t.len(),
                        radices[m]
                    )));
                }
                let sum: f64 = t.iter().sum();
                if t.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
                    return Err(InfoError::InvalidDistribution(format!(
                        "target (row {r}, m {m}) = {t:?}"
                    )));
                }
                data.extend_from_slice(t);
            }
        }
        Ok(MarginalTargets {
            radices: radices.to_vec(),
            offsets,
            block,
            rows: targets.len(),
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn target(&self, row: usize, m: usize) -> &[f64] {
        let start = row * self.block + self.offsets[m];
        &self.data[start..start + self.radices[m]]
    }

    pub(crate) fn row_block(&self, row: usize) -> &[f64] {
        &self.data[row * self.block..(row + 1) * self.block]
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    fn check(&self, rows: &JointRowSet) -> Result<(), InfoError> {
        if rows.states() != self.rows || rows.index().radices() != self.radices.as_slice() {
            return Err(InfoError::Dimension(format!(
                "row set {}×{:?} vs targets {}×{:?}",
                rows.states(),
                rows.index().radices(),
                self.rows,
                self.radices
            )));
        }
        Ok(())
    }
}

fn offsets_of(radices: &[usize]) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(radices.len());
    let mut block = 0;
    for &n in radices {
        offsets.push(block);
        block += n;
    }
    (offsets, block)
}

/// Accumulated multiplicative factors `α_{s,m}(w)` applied by IPF, laid out
/// like [`MarginalTargets`]. A fitted row equals its starting row times
/// `Π_m α_{s,m}(w_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFactors {
    block: usize,
    data: Vec<f64>,
}

impl ScalingFactors {
    pub fn ones(targets: &MarginalTargets) -> Self {
        ScalingFactors {
            block: targets.block,
            data: vec![1.0; targets.rows * targets.block],
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.block..(r + 1) * self.block]
    }

    pub(crate) fn reset(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 1.0);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpfProjection {
    pub channel: JointChannel,
    pub residual: f64,
    pub sweeps: usize,
    pub factors: ScalingFactors,
}

/// Fits `start` to `targets` by classical IPF.
///
/// Zeros of `start` stay zero. Fails when a positive target has no support
/// left, when a row stops making progress, or after `max_sweeps`.
pub fn ipf_project(
    start: &JointRowSet,
    targets: &MarginalTargets,
    tol: f64,
    max_sweeps: usize,
) -> Result<IpfProjection, InfoError> {
    let mut channel = start.clone();
    let mut factors = ScalingFactors::ones(targets);
    let (residual, sweeps) = ipf_refine(&mut channel, &mut factors, targets, tol, max_sweeps)?;
    Ok(IpfProjection {
        channel,
        residual,
        sweeps,
        factors,
    })
}

/// In-place IPF continuing from existing factors. Returns the worst row
/// residual and the largest sweep count over rows.
pub(crate) fn ipf_refine(
    channel: &mut JointChannel,
    factors: &mut ScalingFactors,
    targets: &MarginalTargets,
    tol: f64,
    max_sweeps: usize,
) -> Result<(f64, usize), InfoError> {
    if !(tol > 0.0) {
        return Err(InfoError::Tolerance(tol));
    }
    targets.check(channel)?;
    let index = channel.index().clone();
    let k = index.size();
    let block = targets.block;
    let work = |(r, (row, fac)): (usize, (&mut [f64], &mut [f64]))| {
        fit_row(r, row, fac, targets.row_block(r), targets, &index, tol, max_sweeps)
    };
    let results: Vec<Result<(f64, usize), InfoError>> = if channel.states() * k >= PARALLEL_THRESHOLD {
        channel
            .data_mut()
            .par_chunks_mut(k)
            .zip(factors.data.par_chunks_mut(block))
            .enumerate()
            .map(work)
            .collect()
    } else {
        channel
            .data_mut()
            .chunks_mut(k)
            .zip(factors.data.chunks_mut(block))
            .enumerate()
            .map(work)
            .collect()
    };
    let mut worst = 0.0f64;
    let mut sweeps = 0;
    let mut exhausted = false;
    for r in results {
        match r {
            Ok((res, sw)) => {
                worst = worst.max(res);
                sweeps = sweeps.max(sw);
            }
            Err(InfoError::IpfNoConvergence { residual, sweeps: sw }) => {
                worst = worst.max(residual);
                sweeps = sweeps.max(sw);
                exhausted = true;
            }
            Err(e) => return Err(e),
        }
    }
    if exhausted {
        Err(InfoError::IpfNoConvergence {
            residual: worst,
            sweeps,
        })
    } else {
        Ok((worst, sweeps))
    }
}

/// Largest total-variation gap between the marginals of `row` and `target`.
fn row_residual(
    row: &[f64],
    target: &[f64],
    offsets: &[usize],
    index: &JointOutcomeIndex,
    scratch: &mut [f64],
) -> f64 {
    let mut worst = 0.0f64;
    for (m, &n) in index.radices().iter().enumerate() {
        let marg = &mut scratch[..n];
        marginal_into(n, index.stride(m), row, marg);
        let t = &target[offsets[m]..offsets[m] + n];
        let tv = 0.5 * marg.iter().zip(t).map(|(a, b)| (a - b).abs()).sum::<f64>();
        worst = worst.max(tv);
    }
    worst
}

#[allow(clippy::too_many_arguments)]
fn fit_row(
    r: usize,
    row: &mut [f64],
    factors: &mut [f64],
    target: &[f64],
    targets: &MarginalTargets,
    index: &JointOutcomeIndex,
    tol: f64,
    max_sweeps: usize,
) -> Result<(f64, usize), InfoError> {
    let max_radix = index.radices().iter().copied().max().unwrap_or(1);
    let mut marg = vec![0.0; max_radix];
    let mut scale = vec![0.0; max_radix];
    let offsets = targets.offsets();
    let mut residual = row_residual(row, target, offsets, index, &mut marg);
    if residual <= tol {
        return Ok((residual, 0));
    }
    let mut best = residual;
    let mut stalled = 0;
    for sweep in 1..=max_sweeps {
        for (m, &n) in index.radices().iter().enumerate() {
            let stride = index.stride(m);
            marginal_into(n, stride, row, &mut marg[..n]);
            let t = &target[offsets[m]..offsets[m] + n];
            for d in 0..n {
                scale[d] = if marg[d] > 0.0 {
                    t[d] / marg[d]
                } else if t[d] > 0.0 {
                    return Err(InfoError::IpfUnreachable {
                        row: r,
                        measurement: m,
                        outcome: d,
                    });
                } else {
                    1.0
                };
                factors[offsets[m] + d] *= scale[d];
            }
            scale_by_digit(n, stride, row, &scale[..n]);
        }
        residual = row_residual(row, target, offsets, index, &mut marg);
        if residual <= tol {
            return Ok((residual, sweep));
        }
        if residual < best * (1.0 - 1e-9) {
            best = residual;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STAGNATION_WINDOW {
                return Err(InfoError::IpfStagnated {
                    row: r,
                    residual,
                    sweeps: sweep,
                });
            }
        }
    }
    Err(InfoError::IpfNoConvergence {
        residual,
        sweeps: max_sweeps,
    })
}
