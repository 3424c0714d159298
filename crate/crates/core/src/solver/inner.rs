//! Minimum of `I(p, ρ)` over the feasible set at a fixed input `p`.
//!
//! Uses `min_ρ I(p,ρ) = min_{ρ, r} Σ_s p_s D(ρ_s ‖ r)` and alternates
//! `r ← Σ_s p_s ρ_s` with the per-row I-projection of `r` onto the
//! marginal constraints (IPF started from `r`, warm factors). The scaling
//! factors of the projection double as dual variables, which yields a
//! lower bound valid at every iterate:
//!
//! `LB = Σ_s p_s [⟨ln α_s, P_s⟩ − ln Z_s] − ln max_w Σ_s p_s Π_m α_{s,m}(w_m) / Z_s`
//!
//! with `Z_s = Σ_w r(w) Π_m α_{s,m}(w_m)`.

use std::f64::consts::LN_2;

use crate::game::GameTensor;
use crate::info::{ipf_refine, mutual_information_raw, Distribution, MarginalTargets, ScalingFactors};
use crate::joint::{scale_by_digit, JointChannel, JointOutcomeIndex, DEFAULT_JOINT_GUARD};

use super::{product_channel_with_guard, SolverError};

/// Uniform weight blended into the reference output distribution so every
/// joint outcome stays reachable by the projection.
const REFERENCE_MIXING: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct InnerOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub ipf_tol: f64,
    pub ipf_max_sweeps: usize,
    pub joint_guard: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        InnerOptions {
            tol: 1e-4,
            max_iter: 20_000,
            ipf_tol: 1e-11,
            ipf_max_sweeps: 100_000,
            joint_guard: DEFAULT_JOINT_GUARD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    /// Feasible channel with the smallest information found.
    pub channel: JointChannel,
    /// `I(p, channel)` in bits.
    pub information: f64,
    /// Certified lower bound on the minimum, in bits.
    pub lower_bound: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl InnerSolution {
    pub fn gap(&self) -> f64 {
        self.information - self.lower_bound
    }
}

/// Minimizes `I(input, ρ)` over the feasible set of `game` to within `tol`
/// bits. Non-convergence is reported through `converged`, with the best
/// values found.
pub fn inner_min_fixed_input(
    game: &GameTensor,
    input: &Distribution,
    tol: f64,
) -> Result<InnerSolution, SolverError> {
    let opts = InnerOptions {
        tol,
        ..InnerOptions::default()
    };
    inner_min_with(game, input, None, &opts)
}

/// Same as [`inner_min_fixed_input`], optionally warm-started from a
/// channel whose output distribution seeds the reference.
pub fn inner_min_with(
    game: &GameTensor,
    input: &Distribution,
    start: Option<&JointChannel>,
    opts: &InnerOptions,
) -> Result<InnerSolution, SolverError> {
    if !(opts.tol > 0.0) {
        return Err(SolverError::Config(format!("inner tolerance must be positive, got {}", opts.tol)));
    }
    if input.len() != game.states() {
        return Err(SolverError::Dimension(format!(
            "input over {} states, game has {}",
            input.len(),
            game.states()
        )));
    }
    let p = input.as_slice();
    let targets = MarginalTargets::from_game(game);
    let mut reference = match start {
        Some(ch) => ch.output_distribution(p),
        None => product_channel_with_guard(game, opts.joint_guard)?.output_distribution(p),
    };
    let index = JointOutcomeIndex::new(game.outcomes(), opts.joint_guard)?;
    let k = index.size();
    let mut channel = JointChannel::from_fn(index.clone(), game.states(), |_, _| 0.0);
    let mut factors = ScalingFactors::ones(&targets);

    let mut best: Option<(f64, JointChannel)> = None;
    let mut lower = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=opts.max_iter.max(1) {
        iterations = it;
        let u = REFERENCE_MIXING / k as f64;
        reference.iter_mut().for_each(|v| *v = (1.0 - REFERENCE_MIXING) * *v + u);
        for (s, row) in channel.rows_mut().enumerate() {
            row.copy_from_slice(&reference);
            apply_factors(&index, &targets, factors.row(s), row);
        }
        ipf_refine(&mut channel, &mut factors, &targets, opts.ipf_tol, opts.ipf_max_sweeps)?;

        let info = mutual_information_raw(p, &channel.as_conditional());
        lower = lower.max(dual_bound(p, &index, &targets, &factors, &reference));
        if best.as_ref().is_none_or(|(b, _)| info < *b) {
            best = Some((info, channel.clone()));
        }
        let upper = best.as_ref().map(|(b, _)| *b).unwrap_or(f64::INFINITY);
        if upper - lower <= opts.tol {
            converged = true;
            break;
        }
        reference = channel.output_distribution(p);
    }
    let (information, channel) = best.expect("at least one iteration runs");
    Ok(InnerSolution {
        channel,
        information,
        lower_bound: lower.min(information),
        iterations,
        converged,
    })
}

fn apply_factors(index: &JointOutcomeIndex, targets: &MarginalTargets, factors: &[f64], row: &mut [f64]) {
    let offsets = targets.offsets();
    for (m, &n) in index.radices().iter().enumerate() {
        scale_by_digit(n, index.stride(m), row, &factors[offsets[m]..offsets[m] + n]);
    }
}

/// Lower bound on `min_ρ I(p, ρ)` in bits from scaling factors `α` and a
/// reference distribution `r` with full support. Valid for any positive
/// `r` and any factors; tight at the alternating fixed point.
fn dual_bound(
    p: &[f64],
    index: &JointOutcomeIndex,
    targets: &MarginalTargets,
    factors: &ScalingFactors,
    reference: &[f64],
) -> f64 {
    let k = index.size();
    let offsets = targets.offsets();
    let mut mix = vec![0.0; k];
    let mut scaled = vec![0.0; k];
    let mut total = 0.0;
    for (s, &ps) in p.iter().enumerate() {
        if ps <= 0.0 {
            continue;
        }
        let alpha = factors.row(s);
        let target = targets.row_block(s);
        let mut linear = 0.0;
        for (m, &n) in index.radices().iter().enumerate() {
            for d in 0..n {
                let t = target[offsets[m] + d];
                if t > 0.0 {
                    let a = alpha[offsets[m] + d];
                    if a <= 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    linear += t * a.ln();
                }
            }
        }
        scaled.iter_mut().for_each(|v| *v = 1.0);
        apply_factors(index, targets, alpha, &mut scaled);
        let z: f64 = scaled.iter().zip(reference).map(|(a, b)| a * b).sum();
        if !(z > 0.0) || !z.is_finite() {
            return f64::NEG_INFINITY;
        }
        total += ps * (linear - z.ln());
        let w = ps / z;
        mix.iter_mut().zip(&scaled).for_each(|(g, &a)| *g += w * a);
    }
    let peak = mix.iter().cloned().fold(0.0, f64::max);
    (total - peak.ln()) / LN_2
}
