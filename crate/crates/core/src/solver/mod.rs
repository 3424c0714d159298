//! Minimal channel capacity over the feasible set of a game.
//!
//! The feasible set holds every channel `ρ(w|s)` over joint outcome arrays
//! whose per-measurement marginals equal the game's probabilities. The
//! capacity functional is convex on it, so the outer loop runs entropic
//! mirror descent along the gradient at the Blahut–Arimoto input and
//! projects back with IPF. Every iterate gives an upper bound; the inner
//! fixed-input minimum, evaluated every few iterations, gives a lower
//! bound, and the run is certified once the two meet within `tol`.

mod feasible;
mod inner;
mod symmetry;

pub use feasible::{
    joint_capacity, joint_capacity_report, membership_report, membership_residual,
    product_channel, product_channel_with_guard, MembershipReport,
};
pub use inner::{inner_min_fixed_input, inner_min_with, InnerOptions, InnerSolution};
pub use symmetry::{symmetrize, SYMMETRY_TOL};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{GameError, GameTensor};
use crate::info::{blahut_arimoto_partial, ipf_refine, CapacityReport, Distribution, InfoError, MarginalTargets, ScalingFactors};
use crate::joint::{JointChannel, JointError, DEFAULT_JOINT_GUARD};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Joint(#[from] JointError),
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("unsupported symmetry: {0}")]
    UnsupportedSymmetry(String),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    #[default]
    None,
    /// Restrict to channels invariant under `s → s+1, m → m+1`.
    Cyclic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target width of the certified interval, in bits.
    pub tol: f64,
    pub max_outer_iter: usize,
    /// Initial step; iteration `t` uses `step_size / √(t+1)`, scaled per
    /// state by `p_s / max p`.
    pub step_size: f64,
    /// Lower bounds are computed every `report_every` iterations.
    pub report_every: usize,
    pub symmetry: Symmetry,
    pub ba_tol: f64,
    pub ba_max_iter: usize,
    pub ipf_tol: f64,
    pub ipf_max_sweeps: usize,
    /// Gap target of the inner minimization; a quarter of `tol` if unset.
    pub inner_tol: Option<f64>,
    pub inner_max_iter: usize,
    /// Weight of the uniform channel mixed into the starting point.
    pub init_mixing: f64,
    pub joint_guard: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-3,
            max_outer_iter: 400,
            step_size: 1.0,
            report_every: 10,
            symmetry: Symmetry::None,
            ba_tol: 1e-9,
            ba_max_iter: 200_000,
            ipf_tol: 1e-11,
            ipf_max_sweeps: 100_000,
            inner_tol: None,
            inner_max_iter: 20_000,
            init_mixing: 1e-6,
            joint_guard: DEFAULT_JOINT_GUARD,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = [
            ("tol", self.tol),
            ("step_size", self.step_size),
            ("ba_tol", self.ba_tol),
            ("ipf_tol", self.ipf_tol),
            ("inner_tol", self.inner_tolerance()),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolverError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.init_mixing) {
            return Err(SolverError::Config(format!(
                "init_mixing must lie in [0, 1), got {}",
                self.init_mixing
            )));
        }
        if self.max_outer_iter == 0 || self.report_every == 0 {
            return Err(SolverError::Config("iteration counts must be positive".into()));
        }
        Ok(())
    }

    pub fn inner_tolerance(&self) -> f64 {
        self.inner_tol.unwrap_or(self.tol / 4.0)
    }

    fn inner_options(&self) -> InnerOptions {
        InnerOptions {
            tol: self.inner_tolerance(),
            max_iter: self.inner_max_iter,
            ipf_tol: self.ipf_tol,
            ipf_max_sweeps: self.ipf_max_sweeps,
            joint_guard: self.joint_guard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Capacity upper bound of this iterate.
    pub upper: f64,
    pub best_upper: f64,
    /// Best certified lower bound so far, once one exists.
    pub lower: Option<f64>,
    pub membership_residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub channel: JointChannel,
    pub upper: f64,
    pub lower: f64,
    pub achieving_input: Distribution,
    pub certified: bool,
    pub iterations: usize,
    pub membership_residual: f64,
    pub log: Vec<IterationRecord>,
}

impl SolverResult {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn to_document(&self, include_channel: bool) -> ResultDocument {
        ResultDocument {
            d_lower: self.lower,
            d_upper: self.upper,
            gap: self.gap(),
            certified: self.certified,
            iterations: self.iterations,
            membership_residual: self.membership_residual,
            achieving_input: self.achieving_input.as_slice().to_vec(),
            channel: include_channel.then(|| ChannelDocument {
                outcomes: self.channel.index().radices().to_vec(),
                rows: self.channel.to_rows(),
            }),
            log: self.log.clone(),
        }
    }
}

/// Serialized solver outcome. Channel rows follow the canonical joint index
/// (first measurement fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    #[serde(rename = "D_lower")]
    pub d_lower: f64,
    #[serde(rename = "D_upper")]
    pub d_upper: f64,
    pub gap: f64,
    pub certified: bool,
    pub iterations: usize,
    pub membership_residual: f64,
    pub achieving_input: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub channel: Option<ChannelDocument>,
    #[serde(default)]
    pub log: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDocument {
    pub outcomes: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

struct Projector<'a> {
    targets: MarginalTargets,
    factors: ScalingFactors,
    cfg: &'a SolverConfig,
}

impl Projector<'_> {
    fn project(&mut self, ch: &mut JointChannel) -> Result<(), SolverError> {
        self.factors.reset();
        ipf_refine(ch, &mut self.factors, &self.targets, self.cfg.ipf_tol, self.cfg.ipf_max_sweeps)?;
        if self.cfg.symmetry == Symmetry::Cyclic {
            *ch = symmetry::symmetrize_unchecked(ch);
        }
        Ok(())
    }
}

fn capacity_of(ch: &JointChannel, cfg: &SolverConfig) -> Result<CapacityReport, SolverError> {
    let start = vec![1.0 / ch.states() as f64; ch.states()];
    let (report, _) = blahut_arimoto_partial(&ch.as_conditional(), &start, cfg.ba_tol, cfg.ba_max_iter, false)?;
    Ok(report)
}

/// Certified bounds on the minimal capacity over the feasible set of `game`.
///
/// Returns a non-certified result, not an error, when the iteration budget
/// runs out before the interval shrinks to `cfg.tol`.
pub fn minimize_capacity(game: &GameTensor, cfg: &SolverConfig) -> Result<SolverResult, SolverError> {
    cfg.validate()?;
    if cfg.symmetry == Symmetry::Cyclic && !game.has_cyclic_symmetry(SYMMETRY_TOL) {
        return Err(SolverError::UnsupportedSymmetry(
            "cyclic symmetry requested for a game without it".into(),
        ));
    }
    let mut projector = Projector {
        targets: MarginalTargets::from_game(game),
        factors: ScalingFactors::ones(&MarginalTargets::from_game(game)),
        cfg,
    };
    let mut rho = product_channel_with_guard(game, cfg.joint_guard)?;
    rho.mix_uniform(cfg.init_mixing);
    projector.project(&mut rho)?;

    let inner_opts = cfg.inner_options();
    let mut best_upper = f64::INFINITY;
    let mut best_channel = rho.clone();
    let mut best_input = Distribution::uniform(game.states());
    let mut lower = f64::NEG_INFINITY;
    let mut log = Vec::new();
    let mut certified = false;
    let mut iterations = 0;

    for t in 0..cfg.max_outer_iter {
        iterations = t + 1;
        let cap = capacity_of(&rho, cfg)?;
        if cap.upper < best_upper {
            best_upper = cap.upper;
            best_channel = rho.clone();
            best_input = cap.input.clone();
        }
        let step = cfg.step_size / ((t + 1) as f64).sqrt();
        let mut record = IterationRecord {
            iteration: t,
            upper: cap.upper,
            best_upper,
            lower: None,
            membership_residual: membership_residual(&rho, game)?,
            step,
        };

        let reporting = t % cfg.report_every == 0 || t + 1 == cfg.max_outer_iter;
        if reporting {
            let inner = inner_min_with(game, &cap.input, Some(&rho), &inner_opts)?;
            lower = lower.max(inner.lower_bound);
            // the inner minimizer is a best response to the current input
            // and often a better channel than the iterate itself
            let mut candidate = inner.channel;
            if cfg.symmetry == Symmetry::Cyclic {
                candidate = symmetry::symmetrize_unchecked(&candidate);
            }
            let cand_cap = capacity_of(&candidate, cfg)?;
            let jumped = cand_cap.upper < best_upper;
            if jumped {
                best_upper = cand_cap.upper;
                best_channel = candidate.clone();
                best_input = cand_cap.input;
            }
            record.best_upper = best_upper;
            record.lower = Some(lower);
            log.push(record);
            if best_upper - lower <= cfg.tol {
                certified = true;
                break;
            }
            if jumped {
                rho = candidate;
                continue;
            }
        } else {
            log.push(record);
        }

        mirror_step(&mut rho, cap.input.as_slice(), &cap.output, step);
        projector.project(&mut rho)?;
    }

    let residual = membership_residual(&best_channel, game)?;
    Ok(SolverResult {
        channel: best_channel,
        upper: best_upper,
        lower: lower.min(best_upper),
        achieving_input: best_input,
        certified,
        iterations,
        membership_residual: residual,
        log,
    })
}

/// `ρ_s ← ρ_s^{1−a_s} q^{a_s}`, renormalized, with `a_s = min(1, η p_s / max p)`:
/// the entropic step along `∂I/∂ρ(w|s) = p_s ln(ρ(w|s)/q(w))`.
fn mirror_step(rho: &mut JointChannel, input: &[f64], output: &[f64], eta: f64) {
    let pmax = input.iter().cloned().fold(0.0, f64::max);
    for (row, &ps) in rho.rows_mut().zip(input) {
        let a = (eta * ps / pmax).min(1.0);
        if a <= 0.0 {
            continue;
        }
        let mut z = 0.0;
        for (v, &q) in row.iter_mut().zip(output) {
            if *v > 0.0 {
                *v = (v.ln() * (1.0 - a) + q.ln() * a).exp();
                z += *v;
            }
        }
        row.iter_mut().for_each(|v| *v /= z);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{analytic_capacity, noiseless_capacity_formula};
    use crate::game::{build_planar_game, PlanarGameParams};

    fn planar(m: usize, gamma: f64) -> GameTensor {
        build_planar_game(&PlanarGameParams::new(m, gamma).unwrap()).unwrap()
    }

    fn cfg(symmetry: Symmetry) -> SolverConfig {
        SolverConfig {
            symmetry,
            ..SolverConfig::default()
        }
    }

    fn check(r: &SolverResult, value: f64, tol: f64) {
        assert!(r.certified, "gap {}", r.gap());
        assert!(r.gap() <= tol);
        assert!(r.lower - 1e-9 <= value && value <= r.upper + 1e-9, "[{}, {}] vs {value}", r.lower, r.upper);
    }

    #[test]
    fn single_measurement_is_one_bit() {
        let r = minimize_capacity(&planar(1, 1.0), &SolverConfig::default()).unwrap();
        check(&r, 1.0, 1e-3);
    }

    #[test]
    fn depolarized_games_are_free() {
        for m in 1..=4 {
            let r = minimize_capacity(&planar(m, 0.0), &SolverConfig::default()).unwrap();
            check(&r, 0.0, 1e-3);
            let first = r.channel.row(0).to_vec();
            for s in 1..r.channel.states() {
                let diff = r.channel.row(s).iter().zip(&first).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(diff < 1e-9);
            }
        }
    }

    #[test]
    fn noiseless_planar_matches_closed_form() {
        for m in 2..=4 {
            for symmetry in [Symmetry::Cyclic, Symmetry::None] {
                let r = minimize_capacity(&planar(m, 1.0), &cfg(symmetry)).unwrap();
                check(&r, noiseless_capacity_formula(m), 1e-3);
                assert!(r.membership_residual <= 1e-10);
            }
        }
    }

    #[test]
    fn noisy_planar_matches_analytic_value() {
        let m = 3;
        let value = analytic_capacity(m, 0.95, 1e-12).unwrap();
        let r = minimize_capacity(&planar(m, 0.95), &cfg(Symmetry::Cyclic)).unwrap();
        check(&r, value, 1e-3);
    }

    #[test]
    fn best_upper_never_increases() {
        let c = SolverConfig {
            tol: 1e-9,
            max_outer_iter: 40,
            ..SolverConfig::default()
        };
        let r = minimize_capacity(&planar(3, 0.9), &c).unwrap();
        assert!(r.log.windows(2).all(|w| w[1].best_upper <= w[0].best_upper));
        assert!(r.log.iter().all(|rec| rec.membership_residual <= 1e-10));
        assert!(r.lower <= r.upper);
    }

    #[test]
    fn exhausted_budget_is_flagged_not_failed() {
        let c = SolverConfig {
            tol: 1e-12,
            max_outer_iter: 3,
            inner_max_iter: 5,
            ..SolverConfig::default()
        };
        let r = minimize_capacity(&planar(3, 1.0), &c).unwrap();
        assert!(!r.certified);
        assert!(r.lower <= r.upper);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let g = planar(2, 1.0);
        let c = SolverConfig {
            tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(matches!(minimize_capacity(&g, &c), Err(SolverError::Config(_))));
        let c = SolverConfig {
            joint_guard: 2,
            ..SolverConfig::default()
        };
        assert!(matches!(minimize_capacity(&g, &c), Err(SolverError::Joint(JointError::TooLarge { .. }))));
    }

    #[test]
    fn document_round_trip() {
        let r = minimize_capacity(&planar(2, 1.0), &SolverConfig::default()).unwrap();
        let doc = r.to_document(true);
        let text = serde_json::to_string(&doc).unwrap();
        assert!(text.contains("\"D_lower\"") && text.contains("\"D_upper\""));
        let back: ResultDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.channel.unwrap().rows.len(), 4);
    }
}
