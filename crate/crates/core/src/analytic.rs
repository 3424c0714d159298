//! Closed-form optimal channel for the planar depolarizing game.
//!
//! A latent direction `k ∈ 1..=2M` on the circle (offset by half a step
//! when `M` is even) is drawn with probability `ρ(k|s)`, and every
//! measurement outcome is the sign of the latent direction along its axis.
//! The channel `ρ(w|s) = Σ_k P(w|k) ρ(k|s)` lies in the feasible set and
//! attains the minimal capacity; its capacity equals that of `ρ(k|s)`
//! because `k → w` is injective.
//!
//! Two readings of the latent weights are supported:
//! `Squared` uses `f + √(λ + f²)`, `AsPrinted` uses `f + √(λ + f)`. Only the
//! first normalizes for every `γ ≤ 1`; the second is kept so the missing
//! normalization can be reported.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{build_planar_game, GameError, Outcome, PlanarGameParams};
use crate::info::{blahut_arimoto_capacity, ConditionalChannel, InfoError};
use crate::joint::{JointChannel, JointError, JointOutcomeIndex, DEFAULT_JOINT_GUARD};
use crate::solver::{membership_report, SolverError};

/// Membership tolerance of the analytic channel against the game.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Normalization tolerance of `ρ(k|s)` rows.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Row sums this close to 1 at the left end of the domain take `λ` there.
const LEFT_END_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("analytic channel needs M >= 2, got {0}")]
    TooFewMeasurements(usize),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(
        "no normalizing lambda for the {variant} weights at M={measurements}, gamma={gamma}: \
         the row sum is at least {min_sum:.12} > 1 on the whole domain"
    )]
    NoSolution {
        variant: FormulaVariant,
        measurements: usize,
        gamma: f64,
        min_sum: f64,
    },
    #[error("{variant} weights give rho(k={k}|s={s}) = {value:e} < 0")]
    VariantInvalid {
        variant: FormulaVariant,
        k: usize,
        s: usize,
        value: f64,
    },
    #[error("rho(k|s={s}) sums to {sum:.15}")]
    Normalization { s: usize, sum: f64 },
    #[error(
        "analytic channel leaves the feasible set: residual {residual:e} at \
         (s={s}, m={m}, w={w})"
    )]
    Membership {
        residual: f64,
        s: usize,
        m: usize,
        w: Outcome,
    },
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error(transparent)]
    Joint(#[from] JointError),
}

impl From<SolverError> for AnalyticError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Info(i) => AnalyticError::Info(i),
            SolverError::Joint(j) => AnalyticError::Joint(j),
            other => AnalyticError::Joint(JointError::Dimension(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaVariant {
    /// `f + √(λ + f)`.
    AsPrinted,
    /// `f + √(λ + f²)`.
    #[default]
    Squared,
}

impl std::fmt::Display for FormulaVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FormulaVariant::AsPrinted => "as-printed",
            FormulaVariant::Squared => "squared",
        })
    }
}

/// `0` when `M` is odd, `1` when even.
pub fn parity_offset(measurements: usize) -> i64 {
    measurements.is_multiple_of(2) as i64
}

/// Sign of `cos(π·n/(2M))` decided on integers; zero counts as positive.
fn cos_sign(n: i64, measurements: usize) -> Outcome {
    let period = 4 * measurements as i64;
    let mut r = n.rem_euclid(period);
    if r > period / 2 {
        r -= period;
    }
    if r.abs() <= measurements as i64 {
        Outcome::Plus
    } else {
        Outcome::Minus
    }
}

/// Outcome array `w_m = sign(v_m · v_{k+p/2})`, `k ∈ 1..=2M`.
pub fn outcome_pattern(k: usize, measurements: usize) -> Vec<Outcome> {
    let p = parity_offset(measurements);
    (1..=measurements as i64)
        .map(|m| {
            let n = 2 * m - 2 * k as i64 - p;
            debug_assert_ne!(n.rem_euclid(2 * measurements as i64), measurements as i64);
            cos_sign(n, measurements)
        })
        .collect()
}

/// `(γ/2)·sin(π/2M)·v_{k+p/2}·v_s`, one-based `k, s ∈ 1..=2M`.
pub fn f_function(k: usize, s: usize, measurements: usize, gamma: f64) -> f64 {
    let p = parity_offset(measurements);
    let n = 2 * k as i64 + p - 2 * s as i64;
    let mm = measurements as f64;
    0.5 * gamma * (PI / (2.0 * mm)).sin() * (PI * n as f64 / (2.0 * mm)).cos()
}

fn weight(variant: FormulaVariant, f: f64, lambda: f64) -> f64 {
    match variant {
        FormulaVariant::Squared => f + (lambda + f * f).sqrt(),
        FormulaVariant::AsPrinted => f + (lambda + f).max(0.0).sqrt(),
    }
}

fn row_sum(variant: FormulaVariant, fs: &[f64], lambda: f64) -> f64 {
    fs.iter().map(|&f| weight(variant, f, lambda)).sum()
}

/// Normalizing constant `λ` of the latent weights.
///
/// The row sum is increasing in `λ`, so bisection on the admissible domain
/// finds the root whenever the sum at the left end is at most 1. One global
/// `λ` serves every row because `Σ_k f(k,s)` does not depend on `s`.
pub fn solve_lambda(
    measurements: usize,
    gamma: f64,
    variant: FormulaVariant,
) -> Result<f64, AnalyticError> {
    PlanarGameParams::new(measurements, gamma)?;
    if measurements < 2 {
        return Err(AnalyticError::TooFewMeasurements(measurements));
    }
    let fs: Vec<f64> = (1..=2 * measurements)
        .map(|k| f_function(k, 1, measurements, gamma))
        .collect();
    let lo = match variant {
        FormulaVariant::Squared => 0.0,
        FormulaVariant::AsPrinted => -fs.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0),
    };
    let at_lo = row_sum(variant, &fs, lo);
    // γ = 1 puts the squared variant exactly at the left end
    if (at_lo - 1.0).abs() <= LEFT_END_TOL {
        return Ok(lo);
    }
    if at_lo > 1.0 {
        return Err(AnalyticError::NoSolution {
            variant,
            measurements,
            gamma,
            min_sum: at_lo,
        });
    }
    let (mut a, mut b) = (lo, lo + 1.0);
    while row_sum(variant, &fs, b) < 1.0 {
        b += 1.0;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if row_sum(variant, &fs, mid) < 1.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let ea = (row_sum(variant, &fs, a) - 1.0).abs();
    let eb = (row_sum(variant, &fs, b) - 1.0).abs();
    Ok(if ea <= eb { a } else { b })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticChannelParams {
    pub measurements: usize,
    pub gamma: f64,
    pub offset: i64,
    pub lambda: f64,
    pub variant: FormulaVariant,
}

impl AnalyticChannelParams {
    pub fn solve(
        measurements: usize,
        gamma: f64,
        variant: FormulaVariant,
    ) -> Result<Self, AnalyticError> {
        let lambda = solve_lambda(measurements, gamma, variant)?;
        Ok(AnalyticChannelParams {
            measurements,
            gamma,
            offset: parity_offset(measurements),
            lambda,
            variant,
        })
    }
}

/// `ρ(k|s)` as `2M` rows indexed by zero-based `s`, columns by zero-based `k`.
pub fn analytic_rho_k_given_s(params: &AnalyticChannelParams) -> Result<Vec<Vec<f64>>, AnalyticError> {
    let mm = params.measurements;
    let mut rows = Vec::with_capacity(2 * mm);
    for s in 1..=2 * mm {
        let mut row = Vec::with_capacity(2 * mm);
        for k in 1..=2 * mm {
            let f = f_function(k, s, mm, params.gamma);
            let value = weight(params.variant, f, params.lambda);
            if value < -NORMALIZATION_TOL || value.is_nan() {
                return Err(AnalyticError::VariantInvalid {
                    variant: params.variant,
                    k,
                    s,
                    value,
                });
            }
            row.push(value.max(0.0));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(AnalyticError::Normalization { s, sum });
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticChannel {
    pub params: AnalyticChannelParams,
    pub rho_k_given_s: Vec<Vec<f64>>,
    /// Joint outcome index of the pattern of each latent `k` (zero-based).
    pub patterns: Vec<usize>,
    pub joint: JointChannel,
    /// Worst marginal violation against the planar game.
    pub membership_residual: f64,
}

impl AnalyticChannel {
    pub fn latent_channel(&self) -> ConditionalChannel<'static> {
        ConditionalChannel::from_rows(self.rho_k_given_s.clone())
            .expect("latent rows are validated on construction")
    }
}

/// `ρ(w|s) = Σ_k P(w|k) ρ(k|s)` over the `2^M` joint outcomes, checked
/// against the planar game to [`MEMBERSHIP_TOL`].
pub fn analytic_joint_channel(params: &AnalyticChannelParams) -> Result<AnalyticChannel, AnalyticError> {
    let mm = params.measurements;
    let rho = analytic_rho_k_given_s(params)?;
    let index = JointOutcomeIndex::new(&vec![2; mm], DEFAULT_JOINT_GUARD)?;
    let patterns: Vec<usize> = (1..=2 * mm)
        .map(|k| {
            let digits: Vec<usize> = outcome_pattern(k, mm).iter().map(|w| w.symbol()).collect();
            index.encode(&digits)
        })
        .collect();
    let mut data = vec![0.0; 2 * mm * index.size()];
    for (s, row) in rho.iter().enumerate() {
        let out = &mut data[s * index.size()..(s + 1) * index.size()];
        for (&pattern, &weight) in patterns.iter().zip(row) {
            out[pattern] += weight;
        }
    }
    let joint = JointChannel::from_data(index, 2 * mm, data)?;
    let game = build_planar_game(&PlanarGameParams::new(mm, params.gamma)?)?;
    let report = membership_report(&joint, &game)?;
    if report.residual > MEMBERSHIP_TOL {
        return Err(AnalyticError::Membership {
            residual: report.residual,
            s: report.state + 1,
            m: report.measurement + 1,
            w: Outcome::from_symbol(report.outcome).expect("binary outcome"),
        });
    }
    Ok(AnalyticChannel {
        params: *params,
        rho_k_given_s: rho,
        patterns,
        joint,
        membership_residual: report.residual,
    })
}

/// Capacity of `ρ(k|s)` (squared weights), which equals the minimal
/// capacity of the planar game.
pub fn analytic_capacity(measurements: usize, gamma: f64, tol: f64) -> Result<f64, AnalyticError> {
    let params = AnalyticChannelParams::solve(measurements, gamma, FormulaVariant::Squared)?;
    let rows = analytic_rho_k_given_s(&params)?;
    let ch = ConditionalChannel::from_rows(rows)?;
    Ok(blahut_arimoto_capacity(&ch, tol, 1_000_000)?.capacity)
}

/// Closed-form minimal capacity of the noiseless planar game,
/// `N Σ_n cos(πn/M) log₂[2MN cos(πn/M)]` with `N = sin(π/2M)` and `n`
/// running over `(1−M)/2, …, (M−1)/2` in unit steps.
pub fn noiseless_capacity_formula(measurements: usize) -> f64 {
    assert!(measurements >= 1, "M must be positive");
    let mm = measurements as f64;
    let norm = (PI / (2.0 * mm)).sin();
    (0..measurements as i64)
        .map(|j| {
            // n = (1 − M)/2 + j, so πn/M = π(1 − M + 2j)/(2M)
            let c = (PI * (1 - measurements as i64 + 2 * j) as f64 / (2.0 * mm)).cos();
            c * (2.0 * mm * norm * c).log2()
        })
        .sum::<f64>()
        * norm
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConstants {
    /// Large-`M` limit of the noiseless planar value, `1 + log₂(π/e)`.
    pub ks_limit: f64,
    /// Cost of the Toner–Bacon-style parallel protocol, `log₂(4/√e)`.
    pub toner_bacon: f64,
}

pub fn reference_constants() -> ReferenceConstants {
    ReferenceConstants {
        ks_limit: 1.0 + (PI / E).log2(),
        toner_bacon: (4.0 / E.sqrt()).log2(),
    }
}
