//! `oracle`: cross-check the closed-form channel against the solver.

use std::fs;
use std::path::Path;

use serde::Serialize;

use commcomplex::analytic::{
    analytic_joint_channel, noiseless_capacity_formula, solve_lambda, AnalyticChannelParams, AnalyticError,
    FormulaVariant,
};
use commcomplex::game::{build_planar_game, PlanarGameParams};
use commcomplex::solver::{joint_capacity, membership_report, minimize_capacity, SolverConfig};

use crate::CliError;

/// Agreement required between capacities computed two ways.
const CAPACITY_TOL: f64 = 1e-9;
/// Largest admissible marginal violation of the closed-form channel.
const MEMBERSHIP_TOL: f64 = 1e-9;
/// Slack on certificate containment for the inner solvers' own accuracy.
const CONTAINMENT_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub check: String,
    #[serde(rename = "M")]
    pub measurements: usize,
    pub gamma: f64,
    pub passed: bool,
    pub detail: serde_json::Value,
}

impl CheckRow {
    fn new(check: &str, measurements: usize, gamma: f64, passed: bool, detail: serde_json::Value) -> Self {
        CheckRow { check: check.into(), measurements, gamma, passed, detail }
    }

    fn line(&self) -> String {
        format!(
            "{:<22} M={:<3} gamma={:<6} {}  {}",
            self.check,
            self.measurements,
            self.gamma,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

/// The as-printed weights have no normalizing constant at `M = 2`, `γ = 1`.
fn printed_variant_finding() -> Result<CheckRow, CliError> {
    let row = match solve_lambda(2, 1.0, FormulaVariant::AsPrinted) {
        Err(AnalyticError::NoSolution { min_sum, .. }) => CheckRow::new(
            "as-printed-no-solution",
            2,
            1.0,
            true,
            serde_json::json!({ "min_row_sum": min_sum }),
        ),
        Ok(lambda) => CheckRow::new(
            "as-printed-no-solution",
            2,
            1.0,
            false,
            serde_json::json!({ "lambda": lambda }),
        ),
        Err(e) => return Err(e.into()),
    };
    Ok(row)
}

fn check_point(
    measurements: usize,
    gamma: f64,
    variant: FormulaVariant,
    cfg: &SolverConfig,
) -> Result<Vec<CheckRow>, CliError> {
    let mut rows = Vec::new();
    let params = match AnalyticChannelParams::solve(measurements, gamma, variant) {
        Ok(p) => p,
        Err(AnalyticError::NoSolution { min_sum, .. }) => {
            rows.push(CheckRow::new(
                "lambda",
                measurements,
                gamma,
                false,
                serde_json::json!({ "variant": variant.to_string(), "finding": "no-solution", "min_row_sum": min_sum }),
            ));
            return Ok(rows);
        }
        Err(e) => return Err(e.into()),
    };
    rows.push(CheckRow::new(
        "lambda",
        measurements,
        gamma,
        true,
        serde_json::json!({ "variant": variant.to_string(), "lambda": params.lambda }),
    ));

    let game = build_planar_game(&PlanarGameParams::new(measurements, gamma)?)?;
    let channel = match analytic_joint_channel(&params) {
        Ok(ch) => ch.joint,
        Err(AnalyticError::Membership { residual, s, m, w }) => {
            rows.push(CheckRow::new(
                "membership",
                measurements,
                gamma,
                false,
                serde_json::json!({ "residual": residual, "state": s, "measurement": m, "outcome": w }),
            ));
            return Ok(rows);
        }
        Err(AnalyticError::Normalization { s, sum }) => {
            rows.push(CheckRow::new(
                "membership",
                measurements,
                gamma,
                false,
                serde_json::json!({ "state": s, "row_sum": sum }),
            ));
            return Ok(rows);
        }
        Err(e) => return Err(e.into()),
    };
    let report = membership_report(&channel, &game)?;
    rows.push(CheckRow::new(
        "membership",
        measurements,
        gamma,
        report.residual <= MEMBERSHIP_TOL,
        serde_json::json!({ "residual": report.residual }),
    ));

    let capacity = joint_capacity(&channel, 1e-12)?;
    if gamma == 1.0 {
        let formula = noiseless_capacity_formula(measurements);
        rows.push(CheckRow::new(
            "closed-form",
            measurements,
            gamma,
            (capacity - formula).abs() <= CAPACITY_TOL,
            serde_json::json!({ "capacity": capacity, "formula": formula }),
        ));
    }

    let result = minimize_capacity(&game, cfg)?;
    let contained = result.lower - CONTAINMENT_SLACK <= capacity && capacity <= result.upper + CONTAINMENT_SLACK;
    rows.push(CheckRow::new(
        "certificate",
        measurements,
        gamma,
        result.certified && contained && result.gap() <= cfg.tol,
        serde_json::json!({
            "D_lower": result.lower,
            "D_upper": result.upper,
            "analytic": capacity,
            "gap": result.gap(),
            "certified": result.certified,
        }),
    ));
    Ok(rows)
}

pub fn cmd_oracle(
    measurements: &[usize],
    gammas: &[f64],
    variant: FormulaVariant,
    cfg: &SolverConfig,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if measurements.is_empty() || gammas.is_empty() {
        return Err(CliError::Validation("oracle needs at least one M and one gamma".into()));
    }
    for &m in measurements {
        if m < 2 {
            return Err(CliError::Validation(format!("the closed-form channel needs M >= 2, got {m}")));
        }
        for &g in gammas {
            PlanarGameParams::new(m, g)?;
        }
    }

    let mut rows = vec![printed_variant_finding()?];
    println!("{}", rows[0].line());
    for &m in measurements {
        for &g in gammas {
            for row in check_point(m, g, variant, cfg)? {
                println!("{}", row.line());
                rows.push(row);
            }
        }
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    println!("{} checks, {} failed", rows.len(), failed);

    if let Some(path) = out {
        let text = serde_json::to_string_pretty(&rows).map_err(|e| CliError::Internal(e.to_string()))? + "\n";
        fs::write(path, text)?;
    }
    match rows.iter().find(|r| !r.passed) {
        None => Ok(()),
        Some(first) => Err(CliError::Failed {
            check: first.check.clone(),
            detail: serde_json::json!({ "M": first.measurements, "gamma": first.gamma, "detail": first.detail }),
        }),
    }
}
