//! `sweep`: solve planar games over an `(M, γ)` grid and stream CSV rows.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;

use commcomplex::analytic::{analytic_capacity, reference_constants};
use commcomplex::game::{build_planar_game, PlanarGameParams};
use commcomplex::solver::{joint_capacity, minimize_capacity, product_channel, SolverConfig};

use crate::CliError;

pub const CSV_HEADER: &str = "M,gamma,D_lower,D_upper,analytic,gap,iterations,seconds";

/// Accuracy of the reference capacities in the `analytic` column.
const REFERENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
struct SweepRow {
    measurements: usize,
    gamma: f64,
    lower: f64,
    upper: f64,
    analytic: f64,
    iterations: usize,
    seconds: f64,
    certified: bool,
}

impl SweepRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{:.10},{:.10},{:.10},{:.3e},{},{:.3}",
            self.measurements,
            self.gamma,
            self.lower,
            self.upper,
            self.analytic,
            self.upper - self.lower,
            self.iterations,
            self.seconds
        )
    }
}

fn solve_point(params: PlanarGameParams, cfg: &SolverConfig) -> Result<SweepRow, CliError> {
    let start = Instant::now();
    let game = build_planar_game(&params)?;
    let result = minimize_capacity(&game, cfg)?;
    // with one measurement the only feasible channel is the game itself
    let analytic = if params.measurements == 1 {
        joint_capacity(&product_channel(&game)?, REFERENCE_TOL)?
    } else {
        analytic_capacity(params.measurements, params.gamma, REFERENCE_TOL)?
    };
    Ok(SweepRow {
        measurements: params.measurements,
        gamma: params.gamma,
        lower: result.lower,
        upper: result.upper,
        analytic,
        iterations: result.iterations,
        seconds: start.elapsed().as_secs_f64(),
        certified: result.certified,
    })
}

pub fn cmd_sweep(measurements: &[usize], gammas: &[f64], cfg: &SolverConfig, out: Option<&Path>) -> Result<(), CliError> {
    if measurements.is_empty() || gammas.is_empty() {
        return Err(CliError::Validation("sweep needs at least one M and one gamma".into()));
    }
    let mut points = Vec::with_capacity(measurements.len() * gammas.len());
    for &m in measurements {
        for &g in gammas {
            points.push(PlanarGameParams::new(m, g)?);
        }
    }

    let mut sink: Box<dyn Write> = match out {
        Some(path) => Box::new(io::BufWriter::new(fs::File::create(path)?)),
        None => Box::new(io::stdout()),
    };
    writeln!(sink, "{CSV_HEADER}")?;
    sink.flush()?;

    let (tx, rx) = mpsc::channel();
    let mut uncertified = Vec::new();
    let mut first_error = None;
    std::thread::scope(|scope| {
        scope.spawn(|| {
            points
                .par_iter()
                .enumerate()
                .for_each_with(tx, |tx, (i, &params)| {
                    let _ = tx.send((i, solve_point(params, cfg)));
                });
        });
        // rows leave in grid order as soon as every earlier row is done
        let mut pending = BTreeMap::new();
        let mut next = 0;
        for (i, row) in rx {
            pending.insert(i, row);
            while let Some(row) = pending.remove(&next) {
                next += 1;
                match row {
                    Ok(row) => {
                        if !row.certified {
                            uncertified.push((row.measurements, row.gamma, row.upper - row.lower));
                        }
                        if let Err(e) = writeln!(sink, "{}", row.csv()).and_then(|_| sink.flush()) {
                            first_error.get_or_insert(CliError::from(e));
                        }
                    }
                    Err(e) => {
                        first_error.get_or_insert(e);
                    }
                }
            }
        }
    });
    if let Some(e) = first_error {
        return Err(e);
    }

    let refs = reference_constants();
    for (label, value) in [("limit", refs.ks_limit), ("toner_bacon", refs.toner_bacon)] {
        writeln!(sink, "{label},,{value:.10},{value:.10},{value:.10},0,0,0")?;
    }
    sink.flush()?;

    if uncertified.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed {
            check: "certificate".into(),
            detail: serde_json::json!(uncertified
                .iter()
                .map(|(m, g, gap)| serde_json::json!({ "M": m, "gamma": g, "gap": gap }))
                .collect::<Vec<_>>()),
        })
    }
}
