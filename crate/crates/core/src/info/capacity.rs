use rayon::prelude::*;

use super::entropy::{kl_divergence, ConditionalChannel, Distribution};
use super::{InfoError, PARALLEL_THRESHOLD};

/// Outcome of a Blahut–Arimoto run.
///
/// `capacity` is the mutual information achieved by `input`, a lower bound
/// on the true capacity; `upper = max_x D(W(·|x) ‖ q)` is an upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport {
    pub capacity: f64,
    pub upper: f64,
    pub input: Distribution,
    pub output: Vec<f64>,
    pub iterations: usize,
    /// Lower bound after each iteration, when requested.
    pub history: Vec<f64>,
}

impl CapacityReport {
    pub fn gap(&self) -> f64 {
        self.upper - self.capacity
    }
}

/// Capacity of `ch` from the uniform starting input.
///
/// Stops once `max_x D(W(·|x)‖q) − I(p, W) ≤ tol`, which bounds the error
/// of `capacity` by `tol`. Starting from uniform means ties between
/// equivalent inputs resolve to the symmetric solution.
pub fn blahut_arimoto_capacity(
    ch: &ConditionalChannel<'_>,
    tol: f64,
    max_iter: usize,
) -> Result<CapacityReport, InfoError> {
    let start = vec![1.0 / ch.inputs() as f64; ch.inputs()];
    blahut_arimoto_from(ch, &start, tol, max_iter, false)
}

/// Blahut–Arimoto from an explicit starting input.
pub fn blahut_arimoto_from(
    ch: &ConditionalChannel<'_>,
    start: &[f64],
    tol: f64,
    max_iter: usize,
    record_history: bool,
) -> Result<CapacityReport, InfoError> {
    match blahut_arimoto_partial(ch, start, tol, max_iter, record_history)? {
        (report, true) => Ok(report),
        (report, false) => Err(InfoError::CapacityNoConvergence {
            lower: report.capacity,
            upper: report.upper,
            iterations: report.iterations,
        }),
    }
}

/// Like [`blahut_arimoto_from`] but hands back the last iterate when the
/// budget runs out, flagged by the boolean. `upper` is then the best upper
/// bound seen and `capacity` the best lower bound.
pub(crate) fn blahut_arimoto_partial(
    ch: &ConditionalChannel<'_>,
    start: &[f64],
    tol: f64,
    max_iter: usize,
    record_history: bool,
) -> Result<(CapacityReport, bool), InfoError> {
    if !(tol > 0.0) {
        return Err(InfoError::Tolerance(tol));
    }
    if start.len() != ch.inputs() {
        return Err(InfoError::Dimension(format!(
            "starting input has {} entries, channel has {} inputs",
            start.len(),
            ch.inputs()
        )));
    }
    let parallel = ch.inputs() * ch.outputs() >= PARALLEL_THRESHOLD;
    let mut p = start.to_vec();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    let mut divergences = vec![0.0; ch.inputs()];
    let mut history = Vec::new();
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);

    for iteration in 1..=max_iter.max(1) {
        let q = ch.output_distribution(&p);
        let div = |row: &[f64]| kl_divergence(row, &q);
        if parallel {
            divergences
                .par_iter_mut()
                .zip(ch.rows().collect::<Vec<_>>().into_par_iter())
                .for_each(|(d, row)| *d = div(row));
        } else {
            divergences
                .iter_mut()
                .zip(ch.rows())
                .for_each(|(d, row)| *d = div(row));
        }
        let lower: f64 = p
            .iter()
            .zip(&divergences)
            .filter(|(&pi, _)| pi > 0.0)
            .map(|(&pi, &d)| pi * d)
            .sum::<f64>()
            .max(0.0);
        let upper = divergences.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if record_history {
            history.push(lower);
        }
        best = (best.0.max(lower), best.1.min(upper));
        if upper - lower <= tol {
            let report = CapacityReport {
                capacity: lower,
                upper,
                input: Distribution::from_vec_unchecked(p),
                output: q,
                iterations: iteration,
                history,
            };
            return Ok((report, true));
        }
        if iteration == max_iter.max(1) {
            let report = CapacityReport {
                capacity: best.0,
                upper: best.1,
                input: Distribution::from_vec_unchecked(p),
                output: q,
                iterations: iteration,
                history,
            };
            return Ok((report, false));
        }
        // p(x) ← p(x)·2^{D_x} / Z, shifted by the max for stability
        let shift = if upper.is_finite() { upper } else { 0.0 };
        let mut z = 0.0;
        for (pi, &d) in p.iter_mut().zip(&divergences) {
            let factor = if d.is_finite() { (d - shift).exp2() } else { 1.0 };
            *pi *= factor;
            z += *pi;
        }
        p.iter_mut().for_each(|v| *v /= z);
    }
    unreachable!("the last iteration always returns")
}
