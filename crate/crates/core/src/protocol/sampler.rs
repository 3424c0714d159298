//! Shared randomness and the greedy rejection sampler.
//!
//! Both parties expand the same seed into an i.i.d. stream of pairs
//! `(x_i, u_i)` with `x_i ~ q` and `u_i` uniform on `[0, 1)`. To reproduce a
//! target `P`, the sender walks the stream and accepts step `i` with
//! probability `β_i(x_i) = α_i(x_i) / (R_i q(x_i))`, where
//! `α_i(x) = min(P(x) − A_i(x), R_i q(x))`, `A_i(x)` is the mass already
//! accepted on `x` and `R_i = Σ_x (P(x) − A_i(x))`. Step `i` then accepts
//! `x` with probability exactly `α_i(x)`, so the accepted sample has law
//! `P`, and the expected log-index is about `D(P‖q)`.

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

use super::code::{elias_delta_encode, Message};
use super::ProtocolError;

/// Upper limit on the number of stream positions the sender inspects.
pub const MAX_REJECTION_STEPS: u64 = 1 << 32;

/// Residual mass below which the remaining target is treated as spent.
const RESIDUAL_FLOOR: f64 = 1e-15;

/// Independent generator streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Shared = 0,
    /// Sender's private stream (state choice, master-protocol sampling).
    Alice = 1,
    /// Receiver's private stream (measurement choice).
    Bob = 2,
}

/// ChaCha20 stream for `role` in run `run`: stream id `(run << 2) | role`.
pub fn role_rng(seed: u64, run: u64, role: Role) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((run << 2) | role as u64);
    rng
}

/// Reference distribution of the shared stream.
#[derive(Debug, Clone)]
pub struct Prior {
    probs: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl Prior {
    pub fn new(probs: Vec<f64>) -> Result<Self, ProtocolError> {
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) || (total - 1.0).abs() > 1e-9 {
            return Err(ProtocolError::InvalidPrior(format!(
                "prior must be a probability vector (sum {total})"
            )));
        }
        let sampler =
            WeightedIndex::new(&probs).map_err(|e| ProtocolError::InvalidPrior(e.to_string()))?;
        Ok(Prior { probs, sampler })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Lazily expanded shared stream; index `i` starts at 1.
#[derive(Debug, Clone)]
pub struct SharedRandomness<'a> {
    pub seed: u64,
    pub run: u64,
    prior: &'a Prior,
    rng: ChaCha20Rng,
    drawn: Vec<(usize, f64)>,
    cursor: u64,
}

impl<'a> SharedRandomness<'a> {
    pub fn new(prior: &'a Prior, seed: u64, run: u64) -> Self {
        SharedRandomness {
            seed,
            run,
            prior,
            rng: role_rng(seed, run, Role::Shared),
            drawn: Vec::new(),
            cursor: 0,
        }
    }

    pub fn prior(&self) -> &'a Prior {
        self.prior
    }

    /// Number of stream positions materialized so far.
    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    /// The pair `(x_i, u_i)`.
    pub fn get(&mut self, i: u64) -> (usize, f64) {
        assert!(i >= 1, "shared stream is indexed from 1");
        while self.cursor < i {
            let x = self.prior.sampler.sample(&mut self.rng);
            let u: f64 = self.rng.random();
            self.drawn.push((x, u));
            self.cursor += 1;
        }
        self.drawn[(i - 1) as usize]
    }

    /// Sample `x_i` alone.
    pub fn sample(&mut self, i: u64) -> usize {
        self.get(i).0
    }
}

/// Picks the stream index whose sample has law `target` and encodes it.
/// Returns the index and the message.
pub fn child_encode(
    target: &[f64],
    shared: &mut SharedRandomness<'_>,
) -> Result<(u64, Message), ProtocolError> {
    let q = shared.prior().probs();
    if target.len() != q.len() {
        return Err(ProtocolError::Dimension(format!(
            "target over {} outcomes, prior over {}",
            target.len(),
            q.len()
        )));
    }
    if let Some(x) = (0..q.len()).find(|&x| target[x] > 0.0 && q[x] <= 0.0) {
        return Err(ProtocolError::SupportViolation {
            outcome: x,
            target: target[x],
        });
    }
    let mut residual = target.to_vec();
    for i in 1..=MAX_REJECTION_STEPS {
        let (x, u) = shared.get(i);
        let remaining: f64 = residual.iter().sum();
        let accept = if remaining <= RESIDUAL_FLOOR {
            // only rounding residue left: take the first sample the
            // target supports
            target[x] > 0.0
        } else {
            let cap = remaining * q[x];
            let beta = (residual[x] / cap).min(1.0);
            u < beta
        };
        if accept {
            return Ok((i, elias_delta_encode(i)));
        }
        if remaining > RESIDUAL_FLOOR {
            for (r, &qx) in residual.iter_mut().zip(q) {
                *r -= r.min(remaining * qx);
            }
        }
    }
    Err(ProtocolError::StepCap {
        steps: MAX_REJECTION_STEPS,
    })
}
