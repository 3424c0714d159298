//! Sender and receiver as separate state machines. The only value that
//! crosses from [`Alice`] to [`Bob`] is a [`Message`].

use rand::prelude::*;
use rand::distr::weighted::WeightedIndex;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::joint::JointChannel;

use super::code::{elias_delta_decode, elias_delta_encode, Message};
use super::sampler::{child_encode, role_rng, Prior, Role, SharedRandomness};
use super::ProtocolError;

/// Sender: knows the state and the channel.
pub struct Alice<'a> {
    channel: &'a JointChannel,
    shared: SharedRandomness<'a>,
    rng: ChaCha20Rng,
    last_index: Option<u64>,
}

impl<'a> Alice<'a> {
    pub fn new(channel: &'a JointChannel, prior: &'a Prior, seed: u64, run: u64) -> Self {
        Alice {
            channel,
            shared: SharedRandomness::new(prior, seed, run),
            rng: role_rng(seed, run, Role::Alice),
            last_index: None,
        }
    }

    /// Child protocol: the index of a shared sample distributed as `ρ(·|s)`.
    pub fn child_message(&mut self, s: usize) -> Result<Message, ProtocolError> {
        check_state(self.channel, s)?;
        let (index, msg) = child_encode(self.channel.row(s), &mut self.shared)?;
        self.last_index = Some(index);
        Ok(msg)
    }

    /// Master protocol: the whole joint outcome drawn from `ρ(·|s)`, sent as
    /// `index + 1` in the same integer code.
    pub fn master_message(&mut self, s: usize) -> Result<Message, ProtocolError> {
        check_state(self.channel, s)?;
        let w = draw_row(self.channel, s, &mut self.rng)?;
        self.last_index = None;
        Ok(elias_delta_encode(w as u64 + 1))
    }

    /// Stream index chosen by the last child message.
    pub fn last_index(&self) -> Option<u64> {
        self.last_index
    }
}

/// Receiver: knows the measurement, the prior and the shared seed.
pub struct Bob<'a> {
    shared: SharedRandomness<'a>,
}

impl<'a> Bob<'a> {
    pub fn new(prior: &'a Prior, seed: u64, run: u64) -> Self {
        Bob {
            shared: SharedRandomness::new(prior, seed, run),
        }
    }

    /// Decodes a child message, returning the stream index and joint outcome.
    pub fn receive_child(&mut self, msg: &Message) -> Result<(u64, usize), ProtocolError> {
        let index = elias_delta_decode(msg)?;
        Ok((index, self.shared.sample(index)))
    }

    pub fn receive_master(&mut self, msg: &Message) -> Result<usize, ProtocolError> {
        let w = elias_delta_decode(msg)? - 1;
        if w as usize >= self.shared.prior().len() {
            return Err(ProtocolError::Decode(format!("joint outcome {w} out of range")));
        }
        Ok(w as usize)
    }
}

fn check_state(channel: &JointChannel, s: usize) -> Result<(), ProtocolError> {
    if s >= channel.states() {
        return Err(ProtocolError::Dimension(format!(
            "state {s} out of range for {} states",
            channel.states()
        )));
    }
    Ok(())
}

fn draw_row(channel: &JointChannel, s: usize, rng: &mut impl Rng) -> Result<usize, ProtocolError> {
    let dist = WeightedIndex::new(channel.row(s))
        .map_err(|e| ProtocolError::Dimension(format!("row {s} is not a distribution: {e}")))?;
    Ok(dist.sample(rng))
}

/// Draws `w ~ ρ(·|s)` and returns its digit for measurement `m`.
pub fn master_sample(
    ch: &JointChannel,
    s: usize,
    m: usize,
    rng: &mut impl Rng,
) -> Result<usize, ProtocolError> {
    check_state(ch, s)?;
    if m >= ch.index().measurements() {
        return Err(ProtocolError::Dimension(format!("measurement {m} out of range")));
    }
    let w = draw_row(ch, s, rng)?;
    Ok(ch.index().digit(w, m))
}

/// One child-protocol exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub run: u64,
    pub state: usize,
    pub measurement: usize,
    pub message: String,
    pub index: u64,
    /// Outcome symbol of measurement `m` (0 for +1, 1 for −1 on binary games).
    pub outcome: usize,
    pub bits_sent: usize,
}

/// Runs Alice and Bob for state `s` and measurement `m`.
pub fn child_protocol_run(
    ch: &JointChannel,
    prior: &Prior,
    seed: u64,
    run: u64,
    s: usize,
    m: usize,
) -> Result<ProtocolTranscript, ProtocolError> {
    if m >= ch.index().measurements() {
        return Err(ProtocolError::Dimension(format!("measurement {m} out of range")));
    }
    if prior.len() != ch.outputs() {
        return Err(ProtocolError::Dimension(format!(
            "prior over {} outcomes, channel over {}",
            prior.len(),
            ch.outputs()
        )));
    }
    let mut alice = Alice::new(ch, prior, seed, run);
    let mut bob = Bob::new(prior, seed, run);
    let msg = alice.child_message(s)?;
    let (index, w) = bob.receive_child(&msg)?;
    debug_assert_eq!(alice.last_index(), Some(index));
    Ok(ProtocolTranscript {
        run,
        state: s,
        measurement: m,
        message: msg.to_string(),
        index,
        outcome: ch.index().digit(w, m),
        bits_sent: msg.len(),
    })
}
