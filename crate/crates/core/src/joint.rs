//! Joint outcome arrays `w = (w_1, …, w_M)` and channels `ρ(w|s)` over them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::info::{ConditionalChannel, Distribution};

/// Default cap on the number of joint outcomes per row (2²⁰).
pub const DEFAULT_JOINT_GUARD: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JointError {
    #[error("joint outcome space needs {required} entries per row, above the guard of {guard}")]
    TooLarge { required: String, guard: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Mixed-radix index of joint outcome arrays.
///
/// `index = Σ_m digit_m · Π_{j<m} n_j`, so the first measurement varies
/// fastest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointOutcomeIndex {
    radices: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl JointOutcomeIndex {
    pub fn new(radices: &[usize], guard: usize) -> Result<Self, JointError> {
        if radices.is_empty() || radices.contains(&0) {
            return Err(JointError::Dimension(format!(
                "invalid outcome counts {radices:?}"
            )));
        }
        let mut strides = Vec::with_capacity(radices.len());
        let mut size: usize = 1;
        let mut overflow = false;
        for &n in radices {
            strides.push(size);
            match size.checked_mul(n) {
                Some(v) if v <= guard => size = v,
                _ => {
                    overflow = true;
                    break;
                }
            }
        }
        if overflow {
            let log2: f64 = radices.iter().map(|&n| (n as f64).log2()).sum();
            let required = match radices.iter().try_fold(1usize, |a, &n| a.checked_mul(n)) {
                Some(v) => v.to_string(),
                None => format!("2^{log2:.1}"),
            };
            return Err(JointError::TooLarge { required, guard });
        }
        Ok(JointOutcomeIndex {
            radices: radices.to_vec(),
            strides,
            size,
        })
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn measurements(&self) -> usize {
        self.radices.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn stride(&self, m: usize) -> usize {
        self.strides[m]
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.radices.len());
        digits
            .iter()
            .zip(&self.strides)
            .map(|(&d, &stride)| d * stride)
            .sum()
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        self.radices
            .iter()
            .zip(&self.strides)
            .map(|(&n, &stride)| (index / stride) % n)
            .collect()
    }

    #[inline]
    pub fn digit(&self, index: usize, m: usize) -> usize {
        (index / self.strides[m]) % self.radices[m]
    }

    /// Adds `row` into `out`, one marginal per measurement, `out[m][w]`.
    pub fn marginals_into(&self, row: &[f64], out: &mut [Vec<f64>]) {
        for (m, marg) in out.iter_mut().enumerate() {
            marginal_into(self.radices[m], self.strides[m], row, marg);
        }
    }
}

/// Marginal of one digit of a mixed-radix row; `out` is overwritten.
pub(crate) fn marginal_into(radix: usize, stride: usize, row: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let period = stride * radix;
    for chunk in row.chunks(period) {
        for (d, part) in chunk.chunks(stride).enumerate() {
            out[d] += part.iter().sum::<f64>();
        }
    }
}

/// Multiplies every entry of `row` whose digit is `d` by `factors[d]`.
pub(crate) fn scale_by_digit(radix: usize, stride: usize, row: &mut [f64], factors: &[f64]) {
    let period = stride * radix;
    for chunk in row.chunks_mut(period) {
        for (d, part) in chunk.chunks_mut(stride).enumerate() {
            let f = factors[d];
            part.iter_mut().for_each(|v| *v *= f);
        }
    }
}

/// A classical channel from states to joint outcome arrays.
///
/// Also used for unnormalized row sets (IPF starting points); normalization
/// is only enforced by the constructors that say so.
#[derive(Debug, Clone, PartialEq)]
pub struct JointChannel {
    index: JointOutcomeIndex,
    states: usize,
    data: Vec<f64>,
}

/// Rows of nonnegative weights over joint outcomes.
pub type JointRowSet = JointChannel;

impl JointChannel {
    pub fn from_data(
        index: JointOutcomeIndex,
        states: usize,
        data: Vec<f64>,
    ) -> Result<Self, JointError> {
        if data.len() != states * index.size() {
            return Err(JointError::Dimension(format!(
                "{} entries for {states} rows of {}",
                data.len(),
                index.size()
            )));
        }
        Ok(JointChannel {
            index,
            states,
            data,
        })
    }

    pub fn from_fn(
        index: JointOutcomeIndex,
        states: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let k = index.size();
        let data = (0..states * k).map(|i| f(i / k, i % k)).collect();
        JointChannel {
            index,
            states,
            data,
        }
    }

    pub fn uniform(index: JointOutcomeIndex, states: usize) -> Self {
        let v = 1.0 / index.size() as f64;
        let data = vec![v; states * index.size()];
        JointChannel {
            index,
            states,
            data,
        }
    }

    pub fn index(&self) -> &JointOutcomeIndex {
        &self.index
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn outputs(&self) -> usize {
        self.index.size()
    }

    pub fn row(&self, s: usize) -> &[f64] {
        let k = self.index.size();
        &self.data[s * k..(s + 1) * k]
    }

    pub fn row_mut(&mut self, s: usize) -> &mut [f64] {
        let k = self.index.size();
        &mut self.data[s * k..(s + 1) * k]
    }

    pub fn rows(&self) -> std::slice::Chunks<'_, f64> {
        self.data.chunks(self.index.size())
    }

    pub fn rows_mut(&mut self) -> std::slice::ChunksMut<'_, f64> {
        let k = self.index.size();
        self.data.chunks_mut(k)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `ρ(w|s)` for a digit array `w`.
    pub fn prob(&self, s: usize, digits: &[usize]) -> f64 {
        self.row(s)[self.index.encode(digits)]
    }

    /// Marginal of measurement `m` in row `s`.
    pub fn marginal(&self, s: usize, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.index.radices()[m]];
        marginal_into(
            self.index.radices()[m],
            self.index.stride(m),
            self.row(s),
            &mut out,
        );
        out
    }

    /// Mixes every row with the uniform distribution: `(1−ε)ρ + ε/K`.
    pub fn mix_uniform(&mut self, eps: f64) {
        let u = eps / self.index.size() as f64;
        self.data.iter_mut().for_each(|v| *v = (1.0 - eps) * *v + u);
    }

    /// Output distribution `q(w) = Σ_s p(s) ρ(w|s)`.
    pub fn output_distribution(&self, input: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.outputs()];
        for (row, &p) in self.rows().zip(input) {
            if p > 0.0 {
                q.iter_mut().zip(row).for_each(|(a, &b)| *a += p * b);
            }
        }
        q
    }

    /// Views the rows as a plain conditional channel for capacity routines.
    pub fn as_conditional(&self) -> ConditionalChannel<'_> {
        ConditionalChannel::from_flat_unchecked(self.states, self.index.size(), &self.data)
    }

    /// Row `s` as an owned distribution.
    pub fn row_distribution(&self, s: usize) -> Distribution {
        Distribution::from_vec_unchecked(self.row(s).to_vec())
    }

    /// Rows as nested vectors, joint outcomes in canonical index order.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.to_vec()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encoding_is_first_digit_fastest() {
        let idx = JointOutcomeIndex::new(&[2, 3, 2], DEFAULT_JOINT_GUARD).unwrap();
        assert_eq!(idx.size(), 12);
        assert_eq!(idx.encode(&[1, 0, 0]), 1);
        assert_eq!(idx.encode(&[0, 1, 0]), 2);
        assert_eq!(idx.encode(&[0, 0, 1]), 6);
        assert_eq!(idx.decode(11), vec![1, 2, 1]);
        assert_eq!(idx.digit(11, 1), 2);
    }

    #[test]
    fn guard_reports_required_length() {
        match JointOutcomeIndex::new(&[2; 21], DEFAULT_JOINT_GUARD) {
            Err(JointError::TooLarge { required, guard }) => {
                assert_eq!(required, "2097152");
                assert_eq!(guard, 1 << 20);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(JointOutcomeIndex::new(&[2; 20], DEFAULT_JOINT_GUARD).is_ok());
        assert!(JointOutcomeIndex::new(&[2, 0], DEFAULT_JOINT_GUARD).is_err());
    }

    #[test]
    fn marginals_match_brute_force() {
        let idx = JointOutcomeIndex::new(&[2, 3, 2], 64).unwrap();
        let row: Vec<f64> = (0..12).map(|i| (i * i % 7) as f64 + 0.5).collect();
        let mut out = vec![vec![0.0; 2], vec![0.0; 3], vec![0.0; 2]];
        idx.marginals_into(&row, &mut out);
        for m in 0..3 {
            let mut brute = vec![0.0; idx.radices()[m]];
            for (i, v) in row.iter().enumerate() {
                brute[idx.decode(i)[m]] += v;
            }
            assert_eq!(out[m], brute);
        }
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(radices in prop::collection::vec(1usize..5, 1..6), seed in any::<u64>()) {
            let idx = JointOutcomeIndex::new(&radices, DEFAULT_JOINT_GUARD).unwrap();
            let i = (seed as usize) % idx.size();
            prop_assert_eq!(idx.encode(&idx.decode(i)), i);
            let digits: Vec<usize> = radices.iter().enumerate().map(|(m, &n)| (seed as usize >> m) % n).collect();
            prop_assert_eq!(idx.decode(idx.encode(&digits)), digits);
        }
    }
}
