use std::borrow::Cow;

use super::InfoError;

/// Normalization tolerance of validated distributions.
pub const DISTRIBUTION_TOL: f64 = 1e-12;

/// A probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(p: Vec<f64>) -> Result<Self, InfoError> {
        check_probability_vector(&p, DISTRIBUTION_TOL)?;
        Ok(Distribution(p))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over an empty alphabet");
        Distribution(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut p = vec![0.0; n];
        p[at] = 1.0;
        Distribution(p)
    }

    pub(crate) fn from_vec_unchecked(p: Vec<f64>) -> Self {
        Distribution(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Distribution {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn check_probability_vector(p: &[f64], tol: f64) -> Result<(), InfoError> {
    if p.is_empty() {
        return Err(InfoError::InvalidDistribution("empty alphabet".into()));
    }
    if let Some(i) = p.iter().position(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(InfoError::InvalidDistribution(format!(
            "entry {i} is {}",
            p[i]
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(InfoError::InvalidDistribution(format!(
            "entries sum to {sum:.15}"
        )));
    }
    Ok(())
}

/// Row-stochastic matrix `W(y|x)`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalChannel<'a> {
    inputs: usize,
    outputs: usize,
    data: Cow<'a, [f64]>,
}

impl ConditionalChannel<'static> {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, InfoError> {
        let inputs = rows.len();
        let outputs = rows.first().map_or(0, Vec::len);
        if inputs == 0 || outputs == 0 {
            return Err(InfoError::Dimension("empty channel".into()));
        }
        let mut data = Vec::with_capacity(inputs * outputs);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != outputs {
                return Err(InfoError::Dimension(format!(
                    "row {x} has {} outputs, expected {outputs}",
                    row.len()
                )));
            }
            check_probability_vector(row, DISTRIBUTION_TOL)
                .map_err(|e| InfoError::InvalidDistribution(format!("row {x}: {e}")))?;
            data.extend_from_slice(row);
        }
        Ok(ConditionalChannel {
            inputs,
            outputs,
            data: Cow::Owned(data),
        })
    }

    /// Binary symmetric channel with crossover probability `eps`.
    pub fn binary_symmetric(eps: f64) -> Result<Self, InfoError> {
        Self::from_rows(vec![vec![1.0 - eps, eps], vec![eps, 1.0 - eps]])
    }
}

impl<'a> ConditionalChannel<'a> {
    pub(crate) fn from_flat_unchecked(inputs: usize, outputs: usize, data: &'a [f64]) -> Self {
        debug_assert_eq!(data.len(), inputs * outputs);
        ConditionalChannel {
            inputs,
            outputs,
            data: Cow::Borrowed(data),
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn rows(&self) -> std::slice::Chunks<'_, f64> {
        self.data.chunks(self.outputs)
    }

    /// `q(y) = Σ_x p(x) W(y|x)`.
    pub fn output_distribution(&self, input: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.outputs];
        for (row, &p) in self.rows().zip(input) {
            if p > 0.0 {
                q.iter_mut().zip(row).for_each(|(a, &b)| *a += p * b);
            }
        }
        q
    }

    /// Cascade with a post-processing channel `Q(z|y)`.
    pub fn then(&self, post: &ConditionalChannel<'_>) -> Result<ConditionalChannel<'static>, InfoError> {
        if post.inputs != self.outputs {
            return Err(InfoError::Dimension(format!(
                "post-processing expects {} inputs, channel has {} outputs",
                post.inputs, self.outputs
            )));
        }
        let mut data = vec![0.0; self.inputs * post.outputs];
        for (x, row) in self.rows().enumerate() {
            let out = &mut data[x * post.outputs..(x + 1) * post.outputs];
            for (y, &w) in row.iter().enumerate() {
                if w > 0.0 {
                    out.iter_mut().zip(post.row(y)).for_each(|(a, &b)| *a += w * b);
                }
            }
        }
        Ok(ConditionalChannel {
            inputs: self.inputs,
            outputs: post.outputs,
            data: Cow::Owned(data),
        })
    }

    /// Channel acting on pairs of inputs independently: `W(y1|x1)·W'(y2|x2)`.
    /// Pair `(a, b)` has index `a·n' + b`.
    pub fn tensor(&self, other: &ConditionalChannel<'_>) -> ConditionalChannel<'static> {
        let (ni, no) = (self.inputs * other.inputs, self.outputs * other.outputs);
        let mut data = Vec::with_capacity(ni * no);
        for a in 0..self.inputs {
            for b in 0..other.inputs {
                for &wa in self.row(a) {
                    data.extend(other.row(b).iter().map(|&wb| wa * wb));
                }
            }
        }
        ConditionalChannel {
            inputs: ni,
            outputs: no,
            data: Cow::Owned(data),
        }
    }

    pub fn into_owned(self) -> ConditionalChannel<'static> {
        ConditionalChannel {
            inputs: self.inputs,
            outputs: self.outputs,
            data: Cow::Owned(self.data.into_owned()),
        }
    }
}

/// `−Σ p log₂ p` with `0·log 0 = 0`.
pub fn shannon_entropy(d: &Distribution) -> f64 {
    entropy_bits(d.as_slice())
}

pub(crate) fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

/// `D(p‖q)` in bits; infinite when `p` puts mass where `q` has none.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            total += a * (a / b).log2();
        }
    }
    total
}

/// `I(X;Y) = Σ_x p(x) D(W(·|x) ‖ q)`.
pub fn mutual_information(input: &Distribution, ch: &ConditionalChannel<'_>) -> Result<f64, InfoError> {
    if input.len() != ch.inputs() {
        return Err(InfoError::Dimension(format!(
            "input alphabet {} vs channel inputs {}",
            input.len(),
            ch.inputs()
        )));
    }
    Ok(mutual_information_raw(input.as_slice(), ch))
}

pub(crate) fn mutual_information_raw(input: &[f64], ch: &ConditionalChannel<'_>) -> f64 {
    let q = ch.output_distribution(input);
    let value: f64 = ch
        .rows()
        .zip(input)
        .filter(|(_, &p)| p > 0.0)
        .map(|(row, &p)| p * kl_divergence(row, &q))
        .sum();
    value.max(0.0)
}
