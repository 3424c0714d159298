//! Finite games as conditional probability tensors `P(w|s,m)`.
//!
//! A game bundles a set of prepared states, a set of measurements and the
//! theory's outcome statistics. Only the tensor matters downstream, so any
//! general probabilistic theory can be loaded from a document; the qubit
//! builders below cover the depolarizing examples.
//!
//! Indexing is zero-based internally. The public planar helpers take the
//! one-based `s ∈ 1..=2M`, `m ∈ 1..=M` used in the literature.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

/// Tolerance for row normalization of generated tensors.
pub const GENERATED_ROW_TOL: f64 = 1e-12;
/// Tolerance for row normalization of loaded documents.
pub const LOADED_ROW_TOL: f64 = 1e-9;
/// Slack on the Bloch-ball norm.
pub const BLOCH_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("index out of range: {what} = {value}, valid range {lo}..={hi}")]
    Index {
        what: &'static str,
        value: usize,
        lo: usize,
        hi: usize,
    },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("negative probability {value:e} at (s={s}, m={m}, w={w})")]
    Negative { s: usize, m: usize, w: usize, value: f64 },
    #[error("row (s={s}, m={m}) sums to {sum:.15}, expected 1")]
    RowSum { s: usize, m: usize, sum: f64 },
    #[error("malformed game document: {0}")]
    Malformed(String),
}

/// A binary measurement outcome. `Plus` is symbol 0, `Minus` is symbol 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn from_sign(w: i32) -> Option<Self> {
        match w {
            1 => Some(Outcome::Plus),
            -1 => Some(Outcome::Minus),
            _ => None,
        }
    }

    pub fn from_symbol(symbol: usize) -> Option<Self> {
        match symbol {
            0 => Some(Outcome::Plus),
            1 => Some(Outcome::Minus),
            _ => None,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Plus => f.write_str("+1"),
            Outcome::Minus => f.write_str("-1"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, GameError> {
        let v = BlochVector { x, y, z };
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(GameError::Parameter(format!("non-finite Bloch vector {v:?}")));
        }
        if v.norm() > 1.0 + BLOCH_NORM_TOL {
            return Err(GameError::Parameter(format!(
                "Bloch vector {v:?} lies outside the unit ball (norm {})",
                v.norm()
            )));
        }
        Ok(v)
    }

    /// Point on the equator at angle `π·numerator/denominator`.
    ///
    /// Taking the angle as a rational multiple of π keeps half-integer
    /// indices exact until the final trigonometric call.
    pub fn planar(numerator: i64, denominator: i64) -> Self {
        let angle = PI * numerator as f64 / denominator as f64;
        BlochVector {
            x: angle.cos(),
            y: angle.sin(),
            z: 0.0,
        }
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Parameters of the planar depolarizing game: `2M` equatorial states and
/// `M` binary measurements along equally spaced axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarGameParams {
    pub measurements: usize,
    pub gamma: f64,
}

impl PlanarGameParams {
    pub fn new(measurements: usize, gamma: f64) -> Result<Self, GameError> {
        if measurements == 0 {
            return Err(GameError::Parameter("planar game needs M >= 1".into()));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(GameError::Parameter(format!(
                "depolarizing factor gamma must lie in [0, 1], got {gamma}"
            )));
        }
        Ok(PlanarGameParams {
            measurements,
            gamma,
        })
    }

    pub fn states(&self) -> usize {
        2 * self.measurements
    }
}

/// Optional human-readable names for states and measurements.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameLabels {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measurements: Vec<String>,
}

/// The tensor `P(w|s,m)` of a finite game.
///
/// Immutable after construction; rows are checked for nonnegativity and
/// normalization when built.
#[derive(Debug, Clone, PartialEq)]
pub struct GameTensor {
    states: usize,
    outcomes: Vec<usize>,
    /// Offset of measurement `m` inside a state's block.
    offsets: Vec<usize>,
    block: usize,
    probs: Vec<f64>,
    labels: Option<GameLabels>,
}

impl GameTensor {
    /// Builds a tensor from nested rows `p[s][m][w]`, checking rows to `row_tol`.
    pub fn from_nested(
        p: &[Vec<Vec<f64>>],
        outcomes: &[usize],
        row_tol: f64,
    ) -> Result<Self, GameError> {
        let states = p.len();
        if states == 0 {
            return Err(GameError::Malformed("game has no states".into()));
        }
        if outcomes.is_empty() {
            return Err(GameError::Malformed("game has no measurements".into()));
        }
        if let Some(m) = outcomes.iter().position(|&n| n == 0) {
            return Err(GameError::Malformed(format!(
                "measurement {m} declares zero outcomes"
            )));
        }
        let mut offsets = Vec::with_capacity(outcomes.len());
        let mut block = 0;
        for &n in outcomes {
            offsets.push(block);
            block += n;
        }
        let mut probs = Vec::with_capacity(states * block);
        for (s, per_state) in p.iter().enumerate() {
            if per_state.len() != outcomes.len() {
                return Err(GameError::Malformed(format!(
                    "state {s} lists {} measurements, expected {}",
                    per_state.len(),
                    outcomes.len()
                )));
            }
            for (m, row) in per_state.iter().enumerate() {
                if row.len() != outcomes[m] {
                    return Err(GameError::Malformed(format!(
                        "row (s={s}, m={m}) has {} outcomes, expected {}",
                        row.len(),
                        outcomes[m]
                    )));
                }
                probs.extend_from_slice(row);
            }
        }
        let tensor = GameTensor {
            states,
            outcomes: outcomes.to_vec(),
            offsets,
            block,
            probs,
            labels: None,
        };
        tensor.validate(row_tol)?;
        Ok(tensor)
    }

    fn from_fn(
        states: usize,
        outcomes: Vec<usize>,
        mut prob: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self, GameError> {
        let mut offsets = Vec::with_capacity(outcomes.len());
        let mut block = 0;
        for &n in &outcomes {
            offsets.push(block);
            block += n;
        }
        let mut probs = Vec::with_capacity(states * block);
        for s in 0..states {
            for (m, &n) in outcomes.iter().enumerate() {
                for w in 0..n {
                    probs.push(prob(s, m, w));
                }
            }
        }
        let tensor = GameTensor {
            states,
            outcomes,
            offsets,
            block,
            probs,
            labels: None,
        };
        tensor.validate(GENERATED_ROW_TOL)?;
        Ok(tensor)
    }

    fn validate(&self, row_tol: f64) -> Result<(), GameError> {
        for s in 0..self.states {
            for m in 0..self.outcomes.len() {
                let row = self.row(s, m);
                for (w, &value) in row.iter().enumerate() {
                    if !(value >= 0.0) || !value.is_finite() {
                        return Err(GameError::Negative { s, m, w, value });
                    }
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > row_tol {
                    return Err(GameError::RowSum { s, m, sum });
                }
            }
        }
        Ok(())
    }

    pub fn with_labels(mut self, labels: GameLabels) -> Result<Self, GameError> {
        if !labels.states.is_empty() && labels.states.len() != self.states {
            return Err(GameError::Malformed(format!(
                "{} state labels for {} states",
                labels.states.len(),
                self.states
            )));
        }
        if !labels.measurements.is_empty() && labels.measurements.len() != self.measurements() {
            return Err(GameError::Malformed(format!(
                "{} measurement labels for {} measurements",
                labels.measurements.len(),
                self.measurements()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn measurements(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    pub fn labels(&self) -> Option<&GameLabels> {
        self.labels.as_ref()
    }

    /// Number of joint outcome arrays `Π_m n_m`, or `None` on overflow.
    pub fn joint_size(&self) -> Option<usize> {
        self.outcomes
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
    }

    /// `P(·|s,m)` with zero-based indices.
    pub fn row(&self, s: usize, m: usize) -> &[f64] {
        let start = s * self.block + self.offsets[m];
        &self.probs[start..start + self.outcomes[m]]
    }

    /// `P(w|s,m)` with zero-based indices.
    pub fn prob(&self, s: usize, m: usize, w: usize) -> f64 {
        self.row(s, m)[w]
    }

    /// Outcome statistics of `s` for every measurement, concatenated.
    pub fn state_block(&self, s: usize) -> &[f64] {
        &self.probs[s * self.block..(s + 1) * self.block]
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.states)
            .map(|s| {
                (0..self.measurements())
                    .map(|m| self.row(s, m).to_vec())
                    .collect()
            })
            .collect()
    }

    pub fn is_binary(&self) -> bool {
        self.outcomes.iter().all(|&n| n == 2)
    }

    /// Checks the cyclic symmetry of planar games: binary outcomes, `S = 2M`
    /// and `P(w|s+1,m+1) = P(w|s,m)` with the wrap `m = M+1 → 1` flipping
    /// the outcome, within `tol`.
    pub fn has_cyclic_symmetry(&self, tol: f64) -> bool {
        let mm = self.measurements();
        if !self.is_binary() || self.states != 2 * mm {
            return false;
        }
        for s in 0..self.states {
            for m in 0..mm {
                let (s2, m2, flip) = cyclic_shift(s, m, mm);
                for w in 0..2 {
                    let w2 = if flip { 1 - w } else { w };
                    if (self.prob(s, m, w) - self.prob(s2, m2, w2)).abs() > tol {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Game of two independent copies run side by side.
    ///
    /// States are pairs `(s1, s2)` with index `s1·S2 + s2`. Measurements of
    /// `self` come first and act on the first component; those of `other`
    /// follow and act on the second. The joint outcome array is therefore
    /// the concatenation `(w¹, w²)`.
    pub fn parallel_product(&self, other: &GameTensor) -> GameTensor {
        let m1 = self.measurements();
        let mut outcomes = self.outcomes.clone();
        outcomes.extend_from_slice(&other.outcomes);
        let s2n = other.states;
        GameTensor::from_fn(self.states * s2n, outcomes, |s, m, w| {
            let (a, b) = (s / s2n, s % s2n);
            if m < m1 {
                self.prob(a, m, w)
            } else {
                other.prob(b, m - m1, w)
            }
        })
        .expect("product of valid games is valid")
    }
}

/// Image of zero-based `(s, m)` under `s → s+1, m → m+1`.
///
/// Returns the shifted state, the shifted measurement and whether the
/// outcome flips because `m+1` wrapped past `M` (`v_{m+M} = -v_m`).
pub fn cyclic_shift(s: usize, m: usize, measurements: usize) -> (usize, usize, bool) {
    let s2 = (s + 1) % (2 * measurements);
    if m + 1 == measurements {
        (s2, 0, true)
    } else {
        (s2, m + 1, false)
    }
}

fn check_index(what: &'static str, value: usize, lo: usize, hi: usize) -> Result<(), GameError> {
    if value < lo || value > hi {
        Err(GameError::Index { what, value, lo, hi })
    } else {
        Ok(())
    }
}

/// `½{1 + wγ cos[π(s−m)/M]}` with one-based `s ∈ 1..=2M`, `m ∈ 1..=M`.
pub fn planar_probability(
    s: usize,
    m: usize,
    w: Outcome,
    params: &PlanarGameParams,
) -> Result<f64, GameError> {
    let mm = params.measurements;
    check_index("s", s, 1, 2 * mm)?;
    check_index("m", m, 1, mm)?;
    Ok(planar_value(s as i64 - m as i64, w, params))
}

fn planar_value(diff: i64, w: Outcome, params: &PlanarGameParams) -> f64 {
    let c = (PI * diff as f64 / params.measurements as f64).cos();
    0.5 * (1.0 + w.sign() * params.gamma * c)
}

pub fn build_planar_game(params: &PlanarGameParams) -> Result<GameTensor, GameError> {
    let params = PlanarGameParams::new(params.measurements, params.gamma)?;
    let mm = params.measurements;
    GameTensor::from_fn(2 * mm, vec![2; mm], |s, m, w| {
        let outcome = Outcome::from_symbol(w).expect("binary outcome");
        planar_value(s as i64 - m as i64, outcome, &params)
    })
}

/// Bloch vectors of the planar construction: states `v_s`, `s = 1..=2M`,
/// and measurement axes `v_m`, `m = 1..=M`.
pub fn planar_configuration(measurements: usize) -> (Vec<BlochVector>, Vec<BlochVector>) {
    let mm = measurements as i64;
    let states = (1..=2 * mm).map(|s| BlochVector::planar(s, mm)).collect();
    let axes = (1..=mm).map(|m| BlochVector::planar(m, mm)).collect();
    (states, axes)
}

/// Qubit game with projective measurements along `axes`, states given by
/// Bloch vectors and a depolarizing channel `v → γv` in between.
pub fn build_qubit_game(
    states: &[BlochVector],
    axes: &[BlochVector],
    gamma: f64,
) -> Result<GameTensor, GameError> {
    if states.is_empty() || axes.is_empty() {
        return Err(GameError::Parameter(
            "qubit game needs at least one state and one axis".into(),
        ));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(GameError::Parameter(format!(
            "depolarizing factor gamma must lie in [0, 1], got {gamma}"
        )));
    }
    for v in states {
        BlochVector::new(v.x, v.y, v.z)?;
    }
    for (m, u) in axes.iter().enumerate() {
        if (u.norm() - 1.0).abs() > BLOCH_NORM_TOL {
            return Err(GameError::Parameter(format!(
                "measurement axis {m} is not a unit vector (norm {})",
                u.norm()
            )));
        }
    }
    GameTensor::from_fn(states.len(), vec![2; axes.len()], |s, m, w| {
        let sign = Outcome::from_symbol(w).expect("binary outcome").sign();
        // clamp the rounding residue of antipodal pairs
        (0.5 * (1.0 + gamma * sign * axes[m].dot(&states[s]))).clamp(0.0, 1.0)
    })
}

#[derive(Serialize)]
struct DocumentOut<'a> {
    #[serde(rename = "S")]
    states: usize,
    #[serde(rename = "M")]
    measurements: usize,
    outcomes: &'a [usize],
    #[serde(rename = "P")]
    probs: Vec<Vec<Vec<Box<RawValue>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<&'a GameLabels>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentIn {
    #[serde(rename = "S")]
    states: usize,
    #[serde(rename = "M")]
    measurements: usize,
    outcomes: Vec<usize>,
    #[serde(rename = "P")]
    probs: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    labels: Option<GameLabels>,
}

/// Seventeen significant digits: enough to round-trip any `f64`.
pub(crate) fn exact_literal(x: f64) -> Box<RawValue> {
    let text = if x == 0.0 {
        "0.0".to_string()
    } else {
        format!("{x:.16e}")
    };
    RawValue::from_string(text).expect("formatted float is a JSON number")
}

/// Serializes a game to its JSON document.
pub fn save_game(game: &GameTensor) -> String {
    let probs = (0..game.states())
        .map(|s| {
            (0..game.measurements())
                .map(|m| game.row(s, m).iter().map(|&p| exact_literal(p)).collect())
                .collect()
        })
        .collect();
    let doc = DocumentOut {
        states: game.states(),
        measurements: game.measurements(),
        outcomes: game.outcomes(),
        probs,
        labels: game.labels(),
    };
    serde_json::to_string_pretty(&doc).expect("game document serializes")
}

/// Parses and validates a JSON game document.
pub fn load_game(document: &str) -> Result<GameTensor, GameError> {
    let doc: DocumentIn =
        serde_json::from_str(document).map_err(|e| GameError::Malformed(e.to_string()))?;
    if doc.outcomes.len() != doc.measurements {
        return Err(GameError::Malformed(format!(
            "`outcomes` lists {} measurements but M = {}",
            doc.outcomes.len(),
            doc.measurements
        )));
    }
    if doc.probs.len() != doc.states {
        return Err(GameError::Malformed(format!(
            "`P` lists {} states but S = {}",
            doc.probs.len(),
            doc.states
        )));
    }
    let game = GameTensor::from_nested(&doc.probs, &doc.outcomes, LOADED_ROW_TOL)?;
    match doc.labels {
        Some(labels) => game.with_labels(labels),
        None => Ok(game),
    }
}
