use crate::game::GameTensor;
use crate::joint::JointChannel;

use super::SolverError;

/// Tolerance for recognizing a game as cyclically symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Permutation of joint indices under `(σw)_{m+1} = w_m`, `(σw)_1 = −w_M`.
fn shift_permutation(ch: &JointChannel) -> Vec<usize> {
    let index = ch.index();
    let mm = index.measurements();
    (0..index.size())
        .map(|i| {
            let w = index.decode(i);
            let mut shifted = Vec::with_capacity(mm);
            shifted.push(1 - w[mm - 1]);
            shifted.extend_from_slice(&w[..mm - 1]);
            index.encode(&shifted)
        })
        .collect()
}

/// Averages `ch` over the cyclic group generated by `s → s+1, m → m+1`
/// (outcomes flip when `m` wraps). The group has order `2M`; the average is
/// invariant and stays feasible because the game is.
pub fn symmetrize(ch: &JointChannel, game: &GameTensor) -> Result<JointChannel, SolverError> {
    if !game.has_cyclic_symmetry(SYMMETRY_TOL) {
        return Err(SolverError::UnsupportedSymmetry(format!(
            "game with {} states and outcome counts {:?} is not cyclically symmetric",
            game.states(),
            game.outcomes()
        )));
    }
    if ch.states() != game.states() || ch.index().radices() != game.outcomes() {
        return Err(SolverError::Dimension(format!(
            "channel is {}×{:?}, game is {}×{:?}",
            ch.states(),
            ch.index().radices(),
            game.states(),
            game.outcomes()
        )));
    }
    Ok(symmetrize_unchecked(ch))
}

pub(crate) fn symmetrize_unchecked(ch: &JointChannel) -> JointChannel {
    let perm = shift_permutation(ch);
    let states = ch.states();
    let k = ch.outputs();
    let mut current = ch.data().to_vec();
    let mut next = vec![0.0; current.len()];
    let mut total = vec![0.0; current.len()];
    for _ in 0..states {
        total.iter_mut().zip(&current).for_each(|(t, &v)| *t += v);
        // ρ'(σw|s+1) = ρ(w|s)
        for s in 0..states {
            let to = (s + 1) % states;
            let src = &current[s * k..(s + 1) * k];
            let dst = &mut next[to * k..(to + 1) * k];
            for (i, &v) in src.iter().enumerate() {
                dst[perm[i]] = v;
            }
        }
        std::mem::swap(&mut current, &mut next);
    }
    let scale = 1.0 / states as f64;
    total.iter_mut().for_each(|v| *v *= scale);
    JointChannel::from_data(ch.index().clone(), states, total).expect("same shape")
}
