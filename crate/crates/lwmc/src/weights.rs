//! Weighting schemes for locally weighted chains.
//!
//! The pairwise nu-power construction works through the 2x2 transition
//! matrix of the accept/reject move on `{current, proposal}`; the
//! multi-proposal version-1 and version-2 weights generalize its `nu = 1`
//! and `nu -> inf` rows. Everything is computed in log space with explicit
//! `-inf` handling for zero densities, since the hard targets here have
//! dynamic range `exp(-50)` over unit distances.

use crate::error::{Error, Result};

/// Cap on finite `nu`; beyond geometric convergence, higher powers add cost
/// without precision, so larger values fall back to the stationary weights.
pub const NU_CAP: u64 = 1 << 20;

/// `min{1, exp(diff)}` with `exp` only ever applied to non-positive
/// arguments, so large score gaps cannot overflow.
#[inline]
pub(crate) fn accept_ratio(diff: f64) -> f64 {
    if diff >= 0.0 {
        1.0
    } else {
        diff.exp() // diff = -inf gives exactly 0
    }
}

/// A normalized weight vector over the `M + 1` points of one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Validates non-negativity and normalization (sum within 1e-12 of 1).
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("empty".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || *w > 1.0 + 1e-12) {
            return Err(Error::InvalidWeights(format!(
                "entries outside [0, 1]: {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!("sum {sum} != 1")));
        }
        Ok(WeightVector(weights))
    }

    /// Weight 1 on `index`, 0 elsewhere: the classical MH weighting in which
    /// the accepted point gets everything.
    pub fn one_hot(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::InvalidWeights(format!(
                "one-hot index {index} out of range {len}"
            )));
        }
        let mut w = vec![0.0; len];
        w[index] = 1.0;
        Ok(WeightVector(w))
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

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }
}

/// The row-stochastic 2x2 transition matrix of the accept/reject chain on
/// `{x_0, x_1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairTransitionMatrix {
    entries: [[f64; 2]; 2],
}

impl PairTransitionMatrix {
    pub fn entries(&self) -> &[[f64; 2]; 2] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row][col]
    }
}

/// Build the pair matrix from the two log forward scores.
///
/// With `r10 = min{1, exp(s1 - s0)}` and `r01 = min{1, exp(s0 - s1)}`:
/// `[[1 - r10, r10], [r01, 1 - r01]]`. A `-inf` score makes the natural
/// limits come out of the same formulas (a zero-probability proposal is
/// never accepted and its row becomes `[1, 0]`).
pub fn pair_transition_matrix(log_score_0: f64, log_score_1: f64) -> Result<PairTransitionMatrix> {
    if log_score_0.is_nan() || log_score_1.is_nan() {
        return Err(Error::NanScore);
    }
    if log_score_0 == f64::NEG_INFINITY && log_score_1 == f64::NEG_INFINITY {
        return Err(Error::DegeneratePair);
    }
    let r10 = accept_ratio(log_score_1 - log_score_0);
    let r01 = accept_ratio(log_score_0 - log_score_1);
    Ok(PairTransitionMatrix {
        entries: [[1.0 - r10, r10], [r01, 1.0 - r01]],
    })
}

fn mat_mul_2x2(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// First row of `P^nu`, computed by repeated squaring and renormalized
/// against accumulated roundoff.
///
/// `nu` beyond [`NU_CAP`] falls back to [`stationary_pair_weights`] when the
/// matrix is irreducible (the power has converged geometrically by then) and
/// to the capped power otherwise.
pub fn nu_power_weights(p: &PairTransitionMatrix, nu: u64) -> Result<WeightVector> {
    if nu < 1 {
        return Err(Error::InvalidNu);
    }
    if nu > NU_CAP {
        if let Ok(w) = stationary_pair_weights(p) {
            return Ok(w);
        }
    }
    let mut result = [[1.0, 0.0], [0.0, 1.0]];
    let mut base = *p.entries();
    let mut e = nu.min(NU_CAP);
    while e > 0 {
        if e & 1 == 1 {
            result = mat_mul_2x2(&result, &base);
        }
        e >>= 1;
        if e > 0 {
            base = mat_mul_2x2(&base, &base);
        }
    }
    let row = result[0];
    let sum = row[0] + row[1];
    WeightVector::new(vec![row[0] / sum, row[1] / sum])
}

/// The stationary distribution of the pair matrix: the `nu -> inf` weights.
///
/// Closed form `w0 = P[1][0] / (P[0][1] + P[1][0])`; requires both
/// off-diagonals positive (irreducibility).
pub fn stationary_pair_weights(p: &PairTransitionMatrix) -> Result<WeightVector> {
    let p01 = p.get(0, 1);
    let p10 = p.get(1, 0);
    if !(p01 > 0.0) || !(p10 > 0.0) {
        return Err(Error::ReduciblePair);
    }
    let denom = p01 + p10;
    WeightVector::new(vec![p10 / denom, p01 / denom])
}

/// Version-1 weights with the current state in slot 0:
/// `w_i = (1/M) min{1, exp(s_i - s_0)}` for `i >= 1`, remainder to slot 0.
pub fn version1_weights(log_scores: &[f64]) -> Result<WeightVector> {
    version1_weights_at(log_scores, 0)
}

/// Version-1 weights referenced at an arbitrary current slot, as needed for
/// trajectory kernels where the current state sits at a random index.
pub fn version1_weights_at(log_scores: &[f64], current_slot: usize) -> Result<WeightVector> {
    let len = log_scores.len();
    if len < 2 || current_slot >= len {
        return Err(Error::InvalidWeights(format!(
            "need M >= 1 and a valid current slot (len {len}, slot {current_slot})"
        )));
    }
    if log_scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NanScore);
    }
    let s_cur = log_scores[current_slot];
    if s_cur == f64::NEG_INFINITY {
        return Err(Error::ZeroCurrentScore);
    }
    let m = (len - 1) as f64;
    let mut w = vec![0.0; len];
    let mut others = 0.0;
    for (i, &s) in log_scores.iter().enumerate() {
        if i == current_slot {
            continue;
        }
        w[i] = accept_ratio(s - s_cur) / m;
        others += w[i];
    }
    // Each term is at most 1/M, so the remainder is non-negative up to
    // roundoff; clamp the last ulp.
    w[current_slot] = (1.0 - others).max(0.0);
    WeightVector::new(w)
}

/// Version-2 weights: the softmax of the log scores, computed with
/// max-subtraction. A `-inf` score maps to weight exactly 0.
pub fn version2_weights(log_scores: &[f64]) -> Result<WeightVector> {
    if log_scores.is_empty() {
        return Err(Error::InvalidWeights("empty".into()));
    }
    if log_scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NanScore);
    }
    let max = log_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::AllScoresNegInf);
    }
    let exps: Vec<f64> = log_scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    WeightVector::new(exps.into_iter().map(|e| e / sum).collect())
}

/// Which weighting scheme to use for the stored (or propagation) weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightScheme {
    /// Finite nu-power weights; `Nu(1)` is the multi-proposal version 1,
    /// `Nu(k)` for `k >= 2` is defined for `M = 1` only.
    Nu(u64),
    /// The `nu -> inf` / version-2 weights (Barker's rule for `M = 1`).
    NuInf,
    /// Weight 1 on the point the propagation rule selected.
    OneHot,
}

impl WeightScheme {
    /// Compute the weights from log scores. `OneHot` is resolved by the
    /// sampler after the propagation rule has run and is rejected here.
    pub fn compute(&self, log_scores: &[f64], current_slot: usize) -> Result<WeightVector> {
        match *self {
            WeightScheme::Nu(1) => version1_weights_at(log_scores, current_slot),
            WeightScheme::Nu(0) => Err(Error::InvalidNu),
            WeightScheme::Nu(nu) => {
                if log_scores.len() != 2 {
                    return Err(Error::Config(
                        "finite nu >= 2 weights are defined for M = 1 only".into(),
                    ));
                }
                let (s_cur, s_other) = (log_scores[current_slot], log_scores[1 - current_slot]);
                let p = pair_transition_matrix(s_cur, s_other)?;
                let w = nu_power_weights(&p, nu)?;
                // nu_power_weights is referenced at the current slot; map back
                // to storage order.
                let mut out = vec![0.0; 2];
                out[current_slot] = w.get(0);
                out[1 - current_slot] = w.get(1);
                WeightVector::new(out)
            }
            WeightScheme::NuInf => version2_weights(log_scores),
            WeightScheme::OneHot => Err(Error::Config(
                "one-hot weights are derived from the selected point, not from scores".into(),
            )),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            WeightScheme::Nu(nu) => nu.to_string(),
            WeightScheme::NuInf => "inf".into(),
            WeightScheme::OneHot => "onehot".into(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "inf" => Ok(WeightScheme::NuInf),
            "onehot" => Ok(WeightScheme::OneHot),
            other => {
                let nu: u64 = other
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid nu value: {other}")))?;
                if nu < 1 {
                    return Err(Error::InvalidNu);
                }
                Ok(WeightScheme::Nu(nu))
            }
        }
    }
}
