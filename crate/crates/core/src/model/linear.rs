//! One-vs-rest L2-regularized logistic regression.
//!
//! For each state `c` with labels `y = +1` (user in `c`) or `-1`:
//!
//! `J_c(w, b) = (1/N) sum_i ln(1 + exp(-y_i (w . x_i + b))) + (l2/2) |w|^2`
//!
//! and the total objective is `sum_c J_c`. Inputs are in-feature token counts
//! scaled to unit L2 norm. Training is epoch-based SGD over a seeded
//! permutation with step `lr / (1 + lr * l2 * t)`; the weight decay is kept
//! as a per-state scale factor so updates touch only non-zero features.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::FeatureIndex;
use crate::corpus::{Corpus, TokenizedUser};
use crate::error::{GeolocError, Result};
use crate::rng::component_rng;
use crate::state::StateLabel;
use crate::weighting::FeatureSet;

pub type SparseVec = Vec<(usize, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearHyper {
    pub l2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Relative objective decrease below which training stops.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for LinearHyper {
    fn default() -> Self {
        LinearHyper {
            l2: 1e-4,
            epochs: 40,
            learning_rate: 1.0,
            tolerance: 1e-4,
            seed: 0,
        }
    }
}

impl LinearHyper {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            problems.push(format!("l2 = {} must be >= 0", self.l2));
        }
        if self.epochs == 0 {
            problems.push("epochs must be >= 1".to_string());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            problems.push(format!("learning_rate = {} must be positive", self.learning_rate));
        }
        if self.learning_rate * self.l2 >= 1.0 {
            problems.push("learning_rate * l2 must be < 1".to_string());
        }
        if !(self.tolerance >= 0.0) {
            problems.push(format!("tolerance = {} must be >= 0", self.tolerance));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(GeolocError::InvalidParameter(problems.join("; ")))
        }
    }
}

/// Unit-norm in-feature count vector of a user; all-zero when the user has
/// no in-feature tokens.
pub fn feature_vector(index: &FeatureIndex, user: &TokenizedUser) -> SparseVec {
    let counts = index.counts(user);
    let norm = counts
        .iter()
        .map(|&(_, c)| f64::from(c) * f64::from(c))
        .sum::<f64>()
        .sqrt();
    counts
        .into_iter()
        .map(|(f, c)| (f, f64::from(c) / norm))
        .collect()
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn dot(w: &[f64], x: &[(usize, f64)]) -> f64 {
    x.iter().map(|&(j, v)| w[j] * v).sum()
}

/// The full-batch training objective over a fixed data set. Parameters are
/// laid out as `[w_0 .. w_{C-1}, b]`, each `w_c` of length `features`.
#[derive(Debug, Clone)]
pub struct LinearObjective {
    pub inputs: Vec<SparseVec>,
    pub labels: Vec<usize>,
    pub features: usize,
    pub classes: usize,
    pub l2: f64,
}

impl LinearObjective {
    pub fn num_params(&self) -> usize {
        self.classes * self.features + self.classes
    }

    fn margin(&self, params: &[f64], c: usize, x: &[(usize, f64)]) -> f64 {
        let w = &params[c * self.features..(c + 1) * self.features];
        dot(w, x) + params[self.classes * self.features + c]
    }

    fn sign(&self, i: usize, c: usize) -> f64 {
        if self.labels[i] == c {
            1.0
        } else {
            -1.0
        }
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        let n = self.inputs.len() as f64;
        let mut total = 0.0;
        for c in 0..self.classes {
            let loss: f64 = self
                .inputs
                .iter()
                .enumerate()
                .map(|(i, x)| softplus(-self.sign(i, c) * self.margin(params, c, x)))
                .sum();
            let w = &params[c * self.features..(c + 1) * self.features];
            total += loss / n + 0.5 * self.l2 * w.iter().map(|v| v * v).sum::<f64>();
        }
        total
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let n = self.inputs.len() as f64;
        let mut grad = vec![0.0; self.num_params()];
        for c in 0..self.classes {
            for (i, x) in self.inputs.iter().enumerate() {
                let y = self.sign(i, c);
                let g = -y * sigmoid(-y * self.margin(params, c, x)) / n;
                for &(j, v) in x {
                    grad[c * self.features + j] += g * v;
                }
                grad[self.classes * self.features + c] += g;
            }
            for j in 0..self.features {
                grad[c * self.features + j] += self.l2 * params[c * self.features + j];
            }
        }
        grad
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    features: FeatureIndex,
    states: Vec<StateLabel>,
    /// State-major: `weights[s * features + f]`.
    weights: Vec<f64>,
    bias: Vec<f64>,
    hyper: LinearHyper,
    converged: bool,
    epochs_run: usize,
    objective: f64,
}

impl LinearModel {
    pub fn states(&self) -> &[StateLabel] {
        &self.states
    }

    pub fn features(&self) -> &FeatureIndex {
        &self.features
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn hyper(&self) -> &LinearHyper {
        &self.hyper
    }

    /// False when the epoch budget ran out before the objective settled.
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn epochs_run(&self) -> usize {
        self.epochs_run
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn weight(&self, state_idx: usize, feature: usize) -> f64 {
        self.weights[state_idx * self.features.len() + feature]
    }

    pub fn scores(&self, user: &TokenizedUser) -> Vec<f64> {
        let x = feature_vector(&self.features, user);
        let f = self.features.len();
        (0..self.states.len())
            .map(|s| dot(&self.weights[s * f..(s + 1) * f], &x) + self.bias[s])
            .collect()
    }
}

pub fn train_linear(train: &Corpus, features: &FeatureSet, hyper: &LinearHyper) -> Result<LinearModel> {
    hyper.validate()?;
    if features.is_empty() {
        return Err(GeolocError::EmptyFeatureSet);
    }
    if train.is_empty() {
        return Err(GeolocError::EmptyCorpus);
    }
    let index = FeatureIndex::from_set(features);
    let states = train.states();
    let objective = LinearObjective {
        inputs: train.users().iter().map(|u| feature_vector(&index, u)).collect(),
        labels: train
            .users()
            .iter()
            .map(|u| states.binary_search(&u.state).unwrap())
            .collect(),
        features: index.len(),
        classes: states.len(),
        l2: hyper.l2,
    };
    let (n_features, n_classes) = (objective.features, objective.classes);

    let mut rng = component_rng(hyper.seed, "linear");
    let mut direction = vec![0.0; n_classes * n_features];
    let mut scale = vec![1.0; n_classes];
    let mut bias = vec![0.0; n_classes];
    let materialize = |direction: &[f64], scale: &[f64], bias: &[f64]| -> Vec<f64> {
        let mut params: Vec<f64> = direction
            .iter()
            .enumerate()
            .map(|(k, v)| v * scale[k / n_features])
            .collect();
        params.extend_from_slice(bias);
        params
    };

    let mut order: Vec<usize> = (0..objective.inputs.len()).collect();
    let mut previous = objective.value(&materialize(&direction, &scale, &bias));
    let mut converged = false;
    let mut epochs_run = 0;
    let mut step = 0u64;
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = hyper.learning_rate / (1.0 + hyper.learning_rate * hyper.l2 * step as f64);
            step += 1;
            let x = &objective.inputs[i];
            for c in 0..n_classes {
                let v = &mut direction[c * n_features..(c + 1) * n_features];
                let y = if objective.labels[i] == c { 1.0 } else { -1.0 };
                let margin = scale[c] * dot(v, x) + bias[c];
                let g = -y * sigmoid(-y * margin);
                scale[c] *= 1.0 - eta * hyper.l2;
                if scale[c] < 1e-9 {
                    v.iter_mut().for_each(|w| *w *= scale[c]);
                    scale[c] = 1.0;
                }
                for &(j, xv) in x {
                    v[j] -= eta * g * xv / scale[c];
                }
                bias[c] -= eta * g;
            }
        }
        epochs_run += 1;
        let current = objective.value(&materialize(&direction, &scale, &bias));
        let decrease = (previous - current) / previous.abs().max(1e-12);
        previous = current;
        if decrease.abs() < hyper.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "linear model did not converge in {} epochs (objective {previous})",
            hyper.epochs
        );
    }
    let params = materialize(&direction, &scale, &bias);
    Ok(LinearModel {
        features: index,
        states,
        weights: params[..n_classes * n_features].to_vec(),
        bias: params[n_classes * n_features..].to_vec(),
        hyper: *hyper,
        converged,
        epochs_run,
        objective: previous,
    })
}
