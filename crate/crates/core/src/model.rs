//! Binary logistic regression over presence features, fitted by full-batch
//! gradient descent with an L2 penalty on the weights.
//!
//! Labels follow the corpus convention 1 = female, 0 = male, so a positive
//! weight marks a female-predictive word.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::Gender;
use crate::error::{Error, Result};
use crate::textproc::{FeatureVector, Vocabulary};

const MODEL_MAGIC: &str = "# biasaudit-model v1";
/// Smallest step tried by the halving line search before giving up.
const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub max_iters: usize,
    /// Stop once the absolute change in loss falls below this.
    pub tolerance: f64,
    /// Halve the step until the loss does not increase.
    pub step_halving: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            learning_rate: 0.5,
            l2_lambda: 1e-4,
            max_iters: 2000,
            tolerance: 1e-8,
            step_halving: true,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate.is_finite()
            && self.learning_rate > 0.0
            && self.l2_lambda.is_finite()
            && self.l2_lambda >= 0.0
            && self.max_iters > 0
            && self.tolerance.is_finite()
            && self.tolerance > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid hyperparameters {self:?}")))
        }
    }
}

/// Logistic function, evaluated without overflow for large |z|.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z)
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn margin(weights: &[f64], intercept: f64, x: &FeatureVector) -> f64 {
    intercept + x.active().iter().map(|&i| weights[i as usize]).sum::<f64>()
}

fn objective(z: &[f64], y: &[u8], weights: &[f64], lambda: f64) -> f64 {
    let data: f64 = z
        .iter()
        .zip(y)
        .map(|(&z, &y)| softplus(z) - f64::from(y) * z)
        .sum::<f64>()
        / z.len() as f64;
    data + 0.5 * lambda * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Gradient of the objective at margins `z`: `(d/dw, d/db)`.
fn gradient(
    x: &[FeatureVector],
    z: &[f64],
    y: &[u8],
    weights: &[f64],
    lambda: f64,
) -> (Vec<f64>, f64) {
    let n = z.len() as f64;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for ((xi, &zi), &yi) in x.iter().zip(z).zip(y) {
        let r = sigmoid(zi) - f64::from(yi);
        gb += r;
        for &j in xi.active() {
            gw[j as usize] += r;
        }
    }
    for (g, w) in gw.iter_mut().zip(weights) {
        *g = *g / n + lambda * w;
    }
    (gw, gb / n)
}

/// Mean cross-entropy plus `lambda/2 * |w|^2` and its gradient, the
/// intercept unpenalized. Returns `(loss, d/dw, d/db)`.
pub fn loss_and_gradient(
    x: &[FeatureVector],
    y: &[u8],
    weights: &[f64],
    intercept: f64,
    lambda: f64,
) -> (f64, Vec<f64>, f64) {
    let z: Vec<f64> = x.iter().map(|xi| margin(weights, intercept, xi)).collect();
    let loss = objective(&z, y, weights, lambda);
    let (gw, gb) = gradient(x, &z, y, weights, lambda);
    (loss, gw, gb)
}

/// Fitted weights, one per vocabulary word, plus intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Fingerprint of the vocabulary the weights are aligned to.
    pub vocabulary_fingerprint: Option<String>,
    pub hyperparams: HyperParams,
}

/// Result of [`train`]: the model and the loss after every accepted step.
#[derive(Debug, Clone)]
pub struct Training {
    pub model: TrainedModel,
    pub losses: Vec<f64>,
    pub converged: bool,
}

fn check_inputs(x: &[FeatureVector], y: &[u8]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let positives = y.iter().filter(|&&v| v == 1).count();
    if y.len() < 2 || positives == 0 || positives == y.len() {
        return Err(Error::SingleClass);
    }
    if let Some(bad) = y.iter().find(|&&v| v > 1) {
        return Err(Error::Config(format!("label {bad} is not 0 or 1")));
    }
    let dim = x[0].len();
    if let Some(xi) = x.iter().find(|xi| xi.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: xi.len(),
        });
    }
    Ok(dim)
}

/// Fits the model from zero weights.
///
/// Examples are put into a canonical order first, so any permutation of the
/// training set produces bitwise-identical weights.
pub fn train(x: &[FeatureVector], y: &[u8], params: &HyperParams) -> Result<Training> {
    params.validate()?;
    let dim = check_inputs(x, y)?;

    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].cmp(&x[b]).then(y[a].cmp(&y[b])));
    let x: Vec<FeatureVector> = order.iter().map(|&i| x[i].clone()).collect();
    let y: Vec<u8> = order.iter().map(|&i| y[i]).collect();

    let lambda = params.l2_lambda;
    let mut weights = vec![0.0; dim];
    let mut intercept = 0.0;
    let mut z = vec![0.0; x.len()];
    let mut loss = objective(&z, &y, &weights, lambda);
    let mut losses = vec![loss];
    let mut step = params.learning_rate;
    let mut converged = false;

    for iteration in 1..=params.max_iters {
        let (gw, gb) = gradient(&x, &z, &y, &weights, lambda);
        let accepted = loop {
            let cand_w: Vec<f64> = weights.iter().zip(&gw).map(|(w, g)| w - step * g).collect();
            let cand_b = intercept - step * gb;
            let cand_z: Vec<f64> = x.iter().map(|xi| margin(&cand_w, cand_b, xi)).collect();
            let cand_loss = objective(&cand_z, &y, &cand_w, lambda);
            if !params.step_halving {
                if !cand_loss.is_finite() {
                    return Err(Error::NonFiniteLoss { iteration });
                }
                break Some((cand_w, cand_b, cand_z, cand_loss));
            }
            if cand_loss.is_finite() && cand_loss <= loss {
                break Some((cand_w, cand_b, cand_z, cand_loss));
            }
            step /= 2.0;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some((w, b, zz, new_loss)) = accepted else {
            // no descent direction left at this precision
            converged = true;
            break;
        };
        let change = (loss - new_loss).abs();
        weights = w;
        intercept = b;
        z = zz;
        loss = new_loss;
        losses.push(loss);
        if change < params.tolerance {
            converged = true;
            break;
        }
    }

    if !loss.is_finite() || weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFiniteLoss {
            iteration: losses.len(),
        });
    }
    Ok(Training {
        model: TrainedModel {
            weights,
            intercept,
            vocabulary_fingerprint: None,
            hyperparams: *params,
        },
        losses,
        converged,
    })
}

impl TrainedModel {
    /// Records which vocabulary the weights belong to.
    pub fn bind(mut self, vocabulary: &Vocabulary) -> Result<Self> {
        if vocabulary.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: vocabulary.len(),
            });
        }
        self.vocabulary_fingerprint = Some(vocabulary.fingerprint());
        Ok(self)
    }

    fn check(&self, x: &FeatureVector) -> Result<()> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> Result<f64> {
        self.check(x)?;
        Ok(sigmoid(margin(&self.weights, self.intercept, x)))
    }

    /// 1 (female) iff the probability is at least 0.5.
    pub fn predict(&self, x: &FeatureVector) -> Result<u8> {
        Ok(u8::from(self.predict_proba(x)? >= 0.5))
    }

    pub fn accuracy(&self, x: &[FeatureVector], y: &[u8]) -> Result<f64> {
        if x.is_empty() {
            return Err(Error::EmptyTestSet);
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        let mut correct = 0usize;
        for (xi, &yi) in x.iter().zip(y) {
            correct += usize::from(self.predict(xi)? == yi);
        }
        Ok(correct as f64 / x.len() as f64)
    }

    /// Strongest words for one gender: the largest positive weights for
    /// female, the most negative for male. Ties are broken lexicographically.
    pub fn top_coefficients(
        &self,
        vocabulary: &Vocabulary,
        n: usize,
        direction: Gender,
    ) -> Vec<(String, f64)> {
        if n > vocabulary.len() {
            log::warn!(
                "requested {n} coefficients from a vocabulary of {}, truncating",
                vocabulary.len()
            );
        }
        let sign = match direction {
            Gender::Female => 1.0,
            Gender::Male => -1.0,
        };
        let mut picked: Vec<(String, f64)> = vocabulary
            .words()
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w * sign > 0.0)
            .map(|(word, &w)| (word.clone(), w))
            .collect();
        picked.sort_by(|a, b| {
            (b.1 * sign)
                .partial_cmp(&(a.1 * sign))
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        picked.truncate(n);
        picked
    }

    /// Text form: header, fingerprint, hyperparameters, intercept and one
    /// `word<TAB>weight` line per vocabulary word. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn to_text(&self, vocabulary: &Vocabulary) -> Result<String> {
        if vocabulary.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: vocabulary.len(),
            });
        }
        let fingerprint = vocabulary.fingerprint();
        if let Some(own) = &self.vocabulary_fingerprint {
            if *own != fingerprint {
                return Err(Error::FingerprintMismatch {
                    expected: own.clone(),
                    found: fingerprint,
                });
            }
        }
        let p = &self.hyperparams;
        let mut out = format!(
            "{MODEL_MAGIC}\nfingerprint {fingerprint}\nlearning_rate {:?}\nl2_lambda {:?}\nmax_iters {}\ntolerance {:?}\nstep_halving {}\nintercept {:?}\nweights {}\n",
            p.learning_rate, p.l2_lambda, p.max_iters, p.tolerance, p.step_halving, self.intercept, self.weights.len()
        );
        for (word, w) in vocabulary.words().iter().zip(&self.weights) {
            out.push_str(&format!("{word}\t{w:?}\n"));
        }
        Ok(out)
    }

    /// Parses [`Self::to_text`] output and checks it against `vocabulary`.
    pub fn parse(text: &str, vocabulary: &Vocabulary) -> Result<TrainedModel> {
        let bad = |line: usize, message: String| Error::Malformed {
            path: "model".into(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, MODEL_MAGIC)) => {}
            _ => return Err(bad(1, "missing model header".into())),
        }
        let mut field = |name: &str| -> Result<String> {
            let (n, line) = lines
                .next()
                .ok_or_else(|| bad(0, format!("missing `{name}`")))?;
            line.strip_prefix(name)
                .and_then(|r| r.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| bad(n, format!("expected `{name}`")))
        };
        let num = |s: String| -> Result<f64> {
            s.parse::<f64>().map_err(|e| bad(0, format!("{s}: {e}")))
        };
        let fingerprint = field("fingerprint")?;
        let learning_rate = num(field("learning_rate")?)?;
        let l2_lambda = num(field("l2_lambda")?)?;
        let max_iters = field("max_iters")?
            .parse()
            .map_err(|_| bad(0, "max_iters".into()))?;
        let tolerance = num(field("tolerance")?)?;
        let step_halving = field("step_halving")? == "true";
        let intercept = num(field("intercept")?)?;
        let count: usize = field("weights")?
            .parse()
            .map_err(|_| bad(0, "weights".into()))?;

        let expected = vocabulary.fingerprint();
        if fingerprint != expected {
            return Err(Error::FingerprintMismatch {
                expected,
                found: fingerprint,
            });
        }
        let mut weights = Vec::with_capacity(count);
        for (n, line) in lines.filter(|(_, l)| !l.is_empty()) {
            let (word, w) = line
                .split_once('\t')
                .ok_or_else(|| bad(n, "expected word<TAB>weight".into()))?;
            if vocabulary.words().get(weights.len()).map(String::as_str) != Some(word) {
                return Err(bad(n, format!("word `{word}` out of vocabulary order")));
            }
            weights.push(w.parse::<f64>().map_err(|e| bad(n, e.to_string()))?);
        }
        if weights.len() != count || count != vocabulary.len() {
            return Err(Error::DimensionMismatch {
                expected: vocabulary.len(),
                found: weights.len(),
            });
        }
        Ok(TrainedModel {
            weights,
            intercept,
            vocabulary_fingerprint: Some(fingerprint),
            hyperparams: HyperParams {
                learning_rate,
                l2_lambda,
                max_iters,
                tolerance,
                step_halving,
            },
        })
    }
}
