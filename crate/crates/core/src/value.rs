//! Linear value function `V(s) = w . f(s)` and its TD(0) update.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::features::{FeatureConfig, FeatureKind, FeatureSet, FeatureVector, UnknownFeature, MAX_FEATURES};

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("feature sets differ: weights have [{weights}], expected [{expected}]")]
    FeatureMismatch {
        weights: FeatureSet,
        expected: FeatureSet,
    },
    #[error("weights file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    UnknownFeature(#[from] UnknownFeature),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parameters of the linear value function, one per enabled feature, plus
/// the discount factor they were trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    set: FeatureSet,
    values: [f64; MAX_FEATURES],
    pub gamma: f64,
    pub iterations: usize,
}

impl Weights {
    pub fn zeros(set: FeatureSet, gamma: f64) -> Weights {
        Weights {
            set,
            values: [0.0; MAX_FEATURES],
            gamma,
            iterations: 0,
        }
    }

    pub fn from_values(set: FeatureSet, gamma: f64, values: &[f64]) -> Weights {
        assert_eq!(values.len(), set.len());
        let mut w = Weights::zeros(set, gamma);
        w.values[..values.len()].copy_from_slice(values);
        w
    }

    pub fn features(&self) -> FeatureSet {
        self.set
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            set: self.set,
            gamma: self.gamma,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values[..self.set.len()]
    }

    pub fn get(&self, kind: FeatureKind) -> Option<f64> {
        self.set.index_of(kind).map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (FeatureKind, f64)> + '_ {
        self.set.iter().zip(self.values().iter().copied())
    }

    pub fn ensure_features(&self, expected: FeatureSet) -> Result<(), WeightsError> {
        if self.set == expected {
            Ok(())
        } else {
            Err(WeightsError::FeatureMismatch {
                weights: self.set,
                expected,
            })
        }
    }

    /// `w . f`. Fails when the vector covers a different feature set.
    pub fn evaluate(&self, fv: &FeatureVector) -> Result<f64, WeightsError> {
        self.ensure_features(fv.set())?;
        Ok(self.dot(fv))
    }

    /// `w . f` without the set check; callers guarantee matching sets.
    #[inline]
    pub(crate) fn dot(&self, fv: &FeatureVector) -> f64 {
        debug_assert_eq!(self.set, fv.set());
        self.values()
            .iter()
            .zip(fv.values())
            .map(|(w, f)| w * f)
            .sum()
    }

    /// TD(0) step toward `target`: `w += alpha * (target - w.f) * f`.
    /// The caller supplies `target = r + gamma * V(s')`, with `V = 0` past a
    /// terminal transition.
    pub fn td_update(&mut self, fv: &FeatureVector, target: f64, alpha: f64) -> Result<(), WeightsError> {
        self.ensure_features(fv.set())?;
        let error = target - self.dot(fv);
        let n = self.set.len();
        for (w, f) in self.values[..n].iter_mut().zip(fv.values()) {
            *w += alpha * error * f;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|w| w.is_finite())
    }

    /// Text form: `gamma`, `iterations` and `features` header lines, then one
    /// `name<TAB>value` line per feature. Floats print in shortest
    /// round-trip form.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "gamma {}\niterations {}\nfeatures {}\n",
            self.gamma, self.iterations, self.set
        );
        for (kind, w) in self.iter() {
            out.push_str(&format!("{}\t{}\n", kind.name(), w));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Weights, WeightsError> {
        let mut gamma = None;
        let mut iterations = None;
        let mut set = None;
        let mut values: Vec<(FeatureKind, f64)> = Vec::new();
        let bad = |line: usize, message: &str| WeightsError::Format {
            line,
            message: message.to_string(),
        };
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some((name, value)) = line.split_once('\t') {
                let kind: FeatureKind = name.parse()?;
                let value: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| bad(n, "weight is not a number"))?;
                values.push((kind, value));
                continue;
            }
            let (key, rest) = line.split_once(' ').ok_or_else(|| bad(n, "expected `key value`"))?;
            match key {
                "gamma" => gamma = Some(rest.trim().parse::<f64>().map_err(|_| bad(n, "bad gamma"))?),
                "iterations" => {
                    iterations = Some(rest.trim().parse::<usize>().map_err(|_| bad(n, "bad iterations"))?)
                }
                "features" => set = Some(rest.parse::<FeatureSet>()?),
                _ => return Err(bad(n, "unknown header")),
            }
        }
        let set = set.ok_or_else(|| bad(0, "missing `features` header"))?;
        let gamma = gamma.ok_or_else(|| bad(0, "missing `gamma` header"))?;
        let mut w = Weights::zeros(set, gamma);
        w.iterations = iterations.unwrap_or(0);
        let listed: FeatureSet = values.iter().map(|(k, _)| *k).collect();
        if listed != set || values.len() != set.len() {
            return Err(bad(0, "weight lines do not match the `features` header"));
        }
        for (kind, value) in values {
            let i = set.index_of(kind).expect("checked above");
            w.values[i] = value;
        }
        Ok(w)
    }
}

pub fn save_weights(weights: &Weights, path: &Path) -> Result<(), WeightsError> {
    fs::write(path, weights.to_text())?;
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<Weights, WeightsError> {
    Weights::from_text(&fs::read_to_string(path)?)
}

/// Loads weights and checks them against the feature set a run expects.
pub fn load_weights_for(path: &Path, expected: FeatureSet) -> Result<Weights, WeightsError> {
    let w = load_weights(path)?;
    w.ensure_features(expected)?;
    Ok(w)
}
