use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::gbt::{check_len, check_training_pairs, sigmoid};
use super::LabeledPair;
use crate::error::{Error, Result};
use crate::featurizer::FeatureSchema;

/// L2-regularized logistic regression over median-imputed, standardized
/// features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// Replacement for missing values, per feature.
    pub medians: Vec<f64>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Weights on standardized features.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub schema_hash: String,
}

impl LinearModel {
    /// A model with all-zero weights, predicting 0.5 everywhere.
    pub fn zero(schema: &FeatureSchema) -> Self {
        let n = schema.len();
        Self {
            medians: vec![0.0; n],
            means: vec![0.0; n],
            scales: vec![1.0; n],
            weights: vec![0.0; n],
            bias: 0.0,
            schema_hash: schema.hash(),
        }
    }

    fn standardize(&self, x: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let v = if x[j].is_nan() { self.medians[j] } else { x[j] };
            *o = (v - self.means[j]) / self.scales[j];
        }
    }

    pub fn raw_score(&self, x: &[f64]) -> f64 {
        let mut z = vec![0.0; x.len()];
        self.standardize(x, &mut z);
        self.bias + z.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        check_len(x.len(), self.weights.len())?;
        Ok(sigmoid(self.raw_score(x)))
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Minimizes mean log-loss plus `regularization / 2 * |w|^2` (bias
/// unpenalized) by damped Newton steps.
pub fn train_linear(
    pairs: &[LabeledPair],
    schema: &FeatureSchema,
    regularization: f64,
) -> Result<LinearModel> {
    if !(regularization > 0.0 && regularization.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "regularization must be positive, got {regularization}"
        )));
    }
    check_training_pairs(pairs, schema)?;
    let p = schema.len();
    let n = pairs.len();

    let mut model = LinearModel::zero(schema);
    for j in 0..p {
        let present: Vec<f64> = pairs
            .iter()
            .map(|r| r.features.values()[j])
            .filter(|v| !v.is_nan())
            .collect();
        model.medians[j] = median(present);
    }
    let imputed = |r: &LabeledPair, j: usize| {
        let v = r.features.values()[j];
        if v.is_nan() {
            model.medians[j]
        } else {
            v
        }
    };
    for j in 0..p {
        let mean = pairs.iter().map(|r| imputed(r, j)).sum::<f64>() / n as f64;
        let var = pairs
            .iter()
            .map(|r| (imputed(r, j) - mean).powi(2))
            .sum::<f64>()
            / n as f64;
        model.means[j] = mean;
        model.scales[j] = if var > 1e-24 { var.sqrt() } else { 1.0 };
    }

    // design matrix with a trailing intercept column
    let mut x = DMatrix::<f64>::zeros(n, p + 1);
    let mut row = vec![0.0; p];
    for (i, pair) in pairs.iter().enumerate() {
        model.standardize(pair.features.values(), &mut row);
        for j in 0..p {
            x[(i, j)] = row[j];
        }
        x[(i, p)] = 1.0;
    }
    let y = DVector::from_iterator(n, pairs.iter().map(|r| f64::from(u8::from(r.label))));
    let mut penalty = DVector::from_element(p + 1, regularization);
    penalty[p] = 0.0;

    let objective = |w: &DVector<f64>| {
        let z = &x * w;
        let loss: f64 = z
            .iter()
            .zip(y.iter())
            .map(|(&z, &y)| {
                // log(1 + e^z) - y z, computed stably
                z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
            })
            .sum::<f64>()
            / n as f64;
        loss + 0.5 * w.component_mul(&penalty).dot(w)
    };

    let mut w = DVector::<f64>::zeros(p + 1);
    let mut current = objective(&w);
    for _ in 0..100 {
        let z = &x * &w;
        let probs = z.map(sigmoid);
        let grad = x.transpose() * (&probs - &y) / n as f64 + penalty.component_mul(&w);
        let mut weighted = x.clone();
        for (i, mut r) in weighted.row_iter_mut().enumerate() {
            r *= (probs[i] * (1.0 - probs[i])).max(1e-12) / n as f64;
        }
        let mut hess = x.transpose() * weighted;
        for j in 0..=p {
            hess[(j, j)] += penalty[j].max(1e-10);
        }
        let step = hess
            .cholesky()
            .ok_or_else(|| Error::InvalidConfig("singular Newton system".into()))?
            .solve(&grad);

        let mut t = 1.0;
        let mut next = &w - &step * t;
        let mut value = objective(&next);
        while value > current && t > 1e-8 {
            t *= 0.5;
            next = &w - &step * t;
            value = objective(&next);
        }
        let moved = (&next - &w).amax();
        w = next;
        current = value;
        if moved < 1e-10 {
            break;
        }
    }

    model.weights = w.iter().take(p).copied().collect();
    model.bias = w[p];
    Ok(model)
}
