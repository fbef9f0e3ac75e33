//! Column standardization (zero mean, unit variance).

use crate::error::{Error, Result};

/// Per-column mean and population standard deviation. Columns whose
/// standard deviation is zero store 1 instead, so applying the scaler maps
/// a constant column to all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ScalerParams {
    /// Identity scaler (mean 0, std 1) for models trained on raw inputs.
    pub fn identity(n_features: usize) -> Self {
        ScalerParams {
            mean: vec![0.0; n_features],
            std: vec![1.0; n_features],
        }
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    /// Standardizes a single row in place.
    pub fn transform_row(&self, row: &mut [f64]) -> Result<()> {
        if row.len() != self.mean.len() {
            return Err(Error::Dimension {
                expected: self.mean.len(),
                got: row.len(),
            });
        }
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - self.mean[j]) / self.std[j];
        }
        Ok(())
    }
}

/// Fits mean and population standard deviation per column of a row-major
/// matrix. Fit on the training partition only.
pub fn fit_scaler(matrix: &[f64], n_features: usize) -> Result<ScalerParams> {
    if n_features == 0 || matrix.is_empty() || !matrix.len().is_multiple_of(n_features) {
        return Err(Error::Argument(format!(
            "matrix of {} cells is not divisible into rows of {n_features}",
            matrix.len()
        )));
    }
    let n = matrix.len() / n_features;
    let first = &matrix[..n_features];
    let mut constant = vec![true; n_features];
    let mut mean = vec![0f64; n_features];
    for row in matrix.chunks_exact(n_features) {
        for (j, &v) in row.iter().enumerate() {
            mean[j] += v;
            constant[j] &= v == first[j];
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    // An exactly-constant column gets mean = the value itself and std = 1,
    // so it transforms to all zeros; summation residue must not leave it
    // with a denormal-scale std.
    for j in 0..n_features {
        if constant[j] {
            mean[j] = first[j];
        }
    }
    let mut var = vec![0f64; n_features];
    for row in matrix.chunks_exact(n_features) {
        for (j, &v) in row.iter().enumerate() {
            let d = v - mean[j];
            var[j] += d * d;
        }
    }
    let std: Vec<f64> = var
        .iter()
        .zip(&constant)
        .map(|(&v, &is_const)| {
            let s = (v / n as f64).sqrt();
            if is_const || s == 0.0 {
                1.0
            } else {
                s
            }
        })
        .collect();
    Ok(ScalerParams { mean, std })
}

/// Standardizes a row-major matrix, returning the transformed copy.
pub fn apply_scaler(params: &ScalerParams, matrix: &[f64], n_features: usize) -> Result<Vec<f64>> {
    if n_features != params.n_features() {
        return Err(Error::Dimension {
            expected: params.n_features(),
            got: n_features,
        });
    }
    if !matrix.len().is_multiple_of(n_features) {
        return Err(Error::Argument(format!(
            "matrix of {} cells is not divisible into rows of {n_features}",
            matrix.len()
        )));
    }
    let mut out = matrix.to_vec();
    for row in out.chunks_exact_mut(n_features) {
        params.transform_row(row)?;
    }
    Ok(out)
}
