//! Observed data and prior specification.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::VbError;

/// Per-column affine transform fitted during standardization:
/// `x' = (x − mean) · scale`, with `scale` chosen so the standardized
/// column has standard deviation 0.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    /// Whether column 0 is an all-ones intercept left untouched.
    pub intercept: bool,
    /// `(mean, scale)` per non-intercept column, in column order.
    pub transforms: Vec<(f64, f64)>,
}

impl Standardization {
    /// Apply the stored transform to a raw predictor row (without the
    /// intercept entry). Lengths must match the stored transforms.
    pub fn apply_row(&self, raw: &[f64]) -> Result<Vec<f64>, VbError> {
        if raw.len() != self.transforms.len() {
            return Err(VbError::dims(format!(
                "row has {} predictors, transform expects {}",
                raw.len(),
                self.transforms.len()
            )));
        }
        Ok(raw
            .iter()
            .zip(&self.transforms)
            .map(|(&x, &(m, s))| (x - m) * s)
            .collect())
    }
}

/// Binary responses with their dense design matrix.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: Vec<u8>,
    signs: DVector<f64>,
    pub standardization: Option<Standardization>,
}

impl Dataset {
    /// Build and validate a dataset. Fails on shape mismatch, labels outside
    /// `{0,1}` or non-finite design entries.
    pub fn new(x: DMatrix<f64>, y: Vec<u8>) -> Result<Self, VbError> {
        if x.nrows() != y.len() {
            return Err(VbError::dims(format!(
                "design has {} rows but {} responses",
                x.nrows(),
                y.len()
            )));
        }
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(VbError::InvalidInput("empty design matrix".into()));
        }
        if let Some(bad) = y.iter().find(|&&v| v > 1) {
            return Err(VbError::InvalidInput(format!(
                "responses must be 0 or 1, got {bad}"
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(VbError::InvalidInput(
                "design matrix contains non-finite entries".into(),
            ));
        }
        let signs = DVector::from_iterator(y.len(), y.iter().map(|&v| 2.0 * v as f64 - 1.0));
        Ok(Dataset {
            x,
            y,
            signs,
            standardization: None,
        })
    }

    pub fn with_standardization(mut self, s: Standardization) -> Self {
        self.standardization = Some(s);
        self
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    /// The signs `2y_i − 1` as a vector.
    pub fn signs(&self) -> &DVector<f64> {
        &self.signs
    }

    /// Verify the standardization metadata against the stored design:
    /// non-intercept columns must have mean within `1e-10` of 0 and standard
    /// deviation within `1e-10` of 0.5.
    pub fn check_standardized(&self) -> Result<(), VbError> {
        let Some(std) = &self.standardization else {
            return Ok(());
        };
        let start = usize::from(std.intercept);
        let n = self.n() as f64;
        for j in start..self.p() {
            let col = self.x.column(j);
            let mean = col.sum() / n;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            if mean.abs() > 1e-10 {
                return Err(VbError::InvalidInput(format!(
                    "standardized column {j} has mean {mean:e}"
                )));
            }
            if (sd - 0.5).abs() > 1e-10 {
                return Err(VbError::InvalidInput(format!(
                    "standardized column {j} has sd {sd}"
                )));
            }
        }
        Ok(())
    }
}

/// Whether the prior variance is held constant in `p` or scaled as `ν²/p`
/// to control the variance of the whole linear predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PriorScaling {
    Constant,
    InverseP,
}

/// Gaussian prior `β ~ N_p(0, ν_p² I_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    /// Base variance ν².
    pub base_variance: f64,
    pub scaling: PriorScaling,
}

impl PriorSpec {
    pub fn new(base_variance: f64, scaling: PriorScaling) -> Result<Self, VbError> {
        if !(base_variance > 0.0 && base_variance.is_finite()) {
            return Err(VbError::InvalidInput(format!(
                "prior variance must be positive and finite, got {base_variance}"
            )));
        }
        Ok(PriorSpec {
            base_variance,
            scaling,
        })
    }

    /// The resolved ν_p² for a model with `p` coefficients.
    pub fn variance(&self, p: usize) -> f64 {
        match self.scaling {
            PriorScaling::Constant => self.base_variance,
            PriorScaling::InverseP => self.base_variance / p as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        assert!(Dataset::new(DMatrix::zeros(3, 2), vec![0, 1]).is_err());
        assert!(Dataset::new(DMatrix::zeros(2, 2), vec![0, 2]).is_err());
        let mut x = DMatrix::zeros(2, 2);
        x[(0, 0)] = f64::NAN;
        assert!(Dataset::new(x, vec![0, 1]).is_err());
    }

    #[test]
    fn prior_scaling_is_deterministic() {
        let c = PriorSpec::new(25.0, PriorScaling::Constant).unwrap();
        let s = PriorSpec::new(25.0, PriorScaling::InverseP).unwrap();
        assert_eq!(c.variance(100), 25.0);
        assert_eq!(s.variance(100), 0.25);
        assert_eq!(s.variance(100), s.variance(100));
    }

    #[test]
    fn signs_follow_labels() {
        let d = Dataset::new(DMatrix::zeros(3, 1), vec![0, 1, 1]).unwrap();
        assert_eq!(d.signs().as_slice(), &[-1.0, 1.0, 1.0]);
    }
}
