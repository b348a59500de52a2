use serde::{Deserialize, Serialize};

use super::SvmError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<(), SvmError> {
        match *self {
            KernelSpec::Rbf { gamma } if !(gamma.is_finite() && gamma > 0.0) => {
                Err(SvmError::BadParameter(format!("gamma must be finite and positive, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => x.iter().zip(z).map(|(a, b)| a * b).sum(),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

/// `exp(-gamma * ||x - z||^2)` for RBF, `x . z` for linear.
pub fn kernel_eval(x: &[f64], z: &[f64], spec: &KernelSpec) -> Result<f64, SvmError> {
    if x.len() != z.len() {
        return Err(SvmError::DimensionMismatch { expected: x.len(), actual: z.len() });
    }
    spec.validate()?;
    Ok(spec.eval_unchecked(x, z))
}
