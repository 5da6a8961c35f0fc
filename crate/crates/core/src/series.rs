use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An observed or simulated series. The first `presample_len` values are
/// pre-sample observations used only for conditioning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealSeries<T> {
    values: Vec<T>,
    presample_len: usize,
}

impl<T: Scalar> RealSeries<T> {
    pub fn new(values: Vec<T>, presample_len: usize) -> Result<Self> {
        let needed = presample_len + 2;
        if values.len() < needed {
            return Err(Error::TooShort {
                needed,
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self {
            values,
            presample_len,
        })
    }

    /// A series without pre-sample values.
    pub fn from_values(values: Vec<T>) -> Result<Self> {
        Self::new(values, 0)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn presample_len(&self) -> usize {
        self.presample_len
    }

    /// Total number of stored values, pre-sample included.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of post-sample observations.
    pub fn n(&self) -> usize {
        self.values.len() - self.presample_len
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}
