use alloc::vec::Vec;
use core::ops::Index;

use crate::error::{invalid, Error, Result};

/// Finite real vector of dimension `d ≥ 1`, optionally tagged with an image shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
    shape: Option<(usize, usize)>,
}

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(invalid("dim", "vector must have at least one entry"));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { data, shape: None })
    }

    pub fn image(data: Vec<f64>, height: usize, width: usize) -> Result<Self> {
        if height * width != data.len() {
            return Err(Error::DimensionMismatch {
                expected: height * width,
                found: data.len(),
            });
        }
        let mut v = Self::new(data)?;
        v.shape = Some((height, width));
        Ok(v)
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_raw(alloc::vec![0.0; dim.max(1)])
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        Self::new(alloc::vec![value; dim])
    }

    /// Wraps data produced by internal arithmetic. Finiteness is re-checked by
    /// the solver loop, which is where non-finite states are diagnosed.
    pub(crate) fn from_raw(data: Vec<f64>) -> Self {
        Self { data, shape: None }
    }

    pub(crate) fn with_shape_of(mut self, other: &Vector) -> Self {
        if other.shape.is_some() && other.dim() == self.dim() {
            self.shape = other.shape;
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn shape(&self) -> Option<(usize, usize)> {
        self.shape
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn iter(&self) -> core::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.data)
    }

    pub fn dist_sq(&self, other: &Vector) -> f64 {
        dist_sq(&self.data, &other.data)
    }

    pub fn ensure_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            });
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.dim() as f64
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl AsRef<[f64]> for Vector {
    fn as_ref(&self) -> &[f64] {
        &self.data
    }
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert_eq!(
            Vector::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        );
        assert!(Vector::new(vec![]).is_err());
    }

    #[test]
    fn image_shape_must_match() {
        assert!(Vector::image(vec![0.0; 6], 2, 3).is_ok());
        assert!(matches!(
            Vector::image(vec![0.0; 6], 2, 2),
            Err(Error::DimensionMismatch {
                expected: 4,
                found: 6
            })
        ));
    }
}
