//! Dense vectors and symmetric matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Owned vector of finite 64-bit floats, length at least one.
///
/// All public constructors validate finiteness, and the arithmetic helpers
/// preserve it, so downstream code can rely on entries never being NaN or
/// infinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector {
    values: Vec<f64>,
}

impl Vector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::arg("vector must have length >= 1"));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("vector entry {i}")));
            }
        }
        Ok(Vector { values })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Vector::new(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn inf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self + alpha * other`; dimensions must agree.
    pub fn add_scaled(&self, alpha: f64, other: &Vector) -> Result<Vector> {
        if self.len() != other.len() {
            return Err(Error::dim(format!(
                "add_scaled: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Vector::new(
            self.values
                .iter()
                .zip(other.values.iter())
                .map(|(a, b)| a + alpha * b)
                .collect(),
        )
    }

    pub fn scaled(&self, alpha: f64) -> Result<Vector> {
        Vector::new(self.values.iter().map(|v| v * alpha).collect())
    }

    /// Unit-norm copy; errors when the norm is below `floor`.
    pub fn normalized(&self, floor: f64) -> Result<Vector> {
        let n = self.norm();
        if n < floor {
            return Err(Error::DegenerateDirection(format!(
                "norm {n:e} below {floor:e}"
            )));
        }
        self.scaled(1.0 / n)
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        Vector::new(values)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Vec<f64> {
        v.values
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Symmetric matrix in packed lower-triangular storage, so symmetry holds
/// exactly by construction rather than by numerical accident.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    packed: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("matrix order must be >= 1"));
        }
        Ok(SymMatrix {
            n,
            packed: vec![0.0; n * (n + 1) / 2],
        })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        r * (r + 1) / 2 + c
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[self.idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.idx(i, j);
        self.packed[k] = value;
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                sum += v * v;
            }
        }
        sum.sqrt()
    }

    /// Validates that every entry is finite.
    pub fn check_finite(&self) -> Result<()> {
        for i in 0..self.n {
            for j in 0..=i {
                if !self.get(i, j).is_finite() {
                    return Err(Error::NonFinite(format!("matrix entry ({i}, {j})")));
                }
            }
        }
        Ok(())
    }
}
