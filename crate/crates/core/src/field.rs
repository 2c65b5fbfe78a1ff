//! Real-valued functions on the vertex set.

use std::ops::{Index, IndexMut};

/// A function `u: V -> R`, stored densely in the graph's vertex order.
///
/// Positive and negative parts are always derived on demand, so
/// `u == u.positive_part() + u.negative_part()` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexField(Vec<f64>);

impl VertexField {
    pub fn new(values: Vec<f64>) -> Self {
        VertexField(values)
    }

    pub fn zeros(n: usize) -> Self {
        VertexField(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        VertexField(vec![c; n])
    }

    /// Indicator of a single vertex.
    pub fn delta(n: usize, at: usize) -> Self {
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        VertexField(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    /// `u⁺ = max{u, 0}`
    pub fn positive_part(&self) -> Self {
        VertexField(self.0.iter().map(|&v| v.max(0.0)).collect())
    }

    /// `u⁻ = min{u, 0}`
    pub fn negative_part(&self) -> Self {
        VertexField(self.0.iter().map(|&v| v.min(0.0)).collect())
    }

    pub fn has_positive(&self) -> bool {
        self.0.iter().any(|&v| v > 0.0)
    }

    pub fn has_negative(&self) -> bool {
        self.0.iter().any(|&v| v < 0.0)
    }

    pub fn changes_sign(&self) -> bool {
        self.has_positive() && self.has_negative()
    }

    pub fn scaled(&self, c: f64) -> Self {
        VertexField(self.0.iter().map(|v| c * v).collect())
    }

    /// `s u⁺ + t u⁻`
    pub fn recombine(&self, s: f64, t: f64) -> Self {
        VertexField(
            self.0
                .iter()
                .map(|&v| if v > 0.0 { s * v } else { t * v })
                .collect(),
        )
    }

    /// `alpha * self + beta * other`
    pub fn axpby(&self, alpha: f64, other: &VertexField, beta: f64) -> Self {
        debug_assert_eq!(self.len(), other.len());
        VertexField(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        )
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Flip the sign so that the first nonzero entry is positive.
    pub fn sign_normalized(&self) -> Self {
        match self.0.iter().find(|&&v| v != 0.0) {
            Some(&v) if v < 0.0 => self.scaled(-1.0),
            _ => self.clone(),
        }
    }
}

impl From<Vec<f64>> for VertexField {
    fn from(v: Vec<f64>) -> Self {
        VertexField(v)
    }
}

impl Index<usize> for VertexField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for VertexField {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}
