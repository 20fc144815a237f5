//! Dense row-major tensors in double precision.

use crate::error::{Error, Result};

/// A dense tensor: a shape and row-major values. All training math runs on
/// these; shapes are validated at construction and values are kept finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::InvalidConfig(format!(
                "tensor dimensions must be positive, got {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(Error::ShapeMismatch {
                context: "Tensor::new".into(),
                expected: shape.clone(),
                got: vec![values.len()],
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("Tensor::new".into()));
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            values: vec![0.0; len],
        }
    }

    pub fn zeros_like(other: &Tensor) -> Self {
        Self::zeros(other.shape.to_vec())
    }

    /// 2-d tensor from equally sized rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("Tensor::from_rows".into()));
        }
        let cols = rows[0].len();
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::ShapeMismatch {
                    context: "Tensor::from_rows".into(),
                    expected: vec![cols],
                    got: vec![r.len()],
                });
            }
            values.extend_from_slice(r);
        }
        Tensor::new(vec![rows.len(), cols], values)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of rows when interpreted as a matrix (leading dimension).
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Row width when interpreted as a matrix (trailing dimensions collapsed).
    pub fn cols(&self) -> usize {
        self.values.len() / self.shape[0]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.cols();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.cols();
        &mut self.values[i * w..(i + 1) * w]
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.shape == other.shape
    }

    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(context.into()))
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-wise L2 normalization. Errors on an all-zero row.
pub fn l2_normalize(v: &Tensor) -> Result<Tensor> {
    let mut out = v.clone();
    l2_normalize_in_place(&mut out)?;
    Ok(out)
}

pub(crate) fn l2_normalize_in_place(v: &mut Tensor) -> Result<()> {
    for i in 0..v.rows() {
        let row = v.row_mut(i);
        let norm = dot(row, row).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroRow(i));
        }
        for x in row.iter_mut() {
            *x /= norm;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn new_rejects_length_mismatch() {
        assert!(Tensor::new(vec![2, 2], vec![1.0; 3]).is_err());
    }

    #[test]
    fn new_rejects_non_finite() {
        assert!(Tensor::new(vec![2], vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn normalize_three_four_five() {
        let t = Tensor::new(vec![1, 2], vec![3.0, 4.0]).unwrap();
        let n = l2_normalize(&t).unwrap();
        assert_relative_eq!(n.values()[0], 0.6, max_relative = 1e-15);
        assert_relative_eq!(n.values()[1], 0.8, max_relative = 1e-15);
    }

    #[test]
    fn normalize_unit_vector_is_identity() {
        let t = Tensor::new(vec![1, 2], vec![0.0, 1.0]).unwrap();
        let n = l2_normalize(&t).unwrap();
        assert_eq!(n.values(), t.values());
    }

    #[test]
    fn normalize_random_rows_have_unit_norm() {
        use rand::Rng;
        let mut rng = crate::rng::stream(1, &[99]);
        let vals: Vec<f64> = (0..48).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let t = Tensor::new(vec![6, 8], vals).unwrap();
        let n = l2_normalize(&t).unwrap();
        for i in 0..6 {
            let norm = dot(n.row(i), n.row(i)).sqrt();
            assert!((norm - 1.0).abs() < 1e-12, "row {i} norm {norm}");
        }
    }

    #[test]
    fn normalize_zero_row_errors() {
        let t = Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(l2_normalize(&t), Err(Error::ZeroRow(1))));
    }
}
