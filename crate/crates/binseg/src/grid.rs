//! Scalar fields on the pixel grid.
//!
//! Both containers are immutable once constructed: every operation that
//! changes values returns a fresh grid, so instances can be shared or sent
//! between threads freely.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A 2-D scalar field over the pixel domain, stored row-major.
///
/// `x` indexes columns, `y` rows; the flat index of `(x, y)` is
/// `y * width + x`. Values are guaranteed finite: constructors reject NaN
/// and infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
}

/// The evolving segmentation field `phi`.
///
/// Real-valued between solver sub-steps; exactly `{-1, +1}` after every
/// projection (`+1` = inside). Same storage layout as [`ImageGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetField<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
}

fn check_shape<T: Scalar>(width: usize, height: usize, values: &[T]) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyGrid);
    }
    if values.len() != width * height {
        return Err(Error::LengthMismatch {
            width,
            height,
            found: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

impl<T: Scalar> ImageGrid<T> {
    /// Builds a grid from row-major values, validating shape and finiteness.
    pub fn from_values(width: usize, height: usize, values: Vec<T>) -> Result<Self> {
        check_shape(width, height, &values)?;
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Builds a grid filled with a single value.
    pub fn constant(width: usize, height: usize, value: T) -> Result<Self> {
        Self::from_values(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Value at column `x`, row `y`.
    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[y * self.width + x]
    }

    /// Mean over all pixels, accumulated in row-major order.
    pub fn mean(&self) -> T {
        let sum = self
            .values
            .iter()
            .fold(T::zero(), |acc, &v| acc + v);
        sum / T::from_usize(self.values.len()).expect("pixel count fits in scalar")
    }

    /// Rescales values into `[0, 1]`.
    ///
    /// Non-constant grids are mapped affinely so the minimum lands on 0 and
    /// the maximum on 1; constant grids are clamped to `[0, 1]` instead.
    /// Applying `normalize` twice gives the same result as applying it once.
    pub fn normalize(&self) -> Self {
        let mut min = self.values[0];
        let mut max = self.values[0];
        for &v in &self.values {
            if v < min {
                min = v;
            }
            if v > max {
                max = v;
            }
        }
        let values = if max > min {
            let span = max - min;
            self.values.iter().map(|&v| (v - min) / span).collect()
        } else {
            self.values
                .iter()
                .map(|&v| v.max(T::zero()).min(T::one()))
                .collect()
        };
        Self {
            width: self.width,
            height: self.height,
            values,
        }
    }

    /// Internal constructor for values already known to be finite.
    pub(crate) fn from_values_unchecked(width: usize, height: usize, values: Vec<T>) -> Self {
        debug_assert!(width > 0 && height > 0);
        debug_assert_eq!(values.len(), width * height);
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self {
            width,
            height,
            values,
        }
    }
}

impl<T: Scalar> LevelSetField<T> {
    /// Builds a field from row-major values, validating shape and finiteness.
    pub fn from_values(width: usize, height: usize, values: Vec<T>) -> Result<Self> {
        check_shape(width, height, &values)?;
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Builds a field filled with a single value.
    pub fn constant(width: usize, height: usize, value: T) -> Result<Self> {
        Self::from_values(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Value at column `x`, row `y`.
    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[y * self.width + x]
    }

    /// True when every value is exactly -1 or +1.
    pub fn is_binary(&self) -> bool {
        self.values
            .iter()
            .all(|&v| v == T::one() || v == -T::one())
    }

    /// First value that is neither -1 nor +1, if any.
    pub fn first_non_binary(&self) -> Option<T> {
        self.values
            .iter()
            .copied()
            .find(|&v| v != T::one() && v != -T::one())
    }

    pub(crate) fn from_values_unchecked(width: usize, height: usize, values: Vec<T>) -> Self {
        debug_assert!(width > 0 && height > 0);
        debug_assert_eq!(values.len(), width * height);
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self {
            width,
            height,
            values,
        }
    }
}

/// Checks that two grids share dimensions.
pub(crate) fn ensure_same_shape(
    expected_width: usize,
    expected_height: usize,
    found_width: usize,
    found_height: usize,
) -> Result<()> {
    if expected_width != found_width || expected_height != found_height {
        return Err(Error::DimensionMismatch {
            expected_width,
            expected_height,
            found_width,
            found_height,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn from_values_checks_shape() {
        assert!(matches!(
            ImageGrid::<f64>::from_values(0, 3, vec![]),
            Err(Error::EmptyGrid)
        ));
        assert!(matches!(
            ImageGrid::from_values(2, 2, vec![0.0; 3]),
            Err(Error::LengthMismatch { found: 3, .. })
        ));
    }

    #[test]
    fn from_values_rejects_non_finite() {
        let err = ImageGrid::from_values(2, 1, vec![0.5, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1 }));
        let err = ImageGrid::from_values(2, 1, vec![f64::INFINITY, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 0 }));
    }

    #[test]
    fn indexing_is_row_major() {
        let g = ImageGrid::from_values(3, 2, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(g.get(0, 0), 0.0);
        assert_eq!(g.get(2, 0), 2.0);
        assert_eq!(g.get(0, 1), 3.0);
        assert_eq!(g.get(2, 1), 5.0);
    }

    #[test]
    fn normalize_affine_and_constant() {
        let g = ImageGrid::from_values(2, 2, vec![2.0, 4.0, 6.0, 10.0]).unwrap();
        let n = g.normalize();
        assert_eq!(n.values(), &[0.0, 0.25, 0.5, 1.0]);

        let c = ImageGrid::constant(2, 2, 3.5f64).unwrap().normalize();
        assert_eq!(c.values(), &[1.0; 4]);
        let c = ImageGrid::constant(2, 2, -1.0f64).unwrap().normalize();
        assert_eq!(c.values(), &[0.0; 4]);
        let c = ImageGrid::constant(2, 2, 0.5f64).unwrap().normalize();
        assert_eq!(c.values(), &[0.5; 4]);
    }

    #[test]
    fn binary_detection() {
        let f = LevelSetField::from_values(2, 1, vec![1.0, -1.0]).unwrap();
        assert!(f.is_binary());
        assert_eq!(f.first_non_binary(), None);
        let f = LevelSetField::from_values(2, 1, vec![1.0, 0.5]).unwrap();
        assert!(!f.is_binary());
        assert_eq!(f.first_non_binary(), Some(0.5));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(values in proptest::collection::vec(-1e6f64..1e6, 6)) {
            let g = ImageGrid::from_values(3, 2, values).unwrap();
            let once = g.normalize();
            let twice = once.normalize();
            prop_assert_eq!(once.values(), twice.values());
            for &v in once.values() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
