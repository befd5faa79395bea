use std::ops::{AddAssign, Deref, DerefMut, MulAssign, SubAssign};

use rustfft::num_complex::Complex64;

use crate::Grid;

/// Complex values on the grid nodes, row-major.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Field {
    values: Vec<Complex64>,
}

impl Field {
    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn from_vec(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    /// Samples `f` at every node position (`[x, y]`, `y = 0` in one dimension).
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        Self {
            values: (0..grid.len()).map(|i| f(grid.position(i))).collect(),
        }
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// `self += a · other`
    pub fn axpy(&mut self, a: Complex64, other: &Field) {
        debug_assert_eq!(self.len(), other.len());
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += a * o;
        }
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Deref for Field {
    type Target = [Complex64];
    fn deref(&self) -> &[Complex64] {
        &self.values
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
}

impl AddAssign<&Field> for Field {
    fn add_assign(&mut self, rhs: &Field) {
        debug_assert_eq!(self.len(), rhs.len());
        for (a, b) in self.values.iter_mut().zip(&rhs.values) {
            *a += b;
        }
    }
}

impl SubAssign<&Field> for Field {
    fn sub_assign(&mut self, rhs: &Field) {
        debug_assert_eq!(self.len(), rhs.len());
        for (a, b) in self.values.iter_mut().zip(&rhs.values) {
            *a -= b;
        }
    }
}

impl MulAssign<f64> for Field {
    fn mul_assign(&mut self, rhs: f64) {
        for a in self.values.iter_mut() {
            *a *= rhs;
        }
    }
}

impl FromIterator<Complex64> for Field {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        Self {
            values: iter.into_iter().collect(),
        }
    }
}
