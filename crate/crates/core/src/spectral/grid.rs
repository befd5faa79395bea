use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Field, Result};

/// Plain description of a grid, as it appears in configs and snapshot headers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    pub n: usize,
    pub box_length: f64,
}

/// Uniform periodic grid on `[−L/2, L/2)^d` with cached FFT plans.
///
/// Nodes are stored row-major; in two dimensions index `iy * n + ix`.
/// The plans are immutable after construction, so a `Grid` can be shared
/// freely between worker threads.
#[derive(Clone)]
pub struct Grid {
    spec: GridSpec,
    wavenumbers: Arc<[f64]>,
    k2: Arc<[f64]>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

pub fn make_grid(d: usize, n: usize, box_length: f64) -> Result<Grid> {
    Grid::new(d, n, box_length)
}

impl Grid {
    pub fn new(d: usize, n: usize, box_length: f64) -> Result<Self> {
        if !(1..=2).contains(&d) {
            return Err(Error::InvalidGrid(format!("dimension {d} not in {{1, 2}}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} must be a power of two ≥ 8")));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!("box length {box_length} must be positive")));
        }
        let two_pi_over_l = 2.0 * std::f64::consts::PI / box_length;
        let wavenumbers: Vec<f64> = (0..n)
            .map(|j| {
                let signed = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
                two_pi_over_l * signed as f64
            })
            .collect();
        let k2: Vec<f64> = match d {
            1 => wavenumbers.iter().map(|k| k * k).collect(),
            _ => {
                let mut out = Vec::with_capacity(n * n);
                for ky in &wavenumbers {
                    for kx in &wavenumbers {
                        out.push(kx * kx + ky * ky);
                    }
                }
                out
            }
        };
        let mut planner = FftPlanner::new();
        Ok(Self {
            spec: GridSpec { d, n, box_length },
            wavenumbers: wavenumbers.into(),
            k2: k2.into(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn from_spec(spec: GridSpec) -> Result<Self> {
        Self::new(spec.d, spec.n, spec.box_length)
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.d
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn box_length(&self) -> f64 {
        self.spec.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.spec.box_length / self.spec.n as f64
    }

    /// `spacing^d`, the weight of one node in the rectangle rule.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.spec.d as i32)
    }

    /// Number of nodes, `n^d`.
    pub fn len(&self) -> usize {
        self.spec.n.pow(self.spec.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed wavenumbers `2π·j/L` in FFT order, one axis.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// `|k|²` per Fourier mode, same layout as the field.
    pub fn k_squared(&self) -> &[f64] {
        &self.k2
    }

    /// Coordinates `−L/2 + j·h` along one axis.
    pub fn axis(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.spec.n)
            .map(|j| -0.5 * self.spec.box_length + j as f64 * h)
            .collect()
    }

    /// Physical position of node `idx`; the second entry is 0 in one dimension.
    pub fn position(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        let half = 0.5 * self.spec.box_length;
        match self.spec.d {
            1 => [-half + idx as f64 * h, 0.0],
            _ => {
                let (iy, ix) = (idx / self.spec.n, idx % self.spec.n);
                [-half + ix as f64 * h, -half + iy as f64 * h]
            }
        }
    }

    pub fn check_field(&self, u: &Field) -> Result<()> {
        if u.len() != self.len() {
            return Err(Error::FieldLength {
                expected: self.len(),
                found: u.len(),
            });
        }
        Ok(())
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform in place, normalized so that `inverse ∘ forward = id`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len());
        // rustfft processes every length-n chunk of the buffer
        plan.process(data);
        if self.spec.d == 2 {
            transpose_square(data, self.spec.n);
            plan.process(data);
            transpose_square(data, self.spec.n);
        }
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("d", &self.spec.d)
            .field("n", &self.spec.n)
            .field("box_length", &self.spec.box_length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumbers_for_unit_period() {
        let g = make_grid(1, 8, 2.0 * std::f64::consts::PI).unwrap();
        let expected = [0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0];
        for (k, e) in g.wavenumbers().iter().zip(expected) {
            assert!((k - e).abs() < 1e-14);
        }
    }

    #[test]
    fn two_dimensional_node_count() {
        let g = make_grid(2, 16, 10.0).unwrap();
        assert_eq!(g.len(), 256);
        assert_eq!(g.k_squared().len(), 256);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(make_grid(3, 8, 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(1, 12, 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(1, 4, 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(1, 16, 0.0), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn transform_round_trip_2d() {
        let g = make_grid(2, 8, 3.0).unwrap();
        let orig: Vec<Complex64> = (0..64).map(|i| Complex64::new(i as f64, (i * i % 7) as f64)).collect();
        let mut data = orig.clone();
        g.forward(&mut data);
        g.inverse(&mut data);
        for (a, b) in orig.iter().zip(&data) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
