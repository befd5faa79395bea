//! Periodic grid, the free Schrödinger group as a Fourier multiplier, and
//! the discrete norms (L², L^r, Y_t) everything else is measured in.

mod field;
mod grid;
mod norms;
pub mod snapshot;

pub use field::Field;
pub use grid::{make_grid, Grid, GridSpec};
pub use norms::{check_admissible, l2_norm, lr_norm, re_inner, y_norm, AdmissiblePair, NormSeries, YAccumulator};

use rustfft::num_complex::Complex64;

/// Multiplier `e^{−i|k|²t}` for one mode.
#[inline]
pub fn propagator_phase(k2: f64, t: f64) -> Complex64 {
    let (s, c) = (k2 * t).sin_cos();
    Complex64::new(c, -s)
}

/// `∫₀ʰ e^{−i|k|²s} ds = (1 − e^{−i|k|²h}) / (i|k|²)`, equal to `h` at `k = 0`.
#[inline]
pub fn drift_weight(k2: f64, h: f64) -> Complex64 {
    let a = k2 * h;
    if a.abs() < 1e-3 {
        // h · (1 − ia/2 − a²/6 + ia³/24 + a⁴/120)
        let a2 = a * a;
        Complex64::new(h * (1.0 - a2 / 6.0 + a2 * a2 / 120.0), h * (-a / 2.0 + a2 * a / 24.0))
    } else {
        let (s, c) = a.sin_cos();
        // (1 − cos a + i sin a) / (i k²) = (sin a − i(1 − cos a)) / k²
        Complex64::new(s / k2, -(1.0 - c) / k2)
    }
}

/// `S_t u`: exact free evolution over time `t` (negative `t` runs backwards).
pub fn free_propagate(u: &Field, t: f64, grid: &Grid) -> crate::Result<Field> {
    grid.check_field(u)?;
    if !u.is_finite() {
        return Err(crate::Error::NonFiniteInput);
    }
    let mut hat = u.as_slice().to_vec();
    grid.forward(&mut hat);
    for (c, &k2) in hat.iter_mut().zip(grid.k_squared()) {
        *c *= propagator_phase(k2, t);
    }
    grid.inverse(&mut hat);
    Ok(Field::from_vec(hat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_field(grid: &Grid, seed: u64) -> Field {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Field::from_vec(
            (0..grid.len())
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
    }

    #[test]
    fn identity_at_zero_time() {
        let g = make_grid(1, 64, 10.0).unwrap();
        let u = random_field(&g, 1);
        let v = free_propagate(&u, 0.0, &g).unwrap();
        let err = u.iter().zip(v.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-14, "{err}");
    }

    #[test]
    fn isometry_and_group_law() {
        let g = make_grid(1, 256, 20.0 * std::f64::consts::PI).unwrap();
        let u = random_field(&g, 2);
        let n0 = l2_norm(&u, &g);
        let v = free_propagate(&u, 0.37, &g).unwrap();
        assert!((l2_norm(&v, &g) - n0).abs() <= 1e-12 * n0);

        let a = free_propagate(&free_propagate(&u, 0.2, &g).unwrap(), 0.5, &g).unwrap();
        let b = free_propagate(&u, 0.7, &g).unwrap();
        let err = a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn two_dimensional_plane_wave_picks_up_its_phase() {
        let g = make_grid(2, 16, 2.0 * std::f64::consts::PI).unwrap();
        // e^{i(2x + y)} has |k|² = 5
        let u = Field::from_fn(&g, |x| Complex64::from_polar(1.0, 2.0 * x[0] + x[1]));
        let v = free_propagate(&u, 0.3, &g).unwrap();
        let expected = propagator_phase(5.0, 0.3);
        for (a, b) in u.iter().zip(v.iter()) {
            assert!((a * expected - b).norm() < 1e-12);
        }
    }

    #[test]
    fn drift_weight_series_matches_closed_form() {
        for &k2 in &[1e-6f64, 1e-2, 0.5, 3.0] {
            for &h in &[1e-4f64, 1e-3] {
                let a = k2 * h;
                let direct = {
                    let (s, c) = a.sin_cos();
                    Complex64::new(s / k2, -(1.0 - c) / k2)
                };
                let w = drift_weight(k2, h);
                // the direct formula loses ~eps/a relative accuracy
                assert!((w - direct).norm() <= 1e-15 / a.max(1e-300) * h + 1e-15 * h);
            }
        }
        assert_eq!(drift_weight(0.0, 0.25), Complex64::new(0.25, 0.0));
    }

    proptest! {
        #[test]
        fn propagation_is_unitary(seed in 0u64..1000, t in -3.0f64..3.0) {
            let g = make_grid(1, 64, 12.0).unwrap();
            let u = random_field(&g, seed);
            let n0 = l2_norm(&u, &g);
            let n1 = l2_norm(&free_propagate(&u, t, &g).unwrap(), &g);
            prop_assert!((n1 - n0).abs() <= 1e-12 * n0);
        }
    }
}
