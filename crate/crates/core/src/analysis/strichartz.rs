use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use super::stats::{mean_std_error, tree_sum};
use crate::noise::{convolution_norms, path_rng, sample_jump_path_indexed, NoiseModel};
use crate::spectral::{l2_norm, lr_norm, propagator_phase, AdmissiblePair, Field, Grid, GridSpec};
use crate::{Error, Result};

/// Ratios `lhs / rhs` of one Strichartz-type bound over an input ensemble.
#[derive(Clone, Debug, Serialize)]
pub struct StrichartzReport {
    pub p: f64,
    pub r: f64,
    pub sample_count: usize,
    pub ratio_max: f64,
    pub ratio_mean: f64,
    pub horizon: f64,
    pub steps: usize,
    pub grid: GridSpec,
    pub ratios: Vec<f64>,
}

impl StrichartzReport {
    fn from_ratios(pair: AdmissiblePair, horizon: f64, steps: usize, grid: &Grid, ratios: Vec<f64>) -> Self {
        let ratio_max = ratios.iter().copied().fold(0.0, f64::max);
        let ratio_mean = if ratios.is_empty() {
            0.0
        } else {
            tree_sum(&ratios) / ratios.len() as f64
        };
        Self {
            p: pair.p,
            r: pair.r,
            sample_count: ratios.len(),
            ratio_max,
            ratio_mean,
            horizon,
            steps,
            grid: grid.spec(),
            ratios,
        }
    }
}

/// Both bounds for the Duhamel integral `Φ_f(t) = ∫₀ᵗ S_{t−s} f(s) ds`,
/// measured against `‖f‖_{L^{γ'}(0,T;L^{ρ'})}`.
#[derive(Clone, Debug, Serialize)]
pub struct InhomogeneousReport {
    pub dual_p: f64,
    pub dual_r: f64,
    /// `sup_t ‖Φ_f(t)‖_{L²}` ratios.
    pub energy: StrichartzReport,
    /// `‖Φ_f‖_{L^p(0,T;L^r)}` ratios.
    pub spacetime: StrichartzReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct StochasticReport {
    pub p: f64,
    pub r: f64,
    pub q: f64,
    pub n_paths: usize,
    pub horizon: f64,
    pub steps: usize,
    /// Monte Carlo mean of `‖M‖^q_{L^p(0,T;L^r)}`.
    pub lhs_mean: f64,
    pub lhs_std_error: f64,
    /// `(m₂T)^{q/2} + (∫‖z‖^q ν(dz)) T`.
    pub rhs: f64,
    pub c_hat: f64,
    pub c_hat_std_error: f64,
}

fn check_steps(horizon: f64, steps: usize) -> Result<f64> {
    if !(horizon > 0.0) || steps == 0 {
        return Err(Error::InvalidInput(format!(
            "need T > 0 and steps > 0, got T = {horizon}, steps = {steps}"
        )));
    }
    Ok(horizon / steps as f64)
}

/// `(Σ_k h ‖u_k‖_r^p)^{1/p}` over `k < steps`; `p = ∞` takes the max.
fn lp_lr_left(fields: impl Iterator<Item = f64>, p: f64, h: f64) -> f64 {
    if p.is_infinite() {
        return fields.fold(0.0, f64::max);
    }
    let terms: Vec<f64> = fields.map(|v| v.powf(p) * h).collect();
    tree_sum(&terms).powf(1.0 / p)
}

/// Random Gaussian wave packets `a e^{iξx} e^{−|x−c|²/(2w²)}` whose physical
/// parameters depend only on `seed` and the box, not on the resolution.
pub fn gaussian_packets(grid: &Grid, count: usize, seed: u64) -> Vec<Field> {
    let mut rng = path_rng(seed, 0);
    let half = grid.box_length() / 2.0;
    (0..count)
        .map(|_| {
            let amp: f64 = rng.random_range(0.5..2.0);
            let width: f64 = rng.random_range(0.5..2.0);
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let mut center = [0.0; 2];
            let mut momentum = [0.0; 2];
            for axis in 0..2 {
                center[axis] = rng.random_range(-0.25 * half..0.25 * half);
                momentum[axis] = rng.random_range(-3.0..3.0);
            }
            let d = grid.dim();
            Field::from_fn(grid, |x| {
                let mut r2 = 0.0;
                let mut arg = phase;
                for axis in 0..d {
                    r2 += (x[axis] - center[axis]).powi(2);
                    arg += momentum[axis] * x[axis];
                }
                Complex64::from_polar(amp * (-r2 / (2.0 * width * width)).exp(), arg)
            })
        })
        .collect()
}

/// `‖S_·φ‖_{L^p(0,T;L^r)} / ‖φ‖_{L²}` per sample, left-endpoint rule on
/// `steps` uniform steps.
pub fn strichartz_homog(
    phis: &[Field],
    pair: AdmissiblePair,
    horizon: f64,
    steps: usize,
    grid: &Grid,
) -> Result<StrichartzReport> {
    let h = check_steps(horizon, steps)?;
    for phi in phis {
        grid.check_field(phi)?;
    }
    let ratios = phis
        .par_iter()
        .map(|phi| {
            let norm = l2_norm(phi, grid);
            if norm == 0.0 {
                return Err(Error::InvalidInput("zero initial datum".into()));
            }
            let mut hat = phi.clone();
            grid.forward(&mut hat);
            let lr = (0..steps).map(|k| {
                let t = k as f64 * h;
                let mut u: Field = hat
                    .iter()
                    .zip(grid.k_squared())
                    .map(|(c, &k2)| c * propagator_phase(k2, t))
                    .collect();
                grid.inverse(&mut u);
                lr_norm(&u, pair.r, grid)
            });
            Ok(lp_lr_left(lr, pair.p, h) / norm)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StrichartzReport::from_ratios(pair, horizon, steps, grid, ratios))
}

/// Max ratio over the ensemble, the working value of the Strichartz constant.
pub fn estimate_strichartz_constant(report: &StrichartzReport) -> f64 {
    report.ratio_max
}

/// `Φ_f(t_k)` for `k = 0..=steps`, with `f` sampled at `t_k = kT/steps`
/// (`forcing.len() ≥ steps`) and the recursion
/// `Φ̂_{k+1} = e^{−i|ξ|²h}(Φ̂_k + h f̂_k)`.
pub fn duhamel_series(forcing: &[Field], horizon: f64, steps: usize, grid: &Grid) -> Result<Vec<Field>> {
    let h = check_steps(horizon, steps)?;
    if forcing.len() < steps {
        return Err(Error::InvalidInput(format!(
            "forcing has {} samples, need {steps}",
            forcing.len()
        )));
    }
    let phase: Vec<Complex64> = grid.k_squared().iter().map(|&k2| propagator_phase(k2, h)).collect();
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut out = Vec::with_capacity(steps + 1);
    out.push(Field::zeros(grid.len()));
    for f in &forcing[..steps] {
        grid.check_field(f)?;
        let mut fh = f.clone();
        grid.forward(&mut fh);
        for ((a, &fk), &ph) in acc.iter_mut().zip(fh.iter()).zip(&phase) {
            *a = (*a + fk * h) * ph;
        }
        let mut u = Field::from_vec(acc.clone());
        grid.inverse(&mut u);
        out.push(u);
    }
    Ok(out)
}

/// Energy and space-time ratios for each forcing in the ensemble. `dual` is
/// the admissible pair `(γ,ρ)` whose conjugates measure `f`.
pub fn strichartz_inhom(
    forcings: &[Vec<Field>],
    dual: AdmissiblePair,
    pair: AdmissiblePair,
    horizon: f64,
    steps: usize,
    grid: &Grid,
) -> Result<InhomogeneousReport> {
    let h = check_steps(horizon, steps)?;
    let (gp, rp) = dual.conjugate();
    let pairs = forcings
        .par_iter()
        .map(|f| {
            let phi = duhamel_series(f, horizon, steps, grid)?;
            let denom = lp_lr_left(f[..steps].iter().map(|u| lr_norm(u, rp, grid)), gp, h);
            if denom == 0.0 {
                return Ok((0.0, 0.0));
            }
            let energy = phi.iter().map(|u| l2_norm(u, grid)).fold(0.0, f64::max);
            let spacetime = lp_lr_left(phi[..steps].iter().map(|u| lr_norm(u, pair.r, grid)), pair.p, h);
            Ok((energy / denom, spacetime / denom))
        })
        .collect::<Result<Vec<_>>>()?;
    let (energy, spacetime): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let energy_pair = AdmissiblePair {
        p: f64::INFINITY,
        r: 2.0,
    };
    Ok(InhomogeneousReport {
        dual_p: dual.p,
        dual_r: dual.r,
        energy: StrichartzReport::from_ratios(energy_pair, horizon, steps, grid, energy),
        spacetime: StrichartzReport::from_ratios(pair, horizon, steps, grid, spacetime),
    })
}

/// Monte Carlo estimate of `Ĉ_q = E‖M‖^q_{L^p(0,T;L^r)} / [(m₂T)^{q/2} + (∫‖z‖^q ν)T]`
/// for the stochastic convolution of `model`, path `i` drawn from stream `i`.
pub fn strichartz_stoch(
    model: &NoiseModel,
    q: f64,
    pair: AdmissiblePair,
    horizon: f64,
    steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<StochasticReport> {
    let h = check_steps(horizon, steps)?;
    if !(q >= 2.0) {
        return Err(Error::InvalidInput(format!("q = {q} must be at least 2")));
    }
    if n_paths == 0 {
        return Err(Error::InvalidInput("need at least one path".into()));
    }
    let times: Vec<f64> = (0..=steps)
        .map(|k| if k == steps { horizon } else { k as f64 * h })
        .collect();
    let lhs = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = sample_jump_path_indexed(model, horizon, seed, i);
            let ns = convolution_norms(&path, model, &times, pair.r)?;
            Ok(ns.lp_lr(pair.p).powf(q))
        })
        .collect::<Result<Vec<_>>>()?;
    let (lhs_mean, lhs_std_error) = mean_std_error(&lhs);
    let comp = model.compensator();
    let rhs = (comp.second_moment * horizon).powf(q / 2.0) + comp.q_moment(q) * horizon;
    let (c_hat, c_hat_std_error) = if rhs > 0.0 {
        (lhs_mean / rhs, lhs_std_error / rhs)
    } else {
        (0.0, 0.0)
    };
    Ok(StochasticReport {
        p: pair.p,
        r: pair.r,
        q,
        n_paths,
        horizon,
        steps,
        lhs_mean,
        lhs_std_error,
        rhs,
        c_hat,
        c_hat_std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::Atom;
    use crate::spectral::{free_propagate, make_grid};

    fn pair() -> AdmissiblePair {
        AdmissiblePair::for_exponent(3.0, 1).unwrap()
    }

    #[test]
    fn plane_wave_closed_form() {
        let grid = make_grid(1, 64, 2.0 * std::f64::consts::PI).unwrap();
        let phi = Field::from_fn(&grid, |x| Complex64::from_polar(1.5, 3.0 * x[0]));
        let (t, steps) = (0.8, 40);
        let rep = strichartz_homog(std::slice::from_ref(&phi), pair(), t, steps, &grid).unwrap();
        let expected = t.powf(1.0 / pair().p) * lr_norm(&phi, pair().r, &grid) / l2_norm(&phi, &grid);
        assert!((rep.ratio_max - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn homogeneous_ratio_is_scale_invariant() {
        let grid = make_grid(1, 128, 20.0).unwrap();
        let phis = gaussian_packets(&grid, 4, 3);
        let doubled: Vec<Field> = phis.iter().map(|f| f.scaled(Complex64::new(2.0, 0.0))).collect();
        let a = strichartz_homog(&phis, pair(), 0.5, 20, &grid).unwrap();
        let b = strichartz_homog(&doubled, pair(), 0.5, 20, &grid).unwrap();
        for (x, y) in a.ratios.iter().zip(&b.ratios) {
            assert!((x - y).abs() < 1e-13 * x);
        }
    }

    #[test]
    fn duhamel_of_free_wave_is_linear_in_time() {
        let grid = make_grid(1, 128, 20.0).unwrap();
        let phi = &gaussian_packets(&grid, 1, 9)[0];
        let (t, steps) = (0.5, 50);
        let h = t / steps as f64;
        let forcing: Vec<Field> = (0..steps)
            .map(|k| free_propagate(phi, k as f64 * h, &grid).unwrap())
            .collect();
        let series = duhamel_series(&forcing, t, steps, &grid).unwrap();
        for (k, u) in series.iter().enumerate() {
            let tk = k as f64 * h;
            let exact = free_propagate(phi, tk, &grid).unwrap().scaled(Complex64::new(tk, 0.0));
            assert!(u.max_abs_diff(&exact) < 1e-12);
        }
    }

    #[test]
    fn zero_forcing_gives_zero_ratios() {
        let grid = make_grid(1, 32, 10.0).unwrap();
        let forcing = vec![vec![Field::zeros(32); 10]];
        let rep = strichartz_inhom(&forcing, pair(), pair(), 1.0, 10, &grid).unwrap();
        assert_eq!(rep.energy.ratio_max, 0.0);
        assert_eq!(rep.spacetime.ratio_max, 0.0);
    }

    #[test]
    fn inhomogeneous_ratio_is_scale_invariant() {
        let grid = make_grid(1, 64, 20.0).unwrap();
        let phis = gaussian_packets(&grid, 10, 1);
        let f = vec![phis.clone()];
        let g = vec![phis.iter().map(|u| u.scaled(Complex64::new(0.0, -3.0))).collect()];
        let a = strichartz_inhom(&f, pair(), pair(), 1.0, 10, &grid).unwrap();
        let b = strichartz_inhom(&g, pair(), pair(), 1.0, 10, &grid).unwrap();
        assert!((a.energy.ratio_max - b.energy.ratio_max).abs() < 1e-13 * a.energy.ratio_max);
        assert!((a.spacetime.ratio_max - b.spacetime.ratio_max).abs() < 1e-13 * a.spacetime.ratio_max);
    }

    #[test]
    fn stochastic_estimator_basics() {
        let grid = make_grid(1, 64, 20.0).unwrap();
        let empty = NoiseModel::empty(&grid);
        let rep = strichartz_stoch(&empty, 2.0, pair(), 1.0, 20, 8, 1).unwrap();
        assert_eq!(rep.lhs_mean, 0.0);
        assert_eq!(rep.c_hat, 0.0);

        let mark = Field::from_fn(&grid, |x| Complex64::new(0.4 * (-x[0] * x[0]).exp(), 0.0));
        let model = NoiseModel::new(&grid, vec![Atom { rate: 2.0, mark }]).unwrap();
        let a = strichartz_stoch(&model, 2.0, pair(), 1.0, 50, 64, 5).unwrap();
        let b = strichartz_stoch(&model, 2.0, pair(), 1.0, 50, 64, 5).unwrap();
        assert_eq!(a.lhs_mean.to_bits(), b.lhs_mean.to_bits());
        assert!(a.c_hat.is_finite() && a.c_hat > 0.0);

        // doubling the rate doubles both terms of the bound at q = 2; the
        // left side is a compound-Poisson second moment and grows at most 2×
        let doubled = model.with_scaled_rates(2.0).unwrap();
        let c = strichartz_stoch(&doubled, 2.0, pair(), 1.0, 50, 256, 5).unwrap();
        assert!((c.rhs - 2.0 * a.rhs).abs() < 1e-12 * a.rhs);
        let a_big = strichartz_stoch(&model, 2.0, pair(), 1.0, 50, 256, 5).unwrap();
        assert!(c.lhs_mean <= 4.0 * 2.0 * a_big.lhs_mean);
    }
}
