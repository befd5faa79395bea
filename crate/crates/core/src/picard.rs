//! Fixed-point iteration for the truncated mild equation on a frozen path:
//!
//! ```text
//! Z(t) = S_t x − iλ ∫₀ᵗ S_{t−s} θ_R(‖Z‖_{Y_s}) |Z(s)|^{α−1} Z(s) ds + M(t)
//! ```
//!
//! The Duhamel integral uses the left-endpoint rule on the same step
//! schedule as [`crate::dynamics::solve_path`], so the two solvers can be
//! compared node for node.

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{modulus_power, step_schedule, theta_r, SolverConfig};
use crate::noise::{ConvolutionTracker, JumpPath, NoiseModel};
use crate::spectral::{propagator_phase, YAccumulator};
use crate::{Error, Field, Grid, NormSeries, Result};

/// Right-continuous discrete solution on the step schedule.
#[derive(Clone, Debug)]
pub struct MildSolution {
    pub times: Vec<f64>,
    pub fields: Vec<Field>,
    pub norms: NormSeries,
}

#[derive(Clone, Debug)]
pub struct PicardReport {
    pub iterations: usize,
    /// `‖Z_{n+1} − Z_n‖_{Y_T}` per iteration.
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub tolerance: f64,
    pub solution: MildSolution,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResidualRow {
    pub iteration: usize,
    pub residual: f64,
    pub ratio: Option<f64>,
}

impl PicardReport {
    /// `residual_{n+1} / residual_n` for consecutive iterations.
    pub fn ratios(&self) -> Vec<f64> {
        self.residuals.windows(2).map(|w| w[1] / w[0]).collect()
    }

    pub fn rows(&self) -> Vec<ResidualRow> {
        self.residuals
            .iter()
            .enumerate()
            .map(|(i, &residual)| ResidualRow {
                iteration: i + 1,
                residual,
                ratio: (i > 0).then(|| residual / self.residuals[i - 1]),
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,residual,ratio\n");
        for row in self.rows() {
            let ratio = row.ratio.map(|r| format!("{r:.16e}")).unwrap_or_default();
            out.push_str(&format!("{},{:.16e},{}\n", row.iteration, row.residual, ratio));
        }
        out
    }
}

/// Default stopping tolerance `1e−10 · (1 + ‖x‖_{L²})`.
pub fn default_tolerance(x: &Field, grid: &Grid) -> f64 {
    1e-10 * (1.0 + crate::spectral::l2_norm(x, grid))
}

fn norm_series(times: &[f64], fields: &[Field], r: f64, grid: &Grid) -> NormSeries {
    let mut ns = NormSeries::new(r);
    for (t, f) in times.iter().zip(fields) {
        ns.push_field(*t, f, grid);
    }
    ns
}

/// `‖a − b‖_{Y_T}` for two field series on a common time grid.
pub fn y_distance(times: &[f64], a: &[Field], b: &[Field], grid: &Grid, p: f64, r: f64) -> f64 {
    let mut acc = YAccumulator::new(p);
    for ((t, u), v) in times.iter().zip(a).zip(b) {
        let mut d = u.clone();
        d -= v;
        acc.push(
            *t,
            crate::spectral::l2_norm(&d, grid),
            crate::spectral::lr_norm(&d, r, grid),
        );
    }
    acc.value()
}

/// Iterates `Z_{n+1} = Φ(Z_n)` from `Z_0(t) = S_t x + M(t)`.
///
/// `radius` is the truncation level (`f64::INFINITY` for none); the `Y`-norm
/// inside `θ_R` is taken from the previous iterate. Not converging within
/// `n_max` iterations is reported through `converged = false`.
pub fn picard_solve(
    x: &Field,
    path: &JumpPath,
    model: &NoiseModel,
    cfg: &SolverConfig,
    radius: f64,
    n_max: usize,
    tol: Option<f64>,
) -> Result<PicardReport> {
    cfg.validate()?;
    let grid = model.grid();
    grid.check_field(x)?;
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    if path.horizon < cfg.horizon {
        return Err(Error::MismatchedPath(format!(
            "path horizon {} shorter than T = {}",
            path.horizon, cfg.horizon
        )));
    }
    let tol = tol.unwrap_or_else(|| default_tolerance(x, grid));
    let times = step_schedule(cfg.horizon, cfg.dt, path);
    let (p, r) = (cfg.pair.p, cfg.pair.r);

    // S_t x + M(t), fixed for all iterations
    let mut x_hat = x.as_slice().to_vec();
    grid.forward(&mut x_hat);
    let mut tracker = ConvolutionTracker::new(model, path);
    let mut base = Vec::with_capacity(times.len());
    for &t in &times {
        tracker.advance_to(t)?;
        let mut hat: Vec<Complex64> = x_hat
            .iter()
            .zip(grid.k_squared())
            .zip(tracker.spectrum())
            .map(|((xk, &k), mk)| xk * propagator_phase(k, t) + mk)
            .collect();
        grid.inverse(&mut hat);
        base.push(Field::from_vec(hat));
    }

    let coupling = Complex64::new(0.0, -cfg.lambda * cfg.nonlinear_scale);
    let mut current = base.clone();
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..n_max {
        let norms = norm_series(&times, &current, r, grid);
        let y_values = norms.y_values(p);
        let mut next = Vec::with_capacity(times.len());
        let mut duhamel = vec![Complex64::new(0.0, 0.0); grid.len()];
        for k in 0..times.len() {
            let mut phi = duhamel.clone();
            grid.inverse(&mut phi);
            let mut phi = Field::from_vec(phi);
            phi += &base[k];
            next.push(phi);
            if k + 1 == times.len() {
                break;
            }
            let h = times[k + 1] - times[k];
            let weight = coupling * theta_r(y_values[k], radius)? * h;
            let mut f: Vec<Complex64> = current[k]
                .iter()
                .map(|z| z * (weight * modulus_power(*z, cfg.alpha)))
                .collect();
            grid.forward(&mut f);
            for ((d, fk), &kk) in duhamel.iter_mut().zip(&f).zip(grid.k_squared()) {
                *d = (*d + fk) * propagator_phase(kk, h);
            }
        }
        if next.iter().any(|f| !f.is_finite()) {
            return Err(Error::NonFinite { time: cfg.horizon });
        }
        let residual = y_distance(&times, &next, &current, grid, p, r);
        residuals.push(residual);
        current = next;
        if residual <= tol {
            converged = true;
            break;
        }
    }
    let norms = norm_series(&times, &current, r, grid);
    Ok(PicardReport {
        iterations: residuals.len(),
        residuals,
        converged,
        tolerance: tol,
        solution: MildSolution {
            times,
            fields: current,
            norms,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{solve_path, Recording, SampleKind};
    use crate::noise::stochastic_convolution;
    use crate::noise::{sample_jump_path, Atom};
    use crate::spectral::{free_propagate, make_grid};

    fn bump(grid: &Grid, amp: f64, c: f64) -> Field {
        Field::from_fn(grid, |x| Complex64::new(amp * (-(x[0] - c).powi(2)).exp(), 0.0))
    }

    fn model(grid: &Grid) -> NoiseModel {
        let z0 = bump(grid, 0.35, -1.0);
        let z1 = bump(grid, 0.25, 2.0).scaled(Complex64::new(0.0, 1.0));
        NoiseModel::new(grid, vec![Atom { rate: 3.0, mark: z0 }, Atom { rate: 2.0, mark: z1 }]).unwrap()
    }

    #[test]
    fn linear_problem_converges_immediately() {
        let g = make_grid(1, 128, 20.0).unwrap();
        let m = model(&g);
        let path = sample_jump_path(&m, 0.5, 3);
        let cfg = SolverConfig::new(3.0, 1.0, 0.01, 0.5, 1)
            .unwrap()
            .with_nonlinear_scale(0.0);
        let x = bump(&g, 1.0, 0.0);
        let rep = picard_solve(&x, &path, &m, &cfg, f64::INFINITY, 10, None).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.residuals[0], 0.0);
        let t = rep.solution.times[17];
        let mut expected = free_propagate(&x, t, &g).unwrap();
        expected += &stochastic_convolution(&path, &m, t).unwrap();
        assert!(rep.solution.fields[17].max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn deterministic_contraction_is_geometric() {
        let g = make_grid(1, 128, 20.0).unwrap();
        let empty = NoiseModel::empty(&g);
        let cfg = SolverConfig::new(3.0, -1.0, 1e-3, 0.05, 1).unwrap();
        let x = bump(&g, 1.0, 0.0);
        let rep = picard_solve(&x, &JumpPath::empty(0.05), &empty, &cfg, f64::INFINITY, 50, None).unwrap();
        assert!(rep.converged);
        let ratios = rep.ratios();
        assert!(ratios.len() >= 5, "{:?}", rep.residuals);
        assert!(ratios.iter().all(|&q| q < 1.0));
        assert!(rep.residuals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn agrees_with_split_step() {
        let g = make_grid(1, 128, 20.0).unwrap();
        let m = model(&g);
        let path = sample_jump_path(&m, 0.5, 11);
        let cfg = SolverConfig::new(3.0, 1.0, 1e-3, 0.5, 1)
            .unwrap()
            .with_recording(Recording::Stride(1));
        let x = bump(&g, 0.8, 0.0);
        let rep = picard_solve(&x, &path, &m, &cfg, f64::INFINITY, 100, None).unwrap();
        assert!(rep.converged);
        let traj = solve_path(&x, &path, Some(&m), &cfg).unwrap();
        let fields: Vec<Field> = traj.right_continuous().map(|s| s.field.clone()).collect();
        let times: Vec<f64> = traj.right_continuous().map(|s| s.time).collect();
        assert_eq!(times, rep.solution.times);
        assert!(traj.samples.iter().any(|s| s.kind == SampleKind::PostJump));
        let d = y_distance(&times, &fields, &rep.solution.fields, &g, cfg.pair.p, cfg.pair.r);
        eprintln!("picard vs split-step Y distance {d:e}");
        assert!(d < 1e-3, "{d}");
    }
}
