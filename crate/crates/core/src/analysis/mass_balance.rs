use serde::Serialize;

use crate::dynamics::{SampleKind, Trajectory};
use crate::noise::{JumpPath, NoiseModel};
use crate::spectral::{l2_norm, re_inner};
use crate::{Error, Result};

/// Discrepancy between `‖X(t)‖^q` and its pathwise reconstruction
///
/// ```text
/// ‖x‖^q − ∫₀ᵗ q‖X(s)‖^{q−2} Re⟨X(s), μ⟩ ds + Σ_{s_i ≤ t} (‖X(s_i−) + z_i‖^q − ‖X(s_i−)‖^q)
/// ```
///
/// at every stored sample. The dispersive and nonlinear parts do not enter:
/// both are skew in L².
#[derive(Clone, Debug, Serialize)]
pub struct MassBalanceReport {
    pub q: f64,
    pub times: Vec<f64>,
    pub residual_series: Vec<f64>,
    pub max_abs_residual: f64,
}

fn check_consistent(traj: &Trajectory, path: &JumpPath) -> Result<()> {
    let events: Vec<_> = path.events.iter().filter(|e| e.time <= traj.horizon).collect();
    if events.len() != traj.jumps.len() {
        return Err(Error::MismatchedPath(format!(
            "{} jumps recorded, path has {} events up to T",
            traj.jumps.len(),
            events.len()
        )));
    }
    for (rec, ev) in traj.jumps.iter().zip(events) {
        if rec.time != ev.time || rec.atom != ev.atom {
            return Err(Error::MismatchedPath(format!(
                "jump at {} (atom {}) vs event at {} (atom {})",
                rec.time, rec.atom, ev.time, ev.atom
            )));
        }
    }
    Ok(())
}

/// Left-endpoint quadrature of the compensator drift over the stored
/// samples; record every step (`Recording::Stride(1)`) for an `O(dt)` residual.
pub fn mass_balance(traj: &Trajectory, path: &JumpPath, model: &NoiseModel, q: f64) -> Result<MassBalanceReport> {
    check_consistent(traj, path)?;
    let grid = model.grid();
    let mu = &model.compensator().mean_field;
    let mut atom_at_post = vec![None; traj.samples.len()];
    for j in &traj.jumps {
        atom_at_post[j.post] = Some(j.atom);
    }

    let norm_q = |n: f64| n.powf(q);
    let first = &traj.samples[0];
    let x_q = norm_q(l2_norm(&first.field, grid));
    let mut drift = 0.0;
    let mut jumps = 0.0;
    let mut times = vec![first.time];
    let mut residuals = vec![0.0];
    let mut prev_norm = l2_norm(&first.field, grid);
    for (i, &post_atom) in atom_at_post.iter().enumerate().skip(1) {
        let (prev, cur) = (&traj.samples[i - 1], &traj.samples[i]);
        let norm = l2_norm(&cur.field, grid);
        match (cur.kind, post_atom) {
            (SampleKind::PostJump, Some(atom)) => {
                let mut after = prev.field.clone();
                after += model.mark(atom);
                jumps += norm_q(l2_norm(&after, grid)) - norm_q(prev_norm);
            }
            _ => {
                let h = cur.time - prev.time;
                if h > 0.0 {
                    let power = if q == 2.0 { 1.0 } else { prev_norm.powf(q - 2.0) };
                    drift -= q * power * re_inner(&prev.field, mu, grid) * h;
                }
            }
        }
        times.push(cur.time);
        residuals.push(norm_q(norm) - x_q - drift - jumps);
        prev_norm = norm;
    }
    let max_abs_residual = residuals.iter().map(|r| r.abs()).fold(0.0, f64::max);
    Ok(MassBalanceReport {
        q,
        times,
        residual_series: residuals,
        max_abs_residual,
    })
}

/// The compensated-jump part of the `‖X‖^q` expansion at the final time,
///
/// ```text
/// Σ_i (‖X(s_i−) + z_i‖^q − ‖X(s_i−)‖^q) − ∫₀ᵀ Σ_j λ_j (‖X(s) + z_j‖^q − ‖X(s)‖^q) ds,
/// ```
///
/// which has mean zero over the ensemble of paths.
pub fn jump_martingale_term(traj: &Trajectory, path: &JumpPath, model: &NoiseModel, q: f64) -> Result<f64> {
    check_consistent(traj, path)?;
    let grid = model.grid();
    let mut total = 0.0;
    for j in &traj.jumps {
        let pre = &traj.samples[j.pre].field;
        let post = &traj.samples[j.post].field;
        total += l2_norm(post, grid).powf(q) - l2_norm(pre, grid).powf(q);
    }
    for w in traj.samples.windows(2) {
        let h = w[1].time - w[0].time;
        if h <= 0.0 {
            continue;
        }
        let u = &w[0].field;
        let base = l2_norm(u, grid).powf(q);
        let mut intensity = 0.0;
        for atom in model.atoms() {
            let mut shifted = u.clone();
            shifted += &atom.mark;
            intensity += atom.rate * (l2_norm(&shifted, grid).powf(q) - base);
        }
        total -= intensity * h;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{solve_path_on, Recording, SolverConfig};
    use crate::noise::{Atom, JumpEvent};
    use crate::spectral::{make_grid, Field, Grid};
    use rustfft::num_complex::Complex64;

    fn bump(grid: &Grid, amp: f64, c: f64) -> Field {
        Field::from_fn(grid, |x| Complex64::new(amp * (-(x[0] - c).powi(2)).exp(), 0.0))
    }

    fn cfg(dt: f64, horizon: f64) -> SolverConfig {
        SolverConfig::new(3.0, -1.0, dt, horizon, 1)
            .unwrap()
            .with_recording(Recording::Stride(1))
    }

    #[test]
    fn noiseless_residual_is_the_mass_defect() {
        let grid = make_grid(1, 128, 20.0).unwrap();
        let model = NoiseModel::empty(&grid);
        let x = bump(&grid, 1.0, 0.0);
        let path = JumpPath::empty(0.2);
        let traj = solve_path_on(&x, &path, Some(&model), &cfg(1e-3, 0.2), &grid).unwrap();
        let rep = mass_balance(&traj, &path, &model, 2.0).unwrap();
        assert!(rep.max_abs_residual < 1e-10);
        assert_eq!(rep.residual_series.len(), traj.samples.len());
    }

    #[test]
    fn symmetric_jumps_balance_exactly() {
        let grid = make_grid(1, 128, 20.0).unwrap();
        let z = bump(&grid, 0.3, 1.0);
        let minus = z.scaled(Complex64::new(-1.0, 0.0));
        let model = NoiseModel::new(
            &grid,
            vec![Atom { rate: 1.0, mark: z }, Atom { rate: 1.0, mark: minus }],
        )
        .unwrap();
        let path = JumpPath {
            horizon: 0.3,
            events: vec![
                JumpEvent { time: 0.05, atom: 0 },
                JumpEvent { time: 0.1234, atom: 1 },
                JumpEvent { time: 0.2, atom: 0 },
            ],
            seed: 0,
            stream: 0,
        };
        let x = bump(&grid, 0.8, -1.0);
        let traj = solve_path_on(&x, &path, Some(&model), &cfg(1e-3, 0.3), &grid).unwrap();
        let rep = mass_balance(&traj, &path, &model, 2.0).unwrap();
        assert!(rep.max_abs_residual < 1e-10, "{}", rep.max_abs_residual);
    }

    #[test]
    fn drift_residual_is_first_order() {
        let grid = make_grid(1, 128, 20.0).unwrap();
        let model = NoiseModel::new(
            &grid,
            vec![Atom {
                rate: 2.0,
                mark: bump(&grid, 0.5, 0.5),
            }],
        )
        .unwrap();
        let x = bump(&grid, 0.9, 0.0);
        let path = JumpPath::empty(0.5);
        let res: Vec<f64> = [2e-3, 1e-3, 5e-4]
            .iter()
            .map(|&dt| {
                let traj = solve_path_on(&x, &path, Some(&model), &cfg(dt, 0.5), &grid).unwrap();
                mass_balance(&traj, &path, &model, 4.0).unwrap().max_abs_residual
            })
            .collect();
        for w in res.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.7..2.3).contains(&ratio), "{res:?}");
        }
    }

    #[test]
    fn mismatched_path_is_rejected() {
        let grid = make_grid(1, 32, 10.0).unwrap();
        let model = NoiseModel::new(
            &grid,
            vec![Atom {
                rate: 1.0,
                mark: bump(&grid, 0.3, 0.0),
            }],
        )
        .unwrap();
        let path = JumpPath {
            horizon: 0.1,
            events: vec![JumpEvent { time: 0.05, atom: 0 }],
            seed: 0,
            stream: 0,
        };
        let x = bump(&grid, 0.5, 0.0);
        let traj = solve_path_on(&x, &path, Some(&model), &cfg(1e-2, 0.1), &grid).unwrap();
        let other = JumpPath::empty(0.1);
        assert!(matches!(
            mass_balance(&traj, &other, &model, 2.0),
            Err(Error::MismatchedPath(_))
        ));
        assert!(matches!(
            jump_martingale_term(&traj, &other, &model, 2.0),
            Err(Error::MismatchedPath(_))
        ));
    }
}
