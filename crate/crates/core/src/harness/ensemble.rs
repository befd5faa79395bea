//! Monte Carlo driver over independent jump paths and truncation levels.

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use crate::analysis::sigma_sequence;
use crate::analysis::stats::{mean_std_error, tree_sum};
use crate::dynamics::{solve_path_on, time_grid, Trajectory};
use crate::noise::{convolution_norms, sample_jump_path_indexed, JumpEvent};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Outcome of one truncated solve.
#[derive(Clone, Debug)]
pub struct PathOutcome {
    pub sup_l2: f64,
    pub lp_lr: f64,
    pub covered: bool,
    pub tau_r: f64,
    pub n_intervals: usize,
    pub t_r_lower_bound: f64,
    pub within_bound: bool,
}

/// Per-path results across all truncation levels; `None` marks a blow-up.
#[derive(Clone, Debug)]
pub struct PathResult {
    pub index: u64,
    pub events: Vec<JumpEvent>,
    pub levels: Vec<Option<PathOutcome>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentEstimate {
    pub q: f64,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaSummary {
    pub c_hat: f64,
    pub max_intervals: usize,
    pub min_t_r_lower_bound: f64,
    /// Paths whose interval count exceeds `⌊T/T_R⌋ + 1`.
    pub bound_violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    #[serde(rename = "R")]
    pub radius: f64,
    /// `#{paths: τ_R = T} / n_paths`; blown-up paths count as not covered.
    pub coverage: f64,
    pub covered: usize,
    pub completed: usize,
    pub blow_ups: usize,
    /// `E sup_t ‖Z^R(t)‖^q_{L²}` over completed paths.
    pub moments: Vec<MomentEstimate>,
    pub mean_lp_lr: f64,
    pub mean_lp_lr_std_error: f64,
    pub sigma: SigmaSummary,
}

/// Least-squares fit of `1 − coverage ≈ C/R` through the origin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageFit {
    pub c_fit: f64,
    pub residuals: Vec<f64>,
    /// `(1 − coverage)·R` per level.
    pub scaled_exceedance: Vec<f64>,
    /// max/min of `scaled_exceedance` over levels where some path exceeded
    /// `R`; `None` with fewer than two such levels.
    pub band_ratio: Option<f64>,
    pub levels_with_exceedance: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleReport {
    pub schema_version: u32,
    pub n_paths: usize,
    pub seed: u64,
    pub horizon: f64,
    pub dt: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub p: f64,
    pub r: f64,
    pub initial_l2: f64,
    pub total_rate: f64,
    pub mean_jumps: f64,
    pub levels: Vec<LevelReport>,
    pub coverage_monotone: bool,
    pub coverage_trend: CoverageFit,
}

/// Ensemble report plus the per-path raw results behind it.
pub struct EnsembleRun {
    pub report: EnsembleReport,
    pub paths: Vec<PathResult>,
    /// Norm series of path 0 at the largest truncation level, if it completed.
    pub sample_trajectory: Option<Trajectory>,
}

/// `(mean, standard error)` of `sample^q`, summed in index order.
pub fn moment_estimate(samples: &[f64], q: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let powered: Vec<f64> = samples.iter().map(|s| s.powf(q)).collect();
    Ok(mean_std_error(&powered))
}

pub fn fit_coverage_trend(radii: &[f64], coverage: &[f64]) -> Result<CoverageFit> {
    if radii.len() != coverage.len() || radii.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 matched levels, got {} radii and {} coverages",
            radii.len(),
            coverage.len()
        )));
    }
    let x: Vec<f64> = radii.iter().map(|r| 1.0 / r).collect();
    let y: Vec<f64> = coverage.iter().map(|c| 1.0 - c).collect();
    let sxy = tree_sum(&x.iter().zip(&y).map(|(a, b)| a * b).collect::<Vec<_>>());
    let sxx = tree_sum(&x.iter().map(|a| a * a).collect::<Vec<_>>());
    let c_fit = (sxy / sxx).max(0.0);
    let residuals = x.iter().zip(&y).map(|(a, b)| b - c_fit * a).collect();
    let scaled: Vec<f64> = radii.iter().zip(&y).map(|(r, b)| r * b).collect();
    let positive: Vec<f64> = scaled.iter().copied().filter(|v| *v > 0.0).collect();
    let band_ratio = (positive.len() >= 2).then(|| {
        let max = positive.iter().copied().fold(f64::MIN, f64::max);
        let min = positive.iter().copied().fold(f64::MAX, f64::min);
        max / min
    });
    Ok(CoverageFit {
        c_fit,
        residuals,
        scaled_exceedance: scaled,
        band_ratio,
        levels_with_exceedance: positive.len(),
    })
}

/// Runs every path at every level of `R_list`. Path `i` uses jump stream
/// `i` of the master seed, so the result does not depend on scheduling.
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<EnsembleRun> {
    let grid = cfg.build_grid()?;
    let x = cfg.build_initial(&grid)?;
    let model = cfg.build_noise(&grid)?;
    let base = cfg.solver_config()?;
    let (p, r) = (base.pair.p, base.pair.r);
    let horizon = base.horizon;
    let e = &cfg.ensemble;
    let c_hat = cfg.analysis.c_hat;
    let times = time_grid(horizon, base.dt);
    let last_radius = *e.r_list.last().expect("validated nonempty");

    let solved = (0..e.n_paths as u64)
        .into_par_iter()
        .map(|index| {
            let path = sample_jump_path_indexed(&model, horizon, e.seed, index);
            let m_norms = convolution_norms(&path, &model, &times, r)?;
            let mut keep = None;
            let mut levels = Vec::with_capacity(e.r_list.len());
            for &radius in &e.r_list {
                let solver = base.clone().with_truncation(radius);
                let traj = match solve_path_on(&x, &path, Some(&model), &solver, &grid) {
                    Ok(t) => t,
                    Err(Error::NonFinite { .. }) => {
                        levels.push(None);
                        continue;
                    }
                    Err(other) => return Err(other),
                };
                let y = traj.norms.y_values(p);
                let exceed = traj.norms.times.iter().zip(&y).find(|(_, v)| **v > radius);
                let sigma = sigma_sequence(&traj.norms, &m_norms, c_hat, base.alpha, grid.dim(), p)?;
                levels.push(Some(PathOutcome {
                    sup_l2: traj.sup_l2(),
                    lp_lr: traj.norms.lp_lr(p),
                    covered: exceed.is_none(),
                    tau_r: exceed.map(|(t, _)| *t).unwrap_or(horizon),
                    n_intervals: sigma.n_intervals,
                    t_r_lower_bound: sigma.t_r_lower_bound,
                    within_bound: sigma.count_within_bound(),
                }));
                if index == 0 && radius == last_radius {
                    keep = Some(traj);
                }
            }
            let events = path.events.into_iter().filter(|ev| ev.time <= horizon).collect();
            Ok((PathResult { index, events, levels }, keep))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sample_trajectory = None;
    let mut paths = Vec::with_capacity(solved.len());
    for (res, keep) in solved {
        if keep.is_some() {
            sample_trajectory = keep;
        }
        paths.push(res);
    }

    let mut levels = Vec::with_capacity(e.r_list.len());
    for (li, &radius) in e.r_list.iter().enumerate() {
        let done: Vec<&PathOutcome> = paths.iter().filter_map(|pr| pr.levels[li].as_ref()).collect();
        let covered = done.iter().filter(|o| o.covered).count();
        let sups: Vec<f64> = done.iter().map(|o| o.sup_l2).collect();
        let moments = e
            .q_list
            .iter()
            .map(|&q| {
                let (mean, std_error) = moment_estimate(&sups, q).unwrap_or_else(|_| match sups.first() {
                    Some(s) => (s.powf(q), 0.0),
                    None => (f64::NAN, f64::NAN),
                });
                MomentEstimate { q, mean, std_error }
            })
            .collect();
        let lp: Vec<f64> = done.iter().map(|o| o.lp_lr).collect();
        let (mean_lp_lr, mean_lp_lr_std_error) = mean_std_error(&lp);
        let sigma = SigmaSummary {
            c_hat,
            max_intervals: done.iter().map(|o| o.n_intervals).max().unwrap_or(0),
            min_t_r_lower_bound: done.iter().map(|o| o.t_r_lower_bound).fold(f64::INFINITY, f64::min),
            bound_violations: done.iter().filter(|o| !o.within_bound).count(),
        };
        levels.push(LevelReport {
            radius,
            coverage: covered as f64 / e.n_paths as f64,
            covered,
            completed: done.len(),
            blow_ups: e.n_paths - done.len(),
            moments,
            mean_lp_lr,
            mean_lp_lr_std_error,
            sigma,
        });
    }
    let coverage: Vec<f64> = levels.iter().map(|l| l.coverage).collect();
    let coverage_monotone = coverage.windows(2).all(|w| w[0] <= w[1]);
    let coverage_trend = if e.r_list.len() >= 3 {
        fit_coverage_trend(&e.r_list, &coverage)?
    } else {
        CoverageFit {
            c_fit: f64::NAN,
            residuals: Vec::new(),
            scaled_exceedance: Vec::new(),
            band_ratio: None,
            levels_with_exceedance: 0,
        }
    };
    let jumps: Vec<f64> = paths.iter().map(|p| p.events.len() as f64).collect();
    let report = EnsembleReport {
        schema_version: SCHEMA_VERSION,
        n_paths: e.n_paths,
        seed: e.seed,
        horizon,
        dt: base.dt,
        alpha: base.alpha,
        lambda: base.lambda,
        p,
        r,
        initial_l2: crate::spectral::l2_norm(&x, &grid),
        total_rate: model.total_rate(),
        mean_jumps: tree_sum(&jumps) / jumps.len() as f64,
        levels,
        coverage_monotone,
        coverage_trend,
    };
    Ok(EnsembleRun {
        report,
        paths,
        sample_trajectory,
    })
}
