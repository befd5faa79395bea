//! One function per CLI subcommand. Each writes its files under the output
//! directory and returns the CSV rows it prints.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::ensemble::{run_ensemble, EnsembleReport, SCHEMA_VERSION};
use super::output::{events_csv, series_csv, write_json};
use crate::analysis::stats::mean_std_error;
use crate::analysis::{
    f_roots, gaussian_packets, jump_martingale_term, mass_balance, strichartz_homog, strichartz_inhom,
    strichartz_stoch, tau_r, InhomogeneousReport, MassBalanceReport, RootsReport, StochasticReport, StrichartzReport,
};
use crate::dynamics::{solve_path_on, Recording, Trajectory};
use crate::noise::{sample_jump_path_indexed, JumpPath};
use crate::picard::{picard_solve, y_distance};
use crate::spectral::snapshot::write_snapshot;
use crate::spectral::{free_propagate, l2_norm, Field, Grid};
use crate::{Error, Result};

/// Settings shared by all subcommands.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub dump_state: bool,
}

impl RunOptions {
    fn seed(&self, cfg: &ExperimentConfig) -> u64 {
        self.seed.unwrap_or(cfg.ensemble.seed)
    }

    fn prepare(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out_dir)?;
        Ok(&self.out_dir)
    }
}

/// Output directory: command line, then config, then `out`.
pub fn resolve_out_dir(cli: Option<PathBuf>, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport {
    pub schema_version: u32,
    pub seed: u64,
    pub path_index: u64,
    pub horizon: f64,
    #[serde(rename = "R")]
    pub truncation: Option<f64>,
    pub n_jumps: usize,
    pub initial_l2: f64,
    pub final_l2: Option<f64>,
    pub sup_l2: Option<f64>,
    pub y_norm: Option<f64>,
    pub tau_r: Option<f64>,
    /// Time at which the discrete solution stopped being finite.
    pub blow_up: Option<f64>,
}

fn write_events(dir: &Path, path: &JumpPath, horizon: f64) -> Result<()> {
    let mut out = String::from("path,time,atom\n");
    for ev in path.events.iter().filter(|e| e.time <= horizon) {
        let _ = writeln!(out, "{},{:.16e},{}", path.stream, ev.time, ev.atom);
    }
    std::fs::write(dir.join("events.csv"), out)?;
    Ok(())
}

/// One path (stream 0 of the seed) at the configured truncation level.
pub fn simulate(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(SimulationReport, String)> {
    let dir = opts.prepare()?;
    let grid = cfg.build_grid()?;
    let x = cfg.build_initial(&grid)?;
    let model = cfg.build_noise(&grid)?;
    let solver = cfg.solver_config()?;
    let seed = opts.seed(cfg);
    let path = sample_jump_path_indexed(&model, solver.horizon, seed, 0);
    write_events(dir, &path, solver.horizon)?;
    let n_jumps = path.events.iter().filter(|e| e.time <= solver.horizon).count();
    let mut report = SimulationReport {
        schema_version: SCHEMA_VERSION,
        seed,
        path_index: 0,
        horizon: solver.horizon,
        truncation: cfg.solver.truncation,
        n_jumps,
        initial_l2: l2_norm(&x, &grid),
        final_l2: None,
        sup_l2: None,
        y_norm: None,
        tau_r: None,
        blow_up: None,
    };
    match solve_path_on(&x, &path, Some(&model), &solver, &grid) {
        Ok(traj) => {
            let p = solver.pair.p;
            std::fs::write(dir.join("series.csv"), series_csv(&traj.norms, p))?;
            report.final_l2 = Some(l2_norm(traj.final_field(), &grid));
            report.sup_l2 = Some(traj.sup_l2());
            report.y_norm = traj.norms.y_values(p).last().copied();
            report.tau_r = cfg.solver.truncation.map(|radius| tau_r(&traj.norms, radius, p));
            if opts.dump_state {
                dump(dir, &traj, &grid)?;
            }
        }
        Err(Error::NonFinite { time }) => report.blow_up = Some(time),
        Err(e) => return Err(e),
    }
    write_json(dir.join("report.json"), &report)?;
    let csv = format!(
        "seed,n_jumps,initial_l2,final_l2,sup_l2,y_norm,blow_up\n{},{},{:.16e},{},{},{},{}\n",
        seed,
        n_jumps,
        report.initial_l2,
        opt(report.final_l2),
        opt(report.sup_l2),
        opt(report.y_norm),
        opt(report.blow_up)
    );
    Ok((report, csv))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn dump(dir: &Path, traj: &Trajectory, grid: &Grid) -> Result<()> {
    write_snapshot(dir.join("initial_state.txt"), traj.initial_field(), grid)?;
    write_snapshot(dir.join("final_state.txt"), traj.final_field(), grid)
}

#[derive(Serialize)]
struct Timing {
    wall_seconds: f64,
    threads: usize,
}

/// Full ensemble; `report.json` holds only values that are a function of the
/// config and seed, wall-clock data goes to `timing.json`.
pub fn ensemble(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(EnsembleReport, String)> {
    let dir = opts.prepare()?;
    let mut cfg = cfg.clone();
    cfg.ensemble.seed = opts.seed(&cfg);
    let start = Instant::now();
    let run = run_ensemble(&cfg)?;
    let timing = Timing {
        wall_seconds: start.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
    };
    write_json(dir.join("report.json"), &run.report)?;
    write_json(dir.join("timing.json"), &timing)?;
    std::fs::write(dir.join("events.csv"), events_csv(&run.paths))?;
    if let Some(traj) = &run.sample_trajectory {
        std::fs::write(dir.join("series.csv"), series_csv(&traj.norms, run.report.p))?;
        if opts.dump_state {
            dump(dir, traj, &cfg.build_grid()?)?;
        }
    }
    let mut csv = String::from("R,q,moment,std_error,coverage,blow_ups,mean_lp_lr\n");
    for level in &run.report.levels {
        for m in &level.moments {
            let _ = writeln!(
                csv,
                "{},{},{:.16e},{:.16e},{:.16e},{},{:.16e}",
                level.radius, m.q, m.mean, m.std_error, level.coverage, level.blow_ups, level.mean_lp_lr
            );
        }
    }
    Ok((run.report, csv))
}

#[derive(Clone, Debug, Serialize)]
pub struct PicardCheckReport {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(rename = "R")]
    pub truncation: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub tolerance: f64,
    pub residuals: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `‖Z_picard − Z_split‖_{Y_T}` on the common step schedule.
    pub y_distance: f64,
}

/// Picard fixed point against the split-step solution on path 0.
pub fn picard_check(cfg: &ExperimentConfig, opts: &RunOptions, n_max: usize) -> Result<(PicardCheckReport, String)> {
    let dir = opts.prepare()?;
    let grid = cfg.build_grid()?;
    let x = cfg.build_initial(&grid)?;
    let model = cfg.build_noise(&grid)?;
    let solver = cfg.solver_config()?.with_recording(Recording::Stride(1));
    let seed = opts.seed(cfg);
    let path = sample_jump_path_indexed(&model, solver.horizon, seed, 0);
    let radius = solver.truncation;
    let rep = picard_solve(&x, &path, &model, &solver, radius, n_max, None)?;
    let traj = solve_path_on(&x, &path, Some(&model), &solver, &grid)?;
    let fields: Vec<Field> = traj.right_continuous().map(|s| s.field.clone()).collect();
    let times: Vec<f64> = traj.right_continuous().map(|s| s.time).collect();
    if times != rep.solution.times {
        return Err(Error::MismatchedPath("split-step and Picard schedules differ".into()));
    }
    let distance = y_distance(
        &times,
        &fields,
        &rep.solution.fields,
        &grid,
        solver.pair.p,
        solver.pair.r,
    );
    std::fs::write(dir.join("picard.csv"), rep.to_csv())?;
    if opts.dump_state {
        write_snapshot(
            dir.join("picard_final_state.txt"),
            rep.solution.fields.last().expect("nonempty"),
            &grid,
        )?;
    }
    let report = PicardCheckReport {
        schema_version: SCHEMA_VERSION,
        seed,
        truncation: cfg.solver.truncation,
        iterations: rep.iterations,
        converged: rep.converged,
        tolerance: rep.tolerance,
        ratios: rep.ratios(),
        residuals: rep.residuals.clone(),
        y_distance: distance,
    };
    write_json(dir.join("report.json"), &report)?;
    let csv = format!(
        "iterations,converged,final_residual,y_distance\n{},{},{:.16e},{:.16e}\n",
        report.iterations,
        report.converged,
        report.residuals.last().copied().unwrap_or(0.0),
        distance
    );
    Ok((report, csv))
}

#[derive(Clone, Debug, Serialize)]
pub struct StrichartzSummary {
    pub schema_version: u32,
    pub homogeneous: StrichartzReport,
    /// Same packets on a grid with twice the points per axis.
    pub homogeneous_refined: StrichartzReport,
    pub inhomogeneous: InhomogeneousReport,
    /// `max_k ‖Φ_f(t_k) − t_k S_{t_k}φ‖_{L²}` for `f(s) = S_sφ`.
    pub semigroup_identity_error: f64,
    pub stochastic: Vec<StochasticReport>,
}

/// Homogeneous, inhomogeneous and stochastic ratio estimates.
pub fn strichartz(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    samples: usize,
    n_paths: usize,
) -> Result<(StrichartzSummary, String)> {
    let dir = opts.prepare()?;
    let grid = cfg.build_grid()?;
    let model = cfg.build_noise(&grid)?;
    let solver = cfg.solver_config()?;
    let pair = solver.pair;
    let horizon = solver.horizon;
    let steps = crate::dynamics::time_grid(horizon, solver.dt).len() - 1;
    let seed = opts.seed(cfg);

    let phis = gaussian_packets(&grid, samples, seed);
    let homogeneous = strichartz_homog(&phis, pair, horizon, steps, &grid)?;
    let mut fine_spec = grid.spec();
    fine_spec.n *= 2;
    let fine = Grid::from_spec(fine_spec)?;
    let homogeneous_refined = strichartz_homog(&gaussian_packets(&fine, samples, seed), pair, horizon, steps, &fine)?;

    let h = horizon / steps as f64;
    let forcings: Vec<Vec<Field>> = phis
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let b = &phis[(i + 1) % phis.len()];
            let omega = 1.0 + i as f64;
            (0..steps)
                .map(|k| {
                    let t = k as f64 * h;
                    let mut f = free_propagate(a, t, &grid)?;
                    f.axpy(Complex64::from_polar(1.0, omega * t), b);
                    Ok(f)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let inhomogeneous = strichartz_inhom(&forcings, pair, pair, horizon, steps, &grid)?;
    let semigroup_identity_error = semigroup_identity_error(&phis[0], horizon, steps, &grid)?;

    let stochastic = cfg
        .ensemble
        .q_list
        .iter()
        .filter(|q| **q >= 2.0)
        .map(|&q| strichartz_stoch(&model, q, pair, horizon, steps, n_paths, seed))
        .collect::<Result<Vec<_>>>()?;

    let summary = StrichartzSummary {
        schema_version: SCHEMA_VERSION,
        homogeneous,
        homogeneous_refined,
        inhomogeneous,
        semigroup_identity_error,
        stochastic,
    };
    write_json(dir.join("report.json"), &summary)?;
    let mut csv = String::from("estimator,q,p,r,samples,n,estimate,std_error\n");
    let n = grid.n();
    let mut row = |name: &str, rep: &StrichartzReport, n: usize| {
        let _ = writeln!(
            csv,
            "{name},,{},{},{},{n},{:.16e},",
            exponent(rep.p),
            rep.r,
            rep.sample_count,
            rep.ratio_max
        );
    };
    row("homogeneous", &summary.homogeneous, n);
    row("homogeneous_refined", &summary.homogeneous_refined, 2 * n);
    row("inhomogeneous_energy", &summary.inhomogeneous.energy, n);
    row("inhomogeneous_spacetime", &summary.inhomogeneous.spacetime, n);
    for s in &summary.stochastic {
        let _ = writeln!(
            csv,
            "stochastic,{},{},{},{},{n},{:.16e},{:.16e}",
            s.q,
            exponent(s.p),
            s.r,
            s.n_paths,
            s.c_hat,
            s.c_hat_std_error
        );
    }
    std::fs::write(dir.join("strichartz.csv"), &csv)?;
    Ok((summary, csv))
}

fn exponent(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        p.to_string()
    }
}

/// Discrepancy between the discrete Duhamel integral of `f(s) = S_sφ` and
/// its closed form `t S_tφ`.
pub fn semigroup_identity_error(phi: &Field, horizon: f64, steps: usize, grid: &Grid) -> Result<f64> {
    let h = horizon / steps as f64;
    let forcing = (0..steps)
        .map(|k| free_propagate(phi, k as f64 * h, grid))
        .collect::<Result<Vec<_>>>()?;
    let series = crate::analysis::duhamel_series(&forcing, horizon, steps, grid)?;
    let mut worst: f64 = 0.0;
    for (k, u) in series.iter().enumerate() {
        let t = k as f64 * h;
        let mut diff = free_propagate(phi, t, grid)?.scaled(Complex64::new(t, 0.0));
        diff -= u;
        worst = worst.max(l2_norm(&diff, grid));
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct MassBalanceSummary {
    pub schema_version: u32,
    pub seed: u64,
    pub n_jumps: usize,
    pub reports: Vec<MassBalanceReport>,
    pub martingale_paths: usize,
    /// Ensemble mean and standard error of the compensated jump term, per q.
    pub martingale_mean: Vec<(f64, f64, f64)>,
}

/// Pathwise `‖X‖^q` balance on path 0, and the ensemble mean of the
/// compensated jump term over `martingale_paths` paths.
pub fn mass_balance_check(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    martingale_paths: usize,
) -> Result<(MassBalanceSummary, String)> {
    let dir = opts.prepare()?;
    let grid = cfg.build_grid()?;
    let x = cfg.build_initial(&grid)?;
    let model = cfg.build_noise(&grid)?;
    let solver = cfg.solver_config()?.with_recording(Recording::Stride(1));
    let seed = opts.seed(cfg);
    let qs = &cfg.ensemble.q_list;
    let path = sample_jump_path_indexed(&model, solver.horizon, seed, 0);
    let traj = solve_path_on(&x, &path, Some(&model), &solver, &grid)?;
    let reports = qs
        .iter()
        .map(|&q| mass_balance(&traj, &path, &model, q))
        .collect::<Result<Vec<_>>>()?;

    let terms = (0..martingale_paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = sample_jump_path_indexed(&model, solver.horizon, seed, i);
            match solve_path_on(&x, &path, Some(&model), &solver, &grid) {
                Ok(traj) => qs
                    .iter()
                    .map(|&q| jump_martingale_term(&traj, &path, &model, q).map(Some))
                    .collect(),
                Err(Error::NonFinite { .. }) => Ok(vec![None; qs.len()]),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<Vec<Option<f64>>>>>()?;
    let martingale_mean = qs
        .iter()
        .enumerate()
        .map(|(j, &q)| {
            let vals: Vec<f64> = terms.iter().filter_map(|t| t[j]).collect();
            let (m, se) = mean_std_error(&vals);
            (q, m, se)
        })
        .collect();

    let mut series = String::from("time");
    for q in qs {
        let _ = write!(series, ",residual_q{q}");
    }
    series.push('\n');
    for i in 0..traj.samples.len() {
        let _ = write!(series, "{:.16e}", traj.samples[i].time);
        for rep in &reports {
            let _ = write!(series, ",{:.16e}", rep.residual_series[i]);
        }
        series.push('\n');
    }
    std::fs::write(dir.join("mass_balance.csv"), series)?;

    let summary = MassBalanceSummary {
        schema_version: SCHEMA_VERSION,
        seed,
        n_jumps: traj.jumps.len(),
        reports,
        martingale_paths,
        martingale_mean,
    };
    let mut csv = String::from("q,dt,n_jumps,max_abs_residual,martingale_mean,martingale_std_error\n");
    for (rep, (_, m, se)) in summary.reports.iter().zip(&summary.martingale_mean) {
        let _ = writeln!(
            csv,
            "{},{},{},{:.16e},{:.16e},{:.16e}",
            rep.q, solver.dt, summary.n_jumps, rep.max_abs_residual, m, se
        );
    }
    let mut json = summary.clone();
    for r in &mut json.reports {
        r.residual_series.clear();
        r.times.clear();
    }
    write_json(dir.join("report.json"), &json)?;
    Ok((summary, csv))
}

#[derive(Clone, Debug, Serialize)]
pub struct RootsSummary {
    pub schema_version: u32,
    #[serde(flatten)]
    pub roots: RootsReport,
}

pub fn roots(k: f64, alpha: f64, out_dir: Option<&Path>) -> Result<(RootsSummary, String)> {
    let roots = f_roots(k, alpha)?;
    let summary = RootsSummary {
        schema_version: SCHEMA_VERSION,
        roots,
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        write_json(dir.join("report.json"), &summary)?;
    }
    let r = &summary.roots;
    let csv = format!(
        "K,alpha,c1,c2,upper\n{},{},{:.16e},{:.16e},{:.16e}\n",
        r.k, r.alpha, r.c1, r.c2, r.upper
    );
    Ok((summary, csv))
}
