use std::path::Path;

use jumpnls::harness::output::to_json_string;
use jumpnls::harness::{run_ensemble, ExperimentConfig};

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text, Path::new(".")).unwrap()
}

const BASE: &str = r#"{
  "grid": {"d": 1, "n": 128, "box_length": 20.0},
  "solver": {"alpha": 3.0, "lambda": 1.0, "dt": 0.01, "T": 0.5, "R": null},
  "initial": {"gaussian_bump": {"amplitude": 0.5, "width": 1.0}},
  "noise": {"atoms": [
    {"rate": 6.0, "mark": {"gaussian_bump": {"amplitude": 1.0, "width": 1.0, "center": 1.0}}, "normalize_to": 0.6}
  ]},
  "ensemble": {"n_paths": 24, "R_list": [1, 2, 4, 8], "q_list": [2], "seed": 3}
}"#;

#[test]
fn zero_rate_defocusing_run_is_always_covered() {
    let start = BASE.find("\"noise\"").unwrap();
    let end = BASE.find("\"ensemble\"").unwrap();
    let text = format!("{}\"noise\": {{\"atoms\": []}},\n  {}", &BASE[..start], &BASE[end..])
        .replace("\"n_paths\": 24", "\"n_paths\": 1");
    let run = run_ensemble(&config(&text)).unwrap();
    let levels = &run.report.levels;
    // ‖x‖ ≈ 0.63 and the space-time term stays below 1
    assert!(levels[1..].iter().all(|l| l.coverage == 1.0));
    assert_eq!(run.report.mean_jumps, 0.0);
    assert!(run.paths[0].events.is_empty());
}

#[test]
fn coverage_is_monotone_and_moments_settle() {
    let run = run_ensemble(&config(BASE)).unwrap();
    let r = &run.report;
    assert!(r.coverage_monotone);
    let cov: Vec<f64> = r.levels.iter().map(|l| l.coverage).collect();
    assert!(cov.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(r.coverage_trend.residuals.len(), 4);
    assert!(r.coverage_trend.c_fit >= 0.0);
    for l in &r.levels {
        assert_eq!(l.blow_ups, 0);
        assert!(l.moments[0].mean.is_finite());
        assert_eq!(l.sigma.bound_violations, 0);
    }
    let last = r.levels.len() - 1;
    if cov[last - 1] == 1.0 {
        assert_eq!(r.levels[last - 1].moments[0].mean, r.levels[last].moments[0].mean);
    }
}

#[test]
fn report_does_not_depend_on_thread_count() {
    let cfg = config(BASE);
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let parallel = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = serial.install(|| run_ensemble(&cfg)).unwrap();
    let b = parallel.install(|| run_ensemble(&cfg)).unwrap();
    assert_eq!(to_json_string(&a.report).unwrap(), to_json_string(&b.report).unwrap());
}

#[test]
fn paths_are_reproducible_from_seed_and_index() {
    let cfg = config(BASE);
    let run = run_ensemble(&cfg).unwrap();
    let grid = cfg.build_grid().unwrap();
    let model = cfg.build_noise(&grid).unwrap();
    let again = jumpnls::noise::sample_jump_path_indexed(&model, 0.5, 3, 7);
    assert_eq!(run.paths[7].events, again.events);
}
