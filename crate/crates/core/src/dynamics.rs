//! Split-step integration of the jump-driven equation along a fixed jump
//! path, with the optional `θ_R(‖Z‖_{Y_s})` truncation of the nonlinearity.
//!
//! Between jumps the drift `du = i[Δu − λ|u|^{α−1}u]dt − μ dt` is advanced by
//! Strang splitting `N(h/2) ∘ L(h) ∘ N(h/2)`, where `N` is the exact pointwise
//! phase rotation and `L` the exact affine flow of `u_t = iΔu − μ`. Jump times
//! split the enclosing step; at each jump `X(s) = X(s−) + z`.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::noise::{JumpPath, NoiseModel};
use crate::spectral::{drift_weight, propagator_phase, YAccumulator};
use crate::{AdmissiblePair, Error, Field, Grid, NormSeries, Result};

/// Smooth cutoff: 1 on `[0, 1]`, 0 on `[2, ∞)`, cubic smoothstep in between.
/// Its steepest slope is −1.5 at `x = 1.5`.
pub fn theta(x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::NegativeArgument(x));
    }
    Ok(if x <= 1.0 {
        1.0
    } else if x >= 2.0 {
        0.0
    } else {
        let s = x - 1.0;
        1.0 - 3.0 * s * s + 2.0 * s * s * s
    })
}

/// `θ(x / R)`; `R = ∞` switches the truncation off.
pub fn theta_r(x: f64, radius: f64) -> Result<f64> {
    if radius.is_infinite() {
        if x < 0.0 {
            return Err(Error::NegativeArgument(x));
        }
        return Ok(1.0);
    }
    theta(x / radius)
}

/// Which fields a [`Trajectory`] keeps. Norms are always kept at every step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Recording {
    /// Initial state, both sides of every jump, final state.
    Sparse,
    /// Additionally every `k`-th step of the base grid.
    Stride(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub alpha: f64,
    /// Sign of the nonlinearity: −1 focusing, +1 defocusing.
    pub lambda: f64,
    pub dt: f64,
    pub horizon: f64,
    /// Truncation level `R ≥ 1`; `f64::INFINITY` for the untruncated equation.
    pub truncation: f64,
    pub pair: AdmissiblePair,
    /// Multiplies the nonlinear term. 1 for the equation itself, 0 removes it.
    pub nonlinear_scale: f64,
    pub recording: Recording,
}

impl SolverConfig {
    pub fn new(alpha: f64, lambda: f64, dt: f64, horizon: f64, d: usize) -> Result<Self> {
        let upper = 1.0 + 4.0 / d as f64;
        if !(alpha > 1.0 && alpha < upper) {
            return Err(Error::InvalidConfig(format!("alpha = {alpha} outside (1, {upper})")));
        }
        let cfg = Self {
            alpha,
            lambda,
            dt,
            horizon,
            truncation: f64::INFINITY,
            pair: AdmissiblePair::for_exponent(alpha, d)?,
            nonlinear_scale: 1.0,
            recording: Recording::Sparse,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda != 1.0 && self.lambda != -1.0 {
            return Err(Error::InvalidConfig(format!("lambda = {} must be ±1", self.lambda)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!("T = {} must be positive", self.horizon)));
        }
        if !(self.truncation >= 1.0) {
            return Err(Error::InvalidConfig(format!("R = {} must be ≥ 1", self.truncation)));
        }
        if (self.pair.r - (self.alpha + 1.0)).abs() > 1e-12 {
            return Err(Error::InvalidConfig("pair must have r = alpha + 1".into()));
        }
        if let Recording::Stride(0) = self.recording {
            return Err(Error::InvalidConfig("recording stride must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn with_truncation(mut self, radius: f64) -> Self {
        self.truncation = radius;
        self
    }

    pub fn with_recording(mut self, recording: Recording) -> Self {
        self.recording = recording;
        self
    }

    pub fn with_nonlinear_scale(mut self, scale: f64) -> Self {
        self.nonlinear_scale = scale;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }
}

/// `|u|^{α−1}`, with the common integer cases done without `powf`.
#[inline]
pub(crate) fn modulus_power(c: Complex64, alpha: f64) -> f64 {
    if alpha == 3.0 {
        c.norm_sqr()
    } else if alpha == 2.0 {
        c.norm()
    } else {
        c.norm().powf(alpha - 1.0)
    }
}

fn rotate_phases(values: &mut [Complex64], angle_per_unit: f64, alpha: f64) {
    if angle_per_unit == 0.0 {
        return;
    }
    for c in values.iter_mut() {
        let (s, co) = (angle_per_unit * modulus_power(*c, alpha)).sin_cos();
        *c *= Complex64::new(co, -s);
    }
}

/// Exact flow of `i u_t = λ|u|^{α−1}u` over `dt`: `u ↦ u·e^{−iλ|u|^{α−1}dt}`.
pub fn nonlinear_phase_step(u: &Field, dt: f64, lambda: f64, alpha: f64) -> Field {
    let mut out = u.clone();
    rotate_phases(&mut out, lambda * dt, alpha);
    out
}

struct StepFactors {
    h: f64,
    phase: Vec<Complex64>,
    drift: Vec<Complex64>,
}

impl StepFactors {
    fn new(grid: &Grid, h: f64) -> Self {
        let k2 = grid.k_squared();
        Self {
            h,
            phase: k2.iter().map(|&k| propagator_phase(k, h)).collect(),
            drift: k2.iter().map(|&k| drift_weight(k, h)).collect(),
        }
    }
}

/// One Strang step with cached multipliers for the base step size.
pub struct Stepper {
    grid: Grid,
    alpha: f64,
    lambda: f64,
    scale: f64,
    mu_hat: Option<Vec<Complex64>>,
    base: StepFactors,
}

impl Stepper {
    /// `mu_hat` is the spectrum of the compensator drift, `None` when it vanishes.
    pub fn new(grid: &Grid, cfg: &SolverConfig, mu_hat: Option<&[Complex64]>) -> Self {
        let mu_hat = mu_hat.filter(|m| m.iter().any(|c| c.norm() != 0.0)).map(<[_]>::to_vec);
        Self {
            grid: grid.clone(),
            alpha: cfg.alpha,
            lambda: cfg.lambda,
            scale: cfg.nonlinear_scale,
            mu_hat,
            base: StepFactors::new(grid, cfg.dt),
        }
    }

    pub fn for_model(grid: &Grid, cfg: &SolverConfig, model: Option<&NoiseModel>) -> Self {
        Self::new(grid, cfg, model.map(NoiseModel::mean_spectrum))
    }

    /// Advances `u` by `h`; `coefficient` multiplies the nonlinearity (the
    /// truncation factor `θ_R`).
    pub fn step(&self, u: &mut Field, h: f64, coefficient: f64) {
        let angle = self.lambda * self.scale * coefficient * 0.5 * h;
        rotate_phases(u, angle, self.alpha);
        let fresh;
        let factors = if h == self.base.h {
            &self.base
        } else {
            fresh = StepFactors::new(&self.grid, h);
            &fresh
        };
        self.grid.forward(u);
        match &self.mu_hat {
            Some(mu) => {
                for (((c, ph), w), m) in u.iter_mut().zip(&factors.phase).zip(&factors.drift).zip(mu) {
                    *c = *c * ph - m * w;
                }
            }
            None => {
                for (c, ph) in u.iter_mut().zip(&factors.phase) {
                    *c *= ph;
                }
            }
        }
        self.grid.inverse(u);
        rotate_phases(u, angle, self.alpha);
    }
}

/// Single step from `u` with drift field `mu` and no truncation.
pub fn step(u: &Field, dt: f64, cfg: &SolverConfig, mu: &Field, grid: &Grid) -> Result<Field> {
    grid.check_field(u)?;
    grid.check_field(mu)?;
    let mut mu_hat = mu.as_slice().to_vec();
    grid.forward(&mut mu_hat);
    let stepper = Stepper::new(grid, cfg, Some(&mu_hat));
    let mut out = u.clone();
    stepper.step(&mut out, dt, 1.0);
    Ok(out)
}

/// Base time grid `0, dt, 2dt, …, T`; the last step is shortened if `T/dt`
/// is not an integer.
pub fn time_grid(horizon: f64, dt: f64) -> Vec<f64> {
    let ratio = horizon / dt;
    let mut steps = ratio.round() as usize;
    if (ratio - steps as f64).abs() > 1e-9 * ratio.max(1.0) {
        steps = ratio.ceil() as usize;
    }
    let mut times: Vec<f64> = (0..=steps).map(|k| (k as f64 * dt).min(horizon)).collect();
    if let Some(last) = times.last_mut() {
        *last = horizon;
    }
    times.dedup();
    times
}

/// Base grid merged with the event times in `(0, T]`, without duplicates.
pub fn step_schedule(horizon: f64, dt: f64, path: &JumpPath) -> Vec<f64> {
    let mut times = time_grid(horizon, dt);
    times.extend(path.events.iter().map(|e| e.time).filter(|&s| s > 0.0 && s <= horizon));
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleKind {
    Initial,
    Step,
    PreJump,
    PostJump,
    Final,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub kind: SampleKind,
    pub field: Field,
}

/// Indices of the two samples bracketing one jump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub time: f64,
    pub atom: usize,
    pub pre: usize,
    pub post: usize,
}

/// Càdlàg record of one solve: norms at every accepted step, a subset of
/// the fields, and the jump log.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub horizon: f64,
    pub norms: NormSeries,
    pub samples: Vec<Sample>,
    pub jumps: Vec<JumpRecord>,
}

impl Trajectory {
    pub fn initial_field(&self) -> &Field {
        &self.samples[0].field
    }

    pub fn final_field(&self) -> &Field {
        &self.samples.last().expect("trajectory has samples").field
    }

    /// Samples with the left limits at jump times removed.
    pub fn right_continuous(&self) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(|s| s.kind != SampleKind::PreJump)
    }

    pub fn sup_l2(&self) -> f64 {
        self.norms.sup_l2()
    }
}

struct Recorder {
    norms: NormSeries,
    acc: YAccumulator,
    samples: Vec<Sample>,
}

impl Recorder {
    fn record_norms(&mut self, t: f64, u: &Field, grid: &Grid) {
        self.norms.push_field(t, u, grid);
        let i = self.norms.len() - 1;
        self.acc.push(t, self.norms.l2_values[i], self.norms.lr_values[i]);
    }

    fn keep(&mut self, t: f64, kind: SampleKind, u: &Field) -> usize {
        self.samples.push(Sample {
            time: t,
            kind,
            field: u.clone(),
        });
        self.samples.len() - 1
    }
}

/// Integrates along `path` from `x` up to `cfg.horizon`.
///
/// With a finite truncation level the nonlinearity at the start of each step
/// is scaled by `θ_R` of the left-endpoint `Y`-norm of the trajectory so far.
pub fn solve_path(x: &Field, path: &JumpPath, model: Option<&NoiseModel>, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let grid = match model {
        Some(m) => m.grid().clone(),
        None => {
            return Err(Error::InvalidInput(
                "solve_path needs a noise model for its grid".into(),
            ));
        }
    };
    solve_path_on(x, path, model, cfg, &grid)
}

/// As [`solve_path`], with the grid given explicitly so `model` may be absent
/// (deterministic runs).
pub fn solve_path_on(
    x: &Field,
    path: &JumpPath,
    model: Option<&NoiseModel>,
    cfg: &SolverConfig,
    grid: &Grid,
) -> Result<Trajectory> {
    cfg.validate()?;
    grid.check_field(x)?;
    if !x.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    if path.horizon < cfg.horizon {
        return Err(Error::MismatchedPath(format!(
            "path horizon {} shorter than T = {}",
            path.horizon, cfg.horizon
        )));
    }
    if !path.is_empty() && model.is_none() {
        return Err(Error::MismatchedPath("path has events but no noise model".into()));
    }
    if let Some(m) = model {
        if m.grid() != grid {
            return Err(Error::InvalidInput("noise model lives on a different grid".into()));
        }
        if let Some(bad) = path.events.iter().find(|e| e.atom >= m.atoms().len()) {
            return Err(Error::MismatchedPath(format!("event atom {} out of range", bad.atom)));
        }
    }
    let stepper = Stepper::for_model(grid, cfg, model);
    let stride = match cfg.recording {
        Recording::Sparse => usize::MAX,
        Recording::Stride(k) => k,
    };
    let times = time_grid(cfg.horizon, cfg.dt);
    let events: Vec<_> = path.events.iter().filter(|e| e.time <= cfg.horizon).collect();

    let mut rec = Recorder {
        norms: NormSeries::new(cfg.pair.r),
        acc: YAccumulator::new(cfg.pair.p),
        samples: Vec::new(),
    };
    let mut jumps = Vec::with_capacity(events.len());
    let mut u = x.clone();
    let mut t = 0.0;
    rec.record_norms(t, &u, grid);
    rec.keep(t, SampleKind::Initial, &u);

    let advance = |u: &mut Field, t: f64, h: f64, acc: &YAccumulator| -> Result<()> {
        let coefficient = theta_r(acc.value(), cfg.truncation)?;
        stepper.step(u, h, coefficient);
        if !u.is_finite() {
            return Err(Error::NonFinite { time: t + h });
        }
        Ok(())
    };

    let mut next_event = 0;
    let last_index = times.len() - 1;
    for (k, &target) in times.iter().enumerate().skip(1) {
        while let Some(ev) = events.get(next_event).filter(|e| e.time <= target) {
            if ev.time > t {
                advance(&mut u, t, ev.time - t, &rec.acc)?;
                t = ev.time;
            }
            rec.record_norms(t, &u, grid);
            let pre = rec.keep(t, SampleKind::PreJump, &u);
            let model = model.expect("checked above");
            u += model.mark(ev.atom);
            rec.record_norms(t, &u, grid);
            let post = rec.keep(t, SampleKind::PostJump, &u);
            jumps.push(JumpRecord {
                time: t,
                atom: ev.atom,
                pre,
                post,
            });
            next_event += 1;
        }
        if target > t {
            advance(&mut u, t, target - t, &rec.acc)?;
            t = target;
            rec.record_norms(t, &u, grid);
            if k == last_index {
                rec.keep(t, SampleKind::Final, &u);
            } else if k % stride == 0 {
                rec.keep(t, SampleKind::Step, &u);
            }
        }
    }
    Ok(Trajectory {
        horizon: cfg.horizon,
        norms: rec.norms,
        samples: rec.samples,
        jumps,
    })
}
