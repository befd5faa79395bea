//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::SolverConfig;
use crate::noise::{Atom, NoiseModel};
use crate::spectral::snapshot::read_snapshot;
use crate::spectral::{l2_norm, GridSpec};
use crate::{Error, Field, Grid, Result};

/// A scalar or one value per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAxis<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Copy + Default> PerAxis<T> {
    fn axis(&self, i: usize) -> T {
        match self {
            PerAxis::One(v) => {
                if i == 0 {
                    *v
                } else {
                    T::default()
                }
            }
            PerAxis::Many(v) => v.get(i).copied().unwrap_or_default(),
        }
    }
}

impl<T: Default> Default for PerAxis<T> {
    fn default() -> Self {
        PerAxis::One(T::default())
    }
}

/// A field on the grid, used for noise marks and the initial datum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSpec {
    /// `a exp(−|x − c|²/(2w²))`
    GaussianBump {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: PerAxis<f64>,
    },
    /// `a exp(2πi m·x/L)`
    PlaneWave { amplitude: f64, mode: PerAxis<i64> },
    /// `a sech(a(x₁ − c))`, the focusing cubic soliton profile in one dimension.
    Sech {
        amplitude: f64,
        #[serde(default)]
        center: f64,
    },
    /// Snapshot file; relative paths resolve against the config file.
    File { path: PathBuf },
}

impl ProfileSpec {
    pub fn build(&self, grid: &Grid, base_dir: &Path) -> Result<Field> {
        let d = grid.dim();
        let field = match self {
            ProfileSpec::GaussianBump {
                amplitude,
                width,
                center,
            } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidConfig(format!("bump width {width} must be positive")));
                }
                let c = [center.axis(0), center.axis(1)];
                Field::from_fn(grid, |x| {
                    let r2: f64 = (0..d).map(|i| (x[i] - c[i]).powi(2)).sum();
                    Complex64::new(amplitude * (-r2 / (2.0 * width * width)).exp(), 0.0)
                })
            }
            ProfileSpec::PlaneWave { amplitude, mode } => {
                let m = [mode.axis(0) as f64, mode.axis(1) as f64];
                let k = std::f64::consts::TAU / grid.box_length();
                Field::from_fn(grid, |x| {
                    let arg: f64 = (0..d).map(|i| k * m[i] * x[i]).sum();
                    Complex64::from_polar(*amplitude, arg)
                })
            }
            ProfileSpec::Sech { amplitude, center } => Field::from_fn(grid, |x| {
                Complex64::new(amplitude / (amplitude * (x[0] - center)).cosh(), 0.0)
            }),
            ProfileSpec::File { path } => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base_dir.join(path)
                };
                let (spec, field) = read_snapshot(&full)?;
                if spec != grid.spec() {
                    return Err(Error::InvalidConfig(format!(
                        "{} holds a field for {spec:?}, config grid is {:?}",
                        full.display(),
                        grid.spec()
                    )));
                }
                field
            }
        };
        Ok(field)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub rate: f64,
    pub mark: ProfileSpec,
    /// Rescale the mark to this L² norm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize_to: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub alpha: f64,
    pub lambda: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Truncation level for single runs; `null` for none.
    #[serde(rename = "R", default)]
    pub truncation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n_paths: usize,
    #[serde(rename = "R_list")]
    pub r_list: Vec<f64>,
    pub q_list: Vec<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSpec {
    /// Strichartz constant used for the `σ_R^j` sequence.
    #[serde(default = "default_c_hat")]
    pub c_hat: f64,
}

fn default_c_hat() -> f64 {
    1.0
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self { c_hat: default_c_hat() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub solver: SolverSpec,
    pub initial: ProfileSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Directory that relative `file` paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text)?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &base).map_err(|e| match e {
            Error::Json(j) => Error::Parse {
                path: path.to_path_buf(),
                message: j.to_string(),
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        Grid::from_spec(self.grid)?;
        self.solver_config()?;
        let e = &self.ensemble;
        if e.n_paths == 0 {
            return Err(Error::InvalidConfig("n_paths must be at least 1".into()));
        }
        if e.r_list.is_empty() {
            return Err(Error::InvalidConfig("R_list is empty".into()));
        }
        if e.r_list.iter().any(|r| !(*r >= 1.0)) || e.r_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(format!(
                "R_list {:?} must be ascending and ≥ 1",
                e.r_list
            )));
        }
        if e.q_list.iter().any(|q| !(*q > 0.0 && q.is_finite())) {
            return Err(Error::InvalidConfig(format!("q_list {:?} must be positive", e.q_list)));
        }
        if !(self.analysis.c_hat > 0.0) {
            return Err(Error::InvalidConfig("analysis.c_hat must be positive".into()));
        }
        for a in &self.noise.atoms {
            if let Some(n) = a.normalize_to {
                if !(n > 0.0) {
                    return Err(Error::InvalidConfig(format!("normalize_to {n} must be positive")));
                }
            }
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid> {
        Grid::from_spec(self.grid)
    }

    /// Solver settings with the single-run truncation level.
    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let cfg = SolverConfig::new(s.alpha, s.lambda, s.dt, s.horizon, self.grid.d)?
            .with_truncation(s.truncation.unwrap_or(f64::INFINITY));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn build_initial(&self, grid: &Grid) -> Result<Field> {
        let x = self.initial.build(grid, &self.base_dir)?;
        if !x.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        Ok(x)
    }

    pub fn build_noise(&self, grid: &Grid) -> Result<NoiseModel> {
        let atoms = self
            .noise
            .atoms
            .iter()
            .map(|a| {
                let mut mark = a.mark.build(grid, &self.base_dir)?;
                if let Some(target) = a.normalize_to {
                    let norm = l2_norm(&mark, grid);
                    if norm == 0.0 {
                        return Err(Error::InvalidConfig("cannot normalize a zero mark".into()));
                    }
                    mark *= target / norm;
                }
                Ok(Atom { rate: a.rate, mark })
            })
            .collect::<Result<Vec<_>>>()?;
        NoiseModel::new(grid, atoms)
    }
}
