//! Finite-activity Poisson random measure on the unit ball of L².
//!
//! The intensity is `ν = Σ_j λ_j δ_{z_j}`, so every compensator integral is
//! a finite sum and the stochastic convolution has a closed form:
//!
//! ```text
//! M(t) = Σ_{s_i ≤ t} S_{t−s_i} z_{j_i} − ∫₀ᵗ S_{t−s} μ ds,   μ = Σ_j λ_j z_j
//! ```
//!
//! with the drift integral evaluated per Fourier mode.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spectral::{drift_weight, l2_norm, propagator_phase, NormSeries};
use crate::{Error, Field, Grid, Result};

/// Slack on the ball boundary so marks rescaled to norm 1 are not rejected
/// over a last-bit rounding error.
const BALL_TOLERANCE: f64 = 1e-12;

/// One point mass of the intensity measure.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub rate: f64,
    pub mark: Field,
}

/// `ν = Σ λ_j δ_{z_j}` together with the spectra used by the convolution.
#[derive(Clone, Debug)]
pub struct NoiseModel {
    grid: Grid,
    atoms: Vec<Atom>,
    mark_norms: Vec<f64>,
    mark_spectra: Vec<Vec<Complex64>>,
    compensator: Compensator,
    mean_spectrum: Vec<Complex64>,
}

/// Checks rates and ball membership of every mark.
pub fn validate_noise_model(grid: &Grid, atoms: &[Atom]) -> Result<()> {
    for (index, atom) in atoms.iter().enumerate() {
        grid.check_field(&atom.mark)?;
        if !atom.mark.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        if !(atom.rate.is_finite() && atom.rate > 0.0) {
            return Err(Error::NonpositiveRate { index, rate: atom.rate });
        }
        let norm = l2_norm(&atom.mark, grid);
        if !(norm > 0.0 && norm <= 1.0 + BALL_TOLERANCE) {
            return Err(Error::MarkOutsideBall { index, norm });
        }
    }
    Ok(())
}

impl NoiseModel {
    pub fn new(grid: &Grid, atoms: Vec<Atom>) -> Result<Self> {
        validate_noise_model(grid, &atoms)?;
        let mark_norms: Vec<f64> = atoms.iter().map(|a| l2_norm(&a.mark, grid)).collect();
        let mark_spectra: Vec<Vec<Complex64>> = atoms
            .iter()
            .map(|a| {
                let mut hat = a.mark.as_slice().to_vec();
                grid.forward(&mut hat);
                hat
            })
            .collect();
        let mut mean_field = Field::zeros(grid.len());
        for atom in &atoms {
            mean_field.axpy(Complex64::new(atom.rate, 0.0), &atom.mark);
        }
        let mut mean_spectrum = mean_field.as_slice().to_vec();
        grid.forward(&mut mean_spectrum);
        let compensator = Compensator {
            second_moment: atoms.iter().zip(&mark_norms).map(|(a, n)| a.rate * n * n).sum(),
            rates_and_norms: atoms.iter().zip(&mark_norms).map(|(a, &n)| (a.rate, n)).collect(),
            mean_field,
        };
        Ok(Self {
            grid: grid.clone(),
            atoms,
            mark_norms,
            mark_spectra,
            compensator,
            mean_spectrum,
        })
    }

    /// `ν = 0`: no jumps and no drift.
    pub fn empty(grid: &Grid) -> Self {
        Self::new(grid, Vec::new()).expect("empty model is valid")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn mark(&self, index: usize) -> &Field {
        &self.atoms[index].mark
    }

    pub fn mark_norm(&self, index: usize) -> f64 {
        self.mark_norms[index]
    }

    pub fn total_rate(&self) -> f64 {
        self.atoms.iter().map(|a| a.rate).sum()
    }

    pub fn compensator(&self) -> &Compensator {
        &self.compensator
    }

    /// Fourier transform of the compensator drift `μ`.
    pub fn mean_spectrum(&self) -> &[Complex64] {
        &self.mean_spectrum
    }

    pub(crate) fn mark_spectrum(&self, index: usize) -> &[Complex64] {
        &self.mark_spectra[index]
    }

    /// Same marks, every rate multiplied by `factor`.
    pub fn with_scaled_rates(&self, factor: f64) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                rate: a.rate * factor,
                mark: a.mark.clone(),
            })
            .collect();
        Self::new(&self.grid, atoms)
    }
}

/// `μ = ∫_B z ν(dz)` and the moments `∫_B ‖z‖^q ν(dz)`.
#[derive(Clone, Debug)]
pub struct Compensator {
    pub mean_field: Field,
    pub second_moment: f64,
    rates_and_norms: Vec<(f64, f64)>,
}

impl Compensator {
    pub fn q_moment(&self, q: f64) -> f64 {
        self.rates_and_norms
            .iter()
            .map(|&(rate, norm)| rate * norm.powf(q))
            .sum()
    }
}

pub fn compensator_of(model: &NoiseModel) -> Compensator {
    model.compensator.clone()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub atom: usize,
}

/// One realization of the Poisson random measure on `(0, horizon]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpPath {
    pub horizon: f64,
    pub events: Vec<JumpEvent>,
    pub seed: u64,
    pub stream: u64,
}

impl JumpPath {
    pub fn empty(horizon: f64) -> Self {
        Self {
            horizon,
            events: Vec::new(),
            seed: 0,
            stream: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Generator for path `index` of an ensemble with master seed `seed`.
///
/// Each path gets its own ChaCha stream, so paths can be drawn in any order
/// or in parallel and still come out identical.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn sample_jump_path(model: &NoiseModel, horizon: f64, seed: u64) -> JumpPath {
    sample_jump_path_indexed(model, horizon, seed, 0)
}

/// Exponential inter-arrival times at total rate `Λ`, each event's atom drawn
/// with probability `λ_j / Λ`.
pub fn sample_jump_path_indexed(model: &NoiseModel, horizon: f64, seed: u64, index: u64) -> JumpPath {
    let mut path = JumpPath {
        horizon,
        events: Vec::new(),
        seed,
        stream: index,
    };
    let total = model.total_rate();
    if total <= 0.0 || horizon <= 0.0 {
        return path;
    }
    let mut rng = path_rng(seed, index);
    let wait = Exp::new(total).expect("positive rate");
    let pick = WeightedIndex::new(model.atoms.iter().map(|a| a.rate)).expect("positive rates");
    let mut t = 0.0;
    loop {
        t += wait.sample(&mut rng);
        if t > horizon {
            break;
        }
        path.events.push(JumpEvent {
            time: t,
            atom: pick.sample(&mut rng),
        });
    }
    path
}

/// `M(t)` evaluated directly from the closed form.
pub fn stochastic_convolution(path: &JumpPath, model: &NoiseModel, t: f64) -> Result<Field> {
    if t > path.horizon || t < 0.0 {
        return Err(Error::OutOfRange { t, end: path.horizon });
    }
    let grid = &model.grid;
    let k2 = grid.k_squared();
    let mut hat: Vec<Complex64> = model
        .mean_spectrum
        .iter()
        .zip(k2)
        .map(|(mu, &k)| -mu * drift_weight(k, t))
        .collect();
    for ev in path.events.iter().take_while(|e| e.time <= t) {
        let z = model.mark_spectrum(ev.atom);
        for ((h, zk), &k) in hat.iter_mut().zip(z).zip(k2) {
            *h += zk * propagator_phase(k, t - ev.time);
        }
    }
    grid.inverse(&mut hat);
    Ok(Field::from_vec(hat))
}

/// `M(t)` advanced forward in time in Fourier space, using
/// `M(t+h) = S_h M(t) + Σ_{t<s_i≤t+h} S_{t+h−s_i} z_{j_i} − ∫₀ʰ S_{h−s} μ ds`.
#[derive(Clone, Debug)]
pub struct ConvolutionTracker<'a> {
    model: &'a NoiseModel,
    path: &'a JumpPath,
    time: f64,
    next_event: usize,
    hat: Vec<Complex64>,
    // multipliers for the most recent step size
    cached: Option<(f64, Vec<Complex64>, Vec<Complex64>)>,
}

impl<'a> ConvolutionTracker<'a> {
    pub fn new(model: &'a NoiseModel, path: &'a JumpPath) -> Self {
        Self {
            model,
            path,
            time: 0.0,
            next_event: 0,
            hat: vec![Complex64::new(0.0, 0.0); model.grid.len()],
            cached: None,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if t < self.time || t > self.path.horizon {
            return Err(Error::OutOfRange {
                t,
                end: self.path.horizon,
            });
        }
        let h = t - self.time;
        let k2 = self.model.grid.k_squared();
        if h > 0.0 {
            if self.cached.as_ref().is_none_or(|c| c.0 != h) {
                let phase = k2.iter().map(|&k| propagator_phase(k, h)).collect();
                let weight = k2.iter().map(|&k| drift_weight(k, h)).collect();
                self.cached = Some((h, phase, weight));
            }
            let (_, phase, weight) = self.cached.as_ref().expect("filled above");
            for (((m, mu), ph), w) in self
                .hat
                .iter_mut()
                .zip(&self.model.mean_spectrum)
                .zip(phase)
                .zip(weight)
            {
                *m = *m * ph - mu * w;
            }
        }
        while let Some(ev) = self.path.events.get(self.next_event) {
            if ev.time > t {
                break;
            }
            let z = self.model.mark_spectrum(ev.atom);
            for ((m, zk), &k) in self.hat.iter_mut().zip(z).zip(k2) {
                *m += zk * propagator_phase(k, t - ev.time);
            }
            self.next_event += 1;
        }
        self.time = t;
        Ok(())
    }

    pub fn spectrum(&self) -> &[Complex64] {
        &self.hat
    }

    pub fn field(&self) -> Field {
        let mut out = self.hat.clone();
        self.model.grid.inverse(&mut out);
        Field::from_vec(out)
    }
}

/// `M` at each of the given nondecreasing times.
pub fn convolution_series(path: &JumpPath, model: &NoiseModel, times: &[f64]) -> Result<Vec<Field>> {
    let mut tracker = ConvolutionTracker::new(model, path);
    times
        .iter()
        .map(|&t| {
            tracker.advance_to(t)?;
            Ok(tracker.field())
        })
        .collect()
}

/// Norm series of `M` at the given nondecreasing times.
pub fn convolution_norms(path: &JumpPath, model: &NoiseModel, times: &[f64], r: f64) -> Result<NormSeries> {
    let mut tracker = ConvolutionTracker::new(model, path);
    let mut series = NormSeries::new(r);
    for &t in times {
        tracker.advance_to(t)?;
        series.push_field(t, &tracker.field(), &model.grid);
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{free_propagate, make_grid};

    fn bump(grid: &Grid, amplitude: f64, center: f64) -> Field {
        Field::from_fn(grid, |x| {
            Complex64::new(amplitude * (-(x[0] - center).powi(2)).exp(), 0.0)
        })
    }

    fn grid() -> Grid {
        make_grid(1, 128, 20.0).unwrap()
    }

    fn with_norm(grid: &Grid, u: Field, norm: f64) -> Field {
        let s = norm / l2_norm(&u, grid);
        u.scaled(Complex64::new(s, 0.0))
    }

    #[test]
    fn validation() {
        let g = grid();
        let z = with_norm(&g, bump(&g, 1.0, 0.0), 0.5);
        assert!(NoiseModel::new(
            &g,
            vec![Atom {
                rate: 2.0,
                mark: z.clone()
            }]
        )
        .is_ok());
        let big = with_norm(&g, bump(&g, 1.0, 0.0), 1.5);
        assert!(matches!(
            NoiseModel::new(&g, vec![Atom { rate: 2.0, mark: big }]),
            Err(Error::MarkOutsideBall { index: 0, .. })
        ));
        assert!(matches!(
            NoiseModel::new(&g, vec![Atom { rate: 0.0, mark: z }]),
            Err(Error::NonpositiveRate { index: 0, .. })
        ));
        assert!(matches!(
            NoiseModel::new(
                &g,
                vec![Atom {
                    rate: 1.0,
                    mark: Field::zeros(128)
                }]
            ),
            Err(Error::MarkOutsideBall { .. })
        ));
    }

    #[test]
    fn compensator_sums() {
        let g = grid();
        let z = with_norm(&g, bump(&g, 1.0, 0.0), 0.5);
        let m = NoiseModel::new(
            &g,
            vec![Atom {
                rate: 2.0,
                mark: z.clone(),
            }],
        )
        .unwrap();
        assert!((compensator_of(&m).second_moment - 0.5).abs() < 1e-14);

        let minus = z.scaled(Complex64::new(-1.0, 0.0));
        let sym = NoiseModel::new(&g, vec![Atom { rate: 1.5, mark: z }, Atom { rate: 1.5, mark: minus }]).unwrap();
        assert!(sym.compensator().mean_field.iter().all(|c| c.norm() == 0.0));

        let one = with_norm(&g, bump(&g, 1.0, 1.0), 1.0);
        let half = with_norm(&g, bump(&g, 1.0, -1.0), 0.5);
        let m = NoiseModel::new(&g, vec![Atom { rate: 1.0, mark: one }, Atom { rate: 2.0, mark: half }]).unwrap();
        assert!((m.compensator().q_moment(4.0) - 1.125).abs() < 1e-13);
    }

    #[test]
    fn sampling_is_reproducible_and_ordered() {
        let g = grid();
        let z = with_norm(&g, bump(&g, 1.0, 0.0), 0.5);
        let m = NoiseModel::new(&g, vec![Atom { rate: 3.0, mark: z }]).unwrap();
        let a = sample_jump_path_indexed(&m, 10.0, 42, 7);
        let b = sample_jump_path_indexed(&m, 10.0, 42, 7);
        assert_eq!(a, b);
        assert!(a.events.windows(2).all(|w| w[0].time < w[1].time));
        assert!(a.events.iter().all(|e| e.time > 0.0 && e.time <= 10.0));
        assert_ne!(a, sample_jump_path_indexed(&m, 10.0, 42, 8));
        assert!(sample_jump_path(&m, 0.0, 1).is_empty());
    }

    #[test]
    fn convolution_before_first_event_is_zero_for_symmetric_model() {
        let g = grid();
        let z = with_norm(&g, bump(&g, 1.0, 0.0), 0.5);
        let minus = z.scaled(Complex64::new(-1.0, 0.0));
        let m = NoiseModel::new(
            &g,
            vec![
                Atom {
                    rate: 1.0,
                    mark: z.clone(),
                },
                Atom { rate: 1.0, mark: minus },
            ],
        )
        .unwrap();
        let path = JumpPath {
            horizon: 2.0,
            events: vec![JumpEvent { time: 0.8, atom: 0 }],
            seed: 0,
            stream: 0,
        };
        let before = stochastic_convolution(&path, &m, 0.5).unwrap();
        assert!(before.iter().all(|c| c.norm() < 1e-15));
        let after = stochastic_convolution(&path, &m, 1.7).unwrap();
        let expected = free_propagate(&z, 0.9, &g).unwrap();
        assert!(after.max_abs_diff(&expected) < 1e-13);
        assert!(stochastic_convolution(&path, &m, 0.0)
            .unwrap()
            .iter()
            .all(|c| c.norm() == 0.0));
        assert!(matches!(
            stochastic_convolution(&path, &m, 2.5),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn drift_matches_riemann_sum() {
        let g = make_grid(1, 64, 10.0).unwrap();
        let z = with_norm(&g, bump(&g, 1.0, 0.5), 0.4);
        let m = NoiseModel::new(&g, vec![Atom { rate: 2.0, mark: z }]).unwrap();
        let path = JumpPath::empty(1.0);
        let t = 0.3;
        let exact = stochastic_convolution(&path, &m, t).unwrap();

        // midpoint Riemann sum of −∫₀ᵗ S_{t−s} μ ds, at dt = 1e-5 in Fourier space
        let steps = (t / 1e-5_f64).round() as usize;
        let dt = t / steps as f64;
        let mu = m.mean_spectrum();
        let mut acc = vec![Complex64::new(0.0, 0.0); g.len()];
        for i in 0..steps {
            let s = (i as f64 + 0.5) * dt;
            for ((a, m), &k) in acc.iter_mut().zip(mu).zip(g.k_squared()) {
                let (sn, cs) = (k * (t - s)).sin_cos();
                *a -= m * Complex64::new(cs, -sn) * dt;
            }
        }
        g.inverse(&mut acc);
        let oracle = Field::from_vec(acc);
        let mut diff = exact.clone();
        diff -= &oracle;
        let rel = l2_norm(&diff, &g) / l2_norm(&oracle, &g);
        assert!(rel < 1e-10, "{rel}");
    }

    #[test]
    fn tracker_agrees_with_direct_formula() {
        let g = grid();
        let z0 = with_norm(&g, bump(&g, 1.0, -2.0), 0.6);
        let z1 = with_norm(&g, bump(&g, 1.0, 3.0), 0.3);
        let m = NoiseModel::new(&g, vec![Atom { rate: 4.0, mark: z0 }, Atom { rate: 2.0, mark: z1 }]).unwrap();
        let path = sample_jump_path(&m, 1.0, 9);
        assert!(!path.is_empty());
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.025).collect();
        let series = convolution_series(&path, &m, &times).unwrap();
        for (t, f) in times.iter().zip(&series) {
            let direct = stochastic_convolution(&path, &m, *t).unwrap();
            assert!(direct.max_abs_diff(f) < 1e-12);
        }
    }
}
