use serde::Serialize;

use crate::{Error, NormSeries, Result};

/// `τ_R = inf{t : ‖Z‖_{Y_t} > R}` on the stored samples, `T` if never.
pub fn tau_r(norms: &NormSeries, radius: f64, p: f64) -> f64 {
    let y = norms.y_values(p);
    norms
        .times
        .iter()
        .zip(&y)
        .find(|(_, &v)| v > radius)
        .map(|(&t, _)| t)
        .unwrap_or_else(|| norms.last_time().unwrap_or(0.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct StoppingReport {
    pub tau_r: Option<f64>,
    /// `σ^1 < σ^2 < … ≤ T`; the last entry is always `T`.
    pub sigma_sequence: Vec<f64>,
    /// `T_R = T ∧ (4Ĉ(2M_R)^{α−1})^{−1/(1−(α−1)d/4)}`.
    pub t_r_lower_bound: f64,
    pub n_intervals: usize,
    /// `M_R = Ĉ sup‖Z‖_{L²} + ‖M‖_{L^p(0,T;L^r)}`.
    pub m_r: f64,
}

impl StoppingReport {
    /// Increments `σ^{j+1} − σ^j`, starting from `σ^0 = 0`.
    pub fn increments(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.sigma_sequence
            .iter()
            .map(|&s| {
                let d = s - prev;
                prev = s;
                d
            })
            .collect()
    }

    /// `N ≤ ⌊T/T_R⌋ + 1`.
    pub fn count_within_bound(&self) -> bool {
        let horizon = self.sigma_sequence.last().copied().unwrap_or(0.0);
        let bound = (horizon / self.t_r_lower_bound).floor() + 1.0;
        (self.n_intervals as f64) <= bound
    }
}

/// Prefix integrals `∫₀^{t_i} ‖M‖_{L^r}^p` of a series, left-endpoint rule.
struct PrefixIntegral<'a> {
    series: &'a NormSeries,
    prefix: Vec<f64>,
    p: f64,
}

impl<'a> PrefixIntegral<'a> {
    fn new(series: &'a NormSeries, p: f64) -> Self {
        let mut prefix = Vec::with_capacity(series.len());
        let mut acc = 0.0;
        for i in 0..series.len() {
            if i > 0 {
                acc += series.lr_values[i - 1].powf(p) * (series.times[i] - series.times[i - 1]);
            }
            prefix.push(acc);
        }
        Self { series, prefix, p }
    }

    fn at(&self, t: f64) -> f64 {
        let idx = self.series.times.partition_point(|&s| s <= t);
        if idx == 0 {
            return 0.0;
        }
        let j = idx - 1;
        self.prefix[j] + self.series.lr_values[j].powf(self.p) * (t - self.series.times[j])
    }
}

/// The stopping times `σ^{j+1} = inf{t > σ^j : G_j(t) > 2^{−(α+1)}}` with
///
/// ```text
/// G_j(t) = Ĉ (t − σ^j)^{1−(α−1)d/4} (Ĉ sup_{[σ^j,t)} ‖Z‖_{L²} + ‖M‖_{L^p(σ^j,t;L^r)})^{α−1}
/// ```
///
/// evaluated at the stored sample times of `z_norms` (the sup is over
/// samples in `[σ^j, t)`). `m_norms` carries the `L^r` norms of the
/// stochastic convolution.
pub fn sigma_sequence(
    z_norms: &NormSeries,
    m_norms: &NormSeries,
    c_hat: f64,
    alpha: f64,
    d: usize,
    p: f64,
) -> Result<StoppingReport> {
    if !(c_hat > 0.0) {
        return Err(Error::InvalidInput(format!("constant {c_hat} must be positive")));
    }
    if z_norms.is_empty() || m_norms.is_empty() {
        return Err(Error::InvalidInput("empty norm series".into()));
    }
    if !p.is_finite() {
        return Err(Error::InvalidInput("stopping times need a finite p".into()));
    }
    let horizon = z_norms.last_time().expect("nonempty");
    let expo = 1.0 - (alpha - 1.0) * d as f64 / 4.0;
    if !(expo > 0.0) {
        return Err(Error::InvalidInput(format!(
            "alpha = {alpha} is not subcritical in d = {d}"
        )));
    }
    let threshold = 2f64.powf(-(alpha + 1.0));
    let integral = PrefixIntegral::new(m_norms, p);

    let m_r = c_hat * z_norms.sup_l2() + integral.at(horizon).powf(1.0 / p);
    let t_r = if m_r > 0.0 {
        horizon.min((4.0 * c_hat * (2.0 * m_r).powf(alpha - 1.0)).powf(-1.0 / expo))
    } else {
        horizon
    };

    let times = &z_norms.times;
    let mut sigmas = Vec::new();
    let mut start = 0.0;
    let mut i = 0;
    'outer: loop {
        // left-closed sup: samples at `start` belong to the new interval
        let mut sup: f64 = 0.0;
        let base = integral.at(start);
        while i < times.len() {
            let t = times[i];
            if t > start {
                let local = (integral.at(t) - base).max(0.0).powf(1.0 / p);
                let g = c_hat * (t - start).powf(expo) * (c_hat * sup + local).powf(alpha - 1.0);
                if g > threshold {
                    sigmas.push(t);
                    start = t;
                    continue 'outer;
                }
            }
            // absorb every sample at this time before moving on
            let group_time = t;
            while i < times.len() && times[i] == group_time {
                sup = sup.max(z_norms.l2_values[i]);
                i += 1;
            }
        }
        break;
    }
    if sigmas.last() != Some(&horizon) {
        sigmas.push(horizon);
    }
    Ok(StoppingReport {
        tau_r: None,
        n_intervals: sigmas.len(),
        sigma_sequence: sigmas,
        t_r_lower_bound: t_r,
        m_r,
    })
}

/// [`sigma_sequence`] plus `τ_R` for the given radius.
#[allow(clippy::too_many_arguments)]
pub fn stopping_report(
    z_norms: &NormSeries,
    m_norms: &NormSeries,
    c_hat: f64,
    alpha: f64,
    d: usize,
    p: f64,
    radius: f64,
) -> Result<StoppingReport> {
    let mut rep = sigma_sequence(z_norms, m_norms, c_hat, alpha, d, p)?;
    rep.tau_r = Some(tau_r(z_norms, radius, p));
    Ok(rep)
}
