//! Observables of momentum distributions and the fits built on them.

mod gogolin;
pub mod quadrature;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::distribution::MomentumDistribution;
use crate::error::{Error, Result};

pub use gogolin::{fit_gogolin, gogolin_density, gogolin_log_density, GogolinFitOptions};

/// Default `ζ` fit window in kicks.
pub const DEFAULT_ZETA_WINDOW: (u64, u64) = (5, 50);
/// Default half-width of the peak-population window (one sixth of the momentum period).
pub const DEFAULT_PEAK_HALF_WIDTH: f64 = TAU / 6.0;
/// Fraction of the `p > 0` mass that lies behind the anomalous-diffusion front.
pub const FRONT_QUANTILE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub energy: f64,
}

impl Moments {
    pub fn std_dev(&self) -> f64 {
        (self.energy - self.mean * self.mean).max(0.0).sqrt()
    }
}

/// `⟨p⟩` and `⟨p²⟩` by the trapezoid rule.
pub fn moments(dist: &MomentumDistribution) -> Moments {
    Moments {
        mean: dist.integrate(|p, rho| p * rho),
        energy: dist.integrate(|p, rho| p * p * rho),
    }
}

/// Kinetic energy carried by positive momenta, `∫_{p>0} p² Π dp`.
pub fn right_energy(dist: &MomentumDistribution) -> f64 {
    dist.integrate_where(|p| p > 0.0, |p, rho| p * p * rho)
}

/// Mirror of [`right_energy`] over `p < 0`.
pub fn left_energy(dist: &MomentumDistribution) -> f64 {
    dist.integrate_where(|p| p < 0.0, |p, rho| p * p * rho)
}

/// Values recorded at increasing kick counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub kicks: Vec<u64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(kicks: Vec<u64>, values: Vec<f64>) -> Result<Self> {
        if kicks.len() != values.len() {
            return Err(Error::config(
                "series",
                format!("{} kick counts for {} values", kicks.len(), values.len()),
            ));
        }
        if kicks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("series", "kick counts must be strictly increasing"));
        }
        Ok(TimeSeries { kicks, values })
    }

    pub fn len(&self) -> usize {
        self.kicks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kicks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.kicks.iter().copied().zip(self.values.iter().copied())
    }
}

/// Outcome of a one-parameter fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub estimate: f64,
    pub std_error: f64,
    /// Range of the independent variable used (kicks or momenta).
    pub window: (f64, f64),
    pub residual_norm: f64,
    pub n_points: usize,
}

/// Least-squares slope of `ln value` against `ln n` for `n` in `[n_min, n_max]`.
pub fn fit_power_law(series: &TimeSeries, window: (u64, u64)) -> Result<FitResult> {
    let (n_min, n_max) = window;
    if n_min == 0 || n_min > n_max {
        return Err(Error::config(
            "window",
            format!("invalid fit window [{n_min}, {n_max}]"),
        ));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (n, v) in series.iter().filter(|(n, _)| (n_min..=n_max).contains(n)) {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Fit(format!("non-positive value {v} at n = {n}")));
        }
        xs.push((n as f64).ln());
        ys.push(v.ln());
    }
    let count = xs.len();
    if count < 2 {
        return Err(Error::Fit(format!("{count} points in window [{n_min}, {n_max}]")));
    }
    let nf = count as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let std_error = if count > 2 {
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(FitResult {
        estimate: slope,
        std_error,
        window: (n_min as f64, n_max as f64),
        residual_norm: rss.sqrt(),
        n_points: count,
    })
}

/// Location and weight of the ballistic peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub location: f64,
    pub population: f64,
    pub half_width: f64,
    /// Momentum range searched for the maximum.
    pub search: (f64, f64),
}

/// Finds the density maximum within `2π` of `−2πn/3` and integrates the
/// density over `location ± half_width`.
pub fn track_peak(dist: &MomentumDistribution, n: u64, half_width: f64) -> Result<PeakReport> {
    if half_width.is_nan() || half_width <= 0.0 {
        return Err(Error::config("half_width", format!("must be > 0, got {half_width}")));
    }
    let expected = -TAU * n as f64 / 3.0;
    let search = (expected - TAU, expected + TAU);
    let (i, _) = dist
        .density
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let p = dist.grid.value(*i);
            p >= search.0 && p <= search.1
        })
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| {
            Error::Numerical(format!(
                "no grid points in the peak search window [{:.3}, {:.3}]",
                search.0, search.1
            ))
        })?;
    let location = dist.grid.value(i);
    let population = dist.integrate_where(|p| (p - location).abs() <= half_width, |_, rho| rho);
    Ok(PeakReport {
        location,
        population,
        half_width,
        search,
    })
}

/// `A = ½ ∫ |Π(p) − Π(−p)| dp`, zero for even densities and one for
/// densities supported on a single side.
pub fn asymmetry(dist: &MomentumDistribution) -> f64 {
    let grid = &dist.grid;
    let len = grid.len;
    let sum: f64 = if grid.is_symmetric() {
        (0..len)
            .map(|i| grid.weight(i) * (dist.density[i] - dist.density[len - 1 - i]).abs())
            .sum()
    } else {
        (0..len)
            .map(|i| grid.weight(i) * (dist.density[i] - dist.interpolate(-grid.value(i))).abs())
            .sum()
    };
    0.5 * sum
}

/// Mean momentum against its statistical resolution `4·std(p)/√N_eff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentCheck {
    pub n_kicks: u64,
    pub mean: f64,
    pub std_dev: f64,
    pub bound: f64,
}

impl CurrentCheck {
    pub fn vanishes(&self) -> bool {
        self.mean.abs() < self.bound
    }
}

pub fn current_check(dist: &MomentumDistribution, effective_samples: u64) -> CurrentCheck {
    let m = moments(dist);
    let std_dev = m.std_dev();
    CurrentCheck {
        n_kicks: dist.n_kicks,
        mean: m.mean,
        std_dev,
        bound: 4.0 * std_dev / (effective_samples.max(1) as f64).sqrt(),
    }
}

/// Momentum below which `quantile` of the `p > 0` mass lies, interpolated
/// linearly inside the crossing bin.
pub fn right_front(dist: &MomentumDistribution, quantile: f64) -> Result<f64> {
    let positive: Vec<(f64, f64)> = dist
        .density
        .iter()
        .enumerate()
        .filter_map(|(i, &rho)| {
            let p = dist.grid.value(i);
            (p > 0.0).then(|| (p, dist.grid.weight(i) * rho))
        })
        .collect();
    let total: f64 = positive.iter().map(|(_, w)| w).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Numerical(format!("no p > 0 mass after {} kicks", dist.n_kicks)));
    }
    let target = quantile * total;
    let mut cum = 0.0;
    for &(p, w) in &positive {
        if cum + w >= target {
            let frac = (target - cum) / w;
            return Ok(p - 0.5 * dist.grid.spacing + frac * dist.grid.spacing);
        }
        cum += w;
    }
    Ok(positive.last().expect("nonempty").0)
}

/// Power-law exponent of the right-side front (the 99th percentile of the
/// `p > 0` mass) across the given distributions; about `ζ/2` for
/// anomalous diffusion `⟨p²⟩_R ∝ n^ζ`.
pub fn front_exponent_check(dists: &[MomentumDistribution]) -> Result<FitResult> {
    if dists.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 distributions, got {}",
            dists.len()
        )));
    }
    let mut pairs: Vec<(u64, f64)> = dists
        .iter()
        .map(|d| Ok((d.n_kicks, right_front(d, FRONT_QUANTILE)?)))
        .collect::<Result<_>>()?;
    pairs.sort_by_key(|(n, _)| *n);
    let (kicks, values): (Vec<u64>, Vec<f64>) = pairs.into_iter().unzip();
    let first = kicks[0].max(1);
    let last = *kicks.last().expect("nonempty");
    fit_power_law(&TimeSeries::new(kicks, values)?, (first, last))
}
