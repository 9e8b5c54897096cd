//! Momentum grids and binned momentum densities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform momentum grid `p_i = start + i·spacing`. Each grid point is the
/// center of a bin of width `spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    pub start: f64,
    pub spacing: f64,
    pub len: usize,
}

impl MomentumGrid {
    pub fn new(start: f64, spacing: f64, len: usize) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::config("grid.spacing", format!("must be > 0, got {spacing}")));
        }
        if !start.is_finite() {
            return Err(Error::config("grid.start", "must be finite"));
        }
        if len < 2 {
            return Err(Error::config("grid.len", format!("need at least 2 points, got {len}")));
        }
        Ok(MomentumGrid { start, spacing, len })
    }

    /// Grid centered on zero with points `k·spacing`, `|k| ≤ ceil(half_width/spacing)`.
    pub fn symmetric(half_width: f64, spacing: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::config(
                "grid.half_width",
                format!("must be > 0, got {half_width}"),
            ));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::config("grid.spacing", format!("must be > 0, got {spacing}")));
        }
        let half = (half_width / spacing).ceil() as usize;
        Self::new(-(half as f64) * spacing, spacing, 2 * half + 1)
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        self.start + i as f64 * self.spacing
    }

    pub fn end(&self) -> f64 {
        self.value(self.len - 1)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.value(i))
    }

    /// Index of the bin containing `p`, or which side it overflows on.
    #[inline]
    pub fn locate(&self, p: f64) -> Placement {
        let k = ((p - self.start) / self.spacing).round();
        if k < 0.0 {
            Placement::Below
        } else if k >= self.len as f64 {
            Placement::Above
        } else {
            Placement::Inside(k as usize)
        }
    }

    /// Trapezoid-rule weight of point `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.len {
            0.5 * self.spacing
        } else {
            self.spacing
        }
    }

    /// True when the grid is mirror symmetric about `p = 0`.
    pub fn is_symmetric(&self) -> bool {
        let tol = 1e-9 * self.spacing;
        (self.start + self.end()).abs() < tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Below,
    Inside(usize),
    Above,
}

/// Normalized momentum density `Π(p, n)` on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumDistribution {
    pub grid: MomentumGrid,
    pub density: Vec<f64>,
    pub n_kicks: u64,
    pub n_samples: u64,
    /// Probability mass that fell below the grid (not included in `density`).
    pub overflow_below: f64,
    /// Probability mass that fell above the grid.
    pub overflow_above: f64,
}

impl MomentumDistribution {
    /// Wraps density values, rescaling so the trapezoid integral is one.
    pub fn from_density(grid: MomentumGrid, density: Vec<f64>, n_kicks: u64, n_samples: u64) -> Result<Self> {
        if density.len() != grid.len {
            return Err(Error::Numerical(format!(
                "density has {} values for a grid of {}",
                density.len(),
                grid.len
            )));
        }
        if let Some(bad) = density.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::Numerical(format!("invalid density value {bad}")));
        }
        let mut dist = MomentumDistribution {
            grid,
            density,
            n_kicks,
            n_samples,
            overflow_below: 0.0,
            overflow_above: 0.0,
        };
        let total = dist.integrate(|_, rho| rho);
        if total <= 0.0 {
            return Err(Error::Numerical("distribution carries no probability".into()));
        }
        dist.density.iter_mut().for_each(|d| *d /= total);
        Ok(dist)
    }

    /// Trapezoid-rule integral of `f(p, Π(p))`.
    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.integrate_where(|_| true, f)
    }

    /// Trapezoid integral using the full-grid weights, restricted to points
    /// accepted by `keep`. Disjoint restrictions therefore add up exactly.
    pub fn integrate_where(&self, keep: impl Fn(f64) -> bool, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.density
            .iter()
            .enumerate()
            .filter_map(|(i, &rho)| {
                let p = self.grid.value(i);
                keep(p).then(|| self.grid.weight(i) * f(p, rho))
            })
            .sum()
    }

    pub fn overflow(&self) -> f64 {
        self.overflow_below + self.overflow_above
    }

    /// Density at `p` by linear interpolation, zero outside the grid.
    pub fn interpolate(&self, p: f64) -> f64 {
        let t = (p - self.grid.start) / self.grid.spacing;
        if t < 0.0 || t > (self.grid.len - 1) as f64 {
            return 0.0;
        }
        let i = (t.floor() as usize).min(self.grid.len - 2);
        let frac = t - i as f64;
        self.density[i] * (1.0 - frac) + self.density[i + 1] * frac
    }
}

/// Accumulates probability mass into the bins of a grid.
#[derive(Debug, Clone)]
pub struct DensityAccumulator {
    grid: MomentumGrid,
    mass: Vec<f64>,
    below: f64,
    above: f64,
}

impl DensityAccumulator {
    pub fn new(grid: MomentumGrid) -> Self {
        DensityAccumulator {
            grid,
            mass: vec![0.0; grid.len],
            below: 0.0,
            above: 0.0,
        }
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    /// Deposits `weight` into the bin nearest to `p`.
    #[inline]
    pub fn deposit(&mut self, p: f64, weight: f64) {
        match self.grid.locate(p) {
            Placement::Inside(i) => self.mass[i] += weight,
            Placement::Below => self.below += weight,
            Placement::Above => self.above += weight,
        }
    }

    /// Adds the contents of `other` bin by bin.
    pub fn merge(&mut self, other: &DensityAccumulator) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.mass.iter_mut().zip(&other.mass) {
            *a += b;
        }
        self.below += other.below;
        self.above += other.above;
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum::<f64>() + self.below + self.above
    }

    /// Converts bin masses into a density normalized over the in-grid mass.
    /// Overflow is reported as a fraction of the total deposited mass.
    pub fn finish(self, n_kicks: u64, n_samples: u64) -> Result<MomentumDistribution> {
        let total = self.total();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::Numerical("no probability deposited".into()));
        }
        let (below, above) = (self.below / total, self.above / total);
        let density = self.mass.into_iter().map(|m| m / self.grid.spacing).collect();
        let mut dist = MomentumDistribution::from_density(self.grid, density, n_kicks, n_samples)?;
        dist.overflow_below = below;
        dist.overflow_above = above;
        Ok(dist)
    }
}

/// `∫|Π₁ − Π₂| dp` for two distributions on the same grid.
pub fn l1_distance(a: &MomentumDistribution, b: &MomentumDistribution) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::Numerical("distributions live on different grids".into()));
    }
    Ok(a.density
        .iter()
        .zip(&b.density)
        .enumerate()
        .map(|(i, (x, y))| a.grid.weight(i) * (x - y).abs())
        .sum())
}
