//! Classical phase-shifted standard map.
//!
//! One period is an impulse `p ← p + K sin(x + a_n)` followed by unit free
//! flight `x ← x + p`. Momenta are kept unfolded so directed transport stays
//! visible; folding onto the torus happens only when building portraits.

use std::f64::consts::{PI, TAU};

use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{DensityAccumulator, MomentumDistribution, MomentumGrid};
use crate::error::{Error, Result};
use crate::model::SimParams;
use crate::sampling::sample_rng;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(x: f64, p: f64) -> Self {
        PhasePoint { x, p }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.p.is_finite()
    }

    /// The point folded into `[0, 2π) × [0, 2π)`.
    pub fn folded(&self) -> (f64, f64) {
        (fold(self.x), fold(self.p))
    }
}

#[inline]
fn fold(v: f64) -> f64 {
    let r = v.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wraps an angle difference into `[-π, π)`.
#[inline]
fn wrap_centered(v: f64) -> f64 {
    (v + PI).rem_euclid(TAU) - PI
}

/// One kick with index `n` followed by free flight.
#[inline]
pub fn kick_map_step(pt: PhasePoint, params: &SimParams, n: u64) -> PhasePoint {
    let p = pt.p + params.kick_strength * (pt.x + params.phase(n)).sin();
    PhasePoint { x: pt.x + p, p }
}

/// Jacobian `∂(x', p')/∂(x, p)` of [`kick_map_step`], row-major.
#[inline]
pub fn kick_map_jacobian(pt: PhasePoint, params: &SimParams, n: u64) -> [[f64; 2]; 2] {
    let c = params.kick_strength * (pt.x + params.phase(n)).cos();
    [[1.0 + c, 1.0], [c, 1.0]]
}

/// How initial momenta are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialMomentum {
    /// Gaussian of width `σ` centered on zero.
    Gaussian,
    /// Uniform over one momentum period `[-π, π)`: the phase-space average.
    UniformCell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalEnsemble {
    pub points: Vec<PhasePoint>,
    pub n_kicks_applied: u64,
}

/// Draws `count` points with `x₀` uniform on `[0, 2π)` and Gaussian `p₀`.
pub fn sample_initial_ensemble(count: usize, params: &SimParams) -> Result<ClassicalEnsemble> {
    sample_ensemble(count, params, InitialMomentum::Gaussian)
}

pub fn sample_ensemble(count: usize, params: &SimParams, momentum: InitialMomentum) -> Result<ClassicalEnsemble> {
    if count == 0 {
        return Err(Error::config("count", "ensemble needs at least one point"));
    }
    let angle = Uniform::new(0.0, TAU).expect("valid range");
    let cell = Uniform::new(-PI, PI).expect("valid range");
    let normal = Normal::new(0.0, params.sigma).map_err(|e| Error::config("sigma", e.to_string()))?;
    let seed = params.seed;
    let points = (0..count)
        .into_par_iter()
        .with_min_len(CHUNK)
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            let x = angle.sample(&mut rng);
            let p = match momentum {
                InitialMomentum::Gaussian => normal.sample(&mut rng),
                InitialMomentum::UniformCell => cell.sample(&mut rng),
            };
            PhasePoint { x, p }
        })
        .collect();
    Ok(ClassicalEnsemble {
        points,
        n_kicks_applied: 0,
    })
}

impl ClassicalEnsemble {
    pub fn from_points(points: Vec<PhasePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::config("points", "ensemble must not be empty"));
        }
        if points.iter().any(|q| !q.is_finite()) {
            return Err(Error::Numerical("non-finite phase-space point".into()));
        }
        Ok(ClassicalEnsemble {
            points,
            n_kicks_applied: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Applies `n_kicks` periods, continuing the kick index from where the
    /// ensemble left off.
    pub fn evolve(&mut self, params: &SimParams, n_kicks: u64) {
        let first = self.n_kicks_applied;
        self.points.par_chunks_mut(CHUNK).for_each(|chunk| {
            for q in chunk {
                let mut pt = *q;
                for n in first..first + n_kicks {
                    pt = kick_map_step(pt, params, n);
                }
                *q = pt;
            }
        });
        self.n_kicks_applied += n_kicks;
    }

    /// Mean and standard deviation of the momenta.
    pub fn momentum_stats(&self) -> (f64, f64) {
        let n = self.points.len() as f64;
        let mean = self.points.iter().map(|q| q.p).sum::<f64>() / n;
        let var = self.points.iter().map(|q| (q.p - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    }
}

/// Counts of folded points on a `bins_x × bins_p` grid over `[0, 2π)²`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhasePortrait {
    pub bins_x: usize,
    pub bins_p: usize,
    /// Row-major: `counts[ix * bins_p + ip]`.
    pub counts: Vec<u64>,
}

impl PhasePortrait {
    pub fn empty(bins_x: usize, bins_p: usize) -> Result<Self> {
        if bins_x == 0 || bins_p == 0 {
            return Err(Error::config("bins", "portrait needs at least one bin per axis"));
        }
        Ok(PhasePortrait {
            bins_x,
            bins_p,
            counts: vec![0; bins_x * bins_p],
        })
    }

    #[inline]
    pub fn cell_of(&self, pt: &PhasePoint) -> (usize, usize) {
        let (x, p) = pt.folded();
        let ix = ((x / TAU * self.bins_x as f64) as usize).min(self.bins_x - 1);
        let ip = ((p / TAU * self.bins_p as f64) as usize).min(self.bins_p - 1);
        (ix, ip)
    }

    pub fn count(&self, ix: usize, ip: usize) -> u64 {
        self.counts[ix * self.bins_p + ip]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Center of cell `(ix, ip)` in folded coordinates.
    pub fn cell_center(&self, ix: usize, ip: usize) -> (f64, f64) {
        (
            (ix as f64 + 0.5) * TAU / self.bins_x as f64,
            (ip as f64 + 0.5) * TAU / self.bins_p as f64,
        )
    }

    /// Adds another portrait of the same shape (superposition).
    pub fn add(&mut self, other: &PhasePortrait) -> Result<()> {
        if (self.bins_x, self.bins_p) != (other.bins_x, other.bins_p) {
            return Err(Error::config("bins", "cannot superpose portraits of different shapes"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

pub fn folded_phase_portrait(ensemble: &ClassicalEnsemble, bins_x: usize, bins_p: usize) -> Result<PhasePortrait> {
    let empty = PhasePortrait::empty(bins_x, bins_p)?;
    // integer counts: the reduction is exact whatever the split
    let counts = ensemble
        .points
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut local = vec![0u64; bins_x * bins_p];
            for q in chunk {
                let (ix, ip) = empty.cell_of(q);
                local[ix * bins_p + ip] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; bins_x * bins_p],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(PhasePortrait { counts, ..empty })
}

/// Normalized momentum density of the ensemble. Points outside the grid are
/// reported through the overflow fields of the result.
pub fn momentum_histogram(ensemble: &ClassicalEnsemble, grid: MomentumGrid) -> Result<MomentumDistribution> {
    let mut counts = vec![0u64; grid.len];
    let (mut below, mut above) = (0u64, 0u64);
    for q in &ensemble.points {
        match grid.locate(q.p) {
            crate::distribution::Placement::Inside(i) => counts[i] += 1,
            crate::distribution::Placement::Below => below += 1,
            crate::distribution::Placement::Above => above += 1,
        }
    }
    let n = ensemble.len() as f64;
    let mut acc = DensityAccumulator::new(grid);
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 {
            acc.deposit(grid.value(i), c as f64 / n);
        }
    }
    if below > 0 {
        acc.deposit(grid.start - grid.spacing, below as f64 / n);
    }
    if above > 0 {
        acc.deposit(grid.end() + grid.spacing, above as f64 / n);
    }
    acc.finish(ensemble.n_kicks_applied, ensemble.len() as u64)
}

/// A translating periodic orbit of the map: after one full phase period the
/// point returns to the same angle with its momentum shifted by `shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceleratorOrbit {
    /// Orbit point before the kick with index `first_kick`; `x ∈ [0, 2π)`, `p ∈ [-π, π)`.
    pub center: PhasePoint,
    pub first_kick: u64,
    pub period: u64,
    pub shift: f64,
    pub residual: f64,
    /// Trace of the period map Jacobian; `|trace| < 2` means an island.
    pub trace: f64,
}

impl AcceleratorOrbit {
    pub fn is_stable(&self) -> bool {
        self.trace.abs() < 2.0
    }
}

/// Residual-acceptance threshold for the Newton search.
pub const ORBIT_TOLERANCE: f64 = 1e-10;
const SEED_GRID: usize = 32;

fn period_map(q: PhasePoint, params: &SimParams, first: u64, period: u64) -> (PhasePoint, [[f64; 2]; 2]) {
    let mut pt = q;
    let mut jac = [[1.0, 0.0], [0.0, 1.0]];
    for n in first..first + period {
        let j = kick_map_jacobian(pt, params, n);
        jac = [
            [
                j[0][0] * jac[0][0] + j[0][1] * jac[1][0],
                j[0][0] * jac[0][1] + j[0][1] * jac[1][1],
            ],
            [
                j[1][0] * jac[0][0] + j[1][1] * jac[1][0],
                j[1][0] * jac[0][1] + j[1][1] * jac[1][1],
            ],
        ];
        pt = kick_map_step(pt, params, n);
    }
    (pt, jac)
}

/// `(map^period(q) − q − (0, shift))` with the angle part wrapped to `[-π, π)`.
pub fn orbit_residual(q: PhasePoint, params: &SimParams, first: u64, period: u64, shift: f64) -> [f64; 2] {
    let (end, _) = period_map(q, params, first, period);
    [wrap_centered(end.x - q.x), end.p - q.p - shift]
}

fn newton(seed: PhasePoint, params: &SimParams, first: u64, period: u64, shift: f64) -> Option<(PhasePoint, f64, f64)> {
    let mut q = seed;
    for _ in 0..60 {
        let (end, jac) = period_map(q, params, first, period);
        let f = [wrap_centered(end.x - q.x), end.p - q.p - shift];
        let norm = f[0].hypot(f[1]);
        if !norm.is_finite() {
            return None;
        }
        if norm < ORBIT_TOLERANCE {
            return Some((q, norm, jac[0][0] + jac[1][1]));
        }
        let a = [[jac[0][0] - 1.0, jac[0][1]], [jac[1][0], jac[1][1] - 1.0]];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det.abs() < 1e-14 {
            return None;
        }
        let mut dx = (a[1][1] * f[0] - a[0][1] * f[1]) / det;
        let mut dp = (a[0][0] * f[1] - a[1][0] * f[0]) / det;
        let step = dx.hypot(dp);
        if step > 1.0 {
            dx /= step;
            dp /= step;
        }
        q = PhasePoint::new(q.x - dx, q.p - dp);
    }
    None
}

/// Newton search for an orbit with `map^period(q) = q + (0, shift)`, seeded
/// from a 32×32 grid over one cell. Prefers stable (island) solutions.
pub fn find_translating_orbit(
    params: &SimParams,
    first_kick: u64,
    period: u64,
    shift: f64,
) -> Result<AcceleratorOrbit> {
    let h = TAU / SEED_GRID as f64;
    let roots: Vec<(PhasePoint, f64, f64)> = (0..SEED_GRID * SEED_GRID)
        .into_par_iter()
        .filter_map(|k| {
            let seed = PhasePoint::new(
                ((k / SEED_GRID) as f64 + 0.5) * h,
                ((k % SEED_GRID) as f64 + 0.5) * h - PI,
            );
            newton(seed, params, first_kick, period, shift)
        })
        .collect();
    let best = roots
        .iter()
        .min_by(|a, b| {
            let key = |r: &(PhasePoint, f64, f64)| (r.2.abs() >= 2.0, r.2.abs());
            key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
        })
        .ok_or_else(|| {
            Error::Numerical(format!(
                "no orbit with momentum shift {shift} over {period} kicks for K = {}",
                params.kick_strength
            ))
        })?;
    let center = PhasePoint::new(fold(best.0.x), wrap_centered(best.0.p));
    let r = orbit_residual(center, params, first_kick, period, shift);
    Ok(AcceleratorOrbit {
        center,
        first_kick,
        period,
        shift,
        residual: r[0].hypot(r[1]),
        trace: best.2,
    })
}

/// The accelerator mode of the ratchet sequence: momentum drops by `2π` per
/// phase period.
pub fn find_accelerator_orbit(params: &SimParams) -> Result<AcceleratorOrbit> {
    find_translating_orbit(params, 0, params.phases.period() as u64, -TAU)
}

/// Folded positions of the orbit before each kick of one period.
pub fn orbit_images(orbit: &AcceleratorOrbit, params: &SimParams) -> Vec<(f64, f64)> {
    let mut pt = orbit.center;
    let mut out = Vec::with_capacity(orbit.period as usize);
    for n in orbit.first_kick..orbit.first_kick + orbit.period {
        out.push(pt.folded());
        pt = kick_map_step(pt, params, n);
    }
    out
}
