//! Universal shape of a localized momentum density and its one-parameter fit.
//!
//! ```text
//! Π(p; ξ) = ∫₀^∞ π²η sinh(πη) e^{−(1+η²)|p|/4ξ} / (16ξ) · ((1+η²)/(1+cosh πη))² dη
//! ```
//!
//! With `a = |p|/4ξ` this is `e^{−a}/ξ · I(a)` where
//! `I(a) = ∫ g(η) e^{−aη²} dη` does not depend on ξ separately.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::quadrature;
use super::FitResult;
use crate::distribution::MomentumDistribution;
use crate::error::{Error, Result};

/// Relative accuracy requested from the η quadrature.
pub const QUADRATURE_REL_TOL: f64 = 1e-11;
/// The η range is cut where the integrand drops below this fraction of its peak.
pub const TRUNCATION: f64 = 1e-16;

/// `g(η) = π²η · sinh(πη)/(1+cosh πη)² · (1+η²)² / 16`, evaluated with
/// `t = e^{−πη}` so large η cannot overflow.
#[inline]
fn shape(eta: f64) -> f64 {
    let t = (-PI * eta).exp();
    let ratio = 2.0 * t * (1.0 - t) / (1.0 + t).powi(3);
    let s = 1.0 + eta * eta;
    PI * PI * eta * ratio * s * s / 16.0
}

/// `I(a)` for `a = |p|/4ξ ≥ 0`.
fn reduced_integral(a: f64) -> f64 {
    let f = |eta: f64| shape(eta) * (-a * eta * eta).exp();
    // march out past the (single) maximum until the integrand is negligible
    let step = 0.1 / (1.0 + a).sqrt();
    let mut eta = step;
    let mut peak = 0.0f64;
    let mut peak_at = 0.0;
    loop {
        let v = f(eta);
        if v > peak {
            peak = v;
            peak_at = eta;
        } else if v < TRUNCATION * peak {
            break;
        }
        eta += step;
    }
    let upper = eta;
    let left = quadrature::integrate(f, 0.0, peak_at, 0.0, QUADRATURE_REL_TOL);
    let right = quadrature::integrate(f, peak_at, upper, 0.0, QUADRATURE_REL_TOL);
    left.value + right.value
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi.is_finite() && xi > 0.0) {
        return Err(Error::config(
            "xi",
            format!("localization length must be > 0, got {xi}"),
        ));
    }
    Ok(())
}

/// `Π_loc(p; ξ)`.
pub fn gogolin_density(p: f64, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    let a = p.abs() / (4.0 * xi);
    Ok((-a).exp() / xi * reduced_integral(a))
}

/// `ln Π_loc(p; ξ)`, finite even where the density underflows.
pub fn gogolin_log_density(p: f64, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    let a = p.abs() / (4.0 * xi);
    Ok(-a - xi.ln() + reduced_integral(a).ln())
}

/// Settings for [`fit_gogolin`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GogolinFitOptions {
    /// Points with `|p|` above this are ignored.
    pub p_window: f64,
    /// Points with `|p|` below this are ignored.
    pub exclude_below: f64,
    /// Geometric scan range for bracketing the minimum.
    pub xi_min: f64,
    pub xi_max: f64,
}

impl Default for GogolinFitOptions {
    fn default() -> Self {
        GogolinFitOptions {
            p_window: 250.0,
            exclude_below: 5.0,
            xi_min: 0.1,
            xi_max: 1e4,
        }
    }
}

fn objective(points: &[(f64, f64)], xi: f64) -> f64 {
    points
        .iter()
        .map(|&(p, log_rho)| {
            let r = log_rho - gogolin_log_density(p, xi).expect("xi > 0");
            r * r
        })
        .sum()
}

/// Fits `ξ` by least squares between `ln Π(p)` and `ln Π_loc(p; ξ)` over
/// `exclude_below ≤ |p| ≤ p_window`. The minimum is bracketed on a geometric
/// scan and refined by golden-section search in `ln ξ`.
pub fn fit_gogolin(dist: &MomentumDistribution, opts: &GogolinFitOptions) -> Result<FitResult> {
    if !(opts.p_window > opts.exclude_below && opts.exclude_below >= 0.0) {
        return Err(Error::config("p_window", "window must extend beyond the excluded core"));
    }
    if !(opts.xi_min > 0.0 && opts.xi_max > opts.xi_min) {
        return Err(Error::config("xi_min", "scan range must be positive and increasing"));
    }
    let mut points = Vec::new();
    for (i, &rho) in dist.density.iter().enumerate() {
        let p = dist.grid.value(i);
        if p.abs() < opts.exclude_below || p.abs() > opts.p_window {
            continue;
        }
        if rho <= 0.0 {
            return Err(Error::Fit(format!("density vanishes at p = {p} inside the fit window")));
        }
        points.push((p, rho.ln()));
    }
    if points.len() < 2 {
        return Err(Error::Fit(format!(
            "only {} grid points inside the fit window",
            points.len()
        )));
    }

    const SCAN: usize = 64;
    let (lo, hi) = (opts.xi_min.ln(), opts.xi_max.ln());
    let scan: Vec<(f64, f64)> = (0..=SCAN)
        .map(|k| {
            let u = lo + (hi - lo) * k as f64 / SCAN as f64;
            (u, objective(&points, u.exp()))
        })
        .collect();
    let best = scan
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(k, _)| k)
        .expect("scan is nonempty");
    if best == 0 || best == SCAN {
        return Err(Error::Fit(format!(
            "minimum not bracketed in ξ ∈ [{}, {}]: best scan value at ξ = {:.4} (objective {:.4e})",
            opts.xi_min,
            opts.xi_max,
            scan[best].0.exp(),
            scan[best].1
        )));
    }

    // golden-section search on ln ξ
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (scan[best - 1].0, scan[best + 1].0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(&points, c.exp()), objective(&points, d.exp()));
    while (b - a).abs() > 1e-9 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(&points, c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(&points, d.exp());
        }
    }
    let xi = (0.5 * (a + b)).exp();
    let s_min = objective(&points, xi);

    // curvature of the objective in ξ gives the standard error
    let h = 1e-3 * xi;
    let curvature = (objective(&points, xi + h) - 2.0 * s_min + objective(&points, xi - h)) / (h * h);
    let dof = (points.len() - 1) as f64;
    let std_error = if curvature > 0.0 {
        (2.0 * s_min / dof / curvature).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(FitResult {
        estimate: xi,
        std_error,
        window: (opts.exclude_below, opts.p_window),
        residual_norm: s_min.sqrt(),
        n_points: points.len(),
    })
}
