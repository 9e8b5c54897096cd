//! Physical parameters of the phase-shifted kicked rotor.
//!
//! The rotor Hamiltonian is `p²/2 + K Σ_n cos(x + a_n) δ(t − n)` in units where
//! `[x, p] = iℏ̄`. The kick phases `a_n` repeat with the period of the stored
//! sequence; the first delivered kick has index `n = 0`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant (J·s).
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Mass of a caesium-133 atom (kg).
pub const CESIUM_MASS: f64 = 132.905_451_961 * ATOMIC_MASS_UNIT;
/// Caesium D2 line wavelength (m).
pub const CESIUM_D2_WAVELENGTH: f64 = 852.347_27e-9;

/// Initial momentum width in units of ℏ̄ used when none is configured.
pub const DEFAULT_SIGMA_OVER_HBAR: f64 = 1.65;

/// Cyclic sequence of kick phases `a_n`, stored reduced into `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseSequence(Vec<f64>);

impl PhaseSequence {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::config("phases", "sequence must not be empty"));
        }
        if let Some(bad) = phases.iter().find(|a| !a.is_finite()) {
            return Err(Error::config("phases", format!("non-finite phase {bad}")));
        }
        Ok(PhaseSequence(phases.into_iter().map(normalize_angle).collect()))
    }

    /// All phases zero: the ordinary kicked rotor.
    pub fn unshifted() -> Self {
        PhaseSequence(vec![0.0])
    }

    pub fn period(&self) -> usize {
        self.0.len()
    }

    /// Phase of the kick with index `n`.
    #[inline]
    pub fn phase(&self, n: u64) -> f64 {
        self.0[(n % self.0.len() as u64) as usize]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// The period-3 sequence `(0, 2π/3, 0)` that breaks parity and supports the ratchet.
pub fn ratchet_phase_sequence() -> PhaseSequence {
    PhaseSequence(vec![0.0, 2.0 * PI / 3.0, 0.0])
}

/// Reduces an angle into `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Full physical configuration shared by the classical and quantum engines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Dimensionless kick strength `K`.
    pub kick_strength: f64,
    /// Effective Planck constant ℏ̄.
    pub hbar_eff: f64,
    pub phases: PhaseSequence,
    /// Standard deviation of the initial Gaussian momentum density.
    pub sigma: f64,
    pub seed: u64,
}

impl SimParams {
    /// Builds and validates a configuration. `sigma = None` selects `1.65·ℏ̄`.
    pub fn new(
        kick_strength: f64,
        hbar_eff: f64,
        phases: PhaseSequence,
        sigma: Option<f64>,
        seed: u64,
    ) -> Result<Self> {
        SimParams {
            kick_strength,
            hbar_eff,
            phases,
            sigma: sigma.unwrap_or(DEFAULT_SIGMA_OVER_HBAR * hbar_eff),
            seed,
        }
        .validate()
    }

    /// Parameters of the ratchet experiment: `K = 3.1`, phases `(0, 2π/3, 0)`,
    /// `σ = 1.65·ℏ̄`.
    pub fn ratchet(hbar_eff: f64, seed: u64) -> Result<Self> {
        Self::new(3.1, hbar_eff, ratchet_phase_sequence(), None, seed)
    }

    /// Checks every invariant and reduces the phases into `[0, 2π)`.
    pub fn validate(self) -> Result<Self> {
        if !(self.kick_strength.is_finite() && self.kick_strength >= 0.0) {
            return Err(Error::config(
                "kick_strength",
                format!("must be finite and >= 0, got {}", self.kick_strength),
            ));
        }
        if !(self.hbar_eff.is_finite() && self.hbar_eff > 0.0) {
            return Err(Error::config(
                "hbar_eff",
                format!("must be finite and > 0, got {}", self.hbar_eff),
            ));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::config(
                "sigma",
                format!("must be finite and >= 0, got {}", self.sigma),
            ));
        }
        let phases = PhaseSequence::new(self.phases.0)?;
        Ok(SimParams { phases, ..self })
    }

    #[inline]
    pub fn phase(&self, n: u64) -> f64 {
        self.phases.phase(n)
    }
}

/// Laboratory quantities fixing the dimensionless Planck constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentUnits {
    /// Kick period (s).
    pub pulse_period: f64,
    /// Standing-wave laser wavelength (m).
    pub wavelength: f64,
    /// Atomic mass (kg).
    pub atom_mass: f64,
}

impl ExperimentUnits {
    pub fn new(pulse_period: f64, wavelength: f64, atom_mass: f64) -> Result<Self> {
        let u = ExperimentUnits {
            pulse_period,
            wavelength,
            atom_mass,
        };
        u.check()?;
        Ok(u)
    }

    /// Caesium atoms on the D2 line with the given kick period.
    pub fn cesium(pulse_period: f64) -> Result<Self> {
        Self::new(pulse_period, CESIUM_D2_WAVELENGTH, CESIUM_MASS)
    }

    fn check(&self) -> Result<()> {
        let fields = [
            ("pulse_period", self.pulse_period),
            ("wavelength", self.wavelength),
            ("atom_mass", self.atom_mass),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn laser_wavenumber(&self) -> f64 {
        TAU / self.wavelength
    }
}

/// `ℏ̄ = 4ħ k_L² T₁ / M` with `k_L = 2π/λ_L`.
pub fn hbar_eff_from_units(u: &ExperimentUnits) -> Result<f64> {
    u.check()?;
    let k = u.laser_wavenumber();
    Ok(4.0 * HBAR_SI * k * k * u.pulse_period / u.atom_mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn ratchet_sequence_values() {
        let s = ratchet_phase_sequence();
        assert_eq!(s.as_slice(), &[0.0, 2.0 * PI / 3.0, 0.0]);
        assert_eq!(s.phase(0), 0.0);
        assert_eq!(s.phase(1), 2.0 * PI / 3.0);
        assert_eq!(s.phase(3), 0.0);
        assert_eq!(s.phase(4), 2.0 * PI / 3.0);
    }

    #[test]
    fn cyclic_lookup_matches_modular_indexing() {
        let s = ratchet_phase_sequence();
        let direct = [0.0, 2.0 * PI / 3.0, 0.0];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1_000_000 {
            let n: u64 = rng.random();
            assert_eq!(s.phase(n), direct[(n % 3) as usize]);
        }
    }

    #[test]
    fn paper_configuration_is_accepted() {
        let p = SimParams::new(3.1, 0.8, ratchet_phase_sequence(), Some(1.65 * 0.8), 1).unwrap();
        assert_eq!(p.kick_strength, 3.1);
        assert!((p.sigma - 1.32).abs() < 1e-12);
        assert_eq!(SimParams::ratchet(0.8, 1).unwrap(), p);
    }

    #[test]
    fn invalid_fields_are_named() {
        let e = SimParams::new(3.1, 0.0, ratchet_phase_sequence(), None, 0).unwrap_err();
        assert!(matches!(e, Error::Config { field: "hbar_eff", .. }), "{e}");
        let e = SimParams::new(-1.0, 1.0, ratchet_phase_sequence(), None, 0).unwrap_err();
        assert!(matches!(
            e,
            Error::Config {
                field: "kick_strength",
                ..
            }
        ));
        let e = SimParams::new(1.0, 1.0, ratchet_phase_sequence(), Some(-0.1), 0).unwrap_err();
        assert!(matches!(e, Error::Config { field: "sigma", .. }));
        let e = PhaseSequence::new(vec![]).unwrap_err();
        assert!(matches!(e, Error::Config { field: "phases", .. }));
    }

    #[test]
    fn phases_are_normalized() {
        let p = SimParams::new(1.0, 1.0, PhaseSequence::new(vec![TAU + 1.0, -0.5]).unwrap(), None, 0).unwrap();
        assert!((p.phase(0) - 1.0).abs() < 1e-12);
        assert!((p.phase(1) - (TAU - 0.5)).abs() < 1e-12);
        assert!(normalize_angle(-1e-300) < TAU);
    }

    #[test]
    fn hbar_calibration_points() {
        let fast = hbar_eff_from_units(&ExperimentUnits::cesium(7.67e-6).unwrap()).unwrap();
        let slow = hbar_eff_from_units(&ExperimentUnits::cesium(12.46e-6).unwrap()).unwrap();
        assert!((fast - 0.8).abs() < 0.01, "{fast}");
        assert!((slow - 1.3).abs() < 0.01, "{slow}");
        let ratio = (slow / fast) / (1.3 / 0.8);
        assert!((ratio - 1.0).abs() < 5e-3, "{ratio}");
    }

    #[test]
    fn hbar_monotonicity() {
        let base = ExperimentUnits::cesium(7.67e-6).unwrap();
        let h = hbar_eff_from_units(&base).unwrap();
        let doubled = ExperimentUnits {
            pulse_period: 2.0 * base.pulse_period,
            ..base
        };
        assert!((hbar_eff_from_units(&doubled).unwrap() / h - 2.0).abs() < 1e-12);
        let shorter_wave = ExperimentUnits {
            wavelength: 0.9 * base.wavelength,
            ..base
        };
        assert!(hbar_eff_from_units(&shorter_wave).unwrap() > h);
        let heavier = ExperimentUnits {
            atom_mass: 1.1 * base.atom_mass,
            ..base
        };
        assert!(hbar_eff_from_units(&heavier).unwrap() < h);
        assert!(ExperimentUnits::new(0.0, 1.0, 1.0).is_err());
    }
}
