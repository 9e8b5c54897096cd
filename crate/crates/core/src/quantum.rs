//! Quantum evolution on momentum lattices.
//!
//! A plane wave of momentum `p₀` is a Bloch wave of the 2π-periodic kick
//! potential with quasi-momentum `β = frac(p₀/ℏ̄)`. Its evolution stays on the
//! lattice `(m + β)ℏ̄`, `m ∈ ℤ`, which is truncated to a window of `M` sites.
//! One Floquet period applies the kick `exp(−i K cos(x + a_n)/ℏ̄)` on the
//! position grid `x_j = 2πj/M` and then the free flight `exp(−i p²/2ℏ̄)`.
//!
//! Amplitudes are stored in FFT order: slot `i` holds `m = i` for `i < M/2` and
//! `m = i − M` otherwise.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::distribution::{DensityAccumulator, MomentumDistribution, MomentumGrid};
use crate::error::{Error, Result};
use crate::model::SimParams;
use crate::sampling::sample_rng;

/// Largest lattice the adaptive growth may reach.
pub const MAX_LATTICE: usize = 1 << 20;
/// Fraction of lattice sites at each end watched for leakage.
pub const EDGE_FRACTION: f64 = 0.05;
/// Probability allowed in the watched edge sites before the lattice grows.
pub const EDGE_TOLERANCE: f64 = 1e-8;
/// Kicks covered by the starting lattice of a Monte Carlo run; transport
/// beyond this horizon is handled by adaptive growth.
pub const INITIAL_HORIZON: u64 = 64;
const MIN_LATTICE: usize = 16;

/// Wavefunction of one quasi-momentum class.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    beta: f64,
    hbar: f64,
    amps: Vec<Complex64>,
}

impl QuantumState {
    /// Builds a state from amplitudes indexed by `m = m_start, m_start + 1, …`.
    pub fn from_amplitudes(beta: f64, hbar: f64, size: usize, m_start: i64, amps: &[Complex64]) -> Result<Self> {
        check_size(size)?;
        let mut state = QuantumState {
            beta,
            hbar,
            amps: vec![Complex64::new(0.0, 0.0); size],
        };
        for (k, &a) in amps.iter().enumerate() {
            let m = m_start + k as i64;
            let slot = state
                .slot(m)
                .ok_or_else(|| Error::config("p0", format!("m = {m} lies outside a lattice of {size} sites")))?;
            state.amps[slot] = a;
        }
        Ok(state)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn lattice_size(&self) -> usize {
        self.amps.len()
    }

    /// Storage slot of lattice index `m`, if it is inside the window.
    #[inline]
    pub fn slot(&self, m: i64) -> Option<usize> {
        let half = (self.amps.len() / 2) as i64;
        if m < -half || m >= half {
            None
        } else if m >= 0 {
            Some(m as usize)
        } else {
            Some((m + 2 * half) as usize)
        }
    }

    /// Lattice index held in storage slot `i`.
    #[inline]
    pub fn index_at(&self, i: usize) -> i64 {
        let size = self.amps.len();
        if i < size / 2 {
            i as i64
        } else {
            i as i64 - size as i64
        }
    }

    pub fn amplitude(&self, m: i64) -> Complex64 {
        self.slot(m).map_or(Complex64::new(0.0, 0.0), |i| self.amps[i])
    }

    #[inline]
    pub fn momentum(&self, m: i64) -> f64 {
        (m as f64 + self.beta) * self.hbar
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability held in the outer [`EDGE_FRACTION`] of sites at either end.
    pub fn edge_probability(&self) -> f64 {
        let size = self.amps.len();
        let e = ((EDGE_FRACTION * size as f64).ceil() as usize).max(1);
        self.amps[size / 2 - e..size / 2 + e].iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// Doubles the lattice, keeping every amplitude at its lattice index.
    pub fn grow(&mut self) -> Result<()> {
        let size = self.amps.len();
        let new_size = 2 * size;
        if new_size > MAX_LATTICE {
            return Err(Error::GridCap {
                cap: MAX_LATTICE,
                requested: new_size,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); new_size];
        amps[..size / 2].copy_from_slice(&self.amps[..size / 2]);
        amps[new_size - size / 2..].copy_from_slice(&self.amps[size / 2..]);
        self.amps = amps;
        Ok(())
    }

    /// Probabilities `|ψ_m|²` in increasing `m`, starting at `m = −M/2`.
    pub fn density(&self) -> LatticeDensity {
        let size = self.amps.len();
        let half = size / 2;
        let prob = self.amps[half..]
            .iter()
            .chain(&self.amps[..half])
            .map(|a| a.norm_sqr())
            .collect();
        LatticeDensity {
            beta: self.beta,
            hbar: self.hbar,
            m_start: -(half as i64),
            prob,
        }
    }
}

/// Momentum-lattice probabilities of one quasi-momentum class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeDensity {
    pub beta: f64,
    pub hbar: f64,
    pub m_start: i64,
    pub prob: Vec<f64>,
}

impl LatticeDensity {
    /// `(p, probability)` pairs in increasing momentum.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.prob
            .iter()
            .enumerate()
            .map(move |(k, &w)| (((self.m_start + k as i64) as f64 + self.beta) * self.hbar, w))
    }

    pub fn probability(&self, m: i64) -> f64 {
        let k = m - self.m_start;
        if k < 0 || k as usize >= self.prob.len() {
            0.0
        } else {
            self.prob[k as usize]
        }
    }

    pub fn m_range(&self) -> std::ops::Range<i64> {
        self.m_start..self.m_start + self.prob.len() as i64
    }
}

fn check_size(size: usize) -> Result<()> {
    if size < 2 || !size.is_multiple_of(2) {
        return Err(Error::config(
            "lattice_size",
            format!("must be even and >= 2, got {size}"),
        ));
    }
    if size > MAX_LATTICE {
        return Err(Error::GridCap {
            cap: MAX_LATTICE,
            requested: size,
        });
    }
    Ok(())
}

/// Plane wave of momentum `p0` on a lattice of `size` sites.
pub fn initial_state(p0: f64, params: &SimParams, size: usize) -> Result<QuantumState> {
    check_size(size)?;
    if !p0.is_finite() {
        return Err(Error::config("p0", "initial momentum must be finite"));
    }
    let hbar = params.hbar_eff;
    let ratio = p0 / hbar;
    let m0 = ratio.floor();
    let beta = ratio - m0;
    let half = (size / 2) as f64;
    if m0 < -half || m0 >= half {
        return Err(Error::config(
            "p0",
            format!("p0 = {p0} lies outside the window of {size} sites at ħ = {hbar}"),
        ));
    }
    QuantumState::from_amplitudes(beta, hbar, size, m0 as i64, &[Complex64::new(1.0, 0.0)])
}

/// Even (power of two) lattice size whose half-window `ℏ̄·M/2` exceeds the
/// ballistic reach `2π n/3`, the initial spread `10σ`, and a `16ℏ̄` margin.
pub fn grid_size_for(params: &SimParams, n_kicks: u64, sigma: f64) -> usize {
    let reach = (TAU * n_kicks as f64 / 3.0).max(10.0 * sigma) + 16.0 * params.hbar_eff;
    let half_sites = (reach / params.hbar_eff).floor() as usize + 1;
    (2 * half_sites).next_power_of_two().max(MIN_LATTICE)
}

/// FFT plans and kick phases for one lattice size.
struct FloquetTables {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// One table per entry of the phase sequence.
    kicks: Vec<Vec<Complex64>>,
    scratch_len: usize,
}

/// Floquet propagation for one parameter set. Per-size tables are cached and
/// shared between threads.
pub struct FloquetEngine {
    params: SimParams,
    tables: Mutex<HashMap<usize, Arc<FloquetTables>>>,
}

impl FloquetEngine {
    pub fn new(params: &SimParams) -> Self {
        FloquetEngine {
            params: params.clone(),
            tables: Mutex::new(HashMap::new()),
        }
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    fn tables(&self, size: usize) -> Arc<FloquetTables> {
        let mut cache = self.tables.lock().expect("table cache poisoned");
        cache
            .entry(size)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                let forward = planner.plan_fft_forward(size);
                let inverse = planner.plan_fft_inverse(size);
                let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
                let strength = self.params.kick_strength / self.params.hbar_eff;
                let kicks = self
                    .params
                    .phases
                    .as_slice()
                    .iter()
                    .map(|&a| {
                        (0..size)
                            .map(|j| {
                                let x = TAU * j as f64 / size as f64;
                                Complex64::from_polar(1.0, -strength * (x + a).cos())
                            })
                            .collect()
                    })
                    .collect();
                Arc::new(FloquetTables {
                    size,
                    forward,
                    inverse,
                    kicks,
                    scratch_len,
                })
            })
            .clone()
    }

    /// Stepper bound to the lattice size and quasi-momentum of `state`.
    pub fn propagator(&self, state: &QuantumState) -> Propagator {
        let tables = self.tables(state.lattice_size());
        let size = tables.size;
        let hbar = self.params.hbar_eff;
        let inv = 1.0 / size as f64;
        let flight = (0..size)
            .map(|i| {
                let m = state.index_at(i) as f64 + state.beta;
                Complex64::from_polar(inv, -0.5 * hbar * m * m)
            })
            .collect();
        Propagator {
            scratch: vec![Complex64::new(0.0, 0.0); tables.scratch_len],
            tables,
            flight,
            beta: state.beta,
            period: self.params.phases.period() as u64,
        }
    }

    /// One Floquet period with kick index `n`.
    pub fn floquet_step(&self, state: &mut QuantumState, n: u64) {
        self.propagator(state).step(state, n);
    }

    /// Evolves `state` by `n_kicks` periods starting at kick index
    /// `first_kick`, growing the lattice whenever probability reaches its edge.
    /// `on_record(n, state)` is called after `n` kicks for every `n` in
    /// `record_at` (which must be sorted and not exceed `n_kicks`).
    pub fn propagate(
        &self,
        state: &mut QuantumState,
        first_kick: u64,
        n_kicks: u64,
        record_at: &[u64],
        mut on_record: impl FnMut(u64, &QuantumState),
    ) -> Result<PropagationLog> {
        check_record_times(record_at, n_kicks)?;
        let mut log = PropagationLog {
            lattice_sizes: vec![state.lattice_size()],
        };
        let mut records = record_at.iter().peekable();
        let mut propagator = self.propagator(state);
        for done in 0..=n_kicks {
            while records.peek() == Some(&&done) {
                records.next();
                if !state.is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite amplitudes after {done} kicks (β = {})",
                        state.beta
                    )));
                }
                on_record(done, state);
            }
            if done == n_kicks {
                break;
            }
            if state.edge_probability() > EDGE_TOLERANCE {
                while state.edge_probability() > EDGE_TOLERANCE {
                    state.grow()?;
                }
                log.lattice_sizes.push(state.lattice_size());
                propagator = self.propagator(state);
            }
            propagator.step(state, first_kick + done);
        }
        Ok(log)
    }

    /// Densities of `state` at the requested kick counts.
    pub fn propagate_densities(
        &self,
        state: &mut QuantumState,
        n_kicks: u64,
        record_at: &[u64],
    ) -> Result<Vec<LatticeDensity>> {
        let mut out = Vec::with_capacity(record_at.len());
        self.propagate(state, 0, n_kicks, record_at, |_, s| out.push(s.density()))?;
        Ok(out)
    }
}

/// Lattice sizes visited during one propagation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropagationLog {
    pub lattice_sizes: Vec<usize>,
}

fn check_record_times(record_at: &[u64], n_kicks: u64) -> Result<()> {
    if record_at.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("record_at", "kick counts must be strictly increasing"));
    }
    if let Some(&last) = record_at.last() {
        if last > n_kicks {
            return Err(Error::config(
                "record_at",
                format!("record time {last} exceeds the {n_kicks} kicks to run"),
            ));
        }
    }
    Ok(())
}

/// Split-step stepper for a fixed lattice size and quasi-momentum.
pub struct Propagator {
    tables: Arc<FloquetTables>,
    flight: Vec<Complex64>,
    scratch: Vec<Complex64>,
    beta: f64,
    period: u64,
}

impl Propagator {
    fn check(&self, state: &QuantumState) {
        assert_eq!(
            state.lattice_size(),
            self.tables.size,
            "propagator built for another lattice"
        );
        assert_eq!(state.beta, self.beta, "propagator built for another quasi-momentum");
    }

    /// Applies `exp(−i K cos(x + a_n)/ℏ̄)` only.
    pub fn kick(&mut self, state: &mut QuantumState, n: u64) {
        self.check(state);
        let t = &self.tables;
        t.inverse.process_with_scratch(&mut state.amps, &mut self.scratch);
        let table = &t.kicks[(n % self.period) as usize];
        let inv = 1.0 / t.size as f64;
        for (a, k) in state.amps.iter_mut().zip(table) {
            *a *= k * inv;
        }
        t.forward.process_with_scratch(&mut state.amps, &mut self.scratch);
    }

    /// Applies the unit-time free flight `exp(−i ℏ̄ (m + β)²/2)` only.
    pub fn free_flight(&mut self, state: &mut QuantumState) {
        self.check(state);
        let size = self.tables.size as f64;
        for (a, f) in state.amps.iter_mut().zip(&self.flight) {
            // the flight table carries the 1/M of the inverse transform
            *a *= f * size;
        }
    }

    /// Kick with index `n` followed by free flight.
    pub fn step(&mut self, state: &mut QuantumState, n: u64) {
        self.check(state);
        let t = &self.tables;
        t.inverse.process_with_scratch(&mut state.amps, &mut self.scratch);
        let table = &t.kicks[(n % self.period) as usize];
        for (a, k) in state.amps.iter_mut().zip(table) {
            *a *= k;
        }
        t.forward.process_with_scratch(&mut state.amps, &mut self.scratch);
        for (a, f) in state.amps.iter_mut().zip(&self.flight) {
            *a *= f;
        }
    }
}

/// How per-sample densities are summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// One contiguous block of samples per worker thread. Reproducible for a
    /// fixed thread count.
    PerWorker,
    /// Fixed blocks of [`REDUCTION_BLOCK`] samples summed in index order.
    /// Bitwise identical for any thread count.
    Reproducible,
}

pub const REDUCTION_BLOCK: u64 = 64;

/// Monte Carlo run over quasi-momenta.
#[derive(Debug, Clone)]
pub struct MonteCarloRun {
    pub n_samples: u64,
    pub n_kicks: u64,
    pub record_at: Vec<u64>,
    pub grid: MomentumGrid,
    pub reduction: Reduction,
}

#[derive(Debug, Clone)]
pub struct MonteCarloOutput {
    /// One distribution per recorded kick count.
    pub distributions: Vec<MomentumDistribution>,
    pub initial_lattice: usize,
    /// Number of samples that finished on each lattice size.
    pub final_lattices: BTreeMap<usize, u64>,
}

impl MonteCarloOutput {
    pub fn max_lattice(&self) -> usize {
        self.final_lattices
            .keys()
            .copied()
            .max()
            .unwrap_or(self.initial_lattice)
    }
}

struct BlockResult {
    accumulators: Vec<DensityAccumulator>,
    final_lattices: BTreeMap<usize, u64>,
}

/// Averages lattice densities over `n_samples` initial momenta drawn from the
/// Gaussian of width `σ`, depositing each lattice site into the nearest bin of
/// `run.grid`.
pub fn monte_carlo_distribution(params: &SimParams, run: &MonteCarloRun) -> Result<Vec<MomentumDistribution>> {
    Ok(monte_carlo(params, run)?.distributions)
}

pub fn monte_carlo(params: &SimParams, run: &MonteCarloRun) -> Result<MonteCarloOutput> {
    if run.n_samples == 0 {
        return Err(Error::config("n_samples", "need at least one sample"));
    }
    check_record_times(&run.record_at, run.n_kicks)?;
    if run.record_at.is_empty() {
        return Err(Error::config("record_at", "nothing to record"));
    }
    let normal = Normal::new(0.0, params.sigma).map_err(|e| Error::config("sigma", e.to_string()))?;
    let engine = FloquetEngine::new(params);
    let initial = grid_size_for(params, run.n_kicks.min(INITIAL_HORIZON), params.sigma);

    let blocks: Vec<std::ops::Range<u64>> = match run.reduction {
        Reduction::Reproducible => (0..run.n_samples.div_ceil(REDUCTION_BLOCK))
            .map(|b| b * REDUCTION_BLOCK..((b + 1) * REDUCTION_BLOCK).min(run.n_samples))
            .collect(),
        Reduction::PerWorker => {
            let workers = rayon::current_num_threads().max(1) as u64;
            let per = run.n_samples.div_ceil(workers);
            (0..workers)
                .map(|w| (w * per).min(run.n_samples)..((w + 1) * per).min(run.n_samples))
                .filter(|r| !r.is_empty())
                .collect()
        }
    };

    let run_block = |range: std::ops::Range<u64>| -> Result<BlockResult> {
        let mut accumulators: Vec<DensityAccumulator> = run
            .record_at
            .iter()
            .map(|_| DensityAccumulator::new(run.grid))
            .collect();
        let mut final_lattices = BTreeMap::new();
        for i in range {
            let mut rng = sample_rng(params.seed, i);
            let p0 = normal.sample(&mut rng);
            let mut size = initial;
            while (p0 / params.hbar_eff).abs() + 2.0 >= (size / 2) as f64 {
                size *= 2;
            }
            let mut state = initial_state(p0, params, size)?;
            let mut slot = 0;
            engine.propagate(&mut state, 0, run.n_kicks, &run.record_at, |_, s| {
                let acc = &mut accumulators[slot];
                let half = s.lattice_size() / 2;
                for (k, a) in s.amps[half..].iter().chain(&s.amps[..half]).enumerate() {
                    let w = a.norm_sqr();
                    if w > 0.0 {
                        acc.deposit(s.momentum(k as i64 - half as i64), w);
                    }
                }
                slot += 1;
            })?;
            *final_lattices.entry(state.lattice_size()).or_insert(0) += 1;
        }
        Ok(BlockResult {
            accumulators,
            final_lattices,
        })
    };

    let results: Vec<Result<BlockResult>> = blocks.into_par_iter().map(run_block).collect();

    let mut total: Vec<DensityAccumulator> = run
        .record_at
        .iter()
        .map(|_| DensityAccumulator::new(run.grid))
        .collect();
    let mut final_lattices = BTreeMap::new();
    for block in results {
        let block = block?;
        for (t, b) in total.iter_mut().zip(&block.accumulators) {
            t.merge(b);
        }
        for (size, count) in block.final_lattices {
            *final_lattices.entry(size).or_insert(0) += count;
        }
    }
    let distributions = total
        .into_iter()
        .zip(&run.record_at)
        .map(|(acc, &n)| acc.finish(n, run.n_samples))
        .collect::<Result<Vec<_>>>()?;
    Ok(MonteCarloOutput {
        distributions,
        initial_lattice: initial,
        final_lattices,
    })
}

/// Draws the quasi-momenta `frac(p₀/ℏ̄)` that a Monte Carlo run would use.
pub fn sampled_quasi_momenta(params: &SimParams, n_samples: u64) -> Result<Vec<f64>> {
    let normal = Normal::new(0.0, params.sigma).map_err(|e| Error::config("sigma", e.to_string()))?;
    Ok((0..n_samples)
        .map(|i| {
            let r = normal.sample(&mut sample_rng(params.seed, i)) / params.hbar_eff;
            r - r.floor()
        })
        .collect())
}
