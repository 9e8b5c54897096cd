use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ratchet_core::analysis::{
    asymmetry, current_check, fit_gogolin, fit_power_law, front_exponent_check, gogolin_density, moments, right_energy,
    track_peak, GogolinFitOptions, TimeSeries, DEFAULT_PEAK_HALF_WIDTH,
};
use ratchet_core::classical::{folded_phase_portrait, momentum_histogram, sample_initial_ensemble, PhasePortrait};
use ratchet_core::config::{preset as builtin_preset, GridSection, RunConfig, PRESET_NAMES};
use ratchet_core::io::{self, Engine, RunManifest};
use ratchet_core::quantum::{monte_carlo, MonteCarloRun, Reduction};
use ratchet_core::{Error, MomentumDistribution, MomentumGrid, Result, SimParams};
use serde_json::json;

use crate::{AnalysisKind, AnalyzeArgs, GogolinArgs, RunArgs};

/// 0 success, 2 configuration or input error, 3 numerical failure, 4 I/O failure.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Parse { .. } => 2,
        Error::Numerical(_) | Error::GridCap { .. } | Error::Fit(_) => 3,
        Error::Io { .. } => 4,
    }
}

fn load_config(spec: &str) -> Result<RunConfig> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some(text) = builtin_preset(spec) {
            return RunConfig::from_toml(text);
        }
        return Err(Error::Config {
            field: "config",
            reason: format!("`{spec}` is neither a file nor a preset ({})", PRESET_NAMES.join(", ")),
        });
    }
    RunConfig::load(path)
}

pub fn preset(name: &str) -> Result<()> {
    let text = builtin_preset(name).ok_or_else(|| Error::Config {
        field: "preset",
        reason: format!("unknown preset `{name}`; available: {}", PRESET_NAMES.join(", ")),
    })?;
    print!("{text}");
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_owned(),
        source,
    })
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<(T, usize)> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config {
                field: "threads",
                reason: "need at least one thread".into(),
            });
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config {
        field: "threads",
        reason: e.to_string(),
    })?;
    let n = pool.current_num_threads();
    Ok((pool.install(f), n))
}

/// Settings shared by both engines after applying command-line overrides.
struct Resolved {
    params: SimParams,
    count: u64,
    kicks: u64,
    record: Vec<u64>,
    grid: MomentumGrid,
}

fn resolve(
    args: &RunArgs,
    cfg: &RunConfig,
    count: u64,
    kicks: u64,
    record: &[u64],
    grid: Option<&GridSection>,
) -> Result<Resolved> {
    let mut params = cfg.params()?;
    if let Some(seed) = args.seed_override {
        params.seed = seed;
    }
    let count = args.samples.unwrap_or(count);
    if count == 0 {
        return Err(Error::Config {
            field: "samples",
            reason: "need at least one sample".into(),
        });
    }
    let kicks = args.kicks.unwrap_or(kicks);
    let mut record = args.record.clone().unwrap_or_else(|| record.to_vec());
    if record.is_empty() {
        record.push(kicks);
    }
    if record.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config {
            field: "record",
            reason: "kick counts must be strictly increasing".into(),
        });
    }
    if let Some(&last) = record.last() {
        if last > kicks {
            return Err(Error::Config {
                field: "record",
                reason: format!("record time {last} exceeds the {kicks} kicks to run"),
            });
        }
    }
    let grid = match grid {
        Some(g) => MomentumGrid::symmetric(g.half_width, g.spacing.unwrap_or(params.hbar_eff))?,
        None => {
            let reach = (TAU * kicks as f64 / 3.0).max(10.0 * params.sigma) + 20.0 * params.hbar_eff;
            MomentumGrid::symmetric(reach, params.hbar_eff)?
        }
    };
    Ok(Resolved {
        params,
        count,
        kicks,
        record,
        grid,
    })
}

fn run_digest(engine: Engine, r: &Resolved, reduction: Option<Reduction>) -> String {
    io::digest(&json!({
        "engine": engine,
        "params": r.params,
        "count": r.count,
        "kicks": r.kicks,
        "record": r.record,
        "grid": r.grid,
        "reduction": reduction,
    }))
}

type Observable = fn(&MomentumDistribution) -> f64;

/// Per-record observables written as `n,value` series.
fn write_series(out: &Path, dists: &[MomentumDistribution], digest: &str) -> Result<Vec<PathBuf>> {
    let kicks: Vec<u64> = dists.iter().map(|d| d.n_kicks).collect();
    let columns: [(&str, Observable); 4] = [
        ("series_energy.csv", |d| moments(d).energy),
        ("series_right_energy.csv", right_energy),
        ("series_mean.csv", |d| moments(d).mean),
        ("series_asymmetry.csv", asymmetry),
    ];
    let mut files = Vec::new();
    for (name, f) in columns {
        let series = TimeSeries::new(kicks.clone(), dists.iter().map(f).collect())?;
        io::write_series(&out.join(name), &series, digest)?;
        files.push(PathBuf::from(name));
    }
    Ok(files)
}

fn distribution_name(n: u64) -> String {
    format!("dist_n{n:05}.csv")
}

pub fn classical(args: &RunArgs) -> Result<()> {
    let start = Instant::now();
    let cfg = load_config(&args.config)?;
    let section = cfg.classical.as_ref().ok_or_else(|| Error::Config {
        field: "classical",
        reason: "configuration has no [classical] section".into(),
    })?;
    let r = resolve(
        args,
        &cfg,
        section.points as u64,
        section.kicks,
        &section.record,
        section.grid.as_ref(),
    )?;
    let digest = run_digest(Engine::Classical, &r, None);
    let period = r.params.phases.period() as u64;
    let bins = section.portrait_bins;

    let (evolved, threads) = with_threads(
        args.threads,
        || -> Result<(Vec<MomentumDistribution>, PhasePortrait)> {
            let mut ensemble = sample_initial_ensemble(r.count as usize, &r.params)?;
            let mut dists = Vec::with_capacity(r.record.len());
            let mut portrait = PhasePortrait::empty(bins, bins)?;
            let superpose_from = r.kicks.saturating_sub(period - 1);
            for n in 0..=r.kicks {
                if n > 0 {
                    ensemble.evolve(&r.params, 1);
                }
                if r.record.contains(&n) {
                    dists.push(momentum_histogram(&ensemble, r.grid)?);
                }
                if n >= superpose_from {
                    portrait.add(&folded_phase_portrait(&ensemble, bins, bins)?)?;
                }
            }
            Ok((dists, portrait))
        },
    )?;
    let (dists, portrait) = evolved?;

    create_dir(&args.out)?;
    let mut files = Vec::new();
    for d in &dists {
        let name = distribution_name(d.n_kicks);
        io::write_distribution(&args.out.join(&name), d, &digest)?;
        files.push(PathBuf::from(name));
    }
    io::write_portrait(&args.out.join("portrait.csv"), &portrait, &digest)?;
    files.push(PathBuf::from("portrait.csv"));
    files.extend(write_series(&args.out, &dists, &digest)?);

    let manifest = RunManifest {
        digest,
        engine: Engine::Classical,
        seed: r.params.seed,
        config: json!({ "params": r.params, "points": r.count, "kicks": r.kicks, "portrait_bins": bins }),
        samples: r.count,
        record_at: r.record.clone(),
        grid: Some(r.grid),
        lattice: None,
        threads,
        reduction: None,
        wall_seconds: start.elapsed().as_secs_f64(),
        files,
        notes: vec![
            "map: p <- p + K sin(x + a_n), then x <- x + p; first kick has index 0".into(),
            format!(
                "portrait: folded onto [0,2pi)^2, superposed over kicks {}..={}",
                r.kicks.saturating_sub(period - 1),
                r.kicks
            ),
        ],
    };
    io::write_manifest(&args.out, &manifest)?;
    eprintln!(
        "classical run finished: {} files in {}",
        manifest.files.len() + 1,
        args.out.display()
    );
    Ok(())
}

pub fn quantum(args: &RunArgs) -> Result<()> {
    let start = Instant::now();
    let cfg = load_config(&args.config)?;
    let section = cfg.quantum.as_ref().ok_or_else(|| Error::Config {
        field: "quantum",
        reason: "configuration has no [quantum] section".into(),
    })?;
    let r = resolve(
        args,
        &cfg,
        section.samples,
        section.kicks,
        &section.record,
        section.grid.as_ref(),
    )?;
    let reduction = if args.reproducible_reduction {
        Reduction::Reproducible
    } else {
        Reduction::PerWorker
    };
    let digest = run_digest(Engine::Quantum, &r, Some(reduction));
    let run = MonteCarloRun {
        n_samples: r.count,
        n_kicks: r.kicks,
        record_at: r.record.clone(),
        grid: r.grid,
        reduction,
    };
    let (output, threads) = with_threads(args.threads, || monte_carlo(&r.params, &run))?;
    let output = output?;

    create_dir(&args.out)?;
    let mut files = Vec::new();
    for d in &output.distributions {
        let name = distribution_name(d.n_kicks);
        io::write_distribution(&args.out.join(&name), d, &digest)?;
        files.push(PathBuf::from(name));
    }
    files.extend(write_series(&args.out, &output.distributions, &digest)?);

    let manifest = RunManifest {
        digest,
        engine: Engine::Quantum,
        seed: r.params.seed,
        config: json!({ "params": r.params, "samples": r.count, "kicks": r.kicks }),
        samples: r.count,
        record_at: r.record.clone(),
        grid: Some(r.grid),
        lattice: Some(json!({
            "initial": output.initial_lattice,
            "final_sizes": output.final_lattices.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        })),
        threads,
        reduction: Some(format!("{reduction:?}")),
        wall_seconds: start.elapsed().as_secs_f64(),
        files,
        notes: vec!["step: kick exp(-i K cos(x + a_n)/hbar), then free flight; first kick has index 0".into()],
    };
    io::write_manifest(&args.out, &manifest)?;
    eprintln!(
        "quantum run finished: {} files in {}",
        manifest.files.len() + 1,
        args.out.display()
    );
    Ok(())
}

fn input_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(io::digest_bytes(&bytes))
}

pub fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let mut reports = Vec::new();
    match args.kind {
        AnalysisKind::PowerLaw => {
            let &[lo, hi] = args.window.as_slice() else {
                return Err(Error::Config {
                    field: "window",
                    reason: "expected two kick counts `n_min,n_max`".into(),
                });
            };
            let window = (lo, hi);
            for path in &args.inputs {
                let series = io::read_series(path)?;
                let fit = fit_power_law(&series, window)?;
                reports.push(json!({ "input": path, "input_digest": input_digest(path)?, "fit": fit }));
            }
        }
        AnalysisKind::Gogolin => {
            let opts = GogolinFitOptions {
                p_window: args.p_window,
                exclude_below: args.exclude_below,
                ..GogolinFitOptions::default()
            };
            for path in &args.inputs {
                let fit = fit_gogolin(&io::read_distribution(path)?, &opts)?;
                reports.push(json!({ "input": path, "input_digest": input_digest(path)?, "fit": fit }));
            }
        }
        AnalysisKind::Peak => {
            let w = args.half_width.unwrap_or(DEFAULT_PEAK_HALF_WIDTH);
            for path in &args.inputs {
                let dist = io::read_distribution(path)?;
                let n = args.kicks.unwrap_or(dist.n_kicks);
                let peak = track_peak(&dist, n, w)?;
                reports.push(json!({ "input": path, "input_digest": input_digest(path)?, "n_kicks": n, "peak": peak }));
            }
        }
        AnalysisKind::Asymmetry => {
            for path in &args.inputs {
                let dist = io::read_distribution(path)?;
                reports.push(json!({
                    "input": path,
                    "input_digest": input_digest(path)?,
                    "n_kicks": dist.n_kicks,
                    "asymmetry": asymmetry(&dist),
                }));
            }
        }
        AnalysisKind::Moments => {
            for path in &args.inputs {
                let dist = io::read_distribution(path)?;
                let m = moments(&dist);
                let samples = args.effective_samples.unwrap_or(dist.n_samples);
                reports.push(json!({
                    "input": path,
                    "input_digest": input_digest(path)?,
                    "n_kicks": dist.n_kicks,
                    "mean": m.mean,
                    "energy": m.energy,
                    "right_energy": right_energy(&dist),
                    "current": current_check(&dist, samples),
                }));
            }
        }
        AnalysisKind::Front => {
            let dists = args
                .inputs
                .iter()
                .map(|p| io::read_distribution(p))
                .collect::<Result<Vec<_>>>()?;
            let fit = front_exponent_check(&dists)?;
            let digests = args
                .inputs
                .iter()
                .map(|p| input_digest(p))
                .collect::<Result<Vec<_>>>()?;
            reports.push(json!({ "inputs": args.inputs, "input_digests": digests, "fit": fit }));
        }
    }
    create_dir(&args.out)?;
    let kind = serde_json::to_value(args.kind).expect("kind serializes");
    let name = format!("report_{}.json", kind.as_str().unwrap_or("analysis"));
    let path = args.out.join(&name);
    let text =
        serde_json::to_string_pretty(&json!({ "kind": args.kind, "reports": reports })).expect("report serializes");
    fs::write(&path, text + "\n").map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    println!("{}", path.display());
    Ok(())
}

pub fn gogolin(args: &GogolinArgs) -> Result<()> {
    let start = Instant::now();
    let grid = MomentumGrid::symmetric(args.half_width, args.spacing)?;
    let density = grid
        .values()
        .map(|p| gogolin_density(p, args.xi))
        .collect::<Result<Vec<_>>>()?;
    // raw values: the curve is already normalized on the full line
    let dist = MomentumDistribution {
        grid,
        density,
        n_kicks: 0,
        n_samples: 0,
        overflow_below: 0.0,
        overflow_above: 0.0,
    };
    let digest = io::digest(&json!({ "engine": Engine::Gogolin, "xi": args.xi, "grid": grid }));
    create_dir(&args.out)?;
    io::write_distribution(&args.out.join("gogolin.csv"), &dist, &digest)?;
    let manifest = RunManifest {
        digest,
        engine: Engine::Gogolin,
        seed: 0,
        config: json!({ "xi": args.xi }),
        samples: 0,
        record_at: vec![],
        grid: Some(grid),
        lattice: None,
        threads: 1,
        reduction: None,
        wall_seconds: start.elapsed().as_secs_f64(),
        files: vec![PathBuf::from("gogolin.csv")],
        notes: vec![],
    };
    io::write_manifest(&args.out, &manifest)?;
    Ok(())
}
