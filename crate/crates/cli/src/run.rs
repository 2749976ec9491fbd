//! Simulation subcommands: `simulate`, `sweep`, `metrics`, `latin-square`.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use steerlab::harness::{
    order_for_participant, write_aggregate_csv, write_latin_square, write_metrics_header, write_metrics_rows,
};
use steerlab::metrics::{read_trajectory_csv, write_trajectory_csv};
use steerlab::{
    balanced_latin_square, compute_metrics, run_condition, run_sweep_with, strategy_grid, DriverMode, LkasConfig,
    MetricSet, SimConfig, SrrMethod,
};

use crate::error::{CliError, CliResult};
use crate::manifest::{AbortedEntry, RunManifest};
use crate::{ConfigArgs, ModeArg, SrrMethodArg};

pub fn load_config(path: Option<&Path>) -> CliResult<SimConfig> {
    match path {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            SimConfig::from_toml(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
        }
        None => Ok(SimConfig::default()),
    }
}

fn resolve_config(args: &ConfigArgs) -> CliResult<SimConfig> {
    let mut sim = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        sim.driver.seed = seed;
    }
    if let Some(duration) = args.duration {
        sim.sweep.session_duration_s = Some(duration);
    }
    if let Some(mode) = args.mode {
        sim.driver.mode = match mode {
            ModeArg::Attentive => DriverMode::Attentive,
            ModeArg::Distracted => DriverMode::Distracted,
        };
    }
    Ok(sim)
}

pub fn format_metrics(m: &MetricSet) -> String {
    format!(
        "sdlp={:.6} srr={:.6} rmsls={:.6} departures={} duration={:.3}",
        m.sdlp, m.srr, m.rmsls, m.departure_count, m.duration
    )
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_trajectory(path: &Path, lkas: &LkasConfig, sim: &SimConfig, seed: u64) -> CliResult<MetricSet> {
    let log = run_condition(lkas, sim, seed)?;
    let metrics = compute_metrics(&log, sim.lane.lane_width, &sim.metrics)?;
    let mut out = create(path)?;
    write_trajectory_csv(&log, &mut out)?;
    out.flush().map_err(|e| CliError::io(path, e))?;
    Ok(metrics)
}

pub fn simulate(
    args: &ConfigArgs,
    tor: Option<f64>,
    dev: Option<f64>,
    condition: Option<usize>,
    out: &Path,
) -> CliResult<()> {
    let mut sim = resolve_config(args)?;
    if let Some(tor) = tor {
        sim.lkas.k_tor_nm = tor;
    }
    if let Some(dev) = dev {
        sim.lkas.k_dev_m = dev;
    }
    let template = sim.lkas_template()?;
    let lkas = match condition {
        Some(id) => {
            let grid = strategy_grid(&sim.sweep.tor_levels, &sim.sweep.dev_levels, &template)?;
            let config = id
                .checked_sub(1)
                .and_then(|i| grid.get(i))
                .ok_or_else(|| CliError::Input(format!("condition must be in 1..={}, got {id}", grid.len())))?;
            sim.lkas.k_tor_nm = config.k_tor;
            sim.lkas.k_dev_m = config.k_dev;
            *config
        }
        None => template,
    };
    sim.validate()?;
    let seed = sim.driver.seed;

    let manifest_path = out.with_extension("manifest.json");
    let mut manifest = RunManifest::begin(&manifest_path, sim.to_toml(), vec![seed], vec![out.to_path_buf()])?;
    let result = write_trajectory(out, &lkas, &sim, seed);
    manifest.finish(&result)?;
    let metrics = result?;
    println!(
        "tor={} dev={} seed={} {}",
        lkas.k_tor,
        lkas.k_dev,
        seed,
        format_metrics(&metrics)
    );
    Ok(())
}

pub fn sweep(
    args: &ConfigArgs,
    tor: Option<Vec<f64>>,
    dev: Option<Vec<f64>>,
    seeds: Option<usize>,
    out: &Path,
    trajectories: bool,
    quiet: bool,
) -> CliResult<()> {
    let mut sim = resolve_config(args)?;
    if let Some(tor) = tor {
        sim.sweep.tor_levels = tor;
    }
    if let Some(dev) = dev {
        sim.sweep.dev_levels = dev;
    }
    if let Some(seeds) = seeds {
        sim.sweep.seeds_per_condition = seeds;
    }
    sim.validate()?;
    let plan = sim.plan()?;

    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let config_path = out.join("config.toml");
    let metrics_path = out.join("metrics.csv");
    let aggregate_path = out.join("aggregate.csv");
    let latin_path = out.join("latin_square.csv");
    let trajectory_dir = out.join("trajectories");
    let snapshot = sim.to_toml();
    fs::write(&config_path, &snapshot).map_err(|e| CliError::io(&config_path, e))?;

    let conditions = plan.tor_levels.len() * plan.dev_levels.len();
    let mut outputs = vec![config_path, metrics_path.clone(), aggregate_path.clone()];
    if conditions >= 2 {
        outputs.push(latin_path.clone());
    }
    if trajectories {
        fs::create_dir_all(&trajectory_dir).map_err(|e| CliError::io(&trajectory_dir, e))?;
        outputs.push(trajectory_dir.clone());
    }
    let mut manifest = RunManifest::begin(&out.join("manifest.json"), snapshot, plan.seeds.clone(), outputs)?;

    let mut metrics_out = create(&metrics_path)?;
    let io_metrics = |e: io::Error| CliError::io(&metrics_path, e);
    let result = (|| -> CliResult<()> {
        write_metrics_header(&mut metrics_out).map_err(io_metrics)?;
        metrics_out.flush().map_err(io_metrics)?;
        let mut io_failure = None;
        let outcome = run_sweep_with(&sim, |c| {
            let written = write_metrics_rows(&mut metrics_out, c).and_then(|_| metrics_out.flush());
            if let Err(e) = written {
                io_failure = Some(CliError::io(&metrics_path, e));
                return Err(steerlab::Error::InvalidState("metrics output failed".into()));
            }
            if !quiet {
                eprintln!(
                    "[{}/{}] TOR {} N m, DEV {} m: {} runs, {} aborted",
                    c.condition_id,
                    conditions,
                    c.config.k_tor,
                    c.config.k_dev,
                    c.runs.len(),
                    c.aborted.len()
                );
            }
            Ok(())
        });
        if let Some(e) = io_failure {
            return Err(e);
        }
        let outcome = outcome?;
        for c in &outcome.conditions {
            for a in &c.aborted {
                manifest.aborted_runs.push(AbortedEntry {
                    condition_id: a.condition_id,
                    seed: a.seed,
                    reason: a.reason.clone(),
                });
            }
        }

        let mut aggregate = create(&aggregate_path)?;
        write_aggregate_csv(&mut aggregate, &outcome.conditions)
            .and_then(|_| aggregate.flush())
            .map_err(|e| CliError::io(&aggregate_path, e))?;

        if conditions >= 2 {
            let square = balanced_latin_square(conditions)?;
            let rows: Vec<Vec<usize>> = (0..plan.participant_count.max(1))
                .map(|p| order_for_participant(&square, p).to_vec())
                .collect();
            let mut latin = create(&latin_path)?;
            write_latin_square(&mut latin, &rows)
                .and_then(|_| latin.flush())
                .map_err(|e| CliError::io(&latin_path, e))?;
        }

        if trajectories {
            let jobs: Vec<(LkasConfig, u64)> = outcome
                .conditions
                .iter()
                .flat_map(|c| c.runs.iter().map(move |r| (c.config, r.seed)))
                .collect();
            jobs.par_iter()
                .map(|(lkas, seed)| {
                    let name = format!("tor{}_dev{}_seed{}.csv", lkas.k_tor, lkas.k_dev, seed);
                    write_trajectory(&trajectory_dir.join(name), lkas, &sim, *seed).map(|_| ())
                })
                .collect::<CliResult<Vec<()>>>()?;
        }

        let aborted = outcome.aborted_count();
        if aborted > 0 {
            eprintln!("warning: {aborted} runs aborted; see manifest.json");
        }
        Ok(())
    })();
    manifest.finish(&result)?;
    result?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn metrics(path: &Path, config: Option<&Path>, method: Option<SrrMethodArg>) -> CliResult<()> {
    let sim = load_config(config)?;
    let mut options = sim.metrics;
    if let Some(method) = method {
        options.method = match method {
            SrrMethodArg::Gap => SrrMethod::Gap,
            SrrMethodArg::Rate => SrrMethod::Rate,
        };
    }
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let log = read_trajectory_csv(io::BufReader::new(file))
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let m = compute_metrics(&log, sim.lane.lane_width, &options)?;
    println!("{}", format_metrics(&m));
    Ok(())
}

pub fn latin_square(n: usize, participants: Option<usize>, out: Option<&Path>) -> CliResult<()> {
    let square = balanced_latin_square(n)?;
    let rows: Vec<Vec<usize>> = match participants {
        Some(p) => (0..p).map(|i| order_for_participant(&square, i).to_vec()).collect(),
        None => square,
    };
    match out {
        Some(path) => {
            let mut w = create(path)?;
            write_latin_square(&mut w, &rows)
                .and_then(|_| w.flush())
                .map_err(|e| CliError::io(path, e))
        }
        None => {
            let stdout = io::stdout();
            write_latin_square(stdout.lock(), &rows).map_err(|e| CliError::io(&PathBuf::from("<stdout>"), e))
        }
    }
}
