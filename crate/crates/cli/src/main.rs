use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fht_core::fht::{deserialize, serialize, BuildStats, FhtMap};
use fht_core::harness::{
    build_for, evaluate, plan_trial, reloc_trial, render_ascii, render_pbm, BuiltMap,
    ExperimentConfig, Mode,
};
use fht_core::world_sim::{load_world, World};
use fht_core::Error;

/// Build, relocalize against and plan on hierarchical topological maps.
#[derive(Parser)]
#[command(name = "fhtmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explore a world and write the resulting map.
    Explore {
        world: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run seeded relocalization trials against a saved map.
    Relocalize {
        map: PathBuf,
        world: PathBuf,
        #[arg(long, default_value_t = 8)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Plan and execute seeded start/goal pairs on a saved map.
    Plan {
        map: PathBuf,
        world: PathBuf,
        #[arg(long, default_value_t = 6)]
        pairs: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Full experiment for each mode, written as one JSON report. The map
    /// and a render of each mode are written next to it.
    Eval {
        world: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "fht,main_only,feature_only"
        )]
        modes: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render a saved map; `.pbm` output is a bitmap, anything else text.
    Render {
        map: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Meters per pixel or character.
        #[arg(long, default_value_t = 0.1)]
        scale: f64,
    },
}

enum Failure {
    Config(String),
    Trials(usize),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Version { .. }
            | Error::MalformedMap(_)
            | Error::WorldParse { .. } => Failure::Config(e.to_string()),
            e => Failure::Other(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

fn load_config(
    path: Option<&Path>,
    world: &Path,
    seed: Option<u64>,
) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::from_toml(&read(p)?)?,
        None => ExperimentConfig::default(),
    };
    cfg.world = world.to_path_buf();
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn load_world_file(path: &Path) -> Result<World, Failure> {
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("world");
    Ok(load_world(name, &read(path)?)?)
}

fn load_map(path: &Path) -> Result<FhtMap, Failure> {
    let bytes =
        std::fs::read(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(deserialize(&bytes)?)
}

/// A saved map carries no explored grid; the fully known world stands in.
fn saved_as_built(map: FhtMap, world: &World) -> BuiltMap {
    BuiltMap {
        map,
        explored: world.truth().clone(),
        trajectory: vec![],
        stats: BuildStats::default(),
        finished: true,
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Explore { world, config, out } => {
            let cfg = load_config(config.as_deref(), &world, None)?;
            let w = load_world_file(&world)?;
            let built = build_for(&cfg, &w)?;
            let bytes = serialize(&built.map);
            write(&out, &bytes)?;
            let summary = serde_json::json!({
                "nodes": built.map.len(),
                "edges": built.map.edges().len(),
                "stats": built.stats,
                "storage_bytes": bytes.len(),
                "finished": built.finished,
            });
            println!("{summary:#}");
            Ok(())
        }
        Command::Relocalize {
            map,
            world,
            trials,
            seed,
            config,
        } => {
            let cfg = load_config(config.as_deref(), &world, seed)?;
            let w = load_world_file(&world)?;
            let m = load_map(&map)?;
            let rows: Vec<_> = (0..trials).map(|i| reloc_trial(&cfg, &w, &m, i)).collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&rows).expect("serializable")
            );
            let failed = rows.iter().filter(|r| r.failed).count();
            if failed > 0 {
                return Err(Failure::Trials(failed));
            }
            Ok(())
        }
        Command::Plan {
            map,
            world,
            pairs,
            seed,
            config,
        } => {
            let cfg = load_config(config.as_deref(), &world, seed)?;
            let w = load_world_file(&world)?;
            let built = saved_as_built(load_map(&map)?, &w);
            let rows: Vec<_> = (0..pairs)
                .map(|i| plan_trial(&cfg, &w, &built, i))
                .collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&rows).expect("serializable")
            );
            let failed = rows.iter().filter(|r| r.failed).count();
            if failed > 0 {
                return Err(Failure::Trials(failed));
            }
            Ok(())
        }
        Command::Eval {
            world,
            modes,
            out,
            config,
            seed,
        } => {
            let base = load_config(config.as_deref(), &world, seed)?;
            let modes: Vec<Mode> = modes.iter().map(|m| m.parse()).collect::<Result<_, _>>()?;
            let w = load_world_file(&world)?;
            let mut reports = vec![];
            for mode in modes {
                let cfg = base.with_mode(mode);
                let built = build_for(&cfg, &w)?;
                let stem = out.with_extension("");
                let artifact =
                    |ext: &str| PathBuf::from(format!("{}.{}.{ext}", stem.display(), mode.name()));
                write(&artifact("map.json"), &serialize(&built.map))?;
                let render = render_pbm(
                    &built.map,
                    Some(&built.explored),
                    &built.trajectory,
                    w.resolution(),
                );
                write(&artifact("pbm"), render.as_bytes())?;
                let report = evaluate(&cfg, &w, &built);
                eprintln!(
                    "{}: success {:?}, eps_t {:?}, C_path {:?}, storage {} bytes",
                    mode.name(),
                    report.success_rate,
                    report.eps_t.mean,
                    report.c_path.mean,
                    report.storage_bytes
                );
                reports.push(report);
            }
            let failed: usize = reports.iter().map(|r| r.failed_trials).sum();
            let text = serde_json::to_string_pretty(&reports).expect("serializable");
            write(&out, text.as_bytes())?;
            if failed > 0 {
                return Err(Failure::Trials(failed));
            }
            Ok(())
        }
        Command::Render { map, out, scale } => {
            if scale.is_nan() || scale <= 0.0 {
                return Err(Failure::Config("scale must be positive".into()));
            }
            let m = load_map(&map)?;
            let text = if out
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("pbm"))
            {
                render_pbm(&m, None, &[], scale)
            } else {
                render_ascii(&m, None, &[], scale)
            };
            write(&out, text.as_bytes())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Trials(n)) => {
            eprintln!("{n} trial(s) failed");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
