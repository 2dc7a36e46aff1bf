use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{AppConfig, ConfigError, CONFIG_ENV};
use crate::experiment::campaign::{run_campaign, write_campaign};
use crate::experiment::log::TrialLog;
use crate::experiment::trial::run_trial;
use crate::human::{calibrate_dz, Direction, SupportRegion};
use crate::plot::write_svg;
use crate::strategies::Strategy;

#[derive(Debug, Parser)]
#[command(name = "balance-assist", version, about = "Robot balance-assistance simulator")]
pub struct Cli {
    /// Configuration file merged over the built-in defaults.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the support polygon and dead zone of a subject.
    Calibrate {
        /// kg
        #[arg(long)]
        mass: Option<f64>,
        /// m
        #[arg(long)]
        height: Option<f64>,
    },
    /// Simulate one trial of the configured default subject.
    Run {
        /// fsa, mba or hwa.
        #[arg(long)]
        strategy: Strategy,
        /// fwd or bwd.
        #[arg(long, default_value = "fwd")]
        direction: Direction,
        /// Defaults to `simulation.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Region file written by `calibrate`.
        #[arg(long)]
        region: Option<PathBuf>,
    },
    /// Simulate the full population campaign.
    Campaign,
    /// Render a trial log to SVG.
    Plot {
        log: PathBuf,
        /// Defaults to the log name with an `.svg` extension inside `--out`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Other(_) => 1,
        }
    }
}

pub fn save_region(region: &SupportRegion, path: &Path) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(region)? + "\n")?;
    Ok(())
}

pub fn load_region(path: &Path) -> anyhow::Result<SupportRegion> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = AppConfig::resolve(cli.config.as_deref())?;
    match &cli.command {
        Command::Calibrate { mass, height } => {
            let p = cfg.human_params(mass.unwrap_or(cfg.human.mass), height.unwrap_or(cfg.human.height));
            let region =
                calibrate_dz(&p, cfg.human.max_lean_fwd, cfg.human.max_lean_bwd).map_err(anyhow::Error::from)?;
            std::fs::create_dir_all(&cli.out).map_err(anyhow::Error::from)?;
            let path = cli.out.join("region.json");
            save_region(&region, &path)?;
            println!(
                "sp x [{:.4}, {:.4}] y [{:.4}, {:.4}]",
                region.sp.x_min, region.sp.x_max, region.sp.y_min, region.sp.y_max
            );
            println!(
                "dz x [{:.4}, {:.4}] y [{:.4}, {:.4}]",
                region.dz.x_min, region.dz.x_max, region.dz.y_min, region.dz.y_max
            );
            println!("wrote {}", path.display());
        }
        Command::Run { strategy, direction, seed, region } => {
            let seed = seed.unwrap_or(cfg.simulation.seed);
            let mut tc = cfg.trial(*strategy, *direction, seed);
            if let Some(path) = region {
                tc.region = Some(load_region(path)?);
            }
            let out = run_trial(&tc).map_err(anyhow::Error::from)?;
            std::fs::create_dir_all(&cli.out).map_err(anyhow::Error::from)?;
            let stem = format!("trial_{}_{}_{}", strategy.name(), direction.name(), seed);
            let log_path = cli.out.join(format!("{stem}.csv"));
            out.log.save(&log_path).map_err(anyhow::Error::from)?;
            let result_path = cli.out.join(format!("{stem}.json"));
            std::fs::write(
                &result_path,
                serde_json::to_string_pretty(&out.result).map_err(anyhow::Error::from)? + "\n",
            )
            .map_err(anyhow::Error::from)?;
            let r = &out.result;
            let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
            println!("failed={}", r.failed);
            println!("dt_out={} s", show(r.dt_out));
            println!("d_max={} cm", show(r.d_max.map(|d| d * 100.0)));
            println!("f_max_x={:.3} %", r.f_max_x);
            println!("f_max_z={:.3} %", r.f_max_z);
            println!("wrote {}", log_path.display());
        }
        Command::Campaign => {
            let c = run_campaign(&cfg.campaign_setup()).map_err(anyhow::Error::from)?;
            write_campaign(&c, &cli.out).map_err(anyhow::Error::from)?;
            for row in &c.aggregate {
                let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
                println!(
                    "{} {} dt={} d={} fx={} fz={} failed={}/{}",
                    row.strategy.name(),
                    row.direction.name(),
                    show(row.stats[0].mean),
                    show(row.stats[1].mean),
                    show(row.stats[2].mean),
                    show(row.stats[3].mean),
                    row.failed,
                    row.trials
                );
            }
            println!("wrote {} trials to {}", c.records.len(), cli.out.display());
        }
        Command::Plot { log, output } => {
            let l = TrialLog::load(log).map_err(anyhow::Error::from)?;
            let path = match output {
                Some(p) => p.clone(),
                None => {
                    std::fs::create_dir_all(&cli.out).map_err(anyhow::Error::from)?;
                    let stem = log.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or("trial".into());
                    cli.out.join(format!("{stem}.svg"))
                }
            };
            write_svg(&l, &path).map_err(anyhow::Error::from)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
