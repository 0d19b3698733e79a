use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use macrosync_cli::config::read_config_file;
use macrosync_cli::svg::{from_csv, render, ColorScale};
use macrosync_cli::{execute, resolve, CliError, CliResult, ExperimentId, Overrides};

#[derive(Parser)]
#[command(name = "macrosync", version, about = "Synchronization sweeps for groups of three-level quantum oscillators")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Experiment id: fig2a, fig2b, fig2c, fig2d, fig3, fig4, figS1, figS2, figS3, figS4, custom.
    experiment: Option<String>,
    /// TOML config (or a metadata file from an earlier run).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set x.points=64`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    out: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Scale factor for all grid resolutions.
    #[arg(long)]
    resolution_scale: Option<f64>,
    /// Print the resolved config and exit.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Render a long-form CSV column as an SVG heatmap.
    Heatmap {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        value: String,
        /// gray or diverging.
        #[arg(long, default_value = "gray")]
        scale: String,
        #[arg(long)]
        output: PathBuf,
    },
}

fn main_inner(cli: Cli) -> CliResult<()> {
    if let Some(Command::Heatmap { input, x, y, value, scale, output }) = cli.command {
        let text = std::fs::read_to_string(&input)?;
        let map = from_csv(&text, &x, &y, &value)?;
        std::fs::write(output, render(&map, ColorScale::parse(&scale)?)?)?;
        return Ok(());
    }
    let ov = Overrides {
        experiment: cli.experiment.as_deref().map(ExperimentId::parse).transpose()?,
        config_text: cli.config.as_deref().map(read_config_file).transpose()?,
        sets: cli.sets,
        out_dir: cli.out,
        workers: cli.workers,
        resolution_scale: cli.resolution_scale,
    };
    let cfg = resolve(&ov)?;
    if cli.dry_run {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let bundle = execute(&cfg)?;
    log::info!(
        "{}: {} cells ({} failed) in {:.1} s -> {}",
        cfg.experiment.name(),
        bundle.run.cells,
        bundle.run.failed_cells,
        bundle.run.wall_time_s,
        cfg.out_dir
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code: CliError = e;
            ExitCode::from(code.exit_code() as u8)
        }
    }
}
