use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kkbeam_cli::bench::StageTimings;
use kkbeam_cli::pipeline::with_threads;
use kkbeam_cli::{commands, PipelineConfig, Result};

#[derive(Parser)]
#[command(
    name = "kkbeam",
    version,
    about = "Compressive plane-wave ultrasound imaging"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set grid.nx=64`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate element data.
    Simulate,
    /// Compress element data into virtual receive plane waves.
    Compress {
        #[arg(long)]
        input: PathBuf,
    },
    /// Beamform element or compressed data.
    Beamform {
        #[arg(long)]
        input: PathBuf,
    },
    /// Simulate, beamform and measure in one run.
    Pipeline,
    /// Tabulate the spatial-frequency support of the configured angles.
    Support {
        #[arg(long, default_value_t = 15)]
        bins: usize,
    },
    /// Time each processing stage.
    Bench {
        #[arg(long, default_value_t = 5)]
        reps: usize,
    },
}

fn load(common: &Common) -> Result<PipelineConfig> {
    let mut overrides = common.overrides.clone();
    if let Some(s) = common.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(t) = common.threads {
        overrides.push(format!("threads={t}"));
    }
    if let Some(o) = &common.out {
        overrides.push(format!("output.dir={:?}", o.display().to_string()));
    }
    PipelineConfig::load(common.config.as_deref(), &overrides)
}

fn print_timings(r: &StageTimings) {
    println!(
        "{:>3} N={:<3} M={:<4} fft {:>9.2} ms  hilbert/compress {:>9.2} ms  \
         ifft {:>9.2} ms  beamform {:>9.2} ms  total {:>9.2} ms  ratio {:.2}",
        r.method.name(),
        r.transmits,
        r.channels,
        r.reorg_fft_ms,
        r.hilbert_compress_ms,
        r.ifft_ms,
        r.beamform_ms,
        r.total_ms,
        r.compression_ratio
    );
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load(&cli.common)?;
    let threads = cfg.effective_threads()?;
    let written = with_threads(threads, || match &cli.command {
        Command::Simulate => commands::simulate(&cfg),
        Command::Compress { input } => commands::compress(&cfg, input),
        Command::Beamform { input } => commands::beamform(&cfg, input),
        Command::Pipeline => commands::run_pipeline(&cfg),
        Command::Support { bins } => commands::support_tables(&cfg, *bins),
        Command::Bench { reps } => commands::bench(&cfg, *reps).map(|(rows, paths)| {
            rows.iter().for_each(print_timings);
            paths
        }),
    })??;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kkbeam: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
