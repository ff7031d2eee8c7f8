use std::path::PathBuf;
use std::process::ExitCode;

use a2z_core::fixtures;
use a2z_core::mesh::PlyFormat;
use a2z_pipeline::{run, write_fixture_dataset, ChunkRange, Command, RunOptions, EXIT_FATAL, SEED_ENV};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "a2z", version, about = "Synthetic scans, sketches and BRep annotations for CAD datasets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    PlyBinary,
    PlyAscii,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `global_seed`; `A2Z_SEED` is used when neither is set.
    #[arg(long)]
    seed: Option<u64>,
    /// Inclusive chunk ranges, e.g. `0-30,70-99`.
    #[arg(long)]
    chunks: Option<ChunkRange>,
    /// Thread count; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parses every BRep and mesh and records input hashes.
    Validate(Common),
    /// Subdivides meshes and applies scan artifacts.
    SynthScan(Common),
    /// Transfers BRep labels onto scan vertices.
    Annotate(Common),
    /// Draws one sketch per configured skill level.
    Sketch(Common),
    /// Scores the dihedral baseline and writes the PR table.
    Eval(Common),
    /// Writes dataset histograms of face areas, co-edge lengths and classes.
    Stats(Common),
    /// Runs every stage, then stats.
    All(Common),
    /// Writes the built-in fixture suite as a chunked dataset.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 10)]
        per_chunk: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match cli.cmd {
        Cmd::Validate(c) => (Command::Validate, c),
        Cmd::SynthScan(c) => (Command::SynthScan, c),
        Cmd::Annotate(c) => (Command::Annotate, c),
        Cmd::Sketch(c) => (Command::Sketch, c),
        Cmd::Eval(c) => (Command::Eval, c),
        Cmd::Stats(c) => (Command::Stats, c),
        Cmd::All(c) => (Command::All, c),
        Cmd::Fixtures { out, count, per_chunk } => {
            let fx: Vec<_> = fixtures::suite().into_iter().take(count).collect();
            return match write_fixture_dataset(&out, &fx, per_chunk) {
                Ok(jobs) => {
                    println!("wrote {} models to {}", jobs.len(), out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_FATAL as u8)
                }
            };
        }
    };
    let opts = RunOptions {
        seed: common.seed,
        chunks: common.chunks,
        workers: common.workers,
        out: common.out,
        format: common.format.map(|f| match f {
            Format::PlyBinary => PlyFormat::PlyBinary,
            Format::PlyAscii => PlyFormat::PlyAscii,
        }),
        env_seed: std::env::var(SEED_ENV).ok(),
    };
    match run(cmd, &common.config, &opts) {
        Ok(s) => {
            for f in &s.failures {
                eprintln!("failed {}/{} at {}: {}", f.chunk, f.model_id, f.stage, f.message);
            }
            if let Some(t) = &s.pr_table {
                print!("{}", t.to_text());
            }
            println!("{} of {} models completed (seed {}), output in {}", s.completed(), s.models, s.seed, s.out.display());
            ExitCode::from(s.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("fatal: {e}");
            ExitCode::from(EXIT_FATAL as u8)
        }
    }
}
