//! Pipeline commands behind the `xad` binary: offline preprocessing, patient
//! split, training, scoring, evaluation and heatmaps, all rooted in one
//! output directory.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod layout;
pub mod manifest;

pub use args::{Cli, Command, Common};
pub use config::{RunConfig, Scale, TrainOverrides};
pub use error::{Error, Result};
pub use layout::Layout;
pub use manifest::{Manifest, ManifestEntry};

/// Resolves the configuration and runs the subcommand inside a worker pool.
pub fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.common.resolve()?;
    cfg.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        pool = pool.num_threads(n);
    }
    pool.build()?.install(|| dispatch(&cli.command, &cfg))
}

fn dispatch(command: &Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::Preprocess { force } => {
            let s = commands::preprocess(cfg, *force)?;
            println!("processed {} images ({} already done), {} outputs in manifest", s.processed, s.skipped, s.outputs);
        }
        Command::Split => {
            let s = commands::split(cfg)?;
            println!("patients: {} train, {} validation, {} test", s.train, s.validation, s.test);
        }
        Command::Train => {
            for s in commands::train(cfg)? {
                println!("seed {}: loss {:.6} -> {:.6}, {}", s.seed, s.first_loss, s.last_loss, s.checkpoint.display());
            }
        }
        Command::Score => {
            for path in commands::score(cfg)? {
                println!("{}", path.display());
            }
        }
        Command::Evaluate { grid, heatmaps } => {
            let report = commands::evaluate(cfg, *grid, heatmaps)?;
            print!("{}", report.to_text());
        }
        Command::Heatmap { images } => {
            for path in commands::heatmaps(cfg, images)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}
