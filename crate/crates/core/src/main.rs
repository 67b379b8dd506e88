//! Command-line front end for the link simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use semcom::codec::Codebook;
use semcom::grid::{important_feature_count, Role};
use semcom::image::Image;
use semcom::metrics::RunReport;
use semcom::pipeline::{
    run_once_traced, sweep, train_codebook_from_images, Profile, Scheme, SimConfig,
};
use semcom::Result;

#[derive(Parser)]
#[command(name = "semcom", about = "Semantic image transmission link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Built-in parameter profile.
    #[arg(long, default_value = "desk")]
    profile: String,
    /// Flat `section.key = value` config file; CLI flags win over it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArgs {
    fn build(&self) -> Result<SimConfig> {
        let mut cfg = SimConfig::from_profile(Profile::parse(&self.profile)?);
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a shared codebook from a directory of PGM images.
    TrainCodebook {
        /// Directory of .pgm training images.
        #[arg(long)]
        images: PathBuf,
        #[arg(long, default_value_t = 4)]
        patch: usize,
        #[arg(long, default_value_t = 1024)]
        entries: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Output codebook file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one link realization and print its report.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        codebook: PathBuf,
        #[arg(long)]
        snr_db: f64,
        /// Importance-aware mapping: on|off.
        #[arg(long, default_value = "on")]
        fit: String,
        /// Receiver codebook rematching: on|off.
        #[arg(long, default_value = "on")]
        rematch: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the reconstructed image here.
        #[arg(long)]
        emit_image: Option<PathBuf>,
    },
    /// Sweep schemes × SNRs × seeds and write a CSV.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        codebook: PathBuf,
        /// SNR axis: `start:stop:step` or a comma list, in dB.
        #[arg(long)]
        snr_db: String,
        /// Number of seeds (0..n).
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Comma list of schemes: fit+rematch, rematch, fit, none, or `all`.
        #[arg(long, default_value = "all")]
        schemes: String,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Print layout counts and, for small grids, an ASCII role map.
    GridInfo {
        #[command(flatten)]
        config: ConfigArgs,
        /// Feature channel count used for the D_imp figure.
        #[arg(long, default_value_t = 16)]
        channels: usize,
    },
}

fn on_off(flag: &str, what: &str) -> Result<bool> {
    match flag {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(semcom::SemcomError::InvalidConfig(format!(
            "--{what} must be on or off, got {other:?}"
        ))),
    }
}

fn parse_snr_axis(spec: &str) -> Result<Vec<f64>> {
    let bad = || semcom::SemcomError::InvalidConfig(format!("bad SNR axis {spec:?}"));
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].parse().map_err(|_| bad())?;
        let step: f64 = parts[2].parse().map_err(|_| bad())?;
        if step <= 0.0 || stop < start {
            return Err(bad());
        }
        let mut out = Vec::new();
        let mut v = start;
        while v <= stop + 1e-9 {
            out.push(v);
            v += step;
        }
        Ok(out)
    } else {
        spec.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect()
    }
}

fn parse_schemes(spec: &str) -> Result<Vec<Scheme>> {
    if spec == "all" {
        return Ok(Scheme::ALL.to_vec());
    }
    spec.split(',').map(|s| Scheme::parse(s.trim())).collect()
}

fn load_training_images(dir: &PathBuf) -> Result<Vec<Image>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(semcom::SemcomError::InvalidConfig(format!(
            "no .pgm images found in {}",
            dir.display()
        )));
    }
    paths.iter().map(Image::read_pgm).collect()
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::TrainCodebook { images, patch, entries, seed, max_iters, tol, out } => {
            let corpus = load_training_images(&images)?;
            let outcome =
                train_codebook_from_images(&corpus, patch, entries, seed, max_iters, tol)?;
            outcome.codebook.write_file(&out)?;
            println!(
                "trained {} entries of dimension {} from {} images ({} iterations, final distortion {:.6})",
                outcome.codebook.len(),
                outcome.codebook.dim(),
                corpus.len(),
                outcome.distortion.len(),
                outcome.distortion.last().copied().unwrap_or(0.0)
            );
            println!("wrote {}", out.display());
        }
        Command::Run { config, image, codebook, snr_db, fit, rematch, seed, emit_image } => {
            let cfg = config.build()?;
            let img = Image::read_pgm(&image)?;
            let cb = Codebook::read_file(&codebook)?;
            let scheme = Scheme {
                fit: on_off(&fit, "fit")?,
                rematch: on_off(&rematch, "rematch")?,
            };
            let (report, trace) = run_once_traced(&cfg, &img, &cb, snr_db, seed, scheme)?;
            println!("{}", RunReport::CSV_HEADER);
            println!("{}", report.csv_row());
            if let Some(path) = emit_image {
                trace.reconstruction.write_pgm(&path)?;
                println!("wrote {}", path.display());
            }
        }
        Command::Sweep { config, image, codebook, snr_db, seeds, schemes, csv } => {
            let cfg = config.build()?;
            let img = Image::read_pgm(&image)?;
            let cb = Codebook::read_file(&codebook)?;
            let snrs = parse_snr_axis(&snr_db)?;
            let schemes = parse_schemes(&schemes)?;
            let seed_list: Vec<u64> = (0..seeds).collect();
            let reports = sweep(&cfg, &img, &cb, &snrs, &seed_list, &schemes, Some(&csv))?;
            println!("wrote {} rows to {}", reports.len(), csv.display());
        }
        Command::GridInfo { config, channels } => {
            let cfg = config.build()?;
            let layout = cfg.layout()?;
            println!("grid      : {} x {} (dt={}, df={})", cfg.n_t, cfg.n_f, cfg.dt, cfg.df);
            println!("N_CPI     : {}", layout.n_cpi());
            println!("N_ref     : {}", layout.n_ref);
            println!("N_green   : {}", layout.n_green);
            println!("N_regular : {}", layout.n_regular);
            println!("D_imp     : {} (of {channels} channels)",
                important_feature_count(&layout, channels));
            if cfg.n_t <= 64 && cfg.n_f <= 120 {
                println!("role map (rows = OFDM symbols, cols = subcarriers):");
                for t in 0..cfg.n_t {
                    let row: String = (0..cfg.n_f)
                        .map(|f| match layout.role(t, f) {
                            Role::Pilot => 'P',
                            Role::Important => 'i',
                            Role::Regular => '.',
                        })
                        .collect();
                    println!("{row}");
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
