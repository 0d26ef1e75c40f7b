//! `bmdr` command line: table building, simulation, abstraction and comparison.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use bmdr_core::abstraction::write_beta_csv;
use bmdr_core::bmdr::MiCurves;
use bmdr_core::harness::{
    build_tables, calibrate_betas, compare_runs, compute_metrics, write_abstraction, write_compare,
    write_la_trace_file, write_report, Basis, Engine, Manifest, Mode, Scenario, SimConfig,
};
use bmdr_core::{Error, Result};
use clap::{Args, Parser, Subcommand};

/// Exit status of a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status of a runtime failure.
pub const EXIT_RUNTIME: i32 = 1;
/// Exit status of a usage or configuration error.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "bmdr", version, about = "BMDR link adaptation and PHY abstraction for MU-MIMO uplinks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build BMDR-CER tables for every MCS of a scenario.
    BuildTable {
        #[command(flatten)]
        common: Common,
        /// Rebuild tables that already exist.
        #[arg(long)]
        force: bool,
    },
    /// Full-chain closed-loop simulation.
    Simulate(Common),
    /// Abstracted closed-loop simulation.
    Abstract(Common),
    /// Paired full and abstracted runs with agreement statistics.
    Compare(Common),
    /// Fit one EESM beta per MCS from a full simulation.
    CalibrateBeta(Common),
    /// Per-slot link-adaptation trace of the first drop.
    LaTrace {
        #[command(flatten)]
        common: Common,
        /// Decode codewords instead of drawing outcomes from estimated error rates.
        #[arg(long)]
        full: bool,
    },
    /// Write the AWGN mutual-information curves.
    MiCurves {
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Scenario file.
    #[arg(long)]
    pub config: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (tables directory of the scenario for build-table).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Keep only the schemes of this detector.
    #[arg(long)]
    pub detector: Option<String>,
    /// Weight of spectral efficiency against complexity in hybrid selection.
    #[arg(long)]
    pub gamma: Option<f64>,
}

impl Common {
    /// Load and adjust the scenario.
    pub fn scenario(&self) -> Result<Scenario> {
        let mut cfg = SimConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let base = self.config.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut sc = cfg.scenario(&base)?;
        sc.source = Some(self.config.clone());
        if let Some(d) = &self.detector {
            sc.restrict_detector(d)?;
        }
        if let Some(g) = self.gamma {
            sc.set_gamma(g)?;
        }
        Ok(sc)
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", self.workers)))
    }
}

/// Parse `args` and run; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

/// Run one subcommand.
pub fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::BuildTable { common, force } => {
            let sc = common.scenario()?;
            let dir = common.out.clone().unwrap_or_else(|| sc.tables_dir());
            common
                .pool()?
                .install(|| build_tables(&sc, &dir, sc.cfg.seed, !force, |line| eprintln!("{line}")).map(|_| ()))?;
            Manifest::new("build-table", &sc).write(&dir)
        }
        Command::Simulate(c) => simulate(&c, Mode::Full, "simulate"),
        Command::Abstract(c) => simulate(&c, Mode::Abstracted, "abstract"),
        Command::Compare(c) => {
            let sc = c.scenario()?;
            let out = c.out_dir();
            let engine = Engine::new(sc.clone())?;
            let (full, abs) = c.pool()?.install(|| -> Result<_> {
                Ok((engine.run(Mode::Full, true)?, engine.run(Mode::Abstracted, false)?))
            })?;
            let (rows, sums) = compare_runs(&full, &abs, &sc)?;
            write_compare(&out, &rows, &sums)?;
            for s in &sums {
                eprintln!(
                    "{}: full {:.4} Mbps, abstracted {:.4} Mbps ({:.2}% apart), BLER within 2x for {}/{} UEs",
                    s.scheme,
                    s.full_am,
                    s.abs_am,
                    100.0 * s.am_rel_err,
                    s.bler_within_2x,
                    s.bler_checked
                );
            }
            Manifest::new("compare", &sc).write(&out)
        }
        Command::CalibrateBeta(c) => {
            let sc = c.scenario()?;
            let out = c.out_dir();
            let engine = Engine::new(sc.clone())?;
            let betas = c.pool()?.install(|| calibrate_betas(&engine))?;
            std::fs::create_dir_all(&out)?;
            write_beta_csv(&betas, BufWriter::new(File::create(out.join("beta.csv"))?))?;
            Manifest::new("calibrate-beta", &sc).write(&out)
        }
        Command::LaTrace { common, full } => {
            let mut sc = common.scenario()?;
            sc.cfg.drops = 1;
            let out = common.out_dir();
            let engine = Engine::new(sc.clone())?;
            let mode = if full { Mode::Full } else { Mode::Abstracted };
            let run = common.pool()?.install(|| engine.run(mode, true))?;
            write_la_trace_file(&out, &run, &sc)?;
            Manifest::new("la-trace", &sc).write(&out)
        }
        Command::MiCurves { out } => {
            std::fs::create_dir_all(&out)?;
            MiCurves::shared().write_csv(BufWriter::new(File::create(out.join("mi_curves.csv"))?))
        }
    }
}

fn simulate(c: &Common, mode: Mode, name: &str) -> Result<()> {
    let sc = c.scenario()?;
    let out = c.out_dir();
    let engine = Engine::new(sc.clone())?;
    let run = c.pool()?.install(|| engine.run(mode, false))?;
    let report = compute_metrics(&run, &sc, Basis::of(&run))?;
    write_report(&out, &run, &sc, &report)?;
    write_la_trace_file(&out, &run, &sc)?;
    if mode == Mode::Abstracted {
        write_abstraction(&out, &run, &sc)?;
    }
    for s in &report.schemes {
        eprintln!("{}: AM {:.4} Mbps, GM {:.4} Mbps", s.name, s.am, s.gm);
    }
    if let Some(conf) = &report.confusion {
        eprintln!("detector selection accuracy {:.3}", conf.accuracy);
    }
    Manifest::new(name, &sc).write(&out)
}
