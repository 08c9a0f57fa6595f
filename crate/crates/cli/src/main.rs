//! `spinweave`: design, disorder and analysis experiments for spin-chain
//! state transfer, each run leaving a replayable JSON manifest.

mod commands;
mod error;
mod manifest;
mod time_spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::{CliError, CliResult};
use time_spec::TimeSpec;

#[derive(Debug, Parser)]
#[command(name = "spinweave", version, about = "Exchange-coupling design and transfer analysis for XXZ spin chains")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Seed for every random stream of the run.
    #[arg(long, global = true, env = "SPINWEAVE_SEED")]
    pub seed: Option<u64>,
    /// Directory for data files and the run manifest [default: .]
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Energy unit of the Hamiltonian: `hopping` puts the hopping
    /// amplitude at -J_i, `pauli` at -2 J_i.
    #[arg(long, global = true, value_enum, default_value_t = ScaleArg::Hopping)]
    pub scale: ScaleArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Hopping,
    Pauli,
}

impl From<ScaleArg> for spinweave::EnergyScale {
    fn from(value: ScaleArg) -> Self {
        match value {
            ScaleArg::Hopping => spinweave::EnergyScale::Hopping,
            ScaleArg::Pauli => spinweave::EnergyScale::Pauli,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LawArg {
    Uniform,
    Gaussian,
}

impl From<LawArg> for spinweave::disorder::NoiseLaw {
    fn from(value: LawArg) -> Self {
        match value {
            LawArg::Uniform => spinweave::disorder::NoiseLaw::Uniform,
            LawArg::Gaussian => spinweave::disorder::NoiseLaw::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 1.0)]
    pub jmax_start: f64,
    #[arg(long)]
    pub jmax_end: f64,
    #[arg(long, default_value_t = 0.5)]
    pub jmax_step: f64,
    /// Optimize all N-1 couplings instead of the mirror-symmetric half.
    #[arg(long)]
    pub full_chain: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizerArgs {
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub max_generations: Option<usize>,
    #[arg(long)]
    pub relocation_scale: Option<f64>,
    #[arg(long)]
    pub anneal: Option<f64>,
    #[arg(long)]
    pub stall: Option<usize>,
    #[arg(long)]
    pub gradient_tolerance: Option<f64>,
    #[arg(long)]
    pub refine_candidates: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transferred population and fidelity of a chain file. With `--time`,
    /// prints one `t,P,F` row; with `--t-end`, writes `evaluate.csv`.
    Evaluate {
        #[arg(long)]
        ecd: PathBuf,
        /// Overrides the anisotropy in the file header.
        #[arg(long)]
        delta: Option<f64>,
        /// Single time: a number, or a multiple of N such as `2N` or `N/2`.
        #[arg(long, conflicts_with_all = ["t_start", "t_end", "t_step"])]
        time: Option<TimeSpec>,
        #[arg(long, default_value = "0")]
        t_start: TimeSpec,
        #[arg(long, required_unless_present = "time")]
        t_end: Option<TimeSpec>,
        #[arg(long, default_value_t = 0.1)]
        t_step: f64,
    },
    /// Optimize couplings over growing hypercubes and write one chain file
    /// per cube.
    Design {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        time: TimeSpec,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Stop at the first cube reaching this population.
        #[arg(long)]
        target: Option<f64>,
        #[command(flatten)]
        optimizer: OptimizerArgs,
    },
    /// Disorder statistics: a line scan over amplitudes for one chain file,
    /// a (J_max, a) grid for several.
    Disorder {
        #[arg(long, required = true, num_args = 1..)]
        ecd: Vec<PathBuf>,
        #[arg(long)]
        delta: Option<f64>,
        /// Defaults to the arrival time in the first file's header.
        #[arg(long)]
        time: Option<TimeSpec>,
        #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1,0.15,0.2,0.25")]
        amplitudes: Vec<f64>,
        /// Realizations per amplitude [default: 10000 for one file, 1000 for a grid]
        #[arg(long)]
        nr: Option<usize>,
        #[arg(long, value_enum, default_value_t = LawArg::Uniform)]
        law: LawArg,
    },
    /// Smallest cube side reaching a target population, per arrival time.
    Jmin {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long = "time", value_delimiter = ',', required = true)]
        times: Vec<TimeSpec>,
        #[arg(long, default_value_t = 0.98)]
        target: f64,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Independent sweeps per arrival time; the smallest side wins.
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        #[command(flatten)]
        optimizer: OptimizerArgs,
    },
    /// Fit `A + B exp(-C T/N)` to a `jmin` table.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Chain length; defaults to the table's N column.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Peaks of P(t) against the scaled time t/(κN).
    Peaks {
        #[arg(long)]
        ecd: PathBuf,
        #[arg(long)]
        delta: Option<f64>,
        /// Defaults to the header arrival time divided by N.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value_t = 5)]
        max_peaks: usize,
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
    },
    /// Rényi-1/2 divergence between the site-to-site populations of two
    /// chains at one time, per starting site and overall.
    Divergence {
        #[arg(long, num_args = 2, required = true)]
        ecd: Vec<PathBuf>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        time: TimeSpec,
    },
    /// Re-run the command recorded in a manifest.
    Replay { manifest: PathBuf },
}

/// Argument list stored in manifests: the invocation without output,
/// thread and seed options, followed by the resolved seed.
fn normalized_args(raw: &[String], seed: u64) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip_value = false;
    for arg in raw {
        if skip_value {
            skip_value = false;
            continue;
        }
        let name = arg.split('=').next().unwrap_or(arg);
        if matches!(name, "--out-dir" | "--threads" | "--seed") {
            skip_value = !arg.contains('=');
            continue;
        }
        out.push(arg.clone());
    }
    out.push("--seed".into());
    out.push(seed.to_string());
    out
}

fn run(cli: Cli, raw_args: &[String]) -> CliResult<()> {
    let seed = cli.global.seed.unwrap_or(0);
    let out_dir = cli.global.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let ctx = || manifest::RunContext::new(out_dir.clone(), seed, normalized_args(raw_args, seed));
    let scale = cli.global.scale.into();
    match cli.command {
        Command::Evaluate {
            ecd,
            delta,
            time,
            t_start,
            t_end,
            t_step,
        } => match (time, t_end) {
            (Some(t), _) => commands::evaluate_once(&ecd, delta, t, scale),
            (None, Some(end)) => commands::evaluate_grid(ctx()?, &ecd, delta, t_start, end, t_step, scale),
            (None, None) => Err(CliError::Usage("either --time or --t-end is required".into())),
        },
        Command::Design {
            n,
            delta,
            time,
            sweep,
            target,
            optimizer,
        } => commands::design(ctx()?, n, delta, time, &sweep, target, &optimizer, scale),
        Command::Disorder {
            ecd,
            delta,
            time,
            amplitudes,
            nr,
            law,
        } => commands::disorder(ctx()?, &ecd, delta, time, &amplitudes, nr, law.into(), scale),
        Command::Jmin {
            n,
            delta,
            times,
            target,
            sweep,
            restarts,
            optimizer,
        } => commands::jmin(ctx()?, n, delta, &times, target, &sweep, restarts, &optimizer, scale),
        Command::Fit { input, n } => commands::fit(ctx()?, &input, n),
        Command::Peaks {
            ecd,
            delta,
            kappa,
            max_peaks,
            grid_step,
        } => commands::peaks(ctx()?, &ecd, delta, kappa, max_peaks, grid_step, scale),
        Command::Divergence { ecd, delta, time } => commands::divergence(ctx()?, &ecd[0], &ecd[1], delta, time, scale),
        Command::Replay { manifest } => replay(&manifest, cli.global.out_dir),
    }
}

fn replay(path: &std::path::Path, out_dir: Option<PathBuf>) -> CliResult<()> {
    let recorded = manifest::RunManifest::read(path)?;
    let target = match out_dir {
        Some(dir) => dir,
        None => path.parent().map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
    };
    std::fs::create_dir_all(&target).map_err(|e| CliError::io(&target, e))?;
    let target = std::fs::canonicalize(&target).map_err(|e| CliError::io(&target, e))?;
    if !recorded.working_directory.is_empty() {
        let dir = PathBuf::from(&recorded.working_directory);
        std::env::set_current_dir(&dir).map_err(|e| CliError::io(&dir, e))?;
    }
    let mut argv = vec!["spinweave".to_owned()];
    argv.extend(recorded.args.iter().cloned());
    argv.push("--out-dir".into());
    argv.push(target.display().to_string());
    let cli = Cli::try_parse_from(&argv).map_err(|e| CliError::Usage(format!("manifest arguments: {e}")))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(CliError::Usage("a manifest cannot replay another replay".into()));
    }
    run(cli, &argv[1..])
}

fn main() -> ExitCode {
    let raw_args: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    if let Some(threads) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli, &raw_args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_args_drop_run_local_options() {
        let raw: Vec<String> = ["design", "--n", "10", "--out-dir", "x", "--threads=2", "--seed", "5"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(normalized_args(&raw, 5), ["design", "--n", "10", "--seed", "5"]);
    }

    #[test]
    fn command_line_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
