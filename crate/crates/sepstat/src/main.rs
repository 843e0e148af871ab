use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sepstat::commands::{self, CommandOutput};
use sepstat::config::{read_config, RunConfig};
use sepstat::error::Result;

/// Separability probing of bipartite quantum states by statistical
/// mechanics on the space of convex decompositions.
#[derive(Parser, Debug)]
#[command(name = "sepstat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// PPT verdict, Monte Carlo energies and (for Werner states) the saddle
    /// residual of one state, as a JSON report.
    Probe(Flags),
    /// Saddle residual across a Werner p grid and the equipartition onset.
    Scan(Flags),
    /// Average one-particle energy along a β grid with a power-law fit.
    Scaling(Flags),
    /// Monte Carlo energy estimates and the sampled state density.
    Mc(Flags),
    /// Positive-partial-transpose test of one state or the Werner family.
    Ppt(Flags),
}

#[derive(Args, Debug)]
struct Flags {
    /// Two-qubit Werner state W(p) = (1−p)|Ψ₋⟩⟨Ψ₋| + p·1/4.
    #[arg(long, value_name = "P", allow_hyphen_values = true)]
    werner: Option<f64>,
    /// Density matrix JSON file {"dimA", "dimB", "re", "im"}.
    #[arg(long, value_name = "PATH")]
    state: Option<PathBuf>,
    /// β value, list `b1,b2,…`, or log grid `a:b:n`.
    #[arg(long, value_name = "V|GRID", allow_hyphen_values = true)]
    beta: Option<String>,
    /// Werner p grid `a:step:b`.
    #[arg(long = "p-grid", value_name = "A:STEP:B")]
    p_grid: Option<String>,
    /// Monte Carlo draws (Haar) or measured sweeps per β (anneal).
    #[arg(long, value_name = "K")]
    samples: Option<usize>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Saddle-search residual tolerance.
    #[arg(long, value_name = "V")]
    tol: Option<f64>,
    /// Residual below which a point counts as inside the equipartition region.
    #[arg(long, value_name = "V")]
    threshold: Option<f64>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Run `scaling` on synthetic 2.75/β data.
    #[arg(long = "self-test")]
    self_test: bool,
    /// Ensemble length N for Monte Carlo (default m²n²).
    #[arg(long, value_name = "N")]
    length: Option<usize>,
    /// Histogram bins for `mc`.
    #[arg(long, value_name = "K")]
    bins: Option<usize>,
    /// Monte Carlo method for `mc`: haar or anneal.
    #[arg(long, value_name = "NAME")]
    method: Option<String>,
    /// Random starts of the saddle search.
    #[arg(long, value_name = "K")]
    restarts: Option<usize>,
    /// Histogram output of `mc` (default: next to --out).
    #[arg(long = "hist-out", value_name = "PATH")]
    hist_out: Option<PathBuf>,
    /// JSON config with the same keys as the flags (an earlier output file
    /// also works); flags take precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

impl Flags {
    fn into_config(self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => read_config(path)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            werner: self.werner,
            state: self.state,
            beta: self.beta,
            p_grid: self.p_grid,
            samples: self.samples,
            seed: self.seed,
            tol: self.tol,
            threshold: self.threshold,
            out: self.out,
            self_test: self.self_test.then_some(true),
            length: self.length,
            bins: self.bins,
            method: self.method,
            restarts: self.restarts,
            hist_out: self.hist_out,
        };
        Ok(flags.over(base))
    }
}

fn run(cli: Cli) -> Result<(String, String)> {
    let (cmd, flags): (fn(&RunConfig) -> Result<CommandOutput>, Flags) = match cli.command {
        Command::Probe(f) => (commands::cmd_probe, f),
        Command::Scan(f) => (commands::cmd_scan, f),
        Command::Scaling(f) => (commands::cmd_scaling, f),
        Command::Mc(f) => (commands::cmd_mc, f),
        Command::Ppt(f) => (commands::cmd_ppt, f),
    };
    let cfg = flags.into_config()?;
    let out = cmd(&cfg)?;
    commands::emit(&cfg, out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((stdout, stderr)) => {
            print!("{stdout}");
            eprint!("{stderr}");
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
