use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use vpn0_core::attest::{AttestationBundle, ProverInput};
use vpn0_core::crypto::{group_setup, SecurityLabel};
use vpn0_core::par::Execution;
use vpn0_core::sim::{bench_lookup, bench_zkp, metrics::write_csv, run_simulation, LatencyModel, LookupBenchConfig, SimConfig};

#[derive(Parser)]
#[command(name = "vpn0", version, about = "Whitelist-gated dVPN simulator and attestation tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulated network runs.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Timing measurements.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Produce and check attestation bundles.
    #[command(subcommand)]
    Attest(AttestCommand),
}

#[derive(Subcommand)]
enum SimCommand {
    /// One honest session per whitelisted domain; writes events.log,
    /// metrics.csv and summary.txt.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a config file with every field at its default.
    DefaultConfig,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Prove and verify fresh random attestation instances.
    Zkp {
        #[arg(long, default_value_t = 100)]
        iters: usize,
        #[arg(long, default_value = "std256")]
        group: SecurityLabel,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run instances one after another instead of on all cores.
        #[arg(long)]
        sequential: bool,
        /// Also write the samples as metrics CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Value lookups of random announced domains.
    Lookup {
        #[arg(long, default_value_t = 64)]
        nodes: u32,
        #[arg(long, default_value_t = 200)]
        queries: usize,
        /// `fixed:<ms>` or `uniform:<lo>:<hi>`, per hop.
        #[arg(long, default_value = "fixed:50")]
        latency: LatencyModel,
        /// Domains announced before querying.
        #[arg(long, default_value_t = 200)]
        domains: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "toy")]
        group: SecurityLabel,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum AttestCommand {
    /// Write a consistent prover input with fresh keys.
    Sample {
        #[arg(long, default_value = "std256")]
        group: SecurityLabel,
        #[arg(long)]
        sni: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Read a prover input, print the bundle as hex.
    Prove {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Read a bundle; exit status 0 iff it verifies.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

/// Input files hold either raw bytes or hex text.
fn read_encoded(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text: Vec<u8> = raw.iter().copied().filter(|b| !b.is_ascii_whitespace()).collect();
    if !text.is_empty() && text.iter().all(u8::is_ascii_hexdigit) {
        return hex::decode(&text).with_context(|| format!("decoding hex in {}", path.display()));
    }
    Ok(raw)
}

fn write_hex(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    let text = hex::encode(bytes);
    match out {
        Some(path) => fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn rng_for(seed: Option<u64>) -> ChaCha20Rng {
    match seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_entropy(),
    }
}

fn sim(cmd: SimCommand) -> Result<ExitCode> {
    match cmd {
        SimCommand::Run { config, seed, out } => {
            let mut cfg = SimConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let run = run_simulation(cfg)?;
            run.write_outputs(&out).with_context(|| format!("writing into {}", out.display()))?;
            print!("{}", run.summary());
            Ok(ExitCode::SUCCESS)
        }
        SimCommand::DefaultConfig => {
            print!("{}", SimConfig::default().to_toml());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn bench(cmd: BenchCommand) -> Result<ExitCode> {
    let (report, records, csv) = match cmd {
        BenchCommand::Zkp { iters, group, seed, sequential, csv } => {
            if iters == 0 {
                bail!("--iters must be at least 1");
            }
            let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
            let bench = bench_zkp(group, iters, seed, exec);
            (bench.report(), bench.records(), csv)
        }
        BenchCommand::Lookup { nodes, queries, latency, domains, seed, group, csv } => {
            let bench = bench_lookup(LookupBenchConfig { nodes, queries, domains, latency, seed, group })?;
            (bench.report(), bench.records(), csv)
        }
    };
    print!("{report}");
    if let Some(path) = csv {
        write_csv(&records, &path).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn attest(cmd: AttestCommand) -> Result<ExitCode> {
    match cmd {
        AttestCommand::Sample { group, sni, seed, out } => {
            let params = group_setup(group);
            let (input, _) = ProverInput::sample(&params, sni.as_deref(), &mut rng_for(seed));
            write_hex(&input.encode(), Some(&out))?;
            Ok(ExitCode::SUCCESS)
        }
        AttestCommand::Prove { input, out, seed } => {
            let prover = ProverInput::decode(&read_encoded(&input)?).context("parsing prover input")?;
            let bundle = prover.attest(&mut rng_for(seed))?;
            write_hex(&bundle.encode(), out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        AttestCommand::Verify { input } => {
            let bundle = match AttestationBundle::decode(&read_encoded(&input)?) {
                Ok(b) => b,
                Err(e) => {
                    println!("reject: {e}");
                    return Ok(ExitCode::FAILURE);
                }
            };
            if bundle.verify() {
                println!("accept");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("reject: proof does not verify");
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Sim(cmd) => sim(cmd),
        Command::Bench(cmd) => bench(cmd),
        Command::Attest(cmd) => attest(cmd),
    }
}
