use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sfnsim::channel::ChannelKind;
use sfnsim::exec::Execution;
use sfnsim::harness::{describe, parse_pairs, required_csv, sweep_csv, SimConfig, Simulator};
use sfnsim::receiver::ReceiverMode;
use sfnsim::stcodes::CodeKind;
use sfnsim::Error;

/// Monte-Carlo simulator for distributed space-time codes in unbalanced SFNs.
#[derive(Parser)]
#[command(name = "sfnsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER/FER over the configured beta and Eb/N0 grid.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Eb/N0 needed to reach a target BER at each configured beta.
    RequiredEbn0 {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target_ber: Option<f64>,
        /// Starting point of the search (dB).
        #[arg(long, default_value_t = 6.0)]
        start_db: f64,
    },
}

#[derive(Args)]
struct Common {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = parse_code)]
    st_code: Option<CodeKind>,
    #[arg(long)]
    eta: Option<u32>,
    #[arg(long, value_parser = parse_channel)]
    channel: Option<ChannelKind>,
    /// Comma-separated list, `start:step:stop` ranges allowed.
    #[arg(long, allow_hyphen_values = true)]
    beta_db: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    ebn0_db: Option<String>,
    #[arg(long)]
    nc: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, value_parser = parse_receiver)]
    receiver: Option<ReceiverMode>,
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` overrides applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

fn parse_code(s: &str) -> Result<CodeKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_channel(s: &str) -> Result<ChannelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_receiver(s: &str) -> Result<ReceiverMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Common {
    fn load(&self, target_ber: Option<f64>) -> sfnsim::Result<(SimConfig, Execution)> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            pairs = parse_pairs(&text)?;
        }
        let mut set = |k: &str, v: String| pairs.push((k.to_string(), v));
        if let Some(c) = self.st_code {
            set("st_code", c.to_string());
        }
        if let Some(e) = self.eta {
            set("eta", e.to_string());
        }
        if let Some(c) = self.channel {
            set("channel", c.to_string());
        }
        if let Some(b) = &self.beta_db {
            set("beta_db", b.clone());
        }
        if let Some(e) = &self.ebn0_db {
            set("ebn0_db", e.clone());
        }
        if let Some(n) = self.nc {
            set("nc", n.to_string());
        }
        if let Some(i) = self.iterations {
            set("iterations", i.to_string());
        }
        if let Some(r) = self.receiver {
            set("receiver", r.to_string());
        }
        if let Some(s) = self.seed {
            set("seed", s.to_string());
        }
        if let Some(t) = target_ber {
            set("target_ber", t.to_string());
        }
        for o in &self.overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override '{o}' is not key=value")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let cfg = SimConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
        let exec = if self.sequential { Execution::Sequential } else { Execution::Parallel };
        Ok((cfg, exec))
    }
}

fn write(path: &Path, csv: &str) -> sfnsim::Result<()> {
    std::fs::write(path, csv)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> sfnsim::Result<()> {
    match cli.command {
        Command::Simulate { common } => {
            let (cfg, exec) = common.load(None)?;
            if cfg.ebn0_db.is_empty() {
                return Err(Error::Config("simulate needs ebn0_db".into()));
            }
            eprintln!("# {}", describe(&cfg));
            let sim = Simulator::new(cfg, exec)?;
            let sweep = sim.run_sweep()?;
            for p in &sweep.points {
                eprintln!(
                    "beta {:>6} dB  Eb/N0 {:>6} dB  BER {:.3e} ({} / {} bits, {:.1?})",
                    p.beta_db,
                    p.ebn0_db,
                    p.ber(),
                    p.errors,
                    p.bits,
                    p.wall_time
                );
            }
            write(&common.out, &sweep_csv(&[sweep]))
        }
        Command::RequiredEbn0 {
            common,
            target_ber,
            start_db,
        } => {
            let (cfg, exec) = common.load(target_ber)?;
            eprintln!("# {}", describe(&cfg));
            let sim = Simulator::new(cfg.clone(), exec)?;
            let mut rows = Vec::new();
            let mut hint = start_db;
            for &beta in &cfg.betas_db {
                let r = sim.required_ebn0(beta, cfg.target_ber, hint)?;
                match r.value_db {
                    Some(v) => {
                        eprintln!("beta {beta:>6} dB  required Eb/N0 {v:.2} dB");
                        hint = v;
                    }
                    None => eprintln!("beta {beta:>6} dB  target not reached (censored)"),
                }
                rows.push((cfg.clone(), r));
            }
            write(&common.out, &required_csv(&rows))
        }
    }
}

fn exit_status(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}
