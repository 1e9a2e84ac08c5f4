use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use distrl_cli::commands::{self, FixedSource, McRequest};
use distrl_cli::config::RunConfig;
use distrl_cli::exit_code;
use distrl_core::envs::suite::EnvParams;
use distrl_core::Result;

#[derive(Parser)]
#[command(name = "distrl", version, about = "Distributional RL lab: IQN and GAN return models against exact oracles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train from a TOML config; writes metrics, checkpoints and the resolved config.
    Train {
        config: PathBuf,
        /// Override a config key, e.g. `--set train.total_steps=500`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory (over the config's `output_dir`).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare a fixed return model against an online one over the eval schedule.
    Evaluate {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// `exact` for the oracle, or a checkpoint path.
        #[arg(long, default_value = "exact")]
        fixed: String,
        /// Online checkpoint; when absent a live trainer is run to each scheduled step.
        #[arg(long)]
        online: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exact return distribution of a policy by path enumeration.
    Oracle {
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long, default_value = "uniform")]
        policy: String,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        #[arg(long, default_value = "oracle")]
        out: PathBuf,
    },
    /// Monte Carlo return samples per action from one state.
    McEstimate {
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long, default_value = "uniform")]
        policy: String,
        #[arg(long, default_value_t = 0)]
        state: usize,
        #[arg(long, default_value_t = 10_000)]
        rollouts: usize,
        /// Rollout length; by default long enough that the discounted tail is below 1e-9.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[arg(long, default_value = "mc")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct EnvArgs {
    /// One of chain, cliff, coin, self-loop.
    #[arg(long)]
    env: String,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    reward_scale: Option<f64>,
    #[arg(long)]
    slip: Option<f64>,
}

impl EnvArgs {
    fn params(&self) -> EnvParams {
        let d = EnvParams::default();
        EnvParams {
            gamma: self.gamma.unwrap_or(d.gamma),
            reward_scale: self.reward_scale.unwrap_or(d.reward_scale),
            slip: self.slip.unwrap_or(d.slip),
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            overrides,
            output,
        } => {
            let cfg = RunConfig::load(&config, &overrides)?;
            cfg.validate()?;
            let dir = commands::train(&cfg, &cfg.output_dir(output.as_deref()))?;
            println!("{}", dir.display());
        }
        Command::Evaluate {
            config,
            overrides,
            fixed,
            online,
            output,
        } => {
            let cfg = RunConfig::load(&config, &overrides)?;
            cfg.validate()?;
            let out = match output {
                Some(o) => commands::output_path(&o),
                None => cfg.output_dir(None).join("eval"),
            };
            let dir = commands::evaluate(&cfg, &FixedSource::parse(&fixed), online.as_deref(), &out)?;
            println!("{}", dir.display());
        }
        Command::Oracle {
            env,
            policy,
            tolerance,
            out,
        } => {
            let policy = commands::parse_policy(&policy)?;
            let dir = commands::oracle(&env.env, &env.params(), &policy, tolerance, &commands::output_path(&out))?;
            println!("{}", dir.display());
        }
        Command::McEstimate {
            env,
            policy,
            state,
            rollouts,
            horizon,
            seed,
            bins,
            out,
        } => {
            let policy = commands::parse_policy(&policy)?;
            let params = env.params();
            let req = McRequest {
                env: &env.env,
                params: &params,
                policy: &policy,
                state,
                rollouts,
                horizon,
                bins,
                seed,
            };
            for s in commands::mc_estimate(&req, &commands::output_path(&out))? {
                println!("action {}: mean {:.6} +- {:.6} ({} rollouts)", s.action, s.mean, s.std_err, s.rollouts);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
