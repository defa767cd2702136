use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use irl_core::experiment::{run_condition, summarize, train_trainer, TrainerOptions};
use irl_core::{AdviceConfig, Condition, Dictionary, ExperimentConfig, Hyperparams, ReportFormat, Scenario};

#[derive(Parser)]
#[command(name = "irl", version, about = "Interactive Q-learning for UAV grid navigation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a population of agents under one advice condition.
    Train(TrainArgs),
    /// Train one autonomous agent and save its table for use as a trainer.
    TrainTrainer(TrainerArgs),
    /// Aggregate completed run directories.
    Summarize {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long, default_value = "table")]
        format: ReportFormat,
    },
    /// Run the live session server.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        dictionary: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long, default_value = "open")]
    scenario: String,
    #[arg(long, default_value = "autonomous")]
    condition: Condition,
    #[arg(long, default_value_t = 20)]
    agents: usize,
    #[arg(long, default_value_t = 20)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Q-table of the simulated trainer (required unless autonomous).
    #[arg(long)]
    trainer: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    l_action: Option<f64>,
    #[arg(long)]
    l_reward: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.95)]
    gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = irl_core::DEFAULT_STEP_CAP)]
    step_cap: usize,
    /// Replacement command dictionary.
    #[arg(long)]
    dictionary: Option<PathBuf>,
    /// Probability that a simulated trainer phrase gets one random edit.
    #[arg(long, default_value_t = 0.0)]
    corruption_rate: f64,
}

#[derive(clap::Args)]
struct TrainerArgs {
    #[arg(long, default_value = "open")]
    scenario: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    episodes: usize,
    /// Keep training until a greedy rollout reaches the goal, up to this
    /// many episodes in total.
    #[arg(long)]
    extend_until_greedy: Option<usize>,
    #[arg(long, default_value_t = irl_core::DEFAULT_STEP_CAP)]
    step_cap: usize,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Cmd::Train(args) => train(args),
        Cmd::TrainTrainer(args) => trainer(args),
        Cmd::Summarize { dirs, format } => {
            print!("{}", summarize(&dirs)?.render(format)?);
            Ok(())
        }
        Cmd::Serve { port, host, dictionary } => serve(port, &host, dictionary),
    }
}

fn train(args: TrainArgs) -> Result<()> {
    let defaults = args.condition.default_advice();
    let cfg = ExperimentConfig {
        scenario: args.scenario,
        condition: args.condition,
        n_agents: args.agents,
        n_episodes: args.episodes,
        hp: Hyperparams { alpha: args.alpha, gamma: args.gamma, epsilon: args.epsilon },
        advice: AdviceConfig {
            l_action: args.l_action.unwrap_or(defaults.l_action),
            l_reward: args.l_reward.unwrap_or(defaults.l_reward),
        },
        trainer_table: args.trainer,
        master_seed: args.seed,
        step_cap: args.step_cap,
        dictionary: args.dictionary,
        corruption_rate: args.corruption_rate,
    };
    let run = run_condition(&cfg, Some(&args.out))?;
    let s = &run.summary;
    println!(
        "{}: mean reward {:.1} (std {:.1}) over {} agents x {} episodes; goal rate {:.3}; {:.2} s",
        s.run_id, s.mean_total_reward, s.std_total_reward, s.n_agents, s.n_episodes, s.goal_rate, run.elapsed_s
    );
    println!("logs written to {}", args.out.display());
    Ok(())
}

fn trainer(args: TrainerArgs) -> Result<()> {
    let scenario = Scenario::resolve(&args.scenario)?;
    let opts = TrainerOptions {
        seed: args.seed,
        episodes: args.episodes,
        extend_up_to: args.extend_until_greedy,
        hp: Hyperparams::default(),
        step_cap: args.step_cap,
    };
    let trained = train_trainer(&scenario, &opts)?;
    trained.table.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "trained {} episodes; greedy rollout {} the goal in {} steps; saved {}",
        trained.episodes_run,
        if trained.rollout.reached_goal { "reaches" } else { "does not reach" },
        trained.rollout.steps,
        args.out.display()
    );
    if args.extend_until_greedy.is_some() && !trained.rollout.reached_goal {
        bail!("greedy rollout still fails after {} episodes", trained.episodes_run);
    }
    Ok(())
}

fn serve(port: Option<u16>, host: &str, dictionary: Option<PathBuf>) -> Result<()> {
    let dictionary = Arc::new(match dictionary {
        Some(path) => Dictionary::load(path)?,
        None => Dictionary::default_bilingual(),
    });
    let port = irl_live::resolve_port(port);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port)).await?;
        println!("listening on http://{}", listener.local_addr()?);
        irl_live::serve(listener, dictionary).await?;
        Ok(())
    })
}
