//! Experiment protocol: train independent agents under one advice
//! condition, log every episode, aggregate per-condition statistics and
//! compare conditions.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::advice::{
    run_episode, AdviceConfig, AdviceEvent, AgentRngs, EpisodeLog, LoopSettings, SimulatedTrainer, Trainer,
    DEFAULT_STEP_CAP,
};
use crate::command::Dictionary;
use crate::error::{Error, Result};
use crate::gridworld::Scenario;
use crate::qlearning::{greedy_rollout, Hyperparams, QTable, Rollout};

pub const CONFIG_FILE: &str = "config.json";
pub const EPISODES_FILE: &str = "episodes.csv";
pub const ADVICE_FILE: &str = "advice.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

/// Advice probability used by the advised conditions.
pub const DEFAULT_ADVICE_PROBABILITY: f64 = 0.15;

/// Master seeds used for the reference comparison of the four conditions.
pub const DEFAULT_MASTER_SEEDS: [u64; 3] = [1000, 2000, 3000];
/// Seed of the autonomous run that produces the reference trainer table.
pub const DEFAULT_TRAINER_SEED: u64 = 12345;
/// Episode budget when training the reference trainer until its greedy
/// rollout succeeds.
pub const DEFAULT_TRAINER_EXTENSION: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Autonomous,
    Policy,
    Reward,
    Both,
}

impl Condition {
    pub const ALL: [Condition; 4] = [Condition::Autonomous, Condition::Policy, Condition::Reward, Condition::Both];

    pub fn default_advice(self) -> AdviceConfig {
        let p = DEFAULT_ADVICE_PROBABILITY;
        match self {
            Condition::Autonomous => AdviceConfig::NONE,
            Condition::Policy => AdviceConfig { l_action: p, l_reward: 0.0 },
            Condition::Reward => AdviceConfig { l_action: 0.0, l_reward: p },
            Condition::Both => AdviceConfig { l_action: p, l_reward: p },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Condition::Autonomous => "autonomous",
            Condition::Policy => "policy",
            Condition::Reward => "reward",
            Condition::Both => "both",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Condition::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown condition `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Built-in scenario name or path to a scenario document.
    pub scenario: String,
    pub condition: Condition,
    pub n_agents: usize,
    pub n_episodes: usize,
    pub hp: Hyperparams,
    pub advice: AdviceConfig,
    pub trainer_table: Option<PathBuf>,
    pub master_seed: u64,
    pub step_cap: usize,
    /// Replacement dictionary; the shipped one when absent.
    #[serde(default)]
    pub dictionary: Option<PathBuf>,
    /// Probability that a simulated trainer phrase is corrupted by one edit.
    #[serde(default)]
    pub corruption_rate: f64,
}

impl ExperimentConfig {
    /// 20 agents x 20 episodes, alpha 0.1, gamma 0.95, epsilon 0.1 and the
    /// condition's default advice probabilities.
    pub fn standard(scenario: &str, condition: Condition, trainer_table: Option<PathBuf>) -> ExperimentConfig {
        ExperimentConfig {
            scenario: scenario.to_string(),
            condition,
            n_agents: 20,
            n_episodes: 20,
            hp: Hyperparams::default(),
            advice: condition.default_advice(),
            trainer_table,
            master_seed: 0,
            step_cap: DEFAULT_STEP_CAP,
            dictionary: None,
            corruption_rate: 0.0,
        }
    }

    pub fn run_id(&self) -> String {
        let scenario = Path::new(&self.scenario)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.scenario.clone());
        format!("{scenario}-{}-s{}", self.condition, self.master_seed)
    }

    /// Checks everything except the trainer file's presence on disk.
    pub fn validate(&self, has_trainer: bool) -> Result<()> {
        self.hp.validate()?;
        self.advice.validate()?;
        if self.n_agents == 0 || self.n_episodes == 0 || self.step_cap == 0 {
            return Err(Error::Config("agents, episodes and step cap must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.corruption_rate) {
            return Err(Error::Config(format!("corruption rate must be a probability, got {}", self.corruption_rate)));
        }
        match self.condition {
            Condition::Autonomous => {
                if self.advice.is_active() {
                    return Err(Error::Config("the autonomous condition takes no advice".into()));
                }
                if has_trainer {
                    return Err(Error::Config("the autonomous condition takes no trainer".into()));
                }
            }
            _ => {
                if !has_trainer {
                    return Err(Error::Config(format!("condition `{}` needs a trainer table", self.condition)));
                }
            }
        }
        Ok(())
    }
}

/// One row of the episode log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub run_id: String,
    pub condition: Condition,
    pub scenario: String,
    pub agent: usize,
    pub episode: usize,
    pub steps: usize,
    pub total_reward: f64,
    pub terminal: bool,
    pub policy_advice_count: usize,
    pub reward_advice_count: usize,
    pub wall_time_s: f64,
}

/// One line of the advice log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdviceRecord {
    pub agent: usize,
    pub episode: usize,
    #[serde(flatten)]
    pub event: AdviceEvent,
}

#[derive(Clone, Debug)]
pub struct AgentRun {
    pub agent: usize,
    pub seed: u64,
    pub episodes: Vec<EpisodeLog>,
    pub wall_times: Vec<f64>,
    pub final_table: QTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub scenario: String,
    pub condition: Condition,
    pub n_agents: usize,
    pub n_episodes: usize,
    /// Mean total reward of each episode index, averaged over agents.
    pub per_episode_mean: Vec<f64>,
    /// Each agent's mean total reward per episode.
    pub per_agent_totals: Vec<f64>,
    /// Mean of `per_agent_totals`.
    pub mean_total_reward: f64,
    /// Sample standard deviation of `per_agent_totals`.
    pub std_total_reward: f64,
    /// Sum of episode wall times.
    pub wall_time_s: f64,
    pub goal_rate: f64,
}

impl RunSummary {
    /// Aggregate from log rows. Rows may arrive in any order.
    pub fn from_rows(rows: &[EpisodeRow]) -> Result<RunSummary> {
        let first = rows.first().ok_or_else(|| Error::Config("no episode rows".into()))?;
        let mut by_agent: BTreeMap<usize, BTreeMap<usize, &EpisodeRow>> = BTreeMap::new();
        for row in rows {
            if by_agent.entry(row.agent).or_default().insert(row.episode, row).is_some() {
                return Err(Error::Config(format!("duplicate row for agent {} episode {}", row.agent, row.episode)));
            }
        }
        let n_agents = by_agent.len();
        let n_episodes = by_agent.values().map(BTreeMap::len).max().unwrap_or(0);
        for (agent, eps) in &by_agent {
            if eps.len() != n_episodes || eps.keys().copied().ne(0..n_episodes) {
                return Err(Error::Config(format!("agent {agent} has an incomplete set of episodes")));
            }
        }

        let per_agent_totals: Vec<f64> = by_agent
            .values()
            .map(|eps| eps.values().map(|r| r.total_reward).sum::<f64>() / n_episodes as f64)
            .collect();
        let per_episode_mean: Vec<f64> = (0..n_episodes)
            .map(|e| by_agent.values().map(|eps| eps[&e].total_reward).sum::<f64>() / n_agents as f64)
            .collect();
        let (mean, std) = mean_std(&per_agent_totals);
        let goals = rows.iter().filter(|r| r.terminal).count();

        Ok(RunSummary {
            run_id: first.run_id.clone(),
            scenario: first.scenario.clone(),
            condition: first.condition,
            n_agents,
            n_episodes,
            per_episode_mean,
            per_agent_totals,
            mean_total_reward: mean,
            std_total_reward: std,
            wall_time_s: rows.iter().map(|r| r.wall_time_s).sum(),
            goal_rate: goals as f64 / rows.len() as f64,
        })
    }
}

/// Mean and sample (n - 1) standard deviation; the deviation is 0 for n < 2.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug)]
pub struct ConditionRun {
    pub config: ExperimentConfig,
    pub summary: RunSummary,
    pub rows: Vec<EpisodeRow>,
    pub agents: Vec<AgentRun>,
    /// Wall-clock time of the whole condition, agents running in parallel.
    pub elapsed_s: f64,
}

impl ConditionRun {
    pub fn advice_records(&self) -> Vec<AdviceRecord> {
        self.agents
            .iter()
            .flat_map(|a| {
                a.episodes.iter().enumerate().flat_map(move |(e, log)| {
                    log.advice.iter().map(move |ev| AdviceRecord { agent: a.agent, episode: e, event: ev.clone() })
                })
            })
            .collect()
    }

    /// Write `config.json`, `episodes.csv`, `advice.jsonl` and `summary.json`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join(CONFIG_FILE), serde_json::to_string_pretty(&self.config)?)?;
        fs::write(dir.join(EPISODES_FILE), episodes_csv(&self.rows)?)?;
        let mut advice = fs::File::create(dir.join(ADVICE_FILE))?;
        for rec in self.advice_records() {
            serde_json::to_writer(&mut advice, &rec)?;
            advice.write_all(b"\n")?;
        }
        fs::write(dir.join(SUMMARY_FILE), serde_json::to_string_pretty(&self.summary)?)?;
        Ok(())
    }
}

pub fn episodes_csv(rows: &[EpisodeRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn read_episodes(path: impl AsRef<Path>) -> Result<Vec<EpisodeRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Resolved inputs of a condition.
#[derive(Clone, Debug)]
pub struct Resources {
    pub scenario: Arc<Scenario>,
    pub dictionary: Arc<Dictionary>,
    pub trainer: Option<Arc<QTable>>,
}

impl Resources {
    /// Load the scenario, dictionary and trainer table named by `cfg`.
    pub fn load(cfg: &ExperimentConfig) -> Result<Resources> {
        let scenario = Arc::new(Scenario::resolve(&cfg.scenario)?);
        let dictionary = Arc::new(match &cfg.dictionary {
            Some(path) => Dictionary::load(path)?,
            None => Dictionary::default_bilingual(),
        });
        let trainer = match &cfg.trainer_table {
            Some(path) => Some(Arc::new(QTable::load_for(path, &scenario)?)),
            None => None,
        };
        Ok(Resources { scenario, dictionary, trainer })
    }
}

/// Load inputs from disk, train, and optionally persist to `out`.
pub fn run_condition(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ConditionRun> {
    let resources = Resources::load(cfg)?;
    let run = run_condition_with(cfg, &resources)?;
    if let Some(dir) = out {
        run.write(dir)?;
    }
    Ok(run)
}

/// Train `cfg.n_agents` independent agents; agent `i` is seeded with
/// `master_seed ^ i`. Agents run in parallel; results are in agent order.
pub fn run_condition_with(cfg: &ExperimentConfig, res: &Resources) -> Result<ConditionRun> {
    cfg.validate(res.trainer.is_some())?;
    if let Some(t) = &res.trainer {
        t.check_scenario(&res.scenario)?;
    }
    let started = Instant::now();
    let agents =
        (0..cfg.n_agents).into_par_iter().map(|agent| train_agent(cfg, res, agent)).collect::<Result<Vec<_>>>()?;
    let elapsed_s = started.elapsed().as_secs_f64();

    let run_id = cfg.run_id();
    let rows: Vec<EpisodeRow> = agents
        .iter()
        .flat_map(|a| {
            let run_id = &run_id;
            a.episodes.iter().zip(&a.wall_times).enumerate().map(move |(e, (log, wall))| EpisodeRow {
                run_id: run_id.clone(),
                condition: cfg.condition,
                scenario: res.scenario.name().to_string(),
                agent: a.agent,
                episode: e,
                steps: log.steps,
                total_reward: log.total_reward,
                terminal: log.terminal,
                policy_advice_count: log.policy_advice_count,
                reward_advice_count: log.reward_advice_count,
                wall_time_s: *wall,
            })
        })
        .collect();
    let summary = RunSummary::from_rows(&rows)?;
    Ok(ConditionRun { config: cfg.clone(), summary, rows, agents, elapsed_s })
}

fn train_agent(cfg: &ExperimentConfig, res: &Resources, agent: usize) -> Result<AgentRun> {
    let seed = cfg.master_seed ^ agent as u64;
    let settings = LoopSettings {
        scenario: &res.scenario,
        dictionary: &res.dictionary,
        hp: cfg.hp,
        advice: cfg.advice,
        step_cap: cfg.step_cap,
    };
    let mut trainer = res
        .trainer
        .as_ref()
        .map(|t| SimulatedTrainer::new(t.clone(), res.dictionary.clone()).with_corruption(cfg.corruption_rate));
    let mut q = QTable::new(&res.scenario, 0.0);
    let mut rngs = AgentRngs::from_seed(seed);
    let mut episodes = Vec::with_capacity(cfg.n_episodes);
    let mut wall_times = Vec::with_capacity(cfg.n_episodes);
    for _ in 0..cfg.n_episodes {
        let started = Instant::now();
        let t = trainer.as_mut().map(|t| t as &mut dyn Trainer);
        let log = run_episode(&settings, &mut q, t, &mut rngs, false)?;
        wall_times.push(started.elapsed().as_secs_f64());
        episodes.push(log);
    }
    q.record_hyperparams(&cfg.hp);
    Ok(AgentRun { agent, seed, episodes, wall_times, final_table: q })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainerOptions {
    pub seed: u64,
    pub episodes: usize,
    /// Keep training past `episodes` until a greedy rollout reaches the
    /// goal, up to this many episodes in total.
    pub extend_up_to: Option<usize>,
    pub hp: Hyperparams,
    pub step_cap: usize,
}

impl Default for TrainerOptions {
    fn default() -> Self {
        TrainerOptions {
            seed: 0,
            episodes: 20,
            extend_up_to: None,
            hp: Hyperparams::default(),
            step_cap: DEFAULT_STEP_CAP,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainedTrainer {
    pub table: QTable,
    pub episodes_run: usize,
    pub rollout: Rollout,
}

/// Train one autonomous agent for reuse as a simulated trainer.
pub fn train_trainer(scenario: &Scenario, opts: &TrainerOptions) -> Result<TrainedTrainer> {
    opts.hp.validate()?;
    let dictionary = Dictionary::default_bilingual();
    let settings = LoopSettings {
        scenario,
        dictionary: &dictionary,
        hp: opts.hp,
        advice: AdviceConfig::NONE,
        step_cap: opts.step_cap,
    };
    let mut q = QTable::new(scenario, 0.0);
    let mut rngs = AgentRngs::from_seed(opts.seed);
    let limit = opts.extend_up_to.unwrap_or(opts.episodes).max(opts.episodes);
    let mut episodes_run = 0;
    let mut rollout = greedy_rollout(&q, scenario, opts.step_cap)?;
    while episodes_run < limit {
        run_episode(&settings, &mut q, None, &mut rngs, false)?;
        episodes_run += 1;
        if episodes_run >= opts.episodes {
            rollout = greedy_rollout(&q, scenario, opts.step_cap)?;
            if rollout.reached_goal || opts.extend_up_to.is_none() {
                break;
            }
        }
    }
    q.record_hyperparams(&opts.hp);
    Ok(TrainedTrainer { table: q, episodes_run, rollout })
}

/// Ordinal relations between the four conditions of one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrdinalCheck {
    pub scenario: String,
    pub policy_highest: bool,
    pub reward_lowest: bool,
    pub both_lowest_std: bool,
    /// policy > autonomous > both > reward
    pub full_order: bool,
}

impl OrdinalCheck {
    pub fn from_summaries(scenario: &str, by_condition: &BTreeMap<Condition, &RunSummary>) -> Option<OrdinalCheck> {
        let get = |c| by_condition.get(&c).map(|s| (s.mean_total_reward, s.std_total_reward));
        let (auto, policy, reward, both) =
            (get(Condition::Autonomous)?, get(Condition::Policy)?, get(Condition::Reward)?, get(Condition::Both)?);
        let means = [auto.0, policy.0, reward.0, both.0];
        let stds = [auto.1, policy.1, reward.1, both.1];
        Some(OrdinalCheck {
            scenario: scenario.to_string(),
            policy_highest: means.iter().all(|&m| m <= policy.0)
                && means.iter().filter(|&&m| m == policy.0).count() == 1,
            reward_lowest: means.iter().all(|&m| m >= reward.0)
                && means.iter().filter(|&&m| m == reward.0).count() == 1,
            both_lowest_std: stds.iter().all(|&s| s >= both.1) && stds.iter().filter(|&&s| s == both.1).count() == 1,
            full_order: policy.0 > auto.0 && auto.0 > both.0 && both.0 > reward.0,
        })
    }

    pub fn holds(&self) -> bool {
        self.policy_highest && self.reward_lowest && self.both_lowest_std
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub runs: Vec<RunSummary>,
    pub orderings: Vec<OrdinalCheck>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Structured,
    Table,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structured" | "json" => Ok(ReportFormat::Structured),
            "table" => Ok(ReportFormat::Table),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

/// Read completed run directories and recompute their summaries from the
/// episode logs.
pub fn summarize<P: AsRef<Path>>(dirs: &[P]) -> Result<Report> {
    if dirs.is_empty() {
        return Err(Error::Config("no run directories given".into()));
    }
    let mut runs = Vec::new();
    for dir in dirs {
        let dir = dir.as_ref();
        let incomplete = |reason: String| Error::IncompleteRun { path: dir.to_path_buf(), reason };
        let cfg: ExperimentConfig = serde_json::from_str(
            &fs::read_to_string(dir.join(CONFIG_FILE)).map_err(|e| incomplete(format!("{CONFIG_FILE}: {e}")))?,
        )?;
        let path = dir.join(EPISODES_FILE);
        if !path.exists() {
            return Err(incomplete(format!("missing {EPISODES_FILE}")));
        }
        let rows = read_episodes(&path)?;
        if rows.len() != cfg.n_agents * cfg.n_episodes {
            return Err(incomplete(format!(
                "expected {} episode rows, found {}",
                cfg.n_agents * cfg.n_episodes,
                rows.len()
            )));
        }
        runs.push(RunSummary::from_rows(&rows).map_err(|e| incomplete(e.to_string()))?);
    }
    Ok(report_from(runs))
}

pub fn report_from(runs: Vec<RunSummary>) -> Report {
    let mut by_scenario: BTreeMap<&str, BTreeMap<Condition, &RunSummary>> = BTreeMap::new();
    for run in &runs {
        by_scenario.entry(&run.scenario).or_default().insert(run.condition, run);
    }
    let orderings =
        by_scenario.iter().filter_map(|(scenario, conds)| OrdinalCheck::from_summaries(scenario, conds)).collect();
    Report { runs, orderings }
}

impl Report {
    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Structured => Ok(serde_json::to_string_pretty(self)?),
            ReportFormat::Table => Ok(self.table()),
        }
    }

    fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:<11} {:>14} {:>10} {:>10} {:>12}",
            "scenario", "condition", "mean reward", "std dev", "goal rate", "wall time s"
        );
        for r in &self.runs {
            let _ = writeln!(
                out,
                "{:<12} {:<11} {:>14.1} {:>10.1} {:>10.3} {:>12.3}",
                r.scenario, r.condition, r.mean_total_reward, r.std_total_reward, r.goal_rate, r.wall_time_s
            );
        }
        out.push('\n');
        out.push_str("per-episode mean reward\n");
        for r in &self.runs {
            let curve: Vec<String> = r.per_episode_mean.iter().map(|v| format!("{v:.1}")).collect();
            let _ = writeln!(out, "{}/{}: {}", r.scenario, r.condition, curve.join(" "));
        }
        for o in &self.orderings {
            out.push('\n');
            let _ = writeln!(out, "{}: policy highest = {}", o.scenario, o.policy_highest);
            let _ = writeln!(out, "{}: reward-shaping lowest = {}", o.scenario, o.reward_lowest);
            let _ = writeln!(out, "{}: both lowest std dev = {}", o.scenario, o.both_lowest_std);
            let _ = writeln!(out, "{}: policy > autonomous > both > reward = {}", o.scenario, o.full_order);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(agent: usize, episode: usize, total: f64) -> EpisodeRow {
        EpisodeRow {
            run_id: "r".into(),
            condition: Condition::Autonomous,
            scenario: "open".into(),
            agent,
            episode,
            steps: 10,
            total_reward: total,
            terminal: true,
            policy_advice_count: 0,
            reward_advice_count: 0,
            wall_time_s: 0.5,
        }
    }

    #[test]
    fn condition_defaults() {
        assert_eq!(Condition::Autonomous.default_advice(), AdviceConfig::NONE);
        assert_eq!(Condition::Policy.default_advice(), AdviceConfig { l_action: 0.15, l_reward: 0.0 });
        assert_eq!(Condition::Reward.default_advice(), AdviceConfig { l_action: 0.0, l_reward: 0.15 });
        assert_eq!(Condition::Both.default_advice(), AdviceConfig { l_action: 0.15, l_reward: 0.15 });
        assert_eq!("both".parse::<Condition>().unwrap(), Condition::Both);
    }

    #[test]
    fn config_gating() {
        let auto = ExperimentConfig::standard("open", Condition::Autonomous, None);
        assert!(auto.validate(false).is_ok());
        assert!(auto.validate(true).is_err());
        let noisy = ExperimentConfig { advice: AdviceConfig { l_action: 0.1, l_reward: 0.0 }, ..auto.clone() };
        assert!(noisy.validate(false).is_err());
        let policy = ExperimentConfig::standard("open", Condition::Policy, Some("t.json".into()));
        assert!(policy.validate(true).is_ok());
        assert!(policy.validate(false).is_err());
        assert_eq!(policy.run_id(), "open-policy-s0");
    }

    #[test]
    fn zero_variance_summary() {
        let rows: Vec<_> = (0..4).flat_map(|a| (0..3).map(move |e| row(a, e, 100.0 + e as f64))).collect();
        let s = RunSummary::from_rows(&rows).unwrap();
        assert_eq!(s.n_agents, 4);
        assert_eq!(s.n_episodes, 3);
        assert_eq!(s.per_episode_mean, vec![100.0, 101.0, 102.0]);
        assert_eq!(s.std_total_reward, 0.0);
        assert_eq!(s.mean_total_reward, 101.0);
        assert!((s.wall_time_s - 6.0).abs() < 1e-12);
    }

    #[test]
    fn summary_rejects_gaps() {
        let mut rows: Vec<_> = (0..2).flat_map(|a| (0..3).map(move |e| row(a, e, 1.0))).collect();
        rows.remove(4);
        assert!(RunSummary::from_rows(&rows).is_err());
        let mut dup: Vec<_> = (0..2).map(|e| row(0, e, 1.0)).collect();
        dup.push(row(0, 1, 1.0));
        assert!(RunSummary::from_rows(&dup).is_err());
    }

    #[test]
    fn mean_std_known_values() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
    }

    #[test]
    fn ordinal_flags() {
        let mk = |c, mean, std| RunSummary {
            run_id: String::new(),
            scenario: "open".into(),
            condition: c,
            n_agents: 1,
            n_episodes: 1,
            per_episode_mean: vec![],
            per_agent_totals: vec![],
            mean_total_reward: mean,
            std_total_reward: std,
            wall_time_s: 0.0,
            goal_rate: 1.0,
        };
        let report = report_from(vec![
            mk(Condition::Autonomous, 854.7, 264.6),
            mk(Condition::Policy, 952.2, 64.8),
            mk(Condition::Reward, 738.6, 147.1),
            mk(Condition::Both, 808.2, 40.5),
        ]);
        let o = &report.orderings[0];
        assert!(o.policy_highest && o.reward_lowest && o.both_lowest_std && o.full_order);
        assert!(o.holds());
        let table = report.render(ReportFormat::Table).unwrap();
        assert_eq!(table.lines().filter(|l| l.starts_with("open ")).count(), 4);
    }
}
