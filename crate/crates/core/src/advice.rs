//! Q-learning with two sources of variation.
//!
//! Each step the agent picks an epsilon-greedy action; with probability
//! `l_action` a trainer overrides it (policy shaping). After the environment
//! responds, with probability `l_reward` the trainer replaces the reward
//! with the shaped value of its evaluative class (reward shaping). Every
//! piece of advice travels as a phrase and is resolved by the command
//! parser before use. The Q update sees the executed action and the
//! received reward.

use std::sync::{Arc, Mutex};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::command::{CommandClass, Dictionary, Domain};
use crate::error::{Error, Result};
use crate::gridworld::{Action, GridState, Scenario, StepOutcome};
use crate::qlearning::{select_action, update_q, Hyperparams, QTable, Transition};
use crate::reward::RewardClass;
use crate::rng::{seeded, SimRng, ADVICE_STREAM, AGENT_STREAM};

/// Default episode step cap.
pub const DEFAULT_STEP_CAP: usize = 2000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdviceConfig {
    pub l_action: f64,
    pub l_reward: f64,
}

impl AdviceConfig {
    pub const NONE: AdviceConfig = AdviceConfig { l_action: 0.0, l_reward: 0.0 };

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("l_action", self.l_action), ("l_reward", self.l_reward)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must be a probability, got {p}")));
            }
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.l_action > 0.0 || self.l_reward > 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdviceKind {
    Policy,
    Reward,
}

impl AdviceKind {
    pub fn domain(self) -> Domain {
        match self {
            AdviceKind::Policy => Domain::Action,
            AdviceKind::Reward => Domain::Reward,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdviceSource {
    Simulated,
    Human,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdviceEvent {
    pub step: usize,
    pub kind: AdviceKind,
    pub raw_phrase: String,
    pub parsed_class: CommandClass,
    pub distance: usize,
    pub source: AdviceSource,
}

/// A source of advice phrases.
pub trait Trainer: Send {
    /// Pending advice from a human, consumed on read.
    fn take_pending(&mut self, _kind: AdviceKind) -> Option<String> {
        None
    }

    /// Phrase for the action this trainer would take at `state`.
    fn suggest_action(&mut self, scenario: &Scenario, state: &GridState, rng: &mut SimRng) -> Option<String>;

    /// Phrase evaluating the transition in `outcome`.
    fn suggest_reward(&mut self, outcome: &StepOutcome, rng: &mut SimRng) -> Option<String>;
}

/// A frozen, previously trained agent that voices its advice.
#[derive(Clone, Debug)]
pub struct SimulatedTrainer {
    table: Arc<QTable>,
    dictionary: Arc<Dictionary>,
    corruption_rate: f64,
}

impl SimulatedTrainer {
    pub fn new(table: Arc<QTable>, dictionary: Arc<Dictionary>) -> SimulatedTrainer {
        SimulatedTrainer { table, dictionary, corruption_rate: 0.0 }
    }

    /// Probability that a voiced phrase gets one random character edit.
    pub fn with_corruption(mut self, rate: f64) -> SimulatedTrainer {
        self.corruption_rate = rate;
        self
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }

    /// Greedy action of the frozen table; ties broken at random.
    pub fn recommended_action(&self, scenario: &Scenario, state: &GridState, rng: &mut SimRng) -> Option<Action> {
        let index = scenario.state_index(state).ok()?;
        Some(select_action(&self.table, index, 0.0, rng))
    }

    fn voice(&self, class: CommandClass, rng: &mut SimRng) -> Option<String> {
        let phrases: Vec<&str> = self.dictionary.phrases_for(class).map(|e| e.phrase.as_str()).collect();
        if phrases.is_empty() {
            return None;
        }
        let phrase = phrases[rng.random_range(0..phrases.len())].to_string();
        if self.corruption_rate > 0.0 && rng.random::<f64>() < self.corruption_rate {
            Some(corrupt(&phrase, rng))
        } else {
            Some(phrase)
        }
    }
}

/// Apply one random single-character insertion, deletion or substitution.
pub fn corrupt(phrase: &str, rng: &mut SimRng) -> String {
    const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    let mut chars: Vec<char> = phrase.chars().collect();
    let letter = LETTERS[rng.random_range(0..LETTERS.len())] as char;
    match (rng.random_range(0..3), chars.is_empty()) {
        (0, _) | (_, true) => {
            let at = rng.random_range(0..=chars.len());
            chars.insert(at, letter);
        }
        (1, false) => {
            let at = rng.random_range(0..chars.len());
            chars.remove(at);
        }
        _ => {
            let at = rng.random_range(0..chars.len());
            chars[at] = if chars[at] == letter {
                if letter == 'a' {
                    'b'
                } else {
                    'a'
                }
            } else {
                letter
            };
        }
    }
    chars.into_iter().collect()
}

impl Trainer for SimulatedTrainer {
    fn suggest_action(&mut self, scenario: &Scenario, state: &GridState, rng: &mut SimRng) -> Option<String> {
        let action = self.recommended_action(scenario, state, rng)?;
        self.voice(CommandClass::Action(action), rng)
    }

    fn suggest_reward(&mut self, outcome: &StepOutcome, rng: &mut SimRng) -> Option<String> {
        self.voice(CommandClass::Reward(outcome.reward_class), rng)
    }
}

/// One-slot mailboxes, one per advice kind. Posting never blocks and the
/// newest phrase replaces any unread one.
#[derive(Debug, Default)]
pub struct AdviceInbox {
    policy: Mutex<Option<String>>,
    reward: Mutex<Option<String>>,
}

impl AdviceInbox {
    pub fn new() -> Arc<AdviceInbox> {
        Arc::new(AdviceInbox::default())
    }

    fn slot(&self, kind: AdviceKind) -> &Mutex<Option<String>> {
        match kind {
            AdviceKind::Policy => &self.policy,
            AdviceKind::Reward => &self.reward,
        }
    }

    /// Store `phrase`, returning the unread phrase it superseded.
    pub fn post(&self, kind: AdviceKind, phrase: String) -> Option<String> {
        self.slot(kind).lock().expect("inbox lock").replace(phrase)
    }

    pub fn take(&self, kind: AdviceKind) -> Option<String> {
        self.slot(kind).lock().expect("inbox lock").take()
    }

    pub fn clear(&self) {
        self.take(AdviceKind::Policy);
        self.take(AdviceKind::Reward);
    }
}

/// Advice from a live human, optionally backed by a simulated trainer for
/// the probabilistic draws. Human advice always wins.
#[derive(Debug)]
pub struct HumanTrainer {
    inbox: Arc<AdviceInbox>,
    fallback: Option<SimulatedTrainer>,
}

impl HumanTrainer {
    pub fn new(inbox: Arc<AdviceInbox>, fallback: Option<SimulatedTrainer>) -> HumanTrainer {
        HumanTrainer { inbox, fallback }
    }
}

impl Trainer for HumanTrainer {
    fn take_pending(&mut self, kind: AdviceKind) -> Option<String> {
        self.inbox.take(kind)
    }

    fn suggest_action(&mut self, scenario: &Scenario, state: &GridState, rng: &mut SimRng) -> Option<String> {
        self.fallback.as_mut()?.suggest_action(scenario, state, rng)
    }

    fn suggest_reward(&mut self, outcome: &StepOutcome, rng: &mut SimRng) -> Option<String> {
        self.fallback.as_mut()?.suggest_reward(outcome, rng)
    }
}

/// Pending human advice first; otherwise a gated draw from the trainer.
/// The gate consumes a random draw only when `probability > 0`.
fn gather(
    trainer: &mut dyn Trainer,
    kind: AdviceKind,
    probability: f64,
    rng: &mut SimRng,
    suggest: impl FnOnce(&mut dyn Trainer, &mut SimRng) -> Option<String>,
) -> Option<(String, AdviceSource)> {
    if let Some(phrase) = trainer.take_pending(kind) {
        return Some((phrase, AdviceSource::Human));
    }
    if probability > 0.0 && rng.random::<f64>() < probability {
        return suggest(trainer, rng).map(|p| (p, AdviceSource::Simulated));
    }
    None
}

fn parse(dictionary: &Dictionary, kind: AdviceKind, phrase: String, source: AdviceSource, step: usize) -> AdviceEvent {
    let m = dictionary.best_match(&phrase, kind.domain()).expect("validated dictionaries cover both domains");
    AdviceEvent { step, kind, raw_phrase: phrase, parsed_class: m.class, distance: m.distance, source }
}

/// Policy shaping: possibly replace `agent_action` with the trainer's advice.
#[allow(clippy::too_many_arguments)]
pub fn maybe_policy_advice(
    trainer: &mut dyn Trainer,
    dictionary: &Dictionary,
    scenario: &Scenario,
    state: &GridState,
    agent_action: Action,
    cfg: &AdviceConfig,
    step: usize,
    rng: &mut SimRng,
) -> (Action, Option<AdviceEvent>) {
    let advice = gather(trainer, AdviceKind::Policy, cfg.l_action, rng, |t, r| t.suggest_action(scenario, state, r));
    match advice {
        Some((phrase, source)) => {
            let event = parse(dictionary, AdviceKind::Policy, phrase, source, step);
            let action = event.parsed_class.as_action().expect("action-domain match");
            (action, Some(event))
        }
        None => (agent_action, None),
    }
}

/// Reward shaping: possibly replace the base reward with the shaped value
/// of the advised class.
pub fn maybe_reward_advice(
    trainer: &mut dyn Trainer,
    dictionary: &Dictionary,
    outcome: &StepOutcome,
    cfg: &AdviceConfig,
    step: usize,
    rng: &mut SimRng,
) -> (f64, Option<AdviceEvent>) {
    let advice = gather(trainer, AdviceKind::Reward, cfg.l_reward, rng, |t, r| t.suggest_reward(outcome, r));
    match advice {
        Some((phrase, source)) => {
            let event = parse(dictionary, AdviceKind::Reward, phrase, source, step);
            let class: RewardClass = event.parsed_class.as_reward().expect("reward-domain match");
            (class.shaped_value(), Some(event))
        }
        None => (outcome.base_reward, None),
    }
}

/// Per-agent random streams: one for exploration, one for advice.
#[derive(Clone, Debug)]
pub struct AgentRngs {
    pub agent: SimRng,
    pub advice: SimRng,
}

impl AgentRngs {
    pub fn from_seed(seed: u64) -> AgentRngs {
        AgentRngs { agent: seeded(seed, AGENT_STREAM), advice: seeded(seed, ADVICE_STREAM) }
    }
}

/// Everything fixed for the duration of a training loop.
#[derive(Clone, Copy, Debug)]
pub struct LoopSettings<'a> {
    pub scenario: &'a Scenario,
    pub dictionary: &'a Dictionary,
    pub hp: Hyperparams,
    pub advice: AdviceConfig,
    pub step_cap: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub state: GridState,
    /// Epsilon-greedy choice before any policy advice.
    pub agent_action: Action,
    /// Action actually executed.
    pub action: Action,
    pub reward_class: RewardClass,
    pub base_reward: f64,
    /// Reward actually received.
    pub reward: f64,
    pub next: GridState,
    pub terminal: bool,
    pub collided: bool,
    pub policy_advice: Option<AdviceEvent>,
    pub reward_advice: Option<AdviceEvent>,
}

impl StepRecord {
    pub fn transition(&self) -> Transition {
        Transition {
            step: self.step,
            state: self.state,
            action: self.action,
            reward: self.reward,
            next: self.next,
            terminal: self.terminal,
        }
    }
}

/// Execute one step: select, advise, act, advise, learn.
pub fn step_once(
    settings: &LoopSettings<'_>,
    q: &mut QTable,
    trainer: Option<&mut dyn Trainer>,
    state: &GridState,
    step: usize,
    rngs: &mut AgentRngs,
) -> Result<StepRecord> {
    let scenario = settings.scenario;
    let si = scenario.state_index(state)?;
    let agent_action = select_action(q, si, settings.hp.epsilon, &mut rngs.agent);

    let mut trainer = trainer;
    let (action, policy_advice) = match trainer.as_deref_mut() {
        Some(t) => maybe_policy_advice(
            t,
            settings.dictionary,
            scenario,
            state,
            agent_action,
            &settings.advice,
            step,
            &mut rngs.advice,
        ),
        None => (agent_action, None),
    };

    let outcome = scenario.apply_action(state, action);

    let (reward, reward_advice) = match trainer {
        Some(t) => maybe_reward_advice(t, settings.dictionary, &outcome, &settings.advice, step, &mut rngs.advice),
        None => (outcome.base_reward, None),
    };

    let ni = scenario.state_index(&outcome.next)?;
    update_q(q, si, action, reward, ni, outcome.terminal, &settings.hp)?;

    Ok(StepRecord {
        step,
        state: *state,
        agent_action,
        action,
        reward_class: outcome.reward_class,
        base_reward: outcome.base_reward,
        reward,
        next: outcome.next,
        terminal: outcome.terminal,
        collided: outcome.collided,
        policy_advice,
        reward_advice,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub steps: usize,
    pub total_reward: f64,
    pub terminal: bool,
    pub policy_advice_count: usize,
    pub reward_advice_count: usize,
    pub advice: Vec<AdviceEvent>,
    /// Per-step records; empty unless tracing was requested.
    pub trace: Vec<StepRecord>,
}

impl EpisodeLog {
    pub fn record(&mut self, rec: &StepRecord, keep_trace: bool) {
        self.steps += 1;
        self.total_reward += rec.reward;
        self.terminal = rec.terminal;
        if let Some(ev) = &rec.policy_advice {
            self.policy_advice_count += 1;
            self.advice.push(ev.clone());
        }
        if let Some(ev) = &rec.reward_advice {
            self.reward_advice_count += 1;
            self.advice.push(ev.clone());
        }
        if keep_trace {
            self.trace.push(rec.clone());
        }
    }
}

/// Run one episode from the scenario start until the goal or the step cap.
pub fn run_episode(
    settings: &LoopSettings<'_>,
    q: &mut QTable,
    trainer: Option<&mut dyn Trainer>,
    rngs: &mut AgentRngs,
    keep_trace: bool,
) -> Result<EpisodeLog> {
    q.check_scenario(settings.scenario)?;
    if settings.advice.is_active() && trainer.is_none() {
        return Err(Error::Config("advice probabilities are non-zero but no trainer was given".into()));
    }
    let mut trainer = trainer;
    let mut log = EpisodeLog::default();
    let mut state = settings.scenario.start();
    for step in 0..settings.step_cap {
        let t = trainer.as_mut().map(|t| &mut **t as &mut dyn Trainer);
        let rec = step_once(settings, q, t, &state, step, rngs)?;
        log.record(&rec, keep_trace);
        if rec.terminal {
            break;
        }
        state = rec.next;
    }
    Ok(log)
}
