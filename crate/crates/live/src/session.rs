//! A single paced training session driven by its own thread.
//!
//! The loop thread owns all mutable training state. Clients talk to it
//! through three channels: one-slot advice inboxes, a control queue with
//! per-command replies, and a `watch` channel carrying the latest snapshot.

use std::collections::VecDeque;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use irl_core::advice::{step_once, AgentRngs, LoopSettings, StepRecord};
use irl_core::{
    Action, AdviceConfig, AdviceEvent, AdviceInbox, AdviceKind, CommandClass, Dictionary, GridState, HumanTrainer,
    Hyperparams, QTable, Scenario, SimulatedTrainer, DEFAULT_STEP_CAP,
};
use serde::{Deserialize, Serialize};
use tokio::sync::{oneshot, watch};

pub type SessionId = u64;

/// Keep this many recent advice events and steps in each snapshot.
const RECENT: usize = 20;

pub const DEFAULT_STEP_INTERVAL_MS: u64 = 200;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("a session is already active (id {0})")]
    AlreadyActive(SessionId),
    #[error("unknown session {0}")]
    UnknownSession(SessionId),
    #[error("session is {0}, not running")]
    NotRunning(Status),
    #[error("cannot {command} a {from} session")]
    InvalidTransition { from: Status, command: Command },
    #[error("advice phrase is empty")]
    EmptyPhrase,
    #[error("session loop has exited")]
    LoopGone,
    #[error(transparent)]
    Core(#[from] irl_core::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    /// Built-in scenario name or scenario file path.
    pub scenario: String,
    pub hp: Hyperparams,
    pub advice: AdviceConfig,
    pub step_interval_ms: u64,
    pub seed: u64,
    pub step_cap: usize,
    /// Frozen table for simulated advice alongside the human.
    pub trainer_table: Option<PathBuf>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            scenario: "open".into(),
            hp: Hyperparams::default(),
            advice: AdviceConfig::NONE,
            step_interval_ms: DEFAULT_STEP_INTERVAL_MS,
            seed: 0,
            step_cap: DEFAULT_STEP_CAP,
            trainer_table: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Running,
    Paused,
    Finished,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Running => "running",
            Status::Paused => "paused",
            Status::Finished => "finished",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Pause,
    Resume,
    Reset,
    Stop,
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Command::Pause => "pause",
            Command::Resume => "resume",
            Command::Reset => "reset",
            Command::Stop => "stop",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: SessionId,
    pub scenario: String,
    pub episode: usize,
    /// Steps executed in the current episode.
    pub step: usize,
    pub agent_pose: GridState,
    pub last_action: Option<Action>,
    pub last_reward: f64,
    pub cumulative_reward: f64,
    pub status: Status,
    pub recent_advice: Vec<LoggedAdvice>,
    pub recent_steps: Vec<StepRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoggedAdvice {
    pub episode: usize,
    #[serde(flatten)]
    pub event: AdviceEvent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdviceAck {
    pub kind: AdviceKind,
    pub phrase: String,
    pub parsed_class: CommandClass,
    pub matched_phrase: String,
    pub distance: usize,
    /// An earlier unread advice of the same kind was replaced.
    pub superseded: bool,
}

/// Logs written only by the loop thread.
#[derive(Debug, Default)]
struct SessionLogs {
    advice: RwLock<Vec<LoggedAdvice>>,
    episode_trace: RwLock<Vec<StepRecord>>,
}

struct ControlMsg {
    command: Command,
    reply: oneshot::Sender<Result<Status, SessionError>>,
}

struct Handle {
    id: SessionId,
    inbox: Arc<AdviceInbox>,
    dictionary: Arc<Dictionary>,
    control: mpsc::Sender<ControlMsg>,
    snapshots: watch::Receiver<SessionState>,
    logs: Arc<SessionLogs>,
    thread: Option<JoinHandle<()>>,
}

/// Holds at most one session at a time.
pub struct SessionManager {
    dictionary: Arc<Dictionary>,
    current: Mutex<Option<Handle>>,
    next_id: AtomicU64,
}

impl SessionManager {
    pub fn new(dictionary: Arc<Dictionary>) -> SessionManager {
        SessionManager { dictionary, current: Mutex::new(None), next_id: AtomicU64::new(1) }
    }

    pub fn dictionary(&self) -> &Arc<Dictionary> {
        &self.dictionary
    }

    pub fn start(&self, cfg: SessionConfig) -> Result<SessionId, SessionError> {
        let mut current = self.current.lock().expect("session lock");
        if let Some(h) = current.as_ref() {
            return Err(SessionError::AlreadyActive(h.id));
        }
        cfg.hp.validate()?;
        cfg.advice.validate()?;
        if cfg.step_cap == 0 {
            return Err(irl_core::Error::Config("step cap must be positive".into()).into());
        }
        let scenario = Arc::new(Scenario::resolve(&cfg.scenario)?);
        let fallback = match &cfg.trainer_table {
            Some(path) => {
                let table = Arc::new(QTable::load_for(path, &scenario)?);
                Some(SimulatedTrainer::new(table, self.dictionary.clone()))
            }
            None => None,
        };

        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let inbox = AdviceInbox::new();
        let logs = Arc::new(SessionLogs::default());
        let (control_tx, control_rx) = mpsc::channel();
        let runner = Runner {
            id,
            q: QTable::new(&scenario, 0.0),
            trainer: HumanTrainer::new(inbox.clone(), fallback),
            rngs: AgentRngs::from_seed(cfg.seed),
            state: scenario.start(),
            scenario,
            dictionary: self.dictionary.clone(),
            interval: Duration::from_millis(cfg.step_interval_ms),
            cfg,
            episode: 0,
            step: 0,
            last_action: None,
            last_reward: 0.0,
            cumulative: 0.0,
            status: Status::Running,
            recent_advice: VecDeque::new(),
            recent_steps: VecDeque::new(),
            logs: logs.clone(),
        };
        let (snap_tx, snap_rx) = watch::channel(runner.snapshot());
        let thread = thread::Builder::new()
            .name(format!("session-{id}"))
            .spawn(move || runner.run(control_rx, snap_tx))
            .map_err(irl_core::Error::from)?;
        *current = Some(Handle {
            id,
            inbox,
            dictionary: self.dictionary.clone(),
            control: control_tx,
            snapshots: snap_rx,
            logs,
            thread: Some(thread),
        });
        Ok(id)
    }

    fn with<T>(&self, id: SessionId, f: impl FnOnce(&Handle) -> T) -> Result<T, SessionError> {
        let current = self.current.lock().expect("session lock");
        match current.as_ref() {
            Some(h) if h.id == id => Ok(f(h)),
            _ => Err(SessionError::UnknownSession(id)),
        }
    }

    pub fn active(&self) -> Option<SessionId> {
        self.current.lock().expect("session lock").as_ref().map(|h| h.id)
    }

    pub fn state(&self, id: SessionId) -> Result<SessionState, SessionError> {
        self.with(id, |h| h.snapshots.borrow().clone())
    }

    pub fn subscribe(&self, id: SessionId) -> Result<watch::Receiver<SessionState>, SessionError> {
        self.with(id, |h| h.snapshots.clone())
    }

    pub fn advice_log(&self, id: SessionId) -> Result<Vec<LoggedAdvice>, SessionError> {
        self.with(id, |h| h.logs.advice.read().expect("log lock").clone())
    }

    pub fn episode_trace(&self, id: SessionId) -> Result<Vec<StepRecord>, SessionError> {
        self.with(id, |h| h.logs.episode_trace.read().expect("trace lock").clone())
    }

    /// Parse `phrase` and leave it in the inbox for the loop's next drain.
    pub fn post_advice(&self, id: SessionId, kind: AdviceKind, phrase: &str) -> Result<AdviceAck, SessionError> {
        if phrase.trim().is_empty() {
            return Err(SessionError::EmptyPhrase);
        }
        self.with(id, |h| {
            let status = h.snapshots.borrow().status;
            if status != Status::Running {
                return Err(SessionError::NotRunning(status));
            }
            let m = h.dictionary.best_match(phrase, kind.domain())?;
            let superseded = h.inbox.post(kind, phrase.to_string()).is_some();
            Ok(AdviceAck {
                kind,
                phrase: phrase.to_string(),
                parsed_class: m.class,
                matched_phrase: m.matched_phrase,
                distance: m.distance,
                superseded,
            })
        })?
    }

    pub async fn control(&self, id: SessionId, command: Command) -> Result<Status, SessionError> {
        let (tx, rx) = oneshot::channel();
        self.with(id, |h| h.control.send(ControlMsg { command, reply: tx }))?.map_err(|_| SessionError::LoopGone)?;
        let status = rx.await.map_err(|_| SessionError::LoopGone)??;
        if command == Command::Stop {
            let handle = {
                let mut current = self.current.lock().expect("session lock");
                match current.as_ref() {
                    Some(h) if h.id == id => current.take(),
                    _ => None,
                }
            };
            if let Some(thread) = handle.and_then(|mut h| h.thread.take()) {
                let _ = thread.join();
            }
        }
        Ok(status)
    }
}

impl Drop for SessionManager {
    fn drop(&mut self) {
        if let Some(mut h) = self.current.get_mut().ok().and_then(Option::take) {
            let (tx, _rx) = oneshot::channel();
            let _ = h.control.send(ControlMsg { command: Command::Stop, reply: tx });
            if let Some(thread) = h.thread.take() {
                let _ = thread.join();
            }
        }
    }
}

struct Runner {
    id: SessionId,
    cfg: SessionConfig,
    scenario: Arc<Scenario>,
    dictionary: Arc<Dictionary>,
    q: QTable,
    trainer: HumanTrainer,
    rngs: AgentRngs,
    interval: Duration,
    episode: usize,
    step: usize,
    state: GridState,
    last_action: Option<Action>,
    last_reward: f64,
    cumulative: f64,
    status: Status,
    recent_advice: VecDeque<LoggedAdvice>,
    recent_steps: VecDeque<StepRecord>,
    logs: Arc<SessionLogs>,
}

enum Flow {
    Continue,
    Exit,
}

impl Runner {
    fn snapshot(&self) -> SessionState {
        SessionState {
            session_id: self.id,
            scenario: self.scenario.name().to_string(),
            episode: self.episode,
            step: self.step,
            agent_pose: self.state,
            last_action: self.last_action,
            last_reward: self.last_reward,
            cumulative_reward: self.cumulative,
            status: self.status,
            recent_advice: self.recent_advice.iter().cloned().collect(),
            recent_steps: self.recent_steps.iter().cloned().collect(),
        }
    }

    fn run(mut self, control: mpsc::Receiver<ControlMsg>, snapshots: watch::Sender<SessionState>) {
        loop {
            if self.status == Status::Running {
                let deadline = Instant::now() + self.interval;
                while self.status == Status::Running {
                    let now = Instant::now();
                    if now >= deadline {
                        break;
                    }
                    match control.recv_timeout(deadline - now) {
                        Ok(msg) => {
                            if let Flow::Exit = self.handle(msg, &snapshots) {
                                return;
                            }
                        }
                        Err(RecvTimeoutError::Timeout) => break,
                        Err(RecvTimeoutError::Disconnected) => return,
                    }
                }
                while let Ok(msg) = control.try_recv() {
                    if let Flow::Exit = self.handle(msg, &snapshots) {
                        return;
                    }
                }
                if self.status == Status::Running {
                    self.advance();
                    snapshots.send_replace(self.snapshot());
                }
            } else {
                match control.recv() {
                    Ok(msg) => {
                        if let Flow::Exit = self.handle(msg, &snapshots) {
                            return;
                        }
                    }
                    Err(_) => return,
                }
            }
        }
    }

    fn handle(&mut self, msg: ControlMsg, snapshots: &watch::Sender<SessionState>) -> Flow {
        let result = match (msg.command, self.status) {
            (Command::Pause, Status::Running) => {
                self.status = Status::Paused;
                Ok(self.status)
            }
            (Command::Resume, Status::Paused) => {
                self.status = Status::Running;
                Ok(self.status)
            }
            (Command::Reset, _) => {
                self.reset_episode();
                Ok(self.status)
            }
            (Command::Stop, _) => {
                self.status = Status::Finished;
                snapshots.send_replace(self.snapshot());
                let _ = msg.reply.send(Ok(self.status));
                return Flow::Exit;
            }
            (command, from) => Err(SessionError::InvalidTransition { from, command }),
        };
        if result.is_ok() {
            snapshots.send_replace(self.snapshot());
        }
        let _ = msg.reply.send(result);
        Flow::Continue
    }

    /// New episode from the start pose; the Q-table carries over.
    fn reset_episode(&mut self) {
        self.episode += 1;
        self.step = 0;
        self.state = self.scenario.start();
        self.last_action = None;
        self.last_reward = 0.0;
        self.cumulative = 0.0;
        self.status = Status::Running;
        self.recent_steps.clear();
        self.logs.episode_trace.write().expect("trace lock").clear();
    }

    fn advance(&mut self) {
        let scenario = self.scenario.clone();
        let dictionary = self.dictionary.clone();
        let settings = LoopSettings {
            scenario: &scenario,
            dictionary: &dictionary,
            hp: self.cfg.hp,
            advice: self.cfg.advice,
            step_cap: self.cfg.step_cap,
        };
        let rec =
            match step_once(&settings, &mut self.q, Some(&mut self.trainer), &self.state, self.step, &mut self.rngs) {
                Ok(rec) => rec,
                Err(_) => {
                    self.status = Status::Finished;
                    return;
                }
            };
        self.step += 1;
        self.state = rec.next;
        self.last_action = Some(rec.action);
        self.last_reward = rec.reward;
        self.cumulative += rec.reward;
        for event in rec.policy_advice.iter().chain(&rec.reward_advice) {
            let logged = LoggedAdvice { episode: self.episode, event: event.clone() };
            self.logs.advice.write().expect("log lock").push(logged.clone());
            push_bounded(&mut self.recent_advice, logged);
        }
        if rec.terminal || self.step >= self.cfg.step_cap {
            self.status = Status::Finished;
        }
        self.logs.episode_trace.write().expect("trace lock").push(rec.clone());
        push_bounded(&mut self.recent_steps, rec);
    }
}

fn push_bounded<T>(queue: &mut VecDeque<T>, item: T) {
    if queue.len() == RECENT {
        queue.pop_front();
    }
    queue.push_back(item);
}
