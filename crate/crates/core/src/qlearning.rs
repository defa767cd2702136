//! Tabular Q-learning: dense Q-table, epsilon-greedy selection, the one-step
//! update and table persistence.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::{Action, GridState, Scenario};
use crate::rng::SimRng;

/// Identifier written into every saved Q-table document.
pub const QTABLE_FORMAT: &str = "irl-qtable/1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams { alpha: 0.1, gamma: 0.95, epsilon: 0.1 }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Hyperparams(format!("alpha must be in (0, 1], got {}", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Hyperparams(format!("gamma must be in [0, 1), got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Hyperparams(format!("epsilon must be in [0, 1], got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Learning rate and discount recorded alongside a saved table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordedParams {
    pub alpha: f64,
    pub gamma: f64,
}

/// Dense |S| x 9 action-value table.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    scenario_id: String,
    rows: usize,
    values: Vec<f64>,
    recorded: Option<RecordedParams>,
}

impl QTable {
    pub fn new(scenario: &Scenario, init_value: f64) -> QTable {
        let rows = scenario.num_states();
        QTable {
            scenario_id: scenario.name().to_string(),
            rows,
            values: vec![init_value; rows * Action::COUNT],
            recorded: None,
        }
    }

    pub fn scenario_id(&self) -> &str {
        &self.scenario_id
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn recorded_params(&self) -> Option<RecordedParams> {
        self.recorded
    }

    pub fn record_hyperparams(&mut self, hp: &Hyperparams) {
        self.recorded = Some(RecordedParams { alpha: hp.alpha, gamma: hp.gamma });
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * Action::COUNT..(state + 1) * Action::COUNT]
    }

    pub fn get(&self, state: usize, action: Action) -> f64 {
        self.values[state * Action::COUNT + action.index()]
    }

    pub fn set(&mut self, state: usize, action: Action, value: f64) {
        self.values[state * Action::COUNT + action.index()] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// All actions attaining the row maximum, in action order.
    pub fn argmax_set(&self, state: usize) -> Vec<Action> {
        let best = self.max_value(state);
        Action::ALL.into_iter().filter(|a| self.get(state, *a) == best).collect()
    }

    /// Lowest-numbered argmax action.
    pub fn first_argmax(&self, state: usize) -> Action {
        self.argmax_set(state)[0]
    }

    /// Fails if this table does not belong to `scenario`.
    pub fn check_scenario(&self, scenario: &Scenario) -> Result<()> {
        if self.scenario_id != scenario.name() {
            return Err(Error::ScenarioMismatch {
                expected: scenario.name().to_string(),
                found: self.scenario_id.clone(),
            });
        }
        if self.rows != scenario.num_states() {
            return Err(Error::Shape {
                expected_rows: scenario.num_states(),
                expected_cols: Action::COUNT,
                rows: self.rows,
                cols: Action::COUNT,
            });
        }
        Ok(())
    }

    pub fn to_document(&self) -> QTableDocument {
        QTableDocument {
            format: QTABLE_FORMAT.to_string(),
            scenario: self.scenario_id.clone(),
            states: self.rows,
            actions: Action::ALL.iter().map(|a| a.name().to_string()).collect(),
            alpha: self.recorded.map(|r| r.alpha),
            gamma: self.recorded.map(|r| r.gamma),
            values: self.values.chunks(Action::COUNT).map(<[f64]>::to_vec).collect(),
        }
    }

    pub fn from_document(doc: QTableDocument) -> Result<QTable> {
        if doc.format != QTABLE_FORMAT {
            return Err(Error::Parse(format!("unsupported q-table format `{}`", doc.format)));
        }
        let expected: Vec<&str> = Action::ALL.iter().map(|a| a.name()).collect();
        if doc.actions != expected {
            return Err(Error::Parse(format!("unexpected action columns {:?}", doc.actions)));
        }
        if doc.values.len() != doc.states {
            return Err(Error::Shape {
                expected_rows: doc.states,
                expected_cols: Action::COUNT,
                rows: doc.values.len(),
                cols: Action::COUNT,
            });
        }
        let mut values = Vec::with_capacity(doc.states * Action::COUNT);
        for row in &doc.values {
            if row.len() != Action::COUNT {
                return Err(Error::Shape {
                    expected_rows: doc.states,
                    expected_cols: Action::COUNT,
                    rows: doc.values.len(),
                    cols: row.len(),
                });
            }
            if let Some(&bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite(bad));
            }
            values.extend_from_slice(row);
        }
        let recorded = match (doc.alpha, doc.gamma) {
            (Some(alpha), Some(gamma)) => Some(RecordedParams { alpha, gamma }),
            _ => None,
        };
        Ok(QTable { scenario_id: doc.scenario, rows: doc.states, values, recorded })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<QTable> {
        QTable::from_document(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<QTable> {
        QTable::from_json(&fs::read_to_string(path)?)
    }

    /// Load a table and check it against the scenario it will be used with.
    pub fn load_for(path: impl AsRef<Path>, scenario: &Scenario) -> Result<QTable> {
        let q = QTable::load(path)?;
        q.check_scenario(scenario)?;
        Ok(q)
    }
}

/// Persisted Q-table. `values` is row-major: one row of 9 per state index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QTableDocument {
    pub format: String,
    pub scenario: String,
    pub states: usize,
    pub actions: Vec<String>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub values: Vec<Vec<f64>>,
}

/// Epsilon-greedy selection. Greedy ties are broken uniformly at random.
///
/// Always consumes one draw for the exploration test and at most one more
/// for the action, so a given seed yields a fixed action sequence.
pub fn select_action(q: &QTable, state: usize, epsilon: f64, rng: &mut SimRng) -> Action {
    if rng.random::<f64>() < epsilon {
        return Action::ALL[rng.random_range(0..Action::COUNT)];
    }
    let ties = q.argmax_set(state);
    if ties.len() == 1 {
        ties[0]
    } else {
        ties[rng.random_range(0..ties.len())]
    }
}

/// `Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a))`, with the
/// bootstrap term dropped when `terminal`. Returns the new value.
///
/// Evaluated as `(1 - alpha) * Q + alpha * target` so that alpha 1 stores
/// the target exactly.
pub fn update_q(
    q: &mut QTable,
    state: usize,
    action: Action,
    reward: f64,
    next_state: usize,
    terminal: bool,
    hp: &Hyperparams,
) -> Result<f64> {
    if !reward.is_finite() {
        return Err(Error::NonFinite(reward));
    }
    let bootstrap = if terminal { 0.0 } else { q.max_value(next_state) };
    let old = q.get(state, action);
    let target = reward + hp.gamma * bootstrap;
    let new = (1.0 - hp.alpha) * old + hp.alpha * target;
    q.set(state, action, new);
    Ok(new)
}

/// One environment step as seen by the learner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub step: usize,
    pub state: GridState,
    pub action: Action,
    pub reward: f64,
    pub next: GridState,
    pub terminal: bool,
}

/// Plain Q-learning for one episode with no external advice.
pub fn plain_episode(
    q: &mut QTable,
    scenario: &Scenario,
    hp: &Hyperparams,
    step_cap: usize,
    rng: &mut SimRng,
) -> Result<Vec<Transition>> {
    q.check_scenario(scenario)?;
    let mut trace = Vec::new();
    let mut s = scenario.start();
    for step in 0..step_cap {
        let si = scenario.state_index(&s)?;
        let a = select_action(q, si, hp.epsilon, rng);
        let out = scenario.apply_action(&s, a);
        let ni = scenario.state_index(&out.next)?;
        update_q(q, si, a, out.base_reward, ni, out.terminal, hp)?;
        trace.push(Transition {
            step,
            state: s,
            action: a,
            reward: out.base_reward,
            next: out.next,
            terminal: out.terminal,
        });
        if out.terminal {
            break;
        }
        s = out.next;
    }
    Ok(trace)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    pub reached_goal: bool,
    pub steps: usize,
    pub total_reward: f64,
    pub actions: Vec<Action>,
}

/// Deterministic greedy rollout (lowest-numbered argmax, no learning).
pub fn greedy_rollout(q: &QTable, scenario: &Scenario, step_cap: usize) -> Result<Rollout> {
    q.check_scenario(scenario)?;
    let mut s = scenario.start();
    let mut total = 0.0;
    let mut actions = Vec::new();
    for _ in 0..step_cap {
        let a = q.first_argmax(scenario.state_index(&s)?);
        let out = scenario.apply_action(&s, a);
        total += out.base_reward;
        actions.push(a);
        if out.terminal {
            return Ok(Rollout { reached_goal: true, steps: actions.len(), total_reward: total, actions });
        }
        s = out.next;
    }
    Ok(Rollout { reached_goal: false, steps: actions.len(), total_reward: total, actions })
}
