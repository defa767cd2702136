//! Deterministic grid-world UAV environment.
//!
//! The UAV occupies one 1 m cell of a 10x10 grid, faces one of four
//! headings and hovers at one of three altitude levels. Translations are
//! body-frame: `GoForward` follows the heading and `GoRight`/`GoLeft` strafe
//! perpendicular to it. The learning state is `(x, y, heading)`; altitude is
//! tracked for kinematics but is not part of the state index.

mod scenario;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::reward::RewardClass;

pub use scenario::{Scenario, ScenarioDocument, BUILTIN_NAMES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(ordinal: usize) -> Option<Heading> {
        Self::ALL.get(ordinal).copied()
    }

    /// Rotate 90 degrees clockwise.
    pub fn turn_right(self) -> Heading {
        Self::ALL[(self.ordinal() + 1) % 4]
    }

    /// Rotate 90 degrees counterclockwise.
    pub fn turn_left(self) -> Heading {
        Self::ALL[(self.ordinal() + 3) % 4]
    }

    pub fn opposite(self) -> Heading {
        Self::ALL[(self.ordinal() + 2) % 4]
    }

    /// Unit cell offset when moving along this heading. North is +y.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Heading::North => (0, 1),
            Heading::East => (1, 0),
            Heading::South => (0, -1),
            Heading::West => (-1, 0),
        }
    }
}

impl fmt::Display for Heading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Heading::North => "north",
            Heading::East => "east",
            Heading::South => "south",
            Heading::West => "west",
        };
        f.write_str(name)
    }
}

/// Altitude level: 0, 1, 2 for 0.5 m, 1.5 m, 2.5 m.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Altitude(u8);

impl Altitude {
    pub const MIN: Altitude = Altitude(0);
    pub const MAX: Altitude = Altitude(2);
    pub const DEFAULT: Altitude = Altitude(1);

    pub fn from_meters(meters: f64) -> Option<Altitude> {
        [0.5, 1.5, 2.5].iter().position(|&m| m == meters).map(|level| Altitude(level as u8))
    }

    pub fn meters(self) -> f64 {
        0.5 + f64::from(self.0)
    }

    pub fn level(self) -> u8 {
        self.0
    }

    pub fn up(self) -> Option<Altitude> {
        (self < Self::MAX).then(|| Altitude(self.0 + 1))
    }

    pub fn down(self) -> Option<Altitude> {
        (self > Self::MIN).then(|| Altitude(self.0 - 1))
    }
}

impl TryFrom<f64> for Altitude {
    type Error = String;

    fn try_from(meters: f64) -> Result<Self, Self::Error> {
        Altitude::from_meters(meters).ok_or_else(|| format!("altitude {meters} m is not one of 0.5, 1.5, 2.5"))
    }
}

impl From<Altitude> for f64 {
    fn from(alt: Altitude) -> f64 {
        alt.meters()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Cell {
        Cell { x, y }
    }

    pub fn offset(self, (dx, dy): (i32, i32)) -> Cell {
        Cell::new(self.x + dx, self.y + dy)
    }

    /// Squared Euclidean distance between cell centers.
    pub fn distance_sq(self, other: Cell) -> i64 {
        let dx = i64::from(self.x - other.x);
        let dy = i64::from(self.y - other.y);
        dx * dx + dy * dy
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridState {
    pub x: i32,
    pub y: i32,
    pub heading: Heading,
    pub altitude: Altitude,
}

impl GridState {
    pub fn new(x: i32, y: i32, heading: Heading, altitude: Altitude) -> GridState {
        GridState { x, y, heading, altitude }
    }

    pub fn cell(&self) -> Cell {
        Cell::new(self.x, self.y)
    }

    /// Same position and heading; altitude is ignored.
    pub fn same_pose(&self, other: &GridState) -> bool {
        self.x == other.x && self.y == other.y && self.heading == other.heading
    }
}

impl fmt::Display for GridState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {} m)", self.x, self.y, self.heading, self.altitude.meters())
    }
}

/// The nine UAV commands, numbered 1-9 in command-table order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Up,
    Down,
    GoRight,
    GoLeft,
    GoForward,
    GoBack,
    TurnRight,
    TurnLeft,
    Stop,
}

impl Action {
    pub const COUNT: usize = 9;

    pub const ALL: [Action; 9] = [
        Action::Up,
        Action::Down,
        Action::GoRight,
        Action::GoLeft,
        Action::GoForward,
        Action::GoBack,
        Action::TurnRight,
        Action::TurnLeft,
        Action::Stop,
    ];

    /// Zero-based column in the Q-table.
    pub fn index(self) -> usize {
        self as usize
    }

    /// One-based command number.
    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::GoRight => "go_right",
            Action::GoLeft => "go_left",
            Action::GoForward => "go_forward",
            Action::GoBack => "go_back",
            Action::TurnRight => "turn_right",
            Action::TurnLeft => "turn_left",
            Action::Stop => "stop",
        }
    }

    /// Body-frame direction of a translation, if this action is one.
    fn translation(self, heading: Heading) -> Option<Heading> {
        match self {
            Action::GoForward => Some(heading),
            Action::GoBack => Some(heading.opposite()),
            Action::GoRight => Some(heading.turn_right()),
            Action::GoLeft => Some(heading.turn_left()),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Action::ALL.into_iter().find(|a| a.name() == key).ok_or_else(|| format!("unknown action `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub next: GridState,
    pub reward_class: RewardClass,
    pub base_reward: f64,
    pub terminal: bool,
    pub collided: bool,
}

impl Scenario {
    /// Transition function. Blocked translations leave the pose unchanged and
    /// are flagged as collisions; clamped altitude changes are not collisions.
    pub fn apply_action(&self, s: &GridState, a: Action) -> StepOutcome {
        let mut next = *s;
        let mut collided = false;
        match a {
            Action::Up => next.altitude = s.altitude.up().unwrap_or(s.altitude),
            Action::Down => next.altitude = s.altitude.down().unwrap_or(s.altitude),
            Action::TurnRight => next.heading = s.heading.turn_right(),
            Action::TurnLeft => next.heading = s.heading.turn_left(),
            Action::Stop => {}
            _ => {
                let dir = a.translation(s.heading).expect("translation action");
                let target = s.cell().offset(dir.delta());
                if self.is_free(target) {
                    next.x = target.x;
                    next.y = target.y;
                } else {
                    collided = true;
                }
            }
        }
        let reward_class = self.classify_transition(s, &next, collided);
        StepOutcome {
            next,
            reward_class,
            base_reward: reward_class.base_value(),
            terminal: reward_class == RewardClass::Perfect,
            collided,
        }
    }

    pub fn classify_transition(&self, prev: &GridState, next: &GridState, collided: bool) -> RewardClass {
        let goal = self.goal();
        if next.cell() == goal {
            RewardClass::Perfect
        } else if collided {
            RewardClass::VeryBad
        } else if next.cell().distance_sq(goal) < prev.cell().distance_sq(goal) {
            RewardClass::Well
        } else {
            RewardClass::Bad
        }
    }
}
