use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Altitude, Cell, GridState, Heading};
use crate::error::{Error, Result};

pub const BUILTIN_NAMES: [&str; 2] = ["open", "obstacles"];

const OPEN_DOC: &str = include_str!("../../assets/scenarios/open.toml");
const OBSTACLES_DOC: &str = include_str!("../../assets/scenarios/obstacles.toml");

/// Number of pillars the `obstacles` preset must carry.
const OBSTACLE_PRESET_COUNT: usize = 11;

/// On-disk scenario layout (TOML).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub name: String,
    pub width: i32,
    pub height: i32,
    pub goal: Cell,
    #[serde(default)]
    pub obstacles: Vec<[i32; 2]>,
    pub start: StartPose,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartPose {
    pub x: i32,
    pub y: i32,
    pub heading: Heading,
    pub altitude: Altitude,
}

/// A validated grid layout with a precomputed state enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    name: String,
    width: i32,
    height: i32,
    obstacles: BTreeSet<Cell>,
    start: GridState,
    goal: Cell,
    /// Row-major cell -> rank among free cells.
    ranks: Vec<Option<usize>>,
    free_cells: Vec<Cell>,
}

impl Scenario {
    pub fn builtin(name: &str) -> Result<Scenario> {
        let doc = match name {
            "open" => OPEN_DOC,
            "obstacles" => OBSTACLES_DOC,
            other => return Err(Error::UnknownScenario(other.to_string())),
        };
        Scenario::from_toml_str(doc)
    }

    /// Resolve a built-in name or else read a scenario file.
    pub fn resolve(name_or_path: &str) -> Result<Scenario> {
        if BUILTIN_NAMES.contains(&name_or_path) {
            Scenario::builtin(name_or_path)
        } else {
            Scenario::load(name_or_path)
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
        Scenario::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn from_toml_str(text: &str) -> Result<Scenario> {
        let doc: ScenarioDocument = toml::from_str(text)?;
        Scenario::from_document(doc)
    }

    pub fn from_document(doc: ScenarioDocument) -> Result<Scenario> {
        if doc.width <= 0 || doc.height <= 0 {
            return Err(Error::Scenario(format!("grid must be non-empty, got {}x{}", doc.width, doc.height)));
        }
        let in_bounds = |c: Cell| (0..doc.width).contains(&c.x) && (0..doc.height).contains(&c.y);
        let start_cell = Cell::new(doc.start.x, doc.start.y);
        if !in_bounds(start_cell) {
            return Err(Error::Scenario(format!("start {start_cell:?} outside the grid")));
        }
        if !in_bounds(doc.goal) {
            return Err(Error::Scenario(format!("goal {:?} outside the grid", doc.goal)));
        }
        if start_cell == doc.goal {
            return Err(Error::Scenario("start and goal coincide".into()));
        }

        let mut obstacles = BTreeSet::new();
        for &[x, y] in &doc.obstacles {
            let cell = Cell::new(x, y);
            if !in_bounds(cell) {
                return Err(Error::Scenario(format!("obstacle {cell:?} outside the grid")));
            }
            if cell == start_cell {
                return Err(Error::Scenario(format!("obstacle {cell:?} on the start cell")));
            }
            if cell == doc.goal {
                return Err(Error::Scenario(format!("obstacle {cell:?} on the goal cell")));
            }
            if !obstacles.insert(cell) {
                return Err(Error::Scenario(format!("duplicate obstacle {cell:?}")));
            }
        }
        let expected = match doc.name.as_str() {
            "open" => Some(0),
            "obstacles" => Some(OBSTACLE_PRESET_COUNT),
            _ => None,
        };
        if let Some(expected) = expected {
            if obstacles.len() != expected {
                return Err(Error::Scenario(format!(
                    "preset `{}` requires {expected} obstacles, found {}",
                    doc.name,
                    obstacles.len()
                )));
            }
        }

        let mut ranks = vec![None; (doc.width * doc.height) as usize];
        let mut free_cells = Vec::new();
        for y in 0..doc.height {
            for x in 0..doc.width {
                let cell = Cell::new(x, y);
                if !obstacles.contains(&cell) {
                    ranks[(y * doc.width + x) as usize] = Some(free_cells.len());
                    free_cells.push(cell);
                }
            }
        }

        Ok(Scenario {
            name: doc.name,
            width: doc.width,
            height: doc.height,
            obstacles,
            start: GridState::new(doc.start.x, doc.start.y, doc.start.heading, doc.start.altitude),
            goal: doc.goal,
            ranks,
            free_cells,
        })
    }

    pub fn to_document(&self) -> ScenarioDocument {
        ScenarioDocument {
            name: self.name.clone(),
            width: self.width,
            height: self.height,
            goal: self.goal,
            obstacles: self.obstacles.iter().map(|c| [c.x, c.y]).collect(),
            start: StartPose {
                x: self.start.x,
                y: self.start.y,
                heading: self.start.heading,
                altitude: self.start.altitude,
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn obstacles(&self) -> &BTreeSet<Cell> {
        &self.obstacles
    }

    pub fn start(&self) -> GridState {
        self.start
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    /// |S| = free cells x 4 headings.
    pub fn num_states(&self) -> usize {
        self.free_cells.len() * Heading::ALL.len()
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        (0..self.width).contains(&cell.x) && (0..self.height).contains(&cell.y)
    }

    /// Inside the grid and not a pillar.
    pub fn is_free(&self, cell: Cell) -> bool {
        self.in_bounds(cell) && !self.obstacles.contains(&cell)
    }

    /// `(rank(x, y) * 4 + heading)`, where `rank` enumerates free cells in
    /// row-major order. Without obstacles this is `(y * width + x) * 4 + heading`.
    pub fn state_index(&self, s: &GridState) -> Result<usize> {
        let cell = s.cell();
        if !self.in_bounds(cell) {
            return Err(Error::InvalidState { x: s.x, y: s.y, reason: "outside the grid" });
        }
        let rank = self.ranks[(cell.y * self.width + cell.x) as usize].ok_or(Error::InvalidState {
            x: s.x,
            y: s.y,
            reason: "obstacle cell",
        })?;
        Ok(rank * 4 + s.heading.ordinal())
    }

    /// Inverse of [`Scenario::state_index`]; altitude is set to the start altitude.
    pub fn state_from_index(&self, index: usize) -> Option<GridState> {
        let cell = self.free_cells.get(index / 4)?;
        let heading = Heading::from_ordinal(index % 4)?;
        Some(GridState::new(cell.x, cell.y, heading, self.start.altitude))
    }
}
