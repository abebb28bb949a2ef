//! Deterministic grid-world environments with egocentric partial
//! observations.
//!
//! Five task families are supported — `empty`, `doorkey`, `redbluedoors`,
//! `unlockpickup`, `keycorridor` — all sharing one 7-action interface and one
//! observation format: a 7×7 forward-facing window with three integer
//! channels (object, color, door state) per cell, flattened to 147 numbers
//! for network input.
//!
//! Episodes are pure functions of `(seed, episode_index)`: layouts are
//! regenerated from those two numbers on every reset, so there is no hidden
//! generator state and replaying a recorded action sequence reproduces every
//! step bitwise.

pub mod layouts;
pub mod solver;
pub mod trace;

use serde::{Deserialize, Serialize};

use crate::error::EnvError;

/// Side length of the egocentric view window.
pub const VIEW_SIZE: usize = 7;
/// Channels per view cell: object id, color id, door-state id.
pub const VIEW_CHANNELS: usize = 3;
/// Flattened observation length: 7 × 7 × 3.
pub const OBS_LEN: usize = VIEW_SIZE * VIEW_SIZE * VIEW_CHANNELS;
/// Number of discrete actions.
pub const NUM_ACTIONS: usize = 7;

/// Enumeration cardinalities used to scale integer codes into `[0, 1)`.
pub const OBJECT_CARDINALITY: f64 = 9.0;
pub const COLOR_CARDINALITY: f64 = 6.0;
pub const STATE_CARDINALITY: f64 = 3.0;

/// Object-channel code for cells hidden from the agent.
pub const UNSEEN_CODE: u8 = 0;

/// The seven discrete actions, shared by every task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Left,
    Right,
    Forward,
    Pickup,
    Drop,
    Toggle,
    Done,
}

impl Action {
    pub const ALL: [Action; NUM_ACTIONS] = [
        Action::Left,
        Action::Right,
        Action::Forward,
        Action::Pickup,
        Action::Drop,
        Action::Toggle,
        Action::Done,
    ];

    pub fn index(self) -> usize {
        match self {
            Action::Left => 0,
            Action::Right => 1,
            Action::Forward => 2,
            Action::Pickup => 3,
            Action::Drop => 4,
            Action::Toggle => 5,
            Action::Done => 6,
        }
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Left => "left",
            Action::Right => "right",
            Action::Forward => "forward",
            Action::Pickup => "pickup",
            Action::Drop => "drop",
            Action::Toggle => "toggle",
            Action::Done => "done",
        }
    }
}

/// Things a grid cell can hold. Observation code is `id()`; code 0 is
/// reserved for unseen cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WorldObject {
    Empty,
    Wall,
    Floor,
    Door,
    Key,
    Ball,
    Box,
    Goal,
}

impl WorldObject {
    pub fn id(self) -> u8 {
        match self {
            WorldObject::Empty => 1,
            WorldObject::Wall => 2,
            WorldObject::Floor => 3,
            WorldObject::Door => 4,
            WorldObject::Key => 5,
            WorldObject::Ball => 6,
            WorldObject::Box => 7,
            WorldObject::Goal => 8,
        }
    }

    /// Can the agent stand on this cell (doors: only when open)?
    fn walkable(self) -> bool {
        matches!(
            self,
            WorldObject::Empty | WorldObject::Floor | WorldObject::Goal
        )
    }

    /// Can the agent pick this up?
    fn carryable(self) -> bool {
        matches!(self, WorldObject::Key | WorldObject::Ball | WorldObject::Box)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Red,
    Green,
    Blue,
    Purple,
    Yellow,
    Grey,
}

impl Color {
    pub const ALL: [Color; 6] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Purple,
        Color::Yellow,
        Color::Grey,
    ];

    pub fn id(self) -> u8 {
        match self {
            Color::Red => 0,
            Color::Green => 1,
            Color::Blue => 2,
            Color::Purple => 3,
            Color::Yellow => 4,
            Color::Grey => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DoorState {
    Open,
    Closed,
    Locked,
}

impl DoorState {
    pub fn id(self) -> u8 {
        match self {
            DoorState::Open => 0,
            DoorState::Closed => 1,
            DoorState::Locked => 2,
        }
    }
}

/// One grid cell. `door_state` is present exactly when `object` is a door.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub object: WorldObject,
    pub color: Color,
    pub door_state: Option<DoorState>,
}

impl Cell {
    pub fn empty() -> Self {
        // Empty cells encode color 0; the color channel is meaningful only
        // for colored objects.
        Cell {
            object: WorldObject::Empty,
            color: Color::Red,
            door_state: None,
        }
    }

    pub fn wall() -> Self {
        Cell {
            object: WorldObject::Wall,
            color: Color::Grey,
            door_state: None,
        }
    }

    pub fn goal() -> Self {
        Cell {
            object: WorldObject::Goal,
            color: Color::Green,
            door_state: None,
        }
    }

    pub fn key(color: Color) -> Self {
        Cell {
            object: WorldObject::Key,
            color,
            door_state: None,
        }
    }

    pub fn ball(color: Color) -> Self {
        Cell {
            object: WorldObject::Ball,
            color,
            door_state: None,
        }
    }

    pub fn locked_box(color: Color) -> Self {
        Cell {
            object: WorldObject::Box,
            color,
            door_state: None,
        }
    }

    pub fn door(color: Color, state: DoorState) -> Self {
        Cell {
            object: WorldObject::Door,
            color,
            door_state: Some(state),
        }
    }

    /// Can sight lines pass through this cell?
    fn see_through(&self) -> bool {
        match self.object {
            WorldObject::Wall => false,
            WorldObject::Door => self.door_state == Some(DoorState::Open),
            _ => true,
        }
    }

    fn walkable(&self) -> bool {
        match self.object {
            WorldObject::Door => self.door_state == Some(DoorState::Open),
            o => o.walkable(),
        }
    }
}

/// Supported task families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvName {
    Empty,
    DoorKey,
    RedBlueDoors,
    UnlockPickup,
    KeyCorridor,
}

impl EnvName {
    pub const ALL: [EnvName; 5] = [
        EnvName::Empty,
        EnvName::DoorKey,
        EnvName::RedBlueDoors,
        EnvName::UnlockPickup,
        EnvName::KeyCorridor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnvName::Empty => "empty",
            EnvName::DoorKey => "doorkey",
            EnvName::RedBlueDoors => "redbluedoors",
            EnvName::UnlockPickup => "unlockpickup",
            EnvName::KeyCorridor => "keycorridor",
        }
    }

    pub fn parse(s: &str) -> Result<EnvName, EnvError> {
        EnvName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| EnvError::UnknownEnv(s.to_string()))
    }

    /// Default size when none is given: the paper-scale variants.
    pub fn default_size(self) -> usize {
        match self {
            EnvName::Empty => 16,
            EnvName::DoorKey => 8,
            EnvName::RedBlueDoors => 8,
            EnvName::UnlockPickup => 6,
            EnvName::KeyCorridor => 3,
        }
    }
}

/// Egocentric observation: a 7×7 window of `(object, color, state)` codes.
///
/// Storage is row-major with the forward direction pointing toward row 0;
/// the agent sits at row 6, column 3. `flatten` scales each channel by its
/// enumeration cardinality so network inputs live in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    codes: [u8; OBS_LEN],
}

impl Observation {
    /// Raw integer codes, length 147, layout `(row, col, channel)`.
    pub fn codes(&self) -> &[u8; OBS_LEN] {
        &self.codes
    }

    /// `(object, color, state)` codes of one view cell.
    pub fn at(&self, row: usize, col: usize) -> (u8, u8, u8) {
        let base = (row * VIEW_SIZE + col) * VIEW_CHANNELS;
        (self.codes[base], self.codes[base + 1], self.codes[base + 2])
    }

    /// Scaled `f64` vector for network input, length 147.
    pub fn flatten(&self) -> Vec<f64> {
        flatten_codes(&self.codes)
    }
}

/// Scale raw observation codes into the `f64` network-input encoding. This
/// is the one conversion both live rollouts and snapshot-file consumers use,
/// so stored codes reproduce network inputs exactly.
pub fn flatten_codes(codes: &[u8]) -> Vec<f64> {
    let mut out = Vec::with_capacity(codes.len());
    for chunk in codes.chunks_exact(VIEW_CHANNELS) {
        out.push(chunk[0] as f64 / OBJECT_CARDINALITY);
        out.push(chunk[1] as f64 / COLOR_CARDINALITY);
        out.push(chunk[2] as f64 / STATE_CARDINALITY);
    }
    out
}

/// Outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub obs: Observation,
    pub reward: f64,
    /// Episode ended in success.
    pub terminated: bool,
    /// Episode hit the step limit without success.
    pub truncated: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// Full mutable state of one environment instance.
///
/// Layouts are pure functions of `(seed, episode_index)`; those two values
/// plus the grid contents are the complete generator state, so serializing a
/// `GridState` captures everything needed for exact resume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    pub name: EnvName,
    /// Size parameter the layout was built from (meaning varies per family).
    pub size: usize,
    pub width: usize,
    pub height: usize,
    /// Row-major cells, index `y * width + x`.
    pub cells: Vec<Cell>,
    /// `(x, y)`, x rightward, y downward.
    pub agent_pos: (usize, usize),
    /// 0 = east, 1 = south, 2 = west, 3 = north.
    pub agent_dir: u8,
    pub carrying: Option<(WorldObject, Color)>,
    pub step_count: u32,
    pub max_steps: u32,
    pub seed: u64,
    pub episode_index: u64,
    /// Set once the episode terminated or truncated.
    pub finished: bool,
}

/// Unit vector for a heading.
fn dir_vec(dir: u8) -> (isize, isize) {
    match dir % 4 {
        0 => (1, 0),
        1 => (0, 1),
        2 => (-1, 0),
        _ => (0, -1),
    }
}

/// Construct an environment, generating the episode-0 layout from `seed`.
pub fn make_env(name: EnvName, size: usize, seed: u64) -> Result<GridState, EnvError> {
    layouts::validate_size(name, size)?;
    Ok(layouts::generate(name, size, seed, 0))
}

/// Parse a combined environment id: a bare family name (`"doorkey"`), a
/// square size suffix (`"empty-8x8"`), or corridor row counts
/// (`"keycorridor-s3r1"`, room size fixed at 3).
pub fn parse_env_id(id: &str) -> Result<(EnvName, usize), EnvError> {
    if let Ok(name) = EnvName::parse(id) {
        return Ok((name, name.default_size()));
    }
    let Some((base, suffix)) = id.rsplit_once('-') else {
        return Err(EnvError::UnknownEnv(id.to_string()));
    };
    let name = EnvName::parse(base)?;
    let size = if name == EnvName::KeyCorridor {
        let rest = suffix
            .strip_prefix("s3r")
            .or_else(|| suffix.strip_prefix("S3R"))
            .ok_or_else(|| EnvError::UnknownEnv(id.to_string()))?;
        rest.parse::<usize>()
            .map_err(|_| EnvError::UnknownEnv(id.to_string()))?
    } else if let Some((a, b)) = suffix.split_once('x') {
        let w: usize = a
            .parse()
            .map_err(|_| EnvError::UnknownEnv(id.to_string()))?;
        let h: usize = b
            .parse()
            .map_err(|_| EnvError::UnknownEnv(id.to_string()))?;
        if w != h {
            return Err(EnvError::InvalidSize {
                env: base.to_string(),
                size: w,
                reason: "only square sizes are supported".into(),
            });
        }
        w
    } else {
        suffix
            .parse::<usize>()
            .map_err(|_| EnvError::UnknownEnv(id.to_string()))?
    };
    layouts::validate_size(name, size)?;
    Ok((name, size))
}

impl GridState {
    pub fn cell(&self, x: usize, y: usize) -> &Cell {
        &self.cells[y * self.width + x]
    }

    pub fn cell_mut(&mut self, x: usize, y: usize) -> &mut Cell {
        &mut self.cells[y * self.width + x]
    }

    fn in_bounds(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// Cell directly ahead of the agent, if inside the grid.
    fn front_pos(&self) -> Option<(usize, usize)> {
        let (dx, dy) = dir_vec(self.agent_dir);
        let x = self.agent_pos.0 as isize + dx;
        let y = self.agent_pos.1 as isize + dy;
        self.in_bounds(x, y).then_some((x as usize, y as usize))
    }

    /// Begin a fresh episode: regenerate the layout from
    /// `(seed, episode_index)` and return the first observation.
    pub fn reset(&mut self, episode_index: u64) -> Observation {
        *self = layouts::generate(self.name, self.size, self.seed, episode_index);
        self.observe()
    }

    /// Apply one action. Errors if the episode already finished.
    pub fn step(&mut self, action: Action) -> Result<StepResult, EnvError> {
        if self.finished {
            return Err(EnvError::EpisodeOver);
        }
        self.step_count += 1;
        let mut success = false;

        match action {
            Action::Left => self.agent_dir = (self.agent_dir + 3) % 4,
            Action::Right => self.agent_dir = (self.agent_dir + 1) % 4,
            Action::Forward => {
                if let Some((x, y)) = self.front_pos() {
                    if self.cell(x, y).walkable() {
                        self.agent_pos = (x, y);
                        if self.cell(x, y).object == WorldObject::Goal {
                            success = true;
                        }
                    }
                }
            }
            Action::Pickup => {
                if self.carrying.is_none() {
                    if let Some((x, y)) = self.front_pos() {
                        let cell = *self.cell(x, y);
                        if cell.object.carryable() {
                            self.carrying = Some((cell.object, cell.color));
                            *self.cell_mut(x, y) = Cell::empty();
                            success = match self.name {
                                EnvName::UnlockPickup => cell.object == WorldObject::Box,
                                EnvName::KeyCorridor => cell.object == WorldObject::Ball,
                                _ => false,
                            };
                        }
                    }
                }
            }
            Action::Drop => {
                if let Some((object, color)) = self.carrying {
                    if let Some((x, y)) = self.front_pos() {
                        if self.cell(x, y).object == WorldObject::Empty {
                            *self.cell_mut(x, y) = Cell {
                                object,
                                color,
                                door_state: None,
                            };
                            self.carrying = None;
                        }
                    }
                }
            }
            Action::Toggle => {
                if let Some((x, y)) = self.front_pos() {
                    success = self.toggle_at(x, y);
                }
            }
            Action::Done => {}
        }

        let terminated = success;
        let truncated = !terminated && self.step_count >= self.max_steps;
        self.finished = terminated || truncated;
        let reward = if terminated {
            1.0 - 0.9 * (self.step_count as f64 / self.max_steps as f64)
        } else {
            0.0
        };
        debug_assert!(self.cell(self.agent_pos.0, self.agent_pos.1).object != WorldObject::Wall);
        Ok(StepResult {
            obs: self.observe(),
            reward,
            terminated,
            truncated,
        })
    }

    /// Toggle the cell at `(x, y)`; returns whether this completed the task.
    fn toggle_at(&mut self, x: usize, y: usize) -> bool {
        let cell = *self.cell(x, y);
        if cell.object != WorldObject::Door {
            return false;
        }
        match cell.door_state.expect("doors carry a state") {
            DoorState::Open => {
                self.cell_mut(x, y).door_state = Some(DoorState::Closed);
                false
            }
            DoorState::Closed => {
                // The two-door task gates the blue door on the red one: blue
                // stays shut until the red door stands open, and opening it
                // then completes the episode.
                if self.name == EnvName::RedBlueDoors && cell.color == Color::Blue {
                    if self.door_open(Color::Red) {
                        self.cell_mut(x, y).door_state = Some(DoorState::Open);
                        true
                    } else {
                        false
                    }
                } else {
                    self.cell_mut(x, y).door_state = Some(DoorState::Open);
                    false
                }
            }
            DoorState::Locked => {
                if self.carrying == Some((WorldObject::Key, cell.color)) {
                    self.cell_mut(x, y).door_state = Some(DoorState::Open);
                }
                false
            }
        }
    }

    /// Whether any door of `color` currently stands open.
    fn door_open(&self, color: Color) -> bool {
        self.cells.iter().any(|c| {
            c.object == WorldObject::Door
                && c.color == color
                && c.door_state == Some(DoorState::Open)
        })
    }

    /// Build the egocentric observation for the current state.
    ///
    /// The 7×7 window extends 6 cells ahead and 3 to each side; cells outside
    /// the grid read as walls. Visibility floods outward from the agent cell
    /// and stops behind walls and non-open doors; hidden cells encode as
    /// `(0, 0, 0)`. The agent's own cell shows the carried object, if any.
    pub fn observe(&self) -> Observation {
        const N: usize = VIEW_SIZE;
        let (fx, fy) = dir_vec(self.agent_dir);
        let (rx, ry) = dir_vec(self.agent_dir + 1);

        // View cell (row, col) -> world cell; row N-1 is the agent's rank.
        let mut view = [[Cell::wall(); N]; N];
        for (row, view_row) in view.iter_mut().enumerate() {
            for (col, slot) in view_row.iter_mut().enumerate() {
                let ahead = (N - 1 - row) as isize;
                let side = col as isize - (N / 2) as isize;
                let x = self.agent_pos.0 as isize + fx * ahead + rx * side;
                let y = self.agent_pos.1 as isize + fy * ahead + ry * side;
                if self.in_bounds(x, y) {
                    *slot = *self.cell(x as usize, y as usize);
                }
            }
        }
        let agent = (N - 1, N / 2);
        view[agent.0][agent.1] = match self.carrying {
            Some((object, color)) => Cell {
                object,
                color,
                door_state: None,
            },
            None => Cell::empty(),
        };

        // Visibility flood from the agent cell toward the front row: two
        // lateral sweeps per rank, each also seeding the next rank ahead.
        let mut visible = [[false; N]; N];
        visible[agent.0][agent.1] = true;
        for row in (0..N).rev() {
            for col in 0..N - 1 {
                if !visible[row][col] || !view[row][col].see_through() {
                    continue;
                }
                visible[row][col + 1] = true;
                if row > 0 {
                    visible[row - 1][col + 1] = true;
                    visible[row - 1][col] = true;
                }
            }
            for col in (1..N).rev() {
                if !visible[row][col] || !view[row][col].see_through() {
                    continue;
                }
                visible[row][col - 1] = true;
                if row > 0 {
                    visible[row - 1][col - 1] = true;
                    visible[row - 1][col] = true;
                }
            }
        }

        let mut codes = [0u8; OBS_LEN];
        for row in 0..N {
            for col in 0..N {
                let base = (row * N + col) * VIEW_CHANNELS;
                if visible[row][col] {
                    let cell = view[row][col];
                    codes[base] = cell.object.id();
                    codes[base + 1] = cell.color.id();
                    codes[base + 2] = cell.door_state.map_or(0, DoorState::id);
                }
            }
        }
        Observation { codes }
    }

    /// ASCII dump for debugging: top-down map with the agent as `>v<^`.
    pub fn render_ascii(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                if (x, y) == self.agent_pos {
                    out.push(match self.agent_dir % 4 {
                        0 => '>',
                        1 => 'v',
                        2 => '<',
                        _ => '^',
                    });
                    continue;
                }
                let cell = self.cell(x, y);
                out.push(match cell.object {
                    WorldObject::Empty => '.',
                    WorldObject::Wall => '#',
                    WorldObject::Floor => '_',
                    WorldObject::Door => match cell.door_state {
                        Some(DoorState::Open) => '/',
                        Some(DoorState::Locked) => 'L',
                        _ => '+',
                    },
                    WorldObject::Key => 'k',
                    WorldObject::Ball => 'o',
                    WorldObject::Box => 'b',
                    WorldObject::Goal => 'G',
                });
            }
            out.push('\n');
        }
        out
    }
}
