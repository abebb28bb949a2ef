//! Procedural layout generation.
//!
//! Every episode layout is a pure function of `(seed, episode_index)`: the
//! pair is mixed into a single 64-bit value that seeds a counter-based
//! generator, and each family draws its random placements from that stream
//! in a fixed order. Regenerating with the same inputs always reproduces the
//! same grid.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Cell, Color, DoorState, EnvName, GridState};
use crate::error::EnvError;

/// 64-bit finalizer with good avalanche behavior (SplitMix64).
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derive the layout seed for one episode of one run seed.
pub fn episode_seed(seed: u64, episode_index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(episode_index))
}

/// Validate the size parameter for a family. Bounds exist so every layout
/// has room for its required objects and grids stay desk-sized.
pub fn validate_size(name: EnvName, size: usize) -> Result<(), EnvError> {
    let (min, max, what) = match name {
        EnvName::Empty => (4, 32, "side length"),
        EnvName::DoorKey => (5, 32, "side length"),
        EnvName::RedBlueDoors => (4, 32, "side length"),
        EnvName::UnlockPickup => (4, 32, "room size"),
        EnvName::KeyCorridor => (1, 8, "row count"),
    };
    if size < min || size > max {
        return Err(EnvError::InvalidSize {
            env: name.as_str().to_string(),
            size,
            reason: format!("{what} must be in {min}..={max}"),
        });
    }
    Ok(())
}

/// Step limit for a layout, scaled to leave slack over scripted solutions.
fn max_steps(name: EnvName, size: usize) -> u32 {
    let s = size as u32;
    match name {
        EnvName::Empty => 4 * s * s,
        EnvName::DoorKey => 10 * s * s,
        EnvName::RedBlueDoors => 20 * s,
        EnvName::UnlockPickup => 8 * s * s,
        // Rooms are fixed at 3x3 regardless of the row count.
        EnvName::KeyCorridor => 30 * 9,
    }
}

struct Builder {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    rng: ChaCha8Rng,
}

impl Builder {
    /// Grid of the given size: outer walls, empty interior.
    fn walled(width: usize, height: usize, rng: ChaCha8Rng) -> Self {
        let mut cells = vec![Cell::empty(); width * height];
        for x in 0..width {
            cells[x] = Cell::wall();
            cells[(height - 1) * width + x] = Cell::wall();
        }
        for y in 0..height {
            cells[y * width] = Cell::wall();
            cells[y * width + width - 1] = Cell::wall();
        }
        Builder {
            width,
            height,
            cells,
            rng,
        }
    }

    fn set(&mut self, x: usize, y: usize, cell: Cell) {
        self.cells[y * self.width + x] = cell;
    }

    fn get(&self, x: usize, y: usize) -> &Cell {
        &self.cells[y * self.width + x]
    }

    fn random_color(&mut self) -> Color {
        Color::ALL[self.rng.random_range(0..Color::ALL.len())]
    }

    /// Rejection-sample an empty cell with `x` in `xs` and `y` in `ys`
    /// (half-open ranges). The sampled region always contains empty cells in
    /// the layouts below, so this terminates.
    fn place_empty(
        &mut self,
        xs: std::ops::Range<usize>,
        ys: std::ops::Range<usize>,
    ) -> (usize, usize) {
        loop {
            let x = self.rng.random_range(xs.clone());
            let y = self.rng.random_range(ys.clone());
            if self.get(x, y).object == super::WorldObject::Empty {
                return (x, y);
            }
        }
    }

    fn finish(
        mut self,
        name: EnvName,
        size: usize,
        seed: u64,
        episode_index: u64,
        agent_region: (std::ops::Range<usize>, std::ops::Range<usize>),
    ) -> GridState {
        let agent_pos = self.place_empty(agent_region.0, agent_region.1);
        let agent_dir = self.rng.random_range(0..4u8);
        GridState {
            name,
            size,
            width: self.width,
            height: self.height,
            cells: self.cells,
            agent_pos,
            agent_dir,
            carrying: None,
            step_count: 0,
            max_steps: max_steps(name, size),
            seed,
            episode_index,
            finished: false,
        }
    }
}

/// Generate the layout for one episode. `validate_size` must have accepted
/// `(name, size)` beforehand.
pub(crate) fn generate(name: EnvName, size: usize, seed: u64, episode_index: u64) -> GridState {
    let rng = ChaCha8Rng::seed_from_u64(episode_seed(seed, episode_index));
    match name {
        EnvName::Empty => empty(size, seed, episode_index, rng),
        EnvName::DoorKey => doorkey(size, seed, episode_index, rng),
        EnvName::RedBlueDoors => redbluedoors(size, seed, episode_index, rng),
        EnvName::UnlockPickup => unlockpickup(size, seed, episode_index, rng),
        EnvName::KeyCorridor => keycorridor(size, seed, episode_index, rng),
    }
}

/// Single room with the goal in the bottom-right corner; random agent start.
fn empty(size: usize, seed: u64, episode_index: u64, rng: ChaCha8Rng) -> GridState {
    let mut b = Builder::walled(size, size, rng);
    b.set(size - 2, size - 2, Cell::goal());
    b.finish(
        EnvName::Empty,
        size,
        seed,
        episode_index,
        (1..size - 1, 1..size - 1),
    )
}

/// Two chambers split by a wall with a locked yellow door; the key sits on
/// the agent's side, the goal on the far side.
fn doorkey(size: usize, seed: u64, episode_index: u64, rng: ChaCha8Rng) -> GridState {
    let mut b = Builder::walled(size, size, rng);
    let split_x = b.rng.random_range(2..size - 2);
    for y in 0..size {
        b.set(split_x, y, Cell::wall());
    }
    let door_y = b.rng.random_range(1..size - 1);
    b.set(split_x, door_y, Cell::door(Color::Yellow, DoorState::Locked));
    b.set(size - 2, size - 2, Cell::goal());
    let key_pos = b.place_empty(1..split_x, 1..size - 1);
    b.set(key_pos.0, key_pos.1, Cell::key(Color::Yellow));
    b.finish(
        EnvName::DoorKey,
        size,
        seed,
        episode_index,
        (1..split_x, 1..size - 1),
    )
}

/// One room with a red door in the west wall and a blue door in the east
/// wall; the blue door opens only after the red one and ends the episode.
fn redbluedoors(size: usize, seed: u64, episode_index: u64, rng: ChaCha8Rng) -> GridState {
    let mut b = Builder::walled(size, size, rng);
    let red_y = b.rng.random_range(1..size - 1);
    let blue_y = b.rng.random_range(1..size - 1);
    b.set(0, red_y, Cell::door(Color::Red, DoorState::Closed));
    b.set(size - 1, blue_y, Cell::door(Color::Blue, DoorState::Closed));
    b.finish(
        EnvName::RedBlueDoors,
        size,
        seed,
        episode_index,
        (1..size - 1, 1..size - 1),
    )
}

/// Two rooms joined by a locked door; the key is with the agent, and picking
/// up the box in the far room completes the task. `size` is the room side.
fn unlockpickup(size: usize, seed: u64, episode_index: u64, rng: ChaCha8Rng) -> GridState {
    let width = 2 * size - 1;
    let mut b = Builder::walled(width, size, rng);
    let split_x = size - 1;
    for y in 0..size {
        b.set(split_x, y, Cell::wall());
    }
    let door_color = b.random_color();
    let door_y = b.rng.random_range(1..size - 1);
    b.set(split_x, door_y, Cell::door(door_color, DoorState::Locked));
    let key_pos = b.place_empty(1..split_x, 1..size - 1);
    b.set(key_pos.0, key_pos.1, Cell::key(door_color));
    let box_color = b.random_color();
    let box_pos = b.place_empty(split_x + 1..width - 1, 1..size - 1);
    b.set(box_pos.0, box_pos.1, Cell::locked_box(box_color));
    b.finish(
        EnvName::UnlockPickup,
        size,
        seed,
        episode_index,
        (1..split_x, 1..size - 1),
    )
}

/// A vertical corridor flanked by `size` rows of 3×3 rooms (1×1 interiors).
/// One right-hand room hides a ball behind a locked door; the matching key
/// lies in a left-hand room behind an ordinary door. Picking up the ball
/// completes the task.
fn keycorridor(rows: usize, seed: u64, episode_index: u64, rng: ChaCha8Rng) -> GridState {
    let width = 7;
    let height = 2 * rows + 1;
    let mut b = Builder::walled(width, height, rng);
    // Interior walls on even columns/rows, then carve the corridor and rooms.
    for y in 1..height - 1 {
        for x in 1..width - 1 {
            if x % 2 == 0 || y % 2 == 0 {
                b.set(x, y, Cell::wall());
            }
        }
    }
    for y in 1..height - 1 {
        b.set(3, y, Cell::empty()); // corridor
    }

    let locked_row = b.rng.random_range(0..rows);
    let key_row = b.rng.random_range(0..rows);
    let lock_color = b.random_color();
    for row in 0..rows {
        let y = 2 * row + 1;
        let left_color = b.random_color();
        b.set(2, y, Cell::door(left_color, DoorState::Closed));
        if row == locked_row {
            b.set(4, y, Cell::door(lock_color, DoorState::Locked));
            let ball_color = b.random_color();
            b.set(5, y, Cell::ball(ball_color));
        } else {
            let right_color = b.random_color();
            b.set(4, y, Cell::door(right_color, DoorState::Closed));
        }
    }
    b.set(1, 2 * key_row + 1, Cell::key(lock_color));
    b.finish(
        EnvName::KeyCorridor,
        rows,
        seed,
        episode_index,
        (3..4, 1..height - 1),
    )
}
