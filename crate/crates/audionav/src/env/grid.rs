use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Grid cell coordinate. `x` grows east, `y` grows north.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Cell { x: self.x + dx, y: self.y + dy }
    }

    /// Center of the cell in meters.
    pub fn center_m(self, cell_size: f64) -> (f64, f64) {
        ((self.x as f64 + 0.5) * cell_size, (self.y as f64 + 0.5) * cell_size)
    }
}

/// Cardinal heading. Turning left goes counterclockwise (N -> W).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    North,
    East,
    South,
    West,
}

/// Canonical neighbor order used for all deterministic tie-breaks.
pub(crate) const DIRS: [Heading; 4] =
    [Heading::North, Heading::East, Heading::South, Heading::West];

impl Heading {
    pub fn forward(self) -> (i32, i32) {
        match self {
            Heading::North => (0, 1),
            Heading::East => (1, 0),
            Heading::South => (0, -1),
            Heading::West => (-1, 0),
        }
    }

    /// Unit vector to the agent's right.
    pub fn right(self) -> (i32, i32) {
        let (fx, fy) = self.forward();
        (fy, -fx)
    }

    pub fn turned_left(self) -> Self {
        match self {
            Heading::North => Heading::West,
            Heading::West => Heading::South,
            Heading::South => Heading::East,
            Heading::East => Heading::North,
        }
    }

    pub fn turned_right(self) -> Self {
        match self {
            Heading::North => Heading::East,
            Heading::East => Heading::South,
            Heading::South => Heading::West,
            Heading::West => Heading::North,
        }
    }

    /// World angle in radians, measured counterclockwise from east.
    pub fn angle(self) -> f64 {
        match self {
            Heading::East => 0.0,
            Heading::North => std::f64::consts::FRAC_PI_2,
            Heading::West => std::f64::consts::PI,
            Heading::South => -std::f64::consts::FRAC_PI_2,
        }
    }

    /// Rotate an agent-frame displacement `(right, forward)` into a world
    /// displacement `(dx, dy)`.
    pub fn agent_to_world(self, right: i32, forward: i32) -> (i32, i32) {
        let (fx, fy) = self.forward();
        let (rx, ry) = self.right();
        (right * rx + forward * fx, right * ry + forward * fy)
    }

    /// Angle of a world vector in the agent frame, counterclockwise from
    /// straight ahead (so "directly left" is +pi/2).
    pub fn world_vec_to_agent_angle(self, vx: f64, vy: f64) -> f64 {
        let (fx, fy) = self.forward();
        let (fx, fy) = (fx as f64, fy as f64);
        let dot = vx * fx + vy * fy;
        let cross = fx * vy - fy * vx;
        cross.atan2(dot)
    }
}

/// Immutable grid world. Free cells form one connected component; the
/// navigability graph is the 4-adjacency among free cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEnvironment {
    width: i32,
    height: i32,
    cell_size: f64,
    /// Row-major, index `y * width + x`; `true` means wall.
    walls: Vec<bool>,
    source: Cell,
    seed: u64,
}

impl GridEnvironment {
    /// Build an environment from rows of `'#'` (wall) / `'.'` (free),
    /// listed north row first. Validates connectivity and the source cell.
    pub fn from_rows(rows: &[&str], cell_size: f64, source: Cell, seed: u64) -> Result<Self> {
        let height = rows.len() as i32;
        if height == 0 {
            return Err(Error::InvalidEnvironment("empty grid".into()));
        }
        let width = rows[0].chars().count() as i32;
        let mut walls = vec![false; (width * height) as usize];
        for (i, row) in rows.iter().enumerate() {
            if row.chars().count() as i32 != width {
                return Err(Error::InvalidEnvironment(format!(
                    "row {i} has length {}, expected {width}",
                    row.chars().count()
                )));
            }
            let y = height - 1 - i as i32;
            for (x, ch) in row.chars().enumerate() {
                let wall = match ch {
                    '#' => true,
                    '.' => false,
                    other => {
                        return Err(Error::InvalidEnvironment(format!(
                            "bad occupancy char {other:?}"
                        )))
                    }
                };
                walls[(y * width + x as i32) as usize] = wall;
            }
        }
        Self::from_parts(width, height, cell_size, walls, source, seed)
    }

    pub(crate) fn from_parts(
        width: i32,
        height: i32,
        cell_size: f64,
        walls: Vec<bool>,
        source: Cell,
        seed: u64,
    ) -> Result<Self> {
        let env = GridEnvironment { width, height, cell_size, walls, source, seed };
        env.validate()?;
        Ok(env)
    }

    fn validate(&self) -> Result<()> {
        if self.cell_size <= 0.0 {
            return Err(Error::InvalidEnvironment("cell_size must be positive".into()));
        }
        if !self.is_free(self.source) {
            return Err(Error::InvalidEnvironment(format!(
                "source {:?} is not a free cell",
                self.source
            )));
        }
        let free: Vec<Cell> = self.free_cells().collect();
        if free.is_empty() {
            return Err(Error::InvalidEnvironment("no free cells".into()));
        }
        let reached = self.flood_fill(free[0]);
        if reached != free.len() {
            return Err(Error::InvalidEnvironment(format!(
                "free space disconnected: {} of {} cells reachable",
                reached,
                free.len()
            )));
        }
        Ok(())
    }

    fn flood_fill(&self, from: Cell) -> usize {
        let mut seen = vec![false; self.walls.len()];
        let mut stack = vec![from];
        seen[self.index(from)] = true;
        let mut count = 0;
        while let Some(c) = stack.pop() {
            count += 1;
            for d in DIRS {
                let n = {
                    let (dx, dy) = d.forward();
                    c.offset(dx, dy)
                };
                if self.is_free(n) && !seen[self.index(n)] {
                    seen[self.index(n)] = true;
                    stack.push(n);
                }
            }
        }
        count
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn source(&self) -> Cell {
        self.source
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn index(&self, c: Cell) -> usize {
        (c.y * self.width + c.x) as usize
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.x < self.width && c.y >= 0 && c.y < self.height
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.walls[self.index(c)]
    }

    pub fn is_wall(&self, c: Cell) -> bool {
        self.in_bounds(c) && self.walls[self.index(c)]
    }

    /// Navigability-graph edge test: both endpoints free 4-neighbors.
    pub fn has_edge(&self, a: Cell, b: Cell) -> bool {
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        dx.abs() + dy.abs() == 1 && self.is_free(a) && self.is_free(b)
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |y| {
            (0..self.width).filter_map(move |x| {
                let c = Cell::new(x, y);
                if self.is_free(c) {
                    Some(c)
                } else {
                    None
                }
            })
        })
    }

    pub fn free_cell_count(&self) -> usize {
        self.walls.iter().filter(|w| !**w).count()
    }

    /// Rows as `'#'`/`'.'` strings, north row first.
    pub fn rows(&self) -> Vec<String> {
        (0..self.height)
            .rev()
            .map(|y| {
                (0..self.width)
                    .map(|x| if self.walls[(y * self.width + x) as usize] { '#' } else { '.' })
                    .collect()
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let file = EnvFile {
            width: self.width,
            height: self.height,
            cell_size: self.cell_size,
            occupancy: self.rows().join("\n"),
            source: (self.source.x, self.source.y),
            seed: self.seed,
        };
        serde_json::to_string_pretty(&file).expect("env file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: EnvFile = serde_json::from_str(text)?;
        let rows: Vec<&str> = file.occupancy.split('\n').collect();
        if rows.len() as i32 != file.height {
            return Err(Error::InvalidEnvironment(format!(
                "occupancy has {} rows, header says {}",
                rows.len(),
                file.height
            )));
        }
        let env = Self::from_rows(
            &rows,
            file.cell_size,
            Cell::new(file.source.0, file.source.1),
            file.seed,
        )?;
        if env.width != file.width {
            return Err(Error::InvalidEnvironment(format!(
                "occupancy is {} wide, header says {}",
                env.width, file.width
            )));
        }
        Ok(env)
    }
}

/// On-disk environment schema.
#[derive(Serialize, Deserialize)]
struct EnvFile {
    width: i32,
    height: i32,
    cell_size: f64,
    occupancy: String,
    source: (i32, i32),
    seed: u64,
}
