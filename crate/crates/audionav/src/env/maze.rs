use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::grid::{Cell, GridEnvironment, DIRS};
use crate::seed::{self, Domain};
use crate::{Error, Result};

/// Generate a connected rooms-and-corridors world.
///
/// The map is ringed by walls; the interior is recursively divided by walls
/// with one door each (split probability scales with `room_density`), then a
/// loop-adding pass punches extra doors so routes branch. `room_density = 0`
/// yields an open arena. Deterministic per seed; the audio source is placed
/// uniformly at random among free cells.
pub fn generate_maze(seed: u64, width: i32, height: i32, room_density: f64) -> Result<GridEnvironment> {
    if width < 4 || height < 4 {
        return Err(Error::Generation(format!(
            "grid must be at least 4x4, got {width}x{height}"
        )));
    }
    if !(0.0..=1.0).contains(&room_density) {
        return Err(Error::Generation(format!(
            "room_density must be in [0,1], got {room_density}"
        )));
    }

    let mut walls = vec![false; (width * height) as usize];
    let idx = |x: i32, y: i32| (y * width + x) as usize;
    for x in 0..width {
        walls[idx(x, 0)] = true;
        walls[idx(x, height - 1)] = true;
    }
    for y in 0..height {
        walls[idx(0, y)] = true;
        walls[idx(width - 1, y)] = true;
    }

    let mut rng = seed::rng(seed, Domain::MazeLayout, 0);
    let mut doors_made = 0usize;
    if room_density > 0.0 {
        divide(
            &mut walls,
            width,
            &mut rng,
            room_density,
            (1, 1, width - 2, height - 2),
            &mut doors_made,
        );
        add_loops(&mut walls, width, height, &mut rng, doors_made / 2 + 1);
        repair_connectivity(&mut walls, width, height);
    }

    let free = walls.iter().filter(|w| !**w).count();
    if (free as f64) < 0.3 * (width * height) as f64 {
        return Err(Error::Generation(format!(
            "degenerate parameters: only {free} of {} cells free",
            width * height
        )));
    }

    let free_cells: Vec<Cell> = (0..height)
        .flat_map(|y| (0..width).map(move |x| Cell::new(x, y)))
        .filter(|c| !walls[idx(c.x, c.y)])
        .collect();
    let mut src_rng = seed::rng(seed, Domain::SourcePlacement, 0);
    let source = free_cells[src_rng.gen_range(0..free_cells.len())];

    GridEnvironment::from_parts(width, height, 0.5, walls, source, seed)
}

/// Recursive division over the inclusive interior rect (x0, y0, x1, y1).
fn divide(
    walls: &mut [bool],
    width: i32,
    rng: &mut ChaCha8Rng,
    density: f64,
    rect: (i32, i32, i32, i32),
    doors: &mut usize,
) {
    let (x0, y0, x1, y1) = rect;
    let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
    if w < 3 && h < 3 {
        return;
    }
    if rng.gen::<f64>() >= density {
        return;
    }
    let idx = |x: i32, y: i32| (y * width + x) as usize;
    let vertical = if w > h {
        true
    } else if h > w {
        false
    } else {
        rng.gen::<bool>()
    };
    if vertical {
        if w < 3 {
            return;
        }
        // Wall column must abut wall cells above and below so it never
        // seals a door carved in a surrounding wall.
        let candidates: Vec<i32> = (x0 + 1..=x1 - 1)
            .filter(|&x| walls[idx(x, y0 - 1)] && walls[idx(x, y1 + 1)])
            .collect();
        if candidates.is_empty() {
            return;
        }
        let wx = candidates[rng.gen_range(0..candidates.len())];
        let door_y = rng.gen_range(y0..=y1);
        for y in y0..=y1 {
            if y != door_y {
                walls[idx(wx, y)] = true;
            }
        }
        *doors += 1;
        divide(walls, width, rng, density, (x0, y0, wx - 1, y1), doors);
        divide(walls, width, rng, density, (wx + 1, y0, x1, y1), doors);
    } else {
        if h < 3 {
            return;
        }
        let candidates: Vec<i32> = (y0 + 1..=y1 - 1)
            .filter(|&y| walls[idx(x0 - 1, y)] && walls[idx(x1 + 1, y)])
            .collect();
        if candidates.is_empty() {
            return;
        }
        let wy = candidates[rng.gen_range(0..candidates.len())];
        let door_x = rng.gen_range(x0..=x1);
        for x in x0..=x1 {
            if x != door_x {
                walls[idx(x, wy)] = true;
            }
        }
        *doors += 1;
        divide(walls, width, rng, density, (x0, y0, x1, wy - 1), doors);
        divide(walls, width, rng, density, (x0, wy + 1, x1, y1), doors);
    }
}

/// Punch extra doors through interior walls that separate two free cells,
/// so most rooms have more than one route between them.
fn add_loops(walls: &mut [bool], width: i32, height: i32, rng: &mut ChaCha8Rng, count: usize) {
    let idx = |x: i32, y: i32| (y * width + x) as usize;
    for _ in 0..count {
        let candidates: Vec<(i32, i32)> = (1..height - 1)
            .flat_map(|y| (1..width - 1).map(move |x| (x, y)))
            .filter(|&(x, y)| {
                walls[idx(x, y)]
                    && ((!walls[idx(x - 1, y)] && !walls[idx(x + 1, y)])
                        || (!walls[idx(x, y - 1)] && !walls[idx(x, y + 1)]))
            })
            .collect();
        if candidates.is_empty() {
            return;
        }
        let (x, y) = candidates[rng.gen_range(0..candidates.len())];
        walls[idx(x, y)] = false;
    }
}

/// Carve deterministic openings until the free space is one component.
fn repair_connectivity(walls: &mut [bool], width: i32, height: i32) {
    let idx = |c: Cell| (c.y * width + c.x) as usize;
    loop {
        let first_free = match (0..height)
            .flat_map(|y| (0..width).map(move |x| Cell::new(x, y)))
            .find(|c| !walls[idx(*c)])
        {
            Some(c) => c,
            None => return,
        };
        let mut reached = vec![false; walls.len()];
        let mut stack = vec![first_free];
        reached[idx(first_free)] = true;
        while let Some(c) = stack.pop() {
            for d in DIRS {
                let (dx, dy) = d.forward();
                let n = c.offset(dx, dy);
                if n.x >= 0 && n.x < width && n.y >= 0 && n.y < height {
                    let i = idx(n);
                    if !walls[i] && !reached[i] {
                        reached[i] = true;
                        stack.push(n);
                    }
                }
            }
        }
        if (0..walls.len()).all(|i| walls[i] || reached[i]) {
            return;
        }
        // Open the first interior wall adjacent to both a reached and an
        // unreached free cell.
        let mut opened = false;
        'outer: for y in 1..height - 1 {
            for x in 1..width - 1 {
                let c = Cell::new(x, y);
                if !walls[idx(c)] {
                    continue;
                }
                let mut has_reached = false;
                let mut has_unreached = false;
                for d in DIRS {
                    let (dx, dy) = d.forward();
                    let n = c.offset(dx, dy);
                    if n.x >= 0 && n.x < width && n.y >= 0 && n.y < height && !walls[idx(n)] {
                        if reached[idx(n)] {
                            has_reached = true;
                        } else {
                            has_unreached = true;
                        }
                    }
                }
                if has_reached && has_unreached {
                    walls[idx(c)] = false;
                    opened = true;
                    break 'outer;
                }
            }
        }
        if !opened {
            // Unreachable pocket fully sealed by border-adjacent walls;
            // fill it in rather than tunnel through the border.
            for i in 0..walls.len() {
                if !walls[i] && !reached[i] {
                    walls[i] = true;
                }
            }
            return;
        }
    }
}
