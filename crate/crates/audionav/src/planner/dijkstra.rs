use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::env::Cell;
use crate::mapping::{CellKnowledge, GeometricMap};

/// Environment-resolution planning graph over the partial map's footprint.
/// Nodes are cells not known to be occupied (unknown cells count as free);
/// edges are 4-adjacency with uniform cost of one cell.
#[derive(Debug, Clone)]
pub struct PlanGraph {
    x0: i32,
    y0: i32,
    width: i32,
    height: i32,
    blocked: Vec<bool>,
}

impl PlanGraph {
    /// Build from the current geometric map; rebuilt whenever the map
    /// changes.
    pub fn from_map(map: &GeometricMap) -> Self {
        let cells_per_side =
            (map.size() as f64 * map.resolution() / map.env_cell_size()).round() as i32;
        let corner = map.env_cell_of(0, 0);
        let mut blocked = vec![false; (cells_per_side * cells_per_side) as usize];
        for dy in 0..cells_per_side {
            for dx in 0..cells_per_side {
                let cell = corner.offset(dx, dy);
                if map.env_cell_knowledge(cell) == CellKnowledge::Occupied {
                    blocked[(dy * cells_per_side + dx) as usize] = true;
                }
            }
        }
        PlanGraph { x0: corner.x, y0: corner.y, width: cells_per_side, height: cells_per_side, blocked }
    }

    /// Direct construction for tests and tools.
    pub fn from_blocked(
        x0: i32,
        y0: i32,
        width: i32,
        height: i32,
        is_blocked: impl Fn(Cell) -> bool,
    ) -> Self {
        let mut blocked = vec![false; (width * height) as usize];
        for dy in 0..height {
            for dx in 0..width {
                blocked[(dy * width + dx) as usize] =
                    is_blocked(Cell::new(x0 + dx, y0 + dy));
            }
        }
        PlanGraph { x0, y0, width, height, blocked }
    }

    pub fn in_region(&self, c: Cell) -> bool {
        c.x >= self.x0 && c.y >= self.y0 && c.x < self.x0 + self.width && c.y < self.y0 + self.height
    }

    pub fn traversable(&self, c: Cell) -> bool {
        self.in_region(c) && !self.blocked[((c.y - self.y0) * self.width + (c.x - self.x0)) as usize]
    }

    fn index(&self, c: Cell) -> usize {
        ((c.y - self.y0) * self.width + (c.x - self.x0)) as usize
    }
}

/// Traversable cells, for inspection and tests.
pub fn plan_graph_nodes(graph: &PlanGraph) -> Vec<Cell> {
    let mut out = Vec::new();
    for dy in 0..graph.height {
        for dx in 0..graph.width {
            let c = Cell::new(graph.x0 + dx, graph.y0 + dy);
            if graph.traversable(c) {
                out.push(c);
            }
        }
    }
    out
}

/// Minimal-cost cell path from `start` to `target`, excluding `start`.
/// `Some(vec![])` means the agent already stands on the target; `None`
/// means no path exists in the graph. Ties break lexicographically by
/// (cost, y, x), so plans are deterministic.
pub fn dijkstra(graph: &PlanGraph, start: Cell, target: Cell) -> Option<Vec<Cell>> {
    assert!(graph.in_region(start), "start {start:?} outside the plan region");
    if start == target {
        return Some(Vec::new());
    }
    if !graph.traversable(target) {
        return None;
    }
    let n = (graph.width * graph.height) as usize;
    let mut dist: Vec<u32> = vec![u32::MAX; n];
    let mut parent: Vec<Option<Cell>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    // The agent's own cell is always usable even if mapping artifacts mark it.
    dist[graph.index(start)] = 0;
    heap.push(Reverse((0u32, start.y, start.x)));
    while let Some(Reverse((d, y, x))) = heap.pop() {
        let c = Cell::new(x, y);
        if d > dist[graph.index(c)] {
            continue;
        }
        if c == target {
            let mut path = vec![c];
            let mut cur = c;
            while let Some(p) = parent[graph.index(cur)] {
                if p == start {
                    break;
                }
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for dir in [(0, 1), (1, 0), (0, -1), (-1, 0)] {
            let nb = c.offset(dir.0, dir.1);
            if !graph.traversable(nb) {
                continue;
            }
            let nd = d + 1;
            let i = graph.index(nb);
            if nd < dist[i] {
                dist[i] = nd;
                parent[i] = Some(c);
                heap.push(Reverse((nd, nb.y, nb.x)));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn trivial_and_blocked_targets() {
        let g = PlanGraph::from_blocked(0, 0, 5, 5, |c| c == Cell::new(2, 2));
        assert_eq!(dijkstra(&g, Cell::new(1, 1), Cell::new(1, 1)), Some(vec![]));
        assert_eq!(dijkstra(&g, Cell::new(1, 1), Cell::new(2, 2)), None);
    }

    #[test]
    fn disconnected_region_is_no_path() {
        // Vertical full wall at x=2.
        let g = PlanGraph::from_blocked(0, 0, 5, 5, |c| c.x == 2);
        assert_eq!(dijkstra(&g, Cell::new(0, 0), Cell::new(4, 4)), None);
    }

    #[test]
    fn path_costs_match_bfs_oracle_on_random_partial_maps() {
        let mut rng = crate::seed::rng(3, crate::seed::Domain::Dataset, 0);
        for trial in 0..100 {
            let w = 12;
            let h = 12;
            let mut blocked = std::collections::HashSet::new();
            for y in 0..h {
                for x in 0..w {
                    if rng.gen::<f64>() < 0.25 {
                        blocked.insert(Cell::new(x, y));
                    }
                }
            }
            let g = PlanGraph::from_blocked(0, 0, w, h, |c| blocked.contains(&c));
            let start = Cell::new(rng.gen_range(0..w), rng.gen_range(0..h));
            let target = Cell::new(rng.gen_range(0..w), rng.gen_range(0..h));
            if !g.traversable(start) {
                continue;
            }
            // Independent BFS oracle on unit edge costs.
            let oracle = {
                use std::collections::{HashMap, VecDeque};
                let mut dist: HashMap<Cell, u32> = HashMap::new();
                dist.insert(start, 0);
                let mut q = VecDeque::from([start]);
                while let Some(c) = q.pop_front() {
                    for d in [(0, 1), (1, 0), (0, -1), (-1, 0)] {
                        let nb = c.offset(d.0, d.1);
                        if g.traversable(nb) && !dist.contains_key(&nb) {
                            dist.insert(nb, dist[&c] + 1);
                            q.push_back(nb);
                        }
                    }
                }
                dist.get(&target).copied()
            };
            let got = dijkstra(&g, start, target).map(|p| p.len() as u32);
            let want = if start == target { Some(0) } else { oracle };
            assert_eq!(got, want, "trial {trial}: {start:?} -> {target:?}");
            // Returned paths are valid 4-adjacent traversable chains.
            if let Some(path) = dijkstra(&g, start, target) {
                let mut prev = start;
                for c in path {
                    assert_eq!((c.x - prev.x).abs() + (c.y - prev.y).abs(), 1);
                    assert!(g.traversable(c));
                    prev = c;
                }
                assert_eq!(prev, target);
            }
        }
    }

    #[test]
    fn plans_are_deterministic() {
        let g = PlanGraph::from_blocked(0, 0, 9, 9, |c| c.x == 4 && c.y != 7);
        let a = dijkstra(&g, Cell::new(0, 0), Cell::new(8, 0));
        let b = dijkstra(&g, Cell::new(0, 0), Cell::new(8, 0));
        assert_eq!(a, b);
    }
}
