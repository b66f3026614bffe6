use super::geometric::rotate_cells;
use super::ACOUSTIC_MAP_SIZE;
use crate::env::{AgentPose, Cell};
use crate::nn::Array;

/// Spatial acoustic memory: cumulative mean of direct-sound intensity at
/// visited cells, at environment resolution, centered on the episode start.
#[derive(Debug, Clone)]
pub struct AcousticMap {
    size: usize,
    origin: Cell,
    sum: Vec<f64>,
    visits: Vec<u32>,
}

impl AcousticMap {
    pub fn new(start: Cell) -> Self {
        Self::with_size(start, ACOUSTIC_MAP_SIZE)
    }

    pub fn with_size(start: Cell, size: usize) -> Self {
        AcousticMap {
            size,
            origin: start.offset(-(size as i32) / 2, -(size as i32) / 2),
            sum: vec![0.0; size * size],
            visits: vec![0; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn index(&self, cell: Cell) -> Option<usize> {
        let dx = cell.x - self.origin.x;
        let dy = cell.y - self.origin.y;
        if dx < 0 || dy < 0 || dx >= self.size as i32 || dy >= self.size as i32 {
            return None;
        }
        Some(dy as usize * self.size + dx as usize)
    }

    /// Fold one intensity sample into the cell's cumulative mean. Negative
    /// intensities are a caller bug.
    pub fn update(&mut self, cell: Cell, intensity: f64) {
        assert!(intensity >= 0.0, "negative intensity {intensity}");
        match self.index(cell) {
            Some(i) => {
                self.sum[i] += intensity;
                self.visits[i] += 1;
            }
            None => log::warn!("acoustic map update outside bounds at {cell:?}"),
        }
    }

    /// Mean intensity at a cell; 0 where never visited.
    pub fn mean_at(&self, cell: Cell) -> f64 {
        match self.index(cell) {
            Some(i) if self.visits[i] > 0 => self.sum[i] / self.visits[i] as f64,
            _ => 0.0,
        }
    }

    pub fn visit_count(&self, cell: Cell) -> u32 {
        self.index(cell).map_or(0, |i| self.visits[i])
    }

    /// Egocentric crop [1, size, size]: agent centered facing up, mean
    /// intensities, zero outside coverage.
    pub fn crop(&self, pose: AgentPose, crop_size: usize) -> Array<f32> {
        let mut out = Array::zeros(&[1, crop_size, crop_size]);
        let half = crop_size as i64 / 2;
        for r in 0..crop_size {
            for c in 0..crop_size {
                let dx = c as i64 - half;
                let dy = half - r as i64;
                let (wx, wy) = rotate_cells(pose.heading, dx, dy);
                let cell = pose.cell.offset(wx as i32, wy as i32);
                out.data_mut()[r * crop_size + c] = self.mean_at(cell) as f32;
            }
        }
        out
    }
}
