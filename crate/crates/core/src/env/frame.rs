use crate::error::{Error, Result};

pub const AGENT_CHANNEL: usize = 0;
pub const OBJECT_CHANNEL: usize = 1;
pub const GOAL_CHANNEL: usize = 2;

/// Multi-channel intensity grid, stored channel-major (`c, row, col`).
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<f32>,
}

impl Frame {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Frame { channels, height, width, values: vec![0.0; channels * height * width] }
    }

    pub fn from_values(channels: usize, height: usize, width: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != channels * height * width {
            return Err(Error::invalid(format!(
                "frame of {channels}x{height}x{width} needs {} values, got {}",
                channels * height * width,
                values.len()
            )));
        }
        Ok(Frame { channels, height, width, values })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Flattened length, `channels × height × width`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    fn index(&self, channel: usize, row: usize, col: usize) -> usize {
        (channel * self.height + row) * self.width + col
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> f32 {
        self.values[self.index(channel, row, col)]
    }

    pub fn set(&mut self, channel: usize, row: usize, col: usize, value: f32) {
        let i = self.index(channel, row, col);
        self.values[i] = value;
    }

    pub fn plane_sum(&self, channel: usize) -> f32 {
        let plane = self.height * self.width;
        self.values[channel * plane..(channel + 1) * plane].iter().sum()
    }

    /// Every value in `[0, 1]` and each plane holds at most one unit cell
    /// with all others zero.
    pub fn is_valid_occupancy(&self) -> bool {
        let plane = self.height * self.width;
        self.values.chunks(plane).all(|p| {
            let ones = p.iter().filter(|&&v| v == 1.0).count();
            let zeros = p.iter().filter(|&&v| v == 0.0).count();
            ones <= 1 && ones + zeros == p.len()
        })
    }
}
