use crate::error::{Error, Result};

/// Uniform one-dimensional grid of `n_cells` cells on `[x_min, x_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n_cells: usize,
    x_min: f64,
    x_max: f64,
}

impl Grid1D {
    pub fn new(n_cells: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if n_cells < 3 {
            return Err(Error::invalid("n_cells", "n_cells must be at least 3"));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::invalid("x_max", "x_max must exceed x_min"));
        }
        Ok(Self { n_cells, x_min, x_max })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n_cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(|i| self.center(i))
    }

    /// Cell containing `x`; positions outside the domain clamp to the
    /// boundary cells.
    pub fn cell_of(&self, x: f64) -> usize {
        let s = ((x - self.x_min) / self.dx()).floor();
        if s <= 0.0 {
            0
        } else {
            (s as usize).min(self.n_cells - 1)
        }
    }

    /// Map `x` back into `[x_min, x_max)` periodically.
    pub fn wrap(&self, x: f64) -> f64 {
        let len = self.length();
        let w = self.x_min + (x - self.x_min).rem_euclid(len);
        if w >= self.x_max {
            self.x_min
        } else {
            w
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x < self.x_max
    }
}
