//! Beamformed images on an [`ImageGrid`].
//!
//! Pixels are stored in depth rows: pixel `(ix, iz)` lives at
//! `iz * nx + ix`.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::geometry::ImageGrid;

/// Beamformed amplitude `B(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    grid: ImageGrid,
    pixels: Vec<Complex64>,
}

impl ComplexImage {
    pub fn new(grid: ImageGrid, pixels: Vec<Complex64>) -> Result<Self> {
        if pixels.len() != grid.len() {
            return Err(Error::GeometryMismatch(format!(
                "{} pixels for a {}x{} grid",
                pixels.len(),
                grid.nx(),
                grid.nz()
            )));
        }
        Ok(Self { grid, pixels })
    }

    pub fn zeros(grid: ImageGrid) -> Self {
        let pixels = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self { grid, pixels }
    }

    pub fn grid(&self) -> &ImageGrid {
        &self.grid
    }

    pub fn pixels(&self) -> &[Complex64] {
        &self.pixels
    }

    #[inline]
    pub fn at(&self, ix: usize, iz: usize) -> Complex64 {
        self.pixels[self.grid.index(ix, iz)]
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            pixels: self.pixels.iter().map(|&p| p * factor).collect(),
        }
    }
}

/// Nonnegative intensity image.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityImage {
    grid: ImageGrid,
    pixels: Vec<f64>,
}

impl IntensityImage {
    pub fn new(grid: ImageGrid, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != grid.len() {
            return Err(Error::GeometryMismatch(format!(
                "{} pixels for a {}x{} grid",
                pixels.len(),
                grid.nx(),
                grid.nz()
            )));
        }
        if pixels.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(invalid("intensity pixels must be finite and nonnegative"));
        }
        Ok(Self { grid, pixels })
    }

    pub fn grid(&self) -> &ImageGrid {
        &self.grid
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn at(&self, ix: usize, iz: usize) -> f64 {
        self.pixels[self.grid.index(ix, iz)]
    }

    pub fn max(&self) -> f64 {
        self.pixels.iter().copied().fold(0.0, f64::max)
    }

    /// Pixel holding the maximum (first in storage order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &p) in self.pixels.iter().enumerate() {
            if p > self.pixels[best] {
                best = i;
            }
        }
        (best % self.grid.nx(), best / self.grid.nx())
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.pixels.iter().map(|&p| p * factor).collect(),
        )
    }
}
