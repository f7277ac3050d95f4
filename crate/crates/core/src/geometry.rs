//! Probe geometry, acquisition timing and the image grid.
//!
//! All modules share one coordinate frame: the origin sits at the centre of
//! the array, `x` runs along the array and `z` points into the medium. The
//! transmitted plane wavefront crosses the origin at `t = 0`, so the
//! transmit delay to a point `r` is `s_i · r / c` with `s_i = (sin θ, cos θ)`.

use crate::error::{invalid, Result};

/// Linear transducer array.
#[derive(Debug, Clone, PartialEq)]
pub struct TransducerArray {
    pitch: f64,
    num_elements: usize,
    center_frequency: f64,
    sampling_frequency: f64,
    fractional_bandwidth: f64,
}

impl TransducerArray {
    pub fn new(
        pitch: f64,
        num_elements: usize,
        center_frequency: f64,
        sampling_frequency: f64,
        fractional_bandwidth: f64,
    ) -> Result<Self> {
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(invalid(format!("pitch must be positive, got {pitch}")));
        }
        if num_elements < 2 {
            return Err(invalid(format!(
                "array needs at least 2 elements, got {num_elements}"
            )));
        }
        if !(center_frequency.is_finite() && center_frequency > 0.0) {
            return Err(invalid("center frequency must be positive"));
        }
        if !(fractional_bandwidth > 0.0 && fractional_bandwidth <= 1.0) {
            return Err(invalid(format!(
                "fractional bandwidth must lie in (0, 1], got {fractional_bandwidth}"
            )));
        }
        let nyquist = 2.0 * center_frequency * (1.0 + fractional_bandwidth / 2.0);
        if !(sampling_frequency.is_finite() && sampling_frequency > nyquist) {
            return Err(invalid(format!(
                "sampling frequency {sampling_frequency} Hz does not exceed the pulse-band \
                 Nyquist rate {nyquist} Hz"
            )));
        }
        Ok(Self {
            pitch,
            num_elements,
            center_frequency,
            sampling_frequency,
            fractional_bandwidth,
        })
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn center_frequency(&self) -> f64 {
        self.center_frequency
    }

    pub fn sampling_frequency(&self) -> f64 {
        self.sampling_frequency
    }

    pub fn fractional_bandwidth(&self) -> f64 {
        self.fractional_bandwidth
    }

    /// Lateral position of element `l`: `(l - (L-1)/2) * pitch`.
    #[inline]
    pub fn element_position(&self, l: usize) -> f64 {
        (l as f64 - (self.num_elements as f64 - 1.0) / 2.0) * self.pitch
    }

    pub fn element_positions(&self) -> Vec<f64> {
        (0..self.num_elements)
            .map(|l| self.element_position(l))
            .collect()
    }

    /// Distance between the outermost element centres, `(L-1) * pitch`.
    pub fn aperture(&self) -> f64 {
        (self.num_elements as f64 - 1.0) * self.pitch
    }

    pub fn wavelength(&self, sound_speed: f64) -> f64 {
        sound_speed / self.center_frequency
    }
}

/// Lateral element positions, centred on the origin.
pub fn element_positions(array: &TransducerArray) -> Vec<f64> {
    array.element_positions()
}

/// Transmit sequence and receive window.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionParams {
    sound_speed: f64,
    transmit_angles: Vec<f64>,
    num_samples: usize,
    t0: f64,
}

impl AcquisitionParams {
    pub fn new(
        sound_speed: f64,
        transmit_angles: Vec<f64>,
        num_samples: usize,
        t0: f64,
    ) -> Result<Self> {
        if !(sound_speed.is_finite() && sound_speed > 0.0) {
            return Err(invalid("sound speed must be positive"));
        }
        if transmit_angles.is_empty() {
            return Err(invalid("at least one transmit angle is required"));
        }
        if transmit_angles.iter().any(|a| !a.is_finite()) {
            return Err(invalid("transmit angles must be finite"));
        }
        if transmit_angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("transmit angles must be strictly increasing"));
        }
        if num_samples < 2 {
            return Err(invalid("at least 2 samples per trace are required"));
        }
        if !t0.is_finite() {
            return Err(invalid("t0 must be finite"));
        }
        Ok(Self {
            sound_speed,
            transmit_angles,
            num_samples,
            t0,
        })
    }

    pub fn sound_speed(&self) -> f64 {
        self.sound_speed
    }

    pub fn transmit_angles(&self) -> &[f64] {
        &self.transmit_angles
    }

    pub fn num_transmits(&self) -> usize {
        self.transmit_angles.len()
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Same acquisition with a longer (or shorter) receive window.
    pub fn with_num_samples(&self, num_samples: usize) -> Result<Self> {
        Self::new(
            self.sound_speed,
            self.transmit_angles.clone(),
            num_samples,
            self.t0,
        )
    }

    /// Fractional sample index `(tau - t0) * fs`. Not clamped.
    #[inline]
    pub fn sample_index(&self, tau: f64, sampling_frequency: f64) -> f64 {
        (tau - self.t0) * sampling_frequency
    }
}

/// Fractional sample index of time `tau` for this array/acquisition pair.
pub fn sample_index(tau: f64, array: &TransducerArray, params: &AcquisitionParams) -> f64 {
    params.sample_index(tau, array.sampling_frequency())
}

/// Regular pixel grid below the array. Pixel `(ix, iz)` sits at
/// `(x0 + ix*dx, z0 + iz*dz)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    x0: f64,
    z0: f64,
    dx: f64,
    dz: f64,
    nx: usize,
    nz: usize,
}

impl ImageGrid {
    pub fn new(x0: f64, z0: f64, dx: f64, dz: f64, nx: usize, nz: usize) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0 && dz.is_finite() && dz > 0.0) {
            return Err(invalid("pixel sizes must be positive"));
        }
        if nx == 0 || nz == 0 {
            return Err(invalid("grid must contain at least one pixel"));
        }
        if !(z0.is_finite() && z0 > 0.0) || !x0.is_finite() {
            return Err(invalid("grid must start below the array plane (z0 > 0)"));
        }
        Ok(Self {
            x0,
            z0,
            dx,
            dz,
            nx,
            nz,
        })
    }

    /// Grid of `nx * nz` pixels centred laterally on `x_center`, with its
    /// first row at depth `z0`.
    pub fn centered(
        x_center: f64,
        z0: f64,
        dx: f64,
        dz: f64,
        nx: usize,
        nz: usize,
    ) -> Result<Self> {
        let x0 = x_center - (nx as f64 - 1.0) / 2.0 * dx;
        Self::new(x0, z0, dx, dz, nx, nz)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn z0(&self) -> f64 {
        self.z0
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dz(&self) -> f64 {
        self.dz
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn x(&self, ix: usize) -> f64 {
        self.x0 + ix as f64 * self.dx
    }

    #[inline]
    pub fn z(&self, iz: usize) -> f64 {
        self.z0 + iz as f64 * self.dz
    }

    /// Row-major (depth rows) linear index of pixel `(ix, iz)`.
    #[inline]
    pub fn index(&self, ix: usize, iz: usize) -> usize {
        iz * self.nx + ix
    }

    /// Pixel nearest to `(x, z)`, if it lies on the grid.
    pub fn nearest_pixel(&self, x: f64, z: f64) -> Option<(usize, usize)> {
        let fx = ((x - self.x0) / self.dx).round();
        let fz = ((z - self.z0) / self.dz).round();
        if fx < 0.0 || fz < 0.0 || fx >= self.nx as f64 || fz >= self.nz as f64 {
            return None;
        }
        Some((fx as usize, fz as usize))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn array(pitch: f64, l: usize) -> TransducerArray {
        TransducerArray::new(pitch, l, 5.2e6, 20.83e6, 0.6).unwrap()
    }

    #[test]
    fn two_elements_straddle_origin() {
        let p = array(1e-3, 2).element_positions();
        assert_eq!(p, vec![-0.5e-3, 0.5e-3]);
    }

    #[test]
    fn three_elements() {
        let p = array(0.23e-3, 3).element_positions();
        assert!((p[0] + 0.23e-3).abs() < 1e-18);
        assert_eq!(p[1], 0.0);
        assert!((p[2] - 0.23e-3).abs() < 1e-18);
    }

    #[test]
    fn full_probe_span() {
        let a = array(0.23e-3, 192);
        let p = element_positions(&a);
        assert_eq!(p.len(), 192);
        let span = p[191] - p[0];
        assert!((span - 43.93e-3).abs() < 1e-12);
        assert!((a.aperture() - 43.93e-3).abs() < 1e-12);
        let sum: f64 = p.iter().sum();
        assert!(sum.abs() <= f64::EPSILON * 192.0 * 0.23e-3 * 96.0);
        for w in p.windows(2) {
            assert!((w[1] - w[0] - 0.23e-3).abs() < 1e-15);
        }
    }

    #[test]
    fn sample_index_conventions() {
        let a = array(0.23e-3, 8);
        let params = AcquisitionParams::new(1540.0, vec![0.0], 64, 2e-6).unwrap();
        assert_eq!(sample_index(2e-6, &a, &params), 0.0);
        let one = sample_index(2e-6 + 1.0 / 20.83e6, &a, &params);
        assert!((one - 1.0).abs() < 1e-9);
        let us = sample_index(3e-6, &a, &params);
        assert!((us - 20.83).abs() < 1e-9);
    }

    #[test]
    fn rejects_sub_nyquist_sampling() {
        assert!(TransducerArray::new(0.23e-3, 8, 5.2e6, 12e6, 0.6).is_err());
        assert!(TransducerArray::new(0.23e-3, 1, 5.2e6, 20.83e6, 0.6).is_err());
        assert!(TransducerArray::new(0.0, 8, 5.2e6, 20.83e6, 0.6).is_err());
    }

    #[test]
    fn acquisition_validation() {
        assert!(AcquisitionParams::new(1540.0, vec![0.1, 0.0], 64, 0.0).is_err());
        assert!(AcquisitionParams::new(1540.0, vec![0.0], 1, 0.0).is_err());
        assert!(AcquisitionParams::new(-1.0, vec![0.0], 64, 0.0).is_err());
    }

    #[test]
    fn grid_geometry() {
        let g = ImageGrid::centered(0.0, 5e-3, 1e-4, 2e-4, 11, 4).unwrap();
        assert!((g.x(5)).abs() < 1e-15);
        assert_eq!(g.nearest_pixel(0.0, 5.2e-3), Some((5, 1)));
        assert_eq!(g.nearest_pixel(1.0, 5.2e-3), None);
        assert!(ImageGrid::new(0.0, 0.0, 1e-4, 1e-4, 4, 4).is_err());
    }
}
