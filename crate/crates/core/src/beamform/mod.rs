//! Image formation.
//!
//! [`das`] sums element data along round-trip delays `τ_in + τ_out` with
//! `τ_out = |r - u_l| / c`; [`kk`] sums virtual plane-wave data with
//! `τ_out = s_o · r / c`. Both read fractional samples by interpolation, treat
//! reads outside the window as zero and add contributions to each pixel in a
//! fixed order (transmit angle, then channel), so results do not depend on
//! the number of worker threads.

mod das;
mod kk;
mod lut;

pub use das::{das, direct_das};
pub use kk::kk;
pub use lut::{build_das_luts, build_kk_luts, DelayLutSet};

use num_complex::{Complex, Complex64};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::{AcquisitionParams, ImageGrid, TransducerArray};
use crate::image::{ComplexImage, IntensityImage};
use crate::volume::{to_c64, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    Nearest,
    #[default]
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformConfig {
    pub grid: ImageGrid,
    pub interpolation: Interpolation,
    /// Delay from the start of the transmit waveform to its peak, added to
    /// every geometric delay.
    pub pulse_delay: f64,
    /// DAS only: ignore elements seen from a pixel at more than this angle
    /// off the depth axis.
    pub max_acceptance_angle: Option<f64>,
    /// Per-channel weights (elements for DAS, receive angles for KK).
    pub channel_weights: Option<Vec<f64>>,
}

impl BeamformConfig {
    pub fn new(grid: ImageGrid) -> Self {
        Self {
            grid,
            interpolation: Interpolation::Linear,
            pulse_delay: 0.0,
            max_acceptance_angle: None,
            channel_weights: None,
        }
    }

    pub fn with_pulse_delay(mut self, pulse_delay: f64) -> Self {
        self.pulse_delay = pulse_delay;
        self
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    pub(crate) fn weights(&self, channels: usize) -> Result<Vec<f64>> {
        match &self.channel_weights {
            None => Ok(vec![1.0; channels]),
            Some(w) if w.len() == channels => Ok(w.clone()),
            Some(w) => Err(Error::GeometryMismatch(format!(
                "{} channel weights for {channels} channels",
                w.len()
            ))),
        }
    }
}

/// Reads `trace` at fractional sample position `p`; zero outside the window.
#[inline(always)]
pub(crate) fn read_sample<R: Real>(trace: &[Complex<R>], p: f64, mode: Interpolation) -> Complex64 {
    let last = (trace.len() - 1) as f64;
    if !(p >= 0.0 && p <= last) {
        return Complex64::new(0.0, 0.0);
    }
    match mode {
        Interpolation::Nearest => to_c64(trace[p.round() as usize]),
        Interpolation::Linear => {
            let i = p as usize;
            let f = p - i as f64;
            let a = to_c64(trace[i]);
            if f == 0.0 {
                a
            } else {
                a + (to_c64(trace[i + 1]) - a) * f
            }
        }
    }
}

/// Computes each image column with `column(ix, out)` in parallel and
/// assembles the image.
pub(crate) fn assemble_columns(
    grid: &ImageGrid,
    column: impl Fn(usize, &mut [Complex64]) + Sync,
) -> ComplexImage {
    let (nx, nz) = (grid.nx(), grid.nz());
    let columns: Vec<Vec<Complex64>> = (0..nx)
        .into_par_iter()
        .map(|ix| {
            let mut col = vec![Complex64::new(0.0, 0.0); nz];
            column(ix, &mut col);
            col
        })
        .collect();
    let mut pixels = vec![Complex64::new(0.0, 0.0); nx * nz];
    for (ix, col) in columns.iter().enumerate() {
        for (iz, &v) in col.iter().enumerate() {
            pixels[iz * nx + ix] = v;
        }
    }
    ComplexImage::new(grid.clone(), pixels).expect("column sizes match grid")
}

pub(crate) fn check_transmits(
    luts: &DelayLutSet,
    params: &AcquisitionParams,
    grid: &ImageGrid,
) -> Result<()> {
    if luts.grid() != grid {
        return Err(Error::GeometryMismatch(
            "delay tables were built for a different grid".into(),
        ));
    }
    if luts.transmit_angles() != params.transmit_angles() {
        return Err(Error::GeometryMismatch(
            "delay tables were built for different transmit angles".into(),
        ));
    }
    if (luts.sound_speed() - params.sound_speed()).abs() > 0.0 {
        return Err(Error::GeometryMismatch(
            "delay tables were built for a different sound speed".into(),
        ));
    }
    Ok(())
}

/// Last sample index (relative to `t0`) that any DAS or KK read on `grid`
/// can touch.
pub fn last_read_index(
    grid: &ImageGrid,
    array: &TransducerArray,
    params: &AcquisitionParams,
    pulse_delay: f64,
) -> usize {
    let c = params.sound_speed();
    let xs = [grid.x(0), grid.x(grid.nx() - 1)];
    let zs = [grid.z(0), grid.z(grid.nz() - 1)];
    let us = [
        array.element_position(0),
        array.element_position(array.num_elements() - 1),
    ];
    let mut worst = f64::NEG_INFINITY;
    for &x in &xs {
        for &z in &zs {
            let rx = us.iter().map(|u| (x - u).hypot(z)).fold(0.0f64, f64::max) / c;
            for &th in params.transmit_angles() {
                worst = worst.max((x * th.sin() + z * th.cos()) / c + rx);
            }
        }
    }
    params
        .sample_index(worst + pulse_delay, array.sampling_frequency())
        .ceil()
        .max(0.0) as usize
        + 1
}

/// Pixelwise `|B|²`.
pub fn intensity(image: &ComplexImage) -> IntensityImage {
    IntensityImage::new(
        image.grid().clone(),
        image.pixels().iter().map(|p| p.norm_sqr()).collect(),
    )
    .expect("squared magnitudes are nonnegative")
}

fn check_same_grid(images: &[ComplexImage]) -> Result<&ImageGrid> {
    let first = images
        .first()
        .ok_or_else(|| invalid("compounding needs at least one image"))?;
    if images.iter().any(|im| im.grid() != first.grid()) {
        return Err(Error::GridMismatch);
    }
    Ok(first.grid())
}

/// `|Σ_j B_j|²`.
pub fn compound_coherent(images: &[ComplexImage]) -> Result<IntensityImage> {
    let grid = check_same_grid(images)?;
    let pixels = (0..grid.len())
        .map(|i| {
            images
                .iter()
                .fold(Complex64::new(0.0, 0.0), |acc, im| acc + im.pixels()[i])
                .norm_sqr()
        })
        .collect();
    IntensityImage::new(grid.clone(), pixels)
}

/// `Σ_j |B_j|²`.
pub fn compound_incoherent(images: &[ComplexImage]) -> Result<IntensityImage> {
    let grid = check_same_grid(images)?;
    let pixels = (0..grid.len())
        .map(|i| images.iter().map(|im| im.pixels()[i].norm_sqr()).sum())
        .collect();
    IntensityImage::new(grid.clone(), pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(vals: &[(f64, f64)]) -> ComplexImage {
        let grid = ImageGrid::new(0.0, 1e-3, 1e-4, 1e-4, vals.len(), 1).unwrap();
        ComplexImage::new(
            grid,
            vals.iter().map(|&(r, i)| Complex64::new(r, i)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn compounding_identities() {
        let b = image(&[(1.0, 2.0), (-0.5, 0.0), (0.0, 0.0)]);
        let neg = b.scaled(Complex64::new(-1.0, 0.0));
        let single = intensity(&b);
        assert_eq!(compound_coherent(std::slice::from_ref(&b)).unwrap(), single);
        assert_eq!(
            compound_incoherent(std::slice::from_ref(&b)).unwrap(),
            single
        );
        assert!(compound_coherent(&[b.clone(), neg.clone()])
            .unwrap()
            .pixels()
            .iter()
            .all(|&p| p == 0.0));
        let inc = compound_incoherent(&[b.clone(), neg]).unwrap();
        let twice = compound_coherent(&[b.clone(), b.clone()]).unwrap();
        for i in 0..3 {
            assert_eq!(inc.pixels()[i], 2.0 * single.pixels()[i]);
            assert_eq!(twice.pixels()[i], 4.0 * single.pixels()[i]);
        }
        let scaled = intensity(&b.scaled(Complex64::new(3.0, 0.0)));
        assert!((scaled.pixels()[0] - 9.0 * single.pixels()[0]).abs() < 1e-12);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = image(&[(1.0, 0.0)]);
        let b = image(&[(1.0, 0.0), (2.0, 0.0)]);
        assert_eq!(compound_coherent(&[a, b]), Err(Error::GridMismatch));
        assert!(compound_incoherent(&[]).is_err());
    }

    #[test]
    fn interpolated_reads() {
        let t: Vec<Complex<f32>> = (0..4).map(|k| Complex::new(k as f32, 0.0)).collect();
        assert_eq!(read_sample(&t, 1.25, Interpolation::Linear).re, 1.25);
        assert_eq!(read_sample(&t, 1.6, Interpolation::Nearest).re, 2.0);
        assert_eq!(read_sample(&t, 3.0, Interpolation::Linear).re, 3.0);
        assert_eq!(read_sample(&t, 3.01, Interpolation::Linear).re, 0.0);
        assert_eq!(read_sample(&t, -0.01, Interpolation::Linear).re, 0.0);
    }
}
