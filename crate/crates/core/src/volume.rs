//! Dense channel-data containers.
//!
//! Every volume is stored row-major as `[transmit n][channel][time t]`, where
//! the channel axis is the element index for raw and analytic data and the
//! synthesized receive-angle index for compressed data. Samples default to
//! 32-bit floats; the `f64` instantiation exists for exactness checks.

use std::fmt::Debug;

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::geometry::{AcquisitionParams, TransducerArray};
use crate::sampling::ReceiveAngleSet;

mod sealed {
    pub trait Sealed {}
    impl Sealed for f32 {}
    impl Sealed for f64 {}
}

/// Floating-point sample precision (`f32` or `f64`).
pub trait Real:
    sealed::Sealed + Copy + Default + Debug + PartialEq + Send + Sync + 'static
{
    const BYTES: usize;
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
}

impl Real for f32 {
    const BYTES: usize = 4;
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Real for f64 {
    const BYTES: usize = 8;
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
}

#[inline]
pub(crate) fn to_c64<R: Real>(c: Complex<R>) -> Complex<f64> {
    Complex::new(c.re.to_f64(), c.im.to_f64())
}

#[inline]
pub(crate) fn from_c64<R: Real>(c: Complex<f64>) -> Complex<R> {
    Complex::new(R::from_f64(c.re), R::from_f64(c.im))
}

fn check_len(actual: usize, n: usize, ch: usize, t: usize) -> Result<()> {
    if actual != n * ch * t {
        return Err(Error::GeometryMismatch(format!(
            "payload holds {actual} samples, dimensions {n}x{ch}x{t} need {}",
            n * ch * t
        )));
    }
    Ok(())
}

/// Real receive data `[N x L x T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RfVolume<R: Real = f32> {
    data: Vec<R>,
    array: TransducerArray,
    params: AcquisitionParams,
}

impl<R: Real> RfVolume<R> {
    pub fn new(data: Vec<R>, array: TransducerArray, params: AcquisitionParams) -> Result<Self> {
        check_len(
            data.len(),
            params.num_transmits(),
            array.num_elements(),
            params.num_samples(),
        )?;
        if data.iter().any(|v| !v.to_f64().is_finite()) {
            return Err(invalid("RF samples must be finite"));
        }
        Ok(Self {
            data,
            array,
            params,
        })
    }

    pub fn zeros(array: TransducerArray, params: AcquisitionParams) -> Self {
        let len = params.num_transmits() * array.num_elements() * params.num_samples();
        Self {
            data: vec![R::default(); len],
            array,
            params,
        }
    }

    /// `(N, L, T)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (
            self.params.num_transmits(),
            self.array.num_elements(),
            self.params.num_samples(),
        )
    }

    pub fn data(&self) -> &[R] {
        &self.data
    }

    pub fn into_data(self) -> Vec<R> {
        self.data
    }

    pub fn array(&self) -> &TransducerArray {
        &self.array
    }

    pub fn params(&self) -> &AcquisitionParams {
        &self.params
    }

    #[inline]
    pub fn trace(&self, n: usize, l: usize) -> &[R] {
        let (_, nl, t) = self.dims();
        let start = (n * nl + l) * t;
        &self.data[start..start + t]
    }

    /// Copy with `num_samples` samples per trace, zero-filled or truncated at
    /// the end.
    pub fn resized(&self, num_samples: usize) -> Result<Self> {
        let params = self.params.with_num_samples(num_samples)?;
        let t = self.params.num_samples();
        let mut data = vec![R::default(); self.data.len() / t * num_samples];
        for (dst, src) in data
            .chunks_exact_mut(num_samples)
            .zip(self.data.chunks_exact(t))
        {
            let k = t.min(num_samples);
            dst[..k].copy_from_slice(&src[..k]);
        }
        Ok(Self {
            data,
            array: self.array.clone(),
            params,
        })
    }

    pub fn convert<S: Real>(&self) -> RfVolume<S> {
        RfVolume {
            data: self.data.iter().map(|v| S::from_f64(v.to_f64())).collect(),
            array: self.array.clone(),
            params: self.params.clone(),
        }
    }
}

/// Complex analytic form of [`RfVolume`], `[N x L x T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticRf<R: Real = f32> {
    data: Vec<Complex<R>>,
    array: TransducerArray,
    params: AcquisitionParams,
}

impl<R: Real> AnalyticRf<R> {
    pub fn new(
        data: Vec<Complex<R>>,
        array: TransducerArray,
        params: AcquisitionParams,
    ) -> Result<Self> {
        check_len(
            data.len(),
            params.num_transmits(),
            array.num_elements(),
            params.num_samples(),
        )?;
        Ok(Self {
            data,
            array,
            params,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (
            self.params.num_transmits(),
            self.array.num_elements(),
            self.params.num_samples(),
        )
    }

    pub fn data(&self) -> &[Complex<R>] {
        &self.data
    }

    pub fn array(&self) -> &TransducerArray {
        &self.array
    }

    pub fn params(&self) -> &AcquisitionParams {
        &self.params
    }

    #[inline]
    pub fn trace(&self, n: usize, l: usize) -> &[Complex<R>] {
        let (_, nl, t) = self.dims();
        let start = (n * nl + l) * t;
        &self.data[start..start + t]
    }

    pub fn convert<S: Real>(&self) -> AnalyticRf<S> {
        AnalyticRf {
            data: self.data.iter().map(|&c| from_c64(to_c64(c))).collect(),
            array: self.array.clone(),
            params: self.params.clone(),
        }
    }
}

/// Virtual plane-wave receive data `[N x M x T]`.
///
/// Trace `(n, m)` is referenced to the aperture edge that the receive plane
/// wave of angle `θ_m` reaches last (see [`crate::compress`]), so an echo with
/// origin-referenced delay `τ` sits at `τ - edge_reference_delay(θ_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedRf<R: Real = f32> {
    data: Vec<Complex<R>>,
    receive: ReceiveAngleSet,
    array: TransducerArray,
    params: AcquisitionParams,
}

impl<R: Real> CompressedRf<R> {
    pub fn new(
        data: Vec<Complex<R>>,
        receive: ReceiveAngleSet,
        array: TransducerArray,
        params: AcquisitionParams,
    ) -> Result<Self> {
        check_len(
            data.len(),
            params.num_transmits(),
            receive.len(),
            params.num_samples(),
        )?;
        Ok(Self {
            data,
            receive,
            array,
            params,
        })
    }

    /// `(N, M, T)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (
            self.params.num_transmits(),
            self.receive.len(),
            self.params.num_samples(),
        )
    }

    pub fn data(&self) -> &[Complex<R>] {
        &self.data
    }

    pub fn receive_angles(&self) -> &ReceiveAngleSet {
        &self.receive
    }

    pub fn array(&self) -> &TransducerArray {
        &self.array
    }

    pub fn params(&self) -> &AcquisitionParams {
        &self.params
    }

    #[inline]
    pub fn trace(&self, n: usize, m: usize) -> &[Complex<R>] {
        let (_, nm, t) = self.dims();
        let start = (n * nm + m) * t;
        &self.data[start..start + t]
    }

    /// Physical elements per synthesized receive angle, `L / M`.
    pub fn compression_ratio(&self) -> f64 {
        self.array.num_elements() as f64 / self.receive.len() as f64
    }

    pub fn convert<S: Real>(&self) -> CompressedRf<S> {
        CompressedRf {
            data: self.data.iter().map(|&c| from_c64(to_c64(c))).collect(),
            receive: self.receive.clone(),
            array: self.array.clone(),
            params: self.params.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (TransducerArray, AcquisitionParams) {
        (
            TransducerArray::new(0.3e-3, 4, 5e6, 40e6, 0.5).unwrap(),
            AcquisitionParams::new(1540.0, vec![-0.1, 0.1], 8, 0.0).unwrap(),
        )
    }

    #[test]
    fn dims_and_traces() {
        let (a, p) = setup();
        let data: Vec<f32> = (0..64).map(|v| v as f32).collect();
        let rf = RfVolume::new(data, a, p).unwrap();
        assert_eq!(rf.dims(), (2, 4, 8));
        assert_eq!(rf.trace(1, 2)[0], ((4 + 2) * 8) as f32);
    }

    #[test]
    fn rejects_wrong_length_and_nonfinite() {
        let (a, p) = setup();
        assert!(RfVolume::new(vec![0.0f32; 63], a.clone(), p.clone()).is_err());
        let mut d = vec![0.0f32; 64];
        d[3] = f32::NAN;
        assert!(RfVolume::new(d, a, p).is_err());
    }

    #[test]
    fn resize_pads_with_zeros() {
        let (a, p) = setup();
        let data: Vec<f64> = (0..64).map(|v| v as f64 + 1.0).collect();
        let rf = RfVolume::new(data, a, p).unwrap();
        let padded = rf.resized(12).unwrap();
        assert_eq!(padded.dims(), (2, 4, 12));
        assert_eq!(&padded.trace(1, 3)[..8], rf.trace(1, 3));
        assert!(padded.trace(1, 3)[8..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn clones_are_bit_identical() {
        let (a, p) = setup();
        let data: Vec<f32> = (0..64).map(|v| (v as f32).sin()).collect();
        let rf = RfVolume::new(data, a, p).unwrap();
        let copy = rf.clone();
        assert!(rf
            .data()
            .iter()
            .zip(copy.data())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
