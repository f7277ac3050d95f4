//! Temporal FFT machinery: analytic-signal conversion and Fourier-shift
//! fractional delays.
//!
//! Transforms run in `f64` regardless of the storage precision of the
//! volumes. The FFT length is always the trace length `T`.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};
use crate::geometry::{AcquisitionParams, TransducerArray};
use crate::sampling::ReceiveAngleSet;
use crate::volume::{from_c64, to_c64, AnalyticRf, CompressedRf, Real, RfVolume};

/// Signed frequency of FFT bin `k` for a length-`len` transform (numpy
/// `fftfreq` convention: the Nyquist bin of an even length is negative).
#[inline]
pub fn bin_frequency(k: usize, len: usize, sampling_frequency: f64) -> f64 {
    let signed = if k < len.div_ceil(2) {
        k as f64
    } else {
        k as f64 - len as f64
    };
    signed * sampling_frequency / len as f64
}

/// Gain applied to bin `k` by the analytic-signal mask: 1 for DC and the
/// Nyquist bin, 2 for strictly positive frequencies, 0 for strictly negative.
#[inline]
pub fn analytic_gain(k: usize, len: usize) -> f64 {
    if k == 0 || (len % 2 == 0 && k == len / 2) {
        1.0
    } else if k < len.div_ceil(2) {
        2.0
    } else {
        0.0
    }
}

/// Frequency-domain samples of one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSpectrum {
    bins: Vec<Complex64>,
    sampling_frequency: f64,
}

impl TraceSpectrum {
    pub fn new(bins: Vec<Complex64>, sampling_frequency: f64) -> Self {
        Self {
            bins,
            sampling_frequency,
        }
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn into_bins(self) -> Vec<Complex64> {
        self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn sampling_frequency(&self) -> f64 {
        self.sampling_frequency
    }

    /// Bin spacing `fs / T`.
    pub fn frequency_step(&self) -> f64 {
        self.sampling_frequency / self.bins.len() as f64
    }

    pub fn frequency(&self, k: usize) -> f64 {
        bin_frequency(k, self.bins.len(), self.sampling_frequency)
    }

    /// Zeroes negative frequencies and doubles positive ones.
    pub fn apply_analytic_mask(&mut self) {
        let len = self.bins.len();
        for (k, b) in self.bins.iter_mut().enumerate() {
            *b *= analytic_gain(k, len);
        }
    }

    /// Total energy `Σ|X_k|² / T`, equal to the time-domain energy.
    pub fn energy(&self) -> f64 {
        self.bins.iter().map(|b| b.norm_sqr()).sum::<f64>() / self.bins.len() as f64
    }
}

/// Forward/inverse transform pair for one trace length.
#[derive(Clone)]
pub struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    len: usize,
}

impl std::fmt::Debug for FftPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPair").field("len", &self.len).finish()
    }
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn scratch(&self) -> Vec<Complex64> {
        let n = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        vec![Complex64::new(0.0, 0.0); n]
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, scratch);
    }

    /// Inverse transform including the `1/T` normalisation.
    pub fn inverse_in_place(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, scratch);
        let norm = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v *= norm;
        }
    }

    pub fn forward_real<R: Real>(&self, trace: &[R], sampling_frequency: f64) -> TraceSpectrum {
        let mut bins: Vec<Complex64> = trace
            .iter()
            .map(|v| Complex64::new(v.to_f64(), 0.0))
            .collect();
        self.forward_in_place(&mut bins, &mut self.scratch());
        TraceSpectrum::new(bins, sampling_frequency)
    }

    pub fn forward_complex(&self, trace: &[Complex64], sampling_frequency: f64) -> TraceSpectrum {
        let mut bins = trace.to_vec();
        self.forward_in_place(&mut bins, &mut self.scratch());
        TraceSpectrum::new(bins, sampling_frequency)
    }

    pub fn inverse(&self, spectrum: &TraceSpectrum) -> Vec<Complex64> {
        let mut out = spectrum.bins.clone();
        self.inverse_in_place(&mut out, &mut self.scratch());
        out
    }
}

/// Analytic signal of a single real trace.
pub fn analytic_trace(trace: &[f64]) -> Vec<Complex64> {
    let fft = FftPair::new(trace.len());
    let mut spec = fft.forward_real(trace, 1.0);
    spec.apply_analytic_mask();
    fft.inverse(&spec)
}

/// Advances a trace by `tau` seconds, `g(t) <- g(t + tau)`, circularly, by
/// multiplying bin `k` with `exp(i 2π f_k τ)`.
pub fn fractional_advance(spectrum: &TraceSpectrum, tau: f64) -> Result<TraceSpectrum> {
    let len = spectrum.len();
    if !(tau.abs() * spectrum.sampling_frequency < len as f64) {
        return Err(invalid(format!(
            "shift of {tau} s exceeds the {len}-sample window"
        )));
    }
    let bins = spectrum
        .bins
        .iter()
        .enumerate()
        .map(|(k, &b)| b * Complex64::cis(TAU * spectrum.frequency(k) * tau))
        .collect();
    Ok(TraceSpectrum::new(bins, spectrum.sampling_frequency))
}

/// Spectra of a whole volume, `[N x channels x T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectraVolume {
    bins: Vec<Complex64>,
    num_transmits: usize,
    num_channels: usize,
    len: usize,
    sampling_frequency: f64,
}

impl SpectraVolume {
    pub(crate) fn from_parts(
        bins: Vec<Complex64>,
        num_transmits: usize,
        num_channels: usize,
        len: usize,
        sampling_frequency: f64,
    ) -> Self {
        debug_assert_eq!(bins.len(), num_transmits * num_channels * len);
        Self {
            bins,
            num_transmits,
            num_channels,
            len,
            sampling_frequency,
        }
    }

    /// `(N, channels, T)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.num_transmits, self.num_channels, self.len)
    }

    pub fn sampling_frequency(&self) -> f64 {
        self.sampling_frequency
    }

    #[inline]
    pub fn trace(&self, n: usize, ch: usize) -> &[Complex64] {
        let start = (n * self.num_channels + ch) * self.len;
        &self.bins[start..start + self.len]
    }

    pub fn spectrum(&self, n: usize, ch: usize) -> TraceSpectrum {
        TraceSpectrum::new(self.trace(n, ch).to_vec(), self.sampling_frequency)
    }

    /// Applies the analytic-signal mask to every trace.
    pub fn apply_analytic_mask(&mut self) {
        let len = self.len;
        self.bins.par_chunks_mut(len).for_each(|trace| {
            for (k, b) in trace.iter_mut().enumerate() {
                *b *= analytic_gain(k, len);
            }
        });
    }

    fn inverse_bins<R: Real>(&self) -> Vec<num_complex::Complex<R>> {
        let fft = FftPair::new(self.len);
        let mut out = vec![num_complex::Complex::<R>::default(); self.bins.len()];
        out.par_chunks_mut(self.len)
            .zip(self.bins.par_chunks(self.len))
            .for_each_init(
                || (fft.scratch(), vec![Complex64::new(0.0, 0.0); self.len]),
                |(scratch, buf), (dst, src)| {
                    buf.copy_from_slice(src);
                    fft.inverse_in_place(buf, scratch);
                    for (d, s) in dst.iter_mut().zip(buf.iter()) {
                        *d = from_c64(*s);
                    }
                },
            );
        out
    }

    /// Inverse transform to element-domain analytic data.
    pub fn into_analytic<R: Real>(
        &self,
        array: &TransducerArray,
        params: &AcquisitionParams,
    ) -> Result<AnalyticRf<R>> {
        AnalyticRf::new(self.inverse_bins(), array.clone(), params.clone())
    }

    /// Inverse transform to virtual plane-wave data.
    pub fn into_compressed<R: Real>(
        &self,
        receive: &ReceiveAngleSet,
        array: &TransducerArray,
        params: &AcquisitionParams,
    ) -> Result<CompressedRf<R>> {
        CompressedRf::new(
            self.inverse_bins(),
            receive.clone(),
            array.clone(),
            params.clone(),
        )
    }
}

fn forward_volume<T: Sync>(
    traces: &[T],
    len: usize,
    channels: usize,
    sampling_frequency: f64,
    load: impl Fn(&T) -> Complex64 + Sync,
) -> SpectraVolume {
    let fft = FftPair::new(len);
    let mut bins = vec![Complex64::new(0.0, 0.0); traces.len()];
    bins.par_chunks_mut(len)
        .zip(traces.par_chunks(len))
        .for_each_init(
            || fft.scratch(),
            |scratch, (dst, src)| {
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = load(s);
                }
                fft.forward_in_place(dst, scratch);
            },
        );
    SpectraVolume::from_parts(
        bins,
        traces.len() / (channels * len),
        channels,
        len,
        sampling_frequency,
    )
}

/// Forward FFT of every real trace.
pub fn rf_spectra<R: Real>(rf: &RfVolume<R>) -> SpectraVolume {
    let (_, l, t) = rf.dims();
    forward_volume(rf.data(), t, l, rf.array().sampling_frequency(), |v| {
        Complex64::new(v.to_f64(), 0.0)
    })
}

/// Forward FFT of every analytic trace.
pub fn analytic_spectra<R: Real>(rf: &AnalyticRf<R>) -> SpectraVolume {
    let (_, l, t) = rf.dims();
    forward_volume(rf.data(), t, l, rf.array().sampling_frequency(), |&c| {
        to_c64(c)
    })
}

/// Analytic signal of every trace: forward FFT, negative frequencies zeroed,
/// inverse FFT.
pub fn analytic_signal<R: Real>(rf: &RfVolume<R>) -> AnalyticRf<R> {
    let mut spectra = rf_spectra(rf);
    spectra.apply_analytic_mask();
    spectra
        .into_analytic(rf.array(), rf.params())
        .expect("dimensions are preserved")
}
