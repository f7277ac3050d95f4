//! Decomposition of receive data into virtual receive plane waves.
//!
//! A receive plane wave at angle `θ_o` is synthesized by shearing each
//! element trace in time in proportion to `u_l sin θ_o / c` and summing over
//! the aperture. The shear is applied in the frequency domain. All advances
//! are kept nonnegative by referencing them to the aperture edge that the
//! plane wave reaches last:
//!
//! * `θ_o > 0`: advance `(u_last - u_l) sin θ_o / c`
//! * `θ_o < 0`: advance `(u_l - u_first) |sin θ_o| / c`
//! * `θ_o = 0`: plain sum
//!
//! With this choice an echo that has origin-referenced receive delay
//! `s_o · r / c` appears in the compressed trace
//! [`edge_reference_delay`] earlier. Data past the end of the window wraps
//! around circularly, so the window needs a trailing guard band of at least
//! the largest advance beyond the last sample a beamformer reads.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::TransducerArray;
use crate::sampling::ReceiveAngleSet;
use crate::spectral::{analytic_spectra, bin_frequency, rf_spectra, SpectraVolume};
use crate::volume::{AnalyticRf, CompressedRf, Real, RfVolume};

/// Re-anchor the phase recurrence this often to bound rounding drift.
const PHASE_ANCHOR: usize = 64;

/// Per-element time advances (seconds, all `>= 0`) for receive angle `theta`.
pub fn shear_advances(array: &TransducerArray, theta: f64, sound_speed: f64) -> Vec<f64> {
    let s = theta.sin();
    let first = array.element_position(0);
    let last = array.element_position(array.num_elements() - 1);
    array
        .element_positions()
        .into_iter()
        .map(|u| {
            if theta > 0.0 {
                (last - u) * s / sound_speed
            } else if theta < 0.0 {
                (u - first) * -s / sound_speed
            } else {
                0.0
            }
        })
        .collect()
}

/// How much earlier than its origin-referenced delay an echo appears in the
/// compressed trace for `theta`: `(aperture / 2) |sin θ| / c`.
pub fn edge_reference_delay(array: &TransducerArray, theta: f64, sound_speed: f64) -> f64 {
    0.5 * array.aperture() * theta.sin().abs() / sound_speed
}

/// Trailing samples the shear may pull in: `ceil(aperture sin(max|θ_o|) fs / c)`.
pub fn guard_band(array: &TransducerArray, receive: &ReceiveAngleSet, sound_speed: f64) -> usize {
    (array.aperture() * receive.max_abs().sin() * array.sampling_frequency() / sound_speed).ceil()
        as usize
}

/// Checks that a window of `num_samples` leaves room for the shear after
/// `last_used_index`.
pub fn check_guard_band(
    array: &TransducerArray,
    receive: &ReceiveAngleSet,
    sound_speed: f64,
    num_samples: usize,
    last_used_index: usize,
) -> Result<()> {
    let need = last_used_index + guard_band(array, receive, sound_speed);
    if num_samples < need {
        return Err(Error::GuardBand {
            required_padding: need - num_samples,
        });
    }
    Ok(())
}

/// Shear-and-sum of per-element spectra into per-receive-angle spectra.
///
/// `spectra` must be `[N x L x T]`; the result is `[N x M x T]`.
pub fn shear_sum_spectra(
    spectra: &SpectraVolume,
    array: &TransducerArray,
    receive: &ReceiveAngleSet,
    sound_speed: f64,
) -> Result<SpectraVolume> {
    let (n_tx, n_el, t_len) = spectra.dims();
    if n_el != array.num_elements() {
        return Err(Error::GeometryMismatch(format!(
            "spectra have {n_el} channels, array has {} elements",
            array.num_elements()
        )));
    }
    let fs = spectra.sampling_frequency();
    let m_len = receive.len();
    let advances: Vec<Vec<f64>> = receive
        .angles()
        .iter()
        .map(|&th| shear_advances(array, th, sound_speed))
        .collect();
    let freqs: Vec<f64> = (0..t_len).map(|k| bin_frequency(k, t_len, fs)).collect();
    // Bins that are identically zero in every trace (e.g. the negative half
    // of analytic data) are skipped.
    let live: Vec<bool> = (0..t_len)
        .map(|k| {
            (0..n_tx).any(|n| (0..n_el).any(|l| spectra.trace(n, l)[k] != Complex64::new(0.0, 0.0)))
        })
        .collect();

    let mut out = vec![Complex64::new(0.0, 0.0); n_tx * m_len * t_len];
    out.par_chunks_mut(t_len)
        .enumerate()
        .for_each(|(idx, dst)| {
            let (n, m) = (idx / m_len, idx % m_len);
            for (l, &a) in advances[m].iter().enumerate() {
                let src = spectra.trace(n, l);
                if a == 0.0 {
                    for k in 0..t_len {
                        dst[k] += src[k];
                    }
                    continue;
                }
                let mut k = 0;
                while k < t_len {
                    let end = (k + PHASE_ANCHOR).min(t_len);
                    let mut ph = Complex64::cis(TAU * freqs[k] * a);
                    // Bins within a block share a frequency step unless the block
                    // straddles the wrap to negative frequencies.
                    let step = Complex64::cis(TAU * fs / t_len as f64 * a);
                    for kk in k..end {
                        if kk > k && freqs[kk] < freqs[kk - 1] {
                            ph = Complex64::cis(TAU * freqs[kk] * a);
                        }
                        if live[kk] {
                            dst[kk] += src[kk] * ph;
                        }
                        ph *= step;
                    }
                    k = end;
                }
            }
        });
    Ok(SpectraVolume::from_parts(out, n_tx, m_len, t_len, fs))
}

/// Virtual plane-wave data from analytic element data.
///
/// `last_used_index` is the last compressed-domain sample any beamformer will
/// read; the window must extend at least [`guard_band`] samples beyond it.
pub fn compress<R: Real>(
    rf: &AnalyticRf<R>,
    receive: &ReceiveAngleSet,
    last_used_index: usize,
) -> Result<CompressedRf<R>> {
    let c = rf.params().sound_speed();
    check_guard_band(
        rf.array(),
        receive,
        c,
        rf.params().num_samples(),
        last_used_index,
    )?;
    let spectra = analytic_spectra(rf);
    shear_sum_spectra(&spectra, rf.array(), receive, c)?.into_compressed(
        receive,
        rf.array(),
        rf.params(),
    )
}

/// Fused path from real element data: one forward FFT per trace, analytic
/// mask and shear in the frequency domain, one inverse FFT per output trace.
pub fn compress_rf<R: Real>(
    rf: &RfVolume<R>,
    receive: &ReceiveAngleSet,
    last_used_index: usize,
) -> Result<CompressedRf<R>> {
    let c = rf.params().sound_speed();
    check_guard_band(
        rf.array(),
        receive,
        c,
        rf.params().num_samples(),
        last_used_index,
    )?;
    let mut spectra = rf_spectra(rf);
    spectra.apply_analytic_mask();
    shear_sum_spectra(&spectra, rf.array(), receive, c)?.into_compressed(
        receive,
        rf.array(),
        rf.params(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AcquisitionParams;
    use crate::sampling::uniform_vernier_angles;

    fn array() -> TransducerArray {
        TransducerArray::new(0.3e-3, 16, 5e6, 40e6, 0.6).unwrap()
    }

    #[test]
    fn advances_are_nonnegative_and_mirror() {
        let a = array();
        let pos = shear_advances(&a, 0.2, 1540.0);
        let neg = shear_advances(&a, -0.2, 1540.0);
        assert!(pos.iter().chain(&neg).all(|&v| v >= 0.0));
        assert_eq!(pos[15], 0.0);
        assert_eq!(neg[0], 0.0);
        let rev: Vec<f64> = neg.iter().rev().copied().collect();
        for (x, y) in pos.iter().zip(&rev) {
            assert!((x - y).abs() < 1e-18);
        }
        assert!(shear_advances(&a, 0.0, 1540.0).iter().all(|&v| v == 0.0));
        let max = pos.iter().fold(0.0f64, |m, &v| m.max(v));
        assert!((max - a.aperture() * 0.2f64.sin() / 1540.0).abs() < 1e-18);
    }

    #[test]
    fn guard_band_error_reports_padding() {
        let a = array();
        let p = AcquisitionParams::new(1540.0, vec![0.0], 256, 0.0).unwrap();
        let rx = uniform_vernier_angles(3, 3, 0.4, 1).unwrap();
        let g = guard_band(&a, &rx, 1540.0);
        assert!(g > 0);
        let rf = RfVolume::<f64>::zeros(a, p);
        match compress_rf(&rf, &rx, 256) {
            Err(Error::GuardBand { required_padding }) => assert_eq!(required_padding, g),
            other => panic!("{other:?}"),
        }
        assert!(compress_rf(&rf, &rx, 256 - g).is_ok());
    }

    #[test]
    fn zeros_compress_to_zeros() {
        let a = array();
        let p = AcquisitionParams::new(1540.0, vec![-0.1, 0.1], 64, 0.0).unwrap();
        let rx = uniform_vernier_angles(3, 5, 0.3, 0).unwrap();
        let out = compress_rf(&RfVolume::<f32>::zeros(a, p), &rx, 0).unwrap();
        assert_eq!(out.dims(), (2, 5, 64));
        assert!(out.data().iter().all(|c| c.re == 0.0 && c.im == 0.0));
    }
}
