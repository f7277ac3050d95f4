//! Point-scatterer forward model for plane-wave insonification.
//!
//! Each trace is the sum over scatterers of the transmit pulse delayed by the
//! round trip `τ_in + τ_out`, with `τ_in = (x sin θ + z cos θ) / c` and
//! `τ_out = |r - (u_l, 0)| / c`. The pulse waveform starts at the round-trip
//! delay, so its peak arrives [`Pulse::peak_delay`] later. There is no
//! attenuation, directivity or multiple scattering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::{AcquisitionParams, TransducerArray};
use crate::volume::{Real, RfVolume};

/// Envelope level at which the pulse waveform is truncated.
const PULSE_TRUNCATION: f64 = 1e-4;
/// Oversampling of the pulse table used for fractional-delay placement.
const OVERSAMPLE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub x: f64,
    pub z: f64,
    pub reflectivity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    scatterers: Vec<Scatterer>,
    label: String,
}

impl Phantom {
    pub fn new(scatterers: Vec<Scatterer>, label: impl Into<String>) -> Result<Self> {
        for (i, s) in scatterers.iter().enumerate() {
            if !(s.z > 0.0 && s.z.is_finite() && s.x.is_finite() && s.reflectivity.is_finite()) {
                return Err(invalid(format!(
                    "scatterer {i} must be finite and below the array (z > 0)"
                )));
            }
        }
        Ok(Self {
            scatterers,
            label: label.into(),
        })
    }

    pub fn empty(label: impl Into<String>) -> Self {
        Self {
            scatterers: Vec::new(),
            label: label.into(),
        }
    }

    pub fn scatterers(&self) -> &[Scatterer] {
        &self.scatterers
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.scatterers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scatterers.is_empty()
    }

    pub fn translated(&self, dx: f64, dz: f64) -> Result<Self> {
        Self::new(
            self.scatterers
                .iter()
                .map(|s| Scatterer {
                    x: s.x + dx,
                    z: s.z + dz,
                    ..*s
                })
                .collect(),
            self.label.clone(),
        )
    }

    /// Scatterers of `self` followed by those of `other`.
    pub fn union(&self, other: &Phantom) -> Phantom {
        let mut scatterers = self.scatterers.clone();
        scatterers.extend_from_slice(&other.scatterers);
        Phantom {
            scatterers,
            label: format!("{}+{}", self.label, other.label),
        }
    }
}

/// Gaussian-enveloped cosine transmit pulse sampled at `fs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    center_frequency: f64,
    fractional_bandwidth: f64,
    sampling_frequency: f64,
    waveform: Vec<f64>,
    /// Waveform at `OVERSAMPLE * fs`, with `OVERSAMPLE` zeros before and
    /// `OVERSAMPLE + 2` after.
    fine: Vec<f64>,
}

impl Pulse {
    pub fn center_frequency(&self) -> f64 {
        self.center_frequency
    }

    pub fn fractional_bandwidth(&self) -> f64 {
        self.fractional_bandwidth
    }

    pub fn sampling_frequency(&self) -> f64 {
        self.sampling_frequency
    }

    pub fn waveform(&self) -> &[f64] {
        &self.waveform
    }

    pub fn len(&self) -> usize {
        self.waveform.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waveform.is_empty()
    }

    /// Time from the start of the waveform to its peak, `(len-1) / (2 fs)`.
    pub fn peak_delay(&self) -> f64 {
        (self.waveform.len() as f64 - 1.0) / (2.0 * self.sampling_frequency)
    }

    /// Standard deviation of the Gaussian envelope in seconds.
    pub fn envelope_sigma(&self) -> f64 {
        envelope_sigma(self.center_frequency, self.fractional_bandwidth)
    }
}

fn envelope_sigma(center_frequency: f64, fractional_bandwidth: f64) -> f64 {
    // -6 dB amplitude full width of the spectrum is bw * ν.
    let sigma_f = fractional_bandwidth * center_frequency / (2.0 * (2.0 * 2f64.ln()).sqrt());
    1.0 / (std::f64::consts::TAU * sigma_f)
}

/// Builds a Gaussian-enveloped cosine with -6 dB spectral full width
/// `fractional_bandwidth * ν`, peak 1 at the centre sample.
pub fn make_pulse(center_frequency: f64, fractional_bandwidth: f64, fs: f64) -> Result<Pulse> {
    if !(center_frequency > 0.0 && center_frequency.is_finite()) {
        return Err(invalid("pulse centre frequency must be positive"));
    }
    if !(fractional_bandwidth > 0.0 && fractional_bandwidth <= 1.0) {
        return Err(invalid("fractional bandwidth must lie in (0, 1]"));
    }
    let nyquist = 2.0 * center_frequency * (1.0 + fractional_bandwidth / 2.0);
    if !(fs > nyquist) {
        return Err(invalid(format!(
            "sampling frequency {fs} Hz is below the pulse-band Nyquist rate {nyquist} Hz"
        )));
    }
    let sigma_t = envelope_sigma(center_frequency, fractional_bandwidth);
    let half_width = sigma_t * (2.0 * (1.0 / PULSE_TRUNCATION).ln()).sqrt();
    let half = (half_width * fs).ceil() as usize;
    let shape = |t: f64| {
        (-t * t / (2.0 * sigma_t * sigma_t)).exp()
            * (std::f64::consts::TAU * center_frequency * t).cos()
    };
    let waveform = (0..=2 * half)
        .map(|k| shape((k as f64 - half as f64) / fs))
        .collect();
    let fine_fs = fs * OVERSAMPLE as f64;
    let mut fine = vec![0.0; OVERSAMPLE];
    fine.extend(
        (0..=2 * half * OVERSAMPLE)
            .map(|j| shape((j as f64 - (half * OVERSAMPLE) as f64) / fine_fs)),
    );
    fine.extend(std::iter::repeat(0.0).take(OVERSAMPLE + 2));
    Ok(Pulse {
        center_frequency,
        fractional_bandwidth,
        sampling_frequency: fs,
        waveform,
        fine,
    })
}

/// A row of unit point targets at `depth`; the first sits at `x = 0` and each
/// following one is `spacings[k]` further along `x`.
pub fn wire_phantom(spacings: &[f64], depth: f64) -> Result<Phantom> {
    if spacings.iter().any(|&s| !(s > 0.0)) {
        return Err(invalid("wire spacings must be positive"));
    }
    let mut x = 0.0;
    let mut scatterers = vec![Scatterer {
        x,
        z: depth,
        reflectivity: 1.0,
    }];
    for &s in spacings {
        x += s;
        scatterers.push(Scatterer {
            x,
            z: depth,
            reflectivity: 1.0,
        });
    }
    Phantom::new(scatterers, "wires")
}

/// Rectangular speckle region with an optional anechoic circular inclusion.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeckleRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Scatterers per square millimetre.
    pub density_per_mm2: f64,
    pub inclusion_center: (f64, f64),
    pub inclusion_radius: f64,
    pub seed: u64,
}

/// Uniformly placed scatterers with standard-normal reflectivities; those
/// inside the inclusion circle are removed.
pub fn speckle_phantom(region: &SpeckleRegion) -> Result<Phantom> {
    let r = region;
    if !(r.density_per_mm2 > 0.0) {
        return Err(invalid("scatterer density must be positive"));
    }
    if !(r.x_max > r.x_min && r.z_max > r.z_min && r.z_min > 0.0) {
        return Err(invalid(
            "speckle region must be a nonempty rectangle below the array",
        ));
    }
    if r.inclusion_radius < 0.0 {
        return Err(invalid("inclusion radius must be nonnegative"));
    }
    let (cx, cz) = r.inclusion_center;
    if r.inclusion_radius > 0.0
        && (cx - r.inclusion_radius < r.x_min
            || cx + r.inclusion_radius > r.x_max
            || cz - r.inclusion_radius < r.z_min
            || cz + r.inclusion_radius > r.z_max)
    {
        return Err(invalid("inclusion must lie inside the speckle region"));
    }
    let area_mm2 = (r.x_max - r.x_min) * (r.z_max - r.z_min) * 1e6;
    let count = (r.density_per_mm2 * area_mm2).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
    let mut scatterers = Vec::with_capacity(count);
    let r2 = r.inclusion_radius * r.inclusion_radius;
    for _ in 0..count {
        let x = r.x_min + (r.x_max - r.x_min) * rng.random::<f64>();
        let z = r.z_min + (r.z_max - r.z_min) * rng.random::<f64>();
        let reflectivity: f64 = rng.sample(StandardNormal);
        if (x - cx).powi(2) + (z - cz).powi(2) < r2 {
            continue;
        }
        scatterers.push(Scatterer { x, z, reflectivity });
    }
    Phantom::new(scatterers, "speckle")
}

/// Area of one speckle resolution cell at `depth`: lateral `λ z / aperture`
/// times half the -6 dB pulse length.
pub fn resolution_cell_area(
    array: &TransducerArray,
    pulse: &Pulse,
    depth: f64,
    sound_speed: f64,
) -> f64 {
    let lateral = array.wavelength(sound_speed) * depth / array.aperture();
    let fwhm_t = 2.0 * (2.0 * 2f64.ln()).sqrt() * pulse.envelope_sigma();
    lateral * sound_speed * fwhm_t / 2.0
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationOptions {
    /// Standard deviation of additive white Gaussian noise.
    pub noise_rms: Option<f64>,
    pub noise_seed: u64,
    /// Scale echoes by `1/sqrt(receive path length)`.
    pub spherical_spreading: bool,
}

#[inline]
fn transmit_delay(x: f64, z: f64, theta: f64, c: f64) -> f64 {
    (x * theta.sin() + z * theta.cos()) / c
}

/// Smallest and largest round-trip delay of scatterer `s` over all transmits
/// and elements.
fn delay_bounds(s: &Scatterer, array: &TransducerArray, params: &AcquisitionParams) -> (f64, f64) {
    let c = params.sound_speed();
    let (tin_lo, tin_hi) = params
        .transmit_angles()
        .iter()
        .map(|&th| transmit_delay(s.x, s.z, th, c))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
            (lo.min(t), hi.max(t))
        });
    let first = array.element_position(0);
    let last = array.element_position(array.num_elements() - 1);
    let nearest = s.x.clamp(first, last);
    let out_lo = (s.x - nearest).hypot(s.z) / c;
    let out_hi = (s.x - first).abs().max((s.x - last).abs()).hypot(s.z) / c;
    (tin_lo + out_lo, tin_hi + out_hi)
}

/// Number of samples needed so that every echo of `phantom` fits the window.
pub fn required_samples(
    array: &TransducerArray,
    params: &AcquisitionParams,
    phantom: &Phantom,
    pulse: &Pulse,
) -> usize {
    let fs = array.sampling_frequency();
    phantom
        .scatterers()
        .iter()
        .map(|s| {
            let (_, hi) = delay_bounds(s, array, params);
            let start = params.sample_index(hi, fs).floor().max(0.0) as usize;
            start + pulse.len() + 1
        })
        .max()
        .unwrap_or(2)
}

/// Simulated receive data for every transmit angle and element.
pub fn simulate_rf<R: Real>(
    array: &TransducerArray,
    params: &AcquisitionParams,
    phantom: &Phantom,
    pulse: &Pulse,
    options: &SimulationOptions,
) -> Result<RfVolume<R>> {
    let fs = array.sampling_frequency();
    if (pulse.sampling_frequency() - fs).abs() > 1e-9 * fs {
        return Err(invalid("pulse and array sampling frequencies differ"));
    }
    let t_len = params.num_samples();
    let plen = pulse.len();
    for (index, s) in phantom.scatterers().iter().enumerate() {
        let (lo, hi) = delay_bounds(s, array, params);
        let first = params.sample_index(lo, fs).floor();
        let last = params.sample_index(hi, fs).floor() + plen as f64;
        if first < 0.0 || last >= t_len as f64 {
            return Err(Error::WindowOverflow {
                index,
                x: s.x,
                z: s.z,
                needed: if first < 0.0 {
                    first as i64
                } else {
                    last as i64
                },
                available: t_len,
            });
        }
    }

    let c = params.sound_speed();
    let n_tx = params.num_transmits();
    let n_el = array.num_elements();
    let scatterers = phantom.scatterers();
    let tin: Vec<f64> = params
        .transmit_angles()
        .iter()
        .flat_map(|&th| {
            scatterers
                .iter()
                .map(move |s| transmit_delay(s.x, s.z, th, c))
        })
        .collect();
    let fine = &pulse.fine;
    let t0 = params.t0();

    let mut data = vec![R::default(); n_tx * n_el * t_len];
    data.par_chunks_mut(t_len).enumerate().for_each_init(
        || vec![0.0f64; t_len],
        |acc, (trace, out)| {
            let n = trace / n_el;
            let u = array.element_position(trace % n_el);
            acc.iter_mut().for_each(|v| *v = 0.0);
            for (s, &tau_in) in scatterers.iter().zip(&tin[n * scatterers.len()..]) {
                let dist = (s.x - u).hypot(s.z);
                let start = (tau_in + dist / c - t0) * fs;
                let kf = start.floor();
                let frac = start - kf;
                let k0 = kf as usize;
                let amp = if options.spherical_spreading {
                    s.reflectivity / dist.sqrt()
                } else {
                    s.reflectivity
                };
                // Echo sample k0 + i reads the pulse at (i - frac) / fs,
                // taken from the oversampled table by linear interpolation.
                let g = frac * OVERSAMPLE as f64;
                let gi = g.ceil();
                let gf = gi - g;
                let shift = OVERSAMPLE - gi as usize;
                let dst = &mut acc[k0..k0 + plen + 1];
                for (i, d) in dst.iter_mut().enumerate() {
                    let j = i * OVERSAMPLE + shift;
                    *d += amp * (fine[j] + gf * (fine[j + 1] - fine[j]));
                }
            }
            for (o, v) in out.iter_mut().zip(acc.iter()) {
                *o = R::from_f64(*v);
            }
        },
    );

    if let Some(rms) = options.noise_rms {
        let mut rng = ChaCha8Rng::seed_from_u64(options.noise_seed);
        for v in data.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            *v = R::from_f64(v.to_f64() + rms * e);
        }
    }

    RfVolume::new(data, array.clone(), params.clone())
}
