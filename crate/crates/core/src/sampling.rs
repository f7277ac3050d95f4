//! Transmit/receive angle sequences and the k-space support they sample.
//!
//! The object spatial frequencies recovered by a transmit angle `θ_i` and a
//! receive angle `θ_o` are `k = ν (s_o - s_i) / c`. With uniform transmit
//! angles the receive sequence decides how densely and how far `k_x` is
//! sampled: the vernier family fills the gaps between transmit angles, with a
//! shift `j` trading sampling density for support width, and the confocal
//! sequence spreads the shifts over a single set so that the `Δθ` density
//! falls off linearly away from zero.

use crate::error::{invalid, Result};

/// How a receive-angle set was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleScheme {
    /// Vernier fill with opposing shifts of `shift` transmit steps.
    UniformVernier {
        shift: usize,
    },
    Confocal,
    Explicit,
}

/// Synthesized receive angles in generation order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiveAngleSet {
    angles: Vec<f64>,
    scheme: AngleScheme,
    delta_theta_i: f64,
}

impl ReceiveAngleSet {
    /// Arbitrary receive angles. The set must be symmetric about zero and
    /// contain zero at most once.
    pub fn explicit(angles: Vec<f64>, delta_theta_i: f64) -> Result<Self> {
        if angles.is_empty() {
            return Err(invalid("receive angle set is empty"));
        }
        if angles
            .iter()
            .any(|a| !a.is_finite() || a.abs() >= std::f64::consts::FRAC_PI_2)
        {
            return Err(invalid(
                "receive angles must lie strictly inside (-90°, 90°)",
            ));
        }
        let mut sorted = angles.clone();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len();
        let scale = sorted
            .iter()
            .fold(0.0f64, |acc, a| acc.max(a.abs()))
            .max(1e-300);
        if (0..m).any(|k| (sorted[k] + sorted[m - 1 - k]).abs() > 1e-12 * scale) {
            return Err(invalid("receive angle set is not symmetric about zero"));
        }
        if sorted.iter().filter(|&&a| a == 0.0).count() > 1 {
            return Err(invalid("receive angle set contains zero more than once"));
        }
        Ok(Self {
            angles,
            scheme: AngleScheme::Explicit,
            delta_theta_i,
        })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn scheme(&self) -> AngleScheme {
        self.scheme
    }

    /// Transmit angular step the set was designed against.
    pub fn delta_theta_i(&self) -> f64 {
        self.delta_theta_i
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Angles in ascending order.
    pub fn sorted(&self) -> Vec<f64> {
        let mut s = self.angles.clone();
        s.sort_by(f64::total_cmp);
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.angles.iter().fold(0.0, |acc: f64, a| acc.max(a.abs()))
    }
}

/// Generation indices `o`: `-⌊M/2⌋..=⌊M/2⌋` for odd `M`; for even `M` the
/// same range without `0`, which keeps exactly `M` entries.
pub fn generation_indices(m: usize) -> Vec<i64> {
    let half = (m / 2) as i64;
    (-half..=half).filter(|&o| m % 2 == 1 || o != 0).collect()
}

/// Transmit angular step `δθ_i = 2 θmax / (N - 1)`.
pub fn transmit_step(n: usize, theta_max: f64) -> f64 {
    2.0 * theta_max / (n as f64 - 1.0)
}

/// `N` uniformly spaced transmit angles from `-θmax` to `+θmax` inclusive.
pub fn transmit_angles(n: usize, theta_max: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(invalid(format!("need at least 2 transmit angles, got {n}")));
    }
    if !(theta_max > 0.0 && theta_max < std::f64::consts::FRAC_PI_2) {
        return Err(invalid("θmax must lie in (0, 90°)"));
    }
    let denom = n as f64 - 1.0;
    Ok((0..n)
        .map(|k| theta_max * (2.0 * k as f64 - denom) / denom)
        .collect())
}

fn check_design(n: usize, m: usize, theta_max: f64) -> Result<()> {
    if n < 2 {
        return Err(invalid("need at least 2 transmit angles"));
    }
    if m == 0 {
        return Err(invalid("need at least one receive angle"));
    }
    if !(theta_max > 0.0 && theta_max < std::f64::consts::FRAC_PI_2) {
        return Err(invalid("θmax must lie in (0, 90°)"));
    }
    Ok(())
}

fn from_offsets(
    m: usize,
    dti: f64,
    scheme: AngleScheme,
    offset: impl Fn(u64) -> f64,
) -> Result<ReceiveAngleSet> {
    let angles: Vec<f64> = generation_indices(m)
        .into_iter()
        .map(|o| {
            let a = o.unsigned_abs();
            (o.signum() as f64) * dti * (2.0 * a as f64 / m as f64 + offset(a))
        })
        .collect();
    if angles
        .iter()
        .any(|a| a.abs() >= std::f64::consts::FRAC_PI_2)
    {
        return Err(invalid(
            "receive angles reach 90°; reduce θmax or the shift",
        ));
    }
    Ok(ReceiveAngleSet {
        angles,
        scheme,
        delta_theta_i: dti,
    })
}

/// Shifted vernier receive set `θ_o = sgn(o) δθ_i (2|o|/M + j)`.
pub fn uniform_vernier_angles(
    n: usize,
    m: usize,
    theta_max: f64,
    shift: usize,
) -> Result<ReceiveAngleSet> {
    check_design(n, m, theta_max)?;
    if shift > n / 2 {
        return Err(invalid(format!("shift j = {shift} outside [0, {}]", n / 2)));
    }
    let dti = transmit_step(n, theta_max);
    from_offsets(m, dti, AngleScheme::UniformVernier { shift }, |_| {
        shift as f64
    })
}

/// Confocal receive set `θ_o = sgn(o) δθ_i (2|o|/M + mod(|o|, ⌊N/2⌋))`.
pub fn confocal_angles(n: usize, m: usize, theta_max: f64) -> Result<ReceiveAngleSet> {
    if n < 3 {
        return Err(invalid(
            "confocal sampling needs at least 3 transmit angles",
        ));
    }
    check_design(n, m, theta_max)?;
    let dti = transmit_step(n, theta_max);
    let period = (n / 2) as u64;
    from_offsets(m, dti, AngleScheme::Confocal, |a| (a % period) as f64)
}

/// One transmit/receive pair in k-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportSample {
    pub theta_i: f64,
    pub theta_o: f64,
    /// `θ_o - θ_i` (radians).
    pub delta_theta: f64,
    /// Lateral spatial frequency `ν (sin θ_o - sin θ_i) / c` (cycles/m).
    pub kx: f64,
}

/// All `N x M` transmit/receive pairs, transmit-major.
pub fn support(
    transmit: &[f64],
    receive: &ReceiveAngleSet,
    center_frequency: f64,
    sound_speed: f64,
) -> Result<Vec<SupportSample>> {
    if transmit.is_empty() || receive.is_empty() {
        return Err(invalid("support needs nonempty angle lists"));
    }
    let scale = center_frequency / sound_speed;
    Ok(transmit
        .iter()
        .flat_map(|&ti| {
            receive.angles().iter().map(move |&to| SupportSample {
                theta_i: ti,
                theta_o: to,
                delta_theta: to - ti,
                kx: scale * (to.sin() - ti.sin()),
            })
        })
        .collect())
}

/// Uniform-bin histogram of `Δθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `num_bins + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Pearson correlation between the counts and an ideal triangle peaked at
    /// `Δθ = 0` that reaches zero at the outermost histogram edge.
    pub fn triangle_correlation(&self) -> f64 {
        let half = self
            .edges
            .first()
            .map(|e| e.abs())
            .unwrap_or(0.0)
            .max(self.edges.last().map(|e| e.abs()).unwrap_or(0.0));
        let tri: Vec<f64> = self
            .centers()
            .iter()
            .map(|c| (1.0 - c.abs() / half).max(0.0))
            .collect();
        let counts: Vec<f64> = self.counts.iter().map(|&c| c as f64).collect();
        pearson(&counts, &tri)
    }
}

pub(crate) fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Histogram of `Δθ` over uniform bins spanning `[min Δθ, max Δθ]`.
///
/// A zero-width range puts every sample in the middle bin.
pub fn support_histogram(samples: &[SupportSample], num_bins: usize) -> Result<Histogram> {
    if num_bins < 3 {
        return Err(invalid("histogram needs at least 3 bins"));
    }
    if samples.is_empty() {
        return Err(invalid("histogram of an empty support"));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.delta_theta), hi.max(s.delta_theta))
        });
    let mut counts = vec![0usize; num_bins];
    let width = hi - lo;
    let edges: Vec<f64> = if width > 0.0 {
        (0..=num_bins)
            .map(|k| lo + width * k as f64 / num_bins as f64)
            .collect()
    } else {
        (0..=num_bins)
            .map(|k| lo + k as f64 / num_bins as f64 - 0.5)
            .collect()
    };
    for s in samples {
        let bin = if width > 0.0 {
            (((s.delta_theta - lo) / width * num_bins as f64) as usize).min(num_bins - 1)
        } else {
            num_bins / 2
        };
        counts[bin] += 1;
    }
    Ok(Histogram { edges, counts })
}
