//! Image-quality measures: gCNR, lateral FWHM, two-point dip and display
//! contrast matching.

use crate::error::{invalid, Error, Result};
use crate::geometry::ImageGrid;
use crate::image::IntensityImage;

/// Default histogram size for [`gcnr`].
pub const GCNR_BINS: usize = 256;
/// Smallest ROI accepted by [`gcnr`].
pub const MIN_ROI_PIXELS: usize = 100;
/// Exponent applied to the reference image in [`gamma_match`].
pub const GAMMA_REF: f64 = 0.5;

/// Region of interest in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Roi {
    Circle { center: (f64, f64), radius: f64 },
    Rect { x0: f64, z0: f64, x1: f64, z1: f64 },
}

impl Roi {
    pub fn contains(&self, x: f64, z: f64) -> bool {
        match *self {
            Roi::Circle { center, radius } => {
                (x - center.0).powi(2) + (z - center.1).powi(2) <= radius * radius
            }
            Roi::Rect { x0, z0, x1, z1 } => {
                x >= x0.min(x1) && x <= x0.max(x1) && z >= z0.min(z1) && z <= z0.max(z1)
            }
        }
    }

    /// Storage indices of the grid pixels whose centres lie in the region.
    pub fn pixels(&self, grid: &ImageGrid) -> Vec<usize> {
        let mut out = Vec::new();
        for iz in 0..grid.nz() {
            for ix in 0..grid.nx() {
                if self.contains(grid.x(ix), grid.z(iz)) {
                    out.push(grid.index(ix, iz));
                }
            }
        }
        out
    }
}

/// Rectangle minus a circle, the usual speckle background around an
/// inclusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annulus {
    pub outer: Roi,
    pub hole: Roi,
}

fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut counts = vec![0.0; bins];
    let width = hi - lo;
    for &v in values {
        let b = if width > 0.0 {
            (((v - lo) / width * bins as f64) as usize).min(bins - 1)
        } else {
            bins / 2
        };
        counts[b] += 1.0;
    }
    let total = values.len() as f64;
    counts.iter_mut().for_each(|c| *c /= total);
    counts
}

/// gCNR between two pixel populations: one minus the overlap of their
/// histograms over shared uniform bins spanning both.
pub fn gcnr_values(inside: &[f64], outside: &[f64], num_bins: usize) -> Result<f64> {
    if inside.is_empty() || outside.is_empty() {
        return Err(invalid("gCNR needs two nonempty populations"));
    }
    if num_bins == 0 {
        return Err(invalid("gCNR needs at least one bin"));
    }
    let (lo, hi) = inside
        .iter()
        .chain(outside)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let p = histogram(inside, lo, hi, num_bins);
    let q = histogram(outside, lo, hi, num_bins);
    let overlap: f64 = p.iter().zip(&q).map(|(a, b)| a.min(*b)).sum();
    Ok((1.0 - overlap).clamp(0.0, 1.0))
}

fn roi_values(image: &IntensityImage, idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| image.pixels()[i]).collect()
}

fn checked_pixels(roi: &Roi, grid: &ImageGrid) -> Result<Vec<usize>> {
    let idx = roi.pixels(grid);
    if idx.len() < MIN_ROI_PIXELS {
        return Err(Error::RoiTooSmall {
            pixels: idx.len(),
            minimum: MIN_ROI_PIXELS,
        });
    }
    Ok(idx)
}

/// gCNR between the pixels of two disjoint ROIs.
pub fn gcnr(image: &IntensityImage, inside: &Roi, outside: &Roi, num_bins: usize) -> Result<f64> {
    let a = checked_pixels(inside, image.grid())?;
    let b = checked_pixels(outside, image.grid())?;
    let shared = a.iter().filter(|i| b.binary_search(i).is_ok()).count();
    if shared > 0 {
        return Err(Error::RoiOverlap(shared));
    }
    gcnr_values(&roi_values(image, &a), &roi_values(image, &b), num_bins)
}

/// gCNR of an inclusion against a background that excludes it.
pub fn gcnr_with_background(
    image: &IntensityImage,
    inside: &Roi,
    background: &Annulus,
    num_bins: usize,
) -> Result<f64> {
    let grid = image.grid();
    let a = checked_pixels(inside, grid)?;
    let b: Vec<usize> = background
        .outer
        .pixels(grid)
        .into_iter()
        .filter(|&i| {
            let (ix, iz) = (i % grid.nx(), i / grid.nx());
            !background.hole.contains(grid.x(ix), grid.z(iz))
        })
        .collect();
    if b.len() < MIN_ROI_PIXELS {
        return Err(Error::RoiTooSmall {
            pixels: b.len(),
            minimum: MIN_ROI_PIXELS,
        });
    }
    let shared = a.iter().filter(|i| b.binary_search(i).is_ok()).count();
    if shared > 0 {
        return Err(Error::RoiOverlap(shared));
    }
    gcnr_values(&roi_values(image, &a), &roi_values(image, &b), num_bins)
}

/// Column range of the grid within `half` of `x`.
fn window_columns(grid: &ImageGrid, x: f64, half: f64) -> (usize, usize) {
    let lo = ((x - half - grid.x0()) / grid.dx()).ceil().max(0.0) as usize;
    let hi = (((x + half - grid.x0()) / grid.dx()).floor() as isize)
        .min(grid.nx() as isize - 1)
        .max(-1);
    (lo, hi.max(0) as usize)
}

fn window_rows(grid: &ImageGrid, z: f64, half: f64) -> (usize, usize) {
    let lo = ((z - half - grid.z0()) / grid.dz()).ceil().max(0.0) as usize;
    let hi = (((z + half - grid.z0()) / grid.dz()).floor() as isize)
        .min(grid.nz() as isize - 1)
        .max(0);
    (lo, hi as usize)
}

/// Brightest pixel in the square window of side `window` around `target`.
pub fn find_peak(
    image: &IntensityImage,
    target: (f64, f64),
    window: f64,
) -> Result<(usize, usize)> {
    let grid = image.grid();
    let (c0, c1) = window_columns(grid, target.0, window / 2.0);
    let (r0, r1) = window_rows(grid, target.1, window / 2.0);
    if c0 > c1 || r0 > r1 {
        return Err(Error::NoPeak);
    }
    let mut best = None;
    let mut best_val = 0.0;
    for iz in r0..=r1 {
        for ix in c0..=c1 {
            let v = image.at(ix, iz);
            if v > best_val {
                best_val = v;
                best = Some((ix, iz));
            }
        }
    }
    best.ok_or(Error::NoPeak)
}

/// Lateral full width at half maximum through the peak nearest `target`,
/// searched within a square window of side `search_window`.
pub fn lateral_fwhm(image: &IntensityImage, target: (f64, f64), search_window: f64) -> Result<f64> {
    let grid = image.grid();
    let (px, pz) = find_peak(image, target, search_window)?;
    let (c0, c1) = window_columns(grid, target.0, search_window / 2.0);
    let peak = image.at(px, pz);
    let half = peak / 2.0;
    let crossing = |ix_in: usize, ix_out: usize| {
        let (a, b) = (image.at(ix_in, pz), image.at(ix_out, pz));
        let t = (a - half) / (a - b);
        grid.x(ix_in) + t * (grid.x(ix_out) - grid.x(ix_in))
    };
    let mut l = px;
    while l > c0 && image.at(l - 1, pz) >= half {
        l -= 1;
    }
    if l == c0 {
        return Err(Error::UnresolvedWidth);
    }
    let mut r = px;
    while r < c1 && image.at(r + 1, pz) >= half {
        r += 1;
    }
    if r == c1 {
        return Err(Error::UnresolvedWidth);
    }
    Ok(crossing(r, r + 1) - crossing(l, l - 1))
}

/// Intensity dip (dB) between two point targets at the same depth: the
/// weaker peak over the smallest value between the peaks, along the row of
/// the first peak.
pub fn two_point_dip_db(
    image: &IntensityImage,
    left: (f64, f64),
    right: (f64, f64),
    search_window: f64,
) -> Result<f64> {
    let sep = (right.0 - left.0).abs();
    let window = search_window.min(sep);
    let (ax, az) = find_peak(image, left, window)?;
    let (bx, _) = find_peak(image, right, window)?;
    let (lo, hi) = (ax.min(bx), ax.max(bx));
    if hi - lo < 2 {
        return Ok(0.0);
    }
    let pa = image.at(ax, az);
    let pb = image.at(bx, az);
    let valley = (lo + 1..hi)
        .map(|ix| image.at(ix, az))
        .fold(f64::INFINITY, f64::min);
    let top = pa.min(pb);
    if valley <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((10.0 * (top / valley).log10()).max(0.0))
}

fn normalized(image: &IntensityImage) -> Result<Vec<f64>> {
    let max = image.max();
    if !(max > 0.0) {
        return Err(Error::DegenerateImage);
    }
    Ok(image.pixels().iter().map(|&p| p / max).collect())
}

fn mean_pow(values: &[f64], gamma: f64) -> f64 {
    values.iter().map(|v| v.powf(gamma)).sum::<f64>() / values.len() as f64
}

/// Chooses `γ ∈ [0.1, 1]` so that the mean of `(I/I_max)^γ` matches the mean
/// of `(R/R_max)^0.5`, and returns `γ` with the display image `(I/I_max)^γ`.
pub fn gamma_match(
    image: &IntensityImage,
    reference: &IntensityImage,
) -> Result<(f64, IntensityImage)> {
    let img = normalized(image)?;
    let target = mean_pow(&normalized(reference)?, GAMMA_REF);
    let cost = |g: f64| (mean_pow(&img, g) - target).abs();
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.1, 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (cost(c), cost(d));
    while b - a > 1e-6 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = cost(d);
        }
    }
    let gamma = 0.5 * (a + b);
    let display = IntensityImage::new(
        image.grid().clone(),
        img.iter().map(|v| v.powf(gamma)).collect(),
    )?;
    Ok((gamma, display))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> ImageGrid {
        ImageGrid::new(-1e-3, 1e-3, 1e-4, 1e-4, n, n).unwrap()
    }

    fn random_image(n: usize, seed: u64) -> IntensityImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        IntensityImage::new(grid(n), (0..n * n).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    fn left() -> Roi {
        Roi::Rect {
            x0: -1e-3,
            z0: 1e-3,
            x1: 0.45e-3,
            z1: 5.9e-3,
        }
    }

    fn right() -> Roi {
        Roi::Rect {
            x0: 0.55e-3,
            z0: 1e-3,
            x1: 3.9e-3,
            z1: 5.9e-3,
        }
    }

    #[test]
    fn same_population_gives_low_gcnr() {
        let img = random_image(50, 1);
        let v = gcnr(&img, &left(), &right(), GCNR_BINS).unwrap();
        assert!(v < 0.35, "{v}");
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        assert!(gcnr_values(&a, &b, GCNR_BINS).unwrap() < 0.15);
        assert_eq!(gcnr_values(&a, &a, GCNR_BINS).unwrap(), 0.0);
    }

    #[test]
    fn separated_populations_give_one() {
        let inside: Vec<f64> = (0..200).map(|k| k as f64 * 1e-3).collect();
        let outside: Vec<f64> = (0..300).map(|k| 1000.0 + k as f64).collect();
        assert_eq!(gcnr_values(&inside, &outside, GCNR_BINS).unwrap(), 1.0);
    }

    #[test]
    fn roi_validation() {
        let img = random_image(50, 2);
        let tiny = Roi::Circle {
            center: (0.0, 2e-3),
            radius: 0.2e-3,
        };
        assert!(matches!(
            gcnr(&img, &tiny, &right(), GCNR_BINS),
            Err(Error::RoiTooSmall { .. })
        ));
        assert!(matches!(
            gcnr(&img, &left(), &left(), GCNR_BINS),
            Err(Error::RoiOverlap(_))
        ));
    }

    #[test]
    fn gaussian_fwhm() {
        let g = ImageGrid::new(-2e-3, 5e-3, 0.02e-3, 0.05e-3, 201, 5).unwrap();
        let sigma = 0.15e-3;
        let px: Vec<f64> = (0..5)
            .flat_map(|iz| {
                let g = g.clone();
                (0..201).map(move |ix| {
                    let r = if iz == 2 { 1.0 } else { 0.5 };
                    r * (-(g.x(ix)).powi(2) / (2.0 * sigma * sigma)).exp()
                })
            })
            .collect();
        let img = IntensityImage::new(g.clone(), px).unwrap();
        let w = lateral_fwhm(&img, (0.0, 5.1e-3), 3e-3).unwrap();
        assert!((w - 2.3548 * sigma).abs() < g.dx(), "{w}");
        let scaled = img.scaled(37.0).unwrap();
        assert_eq!(lateral_fwhm(&scaled, (0.0, 5.1e-3), 3e-3).unwrap(), w);
        assert_eq!(
            lateral_fwhm(&img, (0.0, 5.1e-3), 0.3e-3),
            Err(Error::UnresolvedWidth)
        );
    }

    #[test]
    fn gamma_fixed_point_and_scale_invariance() {
        let img = random_image(20, 3);
        let (g, display) = gamma_match(&img, &img).unwrap();
        assert!((g - GAMMA_REF).abs() < 1e-3);
        assert!(display.max() <= 1.0);
        let (g2, _) = gamma_match(&img, &img.scaled(123.0).unwrap()).unwrap();
        assert!((g - g2).abs() < 1e-9);
        let zero = IntensityImage::new(grid(20), vec![0.0; 400]).unwrap();
        assert_eq!(
            gamma_match(&zero, &img).unwrap_err(),
            Error::DegenerateImage
        );
    }

    #[test]
    fn dip_between_two_gaussians() {
        let g = ImageGrid::new(-1e-3, 5e-3, 0.01e-3, 0.05e-3, 201, 3).unwrap();
        let sigma = 0.1e-3;
        let prof = |x: f64| {
            (-(x + 0.3e-3).powi(2) / (2.0 * sigma * sigma)).exp()
                + (-(x - 0.3e-3).powi(2) / (2.0 * sigma * sigma)).exp()
        };
        let px: Vec<f64> = (0..3)
            .flat_map(|_| (0..201).map(|ix| prof(g.x(ix))).collect::<Vec<_>>())
            .collect();
        let img = IntensityImage::new(g, px).unwrap();
        let dip = two_point_dip_db(&img, (-0.3e-3, 5.05e-3), (0.3e-3, 5.05e-3), 1e-3).unwrap();
        let expect = 10.0 * (prof(-0.3e-3) / prof(0.0)).log10();
        assert!((dip - expect).abs() < 0.05, "{dip} vs {expect}");
    }

    proptest! {
        #[test]
        fn gcnr_bounded_symmetric_and_scale_invariant(seed in 0u64..1000, e in -4i32..4) {
            let img = random_image(50, seed);
            let a = gcnr(&img, &left(), &right(), GCNR_BINS).unwrap();
            let b = gcnr(&img, &right(), &left(), GCNR_BINS).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!((a - b).abs() < 1e-12);
            let scaled = img.scaled(2f64.powi(e)).unwrap();
            let c = gcnr(&scaled, &left(), &right(), GCNR_BINS).unwrap();
            prop_assert!((a - c).abs() < 1e-12);
        }
    }
}
