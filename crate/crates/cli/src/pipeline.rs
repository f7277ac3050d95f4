//! Config-driven stages shared by the subcommands, the benchmark harness and
//! the acceptance tests.

use kkbeam_core::beamform::{
    build_das_luts, build_kk_luts, compound_coherent, compound_incoherent, das, intensity, kk,
    last_read_index, BeamformConfig, Interpolation,
};
use kkbeam_core::compress::{compress, compress_rf, guard_band};
use kkbeam_core::metrics::{self, Annulus, Roi};
use kkbeam_core::sampling::{confocal_angles, transmit_angles, uniform_vernier_angles};
use kkbeam_core::simulate::{
    make_pulse, required_samples, simulate_rf, speckle_phantom, wire_phantom, Phantom, Pulse,
    Scatterer, SimulationOptions, SpeckleRegion,
};
use kkbeam_core::spectral::analytic_signal;
use kkbeam_core::{
    AcquisitionParams, AnalyticRf, ComplexImage, CompressedRf, ImageGrid, IntensityImage,
    ReceiveAngleSet, RfVolume, TransducerArray,
};

use crate::config::{Compounding, InterpolationName, Method, PhantomKind, PipelineConfig, Scheme};
use crate::container::RfContainer;
use crate::error::{CliError, Result};

const MM: f64 = 1e-3;

/// Runs `f` on a pool of `threads` workers, or on the global pool for 0.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn array_from(cfg: &PipelineConfig) -> Result<TransducerArray> {
    let a = &cfg.array;
    Ok(TransducerArray::new(
        a.pitch_mm * MM,
        a.elements,
        a.center_frequency_mhz * 1e6,
        a.sampling_frequency_mhz * 1e6,
        a.bandwidth,
    )?)
}

pub fn theta_max(cfg: &PipelineConfig) -> f64 {
    (cfg.acquisition.angular_range_deg / 2.0).to_radians()
}

pub fn transmit_from(cfg: &PipelineConfig) -> Result<Vec<f64>> {
    match cfg.acquisition.transmits {
        1 => Ok(vec![0.0]),
        n => Ok(transmit_angles(n, theta_max(cfg))?),
    }
}

pub fn grid_from(cfg: &PipelineConfig) -> Result<ImageGrid> {
    let g = &cfg.grid;
    Ok(ImageGrid::centered(
        g.x_center_mm * MM,
        g.z0_mm * MM,
        g.dx_mm * MM,
        g.dz_mm * MM,
        g.nx,
        g.nz,
    )?)
}

pub fn pulse_from(cfg: &PipelineConfig) -> Result<Pulse> {
    let a = &cfg.array;
    Ok(make_pulse(
        a.center_frequency_mhz * 1e6,
        a.bandwidth,
        a.sampling_frequency_mhz * 1e6,
    )?)
}

pub fn phantom_from(cfg: &PipelineConfig) -> Result<Phantom> {
    let p = &cfg.phantom;
    Ok(match p.kind {
        PhantomKind::None => Phantom::empty("none"),
        PhantomKind::Points => Phantom::new(
            p.points_mm
                .iter()
                .map(|&[x, z]| Scatterer {
                    x: x * MM,
                    z: z * MM,
                    reflectivity: 1.0,
                })
                .collect(),
            "points",
        )?,
        PhantomKind::Wires => wire_phantom(
            &p.spacings_mm.iter().map(|s| s * MM).collect::<Vec<_>>(),
            p.depth_mm * MM,
        )?
        .translated(p.x_offset_mm * MM, 0.0)?,
        PhantomKind::Speckle => speckle_phantom(&SpeckleRegion {
            x_min: p.region_mm[0] * MM,
            x_max: p.region_mm[1] * MM,
            z_min: p.region_mm[2] * MM,
            z_max: p.region_mm[3] * MM,
            density_per_mm2: p.density_per_mm2,
            inclusion_center: (p.inclusion_mm[0] * MM, p.inclusion_mm[1] * MM),
            inclusion_radius: p.inclusion_mm[2] * MM,
            seed: cfg.seed,
        })?,
    })
}

/// Receive-angle sets, one per sub-image, labelled for file names.
pub fn receive_sets(cfg: &PipelineConfig) -> Result<Vec<(String, ReceiveAngleSet)>> {
    let b = &cfg.beamform;
    let n = cfg.acquisition.transmits;
    let tmax = theta_max(cfg);
    match b.scheme {
        Scheme::Confocal => Ok(vec![(
            format!("confocal_m{}", b.receive),
            confocal_angles(n, b.receive, tmax)?,
        )]),
        Scheme::Vernier => b
            .shifts
            .iter()
            .map(|&j| {
                Ok((
                    format!("j{j}_m{}", b.receive),
                    uniform_vernier_angles(n, b.receive, tmax, j)?,
                ))
            })
            .collect(),
    }
}

pub fn beamform_config(cfg: &PipelineConfig, grid: &ImageGrid, pulse: &Pulse) -> BeamformConfig {
    let mut bc = BeamformConfig::new(grid.clone())
        .with_pulse_delay(pulse.peak_delay())
        .with_interpolation(match cfg.beamform.interpolation {
            InterpolationName::Linear => Interpolation::Linear,
            InterpolationName::Nearest => Interpolation::Nearest,
        });
    if cfg.beamform.method == Method::Das {
        bc.max_acceptance_angle = cfg.beamform.max_acceptance_deg.map(f64::to_radians);
    }
    bc
}

/// Samples needed to hold every echo and to compress for any configured
/// receive set without wrap-around into the imaged window.
pub fn window_samples(
    cfg: &PipelineConfig,
    array: &TransducerArray,
    params: &AcquisitionParams,
    phantom: &Phantom,
    pulse: &Pulse,
) -> Result<usize> {
    let grid = grid_from(cfg)?;
    let last = last_read_index(&grid, array, params, pulse.peak_delay());
    let guard = if cfg.acquisition.transmits >= 2 {
        receive_sets(cfg)?
            .iter()
            .map(|(_, r)| guard_band(array, r, params.sound_speed()))
            .max()
            .unwrap_or(0)
    } else {
        0
    };
    Ok(required_samples(array, params, phantom, pulse).max(last + guard))
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub rf: RfVolume<f32>,
    pub pulse: Pulse,
    pub phantom: Phantom,
}

pub fn simulate(cfg: &PipelineConfig) -> Result<Simulation> {
    let array = array_from(cfg)?;
    let pulse = pulse_from(cfg)?;
    let phantom = phantom_from(cfg)?;
    let params = AcquisitionParams::new(
        cfg.acquisition.sound_speed,
        transmit_from(cfg)?,
        2,
        cfg.acquisition.t0_us * 1e-6,
    )?;
    let samples = match cfg.acquisition.samples {
        0 => window_samples(cfg, &array, &params, &phantom, &pulse)?,
        t => t,
    };
    let params = params.with_num_samples(samples)?;
    let opts = SimulationOptions {
        noise_rms: (cfg.phantom.noise_rms > 0.0).then_some(cfg.phantom.noise_rms),
        noise_seed: cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
        spherical_spreading: cfg.phantom.spherical_spreading,
    };
    let rf = simulate_rf(&array, &params, &phantom, &pulse, &opts)?;
    Ok(Simulation { rf, pulse, phantom })
}

fn pad_analytic(rf: &AnalyticRf<f32>, samples: usize) -> Result<AnalyticRf<f32>> {
    let t = rf.params().num_samples();
    if samples <= t {
        return Ok(rf.clone());
    }
    let mut data = Vec::with_capacity(rf.data().len() / t * samples);
    for chunk in rf.data().chunks_exact(t) {
        data.extend_from_slice(chunk);
        data.resize(data.len() + samples - t, Default::default());
    }
    Ok(AnalyticRf::new(
        data,
        rf.array().clone(),
        rf.params().with_num_samples(samples)?,
    )?)
}

/// Compressed data for every configured receive set.
pub fn compress_container(
    cfg: &PipelineConfig,
    input: &RfContainer,
    pulse: &Pulse,
) -> Result<Vec<(String, CompressedRf<f32>)>> {
    let grid = grid_from(cfg)?;
    let sets = receive_sets(cfg)?;
    let mut out = Vec::with_capacity(sets.len());
    for (label, rx) in sets {
        let comp = match input {
            RfContainer::Real(rf) => {
                let last = last_read_index(&grid, rf.array(), rf.params(), pulse.peak_delay());
                let need = last + guard_band(rf.array(), &rx, rf.params().sound_speed());
                let rf = if need > rf.params().num_samples() {
                    rf.resized(need)?
                } else {
                    rf.clone()
                };
                compress_rf(&rf, &rx, last)?
            }
            RfContainer::Analytic(rf) => {
                let last = last_read_index(&grid, rf.array(), rf.params(), pulse.peak_delay());
                let need = last + guard_band(rf.array(), &rx, rf.params().sound_speed());
                compress(&pad_analytic(rf, need)?, &rx, last)?
            }
            RfContainer::Compressed(_) => {
                return Err(CliError::Data("input is already compressed".into()))
            }
        };
        out.push((label, comp));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct BeamformResult {
    pub label: String,
    pub sub_images: Vec<(String, ComplexImage)>,
    pub compound: IntensityImage,
}

fn compound(cfg: &PipelineConfig, subs: &[(String, ComplexImage)]) -> Result<IntensityImage> {
    let images: Vec<ComplexImage> = subs.iter().map(|(_, i)| i.clone()).collect();
    Ok(match cfg.beamform.compounding {
        Compounding::Single => intensity(&images[0]),
        Compounding::Coherent => compound_coherent(&images)?,
        Compounding::Incoherent => compound_incoherent(&images)?,
    })
}

/// Beamforms `input` with the configured method.
pub fn beamform_container(
    cfg: &PipelineConfig,
    input: &RfContainer,
    pulse: &Pulse,
) -> Result<BeamformResult> {
    let grid = grid_from(cfg)?;
    let bc = beamform_config(cfg, &grid, pulse);
    match (cfg.beamform.method, input) {
        (Method::Das, RfContainer::Compressed(_)) => Err(CliError::Data(
            "DAS needs element data, got compressed data".into(),
        )),
        (Method::Das, RfContainer::Real(rf)) => das_image(&analytic_signal(rf), &bc),
        (Method::Das, RfContainer::Analytic(rf)) => das_image(rf, &bc),
        (Method::Kk, RfContainer::Compressed(comp)) => {
            if cfg.beamform.compounding != Compounding::Single {
                return Err(CliError::Data(
                    "compounding needs element data or one file per sub-image".into(),
                ));
            }
            let sub = ("kk".to_string(), kk_image(comp, &bc)?);
            Ok(BeamformResult {
                label: "kk".into(),
                compound: intensity(&sub.1),
                sub_images: vec![sub],
            })
        }
        (Method::Kk, _) => {
            let comps = compress_container(cfg, input, pulse)?;
            let subs = comps
                .iter()
                .map(|(label, c)| Ok((format!("kk_{label}"), kk_image(c, &bc)?)))
                .collect::<Result<Vec<_>>>()?;
            let label = match cfg.beamform.compounding {
                Compounding::Single => subs[0].0.clone(),
                Compounding::Coherent => "kk_coherent".into(),
                Compounding::Incoherent => "kk_incoherent".into(),
            };
            Ok(BeamformResult {
                label,
                compound: compound(cfg, &subs)?,
                sub_images: subs,
            })
        }
    }
}

fn das_image(rf: &AnalyticRf<f32>, bc: &BeamformConfig) -> Result<BeamformResult> {
    let luts = build_das_luts(&bc.grid, rf.array(), rf.params());
    let img = das(rf, &luts, bc)?;
    Ok(BeamformResult {
        label: "das".into(),
        compound: intensity(&img),
        sub_images: vec![("das".into(), img)],
    })
}

pub fn kk_image(comp: &CompressedRf<f32>, bc: &BeamformConfig) -> Result<ComplexImage> {
    let luts = build_kk_luts(
        &bc.grid,
        comp.params().transmit_angles(),
        comp.receive_angles(),
        comp.params().sound_speed(),
    );
    Ok(kk(comp, &luts, bc)?)
}

/// Named scalar image measurements.
pub fn measure(cfg: &PipelineConfig, image: &IntensityImage) -> Result<Vec<(String, f64)>> {
    let grid = image.grid();
    let mut out = Vec::new();
    let (ix, iz) = image.argmax();
    out.push(("peak_ix".into(), ix as f64));
    out.push(("peak_iz".into(), iz as f64));
    out.push(("peak_x_mm".into(), grid.x(ix) / MM));
    out.push(("peak_z_mm".into(), grid.z(iz) / MM));
    let m = &cfg.metrics;
    if let (Some([x, z, r]), Some([x0, x1, z0, z1])) = (m.inclusion_mm, m.background_mm) {
        let inside = Roi::Circle {
            center: (x * MM, z * MM),
            radius: r * MM,
        };
        let background = Annulus {
            outer: Roi::Rect {
                x0: x0 * MM,
                z0: z0 * MM,
                x1: x1 * MM,
                z1: z1 * MM,
            },
            hole: Roi::Circle {
                center: (x * MM, z * MM),
                radius: m.background_exclusion_mm.max(r) * MM,
            },
        };
        let g = metrics::gcnr_with_background(image, &inside, &background, m.bins)?;
        out.push(("gcnr".into(), g));
    }
    for (k, &[x, z]) in m.fwhm_targets_mm.iter().enumerate() {
        let w = metrics::lateral_fwhm(image, (x * MM, z * MM), m.fwhm_window_mm * MM)?;
        out.push((format!("fwhm_mm_{k}"), w / MM));
    }
    Ok(out)
}
