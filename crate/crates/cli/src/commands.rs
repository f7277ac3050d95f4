//! Subcommand bodies. Each returns the paths it wrote.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use kkbeam_core::sampling::{support, support_histogram};
use kkbeam_core::IntensityImage;

use crate::bench::{run_bench, BenchMethod, StageTimings};
use crate::config::{Method, PipelineConfig};
use crate::container::{ReadContext, RfContainer};
use crate::error::{CliError, Result};
use crate::images::{display_image, pgm_bytes, raw_bytes, write_bytes};
use crate::pipeline::{self, BeamformResult};

fn out_path(cfg: &PipelineConfig, suffix: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.output.dir).map_err(|e| CliError::io(&cfg.output.dir, e))?;
    Ok(cfg
        .output
        .dir
        .join(format!("{}{suffix}", cfg.output.prefix)))
}

/// Writes the effective configuration next to the outputs; running with it
/// as `--config` reproduces them.
pub fn write_provenance(cfg: &PipelineConfig) -> Result<PathBuf> {
    let path = out_path(cfg, ".provenance.toml")?;
    write_bytes(&path, cfg.to_toml().as_bytes())?;
    Ok(path)
}

pub fn read_context(cfg: &PipelineConfig) -> ReadContext {
    ReadContext {
        elements: cfg.array.elements,
        bandwidth: cfg.array.bandwidth,
    }
}

pub fn simulate(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let sim = pipeline::simulate(cfg)?;
    let path = out_path(cfg, "_rf.kkrf")?;
    RfContainer::Real(sim.rf).write_file(&path)?;
    Ok(vec![path, write_provenance(cfg)?])
}

pub fn compress(cfg: &PipelineConfig, input: &Path) -> Result<Vec<PathBuf>> {
    let rf = RfContainer::read_file(input, read_context(cfg))?;
    let pulse = pipeline::pulse_from(cfg)?;
    let mut written = Vec::new();
    for (label, comp) in pipeline::compress_container(cfg, &rf, &pulse)? {
        let path = out_path(cfg, &format!("_{label}.kkrf"))?;
        RfContainer::Compressed(comp).write_file(&path)?;
        written.push(path);
    }
    written.push(write_provenance(cfg)?);
    Ok(written)
}

fn write_image(
    cfg: &PipelineConfig,
    label: &str,
    image: &IntensityImage,
    reference: &IntensityImage,
    written: &mut Vec<PathBuf>,
) -> Result<f64> {
    let (gamma, display) = display_image(image, reference)?;
    let pgm = out_path(cfg, &format!("_{label}.pgm"))?;
    write_bytes(&pgm, &pgm_bytes(&display))?;
    let raw = out_path(cfg, &format!("_{label}.raw"))?;
    write_bytes(&raw, &raw_bytes(image))?;
    written.push(pgm);
    written.push(raw);
    Ok(gamma)
}

fn write_result(cfg: &PipelineConfig, result: &BeamformResult) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let reference = &result.compound;
    let gamma = write_image(
        cfg,
        &result.label,
        &result.compound,
        reference,
        &mut written,
    )?;
    if result.sub_images.len() > 1 {
        for (label, img) in &result.sub_images {
            let img = kkbeam_core::beamform::intensity(img);
            write_image(cfg, label, &img, reference, &mut written)?;
        }
    }
    let mut csv = String::from("metric,value\n");
    for (name, value) in pipeline::measure(cfg, &result.compound)? {
        writeln!(csv, "{name},{value}").expect("string write");
    }
    writeln!(csv, "gamma,{gamma}").expect("string write");
    let path = out_path(cfg, "_metrics.csv")?;
    write_bytes(&path, csv.as_bytes())?;
    written.push(path);
    written.push(write_provenance(cfg)?);
    Ok(written)
}

pub fn beamform(cfg: &PipelineConfig, input: &Path) -> Result<Vec<PathBuf>> {
    let rf = RfContainer::read_file(input, read_context(cfg))?;
    let pulse = pipeline::pulse_from(cfg)?;
    let result = pipeline::beamform_container(cfg, &rf, &pulse)?;
    write_result(cfg, &result)
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let sim = pipeline::simulate(cfg)?;
    let result = pipeline::beamform_container(cfg, &RfContainer::Real(sim.rf), &sim.pulse)?;
    write_result(cfg, &result)
}

pub fn support_tables(cfg: &PipelineConfig, bins: usize) -> Result<Vec<PathBuf>> {
    let transmit = pipeline::transmit_from(cfg)?;
    let nu = cfg.array.center_frequency_mhz * 1e6;
    let c = cfg.acquisition.sound_speed;
    let mut samples = Vec::new();
    for (_, rx) in pipeline::receive_sets(cfg)? {
        samples.extend(support(&transmit, &rx, nu, c)?);
    }
    let mut csv = String::from("theta_i_deg,theta_o_deg,delta_theta_deg,kx_per_mm\n");
    for s in &samples {
        writeln!(
            csv,
            "{},{},{},{}",
            s.theta_i.to_degrees(),
            s.theta_o.to_degrees(),
            s.delta_theta.to_degrees(),
            s.kx * 1e-3
        )
        .expect("string write");
    }
    let support_path = out_path(cfg, "_support.csv")?;
    write_bytes(&support_path, csv.as_bytes())?;
    let hist = support_histogram(&samples, bins)?;
    let mut csv = String::from("lo_deg,hi_deg,count\n");
    for (k, count) in hist.counts.iter().enumerate() {
        writeln!(
            csv,
            "{},{},{count}",
            hist.edges[k].to_degrees(),
            hist.edges[k + 1].to_degrees()
        )
        .expect("string write");
    }
    let hist_path = out_path(cfg, "_histogram.csv")?;
    write_bytes(&hist_path, csv.as_bytes())?;
    Ok(vec![support_path, hist_path, write_provenance(cfg)?])
}

pub fn bench(cfg: &PipelineConfig, reps: usize) -> Result<(Vec<StageTimings>, Vec<PathBuf>)> {
    let sim = pipeline::simulate(cfg)?;
    let grid = pipeline::grid_from(cfg)?;
    let config = pipeline::beamform_config(cfg, &grid, &sim.pulse);
    let mut rows = vec![run_bench(BenchMethod::Das, &sim.rf, None, &config, reps)?];
    if cfg.beamform.method == Method::Kk {
        for (_, rx) in pipeline::receive_sets(cfg)? {
            rows.push(run_bench(
                BenchMethod::Kk,
                &sim.rf,
                Some(&rx),
                &config,
                reps,
            )?);
        }
    }
    let mut csv = format!("{}\n", StageTimings::CSV_HEADER);
    for r in &rows {
        writeln!(csv, "{}", r.csv_row()).expect("string write");
    }
    let path = out_path(cfg, "_bench.csv")?;
    write_bytes(&path, csv.as_bytes())?;
    Ok((rows, vec![path, write_provenance(cfg)?]))
}
