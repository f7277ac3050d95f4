//! Per-stage wall-clock timing of the DAS and KK processing chains.

use std::time::Instant;

use kkbeam_core::beamform::{build_das_luts, build_kk_luts, das, kk, BeamformConfig};
use kkbeam_core::compress::shear_sum_spectra;
use kkbeam_core::spectral::rf_spectra;
use kkbeam_core::{AnalyticRf, CompressedRf, ReceiveAngleSet, RfVolume};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMethod {
    Das,
    Kk,
}

impl BenchMethod {
    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::Das => "das",
            BenchMethod::Kk => "kk",
        }
    }
}

/// Median stage times in milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTimings {
    pub method: BenchMethod,
    pub transmits: usize,
    pub channels: usize,
    pub reorg_fft_ms: f64,
    pub hilbert_compress_ms: f64,
    pub ifft_ms: f64,
    pub beamform_ms: f64,
    pub total_ms: f64,
    pub compression_ratio: f64,
}

impl StageTimings {
    pub fn stage_sum_ms(&self) -> f64 {
        self.reorg_fft_ms + self.hilbert_compress_ms + self.ifft_ms + self.beamform_ms
    }

    pub const CSV_HEADER: &'static str =
        "method,N,M,reorg_fft_ms,hilbert_compress_ms,ifft_ms,beamform_ms,total_ms,compression_ratio";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            self.method.name(),
            self.transmits,
            self.channels,
            self.reorg_fft_ms,
            self.hilbert_compress_ms,
            self.ifft_ms,
            self.beamform_ms,
            self.total_ms,
            self.compression_ratio
        )
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One timed pass; returns stage times and total.
fn run_once(
    method: BenchMethod,
    rf: &RfVolume<f32>,
    receive: Option<&ReceiveAngleSet>,
    config: &BeamformConfig,
    luts: &kkbeam_core::beamform::DelayLutSet,
) -> Result<[f64; 5]> {
    let total = Instant::now();
    let t = Instant::now();
    let mut spectra = rf_spectra(rf);
    let reorg = ms(t);
    let (hilbert, ifft, beam);
    match method {
        BenchMethod::Das => {
            let t = Instant::now();
            spectra.apply_analytic_mask();
            hilbert = ms(t);
            let t = Instant::now();
            let analytic: AnalyticRf<f32> = spectra.into_analytic(rf.array(), rf.params())?;
            ifft = ms(t);
            let t = Instant::now();
            std::hint::black_box(das(&analytic, luts, config)?);
            beam = ms(t);
        }
        BenchMethod::Kk => {
            let receive = receive.expect("kk needs receive angles");
            let c = rf.params().sound_speed();
            let t = Instant::now();
            spectra.apply_analytic_mask();
            let sheared = shear_sum_spectra(&spectra, rf.array(), receive, c)?;
            hilbert = ms(t);
            let t = Instant::now();
            let comp: CompressedRf<f32> =
                sheared.into_compressed(receive, rf.array(), rf.params())?;
            ifft = ms(t);
            let t = Instant::now();
            std::hint::black_box(kk(&comp, luts, config)?);
            beam = ms(t);
        }
    }
    Ok([reorg, hilbert, ifft, beam, ms(total)])
}

/// Times every stage `reps` times after one discarded warm-up pass and
/// reports per-stage medians. Lookup tables are built outside the timing.
pub fn run_bench(
    method: BenchMethod,
    rf: &RfVolume<f32>,
    receive: Option<&ReceiveAngleSet>,
    config: &BeamformConfig,
    reps: usize,
) -> Result<StageTimings> {
    if reps < 3 {
        return Err(CliError::Config(
            "bench needs at least 3 repetitions".into(),
        ));
    }
    let luts = match method {
        BenchMethod::Das => build_das_luts(&config.grid, rf.array(), rf.params()),
        BenchMethod::Kk => build_kk_luts(
            &config.grid,
            rf.params().transmit_angles(),
            receive.ok_or_else(|| CliError::Config("kk needs receive angles".into()))?,
            rf.params().sound_speed(),
        ),
    };
    run_once(method, rf, receive, config, &luts)?;
    let mut samples: [Vec<f64>; 5] = Default::default();
    for _ in 0..reps {
        let r = run_once(method, rf, receive, config, &luts)?;
        for (s, v) in samples.iter_mut().zip(r) {
            s.push(v);
        }
    }
    let [reorg, hilbert, ifft, beam, total] = samples.map(median);
    let l = rf.array().num_elements();
    let channels = match method {
        BenchMethod::Das => l,
        BenchMethod::Kk => receive.map_or(l, |r| r.len()),
    };
    Ok(StageTimings {
        method,
        transmits: rf.params().num_transmits(),
        channels,
        reorg_fft_ms: reorg,
        hilbert_compress_ms: hilbert,
        ifft_ms: ifft,
        beamform_ms: beam,
        total_ms: total,
        compression_ratio: l as f64 / channels as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
