use super::lut::{DelayLutSet, ReceiveTables};
use super::{assemble_columns, check_transmits, read_sample, BeamformConfig};
use crate::error::{Error, Result};
use crate::geometry::{AcquisitionParams, TransducerArray};
use crate::image::ComplexImage;
use crate::volume::{AnalyticRf, Real};

fn check_array(rf_array: &TransducerArray, luts_elements: usize) -> Result<()> {
    if rf_array.num_elements() != luts_elements {
        return Err(Error::GeometryMismatch(format!(
            "delay tables cover {luts_elements} elements, data has {}",
            rf_array.num_elements()
        )));
    }
    Ok(())
}

/// Whether an element at lateral `offset` from a pixel at depth `z` is inside
/// the acceptance cone.
#[inline]
fn accepted(offset: f64, z: f64, max_angle: Option<f64>) -> bool {
    match max_angle {
        None => true,
        Some(a) => offset.abs() <= z * a.tan(),
    }
}

/// Delay-and-sum of analytic element data using precomputed tables.
pub fn das<R: Real>(
    rf: &AnalyticRf<R>,
    luts: &DelayLutSet,
    config: &BeamformConfig,
) -> Result<ComplexImage> {
    let params = rf.params();
    let array = rf.array();
    check_transmits(luts, params, &config.grid)?;
    let hyp = match &luts.rx {
        ReceiveTables::Hypot(h) => h,
        ReceiveTables::PlaneWave { .. } => {
            return Err(Error::GeometryMismatch(
                "DAS needs element receive tables".into(),
            ))
        }
    };
    check_array(array, hyp.element_nodes.len())?;
    let expected_nodes = (hyp.element_nodes[0].0) + config.grid.nx();
    if hyp.num_nodes < expected_nodes {
        return Err(Error::GeometryMismatch(
            "delay tables were built for a different aperture".into(),
        ));
    }
    let weights = config.weights(array.num_elements())?;
    let grid = &config.grid;
    let nz = grid.nz();
    let fs = array.sampling_frequency();
    let t0 = params.t0();
    let mode = config.interpolation;
    let positions = array.element_positions();

    Ok(assemble_columns(grid, |ix, acc| {
        let x = grid.x(ix);
        let mut rx_row = vec![0.0f64; nz];
        for n in 0..params.num_transmits() {
            let base = luts.tx_x(ix, n) + config.pulse_delay - t0;
            let tz = luts.tx_z_row(n);
            for (l, &(q, f)) in hyp.element_nodes.iter().enumerate() {
                let w = weights[l];
                if w == 0.0 {
                    continue;
                }
                let a = &hyp.table[(ix + q) * nz..(ix + q + 1) * nz];
                if f == 0.0 {
                    rx_row.copy_from_slice(a);
                } else {
                    let b = &hyp.table[(ix + q + 1) * nz..(ix + q + 2) * nz];
                    for iz in 0..nz {
                        rx_row[iz] = a[iz] + f * (b[iz] - a[iz]);
                    }
                }
                let trace = rf.trace(n, l);
                let offset = x - positions[l];
                for iz in 0..nz {
                    if config.max_acceptance_angle.is_some()
                        && !accepted(offset, grid.z(iz), config.max_acceptance_angle)
                    {
                        continue;
                    }
                    let p = (base + tz[iz] + rx_row[iz]) * fs;
                    acc[iz] += read_sample(trace, p, mode) * w;
                }
            }
        }
    }))
}

/// Delay-and-sum with delays evaluated per pixel, without tables.
pub fn direct_das<R: Real>(
    rf: &AnalyticRf<R>,
    array: &TransducerArray,
    params: &AcquisitionParams,
    config: &BeamformConfig,
) -> Result<ComplexImage> {
    if rf.array() != array || rf.params() != params {
        return Err(Error::GeometryMismatch(
            "data were acquired with a different geometry".into(),
        ));
    }
    let weights = config.weights(array.num_elements())?;
    let grid = &config.grid;
    let c = params.sound_speed();
    let fs = array.sampling_frequency();
    let mode = config.interpolation;
    let positions = array.element_positions();

    Ok(assemble_columns(grid, |ix, acc| {
        let x = grid.x(ix);
        for (n, &th) in params.transmit_angles().iter().enumerate() {
            let (s, cs) = th.sin_cos();
            for (l, &u) in positions.iter().enumerate() {
                if weights[l] == 0.0 {
                    continue;
                }
                let trace = rf.trace(n, l);
                for (iz, v) in acc.iter_mut().enumerate() {
                    let z = grid.z(iz);
                    if !accepted(x - u, z, config.max_acceptance_angle) {
                        continue;
                    }
                    let tau = (x * s + z * cs) / c + (x - u).hypot(z) / c;
                    let p = (tau + config.pulse_delay - params.t0()) * fs;
                    *v += read_sample(trace, p, mode) * weights[l];
                }
            }
        }
    }))
}
