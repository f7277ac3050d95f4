use super::lut::{DelayLutSet, ReceiveTables};
use super::{assemble_columns, check_transmits, read_sample, BeamformConfig};
use crate::compress::edge_reference_delay;
use crate::error::{Error, Result};
use crate::image::ComplexImage;
use crate::volume::{CompressedRf, Real};

/// Beamforming of virtual plane-wave data, `τ_out = s_o · r / c`.
pub fn kk<R: Real>(
    rf: &CompressedRf<R>,
    luts: &DelayLutSet,
    config: &BeamformConfig,
) -> Result<ComplexImage> {
    let params = rf.params();
    check_transmits(luts, params, &config.grid)?;
    let (rx_x, rx_z, receive) = match &luts.rx {
        ReceiveTables::PlaneWave {
            rx_x,
            rx_z,
            receive,
        } => (rx_x, rx_z, receive),
        ReceiveTables::Hypot(_) => {
            return Err(Error::GeometryMismatch(
                "KK needs plane-wave receive tables".into(),
            ))
        }
    };
    if receive.as_slice() != rf.receive_angles().angles() {
        return Err(Error::GeometryMismatch(
            "delay tables were built for different receive angles".into(),
        ));
    }
    let m_len = receive.len();
    let weights = config.weights(m_len)?;
    let c = params.sound_speed();
    let refs: Vec<f64> = receive
        .iter()
        .map(|&th| edge_reference_delay(rf.array(), th, c))
        .collect();
    let grid = &config.grid;
    let nz = grid.nz();
    let fs = rf.array().sampling_frequency();
    let t0 = params.t0();
    let mode = config.interpolation;

    Ok(assemble_columns(grid, |ix, acc| {
        for n in 0..params.num_transmits() {
            let base = luts.tx_x(ix, n) + config.pulse_delay - t0;
            let tz = luts.tx_z_row(n);
            for m in 0..m_len {
                let w = weights[m];
                if w == 0.0 {
                    continue;
                }
                let bm = base + rx_x[ix * m_len + m] - refs[m];
                let rz = &rx_z[m * nz..(m + 1) * nz];
                let trace = rf.trace(n, m);
                for iz in 0..nz {
                    let p = (bm + tz[iz] + rz[iz]) * fs;
                    acc[iz] += read_sample(trace, p, mode) * w;
                }
            }
        }
    }))
}
