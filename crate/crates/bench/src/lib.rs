//! Shared fixtures for the stage benchmarks: a 192-element, 15-transmit
//! acquisition of a few point targets imaged on a 180 x 180 grid.

use kkbeam_core::beamform::{last_read_index, BeamformConfig};
use kkbeam_core::compress::guard_band;
use kkbeam_core::sampling::{confocal_angles, transmit_angles};
use kkbeam_core::simulate::{
    make_pulse, required_samples, simulate_rf, wire_phantom, SimulationOptions,
};
use kkbeam_core::{AcquisitionParams, ImageGrid, ReceiveAngleSet, RfVolume, TransducerArray};

pub const SOUND_SPEED: f64 = 1540.0;
pub const TRANSMITS: usize = 15;
pub const RECEIVE_COUNTS: [usize; 3] = [7, 21, 57];

pub struct Scene {
    pub rf: RfVolume<f32>,
    pub config: BeamformConfig,
    pub receive: Vec<ReceiveAngleSet>,
}

pub fn theta_max() -> f64 {
    24f64.to_radians()
}

pub fn scene() -> Scene {
    let array = TransducerArray::new(0.23e-3, 192, 5.2e6, 20.83e6, 0.6).expect("valid array");
    let pulse = make_pulse(5.2e6, 0.6, 20.83e6).expect("valid pulse");
    let grid = ImageGrid::centered(0.0, 6.8e-3, 0.057e-3, 0.036e-3, 180, 180).expect("valid grid");
    let params = AcquisitionParams::new(
        SOUND_SPEED,
        transmit_angles(TRANSMITS, theta_max()).expect("valid angles"),
        2,
        0.0,
    )
    .expect("valid acquisition");
    let receive: Vec<ReceiveAngleSet> = RECEIVE_COUNTS
        .iter()
        .map(|&m| confocal_angles(TRANSMITS, m, theta_max()).expect("valid receive set"))
        .collect();
    let phantom = wire_phantom(&[0.5e-3, 1.0e-3], 10e-3)
        .expect("valid phantom")
        .translated(-1.0e-3, 0.0)
        .expect("finite offset");
    let guard = receive
        .iter()
        .map(|r| guard_band(&array, r, SOUND_SPEED))
        .max()
        .unwrap_or(0);
    let last = last_read_index(&grid, &array, &params, pulse.peak_delay());
    let samples = required_samples(&array, &params, &phantom, &pulse).max(last + guard);
    let params = params.with_num_samples(samples).expect("positive length");
    let rf = simulate_rf(
        &array,
        &params,
        &phantom,
        &pulse,
        &SimulationOptions::default(),
    )
    .expect("simulation succeeds");
    Scene {
        rf,
        config: BeamformConfig::new(grid).with_pulse_delay(pulse.peak_delay()),
        receive,
    }
}
