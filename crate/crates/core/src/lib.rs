//! Compressive plane-wave ultrasound imaging.
//!
//! Receive data from a linear array insonified by tilted plane waves can be
//! beamformed per element ([`beamform::das`]) or first decomposed into a small
//! set of virtual receive plane waves ([`compress`]) and then beamformed over
//! transmit/receive angle pairs ([`beamform::kk`]). The choice of receive
//! angles ([`sampling`]) decides which object spatial frequencies are
//! recovered.
//!
//! ```no_run
//! use kkbeam_core::prelude::*;
//!
//! let array = TransducerArray::new(0.23e-3, 192, 5.2e6, 20.83e6, 0.6)?;
//! let theta_max = 24f64.to_radians();
//! let params = AcquisitionParams::new(1540.0, transmit_angles(15, theta_max)?, 2048, 0.0)?;
//! let pulse = make_pulse(5.2e6, 0.6, 20.83e6)?;
//! let phantom = wire_phantom(&[], 10e-3)?;
//! let rf: RfVolume = simulate_rf(&array, &params, &phantom, &pulse, &Default::default())?;
//!
//! let grid = ImageGrid::centered(0.0, 5e-3, 0.057e-3, 0.036e-3, 180, 180)?;
//! let config = BeamformConfig::new(grid.clone()).with_pulse_delay(pulse.peak_delay());
//! let receive = confocal_angles(15, 21, theta_max)?;
//! let last = last_read_index(&grid, &array, &params, pulse.peak_delay());
//! let compressed = compress_rf(&rf.resized(last + guard_band(&array, &receive, 1540.0))?, &receive, last)?;
//! let luts = build_kk_luts(&grid, params.transmit_angles(), &receive, 1540.0);
//! let image = intensity(&kk(&compressed, &luts, &config)?);
//! # Ok::<(), kkbeam_core::Error>(())
//! ```

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamform;
pub mod compress;
pub mod error;
pub mod geometry;
pub mod image;
pub mod metrics;
pub mod sampling;
pub mod simulate;
pub mod spectral;
pub mod volume;

pub use error::{Error, Result};
pub use geometry::{AcquisitionParams, ImageGrid, TransducerArray};
pub use image::{ComplexImage, IntensityImage};
pub use sampling::{AngleScheme, ReceiveAngleSet, SupportSample};
pub use volume::{AnalyticRf, CompressedRf, Real, RfVolume};

pub mod prelude {
    pub use crate::beamform::{
        build_das_luts, build_kk_luts, compound_coherent, compound_incoherent, das, direct_das,
        intensity, kk, last_read_index, BeamformConfig, DelayLutSet, Interpolation,
    };
    pub use crate::compress::{compress, compress_rf, guard_band};
    pub use crate::metrics::{gamma_match, gcnr, lateral_fwhm, Roi};
    pub use crate::sampling::{
        confocal_angles, support, support_histogram, transmit_angles, uniform_vernier_angles,
    };
    pub use crate::simulate::{make_pulse, simulate_rf, speckle_phantom, wire_phantom, Phantom};
    pub use crate::spectral::analytic_signal;
    pub use crate::{
        AcquisitionParams, AnalyticRf, ComplexImage, CompressedRf, Error, ImageGrid,
        IntensityImage, ReceiveAngleSet, Result, RfVolume, TransducerArray,
    };
}
