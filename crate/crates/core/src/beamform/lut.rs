//! Separable delay tables.
//!
//! Transmit delays split into a lateral table `x sin θ_i / c` and an axial
//! table `z cos θ_i / c`. DAS adds one receive table of `hypot(x - u, z) / c`
//! sampled on a lateral-offset grid; KK adds the plane-wave receive pair
//! `x sin θ_o / c`, `z cos θ_o / c`.
//!
//! Axial tables are stored angle-major (`[angle][iz]`) and the hypot table
//! node-major (`[node][iz]`) so the beamformer's innermost loop over depth
//! reads contiguous memory.

use crate::geometry::{AcquisitionParams, ImageGrid, TransducerArray};
use crate::sampling::ReceiveAngleSet;

/// Element offsets closer than this (in grid steps) to a node snap onto it.
const NODE_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct HypotTable {
    /// `[node][iz]`; node `m` sits at lateral offset `x0 - u_max + m dx`.
    pub(crate) table: Vec<f64>,
    pub(crate) num_nodes: usize,
    /// Per element: integer node shift and interpolation fraction.
    pub(crate) element_nodes: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ReceiveTables {
    Hypot(HypotTable),
    PlaneWave {
        /// `[ix][m]`
        rx_x: Vec<f64>,
        /// `[m][iz]`
        rx_z: Vec<f64>,
        receive: Vec<f64>,
    },
}

/// Delay lookup tables for one grid and angle set, in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLutSet {
    grid: ImageGrid,
    transmit: Vec<f64>,
    sound_speed: f64,
    /// `[ix][n]`
    tx_x: Vec<f64>,
    /// `[n][iz]`
    tx_z: Vec<f64>,
    pub(crate) rx: ReceiveTables,
}

fn lateral_table(grid: &ImageGrid, angles: &[f64], c: f64) -> Vec<f64> {
    let sines: Vec<f64> = angles.iter().map(|a| a.sin()).collect();
    (0..grid.nx())
        .flat_map(|ix| {
            let x = grid.x(ix);
            sines.iter().map(move |s| x * s / c)
        })
        .collect()
}

fn axial_table(grid: &ImageGrid, angles: &[f64], c: f64) -> Vec<f64> {
    angles
        .iter()
        .flat_map(|a| {
            let cs = a.cos();
            (0..grid.nz()).map(move |iz| grid.z(iz) * cs / c)
        })
        .collect()
}

/// Tables for conventional DAS.
pub fn build_das_luts(
    grid: &ImageGrid,
    array: &TransducerArray,
    params: &AcquisitionParams,
) -> DelayLutSet {
    let c = params.sound_speed();
    let dx = grid.dx();
    let u_max = array.element_position(array.num_elements() - 1);
    let element_nodes: Vec<(usize, f64)> = array
        .element_positions()
        .into_iter()
        .map(|u| {
            let e = (u_max - u) / dx;
            let r = e.round();
            if (e - r).abs() < NODE_SNAP {
                (r as usize, 0.0)
            } else {
                (e.floor() as usize, e - e.floor())
            }
        })
        .collect();
    let l_eff = (array.aperture() / dx - NODE_SNAP).ceil().max(0.0) as usize + 1;
    let num_nodes = grid.nx() + l_eff;
    let x0 = grid.x0() - u_max;
    let mut table = Vec::with_capacity(num_nodes * grid.nz());
    for m in 0..num_nodes {
        let off = x0 + m as f64 * dx;
        table.extend((0..grid.nz()).map(|iz| off.hypot(grid.z(iz)) / c));
    }
    DelayLutSet {
        grid: grid.clone(),
        transmit: params.transmit_angles().to_vec(),
        sound_speed: c,
        tx_x: lateral_table(grid, params.transmit_angles(), c),
        tx_z: axial_table(grid, params.transmit_angles(), c),
        rx: ReceiveTables::Hypot(HypotTable {
            table,
            num_nodes,
            element_nodes,
        }),
    }
}

/// Tables for KK beamforming.
pub fn build_kk_luts(
    grid: &ImageGrid,
    transmit: &[f64],
    receive: &ReceiveAngleSet,
    sound_speed: f64,
) -> DelayLutSet {
    DelayLutSet {
        grid: grid.clone(),
        transmit: transmit.to_vec(),
        sound_speed,
        tx_x: lateral_table(grid, transmit, sound_speed),
        tx_z: axial_table(grid, transmit, sound_speed),
        rx: ReceiveTables::PlaneWave {
            rx_x: lateral_table(grid, receive.angles(), sound_speed),
            rx_z: axial_table(grid, receive.angles(), sound_speed),
            receive: receive.angles().to_vec(),
        },
    }
}

impl DelayLutSet {
    pub fn grid(&self) -> &ImageGrid {
        &self.grid
    }

    pub fn transmit_angles(&self) -> &[f64] {
        &self.transmit
    }

    pub fn sound_speed(&self) -> f64 {
        self.sound_speed
    }

    pub fn num_transmits(&self) -> usize {
        self.transmit.len()
    }

    /// Receive angles for KK tables, `None` for DAS tables.
    pub fn receive_angles(&self) -> Option<&[f64]> {
        match &self.rx {
            ReceiveTables::PlaneWave { receive, .. } => Some(receive),
            ReceiveTables::Hypot(_) => None,
        }
    }

    #[inline]
    pub fn tx_x(&self, ix: usize, n: usize) -> f64 {
        self.tx_x[ix * self.transmit.len() + n]
    }

    #[inline]
    pub fn tx_z(&self, iz: usize, n: usize) -> f64 {
        self.tx_z[n * self.grid.nz() + iz]
    }

    pub(crate) fn tx_z_row(&self, n: usize) -> &[f64] {
        let nz = self.grid.nz();
        &self.tx_z[n * nz..(n + 1) * nz]
    }

    /// Number of lateral-offset nodes in the DAS receive table.
    pub fn hypot_nodes(&self) -> Option<usize> {
        match &self.rx {
            ReceiveTables::Hypot(h) => Some(h.num_nodes),
            ReceiveTables::PlaneWave { .. } => None,
        }
    }

    /// Raw DAS receive table entry at offset node `node`, depth `iz`.
    pub fn rx_hypot(&self, node: usize, iz: usize) -> Option<f64> {
        match &self.rx {
            ReceiveTables::Hypot(h) => Some(h.table[node * self.grid.nz() + iz]),
            ReceiveTables::PlaneWave { .. } => None,
        }
    }

    /// DAS receive delay from pixel `(ix, iz)` to element `l`, interpolated
    /// between offset nodes.
    pub fn rx_hypot_lookup(&self, ix: usize, l: usize, iz: usize) -> Option<f64> {
        match &self.rx {
            ReceiveTables::Hypot(h) => {
                let nz = self.grid.nz();
                let (q, f) = h.element_nodes[l];
                let a = h.table[(ix + q) * nz + iz];
                if f == 0.0 {
                    Some(a)
                } else {
                    Some(a + f * (h.table[(ix + q + 1) * nz + iz] - a))
                }
            }
            ReceiveTables::PlaneWave { .. } => None,
        }
    }

    pub fn rx_x(&self, ix: usize, m: usize) -> Option<f64> {
        match &self.rx {
            ReceiveTables::PlaneWave { rx_x, receive, .. } => Some(rx_x[ix * receive.len() + m]),
            ReceiveTables::Hypot(_) => None,
        }
    }

    pub fn rx_z(&self, iz: usize, m: usize) -> Option<f64> {
        match &self.rx {
            ReceiveTables::PlaneWave { rx_z, .. } => Some(rx_z[m * self.grid.nz() + iz]),
            ReceiveTables::Hypot(_) => None,
        }
    }

    /// Total number of stored delay entries.
    pub fn entry_count(&self) -> usize {
        let tx = self.tx_x.len() + self.tx_z.len();
        match &self.rx {
            ReceiveTables::Hypot(h) => tx + h.table.len(),
            ReceiveTables::PlaneWave { rx_x, rx_z, .. } => tx + rx_x.len() + rx_z.len(),
        }
    }

    /// Table footprint in bytes.
    pub fn memory_bytes(&self) -> usize {
        self.entry_count() * std::mem::size_of::<f64>()
    }
}
