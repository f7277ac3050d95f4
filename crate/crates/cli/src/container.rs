//! Binary channel-data files.
//!
//! Layout (all little-endian):
//!
//! | field | type |
//! |---|---|
//! | magic `KKRF` | 4 bytes |
//! | version | u16 |
//! | kind (0 real, 1 analytic, 2 compressed) | u8 |
//! | N, L or M, T | 3 × u32 |
//! | fs, ν, c, pitch, t0 | 5 × f64 |
//! | transmit angles | N × f64 |
//! | receive angles (kind 2 only) | M × f64 |
//! | payload | f32, or interleaved (re, im) f32 pairs |
//!
//! Compressed files do not record the element count or the array bandwidth,
//! so readers supply them.

use std::io::{Read, Write};

use kkbeam_core::sampling::{transmit_step, ReceiveAngleSet};
use kkbeam_core::{AcquisitionParams, AnalyticRf, CompressedRf, RfVolume, TransducerArray};
use num_complex::Complex;

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 4] = b"KKRF";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum RfContainer {
    Real(RfVolume<f32>),
    Analytic(AnalyticRf<f32>),
    Compressed(CompressedRf<f32>),
}

/// Array facts a file may not carry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadContext {
    pub elements: usize,
    pub bandwidth: f64,
}

impl RfContainer {
    pub fn kind(&self) -> u8 {
        match self {
            RfContainer::Real(_) => 0,
            RfContainer::Analytic(_) => 1,
            RfContainer::Compressed(_) => 2,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            RfContainer::Real(_) => "real",
            RfContainer::Analytic(_) => "analytic",
            RfContainer::Compressed(_) => "compressed",
        }
    }

    fn parts(&self) -> (&TransducerArray, &AcquisitionParams, usize) {
        match self {
            RfContainer::Real(v) => (v.array(), v.params(), v.array().num_elements()),
            RfContainer::Analytic(v) => (v.array(), v.params(), v.array().num_elements()),
            RfContainer::Compressed(v) => (v.array(), v.params(), v.receive_angles().len()),
        }
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        let (array, params, channels) = self.parts();
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[self.kind()])?;
        for d in [params.num_transmits(), channels, params.num_samples()] {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for v in [
            array.sampling_frequency(),
            array.center_frequency(),
            params.sound_speed(),
            array.pitch(),
            params.t0(),
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for a in params.transmit_angles() {
            w.write_all(&a.to_le_bytes())?;
        }
        let mut buf = Vec::new();
        match self {
            RfContainer::Real(v) => {
                buf.reserve(v.data().len() * 4);
                for x in v.data() {
                    buf.extend_from_slice(&x.to_le_bytes());
                }
            }
            RfContainer::Analytic(v) => complex_payload(v.data(), &mut buf),
            RfContainer::Compressed(v) => {
                for a in v.receive_angles().angles() {
                    w.write_all(&a.to_le_bytes())?;
                }
                complex_payload(v.data(), &mut buf)
            }
        }
        w.write_all(&buf)
    }

    pub fn read_from(r: &mut impl Read, ctx: ReadContext) -> Result<Self> {
        let mut head = [0u8; 7];
        read_exact(r, &mut head)?;
        if &head[..4] != MAGIC {
            return Err(CliError::Data("not an RF container (bad magic)".into()));
        }
        let version = u16::from_le_bytes([head[4], head[5]]);
        if version != VERSION {
            return Err(CliError::Data(format!(
                "unsupported container version {version}"
            )));
        }
        let kind = head[6];
        let n = read_u32(r)? as usize;
        let ch = read_u32(r)? as usize;
        let t = read_u32(r)? as usize;
        let fs = read_f64(r)?;
        let nu = read_f64(r)?;
        let c = read_f64(r)?;
        let pitch = read_f64(r)?;
        let t0 = read_f64(r)?;
        let transmit = (0..n).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
        let elements = if kind == 2 { ctx.elements } else { ch };
        let array = TransducerArray::new(pitch, elements, nu, fs, ctx.bandwidth)?;
        let params = AcquisitionParams::new(c, transmit, t, t0)?;
        match kind {
            0 => {
                let raw = read_payload(r, n * ch * t)?;
                Ok(RfContainer::Real(RfVolume::new(raw, array, params)?))
            }
            1 => {
                let data = pairs(read_payload(r, 2 * n * ch * t)?);
                Ok(RfContainer::Analytic(AnalyticRf::new(data, array, params)?))
            }
            2 => {
                let angles = (0..ch).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
                let step = if n > 1 {
                    let tmax = params.transmit_angles()[n - 1];
                    transmit_step(n, tmax)
                } else {
                    0.0
                };
                let receive = ReceiveAngleSet::explicit(angles, step)?;
                let data = pairs(read_payload(r, 2 * n * ch * t)?);
                Ok(RfContainer::Compressed(CompressedRf::new(
                    data, receive, array, params,
                )?))
            }
            k => Err(CliError::Data(format!("unknown container kind {k}"))),
        }
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(path, e))
    }

    pub fn read_file(path: &std::path::Path, ctx: ReadContext) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        Self::read_from(&mut std::io::BufReader::new(file), ctx)
    }
}

fn complex_payload(data: &[Complex<f32>], buf: &mut Vec<u8>) {
    buf.reserve(data.len() * 8);
    for c in data {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
}

fn pairs(raw: Vec<f32>) -> Vec<Complex<f32>> {
    raw.chunks_exact(2)
        .map(|p| Complex::new(p[0], p[1]))
        .collect()
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| CliError::Data(format!("truncated RF container: {e}")))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_payload(r: &mut impl Read, count: usize) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; count * 4];
    read_exact(r, &mut bytes)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)
        .map_err(|e| CliError::Data(e.to_string()))?
        != 0
    {
        return Err(CliError::Data("RF container has trailing bytes".into()));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}
