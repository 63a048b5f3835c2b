//! Binary sample dumps: a 32-byte little-endian header followed by the
//! samples as little-endian `f64`.
//!
//! | offset | field          | type  |
//! |-------:|----------------|-------|
//! | 0      | magic `CFMC`   | 4 B   |
//! | 4      | version        | u16   |
//! | 6      | statistic tag  | u16   |
//! | 8      | p              | u32   |
//! | 12     | q              | u32   |
//! | 16     | n              | u32   |
//! | 20     | stream count   | u32   |
//! | 24     | seed           | u64   |
//!
//! Tag 1 is the correlation statistic (`p = q = 0`), tag 2 is `T₀²`.

use std::io::{Read, Write};

use super::{EmpiricalQuantiles, SimulationPlan, Statistic};
use crate::error::{Error, Result};

pub const DUMP_MAGIC: [u8; 4] = *b"CFMC";
pub const DUMP_VERSION: u16 = 1;
const HEADER_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DumpHeader {
    pub version: u16,
    pub plan: SimulationPlan,
}

fn encode_header(plan: &SimulationPlan) -> [u8; HEADER_LEN] {
    let (tag, p, q, n) = match plan.statistic {
        Statistic::Correlation { n } => (1u16, 0u32, 0u32, n),
        Statistic::HotellingT0sq { p, q, n } => (2, p, q, n),
    };
    let mut h = [0u8; HEADER_LEN];
    h[0..4].copy_from_slice(&DUMP_MAGIC);
    h[4..6].copy_from_slice(&DUMP_VERSION.to_le_bytes());
    h[6..8].copy_from_slice(&tag.to_le_bytes());
    h[8..12].copy_from_slice(&p.to_le_bytes());
    h[12..16].copy_from_slice(&q.to_le_bytes());
    h[16..20].copy_from_slice(&n.to_le_bytes());
    h[20..24].copy_from_slice(&plan.stream_count.to_le_bytes());
    h[24..32].copy_from_slice(&plan.seed.to_le_bytes());
    h
}

pub fn write_dump(mut w: impl Write, samples: &EmpiricalQuantiles) -> Result<()> {
    w.write_all(&encode_header(samples.plan()))?;
    let mut buf = Vec::with_capacity(8 * samples.count());
    for x in samples.sorted_samples() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_dump(mut r: impl Read) -> Result<(DumpHeader, EmpiricalQuantiles)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN || bytes[0..4] != DUMP_MAGIC {
        return Err(Error::Serialization("not a sample dump (bad magic)".into()));
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = u16_at(4);
    if version != DUMP_VERSION {
        return Err(Error::Serialization(format!("unsupported dump version {version}")));
    }
    let (p, q, n) = (u32_at(8), u32_at(12), u32_at(16));
    let statistic = match u16_at(6) {
        1 => Statistic::Correlation { n },
        2 => Statistic::HotellingT0sq { p, q, n },
        t => return Err(Error::Serialization(format!("unknown statistic tag {t}"))),
    };
    let body = &bytes[HEADER_LEN..];
    if body.len() % 8 != 0 {
        return Err(Error::Serialization("truncated sample body".into()));
    }
    let samples: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let plan = SimulationPlan::new(
        statistic,
        samples.len(),
        u64::from_le_bytes(bytes[24..32].try_into().unwrap()),
        u32_at(20),
    )
    .map_err(|e| Error::Serialization(format!("invalid plan in dump header: {e}")))?;
    Ok((DumpHeader { version, plan }, EmpiricalQuantiles::from_samples(samples, plan)?))
}
