//! Binary field snapshots.
//!
//! Layout (little endian):
//!   magic   b"GLF1"
//!   version u32
//!   N       u32        box radius
//!   center  i32 x 2
//!   pot_id  u32
//!   nparam  u32
//!   params  f64 x nparam
//!   seed    u64 x 2    (hi, lo)
//!   values  f64 x site_count, in the canonical site order

use crate::error::{Error, Result};
use crate::lattice::{Domain, Field, Site};
use std::io::{Read, Write};

pub const MAGIC: [u8; 4] = *b"GLF1";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub radius: u32,
    pub center: (i32, i32),
    pub potential_id: u32,
    pub params: Vec<f64>,
    pub seed: u128,
}

pub fn write_snapshot<W: Write>(w: &mut W, header: &SnapshotHeader, field: &Field) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&header.radius.to_le_bytes())?;
    w.write_all(&header.center.0.to_le_bytes())?;
    w.write_all(&header.center.1.to_le_bytes())?;
    w.write_all(&header.potential_id.to_le_bytes())?;
    w.write_all(&(header.params.len() as u32).to_le_bytes())?;
    for p in &header.params {
        w.write_all(&p.to_le_bytes())?;
    }
    w.write_all(&((header.seed >> 64) as u64).to_le_bytes())?;
    w.write_all(&(header.seed as u64).to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_i32<R: Read>(r: &mut R) -> Result<i32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(i32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_snapshot<R: Read>(r: &mut R) -> Result<(SnapshotHeader, Field)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let radius = read_u32(r)?;
    if radius == 0 {
        return Err(Error::Format("zero radius".into()));
    }
    let center = (read_i32(r)?, read_i32(r)?);
    let potential_id = read_u32(r)?;
    let nparam = read_u32(r)?;
    if nparam > 1 << 20 {
        return Err(Error::Format(format!("absurd parameter count {nparam}")));
    }
    let mut params = Vec::with_capacity(nparam as usize);
    for _ in 0..nparam {
        params.push(read_f64(r)?);
    }
    let seed = ((read_u64(r)? as u128) << 64) | read_u64(r)? as u128;
    let domain = Domain::make_box(radius as i32, Site::new(center.0, center.1))?;
    let mut values = Vec::with_capacity(domain.site_count());
    for _ in 0..domain.site_count() {
        values.push(read_f64(r)?);
    }
    let header = SnapshotHeader {
        radius,
        center,
        potential_id,
        params,
        seed,
    };
    Ok((header, Field::from_values(domain, values)?))
}

pub fn snapshot_to_bytes(header: &SnapshotHeader, field: &Field) -> Vec<u8> {
    let mut out = Vec::with_capacity(44 + 8 * (header.params.len() + field.values().len()));
    write_snapshot(&mut out, header, field).expect("in-memory write cannot fail");
    out
}
