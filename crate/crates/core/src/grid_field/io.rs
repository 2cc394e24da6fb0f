//! Field persistence.
//!
//! `SLF1` snapshot layout, all little-endian:
//!
//! ```text
//! magic  "SLF1"            4 bytes
//! dim    u32
//! n      u32  x dim
//! L      f64  x dim
//! t      f64
//! data   (re, im) f64 pairs, row-major, last axis fastest
//! ```
//!
//! A trace is stored as consecutive snapshots in one stream.

use std::io::{Read, Write};

use num_complex::Complex64 as C64;

use super::field::{polar_decompose, quantum_potential, Wavefunction};
use super::grid::{Axis, Grid};
use super::params::PhysicalParams;
use crate::error::{Error, Result};

pub const SLF1_MAGIC: &[u8; 4] = b"SLF1";

pub fn write_slf1<W: Write>(w: &mut W, psi: &Wavefunction) -> Result<()> {
    let grid = psi.grid();
    w.write_all(SLF1_MAGIC)?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    for a in grid.axes() {
        w.write_all(&(a.n as u32).to_le_bytes())?;
    }
    for a in grid.axes() {
        w.write_all(&a.length.to_le_bytes())?;
    }
    w.write_all(&psi.t().to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * psi.values().len());
    for z in psi.values() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_exact_or_eof<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..])? {
            0 if filled == 0 => return Ok(false),
            0 => return Err(Error::Format("truncated snapshot".into())),
            k => filled += k,
        }
    }
    Ok(true)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    if !read_exact_or_eof(r, &mut b)? {
        return Err(Error::Format("truncated header".into()));
    }
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    if !read_exact_or_eof(r, &mut b)? {
        return Err(Error::Format("truncated header".into()));
    }
    Ok(f64::from_le_bytes(b))
}

/// Read the next snapshot; `Ok(None)` at a clean end of stream.
pub fn read_slf1<R: Read>(r: &mut R) -> Result<Option<Wavefunction>> {
    let mut magic = [0u8; 4];
    if !read_exact_or_eof(r, &mut magic)? {
        return Ok(None);
    }
    if &magic != SLF1_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let dim = read_u32(r)? as usize;
    if !(1..=2).contains(&dim) {
        return Err(Error::Format(format!("unsupported dimension {dim}")));
    }
    let ns: Vec<usize> = (0..dim).map(|_| read_u32(r).map(|n| n as usize)).collect::<Result<_>>()?;
    let ls: Vec<f64> = (0..dim).map(|_| read_f64(r)).collect::<Result<_>>()?;
    let t = read_f64(r)?;
    let axes = ns
        .iter()
        .zip(&ls)
        .map(|(&n, &l)| Axis::new(l, n))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Format(e.to_string()))?;
    let grid = Grid::from_axes(axes)?;
    let mut buf = vec![0u8; 16 * grid.len()];
    if !read_exact_or_eof(r, &mut buf)? {
        return Err(Error::Format("missing payload".into()));
    }
    let values = buf
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            C64::new(re, im)
        })
        .collect();
    Ok(Some(Wavefunction::new(grid, values, t)?))
}

pub fn read_slf1_all<R: Read>(r: &mut R) -> Result<Vec<Wavefunction>> {
    let mut out = Vec::new();
    while let Some(psi) = read_slf1(r)? {
        out.push(psi);
    }
    Ok(out)
}

/// One row per grid point: coordinates, `Re psi`, `Im psi`, `R`, `S`, `Q`.
pub fn write_field_csv<W: Write>(w: &mut W, psi: &Wavefunction, params: &PhysicalParams) -> Result<()> {
    let grid = psi.grid();
    let polar = polar_decompose(psi, params.hbar, None)?;
    let q = quantum_potential(&polar, params);
    let coords = if grid.dim() == 1 { "x" } else { "x,y" };
    writeln!(w, "{coords},re,im,R,S,Q")?;
    for i in 0..grid.len() {
        let p = grid.point(i);
        let z = psi.values()[i];
        if grid.dim() == 1 {
            write!(w, "{:e},", p[0])?;
        } else {
            write!(w, "{:e},{:e},", p[0], p[1])?;
        }
        writeln!(w, "{:e},{:e},{:e},{:e},{:e}", z.re, z.im, polar.amplitude[i], polar.phase[i], q.values[i])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip() {
        let g = Grid::plane([6.0, 8.0], [16, 32]).unwrap();
        let mut psi = Wavefunction::from_fn(&g, |p| C64::new(p[0], -p[1])).normalized().unwrap();
        psi.set_t(1.25);
        let mut bytes = Vec::new();
        write_slf1(&mut bytes, &psi).unwrap();
        write_slf1(&mut bytes, &psi).unwrap();
        assert_eq!(&bytes[..4], b"SLF1");
        assert_eq!(bytes.len(), 2 * (4 + 4 + 8 + 16 + 8 + 16 * 512));
        let back = read_slf1_all(&mut bytes.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], psi);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_slf1(&mut &b"SLF2\x01\x00\x00\x00"[..]).is_err());
        assert!(read_slf1(&mut &b"SLF1\x01\x00"[..]).is_err());
        assert!(read_slf1(&mut &b""[..]).unwrap().is_none());
    }

    #[test]
    fn csv_has_one_row_per_point() {
        let g = Grid::line(10.0, 16).unwrap();
        let psi = Wavefunction::gaussian(&g, 0.0, 1.0, 0.5).unwrap();
        let mut out = Vec::new();
        write_field_csv(&mut out, &psi, &PhysicalParams::default()).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 17);
        assert!(text.starts_with("x,re,im,R,S,Q\n"));
    }
}
