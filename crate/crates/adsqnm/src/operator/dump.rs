//! Little-endian binary dump of (P0, P1, P2).
//!
//! Layout:
//! ```text
//! magic   8 bytes  "ADSQNMOP"
//! version u32      1
//! dim     u32      matrix dimension n
//! n_rad   u32      radial nodes (0 without a grid)
//! n_ang   u32      angular nodes (0 without a grid)
//! k       i32      axial mode
//! nu, M, a, delta  f64 each
//! P0, P1, P2       n·n complex doubles each, row-major, (re, im) interleaved
//! ```
//!
//! Mode vectors use the same header with magic "ADSQNMMV" (dim = vector length), then
//! `count u32` and, per mode, λ as (re, im) followed by dim complex doubles.

use std::io::{Read, Write};
use std::path::Path;

use crate::numerics::dense::CMat;
use crate::numerics::C64;

use super::{DiscreteOperator, GridSpec, OperatorError};
use crate::geometry::KerrAds;

const MAGIC: &[u8; 8] = b"ADSQNMOP";
const MODE_MAGIC: &[u8; 8] = b"ADSQNMMV";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpHeader {
    pub dim: u32,
    pub n_radial: u32,
    pub n_angular: u32,
    pub k: i32,
    pub nu: f64,
    pub mass: f64,
    pub spin: f64,
    pub delta: f64,
}

impl DumpHeader {
    /// Header for vectors on `grid` (dim = grid size).
    pub fn for_grid(geom: &KerrAds, grid: &GridSpec, k: i32) -> Self {
        Self {
            dim: grid.len() as u32,
            n_radial: grid.n_radial as u32,
            n_angular: grid.n_angular as u32,
            k,
            nu: geom.params.nu,
            mass: geom.params.mass,
            spin: geom.params.spin,
            delta: geom.delta,
        }
    }

    pub fn from_operator(op: &DiscreteOperator) -> Self {
        match &op.layout {
            Some(l) => Self {
                dim: op.dim() as u32,
                n_radial: l.grid.n_radial as u32,
                n_angular: l.grid.n_angular as u32,
                k: l.k,
                nu: l.nu,
                mass: l.geometry.params.mass,
                spin: l.geometry.params.spin,
                delta: l.geometry.delta,
            },
            None => Self { dim: op.dim() as u32, n_radial: 0, n_angular: 0, k: 0, nu: 0.0, mass: 0.0, spin: 0.0, delta: 0.0 },
        }
    }

    fn write(&self, magic: &[u8; 8], buf: &mut Vec<u8>) {
        buf.extend_from_slice(magic);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&self.dim.to_le_bytes());
        buf.extend_from_slice(&self.n_radial.to_le_bytes());
        buf.extend_from_slice(&self.n_angular.to_le_bytes());
        buf.extend_from_slice(&self.k.to_le_bytes());
        for v in [self.nu, self.mass, self.spin, self.delta] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    fn read(bytes: &[u8], magic: &[u8; 8]) -> Result<Self, OperatorError> {
        let bad = |m: &str| OperatorError::MalformedDump(m.to_string());
        if bytes.len() < HEADER_LEN || &bytes[..8] != magic {
            return Err(bad("missing magic"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        if u32_at(8) != VERSION {
            return Err(bad("unsupported version"));
        }
        Ok(Self {
            dim: u32_at(12),
            n_radial: u32_at(16),
            n_angular: u32_at(20),
            k: u32_at(24) as i32,
            nu: f64_at(28),
            mass: f64_at(36),
            spin: f64_at(44),
            delta: f64_at(52),
        })
    }
}

const HEADER_LEN: usize = 60;

fn push_complex(buf: &mut Vec<u8>, z: C64) {
    buf.extend_from_slice(&z.re.to_le_bytes());
    buf.extend_from_slice(&z.im.to_le_bytes());
}

fn complex_at(bytes: &[u8], o: usize) -> C64 {
    let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    C64::new(f(o), f(o + 8))
}

pub fn write_dump(op: &DiscreteOperator, path: &Path) -> Result<(), OperatorError> {
    let mut buf: Vec<u8> = Vec::with_capacity(HEADER_LEN + 48 * op.dim() * op.dim());
    DumpHeader::from_operator(op).write(MAGIC, &mut buf);
    for mat in [&op.p0, &op.p1, &op.p2] {
        for z in mat.iter() {
            push_complex(&mut buf, *z);
        }
    }
    std::fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

/// Dump grid vectors described by `header` together with their frequencies.
pub fn write_modes(header: &DumpHeader, modes: &[(C64, &[C64])], path: &Path) -> Result<(), OperatorError> {
    let n = header.dim as usize;
    let mut buf: Vec<u8> = Vec::with_capacity(HEADER_LEN + 4 + modes.len() * 16 * (n + 1));
    header.write(MODE_MAGIC, &mut buf);
    buf.extend_from_slice(&(modes.len() as u32).to_le_bytes());
    for (lambda, v) in modes {
        if v.len() != n {
            return Err(OperatorError::DimensionMismatch { expected: n, got: v.len() });
        }
        push_complex(&mut buf, *lambda);
        for z in v.iter() {
            push_complex(&mut buf, *z);
        }
    }
    std::fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

pub fn read_modes(path: &Path) -> Result<(DumpHeader, Vec<(C64, Vec<C64>)>), OperatorError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let header = DumpHeader::read(&bytes, MODE_MAGIC)?;
    let n = header.dim as usize;
    if bytes.len() < HEADER_LEN + 4 {
        return Err(OperatorError::MalformedDump("truncated".into()));
    }
    let count = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().expect("4 bytes")) as usize;
    let need = HEADER_LEN + 4 + count * 16 * (n + 1);
    if bytes.len() != need {
        return Err(OperatorError::MalformedDump(format!("expected {need} bytes, found {}", bytes.len())));
    }
    let mut off = HEADER_LEN + 4;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let lambda = complex_at(&bytes, off);
        off += 16;
        let v: Vec<C64> = (0..n).map(|i| complex_at(&bytes, off + 16 * i)).collect();
        off += 16 * n;
        out.push((lambda, v));
    }
    Ok((header, out))
}

/// Read a dump back as a header plus the three matrices.
pub fn read_dump(path: &Path) -> Result<(DumpHeader, [CMat; 3]), OperatorError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let header = DumpHeader::read(&bytes, MAGIC)?;
    let n = header.dim as usize;
    let need = HEADER_LEN + 3 * n * n * 16;
    if bytes.len() != need {
        return Err(OperatorError::MalformedDump(format!("expected {need} bytes, found {}", bytes.len())));
    }
    let mut mats = [CMat::zeros((n, n)), CMat::zeros((n, n)), CMat::zeros((n, n))];
    let mut off = HEADER_LEN;
    for m in mats.iter_mut() {
        for z in m.iter_mut() {
            *z = complex_at(&bytes, off);
            off += 16;
        }
    }
    Ok((header, mats))
}
