//! Binary snapshots of a flow state.
//!
//! Layout, all little-endian: magic `GVRF`, version `u16`, then `d`, `N`,
//! rank as `u64`, then `s`, `tau`, `t`, `nu`, `alpha` as `f64`, then for each
//! component the coefficients of every `k` with `|k_i| <= N/2 - 1` in
//! lexicographic order as (re, im) pairs, then the FNV-1a 64 hash of all
//! preceding bytes.

use std::hash::Hasher;
use std::path::Path;

use fnv::FnvHasher;
use num_complex::Complex64;

use crate::dynamics::FlowState;
use crate::error::{Error, Result};
use crate::field::{Rank, SpectralField};
use crate::grid::{Grid, Wavevector};

pub const MAGIC: &[u8; 4] = b"GVRF";
pub const VERSION: u16 = 1;

/// A decoded snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub state: FlowState,
    pub s: f64,
    pub nu: f64,
    pub alpha: f64,
}

fn lexicographic(grid: &Grid) -> Vec<usize> {
    let km = grid.k_max() as i64;
    let mut out = Vec::new();
    let third = if grid.dim() == 3 { -km..=km } else { 0..=0 };
    for a in -km..=km {
        for b in -km..=km {
            for c in third.clone() {
                let k: Wavevector = [a, b, c];
                out.push(grid.index_of(&k).expect("resolved wavevector"));
            }
        }
    }
    out
}

fn fnv(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

pub fn encode(snap: &Snapshot) -> Vec<u8> {
    let w = &snap.state.omega;
    let grid = w.grid();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let rank = match w.rank() {
        Rank::Scalar => 0u64,
        Rank::Vector => 1u64,
    };
    for v in [grid.dim() as u64, grid.n() as u64, rank] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in [snap.s, snap.state.tau, snap.state.t, snap.nu, snap.alpha] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let order = lexicographic(grid);
    for comp in w.components() {
        for &idx in &order {
            out.extend_from_slice(&comp[idx].re.to_le_bytes());
            out.extend_from_slice(&comp[idx].im.to_le_bytes());
        }
    }
    let sum = fnv(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        if end > self.buf.len() {
            return Err(Error::Snapshot(format!("truncated at byte {}", self.buf.len())));
        }
        let mut a = [0u8; N];
        a.copy_from_slice(&self.buf[self.pos..end]);
        self.pos = end;
        Ok(a)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if &r.take::<4>()? != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = u16::from_le_bytes(r.take()?);
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let dim = r.u64()? as usize;
    let n = r.u64()? as usize;
    let rank = match r.u64()? {
        0 => Rank::Scalar,
        1 => Rank::Vector,
        other => return Err(Error::Snapshot(format!("unknown rank tag {other}"))),
    };
    let grid = Grid::new(dim, n).map_err(|e| Error::Snapshot(e.to_string()))?;
    let (s, tau, t, nu, alpha) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?, r.f64()?);
    let order = lexicographic(&grid);
    let ncomp = rank.components(dim);
    let expected = r.pos + ncomp * order.len() * 16 + 8;
    if bytes.len() < expected {
        return Err(Error::Snapshot(format!("truncated: {} of {expected} bytes", bytes.len())));
    }
    if bytes.len() > expected {
        return Err(Error::Snapshot(format!("{} trailing bytes", bytes.len() - expected)));
    }
    let mut comps = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; ncomp];
    for comp in comps.iter_mut() {
        for &idx in &order {
            comp[idx] = Complex64::new(r.f64()?, r.f64()?);
        }
    }
    let computed = fnv(&bytes[..r.pos]);
    let stored = r.u64()?;
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    let omega = SpectralField::from_components(&grid, rank, comps)?;
    Ok(Snapshot {
        state: FlowState { omega, tau, t },
        s,
        nu,
        alpha,
    })
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    std::fs::write(path, encode(snap))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_divfree_field, ShellProfile};

    fn sample(dim: usize) -> Snapshot {
        let g = Grid::new(dim, 16).unwrap();
        let rank = if dim == 2 { Rank::Scalar } else { Rank::Vector };
        let w = random_divfree_field(&g, &ShellProfile::Flat { amplitude: 0.3 }, 5.0, 9, rank).unwrap();
        Snapshot {
            state: FlowState { omega: w, tau: 0.125, t: 1.5 },
            s: 1.0,
            nu: 0.1,
            alpha: 0.5,
        }
    }

    #[test]
    fn roundtrip_is_exact() {
        for dim in [2, 3] {
            let s = sample(dim);
            assert_eq!(decode(&encode(&s)).unwrap(), s);
        }
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = encode(&sample(2));
        let mut bad = bytes.clone();
        bad[100] ^= 1;
        assert!(matches!(decode(&bad), Err(Error::Checksum { .. })));
        assert!(matches!(decode(&bytes[..bytes.len() - 3]), Err(Error::Snapshot(_))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(Error::Snapshot(_))));
        let mut bad = bytes;
        bad[4] = 9;
        assert!(matches!(decode(&bad), Err(Error::Snapshot(_))));
    }
}
