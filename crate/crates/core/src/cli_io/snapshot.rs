//! Flat little-endian snapshot files.
//!
//! Layout: magic `RELEUv1\0`, `u32 n1, n2, n3`, `f64 tau`, `u32 field_count`,
//! then per field `u32 name_len`, name bytes (UTF-8), `u32 ncomp`, and
//! `ncomp * n1 * n2 * n3` doubles with components contiguous and `i1` fastest.

use crate::error::{Error, Result, SnapshotError};
use crate::grid::{GridSpec, ScalarField};
use crate::initial_data::InitialDataBundle;
use crate::kinematics::FlowMapState;
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"RELEUv1\0";

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: String,
    pub comps: Vec<ScalarField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dims: [usize; 3],
    pub tau: f64,
    pub fields: Vec<Field>,
}

impl Snapshot {
    pub fn new(grid: &GridSpec, tau: f64) -> Self {
        Self {
            dims: [grid.n1, grid.n2, grid.n3],
            tau,
            fields: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, comps: Vec<ScalarField>) {
        self.fields.push(Field {
            name: name.to_string(),
            comps,
        });
    }

    pub fn get(&self, name: &str) -> Option<&[ScalarField]> {
        self.fields.iter().find(|f| f.name == name).map(|f| f.comps.as_slice())
    }

    fn require(&self, name: &str, ncomp: usize) -> std::result::Result<&[ScalarField], SnapshotError> {
        match self.get(name) {
            Some(c) if c.len() == ncomp => Ok(c),
            Some(c) => Err(SnapshotError::DimMismatch(format!(
                "field `{name}` has {} components, expected {ncomp}",
                c.len()
            ))),
            None => Err(SnapshotError::MissingField(name.into())),
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.dims[0], self.dims[1], self.dims[2])
    }

    /// Standard slice record: flow map, velocity and the initial data.
    pub fn from_state(grid: &GridSpec, flow: &FlowMapState, data: &InitialDataBundle) -> Self {
        let mut s = Self::new(grid, flow.tau);
        s.push("eta", flow.eta.to_vec());
        s.push("v", flow.v.to_vec());
        s.push("F_ring", vec![data.f_ring.clone()]);
        s.push("n_ring", vec![data.n_ring.clone()]);
        s.push("v_ring", data.velocity().to_vec());
        s
    }

    /// Recovers the flow slice and the initial data of a standard record.
    pub fn to_state(&self, path: &Path) -> Result<(GridSpec, FlowMapState, InitialDataBundle)> {
        let wrap = |kind| Error::Snapshot {
            path: path.to_path_buf(),
            kind,
        };
        let grid = self.grid()?;
        let four = |name: &str| -> Result<[ScalarField; 4]> {
            let c = self.require(name, 4).map_err(wrap)?;
            Ok([c[0].clone(), c[1].clone(), c[2].clone(), c[3].clone()])
        };
        let eta = four("eta")?;
        let v = four("v")?;
        let v_ring = four("v_ring")?;
        let n_ring = self.require("n_ring", 1).map_err(wrap)?[0].clone();
        let f_ring = self.require("F_ring", 1).map_err(wrap)?[0].clone();
        let [v0, v1, v2, v3] = v_ring;
        let mut data = InitialDataBundle::from_fields(&grid, n_ring, [v1, v2, v3])?;
        // Keep the stored bits rather than recomputing them.
        data.v0 = v0;
        data.f_ring = f_ring;
        Ok((grid, FlowMapState { tau: self.tau, eta, v }, data))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n: usize = self.dims.iter().product();
        let payload: usize = self.fields.iter().map(|f| 8 + f.name.len() + 8 * n * f.comps.len()).sum();
        let mut out = Vec::with_capacity(32 + payload);
        out.extend_from_slice(MAGIC);
        for d in self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.tau.to_le_bytes());
        out.extend_from_slice(&(self.fields.len() as u32).to_le_bytes());
        for f in &self.fields {
            out.extend_from_slice(&(f.name.len() as u32).to_le_bytes());
            out.extend_from_slice(f.name.as_bytes());
            out.extend_from_slice(&(f.comps.len() as u32).to_le_bytes());
            for c in &f.comps {
                for x in c {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, SnapshotError> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(8)? != MAGIC {
            return Err(SnapshotError::BadMagic);
        }
        let dims = [cur.u32()? as usize, cur.u32()? as usize, cur.u32()? as usize];
        if dims.iter().any(|d| *d == 0) {
            return Err(SnapshotError::DimMismatch(format!("zero dimension in {dims:?}")));
        }
        let n: usize = dims.iter().product();
        let tau = cur.f64()?;
        let count = cur.u32()? as usize;
        let mut fields = Vec::with_capacity(count.min(64));
        for _ in 0..count {
            let len = cur.u32()? as usize;
            let name = std::str::from_utf8(cur.take(len)?)
                .map_err(|_| SnapshotError::BadName)?
                .to_string();
            let ncomp = cur.u32()? as usize;
            let need = ncomp
                .checked_mul(n)
                .and_then(|x| x.checked_mul(8))
                .ok_or(SnapshotError::Truncated)?;
            let raw = cur.take(need)?;
            let comps = raw
                .chunks_exact(8 * n)
                .map(|c| c.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect())
                .collect();
            fields.push(Field { name, comps });
        }
        if cur.pos != bytes.len() {
            return Err(SnapshotError::DimMismatch(format!(
                "{} trailing bytes after the declared fields",
                bytes.len() - cur.pos
            )));
        }
        Ok(Self { dims, tau, fields })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], SnapshotError> {
        let end = self.pos.checked_add(n).ok_or(SnapshotError::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(SnapshotError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> std::result::Result<f64, SnapshotError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<()> {
    std::fs::write(path, snap.to_bytes())?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = std::fs::read(path)?;
    Snapshot::from_bytes(&bytes).map_err(|kind| Error::Snapshot {
        path: path.to_path_buf(),
        kind,
    })
}

/// `snap_000042.bin`
pub fn snapshot_name(index: usize) -> String {
    format!("snap_{index:06}.bin")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::make_physical_vacuum_data;

    fn sample() -> (GridSpec, Snapshot) {
        let g = GridSpec::new(8, 10, 9).unwrap();
        let d = make_physical_vacuum_data(&g, 0.02, 0.1, 0.3).unwrap();
        let mut flow = FlowMapState::initial(&g, d.velocity());
        flow.tau = 0.125;
        flow.eta[2] = g.sample(|y| (y[0] * 3.0).sin() * 1e-3);
        (g, Snapshot::from_state(&g, &flow, &d))
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (_, s) = sample();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(snapshot_name(3));
        write_snapshot(&p, &s).unwrap();
        let r = read_snapshot(&p).unwrap();
        assert_eq!(r.to_bytes(), s.to_bytes());
        let bits = |s: &Snapshot| -> Vec<u64> {
            s.fields.iter().flat_map(|f| f.comps.iter().flatten().map(|x| x.to_bits())).collect()
        };
        assert_eq!(bits(&r), bits(&s));
        let (g, flow, data) = r.to_state(&p).unwrap();
        assert_eq!(g.len(), 8 * 10 * 9);
        assert_eq!(Snapshot::from_state(&g, &flow, &data).to_bytes(), s.to_bytes());
    }

    #[test]
    fn header_layout() {
        let (_, s) = sample();
        let b = s.to_bytes();
        assert_eq!(&b[..8], MAGIC);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(b[20..28].try_into().unwrap()), 0.125);
        assert_eq!(u32::from_le_bytes(b[28..32].try_into().unwrap()), 5);
        assert_eq!(u32::from_le_bytes(b[32..36].try_into().unwrap()), 3);
        assert_eq!(&b[36..39], b"eta");
    }

    #[test]
    fn truncation_is_detected() {
        let (_, s) = sample();
        let b = s.to_bytes();
        for cut in [4, 20, 40, b.len() - 1] {
            assert_eq!(Snapshot::from_bytes(&b[..cut]), Err(SnapshotError::Truncated));
        }
        let mut long = b.clone();
        long.push(0);
        assert!(matches!(Snapshot::from_bytes(&long), Err(SnapshotError::DimMismatch(_))));
    }

    #[test]
    fn byte_swapped_file_fails_magic() {
        let (_, s) = sample();
        let mut b = s.to_bytes();
        for chunk in b[..8].chunks_exact_mut(4) {
            chunk.reverse();
        }
        assert_eq!(Snapshot::from_bytes(&b), Err(SnapshotError::BadMagic));
    }

    #[test]
    fn missing_fields_are_typed() {
        let (g, mut s) = sample();
        s.fields.retain(|f| f.name != "v");
        let e = s.to_state(Path::new("x")).unwrap_err();
        assert!(matches!(e, Error::Snapshot { kind: SnapshotError::MissingField(ref n), .. } if n == "v"));
        assert_eq!(e.exit_code(), 2);
        let _ = g;
    }
}
