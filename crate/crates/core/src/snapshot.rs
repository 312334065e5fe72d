//! Binary field snapshots.
//!
//! Layout, all little-endian:
//!
//! | bytes            | content                                        |
//! |------------------|------------------------------------------------|
//! | 7                | magic `BHACS1\n`                               |
//! | 8                | grid size `n` (u64)                            |
//! | 16 × 8           | constant metric matrix, row-major (f64)        |
//! | 4 + len          | metadata length (u32) and UTF-8 text           |
//! | 8 + 8            | `e2`, `e1` (f64)                               |
//! | 6 × 8            | Chern periods, planes 01 02 03 12 13 23 (f64)  |
//! | n⁴ × 16 × 8      | field values, lexicographic points, row-major  |

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::acs::{validate, CompatibleJField, DEFAULT_TOL};
use crate::energy::energies;
use crate::error::{Error, Result};
use crate::field::{EndoField, TwoForm};
use crate::grid::Grid;
use crate::linalg::Mat4;
use crate::metric::MetricField;
use crate::topology::lattice_periods;

pub const MAGIC: &[u8; 7] = b"BHACS1\n";

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub metric: Mat4,
    pub metadata: String,
    pub e2: f64,
    pub e1: f64,
    /// NaN when the field has no well-defined fiber component.
    pub periods: TwoForm,
    pub field: EndoField,
}

impl Snapshot {
    /// Snapshot of `j` with freshly computed energies and periods.
    pub fn capture(j: &CompatibleJField, metric: &MetricField, metadata: impl Into<String>) -> Result<Self> {
        let (g, _) = metric.require_constant("snapshots")?;
        let (e1, e2) = energies(j, metric)?;
        let periods = lattice_periods(j, metric).unwrap_or([f64::NAN; 6]);
        Ok(Self { metric: *g, metadata: metadata.into(), e2, e1, periods, field: j.field().clone() })
    }

    pub fn grid(&self) -> Grid {
        self.field.grid()
    }

    pub fn metric_field(&self) -> Result<MetricField> {
        MetricField::constant(self.grid(), self.metric)
    }

    /// The payload as a validated structure.
    pub fn structure(&self) -> Result<(CompatibleJField, MetricField)> {
        let metric = self.metric_field()?;
        let j = validate(self.field.clone(), &metric, DEFAULT_TOL)?;
        Ok((j, metric))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.grid().n();
        let meta = self.metadata.as_bytes();
        let mut out = Vec::with_capacity(7 + 8 + 128 + 4 + meta.len() + 64 + self.grid().len() * 128);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(n as u64).to_le_bytes());
        for r in 0..4 {
            for c in 0..4 {
                out.extend_from_slice(&self.metric[(r, c)].to_le_bytes());
            }
        }
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(meta);
        for v in [self.e2, self.e1].iter().chain(self.periods.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for m in self.field.values() {
            for r in 0..4 {
                for c in 0..4 {
                    out.extend_from_slice(&m[(r, c)].to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::Format("bad magic; not a snapshot".into()));
        }
        let n = usize::try_from(r.u64()?).map_err(|_| Error::Format("grid size overflows".into()))?;
        let grid = Grid::new(n).map_err(|_| Error::Format(format!("invalid grid size {n}")))?;
        let mut metric = Mat4::zeros();
        for row in 0..4 {
            for col in 0..4 {
                metric[(row, col)] = r.f64()?;
            }
        }
        let len = r.u32()? as usize;
        let metadata = String::from_utf8(r.take(len)?.to_vec())
            .map_err(|_| Error::Format("metadata is not UTF-8".into()))?;
        let e2 = r.f64()?;
        let e1 = r.f64()?;
        let mut periods = [0.0; 6];
        for p in &mut periods {
            *p = r.f64()?;
        }
        let expected = grid.len() * 16 * 8;
        let remaining = bytes.len() - r.pos;
        if remaining != expected {
            return Err(Error::Format(format!("payload has {remaining} bytes, expected {expected}")));
        }
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let mut m = Mat4::zeros();
            for row in 0..4 {
                for col in 0..4 {
                    m[(row, col)] = r.f64()?;
                }
            }
            values.push(m);
        }
        Ok(Self { metric, metadata, e2, e1, periods, field: EndoField::from_values(grid, values) })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(k).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Format(format!("truncated snapshot: need {k} bytes at offset {}", self.pos))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
