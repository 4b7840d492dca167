//! Flat-file exports: node CSVs, boundary tensor CSVs, summary tables and
//! a binary grid dump.
//!
//! Binary grid dump layout (all little-endian):
//!
//! ```text
//! offset  size  field
//!      0     8  magic  b"TBGRID\0\0"
//!      8     4  version (u32, currently 1)
//!     12     4  dim (u32, 2 or 3)
//!     16    24  node counts (3 x u64, third is 1 in 2D)
//!     40    24  origin (3 x f64)
//!     64     8  h (f64)
//!     72     4  component count (u32)
//!     76     4  reserved, zero
//!     80     -  components one after another, each counts[0]*counts[1]*counts[2]
//!               f64 values with x fastest; NaN at nodes outside the domain
//! ```
//!
//! Boundary nodes sit on grid edges, not on lattice points, so the dump only
//! carries interior values. Use the node CSV for boundary data.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::laplace::ScalarField;
use crate::ld::LdBoundReport;
use crate::matnorm::{EquivalenceRow, NormKind, SymMatrix};
use crate::scalar::Real;

pub const DUMP_MAGIC: [u8; 8] = *b"TBGRID\0\0";
pub const DUMP_VERSION: u32 = 1;
const HEADER_LEN: usize = 80;

const AXES: [&str; 3] = ["x", "y", "z"];

/// Points with named value columns.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable<T> {
    pub dim: usize,
    pub names: Vec<String>,
    pub points: Vec<[T; 3]>,
    pub on_boundary: Vec<bool>,
    /// `columns[c][row]`
    pub columns: Vec<Vec<T>>,
}

impl<T: Real> NodeTable<T> {
    pub fn empty(dim: usize, names: &[&str]) -> Self {
        Self {
            dim,
            names: names.iter().map(|s| s.to_string()).collect(),
            points: Vec::new(),
            on_boundary: Vec::new(),
            columns: vec![Vec::new(); names.len()],
        }
    }

    /// Every closure node, interior first, then boundary.
    pub fn from_fields(domain: &Domain<T>, names: &[&str], fields: &[&ScalarField<T>]) -> Result<Self> {
        if names.len() != fields.len() {
            return Err(Error::LengthMismatch {
                expected: names.len(),
                got: fields.len(),
            });
        }
        let mut t = Self::empty(domain.dim(), names);
        t.points = (0..domain.interior_len())
            .map(|k| domain.interior_position(k))
            .chain(domain.boundary_nodes().iter().map(|b| b.position))
            .collect();
        t.on_boundary = (0..domain.interior_len())
            .map(|_| false)
            .chain(domain.boundary_nodes().iter().map(|_| true))
            .collect();
        for (col, f) in t.columns.iter_mut().zip(fields) {
            if f.interior.len() != domain.interior_len() || f.boundary.len() != domain.boundary_len() {
                return Err(Error::LengthMismatch {
                    expected: domain.interior_len() + domain.boundary_len(),
                    got: f.interior.len() + f.boundary.len(),
                });
            }
            col.extend(f.interior.iter().chain(&f.boundary).copied());
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = AXES[..self.dim].iter().map(|s| s.to_string()).collect();
        h.push("boundary".into());
        h.extend(self.names.iter().cloned());
        h
    }

    /// Header row, then one row per point. An empty table writes the header only.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for (r, p) in self.points.iter().enumerate() {
            let mut rec: Vec<String> = p[..self.dim].iter().map(|v| v.to_string()).collect();
            rec.push(if self.on_boundary[r] { "1" } else { "0" }.into());
            rec.extend(self.columns.iter().map(|c| c[r].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Column names of the stored upper-triangle entries, `s11, s12, s22` in 2D.
pub fn tensor_entry_names(dim: usize) -> Vec<String> {
    let mut names = Vec::new();
    for i in 0..dim {
        for j in i..dim {
            names.push(format!("s{}{}", i + 1, j + 1));
        }
    }
    names
}

/// One row per boundary node: position, normal, tensor entries.
pub fn write_boundary_tensor_csv<T: Real, W: Write>(domain: &Domain<T>, tensors: &[SymMatrix<T>], out: W) -> Result<()> {
    let dim = domain.dim();
    if tensors.len() != domain.boundary_len() {
        return Err(Error::LengthMismatch {
            expected: domain.boundary_len(),
            got: tensors.len(),
        });
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = AXES[..dim].iter().map(|s| s.to_string()).collect();
    header.extend(AXES[..dim].iter().map(|a| format!("nu_{a}")));
    header.extend(tensor_entry_names(dim));
    w.write_record(&header)?;
    for (b, s) in domain.boundary_nodes().iter().zip(tensors) {
        let mut rec: Vec<String> = b.position[..dim].iter().map(|v| v.to_string()).collect();
        rec.extend(b.normal[..dim].iter().map(|v| v.to_string()));
        rec.extend(s.upper().iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_equivalence_csv<W: Write>(rows: &[EquivalenceRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["pair", "lower", "upper", "observed_min", "observed_max"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Flat summary of an LD bound computation, one per domain in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdCsvRow {
    pub domain: String,
    pub norm: NormKind,
    pub dim: usize,
    pub h: f64,
    pub d: f64,
    pub a: f64,
    pub b: f64,
    pub trace_norm_bound: f64,
}

impl LdCsvRow {
    pub fn new<T: Real>(domain: &str, report: &LdBoundReport<T>) -> Self {
        Self {
            domain: domain.to_string(),
            norm: report.norm,
            dim: report.dim,
            h: report.h.as_f64(),
            d: report.d.as_f64(),
            a: report.a.as_f64(),
            b: report.b.as_f64(),
            trace_norm_bound: report.trace_norm_bound.as_f64(),
        }
    }
}

pub fn write_ld_csv<W: Write>(rows: &[LdCsvRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["domain", "norm", "dim", "h", "d", "a", "b", "trace_norm_bound"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Contents of a binary grid dump.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDump {
    pub dim: usize,
    pub counts: [usize; 3],
    pub origin: [f64; 3],
    pub h: f64,
    pub components: Vec<Vec<f64>>,
}

impl GridDump {
    /// Scatters interior values onto the lattice; everything else is NaN.
    pub fn from_fields<T: Real>(domain: &Domain<T>, fields: &[&ScalarField<T>]) -> Result<Self> {
        let grid = domain.grid();
        let mut components = Vec::with_capacity(fields.len());
        for f in fields {
            if f.interior.len() != domain.interior_len() {
                return Err(Error::LengthMismatch {
                    expected: domain.interior_len(),
                    got: f.interior.len(),
                });
            }
            let mut data = vec![f64::NAN; grid.len()];
            for (&id, v) in domain.interior_nodes().iter().zip(&f.interior) {
                data[id] = v.as_f64();
            }
            components.push(data);
        }
        Ok(Self {
            dim: grid.dim,
            counts: grid.counts,
            origin: grid.origin.map(|v| v.as_f64()),
            h: grid.h.as_f64(),
            components,
        })
    }

    pub fn node_count(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let mut head = Vec::with_capacity(HEADER_LEN);
        head.extend_from_slice(&DUMP_MAGIC);
        head.extend_from_slice(&DUMP_VERSION.to_le_bytes());
        head.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for c in self.counts {
            head.extend_from_slice(&(c as u64).to_le_bytes());
        }
        for o in self.origin {
            head.extend_from_slice(&o.to_le_bytes());
        }
        head.extend_from_slice(&self.h.to_le_bytes());
        head.extend_from_slice(&(self.components.len() as u32).to_le_bytes());
        head.extend_from_slice(&0u32.to_le_bytes());
        debug_assert_eq!(head.len(), HEADER_LEN);
        out.write_all(&head)?;
        let n = self.node_count();
        let mut buf = Vec::with_capacity(n * 8);
        for c in &self.components {
            if c.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: c.len(),
                });
            }
            buf.clear();
            for v in c {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            out.write_all(&buf)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(mut input: R) -> Result<Self> {
        let mut head = [0u8; HEADER_LEN];
        input.read_exact(&mut head)?;
        if head[..8] != DUMP_MAGIC {
            return Err(Error::Format("bad grid dump magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(head[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(head[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != DUMP_VERSION {
            return Err(Error::Format(format!("unsupported grid dump version {version}")));
        }
        let dim = u32_at(12) as usize;
        if !(2..=3).contains(&dim) {
            return Err(Error::Format(format!("grid dump dimension {dim}")));
        }
        let mut counts = [0usize; 3];
        for (i, c) in counts.iter_mut().enumerate() {
            *c = usize::try_from(u64_at(16 + 8 * i)).map_err(|_| Error::Format("node count overflow".into()))?;
        }
        let origin = [f64_at(40), f64_at(48), f64_at(56)];
        let h = f64_at(64);
        let ncomp = u32_at(72) as usize;
        let n = counts
            .iter()
            .try_fold(1usize, |a, &c| a.checked_mul(c))
            .ok_or_else(|| Error::Format("node count overflow".into()))?;
        let mut components = Vec::with_capacity(ncomp);
        let mut buf = vec![0u8; n * 8];
        for _ in 0..ncomp {
            input.read_exact(&mut buf)?;
            components.push(
                buf.chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            );
        }
        Ok(Self {
            dim,
            counts,
            origin,
            h,
            components,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, DomainSpec};
    use crate::optimal_bc::ek_boundary_tensor;

    fn disk(h: f64) -> Domain<f64> {
        build_domain(&DomainSpec::disk(1.0, h)).unwrap()
    }

    fn lines(bytes: &[u8]) -> Vec<String> {
        String::from_utf8(bytes.to_vec()).unwrap().lines().map(String::from).collect()
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut out = Vec::new();
        NodeTable::<f64>::empty(2, &["div"]).write_csv(&mut out).unwrap();
        assert_eq!(lines(&out), vec!["x,y,boundary,div"]);
    }

    #[test]
    fn disk_field_has_one_row_per_node() {
        let d = disk(0.05);
        let f = ScalarField::from_fn(&d, |p| p[0]);
        let t = NodeTable::from_fields(&d, &["x_value"], &[&f]).unwrap();
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        let l = lines(&out);
        assert_eq!(l.len(), 1 + d.interior_len() + d.boundary_len());
        // roughly pi / h^2 lattice points
        let expected = std::f64::consts::PI / (0.05 * 0.05);
        assert!((d.interior_len() as f64 - expected).abs() < 0.1 * expected);
        let first: Vec<f64> = l[1].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(first[0], first[3]);
    }

    #[test]
    fn mismatched_names_are_rejected() {
        let d = disk(0.2);
        let f = ScalarField::zeros(&d);
        assert!(NodeTable::from_fields(&d, &["a", "b"], &[&f]).is_err());
    }

    #[test]
    fn boundary_tensor_rows() {
        let d: Domain<f64> = build_domain(&DomainSpec::ball(1.0, 0.25)).unwrap();
        let t = ek_boundary_tensor(&d, 0).unwrap();
        let mut out = Vec::new();
        write_boundary_tensor_csv(&d, &t, &mut out).unwrap();
        let l = lines(&out);
        assert_eq!(l[0], "x,y,z,nu_x,nu_y,nu_z,s11,s12,s13,s22,s23,s33");
        assert_eq!(l.len(), 1 + d.boundary_len());
        assert!(l[1..].iter().all(|r| r.split(',').count() == 12));
        assert!(write_boundary_tensor_csv(&d, &t[1..], Vec::new()).is_err());
    }

    #[test]
    fn equivalence_table() {
        let rows = vec![EquivalenceRow {
            pair: "vec2/op2".into(),
            lower: 1.0,
            upper: 2f64.sqrt(),
            observed_min: 1.0,
            observed_max: 1.25,
        }];
        let mut out = Vec::new();
        write_equivalence_csv(&rows, &mut out).unwrap();
        assert_eq!(
            lines(&out),
            vec!["pair,lower,upper,observed_min,observed_max", "vec2/op2,1.0,1.4142135623730951,1.0,1.25"]
        );
        let mut out = Vec::new();
        write_equivalence_csv(&[], &mut out).unwrap();
        assert_eq!(lines(&out).len(), 1);
    }

    #[test]
    fn dump_round_trip() {
        let d = disk(0.1);
        let f = ScalarField::from_fn(&d, |p| p[0] * p[1]);
        let g = ScalarField::from_fn(&d, |_| 1.0);
        let dump = GridDump::from_fields(&d, &[&f, &g]).unwrap();
        let mut bytes = Vec::new();
        dump.write(&mut bytes).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 2 * 8 * dump.node_count());
        assert_eq!(&bytes[..8], b"TBGRID\0\0");
        let back = GridDump::read(&bytes[..]).unwrap();
        assert_eq!(back.dim, 2);
        assert_eq!(back.counts, d.grid().counts);
        assert_eq!(back.h, 0.1);
        let finite = back.components[1].iter().filter(|v| v.is_finite()).count();
        assert_eq!(finite, d.interior_len());
        for (a, b) in back.components[0].iter().zip(&dump.components[0]) {
            assert!(a.to_bits() == b.to_bits());
        }
    }

    #[test]
    fn dump_rejects_garbage() {
        assert!(GridDump::read(&b"not a dump"[..]).is_err());
        let mut bytes = Vec::new();
        GridDump::from_fields(&disk(0.2), &[]).unwrap().write(&mut bytes).unwrap();
        bytes[0] = b'X';
        assert!(matches!(GridDump::read(&bytes[..]), Err(Error::Format(_))));
    }
}
