//! Artifact formats.
//!
//! Field CSV: header `i,j,z1,z2,value`, one row per entry in row-major
//! order, `(z1, z2)` the node or corner position of entry `(i, j)`.
//!
//! Field binary (little endian):
//!
//! | bytes | content |
//! |---|---|
//! | 4 | magic `FBSF` |
//! | 4 | format version, `u32` = 1 |
//! | 1 | placement, `0` node, `1` corner |
//! | 16 | `T1`, `T2` as `f64` |
//! | 16 | `n1`, `n2` as `u64` |
//! | 8·n1·n2 | values as `f64`, row-major |
//!
//! Trace CSV: header `z1,z2,sigma,pi,se,n_eff`.
//!
//! Floats are written in shortest round-trip form, so text artifacts are
//! reproducible byte for byte.

use crate::filter::TraceRow;
use crate::lattice::{Field2D, Grid2D, Placement};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub const FIELD_MAGIC: &[u8; 4] = b"FBSF";
pub const FIELD_VERSION: u32 = 1;
pub const FIELD_CSV_HEADER: &str = "i,j,z1,z2,value";
pub const TRACE_CSV_HEADER: &str = "z1,z2,sigma,pi,se,n_eff";

pub fn field_to_csv(field: &Field2D) -> String {
    let g = field.grid;
    let mut s = String::with_capacity(32 * g.cells());
    s.push_str(FIELD_CSV_HEADER);
    s.push('\n');
    for i in 0..g.n1 {
        for j in 0..g.n2 {
            let z = field.position(i, j);
            writeln!(s, "{i},{j},{},{},{}", z.z1, z.z2, field.get(i, j)).unwrap();
        }
    }
    s
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

/// Parses a field CSV written for `grid` and `placement`.
pub fn field_from_csv(text: &str, grid: Grid2D, placement: Placement) -> io::Result<Field2D> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(FIELD_CSV_HEADER) {
        return Err(bad("missing field CSV header"));
    }
    let mut f = Field2D::zeros(grid, placement);
    let mut count = 0;
    for (k, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(bad(format!("line {}: expected 5 columns", k + 2)));
        }
        let i: usize = cols[0].parse().map_err(|_| bad(format!("line {}: bad i", k + 2)))?;
        let j: usize = cols[1].parse().map_err(|_| bad(format!("line {}: bad j", k + 2)))?;
        let v: f64 = cols[4].parse().map_err(|_| bad(format!("line {}: bad value", k + 2)))?;
        if i >= grid.n1 || j >= grid.n2 {
            return Err(bad(format!("line {}: index out of range", k + 2)));
        }
        f.set(i, j, v);
        count += 1;
    }
    if count != grid.cells() {
        return Err(bad(format!("expected {} rows, found {count}", grid.cells())));
    }
    Ok(f)
}

pub fn field_to_binary(field: &Field2D) -> Vec<u8> {
    let g = field.grid;
    let mut b = Vec::with_capacity(45 + 8 * g.cells());
    b.extend_from_slice(FIELD_MAGIC);
    b.extend_from_slice(&FIELD_VERSION.to_le_bytes());
    b.push(match field.placement {
        Placement::Node => 0,
        Placement::Corner => 1,
    });
    b.extend_from_slice(&g.t1.to_le_bytes());
    b.extend_from_slice(&g.t2.to_le_bytes());
    b.extend_from_slice(&(g.n1 as u64).to_le_bytes());
    b.extend_from_slice(&(g.n2 as u64).to_le_bytes());
    for v in &field.values {
        b.extend_from_slice(&v.to_le_bytes());
    }
    b
}

pub fn field_from_binary(bytes: &[u8]) -> io::Result<Field2D> {
    let take = |at: usize, n: usize| bytes.get(at..at + n).ok_or_else(|| bad("truncated field file"));
    if take(0, 4)? != FIELD_MAGIC {
        return Err(bad("not a field file"));
    }
    let version = u32::from_le_bytes(take(4, 4)?.try_into().unwrap());
    if version != FIELD_VERSION {
        return Err(bad(format!("unsupported field format version {version}")));
    }
    let placement = match take(8, 1)?[0] {
        0 => Placement::Node,
        1 => Placement::Corner,
        p => return Err(bad(format!("unknown placement tag {p}"))),
    };
    let f64_at = |at: usize| -> io::Result<f64> { Ok(f64::from_le_bytes(take(at, 8)?.try_into().unwrap())) };
    let u64_at = |at: usize| -> io::Result<u64> { Ok(u64::from_le_bytes(take(at, 8)?.try_into().unwrap())) };
    let (t1, t2) = (f64_at(9)?, f64_at(17)?);
    let (n1, n2) = (u64_at(25)? as usize, u64_at(33)? as usize);
    let grid = Grid2D::new(t1, t2, n1, n2).map_err(|e| bad(e.to_string()))?;
    let n = n1.checked_mul(n2).ok_or_else(|| bad("grid too large"))?;
    if bytes.len() != 41 + 8 * n {
        return Err(bad(format!("expected {} bytes, found {}", 41 + 8 * n, bytes.len())));
    }
    let values = (0..n).map(|k| f64_at(41 + 8 * k)).collect::<io::Result<Vec<_>>>()?;
    Ok(Field2D { grid, placement, values })
}

pub fn trace_to_csv(rows: &[TraceRow]) -> String {
    let mut s = String::from(TRACE_CSV_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(s, "{},{},{},{},{},{}", r.z1, r.z2, r.sigma, r.pi, r.se, r.n_eff).unwrap();
    }
    s
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

/// The only writer of a run directory. Files are written in call order and
/// listed in [`ArtifactWriter::written`].
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    written: Vec<String>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(ArtifactWriter { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> io::Result<()> {
        fs::write(self.dir.join(name), data)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn text(&mut self, name: &str, data: &str) -> io::Result<()> {
        self.bytes(name, data.as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        self.text(name, &to_json(value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(grid: Grid2D, placement: Placement) -> Field2D {
        Field2D::from_fn(grid, placement, |i, j| (i as f64 * 0.37 - j as f64 * 1.1).sin() / 3.0)
    }

    #[test]
    fn csv_layout() {
        let g = Grid2D::new(1.0, 2.0, 2, 2).unwrap();
        let f = Field2D::from_fn(g, Placement::Node, |i, j| (i * 2 + j) as f64);
        let csv = field_to_csv(&f);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "i,j,z1,z2,value");
        assert_eq!(lines[1], "0,0,0.25,0.5,0");
        assert_eq!(lines[4], "1,1,0.75,1.5,3");
        let c = Field2D::from_fn(g, Placement::Corner, |_, _| 1.5);
        assert_eq!(field_to_csv(&c).lines().nth(4).unwrap(), "1,1,1,2,1.5");
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid2D::new(1.0, 1.5, 5, 3).unwrap();
        let f = sample(g, Placement::Corner);
        assert_eq!(field_from_csv(&field_to_csv(&f), g, Placement::Corner).unwrap(), f);
        assert!(field_from_csv("a,b\n", g, Placement::Corner).is_err());
    }

    #[test]
    fn binary_header() {
        let g = Grid2D::new(1.0, 2.0, 3, 2).unwrap();
        let b = field_to_binary(&sample(g, Placement::Corner));
        assert_eq!(&b[..4], b"FBSF");
        assert_eq!(b[8], 1);
        assert_eq!(b.len(), 41 + 8 * 6);
        assert!(field_from_binary(&b[..40]).is_err());
        let mut wrong = b.clone();
        wrong[4] = 9;
        assert!(field_from_binary(&wrong).is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip(n1 in 1usize..12, n2 in 1usize..12, t1 in 0.1f64..5.0, corner in any::<bool>(), vals in proptest::collection::vec(-1e6f64..1e6, 144)) {
            let g = Grid2D::new(t1, 1.0, n1, n2).unwrap();
            let p = if corner { Placement::Corner } else { Placement::Node };
            let f = Field2D::from_fn(g, p, |i, j| vals[i * 12 + j]);
            prop_assert_eq!(field_from_binary(&field_to_binary(&f)).unwrap(), f);
        }
    }

    #[test]
    fn trace_layout() {
        let r = TraceRow { a: 1, b: 2, z1: 0.5, z2: 1.0, sigma: 0.25, pi: 0.5, se: 0.01, sigma_se: 0.02, n_eff: 99.5 };
        assert_eq!(trace_to_csv(&[r]), "z1,z2,sigma,pi,se,n_eff\n0.5,1,0.25,0.5,0.01,99.5\n");
    }

    #[test]
    fn writer_records_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::create(&dir.path().join("run")).unwrap();
        w.text("a.txt", "x").unwrap();
        w.json("b.json", &[1, 2]).unwrap();
        assert_eq!(w.written(), ["a.txt", "b.json"]);
        assert_eq!(fs::read_to_string(w.dir().join("b.json")).unwrap(), "[\n  1,\n  2\n]\n");
    }
}
