//! File output: VTK snapshots, diagnostics and field CSV, study tables.
//!
//! Every file carries the configuration and mesh hashes. VTK files may
//! carry a wall-clock stamp in the title line; everything else is a pure
//! function of the inputs.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fields::{P0Scalar, P0Vector, P1ncField, Rt0Flux};
use crate::mesh::Mesh;
use crate::scheme::{SchemeState, Sink, StabilityRecord};

/// Hashes identifying the inputs of an output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
    pub mesh_hash: String,
}

impl Provenance {
    pub fn comment(&self) -> String {
        format!("# config={} mesh={}", self.config_hash, self.mesh_hash)
    }
}

/// Legacy VTK unstructured grid with cell velocity and cell-averaged
/// pressure; the time is stored as field data.
pub fn vtk_snapshot(state: &SchemeState, mesh: &Mesh, prov: &Provenance, stamp: Option<&str>) -> String {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = write!(s, "fvns step {} config {} mesh {}", state.step, prov.config_hash, prov.mesh_hash);
    if let Some(st) = stamp {
        let _ = write!(s, " written {st}");
    }
    s.push_str("\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "FIELD FieldData 1\nTIME 1 1 double\n{:?}", state.time);
    let _ = writeln!(s, "POINTS {} double", mesh.vertices().len());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?} 0", v[0], v[1]);
    }
    let nc = mesh.n_cells();
    let _ = writeln!(s, "CELLS {} {}", nc, 4 * nc);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t.vertices[0], t.vertices[1], t.vertices[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "CELL_DATA {nc}\nVECTORS velocity double");
    for i in 0..nc {
        let u = state.u_curr.get(i);
        let _ = writeln!(s, "{:?} {:?} 0", u[0], u[1]);
    }
    s.push_str("SCALARS pressure double 1\nLOOKUP_TABLE default\n");
    for i in 0..nc {
        let _ = writeln!(s, "{:?}", state.p_curr.cell_average(mesh, i));
    }
    s
}

/// Seconds since the Unix epoch, for VTK title stamps.
pub fn wall_clock_stamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix {secs}")
}

fn header(space: &str, prov: &Provenance, columns: &str) -> String {
    format!("# space={space} config={} mesh={}\n{columns}\n", prov.config_hash, prov.mesh_hash)
}

pub fn p0_scalar_csv(v: &P0Scalar, prov: &Provenance) -> String {
    let mut s = header("P0S", prov, "entity_id,value");
    for (i, x) in v.0.iter().enumerate() {
        let _ = writeln!(s, "{i},{x:?}");
    }
    s
}

pub fn p0_vector_csv(v: &P0Vector, prov: &Provenance) -> String {
    let mut s = header("P0V", prov, "entity_id,vx,vy");
    for i in 0..v.len() {
        let _ = writeln!(s, "{i},{:?},{:?}", v.x[i], v.y[i]);
    }
    s
}

pub fn p1nc_csv(q: &P1ncField, prov: &Provenance) -> String {
    let mut s = header("P1NC", prov, "entity_id,value");
    for (i, x) in q.values.iter().enumerate() {
        let _ = writeln!(s, "{i},{x:?}");
    }
    s
}

pub fn rt0_csv(f: &Rt0Flux, prov: &Provenance) -> String {
    let mut s = header("RT0", prov, "entity_id,value");
    for (i, x) in f.0.iter().enumerate() {
        let _ = writeln!(s, "{i},{x:?}");
    }
    s
}

/// Reads a field CSV back: the space tag and the value columns per entity.
pub fn read_field_csv(text: &str) -> Result<(String, Vec<Vec<f64>>)> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| Error::parse(1, "empty field file"))?;
    let space = first
        .split_whitespace()
        .find_map(|w| w.strip_prefix("space="))
        .ok_or_else(|| Error::parse(1, "missing space tag"))?
        .to_string();
    lines.next().ok_or_else(|| Error::parse(2, "missing column header"))?;
    let mut rows = Vec::new();
    for (i, line) in lines {
        let mut cols = line.split(',');
        let id: usize = cols
            .next()
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| Error::parse(i + 1, "bad entity id"))?;
        if id != rows.len() {
            return Err(Error::parse(i + 1, format!("entity {id} out of order")));
        }
        let vals = cols
            .map(|c| c.trim().parse::<f64>().map_err(|_| Error::parse(i + 1, format!("bad value `{c}`"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(vals);
    }
    Ok((space, rows))
}

/// Diagnostics CSV: one row per time level.
pub fn diagnostics_csv(records: &[StabilityRecord], prov: &Provenance) -> String {
    let mut s = format!("{}\n{}\n", prov.comment(), StabilityRecord::HEADER);
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Study table `level,h,k,err_l2l2_u,eoc` preceded by a provenance comment.
pub fn study_csv(study: &crate::verification::ConvergenceStudy, prov: &Provenance) -> String {
    format!("{}\n{}", prov.comment(), study.csv())
}

/// Reads `(h, err)` columns from a study CSV.
pub fn read_study_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut h, mut e) = (Vec::new(), Vec::new());
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            if line.trim() != "level,h,k,err_l2l2_u,eoc" {
                return Err(Error::parse(i + 1, "unexpected study header"));
            }
            seen_header = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Error::parse(i + 1, "expected 5 columns"));
        }
        let num = |c: &str| c.parse::<f64>().map_err(|_| Error::parse(i + 1, format!("bad number `{c}`")));
        h.push(num(cols[1])?);
        e.push(num(cols[3])?);
    }
    Ok((h, e))
}

/// Streams diagnostics rows to a CSV file.
pub struct DiagnosticsSink {
    out: BufWriter<File>,
}

impl DiagnosticsSink {
    pub fn create(path: &Path, prov: &Provenance) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}\n{}", prov.comment(), StabilityRecord::HEADER)?;
        Ok(DiagnosticsSink { out })
    }
}

impl Sink for DiagnosticsSink {
    fn step(&mut self, _state: &SchemeState, record: &StabilityRecord, _mesh: &Mesh) -> Result<()> {
        writeln!(self.out, "{}", record.csv_row())?;
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Writes `snapshot_NNNNN.vtk` files into a directory.
pub struct VtkSink {
    dir: PathBuf,
    prov: Provenance,
    timestamp: bool,
    pub written: Vec<PathBuf>,
}

impl VtkSink {
    pub fn new(dir: &Path, prov: Provenance, timestamp: bool) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(VtkSink {
            dir: dir.to_path_buf(),
            prov,
            timestamp,
            written: Vec::new(),
        })
    }
}

impl Sink for VtkSink {
    fn snapshot(&mut self, state: &SchemeState, mesh: &Mesh) -> Result<()> {
        let stamp = self.timestamp.then(wall_clock_stamp);
        let path = self.dir.join(format!("snapshot_{:05}.vtk", state.step));
        fs::write(&path, vtk_snapshot(state, mesh, &self.prov, stamp.as_deref()))?;
        self.written.push(path);
        Ok(())
    }
}
