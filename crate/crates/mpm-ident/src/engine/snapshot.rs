//! Particle snapshots and their CSV form.
//!
//! One file per frame, `frame_%05d.csv`, header `id,x,y,z,vx,vy,vz,mass`,
//! every value printed with 17 significant digits so a read-back is exact.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::math::Vec3;

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub frame: usize,
    pub step: usize,
    pub time: f64,
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub masses: Vec<f64>,
}

impl Snapshot {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

pub trait SnapshotSink {
    fn emit(&mut self, snap: &Snapshot) -> Result<()>;
}

/// Keeps every emitted snapshot, tangents included.
#[derive(Default)]
pub struct MemorySink {
    pub snapshots: Vec<Snapshot>,
}

impl SnapshotSink for MemorySink {
    fn emit(&mut self, snap: &Snapshot) -> Result<()> {
        self.snapshots.push(snap.clone());
        Ok(())
    }
}

/// Writes `frame_%05d.csv` files into a directory.
pub struct CsvDirSink {
    dir: PathBuf,
    pub frames_written: usize,
}

impl CsvDirSink {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(CsvDirSink { dir, frames_written: 0 })
    }

    pub fn frame_path(dir: &Path, frame: usize) -> PathBuf {
        dir.join(format!("frame_{frame:05}.csv"))
    }
}

impl SnapshotSink for CsvDirSink {
    fn emit(&mut self, snap: &Snapshot) -> Result<()> {
        let path = Self::frame_path(&self.dir, snap.frame);
        write_snapshot_csv(&path, snap)?;
        self.frames_written += 1;
        Ok(())
    }
}

pub fn write_snapshot_csv(path: &Path, snap: &Snapshot) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writeln!(w, "id,x,y,z,vx,vy,vz,mass").map_err(io_err)?;
    for i in 0..snap.len() {
        let p = snap.positions[i].values();
        let v = snap.velocities[i].values();
        writeln!(
            w,
            "{i},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            p[0], p[1], p[2], v[0], v[1], v[2], snap.masses[i]
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_snapshot_csv(path: &Path) -> Result<Snapshot> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let display = path.display().to_string();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "id,x,y,z,vx,vy,vz,mass" => {}
        _ => {
            return Err(Error::ParseLine {
                path: display,
                line: 1,
                message: "missing snapshot header".into(),
            })
        }
    }
    let mut positions = Vec::new();
    let mut velocities = Vec::new();
    let mut masses = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::ParseLine {
                path: display,
                line: lineno + 1,
                message: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| Error::ParseLine {
                path: display.clone(),
                line: lineno + 1,
                message: format!("bad number `{s}`"),
            })
        };
        let id: usize = fields[0].trim().parse().map_err(|_| Error::ParseLine {
            path: display.clone(),
            line: lineno + 1,
            message: format!("bad id `{}`", fields[0]),
        })?;
        if id != positions.len() {
            return Err(Error::ParseLine {
                path: display.clone(),
                line: lineno + 1,
                message: format!("ids must be dense and ordered; expected {}, found {id}", positions.len()),
            });
        }
        positions.push(Vec3::from_f64(parse(fields[1])?, parse(fields[2])?, parse(fields[3])?));
        velocities.push(Vec3::from_f64(parse(fields[4])?, parse(fields[5])?, parse(fields[6])?));
        masses.push(parse(fields[7])?);
    }
    Ok(Snapshot { frame: 0, step: 0, time: 0.0, positions, velocities, masses })
}

/// Sorted list of `frame_%05d.csv` paths in a directory.
pub fn list_frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("frame_") && n.ends_with(".csv"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    Ok(paths)
}
