//! Wavefront OBJ reading and writing (`v` and `f` records only).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::TriMesh;
use crate::geom::Vec3;
use crate::{Error, Result};

/// Loads an OBJ file. Polygons are fan-triangulated; `vn`, `vt` and all
/// other records are ignored and unreferenced vertices are kept.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let reader = BufReader::new(File::open(path)?);
    parse_obj(reader, &name, path)
}

pub fn parse_obj(reader: impl BufRead, name: &str, origin: &Path) -> Result<TriMesh> {
    let malformed = |line: usize, message: String| Error::Malformed {
        path: PathBuf::from(origin),
        line,
        message,
    };

    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.split('#').next().unwrap_or("");
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for c in &mut xyz {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| malformed(lineno, "vertex needs 3 coordinates".into()))?;
                    *c = tok
                        .parse::<f64>()
                        .map_err(|e| malformed(lineno, format!("bad coordinate `{tok}`: {e}")))?;
                    if !c.is_finite() {
                        return Err(malformed(lineno, format!("non-finite coordinate `{tok}`")));
                    }
                }
                vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let mut poly = Vec::with_capacity(4);
                for tok in tokens {
                    let idx_tok = tok.split('/').next().unwrap_or("");
                    let idx: i64 = idx_tok
                        .parse()
                        .map_err(|e| malformed(lineno, format!("bad face index `{tok}`: {e}")))?;
                    let resolved = match idx {
                        i if i > 0 => i - 1,
                        i if i < 0 => vertices.len() as i64 + i,
                        _ => return Err(malformed(lineno, "face index 0 is invalid".into())),
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(malformed(
                            lineno,
                            format!("face index {idx} out of range ({} vertices)", vertices.len()),
                        ));
                    }
                    poly.push(resolved as usize);
                }
                if poly.len() < 3 {
                    return Err(malformed(lineno, "face needs at least 3 vertices".into()));
                }
                for k in 1..poly.len() - 1 {
                    triangles.push([poly[0], poly[k], poly[k + 1]]);
                }
            }
            _ => {}
        }
    }

    if triangles.is_empty() {
        return Err(Error::EmptyMesh(name.to_string()));
    }
    TriMesh::new(name, vertices, triangles)
}

/// Writes `v`/`f` records with six decimal digits per coordinate.
pub fn write_obj(mesh: &TriMesh, mut out: impl Write) -> Result<()> {
    writeln!(out, "# {}", mesh.name)?;
    for v in &mesh.vertices {
        writeln!(out, "v {:.6} {:.6} {:.6}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_obj(mesh, &mut w)?;
    w.flush()?;
    Ok(())
}
