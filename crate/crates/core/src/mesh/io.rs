//! Text mesh format.
//!
//! ```text
//! # comments and blank lines are ignored
//! tetmesh <vertex count> <tet count>
//! v <x> <y> <z>              one line per vertex, in index order
//! t <i> <j> <k> <l>          0-based, positively oriented
//! fixed <i> ...              zero or more lines, concatenated
//! region <name> <i> ...      one line per contact region
//! obs <i> ...                ordered, concatenated across lines
//! ```
//!
//! Coordinates are written with Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces every `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::{ContactRegion, MeshError, TetMesh};
use crate::{Error, Vec3};

pub(crate) fn to_text(mesh: &TetMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "tetmesh {} {}", mesh.vertex_count(), mesh.tets().len());
    for v in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in mesh.tets() {
        let _ = writeln!(s, "t {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    let join = |ids: &[usize]| ids.iter().map(|i| format!(" {i}")).collect::<String>();
    let _ = writeln!(s, "fixed{}", join(mesh.fixed_ids()));
    for r in mesh.contact_regions() {
        let _ = writeln!(s, "region {}{}", r.name, join(&r.vertices));
    }
    let _ = writeln!(s, "obs{}", join(mesh.observation_ids()));
    s
}

pub fn write_mesh(mesh: &TetMesh) -> String {
    to_text(mesh)
}

pub fn parse_mesh(text: &str) -> Result<TetMesh, MeshError> {
    let mut header: Option<(usize, usize)> = None;
    let mut vertices = Vec::new();
    let mut tets = Vec::new();
    let mut fixed = Vec::new();
    let mut regions = Vec::new();
    let mut obs = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| MeshError::Parse { line: line_no, message };
        let mut words = line.split_whitespace();
        let keyword = words.next().unwrap_or_default();
        let rest: Vec<&str> = words.collect();
        let ints = |items: &[&str]| -> Result<Vec<usize>, MeshError> {
            items
                .iter()
                .map(|w| w.parse::<usize>().map_err(|_| err(format!("expected a vertex index, found {w:?}"))))
                .collect()
        };
        if keyword != "tetmesh" && header.is_none() {
            return Err(err("missing `tetmesh <vertices> <tets>` header".into()));
        }
        match keyword {
            "tetmesh" => {
                if header.is_some() {
                    return Err(err("duplicate header".into()));
                }
                let c = ints(&rest)?;
                if c.len() != 2 {
                    return Err(err("header needs exactly two counts".into()));
                }
                header = Some((c[0], c[1]));
            }
            "v" => {
                if rest.len() != 3 {
                    return Err(err(format!("vertex needs 3 coordinates, found {}", rest.len())));
                }
                let mut p = [0.0; 3];
                for (slot, w) in p.iter_mut().zip(&rest) {
                    *slot = w.parse::<f64>().map_err(|_| err(format!("bad coordinate {w:?}")))?;
                }
                vertices.push(Vec3::from(p));
            }
            "t" => {
                let c = ints(&rest)?;
                if c.len() != 4 {
                    return Err(err(format!("tet needs 4 indices, found {}", c.len())));
                }
                tets.push([c[0], c[1], c[2], c[3]]);
            }
            "fixed" => fixed.extend(ints(&rest)?),
            "region" => {
                let (name, ids) = rest.split_first().ok_or_else(|| err("region needs a name".into()))?;
                regions.push(ContactRegion { name: (*name).to_string(), vertices: ints(ids)? });
            }
            "obs" => obs.extend(ints(&rest)?),
            other => return Err(err(format!("unknown record {other:?}"))),
        }
    }
    let (nv, nt) = header.ok_or(MeshError::Parse { line: 0, message: "empty mesh file".into() })?;
    if vertices.len() != nv || tets.len() != nt {
        return Err(MeshError::Parse {
            line: 1,
            message: format!(
                "header declares {nv} vertices and {nt} tets, file has {} and {}",
                vertices.len(),
                tets.len()
            ),
        });
    }
    TetMesh::new(vertices, tets, fixed, regions, obs)
}

pub fn save_mesh(mesh: &TetMesh, path: impl AsRef<Path>) -> Result<(), Error> {
    let path = path.as_ref();
    std::fs::write(path, to_text(mesh)).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TetMesh, Error> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(parse_mesh(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rpp, LatticeBox, RppRegion, RppSpec};

    fn rpp() -> TetMesh {
        generate_rpp(&RppSpec {
            long_side: 1.0,
            short_side: 0.2,
            spacing: 0.1,
            fixed: vec![LatticeBox { min: [0, 0, 0], max: [0, 2, 2] }],
            regions: vec![RppRegion {
                name: "tip".into(),
                boxes: vec![LatticeBox { min: [10, 0, 0], max: [10, 2, 2] }],
            }],
            observation: vec![[3, 0, 0], [6, 2, 2], [9, 0, 2]],
        })
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = rpp();
        let back = parse_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.content_hash(), m.content_hash());
    }

    #[test]
    fn odd_coordinates_survive() {
        let v = vec![
            Vec3::new(0.1 + 0.2, 1e-300, -0.0),
            Vec3::new(1.0 / 3.0, 0.0, 0.0),
            Vec3::new(0.0, std::f64::consts::PI, 0.0),
            Vec3::new(0.0, 0.0, 7.000000000000001),
        ];
        let m = TetMesh::new(v, vec![[0, 1, 2, 3]], vec![], vec![], vec![]).unwrap();
        let back = parse_mesh(&write_mesh(&m)).unwrap();
        for (a, b) in m.vertices().iter().zip(back.vertices()) {
            for k in 0..3 {
                assert_eq!(a[k].to_bits(), b[k].to_bits());
            }
        }
    }

    #[test]
    fn load_reports_invariant_violations() {
        let good = "tetmesh 4 1\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n";
        let err = parse_mesh(&format!("{good}t 0 1 2 4\n")).unwrap_err();
        assert!(err.to_string().contains("index out of range"), "{err}");
        let err = parse_mesh(&format!("{good}t 0 2 1 3\n")).unwrap_err();
        assert!(err.to_string().contains("non-positive volume"), "{err}");
        let err = parse_mesh("tetmesh 4 1\nv 0 0\n").unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 2, .. }));
        let err = parse_mesh(&format!("{good}t 0 1 2 3\nbogus 1\n")).unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 7, .. }));
        assert!(parse_mesh("tetmesh 5 1\nv 0 0 0\n").is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rpp.tmesh");
        let m = rpp();
        save_mesh(&m, &path).unwrap();
        assert_eq!(load_mesh(&path).unwrap(), m);
    }
}
