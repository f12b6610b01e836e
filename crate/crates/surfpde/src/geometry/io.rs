//! Point-cloud file formats: xyz-csv and ASCII PLY.
//!
//! CSV rows are `x,y,z[,nx,ny,nz]` with an optional header, '.' decimal
//! separator, UTF-8. PLY files are ASCII 1.0 with a `vertex` element carrying
//! x,y,z and optional nx,ny,nz properties.

use super::{estimate_normals, SurfaceNodeSet};
use crate::error::{Result, SurfError};
use nalgebra::Vector3;
use std::fs;
use std::io::Write as _;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointCloudFormat {
    XyzCsv,
    Ply,
}

impl PointCloudFormat {
    /// Infer the format from a file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("csv") | Some("xyz") => Ok(PointCloudFormat::XyzCsv),
            Some("ply") => Ok(PointCloudFormat::Ply),
            other => Err(SurfError::invalid(format!(
                "cannot infer point-cloud format from extension {other:?}; use .csv or .ply"
            ))),
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> SurfError {
    SurfError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> SurfError {
    SurfError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

const DEFAULT_NORMAL_KNN: usize = 12;

/// Load a point cloud; estimates normals when the file carries none.
pub fn load_point_cloud(path: &Path, format: PointCloudFormat) -> Result<SurfaceNodeSet> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let (points, normals) = match format {
        PointCloudFormat::XyzCsv => parse_xyz_csv(path, &text)?,
        PointCloudFormat::Ply => parse_ply(path, &text)?,
    };
    if points.len() < 4 {
        return Err(parse_err(
            path,
            0,
            format!("need at least 4 points, found {}", points.len()),
        ));
    }
    let normals = match normals {
        Some(n) => n,
        None => estimate_normals(&points, DEFAULT_NORMAL_KNN.min(points.len() - 1))?,
    };
    SurfaceNodeSet::new(points, normals, 3)
}

type ParsedCloud = (Vec<Vector3<f64>>, Option<Vec<Vector3<f64>>>);

fn parse_xyz_csv(path: &Path, text: &str) -> Result<ParsedCloud> {
    let mut points = Vec::new();
    let mut normals: Vec<Vector3<f64>> = Vec::new();
    let mut has_normals: Option<bool> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(|f| f.trim()).collect();
        let values: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        let values = match values {
            Ok(v) => v,
            Err(_) => {
                // A non-numeric first row is treated as a header.
                if idx == 0 {
                    continue;
                }
                return Err(parse_err(path, line_no, format!("non-numeric field in '{line}'")));
            }
        };
        match values.len() {
            3 | 6 => {}
            n => {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("expected 3 or 6 comma-separated values, found {n}"),
                ))
            }
        }
        let with_normals = values.len() == 6;
        match has_normals {
            None => has_normals = Some(with_normals),
            Some(prev) if prev != with_normals => {
                return Err(parse_err(path, line_no, "inconsistent column count"))
            }
            _ => {}
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(parse_err(path, line_no, "non-finite value"));
        }
        points.push(Vector3::new(values[0], values[1], values[2]));
        if with_normals {
            normals.push(Vector3::new(values[3], values[4], values[5]));
        }
    }
    let normals = if has_normals == Some(true) {
        Some(normals)
    } else {
        None
    };
    Ok((points, normals))
}

fn parse_ply(path: &Path, text: &str) -> Result<ParsedCloud> {
    let lines: Vec<&str> = text.lines().collect();
    let mut cursor = 0usize;
    let next = |cursor: &mut usize| -> Option<&str> {
        let out = lines.get(*cursor).map(|l| l.trim());
        *cursor += 1;
        out
    };
    if next(&mut cursor) != Some("ply") {
        return Err(parse_err(path, 1, "missing 'ply' magic line"));
    }
    let mut vertex_count: Option<usize> = None;
    let mut properties: Vec<String> = Vec::new();
    let mut in_vertex_element = false;
    loop {
        let line_no = cursor + 1;
        let line = match next(&mut cursor) {
            Some(l) => l,
            None => return Err(parse_err(path, cursor, "unexpected end of header")),
        };
        if line == "end_header" {
            break;
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                if tok.next() != Some("ascii") {
                    return Err(parse_err(path, line_no, "only ascii PLY is supported"));
                }
            }
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                let name = tok.next().unwrap_or("");
                if name == "vertex" {
                    let count: usize = tok
                        .next()
                        .and_then(|c| c.parse().ok())
                        .ok_or_else(|| parse_err(path, line_no, "bad vertex count"))?;
                    vertex_count = Some(count);
                    in_vertex_element = true;
                } else {
                    in_vertex_element = false;
                }
            }
            Some("property") => {
                if in_vertex_element {
                    let ty = tok.next().unwrap_or("");
                    if ty == "list" {
                        return Err(parse_err(path, line_no, "list property on vertex element"));
                    }
                    let name = tok
                        .next()
                        .ok_or_else(|| parse_err(path, line_no, "property without a name"))?;
                    properties.push(name.to_string());
                }
            }
            Some(other) => {
                return Err(parse_err(path, line_no, format!("unknown header line '{other}'")));
            }
            None => {}
        }
    }
    let header_end = cursor;
    let count =
        vertex_count.ok_or_else(|| parse_err(path, header_end, "no vertex element in header"))?;
    let find = |name: &str| properties.iter().position(|p| p == name);
    let (px, py, pz) = match (find("x"), find("y"), find("z")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => {
            return Err(parse_err(
                path,
                header_end,
                "vertex element lacks x,y,z properties",
            ))
        }
    };
    let normal_cols = match (find("nx"), find("ny"), find("nz")) {
        (Some(a), Some(b), Some(c)) => Some((a, b, c)),
        _ => None,
    };

    let mut points = Vec::with_capacity(count);
    let mut normals = Vec::with_capacity(if normal_cols.is_some() { count } else { 0 });
    for _ in 0..count {
        let line_no = cursor + 1;
        let line = match next(&mut cursor) {
            Some(l) => l,
            None => {
                return Err(parse_err(
                    path,
                    cursor,
                    format!("expected {count} vertex rows, file ended early"),
                ))
            }
        };
        let vals: std::result::Result<Vec<f64>, _> =
            line.split_whitespace().map(|t| t.parse::<f64>()).collect();
        let vals =
            vals.map_err(|_| parse_err(path, line_no, format!("non-numeric vertex row '{line}'")))?;
        if vals.len() != properties.len() {
            return Err(parse_err(
                path,
                line_no,
                format!(
                    "vertex row has {} values, header declares {}",
                    vals.len(),
                    properties.len()
                ),
            ));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(parse_err(path, line_no, "non-finite value"));
        }
        points.push(Vector3::new(vals[px], vals[py], vals[pz]));
        if let Some((nx, ny, nz)) = normal_cols {
            normals.push(Vector3::new(vals[nx], vals[ny], vals[nz]));
        }
    }
    Ok((points, normal_cols.map(|_| normals)))
}

/// Write a node set as xyz-csv with normals.
pub fn save_xyz_csv(node_set: &SurfaceNodeSet, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(node_set.len() * 64);
    out.push_str("x,y,z,nx,ny,nz\n");
    for (p, n) in node_set.points.iter().zip(node_set.normals.iter()) {
        out.push_str(&format!("{},{},{},{},{},{}\n", p.x, p.y, p.z, n.x, n.y, n.z));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Write a node set as ASCII PLY with any number of per-vertex scalar fields.
pub fn save_ply(
    node_set: &SurfaceNodeSet,
    path: &Path,
    scalars: &[(&str, &[f64])],
) -> Result<()> {
    for (name, values) in scalars {
        if values.len() != node_set.len() {
            return Err(SurfError::invalid(format!(
                "scalar field '{name}' length {} does not match node count {}",
                values.len(),
                node_set.len()
            )));
        }
    }
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut header = String::new();
    header.push_str("ply\nformat ascii 1.0\n");
    header.push_str(&format!("element vertex {}\n", node_set.len()));
    header.push_str(
        "property double x\nproperty double y\nproperty double z\n\
         property double nx\nproperty double ny\nproperty double nz\n",
    );
    for (name, _) in scalars {
        header.push_str(&format!("property double {name}\n"));
    }
    header.push_str("end_header\n");
    w.write_all(header.as_bytes()).map_err(|e| io_err(path, e))?;
    for (i, (p, n)) in node_set
        .points
        .iter()
        .zip(node_set.normals.iter())
        .enumerate()
    {
        let mut row = format!("{} {} {} {} {} {}", p.x, p.y, p.z, n.x, n.y, n.z);
        for (_, values) in scalars {
            row.push_str(&format!(" {}", values[i]));
        }
        row.push('\n');
        w.write_all(row.as_bytes()).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generators::fibonacci_sphere_nodes;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("surfpde-io-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let path = tmp("round.csv");
        fs::write(
            &path,
            "x,y,z,nx,ny,nz\n\
             0.25,0,0,0,0,1\n\
             1,0.5,0,0,0,1\n\
             0,1.25,0.125,0,0,1\n\
             1,1,0.0625,0,0,1\n",
        )
        .unwrap();
        let ns = load_point_cloud(&path, PointCloudFormat::XyzCsv).unwrap();
        assert_eq!(ns.len(), 4);
        assert_eq!(ns.points[0], Vector3::new(0.25, 0.0, 0.0));
        assert_eq!(ns.points[2], Vector3::new(0.0, 1.25, 0.125));
        let back = tmp("round-back.csv");
        save_xyz_csv(&ns, &back).unwrap();
        let again = load_point_cloud(&back, PointCloudFormat::XyzCsv).unwrap();
        assert_eq!(ns.points, again.points);
        assert_eq!(ns.normals, again.normals);
    }

    #[test]
    fn csv_without_normals_estimates_them() {
        let path = tmp("plane.csv");
        let mut text = String::new();
        for i in 0..8 {
            for j in 0..8 {
                text.push_str(&format!("{}.0,{}.0,0.0\n", i, j));
            }
        }
        fs::write(&path, text).unwrap();
        let ns = load_point_cloud(&path, PointCloudFormat::XyzCsv).unwrap();
        for n in &ns.normals {
            assert!((n.norm() - 1.0).abs() <= 1e-12);
            assert!((n.z.abs() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn csv_malformed_row_names_line() {
        let path = tmp("bad.csv");
        fs::write(&path, "0,0,0\n1,0,0\nbad,row,here\n0,1,0\n").unwrap();
        let err = load_point_cloud(&path, PointCloudFormat::XyzCsv).unwrap_err();
        match err {
            SurfError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn ply_round_trip() {
        let ns = fibonacci_sphere_nodes(64).unwrap();
        let path = tmp("sphere.ply");
        save_ply(&ns, &path, &[]).unwrap();
        let again = load_point_cloud(&path, PointCloudFormat::Ply).unwrap();
        assert_eq!(ns.points, again.points);
        assert_eq!(ns.normals, again.normals);
    }

    #[test]
    fn ply_with_scalar_field() {
        let ns = fibonacci_sphere_nodes(32).unwrap();
        let field: Vec<f64> = ns.points.iter().map(|p| p.x * p.y).collect();
        let field2: Vec<f64> = ns.points.iter().map(|p| p.z).collect();
        let path = tmp("field.ply");
        save_ply(&ns, &path, &[("u", &field), ("v", &field2)]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("property double u"));
        assert!(text.contains("property double v"));
        // Extra per-vertex properties are tolerated on load.
        let again = load_point_cloud(&path, PointCloudFormat::Ply).unwrap();
        assert_eq!(again.len(), 32);
    }

    #[test]
    fn too_few_points_rejected() {
        let path = tmp("few.csv");
        fs::write(&path, "0,0,0\n1,0,0\n2,0,0\n").unwrap();
        assert!(load_point_cloud(&path, PointCloudFormat::XyzCsv).is_err());
    }

    #[test]
    fn format_from_extension() {
        use std::path::PathBuf;
        assert_eq!(
            PointCloudFormat::from_path(&PathBuf::from("a.ply")).unwrap(),
            PointCloudFormat::Ply
        );
        assert_eq!(
            PointCloudFormat::from_path(&PathBuf::from("a.CSV")).unwrap(),
            PointCloudFormat::XyzCsv
        );
        assert!(PointCloudFormat::from_path(&PathBuf::from("a.bin")).is_err());
    }
}
