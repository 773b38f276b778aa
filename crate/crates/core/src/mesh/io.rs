//! Triangle `.node`/`.ele` and ASCII OFF readers and writers.

use std::fmt::Write as _;

use super::{EmbeddedMesh, Point};
use crate::error::{Error, Result};

/// File-level details of a `.node`/`.ele` pair that are not part of the
/// mesh itself but are needed to write the files back faithfully.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeEleMeta {
    /// 0 or 1, detected from the first node index.
    pub index_base: usize,
    /// Per-node boundary markers, if the `.node` file carried them.
    pub markers: Option<Vec<i64>>,
}

/// Non-empty, comment-stripped lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(tokens: &[&str], idx: usize, line: usize, what: &str) -> Result<T> {
    let tok = tokens
        .get(idx)
        .ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what} from {tok:?}")))
}

pub fn parse_node_ele(node_text: &str, ele_text: &str) -> Result<EmbeddedMesh> {
    parse_node_ele_with_meta(node_text, ele_text).map(|(mesh, _)| mesh)
}

pub fn parse_node_ele_with_meta(node_text: &str, ele_text: &str) -> Result<(EmbeddedMesh, NodeEleMeta)> {
    let mut lines = content_lines(node_text);
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty .node file"))?;
    let count: usize = field(&header, 0, hline, "point count")?;
    let dim: usize = field(&header, 1, hline, "dimension")?;
    let nattrs: usize = field(&header, 2, hline, "attribute count")?;
    let nmarkers: usize = field(&header, 3, hline, "marker count")?;
    if dim != 2 {
        return Err(parse_err(hline, format!("dimension must be 2, found {dim}")));
    }
    if nmarkers > 1 {
        return Err(parse_err(hline, format!("at most one boundary marker allowed, found {nmarkers}")));
    }

    let mut coords = Vec::with_capacity(count);
    let mut markers = Vec::new();
    let mut base = 0;
    for k in 0..count {
        let (line, tokens) = lines
            .next()
            .ok_or_else(|| parse_err(hline, format!("expected {count} points, found {k}")))?;
        let index: usize = field(&tokens, 0, line, "point index")?;
        if k == 0 {
            if index > 1 {
                return Err(parse_err(line, format!("first point index must be 0 or 1, found {index}")));
            }
            base = index;
        }
        if index != k + base {
            return Err(parse_err(line, format!("expected point index {}, found {index}", k + base)));
        }
        let x: f64 = field(&tokens, 1, line, "x coordinate")?;
        let y: f64 = field(&tokens, 2, line, "y coordinate")?;
        if !(x.is_finite() && y.is_finite()) {
            return Err(parse_err(line, "non-finite coordinate"));
        }
        if tokens.len() != 3 + nattrs + nmarkers {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", 3 + nattrs + nmarkers, tokens.len()),
            ));
        }
        if nmarkers == 1 {
            markers.push(field(&tokens, 3 + nattrs, line, "boundary marker")?);
        }
        coords.push(Point::new(x, y));
    }

    let mut lines = content_lines(ele_text);
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty .ele file"))?;
    let ntri: usize = field(&header, 0, hline, "triangle count")?;
    let per: usize = field(&header, 1, hline, "nodes per triangle")?;
    let eattrs: usize = field(&header, 2, hline, "attribute count")?;
    if per != 3 {
        return Err(parse_err(hline, format!("only 3-node triangles are supported, found {per}")));
    }
    let mut faces = Vec::with_capacity(ntri);
    for k in 0..ntri {
        let (line, tokens) = lines
            .next()
            .ok_or_else(|| parse_err(hline, format!("expected {ntri} triangles, found {k}")))?;
        if tokens.len() != 4 + eattrs {
            return Err(parse_err(line, format!("expected {} fields, found {}", 4 + eattrs, tokens.len())));
        }
        let mut face = [0usize; 3];
        for (c, slot) in face.iter_mut().enumerate() {
            let raw: usize = field(&tokens, 1 + c, line, "vertex index")?;
            if raw < base || raw - base >= count {
                return Err(parse_err(
                    line,
                    format!("vertex index {raw} out of range for {count} points"),
                ));
            }
            *slot = raw - base;
        }
        faces.push(face);
    }

    let mesh = EmbeddedMesh::from_faces(coords, faces)?;
    let meta = NodeEleMeta {
        index_base: base,
        markers: (nmarkers == 1).then_some(markers),
    };
    Ok((mesh, meta))
}

/// Serialize to `(node_text, ele_text)`.
pub fn write_node_ele(mesh: &EmbeddedMesh, meta: &NodeEleMeta) -> (String, String) {
    let base = meta.index_base;
    let coords = mesh.coords();
    let markers = meta.markers.as_ref().filter(|m| m.len() == coords.len());
    let mut node = String::new();
    let _ = writeln!(node, "{} 2 0 {}", coords.len(), usize::from(markers.is_some()));
    for (i, p) in coords.iter().enumerate() {
        let _ = write!(node, "{} {} {}", i + base, p.x, p.y);
        if let Some(m) = markers {
            let _ = write!(node, " {}", m[i]);
        }
        node.push('\n');
    }
    let faces = mesh.topology().faces();
    let mut ele = String::new();
    let _ = writeln!(ele, "{} 3 0", faces.len());
    for (i, f) in faces.iter().enumerate() {
        let _ = writeln!(ele, "{} {} {} {}", i + base, f[0] + base, f[1] + base, f[2] + base);
    }
    (node, ele)
}

pub fn parse_off(text: &str) -> Result<EmbeddedMesh> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| Error::Format("empty OFF file".into()))?;
    if header[0] != "OFF" {
        return Err(Error::Format(format!("line {hline}: missing OFF header")));
    }
    // Counts may follow the keyword on the same line.
    let (cline, counts) = if header.len() > 1 {
        (hline, header[1..].to_vec())
    } else {
        lines
            .next()
            .ok_or_else(|| Error::Format("missing OFF counts".into()))?
    };
    let nv: usize = field(&counts, 0, cline, "vertex count")?;
    let nf: usize = field(&counts, 1, cline, "face count")?;

    let mut coords = Vec::with_capacity(nv);
    for k in 0..nv {
        let (line, tokens) = lines
            .next()
            .ok_or_else(|| Error::Format(format!("expected {nv} vertices, found {k}")))?;
        let x: f64 = field(&tokens, 0, line, "x coordinate")?;
        let y: f64 = field(&tokens, 1, line, "y coordinate")?;
        if tokens.len() > 2 {
            let z: f64 = field(&tokens, 2, line, "z coordinate")?;
            if z.abs() > 1e-12 {
                return Err(Error::Format(format!("line {line}: nonzero z coordinate {z}")));
            }
        }
        coords.push(Point::new(x, y));
    }
    let mut faces = Vec::with_capacity(nf);
    for k in 0..nf {
        let (line, tokens) = lines
            .next()
            .ok_or_else(|| Error::Format(format!("expected {nf} faces, found {k}")))?;
        let arity: usize = field(&tokens, 0, line, "face arity")?;
        if arity != 3 {
            return Err(Error::Format(format!("line {line}: face with {arity} vertices, only triangles are supported")));
        }
        let mut face = [0usize; 3];
        for (c, slot) in face.iter_mut().enumerate() {
            *slot = field(&tokens, 1 + c, line, "vertex index")?;
        }
        faces.push(face);
    }
    EmbeddedMesh::from_faces(coords, faces)
}

pub fn write_off(mesh: &EmbeddedMesh) -> String {
    let mut out = String::from("OFF\n");
    let faces = mesh.topology().faces();
    let _ = writeln!(out, "{} {} {}", mesh.coords().len(), faces.len(), mesh.topology().edge_count());
    for p in mesh.coords() {
        let _ = writeln!(out, "{} {} 0", p.x, p.y);
    }
    for f in faces {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    out
}
