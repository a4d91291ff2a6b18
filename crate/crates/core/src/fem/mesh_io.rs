//! Line-oriented ASCII mesh format:
//!
//! ```text
//! nodes N
//! x y            (N lines)
//! triangles T
//! i j k          (T lines, 0-based, counter-clockwise)
//! edges E
//! i j TAG        (E lines, TAG in D/N/F)
//! ```
//!
//! Blank lines and anything after `#` are ignored.

use super::mesh::{BoundaryEdge, EdgeTag, Mesh, MeshError};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid mesh: {0}")]
    Invalid(#[from] MeshError),
}

fn parse_err(line: usize, msg: impl Into<String>) -> MeshIoError {
    MeshIoError::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn parse_mesh(text: &str) -> Result<Mesh, MeshIoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut last_line = 0;

    let mut header = |want: &str, lines: &mut dyn Iterator<Item = (usize, &str)>| {
        let (no, l) = lines
            .next()
            .ok_or_else(|| parse_err(last_line + 1, format!("expected `{want} <count>`")))?;
        let mut it = l.split_whitespace();
        if it.next() != Some(want) {
            return Err(parse_err(no, format!("expected `{want} <count>`, found `{l}`")));
        }
        let n = it
            .next()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| parse_err(no, format!("bad count in `{l}`")))?;
        if it.next().is_some() {
            return Err(parse_err(no, format!("trailing tokens in `{l}`")));
        }
        last_line = no;
        Ok(n)
    };

    fn fields<'a>(
        lines: &mut dyn Iterator<Item = (usize, &'a str)>,
        what: &str,
        k: usize,
    ) -> Result<(usize, Vec<&'a str>), MeshIoError> {
        let (no, l) = lines
            .next()
            .ok_or_else(|| parse_err(0, format!("unexpected end of file in {what} block")))?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != k {
            return Err(parse_err(no, format!("{what} line needs {k} fields, found {}", f.len())));
        }
        Ok((no, f))
    }

    let n = header("nodes", &mut lines)?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let (no, f) = fields(&mut lines, "node", 2)?;
        let x: f64 = f[0].parse().map_err(|_| parse_err(no, format!("bad number `{}`", f[0])))?;
        let y: f64 = f[1].parse().map_err(|_| parse_err(no, format!("bad number `{}`", f[1])))?;
        nodes.push([x, y]);
    }
    let t = header("triangles", &mut lines)?;
    let mut triangles = Vec::with_capacity(t);
    for _ in 0..t {
        let (no, f) = fields(&mut lines, "triangle", 3)?;
        let mut tri = [0; 3];
        for k in 0..3 {
            tri[k] = f[k]
                .parse()
                .map_err(|_| parse_err(no, format!("bad index `{}`", f[k])))?;
        }
        triangles.push(tri);
    }
    let e = header("edges", &mut lines)?;
    let mut edges = Vec::with_capacity(e);
    for _ in 0..e {
        let (no, f) = fields(&mut lines, "edge", 3)?;
        let a = f[0].parse().map_err(|_| parse_err(no, format!("bad index `{}`", f[0])))?;
        let b = f[1].parse().map_err(|_| parse_err(no, format!("bad index `{}`", f[1])))?;
        let tag = EdgeTag::from_letter(f[2])
            .ok_or_else(|| parse_err(no, format!("edge tag must be D, N or F, found `{}`", f[2])))?;
        for idx in [a, b] {
            if idx >= nodes.len() {
                return Err(parse_err(no, format!("edge node {idx} out of range")));
            }
        }
        edges.push(BoundaryEdge { nodes: [a, b], tag });
    }
    if let Some((no, l)) = lines.next() {
        return Err(parse_err(no, format!("unexpected content `{l}`")));
    }
    Ok(Mesh::new(nodes, triangles, edges)?)
}

/// Coordinates use `{}` formatting, which round-trips f64 exactly.
pub fn format_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    writeln!(s, "nodes {}", mesh.nodes.len()).unwrap();
    for x in &mesh.nodes {
        writeln!(s, "{} {}", x[0], x[1]).unwrap();
    }
    writeln!(s, "triangles {}", mesh.triangles.len()).unwrap();
    for t in &mesh.triangles {
        writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(s, "edges {}", mesh.edges.len()).unwrap();
    for e in &mesh.edges {
        writeln!(s, "{} {} {}", e.nodes[0], e.nodes[1], e.tag.letter()).unwrap();
    }
    s
}

pub fn load_mesh(path: &Path) -> Result<Mesh, MeshIoError> {
    let text = std::fs::read_to_string(path).map_err(|source| MeshIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_mesh(&text)
}

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<(), MeshIoError> {
    crate::diagnostics::atomic_write(path, format_mesh(mesh).as_bytes()).map_err(|source| {
        MeshIoError::Io {
            path: path.display().to_string(),
            source,
        }
    })
}
