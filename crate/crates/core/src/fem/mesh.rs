use std::collections::HashMap;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeTag {
    Dirichlet,
    Neumann,
    Free,
}

impl EdgeTag {
    pub fn letter(self) -> char {
        match self {
            EdgeTag::Dirichlet => 'D',
            EdgeTag::Neumann => 'N',
            EdgeTag::Free => 'F',
        }
    }

    pub fn from_letter(s: &str) -> Option<EdgeTag> {
        match s {
            "D" => Some(EdgeTag::Dirichlet),
            "N" => Some(EdgeTag::Neumann),
            "F" => Some(EdgeTag::Free),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: EdgeTag,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<BoundaryEdge>,
}

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("mesh has no {0}")]
    Empty(&'static str),
    #[error("non-finite coordinate at node {0}")]
    NonFiniteNode(usize),
    #[error("triangle {tri} references node {node}, but the mesh has {count} nodes")]
    TriangleIndex { tri: usize, node: usize, count: usize },
    #[error("triangle {tri} is not counter-clockwise (signed area {area:e})")]
    Orientation { tri: usize, area: f64 },
    #[error("edge {edge} ({a}, {b}) is not a boundary edge of exactly one triangle")]
    NotBoundary { edge: usize, a: usize, b: usize },
    #[error("boundary edge ({a}, {b}) is tagged more than once")]
    DuplicateEdge { a: usize, b: usize },
    #[error("boundary edge ({a}, {b}) has no tag")]
    UntaggedEdge { a: usize, b: usize },
    #[error("empty Dirichlet boundary")]
    EmptyDirichlet,
    #[error("mesh generator needs nx, ny >= 1 and positive lengths (got nx={nx}, ny={ny}, lx={lx}, ly={ly})")]
    BadGrid { nx: usize, ny: usize, lx: f64, ly: f64 },
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Mesh {
    /// Build and validate.
    pub fn new(
        nodes: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        edges: Vec<BoundaryEdge>,
    ) -> Result<Mesh, MeshError> {
        let mesh = Mesh {
            nodes,
            triangles,
            edges,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if self.nodes.is_empty() {
            return Err(MeshError::Empty("nodes"));
        }
        if self.triangles.is_empty() {
            return Err(MeshError::Empty("triangles"));
        }
        for (i, x) in self.nodes.iter().enumerate() {
            if !(x[0].is_finite() && x[1].is_finite()) {
                return Err(MeshError::NonFiniteNode(i));
            }
        }
        let count = self.nodes.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            for &node in tri {
                if node >= count {
                    return Err(MeshError::TriangleIndex { tri: t, node, count });
                }
            }
            let area = self.signed_area(t);
            if !(area > 0.0) {
                return Err(MeshError::Orientation { tri: t, area });
            }
        }
        let boundary = self.boundary_edges();
        let mut seen = HashMap::new();
        for (e, edge) in self.edges.iter().enumerate() {
            let [a, b] = edge.nodes;
            let k = key(a, b);
            if !boundary.contains_key(&k) {
                return Err(MeshError::NotBoundary { edge: e, a, b });
            }
            if seen.insert(k, e).is_some() {
                return Err(MeshError::DuplicateEdge { a, b });
            }
        }
        let mut untagged: Vec<_> = boundary.keys().filter(|k| !seen.contains_key(k)).collect();
        untagged.sort();
        if let Some(&&(a, b)) = untagged.first() {
            return Err(MeshError::UntaggedEdge { a, b });
        }
        if !self.edges.iter().any(|e| e.tag == EdgeTag::Dirichlet) {
            return Err(MeshError::EmptyDirichlet);
        }
        Ok(())
    }

    /// Edges belonging to exactly one triangle, keyed by sorted node pair.
    pub fn boundary_edges(&self) -> HashMap<(usize, usize), usize> {
        let mut count: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let e = key(tri[k], tri[(k + 1) % 3]);
                count.entry(e).or_insert((0, t)).0 += 1;
            }
        }
        count
            .into_iter()
            .filter(|(_, (n, _))| *n == 1)
            .map(|(e, (_, t))| (e, t))
            .collect()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].nodes;
        let (pa, pb) = (self.nodes[a], self.nodes[b]);
        (pb[0] - pa[0]).hypot(pb[1] - pa[1])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Nodes touching a Dirichlet edge. These win over Neumann at shared
    /// corners.
    pub fn dirichlet_nodes(&self) -> Vec<bool> {
        let mut mark = vec![false; self.nodes.len()];
        for e in &self.edges {
            if e.tag == EdgeTag::Dirichlet {
                mark[e.nodes[0]] = true;
                mark[e.nodes[1]] = true;
            }
        }
        mark
    }

    /// Longest triangle edge.
    pub fn max_edge_length(&self) -> f64 {
        let mut h: f64 = 0.0;
        for tri in &self.triangles {
            for k in 0..3 {
                let (p, q) = (self.nodes[tri[k]], self.nodes[tri[(k + 1) % 3]]);
                h = h.max((q[0] - p[0]).hypot(q[1] - p[1]));
            }
        }
        h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    /// Two triangles per cell, cut along the lower-left to upper-right diagonal.
    Diagonal,
    /// Four triangles per cell around an added center node.
    Crossed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

/// Tag for the part of one side whose tangential coordinate lies in
/// `[lo, hi]` (edge midpoint test).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TagWindow {
    pub side: Side,
    pub lo: f64,
    pub hi: f64,
    pub tag: EdgeTag,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TagSpec {
    pub left: EdgeTag,
    pub right: EdgeTag,
    pub bottom: EdgeTag,
    pub top: EdgeTag,
    pub windows: Vec<TagWindow>,
}

impl TagSpec {
    pub fn uniform(tag: EdgeTag) -> TagSpec {
        TagSpec {
            left: tag,
            right: tag,
            bottom: tag,
            top: tag,
            windows: Vec::new(),
        }
    }

    /// Left edge clamped, a traction window of half-width `half` around the
    /// middle of the right edge, everything else free.
    pub fn cantilever(ly: f64, half: f64) -> TagSpec {
        TagSpec {
            left: EdgeTag::Dirichlet,
            right: EdgeTag::Free,
            bottom: EdgeTag::Free,
            top: EdgeTag::Free,
            windows: vec![TagWindow {
                side: Side::Right,
                lo: 0.5 * ly - half,
                hi: 0.5 * ly + half,
                tag: EdgeTag::Neumann,
            }],
        }
    }

    fn tag(&self, side: Side, coord: f64) -> EdgeTag {
        for w in &self.windows {
            if w.side == side && coord >= w.lo && coord <= w.hi {
                return w.tag;
            }
        }
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
            Side::Bottom => self.bottom,
            Side::Top => self.top,
        }
    }
}

/// Structured triangulation of `[0, lx] × [0, ly]`.
pub fn generate_rect_mesh(
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    split: Split,
    tags: &TagSpec,
) -> Result<Mesh, MeshError> {
    if nx == 0 || ny == 0 || !(lx > 0.0 && ly > 0.0) {
        return Err(MeshError::BadGrid { nx, ny, lx, ly });
    }
    let grid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([lx * i as f64 / nx as f64, ly * j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1));
            match split {
                Split::Diagonal => {
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                }
                Split::Crossed => {
                    let m = nodes.len();
                    nodes.push([
                        lx * (i as f64 + 0.5) / nx as f64,
                        ly * (j as f64 + 0.5) / ny as f64,
                    ]);
                    triangles.push([a, b, m]);
                    triangles.push([b, c, m]);
                    triangles.push([c, d, m]);
                    triangles.push([d, a, m]);
                }
            }
        }
    }
    let mut edges = Vec::new();
    for i in 0..nx {
        let mid = lx * (i as f64 + 0.5) / nx as f64;
        edges.push(BoundaryEdge {
            nodes: [grid(i, 0), grid(i + 1, 0)],
            tag: tags.tag(Side::Bottom, mid),
        });
        edges.push(BoundaryEdge {
            nodes: [grid(i + 1, ny), grid(i, ny)],
            tag: tags.tag(Side::Top, mid),
        });
    }
    for j in 0..ny {
        let mid = ly * (j as f64 + 0.5) / ny as f64;
        edges.push(BoundaryEdge {
            nodes: [grid(0, j + 1), grid(0, j)],
            tag: tags.tag(Side::Left, mid),
        });
        edges.push(BoundaryEdge {
            nodes: [grid(nx, j), grid(nx, j + 1)],
            tag: tags.tag(Side::Right, mid),
        });
    }
    Mesh::new(nodes, triangles, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn left_clamped() -> TagSpec {
        TagSpec {
            left: EdgeTag::Dirichlet,
            ..TagSpec::uniform(EdgeTag::Free)
        }
    }

    #[test]
    fn smallest_meshes() {
        let d = generate_rect_mesh(1, 1, 1.0, 1.0, Split::Diagonal, &left_clamped()).unwrap();
        assert_eq!((d.num_triangles(), d.edges.len()), (2, 4));
        let c = generate_rect_mesh(1, 1, 1.0, 1.0, Split::Crossed, &left_clamped()).unwrap();
        assert_eq!((c.num_triangles(), c.edges.len()), (4, 4));
    }

    #[test]
    fn area_partition() {
        for split in [Split::Diagonal, Split::Crossed] {
            let m = generate_rect_mesh(7, 3, 2.5, 0.7, split, &left_clamped()).unwrap();
            assert!((m.total_area() - 2.5 * 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_edge_count() {
        let m = generate_rect_mesh(2, 1, 1.0, 1.0, Split::Diagonal, &left_clamped()).unwrap();
        let n = m.edges.iter().filter(|e| e.tag == EdgeTag::Dirichlet).count();
        assert_eq!(n, 1);
        let bottom = TagSpec {
            bottom: EdgeTag::Dirichlet,
            ..TagSpec::uniform(EdgeTag::Free)
        };
        let m = generate_rect_mesh(2, 1, 1.0, 1.0, Split::Diagonal, &bottom).unwrap();
        let n = m.edges.iter().filter(|e| e.tag == EdgeTag::Dirichlet).count();
        assert_eq!(n, 2);
    }

    #[test]
    fn cantilever_window() {
        let m = generate_rect_mesh(8, 8, 1.0, 1.0, Split::Diagonal, &TagSpec::cantilever(1.0, 0.125))
            .unwrap();
        let len: f64 = (0..m.edges.len())
            .filter(|&e| m.edges[e].tag == EdgeTag::Neumann)
            .map(|e| m.edge_length(e))
            .sum();
        assert!((len - 0.25).abs() < 1e-12);
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(matches!(
            generate_rect_mesh(0, 3, 1.0, 1.0, Split::Diagonal, &left_clamped()),
            Err(MeshError::BadGrid { .. })
        ));
    }

    #[test]
    fn validation_errors() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let edges = vec![
            BoundaryEdge { nodes: [0, 1], tag: EdgeTag::Dirichlet },
            BoundaryEdge { nodes: [1, 2], tag: EdgeTag::Free },
            BoundaryEdge { nodes: [2, 0], tag: EdgeTag::Free },
        ];
        assert!(Mesh::new(nodes.clone(), vec![[0, 1, 2]], edges.clone()).is_ok());
        assert!(matches!(
            Mesh::new(nodes.clone(), vec![[0, 2, 1]], edges.clone()),
            Err(MeshError::Orientation { tri: 0, .. })
        ));
        let free: Vec<_> = edges
            .iter()
            .map(|e| BoundaryEdge { tag: EdgeTag::Free, ..*e })
            .collect();
        let err = Mesh::new(nodes.clone(), vec![[0, 1, 2]], free).unwrap_err();
        assert_eq!(err.to_string(), "empty Dirichlet boundary");
        assert!(matches!(
            Mesh::new(nodes, vec![[0, 1, 2]], edges[..2].to_vec()),
            Err(MeshError::UntaggedEdge { .. })
        ));
    }
}
