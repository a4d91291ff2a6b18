//! Legacy ASCII VTK unstructured grids (writer and a reader for the subset
//! we write).

use crate::fem::Mesh;
use crate::material::{DevTensor2, SymTensor2};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub const VTK_HEADER: &str = "# vtk DataFile Version 3.0";

/// Fields attached to a mesh. Cell tensors are written as three components
/// `xx, yy, xy`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VtkFields {
    pub point_scalars: Vec<(String, Vec<f64>)>,
    pub point_vectors: Vec<(String, Vec<[f64; 2]>)>,
    pub cell_tensors: Vec<(String, Vec<[f64; 3]>)>,
}

impl VtkFields {
    pub fn scalar(mut self, name: &str, v: Vec<f64>) -> Self {
        self.point_scalars.push((name.into(), v));
        self
    }

    /// Nodal displacement from an interleaved dof vector.
    pub fn displacement(mut self, name: &str, u: &[f64]) -> Self {
        self.point_vectors
            .push((name.into(), u.chunks_exact(2).map(|c| [c[0], c[1]]).collect()));
        self
    }

    pub fn dev(mut self, name: &str, p: &[DevTensor2]) -> Self {
        self.cell_tensors.push((name.into(), p.iter().map(|q| sym3(&q.to_sym())).collect()));
        self
    }

    pub fn sym(mut self, name: &str, e: &[SymTensor2]) -> Self {
        self.cell_tensors.push((name.into(), e.iter().map(sym3).collect()));
        self
    }

    pub fn cell(&self, name: &str) -> Option<&[[f64; 3]]> {
        self.cell_tensors.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn point(&self, name: &str) -> Option<&[f64]> {
        self.point_scalars.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// A cell tensor field read back as deviatoric tensors.
    pub fn cell_dev(&self, name: &str) -> Option<Vec<DevTensor2>> {
        self.cell(name).map(|v| v.iter().map(|c| DevTensor2::new(c[0], c[2])).collect())
    }
}

fn sym3(e: &SymTensor2) -> [f64; 3] {
    [e.xx, e.yy, e.xy]
}

pub fn format_vtk(mesh: &Mesh, fields: &VtkFields, title: &str) -> String {
    let n = mesh.nodes.len();
    let m = mesh.triangles.len();
    for (name, v) in &fields.point_scalars {
        assert_eq!(v.len(), n, "point field {name}");
    }
    for (name, v) in &fields.point_vectors {
        assert_eq!(v.len(), n, "point field {name}");
    }
    for (name, v) in &fields.cell_tensors {
        assert_eq!(v.len(), m, "cell field {name}");
    }
    let mut s = String::new();
    let title = title.replace('\n', " ");
    writeln!(s, "{VTK_HEADER}\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {n} double").unwrap();
    for x in &mesh.nodes {
        writeln!(s, "{:.16e} {:.16e} {:.16e}", x[0], x[1], 0.0).unwrap();
    }
    writeln!(s, "CELLS {m} {}", 4 * m).unwrap();
    for t in &mesh.triangles {
        writeln!(s, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(s, "CELL_TYPES {m}").unwrap();
    for _ in 0..m {
        s.push_str("5\n");
    }
    if !fields.point_scalars.is_empty() || !fields.point_vectors.is_empty() {
        writeln!(s, "POINT_DATA {n}").unwrap();
        for (name, v) in &fields.point_scalars {
            writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
            for x in v {
                writeln!(s, "{x:.16e}").unwrap();
            }
        }
        for (name, v) in &fields.point_vectors {
            writeln!(s, "VECTORS {name} double").unwrap();
            for x in v {
                writeln!(s, "{:.16e} {:.16e} {:.16e}", x[0], x[1], 0.0).unwrap();
            }
        }
    }
    if !fields.cell_tensors.is_empty() {
        writeln!(s, "CELL_DATA {m}").unwrap();
        for (name, v) in &fields.cell_tensors {
            writeln!(s, "SCALARS {name} double 3\nLOOKUP_TABLE default").unwrap();
            for x in v {
                writeln!(s, "{:.16e} {:.16e} {:.16e}", x[0], x[1], x[2]).unwrap();
            }
        }
    }
    s
}

pub fn write_vtk(mesh: &Mesh, fields: &VtkFields, title: &str, path: &Path) -> std::io::Result<()> {
    super::atomic_write(path, format_vtk(mesh, fields, title).as_bytes())
}

#[derive(Clone, Debug, PartialEq)]
pub struct VtkFile {
    pub points: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub fields: VtkFields,
}

/// Parse a file produced by [`format_vtk`].
pub fn parse_vtk(text: &str) -> Result<VtkFile, String> {
    let mut tokens = text.lines().skip(4).flat_map(str::split_whitespace).peekable();
    if !text.starts_with(VTK_HEADER) {
        return Err("missing VTK header".into());
    }
    fn num<T: std::str::FromStr>(t: Option<&str>) -> Result<T, String> {
        let t = t.ok_or("unexpected end of file")?;
        t.parse().map_err(|_| format!("bad number `{t}`"))
    }
    fn expect(t: Option<&str>, want: &str) -> Result<(), String> {
        match t {
            Some(x) if x == want => Ok(()),
            other => Err(format!("expected `{want}`, found {other:?}")),
        }
    }
    expect(tokens.next(), "POINTS")?;
    let n: usize = num(tokens.next())?;
    tokens.next();
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = num(tokens.next())?;
        let y: f64 = num(tokens.next())?;
        let _: f64 = num(tokens.next())?;
        points.push([x, y]);
    }
    expect(tokens.next(), "CELLS")?;
    let m: usize = num(tokens.next())?;
    let _: usize = num(tokens.next())?;
    let mut triangles = Vec::with_capacity(m);
    for _ in 0..m {
        expect(tokens.next(), "3")?;
        triangles.push([num(tokens.next())?, num(tokens.next())?, num(tokens.next())?]);
    }
    expect(tokens.next(), "CELL_TYPES")?;
    let _: usize = num(tokens.next())?;
    for _ in 0..m {
        expect(tokens.next(), "5")?;
    }
    let mut fields = VtkFields::default();
    let mut count = 0;
    let mut seen = BTreeMap::new();
    while let Some(tok) = tokens.next() {
        match tok {
            "POINT_DATA" => count = num::<usize>(tokens.next())?,
            "CELL_DATA" => count = num::<usize>(tokens.next())?,
            "SCALARS" => {
                let name: String = num(tokens.next())?;
                tokens.next();
                let comps: usize = num(tokens.next())?;
                expect(tokens.next(), "LOOKUP_TABLE")?;
                tokens.next();
                if seen.insert(name.clone(), ()).is_some() {
                    return Err(format!("duplicate field {name}"));
                }
                match comps {
                    1 => {
                        let v = (0..count).map(|_| num(tokens.next())).collect::<Result<_, _>>()?;
                        fields.point_scalars.push((name, v));
                    }
                    3 => {
                        let mut v = Vec::with_capacity(count);
                        for _ in 0..count {
                            v.push([num(tokens.next())?, num(tokens.next())?, num(tokens.next())?]);
                        }
                        fields.cell_tensors.push((name, v));
                    }
                    c => return Err(format!("unsupported component count {c}")),
                }
            }
            "VECTORS" => {
                let name: String = num(tokens.next())?;
                tokens.next();
                let mut v = Vec::with_capacity(count);
                for _ in 0..count {
                    let x = num(tokens.next())?;
                    let y = num(tokens.next())?;
                    let _: f64 = num(tokens.next())?;
                    v.push([x, y]);
                }
                fields.point_vectors.push((name, v));
            }
            other => return Err(format!("unexpected token `{other}`")),
        }
    }
    Ok(VtkFile {
        points,
        triangles,
        fields,
    })
}
