//! Plain-text mesh format `afw2d-mesh v1`.
//!
//! ```text
//! afw2d-mesh v1
//! name <name>
//! vertices <n>
//! <id> <x> <y>
//! edges <n>
//! <id> <v0> <v1> straight|arc cx cy r t0 t1|inpatch p ax ay bx by <tag|->
//! triangles <n>
//! <id> <v0> <v1> <v2> <e0> <e1> <e2> <patch> <q0x> <q0y> <q1x> <q1y> <q2x> <q2y>
//! patches <n>
//! <id> affine x0 y0 x1 y1 x2 y2
//! <id> transfinite x0 y0 x1 y1 x2 y2 <curve> <curve> <curve>
//! ```
//! where `<curve>` is `straight` or `arc cx cy r t0 t1`. Reals are written with
//! 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use super::{Curve, Edge, EdgeGeom, Mesh, PatchMap, Triangle};
use crate::error::{Error, Result};

const HEADER: &str = "afw2d-mesh v1";

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn curve_tokens(c: &Curve) -> String {
    match c {
        Curve::Straight { .. } => "straight".to_string(),
        Curve::Arc { center, radius, theta0, theta1 } => {
            format!("arc {} {} {} {} {}", f(center[0]), f(center[1]), f(*radius), f(*theta0), f(*theta1))
        }
    }
}

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    writeln!(s, "{HEADER}").unwrap();
    writeln!(s, "name {}", mesh.name).unwrap();
    writeln!(s, "vertices {}", mesh.vertices.len()).unwrap();
    for (i, v) in mesh.vertices.iter().enumerate() {
        writeln!(s, "{i} {} {}", f(v[0]), f(v[1])).unwrap();
    }
    writeln!(s, "edges {}", mesh.edges.len()).unwrap();
    for (i, e) in mesh.edges.iter().enumerate() {
        let g = match &e.geom {
            EdgeGeom::Straight => "straight".to_string(),
            EdgeGeom::Arc { center, radius, theta0, theta1 } => {
                format!("arc {} {} {} {} {}", f(center[0]), f(center[1]), f(*radius), f(*theta0), f(*theta1))
            }
            EdgeGeom::InPatch { patch, a, b } => {
                format!("inpatch {patch} {} {} {} {}", f(a[0]), f(a[1]), f(b[0]), f(b[1]))
            }
        };
        let tag = e.boundary.map(|t| t.to_string()).unwrap_or_else(|| "-".to_string());
        writeln!(s, "{i} {} {} {g} {tag}", e.v[0], e.v[1]).unwrap();
    }
    writeln!(s, "triangles {}", mesh.triangles.len()).unwrap();
    for (i, t) in mesh.triangles.iter().enumerate() {
        let q: Vec<String> = t.chain.iter().flat_map(|p| [f(p[0]), f(p[1])]).collect();
        writeln!(
            s,
            "{i} {} {} {} {} {} {} {} {}",
            t.v[0],
            t.v[1],
            t.v[2],
            t.e[0],
            t.e[1],
            t.e[2],
            t.patch,
            q.join(" ")
        )
        .unwrap();
    }
    writeln!(s, "patches {}", mesh.patches.len()).unwrap();
    for (i, p) in mesh.patches.iter().enumerate() {
        let pts: Vec<String> = p.vertices().iter().flat_map(|v| [f(v[0]), f(v[1])]).collect();
        match p {
            PatchMap::Affine { .. } => writeln!(s, "{i} affine {}", pts.join(" ")).unwrap(),
            PatchMap::Transfinite { curves, .. } => {
                let c: Vec<String> = curves.iter().map(curve_tokens).collect();
                writeln!(s, "{i} transfinite {} {}", pts.join(" "), c.join(" ")).unwrap()
            }
        }
    }
    s
}

pub fn store_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn load_mesh(path: &Path) -> Result<Mesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<Vec<&'a str>> {
        for (i, l) in self.it.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            return Ok(l.split_whitespace().collect());
        }
        Err(Error::Parse { line: self.line, msg: "unexpected end of file".into() })
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, msg: msg.into() }
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let t = self.next()?;
        if t.len() != 2 || t[0] != name {
            return Err(self.err(format!("expected section '{name} <count>'")));
        }
        t[1].parse().map_err(|_| self.err("bad count"))
    }
}

struct Tokens<'a, 'b> {
    t: &'b [&'a str],
    pos: usize,
    lines: &'b Lines<'a>,
}

impl<'a, 'b> Tokens<'a, 'b> {
    fn word(&mut self) -> Result<&'a str> {
        let w = self.t.get(self.pos).copied().ok_or_else(|| self.lines.err("missing field"))?;
        self.pos += 1;
        Ok(w)
    }

    fn real(&mut self) -> Result<f64> {
        let w = self.word()?;
        let x: f64 = w.parse().map_err(|_| self.lines.err(format!("bad number '{w}'")))?;
        if !x.is_finite() {
            return Err(self.lines.err("non-finite number"));
        }
        Ok(x)
    }

    fn index(&mut self) -> Result<usize> {
        let w = self.word()?;
        w.parse().map_err(|_| self.lines.err(format!("bad index '{w}'")))
    }

    fn point(&mut self) -> Result<[f64; 2]> {
        Ok([self.real()?, self.real()?])
    }

    fn done(&self) -> Result<()> {
        if self.pos != self.t.len() {
            return Err(self.lines.err("trailing fields"));
        }
        Ok(())
    }
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = Lines { it: text.lines().enumerate(), line: 0 };
    let h = lines.next()?;
    if h.join(" ") != HEADER {
        return Err(lines.err(format!("expected header '{HEADER}'")));
    }
    let t = lines.next()?;
    if t.len() != 2 || t[0] != "name" {
        return Err(lines.err("expected 'name <name>'"));
    }
    let name = t[1].to_string();

    let nv = lines.section("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for i in 0..nv {
        let t = lines.next()?;
        let mut tk = Tokens { t: &t, pos: 0, lines: &lines };
        if tk.index()? != i {
            return Err(lines.err("vertex ids must be consecutive"));
        }
        vertices.push(tk.point()?);
        tk.done()?;
    }

    let ne = lines.section("edges")?;
    let mut edges = Vec::with_capacity(ne);
    for i in 0..ne {
        let t = lines.next()?;
        let mut tk = Tokens { t: &t, pos: 0, lines: &lines };
        if tk.index()? != i {
            return Err(lines.err("edge ids must be consecutive"));
        }
        let v = [tk.index()?, tk.index()?];
        let geom = match tk.word()? {
            "straight" => EdgeGeom::Straight,
            "arc" => EdgeGeom::Arc { center: tk.point()?, radius: tk.real()?, theta0: tk.real()?, theta1: tk.real()? },
            "inpatch" => EdgeGeom::InPatch { patch: tk.index()?, a: tk.point()?, b: tk.point()? },
            k => return Err(lines.err(format!("unknown edge kind '{k}'"))),
        };
        let boundary = match tk.word()? {
            "-" => None,
            w => Some(w.parse().map_err(|_| lines.err("bad boundary tag"))?),
        };
        tk.done()?;
        edges.push(Edge { v, geom, boundary });
    }

    let nt = lines.section("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for i in 0..nt {
        let t = lines.next()?;
        let mut tk = Tokens { t: &t, pos: 0, lines: &lines };
        if tk.index()? != i {
            return Err(lines.err("triangle ids must be consecutive"));
        }
        let v = [tk.index()?, tk.index()?, tk.index()?];
        let e = [tk.index()?, tk.index()?, tk.index()?];
        let patch = tk.index()?;
        let chain = [tk.point()?, tk.point()?, tk.point()?];
        tk.done()?;
        triangles.push(Triangle { v, e, patch, chain });
    }

    let np = lines.section("patches")?;
    let mut patches = Vec::with_capacity(np);
    for i in 0..np {
        let t = lines.next()?;
        let mut tk = Tokens { t: &t, pos: 0, lines: &lines };
        if tk.index()? != i {
            return Err(lines.err("patch ids must be consecutive"));
        }
        let kind = tk.word()?;
        let p = [tk.point()?, tk.point()?, tk.point()?];
        let patch = match kind {
            "affine" => PatchMap::Affine { p },
            "transfinite" => {
                let mut curves = Vec::new();
                for k in 0..3 {
                    let (a, b) = (p[k], p[(k + 1) % 3]);
                    curves.push(match tk.word()? {
                        "straight" => Curve::Straight { a, b },
                        "arc" => Curve::Arc { center: tk.point()?, radius: tk.real()?, theta0: tk.real()?, theta1: tk.real()? },
                        w => return Err(lines.err(format!("unknown curve kind '{w}'"))),
                    });
                }
                PatchMap::Transfinite { p, curves: [curves[0].clone(), curves[1].clone(), curves[2].clone()] }
            }
            k => return Err(lines.err(format!("unknown patch kind '{k}'"))),
        };
        tk.done()?;
        patches.push(patch);
    }

    for (i, e) in edges.iter().enumerate() {
        if e.v[0] >= nv || e.v[1] >= nv || e.v[0] >= e.v[1] {
            return Err(Error::InvalidMesh(format!("edge {i} has invalid vertices {:?}", e.v)));
        }
        if let EdgeGeom::InPatch { patch, .. } = e.geom {
            if patch >= np {
                return Err(Error::InvalidMesh(format!("edge {i} references missing patch {patch}")));
            }
        }
    }
    for (i, t) in triangles.iter().enumerate() {
        if t.patch >= np {
            return Err(Error::InvalidMesh(format!("triangle {i} references missing patch {}", t.patch)));
        }
    }
    let mesh = Mesh { name, vertices, edges, triangles, patches };
    mesh.validate()?;
    Ok(mesh)
}

/// SVG drawing of all edges, curved ones sampled; boundary edges in black.
pub fn svg_mesh(m: &Mesh) -> String {
    let size = 480.0;
    let pad = 12.0;
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in &m.vertices {
        x0 = x0.min(v[0]);
        y0 = y0.min(v[1]);
        x1 = x1.max(v[0]);
        y1 = y1.max(v[1]);
    }
    let scale = (size - 2.0 * pad) / (x1 - x0).max(y1 - y0).max(1e-12);
    let px = |p: [f64; 2]| format!("{:.2},{:.2}", pad + (p[0] - x0) * scale, size - pad - (p[1] - y0) * scale);
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (e, edge) in m.edges.iter().enumerate() {
        let pts: Vec<String> = (0..=16).map(|k| px(m.edge_point(e, k as f64 / 16.0))).collect();
        let color = if edge.boundary.is_some() { "#000" } else { "#4a6fa5" };
        writeln!(s, "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1\"/>", pts.join(" ")).unwrap();
    }
    s.push_str("</svg>\n");
    s
}
