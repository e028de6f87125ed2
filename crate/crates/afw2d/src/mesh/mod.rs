//! Conforming triangulations with optional curved (transfinite) patches.
//!
//! Local vertex order is counterclockwise; local edge `i` joins `v[i]` and
//! `v[i+1]`. Local edge 0 doubles as the refinement edge for newest vertex
//! bisection. Global edges run from the lower to the higher vertex id.

mod geometry;
mod io;
mod refine;
mod regularity;

use std::collections::HashMap;
use std::f64::consts::PI;

pub use geometry::{Curve, ElementMap, PatchMap};
pub use io::{load_mesh, parse_mesh, store_mesh, svg_mesh, write_mesh};
pub use regularity::{element_distortion, regularity, ElementRegularity, RegularityReport, REFERENCE_SHAPE_RATIO};

use crate::error::{Error, Result};

/// Boundary tag for the (only) Dirichlet part of the boundary.
pub const DIRICHLET: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum EdgeGeom {
    Straight,
    Arc { center: [f64; 2], radius: f64, theta0: f64, theta1: f64 },
    /// straight segment `a -> b` in the reference coordinates of a patch
    InPatch { patch: usize, a: [f64; 2], b: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub v: [usize; 2],
    pub geom: EdgeGeom,
    pub boundary: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Triangle {
    pub v: [usize; 3],
    pub e: [usize; 3],
    pub patch: usize,
    /// patch reference coordinates of the three vertices
    pub chain: [[f64; 2]; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub name: String,
    pub vertices: Vec<[f64; 2]>,
    pub edges: Vec<Edge>,
    pub triangles: Vec<Triangle>,
    pub patches: Vec<PatchMap>,
}

pub const DOMAINS: [&str; 3] = ["unit_square", "lshape_affine", "lshape_circular"];

/// Initial mesh for a named domain.
pub fn build_domain(name: &str) -> Result<Mesh> {
    match name {
        "unit_square" => {
            let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
            // diagonal first: it is the longest edge of both triangles
            Mesh::from_affine(name, v, &[[2, 0, 1], [0, 2, 3]])
        }
        "lshape_affine" => {
            let v = vec![
                [0.0, 0.0],
                [1.0, 0.0],
                [1.0, 1.0],
                [0.0, 1.0],
                [-1.0, 1.0],
                [-1.0, 0.0],
                [-1.0, -1.0],
                [0.0, -1.0],
            ];
            // the three squares are cut along diagonals through the reentrant corner
            let t = [[2, 0, 1], [0, 2, 3], [4, 0, 3], [0, 4, 5], [6, 0, 5], [0, 6, 7]];
            Mesh::from_affine(name, v, &t)
        }
        "lshape_circular" => {
            let mut v = vec![[0.0, 0.0]];
            for k in 0..7 {
                let th = k as f64 * PI / 4.0;
                v.push([th.cos(), th.sin()]);
            }
            let mut patches = Vec::new();
            let mut tris = Vec::new();
            let mut overrides = HashMap::new();
            for k in 1..7 {
                let (a, b) = (k, k + 1);
                let (ta, tb) = ((a - 1) as f64 * PI / 4.0, (b - 1) as f64 * PI / 4.0);
                let arc = Curve::Arc { center: [0.0, 0.0], radius: 1.0, theta0: ta, theta1: tb };
                let p = [v[a], v[b], v[0]];
                patches.push(PatchMap::Transfinite {
                    p,
                    curves: [arc, Curve::Straight { a: p[1], b: p[2] }, Curve::Straight { a: p[2], b: p[0] }],
                });
                tris.push(([a, b, 0], patches.len() - 1, REF_VERTICES));
                overrides.insert((a, b), EdgeGeom::Arc { center: [0.0, 0.0], radius: 1.0, theta0: ta, theta1: tb });
                overrides.insert((0, a), EdgeGeom::Straight);
                overrides.insert((0, b), EdgeGeom::Straight);
            }
            Mesh::assemble(name, v, tris, patches, &overrides)
        }
        _ => Err(Error::UnknownDomain(name.to_string())),
    }
}

pub(crate) const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

impl Mesh {
    /// Affine mesh with one patch per triangle.
    pub fn from_affine(name: &str, vertices: Vec<[f64; 2]>, tris: &[[usize; 3]]) -> Result<Mesh> {
        let mut patches = Vec::new();
        let mut list = Vec::new();
        for t in tris {
            patches.push(PatchMap::Affine { p: [vertices[t[0]], vertices[t[1]], vertices[t[2]]] });
            list.push((*t, patches.len() - 1, REF_VERTICES));
        }
        Mesh::assemble(name, vertices, list, patches, &HashMap::new())
    }

    /// Build edges from triangles. Edge geometry comes from `overrides` (keyed by
    /// sorted vertex pair) or is derived from an adjacent triangle's patch.
    pub(crate) fn assemble(
        name: &str,
        vertices: Vec<[f64; 2]>,
        tris: Vec<([usize; 3], usize, [[f64; 2]; 3])>,
        patches: Vec<PatchMap>,
        overrides: &HashMap<(usize, usize), EdgeGeom>,
    ) -> Result<Mesh> {
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut count: Vec<usize> = Vec::new();
        let mut triangles = Vec::with_capacity(tris.len());
        for (v, patch, chain) in tris {
            if patch >= patches.len() {
                return Err(Error::InvalidMesh(format!("patch {patch} out of range")));
            }
            let mut e = [0usize; 3];
            for i in 0..3 {
                let (a, b) = (v[i], v[(i + 1) % 3]);
                if a == b || a >= vertices.len() || b >= vertices.len() {
                    return Err(Error::InvalidMesh(format!("bad vertex pair ({a}, {b})")));
                }
                let key = (a.min(b), a.max(b));
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    let (ca, cb) = if a < b { (chain[i], chain[(i + 1) % 3]) } else { (chain[(i + 1) % 3], chain[i]) };
                    let geom = overrides.get(&key).cloned().unwrap_or_else(|| {
                        if patches[patch].is_affine() {
                            EdgeGeom::Straight
                        } else {
                            EdgeGeom::InPatch { patch, a: ca, b: cb }
                        }
                    });
                    edges.push(Edge { v: [key.0, key.1], geom, boundary: None });
                    count.push(0);
                    edges.len() - 1
                });
                count[id] += 1;
                e[i] = id;
            }
            triangles.push(Triangle { v, e, patch, chain });
        }
        for (id, c) in count.iter().enumerate() {
            match c {
                1 => edges[id].boundary = Some(DIRICHLET),
                2 => {}
                _ => return Err(Error::InvalidMesh(format!("edge {id} shared by {c} triangles"))),
            }
        }
        let mesh = Mesh { name: name.to_string(), vertices, edges, triangles, patches };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_affine(&self) -> bool {
        self.patches.iter().all(PatchMap::is_affine)
    }

    pub fn map(&self, t: usize) -> ElementMap {
        let tri = &self.triangles[t];
        ElementMap::new(self.patches[tri.patch].clone(), tri.chain)
    }

    /// Physical point on edge `e` at parameter s (from `v[0]` to `v[1]`).
    pub fn edge_point(&self, e: usize, s: f64) -> [f64; 2] {
        let edge = &self.edges[e];
        match &edge.geom {
            EdgeGeom::Straight => {
                let (a, b) = (self.vertices[edge.v[0]], self.vertices[edge.v[1]]);
                [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
            }
            EdgeGeom::Arc { center, radius, theta0, theta1 } => {
                Curve::Arc { center: *center, radius: *radius, theta0: *theta0, theta1: *theta1 }.eval(s)
            }
            EdgeGeom::InPatch { patch, a, b } => {
                let y = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                let (x, _) = self.patches[*patch].eval(y);
                [x.x, x.y]
            }
        }
    }

    /// Whether local edge `i` of triangle `t` runs in the global edge direction.
    pub fn edge_aligned(&self, t: usize, i: usize) -> bool {
        let tri = &self.triangles[t];
        tri.v[i] < tri.v[(i + 1) % 3]
    }

    /// Largest vertex distance over all triangles.
    pub fn h(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.diameter(t)).fold(0.0, f64::max)
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let v = self.triangles[t].v;
        let mut d: f64 = 0.0;
        for i in 0..3 {
            let (a, b) = (self.vertices[v[i]], self.vertices[v[(i + 1) % 3]]);
            d = d.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
        }
        d
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        self.map(t).point([1.0 / 3.0, 1.0 / 3.0])
    }

    /// Triangles adjacent to each vertex.
    pub fn vertex_patches(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in &tri.v {
                out[v].push(t);
            }
        }
        out
    }

    /// Triangles adjacent to each edge.
    pub fn edge_triangles(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.edges.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &e in &tri.e {
                out[e].push(t);
            }
        }
        out
    }

    /// Structural and geometric validation.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            for i in 0..3 {
                let e = tri.e[i];
                if e >= self.edges.len() || tri.v[i] >= nv {
                    return Err(Error::InvalidMesh(format!("triangle {t} references missing entities")));
                }
                let (a, b) = (tri.v[i], tri.v[(i + 1) % 3]);
                if self.edges[e].v != [a.min(b), a.max(b)] {
                    return Err(Error::InvalidMesh(format!("triangle {t} local edge {i} does not match edge {e}")));
                }
            }
            let map = self.map(t);
            for xh in sample_points(4) {
                let (_, dg) = map.eval(xh);
                if dg.determinant() <= 0.0 {
                    return Err(Error::Geometry {
                        element: t,
                        detail: format!("non-positive Jacobian at {xh:?}"),
                    });
                }
            }
        }
        let adj = self.edge_triangles();
        for (e, ts) in adj.iter().enumerate() {
            match (ts.len(), self.edges[e].boundary.is_some()) {
                (1, true) | (2, false) => {}
                (n, b) => {
                    return Err(Error::InvalidMesh(format!("edge {e}: {n} adjacent triangles, boundary tag {b}")))
                }
            }
        }
        Ok(())
    }

    /// Locate the triangle containing `x`, with reference coordinates.
    pub fn locate(&self, x: [f64; 2]) -> Option<(usize, [f64; 2])> {
        let tol = 1e-10;
        for t in 0..self.triangles.len() {
            let v = self.triangles[t].v;
            let h = self.diameter(t);
            let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
            for &vi in &v {
                for d in 0..2 {
                    lo[d] = lo[d].min(self.vertices[vi][d]);
                    hi[d] = hi[d].max(self.vertices[vi][d]);
                }
            }
            let pad = 0.25 * h;
            if x[0] < lo[0] - pad || x[0] > hi[0] + pad || x[1] < lo[1] - pad || x[1] > hi[1] + pad {
                continue;
            }
            if let Some(xh) = self.map(t).inverse(x) {
                if xh[0] >= -tol && xh[1] >= -tol && xh[0] + xh[1] <= 1.0 + tol {
                    return Some((t, xh));
                }
            }
        }
        None
    }
}

/// Lattice of points on the closed reference triangle with `n` intervals per side.
pub fn sample_points(n: usize) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for i in 0..=n {
        for j in 0..=(n - i) {
            out.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct CompatibilityReport {
    pub max_mismatch: f64,
    pub worst_edge: Option<usize>,
}

impl CompatibilityReport {
    pub fn ok(&self, tol: f64) -> bool {
        self.max_mismatch <= tol
    }
}

/// Compare every element map restricted to its edges with the edge's own
/// parametrization (C0 compatibility).
pub fn check_compatibility(mesh: &Mesh) -> CompatibilityReport {
    let mut worst = 0.0;
    let mut worst_edge = None;
    let ns = 10;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let map = mesh.map(t);
        for i in 0..3 {
            let e = tri.e[i];
            let aligned = mesh.edge_aligned(t, i);
            for k in 0..=ns {
                let s = k as f64 / ns as f64;
                let sl = if aligned { s } else { 1.0 - s };
                let a = map.point(crate::reference::edge_point(i, sl));
                let b = mesh.edge_point(e, s);
                let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                if d > worst {
                    worst = d;
                    worst_edge = Some(e);
                }
            }
        }
    }
    CompatibilityReport { max_mismatch: worst, worst_edge }
}

pub use refine::{refine_bisect, refine_uniform};


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domains_build_and_validate() {
        for d in DOMAINS {
            let m = build_domain(d).unwrap();
            assert!(check_compatibility(&m).ok(1e-12), "{d}");
        }
        assert!(build_domain("pentagon").is_err());
    }

    #[test]
    fn lshape_counts() {
        let m = build_domain("lshape_affine").unwrap();
        assert_eq!(m.triangles.len(), 6);
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(m.edges.len(), 13);
        assert_eq!(m.edges.iter().filter(|e| e.boundary.is_some()).count(), 8);
        let c = build_domain("lshape_circular").unwrap();
        assert!(!c.is_affine());
        assert_eq!(c.triangles.len(), 6);
    }

    #[test]
    fn perturbed_edge_is_reported() {
        let mut m = refine_uniform(&build_domain("lshape_circular").unwrap()).unwrap();
        let target = m
            .edges
            .iter()
            .position(|e| matches!(e.geom, EdgeGeom::InPatch { .. }) && e.boundary.is_none())
            .unwrap();
        if let EdgeGeom::InPatch { a, .. } = &mut m.edges[target].geom {
            a[0] += 1e-3;
        }
        let rep = check_compatibility(&m);
        assert!(rep.max_mismatch > 1e-6);
        assert_eq!(rep.worst_edge, Some(target));
    }

    #[test]
    fn reversed_edge_parametrization_is_reported() {
        let mut m = refine_uniform(&build_domain("lshape_circular").unwrap()).unwrap();
        let target = m.edges.iter().position(|e| matches!(e.geom, EdgeGeom::InPatch { .. })).unwrap();
        if let EdgeGeom::InPatch { a, b, .. } = &mut m.edges[target].geom {
            std::mem::swap(a, b);
        }
        assert!(!check_compatibility(&m).ok(1e-8));
    }

    #[test]
    fn locate_points() {
        let m = build_domain("lshape_circular").unwrap();
        let (t, xh) = m.locate([-0.3, -0.4]).unwrap();
        let x = m.map(t).point(xh);
        assert!((x[0] + 0.3).abs() < 1e-12 && (x[1] + 0.4).abs() < 1e-12);
        assert!(m.locate([0.5, -0.5]).is_none());
    }
}
