//! Uniform (red) refinement and newest vertex bisection. New vertices are
//! midpoints in patch reference coordinates, so curved patches stay exact.

use std::collections::{HashMap, HashSet};

use super::{EdgeGeom, Mesh};
use crate::error::{Error, Result};

type TriSpec = ([usize; 3], usize, [[f64; 2]; 3]);

fn mid(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
}

/// Keep only original boundary geometries that still describe whole edges
/// (straight edges of affine meshes); everything else is re-derived.
fn carried_geometry(mesh: &Mesh) -> HashMap<(usize, usize), EdgeGeom> {
    let mut out = HashMap::new();
    for e in &mesh.edges {
        if matches!(e.geom, EdgeGeom::Straight) && mesh.is_affine() {
            out.insert((e.v[0], e.v[1]), EdgeGeom::Straight);
        }
    }
    out
}

struct Midpoints<'a> {
    mesh: &'a Mesh,
    vertices: Vec<[f64; 2]>,
    at: HashMap<usize, usize>,
}

impl<'a> Midpoints<'a> {
    fn get(&mut self, e: usize) -> usize {
        if let Some(&v) = self.at.get(&e) {
            return v;
        }
        let p = self.mesh.edge_point(e, 0.5);
        self.vertices.push(p);
        let id = self.vertices.len() - 1;
        self.at.insert(e, id);
        id
    }
}

/// Rotate local numbering so the longest physical edge comes first.
fn longest_first(vertices: &[[f64; 2]], spec: TriSpec) -> TriSpec {
    let (v, p, c) = spec;
    let len = |i: usize| {
        let (a, b) = (vertices[v[i]], vertices[v[(i + 1) % 3]]);
        (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
    };
    let mut best = 0;
    for i in 1..3 {
        if len(i) > len(best) * (1.0 + 1e-12) {
            best = i;
        }
    }
    let r = |i: usize| (i + best) % 3;
    ([v[r(0)], v[r(1)], v[r(2)]], p, [c[r(0)], c[r(1)], c[r(2)]])
}

/// Split every triangle into four.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    let mut mids = Midpoints { mesh, vertices: mesh.vertices.clone(), at: HashMap::new() };
    let mut tris: Vec<TriSpec> = Vec::with_capacity(4 * mesh.triangles.len());
    for tri in &mesh.triangles {
        let m: Vec<usize> = (0..3).map(|i| mids.get(tri.e[i])).collect();
        let q = tri.chain;
        let qm = [mid(q[0], q[1]), mid(q[1], q[2]), mid(q[2], q[0])];
        let v = tri.v;
        tris.push(([v[0], m[0], m[2]], tri.patch, [q[0], qm[0], qm[2]]));
        tris.push(([m[0], v[1], m[1]], tri.patch, [qm[0], q[1], qm[1]]));
        tris.push(([m[2], m[1], v[2]], tri.patch, [qm[2], qm[1], q[2]]));
        tris.push(([m[1], m[2], m[0]], tri.patch, [qm[1], qm[2], qm[0]]));
    }
    let vertices = mids.vertices;
    let tris = tris.into_iter().map(|s| longest_first(&vertices, s)).collect();
    Mesh::assemble(&mesh.name, vertices, tris, mesh.patches.clone(), &carried_geometry(mesh))
}

/// Newest vertex bisection of the marked triangles plus the closure needed for
/// conformity. Each triangle is bisected at most three times.
pub fn refine_bisect(mesh: &Mesh, marked: &[usize]) -> Result<Mesh> {
    let mut edge_marked: HashSet<usize> = HashSet::new();
    for &t in marked {
        if t >= mesh.triangles.len() {
            return Err(Error::InvalidArgument(format!("marked triangle {t} out of range")));
        }
        edge_marked.insert(mesh.triangles[t].e[0]);
    }
    loop {
        let mut changed = false;
        for tri in &mesh.triangles {
            if !edge_marked.contains(&tri.e[0]) && tri.e.iter().any(|e| edge_marked.contains(e)) {
                edge_marked.insert(tri.e[0]);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut mids = Midpoints { mesh, vertices: mesh.vertices.clone(), at: HashMap::new() };
    let mut tris: Vec<TriSpec> = Vec::new();
    for tri in &mesh.triangles {
        let (v, q, p) = (tri.v, tri.chain, tri.patch);
        if !edge_marked.contains(&tri.e[0]) {
            tris.push((v, p, q));
            continue;
        }
        let m = mids.get(tri.e[0]);
        let qm = mid(q[0], q[1]);
        // children (v2, v0, m) and (v1, v2, m); their refinement edges are the
        // parent's edges 2 and 1
        let children = [
            (([v[2], v[0], m], p, [q[2], q[0], qm]), tri.e[2]),
            (([v[1], v[2], m], p, [q[1], q[2], qm]), tri.e[1]),
        ];
        for (child, ref_edge) in children {
            if edge_marked.contains(&ref_edge) {
                let (cv, _, cq) = child;
                let mm = mids.get(ref_edge);
                let cqm = mid(cq[0], cq[1]);
                tris.push(([cv[2], cv[0], mm], p, [cq[2], cq[0], cqm]));
                tris.push(([cv[1], cv[2], mm], p, [cq[1], cq[2], cqm]));
            } else {
                tris.push(child);
            }
        }
    }
    Mesh::assemble(&mesh.name, mids.vertices, tris, mesh.patches.clone(), &carried_geometry(mesh))
}
