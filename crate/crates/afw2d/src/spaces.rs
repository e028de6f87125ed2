//! Global variable-order spaces: order maps, degree-of-freedom numbering and
//! Piola transforms.
//!
//! For displacement order `r` on a triangle the local spaces are
//! - stress rows: P_{r+1} vector fields, normal trace degree `r_e + 1` on edge e,
//! - displacement (two components) and rotation: P_r, discontinuous,
//!
//! where `r_e` is the minimum of the orders of the triangles sharing e.
//! Physical fields are obtained from reference fields by the contravariant
//! Piola transform (stress rows) and by division with the Jacobian (scalars).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::linalg::{adj, Mat2, Vec2};
use crate::mesh::Mesh;
use crate::poly::dim;
use crate::reference::{vector_space, BasisSet, FormKind, PolySpaceSpec, Role, R_MAX};

/// Displacement order of a triangle and of its three local edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LocalOrder {
    pub r: usize,
    pub edge: [usize; 3],
}

impl LocalOrder {
    pub fn uniform(r: usize) -> Self {
        LocalOrder { r, edge: [r; 3] }
    }

    pub fn stress_spec(&self) -> PolySpaceSpec {
        PolySpaceSpec { kind: FormKind::Lambda1, order: self.r + 1, edge_trace: self.edge.map(|e| e + 1) }
    }

    pub fn pi_minus_spec(&self) -> PolySpaceSpec {
        PolySpaceSpec { kind: FormKind::Lambda1Minus, order: self.r + 1, edge_trace: self.edge }
    }

    pub fn w_spec(&self) -> PolySpaceSpec {
        PolySpaceSpec { kind: FormKind::Lambda0, order: self.r + 2, edge_trace: self.edge.map(|e| e + 2) }
    }

    /// Number of scalar functions in the discontinuous spaces.
    pub fn scalar_dim(&self) -> usize {
        dim(self.r)
    }
}

/// Local basis of one stress row.
pub fn stress_basis(lo: LocalOrder) -> Arc<BasisSet> {
    cached(lo.stress_spec())
}

pub(crate) fn cached(spec: PolySpaceSpec) -> Arc<BasisSet> {
    static CACHE: OnceLock<Mutex<HashMap<PolySpaceSpec, Arc<BasisSet>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().unwrap().get(&spec) {
        return b.clone();
    }
    let b = Arc::new(vector_space(spec).expect("validated local order"));
    cache.lock().unwrap().insert(spec, b.clone());
    b
}

/// Polynomial orders per triangle and per edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderMap {
    pub triangle: Vec<usize>,
    pub edge: Vec<usize>,
    pub r_max: usize,
}

impl OrderMap {
    pub fn uniform(mesh: &Mesh, r: usize) -> Result<OrderMap> {
        OrderMap::from_triangles(mesh, vec![r; mesh.n_triangles()])
    }

    /// Triangle orders as given; edge orders by the minimum rule.
    pub fn from_triangles(mesh: &Mesh, orders: Vec<usize>) -> Result<OrderMap> {
        if orders.len() != mesh.n_triangles() {
            return Err(Error::InvalidArgument(format!(
                "{} orders given for {} triangles",
                orders.len(),
                mesh.n_triangles()
            )));
        }
        if let Some((t, r)) = orders.iter().enumerate().find(|(_, &r)| r > R_MAX) {
            return Err(Error::InvalidOrder(format!("triangle {t}: order {r} above {R_MAX}")));
        }
        let mut edge = vec![usize::MAX; mesh.edges.len()];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            for &e in &tri.e {
                edge[e] = edge[e].min(orders[t]);
            }
        }
        Ok(OrderMap { triangle: orders, edge, r_max: R_MAX })
    }

    /// One order per patch of the initial mesh; refined triangles inherit it.
    pub fn per_patch(mesh: &Mesh, patch_orders: &[usize]) -> Result<OrderMap> {
        if patch_orders.len() != mesh.patches.len() {
            return Err(Error::InvalidArgument(format!(
                "{} orders given for {} patches",
                patch_orders.len(),
                mesh.patches.len()
            )));
        }
        OrderMap::from_triangles(mesh, mesh.triangles.iter().map(|t| patch_orders[t.patch]).collect())
    }

    /// Re-apply the minimum rule to the current triangle orders.
    pub fn enforce_min_rule(&self, mesh: &Mesh) -> Result<OrderMap> {
        OrderMap::from_triangles(mesh, self.triangle.clone())
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if self.triangle.len() != mesh.n_triangles() || self.edge.len() != mesh.edges.len() {
            return Err(Error::InvalidArgument("order map does not match the mesh".into()));
        }
        for (t, tri) in mesh.triangles.iter().enumerate() {
            if self.triangle[t] > self.r_max {
                return Err(Error::InvalidOrder(format!("triangle {t}: order above {}", self.r_max)));
            }
            for &e in &tri.e {
                if self.edge[e] > self.triangle[t] {
                    return Err(Error::InvalidOrder(format!(
                        "edge {e}: order {} exceeds order {} of triangle {t}",
                        self.edge[e], self.triangle[t]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn local(&self, mesh: &Mesh, t: usize) -> LocalOrder {
        let e = mesh.triangles[t].e;
        LocalOrder { r: self.triangle[t], edge: [self.edge[e[0]], self.edge[e[1]], self.edge[e[2]]] }
    }

    pub fn max_order(&self) -> usize {
        self.triangle.iter().copied().max().unwrap_or(0)
    }
}

/// Field blocks of the mixed system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Stress,
    Displacement,
    Rotation,
}

/// Numbering of the global unknowns.
///
/// Layout: stress row 0, stress row 1 (`n_row` each; edge functions first, then
/// interior functions triangle by triangle), displacement (per triangle,
/// component 0 then component 1), rotation (per triangle).
#[derive(Clone, Debug)]
pub struct DofMap {
    pub local: Vec<LocalOrder>,
    pub n_row: usize,
    pub edge_offset: Vec<usize>,
    pub interior_offset: Vec<usize>,
    pub n_disp: usize,
    pub disp_offset: Vec<usize>,
    pub n_rot: usize,
    pub rot_offset: Vec<usize>,
    /// per triangle: (row dof, sign) for each local stress-row basis function
    pub gather: Vec<Vec<(usize, f64)>>,
}

impl DofMap {
    pub fn build(mesh: &Mesh, orders: &OrderMap) -> Result<DofMap> {
        orders.validate(mesh)?;
        let local: Vec<LocalOrder> = (0..mesh.n_triangles()).map(|t| orders.local(mesh, t)).collect();
        let mut n_row = 0;
        let mut edge_offset = Vec::with_capacity(mesh.edges.len());
        for e in 0..mesh.edges.len() {
            edge_offset.push(n_row);
            n_row += orders.edge[e] + 2;
        }
        let mut interior_offset = Vec::with_capacity(mesh.n_triangles());
        let mut gather = Vec::with_capacity(mesh.n_triangles());
        for (t, lo) in local.iter().enumerate() {
            let basis = stress_basis(*lo);
            interior_offset.push(n_row);
            let mut g = Vec::with_capacity(basis.len());
            let mut interior = 0;
            for role in &basis.roles {
                match *role {
                    Role::Edge { edge, k } => {
                        let sign = if mesh.edge_aligned(t, edge) || k % 2 == 1 { 1.0 } else { -1.0 };
                        g.push((edge_offset[mesh.triangles[t].e[edge]] + k, sign));
                    }
                    _ => {
                        g.push((n_row + interior, 1.0));
                        interior += 1;
                    }
                }
            }
            n_row += interior;
            gather.push(g);
        }
        let mut n_disp = 0;
        let mut n_rot = 0;
        let mut disp_offset = Vec::new();
        let mut rot_offset = Vec::new();
        for lo in &local {
            disp_offset.push(n_disp);
            rot_offset.push(n_rot);
            n_disp += 2 * lo.scalar_dim();
            n_rot += lo.scalar_dim();
        }
        Ok(DofMap { local, n_row, edge_offset, interior_offset, n_disp, disp_offset, n_rot, rot_offset, gather })
    }

    pub fn n_stress(&self) -> usize {
        2 * self.n_row
    }

    pub fn total(&self) -> usize {
        2 * self.n_row + self.n_disp + self.n_rot
    }

    /// Global index of stress row `row`, row dof `d`.
    pub fn stress_index(&self, row: usize, d: usize) -> usize {
        row * self.n_row + d
    }

    /// Global index of displacement component `c`, local function `j` of triangle `t`.
    pub fn disp_index(&self, t: usize, c: usize, j: usize) -> usize {
        2 * self.n_row + self.disp_offset[t] + c * self.local[t].scalar_dim() + j
    }

    pub fn rot_index(&self, t: usize, j: usize) -> usize {
        2 * self.n_row + self.n_disp + self.rot_offset[t] + j
    }

    /// Gather list as CSV: field, entity kind, entity id, local index, global index.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("field,entity,entity_id,local,global\n");
        for row in 0..2 {
            for (e, &off) in self.edge_offset.iter().enumerate() {
                let n = self.interior_offset.first().copied().unwrap_or(self.n_row);
                let end = self.edge_offset.get(e + 1).copied().unwrap_or(n);
                for k in 0..end - off {
                    writeln!(s, "stress_row{row},edge,{e},{k},{}", self.stress_index(row, off + k)).unwrap();
                }
            }
            for (t, &off) in self.interior_offset.iter().enumerate() {
                let end = self.interior_offset.get(t + 1).copied().unwrap_or(self.n_row);
                for k in 0..end - off {
                    writeln!(s, "stress_row{row},triangle,{t},{k},{}", self.stress_index(row, off + k)).unwrap();
                }
            }
        }
        for (t, lo) in self.local.iter().enumerate() {
            for c in 0..2 {
                for j in 0..lo.scalar_dim() {
                    writeln!(s, "displacement{c},triangle,{t},{j},{}", self.disp_index(t, c, j)).unwrap();
                }
            }
        }
        for (t, lo) in self.local.iter().enumerate() {
            for j in 0..lo.scalar_dim() {
                writeln!(s, "rotation,triangle,{t},{j},{}", self.rot_index(t, j)).unwrap();
            }
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Push,
    Pull,
}

/// Transform reference values to physical ones (`Push`) or back (`Pull`) for a
/// form of the given kind. `dg` is the Jacobian of the element map at the point.
pub fn piola(kind: FormKind, dir: Direction, dg: &Mat2, values: &[f64]) -> Vec<f64> {
    let det = dg.determinant();
    match kind {
        FormKind::Lambda0 => values.to_vec(),
        FormKind::Lambda1 | FormKind::Lambda1Minus => {
            let v = Vec2::new(values[0], values[1]);
            let w = match dir {
                Direction::Push => dg * v / det,
                Direction::Pull => adj(dg) * v,
            };
            vec![w.x, w.y]
        }
        FormKind::Lambda2 => match dir {
            Direction::Push => values.iter().map(|v| v / det).collect(),
            Direction::Pull => values.iter().map(|v| v * det).collect(),
        },
    }
}
