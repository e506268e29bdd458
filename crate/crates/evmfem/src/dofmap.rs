//! Degree-of-freedom management for the RT0 × P0 pair with enhanced interface fluxes.
//!
//! Velocity unknowns: one per edge away from the interface (boundary edges
//! included) and one per interface sub-edge, shared by both adjacent cells so the
//! normal flux is strongly continuous across the interface. Pressure unknowns:
//! one per cell. Edge normals are globally oriented along +x/+y; the per-cell
//! tables record the ±1 sign relative to the outward normal.

use crate::mesh::{Axis, Cell, CellId, FaceDofs, FaceSide, MultiblockMesh, FACE_SIDES};

/// One flux unknown as seen from one cell.
#[derive(Clone, Debug)]
pub struct CellDof {
    /// Global velocity dof.
    pub dof: usize,
    pub face: FaceSide,
    /// +1 when the global normal is outward on this face (east/north), else -1.
    pub sign: f64,
    /// Edge or sub-edge length.
    pub length: f64,
    /// Extent along the face (y-interval for west/east, x-interval for south/north).
    pub span: (f64, f64),
}

/// Tensor sub-rectangle layout of a cell with, per slab, the local index of the
/// basis coefficient active on each face direction.
#[derive(Clone, Debug)]
pub struct CellLayout {
    pub x_breaks: Vec<f64>,
    pub y_breaks: Vec<f64>,
    /// Local dof index (into `cell_dofs`) per y-slab.
    pub west: Vec<usize>,
    pub east: Vec<usize>,
    /// Per x-slab.
    pub south: Vec<usize>,
    pub north: Vec<usize>,
}

impl CellLayout {
    pub fn x_slab(&self, x: f64) -> usize {
        slab_index(&self.x_breaks, x)
    }

    pub fn y_slab(&self, y: f64) -> usize {
        slab_index(&self.y_breaks, y)
    }

    pub fn n_x(&self) -> usize {
        self.x_breaks.len() - 1
    }

    pub fn n_y(&self) -> usize {
        self.y_breaks.len() - 1
    }
}

fn slab_index(breaks: &[f64], v: f64) -> usize {
    let n = breaks.len() - 1;
    breaks[1..n].partition_point(|&b| b <= v).min(n - 1)
}

/// Boundary edge contribution ⟨g, v·ν⟩: `sign` is +1 when the global normal
/// coincides with the outward normal of the domain.
#[derive(Clone, Debug)]
pub struct BoundaryDof {
    pub dof: usize,
    pub axis: Axis,
    pub line: f64,
    pub span: (f64, f64),
    pub sign: f64,
}

#[derive(Clone, Debug)]
pub struct DofMap {
    pub n_u: usize,
    pub n_p: usize,
    /// Per cell, its flux dofs in face order (west, east, south, north), sub-edges
    /// in ascending position.
    pub cell_dofs: Vec<Vec<CellDof>>,
    pub layouts: Vec<CellLayout>,
    pub boundary: Vec<BoundaryDof>,
    pub dof_length: Vec<f64>,
}

impl DofMap {
    pub fn build(mesh: &MultiblockMesh) -> DofMap {
        let n_edges = mesh.n_edges();
        let n_u = n_edges + mesh.n_subedges();
        let n_p = mesh.n_cells();

        let mut dof_length = vec![0.0; n_u];
        for (i, e) in mesh.edges.iter().enumerate() {
            dof_length[i] = e.length();
        }
        for (i, s) in mesh.interface.subedges.iter().enumerate() {
            dof_length[n_edges + i] = s.length();
        }

        let mut cell_dofs = Vec::with_capacity(n_p);
        let mut layouts = Vec::with_capacity(n_p);
        for cell in &mesh.cells {
            let dofs = cell_dof_table(mesh, cell, n_edges);
            let layout = cell_layout(mesh, cell, &dofs);
            cell_dofs.push(dofs);
            layouts.push(layout);
        }

        let boundary = mesh
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_boundary())
            .map(|(i, e)| BoundaryDof {
                dof: i,
                axis: e.axis,
                line: e.line,
                span: e.span,
                // boundary edge with no positive-side cell lies on the east/north
                // boundary: outward normal equals the global +x/+y normal
                sign: if e.pos_cell.is_none() { 1.0 } else { -1.0 },
            })
            .collect();

        DofMap {
            n_u,
            n_p,
            cell_dofs,
            layouts,
            boundary,
            dof_length,
        }
    }
}

fn cell_dof_table(mesh: &MultiblockMesh, cell: &Cell, n_edges: usize) -> Vec<CellDof> {
    let mut dofs = Vec::with_capacity(4);
    for side in FACE_SIDES {
        let sign = side.orientation();
        match &cell.faces[side.index()] {
            FaceDofs::Edge(e) => {
                let edge = &mesh.edges[*e];
                dofs.push(CellDof {
                    dof: *e,
                    face: side,
                    sign,
                    length: edge.length(),
                    span: edge.span,
                });
            }
            FaceDofs::Interface(subs) => {
                for &s in subs {
                    let sub = &mesh.interface.subedges[s];
                    dofs.push(CellDof {
                        dof: n_edges + s,
                        face: side,
                        sign,
                        length: sub.length(),
                        span: sub.span,
                    });
                }
            }
        }
    }
    dofs
}

fn cell_layout(mesh: &MultiblockMesh, cell: &Cell, dofs: &[CellDof]) -> CellLayout {
    let part = mesh.cell_partition(cell.id);
    let find = |face: FaceSide, mid: f64| -> usize {
        dofs.iter()
            .position(|d| d.face == face && mid >= d.span.0 && mid <= d.span.1)
            .expect("face slab not covered by a dof span")
    };
    let mut west = Vec::with_capacity(part.y_breaks.len() - 1);
    let mut east = Vec::with_capacity(part.y_breaks.len() - 1);
    for w in part.y_breaks.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        west.push(find(FaceSide::West, mid));
        east.push(find(FaceSide::East, mid));
    }
    let mut south = Vec::with_capacity(part.x_breaks.len() - 1);
    let mut north = Vec::with_capacity(part.x_breaks.len() - 1);
    for w in part.x_breaks.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        south.push(find(FaceSide::South, mid));
        north.push(find(FaceSide::North, mid));
    }
    CellLayout {
        x_breaks: part.x_breaks,
        y_breaks: part.y_breaks,
        west,
        east,
        south,
        north,
    }
}

/// Read-only view of a discrete velocity field through its coefficient vector.
#[derive(Clone, Copy)]
pub struct FluxField<'a> {
    pub mesh: &'a MultiblockMesh,
    pub dofmap: &'a DofMap,
    pub coeffs: &'a [f64],
}

impl<'a> FluxField<'a> {
    pub fn new(mesh: &'a MultiblockMesh, dofmap: &'a DofMap, coeffs: &'a [f64]) -> Self {
        FluxField { mesh, dofmap, coeffs }
    }

    /// The four effective slab coefficients (west, east, south, north) at a point
    /// of the cell.
    fn slab_coeffs(&self, cell: CellId, x: f64, y: f64) -> (f64, f64, f64, f64) {
        let layout = &self.dofmap.layouts[cell];
        let dofs = &self.dofmap.cell_dofs[cell];
        let jy = layout.y_slab(y);
        let jx = layout.x_slab(x);
        let c = |l: usize| self.coeffs[dofs[l].dof];
        (
            c(layout.west[jy]),
            c(layout.east[jy]),
            c(layout.south[jx]),
            c(layout.north[jx]),
        )
    }

    /// u_h at a point of the given cell.
    pub fn eval_in_cell(&self, cell: CellId, x: f64, y: f64) -> (f64, f64) {
        let r = &self.mesh.cells[cell].rect;
        let (cw, ce, cs, cn) = self.slab_coeffs(cell, x, y);
        let tx = (x - r.x0) / r.width();
        let ty = (y - r.y0) / r.height();
        (cw * (1.0 - tx) + ce * tx, cs * (1.0 - ty) + cn * ty)
    }

    /// ∇·u_h at a point of the given cell (piecewise constant per sub-rectangle).
    pub fn div_in_cell(&self, cell: CellId, x: f64, y: f64) -> f64 {
        let r = &self.mesh.cells[cell].rect;
        let (cw, ce, cs, cn) = self.slab_coeffs(cell, x, y);
        (ce - cw) / r.width() + (cn - cs) / r.height()
    }

    /// Mean divergence over the cell, Σ_a sign_a u_a |e_a| / |T|; this is the
    /// cell-constant divergence value of the P0-tested mixed system.
    pub fn div_cell_mean(&self, cell: CellId) -> f64 {
        let net: f64 = self.dofmap.cell_dofs[cell]
            .iter()
            .map(|d| d.sign * self.coeffs[d.dof] * d.length)
            .sum();
        net / self.mesh.cells[cell].rect.area()
    }

    /// u_h at an arbitrary point of the domain.
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        let cell = self.mesh.locate_cell(x, y);
        self.eval_in_cell(cell, x, y)
    }

    /// Length-weighted mean of the flux through one face of a cell; equals the
    /// plain coefficient away from the interface, and the L²-projection of the
    /// sub-edge fluxes onto the whole face on the interface.
    pub fn face_mean(&self, cell: CellId, face: FaceSide) -> f64 {
        let dofs = &self.dofmap.cell_dofs[cell];
        let mut num = 0.0;
        let mut den = 0.0;
        for d in dofs.iter().filter(|d| d.face == face) {
            num += self.coeffs[d.dof] * d.length;
            den += d.length;
        }
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, DomainSpec};

    #[test]
    fn counts_match_mesh_entities() {
        let spec = DomainSpec::checkerboard(2, 2, 2, 2);
        let mesh = build_mesh(&spec).unwrap();
        let dm = DofMap::build(&mesh);
        assert_eq!(dm.n_u, mesh.n_edges() + mesh.n_subedges());
        assert_eq!(dm.n_p, mesh.n_cells());
    }

    #[test]
    fn subedge_dofs_shared_with_opposite_signs() {
        let spec = DomainSpec::checkerboard(2, 2, 2, 2);
        let mesh = build_mesh(&spec).unwrap();
        let dm = DofMap::build(&mesh);
        let n_edges = mesh.n_edges();
        for (s, _) in mesh.interface.subedges.iter().enumerate() {
            let dof = n_edges + s;
            let mut signs = Vec::new();
            for table in &dm.cell_dofs {
                for d in table.iter().filter(|d| d.dof == dof) {
                    signs.push(d.sign);
                }
            }
            assert_eq!(signs.len(), 2, "sub-edge dof {dof} must appear in 2 cells");
            assert_eq!(signs[0] * signs[1], -1.0);
        }
    }

    #[test]
    fn interior_edge_dofs_shared() {
        let spec = DomainSpec::single_block(3, 2);
        let mesh = build_mesh(&spec).unwrap();
        let dm = DofMap::build(&mesh);
        for (e, edge) in mesh.edges.iter().enumerate() {
            let uses: usize = dm
                .cell_dofs
                .iter()
                .map(|t| t.iter().filter(|d| d.dof == e).count())
                .sum();
            assert_eq!(uses, if edge.is_boundary() { 1 } else { 2 });
        }
    }

    #[test]
    fn constant_field_is_reproduced() {
        // coefficients 1 on every x-dof, 0 on y-dofs -> u = (1, 0) everywhere
        let spec = DomainSpec::checkerboard(2, 2, 2, 2);
        let mesh = build_mesh(&spec).unwrap();
        let dm = DofMap::build(&mesh);
        let mut coeffs = vec![0.0; dm.n_u];
        for (i, e) in mesh.edges.iter().enumerate() {
            if e.axis == Axis::X {
                coeffs[i] = 1.0;
            }
        }
        for (i, s) in mesh.interface.subedges.iter().enumerate() {
            if s.axis == Axis::X {
                coeffs[mesh.n_edges() + i] = 1.0;
            }
        }
        let field = FluxField::new(&mesh, &dm, &coeffs);
        for &(x, y) in &[(0.13, 0.41), (0.5, 0.77), (0.93, 0.08), (0.26, 0.52)] {
            let (ux, uy) = field.eval(x, y);
            assert!((ux - 1.0).abs() < 1e-14);
            assert!(uy.abs() < 1e-14);
            let cell = mesh.locate_cell(x, y);
            assert!(field.div_in_cell(cell, x, y).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_signs_point_outward() {
        let spec = DomainSpec::single_block(2, 2);
        let mesh = build_mesh(&spec).unwrap();
        let dm = DofMap::build(&mesh);
        for b in &dm.boundary {
            let e = &mesh.edges[b.dof];
            match b.axis {
                Axis::X => {
                    if e.line < 0.5 {
                        assert_eq!(b.sign, -1.0); // west boundary
                    } else {
                        assert_eq!(b.sign, 1.0);
                    }
                }
                Axis::Y => {
                    if e.line < 0.5 {
                        assert_eq!(b.sign, -1.0);
                    } else {
                        assert_eq!(b.sign, 1.0);
                    }
                }
            }
        }
    }
}
