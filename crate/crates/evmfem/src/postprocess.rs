//! Pressure postprocessing: per-element Lagrange multipliers, a local quadratic
//! lift p̃, and a subdomain-continuous biquadratic recovery s.
//!
//! Step 1 extracts one edge-constant multiplier per cell face from (u_h, p_h),
//! using the face-wide RT0 test function; on interface faces the sub-edge fluxes
//! are first L²-projected onto the face (their length-weighted mean). Step 2
//! builds p̃ ∈ span{1, x, y, x², y²} per cell from the cell mean of p_h and the
//! four face means of the multipliers. Step 3 averages p̃ at the 9 biquadratic
//! Lagrange nodes of each cell, separately within each subdomain, to produce a
//! recovered pressure s that is continuous inside every subdomain but may jump
//! across the interface.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dofmap::{DofMap, FluxField};
use crate::error::Result;
use crate::mesh::{Cell, FaceSide, MultiblockMesh};
use crate::permeability::PermeabilityField;
use crate::quadrature::gauss_1d;
use crate::solver::MixedSolution;

/// One constant multiplier per cell face, ordered west, east, south, north.
#[derive(Clone, Debug)]
pub struct LagrangeMultipliers {
    pub per_cell: Vec<[f64; 4]>,
}

/// Per-cell coefficients of p̃ = c0 + c1 ξ + c2 υ + c3 ξ² + c4 υ² in cell-local
/// coordinates (ξ, υ) ∈ [0, 1]².
#[derive(Clone, Debug)]
pub struct PostprocessedPressure {
    pub coeffs: Vec<[f64; 5]>,
}

impl PostprocessedPressure {
    pub fn value(&self, cell: &Cell, x: f64, y: f64) -> f64 {
        let c = &self.coeffs[cell.id];
        let xi = (x - cell.rect.x0) / cell.rect.width();
        let et = (y - cell.rect.y0) / cell.rect.height();
        c[0] + c[1] * xi + c[2] * et + c[3] * xi * xi + c[4] * et * et
    }

    pub fn gradient(&self, cell: &Cell, x: f64, y: f64) -> (f64, f64) {
        let c = &self.coeffs[cell.id];
        let xi = (x - cell.rect.x0) / cell.rect.width();
        let et = (y - cell.rect.y0) / cell.rect.height();
        (
            (c[1] + 2.0 * c[3] * xi) / cell.rect.width(),
            (c[2] + 2.0 * c[4] * et) / cell.rect.height(),
        )
    }
}

/// Treatment of recovered-pressure values at nodes on the outer boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OswaldBoundary {
    /// Use the Dirichlet data g at boundary nodes.
    DirichletData,
    /// Set boundary nodes to zero.
    Zero,
}

/// Per-cell nodal values of s on the 9 biquadratic Lagrange nodes; node (i, j)
/// with i, j ∈ {0, 1, 2} is stored at index 3j + i.
#[derive(Clone, Debug)]
pub struct RecoveredPressure {
    pub nodal: Vec<[f64; 9]>,
}

fn q2_shape(t: f64) -> [f64; 3] {
    [
        2.0 * t * t - 3.0 * t + 1.0,
        4.0 * t - 4.0 * t * t,
        2.0 * t * t - t,
    ]
}

fn q2_shape_deriv(t: f64) -> [f64; 3] {
    [4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0]
}

impl RecoveredPressure {
    pub fn value(&self, cell: &Cell, x: f64, y: f64) -> f64 {
        let n = &self.nodal[cell.id];
        let lx = q2_shape((x - cell.rect.x0) / cell.rect.width());
        let ly = q2_shape((y - cell.rect.y0) / cell.rect.height());
        let mut v = 0.0;
        for j in 0..3 {
            for i in 0..3 {
                v += n[3 * j + i] * lx[i] * ly[j];
            }
        }
        v
    }

    pub fn gradient(&self, cell: &Cell, x: f64, y: f64) -> (f64, f64) {
        let n = &self.nodal[cell.id];
        let xi = (x - cell.rect.x0) / cell.rect.width();
        let et = (y - cell.rect.y0) / cell.rect.height();
        let lx = q2_shape(xi);
        let ly = q2_shape(et);
        let dx = q2_shape_deriv(xi);
        let dy = q2_shape_deriv(et);
        let mut gx = 0.0;
        let mut gy = 0.0;
        for j in 0..3 {
            for i in 0..3 {
                gx += n[3 * j + i] * dx[i] * ly[j];
                gy += n[3 * j + i] * lx[i] * dy[j];
            }
        }
        (gx / cell.rect.width(), gy / cell.rect.height())
    }
}

/// Multipliers λ per cell face from λ_e |e| = (p_h, ∇·v_e)_T − (K⁻¹u_h, v_e)_T
/// with the outward-normalized face test function v_e. A constant state
/// (u_h = 0, p_h = c) yields λ = c on every face.
pub fn compute_multipliers(
    mesh: &MultiblockMesh,
    dofmap: &DofMap,
    k: &PermeabilityField,
    solution: &MixedSolution,
) -> Result<LagrangeMultipliers> {
    let flux = FluxField::new(mesh, dofmap, &solution.flux);
    let rule = gauss_1d(crate::assembly::MASS_QUAD);
    let mut per_cell = Vec::with_capacity(mesh.n_cells());

    for cell in &mesh.cells {
        let rect = &cell.rect;
        let (hx, hy) = (rect.width(), rect.height());
        let p = solution.pressure[cell.id];
        // face-mean fluxes: the L² projection of the sub-edge fluxes onto the face
        let cw = flux.face_mean(cell.id, FaceSide::West);
        let ce = flux.face_mean(cell.id, FaceSide::East);
        let cs = flux.face_mean(cell.id, FaceSide::South);
        let cn = flux.face_mean(cell.id, FaceSide::North);

        // ∫_T K⁻¹ u_eff · φ_face over the cell's sub-rectangles
        let layout = &dofmap.layouts[cell.id];
        let mut int_w = 0.0;
        let mut int_e = 0.0;
        let mut int_s = 0.0;
        let mut int_n = 0.0;
        for jy in 0..layout.n_y() {
            let (y0, y1) = (layout.y_breaks[jy], layout.y_breaks[jy + 1]);
            for jx in 0..layout.n_x() {
                let (x0, x1) = (layout.x_breaks[jx], layout.x_breaks[jx + 1]);
                let area = (x1 - x0) * (y1 - y0);
                for &(xi, wx) in rule {
                    let x = x0 + (x1 - x0) * xi;
                    let tx = (x - rect.x0) / hx;
                    for &(yi, wy) in rule {
                        let y = y0 + (y1 - y0) * yi;
                        let ty = (y - rect.y0) / hy;
                        let (ikx, iky) = k.inverse(x, y)?;
                        let w = wx * wy * area;
                        let ux = cw * (1.0 - tx) + ce * tx;
                        let uy = cs * (1.0 - ty) + cn * ty;
                        int_w += w * ikx * ux * (1.0 - tx);
                        int_e += w * ikx * ux * tx;
                        int_s += w * iky * uy * (1.0 - ty);
                        int_n += w * iky * uy * ty;
                    }
                }
            }
        }

        per_cell.push([
            p + int_w / hy,
            p - int_e / hy,
            p + int_s / hx,
            p - int_n / hx,
        ]);
    }
    Ok(LagrangeMultipliers { per_cell })
}

/// The 5×5 moment-matching system for p̃ on [0, 1]²: row 0 the cell mean, rows
/// 1..=4 the west/east/south/north face means.
fn ptilde_system() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        5,
        5,
        &[
            1.0, 0.5, 0.5, 1.0 / 3.0, 1.0 / 3.0, // (p̃, 1)_T
            1.0, 0.0, 0.5, 0.0, 1.0 / 3.0, // ⟨p̃, 1⟩_W
            1.0, 1.0, 0.5, 1.0, 1.0 / 3.0, // ⟨p̃, 1⟩_E
            1.0, 0.5, 0.0, 1.0 / 3.0, 0.0, // ⟨p̃, 1⟩_S
            1.0, 0.5, 1.0, 1.0 / 3.0, 1.0, // ⟨p̃, 1⟩_N
        ],
    )
}

/// Per-cell quadratic lift matching the cell mean of p_h and the face means of λ.
pub fn postprocess_ptilde(
    mesh: &MultiblockMesh,
    solution: &MixedSolution,
    lambda: &LagrangeMultipliers,
) -> PostprocessedPressure {
    // the local system is identical for every cell in [0,1]² coordinates
    let lu = ptilde_system().lu();
    let mut coeffs = Vec::with_capacity(mesh.n_cells());
    for cell in &mesh.cells {
        let l = &lambda.per_cell[cell.id];
        let rhs = DVector::from_column_slice(&[
            solution.pressure[cell.id],
            l[FaceSide::West.index()],
            l[FaceSide::East.index()],
            l[FaceSide::South.index()],
            l[FaceSide::North.index()],
        ]);
        let c = lu
            .solve(&rhs)
            .expect("p-tilde local system is nonsingular on rectangles");
        coeffs.push([c[0], c[1], c[2], c[3], c[4]]);
    }
    PostprocessedPressure { coeffs }
}

/// Nodal averaging of p̃ over the biquadratic Lagrange nodes of each subdomain.
///
/// Interface nodes are averaged separately on each side, so s may jump across the
/// interface; s is continuous inside each subdomain. Boundary nodes take the
/// Dirichlet data (or zero, in the paper-literal mode).
pub fn oswald_average(
    mesh: &MultiblockMesh,
    ptilde: &PostprocessedPressure,
    boundary: OswaldBoundary,
    g: impl Fn(f64, f64) -> f64,
) -> RecoveredPressure {
    let mut nodal = vec![[0.0; 9]; mesh.n_cells()];
    let tol_x = 1e-12 * mesh.domain.width();
    let tol_y = 1e-12 * mesh.domain.height();

    for sub in &mesh.subdomains {
        let nnx = 2 * sub.nx + 1;
        let nny = 2 * sub.ny + 1;
        let mut sum = vec![0.0; nnx * nny];
        let mut count = vec![0u32; nnx * nny];

        let node_coord = |g2: usize, lines: &[f64]| -> f64 {
            if g2 % 2 == 0 {
                lines[g2 / 2]
            } else {
                0.5 * (lines[(g2 - 1) / 2] + lines[(g2 + 1) / 2])
            }
        };

        for iy in 0..sub.ny {
            for ix in 0..sub.nx {
                let id = sub.global_cell(ix, iy);
                let c = &ptilde.coeffs[id];
                for j in 0..3usize {
                    for i in 0..3usize {
                        let xi = i as f64 * 0.5;
                        let et = j as f64 * 0.5;
                        let v = c[0] + c[1] * xi + c[2] * et + c[3] * xi * xi + c[4] * et * et;
                        let node = (2 * ix + i) + nnx * (2 * iy + j);
                        sum[node] += v;
                        count[node] += 1;
                    }
                }
            }
        }

        for iy in 0..sub.ny {
            for ix in 0..sub.nx {
                let id = sub.global_cell(ix, iy);
                for j in 0..3usize {
                    for i in 0..3usize {
                        let gx = 2 * ix + i;
                        let gy = 2 * iy + j;
                        let node = gx + nnx * gy;
                        let x = node_coord(gx, &sub.xs);
                        let y = node_coord(gy, &sub.ys);
                        let on_boundary = (x - mesh.domain.x0).abs() <= tol_x
                            || (x - mesh.domain.x1).abs() <= tol_x
                            || (y - mesh.domain.y0).abs() <= tol_y
                            || (y - mesh.domain.y1).abs() <= tol_y;
                        nodal[id][3 * j + i] = if on_boundary {
                            match boundary {
                                OswaldBoundary::DirichletData => g(x, y),
                                OswaldBoundary::Zero => 0.0,
                            }
                        } else {
                            sum[node] / count[node] as f64
                        };
                    }
                }
            }
        }
    }
    RecoveredPressure { nodal }
}

/// Residuals of the p̃ construction for verification: per cell, the cell-mean
/// defect and the four face-mean defects, both relative.
pub fn ptilde_condition_defects(
    mesh: &MultiblockMesh,
    solution: &MixedSolution,
    lambda: &LagrangeMultipliers,
    ptilde: &PostprocessedPressure,
) -> Vec<[f64; 5]> {
    mesh.cells
        .iter()
        .map(|cell| {
            let c = &ptilde.coeffs[cell.id];
            let mean = c[0] + 0.5 * c[1] + 0.5 * c[2] + c[3] / 3.0 + c[4] / 3.0;
            let face = |side: FaceSide| -> f64 {
                match side {
                    FaceSide::West => c[0] + 0.5 * c[2] + c[4] / 3.0,
                    FaceSide::East => c[0] + c[1] + 0.5 * c[2] + c[3] + c[4] / 3.0,
                    FaceSide::South => c[0] + 0.5 * c[1] + c[3] / 3.0,
                    FaceSide::North => c[0] + 0.5 * c[1] + c[2] + c[3] / 3.0 + c[4],
                }
            };
            let p = solution.pressure[cell.id];
            let rel = |got: f64, want: f64| (got - want).abs() / want.abs().max(1.0);
            let l = &lambda.per_cell[cell.id];
            [
                rel(mean, p),
                rel(face(FaceSide::West), l[0]),
                rel(face(FaceSide::East), l[1]),
                rel(face(FaceSide::South), l[2]),
                rel(face(FaceSide::North), l[3]),
            ]
        })
        .collect()
}

/// Largest mismatch of s across edges shared inside one subdomain, sampled at 5
/// points per edge. Continuity within subdomains should hold to roundoff.
pub fn recovered_continuity_defect(mesh: &MultiblockMesh, s: &RecoveredPressure) -> f64 {
    let mut worst: f64 = 0.0;
    for edge in &mesh.edges {
        let (Some(a), Some(b)) = (edge.neg_cell, edge.pos_cell) else {
            continue;
        };
        for k in 0..5 {
            let t = (k as f64 + 0.5) / 5.0;
            let (x, y) = match edge.axis {
                crate::mesh::Axis::X => (edge.line, edge.span.0 + t * (edge.span.1 - edge.span.0)),
                crate::mesh::Axis::Y => (edge.span.0 + t * (edge.span.1 - edge.span.0), edge.line),
            };
            let va = s.value(&mesh.cells[a], x, y);
            let vb = s.value(&mesh.cells[b], x, y);
            worst = worst.max((va - vb).abs());
        }
    }
    worst
}
