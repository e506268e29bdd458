//! Local matrices and global assembly of the mixed saddle-point system.
//!
//! The discrete problem is
//!   (K⁻¹u_h, v) = (p_h, ∇·v) − ⟨g, v·ν⟩_∂Ω   for all velocity test functions v,
//!   (∇·u_h, w) = (f, w)                        for all cell constants w.
//!
//! It is stored as the symmetric block system [[M, Bᵀ], [B, 0]] acting on
//! (u, −p), with right-hand side (−⟨g, v·ν⟩; (f, w)). Velocity mass entries use
//! 2×2 Gauss per sub-rectangle of the cell partition; source terms use 3×3.

use nalgebra::{DMatrix, DVector};

use crate::dofmap::DofMap;
use crate::error::Result;
use crate::mesh::{CellId, MultiblockMesh};
use crate::permeability::PermeabilityField;
use crate::quadrature::{gauss_1d, integrate_interval, integrate_rect};

/// Gauss points per axis for velocity mass terms.
pub const MASS_QUAD: usize = 2;
/// Gauss points per axis for source terms and boundary data.
pub const SOURCE_QUAD: usize = 3;

#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub n_u: usize,
    pub n_p: usize,
    /// Velocity mass block M, all nonzeros (symmetric, duplicates summed later).
    pub mass: Vec<(usize, usize, f64)>,
    /// Divergence block B: (pressure row, velocity column, value).
    pub div: Vec<(usize, usize, f64)>,
    /// −⟨g, v·ν⟩ per velocity dof.
    pub rhs_flux: Vec<f64>,
    /// ∫_T f per cell.
    pub rhs_mass: Vec<f64>,
}

impl SaddleSystem {
    pub fn n_total(&self) -> usize {
        self.n_u + self.n_p
    }

    /// Stacked right-hand side (flux block, then pressure block).
    pub fn rhs(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.n_total());
        b.extend_from_slice(&self.rhs_flux);
        b.extend_from_slice(&self.rhs_mass);
        b
    }

    /// y = A z for the full block system.
    pub fn apply(&self, z: &[f64], y: &mut [f64]) {
        assert_eq!(z.len(), self.n_total());
        y.iter_mut().for_each(|v| *v = 0.0);
        for &(i, j, v) in &self.mass {
            y[i] += v * z[j];
        }
        for &(t, a, v) in &self.div {
            y[a] += v * z[self.n_u + t]; // Bᵀ block
            y[self.n_u + t] += v * z[a]; // B block
        }
    }

    /// Relative residual ‖Az − b‖/‖b‖ (absolute when b = 0).
    pub fn residual(&self, z: &[f64]) -> f64 {
        let b = self.rhs();
        let mut az = vec![0.0; self.n_total()];
        self.apply(z, &mut az);
        let num = az
            .iter()
            .zip(&b)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if den > 0.0 {
            num / den
        } else {
            num
        }
    }
}

/// Velocity mass matrix of one cell over its flux dofs, M_ab = ∫_T K⁻¹ φ_a·φ_b.
///
/// Symmetric; basis functions of different directions do not couple since K is
/// diagonal. Sub-edge bases on the same face have disjoint strips, so their
/// mutual entries vanish.
pub fn local_mass_matrix(
    mesh: &MultiblockMesh,
    dofmap: &DofMap,
    cell: CellId,
    k: &PermeabilityField,
) -> Result<DMatrix<f64>> {
    let rect = &mesh.cells[cell].rect;
    let layout = &dofmap.layouts[cell];
    let n = dofmap.cell_dofs[cell].len();
    let mut m = DMatrix::zeros(n, n);
    let rule = gauss_1d(MASS_QUAD);
    let (hx, hy) = (rect.width(), rect.height());

    for jy in 0..layout.n_y() {
        let (y0, y1) = (layout.y_breaks[jy], layout.y_breaks[jy + 1]);
        for jx in 0..layout.n_x() {
            let (x0, x1) = (layout.x_breaks[jx], layout.x_breaks[jx + 1]);
            let area = (x1 - x0) * (y1 - y0);
            let (lw, le) = (layout.west[jy], layout.east[jy]);
            let (ls, ln) = (layout.south[jx], layout.north[jx]);

            let mut ww = 0.0;
            let mut we = 0.0;
            let mut ee = 0.0;
            let mut ss = 0.0;
            let mut sn = 0.0;
            let mut nn = 0.0;
            for &(xi, wx) in rule {
                let x = x0 + (x1 - x0) * xi;
                let tx = (x - rect.x0) / hx;
                for &(yi, wy) in rule {
                    let y = y0 + (y1 - y0) * yi;
                    let ty = (y - rect.y0) / hy;
                    let (ikx, iky) = k.inverse(x, y)?;
                    let w = wx * wy;
                    ww += w * ikx * (1.0 - tx) * (1.0 - tx);
                    we += w * ikx * (1.0 - tx) * tx;
                    ee += w * ikx * tx * tx;
                    ss += w * iky * (1.0 - ty) * (1.0 - ty);
                    sn += w * iky * (1.0 - ty) * ty;
                    nn += w * iky * ty * ty;
                }
            }
            m[(lw, lw)] += area * ww;
            m[(le, le)] += area * ee;
            m[(lw, le)] += area * we;
            m[(le, lw)] += area * we;
            m[(ls, ls)] += area * ss;
            m[(ln, ln)] += area * nn;
            m[(ls, ln)] += area * sn;
            m[(ln, ls)] += area * sn;
        }
    }
    Ok(m)
}

/// Divergence row of one cell: ∫_T ∇·φ_a = ±|e_a| per flux dof.
pub fn local_div_matrix(dofmap: &DofMap, cell: CellId) -> DVector<f64> {
    let dofs = &dofmap.cell_dofs[cell];
    DVector::from_iterator(dofs.len(), dofs.iter().map(|d| d.sign * d.length))
}

/// Assembles the global saddle-point system.
pub fn assemble(
    mesh: &MultiblockMesh,
    dofmap: &DofMap,
    k: &PermeabilityField,
    f: impl Fn(f64, f64) -> f64,
    g: impl Fn(f64, f64) -> f64,
) -> Result<SaddleSystem> {
    let mut system = SaddleSystem {
        n_u: dofmap.n_u,
        n_p: dofmap.n_p,
        mass: Vec::new(),
        div: Vec::new(),
        rhs_flux: vec![0.0; dofmap.n_u],
        rhs_mass: vec![0.0; dofmap.n_p],
    };

    for cell in 0..mesh.n_cells() {
        let dofs = &dofmap.cell_dofs[cell];
        let m = local_mass_matrix(mesh, dofmap, cell, k)?;
        for (a, da) in dofs.iter().enumerate() {
            for (b, db) in dofs.iter().enumerate() {
                let v = m[(a, b)];
                if v != 0.0 {
                    system.mass.push((da.dof, db.dof, v));
                }
            }
        }
        for d in dofs {
            system.div.push((cell, d.dof, d.sign * d.length));
        }

        let layout = &dofmap.layouts[cell];
        let mut ff = 0.0;
        for jy in 0..layout.n_y() {
            for jx in 0..layout.n_x() {
                let sub = crate::mesh::Rect::new(
                    layout.x_breaks[jx],
                    layout.y_breaks[jy],
                    layout.x_breaks[jx + 1],
                    layout.y_breaks[jy + 1],
                );
                ff += integrate_rect(&sub, SOURCE_QUAD, &f);
            }
        }
        system.rhs_mass[cell] = ff;
    }

    for b in &dofmap.boundary {
        let gi = match b.axis {
            crate::mesh::Axis::X => {
                integrate_interval(b.span.0, b.span.1, SOURCE_QUAD, |y| g(b.line, y))
            }
            crate::mesh::Axis::Y => {
                integrate_interval(b.span.0, b.span.1, SOURCE_QUAD, |x| g(x, b.line))
            }
        };
        system.rhs_flux[b.dof] = -b.sign * gi;
    }

    Ok(system)
}

/// Per-cell conservation defect ∫_T f − Σ_a sign_a u_a |e_a| of a flux vector.
pub fn conservation_defects(
    mesh: &MultiblockMesh,
    dofmap: &DofMap,
    flux: &[f64],
    f: impl Fn(f64, f64) -> f64,
) -> Vec<f64> {
    (0..mesh.n_cells())
        .map(|cell| {
            let layout = &dofmap.layouts[cell];
            let mut ff = 0.0;
            for jy in 0..layout.n_y() {
                for jx in 0..layout.n_x() {
                    let sub = crate::mesh::Rect::new(
                        layout.x_breaks[jx],
                        layout.y_breaks[jy],
                        layout.x_breaks[jx + 1],
                        layout.y_breaks[jy + 1],
                    );
                    ff += integrate_rect(&sub, SOURCE_QUAD, &f);
                }
            }
            let net: f64 = dofmap.cell_dofs[cell]
                .iter()
                .map(|d| d.sign * flux[d.dof] * d.length)
                .sum();
            ff - net
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dofmap::DofMap;
    use crate::mesh::{build_mesh, DomainSpec, FaceSide, RefinementPattern};

    fn unit_cell() -> (MultiblockMesh, DofMap) {
        let mesh = build_mesh(&DomainSpec::single_block(1, 1)).unwrap();
        let dm = DofMap::build(&mesh);
        (mesh, dm)
    }

    #[test]
    fn unit_cell_mass_matrix_identity_k() {
        // ∫(1-x)² = 1/3, ∫x(1-x) = 1/6 on the unit square per direction
        let (mesh, dm) = unit_cell();
        let m = local_mass_matrix(&mesh, &dm, 0, &PermeabilityField::Identity).unwrap();
        assert_eq!(m.nrows(), 4);
        let dofs = &dm.cell_dofs[0];
        let idx = |f: FaceSide| dofs.iter().position(|d| d.face == f).unwrap();
        let (w, e, s, n) = (
            idx(FaceSide::West),
            idx(FaceSide::East),
            idx(FaceSide::South),
            idx(FaceSide::North),
        );
        for (a, b, v) in [
            (w, w, 1.0 / 3.0),
            (e, e, 1.0 / 3.0),
            (w, e, 1.0 / 6.0),
            (s, s, 1.0 / 3.0),
            (n, n, 1.0 / 3.0),
            (s, n, 1.0 / 6.0),
            (w, s, 0.0),
            (w, n, 0.0),
            (e, s, 0.0),
        ] {
            assert!((m[(a, b)] - v).abs() < 1e-14, "entry ({a},{b}) = {}", m[(a, b)]);
        }
    }

    #[test]
    fn constant_k_scales_inverse() {
        let (mesh, dm) = unit_cell();
        let m1 = local_mass_matrix(&mesh, &dm, 0, &PermeabilityField::Identity).unwrap();
        let m2 = local_mass_matrix(&mesh, &dm, 0, &PermeabilityField::scalar(2.0)).unwrap();
        assert!((m2.clone() * 2.0 - m1).norm() < 1e-14);
    }

    #[test]
    fn enhanced_cell_subedge_bases_do_not_overlap() {
        // left block 1x1 cell, right block 1x2 cells: the left cell's east face
        // splits in two sub-edges with disjoint strips
        let spec = DomainSpec::uniform_blocks(
            (0.0, 0.0),
            (1.0, 1.0),
            2,
            1,
            vec![(1, 1), (1, 2)],
            RefinementPattern::Custom,
        );
        let mesh = build_mesh(&spec).unwrap();
        let dm = DofMap::build(&mesh);
        let dofs = &dm.cell_dofs[0];
        assert_eq!(dofs.len(), 5);
        let subs: Vec<usize> = dofs
            .iter()
            .enumerate()
            .filter(|(_, d)| d.face == FaceSide::East)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(subs.len(), 2);
        let m = local_mass_matrix(&mesh, &dm, 0, &PermeabilityField::Identity).unwrap();
        assert_eq!(m[(subs[0], subs[1])], 0.0);
        assert!((m.transpose() - &m).norm() < 1e-14);
    }

    #[test]
    fn div_row_signs_and_lengths() {
        let (mesh, dm) = unit_cell();
        let b = local_div_matrix(&dm, 0);
        let dofs = &dm.cell_dofs[0];
        for (i, d) in dofs.iter().enumerate() {
            let expect = match d.face {
                FaceSide::East | FaceSide::North => 1.0,
                _ => -1.0,
            };
            assert_eq!(b[i], expect);
        }
        // divergence of a constant field integrates to zero
        let coeffs: Vec<f64> = dofs
            .iter()
            .map(|d| match d.face {
                FaceSide::West | FaceSide::East => 1.0,
                _ => 0.3,
            })
            .collect();
        let total: f64 = coeffs.iter().zip(b.iter()).map(|(c, b)| c * b).sum();
        assert!(total.abs() < 1e-15);
    }

    #[test]
    fn subedge_div_entry_is_subedge_length() {
        let spec = DomainSpec::uniform_blocks(
            (0.0, 0.0),
            (1.0, 1.0),
            2,
            1,
            vec![(1, 1), (1, 2)],
            RefinementPattern::Custom,
        );
        let mesh = build_mesh(&spec).unwrap();
        let dm = DofMap::build(&mesh);
        let b = local_div_matrix(&dm, 0);
        let dofs = &dm.cell_dofs[0];
        for (i, d) in dofs.iter().enumerate() {
            if d.face == FaceSide::East {
                assert!((b[i] - 0.5).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rhs_of_unit_source_is_cell_area() {
        let spec = DomainSpec::checkerboard(2, 2, 2, 2);
        let mesh = build_mesh(&spec).unwrap();
        let dm = DofMap::build(&mesh);
        let sys = assemble(&mesh, &dm, &PermeabilityField::Identity, |_, _| 1.0, |_, _| 0.0)
            .unwrap();
        for (cell, &v) in sys.rhs_mass.iter().enumerate() {
            assert!((v - mesh.cells[cell].rect.area()).abs() < 1e-14);
        }
        assert!(sys.rhs_flux.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn homogeneous_data_gives_zero_rhs() {
        let spec = DomainSpec::checkerboard(2, 2, 2, 2);
        let mesh = build_mesh(&spec).unwrap();
        let dm = DofMap::build(&mesh);
        let sys = assemble(&mesh, &dm, &PermeabilityField::Identity, |_, _| 0.0, |_, _| 0.0)
            .unwrap();
        assert!(sys.rhs().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nonpositive_k_is_a_data_error() {
        let (mesh, dm) = unit_cell();
        let k = PermeabilityField::diagonal(|_, _| (-1.0, 1.0));
        assert!(local_mass_matrix(&mesh, &dm, 0, &k).is_err());
    }

    #[test]
    fn assembly_is_traversal_order_independent() {
        // assembling the same mesh twice must give identical triplet streams;
        // summed duplicate entries agree to roundoff regardless of cell order
        let spec = DomainSpec::checkerboard(2, 2, 2, 4);
        let mesh = build_mesh(&spec).unwrap();
        let dm = DofMap::build(&mesh);
        let k = PermeabilityField::diagonal(|x, y| (1.0 + x, 1.0 + y));
        let sys = assemble(&mesh, &dm, &k, |x, y| x + y, |x, _| x).unwrap();

        let mut dense = DMatrix::<f64>::zeros(dm.n_u, dm.n_u);
        for &(i, j, v) in &sys.mass {
            dense[(i, j)] += v;
        }
        // reassemble cell-by-cell in reverse order
        let mut dense_rev = DMatrix::<f64>::zeros(dm.n_u, dm.n_u);
        for cell in (0..mesh.n_cells()).rev() {
            let m = local_mass_matrix(&mesh, &dm, cell, &k).unwrap();
            let dofs = &dm.cell_dofs[cell];
            for (a, da) in dofs.iter().enumerate() {
                for (b, db) in dofs.iter().enumerate() {
                    dense_rev[(da.dof, db.dof)] += m[(a, b)];
                }
            }
        }
        let diff = (&dense - &dense_rev).abs().max();
        assert!(diff < 1e-14, "max entry difference {diff}");
        assert!((&dense - dense.transpose()).abs().max() < 1e-14);
    }
}
