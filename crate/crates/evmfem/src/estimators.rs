//! A posteriori error estimators for the enhanced-velocity discretization.
//!
//! Explicit (residual-based) family, per cell T and interface sub-edge e:
//!   ζ̃_P(T)  = h_T² ∫_T |K⁻¹u_h + ∇p_h|²   (∇p_h ≡ 0 for piecewise constants)
//!   ζ̃_R(T)  = h_T² ∫_T (f − ∇·u_h)²      (∇·u_h the cell-constant divergence)
//!   ζ̃_EV(e) = ‖⟦p_h⟧‖²_e · h_T,  h_T the larger adjacent cell diameter
//!   ζ_P(T)   = ∫_T |K⁻¹u_h|²
//!   ζ_EV(e)  = ‖⟦p_h⟧‖²_e / h_e
//!
//! Implicit (postprocessing-based) family with the recovered pressure s:
//!   η̃_P(T)  = h_T² ∫_T (K⁻¹u_h + ∇s)ᵀ K (K⁻¹u_h + ∇s),  η_P(T) without h_T²
//!   η̃_NC(T) = h_T² ∫_T |∇(s − p̃)|²
//!   η_R = η̃_R = ζ̃_R, and η_EV = ζ_EV is reported with the implicit family.
//!
//! The flux-mismatch term of the implicit family is measured in the same
//! K-energy metric as the actual flux error (for unit K it reduces to the plain
//! |K⁻¹u_h + ∇s|²), which keeps the estimate an upper bound of the energy error
//! under strongly varying permeability.
//!
//! Actual errors against a manufactured solution use 4×4 Gauss per
//! sub-rectangle; the flux error is measured in the K-weighted norm
//! |||v|||² = ∫ vᵀK⁻¹v.

use crate::cases::ManufacturedCase;
use crate::dofmap::{DofMap, FluxField};
use crate::error::{Error, Result};
use crate::mesh::{DomainSpec, MultiblockMesh};
use crate::permeability::PermeabilityField;
use crate::postprocess::{PostprocessedPressure, RecoveredPressure};
use crate::quadrature::gauss_1d;
use crate::solver::{solve, MixedSolution, SolverConfig};

/// Gauss points per axis for estimator integrals.
pub const ESTIMATOR_QUAD: usize = 3;
/// Gauss points per axis for actual-error integrals.
pub const ERROR_QUAD: usize = 4;

/// Per-cell and per-sub-edge estimator contributions (all squared quantities)
/// plus actual errors and derived totals.
#[derive(Clone, Debug, Default)]
pub struct EstimatorReport {
    pub zeta_tilde_p: Vec<f64>,
    /// Shared by ζ̃_R, ζ_R and η_R (identical formula).
    pub zeta_tilde_r: Vec<f64>,
    pub zeta_p: Vec<f64>,
    pub eta_tilde_p: Vec<f64>,
    pub eta_nc: Vec<f64>,
    pub eta_p: Vec<f64>,
    pub err_p_sq: Vec<f64>,
    pub err_u_energy_sq: Vec<f64>,
    pub err_u_l2_sq: Vec<f64>,
    /// ‖⟦p_h⟧‖²_e per interface sub-edge.
    pub jump_sq: Vec<f64>,
    pub zeta_tilde_ev: Vec<f64>,
    /// Also reported as η_EV.
    pub zeta_ev: Vec<f64>,
}

impl EstimatorReport {
    pub fn total(values: &[f64]) -> f64 {
        values.iter().sum()
    }

    pub fn sqrt_total(values: &[f64]) -> f64 {
        Self::total(values).max(0.0).sqrt()
    }

    pub fn eta_r(&self) -> &[f64] {
        &self.zeta_tilde_r
    }

    pub fn eta_ev(&self) -> &[f64] {
        &self.zeta_ev
    }

    pub fn err_p(&self) -> f64 {
        Self::sqrt_total(&self.err_p_sq)
    }

    pub fn err_u_energy(&self) -> f64 {
        Self::sqrt_total(&self.err_u_energy_sq)
    }

    pub fn err_u_l2(&self) -> f64 {
        Self::sqrt_total(&self.err_u_l2_sq)
    }

    /// Flux effectivity index √(Ση_P + Ση_R + Ση_EV) / |||u − u_h|||.
    pub fn effectivity_flux(&self) -> f64 {
        let estimate = (Self::total(&self.eta_p)
            + Self::total(&self.zeta_tilde_r)
            + Self::total(&self.zeta_ev))
        .max(0.0)
        .sqrt();
        estimate / self.err_u_energy()
    }
}

/// Iterates the sub-rectangles of a cell with an n×n Gauss rule.
fn integrate_cell(
    dofmap: &DofMap,
    cell: usize,
    n: usize,
    mut f: impl FnMut(f64, f64) -> Result<f64>,
) -> Result<f64> {
    let layout = &dofmap.layouts[cell];
    let rule = gauss_1d(n);
    let mut acc = 0.0;
    for jy in 0..layout.n_y() {
        let (y0, y1) = (layout.y_breaks[jy], layout.y_breaks[jy + 1]);
        for jx in 0..layout.n_x() {
            let (x0, x1) = (layout.x_breaks[jx], layout.x_breaks[jx + 1]);
            let area = (x1 - x0) * (y1 - y0);
            for &(xi, wx) in rule {
                let x = x0 + (x1 - x0) * xi;
                for &(yi, wy) in rule {
                    let y = y0 + (y1 - y0) * yi;
                    acc += wx * wy * area * f(x, y)?;
                }
            }
        }
    }
    Ok(acc)
}

/// Pressure jumps across interface sub-edges: ‖⟦p_h⟧‖²_e, and the two scalings
/// used by the explicit estimators.
fn interface_jumps(mesh: &MultiblockMesh, pressure: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut jump_sq = Vec::with_capacity(mesh.n_subedges());
    let mut scaled_ht = Vec::with_capacity(mesh.n_subedges());
    let mut scaled_inv_he = Vec::with_capacity(mesh.n_subedges());
    for s in &mesh.interface.subedges {
        let jump = pressure[s.pos_cell] - pressure[s.neg_cell];
        let len = s.length();
        let j2 = jump * jump * len;
        let h_t = mesh.cells[s.neg_cell]
            .diameter
            .max(mesh.cells[s.pos_cell].diameter);
        jump_sq.push(j2);
        scaled_ht.push(j2 * h_t);
        scaled_inv_he.push(j2 / len);
    }
    (jump_sq, scaled_ht, scaled_inv_he)
}

#[derive(Clone, Debug)]
pub struct ExplicitPressureEstimate {
    pub zeta_tilde_p: Vec<f64>,
    pub zeta_tilde_r: Vec<f64>,
    pub zeta_tilde_ev: Vec<f64>,
}

/// Theorem-1 estimator for the pressure error.
pub fn explicit_pressure_estimator(
    mesh: &MultiblockMesh,
    dofmap: &DofMap,
    solution: &MixedSolution,
    k: &PermeabilityField,
    f: impl Fn(f64, f64) -> f64,
) -> Result<ExplicitPressureEstimate> {
    let flux = FluxField::new(mesh, dofmap, &solution.flux);
    let mut zeta_tilde_p = Vec::with_capacity(mesh.n_cells());
    let mut zeta_tilde_r = Vec::with_capacity(mesh.n_cells());
    for cell in &mesh.cells {
        let h2 = cell.diameter * cell.diameter;
        let p_term = integrate_cell(dofmap, cell.id, ESTIMATOR_QUAD, |x, y| {
            let (ikx, iky) = k.inverse(x, y)?;
            let (ux, uy) = flux.eval_in_cell(cell.id, x, y);
            let rx = ikx * ux;
            let ry = iky * uy;
            Ok(rx * rx + ry * ry)
        })?;
        let div_mean = flux.div_cell_mean(cell.id);
        let r_term = integrate_cell(dofmap, cell.id, ESTIMATOR_QUAD, |x, y| {
            let r = f(x, y) - div_mean;
            Ok(r * r)
        })?;
        zeta_tilde_p.push(h2 * p_term);
        zeta_tilde_r.push(h2 * r_term);
    }
    let (_, zeta_tilde_ev, _) = interface_jumps(mesh, &solution.pressure);
    Ok(ExplicitPressureEstimate {
        zeta_tilde_p,
        zeta_tilde_r,
        zeta_tilde_ev,
    })
}

#[derive(Clone, Debug)]
pub struct ExplicitVelocityEstimate {
    pub zeta_p: Vec<f64>,
    pub zeta_r: Vec<f64>,
    pub zeta_ev: Vec<f64>,
}

/// Theorem-2 estimator for the velocity error (saturation-assumption family).
pub fn explicit_velocity_estimator(
    mesh: &MultiblockMesh,
    dofmap: &DofMap,
    solution: &MixedSolution,
    k: &PermeabilityField,
    f: impl Fn(f64, f64) -> f64,
) -> Result<ExplicitVelocityEstimate> {
    let flux = FluxField::new(mesh, dofmap, &solution.flux);
    let mut zeta_p = Vec::with_capacity(mesh.n_cells());
    let mut zeta_r = Vec::with_capacity(mesh.n_cells());
    for cell in &mesh.cells {
        let h2 = cell.diameter * cell.diameter;
        let p_term = integrate_cell(dofmap, cell.id, ESTIMATOR_QUAD, |x, y| {
            let (ikx, iky) = k.inverse(x, y)?;
            let (ux, uy) = flux.eval_in_cell(cell.id, x, y);
            let rx = ikx * ux;
            let ry = iky * uy;
            Ok(rx * rx + ry * ry)
        })?;
        let div_mean = flux.div_cell_mean(cell.id);
        let r_term = integrate_cell(dofmap, cell.id, ESTIMATOR_QUAD, |x, y| {
            let r = f(x, y) - div_mean;
            Ok(r * r)
        })?;
        zeta_p.push(p_term);
        zeta_r.push(h2 * r_term);
    }
    let (_, _, zeta_ev) = interface_jumps(mesh, &solution.pressure);
    Ok(ExplicitVelocityEstimate {
        zeta_p,
        zeta_r,
        zeta_ev,
    })
}

#[derive(Clone, Debug)]
pub struct ImplicitPressureEstimate {
    pub eta_tilde_p: Vec<f64>,
    pub eta_tilde_r: Vec<f64>,
    pub eta_nc: Vec<f64>,
}

/// Theorem-4 estimator using the recovered pressure s and the lift p̃.
pub fn implicit_pressure_estimator(
    mesh: &MultiblockMesh,
    dofmap: &DofMap,
    solution: &MixedSolution,
    ptilde: &PostprocessedPressure,
    s: &RecoveredPressure,
    k: &PermeabilityField,
    f: impl Fn(f64, f64) -> f64,
) -> Result<ImplicitPressureEstimate> {
    let flux = FluxField::new(mesh, dofmap, &solution.flux);
    let mut eta_tilde_p = Vec::with_capacity(mesh.n_cells());
    let mut eta_tilde_r = Vec::with_capacity(mesh.n_cells());
    let mut eta_nc = Vec::with_capacity(mesh.n_cells());
    for cell in &mesh.cells {
        let h2 = cell.diameter * cell.diameter;
        let p_term = integrate_cell(dofmap, cell.id, ESTIMATOR_QUAD, |x, y| {
            let (ikx, iky) = k.inverse(x, y)?;
            let (kx, ky) = k.eval(x, y);
            let (ux, uy) = flux.eval_in_cell(cell.id, x, y);
            let (sx, sy) = s.gradient(cell, x, y);
            let rx = ikx * ux + sx;
            let ry = iky * uy + sy;
            Ok(kx * rx * rx + ky * ry * ry)
        })?;
        let div_mean = flux.div_cell_mean(cell.id);
        let r_term = integrate_cell(dofmap, cell.id, ESTIMATOR_QUAD, |x, y| {
            let r = f(x, y) - div_mean;
            Ok(r * r)
        })?;
        let nc_term = integrate_cell(dofmap, cell.id, ESTIMATOR_QUAD, |x, y| {
            let (sx, sy) = s.gradient(cell, x, y);
            let (px, py) = ptilde.gradient(cell, x, y);
            let dx = sx - px;
            let dy = sy - py;
            Ok(dx * dx + dy * dy)
        })?;
        eta_tilde_p.push(h2 * p_term);
        eta_tilde_r.push(h2 * r_term);
        eta_nc.push(h2 * nc_term);
    }
    Ok(ImplicitPressureEstimate {
        eta_tilde_p,
        eta_tilde_r,
        eta_nc,
    })
}

#[derive(Clone, Debug)]
pub struct ImplicitVelocityEstimate {
    pub eta_p: Vec<f64>,
    pub eta_r: Vec<f64>,
}

/// Theorem-5 estimator for the velocity error, no saturation assumption.
pub fn implicit_velocity_estimator(
    mesh: &MultiblockMesh,
    dofmap: &DofMap,
    solution: &MixedSolution,
    s: &RecoveredPressure,
    k: &PermeabilityField,
    f: impl Fn(f64, f64) -> f64,
) -> Result<ImplicitVelocityEstimate> {
    let flux = FluxField::new(mesh, dofmap, &solution.flux);
    let mut eta_p = Vec::with_capacity(mesh.n_cells());
    let mut eta_r = Vec::with_capacity(mesh.n_cells());
    for cell in &mesh.cells {
        let h2 = cell.diameter * cell.diameter;
        let p_term = integrate_cell(dofmap, cell.id, ESTIMATOR_QUAD, |x, y| {
            let (ikx, iky) = k.inverse(x, y)?;
            let (kx, ky) = k.eval(x, y);
            let (ux, uy) = flux.eval_in_cell(cell.id, x, y);
            let (sx, sy) = s.gradient(cell, x, y);
            let rx = ikx * ux + sx;
            let ry = iky * uy + sy;
            Ok(kx * rx * rx + ky * ry * ry)
        })?;
        let div_mean = flux.div_cell_mean(cell.id);
        let r_term = integrate_cell(dofmap, cell.id, ESTIMATOR_QUAD, |x, y| {
            let r = f(x, y) - div_mean;
            Ok(r * r)
        })?;
        eta_p.push(p_term);
        eta_r.push(h2 * r_term);
    }
    Ok(ImplicitVelocityEstimate { eta_p, eta_r })
}

#[derive(Clone, Debug)]
pub struct ActualErrors {
    pub err_p_sq: Vec<f64>,
    pub err_u_energy_sq: Vec<f64>,
    pub err_u_l2_sq: Vec<f64>,
}

/// Per-cell ‖p − p_h‖²_T and |||u − u_h|||²_T against a manufactured solution,
/// with a given quadrature order per axis.
pub fn actual_errors_with_quad(
    mesh: &MultiblockMesh,
    dofmap: &DofMap,
    solution: &MixedSolution,
    case: &ManufacturedCase,
    quad: usize,
) -> Result<ActualErrors> {
    let flux = FluxField::new(mesh, dofmap, &solution.flux);
    let k = case.permeability();
    let mut err_p_sq = Vec::with_capacity(mesh.n_cells());
    let mut err_u_energy_sq = Vec::with_capacity(mesh.n_cells());
    let mut err_u_l2_sq = Vec::with_capacity(mesh.n_cells());
    for cell in &mesh.cells {
        let ph = solution.pressure[cell.id];
        let ep = integrate_cell(dofmap, cell.id, quad, |x, y| {
            let d = case.pressure(x, y) - ph;
            Ok(d * d)
        })?;
        let eu_energy = integrate_cell(dofmap, cell.id, quad, |x, y| {
            let (ikx, iky) = k.inverse(x, y)?;
            let (ux, uy) = case.velocity(x, y);
            let (uhx, uhy) = flux.eval_in_cell(cell.id, x, y);
            let dx = ux - uhx;
            let dy = uy - uhy;
            Ok(ikx * dx * dx + iky * dy * dy)
        })?;
        let eu_plain = integrate_cell(dofmap, cell.id, quad, |x, y| {
            let (ux, uy) = case.velocity(x, y);
            let (uhx, uhy) = flux.eval_in_cell(cell.id, x, y);
            let dx = ux - uhx;
            let dy = uy - uhy;
            Ok(dx * dx + dy * dy)
        })?;
        err_p_sq.push(ep);
        err_u_energy_sq.push(eu_energy);
        err_u_l2_sq.push(eu_plain);
    }
    Ok(ActualErrors {
        err_p_sq,
        err_u_energy_sq,
        err_u_l2_sq,
    })
}

pub fn actual_errors(
    mesh: &MultiblockMesh,
    dofmap: &DofMap,
    solution: &MixedSolution,
    case: &ManufacturedCase,
) -> Result<ActualErrors> {
    actual_errors_with_quad(mesh, dofmap, solution, case, ERROR_QUAD)
}

/// Assembles the full report from a solved and postprocessed state.
pub fn compute_report(
    mesh: &MultiblockMesh,
    dofmap: &DofMap,
    solution: &MixedSolution,
    ptilde: &PostprocessedPressure,
    s: &RecoveredPressure,
    k: &PermeabilityField,
    case: &ManufacturedCase,
    f: impl Fn(f64, f64) -> f64 + Copy,
) -> Result<EstimatorReport> {
    let explicit_p = explicit_pressure_estimator(mesh, dofmap, solution, k, f)?;
    let explicit_u = explicit_velocity_estimator(mesh, dofmap, solution, k, f)?;
    let implicit_p = implicit_pressure_estimator(mesh, dofmap, solution, ptilde, s, k, f)?;
    let implicit_u = implicit_velocity_estimator(mesh, dofmap, solution, s, k, f)?;
    let errors = actual_errors(mesh, dofmap, solution, case)?;
    let (jump_sq, _, _) = interface_jumps(mesh, &solution.pressure);
    Ok(EstimatorReport {
        zeta_tilde_p: explicit_p.zeta_tilde_p,
        zeta_tilde_r: explicit_p.zeta_tilde_r,
        zeta_p: explicit_u.zeta_p,
        eta_tilde_p: implicit_p.eta_tilde_p,
        eta_nc: implicit_p.eta_nc,
        eta_p: implicit_u.eta_p,
        err_p_sq: errors.err_p_sq,
        err_u_energy_sq: errors.err_u_energy_sq,
        err_u_l2_sq: errors.err_u_l2_sq,
        jump_sq,
        zeta_tilde_ev: explicit_p.zeta_tilde_ev,
        zeta_ev: explicit_u.zeta_ev,
    })
}

/// Theorem-3 stability ratio (√Σζ̃_P + √Σζ_R) / (‖p − p_h‖ + h_max ‖u − u_h‖).
/// `None` when the denominator vanishes (exactly representable solution).
pub fn lower_bound_ratio(report: &EstimatorReport, h_max: f64) -> Option<f64> {
    let num = EstimatorReport::sqrt_total(&report.zeta_tilde_p)
        + EstimatorReport::sqrt_total(&report.zeta_tilde_r);
    let den = report.err_p() + h_max * report.err_u_l2();
    if den <= 1e-14 {
        None
    } else {
        Some(num / den)
    }
}

/// Two-level saturation diagnostic.
#[derive(Clone, Debug)]
pub struct TwoLevelGap {
    /// ‖u_{h_f} − u_h‖ over the domain.
    pub gap: f64,
    /// ‖u − u_h‖ on the coarse level.
    pub coarse_error_l2: f64,
    /// ‖u − u_{h_f}‖ on the fine level.
    pub fine_error_l2: f64,
}

/// Solves on both levels and integrates ‖u_{h_f} − u_h‖; the fine spec must be a
/// uniform m ≥ 2 refinement of the coarse one so the coarse field evaluates
/// exactly inside every fine sub-rectangle.
pub fn two_level_flux_gap(
    coarse_spec: &DomainSpec,
    fine_spec: &DomainSpec,
    case: &ManufacturedCase,
    cfg: &SolverConfig,
) -> Result<TwoLevelGap> {
    check_nested(coarse_spec, fine_spec)?;

    let run = |spec: &DomainSpec| -> Result<(MultiblockMesh, DofMap, MixedSolution)> {
        let mesh = crate::mesh::build_mesh(spec)?;
        let dm = DofMap::build(&mesh);
        let k = case.permeability();
        let sys = crate::assembly::assemble(
            &mesh,
            &dm,
            &k,
            |x, y| case.source(x, y),
            |x, y| case.boundary(x, y),
        )?;
        let sol = solve(&sys, cfg)?;
        Ok((mesh, dm, sol))
    };

    let (coarse_mesh, coarse_dm, coarse_sol) = run(coarse_spec)?;
    let (fine_mesh, fine_dm, fine_sol) = run(fine_spec)?;
    let coarse_flux = FluxField::new(&coarse_mesh, &coarse_dm, &coarse_sol.flux);
    let fine_flux = FluxField::new(&fine_mesh, &fine_dm, &fine_sol.flux);

    let mut gap_sq = 0.0;
    for cell in &fine_mesh.cells {
        gap_sq += integrate_cell(&fine_dm, cell.id, ESTIMATOR_QUAD, |x, y| {
            let (fx, fy) = fine_flux.eval_in_cell(cell.id, x, y);
            let (cx, cy) = coarse_flux.eval(x, y);
            let dx = fx - cx;
            let dy = fy - cy;
            Ok(dx * dx + dy * dy)
        })?;
    }

    let coarse_err = actual_errors(&coarse_mesh, &coarse_dm, &coarse_sol, case)?;
    let fine_err = actual_errors(&fine_mesh, &fine_dm, &fine_sol, case)?;

    Ok(TwoLevelGap {
        gap: gap_sq.max(0.0).sqrt(),
        coarse_error_l2: EstimatorReport::sqrt_total(&coarse_err.err_u_l2_sq),
        fine_error_l2: EstimatorReport::sqrt_total(&fine_err.err_u_l2_sq),
    })
}

fn check_nested(coarse: &DomainSpec, fine: &DomainSpec) -> Result<()> {
    if coarse.nbx != fine.nbx
        || coarse.nby != fine.nby
        || coarse.xlines != fine.xlines
        || coarse.ylines != fine.ylines
    {
        return Err(Error::config(
            "two-level gap requires identical block layouts",
        ));
    }
    let (c0x, _) = coarse.cells_per_block[0];
    let (f0x, _) = fine.cells_per_block[0];
    if c0x == 0 || f0x % c0x != 0 || f0x / c0x < 2 {
        return Err(Error::config(
            "fine mesh must refine the coarse one by an integer factor m >= 2",
        ));
    }
    let m = f0x / c0x;
    for (c, f) in coarse.cells_per_block.iter().zip(&fine.cells_per_block) {
        if f.0 != m * c.0 || f.1 != m * c.1 {
            return Err(Error::config(format!(
                "fine mesh is not a uniform {m}x refinement of the coarse mesh",
            )));
        }
    }
    Ok(())
}
