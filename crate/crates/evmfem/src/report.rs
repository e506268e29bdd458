//! CSV and legacy-VTK serialization of run results.
//!
//! Files are written with fixed formatting so identical runs produce identical
//! bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::driver::SummaryRow;
use crate::error::Result;
use crate::estimators::EstimatorReport;
use crate::mesh::MultiblockMesh;
use crate::postprocess::RecoveredPressure;
use crate::solver::MixedSolution;
use crate::stats::FitOutcome;

fn fmt_f(v: f64) -> String {
    // shortest-roundtrip scientific notation: byte-stable and lossless
    format!("{v:e}")
}

pub const SUMMARY_HEADER: &str = "case,level,H,h_fine,n_u,n_p,err_p,err_u_energy,\
zeta_tilde_P,zeta_tilde_R,zeta_tilde_EV,zeta_P,zeta_EV,eta_tilde_P,eta_NC,eta_P,eta_R,eta_EV,\
effectivity_flux";

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.case,
            r.level,
            fmt_f(r.h_coarse),
            fmt_f(r.h_fine),
            r.n_u,
            r.n_p,
            fmt_f(r.err_p),
            fmt_f(r.err_u_energy),
            fmt_f(r.zeta_tilde_p),
            fmt_f(r.zeta_tilde_r),
            fmt_f(r.zeta_tilde_ev),
            fmt_f(r.zeta_p),
            fmt_f(r.zeta_ev),
            fmt_f(r.eta_tilde_p),
            fmt_f(r.eta_nc),
            fmt_f(r.eta_p),
            fmt_f(r.eta_r),
            fmt_f(r.eta_ev),
            fmt_f(r.effectivity_flux),
        )
        .expect("write to string");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub const ELEMENTS_HEADER: &str =
    "cell_id,subdomain,x0,y0,x1,y1,eta_P,eta_R,err_p_sq,err_u_sq";

/// Per-element squared contributions; column sums reproduce the squared global
/// totals of `summary.csv`.
pub fn write_elements_csv(
    path: &Path,
    mesh: &MultiblockMesh,
    report: &EstimatorReport,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(ELEMENTS_HEADER);
    out.push('\n');
    let eta_r = report.eta_r();
    for cell in &mesh.cells {
        let i = cell.id;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            i,
            cell.subdomain,
            fmt_f(cell.rect.x0),
            fmt_f(cell.rect.y0),
            fmt_f(cell.rect.x1),
            fmt_f(cell.rect.y1),
            fmt_f(report.eta_p[i]),
            fmt_f(eta_r[i]),
            fmt_f(report.err_p_sq[i]),
            fmt_f(report.err_u_energy_sq[i]),
        )
        .expect("write to string");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_rates_csv(path: &Path, rates: &[(String, FitOutcome)]) -> Result<()> {
    let mut out = String::from("quantity,slope,intercept,r_squared,n_used,n_excluded,note\n");
    for (name, fit) in rates {
        match fit {
            FitOutcome::Fit(f) => writeln!(
                out,
                "{name},{},{},{},{},{},",
                fmt_f(f.slope),
                fmt_f(f.intercept),
                fmt_f(f.r_squared),
                f.n_used,
                f.n_excluded
            )
            .expect("write to string"),
            FitOutcome::NotApplicable(why) => {
                writeln!(out, "{name},,,,,,not applicable: {why}").expect("write to string")
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Legacy ASCII VTK unstructured grid: one quad per cell with duplicated corner
/// points, cell data for the pressure and estimator fields, point data for the
/// recovered pressure s (duplicating points keeps its interface jumps visible).
pub fn write_fields_vtk(
    path: &Path,
    mesh: &MultiblockMesh,
    solution: &MixedSolution,
    report: &EstimatorReport,
    s: &RecoveredPressure,
) -> Result<()> {
    let n_cells = mesh.n_cells();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("evmfem fields\n");
    out.push_str("ASCII\n");
    out.push_str("DATASET UNSTRUCTURED_GRID\n");

    writeln!(out, "POINTS {} double", 4 * n_cells).unwrap();
    for cell in &mesh.cells {
        let r = &cell.rect;
        for (x, y) in [(r.x0, r.y0), (r.x1, r.y0), (r.x1, r.y1), (r.x0, r.y1)] {
            writeln!(out, "{} {} 0", fmt_f(x), fmt_f(y)).unwrap();
        }
    }

    writeln!(out, "CELLS {} {}", n_cells, 5 * n_cells).unwrap();
    for i in 0..n_cells {
        let b = 4 * i;
        writeln!(out, "4 {} {} {} {}", b, b + 1, b + 2, b + 3).unwrap();
    }
    writeln!(out, "CELL_TYPES {n_cells}").unwrap();
    for _ in 0..n_cells {
        out.push_str("9\n");
    }

    writeln!(out, "CELL_DATA {n_cells}").unwrap();
    let scalar = |name: &str, values: &dyn Fn(usize) -> f64, out: &mut String| {
        writeln!(out, "SCALARS {name} double 1").unwrap();
        out.push_str("LOOKUP_TABLE default\n");
        for i in 0..n_cells {
            writeln!(out, "{}", fmt_f(values(i))).unwrap();
        }
    };
    scalar("p_h", &|i| solution.pressure[i], &mut out);
    scalar("eta_P", &|i| report.eta_p[i], &mut out);
    scalar("eta_R", &|i| report.eta_r()[i], &mut out);
    scalar("eta_NC", &|i| report.eta_nc[i], &mut out);
    scalar("eta_tilde_P", &|i| report.eta_tilde_p[i], &mut out);
    scalar("zeta_tilde_P", &|i| report.zeta_tilde_p[i], &mut out);
    scalar("zeta_P", &|i| report.zeta_p[i], &mut out);
    scalar("err_p_sq", &|i| report.err_p_sq[i], &mut out);
    scalar("err_u_sq", &|i| report.err_u_energy_sq[i], &mut out);
    writeln!(out, "SCALARS subdomain int 1").unwrap();
    out.push_str("LOOKUP_TABLE default\n");
    for cell in &mesh.cells {
        writeln!(out, "{}", cell.subdomain).unwrap();
    }

    writeln!(out, "POINT_DATA {}", 4 * n_cells).unwrap();
    out.push_str("SCALARS s double 1\n");
    out.push_str("LOOKUP_TABLE default\n");
    for cell in &mesh.cells {
        // corner nodes of the 3x3 nodal grid: (0,0), (2,0), (2,2), (0,2)
        for idx in [0, 2, 8, 6] {
            writeln!(out, "{}", fmt_f(s.nodal[cell.id][idx])).unwrap();
        }
    }

    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_header_matches_contract() {
        let cols: Vec<&str> = SUMMARY_HEADER.split(',').collect();
        assert_eq!(
            cols,
            vec![
                "case",
                "level",
                "H",
                "h_fine",
                "n_u",
                "n_p",
                "err_p",
                "err_u_energy",
                "zeta_tilde_P",
                "zeta_tilde_R",
                "zeta_tilde_EV",
                "zeta_P",
                "zeta_EV",
                "eta_tilde_P",
                "eta_NC",
                "eta_P",
                "eta_R",
                "eta_EV",
                "effectivity_flux"
            ]
        );
    }

    #[test]
    fn float_format_is_roundtrippable() {
        let v = 0.123456789012345678;
        let s = fmt_f(v);
        let back: f64 = s.parse().unwrap();
        assert_eq!(v, back);
    }
}
