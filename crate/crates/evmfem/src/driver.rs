//! End-to-end runs: build, assemble, solve, postprocess, estimate, report.

use std::path::{Path, PathBuf};

use crate::assembly::assemble;
use crate::cases::ManufacturedCase;
use crate::config::RunConfig;
use crate::dofmap::DofMap;
use crate::error::{Error, Result};
use crate::estimators::{compute_report, EstimatorReport};
use crate::mesh::{build_mesh, DomainSpec, MultiblockMesh};
use crate::postprocess::{
    compute_multipliers, oswald_average, postprocess_ptilde, LagrangeMultipliers, OswaldBoundary,
    PostprocessedPressure, RecoveredPressure,
};
use crate::report;
use crate::solver::{solve, MixedSolution, SolverConfig};
use crate::stats::{fit_rate, FitOutcome};

/// Everything produced by one solve at one mesh level.
#[derive(Debug)]
pub struct Pipeline {
    pub mesh: MultiblockMesh,
    pub dofmap: DofMap,
    pub solution: MixedSolution,
    pub multipliers: LagrangeMultipliers,
    pub ptilde: PostprocessedPressure,
    pub recovered: RecoveredPressure,
    pub report: EstimatorReport,
}

/// One row of `summary.csv`; estimator columns hold square roots of global sums.
#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub case: String,
    pub level: usize,
    pub h_coarse: f64,
    pub h_fine: f64,
    pub n_u: usize,
    pub n_p: usize,
    pub err_p: f64,
    pub err_u_energy: f64,
    pub zeta_tilde_p: f64,
    pub zeta_tilde_r: f64,
    pub zeta_tilde_ev: f64,
    pub zeta_p: f64,
    pub zeta_ev: f64,
    pub eta_tilde_p: f64,
    pub eta_nc: f64,
    pub eta_p: f64,
    pub eta_r: f64,
    pub eta_ev: f64,
    pub effectivity_flux: f64,
}

#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    pub case: String,
    pub rows: Vec<SummaryRow>,
    /// Fitted log-log slopes per summary column, in column order.
    pub rates: Vec<(String, FitOutcome)>,
}

impl ConvergenceTable {
    pub fn rate(&self, column: &str) -> Option<&FitOutcome> {
        self.rates.iter().find(|(n, _)| n == column).map(|(_, f)| f)
    }

    pub fn slope(&self, column: &str) -> Option<f64> {
        self.rate(column).and_then(|f| f.slope())
    }
}

/// Runs the full pipeline on one mesh.
pub fn run_pipeline(
    spec: &DomainSpec,
    case: &ManufacturedCase,
    solver_cfg: &SolverConfig,
    oswald: OswaldBoundary,
) -> Result<Pipeline> {
    let mesh = build_mesh(spec)?;
    let dofmap = DofMap::build(&mesh);
    let k = case.permeability();
    let system = assemble(
        &mesh,
        &dofmap,
        &k,
        |x, y| case.source(x, y),
        |x, y| case.boundary(x, y),
    )?;
    let solution = solve(&system, solver_cfg)?;
    let multipliers = compute_multipliers(&mesh, &dofmap, &k, &solution)?;
    let ptilde = postprocess_ptilde(&mesh, &solution, &multipliers);
    let recovered = oswald_average(&mesh, &ptilde, oswald, |x, y| case.boundary(x, y));
    let report = compute_report(
        &mesh,
        &dofmap,
        &solution,
        &ptilde,
        &recovered,
        &k,
        case,
        |x, y| case.source(x, y),
    )?;
    Ok(Pipeline {
        mesh,
        dofmap,
        solution,
        multipliers,
        ptilde,
        recovered,
        report,
    })
}

/// Coarse- and fine-block cell sizes of a built mesh.
fn mesh_sizes(mesh: &MultiblockMesh) -> (f64, f64) {
    let mut h_coarse: f64 = 0.0;
    let mut h_fine = f64::INFINITY;
    for sub in &mesh.subdomains {
        let h = sub.hx.max(sub.hy);
        h_coarse = h_coarse.max(h);
        h_fine = h_fine.min(h);
    }
    (h_coarse, h_fine)
}

pub fn summary_row(case: &str, level: usize, pipeline: &Pipeline) -> SummaryRow {
    let (h_coarse, h_fine) = mesh_sizes(&pipeline.mesh);
    let r = &pipeline.report;
    let sq = EstimatorReport::sqrt_total;
    SummaryRow {
        case: case.to_string(),
        level,
        h_coarse,
        h_fine,
        n_u: pipeline.dofmap.n_u,
        n_p: pipeline.dofmap.n_p,
        err_p: r.err_p(),
        err_u_energy: r.err_u_energy(),
        zeta_tilde_p: sq(&r.zeta_tilde_p),
        zeta_tilde_r: sq(&r.zeta_tilde_r),
        zeta_tilde_ev: sq(&r.zeta_tilde_ev),
        zeta_p: sq(&r.zeta_p),
        zeta_ev: sq(&r.zeta_ev),
        eta_tilde_p: sq(&r.eta_tilde_p),
        eta_nc: sq(&r.eta_nc),
        eta_p: sq(&r.eta_p),
        eta_r: sq(r.eta_r()),
        eta_ev: sq(r.eta_ev()),
        effectivity_flux: r.effectivity_flux(),
    }
}

#[derive(Debug)]
pub struct CaseArtifacts {
    pub pipeline: Pipeline,
    pub row: SummaryRow,
    pub written: Vec<PathBuf>,
}

fn with_case_context<T>(case: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("case {case}: {m}")),
        Error::Geometry(m) => Error::Geometry(format!("case {case}: {m}")),
        Error::Data(m) => Error::Data(format!("case {case}: {m}")),
        other => other,
    })
}

/// Single run at `coarse_n`, writing `summary.csv`, `elements.csv` and
/// optionally `fields.vtk` into `out_dir`.
pub fn run_case(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<CaseArtifacts> {
    cfg.validate()?;
    let case = cfg.manufactured_case()?;
    let name = case.name();
    let spec = cfg.domain_spec(cfg.coarse_n);
    let pipeline = with_case_context(
        name,
        run_pipeline(&spec, &case, &cfg.solver_config(), cfg.oswald_boundary),
    )?;
    let row = summary_row(name, 0, &pipeline);

    let mut written = Vec::new();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let summary = dir.join("summary.csv");
        report::write_summary_csv(&summary, std::slice::from_ref(&row))?;
        written.push(summary);
        if cfg.outputs.csv {
            let elements = dir.join("elements.csv");
            report::write_elements_csv(&elements, &pipeline.mesh, &pipeline.report)?;
            written.push(elements);
        }
        if cfg.outputs.vtk {
            let vtk = dir.join("fields.vtk");
            report::write_fields_vtk(
                &vtk,
                &pipeline.mesh,
                &pipeline.solution,
                &pipeline.report,
                &pipeline.recovered,
            )?;
            written.push(vtk);
        }
    }
    Ok(CaseArtifacts {
        pipeline,
        row,
        written,
    })
}

/// Columns whose log-log slope against the coarse mesh size is fitted.
pub const RATE_COLUMNS: [&str; 12] = [
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
];

fn column_value(row: &SummaryRow, column: &str) -> f64 {
    match column {
        "err_p" => row.err_p,
        "err_u_energy" => row.err_u_energy,
        "zeta_tilde_P" => row.zeta_tilde_p,
        "zeta_tilde_R" => row.zeta_tilde_r,
        "zeta_tilde_EV" => row.zeta_tilde_ev,
        "zeta_P" => row.zeta_p,
        "zeta_EV" => row.zeta_ev,
        "eta_tilde_P" => row.eta_tilde_p,
        "eta_NC" => row.eta_nc,
        "eta_P" => row.eta_p,
        "eta_R" => row.eta_r,
        "eta_EV" => row.eta_ev,
        other => panic!("unknown summary column {other}"),
    }
}

/// Runs every level of `cfg.levels` and fits convergence rates.
///
/// Writes `summary.csv` (one row per level) and `rates.csv` when `out_dir` is
/// given.
pub fn run_convergence(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<ConvergenceTable> {
    cfg.validate()?;
    let levels = cfg.level_list();
    if levels.len() < 2 {
        return Err(Error::config(
            "a convergence study needs at least 2 levels in 'levels'",
        ));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(
            "levels must be strictly increasing coarse_n values (decreasing H)",
        ));
    }
    let case = cfg.manufactured_case()?;
    let name = case.name();

    let mut rows = Vec::with_capacity(levels.len());
    for (level, &coarse_n) in levels.iter().enumerate() {
        let spec = cfg.domain_spec(coarse_n);
        let pipeline = with_case_context(
            name,
            run_pipeline(&spec, &case, &cfg.solver_config(), cfg.oswald_boundary),
        )?;
        rows.push(summary_row(name, level, &pipeline));
    }

    let rates = RATE_COLUMNS
        .iter()
        .map(|&col| {
            let pairs: Vec<(f64, f64)> = rows
                .iter()
                .map(|r| (r.h_coarse, column_value(r, col)))
                .collect();
            (col.to_string(), fit_rate(&pairs))
        })
        .collect();

    let table = ConvergenceTable {
        case: name.to_string(),
        rows,
        rates,
    };

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        report::write_summary_csv(&dir.join("summary.csv"), &table.rows)?;
        if cfg.outputs.csv {
            report::write_rates_csv(&dir.join("rates.csv"), &table.rates)?;
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{BlocksConfig, OutputSettings, SolverSettings};

    fn patch_config(coarse_n: usize) -> RunConfig {
        // two blocks side by side: the 1 - x flow crosses the single vertical
        // interface normally and stays exactly representable
        RunConfig {
            case: "patch".into(),
            custom: None,
            blocks: BlocksConfig { nbx: 2, nby: 1 },
            coarse_n,
            ratio: 2,
            levels: None,
            solver: SolverSettings::default(),
            oswald_boundary: OswaldBoundary::DirichletData,
            outputs: OutputSettings::default(),
        }
    }

    #[test]
    fn patch_pipeline_is_exact() {
        let art = run_case(&patch_config(2), None).unwrap();
        assert!(art.row.err_u_energy < 1e-10, "{}", art.row.err_u_energy);
        assert!(art.row.eta_p < 1e-10);
        assert!(art.row.eta_nc < 1e-10);
        // p_h hits the exact cell centers
        for cell in &art.pipeline.mesh.cells {
            let (cx, _) = cell.rect.center();
            assert!((art.pipeline.solution.pressure[cell.id] - (1.0 - cx)).abs() < 1e-10);
        }
    }

    #[test]
    fn convergence_needs_two_increasing_levels() {
        let mut cfg = patch_config(2);
        cfg.levels = Some(vec![2]);
        assert!(matches!(
            run_convergence(&cfg, None),
            Err(Error::Config(_))
        ));
        cfg.levels = Some(vec![4, 2]);
        assert!(matches!(
            run_convergence(&cfg, None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn degenerate_rates_marked_not_applicable() {
        let mut cfg = patch_config(2);
        cfg.levels = Some(vec![2, 4]);
        let table = run_convergence(&cfg, None).unwrap();
        // patch case: all error columns at the tolerance floor
        match table.rate("err_u_energy").unwrap() {
            FitOutcome::NotApplicable(_) => {}
            other => panic!("expected not-applicable, got {other:?}"),
        }
    }

    #[test]
    fn example3_smoke_run_with_files() {
        let dir = std::env::temp_dir().join(format!("evmfem-driver-{}", std::process::id()));
        let mut cfg = RunConfig {
            case: "example3".into(),
            custom: None,
            blocks: BlocksConfig { nbx: 3, nby: 3 },
            coarse_n: 2,
            ratio: 2,
            levels: None,
            solver: SolverSettings::default(),
            oswald_boundary: OswaldBoundary::DirichletData,
            outputs: OutputSettings { csv: true, vtk: true },
        };
        cfg.validate().unwrap();
        let art = run_case(&cfg, Some(&dir)).unwrap();
        assert_eq!(art.written.len(), 3);
        for p in &art.written {
            assert!(p.exists(), "{} missing", p.display());
        }
        // global conservation: defects tiny relative to source scale
        let case = cfg.manufactured_case().unwrap();
        let defects = crate::assembly::conservation_defects(
            &art.pipeline.mesh,
            &art.pipeline.dofmap,
            &art.pipeline.solution.flux,
            |x, y| case.source(x, y),
        );
        for d in defects {
            assert!(d.abs() < 1e-9);
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
