use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use evmfem::stats::FitOutcome;
use evmfem::{run_case, run_convergence, RunConfig};

/// Darcy flow on multiblock non-matching grids with a posteriori error
/// estimators.
#[derive(Parser)]
#[command(name = "evmfem", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one case at the configured resolution and write reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every level in the config and fit convergence rates.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a config: parse, validate, build the mesh, verify the
    /// manufactured solution's derivatives.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> evmfem::Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let artifacts = run_case(&cfg, Some(&out))?;
            let r = &artifacts.row;
            println!(
                "case {} level {}: H = {:.5e}, h_fine = {:.5e}, {} flux dofs, {} cells",
                r.case, r.level, r.h_coarse, r.h_fine, r.n_u, r.n_p
            );
            println!(
                "  err_p = {:.5e}  err_u = {:.5e}  eta_P = {:.5e}  eta_R = {:.5e}  \
                 eta_EV = {:.5e}  effectivity = {:.3}",
                r.err_p, r.err_u_energy, r.eta_p, r.eta_r, r.eta_ev, r.effectivity_flux
            );
            for path in &artifacts.written {
                println!("  wrote {}", path.display());
            }
            Ok(())
        }
        Command::Convergence { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let table = run_convergence(&cfg, Some(&out))?;
            println!("case {}: {} levels", table.case, table.rows.len());
            for r in &table.rows {
                println!(
                    "  level {}: H = {:.5e}  err_u = {:.5e}  eta_P = {:.5e}  \
                     eta_R = {:.5e}  eta_EV = {:.5e}  effectivity = {:.3}",
                    r.level, r.h_coarse, r.err_u_energy, r.eta_p, r.eta_r, r.eta_ev,
                    r.effectivity_flux
                );
            }
            println!("fitted rates (log-log in H):");
            for (name, fit) in &table.rates {
                match fit {
                    FitOutcome::Fit(f) => println!(
                        "  {name}: slope {:.3} (R² = {:.4}, {} points)",
                        f.slope, f.r_squared, f.n_used
                    ),
                    FitOutcome::NotApplicable(why) => println!("  {name}: n/a ({why})"),
                }
            }
            println!("wrote {}", out.join("summary.csv").display());
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = RunConfig::load(&config)?;
            let case = cfg.manufactured_case()?;
            let spec = cfg.domain_spec(cfg.coarse_n);
            let mesh = evmfem::build_mesh(&spec)?;
            case.validate_derivatives(&mesh.domain, 1000)?;
            for &level in cfg.level_list().iter() {
                let spec = cfg.domain_spec(level);
                spec.validate()?;
            }
            println!(
                "config ok: case {}, {}x{} blocks, {} cells at coarse_n {}, {} level(s)",
                case.name(),
                cfg.blocks.nbx,
                cfg.blocks.nby,
                mesh.n_cells(),
                cfg.coarse_n,
                cfg.level_list().len()
            );
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use evmfem::Error;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes_separate_config_from_solver_failures() {
        assert_eq!(Error::config("x").exit_code(), 1);
        assert_eq!(
            Error::SolverConvergence {
                residual: 1.0,
                iterations: 3
            }
            .exit_code(),
            2
        );
    }
}
