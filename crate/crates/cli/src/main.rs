use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use slab_symmetry::harness::{self, Scenario, Solved};
use slab_symmetry::io::{field_to_csv, read_mesh, write_text};
use slab_symmetry::linearization::{assemble_difference_operator, verify_ellipticity_bound, DEFAULT_PANELS};
use slab_symmetry::touching::{check_interior_touching, Conclusion};

#[derive(Parser)]
#[command(name = "slab-symmetry", version, about = "Solve surfaces between parallel plates and verify their symmetry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output file or directory, depending on the verb.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the scenario's grid spacing.
    #[arg(long)]
    resolution: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<Scenario> {
        let mut s = Scenario::load(&self.scenario)?;
        if let Some(h) = self.resolution {
            s.resolution = h;
        }
        s.validate().context("scenario validation")?;
        Ok(s)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the boundary value problem; writes the field or meridian and
    /// solver diagnostics into the output directory.
    Solve(Common),
    /// Run the moving-plane sweeps; writes the symmetry report.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Sweep this OBJ mesh (with its JSON sidecar) instead of solving.
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// Assemble the operator satisfied by the solution minus its reflection.
    Linearize {
        #[command(flatten)]
        common: Common,
        /// Angle of the reflection plane's normal in the plate.
        #[arg(long, default_value_t = 0.0)]
        angle: f64,
    },
    /// Check the interior touching principle for the solution against its
    /// reflection.
    Touching {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        angle: f64,
    },
    /// Full pipeline; writes the verification report.
    Verify(Common),
    /// Full pipeline; writes report, mesh, fields and profiles into a
    /// directory.
    Export(Common),
}

/// Exit status: 0 pass, 1 verified failure, 2 execution error.
enum Status {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Status::Pass) => ExitCode::from(0),
        Ok(Status::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn graph_solution(s: &Scenario) -> Result<slab_symmetry::solver::GraphSolution> {
    match harness::solve(s)? {
        Solved::Graph(sol) => Ok(sol),
        Solved::Profile(_) => bail!("this verb needs a graph model scenario"),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn run(command: Command) -> Result<Status> {
    match command {
        Command::Solve(c) => {
            let s = c.load()?;
            match harness::solve(&s).context("solve")? {
                Solved::Graph(sol) => {
                    write_text(&c.out.join("field.csv"), &field_to_csv(&sol.u))?;
                    write_json(&c.out.join("solver.json"), &harness::SolverDiagnostics::from_graph(&sol))?;
                }
                Solved::Profile(p) => {
                    write_text(&c.out.join("meridian.csv"), &p.to_csv())?;
                    write_json(&c.out.join("solver.json"), &harness::SolverDiagnostics::from_profile(&p, &s))?;
                }
            }
            Ok(Status::Pass)
        }
        Command::Sweep { common: c, mesh } => {
            let s = c.load()?;
            let mesh = match mesh {
                Some(path) => read_mesh(&path, None)?,
                None => harness::build_mesh(&s, &harness::solve(&s).context("solve")?).context("mesh")?,
            };
            let report = harness::sweep(&s, &mesh, c.seed).context("sweep")?;
            write_text(&c.out, &report.to_json()?)?;
            Ok(if report.is_symmetric() { Status::Pass } else { Status::Fail })
        }
        Command::Linearize { common: c, angle } => {
            let s = c.load()?;
            let sol = graph_solution(&s)?;
            let plane = harness::central_plane(&s, angle)?;
            let ubar = harness::reflect_field(&sol.u, &plane)?;
            let op = assemble_difference_operator(&sol.u, &ubar, &s.h_profile, DEFAULT_PANELS)?;
            let ell = verify_ellipticity_bound(&sol.u, s.tolerances.ellipticity_samples, c.seed)?;
            let summary = harness::EllipticitySummary::from(&ell);
            let pass = summary.violations == 0;
            write_json(
                &c.out,
                &serde_json::json!({ "plane": plane, "ellipticity": summary, "operator": op.to_json() }),
            )?;
            Ok(if pass { Status::Pass } else { Status::Fail })
        }
        Command::Touching { common: c, angle } => {
            let s = c.load()?;
            let sol = graph_solution(&s)?;
            let plane = harness::central_plane(&s, angle)?;
            let ubar = harness::reflect_field(&sol.u, &plane)?;
            let w = sol.u.zip_map(&ubar, |a, b| a - b)?;
            let grid = sol.u.grid();
            let x0 = grid
                .interior_nodes()
                .min_by(|&a, &b| {
                    let d = |k: usize| {
                        let x = grid.coords(k);
                        ((x[0] - plane.point.x) * plane.normal.x + (x[1] - plane.point.y) * plane.normal.y).abs()
                    };
                    d(a).total_cmp(&d(b)).then(a.cmp(&b))
                })
                .context("grid has no interior nodes")?;
            let op = assemble_difference_operator(&sol.u, &ubar, &s.h_profile, DEFAULT_PANELS)?;
            let verdict = check_interior_touching(&op, &w, x0)?;
            let violated = matches!(verdict.conclusion, Conclusion::Violated { .. });
            write_json(&c.out, &verdict)?;
            Ok(if violated { Status::Fail } else { Status::Pass })
        }
        Command::Verify(c) => {
            let s = c.load()?;
            let outcome = harness::run_scenario(&s, c.seed);
            write_text(&c.out, &outcome.report.to_json()?)?;
            status_of(&outcome.report)
        }
        Command::Export(c) => {
            let s = c.load()?;
            let outcome = harness::run_scenario(&s, c.seed);
            for p in harness::export_artifacts(&outcome, &c.out)? {
                println!("{}", p.display());
            }
            status_of(&outcome.report)
        }
    }
}

fn status_of(report: &harness::VerificationReport) -> Result<Status> {
    if let Some(f) = &report.failure {
        bail!("stage {} failed: {}", f.stage, f.message);
    }
    for c in &report.criteria {
        let mark = if c.passed { "pass" } else { "FAIL" };
        eprintln!("{mark} {}", c.name);
    }
    Ok(if report.pass { Status::Pass } else { Status::Fail })
}
