use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] stokes_biot::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use stokes_biot::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 4,
            CliError::Core(e) => match e.root() {
                E::Solver(_) | E::Domain(_) | E::DimensionMismatch { .. } => 3,
                E::Io(_) => 4,
                _ => 2,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "stokes-biot",
    version,
    about = "Adaptive finite elements for coupled Stokes and Biot flow"
)]
struct Cli {
    /// Worker threads for assembly and estimation.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one case on one mesh and write indicators, errors and VTK files.
    Run(Common),
    /// Uniform refinement sweep with error rates and effectivity.
    ConvergenceStudy(Common),
    /// Solve, estimate, mark and refine until a budget is exhausted.
    AdaptStudy(Common),
    /// Write the mesh in the native text format and as VTK.
    ExportMesh(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key = value` file of physical parameters.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Mesh file (`.sbmesh` or Gmsh `.msh`).
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    /// Final time.
    #[arg(long = "T")]
    t_final: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    nx0: Option<usize>,
    #[arg(long)]
    steps0: Option<usize>,
    #[arg(long)]
    theta_mark: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    target_theta: Option<f64>,
    #[arg(long)]
    max_dofs: Option<usize>,
    #[arg(long)]
    porous_jump_uses_mu_p: bool,
    #[arg(long)]
    strict_printed_signs: bool,
    /// Extra `key=value` settings, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        let here = std::path::Path::new("");
        if let Some(path) = &self.config {
            cfg.load_file(path)?;
        }
        if let Some(path) = &self.params {
            cfg.set("params", &path.to_string_lossy(), here)?;
        }
        let mut pairs: Vec<(&str, String)> = Vec::new();
        if let Some(v) = &self.mesh {
            pairs.push(("mesh", v.to_string_lossy().into_owned()));
        }
        if let Some(v) = &self.out {
            pairs.push(("out", v.to_string_lossy().into_owned()));
        }
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k, v));
            }
        };
        push("case", self.case.clone());
        push("nx", self.nx.map(|v| v.to_string()));
        push("ny", self.ny.map(|v| v.to_string()));
        push("T", self.t_final.map(|v| v.to_string()));
        push("dt", self.dt.map(|v| v.to_string()));
        push("steps", self.steps.map(|v| v.to_string()));
        push("levels", self.levels.map(|v| v.to_string()));
        push("nx0", self.nx0.map(|v| v.to_string()));
        push("steps0", self.steps0.map(|v| v.to_string()));
        push("theta_mark", self.theta_mark.map(|v| v.to_string()));
        push("max_iters", self.max_iters.map(|v| v.to_string()));
        push("target_theta", self.target_theta.map(|v| v.to_string()));
        push("max_dofs", self.max_dofs.map(|v| v.to_string()));
        if self.porous_jump_uses_mu_p {
            push("porous_jump_uses_mu_p", Some("true".into()));
        }
        if self.strict_printed_signs {
            push("strict_printed_signs", Some("true".into()));
        }
        for (k, v) in pairs {
            cfg.set(k, &v, here)?;
        }
        for item in &self.set {
            let (k, v) = item.split_once('=').ok_or_else(|| {
                CliError::Config(format!("--set expects KEY=VALUE, got '{item}'"))
            })?;
            cfg.set(k.trim(), v.trim(), here)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if cli.threads == 0 {
        return Err(CliError::Config("--threads must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    match cli.command {
        Command::Run(c) => commands::run(&c.resolve()?),
        Command::ConvergenceStudy(c) => commands::convergence_study(&c.resolve()?),
        Command::AdaptStudy(c) => commands::adapt_study(&c.resolve()?),
        Command::ExportMesh(c) => commands::export_mesh(&c.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use stokes_biot::solver::SolverError;

    #[test]
    fn exit_code_mapping() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Io(std::io::Error::other("x")).exit_code(), 4);
        let solver = stokes_biot::Error::Solver(SolverError::StructurallySingular { column: 0 });
        assert_eq!(
            CliError::Core(stokes_biot::Error::Iteration {
                iter: 2,
                source: Box::new(solver)
            })
            .exit_code(),
            3
        );
        assert_eq!(
            CliError::Core(stokes_biot::Error::Parse {
                line: 1,
                message: "x".into()
            })
            .exit_code(),
            2
        );
    }
}
