use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use stokes_biot::adapt::adapt_solve;
use stokes_biot::assembly::TimeGrid;
use stokes_biot::mesh::{build_reference_geometry, io::write_sbmesh, refine_uniform, Mesh};
use stokes_biot::output::{write_json_line, write_vtk};
use stokes_biot::spaces::DofMap;
use stokes_biot::verify::{
    convergence_study as study, run_case, step_errors, ErrorNorms, Ratio, COMPONENTS,
};

use crate::config::RunConfig;
use crate::CliError;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

#[derive(Serialize)]
struct StepRecord {
    event: &'static str,
    step: usize,
    t: f64,
    relative_residual: f64,
    dimension: usize,
    nnz: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_ms: Option<f64>,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    event: &'static str,
    case: &'a str,
    cells: usize,
    dofs: usize,
    free_dofs: usize,
    h: f64,
    steps: usize,
    theta: f64,
    zeta: f64,
    errors: ErrorNorms,
    error: f64,
    effectivity: Ratio,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_ms: Option<f64>,
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let mesh = cfg.mesh()?;
    let case = cfg.case()?;
    let grid = cfg.time_grid()?;
    let dofs = DofMap::new(&mesh);
    let out = &cfg.out;
    fs::create_dir_all(out)?;

    let mut log = create(&out.join("log.jsonl"))?;
    let mut errors = csv::Writer::from_writer(create(&out.join("errors.csv"))?);
    let mut header = vec!["step".to_string(), "t".into()];
    header.extend(COMPONENTS.iter().map(|c| c.to_string()));
    errors.write_record(&header).map_err(csv_error)?;
    if cfg.vtk {
        fs::create_dir_all(out.join("vtk"))?;
    }

    let summary = run_case(&mesh, &case, &grid, cfg.estimator, |step| {
        let e = step_errors(&mesh, &dofs, &case, step.current)?;
        let mut rec = vec![step.index.to_string(), step.current.t.to_string()];
        rec.extend(e.totals.iter().map(|v| v.sqrt().to_string()));
        errors
            .write_record(&rec)
            .map_err(|e| stokes_biot::Error::Io(std::io::Error::other(e)))?;
        write_json_line(
            &mut log,
            &StepRecord {
                event: "step",
                step: step.index,
                t: step.current.t,
                relative_residual: step.report.relative_residual,
                dimension: step.report.dimension,
                nnz: step.report.nnz,
                wall_ms: cfg.record_timing.then_some(step.report.wall_ms),
            },
        )?;
        if cfg.vtk {
            let path = out.join("vtk").join(format!("state_{:04}.vtk", step.index));
            write_vtk(
                BufWriter::new(File::create(path)?),
                &mesh,
                &dofs,
                step.current,
                None,
            )?;
        }
        Ok(())
    })?;
    errors.flush()?;

    summary
        .estimator
        .write_csv(create(&out.join("indicators.csv"))?)?;
    if cfg.vtk {
        let path = out.join("vtk").join("final.vtk");
        write_vtk(
            create(&path)?,
            &mesh,
            &dofs,
            &summary.final_state,
            Some(&summary.estimator),
        )?;
    }
    write_json_line(
        &mut log,
        &RunRecord {
            event: "summary",
            case: case.name(),
            cells: summary.cells,
            dofs: summary.dofs,
            free_dofs: summary.free_dofs,
            h: summary.h,
            steps: grid.steps,
            theta: summary.theta(),
            zeta: summary.zeta(),
            errors: summary.errors,
            error: summary.errors.combined(),
            effectivity: summary.effectivity(),
            wall_ms: cfg.record_timing.then_some(summary.wall_ms),
        },
    )?;
    log.flush()?;
    println!(
        "{}: {} cells, {} dofs, {} steps, Theta = {:.6e}, error = {:.6e}",
        case.name(),
        summary.cells,
        summary.dofs,
        grid.steps,
        summary.theta(),
        summary.errors.combined()
    );
    Ok(())
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// Meshes and time grids of a uniform sweep with `h` halved and the step
/// count quadrupled per level. The builtin rectangle uses `nx0 * 2^level`
/// cells per side; a mesh file is bisected twice per level.
fn study_levels(cfg: &RunConfig) -> Result<(Vec<Mesh>, Vec<TimeGrid>), CliError> {
    let mut meshes: Vec<Mesh> = Vec::with_capacity(cfg.levels);
    let mut grids = Vec::with_capacity(cfg.levels);
    for l in 0..cfg.levels {
        let mesh = match (&cfg.mesh, meshes.last()) {
            (None, _) => build_reference_geometry(&cfg.domain(), cfg.nx0 << l, cfg.nx0 << l)?,
            (Some(_), None) => cfg.mesh()?,
            (Some(_), Some(prev)) => refine_uniform(&refine_uniform(prev)?.mesh)?.mesh,
        };
        meshes.push(mesh);
        grids.push(TimeGrid::with_steps(
            cfg.t_final,
            cfg.steps0 * 4usize.pow(l as u32),
        )?);
    }
    Ok((meshes, grids))
}

pub fn convergence_study(cfg: &RunConfig) -> Result<(), CliError> {
    let case = cfg.case()?;
    let (meshes, grids) = study_levels(cfg)?;
    let mut table = study(&case, &meshes, &grids, cfg.estimator)?;
    if !cfg.record_timing {
        for row in &mut table.rows {
            row.wall_ms = None;
        }
    }
    let out = &cfg.out;
    fs::create_dir_all(out)?;
    table.write_convergence_csv(create(&out.join("convergence.csv"))?)?;
    table.write_effectivity_csv(create(&out.join("effectivity.csv"))?)?;
    let mut log = create(&out.join("log.jsonl"))?;
    for row in &table.rows {
        write_json_line(&mut log, row)?;
    }
    log.flush()?;
    for row in &table.rows {
        println!(
            "level {}: h = {:.4e}, dofs = {}, error = {:.4e}, Theta = {:.4e}, rate = {}",
            row.level,
            row.h,
            row.dofs,
            row.combined,
            row.theta,
            row.combined_rate
                .filter(|r| r.defined)
                .map_or("-".into(), |r| format!("{:.3}", r.value))
        );
    }
    if !table.nested {
        eprintln!("warning: mesh sequence is not nested");
    }
    Ok(())
}

pub fn adapt_study(cfg: &RunConfig) -> Result<(), CliError> {
    let case = cfg.case()?;
    let grid = cfg.time_grid()?;
    let mesh = cfg.mesh()?;
    let out = &cfg.out;
    fs::create_dir_all(out)?;
    let mut log = create(&out.join("adapt.jsonl"))?;
    let iterations = adapt_solve(&mesh, &case, &grid, cfg.estimator, &cfg.adapt, |it| {
        let mut record = it.record.clone();
        if !cfg.record_timing {
            record.wall_ms = None;
        }
        write_json_line(&mut log, &record)?;
        println!(
            "iter {}: {} cells, {} dofs, Theta = {:.4e}, marked {}",
            record.iter, record.cells, record.dofs, record.theta, record.marked
        );
        Ok(())
    })?;
    log.flush()?;
    if let Some(last) = iterations.last() {
        fs::write(out.join("final.sbmesh"), write_sbmesh(&last.mesh))?;
        last.report
            .write_csv(create(&out.join("indicators.csv"))?)?;
        if cfg.vtk {
            let dofs = DofMap::new(&last.mesh);
            write_vtk(
                create(&out.join("final.vtk"))?,
                &last.mesh,
                &dofs,
                &last.final_state,
                Some(&last.report),
            )?;
        }
    }
    Ok(())
}

pub fn export_mesh(cfg: &RunConfig) -> Result<(), CliError> {
    let mesh = cfg.mesh()?;
    let out = &cfg.out;
    fs::create_dir_all(out)?;
    fs::write(out.join("mesh.sbmesh"), write_sbmesh(&mesh))?;
    let dofs = DofMap::new(&mesh);
    let state = stokes_biot::assembly::SystemState::zeros(&dofs, 0.0);
    write_vtk(create(&out.join("mesh.vtk"))?, &mesh, &dofs, &state, None)?;
    println!(
        "{} vertices, {} cells, {} edges",
        mesh.num_vertices(),
        mesh.num_cells(),
        mesh.num_edges()
    );
    Ok(())
}
