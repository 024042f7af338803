//! Run configuration from `key = value` files and command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use stokes_biot::adapt::AdaptConfig;
use stokes_biot::assembly::TimeGrid;
use stokes_biot::estimator::EstimatorOptions;
use stokes_biot::mesh::{build_reference_geometry, io::read_mesh_file, Mesh, RectangleDomain};
use stokes_biot::model::{CaseKind, ManufacturedCase, PhysicalParams};

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub case: String,
    pub layer_delta: f64,
    pub mesh: Option<PathBuf>,
    pub nx: usize,
    pub ny: usize,
    pub interface_y: f64,
    pub t_final: f64,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub params: PhysicalParams,
    pub levels: usize,
    pub nx0: usize,
    pub steps0: usize,
    pub adapt: AdaptConfig,
    pub out: PathBuf,
    pub estimator: EstimatorOptions,
    pub vtk: bool,
    pub record_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            case: "builtin-smooth".into(),
            layer_delta: stokes_biot::model::DEFAULT_LAYER_WIDTH,
            mesh: None,
            nx: 8,
            ny: 8,
            interface_y: 0.5,
            t_final: 0.1,
            dt: None,
            steps: None,
            params: PhysicalParams::default(),
            levels: 4,
            nx0: 4,
            steps0: 1,
            adapt: AdaptConfig::default(),
            out: PathBuf::from("out"),
            estimator: EstimatorOptions::default(),
            vtk: true,
            record_timing: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(CliError::Config(format!(
            "invalid boolean '{value}' for '{key}'"
        ))),
    }
}

/// Non-empty, non-comment lines of a `key = value` file as pairs.
pub fn parse_pairs(text: &str, origin: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{origin}:{}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(CliError::Config(format!("{origin}:{}: empty key", i + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

impl RunConfig {
    /// Applies one setting. `base` resolves relative file references.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<(), CliError> {
        let p = &mut self.params;
        match key {
            "case" => self.case = value.to_string(),
            "layer_delta" => self.layer_delta = parse(key, value)?,
            "mesh" => self.mesh = Some(base.join(value)),
            "nx" => self.nx = parse(key, value)?,
            "ny" => self.ny = parse(key, value)?,
            "interface_y" => self.interface_y = parse(key, value)?,
            "T" | "t_final" => self.t_final = parse(key, value)?,
            "dt" => self.dt = Some(parse(key, value)?),
            "steps" => self.steps = Some(parse(key, value)?),
            "levels" => self.levels = parse(key, value)?,
            "nx0" => self.nx0 = parse(key, value)?,
            "steps0" => self.steps0 = parse(key, value)?,
            "theta_mark" => self.adapt.theta_mark = parse(key, value)?,
            "max_iters" => self.adapt.max_iters = parse(key, value)?,
            "target_theta" => self.adapt.target_theta = parse(key, value)?,
            "max_dofs" => self.adapt.max_dofs = parse(key, value)?,
            "out" => self.out = base.join(value),
            "vtk" => self.vtk = parse_bool(key, value)?,
            "record_timing" => self.record_timing = parse_bool(key, value)?,
            "porous_jump_uses_mu_p" => {
                self.estimator.porous_jump_uses_mu_p = parse_bool(key, value)?
            }
            "strict_printed_signs" => self.estimator.strict_printed_signs = parse_bool(key, value)?,
            "mu" => p.mu = parse(key, value)?,
            "k" => {
                let v: f64 = parse(key, value)?;
                p.k[(0, 0)] = v;
                p.k[(1, 1)] = v;
                p.k[(0, 1)] = 0.0;
                p.k[(1, 0)] = 0.0;
            }
            "k11" => p.k[(0, 0)] = parse(key, value)?,
            "k22" => p.k[(1, 1)] = parse(key, value)?,
            "k12" => {
                let v: f64 = parse(key, value)?;
                p.k[(0, 1)] = v;
                p.k[(1, 0)] = v;
            }
            "lambda_p" => p.lambda_p = parse(key, value)?,
            "mu_p" => p.mu_p = parse(key, value)?,
            "alpha" => p.alpha = parse(key, value)?,
            "s0" => p.s0 = parse(key, value)?,
            "alpha_bjs" => p.alpha_bjs = parse(key, value)?,
            "params" => {
                let path = base.join(value);
                let text = read_text(&path)?;
                let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
                for (k, v) in parse_pairs(&text, &path.display().to_string())? {
                    if k == "params" {
                        return Err(CliError::Config(
                            "nested params files are not supported".into(),
                        ));
                    }
                    self.set(&k, &v, &dir)?;
                }
            }
            _ => return Err(CliError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = read_text(path)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        for (k, v) in parse_pairs(&text, &path.display().to_string())? {
            self.set(&k, &v, &dir)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.adapt
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(m) = &self.mesh {
            if !m.is_file() {
                return Err(CliError::Config(format!(
                    "mesh file {} does not exist",
                    m.display()
                )));
            }
        }
        if self.nx == 0 || self.ny == 0 || self.nx0 == 0 || self.levels == 0 || self.steps0 == 0 {
            return Err(CliError::Config(
                "mesh sizes, levels and step counts must be positive".into(),
            ));
        }
        self.time_grid()?;
        self.case()?;
        Ok(())
    }

    pub fn time_grid(&self) -> Result<TimeGrid, CliError> {
        let grid = match (self.steps, self.dt) {
            (Some(n), _) => TimeGrid::with_steps(self.t_final, n),
            (None, Some(dt)) => TimeGrid::new(self.t_final, dt),
            (None, None) => TimeGrid::new(self.t_final, 0.01),
        };
        grid.map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn case(&self) -> Result<ManufacturedCase, CliError> {
        let kind = match CaseKind::from_name(&self.case) {
            Some(CaseKind::Layer { .. }) => CaseKind::Layer {
                delta: self.layer_delta,
            },
            Some(k) => k,
            None => return Err(CliError::Config(format!("unknown case '{}'", self.case))),
        };
        ManufacturedCase::new(kind, self.params.clone())
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn domain(&self) -> RectangleDomain {
        RectangleDomain {
            y_interface: self.interface_y,
            ..RectangleDomain::default()
        }
    }

    /// Mesh from the file, or the builtin rectangle with `nx` by `ny` cells.
    pub fn mesh(&self) -> Result<Mesh, CliError> {
        match &self.mesh {
            Some(path) => read_mesh_file(path).map_err(CliError::from),
            None => build_reference_geometry(&self.domain(), self.nx, self.ny)
                .map_err(|e| CliError::Config(e.to_string())),
        }
    }
}
