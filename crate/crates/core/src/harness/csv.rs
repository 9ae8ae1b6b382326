//! Plot-ready CSV output. Floats use Rust's shortest round-trip formatting,
//! so files are byte-identical whenever the results are bit-identical.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::SweepResult;
use crate::error::{KboError, Result};
use crate::validation::{exact_solution, ConvergenceStudy, DensityGrid};

pub const CSV_HEADER: &str = "axis,success_rate,mean_iterations,m_runs,seed";

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let io = |source| KboError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)
}

pub fn render_results(results: &[SweepResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.axis, r.success_rate, r.mean_iterations, r.m_runs, r.seed
        ));
    }
    out
}

/// Header plus one row per sweep point, in sweep order.
pub fn emit_csv(results: &[SweepResult], path: &Path) -> Result<()> {
    write_file(path, &render_results(results))
}

/// `n,error` rows of a convergence study.
pub fn emit_convergence_csv(study: &ConvergenceStudy, path: &Path) -> Result<()> {
    let mut out = String::from("n,error\n");
    for (n, e) in &study.points {
        out.push_str(&format!("{n},{e}\n"));
    }
    write_file(path, &out)
}

/// `x_center,f_numeric,f_exact` rows of a density snapshot at time `t`.
pub fn emit_density_csv(grid: &DensityGrid, t: f64, path: &Path) -> Result<()> {
    let mut out = String::from("x_center,f_numeric,f_exact\n");
    for (x, v) in grid.centers().zip(&grid.values) {
        out.push_str(&format!("{x},{v},{}\n", exact_solution(x, t)));
    }
    write_file(path, &out)
}
