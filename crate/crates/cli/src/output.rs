use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gutz_core::mc::GENERATOR_ID;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;

/// One CSV cell.
pub enum Cell {
    F(f64),
    I(u64),
    S(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::I(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::F)
    }
}

pub struct Table {
    pub columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    /// Floats are written with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                match c {
                    Cell::F(x) => write!(s, "{x:.16e}").unwrap(),
                    Cell::I(x) => write!(s, "{x}").unwrap(),
                    Cell::S(x) => s.push_str(x),
                    Cell::Empty => {}
                }
            }
            s.push('\n');
        }
        s
    }
}

pub fn meta_path(csv: &Path) -> PathBuf {
    let mut p = csv.as_os_str().to_owned();
    p.push(".meta.json");
    PathBuf::from(p)
}

/// Writes `path` and its `.meta.json` sidecar.
pub fn write(path: &Path, table: &Table, command: &str, cfg: &RunConfig, extra: serde_json::Value) -> Result<(), CliError> {
    std::fs::write(path, table.to_csv())?;
    let meta = json!({
        "command": command,
        "output": path.file_name().map(|f| f.to_string_lossy().into_owned()),
        "columns": table.columns,
        "config": cfg.echo,
        "resolved": {
            "lattice": cfg.lattice.as_ref().map(|l| l.to_string()),
            "U": cfg.us,
            "g": cfg.g_grid,
            "nmc": cfg.nmc,
            "bins": cfg.bins,
            "burnin": cfg.burnin,
            "chains": cfg.chains,
            "backend": cfg.backend.to_string(),
            "shots": cfg.shots,
            "reps": cfg.reps,
            "bias": cfg.bias.map(|b| [b.scale, b.phase]),
        },
        "seed": cfg.seed,
        "generator": GENERATOR_ID,
        "version": gutz_core::VERSION,
        "details": extra,
    });
    let text = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Output(std::io::Error::other(e)))?;
    std::fs::write(meta_path(path), text + "\n")?;
    Ok(())
}
