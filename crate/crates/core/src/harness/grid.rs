use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::config::{GridConfig, Method};
use super::run::{run_online_cl, write_run_artifacts, RunOutcome, RunSummary};
use crate::error::{Error, Result};
use crate::metrics::{mean_std, relative_improvement};

/// All seeds of one (method, memory size) cell.
#[derive(Debug, Clone)]
pub struct GridCell {
    pub method: Method,
    pub memory: usize,
    pub fingerprint: String,
    pub runs: Vec<RunSummary>,
    /// `(seed, diagnostic)` for runs that failed.
    pub failures: Vec<(u64, String)>,
}

impl GridCell {
    pub fn accuracies(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.last_accuracy).collect()
    }

    pub fn forgettings(&self) -> Vec<f64> {
        self.runs.iter().filter_map(|r| r.last_forgetting).collect()
    }

    pub fn mean_forgetting(&self) -> Option<f64> {
        let f = self.forgettings();
        (!f.is_empty()).then(|| mean_std(&f).0)
    }
}

#[derive(Debug, Clone)]
pub struct GridReport {
    pub cells: Vec<GridCell>,
}

impl GridReport {
    pub fn cell(&self, method: Method, memory: usize) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.method == method && c.memory == memory)
    }

    /// Table CSV: mean and standard deviation of accuracy and forgetting per
    /// cell, plus relative forgetting improvement over ER at the same memory.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "score",
            "strategy",
            "memory",
            "runs",
            "failed",
            "acc_mean",
            "acc_std",
            "forget_mean",
            "forget_std",
            "rel_improvement_vs_er",
        ])?;
        let fmt = |v: f64| if v.is_finite() { format!("{v:.6}") } else { String::new() };
        for cell in &self.cells {
            let (am, asd) = mean_std(&cell.accuracies());
            let (fm, fsd) = mean_std(&cell.forgettings());
            let rel = self
                .cell(Method::ErRandom, cell.memory)
                .and_then(GridCell::mean_forgetting)
                .zip(cell.mean_forgetting())
                .and_then(|(base, f)| relative_improvement(base, f).ok())
                .map_or(String::new(), fmt);
            w.write_record([
                cell.method.score_label().to_string(),
                cell.method.strategy_label().to_string(),
                cell.memory.to_string(),
                cell.runs.len().to_string(),
                cell.failures.len().to_string(),
                fmt(am),
                fmt(asd),
                fmt(fm),
                fmt(fsd),
                rel,
            ])?;
        }
        w.flush().map_err(|e| Error::io("<grid table>", e))?;
        Ok(())
    }
}

/// Run every (memory, method, seed) combination. Runs execute in parallel;
/// results are gathered in table order so the output does not depend on
/// scheduling. A failing run is recorded in its cell and the grid goes on.
///
/// When `artifacts_dir` is given, each successful run's summary, accuracy
/// matrix and memory dump are written under it.
pub fn run_grid(grid: &GridConfig, artifacts_dir: Option<&Path>) -> Result<GridReport> {
    grid.validate()?;
    let mut layout = Vec::new();
    for &memory in &grid.memory {
        for method in grid.methods() {
            layout.push((memory, method));
        }
    }
    let jobs: Vec<(usize, u64)> = (0..layout.len())
        .flat_map(|cell| grid.seeds.iter().map(move |&s| (cell, s)))
        .collect();

    let results: Vec<Result<RunOutcome>> = jobs
        .par_iter()
        .map(|&(cell, seed)| {
            let (memory, method) = layout[cell];
            let outcome = run_online_cl(&grid.experiment(memory, method), seed)?;
            if let Some(dir) = artifacts_dir {
                write_run_artifacts(dir, &outcome)?;
            }
            Ok(outcome)
        })
        .collect();

    let mut cells: Vec<GridCell> = layout
        .iter()
        .map(|&(memory, method)| GridCell {
            method,
            memory,
            fingerprint: grid.experiment(memory, method).fingerprint(),
            runs: Vec::new(),
            failures: Vec::new(),
        })
        .collect();
    for (&(cell, seed), result) in jobs.iter().zip(results) {
        match result {
            Ok(outcome) => cells[cell].runs.push(outcome.summary),
            Err(e) => cells[cell].failures.push((seed, e.to_string())),
        }
    }
    Ok(GridReport { cells })
}
