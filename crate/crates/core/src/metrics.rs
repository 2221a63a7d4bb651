//! Task-accuracy matrix, last accuracy and last forgetting.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower-triangular table: `row t, column j` is the accuracy on task `j`
/// after training through task `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyMatrix {
    tasks: usize,
    rows: Vec<Vec<f64>>,
}

impl AccuracyMatrix {
    pub fn new(tasks: usize) -> Self {
        AccuracyMatrix {
            tasks,
            rows: Vec::with_capacity(tasks),
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut m = AccuracyMatrix::new(rows.len());
        for (t, row) in rows.into_iter().enumerate() {
            m.record_task_end(t, row)?;
        }
        Ok(m)
    }

    pub fn tasks(&self) -> usize {
        self.tasks
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn is_complete(&self) -> bool {
        self.rows.len() == self.tasks
    }

    pub fn get(&self, t: usize, j: usize) -> Option<f64> {
        self.rows.get(t).and_then(|r| r.get(j)).copied()
    }

    /// Write row `t` (accuracies on tasks `0..=t`). Rows are written in order,
    /// exactly once.
    pub fn record_task_end(&mut self, t: usize, accuracies: Vec<f64>) -> Result<()> {
        if t != self.rows.len() {
            return Err(Error::ContractViolation(format!(
                "row {t} written out of order (next row is {})",
                self.rows.len()
            )));
        }
        if t >= self.tasks {
            return Err(Error::ContractViolation(format!("row {t} beyond {} tasks", self.tasks)));
        }
        if accuracies.len() != t + 1 {
            return Err(Error::ContractViolation(format!(
                "row {t} needs {} accuracies, got {}",
                t + 1,
                accuracies.len()
            )));
        }
        if let Some(a) = accuracies.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::ContractViolation(format!("accuracy {a} outside [0, 1]")));
        }
        self.rows.push(accuracies);
        Ok(())
    }

    fn require_complete(&self) -> Result<()> {
        if self.tasks == 0 || !self.is_complete() {
            return Err(Error::UndefinedMetric(format!(
                "accuracy matrix has {} of {} rows",
                self.rows.len(),
                self.tasks
            )));
        }
        Ok(())
    }

    /// Mean accuracy over all tasks after the final task.
    pub fn last_accuracy(&self) -> Result<f64> {
        self.require_complete()?;
        let last = &self.rows[self.tasks - 1];
        Ok(last.iter().sum::<f64>() / last.len() as f64)
    }

    /// Mean over tasks `j < T-1` of `max_{t in [j, T-2]} a[t][j] - a[T-1][j]`.
    pub fn last_forgetting(&self) -> Result<f64> {
        self.require_complete()?;
        if self.tasks < 2 {
            return Err(Error::UndefinedMetric("forgetting needs at least two tasks".into()));
        }
        let last = self.tasks - 1;
        let total: f64 = (0..last)
            .map(|j| {
                let best = (j..last).map(|t| self.rows[t][j]).fold(f64::NEG_INFINITY, f64::max);
                best - self.rows[last][j]
            })
            .sum();
        Ok(total / last as f64)
    }

    /// CSV with one row per training stage and one column per task; cells
    /// above the diagonal are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["stage".to_string()];
        header.extend((0..self.tasks).map(|j| format!("task_{j}")));
        w.write_record(&header)?;
        for (t, row) in self.rows.iter().enumerate() {
            let mut rec = vec![t.to_string()];
            rec.extend((0..self.tasks).map(|j| row.get(j).map_or(String::new(), f64::to_string)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<accuracy matrix>", e))?;
        Ok(())
    }
}

/// `(f_baseline - f_method) / f_baseline`.
pub fn relative_improvement(f_baseline: f64, f_method: f64) -> Result<f64> {
    if !(f_baseline > 0.0) {
        return Err(Error::UndefinedMetric(format!(
            "relative improvement needs positive baseline forgetting, got {f_baseline}"
        )));
    }
    Ok((f_baseline - f_method) / f_baseline)
}

/// Sample mean and standard deviation (n - 1 denominator; 0 for n < 2).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    if values.iter().all(|v| *v == values[0]) {
        return (values[0], 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
