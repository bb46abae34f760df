use std::fmt;
use std::path::Path;

use serde::Serialize;

use super::metrics::read_metrics_csv;
use crate::error::{Error, Result};

/// Gradient norms of one run, one per logged step.
#[derive(Debug, Clone, PartialEq)]
pub struct RunCurve {
    pub label: String,
    /// Steps the run took.
    pub horizon: usize,
    pub grad_norms: Vec<f64>,
}

/// Reads `<dir>/metrics.csv`.
pub fn load_curve(dir: &Path) -> Result<RunCurve> {
    let records = read_metrics_csv(&dir.join("metrics.csv"))?;
    let horizon = records
        .last()
        .map(|r| r.step)
        .ok_or_else(|| Error::format(0, format!("{} has no rows", dir.display())))?;
    Ok(RunCurve {
        label: dir.display().to_string(),
        horizon,
        grad_norms: records.iter().map(|r| r.grad_norm).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonStat {
    pub label: String,
    pub horizon: usize,
    /// `min_t ||grad L(B; theta_t)||^2` over the run.
    pub min_grad_norm_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub entries: Vec<HorizonStat>,
    /// Least-squares slope of `ln stat` against `ln T`; `None` when fewer than
    /// two distinct horizons or a non-positive statistic make it undefined.
    pub exponent: Option<f64>,
}

pub fn convergence_summary(runs: &[RunCurve]) -> Result<ConvergenceReport> {
    if runs.len() < 2 {
        return Err(Error::config("convergence summary needs at least two runs"));
    }
    let mut entries = Vec::with_capacity(runs.len());
    for r in runs {
        let min = r
            .grad_norms
            .iter()
            .map(|g| g * g)
            .fold(f64::INFINITY, f64::min);
        if r.grad_norms.is_empty() || r.horizon == 0 {
            return Err(Error::config(format!("run {} is empty", r.label)));
        }
        entries.push(HorizonStat {
            label: r.label.clone(),
            horizon: r.horizon,
            min_grad_norm_sq: min,
        });
    }
    let distinct = entries.iter().any(|e| e.horizon != entries[0].horizon);
    let exponent = if distinct && entries.iter().all(|e| e.min_grad_norm_sq > 0.0) {
        let pts: Vec<(f64, f64)> = entries
            .iter()
            .map(|e| ((e.horizon as f64).ln(), e.min_grad_norm_sq.ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    } else {
        None
    };
    Ok(ConvergenceReport { entries, exponent })
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>8} {:>16}  run", "T", "min |g|^2")?;
        for e in &self.entries {
            writeln!(
                f,
                "{:>8} {:>16.6e}  {}",
                e.horizon, e.min_grad_norm_sq, e.label
            )?;
        }
        match self.exponent {
            Some(p) => write!(f, "fitted exponent: {p:.4} (1/sqrt(T) rate is -0.5)"),
            None => write!(f, "fitted exponent: undefined"),
        }
    }
}
