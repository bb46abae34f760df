use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One logged row of a training run.
///
/// `val_gap` is the optimized gap `L(B_vl) - L(B_tr)` on the step's batches
/// after the update; `test_gap` is the full-set `L_test - L_train`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    /// Number of completed steps.
    pub step: usize,
    pub epoch: usize,
    pub batch_train_loss: f64,
    pub batch_val_loss: f64,
    pub train_loss: f64,
    pub test_loss: f64,
    pub test_acc: Option<f64>,
    pub val_gap: f64,
    pub test_gap: f64,
    pub rho: f64,
    pub g_rho: f64,
    /// Norm of the training-batch gradient at the step's starting point.
    pub grad_norm: f64,
    pub lr: f64,
    pub beta: f64,
}

pub const METRICS_HEADER: &str = "step,epoch,batch_train_loss,batch_val_loss,train_loss,test_loss,\
test_acc,val_gap,test_gap,rho,g_rho,grad_norm,lr,beta";

impl MetricsRecord {
    pub fn csv_row(&self) -> String {
        let acc = self.test_acc.map_or(String::new(), |a| a.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.step,
            self.epoch,
            self.batch_train_loss,
            self.batch_val_loss,
            self.train_loss,
            self.test_loss,
            acc,
            self.val_gap,
            self.test_gap,
            self.rho,
            self.g_rho,
            self.grad_norm,
            self.lr,
            self.beta
        )
    }

    pub fn parse_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 14 {
            return Err(Error::format(
                0,
                format!("metrics row has {} fields, want 14", f.len()),
            ));
        }
        let num = |i: usize| -> Result<f64> {
            f[i].parse().map_err(|_| {
                Error::format(0, format!("bad number {:?} in metrics column {i}", f[i]))
            })
        };
        let int = |i: usize| -> Result<usize> {
            f[i].parse().map_err(|_| {
                Error::format(0, format!("bad integer {:?} in metrics column {i}", f[i]))
            })
        };
        Ok(MetricsRecord {
            step: int(0)?,
            epoch: int(1)?,
            batch_train_loss: num(2)?,
            batch_val_loss: num(3)?,
            train_loss: num(4)?,
            test_loss: num(5)?,
            test_acc: if f[6].is_empty() { None } else { Some(num(6)?) },
            val_gap: num(7)?,
            test_gap: num(8)?,
            rho: num(9)?,
            g_rho: num(10)?,
            grad_norm: num(11)?,
            lr: num(12)?,
            beta: num(13)?,
        })
    }
}

pub fn write_metrics_csv<W: Write>(records: &[MetricsRecord], mut out: W) -> Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRecord>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == METRICS_HEADER => {}
        _ => {
            return Err(Error::format(
                0,
                format!("{} lacks the metrics header", path.display()),
            ))
        }
    }
    lines
        .filter(|l| !l.is_empty())
        .map(MetricsRecord::parse_row)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MetricsRecord {
        MetricsRecord {
            step: 3,
            epoch: 0,
            batch_train_loss: 0.39605,
            batch_val_loss: 0.61605,
            train_loss: 0.5,
            test_loss: 0.7,
            test_acc: Some(0.75),
            val_gap: 0.22,
            test_gap: 0.2,
            rho: 0.1,
            g_rho: 0.5324,
            grad_norm: 1.0,
            lr: 0.1,
            beta: 1e-4,
        }
    }

    #[test]
    fn golden_header() {
        assert_eq!(
            METRICS_HEADER,
            "step,epoch,batch_train_loss,batch_val_loss,train_loss,test_loss,test_acc,\
val_gap,test_gap,rho,g_rho,grad_norm,lr,beta"
        );
    }

    #[test]
    fn row_round_trips() {
        let r = sample();
        assert_eq!(MetricsRecord::parse_row(&r.csv_row()).unwrap(), r);
        let none = MetricsRecord {
            test_acc: None,
            ..r
        };
        assert_eq!(MetricsRecord::parse_row(&none.csv_row()).unwrap(), none);
        assert!(MetricsRecord::parse_row("1,2,3").is_err());
    }

    #[test]
    fn file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let rows = vec![
            sample(),
            MetricsRecord {
                step: 4,
                ..sample()
            },
        ];
        write_metrics_csv(&rows, fs::File::create(&path).unwrap()).unwrap();
        assert_eq!(read_metrics_csv(&path).unwrap(), rows);
        fs::write(&path, "nope\n").unwrap();
        assert!(read_metrics_csv(&path).is_err());
    }
}
