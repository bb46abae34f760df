use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::run::{run_experiment, RunSummary};
use crate::error::{Error, Result};
use crate::lets::MetricKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Initial (or fixed) radius.
    Rho0,
    MetricKind,
    NoiseRate,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Rho0 => "rho0",
            SweepParam::MetricKind => "metric-kind",
            SweepParam::NoiseRate => "noise-rate",
        }
    }

    fn key(&self) -> &'static str {
        match self {
            SweepParam::Rho0 => "optimizer.rho",
            SweepParam::MetricKind => "lets.metric",
            SweepParam::NoiseRate => "dataset.label_noise",
        }
    }

    /// The values the ablations use when none are given.
    pub fn default_values(&self) -> Vec<String> {
        let v: Vec<&str> = match self {
            SweepParam::Rho0 => vec!["0.01", "0.05", "0.1", "0.5", "1", "1.5", "2"],
            SweepParam::MetricKind => MetricKind::ALL.iter().map(|m| m.name()).collect(),
            SweepParam::NoiseRate => vec!["0.2", "0.4", "0.6", "0.8"],
        };
        v.into_iter().map(String::from).collect()
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho0" => Ok(SweepParam::Rho0),
            "metric-kind" => Ok(SweepParam::MetricKind),
            "noise-rate" => Ok(SweepParam::NoiseRate),
            other => Err(Error::config(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    /// One entry per seed, in seed order.
    pub runs: Vec<std::result::Result<RunSummary, String>>,
}

impl SweepRow {
    fn finished(&self) -> impl Iterator<Item = &RunSummary> {
        self.runs.iter().filter_map(|r| r.as_ref().ok())
    }

    pub fn completed(&self) -> usize {
        self.finished().count()
    }

    fn accs(&self) -> Vec<f64> {
        self.finished().filter_map(|s| s.final_test_acc).collect()
    }

    /// Mean and sample standard deviation of final test accuracy.
    pub fn test_acc(&self) -> Option<(f64, f64)> {
        mean_std(&self.accs())
    }

    pub fn final_rho(&self) -> Option<(f64, f64)> {
        mean_std(&self.finished().map(|s| s.final_rho).collect::<Vec<_>>())
    }

    pub fn final_val_gap(&self) -> Option<(f64, f64)> {
        mean_std(&self.finished().map(|s| s.final_val_gap).collect::<Vec<_>>())
    }
}

fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some((mean, std))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub param: SweepParam,
    pub seeds: Vec<u64>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub const CSV_HEADER: &'static str =
        "param,value,completed,runs,test_acc_mean,test_acc_std,final_rho_mean,final_val_gap_mean";

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<(f64, f64)>, i: usize| match v {
            Some(p) => if i == 0 { p.0 } else { p.1 }.to_string(),
            None => String::new(),
        };
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            out += &format!(
                "{},{},{},{},{},{},{},{}\n",
                self.param,
                r.value,
                r.completed(),
                r.runs.len(),
                opt(r.test_acc(), 0),
                opt(r.test_acc(), 1),
                opt(r.final_rho(), 0),
                opt(r.final_val_gap(), 0)
            );
        }
        out
    }
}

impl fmt::Display for SweepTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<14} {:>9} {:>22} {:>12}",
            self.param.name(),
            "runs",
            "test acc",
            "final rho"
        )?;
        for r in &self.rows {
            let acc = r
                .test_acc()
                .map_or("-".to_string(), |(m, s)| format!("{:.4} ± {:.4}", m, s));
            let rho = r
                .final_rho()
                .map_or("-".to_string(), |(m, _)| format!("{m:.5}"));
            writeln!(
                f,
                "{:<14} {:>9} {:>22} {:>12}",
                r.value,
                format!("{}/{}", r.completed(), r.runs.len()),
                acc,
                rho
            )?;
            for e in r.runs.iter().filter_map(|r| r.as_ref().err()) {
                writeln!(f, "  failed: {e}")?;
            }
        }
        Ok(())
    }
}

/// One run per value per seed (`train.seeds`), in parallel.
///
/// Runs that fail are recorded in their row rather than aborting the sweep.
/// With `output.dir` set, run `k` of value `v` writes under
/// `<dir>/<param>=<v>/seed<k>`.
pub fn sweep(cfg: &ExperimentConfig, param: SweepParam, values: &[String]) -> Result<SweepTable> {
    if param == SweepParam::MetricKind && cfg.lets.is_none() {
        return Err(Error::config(format!(
            "metric-kind sweep needs a lets variant, not {}",
            cfg.optimizer.variant
        )));
    }
    if values.is_empty() {
        return Err(Error::config("sweep needs at least one value"));
    }
    let seeds = cfg.train.seeds.clone();
    let mut jobs = Vec::new();
    for value in values {
        for &seed in &seeds {
            let mut c = cfg
                .with(param.key(), value.clone())?
                .with("train.seed", seed.to_string())?;
            if let Some(dir) = &cfg.output_dir {
                let sub = dir
                    .join(format!("{}={}", param.name(), value))
                    .join(format!("seed{seed}"));
                c = c.with("output.dir", sub.display().to_string())?;
            }
            jobs.push(c);
        }
    }
    let results: Vec<_> = jobs
        .par_iter()
        .map(|c| {
            run_experiment(c)
                .map(|o| o.summary)
                .map_err(|e| e.to_string())
        })
        .collect();
    let mut results = results.into_iter();
    let rows = values
        .iter()
        .map(|v| SweepRow {
            value: v.clone(),
            runs: results.by_ref().take(seeds.len()).collect(),
        })
        .collect();
    Ok(SweepTable { param, seeds, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(extra: &str) -> ExperimentConfig {
        ExperimentConfig::parse(&format!(
            "dataset.n=80\ndataset.classes=2\nmodel.hidden=4\ntrain.epochs=1\ntrain.batch_size=16\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn rho_grid_values() {
        assert_eq!(
            SweepParam::Rho0.default_values(),
            ["0.01", "0.05", "0.1", "0.5", "1", "1.5", "2"]
        );
    }

    #[test]
    fn metric_sweep_has_three_rows() {
        let c = base("");
        let t = sweep(
            &c,
            SweepParam::MetricKind,
            &SweepParam::MetricKind.default_values(),
        )
        .unwrap();
        let names: Vec<_> = t.rows.iter().map(|r| r.value.as_str()).collect();
        assert_eq!(names, ["val-loss", "gap", "squared-gap"]);
        assert!(t.rows.iter().all(|r| r.completed() == 1));
        assert_eq!(t.to_csv().lines().count(), 4);
        assert!(sweep(
            &base("optimizer.variant=sam"),
            SweepParam::MetricKind,
            &["gap".into()]
        )
        .is_err());
    }

    #[test]
    fn single_run_matches_run_experiment() {
        let c = base("train.seed=7");
        let t = sweep(&c, SweepParam::Rho0, &["0.1".into()]).unwrap();
        let direct = run_experiment(&c.with("optimizer.rho", "0.1").unwrap())
            .unwrap()
            .summary;
        assert_eq!(t.rows[0].runs, vec![Ok(direct.clone())]);
        assert_eq!(
            t.rows[0].test_acc(),
            Some((direct.final_test_acc.unwrap(), 0.0))
        );
    }

    #[test]
    fn seeds_repeat_each_value() {
        let c = base("train.seeds=1,2,3");
        let t = sweep(&c, SweepParam::NoiseRate, &["0".into(), "0.2".into()]).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows.iter().all(|r| r.runs.len() == 3));
        let seeds: Vec<u64> = t.rows[0]
            .runs
            .iter()
            .map(|r| r.as_ref().unwrap().seed)
            .collect();
        assert_eq!(seeds, [1, 2, 3]);
    }

    #[test]
    fn mean_std_edges() {
        assert_eq!(mean_std(&[]), None);
        assert_eq!(mean_std(&[0.5]), Some((0.5, 0.0)));
        let (m, s) = mean_std(&[1.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }
}
