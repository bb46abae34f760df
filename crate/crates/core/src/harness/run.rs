use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use super::config::{DatasetKind, ExperimentConfig, Fallback, ModelSpec, Variant};
use super::metrics::{write_metrics_csv, MetricsRecord};
use crate::data::{
    corrupt_labels, load_idx, make_blobs_nd, make_two_moons, split, split_indices, Batch,
    BatchSampler, LabeledDataset, SamplingMode, ValidationMode,
};
use crate::error::{Error, Result};
use crate::lets::{lets_step, RadiusState};
use crate::model::{write_checkpoint, AnchorQuadratic, Conv1d, DifferentiableModel, LogReg, Mlp};
use crate::optim::{erm_step, sharpness_step, SgdConfig, SgdState};
use crate::param::ParamVector;
use crate::rng::{Stream, Substream};

/// Runs up to this many steps are logged every step, longer ones every epoch.
pub const PER_STEP_LOG_LIMIT: usize = 5000;

/// Training, validation and clean test sets of one run.
#[derive(Debug, Clone)]
pub struct PreparedData {
    /// Training pool after label corruption.
    pub train: LabeledDataset,
    /// Validation pool: a held-out slice, or the training pool itself.
    pub val: LabeledDataset,
    pub test: LabeledDataset,
}

pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let seed = cfg.data_seed();
    let d = &cfg.dataset;
    let full = match &d.kind {
        DatasetKind::Blobs {
            n,
            classes,
            features,
            spread,
        } => make_blobs_nd(*n, *classes, *features, *spread, seed)?,
        DatasetKind::TwoMoons { n, noise } => make_two_moons(*n, *noise, seed)?,
        DatasetKind::Idx { images, labels } => load_idx(images, labels)?,
    };
    let (pool, test) = split_indices(full.len(), d.test_fraction, seed)?;
    if pool.is_empty() || test.is_empty() {
        return Err(Error::config(format!(
            "test fraction {} of {} examples leaves an empty side",
            d.test_fraction,
            full.len()
        )));
    }
    let pool = full.subset(&pool, "pool")?;
    let test = full.subset(&test, "test")?;
    let (train, val) = match d.validation {
        ValidationMode::SampleFromTrain => {
            let train = corrupt_labels(&pool, d.label_noise, seed)?;
            (train.clone(), train)
        }
        ValidationMode::HeldOut => {
            let (train, val) = split(&pool, d.val_fraction, seed.wrapping_add(1))?;
            (corrupt_labels(&train, d.label_noise, seed)?, val)
        }
    };
    Ok(PreparedData { train, val, test })
}

pub fn build_model(
    spec: &ModelSpec,
    input_dim: usize,
    classes: usize,
) -> Result<Box<dyn DifferentiableModel>> {
    Ok(match spec {
        ModelSpec::Mlp {
            hidden,
            activation,
            loss,
        } => {
            let mut dims = vec![input_dim];
            dims.extend(hidden);
            dims.push(classes);
            Box::new(Mlp::new(&dims, *activation, *loss)?)
        }
        ModelSpec::LogReg { loss } => Box::new(LogReg::new(input_dim, classes, *loss)?),
        ModelSpec::Conv1d {
            filters,
            width,
            loss,
        } => Box::new(Conv1d::new(input_dim, *filters, *width, classes, *loss)?),
        ModelSpec::Quadratic { curvature } => Box::new(AnchorQuadratic::new(ParamVector::filled(
            input_dim, *curvature,
        ))?),
    })
}

/// End-of-run numbers, also written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub variant: String,
    pub seed: u64,
    pub dim: usize,
    pub steps: usize,
    pub epochs: usize,
    pub initial_train_loss: f64,
    pub final_train_loss: f64,
    pub final_test_loss: f64,
    pub final_test_acc: Option<f64>,
    pub final_rho: f64,
    pub final_val_gap: f64,
    pub min_grad_norm_sq: f64,
    pub fallback_steps: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<MetricsRecord>,
    pub theta: ParamVector,
    pub summary: RunSummary,
}

struct StepResult {
    theta: ParamVector,
    batch_train_loss: f64,
    batch_val_loss: f64,
    grad_norm: f64,
    lr: f64,
    beta: f64,
    g_rho: f64,
    rho: f64,
}

struct Trainer<'a> {
    cfg: &'a ExperimentConfig,
    model: &'a dyn DifferentiableModel,
    sgd_cfg: SgdConfig,
    sgd: SgdState,
    radius: Option<RadiusState>,
}

impl Trainer<'_> {
    fn post_losses(&self, theta: &ParamVector, train: &Batch, val: &Batch) -> Result<(f64, f64)> {
        Ok((self.model.loss(theta, train)?, self.model.loss(theta, val)?))
    }

    fn step(&mut self, theta: &ParamVector, train: &Batch, val: &Batch) -> Result<StepResult> {
        let variant = self.cfg.optimizer.variant;
        if let (Some(radius), Some(lets_cfg)) = (self.radius.as_mut(), self.cfg.lets_config()) {
            let (next, d) = lets_step(
                self.model,
                theta,
                radius,
                train,
                val,
                &mut self.sgd,
                &self.sgd_cfg,
                &lets_cfg,
            )?;
            return Ok(StepResult {
                theta: next,
                batch_train_loss: d.train_loss,
                batch_val_loss: d.val_loss,
                grad_norm: d.grad_norm,
                lr: d.lr,
                beta: d.beta,
                g_rho: d.g_rho,
                rho: d.rho_after,
            });
        }
        let step = match variant {
            Variant::Erm => erm_step(self.model, theta, train, &mut self.sgd, &self.sgd_cfg)?,
            _ => sharpness_step(
                self.model,
                theta,
                train,
                self.cfg.optimizer.rho,
                self.cfg.sharpness_variant(),
                &mut self.sgd,
                &self.sgd_cfg,
            )?,
        };
        let (batch_train_loss, batch_val_loss) = self.post_losses(&step.theta, train, val)?;
        Ok(StepResult {
            batch_train_loss,
            batch_val_loss,
            grad_norm: step.grad.l2_norm(),
            lr: step.lr,
            beta: 0.0,
            g_rho: 0.0,
            rho: self.cfg.optimizer.rho,
            theta: step.theta,
        })
    }

    /// One step with the configured fallback; the flag reports a fallback.
    fn advance(
        &mut self,
        theta: &ParamVector,
        train: &Batch,
        val: &Batch,
    ) -> Result<(StepResult, bool)> {
        let saved = (self.sgd.clone(), self.radius.clone());
        match self.step(theta, train, val) {
            Err(Error::NoDescentDirection(_))
                if self.cfg.train.fallback == Fallback::SkipPerturbation =>
            {
                (self.sgd, self.radius) = saved;
                Ok((self.fallback_step(theta, train, val)?, true))
            }
            other => Ok((other?, false)),
        }
    }

    /// Plain SGD on the same batch; the radius does not move.
    fn fallback_step(
        &mut self,
        theta: &ParamVector,
        train: &Batch,
        val: &Batch,
    ) -> Result<StepResult> {
        let step = erm_step(self.model, theta, train, &mut self.sgd, &self.sgd_cfg)?;
        let (batch_train_loss, batch_val_loss) = self.post_losses(&step.theta, train, val)?;
        let rho = self
            .radius
            .as_ref()
            .map_or(self.cfg.optimizer.rho, |r| r.rho());
        let beta = self.radius.as_ref().map_or(0.0, |r| r.beta());
        Ok(StepResult {
            batch_train_loss,
            batch_val_loss,
            grad_norm: step.grad.l2_norm(),
            lr: step.lr,
            beta,
            g_rho: 0.0,
            rho,
            theta: step.theta,
        })
    }
}

/// Total steps and steps per epoch for a training pool of `n` examples.
pub fn step_budget(cfg: &ExperimentConfig, n: usize) -> (usize, usize) {
    let per_epoch = n.div_ceil(cfg.train.batch_size.min(n));
    let total = cfg.train.steps.unwrap_or(cfg.train.epochs * per_epoch);
    (total, per_epoch)
}

fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    out: &RunOutput,
    model: &dyn DifferentiableModel,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let file = BufWriter::new(fs::File::create(dir.join("metrics.csv"))?);
    write_metrics_csv(&out.records, file)?;
    write_checkpoint(&dir.join("final.ckpt"), &out.theta, model.layout())?;
    let json =
        serde_json::to_string_pretty(&out.summary).map_err(|e| Error::config(e.to_string()))?;
    fs::write(dir.join("summary.json"), json + "\n")?;
    fs::write(dir.join("config.txt"), cfg.to_text())?;
    Ok(())
}

/// Trains one configuration end to end.
///
/// With `output.dir` set, writes `metrics.csv`, `final.ckpt` (plus layout),
/// `summary.json` and `config.txt` there. A non-finite step aborts the run
/// after saving the last finite parameters to `last_good.ckpt`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let data = prepare_data(cfg)?;
    let model = build_model(&cfg.model, data.train.dim(), data.train.classes())?;
    let model = model.as_ref();
    let seed = cfg.train.seed;
    let (total, per_epoch) = step_budget(cfg, data.train.len());
    let epochs = total.div_ceil(per_epoch);
    let radius = match cfg.radius_config(epochs.max(1)) {
        Some(rc) => Some(RadiusState::new(cfg.optimizer.rho, rc?)?),
        None => None,
    };
    let mut trainer = Trainer {
        cfg,
        model,
        sgd_cfg: cfg.sgd_config(total)?,
        sgd: SgdState::new(),
        radius,
    };
    let mut train_sampler = BatchSampler::new(
        data.train.len(),
        cfg.train.batch_size,
        SamplingMode::ShuffleEpoch,
        Stream::substream(seed, Substream::TrainSampling),
    )?;
    let mut val_sampler = BatchSampler::new(
        data.val.len(),
        cfg.train.val_batch_size.unwrap_or(cfg.train.batch_size),
        SamplingMode::ShuffleEpoch,
        Stream::substream(seed, Substream::ValSampling),
    )?;

    let train_full = data.train.full_batch();
    let test_full = data.test.full_batch();
    let mut theta = model.init_params(&mut Stream::substream(seed, Substream::Init));
    let initial_train_loss = model.loss(&theta, &train_full)?;
    let per_step = total <= PER_STEP_LOG_LIMIT;

    let mut records = Vec::new();
    let mut fallback_steps = 0;
    let mut min_grad_norm_sq = f64::INFINITY;
    for t in 0..total {
        let train = train_sampler.next_batch(&data.train);
        let val = val_sampler.next_batch(&data.val);
        let r = match trainer.advance(&theta, &train, &val) {
            Ok((r, fell_back)) => {
                fallback_steps += usize::from(fell_back);
                r
            }
            Err(e) => {
                if let (Error::NonFinite(_), Some(dir)) = (&e, &cfg.output_dir) {
                    fs::create_dir_all(dir)?;
                    write_checkpoint(&dir.join("last_good.ckpt"), &theta, model.layout())?;
                }
                return Err(e);
            }
        };
        theta = r.theta;
        min_grad_norm_sq = min_grad_norm_sq.min(r.grad_norm * r.grad_norm);
        let done = t + 1;
        let epoch = t / per_epoch;
        let epoch_end = done % per_epoch == 0;
        if epoch_end {
            if let Some(radius) = trainer.radius.as_mut() {
                radius.advance_schedule();
            }
        }
        if per_step || epoch_end || done == total {
            let train_loss = model.loss(&theta, &train_full)?;
            let test_loss = model.loss(&theta, &test_full)?;
            records.push(MetricsRecord {
                step: done,
                epoch,
                batch_train_loss: r.batch_train_loss,
                batch_val_loss: r.batch_val_loss,
                train_loss,
                test_loss,
                test_acc: model.accuracy(&theta, &test_full)?,
                val_gap: r.batch_val_loss - r.batch_train_loss,
                test_gap: test_loss - train_loss,
                rho: r.rho,
                g_rho: r.g_rho,
                grad_norm: r.grad_norm,
                lr: r.lr,
                beta: r.beta,
            });
        }
    }

    let last = records.last().cloned();
    let summary = RunSummary {
        variant: cfg.optimizer.variant.to_string(),
        seed,
        dim: model.dim(),
        steps: total,
        epochs,
        initial_train_loss,
        final_train_loss: last.as_ref().map_or(initial_train_loss, |r| r.train_loss),
        final_test_loss: match &last {
            Some(r) => r.test_loss,
            None => model.loss(&theta, &test_full)?,
        },
        final_test_acc: match &last {
            Some(r) => r.test_acc,
            None => model.accuracy(&theta, &test_full)?,
        },
        final_rho: trainer
            .radius
            .as_ref()
            .map_or(cfg.optimizer.rho, |r| r.rho()),
        final_val_gap: last.as_ref().map_or(0.0, |r| r.val_gap),
        min_grad_norm_sq,
        fallback_steps,
    };
    let out = RunOutput {
        records,
        theta,
        summary,
    };
    if let Some(dir) = &cfg.output_dir {
        write_outputs(dir, cfg, &out, model)?;
    }
    Ok(out)
}
