//! Flat `key=value` experiment configuration.
//!
//! Keys carry a dotted section prefix (`dataset.`, `model.`, `optimizer.`,
//! `lets.`, `train.`, `output.`). Order does not matter, `#` starts a comment
//! line, and any key the selected variant and model do not consume is
//! rejected by name.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::data::ValidationMode;
use crate::error::{Error, Result};
use crate::lets::{
    DirectionSource, HessianMode, LetsConfig, MetricKind, Parameterization, RadiusConfig,
    RadiusOptimizer,
};
use crate::model::{Activation, LossKind};
use crate::optim::{Normalization, Schedule, ScheduleKind, SgdConfig, SharpnessVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Erm,
    Sam,
    Asam,
    LetsSam,
    LetsAsam,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Erm,
        Variant::Sam,
        Variant::Asam,
        Variant::LetsSam,
        Variant::LetsAsam,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Erm => "erm",
            Variant::Sam => "sam",
            Variant::Asam => "asam",
            Variant::LetsSam => "lets-sam",
            Variant::LetsAsam => "lets-asam",
        }
    }

    pub fn is_lets(&self) -> bool {
        matches!(self, Variant::LetsSam | Variant::LetsAsam)
    }

    pub fn is_asam(&self) -> bool {
        matches!(self, Variant::Asam | Variant::LetsAsam)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::config(format!("unknown optimizer variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetKind {
    Blobs {
        n: usize,
        classes: usize,
        features: usize,
        spread: f64,
    },
    TwoMoons {
        n: usize,
        noise: f64,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    /// Fraction of training labels flipped to a different class.
    pub label_noise: f64,
    /// Fraction held out as the clean test set.
    pub test_fraction: f64,
    pub validation: ValidationMode,
    /// Fraction of the training pool held out for validation in held-out mode.
    pub val_fraction: f64,
    /// Data seed; falls back to the master seed.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Mlp {
        hidden: Vec<usize>,
        activation: Activation,
        loss: LossKind,
    },
    LogReg {
        loss: LossKind,
    },
    Conv1d {
        filters: usize,
        width: usize,
        loss: LossKind,
    },
    /// Per-example anchor quadratic `mean_b 1/2 sum a (theta - x_b)^2`.
    Quadratic {
        curvature: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LrSchedule {
    Constant,
    Cosine,
    Exponential { gamma: f64 },
    WarmupLinear { warmup: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSpec {
    pub variant: Variant,
    pub lr: f64,
    pub lr_schedule: LrSchedule,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Fixed radius for sam/asam, initial radius for the lets variants.
    pub rho: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusScheduleKind {
    Constant,
    Exponential,
    Cosine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LetsSpec {
    pub beta: f64,
    pub radius_optimizer: RadiusOptimizer,
    pub radius_schedule: RadiusScheduleKind,
    pub radius_gamma: f64,
    pub metric: MetricKind,
    pub hessian: HessianMode,
    pub direction: DirectionSource,
    pub parameterization: Parameterization,
    pub rho_max: Option<f64>,
}

impl Default for LetsSpec {
    fn default() -> Self {
        LetsSpec {
            beta: 1e-4,
            radius_optimizer: RadiusOptimizer::Adam,
            radius_schedule: RadiusScheduleKind::Exponential,
            radius_gamma: 0.999,
            metric: MetricKind::SquaredGap,
            hessian: HessianMode::DiagApprox,
            direction: DirectionSource::PostStep,
            parameterization: Parameterization::Exp,
            rho_max: None,
        }
    }
}

/// What to do when a step has no perturbation direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    /// Take a plain SGD step on the same batch and leave the radius alone.
    SkipPerturbation,
    Abort,
}

impl FromStr for Fallback {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skip-perturbation" => Ok(Fallback::SkipPerturbation),
            "abort" => Ok(Fallback::Abort),
            other => Err(Error::config(format!("unknown fallback {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSpec {
    pub epochs: usize,
    /// Total step count; overrides `epochs` when set.
    pub steps: Option<usize>,
    pub batch_size: usize,
    pub val_batch_size: Option<usize>,
    pub seed: u64,
    pub fallback: Fallback,
    /// Seeds a sweep repeats every value over.
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    pub optimizer: OptimizerSpec,
    /// Present exactly for the lets variants.
    pub lets: Option<LetsSpec>,
    pub train: TrainSpec,
    pub output_dir: Option<PathBuf>,
    raw: BTreeMap<String, String>,
}

struct Keys {
    map: BTreeMap<String, String>,
}

impl Keys {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::config(format!("invalid value {v:?} for {key}"))),
        }
    }

    fn get<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    fn typed<T: FromStr<Err = Error>>(&mut self, key: &str, default: T) -> Result<T> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e: Error| Error::config(format!("{key}: {}", strip_prefix(&e)))),
        }
    }

    fn positive(&mut self, key: &str, default: f64) -> Result<f64> {
        let v: f64 = self.get(key, default)?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::config(format!("{key} must be positive, got {v}")));
        }
        Ok(v)
    }

    fn nonneg(&mut self, key: &str, default: f64) -> Result<f64> {
        let v: f64 = self.get(key, default)?;
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::config(format!("{key} must be >= 0, got {v}")));
        }
        Ok(v)
    }

    fn count(&mut self, key: &str, default: usize) -> Result<usize> {
        let v: usize = self.get(key, default)?;
        if v == 0 {
            return Err(Error::config(format!("{key} must be at least 1")));
        }
        Ok(v)
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::config(format!("invalid list entry {s:?} for {key}")))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

fn parse_loss(s: &str) -> Result<LossKind> {
    match s {
        "cross-entropy" => Ok(LossKind::CrossEntropy),
        "mse" => Ok(LossKind::MeanSquared),
        other => Err(Error::config(format!("unknown loss {other:?}"))),
    }
}

fn loss_key(keys: &mut Keys) -> Result<LossKind> {
    keys.take("model.loss")
        .map_or(Ok(LossKind::CrossEntropy), |s| parse_loss(&s))
}

fn parse_dataset(keys: &mut Keys) -> Result<DatasetSpec> {
    let kind = keys.take("dataset.kind").unwrap_or_else(|| "blobs".into());
    let kind = match kind.as_str() {
        "blobs" => DatasetKind::Blobs {
            n: keys.count("dataset.n", 1000)?,
            classes: keys.count("dataset.classes", 4)?,
            features: keys.count("dataset.features", 2)?,
            spread: keys.nonneg("dataset.spread", 3.0)?,
        },
        "two-moons" => DatasetKind::TwoMoons {
            n: keys.count("dataset.n", 1000)?,
            noise: keys.nonneg("dataset.noise", 0.1)?,
        },
        "idx" => {
            let images = keys.take("dataset.images");
            let labels = keys.take("dataset.labels");
            match (images, labels) {
                (Some(i), Some(l)) => DatasetKind::Idx {
                    images: i.into(),
                    labels: l.into(),
                },
                _ => {
                    return Err(Error::config(
                        "dataset.kind=idx needs dataset.images and dataset.labels",
                    ))
                }
            }
        }
        other => return Err(Error::config(format!("unknown dataset.kind {other:?}"))),
    };
    let label_noise = keys.nonneg("dataset.label_noise", 0.0)?;
    if label_noise > 1.0 {
        return Err(Error::config(format!(
            "dataset.label_noise must lie in [0, 1], got {label_noise}"
        )));
    }
    let test_fraction = keys.positive("dataset.test_fraction", 0.2)?;
    if test_fraction >= 1.0 {
        return Err(Error::config("dataset.test_fraction must be below 1"));
    }
    let validation = keys.typed("dataset.validation", ValidationMode::SampleFromTrain)?;
    let val_fraction = match validation {
        ValidationMode::HeldOut => {
            let f = keys.positive("dataset.val_fraction", 0.1)?;
            if f >= 1.0 {
                return Err(Error::config("dataset.val_fraction must be below 1"));
            }
            f
        }
        ValidationMode::SampleFromTrain => 0.0,
    };
    Ok(DatasetSpec {
        kind,
        label_noise,
        test_fraction,
        validation,
        val_fraction,
        seed: keys.parse("dataset.seed")?,
    })
}

fn parse_model(keys: &mut Keys) -> Result<ModelSpec> {
    let kind = keys.take("model.kind").unwrap_or_else(|| "mlp".into());
    Ok(match kind.as_str() {
        "mlp" => ModelSpec::Mlp {
            hidden: keys.list("model.hidden")?.unwrap_or_else(|| vec![16]),
            activation: keys.typed("model.activation", Activation::Tanh)?,
            loss: loss_key(keys)?,
        },
        "logreg" => ModelSpec::LogReg {
            loss: loss_key(keys)?,
        },
        "conv1d" => ModelSpec::Conv1d {
            filters: keys.count("model.filters", 4)?,
            width: keys.count("model.width", 3)?,
            loss: loss_key(keys)?,
        },
        "quadratic" => ModelSpec::Quadratic {
            curvature: keys.positive("model.curvature", 1.0)?,
        },
        other => return Err(Error::config(format!("unknown model.kind {other:?}"))),
    })
}

fn parse_lr_schedule(keys: &mut Keys) -> Result<LrSchedule> {
    let kind = keys
        .take("optimizer.lr_schedule")
        .unwrap_or_else(|| "constant".into());
    Ok(match kind.as_str() {
        "constant" => LrSchedule::Constant,
        "cosine" => LrSchedule::Cosine,
        "exponential" => LrSchedule::Exponential {
            gamma: keys.positive("optimizer.lr_gamma", 0.999)?,
        },
        "warmup-linear" => LrSchedule::WarmupLinear {
            warmup: keys.count("optimizer.warmup", 1)?,
        },
        other => {
            return Err(Error::config(format!(
                "unknown optimizer.lr_schedule {other:?}"
            )))
        }
    })
}

fn parse_optimizer(keys: &mut Keys) -> Result<OptimizerSpec> {
    let variant = keys.typed("optimizer.variant", Variant::LetsSam)?;
    let rho = match variant {
        Variant::Erm => 0.0,
        Variant::Sam | Variant::Asam => keys.nonneg("optimizer.rho", 0.05)?,
        Variant::LetsSam | Variant::LetsAsam => keys.positive("optimizer.rho", 0.05)?,
    };
    let xi = if variant.is_asam() {
        keys.positive("optimizer.xi", 0.01)?
    } else {
        0.01
    };
    let momentum = keys.nonneg("optimizer.momentum", 0.0)?;
    if momentum >= 1.0 {
        return Err(Error::config(format!(
            "optimizer.momentum must be below 1, got {momentum}"
        )));
    }
    Ok(OptimizerSpec {
        variant,
        lr: keys.positive("optimizer.lr", 0.1)?,
        lr_schedule: parse_lr_schedule(keys)?,
        momentum,
        weight_decay: keys.nonneg("optimizer.weight_decay", 0.0)?,
        rho,
        xi,
    })
}

fn parse_lets(keys: &mut Keys) -> Result<LetsSpec> {
    let d = LetsSpec::default();
    let radius_schedule = match keys.take("lets.radius_schedule").as_deref() {
        None | Some("exponential") => RadiusScheduleKind::Exponential,
        Some("constant") => RadiusScheduleKind::Constant,
        Some("cosine") => RadiusScheduleKind::Cosine,
        Some(other) => {
            return Err(Error::config(format!(
                "unknown lets.radius_schedule {other:?}"
            )))
        }
    };
    let radius_gamma = match radius_schedule {
        RadiusScheduleKind::Exponential => keys.positive("lets.radius_gamma", d.radius_gamma)?,
        _ => d.radius_gamma,
    };
    if radius_gamma > 1.0 {
        return Err(Error::config(format!(
            "lets.radius_gamma must lie in (0, 1], got {radius_gamma}"
        )));
    }
    let hessian = match keys.take("lets.hessian") {
        None => d.hessian,
        Some(s) => {
            let mode: HessianMode = s
                .parse()
                .map_err(|e: Error| Error::config(format!("lets.hessian: {}", strip_prefix(&e))))?;
            match mode {
                HessianMode::ExactFdHvp { .. } => HessianMode::ExactFdHvp {
                    h: keys.positive("lets.hvp_step", crate::model::DEFAULT_FD_STEP)?,
                },
                m => m,
            }
        }
    };
    let rho_max: Option<f64> = keys.parse("lets.rho_max")?;
    if let Some(m) = rho_max {
        if !(m > 0.0) {
            return Err(Error::config(format!(
                "lets.rho_max must be positive, got {m}"
            )));
        }
    }
    Ok(LetsSpec {
        beta: keys.nonneg("lets.beta", d.beta)?,
        radius_optimizer: keys.typed("lets.radius_optimizer", d.radius_optimizer)?,
        radius_schedule,
        radius_gamma,
        metric: keys.typed("lets.metric", d.metric)?,
        hessian,
        direction: keys.typed("lets.direction", d.direction)?,
        parameterization: keys.typed("lets.parameterization", d.parameterization)?,
        rho_max,
    })
}

fn parse_train(keys: &mut Keys) -> Result<TrainSpec> {
    let seed = keys.get("train.seed", 0u64)?;
    let steps = match keys.parse::<usize>("train.steps")? {
        Some(0) => return Err(Error::config("train.steps must be at least 1")),
        s => s,
    };
    Ok(TrainSpec {
        epochs: keys.count("train.epochs", 10)?,
        steps,
        batch_size: keys.count("train.batch_size", 32)?,
        val_batch_size: keys.parse("train.val_batch_size")?,
        seed,
        fallback: keys.typed("train.fallback", Fallback::SkipPerturbation)?,
        seeds: keys.list("train.seeds")?.unwrap_or_else(|| vec![seed]),
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!(
                    "line {}: expected key=value, got {line:?}",
                    lineno + 1
                ))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if map.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::config(format!("duplicate key {key}")));
            }
        }
        Self::from_map(map)
    }

    pub fn from_map(raw: BTreeMap<String, String>) -> Result<Self> {
        let mut keys = Keys { map: raw.clone() };
        let dataset = parse_dataset(&mut keys)?;
        let model = parse_model(&mut keys)?;
        let optimizer = parse_optimizer(&mut keys)?;
        let lets = if optimizer.variant.is_lets() {
            Some(parse_lets(&mut keys)?)
        } else {
            if let Some(k) = keys.map.keys().find(|k| k.starts_with("lets.")) {
                return Err(Error::config(format!(
                    "{k} is not valid for fixed-radius variant {}",
                    optimizer.variant
                )));
            }
            None
        };
        let train = parse_train(&mut keys)?;
        let output_dir = keys.take("output.dir").map(PathBuf::from);
        if let Some(k) = keys.map.keys().next() {
            return Err(Error::config(format!("unknown config key {k}")));
        }
        Ok(ExperimentConfig {
            dataset,
            model,
            optimizer,
            lets,
            train,
            output_dir,
            raw,
        })
    }

    /// The configuration with `key` set to `value`, re-validated.
    pub fn with(&self, key: &str, value: impl Into<String>) -> Result<Self> {
        let mut raw = self.raw.clone();
        raw.insert(key.to_string(), value.into());
        Self::from_map(raw)
    }

    /// The configuration without `key`, re-validated.
    pub fn without(&self, key: &str) -> Result<Self> {
        let mut raw = self.raw.clone();
        raw.remove(key);
        Self::from_map(raw)
    }

    pub fn raw(&self) -> &BTreeMap<String, String> {
        &self.raw
    }

    /// Canonical text form, sorted by key.
    pub fn to_text(&self) -> String {
        self.raw.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn data_seed(&self) -> u64 {
        self.dataset.seed.unwrap_or(self.train.seed)
    }

    pub fn sharpness_variant(&self) -> SharpnessVariant {
        if self.optimizer.variant.is_asam() {
            SharpnessVariant::Asam(Normalization::Adaptive {
                xi: self.optimizer.xi,
            })
        } else {
            SharpnessVariant::Sam
        }
    }

    pub fn sgd_config(&self, total_steps: usize) -> Result<SgdConfig> {
        let o = &self.optimizer;
        let kind = match o.lr_schedule {
            LrSchedule::Constant => ScheduleKind::Constant,
            LrSchedule::Cosine => ScheduleKind::Cosine,
            LrSchedule::Exponential { gamma } => ScheduleKind::Exponential { gamma },
            LrSchedule::WarmupLinear { warmup } => ScheduleKind::WarmupLinear { warmup },
        };
        SgdConfig::new(
            Schedule::new(kind, o.lr, total_steps)?,
            o.momentum,
            o.weight_decay,
        )
    }

    /// Radius optimizer settings; `epochs` is the schedule horizon.
    pub fn radius_config(&self, epochs: usize) -> Option<Result<RadiusConfig>> {
        let l = self.lets.as_ref()?;
        let kind = match l.radius_schedule {
            RadiusScheduleKind::Constant => ScheduleKind::Constant,
            RadiusScheduleKind::Exponential => ScheduleKind::Exponential {
                gamma: l.radius_gamma,
            },
            RadiusScheduleKind::Cosine => ScheduleKind::Cosine,
        };
        Some(
            Schedule::new(kind, l.beta, epochs).map(|schedule| RadiusConfig {
                parameterization: l.parameterization,
                optimizer: l.radius_optimizer,
                schedule,
                rho_max: l.rho_max,
            }),
        )
    }

    pub fn lets_config(&self) -> Option<LetsConfig> {
        self.lets.as_ref().map(|l| LetsConfig {
            variant: self.sharpness_variant(),
            metric: l.metric,
            hessian: l.hessian,
            direction: l.direction,
        })
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentConfig::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_recipe() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c.optimizer.variant, Variant::LetsSam);
        let l = c.lets.unwrap();
        assert_eq!(l.beta, 1e-4);
        assert_eq!(l.radius_optimizer, RadiusOptimizer::Adam);
        assert_eq!(l.radius_schedule, RadiusScheduleKind::Exponential);
        assert_eq!(l.parameterization, Parameterization::Exp);
        assert_eq!(l.metric, MetricKind::SquaredGap);
        assert_eq!(c.optimizer.xi, 0.01);
    }

    #[test]
    fn order_and_comments_do_not_matter() {
        let a = ExperimentConfig::parse("optimizer.variant=sam\noptimizer.rho=0.1\ntrain.seed=3")
            .unwrap();
        let b = ExperimentConfig::parse(
            "# comment\ntrain.seed = 3\n\noptimizer.rho=0.1\noptimizer.variant=sam\n",
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_key_is_named() {
        match ExperimentConfig::parse("optimizer.lrr=0.1") {
            Err(Error::Config(m)) => assert!(m.contains("optimizer.lrr")),
            other => panic!("{other:?}"),
        }
        match ExperimentConfig::parse("model.kind=logreg\nmodel.hidden=8") {
            Err(Error::Config(m)) => assert!(m.contains("model.hidden")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fixed_radius_variants_reject_lets_keys() {
        for v in ["erm", "sam", "asam"] {
            let text = format!("optimizer.variant={v}\nlets.beta=0.1");
            match ExperimentConfig::parse(&text) {
                Err(Error::Config(m)) => assert!(m.contains("lets.beta")),
                other => panic!("{other:?}"),
            }
        }
        assert!(ExperimentConfig::parse("optimizer.variant=sam\nlets.metric=gap").is_err());
        assert!(ExperimentConfig::parse("optimizer.variant=lets-asam\nlets.metric=gap").is_ok());
    }

    #[test]
    fn rates_must_be_positive() {
        assert!(ExperimentConfig::parse("optimizer.lr=0").is_err());
        assert!(ExperimentConfig::parse("optimizer.lr=-1").is_err());
        assert!(ExperimentConfig::parse("optimizer.rho=0").is_err());
        assert!(ExperimentConfig::parse("optimizer.variant=sam\noptimizer.rho=0").is_ok());
        assert!(ExperimentConfig::parse("lets.beta=-1").is_err());
        assert!(ExperimentConfig::parse("train.batch_size=0").is_err());
        assert!(ExperimentConfig::parse("lets.radius_gamma=1.5").is_err());
    }

    #[test]
    fn malformed_lines() {
        assert!(ExperimentConfig::parse("optimizer.lr").is_err());
        assert!(ExperimentConfig::parse("optimizer.lr=0.1\noptimizer.lr=0.2").is_err());
        assert!(ExperimentConfig::parse("optimizer.lr=fast").is_err());
        assert!(ExperimentConfig::parse("optimizer.variant=adamw").is_err());
    }

    #[test]
    fn overrides_revalidate() {
        let c = ExperimentConfig::parse("optimizer.variant=lets-sam\nlets.metric=gap").unwrap();
        let d = c.with("lets.metric", "val-loss").unwrap();
        assert_eq!(d.lets.unwrap().metric, MetricKind::ValLoss);
        assert!(c.with("optimizer.variant", "sam").is_err());
        let e = c
            .without("lets.metric")
            .unwrap()
            .with("optimizer.variant", "sam")
            .unwrap();
        assert!(e.lets.is_none());
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn exact_hessian_mode() {
        let c = ExperimentConfig::parse("lets.hessian=exact\nlets.hvp_step=1e-4").unwrap();
        assert_eq!(c.lets.unwrap().hessian, HessianMode::ExactFdHvp { h: 1e-4 });
        assert!(ExperimentConfig::parse("lets.hvp_step=1e-4").is_err());
    }
}
