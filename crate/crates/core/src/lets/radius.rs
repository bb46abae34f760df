use std::str::FromStr;

use crate::error::{Error, Result};
use crate::optim::{Schedule, ScheduleKind};

/// Lower clamp for the radius in direct parameterization.
pub const RHO_MIN: f64 = 1e-8;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parameterization {
    /// The optimizer works on `nu` with `rho = exp(nu)`.
    #[default]
    Exp,
    /// The optimizer works on `rho` itself, clamped to `[RHO_MIN, inf)`.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadiusOptimizer {
    /// `x <- x - beta_t * eta * g`
    Plain,
    /// Bias-corrected Adam on `eta * g` with step size `beta_t`.
    #[default]
    Adam,
}

impl FromStr for Parameterization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" => Ok(Parameterization::Exp),
            "direct" => Ok(Parameterization::Direct),
            other => Err(Error::config(format!("unknown parameterization {other:?}"))),
        }
    }
}

impl FromStr for RadiusOptimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(RadiusOptimizer::Plain),
            "adam" => Ok(RadiusOptimizer::Adam),
            other => Err(Error::config(format!("unknown radius optimizer {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusConfig {
    pub parameterization: Parameterization,
    pub optimizer: RadiusOptimizer,
    /// Upper-level step size `beta` and its schedule; the position advances
    /// through [`RadiusState::advance_schedule`].
    pub schedule: Schedule,
    pub rho_max: Option<f64>,
}

impl Default for RadiusConfig {
    fn default() -> Self {
        RadiusConfig {
            parameterization: Parameterization::Exp,
            optimizer: RadiusOptimizer::Adam,
            schedule: Schedule {
                kind: ScheduleKind::Exponential { gamma: 0.999 },
                base: 1e-4,
                horizon: usize::MAX,
            },
            rho_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdamMoments {
    pub first: f64,
    pub second: f64,
    pub steps: u64,
}

/// The learnable perturbation radius.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusState {
    /// `nu` under exp parameterization, `rho` under direct.
    param: f64,
    rho: f64,
    config: RadiusConfig,
    adam: AdamMoments,
    position: usize,
}

impl RadiusState {
    pub fn new(rho0: f64, config: RadiusConfig) -> Result<Self> {
        if !(rho0 > 0.0) || !rho0.is_finite() {
            return Err(Error::config(format!(
                "initial radius must be positive, got {rho0}"
            )));
        }
        if let Some(max) = config.rho_max {
            if !(max > 0.0) {
                return Err(Error::config(format!(
                    "rho_max must be positive, got {max}"
                )));
            }
        }
        if !(config.schedule.base >= 0.0) {
            return Err(Error::config("radius step size must be >= 0"));
        }
        let rho = match config.rho_max {
            Some(max) => rho0.min(max),
            None => rho0,
        };
        let (param, rho) = match config.parameterization {
            Parameterization::Exp => (rho.ln(), rho),
            Parameterization::Direct => (rho.max(RHO_MIN), rho.max(RHO_MIN)),
        };
        Ok(RadiusState {
            param,
            rho,
            config,
            adam: AdamMoments::default(),
            position: 0,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// The unconstrained optimizer variable (`nu` or `rho`).
    pub fn param(&self) -> f64 {
        self.param
    }

    pub fn config(&self) -> &RadiusConfig {
        &self.config
    }

    pub fn adam(&self) -> &AdamMoments {
        &self.adam
    }

    /// Current upper-level step size `beta_t`.
    pub fn beta(&self) -> f64 {
        self.config.schedule.rate(self.position)
    }

    pub fn schedule_position(&self) -> usize {
        self.position
    }

    pub fn advance_schedule(&mut self) {
        self.position += 1;
    }
}

/// One upper-level step given `g_rho` and the lower-level rate `eta`.
///
/// Under exp parameterization the gradient is carried to `nu` by
/// `g_nu = g_rho * rho`. On a non-finite result the state is left untouched.
pub fn update_radius(state: &mut RadiusState, g_rho: f64, eta: f64) -> Result<()> {
    if !g_rho.is_finite() {
        return Err(Error::NonFinite("radius hypergradient".into()));
    }
    let g_param = match state.config.parameterization {
        Parameterization::Exp => g_rho * state.rho,
        Parameterization::Direct => g_rho,
    };
    let beta = state.beta();
    let mut adam = state.adam;
    let param = match state.config.optimizer {
        RadiusOptimizer::Plain => state.param - beta * eta * g_param,
        RadiusOptimizer::Adam => {
            let g = eta * g_param;
            adam.steps += 1;
            adam.first = ADAM_BETA1 * adam.first + (1.0 - ADAM_BETA1) * g;
            adam.second = ADAM_BETA2 * adam.second + (1.0 - ADAM_BETA2) * g * g;
            let t = adam.steps as i32;
            let m_hat = adam.first / (1.0 - ADAM_BETA1.powi(t));
            let v_hat = adam.second / (1.0 - ADAM_BETA2.powi(t));
            state.param - beta * m_hat / (v_hat.sqrt() + ADAM_EPS)
        }
    };
    let (param, rho) = match state.config.parameterization {
        // rho is cached from nu; an unchanged nu keeps the exact initial rho
        Parameterization::Exp if param == state.param => (param, state.rho),
        Parameterization::Exp => {
            let rho = param.exp();
            match state.config.rho_max {
                Some(max) if rho > max => (max.ln(), max),
                _ => (param, rho),
            }
        }
        Parameterization::Direct => {
            let mut rho = param.max(RHO_MIN);
            if let Some(max) = state.config.rho_max {
                rho = rho.min(max);
            }
            (rho, rho)
        }
    };
    if !(param.is_finite() && rho.is_finite() && rho > 0.0)
        || !(adam.first.is_finite() && adam.second.is_finite())
    {
        return Err(Error::NonFinite("radius update".into()));
    }
    state.param = param;
    state.rho = rho;
    state.adam = adam;
    Ok(())
}
