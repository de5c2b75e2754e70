//! Private optimizers behind a common [`Optimizer`] trait.
//!
//! Each algorithm is also exposed as a free function taking an explicit
//! schedule, which is what the tests exercise. The trait objects resolve a
//! schedule from an [`OptimConfig`] and the objective's declared constants,
//! then delegate to those functions. [`Registry`] maps names to
//! implementations so the harness and CLI can select one at runtime.

mod adaptive;
mod config;
mod prox;
mod report;
mod sc_gd;
mod schedule;
mod select;
mod spider;

pub use adaptive::{adaptive_noisy_gd, AdaptiveParams, AdaptiveStep, AdaptiveTrace};
pub use config::OptimConfig;
pub use prox::{prox_point, ProxTrace};
pub use report::{AlgoDetails, Recorder, RunReport, StopReason};
pub use sc_gd::{sc_noisy_gd, sc_noisy_gd_average, ScTrace};
pub use schedule::{
    prox_schedule, sc_schedule, spider_schedule, ProxSchedule, ScSchedule, SpiderRound,
    SpiderSchedule, SpiderScheduleInput,
};
pub use select::{select_stationary, selection_probabilities};
pub use spider::{kl_spider, RoundExit, SpiderPoint, SpiderRoundTrace, SpiderTrace};

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::loss::{EmpiricalObjective, LossError};
use crate::privacy::{NoiseSource, PrivacyError};

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown optimizer `{0}`")]
    UnknownAlgo(String),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    Loss(#[from] LossError),
}

impl OptimError {
    pub fn config(msg: impl Into<String>) -> Self {
        OptimError::Config(msg.into())
    }
}

/// Wall-clock limit checked between iterations.
#[derive(Debug, Clone, Copy, Default)]
pub struct Deadline(Option<Instant>);

impl Deadline {
    pub fn none() -> Self {
        Deadline(None)
    }

    pub fn after(limit: Duration) -> Self {
        Deadline(Instant::now().checked_add(limit))
    }

    pub fn at(instant: Instant) -> Self {
        Deadline(Some(instant))
    }

    pub fn expired(&self) -> bool {
        self.0.is_some_and(|t| Instant::now() >= t)
    }
}

/// Per-run switches that do not affect the algorithm itself.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub record_iterates: bool,
    pub timing: bool,
    pub deadline: Deadline,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            record_iterates: true,
            timing: false,
            deadline: Deadline::none(),
        }
    }
}

pub trait Optimizer: Send + Sync {
    fn name(&self) -> &'static str;

    fn run(
        &self,
        obj: &EmpiricalObjective,
        cfg: &OptimConfig,
        noise: &mut NoiseSource,
        deadline: Deadline,
    ) -> Result<RunReport, OptimError>;
}

/// Runs `opt` with every noise draw zeroed. Control flow, schedules and
/// ledger charges are those of a noisy run with the same seed.
pub fn run_noiseless(
    opt: &dyn Optimizer,
    obj: &EmpiricalObjective,
    cfg: &OptimConfig,
) -> Result<RunReport, OptimError> {
    let mut noise = NoiseSource::new(cfg.seed, true);
    opt.run(obj, cfg, &mut noise, Deadline::none())
}

fn options(cfg: &OptimConfig, deadline: Deadline) -> RunOptions {
    RunOptions {
        record_iterates: cfg.record_iterates,
        timing: cfg.timing,
        deadline,
    }
}

pub struct KlSpider;

impl Optimizer for KlSpider {
    fn name(&self) -> &'static str {
        "kl_spider"
    }

    fn run(
        &self,
        obj: &EmpiricalObjective,
        cfg: &OptimConfig,
        noise: &mut NoiseSource,
        deadline: Deadline,
    ) -> Result<RunReport, OptimError> {
        let w0 = cfg.start(obj)?;
        let input = cfg.spider_input(obj, &w0)?;
        let sched = spider_schedule(&input)?;
        kl_spider(obj, &sched, cfg.privacy()?, &w0, noise, options(cfg, deadline))
    }
}

pub struct AdaptiveNoisyGd;

impl Optimizer for AdaptiveNoisyGd {
    fn name(&self) -> &'static str {
        "adaptive_noisy_gd"
    }

    fn run(
        &self,
        obj: &EmpiricalObjective,
        cfg: &OptimConfig,
        noise: &mut NoiseSource,
        deadline: Deadline,
    ) -> Result<RunReport, OptimError> {
        let w0 = cfg.start(obj)?;
        let params = AdaptiveParams {
            l0: cfg.lipschitz(obj)?,
            l1: cfg.smoothness(obj)?,
        };
        adaptive_noisy_gd(obj, params, cfg.privacy()?, &w0, noise, options(cfg, deadline))
    }
}

pub struct ProxPoint;

impl Optimizer for ProxPoint {
    fn name(&self) -> &'static str {
        "prox_point"
    }

    fn run(
        &self,
        obj: &EmpiricalObjective,
        cfg: &OptimConfig,
        noise: &mut NoiseSource,
        deadline: Deadline,
    ) -> Result<RunReport, OptimError> {
        let w0 = cfg.start(obj)?;
        let sched = cfg.prox_schedule(obj, &w0)?;
        prox_point(
            obj,
            &sched,
            cfg.privacy()?,
            &w0,
            cfg.max_sc_iters,
            noise,
            options(cfg, deadline),
        )
    }
}

pub struct ScNoisyGd;

impl Optimizer for ScNoisyGd {
    fn name(&self) -> &'static str {
        "sc_noisy_gd"
    }

    fn run(
        &self,
        obj: &EmpiricalObjective,
        cfg: &OptimConfig,
        noise: &mut NoiseSource,
        deadline: Deadline,
    ) -> Result<RunReport, OptimError> {
        let w0 = cfg.start(obj)?;
        let privacy = cfg.privacy()?;
        let sched = sc_schedule(
            obj.n(),
            obj.dim(),
            privacy.rho,
            privacy.beta,
            cfg.lipschitz(obj)?,
            cfg.weak_convexity(obj)?,
            cfg.max_sc_iters,
        )?;
        sc_noisy_gd(obj, &sched, privacy, &w0, noise, options(cfg, deadline))
    }
}

/// Name → optimizer table.
pub struct Registry {
    entries: BTreeMap<&'static str, Box<dyn Optimizer>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(KlSpider));
        r.register(Box::new(AdaptiveNoisyGd));
        r.register(Box::new(ProxPoint));
        r.register(Box::new(ScNoisyGd));
        r
    }

    /// Adds `opt`, replacing any previous entry with the same name.
    pub fn register(&mut self, opt: Box<dyn Optimizer>) {
        self.entries.insert(opt.name(), opt);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Optimizer, OptimError> {
        self.entries
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| OptimError::UnknownAlgo(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}
