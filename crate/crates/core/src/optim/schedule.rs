//! Parameter schedules, computed once before a run and frozen into its report.

use serde::{Deserialize, Serialize};

use super::OptimError;

/// Upper limit on the total number of inner Spider steps a schedule may plan.
pub const MAX_SPIDER_STEPS: u64 = 100_000_000;

/// Both Spider noise families are scaled by this factor so the fresh-gradient
/// and difference releases each cost at most `ρ/2`.
pub const SPIDER_NOISE_MULTIPLIER: f64 = std::f64::consts::SQRT_2;

/// `⌈x⌉`, except that values within `1e-9` (relative) of an integer are
/// rounded to it, so that `ln`/`exp` round-off cannot add a whole iteration.
pub(crate) fn ceil_count(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), OptimError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(OptimError::config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_common(n: usize, d: usize, rho: f64, beta: f64) -> Result<(), OptimError> {
    if n == 0 || d == 0 {
        return Err(OptimError::config(format!("n and d must be at least 1, got {n}, {d}")));
    }
    check_positive("rho", rho)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(OptimError::config(format!("beta must lie in (0,1), got {beta}")));
    }
    Ok(())
}

/// `ln F₀ + κ ln(n√ρ/(γL₀√d))`; non-positive values mean the guarantee is
/// vacuous and are rejected.
fn log_bracket(
    n: usize,
    d: usize,
    rho: f64,
    f0: f64,
    gamma: f64,
    kappa: f64,
    l0: f64,
) -> Result<f64, OptimError> {
    let ratio = n as f64 * rho.sqrt() / (gamma * l0 * (d as f64).sqrt());
    let bracket = f0.ln() + kappa * ratio.ln();
    if !(bracket > 0.0) {
        return Err(OptimError::config(format!(
            "log term ln(F0) + kappa*ln(n*sqrt(rho)/(gamma*L0*sqrt(d))) = {:.6} + {:.6}*{:.6} = {:.6} is not positive; \
             increase n or rho, or lower d",
            f0.ln(),
            kappa,
            ratio.ln(),
            bracket
        )));
    }
    Ok(bracket)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiderScheduleInput {
    pub n: usize,
    pub d: usize,
    pub rho: f64,
    pub beta: f64,
    pub f0: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub l0: f64,
    pub l1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiderRound {
    pub phi: f64,
    pub t_k: u64,
    /// Nominal difference-noise scale (before [`SPIDER_NOISE_MULTIPLIER`]).
    pub sigma_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiderSchedule {
    pub input: SpiderScheduleInput,
    pub c: f64,
    pub k: usize,
    pub log_bracket: f64,
    pub beta_prime: f64,
    /// Nominal fresh-gradient noise scale (before the multiplier).
    pub sigma_hat: f64,
    pub phi_floor: f64,
    pub noise_multiplier: f64,
    pub rounds: Vec<SpiderRound>,
}

impl SpiderSchedule {
    pub fn sigma_hat_applied(&self) -> f64 {
        self.noise_multiplier * self.sigma_hat
    }

    pub fn sigma_applied(&self, round: usize) -> f64 {
        self.noise_multiplier * self.rounds[round].sigma_k
    }

    /// Ledger charge per fresh gradient: `ρ/(2K)`.
    pub fn fresh_charge(&self) -> f64 {
        self.input.rho / (2.0 * self.k as f64)
    }

    /// Ledger charge per privatized difference in `round`: `ρ/(2K·T_k)`.
    pub fn diff_charge(&self, round: usize) -> f64 {
        self.input.rho / (2.0 * self.k as f64 * self.rounds[round].t_k as f64)
    }

    /// Total charge when every round runs its full length, summed in the
    /// order a run would charge it.
    pub fn planned_total(&self) -> f64 {
        let mut total = 0.0;
        for (i, r) in self.rounds.iter().enumerate() {
            total += self.fresh_charge();
            for _ in 0..r.t_k {
                total += self.diff_charge(i);
            }
        }
        total
    }

    pub fn total_steps(&self) -> u64 {
        self.rounds.iter().map(|r| r.t_k).sum()
    }

    /// Distance bound `K·F₀^{1/κ}/(4γL₁)` on `‖w_{k,t} − w₀‖`.
    pub fn trajectory_bound(&self) -> f64 {
        let p = &self.input;
        self.k as f64 * p.f0.powf(1.0 / p.kappa) / (4.0 * p.gamma * p.l1)
    }

    /// Sum of the per-step displacements the schedule permits:
    /// `Σ_k T_k·Φ̂_k^{1/κ}/(4γL₁)`. Never smaller than the realised path
    /// length.
    pub fn path_length_bound(&self) -> f64 {
        let p = &self.input;
        self.rounds
            .iter()
            .map(|r| r.t_k as f64 * r.phi.powf(1.0 / p.kappa))
            .sum::<f64>()
            / (4.0 * p.gamma * p.l1)
    }

    /// Radius in the form `F₀^{1/κ}/(γL₁) + F₀^{(κ−1)/κ}γ`, without the
    /// logarithmic factors. Reported for comparison only.
    pub fn headline_radius(&self) -> f64 {
        let p = &self.input;
        p.f0.powf(1.0 / p.kappa) / (p.gamma * p.l1) + p.f0.powf((p.kappa - 1.0) / p.kappa) * p.gamma
    }
}

pub fn spider_schedule(input: &SpiderScheduleInput) -> Result<SpiderSchedule, OptimError> {
    let p = *input;
    check_common(p.n, p.d, p.rho, p.beta)?;
    for (name, v) in [
        ("F0", p.f0),
        ("gamma", p.gamma),
        ("L0", p.l0),
        ("L1", p.l1),
    ] {
        check_positive(name, v)?;
    }
    if !(1.0..=2.0).contains(&p.kappa) {
        return Err(OptimError::config(format!(
            "kappa must lie in [1,2] for kl_spider, got {}",
            p.kappa
        )));
    }
    let f0_cap = (p.l0 * p.gamma).powf(p.kappa);
    if p.f0 > f0_cap * (1.0 + 1e-12) {
        return Err(OptimError::config(format!(
            "F0 = {} exceeds (L0*gamma)^kappa = {f0_cap}",
            p.f0
        )));
    }
    let e = (2.0 - p.kappa) / p.kappa;
    let nf = p.n as f64;
    let df = p.d as f64;
    let nsr = nf * p.rho.sqrt();
    let c = 1.0 + p.f0.powf(e) / (64.0 * p.gamma * p.gamma * p.l1);
    let bracket = log_bracket(p.n, p.d, p.rho, p.f0, p.gamma, p.kappa, p.l0)?;
    let mult = 1.0 + 64.0 * p.f0.powf(-e) * p.gamma * p.gamma * p.l1;
    let k = ceil_count(mult * bracket).max(1.0);
    if k > MAX_SPIDER_STEPS as f64 {
        return Err(OptimError::config(format!("schedule asks for K = {k} rounds")));
    }
    let kf = k;
    let beta_prime = (p.beta / kf)
        * (p.gamma * p.l0 * (kf * df).sqrt() / (nsr * p.f0.powf(1.0 / p.kappa))).powf(2.0 - p.kappa);
    let sigma_hat = p.l0 * kf.sqrt() / nsr;
    let floor_base = 32.0 * p.gamma * p.l0 * (kf * df * (1.0 / beta_prime).ln()).sqrt() / nsr;
    let phi_floor = floor_base.powf(p.kappa).min(p.f0);

    let mut rounds = Vec::with_capacity(k as usize);
    let mut phi_prev = p.f0;
    let mut steps = 0u64;
    for _ in 0..k as usize {
        let phi = (phi_prev / c).max(phi_floor);
        let t_k = ceil_count((p.f0 / phi).powf(e)).max(1.0);
        steps = steps.saturating_add(t_k as u64);
        if steps > MAX_SPIDER_STEPS {
            return Err(OptimError::config(format!(
                "schedule plans more than {MAX_SPIDER_STEPS} inner steps"
            )));
        }
        let sigma_k = phi.powf(1.0 / p.kappa) * (t_k * kf).sqrt() / (p.gamma * nsr);
        rounds.push(SpiderRound {
            phi,
            t_k: t_k as u64,
            sigma_k,
        });
        phi_prev = phi;
    }
    Ok(SpiderSchedule {
        input: p,
        c,
        k: k as usize,
        log_bracket: bracket,
        beta_prime,
        sigma_hat,
        phi_floor,
        noise_multiplier: SPIDER_NOISE_MULTIPLIER,
        rounds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScSchedule {
    pub n: usize,
    pub d: usize,
    pub rho: f64,
    pub beta: f64,
    pub l0: f64,
    pub ltilde1: f64,
    pub t: u64,
    pub sigma: f64,
    pub radius: f64,
}

/// `T = ⌈n²ρ ln²(2/β)/d⌉`, `σ² = 4L₀²T/(n²ρ)`, projection radius `L₀/(2L̃₁)`.
pub fn sc_schedule(
    n: usize,
    d: usize,
    rho: f64,
    beta: f64,
    l0: f64,
    ltilde1: f64,
    max_iters: u64,
) -> Result<ScSchedule, OptimError> {
    check_common(n, d, rho, beta)?;
    check_positive("L0", l0)?;
    check_positive("Ltilde1", ltilde1)?;
    let nf = n as f64;
    let lg = (2.0 / beta).ln();
    let t = ceil_count(nf * nf * rho * lg * lg / d as f64).max(1.0);
    if t > max_iters as f64 {
        return Err(OptimError::config(format!(
            "noisy GD needs T = {t} iterations, above the cap of {max_iters}"
        )));
    }
    let sigma = (4.0 * l0 * l0 * t / (nf * nf * rho)).sqrt();
    Ok(ScSchedule {
        n,
        d,
        rho,
        beta,
        l0,
        ltilde1,
        t: t as u64,
        sigma,
        radius: l0 / (2.0 * ltilde1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxSchedule {
    pub rounds: usize,
    pub log_bracket: f64,
    pub beta_prime: f64,
    pub rho_round: f64,
    pub f0: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub l0: f64,
    pub ltilde1: f64,
    pub sub: ScSchedule,
}

/// `T = ⌈(1 + 32F₀^{(κ−2)/κ}γ²L̃₁)·bracket⌉`, `β′ = β/T`, `ρ/T` per round.
#[allow(clippy::too_many_arguments)]
pub fn prox_schedule(
    n: usize,
    d: usize,
    rho: f64,
    beta: f64,
    f0: f64,
    gamma: f64,
    kappa: f64,
    l0: f64,
    ltilde1: f64,
) -> Result<ProxSchedule, OptimError> {
    check_common(n, d, rho, beta)?;
    for (name, v) in [("F0", f0), ("gamma", gamma), ("L0", l0), ("Ltilde1", ltilde1)] {
        check_positive(name, v)?;
    }
    if !(kappa >= 2.0 && kappa.is_finite()) {
        return Err(OptimError::config(format!(
            "kappa must be at least 2 for prox_point, got {kappa}"
        )));
    }
    let bracket = log_bracket(n, d, rho, f0, gamma, kappa, l0)?;
    let mult = 1.0 + 32.0 * f0.powf((kappa - 2.0) / kappa) * gamma * gamma * ltilde1;
    let rounds = ceil_count(mult * bracket).max(1.0);
    if rounds > 1e7 {
        return Err(OptimError::config(format!("prox schedule asks for T = {rounds} rounds")));
    }
    let beta_prime = beta / rounds;
    let rho_round = rho / rounds;
    let sub = sc_schedule(n, d, rho_round, beta_prime, l0, ltilde1, u64::MAX)?;
    Ok(ProxSchedule {
        rounds: rounds as usize,
        log_bracket: bracket,
        beta_prime,
        rho_round,
        f0,
        gamma,
        kappa,
        l0,
        ltilde1,
        sub,
    })
}
