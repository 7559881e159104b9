//! Heat-bath annealing over a [`SearchSpace`].
//!
//! Each step proposes one move drawn uniformly from a fixed move set: `±1`
//! core in 1-D spaces, `±1` core or `±1` family ordinal in 2-D spaces. A move
//! that leaves the space becomes a self-loop, so every state has the same
//! proposal denominator and the fixed-temperature chain is reversible with
//! respect to `exp(-Y/τ)`.

use std::collections::VecDeque;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::catalog::{Configuration, SearchSpace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Move {
    CoresDown,
    CoresUp,
    FamilyDown,
    FamilyUp,
}

const MOVES_1D: [Move; 2] = [Move::CoresDown, Move::CoresUp];
const MOVES_2D: [Move; 4] = [Move::CoresDown, Move::CoresUp, Move::FamilyDown, Move::FamilyUp];

/// The move set of `space`; its length is the constant proposal denominator.
pub fn move_set(space: &SearchSpace) -> &'static [Move] {
    if space.is_one_dimensional() {
        &MOVES_1D
    } else {
        &MOVES_2D
    }
}

/// Target of `mv` from `x`, or `None` when it leaves the space.
pub fn apply_move(x: Configuration, mv: Move, space: &SearchSpace) -> Option<Configuration> {
    let target = match mv {
        Move::CoresDown => Configuration::new(x.family, x.cores.checked_sub(1)?),
        Move::CoresUp => Configuration::new(x.family, x.cores.checked_add(1)?),
        Move::FamilyDown => Configuration::new(x.family.checked_sub(1)?, x.cores),
        Move::FamilyUp => Configuration::new(x.family.checked_add(1)?, x.cores),
    };
    space.contains(target).then_some(target)
}

/// Genuine neighbors of `x` (never `x` itself), in move-set order.
pub fn neighbors(x: Configuration, space: &SearchSpace) -> Result<Vec<Configuration>> {
    if !space.contains(x) {
        return Err(Error::domain("config", format!("{x} is outside the search space")));
    }
    Ok(move_set(space)
        .iter()
        .filter_map(|&mv| apply_move(x, mv, space))
        .collect())
}

/// A candidate configuration `z = x + e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Proposal {
    pub candidate: Configuration,
    pub step: Move,
    /// The drawn move left the space, so the candidate is the current configuration.
    pub self_loop: bool,
}

/// Draws one move uniformly from the move set. Consumes one `u32` draw.
pub fn propose(state: &AnnealerState, space: &SearchSpace, rng: &mut impl RngCore) -> Proposal {
    let moves = move_set(space);
    let step = moves[rng.random_range(0..moves.len() as u32) as usize];
    match apply_move(state.accepted_config, step, space) {
        Some(candidate) => Proposal {
            candidate,
            step,
            self_loop: false,
        },
        None => Proposal {
            candidate: state.accepted_config,
            step,
            self_loop: true,
        },
    }
}

/// Heat-bath acceptance probability `exp(-max(ΔY, 0) / τ)`.
pub fn acceptance_probability(delta_y: f64, tau: f64) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::domain("tau", format!("temperature must be finite and > 0, got {tau}")));
    }
    if delta_y.is_nan() {
        return Err(Error::domain("delta_y", "objective difference is NaN"));
    }
    Ok((-delta_y.max(0.0) / tau).exp())
}

/// Per-job objective `Y = t + λ c` (seconds plus weighted dollars).
pub fn objective(exec_time: f64, cost: f64, lambda: f64) -> Result<f64> {
    if !(exec_time.is_finite() && exec_time >= 0.0) {
        return Err(Error::domain("exec_time", format!("must be finite and >= 0, got {exec_time}")));
    }
    if !(cost.is_finite() && cost >= 0.0) {
        return Err(Error::domain("cost", format!("must be finite and >= 0, got {cost}")));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::domain("lambda", format!("must be finite and >= 0, got {lambda}")));
    }
    Ok(exec_time + lambda * cost)
}

/// How a candidate is accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptanceRule {
    #[default]
    HeatBath,
    /// Zero-temperature limit: accept iff the objective does not increase.
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    /// Accepted with `ΔY <= 0` (exploitation).
    Improve,
    /// Accepted with `ΔY > 0` (exploration).
    UphillAccepted,
    Rejected,
    /// The drawn move left the space; nothing to decide.
    SelfLoop,
}

impl MoveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MoveKind::Improve => "improve",
            MoveKind::UphillAccepted => "uphill_accepted",
            MoveKind::Rejected => "rejected",
            MoveKind::SelfLoop => "self_loop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealerState {
    /// Current accepted configuration.
    pub accepted_config: Configuration,
    /// Objective recorded when `accepted_config` was last accepted.
    pub accepted_objective: f64,
    pub temperature: f64,
    pub step_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub kind: MoveKind,
    pub delta: f64,
}

impl StepOutcome {
    pub fn accepted(&self) -> bool {
        matches!(self.kind, MoveKind::Improve | MoveKind::UphillAccepted)
    }
}

impl AnnealerState {
    pub fn new(config: Configuration, objective: f64, temperature: f64) -> Result<Self> {
        let mut s = Self {
            accepted_config: config,
            accepted_objective: objective,
            temperature: 1.0,
            step_count: 0,
        };
        s.set_temperature(temperature)?;
        Ok(s)
    }

    pub fn set_temperature(&mut self, tau: f64) -> Result<()> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::domain("tau", format!("temperature must be finite and > 0, got {tau}")));
        }
        self.temperature = tau;
        Ok(())
    }

    /// Accept or reject `proposal` whose measured objective is `y_candidate`.
    ///
    /// Self-loops leave the state untouched apart from `step_count` and draw
    /// nothing. Otherwise exactly one uniform `f64` is drawn and the candidate
    /// is accepted iff `u < acceptance_probability`.
    pub fn step(
        &mut self,
        proposal: &Proposal,
        y_candidate: f64,
        rule: AcceptanceRule,
        rng: &mut impl RngCore,
    ) -> Result<StepOutcome> {
        self.step_count += 1;
        if proposal.self_loop {
            return Ok(StepOutcome {
                kind: MoveKind::SelfLoop,
                delta: 0.0,
            });
        }
        let delta = y_candidate - self.accepted_objective;
        let p = acceptance_probability(delta, self.temperature)?;
        let u: f64 = rng.random();
        let accept = match rule {
            AcceptanceRule::HeatBath => u < p,
            AcceptanceRule::Greedy => delta <= 0.0,
        };
        let kind = match (accept, delta <= 0.0) {
            (false, _) => MoveKind::Rejected,
            (true, true) => MoveKind::Improve,
            (true, false) => MoveKind::UphillAccepted,
        };
        if accept {
            self.accepted_config = proposal.candidate;
            self.accepted_objective = y_candidate;
        }
        Ok(StepOutcome { kind, delta })
    }
}

/// Rule that fires a reheat when the moving mean of accepted objectives over
/// the latest `window` jobs exceeds `factor` times the mean of the `window`
/// jobs before it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReheatTrigger {
    pub window: usize,
    pub factor: f64,
}

impl Default for ReheatTrigger {
    fn default() -> Self {
        Self {
            window: 20,
            factor: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TemperatureSchedule {
    Fixed {
        tau: f64,
    },
    /// `τ_k = c / ln(k + k0)`.
    Logarithmic {
        c: f64,
        k0: f64,
    },
    /// `base`, overridden by `reheat_tau` for `hold` steps once the trigger fires.
    ReheatOnChange {
        base: Box<TemperatureSchedule>,
        reheat_tau: f64,
        hold: u64,
        #[serde(default)]
        trigger: ReheatTrigger,
    },
}

impl TemperatureSchedule {
    pub fn fixed(tau: f64) -> Result<Self> {
        let s = Self::Fixed { tau };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Fixed { tau } if tau.is_finite() && *tau > 0.0 => Ok(()),
            Self::Fixed { tau } => Err(Error::domain("schedule.tau", format!("must be > 0, got {tau}"))),
            Self::Logarithmic { c, k0 } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::domain("schedule.c", format!("must be > 0, got {c}")));
                }
                if !(k0.is_finite() && *k0 >= 2.0) {
                    return Err(Error::domain("schedule.k0", format!("must be >= 2, got {k0}")));
                }
                Ok(())
            }
            Self::ReheatOnChange {
                base,
                reheat_tau,
                hold,
                trigger,
            } => {
                if matches!(**base, Self::ReheatOnChange { .. }) {
                    return Err(Error::domain("schedule.base", "reheat schedules cannot be nested"));
                }
                base.validate()?;
                if !(reheat_tau.is_finite() && *reheat_tau > 0.0) {
                    return Err(Error::domain(
                        "schedule.reheat_tau",
                        format!("must be > 0, got {reheat_tau}"),
                    ));
                }
                if *hold == 0 {
                    return Err(Error::domain("schedule.hold", "must be >= 1"));
                }
                if trigger.window == 0 {
                    return Err(Error::domain("schedule.trigger.window", "must be >= 1"));
                }
                if !(trigger.factor.is_finite() && trigger.factor > 1.0) {
                    return Err(Error::domain(
                        "schedule.trigger.factor",
                        format!("must be > 1, got {}", trigger.factor),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Temperature at `step_count`. `reheat_from` is the step at which the
    /// most recent reheat fired, if any.
    pub fn temperature(&self, step_count: u64, reheat_from: Option<u64>) -> f64 {
        match self {
            Self::Fixed { tau } => *tau,
            Self::Logarithmic { c, k0 } => c / (step_count as f64 + k0).ln(),
            Self::ReheatOnChange {
                base,
                reheat_tau,
                hold,
                ..
            } => match reheat_from {
                Some(t0) if (t0..t0.saturating_add(*hold)).contains(&step_count) => *reheat_tau,
                _ => base.temperature(step_count, None),
            },
        }
    }

    /// A monitor for this schedule's reheat trigger, if it has one.
    pub fn monitor(&self) -> Option<ReheatMonitor> {
        match self {
            Self::ReheatOnChange { hold, trigger, .. } => Some(ReheatMonitor::new(*trigger, *hold)),
            _ => None,
        }
    }
}

/// Free-function form of [`TemperatureSchedule::temperature`].
pub fn schedule_temperature(schedule: &TemperatureSchedule, step_count: u64, reheat_from: Option<u64>) -> f64 {
    schedule.temperature(step_count, reheat_from)
}

/// Watches accepted objectives and decides when a reheat fires.
#[derive(Debug, Clone)]
pub struct ReheatMonitor {
    trigger: ReheatTrigger,
    hold: u64,
    history: VecDeque<f64>,
    fired_at: Option<u64>,
}

impl ReheatMonitor {
    pub fn new(trigger: ReheatTrigger, hold: u64) -> Self {
        Self {
            trigger,
            hold,
            history: VecDeque::with_capacity(2 * trigger.window),
            fired_at: None,
        }
    }

    pub fn fired_at(&self) -> Option<u64> {
        self.fired_at
    }

    /// Records the accepted objective after step `step_count`; returns true
    /// if a reheat fires (taking effect from `step_count` on).
    pub fn observe(&mut self, step_count: u64, accepted_objective: f64) -> bool {
        let w = self.trigger.window;
        if self.history.len() == 2 * w {
            self.history.pop_front();
        }
        self.history.push_back(accepted_objective);
        if let Some(t0) = self.fired_at {
            if step_count < t0.saturating_add(self.hold) {
                return false;
            }
        }
        if self.history.len() < 2 * w {
            return false;
        }
        let older: f64 = self.history.iter().take(w).sum::<f64>() / w as f64;
        let recent: f64 = self.history.iter().skip(w).sum::<f64>() / w as f64;
        if recent > self.trigger.factor * older {
            self.fired_at = Some(step_count);
            self.history.clear();
            true
        } else {
            false
        }
    }
}

/// Normalized `exp(-Y(x)/τ)` over the given objective values.
pub fn gibbs_distribution(objective_values: &[f64], tau: f64) -> Result<Vec<f64>> {
    if objective_values.is_empty() {
        return Err(Error::domain("space", "empty state space"));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::domain("tau", format!("must be finite and > 0, got {tau}")));
    }
    if objective_values.iter().any(|y| !y.is_finite()) {
        return Err(Error::domain("objective_values", "all objective values must be finite"));
    }
    let min = objective_values.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = objective_values.iter().map(|y| (-(y - min) / tau).exp()).collect();
    let z: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / z).collect())
}
