//! Reward terms: the transport distance reward, key press, sustain,
//! collision and energy terms, and their weighted sum.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keyboard::{KeyIndex, KeySet, KeyState};
use crate::midi::DimensionMismatch;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("invalid reward parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Dimension(#[from] DimensionMismatch),
}

/// Parameters of the Gaussian tolerance shaping function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerance {
    pub bounds: (f64, f64),
    pub margin: f64,
    pub value_at_margin: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            bounds: (0.0, 0.05),
            margin: 0.5,
            value_at_margin: 0.1,
        }
    }
}

impl Tolerance {
    pub fn validate(&self) -> Result<(), RewardError> {
        let (lo, hi) = self.bounds;
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(RewardError::InvalidParams(format!("bounds [{lo}, {hi}] are inverted")));
        }
        if !(self.margin.is_finite() && self.margin > 0.0) {
            return Err(RewardError::InvalidParams(format!("margin must be > 0, got {}", self.margin)));
        }
        if !(self.value_at_margin > 0.0 && self.value_at_margin < 1.0) {
            return Err(RewardError::InvalidParams(format!(
                "value_at_margin must lie in (0, 1), got {}",
                self.value_at_margin
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.bounds;
        let d = if x < lo {
            lo - x
        } else if x > hi {
            x - hi
        } else {
            return 1.0;
        };
        // exp(-0.5 (d w)^2) with w fixed by g(margin) = value_at_margin
        let scale = (-2.0 * self.value_at_margin.ln()).sqrt();
        let z = d / self.margin * scale;
        (-0.5 * z * z).exp()
    }
}

/// Gaussian tolerance: 1 on `[lo, hi]`, `value_at_margin` at distance
/// `margin` outside it.
pub fn tolerance(
    x: f64,
    bounds: (f64, f64),
    margin: f64,
    value_at_margin: f64,
) -> Result<f64, RewardError> {
    let t = Tolerance {
        bounds,
        margin,
        value_at_margin,
    };
    t.validate()?;
    Ok(t.eval(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardParams {
    /// Transport distance below which the reward saturates at 1, meters.
    pub threshold: f64,
    /// Negative decay scale of the transport reward.
    pub c: f64,
    /// Collision coefficient.
    pub alpha1: f64,
    /// Energy coefficient.
    pub alpha2: f64,
    /// Shaping for key depth and sustain errors.
    pub tolerance: Tolerance,
}

/// `ln(0.1) / 0.1^2`: the transport reward falls to 0.1 at 0.1 m past the
/// threshold.
pub fn default_ot_scale() -> f64 {
    0.1f64.ln() / (0.1 * 0.1)
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            threshold: 0.01,
            c: default_ot_scale(),
            alpha1: 0.5,
            alpha2: 5e-3,
            tolerance: Tolerance::default(),
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), RewardError> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(RewardError::InvalidParams(format!("threshold must be > 0, got {}", self.threshold)));
        }
        if !(self.c.is_finite() && self.c < 0.0) {
            return Err(RewardError::InvalidParams(format!("c must be < 0, got {}", self.c)));
        }
        if !(self.alpha1.is_finite() && self.alpha2.is_finite()) {
            return Err(RewardError::InvalidParams("alpha coefficients must be finite".into()));
        }
        self.tolerance.validate()
    }

    pub fn from_config_str(text: &str) -> Result<Self, RewardError> {
        let p: RewardParams =
            toml::from_str(text).map_err(|e| RewardError::InvalidParams(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}

pub fn ot_reward(d_ot: f64, params: &RewardParams) -> f64 {
    if d_ot < params.threshold {
        1.0
    } else {
        let excess = d_ot - params.threshold;
        (params.c * excess * excess).exp()
    }
}

/// Half for reaching full depth on active keys, half for pressing nothing
/// else. With no active keys the depth half counts as satisfied.
pub fn press_reward(keys: &KeyState, active: &KeySet, false_press: bool, params: &RewardParams) -> f64 {
    let depth_term = if active.is_empty() {
        1.0
    } else {
        let sum: f64 = active
            .iter()
            .map(|k| params.tolerance.eval((keys.depth[k.index()] - 1.0).abs()))
            .sum();
        sum / active.len() as f64
    };
    0.5 * depth_term + 0.5 * (1.0 - f64::from(u8::from(false_press)))
}

/// Whether any key outside `active` is at least `threshold` deep.
pub fn false_press(keys: &KeyState, active: &KeySet, threshold: f64) -> bool {
    KeyIndex::all().any(|k| keys.depth[k.index()] >= threshold && !active.contains(k))
}

pub fn sustain_reward(sustain: f64, target: f64, params: &RewardParams) -> f64 {
    params.tolerance.eval((sustain - target).abs())
}

pub fn collision_reward(collided: bool) -> f64 {
    if collided {
        0.0
    } else {
        1.0
    }
}

/// `|torques|^T |velocities|`.
pub fn energy_cost(torques: &[f64], velocities: &[f64]) -> Result<f64, RewardError> {
    if torques.len() != velocities.len() {
        return Err(DimensionMismatch {
            what: "energy velocities",
            expected: torques.len(),
            got: velocities.len(),
        }
        .into());
    }
    Ok(torques
        .iter()
        .zip(velocities)
        .map(|(t, v)| t.abs() * v.abs())
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub ot: f64,
    pub press: f64,
    pub sustain: f64,
    pub collision: f64,
    pub energy: f64,
    pub total: f64,
}

/// `ot + press + sustain + alpha1 * collision - alpha2 * energy`; the energy
/// term is a cost and is subtracted.
pub fn total_reward(
    ot: f64,
    press: f64,
    sustain: f64,
    collision: f64,
    energy: f64,
    params: &RewardParams,
) -> RewardBreakdown {
    RewardBreakdown {
        ot,
        press,
        sustain,
        collision,
        energy,
        total: ot + press + sustain + params.alpha1 * collision - params.alpha2 * energy,
    }
}

pub const REWARD_CSV_HEADER: [&str; 7] = ["step", "ot", "press", "sustain", "collision", "energy", "total"];
