//! Bimanual hand embodiment and its kinematic surrogate.
//!
//! Each enabled finger is a point fingertip. Per step, assigned fingertips
//! move toward their key press points under a speed cap, each hand's base
//! tracks the mean x of its targets, idle fingertips relax toward the rest
//! pose, and a hand whose fingertips spread wider than `span_max` is pulled
//! back into a ball of diameter `span_max` around its fingertip centroid.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keyboard::{KeyboardGeometry, Point3};
use crate::midi::FINGERTIP_SLOTS;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HandError {
    #[error("invalid hand config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    pub const BOTH: [Hand; 2] = [Hand::Left, Hand::Right];

    pub fn index(self) -> usize {
        match self {
            Hand::Left => 0,
            Hand::Right => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Digit {
    Thumb = 1,
    Index = 2,
    Middle = 3,
    Ring = 4,
    Little = 5,
}

impl Digit {
    pub const ALL: [Digit; 5] = [Digit::Thumb, Digit::Index, Digit::Middle, Digit::Ring, Digit::Little];

    /// Conventional 1 (thumb) .. 5 (little) numbering.
    pub fn number(self) -> i8 {
        self as i8
    }

    pub fn from_number(n: i8) -> Option<Digit> {
        Digit::ALL.get(usize::try_from(n.checked_sub(1)?).ok()?).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FingerId {
    pub hand: Hand,
    pub digit: Digit,
}

impl FingerId {
    pub const fn new(hand: Hand, digit: Digit) -> Self {
        Self { hand, digit }
    }

    /// PIG-style signed label: right hand 1..5, left hand -1..-5.
    pub fn signed_label(self) -> i8 {
        match self.hand {
            Hand::Right => self.digit.number(),
            Hand::Left => -self.digit.number(),
        }
    }

    pub fn from_signed_label(label: i8) -> Option<FingerId> {
        let hand = if label > 0 { Hand::Right } else { Hand::Left };
        Some(FingerId::new(hand, Digit::from_number(label.checked_abs()?)?))
    }

    /// Position in the 10-slot fingertip block: left thumb..little, then right.
    pub fn slot(self) -> usize {
        self.hand.index() * 5 + (self.digit.number() as usize - 1)
    }

    /// All ten fingers in slot order.
    pub fn all() -> Vec<FingerId> {
        Hand::BOTH
            .iter()
            .flat_map(|&h| Digit::ALL.iter().map(move |&d| FingerId::new(h, d)))
            .collect()
    }
}

impl fmt::Display for FingerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hand = match self.hand {
            Hand::Left => "left",
            Hand::Right => "right",
        };
        let digit = match self.digit {
            Digit::Thumb => "thumb",
            Digit::Index => "index",
            Digit::Middle => "middle",
            Digit::Ring => "ring",
            Digit::Little => "little",
        };
        write!(f, "{hand}_{digit}")
    }
}

impl FromStr for FingerId {
    type Err = HandError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FingerId::all()
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| HandError::InvalidConfig(format!("unknown finger {s:?}")))
    }
}

impl Serialize for FingerId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FingerId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandConfig {
    /// Embodiment identifier recorded in outputs.
    pub name: String,
    pub fingers: Vec<FingerId>,
    pub enabled: Vec<bool>,
    /// Max fingertip spread within one hand, meters.
    pub span_max: f64,
    /// Max fingertip speed, m/s.
    pub v_max: f64,
    /// Max hand base speed, m/s.
    pub base_v_max: f64,
    /// Per-finger rest offsets from the hand base.
    pub rest_offsets: Vec<Point3>,
    /// Bases closer than this count as a forearm collision.
    pub min_base_gap: f64,
}

const DEFAULT_FINGER_SPACING: f64 = 0.0225;
const DEFAULT_REST_HEIGHT: f64 = 0.02;

fn default_rest_offset(f: FingerId, spacing: f64, height: f64) -> Point3 {
    // Thumbs point toward the keyboard center.
    let lateral = f64::from(f.digit.number() - 3) * spacing;
    let x = match f.hand {
        Hand::Right => lateral,
        Hand::Left => -lateral,
    };
    Point3::new(x, 0.0, height)
}

impl Default for HandConfig {
    fn default() -> Self {
        Self::five_finger()
    }
}

/// On-disk form of a hand config; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct HandConfigFile {
    name: Option<String>,
    disabled: Option<Vec<FingerId>>,
    span_max: Option<f64>,
    v_max: Option<f64>,
    base_v_max: Option<f64>,
    min_base_gap: Option<f64>,
    finger_spacing: Option<f64>,
    rest_height: Option<f64>,
}

impl HandConfig {
    /// Two five-finger hands.
    pub fn five_finger() -> Self {
        Self::with_rest(DEFAULT_FINGER_SPACING, DEFAULT_REST_HEIGHT)
    }

    /// Two hands with the little fingers disabled.
    pub fn four_finger() -> Self {
        let mut cfg = Self::five_finger();
        cfg.name = "four-finger".into();
        cfg.disable(FingerId::new(Hand::Left, Digit::Little));
        cfg.disable(FingerId::new(Hand::Right, Digit::Little));
        cfg
    }

    fn with_rest(spacing: f64, height: f64) -> Self {
        let fingers = FingerId::all();
        Self {
            name: "five-finger".into(),
            enabled: vec![true; fingers.len()],
            rest_offsets: fingers
                .iter()
                .map(|&f| default_rest_offset(f, spacing, height))
                .collect(),
            fingers,
            span_max: 0.20,
            v_max: 2.0,
            base_v_max: 1.0,
            min_base_gap: 0.10,
        }
    }

    /// Built-in embodiment by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "five-finger" | "default" => Some(Self::five_finger()),
            "four-finger" => Some(Self::four_finger()),
            _ => None,
        }
    }

    pub fn disable(&mut self, finger: FingerId) {
        if let Some(i) = self.fingers.iter().position(|&f| f == finger) {
            self.enabled[i] = false;
        }
    }

    pub fn from_config_str(text: &str) -> Result<Self, HandError> {
        let file: HandConfigFile =
            toml::from_str(text).map_err(|e| HandError::InvalidConfig(e.to_string()))?;
        let mut cfg = Self::with_rest(
            file.finger_spacing.unwrap_or(DEFAULT_FINGER_SPACING),
            file.rest_height.unwrap_or(DEFAULT_REST_HEIGHT),
        );
        cfg.name = file.name.unwrap_or_else(|| "custom".into());
        for f in file.disabled.unwrap_or_default() {
            cfg.disable(f);
        }
        if let Some(v) = file.span_max {
            cfg.span_max = v;
        }
        if let Some(v) = file.v_max {
            cfg.v_max = v;
        }
        if let Some(v) = file.base_v_max {
            cfg.base_v_max = v;
        }
        if let Some(v) = file.min_base_gap {
            cfg.min_base_gap = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HandError> {
        let bad = |m: String| Err(HandError::InvalidConfig(m));
        if self.fingers.len() != self.enabled.len() || self.fingers.len() != self.rest_offsets.len() {
            return bad("fingers, enabled and rest_offsets must have equal length".into());
        }
        let mut seen = std::collections::HashSet::new();
        if !self.fingers.iter().all(|f| seen.insert(*f)) {
            return bad("duplicate finger".into());
        }
        for (name, v) in [
            ("span_max", self.span_max),
            ("v_max", self.v_max),
            ("base_v_max", self.base_v_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.min_base_gap.is_finite() && self.min_base_gap >= 0.0) {
            return bad(format!("min_base_gap must be non-negative, got {}", self.min_base_gap));
        }
        for hand in Hand::BOTH {
            let listed = self.fingers.iter().any(|f| f.hand == hand);
            let enabled = self
                .fingers
                .iter()
                .zip(&self.enabled)
                .any(|(f, &e)| e && f.hand == hand);
            if listed && !enabled {
                return bad(format!("{hand:?} hand has no enabled finger"));
            }
        }
        if self.enabled_count() == 0 {
            return bad("no enabled fingers".into());
        }
        Ok(())
    }

    /// Enabled fingers in config order; these are the assignment columns.
    pub fn enabled_fingers(&self) -> Vec<FingerId> {
        self.fingers
            .iter()
            .zip(&self.enabled)
            .filter_map(|(&f, &e)| e.then_some(f))
            .collect()
    }

    pub fn enabled_count(&self) -> usize {
        self.enabled.iter().filter(|&&e| e).count()
    }

    fn enabled_rest_offsets(&self) -> Vec<Point3> {
        self.rest_offsets
            .iter()
            .zip(&self.enabled)
            .filter_map(|(&p, &e)| e.then_some(p))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandState {
    /// Enabled fingers, aligned with `fingertips`.
    pub fingers: Vec<FingerId>,
    pub fingertips: Vec<Point3>,
    /// Base x per hand, indexed by `Hand::index`.
    pub base_x: [f64; 2],
}

impl HandState {
    /// Fingertips in the fixed 10-slot layout; disabled slots are zero.
    pub fn fingertip_slots(&self) -> [Point3; FINGERTIP_SLOTS] {
        let mut slots = [Point3::ZERO; FINGERTIP_SLOTS];
        for (f, p) in self.fingers.iter().zip(&self.fingertips) {
            slots[f.slot()] = *p;
        }
        slots
    }

    /// Largest pairwise fingertip distance within `hand`.
    pub fn spread(&self, hand: Hand) -> f64 {
        let pts: Vec<Point3> = self.hand_points(hand).map(|(_, p)| p).collect();
        let mut max = 0.0f64;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                max = max.max(a.distance(*b));
            }
        }
        max
    }

    fn hand_points(&self, hand: Hand) -> impl Iterator<Item = (usize, Point3)> + '_ {
        self.fingers
            .iter()
            .zip(&self.fingertips)
            .enumerate()
            .filter(move |(_, (f, _))| f.hand == hand)
            .map(|(i, (_, p))| (i, *p))
    }
}

fn base_point(x: f64, geom: &KeyboardGeometry) -> Point3 {
    Point3::new(x, geom.origin.y, geom.origin.z)
}

pub fn init_hands(config: &HandConfig, geom: &KeyboardGeometry) -> Result<HandState, HandError> {
    config.validate()?;
    let width = geom.width();
    let base_x = [geom.origin.x + width / 3.0, geom.origin.x + 2.0 * width / 3.0];
    let fingers = config.enabled_fingers();
    let fingertips = fingers
        .iter()
        .zip(config.enabled_rest_offsets())
        .map(|(f, off)| base_point(base_x[f.hand.index()], geom) + off)
        .collect();
    Ok(HandState {
        fingers,
        fingertips,
        base_x,
    })
}

/// Advances the surrogate by one control step.
///
/// `assigned` pairs an index into `state.fingertips` with its target point.
pub fn step_hand(
    state: &HandState,
    assigned: &[(usize, Point3)],
    dt: f64,
    config: &HandConfig,
    geom: &KeyboardGeometry,
) -> HandState {
    let n = state.fingertips.len();
    let mut targets: Vec<Option<Point3>> = vec![None; n];
    for &(i, p) in assigned {
        debug_assert!(i < n, "assignment references fingertip {i} of {n}");
        if let Some(t) = targets.get_mut(i) {
            *t = Some(p);
        }
    }

    let mut base_x = state.base_x;
    for hand in Hand::BOTH {
        let (sum, count) = state
            .fingers
            .iter()
            .zip(&targets)
            .filter(|(f, t)| f.hand == hand && t.is_some())
            .fold((0.0, 0usize), |(s, c), (_, t)| (s + t.unwrap().x, c + 1));
        if count > 0 {
            let goal = sum / count as f64;
            let cur = base_x[hand.index()];
            let max = config.base_v_max * dt;
            base_x[hand.index()] = cur + (goal - cur).clamp(-max, max);
        }
    }

    let rest = config.enabled_rest_offsets();
    let reach = config.v_max * dt;
    let mut fingertips: Vec<Point3> = (0..n)
        .map(|i| {
            let goal = targets[i].unwrap_or_else(|| {
                base_point(base_x[state.fingers[i].hand.index()], geom) + rest[i]
            });
            state.fingertips[i].step_toward(goal, reach)
        })
        .collect();

    let mut next = HandState {
        fingers: state.fingers.clone(),
        fingertips: Vec::new(),
        base_x,
    };
    std::mem::swap(&mut next.fingertips, &mut fingertips);
    for hand in Hand::BOTH {
        if next.spread(hand) > config.span_max {
            project_span(&mut next, hand, config.span_max);
        }
    }
    next
}

fn project_span(state: &mut HandState, hand: Hand, span_max: f64) {
    let members: Vec<(usize, Point3)> = state.hand_points(hand).collect();
    let inv = 1.0 / members.len() as f64;
    let centroid = members
        .iter()
        .fold(Point3::ZERO, |acc, &(_, p)| acc + p * inv);
    let radius = 0.5 * span_max;
    for (i, p) in members {
        let d = p - centroid;
        let dist = d.norm();
        if dist > radius {
            state.fingertips[i] = centroid + d * (radius / dist);
        }
    }
}

/// Forearm collision proxy: bases closer than `min_base_gap`.
pub fn collision_flag(state: &HandState, config: &HandConfig) -> bool {
    (state.base_x[0] - state.base_x[1]).abs() < config.min_base_gap
}
