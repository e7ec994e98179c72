use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{MidiError, NoteEvent, ParsedMidi, PedalEvent};
use crate::keyboard::{key_for_pitch, KeyIndex, KeySet, KeyState, Point3, NUM_KEYS};

/// Bits per goal step: 88 keys plus the sustain bit.
pub const GOAL_STEP_BITS: usize = NUM_KEYS + 1;
/// Goal steps in an observation: the current step and 10 future ones.
pub const DEFAULT_LOOKAHEAD_STEPS: usize = 11;
pub const FINGERTIP_SLOTS: usize = 10;
pub const HAND_STATE_DIM: usize = 46;
pub const OBSERVATION_DIM: usize = 1144;

const SNAP: f64 = 1e-9;

/// Step index at or before `time`, snapping values within 1e-9 steps of an
/// integer so that e.g. 1.25 s / 0.05 s lands on step 25.
fn step_floor(time: f64, dt: f64) -> i64 {
    let q = time / dt;
    let r = q.round();
    if (q - r).abs() < SNAP {
        r as i64
    } else {
        q.floor() as i64
    }
}

fn step_ceil(time: f64, dt: f64) -> i64 {
    let q = time / dt;
    let r = q.round();
    if (q - r).abs() < SNAP {
        r as i64
    } else {
        q.ceil() as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizeOptions {
    pub dt: f64,
    pub stretch: f64,
    pub trim_silence: bool,
}

impl Default for DiscretizeOptions {
    fn default() -> Self {
        Self {
            dt: 0.05,
            stretch: 1.25,
            trim_silence: true,
        }
    }
}

/// Maps song time to goal time: `t' = t * stretch - shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeMap {
    pub stretch: f64,
    pub shift: f64,
}

impl Default for TimeMap {
    fn default() -> Self {
        Self {
            stretch: 1.0,
            shift: 0.0,
        }
    }
}

impl TimeMap {
    pub fn apply(&self, t: f64) -> f64 {
        t * self.stretch - self.shift
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalStep {
    pub active: KeySet,
    pub sustain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSequence {
    pub steps: Vec<GoalStep>,
    pub dt: f64,
    pub time_map: TimeMap,
}

impl GoalSequence {
    pub fn new(steps: Vec<GoalStep>, dt: f64) -> Self {
        Self {
            steps,
            dt,
            time_map: TimeMap::default(),
        }
    }

    pub fn empty(dt: f64) -> Self {
        Self::new(Vec::new(), dt)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.steps.len() as f64 * self.dt
    }

    /// First step at which a note starting at song time `onset` is active.
    pub fn onset_step(&self, onset: f64) -> i64 {
        step_floor(self.time_map.apply(onset), self.dt)
    }

    /// Keys that become active at step `t` (active now, not at `t - 1`).
    pub fn onsets_at(&self, t: usize) -> KeySet {
        let now = self.steps[t].active;
        match t.checked_sub(1) {
            Some(prev) => now.difference(&self.steps[prev].active),
            None => now,
        }
    }

    /// Sum of active-set sizes over all steps.
    pub fn active_key_steps(&self) -> usize {
        self.steps.iter().map(|s| s.active.len()).sum()
    }

    pub fn max_chord(&self) -> usize {
        self.steps.iter().map(|s| s.active.len()).max().unwrap_or(0)
    }

    /// Text form: one line per step, `step<TAB>sustain<TAB>k1,k2,...`
    /// (`-` for no keys), after `#` header lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# dt={}", self.dt);
        let _ = writeln!(
            out,
            "# stretch={} shift={}",
            self.time_map.stretch, self.time_map.shift
        );
        for (t, step) in self.steps.iter().enumerate() {
            let keys: Vec<String> = step.active.iter().map(|k| k.to_string()).collect();
            let keys = if keys.is_empty() { "-".to_string() } else { keys.join(",") };
            let _ = writeln!(out, "{t}\t{}\t{keys}", u8::from(step.sustain));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, MidiError> {
        let bad = |n: usize, why: &str| MidiError::InvalidParams(format!("goal line {}: {why}", n + 1));
        let mut dt = None;
        let mut time_map = TimeMap::default();
        let mut steps = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if let Some(header) = line.strip_prefix('#') {
                for field in header.split_whitespace() {
                    if let Some((k, v)) = field.split_once('=') {
                        let v: f64 = v.parse().map_err(|_| bad(n, "bad header value"))?;
                        match k {
                            "dt" => dt = Some(v),
                            "stretch" => time_map.stretch = v,
                            "shift" => time_map.shift = v,
                            _ => {}
                        }
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(bad(n, "expected 3 tab-separated columns"));
            }
            let idx: usize = cols[0].parse().map_err(|_| bad(n, "bad step index"))?;
            if idx != steps.len() {
                return Err(bad(n, "step indices must be consecutive from 0"));
            }
            let sustain = match cols[1] {
                "0" => false,
                "1" => true,
                _ => return Err(bad(n, "sustain must be 0 or 1")),
            };
            let mut active = KeySet::new();
            if cols[2] != "-" {
                for k in cols[2].split(',') {
                    let k: usize = k.parse().map_err(|_| bad(n, "bad key"))?;
                    active.insert(KeyIndex::new(k).map_err(|_| bad(n, "key out of range"))?);
                }
            }
            steps.push(GoalStep { active, sustain });
        }
        let dt = dt.ok_or_else(|| MidiError::InvalidParams("missing '# dt=' header".into()))?;
        Ok(Self {
            steps,
            dt,
            time_map,
        })
    }
}

impl ParsedMidi {
    pub fn discretize(&self, opts: &DiscretizeOptions) -> Result<GoalSequence, MidiError> {
        discretize(&self.notes, &self.pedal, opts)
    }
}

/// Discretizes notes into per-step goals.
///
/// Times are scaled by `stretch`, then shifted so the first onset is at 0
/// when `trim_silence` is set. Key k is active at step t iff its stretched
/// `[onset, offset)` meets `[t*dt, (t+1)*dt)`. The sustain bit is the pedal
/// state (any channel, CC64 >= 64) at `t*dt`.
pub fn discretize(
    notes: &[NoteEvent],
    pedal: &[PedalEvent],
    opts: &DiscretizeOptions,
) -> Result<GoalSequence, MidiError> {
    let DiscretizeOptions {
        dt,
        stretch,
        trim_silence,
    } = *opts;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(MidiError::InvalidParams(format!("dt must be positive, got {dt}")));
    }
    if !(stretch.is_finite() && stretch > 0.0) {
        return Err(MidiError::InvalidParams(format!(
            "stretch must be positive, got {stretch}"
        )));
    }
    if notes.is_empty() {
        if trim_silence {
            return Err(MidiError::EmptySong);
        }
        return Ok(GoalSequence {
            steps: Vec::new(),
            dt,
            time_map: TimeMap { stretch, shift: 0.0 },
        });
    }

    let shift = if trim_silence {
        notes.iter().map(|n| n.onset).fold(f64::INFINITY, f64::min) * stretch
    } else {
        0.0
    };
    let time_map = TimeMap { stretch, shift };

    let mut spans = Vec::with_capacity(notes.len());
    for n in notes {
        let key = match key_for_pitch(i32::from(n.pitch)) {
            Ok(k) => k,
            Err(_) => {
                log::warn!("skipping pitch {} outside the keyboard", n.pitch);
                continue;
            }
        };
        let first = step_floor(time_map.apply(n.onset), dt).max(0);
        let end = step_ceil(time_map.apply(n.offset), dt).max(first + 1);
        spans.push((key, first as usize, end as usize));
    }
    let len = spans.iter().map(|s| s.2).max().unwrap_or(0);
    let mut steps = vec![GoalStep::default(); len];
    for (key, first, end) in spans {
        for step in &mut steps[first..end] {
            step.active.insert(key);
        }
    }

    if !pedal.is_empty() {
        let mut events: Vec<(f64, u8, bool)> = pedal
            .iter()
            .map(|p| (time_map.apply(p.time), p.channel, p.is_down()))
            .collect();
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut down = [false; 16];
        let mut next = 0;
        for (t, step) in steps.iter_mut().enumerate() {
            let start = t as f64 * dt;
            while next < events.len() && events[next].0 <= start + SNAP * dt {
                down[usize::from(events[next].1 & 0x0f)] = events[next].2;
                next += 1;
            }
            step.sustain = down.iter().any(|&d| d);
        }
    }

    Ok(GoalSequence {
        steps,
        dt,
        time_map,
    })
}

/// Flattened lookahead goal: per step, 88 key bits then the sustain bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalVector {
    bits: Vec<u8>,
}

impl GoalVector {
    pub fn lookahead(&self) -> usize {
        self.bits.len() / GOAL_STEP_BITS
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Key bits of lookahead block `i`.
    pub fn keys(&self, i: usize) -> &[u8] {
        let start = i * GOAL_STEP_BITS;
        &self.bits[start..start + NUM_KEYS]
    }

    pub fn sustain(&self, i: usize) -> u8 {
        self.bits[i * GOAL_STEP_BITS + NUM_KEYS]
    }
}

/// Goal for steps `t .. t + lookahead`; steps past the end are all zero.
pub fn goal_vector(seq: &GoalSequence, t: usize, lookahead: usize) -> GoalVector {
    let mut bits = vec![0u8; lookahead * GOAL_STEP_BITS];
    for (block, step) in seq.steps.iter().skip(t).take(lookahead).enumerate() {
        let base = block * GOAL_STEP_BITS;
        for k in step.active.iter() {
            bits[base + k.index()] = 1;
        }
        bits[base + NUM_KEYS] = u8::from(step.sustain);
    }
    GoalVector { bits }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("dimension mismatch in {what}: expected {expected}, got {got}")]
pub struct DimensionMismatch {
    pub what: &'static str,
    pub expected: usize,
    pub got: usize,
}

/// Block offsets of the observation vector for a given lookahead.
///
/// Order: goal keys (88 per step), goal sustain (1 per step), key depths (88),
/// sustain state (1), fingertips (3 x 10), hand state (46).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservationLayout {
    pub lookahead: usize,
}

impl ObservationLayout {
    pub const CANONICAL: ObservationLayout = ObservationLayout {
        lookahead: DEFAULT_LOOKAHEAD_STEPS,
    };

    pub fn goal_keys(&self) -> std::ops::Range<usize> {
        0..NUM_KEYS * self.lookahead
    }
    pub fn goal_sustain(&self) -> std::ops::Range<usize> {
        let s = self.goal_keys().end;
        s..s + self.lookahead
    }
    pub fn key_depths(&self) -> std::ops::Range<usize> {
        let s = self.goal_sustain().end;
        s..s + NUM_KEYS
    }
    pub fn sustain_state(&self) -> std::ops::Range<usize> {
        let s = self.key_depths().end;
        s..s + 1
    }
    pub fn fingertips(&self) -> std::ops::Range<usize> {
        let s = self.sustain_state().end;
        s..s + 3 * FINGERTIP_SLOTS
    }
    pub fn hand_state(&self) -> std::ops::Range<usize> {
        let s = self.fingertips().end;
        s..s + HAND_STATE_DIM
    }
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.hand_state().end
    }

    /// Layout whose total length is `obs_dim`, if any lookahead fits.
    pub fn for_dim(obs_dim: usize) -> Option<ObservationLayout> {
        let fixed = NUM_KEYS + 1 + 3 * FINGERTIP_SLOTS + HAND_STATE_DIM;
        let rest = obs_dim.checked_sub(fixed)?;
        (rest > 0 && rest % GOAL_STEP_BITS == 0).then_some(ObservationLayout {
            lookahead: rest / GOAL_STEP_BITS,
        })
    }

    /// Current-step goal keys decoded from an observation row.
    pub fn current_goal(&self, obs: &[f32]) -> KeySet {
        KeyIndex::all()
            .filter(|k| obs[k.index()] >= 0.5)
            .collect()
    }

    /// Keys whose depth in an observation row reaches `threshold`.
    pub fn pressed(&self, obs: &[f32], threshold: f64) -> KeySet {
        let depths = &obs[self.key_depths()];
        KeyIndex::all()
            .filter(|k| f64::from(depths[k.index()]) >= threshold)
            .collect()
    }
}

pub fn assemble_observation(
    goal: &GoalVector,
    keys: &KeyState,
    fingertips: &[Point3],
    hand_state: &[f64],
) -> Result<Vec<f64>, DimensionMismatch> {
    if goal.is_empty() || !goal.len().is_multiple_of(GOAL_STEP_BITS) {
        return Err(DimensionMismatch {
            what: "goal",
            expected: DEFAULT_LOOKAHEAD_STEPS * GOAL_STEP_BITS,
            got: goal.len(),
        });
    }
    if fingertips.len() != FINGERTIP_SLOTS {
        return Err(DimensionMismatch {
            what: "fingertips",
            expected: FINGERTIP_SLOTS,
            got: fingertips.len(),
        });
    }
    if hand_state.len() != HAND_STATE_DIM {
        return Err(DimensionMismatch {
            what: "hand state",
            expected: HAND_STATE_DIM,
            got: hand_state.len(),
        });
    }
    let layout = ObservationLayout {
        lookahead: goal.lookahead(),
    };
    let mut obs = Vec::with_capacity(layout.len());
    for i in 0..layout.lookahead {
        obs.extend(goal.keys(i).iter().map(|&b| f64::from(b)));
    }
    obs.extend((0..layout.lookahead).map(|i| f64::from(goal.sustain(i))));
    obs.extend_from_slice(&keys.depth);
    obs.push(keys.sustain);
    for p in fingertips {
        obs.extend_from_slice(&p.to_array());
    }
    obs.extend_from_slice(hand_state);
    debug_assert_eq!(obs.len(), layout.len());
    Ok(obs)
}
