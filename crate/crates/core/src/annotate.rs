//! End-to-end fingering annotation.
//!
//! The hand surrogate is rolled through a goal sequence. At every step the
//! active keys are assigned to fingertips by [`solve_assignment`] on the
//! current fingertip positions, the assignment and its cost `d_ot` are
//! recorded, and the hands move toward the assigned keys. A key counts as
//! pressed after the step when its assigned fingertip ends within the
//! reward threshold of the key's press point.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assign::{build_cost_matrix, solve_assignment, solve_best_effort, AssignError};
use crate::hand::{collision_flag, init_hands, step_hand, FingerId, HandConfig, HandError};
use crate::keyboard::{KeyIndex, KeySet, KeyState, KeyboardGeometry, Point3};
use crate::metrics::{KeyPressTrace, TraceStep};
use crate::midi::{
    assemble_observation, goal_vector, midi_to_spelled, GoalSequence, GoalStep, NoteEvent,
    PigFinger, PigRecord, TimeMap, DEFAULT_LOOKAHEAD_STEPS, HAND_STATE_DIM,
    ObservationLayout,
};
use crate::reward::{
    collision_reward, false_press, ot_reward, press_reward, sustain_reward, total_reward,
    RewardBreakdown, RewardParams, REWARD_CSV_HEADER,
};
use crate::store::{EpisodeMeta, EpisodeRecord, ACTION_DIM};

pub const DEFAULT_EPISODE_LEN: usize = 550;
/// Release velocity written to PIG exports (the MIDI default).
const PIG_OFFSET_VELOCITY: i32 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnnotateError {
    #[error("step {step}: chord of {chord} keys exceeds {fingers} enabled fingers")]
    Infeasible { step: usize, chord: usize, fingers: usize },
    #[error("note {note} (pitch {pitch}) has no finger at its first active step")]
    UnlabeledNote { note: usize, pitch: u8 },
    #[error("annotation and goal sequence disagree: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Hand(#[from] HandError),
    #[error(transparent)]
    Assign(#[from] AssignError),
}

/// What to do when a chord has more keys than there are enabled fingers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChordPolicy {
    #[default]
    Strict,
    /// Keep the cheapest keys, one per finger, and record the rest as dropped.
    BestEffort,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotateParams {
    pub reward: RewardParams,
    pub policy: ChordPolicy,
}

/// Everything needed to reproduce an annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSnapshot {
    pub embodiment: HandConfig,
    pub geometry: KeyboardGeometry,
    pub params: AnnotateParams,
    pub dt: f64,
    pub time_map: TimeMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Key to finger, keys ascending.
    pub pairs: Vec<(KeyIndex, FingerId)>,
    /// Minimum total fingertip travel for this step's keys.
    pub d_ot: f64,
    /// Keys left without a finger (best-effort mode only).
    pub dropped: Vec<KeyIndex>,
    /// Fingertips before the step; the cost inputs.
    pub fingertips: Vec<Point3>,
    /// Fingertips after the step.
    pub fingertips_after: Vec<Point3>,
    pub base_x: [f64; 2],
    pub pressed: KeySet,
    pub collided: bool,
    pub reward: RewardBreakdown,
}

impl StepRecord {
    pub fn finger_for(&self, key: KeyIndex) -> Option<FingerId> {
        self.pairs.iter().find(|p| p.0 == key).map(|p| p.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnsetLabel {
    pub step: usize,
    pub key: KeyIndex,
    pub finger: FingerId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingeringAnnotation {
    /// Enabled fingers; finger columns of every step's cost matrix.
    pub fingers: Vec<FingerId>,
    pub steps: Vec<StepRecord>,
    /// Finger at the step where each key activation begins.
    pub onsets: Vec<OnsetLabel>,
    pub snapshot: AnnotationSnapshot,
}

impl FingeringAnnotation {
    pub fn embodiment(&self) -> &str {
        &self.snapshot.embodiment.name
    }

    pub fn mean_d_ot(&self) -> f64 {
        if self.steps.is_empty() {
            0.0
        } else {
            self.steps.iter().map(|s| s.d_ot).sum::<f64>() / self.steps.len() as f64
        }
    }

    /// Steps where at least one key went unassigned.
    pub fn infeasible_steps(&self) -> usize {
        self.steps.iter().filter(|s| !s.dropped.is_empty()).count()
    }

    pub fn press_trace(&self, goals: &GoalSequence) -> KeyPressTrace {
        KeyPressTrace {
            steps: self
                .steps
                .iter()
                .zip(&goals.steps)
                .map(|(s, g)| TraceStep {
                    pressed: s.pressed,
                    active: g.active,
                })
                .collect(),
        }
    }

    /// Text form, one line per step:
    /// `step<TAB>d_ot<TAB>key:finger;...` with signed finger labels (right
    /// hand positive), `-` for an empty step, and a trailing
    /// `<TAB>dropped=k,...` column when keys were dropped.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# embodiment={}", self.embodiment());
        if let Ok(cfg) = serde_json::to_string(&self.snapshot) {
            let _ = writeln!(out, "# config={cfg}");
        }
        let _ = writeln!(out, "# step\td_ot\tkey:finger");
        for (t, s) in self.steps.iter().enumerate() {
            let pairs = if s.pairs.is_empty() {
                "-".to_string()
            } else {
                s.pairs
                    .iter()
                    .map(|(k, f)| format!("{k}:{}", f.signed_label()))
                    .collect::<Vec<_>>()
                    .join(";")
            };
            let _ = write!(out, "{t}\t{}\t{pairs}", s.d_ot);
            if !s.dropped.is_empty() {
                let dropped: Vec<String> = s.dropped.iter().map(|k| k.to_string()).collect();
                let _ = write!(out, "\tdropped={}", dropped.join(","));
            }
            out.push('\n');
        }
        out
    }

    /// Per-step reward breakdown as CSV, after a `# config=` line.
    pub fn write_rewards_csv<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        let cfg = serde_json::to_string(&self.snapshot).unwrap_or_default();
        writeln!(sink, "# config={cfg}")?;
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(REWARD_CSV_HEADER)?;
        for (t, s) in self.steps.iter().enumerate() {
            let r = s.reward;
            w.write_record([
                t.to_string(),
                r.ot.to_string(),
                r.press.to_string(),
                r.sustain.to_string(),
                r.collision.to_string(),
                r.energy.to_string(),
                r.total.to_string(),
            ])?;
        }
        w.flush()
    }
}

/// One parsed line of the annotation text format.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationLine {
    pub step: usize,
    pub d_ot: f64,
    pub pairs: Vec<(KeyIndex, FingerId)>,
    pub dropped: Vec<KeyIndex>,
}

pub fn parse_annotation_text(text: &str) -> Result<Vec<AnnotationLine>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let bad = |why: &str| format!("line {}: {why}", n + 1);
        let cols: Vec<&str> = line.split('\t').collect();
        if !(3..=4).contains(&cols.len()) {
            return Err(bad("expected 3 or 4 columns"));
        }
        let key = |s: &str| -> Result<KeyIndex, String> {
            s.parse::<usize>()
                .ok()
                .and_then(|k| KeyIndex::new(k).ok())
                .ok_or_else(|| bad("bad key"))
        };
        let mut pairs = Vec::new();
        if cols[2] != "-" {
            for p in cols[2].split(';') {
                let (k, f) = p.split_once(':').ok_or_else(|| bad("bad pair"))?;
                let f = f
                    .parse::<i8>()
                    .ok()
                    .and_then(FingerId::from_signed_label)
                    .ok_or_else(|| bad("bad finger"))?;
                pairs.push((key(k)?, f));
            }
        }
        let mut dropped = Vec::new();
        if let Some(d) = cols.get(3) {
            let list = d.strip_prefix("dropped=").ok_or_else(|| bad("bad dropped column"))?;
            for k in list.split(',') {
                dropped.push(key(k)?);
            }
        }
        out.push(AnnotationLine {
            step: cols[0].parse().map_err(|_| bad("bad step"))?,
            d_ot: cols[1].parse().map_err(|_| bad("bad d_ot"))?,
            pairs,
            dropped,
        });
    }
    Ok(out)
}

/// Rolls the surrogate through `goals`, solving the finger assignment at
/// every step.
pub fn annotate_song(
    goals: &GoalSequence,
    hands: &HandConfig,
    geom: &KeyboardGeometry,
    params: &AnnotateParams,
) -> Result<FingeringAnnotation, AnnotateError> {
    let mut state = init_hands(hands, geom)?;
    let fingers = state.fingers.clone();
    let mut steps = Vec::with_capacity(goals.len());
    let mut onsets = Vec::new();
    let reward = &params.reward;

    for (t, goal) in goals.steps.iter().enumerate() {
        let before = state.fingertips.clone();
        let mut pairs = Vec::new();
        let mut dropped = Vec::new();
        let mut assigned: Vec<(usize, Point3, KeyIndex)> = Vec::new();
        let mut d_ot = 0.0;

        if !goal.active.is_empty() {
            let kc = build_cost_matrix(&state.fingertips, &goal.active, geom);
            let assignment = match params.policy {
                ChordPolicy::Strict => solve_assignment(&kc.costs).map_err(|e| match e {
                    AssignError::Infeasible { rows, cols } => AnnotateError::Infeasible {
                        step: t,
                        chord: rows,
                        fingers: cols,
                    },
                    other => other.into(),
                })?,
                ChordPolicy::BestEffort => {
                    let partial = solve_best_effort(&kc.costs)?;
                    dropped = partial.dropped_rows.iter().map(|&r| kc.keys[r]).collect();
                    partial.assignment
                }
            };
            d_ot = assignment.total_cost;
            for &(row, col) in &assignment.pairs {
                pairs.push((kc.keys[row], fingers[col]));
                assigned.push((col, kc.targets[row], kc.keys[row]));
            }
        }

        let targets: Vec<(usize, Point3)> = assigned.iter().map(|&(c, p, _)| (c, p)).collect();
        state = step_hand(&state, &targets, goals.dt, hands, geom);

        let mut keys = KeyState::default();
        let mut pressed = KeySet::new();
        for &(col, target, key) in &assigned {
            if state.fingertips[col].distance(target) < reward.threshold {
                pressed.insert(key);
                keys.depth[key.index()] = 1.0;
            }
        }
        let sustain = f64::from(u8::from(goal.sustain));
        keys.sustain = sustain;
        let collided = collision_flag(&state, hands);
        let fp = false_press(&keys, &goal.active, crate::metrics::DEFAULT_PRESS_THRESHOLD);
        let breakdown = total_reward(
            ot_reward(d_ot, reward),
            press_reward(&keys, &goal.active, fp, reward),
            sustain_reward(keys.sustain, sustain, reward),
            collision_reward(collided),
            0.0,
            reward,
        );

        let step = StepRecord {
            pairs,
            d_ot,
            dropped,
            fingertips: before,
            fingertips_after: state.fingertips.clone(),
            base_x: state.base_x,
            pressed,
            collided,
            reward: breakdown,
        };
        for key in goals.onsets_at(t).iter() {
            if let Some(finger) = step.finger_for(key) {
                onsets.push(OnsetLabel { step: t, key, finger });
            }
        }
        steps.push(step);
    }

    Ok(FingeringAnnotation {
        fingers,
        steps,
        onsets,
        snapshot: AnnotationSnapshot {
            embodiment: hands.clone(),
            geometry: *geom,
            params: *params,
            dt: goals.dt,
            time_map: goals.time_map,
        },
    })
}

/// A fixed-length window of a song. Goals are padded with silence to
/// `length`; `steps` holds only the real annotated steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub index: usize,
    pub start_step: usize,
    pub length: usize,
    pub goals: GoalSequence,
    pub steps: Vec<StepRecord>,
}

impl Episode {
    pub fn real_len(&self) -> usize {
        self.steps.len()
    }

    pub fn padding(&self) -> usize {
        self.length - self.steps.len()
    }
}

/// Splits a song into consecutive non-overlapping windows of `episode_len`
/// steps; the last window is padded with empty goals.
pub fn chunk_episodes(
    goals: &GoalSequence,
    annotation: &FingeringAnnotation,
    episode_len: usize,
) -> Result<Vec<Episode>, AnnotateError> {
    if episode_len == 0 {
        return Err(AnnotateError::Mismatch("episode length must be positive".into()));
    }
    if goals.len() != annotation.steps.len() {
        return Err(AnnotateError::Mismatch(format!(
            "{} goal steps vs {} annotated steps",
            goals.len(),
            annotation.steps.len()
        )));
    }
    let count = goals.len().div_ceil(episode_len);
    Ok((0..count)
        .map(|i| {
            let start = i * episode_len;
            let end = (start + episode_len).min(goals.len());
            let mut g = goals.steps[start..end].to_vec();
            g.resize(episode_len, GoalStep::default());
            Episode {
                index: i,
                start_step: start,
                length: episode_len,
                goals: GoalSequence {
                    steps: g,
                    dt: goals.dt,
                    time_map: goals.time_map,
                },
                steps: annotation.steps[start..end].to_vec(),
            }
        })
        .collect())
}

/// PIG records for `notes`: each note takes the finger assigned to its key
/// at the note's first active step.
pub fn annotation_to_pig(
    annotation: &FingeringAnnotation,
    notes: &[NoteEvent],
) -> Result<Vec<PigRecord>, AnnotateError> {
    let probe = GoalSequence {
        steps: Vec::new(),
        dt: annotation.snapshot.dt,
        time_map: annotation.snapshot.time_map,
    };
    notes
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let unlabeled = AnnotateError::UnlabeledNote { note: i, pitch: n.pitch };
            let key = crate::keyboard::key_for_pitch(i32::from(n.pitch)).map_err(|_| unlabeled.clone())?;
            let step = usize::try_from(probe.onset_step(n.onset).max(0)).unwrap_or(0);
            let finger = annotation
                .steps
                .get(step)
                .and_then(|s| s.finger_for(key))
                .ok_or(unlabeled)?;
            Ok(PigRecord {
                note_id: i as u64,
                onset: n.onset,
                offset: n.offset,
                spelled_pitch: midi_to_spelled(n.pitch),
                onset_velocity: i32::from(n.velocity),
                offset_velocity: PIG_OFFSET_VELOCITY,
                channel: finger.hand.index() as u8 ^ 1,
                finger: PigFinger::single(finger.signed_label()),
            })
        })
        .collect()
}

/// Builds a container record for one episode. Observations follow the
/// canonical 1144-dim layout with post-step key states and fingertips; the
/// 46-dim hand state and 39-dim actions are zero since the surrogate has no
/// joints. Padding steps are all zero.
pub fn episode_record(episode: &Episode, song_id: &str, annotation: &FingeringAnnotation) -> EpisodeRecord {
    episode_record_with_lookahead(episode, song_id, annotation, DEFAULT_LOOKAHEAD_STEPS)
}

/// As [`episode_record`] with `lookahead` goal steps (current step
/// included) per observation.
pub fn episode_record_with_lookahead(
    episode: &Episode,
    song_id: &str,
    annotation: &FingeringAnnotation,
    lookahead: usize,
) -> EpisodeRecord {
    let lookahead = lookahead.max(1);
    let obs_dim = ObservationLayout { lookahead }.len();
    let len = episode.length;
    let mut observations = vec![0.0f32; len * obs_dim];
    let mut rewards = vec![0.0f32; len];
    let hand_state = [0.0; HAND_STATE_DIM];
    for (t, step) in episode.steps.iter().enumerate() {
        let goal = goal_vector(&episode.goals, t, lookahead);
        let mut keys = KeyState::default();
        for k in step.pressed.iter() {
            keys.depth[k.index()] = 1.0;
        }
        keys.sustain = f64::from(u8::from(episode.goals.steps[t].sustain));
        let mut slots = [Point3::ZERO; crate::midi::FINGERTIP_SLOTS];
        for (f, p) in annotation.fingers.iter().zip(&step.fingertips_after) {
            slots[f.slot()] = *p;
        }
        let obs = assemble_observation(&goal, &keys, &slots, &hand_state)
            .expect("canonical components always fit the layout");
        for (dst, v) in observations[t * obs_dim..(t + 1) * obs_dim]
            .iter_mut()
            .zip(obs)
        {
            *dst = v as f32;
        }
        rewards[t] = step.reward.total as f32;
    }

    let trace = KeyPressTrace {
        steps: episode
            .steps
            .iter()
            .zip(&episode.goals.steps)
            .map(|(s, g)| TraceStep {
                pressed: s.pressed,
                active: g.active,
            })
            .collect(),
    };
    let mut config = serde_json::to_value(&annotation.snapshot).unwrap_or_default();
    if let Some(map) = config.as_object_mut() {
        map.insert("episode_len".into(), len.into());
        map.insert("start_step".into(), episode.start_step.into());
        map.insert("lookahead".into(), lookahead.into());
    }
    EpisodeRecord {
        steps: len,
        obs_dim,
        act_dim: ACTION_DIM,
        observations,
        actions: vec![0.0; len * ACTION_DIM],
        rewards,
        meta: EpisodeMeta {
            song_id: song_id.to_string(),
            chunk_index: episode.index as u32,
            f1: Some(trace.counts().f1()),
            embodiment: annotation.embodiment().to_string(),
            dt: episode.goals.dt,
            real_steps: episode.real_len() as u32,
            config,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand::{Digit, Hand};
    use crate::keyboard::key_for_pitch;

    fn seq_of(chords: &[&[usize]]) -> GoalSequence {
        let steps = chords
            .iter()
            .map(|c| GoalStep {
                active: c.iter().map(|&k| KeyIndex::new(k).unwrap()).collect(),
                sustain: false,
            })
            .collect();
        GoalSequence::new(steps, 0.05)
    }

    fn annotate(seq: &GoalSequence, hands: &HandConfig) -> Result<FingeringAnnotation, AnnotateError> {
        annotate_song(seq, hands, &KeyboardGeometry::default(), &AnnotateParams::default())
    }

    #[test]
    fn sustained_middle_c_converges() {
        let seq = seq_of(&vec![&[39usize][..]; 40]);
        let ann = annotate(&seq, &HandConfig::five_finger()).unwrap();
        for s in &ann.steps {
            assert_eq!(s.pairs.len(), 1);
            assert_eq!(s.pairs[0].0.index(), 39);
        }
        let last = ann.steps.last().unwrap();
        assert!(last.d_ot < 0.01);
        assert_eq!(last.reward.ot, 1.0);
        assert!(last.pressed.contains(KeyIndex::new(39).unwrap()));
        assert_eq!(ann.onsets.len(), 1);
    }

    #[test]
    fn empty_song() {
        let ann = annotate(&GoalSequence::empty(0.05), &HandConfig::five_finger()).unwrap();
        assert!(ann.steps.is_empty());
        let silent = annotate(&seq_of(&[&[], &[]]), &HandConfig::five_finger()).unwrap();
        assert!(silent.steps.iter().all(|s| s.pairs.is_empty() && s.d_ot == 0.0));
    }

    #[test]
    fn strict_rejects_oversized_chord() {
        let chord: Vec<usize> = (30..41).collect();
        let err = annotate(&seq_of(&[&chord]), &HandConfig::five_finger()).unwrap_err();
        assert_eq!(err, AnnotateError::Infeasible { step: 0, chord: 11, fingers: 10 });
        let params = AnnotateParams {
            policy: ChordPolicy::BestEffort,
            ..Default::default()
        };
        let ann = annotate_song(&seq_of(&[&chord]), &HandConfig::five_finger(), &KeyboardGeometry::default(), &params).unwrap();
        assert_eq!(ann.steps[0].pairs.len(), 10);
        assert_eq!(ann.steps[0].dropped.len(), 1);
        assert_eq!(ann.infeasible_steps(), 1);
    }

    #[test]
    fn chunking() {
        let seq = seq_of(&vec![&[39usize][..]; 1200]);
        let ann = annotate(&seq, &HandConfig::five_finger()).unwrap();
        let eps = chunk_episodes(&seq, &ann, 550).unwrap();
        assert_eq!(eps.len(), 3);
        assert!(eps.iter().all(|e| e.length == 550 && e.goals.len() == 550));
        assert_eq!(eps[2].real_len(), 100);
        assert_eq!(eps[2].padding(), 450);
        assert!(eps[2].goals.steps[100..].iter().all(|g| g.active.is_empty()));
        let rejoined: Vec<StepRecord> = eps.iter().flat_map(|e| e.steps.clone()).collect();
        assert_eq!(rejoined, ann.steps);
        let one = seq_of(&vec![&[39usize][..]; 550]);
        let ann1 = annotate(&one, &HandConfig::five_finger()).unwrap();
        let eps1 = chunk_episodes(&one, &ann1, 550).unwrap();
        assert_eq!(eps1.len(), 1);
        assert_eq!(eps1[0].padding(), 0);
        assert!(chunk_episodes(&one, &ann1, 0).is_err());
    }

    #[test]
    fn pig_export_labels() {
        // Labels follow whatever finger the step recorded for the key.
        let notes = vec![
            NoteEvent { pitch: 60, onset: 0.0, offset: 0.5, velocity: 80, channel: 0 },
        ];
        let mut ann = annotate(&seq_of(&[&[39usize][..]; 10]), &HandConfig::five_finger()).unwrap();
        ann.steps[0].pairs = vec![(key_for_pitch(60).unwrap(), FingerId::new(Hand::Right, Digit::Thumb))];
        let recs = annotation_to_pig(&ann, &notes).unwrap();
        assert_eq!(recs[0].finger, PigFinger::single(1));
        assert_eq!(recs[0].channel, 0);
        assert_eq!(recs[0].spelled_pitch, "C4");
        ann.steps[0].pairs = vec![(key_for_pitch(60).unwrap(), FingerId::new(Hand::Left, Digit::Little))];
        let recs = annotation_to_pig(&ann, &notes).unwrap();
        assert_eq!(recs[0].finger, PigFinger::single(-5));
        assert_eq!(recs[0].channel, 1);

        let empty = annotate(&GoalSequence::empty(0.05), &HandConfig::five_finger()).unwrap();
        assert!(annotation_to_pig(&empty, &[]).unwrap().is_empty());
        assert!(matches!(annotation_to_pig(&empty, &notes), Err(AnnotateError::UnlabeledNote { note: 0, pitch: 60 })));
    }

    #[test]
    fn text_round_trip() {
        let seq = seq_of(&[&[39, 43], &[], &[50]]);
        let ann = annotate(&seq, &HandConfig::four_finger()).unwrap();
        let text = ann.to_text();
        assert!(text.contains("# embodiment=four-finger"));
        let lines = parse_annotation_text(&text).unwrap();
        assert_eq!(lines.len(), 3);
        for (l, s) in lines.iter().zip(&ann.steps) {
            assert_eq!(l.pairs, s.pairs);
            assert_eq!(l.d_ot, s.d_ot);
        }
        assert!(lines[1].pairs.is_empty());
    }

    #[test]
    fn episode_record_shape() {
        let seq = seq_of(&vec![&[39usize][..]; 30]);
        let ann = annotate(&seq, &HandConfig::five_finger()).unwrap();
        let eps = chunk_episodes(&seq, &ann, 550).unwrap();
        let rec = episode_record(&eps[0], "song", &ann);
        assert!(rec.is_canonical());
        assert_eq!(rec.meta.real_steps, 30);
        let goals = rec.goal_sequence().unwrap();
        assert_eq!(&goals.steps[..30], &seq.steps[..]);
        assert!(goals.steps[30..].iter().all(|g| g.active.is_empty()));
    }
}
