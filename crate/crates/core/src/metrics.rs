//! Key-press precision/recall/F1, fingering agreement against human labels
//! and corpus statistics.
//!
//! Precision and recall are micro-averaged: hit, press and goal counts are
//! summed over all steps before dividing. Empty denominators count as
//! perfect (nothing pressed gives precision 1, nothing active gives recall 1).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keyboard::{is_black, KeyIndex, KeySet, NUM_KEYS};
use crate::midi::{GoalSequence, PigRecord};

/// Default key depth at which a key counts as pressed.
pub const DEFAULT_PRESS_THRESHOLD: f64 = 0.5;
/// F1 thresholds reported by [`dataset_stats`].
pub const F1_THRESHOLDS: [f64; 2] = [0.5, 0.75];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no notes could be matched between the two fingerings")]
    NoOverlap,
    #[error("no input pieces")]
    NoSources,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraceStep {
    pub pressed: KeySet,
    pub active: KeySet,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyPressTrace {
    pub steps: Vec<TraceStep>,
}

/// Summed counts; merging partial counts is associative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PressCounts {
    pub hits: u64,
    pub pressed: u64,
    pub active: u64,
}

impl PressCounts {
    pub fn add_step(&mut self, step: &TraceStep) {
        self.hits += step.pressed.intersection(&step.active).len() as u64;
        self.pressed += step.pressed.len() as u64;
        self.active += step.active.len() as u64;
    }

    pub fn merge(self, other: PressCounts) -> PressCounts {
        PressCounts {
            hits: self.hits + other.hits,
            pressed: self.pressed + other.pressed,
            active: self.active + other.active,
        }
    }

    pub fn precision(&self) -> f64 {
        if self.pressed == 0 {
            1.0
        } else {
            self.hits as f64 / self.pressed as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.active == 0 {
            1.0
        } else {
            self.hits as f64 / self.active as f64
        }
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }
}

impl KeyPressTrace {
    pub fn counts(&self) -> PressCounts {
        let mut c = PressCounts::default();
        for s in &self.steps {
            c.add_step(s);
        }
        c
    }
}

/// Micro-averaged (precision, recall) over the whole trace.
pub fn precision_recall(trace: &KeyPressTrace) -> (f64, f64) {
    let c = trace.counts();
    (c.precision(), c.recall())
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    let denom = precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / denom
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    /// Agreeing / matched.
    pub agreement: f64,
    pub matched: usize,
    pub agreeing: usize,
    pub unmatched_ours: usize,
    pub unmatched_human: usize,
}

/// Fraction of notes, matched by pitch and onset (within `onset_tol`
/// seconds), whose striking finger is the same in both files.
pub fn fingering_agreement(
    ours: &[PigRecord],
    human: &[PigRecord],
    onset_tol: f64,
) -> Result<AgreementReport, MetricsError> {
    let human_pitch: Vec<Option<u8>> = human.iter().map(|r| r.pitch().ok()).collect();
    let mut used = vec![false; human.len()];
    let (mut matched, mut agreeing) = (0, 0);
    for r in ours {
        let Ok(pitch) = r.pitch() else { continue };
        let best = human
            .iter()
            .enumerate()
            .filter(|(i, h)| {
                !used[*i] && human_pitch[*i] == Some(pitch) && (h.onset - r.onset).abs() <= onset_tol
            })
            .min_by(|a, b| {
                (a.1.onset - r.onset)
                    .abs()
                    .total_cmp(&(b.1.onset - r.onset).abs())
            })
            .map(|(i, _)| i);
        if let Some(i) = best {
            used[i] = true;
            matched += 1;
            if human[i].finger.strike == r.finger.strike {
                agreeing += 1;
            }
        }
    }
    if matched == 0 {
        return Err(MetricsError::NoOverlap);
    }
    Ok(AgreementReport {
        agreement: agreeing as f64 / matched as f64,
        matched,
        agreeing,
        unmatched_ours: ours.len() - matched,
        unmatched_human: human.len() - matched,
    })
}

/// What the key histogram counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HistogramMode {
    /// One count per key activation (note onset at goal resolution).
    #[default]
    Onsets,
    /// One count per active step.
    Occupancy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub key_histogram: Vec<u64>,
    pub white_fraction: f64,
    /// Per piece, the number of (step, key) goal activations.
    pub active_key_counts: Vec<u64>,
    pub f1_distribution: Vec<f64>,
    /// Threshold -> fraction of pieces with F1 >= threshold, keyed by the
    /// threshold's decimal string.
    pub fraction_f1_above: BTreeMap<String, f64>,
    pub mode: HistogramMode,
}

impl DatasetStats {
    pub fn fraction_above(&self, threshold: f64) -> Option<f64> {
        self.fraction_f1_above.get(&threshold.to_string()).copied()
    }

    pub fn total_count(&self) -> u64 {
        self.key_histogram.iter().sum()
    }
}

/// Partial statistics; `merge` is associative so pieces can be folded by
/// parallel workers.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsAccumulator {
    mode: HistogramMode,
    histogram: [u64; NUM_KEYS],
    active_key_counts: Vec<u64>,
    f1: Vec<f64>,
}

impl StatsAccumulator {
    pub fn new(mode: HistogramMode) -> Self {
        Self {
            mode,
            histogram: [0; NUM_KEYS],
            active_key_counts: Vec::new(),
            f1: Vec::new(),
        }
    }

    pub fn add_piece(&mut self, goals: &GoalSequence) {
        for t in 0..goals.len() {
            let keys = match self.mode {
                HistogramMode::Onsets => goals.onsets_at(t),
                HistogramMode::Occupancy => goals.steps[t].active,
            };
            for k in keys.iter() {
                self.histogram[k.index()] += 1;
            }
        }
        self.active_key_counts.push(goals.active_key_steps() as u64);
    }

    pub fn add_f1(&mut self, score: f64) {
        self.f1.push(score);
    }

    pub fn merge(mut self, other: StatsAccumulator) -> StatsAccumulator {
        for (a, b) in self.histogram.iter_mut().zip(other.histogram) {
            *a += b;
        }
        self.active_key_counts.extend(other.active_key_counts);
        self.f1.extend(other.f1);
        self
    }

    pub fn finish(self) -> DatasetStats {
        let total: u64 = self.histogram.iter().sum();
        let white: u64 = KeyIndex::all()
            .filter(|&k| !is_black(k))
            .map(|k| self.histogram[k.index()])
            .sum();
        let white_fraction = if total == 0 { 0.0 } else { white as f64 / total as f64 };
        let mut fraction_f1_above = BTreeMap::new();
        if !self.f1.is_empty() {
            for th in F1_THRESHOLDS {
                let n = self.f1.iter().filter(|&&s| s >= th).count();
                fraction_f1_above.insert(th.to_string(), n as f64 / self.f1.len() as f64);
            }
        }
        DatasetStats {
            key_histogram: self.histogram.to_vec(),
            white_fraction,
            active_key_counts: self.active_key_counts,
            f1_distribution: self.f1,
            fraction_f1_above,
            mode: self.mode,
        }
    }
}

/// Aggregates statistics over pieces, one goal sequence per piece.
pub fn dataset_stats<I>(
    pieces: I,
    f1_scores: Option<&[f64]>,
    mode: HistogramMode,
) -> Result<DatasetStats, MetricsError>
where
    I: IntoIterator,
    I::Item: std::borrow::Borrow<GoalSequence>,
{
    use std::borrow::Borrow;
    let mut acc = StatsAccumulator::new(mode);
    let mut any = false;
    for piece in pieces {
        acc.add_piece(piece.borrow());
        any = true;
    }
    if !any {
        return Err(MetricsError::NoSources);
    }
    for &s in f1_scores.unwrap_or(&[]) {
        acc.add_f1(s);
    }
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::midi::{GoalStep, PigFinger};

    fn set(keys: &[usize]) -> KeySet {
        keys.iter().map(|&k| KeyIndex::new(k).unwrap()).collect()
    }

    #[test]
    fn precision_recall_cases() {
        let perfect = KeyPressTrace {
            steps: vec![TraceStep { pressed: set(&[1, 2]), active: set(&[1, 2]) }],
        };
        assert_eq!(precision_recall(&perfect), (1.0, 1.0));
        let half = KeyPressTrace {
            steps: vec![TraceStep { pressed: set(&[1]), active: set(&[1, 2]) }],
        };
        assert_eq!(precision_recall(&half), (1.0, 0.5));
        let idle = KeyPressTrace {
            steps: vec![TraceStep { pressed: set(&[]), active: set(&[5]) }],
        };
        assert_eq!(precision_recall(&idle), (1.0, 0.0));
        let silent = KeyPressTrace {
            steps: vec![TraceStep::default()],
        };
        assert_eq!(precision_recall(&silent), (1.0, 1.0));
    }

    #[test]
    fn f1_values() {
        assert_eq!(f1(1.0, 1.0), 1.0);
        assert!((f1(1.0, 0.5) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1(0.0, 0.0), 0.0);
    }

    fn pig(id: u64, onset: f64, pitch: &str, finger: i8) -> PigRecord {
        PigRecord {
            note_id: id,
            onset,
            offset: onset + 0.5,
            spelled_pitch: pitch.into(),
            onset_velocity: 64,
            offset_velocity: 64,
            channel: if finger > 0 { 0 } else { 1 },
            finger: PigFinger::single(finger),
        }
    }

    #[test]
    fn agreement() {
        let human = vec![pig(0, 0.0, "C4", 1), pig(1, 0.5, "D4", 2), pig(2, 1.0, "E4", 3), pig(3, 1.5, "F4", 4)];
        assert_eq!(fingering_agreement(&human, &human, 0.01).unwrap().agreement, 1.0);
        let mut ours = human.clone();
        for r in &mut ours {
            r.finger = PigFinger::single(5);
        }
        assert_eq!(fingering_agreement(&ours, &human, 0.01).unwrap().agreement, 0.0);
        ours = human.clone();
        ours[3].finger = PigFinger::single(1);
        ours.push(pig(4, 9.0, "C5", 1));
        let rep = fingering_agreement(&ours, &human, 0.01).unwrap();
        assert_eq!(rep.agreement, 0.75);
        assert_eq!((rep.matched, rep.unmatched_ours, rep.unmatched_human), (4, 1, 0));
        // enharmonic spellings match
        let flat = vec![pig(0, 0.0, "Db4", 2)];
        let sharp = vec![pig(0, 0.004, "C#4", 2)];
        assert_eq!(fingering_agreement(&flat, &sharp, 0.01).unwrap().agreement, 1.0);
        assert_eq!(fingering_agreement(&flat, &human, 0.01), Err(MetricsError::NoOverlap));
    }

    #[test]
    fn stats_single_onset() {
        let mut steps = vec![GoalStep::default(); 4];
        for s in &mut steps {
            s.active = set(&[39]);
        }
        let seq = GoalSequence::new(steps, 0.05);
        let st = dataset_stats([&seq], None, HistogramMode::Onsets).unwrap();
        assert_eq!(st.key_histogram[39], 1);
        assert_eq!(st.total_count(), 1);
        assert_eq!(st.white_fraction, 1.0);
        assert_eq!(st.active_key_counts, vec![4]);
        let occ = dataset_stats([&seq], None, HistogramMode::Occupancy).unwrap();
        assert_eq!(occ.key_histogram[39], 4);
    }

    #[test]
    fn stats_f1_thresholds() {
        let seq = GoalSequence::new(vec![GoalStep::default()], 0.05);
        let st = dataset_stats([&seq], Some(&[0.8, 0.6, 0.4]), HistogramMode::Onsets).unwrap();
        assert!((st.fraction_above(0.75).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((st.fraction_above(0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(st.white_fraction, 0.0);
        let none: [&GoalSequence; 0] = [];
        assert_eq!(dataset_stats(none, None, HistogramMode::Onsets), Err(MetricsError::NoSources));
    }

    #[test]
    fn accumulator_merge_matches_sequential() {
        let a = GoalSequence::new(vec![GoalStep { active: set(&[1, 2]), sustain: false }], 0.05);
        let b = GoalSequence::new(vec![GoalStep { active: set(&[3]), sustain: true }], 0.05);
        let mut left = StatsAccumulator::new(HistogramMode::Onsets);
        left.add_piece(&a);
        let mut right = StatsAccumulator::new(HistogramMode::Onsets);
        right.add_piece(&b);
        let merged = left.merge(right).finish();
        let seq = dataset_stats([&a, &b], None, HistogramMode::Onsets).unwrap();
        assert_eq!(merged, seq);
    }
}
