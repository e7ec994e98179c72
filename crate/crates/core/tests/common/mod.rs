#![allow(dead_code)]

use std::path::Path;

use otfinger::keyboard::{KeyIndex, KeySet};
use otfinger::midi::{encode_midi, GoalSequence, GoalStep, NoteEvent};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn note(pitch: u8, onset: f64, offset: f64) -> NoteEvent {
    NoteEvent {
        pitch,
        onset,
        offset,
        velocity: 80,
        channel: 0,
    }
}

/// A short two-hand piece: a right-hand scale over left-hand whole notes.
pub fn two_hand_song() -> Vec<NoteEvent> {
    let mut notes: Vec<NoteEvent> = [72u8, 74, 76, 77, 79, 81, 83, 84]
        .iter()
        .enumerate()
        .map(|(i, &p)| note(p, 0.25 * i as f64, 0.25 * (i + 1) as f64))
        .collect();
    notes.push(note(48, 0.0, 1.0));
    notes.push(note(55, 1.0, 2.0));
    notes
}

pub fn write_midi(path: &Path, notes: &[NoteEvent]) {
    std::fs::write(path, encode_midi(notes, &[])).unwrap();
}

pub fn keys(ks: &[usize]) -> KeySet {
    ks.iter().map(|&k| KeyIndex::new(k).unwrap()).collect()
}

/// Random chord of `size` distinct keys.
pub fn random_chord(rng: &mut ChaCha8Rng, size: usize) -> KeySet {
    let mut set = KeySet::new();
    while set.len() < size {
        set.insert(KeyIndex::new(rng.gen_range(0..88)).unwrap());
    }
    set
}

/// Random goal sequence: held chords of up to `max_chord` keys, with rests.
pub fn random_goals(rng: &mut ChaCha8Rng, steps: usize, max_chord: usize) -> GoalSequence {
    let mut out = Vec::with_capacity(steps);
    while out.len() < steps {
        let hold = rng.gen_range(1..=8);
        let size = if rng.gen_bool(0.15) { 0 } else { rng.gen_range(1..=max_chord) };
        let active = random_chord(rng, size);
        let sustain = rng.gen_bool(0.3);
        for _ in 0..hold.min(steps - out.len()) {
            out.push(GoalStep { active, sustain });
        }
    }
    GoalSequence::new(out, 0.05)
}
