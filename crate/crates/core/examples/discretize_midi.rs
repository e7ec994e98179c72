//! Turn a MIDI file into per-step goals and lookahead goal vectors.
//!
//!     cargo run --example discretize_midi [song.mid]
//!
//! Without an argument a short C major arpeggio with pedal is synthesized.

use otfinger::midi::{
    discretize, encode_midi, goal_vector, parse_midi, DiscretizeOptions, NoteEvent, PedalEvent,
    DEFAULT_LOOKAHEAD_STEPS,
};

fn synth() -> Vec<u8> {
    let notes: Vec<NoteEvent> = [60u8, 64, 67, 72]
        .iter()
        .enumerate()
        .map(|(i, &pitch)| NoteEvent {
            pitch,
            onset: 0.5 + 0.2 * i as f64,
            offset: 0.7 + 0.2 * i as f64,
            velocity: 80,
            channel: 0,
        })
        .collect();
    let pedal = [
        PedalEvent { time: 0.5, value: 127, channel: 0 },
        PedalEvent { time: 1.0, value: 0, channel: 0 },
    ];
    encode_midi(&notes, &pedal)
}

fn main() {
    let bytes = match std::env::args().nth(1) {
        Some(path) => std::fs::read(&path).expect("readable MIDI file"),
        None => synth(),
    };
    let parsed = parse_midi(&bytes).expect("valid MIDI");
    for w in &parsed.warnings {
        eprintln!("warning: {w:?}");
    }
    let opts = DiscretizeOptions::default();
    let goals = discretize(&parsed.notes, &parsed.pedal, &opts).expect("valid options");

    println!("{} notes -> {} steps of {} s ({:.2} s)", parsed.notes.len(), goals.len(), goals.dt, goals.duration());
    println!("time map: t' = {} t - {}", goals.time_map.stretch, goals.time_map.shift);
    print!("{}", goals.to_text());

    let g = goal_vector(&goals, 0, DEFAULT_LOOKAHEAD_STEPS);
    let active: usize = g.bits().iter().map(|&b| usize::from(b)).sum();
    println!("goal vector at step 0: {} bits, {} set", g.len(), active);
}
