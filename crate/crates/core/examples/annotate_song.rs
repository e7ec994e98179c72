//! Annotate a song with fingerings and inspect the result.
//!
//!     cargo run --example annotate_song [song.mid]

use otfinger::annotate::{annotate_song, annotation_to_pig, AnnotateParams};
use otfinger::hand::HandConfig;
use otfinger::keyboard::KeyboardGeometry;
use otfinger::midi::{encode_midi, parse_midi, write_pig, DiscretizeOptions, NoteEvent};

fn scale_with_chord() -> Vec<u8> {
    let mut notes: Vec<NoteEvent> = [72u8, 74, 76, 77, 79]
        .iter()
        .enumerate()
        .map(|(i, &pitch)| NoteEvent {
            pitch,
            onset: 0.25 * i as f64,
            offset: 0.25 * (i + 1) as f64,
            velocity: 70,
            channel: 0,
        })
        .collect();
    // Left-hand triad under the last note.
    for pitch in [48u8, 52, 55] {
        notes.push(NoteEvent { pitch, onset: 1.0, offset: 1.5, velocity: 60, channel: 1 });
    }
    encode_midi(&notes, &[])
}

fn main() {
    let bytes = match std::env::args().nth(1) {
        Some(path) => std::fs::read(&path).expect("readable MIDI file"),
        None => scale_with_chord(),
    };
    let parsed = parse_midi(&bytes).expect("valid MIDI");
    let goals = parsed.discretize(&DiscretizeOptions::default()).unwrap();

    let hands = HandConfig::five_finger();
    let geom = KeyboardGeometry::default();
    let ann = annotate_song(&goals, &hands, &geom, &AnnotateParams::default()).expect("chords fit");

    println!("{} steps, mean d_ot {:.4} m", ann.steps.len(), ann.mean_d_ot());
    for label in &ann.onsets {
        println!("step {:3}: key {:2} -> {}", label.step, label.key, label.finger);
    }
    let trace = ann.press_trace(&goals);
    println!("surrogate F1 = {:.3}", trace.counts().f1());

    let pig = annotation_to_pig(&ann, &parsed.notes).expect("every note labeled");
    print!("{}", write_pig(&pig));
}
