//! Cross-embodiment: annotate the same chords with and without little fingers.
//!
//!     cargo run --example four_finger

use otfinger::annotate::{annotate_song, AnnotateParams, ChordPolicy};
use otfinger::hand::{Digit, HandConfig};
use otfinger::keyboard::{KeyIndex, KeyboardGeometry};
use otfinger::midi::{GoalSequence, GoalStep};

fn chord(keys: impl IntoIterator<Item = usize>, steps: usize) -> GoalSequence {
    let active = keys.into_iter().map(|k| KeyIndex::new(k).unwrap()).collect();
    GoalSequence::new(vec![GoalStep { active, sustain: false }; steps], 0.05)
}

fn main() {
    let geom = KeyboardGeometry::default();
    let strict = AnnotateParams::default();
    let four = HandConfig::four_finger();
    println!("{}: {} fingers enabled", four.name, four.enabled_count());

    // Eight keys spread over both hands: fine with four fingers each.
    let eight = chord([20, 22, 24, 26, 44, 46, 48, 50], 20);
    let ann = annotate_song(&eight, &four, &geom, &strict).unwrap();
    let last = ann.steps.last().unwrap();
    for (key, finger) in &last.pairs {
        assert_ne!(finger.digit, Digit::Little);
        println!("key {key:2} -> {finger}");
    }

    // Nine keys need a ninth finger.
    let nine = chord([20, 22, 24, 26, 28, 44, 46, 48, 50], 1);
    match annotate_song(&nine, &four, &geom, &strict) {
        Err(e) => println!("strict: {e}"),
        Ok(_) => unreachable!(),
    }
    let lenient = AnnotateParams { policy: ChordPolicy::BestEffort, ..strict };
    let ann = annotate_song(&nine, &four, &geom, &lenient).unwrap();
    println!("best effort dropped keys {:?}", ann.steps[0].dropped);

    // Custom embodiments come from TOML.
    let custom = HandConfig::from_config_str("name = \"no-thumbs\"\ndisabled = [\"left_thumb\", \"right_thumb\"]\n").unwrap();
    println!("{}: {} fingers", custom.name, custom.enabled_count());
}
