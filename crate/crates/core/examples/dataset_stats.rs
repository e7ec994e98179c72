//! Corpus statistics: key histogram, white-key fraction, F1 threshold fractions.
//!
//!     cargo run --example dataset_stats

use otfinger::keyboard::{KeyIndex, NUM_KEYS};
use otfinger::metrics::{dataset_stats, HistogramMode};
use otfinger::midi::{GoalSequence, GoalStep};

fn main() {
    // One piece that strikes every key once, one that holds middle C.
    let sweep = GoalSequence::new(
        (0..NUM_KEYS)
            .flat_map(|k| {
                [
                    GoalStep { active: [KeyIndex::new(k).unwrap()].into_iter().collect(), sustain: false },
                    GoalStep::default(),
                ]
            })
            .collect(),
        0.05,
    );
    let held = GoalSequence::new(
        vec![GoalStep { active: [KeyIndex::new(39).unwrap()].into_iter().collect(), sustain: true }; 40],
        0.05,
    );
    let pieces = [sweep, held];
    let f1 = [0.95, 0.7];

    for mode in [HistogramMode::Onsets, HistogramMode::Occupancy] {
        let s = dataset_stats(&pieces, Some(&f1), mode).unwrap();
        println!(
            "{mode:?}: {} counts, white fraction {:.4}, active key-steps per piece {:?}",
            s.total_count(),
            s.white_fraction,
            s.active_key_counts
        );
        for (t, v) in &s.fraction_f1_above {
            println!("  F1 >= {t}: {v}");
        }
    }
    println!("uniform sweep alone: white fraction = 52/88 = {:.4}", 52.0 / 88.0);
}
