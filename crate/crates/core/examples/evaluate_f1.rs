//! Key-press precision, recall and F1.
//!
//!     cargo run --example evaluate_f1

use otfinger::keyboard::{KeyIndex, KeySet};
use otfinger::metrics::{f1, precision_recall, KeyPressTrace, TraceStep};

fn keys(ks: &[usize]) -> KeySet {
    ks.iter().map(|&k| KeyIndex::new(k).unwrap()).collect()
}

fn main() {
    let trace = KeyPressTrace {
        steps: vec![
            TraceStep { pressed: keys(&[39, 43]), active: keys(&[39, 43]) },
            TraceStep { pressed: keys(&[39, 44]), active: keys(&[39, 43]) },
            TraceStep { pressed: keys(&[]), active: keys(&[46]) },
            TraceStep { pressed: keys(&[]), active: keys(&[]) },
        ],
    };
    let (p, r) = precision_recall(&trace);
    println!("precision {p:.3}, recall {r:.3}, F1 {:.3}", f1(p, r));

    let c = trace.counts();
    println!("hits {} / pressed {} / active {}", c.hits, c.pressed, c.active);
    println!("f1(1, 1) = {}, f1(1, 0.5) = {:.4}", f1(1.0, 1.0), f1(1.0, 0.5));
}
