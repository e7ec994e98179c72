//! Read, write and compare PIG fingering files.
//!
//!     cargo run --example pig_roundtrip [fingering.txt]

use otfinger::metrics::fingering_agreement;
use otfinger::midi::{parse_pig, write_pig};

const SAMPLE: &str = "//Version: PianoFingering_v170101
0\t0.000000\t0.250000\tC4\t80\t64\t0\t1
1\t0.250000\t0.500000\tD4\t80\t64\t0\t2
2\t0.500000\t0.750000\tE4\t80\t64\t0\t3
3\t0.000000\t0.750000\tC3\t70\t64\t1\t-5
4\t0.750000\t1.000000\tF#4\t75\t64\t0\t4_3
";

fn main() {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path).expect("readable PIG file"),
        None => SAMPLE.to_string(),
    };
    let records = parse_pig(&text).expect("well-formed PIG");
    for r in &records {
        println!("{:>3} {:>5} pitch {:3} finger {}", r.note_id, r.spelled_pitch, r.pitch().unwrap(), r.finger);
    }

    let written = write_pig(&records);
    assert_eq!(parse_pig(&written).unwrap(), records);

    // A second annotator who disagrees on one note.
    let mut other = records.clone();
    other[1].finger.strike = 3;
    let report = fingering_agreement(&records, &other, 0.05).unwrap();
    println!("agreement {:.3} over {} matched notes", report.agreement, report.matched);
}
