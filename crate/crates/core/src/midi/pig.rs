//! PIG v1 fingering files: one note per line,
//! `id onset offset spelled_pitch onset_vel offset_vel channel finger`.
//! Channel 0 is the right hand, 1 the left. Fingers are 1..5, negative for
//! the left hand; a substitution is written `a_b`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PigError {
    #[error("line {line}: {reason}")]
    MalformedPigLine { line: usize, reason: String },
    #[error("bad spelled pitch {0:?}")]
    BadPitch(String),
}

/// A finger label, optionally with a substitution (`1_2`: strike with 1,
/// hold with 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PigFinger {
    pub strike: i8,
    pub substitute: Option<i8>,
}

impl PigFinger {
    pub fn single(finger: i8) -> Self {
        Self {
            strike: finger,
            substitute: None,
        }
    }
}

fn parse_digit(tok: &str) -> Option<i8> {
    let v: i8 = tok.parse().ok()?;
    (1..=5).contains(&v.unsigned_abs()).then_some(v)
}

impl FromStr for PigFinger {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad finger label {s:?}");
        match s.split_once('_') {
            Some((a, b)) => Ok(Self {
                strike: parse_digit(a).ok_or_else(bad)?,
                substitute: Some(parse_digit(b).ok_or_else(bad)?),
            }),
            None => Ok(Self::single(parse_digit(s).ok_or_else(bad)?)),
        }
    }
}

impl fmt::Display for PigFinger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.substitute {
            Some(s) => write!(f, "{}_{}", self.strike, s),
            None => write!(f, "{}", self.strike),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PigRecord {
    pub note_id: u64,
    pub onset: f64,
    pub offset: f64,
    pub spelled_pitch: String,
    pub onset_velocity: i32,
    pub offset_velocity: i32,
    pub channel: u8,
    pub finger: PigFinger,
}

impl PigRecord {
    pub fn pitch(&self) -> Result<u8, PigError> {
        spelled_to_midi(&self.spelled_pitch)
    }
}

/// Spelled pitch (`C4`, `F#3`, `Bb-1`) to MIDI number, with C4 = 60.
pub fn spelled_to_midi(name: &str) -> Result<u8, PigError> {
    let bad = || PigError::BadPitch(name.to_string());
    let mut chars = name.chars();
    let class: i32 = match chars.next().ok_or_else(bad)?.to_ascii_uppercase() {
        'C' => 0,
        'D' => 2,
        'E' => 4,
        'F' => 5,
        'G' => 7,
        'A' => 9,
        'B' => 11,
        _ => return Err(bad()),
    };
    let rest = chars.as_str();
    let octave_at = rest.find(|c: char| c == '-' || c.is_ascii_digit()).ok_or_else(bad)?;
    let (accidentals, octave) = rest.split_at(octave_at);
    let mut shift = 0;
    for c in accidentals.chars() {
        shift += match c {
            '#' => 1,
            'b' => -1,
            _ => return Err(bad()),
        };
    }
    let octave: i32 = octave.parse().map_err(|_| bad())?;
    let midi = 12 * (octave + 1) + class + shift;
    u8::try_from(midi).ok().filter(|&m| m <= 127).ok_or_else(bad)
}

/// MIDI number to a sharp-spelled name.
pub fn midi_to_spelled(pitch: u8) -> String {
    const NAMES: [&str; 12] = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];
    let octave = i32::from(pitch) / 12 - 1;
    format!("{}{}", NAMES[usize::from(pitch % 12)], octave)
}

pub fn parse_pig(text: &str) -> Result<Vec<PigRecord>, PigError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        let line_no = idx + 1;
        let bad = |reason: String| PigError::MalformedPigLine {
            line: line_no,
            reason,
        };
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 8 {
            return Err(bad(format!("expected 8 fields, found {}", cols.len())));
        }
        let num = |i: usize, what: &str| -> Result<f64, PigError> {
            cols[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("bad {what} {:?}", cols[i])))
        };
        let int = |i: usize, what: &str| -> Result<i64, PigError> {
            cols[i]
                .parse::<i64>()
                .map_err(|_| bad(format!("bad {what} {:?}", cols[i])))
        };
        let onset = num(1, "onset")?;
        let offset = num(2, "offset")?;
        if onset > offset {
            return Err(bad(format!("onset {onset} after offset {offset}")));
        }
        spelled_to_midi(cols[3]).map_err(|e| bad(e.to_string()))?;
        let channel = int(6, "channel")?;
        let channel = u8::try_from(channel).map_err(|_| bad(format!("bad channel {channel}")))?;
        out.push(PigRecord {
            note_id: int(0, "note id")?
                .try_into()
                .map_err(|_| bad("negative note id".into()))?,
            onset,
            offset,
            spelled_pitch: cols[3].to_string(),
            onset_velocity: int(4, "onset velocity")? as i32,
            offset_velocity: int(5, "offset velocity")? as i32,
            channel,
            finger: cols[7].parse().map_err(bad)?,
        });
    }
    Ok(out)
}

pub fn write_pig(records: &[PigRecord]) -> String {
    write_pig_with_header(records, &[])
}

/// Writes records in canonical tab-separated form, preceded by `//` comment
/// lines.
pub fn write_pig_with_header(records: &[PigRecord], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        for line in c.lines() {
            out.push_str("//");
            out.push_str(line);
            out.push('\n');
        }
    }
    for r in records {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.note_id,
            r.onset,
            r.offset,
            r.spelled_pitch,
            r.onset_velocity,
            r.offset_velocity,
            r.channel,
            r.finger
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_canonical_line() {
        let recs = parse_pig("//Version: PianoFingering_v170101\n0\t0.0\t0.5\tC4\t80\t80\t0\t1\n").unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.spelled_pitch, "C4");
        assert_eq!(r.pitch().unwrap(), 60);
        assert_eq!(r.finger, PigFinger::single(1));
        assert_eq!(r.channel, 0);
        assert_eq!((r.onset, r.offset), (0.0, 0.5));
    }

    #[test]
    fn substitution_preserved() {
        let text = "3\t1.25\t1.75\tEb4\t64\t70\t1\t-1_-2\n";
        let recs = parse_pig(text).unwrap();
        assert_eq!(recs[0].finger, PigFinger { strike: -1, substitute: Some(-2) });
        assert_eq!(write_pig(&recs), text);
    }

    #[test]
    fn malformed_lines_report_line_number() {
        let err = parse_pig("// header\n0\t0.0\t0.5\tC4\t80\t80\t0\n").unwrap_err();
        assert!(matches!(err, PigError::MalformedPigLine { line: 2, .. }));
        let err = parse_pig("0\t0.0\t0.5\tC4\t80\t80\t0\t7\n").unwrap_err();
        assert!(matches!(err, PigError::MalformedPigLine { line: 1, .. }));
        assert!(parse_pig("0\t0.6\t0.5\tC4\t80\t80\t0\t1\n").is_err());
        assert!(parse_pig("0\t0.0\t0.5\tH4\t80\t80\t0\t1\n").is_err());
    }

    #[test]
    fn spelled_pitch_table() {
        assert_eq!(spelled_to_midi("A0").unwrap(), 21);
        assert_eq!(spelled_to_midi("C8").unwrap(), 108);
        assert_eq!(spelled_to_midi("C#4").unwrap(), 61);
        assert_eq!(spelled_to_midi("Db4").unwrap(), 61);
        assert_eq!(spelled_to_midi("B#3").unwrap(), 60);
        assert_eq!(spelled_to_midi("C-1").unwrap(), 0);
        for p in 0..=127u8 {
            assert_eq!(spelled_to_midi(&midi_to_spelled(p)).unwrap(), p);
        }
    }
}
