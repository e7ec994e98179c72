//! MIDI ingestion: note extraction with a tempo map, time discretization into
//! per-step goals, goal/observation vector encoding and PIG fingering files.

mod encode;
mod goal;
mod pig;

pub use encode::*;
pub use goal::*;
pub use pig::*;

use std::collections::{HashMap, VecDeque};

use midly::{Format, MetaMessage, MidiMessage, Smf, Timing, TrackEventKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keyboard::{HIGHEST_PITCH, LOWEST_PITCH};

/// Controller number of the damper (sustain) pedal.
pub const SUSTAIN_CONTROLLER: u8 = 64;
const DEFAULT_TEMPO_US: u32 = 500_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MidiError {
    #[error("malformed MIDI: {0}")]
    MalformedMidi(String),
    #[error("SMF format 2 (sequential tracks) is not supported")]
    UnsupportedFormat,
    #[error("note-off without a sounding note: channel {channel}, pitch {pitch} at {time:.6}s")]
    UnmatchedNoteOff { channel: u8, pitch: u8, time: f64 },
    #[error("song contains no notes")]
    EmptySong,
    #[error("invalid discretization parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoteEvent {
    pub pitch: u8,
    /// Seconds.
    pub onset: f64,
    /// Seconds, strictly after `onset`.
    pub offset: f64,
    pub velocity: u8,
    pub channel: u8,
}

/// A sustain pedal controller change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedalEvent {
    pub time: f64,
    pub value: u8,
    pub channel: u8,
}

impl PedalEvent {
    pub fn is_down(&self) -> bool {
        self.value >= 64
    }
}

/// Non-fatal irregularities found while parsing.
#[derive(Debug, Clone, PartialEq)]
pub enum MidiWarning {
    UnmatchedNoteOff { channel: u8, pitch: u8, time: f64 },
    /// A note-on never released; closed at the end of the song.
    UnterminatedNote { channel: u8, pitch: u8, onset: f64 },
    OutOfRange { pitch: u8, onset: f64 },
    ZeroLength { pitch: u8, onset: f64 },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedMidi {
    /// Sorted by onset, then pitch.
    pub notes: Vec<NoteEvent>,
    /// Sorted by time.
    pub pedal: Vec<PedalEvent>,
    pub warnings: Vec<MidiWarning>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Turn unmatched note-offs into an error instead of a warning.
    pub strict_note_off: bool,
}

/// Converts absolute ticks to seconds under a merged tempo map.
struct TempoMap {
    /// (tick, seconds at tick, seconds per tick from here on)
    segments: Vec<(u64, f64, f64)>,
}

impl TempoMap {
    fn metrical(ticks_per_beat: u16, mut changes: Vec<(u64, u32)>) -> Self {
        changes.sort_by_key(|&(tick, _)| tick);
        let tpb = f64::from(ticks_per_beat);
        let per_tick = |tempo: u32| f64::from(tempo) * 1e-6 / tpb;
        let mut segments = vec![(0u64, 0.0, per_tick(DEFAULT_TEMPO_US))];
        for (tick, tempo) in changes {
            let &(t0, s0, spt) = segments.last().unwrap();
            let seconds = s0 + (tick - t0) as f64 * spt;
            if tick == t0 {
                segments.pop();
            }
            segments.push((tick, seconds, per_tick(tempo)));
        }
        Self { segments }
    }

    fn fixed(seconds_per_tick: f64) -> Self {
        Self {
            segments: vec![(0, 0.0, seconds_per_tick)],
        }
    }

    fn seconds(&self, tick: u64) -> f64 {
        let idx = self.segments.partition_point(|&(t, _, _)| t <= tick) - 1;
        let (t0, s0, spt) = self.segments[idx];
        s0 + (tick - t0) as f64 * spt
    }
}

enum RawEvent {
    On { channel: u8, pitch: u8, velocity: u8 },
    Off { channel: u8, pitch: u8 },
    Pedal { channel: u8, value: u8 },
}

pub fn parse_midi(bytes: &[u8]) -> Result<ParsedMidi, MidiError> {
    parse_midi_with(bytes, ParseOptions::default())
}

/// Parses an SMF 0/1 file into notes and sustain pedal events.
///
/// Note-on/note-off pairs are matched first-in-first-out per (channel, pitch)
/// over the tick-ordered merge of all tracks. A note-on with velocity 0 is a
/// note-off. Notes outside the 88-key range are dropped with a warning.
pub fn parse_midi_with(bytes: &[u8], opts: ParseOptions) -> Result<ParsedMidi, MidiError> {
    let smf = Smf::parse(bytes).map_err(|e| MidiError::MalformedMidi(e.to_string()))?;
    if smf.header.format == Format::Sequential {
        return Err(MidiError::UnsupportedFormat);
    }

    let mut tempo_changes = Vec::new();
    // (tick, track, ordinal, event)
    let mut events: Vec<(u64, usize, usize, RawEvent)> = Vec::new();
    let mut last_tick = 0u64;
    for (track_idx, track) in smf.tracks.iter().enumerate() {
        let mut tick = 0u64;
        for (ord, ev) in track.iter().enumerate() {
            tick += u64::from(ev.delta.as_int());
            last_tick = last_tick.max(tick);
            let raw = match ev.kind {
                TrackEventKind::Meta(MetaMessage::Tempo(t)) => {
                    tempo_changes.push((tick, t.as_int()));
                    continue;
                }
                TrackEventKind::Midi { channel, message } => {
                    let channel = channel.as_int();
                    match message {
                        MidiMessage::NoteOn { key, vel } if vel.as_int() > 0 => RawEvent::On {
                            channel,
                            pitch: key.as_int(),
                            velocity: vel.as_int(),
                        },
                        MidiMessage::NoteOn { key, .. } | MidiMessage::NoteOff { key, .. } => {
                            RawEvent::Off {
                                channel,
                                pitch: key.as_int(),
                            }
                        }
                        MidiMessage::Controller { controller, value }
                            if controller.as_int() == SUSTAIN_CONTROLLER =>
                        {
                            RawEvent::Pedal {
                                channel,
                                value: value.as_int(),
                            }
                        }
                        _ => continue,
                    }
                }
                _ => continue,
            };
            events.push((tick, track_idx, ord, raw));
        }
    }
    events.sort_by_key(|&(tick, track, ord, _)| (tick, track, ord));

    let tempo = match smf.header.timing {
        Timing::Metrical(tpb) => {
            let tpb = tpb.as_int();
            if tpb == 0 {
                return Err(MidiError::MalformedMidi("zero ticks per beat".into()));
            }
            TempoMap::metrical(tpb, tempo_changes)
        }
        Timing::Timecode(fps, sub) => {
            let rate = f64::from(fps.as_f32()) * f64::from(sub);
            if rate <= 0.0 {
                return Err(MidiError::MalformedMidi("zero timecode resolution".into()));
            }
            TempoMap::fixed(1.0 / rate)
        }
    };

    let mut out = ParsedMidi::default();
    let mut open: HashMap<(u8, u8), VecDeque<(f64, u8)>> = HashMap::new();
    let push_note = |out: &mut ParsedMidi, pitch: u8, onset: f64, offset: f64, velocity, channel| {
        if !(LOWEST_PITCH..=HIGHEST_PITCH).contains(&pitch) {
            log::warn!("dropping pitch {pitch} outside the keyboard at {onset:.3}s");
            out.warnings.push(MidiWarning::OutOfRange { pitch, onset });
        } else if offset <= onset {
            out.warnings.push(MidiWarning::ZeroLength { pitch, onset });
        } else {
            out.notes.push(NoteEvent {
                pitch,
                onset,
                offset,
                velocity,
                channel,
            });
        }
    };

    for (tick, _, _, ev) in events {
        let time = tempo.seconds(tick);
        match ev {
            RawEvent::On {
                channel,
                pitch,
                velocity,
            } => open
                .entry((channel, pitch))
                .or_default()
                .push_back((time, velocity)),
            RawEvent::Off { channel, pitch } => {
                match open.get_mut(&(channel, pitch)).and_then(VecDeque::pop_front) {
                    Some((onset, velocity)) => {
                        push_note(&mut out, pitch, onset, time, velocity, channel)
                    }
                    None => {
                        if opts.strict_note_off {
                            return Err(MidiError::UnmatchedNoteOff {
                                channel,
                                pitch,
                                time,
                            });
                        }
                        log::warn!("unmatched note-off ch {channel} pitch {pitch} at {time:.3}s");
                        out.warnings.push(MidiWarning::UnmatchedNoteOff {
                            channel,
                            pitch,
                            time,
                        });
                    }
                }
            }
            RawEvent::Pedal { channel, value } => out.pedal.push(PedalEvent {
                time,
                value,
                channel,
            }),
        }
    }

    let end = tempo.seconds(last_tick);
    let mut dangling: Vec<_> = open
        .into_iter()
        .flat_map(|((channel, pitch), q)| q.into_iter().map(move |(on, vel)| (channel, pitch, on, vel)))
        .collect();
    dangling.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    for (channel, pitch, onset, velocity) in dangling {
        out.warnings.push(MidiWarning::UnterminatedNote {
            channel,
            pitch,
            onset,
        });
        push_note(&mut out, pitch, onset, end, velocity, channel);
    }

    out.notes.sort_by(|a, b| {
        a.onset
            .total_cmp(&b.onset)
            .then(a.pitch.cmp(&b.pitch))
            .then(a.offset.total_cmp(&b.offset))
            .then(a.channel.cmp(&b.channel))
    });
    Ok(out)
}

#[cfg(test)]
pub(crate) mod testutil {
    use midly::num::{u15, u24, u28, u4, u7};
    use midly::{Format, Header, MetaMessage, MidiMessage, Smf, Timing, TrackEvent, TrackEventKind};

    /// (delta ticks, event) helpers for building SMF bytes in tests.
    pub enum Ev {
        On(u8, u8),
        Off(u8),
        Pedal(u8),
        Tempo(u32),
    }

    pub fn smf_bytes(tpb: u16, tracks: &[Vec<(u32, Ev)>]) -> Vec<u8> {
        let mut smf = Smf::new(Header::new(
            if tracks.len() == 1 {
                Format::SingleTrack
            } else {
                Format::Parallel
            },
            Timing::Metrical(u15::new(tpb)),
        ));
        for t in tracks {
            let mut track = Vec::new();
            for (delta, ev) in t {
                let kind = match *ev {
                    Ev::On(p, v) => TrackEventKind::Midi {
                        channel: u4::new(0),
                        message: MidiMessage::NoteOn {
                            key: u7::new(p),
                            vel: u7::new(v),
                        },
                    },
                    Ev::Off(p) => TrackEventKind::Midi {
                        channel: u4::new(0),
                        message: MidiMessage::NoteOff {
                            key: u7::new(p),
                            vel: u7::new(64),
                        },
                    },
                    Ev::Pedal(v) => TrackEventKind::Midi {
                        channel: u4::new(0),
                        message: MidiMessage::Controller {
                            controller: u7::new(64),
                            value: u7::new(v),
                        },
                    },
                    Ev::Tempo(t) => TrackEventKind::Meta(MetaMessage::Tempo(u24::new(t))),
                };
                track.push(TrackEvent {
                    delta: u28::new(*delta),
                    kind,
                });
            }
            track.push(TrackEvent {
                delta: u28::new(0),
                kind: TrackEventKind::Meta(MetaMessage::EndOfTrack),
            });
            smf.tracks.push(track);
        }
        let mut out = Vec::new();
        smf.write_std(&mut out).unwrap();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::{smf_bytes, Ev};
    use super::*;

    #[test]
    fn one_beat_at_120_bpm() {
        let bytes = smf_bytes(480, &[vec![(0, Ev::On(60, 90)), (480, Ev::Off(60))]]);
        let parsed = parse_midi(&bytes).unwrap();
        assert_eq!(
            parsed.notes,
            vec![NoteEvent {
                pitch: 60,
                onset: 0.0,
                offset: 0.5,
                velocity: 90,
                channel: 0
            }]
        );
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn empty_track() {
        let bytes = smf_bytes(480, &[vec![]]);
        let parsed = parse_midi(&bytes).unwrap();
        assert!(parsed.notes.is_empty());
        assert!(parsed.pedal.is_empty());
    }

    #[test]
    fn overlapping_same_pitch_is_fifo() {
        // on@0, on@240, off@480, off@960 -> [0, 0.5) and [0.25, 1.0)
        let bytes = smf_bytes(
            480,
            &[vec![
                (0, Ev::On(64, 80)),
                (240, Ev::On(64, 70)),
                (240, Ev::Off(64)),
                (480, Ev::Off(64)),
            ]],
        );
        let notes = parse_midi(&bytes).unwrap().notes;
        assert_eq!(notes.len(), 2);
        assert_eq!((notes[0].onset, notes[0].offset, notes[0].velocity), (0.0, 0.5, 80));
        assert_eq!((notes[1].onset, notes[1].offset, notes[1].velocity), (0.25, 1.0, 70));
    }

    #[test]
    fn tempo_change_in_conductor_track() {
        // Track 0 switches to 60 bpm at beat 1; track 1 holds a note from
        // beat 0 to beat 2: 0.5 s + 1.0 s.
        let bytes = smf_bytes(
            100,
            &[
                vec![(0, Ev::Tempo(500_000)), (100, Ev::Tempo(1_000_000))],
                vec![(0, Ev::On(60, 100)), (200, Ev::Off(60))],
            ],
        );
        let notes = parse_midi(&bytes).unwrap().notes;
        assert_eq!(notes.len(), 1);
        assert!((notes[0].offset - 1.5).abs() < 1e-12);
    }

    #[test]
    fn unmatched_note_off_warns_or_errors() {
        let bytes = smf_bytes(480, &[vec![(0, Ev::Off(60)), (0, Ev::On(62, 80)), (480, Ev::Off(62))]]);
        let parsed = parse_midi(&bytes).unwrap();
        assert_eq!(parsed.notes.len(), 1);
        assert!(matches!(parsed.warnings[0], MidiWarning::UnmatchedNoteOff { pitch: 60, .. }));
        let strict = parse_midi_with(&bytes, ParseOptions { strict_note_off: true });
        assert!(matches!(strict, Err(MidiError::UnmatchedNoteOff { pitch: 60, .. })));
    }

    #[test]
    fn out_of_range_dropped_and_pedal_kept() {
        let bytes = smf_bytes(
            480,
            &[vec![
                (0, Ev::Pedal(127)),
                (0, Ev::On(12, 80)),
                (0, Ev::On(60, 80)),
                (480, Ev::Off(12)),
                (0, Ev::Off(60)),
                (0, Ev::Pedal(0)),
            ]],
        );
        let parsed = parse_midi(&bytes).unwrap();
        assert_eq!(parsed.notes.len(), 1);
        assert_eq!(parsed.notes[0].pitch, 60);
        assert!(matches!(parsed.warnings[0], MidiWarning::OutOfRange { pitch: 12, .. }));
        assert_eq!(parsed.pedal.len(), 2);
        assert!(parsed.pedal[0].is_down() && !parsed.pedal[1].is_down());
    }

    #[test]
    fn dangling_note_closed_at_end() {
        let bytes = smf_bytes(480, &[vec![(0, Ev::On(60, 80)), (960, Ev::Pedal(0))]]);
        let parsed = parse_midi(&bytes).unwrap();
        assert_eq!(parsed.notes[0].offset, 1.0);
        assert!(matches!(parsed.warnings[0], MidiWarning::UnterminatedNote { .. }));
    }

    #[test]
    fn garbage_is_malformed() {
        assert!(matches!(parse_midi(b"not a midi file"), Err(MidiError::MalformedMidi(_))));
    }
}
