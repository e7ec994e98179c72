use midly::num::{u15, u28, u4, u7};
use midly::{Format, Header, MetaMessage, MidiMessage, Smf, Timing, TrackEvent, TrackEventKind};

use super::{NoteEvent, PedalEvent, SUSTAIN_CONTROLLER};

/// Ticks per quarter note of files written by [`encode_midi`].
pub const ENCODE_TICKS_PER_BEAT: u16 = 480;
/// At the default 120 bpm.
const TICKS_PER_SECOND: f64 = 960.0;

/// Writes notes and pedal changes as a single-track SMF at 120 bpm.
///
/// Times are rounded to the nearest tick (about 1 ms). Releases sort before
/// pedal changes, which sort before presses at the same tick, so a key
/// re-struck exactly at its release time round-trips as two notes.
pub fn encode_midi(notes: &[NoteEvent], pedal: &[PedalEvent]) -> Vec<u8> {
    let tick = |s: f64| (s.max(0.0) * TICKS_PER_SECOND).round() as u64;
    // (tick, order, kind)
    let mut events: Vec<(u64, u8, TrackEventKind<'static>)> = Vec::new();
    for n in notes {
        let channel = u4::new(n.channel & 0x0f);
        let key = u7::new(n.pitch & 0x7f);
        events.push((
            tick(n.onset),
            2,
            TrackEventKind::Midi {
                channel,
                message: MidiMessage::NoteOn {
                    key,
                    vel: u7::new(n.velocity.clamp(1, 127)),
                },
            },
        ));
        events.push((
            tick(n.offset),
            0,
            TrackEventKind::Midi {
                channel,
                message: MidiMessage::NoteOff { key, vel: u7::new(64) },
            },
        ));
    }
    for p in pedal {
        events.push((
            tick(p.time),
            1,
            TrackEventKind::Midi {
                channel: u4::new(p.channel & 0x0f),
                message: MidiMessage::Controller {
                    controller: u7::new(SUSTAIN_CONTROLLER),
                    value: u7::new(p.value & 0x7f),
                },
            },
        ));
    }
    events.sort_by_key(|e| (e.0, e.1));

    let mut track = Vec::with_capacity(events.len() + 1);
    let mut last = 0;
    for (t, _, kind) in events {
        track.push(TrackEvent {
            delta: u28::new((t - last) as u32),
            kind,
        });
        last = t;
    }
    track.push(TrackEvent {
        delta: u28::new(0),
        kind: TrackEventKind::Meta(MetaMessage::EndOfTrack),
    });
    let mut smf = Smf::new(Header::new(
        Format::SingleTrack,
        Timing::Metrical(u15::new(ENCODE_TICKS_PER_BEAT)),
    ));
    smf.tracks.push(track);
    let mut out = Vec::new();
    smf.write_std(&mut out).expect("writing to a Vec cannot fail");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::midi::parse_midi;

    #[test]
    fn round_trip() {
        let notes = vec![
            NoteEvent { pitch: 60, onset: 0.0, offset: 0.5, velocity: 80, channel: 0 },
            NoteEvent { pitch: 64, onset: 0.25, offset: 1.25, velocity: 90, channel: 1 },
            NoteEvent { pitch: 60, onset: 0.5, offset: 1.0, velocity: 70, channel: 0 },
        ];
        let pedal = vec![
            PedalEvent { time: 0.1, value: 127, channel: 0 },
            PedalEvent { time: 0.9, value: 0, channel: 0 },
        ];
        let parsed = parse_midi(&encode_midi(&notes, &pedal)).unwrap();
        assert_eq!(parsed.notes, notes);
        assert_eq!(parsed.pedal, pedal);
        assert!(parsed.warnings.is_empty());
    }
}
