mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::{note, two_hand_song, write_midi};
use otfinger::midi::{parse_pig, PigRecord};
use otfinger::store::load_episode;

fn otfinger(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otfinger"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn annotate_single_song_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let midi = dir.path().join("song.mid");
    write_midi(&midi, &two_hand_song());
    let out = dir.path().join("out");
    let o = otfinger(&["annotate", "--midi", s(&midi), "--embodiment", "five-finger", "--out", s(&out), "--pig-out"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = stdout(&o);
    assert!(summary.starts_with("song\tsteps=50\t"), "{summary}");
    assert!(summary.contains("infeasible_steps=0"));

    for name in ["song.fingering.txt", "song.goals.txt", "song.rewards.csv", "song.pig.txt", "song.ep000.rp1t"] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    // 2 s of music stretched by 1.25 is 50 steps: one episode.
    assert!(!out.join("song.ep001.rp1t").exists());
    for name in ["song.fingering.txt", "song.goals.txt", "song.rewards.csv"] {
        let text = fs::read_to_string(out.join(name)).unwrap();
        assert!(text.starts_with("# run={"), "{name} lacks config");
        assert!(text.contains("\"stretch\":1.25"));
    }
    let pig_text = fs::read_to_string(out.join("song.pig.txt")).unwrap();
    assert!(pig_text.starts_with("//run={"));
    let pig: Vec<PigRecord> = parse_pig(&pig_text).unwrap();
    assert_eq!(pig.len(), 10);
    assert!(pig.iter().all(|r| r.finger.strike != 0));

    let rec = load_episode(&out.join("song.ep000.rp1t")).unwrap();
    assert!(rec.is_canonical());
    assert_eq!(rec.meta.song_id, "song");
    assert_eq!(rec.meta.real_steps, 50);
    assert_eq!(rec.meta.config["discretize"]["stretch"], 1.25);
}

#[test]
fn annotate_directory_in_parallel_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let songs = dir.path().join("songs");
    fs::create_dir(&songs).unwrap();
    for i in 0..4u8 {
        let notes: Vec<_> = (0..6).map(|j| note(60 + i + 2 * j, 0.3 * f64::from(j), 0.3 * f64::from(j + 1))).collect();
        write_midi(&songs.join(format!("s{i}.mid")), &notes);
    }
    let run = |out: &Path, jobs: &str| {
        let o = otfinger(&["annotate", "--midi", s(&songs), "--out", s(out), "--jobs", jobs]);
        assert!(o.status.success());
        stdout(&o)
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let sa = run(&a, "1");
    let sb = run(&b, "4");
    assert_eq!(sa.lines().count(), 4);
    assert_eq!(sa, sb);
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for n in names {
        let x = fs::read(a.join(&n)).unwrap();
        let y = fs::read(b.join(&n)).unwrap();
        // Only the source path in the embedded config differs between runs.
        let norm = |v: Vec<u8>| String::from_utf8_lossy(&v).replace(s(&a), "").replace(s(&b), "").into_bytes();
        if n.to_string_lossy().ends_with(".rp1t") {
            let ra = load_episode(&a.join(&n)).unwrap();
            let rb = load_episode(&b.join(&n)).unwrap();
            assert_eq!(ra.observations, rb.observations);
            assert_eq!(ra.rewards, rb.rewards);
        } else {
            assert_eq!(norm(x), norm(y), "{n:?}");
        }
    }
}

#[test]
fn strict_mode_fails_on_eleven_note_chord() {
    let dir = tempfile::tempdir().unwrap();
    let songs = dir.path().join("songs");
    fs::create_dir(&songs).unwrap();
    let chord: Vec<_> = (0..11).map(|i| note(40 + 3 * i, 0.0, 0.5)).collect();
    write_midi(&songs.join("cluster.mid"), &chord);
    write_midi(&songs.join("fine.mid"), &two_hand_song());
    let out = dir.path().join("out");
    let o = otfinger(&["annotate", "--midi", s(&songs), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("FAILED cluster"), "{err}");
    assert!(stdout(&o).contains("fine\t"));

    let o = otfinger(&["annotate", "--midi", s(&songs), "--out", s(&out), "--best-effort"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("cluster\tsteps=13\t") && stdout(&o).contains("infeasible_steps=13"));
    let text = fs::read_to_string(out.join("cluster.fingering.txt")).unwrap();
    assert!(text.contains("\tdropped="));
}

#[test]
fn annotate_without_inputs_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = otfinger(&["annotate", "--midi", s(dir.path()), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let o = otfinger(&["annotate", "--midi", s(&dir.path().join("missing.mid")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let o = otfinger(&["annotate", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_and_stats_on_annotated_episodes() {
    let dir = tempfile::tempdir().unwrap();
    let midi = dir.path().join("song.mid");
    // Slow whole notes give the surrogate time to reach every key.
    let notes: Vec<_> = [60u8, 64, 67, 72].iter().enumerate().map(|(i, &p)| note(p, i as f64, i as f64 + 1.0)).collect();
    write_midi(&midi, &notes);
    let out = dir.path().join("out");
    assert!(otfinger(&["annotate", "--midi", s(&midi), "--out", s(&out)]).status.success());

    let o = otfinger(&["eval", "--episodes", s(&out)]);
    assert!(o.status.success());
    let line = stdout(&o);
    assert!(line.starts_with("song\tprecision=1.000000"), "{line}");

    let o = otfinger(&["eval", "--episodes", s(&out), "--csv"]);
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("song,precision,recall,f1"));

    let csv = dir.path().join("hist.csv");
    let o = otfinger(&["stats", "--in", s(&out), "--f1-meta", "--csv", s(&csv)]);
    assert!(o.status.success());
    let report = stdout(&o);
    assert!(report.contains("pieces=1"));
    assert!(report.contains("total_count=4"));
    assert!(report.contains("white_fraction=1.000000"));
    assert!(report.contains("fraction_f1_above_0.75="));
    let hist = fs::read_to_string(&csv).unwrap();
    assert!(hist.starts_with("# config="));
    assert_eq!(hist.lines().count(), 2 + 88);
}

#[test]
fn eval_and_stats_reject_empty_or_unreadable_inputs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(otfinger(&["eval", "--episodes", s(dir.path())]).status.code(), Some(2));
    assert_eq!(otfinger(&["stats", "--in", s(dir.path())]).status.code(), Some(2));
    let missing = dir.path().join("nope");
    assert_eq!(otfinger(&["stats", "--in", s(&missing)]).status.code(), Some(2));
    let bad = dir.path().join("bad.rp1t");
    fs::write(&bad, b"not a container").unwrap();
    assert_eq!(otfinger(&["eval", "--episodes", s(dir.path())]).status.code(), Some(2));
    let pig = dir.path().join("x.txt");
    assert_eq!(otfinger(&["eval", "--pig-ours", s(&pig), "--pig-human", s(&pig)]).status.code(), Some(2));
}

#[test]
fn eval_identical_pig_files_agree() {
    let dir = tempfile::tempdir().unwrap();
    let pig = dir.path().join("a.txt");
    fs::write(&pig, "0\t0.0\t0.5\tC4\t80\t64\t0\t1\n1\t0.5\t1.0\tE4\t80\t64\t0\t3\n").unwrap();
    let o = otfinger(&["eval", "--pig-ours", s(&pig), "--pig-human", s(&pig)]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("agreement=1.000000\tmatched=2"));
}

#[test]
fn assign_debug_table() {
    let o = otfinger(&["assign", "--matrix", "0.1,0.5;0.4,0.2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("0.1000*"));
    assert!(text.contains("0.2000*"));
    assert!(text.contains("d_ot = 0.300000"));
    assert_eq!(otfinger(&["assign", "--matrix", "0.1,x"]).status.code(), Some(2));
    assert_eq!(otfinger(&["assign", "--matrix", "0.1;0.2"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let midi = dir.path().join("song.mid");
    write_midi(&midi, &two_hand_song());
    let o = otfinger(&["assign", "--midi", s(&midi), "--step", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("key"));
}

#[test]
fn help_documents_formats() {
    let o = otfinger(&["annotate", "--help"]);
    let text = stdout(&o);
    assert!(text.contains("--episode-len"));
    assert!(text.contains("key:finger"));
    let o = otfinger(&["eval", "--help"]);
    assert!(stdout(&o).contains("--press-threshold"));
}
