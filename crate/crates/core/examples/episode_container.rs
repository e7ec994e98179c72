//! Chunk an annotated song into fixed-length episodes and store them.
//!
//!     cargo run --example episode_container

use otfinger::annotate::{annotate_song, chunk_episodes, episode_record, AnnotateParams, DEFAULT_EPISODE_LEN};
use otfinger::hand::HandConfig;
use otfinger::keyboard::{KeyIndex, KeyboardGeometry};
use otfinger::midi::{GoalSequence, GoalStep};
use otfinger::store::{load_episode, save_episode, write_rewards_csv};

fn main() {
    // 1200 steps of a slow repeated two-note figure.
    let steps = (0..1200)
        .map(|t| GoalStep {
            active: [KeyIndex::new(39 + 4 * ((t / 10) % 2)).unwrap()].into_iter().collect(),
            sustain: t % 100 < 50,
        })
        .collect();
    let goals = GoalSequence::new(steps, 0.05);
    let ann = annotate_song(&goals, &HandConfig::five_finger(), &KeyboardGeometry::default(), &AnnotateParams::default()).unwrap();
    let episodes = chunk_episodes(&goals, &ann, DEFAULT_EPISODE_LEN).unwrap();
    println!(
        "{} episodes of {} steps ({} s each)",
        episodes.len(),
        DEFAULT_EPISODE_LEN,
        DEFAULT_EPISODE_LEN as f64 * goals.dt
    );

    let dir = std::env::temp_dir().join("otfinger-episode-example");
    std::fs::create_dir_all(&dir).unwrap();
    for ep in &episodes {
        let rec = episode_record(ep, "figure", &ann);
        let path = dir.join(format!("figure.ep{:03}.rp1t", ep.index));
        let bytes = save_episode(&rec, &path).unwrap();
        let back = load_episode(&path).unwrap();
        assert_eq!(back, rec);
        println!(
            "{}: {} bytes, {} real + {} padded steps, F1 {:.3}",
            path.display(),
            bytes,
            ep.real_len(),
            ep.padding(),
            back.meta.f1.unwrap_or(f64::NAN)
        );
    }

    let first = load_episode(&dir.join("figure.ep000.rp1t")).unwrap();
    let mut csv = Vec::new();
    write_rewards_csv(&first, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    for line in text.lines().skip(1).take(4) {
        println!("{line}");
    }
}
