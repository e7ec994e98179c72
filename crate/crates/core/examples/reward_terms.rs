//! Reward terms and their aggregate.
//!
//!     cargo run --example reward_terms

use otfinger::keyboard::{KeyIndex, KeySet, KeyState};
use otfinger::reward::{
    collision_reward, energy_cost, false_press, ot_reward, press_reward, sustain_reward, tolerance,
    total_reward, RewardParams,
};

fn main() {
    let p = RewardParams::default();
    println!("transport reward (threshold {} m, c = {:.3}):", p.threshold, p.c);
    for d in [0.0, 0.01, 0.02, 0.05, 0.11, 0.2] {
        println!("  d = {d:.2} m -> {:.4}", ot_reward(d, &p));
    }

    let key = KeyIndex::new(39).unwrap();
    let active: KeySet = [key].into_iter().collect();
    let mut keys = KeyState::default();
    keys.depth[key.index()] = 0.8;
    let fp = false_press(&keys, &active, 0.5);
    let press = press_reward(&keys, &active, fp, &p);
    let sustain = sustain_reward(0.0, 1.0, &p);
    let energy = energy_cost(&[0.5, -1.0, 0.2], &[1.0, 0.5, -2.0]).unwrap();
    let r = total_reward(ot_reward(0.03, &p), press, sustain, collision_reward(false), energy, &p);
    println!("{r:#?}");

    println!("tolerance(0.6, [0, 0.5], margin 0.1, 0.1) = {:.3}", tolerance(0.6, (0.0, 0.5), 0.1, 0.1).unwrap());
}
