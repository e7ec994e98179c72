//! Solve a small key-to-finger assignment and compare with exhaustive search.
//!
//!     cargo run --example solve_assignment

use otfinger::assign::{brute_force_assignment, render_table, solve_assignment, CostMatrix};

fn main() {
    // Three keys, four fingers; distances in meters.
    let cost = CostMatrix::from_rows(&[
        vec![0.02, 0.10, 0.15, 0.30],
        vec![0.05, 0.03, 0.12, 0.20],
        vec![0.25, 0.08, 0.04, 0.06],
    ])
    .expect("finite, non-negative costs");

    let fast = solve_assignment(&cost).expect("3 keys fit on 4 fingers");
    let slow = brute_force_assignment(&cost).expect("small enough to enumerate");

    let keys: Vec<String> = ["C4", "D4", "E4"].iter().map(|s| s.to_string()).collect();
    let fingers: Vec<String> = ["R1", "R2", "R3", "R4"].iter().map(|s| s.to_string()).collect();
    print!("{}", render_table(&cost, Some(&fast), &keys, &fingers));
    println!("brute force d_ot = {:.6}", slow.total_cost);
    assert_eq!(fast.pairs, slow.pairs);

    // More keys than fingers cannot be assigned.
    let wide = CostMatrix::new(3, 2, vec![0.1; 6]).unwrap();
    println!("3 keys on 2 fingers: {}", solve_assignment(&wide).unwrap_err());
}
