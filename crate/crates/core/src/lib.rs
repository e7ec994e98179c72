//! Piano fingering annotation by optimal transport.
//!
//! At every control step the keys that should be down are matched to the
//! fingertips of a hand model by minimizing total travel distance. The
//! matching is the fingering label; its cost drives a dense reward signal.
//! Around that core sit MIDI/PIG parsing, a kinematic hand surrogate,
//! metrics, and a checksummed episode container for dataset work.

pub mod annotate;
pub mod assign;
pub mod cli;
pub mod hand;
pub mod keyboard;
pub mod metrics;
pub mod midi;
pub mod reward;
pub mod store;
