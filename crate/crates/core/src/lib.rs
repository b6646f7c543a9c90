//! Sokoban solving with a backward (pulling) agent whose trajectories feed
//! hint features to a forward (pushing) agent. Both agents use linear value
//! functions trained with TD(0) inside an ε-greedy search tree.

pub mod bench;
pub mod board;
pub mod features;
pub mod levels;
pub mod lurd;
pub mod matching;
pub mod oracle;
pub mod pipeline;
pub mod search;
pub mod value;
