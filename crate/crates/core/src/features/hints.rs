//! Hint features relating a forward position to a backward trajectory.

use crate::board::{Square, SquareSet};
use crate::levels::Level;

/// Box placements visited by the backward agent, starting from the packed
/// goal, plus the forward packing order they imply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackwardTrajectory {
    pub states: Vec<Vec<Square>>,
    pub packing_order: Vec<Square>,
}

impl BackwardTrajectory {
    /// Builds a trajectory from its box placements (each sorted, the first
    /// equal to the targets) and derives the packing order.
    pub fn from_states(level: &Level, states: Vec<Vec<Square>>) -> BackwardTrajectory {
        let packing_order = packing_order(level, &states);
        BackwardTrajectory {
            states,
            packing_order,
        }
    }

    pub fn final_state(&self) -> &[Square] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Targets still occupied at the end of the trajectory come first (ascending),
/// then vacated targets, most recently vacated first. Reversing the unpacking
/// gives the order in which the forward plan should pack.
fn packing_order(level: &Level, states: &[Vec<Square>]) -> Vec<Square> {
    let targets = level.targets();
    let mut last_vacated = vec![0usize; targets.len()];
    for step in 1..states.len() {
        for (ti, &t) in targets.iter().enumerate() {
            let before = states[step - 1].binary_search(&t).is_ok();
            let after = states[step].binary_search(&t).is_ok();
            if before && !after {
                last_vacated[ti] = step;
            }
        }
    }
    let last = states.last().cloned().unwrap_or_default();
    let mut occupied: Vec<Square> = Vec::new();
    let mut vacated: Vec<(usize, Square)> = Vec::new();
    for (ti, &t) in targets.iter().enumerate() {
        if last.binary_search(&t).is_ok() {
            occupied.push(t);
        } else {
            vacated.push((last_vacated[ti], t));
        }
    }
    vacated.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    occupied.extend(vacated.into_iter().map(|(_, t)| t));
    occupied
}

/// Precomputed bit sets of a trajectory for fast overlap queries.
#[derive(Debug, Clone)]
pub struct HintIndex {
    states: Vec<SquareSet>,
    packing_order: Vec<Square>,
    size: usize,
}

impl HintIndex {
    pub fn new(level: &Level, trajectory: &BackwardTrajectory) -> HintIndex {
        let mut states: Vec<SquareSet> = trajectory
            .states
            .iter()
            .map(|s| SquareSet::from_squares(level.size(), s))
            .collect();
        // Repeated placements add nothing to a maximum.
        let mut seen = std::collections::HashSet::new();
        states.retain(|s| seen.insert(s.clone()));
        HintIndex {
            states,
            packing_order: trajectory.packing_order.clone(),
            size: level.size(),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Box overlap of `boxes` with every stored placement.
    pub fn overlap_counts(&self, boxes: &[Square]) -> Vec<u32> {
        let set = SquareSet::from_squares(self.size, boxes);
        self.states
            .iter()
            .map(|s| s.intersection_len(&set) as u32)
            .collect()
    }

    /// Largest overlap after moving one box from `from` to `to`, given the
    /// counts of the position before the move.
    pub fn max_overlap_after_move(&self, counts: &[u32], from: Square, to: Square) -> u32 {
        self.states
            .iter()
            .zip(counts)
            .map(|(s, &c)| c - s.contains(from) as u32 + s.contains(to) as u32)
            .max()
            .unwrap_or(0)
    }

    pub fn max_overlap(&self, boxes: &[Square]) -> u32 {
        self.overlap_counts(boxes).into_iter().max().unwrap_or(0)
    }

    /// Length of the longest prefix of the packing order that is fully
    /// occupied by boxes.
    pub fn perm_prefix(&self, boxes: &[Square]) -> usize {
        self.packing_order
            .iter()
            .take_while(|t| boxes.binary_search(t).is_ok())
            .count()
    }
}

fn fraction(count: usize, boxes: usize) -> f64 {
    if boxes == 0 {
        1.0
    } else {
        count as f64 / boxes as f64
    }
}

/// Best fraction of boxes shared with any placement of the trajectory.
pub fn overlap(boxes: &[Square], trajectory: &BackwardTrajectory) -> f64 {
    let best = trajectory
        .states
        .iter()
        .map(|t| boxes.iter().filter(|b| t.binary_search(b).is_ok()).count())
        .max()
        .unwrap_or(0);
    fraction(best, boxes.len())
}

/// Fraction of boxes packed in agreement with the packing order: the longest
/// occupied prefix of the order, over the box count.
pub fn perm(boxes: &[Square], trajectory: &BackwardTrajectory) -> f64 {
    let prefix = trajectory
        .packing_order
        .iter()
        .take_while(|t| boxes.binary_search(t).is_ok())
        .count();
    fraction(prefix, boxes.len())
}
