//! Lone-box push distances and the matching lower bound built on them.

use std::collections::VecDeque;

use crate::board::{Direction, Square, SquareSet, State};
use crate::levels::Level;
use crate::matching::{Assignment, UNREACHABLE};

const INF: u16 = u16::MAX;

/// Per-square, per-target minimum push count for a lone box on the empty
/// board. A push from `x` in direction `d` only requires the square behind
/// `x` to be floor; player reachability is relaxed.
#[derive(Debug, Clone)]
pub struct DistanceTable {
    targets: usize,
    dist: Vec<u16>,
}

impl DistanceTable {
    pub fn build(level: &Level) -> DistanceTable {
        let nt = level.targets().len();
        let mut dist = vec![INF; level.size() * nt];
        let mut queue = VecDeque::new();
        for (ti, &t) in level.targets().iter().enumerate() {
            dist[t as usize * nt + ti] = 0;
            queue.push_back(t);
            // Reverse BFS: a box reaches `b` from `b - d` when pushed in `d`,
            // which needs `b - d` and `b - 2d` to be floor.
            while let Some(b) = queue.pop_front() {
                let here = dist[b as usize * nt + ti];
                for dir in Direction::ALL {
                    let from = level.step(b, dir);
                    if level.is_wall(from) || level.is_wall(level.step(from, dir)) {
                        continue;
                    }
                    let slot = &mut dist[from as usize * nt + ti];
                    if *slot == INF {
                        *slot = here + 1;
                        queue.push_back(from);
                    }
                }
            }
        }
        DistanceTable { targets: nt, dist }
    }

    pub fn target_count(&self) -> usize {
        self.targets
    }

    /// Push distance from `square` to the `target_index`-th target, `None`
    /// when unreachable.
    pub fn get(&self, square: Square, target_index: usize) -> Option<u32> {
        match self.dist[square as usize * self.targets + target_index] {
            INF => None,
            d => Some(d as u32),
        }
    }

    /// Whether a box on `square` can reach no target at all.
    pub fn is_dead(&self, square: Square) -> bool {
        self.row(square).iter().all(|&d| d == INF)
    }

    fn row(&self, square: Square) -> &[u16] {
        let i = square as usize * self.targets;
        &self.dist[i..i + self.targets]
    }

    pub(crate) fn cost_row(&self, square: Square, out: &mut [i64]) {
        for (slot, &d) in out.iter_mut().zip(self.row(square)) {
            *slot = if d == INF { UNREACHABLE } else { d as i64 };
        }
    }

    pub fn dead_squares(&self, level: &Level) -> SquareSet {
        let mut dead = SquareSet::new(level.size());
        for &sq in level.floor() {
            if self.is_dead(sq) {
                dead.insert(sq);
            }
        }
        dead
    }

    /// Optimal box-to-target assignment for a placement, with duals retained.
    pub fn assignment(&self, boxes: &[Square]) -> Assignment {
        let n = boxes.len();
        assert_eq!(n, self.targets, "box count must equal target count");
        let mut costs = vec![0i64; n * n];
        for (i, &b) in boxes.iter().enumerate() {
            self.cost_row(b, &mut costs[i * n..(i + 1) * n]);
        }
        Assignment::solve(n, costs)
    }
}

/// Minimum-cost perfect matching of boxes to targets under lone-box push
/// distances. `None` when no finite perfect matching exists.
pub fn distance_lower_bound(state: &State, table: &DistanceTable) -> Option<u32> {
    table
        .assignment(state.boxes())
        .value()
        .map(|v| v as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::{legal_pushes, apply_push, state_key, dead_squares, is_forward_goal};
    use crate::levels::parse_xsb;
    use std::collections::HashMap;

    /// Single-box BFS with real player reachability: the push distance from
    /// every (box square, player region) to every target.
    fn single_box_oracle(level: &Level, target: Square) -> HashMap<Square, u32> {
        let mut best: HashMap<Square, u32> = HashMap::new();
        for &start in level.floor() {
            // any player square outside the box: take the minimum over
            // all starting player squares, matching the relaxed table only
            // in rooms where the player can get around the box
            let mut dist_min = None;
            for &p in level.floor() {
                if p == start {
                    continue;
                }
                let s0 = State::new(vec![start], p);
                let mut seen = HashMap::new();
                seen.insert(state_key(level, &s0), 0u32);
                let mut queue = VecDeque::from([(s0, 0u32)]);
                let mut found = None;
                while let Some((s, d)) = queue.pop_front() {
                    if s.boxes()[0] == target {
                        found = Some(d);
                        break;
                    }
                    for m in legal_pushes(level, &s) {
                        let next = apply_push(level, &s, m).unwrap();
                        let key = state_key(level, &next);
                        if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(key) {
                            e.insert(d + 1);
                            queue.push_back((next, d + 1));
                        }
                    }
                }
                if let Some(d) = found {
                    dist_min = Some(dist_min.map_or(d, |m: u32| m.min(d)));
                }
            }
            if let Some(d) = dist_min {
                best.insert(start, d);
            }
        }
        best
    }

    #[test]
    fn corridor_distance() {
        let level = parse_xsb("#####\n#@$.#\n#####").unwrap();
        let table = DistanceTable::build(&level);
        assert_eq!(table.get(level.square(2, 1), 0), Some(1));
        assert_eq!(table.get(level.square(3, 1), 0), Some(0));
        // the player square cannot be a box origin: nothing behind it
        assert_eq!(table.get(level.square(1, 1), 0), None);
    }

    #[test]
    fn open_room_matches_forward_oracle() {
        let level = parse_xsb("#######\n#     #\n#  .  #\n# $@  #\n#     #\n#     #\n#######").unwrap();
        let table = DistanceTable::build(&level);
        let t = level.targets()[0];
        let oracle = single_box_oracle(&level, t);
        for &sq in level.floor() {
            assert_eq!(table.get(sq, 0), oracle.get(&sq).copied(), "square {:?}", level.xy(sq));
        }
    }

    #[test]
    fn dead_rows_agree_with_board() {
        let level = parse_xsb("######\n#    #\n# .$ #\n#  @ #\n######").unwrap();
        let table = DistanceTable::build(&level);
        assert_eq!(table.dead_squares(&level), dead_squares(&level));
    }

    #[test]
    fn four_by_four_dead_squares_match_single_box_oracle() {
        let level = parse_xsb("######\n#    #\n# .  #\n#  $ #\n# @  #\n######").unwrap();
        let dead = dead_squares(&level);
        let oracle = single_box_oracle(&level, level.targets()[0]);
        for &sq in level.floor() {
            assert_eq!(dead.contains(sq), !oracle.contains_key(&sq), "square {:?}", level.xy(sq));
        }
    }

    #[test]
    fn lower_bound_cases() {
        let level = parse_xsb("#####\n#@$.#\n#####").unwrap();
        let table = DistanceTable::build(&level);
        let s = State::initial(&level);
        assert_eq!(distance_lower_bound(&s, &table), Some(1));
        let goal = State::new(level.targets().to_vec(), level.square(2, 1));
        assert!(is_forward_goal(&level, &goal));
        assert_eq!(distance_lower_bound(&goal, &table), Some(0));
    }

    #[test]
    fn dead_box_is_unbounded() {
        let level = parse_xsb("#####\n#$ .#\n# @ #\n#####").unwrap();
        let table = DistanceTable::build(&level);
        assert!(table.is_dead(level.square(1, 1)));
        assert_eq!(distance_lower_bound(&State::initial(&level), &table), None);
    }
}
