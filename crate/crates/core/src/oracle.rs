//! Exhaustive breadth-first solver for small levels. It has its own move
//! rules (no code shared with the search engine) so tests can use it as
//! ground truth.

use std::collections::{HashSet, VecDeque};

use thiserror::Error;

use crate::board::{Square, StateKey};
use crate::levels::Level;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum OracleError {
    #[error("state cap of {0} exceeded")]
    CapExceeded(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PushCount {
    Solved(u32),
    Unsolvable,
}

struct Grid<'a> {
    level: &'a Level,
    w: i64,
    h: i64,
}

impl Grid<'_> {
    fn neighbor(&self, sq: Square, dx: i64, dy: i64) -> Option<Square> {
        let (x, y) = self.level.xy(sq);
        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
        if nx < 0 || ny < 0 || nx >= self.w || ny >= self.h {
            return None;
        }
        let n = (ny * self.w + nx) as Square;
        self.level.is_floor(n).then_some(n)
    }

    /// Squares the player can walk to, and the canonical (smallest) one.
    fn reach(&self, boxes: &[Square], player: Square) -> (Vec<bool>, Square) {
        let mut seen = vec![false; self.level.size()];
        seen[player as usize] = true;
        let mut min = player;
        let mut stack = vec![player];
        while let Some(sq) = stack.pop() {
            for (dx, dy) in DELTAS {
                if let Some(n) = self.neighbor(sq, dx, dy) {
                    if !seen[n as usize] && !boxes.contains(&n) {
                        seen[n as usize] = true;
                        min = min.min(n);
                        stack.push(n);
                    }
                }
            }
        }
        (seen, min)
    }

    /// Every position one push away, as (boxes, player).
    fn successors(&self, boxes: &[Square], player: Square) -> Vec<(Vec<Square>, Square)> {
        let (reach, _) = self.reach(boxes, player);
        let mut out = Vec::new();
        for (i, &b) in boxes.iter().enumerate() {
            for (dx, dy) in DELTAS {
                let behind = self.neighbor(b, -dx, -dy);
                let ahead = self.neighbor(b, dx, dy);
                if let (Some(behind), Some(ahead)) = (behind, ahead) {
                    if reach[behind as usize] && !boxes.contains(&ahead) {
                        let mut next = boxes.to_vec();
                        next[i] = ahead;
                        next.sort_unstable();
                        out.push((next, b));
                    }
                }
            }
        }
        out
    }

    fn key(&self, boxes: &[Square], player: Square) -> StateKey {
        let (_, min) = self.reach(boxes, player);
        StateKey {
            boxes: boxes.into(),
            region: min,
        }
    }
}

const DELTAS: [(i64, i64); 4] = [(0, -1), (0, 1), (-1, 0), (1, 0)];

fn grid(level: &Level) -> Grid<'_> {
    Grid {
        level,
        w: level.width() as i64,
        h: level.height() as i64,
    }
}

fn solved(level: &Level, boxes: &[Square]) -> bool {
    boxes.iter().all(|&b| level.is_target(b))
}

/// Minimum number of pushes from the initial position to the solved one.
pub fn optimal_push_count(level: &Level, state_cap: usize) -> Result<PushCount, OracleError> {
    optimal_push_count_from(level, level.initial_boxes(), level.initial_player(), state_cap)
}

pub fn optimal_push_count_from(
    level: &Level,
    boxes: &[Square],
    player: Square,
    state_cap: usize,
) -> Result<PushCount, OracleError> {
    let g = grid(level);
    let mut start = boxes.to_vec();
    start.sort_unstable();
    if solved(level, &start) {
        return Ok(PushCount::Solved(0));
    }
    let mut seen = HashSet::new();
    seen.insert(g.key(&start, player));
    let mut queue = VecDeque::from([(start, player, 0u32)]);
    while let Some((boxes, player, depth)) = queue.pop_front() {
        for (next, p) in g.successors(&boxes, player) {
            if solved(level, &next) {
                return Ok(PushCount::Solved(depth + 1));
            }
            if seen.insert(g.key(&next, p)) {
                if seen.len() > state_cap {
                    return Err(OracleError::CapExceeded(state_cap));
                }
                queue.push_back((next, p, depth + 1));
            }
        }
    }
    Ok(PushCount::Unsolvable)
}

/// Every position reachable by pushes from the initial one.
pub fn enumerate_states(level: &Level, state_cap: usize) -> Result<HashSet<StateKey>, OracleError> {
    let g = grid(level);
    let mut start = level.initial_boxes().to_vec();
    start.sort_unstable();
    let mut seen = HashSet::new();
    seen.insert(g.key(&start, level.initial_player()));
    let mut queue = VecDeque::from([(start, level.initial_player())]);
    while let Some((boxes, player)) = queue.pop_front() {
        for (next, p) in g.successors(&boxes, player) {
            if seen.insert(g.key(&next, p)) {
                if seen.len() > state_cap {
                    return Err(OracleError::CapExceeded(state_cap));
                }
                queue.push_back((next, p));
            }
        }
    }
    Ok(seen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levels::parse_xsb;

    #[test]
    fn corridor() {
        let level = parse_xsb("#####\n#@$.#\n#####").unwrap();
        assert_eq!(optimal_push_count(&level, 100), Ok(PushCount::Solved(1)));
        assert_eq!(enumerate_states(&level, 100).unwrap().len(), 2);
    }

    #[test]
    fn already_solved_and_dead() {
        let done = parse_xsb("####\n#@*#\n####").unwrap();
        assert_eq!(optimal_push_count(&done, 10), Ok(PushCount::Solved(0)));
        let dead = parse_xsb("######\n#$   #\n#  @.#\n######").unwrap();
        assert_eq!(optimal_push_count(&dead, 100), Ok(PushCount::Unsolvable));
    }

    #[test]
    fn player_square_within_region_is_irrelevant() {
        let a = parse_xsb("######\n#@   #\n# $$ #\n# .. #\n######").unwrap();
        let b = parse_xsb("######\n#   @#\n# $$ #\n# .. #\n######").unwrap();
        let sa = enumerate_states(&a, 10_000).unwrap();
        let sb = enumerate_states(&b, 10_000).unwrap();
        assert_eq!(sa, sb);
        for key in &sa {
            assert_eq!(key.boxes.len(), 2);
            assert!(key.boxes.windows(2).all(|p| p[0] < p[1]));
            assert!(key.boxes.iter().all(|&s| a.is_floor(s)));
            assert!(!key.boxes.contains(&key.region));
        }
    }

    #[test]
    fn cap() {
        let level = parse_xsb("#######\n#@    #\n# $$  #\n#   ..#\n#######").unwrap();
        assert_eq!(enumerate_states(&level, 3), Err(OracleError::CapExceeded(3)));
    }
}
