//! LURD solution strings: lowercase letters are player steps, uppercase
//! letters are pushes.

use std::collections::VecDeque;

use thiserror::Error;

use crate::board::{apply_push, Direction, Move, MoveKind, Square, State};
use crate::levels::{render, Level};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LurdError {
    #[error("move {index} is not a push")]
    NotAPush { index: usize },
    #[error("push {index} cannot be reached or is blocked")]
    Unreachable { index: usize },
}

/// Player walk from `from` to `to` avoiding walls and boxes. BFS explores
/// neighbors in U, D, L, R order, so ties resolve toward that priority.
fn walk(level: &Level, state: &State, to: Square) -> Option<Vec<Direction>> {
    let from = state.player;
    if from == to {
        return Some(Vec::new());
    }
    let mut prev: Vec<Option<(Square, Direction)>> = vec![None; level.size()];
    let mut seen = vec![false; level.size()];
    seen[from as usize] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(sq) = queue.pop_front() {
        for dir in Direction::ALL {
            let next = level.step(sq, dir);
            if seen[next as usize] || !level.is_floor(next) || state.has_box(next) {
                continue;
            }
            seen[next as usize] = true;
            prev[next as usize] = Some((sq, dir));
            if next == to {
                let mut path = Vec::new();
                let mut cur = to;
                while let Some((p, d)) = prev[cur as usize] {
                    path.push(d);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(next);
        }
    }
    None
}

/// Expands a push sequence from the level's initial position into LURD.
pub fn reconstruct_lurd(level: &Level, moves: &[Move]) -> Result<String, LurdError> {
    let mut state = State::initial(level);
    let mut out = String::new();
    for (index, &mv) in moves.iter().enumerate() {
        if mv.kind != MoveKind::Push {
            return Err(LurdError::NotAPush { index });
        }
        let behind = level
            .checked_step(mv.box_from, mv.direction.opposite())
            .ok_or(LurdError::Unreachable { index })?;
        let path = walk(level, &state, behind).ok_or(LurdError::Unreachable { index })?;
        out.extend(path.into_iter().map(Direction::letter));
        state = apply_push(level, &state, mv).map_err(|_| LurdError::Unreachable { index })?;
        out.push(mv.direction.letter().to_ascii_uppercase());
    }
    Ok(out)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("step {index}: `{symbol}` is not a LURD letter")]
    BadSymbol { index: usize, symbol: char },
    #[error("step {index} (`{symbol}`): {reason}")]
    Illegal {
        index: usize,
        symbol: char,
        reason: &'static str,
    },
}

/// Board after each step of a replay, starting with the initial position.
#[derive(Debug, Clone)]
pub struct Replay {
    pub frames: Vec<String>,
    pub pushes: usize,
    pub solved: bool,
}

/// Plays a LURD string one player step at a time on a plain grid, checking
/// every step. Walks must be lowercase and not move a box; pushes must be
/// uppercase and move exactly one box into free floor. Whitespace is ignored.
pub fn replay(level: &Level, lurd: &str) -> Result<Replay, ReplayError> {
    let (w, h) = (level.width() as i64, level.height() as i64);
    let cell = |x: i64, y: i64| (y * w + x) as usize;
    let mut boxes = vec![false; (w * h) as usize];
    for &b in level.initial_boxes() {
        boxes[b as usize] = true;
    }
    let (px, py) = level.xy(level.initial_player());
    let (mut px, mut py) = (px as i64, py as i64);
    let open = |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h && level.is_floor(cell(x, y) as Square);
    let snapshot = |boxes: &[bool], px: i64, py: i64| {
        let placed: Vec<Square> = (0..boxes.len())
            .filter(|&i| boxes[i])
            .map(|i| i as Square)
            .collect();
        render(level, &placed, Some(cell(px, py) as Square))
    };
    let mut frames = vec![snapshot(&boxes, px, py)];
    let mut pushes = 0;
    for (index, symbol) in lurd.chars().filter(|c| !c.is_whitespace()).enumerate() {
        let (dx, dy) = match symbol.to_ascii_lowercase() {
            'u' => (0, -1),
            'd' => (0, 1),
            'l' => (-1, 0),
            'r' => (1, 0),
            _ => return Err(ReplayError::BadSymbol { index, symbol }),
        };
        let illegal = |reason| ReplayError::Illegal {
            index,
            symbol,
            reason,
        };
        let (nx, ny) = (px + dx, py + dy);
        if !open(nx, ny) {
            return Err(illegal("walks into a wall"));
        }
        let has_box = boxes[cell(nx, ny)];
        if symbol.is_ascii_lowercase() {
            if has_box {
                return Err(illegal("lowercase step runs into a box"));
            }
        } else {
            if !has_box {
                return Err(illegal("uppercase step pushes no box"));
            }
            let (bx, by) = (nx + dx, ny + dy);
            if !open(bx, by) || boxes[cell(bx, by)] {
                return Err(illegal("box is blocked"));
            }
            boxes[cell(nx, ny)] = false;
            boxes[cell(bx, by)] = true;
            pushes += 1;
        }
        px = nx;
        py = ny;
        frames.push(snapshot(&boxes, px, py));
    }
    let solved = level.targets().iter().all(|&t| boxes[t as usize]);
    Ok(Replay {
        frames,
        pushes,
        solved,
    })
}
