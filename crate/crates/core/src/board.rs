//! Rules engine: box pushes (forward) and pulls (backward) at macro-move
//! granularity. The player walks freely inside its region between moves, so
//! a move is identified by the box it displaces and the direction.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use crate::levels::Level;

/// Row-major square index into a level's grid.
pub type Square = u16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    /// Fixed enumeration order used for move generation and tie-breaking.
    pub const ALL: [Direction; 4] = [
        Direction::Up,
        Direction::Down,
        Direction::Left,
        Direction::Right,
    ];

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }

    /// Lowercase LURD letter.
    pub fn letter(self) -> char {
        match self {
            Direction::Up => 'u',
            Direction::Down => 'd',
            Direction::Left => 'l',
            Direction::Right => 'r',
        }
    }

    pub fn from_letter(c: char) -> Option<Direction> {
        match c.to_ascii_lowercase() {
            'u' => Some(Direction::Up),
            'd' => Some(Direction::Down),
            'l' => Some(Direction::Left),
            'r' => Some(Direction::Right),
            _ => None,
        }
    }
}

/// Search direction: forward pushes toward the packed goal, or backward
/// pulls away from it toward the relaxed unpacked goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Push,
    Pull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    pub kind: MoveKind,
    pub box_from: Square,
    pub direction: Direction,
}

impl Move {
    pub fn push(box_from: Square, direction: Direction) -> Self {
        Move {
            kind: MoveKind::Push,
            box_from,
            direction,
        }
    }

    pub fn pull(box_from: Square, direction: Direction) -> Self {
        Move {
            kind: MoveKind::Pull,
            box_from,
            direction,
        }
    }

    /// The move that undoes this one, given the level geometry.
    pub fn mirrored(self, level: &Level) -> Move {
        let to = level.step(self.box_from, self.direction);
        let kind = match self.kind {
            MoveKind::Push => MoveKind::Pull,
            MoveKind::Pull => MoveKind::Push,
        };
        Move {
            kind,
            box_from: to,
            direction: self.direction.opposite(),
        }
    }
}

/// Dynamic part of a position: sorted box squares and the player square.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    boxes: Vec<Square>,
    pub player: Square,
}

impl State {
    pub fn new(mut boxes: Vec<Square>, player: Square) -> Self {
        boxes.sort_unstable();
        State { boxes, player }
    }

    pub fn initial(level: &Level) -> Self {
        State::new(level.initial_boxes().to_vec(), level.initial_player())
    }

    pub fn boxes(&self) -> &[Square] {
        &self.boxes
    }

    pub fn has_box(&self, sq: Square) -> bool {
        self.boxes.binary_search(&sq).is_ok()
    }

    pub fn into_boxes(self) -> Vec<Square> {
        self.boxes
    }

    /// Moves one box, keeping the list sorted. Returns the box's new index.
    pub(crate) fn relocate_box(&mut self, from: Square, to: Square) -> usize {
        let idx = self
            .boxes
            .binary_search(&from)
            .expect("relocate_box: no box on source square");
        self.boxes.remove(idx);
        let at = self.boxes.binary_search(&to).unwrap_or_else(|i| i);
        self.boxes.insert(at, to);
        at
    }
}

/// Transposition identity: sorted boxes plus the smallest square of the
/// player's region.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey {
    pub boxes: Box<[Square]>,
    pub region: Square,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoveError {
    #[error("illegal {kind:?} of box at {box_from} to {direction:?}")]
    Illegal {
        kind: MoveKind,
        box_from: Square,
        direction: Direction,
    },
}

/// Dense bit set over the squares of one level.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SquareSet {
    words: Vec<u64>,
}

impl SquareSet {
    pub fn new(size: usize) -> Self {
        SquareSet {
            words: vec![0; size.div_ceil(64)],
        }
    }

    pub fn from_squares(size: usize, squares: &[Square]) -> Self {
        let mut set = SquareSet::new(size);
        for &sq in squares {
            set.insert(sq);
        }
        set
    }

    #[inline]
    pub fn contains(&self, sq: Square) -> bool {
        self.words[sq as usize / 64] >> (sq as usize % 64) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, sq: Square) {
        self.words[sq as usize / 64] |= 1 << (sq as usize % 64);
    }

    #[inline]
    pub fn remove(&mut self, sq: Square) {
        self.words[sq as usize / 64] &= !(1 << (sq as usize % 64));
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn intersection_len(&self, other: &SquareSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = Square> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some((i * 64 + b) as Square)
            })
        })
    }
}

impl fmt::Debug for SquareSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

fn occupancy(level: &Level, state: &State) -> SquareSet {
    SquareSet::from_squares(level.size(), &state.boxes)
}

#[inline]
fn free(level: &Level, boxes: &SquareSet, sq: Square) -> bool {
    level.is_floor(sq) && !boxes.contains(sq)
}

fn flood(level: &Level, boxes: &SquareSet, start: Square, seen: &mut SquareSet) {
    let mut stack = vec![start];
    seen.insert(start);
    while let Some(sq) = stack.pop() {
        for dir in Direction::ALL {
            let next = level.step(sq, dir);
            if !seen.contains(next) && free(level, boxes, next) {
                seen.insert(next);
                stack.push(next);
            }
        }
    }
}

/// Squares the player can walk to without moving a box.
pub fn player_reachable(level: &Level, state: &State) -> SquareSet {
    let boxes = occupancy(level, state);
    let mut seen = SquareSet::new(level.size());
    flood(level, &boxes, state.player, &mut seen);
    seen
}

/// Labeling of the free squares (floor minus boxes) into 4-connected regions.
/// Regions are numbered in order of their smallest square.
#[derive(Debug, Clone)]
pub struct Regions {
    label: Vec<u16>,
    min_square: Vec<Square>,
}

impl Regions {
    pub const NONE: u16 = u16::MAX;

    pub fn compute(level: &Level, boxes: &[Square]) -> Regions {
        let occupied = SquareSet::from_squares(level.size(), boxes);
        let mut label = vec![Self::NONE; level.size()];
        let mut min_square = Vec::new();
        let mut stack = Vec::new();
        for &sq in level.floor() {
            if label[sq as usize] != Self::NONE || occupied.contains(sq) {
                continue;
            }
            let id = min_square.len() as u16;
            min_square.push(sq);
            label[sq as usize] = id;
            stack.push(sq);
            while let Some(cur) = stack.pop() {
                for dir in Direction::ALL {
                    let next = level.step(cur, dir);
                    if label[next as usize] == Self::NONE && free(level, &occupied, next) {
                        label[next as usize] = id;
                        stack.push(next);
                    }
                }
            }
        }
        Regions { label, min_square }
    }

    pub fn count(&self) -> usize {
        self.min_square.len()
    }

    pub fn label(&self, sq: Square) -> u16 {
        self.label[sq as usize]
    }

    /// Smallest square of the region containing `sq`, if `sq` is free.
    pub fn canonical(&self, sq: Square) -> Option<Square> {
        match self.label[sq as usize] {
            Self::NONE => None,
            id => Some(self.min_square[id as usize]),
        }
    }

    /// Smallest square of every region, ascending.
    pub fn representatives(&self) -> &[Square] {
        &self.min_square
    }
}

/// Number of connected free regions of a box placement.
pub fn region_count(level: &Level, boxes: &[Square]) -> usize {
    Regions::compute(level, boxes).count()
}

pub fn legal_pushes(level: &Level, state: &State) -> Vec<Move> {
    let boxes = occupancy(level, state);
    let mut reach = SquareSet::new(level.size());
    flood(level, &boxes, state.player, &mut reach);
    pushes_with(level, state, &boxes, &reach)
}

pub(crate) fn pushes_with(
    level: &Level,
    state: &State,
    boxes: &SquareSet,
    reach: &SquareSet,
) -> Vec<Move> {
    let mut moves = Vec::new();
    for &b in &state.boxes {
        for dir in Direction::ALL {
            let behind = level.step(b, dir.opposite());
            let ahead = level.step(b, dir);
            if reach.contains(behind) && free(level, boxes, ahead) {
                moves.push(Move::push(b, dir));
            }
        }
    }
    moves
}

pub fn legal_pulls(level: &Level, state: &State) -> Vec<Move> {
    let boxes = occupancy(level, state);
    let mut reach = SquareSet::new(level.size());
    flood(level, &boxes, state.player, &mut reach);
    pulls_with(level, state, &boxes, &reach)
}

pub(crate) fn pulls_with(
    level: &Level,
    state: &State,
    boxes: &SquareSet,
    reach: &SquareSet,
) -> Vec<Move> {
    let mut moves = Vec::new();
    for &b in &state.boxes {
        for dir in Direction::ALL {
            // The player stands where the box goes and steps back one more.
            let into = level.step(b, dir);
            if !reach.contains(into) {
                continue;
            }
            let retreat = level.step(into, dir);
            if free(level, boxes, retreat) {
                moves.push(Move::pull(b, dir));
            }
        }
    }
    moves
}

fn is_legal(level: &Level, state: &State, mv: Move) -> bool {
    if !state.has_box(mv.box_from) || level.is_wall(mv.box_from) {
        return false;
    }
    let boxes = occupancy(level, state);
    let reach = player_reachable(level, state);
    let into = level.step(mv.box_from, mv.direction);
    match mv.kind {
        MoveKind::Push => {
            reach.contains(level.step(mv.box_from, mv.direction.opposite()))
                && free(level, &boxes, into)
        }
        MoveKind::Pull => {
            reach.contains(into) && free(level, &boxes, level.step(into, mv.direction))
        }
    }
}

/// Result of a move without re-checking legality.
pub(crate) fn apply_unchecked(level: &Level, state: &State, mv: Move) -> (State, usize) {
    let into = level.step(mv.box_from, mv.direction);
    let mut next = state.clone();
    let idx = next.relocate_box(mv.box_from, into);
    next.player = match mv.kind {
        MoveKind::Push => mv.box_from,
        MoveKind::Pull => level.step(into, mv.direction),
    };
    (next, idx)
}

pub fn apply_push(level: &Level, state: &State, mv: Move) -> Result<State, MoveError> {
    apply_checked(level, state, mv, MoveKind::Push)
}

pub fn apply_pull(level: &Level, state: &State, mv: Move) -> Result<State, MoveError> {
    apply_checked(level, state, mv, MoveKind::Pull)
}

fn apply_checked(
    level: &Level,
    state: &State,
    mv: Move,
    kind: MoveKind,
) -> Result<State, MoveError> {
    if mv.kind != kind || !is_legal(level, state, mv) {
        return Err(MoveError::Illegal {
            kind: mv.kind,
            box_from: mv.box_from,
            direction: mv.direction,
        });
    }
    Ok(apply_unchecked(level, state, mv).0)
}

/// Box placement of the solved position: every box on a target.
pub fn goal_state(level: &Level) -> Vec<Square> {
    level.targets().to_vec()
}

pub fn packed_count(level: &Level, boxes: &[Square]) -> usize {
    boxes.iter().filter(|&&b| level.is_target(b)).count()
}

pub fn is_forward_goal(level: &Level, state: &State) -> bool {
    packed_count(level, &state.boxes) == state.boxes.len()
}

/// Relaxed backward goal: no box on any target.
pub fn is_backward_goal(level: &Level, state: &State) -> bool {
    packed_count(level, &state.boxes) == 0
}

/// Goal predicate of the given mode, on a box placement.
pub fn is_goal(level: &Level, mode: Mode, boxes: &[Square]) -> bool {
    let packed = packed_count(level, boxes);
    match mode {
        Mode::Forward => packed == boxes.len(),
        Mode::Backward => packed == 0,
    }
}

/// Squares from which a lone box can never be pushed onto any target.
/// Computed as the complement of pull-reachability from the targets.
pub fn dead_squares(level: &Level) -> SquareSet {
    let mut alive = SquareSet::new(level.size());
    let mut queue: VecDeque<Square> = level.targets().iter().copied().collect();
    for &t in level.targets() {
        alive.insert(t);
    }
    while let Some(b) = queue.pop_front() {
        for dir in Direction::ALL {
            let into = level.step(b, dir);
            if level.is_wall(into) {
                continue;
            }
            if level.is_floor(level.step(into, dir)) && !alive.contains(into) {
                alive.insert(into);
                queue.push_back(into);
            }
        }
    }
    let mut dead = SquareSet::new(level.size());
    for &sq in level.floor() {
        if !alive.contains(sq) {
            dead.insert(sq);
        }
    }
    dead
}

pub fn state_key(level: &Level, state: &State) -> StateKey {
    let reach = player_reachable(level, state);
    let region = reach.iter().next().unwrap_or(state.player);
    StateKey {
        boxes: state.boxes.clone().into_boxed_slice(),
        region,
    }
}
