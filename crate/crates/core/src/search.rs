//! ε-greedy tree search shared by training and inference.
//!
//! Each iteration descends from the root, taking the child with the highest
//! stored value with probability `1 - ε` and a uniformly random live child
//! otherwise, until it reaches a leaf. The leaf is expanded: every surviving
//! child gets a value from the current weights, the leaf's stored value
//! becomes the best child target `r + γ·V(child)`, and, when learning, the
//! weights take one TD(0) step on the leaf's features toward that target.
//! The target always comes from the best child, whichever child the
//! exploration later descends into.
//!
//! Backward searches start from a virtual root whose children are the packed
//! goal placement with the player in each free region.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;
use thiserror::Error;

use crate::board::{
    apply_unchecked, is_goal, packed_count, pulls_with, pushes_with, Mode, Move, Regions, Square,
    SquareSet, State, StateKey,
};
use crate::features::{
    assemble, BackwardTrajectory, DistanceTable, FeatureConfig, FeatureVector, HintIndex,
    RawFeatures,
};
use crate::levels::Level;
use crate::value::{Weights, WeightsError};

/// A level with its precomputed distance table and dead squares.
#[derive(Debug, Clone)]
pub struct Problem {
    pub level: Level,
    pub table: DistanceTable,
    pub dead: SquareSet,
}

impl Problem {
    pub fn new(level: Level) -> Problem {
        let table = DistanceTable::build(&level);
        let dead = table.dead_squares(&level);
        Problem { level, table, dead }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub mode: Mode,
    /// Maximum number of node expansions.
    pub node_cap: usize,
    pub epsilon: f64,
    pub gamma: f64,
    /// TD(0) learning rate; zero freezes the weights.
    pub alpha: f64,
    pub seed: u64,
    pub dead_square_pruning: bool,
    pub transposition: bool,
    pub time_limit: Option<Duration>,
    /// Keep a record of every backup (for inspection and tests).
    pub record_backups: bool,
    /// Also refresh expanded nodes on each descent path to `γ·max` of their
    /// live children. Off by default: only the expanded leaf is updated.
    pub refresh_path: bool,
}

impl SearchConfig {
    pub const DEFAULT_EPSILON: f64 = 0.1;

    pub fn new(mode: Mode, node_cap: usize) -> SearchConfig {
        SearchConfig {
            mode,
            node_cap,
            epsilon: Self::DEFAULT_EPSILON,
            gamma: FeatureConfig::DEFAULT_GAMMA,
            alpha: 0.0,
            seed: 0,
            dead_square_pruning: true,
            transposition: true,
            time_limit: None,
            record_backups: false,
            refresh_path: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("node cap must be positive")]
    ZeroCap,
    #[error("hint features need a backward trajectory")]
    MissingTrajectory,
    #[error("hint features are not available to the backward agent")]
    HintsInBackwardMode,
    #[error(transparent)]
    Weights(#[from] WeightsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone)]
pub struct SearchNode {
    pub state: State,
    pub stored_value: f64,
    /// `None` only for the backward virtual root.
    pub features: Option<FeatureVector>,
    pub reward: f64,
    pub terminal: bool,
    pub parent: Option<NodeId>,
    /// Move from the parent; `None` for the root and the backward region nodes.
    pub via: Option<Move>,
    pub depth: u32,
    first_child: u32,
    child_count: u32,
    expanded: bool,
    exhausted: bool,
}

impl SearchNode {
    pub fn is_expanded(&self) -> bool {
        self.expanded
    }

    /// Expanded with no surviving children, or every child exhausted.
    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn children(&self) -> impl Iterator<Item = NodeId> {
        (self.first_child..self.first_child + self.child_count).map(NodeId)
    }

    pub fn is_leaf(&self) -> bool {
        self.child_count == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackupEvent {
    pub node: NodeId,
    /// `r + γ·V` of every surviving child, in move order.
    pub child_targets: Vec<f64>,
    pub target: f64,
    pub value_before: f64,
    pub value_after: f64,
}

#[derive(Debug, Clone)]
pub struct SearchTree {
    pub mode: Mode,
    pub virtual_root: bool,
    nodes: Vec<SearchNode>,
}

impl SearchTree {
    pub fn node(&self, id: NodeId) -> &SearchNode {
        &self.nodes[id.index()]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    /// Nodes from the root to `id`, inclusive.
    pub fn path(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.node(cur).parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    pub fn moves_to(&self, id: NodeId) -> Vec<Move> {
        self.path(id)
            .into_iter()
            .filter_map(|n| self.node(n).via)
            .collect()
    }

    /// Leaf with the highest stored value, earliest created on ties. The
    /// backward virtual root is never returned.
    pub fn best_leaf(&self) -> Option<NodeId> {
        let mut best: Option<(NodeId, f64)> = None;
        for id in self.ids() {
            let node = self.node(id);
            if !node.is_leaf() || (self.virtual_root && id == NodeId::ROOT) {
                continue;
            }
            if best.is_none_or(|(_, v)| node.stored_value > v) {
                best = Some((id, node.stored_value));
            }
        }
        best.map(|(id, _)| id)
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub solved: bool,
    pub solution: Option<Vec<Move>>,
    pub goal_node: Option<NodeId>,
    pub expansions: usize,
    pub nodes_created: usize,
    pub max_depth: u32,
    pub timed_out: bool,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub tree: SearchTree,
    pub result: SearchResult,
    pub backups: Vec<BackupEvent>,
}

/// Runs a search seeded from `config.seed`.
pub fn run_search(
    problem: &Problem,
    weights: &mut Weights,
    config: &SearchConfig,
    hints: Option<&BackwardTrajectory>,
) -> Result<SearchOutcome, SearchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    run_search_with_rng(problem, weights, config, hints, &mut rng)
}

/// Runs a search drawing exploration randomness from `rng`.
pub fn run_search_with_rng<R: Rng>(
    problem: &Problem,
    weights: &mut Weights,
    config: &SearchConfig,
    hints: Option<&BackwardTrajectory>,
    rng: &mut R,
) -> Result<SearchOutcome, SearchError> {
    if config.node_cap == 0 {
        return Err(SearchError::ZeroCap);
    }
    let set = weights.features();
    if set.has_hints() {
        if config.mode == Mode::Backward {
            return Err(SearchError::HintsInBackwardMode);
        }
        if hints.is_none() {
            return Err(SearchError::MissingTrajectory);
        }
    }
    let hint_index = hints
        .filter(|_| set.has_hints())
        .map(|t| HintIndex::new(&problem.level, t));
    let mut search = Search {
        problem,
        config,
        features: FeatureConfig {
            set,
            gamma: config.gamma,
        },
        hints: hint_index.as_ref(),
        nodes: Vec::new(),
        seen: FxHashSet::default(),
        backups: Vec::new(),
        max_depth: 0,
    };
    let started = Instant::now();
    let root_done = search.init_root(weights);
    let mut expansions = 0;
    let mut goal = root_done;
    let mut timed_out = false;
    while goal.is_none() && expansions < config.node_cap {
        if search.nodes[0].exhausted {
            break;
        }
        if let Some(limit) = config.time_limit {
            if expansions % 64 == 0 && started.elapsed() >= limit {
                timed_out = true;
                break;
            }
        }
        let leaf = search.descend(rng);
        goal = search.expand(leaf, weights);
        expansions += 1;
    }
    let tree = SearchTree {
        mode: config.mode,
        virtual_root: config.mode == Mode::Backward,
        nodes: search.nodes,
    };
    let solution = goal.map(|g| tree.moves_to(g));
    let result = SearchResult {
        solved: goal.is_some(),
        solution,
        goal_node: goal,
        expansions,
        nodes_created: tree.len(),
        max_depth: search.max_depth,
        timed_out,
        elapsed: started.elapsed(),
    };
    Ok(SearchOutcome {
        tree,
        result,
        backups: search.backups,
    })
}

struct Search<'a> {
    problem: &'a Problem,
    config: &'a SearchConfig,
    features: FeatureConfig,
    hints: Option<&'a HintIndex>,
    nodes: Vec<SearchNode>,
    seen: FxHashSet<StateKey>,
    backups: Vec<BackupEvent>,
    max_depth: u32,
}

struct ChildDraft {
    state: State,
    via: Option<Move>,
    vector: FeatureVector,
    value: f64,
    reward: f64,
}

impl Search<'_> {
    fn level(&self) -> &Level {
        &self.problem.level
    }

    fn new_node(&self, state: State, parent: Option<NodeId>, via: Option<Move>, depth: u32) -> SearchNode {
        SearchNode {
            state,
            stored_value: 0.0,
            features: None,
            reward: 0.0,
            terminal: false,
            parent,
            via,
            depth,
            first_child: 0,
            child_count: 0,
            expanded: false,
            exhausted: false,
        }
    }

    /// Creates the root; returns it when the root already satisfies the goal.
    fn init_root(&mut self, weights: &Weights) -> Option<NodeId> {
        let level = self.level();
        match self.config.mode {
            Mode::Forward => {
                let state = State::initial(level);
                let region = Regions::compute(level, state.boxes());
                let key = StateKey {
                    boxes: state.boxes().into(),
                    region: region.canonical(state.player).unwrap_or(state.player),
                };
                let raw = self.raw_full(state.boxes(), &region);
                let vector = assemble(level, &self.features, Mode::Forward, &raw);
                let goal = is_goal(level, Mode::Forward, state.boxes());
                let mut root = self.new_node(state, None, None, 0);
                root.stored_value = weights.dot(&vector);
                root.features = Some(vector);
                root.terminal = goal;
                root.reward = if goal { 1.0 } else { 0.0 };
                self.nodes.push(root);
                if self.config.transposition {
                    self.seen.insert(key);
                }
                goal.then_some(NodeId::ROOT)
            }
            Mode::Backward => {
                let boxes = level.targets().to_vec();
                let player = level
                    .floor()
                    .iter()
                    .copied()
                    .find(|sq| !level.is_target(*sq))
                    .unwrap_or(level.initial_player());
                let goal = is_goal(level, Mode::Backward, &boxes);
                let mut root = self.new_node(State::new(boxes, player), None, None, 0);
                root.terminal = goal;
                root.reward = if goal { 1.0 } else { 0.0 };
                self.nodes.push(root);
                goal.then_some(NodeId::ROOT)
            }
        }
    }

    fn raw_full(&self, boxes: &[Square], regions: &Regions) -> RawFeatures {
        let level = self.level();
        let (overlap, perm_prefix) = match self.hints {
            Some(h) => (h.max_overlap(boxes) as usize, h.perm_prefix(boxes)),
            None => (0, 0),
        };
        RawFeatures {
            packed: packed_count(level, boxes),
            distance: self
                .problem
                .table
                .assignment(boxes)
                .value()
                .map(|v| v as u32),
            regions: regions.count(),
            overlap,
            perm_prefix,
        }
    }

    /// Walks from the root to a leaf. With `refresh_path`, expanded nodes
    /// passed on the way take the best current target of their live children
    /// as their value, so deeper expansions reach the ancestors.
    fn descend<R: Rng>(&mut self, rng: &mut R) -> NodeId {
        let gamma = self.config.gamma;
        let mut id = NodeId::ROOT;
        loop {
            let node = &self.nodes[id.index()];
            if !node.expanded {
                return id;
            }
            let live: Vec<NodeId> = node
                .children()
                .filter(|c| !self.nodes[c.index()].exhausted)
                .collect();
            let mut best: Option<(NodeId, f64)> = None;
            for &c in &live {
                let v = self.nodes[c.index()].stored_value;
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((c, v));
                }
            }
            let (best, best_value) = best.expect("expanded node on the descent path has a live child");
            if self.config.refresh_path {
                self.nodes[id.index()].stored_value = gamma * best_value;
            }
            let explore = self.config.epsilon > 0.0 && rng.gen::<f64>() < self.config.epsilon;
            id = if explore {
                live[rng.gen_range(0..live.len())]
            } else {
                best
            };
        }
    }

    fn key_of(&self, state: &State, regions: &Regions) -> StateKey {
        StateKey {
            boxes: state.boxes().into(),
            region: regions.canonical(state.player).unwrap_or(state.player),
        }
    }

    /// Candidate children of a real (non-virtual) node, with pruning applied.
    fn generate(&mut self, id: NodeId, weights: &Weights) -> Vec<ChildDraft> {
        let level = &self.problem.level;
        let mode = self.config.mode;
        let parent = self.nodes[id.index()].state.clone();
        let occupied = SquareSet::from_squares(level.size(), parent.boxes());
        let mut reach = SquareSet::new(level.size());
        {
            let mut stack = vec![parent.player];
            reach.insert(parent.player);
            while let Some(sq) = stack.pop() {
                for dir in crate::board::Direction::ALL {
                    let next = level.step(sq, dir);
                    if level.is_floor(next) && !occupied.contains(next) && !reach.contains(next) {
                        reach.insert(next);
                        stack.push(next);
                    }
                }
            }
        }
        let moves = match mode {
            Mode::Forward => pushes_with(level, &parent, &occupied, &reach),
            Mode::Backward => pulls_with(level, &parent, &occupied, &reach),
        };
        if moves.is_empty() {
            return Vec::new();
        }
        let assignment = self.problem.table.assignment(parent.boxes());
        let overlap_counts = self.hints.map(|h| h.overlap_counts(parent.boxes()));
        let mut row = vec![0i64; parent.boxes().len()];
        let parent_packed = packed_count(level, parent.boxes());
        let mut drafts = Vec::with_capacity(moves.len());
        for mv in moves {
            let to = level.step(mv.box_from, mv.direction);
            let prune_dead = mode == Mode::Forward && self.config.dead_square_pruning;
            if prune_dead && self.problem.dead.contains(to) {
                continue;
            }
            let (child, _) = apply_unchecked(level, &parent, mv);
            let regions = Regions::compute(level, child.boxes());
            if self.config.transposition {
                let key = self.key_of(&child, &regions);
                if !self.seen.insert(key) {
                    continue;
                }
            }
            let moved_row = parent
                .boxes()
                .binary_search(&mv.box_from)
                .expect("moved box belongs to the parent");
            self.problem.table.cost_row(to, &mut row);
            let distance = assignment.value_with_row(moved_row, &row).map(|v| v as u32);
            if distance.is_none() && prune_dead {
                continue;
            }
            let packed = parent_packed - level.is_target(mv.box_from) as usize
                + level.is_target(to) as usize;
            let (overlap, perm_prefix) = match (self.hints, &overlap_counts) {
                (Some(h), Some(counts)) => (
                    h.max_overlap_after_move(counts, mv.box_from, to) as usize,
                    h.perm_prefix(child.boxes()),
                ),
                _ => (0, 0),
            };
            let raw = RawFeatures {
                packed,
                distance,
                regions: regions.count(),
                overlap,
                perm_prefix,
            };
            let vector = assemble(level, &self.features, mode, &raw);
            let goal = match mode {
                Mode::Forward => packed == child.boxes().len(),
                Mode::Backward => packed == 0,
            };
            drafts.push(ChildDraft {
                value: weights.dot(&vector),
                reward: if goal { 1.0 } else { 0.0 },
                state: child,
                via: Some(mv),
                vector,
            });
        }
        drafts
    }

    /// Children of the backward virtual root: the packed placement with the
    /// player in each free region.
    fn generate_regions(&mut self, weights: &Weights) -> Vec<ChildDraft> {
        let level = &self.problem.level;
        let boxes = level.targets().to_vec();
        let regions = Regions::compute(level, &boxes);
        let raw = self.raw_full(&boxes, &regions);
        let vector = assemble(level, &self.features, Mode::Backward, &raw);
        let value = weights.dot(&vector);
        let goal = is_goal(level, Mode::Backward, &boxes);
        let mut drafts = Vec::new();
        for &rep in regions.representatives() {
            let state = State::new(boxes.clone(), rep);
            if self.config.transposition {
                let key = self.key_of(&state, &regions);
                if !self.seen.insert(key) {
                    continue;
                }
            }
            drafts.push(ChildDraft {
                state,
                via: None,
                vector,
                value,
                reward: if goal { 1.0 } else { 0.0 },
            });
        }
        drafts
    }

    /// Expands a leaf; returns the first rewarded child, if any.
    fn expand(&mut self, id: NodeId, weights: &mut Weights) -> Option<NodeId> {
        let is_virtual = self.config.mode == Mode::Backward && id == NodeId::ROOT;
        let drafts = if is_virtual {
            self.generate_regions(weights)
        } else {
            self.generate(id, weights)
        };
        let gamma = self.config.gamma;
        let first = self.nodes.len() as u32;
        let depth = self.nodes[id.index()].depth + 1;
        let mut target = f64::NEG_INFINITY;
        let mut child_targets = Vec::new();
        let mut goal = None;
        for (i, d) in drafts.into_iter().enumerate() {
            let terminal = d.reward > 0.0;
            let t = d.reward + if terminal { 0.0 } else { gamma * d.value };
            target = target.max(t);
            if self.config.record_backups {
                child_targets.push(t);
            }
            let mut node = self.new_node(d.state, Some(id), d.via, depth);
            node.stored_value = if terminal { d.reward } else { d.value };
            node.features = Some(d.vector);
            node.reward = d.reward;
            node.terminal = terminal;
            node.exhausted = terminal;
            if terminal && goal.is_none() {
                goal = Some(NodeId(first + i as u32));
            }
            self.nodes.push(node);
        }
        let count = self.nodes.len() as u32 - first;
        self.max_depth = self.max_depth.max(if count > 0 { depth } else { depth - 1 });
        let value_before = self.nodes[id.index()].stored_value;
        {
            let node = &mut self.nodes[id.index()];
            node.expanded = true;
            node.first_child = first;
            node.child_count = count;
        }
        if count == 0 {
            // Dead end: value zero, never descended into again.
            self.nodes[id.index()].stored_value = 0.0;
            self.mark_exhausted(id);
            return None;
        }
        if self.config.alpha > 0.0 {
            if let Some(fv) = self.nodes[id.index()].features {
                weights
                    .td_update(&fv, target, self.config.alpha)
                    .expect("search vectors use the weights' feature set");
            }
        }
        self.nodes[id.index()].stored_value = target;
        if self.config.record_backups {
            self.backups.push(BackupEvent {
                node: id,
                child_targets,
                target,
                value_before,
                value_after: target,
            });
        }
        goal
    }

    fn mark_exhausted(&mut self, id: NodeId) {
        let mut cur = id;
        self.nodes[cur.index()].exhausted = true;
        while let Some(p) = self.nodes[cur.index()].parent {
            let all = self.nodes[p.index()]
                .children()
                .all(|c| self.nodes[c.index()].exhausted);
            if !all {
                break;
            }
            self.nodes[p.index()].exhausted = true;
            cur = p;
        }
    }
}

/// Box placements along the branch to `leaf`, starting at the packed goal
/// placement (the virtual root is skipped).
fn branch_states(tree: &SearchTree, leaf: NodeId) -> Vec<Vec<Square>> {
    tree.path(leaf)
        .into_iter()
        .filter(|&id| !(tree.virtual_root && id == NodeId::ROOT))
        .map(|id| tree.node(id).state.boxes().to_vec())
        .collect()
}

/// Backward trajectory of a finished backward search: the branch to the
/// rewarded node when solved, otherwise to the highest-valued leaf.
pub fn extract_backward_trajectory(level: &Level, outcome: &SearchOutcome) -> BackwardTrajectory {
    let tree = &outcome.tree;
    let end = outcome.result.goal_node.or_else(|| tree.best_leaf());
    let states = match end {
        Some(id) => branch_states(tree, id),
        None => Vec::new(),
    };
    let states = if states.is_empty() {
        vec![level.targets().to_vec()]
    } else {
        states
    };
    BackwardTrajectory::from_states(level, states)
}
