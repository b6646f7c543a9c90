//! Structural properties of search trees on real levels.

mod common;

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sokorl::board::{state_key, Mode};
use sokorl::features::{FeatureKind, FeatureSet};
use sokorl::lurd::{reconstruct_lurd, replay};
use sokorl::oracle::{optimal_push_count, PushCount};
use sokorl::search::{extract_backward_trajectory, run_search, NodeId, Problem, SearchConfig};
use sokorl::value::Weights;

fn distance_weights() -> Weights {
    let set = FeatureSet::core();
    let mut values = vec![0.0; set.len()];
    values[set.index_of(FeatureKind::Targets).unwrap()] = 1.0;
    values[set.index_of(FeatureKind::Distance).unwrap()] = -1.0;
    Weights::from_values(set, 0.95, &values)
}

#[test]
fn forward_trees_are_well_formed() {
    for level in common::microban().into_iter().take(25) {
        let problem = Problem::new(level);
        let mut w = distance_weights();
        let mut cfg = SearchConfig::new(Mode::Forward, 500);
        cfg.seed = 5;
        let out = run_search(&problem, &mut w, &cfg, None).unwrap();
        let tree = &out.tree;
        assert!(out.result.expansions <= 500);
        let mut keys = HashSet::new();
        for id in tree.ids() {
            let node = tree.node(id);
            assert!(keys.insert(state_key(&problem.level, &node.state)), "transposition let a duplicate in");
            for c in node.children() {
                assert_eq!(tree.node(c).parent, Some(id));
                assert_eq!(tree.node(c).depth, node.depth + 1);
            }
            if id != NodeId::ROOT {
                assert!(node.via.is_some());
            }
        }
        let expanded = tree.ids().filter(|&id| tree.node(id).is_expanded()).count();
        assert_eq!(expanded, out.result.expansions);
        if let Some(moves) = &out.result.solution {
            let lurd = reconstruct_lurd(&problem.level, moves).unwrap();
            let r = replay(&problem.level, &lurd).unwrap();
            assert!(r.solved);
            assert_eq!(r.pushes, moves.len());
        }
    }
}

#[test]
fn seeded_searches_repeat() {
    let problem = Problem::new(common::microban()[40].clone());
    let run = |seed| {
        let mut w = distance_weights();
        let mut cfg = SearchConfig::new(Mode::Forward, 300);
        cfg.seed = seed;
        cfg.alpha = 0.01;
        let out = run_search(&problem, &mut w, &cfg, None).unwrap();
        (out.result.expansions, out.result.solution, w)
    };
    assert_eq!(run(3), run(3));
}

#[test]
fn backward_trajectories_start_packed() {
    for level in common::microban().into_iter().take(20) {
        let problem = Problem::new(level);
        let mut w = Weights::zeros(FeatureSet::core(), 0.95);
        let cfg = SearchConfig::new(Mode::Backward, 200);
        let out = run_search(&problem, &mut w, &cfg, None).unwrap();
        let traj = extract_backward_trajectory(&problem.level, &out);
        assert_eq!(traj.states[0], problem.level.targets().to_vec());
        let mut order = traj.packing_order.clone();
        order.sort_unstable();
        assert_eq!(order, problem.level.targets().to_vec());
        // consecutive placements differ by exactly one box
        for pair in traj.states.windows(2) {
            let moved = pair[0].iter().filter(|b| !pair[1].contains(b)).count();
            assert_eq!(moved, 1);
        }
    }
}

#[test]
fn greedy_distance_search_is_complete_on_small_boards() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let set = FeatureSet::core();
    let mut values = vec![0.0; set.len()];
    values[set.index_of(FeatureKind::Distance).unwrap()] = -1.0;
    let weights = Weights::from_values(set, 0.95, &values);
    let (mut solvable, mut checked) = (0, 0);
    while checked < 200 {
        let boxes = 1 + checked % 3;
        let Some(level) = common::random_level(&mut rng, 6, boxes, 0.2) else { continue };
        let Ok(expected) = optimal_push_count(&level, 300_000) else { continue };
        checked += 1;
        let problem = Problem::new(level);
        let mut cfg = SearchConfig::new(Mode::Forward, usize::MAX);
        cfg.epsilon = 0.0;
        let out = run_search(&problem, &mut weights.clone(), &cfg, None).unwrap();
        let solvable_here = matches!(expected, PushCount::Solved(_));
        solvable += solvable_here as usize;
        assert_eq!(out.result.solved, solvable_here, "{}", problem.level);
    }
    assert!(solvable >= 30, "too few solvable boards generated: {solvable}");
}
