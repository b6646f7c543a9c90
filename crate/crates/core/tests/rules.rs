//! Move rules checked against the independent oracle and under random play.

mod common;

use std::collections::{HashSet, VecDeque};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sokorl::board::{
    apply_pull, apply_push, legal_pulls, legal_pushes, packed_count, player_reachable, region_count,
    state_key, Regions, State, StateKey,
};
use sokorl::levels::Level;
use sokorl::oracle::enumerate_states;

/// Every position reachable with the engine's pushes.
fn engine_states(level: &Level, cap: usize) -> Option<HashSet<StateKey>> {
    let start = State::initial(level);
    let mut seen = HashSet::from([state_key(level, &start)]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        for mv in legal_pushes(level, &s) {
            let next = apply_push(level, &s, mv).unwrap();
            if seen.insert(state_key(level, &next)) {
                if seen.len() > cap {
                    return None;
                }
                queue.push_back(next);
            }
        }
    }
    Some(seen)
}

fn small_level(seed: u64, boxes: usize, wall_rate: f64) -> Option<Level> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    common::random_level(&mut rng, 5, boxes, wall_rate)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn push_graph_matches_oracle(seed in any::<u64>(), boxes in 1usize..=3, walls in 0.0f64..0.3) {
        if let Some(level) = small_level(seed, boxes, walls) {
            let ours = engine_states(&level, 200_000);
            let oracle = enumerate_states(&level, 200_000).ok();
            prop_assert_eq!(ours, oracle);
        }
    }

    #[test]
    fn random_walks_keep_invariants(seed in any::<u64>(), steps in 1usize..60) {
        let levels = common::microban();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let level = &levels[rng.gen_range(0..levels.len())];
        let mut state = State::initial(level);
        for _ in 0..steps {
            let pull = rng.gen_bool(0.5);
            let moves = if pull { legal_pulls(level, &state) } else { legal_pushes(level, &state) };
            if moves.is_empty() {
                break;
            }
            let mv = moves[rng.gen_range(0..moves.len())];
            let next = if pull { apply_pull(level, &state, mv) } else { apply_push(level, &state, mv) }.unwrap();
            // the inverse move restores the position up to the player's region
            let back = if pull {
                apply_push(level, &next, mv.mirrored(level))
            } else {
                apply_pull(level, &next, mv.mirrored(level))
            }.unwrap();
            prop_assert_eq!(state_key(level, &back), state_key(level, &state));

            prop_assert_eq!(next.boxes().len(), level.box_count());
            prop_assert!(next.boxes().windows(2).all(|w| w[0] < w[1]));
            prop_assert!(next.boxes().iter().all(|&b| level.is_floor(b)));
            prop_assert!(!next.has_box(next.player));
            prop_assert!(packed_count(level, next.boxes()) <= level.box_count());
            let regions = Regions::compute(level, next.boxes());
            prop_assert_eq!(regions.count(), region_count(level, next.boxes()));
            let reach = player_reachable(level, &next);
            prop_assert_eq!(regions.canonical(next.player), reach.iter().next());
            state = next;
        }
    }
}

#[test]
fn wrong_kind_is_rejected() {
    let level = &common::microban()[0];
    let state = State::initial(level);
    let push = legal_pushes(level, &state)[0];
    assert!(apply_pull(level, &state, push).is_err());
}
