//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use sokorl::levels::{parse_collection, parse_xsb, Level};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn collection(name: &str) -> Vec<Level> {
    let text = std::fs::read_to_string(data_path(name)).expect("corpus file");
    parse_collection(&text).expect("corpus parses")
}

pub fn microban() -> Vec<Level> {
    collection("microban.xsb")
}

pub fn xsokoban() -> Vec<Level> {
    collection("xsokoban.xsb")
}

/// Interior cells of a random room, `true` for floor. With `wall_rate` zero
/// the room is an open rectangle; otherwise only the largest connected
/// floor component survives.
fn random_room<R: Rng>(rng: &mut R, w: usize, h: usize, wall_rate: f64) -> Vec<bool> {
    let mut floor: Vec<bool> = (0..w * h).map(|_| !rng.gen_bool(wall_rate)).collect();
    let mut label = vec![usize::MAX; w * h];
    let mut best = (0, usize::MAX);
    for start in 0..w * h {
        if !floor[start] || label[start] != usize::MAX {
            continue;
        }
        let mut size = 0;
        let mut stack = vec![start];
        label[start] = start;
        while let Some(c) = stack.pop() {
            size += 1;
            let (x, y) = (c % w, c / w);
            let mut near = Vec::new();
            if x > 0 {
                near.push(c - 1);
            }
            if x + 1 < w {
                near.push(c + 1);
            }
            if y > 0 {
                near.push(c - w);
            }
            if y + 1 < h {
                near.push(c + w);
            }
            for n in near {
                if floor[n] && label[n] == usize::MAX {
                    label[n] = start;
                    stack.push(n);
                }
            }
        }
        if size > best.0 {
            best = (size, start);
        }
    }
    for c in 0..w * h {
        floor[c] = floor[c] && label[c] == best.1;
    }
    floor
}

/// A random level with an interior of at most `max_side` squared cells and
/// `boxes` boxes, or `None` when the room came out too small.
pub fn random_level<R: Rng>(rng: &mut R, max_side: usize, boxes: usize, wall_rate: f64) -> Option<Level> {
    let w = rng.gen_range(3..=max_side);
    let h = rng.gen_range(3..=max_side);
    let floor = random_room(rng, w, h, wall_rate);
    let mut cells: Vec<usize> = (0..w * h).filter(|&c| floor[c]).collect();
    if cells.len() < boxes + 2 {
        return None;
    }
    let pick = |rng: &mut R, from: &mut Vec<usize>| from.swap_remove(rng.gen_range(0..from.len()));
    let mut pool = cells.clone();
    let targets: Vec<usize> = (0..boxes).map(|_| pick(rng, &mut pool)).collect();
    let placed: Vec<usize> = (0..boxes).map(|_| pick(rng, &mut cells)).collect();
    let player = pick(rng, &mut cells);
    let mut text = String::new();
    for y in 0..h + 2 {
        for x in 0..w + 2 {
            let ch = if x == 0 || y == 0 || x == w + 1 || y == h + 1 || !floor[(y - 1) * w + x - 1] {
                '#'
            } else {
                let c = (y - 1) * w + x - 1;
                match (targets.contains(&c), placed.contains(&c), c == player) {
                    (true, true, _) => '*',
                    (false, true, _) => '$',
                    (true, false, true) => '+',
                    (false, false, true) => '@',
                    (true, false, false) => '.',
                    (false, false, false) => ' ',
                }
            };
            text.push(ch);
        }
        text.push('\n');
    }
    Some(parse_xsb(&text).expect("generated level is valid"))
}
