//! XSB level notation: single levels and multi-level collection files.
//!
//! Symbols: `#` wall, `@` player, `+` player on target, `$` box, `*` box on
//! target, `.` target, and space (or `-`/`_`) for floor. Rows may be ragged;
//! short rows are padded with wall. After parsing, every square outside the
//! region the player can walk to (boxes treated as passable) becomes wall, so
//! a [`Level`] only ever contains its playable interior as floor.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use crate::board::{Direction, Square};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LevelError {
    #[error("level is empty")]
    Empty,
    #[error("unknown symbol {symbol:?} at row {row}, column {col}")]
    UnknownSymbol { symbol: char, row: usize, col: usize },
    #[error("level has no player")]
    NoPlayer,
    #[error("level has {0} players")]
    MultiplePlayers(usize),
    #[error("{boxes} boxes but {targets} targets")]
    CountMismatch { boxes: usize, targets: usize },
    #[error("the player's area is not enclosed by walls (reaches the border at row {row}, column {col})")]
    Leak { row: usize, col: usize },
    #[error("a box or target at row {row}, column {col} lies outside the player's area")]
    Unreachable { row: usize, col: usize },
    #[error("level is too large ({width}x{height})")]
    TooLarge { width: usize, height: usize },
}

#[derive(Debug, Error)]
#[error("level {} ({name})", index + 1)]
pub struct CollectionError {
    /// Zero-based position of the failing level in the file.
    pub index: usize,
    pub name: String,
    #[source]
    pub source: LevelError,
}

/// Immutable board geometry plus the initial box and player placement.
///
/// Squares are indexed row-major (`y * width + x`). Floor squares never sit on
/// the grid border, so stepping from a floor square in any direction always
/// stays inside the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    target_mask: Vec<bool>,
    targets: Vec<Square>,
    floor: Vec<Square>,
    initial_boxes: Vec<Square>,
    initial_player: Square,
    name: Option<String>,
}

impl Level {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn size(&self) -> usize {
        self.width * self.height
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn set_name(&mut self, name: Option<String>) {
        self.name = name;
    }

    pub fn square(&self, x: usize, y: usize) -> Square {
        debug_assert!(x < self.width && y < self.height);
        (y * self.width + x) as Square
    }

    pub fn xy(&self, sq: Square) -> (usize, usize) {
        let i = sq as usize;
        (i % self.width, i / self.width)
    }

    pub fn is_wall(&self, sq: Square) -> bool {
        self.walls[sq as usize]
    }

    pub fn is_floor(&self, sq: Square) -> bool {
        !self.walls[sq as usize]
    }

    pub fn is_target(&self, sq: Square) -> bool {
        self.target_mask[sq as usize]
    }

    /// Target squares in ascending order.
    pub fn targets(&self) -> &[Square] {
        &self.targets
    }

    /// Floor squares in ascending order.
    pub fn floor(&self) -> &[Square] {
        &self.floor
    }

    pub fn initial_boxes(&self) -> &[Square] {
        &self.initial_boxes
    }

    pub fn initial_player(&self) -> Square {
        self.initial_player
    }

    pub fn box_count(&self) -> usize {
        self.initial_boxes.len()
    }

    /// Neighbor of a floor square. Only meaningful for floor squares, whose
    /// neighbors are always in the grid.
    #[inline]
    pub fn step(&self, sq: Square, dir: Direction) -> Square {
        let w = self.width as isize;
        let delta = match dir {
            Direction::Up => -w,
            Direction::Down => w,
            Direction::Left => -1,
            Direction::Right => 1,
        };
        (sq as isize + delta) as Square
    }

    /// Like [`Level::step`] but checks the grid bounds, for arbitrary squares.
    pub fn checked_step(&self, sq: Square, dir: Direction) -> Option<Square> {
        let (x, y) = self.xy(sq);
        let (x, y) = match dir {
            Direction::Up if y > 0 => (x, y - 1),
            Direction::Down if y + 1 < self.height => (x, y + 1),
            Direction::Left if x > 0 => (x - 1, y),
            Direction::Right if x + 1 < self.width => (x + 1, y),
            _ => return None,
        };
        Some(self.square(x, y))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Raw {
    Wall,
    Floor,
    Outside,
}

/// Parses a single level in XSB notation.
pub fn parse_xsb(text: &str) -> Result<Level, LevelError> {
    let rows: Vec<&str> = text
        .lines()
        .map(|l| l.trim_end_matches(['\r', '\n']))
        .collect();
    // Drop leading/trailing blank rows; interior blank rows are kept as open space.
    let first = rows.iter().position(|r| !r.trim().is_empty());
    let last = rows.iter().rposition(|r| !r.trim().is_empty());
    let rows = match (first, last) {
        (Some(a), Some(b)) => &rows[a..=b],
        _ => return Err(LevelError::Empty),
    };

    let height = rows.len();
    let width = rows.iter().map(|r| r.chars().count()).max().unwrap_or(0);
    if width * height > Square::MAX as usize {
        return Err(LevelError::TooLarge { width, height });
    }

    let mut raw = vec![Raw::Outside; width * height];
    let mut targets = Vec::new();
    let mut boxes = Vec::new();
    let mut players = Vec::new();
    for (y, row) in rows.iter().enumerate() {
        for (x, ch) in row.chars().enumerate() {
            let sq = y * width + x;
            raw[sq] = Raw::Floor;
            match ch {
                '#' => raw[sq] = Raw::Wall,
                ' ' | '-' | '_' => {}
                '.' => targets.push(sq),
                '$' => boxes.push(sq),
                '*' => {
                    boxes.push(sq);
                    targets.push(sq);
                }
                '@' => players.push(sq),
                '+' => {
                    players.push(sq);
                    targets.push(sq);
                }
                other => {
                    return Err(LevelError::UnknownSymbol {
                        symbol: other,
                        row: y,
                        col: x,
                    })
                }
            }
        }
    }

    let player = match players.len() {
        0 => return Err(LevelError::NoPlayer),
        1 => players[0],
        n => return Err(LevelError::MultiplePlayers(n)),
    };
    if boxes.len() != targets.len() {
        return Err(LevelError::CountMismatch {
            boxes: boxes.len(),
            targets: targets.len(),
        });
    }

    // Flood the interior from the player, walking through boxes.
    let mut interior = vec![false; width * height];
    let mut queue = VecDeque::from([player]);
    interior[player] = true;
    while let Some(sq) = queue.pop_front() {
        let (x, y) = (sq % width, sq / width);
        if x == 0 || y == 0 || x + 1 == width || y + 1 == height {
            return Err(LevelError::Leak { row: y, col: x });
        }
        for next in [sq - width, sq + width, sq - 1, sq + 1] {
            if !interior[next] && raw[next] == Raw::Floor {
                interior[next] = true;
                queue.push_back(next);
            }
        }
    }
    // A box already on its target in a sealed-off pocket can never move; it
    // is part of the scenery.
    let sealed = |sq: &usize| !interior[*sq] && boxes.contains(sq) && targets.contains(sq);
    let scenery: Vec<usize> = boxes.iter().filter(|sq| sealed(sq)).copied().collect();
    boxes.retain(|sq| !scenery.contains(sq));
    targets.retain(|sq| !scenery.contains(sq));
    if let Some(&sq) = boxes.iter().chain(&targets).find(|&&sq| !interior[sq]) {
        return Err(LevelError::Unreachable {
            row: sq / width,
            col: sq % width,
        });
    }

    boxes.sort_unstable();
    targets.sort_unstable();
    let walls: Vec<bool> = interior.iter().map(|&inside| !inside).collect();
    let mut target_mask = vec![false; width * height];
    for &t in &targets {
        target_mask[t] = true;
    }
    let floor = (0..width * height)
        .filter(|&i| interior[i])
        .map(|i| i as Square)
        .collect();

    Ok(Level {
        width,
        height,
        walls,
        target_mask,
        targets: targets.into_iter().map(|t| t as Square).collect(),
        floor,
        initial_boxes: boxes.into_iter().map(|b| b as Square).collect(),
        initial_player: player as Square,
        name: None,
    })
}

/// A row of board symbols, as opposed to a title or metadata line.
fn is_board_row(line: &str) -> bool {
    line.contains('#') && line.chars().all(|c| "#@+$*. -_".contains(c))
}

/// Parses a collection file: levels separated by blank lines, with `;`
/// comment lines naming the level that follows. Other non-board lines in a
/// level's block (titles, `Author:` lines) are treated as metadata.
pub fn parse_collection(text: &str) -> Result<Vec<Level>, CollectionError> {
    let mut levels = Vec::new();
    let mut comments: Vec<String> = Vec::new();
    let mut board: Vec<&str> = Vec::new();
    let mut meta: Vec<String> = Vec::new();

    let mut flush = |board: &mut Vec<&str>,
                     comments: &mut Vec<String>,
                     meta: &mut Vec<String>|
     -> Result<(), CollectionError> {
        if board.is_empty() {
            meta.clear();
            return Ok(());
        }
        let name = comments
            .last()
            .cloned()
            .or_else(|| meta.first().cloned())
            .filter(|s| !s.is_empty());
        let index = levels.len();
        let mut level = parse_xsb(&board.join("\n")).map_err(|source| CollectionError {
            index,
            name: name.clone().unwrap_or_else(|| format!("#{}", index + 1)),
            source,
        })?;
        level.set_name(name);
        levels.push(level);
        board.clear();
        comments.clear();
        meta.clear();
        Ok(())
    };

    for line in text.lines() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut board, &mut comments, &mut meta)?;
        } else if let Some(comment) = line.strip_prefix(';') {
            flush(&mut board, &mut comments, &mut meta)?;
            comments.push(comment.trim().to_string());
        } else if is_board_row(line) {
            board.push(line);
        } else if board.is_empty() {
            meta.push(line.trim().trim_matches('\'').to_string());
        } else {
            // Metadata directly after a board ends the board.
            flush(&mut board, &mut comments, &mut meta)?;
        }
    }
    flush(&mut board, &mut comments, &mut meta)?;
    Ok(levels)
}

fn symbol(is_wall: bool, target: bool, boxed: bool, player: bool) -> char {
    match (is_wall, target, boxed, player) {
        (true, ..) => '#',
        (_, true, true, _) => '*',
        (_, false, true, _) => '$',
        (_, true, false, true) => '+',
        (_, false, false, true) => '@',
        (_, true, false, false) => '.',
        _ => ' ',
    }
}

/// Renders a board with the given box and player placement. Walls that do not
/// touch the interior (8-neighborhood) print as blanks; trailing blanks are
/// trimmed.
pub fn render(level: &Level, boxes: &[Square], player: Option<Square>) -> String {
    let (w, h) = (level.width, level.height);
    let mut has_box = vec![false; w * h];
    for &b in boxes {
        has_box[b as usize] = true;
    }
    let touches_floor = |x: usize, y: usize| {
        (y.saturating_sub(1)..=(y + 1).min(h - 1)).any(|yy| {
            (x.saturating_sub(1)..=(x + 1).min(w - 1)).any(|xx| !level.walls[yy * w + xx])
        })
    };
    let mut out = String::new();
    for y in 0..h {
        let mut line = String::with_capacity(w);
        for x in 0..w {
            let sq = y * w + x;
            let ch = if level.walls[sq] && !touches_floor(x, y) {
                ' '
            } else {
                symbol(
                    level.walls[sq],
                    level.target_mask[sq],
                    has_box[sq],
                    player == Some(sq as Square),
                )
            };
            line.push(ch);
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Serializes a level (initial placement) back to XSB.
pub fn serialize_xsb(level: &Level) -> String {
    render(level, &level.initial_boxes, Some(level.initial_player))
}

/// Serializes several levels as a collection, naming each with a `;` line.
pub fn serialize_collection(levels: &[Level]) -> String {
    let mut out = String::new();
    for (i, level) in levels.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if let Some(name) = level.name() {
            out.push_str("; ");
            out.push_str(name);
            out.push_str("\n\n");
        }
        out.push_str(&serialize_xsb(level));
    }
    out
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_xsb(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_level() {
        let level = parse_xsb("#####\n#@$.#\n#####").unwrap();
        assert_eq!(level.initial_boxes(), &[level.square(2, 1)]);
        assert_eq!(level.targets(), &[level.square(3, 1)]);
        assert_eq!(level.initial_player(), level.square(1, 1));
        assert_eq!(level.floor().len(), 3);
    }

    #[test]
    fn count_mismatch() {
        let err = parse_xsb("######\n#@$$.#\n######").unwrap_err();
        assert_eq!(err, LevelError::CountMismatch { boxes: 2, targets: 1 });
    }

    #[test]
    fn box_on_target_counts_for_both() {
        let err = parse_xsb("#####\n#@*.#\n#####").unwrap_err();
        assert_eq!(err, LevelError::CountMismatch { boxes: 1, targets: 2 });
    }

    #[test]
    fn player_errors() {
        assert_eq!(parse_xsb("#####\n# $.#\n#####"), Err(LevelError::NoPlayer));
        assert_eq!(
            parse_xsb("######\n#@@$.#\n######"),
            Err(LevelError::MultiplePlayers(2))
        );
    }

    #[test]
    fn leak_is_rejected() {
        assert!(matches!(
            parse_xsb("#####\n#@$. \n#####"),
            Err(LevelError::Leak { .. })
        ));
        // ragged right edge is padded with wall, so this one is closed
        let level = parse_xsb("#####\n#@$.\n#####").unwrap();
        assert_eq!(level.width(), 5);
    }

    #[test]
    fn unknown_symbol() {
        assert_eq!(
            parse_xsb("#####\n#@$x#\n#####"),
            Err(LevelError::UnknownSymbol {
                symbol: 'x',
                row: 1,
                col: 3
            })
        );
    }

    #[test]
    fn exterior_is_normalized_to_wall() {
        let level = parse_xsb("  ###\n###@#\n#.$ #\n#####").unwrap();
        assert!(level.is_wall(level.square(0, 0)));
        assert_eq!(level.floor().len(), 4);
        assert!(serialize_xsb(&level).starts_with("  ###\n"));
    }

    #[test]
    fn symbols_on_targets() {
        let level = parse_xsb("#####\n#+ $#\n#*.$#\n#####").unwrap();
        let text = serialize_xsb(&level);
        assert!(text.contains('+'));
        assert!(text.contains('*'));
        assert_eq!(parse_xsb(&text).unwrap(), level);
    }

    #[test]
    fn round_trip() {
        let text = "#####\n#@$.#\n#####\n";
        let level = parse_xsb(text).unwrap();
        assert_eq!(serialize_xsb(&level), text);
    }

    #[test]
    fn collection_with_comments() {
        let text = "; first\n\n#####\n#@$.#\n#####\n\n; second\n#####\n#.$@#\n#####\n";
        let levels = parse_collection(text).unwrap();
        assert_eq!(levels.len(), 2);
        assert_eq!(levels[0].name(), Some("first"));
        assert_eq!(levels[1].name(), Some("second"));
    }

    #[test]
    fn collection_reports_index() {
        let text = "#####\n#@$.#\n#####\n\n#####\n#@$$#\n#####\n";
        let err = parse_collection(text).unwrap_err();
        assert_eq!(err.index, 1);
    }

    #[test]
    fn title_lines_are_metadata() {
        let text = "; 1\n'The Title'\n\n#####\n#@$.#\n#####\nAuthor: someone\n";
        let levels = parse_collection(text).unwrap();
        assert_eq!(levels.len(), 1);
        assert_eq!(levels[0].name(), Some("1"));
    }

    #[test]
    fn sealed_packed_box_is_scenery() {
        let level = parse_xsb("#######\n#*#@$.#\n#######").unwrap();
        assert_eq!(level.box_count(), 1);
        assert!(level.is_wall(level.square(1, 1)));
        assert!(matches!(
            parse_xsb("#######\n#$#@*.#\n#######"),
            Err(LevelError::CountMismatch { .. }) | Err(LevelError::Unreachable { .. })
        ));
    }
}
