//! Segment libraries.
//!
//! A library is loaded from one JSON manifest per game. Each manifest names
//! the game's segment size, which tiles are passable, the fill tile used for
//! padding and empty space, an optional remap table for direction sets the
//! game has no segment for, and the list of segment files with their design
//! pattern tags:
//!
//! ```json
//! {
//!   "game": "smb", "rows": 14, "cols": 16,
//!   "passable": ["-", "o", "E"], "fill": "-", "pad_top": 1,
//!   "remap": [{"from": "DR", "to": "UDR"}],
//!   "segments": [{"id": "seg_00", "file": "seg_00.txt", "patterns": ["flat"]}]
//! }
//! ```
//!
//! Segment files are plain text, one row per line, top row first. Openings
//! are detected from the passable tiles on each boundary unless the manifest
//! gives `openings_override`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::LoadError;
use crate::geom::{Direction, Openings};
use crate::grid::TileGrid;
use crate::rng::RandomStream;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub game: String,
    pub rows: usize,
    pub cols: usize,
    pub passable: Vec<char>,
    pub fill: char,
    #[serde(default)]
    pub pad_top: usize,
    #[serde(default)]
    pub remap: Vec<RemapEntry>,
    pub segments: Vec<ManifestSegment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemapEntry {
    pub from: Openings,
    pub to: Openings,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestSegment {
    pub id: String,
    pub file: PathBuf,
    #[serde(default)]
    pub patterns: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub openings_override: Option<Openings>,
}

/// Passable boundary indices on each side of a segment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpenCells([BTreeSet<usize>; 4]);

impl OpenCells {
    /// Builds from per-side sets indexed in U, D, L, R order.
    pub fn from_sides(sides: [BTreeSet<usize>; 4]) -> Self {
        OpenCells(sides)
    }

    pub fn side(&self, dir: Direction) -> &BTreeSet<usize> {
        &self.0[dir as usize]
    }
}

/// Scans the four boundaries of `grid` for passable tiles.
///
/// U and D report column indices of the first and last rows; L and R report
/// row indices of the first and last columns.
pub fn detect_openings(grid: &TileGrid, passable: &BTreeSet<char>) -> (Openings, OpenCells) {
    let (rows, cols) = grid.dims();
    let mut cells = OpenCells::default();
    if rows == 0 || cols == 0 {
        return (Openings::NONE, cells);
    }
    let open = |r: usize, c: usize| passable.contains(&grid.get(r, c));
    for dir in Direction::ALL {
        let set = &mut cells.0[dir as usize];
        match dir {
            Direction::Up => set.extend((0..cols).filter(|&c| open(0, c))),
            Direction::Down => set.extend((0..cols).filter(|&c| open(rows - 1, c))),
            Direction::Left => set.extend((0..rows).filter(|&r| open(r, 0))),
            Direction::Right => set.extend((0..rows).filter(|&r| open(r, cols - 1))),
        }
    }
    let openings = Direction::ALL
        .into_iter()
        .filter(|d| !cells.side(*d).is_empty())
        .collect();
    (openings, cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: String,
    pub game: String,
    /// Tiles after top padding.
    pub grid: TileGrid,
    pub patterns: BTreeSet<String>,
    pub openings: Openings,
    pub open_cells: OpenCells,
}

/// Per-game metadata from a manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct GameInfo {
    pub name: String,
    /// Segment rows as stored, i.e. including `pad_top`.
    pub rows: usize,
    pub cols: usize,
    pub passable: BTreeSet<char>,
    pub fill: char,
    pub pad_top: usize,
    pub remap: Vec<RemapEntry>,
}

impl GameInfo {
    /// Applies the remap table to a wanted direction set.
    pub fn remap(&self, want: Openings) -> Openings {
        self.remap
            .iter()
            .find(|e| e.from == want)
            .map_or(want, |e| e.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    Exact,
    Superset,
}

/// Immutable, indexed collection of segments across one or more games.
#[derive(Debug, Clone, Default)]
pub struct SegmentLibrary {
    games: BTreeMap<String, GameInfo>,
    segments: BTreeMap<String, Segment>,
    by_pattern: BTreeMap<(String, String), Vec<String>>,
    by_openings: BTreeMap<(String, Openings), Vec<String>>,
    warnings: Vec<String>,
}

impl SegmentLibrary {
    pub fn load(manifest: impl AsRef<Path>) -> Result<Self, LoadError> {
        Self::load_all(&[manifest])
    }

    /// Loads and merges several manifests. Segment ids must be unique across
    /// all of them, and each game may be declared once.
    pub fn load_all<P: AsRef<Path>>(manifests: &[P]) -> Result<Self, LoadError> {
        let mut builder = LibraryBuilder::default();
        for path in manifests {
            let path = path.as_ref();
            let text = read_file(path)?;
            let manifest: Manifest =
                serde_json::from_str(&text).map_err(|e| LoadError::ManifestParse {
                    path: path.to_owned(),
                    message: e.to_string(),
                })?;
            let base = path.parent().unwrap_or(Path::new("."));
            builder.add_manifest(&manifest, base)?;
        }
        Ok(builder.build())
    }

    pub fn builder() -> LibraryBuilder {
        LibraryBuilder::default()
    }

    pub fn game(&self, name: &str) -> Option<&GameInfo> {
        self.games.get(name)
    }

    pub fn games(&self) -> impl Iterator<Item = &GameInfo> {
        self.games.values()
    }

    pub fn segment(&self, id: &str) -> Option<&Segment> {
        self.segments.get(id)
    }

    /// All segments ordered by id.
    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.segments.values()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Load-time notes, e.g. an openings override disagreeing with the tiles.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Segments of `game` tagged with at least one of `patterns`, ordered by id.
    pub fn pattern_candidates(&self, game: &str, patterns: &[&str]) -> Vec<&Segment> {
        let ids: BTreeSet<&String> = patterns
            .iter()
            .filter_map(|p| self.by_pattern.get(&(game.to_owned(), (*p).to_owned())))
            .flatten()
            .collect();
        ids.into_iter().map(|id| &self.segments[id]).collect()
    }

    /// Uniform draw over [`pattern_candidates`](Self::pattern_candidates).
    /// No draw is taken when the candidate set is empty.
    pub fn query_by_pattern(
        &self,
        game: &str,
        patterns: &[&str],
        rng: &mut RandomStream,
    ) -> Option<&Segment> {
        rng.choose(&self.pattern_candidates(game, patterns))
            .copied()
    }

    /// Segments of `game` matching `want` after the game's remap, ordered by id.
    pub fn openings_candidates(
        &self,
        game: &str,
        want: Openings,
        mode: MatchMode,
    ) -> Vec<&Segment> {
        match self.games.get(game) {
            Some(info) => self.openings_candidates_raw(game, info.remap(want), mode),
            None => Vec::new(),
        }
    }

    /// Like [`openings_candidates`](Self::openings_candidates) without the remap.
    pub fn openings_candidates_raw(
        &self,
        game: &str,
        want: Openings,
        mode: MatchMode,
    ) -> Vec<&Segment> {
        let mut found: Vec<&Segment> = self
            .by_openings
            .iter()
            .filter(|((g, set), _)| {
                g == game
                    && match mode {
                        MatchMode::Exact => *set == want,
                        MatchMode::Superset => set.is_superset_of(want),
                    }
            })
            .flat_map(|(_, ids)| ids.iter().map(|id| &self.segments[id]))
            .collect();
        found.sort_by(|a, b| a.id.cmp(&b.id));
        found
    }

    pub fn query_by_openings(
        &self,
        game: &str,
        want: Openings,
        mode: MatchMode,
        rng: &mut RandomStream,
    ) -> Option<&Segment> {
        rng.choose(&self.openings_candidates(game, want, mode))
            .copied()
    }
}

fn read_file(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => LoadError::MissingFile(path.to_owned()),
        _ => LoadError::Io {
            path: path.to_owned(),
            source: e,
        },
    })
}

/// Assembles a [`SegmentLibrary`] from manifests or in-memory grids.
#[derive(Debug, Default)]
pub struct LibraryBuilder {
    games: BTreeMap<String, GameInfo>,
    segments: BTreeMap<String, Segment>,
    warnings: Vec<String>,
}

impl LibraryBuilder {
    pub fn add_manifest(
        &mut self,
        manifest: &Manifest,
        base_dir: &Path,
    ) -> Result<&mut Self, LoadError> {
        let invalid = |msg: String| LoadError::InvalidManifest(manifest.game.clone(), msg);
        if manifest.rows == 0 || manifest.cols == 0 {
            return Err(invalid("rows and cols must be positive".into()));
        }
        if let Some(e) = manifest.remap.iter().find(|e| e.from == e.to) {
            return Err(invalid(format!(
                "remap entry maps {{{}}} onto itself",
                e.from
            )));
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = manifest.segments.iter().find(|s| !seen.insert(&s.id)) {
            return Err(LoadError::DuplicateId(dup.id.clone()));
        }
        self.add_game(GameInfo {
            name: manifest.game.clone(),
            rows: manifest.rows + manifest.pad_top,
            cols: manifest.cols,
            passable: manifest.passable.iter().copied().collect(),
            fill: manifest.fill,
            pad_top: manifest.pad_top,
            remap: manifest.remap.clone(),
        })?;
        for entry in &manifest.segments {
            let text = read_file(&base_dir.join(&entry.file))?;
            let rows: Vec<&str> = text.lines().collect();
            let patterns: Vec<&str> = entry.patterns.iter().map(String::as_str).collect();
            self.add_segment(
                &entry.id,
                &manifest.game,
                &rows,
                &patterns,
                entry.openings_override,
            )?;
        }
        Ok(self)
    }

    pub fn add_game(&mut self, info: GameInfo) -> Result<&mut Self, LoadError> {
        if self.games.contains_key(&info.name) {
            return Err(LoadError::DuplicateGame(info.name));
        }
        self.games.insert(info.name.clone(), info);
        Ok(self)
    }

    /// Adds one segment from its unpadded rows. The game must already be added.
    pub fn add_segment(
        &mut self,
        id: &str,
        game: &str,
        rows: &[&str],
        patterns: &[&str],
        openings_override: Option<Openings>,
    ) -> Result<&mut Self, LoadError> {
        let info = self.games.get(game).ok_or_else(|| {
            LoadError::InvalidManifest(game.to_owned(), "game not declared".into())
        })?;
        if self.segments.contains_key(id) {
            return Err(LoadError::DuplicateId(id.to_owned()));
        }
        let expected = (info.rows - info.pad_top, info.cols);
        let mismatch = |found| LoadError::DimensionMismatch {
            id: id.to_owned(),
            expected,
            found,
        };
        let raw = TileGrid::from_rows(rows)
            .map_err(|bad| mismatch((rows.len(), rows[bad].chars().count())))?;
        if raw.dims() != expected {
            let found = if raw.rows() == expected.0 || raw.rows() == 0 {
                raw.dims()
            } else {
                (raw.rows(), raw.cols())
            };
            return Err(mismatch(found));
        }
        let grid = raw.padded_top(info.pad_top, info.fill);
        let (detected, open_cells) = detect_openings(&grid, &info.passable);
        let openings = match openings_override {
            Some(manual) => {
                if manual != detected {
                    self.warnings.push(format!(
                        "segment {id}: openings override {{{manual}}} differs from detected {{{detected}}}"
                    ));
                }
                manual
            }
            None => detected,
        };
        self.segments.insert(
            id.to_owned(),
            Segment {
                id: id.to_owned(),
                game: game.to_owned(),
                grid,
                patterns: patterns.iter().map(|p| (*p).to_owned()).collect(),
                openings,
                open_cells,
            },
        );
        Ok(self)
    }

    pub fn build(self) -> SegmentLibrary {
        let mut by_pattern: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
        let mut by_openings: BTreeMap<(String, Openings), Vec<String>> = BTreeMap::new();
        // segments iterate in id order, so every index list is id-sorted
        for seg in self.segments.values() {
            for p in &seg.patterns {
                by_pattern
                    .entry((seg.game.clone(), p.clone()))
                    .or_default()
                    .push(seg.id.clone());
            }
            by_openings
                .entry((seg.game.clone(), seg.openings))
                .or_default()
                .push(seg.id.clone());
        }
        SegmentLibrary {
            games: self.games,
            segments: self.segments,
            by_pattern,
            by_openings,
            warnings: self.warnings,
        }
    }
}
