//! Segment placement actions and level assembly.
//!
//! Placement executors keep three blackboard entries: the [`LevelMap`] under
//! `level`, the cursor under `cursor` (the next cell to fill, `(0, 0)` when
//! absent) and a [`PrevRef`] under `prev`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::bt::{keys, Executor, NodeSpec, Param, ParamType, Status, TickContext, Value};
use crate::geom::{Coord, Direction, Openings};
use crate::grid::TileGrid;
use crate::segment::{MatchMode, Segment, SegmentLibrary};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placed {
    pub segment: String,
    pub game: String,
}

/// Cells of the level plane mapped to the segments placed there.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LevelMap {
    cells: BTreeMap<Coord, Placed>,
    order: Vec<Coord>,
}

impl LevelMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(&mut self, at: Coord, segment: &Segment) -> Result<(), Error> {
        if self.cells.contains_key(&at) {
            return Err(Error::CellOccupied(at));
        }
        self.cells.insert(
            at,
            Placed {
                segment: segment.id.clone(),
                game: segment.game.clone(),
            },
        );
        self.order.push(at);
        Ok(())
    }

    pub fn get(&self, at: Coord) -> Option<&Placed> {
        self.cells.get(&at)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Occupied cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (Coord, &Placed)> {
        self.cells.iter().map(|(c, p)| (*c, p))
    }

    /// Occupied cells in placement order.
    pub fn placements(&self) -> impl Iterator<Item = (Coord, &Placed)> {
        self.order.iter().map(|c| (*c, &self.cells[c]))
    }

    /// `(min, max)` corners of the occupied bounding box.
    pub fn bounds(&self) -> Option<(Coord, Coord)> {
        let mut cells = self.cells.keys();
        let first = *cells.next()?;
        Some(cells.fold((first, first), |(lo, hi), c| {
            (
                Coord::new(lo.x.min(c.x), lo.y.min(c.y)),
                Coord::new(hi.x.max(c.x), hi.y.max(c.y)),
            )
        }))
    }
}

/// The most recently placed segment and the direction the cursor moved away
/// from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrevRef {
    pub segment: String,
    pub dir: Direction,
}

/// How strictly two neighbouring segments must line up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CompatMode {
    /// Both sides carry the opening tag.
    #[default]
    Tag,
    /// Some boundary index is passable on both sides.
    Aligned,
}

impl CompatMode {
    pub const NAMES: &'static [&'static str] = &["tag", "aligned"];

    pub fn from_name(s: &str) -> Option<CompatMode> {
        match s {
            "tag" => Some(CompatMode::Tag),
            "aligned" => Some(CompatMode::Aligned),
            _ => None,
        }
    }
}

/// Whether `b`, placed next to `a` in direction `dir`, connects to it.
pub fn edge_compatible(a: &Segment, dir: Direction, b: &Segment, mode: CompatMode) -> bool {
    let back = dir.opposite();
    match mode {
        CompatMode::Tag => a.openings.contains(dir) && b.openings.contains(back),
        CompatMode::Aligned => !a.open_cells.side(dir).is_disjoint(b.open_cells.side(back)),
    }
}

/// Copies each placed segment into its block of the bounding box; empty
/// cells get the fill tile of the first placement's game.
pub fn assemble_level(level: &LevelMap, lib: &SegmentLibrary) -> Result<TileGrid, Error> {
    let (lo, hi) = level.bounds().ok_or(Error::EmptyLevel)?;
    let resolve = |id: &str| {
        lib.segment(id)
            .ok_or_else(|| Error::UnknownSegmentId(id.to_owned()))
    };
    let mut placements = level.placements();
    let (_, first) = placements.next().ok_or(Error::EmptyLevel)?;
    let first = resolve(&first.segment)?;
    let dims = first.grid.dims();
    let fill = lib.game(&first.game).map_or('-', |g| g.fill);
    for (_, p) in placements {
        let other = resolve(&p.segment)?.grid.dims();
        if other != dims {
            return Err(Error::MixedDimensions { first: dims, other });
        }
    }
    let (rows, cols) = dims;
    let width = (hi.x - lo.x + 1) as usize;
    let height = (hi.y - lo.y + 1) as usize;
    let mut out = TileGrid::filled(height * rows, width * cols, fill);
    for (at, p) in level.cells() {
        let seg = resolve(&p.segment)?;
        let r = (at.y - lo.y) as usize * rows;
        let c = (at.x - lo.x) as usize * cols;
        out.blit(&seg.grid, r, c);
    }
    Ok(out)
}

/// Placement state read from and written back to the blackboard.
struct Cursor {
    level: LevelMap,
    at: Coord,
    prev: Option<PrevRef>,
}

impl Cursor {
    fn load(ctx: &TickContext<'_>) -> Result<Self, Error> {
        Ok(Cursor {
            level: ctx.bb.get_level(keys::LEVEL)?.cloned().unwrap_or_default(),
            at: ctx
                .bb
                .get_coord(keys::CURSOR)?
                .copied()
                .unwrap_or(Coord::ORIGIN),
            prev: ctx.bb.get_prev(keys::PREV)?.cloned(),
        })
    }

    fn place(&mut self, seg: &Segment, advance: Direction) -> Result<(), Error> {
        self.level.place(self.at, seg)?;
        self.at = self.at.step(advance);
        self.prev = Some(PrevRef {
            segment: seg.id.clone(),
            dir: advance,
        });
        Ok(())
    }

    fn store(self, ctx: &mut TickContext<'_>) {
        ctx.bb.put(keys::LEVEL, Value::Level(self.level));
        ctx.bb.put(keys::CURSOR, Value::Coord(self.at));
        if let Some(prev) = self.prev {
            ctx.bb.put(keys::PREV, Value::Prev(prev));
        }
    }
}

/// The `:game` attribute, or the library's only game when omitted.
fn resolve_game<'a>(node: &'a NodeSpec, lib: &'a SegmentLibrary) -> Result<&'a str, Error> {
    match node.str_attr("game")? {
        Some(name) => lib
            .game(name)
            .map(|g| g.name.as_str())
            .ok_or_else(|| Error::UnknownGame(name.to_owned())),
        None => {
            let mut games = lib.games();
            match (games.next(), games.next()) {
                (Some(only), None) => Ok(&only.name),
                _ => Err(Error::AmbiguousGame(lib.games().count())),
            }
        }
    }
}

/// Samples `count` segments tagged with any of `patterns`, placing each at
/// the cursor and moving right.
pub fn exec_place_pattern(
    ctx: &mut TickContext<'_>,
    lib: &SegmentLibrary,
    game: &str,
    patterns: &[&str],
    count: usize,
) -> Result<Status, Error> {
    let mut cur = Cursor::load(ctx)?;
    for _ in 0..count {
        let Some(seg) = lib.query_by_pattern(game, patterns, ctx.rng) else {
            return Ok(Status::Failure);
        };
        cur.place(seg, Direction::Right)?;
    }
    cur.store(ctx);
    Ok(Status::Success)
}

/// Samples a segment with openings `open` that connects back to the previous
/// segment, places it at the cursor and moves the cursor by `advance`.
#[allow(clippy::too_many_arguments)]
pub fn exec_place_directional(
    ctx: &mut TickContext<'_>,
    lib: &SegmentLibrary,
    game: &str,
    open: Openings,
    advance: Direction,
    matching: MatchMode,
    mode: CompatMode,
) -> Result<Status, Error> {
    let mut cur = Cursor::load(ctx)?;
    let prev = match &cur.prev {
        Some(p) => Some((
            lib.segment(&p.segment)
                .ok_or_else(|| Error::UnknownSegmentId(p.segment.clone()))?,
            p.dir,
        )),
        None => None,
    };
    let candidates: Vec<&Segment> = lib
        .openings_candidates(game, open, matching)
        .into_iter()
        .filter(|seg| prev.is_none_or(|(a, dir)| edge_compatible(a, dir, seg, mode)))
        .collect();
    let Some(seg) = ctx.rng.choose(&candidates) else {
        return Ok(Status::Failure);
    };
    cur.place(seg, advance)?;
    cur.store(ctx);
    Ok(Status::Success)
}

/// Places the named segments left to right from the cursor. Takes no draws.
pub fn exec_place_verbatim(
    ctx: &mut TickContext<'_>,
    lib: &SegmentLibrary,
    ids: &[&str],
) -> Result<Status, Error> {
    let segments = ids
        .iter()
        .map(|id| {
            lib.segment(id)
                .ok_or_else(|| Error::UnknownSegmentId((*id).to_owned()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut cur = Cursor::load(ctx)?;
    for seg in segments {
        cur.place(seg, Direction::Right)?;
    }
    cur.store(ctx);
    Ok(Status::Success)
}

/// `(action :do "place-pattern" :patterns ("gap") :game "smb" :count 1)`
pub struct PlacePattern {
    pub lib: Arc<SegmentLibrary>,
}

impl Executor for PlacePattern {
    fn params(&self) -> &[Param] {
        const P: [Param; 3] = [
            Param::required("patterns", ParamType::StrList),
            Param::optional("game", ParamType::Str),
            Param::optional("count", ParamType::Int { min: 1 }),
        ];
        &P
    }

    fn execute(&self, node: &NodeSpec, ctx: &mut TickContext<'_>) -> Result<Status, Error> {
        let patterns = node.required("patterns", NodeSpec::str_list_attr)?;
        let count = node.int_attr("count")?.unwrap_or(1).max(1) as usize;
        let game = resolve_game(node, &self.lib)?;
        exec_place_pattern(ctx, &self.lib, game, &patterns, count)
    }
}

/// `(action :do "place-directional" :open "LR" :advance "R")`, with optional
/// `:game`, `:match` (`exact` | `superset`) and `:mode` (`tag` | `aligned`).
pub struct PlaceDirectional {
    pub lib: Arc<SegmentLibrary>,
    /// Used when a node has no `:mode`.
    pub default_mode: CompatMode,
}

impl Executor for PlaceDirectional {
    fn params(&self) -> &[Param] {
        const P: [Param; 5] = [
            Param::required("open", ParamType::Openings),
            Param::required("advance", ParamType::Direction),
            Param::optional("game", ParamType::Str),
            Param::optional("match", ParamType::Choice(&["exact", "superset"])),
            Param::optional("mode", ParamType::Choice(CompatMode::NAMES)),
        ];
        &P
    }

    fn execute(&self, node: &NodeSpec, ctx: &mut TickContext<'_>) -> Result<Status, Error> {
        let open = node.required("open", NodeSpec::openings_attr)?;
        let advance = node.required("advance", NodeSpec::direction_attr)?;
        let matching = match node.str_attr("match")? {
            None | Some("exact") => MatchMode::Exact,
            Some("superset") => MatchMode::Superset,
            Some(other) => {
                return Err(Error::Attribute {
                    key: "match".into(),
                    message: format!("unknown match mode {other:?}"),
                })
            }
        };
        let mode = match node.str_attr("mode")? {
            None => self.default_mode,
            Some(s) => CompatMode::from_name(s).ok_or_else(|| Error::Attribute {
                key: "mode".into(),
                message: format!("unknown compatibility mode {s:?}"),
            })?,
        };
        let game = resolve_game(node, &self.lib)?;
        exec_place_directional(ctx, &self.lib, game, open, advance, matching, mode)
    }
}

/// `(action :do "place-verbatim" :sequence ("seg_00" "seg_01"))`
pub struct PlaceVerbatim {
    pub lib: Arc<SegmentLibrary>,
}

impl Executor for PlaceVerbatim {
    fn params(&self) -> &[Param] {
        const P: [Param; 1] = [Param::required("sequence", ParamType::StrList)];
        &P
    }

    fn execute(&self, node: &NodeSpec, ctx: &mut TickContext<'_>) -> Result<Status, Error> {
        let ids = node.required("sequence", NodeSpec::str_list_attr)?;
        exec_place_verbatim(ctx, &self.lib, &ids)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::bt::Blackboard;
    use crate::rng::RandomStream;
    use crate::segment::GameInfo;

    fn game(name: &str, rows: usize, cols: usize) -> GameInfo {
        GameInfo {
            name: name.into(),
            rows,
            cols,
            passable: ['-'].into_iter().collect(),
            fill: '.',
            pad_top: 0,
            remap: Vec::new(),
        }
    }

    fn small_lib() -> SegmentLibrary {
        let mut b = SegmentLibrary::builder();
        b.add_game(game("g", 2, 2)).unwrap();
        b.add_segment("a", "g", &["#-", "##"], &["stair-up"], None)
            .unwrap();
        b.add_segment("b", "g", &["-#", "##"], &["pipe-valley"], None)
            .unwrap();
        b.add_segment("c", "g", &["ab", "cd"], &["pipe-valley"], None)
            .unwrap();
        b.build()
    }

    fn run<T>(f: impl FnOnce(&mut TickContext<'_>) -> T) -> (T, Blackboard) {
        let mut bb = Blackboard::new();
        let mut rng = RandomStream::new(5);
        let out = f(&mut TickContext {
            bb: &mut bb,
            rng: &mut rng,
        });
        (out, bb)
    }

    #[test]
    fn pattern_places_and_advances() {
        let lib = small_lib();
        let (status, bb) = run(|ctx| exec_place_pattern(ctx, &lib, "g", &["pipe-valley"], 3));
        assert_eq!(status, Ok(Status::Success));
        let level = bb.get_level(keys::LEVEL).unwrap().unwrap();
        assert_eq!(level.len(), 3);
        for x in 0..3 {
            let seg = lib
                .segment(&level.get(Coord::new(x, 0)).unwrap().segment)
                .unwrap();
            assert!(seg.patterns.contains("pipe-valley"));
        }
        assert_eq!(bb.get_coord(keys::CURSOR), Ok(Some(&Coord::new(3, 0))));
    }

    #[test]
    fn pattern_miss_leaves_blackboard_alone() {
        let lib = small_lib();
        let (status, bb) = run(|ctx| exec_place_pattern(ctx, &lib, "g", &["absent"], 1));
        assert_eq!(status, Ok(Status::Failure));
        assert_eq!(bb, Blackboard::new());
    }

    #[test]
    fn verbatim_unknown_id() {
        let lib = small_lib();
        let (status, bb) = run(|ctx| exec_place_verbatim(ctx, &lib, &["a", "ghost"]));
        assert_eq!(status, Err(Error::UnknownSegmentId("ghost".into())));
        assert_eq!(bb, Blackboard::new());
    }

    #[test]
    fn occupied_cell_is_error() {
        let lib = small_lib();
        let (status, _) = run(|ctx| {
            ctx.bb.put(keys::CURSOR, Value::Coord(Coord::new(1, 0)));
            exec_place_verbatim(ctx, &lib, &["a"])?;
            ctx.bb.put(keys::CURSOR, Value::Coord(Coord::new(1, 0)));
            exec_place_verbatim(ctx, &lib, &["b"])
        });
        assert_eq!(status, Err(Error::CellOccupied(Coord::new(1, 0))));
    }

    fn seg_with(open: &str, cells: &[(Direction, &[usize])]) -> Segment {
        let mut map: [BTreeSet<usize>; 4] = Default::default();
        for (d, idx) in cells {
            map[*d as usize] = idx.iter().copied().collect();
        }
        let mut seg = Segment {
            id: "x".into(),
            game: "g".into(),
            grid: TileGrid::filled(1, 1, '#'),
            patterns: BTreeSet::new(),
            openings: open.parse().unwrap(),
            open_cells: Default::default(),
        };
        seg.open_cells = crate::segment::OpenCells::from_sides(map);
        seg
    }

    #[test]
    fn tag_compatibility() {
        let a = seg_with("R", &[]);
        assert!(edge_compatible(
            &a,
            Direction::Right,
            &seg_with("L", &[]),
            CompatMode::Tag
        ));
        assert!(!edge_compatible(
            &a,
            Direction::Right,
            &seg_with("U", &[]),
            CompatMode::Tag
        ));
    }

    #[test]
    fn aligned_compatibility_matches_set_intersection() {
        let a = seg_with("R", &[(Direction::Right, &[3, 4])]);
        let near = seg_with("L", &[(Direction::Left, &[4, 5])]);
        let far = seg_with("L", &[(Direction::Left, &[6, 7])]);
        let oracle = |x: &[usize], y: &[usize]| x.iter().any(|i| y.contains(i));
        assert_eq!(
            edge_compatible(&a, Direction::Right, &near, CompatMode::Aligned),
            oracle(&[3, 4], &[4, 5])
        );
        assert_eq!(
            edge_compatible(&a, Direction::Right, &far, CompatMode::Aligned),
            oracle(&[3, 4], &[6, 7])
        );
    }

    #[test]
    fn assembly_matches_block_copy() {
        let lib = small_lib();
        let mut level = LevelMap::new();
        // L-shape: (0,0), (0,1), (1,1); (1,0) stays empty
        level
            .place(Coord::new(0, 0), lib.segment("a").unwrap())
            .unwrap();
        level
            .place(Coord::new(0, 1), lib.segment("b").unwrap())
            .unwrap();
        level
            .place(Coord::new(1, 1), lib.segment("c").unwrap())
            .unwrap();
        let grid = assemble_level(&level, &lib).unwrap();
        assert_eq!(grid.dims(), (4, 4));
        for r in 0..4 {
            for c in 0..4 {
                let cell = Coord::new((c / 2) as i64, (r / 2) as i64);
                let want = match level.get(cell) {
                    Some(p) => lib.segment(&p.segment).unwrap().grid.get(r % 2, c % 2),
                    None => '.',
                };
                assert_eq!(grid.get(r, c), want, "tile ({r}, {c})");
            }
        }
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let mut b = SegmentLibrary::builder();
        b.add_game(game("g", 2, 2)).unwrap();
        b.add_game(game("h", 3, 2)).unwrap();
        b.add_segment("a", "g", &["##", "##"], &[], None).unwrap();
        b.add_segment("z", "h", &["##", "##", "##"], &[], None)
            .unwrap();
        let lib = b.build();
        let mut level = LevelMap::new();
        level
            .place(Coord::new(0, 0), lib.segment("a").unwrap())
            .unwrap();
        level
            .place(Coord::new(1, 0), lib.segment("z").unwrap())
            .unwrap();
        assert!(matches!(
            assemble_level(&level, &lib),
            Err(Error::MixedDimensions { .. })
        ));
        assert_eq!(
            assemble_level(&LevelMap::new(), &lib),
            Err(Error::EmptyLevel)
        );
    }
}
