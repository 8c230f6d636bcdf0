//! Behavior trees whose leaves design levels.
//!
//! Trees are written in a small s-expression language ([`dsl`]), ticked by
//! the engine in [`bt`], and their action leaves place segments from a
//! [`segment::SegmentLibrary`] onto a level map ([`placement`]) or grow
//! dungeon layouts ([`dungeon`]). Every random choice comes from one seeded
//! [`rng::RandomStream`], so a tree, library and seed fix the output.

pub mod bt;
pub mod cli;
pub mod dsl;
pub mod dungeon;
mod error;
pub mod geom;
pub mod grid;
pub mod placement;
pub mod rng;
pub mod segment;

use std::sync::Arc;

pub use error::{Error, LoadError};

use bt::Registry;
use placement::CompatMode;
use segment::SegmentLibrary;

/// Core leaves plus every level-design action:
/// `place-pattern`, `place-directional`, `place-verbatim`, `start-room` and
/// `grow-step`. `compat` is the edge check used by `place-directional` nodes
/// without a `:mode`.
pub fn standard_registry(lib: Arc<SegmentLibrary>, compat: CompatMode) -> Registry {
    let mut r = dungeon::dungeon_registry();
    r.register_action(
        "place-pattern",
        placement::PlacePattern { lib: lib.clone() },
    );
    r.register_action(
        "place-directional",
        placement::PlaceDirectional {
            lib: lib.clone(),
            default_mode: compat,
        },
    );
    r.register_action("place-verbatim", placement::PlaceVerbatim { lib });
    r
}
