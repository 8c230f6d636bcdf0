//! The `levelbt` command line.
//!
//! Exit codes: 0 when the root returned SUCCESS (or validation found no
//! errors), 1 when it returned FAILURE or ran out of ticks, 2 for unreadable,
//! malformed or inconsistent input.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bt::{keys, run_generation, Blackboard, RunMode, Status, Trace, TreeSpec, Value};
use crate::dsl::{parse_tree, validate_tree, Diagnostic};
use crate::dungeon::instantiate_layout;
use crate::geom::Openings;
use crate::grid::TileGrid;
use crate::placement::{assemble_level, CompatMode};
use crate::rng::RandomStream;
use crate::segment::SegmentLibrary;
use crate::{standard_registry, Error};

#[derive(Debug, Parser)]
#[command(
    name = "levelbt",
    version,
    about = "Generate levels by ticking behavior trees"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a tree against segment libraries and write the level.
    Generate(GenerateArgs),
    /// Check a tree (and optionally libraries) without running it.
    Validate(ValidateArgs),
    /// List or show segments of a library.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    SingleTick,
    Loop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CompatArg {
    Tag,
    Aligned,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub tree: PathBuf,
    /// Library manifest; repeat to combine games.
    #[arg(long = "lib", required = true)]
    pub libs: Vec<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::SingleTick)]
    pub mode: ModeArg,
    /// Blackboard number checked after each tick in loop mode.
    #[arg(long, required_if_eq("mode", "loop"))]
    pub stop_key: Option<String>,
    /// Loop mode stops once the stop key is at least this value.
    #[arg(long, required_if_eq("mode", "loop"))]
    pub stop_threshold: Option<f64>,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_ticks: u64,
    /// Level output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub format: FormatArg,
    /// Record one JSON line per node execution.
    #[arg(long)]
    pub trace: bool,
    /// Trace output file; stderr when omitted.
    #[arg(long, requires = "trace")]
    pub trace_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = CompatArg::Tag)]
    pub compat_mode: CompatArg,
    /// Game used to render a dungeon layout.
    #[arg(long)]
    pub game: Option<String>,
    /// Initial blackboard entry `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    /// Also write the dungeon layout as JSON.
    #[arg(long)]
    pub layout_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long = "lib")]
    pub libs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long = "lib", required = true)]
    pub libs: Vec<PathBuf>,
    /// Only segments tagged with this pattern.
    #[arg(long)]
    pub pattern: Option<String>,
    /// Only segments open on at least these sides, e.g. `UR`.
    #[arg(long)]
    pub openings: Option<Openings>,
    #[arg(long)]
    pub game: Option<String>,
    /// Print the tiles of one segment.
    #[arg(long, value_name = "ID")]
    pub show: Option<String>,
}

/// Parses arguments and runs the command, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Validate(a) => validate(&a),
        Command::Inspect(a) => inspect(&a),
    }
}

/// Reports a fatal problem and yields exit code 2.
fn fail(message: impl std::fmt::Display) -> i32 {
    eprintln!("error: {message}");
    2
}

fn print_diagnostics(path: &Path, diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{}:{d}", path.display());
    }
}

fn load_tree(path: &Path) -> Result<TreeSpec, i32> {
    let src = fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    parse_tree(&src).map_err(|diags| {
        print_diagnostics(path, &diags);
        2
    })
}

fn load_libs(paths: &[PathBuf]) -> Result<SegmentLibrary, i32> {
    let lib = SegmentLibrary::load_all(paths).map_err(fail)?;
    for w in lib.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(lib)
}

fn parse_set(entry: &str) -> Result<(String, Value), String> {
    let (key, raw) = entry
        .split_once('=')
        .ok_or_else(|| format!("--set {entry:?}: expected KEY=VALUE"))?;
    let value = match raw {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => match (raw.parse::<i64>(), raw.parse::<f64>()) {
            (Ok(i), _) => Value::Int(i),
            (_, Ok(f)) => Value::Float(f),
            _ => Value::Str(raw.to_owned()),
        },
    };
    Ok((key.to_owned(), value))
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, bytes),
        None => io::stdout().lock().write_all(bytes),
    }
}

fn render(
    bb: &Blackboard,
    lib: &SegmentLibrary,
    game: Option<&str>,
    rng: &mut RandomStream,
) -> Result<Option<TileGrid>, Error> {
    if let Some(level) = bb.get_level(keys::LEVEL)?.filter(|l| !l.is_empty()) {
        return assemble_level(level, lib).map(Some);
    }
    let Some(layout) = bb.get_layout(keys::LAYOUT)? else {
        return Ok(None);
    };
    let game = match game {
        Some(g) => g.to_owned(),
        None => {
            let mut games = lib.games();
            match (games.next(), games.next()) {
                (Some(only), None) => only.name.clone(),
                _ => return Err(Error::AmbiguousGame(lib.games().count())),
            }
        }
    };
    instantiate_layout(layout, lib, &game, rng).map(Some)
}

fn generate(args: &GenerateArgs) -> i32 {
    eprintln!("seed: {}", args.seed);
    let tree = match load_tree(&args.tree) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let lib = match load_libs(&args.libs) {
        Ok(l) => Arc::new(l),
        Err(code) => return code,
    };
    let compat = match args.compat_mode {
        CompatArg::Tag => CompatMode::Tag,
        CompatArg::Aligned => CompatMode::Aligned,
    };
    let registry = standard_registry(lib.clone(), compat);
    let diags = validate_tree(&tree, &registry);
    print_diagnostics(&args.tree, &diags);
    if diags.iter().any(Diagnostic::is_error) {
        return 2;
    }

    let mut bb = Blackboard::new();
    for entry in &args.sets {
        match parse_set(entry) {
            Ok((k, v)) => bb.put(k, v),
            Err(e) => return fail(e),
        }
    }
    let mut rng = RandomStream::new(args.seed);
    let mut trace = Trace::new();
    let stop_key = args.stop_key.clone().unwrap_or_default();
    let threshold = args.stop_threshold.unwrap_or(0.0);
    let stop = |bb: &Blackboard| bb.number(&stop_key).is_some_and(|v| v >= threshold);
    let mode = match args.mode {
        ModeArg::SingleTick => RunMode::SingleTick,
        ModeArg::Loop => RunMode::Loop {
            stop: &stop,
            max_ticks: args.max_ticks,
        },
    };
    let outcome = run_generation(
        &tree,
        &mut bb,
        &mut rng,
        &registry,
        mode,
        args.trace.then_some(&mut trace),
    );
    let mut code = match &outcome {
        Ok(report) if report.status == Status::Success => 0,
        Ok(report) => {
            eprintln!(
                "root returned {} after {} tick(s)",
                report.status, report.ticks
            );
            1
        }
        Err(e @ Error::TickBudgetExhausted { .. }) => {
            eprintln!("error: {e}");
            1
        }
        Err(e) => fail(e),
    };

    if args.trace {
        let written = match &args.trace_out {
            Some(p) => fs::File::create(p).and_then(|f| trace.write_jsonl(io::BufWriter::new(f))),
            None => trace.write_jsonl(io::stderr().lock()),
        };
        if let Err(e) = written {
            return fail(format!("writing trace: {e}"));
        }
    }
    if let Some(path) = &args.layout_out {
        match bb.get_layout(keys::LAYOUT) {
            Ok(Some(layout)) => {
                let json = serde_json::to_string(layout).expect("layout serializes");
                if let Err(e) = fs::write(path, json + "\n") {
                    return fail(format!("{}: {e}", path.display()));
                }
            }
            Ok(None) => eprintln!("warning: no dungeon layout to write"),
            Err(e) => return fail(e),
        }
    }
    if code == 2 {
        return code;
    }

    match render(&bb, &lib, args.game.as_deref(), &mut rng) {
        Ok(Some(grid)) => {
            let bytes = match args.format {
                FormatArg::Text => grid.to_text(),
                FormatArg::Json => {
                    serde_json::to_string(&grid.to_json()).expect("grid serializes") + "\n"
                }
            };
            if let Err(e) = write_output(args.out.as_deref(), bytes.as_bytes()) {
                return fail(format!("writing level: {e}"));
            }
        }
        Ok(None) => eprintln!("warning: the run placed nothing to render"),
        Err(e) => code = fail(e),
    }
    code
}

fn validate(args: &ValidateArgs) -> i32 {
    let tree = match load_tree(&args.tree) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let lib = match load_libs(&args.libs) {
        Ok(l) => Arc::new(l),
        Err(code) => return code,
    };
    let diags = validate_tree(&tree, &standard_registry(lib, CompatMode::Tag));
    print_diagnostics(&args.tree, &diags);
    if diags.iter().any(Diagnostic::is_error) {
        2
    } else {
        0
    }
}

fn inspect(args: &InspectArgs) -> i32 {
    let lib = match load_libs(&args.libs) {
        Ok(l) => l,
        Err(code) => return code,
    };
    let mut out = io::stdout().lock();
    if let Some(id) = &args.show {
        return match lib.segment(id) {
            Some(seg) => match out.write_all(seg.grid.to_text().as_bytes()) {
                Ok(()) => 0,
                Err(e) => fail(e),
            },
            None => fail(Error::UnknownSegmentId(id.clone())),
        };
    }
    for seg in lib.segments() {
        if args.game.as_ref().is_some_and(|g| *g != seg.game)
            || args
                .pattern
                .as_ref()
                .is_some_and(|p| !seg.patterns.contains(p))
            || args
                .openings
                .is_some_and(|o| !seg.openings.is_superset_of(o))
        {
            continue;
        }
        let patterns: Vec<&str> = seg.patterns.iter().map(String::as_str).collect();
        let line = format!(
            "{}\t{}\t{}\t{}\n",
            seg.id,
            seg.game,
            if seg.openings.is_empty() {
                "-".to_owned()
            } else {
                seg.openings.to_string()
            },
            patterns.join(",")
        );
        if let Err(e) = out.write_all(line.as_bytes()) {
            return fail(e);
        }
    }
    0
}
