use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use hexmesh_core::cellcx::validate;
use hexmesh_core::forge::{search_filling, CanonicalBoundary, SearchOptions, SearchOutcome, Template, TemplateStore};
use hexmesh_core::gen;
use hexmesh_core::io::{self, FormatError};
use hexmesh_core::pipeline::{hexmesh, MeshOutcome, PipelineError, PipelineOptions};
use hexmesh_core::surface::{self, dual_curves, odd_cover, OddMethod, QuadSurface};

const EXIT_USAGE: u8 = 1;
const EXIT_PRECONDITION: u8 = 2;
const EXIT_NEEDS_TEMPLATE: u8 = 3;
const EXIT_FORMAT: u8 = 4;
const EXIT_VALIDATION: u8 = 5;

/// Store shipped with the source tree, used when `--templates` is absent.
const BUNDLED_TEMPLATES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../templates");

#[derive(Parser)]
#[command(name = "hexmesh", version, about = "Combinatorial hexahedral meshing of quadrilateral spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Matching,
    TreeJoin,
}

impl From<Method> for OddMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Matching => OddMethod::Matching,
            Method::TreeJoin => OddMethod::TreeJoin,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Mesh the ball bounded by a quad surface.
    Generate {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Template store directory; templates found by search are saved here.
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "matching")]
        odd_method: Method,
        #[arg(long, default_value_t = 128)]
        max_hexes: usize,
        #[arg(long, default_value_t = 60)]
        time_budget: u64,
        #[arg(long)]
        stats_json: Option<PathBuf>,
    },
    /// Check a `.hexc` mesh against its listed boundary.
    Validate { file: PathBuf },
    /// Print an edge set giving every face odd incidence.
    Oddcover {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "matching")]
        odd_method: Method,
    },
    /// Print the dual curves of a quad surface.
    Dualcurves { input: PathBuf },
    /// Write a test surface: `cube` or `grid-cube:K`.
    Gen {
        kind: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Search for a filling of a template boundary.
    Forge {
        boundary: PathBuf,
        #[arg(long, default_value_t = 128)]
        max_hexes: usize,
        #[arg(long, default_value_t = 60)]
        time_budget: u64,
        /// Save a found template into this store directory.
        #[arg(long)]
        templates: Option<PathBuf>,
    },
}

/// A failure carrying its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl Failure {
    fn new(code: u8, err: impl Into<anyhow::Error>) -> Self {
        Self { code, err: err.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Self { code: EXIT_USAGE, err }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn format_failure(path: &Path, e: FormatError) -> Failure {
    Failure::new(EXIT_FORMAT, anyhow::Error::new(e).context(path.display().to_string()))
}

fn read_surface(path: &Path) -> Result<QuadSurface, Failure> {
    io::read_quad_off(path).map_err(|e| format_failure(path, e))
}

fn gated_surface(path: &Path) -> Result<QuadSurface, Failure> {
    let s = read_surface(path)?;
    surface::check_preconditions(&s).map_err(|e| Failure::new(EXIT_PRECONDITION, e))?;
    Ok(s)
}

fn load_store(dir: &Path) -> Result<TemplateStore, Failure> {
    if !dir.exists() {
        return Ok(TemplateStore::new());
    }
    TemplateStore::load(dir)
        .with_context(|| format!("loading templates from {}", dir.display()))
        .map_err(|e| Failure::new(EXIT_FORMAT, e))
}

/// A boundary with an empty filling, in template syntax, for `forge`.
fn needs_text(b: &CanonicalBoundary) -> String {
    let mut out = String::from("hexc-template 1\nprovenance authored\n");
    let _ = writeln!(out, "boundary {} {}", b.vertex_count, b.faces.len());
    for f in &b.faces {
        let _ = writeln!(out, "{} {} {} {}", f[0], f[1], f[2], f[3]);
    }
    let _ = writeln!(out, "filling 0 {}", b.vertex_count);
    out
}

fn run(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Generate { input, output, templates, odd_method, max_hexes, time_budget, stats_json } => {
            let s = read_surface(&input)?;
            let store_dir = templates.clone().unwrap_or_else(|| PathBuf::from(BUNDLED_TEMPLATES));
            let mut store = load_store(&store_dir)?;
            let known = store.len();
            let opts = PipelineOptions {
                odd_method: odd_method.into(),
                search_missing: true,
                search: SearchOptions {
                    max_hexes,
                    time_budget: Duration::from_secs(time_budget),
                    ..SearchOptions::default()
                },
            };
            let outcome = hexmesh(&s, &mut store, &opts).map_err(|e| {
                if let PipelineError::Validation(report) = &e {
                    for v in &report.violations {
                        eprintln!("{v}");
                    }
                }
                let code = match e {
                    PipelineError::Precondition(_) | PipelineError::OddCover(_) => EXIT_PRECONDITION,
                    _ => EXIT_VALIDATION,
                };
                Failure::new(code, e)
            })?;
            if let (Some(dir), true) = (&templates, store.len() > known) {
                store.save(dir).with_context(|| format!("saving templates to {}", dir.display()))?;
            }
            match outcome {
                MeshOutcome::Meshed { mesh, stats } => {
                    io::write_hexc(&mesh, &output).map_err(|e| format_failure(&output, e))?;
                    let json = serde_json::to_string_pretty(&stats).context("serializing stats")?;
                    match stats_json {
                        Some(p) => fs::write(&p, json + "\n").with_context(|| format!("writing {}", p.display()))?,
                        None => println!("{json}"),
                    }
                    Ok(0)
                }
                MeshOutcome::NeedsTemplate(missing) => {
                    eprintln!("no filling known for {} cell class(es); boundaries follow on stdout", missing.len());
                    for b in &missing {
                        print!("{}", needs_text(b));
                    }
                    Ok(EXIT_NEEDS_TEMPLATE)
                }
            }
        }
        Command::Validate { file } => {
            let mesh = io::read_hexc(&file).map_err(|e| format_failure(&file, e))?;
            let expect = mesh.boundary_surface().map_err(|e| Failure::new(EXIT_FORMAT, e))?;
            let report = validate(&mesh.complex, Some(&expect));
            if report.ok {
                println!("valid: {} hexes, {} boundary quads", mesh.complex.count(3), mesh.boundary.len());
                Ok(0)
            } else {
                for v in &report.violations {
                    println!("{v}");
                }
                Ok(EXIT_VALIDATION)
            }
        }
        Command::Oddcover { input, odd_method } => {
            let s = gated_surface(&input)?;
            let set = odd_cover(&s, odd_method.into()).map_err(|e| Failure::new(EXIT_PRECONDITION, e))?;
            println!("{} edges ({})", set.len(), set.method);
            for &e in &set.edges {
                let [a, b] = s.edge(e).map_err(|e| Failure::new(EXIT_VALIDATION, e))?;
                println!("{a} {b}");
            }
            Ok(0)
        }
        Command::Dualcurves { input } => {
            let s = read_surface(&input)?;
            let set = dual_curves(&s);
            println!("{} curves, total length {}, {} crossings", set.curves.len(), set.total_length(), set.crossings);
            for (c, si) in set.curves.iter().zip(&set.self_intersections) {
                let faces: Vec<String> = c.steps.iter().map(|st| st.face.to_string()).collect();
                println!("length {} self {}: {}", c.len(), si, faces.join(" "));
            }
            Ok(0)
        }
        Command::Gen { kind, output } => {
            let s = match kind.as_str() {
                "cube" => gen::cube(),
                k => match k.strip_prefix("grid-cube:").and_then(|n| n.parse::<u32>().ok()) {
                    Some(n) if n >= 1 => gen::grid_cube(n),
                    _ => return Err(Failure::new(EXIT_USAGE, anyhow::anyhow!("unknown kind `{kind}`; expected cube or grid-cube:K"))),
                },
            };
            io::write_quad_off(&s, &output).map_err(|e| format_failure(&output, e))?;
            Ok(0)
        }
        Command::Forge { boundary, max_hexes, time_budget, templates } => {
            let text = fs::read_to_string(&boundary).map_err(|e| Failure::new(EXIT_FORMAT, e))?;
            let t = Template::parse(&text, &boundary.display().to_string()).map_err(|e| Failure::new(EXIT_FORMAT, e))?;
            let opts = SearchOptions { max_hexes, time_budget: Duration::from_secs(time_budget), ..SearchOptions::default() };
            let outcome = search_filling(&t.boundary, &opts).map_err(|e| Failure::new(EXIT_PRECONDITION, e))?;
            match outcome {
                SearchOutcome::Found(found, stats) => {
                    eprintln!("found {} hexes after {} nodes", found.hex_count(), stats.nodes);
                    print!("{}", found.to_text());
                    if let Some(dir) = templates {
                        let mut store = load_store(&dir)?;
                        store.insert(found).map_err(|e| Failure::new(EXIT_VALIDATION, e))?;
                        store.save(&dir).with_context(|| format!("saving templates to {}", dir.display()))?;
                    }
                    Ok(0)
                }
                SearchOutcome::Exhausted(stats) => {
                    eprintln!("no filling with at most {max_hexes} hexes ({} nodes)", stats.nodes);
                    Ok(EXIT_NEEDS_TEMPLATE)
                }
                SearchOutcome::BudgetExceeded(stats) => {
                    eprintln!("time budget exceeded after {} nodes", stats.nodes);
                    Ok(EXIT_NEEDS_TEMPLATE)
                }
            }
        }
    }
}
