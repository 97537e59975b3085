use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use barycut::bodies::{make_body, BodyKind, BodySpec};
use barycut::recipes::{run, BodySource, Command, PassField, RunConfig};
use barycut::Error;

const EXIT_RECIPE_FAILED: u8 = 2;
const EXIT_INPUT: u8 = 3;

/// Tukey depth, barycentric cuts and critical points of convex polytopes.
#[derive(Parser, Debug)]
#[command(name = "barycut", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Depth of a point (default: the barycenter) and its argmin directions.
    Depth,
    /// Point of maximal depth.
    Median,
    /// Barycentric hyperplanes at the median (or --point), grouped up to sign.
    Cuts,
    /// T x [-1,1]: depth 4/9 with 3 realizing planes, plus a barycentric family.
    PrismCheck,
    /// Regular bipyramid: the four conjectured barycentric planes and a sweep for others.
    BipyramidCheck,
    /// Properties of the synthetic sphere functions.
    SyntheticVerify,
    /// Mountain-pass search between two maxima of a sphere field.
    MountainPass(PassArgs),
    /// Print a catalog body as polytope JSON.
    Body,
}

#[derive(Args, Debug)]
struct PassArgs {
    /// Field to search on.
    #[arg(long, value_enum, default_value_t = FieldArg::Synthetic)]
    field: FieldArg,
    /// Index of the start maximum (maxima are listed by decreasing value).
    #[arg(long, default_value_t = 0)]
    from: usize,
    /// Index of the end maximum.
    #[arg(long, default_value_t = 1)]
    to: usize,
    /// Path nodes; the search is repeated at twice this resolution.
    #[arg(long, default_value_t = 64)]
    nodes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FieldArg {
    Synthetic,
    Depth,
}

#[derive(Args, Debug)]
struct Common {
    /// Catalog body: triangle, prism, bipyramid, cube, simplex, cross-polytope, random.
    #[arg(long, global = true, conflicts_with = "input")]
    body: Option<String>,
    /// Polytope JSON file ({"dim": n, "vertices": [...]}).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Base point as comma-separated coordinates.
    #[arg(long, global = true, allow_hyphen_values = true)]
    point: Option<String>,
    /// Number of sample directions.
    #[arg(long, global = true)]
    seeds: Option<usize>,
    /// Residual tolerance for refined critical directions.
    #[arg(long, global = true)]
    tol_crit: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "BARYCUT_THREADS")]
    threads: Option<usize>,
    /// Directory for the report (and CSV dump).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write the sampled field as CSV (needs --out).
    #[arg(long, global = true, requires = "out")]
    csv: bool,
    /// RNG seed for sampled planes, random bodies and random test directions.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Ambient dimension (synthetic fields and cube/simplex/cross-polytope/random bodies).
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Body size: side length (triangle, prism, bipyramid), half-side (cube), circumradius (others).
    #[arg(long, global = true)]
    size: Option<f64>,
    /// Prism half-height.
    #[arg(long, global = true)]
    half_height: Option<f64>,
    /// Bipyramid apex height (default: all edges equal).
    #[arg(long, global = true)]
    apex_height: Option<f64>,
    /// Number of points for random bodies.
    #[arg(long, global = true)]
    count: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_INPUT),
            };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn execute(cli: Cli) -> barycut::Result<ExitCode> {
    let c = &cli.common;
    if let Some(t) = c.threads {
        if t == 0 {
            return Err(Error::InvalidParams("threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidParams(e.to_string()))?;
    }

    let command = match &cli.command {
        Cmd::Body => return emit_body(c),
        Cmd::Depth => Command::Depth,
        Cmd::Median => Command::Median,
        Cmd::Cuts => Command::Cuts,
        Cmd::PrismCheck => Command::PrismCheck,
        Cmd::BipyramidCheck => Command::BipyramidCheck,
        Cmd::SyntheticVerify => Command::SyntheticVerify,
        Cmd::MountainPass(_) => Command::MountainPass,
    };
    let config = resolve(command, &cli)?;
    let report = run(&config)?;

    let json = report.to_json_string();
    if let Some(dir) = &c.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{}.json", command.name())), &json)?;
        if let Some(csv) = &report.csv {
            std::fs::write(dir.join(format!("{}.csv", command.name())), csv)?;
        }
    }
    print!("{json}");

    let total = report.expectations.len();
    if report.passed() {
        eprintln!("{}: ok ({total}/{total} expectations met)", command.name());
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "{}: recipe failed ({} of {total} expectations not met: {})",
            command.name(),
            report.failures.len(),
            report.failures.join(", ")
        );
        Ok(ExitCode::from(EXIT_RECIPE_FAILED))
    }
}

fn resolve(command: Command, cli: &Cli) -> barycut::Result<RunConfig> {
    let c = &cli.common;
    let mut cfg = RunConfig::new(command);
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(dim) = c.dim {
        cfg.dim = dim;
    }
    let default_body = cfg.body.clone();
    cfg.body = match (&c.input, &c.body) {
        (Some(path), _) => Some(BodySource::File(path.display().to_string())),
        (None, Some(kind)) => Some(BodySource::Catalog(body_spec(kind.parse()?, c)?)),
        (None, None) => match default_body {
            Some(BodySource::Catalog(spec)) => Some(BodySource::Catalog(body_spec(spec.kind, c)?)),
            other => other,
        },
    };
    if let Cmd::MountainPass(p) = &cli.command {
        cfg.field = Some(match p.field {
            FieldArg::Synthetic => PassField::Synthetic,
            FieldArg::Depth => PassField::Depth,
        });
        cfg.from = Some(p.from);
        cfg.to = Some(p.to);
        cfg.nodes = Some(p.nodes);
        if p.field == FieldArg::Depth && cfg.body.is_none() {
            cfg.body = Some(BodySource::Catalog(body_spec(BodyKind::Prism, c)?));
        }
        if p.field == FieldArg::Synthetic {
            cfg.body = None;
        }
    }
    if let Some(p) = &c.point {
        cfg.point = Some(parse_point(p)?);
    }
    cfg.seeds = c.seeds.unwrap_or(cfg.seeds);
    if let Some(t) = c.tol_crit {
        cfg.tol_crit = t;
    }
    cfg.csv = c.csv;
    cfg.out = c.out.as_ref().map(|p| p.display().to_string());
    cfg.threads = c.threads;
    Ok(cfg)
}

fn body_spec(kind: BodyKind, c: &Common) -> barycut::Result<BodySpec> {
    let mut spec = BodySpec::new(kind);
    if let Some(s) = c.size {
        spec.size = s;
    }
    if let Some(h) = c.half_height {
        spec.half_height = h;
    }
    spec.apex_height = c.apex_height;
    if let Some(d) = c.dim {
        spec.dim = d;
    }
    if let Some(n) = c.count {
        spec.count = n;
    }
    if let (BodyKind::Random, Some(seed)) = (kind, c.seed) {
        spec.seed = seed;
    }
    Ok(spec)
}

fn parse_point(s: &str) -> barycut::Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Parse(format!("bad coordinate {t:?} in --point")))
        })
        .collect()
}

fn emit_body(c: &Common) -> barycut::Result<ExitCode> {
    let body = match (&c.input, &c.body) {
        (Some(path), _) => barycut::geometry::Polytope::from_json_str(&std::fs::read_to_string(path)?)?,
        (None, Some(kind)) => make_body(&body_spec(kind.parse()?, c)?)?,
        (None, None) => return Err(Error::InvalidParams("body needs --body or --input".into())),
    };
    let json = body.to_json_string() + "\n";
    if let Some(dir) = &c.out {
        std::fs::create_dir_all(dir)?;
        let name = c.body.as_deref().unwrap_or("body");
        std::fs::write(Path::new(dir).join(format!("{name}.json")), &json)?;
    }
    print!("{json}");
    Ok(ExitCode::SUCCESS)
}
