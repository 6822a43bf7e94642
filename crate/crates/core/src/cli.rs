//! Command-line front end. Exit codes: 0 success, 1 validation error, 2 runtime error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::agora::{AgoraConfig, AgoraModel, DEFAULT_MAX_REJECTIONS};
use crate::diagnostics::{self, DiagnosticReport, RunSettings, REPORT_FORMAT_VERSION};
use crate::dimension::{estimate_dimension, DimMethod, Points, Sweep};
use crate::error::{Error, Result};
use crate::io::{self, Generated, GenerationSpec, OutputDigest, PointRecords, RunManifest};
use crate::profiles::{compute_cd, ProcessParams, SpatialProfile};
use crate::svg::{self, ScatterOptions};

#[derive(Debug, Parser)]
#[command(
    name = "fractree",
    version,
    about = "Random fractal trees: generation, dimension estimates, diagnostics"
)]
struct Cli {
    /// Suppress progress messages on standard output.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a point set and write CSV plus a run manifest.
    Generate(GenerateArgs),
    /// Estimate the dimension of a point set from a CSV file.
    EstimateDim(EstimateArgs),
    /// Run a Monte Carlo check of a branching-process identity.
    Diagnose(DiagnoseArgs),
    /// Draw a planar point set as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Ct,
    Smooth,
    Hard,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_enum, required_unless_present = "from_manifest")]
    model: Option<ModelArg>,
    #[arg(long = "dim", default_value_t = 2)]
    dim: usize,
    #[arg(long, group = "rate")]
    alpha: Option<f64>,
    /// Exact rational alpha such as 10/9.
    #[arg(long, group = "rate", value_parser = parse_ratio)]
    alpha_ratio: Option<f64>,
    #[arg(long, group = "rate")]
    rho: Option<f64>,
    /// Innovation parameter; for `ct` it fixes rho = c_d / theta.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value = "gaussian")]
    profile: SpatialProfile,
    /// Vertex budget (ct) or number of points after the root (smooth, hard).
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long)]
    max_time: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    r_count: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_REJECTIONS)]
    max_rejections: u64,
    #[arg(long, default_value = "points.csv")]
    out: PathBuf,
    #[arg(long)]
    json_out: Option<PathBuf>,
    #[arg(long)]
    svg_out: Option<PathBuf>,
    /// Manifest path; defaults to `<out>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Replay the run described by an earlier manifest.
    #[arg(long, conflicts_with_all = ["model", "alpha", "alpha_ratio", "rho", "theta"])]
    from_manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "boxcount")]
    method: DimMethod,
    #[arg(long)]
    eps_min: Option<f64>,
    #[arg(long)]
    eps_max: Option<f64>,
    #[arg(long)]
    eps_steps: Option<usize>,
    /// Seed for pair subsampling.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Defaults to standard output.
    #[arg(long)]
    json_out: Option<PathBuf>,
    #[arg(long)]
    svg_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IdentityArg {
    Moment,
    Martingale,
    Levelcount,
    Growth,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[arg(long, value_enum)]
    identity: IdentityArg,
    /// Defaults to 5000, or 50 for `growth`.
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long, default_value_t = 3)]
    levels: usize,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Vertex budget per replica for `growth`.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Defaults to standard output.
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    svg_out: PathBuf,
    #[arg(long)]
    edges: bool,
}

fn parse_ratio(s: &str) -> std::result::Result<f64, String> {
    let (p, q) = s
        .split_once('/')
        .ok_or_else(|| format!("expected p/q, got {s:?}"))?;
    let p: f64 = p
        .trim()
        .parse()
        .map_err(|_| format!("bad numerator in {s:?}"))?;
    let q: f64 = q
        .trim()
        .parse()
        .map_err(|_| format!("bad denominator in {s:?}"))?;
    if q == 0.0 || !(p / q).is_finite() {
        return Err(format!("{s:?} is not a finite ratio"));
    }
    Ok(p / q)
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a, cli.quiet),
        Command::EstimateDim(a) => estimate(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Plot(a) => plot(a),
    }
}

fn spec_from_args(a: &GenerateArgs) -> Result<GenerationSpec> {
    let alpha = a.alpha.or(a.alpha_ratio);
    match a.model.expect("clap enforces --model") {
        ModelArg::Ct => {
            let params = match (alpha, a.rho, a.theta) {
                (Some(alpha), None, None) => ProcessParams::from_alpha(a.dim, alpha, a.profile)?,
                (None, Some(rho), None) => ProcessParams::from_rho(a.dim, rho, a.profile)?,
                (None, None, Some(theta)) if theta > 0.0 && theta.is_finite() => {
                    ProcessParams::from_rho(a.dim, compute_cd(a.profile, a.dim) / theta, a.profile)?
                }
                (None, None, Some(theta)) => {
                    return Err(Error::Domain(format!(
                        "theta must be positive, got {theta}"
                    )))
                }
                _ => {
                    return Err(Error::Domain(
                        "ct model takes exactly one of --alpha, --alpha-ratio, --rho, --theta"
                            .into(),
                    ))
                }
            };
            if let Some(t) = a.max_time {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(Error::Domain(format!("max-time must be positive, got {t}")));
                }
            }
            Ok(GenerationSpec::continuous(
                &params.with_seed(a.seed),
                a.n,
                a.max_time,
            ))
        }
        m @ (ModelArg::Smooth | ModelArg::Hard) => {
            let alpha = match (alpha, a.rho) {
                (Some(alpha), _) => alpha,
                (None, Some(rho)) => rho * a.dim as f64,
                (None, None) => {
                    return Err(Error::Domain(
                        "discrete models need --alpha, --alpha-ratio or --rho".into(),
                    ))
                }
            };
            let model = match m {
                ModelArg::Hard => AgoraModel::HardThreshold,
                _ => AgoraModel::Smooth,
            };
            if a.max_time.is_some() {
                return Err(Error::Domain(
                    "--max-time applies to the ct model only".into(),
                ));
            }
            let mut cfg = AgoraConfig::new(a.dim, alpha, a.theta.unwrap_or(1.0), a.n, model)
                .with_seed(a.seed);
            cfg.r_count = a.r_count;
            cfg.max_rejections_per_point = a.max_rejections;
            cfg.validate()?;
            Ok(GenerationSpec::discrete(&cfg))
        }
    }
}

/// Name of `file` as seen from `dir`, or the full path if it lies elsewhere.
fn relative_name(file: &Path, dir: &Path) -> String {
    let abs = |p: &Path| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
    let (file, dir) = (abs(file), abs(dir));
    file.strip_prefix(&dir)
        .map(|p| p.to_string_lossy().into_owned())
        .unwrap_or_else(|_| file.to_string_lossy().into_owned())
}

fn generate(a: GenerateArgs, quiet: bool) -> Result<()> {
    let spec = match &a.from_manifest {
        Some(path) => io::read_json::<RunManifest>(path)?.generation,
        None => spec_from_args(&a)?,
    };
    let started_at = chrono::Utc::now().to_rfc3339();
    let generated = match spec.run() {
        Ok(g) => g,
        Err(Error::Partial { partial, source }) => {
            let path = a.out.with_extension("partial.csv");
            io::write_points_csv(&PointRecords::from(&*partial), &path)?;
            eprintln!(
                "partial tree with {} points written to {}",
                partial.len(),
                path.display()
            );
            return Err(*source);
        }
        Err(e) => return Err(e),
    };
    let records = generated.records();
    let mut written = vec![a.out.clone()];
    io::write_points_csv(&records, &a.out)?;
    if let Some(path) = &a.json_out {
        io::write_json(&records, path)?;
        written.push(path.clone());
    }
    if let Some(path) = &a.svg_out {
        svg::emit_scatter_svg(&records, path, &ScatterOptions::default())?;
        written.push(path.clone());
    }

    let manifest_path = a
        .manifest
        .clone()
        .unwrap_or_else(|| io::manifest_path_for(&a.out));
    let dir = manifest_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let outputs = written
        .iter()
        .map(|p| {
            Ok(OutputDigest {
                file: relative_name(p, &dir),
                sha256: io::sha256_file(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        format_version: io::FORMAT_VERSION,
        library_version: crate::VERSION.to_string(),
        generation: spec,
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        stats: match &generated {
            Generated::Discrete(tree) => Some(tree.stats),
            Generated::Continuous(..) => None,
        },
        outputs,
    };
    io::write_json(&manifest, &manifest_path)?;
    if !quiet {
        println!(
            "wrote {} points to {} (manifest {})",
            records.len(),
            a.out.display(),
            manifest_path.display()
        );
    }
    Ok(())
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let records = io::read_points_csv(&a.input)?;
    let points = Points::new(records.d, &records.coords)?;
    let sweep = Sweep {
        eps_min: a.eps_min,
        eps_max: a.eps_max,
        steps: a.eps_steps,
        seed: a.seed,
    };
    let fit = estimate_dimension(points, a.method, &sweep)?;
    match &a.json_out {
        Some(path) => io::write_json(&fit, path)?,
        None => println!(
            "{}",
            serde_json::to_string_pretty(&fit).expect("DimFit serializes")
        ),
    }
    if let Some(path) = &a.svg_out {
        svg::emit_dimension_plot(&fit, path)?;
    }
    if a.json_out.is_some() {
        println!(
            "{} slope = {:.4} ± {:.4}",
            fit.method, fit.slope, fit.stderr
        );
    }
    Ok(())
}

fn diagnose(a: DiagnoseArgs) -> Result<()> {
    let settings = RunSettings {
        replicas: a.replicas.unwrap_or(match a.identity {
            IdentityArg::Growth => 50,
            _ => 5000,
        }),
        max_level: a.levels,
        seed: a.seed,
        ..RunSettings::default()
    };
    if settings.replicas < 2 {
        return Err(Error::Domain("need at least 2 replicas".into()));
    }
    let (name, records) = match a.identity {
        IdentityArg::Moment => (
            "moment",
            diagnostics::run_moment(a.rho, &[1.0, 1.5, 2.0], &settings)?,
        ),
        IdentityArg::Martingale => ("martingale", diagnostics::run_martingale(a.rho, &settings)?),
        IdentityArg::Levelcount => (
            "levelcount",
            diagnostics::run_levelcount(a.rho, &[0.5, 1.0, 2.0], &settings)?,
        ),
        IdentityArg::Growth => (
            "growth",
            vec![diagnostics::run_growth(a.rho, a.n, &settings)?],
        ),
    };
    let report = DiagnosticReport {
        format_version: REPORT_FORMAT_VERSION,
        identity: name.into(),
        seed: a.seed,
        records,
    };
    match &a.json_out {
        Some(path) => {
            io::write_json(&report, path)?;
            for r in &report.records {
                println!(
                    "{} {}: theory {:.6} empirical {:.6} ± {:.6} {}",
                    r.identity,
                    r.label,
                    r.theoretical,
                    r.empirical,
                    r.stderr,
                    if r.pass { "PASS" } else { "FAIL" }
                );
            }
        }
        None => println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        ),
    }
    Ok(())
}

fn plot(a: PlotArgs) -> Result<()> {
    let records = io::read_points_csv(&a.input)?;
    let opts = ScatterOptions {
        edges: a.edges,
        ..ScatterOptions::default()
    };
    svg::emit_scatter_svg(&records, &a.svg_out, &opts)
}
