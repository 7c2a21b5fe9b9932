//! The `intflux` command line tool.
//!
//! Exit codes: 0 success, 2 a check ran and failed, 1 error, 64 usage.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::field::FieldSource;
use crate::fld;
use crate::geom::{Aabb, GridSpec, Vec3};
use crate::maximal::{energy_chain_check, energy_from_rows, lipschitz_chain_check, uncentered_maximal, weak_bound_check};
use crate::metric::{metric_upper_bound, Density, DomainSpec};
use crate::minimize::{growth_diagnostic, minimize_charged, Charge, ChargeSpec, SolverOptions};
use crate::norms::{lp_norm, IntegrationOptions, Region};
use crate::output::{csv_line, envelope, fmt17, to_json_string};
use crate::poly::{Monomial, PolyField, ScalarPoly};
use crate::quadrature::{SphereForm, SphereQuadrature};
use crate::slicing::{integer_flux_report, radial_scan, read_scan_csv, sphere_flux, write_scan_csv};
use crate::synthesis::{counterexample_field, test_dictionary, Dipole, DipoleSpec, TargetMeasure, DEFAULT_SEGMENT_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug, Serialize)]
#[command(name = "intflux", version, about = "Integer-flux vector fields: fluxes, slices, metrics and minimizers")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Sphere quadrature order.
    #[arg(long, global = true, default_value_t = 32)]
    pub order: usize,
    /// Grid or spectral resolution, where a subcommand uses one.
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    /// Seed for randomized test fields and densities.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Flux of a field through one sphere.
    Flux(FluxArgs),
    /// Slices on concentric spheres, as CSV.
    Scan(ScanArgs),
    /// Integer-flux membership report; exits 2 when a flux is not integral.
    Report(ReportArgs),
    /// Norms of a single dipole, optionally rasterized.
    Dipole(DipoleArgs),
    /// Flux and shell norms of the unit monopole.
    Monopole(MonopoleArgs),
    /// Diagnostics of the lattice counterexample at level k.
    Counterexample(CounterexampleArgs),
    /// Upper bound of the slice metric between two densities.
    Metric(MetricArgs),
    /// Maximal function, chain and weak-type checks on a scan.
    Maximal(MaximalArgs),
    /// Minimize the smoothed L^p energy with point charges.
    Minimize(MinimizeArgs),
    /// L^p norms of the counterexample family across levels.
    Growth(GrowthArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Flux(_) => "flux",
            Command::Scan(_) => "scan",
            Command::Report(_) => "report",
            Command::Dipole(_) => "dipole",
            Command::Monopole(_) => "monopole",
            Command::Counterexample(_) => "counterexample",
            Command::Metric(_) => "metric",
            Command::Maximal(_) => "maximal",
            Command::Minimize(_) => "minimize",
            Command::Growth(_) => "growth",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    Monopole,
    Dipole,
    Constant,
    Zero,
    Random,
    Counterexample,
}

#[derive(Args, Debug, Clone, Serialize)]
#[group(skip)]
pub struct FieldArgs {
    #[arg(long, value_enum, required_unless_present = "field")]
    pub builtin: Option<Builtin>,
    /// Sampled field in FLD1 format.
    #[arg(long, conflicts_with = "builtin")]
    pub field: Option<PathBuf>,
    /// Monopole location.
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, default_value = "0,0,0")]
    pub source: [f64; 3],
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, default_value = "0.75,0.5,0.5")]
    pub dipole_a: [f64; 3],
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, default_value = "0.25,0.5,0.5")]
    pub dipole_b: [f64; 3],
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, default_value = "1,0,0")]
    pub vector: [f64; 3],
    /// Level of the counterexample field.
    #[arg(long, default_value_t = 1)]
    pub level: u32,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub scale: f64,
    /// Adds this multiple of a seeded smooth polynomial field.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub perturb: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct FluxArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    pub center: [f64; 3],
    #[arg(long)]
    pub radius: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct ScanArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    pub center: [f64; 3],
    #[arg(long)]
    pub r_min: f64,
    #[arg(long)]
    pub r_max: f64,
    #[arg(long, default_value_t = 64)]
    pub radii: usize,
    #[arg(long, default_value_t = 1.2)]
    pub p: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// JSON list of `{center, radius}`.
    #[arg(long, conflicts_with_all = ["center", "radii"])]
    pub spheres: Option<PathBuf>,
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    pub center: Option<[f64; 3]>,
    #[arg(long, value_delimiter = ',')]
    pub radii: Vec<f64>,
    /// Integrality tolerance; estimated from an order-doubling check when
    /// absent.
    #[arg(long)]
    pub tau: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct DipoleArgs {
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, default_value = "0.75,0.5,0.5")]
    pub a: [f64; 3],
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, default_value = "0.25,0.5,0.5")]
    pub b: [f64; 3],
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,1.2")]
    pub p: Vec<f64>,
    /// Nodes per axis of the rasterization grid over the unit cube.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Where to write the rasterized field.
    #[arg(long, requires = "grid")]
    pub fld: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct MonopoleArgs {
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, default_value = "0,0,0")]
    pub source: [f64; 3],
    #[arg(long, default_value_t = 0.25)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.125)]
    pub inner: f64,
    #[arg(long, default_value_t = 1.0)]
    pub outer: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,1.2")]
    pub p: Vec<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct CounterexampleArgs {
    #[arg(long)]
    pub k: u32,
    #[arg(long, value_delimiter = ',', default_value = "1,1.2")]
    pub p: Vec<f64>,
    /// Where to write the JSON report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub cap: Option<u128>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainArg {
    Square,
    Sphere,
}

#[derive(Args, Debug, Serialize)]
pub struct MetricArgs {
    #[arg(long, value_enum, default_value = "square")]
    pub domain: DomainArg,
    #[arg(long, default_value_t = 1.2)]
    pub p: f64,
    /// `constant:C`, `random:C` or `file:PATH` (JSON array of node values).
    #[arg(long, default_value = "random:1")]
    pub h1: String,
    #[arg(long, default_value = "random:1")]
    pub h2: String,
}

#[derive(Args, Debug, Serialize)]
pub struct MaximalArgs {
    /// Scan CSV as written by `scan`.
    #[arg(long)]
    pub scan: PathBuf,
    #[arg(long, default_value_t = 1.2)]
    pub p: f64,
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub interval: Option<[f64; 2]>,
    /// Recompute slices from this built-in field to check the Hölder step.
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, requires = "builtin")]
    pub center: Option<[f64; 3]>,
}

#[derive(Args, Debug, Serialize)]
pub struct MinimizeArgs {
    /// JSON list of `{point, charge}`; points in the unit cube.
    #[arg(long)]
    pub atoms: PathBuf,
    #[arg(long, default_value_t = 1.2)]
    pub p: f64,
    /// Nodes per axis.
    #[arg(long, default_value_t = 9)]
    pub grid: usize,
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    #[arg(long)]
    pub smoothing: Option<f64>,
    /// Where to write the trace CSV; stdout when absent.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct GrowthArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,1.2,1.4")]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    pub k: Vec<u32>,
    #[arg(long)]
    pub cap: Option<u128>,
}

fn parse_floats<const N: usize>(s: &str) -> std::result::Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got `{s}`"));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"))?;
        if !o.is_finite() {
            return Err(format!("`{p}` is not finite"));
        }
    }
    Ok(out)
}

fn parse_triple(s: &str) -> std::result::Result<[f64; 3], String> {
    parse_floats::<3>(s)
}

fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    parse_floats::<2>(s)
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(&cli, stdout) {
        Ok(Outcome::Pass) => EXIT_OK,
        Ok(Outcome::Fail) => EXIT_CHECK_FAILED,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Run(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}

enum Outcome {
    Pass,
    Fail,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type CliResult = std::result::Result<Outcome, Failure>;

fn write_text(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn no_csv(cli: &Cli) -> std::result::Result<(), Failure> {
    if cli.common.format == Some(Format::Csv) {
        return Err(Failure::Usage(format!("`{}` has no CSV output", cli.command.name())));
    }
    Ok(())
}

fn emit_json(cli: &Cli, body: &impl Serialize, path: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let doc = envelope(cli.command.name(), cli, body)?;
    write_text(path.or(cli.common.out.as_deref()), &to_json_string(&doc)?, stdout)
}

/// Polynomial field of degree at most 2 with coefficients in `[-1, 1]` drawn
/// from `seed`.
pub fn random_poly_field(seed: u64) -> PolyField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exps = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [2, 0, 0], [0, 2, 0], [0, 0, 2], [1, 1, 0], [1, 0, 1], [0, 1, 1]];
    let comp = |rng: &mut ChaCha8Rng| ScalarPoly::new(exps.iter().map(|e| Monomial::new(rng.gen_range(-1.0..1.0), *e)).collect());
    let c = [comp(&mut rng), comp(&mut rng), comp(&mut rng)];
    PolyField::new(c).expect("degree 2 fits")
}

fn build_field(f: &FieldArgs, seed: u64) -> Result<FieldSource> {
    let base = match (f.builtin, &f.field) {
        (_, Some(path)) => FieldSource::Grid(fld::load(path)?),
        (Some(Builtin::Monopole), None) => FieldSource::monopole(Vec3::from(f.source)),
        (Some(Builtin::Dipole), None) => {
            let mut spec = DipoleSpec::new(Vec3::from(f.dipole_a), Vec3::from(f.dipole_b));
            if let Some(r) = f.rho {
                spec = spec.with_rho(r);
            }
            FieldSource::Dipole(Dipole::new(&spec)?)
        }
        (Some(Builtin::Constant), None) => FieldSource::Constant(Vec3::from(f.vector)),
        (Some(Builtin::Zero), None) => FieldSource::zero(),
        (Some(Builtin::Random), None) => FieldSource::Polynomial(random_poly_field(seed)),
        (Some(Builtin::Counterexample), None) => {
            counterexample_field(f.level, &TargetMeasure::ConstantX, DEFAULT_SEGMENT_CAP)?.field()
        }
        (None, None) => return Err(Error::invalid("a field source is required")),
    };
    let mut field = if f.scale == 1.0 { base } else { base.scaled(f.scale) };
    if f.perturb != 0.0 {
        field = field.plus(FieldSource::Polynomial(random_poly_field(seed.wrapping_add(1))).scaled(f.perturb));
    }
    Ok(field)
}

fn rule(cli: &Cli) -> std::sync::Arc<SphereQuadrature> {
    SphereQuadrature::shared(cli.common.order)
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> CliResult {
    if cli.common.order < 2 {
        return Err(Failure::Usage("--order must be at least 2".into()));
    }
    match &cli.command {
        Command::Flux(a) => flux(cli, a, stdout),
        Command::Scan(a) => scan(cli, a, stdout),
        Command::Report(a) => report(cli, a, stdout),
        Command::Dipole(a) => dipole(cli, a, stdout),
        Command::Monopole(a) => monopole(cli, a, stdout),
        Command::Counterexample(a) => counterexample(cli, a, stdout),
        Command::Metric(a) => metric(cli, a, stdout),
        Command::Maximal(a) => maximal(cli, a, stdout),
        Command::Minimize(a) => minimize(cli, a, stdout),
        Command::Growth(a) => growth(cli, a, stdout),
    }
}

fn flux(cli: &Cli, a: &FluxArgs, stdout: &mut dyn Write) -> CliResult {
    let field = build_field(&a.field, cli.common.seed)?;
    let value = sphere_flux(&field, &Vec3::from(a.center), a.radius, &rule(cli))?;
    let out = cli.common.out.as_deref();
    match cli.common.format {
        Some(Format::Json) => {
            let nearest = value.round();
            emit_json(cli, &json!({"flux": value, "nearest": nearest as i64, "deviation": (value - nearest).abs()}), None, stdout)?
        }
        Some(Format::Csv) => write_text(out, &format!("flux\n{}", csv_line(&[fmt17(value)])), stdout)?,
        None => write_text(out, &format!("{}\n", fmt17(value)), stdout)?,
    }
    Ok(Outcome::Pass)
}

fn scan(cli: &Cli, a: &ScanArgs, stdout: &mut dyn Write) -> CliResult {
    let field = build_field(&a.field, cli.common.seed)?;
    let s = radial_scan(&field, &Vec3::from(a.center), a.r_min, a.r_max, a.radii, a.p, &rule(cli))?;
    let rows = s.rows();
    if cli.common.format == Some(Format::Json) {
        let rows: Vec<Value> = rows
            .iter()
            .map(|r| {
                if r.valid {
                    json!({"r": r.r, "flux": r.flux, "nearest": r.nearest, "deviation": r.deviation, "energy": r.energy, "valid": true})
                } else {
                    json!({"r": r.r, "flux": null, "nearest": null, "deviation": null, "energy": null, "valid": false})
                }
            })
            .collect();
        emit_json(cli, &json!({"rows": rows, "valid_count": s.valid_count()}), None, stdout)?;
    } else {
        let mut buf = Vec::new();
        write_scan_csv(&rows, &mut buf)?;
        write_text(cli.common.out.as_deref(), &String::from_utf8_lossy(&buf), stdout)?;
    }
    Ok(Outcome::Pass)
}

#[derive(Deserialize)]
struct SphereEntry {
    center: [f64; 3],
    radius: f64,
}

fn report(cli: &Cli, a: &ReportArgs, stdout: &mut dyn Write) -> CliResult {
    no_csv(cli)?;
    let spheres: Vec<(Vec3, f64)> = match (&a.spheres, a.center) {
        (Some(path), _) => read_json::<Vec<SphereEntry>>(path)?.into_iter().map(|s| (Vec3::from(s.center), s.radius)).collect(),
        (None, Some(c)) if !a.radii.is_empty() => a.radii.iter().map(|r| (Vec3::from(c), *r)).collect(),
        _ => return Err(Failure::Usage("report needs --spheres, or --center with --radii".into())),
    };
    let field = build_field(&a.field, cli.common.seed)?;
    let rep = integer_flux_report(&field, &spheres, &rule(cli), a.tau)?;
    emit_json(cli, &rep, None, stdout)?;
    Ok(if rep.pass { Outcome::Pass } else { Outcome::Fail })
}

fn p_key(p: f64) -> String {
    format!("{p}")
}

fn dipole(cli: &Cli, a: &DipoleArgs, stdout: &mut dyn Write) -> CliResult {
    no_csv(cli)?;
    let mut spec = DipoleSpec::new(Vec3::from(a.a), Vec3::from(a.b)).with_dim(a.dim);
    if let Some(r) = a.rho {
        spec = spec.with_rho(r);
    }
    let d = Dipole::new(&spec)?;
    let mut energies = BTreeMap::new();
    let mut norms = BTreeMap::new();
    for &p in &a.p {
        energies.insert(p_key(p), d.lp_energy(p)?);
        norms.insert(p_key(p), d.lp_norm(p)?);
    }
    if let (Some(n), Some(path)) = (a.grid, &a.fld) {
        if a.dim != 3 {
            return Err(Failure::Usage("only 3-dimensional dipoles can be rasterized".into()));
        }
        let grid = GridSpec::spanning(&Aabb::unit_cube(), n)?;
        fld::save(&d.rasterize(&grid)?, path)?;
    }
    let body = json!({
        "a": a.a, "b": a.b, "dim": a.dim, "half_length": d.half_length, "rho_t": d.rho_t,
        "lp_energies": energies, "lp_norms": norms,
    });
    emit_json(cli, &body, None, stdout)?;
    Ok(Outcome::Pass)
}

fn monopole(cli: &Cli, a: &MonopoleArgs, stdout: &mut dyn Write) -> CliResult {
    no_csv(cli)?;
    let c = Vec3::from(a.source);
    let field = FieldSource::monopole(c);
    let flux = sphere_flux(&field, &c, a.radius, &rule(cli))?;
    let region = Region::shell(c, a.inner, a.outer);
    let mut opts = IntegrationOptions::default();
    if let Some(r) = cli.common.resolution {
        opts.resolution = r;
    }
    let mut norms = BTreeMap::new();
    for &p in &a.p {
        norms.insert(p_key(p), lp_norm(&field, p, &region, &opts)?);
    }
    emit_json(cli, &json!({"flux": flux, "shell": [a.inner, a.outer], "lp_norms": norms}), None, stdout)?;
    Ok(Outcome::Pass)
}

fn counterexample(cli: &Cli, a: &CounterexampleArgs, stdout: &mut dyn Write) -> CliResult {
    no_csv(cli)?;
    let c = counterexample_field(a.k, &TargetMeasure::ConstantX, a.cap.unwrap_or(DEFAULT_SEGMENT_CAP))?;
    let rep = c.report(&TargetMeasure::ConstantX, &a.p, &test_dictionary())?;
    emit_json(cli, &rep, a.report.as_deref(), stdout)?;
    Ok(Outcome::Pass)
}

/// Density from `constant:C`, `random:C` or `file:PATH`.
fn parse_density(text: &str, domain: &DomainSpec, seed: u64) -> Result<Density> {
    let (kind, arg) = text.split_once(':').ok_or_else(|| Error::invalid(format!("bad density `{text}`")))?;
    let nodes = domain.nodes();
    let values: Vec<f64> = match kind {
        "constant" | "random" => {
            let c: f64 = arg.parse().map_err(|_| Error::invalid(format!("bad density constant `{arg}`")))?;
            if kind == "constant" {
                vec![c; nodes.len()]
            } else {
                random_density(domain, &nodes, c, seed)
            }
        }
        "file" => read_json(Path::new(arg))?,
        _ => return Err(Error::invalid(format!("unknown density kind `{kind}`"))),
    };
    if values.len() != nodes.len() {
        return Err(Error::invalid(format!("density needs {} values, got {}", nodes.len(), values.len())));
    }
    Ok(match domain.kind {
        crate::metric::DomainKind::SquarePeriodic => Density::Square(values),
        crate::metric::DomainKind::Sphere => {
            Density::Sphere(SphereForm::on_unit_sphere(values, domain.sphere_rule()))
        }
    })
}

/// `c` plus a few smooth seeded modes of amplitude at most `0.25`.
fn random_density(domain: &DomainSpec, nodes: &[[f64; 3]], c: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match domain.kind {
        crate::metric::DomainKind::SquarePeriodic => {
            let modes: Vec<([f64; 2], f64, f64)> = (0..3)
                .map(|_| {
                    let k = [rng.gen_range(-3i32..=3) as f64, rng.gen_range(1i32..=3) as f64];
                    (k, rng.gen_range(-1.0..1.0) / 12.0, rng.gen_range(0.0..std::f64::consts::TAU))
                })
                .collect();
            nodes
                .iter()
                .map(|x| {
                    c + modes
                        .iter()
                        .map(|(k, amp, ph)| amp * (std::f64::consts::TAU * (k[0] * x[0] + k[1] * x[1]) + ph).cos())
                        .sum::<f64>()
                })
                .collect()
        }
        crate::metric::DomainKind::Sphere => {
            let poly = random_poly_field(seed);
            nodes
                .iter()
                .map(|x| {
                    let v = poly.eval(&Vec3::from(*x));
                    c + 0.25 * (v[0] / 10.0).tanh()
                })
                .collect()
        }
    }
}

fn metric(cli: &Cli, a: &MetricArgs, stdout: &mut dyn Write) -> CliResult {
    no_csv(cli)?;
    let domain = match a.domain {
        DomainArg::Square => DomainSpec::square(cli.common.resolution.unwrap_or(64))?,
        DomainArg::Sphere => DomainSpec::sphere(cli.common.resolution.unwrap_or(16))?,
    };
    let h1 = parse_density(&a.h1, &domain, cli.common.seed)?;
    let h2 = parse_density(&a.h2, &domain, cli.common.seed.wrapping_add(1))?;
    let m = metric_upper_bound(&h1, &h2, a.p, &domain)?;
    let body = json!({
        "domain": domain.kind, "resolution": domain.resolution, "p": a.p,
        "upper_bound": m.upper_bound, "flux_h1": m.flux_h1, "flux_h2": m.flux_h2, "integer_gap": m.integer_gap,
    });
    emit_json(cli, &body, None, stdout)?;
    Ok(Outcome::Pass)
}

fn maximal(cli: &Cli, a: &MaximalArgs, stdout: &mut dyn Write) -> CliResult {
    no_csv(cli)?;
    let file = std::fs::File::open(&a.scan).map_err(Error::from)?;
    let rows = read_scan_csv(std::io::BufReader::new(file))?;
    let profile = energy_from_rows(&rows, a.p)?;
    let interval = a.interval.map_or((profile.radii[0], profile.radii[profile.radii.len() - 1]), |i| (i[0], i[1]));
    let chain = match (a.builtin, a.center) {
        (Some(b), Some(c)) => {
            let f = FieldArgs {
                builtin: Some(b),
                field: None,
                source: [0.0; 3],
                dipole_a: [0.75, 0.5, 0.5],
                dipole_b: [0.25, 0.5, 0.5],
                rho: None,
                vector: [1.0, 0.0, 0.0],
                level: 1,
                scale: 1.0,
                perturb: 0.0,
            };
            let field = build_field(&f, cli.common.seed)?;
            let (lo, hi) = (rows[0].r, rows[rows.len() - 1].r);
            let s = radial_scan(&field, &Vec3::from(c), lo, hi, rows.len(), a.p, &rule(cli))?;
            lipschitz_chain_check(&s, interval, false)?
        }
        (Some(_), None) => return Err(Failure::Usage("--builtin needs --center".into())),
        _ => energy_chain_check(&profile, interval)?,
    };
    let m = uncentered_maximal(&profile, interval)?;
    let weak = weak_bound_check(&m, a.p, None)?;
    let pass = chain.holds(1e-9) && weak.pass;
    let body = json!({
        "worst_slack_i": chain.worst_slack_i,
        "worst_slack_ii": chain.worst_slack_ii,
        "weak_bound_ratio": weak.ratio,
        "flux_mismatch_radii": chain.flux_mismatch_radii,
        "pairs": chain.pairs,
        "weak_bound": weak,
        "pass": pass,
    });
    emit_json(cli, &body, None, stdout)?;
    Ok(if pass { Outcome::Pass } else { Outcome::Fail })
}

fn minimize(cli: &Cli, a: &MinimizeArgs, stdout: &mut dyn Write) -> CliResult {
    let atoms: Vec<Charge> = read_json(&a.atoms)?;
    let grid = GridSpec::spanning(&Aabb::unit_cube(), cli.common.resolution.unwrap_or(a.grid))?;
    let spec = ChargeSpec::new(atoms, grid)?;
    let opts = SolverOptions { step: a.step, max_iters: a.iters, tol: a.tol, smoothing: a.smoothing };
    let (sol, trace) = minimize_charged(&spec, a.p, &opts)?;
    if let Some(path) = &cli.common.out {
        fld::save(&sol.node_field(), path)?;
    }
    if cli.common.format == Some(Format::Json) {
        let body = json!({
            "objective": sol.objective, "iterations": trace.iterations,
            "div_residual": trace.final_residual(), "smoothing": sol.smoothing, "trace": trace,
        });
        let doc = envelope("minimize", cli, &body)?;
        write_text(a.trace.as_deref(), &to_json_string(&doc)?, stdout)?;
    } else {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf)?;
        write_text(a.trace.as_deref(), &String::from_utf8_lossy(&buf), stdout)?;
    }
    Ok(Outcome::Pass)
}

fn growth(cli: &Cli, a: &GrowthArgs, stdout: &mut dyn Write) -> CliResult {
    let rows = growth_diagnostic(&a.p, &a.k, a.cap)?;
    if cli.common.format == Some(Format::Csv) {
        let mut text = String::from("p,k,norm,energy,energy_per_mass,bounded\n");
        for r in &rows {
            for i in 0..r.k.len() {
                text += &csv_line(&[
                    fmt17(r.p),
                    r.k[i].to_string(),
                    fmt17(r.norms[i]),
                    fmt17(r.energies[i]),
                    fmt17(r.energy_per_mass[i]),
                    (r.bounded as u8).to_string(),
                ]);
            }
        }
        write_text(cli.common.out.as_deref(), &text, stdout)?;
    } else {
        emit_json(cli, &json!({"rows": rows}), None, stdout)?;
    }
    Ok(Outcome::Pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn random_field_is_seeded() {
        let p = Vec3::new(0.3, -0.2, 0.7);
        assert_eq!(random_poly_field(7).eval(&p), random_poly_field(7).eval(&p));
        assert_ne!(random_poly_field(7).eval(&p), random_poly_field(8).eval(&p));
    }
}
