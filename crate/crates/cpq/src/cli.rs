//! The `cpq` command line. `main.rs` only maps the outcome of [`run`] to an
//! exit code.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use cpq_core::solid_angle::solid_angle_planar;
use cpq_core::{
    convergence_sweep, integrate_double_layer, Classification, CurvedTriangle, DensityPolynomial,
    IntegralResult, PairIntegrator, PairKernel, Point2, RegularizationLevel, Vec3,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::Error;
use crate::mesh_io::read_msh;
use crate::oracle::{
    reference_pair_with, reference_single_with, OracleOptions, OuterStrategy, Strategy,
};
use crate::parallel::integrate_pair_par;
use crate::reference::{self, Case, ReferenceValue};

#[derive(Debug, Parser)]
#[command(name = "cpq", version, about = "Singular and near-singular double-layer quadrature on curved triangles")]
struct Cli {
    /// Worker threads for sweeps and pair integrals [default: all cores].
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integral over one triangle at one point, as JSON.
    Integrate(IntegrateArgs),
    /// Error against a reference over a list of orders, as CSV.
    Converge(ConvergeArgs),
    /// Integral over a pair of triangles, as JSON.
    Pair(PairArgs),
    /// Closed-form solid angle of a planar triangle next to the quadrature value.
    SolidAngle(SolidAngleArgs),
    /// Recomputes the reference values and writes the reference file.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
struct TriangleArgs {
    /// Control points as a JSON list of 3 or 6 `[x, y, z]`.
    #[arg(long, conflicts_with = "paper_triangle")]
    triangle: Option<String>,

    /// Quadratic test patch whose fifth node is `(a, b, c)`.
    #[arg(long, value_name = "A,B,C", allow_hyphen_values = true)]
    paper_triangle: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Reg {
    None,
    T2,
    T2t1,
    Auto,
}

impl Reg {
    fn level(self) -> Option<RegularizationLevel> {
        match self {
            Reg::None => Some(RegularizationLevel::Off),
            Reg::T2 => Some(RegularizationLevel::T2),
            Reg::T2t1 => Some(RegularizationLevel::T2T1),
            Reg::Auto => None,
        }
    }

    fn name(self) -> &'static str {
        self.level().map_or("auto", |l| l.name())
    }
}

#[derive(Debug, Args)]
struct IntegrateArgs {
    #[command(flatten)]
    tri: TriangleArgs,

    /// One constant, or a JSON list of 3 or 6 nodal values.
    #[arg(long, default_value = "1")]
    density: String,

    /// `x,y,z`, or `F:u,v` for the image of `(u, v)`, or `F:u,v:dx,dy,dz`
    /// for that image plus an offset.
    #[arg(long, allow_hyphen_values = true)]
    x0: String,

    /// Gauss order per direction; the rule has `n²` points.
    #[arg(long, default_value_t = 20)]
    n: usize,

    #[arg(long, value_enum, default_value_t = Reg::Auto)]
    reg: Reg,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["reference", "oracle", "case"]))]
struct ConvergeArgs {
    #[command(flatten)]
    tri: TriangleArgs,

    #[arg(long, default_value = "1")]
    density: String,

    /// Evaluation point for single-triangle sweeps.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "scenario")]
    x0: Option<String>,

    /// Pair scenario for 4D sweeps, see `pair --help`.
    #[arg(long)]
    scenario: Option<String>,

    /// Orders to run, e.g. `2..200` or `4,8,16,32`; ranges are inclusive.
    #[arg(long)]
    n_list: String,

    #[arg(long, value_enum, value_delimiter = ',', default_value = "none,t2,t2t1")]
    levels: Vec<Reg>,

    /// Reference value `re` or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    reference: Option<String>,

    /// Compute the reference with the adaptive oracle.
    #[arg(long)]
    oracle: bool,

    /// Oracle tolerance [default: 1e-12 single, 1e-9 pair].
    #[arg(long, requires = "oracle")]
    oracle_tol: Option<f64>,

    /// Take the reference from the reference file.
    #[arg(long)]
    case: Option<String>,

    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PairArgs {
    /// `identical`, `shifted:dx,dy,dz` or `mesh:PATH:TAG_A:TAG_B` with Gmsh
    /// element tags.
    #[arg(long, allow_hyphen_values = true)]
    scenario: String,

    #[command(flatten)]
    tri: TriangleArgs,

    #[arg(long, default_value_t = 16)]
    n: usize,

    #[arg(long, value_enum, default_value_t = Reg::T2t1)]
    reg: Reg,

    /// `double-layer` or `helmholtz:K`.
    #[arg(long, default_value = "double-layer")]
    kernel: String,

    /// Report the error against this entry of the reference file.
    #[arg(long)]
    case: Option<String>,
}

#[derive(Debug, Args)]
struct SolidAngleArgs {
    /// JSON list of three `[x, y, z]`.
    #[arg(long)]
    vertices: String,

    #[arg(long, allow_hyphen_values = true)]
    x0: String,

    #[arg(long, default_value_t = 80)]
    n: usize,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Output file [default: the reference file in use].
    #[arg(long)]
    out: Option<PathBuf>,

    /// Only these cases; other entries of an existing file are kept.
    #[arg(long)]
    case: Vec<String>,

    /// Sphere mesh for the mesh cases [default: the bundled fixture].
    #[arg(long)]
    mesh: Option<PathBuf>,

    /// Print case ids and configuration hashes, compute nothing.
    #[arg(long, conflicts_with = "check")]
    list: bool,

    /// Compare the hashes in the reference file with the current cases.
    #[arg(long)]
    check: bool,
}

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed arguments.
    Usage(String),
    /// Unreadable or invalid input files.
    Input(Error),
    /// The computation itself failed.
    Numerical(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m.trim_end()),
            CliError::Input(e) => write!(f, "error: {e}"),
            CliError::Numerical(e) => write!(f, "numerical error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        use cpq_core::Error as C;
        match e {
            Error::Core(C::ControlPointCount(_))
            | Error::Core(C::QuadratureOrder { .. })
            | Error::Core(C::UnsupportedDegree(_))
            | Error::Core(C::InvalidParameter(_)) => CliError::Usage(format!("error: {e}")),
            Error::Core(_) | Error::ToleranceNotReached { .. } => CliError::Numerical(e),
            _ => CliError::Input(e),
        }
    }
}

impl From<cpq_core::Error> for CliError {
    fn from(e: cpq_core::Error) -> Self {
        Error::Core(e).into()
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(Error::io("<output>", e))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(format!("error: {}", msg.into()))
}

/// Parses `args` (program name first) and runs the command, writing results
/// to `out`. Help and version requests succeed.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                write!(out, "{}", e.render())?;
                return Ok(());
            }
            _ => return Err(CliError::Usage(e.render().to_string())),
        },
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| usage(e.to_string()))?;
    let mut buf: Vec<u8> = Vec::new();
    let result = pool.install(|| {
        let w: &mut dyn Write = &mut buf;
        match cli.command {
            Command::Integrate(a) => integrate(a, w),
            Command::Converge(a) => converge(a, w),
            Command::Pair(a) => pair(a, w),
            Command::SolidAngle(a) => solid_angle(a, w),
            Command::Oracle(a) => oracle(a, w),
        }
    });
    out.write_all(&buf)?;
    result
}

fn parse_floats(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| usage(format!("{what}: expected comma-separated numbers, got `{text}`")))
}

fn parse_vec3(text: &str, what: &str) -> CliResult<Vec3> {
    match parse_floats(text, what)?.as_slice() {
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        _ => Err(usage(format!("{what}: expected three numbers, got `{text}`"))),
    }
}

fn parse_points(text: &str, what: &str) -> CliResult<Vec<Vec3>> {
    let raw: Vec<[f64; 3]> = serde_json::from_str(text)
        .map_err(|e| usage(format!("{what}: expected a JSON list of [x, y, z] ({e})")))?;
    Ok(raw.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect())
}

fn points_json(points: &[Vec3]) -> Value {
    Value::from(points.iter().map(|p| vec![p[0], p[1], p[2]]).collect::<Vec<_>>())
}

fn vec3_json(p: &Vec3) -> Value {
    json!([p[0], p[1], p[2]])
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

impl TriangleArgs {
    fn get(&self) -> CliResult<CurvedTriangle> {
        match (&self.triangle, &self.paper_triangle) {
            (Some(t), _) => Ok(CurvedTriangle::from_points(&parse_points(t, "--triangle")?)?),
            (None, Some(p)) => match parse_floats(p, "--paper-triangle")?.as_slice() {
                [a, b, c] => Ok(CurvedTriangle::paper_triangle(*a, *b, *c)?),
                _ => Err(usage(format!("--paper-triangle: expected a,b,c, got `{p}`"))),
            },
            (None, None) => Err(usage("a triangle is required (--triangle or --paper-triangle)")),
        }
    }
}

fn parse_density(text: &str) -> CliResult<DensityPolynomial> {
    let values: Vec<f64> = match text.trim().parse::<f64>() {
        Ok(c) => vec![c],
        Err(_) => serde_json::from_str(text)
            .map_err(|_| usage(format!("--density: expected a number or a JSON list, got `{text}`")))?,
    };
    Ok(DensityPolynomial::from_coefficients(&values)?)
}

fn parse_x0(text: &str, tri: &CurvedTriangle) -> CliResult<Vec3> {
    let Some(rest) = text.strip_prefix("F:") else {
        return parse_vec3(text, "--x0");
    };
    let (uv, offset) = match rest.split_once(':') {
        Some((uv, off)) => (uv, parse_vec3(off, "--x0 offset")?),
        None => (rest, Vec3::zeros()),
    };
    match parse_floats(uv, "--x0")?.as_slice() {
        [u, v] => Ok(tri.map_point(&Point2::new(*u, *v)) + offset),
        _ => Err(usage(format!("--x0: expected F:u,v, got `{text}`"))),
    }
}

fn parse_n_list(text: &str) -> CliResult<Vec<usize>> {
    let bad = || usage(format!("--n-list: expected integers or ranges a..b, got `{text}`"));
    let mut out = Vec::new();
    for tok in text.split(',') {
        let tok = tok.trim();
        if let Some((a, b)) = tok.split_once("..") {
            let a: usize = a.parse().map_err(|_| bad())?;
            let b: usize = b.parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(tok.parse().map_err(|_| bad())?);
        }
    }
    Ok(out)
}

fn classification_name(c: Classification) -> String {
    match c {
        Classification::Interior => "interior".into(),
        Classification::Edge(i) => format!("edge:{i}"),
        Classification::Vertex(i) => format!("vertex:{i}"),
        Classification::Exterior => "exterior".into(),
    }
}

fn result_json(r: &IntegralResult) -> Value {
    let frame = r.frame.as_ref().map(|f| {
        json!({
            "xhat0": [f.xhat0[0], f.xhat0[1]],
            "h": f.h,
            "classification": classification_name(f.classification),
            "rho": f.rho,
        })
    });
    json!({
        "value": complex_json(r.value),
        "n": r.n,
        "points": r.points,
        "regularization": r.regularization.name(),
        "frame": frame,
        "warnings": r.warnings,
    })
}

fn print_json(out: &mut dyn Write, mut v: Value, config: Value) -> CliResult<()> {
    v["config"] = config;
    serde_json::to_writer_pretty(&mut *out, &v).map_err(Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn integrate(a: IntegrateArgs, out: &mut dyn Write) -> CliResult<()> {
    let tri = a.tri.get()?;
    let density = parse_density(&a.density)?;
    let x0 = parse_x0(&a.x0, &tri)?;
    let r = integrate_double_layer(&tri, &density, &x0, a.n, a.reg.level())?;
    let config = json!({
        "command": "integrate",
        "triangle": points_json(tri.control_points()),
        "density": a.density,
        "x0": vec3_json(&x0),
        "n": a.n,
        "reg": a.reg.name(),
    });
    print_json(out, result_json(&r), config)
}

struct Scenario {
    tri_x: CurvedTriangle,
    tri_y: CurvedTriangle,
}

fn parse_scenario(text: &str, tri: &TriangleArgs) -> CliResult<Scenario> {
    if text == "identical" {
        let t = tri.get()?;
        return Ok(Scenario { tri_x: t.clone(), tri_y: t });
    }
    if let Some(shift) = text.strip_prefix("shifted:") {
        let t = tri.get()?;
        let s = parse_vec3(shift, "--scenario shifted")?;
        return Ok(Scenario {
            tri_y: t.translated(&s),
            tri_x: t,
        });
    }
    if let Some(rest) = text.strip_prefix("mesh:") {
        let parts: Vec<&str> = rest.rsplitn(3, ':').collect();
        let [b, a, path] = parts.as_slice() else {
            return Err(usage(format!("--scenario: expected mesh:PATH:TAG_A:TAG_B, got `{text}`")));
        };
        let mesh = read_msh(path)?;
        let index = |tag: &str| -> CliResult<usize> {
            let t: u64 = tag
                .parse()
                .map_err(|_| usage(format!("--scenario: bad element tag `{tag}`")))?;
            mesh.element_index(t)
                .ok_or_else(|| usage(format!("--scenario: no triangle with tag {t} in {path}")))
        };
        return Ok(Scenario {
            tri_x: mesh.triangle(index(a)?)?,
            tri_y: mesh.triangle(index(b)?)?,
        });
    }
    Err(usage(format!(
        "--scenario: expected identical, shifted:dx,dy,dz or mesh:PATH:TAG_A:TAG_B, got `{text}`"
    )))
}

fn parse_kernel(text: &str) -> CliResult<PairKernel> {
    if text == "double-layer" {
        return Ok(PairKernel::DoubleLayer);
    }
    text.strip_prefix("helmholtz:")
        .and_then(|k| k.parse::<f64>().ok())
        .map(|k| PairKernel::Helmholtz { k })
        .ok_or_else(|| usage(format!("--kernel: expected double-layer or helmholtz:K, got `{text}`")))
}

fn load_case(id: &str) -> CliResult<ReferenceValue> {
    let path = reference::reference_path();
    let values = reference::load(&path)?;
    Ok(reference::find(&values, id)?.clone())
}

fn pair(a: PairArgs, out: &mut dyn Write) -> CliResult<()> {
    let sc = parse_scenario(&a.scenario, &a.tri)?;
    let kernel = parse_kernel(&a.kernel)?;
    let reference = a.case.as_deref().map(load_case).transpose()?;
    let one = DensityPolynomial::one();
    let pi = PairIntegrator::new(a.n)?;
    let r = integrate_pair_par(&pi, &sc.tri_x, &sc.tri_y, &one, &one, a.reg.level(), kernel)?;
    let mut v = result_json(&r);
    if let Some(rv) = reference {
        let z = Complex64::new(rv.value.0, rv.value.1);
        v["reference"] = json!({
            "case_id": rv.case_id,
            "value": complex_json(z),
            "abs_error": (r.value - z).norm(),
        });
    }
    let config = json!({
        "command": "pair",
        "scenario": a.scenario,
        "triangle_x": points_json(sc.tri_x.control_points()),
        "triangle_y": points_json(sc.tri_y.control_points()),
        "kernel": a.kernel,
        "n": a.n,
        "reg": a.reg.name(),
    });
    print_json(out, v, config)
}

fn solid_angle(a: SolidAngleArgs, out: &mut dyn Write) -> CliResult<()> {
    let pts = parse_points(&a.vertices, "--vertices")?;
    let [p1, p2, p3] = pts.as_slice() else {
        return Err(usage(format!("--vertices: expected three points, got {}", pts.len())));
    };
    let x0 = parse_vec3(&a.x0, "--x0")?;
    let closed = solid_angle_planar(p1, p2, p3, &x0)?;
    let tri = CurvedTriangle::linear([*p1, *p2, *p3])?;
    let r = integrate_double_layer(&tri, &DensityPolynomial::one(), &x0, a.n, Some(RegularizationLevel::T2T1))?;
    let numerical = -r.re();
    let v = json!({
        "closed_form": closed,
        "numerical": numerical,
        "abs_diff": (closed - numerical).abs(),
        "warnings": r.warnings,
    });
    let config = json!({
        "command": "solid-angle",
        "vertices": points_json(&pts),
        "x0": vec3_json(&x0),
        "n": a.n,
    });
    print_json(out, v, config)
}

/// 17 significant digits.
fn full(v: f64) -> String {
    format!("{v:.16e}")
}

enum Problem {
    Single {
        tri: CurvedTriangle,
        density: DensityPolynomial,
        x0: Vec3,
    },
    Pair(Scenario),
}

fn converge(a: ConvergeArgs, out: &mut dyn Write) -> CliResult<()> {
    let n_list = parse_n_list(&a.n_list)?;
    if let Some(&n) = n_list.iter().find(|&&n| n < 2) {
        return Err(usage(format!("--n-list: orders must be at least 2, got {n}")));
    }
    let mut levels: Vec<RegularizationLevel> = Vec::new();
    for r in &a.levels {
        match r.level() {
            Some(l) if !levels.contains(&l) => levels.push(l),
            Some(_) => {}
            None => return Err(usage("--levels: auto is not a sweep level")),
        }
    }
    let problem = match (&a.x0, &a.scenario) {
        (Some(x0), None) => {
            let tri = a.tri.get()?;
            let x0 = parse_x0(x0, &tri)?;
            Problem::Single {
                tri,
                density: parse_density(&a.density)?,
                x0,
            }
        }
        (None, Some(s)) => Problem::Pair(parse_scenario(s, &a.tri)?),
        _ => return Err(usage("converge needs exactly one of --x0 and --scenario")),
    };

    let (reference, source) = if let Some(text) = &a.reference {
        match parse_floats(text, "--reference")?.as_slice() {
            [re] => (Complex64::new(*re, 0.0), "command line".to_string()),
            [re, im] => (Complex64::new(*re, *im), "command line".to_string()),
            _ => return Err(usage(format!("--reference: expected re or re,im, got `{text}`"))),
        }
    } else if let Some(id) = &a.case {
        let rv = load_case(id)?;
        (
            Complex64::new(rv.value.0, rv.value.1),
            format!("case {} ({}), est_error {:e}", rv.case_id, rv.config_hash, rv.est_error),
        )
    } else {
        let opts = OracleOptions::default();
        let est = match &problem {
            Problem::Single { tri, density, x0 } => {
                reference_single_with(tri, density, x0, a.oracle_tol.unwrap_or(1e-12), Strategy::Graded, &opts)?
            }
            Problem::Pair(sc) => reference_pair_with(
                &sc.tri_x,
                &sc.tri_y,
                a.oracle_tol.unwrap_or(1e-9),
                OuterStrategy::TanhSinh,
                &opts,
            )?,
        };
        (
            Complex64::new(est.value, 0.0),
            format!("oracle {}, est_error {:e}", est.method, est.est_error),
        )
    };

    let work: Vec<(RegularizationLevel, usize)> = levels
        .iter()
        .flat_map(|&l| n_list.iter().map(move |&n| (l, n)))
        .collect();
    let values: Vec<(Complex64, usize)> = match &problem {
        Problem::Single { tri, density, x0 } => work
            .par_iter()
            .map(|&(l, n)| integrate_double_layer(tri, density, x0, n, Some(l)).map(|r| (r.value, r.points)))
            .collect::<std::result::Result<_, _>>()?,
        Problem::Pair(sc) => {
            let one = DensityPolynomial::one();
            work.iter()
                .map(|&(l, n)| {
                    let pi = PairIntegrator::new(n)?;
                    let r = integrate_pair_par(&pi, &sc.tri_x, &sc.tri_y, &one, &one, Some(l), PairKernel::DoubleLayer)?;
                    Ok((r.value, r.points))
                })
                .collect::<CliResult<_>>()?
        }
    };
    let mut next = values.into_iter();
    let report = convergence_sweep(Some(reference), &n_list, &levels, |_, _| {
        Ok(next.next().expect("one value per work item"))
    })?;

    let mut buf: Vec<u8> = Vec::new();
    writeln!(buf, "# cpq converge {}", env!("CARGO_PKG_VERSION"))?;
    match &problem {
        Problem::Single { tri, x0, .. } => {
            writeln!(buf, "# triangle={}", points_json(tri.control_points()))?;
            writeln!(buf, "# density={}", a.density)?;
            writeln!(buf, "# x0={} -> {}", a.x0.as_deref().unwrap_or(""), vec3_json(x0))?;
        }
        Problem::Pair(sc) => {
            writeln!(buf, "# scenario={}", a.scenario.as_deref().unwrap_or(""))?;
            writeln!(buf, "# triangle_x={}", points_json(sc.tri_x.control_points()))?;
            writeln!(buf, "# triangle_y={}", points_json(sc.tri_y.control_points()))?;
        }
    }
    writeln!(buf, "# n_list={}", a.n_list)?;
    writeln!(buf, "# reference={},{} from {}", full(reference.re), full(reference.im), source)?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["n", "N", "level", "abs_error", "value"])
            .map_err(|e| usage(e.to_string()))?;
        for r in &report.rows {
            w.write_record([
                r.n.to_string(),
                r.points.to_string(),
                r.level.name().to_string(),
                full(r.abs_error),
                full(r.value.re),
            ])
            .map_err(|e| usage(e.to_string()))?;
        }
        w.flush()?;
    }
    for (l, s) in &report.slopes {
        eprintln!("slope {}: {:.3}", l.name(), s);
    }
    match &a.out {
        Some(p) => fs::write(p, &buf).map_err(|e| CliError::Input(Error::io(p, e)))?,
        None => out.write_all(&buf)?,
    }
    Ok(())
}

fn oracle(a: OracleArgs, out: &mut dyn Write) -> CliResult<()> {
    let mesh = read_msh(a.mesh.unwrap_or_else(reference::sphere_mesh_path))?;
    let cases = reference::standard_cases(&mesh)?;
    for id in &a.case {
        if !cases.iter().any(|c| &c.id == id) {
            return Err(CliError::Input(Error::UnknownCase(id.clone())));
        }
    }
    let selected: Vec<&Case> = cases
        .iter()
        .filter(|c| a.case.is_empty() || a.case.contains(&c.id))
        .collect();
    if a.list {
        for c in selected {
            writeln!(out, "{} {}", c.id, c.config_hash())?;
        }
        return Ok(());
    }
    let path = a.out.unwrap_or_else(reference::reference_path);
    if a.check {
        let stored = reference::load(&path)?;
        let mut stale = Vec::new();
        for c in selected {
            let ok = reference::find(&stored, &c.id).is_ok_and(|v| v.config_hash == c.config_hash());
            writeln!(out, "{} {}", c.id, if ok { "ok" } else { "stale" })?;
            if !ok {
                stale.push(c.id.clone());
            }
        }
        if !stale.is_empty() {
            return Err(CliError::Input(Error::UnknownCase(stale.join(", "))));
        }
        return Ok(());
    }
    let mut stored = if path.exists() { reference::load(&path)? } else { Vec::new() };
    for c in selected {
        let t = Instant::now();
        let v = c.compute()?;
        writeln!(
            out,
            "{} {} est_error={:.1e} {:.1}s",
            v.case_id,
            full(v.value.0),
            v.est_error,
            t.elapsed().as_secs_f64()
        )?;
        match stored.iter_mut().find(|s| s.case_id == v.case_id) {
            Some(s) => *s = v,
            None => stored.push(v),
        }
    }
    let order = |id: &str| cases.iter().position(|c| c.id == id).unwrap_or(usize::MAX);
    stored.sort_by_key(|v| order(&v.case_id));
    save_to(&path, &stored)
}

fn save_to(path: &Path, values: &[ReferenceValue]) -> CliResult<()> {
    reference::save(path, values)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_list_forms() {
        assert_eq!(parse_n_list("2..4,8").unwrap(), vec![2, 3, 4, 8]);
        assert!(parse_n_list("4..2").is_err());
        assert!(parse_n_list("x").is_err());
    }

    #[test]
    fn x0_on_patch_with_offset() {
        let t = CurvedTriangle::paper_triangle(0.6, 0.7, 0.5).unwrap();
        let p = parse_x0("F:0.2,0.4:0,0,-1e-4", &t).unwrap();
        let q = t.map_point(&Point2::new(0.2, 0.4));
        assert_eq!(p, q - Vec3::new(0.0, 0.0, 1e-4));
        assert!(parse_x0("F:0.2", &t).is_err());
        assert_eq!(parse_x0("1,2,3", &t).unwrap(), Vec3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn density_forms() {
        assert_eq!(parse_density("2").unwrap(), DensityPolynomial::Constant(2.0));
        assert_eq!(parse_density("[1,0,0]").unwrap(), DensityPolynomial::Linear([1.0, 0.0, 0.0]));
        assert_eq!(parse_density("[1,0]").unwrap_err().exit_code(), 1);
    }

    #[test]
    fn kernel_forms() {
        assert_eq!(parse_kernel("helmholtz:2.5").unwrap(), PairKernel::Helmholtz { k: 2.5 });
        assert!(parse_kernel("helmholtz").is_err());
    }

    #[test]
    fn help_is_not_an_error() {
        let mut out = Vec::new();
        run(["cpq", "--help"], &mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().contains("converge"));
    }
}
