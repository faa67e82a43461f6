//! Command-line front end for mating-lab.

pub mod suite;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mating_lab::geom::Complex;
use mating_lab::group::NecklaceGroup;
use mating_lab::moduli::{droplet_quad, group_quad, modulus, Convention, Quadrilateral};
use mating_lab::packing::{contact_complex, pack_with_history, packing_to_necklace, ContactComplex};
use mating_lab::rays::render::{render, ColorMode, RenderScene, SceneTarget};
use mating_lab::rays::{landing, trace_ray, AntiPoly, RayParams, Target};
use mating_lab::sigma::SigmaMap;
use mating_lab::symbolic::{
    compare_laminations, lamination_antipoly, lamination_group, lamination_sigma, CompareMode, RationalAngle,
};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "mating-lab", version, about = "Schwarz reflections, necklace groups and anti-polynomials")]
pub struct Cli {
    /// Directory for images and reports.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads (falls back to MATING_LAB_THREADS, then all cores).
    #[arg(long, global = true, env = "MATING_LAB_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Render a Schwarz tiling, group limit set or anti-polynomial Julia set.
    Render(RenderArgs),
    /// Trace an external ray and report its landing point.
    Ray(RayArgs),
    /// Compute a truncated lamination.
    Laminate(LaminateArgs),
    /// Check the circle conjugacy E_d on random samples.
    Conjugacy(ConjugacyArgs),
    /// Pack a contact complex (or the one read off a Schwarz reflection).
    Pack(PackArgs),
    /// Conformal modulus of a quadrilateral.
    Moduli(ModuliArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct TargetArgs {
    /// SigmaMap JSON {"d", "a"}.
    #[arg(long)]
    pub sigma: Option<PathBuf>,
    /// Necklace group JSON {"circles"}.
    #[arg(long)]
    pub group: Option<PathBuf>,
    /// Anti-polynomial JSON.
    #[arg(long)]
    pub antipoly: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, default_value_t = 1024)]
    pub res: usize,
    /// Viewport center "re,im".
    #[arg(long, default_value = "0,0", value_parser = parse_complex)]
    pub center: Complex,
    /// Viewport width.
    #[arg(long, default_value_t = 4.0)]
    pub width: f64,
    #[arg(long, default_value_t = 512)]
    pub max_depth: usize,
    #[arg(long, value_enum, default_value_t = Coloring::Classes)]
    pub color: Coloring,
    /// Base name of the PPM and JSON outputs.
    #[arg(long, default_value = "render")]
    pub name: String,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum Coloring {
    Classes,
    Depth,
}

#[derive(Args, Debug)]
pub struct RayArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// Angle as "num/den".
    #[arg(long)]
    pub angle: RationalAngle,
    #[arg(long, default_value_t = 8.0)]
    pub start_potential: f64,
    #[arg(long, default_value_t = 1e-200)]
    pub floor_potential: f64,
    #[arg(long, default_value_t = 8)]
    pub steps_per_halving: usize,
    #[arg(long, default_value = "ray")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct LaminateArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    /// Rotation applied to an anti-polynomial lamination, "num/den".
    #[arg(long, default_value = "0/1")]
    pub rotation: RationalAngle,
    /// Second lamination JSON to compare against.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Identity)]
    pub mode: Mode,
    /// Tolerance of the via-E comparison.
    #[arg(long, default_value_t = 1e-5, value_parser = positive)]
    pub tol: f64,
    #[arg(long, default_value = "lamination")]
    pub name: String,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum Mode {
    Identity,
    ViaE,
    UpToRotation,
}

#[derive(Args, Debug)]
pub struct ConjugacyArgs {
    #[arg(long, num_args = 1.., default_values_t = vec![3usize, 4, 5])]
    pub d: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-7, value_parser = positive)]
    pub tol: f64,
    #[arg(long, default_value = "conjugacy")]
    pub name: String,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false, id = "source")]
pub struct PackSource {
    /// Contact complex JSON {"n", "chords"}.
    #[arg(long)]
    pub complex: Option<PathBuf>,
    /// SigmaMap JSON whose contact complex is packed.
    #[arg(long)]
    pub sigma: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PackArgs {
    #[command(flatten)]
    pub source: PackSource,
    #[arg(long, default_value = "packing")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct ModuliArgs {
    /// Quadrilateral JSON {"boundary", "marks"}.
    #[arg(long, conflicts_with_all = ["sigma", "group"])]
    pub quad: Option<PathBuf>,
    #[arg(long, conflicts_with = "group")]
    pub sigma: Option<PathBuf>,
    #[arg(long)]
    pub group: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub j: usize,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0 / 256.0, value_parser = positive)]
    pub h: f64,
    #[arg(long, default_value_t = 400)]
    pub samples: usize,
    /// Report the extremal distance between the b-sides instead.
    #[arg(long)]
    pub reciprocal: bool,
    #[arg(long, default_value = "moduli")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value = "paper-d3")]
    pub suite: String,
    /// Subset of criteria to run (default: all).
    #[arg(long, value_delimiter = ',')]
    pub criteria: Vec<u32>,
    #[arg(long, default_value = "verify")]
    pub name: String,
}

fn parse_complex(s: &str) -> Result<Complex, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected \"re,im\", got {s:?}"))?;
    let re: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let im: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok(Complex::new(re, im))
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not a positive number"))
    }
}

/// Output of one command.
#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub checks: Vec<suite::Check>,
    pub passed: bool,
    pub error: Option<String>,
    pub timings_ms: Value,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn read_json<T: DeserializeOwned>(p: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(p).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure(format!("{}: {e}", p.display())))
}

enum Loaded {
    Sigma(SigmaMap),
    Group(NecklaceGroup),
    Poly(AntiPoly),
}

fn load(t: &TargetArgs) -> Result<Loaded, Failure> {
    if let Some(p) = &t.sigma {
        Ok(Loaded::Sigma(read_json(p)?))
    } else if let Some(p) = &t.group {
        Ok(Loaded::Group(read_json(p)?))
    } else if let Some(p) = &t.antipoly {
        Ok(Loaded::Poly(read_json(p)?))
    } else {
        Err(Failure("no target given".into()))
    }
}

/// Parses `argv`, runs the command and returns the process exit code:
/// 0 when every check passes, 1 on computational failure or a failed
/// check, 2 on usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        // The global pool can only be built once per process; later calls keep the first size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    if let Err(e) = std::fs::create_dir_all(&cli.out_dir) {
        eprintln!("cannot create {}: {e}", cli.out_dir.display());
        return 1;
    }
    let start = Instant::now();
    let (name, command) = match &cli.command {
        Command::Render(a) => (a.name.clone(), "render"),
        Command::Ray(a) => (a.name.clone(), "ray"),
        Command::Laminate(a) => (a.name.clone(), "laminate"),
        Command::Conjugacy(a) => (a.name.clone(), "conjugacy"),
        Command::Pack(a) => (a.name.clone(), "pack"),
        Command::Moduli(a) => (a.name.clone(), "moduli"),
        Command::Verify(a) => (a.name.clone(), "verify"),
    };
    let mut report = Report {
        tool: "mating-lab",
        version: VERSION,
        command: command.into(),
        inputs: Value::Null,
        results: Value::Null,
        checks: Vec::new(),
        passed: false,
        error: None,
        timings_ms: Value::Null,
    };
    let outcome = match &cli.command {
        Command::Render(a) => cmd_render(a, &cli.out_dir, &mut report),
        Command::Ray(a) => cmd_ray(a, &mut report),
        Command::Laminate(a) => cmd_laminate(a, &mut report),
        Command::Conjugacy(a) => cmd_conjugacy(a, &mut report),
        Command::Pack(a) => cmd_pack(a, &mut report),
        Command::Moduli(a) => cmd_moduli(a, &mut report),
        Command::Verify(a) => cmd_verify(a, &mut report),
    };
    if let Err(Failure(msg)) = outcome {
        if msg.starts_with("usage: ") {
            eprintln!("{msg}");
            return 2;
        }
        report.error = Some(msg);
    }
    report.passed = report.error.is_none() && report.checks.iter().all(|c| c.passed);
    if report.timings_ms.is_null() {
        report.timings_ms = json!({ "total": start.elapsed().as_millis() });
    }
    let path = cli.out_dir.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Err(e) = std::fs::write(&path, text + "\n") {
        eprintln!("cannot write {}: {e}", path.display());
        return 1;
    }
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    println!("{}", path.display());
    if report.passed { 0 } else { 1 }
}

fn cmd_render(a: &RenderArgs, out: &Path, report: &mut Report) -> Result<(), Failure> {
    let target = match load(&a.target)? {
        Loaded::Sigma(f) => SceneTarget::SchwarzMap(f),
        Loaded::Group(g) => SceneTarget::Group(g),
        Loaded::Poly(p) => SceneTarget::AntiPolynomial(p),
    };
    let mut scene = RenderScene::new(target, a.center, a.width, a.res);
    scene.max_depth = a.max_depth;
    scene.coloring = match a.color {
        Coloring::Classes => ColorMode::Classes,
        Coloring::Depth => ColorMode::Depth,
    };
    report.inputs = json!({
        "target": a.target_json(), "res": a.res, "center": [a.center.re, a.center.im],
        "width": a.width, "max_depth": a.max_depth, "color": format!("{:?}", a.color).to_lowercase(),
    });
    let img = render(&scene)?;
    let path = out.join(format!("{}.ppm", a.name));
    let file = std::fs::File::create(&path)?;
    img.write_ppm(std::io::BufWriter::new(file))?;
    report.results = json!({ "image": path.display().to_string(), "histogram": img.histogram() });
    Ok(())
}

impl RenderArgs {
    fn target_json(&self) -> Value {
        target_json(&self.target)
    }
}

fn target_json(t: &TargetArgs) -> Value {
    let p = |o: &Option<PathBuf>| o.as_ref().map(|p| p.display().to_string());
    json!({ "sigma": p(&t.sigma), "group": p(&t.group), "antipoly": p(&t.antipoly) })
}

fn cmd_ray(a: &RayArgs, report: &mut Report) -> Result<(), Failure> {
    let target = match load(&a.target)? {
        Loaded::Sigma(f) => Target::Sigma(f),
        Loaded::Poly(p) => Target::Poly(p),
        Loaded::Group(_) => return Err(Failure("usage: rays are traced for --sigma or --antipoly".into())),
    };
    let params = RayParams {
        start_potential: a.start_potential,
        floor_potential: a.floor_potential,
        steps_per_halving: a.steps_per_halving,
    };
    report.inputs = json!({
        "target": target_json(&a.target), "angle": a.angle, "start_potential": a.start_potential,
        "floor_potential": a.floor_potential, "steps_per_halving": a.steps_per_halving,
    });
    let mut ray = trace_ray(&target, a.angle, &params)?;
    let land = landing(&ray)?;
    ray.landing = Some(land);
    report.results = serde_json::to_value(&ray)?;
    Ok(())
}

fn cmd_laminate(a: &LaminateArgs, report: &mut Report) -> Result<(), Failure> {
    let lam = match load(&a.target)? {
        Loaded::Sigma(f) => lamination_sigma(&f, a.depth)?,
        Loaded::Group(g) => lamination_group(&g, a.depth),
        Loaded::Poly(p) => lamination_antipoly(&p, a.depth, a.rotation)?,
    };
    report.inputs = json!({
        "target": target_json(&a.target), "depth": a.depth, "rotation": a.rotation,
        "compare": a.compare.as_ref().map(|p| p.display().to_string()),
        "mode": format!("{:?}", a.mode), "tol": a.tol,
    });
    report.checks.push(suite_check("planar", lam.is_planar(), lam.is_planar(), true));
    report.checks.push(suite_check("invariant", lam.is_invariant(), lam.is_invariant(), true));
    if let Some(p) = &a.compare {
        let other: mating_lab::symbolic::Lamination = read_json(p)?;
        let mode = match a.mode {
            Mode::Identity => CompareMode::Identity,
            Mode::UpToRotation => CompareMode::UpToRotation,
            Mode::ViaE => CompareMode::ViaE { d: lam.d as usize, tol: a.tol },
        };
        let r = compare_laminations(&lam, &other, mode);
        report.checks.push(suite_check(
            "laminations match",
            r.matched,
            json!({ "witness": r.witness, "rotation": r.rotation_used }),
            json!({ "mode": format!("{:?}", a.mode), "tol": a.tol }),
        ));
    }
    report.results = serde_json::to_value(&lam)?;
    Ok(())
}

fn suite_check(name: &str, passed: bool, measured: impl Serialize, tolerance: impl Serialize) -> suite::Check {
    suite::Check {
        name: name.into(),
        passed,
        measured: serde_json::to_value(measured).unwrap_or(Value::Null),
        tolerance: serde_json::to_value(tolerance).unwrap_or(Value::Null),
    }
}

fn cmd_conjugacy(a: &ConjugacyArgs, report: &mut Report) -> Result<(), Failure> {
    if a.d.iter().any(|&d| !(2..=16).contains(&d)) {
        return Err(Failure("usage: --d must lie in 2..=16".into()));
    }
    report.inputs = json!({ "d": a.d, "samples": a.samples, "tol": a.tol });
    report.checks = suite::conjugacy_suite(&a.d, a.samples, a.tol).map_err(Failure)?;
    report.results = json!({ "checks": report.checks.len() });
    Ok(())
}

fn cmd_pack(a: &PackArgs, report: &mut Report) -> Result<(), Failure> {
    let k: ContactComplex = if let Some(p) = &a.source.complex {
        read_json(p)?
    } else if let Some(p) = &a.source.sigma {
        contact_complex(&read_json::<SigmaMap>(p)?)?
    } else {
        return Err(Failure("usage: --complex or --sigma is required".into()));
    };
    report.inputs = json!({ "complex": k });
    let (packed, history) = pack_with_history(&k)?;
    let group = packing_to_necklace(&packed)?;
    report.checks.push(suite_check(
        "tangency residual",
        packed.max_tangency_residual < 1e-8,
        packed.max_tangency_residual,
        json!({ "below": 1e-8 }),
    ));
    let extra = group.extra_tangencies();
    report.checks.push(suite_check("extra tangencies equal chords", extra.len() == k.chords().len(), &extra, k.chords()));
    report.results = json!({ "packing": packed, "group": group, "history": history });
    Ok(())
}

fn cmd_moduli(a: &ModuliArgs, report: &mut Report) -> Result<(), Failure> {
    let q: Quadrilateral = if let Some(p) = &a.quad {
        read_json(p)?
    } else if let Some(p) = &a.sigma {
        droplet_quad(&read_json::<SigmaMap>(p)?, a.j, a.k, a.samples)?
    } else if let Some(p) = &a.group {
        group_quad(&read_json::<NecklaceGroup>(p)?, a.j, a.k, a.samples)?
    } else {
        return Err(Failure("usage: one of --quad, --sigma, --group is required".into()));
    };
    let conv = if a.reciprocal { Convention::BetweenBSides } else { Convention::BetweenASides };
    report.inputs = json!({
        "quad": a.quad.as_ref().map(|p| p.display().to_string()),
        "sigma": a.sigma.as_ref().map(|p| p.display().to_string()),
        "group": a.group.as_ref().map(|p| p.display().to_string()),
        "j": a.j, "k": a.k, "h": a.h, "samples": a.samples, "convention": conv,
    });
    let m = modulus(&q, a.h, conv)?;
    report.results = serde_json::to_value(m)?;
    Ok(())
}

fn cmd_verify(a: &VerifyArgs, report: &mut Report) -> Result<(), Failure> {
    if !suite::SUITES.contains(&a.suite.as_str()) {
        return Err(Failure(format!("usage: unknown suite {:?} (known: {})", a.suite, suite::SUITES.join(", "))));
    }
    let ids: Vec<u32> = if a.criteria.is_empty() { (1..=10).collect() } else { a.criteria.clone() };
    if let Some(bad) = ids.iter().find(|&&i| !(1..=10).contains(&i)) {
        return Err(Failure(format!("usage: no criterion {bad}")));
    }
    report.inputs = json!({ "suite": a.suite, "criteria": ids });
    let mut results = Vec::new();
    let mut timings = serde_json::Map::new();
    for id in ids {
        let c = suite::run_criterion(id);
        eprintln!("{}", c.line());
        timings.insert(format!("criterion_{id}"), json!(c.elapsed_ms));
        for check in &c.checks {
            let mut ch = check.clone();
            ch.name = format!("{}: {}", c.id, ch.name);
            report.checks.push(ch);
        }
        if let Some(e) = &c.error {
            report.checks.push(suite_check(&format!("{}: completed", c.id), false, e, "no error"));
        }
        results.push(json!({ "id": c.id, "title": c.title, "passed": c.passed, "error": c.error }));
    }
    report.results = Value::Array(results);
    report.timings_ms = Value::Object(timings);
    Ok(())
}
