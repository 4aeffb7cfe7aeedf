//! Command-line front end: argument parsing, run configuration and dispatch.

pub mod checks;
pub mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::compact::{build_icosphere, embed, DEFAULT_LEVEL, MAX_LEVEL};
use crate::error::{Error, Result};
use crate::invariants::{FrameOptions, CERTIFICATE_TOL};
use crate::minkowski::{is_unit_past_timelike, Vec4};
use crate::surfaces::{catalog, definition, instantiate, parse_sigma, ChartPoint, Surface};

pub use report::{Check, Report, Summary, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

pub const DEFAULT_GRID: [usize; 2] = [30, 30];
pub const DEFAULT_SPHERE_SAMPLES: usize = 2000;
pub const DEFAULT_EIGS: usize = 6;

#[derive(Debug, Parser)]
#[command(name = "lightcone", version, about = "Verify curvature identities of surfaces in the future lightcone of L4")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the built-in surfaces.
    Catalog(OutputArgs),
    /// Tabulate pointwise invariants.
    Eval(RunArgs),
    /// Check the pointwise identities.
    Verify(RunArgs),
    /// Integral identities on a compact surface.
    Integrate(RunArgs),
    /// First Laplace eigenvalue and the eigenvalue/area bounds.
    Spectrum(RunArgs),
    /// All applicable checks.
    Report(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Catalog surface name.
    #[arg(long, conflicts_with = "definition")]
    surface: Option<String>,
    /// Surface definition file (JSON).
    #[arg(long)]
    definition: Option<PathBuf>,
    /// Conformal factor sigma as an expression.
    #[arg(long, allow_hyphen_values = true)]
    factor: Option<String>,
    /// Parameters `k=v`, repeatable or comma separated.
    #[arg(long = "params", value_delimiter = ',', allow_hyphen_values = true)]
    params: Vec<String>,
    /// Shorthand for `--params r=R` (round sphere radius)
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    /// Shorthand for `--params a=A` (table factor scale)
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Unit past-timelike vector `t,x,y,z`.
    #[arg(long, allow_hyphen_values = true)]
    u: Option<String>,
    /// Regular sample grid `WxH`.
    #[arg(long, conflicts_with = "random")]
    grid: Option<String>,
    /// Number of seeded random samples.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Icosphere subdivision level.
    #[arg(long, default_value_t = DEFAULT_LEVEL)]
    level: u32,
    /// Lightcone certificate tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Number of eigenvalues to resolve.
    #[arg(long, default_value_t = DEFAULT_EIGS)]
    k: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the embedded mesh as an OFF file.
    #[arg(long)]
    mesh_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Sample {
    Grid { w: usize, h: usize },
    Random { n: usize, seed: u64 },
}

/// Fully resolved configuration, echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub surface: Option<String>,
    pub definition: Option<String>,
    pub factor: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub u: Vec4,
    pub sample: Sample,
    pub level: u32,
    pub tol: f64,
    pub k: usize,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub mesh_out: Option<PathBuf>,
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

fn parse_u(text: &str) -> Result<Vec4> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(config_err("--u", format!("expected 4 comma-separated numbers, got `{text}`")));
    }
    let mut v = [0.0; 4];
    for (i, p) in parts.iter().enumerate() {
        v[i] = p.parse().map_err(|_| config_err("--u", format!("`{p}` is not a number")))?;
    }
    let u = Vec4(v);
    if !is_unit_past_timelike(&u, 1e-9) {
        return Err(config_err("--u", "must satisfy <u,u> = -1 and u0 < 0"));
    }
    Ok(u)
}

fn parse_grid(text: &str) -> Result<(usize, usize)> {
    let bad = || config_err("--grid", format!("expected WxH with W, H >= 3, got `{text}`"));
    let (w, h) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    if w < 3 || h < 3 {
        return Err(bad());
    }
    Ok((w, h))
}

impl RunConfig {
    fn from_args(a: RunArgs) -> Result<Self> {
        if a.surface.is_none() && a.definition.is_none() {
            return Err(config_err("--surface", "one of --surface or --definition is required"));
        }
        let mut params = BTreeMap::new();
        for kv in a.params.iter().filter(|s| !s.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| config_err("--params", format!("expected k=v, got `{kv}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| config_err(&format!("--params.{}", k.trim()), format!("`{v}` is not a number")))?;
            params.insert(k.trim().to_string(), v);
        }
        if let Some(r) = a.r {
            params.insert("r".into(), r);
        }
        if let Some(av) = a.a {
            params.insert("a".into(), av);
        }
        let u = match &a.u {
            Some(t) => parse_u(t)?,
            None => Vec4::new(-1.0, 0.0, 0.0, 0.0),
        };
        let sample = match (&a.grid, a.random) {
            (Some(g), _) => {
                let (w, h) = parse_grid(g)?;
                Sample::Grid { w, h }
            }
            (None, Some(0)) => return Err(config_err("--random", "must be positive")),
            (None, Some(n)) => Sample::Random { n, seed: a.seed },
            (None, None) => Sample::Grid { w: 0, h: 0 },
        };
        if a.level > MAX_LEVEL {
            return Err(config_err("--level", format!("{} is out of range 0..={MAX_LEVEL}", a.level)));
        }
        let tol = a.tol.unwrap_or(CERTIFICATE_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(config_err("--tol", "must be positive and finite"));
        }
        if a.k < 2 {
            return Err(config_err("--k", "must be at least 2"));
        }
        Ok(RunConfig {
            surface: a.surface,
            definition: a.definition.map(|p| p.display().to_string()),
            factor: a.factor,
            params,
            u,
            sample,
            level: a.level,
            tol,
            k: a.k,
            format: a.format,
            out: a.out,
            mesh_out: a.mesh_out,
        })
    }

    /// Builds the surface and resolves the default sample for its domain.
    pub fn surface(&mut self) -> Result<Surface> {
        let surface = match (&self.surface, &self.definition) {
            (Some(name), _) => {
                let sigma = self.factor.as_deref().map(parse_sigma).transpose().map_err(|e| config_err("--factor", e))?;
                let mut params = self.params.clone();
                if name == "round_sphere" {
                    for (i, key) in ["u0", "u1", "u2", "u3"].iter().enumerate() {
                        params.entry(key.to_string()).or_insert(self.u[i]);
                    }
                }
                instantiate(name, &params, sigma.as_ref()).map_err(|e| config_err("--surface", e))?
            }
            (None, Some(path)) => {
                if self.factor.is_some() {
                    return Err(config_err("--factor", "not allowed with --definition"));
                }
                definition::load(std::path::Path::new(path))?
            }
            (None, None) => unreachable!("checked in from_args"),
        };
        if self.sample == (Sample::Grid { w: 0, h: 0 }) {
            self.sample = if surface.domain.is_sphere() {
                Sample::Random { n: DEFAULT_SPHERE_SAMPLES, seed: 0 }
            } else {
                Sample::Grid { w: DEFAULT_GRID[0], h: DEFAULT_GRID[1] }
            };
        }
        Ok(surface)
    }

    pub fn points(&self, surface: &Surface) -> Vec<ChartPoint> {
        match self.sample {
            Sample::Grid { w, h } => surface.grid_points(w, h),
            Sample::Random { n, seed } => surface.random_points(n, seed),
        }
    }

    fn extrema_grid(&self, surface: &Surface) -> [usize; 2] {
        match self.sample {
            Sample::Grid { w, h } => [w, h],
            Sample::Random { .. } if surface.domain.is_sphere() => [36, 18],
            Sample::Random { .. } => DEFAULT_GRID,
        }
    }

    fn echo(&self, surface: &Surface) -> Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        v["resolved_params"] = json!(surface.params);
        v["claims_lightcone"] = json!(surface.flags.claims_lightcone);
        v["compact"] = json!(surface.flags.compact);
        if let Some(s) = surface.sigma_source() {
            v["sigma"] = json!(s);
        }
        v
    }
}

/// Runs one command on a resolved configuration.
pub fn execute(command: &str, cfg: &mut RunConfig) -> Result<Report> {
    let surface = cfg.surface()?;
    let mut report = Report::new(command, cfg.echo(&surface));
    report.config["surface"] = json!(surface.name);
    let points = if command == "integrate" || command == "spectrum" { Vec::new() } else { cfg.points(&surface) };

    match command {
        "eval" => {
            let (frames, eval) = checks::frames(&surface, &points, &FrameOptions::default());
            report.checks.push(eval);
            if cfg.format == Format::Csv {
                report.checks.extend(checks::eval_field_checks(&frames));
            }
            report.data = json!({ "points": checks::eval_rows(&frames) });
        }
        "verify" => {
            report.checks = checks::verify_checks(&surface, &points, cfg.tol, cfg.extrema_grid(&surface));
        }
        "integrate" | "spectrum" | "report" => {
            if command == "report" {
                report.checks = checks::verify_checks(&surface, &points, cfg.tol, cfg.extrema_grid(&surface))
                    .into_iter()
                    .map(|c| c.with_prefix("verify"))
                    .collect();
            }
            if surface.flags.compact {
                report.checks.extend(compact_checks(command, &surface, cfg)?);
            } else if command != "report" {
                return Err(config_err("--surface", Error::NotCompact(surface.name.clone())));
            }
        }
        other => return Err(Error::Config(format!("unknown command `{other}`"))),
    }
    report.points = points;
    Ok(report.finish())
}

fn compact_checks(command: &str, surface: &Surface, cfg: &RunConfig) -> Result<Vec<Check>> {
    let mesh = build_icosphere(cfg.level)?;
    let em = match embed(surface, &mesh, cfg.u) {
        Ok(em) => em,
        Err(e @ Error::BadParameter(_)) => return Err(config_err("--u", e)),
        Err(e) => {
            return Ok(vec![Check::new("embedding", "vertices evaluate, chords spacelike, triangles valid")
                .value("error", e.to_string())
                .verdict(Verdict::Fail)])
        }
    };
    if let Some(path) = &cfg.mesh_out {
        let mut f = std::fs::File::create(path).map_err(|e| config_err("--mesh-out", e))?;
        em.write_off(&mut f).map_err(|e| config_err("--mesh-out", e))?;
    }
    let want_spectrum = command != "integrate" || surface.expected.reilly_violation;
    let spectrum = if want_spectrum { Some(checks::solve(&em, cfg.k, cfg.tol_seed())) } else { None };
    let mut out = Vec::new();
    let spec_ok = spectrum.as_ref().and_then(|s| s.as_ref().ok());
    if command == "integrate" {
        out.push(checks::certificate_check(surface, &cfg.points(surface), cfg.tol));
    }
    if command != "spectrum" {
        let c = checks::integrate_checks(surface, &em, spec_ok);
        out.extend(c.into_iter().map(|c| if command == "report" { c.with_prefix("integrate") } else { c }));
    }
    if command != "integrate" {
        let mut c = match &spectrum {
            Some(Ok(spec)) => {
                let coarse = if cfg.level >= 1 {
                    let m = build_icosphere(cfg.level - 1)?;
                    embed(surface, &m, cfg.u).ok().and_then(|e| checks::solve(&e, cfg.k, cfg.tol_seed()).ok())
                } else {
                    None
                };
                checks::spectrum_checks(surface, &em, spec, coarse.as_ref())
            }
            Some(Err(c)) => vec![c.clone()],
            None => Vec::new(),
        };
        if command == "report" {
            c = c.into_iter().map(|c| c.with_prefix("spectrum")).collect();
        }
        out.extend(c);
    }
    Ok(out)
}

impl RunConfig {
    fn tol_seed(&self) -> u64 {
        crate::compact::SpectrumOptions::default().seed
    }
}

fn catalog_report() -> Report {
    let mut r = Report::new("catalog", Value::Null);
    r.data = json!({ "surfaces": catalog() });
    r.finish()
}

fn catalog_human() -> String {
    let mut out = String::new();
    for e in catalog() {
        let lc = if e.claims_lightcone { "lightcone" } else { "general" };
        let cp = if e.compact { "compact" } else { "plane" };
        out.push_str(&format!("{:<28} {:<9} {:<7} {}\n", e.name, lc, cp, e.summary));
    }
    out
}

fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
        Format::Human => report.to_human(),
    }
}

fn emit(text: &str, out: Option<&PathBuf>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| config_err("--out", e)),
        None => stdout.write_all(text.as_bytes()).map_err(|e| Error::Config(e.to_string())),
    }
}

/// Parses `args` (program name first), runs, writes output and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let (name, args) = match cli.command {
        Command::Catalog(o) => {
            let text = match o.format {
                Format::Human => catalog_human(),
                _ => catalog_report().to_json(),
            };
            return match emit(&text, o.out.as_ref(), stdout) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    EXIT_USAGE
                }
            };
        }
        Command::Eval(a) => ("eval", a),
        Command::Verify(a) => ("verify", a),
        Command::Integrate(a) => ("integrate", a),
        Command::Spectrum(a) => ("spectrum", a),
        Command::Report(a) => ("report", a),
    };
    let result = RunConfig::from_args(args).and_then(|mut cfg| {
        let report = execute(name, &mut cfg)?;
        emit(&render(&report, cfg.format), cfg.out.as_ref(), stdout)?;
        Ok(report)
    });
    match result {
        Ok(r) if r.passed() => EXIT_OK,
        Ok(_) => EXIT_FAIL,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("lightcone").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn parses_u_and_grid() {
        assert_eq!(parse_u("-1,0,0,0").unwrap(), Vec4::new(-1.0, 0.0, 0.0, 0.0));
        assert!(parse_u("1,0,0,0").is_err());
        assert!(parse_u("-1,0,0").is_err());
        assert_eq!(parse_grid("20x10").unwrap(), (20, 10));
        assert!(parse_grid("2x10").is_err());
        assert!(parse_grid("abc").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_args(&["verify"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["frobnicate"]).0, EXIT_USAGE);
        let (code, _, err) = run_args(&["verify", "--surface", "round_sphere", "--u", "1,0,0,0"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--u"), "{err}");
        let (code, _, err) = run_args(&["verify", "--surface", "nope"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("unknown surface"), "{err}");
        let (code, _, err) = run_args(&["integrate", "--surface", "example1_base"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("not compact"), "{err}");
    }

    #[test]
    fn verify_table_surface_passes() {
        let (code, out, _) = run_args(&["verify", "--surface", "example1_sech_x", "--a", "2", "--grid", "8x8"]);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(code, EXIT_OK, "{}", serde_json::to_string_pretty(&v["checks"]).unwrap());
        assert_eq!(v["config"]["resolved_params"]["a"], json!(2.0));
        assert_eq!(v["summary"]["fail"], json!(0));
    }

    #[test]
    fn eval_human_and_csv() {
        let (code, out, _) = run_args(&["eval", "--surface", "example1_exp_x", "--grid", "3x3", "--format", "csv"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.starts_with("check,point,chart,s,t,value,tolerance,verdict\n"));
        assert!(out.lines().any(|l| l.starts_with("field.K,4,plane,")));
        let (code, out, _) = run_args(&["catalog", "--format", "human"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("counterexample_cylinder"));
    }
}
