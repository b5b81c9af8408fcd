//! `heavenly` — command-line verification surface for heavenly-core.
//!
//! Three commands:
//!   verify      residual checks of a PDE system against a key function or
//!               of a whole registry entry
//!   invariants  Petrov invariants I, J, I³−6J² of a twisted metric
//!   report      the full registry expectation suite
//!
//! Exit codes: 0 = all checks pass, 1 = a verification failed,
//! 2 = configuration or parse error.  JSON output is deterministic for a
//! fixed seed and configuration; the text rendering is derived from it.

use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use heavenly_core::catalog::{build, default_box, ids, invariant_family, reduced_box_for};
use heavenly_core::curvature::{selfdual_weyl_at, CurvatureJet};
use heavenly_core::equations::{build_system, lambda_arity, system_chart, SYSTEM_IDS};
use heavenly_core::gindikin::{check_closed, check_simple, check_symmetry};
use heavenly_core::metrics::{twisted_cubic_ppwave_inverse, twisted_inverse_ii, MetricExpr};
use heavenly_core::report::{ResidualReport, DEFAULT_TOL, SCHEMA_VERSION};
use heavenly_core::sample::{SampleBox, DEFAULT_SEED};
use heavenly_core::symexpr::{parse, Bindings, Expr, Point};
use num::BigRational;
use num::One;

#[derive(Parser)]
#[command(name = "heavenly", version, about = "Verification toolkit for heavenly equations, Gindikin structures, and self-dual vacuum metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check PDE residuals for a system + key, or for a registry entry.
    Verify(VerifyArgs),
    /// Compute Petrov invariants of a twisted metric.
    Invariants(InvariantsArgs),
    /// Run the full registry expectation suite.
    Report(ReportArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Number of sample points.
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// RNG seed (fixed default for reproducible output).
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Normalized-residual tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Emit JSON instead of text.
    #[arg(long, conflicts_with = "text")]
    json: bool,
    /// Emit human-readable text (default).
    #[arg(long)]
    text: bool,
    /// Write the output to a file instead of stdout.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// PDE system id (heav4, hirota4, schief5, sep5, pleb1, ihirota4, ih5d,
    /// ihadd, pleb2, iihirota4, ppwave, iih5d).
    #[arg(long, conflicts_with = "example")]
    system: Option<String>,
    /// Registry entry id (see `report` for the list).
    #[arg(long)]
    example: Option<String>,
    /// Key function expression (required with --system).
    #[arg(long, visible_alias = "theta")]
    key: Option<String>,
    /// Comma-separated λ parameters, e.g. 0,1,2,3.
    #[arg(long)]
    lambdas: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct InvariantsArgs {
    /// Registry entry id: ppwave_cubic (reduced chart x,z,kappa,mu) or
    /// flat_ii (chart x,y,z,w).
    #[arg(long)]
    example: String,
    /// Twisting function φ(z).
    #[arg(long)]
    phi: String,
    /// Evaluate at one point, e.g. --at Z=1,kappa=1,mu=0.3,x=0
    /// (Z is an alias for z).
    #[arg(long)]
    at: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Run every registry entry (the default).
    #[arg(long)]
    all: bool,
    /// Restrict to one framework: general, i, or ii.
    #[arg(long)]
    framework: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

/// Configuration/parse failure: exit code 2.
struct ConfigError(String);

impl<E: std::fmt::Display> From<E> for ConfigError {
    fn from(e: E) -> Self {
        ConfigError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Verify(a) => run_verify(a).map(|(v, pass)| (v, pass, &a.common)),
        Command::Invariants(a) => run_invariants(a).map(|(v, pass)| (v, pass, &a.common)),
        Command::Report(a) => run_report(a).map(|(v, pass)| (v, pass, &a.common)),
    };
    match outcome {
        Ok((value, pass, common)) => {
            let rendered = if common.json {
                let mut s = serde_json::to_string_pretty(&value).expect("serializable value");
                s.push('\n');
                s
            } else {
                render_text(&value)
            };
            if let Some(path) = &common.out {
                if let Err(e) = std::fs::write(path, &rendered) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            } else {
                print!("{rendered}");
            }
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn parse_lambdas(src: &str) -> Result<Vec<BigRational>, ConfigError> {
    src.split(',')
        .map(|s| {
            let s = s.trim();
            if let Some((n, d)) = s.split_once('/') {
                Ok(BigRational::new(
                    n.trim().parse::<i64>()?.into(),
                    d.trim().parse::<i64>()?.into(),
                ))
            } else {
                Ok(BigRational::from_integer(s.parse::<i64>()?.into()))
            }
        })
        .collect()
}

fn run_verify(a: &VerifyArgs) -> Result<(Value, bool), ConfigError> {
    let reports: Vec<ResidualReport> = match (&a.system, &a.example) {
        (Some(system), None) => {
            if !SYSTEM_IDS.contains(&system.as_str()) {
                return Err(format!(
                    "unknown system `{system}` (known: {})",
                    SYSTEM_IDS.join(", ")
                )
                .into());
            }
            let key_src = a
                .key
                .as_ref()
                .ok_or_else(|| ConfigError("--system requires --key".into()))?;
            let key = parse(key_src)?;
            let lambdas = match &a.lambdas {
                Some(src) => parse_lambdas(src)?,
                None => heavenly_core::equations::default_lambdas(lambda_arity(system)?),
            };
            let chart = system_chart(system)?;
            let sample = default_box(&chart).sample(a.common.points, a.common.seed);
            let sys = build_system(system, &key, &lambdas)?;
            vec![sys.residual_report(&sample, &Bindings::new(), a.common.tol)?]
        }
        (None, Some(example)) => {
            let entry = build(&example.to_lowercase())?;
            entry.residual_reports(a.common.points, a.common.seed, a.common.tol)?
        }
        _ => return Err(ConfigError("provide exactly one of --system or --example".into())),
    };
    let pass = reports.iter().all(|r| r.pass);
    let value = json!({
        "schema": SCHEMA_VERSION,
        "command": "verify",
        "pass": pass,
        "reports": reports,
    });
    Ok((value, pass))
}

// ---------------------------------------------------------------------------
// invariants
// ---------------------------------------------------------------------------

fn parse_at(src: &str, chart: &[&str]) -> Result<Point, ConfigError> {
    let mut p = Point::new();
    for item in src.split(',') {
        let (name, val) = item
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("bad --at item `{item}` (want name=value)")))?;
        let name = name.trim();
        // ASCII alias: Z for the twist coordinate z
        let name = if name == "Z" { "z" } else { name };
        if !chart.contains(&name) {
            return Err(format!("coordinate `{name}` is not in chart {chart:?}").into());
        }
        p.set(name, val.trim().parse::<f64>()?);
    }
    for c in chart {
        if p.get(c).is_none() {
            return Err(format!("--at is missing coordinate `{c}`").into());
        }
    }
    Ok(p)
}

fn run_invariants(a: &InvariantsArgs) -> Result<(Value, bool), ConfigError> {
    let phi = parse(&a.phi)?;
    let example = a.example.to_lowercase();
    let (metric, sample_box): (MetricExpr, SampleBox) = match example.as_str() {
        "ppwave_cubic" => (twisted_cubic_ppwave_inverse(&phi), reduced_box_for(&phi)),
        "flat_ii" => (
            twisted_inverse_ii(&Expr::zero(), &phi),
            build("flat_ii")?.sample,
        ),
        other => {
            return Err(format!(
                "invariants supports examples `ppwave_cubic` and `flat_ii`, got `{other}`"
            )
            .into())
        }
    };
    let chart: Vec<&str> = metric.chart().coords().iter().map(String::as_str).collect();
    let sample = match &a.at {
        Some(src) => vec![parse_at(src, &chart)?],
        None => sample_box.sample(a.common.points.min(10), a.common.seed),
    };
    let family = invariant_family(a.phi.trim()).ok();
    let b = Bindings::new();
    let jet = CurvatureJet::new(&metric);
    let mut points = Vec::new();
    let mut max_riemann = 0.0f64;
    for p in &sample {
        let cp = jet.at(p, &b)?;
        max_riemann = max_riemann.max(cp.max_riemann());
        let wd = selfdual_weyl_at(&jet, p, &b, a.common.tol)?;
        let coords: Value = chart
            .iter()
            .map(|c| (c.to_string(), json!(p.get(c).unwrap())))
            .collect::<serde_json::Map<_, _>>()
            .into();
        let closed = match &family {
            Some(f) if example == "ppwave_cubic" => {
                let (ci, cj, cs) = f.closed_at(p)?;
                json!({ "i": ci, "j": cj, "s": cs })
            }
            _ => Value::Null,
        };
        points.push(json!({
            "at": coords,
            "i": wd.i,
            "j": wd.j,
            "s": wd.s,
            "special": wd.special,
            "closed_form": closed,
        }));
    }
    let flat = max_riemann <= a.common.tol;
    let value = json!({
        "schema": SCHEMA_VERSION,
        "command": "invariants",
        "example": example,
        "phi": a.phi,
        "flat": flat,
        "max_riemann": max_riemann,
        "points": points,
        "pass": true,
    });
    Ok((value, true))
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

fn run_report(a: &ReportArgs) -> Result<(Value, bool), ConfigError> {
    let framework = match a.framework.as_deref().map(str::to_lowercase) {
        None => None,
        Some(f) if ["general", "i", "ii"].contains(&f.as_str()) => Some(f),
        Some(f) => return Err(format!("unknown framework `{f}` (general, i, ii)").into()),
    };
    let b = Bindings::new();
    let mut results = Vec::new();
    let mut all_pass = true;
    for id in ids() {
        let entry = build(id)?;
        let fw = serde_json::to_value(entry.framework).expect("framework tag");
        if let Some(f) = &framework {
            if fw.as_str() != Some(f.as_str()) {
                continue;
            }
        }
        let mut checks = Vec::new();
        for r in entry.residual_reports(a.common.points, a.common.seed, a.common.tol)? {
            checks.push(json!({
                "name": format!("system:{}", r.system),
                "pass": r.pass,
                "max_residual": r.max_residual(),
            }));
        }
        let pencil = entry.gindikin()?;
        let sample = entry.sample.sample(a.common.points, a.common.seed);
        for (name, r) in [
            ("gindikin:closed", check_closed(&pencil, &sample, &b, a.common.tol)?),
            ("gindikin:simple", check_simple(&pencil, &sample, &b, a.common.tol)?),
        ] {
            checks.push(json!({
                "name": name,
                "pass": r.pass,
                "max_residual": r.max_residual(),
            }));
        }
        if let Some(k) = entry.symmetry() {
            let cert = check_symmetry(&pencil, &k, &BigRational::one(), &sample, &b, a.common.tol)?;
            checks.push(json!({
                "name": "gindikin:symmetry",
                "pass": cert.report.pass,
                "max_residual": cert.report.max_residual(),
            }));
        }
        let entry_pass = checks.iter().all(|c| c["pass"] == json!(true));
        all_pass &= entry_pass;
        results.push(json!({
            "id": id,
            "framework": fw,
            "pass": entry_pass,
            "checks": checks,
        }));
    }
    let value = json!({
        "schema": SCHEMA_VERSION,
        "command": "report",
        "tolerance": a.common.tol,
        "points": a.common.points,
        "seed": a.common.seed,
        "pass": all_pass,
        "results": results,
    });
    Ok((value, all_pass))
}

// ---------------------------------------------------------------------------
// text rendering (derived from the JSON value, never the reverse)
// ---------------------------------------------------------------------------

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn render_text(v: &Value) -> String {
    let mut out = String::new();
    match v["command"].as_str() {
        Some("verify") => {
            for r in v["reports"].as_array().into_iter().flatten() {
                let max = r["equations"]
                    .as_array()
                    .into_iter()
                    .flatten()
                    .filter_map(|e| e["max_residual"].as_f64())
                    .fold(0.0f64, f64::max);
                let _ = writeln!(
                    out,
                    "{}: {} (max residual {:.3e}, {} points)",
                    r["system"].as_str().unwrap_or("?"),
                    verdict(r["pass"] == json!(true)),
                    max,
                    r["sample_size"].as_u64().unwrap_or(0),
                );
            }
            let _ = writeln!(out, "verify: {}", verdict(v["pass"] == json!(true)));
        }
        Some("invariants") => {
            let _ = writeln!(
                out,
                "example {} with phi = {}",
                v["example"].as_str().unwrap_or("?"),
                v["phi"].as_str().unwrap_or("?"),
            );
            if v["flat"] == json!(true) {
                let _ = writeln!(
                    out,
                    "flat: Riemann vanishes (max {:.3e})",
                    v["max_riemann"].as_f64().unwrap_or(0.0)
                );
            }
            for p in v["points"].as_array().into_iter().flatten() {
                let coords = p["at"]
                    .as_object()
                    .map(|m| {
                        m.iter()
                            .map(|(k, x)| format!("{k}={:.4}", x.as_f64().unwrap_or(f64::NAN)))
                            .collect::<Vec<_>>()
                            .join(", ")
                    })
                    .unwrap_or_default();
                let _ = writeln!(
                    out,
                    "at ({coords}): I = {:.7}, J = {:.7}, I^3-6J^2 = {:.3e}{}",
                    p["i"].as_f64().unwrap_or(f64::NAN),
                    p["j"].as_f64().unwrap_or(f64::NAN),
                    p["s"].as_f64().unwrap_or(f64::NAN),
                    if p["special"] == json!(true) {
                        ", special"
                    } else {
                        ""
                    },
                );
            }
        }
        Some("report") => {
            for r in v["results"].as_array().into_iter().flatten() {
                let _ = writeln!(
                    out,
                    "{} [{}]: {}",
                    r["id"].as_str().unwrap_or("?"),
                    r["framework"].as_str().unwrap_or("?"),
                    verdict(r["pass"] == json!(true)),
                );
                for c in r["checks"].as_array().into_iter().flatten() {
                    let _ = writeln!(
                        out,
                        "  {}: {} (max residual {:.3e})",
                        c["name"].as_str().unwrap_or("?"),
                        verdict(c["pass"] == json!(true)),
                        c["max_residual"].as_f64().unwrap_or(f64::NAN),
                    );
                }
            }
            let _ = writeln!(out, "report: {}", verdict(v["pass"] == json!(true)));
        }
        _ => {
            let _ = writeln!(out, "{v}");
        }
    }
    out
}
