//! Command dispatch: argument parsing, per-command evaluation and the report
//! envelope shared by every subcommand.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mroot_core::classify::{theorem_consistency, SampleSet, DEFAULT_SAMPLES, DEFAULT_SEED};
use mroot_core::curvature::{curvatures, VolumeForm};
use mroot_core::geodesic::{integrate, spray_consistency, Flow};
use mroot_core::ode::IntegratorConfig;
use mroot_core::oracle::fd_oracle;
use mroot_core::spray::SprayContext;
use mroot_core::suite::run_suite;
use mroot_core::{fixtures, EvalPoint, MetricBundle, MetricSpec};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::metric_file::{parse_metric_file, MetricDocument};
use crate::report::{nested, nested_sym, object, to_value, Format, Report};

pub const SEED_ENV: &str = "MROOT_SEED";

#[derive(Debug, Parser)]
#[command(name = "mroot", version, about = "Curvature engine for m-th root Cartan metrics")]
struct Cli {
    /// Output format
    #[arg(long, value_enum, global = true, default_value = "json")]
    format: Format,

    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Args)]
struct MetricArgs {
    /// Metric document (JSON)
    #[arg(long, conflicts_with = "fixture")]
    metric: Option<PathBuf>,

    /// Built-in fixture by name, e.g. M_X
    #[arg(long)]
    fixture: Option<String>,
}

#[derive(Debug, Args)]
struct PointArgs {
    /// Position, comma separated (defaults to the origin)
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,

    /// Momentum, comma separated
    #[arg(long, allow_hyphen_values = true)]
    p: Option<String>,

    /// Batch file with one `x;p` pair per line
    #[arg(long, conflicts_with_all = ["x", "p"])]
    points: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Position of the momentum samples (defaults to the origin)
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,

    /// Sampling seed; overrides the MROOT_SEED environment variable
    #[arg(long)]
    seed: Option<u64>,

    /// Number of momentum samples
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Metric-level tensors at a point
    Eval {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Spray, Berwald hierarchy and derived curvatures at a point
    Curvatures {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Integrate a geodesic
    Geodesic {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        point: PointArgs,
        /// Final parameter value
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        t: f64,
        /// hamiltonian or spray
        #[arg(long, default_value = "hamiltonian")]
        flow: String,
        #[arg(long, default_value_t = 1e-10)]
        rtol: f64,
        #[arg(long, default_value_t = 1e-12)]
        atol: f64,
    },
    /// Isotropy fits and theorem consistency over momentum samples
    Classify {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        sample: SampleArgs,
    },
    /// Invariant suite over every fixture plus an optional metric
    Check {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        sample: SampleArgs,
    },
    /// Finite-difference cross-checks of the closed forms
    Oracle {
        #[command(flatten)]
        metric: MetricArgs,
        #[command(flatten)]
        sample: SampleArgs,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Eval { .. } => "eval",
            Command::Curvatures { .. } => "curvatures",
            Command::Geodesic { .. } => "geodesic",
            Command::Classify { .. } => "classify",
            Command::Check { .. } => "check",
            Command::Oracle { .. } => "oracle",
        }
    }
}

/// An error plus the point it happened at, when there is one.
struct Failure {
    err: mroot_core::Error,
    point: Option<Value>,
}

impl From<mroot_core::Error> for Failure {
    fn from(err: mroot_core::Error) -> Self {
        Self { err, point: None }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn at_point<T>(r: mroot_core::Result<T>, x: &[f64], p: Option<&[f64]>) -> Outcome<T> {
    r.map_err(|err| Failure { err, point: Some(json!({ "x": x, "p": p })) })
}

fn usage(location: &str, message: impl Into<String>) -> Failure {
    mroot_core::Error::Parse { location: location.into(), message: message.into() }.into()
}

/// Exit status for an error: 2 for malformed input, 3 for domain failures.
pub fn exit_code(err: &mroot_core::Error) -> i32 {
    use mroot_core::Error::*;
    match err {
        Parse { .. } | IndexOutOfRange { .. } | DuplicateOrbit(_) | IndexLength { .. } | InvalidSpec(_)
        | OrderOutOfRange { .. } | ArityExceeded { .. } => 2,
        _ => 3,
    }
}

fn error_kind(err: &mroot_core::Error) -> &'static str {
    use mroot_core::Error::*;
    match err {
        IndexOutOfRange { .. } => "index_out_of_range",
        DuplicateOrbit(_) => "duplicate_orbit",
        IndexLength { .. } => "index_length",
        ArityExceeded { .. } => "arity_exceeded",
        OrderOutOfRange { .. } => "order_out_of_range",
        InvalidSpec(_) => "invalid_spec",
        NonPositiveRadicand { .. } => "non_positive_radicand",
        ZeroMomentum => "zero_momentum",
        SingularMetric { .. } => "singular_metric",
        NonPositiveVolume { .. } => "non_positive_volume",
        ResidualTooLarge { .. } => "residual_too_large",
        DegenerateFit(_) => "degenerate_fit",
        TooFewSamples { .. } => "too_few_samples",
        StepFailure { .. } => "step_failure",
        Parse { .. } => "parse",
    }
}

pub fn parse_list(text: &str, location: &str) -> mroot_core::Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim().parse::<f64>().map_err(|e| mroot_core::Error::Parse {
                location: location.into(),
                message: format!("`{}`: {e}", s.trim()),
            })
        })
        .collect()
}

/// Reads a batch file of `x;p` lines; blank lines and `#` comments are skipped.
pub fn parse_points_file(path: &Path) -> mroot_core::Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| mroot_core::Error::Parse { location: origin.clone(), message: e.to_string() })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let loc = format!("{origin}:{}", i + 1);
        let (x, p) = line.split_once(';').ok_or_else(|| mroot_core::Error::Parse {
            location: loc.clone(),
            message: "expected `x1,..,xn;p1,..,pn`".into(),
        })?;
        out.push((parse_list(x, &loc)?, parse_list(p, &loc)?));
    }
    Ok(out)
}

fn resolve_metric(args: &MetricArgs) -> Outcome<Option<MetricSpec>> {
    match (&args.metric, &args.fixture) {
        (Some(path), _) => Ok(Some(parse_metric_file(path)?)),
        (None, Some(name)) => fixtures::by_name(name)
            .map(Some)
            .ok_or_else(|| usage("--fixture", format!("unknown fixture `{name}`"))),
        (None, None) => Ok(None),
    }
}

fn require_metric(args: &MetricArgs) -> Outcome<MetricSpec> {
    resolve_metric(args)?.ok_or_else(|| usage("--metric", "a metric file or --fixture is required"))
}

fn position(spec: &MetricSpec, x: &Option<String>) -> Outcome<Vec<f64>> {
    match x {
        Some(s) => Ok(parse_list(s, "--x")?),
        None => Ok(vec![0.0; spec.n()]),
    }
}

fn points(spec: &MetricSpec, args: &PointArgs) -> Outcome<Vec<(Vec<f64>, Vec<f64>)>> {
    if let Some(path) = &args.points {
        return Ok(parse_points_file(path)?);
    }
    let x = position(spec, &args.x)?;
    let p = args.p.as_deref().ok_or_else(|| usage("--p", "a momentum is required"))?;
    Ok(vec![(x, parse_list(p, "--p")?)])
}

/// `--seed`, then `MROOT_SEED`, then the built-in default.
fn seed(flag: Option<u64>) -> Outcome<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| usage(SEED_ENV, format!("`{v}` is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

pub fn digest(spec: &MetricSpec) -> String {
    let doc = serde_json::to_vec(&MetricDocument::from_spec(spec)).expect("document serializes");
    hex::encode(Sha256::digest(doc))
}

fn metric_echo(spec: &MetricSpec) -> Value {
    json!({ "name": spec.name(), "n": spec.n(), "m": spec.m(), "digest": digest(spec) })
}

fn bundle_value(b: &MetricBundle) -> Value {
    let a: Vec<(String, Value)> =
        b.a_tensors.iter().enumerate().map(|(r, t)| ((r + 1).to_string(), nested_sym(t))).collect();
    json!({
        "K": b.k,
        "a": object(a),
        "l": b.l,
        "gUp": nested_sym(&b.g_up),
        "gDown": nested_sym(&b.g_down),
        "h": nested_sym(&b.h),
        "C": nested_sym(&b.c),
        "I": b.i,
        "condition": b.condition,
    })
}

/// What a command produced: its results, tolerances, and whether any check failed.
struct Produced {
    results: Value,
    tolerances: Value,
    failed: bool,
}

fn eval_cmd(spec: &MetricSpec, pts: &[(Vec<f64>, Vec<f64>)]) -> Outcome<Produced> {
    let mut out = Vec::new();
    for (x, p) in pts {
        let pt = at_point(EvalPoint::new(spec, x, p), x, Some(p))?;
        let b = at_point(MetricBundle::new(spec, &pt), x, Some(p))?;
        out.push(json!({ "x": x, "p": p, "bundle": bundle_value(&b) }));
    }
    Ok(Produced {
        results: json!({ "points": out }),
        tolerances: json!({ "max_condition": mroot_core::metric::MAX_CONDITION }),
        failed: false,
    })
}

fn curvatures_cmd(spec: &MetricSpec, pts: &[(Vec<f64>, Vec<f64>)]) -> Outcome<Produced> {
    let vol = VolumeForm::of(spec);
    let mut out = Vec::new();
    for (x, p) in pts {
        let pt = at_point(EvalPoint::new(spec, x, p), x, Some(p))?;
        let (b, jet, r) = at_point(curvatures(spec, &pt, &vol), x, Some(p))?;
        let ctx = at_point(SprayContext::new(spec, &pt), x, Some(p))?;
        let contracted: Vec<f64> = (0..=3).map(|k| ctx.contracted_identity_residual(&jet, k)).collect();
        out.push(json!({
            "x": x,
            "p": p,
            "K": b.k,
            "spray": {
                "G": jet.g(),
                "G1": nested(jet.g1()),
                "G2": nested(jet.g2()),
                "G3": nested(jet.g3()),
                "residuals": jet.residuals,
                "contracted_identity_residuals": contracted,
                "condition": ctx.condition(),
            },
            "curvature": {
                "L": nested_sym(&r.l),
                "J": r.j,
                "E": nested_sym(&r.e),
                "tau": r.tau,
                "S": r.s,
                "H": nested_sym(&r.h),
                "norms": to_value(&r.norms),
            },
        }));
    }
    Ok(Produced {
        results: json!({
            "points": out,
            "conventions": {
                "tau": "1/2 ln|det g^{ij}| - ln sigma",
                "S": "derivative of tau along x' = p, p' = -2G",
                "volume": if spec.sigma().is_some() { "metric sigma" } else { "sigma = 1" },
            },
        }),
        tolerances: json!({
            "residual_levels_0_2": mroot_core::spray::RESIDUAL_LOW_LEVELS,
            "residual_fail": mroot_core::spray::RESIDUAL_FAIL,
        }),
        failed: false,
    })
}

#[allow(clippy::too_many_arguments)]
fn geodesic_cmd(
    spec: &MetricSpec,
    pts: &[(Vec<f64>, Vec<f64>)],
    t: f64,
    flow: &str,
    rtol: f64,
    atol: f64,
) -> Outcome<Produced> {
    let flow: Flow = flow.parse().map_err(|_| usage("--flow", format!("unknown flow `{flow}`")))?;
    let cfg = IntegratorConfig { rtol, atol, ..Default::default() };
    let mut out = Vec::new();
    let mut failed = false;
    for (x, p) in pts {
        let traj = at_point(integrate(spec, flow, x, p, t, &cfg), x, Some(p))?;
        let consistency = at_point(spray_consistency(spec, &traj), x, Some(p))?;
        failed |= !traj.drift_within_bound;
        let rows: Vec<Value> = traj
            .states
            .iter()
            .map(|s| json!({ "t": s.t, "x": s.x, "p": s.p, "K": s.k, "drift": s.drift }))
            .collect();
        out.push(json!({
            "x0": x,
            "p0": p,
            "K0": traj.states[0].k0,
            "max_drift": traj.max_drift,
            "drift_within_bound": traj.drift_within_bound,
            "spray_consistency": consistency,
            "accepted_steps": traj.accepted_steps,
            "rejected_steps": traj.rejected_steps,
            "trajectory": rows,
        }));
    }
    Ok(Produced {
        results: json!({ "flow": flow, "t_end": t, "geodesics": out }),
        tolerances: to_value(&cfg),
        failed,
    })
}

fn samples_for(spec: &MetricSpec, args: &SampleArgs) -> Outcome<SampleSet> {
    let x = position(spec, &args.x)?;
    let seed = seed(args.seed)?;
    at_point(SampleSet::generate(spec, &x, args.samples, seed), &x, None)
}

fn classify_cmd(spec: &MetricSpec, args: &SampleArgs) -> Outcome<Produced> {
    let samples = samples_for(spec, args)?;
    let report = at_point(theorem_consistency(spec, &samples), &samples.x, None)?;
    Ok(Produced {
        failed: !report.all_passed(),
        results: json!({ "x": samples.x, "consistency": to_value(&report) }),
        tolerances: json!({
            "fit_gate": mroot_core::classify::FIT_GATE,
            "zero_floor": mroot_core::classify::ZERO_FLOOR,
            "witness": mroot_core::classify::WITNESS,
            "coefficient_bound": mroot_core::classify::COEFF_BOUND,
        }),
    })
}

fn oracle_cmd(spec: &MetricSpec, args: &SampleArgs) -> Outcome<Produced> {
    let samples = samples_for(spec, args)?;
    let report = at_point(fd_oracle(spec, &samples), &samples.x, None)?;
    let tolerances = object(report.comparisons.iter().map(|(k, c)| (k.clone(), json!(c.tolerance))));
    Ok(Produced {
        failed: !report.all_passed(),
        results: json!({ "x": samples.x, "seed": samples.seed, "samples": samples.len(), "comparisons": to_value(&report.comparisons) }),
        tolerances,
    })
}

fn check_cmd(extra: Option<MetricSpec>, args: &SampleArgs) -> Outcome<Produced> {
    let seed = seed(args.seed)?;
    let mut specs = fixtures::all();
    let extra_x = match &extra {
        Some(spec) => Some(position(spec, &args.x)?),
        None => None,
    };
    specs.extend(extra.clone());
    let mut suites = Vec::new();
    let mut failures = 0usize;
    for (k, spec) in specs.iter().enumerate() {
        let x = match (&extra_x, k + 1 == specs.len() && extra.is_some()) {
            (Some(x), true) => x.clone(),
            _ => vec![0.0; spec.n()],
        };
        match run_suite(spec, &x, args.samples, seed) {
            Ok(report) => {
                failures += report.failures().count();
                suites.push(to_value(&report));
            }
            Err(e) => {
                failures += 1;
                suites.push(json!({
                    "metric": spec.name().unwrap_or("unnamed"),
                    "error": { "kind": error_kind(&e), "message": e.to_string(), "point": { "x": x } },
                }));
            }
        }
    }
    Ok(Produced {
        failed: failures > 0,
        results: json!({ "seed": seed, "samples": args.samples, "failures": failures, "suites": suites }),
        tolerances: json!({
            "identity": mroot_core::suite::IDENTITY_TOL,
            "homogeneity": mroot_core::suite::HOMOGENEITY_TOL,
            "annihilation": mroot_core::suite::ANNIHILATION_TOL,
            "contracted_identity": mroot_core::suite::CONTRACTED_TOL,
            "reversibility": mroot_core::suite::REVERSIBILITY_TOL,
        }),
    })
}

fn dispatch(cmd: &Command) -> (Option<MetricSpec>, Outcome<Produced>) {
    let with_metric = |args: &MetricArgs, f: &dyn Fn(&MetricSpec) -> Outcome<Produced>| match require_metric(args) {
        Ok(spec) => {
            let r = f(&spec);
            (Some(spec), r)
        }
        Err(e) => (None, Err(e)),
    };
    match cmd {
        Command::Eval { metric, point } => with_metric(metric, &|s| eval_cmd(s, &points(s, point)?)),
        Command::Curvatures { metric, point } => with_metric(metric, &|s| curvatures_cmd(s, &points(s, point)?)),
        Command::Geodesic { metric, point, t, flow, rtol, atol } => {
            with_metric(metric, &|s| geodesic_cmd(s, &points(s, point)?, *t, flow, *rtol, *atol))
        }
        Command::Classify { metric, sample } => with_metric(metric, &|s| classify_cmd(s, sample)),
        Command::Oracle { metric, sample } => with_metric(metric, &|s| oracle_cmd(s, sample)),
        Command::Check { metric, sample } => match resolve_metric(metric) {
            Ok(extra) => (extra.clone(), check_cmd(extra, sample)),
            Err(e) => (None, Err(e)),
        },
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// report with its exit code: 0 when everything passed, 1 when a check
/// failed, 2 for usage or input errors, 3 for domain errors.
pub fn run_command<I, T>(argv: I) -> Report
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let echo: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    return Report { code: 0, value: Value::Null, format: Format::Json, text: Some(e.to_string()) }
                }
                _ => 2,
            };
            return Report {
                code,
                value: json!({
                    "argv": echo,
                    "error": { "kind": "usage", "message": e.to_string() },
                    "summary": { "status": "ERROR", "exit_code": code },
                }),
                format: Format::Json,
                text: None,
            };
        }
    };
    let (spec, outcome) = dispatch(&cli.cmd);
    let mut value = json!({
        "command": cli.cmd.name(),
        "argv": echo,
        "metric": spec.as_ref().map(metric_echo),
    });
    let code = match outcome {
        Ok(p) => {
            let code = if p.failed { 1 } else { 0 };
            value["results"] = p.results;
            value["tolerances"] = p.tolerances;
            value["summary"] = json!({ "status": if p.failed { "FAIL" } else { "PASS" }, "exit_code": code });
            code
        }
        Err(Failure { err, point }) => {
            let code = exit_code(&err);
            value["error"] = json!({ "kind": error_kind(&err), "message": err.to_string(), "point": point });
            value["summary"] = json!({ "status": "ERROR", "exit_code": code });
            code
        }
    };
    Report { code, value, format: cli.format, text: None }
}
