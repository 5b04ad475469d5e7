//! Batch command-line frontend.
//!
//! Every subcommand prints one record `{config, results, checks, timing,
//! version}` as JSON (or flattened `key,value` CSV rows) and exits with 0
//! when all checks pass, 1 when a check fails and 2 on a usage or
//! validation error. `sweep` prints an array of such records, one per prime.
//!
//! Floats are rounded to 15 significant digits and object keys are sorted,
//! so identical arguments give byte-identical output apart from `timing`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds::{corollary1_count, extreme_bound_check, theorem1_check};
use crate::dlog::{build_table, dlog_bsgs, dlog_pollard_rho, DlogTable};
use crate::experiments::{
    multibase_sum, ordering_frequencies, poly_twist_sum, union_discrepancy_check, IntPolynomial,
    MultiBaseSpec, TupleMode,
};
use crate::expsum::{progression_phase_sum, pv_bound, ExpSums, MODULUS_SLACK};
use crate::numtheory::{build_ctx, factorize, is_prime, smallest_primitive_root, FieldCtx};
use crate::torus::{
    brute_force_extreme_discrepancy, extreme_discrepancy, log_image, Closure, DiscrepancyReport,
    Frac, Interval, Progression, TorusPoints,
};

/// `| |S|² − p | ≤ MODULUS_REL_TOL · p` for doubly nontrivial resolvents.
pub const MODULUS_REL_TOL: f64 = 1e-6;
/// Tolerance for `S(θ^k, 1) = 0` and `S(1, ζ^u) = −1`.
pub const EDGE_TOL: f64 = 1e-8;
/// Tolerance for the inversion and decomposition residuals.
pub const IDENTITY_TOL: f64 = 1e-7;
/// Relative tolerance on the Erdős–Turán right-hand side.
pub const ET_REL_TOL: f64 = 1e-6;

/// Denominator of randomly drawn interval endpoints.
const RANDOM_ENDPOINT_DEN: u64 = 1_000_000;

type Error = Box<dyn std::error::Error + Send + Sync>;

#[derive(Parser, Debug)]
#[command(
    name = "dlogdist",
    version,
    about = "Discrete logarithms, exponential sums and discrepancy of log images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads; defaults to one per core. Output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for every randomized choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Serialize)]
struct FieldArgs {
    /// Prime modulus.
    #[arg(long)]
    p: u64,
    /// Primitive root; the smallest one when omitted.
    #[arg(long)]
    g: Option<u64>,
}

/// `J = {a + r, a + 2r, …, a + N·r}`.
#[derive(Args, Debug, Clone, Serialize)]
struct ProgArgs {
    #[arg(long, default_value_t = 0)]
    a: u64,
    /// Common difference.
    #[arg(long, default_value_t = 1)]
    r: u64,
    /// Number of terms; as many as fit below p when omitted.
    #[arg(long)]
    n: Option<u64>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct IntervalArgs {
    /// Left endpoint, `n/d` or a decimal.
    #[arg(long, requires = "beta")]
    alpha: Option<Frac>,
    /// Right endpoint, `n/d` or a decimal.
    #[arg(long, requires = "alpha")]
    beta: Option<Frac>,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Smallest primitive root and factorization of p − 1.
    Primroot(PrimrootArgs),
    /// Discrete logarithm of x.
    Dlog(DlogArgs),
    /// The log image M(g, J) as numerators over p − 1.
    Image(ImageArgs),
    /// Discrepancy of M(g, J) on one interval, or the extreme discrepancy.
    Discrepancy(DiscrepancyArgs),
    /// The resolvent S(θ^k, ζ^u).
    Resolvent(ResolventArgs),
    /// Geometric phase sums over J against min(N, 1/(2‖ur/p‖)).
    Phasesum(PhasesumArgs),
    /// The log-character sum over J.
    Logsum(LogsumArgs),
    /// Inversion of a log-character through resolvents.
    #[command(name = "verify-eq4")]
    #[serde(rename = "verify-eq4")]
    VerifyEq4(VerifyEq4Args),
    /// Resolvent expansion of a log-character sum over J.
    #[command(name = "verify-eq5")]
    #[serde(rename = "verify-eq5")]
    VerifyEq5(VerifyEq5Args),
    /// Log-character sums over J against √p (2 + ln p).
    #[command(name = "verify-eq7")]
    #[serde(rename = "verify-eq7")]
    VerifyEq7(VerifyEq7Args),
    /// Interval discrepancy against the Erdős–Turán right-hand side.
    EtBound(BoundArgs),
    /// Erdős–Turán chain, √p log p envelopes and the extreme discrepancy.
    Theorem1(BoundArgs),
    /// Count of logs of J in an integer window [s, t].
    Corollary1(CorollaryArgs),
    /// Discrepancy additivity over random disjoint splits of M(g, J).
    UnionCheck(UnionArgs),
    /// Polynomially twisted log-character sum.
    Poly(PolyArgs),
    /// Sum with a linear term and logs to several bases.
    Multibase(MultibaseArgs),
    /// Frequencies of the relative orders of logs of r-tuples.
    Perm(PermArgs),
    /// Extreme discrepancy and log-sum maxima over a list of primes.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct PrimrootArgs {
    #[arg(long)]
    p: u64,
    /// Candidate to test.
    #[arg(long)]
    g: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum DlogMethod {
    Table,
    Bsgs,
    Rho,
}

#[derive(Args, Debug, Clone, Serialize)]
struct DlogArgs {
    #[command(flatten)]
    #[serde(flatten)]
    field: FieldArgs,
    #[arg(long)]
    x: u64,
    #[arg(long, value_enum, default_value_t = DlogMethod::Table)]
    method: DlogMethod,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ImageArgs {
    #[command(flatten)]
    #[serde(flatten)]
    field: FieldArgs,
    #[command(flatten)]
    #[serde(flatten)]
    prog: ProgArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct DiscrepancyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    field: FieldArgs,
    #[command(flatten)]
    #[serde(flatten)]
    prog: ProgArgs,
    #[command(flatten)]
    #[serde(flatten)]
    interval: IntervalArgs,
    /// Treat intervals as [α, β) instead of [α, β].
    #[arg(long)]
    half_open: bool,
    /// Cross-check the extreme discrepancy against the quadratic search.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ResolventArgs {
    #[command(flatten)]
    #[serde(flatten)]
    field: FieldArgs,
    #[arg(long)]
    k: u64,
    #[arg(long)]
    u: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct PhasesumArgs {
    #[arg(long)]
    p: u64,
    #[command(flatten)]
    #[serde(flatten)]
    prog: ProgArgs,
    /// Frequency; every u in [0, p − 1] when omitted.
    #[arg(long)]
    u: Option<u64>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct LogsumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    field: FieldArgs,
    #[command(flatten)]
    #[serde(flatten)]
    prog: ProgArgs,
    #[arg(long)]
    k: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct VerifyEq4Args {
    #[command(flatten)]
    #[serde(flatten)]
    field: FieldArgs,
    #[arg(long, requires = "z")]
    k: Option<u64>,
    #[arg(long, requires = "k")]
    z: Option<u64>,
    /// Number of random (k, z) pairs when k and z are omitted.
    #[arg(long, default_value_t = 50)]
    samples: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct VerifyEq5Args {
    #[command(flatten)]
    #[serde(flatten)]
    field: FieldArgs,
    #[command(flatten)]
    #[serde(flatten)]
    prog: ProgArgs,
    #[arg(long)]
    k: Option<u64>,
    /// Number of random k when k is omitted.
    #[arg(long, default_value_t = 20)]
    samples: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct VerifyEq7Args {
    #[command(flatten)]
    #[serde(flatten)]
    field: FieldArgs,
    #[command(flatten)]
    #[serde(flatten)]
    prog: ProgArgs,
    /// Twists to check; every nontrivial k when omitted.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<u64>>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct BoundArgs {
    #[command(flatten)]
    #[serde(flatten)]
    field: FieldArgs,
    #[command(flatten)]
    #[serde(flatten)]
    prog: ProgArgs,
    #[command(flatten)]
    #[serde(flatten)]
    interval: IntervalArgs,
    /// Fourier truncation; p − 1 when omitted.
    #[arg(long = "K")]
    #[serde(rename = "K")]
    truncation: Option<u64>,
    /// Number of random intervals when α and β are omitted.
    #[arg(long, default_value_t = 50)]
    samples: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct CorollaryArgs {
    #[command(flatten)]
    #[serde(flatten)]
    field: FieldArgs,
    #[command(flatten)]
    #[serde(flatten)]
    prog: ProgArgs,
    #[arg(long)]
    s: u64,
    #[arg(long)]
    t: u64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Constant in the hypothesis MN > (c3/δ) p^{3/2} ln²p.
    #[arg(long, default_value_t = 1.0)]
    c3: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct UnionArgs {
    #[command(flatten)]
    #[serde(flatten)]
    field: FieldArgs,
    #[command(flatten)]
    #[serde(flatten)]
    prog: ProgArgs,
    #[command(flatten)]
    #[serde(flatten)]
    interval: IntervalArgs,
    /// Number of random splits.
    #[arg(long, default_value_t = 50)]
    samples: u64,
    #[arg(long)]
    half_open: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
struct PolyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    field: FieldArgs,
    #[command(flatten)]
    #[serde(flatten)]
    prog: ProgArgs,
    /// Coefficients a0,a1,…,an.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "degree",
        required_unless_present = "degree"
    )]
    coeffs: Option<Vec<i64>>,
    /// Degree of a random polynomial drawn from the seed.
    #[arg(long)]
    degree: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct MultibaseArgs {
    #[command(flatten)]
    #[serde(flatten)]
    field: FieldArgs,
    #[command(flatten)]
    #[serde(flatten)]
    prog: ProgArgs,
    /// Coefficient of the linear term.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    linear: i64,
    /// Bases and coefficients as `g1:b1,g2:b2,…`.
    #[arg(long, value_delimiter = ',', value_parser = parse_base_pair, required = true, allow_hyphen_values = true)]
    bases: Vec<(u64, i64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PermMode {
    Exhaustive,
    ExhaustiveAdjacent,
    Sampled,
}

#[derive(Args, Debug, Clone, Serialize)]
struct PermArgs {
    #[command(flatten)]
    #[serde(flatten)]
    field: FieldArgs,
    #[arg(long, default_value_t = 0)]
    a: u64,
    /// Common difference of J.
    #[arg(long, default_value_t = 1)]
    step: u64,
    #[arg(long)]
    n: Option<u64>,
    /// Tuple size.
    #[arg(long = "r", visible_alias = "r-tuple")]
    #[serde(rename = "r_tuple")]
    r: usize,
    #[arg(long, value_enum, default_value_t = PermMode::Sampled)]
    mode: PermMode,
    /// Number of tuples in sampled mode.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    primes: Vec<u64>,
    /// J is the first ⌊fraction·(p − 1)⌋ residues.
    #[arg(long, default_value_t = 0.5)]
    fraction: f64,
}

fn parse_base_pair(s: &str) -> Result<(u64, i64), String> {
    let (g, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected base:coefficient, got {s:?}"))?;
    let g = g
        .trim()
        .parse()
        .map_err(|e| format!("bad base {g:?}: {e}"))?;
    let b = b
        .trim()
        .parse()
        .map_err(|e| format!("bad coefficient {b:?}: {e}"))?;
    Ok((g, b))
}

/// Wall-clock time of a run; the only field allowed to differ between
/// identical invocations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
}

/// One serialized run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: Value,
    pub results: Value,
    pub checks: BTreeMap<String, bool>,
    pub timing: Timing,
    pub version: String,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.checks.values().all(|&ok| ok)
    }
}

#[derive(Default)]
struct Outcome {
    results: Value,
    checks: BTreeMap<String, bool>,
}

impl Outcome {
    fn new(results: Value) -> Self {
        Self {
            results,
            checks: BTreeMap::new(),
        }
    }

    fn check(mut self, name: &str, ok: bool) -> Self {
        self.checks.insert(name.to_string(), ok);
        self
    }
}

/// Parses `args` (program name first), runs the subcommand and writes the
/// output to stdout. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let records = match execute(&cli) {
        Ok(records) => records,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let rendered = match render(&cli, &records) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let mut out = std::io::stdout().lock();
    if out
        .write_all(rendered.as_bytes())
        .and_then(|_| out.flush())
        .is_err()
    {
        return 2;
    }
    if records.iter().all(RunRecord::passed) {
        0
    } else {
        1
    }
}

fn execute(cli: &Cli) -> Result<Vec<RunRecord>, Error> {
    let work = || -> Result<Vec<RunRecord>, Error> {
        match &cli.command {
            Command::Sweep(args) => sweep(args, cli.seed),
            command => {
                let start = Instant::now();
                let outcome = dispatch(command, cli.seed)?;
                Ok(vec![record(config_of(command, cli.seed)?, outcome, start)])
            }
        }
    };
    match cli.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()?
            .install(work),
        None => work(),
    }
}

fn config_of<T: Serialize>(args: &T, seed: u64) -> Result<Value, Error> {
    let mut config = serde_json::to_value(args)?;
    if let Value::Object(map) = &mut config {
        map.insert("seed".into(), json!(seed));
    }
    Ok(config)
}

fn record(config: Value, outcome: Outcome, start: Instant) -> RunRecord {
    let mut rec = RunRecord {
        config,
        results: outcome.results,
        checks: outcome.checks,
        timing: Timing {
            elapsed_seconds: start.elapsed().as_secs_f64(),
        },
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    round_floats(&mut rec.config);
    round_floats(&mut rec.results);
    rec
}

/// Rounds every float to 15 significant digits.
fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let rounded: f64 = format!("{x:.14e}").parse().expect("formatted float parses");
            *v = json!(rounded);
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn render(cli: &Cli, records: &[RunRecord]) -> Result<String, Error> {
    let sweep = matches!(cli.command, Command::Sweep(_));
    match cli.format {
        Format::Json => {
            let mut s = if sweep {
                serde_json::to_string_pretty(records)?
            } else {
                serde_json::to_string_pretty(&records[0])?
            };
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut rows = Vec::new();
            for (i, rec) in records.iter().enumerate() {
                let prefix = if sweep { i.to_string() } else { String::new() };
                flatten(&prefix, &serde_json::to_value(rec)?, &mut rows);
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["key", "value"])?;
            for (k, v) in rows {
                w.write_record([k, v])?;
            }
            Ok(String::from_utf8(
                w.into_inner().map_err(|e| e.to_string())?,
            )?)
        }
    }
}

/// Flattens nested objects and arrays into dotted keys.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, x)| flatten(&join(k), x, out)),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .for_each(|(i, x)| flatten(&join(&i.to_string()), x, out)),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn cx(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn table_for(field: &FieldArgs) -> Result<DlogTable, Error> {
    let ctx = build_ctx(field.p, field.g)?;
    Ok(build_table(&ctx)?)
}

fn progression(p: u64, a: u64, r: u64, n: Option<u64>) -> Result<Progression, Error> {
    let n = match n {
        Some(n) => n,
        None if r > 0 && a < p - 1 => (p - 1 - a) / r,
        None => 0,
    };
    let j = Progression::new(a, r, n)?;
    j.validate(p)?;
    Ok(j)
}

fn prog(p: u64, args: &ProgArgs) -> Result<Progression, Error> {
    progression(p, args.a, args.r, args.n)
}

fn intervals(args: &IntervalArgs, count: u64, seed: u64) -> Result<Vec<Interval>, Error> {
    match (args.alpha, args.beta) {
        (Some(alpha), Some(beta)) => Ok(vec![Interval::new(alpha, beta)?]),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|_| random_interval(&mut rng)).collect()
        }
    }
}

fn random_interval(rng: &mut ChaCha8Rng) -> Result<Interval, Error> {
    let x = rng.gen_range(0..=RANDOM_ENDPOINT_DEN);
    let y = rng.gen_range(0..=RANDOM_ENDPOINT_DEN);
    Ok(Interval::new(
        Frac::new(x.min(y), RANDOM_ENDPOINT_DEN)?,
        Frac::new(x.max(y), RANDOM_ENDPOINT_DEN)?,
    )?)
}

fn closure(half_open: bool) -> Closure {
    if half_open {
        Closure::HalfOpen
    } else {
        Closure::Closed
    }
}

fn dispatch(command: &Command, seed: u64) -> Result<Outcome, Error> {
    match command {
        Command::Primroot(a) => primroot(a),
        Command::Dlog(a) => dlog(a, seed),
        Command::Image(a) => image(a),
        Command::Discrepancy(a) => discrepancy(a),
        Command::Resolvent(a) => resolvent(a),
        Command::Phasesum(a) => phasesum(a),
        Command::Logsum(a) => logsum(a),
        Command::VerifyEq4(a) => verify_eq4(a, seed),
        Command::VerifyEq5(a) => verify_eq5(a, seed),
        Command::VerifyEq7(a) => verify_eq7(a),
        Command::EtBound(a) => et_bound(a, seed),
        Command::Theorem1(a) => theorem1(a, seed),
        Command::Corollary1(a) => corollary1(a),
        Command::UnionCheck(a) => union_check(a, seed),
        Command::Poly(a) => poly(a, seed),
        Command::Multibase(a) => multibase(a),
        Command::Perm(a) => perm(a, seed),
        Command::Sweep(_) => unreachable!("sweep emits several records"),
    }
}

fn primroot(args: &PrimrootArgs) -> Result<Outcome, Error> {
    let g = smallest_primitive_root(args.p)?;
    let factors = factorize(args.p - 1)?;
    let mut results = json!({
        "p": args.p,
        "g": g,
        "order": args.p - 1,
        "factors_of_order": factors,
    });
    let out = match args.g {
        Some(candidate) => {
            let ctx = FieldCtx::new(args.p, Some(g))?;
            let ok = candidate % args.p != 0 && ctx.is_primitive_root(candidate);
            results["candidate"] = json!(candidate);
            Outcome::new(results).check("candidate_is_primitive_root", ok)
        }
        None => Outcome::new(results),
    };
    Ok(out)
}

fn dlog(args: &DlogArgs, seed: u64) -> Result<Outcome, Error> {
    let ctx = build_ctx(args.field.p, args.field.g)?;
    let log = match args.method {
        DlogMethod::Table => build_table(&ctx)?.log(args.x)?,
        DlogMethod::Bsgs => dlog_bsgs(&ctx, args.x)?,
        DlogMethod::Rho => dlog_pollard_rho(&ctx, args.x, seed)?,
    };
    let results = json!({ "p": ctx.p(), "g": ctx.g(), "x": args.x, "log": log });
    Ok(Outcome::new(results).check("round_trip", ctx.pow(ctx.g(), log) == args.x % ctx.p()))
}

fn image(args: &ImageArgs) -> Result<Outcome, Error> {
    let table = table_for(&args.field)?;
    let j = prog(table.ctx().p(), &args.prog)?;
    let m = log_image(&table, &j)?;
    let distinct = m.numerators().windows(2).all(|w| w[0] < w[1]);
    let results = json!({
        "g": table.ctx().g(),
        "n": j.n,
        "denominator": m.denominator(),
        "cardinality": m.card(),
        "numerators": m.numerators(),
    });
    Ok(Outcome::new(results).check("distinct", distinct))
}

fn discrepancy(args: &DiscrepancyArgs) -> Result<Outcome, Error> {
    let table = table_for(&args.field)?;
    let j = prog(table.ctx().p(), &args.prog)?;
    let m = log_image(&table, &j)?;
    let closure = closure(args.half_open);
    let report = match (args.interval.alpha, args.interval.beta) {
        (Some(alpha), Some(beta)) => {
            DiscrepancyReport::for_interval(&m, &Interval::new(alpha, beta)?, closure)
        }
        _ => extreme_discrepancy(&m)?,
    };
    let exact = format!("{}/{}", report.exact.num, report.exact.den);
    let mut out = Outcome::new(json!({ "g": table.ctx().g(), "report": report, "exact": exact }));
    if args.oracle {
        let oracle = brute_force_extreme_discrepancy(&m, closure)?;
        out.results["oracle_raw"] = json!(oracle.raw);
        out = out.check(
            "matches_oracle",
            oracle.exact == extreme_discrepancy(&m)?.exact,
        );
    }
    Ok(out)
}

fn resolvent(args: &ResolventArgs) -> Result<Outcome, Error> {
    let table = table_for(&args.field)?;
    let sums = ExpSums::new(&table);
    let p = sums.p();
    let (k, u) = (args.k % (p - 1), args.u % p);
    let s = sums.resolvent(k, u);
    let modulus_sq = s.value.norm_sqr();
    let results = json!({
        "g": table.ctx().g(),
        "k": k,
        "u": u,
        "value": cx(s.value),
        "modulus": s.value.norm(),
        "modulus_sq": modulus_sq,
        "terms": s.terms,
        "err_bound": s.err_bound,
    });
    let out = Outcome::new(results);
    Ok(match (k == 0, u == 0) {
        (false, false) => out.check(
            "gauss_modulus",
            (modulus_sq - p as f64).abs() <= MODULUS_REL_TOL * p as f64,
        ),
        (true, true) => out.check("edge_value", s.value == Complex64::new((p - 1) as f64, 0.0)),
        (false, true) => out.check("edge_value", s.value.norm() <= EDGE_TOL),
        (true, false) => out.check("edge_value", (s.value + 1.0).norm() <= EDGE_TOL),
    })
}

fn phasesum(args: &PhasesumArgs) -> Result<Outcome, Error> {
    if !is_prime(args.p) {
        return Err(format!("{} is not prime", args.p).into());
    }
    let j = prog(args.p, &args.prog)?;
    match args.u {
        Some(u) => {
            let s = progression_phase_sum(args.p, &j, u);
            let results = json!({
                "u": u % args.p,
                "value": cx(s.value),
                "modulus": s.value.norm(),
                "bound": s.bound,
                "bound_exact": format!("{}/{}", s.bound_num, s.bound_den),
            });
            Ok(Outcome::new(results).check("within_bound", s.within_bound()))
        }
        None => {
            let sums: Vec<_> = (0..args.p)
                .into_par_iter()
                .map(|u| progression_phase_sum(args.p, &j, u))
                .collect();
            let (worst_u, worst) = sums
                .iter()
                .enumerate()
                .map(|(u, s)| (u, s.value.norm() / s.bound))
                .fold(
                    (0, 0.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            let results = json!({
                "checked": sums.len(),
                "max_ratio": worst,
                "worst_u": worst_u,
                "slack": MODULUS_SLACK,
            });
            Ok(Outcome::new(results).check("within_bound", sums.iter().all(|s| s.within_bound())))
        }
    }
}

fn logsum(args: &LogsumArgs) -> Result<Outcome, Error> {
    let table = table_for(&args.field)?;
    let sums = ExpSums::new(&table);
    let j = prog(sums.p(), &args.prog)?;
    let v = sums.log_character_sum(&j, args.k)?;
    let results = json!({
        "g": table.ctx().g(),
        "n": j.n,
        "k": args.k % (sums.p() - 1),
        "value": cx(v),
        "modulus": v.norm(),
        "pv_bound": pv_bound(sums.p()),
    });
    Ok(Outcome::new(results).check("trivial_bound", v.norm() <= j.n as f64 + MODULUS_SLACK))
}

fn verify_eq4(args: &VerifyEq4Args, seed: u64) -> Result<Outcome, Error> {
    let table = table_for(&args.field)?;
    let sums = ExpSums::new(&table);
    let p = sums.p();
    let pairs: Vec<(u64, u64)> = match (args.k, args.z) {
        (Some(k), Some(z)) if z % p != 0 => vec![(k, z)],
        (Some(_), Some(z)) => return Err(format!("z = {z} is divisible by p").into()),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..args.samples)
                .map(|_| (rng.gen_range(0..p - 1), rng.gen_range(1..p)))
                .collect()
        }
    };
    let residuals: Vec<Value> = pairs
        .par_iter()
        .map(|&(k, z)| json!({ "k": k, "z": z, "residual": sums.verify_inversion(k, z) }))
        .collect();
    let max = residuals
        .iter()
        .filter_map(|r| r["residual"].as_f64())
        .fold(0.0, f64::max);
    let results = json!({ "g": table.ctx().g(), "pairs": residuals, "max_residual": max, "tolerance": IDENTITY_TOL });
    Ok(Outcome::new(results).check("inversion", max <= IDENTITY_TOL))
}

fn verify_eq5(args: &VerifyEq5Args, seed: u64) -> Result<Outcome, Error> {
    let table = table_for(&args.field)?;
    let sums = ExpSums::new(&table);
    let p = sums.p();
    let j = prog(p, &args.prog)?;
    let ks: Vec<u64> = match args.k {
        Some(k) => vec![k],
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..args.samples).map(|_| rng.gen_range(0..p - 1)).collect()
        }
    };
    let residuals = ks
        .par_iter()
        .map(|&k| Ok(json!({ "k": k, "residual": sums.verify_decomposition(&j, k)? })))
        .collect::<Result<Vec<Value>, Error>>()?;
    let max = residuals
        .iter()
        .filter_map(|r| r["residual"].as_f64())
        .fold(0.0, f64::max);
    let results = json!({ "g": table.ctx().g(), "n": j.n, "twists": residuals, "max_residual": max, "tolerance": IDENTITY_TOL });
    Ok(Outcome::new(results).check("decomposition", max <= IDENTITY_TOL))
}

fn verify_eq7(args: &VerifyEq7Args) -> Result<Outcome, Error> {
    let table = table_for(&args.field)?;
    let sums = ExpSums::new(&table);
    let j = prog(sums.p(), &args.prog)?;
    let report = sums.pv_bound_check(&j, args.k.as_deref())?;
    let holds = report.holds();
    let results = json!({ "g": table.ctx().g(), "n": j.n, "report": report });
    Ok(Outcome::new(results).check("pv_bound", holds))
}

fn et_bound(args: &BoundArgs, seed: u64) -> Result<Outcome, Error> {
    let table = table_for(&args.field)?;
    let j = prog(table.ctx().p(), &args.prog)?;
    let ints = intervals(&args.interval, args.samples, seed)?;
    let reports = theorem1_check(&table, &j, &ints, args.truncation)?;
    let rows: Vec<Value> = reports
        .iter()
        .map(|r| json!({ "interval": r.interval, "lhs": r.lhs, "rhs": r.rhs_explicit }))
        .collect();
    let max_ratio = reports
        .iter()
        .map(|r| r.lhs / r.rhs_explicit)
        .fold(0.0, f64::max);
    let holds = reports.iter().all(|r| r.et_holds(ET_REL_TOL));
    let results = json!({
        "g": table.ctx().g(),
        "n": j.n,
        "truncation": reports.first().map(|r| r.truncation),
        "intervals": rows,
        "max_lhs_over_rhs": max_ratio,
    });
    Ok(Outcome::new(results).check("erdos_turan", holds))
}

fn theorem1(args: &BoundArgs, seed: u64) -> Result<Outcome, Error> {
    let table = table_for(&args.field)?;
    let j = prog(table.ctx().p(), &args.prog)?;
    let ints = intervals(&args.interval, args.samples, seed)?;
    let reports = theorem1_check(&table, &j, &ints, args.truncation)?;
    let extreme = extreme_bound_check(&table, &j)?;
    let max_ratio = reports
        .iter()
        .filter(|r| r.hypothesis)
        .map(|r| r.ratio)
        .fold(0.0, f64::max);
    let et = reports.iter().all(|r| r.et_holds(ET_REL_TOL));
    let capacity = extreme.capacity.holds();
    let results = json!({
        "g": table.ctx().g(),
        "n": j.n,
        "intervals": reports,
        "max_envelope_ratio": max_ratio,
        "extreme": extreme,
        "c2_estimate": extreme.ratio,
    });
    Ok(Outcome::new(results)
        .check("erdos_turan", et)
        .check("short_interval_capacity", capacity))
}

fn corollary1(args: &CorollaryArgs) -> Result<Outcome, Error> {
    let table = table_for(&args.field)?;
    let j = prog(table.ctx().p(), &args.prog)?;
    let report = corollary1_count(&table, &j, args.s, args.t, args.delta, args.c3)?;
    let within = report.within_delta;
    let results = json!({ "g": table.ctx().g(), "n": j.n, "report": report });
    Ok(Outcome::new(results).check("within_delta", within))
}

fn union_check(args: &UnionArgs, seed: u64) -> Result<Outcome, Error> {
    let table = table_for(&args.field)?;
    let j = prog(table.ctx().p(), &args.prog)?;
    let m = log_image(&table, &j)?;
    let closure = closure(args.half_open);
    let fixed = match (args.interval.alpha, args.interval.beta) {
        (Some(alpha), Some(beta)) => Some(Interval::new(alpha, beta)?),
        _ => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_residual = 0.0f64;
    let mut nonzero = 0u64;
    for _ in 0..args.samples {
        let (a, b): (Vec<u64>, Vec<u64>) = m.numerators().iter().partition(|_| rng.gen_bool(0.5));
        let interval = match fixed {
            Some(i) => i,
            None => random_interval(&mut rng)?,
        };
        let m1 = TorusPoints::new(m.denominator(), a)?;
        let m2 = TorusPoints::new(m.denominator(), b)?;
        let residual = union_discrepancy_check(&m1, &m2, &interval, closure)?;
        if !residual.is_zero() {
            nonzero += 1;
        }
        max_residual = max_residual.max(residual.to_f64());
    }
    let results = json!({
        "g": table.ctx().g(),
        "n": j.n,
        "splits": args.samples,
        "nonzero_residuals": nonzero,
        "max_residual": max_residual,
    });
    Ok(Outcome::new(results).check("additivity", nonzero == 0))
}

fn poly(args: &PolyArgs, seed: u64) -> Result<Outcome, Error> {
    let table = table_for(&args.field)?;
    let p = table.ctx().p();
    let j = prog(p, &args.prog)?;
    let coeffs: Vec<i64> = match (&args.coeffs, args.degree) {
        (Some(c), _) => c.clone(),
        (None, Some(d)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut c: Vec<i64> = (0..d).map(|_| rng.gen_range(0..p - 1) as i64).collect();
            c.push(rng.gen_range(1..p - 1) as i64);
            c
        }
        (None, None) => return Err("one of --coeffs or --degree is required".into()),
    };
    let poly = IntPolynomial::new(&coeffs, p - 1)?;
    let v = poly_twist_sum(&table, &j, &poly)?;
    let results = json!({
        "g": table.ctx().g(),
        "n": j.n,
        "coefficients": poly.coefficients(),
        "degree": poly.degree(),
        "value": cx(v),
        "modulus": v.norm(),
        "ratio_to_pv_bound": v.norm() / pv_bound(p),
    });
    Ok(Outcome::new(results).check("trivial_bound", v.norm() <= j.n as f64 + MODULUS_SLACK))
}

fn multibase(args: &MultibaseArgs) -> Result<Outcome, Error> {
    let table = table_for(&args.field)?;
    let p = table.ctx().p();
    let j = prog(p, &args.prog)?;
    let spec = MultiBaseSpec {
        a: args.linear,
        pairs: args.bases.clone(),
    };
    let v = multibase_sum(&table, &j, &spec)?;
    let results = json!({
        "g": table.ctx().g(),
        "n": j.n,
        "value": cx(v),
        "modulus": v.norm(),
        "ratio_to_pv_bound": v.norm() / pv_bound(p),
    });
    Ok(Outcome::new(results).check("trivial_bound", v.norm() <= j.n as f64 + MODULUS_SLACK))
}

fn binomial(n: u64, r: usize) -> u64 {
    (0..r as u64).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

fn perm(args: &PermArgs, seed: u64) -> Result<Outcome, Error> {
    let table = table_for(&args.field)?;
    let j = progression(table.ctx().p(), args.a, args.step, args.n)?;
    let mode = match args.mode {
        PermMode::Exhaustive => TupleMode::Exhaustive,
        PermMode::ExhaustiveAdjacent => TupleMode::ExhaustiveAdjacent,
        PermMode::Sampled => TupleMode::Sampled {
            samples: args.samples,
            seed,
        },
    };
    let hist = ordering_frequencies(&table, &j, args.r, mode)?;
    let expected_total = match mode {
        TupleMode::Exhaustive => binomial(j.n, args.r),
        TupleMode::ExhaustiveAdjacent => j.n + 1 - args.r as u64,
        TupleMode::Sampled { samples, .. } => samples,
    };
    let identity: Vec<u8> = (1..=args.r as u8).collect();
    let frequencies: BTreeMap<String, f64> = hist
        .iter()
        .map(|(pat, c)| {
            let key = pat
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(",");
            (key, c as f64 / hist.total() as f64)
        })
        .collect();
    let complete = hist.iter().map(|(_, c)| c).sum::<u64>() == hist.total();
    let results = json!({
        "g": table.ctx().g(),
        "n": j.n,
        "histogram": hist,
        "frequencies": frequencies,
        "fraction": hist.frequency(&identity),
        "uniform": 1.0 / frequencies.len() as f64,
        "max_deviation": hist.max_deviation_from_uniform(),
    });
    Ok(Outcome::new(results)
        .check("complete", complete)
        .check("total", hist.total() == expected_total))
}

fn sweep(args: &SweepArgs, seed: u64) -> Result<Vec<RunRecord>, Error> {
    if !(args.fraction > 0.0 && args.fraction <= 1.0) {
        return Err(format!("fraction must lie in (0, 1], got {}", args.fraction).into());
    }
    args.primes
        .par_iter()
        .map(|&p| {
            let start = Instant::now();
            let table = build_table(&build_ctx(p, None)?)?;
            let n = (((p - 1) as f64 * args.fraction).floor() as u64).max(1);
            let j = Progression::initial(n);
            let extreme = extreme_bound_check(&table, &j)?;
            let pv = ExpSums::new(&table).pv_bound_check(&j, None)?;
            let checks = (extreme.capacity.holds(), pv.holds());
            let results = json!({
                "g": table.ctx().g(),
                "n": n,
                "extreme": extreme,
                "c2_estimate": extreme.ratio,
                "pv": pv,
            });
            let outcome = Outcome::new(results)
                .check("short_interval_capacity", checks.0)
                .check("pv_bound", checks.1);
            let config =
                json!({ "command": "sweep", "p": p, "fraction": args.fraction, "seed": seed });
            Ok(record(config, outcome, start))
        })
        .collect()
}
