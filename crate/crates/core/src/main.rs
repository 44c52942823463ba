use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Map, Value};

use skewrig::contfrac::{Alpha, IrrationalSpec};
use skewrig::counterexample::{self, lower_bound_table};
use skewrig::diophantine::{
    sum_inverse_l1, sum_inverse_sq, sum_slice_min_l1_range, sum_slice_min_range, SumReport,
};
use skewrig::dynamics::{build_rigidity_sequence, parse_real, pr_rigidity_check, FourierObservable, RigidityConfig};
use skewrig::flows::{flow_rigidity, rokhlin_rigidity, FlowConfig, LinearFlow, RoofFunction};
use skewrig::mobius::{disjointness_sums, sieve};
use skewrig::{verify, Error};

const DEFAULT_PHI: &str = "trig:1=0.25,0;2=0,-0.125";
const DEFAULT_PRECISION: u32 = 256;
const SUBCOMMANDS: [&str; 8] = ["cf", "sums", "rigidity", "counterexample", "mobius", "flow", "rokhlin", "verify"];

#[derive(Debug, Parser, Serialize)]
#[command(name = "skewrig", version, about = "Diophantine sums and rigidity rates for skew products on the 2-torus")]
struct Cli {
    /// Flat `key = value` file with flag names as keys; flags given on the
    /// command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// `csv`, `jsonl`, or an output path (format taken from the extension).
    #[arg(long, global = true)]
    out: Option<String>,

    /// Output format when `--out` is a path without a known extension.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Partial quotients and convergents.
    Cf(CfArgs),
    /// Reciprocal sums over ‖qα‖.
    Sums(SumsArgs),
    /// Rigidity sequence r_n and the displacement of T^{r_n}.
    Rigidity(RigidityArgs),
    /// The C¹ counterexample and its lower-bound table.
    Counterexample(CounterexampleArgs),
    /// Möbius-weighted orbit averages.
    Mobius(MobiusArgs),
    /// Rigidity of the special flow under a roof.
    Flow(FlowArgs),
    /// Rigidity of a Rokhlin extension.
    Rokhlin(RokhlinArgs),
    /// Run the invariant suite of every module.
    Verify,
}

#[derive(Debug, clap::Args, Serialize)]
struct CfArgs {
    #[arg(long, default_value = "golden")]
    alpha: String,
    #[arg(long, default_value_t = 10)]
    terms: usize,
    /// Add p_n/q_n and the bracket of ‖q_n α‖.
    #[arg(long)]
    convergents: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Lemma {
    InverseSq,
    SliceMin,
    InverseL1,
    SliceMinL1,
}

impl FromStr for Lemma {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "inverse-sq" | "3.2" => Ok(Lemma::InverseSq),
            "slice-min" | "3.3" => Ok(Lemma::SliceMin),
            "inverse-l1" | "6.1" => Ok(Lemma::InverseL1),
            "slice-min-l1" | "6.2" => Ok(Lemma::SliceMinL1),
            _ => Err(format!("unknown sum `{s}` (inverse-sq, slice-min, inverse-l1, slice-min-l1)")),
        }
    }
}

/// A cap `c` for the slice sums: a number, `sqrt` for ⌊√q_k⌋ or `q` for q_k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Cap {
    Value(f64),
    Sqrt,
    Q,
}

impl Cap {
    fn resolve(self, q_k: u64) -> f64 {
        match self {
            Cap::Value(c) => c,
            Cap::Sqrt => ((q_k as f64).sqrt().floor()).max(1.0),
            Cap::Q => q_k as f64,
        }
    }
}

/// A comma- or semicolon-separated list kept as one flag value, so a later
/// occurrence replaces an earlier one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
struct List<T>(Vec<T>);

fn parse_caps(s: &str) -> std::result::Result<List<Cap>, String> {
    s.split(',')
        .map(str::trim)
        .map(|c| match c {
            "sqrt" => Ok(Cap::Sqrt),
            "q" => Ok(Cap::Q),
            _ => parse_real(c).map(Cap::Value).map_err(|e| e.to_string()),
        })
        .collect::<std::result::Result<_, _>>()
        .map(List)
}

#[derive(Debug, clap::Args, Serialize)]
struct SumsArgs {
    #[arg(long, default_value = "golden")]
    alpha: String,
    /// inverse-sq | slice-min | inverse-l1 | slice-min-l1
    #[arg(long, default_value = "inverse-sq")]
    lemma: Lemma,
    #[arg(long, default_value = "5..25", value_parser = parse_range)]
    k_range: (usize, usize),
    /// Comma-separated caps for the slice sums: numbers, `sqrt`, `q`.
    #[arg(long, default_value = "1", value_parser = parse_caps)]
    cap: List<Cap>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
}

#[derive(Debug, clap::Args, Serialize)]
struct RigidityArgs {
    #[arg(long, default_value = "golden")]
    alpha: String,
    #[arg(long, default_value = DEFAULT_PHI)]
    phi: String,
    #[arg(long, default_value_t = 0.005)]
    eps: f64,
    /// Overrides δ = ε/10.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value = "3..20", value_parser = parse_range)]
    n_range: (usize, usize),
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    /// Add the sup-norm column d_sup · r^{ε/200}.
    #[arg(long)]
    sup: bool,
    /// Emit the PR sums for the character e(ax + by).
    #[arg(long, value_parser = parse_pair)]
    pr_check: Option<(i64, i64)>,
}

#[derive(Debug, clap::Args, Serialize)]
struct CounterexampleArgs {
    #[arg(long, default_value = "golden")]
    alpha: String,
    #[arg(long = "K", default_value_t = 41)]
    k: usize,
    #[arg(long, default_value = "8..24", value_parser = parse_range)]
    n_range: (usize, usize),
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
}

#[derive(Debug, clap::Args, Serialize)]
struct MobiusArgs {
    #[arg(long, default_value = "golden")]
    alpha: String,
    #[arg(long, default_value = DEFAULT_PHI)]
    phi: String,
    /// Character frequencies `a,b`; several separated by `;`.
    #[arg(long, default_value = "1,1", value_parser = parse_pairs)]
    freq: List<(i64, i64)>,
    #[arg(long, default_value_t = 0.0)]
    x0: f64,
    #[arg(long, default_value_t = 0.0)]
    y0: f64,
    #[arg(long = "N", default_value = "1e6", value_parser = parse_count)]
    n: u64,
    /// Defaults to the powers of ten below N.
    #[arg(long, value_parser = parse_counts)]
    checkpoints: Option<List<u64>>,
}

#[derive(Debug, clap::Args, Serialize)]
struct FlowArgs {
    #[arg(long, default_value = "golden")]
    alpha: String,
    /// `<phi-spec>+beta`.
    #[arg(long, default_value = "trig:1=0.15,0+1")]
    roof: String,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    t: f64,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Defaults to ε/1000.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value = "3..20", value_parser = parse_range)]
    n_range: (usize, usize),
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    /// Start abscissae for the measured displacement.
    #[arg(long, default_value_t = 16)]
    samples: usize,
}

#[derive(Debug, clap::Args, Serialize)]
struct RokhlinArgs {
    #[arg(long, default_value = "golden")]
    alpha: String,
    #[arg(long, default_value = DEFAULT_PHI)]
    f: String,
    /// `linear:c` or `identity`.
    #[arg(long = "L", default_value = "linear:1")]
    l: String,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value = "3..20", value_parser = parse_range)]
    n_range: (usize, usize),
    #[arg(long, default_value_t = 1024)]
    grid: usize,
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .ok_or_else(|| format!("`{s}` is not a range a..b"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad range start `{a}`"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad range end `{b}`"))?;
    if a > b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok((a, b))
}

fn parse_pair(s: &str) -> std::result::Result<(i64, i64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("`{s}` is not a pair a,b"))?;
    let a = a.trim().parse().map_err(|_| format!("bad integer `{a}`"))?;
    let b = b.trim().parse().map_err(|_| format!("bad integer `{b}`"))?;
    Ok((a, b))
}

fn parse_pairs(s: &str) -> std::result::Result<List<(i64, i64)>, String> {
    s.split(';').map(parse_pair).collect::<std::result::Result<_, _>>().map(List)
}

/// Positive integer, also written as `1e6`.
fn parse_count(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim();
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(63) {
        Ok(x as u64)
    } else {
        Err(format!("`{s}` is not a nonnegative integer"))
    }
}

fn parse_counts(s: &str) -> std::result::Result<List<u64>, String> {
    s.split(',').map(parse_count).collect::<std::result::Result<_, _>>().map(List)
}

/// A named block of rows.
struct Table {
    name: &'static str,
    rows: Vec<Value>,
}

struct Report {
    meta: Map<String, Value>,
    tables: Vec<Table>,
}

impl Report {
    fn new(alpha: Option<&Alpha>) -> Self {
        let mut meta = Map::new();
        if let Some(a) = alpha {
            meta.insert("alpha".into(), json!(a.spec().to_string()));
        }
        Report { meta, tables: Vec::new() }
    }

    fn table<T: Serialize>(&mut self, name: &'static str, rows: &[T]) {
        let rows = rows.iter().map(|r| serde_json::to_value(r).expect("rows serialize")).collect();
        self.tables.push(Table { name, rows });
    }
}

enum Failure {
    Usage(String),
    Lib(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(io::Error::other(e))
    }
}

fn precision_bits() -> Result<u32, Failure> {
    match std::env::var("SKEWRIG_PRECISION_BITS") {
        Err(_) => Ok(DEFAULT_PRECISION),
        Ok(v) => match v.trim().parse::<u32>() {
            Ok(b) if (64..=1 << 16).contains(&b) => Ok(b),
            _ => Err(Failure::Usage(format!(
                "invalid SKEWRIG_PRECISION_BITS `{v}`: expected an integer in [64, 65536]"
            ))),
        },
    }
}

fn alpha(spec: &str, bits: u32) -> Result<Alpha, Failure> {
    Ok(Alpha::with_precision(spec.parse::<IrrationalSpec>()?, bits)?)
}

/// Integers as JSON numbers when they fit in 64 bits, strings otherwise.
fn big(v: &BigInt) -> Value {
    match v.to_i64() {
        Some(x) => json!(x),
        None => json!(v.to_string()),
    }
}

fn run_cf(args: &CfArgs, bits: u32) -> Result<Report, Failure> {
    let a = alpha(&args.alpha, bits)?;
    let mut report = Report::new(Some(&a));
    let mut rows = Vec::with_capacity(args.terms + 1);
    for n in 0..=args.terms {
        let conv = a.convergent(n)?;
        let mut row = json!({
            "n": n,
            "a_n": big(a.quotient(n)?),
            "p_n": big(&conv.p),
            "q_n": big(&conv.q),
        });
        if args.convergents {
            let norm = a.dist_nearest_int(&conv.q, 64)?;
            let obj = row.as_object_mut().expect("object");
            obj.insert("p_over_q".into(), json!(conv.p.to_f64().unwrap_or(f64::NAN) / conv.q.to_f64().unwrap_or(f64::NAN)));
            obj.insert("q_norm_lo".into(), json!(norm.lo_f64()));
            obj.insert("q_norm_hi".into(), json!(norm.hi_f64()));
        }
        rows.push(row);
    }
    report.tables.push(Table { name: "cf", rows });
    Ok(report)
}

fn sum_row(r: &SumReport, elapsed: f64) -> Value {
    json!({
        "k": r.k,
        "q_k": r.q_k,
        "c": r.c,
        "eps": r.eps,
        "value": r.value,
        "value_lo": r.value_lo,
        "value_hi": r.value_hi,
        "normalized_ratio": r.normalized_ratio,
        "term_count": r.term_count,
        "exact": r.exact,
        "elapsed_ms": elapsed,
    })
}

fn run_sums(args: &SumsArgs, bits: u32) -> Result<Report, Failure> {
    let a = alpha(&args.alpha, bits)?;
    let mut report = Report::new(Some(&a));
    let mut rows = Vec::new();
    for k in args.k_range.0..=args.k_range.1 {
        let start = Instant::now();
        let reports = match args.lemma {
            Lemma::InverseSq => vec![sum_inverse_sq(&a, k)?],
            Lemma::InverseL1 => vec![sum_inverse_l1(&a, k)?],
            Lemma::SliceMin => {
                let caps = |_: usize, q: u64| args.cap.0.iter().map(|c| c.resolve(q)).collect();
                sum_slice_min_range(&a, k..=k, &caps)?.remove(0)
            }
            Lemma::SliceMinL1 => {
                let caps = |_: usize, q: u64| args.cap.0.iter().map(|c| c.resolve(q)).collect();
                sum_slice_min_l1_range(&a, k..=k, args.eps, &caps)?.remove(0)
            }
        };
        let elapsed = start.elapsed().as_secs_f64() * 1e3 / reports.len() as f64;
        rows.extend(reports.iter().map(|r| sum_row(r, elapsed)));
    }
    report.tables.push(Table { name: "sums", rows });
    Ok(report)
}

fn run_rigidity(args: &RigidityArgs, bits: u32) -> Result<Report, Failure> {
    let a = alpha(&args.alpha, bits)?;
    let phi: FourierObservable = args.phi.parse()?;
    let mut config = RigidityConfig::new(args.eps, args.n_range.0, args.n_range.1);
    config.grid_size = args.grid;
    if let Some(d) = args.delta {
        config.delta = d;
    }
    config.validate()?;
    if !config.in_hypothesis() {
        eprintln!(
            "warning: eps = {} lies outside (0, 0.01); the rate is not covered by the theory, proceeding",
            args.eps
        );
    }
    let mut report = Report::new(Some(&a));
    report.meta.insert("in_hypothesis".into(), json!(config.in_hypothesis()));
    report.meta.insert("delta".into(), json!(config.delta));
    report.meta.insert("lambda".into(), json!(config.lambda));
    let entries = build_rigidity_sequence(&a, &phi, &config)?;
    let rows = entries
        .iter()
        .map(|e| {
            let mut v = serde_json::to_value(e).expect("rows serialize");
            let obj = v.as_object_mut().expect("object");
            let r = e.r_n as f64;
            obj.insert("normalized".into(), json!(e.d_l2_hat * r.powf(args.eps / 100.0)));
            if args.sup {
                obj.insert("sup_normalized".into(), json!(e.d_sup * r.powf(args.eps / 200.0)));
            }
            v
        })
        .collect();
    report.tables.push(Table { name: "rigidity", rows });
    if let Some(freq) = args.pr_check {
        let pr = pr_rigidity_check(&a, &phi, &config, freq)?;
        report.table("pr_check", &pr);
    }
    Ok(report)
}

fn run_counterexample(args: &CounterexampleArgs, bits: u32) -> Result<Report, Failure> {
    let a = alpha(&args.alpha, bits)?;
    let phi = counterexample::build(&a, args.k)?;
    let mut report = Report::new(Some(&a));
    report.meta.insert("normalization_c".into(), json!(phi.c()));
    report.meta.insert("variation_bound".into(), json!(phi.variation_bound()));
    let rows = lower_bound_table(&phi, args.n_range.0, args.n_range.1, args.grid, args.delta)?;
    report.table("counterexample", &rows);
    Ok(report)
}

fn run_mobius(args: &MobiusArgs, bits: u32) -> Result<Report, Failure> {
    let a = alpha(&args.alpha, bits)?;
    let phi: FourierObservable = args.phi.parse()?;
    let checkpoints = match &args.checkpoints {
        Some(c) => c.0.clone(),
        None => std::iter::successors(Some(10u64), |&c| c.checked_mul(10))
            .take_while(|&c| c < args.n)
            .collect(),
    };
    let profiles = disjointness_sums(&a, &phi, &args.freq.0, (args.x0, args.y0), args.n, &checkpoints)?;
    let size = usize::try_from(args.n).map_err(|_| Error::Resource("N exceeds the address space".into()))?;
    let mu = sieve(size)?;
    let mut report = Report::new(Some(&a));
    let mut rows = Vec::new();
    for p in &profiles {
        for c in &p.checkpoints {
            let m = mu.mertens(c.n as usize);
            rows.push(json!({
                "a": p.freq.0,
                "b": p.freq.1,
                "n": c.n,
                "re": c.re,
                "im": c.im,
                "abs": c.abs,
                "mertens": m,
                "mertens_ratio": m as f64 / c.n as f64,
            }));
        }
    }
    report.tables.push(Table { name: "mobius", rows });
    Ok(report)
}

fn run_flow(args: &FlowArgs, bits: u32) -> Result<Report, Failure> {
    let a = alpha(&args.alpha, bits)?;
    let roof: RoofFunction = args.roof.parse()?;
    let mut config = FlowConfig::new(args.t, args.eps, args.n_range.0, args.n_range.1);
    if let Some(g) = args.gamma {
        config.gamma = g;
    }
    config.grid_size = args.grid;
    config.sample_points = args.samples;
    let mut report = Report::new(Some(&a));
    report.meta.insert("roof_min".into(), json!(roof.min()));
    report.meta.insert("beta".into(), json!(roof.beta()));
    let rows = flow_rigidity(&a, &roof, &config)?;
    report.table("flow", &rows);
    Ok(report)
}

fn run_rokhlin(args: &RokhlinArgs, bits: u32) -> Result<Report, Failure> {
    let a = alpha(&args.alpha, bits)?;
    let f: FourierObservable = args.f.parse()?;
    let flow: LinearFlow = args.l.parse()?;
    let rows = rokhlin_rigidity(&a, &f, &flow, args.eps, args.n_range.0, args.n_range.1, args.grid)?;
    let mut report = Report::new(Some(&a));
    report.table("rokhlin", &rows);
    Ok(report)
}

/// Rows of the verify report and whether every check passed.
fn run_verify() -> (Report, bool) {
    let results = verify::run_all();
    let ok = results.iter().all(|r| r.pass);
    for r in results.iter().filter(|r| !r.pass) {
        eprintln!("FAIL {}::{}: {}", r.module, r.name, r.detail);
    }
    let mut report = Report::new(None);
    report.meta.insert("all_pass".into(), json!(ok));
    report.table("verify", &results);
    (report, ok)
}

/// Nested objects and arrays become dotted keys.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&key(k), x, out)),
        Value::Array(xs) => xs.iter().enumerate().for_each(|(i, x)| flatten(&key(&i.to_string()), x, out)),
        _ => out.push((prefix.to_string(), v.clone())),
    }
}

/// 17 significant digits for floats, integers verbatim.
fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_f64() => format!("{:.16e}", n.as_f64().expect("f64") + 0.0),
        Value::Number(n) => n.to_string(),
        other => other.to_string(),
    }
}

fn write_csv(w: &mut dyn Write, header: &[String], tables: &[Table]) -> Result<(), Failure> {
    for line in header {
        writeln!(w, "# {line}")?;
    }
    for table in tables {
        writeln!(w, "# table: {}", table.name)?;
        let mut wtr = csv::Writer::from_writer(&mut *w);
        let mut first = true;
        for row in &table.rows {
            let mut cells = Vec::new();
            flatten("", row, &mut cells);
            if first {
                wtr.write_record(cells.iter().map(|(k, _)| k.as_str()))?;
                first = false;
            }
            wtr.write_record(cells.iter().map(|(_, v)| csv_cell(v)))?;
        }
        wtr.flush()?;
    }
    Ok(())
}

fn write_jsonl(w: &mut dyn Write, meta: Option<(&Value, &str)>, tables: &[Table]) -> Result<(), Failure> {
    if let Some((meta, timestamp)) = meta {
        writeln!(w, "{}", json!({ "meta": meta }))?;
        writeln!(w, "{}", json!({ "timestamp": timestamp }))?;
    }
    let tagged = tables.len() > 1;
    for table in tables {
        for row in &table.rows {
            if tagged {
                let mut obj = Map::new();
                obj.insert("table".into(), json!(table.name));
                if let Value::Object(m) = row {
                    obj.extend(m.clone());
                }
                writeln!(w, "{}", Value::Object(obj))?;
            } else {
                writeln!(w, "{row}")?;
            }
        }
    }
    Ok(())
}

/// Where the output goes and in which format.
fn resolve_out(cli: &Cli) -> (Option<PathBuf>, Format) {
    let default = match cli.command {
        Command::Cf(_) => Format::Jsonl,
        _ => Format::Csv,
    };
    match cli.out.as_deref() {
        None => (None, cli.format.unwrap_or(default)),
        Some("csv") => (None, Format::Csv),
        Some("jsonl") => (None, Format::Jsonl),
        Some(path) => {
            let path = PathBuf::from(path);
            let by_ext = match path.extension().and_then(|e| e.to_str()) {
                Some("csv") => Some(Format::Csv),
                Some("jsonl") | Some("json") => Some(Format::Jsonl),
                _ => None,
            };
            (Some(path), cli.format.or(by_ext).unwrap_or(default))
        }
    }
}

fn emit(cli: &Cli, bits: u32, mut report: Report) -> Result<(), Failure> {
    let (path, format) = resolve_out(cli);
    let mut meta = Map::new();
    meta.insert("tool".into(), json!(format!("skewrig {}", env!("CARGO_PKG_VERSION"))));
    meta.insert("config".into(), serde_json::to_value(cli).expect("config serializes"));
    meta.insert("precision_bits".into(), json!(bits));
    meta.append(&mut report.meta);
    let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let mut header: Vec<String> = meta
        .iter()
        .map(|(k, v)| match v {
            Value::String(s) => format!("{k}: {s}"),
            _ => format!("{k}: {v}"),
        })
        .collect();
    header.push(format!("timestamp: {timestamp}"));
    let meta = Value::Object(meta);
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(&p)?);
            match format {
                Format::Csv => write_csv(&mut w, &header, &report.tables)?,
                Format::Jsonl => write_jsonl(&mut w, Some((&meta, &timestamp)), &report.tables)?,
            }
            w.flush()?;
        }
        None => {
            // stdout carries only the rows; the header goes to stderr
            for line in &header {
                eprintln!("# {line}");
            }
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            match format {
                Format::Csv => write_csv(&mut w, &[], &report.tables)?,
                Format::Jsonl => write_jsonl(&mut w, None, &report.tables)?,
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// `key = value` lines as `--key value` arguments.
fn config_args(path: &Path) -> Result<(Option<String>, Vec<String>), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config `{}`: {e}", path.display())))?;
    let mut command = None;
    let mut args = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        let value = v.trim().trim_matches('"').to_string();
        match key.as_str() {
            "command" => command = Some(value),
            "config" => return Err(Failure::Usage("config files cannot include other config files".into())),
            _ => match value.as_str() {
                "true" => args.push(format!("--{key}")),
                "false" => {}
                _ => {
                    args.push(format!("--{key}"));
                    args.push(value);
                }
            },
        }
    }
    Ok((command, args))
}

/// Splices the config file's arguments ahead of the command-line ones so the
/// latter override them.
fn merged_argv(argv: Vec<String>) -> Result<Vec<String>, Failure> {
    let config = argv.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            argv.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    });
    let Some(config) = config else {
        return Ok(argv);
    };
    let (command, file_args) = config_args(Path::new(&config))?;
    let sub = argv.iter().skip(1).position(|a| SUBCOMMANDS.contains(&a.as_str())).map(|p| p + 1);
    let mut out = Vec::new();
    match (sub, command) {
        (Some(p), _) => {
            out.extend_from_slice(&argv[..=p]);
            out.extend(file_args);
            out.extend_from_slice(&argv[p + 1..]);
        }
        (None, Some(c)) => {
            out.push(argv[0].clone());
            out.push(c);
            out.extend(file_args);
            out.extend_from_slice(&argv[1..]);
        }
        (None, None) => out.extend(argv),
    }
    Ok(out)
}

fn parse_cli() -> Result<Cli, Failure> {
    let argv = merged_argv(std::env::args().collect())?;
    let command = Cli::command()
        .args_override_self(true)
        .mut_subcommands(|s| s.args_override_self(true));
    let matches: ArgMatches = match command.try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            std::process::exit(code);
        }
    };
    Cli::from_arg_matches(&matches).map_err(|e| Failure::Usage(e.to_string()))
}

fn run() -> Result<bool, Failure> {
    let cli = parse_cli()?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("invalid argument `threads`: must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let bits = precision_bits()?;
    let (report, ok) = match &cli.command {
        Command::Cf(a) => (run_cf(a, bits)?, true),
        Command::Sums(a) => (run_sums(a, bits)?, true),
        Command::Rigidity(a) => (run_rigidity(a, bits)?, true),
        Command::Counterexample(a) => (run_counterexample(a, bits)?, true),
        Command::Mobius(a) => (run_mobius(a, bits)?, true),
        Command::Flow(a) => (run_flow(a, bits)?, true),
        Command::Rokhlin(a) => (run_rokhlin(a, bits)?, true),
        Command::Verify => run_verify(),
    };
    emit(&cli, bits, report)?;
    Ok(ok)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument { .. } | Error::InvalidSpec(_) | Error::NotIrrational(_) => ExitCode::from(2),
                Error::PrecisionExhausted(_) => {
                    eprintln!("hint: raise SKEWRIG_PRECISION_BITS (currently {}) or supply more digits of alpha", std::env::var("SKEWRIG_PRECISION_BITS").unwrap_or_else(|_| DEFAULT_PRECISION.to_string()));
                    ExitCode::from(3)
                }
                _ => ExitCode::from(1),
            }
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
