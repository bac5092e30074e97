use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use qcuntz::analysis::{
    check_eigenvalue_laws, check_shift_identity, check_structure_bc, q_wold, relation_residuals, sample_intervals,
    series_check, spectrum_check, AnalysisError, ResidualReport, Status,
};
use qcuntz::classify::{detect_parameters, normalize_x, same_rep, FundamentalDomain};
use qcuntz::rep::{build_generators, FamilyTag, GeneratorExport, GeneratorSet, RepSpec, SparseOperator, Truncation};
use qcuntz::wick::{confluence_probe, normal_form, parse_expr};

mod spec_string;

const SCHEMA_VERSION: &str = "1";

#[derive(Parser)]
#[command(name = "qcuntz", version, about = "Truncated representations of the q-deformed Cuntz-Toeplitz relations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build basis and generator matrices for one family
    Build {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run every identity check on a built family
    Verify {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sampled interval sets per generator for the shift identity
        #[arg(long, default_value_t = 20)]
        intervals: usize,
        /// Series terms K
        #[arg(long, default_value_t = 20)]
        terms: usize,
        /// Perturb one generator weight by this amount (negative control)
        #[arg(long)]
        corrupt: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// q-Wold decomposition of the generators in a matrix file
    Wold {
        #[arg(long)]
        input: PathBuf,
        /// Decompose only this generator (1-based)
        #[arg(long)]
        generator: Option<usize>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        x0: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Decide equivalence of two listed representations
    Classify {
        /// "family:j:param", e.g. "unbounded:1:2.2"
        #[arg(long)]
        spec1: String,
        #[arg(long)]
        spec2: String,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        x0: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Orbit representative of y in (1 + q x0, x0]
    Normalize {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        y: f64,
        #[arg(long)]
        x0: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Wick normal form of an expression in a_k, a_k*
    Wick {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        expr: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare leftmost and rightmost rewriting on random words
    Confluence {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args, Clone, Debug)]
struct FamilyArgs {
    /// fock1 | circle | linez | fockn | unbounded | bounded
    #[arg(long)]
    family: String,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    j: Option<u32>,
    #[arg(long)]
    x: Option<f64>,
    /// Radians for circle, turns for bounded
    #[arg(long)]
    phi: Option<f64>,
    /// Maximum word length
    #[arg(long = "L", default_value_t = 4)]
    max_len: usize,
    #[arg(long, default_value_t = -8, allow_hyphen_values = true)]
    smin: i64,
    #[arg(long, default_value_t = 8, allow_hyphen_values = true)]
    smax: i64,
}

#[derive(Args, Clone, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add wall time to the report (breaks byte-identical output)
    #[arg(long)]
    timing: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

/// Invalid input; exit code 2.
#[derive(Debug)]
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(status) => ExitCode::from(exit_code(status)),
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn exit_code(status: Status) -> u8 {
    match status {
        Status::Pass => 0,
        Status::Fail | Status::Inconclusive => 1,
    }
}

fn run(command: Command) -> Result<Status, InputError> {
    let started = Instant::now();
    let (name, output, config, status, payload) = match command {
        Command::Build { family, output } => {
            let (spec, trunc) = family_spec(&family)?;
            let config = json!({ "spec": spec, "truncation": trunc });
            (
                "build",
                output,
                config,
                Status::Pass,
                cmd_build(&spec, &trunc)?,
            )
        }
        Command::Verify { family, tol, seed, intervals, terms, corrupt, output } => {
            let (spec, trunc) = family_spec(&family)?;
            let config = json!({
                "spec": spec, "truncation": trunc, "tol": tol, "seed": seed,
                "intervals": intervals, "terms": terms, "corrupt": corrupt,
            });
            let (status, payload) = cmd_verify(&spec, &trunc, tol, seed, intervals, terms, corrupt)?;
            ("verify", output, config, status, payload)
        }
        Command::Wold { input, generator, tol, x0, output } => {
            let file = read_matrix_file(&input)?;
            let x0 = resolve_x0(file.q, x0)?;
            let config = json!({ "input": input, "generator": generator, "tol": tol, "x0": x0 });
            let (status, payload) = cmd_wold(&file, generator, tol, x0)?;
            ("wold", output, config, status, payload)
        }
        Command::Classify { spec1, spec2, q, n, x0, output } => {
            let n = n.unwrap_or_else(|| spec_string::default_n(&spec1, &spec2));
            let a = spec_string::parse(&spec1, q, n)?;
            let b = spec_string::parse(&spec2, q, n)?;
            let x0 = match (a.tag(), b.tag(), x0) {
                (FamilyTag::UnboundedXJ | FamilyTag::LineZ, _, _) | (_, FamilyTag::UnboundedXJ | FamilyTag::LineZ, _) => {
                    Some(resolve_x0(q, x0)?)
                }
                _ => x0,
            };
            let decision = same_rep(&a, &b, x0)?;
            let config = json!({ "spec1": a, "spec2": b, "q": q, "n": n, "x0": x0 });
            ("classify", output, config, Status::Pass, serde_json::to_value(decision)?)
        }
        Command::Normalize { q, y, x0, output } => {
            let x0 = resolve_x0(q, x0)?;
            let p = normalize_x(y, q, x0)?;
            let domain = FundamentalDomain::new(q, x0)?;
            let payload = json!({
                "x": p.x, "shift": p.shift, "input": p.input,
                "domain": [domain.lower(), domain.x0], "display": p.to_string(),
            });
            ("normalize", output, json!({ "q": q, "y": y, "x0": x0 }), Status::Pass, payload)
        }
        Command::Wick { n, expr, output } => {
            let raw = parse_expr(&expr, n)?;
            let nf = normal_form(&raw);
            let monomials: Vec<Value> = nf
                .monomials()
                .iter()
                .map(|m| {
                    json!({
                        "creators": m.creators.letters().iter().map(|l| l.get()).collect::<Vec<_>>(),
                        "annihilators": m.annihilators.letters().iter().map(|l| l.get()).collect::<Vec<_>>(),
                        "coeff": m.coeff.to_string(),
                    })
                })
                .collect();
            let payload = json!({ "normal_form": nf.operator_string(), "monomials": monomials });
            ("wick", output, json!({ "n": n, "expr": expr }), Status::Pass, payload)
        }
        Command::Confluence { n, max_len, trials, seed, output } => {
            if n == 0 {
                return Err(InputError("n must be at least 1".into()));
            }
            let report = confluence_probe(n, max_len, trials, seed);
            let status = if report.mismatches == 0 { Status::Pass } else { Status::Fail };
            let config = json!({ "n": n, "max_len": max_len, "trials": trials, "seed": seed });
            ("confluence", output, config, status, serde_json::to_value(report)?)
        }
    };

    let mut doc = Map::new();
    doc.insert("schema_version".into(), json!(SCHEMA_VERSION));
    doc.insert("command".into(), json!(name));
    let mut config = config;
    config["format"] = json!(output.format);
    doc.insert("config".into(), config);
    doc.insert("status".into(), serde_json::to_value(status)?);
    doc.insert("pass".into(), json!(status == Status::Pass));
    if let Value::Object(fields) = payload {
        doc.extend(fields);
    }
    if output.timing {
        doc.insert("wall_time_ms".into(), json!(started.elapsed().as_secs_f64() * 1e3));
    }
    let doc = Value::Object(doc);
    let text = match output.format {
        Format::Json => serde_json::to_string_pretty(&doc)? + "\n",
        Format::Csv => to_csv(&doc),
    };
    match &output.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(status)
}

fn family_spec(f: &FamilyArgs) -> Result<(RepSpec, Truncation), InputError> {
    let tag = FamilyTag::from_cli_name(&f.family).ok_or_else(|| InputError(format!("unknown family {:?}", f.family)))?;
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| InputError(format!("--{name} is required for {}", f.family)));
    let forbid = |present: bool, name: &str| {
        if present {
            Err(InputError(format!("--{name} does not apply to {}", f.family)))
        } else {
            Ok(())
        }
    };
    let single = matches!(tag, FamilyTag::FockQ1 | FamilyTag::Circle | FamilyTag::LineZ);
    if single && f.n.is_some_and(|n| n != 1) {
        return Err(InputError(format!("{} has a single generator", f.family)));
    }
    let n = || f.n.ok_or_else(|| InputError(format!("--n is required for {}", f.family)));
    let j = || f.j.ok_or_else(|| InputError(format!("--j is required for {}", f.family)));
    let q = f.q;
    let spec = match tag {
        FamilyTag::FockQ1 => {
            forbid(f.x.is_some(), "x")?;
            forbid(f.phi.is_some(), "phi")?;
            forbid(f.j.is_some(), "j")?;
            RepSpec::FockQ1 { q }
        }
        FamilyTag::Circle => {
            forbid(f.x.is_some(), "x")?;
            forbid(f.j.is_some_and(|j| j != 1), "j")?;
            RepSpec::Circle { q, phi: need(f.phi, "phi")? }
        }
        FamilyTag::LineZ => {
            forbid(f.phi.is_some(), "phi")?;
            forbid(f.j.is_some_and(|j| j != 1), "j")?;
            RepSpec::LineZ { q, x: need(f.x, "x")? }
        }
        FamilyTag::FockQn => {
            forbid(f.x.is_some(), "x")?;
            forbid(f.phi.is_some(), "phi")?;
            forbid(f.j.is_some(), "j")?;
            RepSpec::FockQn { q, n: n()? }
        }
        FamilyTag::UnboundedXJ => {
            forbid(f.phi.is_some(), "phi")?;
            RepSpec::UnboundedXJ { q, n: n()?, j: j()?, x: need(f.x, "x")? }
        }
        FamilyTag::BoundedPhiJ => {
            forbid(f.x.is_some(), "x")?;
            RepSpec::BoundedPhiJ { q, n: n()?, j: j()?, phi: need(f.phi, "phi")? }
        }
    };
    spec.validate()?;
    let trunc = match tag {
        FamilyTag::FockQ1 => Truncation::new(0, 0, f.smax),
        FamilyTag::Circle => Truncation::new(0, 0, 0),
        FamilyTag::LineZ => Truncation::new(0, f.smin, f.smax),
        FamilyTag::FockQn | FamilyTag::BoundedPhiJ => Truncation::new(f.max_len, 0, 0),
        FamilyTag::UnboundedXJ => Truncation::new(f.max_len, f.smin, f.smax),
    };
    if trunc.s_min > trunc.s_max {
        return Err(InputError(format!("empty level window [{}, {}]", trunc.s_min, trunc.s_max)));
    }
    Ok((spec, trunc))
}

fn resolve_x0(q: f64, x0: Option<f64>) -> Result<f64, InputError> {
    let domain = match x0 {
        Some(x0) => FundamentalDomain::new(q, x0)?,
        None if q > 0.0 => FundamentalDomain::default_for(q)?,
        // no unbounded families at q = 0; any x0 above 1 is inert
        None => return Ok(2.0),
    };
    Ok(domain.x0)
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixFile {
    schema_version: String,
    q: f64,
    #[serde(default)]
    spec: Option<RepSpec>,
    generators: Vec<GeneratorExport>,
}

fn cmd_build(spec: &RepSpec, trunc: &Truncation) -> Result<Value, InputError> {
    let family = build_generators(spec, trunc)?;
    let gs = family.generator_set();
    let generators: Vec<GeneratorExport> = family
        .generator_coo()
        .into_iter()
        .zip(gs.interior)
        .map(|(operator, interior)| GeneratorExport { operator, interior })
        .collect();
    Ok(json!({
        "q": family.q(),
        "spec": spec,
        "dim": family.dim(),
        "basis": family.basis().export(),
        "generators": generators,
    }))
}

fn read_matrix_file(path: &Path) -> Result<MatrixFile, InputError> {
    let text = fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    let file: MatrixFile = serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(InputError(format!("unsupported schema_version {:?}", file.schema_version)));
    }
    Ok(file)
}

fn generator_set(file: &MatrixFile) -> Result<GeneratorSet, InputError> {
    let generators = file
        .generators
        .iter()
        .map(|g| SparseOperator::try_from(&g.operator))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(first) = generators.first() {
        let shape = first.shape();
        if generators.iter().any(|g| g.shape() != shape) {
            return Err(InputError("generators have different shapes".into()));
        }
    }
    Ok(GeneratorSet { q: file.q, generators, interior: file.generators.iter().map(|g| g.interior.clone()).collect() })
}

fn cmd_wold(file: &MatrixFile, only: Option<usize>, tol: f64, x0: f64) -> Result<(Status, Value), InputError> {
    let gs = generator_set(file)?;
    let selected: Vec<usize> = match only {
        Some(k) if k == 0 || k > gs.n() => return Err(InputError(format!("generator {k} outside 1..={}", gs.n()))),
        Some(k) => vec![k],
        None => (1..=gs.n()).collect(),
    };
    let mut status = Status::Pass;
    let mut results = Vec::new();
    for k in selected {
        let entry = match q_wold(&gs.generators[k - 1], &gs.interior[k - 1], gs.q, tol, x0) {
            Ok(w) => json!({ "generator": k, "decomposition": w }),
            Err(e @ (AnalysisError::RejectInput { .. } | AnalysisError::UnclassifiedRemainder { .. })) => {
                status = Status::Fail;
                json!({ "generator": k, "rejected": e.to_string(), "reason": reason(&e) })
            }
            Err(e) => return Err(e.into()),
        };
        results.push(entry);
    }
    let mut payload = json!({ "decompositions": results });
    if only.is_none() && status == Status::Pass {
        payload["detected"] = match detect_parameters(&gs, tol, Some(x0)) {
            Ok(spec) => json!(spec),
            Err(e) => json!({ "unrecognized": e.to_string() }),
        };
    }
    Ok((status, payload))
}

fn reason(e: &AnalysisError) -> Value {
    match e {
        AnalysisError::RejectInput { residual, tol } => json!({ "kind": "reject_input", "residual": residual, "tol": tol }),
        AnalysisError::UnclassifiedRemainder { eigenvalues } => {
            json!({ "kind": "unclassified_remainder", "eigenvalues": eigenvalues })
        }
        _ => json!({ "kind": "other" }),
    }
}

fn cmd_verify(
    spec: &RepSpec,
    trunc: &Truncation,
    tol: f64,
    seed: u64,
    intervals: usize,
    terms: usize,
    corrupt: Option<f64>,
) -> Result<(Status, Value), InputError> {
    let mut family = build_generators(spec, trunc)?;
    if let Some(eps) = corrupt {
        let k = spec.j().unwrap_or(1);
        let col = family
            .interior(2)
            .into_iter()
            .chain(0..family.dim())
            .find(|&v| family.generator(k).column_norm(v) > 0.0)
            .ok_or_else(|| InputError("no nonzero weight to corrupt".into()))?;
        family = family.with_corrupted_weight(k, col, eps)?;
    }
    let mut checks: Vec<Value> = Vec::new();
    let mut push = |r: &ResidualReport, extra: Value| {
        let mut v = serde_json::to_value(r).expect("report serializes");
        if let Value::Object(fields) = extra {
            v.as_object_mut().expect("object").extend(fields);
        }
        checks.push(v);
    };
    push(&relation_residuals(&family, tol), Value::Null);
    for k in 1..=family.n() {
        let sets = sample_intervals(&family, k, intervals, seed);
        push(&check_shift_identity(&family, k, &sets, tol), Value::Null);
    }
    push(&check_structure_bc(&family, tol), Value::Null);
    push(&check_eigenvalue_laws(&family, tol), Value::Null);
    for k in 1..=family.n() {
        let s = spectrum_check(&family, k, tol);
        push(&s.report, json!({ "eigenvalues": s.eigenvalues, "predicted": s.predicted }));
    }
    if spec.tag() != FamilyTag::LineZ {
        let s = series_check(&family, terms, tol);
        push(
            &s.report,
            json!({
                "terms": s.terms, "tail_bound": s.tail_bound, "sqrt_form_residual": s.sqrt_form_residual,
                "plain_form_residual": s.plain_form_residual, "plain_form_discrepancy": s.plain_form_discrepancy,
            }),
        );
    }
    let statuses: Vec<Status> = checks
        .iter()
        .map(|c| serde_json::from_value(c["status"].clone()).expect("status field"))
        .collect();
    let status = if statuses.contains(&Status::Fail) {
        Status::Fail
    } else if statuses.contains(&Status::Inconclusive) {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    Ok((status, json!({ "dim": family.dim(), "checks": checks })))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// One row per check when the report has checks, otherwise one
/// `path,value` row per leaf.
fn to_csv(doc: &Value) -> String {
    let mut out = String::new();
    if let Some(checks) = doc["checks"].as_array() {
        out.push_str("check,status,max_residual,tolerance,vectors_checked\n");
        for c in checks {
            let row: Vec<String> = ["check", "status", "max_residual", "tolerance", "vectors_checked"]
                .iter()
                .map(|k| csv_field(&scalar(&c[*k])))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        return out;
    }
    fn walk(prefix: &str, v: &Value, out: &mut String) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    walk(&if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") }, x, out);
                }
            }
            Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), x, out);
                }
            }
            leaf => {
                out.push_str(&csv_field(prefix));
                out.push(',');
                out.push_str(&csv_field(&scalar(leaf)));
                out.push('\n');
            }
        }
    }
    out.push_str("field,value\n");
    walk("", doc, &mut out);
    out
}
