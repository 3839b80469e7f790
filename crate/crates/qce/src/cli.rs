//! Command-line driver. Exit codes: 0 success, 1 input error, 2 numeric
//! defect.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use qce_core::circuit::{Bubble, Circuit};
use qce_core::histories::{consistency_check, history_tables, sample_histories, HistoryDistribution};
use qce_core::influence::{influence_graph, PlacedDecomp};
use qce_core::linalg::{haar_random_unitary, set_max_dim};
use qce_core::preference::{check_influence_pattern, preferred_set};
use qce_core::scenarios::{
    bell_instance, build_prepare_measure, build_wigners_friend, classify_bell, classify_complementarity,
    classify_local_friendliness, classify_pbr, classify_wigner, complementarity_instance, local_friendliness_instance,
    operational_three_box, pbr_instance, PbrEvents, ScenarioKind, ScenarioSpec,
};
use qce_core::{DEFAULT_MAX_DIM, DEFAULT_TOL, INFLUENCE_TOL};
use serde_json::{json, Map, Value};

use crate::formats::{
    bubble_from_json, circuit_from_json, circuit_to_json, decomps_from_json, matrix_to_json, spec_from_json,
    spec_to_json, FormatError,
};
use crate::json::{num, to_canonical};
use crate::reports;

/// Environment variable overriding the total-dimension cap.
pub const MAX_DIM_VAR: &str = "QCE_MAX_DIM";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read `{path}`: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write `{path}`: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("in `{path}`: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error(transparent)]
    Core(#[from] qce_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        let numeric = match self {
            CliError::Core(e) => e.is_numeric_defect(),
            CliError::Format { source: FormatError::Core(e), .. } => e.is_numeric_defect(),
            _ => false,
        };
        if numeric {
            2
        } else {
            1
        }
    }

    /// Message plus one line per circuit diagnostic.
    pub fn describe(&self) -> String {
        let mut s = self.to_string();
        let diags = match self {
            CliError::Core(qce_core::Error::InvalidCircuit(d)) => Some(d),
            CliError::Format { source: FormatError::Core(qce_core::Error::InvalidCircuit(d)), .. } => Some(d),
            _ => None,
        };
        for d in diags.into_iter().flatten() {
            s.push_str(&format!("\n  {}: {d}", d.kind()));
        }
        s
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "qce", version, about = "Interference-influence analysis of unitary circuits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Numerical tolerance.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, clap::Args)]
pub struct EventSource {
    #[arg(long)]
    pub circuit: PathBuf,
    /// Bubble whose preferred set supplies the decompositions.
    #[arg(long, conflicts_with = "decomps")]
    pub bubble: Option<PathBuf>,
    /// Entry to use when the bubble file holds several named bubbles.
    #[arg(long)]
    pub bubble_name: Option<String>,
    /// Explicit placed decompositions.
    #[arg(long)]
    pub decomps: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a circuit for structural problems.
    Validate {
        #[arg(long)]
        circuit: PathBuf,
    },
    /// Interference influences between placed decompositions.
    Influences {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        decomps: PathBuf,
    },
    /// Preferred decompositions of a bubble and their influence pattern.
    PreferredSet {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        bubble: PathBuf,
        #[arg(long)]
        bubble_name: Option<String>,
    },
    /// History distribution and consistency verdict.
    Histories {
        #[command(flatten)]
        source: EventSource,
    },
    /// Seeded history samples.
    Sample {
        #[command(flatten)]
        source: EventSource,
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
    /// Classify a scenario specification.
    Classify {
        #[arg(long)]
        spec: PathBuf,
        /// Circuit for specs that do not inline one.
        #[arg(long)]
        circuit: Option<PathBuf>,
        /// Condition Bell statistics on this preparation event.
        #[arg(long)]
        event: Option<usize>,
    },
    /// Template circuits and specs.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScenarioAction {
    /// Emit a template; `--seed` picks the random unitary where there is one.
    Build {
        #[arg(value_enum)]
        template: Template,
        /// Box checked by the three-box template.
        #[arg(long = "box", default_value_t = 0)]
        box_choice: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Template {
    PrepareMeasure,
    PrepareMeasureExtended,
    WignersFriend,
    ThreeBox,
    Complementarity,
    Bell,
    BellProduct,
    Pbr,
    LocalFriendliness,
}

/// A finished command: report text and exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub code: i32,
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|e| CliError::Format { path: path.to_path_buf(), source: e.into() })
}

fn in_file<T>(path: &Path, r: Result<T, FormatError>) -> CliResult<T> {
    r.map_err(|source| CliError::Format { path: path.to_path_buf(), source })
}

fn load_circuit_unchecked(path: &Path) -> CliResult<Circuit> {
    in_file(path, circuit_from_json(&read_json(path)?))
}

fn load_circuit(path: &Path) -> CliResult<Circuit> {
    let c = load_circuit_unchecked(path)?;
    let diags = c.validate();
    if !diags.is_empty() {
        return Err(in_file(path, Err(FormatError::Core(qce_core::Error::InvalidCircuit(diags))))?);
    }
    Ok(c)
}

fn load_bubble(path: &Path, c: &Circuit, name: Option<&str>) -> CliResult<Bubble> {
    in_file(path, bubble_from_json(&read_json(path)?, c, name))
}

fn load_events(src: &EventSource, tol: f64, seed: u64) -> CliResult<(Circuit, Vec<PlacedDecomp>)> {
    let c = load_circuit(&src.circuit)?;
    let placed = match (&src.bubble, &src.decomps) {
        (Some(b), None) => {
            let bubble = load_bubble(b, &c, src.bubble_name.as_deref())?;
            preferred_set(&c, &bubble, tol, seed)?.entries
        }
        (None, Some(d)) => in_file(d, decomps_from_json(&read_json(d)?))?,
        _ => return Err(CliError::Usage("pass exactly one of --bubble and --decomps".into())),
    };
    Ok((c, placed))
}

fn configure_max_dim() -> CliResult<()> {
    let cap = match std::env::var(MAX_DIM_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| CliError::Usage(format!("{MAX_DIM_VAR} must be a positive integer, got `{v}`")))?,
        Err(_) => DEFAULT_MAX_DIM,
    };
    set_max_dim(cap);
    Ok(())
}

/// Runs a parsed command.
pub fn run(cli: &Cli) -> CliResult<Outcome> {
    configure_max_dim()?;
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let (tol, seed) = (cli.tol, cli.seed);
    let influence_tol = tol.max(INFLUENCE_TOL);
    let mut code = 0;
    let report = match &cli.command {
        Command::Validate { circuit } => {
            let c = load_circuit_unchecked(circuit)?;
            let diags = c.validate();
            if !diags.is_empty() {
                code = 1;
            }
            reports::validate(&c, &diags)
        }
        Command::Influences { circuit, decomps } => {
            let c = load_circuit(circuit)?;
            let placed = in_file(decomps, decomps_from_json(&read_json(decomps)?))?;
            let g = influence_graph(&c, &placed, influence_tol)?;
            let mut v = reports::influence_graph(&g);
            v["schema"] = json!(reports::schema("influences"));
            v
        }
        Command::PreferredSet { circuit, bubble, bubble_name } => {
            let c = load_circuit(circuit)?;
            let b = load_bubble(bubble, &c, bubble_name.as_deref())?;
            let ps = preferred_set(&c, &b, tol, seed)?;
            let pat = check_influence_pattern(&c, &ps.entries, influence_tol)?;
            reports::preferred_set(&ps, &pat)
        }
        Command::Histories { source } => {
            let (c, placed) = load_events(source, tol, seed)?;
            let (dist, sandwich) = history_tables(&c, &placed)?;
            let gap = dist.probs.iter().zip(&sandwich).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            let cons = consistency_check(&c, &placed, influence_tol)?;
            if cli.format == Format::Csv {
                return Ok(Outcome { text: histories_csv(&dist)?, code: 0 });
            }
            reports::histories(&dist, gap, &cons)
        }
        Command::Sample { source, n } => {
            let (c, placed) = load_events(source, tol, seed)?;
            let (dist, _) = history_tables(&c, &placed)?;
            let draws = sample_histories(&dist, seed, *n);
            if cli.format == Format::Csv {
                return Ok(Outcome { text: samples_csv(&dist, &draws)?, code: 0 });
            }
            reports::samples(&dist, seed, &draws)
        }
        Command::Classify { spec, circuit, event } => {
            let fallback = circuit.as_deref().map(load_circuit).transpose()?;
            let s = in_file(spec, spec_from_json(&read_json(spec)?, fallback))?;
            classify(&s, *event, tol)?
        }
        Command::Scenario { action: ScenarioAction::Build { template, box_choice } } => {
            build_template(*template, *box_choice, seed)?
        }
    };
    let text = match cli.format {
        Format::Json => to_canonical(&report),
        Format::Text => to_text(&report),
        Format::Csv => return Err(CliError::Usage("csv output is available for `histories` and `sample` only".into())),
    };
    Ok(Outcome { text, code })
}

fn classify(spec: &ScenarioSpec, event: Option<usize>, tol: f64) -> CliResult<Value> {
    let details = match spec.kind {
        ScenarioKind::Complementarity => reports::complementarity(&classify_complementarity(spec, tol)?),
        ScenarioKind::Wigner => reports::wigner(&classify_wigner(spec, tol)?),
        ScenarioKind::Bell => reports::bell(&classify_bell(spec, event.map(|i| (i, None)), tol)?),
        ScenarioKind::Pbr => reports::pbr(&classify_pbr(spec, PbrEvents::default(), tol)?),
        ScenarioKind::LocalFriendliness => reports::local_friendliness(&classify_local_friendliness(spec, tol)?),
    };
    let holds = details["holds"].clone();
    Ok(json!({
        "schema": reports::schema("classify"),
        "kind": spec.kind.as_str(),
        "holds": holds,
        "report": details,
    }))
}

fn template_name(t: Template) -> String {
    t.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

fn bubbles(entries: &[(&str, &Bubble)]) -> Value {
    Value::Object(entries.iter().map(|(k, b)| (k.to_string(), json!(b.wires()))).collect::<Map<_, _>>())
}

fn placement_json(p: &qce_core::circuit::Placement) -> Value {
    json!({"wire": p.wire, "side": p.side.as_str()})
}

fn build_template(t: Template, box_choice: usize, seed: u64) -> CliResult<Value> {
    let mut doc = json!({"schema": reports::schema("template"), "template": template_name(t)});
    let with_spec = |doc: &mut Value, spec: &ScenarioSpec| {
        doc["circuit"] = circuit_to_json(&spec.circuit);
        doc["spec"] = spec_to_json(spec);
    };
    match t {
        Template::PrepareMeasure | Template::PrepareMeasureExtended => {
            let u = haar_random_unitary(2, seed);
            let pm = build_prepare_measure(&u)?;
            doc["parameters"] = json!({"unitary": matrix_to_json(&u)});
            if t == Template::PrepareMeasure {
                doc["circuit"] = circuit_to_json(&pm.basic);
                doc["bubbles"] = bubbles(&[("basic", &pm.basic_bubble)]);
            } else {
                doc["circuit"] = circuit_to_json(&pm.extended);
                doc["bubbles"] = bubbles(&[("inner", &pm.bubble1), ("outer", &pm.bubble2)]);
            }
        }
        Template::WignersFriend => {
            let wf = build_wigners_friend()?;
            with_spec(&mut doc, &wf.spec(true)?);
            doc["circuit"] = circuit_to_json(&wf.circuit);
            doc["bubbles"] = bubbles(&[("friend", &wf.bubble1), ("wigner", &wf.bubble2)]);
        }
        Template::ThreeBox => {
            let tb = operational_three_box(box_choice)?;
            doc["circuit"] = circuit_to_json(&tb.circuit);
            doc["bubbles"] = bubbles(&[("lab", &tb.bubble)]);
            doc["parameters"] = json!({
                "box": tb.choice,
                "preparation": placement_json(&tb.preparation),
                "memory_preparation": placement_json(&tb.memory_preparation),
                "middle": placement_json(&tb.middle),
                "post_selection": placement_json(&tb.post_selection),
            });
        }
        Template::Complementarity => with_spec(&mut doc, &complementarity_instance()?),
        Template::Bell | Template::BellProduct => {
            let inst = bell_instance(t == Template::Bell)?;
            with_spec(&mut doc, &inst.spec);
            let angles = |a: [f64; 2]| json!([num(a[0]), num(a[1])]);
            doc["parameters"] = json!({"alice_angles": angles(inst.alice_angles), "bob_angles": angles(inst.bob_angles)});
        }
        Template::Pbr => with_spec(&mut doc, &pbr_instance()?),
        Template::LocalFriendliness => with_spec(&mut doc, &local_friendliness_instance(true, true)?),
    }
    Ok(doc)
}

fn column_names(dist: &HistoryDistribution) -> Vec<String> {
    dist.placed.iter().map(|p| format!("{}:{}", p.at.wire, p.at.side.as_str())).collect()
}

fn csv_text(rows: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    rows(&mut w).map_err(|e| CliError::Usage(format!("csv encoding failed: {e}")))?;
    let bytes = w.into_inner().map_err(|e| CliError::Usage(format!("csv encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn histories_csv(dist: &HistoryDistribution) -> CliResult<String> {
    csv_text(|w| {
        let mut header = column_names(dist);
        header.push("probability".into());
        w.write_record(&header)?;
        for (idx, p) in dist.probs.iter().enumerate() {
            let mut row: Vec<String> = dist.history(idx).iter().map(|e| e.to_string()).collect();
            row.push(format!("{p:.16e}"));
            w.write_record(&row)?;
        }
        Ok(())
    })
}

fn samples_csv(dist: &HistoryDistribution, draws: &[(u64, Vec<usize>)]) -> CliResult<String> {
    csv_text(|w| {
        let mut header = vec!["seed".to_string()];
        header.extend(column_names(dist));
        w.write_record(&header)?;
        for (s, h) in draws {
            let mut row = vec![s.to_string()];
            row.extend(h.iter().map(|e| e.to_string()));
            w.write_record(&row)?;
        }
        Ok(())
    })
}

/// `path = value` lines; for reading, not parsing.
fn to_text(v: &Value) -> String {
    fn walk(v: &Value, path: &str, out: &mut String) {
        match v {
            Value::Object(map) => {
                let mut keys: Vec<&String> = map.keys().collect();
                keys.sort();
                for k in keys {
                    let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                    walk(&map[k], &p, out);
                }
            }
            Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
                let parts: Vec<String> = items.iter().map(scalar).collect();
                out.push_str(&format!("{path} = [{}]\n", parts.join(", ")));
            }
            Value::Array(items) => {
                for (k, item) in items.iter().enumerate() {
                    walk(item, &format!("{path}[{k}]"), out);
                }
            }
            other => out.push_str(&format!("{path} = {}\n", scalar(other))),
        }
    }
    fn scalar(v: &Value) -> String {
        match v {
            Value::Number(n) if n.is_f64() => format!("{:.6e}", n.as_f64().unwrap_or(0.0)),
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }
    let mut out = String::new();
    walk(v, "", &mut out);
    out
}

/// Parses arguments, runs, writes the report, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = run(&cli).and_then(|outcome| {
        match &cli.out {
            Some(path) => {
                fs::write(path, &outcome.text).map_err(|source| CliError::Write { path: path.clone(), source })?
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(outcome.text.as_bytes())
                    .map_err(|source| CliError::Write { path: PathBuf::from("<stdout>"), source })?;
            }
        }
        Ok(outcome.code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.describe());
            e.exit_code()
        }
    }
}
