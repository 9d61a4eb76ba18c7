//! Command-line front end: parse, validate, and transform diagrams; build
//! towers, Rokhlin sets, approximants, and marker diagrams; evaluate the
//! topology distances; and emit deterministic text or structured reports.
//!
//! Exit codes: 0 on success or clean validation, 1 on reported defects or
//! failed certificates, 2 on input errors.

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use num_rational::BigRational;
use serde_json::{json, Value};

use adicdesk::bratteli::{format as bbd, Diagram};
use adicdesk::cylmap::CylMap;
use adicdesk::measure::MeasureSpec;
use adicdesk::odometer::{translation_map, translation_one};
use adicdesk::space::{CylSet, SeqSpace, Word};
use adicdesk::textio;
use adicdesk::topology;
use adicdesk::towers;
use adicdesk::vershik;

mod schema;

#[derive(Parser)]
#[command(name = "adicdesk", version, about = "Desk-scale Borel dynamics on adic spaces")]
struct Cli {
    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value_t = OutputMode::Text)]
    output: OutputMode,
    /// Seed for randomized property suites (sampled checks are
    /// reproducible for a fixed seed).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputMode {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a diagram file against the structural clauses.
    Validate(ValidateArgs),
    /// Reprint a diagram file in canonical form.
    Fmt(FileArg),
    /// Telescope a diagram over the given cut levels.
    Telescope(TelescopeArgs),
    /// Split a diagram at a level.
    Split(SplitArgs),
    /// Print the height vector of a level.
    Heights(HeightsArgs),
    /// Rank a path given by its order labels.
    Rank(PathArgs),
    /// Apply the Vershik successor to a path.
    Successor(SuccessorArgs),
    /// Print a successor orbit.
    Orbit(OrbitArgs),
    /// Print a translation map of the adic group, or apply it to a point.
    Odometer(OdometerArgs),
    /// Build the first-return towers over a marker level.
    Towers(TowersArgs),
    /// Run the Rokhlin-set construction and report its certificate.
    Rokhlin(RokhlinArgs),
    /// Approximate a rank-one system by an odometer.
    Approx(ApproxArgs),
    /// Build the ordered diagram of a marker sequence.
    BuildDiagram(BuildDiagramArgs),
    /// Build a cutting-and-stacking system.
    Rank1(Rank1Args),
    /// Evaluate the distance table for a pair of maps.
    Distance(DistanceArgs),
    /// Report the uniform-versus-weak-star separation witness.
    Witness,
}

#[derive(Args)]
struct FileArg {
    /// Diagram file in BBD1 form.
    file: String,
}

#[derive(Args)]
struct ValidateArgs {
    file: String,
    /// Check up to this level (defaults to the whole truncation).
    #[arg(long)]
    level: Option<usize>,
}

#[derive(Args)]
struct TelescopeArgs {
    file: String,
    /// Comma-separated increasing cut levels starting at 0, e.g. 0,2,4.
    #[arg(long)]
    cuts: String,
}

#[derive(Args)]
struct SplitArgs {
    file: String,
    #[arg(long)]
    level: usize,
}

#[derive(Args)]
struct HeightsArgs {
    file: String,
    #[arg(long)]
    level: usize,
}

#[derive(Args)]
struct PathArgs {
    file: String,
    /// Comma-separated order labels, optionally `@` vertex path, e.g.
    /// `1,1,0` or `1,0@0,1,0`.
    #[arg(long)]
    labels: String,
}

#[derive(Args)]
struct SuccessorArgs {
    file: String,
    #[arg(long)]
    labels: String,
    /// Number of successor steps (negative for predecessor).
    #[arg(long, default_value_t = 1)]
    steps: i64,
}

#[derive(Args)]
struct OrbitArgs {
    file: String,
    #[arg(long)]
    labels: String,
    #[arg(long, default_value_t = 8)]
    steps: usize,
}

#[derive(Args)]
struct OdometerArgs {
    /// Alphabet spec, e.g. `2` or `23(4)`.
    #[arg(long, default_value = "2")]
    space: String,
    /// Addend as an adic literal over the same space (defaults to 1).
    #[arg(long)]
    addend: Option<String>,
    /// Carry resolution depth.
    #[arg(long, default_value_t = 16)]
    budget: usize,
    /// Apply the map to this point instead of printing the table.
    #[arg(long)]
    apply: Option<String>,
}

#[derive(Args)]
struct TowersArgs {
    #[arg(long, default_value = "2")]
    space: String,
    /// Marker preset: `zeros` for the nested all-zero cylinders.
    #[arg(long, default_value = "zeros")]
    markers: String,
    #[arg(long)]
    level: usize,
    #[arg(long, default_value_t = 256)]
    horizon: usize,
    #[arg(long, default_value_t = 24)]
    budget: usize,
    /// Measures for the inventory (uniform, dirac:<point>, or @file).
    #[arg(long = "measure")]
    measures: Vec<String>,
}

#[derive(Args)]
struct RokhlinArgs {
    #[arg(long, default_value = "2")]
    space: String,
    #[arg(long, default_value = "zeros")]
    markers: String,
    /// Tower height of the Rokhlin stack.
    #[arg(long)]
    m: usize,
    /// Accuracy, e.g. 3/10.
    #[arg(long)]
    eps: String,
    #[arg(long = "measure")]
    measures: Vec<String>,
    /// Force a marker level instead of auto-selecting.
    #[arg(long)]
    level: Option<usize>,
    #[arg(long, default_value_t = 256)]
    horizon: usize,
    #[arg(long, default_value_t = 24)]
    budget: usize,
}

#[derive(Args)]
struct ApproxArgs {
    /// Cutting-and-stacking spec file (`stage ...` lines).
    #[arg(long)]
    spec: String,
    #[arg(long)]
    eps: String,
    #[arg(long = "measure")]
    measures: Vec<String>,
    /// Number of stages to build (defaults to the whole spec).
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long, default_value_t = 24)]
    budget: usize,
}

#[derive(Args)]
struct BuildDiagramArgs {
    #[arg(long, default_value = "2")]
    space: String,
    #[arg(long, default_value = "zeros")]
    markers: String,
    #[arg(long)]
    depth: usize,
    #[arg(long, default_value_t = 256)]
    horizon: usize,
    #[arg(long, default_value_t = 24)]
    budget: usize,
    /// Number of sampled points for the conjugacy check.
    #[arg(long, default_value_t = 50)]
    samples: usize,
}

#[derive(Args)]
struct Rank1Args {
    #[arg(long)]
    spec: String,
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long, default_value_t = 24)]
    budget: usize,
}

#[derive(Args)]
struct DistanceArgs {
    #[arg(long, default_value = "2")]
    space: String,
    /// Map spec: odometer | identity | periodic:<n> | translate:<adic> | @file.
    #[arg(long)]
    left: String,
    #[arg(long)]
    right: String,
    #[arg(long = "measure")]
    measures: Vec<String>,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, default_value_t = 24)]
    budget: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn ratio_str(r: &BigRational) -> String {
    r.to_string()
}

fn emit(mode: OutputMode, verb: &str, doc: &Value, text: &str) -> Result<(), String> {
    schema::validate(verb, doc)?;
    match mode {
        OutputMode::Text => println!("{}", text.trim_end()),
        OutputMode::Structured => println!("{}", serde_json::to_string_pretty(doc).unwrap()),
    }
    Ok(())
}

fn load_diagram(path: &str) -> Result<Diagram, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    bbd::parse(&text).map_err(|e| format!("{path}: {e}"))
}

fn load_space(spec: &str) -> Result<SeqSpace, String> {
    textio::parse_space(spec).map_err(|e| e.to_string())
}

fn load_measures(space: &SeqSpace, specs: &[String]) -> Result<Vec<MeasureSpec>, String> {
    if specs.is_empty() {
        return Ok(vec![MeasureSpec::uniform(space)]);
    }
    specs
        .iter()
        .map(|s| -> Result<MeasureSpec, String> {
            if s == "uniform" {
                Ok(MeasureSpec::uniform(space))
            } else if let Some(lit) = s.strip_prefix("dirac:") {
                let p = textio::parse_point(lit, space).map_err(|e| e.to_string())?;
                Ok(MeasureSpec::dirac(space, p))
            } else if let Some(path) = s.strip_prefix('@') {
                let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
                textio::parse_measure(&text).map_err(|e| e.to_string())
            } else {
                Err(format!("unknown measure spec `{s}`"))
            }
        })
        .collect()
}

fn load_map(spec: &str, space: &SeqSpace, budget: usize) -> Result<CylMap, String> {
    if spec == "odometer" {
        return translation_one(space, budget).map_err(|e| e.to_string());
    }
    if spec == "identity" {
        return Ok(CylMap::identity(space));
    }
    if let Some(n) = spec.strip_prefix("periodic:") {
        let n: usize = n.parse().map_err(|_| format!("bad approximant level `{n}`"))?;
        let t = translation_one(space, budget).map_err(|e| e.to_string())?;
        let markers = towers::MarkerSeq::zeros(space, n.max(1));
        let approx =
            towers::periodic_approx(&t, &markers, n, 1 << (n + 1)).map_err(|e| e.to_string())?;
        return Ok(approx.map);
    }
    if let Some(lit) = spec.strip_prefix("translate:") {
        let b = textio::parse_adic(&format!("{lit}@{space}")).map_err(|e| e.to_string())?;
        return translation_map(&b, budget).map_err(|e| e.to_string());
    }
    if let Some(path) = spec.strip_prefix('@') {
        let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
        return textio::parse_cylmap(&text).map_err(|e| e.to_string());
    }
    Err(format!("unknown map spec `{spec}`"))
}

fn load_markers(space: &SeqSpace, spec: &str, depth: usize) -> Result<towers::MarkerSeq, String> {
    if spec == "zeros" {
        Ok(towers::MarkerSeq::zeros(space, depth))
    } else if let Some(path) = spec.strip_prefix('@') {
        // one cylinder union per line, words separated by spaces
        let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
        let mut sets = Vec::new();
        for line in text.lines() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let words = body
                .split_whitespace()
                .map(|w| {
                    textio::parse_point(&format!("{w}(0)"), space)
                        .map(|p| p.prefix(w.trim_end_matches('.').split('.').count().max(w.len())))
                })
                .collect::<Result<Vec<Word>, _>>()
                .map_err(|e| e.to_string())?;
            sets.push(CylSet::from_words(space, words).map_err(|e| e.to_string())?);
        }
        Ok(towers::MarkerSeq::new(sets))
    } else {
        Err(format!("unknown marker spec `{spec}`"))
    }
}

fn parse_labels(spec: &str) -> Result<(Vec<u32>, Option<Vec<usize>>), String> {
    let (labels, vertices) = match spec.split_once('@') {
        Some((l, v)) => (l, Some(v)),
        None => (spec, None),
    };
    let labels: Vec<u32> = labels
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| s.trim().parse().map_err(|_| format!("bad label `{s}`")))
        .collect::<Result<_, _>>()?;
    let vertices = vertices
        .map(|v| {
            v.split(',')
                .filter(|s| !s.is_empty())
                .map(|s| s.trim().parse().map_err(|_| format!("bad vertex `{s}`")))
                .collect::<Result<Vec<usize>, _>>()
        })
        .transpose()?;
    Ok((labels, vertices))
}

fn path_from_labels(
    d: &Diagram,
    labels: &[u32],
    vertices: Option<&[usize]>,
) -> Result<vershik::PathPrefix, String> {
    let mut edges = Vec::new();
    let mut at = 0usize;
    for (i, &rank) in labels.iter().enumerate() {
        let n = i + 1;
        let level = d.level(n).map_err(|e| e.to_string())?;
        let candidates: Vec<_> = level
            .edges
            .iter()
            .copied()
            .filter(|e| {
                e.source == at
                    && e.rank == rank
                    && vertices.map_or(true, |vs| vs.get(i) == Some(&e.range))
            })
            .collect();
        match candidates.len() {
            1 => {
                edges.push(candidates[0]);
                at = candidates[0].range;
            }
            0 => return Err(format!("no edge with rank {rank} from vertex {at} at level {n}")),
            _ => {
                return Err(format!(
                    "label {rank} at level {n} is ambiguous; add a @vertexpath suffix"
                ))
            }
        }
    }
    Ok(vershik::PathPrefix { edges })
}

fn labels_string(p: &vershik::PathPrefix) -> String {
    p.labels().iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
}

fn run(cli: &Cli) -> Result<ExitCode, String> {
    let mode = cli.output;
    match &cli.command {
        Command::Validate(args) => {
            let d = load_diagram(&args.file)?;
            let level = args.level.unwrap_or(d.depth());
            let report = d.validate(level);
            let special_report = d.special().map(|s| d.validate_special(s, level));
            let cofinal = d.check_no_cofinal_extremes();
            let mut text = String::new();
            let mut defects = Vec::new();
            for x in &report.defects {
                let line = format!("defect level {} vertex {:?}: {:?}", x.level, x.vertex, x.clause);
                text.push_str(&line);
                text.push('\n');
                defects.push(line);
            }
            if let Some(sr) = &special_report {
                for v in &sr.violations {
                    let line = format!("special level {}: {:?}: {}", v.level, v.clause, v.detail);
                    text.push_str(&line);
                    text.push('\n');
                    defects.push(line);
                }
            }
            let clean = defects.is_empty();
            text.push_str(&format!(
                "checked to level {level}: {}; cofinal extremes: {:?}\n",
                if clean { "clean" } else { "defects found" },
                cofinal
            ));
            let doc = json!({
                "verb": "validate",
                "file": args.file,
                "checked_to": level,
                "clean": clean,
                "defects": defects,
                "cofinal": format!("{:?}", cofinal),
            });
            emit(mode, "validate", &doc, &text)?;
            Ok(if clean { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Fmt(args) => {
            let d = load_diagram(&args.file)?;
            let text = bbd::serialize(&d);
            let doc = json!({ "verb": "fmt", "file": args.file, "canonical": text });
            emit(mode, "fmt", &doc, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Telescope(args) => {
            let d = load_diagram(&args.file)?;
            let cuts: Vec<usize> = args
                .cuts
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| format!("bad cut `{s}`")))
                .collect::<Result<_, _>>()?;
            let t = d.telescope(&cuts).map_err(|e| e.to_string())?;
            let text = bbd::serialize(&t);
            let doc = json!({ "verb": "telescope", "file": args.file, "cuts": cuts, "canonical": text });
            emit(mode, "telescope", &doc, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Split(args) => {
            let d = load_diagram(&args.file)?;
            let s = d.split(args.level).map_err(|e| e.to_string())?;
            let text = bbd::serialize(&s);
            let doc = json!({ "verb": "split", "file": args.file, "level": args.level, "canonical": text });
            emit(mode, "split", &doc, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Heights(args) => {
            let d = load_diagram(&args.file)?;
            let hs = d.heights(args.level).map_err(|e| e.to_string())?;
            let strings: Vec<String> = hs.iter().map(BigUint::to_string).collect();
            let text = strings
                .iter()
                .enumerate()
                .map(|(v, h)| format!("h({}, {}) = {}", args.level, v, h))
                .collect::<Vec<_>>()
                .join("\n");
            let doc = json!({ "verb": "heights", "file": args.file, "level": args.level, "heights": strings });
            emit(mode, "heights", &doc, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Rank(args) => {
            let d = load_diagram(&args.file)?;
            let (labels, vertices) = parse_labels(&args.labels)?;
            let p = path_from_labels(&d, &labels, vertices.as_deref())?;
            let coords: Vec<(String, usize)> = (1..=p.len())
                .map(|n| {
                    let head = vershik::PathPrefix { edges: p.edges[..n].to_vec() };
                    let r = vershik::rank(&d, &head).map_err(|e| e.to_string())?;
                    Ok((r.to_string(), head.terminal()))
                })
                .collect::<Result<_, String>>()?;
            let text = coords
                .iter()
                .enumerate()
                .map(|(i, (r, v))| format!("level {}: rank {} at vertex {}", i + 1, r, v))
                .collect::<Vec<_>>()
                .join("\n");
            let doc = json!({
                "verb": "rank",
                "labels": labels,
                "coords": coords.iter().map(|(r, v)| json!({"rank": r, "vertex": v})).collect::<Vec<_>>(),
            });
            emit(mode, "rank", &doc, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Successor(args) => {
            let d = load_diagram(&args.file)?;
            let (labels, vertices) = parse_labels(&args.labels)?;
            let p = path_from_labels(&d, &labels, vertices.as_deref())?;
            let mut y = vershik::LazyPath::new(p, vershik::TailRule::Minimal, d.depth());
            let forward = args.steps >= 0;
            for _ in 0..args.steps.unsigned_abs() {
                y = if forward {
                    vershik::successor(&d, &y).map_err(|e| e.to_string())?
                } else {
                    vershik::predecessor(&d, &y).map_err(|e| e.to_string())?
                };
            }
            let text = labels_string(&y.prefix);
            let doc = json!({ "verb": "successor", "steps": args.steps, "labels": text });
            emit(mode, "successor", &doc, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Orbit(args) => {
            let d = load_diagram(&args.file)?;
            let (labels, vertices) = parse_labels(&args.labels)?;
            let p = path_from_labels(&d, &labels, vertices.as_deref())?;
            let mut y = vershik::LazyPath::new(p, vershik::TailRule::Minimal, d.depth());
            let mut orbit = vec![labels_string(&y.prefix)];
            for _ in 0..args.steps {
                y = vershik::successor(&d, &y).map_err(|e| e.to_string())?;
                orbit.push(labels_string(&y.prefix));
            }
            let text = orbit.join("\n");
            let doc = json!({ "verb": "orbit", "steps": args.steps, "orbit": orbit });
            emit(mode, "orbit", &doc, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Odometer(args) => {
            let space = load_space(&args.space)?;
            let map = match &args.addend {
                None => translation_one(&space, args.budget).map_err(|e| e.to_string())?,
                Some(lit) => {
                    let b = textio::parse_adic(&format!("{lit}@{}", space)).map_err(|e| e.to_string())?;
                    translation_map(&b, args.budget).map_err(|e| e.to_string())?
                }
            };
            match &args.apply {
                Some(lit) => {
                    let p = textio::parse_point(lit, &space).map_err(|e| e.to_string())?;
                    let q = map.apply_point(&p).map_err(|e| e.to_string())?;
                    let text = format!("{p} -> {q}");
                    let doc = json!({ "verb": "odometer", "space": space.to_string(), "applied": { "from": p.to_string(), "to": q.to_string() } });
                    emit(mode, "odometer", &doc, &text)?;
                }
                None => {
                    let text = textio::format_cylmap(&map);
                    let doc = json!({ "verb": "odometer", "space": space.to_string(), "table": text });
                    emit(mode, "odometer", &doc, &text)?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Towers(args) => {
            let space = load_space(&args.space)?;
            let t = translation_one(&space, args.budget).map_err(|e| e.to_string())?;
            let markers = load_markers(&space, &args.markers, args.level.max(8))?;
            let section = markers.level(args.level).map_err(|e| e.to_string())?;
            let partition = towers::build_towers(&t, section, args.horizon)
                .map_err(|e| e.to_string())?
                .merged_by_height();
            let measures = load_measures(&space, &args.measures)?;
            let mut rows = Vec::new();
            let mut text = String::new();
            for tower in &partition.towers {
                let masses: Vec<String> =
                    measures.iter().map(|mu| ratio_str(&mu.set_measure(tower.base()))).collect();
                text.push_str(&format!(
                    "tower height {}: base {:?}, base mass {}\n",
                    tower.height(),
                    tower.base(),
                    masses.join(", ")
                ));
                rows.push(json!({
                    "height": tower.height(),
                    "base": format!("{:?}", tower.base()),
                    "base_mass": masses,
                }));
            }
            let resolved = partition.unresolved.is_empty();
            text.push_str(&format!(
                "unresolved: {}\n",
                if resolved { "none".to_string() } else { format!("{:?}", partition.unresolved) }
            ));
            let doc = json!({
                "verb": "towers",
                "space": space.to_string(),
                "level": args.level,
                "towers": rows,
                "resolved": resolved,
            });
            emit(mode, "towers", &doc, &text)?;
            Ok(if resolved { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Rokhlin(args) => {
            let space = load_space(&args.space)?;
            let t = translation_one(&space, args.budget).map_err(|e| e.to_string())?;
            let depth = args.level.unwrap_or(8).max(8);
            let markers = load_markers(&space, &args.markers, depth)?;
            let eps = parse_eps(&args.eps)?;
            let measures = load_measures(&space, &args.measures)?;
            match towers::rokhlin_set(&t, &markers, args.m, &eps, &measures, args.horizon, args.level)
            {
                Ok(cert) => {
                    let coverage: Vec<String> = cert.coverage.iter().map(ratio_str).collect();
                    let text = format!(
                        "marker level {}: F with {} pieces, disjoint {}, coverage {}",
                        cert.marker_level,
                        cert.set.words().len(),
                        cert.disjoint,
                        coverage.join(", ")
                    );
                    let doc = json!({
                        "verb": "rokhlin",
                        "marker_level": cert.marker_level,
                        "m": args.m,
                        "eps": ratio_str(&eps),
                        "disjoint": cert.disjoint,
                        "coverage": coverage,
                        "set": format!("{:?}", cert.set),
                        "short_mass": cert.short_mass.iter().map(ratio_str).collect::<Vec<_>>(),
                        "top_mass": cert.top_mass.iter().map(ratio_str).collect::<Vec<_>>(),
                    });
                    emit(mode, "rokhlin", &doc, &text)?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("certificate failed: {e}");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Approx(args) => {
            let text = fs::read_to_string(&args.spec).map_err(|e| format!("{}: {e}", args.spec))?;
            let spec = textio::parse_cutstack(&text).map_err(|e| e.to_string())?;
            let stages = args.stages.unwrap_or(spec.stages.len());
            let sys = towers::rank1_build(&spec, stages, args.budget).map_err(|e| e.to_string())?;
            let eps = parse_eps(&args.eps)?;
            let measures = load_measures(&sys.space, &args.measures)?;
            match towers::odometer_approx(&sys, &measures, &eps) {
                Ok(approx) => {
                    let distances: Vec<String> = approx.distances.iter().map(ratio_str).collect();
                    let text = format!(
                        "stage {}: odometer approximant within {}; distances {}",
                        approx.stage,
                        ratio_str(&eps),
                        distances.join(", ")
                    );
                    let doc = json!({
                        "verb": "approx",
                        "stage": approx.stage,
                        "eps": ratio_str(&eps),
                        "distances": distances,
                    });
                    emit(mode, "approx", &doc, &text)?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("certificate failed: {e}");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::BuildDiagram(args) => {
            let space = load_space(&args.space)?;
            let t = translation_one(&space, args.budget).map_err(|e| e.to_string())?;
            let markers = load_markers(&space, &args.markers, args.depth)?;
            let md = towers::diagram_from_markers(&t, &markers, args.depth, args.horizon)
                .map_err(|e| e.to_string())?;
            let canonical = bbd::serialize(&md.diagram);
            // sampled conjugacy certificate
            let mut rng = adicdesk::sampling::SplitMix::new(cli.seed);
            let mut checked = 0usize;
            let mut holds = true;
            for _ in 0..args.samples {
                let x = adicdesk::sampling::random_point(&mut rng, &space, args.depth + 2);
                if (0..args.depth).all(|i| x.digit(i) == space.radix(i) - 1) {
                    continue; // the extremal block climbs past the truncation
                }
                match md.conjugacy_holds_at(&t, &x) {
                    Ok(true) => checked += 1,
                    Ok(false) => holds = false,
                    Err(_) => {}
                }
            }
            let text = format!(
                "{canonical}conjugacy: {} on {} sampled points\n",
                if holds { "holds" } else { "FAILS" },
                checked
            );
            let doc = json!({
                "verb": "build-diagram",
                "depth": args.depth,
                "canonical": canonical,
                "conjugacy_holds": holds,
                "conjugacy_samples": checked,
            });
            emit(mode, "build-diagram", &doc, &text)?;
            Ok(if holds { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Rank1(args) => {
            let text = fs::read_to_string(&args.spec).map_err(|e| format!("{}: {e}", args.spec))?;
            let spec = textio::parse_cutstack(&text).map_err(|e| e.to_string())?;
            let stages = args.stages.unwrap_or(spec.stages.len());
            let sys = towers::rank1_build(&spec, stages, args.budget).map_err(|e| e.to_string())?;
            let heights: Vec<usize> = sys.stages.iter().map(|st| st.levels.len()).collect();
            let canonical = bbd::serialize(&sys.diagram);
            let out = format!(
                "space {}\nstage heights: {}\n{}",
                sys.space,
                heights.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(", "),
                canonical
            );
            let doc = json!({
                "verb": "rank1",
                "space": sys.space.to_string(),
                "heights": heights,
                "canonical": canonical,
            });
            emit(mode, "rank1", &doc, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Distance(args) => {
            let space = load_space(&args.space)?;
            let left = load_map(&args.left, &space, args.budget)?;
            let right = load_map(&args.right, &space, args.budget)?;
            let measures = load_measures(&space, &args.measures)?;
            let metric = topology::d_metric(&left, &right, args.depth).map_err(|e| e.to_string())?;
            let mut rows = Vec::new();
            let mut text = String::new();
            for (i, mu) in measures.iter().enumerate() {
                let uniform =
                    topology::dist_uniform(&left, &right, mu, args.depth).map_err(|e| e.to_string())?;
                let symdiff =
                    topology::sup_symdiff(&left, &right, mu, args.depth).map_err(|e| e.to_string())?;
                let absdiff =
                    topology::sup_abs_diff(&left, &right, mu, args.depth).map_err(|e| e.to_string())?;
                text.push_str(&format!(
                    "measure {}: mu(E) in [{}, {}]; sup symdiff >= {} (upper {}{}); sup |gap| = {}\n",
                    i,
                    ratio_str(&uniform.lo),
                    ratio_str(&uniform.hi),
                    ratio_str(&symdiff.lower),
                    ratio_str(&symdiff.upper),
                    if symdiff.exhaustive { ", exhaustive" } else { "" },
                    ratio_str(&absdiff),
                ));
                rows.push(json!({
                    "measure": i,
                    "dist_uniform": { "lo": ratio_str(&uniform.lo), "hi": ratio_str(&uniform.hi) },
                    "sup_symdiff": {
                        "lower": ratio_str(&symdiff.lower),
                        "upper": ratio_str(&symdiff.upper),
                        "witness": format!("{:?}", symdiff.witness),
                        "exhaustive": symdiff.exhaustive,
                    },
                    "sup_abs_diff": ratio_str(&absdiff),
                }));
            }
            text.push_str(&format!(
                "metric D in [{}, {}]\n",
                ratio_str(&metric.lo),
                ratio_str(&metric.hi)
            ));
            let doc = json!({
                "verb": "distance",
                "depth": args.depth,
                "rows": rows,
                "metric": { "lo": ratio_str(&metric.lo), "hi": ratio_str(&metric.hi) },
            });
            emit(mode, "distance", &doc, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Witness => {
            let w = topology::separation_witness().map_err(|e| e.to_string())?;
            let mut text = String::new();
            let mut rows = Vec::new();
            for ((d, a), (_, u)) in w.abs_diff_by_depth.iter().zip(&w.uniform_by_depth) {
                text.push_str(&format!(
                    "depth {d}: sup |gap| = {}, mu(E) in [{}, {}]\n",
                    ratio_str(a),
                    ratio_str(&u.lo),
                    ratio_str(&u.hi)
                ));
                rows.push(json!({
                    "depth": d,
                    "abs_diff": ratio_str(a),
                    "dist_uniform": { "lo": ratio_str(&u.lo), "hi": ratio_str(&u.hi) },
                }));
            }
            text.push_str("weak-star distance 0 with uniform distance 1/4: the approximant separates the topologies\n");
            let doc = json!({ "verb": "witness", "rows": rows });
            emit(mode, "witness", &doc, &text)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn parse_eps(text: &str) -> Result<BigRational, String> {
    let parse_int = |t: &str| -> Result<num_bigint::BigInt, String> {
        t.parse::<num_bigint::BigInt>().map_err(|_| format!("bad rational `{text}`"))
    };
    let eps = match text.split_once('/') {
        Some((n, d)) => BigRational::new(parse_int(n)?, parse_int(d)?),
        None => BigRational::from_integer(parse_int(text)?),
    };
    use num_traits::Zero;
    if eps <= BigRational::zero() || eps > BigRational::from_integer(1.into()) {
        return Err(format!("accuracy must lie in (0, 1], got {text}"));
    }
    Ok(eps)
}
