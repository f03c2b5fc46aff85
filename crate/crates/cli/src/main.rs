use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use strposet::bits::IdxSet;
use strposet::conditions::{
    check_j1, check_j2, check_j3, check_j4, check_p1_to_p4, check_p5, run_battery, BatteryParams,
    Condition, ConditionReport,
};
use strposet::io::{fragment_to_string, load_fragment};
use strposet::models::{affine_plane_fragment, cusp_fragment, f0, random_fragment, GeneratorParams};
use strposet::reconstruction::{
    build_rho, induce_str_iso, roundtrip, Caps, Domain, RoundTripOptions, TableDoc,
};
use strposet::structure::{enumerate_fiber, mu_statistic, str_leq_witness, Mu, DEFAULT_AMAX, MAX_ENUM};
use strposet::{relabel, Error, Exec, IsoMap, Limits, PosetFragment, StrNode};

/// Structure posets of finite two-dimensional poset fragments.
#[derive(Parser)]
#[command(name = "strposet", version)]
struct Cli {
    /// Largest tier size accepted when reading fragments (at most 512).
    #[arg(long, global = true, default_value_t = 64)]
    max_tier: usize,

    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a fragment file.
    Gen(GenArgs),
    /// Check the P and J conditions.
    Check(CheckArgs),
    /// Enumerate a fiber as JSON or DOT.
    Fiber(FiberArgs),
    /// The mu statistic of an incident pair.
    Mu(MuArgs),
    /// Compare two structure nodes.
    StrLeq(StrLeqArgs),
    /// Rebuild a fragment isomorphism from a structure-poset table.
    Reconstruct(ReconstructArgs),
    /// Hidden-relabeling round trip.
    Roundtrip(RoundtripArgs),
    /// Hasse diagram of a fragment, or of a fiber with --B.
    Dot(DotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Random,
    Affine,
    Cusp,
    F0,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    model: Model,
    /// Field size for the affine model.
    #[arg(short, default_value_t = 2)]
    p: u32,
    /// Maximum total degree for the affine model.
    #[arg(short, default_value_t = 1)]
    d: usize,
    /// Generator parameters as JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long)]
    min_updeg: Option<usize>,
    #[arg(long)]
    planted: Option<usize>,
    #[arg(long)]
    generic: Option<usize>,
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    /// Threshold for clauses asking for infinitely many elements.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Largest witness set searched for J3.
    #[arg(long, default_value_t = 4)]
    size_cap: usize,
    /// Largest avoided set for J3.
    #[arg(long, default_value_t = 1)]
    fmax: usize,
    /// Largest S for P5.
    #[arg(long, default_value_t = 1)]
    smax: usize,
    /// Largest T for P5 and J4.
    #[arg(long, default_value_t = 2)]
    tmax: usize,
    /// Only these conditions, comma separated (e.g. J2,P5).
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    /// Run the reconstruction witness battery instead.
    #[arg(long)]
    battery: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FiberSel {
    /// Second ordinate, as point labels (e.g. d,e).
    #[arg(long = "B", alias = "b")]
    b: String,
    /// Curves allowed in first ordinates; defaults to all curves, or to the
    /// curves below some point of B on larger fragments.
    #[arg(long)]
    support: Option<String>,
    #[arg(long, default_value_t = DEFAULT_AMAX)]
    amax: usize,
}

#[derive(Args)]
struct FiberArgs {
    file: PathBuf,
    #[command(flatten)]
    sel: FiberSel,
    /// Emit DOT instead of JSON.
    #[arg(long)]
    dot: bool,
    /// Leave witness labels off the DOT edges.
    #[arg(long)]
    no_via: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MuArgs {
    file: PathBuf,
    #[arg(long)]
    x: String,
    #[arg(long)]
    m: String,
    #[arg(long, default_value_t = DEFAULT_AMAX)]
    amax: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StrLeqArgs {
    file: PathBuf,
    /// Node as `a,b|d,e`; `x|*` is the ray of x.
    #[arg(long, allow_hyphen_values = true)]
    lhs: String,
    #[arg(long, allow_hyphen_values = true)]
    rhs: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Structure-poset isomorphism table (as written by `roundtrip --emit-table`).
    #[arg(long)]
    table: PathBuf,
    #[arg(long, default_value_t = 3)]
    kset_cap: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RoundtripArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Redirect one image into a foreign fiber before reconstructing.
    #[arg(long)]
    corrupt: bool,
    /// Include ray nodes in the domain.
    #[arg(long)]
    rays: bool,
    #[arg(long, default_value_t = 3)]
    kset_cap: usize,
    /// Refuse to run when the witness battery fails.
    #[arg(long)]
    require_battery: bool,
    /// Write the relabelled fragment here.
    #[arg(long)]
    emit_target: Option<PathBuf>,
    /// Write the induced isomorphism table here.
    #[arg(long)]
    emit_table: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DotArgs {
    file: PathBuf,
    #[arg(long = "B", alias = "b")]
    b: Option<String>,
    #[arg(long)]
    support: Option<String>,
    #[arg(long, default_value_t = DEFAULT_AMAX)]
    amax: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// A bad flag value or a label that does not resolve.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match e.downcast_ref::<Error>() {
        Some(
            Error::Label(_)
            | Error::NotMember { .. }
            | Error::NotBelow { .. }
            | Error::HeightZero { .. }
            | Error::SizeBound { .. }
            | Error::EmptySet(_)
            | Error::ForeignElement(_)
            | Error::Generator(_),
        ) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    };
    let result = Limits::new(cli.max_tier)
        .map_err(|e| usage(e.to_string()))
        .and_then(|limits| run(cli.cmd, limits, exec));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// `Ok(false)` reports a violation or a failed reconstruction.
fn run(cmd: Cmd, limits: Limits, exec: Exec) -> anyhow::Result<bool> {
    match cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Check(a) => cmd_check(a, limits),
        Cmd::Fiber(a) => cmd_fiber(a, limits, exec),
        Cmd::Mu(a) => cmd_mu(a, limits),
        Cmd::StrLeq(a) => cmd_str_leq(a, limits),
        Cmd::Reconstruct(a) => cmd_reconstruct(a, limits, exec),
        Cmd::Roundtrip(a) => cmd_roundtrip(a, limits, exec),
        Cmd::Dot(a) => cmd_dot(a, limits, exec),
    }
}

fn load(path: &Path, limits: Limits) -> anyhow::Result<PosetFragment> {
    load_fragment(path, limits)
        .map_err(anyhow::Error::new)
        .with_context(|| format!("reading {}", path.display()))
}

fn emit(output: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(Error::Io)
            .with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn h1_labels(f: &PosetFragment, s: &IdxSet) -> Vec<String> {
    s.iter().map(|i| f.label_h1(i)).collect()
}

fn cmd_gen(a: GenArgs) -> anyhow::Result<bool> {
    let f = match a.model {
        Model::Cusp => cusp_fragment(),
        Model::F0 => f0(),
        Model::Affine => affine_plane_fragment(a.p, a.d)?,
        Model::Random => {
            let mut params = match &a.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(Error::Io)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
                }
                None => GeneratorParams::default(),
            };
            let overrides = [
                (a.n1, &mut params.n1),
                (a.n2, &mut params.n2),
                (a.min_updeg, &mut params.min_updeg),
                (a.planted, &mut params.planted_pairs_per_point),
                (a.generic, &mut params.generic_curves),
                (a.cap, &mut params.pairwise_cap),
            ];
            for (flag, slot) in overrides {
                if let Some(v) = flag {
                    *slot = v;
                }
            }
            if let Some(seed) = a.seed {
                params.seed = seed;
            }
            random_fragment(&params)?
        }
    };
    emit(&a.output, &fragment_to_string(&f))?;
    Ok(true)
}

fn parse_condition(name: &str) -> anyhow::Result<Condition> {
    let all = [
        Condition::P1,
        Condition::P2,
        Condition::P3,
        Condition::P4,
        Condition::P5,
        Condition::J1,
        Condition::J2,
        Condition::J3,
        Condition::J4,
    ];
    all.into_iter()
        .find(|c| format!("{c:?}").eq_ignore_ascii_case(name.trim()))
        .ok_or_else(|| usage(format!("unknown condition {name:?}")))
}

fn cmd_check(a: CheckArgs, limits: Limits) -> anyhow::Result<bool> {
    let f = load(&a.file, limits)?;
    if a.battery {
        let report = run_battery(&f, &BatteryParams::default());
        emit(&a.output, &to_json(&report))?;
        return Ok(report.passed);
    }
    let only: Vec<Condition> = a
        .only
        .iter()
        .map(|s| parse_condition(s))
        .collect::<anyhow::Result<_>>()?;
    let wanted = |c: Condition| only.is_empty() || only.contains(&c);
    let mut reports: Vec<ConditionReport> = Vec::new();
    if [Condition::P1, Condition::P2, Condition::P3, Condition::P4]
        .into_iter()
        .any(wanted)
    {
        reports.extend(check_p1_to_p4(&f, a.k).into_iter().filter(|r| wanted(r.condition)));
    }
    if wanted(Condition::P5) {
        reports.push(check_p5(&f, a.smax, a.tmax));
    }
    if wanted(Condition::J1) {
        reports.push(check_j1(&f));
    }
    if wanted(Condition::J2) {
        reports.push(check_j2(&f, a.k));
    }
    if wanted(Condition::J3) {
        reports.push(check_j3(&f, a.fmax, a.size_cap));
    }
    if wanted(Condition::J4) {
        reports.push(check_j4(&f, a.tmax));
    }
    let holds = reports.iter().all(|r| r.holds);
    emit(
        &a.output,
        &to_json(&json!({ "version": 1, "holds": holds, "reports": reports })),
    )?;
    Ok(holds)
}

fn resolve_support(f: &PosetFragment, b: &IdxSet, given: Option<&str>) -> anyhow::Result<IdxSet> {
    if let Some(text) = given {
        return Ok(f.parse_h1_set(text)?);
    }
    if f.n1() <= MAX_ENUM {
        return Ok(f.curves());
    }
    let near = b
        .iter()
        .fold(IdxSet::empty(), |acc, m| acc.union(f.curves_below(m)));
    if near.len() <= MAX_ENUM {
        Ok(near)
    } else {
        Err(usage(format!(
            "{} curves lie below B; pass --support with at most {MAX_ENUM}",
            near.len()
        )))
    }
}

fn fiber_view(
    f: &PosetFragment,
    b: &str,
    support: Option<&str>,
    amax: usize,
    exec: Exec,
) -> anyhow::Result<strposet::structure::FiberView> {
    let b = f.parse_h2_set(b)?;
    if b.is_empty() {
        return Err(usage("--B needs at least one point"));
    }
    let support = resolve_support(f, &b, support)?;
    Ok(enumerate_fiber(f, &b, &support, amax, exec)?)
}

fn cmd_fiber(a: FiberArgs, limits: Limits, exec: Exec) -> anyhow::Result<bool> {
    let f = load(&a.file, limits)?;
    let view = fiber_view(&f, &a.sel.b, a.sel.support.as_deref(), a.sel.amax, exec)?;
    let text = if a.dot {
        view.to_dot(&f, !a.no_via)
    } else {
        to_json(&view.to_doc(&f))
    };
    emit(&a.output, &text)?;
    Ok(true)
}

fn cmd_mu(a: MuArgs, limits: Limits) -> anyhow::Result<bool> {
    let f = load(&a.file, limits)?;
    let x = f.find_h1(&a.x)?;
    let m = f.find_h2(&a.m)?;
    let stat = mu_statistic(&f, x, m, a.amax)?;
    let mu = match stat.mu {
        Mu::Finite(v) => json!(v),
        Mu::Infinite => json!("infinite"),
    };
    let doc = json!({
        "x": a.x,
        "m": a.m,
        "amax": a.amax,
        "mu": mu,
        "ge4": stat.ge4,
        "argmin": stat.argmin.map(|s| h1_labels(&f, &s)),
    });
    emit(&a.output, &to_json(&doc))?;
    Ok(true)
}

fn cmd_str_leq(a: StrLeqArgs, limits: Limits) -> anyhow::Result<bool> {
    let f = load(&a.file, limits)?;
    let lhs = StrNode::parse(&f, &a.lhs)?;
    let rhs = StrNode::parse(&f, &a.rhs)?;
    let witness = str_leq_witness(&f, &lhs, &rhs)?;
    let doc = json!({
        "lhs": lhs.display(&f),
        "rhs": rhs.display(&f),
        "leq": witness.is_some(),
        "witness": witness.map(|w| h1_labels(&f, &w)),
    });
    emit(&a.output, &to_json(&doc))?;
    Ok(true)
}

fn iso_doc(source: &PosetFragment, target: &PosetFragment, rho: &IsoMap) -> Value {
    let h1: Vec<[String; 2]> = (0..source.n1())
        .map(|x| [source.label_h1(x), target.label_h1(rho.h1[x])])
        .collect();
    let h2: Vec<[String; 2]> = (0..source.n2())
        .map(|m| [source.label_h2(m), target.label_h2(rho.h2[m])])
        .collect();
    json!({ "h1": h1, "h2": h2 })
}

fn cmd_reconstruct(a: ReconstructArgs, limits: Limits, exec: Exec) -> anyhow::Result<bool> {
    let source = load(&a.source, limits)?;
    let target = load(&a.target, limits)?;
    let text = std::fs::read_to_string(&a.table)
        .map_err(Error::Io)
        .with_context(|| format!("reading {}", a.table.display()))?;
    let doc: TableDoc = serde_json::from_str(&text).map_err(|e| {
        anyhow::Error::new(Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
        .context(format!("reading {}", a.table.display()))
    })?;
    let phi = doc.into_iso(source.clone(), target.clone());
    let caps = Caps {
        kset_cap: a.kset_cap,
    };
    let (ok, out) = match build_rho(&phi, caps, exec) {
        Ok((rho, trace)) => (
            true,
            json!({
                "recovered": true,
                "rho": iso_doc(&source, &target, &rho),
                "conflicts": Vec::<String>::new(),
                "probes": phi.probes(),
                "trace": trace,
            }),
        ),
        Err(e) => (
            false,
            json!({
                "recovered": false,
                "rho": Value::Null,
                "conflicts": e.trace.conflicts.iter().map(|c| c.describe(&source, &target)).collect::<Vec<_>>(),
                "probes": phi.probes(),
                "trace": e.trace,
            }),
        ),
    };
    emit(&a.output, &to_json(&out))?;
    Ok(ok)
}

#[derive(Serialize)]
struct BatteryDoc {
    passed: bool,
    reasons: Vec<String>,
}

#[derive(Serialize)]
struct VerdictDoc {
    recovered: bool,
    conflicts: Vec<String>,
    probes: usize,
    battery: BatteryDoc,
    invariant_problems: Vec<String>,
    factorization_violations: usize,
}

fn cmd_roundtrip(a: RoundtripArgs, limits: Limits, exec: Exec) -> anyhow::Result<bool> {
    let f = load(&a.file, limits)?;
    let opts = RoundTripOptions {
        seed: a.seed,
        caps: Caps {
            kset_cap: a.kset_cap,
        },
        rays: a.rays,
        corrupt: a.corrupt,
        ..RoundTripOptions::default()
    };
    if a.require_battery {
        let battery = run_battery(&f, &opts.battery);
        if !battery.passed {
            let doc = json!({
                "refused": true,
                "battery": BatteryDoc { passed: false, reasons: battery.reasons() },
            });
            emit(&a.output, &to_json(&doc))?;
            return Ok(false);
        }
    }
    if a.emit_target.is_some() || a.emit_table.is_some() {
        let (target, hidden) = relabel(&f, a.seed);
        if let Some(path) = &a.emit_target {
            std::fs::write(path, fragment_to_string(&target)).map_err(Error::Io)?;
        }
        if let Some(path) = &a.emit_table {
            let phi = induce_str_iso(&f, &target, &hidden, Domain::witness(a.kset_cap, a.rays))?;
            std::fs::write(path, to_json(&phi.to_doc()?)).map_err(Error::Io)?;
        }
    }
    let v = roundtrip(&f, &opts, exec)?;
    let doc = VerdictDoc {
        recovered: v.recovered,
        conflicts: v.conflicts,
        probes: v.probes,
        battery: BatteryDoc {
            passed: v.battery_passed,
            reasons: v.battery_reasons,
        },
        invariant_problems: v.invariant_problems,
        factorization_violations: v.factorization_violations,
    };
    emit(&a.output, &to_json(&doc))?;
    Ok(doc.recovered)
}

/// Covers of the fragment itself: the minimum below every curve, each
/// curve below its points.
fn fragment_dot(f: &PosetFragment) -> String {
    let mut out = String::from("digraph fragment {\n  rankdir=BT;\n  node [shape=plaintext];\n");
    out.push_str("  min [label=\"0\"];\n");
    for x in 0..f.n1() {
        let _ = writeln!(out, "  c{x} [label=\"{}\"];", f.label_h1(x));
    }
    for m in 0..f.n2() {
        let _ = writeln!(out, "  p{m} [label=\"{}\"];", f.label_h2(m));
    }
    for x in 0..f.n1() {
        let _ = writeln!(out, "  min -> c{x} [arrowhead=none];");
    }
    for (x, m) in f.incidence() {
        let _ = writeln!(out, "  c{x} -> p{m} [arrowhead=none];");
    }
    out.push_str("}\n");
    out
}

fn cmd_dot(a: DotArgs, limits: Limits, exec: Exec) -> anyhow::Result<bool> {
    let f = load(&a.file, limits)?;
    let text = match &a.b {
        Some(b) => fiber_view(&f, b, a.support.as_deref(), a.amax, exec)?.to_dot(&f, true),
        None => fragment_dot(&f),
    };
    emit(&a.output, &text)?;
    Ok(true)
}
