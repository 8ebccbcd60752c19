use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sepcomp::assignment::{cyclic, general, grouped, Assignment};
use sepcomp::bounds::{self, Setting};
use sepcomp::codec::{decodable, verify_decodability, VerifyMode};
use sepcomp::json::{parse_demand, SchemeDoc};
use sepcomp::linalg::DEFAULT_MODULUS;
use sepcomp::scheme::{adversarial_fixture, build, build_grouped, BuildOptions, Scheme};
use sepcomp::seed::{self, stream, DEFAULT_SEED};
use sepcomp::sim::{self, GridPoint, SchemeKind};
use sepcomp::{Error, FMatrix, Field};

#[derive(Parser)]
#[command(
    name = "sepcomp",
    version,
    about = "Straggler-tolerant linearly separable computation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print cost bounds and computation load for one setting.
    Plan(PlanArgs),
    /// Build a scheme and write it as JSON.
    Build(BuildArgs),
    /// Check that every responder set can decode.
    Verify(VerifyArgs),
    /// Run end-to-end trials over a parameter grid and write CSV.
    Simulate(SimArgs),
    /// Write the closed-form costs over a parameter grid as CSV.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct Setting4 {
    /// Number of datasets.
    #[arg(short = 'K')]
    k: usize,
    /// Number of workers.
    #[arg(short = 'N')]
    n: usize,
    /// Number of workers the master waits for.
    #[arg(long)]
    nr: usize,
    /// Number of linear combinations demanded.
    #[arg(long)]
    kc: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AssignmentArg {
    Cyclic,
    General,
    Grouped,
}

#[derive(Args)]
struct SchemeArgs {
    #[command(flatten)]
    setting: Setting4,
    /// Message length (default: the scheme's split count).
    #[arg(short = 'L')]
    l: Option<usize>,
    /// Field modulus, a prime below 2^32.
    #[arg(short = 'q', default_value_t = DEFAULT_MODULUS)]
    q: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// JSON array of rows of decimal-string entries used as the demand.
    #[arg(long, conflicts_with = "fixture")]
    demand_file: Option<PathBuf>,
    /// Use the block-diagonal demand that is decodable by exactly these
    /// responders' identity code, e.g. `1,2,3`.
    #[arg(long, value_delimiter = ',')]
    fixture: Option<Vec<usize>>,
    /// Default: cyclic when N divides K, general otherwise.
    #[arg(long, value_enum)]
    assignment: Option<AssignmentArg>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    setting: Setting4,
    /// Accepted for uniformity; the bounds draw nothing at random.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["scheme", "k"]))]
struct VerifyArgs {
    /// Scheme JSON written by `build`.
    #[arg(long, conflicts_with_all = ["k", "n", "nr", "kc"])]
    scheme: Option<PathBuf>,
    #[arg(short = 'K', requires_all = ["n", "nr", "kc"])]
    k: Option<usize>,
    #[arg(short = 'N')]
    n: Option<usize>,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    kc: Option<usize>,
    #[arg(short = 'L')]
    l: Option<usize>,
    #[arg(short = 'q', default_value_t = DEFAULT_MODULUS)]
    q: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, conflicts_with = "fixture")]
    demand_file: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    fixture: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    assignment: Option<AssignmentArg>,
    /// `exhaustive` or `sample:<count>`.
    #[arg(long, default_value = "exhaustive", value_parser = parse_mode)]
    mode: ModeArg,
    /// Check only this responder set, e.g. `1,2,3`.
    #[arg(long, value_delimiter = ',')]
    responders: Option<Vec<usize>>,
}

#[derive(Clone, Copy)]
enum ModeArg {
    Exhaustive,
    Sample(usize),
}

fn parse_mode(s: &str) -> Result<ModeArg, String> {
    if s == "exhaustive" {
        return Ok(ModeArg::Exhaustive);
    }
    s.strip_prefix("sample:")
        .and_then(|n| n.parse().ok())
        .filter(|&n| n > 0)
        .map(ModeArg::Sample)
        .ok_or_else(|| format!("expected `exhaustive` or `sample:<count>`, got {s:?}"))
}

/// Lists like `3`, `2,4,8`, `1-6` or `1-3,6`.
#[derive(Clone, Debug)]
struct Range(Vec<usize>);

fn parse_range(s: &str) -> Result<Range, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let bad = || format!("bad list item {part:?}");
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (
                    a.trim().parse().map_err(|_| bad())?,
                    b.trim().parse().map_err(|_| bad())?,
                );
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.trim().parse().map_err(|_| bad())?),
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(Range(out))
}

#[derive(Args)]
struct GridArgs {
    /// Dataset counts, e.g. `6` or `3-12`.
    #[arg(short = 'K', value_parser = parse_range)]
    k: Range,
    #[arg(short = 'N', value_parser = parse_range)]
    n: Range,
    #[arg(long, value_parser = parse_range)]
    nr: Range,
    /// Default: every K_c from 1 to K.
    #[arg(long, value_parser = parse_range)]
    kc: Option<Range>,
}

impl GridArgs {
    /// Valid points in (K, N, N_r, K_c) lexicographic order.
    fn settings(&self) -> Vec<Setting> {
        let mut out = Vec::new();
        for &k in &self.k.0 {
            for &n in &self.n.0 {
                for &nr in &self.nr.0 {
                    let kcs: Vec<usize> = match &self.kc {
                        Some(r) => r.0.clone(),
                        None => (1..=k).collect(),
                    };
                    out.extend(
                        kcs.into_iter()
                            .filter_map(|kc| Setting::new(k, n, nr, kc).ok()),
                    );
                }
            }
        }
        out
    }
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(short = 'L')]
    l: Option<usize>,
    #[arg(short = 'q', default_value_t = DEFAULT_MODULUS)]
    q: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    /// `cyclic` skips points where N does not divide K.
    #[arg(long, value_enum)]
    assignment: Option<AssignmentArg>,
    /// CSV output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also print one JSON line per trial to stderr.
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Fail {
    /// Verification found failing responder sets or trials.
    Verification,
    Usage(String),
    Io(String),
}

impl Fail {
    fn code(&self) -> u8 {
        match self {
            Fail::Verification => 1,
            Fail::Usage(_) => 2,
            Fail::Io(_) => 3,
        }
    }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Json(_) => Fail::Io(e.to_string()),
            e => Fail::Usage(e.to_string()),
        }
    }
}

fn io_fail(path: &Path, e: impl std::fmt::Display) -> Fail {
    Fail::Io(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| io_fail(path, e))
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<(), Fail> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| io_fail(p, e)),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| Fail::Io(e.to_string())),
    }
}

fn print_seed(seed: u64) {
    eprintln!("seed: {seed}");
}

fn pick_assignment(
    choice: Option<AssignmentArg>,
    k: usize,
    n: usize,
    nr: usize,
) -> Result<Assignment, Fail> {
    Ok(match choice {
        Some(AssignmentArg::Cyclic) => cyclic(k, n, nr)?,
        Some(AssignmentArg::Grouped) => grouped(k, n, nr)?.base,
        Some(AssignmentArg::General) | None => general(k, n, nr)?,
    })
}

struct Built {
    scheme: Scheme,
    seed: u64,
}

#[allow(clippy::too_many_arguments)]
fn build_scheme(
    s: Setting,
    l: Option<usize>,
    q: u64,
    seed: u64,
    demand_file: Option<&Path>,
    fixture: Option<&[usize]>,
    choice: Option<AssignmentArg>,
) -> Result<Built, Fail> {
    let field = Field::new(q)?;
    let f = match (demand_file, fixture) {
        (Some(p), _) => parse_demand(field, &read(p)?)?,
        (None, Some(resp)) => adversarial_fixture(field, s.k, s.n, s.nr, resp, seed)?,
        (None, None) => FMatrix::random(field, s.kc, s.k, seed::derive(seed, stream::DEMAND)),
    };
    if (demand_file.is_some() || fixture.is_some()) && (f.cols() != s.k || f.rows() != s.kc) {
        return Err(Fail::Usage(format!(
            "demand is {}x{}, expected K_c x K = {}x{}",
            f.rows(),
            f.cols(),
            s.kc,
            s.k
        )));
    }
    let opts = BuildOptions {
        l,
        seed,
        generators: None,
    };
    let scheme = match choice {
        Some(AssignmentArg::Grouped) => build_grouped(&f, &grouped(s.k, s.n, s.nr)?, &opts)?,
        _ => build(&f, &pick_assignment(choice, s.k, s.n, s.nr)?, &opts)?,
    };
    Ok(Built { scheme, seed })
}

fn cmd_plan(a: PlanArgs) -> Result<(), Fail> {
    let s = Setting::new(a.setting.k, a.setting.n, a.setting.nr, a.setting.kc)?;
    print_seed(a.seed);
    let v = bounds::optimality_class(&s);
    let c = bounds::computation_costs(s.k, s.n, s.nr)?;
    println!("K={} N={} N_r={} K_c={}", s.k, s.n, s.nr, s.kc);
    if s.divisible() {
        println!("converse    {}", v.converse);
    } else {
        println!("converse    {} (cut-set)", v.converse);
    }
    println!("achievable  {}", v.achievable);
    println!("status      {}", v.status);
    println!("M_min       {}", c.m_min);
    println!("M_1         {}", c.m1);
    Ok(())
}

fn cmd_build(a: BuildArgs) -> Result<(), Fail> {
    let sa = &a.scheme;
    let st = &sa.setting;
    let s = Setting::new(st.k, st.n, st.nr, st.kc)?;
    print_seed(sa.seed);
    let b = build_scheme(
        s,
        sa.l,
        sa.q,
        sa.seed,
        sa.demand_file.as_deref(),
        sa.fixture.as_deref(),
        sa.assignment,
    )?;
    let doc = SchemeDoc::from_scheme(&b.scheme, b.seed);
    write_out(a.out.as_deref(), doc.to_json().as_bytes())?;
    let mut summary = format!("regime: {}\n", b.scheme.regime);
    for w in 1..=s.n {
        summary.push_str(&format!(
            "worker {w}: {} rows\n",
            doc.workers[w - 1].rows.len()
        ));
    }
    if b.scheme.degenerate {
        summary.push_str("warning: degenerate null space; some responder sets may fail\n");
    }
    // keep stdout clean when the document itself goes there
    if a.out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(())
}

fn fmt_set(a: &[usize]) -> String {
    let items: Vec<String> = a.iter().map(usize::to_string).collect();
    format!("{{{}}}", items.join(","))
}

fn cmd_verify(a: VerifyArgs) -> Result<(), Fail> {
    let (scheme, seed) = match &a.scheme {
        Some(path) => {
            let doc = SchemeDoc::from_json(&read(path)?)?;
            let seed = doc.seed;
            (doc.to_scheme()?, seed)
        }
        None => {
            let (Some(k), Some(n), Some(nr), Some(kc)) = (a.k, a.n, a.nr, a.kc) else {
                return Err(Fail::Usage(
                    "give --scheme or all of -K, -N, --nr, --kc".into(),
                ));
            };
            let s = Setting::new(k, n, nr, kc)?;
            let b = build_scheme(
                s,
                a.l,
                a.q,
                a.seed,
                a.demand_file.as_deref(),
                a.fixture.as_deref(),
                a.assignment,
            )?;
            (b.scheme, b.seed)
        }
    };
    print_seed(seed);
    let failures = match &a.responders {
        Some(r) => {
            let mut r = r.clone();
            r.sort_unstable();
            r.dedup();
            if r.len() != scheme.params.nr || r.iter().any(|&w| w == 0 || w > scheme.params.n) {
                return Err(Fail::Usage(format!(
                    "--responders needs {} distinct workers in [1, {}]",
                    scheme.params.nr, scheme.params.n
                )));
            }
            println!("checked 1 responder set");
            if decodable(&scheme, &r) {
                vec![]
            } else {
                vec![r]
            }
        }
        None => {
            let mode = match a.mode {
                ModeArg::Exhaustive => VerifyMode::Exhaustive,
                ModeArg::Sample(count) => VerifyMode::Sample {
                    count,
                    seed: seed::derive(seed, stream::SAMPLE),
                },
            };
            let f = verify_decodability(&scheme, mode)?;
            match a.mode {
                ModeArg::Exhaustive => println!(
                    "checked all C({}, {}) responder sets",
                    scheme.params.n, scheme.params.nr
                ),
                ModeArg::Sample(c) => println!("checked {c} sampled responder sets"),
            }
            f
        }
    };
    for f in &failures {
        println!("fail {} seed {seed}", fmt_set(f));
    }
    if failures.is_empty() {
        println!("ok");
        Ok(())
    } else {
        println!("{} failing responder sets", failures.len());
        Err(Fail::Verification)
    }
}

fn csv_bytes<T: serde::Serialize>(rows: &[T], header: &[&str]) -> Result<Vec<u8>, Fail> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    let err = |e: csv::Error| Fail::Io(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.into_inner().map_err(|e| Fail::Io(e.to_string()))
}

const SIM_HEADER: [&str; 12] = [
    "K",
    "N",
    "N_r",
    "K_c",
    "regime",
    "trials",
    "failures",
    "measured_cost",
    "formula_cost",
    "converse",
    "status",
    "seed",
];

fn cmd_simulate(a: SimArgs) -> Result<(), Fail> {
    Field::new(a.q)?;
    print_seed(a.seed);
    let kind = match a.assignment {
        Some(AssignmentArg::Grouped) => SchemeKind::Grouped,
        _ => SchemeKind::Auto,
    };
    let grid: Vec<GridPoint> = a
        .grid
        .settings()
        .into_iter()
        .filter(|s| a.assignment != Some(AssignmentArg::Cyclic) || s.divisible())
        .map(|setting| GridPoint {
            setting,
            kind,
            l: a.l,
        })
        .collect();
    let results = sim::sweep_trials(&grid, a.trials, a.seed, a.q);
    if a.verbose {
        for r in results.iter().flatten() {
            match r {
                Ok(t) => eprintln!("{}", serde_json::to_string(t).expect("results serialize")),
                Err((s, e)) => eprintln!("{}", serde_json::json!({ "seed": s, "error": e })),
            }
        }
    }
    let rows = sim::summarize(&grid, &results, a.seed);
    write_out(a.out.as_deref(), &csv_bytes(&rows, &SIM_HEADER)?)?;
    let total: usize = rows.iter().map(|r| r.failures).sum();
    let mismatched = rows
        .iter()
        .filter(|r| r.measured_cost != r.formula_cost)
        .count();
    eprintln!(
        "{} points, {} trials each, total failures: {total}, cost mismatches: {mismatched}",
        rows.len(),
        a.trials
    );
    if total > 0 || mismatched > 0 {
        return Err(Fail::Verification);
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct BoundsRow {
    k: usize,
    n: usize,
    nr: usize,
    kc: usize,
    converse: String,
    achievable: String,
    status: String,
}

fn cmd_bounds(a: BoundsArgs) -> Result<(), Fail> {
    print_seed(a.seed);
    let rows: Vec<BoundsRow> = a
        .grid
        .settings()
        .into_iter()
        .map(|s| {
            let v = bounds::optimality_class(&s);
            BoundsRow {
                k: s.k,
                n: s.n,
                nr: s.nr,
                kc: s.kc,
                converse: v.converse.to_string(),
                achievable: v.achievable.to_string(),
                status: v.status.to_string(),
            }
        })
        .collect();
    let header = ["K", "N", "N_r", "K_c", "converse", "achievable", "status"];
    write_out(a.out.as_deref(), &csv_bytes(&rows, &header)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Plan(a) => cmd_plan(a),
        Cmd::Build(a) => cmd_build(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Bounds(a) => cmd_bounds(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Fail::Verification => {}
                Fail::Usage(m) => eprintln!("error: {m}"),
                Fail::Io(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
