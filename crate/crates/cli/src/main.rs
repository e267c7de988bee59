//! `sequenceable`: order, verify and certify subsets of abelian groups from
//! the command line.
//!
//! Exit codes: 0 on success, 1 when some set has no valid ordering or
//! certificate (or a verified ordering is invalid, or a sweep finds a
//! counterexample), 2 on input errors.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use sequenceable::corpus::Corpus;
use sequenceable::groups::{Element, Group, GroupSpec};
use sequenceable::rectify::{self, RectCertificate, RectifyError};
use sequenceable::search::{self, Engine, SearchLimits, SweepReport};
use sequenceable::{Error, Ordering, SequencingResult, ValidityReport};

/// Primes at or above this need `--force` wherever `F_p` is scanned by dilation.
const PRIME_GUARD: u64 = 1 << 26;

#[derive(Parser)]
#[command(name = "sequenceable", version, about = "Valid orderings (distinct partial sums) of subsets of abelian groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find a valid ordering of each set.
    Order(Job),
    /// Check given orderings.
    Verify(Job),
    /// Find a rectification certificate for each set (0 is added).
    Rectify(Job),
    /// Sequence every nonempty subset of F_p \ {0} up to --max-size.
    Sweep(Job),
    /// Count the valid orderings of each set.
    Count(Job),
}

#[derive(Args)]
struct Job {
    #[arg(long, conflicts_with_all = ["cyclic", "group"])]
    prime: Option<u64>,
    #[arg(long, conflicts_with = "group")]
    cyclic: Option<u64>,
    /// Group expression such as "Z", "Z^2", "Z_6 x Z" or "F_7".
    #[arg(long)]
    group: Option<String>,

    /// Inline set, e.g. "1,7,11" or "(0,1);(1,0)". A JSON array is also accepted.
    #[arg(long, visible_alias = "set-ordering", conflicts_with_all = ["file", "random"])]
    set: Option<String>,
    /// One set per line; `#` starts a comment, blank lines are skipped.
    #[arg(long, conflicts_with = "random")]
    file: Option<PathBuf>,
    /// Generate this many random sets from --seed.
    #[arg(long)]
    random: Option<usize>,

    /// Rectification order (default: max(|A| - 1, 2)).
    #[arg(long)]
    ell: Option<u64>,
    #[arg(long, value_enum, default_value_t = EngineArg::Pipeline)]
    engine: EngineArg,
    #[arg(long, value_enum, default_value_t = Output::Json)]
    output: Output,
    /// Largest subset size for sweep, largest random set size otherwise.
    #[arg(long)]
    max_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lift resource guards.
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Pipeline,
    Backtracking,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Engine {
        match e {
            EngineArg::Pipeline => Engine::Pipeline,
            EngineArg::Backtracking => Engine::Backtracking,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Human,
    Json,
    Csv,
}

/// Input error, reported with exit code 2.
struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Usage {
        Usage(e.to_string())
    }
}

/// Rendered result of one job: text to print and whether it counts as found.
struct Emitted {
    text: String,
    ok: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            print!("{}", out.text);
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Result<Emitted, Usage> {
    match cmd {
        Command::Order(job) => order(&job),
        Command::Verify(job) => verify(&job),
        Command::Rectify(job) => rectify(&job),
        Command::Sweep(job) => sweep(&job),
        Command::Count(job) => count(&job),
    }
}

fn limits(job: &Job) -> SearchLimits {
    if job.force {
        SearchLimits::forced()
    } else {
        SearchLimits::default()
    }
}

fn group(job: &Job) -> Result<Group, Usage> {
    let g = match (job.prime, job.cyclic, &job.group) {
        (Some(p), None, None) => Group::prime_field(p)?,
        (None, Some(n), None) => Group::cyclic(n)?,
        (None, None, Some(s)) => Group::new(s.parse::<GroupSpec>()?)?,
        _ => return Err(Usage("give exactly one of --prime, --cyclic, --group".into())),
    };
    if let Some(p) = g.prime() {
        if p >= PRIME_GUARD && !job.force {
            return Err(Usage(format!("p = {p} is at least 2^26; pass --force to scan it anyway")));
        }
    }
    Ok(g)
}

/// Accepts JSON arrays such as `[1,7,11]` or `[[0,1],[1,0]]` by rewriting
/// them into the plain set syntax.
fn normalize(s: &str) -> String {
    let t = s.trim();
    match t.strip_prefix('[').and_then(|x| x.strip_suffix(']')) {
        Some(inner) if inner.contains('[') => {
            let compact: String = inner.chars().filter(|c| !c.is_whitespace()).collect();
            compact.replace("],[", ");(").replace('[', "(").replace(']', ")")
        }
        Some(inner) => inner.to_string(),
        None => t.to_string(),
    }
}

fn sets(job: &Job, g: &Group) -> Result<Vec<Vec<Element>>, Usage> {
    if let Some(s) = &job.set {
        return Ok(vec![g.parse_set(&normalize(s))?]);
    }
    if let Some(path) = &job.file {
        let text = std::fs::read_to_string(path).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
        let mut out = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let set = g.parse_set(&normalize(line)).map_err(|e| Usage(format!("{}:{}: {e}", path.display(), n + 1)))?;
            out.push(set);
        }
        return Ok(out);
    }
    if let Some(n) = job.random {
        let max = job.max_size.unwrap_or(8);
        let mut corpus = Corpus::new(job.seed);
        let out = (0..n)
            .map(|_| {
                let size = rand_size(&mut corpus, max);
                corpus.set_in(g, size, 100)
            })
            .collect();
        return Ok(out);
    }
    Err(Usage("give one input source: --set, --file or --random".into()))
}

fn rand_size(corpus: &mut Corpus, max: usize) -> usize {
    use rand::Rng;
    corpus.rng().gen_range(1..=max.max(1))
}

/// Elements as JSON: bare integers for rank-1 groups, arrays otherwise.
struct Elems<'a>(&'a [Element]);

impl Serialize for Elems<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for e in self.0 {
            match e.coords() {
                [x] => seq.serialize_element(x)?,
                cs => seq.serialize_element(cs)?,
            }
        }
        seq.end()
    }
}

fn json_line<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(v).expect("reports serialize");
    s.push('\n');
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Runs `f` on every set in parallel and joins the outputs in input order.
fn batch<F>(sets: &[Vec<Element>], f: F) -> (String, bool)
where
    F: Fn(&[Element]) -> (String, bool) + Sync,
{
    let parts: Vec<(String, bool)> = sets.par_iter().map(|s| f(s)).collect();
    let ok = parts.iter().all(|p| p.1);
    (parts.into_iter().map(|p| p.0).collect(), ok)
}

#[derive(Serialize)]
struct OrderReport<'a> {
    group: String,
    set: Elems<'a>,
    ordering: Option<Elems<'a>>,
    partial_sums: Option<Elems<'a>>,
    method: Option<&'static str>,
    verified: bool,
    certificate: Option<&'a RectCertificate>,
    layout: Option<&'static str>,
    backtrack_nodes: u64,
    error: Option<String>,
}

fn order(job: &Job) -> Result<Emitted, Usage> {
    let g = group(job)?;
    let sets = sets(job, &g)?;
    // Input errors in any set abort the whole batch before work starts.
    for s in &sets {
        Ordering::new(g.clone(), s.clone())?;
    }
    let limits = limits(job);
    let engine = Engine::from(job.engine);
    let solve = |set: &[Element]| -> Result<SequencingResult, Error> {
        match engine {
            Engine::Pipeline => sequenceable::sequence_with(&g, set, &limits),
            Engine::Backtracking => {
                let found = search::backtrack_search(set, &g, &limits)?;
                let o = found.ordering.ok_or(Error::NoValidOrdering)?;
                let verified = o.is_valid();
                let r = SequencingResult {
                    ordering: o,
                    method: sequenceable::Method::Backtracking,
                    certificate: None,
                    verified,
                    layout: None,
                    backtrack_nodes: found.nodes,
                };
                Ok(r)
            }
        }
    };
    let results: Vec<Result<SequencingResult, Error>> = sets.par_iter().map(|s| solve(s)).collect();
    let mut text = String::new();
    if job.output == Output::Csv {
        text.push_str("set,ordering,method,lambda,layout,backtrack_nodes\n");
    }
    let mut ok = true;
    for (set, r) in sets.iter().zip(&results) {
        if let Err(e) = r {
            if !matches!(e, Error::NoValidOrdering) {
                return Err(Usage(e.to_string()));
            }
            eprintln!("no valid ordering found for {{{}}}; this contradicts the expected behaviour and should be reported", g.format_set(set));
            ok = false;
        }
        let sums = r.as_ref().ok().map(|r| r.ordering.partial_sums());
        match job.output {
            Output::Json => {
                let report = OrderReport {
                    group: g.to_string(),
                    set: Elems(set),
                    ordering: r.as_ref().ok().map(|r| Elems(r.ordering.elems())),
                    partial_sums: sums.as_deref().map(Elems),
                    method: r.as_ref().ok().map(|r| r.method.as_str()),
                    verified: r.as_ref().map(|r| r.verified).unwrap_or(false),
                    certificate: r.as_ref().ok().and_then(|r| r.certificate.as_ref()),
                    layout: r.as_ref().ok().and_then(|r| r.layout.map(|l| l.as_str())),
                    backtrack_nodes: r.as_ref().map(|r| r.backtrack_nodes).unwrap_or(0),
                    error: r.as_ref().err().map(|e| e.to_string()),
                };
                text.push_str(&json_line(&report));
            }
            Output::Csv => {
                let (ord, method, lambda, layout, nodes) = match r {
                    Ok(r) => (
                        g.format_set(r.ordering.elems()),
                        r.method.as_str(),
                        r.certificate.as_ref().map(|c| c.lambda().to_string()).unwrap_or_default(),
                        r.layout.map(|l| l.as_str()).unwrap_or(""),
                        r.backtrack_nodes,
                    ),
                    Err(_) => (String::new(), "none", String::new(), "", 0),
                };
                let _ = writeln!(
                    text,
                    "{},{},{method},{lambda},{layout},{nodes}",
                    csv_field(&g.format_set(set)),
                    csv_field(&ord)
                );
            }
            Output::Human => match r {
                Ok(r) => {
                    let _ = writeln!(text, "set:          {{{}}} in {g}", g.format_set(set));
                    let _ = writeln!(text, "ordering:     {}", g.format_set(r.ordering.elems()));
                    let _ = writeln!(text, "partial sums: {}", g.format_set(sums.as_deref().unwrap_or(&[])));
                    let _ = writeln!(text, "method:       {}", r.method.as_str());
                    if let Some(c) = &r.certificate {
                        let _ = writeln!(text, "certificate:  lambda={} window_start={} width={} ell={}", c.lambda(), c.window_start(), c.width(), c.ell());
                    }
                    if let Some(l) = r.layout {
                        let _ = writeln!(text, "layout:       {l}");
                    }
                    if r.backtrack_nodes > 0 {
                        let _ = writeln!(text, "nodes:        {}", r.backtrack_nodes);
                    }
                }
                Err(e) => {
                    let _ = writeln!(text, "set:          {{{}}} in {g}", g.format_set(set));
                    let _ = writeln!(text, "error:        {e}");
                }
            },
        }
    }
    Ok(Emitted { text, ok })
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    group: String,
    ordering: Elems<'a>,
    partial_sums: Elems<'a>,
    #[serde(flatten)]
    report: ValidityReport,
}

fn verify(job: &Job) -> Result<Emitted, Usage> {
    let g = group(job)?;
    let orderings = sets(job, &g)?
        .into_iter()
        .map(|s| Ordering::new(g.clone(), s))
        .collect::<Result<Vec<_>, _>>()?;
    let parts: Vec<(String, bool)> = orderings
        .par_iter()
        .map(|o| {
            let report = o.analyze();
            let sums = o.partial_sums();
            let valid = report.valid;
            let text = match job.output {
                Output::Json => json_line(&VerifyReport {
                    group: g.to_string(),
                    ordering: Elems(o.elems()),
                    partial_sums: Elems(&sums),
                    report,
                }),
                Output::Csv => format!(
                    "{},{},{},{},{}\n",
                    csv_field(&g.format_set(o.elems())),
                    report.valid,
                    report.two_sided,
                    report.first_collision.map(|(i, j)| format!("{i}-{j}")).unwrap_or_default(),
                    report.zero_blocks.len()
                ),
                Output::Human => {
                    let mut t = format!("ordering:     {}\npartial sums: {}\nvalid:        {}\ntwo-sided:    {}\n", g.format_set(o.elems()), g.format_set(&sums), report.valid, report.two_sided);
                    if let Some((i, j)) = report.first_collision {
                        let _ = writeln!(t, "collision:    prefixes {i} and {j}");
                    }
                    if !report.zero_blocks.is_empty() {
                        let blocks: Vec<String> = report.zero_blocks.iter().map(|(i, j)| format!("({i},{j}]")).collect();
                        let _ = writeln!(t, "zero blocks:  {}", blocks.join(" "));
                    }
                    t
                }
            };
            (text, valid)
        })
        .collect();
    let mut text = String::new();
    if job.output == Output::Csv {
        text.push_str("ordering,valid,two_sided,first_collision,zero_blocks\n");
    }
    let ok = parts.iter().all(|p| p.1);
    text.extend(parts.into_iter().map(|p| p.0));
    Ok(Emitted { text, ok })
}

#[derive(Serialize)]
struct RectifyReport<'a> {
    p: u64,
    ell: u64,
    set: &'a [u64],
    lev_bound: u32,
    certificate: Option<&'a RectCertificate>,
    /// `None` when exhaustive verification would be too expensive.
    freiman_verified: Option<bool>,
}

/// `(ell, lev_bound, certificate, freiman_verified)` for one set.
type RectRow = (u64, u32, Option<RectCertificate>, Option<bool>);

fn rectify(job: &Job) -> Result<Emitted, Usage> {
    let g = group(job)?;
    let p = g.prime().ok_or_else(|| Usage("rectify needs --prime".into()))?;
    let residues: Vec<Vec<u64>> = sets(job, &g)?
        .into_iter()
        .map(|s| {
            let mut r: Vec<u64> = s.iter().map(|e| e.coords()[0] as u64).collect();
            r.push(0);
            r.sort_unstable();
            r.dedup();
            r
        })
        .collect();
    for r in &residues {
        let ell = job.ell.unwrap_or((r.len() as u64).saturating_sub(2).max(2));
        rectify::lev_bound(p, ell)?;
    }
    let results: Vec<Result<RectRow, RectifyError>> = residues
        .par_iter()
        .map(|set| {
            let ell = job.ell.unwrap_or((set.len() as u64).saturating_sub(2).max(2));
            let bound = rectify::lev_bound(p, ell)?;
            let cert = rectify::find_dilation(set, p, ell)?;
            let verified = match &cert {
                Some(c) => match rectify::freiman_verify(c, ell) {
                    Ok(v) => Some(v),
                    Err(RectifyError::Infeasible(_)) => None,
                    Err(e) => return Err(e),
                },
                None => None,
            };
            Ok((ell, bound, cert, verified))
        })
        .collect();
    let mut text = String::new();
    if job.output == Output::Csv {
        text.push_str("p,ell,set,lambda,window_start,width,freiman_verified\n");
    }
    let mut ok = true;
    for (set, r) in residues.iter().zip(results) {
        let (ell, bound, cert, verified) = r?;
        ok &= cert.is_some() && verified != Some(false);
        let set_text = set.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        match job.output {
            Output::Json => text.push_str(&json_line(&RectifyReport {
                p,
                ell,
                set,
                lev_bound: bound,
                certificate: cert.as_ref(),
                freiman_verified: verified,
            })),
            Output::Csv => {
                let (l, s, w) = cert
                    .as_ref()
                    .map(|c| (c.lambda().to_string(), c.window_start().to_string(), c.width().to_string()))
                    .unwrap_or_default();
                let v = verified.map(|v| v.to_string()).unwrap_or_default();
                let _ = writeln!(text, "{p},{ell},{},{l},{s},{w},{v}", csv_field(&set_text));
            }
            Output::Human => {
                let _ = writeln!(text, "set:          {{{set_text}}} mod {p}, ell={ell} (lev bound {bound})");
                match &cert {
                    Some(c) => {
                        let images: Vec<String> = c.mapping().iter().map(|(a, b)| format!("{a}->{b}")).collect();
                        let _ = writeln!(text, "lambda:       {}\nwindow:       start {} width {}", c.lambda(), c.window_start(), c.width());
                        let _ = writeln!(text, "mapping:      {}", images.join(" "));
                        let v = verified.map(|v| v.to_string()).unwrap_or_else(|| "skipped".into());
                        let _ = writeln!(text, "freiman:      {v}");
                    }
                    None => {
                        let _ = writeln!(text, "no dilation with ell*width < p");
                    }
                }
            }
        }
    }
    Ok(Emitted { text, ok })
}

fn sweep(job: &Job) -> Result<Emitted, Usage> {
    let p = job.prime.ok_or_else(|| Usage("sweep needs --prime".into()))?;
    let max_size = job.max_size.unwrap_or(p.saturating_sub(1) as usize);
    let report = search::sweep(p, max_size, job.engine.into(), &limits(job))?;
    let ok = report.counterexamples.is_empty();
    if !ok {
        eprintln!("{} subsets of F_{p} have no valid ordering; this contradicts the expected behaviour and should be reported", report.counterexamples.len());
    }
    let text = match job.output {
        Output::Json => json_line(&report),
        Output::Csv => report.to_csv(),
        Output::Human => human_sweep(&report),
    };
    Ok(Emitted { text, ok })
}

fn human_sweep(r: &SweepReport) -> String {
    let mut t = format!("F_{} up to size {} ({} engine)\n", r.p, r.max_size, r.engine);
    let _ = writeln!(t, "{:>4} {:>10} {:>6} {:>12} {:>10}", "size", "subsets", "all", "nodes", "max nodes");
    for (size, s) in &r.per_size {
        let _ = writeln!(t, "{size:>4} {:>10} {:>6} {:>12} {:>10}", s.subset_count, s.all_sequenceable, s.total_backtrack_nodes, s.max_backtrack_nodes);
    }
    let _ = writeln!(t, "{} subsets, {} counterexamples", r.subset_total(), r.counterexamples.len());
    for c in &r.counterexamples {
        let _ = writeln!(t, "counterexample: {c:?}");
    }
    t
}

#[derive(Serialize)]
struct CountReport<'a> {
    group: String,
    set: Elems<'a>,
    count: u64,
}

fn count(job: &Job) -> Result<Emitted, Usage> {
    let g = group(job)?;
    let sets = sets(job, &g)?;
    let limits = limits(job);
    for s in &sets {
        Ordering::new(g.clone(), s.clone())?;
        if s.len() > limits.count_max && !limits.force {
            return Err(Usage(format!("set of size {} exceeds the counting guard {}; pass --force", s.len(), limits.count_max)));
        }
    }
    let (mut text, ok) = batch(&sets, |set| {
        let n = search::count_valid_orderings_with(set, &g, &limits).expect("guards checked above");
        let text = match job.output {
            Output::Json => json_line(&CountReport { group: g.to_string(), set: Elems(set), count: n }),
            Output::Csv => format!("{},{n}\n", csv_field(&g.format_set(set))),
            Output::Human => format!("{{{}}}: {n} valid orderings\n", g.format_set(set)),
        };
        (text, true)
    });
    if job.output == Output::Csv {
        text.insert_str(0, "set,count\n");
    }
    Ok(Emitted { text, ok })
}
