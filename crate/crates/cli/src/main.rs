use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mobius_ac0::arith::{sieve, Kind, MuTable};
use mobius_ac0::circuits::{
    classify_ac0, dnf_corpus, generate, lmn_check, mobius_correlation, parse_circuit, Circuit, CorrelationRow,
    Family,
};
use mobius_ac0::expsum::{
    best_rational_approx, dio_hypothesis, dio_lemma, fourier_coefficient, mu_dyadic_scan, reduce_mod_one,
    sparse_value,
};
use mobius_ac0::smoothing::{katai_reduce, KataiMode, KataiRow};
use mobius_ac0::walsh::{degree_maxima, fwht, mu_walsh_decay, BitIndexSet};
use mobius_ac0::Error;

/// Möbius function against bounded-depth circuits: spectra, exponential sums, reductions.
#[derive(Parser)]
#[command(name = "mobius-ac0", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    output: OutputOpts,
}

#[derive(Args)]
struct OutputOpts {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Value counts and Mertens(N − 1) of μ or λ on [0, 2^n).
    Sieve {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value = "mobius")]
        kind: String,
        /// Also write the raw table as signed bytes.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Largest |μ̂(S)| at each degree |S| = k.
    WalshDecay {
        /// One or more n, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
        #[arg(long, default_value = "mobius")]
        kind: String,
    },
    /// max_a |μ̂(a/2^t)| for t = 1..=tmax.
    ExpsumScan {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 8)]
        tmax: u32,
        #[arg(long, default_value = "mobius")]
        kind: String,
    },
    /// Turn a large Walsh coefficient into a large Fourier coefficient at a sparse dyadic θ.
    Katai {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value = "mobius")]
        kind: String,
        /// Use the character (−1)^{Σ_{i∈P} x_i} instead of μ; P as comma separated digits.
        #[arg(long)]
        parity: Option<String>,
        /// The set S as comma separated digits.
        #[arg(long = "set")]
        set: Option<String>,
        /// Use the maximizer of |f̂(S)| over |S| = k.
        #[arg(long, default_value_t = 1)]
        k: u32,
        /// Sample this many tuples instead of searching all of them.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// E μF for one circuit, from a netlist or a generated family.
    Circuit {
        #[arg(long)]
        n: u32,
        /// Depth for the AC⁰(d) classification.
        #[arg(long, default_value_t = 2)]
        d: u32,
        #[arg(long)]
        netlist: Option<PathBuf>,
        /// and-tree, or-tree, random-dnf, comparator, true, false.
        #[arg(long, default_value = "true")]
        family: String,
        /// Comparator threshold as num/den.
        #[arg(long, default_value = "1/2")]
        threshold: String,
        #[arg(long, default_value_t = 3)]
        width: u32,
        #[arg(long, default_value_t = 10)]
        terms: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "mobius")]
        kind: String,
    },
    /// Spectral tail versus 2M·2^{−t^{1/d}/20} over a DNF corpus or one netlist.
    Lmn {
        #[arg(long, default_value_t = 14)]
        n: u32,
        #[arg(long, default_value_t = 2)]
        d: u32,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        netlist: Option<PathBuf>,
    },
    /// Walsh decay, reduction, rational approximation, dyadic lemma and scan in sequence.
    Pipeline {
        #[arg(long, default_value_t = 16)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value = "mobius")]
        kind: String,
    },
}

/// A checked property that did not hold.
#[derive(Debug)]
struct Violation(String);

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Violation {}

fn kind_of(s: &str) -> anyhow::Result<Kind> {
    s.parse::<Kind>().map_err(|e| anyhow!("--kind: {e}"))
}

fn kind_name(kind: Kind) -> &'static str {
    match kind {
        Kind::Mobius => "mobius",
        Kind::Liouville => "liouville",
    }
}

fn digits(s: &str, flag: &str) -> anyhow::Result<Vec<u32>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<u32>().with_context(|| format!("{flag}: bad digit `{p}`")))
        .collect()
}

struct Sink {
    json: bool,
    out: Box<dyn Write>,
}

impl Sink {
    fn new(opts: &OutputOpts) -> anyhow::Result<Self> {
        let out: Box<dyn Write> = match &opts.out {
            Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
            None => Box::new(io::stdout().lock()),
        };
        Ok(Sink { json: opts.json, out })
    }

    fn emit<T: Serialize>(&mut self, rows: &[T]) -> anyhow::Result<()> {
        if self.json {
            serde_json::to_writer_pretty(&mut self.out, rows)?;
            writeln!(self.out)?;
        } else {
            let mut w = csv::Writer::from_writer(&mut self.out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct SieveRow {
    n: u32,
    kind: &'static str,
    #[serde(rename = "N")]
    big_n: u64,
    minus_one: u64,
    zero: u64,
    plus_one: u64,
    mertens: i64,
}

#[derive(Serialize)]
struct LmnCsvRow {
    circuit: String,
    n: u32,
    d: u32,
    #[serde(rename = "M")]
    m: usize,
    t: u32,
    tail_num: i128,
    tail_den: i128,
    bound: f64,
    satisfied: bool,
}

#[derive(Serialize)]
struct StageRow {
    stage: &'static str,
    quantity: &'static str,
    value: String,
}

fn cmd_sieve(n: u32, kind: Kind, dump: Option<PathBuf>, sink: &mut Sink) -> anyhow::Result<()> {
    let table = sieve(n, kind)?;
    if let Some(path) = dump {
        let bytes: Vec<u8> = table.values().iter().map(|&v| v as u8).collect();
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    }
    let [minus_one, zero, plus_one] = table.value_counts();
    sink.emit(&[SieveRow {
        n,
        kind: kind_name(kind),
        big_n: table.len() as u64,
        minus_one,
        zero,
        plus_one,
        mertens: table.sum(),
    }])
}

fn cmd_walsh_decay(ns: &[u32], kind: Kind, sink: &mut Sink) -> anyhow::Result<()> {
    let mut rows = Vec::new();
    for &n in ns {
        rows.extend(mu_walsh_decay(&sieve(n, kind)?)?);
    }
    sink.emit(&rows)
}

fn cmd_katai(
    n: u32,
    kind: Kind,
    parity: Option<String>,
    set: Option<String>,
    k: u32,
    mode: KataiMode,
    sink: &mut Sink,
) -> anyhow::Result<()> {
    let values: Vec<i8> = match parity {
        Some(p) => {
            let mask = BitIndexSet::from_indices(n, &digits(&p, "--parity")?)?.mask();
            (0..1u64 << n).map(|x| if (x & mask).count_ones() % 2 == 0 { 1 } else { -1 }).collect()
        }
        None => sieve(n, kind)?.values().to_vec(),
    };
    let s = match set {
        Some(s) => BitIndexSet::from_indices(n, &digits(&s, "--set")?)?,
        None => {
            if k == 0 || k > n {
                bail!("--k must lie in 1..={n}");
            }
            let maxima = degree_maxima(&fwht(&values)?);
            BitIndexSet::from_mask(n, maxima[k as usize].witness_mask)?
        }
    };
    let report = katai_reduce(&values, s, mode)?;
    eprintln!(
        "S = {s}, δ = {}/{}, ε = {}, R = {}, |E f∏ψ̃| = {:.6e} (≥ {:.6e})",
        report.delta_num, report.delta_den, report.epsilon, report.radius, report.smoothed_product,
        report.smoothed_threshold
    );
    sink.emit(&[KataiRow::from(&report)])?;
    if !report.bound_met {
        return Err(Violation(format!("|f̂(θ)| = {} < {}", report.value_abs, report.bound_abs)).into());
    }
    Ok(())
}

fn parse_family(family: &str, threshold: &str, width: u32, terms: u32, seed: u64) -> anyhow::Result<Family> {
    Ok(match family {
        "and-tree" | "and_tree" => Family::AndTree,
        "or-tree" | "or_tree" => Family::OrTree,
        "random-dnf" | "random_dnf" => Family::RandomDnf { width, terms, seed },
        "comparator" | "digit-comparator" | "digit_comparator" => {
            let (num, den) = threshold
                .split_once('/')
                .ok_or_else(|| anyhow!("--threshold must look like num/den"))?;
            Family::DigitComparator { num: num.trim().parse()?, den: den.trim().parse()? }
        }
        "true" | "constant-true" => Family::Constant(true),
        "false" | "constant-false" => Family::Constant(false),
        other => bail!("unknown family `{other}`"),
    })
}

fn load_netlist(path: &PathBuf, n: u32) -> anyhow::Result<Circuit> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("netlist").to_string();
    let c = parse_circuit(&text).with_context(|| format!("{}", path.display()))?;
    Ok(c.widen(n)?.with_name(name))
}

fn cmd_circuit(c: Circuit, d: u32, kind: Kind, sink: &mut Sink) -> anyhow::Result<()> {
    let table = sieve(c.n(), kind)?;
    let report = mobius_correlation(&c, &table)?;
    let m = c.metrics();
    eprintln!(
        "{}: size {} depth {} (raw {} / {}), AC0({d}) = {}",
        c.name(),
        m.nnf_size,
        m.nnf_depth,
        m.size,
        m.depth,
        classify_ac0(&c, d)
    );
    sink.emit(&[CorrelationRow::from(&report)])?;
    if report.mean().abs() > 1.0 {
        return Err(Violation(format!("|E μF| = {} > 1", report.mean())).into());
    }
    Ok(())
}

fn cmd_lmn(circuits: &[Circuit], d: u32, sink: &mut Sink) -> anyhow::Result<()> {
    let mut rows = Vec::new();
    let mut failures = 0;
    for c in circuits {
        let rep = lmn_check(c, d)?;
        failures += rep.rows.iter().filter(|r| !r.satisfied).count();
        rows.extend(rep.rows.iter().map(|r| LmnCsvRow {
            circuit: rep.circuit.clone(),
            n: rep.n,
            d: rep.depth,
            m: rep.size,
            t: r.t,
            tail_num: r.tail_numerator,
            tail_den: r.tail_denominator,
            bound: r.bound,
            satisfied: r.satisfied,
        }));
    }
    sink.emit(&rows)?;
    if failures > 0 {
        return Err(Violation(format!("{failures} tail bounds violated")).into());
    }
    Ok(())
}

fn cmd_pipeline(n: u32, k: u32, kind: Kind, sink: &mut Sink) -> anyhow::Result<()> {
    if n > 20 || k == 0 || k > 2 || k > n {
        bail!("pipeline needs n ≤ 20 and 1 ≤ k ≤ min(2, n)");
    }
    let mut rows = Vec::new();
    let mut put = |stage: &'static str, quantity: &'static str, value: String| {
        eprintln!("[{stage}] {quantity} = {value}");
        rows.push(StageRow { stage, quantity, value });
    };

    let table: MuTable = sieve(n, kind).context("stage sieve")?;
    let maxima = degree_maxima(&fwht(table.values()).context("stage walsh")?);
    let top = maxima[k as usize];
    let s = BitIndexSet::from_mask(n, top.witness_mask)?;
    put("walsh", "S", s.to_string());
    put("walsh", "delta", format!("{}/{}", top.max_abs_coeff_numerator, top.big_n));

    let rep = katai_reduce(table.values(), s, KataiMode::Exhaustive).context("stage katai")?;
    put("katai", "epsilon", rep.epsilon.to_string());
    put("katai", "radius", rep.radius.to_string());
    put("katai", "theta", rep.theta.describe());
    put("katai", "value_abs", format!("{:.12e}", rep.value_abs));
    put("katai", "bound_abs", format!("{:.12e}", rep.bound_abs));

    let theta = &rep.theta;
    let q_bound = theta.max_abs_coefficient().max(1);
    let raw = theta.raw_value();
    let approx = best_rational_approx(&raw, q_bound).context("stage approx")?;
    put("approx", "Q", q_bound.to_string());
    put("approx", "a/q", format!("{}/{}", approx.a, approx.q));
    put("approx", "error", approx.err.to_string());
    if !approx.satisfies_dirichlet(q_bound) {
        return Err(Violation("stage approx: Dirichlet bound fails".into()).into());
    }

    let hypothesis = dio_hypothesis(theta.k(), q_bound, n);
    put("lemma", "hypothesis", hypothesis.to_string());
    let mut dyadic = sparse_value(theta);
    if hypothesis {
        let lemma = dio_lemma(theta, q_bound, n).context("stage lemma")?;
        put("lemma", "q_prime", lemma.q_prime().to_string());
        put("lemma", "a_prime", lemma.a_prime.to_string());
        put("lemma", "error", lemma.error.to_string());
        put(
            "lemma",
            "approx_matches",
            lemma.approx_matches.map_or("n/a".to_string(), |b| b.to_string()),
        );
        dyadic = reduce_mod_one(&lemma.approximant());
    }

    let value = fourier_coefficient(table.values(), &dyadic).context("stage scan")?.norm();
    let t = theta.max_exponent();
    let scan = mu_dyadic_scan(&table, t).context("stage scan")?;
    let level = scan.iter().find(|r| r.t == t).ok_or_else(|| anyhow!("stage scan: level {t} missing"))?;
    put("scan", "dyadic_point", dyadic.to_string());
    put("scan", "value_abs", format!("{value:.12e}"));
    put("scan", "level_max", format!("{:.12e}", level.max_abs_value));
    if value > level.max_abs_value + 1e-12 {
        return Err(Violation("stage scan: value exceeds its level maximum".into()).into());
    }
    sink.emit(&rows)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(t) = cli.output.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let mut sink = Sink::new(&cli.output)?;
    match cli.command {
        Command::Sieve { n, kind, dump } => cmd_sieve(n, kind_of(&kind)?, dump, &mut sink),
        Command::WalshDecay { n, kind } => cmd_walsh_decay(&n, kind_of(&kind)?, &mut sink),
        Command::ExpsumScan { n, tmax, kind } => {
            let rows = mu_dyadic_scan(&sieve(n, kind_of(&kind)?)?, tmax)?;
            sink.emit(&rows)
        }
        Command::Katai { n, kind, parity, set, k, samples, seed } => {
            let mode = match samples {
                Some(samples) => KataiMode::Sampled { samples, seed },
                None => KataiMode::Exhaustive,
            };
            cmd_katai(n, kind_of(&kind)?, parity, set, k, mode, &mut sink)
        }
        Command::Circuit { n, d, netlist, family, threshold, width, terms, seed, kind } => {
            let c = match netlist {
                Some(p) => load_netlist(&p, n)?,
                None => generate(parse_family(&family, &threshold, width, terms, seed)?, n)?,
            };
            cmd_circuit(c, d, kind_of(&kind)?, &mut sink)
        }
        Command::Lmn { n, d, count, seed, netlist } => {
            let circuits = match netlist {
                Some(p) => vec![load_netlist(&p, n)?],
                None => dnf_corpus(n, count, seed)?,
            };
            cmd_lmn(&circuits, d, &mut sink)
        }
        Command::Pipeline { n, k, kind } => cmd_pipeline(n, k, kind_of(&kind)?, &mut sink),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let violated = e.downcast_ref::<Violation>().is_some()
                || matches!(e.downcast_ref::<Error>(), Some(Error::Invariant(_)));
            ExitCode::from(if violated { 2 } else { 1 })
        }
    }
}
