//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on a usage error, 2 on a data error.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use foldt::bench::{bench_run, Timer};
use foldt::discretize::discretize;
use foldt::engine::{Program, Solver};
use foldt::gen::{self, Balance, Domain, GenSpec};
use foldt::learn::learn;
use foldt::rdb::{convert_all, write_background, Schema, Snapshot};
use foldt::settings::{Algorithm, Settings};
use foldt::store::{load_dataset, BlockReader, DatasetHandle, LoadOptions};
use foldt::tree::Model;
use foldt::{parse_program, parse_settings};

type Error = Box<dyn std::error::Error>;

#[derive(Parser)]
#[command(
    name = "foldt",
    version,
    about = "First-order logical decision trees from interpretations"
)]
struct Cli {
    /// Log progress (one line per tree level) to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Learn a tree and write the model file.
    Learn(LearnArgs),
    /// Classify examples with a model and report accuracy.
    Classify(ClassifyArgs),
    /// Convert a relational snapshot into interpretations.
    Convert(ConvertArgs),
    /// Generate a synthetic data set.
    Gen(GenArgs),
    /// Print the thresholds of the settings' discretize requests.
    Discretize(DataArgs),
    /// Replication scaling benchmark.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Classic,
    Lds,
}

#[derive(Args)]
struct DataArgs {
    /// Data file of begin/end blocks, or a store directory with a manifest.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    settings: PathBuf,
    /// Background program.
    #[arg(long)]
    bg: Option<PathBuf>,
    #[arg(long)]
    granularity: Option<usize>,
    /// Where to write the chunked store (default: next to the data file).
    #[arg(long)]
    store: Option<PathBuf>,
    /// Skip examples with a missing or ambiguous class.
    #[arg(long)]
    skip_bad: bool,
}

#[derive(Args)]
struct LearnArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    algo: Option<Algo>,
    #[arg(long)]
    minleaf: Option<u64>,
    /// Model file to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    bg: Option<PathBuf>,
    /// Write `id predicted actual` lines here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Classify with the decision-list form instead of the tree.
    #[arg(long)]
    rules: bool,
}

#[derive(Args)]
struct ConvertArgs {
    /// Directory with one `<table>.csv` per table.
    #[arg(long)]
    tables: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    /// Interpretations file to write.
    #[arg(long)]
    out: PathBuf,
    /// Background facts file to write.
    #[arg(long)]
    bg: PathBuf,
    /// Fail on foreign keys without a target tuple.
    #[arg(long)]
    strict_fk: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_domain)]
    domain: Domain,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Equal numbers of each class (rejection sampling).
    #[arg(long)]
    balanced: bool,
    #[arg(long)]
    out: PathBuf,
    /// Also write the domain's settings and background into this directory.
    #[arg(long)]
    bias_dir: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    algo: Option<Algo>,
    #[arg(long)]
    minleaf: Option<u64>,
    /// Replication factors.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    k: Vec<usize>,
    /// Directory for the replicated stores (default: a temporary one).
    #[arg(long)]
    work: Option<PathBuf>,
    /// Tab-separated results file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_domain(s: &str) -> Result<Domain, String> {
    s.parse()
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn program(bg: Option<&Path>) -> Result<Program, Error> {
    match bg {
        None => Ok(Program::empty()),
        Some(p) => {
            let clauses = parse_program(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?;
            Ok(Program::new(&clauses)?)
        }
    }
}

fn settings(path: &Path) -> Result<Settings, Error> {
    parse_settings(&read(path)?).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn open_data(a: &DataArgs, s: &Settings) -> Result<DatasetHandle, Error> {
    let manifest = a.data.join("manifest.txt");
    if a.data.is_dir() && manifest.exists() {
        let h = DatasetHandle::open(&manifest)?;
        return match a.granularity {
            Some(g) if g != h.granularity => {
                let dir = a
                    .store
                    .clone()
                    .unwrap_or_else(|| a.data.with_extension(format!("g{g}")));
                Ok(h.rechunk(&dir, g)?)
            }
            _ => Ok(h),
        };
    }
    let opts = LoadOptions {
        target_dir: a.store.clone(),
        granularity: a.granularity,
        skip_bad_examples: a.skip_bad,
    };
    let t = Timer::start();
    let h = load_dataset(&a.data, s, &opts)?;
    log::info!(
        "compiled {} examples into {} chunks in {:.3}s",
        h.total,
        h.chunks.len(),
        t.cpu()
    );
    Ok(h)
}

fn apply(
    s: &mut Settings,
    algo: Option<Algo>,
    minleaf: Option<u64>,
    g: Option<usize>,
) -> Result<(), Error> {
    if let Some(a) = algo {
        s.params.algorithm = match a {
            Algo::Classic => Algorithm::Classic,
            Algo::Lds => Algorithm::Lds,
        };
    }
    if let Some(m) = minleaf {
        if m == 0 {
            return Err(Usage("--minleaf must be at least 1".into()).into());
        }
        s.params.minleaf = m;
    }
    if let Some(g) = g {
        if g == 0 {
            return Err(Usage("--granularity must be at least 1".into()).into());
        }
        s.params.granularity = g;
    }
    Ok(())
}

#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn cmd_learn(a: LearnArgs) -> Result<(), Error> {
    let mut s = settings(&a.data.settings)?;
    apply(&mut s, a.algo, a.minleaf, a.data.granularity)?;
    let b = program(a.data.bg.as_deref())?;
    let data = open_data(&a.data, &s)?;
    let learned = learn(&data, &b, &s)?;
    let model = &learned.model;
    print!("{}", model.tree);
    println!();
    for rule in model.to_decision_list() {
        println!("{rule}");
    }
    let r = &learned.report;
    println!(
        "\n{} examples, {} nodes, depth {}, {} passes, {:.3}s",
        data.total,
        model.tree.node_count(),
        model.tree.depth(),
        r.passes,
        r.seconds
    );
    if let Some(out) = a.out {
        fs::write(&out, model.serialize()).map_err(|e| format!("{}: {e}", out.display()))?;
    }
    Ok(())
}

fn cmd_classify(a: ClassifyArgs) -> Result<(), Error> {
    let model =
        Model::deserialize(&read(&a.model)?).map_err(|e| format!("{}: {e}", a.model.display()))?;
    let b = program(a.bg.as_deref())?;
    let file = fs::File::open(&a.data).map_err(|e| format!("{}: {e}", a.data.display()))?;
    let mut reader = BlockReader::new(BufReader::new(file), &a.data, model.classes.clone(), false);
    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(std::io::BufWriter::new(
            fs::File::create(p).map_err(|e| format!("{}: {e}", p.display()))?,
        )),
        None => Box::new(std::io::sink()),
    };
    let classifier = model.classifier();
    let rules = model.to_decision_list();
    let mut solver = Solver::new();
    let (mut n, mut correct) = (0u64, 0u64);
    while let Some(e) = reader.next_example()? {
        let predicted = if a.rules {
            Model::classify_by_rules(&rules, &e, &b, model.settings.params.budget)?
                .ok_or("no rule of the decision list applies")?
        } else {
            classifier.classify(&e, &b, &mut solver)?
        };
        writeln!(out, "{}\t{}\t{}", e.id, predicted, e.class)?;
        n += 1;
        correct += (predicted == e.class) as u64;
    }
    out.flush()?;
    if n == 0 {
        return Err(format!("{}: no examples", a.data.display()).into());
    }
    println!(
        "{correct}/{n} correct, accuracy {:.5}",
        correct as f64 / n as f64
    );
    Ok(())
}

fn cmd_convert(a: ConvertArgs) -> Result<(), Error> {
    let schema =
        Schema::parse(&read(&a.schema)?).map_err(|e| format!("{}: {e}", a.schema.display()))?;
    let db = Snapshot::load(&a.tables, &schema)?;
    let conv = convert_all(&db, &schema, None, a.strict_fk)?;
    gen::write_examples(&a.out, &conv.examples).map_err(|e| format!("{}: {e}", a.out.display()))?;
    write_background(&a.bg, &conv.background)?;
    let r = &conv.report;
    println!(
        "{} examples, {} background facts, {} dangling references, {} locality warnings",
        conv.examples.len(),
        conv.background.len(),
        r.dangling.len(),
        r.locality_violations.len()
    );
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<(), Error> {
    if a.count == 0 {
        return Err(Usage("--count must be at least 1".into()).into());
    }
    let spec = GenSpec {
        domain: a.domain,
        count: a.count,
        seed: a.seed,
        balance: if a.balanced {
            Balance::Uniform
        } else {
            Balance::Natural
        },
    };
    gen::write_examples(&a.out, &gen::generate(&spec))
        .map_err(|e| format!("{}: {e}", a.out.display()))?;
    if let Some(dir) = a.bias_dir {
        fs::create_dir_all(&dir)?;
        let (s, bg) = match a.domain {
            Domain::Poker => (gen::POKER_SETTINGS, gen::POKER_BACKGROUND),
            Domain::Bongard => (gen::BONGARD_SETTINGS, ""),
        };
        fs::write(dir.join("settings.s"), s)?;
        fs::write(dir.join("background.pl"), bg)?;
    }
    Ok(())
}

fn cmd_discretize(a: DataArgs) -> Result<(), Error> {
    let s = settings(&a.settings)?;
    let b = program(a.bg.as_deref())?;
    let data = open_data(&a, &s)?;
    if s.discretize.is_empty() {
        println!("no discretize requests");
    }
    for req in &s.discretize {
        let th = discretize(req, &data, &b, s.params.budget, s.params.max_thresholds)?;
        let cuts: Vec<String> = th.cuts.iter().map(|c| c.to_string()).collect();
        println!("{} [{}]", req.var, cuts.join(", "));
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), Error> {
    if a.k.is_empty() || a.k.contains(&0) {
        return Err(Usage("--k needs positive replication factors".into()).into());
    }
    let mut s = settings(&a.data.settings)?;
    apply(&mut s, a.algo, a.minleaf, a.data.granularity)?;
    let b = program(a.data.bg.as_deref())?;
    let data = open_data(&a.data, &s)?;
    let tmp;
    let work = match &a.work {
        Some(w) => w.clone(),
        None => {
            tmp = tempfile::tempdir()?;
            tmp.path().to_path_buf()
        }
    };
    let outcome = bench_run(&data, &b, &s, &a.k, &work)?;
    outcome.write_tsv(std::io::stdout().lock())?;
    if let Some(out) = &a.out {
        outcome.write_tsv(fs::File::create(out).map_err(|e| format!("{}: {e}", out.display()))?)?;
    }
    if let Some(slope) = outcome.slope() {
        println!("# log-log slope of cpu seconds against N: {slope:.3}");
    }
    if !outcome.identical {
        println!("# INVALID: the tree changed across replication factors");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .parse_default_env()
        .init();
    let result = match cli.cmd {
        Cmd::Learn(a) => cmd_learn(a),
        Cmd::Classify(a) => cmd_classify(a),
        Cmd::Convert(a) => cmd_convert(a),
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Discretize(a) => cmd_discretize(a),
        Cmd::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("foldt: {e}");
            if e.is::<Usage>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
