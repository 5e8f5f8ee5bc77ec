use clap::{Parser, Subcommand};
use latticefourier::bench::{self, ExperimentConfig, LatticeSource, SetSpec, SignalSpec};
use latticefourier::lattice::{read_lattice_file, write_lattice_file};
use latticefourier::{CbcOptions, CbcSearch, Error, Rank1Lattice};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_VERIFY: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "latticefourier", version, about = "Sparse FFT along rank-1 lattices: experiments and lattice tools")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment described by a JSON config; flags override its fields.
    Run(Box<RunArgs>),
    /// Check that a lattice file is reconstructing for a set.
    VerifyLattice {
        lattice: PathBuf,
        set: String,
        /// Also require every projected set to be reconstructed.
        #[arg(long)]
        projections: bool,
    },
    /// Build a reconstructing lattice component by component.
    Cbc {
        set: String,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        projections: bool,
        /// Integer-greedy search: much faster on big sets, larger lattices.
        #[arg(long)]
        integer: bool,
    },
    /// Fast sanity checks.
    Selftest,
}

#[derive(clap::Args)]
struct RunArgs {
    config: Option<PathBuf>,
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    set: Option<String>,
    #[arg(long)]
    lattice: Option<String>,
    #[arg(long)]
    signal: Option<String>,
    #[arg(long)]
    sft: Option<String>,
    #[arg(long)]
    random_scale: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    rate_constant: Option<f64>,
    #[arg(long)]
    union_bound: Option<bool>,
    #[arg(long, value_delimiter = ',')]
    sparsity: Option<Vec<usize>>,
    /// Comma-separated levels, or `none`.
    #[arg(long)]
    snr_db: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    bandwidth: Option<String>,
    #[arg(long)]
    check_membership: Option<bool>,
    #[arg(long)]
    verify_lattice: Option<bool>,
    #[arg(long)]
    trial_time_limit_s: Option<f64>,
    #[arg(long)]
    timing: Option<bool>,
    /// CSV path; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, Error> {
    s.parse()
}

fn build_config(a: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str::<ExperimentConfig>(&text).map_err(|e| Error::Parse(e.to_string()))?
        }
        None => {
            let algorithm = a.algorithm.as_deref().ok_or_else(|| Error::InvalidArgument("--algorithm is required".into()))?;
            let set = a.set.as_deref().ok_or_else(|| Error::InvalidArgument("--set is required".into()))?;
            let sparsity = a.sparsity.clone().ok_or_else(|| Error::InvalidArgument("--sparsity is required".into()))?;
            ExperimentConfig::new(parse(algorithm)?, parse::<SetSpec>(set)?, sparsity, a.trials.unwrap_or(1))
        }
    };
    if let Some(v) = &a.algorithm {
        cfg.algorithm = parse(v)?;
    }
    if let Some(v) = &a.set {
        cfg.set = parse(v)?;
    }
    if let Some(v) = &a.lattice {
        cfg.lattice = parse::<LatticeSource>(v)?;
    }
    if let Some(v) = &a.signal {
        cfg.signal = parse::<SignalSpec>(v)?;
    }
    if let Some(v) = &a.sft {
        cfg.sft = v.clone();
    }
    if let Some(v) = a.random_scale {
        cfg.random_scale = v;
    }
    if let Some(v) = a.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = a.rate_constant {
        cfg.rate_constant = v;
    }
    if let Some(v) = a.union_bound {
        cfg.union_bound = v;
    }
    if let Some(v) = &a.sparsity {
        cfg.sparsity = v.clone();
    }
    if let Some(v) = &a.snr_db {
        cfg.snr_db = if v == "none" {
            None
        } else {
            Some(
                v.split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad SNR {x:?}"))))
                    .collect::<Result<_, _>>()?,
            )
        };
    }
    if let Some(v) = a.trials {
        cfg.trials = v;
    }
    if let Some(v) = a.base_seed {
        cfg.base_seed = v;
    }
    if let Some(v) = &a.bandwidth {
        cfg.bandwidth = v.clone();
    }
    if let Some(v) = a.check_membership {
        cfg.check_membership = v;
    }
    if let Some(v) = a.verify_lattice {
        cfg.verify_lattice = v;
    }
    if let Some(v) = a.trial_time_limit_s {
        cfg.trial_time_limit_s = v;
    }
    if let Some(v) = a.timing {
        cfg.timing = v;
    }
    if a.output.is_some() {
        cfg.output = a.output.clone();
    }
    if a.summary.is_some() {
        cfg.summary = a.summary.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(a: &RunArgs) -> Result<u8, Error> {
    let cfg = build_config(a)?;
    let res = bench::run_experiment(&cfg)?;
    match &cfg.output {
        Some(p) => bench::emit_csv(&res.records, p)?,
        None => bench::write_csv(&res.records, std::io::stdout().lock())?,
    }
    if let Some(p) = &cfg.summary {
        bench::emit_summary(&res.summary, p)?;
    }
    eprintln!("lattice {} ({} trials)", res.lattice, res.records.len());
    Ok(0)
}

fn verify(lattice: &Path, set: &str, projections: bool) -> Result<u8, Error> {
    let set = parse::<SetSpec>(set)?.build()?;
    let lat = read_lattice_file(lattice)?;
    let ok = if projections { lat.is_reconstructing_with_projections(&set)? } else { lat.is_reconstructing(&set)? };
    println!("{}", if ok { "reconstructing" } else { "not reconstructing" });
    Ok(if ok { 0 } else { EXIT_VERIFY })
}

fn cbc(set: &str, output: &Path, projections: bool, integer: bool) -> Result<u8, Error> {
    let set = parse::<SetSpec>(set)?.build()?;
    let search = if integer { CbcSearch::IntegerThenReduce } else { CbcSearch::PerSize };
    let lat = Rank1Lattice::cbc_construct(&set, &CbcOptions { search, require_projections: projections, ..Default::default() })?;
    write_lattice_file(&lat, output)?;
    println!("{lat}");
    Ok(0)
}

fn selftest() -> u8 {
    let mut failed = 0;
    for (name, ok) in bench::selftest() {
        println!("{} {name}", if ok { "ok  " } else { "FAIL" });
        failed += usize::from(!ok);
    }
    if failed == 0 {
        0
    } else {
        EXIT_VERIFY
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("LATTICEFOURIER_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let res = match &cli.cmd {
        Cmd::Run(a) => run(a),
        Cmd::VerifyLattice { lattice, set, projections } => verify(lattice, set, *projections),
        Cmd::Cbc { set, output, projections, integer } => cbc(set, output, *projections, *integer),
        Cmd::Selftest => Ok(selftest()),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::BudgetExceeded => EXIT_BUDGET,
                Error::Precondition(_) => EXIT_VERIFY,
                _ => 1,
            })
        }
    }
}
