//! Batch front door: K-group computation for graph and model files, the
//! verification suites, Bratteli diagram emission, and catalog-driven design.
//! Exit codes: 0 success, 1 verification failure, 2 input error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use kirchberg_core::afcore::Truncation;
use kirchberg_core::designer::{realize, Catalog};
use kirchberg_core::dot::bratteli_dot;
use kirchberg_core::error::{Error, Result};
use kirchberg_core::io;
use kirchberg_core::ktheory::{graph_k, model_k, parse_group, render_group, GradedK};
use kirchberg_core::model::{examples::two_block_bouquet, HybridModel};
use kirchberg_core::report::Report;
use kirchberg_core::suites;

#[derive(Parser)]
#[command(name = "kirchberg", about = "Graph-based models for Kirchberg algebras")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
    Dot,
}

#[derive(Subcommand)]
enum Verb {
    /// K-groups of a graph file
    KGraph { file: PathBuf },
    /// K-groups of a hybrid model file (cited blocks use catalog annotations)
    KModel { file: PathBuf },
    /// Run a verification suite
    Verify {
        /// all, k-engine, kunneth, pipeline, partition, ring, reducer,
        /// toeplitz, triangularity, loop-identity, relations
        suite: String,
        /// model file; the built-in two-block model when omitted
        file: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = suites::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 60)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// One floor of the Bratteli diagram between levels k and k+1
    Bratteli {
        file: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Format::Dot)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Realize blocks with prescribed K-groups, written as "K0:K1"
    /// (e.g. "Z/4:0" or "0:Z"), from the standard catalog
    Design {
        blocks: Vec<String>,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print and verify the standard catalog
    Catalog {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn emit(output: &Option<PathBuf>, content: &str) -> Result<()> {
    match output {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(p) => std::fs::write(p, content)
            .map_err(|e| Error::Input(format!("cannot write {}: {e}", p.display()))),
    }
}

fn render_k(k: &GradedK) -> String {
    format!("K0 = {}, K1 = {}\n", render_group(&k.k0), render_group(&k.k1))
}

fn load_model(file: &Option<PathBuf>) -> Result<HybridModel> {
    match file {
        Some(p) => io::read_model(p),
        None => Ok(two_block_bouquet()),
    }
}

fn report_out(r: &Report, format: Format, output: &Option<PathBuf>) -> Result<()> {
    let content = match format {
        Format::Structured => format!("{}\n", io::to_json(&io::ReportFile::of(r))?),
        _ => r.render(),
    };
    emit(output, &content)?;
    r.ensure()
}

fn run(cli: Cli) -> Result<()> {
    match cli.verb {
        Verb::KGraph { file } => {
            let g = io::read_graph(&file)?;
            print!("{}", render_k(&graph_k(&g)?));
            Ok(())
        }
        Verb::KModel { file } => {
            let m = io::read_model(&file)?;
            let k = model_k(&m, &Catalog::standard().annotations())?;
            print!("{}", render_k(&k));
            Ok(())
        }
        Verb::Verify { suite, file, k, seed, samples, format, output } => {
            let report = match suite.as_str() {
                "all" => {
                    let mut all = Report::new("acceptance");
                    for r in suites::run_all(seed)? {
                        all.note(r.verdict());
                        all.merge(r);
                    }
                    all
                }
                "k-engine" => suites::graph_k_suite()?,
                "kunneth" => suites::kunneth_suite(seed)?,
                "pipeline" => suites::pipeline_suite()?,
                "partition" => {
                    let m = load_model(&file)?;
                    let t = Truncation::new(&m, k)?;
                    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
                    t.partition_check(&mut rng, samples)?
                }
                "ring" => suites::ring_closure_suite(seed)?,
                "reducer" => suites::reducer_suite(seed)?,
                "toeplitz" => suites::toeplitz_suite(seed)?,
                "triangularity" => {
                    let m = load_model(&file)?;
                    Truncation::new(&m, k)?.inclusion_triangularity()?
                }
                "loop-identity" => suites::loop_identity_suite()?,
                "relations" => suites::relation_suite()?,
                other => return Err(Error::Input(format!("unknown suite {other}"))),
            };
            report_out(&report, format, &output)
        }
        Verb::Bratteli { file, k, format, output } => {
            let m = load_model(&file)?;
            let lower = Truncation::new(&m, k)?;
            let upper = Truncation::new(&m, k + 1)?;
            let (level, report) = lower.bratteli(&upper)?;
            let content = match format {
                Format::Dot => bratteli_dot(&m, &level, k),
                Format::Structured => format!("{}\n", io::to_json(&io::ReportFile::of(&report))?),
                Format::Text => report.render(),
            };
            emit(&output, &content)?;
            report.ensure()
        }
        Verb::Design { blocks, rank, output } => {
            let mut requests = Vec::new();
            for b in &blocks {
                let (k0, k1) = b
                    .split_once(':')
                    .ok_or_else(|| Error::Input(format!("block {b:?} is not \"K0:K1\"")))?;
                requests.push(GradedK { k0: parse_group(k0)?, k1: parse_group(k1)? });
            }
            let d = realize(&Catalog::standard(), &requests, rank)?;
            for (i, names) in d.factorization.iter().enumerate() {
                println!("block {i}: {}", names.join(" x "));
            }
            println!("model {}", render_k(&d.predicted).trim_end());
            if let Some(p) = output {
                io::write_model(&p, &d.model)?;
            }
            Ok(())
        }
        Verb::Catalog { format } => {
            let cat = Catalog::standard();
            let report = cat.verify()?;
            report_out(&report, format, &None)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Verification(msg)) => {
            eprintln!("verification failure: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
