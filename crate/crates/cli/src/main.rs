use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use jdeep_core::fragment::fragment_regression_items;
use jdeep_core::grammar::{Grammar, GrammarError, GrammarSources};
use jdeep_core::harness::{compare_profiles, parse_suite, run_profile, Profile, SuiteError};
use jdeep_core::mrs::{check_wellformed, extract_mrs};
use jdeep_core::parser::{parse_text, unpack_nbest, ParseOptions, DEFAULT_EDGE_LIMIT};

#[derive(Parser)]
#[command(
    name = "jdeep",
    version,
    about = "Deep parsing of Japanese with a small HPSG fragment"
)]
struct Cli {
    /// Directory holding types.gs, lexicon.gs, lexrules.gs, schemata.gs and roots.gs.
    #[arg(long, global = true)]
    grammar: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Switch::On)]
    qc: Switch,
    #[arg(long, global = true, default_value_t = DEFAULT_EDGE_LIMIT)]
    edge_limit: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse one input and print ranked derivations.
    Parse {
        input: String,
        #[arg(long, default_value_t = 5)]
        nbest: usize,
        /// Also print the MRS and context of each derivation.
        #[arg(long)]
        mrs: bool,
    },
    /// Run a test suite and print its profile.
    Batch {
        /// Suite TSV; the bundled regression suite when omitted.
        suite: Option<PathBuf>,
        /// Write the machine-readable profile here.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Compare two profile TSVs.
    Diff { old: PathBuf, new: PathBuf },
    /// Load the grammar and report problems.
    Lint,
}

enum Failure {
    Load(anyhow::Error),
    Suite(anyhow::Error),
}

impl From<GrammarError> for Failure {
    fn from(e: GrammarError) -> Self {
        Failure::Load(e.into())
    }
}

fn suite_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Suite(e.into())
}

fn load(dir: Option<&Path>) -> Result<&'static Grammar, GrammarError> {
    match dir {
        None => Ok(Grammar::bundled()),
        Some(d) => Ok(Box::leak(Box::new(Grammar::load(&GrammarSources::from_dir(d)?)?))),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let opts = ParseOptions {
        edge_limit: cli.edge_limit,
        quick_check: cli.qc == Switch::On,
        ..ParseOptions::default()
    };
    match cli.cmd {
        Cmd::Lint => {
            let g = load(cli.grammar.as_deref())?;
            println!(
                "ok: {} types, {} lexical entries, {} lexical rules, {} schemata, {} root conditions",
                g.hierarchy.len(),
                g.lexicon.len(),
                g.lexical_rules.len(),
                g.schemata.len(),
                g.roots.len()
            );
        }
        Cmd::Parse { input, nbest, mrs } => {
            let g = load(cli.grammar.as_deref())?;
            let out = parse_text(&input, g, &opts).map_err(suite_err)?;
            println!("{} readings, {} edges", out.forest.roots.len(), out.stats.edges);
            for (i, d) in unpack_nbest(&out.forest, g, nbest).iter().enumerate() {
                println!("[{}] {} {}", i + 1, d.score, d.tree);
                if mrs {
                    match extract_mrs(g, &out.forest.edges[d.edge].sign) {
                        Ok(m) => {
                            println!("    {m}");
                            println!("    {}", m.context_report());
                            if let Err(ds) = check_wellformed(&m) {
                                let ds: Vec<String> = ds.iter().map(|d| d.to_string()).collect();
                                println!("    ill-formed: {}", ds.join("; "));
                            }
                        }
                        Err(e) => println!("    no MRS: {e}"),
                    }
                }
            }
        }
        Cmd::Batch { suite, profile } => {
            let g = load(cli.grammar.as_deref())?;
            let items = match suite {
                Some(p) => parse_suite(&read(&p).map_err(Failure::Suite)?).map_err(suite_err)?,
                None => fragment_regression_items(),
            };
            let p = run_profile(&items, g, &opts);
            print!("{}", p.to_table());
            if let Some(path) = profile {
                std::fs::write(&path, p.to_tsv())
                    .with_context(|| format!("writing {}", path.display()))
                    .map_err(Failure::Suite)?;
            }
        }
        Cmd::Diff { old, new } => {
            let old = Profile::from_tsv(&read(&old).map_err(Failure::Suite)?).map_err(suite_err)?;
            let new = Profile::from_tsv(&read(&new).map_err(Failure::Suite)?).map_err(suite_err)?;
            let rep = compare_profiles(&old, &new).map_err(|e: SuiteError| suite_err(e))?;
            if rep.is_empty() {
                println!("no differences");
            } else {
                print!("{rep}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Load(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Suite(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
