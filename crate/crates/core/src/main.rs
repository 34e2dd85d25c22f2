//! Command-line front end: submodular-difference minimization, tree
//! structure learning, classifier evaluation, benchmark reproductions, and
//! synthetic model generation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dsmin::error::{validation, Error, Result};
use dsmin::harness::{
    canonical_json, cmd_featsel, cmd_repro_table2, cmd_synth, cmd_table3, describe_ssp_result,
    load_model, load_oracle, load_tree, parse_n_list, parse_weight_variant, FeatselConfig,
    Table3Config,
};
use dsmin::model::SynthSpec;
use dsmin::sfm::Engine;
use dsmin::ssp::{ssp_minimize, SspOptions};
use dsmin::tree::{
    chow_liu_tree, fit_tree_classifier, make_discriminative_tree, DiscTreeOptions, EarSign,
    EvalMethod, TreeStructure,
};

#[derive(Parser)]
#[command(
    name = "dsmin",
    version,
    about = "Difference-of-submodular minimization and discriminative tree learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Submodular-difference minimization.
    Ssp {
        #[command(subcommand)]
        command: SspCommand,
    },
    /// Tree structure learning.
    Tree {
        #[command(subcommand)]
        command: TreeCommand,
    },
    /// Evaluate a tree classifier's error against a model.
    Eval(EvalArgs),
    /// Reproduce the published experiments.
    Repro {
        #[command(subcommand)]
        command: ReproCommand,
    },
    /// Generate a synthetic two-class Gaussian model file.
    Synth(SynthArgs),
    /// Feature selection: optimize g − k·c.
    Featsel(FeatselArgs),
}

#[derive(Subcommand)]
enum SspCommand {
    /// Minimize f − g over proper non-empty subsets.
    Min(SspMinArgs),
}

#[derive(Args)]
struct SspMinArgs {
    /// Oracle file for the minuend f (explicit table or model file).
    #[arg(long)]
    f: PathBuf,
    /// Oracle file for the subtracted submodular term g.
    #[arg(long)]
    g: PathBuf,
    /// Minimum accepted improvement per iteration.
    #[arg(long, default_value_t = 1e-9)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    restarts: u32,
    /// Local-search certification radius (0, 1, or 2).
    #[arg(long = "local-search", default_value_t = 0)]
    local_search: u32,
    /// Inner submodular minimization engine.
    #[arg(long, default_value = "minnorm")]
    engine: String,
    /// Optional JSONL trace of accepted iterates.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TreeCommand {
    /// Maximum-weight spanning tree under pairwise MI weights.
    Chowliu {
        #[arg(long)]
        model: PathBuf,
        /// Weight variant: mi | cmi | classwise:<c> (1-based class).
        #[arg(long)]
        weights: String,
    },
    /// Recursive discriminative tree learning.
    Disc {
        #[arg(long)]
        model: PathBuf,
        /// Pivot sign convention: prose (default) or printed.
        #[arg(long = "ear-sign", default_value = "prose")]
        ear_sign: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        restarts: u32,
    },
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    tree: PathBuf,
    /// Evaluation method: exact | mc.
    #[arg(long)]
    method: String,
    /// Monte-Carlo sample count (mc only).
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum ReproCommand {
    /// Exact error rates of the four classifiers on the 3-variable model.
    Table2,
    /// Synthetic Gaussian benchmark sweep.
    Table3 {
        /// Sizes, e.g. "6,7,8" or "5,6,...,15".
        #[arg(long, default_value = "6,7,...,10")]
        n: String,
        /// Seeds per size.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Training samples per class.
        #[arg(long, default_value_t = 2000)]
        train: usize,
        /// Test samples from the mixture.
        #[arg(long, default_value_t = 2000)]
        test: usize,
        /// Optional JSON sidecar with per-cell results.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "common-strength", default_value_t = 0.6)]
    common_strength: f64,
    #[arg(long = "disc-strength", default_value_t = 0.2)]
    disc_strength: f64,
    #[arg(long = "backbone-tilt", default_value_t = 0.05)]
    backbone_tilt: f64,
    #[arg(long = "diagonal-load", default_value_t = 0.0)]
    diagonal_load: f64,
}

#[derive(Args)]
struct FeatselArgs {
    /// Submodular information oracle g.
    #[arg(long)]
    g: PathBuf,
    /// Submodular cost oracle c.
    #[arg(long)]
    c: PathBuf,
    /// Cost multiplier.
    #[arg(long)]
    k: f64,
    /// Maximize g − k·c instead of minimizing it.
    #[arg(long, default_value_t = false)]
    maximize: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    restarts: u32,
    #[arg(long, default_value = "minnorm")]
    engine: String,
}

fn parse_engine(text: &str) -> Result<Engine> {
    text.parse()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ssp {
            command: SspCommand::Min(args),
        } => {
            let f = load_oracle(&args.f)?;
            let g = load_oracle(&args.g)?;
            let opts = SspOptions {
                delta: args.delta,
                seed: args.seed,
                restarts: args.restarts,
                local_search_radius: args.local_search,
                engine: parse_engine(&args.engine)?,
                ..SspOptions::default()
            };
            let (result, trace) = ssp_minimize(&f, &g, &opts)?;
            if let Some(path) = &args.trace {
                std::fs::write(path, trace.to_jsonl())?;
            }
            let summary = describe_ssp_result(&result, trace.certified);
            print!("{}", canonical_json(&summary));
        }
        Command::Tree { command } => match command {
            TreeCommand::Chowliu { model, weights } => {
                let (model, warnings) = load_model(&model)?;
                warn(&warnings);
                let variant = parse_weight_variant(&weights)?;
                let tree = chow_liu_tree(&model.mi_edge_weights(variant)?)?;
                print!("{}", canonical_json(&tree));
            }
            TreeCommand::Disc {
                model,
                ear_sign,
                seed,
                restarts,
            } => {
                let (model, warnings) = load_model(&model)?;
                warn(&warnings);
                let opts = DiscTreeOptions {
                    ssp: SspOptions {
                        seed,
                        restarts,
                        local_search_radius: 1,
                        ..SspOptions::default()
                    },
                    ear_sign: ear_sign.parse::<EarSign>()?,
                };
                let tree = make_discriminative_tree(&model, &opts)?;
                print!("{}", canonical_json(&tree));
            }
        },
        Command::Eval(args) => {
            let (model, warnings) = load_model(&args.model)?;
            warn(&warnings);
            let tree: TreeStructure = load_tree(&args.tree)?;
            let classifier = fit_tree_classifier(&model, &tree)?;
            let method = match args.method.as_str() {
                "exact" => EvalMethod::Exact,
                "mc" => EvalMethod::MonteCarlo {
                    samples: args.samples,
                    seed: args.seed,
                },
                other => {
                    return Err(validation(format!(
                        "unknown evaluation method '{other}', expected exact|mc"
                    )))
                }
            };
            let error = dsmin::tree::evaluate_error(&model, &classifier, &method)?;
            println!("{error}");
        }
        Command::Repro { command } => match command {
            ReproCommand::Table2 => {
                let report = cmd_repro_table2()?;
                print!("{}", report.render_text());
            }
            ReproCommand::Table3 {
                n,
                seeds,
                train,
                test,
                out,
            } => {
                let cfg = Table3Config {
                    n_list: parse_n_list(&n)?,
                    seeds,
                    train,
                    test,
                };
                let mut outcome = cmd_table3(&cfg)?;
                outcome.report.details =
                    Some(serde_json::to_value(&outcome.cells).expect("cells serialize"));
                print!("{}", outcome.report.render_text());
                if let Some(path) = &out {
                    std::fs::write(path, outcome.report.to_json_string())?;
                }
            }
        },
        Command::Synth(args) => {
            let spec = SynthSpec {
                n: args.n,
                seed: args.seed,
                common_strength: args.common_strength,
                disc_strength: args.disc_strength,
                backbone_tilt: args.backbone_tilt,
                diagonal_load: args.diagonal_load,
            };
            let report = cmd_synth(&spec, &args.out)?;
            print!("{}", report.render_text());
        }
        Command::Featsel(args) => {
            let g = load_oracle(&args.g)?;
            let c = load_oracle(&args.c)?;
            let cfg = FeatselConfig {
                k: args.k,
                maximize: args.maximize,
                ssp: SspOptions {
                    seed: args.seed,
                    restarts: args.restarts,
                    engine: parse_engine(&args.engine)?,
                    local_search_radius: 1,
                    ..SspOptions::default()
                },
            };
            let outcome = cmd_featsel(&g, &c, &cfg)?;
            print!("{}", outcome.report.render_text());
        }
    }
    Ok(())
}

fn warn(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_of(&err))
        }
    }
}

fn exit_code_of(err: &Error) -> u8 {
    err.exit_code() as u8
}
