//! `xgcf`: expected-goals fitting and counterfactual substitution reports.
//!
//! Pipeline subcommands: `ingest`, `features`, `fit`, `diagnose`, `xg`,
//! `counterfactual`. All artifacts land under `--out` with fixed names;
//! any stage can run from a previous stage's persisted output.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::EXIT_ERROR;
use config::RunConfig;
use xgcf_core::model::{ModelKind, PriorMode};
use xgcf_core::nuts::InitStrategy;

#[derive(Parser)]
#[command(name = "xgcf", version, about = "Expected-goals models with expert priors and counterfactual substitution analysis")]
struct Cli {
    /// JSON run configuration; CLI flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Sampler seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for all artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct InputArgs {
    /// Directory of event JSON files (one array per file).
    #[arg(long)]
    events_dir: Option<PathBuf>,
    /// Canonical shots.csv input (alternative to --events-dir).
    #[arg(long)]
    shots_csv: Option<PathBuf>,
    /// Expert rating table (name,finishing,technique,long_shots,heading[,birth_date]).
    #[arg(long)]
    ratings: Option<PathBuf>,
    /// Alias file (event_name,rating_name).
    #[arg(long)]
    aliases: Option<PathBuf>,
    /// Minimum shots per player; players below are dropped.
    #[arg(long)]
    min_shots: Option<usize>,
}

#[derive(Args, Default)]
struct ModelArgs {
    /// Model kind: baseline or hierarchical.
    #[arg(long)]
    kind: Option<String>,
    /// Prior mode: weakly_informative or expert_informed.
    #[arg(long)]
    prior_mode: Option<String>,
    /// Number of chains.
    #[arg(long)]
    chains: Option<usize>,
    /// Warmup iterations per chain.
    #[arg(long)]
    warmup: Option<usize>,
    /// Post-warmup draws per chain.
    #[arg(long)]
    draws: Option<usize>,
    /// Dual-averaging target acceptance rate.
    #[arg(long)]
    target_accept: Option<f64>,
    /// NUTS doubling cap.
    #[arg(long)]
    max_tree_depth: Option<u32>,
    /// Chain initialisation: map, zero, or jitter.
    #[arg(long)]
    init: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse events and ratings, link players, write the canonical shots.csv.
    Ingest(InputArgs),
    /// Ingest plus the standardized design-matrix export.
    Features(InputArgs),
    /// Full pipeline: ingest, features, priors, MAP-initialised NUTS fit.
    Fit {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Convergence diagnostics of a persisted fit; exit 0 iff score >= 4/5.
    Diagnose {
        /// Directory holding draws_chain_*.csv (defaults to --out).
        #[arg(long)]
        draws: Option<PathBuf>,
    },
    /// Posterior-mean xG per shot from a persisted fit.
    Xg {
        #[arg(long)]
        draws: Option<PathBuf>,
    },
    /// Counterfactual substitution report: what if --to had taken --from's shots?
    Counterfactual {
        #[arg(long)]
        draws: Option<PathBuf>,
        /// Player whose shot contexts are held fixed.
        #[arg(long)]
        from: String,
        /// Player whose effects are substituted in.
        #[arg(long)]
        to: String,
        /// Context partition flag (under_pressure, first_time, one_on_one,
        /// penalty_area) or "single" for no decomposition.
        #[arg(long)]
        context: Option<String>,
        /// Team whose shot portfolio weights the FATS score.
        #[arg(long)]
        team: Option<String>,
        /// Also dump per-draw deltas as CSV.
        #[arg(long)]
        dump_draws: bool,
    },
}

fn parse_kind(text: &str) -> anyhow::Result<ModelKind> {
    match text {
        "baseline" => Ok(ModelKind::Baseline),
        "hierarchical" => Ok(ModelKind::Hierarchical),
        other => anyhow::bail!("unknown model kind '{other}'"),
    }
}

fn parse_prior_mode(text: &str) -> anyhow::Result<PriorMode> {
    match text {
        "weakly_informative" => Ok(PriorMode::WeaklyInformative),
        "expert_informed" => Ok(PriorMode::ExpertInformed),
        other => anyhow::bail!("unknown prior mode '{other}'"),
    }
}

fn parse_init(text: &str) -> anyhow::Result<InitStrategy> {
    match text {
        "map" => Ok(InitStrategy::Map),
        "zero" => Ok(InitStrategy::Zero),
        "jitter" => Ok(InitStrategy::Jitter),
        other => anyhow::bail!("unknown init strategy '{other}'"),
    }
}

fn apply_input(config: &mut RunConfig, args: &InputArgs) {
    if args.events_dir.is_some() {
        config.events_dir = args.events_dir.clone();
    }
    if args.shots_csv.is_some() {
        config.shots_csv = args.shots_csv.clone();
    }
    if args.ratings.is_some() {
        config.fm_ratings = args.ratings.clone();
    }
    if args.aliases.is_some() {
        config.aliases = args.aliases.clone();
    }
    if let Some(min) = args.min_shots {
        config.min_shots = min;
    }
}

fn apply_model(config: &mut RunConfig, args: &ModelArgs) -> anyhow::Result<()> {
    if let Some(kind) = &args.kind {
        config.kind = parse_kind(kind)?;
    }
    if let Some(mode) = &args.prior_mode {
        config.prior_mode = parse_prior_mode(mode)?;
    }
    if let Some(init) = &args.init {
        config.sampler.init = parse_init(init)?;
    }
    if let Some(v) = args.chains {
        config.sampler.chains = v;
    }
    if let Some(v) = args.warmup {
        config.sampler.warmup = v;
    }
    if let Some(v) = args.draws {
        config.sampler.draws = v;
    }
    if let Some(v) = args.target_accept {
        config.sampler.target_accept = v;
    }
    if let Some(v) = args.max_tree_depth {
        config.sampler.max_tree_depth = v;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.sampler.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }

    match &cli.command {
        Command::Ingest(input) => {
            apply_input(&mut config, input);
            commands::cmd_ingest(&config)
        }
        Command::Features(input) => {
            apply_input(&mut config, input);
            commands::cmd_features(&config)
        }
        Command::Fit { input, model } => {
            apply_input(&mut config, input);
            apply_model(&mut config, model)?;
            commands::cmd_fit(&config)
        }
        Command::Diagnose { draws } => {
            let dir = draws.clone().unwrap_or_else(|| config.out.clone());
            commands::cmd_diagnose(&dir, Some(&config.out))
        }
        Command::Xg { draws } => {
            let dir = draws.clone().unwrap_or_else(|| config.out.clone());
            commands::cmd_xg(&dir, Some(&config.out))
        }
        Command::Counterfactual {
            draws,
            from,
            to,
            context,
            team,
            dump_draws,
        } => {
            let dir = draws.clone().unwrap_or_else(|| config.out.clone());
            commands::cmd_counterfactual(&commands::CounterfactualArgs {
                draws_dir: &dir,
                from_player: from,
                to_player: to,
                context: context.as_deref(),
                team: team.as_deref(),
                dump_draws: *dump_draws,
                out: Some(&config.out),
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
