//! The six pipeline subcommands.

use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use xgcf_core::counterfactual::{
    delta_xg, fats_report, ContextPartition, ShotSet,
};
use xgcf_core::diagnostics::{convergence_report, SCORE_PASS};
use xgcf_core::features::{
    build_design_matrix, fit_scaler, write_features_csv, ContextFlag, FEATURE_NAMES,
};
use xgcf_core::ingest::{
    filter_min_shots, load_aliases, load_fm_ratings, match_players, parse_event_files,
    parse_shots_csv, write_shots_csv, FmRatingTable, IngestReport, MatchReport, PlayerTable,
    ShotRecord,
};
use xgcf_core::model::{fit, predict_xg, Model, ModelKind, PriorMode};
use xgcf_core::priors::{build_prior_means, write_priors_csv, zscore_matched};
use xgcf_core::{FeatureMatrix64, PriorMeanMatrix64, Scaler64};

use crate::artifacts::{self, write_atomic, write_json};
use crate::config::RunConfig;

/// Exit code for a diagnostics run that fails the acceptance rule.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit code for input, configuration, or runtime errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: RunConfig,
    pub n_players: usize,
    pub n_shots: usize,
    pub parameter_names: Vec<String>,
    pub map_log_posterior: Option<f64>,
    pub map_fell_back_to_zero: bool,
    pub chain_step_sizes: Vec<f64>,
    pub wall_time_seconds: f64,
}

struct IngestStage {
    shots: Vec<ShotRecord>,
    report: IngestReport,
    ratings: Option<FmRatingTable>,
    players: PlayerTable,
    match_report: MatchReport,
}

fn run_ingest_stage(config: &RunConfig) -> Result<IngestStage> {
    let mut outcome = match (&config.events_dir, &config.shots_csv) {
        (Some(dir), _) => parse_event_files(dir)?,
        (None, Some(csv)) => parse_shots_csv(csv)?,
        (None, None) => bail!("no input: provide --events-dir or --shots-csv"),
    };
    if outcome.shots.is_empty() {
        bail!("no shot events found in the input");
    }
    outcome.shots = filter_min_shots(&outcome.shots, config.min_shots);
    if outcome.shots.is_empty() {
        bail!(
            "no shot events left after the minimum-shots filter (threshold {})",
            config.min_shots
        );
    }
    outcome.report.retained = outcome.shots.len();

    let ratings = match &config.fm_ratings {
        Some(path) => Some(load_fm_ratings(path)?),
        None => None,
    };
    let aliases = match &config.aliases {
        Some(path) => load_aliases(path)?,
        None => Vec::new(),
    };
    let empty_table;
    let rating_ref = match &ratings {
        Some(table) => table,
        None => {
            empty_table = FmRatingTable::default();
            &empty_table
        }
    };
    let (players, match_report) = match_players(&outcome.shots, rating_ref, &aliases)?;
    Ok(IngestStage {
        shots: outcome.shots,
        report: outcome.report,
        ratings,
        players,
        match_report,
    })
}

fn persist_ingest(stage: &IngestStage, out: &Path) -> Result<()> {
    let mut shots_bytes = Vec::new();
    write_shots_csv(&stage.shots, &mut shots_bytes)?;
    write_atomic(&out.join(artifacts::SHOTS_CSV), &shots_bytes)?;
    write_json(&out.join(artifacts::PLAYER_TABLE_JSON), &stage.players)?;
    write_json(&out.join(artifacts::INGEST_REPORT_JSON), &stage.report)?;
    write_json(&out.join(artifacts::MATCH_REPORT_JSON), &stage.match_report)?;
    Ok(())
}

pub fn cmd_ingest(config: &RunConfig) -> Result<i32> {
    let stage = run_ingest_stage(config)?;
    persist_ingest(&stage, &config.out)?;
    println!(
        "ingest: {} shots retained ({} penalties, {} missing freeze frames, {} missing keepers, {} malformed excluded)",
        stage.shots.len(),
        stage.report.excluded_penalty,
        stage.report.excluded_missing_freeze_frame,
        stage.report.excluded_missing_keeper,
        stage.report.excluded_malformed,
    );
    println!(
        "players: {} fitted, {} matched to ratings, {} unmatched",
        stage.players.len(),
        stage.match_report.matched,
        stage.match_report.unmatched_shot_players.len()
    );
    Ok(0)
}

struct FeatureStage {
    ingest: IngestStage,
    scaler: Scaler64,
    matrix: FeatureMatrix64,
}

fn run_feature_stage(config: &RunConfig) -> Result<FeatureStage> {
    let ingest = run_ingest_stage(config)?;
    let scaler: Scaler64 = fit_scaler(&ingest.shots)?;
    let matrix = build_design_matrix(&ingest.shots, &scaler, &ingest.players)?;
    Ok(FeatureStage {
        ingest,
        scaler,
        matrix,
    })
}

fn persist_features(stage: &FeatureStage, out: &Path) -> Result<()> {
    persist_ingest(&stage.ingest, out)?;
    let mut bytes = Vec::new();
    write_features_csv(&stage.matrix, &mut bytes)?;
    write_atomic(&out.join(artifacts::FEATURES_CSV), &bytes)?;
    write_json(&out.join(artifacts::SCALER_JSON), &stage.scaler)?;
    Ok(())
}

pub fn cmd_features(config: &RunConfig) -> Result<i32> {
    let stage = run_feature_stage(config)?;
    persist_features(&stage, &config.out)?;
    println!(
        "features: {} x {} design matrix written",
        stage.matrix.n_shots(),
        FEATURE_NAMES.len()
    );
    Ok(0)
}

fn build_priors(stage: &FeatureStage, config: &RunConfig) -> Result<PriorMeanMatrix64> {
    match (config.prior_mode, &stage.ingest.ratings) {
        (PriorMode::ExpertInformed, Some(ratings)) => {
            let z = zscore_matched(ratings, &stage.ingest.players)?;
            Ok(build_prior_means(&z, &stage.ingest.players))
        }
        (PriorMode::ExpertInformed, None) => {
            bail!("expert_informed prior mode requires --ratings")
        }
        (PriorMode::WeaklyInformative, _) => {
            Ok(PriorMeanMatrix64::zeros(stage.ingest.players.len()))
        }
    }
}

pub fn cmd_fit(config: &RunConfig) -> Result<i32> {
    let started = Instant::now();
    let stage = run_feature_stage(config)?;
    persist_features(&stage, &config.out)?;

    let priors = build_priors(&stage, config)?;
    let mut priors_bytes = Vec::new();
    write_priors_csv(&priors, &stage.ingest.players, &mut priors_bytes)?;
    write_atomic(&config.out.join(artifacts::PRIORS_CSV), &priors_bytes)?;

    let n_players = stage.ingest.players.len();
    let spec = xgcf_core::ModelSpec64::xg(config.kind, config.prior_mode, n_players);
    let prior_ref = match config.kind {
        ModelKind::Hierarchical if config.prior_mode == PriorMode::ExpertInformed => Some(&priors),
        _ => None,
    };
    println!(
        "fit: {} model, {} players, {} shots, {} parameters",
        match config.kind {
            ModelKind::Baseline => "baseline",
            ModelKind::Hierarchical => "hierarchical",
        },
        n_players,
        stage.matrix.n_shots(),
        spec.layout().dim()
    );

    let result = fit(&spec, &stage.matrix, prior_ref, &config.sampler)?;
    if result.map_fell_back_to_zero {
        eprintln!("warning: MAP estimation failed; falling back to the zero init");
    }
    if let Some(lp) = result.map_log_posterior {
        println!("fit: MAP log-posterior {lp:.4}");
    }

    for (k, chain) in result.draws.chains.iter().enumerate() {
        let mut bytes = Vec::new();
        xgcf_core::nuts::write_chain_csv(chain, &result.draws.param_names, &mut bytes)?;
        write_atomic(&config.out.join(artifacts::chain_csv_name(k)), &bytes)?;
    }

    let wall = started.elapsed().as_secs_f64();
    let metadata = RunMetadata {
        config: config.clone(),
        n_players,
        n_shots: stage.matrix.n_shots(),
        parameter_names: result.draws.param_names.clone(),
        map_log_posterior: result.map_log_posterior,
        map_fell_back_to_zero: result.map_fell_back_to_zero,
        chain_step_sizes: result.draws.chains.iter().map(|c| c.step_size).collect(),
        wall_time_seconds: wall,
    };
    write_json(&config.out.join(artifacts::RUN_METADATA_JSON), &metadata)?;
    println!(
        "fit: {} draws across {} chains in {wall:.1}s",
        result.draws.total_draws(),
        result.draws.chains.len()
    );
    Ok(0)
}

fn load_metadata(dir: &Path) -> Result<RunMetadata> {
    artifacts::read_json(&dir.join(artifacts::RUN_METADATA_JSON))
}

pub fn cmd_diagnose(draws_dir: &Path, out: Option<&Path>) -> Result<i32> {
    let metadata = load_metadata(draws_dir).ok();
    let sampler = metadata
        .as_ref()
        .map(|m| m.config.sampler.clone())
        .unwrap_or_default();
    let draws = artifacts::load_draws(draws_dir, &sampler)?;
    if let Some(meta) = &metadata {
        if draws.chains.len() != meta.config.sampler.chains {
            bail!(
                "found {} chains but the run was configured with {}",
                draws.chains.len(),
                meta.config.sampler.chains
            );
        }
    }
    let report = convergence_report(&draws);
    let out_dir = out.unwrap_or(draws_dir);
    write_json(&out_dir.join(artifacts::DIAGNOSTICS_JSON), &report)?;

    println!(
        "diagnose: rhat {} | ess_bulk {} | ess_tail {} | bfmi {} | divergences {}",
        if report.breakdown.rhat_ok { "ok" } else { "FAIL" },
        if report.breakdown.ess_bulk_ok { "ok" } else { "FAIL" },
        if report.breakdown.ess_tail_ok { "ok" } else { "FAIL" },
        if report.breakdown.bfmi_ok { "ok" } else { "FAIL" },
        report.divergences,
    );
    println!(
        "diagnose: convergence score {}/5 ({} population parameters, max rhat {:.4})",
        report.score, report.population.parameters, report.population.max_rhat
    );
    if report.passed() {
        println!("diagnose: model ready for inference (score >= {SCORE_PASS}/5)");
        Ok(0)
    } else {
        println!("diagnose: convergence check FAILED (score < {SCORE_PASS}/5)");
        Ok(EXIT_CHECK_FAILED)
    }
}

/// Rebuild the design matrix from the artifacts persisted by `fit`.
struct LoadedRun {
    metadata: RunMetadata,
    players: PlayerTable,
    matrix: FeatureMatrix64,
    priors: PriorMeanMatrix64,
    draws: xgcf_core::PosteriorDraws64,
}

fn load_run(dir: &Path) -> Result<LoadedRun> {
    let metadata = load_metadata(dir)
        .with_context(|| format!("{} does not look like a fit output directory", dir.display()))?;
    let players = artifacts::load_player_table(dir)?;
    let scaler: Scaler64 = artifacts::read_json(&dir.join(artifacts::SCALER_JSON))?;
    let outcome = parse_shots_csv(&dir.join(artifacts::SHOTS_CSV))?;
    let matrix = build_design_matrix(&outcome.shots, &scaler, &players)?;
    let priors = artifacts::load_prior_means(dir, players.len())?;
    let draws = artifacts::load_draws(dir, &metadata.config.sampler)?;
    if draws.param_names != metadata.parameter_names {
        bail!("chain files and run metadata disagree on parameter names");
    }
    Ok(LoadedRun {
        metadata,
        players,
        matrix,
        priors,
        draws,
    })
}

fn model_of<'a>(run: &'a LoadedRun, spec: &'a xgcf_core::ModelSpec64) -> Result<Model<'a, f64>> {
    let prior_ref = match (run.metadata.config.kind, run.metadata.config.prior_mode) {
        (ModelKind::Hierarchical, PriorMode::ExpertInformed) => Some(&run.priors),
        _ => None,
    };
    Ok(Model::new(spec, &run.matrix, prior_ref)?)
}

pub fn cmd_xg(draws_dir: &Path, out: Option<&Path>) -> Result<i32> {
    let run = load_run(draws_dir)?;
    let spec = xgcf_core::ModelSpec64::xg(
        run.metadata.config.kind,
        run.metadata.config.prior_mode,
        run.players.len(),
    );
    let model = model_of(&run, &spec)?;
    let pooled = run.draws.pooled();

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["shot_id", "player_name", "player_index", "outcome", "xg_mean"])?;
    let mut total_xg = 0.0;
    let mut total_goals = 0u32;
    for i in 0..run.matrix.n_shots() {
        let x: Vec<f64> = run.matrix.x.row(i).to_vec();
        let player = run.matrix.player_idx[i];
        let (mean, _) = predict_xg(&model, &pooled, &x, player)?;
        total_xg += mean;
        total_goals += u32::from(run.matrix.y[i]);
        w.write_record([
            run.matrix.shot_ids[i].as_str(),
            run.players.entries[player].display_name.as_str(),
            &player.to_string(),
            &run.matrix.y[i].to_string(),
            &mean.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("csv flush: {e}"))?;
    let out_dir = out.unwrap_or(draws_dir);
    write_atomic(&out_dir.join(artifacts::XG_CSV), &bytes)?;
    println!(
        "xg: {} shots, total xG {total_xg:.2} vs {total_goals} goals",
        run.matrix.n_shots()
    );
    Ok(0)
}

fn resolve_player(players: &PlayerTable, name: &str) -> Result<usize> {
    players.index_of(name).ok_or_else(|| {
        let mut scored: Vec<(usize, &str)> = players
            .entries
            .iter()
            .map(|e| (levenshtein(name, &e.display_name), e.display_name.as_str()))
            .collect();
        scored.sort();
        let suggestions: Vec<&str> = scored.iter().take(3).map(|&(_, n)| n).collect();
        anyhow!(
            "unknown player '{name}'; nearest matches: {}",
            suggestions.join(", ")
        )
    })
}

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.to_lowercase().chars().collect();
    let b: Vec<char> = b.to_lowercase().chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let sub = usize::from(a[i - 1] != b[j - 1]);
            cur[j] = (prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + sub);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub struct CounterfactualArgs<'a> {
    pub draws_dir: &'a Path,
    pub from_player: &'a str,
    pub to_player: &'a str,
    pub context: Option<&'a str>,
    pub team: Option<&'a str>,
    pub dump_draws: bool,
    pub out: Option<&'a Path>,
}

pub fn cmd_counterfactual(args: &CounterfactualArgs<'_>) -> Result<i32> {
    let run = load_run(args.draws_dir)?;
    let spec = xgcf_core::ModelSpec64::xg(
        run.metadata.config.kind,
        run.metadata.config.prior_mode,
        run.players.len(),
    );
    let model = model_of(&run, &spec)?;
    let pooled = run.draws.pooled();

    let from = resolve_player(&run.players, args.from_player)?;
    let to = resolve_player(&run.players, args.to_player)?;
    let context_name = args
        .context
        .unwrap_or(run.metadata.config.context_flag.as_str());
    let partition = match context_name {
        "single" | "all" => ContextPartition::single(),
        name => {
            let flag = ContextFlag::parse(name).ok_or_else(|| {
                anyhow!("unknown context flag '{name}'; expected one of under_pressure, first_time, one_on_one, penalty_area")
            })?;
            ContextPartition::by_flag(flag)
        }
    };

    let from_label = run.players.entries[from].display_name.clone();
    let shots = ShotSet::for_player(&run.matrix, from, &from_label);
    let delta = delta_xg(&model, &pooled, &shots, to, &partition)?;

    let fats = match args.team {
        Some(team) => {
            let team_shots = ShotSet::for_team(&run.matrix, team);
            if team_shots.is_empty() {
                bail!("no shots found for team '{team}'");
            }
            Some(fats_report(&delta, team, &team_shots, &partition)?)
        }
        None => None,
    };

    let report = delta.to_report(
        &from_label,
        &run.players.entries[to].display_name,
        &shots.descriptor,
        &partition,
        fats,
    );
    let out_dir = args.out.unwrap_or(args.draws_dir);
    write_json(&out_dir.join(artifacts::COUNTERFACTUAL_REPORT_JSON), &report)?;

    if args.dump_draws {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["draw".to_string(), "delta_total".to_string()];
        header.extend(delta.per_context.keys().map(|k| format!("delta_{k}")));
        w.write_record(&header)?;
        for s in 0..delta.per_draw.len() {
            let mut record = vec![s.to_string(), delta.per_draw[s].to_string()];
            for ctx in delta.per_context.values() {
                record.push(ctx.per_draw[s].to_string());
            }
            w.write_record(&record)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow!("csv flush: {e}"))?;
        write_atomic(&out_dir.join(artifacts::COUNTERFACTUAL_DRAWS_CSV), &bytes)?;
    }

    println!(
        "counterfactual: {} -> {} over {} shots: E[dxG] {:+.3}, 95% HDI [{:+.3}, {:+.3}], Pr(dxG>0) {:.3}",
        report.query.from_player,
        report.query.to_player,
        report.query.n_shots,
        report.delta.mean,
        report.delta.hdi_low,
        report.delta.hdi_high,
        report.delta.prob_positive,
    );
    if let Some(f) = &report.fats {
        println!("counterfactual: FATS {:.3} under team '{}' weighting", f.fats, f.team);
    }
    Ok(0)
}
