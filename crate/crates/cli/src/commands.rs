use std::path::Path;

use indexmap::IndexMap;
use mixlaw_core::diagnostics::{IndependencePoint, TransferSlope};
use mixlaw_core::fitting::{generate_synthetic_records, sweep_grid};
use mixlaw_core::law::{find_family, Units};
use mixlaw_core::optimizer::{
    baseline_by_tokens, baseline_smoothed, baseline_uniform, preference_normalized, solve,
    solve_exact,
};
use mixlaw_core::reference::{reference_manifest, reference_params};
use mixlaw_core::{
    compare_strategies, effective_family_tokens, expand_schedule, fit_joint, holdout_validate,
    independence_points, independence_report, load_manifest, predict_family_loss, transfer_slope,
    write_records_jsonl, CorpusManifest, Error, FamilyParams, FitConfig, FitReport,
    IndependenceReport, Method, MixtureVector, OptimizationProblem, ParamsFile, PreferenceVector,
    Residual, RunRecord,
};
use serde::Serialize;

use crate::args::{
    Command, CompareArgs, DiagnoseArgs, FitArgs, Format, OptimizeArgs, PlanArgs, PredictArgs,
    PreferenceArgs, PreferenceMode, SimulateArgs,
};
use crate::error::{CliError, CliResult};
use crate::io::{csv_bytes, emit, json_bytes, read_records, read_text};

/// Decimal places kept in reported mixture ratios.
const RATIO_DECIMALS: i32 = 6;

fn round_ratio(x: f64) -> f64 {
    let scale = 10f64.powi(RATIO_DECIMALS);
    (x * scale).round() / scale
}

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Optimize(a) => optimize(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Plan(a) => plan(a),
        Command::Simulate(a) => simulate(a),
        Command::Compare(a) => compare(a),
    }
}

fn load_params(path: Option<&Path>) -> CliResult<Vec<FamilyParams>> {
    match path {
        None => Ok(reference_params()),
        Some(p) => Ok(ParamsFile::from_json(&read_text(p)?)?.params),
    }
}

fn load_corpus(path: Option<&Path>) -> CliResult<CorpusManifest> {
    match path {
        None => Ok(reference_manifest()),
        Some(p) => Ok(load_manifest(p)?),
    }
}

/// `uniform` over `families`, or a JSON object of ratios read from a file.
fn parse_mixture<'a>(
    value: &str,
    families: impl IntoIterator<Item = &'a str>,
) -> CliResult<MixtureVector> {
    if value == "uniform" {
        let families: Vec<&str> = families.into_iter().collect();
        return Ok(baseline_uniform(&families)?);
    }
    let text = read_text(Path::new(value))?;
    let ratios: IndexMap<String, f64> = serde_json::from_str(&text)?;
    Ok(MixtureVector::new(ratios)?)
}

fn load_prefs(
    args: &PreferenceArgs,
    params: &[FamilyParams],
    n: f64,
    d: f64,
) -> CliResult<PreferenceVector> {
    if args.weights.is_some() && args.preference != PreferenceMode::File {
        return Err(CliError::Usage(
            "--weights requires --preference file".into(),
        ));
    }
    match args.preference {
        PreferenceMode::Unweighted => Ok(PreferenceVector::unweighted(
            params.iter().map(|p| p.family.as_str()),
        )?),
        PreferenceMode::Normalized => Ok(preference_normalized(params, n, d)?),
        PreferenceMode::File => {
            let path = args.weights.as_deref().ok_or_else(|| {
                CliError::Usage("--preference file requires --weights <path>".into())
            })?;
            let weights: IndexMap<String, f64> = serde_json::from_str(&read_text(path)?)?;
            Ok(PreferenceVector::new(weights)?)
        }
    }
}

fn preference_label(mode: PreferenceMode) -> &'static str {
    match mode {
        PreferenceMode::Unweighted => "unweighted",
        PreferenceMode::Normalized => "normalized",
        PreferenceMode::File => "file",
    }
}

// fit

#[derive(Serialize)]
struct FamilyFitSummary {
    family: String,
    objective: f64,
    r_squared_loglog: f64,
    n_records: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    holdout_mae: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    holdout_records: Option<usize>,
    init_index: usize,
    iterations: usize,
    residuals: Vec<Residual>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    holdout_residuals: Vec<Residual>,
}

/// Accepted by `--params`; the extra `reports` field is ignored on read.
#[derive(Serialize)]
struct FitOutput {
    version: u32,
    units: Units,
    params: Vec<FamilyParams>,
    reports: Vec<FamilyFitSummary>,
}

#[derive(Serialize)]
struct ResidualRow<'a> {
    family: &'a str,
    split: &'static str,
    run_id: &'a str,
    predicted: f64,
    observed: f64,
    log_residual: f64,
}

fn fit(args: FitArgs) -> CliResult<()> {
    let records = read_records(&args.records)?;
    let families = if args.family.is_empty() {
        let mut seen: Vec<String> = Vec::new();
        for r in &records {
            for f in r.losses.keys() {
                if !seen.contains(f) {
                    seen.push(f.clone());
                }
            }
        }
        seen
    } else {
        args.family.clone()
    };
    if families.is_empty() {
        return Err(Error::InsufficientData("records report no losses".into()).into());
    }
    let config = FitConfig {
        huber_delta: args.delta,
        seed: args.seed,
        random_starts: args.random_starts,
        two_stage: args.two_stage,
        ..FitConfig::default()
    };
    config.validate()?;

    let mut reports: Vec<FitReport<FamilyParams>> = Vec::with_capacity(families.len());
    for family in &families {
        log::info!("fitting {family}");
        let report = match args.holdout {
            Some(fraction) => holdout_validate(&records, family, &config, fraction)?,
            None => fit_joint(&records, family, &config)?,
        };
        log::debug!(
            "{family}: objective {:.3e} after {} iterations",
            report.objective,
            report.iterations
        );
        reports.push(report);
    }

    let bytes = match args.output.format {
        Format::Json => json_bytes(&FitOutput {
            version: 1,
            units: Units::default(),
            params: reports.iter().map(|r| r.params.clone()).collect(),
            reports: reports
                .into_iter()
                .map(|r| FamilyFitSummary {
                    family: r.params.family.clone(),
                    objective: r.objective,
                    r_squared_loglog: r.r_squared_loglog,
                    n_records: r.n_records,
                    holdout_mae: r.holdout_mae,
                    holdout_records: r.holdout_mae.map(|_| r.holdout_residuals.len()),
                    init_index: r.init_index,
                    iterations: r.iterations,
                    residuals: r.residuals,
                    holdout_residuals: r.holdout_residuals,
                })
                .collect(),
        })?,
        Format::Csv => {
            let mut rows = Vec::new();
            for r in &reports {
                let tagged = r
                    .residuals
                    .iter()
                    .map(|x| ("train", x))
                    .chain(r.holdout_residuals.iter().map(|x| ("holdout", x)));
                for (split, x) in tagged {
                    rows.push(ResidualRow {
                        family: &r.params.family,
                        split,
                        run_id: &x.run_id,
                        predicted: x.predicted,
                        observed: x.observed,
                        log_residual: x.log_residual,
                    });
                }
            }
            csv_bytes(
                &[
                    "family",
                    "split",
                    "run_id",
                    "predicted",
                    "observed",
                    "log_residual",
                ],
                &rows,
            )?
        }
    };
    emit(args.output.out.as_deref(), &bytes)
}

// predict

#[derive(Serialize)]
struct FamilyPrediction {
    family: String,
    ratio: f64,
    weight: f64,
    mono_loss: f64,
    loss: f64,
}

#[derive(Serialize)]
struct PredictOutput {
    n_millions: f64,
    d_billions: f64,
    preference: &'static str,
    families: Vec<FamilyPrediction>,
    total: f64,
}

fn predict(args: PredictArgs) -> CliResult<()> {
    let params = load_params(args.params.params.as_deref())?;
    let mixture = parse_mixture(&args.mixture, params.iter().map(|p| p.family.as_str()))?;
    let prefs = load_prefs(&args.prefs, &params, args.n, args.d)?;
    let total = mixlaw_core::predict_total_loss(&params, &prefs, args.n, args.d, &mixture)?;
    let families = params
        .iter()
        .map(|p| {
            let ratio = mixture.get(&p.family).unwrap_or_default();
            Ok(FamilyPrediction {
                family: p.family.clone(),
                ratio,
                weight: prefs.get(&p.family).unwrap_or_default(),
                mono_loss: p.mono_loss(args.n, args.d)?,
                loss: predict_family_loss(p, args.n, args.d, ratio)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let bytes = match args.output.format {
        Format::Json => json_bytes(&PredictOutput {
            n_millions: args.n,
            d_billions: args.d,
            preference: preference_label(args.prefs.preference),
            families,
            total,
        })?,
        Format::Csv => csv_bytes(
            &["family", "ratio", "weight", "mono_loss", "loss"],
            &families,
        )?,
    };
    emit(args.output.out.as_deref(), &bytes)
}

// optimize

#[derive(Serialize)]
struct OptimizeOutput {
    n_millions: f64,
    d_billions: f64,
    method: Method,
    preference: &'static str,
    ratios: IndexMap<String, f64>,
    excluded: Vec<String>,
    lambda_star: f64,
    objective: f64,
    iterations: usize,
    stationarity_residual: f64,
}

#[derive(Serialize)]
struct RatioRow<'a> {
    key: &'a str,
    ratio: f64,
}

fn optimize(args: OptimizeArgs) -> CliResult<()> {
    let params = load_params(args.params.params.as_deref())?;
    let prefs = load_prefs(&args.prefs, &params, args.n, args.d)?;
    let problem = OptimizationProblem::from_family_params(&params, args.n, args.d, prefs)?;
    let report = solve(&problem, args.method.into())?;
    let ratios: IndexMap<String, f64> = report
        .ratios(&problem)
        .into_iter()
        .map(|(k, v)| (k, round_ratio(v)))
        .collect();
    let bytes = match args.output.format {
        Format::Json => json_bytes(&OptimizeOutput {
            n_millions: args.n,
            d_billions: args.d,
            method: report.method,
            preference: preference_label(args.prefs.preference),
            stationarity_residual: report.stationarity_residual(&problem),
            ratios,
            excluded: report.excluded,
            lambda_star: report.lambda_star,
            objective: report.objective,
            iterations: report.iterations,
        })?,
        Format::Csv => {
            let rows: Vec<RatioRow> = ratios
                .iter()
                .map(|(k, &ratio)| RatioRow { key: k, ratio })
                .collect();
            csv_bytes(&["family", "ratio"], &rows)?
        }
    };
    emit(args.output.out.as_deref(), &bytes)
}

// diagnose

#[derive(Serialize)]
struct SkippedSlope {
    complement_family: String,
    reason: String,
}

#[derive(Serialize)]
struct DiagnoseOutput {
    independence: IndependenceReport,
    transfer_slopes: Vec<TransferSlope>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    skipped_slopes: Vec<SkippedSlope>,
    points: Vec<IndependencePoint>,
}

fn diagnose(args: DiagnoseArgs) -> CliResult<()> {
    let records = read_records(&args.records)?;
    let independence =
        independence_report(&records, &args.family, args.reference_ratio, args.threshold)?;
    let points = independence_points(
        &records,
        &args.family,
        args.complement.as_deref(),
        args.reference_ratio,
    )?;

    let mut transfer_slopes = Vec::new();
    let mut skipped_slopes = Vec::new();
    match &args.complement {
        Some(c) => {
            if !records.iter().any(|r| r.mixture.contains(c)) {
                return Err(Error::UnknownFamily(c.clone()).into());
            }
            transfer_slopes.push(transfer_slope(&records, &args.family, c)?);
        }
        None => {
            for c in other_families(&records, &args.family) {
                match transfer_slope(&records, &args.family, &c) {
                    Ok(s) => transfer_slopes.push(s),
                    Err(e @ Error::InsufficientVariation(_)) => {
                        log::info!("no transfer slope against {c}: {e}");
                        skipped_slopes.push(SkippedSlope {
                            complement_family: c,
                            reason: e.to_string(),
                        });
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }

    let bytes = match args.output.format {
        Format::Json => json_bytes(&DiagnoseOutput {
            independence,
            transfer_slopes,
            skipped_slopes,
            points,
        })?,
        Format::Csv => csv_bytes(
            &[
                "run_id",
                "fixed_ratio",
                "complement_ratio",
                "normalized_loss",
            ],
            &points,
        )?,
    };
    emit(args.output.out.as_deref(), &bytes)
}

/// Families other than `family` in order of first appearance.
fn other_families(records: &[RunRecord], family: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in records {
        for f in r.mixture.families() {
            if f != family && !out.iter().any(|o| o == f) {
                out.push(f.to_string());
            }
        }
    }
    out
}

// plan

#[derive(Serialize)]
struct PlanOutput {
    alpha: f64,
    family_mixture: MixtureVector,
    ratios: IndexMap<String, f64>,
}

fn plan(args: PlanArgs) -> CliResult<()> {
    let manifest = load_corpus(args.manifest.as_deref())?;
    let mixture = parse_mixture(&args.mixture, manifest.family_ids())?;
    let schedule = expand_schedule(&mixture, &manifest, args.alpha)?;
    let bytes = match args.output.format {
        Format::Json => json_bytes(&PlanOutput {
            alpha: args.alpha,
            family_mixture: mixture,
            ratios: schedule.ratios,
        })?,
        Format::Csv => {
            let rows: Vec<RatioRow> = schedule
                .ratios
                .iter()
                .map(|(k, &ratio)| RatioRow { key: k, ratio })
                .collect();
            csv_bytes(&["language", "ratio"], &rows)?
        }
    };
    emit(args.output.out.as_deref(), &bytes)
}

// simulate

fn simulate(args: SimulateArgs) -> CliResult<()> {
    let params = load_params(args.params.params.as_deref())?;
    let families: Vec<String> = if args.families.is_empty() {
        params.iter().map(|p| p.family.clone()).collect()
    } else {
        for f in &args.families {
            find_family(&params, f)?;
        }
        args.families.clone()
    };
    let grid = sweep_grid(&families, &args.n, &args.d, &args.ratios)?;
    let records = generate_synthetic_records(&params, &grid, args.sigma, args.seed)?;
    let mut bytes = Vec::new();
    write_records_jsonl(&mut bytes, &records)?;
    emit(args.out.as_deref(), &bytes)
}

// compare

#[derive(Serialize)]
struct StrategyCsvRow<'a> {
    strategy: &'a str,
    family: &'a str,
    ratio: f64,
    loss: f64,
}

fn compare(args: CompareArgs) -> CliResult<()> {
    let params = load_params(args.params.params.as_deref())?;
    let manifest = load_corpus(args.manifest.as_deref())?;
    let prefs = load_prefs(&args.prefs, &params, args.n, args.d)?;
    let families: Vec<&str> = params.iter().map(|p| p.family.as_str()).collect();

    let tokens = effective_family_tokens(&manifest);
    let mut strategies = vec![
        ("uniform".to_string(), baseline_uniform(&families)?),
        ("by_tokens".to_string(), baseline_by_tokens(&tokens)?),
        (
            format!("smoothed_{}", args.alpha),
            baseline_smoothed(&tokens, args.alpha)?,
        ),
    ];
    let problem = OptimizationProblem::from_family_params(&params, args.n, args.d, prefs.clone())?;
    let optimal = solve_exact(&problem)?;
    if optimal.excluded.is_empty() {
        strategies.push(("optimal".to_string(), optimal.mixture));
    } else {
        log::warn!(
            "optimal mixture omitted: zero-weight families {:?} get no data",
            optimal.excluded
        );
    }
    if let Some(value) = &args.mixture {
        strategies.push((
            "custom".to_string(),
            parse_mixture(value, families.iter().copied())?,
        ));
    }
    let table = compare_strategies(&params, &prefs, args.n, args.d, &strategies)?;

    let bytes = match args.output.format {
        Format::Json => json_bytes(&table)?,
        Format::Csv => {
            let mut rows = Vec::new();
            for row in &table.rows {
                for (family, ratio) in row.ratios.iter() {
                    rows.push(StrategyCsvRow {
                        strategy: &row.name,
                        family,
                        ratio,
                        loss: row.losses[family],
                    });
                }
                rows.push(StrategyCsvRow {
                    strategy: &row.name,
                    family: "total",
                    ratio: 1.0,
                    loss: row.total,
                });
            }
            csv_bytes(&["strategy", "family", "ratio", "loss"], &rows)?
        }
    };
    emit(args.output.out.as_deref(), &bytes)
}
