use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use bankruin::aggregate::{
    actual_failure_rates, aggregate_predicted_rate, aggregate_regression, RiskDenominator, Weighting,
};
use bankruin::event_study::{event_study, EventStudyConfig, OutcomeTransform};
use bankruin::panel::{
    build_features, load_failures, read_panel_file, write_failures, write_panel, BankPanel, ColumnMapping,
    Delimiter, Era, FailureEvent, FeatureConfig, LoadOptions, LoadOutcome,
};
use bankruin::prediction::{
    confusion_at_cutoff, expanding_oos, fit_failure_model, in_sample_predictions, roc_and_auc, ModelSpec,
    Origin, Prediction, PredictionSet,
};
use bankruin::receivership::{
    asset_quality_regression, classify_cause, depositor_loss_stats, duration_quantiles,
    insolvency_share_grid_with, leverage, load_receiverships, recovery_rate, required_excess_return,
    trimmed, write_receiverships, CauseCategory, CauseMapping, GridOptions, ReceivershipRecord, RunFilter,
    SolvencyVariant, Utility,
};
use bankruin::synth::{generate_panel, generate_receiverships, DgpConfig};
use serde_json::{json, Value};

use crate::args::*;
use crate::output::{to_value, OutDir};
use crate::{CliError, Context};

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let stamp = !cli.no_timestamp;
    match &cli.command {
        Command::Ingest(a) => ingest(a, stamp),
        Command::Features(a) => features(a, stamp),
        Command::EventStudy(a) => event_study_cmd(a, stamp),
        Command::Predict(PredictCommand::Fit(a)) => predict_fit(a, stamp),
        Command::Predict(PredictCommand::Backtest { model, train_years }) => {
            predict_backtest(model, *train_years, stamp)
        }
        Command::Predict(PredictCommand::Metrics { predictions, cutoffs, out }) => {
            predict_metrics(predictions, cutoffs, out, stamp)
        }
        Command::Aggregate(a) => aggregate(a, stamp),
        Command::Receivership(r) => receivership(r, stamp),
        Command::Synth(a) => synth(a, stamp),
    }
}

fn read_text(flag: &str, path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|source| bankruin::Error::Io { path: path.display().to_string(), source })
        .context(|| format!("{flag} {}", path.display()))
}

fn open(flag: &str, path: &Path) -> Result<fs::File, CliError> {
    fs::File::open(path)
        .map_err(|source| bankruin::Error::Io { path: path.display().to_string(), source })
        .context(|| format!("{flag} {}", path.display()))
}

fn load(args: &PanelArgs, year_bounds: Option<(i32, i32)>, strict: bool) -> Result<LoadOutcome, CliError> {
    let mapping = match &args.schema {
        Some(p) => ColumnMapping::from_json(&read_text("--schema", p)?).context(|| format!("--schema {}", p.display()))?,
        None => ColumnMapping::default(),
    };
    let opts = LoadOptions { delimiter: args.delimiter.into(), year_bounds, strict };
    let outcome =
        read_panel_file(&args.panel, &mapping, &opts).context(|| format!("--panel {}", args.panel.display()))?;
    if !outcome.rejects.is_empty() {
        log::warn!("{}: {} rows rejected", args.panel.display(), outcome.rejects.len());
    }
    Ok(outcome)
}

fn failures_path(panel: &PanelArgs, failures: &FailureArgs) -> PathBuf {
    failures.failures.clone().unwrap_or_else(|| {
        panel.panel.parent().unwrap_or_else(|| Path::new(".")).join("failures.csv")
    })
}

fn load_events(panel: &PanelArgs, failures: &FailureArgs) -> Result<Vec<FailureEvent>, CliError> {
    let path = failures_path(panel, failures);
    let file = open("--failures", &path)?;
    load_failures(file, panel.delimiter.into()).context(|| format!("--failures {}", path.display()))
}

fn features_for(
    panel: &PanelArgs,
    failures: &FailureArgs,
    era: EraArg,
    horizons: Vec<u32>,
    min_age: i32,
) -> Result<BankPanel, CliError> {
    let raw = load(panel, None, false)?.panel;
    let events = load_events(panel, failures)?;
    let mut cfg = FeatureConfig::new(Era::from(era), horizons);
    cfg.min_age = (min_age > 0).then_some(min_age);
    let (p, report) = build_features(&raw, &events, &cfg).context(|| format!("--panel {}", panel.panel.display()))?;
    if !report.unknown_failure_banks.is_empty() {
        log::warn!("{} failure events name banks absent from the panel", report.unknown_failure_banks.len());
    }
    Ok(p)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn ingest(a: &IngestArgs, stamp: bool) -> Result<(), CliError> {
    let bounds = a.year_min.zip(a.year_max);
    if let Some((lo, hi)) = bounds {
        if lo > hi {
            return Err(CliError::Usage(format!("--year-min {lo} exceeds --year-max {hi}")));
        }
    }
    let outcome = load(&a.panel, bounds, a.strict)?;
    let out = OutDir::create(&a.out, stamp)?;
    let delim: Delimiter = a.panel.delimiter.into();
    out.write_with("panel.csv", |buf| write_panel(&outcome.panel, buf, delim))?;
    out.write_text("rejects.tsv", &outcome.reject_report())?;
    let years = outcome.panel.years();
    out.write_json(
        "ingest.json",
        json!({
            "input": a.panel.panel.display().to_string(),
            "rows": outcome.panel.len(),
            "banks": outcome.panel.n_banks(),
            "rejects": outcome.rejects.len(),
            "first_year": years.first(),
            "last_year": years.last(),
        }),
    )
}

fn features(a: &FeaturesArgs, stamp: bool) -> Result<(), CliError> {
    let raw = load(&a.panel, None, false)?.panel;
    let events = load_events(&a.panel, &a.failures)?;
    let mut cfg = FeatureConfig::new(a.era.into(), a.horizons.clone());
    cfg.min_age = (a.min_age > 0).then_some(a.min_age);
    let (p, report) = build_features(&raw, &events, &cfg).context(|| format!("--panel {}", a.panel.panel.display()))?;

    let mut horizons = a.horizons.clone();
    horizons.sort_unstable();
    horizons.dedup();
    let mut table = String::from("bank_id,period,insolvency,noncore,interaction,growth_quintile,gdp_growth_3y,inflation_3y,log_age");
    for h in &horizons {
        table.push_str(&format!(",fail_{h}y"));
    }
    table.push('\n');
    for (o, f) in p.rows() {
        table.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}",
            o.bank_id,
            o.period,
            fmt_opt(f.insolvency),
            fmt_opt(f.noncore),
            fmt_opt(f.interaction),
            f.growth_quintile.map(|q| q.to_string()).unwrap_or_default(),
            fmt_opt(f.gdp_growth_3y),
            fmt_opt(f.inflation_3y),
            fmt_opt(f.log_age),
        ));
        for h in &horizons {
            let l = f.labels.get(h).map(|b| u8::from(*b).to_string()).unwrap_or_default();
            table.push(',');
            table.push_str(&l);
        }
        table.push('\n');
    }
    let out = OutDir::create(&a.out, stamp)?;
    out.write_text("features.csv", &table)?;
    out.write_json(
        "features.json",
        json!({ "config": to_value(&cfg), "rows": p.len(), "banks": p.n_banks(), "report": to_value(&report) }),
    )
}

fn event_study_cmd(a: &EventStudyArgs, stamp: bool) -> Result<(), CliError> {
    let raw = load(&a.panel, None, false)?.panel;
    let events = load_events(&a.panel, &a.failures)?;
    // Outcomes may be derived features, so fundamentals and controls are built first.
    let mut fcfg = FeatureConfig::new(Era::Historical, vec![]);
    fcfg.min_age = None;
    let panel = match build_features(&raw, &events, &fcfg) {
        Ok((p, _)) => p,
        Err(e) => {
            log::info!("features unavailable ({e}); using raw columns only");
            raw
        }
    };
    let transform = match a.transform {
        TransformArg::Level => OutcomeTransform::Level,
        TransformArg::Log => OutcomeTransform::Log,
        TransformArg::LogReal => OutcomeTransform::LogReal,
    };
    let cfg = EventStudyConfig { window: a.window, bandwidth: a.bandwidth, transform };
    let res = event_study(&panel, &events, &a.outcome, &cfg).context(|| format!("--outcome {}", a.outcome))?;
    let out = OutDir::create(&a.out, stamp)?;
    out.write_text("event_study.csv", &res.to_table(','))?;
    out.write_json(
        "event_study.json",
        json!({
            "outcome": res.outcome_name,
            "config": to_value(&cfg),
            "banks": res.n_banks,
            "observations": res.n_obs,
            "coefficients": to_value(&res.coefficients),
        }),
    )
}

fn model_spec(a: &ModelArgs) -> Result<ModelSpec, CliError> {
    let ctx = || format!("--spec {}", a.spec.display());
    let mut spec = ModelSpec::from_json(&read_text("--spec", &a.spec)?).context(ctx)?;
    if a.horizon == 0 {
        return Err(CliError::Usage("--horizon must be at least 1".into()));
    }
    spec.horizon = a.horizon;
    spec.validate().context(ctx)?;
    Ok(spec)
}

fn metrics_json(set: &PredictionSet, cutoffs: &[f64]) -> Result<(Value, String), CliError> {
    let scores = set.scores();
    let labels = set.labels();
    let curve = roc_and_auc(&scores, &labels).context(|| "computing ROC".to_string())?;
    let confusion = cutoffs
        .iter()
        .map(|c| confusion_at_cutoff(&scores, &labels, *c).map(|m| to_value(&m)))
        .collect::<bankruin::Result<Vec<_>>>()
        .context(|| "--cutoffs".to_string())?;
    let failed: Vec<Value> = set.failed_years.iter().map(|(y, r)| json!({ "year": y, "reason": r })).collect();
    let v = json!({
        "horizon": set.horizon,
        "auc": curve.auc,
        "pr_auc": curve.pr_auc,
        "base_rate": curve.base_rate,
        "pr_auc_ratio": curve.pr_auc_ratio,
        "n": curve.n,
        "positives": curve.positives,
        "cutoffs": confusion,
        "failed_years": failed,
    });
    Ok((v, curve.to_table(',')))
}

fn predict_fit(a: &ModelArgs, stamp: bool) -> Result<(), CliError> {
    let spec = model_spec(a)?;
    let panel = features_for(&a.panel, &a.failures, a.era, vec![spec.horizon], a.min_age)?;
    let model = fit_failure_model(&panel, &spec).context(|| "fitting model".to_string())?;
    let preds = in_sample_predictions(&panel, &model).context(|| "scoring".to_string())?;
    let (metrics, roc) = metrics_json(&preds, &a.cutoffs)?;
    let out = OutDir::create(&a.out, stamp)?;
    out.write_json("fit.json", json!({ "spec": to_value(&spec), "fit": to_value(&model.fit.summary()) }))?;
    out.write_text("predictions.csv", &preds.to_table(','))?;
    out.write_json("metrics.json", metrics)?;
    out.write_text("roc.csv", &roc)
}

fn predict_backtest(a: &ModelArgs, train_years: u32, stamp: bool) -> Result<(), CliError> {
    let spec = model_spec(a)?;
    let panel = features_for(&a.panel, &a.failures, a.era, vec![spec.horizon], a.min_age)?;
    let preds = expanding_oos(&panel, &spec, train_years).context(|| format!("--train-years {train_years}"))?;
    for (year, reason) in &preds.failed_years {
        log::warn!("no model for {year}: {reason}");
    }
    let (mut metrics, roc) = metrics_json(&preds, &a.cutoffs)?;
    metrics["train_years"] = json!(train_years);
    metrics["spec"] = to_value(&spec);
    let out = OutDir::create(&a.out, stamp)?;
    out.write_text("oos_predictions.csv", &preds.to_table(','))?;
    out.write_json("metrics.json", metrics)?;
    out.write_text("roc.csv", &roc)
}

/// Read a predictions table written by `predict fit` or `predict backtest`.
fn read_predictions(path: &Path) -> Result<PredictionSet, CliError> {
    let ctx = || format!("--predictions {}", path.display());
    let file = open("--predictions", path)?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers().map_err(bankruin::Error::from).context(ctx)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bankruin::Error::Config(format!("missing column {name}")))
    };
    let cols = ["bank_id", "period", "score", "label", "origin", "assets"]
        .iter()
        .map(|c| col(c))
        .collect::<bankruin::Result<Vec<_>>>()
        .context(ctx)?;
    let mut predictions = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(bankruin::Error::from).context(ctx)?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |what: &str| bankruin::Error::Parse { line, reason: format!("unparseable {what}") };
        let parse = || -> bankruin::Result<Prediction> {
            Ok(Prediction {
                bank_id: rec[cols[0]].into(),
                period: rec[cols[1]].parse()?,
                score: rec[cols[2]].parse().map_err(|_| bad("score"))?,
                label: match &rec[cols[3]] {
                    "1" | "true" => true,
                    "0" | "false" => false,
                    _ => return Err(bad("label")),
                },
                origin: match &rec[cols[4]] {
                    "in_sample" => Origin::InSample,
                    "out_of_sample" => Origin::OutOfSample,
                    _ => return Err(bad("origin")),
                },
                assets: rec[cols[5]].parse().map_err(|_| bad("assets"))?,
            })
        };
        predictions.push(parse().context(ctx)?);
    }
    Ok(PredictionSet { horizon: 0, predictions, failed_years: vec![] })
}

fn predict_metrics(path: &Path, cutoffs: &[f64], out: &Path, stamp: bool) -> Result<(), CliError> {
    let set = read_predictions(path)?;
    let (mut metrics, roc) = metrics_json(&set, cutoffs)?;
    if let Some(m) = metrics.as_object_mut() {
        m.remove("horizon");
        m.remove("failed_years");
    }
    let out = OutDir::create(out, stamp)?;
    out.write_json("metrics.json", metrics)?;
    out.write_text("roc.csv", &roc)
}

fn aggregate(a: &AggregateArgs, stamp: bool) -> Result<(), CliError> {
    let preds = read_predictions(&a.predictions)?;
    let panel = load(&a.panel, None, false)?.panel;
    let events = load_events(&a.panel, &a.failures)?;
    let weights = match a.weights {
        WeightArg::Equal => Weighting::Equal,
        WeightArg::AssetShare => Weighting::AssetShare,
    };
    let denominator = match a.denominator {
        DenominatorArg::PriorYearFilers => RiskDenominator::PriorYearFilers,
        DenominatorArg::CurrentYearBanks => RiskDenominator::CurrentYearBanks,
    };
    let actual = actual_failure_rates(&panel, &events, denominator);
    let series = aggregate_predicted_rate(&preds, weights).with_actual(&actual);
    let out = OutDir::create(&a.out, stamp)?;
    out.write_text("aggregate.csv", &series.to_table(','))?;
    let reg = aggregate_regression(&series);
    let regression = match &reg {
        Ok(r) => json!({
            "alpha": r.alpha,
            "beta": r.beta,
            "se_alpha": r.fit.se[0],
            "se_beta": r.fit.se[1],
            "r_squared": r.r_squared,
            "truncation": r.truncation,
            "years": r.fit.n_obs,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    out.write_json(
        "aggregate.json",
        json!({ "weights": to_value(&weights), "denominator": to_value(&denominator), "regression": regression }),
    )?;
    reg.map(|_| ()).context(|| format!("aggregate regression on {}", a.predictions.display()))
}

fn records(a: &RecordArgs) -> Result<Vec<ReceivershipRecord>, CliError> {
    let file = open("--records", &a.records)?;
    load_receiverships(file, a.delimiter.into()).context(|| format!("--records {}", a.records.display()))
}

fn receivership(cmd: &ReceivershipCommand, stamp: bool) -> Result<(), CliError> {
    match cmd {
        ReceivershipCommand::Recovery { records: ra, variant, out } => {
            let recs = records(ra)?;
            let variant: SolvencyVariant = (*variant).into();
            let mut table = String::from("bank_id,recovery_rate,leverage,deposit_outflow,run,duration_years\n");
            for r in &recs {
                let ctx = || format!("record {}", r.bank_id);
                table.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.bank_id,
                    recovery_rate(r, variant).context(ctx)?,
                    leverage(r, variant).context(ctx)?,
                    fmt_opt(r.deposit_outflow()),
                    r.run_flag().map(|b| u8::from(b).to_string()).unwrap_or_default(),
                    fmt_opt(r.duration_years()),
                ));
            }
            let quality = match asset_quality_regression(&recs) {
                Ok(fit) => to_value(&fit.summary()),
                Err(e) => json!({ "error": e.to_string() }),
            };
            let durations = duration_quantiles(&recs, &[25.0, 50.0, 75.0])
                .map(|q| q.into_iter().map(|(p, v)| json!({ "pct": p, "years": v })).collect::<Vec<_>>());
            let out = OutDir::create(out, stamp)?;
            out.write_text("recovery.csv", &table)?;
            out.write_json(
                "recovery.json",
                json!({
                    "records": recs.len(),
                    "variant": to_value(&variant),
                    "depositor_losses": to_value(&depositor_loss_stats(&recs)),
                    "asset_quality": quality,
                    "duration_quantiles": durations,
                }),
            )
        }
        ReceivershipCommand::Grid { records: ra, rho, v, filter, variant, out } => {
            let recs = records(ra)?;
            let filter = match filter {
                RunFilterArg::All => RunFilter::All,
                RunFilterArg::RunOnly => RunFilter::RunOnly,
                RunFilterArg::NoRunOnly => RunFilter::NoRunOnly,
            };
            let opts = GridOptions { filter, variant: (*variant).into() };
            let grid = insolvency_share_grid_with(&recs, rho, v, &opts).context(|| "--rho/--v grid".to_string())?;
            let out = OutDir::create(out, stamp)?;
            out.write_text("grid.csv", &grid.to_table(','))?;
            out.write_json("grid.json", to_value(&grid))
        }
        ReceivershipCommand::Causes { records: ra, mapping, out } => {
            let recs = records(ra)?;
            let mapping = match mapping {
                Some(p) => CauseMapping::from_json(&read_text("--mapping", p)?)
                    .context(|| format!("--mapping {}", p.display()))?,
                None => CauseMapping::default(),
            };
            let mut counts: BTreeMap<CauseCategory, usize> = CauseCategory::ALL.iter().map(|c| (*c, 0)).collect();
            let mut wtr = csv::Writer::from_writer(Vec::new());
            let werr = |e: csv::Error| CliError::Data { context: "causes.csv".into(), source: e.into() };
            wtr.write_record(["bank_id", "cause", "category"]).map_err(werr)?;
            for r in &recs {
                let cat = classify_cause(&r.cause, &mapping);
                *counts.entry(cat).or_default() += 1;
                let name = to_value(&cat).as_str().unwrap_or_default().to_string();
                wtr.write_record([r.bank_id.0.as_str(), r.cause.as_str(), name.as_str()]).map_err(werr)?;
            }
            let bytes = wtr.into_inner().map_err(|e| werr(e.into_error().into()))?;
            let counts: serde_json::Map<String, Value> = counts
                .into_iter()
                .map(|(c, n)| (to_value(&c).as_str().unwrap_or_default().to_string(), json!(n)))
                .collect();
            let out = OutDir::create(out, stamp)?;
            out.write_bytes("causes.csv", &bytes)?;
            out.write_json("causes.json", json!({ "records": recs.len(), "counts": counts }))
        }
        ReceivershipCommand::ExcessReturn { p, loss, r, utility, gamma, out } => {
            let utility = match utility {
                UtilityArg::RiskNeutral => Utility::RiskNeutral,
                UtilityArg::Log => Utility::Log,
                UtilityArg::Crra => Utility::Crra { gamma: gamma.unwrap_or(1.0) },
            };
            let mut table = String::from("p,loss,excess_return,trimmed\n");
            let mut cells = Vec::new();
            for &pi in p {
                for &l in loss {
                    let (s, note) = match required_excess_return(pi, l, *r, utility) {
                        Ok(s) => (Some(s), None),
                        Err(bankruin::Error::Undefined(msg)) => (None, Some(msg)),
                        Err(e) => return Err(CliError::Data { context: format!("--p {pi} --loss {l}"), source: e }),
                    };
                    table.push_str(&format!("{pi},{l},{},{}\n", fmt_opt(s), fmt_opt(s.map(trimmed))));
                    cells.push(json!({ "p": pi, "loss": l, "excess_return": s, "undefined": note }));
                }
            }
            let out = OutDir::create(out, stamp)?;
            out.write_text("excess_return.csv", &table)?;
            out.write_json("excess_return.json", json!({ "utility": to_value(&utility), "r": r, "cells": cells }))
        }
    }
}

fn synth(a: &SynthArgs, stamp: bool) -> Result<(), CliError> {
    let mut cfg = match &a.config {
        Some(p) => serde_json::from_str::<DgpConfig>(&read_text("--config", p)?)
            .map_err(bankruin::Error::from)
            .context(|| format!("--config {}", p.display()))?,
        None => DgpConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.n_banks {
        cfg.n_banks = n;
    }
    if let Some(n) = a.n_years {
        cfg.n_years = n;
    }
    if let Some(y) = a.start_year {
        cfg.start_year = y;
    }
    if let Some(e) = a.era {
        cfg.era = e.into();
    }
    cfg.validate().context(|| "synth configuration".to_string())?;
    let data = generate_panel(&cfg).context(|| "generating panel".to_string())?;
    let recs = generate_receiverships(&cfg).context(|| "generating receiverships".to_string())?;

    let out = OutDir::create(&a.out, stamp)?;
    let d = Delimiter::Comma;
    out.write_with("panel.csv", |buf| write_panel(&data.panel, buf, d))?;
    out.write_with("failures.csv", |buf| write_failures(&data.failures, buf, d))?;
    out.write_with("receiverships.csv", |buf| write_receiverships(&recs, buf, d))?;
    let mut truth = String::from("bank_id,period,probability\n");
    for (o, p) in data.panel.observations().iter().zip(&data.probabilities) {
        truth.push_str(&format!("{},{},{}\n", o.bank_id, o.period, p));
    }
    out.write_text("truth.csv", &truth)?;
    out.write_plain_json("schema.json", &to_value(&ColumnMapping::default()))?;
    out.write_plain_json("spec.json", &to_value(&cfg.matching_spec()))?;
    out.write_plain_json("dgp.json", &to_value(&cfg))
}
