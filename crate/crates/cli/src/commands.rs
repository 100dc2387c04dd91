//! The pipeline commands. Each reads verified upstream artifacts and writes
//! one stage directory under the output root.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rnnbof::baselines::{
    load_external_scores, train_ffnn, train_logistic, FfnnConfig, LogisticConfig,
    PsychometricScorer, Scorer,
};
use rnnbof::cohort::{
    load_cohort, read_cohort, validate_cohort, write_cohort, Cohort, FeatureSchema,
    ValidationStatus,
};
use rnnbof::evaluation::{
    auc_prg, block_bootstrap, comparison_table, prg_curve, roc_auc, write_prg_points,
    write_resamples, EvalError, ScoredTestSet, TestKey,
};
use rnnbof::model::{train, ModelConfig};
use rnnbof::preprocess::{prepare_cohort, StandardizationStats};
use rnnbof::synthgen::{bayes_scores, event_rate, generate_cohort, Oracle};
use rnnbof::tuning::{
    run_search, FfnnFamily, LogisticFamily, RnnFamily, SearchOutcome, SearchSettings, TuneError,
};
use rnnbof::windowing::{
    build_cv_folds, split_train_test, write_window_dump, PatientSeries, SplitWindows, Window,
};
use rnnbof::{FfnnModel, LogisticModel, RnnModel};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifacts::{verify_stage, Manifest, Provenance, StageWriter, VerifiedStage};
use crate::config::{ExperimentConfig, Family};
use crate::error::{CliError, Result};

/// A validated configuration plus its provenance record.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub provenance: Provenance,
}

impl Context {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let provenance = Provenance::new(cfg.hash(), cfg.seed);
        Ok(Self { cfg, provenance })
    }

    pub fn root(&self) -> &Path {
        &self.cfg.out_dir
    }

    fn synthetic(&self) -> bool {
        self.cfg.data.is_none()
    }
}

fn eval_err(e: EvalError) -> CliError {
    CliError::Data(e.to_string())
}

fn tune_err(e: TuneError) -> CliError {
    match e {
        TuneError::InvalidSpace(_) | TuneError::InvalidSettings(_) => {
            CliError::Config(e.to_string())
        }
        other => CliError::Data(other.to_string()),
    }
}

fn csv_bytes<E: std::fmt::Display>(
    f: impl FnOnce(&mut Vec<u8>) -> std::result::Result<(), E>,
) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(CliError::data)?;
    Ok(buf)
}

pub fn cmd_synth(ctx: &Context) -> Result<Manifest> {
    let mut gen = ctx
        .cfg
        .synth
        .clone()
        .ok_or_else(|| CliError::Config("`synth` needs a [synth] section".into()))?;
    gen.seed = ctx.cfg.seed;
    let syn = generate_cohort(&gen).map_err(CliError::data)?;
    let mut w = StageWriter::create(ctx.root(), "synth", "synth")?;
    let (mut events, mut statics) = (Vec::new(), Vec::new());
    write_cohort(&syn.cohort, &mut events, &mut statics).map_err(CliError::data)?;
    w.write("events.csv", &events)?;
    w.write("statics.csv", &statics)?;
    w.write("schema.toml", syn.cohort.schema.to_toml_string().as_bytes())?;
    let mut oracle = Vec::new();
    syn.oracle.write_csv(&mut oracle).map_err(CliError::data)?;
    w.write("oracle.csv", &oracle)?;
    w.write_json(
        "summary.json",
        &json!({
            "provenance": ctx.provenance,
            "generator": gen,
            "patients": syn.cohort.patients.len(),
            "days": syn.cohort.total_days(),
            "event_rate": event_rate(&syn.cohort),
        }),
    )?;
    w.finish(&ctx.provenance)
}

/// The cohort as given by `[data]`, or the generated one.
fn raw_cohort(ctx: &Context, w: &mut StageWriter) -> Result<Cohort> {
    if let Some(d) = &ctx.cfg.data {
        for p in [&d.events, &d.statics, &d.schema] {
            if !p.exists() {
                return Err(CliError::MissingArtifact {
                    path: p.clone(),
                    stage: "the data export".into(),
                });
            }
            w.record_external_input(p)?;
        }
        let schema = FeatureSchema::load(&d.schema).map_err(|e| CliError::Config(e.to_string()))?;
        return load_cohort(&d.events, &d.statics, &schema).map_err(CliError::data);
    }
    let synth = verify_stage(ctx.root(), "synth", "synth")?;
    w.record_inputs(&synth);
    read_verified_cohort(&synth)
}

fn read_verified_cohort(stage: &VerifiedStage) -> Result<Cohort> {
    let schema =
        FeatureSchema::from_toml_str(&stage.read_string("schema.toml")?).map_err(CliError::data)?;
    read_cohort(
        stage.read("events.csv")?.as_slice(),
        stage.read("statics.csv")?.as_slice(),
        &schema,
    )
    .map_err(CliError::data)
}

pub fn cmd_preprocess(ctx: &Context) -> Result<Manifest> {
    let mut w = StageWriter::create(ctx.root(), "preprocess", "preprocess")?;
    let cohort = raw_cohort(ctx, &mut w)?;
    let validation = validate_cohort(&cohort);
    let prep = prepare_cohort(&cohort, &ctx.cfg.preprocess, ctx.cfg.test_fraction)
        .map_err(CliError::data)?;
    let (mut events, mut statics) = (Vec::new(), Vec::new());
    write_cohort(&prep.cohort, &mut events, &mut statics).map_err(CliError::data)?;
    w.write("events.csv", &events)?;
    w.write("statics.csv", &statics)?;
    w.write(
        "schema.toml",
        prep.cohort.schema.to_toml_string().as_bytes(),
    )?;
    w.write(
        "raw_schema.toml",
        prep.raw_schema.to_toml_string().as_bytes(),
    )?;
    w.write("stats.json", prep.stats.to_json().as_bytes())?;
    w.write_json(
        "report.json",
        &json!({
            "provenance": ctx.provenance,
            "dropped_patients": validation.ids_with(ValidationStatus::Drop).collect::<Vec<_>>(),
            "imputed_patients": validation.ids_with(ValidationStatus::Impute).collect::<Vec<_>>(),
            "validation": validation,
            "cleaning": prep.report,
        }),
    )?;
    w.finish(&ctx.provenance)
}

struct Prepared {
    stage: VerifiedStage,
    cohort: Cohort,
    raw_schema: FeatureSchema,
    stats: StandardizationStats,
    series: Vec<Arc<PatientSeries<f64>>>,
}

impl Prepared {
    fn split(&self, n: usize, test_fraction: f64) -> Result<SplitWindows<f64>> {
        split_train_test(&self.series, n, test_fraction).map_err(CliError::data)
    }
}

fn load_prepared(ctx: &Context) -> Result<Prepared> {
    let stage = verify_stage(ctx.root(), "preprocess", "preprocess")?;
    let cohort = read_verified_cohort(&stage)?;
    let raw_schema = FeatureSchema::from_toml_str(&stage.read_string("raw_schema.toml")?)
        .map_err(CliError::data)?;
    let stats = StandardizationStats::from_json(&stage.read_string("stats.json")?)
        .map_err(CliError::data)?;
    let series = PatientSeries::<f64>::from_cohort(&cohort).map_err(CliError::data)?;
    Ok(Prepared {
        stage,
        cohort,
        raw_schema,
        stats,
        series,
    })
}

fn lengths(ctx: &Context, window_len: Option<usize>) -> Result<Vec<usize>> {
    match window_len {
        Some(0) => Err(CliError::Config("--window-len must be positive".into())),
        Some(n) => Ok(vec![n]),
        None => Ok(ctx.cfg.window_lengths.clone()),
    }
}

fn families(ctx: &Context, family: Option<Family>) -> Vec<Family> {
    match family {
        Some(f) => vec![f],
        None => ctx.cfg.families.clone(),
    }
}

pub fn cmd_window(ctx: &Context, window_len: Option<usize>) -> Result<Manifest> {
    let prepared = load_prepared(ctx)?;
    let mut w = StageWriter::create(ctx.root(), "windows", "window")?;
    w.record_inputs(&prepared.stage);
    let mut summary = Vec::new();
    let mut label_sets = Vec::new();
    for n in lengths(ctx, window_len)? {
        let split = prepared.split(n, ctx.cfg.test_fraction)?;
        let (train, test) = (split.train(), split.test());
        w.write(
            &format!("n{n}_train.csv"),
            &csv_bytes(|b| write_window_dump(&train, b))?,
        )?;
        w.write(
            &format!("n{n}_test.csv"),
            &csv_bytes(|b| write_window_dump(&test, b))?,
        )?;
        let mut keys: Vec<(String, usize, u8)> = test
            .iter()
            .map(|w| (w.patient_id().to_string(), w.label_index(), w.label()))
            .collect();
        keys.sort();
        summary.push(json!({
            "window_len": n,
            "train_windows": train.len(),
            "test_windows": test.len(),
            "train_positives": train.iter().filter(|w| w.label() == 1).count(),
            "test_positives": test.iter().filter(|w| w.label() == 1).count(),
        }));
        label_sets.push(keys);
    }
    let aligned = label_sets.windows(2).all(|p| p[0] == p[1]);
    w.write_json(
        "summary.json",
        &json!({
            "provenance": ctx.provenance,
            "windows": summary,
            "test_sets_identical": aligned,
        }),
    )?;
    w.finish(&ctx.provenance)
}

#[derive(Serialize, Deserialize)]
struct TunedRecord<C> {
    family: Family,
    window_len: usize,
    best: rnnbof::tuning::BestConfig<C>,
    provenance: Provenance,
}

fn finish_search<C: Clone + Serialize>(
    ctx: &Context,
    w: &mut StageWriter,
    family: Family,
    n: usize,
    out: SearchOutcome<C>,
) -> Result<()> {
    let mut log = Vec::new();
    // wall times go to the metadata file so the log is reproducible
    out.write_trial_log(&mut log, false).map_err(tune_err)?;
    w.write("trials.csv", &log)?;
    w.metadata(
        "trial_seconds",
        json!(out.trials.iter().map(|t| t.seconds).collect::<Vec<_>>()),
    );
    let best = out.best().ok_or_else(|| {
        let first = out
            .trials
            .iter()
            .find_map(|t| t.error.clone())
            .unwrap_or_default();
        CliError::Data(format!("every tuning trial failed; first error: {first}"))
    })?;
    w.write_json(
        "best_config.json",
        &TunedRecord {
            family,
            window_len: n,
            best,
            provenance: ctx.provenance.clone(),
        },
    )
}

pub fn cmd_tune(
    ctx: &Context,
    family: Option<Family>,
    window_len: Option<usize>,
) -> Result<Vec<Manifest>> {
    let prepared = load_prepared(ctx)?;
    let mut manifests = Vec::new();
    for fam in families(ctx, family) {
        for n in lengths(ctx, window_len)? {
            let name = fam.model_name(n);
            let split = prepared.split(n, ctx.cfg.test_fraction)?;
            let folds = build_cv_folds(&split, ctx.cfg.cv_folds);
            let input_dim = input_dim(&split)?;
            let mut w = StageWriter::create(ctx.root(), &format!("tuning/{name}"), "tune")?;
            w.record_inputs(&prepared.stage);
            w.metadata("excluded_patients", json!(folds.excluded));
            let space = ctx.cfg.tuning.space(fam);
            let settings = SearchSettings {
                iterations: ctx.cfg.tuning.iterations,
                strategy: ctx.cfg.tuning.strategy,
                seed: ctx.cfg.seed,
                tpe: ctx.cfg.tuning.tpe,
            };
            match fam {
                Family::Rnn => {
                    let f = RnnFamily {
                        base: ctx.cfg.rnn.model_config(input_dim, ctx.cfg.seed),
                    };
                    let out = run_search(&space, &folds, &f, &settings).map_err(tune_err)?;
                    finish_search(ctx, &mut w, fam, n, out)?;
                }
                Family::Ffnn => {
                    let f = FfnnFamily {
                        base: ctx.cfg.ffnn.clone(),
                    };
                    let out = run_search(&space, &folds, &f, &settings).map_err(tune_err)?;
                    finish_search(ctx, &mut w, fam, n, out)?;
                }
                Family::Logistic => {
                    let f = LogisticFamily {
                        base: ctx.cfg.logistic.clone(),
                    };
                    let out = run_search(&space, &folds, &f, &settings).map_err(tune_err)?;
                    finish_search(ctx, &mut w, fam, n, out)?;
                }
            }
            manifests.push(w.finish(&ctx.provenance)?);
        }
    }
    Ok(manifests)
}

fn input_dim(split: &SplitWindows<f64>) -> Result<usize> {
    split.train().first().map(Window::input_dim).ok_or_else(|| {
        CliError::Data(
            "no training windows; the series are too short for this window length".into(),
        )
    })
}

/// The tuned configuration of `name` when a tuning stage exists for it.
fn tuned_config<C: for<'de> Deserialize<'de>>(
    ctx: &Context,
    name: &str,
    w: &mut StageWriter,
) -> Result<Option<C>> {
    let rel = format!("tuning/{name}");
    if !ctx.root().join(&rel).exists() {
        return Ok(None);
    }
    let stage = verify_stage(ctx.root(), &rel, "tune")?;
    w.record_inputs(&stage);
    let record: TunedRecord<C> =
        serde_json::from_slice(&stage.read("best_config.json")?).map_err(|e| {
            CliError::Data(format!("{}: {e}", stage.path("best_config.json").display()))
        })?;
    Ok(Some(record.best.config))
}

pub fn cmd_train(
    ctx: &Context,
    family: Option<Family>,
    window_len: Option<usize>,
) -> Result<Vec<Manifest>> {
    let prepared = load_prepared(ctx)?;
    let mut manifests = Vec::new();
    for fam in families(ctx, family) {
        for n in lengths(ctx, window_len)? {
            let name = fam.model_name(n);
            let split = prepared.split(n, ctx.cfg.test_fraction)?;
            let train_windows = split.train();
            let dim = input_dim(&split)?;
            let mut w = StageWriter::create(ctx.root(), &format!("models/{name}"), "train")?;
            w.record_inputs(&prepared.stage);
            let seed = ctx.cfg.seed;
            match fam {
                Family::Rnn => {
                    let tuned: Option<ModelConfig> = tuned_config(ctx, &name, &mut w)?;
                    let source = if tuned.is_some() { "tuned" } else { "default" };
                    let config = tuned.unwrap_or_else(|| ctx.cfg.rnn.model_config(dim, seed));
                    if config.input_dim != dim {
                        return Err(CliError::Data(format!(
                            "tuned configuration expects {} inputs, the data has {dim}",
                            config.input_dim
                        )));
                    }
                    let model = train(&config, &train_windows).map_err(CliError::data)?;
                    w.write(
                        "model.json",
                        &serde_json::to_vec(&model).map_err(CliError::data)?,
                    )?;
                    w.write("loss.csv", &csv_bytes(|b| model.write_loss_trace(b))?)?;
                    w.write_json("config.json", &json!({"family": fam, "window_len": n, "source": source, "config": config}))?;
                }
                Family::Ffnn => {
                    let tuned: Option<FfnnConfig> = tuned_config(ctx, &name, &mut w)?;
                    let source = if tuned.is_some() { "tuned" } else { "default" };
                    let config = tuned.unwrap_or_else(|| FfnnConfig {
                        seed,
                        ..ctx.cfg.ffnn.clone()
                    });
                    let model = train_ffnn(&train_windows, &config).map_err(CliError::data)?;
                    w.write(
                        "model.json",
                        &serde_json::to_vec(&model).map_err(CliError::data)?,
                    )?;
                    w.write_json("config.json", &json!({"family": fam, "window_len": n, "source": source, "config": config}))?;
                }
                Family::Logistic => {
                    let tuned: Option<LogisticConfig> = tuned_config(ctx, &name, &mut w)?;
                    let source = if tuned.is_some() { "tuned" } else { "default" };
                    let config = tuned.unwrap_or_else(|| LogisticConfig {
                        seed,
                        ..ctx.cfg.logistic.clone()
                    });
                    let model = train_logistic(&train_windows, &config).map_err(CliError::data)?;
                    w.write(
                        "model.json",
                        &serde_json::to_vec(&model).map_err(CliError::data)?,
                    )?;
                    w.write_json("config.json", &json!({"family": fam, "window_len": n, "source": source, "config": config}))?;
                }
            }
            manifests.push(w.finish(&ctx.provenance)?);
        }
    }
    Ok(manifests)
}

fn load_scorer(family: Family, stage: &VerifiedStage) -> Result<Box<dyn Scorer<f64>>> {
    let bad = |e: serde_json::Error| {
        CliError::Data(format!("{}: {e}", stage.path("model.json").display()))
    };
    Ok(match family {
        Family::Rnn => {
            Box::new(RnnModel::load_json(&stage.path("model.json")).map_err(CliError::data)?)
        }
        Family::Ffnn => {
            Box::new(serde_json::from_slice::<FfnnModel>(&stage.read("model.json")?).map_err(bad)?)
        }
        Family::Logistic => Box::new(
            serde_json::from_slice::<LogisticModel>(&stage.read("model.json")?).map_err(bad)?,
        ),
    })
}

/// Parses `NAME=PATH` pairs given on the command line.
pub fn parse_external(spec: &str) -> Result<(String, PathBuf)> {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_string(), PathBuf::from(path)))
        }
        _ => Err(CliError::Config(format!(
            "--external-scores expects NAME=PATH, got `{spec}`"
        ))),
    }
}

pub fn cmd_evaluate(ctx: &Context) -> Result<Manifest> {
    let prepared = load_prepared(ctx)?;
    let mut w = StageWriter::create(ctx.root(), "evaluation", "evaluate")?;
    w.record_inputs(&prepared.stage);
    let lengths = ctx.cfg.window_lengths.clone();
    let mut tests: BTreeMap<usize, Vec<Window<f64>>> = BTreeMap::new();
    for &n in &lengths {
        tests.insert(n, prepared.split(n, ctx.cfg.test_fraction)?.test());
    }
    let base = &tests[&lengths[0]];
    let mut testset = ScoredTestSet::from_windows(base).map_err(eval_err)?;

    for &fam in &ctx.cfg.families {
        for &n in &lengths {
            let name = fam.model_name(n);
            let stage = verify_stage(ctx.root(), &format!("models/{name}"), "train")?;
            w.record_inputs(&stage);
            let scorer = load_scorer(fam, &stage)?;
            let windows = &tests[&n];
            let scores = scorer.score(windows).map_err(CliError::data)?;
            testset
                .add_model_for_windows(&name, windows, &scores)
                .map_err(eval_err)?;
        }
    }
    for spec in &ctx.cfg.psychometric {
        spec.validate(&prepared.raw_schema)
            .map_err(|e| CliError::Config(format!("psychometric `{}`: {e}", spec.name)))?;
        let scorer =
            PsychometricScorer::new(spec.clone(), &prepared.cohort.schema, Some(&prepared.stats))
                .map_err(|e| CliError::Config(e.to_string()))?;
        let scores = scorer.score(base).map_err(CliError::data)?;
        testset
            .add_model_for_windows(&spec.name, base, &scores)
            .map_err(eval_err)?;
    }
    for (name, path) in &ctx.cfg.external_scores {
        w.record_external_input(path)?;
        let scores = load_external_scores(path, &testset.keys).map_err(CliError::data)?;
        testset.add_model_in_order(name, scores).map_err(eval_err)?;
    }
    if ctx.cfg.include_oracle && ctx.synthetic() {
        let synth = verify_stage(ctx.root(), "synth", "synth")?;
        w.record_inputs(&synth);
        let oracle =
            Oracle::read_csv(synth.read("oracle.csv")?.as_slice()).map_err(CliError::data)?;
        let scores = bayes_scores(&oracle, base).map_err(CliError::data)?;
        testset
            .add_model_for_windows("bayes", base, &scores)
            .map_err(eval_err)?;
    }
    if testset.models.is_empty() {
        return Err(CliError::Config("no scorers configured".into()));
    }

    w.write("scores.csv", &csv_bytes(|b| write_scores(&testset, b))?)?;
    let mut curves = Vec::new();
    let mut metrics = Vec::new();
    for m in &testset.models {
        let curve = prg_curve(&m.scores, &testset.labels).map_err(eval_err)?;
        metrics.push(json!({
            "model": m.name,
            "auc_prg": auc_prg(&curve),
            "roc_auc": roc_auc(&m.scores, &testset.labels).map_err(eval_err)?,
        }));
        curves.push((m.name.clone(), curve));
    }
    w.write(
        "prg_points.csv",
        &csv_bytes(|b| write_prg_points(&curves, b))?,
    )?;
    w.write_json(
        "metrics.json",
        &json!({
            "provenance": ctx.provenance,
            "test_windows": testset.len(),
            "prevalence": testset.prevalence(),
            "models": metrics,
        }),
    )?;
    w.finish(&ctx.provenance)
}

/// `patient_id,label_index,label,<model>...` in test-set order.
fn write_scores(testset: &ScoredTestSet, out: &mut Vec<u8>) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "patient_id".to_string(),
        "label_index".into(),
        "label".into(),
    ];
    header.extend(testset.models.iter().map(|m| m.name.clone()));
    w.write_record(&header)?;
    for (i, key) in testset.keys.iter().enumerate() {
        let mut row = vec![
            key.patient_id.clone(),
            key.label_index.to_string(),
            testset.labels[i].to_string(),
        ];
        row.extend(testset.models.iter().map(|m| m.scores[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_scores(bytes: &[u8]) -> Result<ScoredTestSet> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().map_err(CliError::data)?.clone();
    if header.len() < 4
        || &header[0] != "patient_id"
        || &header[1] != "label_index"
        || &header[2] != "label"
    {
        return Err(CliError::Data("scores.csv has an unexpected header".into()));
    }
    let names: Vec<String> = header.iter().skip(3).map(String::from).collect();
    let mut rows = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for rec in r.records() {
        let rec = rec.map_err(CliError::data)?;
        let parse = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|e| CliError::Data(format!("scores.csv: `{}`: {e}", &rec[i])))
        };
        let key = TestKey {
            patient_id: rec[0].to_string(),
            label_index: parse(1)? as usize,
        };
        let label = parse(2)? as u8;
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(parse(3 + j)?);
        }
        rows.push((key, label));
    }
    let mut testset = ScoredTestSet::from_rows(rows.clone()).map_err(eval_err)?;
    for (name, col) in names.iter().zip(columns) {
        let keyed = rows.iter().cloned().zip(col).map(|((k, y), s)| (k, y, s));
        testset.add_model_keyed(name, keyed).map_err(eval_err)?;
    }
    Ok(testset)
}

pub fn cmd_compare(ctx: &Context) -> Result<Manifest> {
    let evaluation = verify_stage(ctx.root(), "evaluation", "evaluate")?;
    let testset = read_scores(&evaluation.read("scores.csv")?)?;
    let mut w = StageWriter::create(ctx.root(), "report", "compare")?;
    w.record_inputs(&evaluation);
    let config = ctx.cfg.bootstrap.config(ctx.cfg.seed);
    let report = block_bootstrap(&testset, &config).map_err(eval_err)?;
    let table = comparison_table(&report);
    w.write("table.csv", &csv_bytes(|b| table.write_csv(b))?)?;
    w.write("table.txt", table.to_string().as_bytes())?;
    w.write(
        "resamples.csv",
        &csv_bytes(|b| write_resamples(&report, b))?,
    )?;
    w.write_json(
        "report.json",
        &json!({
            "provenance": ctx.provenance,
            "test_windows": testset.len(),
            "prevalence": testset.prevalence(),
            "table": table,
            "bootstrap": report,
        }),
    )?;
    print!("{table}");
    w.finish(&ctx.provenance)
}
