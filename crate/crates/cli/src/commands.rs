use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fap_core::condition::{ConcatMlpParams, TensorCondParams};
use fap_core::dataset::{
    read_embeddings, read_jsonl, read_manifest, write_embeddings, write_jsonl, write_manifest,
};
use fap_core::metrics::{baseline_aspect, baseline_polarity, MetricReport};
use fap_core::models::{
    evaluate, load_model, save_model, train as train_model, Family, ModelSpec, Network, Task,
};
use fap_core::ndmath::{finite_diff_check, logistic_loss_pm1, softmax_xent, ParamBlock};
use fap_core::pipeline::{
    compile_and_balance, make_split, synth_generate, Exclusion, NounRuleMode, OracleReport,
    SplitPlan, SynthConfig, TagRecord, Thresholds,
};
use fap_core::seed::{derive_seed, rng};
use fap_core::{AspectLexicon, Dataset, ImageRecord, Polarity, Split};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::output::{check_outputs, create_dir, log_path, write_json, Table};
use crate::{
    CompileArgs, DataArgs, EvalArgs, ExperimentArgs, GradcheckArgs, NumericFailure, SplitArgs,
    SynthArgs, TrainArgs, UsageError,
};

fn load_lexicon(path: Option<&Path>) -> Result<AspectLexicon> {
    Ok(match path {
        Some(p) => AspectLexicon::load(p)?,
        None => AspectLexicon::default_table(),
    })
}

fn load_dataset(d: &DataArgs) -> Result<Dataset> {
    let lexicon = load_lexicon(d.lexicon.as_deref())?;
    Ok(Dataset::load(&d.manifest, &d.embeddings, lexicon)?)
}

fn data_inputs(d: &DataArgs) -> Vec<&Path> {
    let mut v = vec![d.manifest.as_path(), d.embeddings.as_path()];
    v.extend(d.lexicon.as_deref());
    v
}

fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

pub fn compile(a: CompileArgs) -> Result<()> {
    let manifest = a.out.join("manifest.jsonl");
    let log = a.out.join("removal_log.jsonl");
    let emb_out = a.out.join("embeddings.tsv");
    let mut outputs = vec![manifest.as_path(), log.as_path()];
    if a.embeddings.is_some() {
        outputs.push(&emb_out);
    }
    let mut inputs = vec![a.tags.as_path()];
    inputs.extend(a.lexicon.as_deref());
    inputs.extend(a.exclusions.as_deref());
    inputs.extend(a.embeddings.as_deref());
    check_outputs(&outputs, &inputs, a.force)?;

    let lexicon = load_lexicon(a.lexicon.as_deref())?;
    let tags: Vec<TagRecord> = read_jsonl(&a.tags)?;
    let exclusions: Vec<Exclusion> = match &a.exclusions {
        Some(p) => read_jsonl(p)?,
        None => Vec::new(),
    };
    let embeddings = a.embeddings.as_ref().map(read_embeddings).transpose()?;
    let compiled = compile_and_balance(
        &tags,
        &lexicon,
        &exclusions,
        a.mode,
        &Thresholds::default(),
        a.seed,
    );

    create_dir(&a.out)?;
    write_manifest(&manifest, &compiled.records)?;
    write_jsonl(&log, &compiled.log)?;
    if let Some((dim, embs)) = &embeddings {
        let by_id: BTreeMap<&str, &[f64]> = embs
            .iter()
            .map(|e| (e.id.as_str(), e.values.as_slice()))
            .collect();
        let mut seen = HashSet::new();
        let mut rows = Vec::new();
        for r in &compiled.records {
            if !seen.insert(r.id.as_str()) {
                continue;
            }
            let v = by_id
                .get(r.id.as_str())
                .ok_or_else(|| fap_core::Error::MissingEmbedding(r.id.clone()))?;
            rows.push((r.id.as_str(), *v));
        }
        write_embeddings(&emb_out, *dim, rows)?;
    }

    let mut per_rule: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for e in &compiled.log {
        let c = per_rule.entry(&e.rule).or_default();
        c.0 += 1;
        c.1 += e.count;
    }
    let mut t = Table::new(&["rule", "targets", "records"]);
    for (rule, (targets, count)) in per_rule {
        t.row(vec![
            rule.to_string(),
            targets.to_string(),
            count.to_string(),
        ]);
    }
    print!("{}", t.render());
    println!(
        "{} tag records -> {} image records, {} nouns",
        tags.len(),
        compiled.records.len(),
        fap_core::dataset::noun_vocab(&compiled.records).len()
    );
    Ok(())
}

fn print_cells(cells: &[fap_core::pipeline::CellCounts]) {
    let mut t = Table::new(&["noun", "aspect", "polarity", "train", "dev", "test"]);
    for c in cells {
        t.row(vec![
            c.noun.clone(),
            c.aspect.clone(),
            format!("{:+}", c.polarity),
            c.train.to_string(),
            c.dev.to_string(),
            c.test.to_string(),
        ]);
    }
    print!("{}", t.render());
}

fn build_plan(
    kind: fap_core::pipeline::SplitKind,
    holdouts: Vec<(String, String)>,
    ratios: Option<Vec<f64>>,
    seed: u64,
) -> Result<SplitPlan> {
    use fap_core::pipeline::SplitKind;
    let mut plan = match kind {
        SplitKind::Standard => {
            if !holdouts.is_empty() {
                return Err(
                    UsageError("--holdout only applies to --split-kind zeroshot".into()).into(),
                );
            }
            SplitPlan::standard(seed)
        }
        SplitKind::Zeroshot if holdouts.is_empty() => {
            SplitPlan::zeroshot(SplitPlan::default_holdouts(), seed)
        }
        SplitKind::Zeroshot => SplitPlan::zeroshot(holdouts, seed),
    };
    if let Some(r) = ratios {
        plan.ratios = r;
    }
    plan.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(plan)
}

pub fn split(a: SplitArgs) -> Result<()> {
    check_outputs(&[&a.out], &[&a.manifest], a.force)?;
    let plan = build_plan(a.split_kind, a.holdouts, a.ratios, a.seed)?;
    let records = read_manifest(&a.manifest)?;
    let (out, cells) = make_split(&records, &plan)?;
    write_manifest(&a.out, &out)?;
    if !plan.holdouts.is_empty() {
        println!("holdouts:");
        for (n, x) in &plan.holdouts {
            println!("  {n} {x}");
        }
    }
    print_cells(&cells);
    Ok(())
}

fn print_epochs(log: &fap_core::models::TrainLog) {
    let mut t = Table::new(&["epoch", "train_loss", "dev_metric"]);
    for e in &log.epochs {
        t.row(vec![
            e.epoch.to_string(),
            e.train_loss.map_or("-".into(), |l| format!("{l:.6}")),
            fmt4(e.dev_metric),
        ]);
    }
    print!("{}", t.render());
    println!(
        "best epoch {} (dev {:.4})",
        log.best_epoch, log.best_dev_metric
    );
}

pub fn train(a: TrainArgs) -> Result<()> {
    let log_file = log_path(&a.out);
    check_outputs(&[&a.out, &log_file], &data_inputs(&a.data), a.force)?;
    let spec = ModelSpec {
        family: a.family,
        task: a.task,
        hidden: a.hidden,
        lr: a.lr,
        epochs: a.epochs,
        batch_size: a.batch,
        optimizer: a.optimizer,
        seed: a.seed,
    };
    spec.validate().map_err(|e| UsageError(e.to_string()))?;
    if spec.epochs == 0 {
        eprintln!("warning: --epochs 0 saves the untrained initial model");
    }
    let ds = load_dataset(&a.data)?;
    let (model, log) = train_model(&ds, &spec)?;
    save_model(&model, &a.out)?;
    write_jsonl(&log_file, &log.epochs)?;
    print_epochs(&log);
    Ok(())
}

fn select(ds: &Dataset, split: &str) -> Result<Vec<ImageRecord>> {
    if split == "all" {
        return Ok(ds.records().to_vec());
    }
    let s: Split = split
        .parse()
        .map_err(|e: String| UsageError(format!("--split: {e}")))?;
    Ok(ds.in_split(s).cloned().collect())
}

#[derive(Debug, Serialize)]
struct EvalReport {
    source: String,
    split: String,
    rows: usize,
    applicable: bool,
    report: Option<MetricReport>,
    not_applicable: Vec<(String, String)>,
    skipped_rows: usize,
}

impl EvalReport {
    fn print(&self) {
        println!("{} on {} ({} rows)", self.source, self.split, self.rows);
        match &self.report {
            Some(r) if self.applicable => print!("{}", r.to_table()),
            _ => {
                println!("not applicable: no training rows for");
                for (n, a) in &self.not_applicable {
                    println!("  {n} {a}");
                }
                if let Some(r) = &self.report {
                    print!("partial, over scorable rows only:\n{}", r.to_table());
                }
            }
        }
    }
}

fn eval_model(
    model_path: &Path,
    ds: &Dataset,
    rows: &[ImageRecord],
    split: &str,
) -> Result<EvalReport> {
    let model = load_model(model_path)?;
    let ev = evaluate(&model, ds, rows)?;
    Ok(EvalReport {
        source: format!("{} {}", model.spec.family, model.spec.task),
        split: split.to_string(),
        rows: rows.len(),
        applicable: ev.fully_applicable(),
        report: ev.report,
        not_applicable: ev.not_applicable,
        skipped_rows: ev.skipped_rows,
    })
}

fn eval_baseline(
    task: Task,
    ds: &Dataset,
    rows: &[ImageRecord],
    split: &str,
    seed: u64,
) -> Result<EvalReport> {
    let (_, report) = match task {
        Task::Aspect => {
            let train: Vec<ImageRecord> = ds.in_split(Split::Train).cloned().collect();
            baseline_aspect(&train, rows, seed)?
        }
        Task::Polarity => baseline_polarity(rows, seed)?,
    };
    Ok(EvalReport {
        source: format!("baseline {task}"),
        split: split.to_string(),
        rows: rows.len(),
        applicable: true,
        report: Some(report),
        not_applicable: Vec::new(),
        skipped_rows: 0,
    })
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let mut inputs = data_inputs(&a.data);
    inputs.extend(a.model.as_deref());
    check_outputs(&[&a.out], &inputs, a.force)?;
    let ds = load_dataset(&a.data)?;
    let rows = select(&ds, &a.split)?;
    if rows.is_empty() {
        bail!(fap_core::Error::EmptyPredictionSet);
    }
    let report = match (&a.model, a.baseline) {
        (Some(m), _) => eval_model(m, &ds, &rows, &a.split)?,
        (None, Some(task)) => eval_baseline(task, &ds, &rows, &a.split, a.seed)?,
        (None, None) => return Err(UsageError("pass --model or --baseline".into()).into()),
    };
    write_json(&a.out, &report)?;
    report.print();
    Ok(())
}

/// Loss and gradient of one example under parameters `theta`.
fn example_loss<N: Network>(
    net: &N,
    theta: &[f64],
    x: &[f64],
    noun: usize,
    task: Task,
    label: usize,
    pol: Polarity,
    corrupt: bool,
) -> fap_core::Result<(f64, Vec<f64>)> {
    let mut p = net.clone();
    p.assign_flat(theta);
    let s = p.scores(x, noun)?;
    let (loss, d) = match task {
        Task::Aspect => softmax_xent(&s, label)?,
        Task::Polarity => {
            let (l, dz) = logistic_loss_pm1(s[label], pol);
            let mut d = vec![0.0; s.len()];
            d[label] = dz;
            (l, d)
        }
    };
    let mut g = p.zeros_like();
    p.accumulate_grad(x, noun, &d, &mut g)?;
    let mut flat = g.flatten();
    if corrupt {
        flat.iter_mut().for_each(|v| *v *= 1.01);
    }
    Ok((loss, flat))
}

fn random_params<P: ParamBlock, R: Rng>(p: &mut P, r: &mut R) {
    let flat: Vec<f64> = (0..p.num_params())
        .map(|_| r.random_range(-0.5..0.5))
        .collect();
    p.assign_flat(&flat);
}

pub fn gradcheck(a: GradcheckArgs) -> Result<()> {
    if !matches!(a.family, Family::TensorCond | Family::ConcatMlp) {
        return Err(UsageError(format!(
            "gradcheck supports tensor_cond and concat_mlp, not {}",
            a.family
        ))
        .into());
    }
    if a.instances == 0 || !(a.eps > 0.0) {
        return Err(UsageError("--instances and --eps must be positive".into()).into());
    }
    let tasks = match a.task {
        Some(t) => vec![t],
        None => vec![Task::Aspect, Task::Polarity],
    };
    let mut t = Table::new(&["task", "instances", "max_rel_error"]);
    let mut worst_all: f64 = 0.0;
    for task in tasks {
        let mut worst: f64 = 0.0;
        for i in 0..a.instances {
            let mut r = rng(derive_seed(
                a.seed,
                &["gradcheck", task.as_str(), &i.to_string()],
            ));
            let (na, d, n) = (
                r.random_range(2..=5),
                r.random_range(2..=8),
                r.random_range(1..=4),
            );
            let x: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
            let noun = r.random_range(0..n);
            let label = r.random_range(0..na);
            let pol = if r.random_bool(0.5) {
                Polarity::Left
            } else {
                Polarity::Right
            };
            let rep = if a.family == Family::TensorCond {
                let mut p = TensorCondParams::zeros(na, d, n);
                random_params(&mut p, &mut r);
                finite_diff_check(
                    |th| example_loss(&p, th, &x, noun, task, label, pol, a.corrupt_gradient),
                    &p.flatten(),
                    a.eps,
                )?
            } else {
                let mut p = ConcatMlpParams::zeros(na, d, n, r.random_range(2..=6));
                random_params(&mut p, &mut r);
                finite_diff_check(
                    |th| example_loss(&p, th, &x, noun, task, label, pol, a.corrupt_gradient),
                    &p.flatten(),
                    a.eps,
                )?
            };
            worst = worst.max(rep.max_rel_error);
        }
        t.row(vec![
            task.to_string(),
            a.instances.to_string(),
            format!("{worst:.3e}"),
        ]);
        worst_all = worst_all.max(worst);
    }
    print!("{}", t.render());
    if worst_all < a.tolerance {
        println!(
            "PASS {} (max relative error {worst_all:.3e} < {:e})",
            a.family, a.tolerance
        );
        Ok(())
    } else {
        Err(NumericFailure(format!(
            "FAIL {}: max relative error {worst_all:.3e} >= {:e}",
            a.family, a.tolerance
        ))
        .into())
    }
}

fn print_oracle(o: &OracleReport) {
    let mut t = Table::new(&["noun", "aspect", "bayes_accuracy"]);
    for c in &o.per_cell {
        t.row(vec![
            c.noun.clone(),
            c.aspect.clone(),
            fmt4(c.bayes_accuracy),
        ]);
    }
    print!("{}", t.render());
    println!(
        "per-noun oracle {:.4}, noun-blind ceiling {:.4}",
        o.per_noun_oracle, o.noun_blind_ceiling
    );
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let manifest = a.out.join("manifest.jsonl");
    let embeddings = a.out.join("embeddings.tsv");
    let oracle_path = a.out.join("oracle.json");
    check_outputs(&[&manifest, &embeddings, &oracle_path], &[], a.force)?;
    let cfg = SynthConfig {
        dim: a.dim,
        nouns: a.nouns,
        num_aspects: a.aspects,
        aspects_per_noun: a.aspects_per_noun,
        images_per_cell: a.images_per_cell,
        separation: a.separation,
        noise: a.noise,
        noun_flip: !a.no_flip,
        seed: a.seed,
    };
    cfg.validate(&AspectLexicon::default_table())
        .map_err(|e| UsageError(e.to_string()))?;
    let (ds, oracle) = synth_generate(&cfg)?;
    create_dir(&a.out)?;
    ds.save(&manifest, &embeddings)?;
    write_json(&oracle_path, &oracle)?;
    print_oracle(&oracle);
    println!(
        "{} records of dimension {} in {}",
        ds.len(),
        ds.dim(),
        a.out.display()
    );
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompileStep {
    #[serde(default)]
    mode: NounRuleMode,
    #[serde(default)]
    thresholds: Option<Thresholds>,
    seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    synth: SynthConfig,
    #[serde(default)]
    compile: Option<CompileStep>,
    split: SplitPlan,
    models: Vec<ModelSpec>,
    /// Also score the image-blind baselines.
    #[serde(default)]
    baselines: bool,
    #[serde(default)]
    baseline_seed: u64,
}

#[derive(Debug, Serialize)]
struct ExperimentRow {
    method: String,
    task: Task,
    model_file: Option<PathBuf>,
    best_epoch: Option<usize>,
    dev: Option<f64>,
    test: Option<f64>,
    applicable: bool,
}

pub fn experiment(a: ExperimentArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config)
        .with_context(|| format!("reading {}", a.config.display()))?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| fap_core::Error::Parse {
            path: a.config.clone(),
            line: e.line(),
            message: e.to_string(),
        })?;
    let report_path = a.out.join("report.json");
    check_outputs(&[&report_path], &[&a.config], a.force)?;
    cfg.split
        .validate()
        .map_err(|e| UsageError(e.to_string()))?;
    for m in &cfg.models {
        m.validate().map_err(|e| UsageError(e.to_string()))?;
    }

    let (ds, oracle) = synth_generate(&cfg.synth)?;
    let mut records = ds.records().to_vec();
    create_dir(&a.out)?;
    if let Some(c) = &cfg.compile {
        let tags: Vec<TagRecord> = records.iter().map(TagRecord::from).collect();
        let th = c.thresholds.unwrap_or_default();
        let compiled = compile_and_balance(&tags, ds.lexicon(), &[], c.mode, &th, c.seed);
        write_jsonl(a.out.join("removal_log.jsonl"), &compiled.log)?;
        records = compiled.records;
    }
    let (records, cells) = make_split(&records, &cfg.split)?;
    let ds = ds.with_records(records)?;
    ds.save(a.out.join("manifest.jsonl"), a.out.join("embeddings.tsv"))?;
    write_json(&a.out.join("oracle.json"), &oracle)?;
    print_cells(&cells);

    let test: Vec<ImageRecord> = ds.in_split(Split::Test).cloned().collect();
    let models_dir = a.out.join("models");
    create_dir(&models_dir)?;
    let mut rows = Vec::new();
    for (i, spec) in cfg.models.iter().enumerate() {
        let (model, log) = train_model(&ds, spec)?;
        let file = models_dir.join(format!("{i:02}-{}-{}.json", spec.family, spec.task));
        save_model(&model, &file)?;
        write_jsonl(log_path(&file), &log.epochs)?;
        let ev = evaluate(&model, &ds, &test)?;
        let applicable = ev.fully_applicable();
        rows.push(ExperimentRow {
            method: spec.family.to_string(),
            task: spec.task,
            model_file: Some(file),
            best_epoch: Some(log.best_epoch),
            dev: Some(log.best_dev_metric),
            test: ev.report.filter(|_| applicable).map(|r| r.overall),
            applicable,
        });
    }
    if cfg.baselines {
        let train_rows: Vec<ImageRecord> = ds.in_split(Split::Train).cloned().collect();
        // the aspect baseline needs every test noun in train
        let known: HashSet<&str> = train_rows.iter().map(|r| r.noun.as_str()).collect();
        let asp_rows: Vec<ImageRecord> = test
            .iter()
            .filter(|r| known.contains(r.noun.as_str()))
            .cloned()
            .collect();
        let (_, asp) = baseline_aspect(&train_rows, &asp_rows, cfg.baseline_seed)?;
        let (_, pol) = baseline_polarity(&test, cfg.baseline_seed)?;
        for (task, r) in [(Task::Aspect, asp), (Task::Polarity, pol)] {
            rows.push(ExperimentRow {
                method: "baseline".into(),
                task,
                model_file: None,
                best_epoch: None,
                dev: None,
                test: Some(r.overall),
                applicable: true,
            });
        }
    }
    write_json(&report_path, &rows)?;

    let mut t = Table::new(&["method", "task", "dev", "test"]);
    for r in &rows {
        t.row(vec![
            r.method.clone(),
            r.task.to_string(),
            r.dev.map_or("-".into(), fmt4),
            r.test.map_or("-".into(), fmt4),
        ]);
    }
    print!("{}", t.render());
    Ok(())
}
