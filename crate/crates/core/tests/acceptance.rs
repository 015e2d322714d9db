//! Acceptance checks. Runs without the libtest harness so every criterion
//! prints exactly one PASS / FAIL line, even when all of them pass.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use fap_core::condition::{tensor_condition_forward, ConcatMlpParams, TensorCondParams};
use fap_core::metrics::{
    aspect_f1, aspect_f1_report, baseline_aspect, baseline_polarity, polarity_accuracy,
    PredictionRow, PredictionSet,
};
use fap_core::models::{evaluate, load_model, save_model, train, Family, ModelSpec, Network, Task};
use fap_core::ndmath::{finite_diff_check, logistic_loss_pm1, one_hot, softmax_xent, ParamBlock};
use fap_core::pipeline::{
    balance, compile_and_balance, compile_dataset, make_split, synth_generate, NounRuleMode,
    SplitPlan, SynthConfig, TagRecord, Thresholds,
};
use fap_core::seed::rng;
use fap_core::{AspectLexicon, Error, ImageRecord, Polarity, Split};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    check(elapsed.as_secs() < limit_secs, || {
        format!("took {elapsed:.2?}, limit {limit_secs} s")
    })
}

fn random_vec<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn randomize<P: ParamBlock, R: Rng>(p: &mut P, rng: &mut R, scale: f64) {
    let flat = random_vec(rng, p.num_params(), scale);
    p.assign_flat(&flat);
}

/// Loss of one example for `net` with parameters `theta`, plus its gradient.
fn example_loss<N: Network>(
    net: &N,
    theta: &[f64],
    x: &[f64],
    noun: usize,
    task: Task,
    label: usize,
    pol: Polarity,
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
    Ok((loss, g.flatten()))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in 0..20u64 {
        let mut r = rng(seed);
        let (a, d, n, h) = (
            r.random_range(2..=4),
            r.random_range(2..=6),
            r.random_range(1..=4),
            r.random_range(2..=5),
        );
        let x = random_vec(&mut r, d, 1.0);
        let noun = r.random_range(0..n);
        let label = r.random_range(0..a);
        let pol = if r.random_bool(0.5) {
            Polarity::Left
        } else {
            Polarity::Right
        };

        let mut tc = TensorCondParams::zeros(a, d, n);
        randomize(&mut tc, &mut r, 0.5);
        let mut mlp = ConcatMlpParams::zeros(a, d, n, h);
        randomize(&mut mlp, &mut r, 0.5);
        for task in [Task::Aspect, Task::Polarity] {
            let rep = finite_diff_check(
                |t| example_loss(&tc, t, &x, noun, task, label, pol),
                &tc.flatten(),
                1e-5,
            )
            .map_err(|e| e.to_string())?;
            worst = worst.max(rep.max_rel_error);
            let rep = finite_diff_check(
                |t| example_loss(&mlp, t, &x, noun, task, label, pol),
                &mlp.flatten(),
                1e-5,
            )
            .map_err(|e| e.to_string())?;
            worst = worst.max(rep.max_rel_error);
            checked += 2;
        }
    }
    check(worst < 1e-4, || format!("max relative error {worst:e}"))?;
    within(start.elapsed(), 30)?;
    Ok(format!("{checked} checks, max relative error {worst:.2e}"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let mut r = rng(1000 + seed);
        let (a, d, n) = (
            r.random_range(1..=6),
            r.random_range(1..=64),
            r.random_range(1..=13),
        );
        let mut p = TensorCondParams::zeros(a, d, n);
        randomize(&mut p, &mut r, 1.0);
        let x = random_vec(&mut r, d, 1.0);
        let k = r.random_range(0..n);
        let (pre, out) =
            tensor_condition_forward(&p, &x, &one_hot(n, k)).map_err(|e| e.to_string())?;
        // direct evaluation of the selected slice
        for i in 0..a {
            let mut v = p.b0[i] + p.b.row(i)[k];
            for j in 0..d {
                v += (p.w0.row(i)[j] + p.w.get(i, j, k)) * x[j];
            }
            worst = worst.max((v - pre[i]).abs()).max((v.tanh() - out[i]).abs());
        }
        let fast = p.pre_activation(&x, k).map_err(|e| e.to_string())?;
        for (u, v) in fast.iter().zip(&pre) {
            worst = worst.max((u - v).abs());
        }
    }
    check(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    within(start.elapsed(), 5)?;
    Ok(format!("100 instances, max deviation {worst:.2e}"))
}

fn brute_f1(rows: &[PredictionRow]) -> f64 {
    let mut nouns: Vec<&str> = rows.iter().map(|r| r.noun.as_str()).collect();
    nouns.sort();
    nouns.dedup();
    let mut total = 0.0;
    for noun in &nouns {
        let mine: Vec<&PredictionRow> = rows.iter().filter(|r| r.noun == *noun).collect();
        let mut aspects: Vec<&str> = mine.iter().map(|r| r.aspect_gold.as_str()).collect();
        aspects.sort();
        aspects.dedup();
        let mut s = 0.0;
        for a in &aspects {
            let tp = mine
                .iter()
                .filter(|r| r.aspect_gold == *a && r.aspect_pred.as_deref() == Some(a))
                .count() as f64;
            let fp = mine
                .iter()
                .filter(|r| r.aspect_gold != *a && r.aspect_pred.as_deref() == Some(a))
                .count() as f64;
            let fn_ = mine
                .iter()
                .filter(|r| r.aspect_gold == *a && r.aspect_pred.as_deref() != Some(a))
                .count() as f64;
            if 2.0 * tp + fp + fn_ > 0.0 {
                s += 2.0 * tp / (2.0 * tp + fp + fn_);
            }
        }
        total += s / aspects.len() as f64;
    }
    total / nouns.len() as f64
}

fn brute_acc(rows: &[PredictionRow]) -> f64 {
    let mut cells: BTreeMap<&str, BTreeMap<&str, (f64, f64)>> = BTreeMap::new();
    for r in rows {
        let c = cells
            .entry(&r.aspect_gold)
            .or_default()
            .entry(&r.noun)
            .or_insert((0.0, 0.0));
        c.1 += 1.0;
        if r.polarity_pred == Some(r.polarity_gold) {
            c.0 += 1.0;
        }
    }
    let per_aspect: Vec<f64> = cells
        .values()
        .map(|nouns| nouns.values().map(|(ok, n)| ok / n).sum::<f64>() / nouns.len() as f64)
        .collect();
    per_aspect.iter().sum::<f64>() / per_aspect.len() as f64
}

fn random_set<R: Rng>(r: &mut R, case: usize) -> PredictionSet {
    const NOUNS: [&str; 4] = ["dog", "cat", "man", "tree"];
    const ASPECTS: [&str; 4] = ["age", "size", "evaluation", "rareness"];
    // the first cases are single rows / single cells
    let rows = if case < 10 {
        1 + case % 3
    } else {
        r.random_range(1..60)
    };
    let (nn, na) = if case < 20 {
        (1, 1)
    } else {
        (r.random_range(1..=4), r.random_range(1..=4))
    };
    let set = (0..rows)
        .map(|i| {
            let gold = ASPECTS[r.random_range(0..na)].to_string();
            PredictionRow {
                id: format!("r{i}"),
                noun: NOUNS[r.random_range(0..nn)].to_string(),
                aspect_pred: Some(ASPECTS[r.random_range(0..4)].to_string()),
                aspect_gold: gold,
                polarity_gold: if r.random_bool(0.5) {
                    Polarity::Left
                } else {
                    Polarity::Right
                },
                polarity_pred: Some(if r.random_bool(0.5) {
                    Polarity::Left
                } else {
                    Polarity::Right
                }),
            }
        })
        .collect();
    PredictionSet::new(set)
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut r = rng(33);
    let mut worst: f64 = 0.0;
    let mut zero_f1_nouns = 0;
    for case in 0..200 {
        let set = random_set(&mut r, case);
        let f = aspect_f1(&set).map_err(|e| e.to_string())?;
        worst = worst.max((f - brute_f1(&set.rows)).abs());
        let report = aspect_f1_report(&set).map_err(|e| e.to_string())?;
        zero_f1_nouns += report.per_cell.iter().filter(|c| c.value == 0.0).count();
    }
    for case in 0..200 {
        let set = random_set(&mut r, case);
        let a = polarity_accuracy(&set).map_err(|e| e.to_string())?;
        worst = worst.max((a - brute_acc(&set.rows)).abs());
    }
    check(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    check(zero_f1_nouns > 0, || {
        "no zero-denominator case was generated".into()
    })?;
    check(
        matches!(
            aspect_f1(&PredictionSet::default()),
            Err(Error::EmptyPredictionSet)
        ),
        || "empty set accepted".into(),
    )?;
    within(start.elapsed(), 10)?;
    Ok(format!(
        "400 sets, max deviation {worst:.2e}, {zero_f1_nouns} zero-F1 cells"
    ))
}

fn row(noun: &str, aspect: &str, pred_aspect: &str, correct: bool) -> PredictionRow {
    PredictionRow {
        id: String::new(),
        noun: noun.into(),
        aspect_gold: aspect.into(),
        aspect_pred: Some(pred_aspect.into()),
        polarity_gold: Polarity::Right,
        polarity_pred: Some(if correct {
            Polarity::Right
        } else {
            Polarity::Left
        }),
    }
}

fn criterion_4() -> Outcome {
    let mut rows = Vec::new();
    rows.extend((0..10).map(|_| row("dog", "age", "age", true)));
    rows.extend((0..1000).map(|i| row("cat", "age", "age", i % 2 == 0)));
    rows.extend((0..10).map(|i| row("tree", "size", "size", i < 8)));
    let acc = polarity_accuracy(&PredictionSet::new(rows)).map_err(|e| e.to_string())?;
    check(acc == 0.775, || format!("acc_pol = {acc}, expected 0.775"))?;

    let mut rows = Vec::new();
    rows.extend((0..5).map(|_| row("n", "age", "age", true)));
    rows.extend((0..5).map(|_| row("n", "size", "age", true)));
    let f1 = aspect_f1(&PredictionSet::new(rows)).map_err(|e| e.to_string())?;
    check(f1 == 1.0 / 3.0, || {
        format!("aspect F1 = {f1}, expected 1/3")
    })?;
    Ok(format!("acc_pol = {acc}, noun F1 = {f1:.6}"))
}

fn tags(noun: &str, adjective: &str, n: usize) -> Vec<TagRecord> {
    (0..n)
        .map(|i| TagRecord {
            id: format!("{noun}-{adjective}-{i}"),
            noun: noun.into(),
            adjective: adjective.into(),
        })
        .collect()
}

fn combo_counts(records: &[ImageRecord]) -> BTreeMap<(String, String), usize> {
    let mut m = BTreeMap::new();
    for r in records {
        *m.entry((r.noun.clone(), r.adjective.clone())).or_insert(0) += 1;
    }
    m
}

fn criterion_5() -> Outcome {
    let lex = AspectLexicon::default_table();
    let mut corpus = Vec::new();
    // dog: two full aspects plus a 19-image combination
    corpus.extend(tags("dog", "young", 300));
    corpus.extend(tags("dog", "old", 350));
    corpus.extend(tags("dog", "small", 300));
    corpus.extend(tags("dog", "big", 300));
    corpus.extend(tags("dog", "happy", 19));
    // cat: size has a 99-image side; cat keeps 600 images on one aspect
    corpus.extend(tags("cat", "young", 300));
    corpus.extend(tags("cat", "old", 300));
    corpus.extend(tags("cat", "small", 99));
    corpus.extend(tags("cat", "big", 300));
    // man: 400 images on one aspect
    corpus.extend(tags("man", "good", 200));
    corpus.extend(tags("man", "bad", 200));
    // boy: activity has 200 images per polarity over the whole corpus
    corpus.extend(tags("boy", "young", 300));
    corpus.extend(tags("boy", "old", 300));
    corpus.extend(tags("boy", "small", 250));
    corpus.extend(tags("boy", "big", 250));
    corpus.extend(tags("boy", "active", 200));
    corpus.extend(tags("boy", "lazy", 200));

    let th = Thresholds::default();
    let compiled = compile_dataset(&corpus, &lex, &[], NounRuleMode::And, &th);
    let expected: BTreeMap<(String, String), usize> = [
        ("dog", "young", 300),
        ("dog", "old", 350),
        ("dog", "small", 300),
        ("dog", "big", 300),
        ("cat", "young", 300),
        ("cat", "old", 300),
        ("boy", "young", 300),
        ("boy", "old", 300),
        ("boy", "small", 250),
        ("boy", "big", 250),
    ]
    .into_iter()
    .map(|(n, a, c)| ((n.to_string(), a.to_string()), c))
    .collect();
    let got = combo_counts(&compiled.records);
    check(got == expected, || {
        format!("surviving combinations {got:?}")
    })?;
    let rules: Vec<&str> = compiled.log.iter().map(|e| e.rule.as_str()).collect();
    for rule in [
        "combo_images",
        "noun_aspect_polarity_images",
        "noun_images_aspects",
        "aspect_polarity_images",
    ] {
        check(rules.contains(&rule), || format!("rule {rule} never fired"))?;
    }

    let (balanced, _) = balance(&compiled.records, &lex, 9);
    let mut cells: BTreeMap<(String, String), [usize; 2]> = BTreeMap::new();
    for r in &balanced {
        cells.entry((r.noun.clone(), r.aspect.clone())).or_default()
            [usize::from(r.polarity == Polarity::Right)] += 1;
    }
    check(cells.values().all(|c| c[0] == c[1]), || {
        format!("unbalanced cells {cells:?}")
    })?;
    check(
        cells[&("dog".to_string(), "age".to_string())] == [300, 300],
        || "dog/age not cut to 300 per side".into(),
    )?;

    let full = compile_and_balance(&corpus, &lex, &[], NounRuleMode::And, &th, 9);
    let again_in: Vec<TagRecord> = full.records.iter().map(TagRecord::from).collect();
    let again = compile_and_balance(&again_in, &lex, &[], NounRuleMode::And, &th, 9);
    check(again.records == full.records, || {
        "rerun changed the records".into()
    })?;
    check(again.log.is_empty(), || {
        format!("rerun removed records: {:?}", again.log)
    })?;
    Ok(format!(
        "{} records survive compilation, {} after balancing; rerun is a fixed point",
        compiled.records.len(),
        full.records.len()
    ))
}

fn image(id: String, noun: &str, aspect: &str, polarity: Polarity) -> ImageRecord {
    let lex = AspectLexicon::default_table();
    let adjective = lex.aspect_by_name(aspect).unwrap().side(polarity)[0].clone();
    ImageRecord {
        id,
        noun: noun.into(),
        aspect: aspect.into(),
        polarity,
        adjective,
        split: Split::Unassigned,
    }
}

fn criterion_6() -> Outcome {
    let ten: Vec<ImageRecord> = (0..10)
        .map(|i| image(format!("x{i}"), "dog", "age", Polarity::Left))
        .collect();
    let (out, _) = make_split(&ten, &SplitPlan::standard(4)).map_err(|e| e.to_string())?;
    let count = |s| out.iter().filter(|r| r.split == s).count();
    let standard = (count(Split::Train), count(Split::Dev), count(Split::Test));
    check(standard == (5, 2, 3), || {
        format!("standard split {standard:?}")
    })?;

    let nouns = ["man", "boy", "cat", "dog", "building", "hotel", "city"];
    let aspects = ["evaluation", "happiness", "age", "size"];
    let mut records = Vec::new();
    let mut r = rng(66);
    for noun in nouns {
        for aspect in aspects {
            for pol in Polarity::both() {
                let n = r.random_range(5..60);
                records.extend(
                    (0..n).map(|i| image(format!("{noun}-{aspect}-{pol}-{i}"), noun, aspect, pol)),
                );
            }
        }
    }
    let plan = SplitPlan::zeroshot(SplitPlan::default_holdouts(), 12);
    let (out, cells) = make_split(&records, &plan).map_err(|e| e.to_string())?;
    let held = |r: &ImageRecord| {
        plan.holdouts
            .iter()
            .any(|(n, a)| *n == r.noun && *a == r.aspect)
    };
    let held_total = out.iter().filter(|r| held(r)).count();
    let held_test = out
        .iter()
        .filter(|r| held(r) && r.split == Split::Test)
        .count();
    check(held_total > 0 && held_test == held_total, || {
        format!("{held_test} of {held_total} holdout records in test")
    })?;
    check(
        out.iter()
            .filter(|r| !held(r))
            .all(|r| r.split != Split::Test),
        || "non-holdout record in test".into(),
    )?;
    let mut remaining = 0;
    for c in &cells {
        if plan
            .holdouts
            .iter()
            .any(|(n, a)| *n == c.noun && *a == c.aspect)
        {
            continue;
        }
        remaining += 1;
        let n = (c.train + c.dev) as f64;
        check((c.train as f64 - 0.7 * n).abs() <= 1.0, || {
            format!("cell {}/{}: {} train of {n}", c.noun, c.aspect, c.train)
        })?;
    }
    Ok(format!(
        "5/2/3 standard; {held_total} holdout records all in test; 70/30 within one record on {remaining} cells"
    ))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let cfg = SynthConfig::default();
    let (ds, oracle) = synth_generate(&cfg).map_err(|e| e.to_string())?;
    check(
        oracle.per_cell.iter().all(|c| c.bayes_accuracy >= 0.99),
        || format!("oracle cells {:?}", oracle.per_cell),
    )?;
    check(oracle.noun_blind_ceiling == 0.5, || {
        format!("noun-blind ceiling {}", oracle.noun_blind_ceiling)
    })?;
    let (records, _) =
        make_split(ds.records(), &SplitPlan::standard(7)).map_err(|e| e.to_string())?;
    let ds = ds.with_records(records).map_err(|e| e.to_string())?;
    let test: Vec<ImageRecord> = ds.in_split(Split::Test).cloned().collect();
    let mut acc = BTreeMap::new();
    for family in [
        Family::LrNounAgnostic,
        Family::TensorCond,
        Family::ConcatMlp,
    ] {
        let spec = ModelSpec::new(family, Task::Polarity, 3);
        let (model, _) = train(&ds, &spec).map_err(|e| e.to_string())?;
        let ev = evaluate(&model, &ds, &test).map_err(|e| e.to_string())?;
        let v = ev.report.ok_or("no test rows scored")?.overall;
        acc.insert(family.as_str(), v);
    }
    check(acc["lr_noun_agnostic"] <= 0.60, || format!("{acc:?}"))?;
    check(
        acc["tensor_cond"] >= 0.90 && acc["concat_mlp"] >= 0.90,
        || format!("{acc:?}"),
    )?;
    within(start.elapsed(), 120)?;
    Ok(format!(
        "agnostic {:.3}, tensor_cond {:.3}, concat_mlp {:.3}, oracle {:.4}, ceiling {}",
        acc["lr_noun_agnostic"],
        acc["tensor_cond"],
        acc["concat_mlp"],
        oracle.per_noun_oracle,
        oracle.noun_blind_ceiling
    ))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let cfg = SynthConfig {
        nouns: ["dog", "cat", "man", "boy"].map(String::from).to_vec(),
        num_aspects: 2,
        aspects_per_noun: 2,
        images_per_cell: 200,
        noun_flip: false,
        ..SynthConfig::default()
    };
    let (ds, _) = synth_generate(&cfg).map_err(|e| e.to_string())?;
    let holdouts = vec![
        ("dog".to_string(), "size".to_string()),
        ("man".to_string(), "evaluation".to_string()),
    ];
    let (records, _) = make_split(ds.records(), &SplitPlan::zeroshot(holdouts.clone(), 5))
        .map_err(|e| e.to_string())?;
    let ds = ds.with_records(records).map_err(|e| e.to_string())?;
    let test: Vec<ImageRecord> = ds.in_split(Split::Test).cloned().collect();

    let spec = ModelSpec::new(Family::LrNounSpecific, Task::Polarity, 3);
    let (specific, _) = train(&ds, &spec).map_err(|e| e.to_string())?;
    for r in &test {
        let x = ds.embedding(&r.id).unwrap();
        let e = specific.predict_polarity(x, &r.noun, &r.aspect);
        check(
            matches!(e, Err(Error::UntrainableCombination { .. })),
            || format!("lr_noun_specific answered for {}/{}", r.noun, r.aspect),
        )?;
    }
    let mut parts = vec!["lr_noun_specific untrainable".to_string()];
    for family in [
        Family::TensorCond,
        Family::ConcatMlp,
        Family::LrNounAgnostic,
    ] {
        let spec = ModelSpec::new(family, Task::Polarity, 3);
        let (model, _) = train(&ds, &spec).map_err(|e| e.to_string())?;
        let ev = evaluate(&model, &ds, &test).map_err(|e| e.to_string())?;
        check(ev.skipped_rows == 0, || {
            format!("{family} skipped held-out rows")
        })?;
        let v = ev.report.ok_or("no test rows scored")?.overall;
        check(v > 0.5, || format!("{family} held-out accuracy {v}"))?;
        parts.push(format!("{family} {v:.3}"));
    }
    within(start.elapsed(), 120)?;
    Ok(parts.join(", "))
}

fn criterion_9() -> Outcome {
    let mut rows = Vec::new();
    for (noun, aspect) in [
        ("dog", "age"),
        ("cat", "size"),
        ("man", "age"),
        ("tree", "size"),
    ] {
        for pol in Polarity::both() {
            rows.extend((0..1250).map(|i| image(format!("{noun}-{pol}-{i}"), noun, aspect, pol)));
        }
    }
    let (_, report) = baseline_polarity(&rows, 21).map_err(|e| e.to_string())?;
    check((report.overall - 0.5).abs() <= 0.02, || {
        format!("baseline polarity {}", report.overall)
    })?;

    let train_rows: Vec<ImageRecord> = (0..20)
        .map(|i| image(format!("t{i}"), "cat", "age", Polarity::both()[i % 2]))
        .collect();
    let eval_rows: Vec<ImageRecord> = (0..30)
        .map(|i| image(format!("e{i}"), "cat", "age", Polarity::both()[i % 2]))
        .collect();
    let (_, asp) = baseline_aspect(&train_rows, &eval_rows, 5).map_err(|e| e.to_string())?;
    let cat = asp
        .per_noun
        .iter()
        .find(|g| g.name == "cat")
        .ok_or("no cat entry")?;
    check(cat.value == 1.0, || {
        format!("single-aspect noun F1 {}", cat.value)
    })?;
    Ok(format!(
        "random polarity {:.4} on {} rows; single-aspect noun F1 {}",
        report.overall,
        rows.len(),
        cat.value
    ))
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = SynthConfig {
        nouns: ["dog", "cat", "man"].map(String::from).to_vec(),
        num_aspects: 2,
        aspects_per_noun: 2,
        images_per_cell: 30,
        ..SynthConfig::default()
    };
    let (ds, _) = synth_generate(&cfg).map_err(|e| e.to_string())?;
    let (records, _) =
        make_split(ds.records(), &SplitPlan::standard(2)).map_err(|e| e.to_string())?;
    let ds = ds.with_records(records).map_err(|e| e.to_string())?;
    let test: Vec<ImageRecord> = ds.in_split(Split::Test).cloned().collect();
    let mut r = rng(10);
    let inputs: Vec<(Vec<f64>, usize)> = (0..100)
        .map(|_| {
            (
                random_vec(&mut r, cfg.dim, 3.0),
                r.random_range(0..cfg.nouns.len()),
            )
        })
        .collect();
    let mut checked = 0;
    for family in Family::ALL {
        for task in [Task::Aspect, Task::Polarity] {
            let mut spec = ModelSpec::new(family, task, 17);
            spec.epochs = 5;
            let mut bytes = Vec::new();
            let mut reports = Vec::new();
            for k in 0..2 {
                let (model, log) = train(&ds, &spec).map_err(|e| e.to_string())?;
                let path = dir.path().join(format!("{family}-{task}-{k}.json"));
                save_model(&model, &path).map_err(|e| e.to_string())?;
                bytes.push(std::fs::read(&path).map_err(|e| e.to_string())?);
                let ev = evaluate(&model, &ds, &test).map_err(|e| e.to_string())?;
                reports.push(serde_json::to_string(&(ev, log)).map_err(|e| e.to_string())?);
            }
            check(bytes[0] == bytes[1], || {
                format!("{family}/{task}: model files differ")
            })?;
            check(reports[0] == reports[1], || {
                format!("{family}/{task}: reports differ")
            })?;

            let path = dir.path().join(format!("{family}-{task}-0.json"));
            let (original, _) = train(&ds, &spec).map_err(|e| e.to_string())?;
            let loaded = load_model(&path).map_err(|e| e.to_string())?;
            check(loaded == original, || {
                format!("{family}/{task}: loaded model differs")
            })?;
            for (x, k) in &inputs {
                let noun = &cfg.nouns[*k];
                match task {
                    Task::Aspect => {
                        let a = original
                            .predict_aspect(x, noun)
                            .map_err(|e| e.to_string())?;
                        let b = loaded.predict_aspect(x, noun).map_err(|e| e.to_string())?;
                        check(a == b, || format!("{family}/{task}: predictions differ"))?;
                    }
                    Task::Polarity => {
                        let aspect = &original.coverage.iter().find(|(n, _)| n == noun).unwrap().1;
                        let a = original
                            .predict_polarity(x, noun, aspect)
                            .map_err(|e| e.to_string())?;
                        let b = loaded
                            .predict_polarity(x, noun, aspect)
                            .map_err(|e| e.to_string())?;
                        check(a == b, || format!("{family}/{task}: predictions differ"))?;
                    }
                }
                checked += 1;
            }
            let resaved = dir.path().join("resaved.json");
            save_model(&loaded, &resaved).map_err(|e| e.to_string())?;
            check(
                std::fs::read(&resaved).map_err(|e| e.to_string())? == bytes[0],
                || format!("{family}/{task}: re-saved file differs"),
            )?;
        }
    }
    Ok(format!(
        "10 family/task pairs byte-identical; {checked} round-trip predictions equal"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("gradient correctness", criterion_1),
        ("selection equivalence", criterion_2),
        ("metric oracle equivalence", criterion_3),
        ("nested-mean semantics", criterion_4),
        ("pipeline rules", criterion_5),
        ("split protocol", criterion_6),
        ("conditioning discriminates", criterion_7),
        ("0-shot capability split", criterion_8),
        ("baseline sanity", criterion_9),
        ("determinism and round-trip", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({secs:.2} s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} ({secs:.2} s): {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
