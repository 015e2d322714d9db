//! Polarity balancing per noun-aspect combination.

use std::collections::{HashMap, HashSet};

use rand::seq::index::sample;

use super::compile::{
    compile_dataset, Compiled, Exclusion, NounRuleMode, RemovalEntry, TagRecord, Thresholds,
};
use crate::dataset::{noun_vocab, ImageRecord};
use crate::lexicon::{AspectLexicon, Polarity};

pub const RULE_MULTI_COMBO: &str = "multi_combo_image";
pub const RULE_BALANCE: &str = "balance";

/// Downsamples both polarities of every noun-aspect combination to the smaller
/// of the two counts, without replacement.
///
/// An image id that occurs in several combinations is first kept only in the
/// earliest one (nouns in first-appearance order, then aspect id); within that
/// combination its first record wins. Surviving records keep their input order.
pub fn balance(
    records: &[ImageRecord],
    lexicon: &AspectLexicon,
    seed: u64,
) -> (Vec<ImageRecord>, Vec<RemovalEntry>) {
    let mut log = Vec::new();
    let nouns = noun_vocab(records);
    let noun_rank: HashMap<&str, usize> = nouns
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let combo_rank = |r: &ImageRecord| {
        let aspect = lexicon.aspect_index(&r.aspect).unwrap_or(usize::MAX);
        (noun_rank[r.noun.as_str()], aspect)
    };

    // id -> index of the record that represents it
    let mut owner: HashMap<&str, usize> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        match owner.get(r.id.as_str()) {
            Some(&j) if combo_rank(&records[j]) <= combo_rank(r) => {}
            _ => {
                owner.insert(&r.id, i);
            }
        }
    }
    let mut dropped_multi: Vec<(String, usize)> = Vec::new();
    let mut cells: Vec<((&str, &str), [Vec<usize>; 2])> = Vec::new();
    let mut cell_pos: HashMap<(&str, &str), usize> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        if owner[r.id.as_str()] != i {
            let target = format!("{}/{}", r.noun, r.aspect);
            match dropped_multi.iter_mut().find(|(t, _)| *t == target) {
                Some((_, c)) => *c += 1,
                None => dropped_multi.push((target, 1)),
            }
            continue;
        }
        let key = (r.noun.as_str(), r.aspect.as_str());
        let pos = *cell_pos.entry(key).or_insert_with(|| {
            cells.push((key, Default::default()));
            cells.len() - 1
        });
        cells[pos].1[usize::from(r.polarity == Polarity::Right)].push(i);
    }
    for (target, count) in dropped_multi {
        log.push(RemovalEntry {
            rule: RULE_MULTI_COMBO.into(),
            target,
            count,
        });
    }

    let mut keep: HashSet<usize> = HashSet::new();
    for ((noun, aspect), sides) in &cells {
        let m = sides[0].len().min(sides[1].len());
        let mut removed = 0;
        for (side, idx) in sides.iter().enumerate() {
            if idx.len() == m {
                keep.extend(idx);
                continue;
            }
            let tag = if side == 0 { "left" } else { "right" };
            let mut rng = crate::seed::cell_rng(seed, &[noun, aspect, tag]);
            let mut picked: Vec<usize> = sample(&mut rng, idx.len(), m).into_vec();
            picked.sort_unstable();
            keep.extend(picked.into_iter().map(|k| idx[k]));
            removed += idx.len() - m;
        }
        if removed > 0 {
            log.push(RemovalEntry {
                rule: RULE_BALANCE.into(),
                target: format!("{noun}/{aspect}"),
                count: removed,
            });
        }
    }
    let out = records
        .iter()
        .enumerate()
        .filter(|(i, _)| keep.contains(i))
        .map(|(_, r)| r.clone())
        .collect();
    (out, log)
}

/// Alternates compilation and balancing until a pass changes nothing, so the
/// result is itself a fixed point of both.
pub fn compile_and_balance(
    records: &[TagRecord],
    lexicon: &AspectLexicon,
    exclusions: &[Exclusion],
    mode: NounRuleMode,
    thresholds: &Thresholds,
    seed: u64,
) -> Compiled {
    let mut input: Vec<TagRecord> = records.to_vec();
    let mut log = Vec::new();
    loop {
        let compiled = compile_dataset(&input, lexicon, exclusions, mode, thresholds);
        log.extend(compiled.log);
        let (balanced, blog) = balance(&compiled.records, lexicon, seed);
        log.extend(blog);
        let next: Vec<TagRecord> = balanced.iter().map(TagRecord::from).collect();
        if next == input {
            return Compiled {
                records: balanced,
                log,
            };
        }
        input = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Split;

    fn recs(
        noun: &str,
        aspect: &str,
        adj: &str,
        pol: Polarity,
        n: usize,
        prefix: &str,
    ) -> Vec<ImageRecord> {
        (0..n)
            .map(|i| ImageRecord {
                id: format!("{prefix}{i}"),
                noun: noun.into(),
                aspect: aspect.into(),
                polarity: pol,
                adjective: adj.into(),
                split: Split::Unassigned,
            })
            .collect()
    }

    fn counts(records: &[ImageRecord], noun: &str, aspect: &str) -> (usize, usize) {
        let c = |p| {
            records
                .iter()
                .filter(|r| r.noun == noun && r.aspect == aspect && r.polarity == p)
                .count()
        };
        (c(Polarity::Left), c(Polarity::Right))
    }

    #[test]
    fn min_rule() {
        let lex = AspectLexicon::default_table();
        let mut input = recs("dog", "age", "young", Polarity::Left, 150, "y");
        input.extend(recs("dog", "age", "old", Polarity::Right, 100, "o"));
        let (out, log) = balance(&input, &lex, 1);
        assert_eq!(counts(&out, "dog", "age"), (100, 100));
        assert_eq!(log[0].count, 50);
    }

    #[test]
    fn balanced_input_is_unchanged() {
        let lex = AspectLexicon::default_table();
        let mut input = recs("dog", "age", "young", Polarity::Left, 40, "y");
        input.extend(recs("dog", "age", "old", Polarity::Right, 40, "o"));
        let (out, log) = balance(&input, &lex, 1);
        assert_eq!(out, input);
        assert!(log.is_empty());
    }

    #[test]
    fn multi_combo_ids_go_to_earliest_combo() {
        let lex = AspectLexicon::default_table();
        let mut input = recs("dog", "age", "young", Polarity::Left, 3, "x");
        input.extend(recs("dog", "age", "old", Polarity::Right, 3, "o"));
        // x0 also tagged "big dog" (size, aspect 2 < age 3) and "old cat"
        input.extend(recs("dog", "size", "big", Polarity::Right, 1, "x"));
        input.extend(recs("cat", "age", "old", Polarity::Right, 1, "x"));
        input.extend(recs("dog", "size", "small", Polarity::Left, 2, "s"));
        let (out, _) = balance(&input, &lex, 5);
        let ids: HashSet<&str> = out.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids.len(), out.len());
        let x0 = out.iter().find(|r| r.id == "x0").unwrap();
        assert_eq!(x0.aspect, "size");
        assert_eq!(counts(&out, "dog", "size"), (1, 1));
        assert_eq!(counts(&out, "dog", "age"), (2, 2));
    }

    #[test]
    fn seeded_and_reproducible() {
        let lex = AspectLexicon::default_table();
        let mut input = recs("dog", "age", "young", Polarity::Left, 300, "y");
        input.extend(recs("dog", "age", "old", Polarity::Right, 120, "o"));
        assert_eq!(balance(&input, &lex, 9).0, balance(&input, &lex, 9).0);
        assert_ne!(balance(&input, &lex, 9).0, balance(&input, &lex, 10).0);
    }
}
