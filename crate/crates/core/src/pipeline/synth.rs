//! Planted-structure synthetic data with a closed-form Bayes oracle.
//!
//! Every aspect `a` gets a center `c_a` and a unit direction `u_a`. The
//! embeddings of cell (noun `n`, aspect `a`, polarity `y ∈ {-1, +1}`) are drawn
//! from the spherical Gaussian
//!
//! ```text
//! N(c_a + y · f_n · (separation · noise / 2) · u_a,  noise² · I)
//! ```
//!
//! where `f_n = -1` for every other noun when `noun_flip` is set and `+1`
//! otherwise. The two polarity means of a cell are `separation` noise units
//! apart, so the per-cell Bayes accuracy is `Φ(separation / 2)`. With flipping,
//! a classifier that ignores the noun sees a mixture; when flipped and
//! unflipped nouns are equally represented it cannot beat chance.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Embedding, ImageRecord, Split};
use crate::error::{Error, Result};
use crate::lexicon::{AspectLexicon, Polarity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub dim: usize,
    pub nouns: Vec<String>,
    /// Uses the first `num_aspects` aspects of the lexicon.
    pub num_aspects: usize,
    /// Noun `i` gets aspects `i, i+1, …` (mod `num_aspects`).
    pub aspects_per_noun: usize,
    pub images_per_cell: usize,
    /// Distance between the two polarity means of a cell, in noise units.
    pub separation: f64,
    pub noise: f64,
    pub noun_flip: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            dim: 16,
            nouns: vec!["dog".into(), "cat".into()],
            num_aspects: 1,
            aspects_per_noun: 1,
            images_per_cell: 400,
            separation: 6.0,
            noise: 1.0,
            noun_flip: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCell {
    pub noun: String,
    pub aspect: String,
    pub bayes_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectCeiling {
    pub aspect: String,
    pub nouns: usize,
    pub flipped: usize,
    pub noun_blind_accuracy: f64,
}

/// Best achievable polarity accuracies under the generating distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub per_cell: Vec<OracleCell>,
    /// Polarity accuracy (nested mean) of the Bayes rule that knows the noun.
    pub per_noun_oracle: f64,
    pub per_aspect: Vec<AspectCeiling>,
    /// Polarity accuracy (nested mean) of the best rule that ignores the noun.
    pub noun_blind_ceiling: f64,
}

/// Standard normal CDF.
pub fn normal_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)
}

impl SynthConfig {
    pub fn validate(&self, lexicon: &AspectLexicon) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.nouns.is_empty() {
            return bad("at least one noun is required");
        }
        let mut seen = std::collections::HashSet::new();
        if !self.nouns.iter().all(|n| seen.insert(n)) {
            return bad("noun names must be unique");
        }
        if self.num_aspects == 0 || self.num_aspects > lexicon.len() {
            return bad("num_aspects must be between 1 and the lexicon size");
        }
        if self.aspects_per_noun == 0 || self.aspects_per_noun > self.num_aspects {
            return bad("aspects_per_noun must be between 1 and num_aspects");
        }
        if self.images_per_cell == 0 {
            return bad("images_per_cell must be positive");
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return bad("separation must be finite and non-negative");
        }
        if !(self.noise > 0.0 && self.noise.is_finite()) {
            return bad("noise must be finite and positive");
        }
        Ok(())
    }

    /// Aspect positions (0-based) assigned to noun `i`.
    pub fn aspects_of(&self, noun: usize) -> Vec<usize> {
        (0..self.aspects_per_noun)
            .map(|j| (noun + j) % self.num_aspects)
            .collect()
    }

    fn flip(&self, noun: usize) -> f64 {
        if self.noun_flip && noun % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn oracle(&self, lexicon: &AspectLexicon) -> OracleReport {
        let half = self.separation / 2.0;
        let cell_acc = normal_cdf(half);
        let mut per_cell = Vec::new();
        for (i, noun) in self.nouns.iter().enumerate() {
            for a in self.aspects_of(i) {
                per_cell.push(OracleCell {
                    noun: noun.clone(),
                    aspect: lexicon.aspects()[a].name.clone(),
                    bayes_accuracy: cell_acc,
                });
            }
        }
        let mut per_aspect = Vec::new();
        for a in 0..self.num_aspects {
            let members: Vec<usize> = (0..self.nouns.len())
                .filter(|&i| self.aspects_of(i).contains(&a))
                .collect();
            if members.is_empty() {
                continue;
            }
            let flipped = members.iter().filter(|&&i| self.flip(i) < 0.0).count();
            let plain = members.len() - flipped;
            // Projected on u_a the noun-blind likelihoods are mixtures of the
            // same two Gaussians; the majority orientation wins.
            let acc = if flipped == plain {
                0.5
            } else {
                let (maj, min) = (plain.max(flipped) as f64, plain.min(flipped) as f64);
                (maj * cell_acc + min * normal_cdf(-half)) / (maj + min)
            };
            per_aspect.push(AspectCeiling {
                aspect: lexicon.aspects()[a].name.clone(),
                nouns: members.len(),
                flipped,
                noun_blind_accuracy: acc,
            });
        }
        let noun_blind_ceiling = per_aspect
            .iter()
            .map(|c| c.noun_blind_accuracy)
            .sum::<f64>()
            / per_aspect.len() as f64;
        OracleReport {
            per_cell,
            per_noun_oracle: cell_acc,
            per_aspect,
            noun_blind_ceiling,
        }
    }
}

fn gaussian_vec<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Generates a balanced dataset over the default lexicon together with its
/// oracle report. Identical configs give identical datasets.
pub fn synth_generate(cfg: &SynthConfig) -> Result<(Dataset, OracleReport)> {
    let lexicon = AspectLexicon::default_table();
    cfg.validate(&lexicon)?;
    let d = cfg.dim;
    let mut structure = crate::seed::cell_rng(cfg.seed, &["structure"]);
    let mut centers = Vec::with_capacity(cfg.num_aspects);
    let mut directions = Vec::with_capacity(cfg.num_aspects);
    for _ in 0..cfg.num_aspects {
        let c = gaussian_vec(&mut structure, d);
        let c_norm = c.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        // aspect centers sit 2·separation noise units from the origin
        let scale = 2.0 * cfg.separation * cfg.noise / c_norm;
        centers.push(c.iter().map(|v| v * scale).collect::<Vec<f64>>());
        let u = gaussian_vec(&mut structure, d);
        let u_norm = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        directions.push(u.iter().map(|v| v / u_norm).collect::<Vec<f64>>());
    }

    let mut records = Vec::new();
    let mut embeddings = Vec::new();
    for (i, noun) in cfg.nouns.iter().enumerate() {
        for a in cfg.aspects_of(i) {
            let entry = &lexicon.aspects()[a];
            for polarity in Polarity::both() {
                let shift = polarity.as_f64() * cfg.flip(i) * cfg.separation * cfg.noise / 2.0;
                let mean: Vec<f64> = centers[a]
                    .iter()
                    .zip(&directions[a])
                    .map(|(c, u)| c + shift * u)
                    .collect();
                let side_tag = if polarity == Polarity::Left { "l" } else { "r" };
                let mut rng = crate::seed::cell_rng(cfg.seed, &[noun, &entry.name, side_tag]);
                let adjectives = entry.side(polarity);
                for k in 0..cfg.images_per_cell {
                    let id = format!("{noun}-{}-{side_tag}-{k:05}", entry.name);
                    let values = mean
                        .iter()
                        .map(|m| m + cfg.noise * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    records.push(ImageRecord {
                        id: id.clone(),
                        noun: noun.clone(),
                        aspect: entry.name.clone(),
                        polarity,
                        adjective: adjectives[k % adjectives.len()].clone(),
                        split: Split::Unassigned,
                    });
                    embeddings.push(Embedding { id, values });
                }
            }
        }
    }
    let oracle = cfg.oracle(&lexicon);
    let dataset = Dataset::new(lexicon, records, embeddings, d)?;
    Ok((dataset, oracle))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_separation_is_chance() {
        let cfg = SynthConfig {
            separation: 0.0,
            ..SynthConfig::default()
        };
        let o = cfg.oracle(&AspectLexicon::default_table());
        assert!(o.per_cell.iter().all(|c| c.bayes_accuracy == 0.5));
    }

    #[test]
    fn large_separation_approaches_one() {
        let cfg = SynthConfig {
            separation: 40.0,
            ..SynthConfig::default()
        };
        let o = cfg.oracle(&AspectLexicon::default_table());
        assert!(o.per_cell.iter().all(|c| c.bayes_accuracy > 1.0 - 1e-12));
    }

    #[test]
    fn mirrored_nouns_blind_ceiling_is_half() {
        let o = SynthConfig::default().oracle(&AspectLexicon::default_table());
        assert_eq!(o.noun_blind_ceiling, 0.5);
        // Φ(3) = 0.998650…
        assert!((o.per_noun_oracle - 0.998_650_101_968_369_9).abs() < 1e-12);
    }

    #[test]
    fn unbalanced_flips_leave_partial_information() {
        let cfg = SynthConfig {
            nouns: vec!["a".into(), "b".into(), "c".into()],
            ..SynthConfig::default()
        };
        let o = cfg.oracle(&AspectLexicon::default_table());
        let p = normal_cdf(3.0);
        let expected = (2.0 * p + (1.0 - p)) / 3.0;
        assert!((o.noun_blind_ceiling - expected).abs() < 1e-12);
    }

    #[test]
    fn generated_counts_and_reproducibility() {
        let cfg = SynthConfig {
            images_per_cell: 20,
            num_aspects: 3,
            aspects_per_noun: 2,
            nouns: vec!["dog".into(), "cat".into(), "tree".into()],
            ..SynthConfig::default()
        };
        let (d1, _) = synth_generate(&cfg).unwrap();
        let (d2, _) = synth_generate(&cfg).unwrap();
        assert_eq!(d1.len(), 3 * 2 * 2 * 20);
        assert_eq!(d1.records(), d2.records());
        for r in d1.records() {
            assert_eq!(d1.embedding(&r.id), d2.embedding(&r.id));
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = SynthConfig {
            images_per_cell: 0,
            ..SynthConfig::default()
        };
        assert!(synth_generate(&bad).is_err());
        let bad = SynthConfig {
            aspects_per_noun: 2,
            ..SynthConfig::default()
        };
        assert!(synth_generate(&bad).is_err());
        let bad = SynthConfig {
            separation: -1.0,
            ..SynthConfig::default()
        };
        assert!(synth_generate(&bad).is_err());
    }

    #[test]
    fn empirical_mean_gap_matches_separation() {
        let cfg = SynthConfig {
            images_per_cell: 2000,
            noun_flip: false,
            nouns: vec!["dog".into()],
            ..SynthConfig::default()
        };
        let (d, _) = synth_generate(&cfg).unwrap();
        let mean = |p: Polarity| {
            let rows: Vec<&[f64]> = d
                .records()
                .iter()
                .filter(|r| r.polarity == p)
                .map(|r| d.embedding(&r.id).unwrap())
                .collect();
            (0..cfg.dim)
                .map(|j| rows.iter().map(|v| v[j]).sum::<f64>() / rows.len() as f64)
                .collect::<Vec<f64>>()
        };
        let (l, r) = (mean(Polarity::Left), mean(Polarity::Right));
        let gap = l
            .iter()
            .zip(&r)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        // noise in the gap estimate ~ sqrt(2·dim/2000) ≈ 0.13
        assert!((gap - 6.0).abs() < 0.5, "{gap}");
    }
}
