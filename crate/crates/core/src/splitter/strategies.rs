use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{derive_seed, distribution_distance, morpheme_distribution, Ratio, SplitManifest, Stage, Strategy};
use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Default cap on swap evaluations for adversarial search.
pub const DEFAULT_SWAP_BUDGET: u64 = 50_000;

/// Default absolute tolerance on the share of the smaller side for heuristic splits.
pub const DEFAULT_HEURISTIC_TOLERANCE: f64 = 0.02;

/// Accepted swaps must raise the distance by more than this.
const IMPROVEMENT_EPS: f64 = 1e-12;

fn check_parent(corpus: &Corpus, parent: &[usize], ratio: Ratio) -> Result<usize> {
    let n = parent.len();
    if n < 2 {
        return Err(Error::Split(format!("need at least 2 words, got {n}")));
    }
    if let Some(&bad) = parent.iter().find(|&&i| i >= corpus.len()) {
        return Err(Error::Split(format!("index {bad} outside corpus of {}", corpus.len())));
    }
    let nb = ratio.size_b(n);
    if nb == 0 || nb == n {
        return Err(Error::Split(format!(
            "ratio {ratio} leaves an empty side for {n} words"
        )));
    }
    Ok(nb)
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

fn tv_between(corpus: &Corpus, a: &[usize], b: &[usize]) -> Result<f64> {
    Ok(distribution_distance(
        &morpheme_distribution(corpus, a)?,
        &morpheme_distribution(corpus, b)?,
    ))
}

/// Uniform seeded partition of `parent`: shuffle, then the first
/// `ratio.size_b(n)` indices form side `b`.
pub fn random_split(corpus: &Corpus, parent: &[usize], ratio: Ratio, seed: u64) -> Result<SplitManifest> {
    let nb = check_parent(corpus, parent, ratio)?;
    let mut order = sorted(parent.to_vec());
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let b = sorted(order[..nb].to_vec());
    let a = sorted(order[nb..].to_vec());
    let achieved_distance = tv_between(corpus, &a, &b)?;
    Ok(SplitManifest {
        strategy: Strategy::Random,
        stage: Stage::ResidualSplit,
        seed,
        indices_a: a,
        indices_b: b,
        target_ratio: ratio,
        achieved_distance,
        budget_used: 0,
        threshold: None,
    })
}

/// Per-word morpheme multiset as sorted `(type id, count)` pairs.
type Signature = Vec<(u32, i64)>;

struct Counts {
    a: Vec<i64>,
    b: Vec<i64>,
    total_a: i64,
    total_b: i64,
}

impl Counts {
    fn distance(&self) -> f64 {
        let (ta, tb) = (self.total_a as f64, self.total_b as f64);
        let sum: f64 = self
            .a
            .iter()
            .zip(&self.b)
            .map(|(&x, &y)| (x as f64 / ta - y as f64 / tb).abs())
            .sum();
        0.5 * sum
    }

    fn apply(&mut self, from_a: &Signature, from_b: &Signature) {
        for &(m, c) in from_a {
            self.a[m as usize] -= c;
            self.b[m as usize] += c;
        }
        for &(m, c) in from_b {
            self.b[m as usize] -= c;
            self.a[m as usize] += c;
        }
        let (sa, sb) = (weight(from_a), weight(from_b));
        self.total_a += sb - sa;
        self.total_b += sa - sb;
    }

    /// Distance after swapping, touching only the two words' morphemes.
    /// Only valid when both words carry the same number of morphemes.
    fn distance_after_equal_weight_swap(&self, current: f64, x: &Signature, y: &Signature) -> f64 {
        let (ta, tb) = (self.total_a as f64, self.total_b as f64);
        let term = |ca: i64, cb: i64| (ca as f64 / ta - cb as f64 / tb).abs();
        let mut delta = 0.0;
        let (mut i, mut j) = (0, 0);
        while i < x.len() || j < y.len() {
            let (m, dx, dy) = match (x.get(i), y.get(j)) {
                (Some(&(mx, cx)), Some(&(my, cy))) if mx == my => {
                    i += 1;
                    j += 1;
                    (mx, cx, cy)
                }
                (Some(&(mx, cx)), Some(&(my, _))) if mx < my => {
                    i += 1;
                    (mx, cx, 0)
                }
                (Some(&(mx, cx)), None) => {
                    i += 1;
                    (mx, cx, 0)
                }
                (_, Some(&(my, cy))) => {
                    j += 1;
                    (my, 0, cy)
                }
                (None, None) => unreachable!(),
            };
            let (ca, cb) = (self.a[m as usize], self.b[m as usize]);
            delta += term(ca - dx + dy, cb - dy + dx) - term(ca, cb);
        }
        current + 0.5 * delta
    }
}

fn weight(sig: &Signature) -> i64 {
    sig.iter().map(|&(_, c)| c).sum()
}

fn signatures(corpus: &Corpus, parent: &[usize]) -> (Vec<Signature>, usize) {
    let mut ids: HashMap<&str, u32> = HashMap::new();
    let mut sigs = Vec::with_capacity(parent.len());
    for &i in parent {
        let mut local: HashMap<u32, i64> = HashMap::new();
        for m in corpus.words()[i].morphemes() {
            let next = ids.len() as u32;
            let id = *ids.entry(m.as_str()).or_insert(next);
            *local.entry(id).or_insert(0) += 1;
        }
        let mut sig: Signature = local.into_iter().collect();
        sig.sort_unstable();
        sigs.push(sig);
    }
    (sigs, ids.len())
}

/// Local maxima revisited from fresh random starts before giving up.
pub const MAX_RESTARTS: u64 = 8;

/// Hill climbing over single-pair swaps, starting from the seed-matched
/// random split. Pairs are scanned cyclically and the first strictly
/// improving swap is taken; a climb ends after a full cycle without
/// improvement (a local maximum). Up to [`MAX_RESTARTS`] further climbs start
/// from random splits with derived seeds, and the best split seen is kept.
/// All climbs share `budget` swap evaluations (`None` = unlimited).
pub fn adversarial_split(
    corpus: &Corpus,
    parent: &[usize],
    ratio: Ratio,
    seed: u64,
    budget: Option<u64>,
) -> Result<SplitManifest> {
    let start = random_split(corpus, parent, ratio, seed)?;
    // work in parent positions
    let parent_sorted = sorted(parent.to_vec());
    let position: HashMap<usize, usize> = parent_sorted.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let (sigs, n_types) = signatures(corpus, &parent_sorted);

    let mut manifest = SplitManifest {
        strategy: Strategy::Adversarial,
        ..start
    };
    if sigs.windows(2).all(|w| w[0] == w[1]) {
        return Ok(manifest);
    }

    let limit = budget.unwrap_or(u64::MAX);
    let mut used = 0u64;
    let mut best: Option<Climb> = None;
    for restart in 0..=MAX_RESTARTS {
        if used >= limit {
            break;
        }
        let (a, b, climb_seed) = if restart == 0 {
            (
                manifest.indices_a.clone(),
                manifest.indices_b.clone(),
                seed.rotate_left(17),
            )
        } else {
            let s = derive_seed(seed, &[restart], "adversarial-restart");
            let m = random_split(corpus, parent, ratio, s)?;
            (m.indices_a, m.indices_b, s.rotate_left(17))
        };
        let side_a = a.iter().map(|i| position[i]).collect();
        let side_b = b.iter().map(|i| position[i]).collect();
        let climb = climb(&sigs, n_types, side_a, side_b, climb_seed, limit - used);
        used += climb.used;
        if best
            .as_ref()
            .is_none_or(|b| climb.distance > b.distance + IMPROVEMENT_EPS)
        {
            best = Some(climb);
        }
    }

    let best = best.expect("at least one climb runs");
    manifest.indices_a = sorted(best.side_a.iter().map(|&p| parent_sorted[p]).collect());
    manifest.indices_b = sorted(best.side_b.iter().map(|&p| parent_sorted[p]).collect());
    manifest.achieved_distance = tv_between(corpus, &manifest.indices_a, &manifest.indices_b)?;
    manifest.budget_used = used;
    Ok(manifest)
}

struct Climb {
    side_a: Vec<usize>,
    side_b: Vec<usize>,
    distance: f64,
    used: u64,
}

fn climb(
    sigs: &[Signature],
    n_types: usize,
    mut side_a: Vec<usize>,
    mut side_b: Vec<usize>,
    seed: u64,
    limit: u64,
) -> Climb {
    // shuffled scan order so the climb depends on the seed
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    side_a.shuffle(&mut rng);
    side_b.shuffle(&mut rng);

    let mut counts = Counts {
        a: vec![0; n_types],
        b: vec![0; n_types],
        total_a: 0,
        total_b: 0,
    };
    for &p in &side_a {
        for &(m, c) in &sigs[p] {
            counts.a[m as usize] += c;
            counts.total_a += c;
        }
    }
    for &p in &side_b {
        for &(m, c) in &sigs[p] {
            counts.b[m as usize] += c;
            counts.total_b += c;
        }
    }

    let mut current = counts.distance();
    let pairs = side_a.len() * side_b.len();
    let mut used = 0u64;
    let mut since_improvement = 0usize;
    let mut cursor = 0usize;

    while since_improvement < pairs && used < limit {
        let (ia, ib) = (cursor / side_b.len(), cursor % side_b.len());
        cursor = (cursor + 1) % pairs;
        since_improvement += 1;
        let (x, y) = (&sigs[side_a[ia]], &sigs[side_b[ib]]);
        if x == y {
            continue;
        }
        used += 1;
        let improved = if weight(x) == weight(y) {
            let candidate = counts.distance_after_equal_weight_swap(current, x, y);
            if candidate > current + IMPROVEMENT_EPS {
                counts.apply(x, y);
                true
            } else {
                false
            }
        } else {
            counts.apply(x, y);
            if counts.distance() > current + IMPROVEMENT_EPS {
                true
            } else {
                counts.apply(y, x);
                false
            }
        };
        if improved {
            current = counts.distance();
            std::mem::swap(&mut side_a[ia], &mut side_b[ib]);
            since_improvement = 0;
        }
    }
    Climb {
        side_a,
        side_b,
        distance: current,
        used,
    }
}

/// Result of a morpheme-count threshold search.
#[derive(Debug, Clone, PartialEq)]
pub enum HeuristicOutcome {
    Found(SplitManifest),
    /// No threshold put the target share on the smaller side within tolerance.
    ThresholdNotFound {
        /// Closest share reached by any candidate threshold, if any candidate
        /// left both sides non-empty.
        closest_share: Option<f64>,
    },
}

/// Words with at least `t` morphemes go to the smaller side, for the first
/// candidate `t` (ascending over distinct per-word counts) whose share is
/// closest to the target, provided it lies within `tolerance`.
pub fn heuristic_split(corpus: &Corpus, parent: &[usize], ratio: Ratio, tolerance: f64) -> Result<HeuristicOutcome> {
    check_parent(corpus, parent, ratio)?;
    let parent = sorted(parent.to_vec());
    let n = parent.len();
    let morphs = |i: usize| corpus.words()[i].morphemes().len();
    let mut thresholds: Vec<usize> = parent.iter().map(|&i| morphs(i)).collect();
    thresholds.sort_unstable();
    thresholds.dedup();

    let b_is_smaller = ratio.b <= ratio.a;
    let target = if b_is_smaller {
        ratio.share_b()
    } else {
        1.0 - ratio.share_b()
    };

    let mut best: Option<(f64, usize, f64)> = None; // (deviation, threshold, share)
    for &t in &thresholds {
        let chosen = parent.iter().filter(|&&i| morphs(i) >= t).count();
        if chosen == 0 || chosen == n {
            continue;
        }
        let share = chosen as f64 / n as f64;
        let dev = (share - target).abs();
        if best.is_none_or(|(d, _, _)| dev < d) {
            best = Some((dev, t, share));
        }
    }
    let Some((dev, t, share)) = best else {
        return Ok(HeuristicOutcome::ThresholdNotFound { closest_share: None });
    };
    if dev > tolerance + 1e-12 {
        return Ok(HeuristicOutcome::ThresholdNotFound {
            closest_share: Some(share),
        });
    }
    let (heavy, light): (Vec<usize>, Vec<usize>) = parent.iter().partition(|&&i| morphs(i) >= t);
    let (a, b) = if b_is_smaller { (light, heavy) } else { (heavy, light) };
    let achieved_distance = tv_between(corpus, &a, &b)?;
    Ok(HeuristicOutcome::Found(SplitManifest {
        strategy: Strategy::Heuristic,
        stage: Stage::ResidualSplit,
        seed: 0,
        indices_a: a,
        indices_b: b,
        target_ratio: ratio,
        achieved_distance,
        budget_used: thresholds.len() as u64,
        threshold: Some(t),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SegmentedWord;

    fn all(c: &Corpus) -> Vec<usize> {
        (0..c.len()).collect()
    }

    fn corpus_of(words: &[&[&str]]) -> Corpus {
        Corpus::from_words("t", words.iter().map(|p| SegmentedWord::from_parts(p).unwrap()))
    }

    fn letters(n: usize, prefix: &str, morpheme: &str) -> Vec<Vec<String>> {
        (0..n)
            .map(|i| vec![format!("{prefix}{i}"), morpheme.to_string()])
            .collect()
    }

    #[test]
    fn random_sizes_and_determinism() {
        let words: Vec<Vec<String>> = letters(10, "w", "s");
        let c = Corpus::from_words(
            "t",
            words.iter().map(|p| SegmentedWord::new(p.concat(), p.clone()).unwrap()),
        );
        let r = Ratio::new(9, 1).unwrap();
        let m = random_split(&c, &all(&c), r, 42).unwrap();
        assert_eq!((m.indices_a.len(), m.indices_b.len()), (9, 1));
        assert_eq!(m, random_split(&c, &all(&c), r, 42).unwrap());
        assert!(random_split(&c, &[0], r, 1).is_err());
        assert!(random_split(&c, &[0, 1, 2], r, 1).is_err()); // 3 * 0.1 rounds to 0
    }

    fn repeated(m: &str, k: usize) -> SegmentedWord {
        SegmentedWord::new(m.repeat(k), vec![m.to_string(); k]).unwrap()
    }

    #[test]
    fn adversarial_separates_two_groups() {
        // x, x+x, ..., and y, y+y, ...: all-x on one side gives disjoint supports
        let words = (1..=6)
            .map(|k| repeated("x", k))
            .chain((1..=6).map(|k| repeated("y", k)));
        let c = Corpus::from_words("t", words);
        let r = Ratio::new(1, 1).unwrap();
        let m = adversarial_split(&c, &all(&c), r, 5, None).unwrap();
        assert_eq!(m.achieved_distance, 1.0);
        assert_eq!(m.indices_a.len(), 6);
        let base = random_split(&c, &all(&c), r, 5).unwrap();
        assert!(m.achieved_distance >= base.achieved_distance);
    }

    #[test]
    fn identical_multisets_terminate_immediately() {
        let same = corpus_of(&[&["a", "b"], &["b", "a"], &["ab", "ab"], &["ba", "ab"]]);
        let c = Corpus::from_words("t", [same.words()[0].clone(), same.words()[1].clone()]);
        let m = adversarial_split(&c, &[0, 1], Ratio::new(1, 1).unwrap(), 3, None).unwrap();
        assert_eq!(m.achieved_distance, 0.0);
        assert_eq!(m.budget_used, 0);
    }

    #[test]
    fn budget_is_respected() {
        let words: Vec<Vec<String>> = (0..40)
            .map(|i| vec![format!("s{}", i % 7), format!("x{}", i % 5), format!("q{i}")])
            .collect();
        let c = Corpus::from_words(
            "t",
            words.iter().map(|p| SegmentedWord::new(p.concat(), p.clone()).unwrap()),
        );
        let m = adversarial_split(&c, &all(&c), Ratio::new(3, 1).unwrap(), 1, Some(17)).unwrap();
        assert!(m.budget_used <= 17);
    }

    #[test]
    fn heuristic_examples() {
        let two: Vec<Vec<String>> = (0..10).map(|i| vec![format!("s{i}"), "x".into()]).collect();
        let c = Corpus::from_words(
            "t",
            two.iter().map(|p| SegmentedWord::new(p.concat(), p.clone()).unwrap()),
        );
        let out = heuristic_split(&c, &all(&c), Ratio::new(9, 1).unwrap(), 0.02).unwrap();
        assert!(matches!(out, HeuristicOutcome::ThresholdNotFound { .. }));

        let mut words: Vec<Vec<String>> = (0..9).map(|i| vec![format!("s{i}"), "x".into()]).collect();
        words.push(vec!["p".into(), "q".into(), "r".into(), "t".into(), "u".into()]);
        let c = Corpus::from_words(
            "t",
            words.iter().map(|p| SegmentedWord::new(p.concat(), p.clone()).unwrap()),
        );
        match heuristic_split(&c, &all(&c), Ratio::new(9, 1).unwrap(), 0.0).unwrap() {
            HeuristicOutcome::Found(m) => {
                assert_eq!(m.threshold, Some(5));
                assert_eq!(m.indices_b, vec![9]);
                assert_eq!(m.indices_a.len(), 9);
            }
            other => panic!("{other:?}"),
        }
    }
}
