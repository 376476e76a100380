//! Brute-force recount of layer counts, used to check [`crate::ranking`].
//!
//! Shares no code with the ranking path: papers are grouped by citation value
//! from scratch, weights are recomputed from the counting-mode definitions,
//! and a boundary that cuts a tie run is resolved by averaging the unit's
//! credit over orderings of the run. Runs of up to [`MAX_ENUMERATED_RUN`]
//! papers are enumerated permutation by permutation; longer runs average over
//! every (paper, slot) placement, which is the same expectation since each
//! paper occupies each slot in exactly `(L-1)!` of the `L!` orderings.

use std::cmp::Reverse;
use std::collections::BTreeMap;

use crate::corpus::{Corpus, Publication, UnitDefinition};
use crate::ranking::{AffiliationRule, CountingMode, LayerCounts, LayerEntry, PercentileGrid};

pub const MAX_ENUMERATED_RUN: usize = 6;

fn weight(
    p: &Publication,
    unit: &UnitDefinition,
    mode: CountingMode,
    rule: AffiliationRule,
) -> f64 {
    let in_unit = |c| unit.countries.contains(c);
    match mode {
        CountingMode::Whole => {
            if p.authors.iter().flat_map(|a| &a.countries).any(in_unit) {
                1.0
            } else {
                0.0
            }
        }
        CountingMode::Domestic => {
            if p.authors.iter().flat_map(|a| &a.countries).all(in_unit) {
                1.0
            } else {
                0.0
            }
        }
        CountingMode::Fractional => {
            let mut affiliated = 0.0;
            for a in &p.authors {
                let hits = a.countries.iter().filter(|c| in_unit(c)).count() as f64;
                affiliated += match rule {
                    AffiliationRule::FullCredit => hits.min(1.0),
                    AffiliationRule::Split => hits / a.countries.len() as f64,
                };
            }
            affiliated / p.authors.len() as f64
        }
    }
}

/// Portion of the unit-width slot `(pos, pos+1]` lying inside `(0, k]`.
fn coverage(k: f64, pos: usize) -> f64 {
    (k - pos as f64).clamp(0.0, 1.0)
}

fn for_each_permutation(items: &mut [f64], visit: &mut impl FnMut(&[f64])) {
    // Heap's algorithm.
    fn go(n: usize, items: &mut [f64], visit: &mut impl FnMut(&[f64])) {
        if n <= 1 {
            visit(items);
            return;
        }
        for i in 0..n - 1 {
            go(n - 1, items, visit);
            if n.is_multiple_of(2) {
                items.swap(i, n - 1);
            } else {
                items.swap(0, n - 1);
            }
        }
        go(n - 1, items, visit);
    }
    let n = items.len();
    go(n, items, visit);
}

/// Expected unit credit of a run starting at slot `start`, over all orderings.
fn run_credit(weights: &[f64], start: usize, k: f64) -> f64 {
    let len = weights.len();
    if k >= (start + len) as f64 {
        return weights.iter().sum();
    }
    if k <= start as f64 {
        return 0.0;
    }
    if len <= MAX_ENUMERATED_RUN {
        let mut items = weights.to_vec();
        let mut total = 0.0;
        let mut orderings = 0usize;
        for_each_permutation(&mut items, &mut |perm| {
            orderings += 1;
            total += perm
                .iter()
                .enumerate()
                .map(|(j, w)| w * coverage(k, start + j))
                .sum::<f64>();
        });
        total / orderings as f64
    } else {
        let mut total = 0.0;
        for w in weights {
            for j in 0..len {
                total += w * coverage(k, start + j);
            }
        }
        total / len as f64
    }
}

pub fn verify_counts_bruteforce(
    corpus: &Corpus,
    unit: &UnitDefinition,
    mode: CountingMode,
    grid: &PercentileGrid,
    rule: AffiliationRule,
) -> LayerCounts {
    let mut runs: BTreeMap<Reverse<u64>, Vec<f64>> = BTreeMap::new();
    for p in corpus {
        runs.entry(Reverse(p.citations))
            .or_default()
            .push(weight(p, unit, mode, rule));
    }
    let n = corpus.len();
    let entries = grid
        .levels()
        .iter()
        .map(|&x| {
            let k = x * n as f64 / 100.0;
            let mut start = 0;
            let mut count = 0.0;
            for weights in runs.values() {
                count += run_credit(weights, start, k);
                start += weights.len();
            }
            LayerEntry { x, count }
        })
        .collect();
    LayerCounts {
        unit: unit.name.clone(),
        mode,
        world_total: n,
        entries,
    }
}
