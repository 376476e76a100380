//! World citation ranking, percentile thresholds, and per-unit layer counts.
//!
//! The world corpus is ordered by citations (descending, id ascending). A
//! top-x% layer holds `k = x·N/100` papers, where `k` may be fractional. Ranks
//! are treated as unit-width slots on a continuous axis, so a run of equally
//! cited papers occupying slots `(s, s+L]` contributes the fraction
//! `(k - s)/L` of each member's weight when `s < k < s+L` (the proportional
//! method). The count is therefore independent of how ties are ordered.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{find_unit, Corpus, Publication, UnitDefinition};
use crate::error::{Error, Result};

/// Nine levels used for the cumulative percentile distribution.
pub const DEFAULT_LEVELS: [f64; 9] = [1.0, 2.0, 4.0, 7.0, 12.0, 20.0, 35.0, 60.0, 100.0];

/// Strictly increasing percentile levels in (0, 100].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PercentileGrid(Vec<f64>);

impl PercentileGrid {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidGrid("no levels".into()));
        }
        for &x in &levels {
            check_percentile(x)?;
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(format!(
                "levels must be strictly increasing: {levels:?}"
            )));
        }
        Ok(PercentileGrid(levels))
    }

    pub fn levels(&self) -> &[f64] {
        &self.0
    }
}

impl Default for PercentileGrid {
    fn default() -> Self {
        PercentileGrid(DEFAULT_LEVELS.to_vec())
    }
}

impl TryFrom<Vec<f64>> for PercentileGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PercentileGrid> for Vec<f64> {
    fn from(g: PercentileGrid) -> Vec<f64> {
        g.0
    }
}

impl FromStr for PercentileGrid {
    type Err = Error;

    /// Parses a comma-separated list such as `1,2,4,7,12,20,35,60,100`.
    fn from_str(s: &str) -> Result<Self> {
        let levels = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidGrid(format!("not a number: {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(levels)
    }
}

impl fmt::Display for PercentileGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

pub(crate) fn check_percentile(x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 && x <= 100.0 {
        Ok(())
    } else {
        Err(Error::Percentile(x))
    }
}

/// Number of world papers in the top-x% layer, `x·N/100`.
///
/// Results within 1e-12 (relative) of an integer are snapped to it so that
/// layer boundaries falling exactly between two ranks stay exact.
pub fn layer_size(x: f64, n: usize) -> f64 {
    let k = x * n as f64 / 100.0;
    let r = k.round();
    if (k - r).abs() <= 1e-12 * r.max(1.0) {
        r
    } else {
        k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieRun {
    pub citations: u64,
    /// 1-based rank of the first paper of the run.
    pub start_rank: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Copy)]
struct Group {
    start: usize,
    len: usize,
}

/// The world corpus in citation order.
#[derive(Debug, Clone)]
pub struct RankedWorld {
    order: Vec<usize>,
    ids: Vec<String>,
    citations: Vec<u64>,
    groups: Vec<Group>,
    tie_runs: Vec<TieRun>,
}

pub fn rank_world(corpus: &Corpus) -> Result<RankedWorld> {
    RankedWorld::new(corpus)
}

impl RankedWorld {
    pub fn new(corpus: &Corpus) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Empty);
        }
        let pubs = corpus.publications();
        let mut order: Vec<usize> = (0..pubs.len()).collect();
        order.sort_by(|&a, &b| {
            pubs[b]
                .citations
                .cmp(&pubs[a].citations)
                .then_with(|| pubs[a].id.cmp(&pubs[b].id))
        });
        let citations: Vec<u64> = order.iter().map(|&i| pubs[i].citations).collect();
        let ids = order.iter().map(|&i| pubs[i].id.clone()).collect();

        let mut groups = Vec::new();
        let mut start = 0;
        for i in 1..=citations.len() {
            if i == citations.len() || citations[i] != citations[start] {
                groups.push(Group {
                    start,
                    len: i - start,
                });
                start = i;
            }
        }
        let tie_runs = groups
            .iter()
            .filter(|g| g.len > 1)
            .map(|g| TieRun {
                citations: citations[g.start],
                start_rank: g.start + 1,
                len: g.len,
            })
            .collect();
        Ok(RankedWorld {
            order,
            ids,
            citations,
            groups,
            tie_runs,
        })
    }

    /// Total number of world papers, N.
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Corpus indices in rank order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Publication ids in rank order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Citation counts in rank order.
    pub fn citations(&self) -> &[u64] {
        &self.citations
    }

    pub fn tie_runs(&self) -> &[TieRun] {
        &self.tie_runs
    }

    /// Index of the equal-citation group holding slot `k`, i.e. the group
    /// with `start < k <= start + len`.
    fn group_at(&self, k: f64) -> usize {
        let idx = self
            .groups
            .partition_point(|g| ((g.start + g.len) as f64) < k);
        idx.min(self.groups.len() - 1)
    }

    pub fn world_threshold(&self, x: f64) -> Result<Threshold> {
        check_percentile(x)?;
        let n = self.len();
        let k = layer_size(x, n);
        let g = self.groups[self.group_at(k)];
        let straddle = if (g.start as f64) < k && k < (g.start + g.len) as f64 {
            Some(Straddle {
                citations: self.citations[g.start],
                start_rank: g.start + 1,
                len: g.len,
                fraction: (k - g.start as f64) / g.len as f64,
            })
        } else {
            None
        };
        Ok(Threshold {
            percentile: x,
            k,
            straddle,
        })
    }

    /// Cumulative world counts `x·N/100` on the grid.
    pub fn world_counts(&self, grid: &PercentileGrid) -> LayerCounts {
        LayerCounts {
            unit: "world".into(),
            mode: CountingMode::Whole,
            world_total: self.len(),
            entries: grid
                .levels()
                .iter()
                .map(|&x| LayerEntry {
                    x,
                    count: layer_size(x, self.len()),
                })
                .collect(),
        }
    }
}

/// Placement of the top-x% boundary in the ranked world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub percentile: f64,
    /// Exact (possibly fractional) number of papers in the layer.
    pub k: f64,
    /// Present when the boundary cuts through a group of equally cited
    /// papers; a group of length 1 appears when `k` is fractional.
    pub straddle: Option<Straddle>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Straddle {
    pub citations: u64,
    pub start_rank: usize,
    pub len: usize,
    /// Share of the run lying inside the layer.
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountingMode {
    Whole,
    Fractional,
    Domestic,
}

impl CountingMode {
    pub const ALL: [CountingMode; 3] = [
        CountingMode::Domestic,
        CountingMode::Fractional,
        CountingMode::Whole,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CountingMode::Whole => "whole",
            CountingMode::Fractional => "fractional",
            CountingMode::Domestic => "domestic",
        }
    }
}

impl fmt::Display for CountingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CountingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "whole" => Ok(CountingMode::Whole),
            "fractional" => Ok(CountingMode::Fractional),
            "domestic" => Ok(CountingMode::Domestic),
            other => Err(format!(
                "unknown counting mode {other:?} (expected whole, fractional or domestic)"
            )),
        }
    }
}

/// How an author affiliated with several countries enters fractional counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AffiliationRule {
    /// The author counts fully toward every unit holding one of their countries.
    #[default]
    FullCredit,
    /// The author's share is divided evenly among their countries.
    Split,
}

/// Weight of one publication for `unit` under `mode`.
pub fn paper_weight(
    p: &Publication,
    unit: &UnitDefinition,
    mode: CountingMode,
    rule: AffiliationRule,
) -> f64 {
    match mode {
        CountingMode::Whole => f64::from(u8::from(p.participates_in(unit))),
        CountingMode::Domestic => f64::from(u8::from(p.is_domestic_to(unit))),
        CountingMode::Fractional => {
            let share: f64 = p
                .authors
                .iter()
                .map(|a| {
                    let inside = a.countries.iter().filter(|c| unit.contains(c)).count();
                    match rule {
                        AffiliationRule::FullCredit => f64::from(u8::from(inside > 0)),
                        AffiliationRule::Split => inside as f64 / a.countries.len() as f64,
                    }
                })
                .sum();
            share / p.authors.len() as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub x: f64,
    pub count: f64,
}

/// Cumulative counts C(x) of one unit's papers inside each world top-x% layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCounts {
    pub unit: String,
    pub mode: CountingMode,
    /// Size N of the world corpus the layers were cut from.
    pub world_total: usize,
    pub entries: Vec<LayerEntry>,
}

impl LayerCounts {
    pub fn count_at(&self, x: f64) -> Option<f64> {
        self.entries.iter().find(|e| e.x == x).map(|e| e.count)
    }

    /// Multiplies every count by `factor`.
    pub fn scaled(&self, factor: f64) -> LayerCounts {
        LayerCounts {
            entries: self
                .entries
                .iter()
                .map(|e| LayerEntry {
                    x: e.x,
                    count: e.count * factor,
                })
                .collect(),
            ..self.clone()
        }
    }
}

/// Counts unit papers per layer against a ranked world.
///
/// An optional mask restricts which publications may be credited to the unit
/// (for instance papers carrying a funding tag) while the world ranking keeps
/// every publication.
#[derive(Debug, Clone)]
pub struct LayerCounter<'a> {
    ranked: &'a RankedWorld,
    corpus: &'a Corpus,
    mask: Option<Vec<bool>>,
    rule: AffiliationRule,
}

impl<'a> LayerCounter<'a> {
    pub fn new(ranked: &'a RankedWorld, corpus: &'a Corpus) -> Self {
        assert_eq!(
            ranked.len(),
            corpus.len(),
            "ranked world was built from a different corpus"
        );
        LayerCounter {
            ranked,
            corpus,
            mask: None,
            rule: AffiliationRule::default(),
        }
    }

    pub fn affiliation_rule(mut self, rule: AffiliationRule) -> Self {
        self.rule = rule;
        self
    }

    /// Only publications for which `keep` holds are credited to units.
    pub fn restrict<F: Fn(&Publication) -> bool>(mut self, keep: F) -> Self {
        self.mask = Some(self.corpus.iter().map(keep).collect());
        self
    }

    /// Weight in rank order, then prefix sums over slots.
    fn prefix_weights(&self, unit: &UnitDefinition, mode: CountingMode) -> Vec<f64> {
        let pubs = self.corpus.publications();
        let mut prefix = Vec::with_capacity(self.ranked.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for &i in self.ranked.order() {
            if self.mask.as_ref().is_none_or(|m| m[i]) {
                acc += paper_weight(&pubs[i], unit, mode, self.rule);
            }
            prefix.push(acc);
        }
        prefix
    }

    pub fn count(
        &self,
        unit: &UnitDefinition,
        mode: CountingMode,
        grid: &PercentileGrid,
    ) -> LayerCounts {
        let prefix = self.prefix_weights(unit, mode);
        let n = self.ranked.len();
        let entries = grid
            .levels()
            .iter()
            .map(|&x| {
                let k = layer_size(x, n);
                let g = self.ranked.groups[self.ranked.group_at(k)];
                let end = g.start + g.len;
                let count = if k >= end as f64 {
                    prefix[end]
                } else {
                    let f = (k - g.start as f64) / g.len as f64;
                    prefix[g.start] + f * (prefix[end] - prefix[g.start])
                };
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

    /// Mode-weighted total of the unit's papers (its C(100)).
    pub fn total(&self, unit: &UnitDefinition, mode: CountingMode) -> f64 {
        *self.prefix_weights(unit, mode).last().unwrap_or(&0.0)
    }
}

pub fn count_layers(
    ranked: &RankedWorld,
    corpus: &Corpus,
    unit: &UnitDefinition,
    mode: CountingMode,
    grid: &PercentileGrid,
) -> LayerCounts {
    LayerCounter::new(ranked, corpus).count(unit, mode, grid)
}

/// Like [`count_layers`], resolving the unit by name.
pub fn count_layers_named(
    ranked: &RankedWorld,
    corpus: &Corpus,
    units: &[UnitDefinition],
    name: &str,
    mode: CountingMode,
    grid: &PercentileGrid,
) -> Result<LayerCounts> {
    let unit = find_unit(units, name)?;
    Ok(count_layers(ranked, corpus, unit, mode, grid))
}

pub const COUNTS_TSV_HEADER: &str = "unit\tmode\tx\tcount";

/// Writes `unit  mode  x  count` rows with a header line.
pub fn write_counts_tsv<W: Write>(counts: &[LayerCounts], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{COUNTS_TSV_HEADER}")?;
    for c in counts {
        for e in &c.entries {
            writeln!(out, "{}\t{}\t{}\t{}", c.unit, c.mode, e.x, e.count)?;
        }
    }
    Ok(())
}

/// Parses the TSV written by [`write_counts_tsv`]. Lines starting with `#`
/// are comments. World size is not part of the TSV and is reported as 0.
pub fn read_counts_tsv(text: &str) -> Result<Vec<LayerCounts>> {
    let mut out: Vec<LayerCounts> = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != COUNTS_TSV_HEADER {
                return Err(Error::Counts(format!(
                    "line {}: expected header {COUNTS_TSV_HEADER:?}",
                    i + 1
                )));
            }
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::Counts(format!("line {}: expected 4 columns", i + 1)));
        }
        let mode: CountingMode = cols[1]
            .parse()
            .map_err(|e| Error::Counts(format!("line {}: {e}", i + 1)))?;
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Counts(format!("line {}: not a number: {s:?}", i + 1)))
        };
        let entry = LayerEntry {
            x: num(cols[2])?,
            count: num(cols[3])?,
        };
        match out.last_mut() {
            Some(last) if last.unit == cols[0] && last.mode == mode => last.entries.push(entry),
            _ => out.push(LayerCounts {
                unit: cols[0].to_owned(),
                mode,
                world_total: 0,
                entries: vec![entry],
            }),
        }
    }
    if out.is_empty() {
        return Err(Error::Empty);
    }
    Ok(out)
}
