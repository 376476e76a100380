//! e_p index, counted P_top x%, extrapolated P'_top x%, and report assembly.

use std::io::Write;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, UnitDefinition};
use crate::error::{Error, Result};
use crate::powerlaw::{fit_power_law, two_point_fit, FitStatus, OmissionPolicy, PowerLawFit};
use crate::ranking::{
    check_percentile, AffiliationRule, CountingMode, LayerCounter, LayerCounts, PercentileGrid,
    RankedWorld,
};

/// Extrapolation level used when none is requested.
pub const DEFAULT_EXTRAPOLATION: f64 = 0.01;

/// Below this percentile extrapolation is far outside any fitted range.
pub const EXTRAPOLATION_FLOOR: f64 = 0.001;

/// `P_top1% / P_top10%`.
pub fn ep_from_counts(p_top10: f64, p_top1: f64) -> Result<f64> {
    if p_top10.is_nan() || p_top10 <= 0.0 {
        return Err(Error::UndefinedIndicator(format!(
            "e_p needs P_top10% > 0 (got {p_top10})"
        )));
    }
    Ok(p_top1 / p_top10)
}

/// `10^-alpha`.
pub fn ep_from_alpha(alpha: f64) -> f64 {
    10f64.powf(-alpha)
}

/// `P'_top x% = A·x^alpha` from a usable fit.
pub fn extrapolate_ptop(fit: &PowerLawFit, x: f64) -> Result<f64> {
    check_percentile(x)?;
    match (fit.status, fit.law) {
        (FitStatus::Ok, Some(law)) => {
            if x < EXTRAPOLATION_FLOOR {
                warn!("extrapolating to the top {x}% lies far below the fitted percentiles");
            }
            Ok(law.eval(x))
        }
        (status, _) => Err(Error::FitUnusable(status)),
    }
}

/// Ratio of two systems' PP_top x% indicators, `(x/100)^(alpha_1 - alpha_2)`.
pub fn pp_ratio(alpha_1: f64, alpha_2: f64, x: f64) -> Result<f64> {
    check_percentile(x)?;
    Ok((x / 100.0).powf(alpha_1 - alpha_2))
}

pub fn per_capita(value: f64, population_millions: f64) -> Result<f64> {
    if !(population_millions.is_finite() && population_millions > 0.0) {
        return Err(Error::UndefinedIndicator(format!(
            "population must be positive (got {population_millions})"
        )));
    }
    Ok(value / population_millions)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelValue {
    pub x: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorReport {
    pub unit: String,
    pub mode: Option<CountingMode>,
    /// Mode-weighted number of the unit's papers.
    pub papers: f64,
    pub e_p: Option<f64>,
    pub alpha: Option<f64>,
    /// Counted P_top x% at the grid levels.
    pub p_top: Vec<LevelValue>,
    /// Extrapolated P'_top x%.
    pub p_top_extrapolated: Vec<LevelValue>,
    /// P'_top x% per million inhabitants, when the unit has a population.
    pub per_capita: Option<Vec<LevelValue>>,
    pub fit: PowerLawFit,
    pub notes: Vec<String>,
}

impl IndicatorReport {
    pub fn status(&self) -> FitStatus {
        self.fit.status
    }

    pub fn extrapolated_at(&self, x: f64) -> Option<f64> {
        self.p_top_extrapolated
            .iter()
            .find(|v| v.x == x)
            .map(|v| v.value)
    }

    pub fn counted_at(&self, x: f64) -> Option<f64> {
        self.p_top.iter().find(|v| v.x == x).map(|v| v.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportConfig {
    pub mode: CountingMode,
    pub grid: PercentileGrid,
    pub policy: OmissionPolicy,
    pub levels: Vec<f64>,
    pub affiliation: AffiliationRule,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            mode: CountingMode::Fractional,
            grid: PercentileGrid::default(),
            policy: OmissionPolicy::default(),
            levels: vec![DEFAULT_EXTRAPOLATION],
            affiliation: AffiliationRule::default(),
        }
    }
}

fn fill_indicators(
    report: &mut IndicatorReport,
    levels: &[f64],
    population: Option<f64>,
) -> Result<()> {
    for &x in levels {
        check_percentile(x)?;
    }
    if report.fit.status != FitStatus::Ok {
        report.notes.push(format!(
            "fit status {}; indicators omitted",
            report.fit.status
        ));
        return Ok(());
    }
    for &x in levels {
        report.p_top_extrapolated.push(LevelValue {
            x,
            value: extrapolate_ptop(&report.fit, x)?,
        });
    }
    match population {
        Some(pop) => {
            report.per_capita = Some(
                report
                    .p_top_extrapolated
                    .iter()
                    .map(|v| {
                        Ok(LevelValue {
                            x: v.x,
                            value: per_capita(v.value, pop)?,
                        })
                    })
                    .collect::<Result<_>>()?,
            );
        }
        None => report
            .notes
            .push("no population; per-capita values omitted".into()),
    }
    Ok(())
}

/// Report for one unit from its layer counts.
pub fn report_from_counts(
    counts: &LayerCounts,
    papers: f64,
    population: Option<f64>,
    config: &ReportConfig,
) -> Result<IndicatorReport> {
    let fit = fit_power_law(counts, &config.policy);
    let ok = fit.status == FitStatus::Ok;
    let alpha = fit.alpha().filter(|_| ok);
    let mut report = IndicatorReport {
        unit: counts.unit.clone(),
        mode: Some(counts.mode),
        papers,
        e_p: alpha.map(ep_from_alpha),
        alpha,
        p_top: counts
            .entries
            .iter()
            .map(|e| LevelValue {
                x: e.x,
                value: e.count,
            })
            .collect(),
        p_top_extrapolated: Vec::new(),
        per_capita: None,
        fit,
        notes: Vec::new(),
    };
    if report
        .fit
        .points_omitted
        .iter()
        .any(|o| o.reason == crate::powerlaw::OmissionReason::TailDeviation)
    {
        report
            .notes
            .push("tail points omitted by the refit rule".into());
    }
    fill_indicators(&mut report, &config.levels, population)?;
    Ok(report)
}

/// Report from published P_top10% and P_top1% counts, bypassing ranking.
pub fn published_report(
    unit: &str,
    p_top10: f64,
    p_top1: f64,
    population: Option<f64>,
    levels: &[f64],
) -> Result<IndicatorReport> {
    let fit = two_point_fit(p_top10, p_top1)?;
    let ok = fit.status == FitStatus::Ok;
    let mut report = IndicatorReport {
        unit: unit.to_owned(),
        mode: None,
        papers: f64::NAN,
        e_p: if ok {
            Some(ep_from_counts(p_top10, p_top1)?)
        } else {
            None
        },
        alpha: fit.alpha(),
        p_top: vec![
            LevelValue {
                x: 1.0,
                value: p_top1,
            },
            LevelValue {
                x: 10.0,
                value: p_top10,
            },
        ],
        p_top_extrapolated: Vec::new(),
        per_capita: None,
        fit,
        notes: Vec::new(),
    };
    fill_indicators(&mut report, levels, population)?;
    Ok(report)
}

/// Sorts by e_p descending; units without e_p go last, ties by name.
pub fn sort_reports(reports: &mut [IndicatorReport]) {
    reports.sort_by(|a, b| match (a.e_p, b.e_p) {
        (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.unit.cmp(&b.unit)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.unit.cmp(&b.unit),
    });
}

/// Reports for every unit against an already ranked world.
pub fn build_report_with(
    counter: &LayerCounter<'_>,
    units: &[UnitDefinition],
    config: &ReportConfig,
) -> Result<Vec<IndicatorReport>> {
    let mut reports = units
        .iter()
        .map(|unit| {
            unit.validate()?;
            let counts = counter.count(unit, config.mode, &config.grid);
            let papers = counter.total(unit, config.mode);
            report_from_counts(&counts, papers, unit.population_millions, config)
        })
        .collect::<Result<Vec<_>>>()?;
    sort_reports(&mut reports);
    Ok(reports)
}

pub fn build_report(
    corpus: &Corpus,
    units: &[UnitDefinition],
    config: &ReportConfig,
) -> Result<Vec<IndicatorReport>> {
    let ranked = RankedWorld::new(corpus)?;
    let counter = LayerCounter::new(&ranked, corpus).affiliation_rule(config.affiliation);
    build_report_with(&counter, units, config)
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "-".into()
    } else if v == 0.0 || v.abs() >= 0.01 {
        format!("{v:.4}")
    } else {
        format!("{v:.4e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), fmt_num)
}

fn level_label(x: f64) -> String {
    format!("{x}%")
}

/// Writes one row per report. `header` lines are emitted first as `#` comments.
pub fn write_reports_tsv<W: Write>(
    reports: &[IndicatorReport],
    header: &[String],
    mut out: W,
) -> std::io::Result<()> {
    for h in header {
        writeln!(out, "# {h}")?;
    }
    let counted: Vec<f64> = reports
        .first()
        .map(|r| r.p_top.iter().map(|v| v.x).collect())
        .unwrap_or_default();
    let extrapolated: Vec<f64> = reports
        .iter()
        .find(|r| !r.p_top_extrapolated.is_empty())
        .map(|r| r.p_top_extrapolated.iter().map(|v| v.x).collect())
        .unwrap_or_default();

    let mut cols: Vec<String> = [
        "unit",
        "mode",
        "papers",
        "e_p",
        "alpha",
        "r_squared",
        "status",
    ]
    .map(String::from)
    .to_vec();
    cols.extend(counted.iter().map(|&x| format!("P_top{}", level_label(x))));
    cols.extend(
        extrapolated
            .iter()
            .map(|&x| format!("P'_top{}", level_label(x))),
    );
    cols.extend(
        extrapolated
            .iter()
            .map(|&x| format!("P'_top{}_per_million", level_label(x))),
    );
    writeln!(out, "{}", cols.join("\t"))?;

    for r in reports {
        let mut row = vec![
            r.unit.clone(),
            r.mode.map_or_else(|| "published".into(), |m| m.to_string()),
            fmt_num(r.papers),
            fmt_opt(r.e_p),
            fmt_opt(r.alpha),
            fmt_opt(r.fit.r_squared),
            r.fit.status.to_string(),
        ];
        row.extend(counted.iter().map(|&x| fmt_opt(r.counted_at(x))));
        row.extend(extrapolated.iter().map(|&x| fmt_opt(r.extrapolated_at(x))));
        row.extend(extrapolated.iter().map(|&x| {
            fmt_opt(
                r.per_capita
                    .as_ref()
                    .and_then(|pc| pc.iter().find(|v| v.x == x).map(|v| v.value)),
            )
        }));
        writeln!(out, "{}", row.join("\t"))?;
    }
    Ok(())
}
