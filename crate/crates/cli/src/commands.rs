use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use ep_index::corpus::{
    check_partition, filter_corpus, find_unit, load_corpus, load_units, write_csv, write_jsonl,
    write_units, Corpus, FilterSpec, Format, LoadSummary, UnitDefinition,
};
use ep_index::indicators::{
    build_report_with, published_report, sort_reports, write_reports_tsv, IndicatorReport,
    ReportConfig,
};
use ep_index::powerlaw::{fit_power_law, OmissionPolicy, PowerLawFit};
use ep_index::ranking::{
    read_counts_tsv, write_counts_tsv, AffiliationRule, LayerCounter, LayerCounts, RankedWorld,
};
use ep_index::synth::{Subunit, SyntheticWorld};
use ep_index::{Error, VERSION};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{
    Analysis, CountsArgs, FitArgs, IndicatorsArgs, Input, SimulateArgs, TableFormat, ValidateArgs,
};

#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Bad flags or configuration (exit 2) as opposed to runtime failures (exit 1).
pub fn is_usage_error(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.is::<UsageError>()
            || matches!(
                e.downcast_ref::<Error>(),
                Some(
                    Error::UndefinedUnit(_)
                        | Error::InvalidGrid(_)
                        | Error::Percentile(_)
                        | Error::InvalidUnit { .. }
                        | Error::Synth(_)
                )
            )
    })
}

/// Leading lines of every output table.
#[derive(Debug, Clone, Serialize)]
struct Header {
    tool: String,
    grid: String,
    mode: String,
    policy: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

impl Header {
    fn new(grid: impl fmt::Display, mode: impl fmt::Display, policy: impl fmt::Display) -> Self {
        Header {
            tool: format!("ep-index {VERSION}"),
            grid: grid.to_string(),
            mode: mode.to_string(),
            policy: policy.to_string(),
            notes: Vec::new(),
        }
    }

    fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    fn lines(&self) -> Vec<String> {
        let mut out = vec![
            self.tool.clone(),
            format!("grid: {}", self.grid),
            format!("mode: {}", self.mode),
            format!("policy: {}", self.policy),
        ];
        out.extend(self.notes.iter().cloned());
        out
    }

    fn write(&self, out: &mut dyn Write) -> io::Result<()> {
        for line in self.lines() {
            writeln!(out, "# {line}")?;
        }
        Ok(())
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(out: &mut dyn Write, value: &serde_json::Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn policy(a: &Analysis) -> Result<OmissionPolicy> {
    if !(a.r2_threshold > 0.0 && a.r2_threshold <= 1.0) {
        return Err(usage(format!(
            "--r2-threshold must be in (0, 1], got {}",
            a.r2_threshold
        )));
    }
    if a.min_count.is_nan() || a.min_count < 0.0 {
        return Err(usage(format!(
            "--min-count must be non-negative, got {}",
            a.min_count
        )));
    }
    Ok(OmissionPolicy {
        min_count: a.min_count,
        r2_threshold: a.r2_threshold,
        user_omitted: a.omit.clone(),
        ..OmissionPolicy::default()
    })
}

fn rule(input: &Input) -> AffiliationRule {
    if input.split_multi_affiliation {
        AffiliationRule::Split
    } else {
        AffiliationRule::FullCredit
    }
}

struct Loaded {
    corpus: Corpus,
    units: Vec<UnitDefinition>,
    notes: Vec<String>,
}

fn load(input: &Input) -> Result<Loaded> {
    let (Some(corpus_path), Some(units_path)) = (&input.corpus, &input.units) else {
        return Err(usage("both --corpus and --units are required"));
    };
    let format = input
        .input_format
        .unwrap_or_else(|| Format::from_path(corpus_path));
    let mut corpus = load_corpus(corpus_path, format)
        .with_context(|| format!("loading corpus {}", corpus_path.display()))?;
    let mut notes = vec![format!(
        "corpus: {} ({} publications)",
        corpus_path.display(),
        corpus.len()
    )];
    if let Some((lo, hi)) = input.years {
        let spec = FilterSpec {
            years: Some((lo, hi)),
            ..Default::default()
        };
        corpus = filter_corpus(&corpus, &spec, &[])?;
        if corpus.is_empty() {
            anyhow::bail!("no publications in years {lo}-{hi}");
        }
        notes.push(format!("years: {lo}-{hi} ({} publications)", corpus.len()));
    }
    let all = load_units(units_path)
        .with_context(|| format!("loading units {}", units_path.display()))?;
    let units = if input.only_units.is_empty() {
        all
    } else {
        input
            .only_units
            .iter()
            .map(|n| find_unit(&all, n).cloned())
            .collect::<ep_index::Result<_>>()?
    };
    if let Some(tag) = &input.tag {
        notes.push(format!("tag: {tag}"));
    }
    notes.push(format!(
        "affiliation: {}",
        match rule(input) {
            AffiliationRule::FullCredit => "full-credit",
            AffiliationRule::Split => "split",
        }
    ));
    log::info!(
        "loaded {} publications and {} units",
        corpus.len(),
        units.len()
    );
    Ok(Loaded {
        corpus,
        units,
        notes,
    })
}

fn counter<'a>(input: &'a Input, ranked: &'a RankedWorld, corpus: &'a Corpus) -> LayerCounter<'a> {
    let counter = LayerCounter::new(ranked, corpus).affiliation_rule(rule(input));
    match &input.tag {
        Some(tag) => counter.restrict(|p| p.tags.contains(tag)),
        None => counter,
    }
}

#[derive(Debug, Deserialize)]
struct PublishedRow {
    unit: String,
    p_top10: f64,
    p_top1: f64,
    #[serde(default)]
    population_millions: Option<f64>,
}

fn published_reports(path: &Path, levels: &[f64]) -> Result<Vec<IndicatorReport>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut reports = Vec::new();
    for (i, row) in reader.deserialize::<PublishedRow>().enumerate() {
        let row = row.with_context(|| format!("{} row {}", path.display(), i + 2))?;
        let report = published_report(
            &row.unit,
            row.p_top10,
            row.p_top1,
            row.population_millions,
            levels,
        )
        .with_context(|| format!("{} row {} ({})", path.display(), i + 2, row.unit))?;
        reports.push(report);
    }
    if reports.is_empty() {
        anyhow::bail!("{} has no rows", path.display());
    }
    sort_reports(&mut reports);
    Ok(reports)
}

fn diagnose(reports: &[IndicatorReport]) {
    for r in reports {
        if r.e_p.is_none() {
            log::warn!("{}: fit {}; {}", r.unit, r.status(), r.notes.join("; "));
        }
    }
}

pub fn indicators(args: IndicatorsArgs) -> Result<ExitCode> {
    let a = &args.analysis;
    let (reports, header) = if let Some(path) = &args.from_published {
        let reports = published_reports(path, &a.levels)?;
        let header = Header::new("1,10", "published", "two-point fit")
            .note(format!("published counts: {}", path.display()));
        (reports, header)
    } else {
        let loaded = load(&args.input)?;
        let config = ReportConfig {
            mode: a.mode,
            grid: a.grid.clone(),
            policy: policy(a)?,
            levels: a.levels.clone(),
            affiliation: rule(&args.input),
        };
        let ranked = RankedWorld::new(&loaded.corpus)?;
        let counter = counter(&args.input, &ranked, &loaded.corpus);
        let reports = build_report_with(&counter, &loaded.units, &config)?;
        let mut header = Header::new(&config.grid, config.mode, &config.policy);
        header.notes = loaded.notes;
        (reports, header)
    };
    diagnose(&reports);
    let mut out = open_out(args.out.as_deref())?;
    match args.format {
        TableFormat::Tsv => write_reports_tsv(&reports, &header.lines(), &mut out)?,
        TableFormat::Json => {
            write_json(&mut out, &json!({ "header": header, "reports": reports }))?
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Serialize)]
struct PlotPoint {
    x: f64,
    count: f64,
    fitted: Option<f64>,
    used: bool,
    reason: Option<String>,
}

#[derive(Debug, Serialize)]
struct PlotSample {
    x: f64,
    fitted: f64,
}

#[derive(Debug, Serialize)]
struct PlotData {
    unit: String,
    mode: String,
    points: Vec<PlotPoint>,
    line: Vec<PlotSample>,
    fit: PowerLawFit,
}

fn plot_data(counts: &LayerCounts, fit: PowerLawFit, samples: usize) -> PlotData {
    let fitted = |x: f64| fit.law.map(|l| l.eval(x));
    let mut points: Vec<PlotPoint> = fit
        .points_used
        .iter()
        .map(|p| PlotPoint {
            x: p.x,
            count: p.count,
            fitted: fitted(p.x),
            used: true,
            reason: None,
        })
        .chain(fit.points_omitted.iter().map(|p| PlotPoint {
            x: p.x,
            count: p.count,
            fitted: fitted(p.x),
            used: false,
            reason: Some(p.reason.to_string()),
        }))
        .collect();
    points.sort_by(|a, b| a.x.total_cmp(&b.x));
    let line = match (fit.law, samples) {
        (Some(law), n) if n >= 2 => (0..n)
            .map(|i| {
                let x = 10f64.powf(-2.0 + 4.0 * i as f64 / (n - 1) as f64);
                PlotSample {
                    x,
                    fitted: law.eval(x),
                }
            })
            .collect(),
        _ => Vec::new(),
    };
    PlotData {
        unit: counts.unit.clone(),
        mode: counts.mode.to_string(),
        points,
        line,
        fit,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

fn write_plot_tsv(plots: &[PlotData], out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "unit\tmode\tkind\tx\tcount\tfitted\tflag")?;
    for p in plots {
        for pt in &p.points {
            let flag = match &pt.reason {
                None => "used".to_string(),
                Some(r) => format!("omitted:{r}"),
            };
            writeln!(
                out,
                "{}\t{}\tpoint\t{}\t{}\t{}\t{flag}",
                p.unit,
                p.mode,
                pt.x,
                pt.count,
                opt(pt.fitted)
            )?;
        }
        for s in &p.line {
            writeln!(
                out,
                "{}\t{}\tline\t{}\t-\t{}\t-",
                p.unit, p.mode, s.x, s.fitted
            )?;
        }
        writeln!(
            out,
            "{}\t{}\tstatus\t-\t-\t-\t{} alpha={} a={} r2={}",
            p.unit,
            p.mode,
            p.fit.status,
            opt(p.fit.alpha()),
            opt(p.fit.a()),
            opt(p.fit.r_squared)
        )?;
    }
    Ok(())
}

pub fn fit(args: FitArgs) -> Result<ExitCode> {
    let a = &args.analysis;
    let policy = policy(a)?;
    let (counts, header) = if let Some(path) = &args.counts {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        let mut counts =
            read_counts_tsv(&text).with_context(|| format!("parsing {}", path.display()))?;
        if !args.input.only_units.is_empty() {
            for name in &args.input.only_units {
                if !counts.iter().any(|c| &c.unit == name) {
                    return Err(Error::UndefinedUnit(name.clone()).into());
                }
            }
            counts.retain(|c| args.input.only_units.contains(&c.unit));
        }
        let grid = counts.first().map_or_else(String::new, |c| {
            c.entries
                .iter()
                .map(|e| e.x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        });
        let mut modes: Vec<String> = counts.iter().map(|c| c.mode.to_string()).collect();
        modes.dedup();
        let header =
            Header::new(grid, modes.join(","), &policy).note(format!("counts: {}", path.display()));
        (counts, header)
    } else {
        let loaded = load(&args.input)?;
        let ranked = RankedWorld::new(&loaded.corpus)?;
        let counter = counter(&args.input, &ranked, &loaded.corpus);
        let counts: Vec<LayerCounts> = loaded
            .units
            .iter()
            .map(|u| counter.count(u, a.mode, &a.grid))
            .collect();
        let mut header = Header::new(&a.grid, a.mode, &policy);
        header.notes = loaded.notes;
        (counts, header)
    };
    let plots: Vec<PlotData> = counts
        .iter()
        .map(|c| plot_data(c, fit_power_law(c, &policy), args.samples))
        .collect();
    for p in &plots {
        log::info!("{}: {}", p.unit, p.fit.status);
    }
    let mut out = open_out(args.out.as_deref())?;
    match args.format {
        TableFormat::Tsv => {
            header.write(&mut out)?;
            write_plot_tsv(&plots, &mut out)?;
        }
        TableFormat::Json => write_json(&mut out, &json!({ "header": header, "fits": plots }))?,
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

pub fn simulate(args: SimulateArgs) -> Result<ExitCode> {
    let world = SyntheticWorld {
        world: args.world,
        subunits: args
            .subunits
            .iter()
            .map(|(code, spec)| {
                Ok(Subunit {
                    country: code.parse()?,
                    spec: *spec,
                })
            })
            .collect::<ep_index::Result<_>>()?,
        seed: args.seed,
        year: args.year,
    };
    let corpus = world.generate()?;
    let format = args
        .format
        .or_else(|| args.out.as_deref().map(Format::from_path))
        .unwrap_or(Format::Jsonl);
    let mut out = open_out(args.out.as_deref())?;
    match format {
        Format::Jsonl => write_jsonl(&corpus, &mut out)?,
        Format::Csv => write_csv(&corpus, &mut out)?,
    }
    out.flush()?;
    if let Some(path) = &args.units_out {
        let file =
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        write_units(&world.units(), BufWriter::new(file))?;
    }
    log::info!(
        "generated {} publications with seed {}",
        corpus.len(),
        args.seed
    );
    Ok(ExitCode::SUCCESS)
}

pub fn validate(args: ValidateArgs) -> Result<ExitCode> {
    let format = args
        .input_format
        .unwrap_or_else(|| Format::from_path(&args.corpus));
    let corpus = load_corpus(&args.corpus, format)
        .with_context(|| format!("loading corpus {}", args.corpus.display()))?;
    let summary = LoadSummary::of(&corpus);
    let ranked = RankedWorld::new(&corpus)?;
    let largest_run = ranked.tie_runs().iter().map(|r| r.len).max().unwrap_or(1);

    let mut warnings = Vec::new();
    for code in &summary.unknown_countries {
        warnings.push(format!("country code {code} is not ISO 3166-1 alpha-2"));
    }
    let mut unit_rows = Vec::new();
    if let Some(path) = &args.units {
        let units =
            load_units(path).with_context(|| format!("loading units {}", path.display()))?;
        for u in &units {
            let papers = corpus.iter().filter(|p| p.participates_in(u)).count();
            if papers == 0 {
                warnings.push(format!("unit {} has no publications", u.name));
            }
            unit_rows.push((u.name.clone(), papers));
        }
        if let Err(e) = check_partition(&units) {
            warnings.push(e.to_string());
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let header =
        Header::new("n/a", "n/a", "n/a").note(format!("corpus: {}", args.corpus.display()));
    let years = summary
        .years
        .map_or_else(|| "-".into(), |(lo, hi)| format!("{lo}-{hi}"));
    let mut out = open_out(args.out.as_deref())?;
    match args.format {
        TableFormat::Tsv => {
            header.write(&mut out)?;
            writeln!(out, "section\tkey\tvalue")?;
            writeln!(out, "corpus\tpublications\t{}", summary.publications)?;
            writeln!(out, "corpus\tyears\t{years}")?;
            writeln!(out, "corpus\ttotal_citations\t{}", summary.total_citations)?;
            writeln!(out, "corpus\ttie_runs\t{}", ranked.tie_runs().len())?;
            writeln!(out, "corpus\tlargest_tie_run\t{largest_run}")?;
            for (c, n) in &summary.countries {
                writeln!(out, "country\t{c}\t{n}")?;
            }
            for (t, n) in &summary.tags {
                writeln!(out, "tag\t{t}\t{n}")?;
            }
            for (u, n) in &unit_rows {
                writeln!(out, "unit\t{u}\t{n}")?;
            }
            for w in &warnings {
                writeln!(out, "warning\t-\t{w}")?;
            }
        }
        TableFormat::Json => write_json(
            &mut out,
            &json!({
                "header": header,
                "summary": summary,
                "tie_runs": ranked.tie_runs().len(),
                "largest_tie_run": largest_run,
                "units": unit_rows.iter().map(|(u, n)| json!({"name": u, "publications": n})).collect::<Vec<_>>(),
                "warnings": warnings,
            }),
        )?,
    }
    out.flush()?;
    if args.strict && !warnings.is_empty() {
        eprintln!("error: {} warning(s) in strict mode", warnings.len());
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

pub fn counts(args: CountsArgs) -> Result<ExitCode> {
    let loaded = load(&args.input)?;
    let ranked = RankedWorld::new(&loaded.corpus)?;
    let counter = counter(&args.input, &ranked, &loaded.corpus);
    let counts: Vec<LayerCounts> = loaded
        .units
        .iter()
        .map(|u| counter.count(u, args.mode, &args.grid))
        .collect();
    let mut header = Header::new(&args.grid, args.mode, "n/a");
    header.notes = loaded.notes;
    let mut out = open_out(args.out.as_deref())?;
    header.write(&mut out)?;
    write_counts_tsv(&counts, &mut out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}
