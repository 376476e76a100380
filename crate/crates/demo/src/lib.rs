//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each operation has a plain Rust function returning JSON, which the tests
//! call natively, and a `#[wasm_bindgen]` wrapper exported to JavaScript.

use ep_index::corpus::UnitDefinition;
use ep_index::indicators::{build_report, published_report, ReportConfig};
use ep_index::powerlaw::{fit_points, OmissionPolicy, Point, PowerLawFit};
use ep_index::ranking::{CountingMode, LayerCounter, PercentileGrid, RankedWorld};
use ep_index::synth::{LognormalSpec, SyntheticWorld};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

const LINE_SAMPLES: usize = 41;

#[derive(Debug, Serialize)]
struct PlotPoint {
    x: f64,
    count: f64,
    used: bool,
    reason: Option<String>,
}

#[derive(Debug, Serialize)]
struct Plot {
    points: Vec<PlotPoint>,
    line: Vec<[f64; 2]>,
}

fn plot(fit: &PowerLawFit) -> Plot {
    let mut points: Vec<PlotPoint> = fit
        .points_used
        .iter()
        .map(|p| PlotPoint {
            x: p.x,
            count: p.count,
            used: true,
            reason: None,
        })
        .chain(fit.points_omitted.iter().map(|p| PlotPoint {
            x: p.x,
            count: p.count,
            used: false,
            reason: Some(p.reason.to_string()),
        }))
        .collect();
    points.sort_by(|a, b| a.x.total_cmp(&b.x));
    let line = fit
        .law
        .map(|law| {
            (0..LINE_SAMPLES)
                .map(|i| {
                    let x = 10f64.powf(-2.0 + 4.0 * i as f64 / (LINE_SAMPLES - 1) as f64);
                    [x, law.eval(x)]
                })
                .collect()
        })
        .unwrap_or_default();
    Plot { points, line }
}

fn levels(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("not a number: {t:?}"))
        })
        .collect()
}

/// Two-point indicators from published P_top10% and P_top1%.
pub fn published(
    p_top10: f64,
    p_top1: f64,
    population_millions: f64,
    levels_csv: &str,
) -> Result<String, String> {
    let population = (population_millions > 0.0).then_some(population_millions);
    let report = published_report("unit", p_top10, p_top1, population, &levels(levels_csv)?)
        .map_err(|e| e.to_string())?;
    let plot = plot(&report.fit);
    Ok(json!({ "report": report, "plot": plot }).to_string())
}

/// Fit of cumulative counts given one per grid level.
pub fn fit_counts(
    grid: &str,
    counts_csv: &str,
    min_count: f64,
    r2_threshold: f64,
) -> Result<String, String> {
    let grid: PercentileGrid = grid.parse().map_err(|e: ep_index::Error| e.to_string())?;
    let counts = levels(counts_csv)?;
    if counts.len() != grid.levels().len() {
        return Err(format!(
            "{} counts for {} grid levels",
            counts.len(),
            grid.levels().len()
        ));
    }
    let points: Vec<Point> = grid
        .levels()
        .iter()
        .zip(counts)
        .map(|(&x, count)| Point { x, count })
        .collect();
    let policy = OmissionPolicy {
        min_count,
        r2_threshold,
        ..OmissionPolicy::default()
    };
    let fit = fit_points(&points, &policy);
    let e_p = fit.alpha().map(ep_index::ep_from_alpha);
    let plot = plot(&fit);
    Ok(json!({ "fit": fit, "e_p": e_p, "plot": plot }).to_string())
}

/// A lognormal world with one subunit; returns e_p and layer counts for the
/// subunit ("SG") and the rest of the world ("ZZ").
pub fn simulate(
    world_mu: f64,
    sigma: f64,
    world_n: usize,
    unit_mu: f64,
    unit_n: usize,
    seed: u64,
) -> Result<String, String> {
    let w = SyntheticWorld::new(LognormalSpec::new(world_mu, sigma, world_n), seed)
        .with_subunit("SG", LognormalSpec::new(unit_mu, sigma, unit_n));
    let corpus = w.generate().map_err(|e| e.to_string())?;
    let units: Vec<UnitDefinition> = w.units();
    let config = ReportConfig {
        mode: CountingMode::Domestic,
        ..ReportConfig::default()
    };
    let reports = build_report(&corpus, &units, &config).map_err(|e| e.to_string())?;
    let ranked = RankedWorld::new(&corpus).map_err(|e| e.to_string())?;
    let counter = LayerCounter::new(&ranked, &corpus);
    let plots: Vec<_> = reports
        .iter()
        .map(|r| {
            let unit = units.iter().find(|u| u.name == r.unit).expect("unit from report");
            let counts = counter.count(unit, CountingMode::Domestic, &config.grid);
            json!({ "unit": r.unit, "e_p": r.e_p, "alpha": r.alpha, "status": r.fit.status, "plot": plot(&r.fit), "counts": counts.entries })
        })
        .collect();
    Ok(json!({ "publications": corpus.len(), "units": plots }).to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = published)]
pub fn published_js(
    p_top10: f64,
    p_top1: f64,
    population_millions: f64,
    levels_csv: &str,
) -> Result<String, JsError> {
    js(published(p_top10, p_top1, population_millions, levels_csv))
}

#[wasm_bindgen(js_name = fitCounts)]
pub fn fit_counts_js(
    grid: &str,
    counts_csv: &str,
    min_count: f64,
    r2_threshold: f64,
) -> Result<String, JsError> {
    js(fit_counts(grid, counts_csv, min_count, r2_threshold))
}

#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(
    world_mu: f64,
    sigma: f64,
    world_n: u32,
    unit_mu: f64,
    unit_n: u32,
    seed: u32,
) -> Result<String, JsError> {
    js(simulate(
        world_mu,
        sigma,
        world_n as usize,
        unit_mu,
        unit_n as usize,
        seed as u64,
    ))
}

#[wasm_bindgen]
pub fn version() -> String {
    ep_index::VERSION.to_string()
}
