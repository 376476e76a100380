mod common;

use common::{rel_close, COUNTRY_TABLE};
use ep_index::corpus::{Corpus, UnitDefinition};
use ep_index::indicators::{
    build_report, ep_from_alpha, ep_from_counts, extrapolate_ptop, pp_ratio, published_report,
    ReportConfig,
};
use ep_index::powerlaw::{fit_points, regress, two_point_fit, FitStatus, OmissionPolicy, Point};
use ep_index::ranking::{CountingMode, DEFAULT_LEVELS};
use ep_index::synth::{LognormalSpec, SyntheticWorld};
use proptest::prelude::*;

fn exact_points(a: f64, alpha: f64) -> Vec<Point> {
    DEFAULT_LEVELS
        .iter()
        .map(|&x| Point {
            x,
            count: a * x.powf(alpha),
        })
        .collect()
}

proptest! {
    #[test]
    fn exact_data_is_recovered(log_a in 0.0f64..9.0, alpha in 0.3f64..1.8) {
        let a = 10f64.powf(log_a).max(10.0);
        let fit = fit_points(&exact_points(a, alpha), &OmissionPolicy::default());
        prop_assert_eq!(fit.status, FitStatus::Ok);
        prop_assert!((fit.alpha().unwrap() - alpha).abs() < 1e-9);
        prop_assert!(rel_close(fit.a().unwrap(), a, 1e-9));
        prop_assert!((fit.r_squared.unwrap() - 1.0).abs() < 1e-12);
        prop_assert!(fit.points_omitted.is_empty());
    }

    #[test]
    fn scale_equivariance(counts in prop::collection::vec(10.0f64..1e5, 9), s in 0.01f64..100.0) {
        let mut counts = counts;
        counts.sort_by(f64::total_cmp);
        let pts: Vec<Point> = DEFAULT_LEVELS.iter().zip(&counts).map(|(&x, &count)| Point { x, count }).collect();
        let scaled: Vec<Point> = pts.iter().map(|p| Point { x: p.x, count: p.count * s }).collect();
        let (l1, r1) = regress(&pts).unwrap();
        let (l2, r2) = regress(&scaled).unwrap();
        prop_assert!((l1.alpha - l2.alpha).abs() < 1e-9);
        prop_assert!((r1 - r2).abs() < 1e-9);
        prop_assert!(rel_close(l2.a, l1.a * s, 1e-9));
    }

    #[test]
    fn omissions_are_deterministic(counts in prop::collection::vec(0.0f64..1e4, 9)) {
        let pts: Vec<Point> = DEFAULT_LEVELS.iter().zip(&counts).map(|(&x, &count)| Point { x, count }).collect();
        let policy = OmissionPolicy::default();
        prop_assert_eq!(fit_points(&pts, &policy), fit_points(&pts, &policy));
    }

    #[test]
    fn two_point_paths_agree(p10 in 1.0f64..1e7, frac in 0.001f64..1.0) {
        let p1 = p10 * frac;
        let fit = two_point_fit(p10, p1).unwrap();
        let ep = ep_from_counts(p10, p1).unwrap();
        prop_assert!(rel_close(ep_from_alpha(fit.alpha().unwrap()), ep, 1e-12));
        let extrapolated = extrapolate_ptop(&fit, 0.01).unwrap();
        prop_assert!(rel_close(extrapolated, p1 * ep * ep, 1e-12));
        let (law, _) = regress(&fit.points_used).unwrap();
        prop_assert!((law.alpha - fit.alpha().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pp_ratio_symmetry(a1 in 0.2f64..2.0, a2 in 0.2f64..2.0, x in 0.001f64..100.0) {
        prop_assert_eq!(pp_ratio(a1, a1, x).unwrap(), 1.0);
        let forward = pp_ratio(a1, a2, x).unwrap();
        let back = pp_ratio(a2, a1, x).unwrap();
        prop_assert!((forward * back - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extrapolation_scales_as_ep_squared(p1 in 1.0f64..1e5, ep_a in 0.02f64..0.3, ep_b in 0.02f64..0.3) {
        // Equal P_top1%, different e_p: P'_top0.01% ratio is the squared e_p ratio.
        let fa = two_point_fit(p1 / ep_a, p1).unwrap();
        let fb = two_point_fit(p1 / ep_b, p1).unwrap();
        let ratio = extrapolate_ptop(&fa, 0.01).unwrap() / extrapolate_ptop(&fb, 0.01).unwrap();
        prop_assert!(rel_close(ratio, (ep_a / ep_b).powi(2), 1e-9));
    }
}

#[test]
fn country_per_capita_with_back_derived_populations() {
    for (name, p10, p1, _, _, per_million) in COUNTRY_TABLE {
        // Population back-derived from the published P' and per-capita columns.
        let published_p = COUNTRY_TABLE.iter().find(|r| r.0 == name).unwrap().4;
        let population = published_p / per_million;
        let r = published_report(name, p10, p1, Some(population), &[0.01]).unwrap();
        let pc = r.per_capita.unwrap()[0].value;
        assert!(
            rel_close(pc, per_million, 0.02),
            "{name}: {pc} vs {per_million}"
        );
    }
}

fn world_with_clone(seed: u64) -> (Corpus, Vec<UnitDefinition>) {
    let w = SyntheticWorld::new(LognormalSpec::new(1.5, 1.1, 30_000), seed)
        .with_subunit("SG", LognormalSpec::new(1.8, 1.1, 3_000));
    let corpus = w.generate().unwrap();
    // "DB" owns exact duplicates of every SG paper, so it is SG at double size.
    let mut pubs = corpus.publications().to_vec();
    let clones: Vec<_> = pubs
        .iter()
        .filter(|p| p.authors[0].countries.iter().any(|c| c.as_str() == "SG"))
        .flat_map(|p| {
            (0..2).map(move |j| {
                let mut q = p.clone();
                q.id = format!("{}-c{j}", p.id);
                q.authors[0] = ep_index::AuthorAffiliation::of(&["DB"]);
                q
            })
        })
        .collect();
    pubs.extend(clones);
    let units = vec![UnitDefinition::country("SG"), UnitDefinition::country("DB")];
    (Corpus::new(pubs).unwrap(), units)
}

#[test]
fn doubled_clone_has_same_ep_and_double_extrapolation() {
    let (corpus, units) = world_with_clone(11);
    let config = ReportConfig {
        mode: CountingMode::Domestic,
        ..Default::default()
    };
    let reports = build_report(&corpus, &units, &config).unwrap();
    let get = |n: &str| reports.iter().find(|r| r.unit == n).unwrap();
    let (sg, db) = (get("SG"), get("DB"));
    assert_eq!(sg.status(), FitStatus::Ok);
    assert!((sg.e_p.unwrap() - db.e_p.unwrap()).abs() < 1e-9);
    assert!(rel_close(
        db.extrapolated_at(0.01).unwrap(),
        2.0 * sg.extrapolated_at(0.01).unwrap(),
        1e-9
    ));
    assert!((db.papers - 2.0 * sg.papers).abs() < 1e-9);
}

#[test]
fn reports_are_sorted_and_invariants_hold() {
    let w = SyntheticWorld::new(LognormalSpec::new(1.5, 1.1, 40_000), 5)
        .with_subunit("SG", LognormalSpec::new(1.9, 1.1, 4_000))
        .with_subunit("DE", LognormalSpec::new(1.2, 1.1, 6_000))
        .with_subunit("US", LognormalSpec::new(1.5, 1.1, 8_000));
    let corpus = w.generate().unwrap();
    let mut units = w.units();
    units.push(UnitDefinition::country("FR"));
    let reports = build_report(
        &corpus,
        &units,
        &ReportConfig {
            mode: CountingMode::Domestic,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(reports[0].unit, "SG");
    assert_eq!(reports[3].unit, "DE");
    assert_eq!(reports[4].unit, "FR");
    assert!(reports[..4]
        .windows(2)
        .all(|w| w[0].e_p.unwrap() >= w[1].e_p.unwrap()));
    for r in &reports[..4] {
        assert!((r.e_p.unwrap() - 10f64.powf(-r.alpha.unwrap())).abs() < 1e-12);
        assert!(r.p_top.windows(2).all(|w| w[0].value <= w[1].value));
    }
    assert_eq!(reports[4].status(), FitStatus::Insufficient);
}
