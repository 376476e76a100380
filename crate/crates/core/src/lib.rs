//! Percentile-based research efficiency indicators.
//!
//! A world corpus of publications is ranked by citations and cut into top-x%
//! layers. Each analysis unit's cumulative counts C(x) across a percentile grid
//! are fitted to `C(x) = A·x^alpha` on log-log axes, which yields
//!
//! * the e_p index, `P_top1% / P_top10% = 10^-alpha` (0.10 for a system
//!   statistically identical to the world),
//! * counted `P_top x%` values and extrapolated `P'_top x%` values such as the
//!   top 0.01% layer,
//! * per-capita normalizations.
//!
//! Modules follow the pipeline: [`corpus`] → [`ranking`] → [`powerlaw`] →
//! [`indicators`], with [`synth`] generating lognormal test corpora and
//! [`oracle`] recounting layers by brute force.

pub mod corpus;
pub mod error;
pub mod indicators;
pub mod oracle;
pub mod powerlaw;
pub mod ranking;
pub mod synth;

pub use corpus::{
    filter_corpus, load_corpus, AuthorAffiliation, Corpus, CountryCode, FilterSpec, Format,
    Publication, UnitDefinition,
};
pub use error::{Error, Result};
pub use indicators::{
    build_report, ep_from_alpha, ep_from_counts, extrapolate_ptop, per_capita, pp_ratio,
    IndicatorReport, ReportConfig,
};
pub use powerlaw::{
    fit_power_law, two_point_fit, FitStatus, OmissionPolicy, PowerLaw, PowerLawFit,
};
pub use ranking::{
    count_layers, rank_world, AffiliationRule, CountingMode, LayerCounter, LayerCounts,
    PercentileGrid, RankedWorld,
};
pub use synth::{generate_corpus, LognormalSpec, SyntheticWorld};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
