//! Least-squares fits of cumulative layer counts to `N(x) = A·x^alpha`.
//!
//! The regression is ordinary least squares of `log10 C(x)` on `log10 x`,
//! unweighted, with R² computed on the log-log residuals.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::LayerCounts;

/// `N(x) = a · x^alpha`, with `a` the count at x = 1%.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub a: f64,
    pub alpha: f64,
}

impl PowerLaw {
    pub fn eval(&self, x: f64) -> f64 {
        self.a * x.powf(self.alpha)
    }

    /// Normalized form `N(x) = N·(x/100)^alpha` for a unit with `total` papers.
    pub fn from_total(total: f64, alpha: f64) -> Self {
        PowerLaw {
            a: total * 100f64.powf(-alpha),
            alpha,
        }
    }

    /// Exponent recovered from an e_p value, `alpha = -log10 e_p`.
    pub fn alpha_from_ep(ep: f64) -> f64 {
        -ep.log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitStatus {
    Ok,
    /// No single power law reaches the R² threshold even after tail omissions.
    Biphasic,
    /// Fewer than three usable points.
    Insufficient,
}

impl fmt::Display for FitStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitStatus::Ok => "ok",
            FitStatus::Biphasic => "biphasic",
            FitStatus::Insufficient => "insufficient",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmissionReason {
    User,
    TailDeviation,
    LowCount,
    ZeroCount,
}

impl fmt::Display for OmissionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OmissionReason::User => "user",
            OmissionReason::TailDeviation => "tail-deviation",
            OmissionReason::LowCount => "low-count",
            OmissionReason::ZeroCount => "zero-count",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub count: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmittedPoint {
    pub x: f64,
    pub count: f64,
    pub reason: OmissionReason,
}

/// Which grid points are excluded from the regression.
///
/// Points are dropped in this order: user-listed levels; counts below
/// `min_count` (low-count) or equal to zero (zero-count). After the first fit
/// the highest remaining level is dropped as a tail deviation when either the
/// fit's R² is below `r2_threshold` or that point sits more than
/// `tail_tolerance` (log10 units) off the line fitted to the other points;
/// this repeats at most `max_tail_drops` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmissionPolicy {
    pub min_count: f64,
    pub r2_threshold: f64,
    pub tail_tolerance: f64,
    pub max_tail_drops: usize,
    pub user_omitted: Vec<f64>,
}

impl Default for OmissionPolicy {
    fn default() -> Self {
        OmissionPolicy {
            min_count: 10.0,
            r2_threshold: 0.98,
            tail_tolerance: 0.05,
            max_tail_drops: 2,
            user_omitted: Vec::new(),
        }
    }
}

impl fmt::Display for OmissionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "min_count={} r2_threshold={} tail_tolerance={} max_tail_drops={}",
            self.min_count, self.r2_threshold, self.tail_tolerance, self.max_tail_drops
        )?;
        if !self.user_omitted.is_empty() {
            let xs: Vec<String> = self.user_omitted.iter().map(f64::to_string).collect();
            write!(f, " omit={}", xs.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Fitted law; absent when the status is `insufficient`.
    pub law: Option<PowerLaw>,
    pub r_squared: Option<f64>,
    pub points_used: Vec<Point>,
    pub points_omitted: Vec<OmittedPoint>,
    pub status: FitStatus,
}

impl PowerLawFit {
    pub fn alpha(&self) -> Option<f64> {
        self.law.map(|l| l.alpha)
    }

    pub fn a(&self) -> Option<f64> {
        self.law.map(|l| l.a)
    }

    fn insufficient(points_used: Vec<Point>, points_omitted: Vec<OmittedPoint>) -> Self {
        PowerLawFit {
            law: None,
            r_squared: None,
            points_used,
            points_omitted,
            status: FitStatus::Insufficient,
        }
    }
}

/// Plain log-log least squares over at least two points with distinct x and
/// positive counts. Returns the law and its R² (1 when the counts are flat).
pub fn regress(points: &[Point]) -> Option<(PowerLaw, f64)> {
    if points.len() < 2 || points.iter().any(|p| !(p.count > 0.0 && p.x > 0.0)) {
        return None;
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.x.log10()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.count.log10()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    // Exactly collinear data may leave rounding-level residuals.
    let r2 = if ss_tot == 0.0 || ss_res <= 1e-28 * ss_tot.max(1.0) {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Some((
        PowerLaw {
            a: 10f64.powf(intercept),
            alpha: slope,
        },
        r2,
    ))
}

pub fn fit_power_law(counts: &LayerCounts, policy: &OmissionPolicy) -> PowerLawFit {
    let points: Vec<Point> = counts
        .entries
        .iter()
        .map(|e| Point {
            x: e.x,
            count: e.count,
        })
        .collect();
    fit_points(&points, policy)
}

pub fn fit_points(points: &[Point], policy: &OmissionPolicy) -> PowerLawFit {
    let mut used = Vec::new();
    let mut omitted = Vec::new();
    for &p in points {
        let reason = if policy.user_omitted.contains(&p.x) {
            Some(OmissionReason::User)
        } else if p.count <= 0.0 {
            Some(OmissionReason::ZeroCount)
        } else if p.count < policy.min_count {
            Some(OmissionReason::LowCount)
        } else {
            None
        };
        match reason {
            Some(reason) => omitted.push(OmittedPoint {
                x: p.x,
                count: p.count,
                reason,
            }),
            None => used.push(p),
        }
    }
    used.sort_by(|a, b| a.x.total_cmp(&b.x));
    if used.len() < 3 {
        return PowerLawFit::insufficient(used, omitted);
    }
    let Some((mut law, mut r2)) = regress(&used) else {
        return PowerLawFit::insufficient(used, omitted);
    };

    for _ in 0..policy.max_tail_drops {
        if used.len() <= 3 {
            break;
        }
        let (tail, rest) = used.split_last().expect("non-empty");
        let Some((rest_law, rest_r2)) = regress(rest) else {
            break;
        };
        let deviation = (tail.count.log10() - rest_law.eval(tail.x).log10()).abs();
        if r2 >= policy.r2_threshold && deviation <= policy.tail_tolerance {
            break;
        }
        omitted.push(OmittedPoint {
            x: tail.x,
            count: tail.count,
            reason: OmissionReason::TailDeviation,
        });
        used.pop();
        law = rest_law;
        r2 = rest_r2;
    }

    let status = if r2 >= policy.r2_threshold {
        FitStatus::Ok
    } else {
        FitStatus::Biphasic
    };
    PowerLawFit {
        law: Some(law),
        r_squared: Some(r2),
        points_used: used,
        points_omitted: omitted,
        status,
    }
}

/// Closed-form law through the published P_top 1% and P_top 10% counts:
/// `A = P_top1%`, `alpha = log10(P_top10% / P_top1%)`.
pub fn two_point_fit(p_top10: f64, p_top1: f64) -> Result<PowerLawFit> {
    if !(p_top10.is_finite() && p_top1.is_finite()) || p_top1 < 0.0 {
        return Err(Error::UndefinedIndicator(format!(
            "invalid counts P_top10% = {p_top10}, P_top1% = {p_top1}"
        )));
    }
    if p_top10 < p_top1 {
        return Err(Error::NonCumulative { p_top10, p_top1 });
    }
    let points = vec![
        Point {
            x: 1.0,
            count: p_top1,
        },
        Point {
            x: 10.0,
            count: p_top10,
        },
    ];
    if p_top1 == 0.0 {
        return Ok(PowerLawFit::insufficient(points, Vec::new()));
    }
    Ok(PowerLawFit {
        law: Some(PowerLaw {
            a: p_top1,
            alpha: (p_top10 / p_top1).log10(),
        }),
        r_squared: Some(1.0),
        points_used: points,
        points_omitted: Vec::new(),
        status: FitStatus::Ok,
    })
}
