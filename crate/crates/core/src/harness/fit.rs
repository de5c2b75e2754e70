use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::run::ResultRow;
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    N,
    D,
    Rho,
}

impl Axis {
    fn value(&self, row: &ResultRow) -> f64 {
        match self {
            Axis::N => row.n as f64,
            Axis::D => row.d as f64,
            Axis::Rho => row.rho,
        }
    }
}

impl FromStr for Axis {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "n" => Ok(Axis::N),
            "d" => Ok(Axis::D),
            "rho" => Ok(Axis::Rho),
            other => Err(HarnessError::config(format!(
                "unknown axis `{other}`; expected n, d or rho"
            ))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::N => "n",
            Axis::D => "d",
            Axis::Rho => "rho",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    #[default]
    Median,
    Mean,
}

impl Statistic {
    fn apply(&self, values: &mut [f64]) -> f64 {
        match self {
            Statistic::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Statistic::Median => {
                values.sort_by(f64::total_cmp);
                let m = values.len() / 2;
                if values.len() % 2 == 1 {
                    values[m]
                } else {
                    0.5 * (values[m - 1] + values[m])
                }
            }
        }
    }
}

impl FromStr for Statistic {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "median" => Ok(Statistic::Median),
            "mean" => Ok(Statistic::Mean),
            other => Err(HarnessError::config(format!(
                "unknown statistic `{other}`; expected median or mean"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub x: f64,
    pub value: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub axis: Axis,
    pub statistic: Statistic,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: Vec<FitPoint>,
    /// Rows left out because their excess risk was missing or nonpositive.
    pub dropped: usize,
}

/// Least squares line through `(x, y)`: `(slope, intercept, r²)`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2)
}

/// Fits `ln statistic(excess_risk)` against `ln x`, one point per distinct
/// axis value.
pub fn rate_fit(rows: &[ResultRow], axis: Axis, statistic: Statistic) -> Result<RateFit, HarnessError> {
    let mut groups: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
    let mut dropped = 0;
    for r in rows {
        let x = axis.value(r);
        match r.excess_risk {
            Some(e) if e > 0.0 && e.is_finite() && x > 0.0 => {
                groups.entry(x.to_bits()).or_insert((x, Vec::new())).1.push(e);
            }
            _ => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!("rate fit dropped {dropped} row(s) with missing or nonpositive excess risk");
    }
    if groups.len() < 3 {
        return Err(HarnessError::config(format!(
            "rate fit along {axis} needs at least 3 distinct values with positive excess risk, got {}",
            groups.len()
        )));
    }
    let mut points: Vec<FitPoint> = groups
        .into_values()
        .map(|(x, mut v)| FitPoint {
            x,
            count: v.len(),
            value: statistic.apply(&mut v),
        })
        .collect();
    points.sort_by(|a, b| a.x.total_cmp(&b.x));
    let lx: Vec<f64> = points.iter().map(|p| p.x.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.value.ln()).collect();
    let (slope, intercept, r2) = ols(&lx, &ly);
    Ok(RateFit {
        axis,
        statistic,
        slope,
        intercept,
        r2,
        points,
        dropped,
    })
}
