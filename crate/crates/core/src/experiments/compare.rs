//! Comparison of a simulated run with weekly new-case counts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{first_argmax, Trajectory};
use crate::error::{Error, Result};
use crate::network::io::read_records;

pub const REFERENCE_HEADER: &str = "week_start_day,new_cases";
pub const WEEK_DAYS: f64 = 7.0;

/// Reads `week_start_day,new_cases` rows with strictly increasing weeks.
pub fn read_reference(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    #[derive(Deserialize)]
    struct Row {
        week_start_day: f64,
        new_cases: f64,
    }
    let path = path.as_ref();
    let rows: Vec<Row> = read_records(path, &["week_start_day", "new_cases"])?;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
    for (k, r) in rows.iter().enumerate() {
        let bad = |message: &str| Error::Parse {
            path: path.to_owned(),
            line: k as u64 + 2,
            message: message.to_string(),
        };
        if !r.week_start_day.is_finite() || !(r.new_cases >= 0.0 && r.new_cases.is_finite()) {
            return Err(bad("week start and case count must be finite, cases non-negative"));
        }
        if out.last().is_some_and(|&(w, _)| r.week_start_day <= w) {
            return Err(bad("week starts must be strictly increasing"));
        }
        out.push((r.week_start_day, r.new_cases));
    }
    Ok(out)
}

/// Seroprevalence at `t`, linearly interpolated between outputs; `None`
/// outside the recorded window.
pub fn seroprevalence_at(traj: &Trajectory, t: f64) -> Option<f64> {
    let times = &traj.times;
    let (first, last) = (*times.first()?, *times.last()?);
    let tol = 1e-9 * (1.0 + last.abs());
    if t < first - tol || t > last + tol {
        return None;
    }
    let k = times.partition_point(|&s| s < t - tol);
    if k < times.len() && (times[k] - t).abs() <= tol {
        return Some(traj.seroprevalence[k]);
    }
    let (t0, t1) = (times[k - 1], times[k]);
    let (s0, s1) = (traj.seroprevalence[k - 1], traj.seroprevalence[k]);
    Some(s0 + (t - t0) / (t1 - t0) * (s1 - s0))
}

/// New cases in the week starting at each of `week_starts`, as the rise in
/// seroprevalence over the week; `None` where the week leaves the run.
pub fn new_cases_in_weeks(traj: &Trajectory, week_starts: &[f64]) -> Vec<Option<f64>> {
    week_starts
        .iter()
        .map(|&w| Some(seroprevalence_at(traj, w + WEEK_DAYS)? - seroprevalence_at(traj, w)?))
        .collect()
}

/// Consecutive complete weeks from the start of the run.
pub fn weekly_new_cases(traj: &Trajectory) -> Vec<(f64, f64)> {
    let (Some(&t0), Some(&t1)) = (traj.times.first(), traj.times.last()) else {
        return Vec::new();
    };
    let weeks = ((t1 - t0) / WEEK_DAYS + 1e-9).floor() as usize;
    let starts: Vec<f64> = (0..weeks).map(|k| t0 + k as f64 * WEEK_DAYS).collect();
    starts
        .iter()
        .zip(new_cases_in_weeks(traj, &starts))
        .filter_map(|(&w, c)| Some((w, c?)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    /// Weeks present in both series.
    pub weeks: usize,
    pub rmse: f64,
    /// Simulated peak week minus reference peak week, days.
    pub peak_time_offset: f64,
    /// Simulated minus reference cases summed over the overlap.
    pub final_seroprevalence_gap: f64,
    /// `(week_start_day, simulated, reference)` over the overlap.
    pub rows: Vec<(f64, f64, f64)>,
}

pub fn compare_timeseries(simulated: &Trajectory, reference: &[(f64, f64)]) -> Result<Comparison> {
    let starts: Vec<f64> = reference.iter().map(|r| r.0).collect();
    let rows: Vec<(f64, f64, f64)> = reference
        .iter()
        .zip(new_cases_in_weeks(simulated, &starts))
        .filter_map(|(&(w, obs), sim)| Some((w, sim?, obs)))
        .collect();
    if rows.is_empty() {
        return Err(Error::InvalidInput(
            "reference weeks do not overlap the simulated window".into(),
        ));
    }
    let n = rows.len() as f64;
    let rmse = (rows.iter().map(|&(_, s, o)| (s - o).powi(2)).sum::<f64>() / n).sqrt();
    let sim_peak = first_argmax(rows.iter().map(|r| r.1)).unwrap();
    let ref_peak = first_argmax(rows.iter().map(|r| r.2)).unwrap();
    let gap = rows.iter().map(|r| r.1 - r.2).sum();
    Ok(Comparison {
        weeks: rows.len(),
        rmse,
        peak_time_offset: rows[sim_peak].0 - rows[ref_peak].0,
        final_seroprevalence_gap: gap,
        rows,
    })
}
