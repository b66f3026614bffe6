//! Navigation metrics (SR, SPL, SNA), per-episode records, aggregate
//! reports, and the waypoint-distance analysis.

mod profile;
mod report;

pub use profile::{spearman, waypoint_distance_profile, DistanceProfile, ProfileRow};
pub use report::{Report, ReportRow};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One logged waypoint decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaypointDecision {
    /// Geodesic distance from the agent to the goal when deciding (m).
    pub goal_distance_m: f64,
    /// Euclidean length of the chosen displacement (m).
    pub waypoint_length_m: f64,
}

/// Everything the metrics need to score one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub success: bool,
    /// Executed path length in meters (cell-to-cell moves only).
    pub path_length_m: f64,
    /// Geodesic start-to-goal distance in meters.
    pub shortest_length_m: f64,
    /// Executed motion actions (turns and moves; Stop excluded).
    pub action_count: u32,
    /// Minimal motion actions from the start pose to the goal.
    pub shortest_action_count: u32,
    pub waypoints: Vec<WaypointDecision>,
}

fn ratio(numer: f64, denom: f64) -> f64 {
    if denom <= 0.0 {
        // Degenerate start-on-goal episodes score full credit when won.
        1.0
    } else {
        numer / denom
    }
}

/// Success rate: fraction of successful episodes.
pub fn sr(records: &[EpisodeRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Config("sr over an empty record set".into()));
    }
    Ok(records.iter().filter(|r| r.success).count() as f64 / records.len() as f64)
}

/// Success weighted by path length: mean of S_i * l_i / max(p_i, l_i).
pub fn spl(records: &[EpisodeRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Config("spl over an empty record set".into()));
    }
    Ok(records
        .iter()
        .map(|r| {
            if r.success {
                ratio(r.shortest_length_m, r.path_length_m.max(r.shortest_length_m))
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / records.len() as f64)
}

/// Success weighted by number of actions: mean of S_i * la_i / max(pa_i, la_i).
pub fn sna(records: &[EpisodeRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Config("sna over an empty record set".into()));
    }
    Ok(records
        .iter()
        .map(|r| {
            if r.success {
                ratio(
                    r.shortest_action_count as f64,
                    (r.action_count.max(r.shortest_action_count)) as f64,
                )
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / records.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(success: bool, l: f64, p: f64, la: u32, pa: u32) -> EpisodeRecord {
        EpisodeRecord {
            success,
            path_length_m: p,
            shortest_length_m: l,
            action_count: pa,
            shortest_action_count: la,
            waypoints: vec![],
        }
    }

    #[test]
    fn perfect_episode_scores_one() {
        let r = [record(true, 5.0, 5.0, 12, 12)];
        assert_eq!(spl(&r).unwrap(), 1.0);
        assert_eq!(sna(&r).unwrap(), 1.0);
        assert_eq!(sr(&r).unwrap(), 1.0);
    }

    #[test]
    fn double_length_success_scores_half_spl() {
        let r = [record(true, 10.0, 20.0, 20, 20)];
        assert_eq!(spl(&r).unwrap(), 0.5);
    }

    #[test]
    fn failures_contribute_zero() {
        let r = [record(false, 1.0, 0.0, 2, 0), record(true, 4.0, 4.0, 8, 8)];
        assert_eq!(spl(&r).unwrap(), 0.5);
        assert_eq!(sna(&r).unwrap(), 0.5);
        assert_eq!(sr(&r).unwrap(), 0.5);
        assert_eq!(sr(&[record(false, 1.0, 1.0, 1, 1)]).unwrap(), 0.0);
    }

    #[test]
    fn spin_in_place_hits_sna_but_not_spl() {
        // Same path cells, twice the actions (extra rotations).
        let r = [record(true, 6.0, 6.0, 14, 28)];
        assert_eq!(spl(&r).unwrap(), 1.0);
        assert_eq!(sna(&r).unwrap(), 0.5);
    }

    #[test]
    fn three_of_four_success_rate() {
        let recs = [
            record(true, 2.0, 2.0, 4, 4),
            record(true, 2.0, 2.0, 4, 4),
            record(true, 2.0, 2.0, 4, 4),
            record(false, 2.0, 2.0, 4, 4),
        ];
        assert_eq!(sr(&recs).unwrap(), 0.75);
    }

    #[test]
    fn empty_record_sets_error() {
        assert!(sr(&[]).is_err());
        assert!(spl(&[]).is_err());
        assert!(sna(&[]).is_err());
    }

    #[test]
    fn spl_and_sna_never_exceed_sr() {
        use rand::Rng;
        let mut rng = crate::seed::rng(5, crate::seed::Domain::Dataset, 0);
        for _ in 0..200 {
            let n = rng.gen_range(1..12);
            let recs: Vec<EpisodeRecord> = (0..n)
                .map(|_| {
                    let l: f64 = rng.gen_range(0.5..10.0);
                    let p = l + rng.gen_range(0.0..10.0);
                    let la = rng.gen_range(1..30u32);
                    record(rng.gen_bool(0.6), l, p, la, la + rng.gen_range(0..30u32))
                })
                .collect();
            let sr_v = sr(&recs).unwrap();
            assert!(spl(&recs).unwrap() <= sr_v + 1e-12);
            assert!(sna(&recs).unwrap() <= sr_v + 1e-12);
        }
    }
}
