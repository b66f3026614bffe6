use statrs::distribution::{ContinuousCDF, StudentsT};

use super::EpisodeRecord;
use crate::{Error, Result};

/// One goal-distance bin of the waypoint-distance analysis.
#[derive(Debug, Clone)]
pub struct ProfileRow {
    pub bin_lo_m: f64,
    pub bin_hi_m: f64,
    pub count: usize,
    pub mean_waypoint_m: f64,
    pub q25_m: f64,
    pub median_m: f64,
    pub q75_m: f64,
}

#[derive(Debug, Clone)]
pub struct DistanceProfile {
    pub rows: Vec<ProfileRow>,
    /// Spearman rank correlation between goal distance and waypoint length.
    pub spearman: f64,
    /// One-sided p-value for positive correlation (t approximation).
    pub p_value: f64,
    pub decisions: usize,
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rank = |v: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut ranks = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                ranks[idx[k]] = avg;
            }
            i = j + 1;
        }
        ranks
    };
    let rx = rank(xs);
    let ry = rank(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..xs.len() {
        cov += (rx[i] - mx) * (ry[i] - my);
        vx += (rx[i] - mx).powi(2);
        vy += (ry[i] - my).powi(2);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

/// Bin waypoint decisions by geodesic goal distance and correlate distance
/// against chosen displacement length.
pub fn waypoint_distance_profile(
    records: &[EpisodeRecord],
    bin_width_m: f64,
) -> Result<DistanceProfile> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in records {
        for w in &r.waypoints {
            xs.push(w.goal_distance_m);
            ys.push(w.waypoint_length_m);
        }
    }
    if xs.is_empty() {
        return Err(Error::Config("no waypoint decisions logged".into()));
    }
    let max_d = xs.iter().cloned().fold(0.0f64, f64::max);
    let bins = ((max_d / bin_width_m).floor() as usize) + 1;
    let mut grouped: Vec<Vec<f64>> = vec![Vec::new(); bins];
    for (&x, &y) in xs.iter().zip(&ys) {
        grouped[(x / bin_width_m).floor() as usize].push(y);
    }
    let rows = grouped
        .into_iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .map(|(i, mut g)| {
            g.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let q = |f: f64| g[((g.len() - 1) as f64 * f).round() as usize];
            ProfileRow {
                bin_lo_m: i as f64 * bin_width_m,
                bin_hi_m: (i + 1) as f64 * bin_width_m,
                count: g.len(),
                mean_waypoint_m: g.iter().sum::<f64>() / g.len() as f64,
                q25_m: q(0.25),
                median_m: q(0.5),
                q75_m: q(0.75),
            }
        })
        .collect();

    let rho = spearman(&xs, &ys);
    let n = xs.len() as f64;
    let p_value = if n > 2.0 && rho.abs() < 1.0 {
        let t = rho * ((n - 2.0) / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, n - 2.0)
            .map_err(|e| Error::Config(format!("t distribution: {e}")))?;
        1.0 - dist.cdf(t)
    } else if rho >= 1.0 {
        0.0
    } else {
        1.0
    };
    Ok(DistanceProfile { rows, spearman: rho, p_value, decisions: xs.len() })
}
