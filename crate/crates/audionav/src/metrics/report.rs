use serde::{Deserialize, Serialize};

use super::{sna, spl, sr, EpisodeRecord};
use crate::Result;

/// Metrics for one evaluation scope (a single seed, an env, or everything).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub scope: String,
    pub episodes: usize,
    pub sr: f64,
    pub spl: f64,
    pub sna: f64,
}

/// Aggregate over evaluation seeds: per-seed rows plus mean and standard
/// deviation across the seed means.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub agent: String,
    pub per_seed: Vec<ReportRow>,
    pub sr_mean: f64,
    pub sr_std: f64,
    pub spl_mean: f64,
    pub spl_std: f64,
    pub sna_mean: f64,
    pub sna_std: f64,
    pub episodes_total: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Report {
    /// Build from per-seed record sets.
    pub fn from_seed_records(agent: &str, per_seed: &[(u64, Vec<EpisodeRecord>)]) -> Result<Report> {
        let mut rows = Vec::new();
        for (seed, records) in per_seed {
            rows.push(ReportRow {
                scope: format!("seed_{seed}"),
                episodes: records.len(),
                sr: sr(records)?,
                spl: spl(records)?,
                sna: sna(records)?,
            });
        }
        let srs: Vec<f64> = rows.iter().map(|r| r.sr).collect();
        let spls: Vec<f64> = rows.iter().map(|r| r.spl).collect();
        let snas: Vec<f64> = rows.iter().map(|r| r.sna).collect();
        let (sr_mean, sr_std) = mean_std(&srs);
        let (spl_mean, spl_std) = mean_std(&spls);
        let (sna_mean, sna_std) = mean_std(&snas);
        Ok(Report {
            agent: agent.to_string(),
            episodes_total: rows.iter().map(|r| r.episodes).sum(),
            per_seed: rows,
            sr_mean,
            sr_std,
            spl_mean,
            spl_std,
            sna_mean,
            sna_std,
        })
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("agent,scope,episodes,sr,spl,sna\n");
        for row in &self.per_seed {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.6}\n",
                self.agent, row.scope, row.episodes, row.sr, row.spl, row.sna
            ));
        }
        out.push_str(&format!(
            "{},mean,{},{:.6},{:.6},{:.6}\n{},std,,{:.6},{:.6},{:.6}\n",
            self.agent,
            self.episodes_total,
            self.sr_mean,
            self.spl_mean,
            self.sna_mean,
            self.agent,
            self.sr_std,
            self.spl_std,
            self.sna_std
        ));
        out
    }

    /// Human-readable table.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<24} {:>9} {:>8} {:>8} {:>8}\n",
            "agent/scope", "episodes", "SR", "SPL", "SNA"
        );
        for row in &self.per_seed {
            out.push_str(&format!(
                "{:<24} {:>9} {:>8.3} {:>8.3} {:>8.3}\n",
                format!("{}/{}", self.agent, row.scope),
                row.episodes,
                row.sr,
                row.spl,
                row.sna
            ));
        }
        out.push_str(&format!(
            "{:<24} {:>9} {:>8.3} {:>8.3} {:>8.3}  (std {:.3}/{:.3}/{:.3})\n",
            format!("{}/mean", self.agent),
            self.episodes_total,
            self.sr_mean,
            self.spl_mean,
            self.sna_mean,
            self.sr_std,
            self.spl_std,
            self.sna_std
        ));
        out
    }
}
