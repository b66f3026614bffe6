use serde::{Deserialize, Serialize};

use super::episode::EpisodeSetup;
use crate::env::{step, Action, AgentPose, EpisodeState, GridEnvironment};
use crate::metrics::EpisodeRecord;
use crate::{Error, Result};

/// One primitive step as logged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub action: Action,
    pub pose_after: AgentPose,
    pub reward: f64,
    pub collided: bool,
}

/// One waypoint decision as logged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaypointRecord {
    pub pose: AgentPose,
    pub delta: (i32, i32),
    pub value: Option<f32>,
    pub masked_cells: usize,
    pub goal_distance_m: f64,
    pub waypoint_length_m: f64,
}

/// Run-length-encoded thresholded map channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RleGrid {
    pub size: usize,
    pub runs: Vec<(u8, u32)>,
}

impl RleGrid {
    pub fn decode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.size * self.size);
        for &(bit, n) in &self.runs {
            out.extend(std::iter::repeat(bit).take(n as usize));
        }
        out
    }
}

/// Replayable trajectory: the embedded environment, the episode setup, all
/// primitive steps and waypoint decisions, the final record, and a map
/// snapshot. Re-simulating the logged actions must reproduce the logged
/// poses exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub agent: String,
    pub env_json: String,
    pub setup: EpisodeSetup,
    pub mic_noise_sigma: f64,
    pub steps: Vec<StepRecord>,
    pub waypoints: Vec<WaypointRecord>,
    pub record: EpisodeRecord,
    pub map_occupied: RleGrid,
    pub map_explored: RleGrid,
}

impl TrajectoryLog {
    /// JSON-lines serialization: a header object, one line per primitive
    /// step, one per waypoint decision, and a final record line.
    pub fn to_json_lines(&self) -> String {
        #[derive(Serialize)]
        struct Header<'a> {
            kind: &'a str,
            agent: &'a str,
            env: &'a str,
            setup: &'a EpisodeSetup,
            mic_noise_sigma: f64,
        }
        #[derive(Serialize)]
        struct StepLine<'a> {
            kind: &'a str,
            t: usize,
            #[serde(flatten)]
            step: &'a StepRecord,
        }
        #[derive(Serialize)]
        struct WpLine<'a> {
            kind: &'a str,
            k: usize,
            #[serde(flatten)]
            wp: &'a WaypointRecord,
        }
        #[derive(Serialize)]
        struct Footer<'a> {
            kind: &'a str,
            record: &'a EpisodeRecord,
            map_occupied: &'a RleGrid,
            map_explored: &'a RleGrid,
        }
        let mut out = String::new();
        out.push_str(
            &serde_json::to_string(&Header {
                kind: "header",
                agent: &self.agent,
                env: &self.env_json,
                setup: &self.setup,
                mic_noise_sigma: self.mic_noise_sigma,
            })
            .expect("header serializes"),
        );
        out.push('\n');
        for (t, step) in self.steps.iter().enumerate() {
            out.push_str(
                &serde_json::to_string(&StepLine { kind: "step", t, step })
                    .expect("step serializes"),
            );
            out.push('\n');
        }
        for (k, wp) in self.waypoints.iter().enumerate() {
            out.push_str(
                &serde_json::to_string(&WpLine { kind: "waypoint", k, wp })
                    .expect("waypoint serializes"),
            );
            out.push('\n');
        }
        out.push_str(
            &serde_json::to_string(&Footer {
                kind: "record",
                record: &self.record,
                map_occupied: &self.map_occupied,
                map_explored: &self.map_explored,
            })
            .expect("footer serializes"),
        );
        out.push('\n');
        out
    }

    pub fn from_json_lines(text: &str) -> Result<TrajectoryLog> {
        #[derive(Deserialize)]
        struct Tagged {
            kind: String,
        }
        #[derive(Deserialize)]
        struct Header {
            agent: String,
            env: String,
            setup: EpisodeSetup,
            mic_noise_sigma: f64,
        }
        #[derive(Deserialize)]
        struct StepLine {
            #[serde(flatten)]
            step: StepRecord,
        }
        #[derive(Deserialize)]
        struct WpLine {
            #[serde(flatten)]
            wp: WaypointRecord,
        }
        #[derive(Deserialize)]
        struct Footer {
            record: EpisodeRecord,
            map_occupied: RleGrid,
            map_explored: RleGrid,
        }
        let mut header: Option<Header> = None;
        let mut steps = Vec::new();
        let mut waypoints = Vec::new();
        let mut footer: Option<Footer> = None;
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let tag: Tagged = serde_json::from_str(line)?;
            match tag.kind.as_str() {
                "header" => header = Some(serde_json::from_str(line)?),
                "step" => steps.push(serde_json::from_str::<StepLine>(line)?.step),
                "waypoint" => waypoints.push(serde_json::from_str::<WpLine>(line)?.wp),
                "record" => footer = Some(serde_json::from_str(line)?),
                other => {
                    return Err(Error::Config(format!("unknown log line kind {other:?}")))
                }
            }
        }
        let header = header.ok_or_else(|| Error::Config("log missing header".into()))?;
        let footer = footer.ok_or_else(|| Error::Config("log missing record".into()))?;
        Ok(TrajectoryLog {
            agent: header.agent,
            env_json: header.env,
            setup: header.setup,
            mic_noise_sigma: header.mic_noise_sigma,
            steps,
            waypoints,
            record: footer.record,
            map_occupied: footer.map_occupied,
            map_explored: footer.map_explored,
        })
    }
}

/// Re-simulate the logged actions and verify every pose and collision flag;
/// any divergence is an invariant breach.
pub fn replay_log(log: &TrajectoryLog) -> Result<()> {
    let env = GridEnvironment::from_json(&log.env_json)?;
    let mut state = EpisodeState::new(log.setup.start, log.setup.goal);
    for (t, rec) in log.steps.iter().enumerate() {
        if state.done {
            return Err(Error::ReplayDivergence(format!(
                "log has step {t} after the episode ended"
            )));
        }
        let collided = step(&env, &mut state, rec.action);
        if state.pose != rec.pose_after || collided != rec.collided {
            return Err(Error::ReplayDivergence(format!(
                "step {t}: replayed {:?} collided={collided}, logged {:?} collided={}",
                state.pose, rec.pose_after, rec.collided
            )));
        }
    }
    if state.success != log.record.success {
        return Err(Error::ReplayDivergence(format!(
            "terminal success mismatch: replayed {}, logged {}",
            state.success, log.record.success
        )));
    }
    Ok(())
}
