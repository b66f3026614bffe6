use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed::{self, Domain};
use crate::{Error, Result};

/// Procedural mono waveform families. Spectral parameters are disjoint
/// across splits so "unheard" evaluation really is unheard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceKind {
    /// Pure sine.
    Tone { freq_hz: f64 },
    /// Linear sweep from `from_hz` to `to_hz` over the second.
    Chirp { from_hz: f64, to_hz: f64 },
    /// Random-phase sinusoid bank filling [low_hz, high_hz].
    NoiseBand { low_hz: f64, high_hz: f64 },
    /// Amplitude-warbled carrier (telephone-ring-like).
    Pulse { carrier_hz: f64, warble_hz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: SourceKind,
    pub split: Split,
}

/// Named mono waveforms with train/val/test tags.
#[derive(Debug, Clone)]
pub struct SourceLibrary {
    sources: Vec<SourceSpec>,
    sample_rate: usize,
}

/// Full-scale RMS target for every generated waveform.
const TARGET_RMS: f64 = 0.2;

impl SourceLibrary {
    pub fn new(sources: Vec<SourceSpec>, sample_rate: usize) -> Result<Self> {
        let mut names = std::collections::HashSet::new();
        for s in &sources {
            if !names.insert(s.name.clone()) {
                return Err(Error::Audio(format!("duplicate source name {}", s.name)));
            }
        }
        Ok(SourceLibrary { sources, sample_rate })
    }

    pub fn sample_rate(&self) -> usize {
        self.sample_rate
    }

    pub fn specs(&self) -> &[SourceSpec] {
        &self.sources
    }

    pub fn names_in(&self, split: Split) -> Vec<&str> {
        self.sources.iter().filter(|s| s.split == split).map(|s| s.name.as_str()).collect()
    }

    pub fn spec(&self, name: &str) -> Result<&SourceSpec> {
        self.sources
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Audio(format!("unknown source {name}")))
    }

    /// One second of samples, deterministic per name.
    pub fn waveform(&self, name: &str) -> Result<Vec<f32>> {
        let spec = self.spec(name)?;
        Ok(generate(spec, self.sample_rate))
    }

    pub fn manifest_json(&self) -> String {
        serde_json::to_string_pretty(&self.sources).expect("source specs serialize")
    }

    pub fn from_manifest_json(text: &str, sample_rate: usize) -> Result<Self> {
        let sources: Vec<SourceSpec> = serde_json::from_str(text)?;
        Self::new(sources, sample_rate)
    }
}

fn generate(spec: &SourceSpec, sample_rate: usize) -> Vec<f32> {
    let n = sample_rate;
    let dt = 1.0 / sample_rate as f64;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out = vec![0.0f64; n];
    match &spec.kind {
        SourceKind::Tone { freq_hz } => {
            for (i, v) in out.iter_mut().enumerate() {
                *v = (two_pi * freq_hz * i as f64 * dt).sin();
            }
        }
        SourceKind::Chirp { from_hz, to_hz } => {
            for (i, v) in out.iter_mut().enumerate() {
                let t = i as f64 * dt;
                *v = (two_pi * (from_hz * t + 0.5 * (to_hz - from_hz) * t * t)).sin();
            }
        }
        SourceKind::NoiseBand { low_hz, high_hz } => {
            let partials = 25;
            let name_key = spec.name.bytes().fold(0u64, |a, b| a.wrapping_mul(131).wrapping_add(b as u64));
            let mut rng = seed::rng(name_key, Domain::Dataset, 0);
            for k in 0..partials {
                let f = low_hz + (high_hz - low_hz) * k as f64 / (partials - 1) as f64;
                let phase: f64 = rng.gen_range(0.0..two_pi);
                for (i, v) in out.iter_mut().enumerate() {
                    *v += (two_pi * f * i as f64 * dt + phase).sin();
                }
            }
        }
        SourceKind::Pulse { carrier_hz, warble_hz } => {
            for (i, v) in out.iter_mut().enumerate() {
                let t = i as f64 * dt;
                let envelope = 0.5 * (1.0 - (two_pi * warble_hz * t).cos());
                *v = envelope * (two_pi * carrier_hz * t).sin();
            }
        }
    }
    let rms = (out.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let gain = if rms > 0.0 { TARGET_RMS / rms } else { 0.0 };
    out.into_iter().map(|v| (v * gain) as f32).collect()
}

/// The stock library: 24 train / 6 val / 10 test sources with disjoint
/// spectral parameters per split (train low band, val mid, test high).
pub fn default_library(sample_rate: usize) -> SourceLibrary {
    let mut sources = Vec::new();
    let mut push = |name: String, kind: SourceKind, split: Split| {
        sources.push(SourceSpec { name, kind, split });
    };

    // Train: frequencies drawn from 300..1260 Hz.
    for k in 0..8 {
        let f = 300.0 + 120.0 * k as f64;
        push(format!("tone_{:04}", f as u32), SourceKind::Tone { freq_hz: f }, Split::Train);
    }
    for k in 0..7 {
        let f0 = 320.0 + 120.0 * k as f64;
        let f1 = f0 + 380.0;
        push(
            format!("chirp_{:04}_{:04}", f0 as u32, f1 as u32),
            SourceKind::Chirp { from_hz: f0, to_hz: f1 },
            Split::Train,
        );
    }
    for k in 0..6 {
        let lo = 340.0 + 140.0 * k as f64;
        push(
            format!("band_{:04}_{:04}", lo as u32, (lo + 220.0) as u32),
            SourceKind::NoiseBand { low_hz: lo, high_hz: lo + 220.0 },
            Split::Train,
        );
    }
    for (c, w) in [(780.0, 20.0), (940.0, 16.0), (1100.0, 24.0)] {
        push(
            format!("pulse_{:04}_{:02}", c as u32, w as u32),
            SourceKind::Pulse { carrier_hz: c, warble_hz: w },
            Split::Train,
        );
    }

    // Val: 1300..1550 Hz.
    push("tone_1320".into(), SourceKind::Tone { freq_hz: 1320.0 }, Split::Val);
    push("tone_1440".into(), SourceKind::Tone { freq_hz: 1440.0 }, Split::Val);
    push(
        "chirp_1300_1550".into(),
        SourceKind::Chirp { from_hz: 1300.0, to_hz: 1550.0 },
        Split::Val,
    );
    push(
        "band_1350_1520".into(),
        SourceKind::NoiseBand { low_hz: 1350.0, high_hz: 1520.0 },
        Split::Val,
    );
    push("pulse_1380_18".into(), SourceKind::Pulse { carrier_hz: 1380.0, warble_hz: 18.0 }, Split::Val);
    push("tone_1530".into(), SourceKind::Tone { freq_hz: 1530.0 }, Split::Val);

    // Test: 1600..2800 Hz.
    for k in 0..3 {
        let f = 1600.0 + 240.0 * k as f64;
        push(format!("tone_{:04}", f as u32), SourceKind::Tone { freq_hz: f }, Split::Test);
    }
    for k in 0..3 {
        let f0 = 1700.0 + 240.0 * k as f64;
        push(
            format!("chirp_{:04}_{:04}", f0 as u32, (f0 + 300.0) as u32),
            SourceKind::Chirp { from_hz: f0, to_hz: f0 + 300.0 },
            Split::Test,
        );
    }
    for k in 0..2 {
        let lo = 2300.0 + 260.0 * k as f64;
        push(
            format!("band_{:04}_{:04}", lo as u32, (lo + 200.0) as u32),
            SourceKind::NoiseBand { low_hz: lo, high_hz: lo + 200.0 },
            Split::Test,
        );
    }
    push("pulse_2650_22".into(), SourceKind::Pulse { carrier_hz: 2650.0, warble_hz: 22.0 }, Split::Test);
    push("pulse_2760_14".into(), SourceKind::Pulse { carrier_hz: 2760.0, warble_hz: 14.0 }, Split::Test);

    SourceLibrary::new(sources, sample_rate).expect("stock library is valid")
}

/// Default heard-sound source (train split).
pub const HEARD_SOURCE: &str = "pulse_0780_20";
