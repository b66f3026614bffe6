use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::rir::ImpulseResponse;
use crate::seed::{self, Domain};
use crate::{Error, Result};

/// One second of binaural audio; both channels have exactly `sample_rate`
/// samples.
#[derive(Debug, Clone, PartialEq)]
pub struct BinauralAudio {
    left: Vec<f32>,
    right: Vec<f32>,
    sample_rate: usize,
}

impl BinauralAudio {
    pub fn new(left: Vec<f32>, right: Vec<f32>, sample_rate: usize) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::Audio(format!(
                "channel lengths differ: {} vs {}",
                left.len(),
                right.len()
            )));
        }
        if left.len() != sample_rate {
            return Err(Error::Audio(format!(
                "audio must be one second ({sample_rate} samples), got {}",
                left.len()
            )));
        }
        Ok(BinauralAudio { left, right, sample_rate })
    }

    pub fn silence(sample_rate: usize) -> Self {
        BinauralAudio {
            left: vec![0.0; sample_rate],
            right: vec![0.0; sample_rate],
            sample_rate,
        }
    }

    pub fn left(&self) -> &[f32] {
        &self.left
    }

    pub fn right(&self) -> &[f32] {
        &self.right
    }

    pub fn sample_rate(&self) -> usize {
        self.sample_rate
    }
}

thread_local! {
    static FFT_CACHE: RefCell<HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>> =
        RefCell::new(HashMap::new());
}

fn fft_pair(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    FFT_CACHE.with(|c| {
        c.borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
            })
            .clone()
    })
}

/// FFT convolution in f64; output truncated to `out_len`.
fn fft_convolve(a: &[f32], b: &[f32], out_len: usize) -> Vec<f64> {
    let full = a.len() + b.len() - 1;
    let n = full.next_power_of_two();
    let (fwd, inv) = fft_pair(n);
    let mut fa: Vec<Complex64> =
        a.iter().map(|&v| Complex64::new(v as f64, 0.0)).chain(std::iter::repeat(Complex64::new(0.0, 0.0))).take(n).collect();
    let mut fb: Vec<Complex64> =
        b.iter().map(|&v| Complex64::new(v as f64, 0.0)).chain(std::iter::repeat(Complex64::new(0.0, 0.0))).take(n).collect();
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / n as f64;
    (0..out_len).map(|i| if i < full { fa[i].re * scale } else { 0.0 }).collect()
}

/// Deterministic per-sample Gaussian microphone noise, seekable by index so
/// partial renders agree with full renders.
pub(crate) fn noise_at(noise_seed: u64, channel: usize, index: usize) -> f64 {
    let key = ((channel as u64) << 40) | index as u64;
    let to_unit = |x: u64| ((x >> 11) as f64 + 1.0) / (1u64 << 53) as f64;
    let u1 = to_unit(seed::derive(noise_seed, Domain::MicNoise, key * 2));
    let u2 = to_unit(seed::derive(noise_seed, Domain::MicNoise, key * 2 + 1));
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// FFT round-off below this fraction of the per-channel peak is squashed to
/// zero so onset detection sees true silence before the direct pulse.
const DENOISE_REL: f64 = 1e-10;

/// Render what the agent hears: each (impulse response, waveform) pair is
/// convolved per channel, summed, i.i.d. Gaussian microphone noise with std
/// `mic_noise_sigma` is added, and the result is truncated/padded to one
/// second.
pub fn render_audio(
    rir: &ImpulseResponse,
    source: &[f32],
    distractors: &[(&ImpulseResponse, &[f32])],
    mic_noise_sigma: f64,
    noise_seed: u64,
) -> Result<BinauralAudio> {
    let sr = rir.sample_rate;
    for (d, _) in distractors {
        if d.sample_rate != sr {
            return Err(Error::Audio(format!(
                "sample-rate mismatch: {} vs {}",
                d.sample_rate, sr
            )));
        }
    }
    let mut left = vec![0.0f64; sr];
    let mut right = vec![0.0f64; sr];
    let mut mix = |r: &ImpulseResponse, w: &[f32]| {
        if w.is_empty() || r.is_empty() {
            return;
        }
        for (acc, ch) in [(&mut left, &r.left), (&mut right, &r.right)] {
            let conv = fft_convolve(ch, w, sr);
            for (a, v) in acc.iter_mut().zip(conv) {
                *a += v;
            }
        }
    };
    mix(rir, source);
    for (r, w) in distractors {
        mix(r, w);
    }

    for ch in [&mut left, &mut right] {
        let peak = ch.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let thr = peak * DENOISE_REL;
        for v in ch.iter_mut() {
            if v.abs() < thr {
                *v = 0.0;
            }
        }
    }

    if mic_noise_sigma > 0.0 {
        for (c, ch) in [&mut left, &mut right].into_iter().enumerate() {
            for (i, v) in ch.iter_mut().enumerate() {
                *v += mic_noise_sigma * noise_at(noise_seed, c, i);
            }
        }
    }

    BinauralAudio::new(
        left.into_iter().map(|v| v as f32).collect(),
        right.into_iter().map(|v| v as f32).collect(),
        sr,
    )
}

/// Render only samples [start, end) of the same mix, by direct partial
/// convolution. Agrees with [`render_audio`] on that window to floating
/// point noise; used for per-step intensity probes without paying for a
/// full-second render.
pub fn render_segment(
    sources: &[(&ImpulseResponse, &[f32])],
    mic_noise_sigma: f64,
    noise_seed: u64,
    start: usize,
    end: usize,
) -> (Vec<f32>, Vec<f32>) {
    let mut left = vec![0.0f64; end - start];
    let mut right = vec![0.0f64; end - start];
    for (rir, wave) in sources {
        for (acc, ch) in [(&mut left, &rir.left), (&mut right, &rir.right)] {
            for n in start..end {
                let k_lo = (n + 1).saturating_sub(wave.len());
                let k_hi = n.min(ch.len().saturating_sub(1));
                let mut s = 0.0f64;
                for k in k_lo..=k_hi {
                    s += ch[k] as f64 * wave[n - k] as f64;
                }
                acc[n - start] += s;
            }
        }
    }
    if mic_noise_sigma > 0.0 {
        for (c, ch) in [&mut left, &mut right].into_iter().enumerate() {
            for (j, v) in ch.iter_mut().enumerate() {
                *v += mic_noise_sigma * noise_at(noise_seed, c, start + j);
            }
        }
    }
    (
        left.into_iter().map(|v| v as f32).collect(),
        right.into_iter().map(|v| v as f32).collect(),
    )
}
