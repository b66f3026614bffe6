use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex32;
use rustfft::{Fft, FftPlanner};

use super::render::{render_segment, BinauralAudio};
use super::rir::ImpulseResponse;
use crate::nn::Array;

/// STFT hop length in samples.
pub const SPECTROGRAM_HOP: usize = 160;
/// STFT window length in samples.
pub const SPECTROGRAM_WINDOW: usize = 512;
/// Both spectrogram axes are subsampled by this factor.
const DOWNSAMPLE: usize = 4;
/// Added to magnitudes before the natural log so silent bins stay bounded.
pub const LOG_EPSILON: f32 = 1e-8;
/// Direct-sound window length in seconds.
const DIRECT_WINDOW_S: f64 = 0.003;

/// Log-magnitude binaural spectrogram, stored channels-first as
/// [2, freq_bins, time_frames]. At 16 kHz this is 65 x 26 per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Array<f32>,
    pub freq_bins: usize,
    pub time_frames: usize,
}

impl Spectrogram {
    pub fn data(&self) -> &Array<f32> {
        &self.data
    }

    pub fn channels(&self) -> usize {
        2
    }

    pub fn at(&self, channel: usize, freq: usize, time: usize) -> f32 {
        self.data.data()[(channel * self.freq_bins + freq) * self.time_frames + time]
    }
}

thread_local! {
    static FFT32: RefCell<HashMap<usize, Arc<dyn Fft<f32>>>> = RefCell::new(HashMap::new());
}

fn fft32(n: usize) -> Arc<dyn Fft<f32>> {
    FFT32.with(|c| {
        c.borrow_mut()
            .entry(n)
            .or_insert_with(|| FftPlanner::new().plan_fft_forward(n))
            .clone()
    })
}

/// Centered STFT magnitudes for one channel: [window/2 + 1, 1 + n/hop].
fn stft_magnitudes(samples: &[f32]) -> Vec<Vec<f32>> {
    let n = samples.len();
    let half = SPECTROGRAM_WINDOW / 2;
    let frames = 1 + n / SPECTROGRAM_HOP;
    let bins = half + 1;
    let fft = fft32(SPECTROGRAM_WINDOW);
    // Periodic Hann window.
    let window: Vec<f32> = (0..SPECTROGRAM_WINDOW)
        .map(|k| {
            0.5 * (1.0
                - (2.0 * std::f32::consts::PI * k as f32 / SPECTROGRAM_WINDOW as f32).cos())
        })
        .collect();

    let mut out = vec![vec![0.0f32; frames]; bins];
    let mut buf = vec![Complex32::new(0.0, 0.0); SPECTROGRAM_WINDOW];
    for t in 0..frames {
        let center = (t * SPECTROGRAM_HOP) as isize;
        for k in 0..SPECTROGRAM_WINDOW {
            let idx = center - half as isize + k as isize;
            let v = if idx >= 0 && (idx as usize) < n { samples[idx as usize] } else { 0.0 };
            buf[k] = Complex32::new(v * window[k], 0.0);
        }
        fft.process(&mut buf);
        for (b, row) in out.iter_mut().enumerate() {
            row[t] = buf[b].norm();
        }
    }
    out
}

/// Binaural log-magnitude spectrogram: per channel a centered STFT
/// (hop 160, window 512, 257 bins), magnitude, both axes subsampled by 4
/// (ceil), then log(magnitude + epsilon); channels stacked.
pub fn spectrogram(audio: &BinauralAudio) -> Spectrogram {
    let mags_l = stft_magnitudes(audio.left());
    let mags_r = stft_magnitudes(audio.right());
    let raw_bins = mags_l.len();
    let raw_frames = mags_l[0].len();
    let freq_bins = raw_bins.div_ceil(DOWNSAMPLE);
    let time_frames = raw_frames.div_ceil(DOWNSAMPLE);

    let mut data = vec![0.0f32; 2 * freq_bins * time_frames];
    for (ch, mags) in [&mags_l, &mags_r].into_iter().enumerate() {
        for (fi, f) in (0..raw_bins).step_by(DOWNSAMPLE).enumerate() {
            for (ti, t) in (0..raw_frames).step_by(DOWNSAMPLE).enumerate() {
                data[(ch * freq_bins + fi) * time_frames + ti] =
                    (mags[f][t] + LOG_EPSILON).ln();
            }
        }
    }
    Spectrogram {
        data: Array::from_vec(&[2, freq_bins, time_frames], data),
        freq_bins,
        time_frames,
    }
}

/// RMS over the first 3 ms of audio starting at the first non-zero sample
/// in either channel, averaged between channels; 0 for silence.
pub fn direct_intensity(audio: &BinauralAudio) -> f64 {
    let n = audio.left().len();
    let start = (0..n).find(|&i| audio.left()[i] != 0.0 || audio.right()[i] != 0.0);
    let Some(start) = start else {
        return 0.0;
    };
    let window = (DIRECT_WINDOW_S * audio.sample_rate() as f64).round() as usize;
    let end = (start + window).min(n);
    let rms = |ch: &[f32]| {
        let s: f64 = ch[start..end].iter().map(|&v| (v as f64) * (v as f64)).sum();
        (s / (end - start) as f64).sqrt()
    };
    0.5 * (rms(audio.left()) + rms(audio.right()))
}

/// Same quantity as [`direct_intensity`] of the full render, computed from
/// a partial render of just the direct window.
pub fn direct_intensity_of_mix(
    sources: &[(&ImpulseResponse, &[f32])],
    mic_noise_sigma: f64,
    noise_seed: u64,
) -> f64 {
    let sr = match sources.first() {
        Some((rir, _)) => rir.sample_rate,
        None if mic_noise_sigma == 0.0 => return 0.0,
        None => super::SAMPLE_RATE,
    };
    let start = if mic_noise_sigma > 0.0 {
        0
    } else {
        let mut onset: Option<usize> = None;
        for (rir, wave) in sources {
            let (Some(r0), Some(s0)) = (
                rir.first_nonzero(),
                wave.iter().position(|&v| v != 0.0),
            ) else {
                continue;
            };
            let o = r0 + s0;
            onset = Some(onset.map_or(o, |cur| cur.min(o)));
        }
        match onset {
            Some(o) if o < sr => o,
            _ => return 0.0,
        }
    };
    let window = (DIRECT_WINDOW_S * sr as f64).round() as usize;
    let end = (start + window).min(sr);
    let (l, r) = render_segment(sources, mic_noise_sigma, noise_seed, start, end);
    let rms = |ch: &[f32]| {
        let s: f64 = ch.iter().map(|&v| (v as f64) * (v as f64)).sum();
        (s / ch.len() as f64).sqrt()
    };
    0.5 * (rms(&l) + rms(&r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{render_audio, SAMPLE_RATE};

    fn tone_audio(freq: f64) -> BinauralAudio {
        let wave: Vec<f32> = (0..SAMPLE_RATE)
            .map(|i| {
                (2.0 * std::f64::consts::PI * freq * i as f64 / SAMPLE_RATE as f64).sin() as f32
                    * 0.5
            })
            .collect();
        BinauralAudio::new(wave.clone(), wave, SAMPLE_RATE).unwrap()
    }

    #[test]
    fn shape_contract_at_16khz() {
        let spec = spectrogram(&tone_audio(440.0));
        assert_eq!(spec.freq_bins, 65);
        assert_eq!(spec.time_frames, 26);
        assert_eq!(spec.channels(), 2);
        assert_eq!(spec.data().shape(), &[2, 65, 26]);
        assert!(spec.data().data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn all_zero_audio_gives_constant_log_epsilon() {
        let spec = spectrogram(&BinauralAudio::silence(SAMPLE_RATE));
        let want = LOG_EPSILON.ln();
        assert!(spec.data().data().iter().all(|&v| v == want));
    }

    #[test]
    fn pure_tone_peaks_at_nearest_bin() {
        // 1 kHz at a 512-sample window and 16 kHz: bin 32 exactly.
        let audio = tone_audio(1000.0);
        let mags = stft_magnitudes(audio.left());
        let raw_bins = mags.len();
        assert_eq!(raw_bins, 257);
        assert_eq!(mags[0].len(), 101);
        // Column-energy argmax over the un-downsampled bins.
        let mut best = (0usize, f64::MIN);
        for b in 0..raw_bins {
            let e: f64 = mags[b].iter().map(|&v| (v as f64).powi(2)).sum();
            if e > best.1 {
                best = (b, e);
            }
        }
        assert_eq!(best.0, 32);

        // Independent discrete-Fourier oracle on one centered window.
        let t = 50;
        let center = t * SPECTROGRAM_HOP;
        let mut oracle = (0usize, f64::MIN);
        for b in 0..raw_bins {
            let mut re = 0.0f64;
            let mut im = 0.0f64;
            for k in 0..SPECTROGRAM_WINDOW {
                let idx = center as isize - 256 + k as isize;
                let v = if idx >= 0 && (idx as usize) < SAMPLE_RATE {
                    audio.left()[idx as usize] as f64
                } else {
                    0.0
                };
                let w = 0.5
                    * (1.0
                        - (2.0 * std::f64::consts::PI * k as f64 / SPECTROGRAM_WINDOW as f64)
                            .cos());
                let phase = -2.0 * std::f64::consts::PI * (b * k) as f64
                    / SPECTROGRAM_WINDOW as f64;
                re += v * w * phase.cos();
                im += v * w * phase.sin();
            }
            let mag = (re * re + im * im).sqrt();
            if mag > oracle.1 {
                oracle = (b, mag);
            }
        }
        assert_eq!(oracle.0, 32, "oracle and implementation agree on the peak bin");
    }

    #[test]
    fn direct_window_is_48_samples_at_16khz() {
        assert_eq!((DIRECT_WINDOW_S * 16_000.0).round() as usize, 48);
    }

    #[test]
    fn constant_window_intensity_equals_the_constant() {
        let mut l = vec![0.0f32; SAMPLE_RATE];
        let mut r = vec![0.0f32; SAMPLE_RATE];
        for i in 100..SAMPLE_RATE {
            l[i] = 0.25;
            r[i] = 0.25;
        }
        let audio = BinauralAudio::new(l, r, SAMPLE_RATE).unwrap();
        let got = direct_intensity(&audio);
        assert!((got - 0.25).abs() < 1e-9);
    }

    #[test]
    fn silence_has_zero_intensity() {
        assert_eq!(direct_intensity(&BinauralAudio::silence(SAMPLE_RATE)), 0.0);
        assert_eq!(direct_intensity_of_mix(&[], 0.0, 0), 0.0);
    }

    #[test]
    fn fast_intensity_matches_full_render_path() {
        let mut rir = ImpulseResponse::identity(SAMPLE_RATE);
        rir.left = vec![0.0; 400];
        rir.right = vec![0.0; 400];
        rir.left[333] = 0.9;
        rir.right[333] = 0.5;
        rir.direct_onset = 333;
        let wave: Vec<f32> = tone_audio(700.0).left().to_vec();
        for sigma in [0.0, 0.03] {
            let full = render_audio(&rir, &wave, &[], sigma, 7).unwrap();
            let slow = direct_intensity(&full);
            let fast = direct_intensity_of_mix(&[(&rir, &wave)], sigma, 7);
            assert!(
                (slow - fast).abs() <= 1e-6 * slow.abs().max(1.0),
                "sigma {sigma}: {slow} vs {fast}"
            );
        }
    }
}
