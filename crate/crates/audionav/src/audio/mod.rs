//! Synthetic binaural acoustics.
//!
//! A sound source at a grid cell reaches the agent along navigable space:
//! the direct pulse is delayed by geodesic distance (through doorways, not
//! through walls) with amplitude 1/(1+d), an interaural level difference
//! split by arrival angle, a handful of delayed early reflections, and an
//! exponentially decaying reverberant tail. Rendering convolves source
//! waveforms with the impulse response, mixes distractors, and adds
//! microphone noise. All functions are pure given explicit seeds.

mod render;
mod rir;
mod sources;
mod spectrogram;
mod wav;

pub use render::{render_audio, render_segment, BinauralAudio};
pub use rir::{
    arrival_direction, doa_bin_direction, ground_truth_doa, local_room_size, synthesize_rir,
    synthesize_rir_direct_prefix, synthesize_rir_with_field, ImpulseResponse, RirConfig, DOA_BINS,
};
pub use sources::{default_library, SourceKind, SourceLibrary, SourceSpec, Split, HEARD_SOURCE};
pub use spectrogram::{
    direct_intensity, direct_intensity_of_mix, spectrogram, Spectrogram, LOG_EPSILON,
    SPECTROGRAM_HOP, SPECTROGRAM_WINDOW,
};
pub use wav::write_wav;

/// Default sample rate (Hz). The spectrogram shape contract (65 x 26 x 2)
/// holds at this rate.
pub const SAMPLE_RATE: usize = 16_000;

/// Speed of sound in m/s used for propagation delays.
pub const SPEED_OF_SOUND: f64 = 343.0;
