use std::io::Write;
use std::path::Path;

use super::render::BinauralAudio;
use crate::{Error, Result};

/// Dump audio as a 16-bit PCM stereo WAV for audition.
pub fn write_wav(path: &Path, audio: &BinauralAudio) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let n = audio.left().len() as u32;
    let sample_rate = audio.sample_rate() as u32;
    let channels: u16 = 2;
    let bits: u16 = 16;
    let block_align = channels * bits / 8;
    let byte_rate = sample_rate * block_align as u32;
    let data_len = n * block_align as u32;

    let mut header = Vec::with_capacity(44);
    header.extend_from_slice(b"RIFF");
    header.extend_from_slice(&(36 + data_len).to_le_bytes());
    header.extend_from_slice(b"WAVEfmt ");
    header.extend_from_slice(&16u32.to_le_bytes());
    header.extend_from_slice(&1u16.to_le_bytes()); // PCM
    header.extend_from_slice(&channels.to_le_bytes());
    header.extend_from_slice(&sample_rate.to_le_bytes());
    header.extend_from_slice(&byte_rate.to_le_bytes());
    header.extend_from_slice(&block_align.to_le_bytes());
    header.extend_from_slice(&bits.to_le_bytes());
    header.extend_from_slice(b"data");
    header.extend_from_slice(&data_len.to_le_bytes());
    file.write_all(&header).map_err(|e| Error::io(path, e))?;

    let quantize = |v: f32| -> i16 { (v.clamp(-1.0, 1.0) * 32767.0).round() as i16 };
    let mut body = Vec::with_capacity(data_len as usize);
    for i in 0..n as usize {
        body.extend_from_slice(&quantize(audio.left()[i]).to_le_bytes());
        body.extend_from_slice(&quantize(audio.right()[i]).to_le_bytes());
    }
    file.write_all(&body).map_err(|e| Error::io(path, e))
}
