//! RIFF/WAVE decoding into normalized mono buffers, plus a minimal 16-bit PCM
//! writer used by the synthetic corpus generator.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("malformed WAV header: {0}")]
    MalformedHeader(String),
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("data chunk is empty")]
    EmptyData,
    #[error("channel length mismatch: expected {expected} samples, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid audio buffer: {0}")]
    InvalidBuffer(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Decoded mono PCM samples in `[-1, 1]` plus the native sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioBuffer {
    /// Builds a buffer, clamping samples into `[-1, 1]`.
    ///
    /// Fails when `samples` is empty, any sample is non-finite, or the rate is zero.
    pub fn new(mut samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self, WavError> {
        if samples.is_empty() {
            return Err(WavError::InvalidBuffer("no samples".into()));
        }
        if sample_rate_hz == 0 {
            return Err(WavError::InvalidBuffer("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(WavError::InvalidBuffer("non-finite sample".into()));
        }
        for s in &mut samples {
            *s = s.clamp(-1.0, 1.0);
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false for a constructed buffer; present for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    pub fn is_silent(&self) -> bool {
        self.samples.iter().all(|&s| s == 0.0)
    }

    /// Returns a copy with every sample multiplied by `gain` (clamped to `[-1, 1]`).
    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|s| (s * gain).clamp(-1.0, 1.0))
                .collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

fn u16_at(b: &[u8], off: usize) -> u16 {
    u16::from_le_bytes([b[off], b[off + 1]])
}

fn u32_at(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes([b[off], b[off + 1], b[off + 2], b[off + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk, WavError> {
    if body.len() < 16 {
        return Err(WavError::MalformedHeader(format!(
            "fmt chunk too short ({} bytes)",
            body.len()
        )));
    }
    let mut format = u16_at(body, 0);
    let channels = u16_at(body, 2);
    let sample_rate = u32_at(body, 4);
    let bits_per_sample = u16_at(body, 14);
    if format == FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) then the subformat GUID whose
        // first two bytes carry the underlying format code.
        if body.len() < 26 {
            return Err(WavError::MalformedHeader(
                "extensible fmt chunk too short".into(),
            ));
        }
        format = u16_at(body, 24);
    }
    if channels == 0 {
        return Err(WavError::MalformedHeader("zero channels".into()));
    }
    if sample_rate == 0 {
        return Err(WavError::MalformedHeader("zero sample rate".into()));
    }
    Ok(FmtChunk {
        format,
        channels,
        sample_rate,
        bits_per_sample,
    })
}

fn decode_sample(fmt: &FmtChunk, raw: &[u8]) -> f64 {
    match (fmt.format, fmt.bits_per_sample) {
        (FORMAT_PCM, 16) => f64::from(i16::from_le_bytes([raw[0], raw[1]])) / 32768.0,
        (FORMAT_PCM, 24) => {
            // sign-extend through the top byte of an i32
            let v = i32::from_le_bytes([0, raw[0], raw[1], raw[2]]) >> 8;
            f64::from(v) / 8_388_608.0
        }
        (FORMAT_PCM, 32) => {
            f64::from(i32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]])) / 2_147_483_648.0
        }
        (FORMAT_IEEE_FLOAT, 32) => {
            let v = f64::from(f32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]));
            if v.is_finite() {
                v.clamp(-1.0, 1.0)
            } else {
                0.0
            }
        }
        _ => unreachable!("encoding validated before decoding"),
    }
}

/// Decodes a complete RIFF/WAVE byte image.
///
/// Integer PCM (16/24/32-bit) is normalized by `2^(bits-1)`; 32-bit float is
/// clamped into `[-1, 1]`. Multi-channel input is averaged to mono. Chunks
/// other than `fmt ` and `data` are skipped.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioBuffer, WavError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" {
        return Err(WavError::MalformedHeader("missing RIFF magic".into()));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(WavError::MalformedHeader("form type is not WAVE".into()));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start.checked_add(size).ok_or_else(|| {
            WavError::MalformedHeader("chunk size overflows".into())
        })?;
        if body_end > bytes.len() {
            // Truncated data chunks are common in the wild; take what is there.
            if id == b"data" {
                data = Some(&bytes[body_start..]);
                break;
            }
            return Err(WavError::MalformedHeader(format!(
                "chunk {:?} runs past end of file",
                String::from_utf8_lossy(id)
            )));
        }
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| WavError::MalformedHeader("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| WavError::MalformedHeader("missing data chunk".into()))?;

    match (fmt.format, fmt.bits_per_sample) {
        (FORMAT_PCM, 16 | 24 | 32) | (FORMAT_IEEE_FLOAT, 32) => {}
        (FORMAT_PCM | FORMAT_IEEE_FLOAT, bits) => {
            return Err(WavError::UnsupportedEncoding(format!(
                "{bits}-bit samples (format code {})",
                fmt.format
            )))
        }
        (code, _) => {
            return Err(WavError::UnsupportedEncoding(format!(
                "format code {code:#06x}"
            )))
        }
    }

    let bytes_per_sample = usize::from(fmt.bits_per_sample / 8);
    let channels = usize::from(fmt.channels);
    let frame_bytes = bytes_per_sample * channels;
    let n_frames = data.len() / frame_bytes;
    if n_frames == 0 {
        return Err(WavError::EmptyData);
    }

    let mut per_channel = vec![Vec::with_capacity(n_frames); channels];
    for frame in data.chunks_exact(frame_bytes) {
        for (c, raw) in frame.chunks_exact(bytes_per_sample).enumerate() {
            per_channel[c].push(decode_sample(&fmt, raw));
        }
    }
    let samples = downmix_to_mono(&per_channel)?;
    AudioBuffer::new(samples, fmt.sample_rate)
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, WavError> {
    let bytes = std::fs::read(path)?;
    parse_wav(&bytes)
}

/// Arithmetic mean across channels, frame by frame.
pub fn downmix_to_mono<S: AsRef<[f64]>>(channels: &[S]) -> Result<Vec<f64>, WavError> {
    let Some(first) = channels.first() else {
        return Ok(Vec::new());
    };
    let len = first.as_ref().len();
    if let Some(bad) = channels.iter().find(|c| c.as_ref().len() != len) {
        return Err(WavError::LengthMismatch {
            expected: len,
            found: bad.as_ref().len(),
        });
    }
    if channels.len() == 1 {
        return Ok(first.as_ref().to_vec());
    }
    let n = channels.len() as f64;
    Ok((0..len)
        .map(|i| channels.iter().map(|c| c.as_ref()[i]).sum::<f64>() / n)
        .collect())
}

/// Quantizes one sample to 16-bit PCM, rounding to nearest.
pub fn quantize_i16(sample: f64) -> i16 {
    (sample.clamp(-1.0, 1.0) * 32768.0)
        .round()
        .clamp(-32768.0, 32767.0) as i16
}

/// Encodes mono samples as a canonical 44-byte-header 16-bit PCM WAV image.
pub fn encode_wav_pcm16(samples: &[f64], sample_rate_hz: u32) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + samples.len() * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(sample_rate_hz * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in samples {
        out.extend_from_slice(&quantize_i16(s).to_le_bytes());
    }
    out
}

pub fn write_wav_pcm16(
    path: impl AsRef<Path>,
    samples: &[f64],
    sample_rate_hz: u32,
) -> Result<(), WavError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_wav_pcm16(samples, sample_rate_hz))?;
    Ok(())
}
