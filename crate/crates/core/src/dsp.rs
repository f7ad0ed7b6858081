//! Signal-processing primitives shared by the feature extractors: framing,
//! Hann-windowed magnitude spectra, normalized autocorrelation and a
//! spectral-flux onset curve.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::wav::AudioBuffer;

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("invalid frame spec: frame {frame_len} hop {hop}")]
    InvalidFrameSpec { frame_len: usize, hop: usize },
    #[error("input is empty")]
    EmptyInput,
    #[error("max lag {max_lag} must be below the input length {len}")]
    LagOutOfRange { max_lag: usize, len: usize },
}

/// Frame length and hop, both in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpec {
    frame_len: usize,
    hop: usize,
}

impl FrameSpec {
    pub fn new(frame_len: usize, hop: usize) -> Result<Self, DspError> {
        if frame_len < 2 || hop == 0 || hop > frame_len {
            return Err(DspError::InvalidFrameSpec { frame_len, hop });
        }
        Ok(Self { frame_len, hop })
    }

    /// 50 ms frames with 50% overlap, used for framed RMS and pitch.
    pub fn framed_default(sample_rate_hz: u32) -> Self {
        let frame_len = ((0.05 * f64::from(sample_rate_hz)).round() as usize).max(2);
        Self {
            frame_len,
            hop: (frame_len / 2).max(1),
        }
    }

    /// 2048-sample frames, hop 1024, for roll-off, irregularity and inharmonicity.
    pub fn spectral() -> Self {
        Self {
            frame_len: 2048,
            hop: 1024,
        }
    }

    /// 1024-sample frames, hop 256, for the onset curve behind tempo and pulse clarity.
    pub fn onset() -> Self {
        Self {
            frame_len: 1024,
            hop: 256,
        }
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    /// Number of frames `frame_signal` yields for a signal of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.frame_len {
            1
        } else {
            (len - self.frame_len) / self.hop + 1
        }
    }
}

/// Splits a buffer into contiguous frames starting at multiples of the hop.
///
/// A trailing partial window is dropped. A signal shorter than one frame
/// yields a single zero-padded frame.
pub fn frame_signal(buf: &AudioBuffer, spec: FrameSpec) -> Vec<Vec<f64>> {
    frames_of(buf.samples(), spec)
}

pub(crate) fn frames_of(x: &[f64], spec: FrameSpec) -> Vec<Vec<f64>> {
    if x.len() < spec.frame_len {
        let mut padded = x.to_vec();
        padded.resize(spec.frame_len, 0.0);
        return vec![padded];
    }
    (0..spec.frame_count(x.len()))
        .map(|i| x[i * spec.hop..i * spec.hop + spec.frame_len].to_vec())
        .collect()
}

/// One-sided magnitude spectrum; bin `k` is centered at `k * bin_width_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub magnitudes: Vec<f64>,
    pub bin_width_hz: f64,
}

impl Spectrum {
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width_hz
    }

    pub fn energy(&self) -> f64 {
        self.magnitudes.iter().map(|m| m * m).sum()
    }
}

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Reusable Hann-window + FFT plan for frames of one fixed length.
pub struct SpectrumAnalyzer {
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    fft_size: usize,
    bin_width_hz: f64,
}

impl SpectrumAnalyzer {
    pub fn new(frame_len: usize, sample_rate_hz: u32) -> Self {
        let fft_size = frame_len.max(2).next_power_of_two();
        let fft = FftPlanner::new().plan_fft_forward(fft_size);
        Self {
            window: hann(frame_len),
            fft,
            fft_size,
            bin_width_hz: f64::from(sample_rate_hz) / fft_size as f64,
        }
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn analyze(&self, frame: &[f64]) -> Spectrum {
        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_size];
        for ((slot, &x), &w) in buf.iter_mut().zip(frame).zip(&self.window) {
            slot.re = x * w;
        }
        self.fft.process(&mut buf);
        Spectrum {
            magnitudes: buf[..=self.fft_size / 2].iter().map(|c| c.norm()).collect(),
            bin_width_hz: self.bin_width_hz,
        }
    }

    /// Spectra of every frame of `buf` under `spec`.
    pub fn analyze_all(buf: &AudioBuffer, spec: FrameSpec) -> Vec<Spectrum> {
        let analyzer = Self::new(spec.frame_len, buf.sample_rate_hz());
        frame_signal(buf, spec)
            .iter()
            .map(|f| analyzer.analyze(f))
            .collect()
    }
}

/// Hann-windowed, zero-padded (to a power of two) one-sided magnitude spectrum.
pub fn magnitude_spectrum(frame: &[f64], sample_rate_hz: u32) -> Spectrum {
    SpectrumAnalyzer::new(frame.len(), sample_rate_hz).analyze(frame)
}

/// Autocorrelation normalized by the lag-0 energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Autocorrelation {
    pub values: Vec<f64>,
    /// Set when the input had no energy; `values` is then all zero.
    pub all_zero: bool,
}

/// `r[l] = Σ x[n]·x[n+l] / Σ x[n]²` for `l` in `0..=max_lag`, computed through
/// a zero-padded FFT so the correlation is linear rather than circular.
pub fn autocorrelation_normalized(x: &[f64], max_lag: usize) -> Result<Autocorrelation, DspError> {
    if x.is_empty() {
        return Err(DspError::EmptyInput);
    }
    if max_lag >= x.len() {
        return Err(DspError::LagOutOfRange {
            max_lag,
            len: x.len(),
        });
    }
    let energy: f64 = x.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Ok(Autocorrelation {
            values: vec![0.0; max_lag + 1],
            all_zero: true,
        });
    }

    let n = (x.len() + max_lag + 1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(n)
        .collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for c in &mut buf {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(n).process(&mut buf);

    // inverse FFT is unnormalized: divide by n, then by the lag-0 energy
    let scale = 1.0 / (n as f64 * energy);
    let mut values: Vec<f64> = buf[..=max_lag].iter().map(|c| c.re * scale).collect();
    values[0] = 1.0;
    for v in &mut values[1..] {
        *v = v.clamp(-1.0, 1.0);
    }
    Ok(Autocorrelation {
        values,
        all_zero: false,
    })
}

/// Half-wave-rectified spectral flux per frame; the first frame is 0.
pub fn onset_strength(buf: &AudioBuffer, spec: FrameSpec) -> Vec<f64> {
    let spectra = SpectrumAnalyzer::analyze_all(buf, spec);
    let mut flux = Vec::with_capacity(spectra.len());
    flux.push(0.0);
    for pair in spectra.windows(2) {
        let f: f64 = pair[1]
            .magnitudes
            .iter()
            .zip(&pair[0].magnitudes)
            .map(|(cur, prev)| (cur - prev).max(0.0))
            .sum();
        flux.push(f);
    }
    flux
}

/// Vertex offset in `(-0.5, 0.5)` of the parabola through three samples
/// centered on a local maximum.
pub fn parabolic_offset(left: f64, center: f64, right: f64) -> f64 {
    let denom = left - 2.0 * center + right;
    if denom.abs() < f64::EPSILON {
        return 0.0;
    }
    (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
}

/// Index of the highest strict interior local maximum of `r` within
/// `lo..=hi`, ties resolved toward the smaller index.
pub fn peak_in_band(r: &[f64], lo: usize, hi: usize) -> Option<usize> {
    let lo = lo.max(1);
    let hi = hi.min(r.len().saturating_sub(2));
    let mut best: Option<usize> = None;
    for l in lo..=hi {
        if r[l] > r[l - 1] && r[l] >= r[l + 1] && best.is_none_or(|b| r[l] > r[b]) {
            best = Some(l);
        }
    }
    best
}
