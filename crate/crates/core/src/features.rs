//! The eleven per-file audio descriptors and their extractors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{
    autocorrelation_normalized, frame_signal, onset_strength, parabolic_offset, peak_in_band,
    FrameSpec, Spectrum, SpectrumAnalyzer,
};
use crate::wav::AudioBuffer;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("signal is silent")]
    AllSilent,
    #[error("no frame is voiced")]
    Unvoiced,
    #[error("onset curve carries no pulse")]
    NoPulse,
    #[error("roll-off threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("fundamental frequency must be positive and finite, got {0}")]
    InvalidF0(f64),
}

/// Feature identifiers in their canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    SamplingRate,
    TemporalLength,
    RmsEnergy,
    LowEnergy,
    Tempo,
    PulseClarity,
    ZeroCrossingRate,
    Rolloff,
    SpectralIrregularity,
    Pitch,
    Inharmonicity,
}

impl Feature {
    pub const COUNT: usize = 11;

    pub const ALL: [Feature; Feature::COUNT] = [
        Feature::SamplingRate,
        Feature::TemporalLength,
        Feature::RmsEnergy,
        Feature::LowEnergy,
        Feature::Tempo,
        Feature::PulseClarity,
        Feature::ZeroCrossingRate,
        Feature::Rolloff,
        Feature::SpectralIrregularity,
        Feature::Pitch,
        Feature::Inharmonicity,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Machine name used in CSV headers and model files.
    pub fn name(self) -> &'static str {
        match self {
            Feature::SamplingRate => "sampling_rate",
            Feature::TemporalLength => "temporal_length",
            Feature::RmsEnergy => "rms_energy",
            Feature::LowEnergy => "low_energy",
            Feature::Tempo => "tempo",
            Feature::PulseClarity => "pulse_clarity",
            Feature::ZeroCrossingRate => "zero_crossing_rate",
            Feature::Rolloff => "rolloff",
            Feature::SpectralIrregularity => "spectral_irregularity",
            Feature::Pitch => "pitch",
            Feature::Inharmonicity => "inharmonicity",
        }
    }

    /// Human-readable column label for printed tables.
    pub fn label(self) -> &'static str {
        match self {
            Feature::SamplingRate => "Sampling Rate",
            Feature::TemporalLength => "Temporal Length",
            Feature::RmsEnergy => "RMS Energy",
            Feature::LowEnergy => "Low Energy",
            Feature::Tempo => "Tempo",
            Feature::PulseClarity => "Pulse Clarity",
            Feature::ZeroCrossingRate => "Zero Crossing Rate",
            Feature::Rolloff => "Roll Off",
            Feature::SpectralIrregularity => "Spectral Irregularity",
            Feature::Pitch => "Pitch",
            Feature::Inharmonicity => "Inharmonicity",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown feature {s:?}"))
    }
}

/// Per-field validity bits; a cleared bit means the extractor degenerated and
/// the stored value is a 0.0 sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Validity(u16);

impl Validity {
    pub const ALL_VALID: Validity = Validity((1 << Feature::COUNT) - 1);

    pub fn is_valid(self, f: Feature) -> bool {
        self.0 & (1 << f.index()) != 0
    }

    pub fn set(&mut self, f: Feature, valid: bool) {
        if valid {
            self.0 |= 1 << f.index();
        } else {
            self.0 &= !(1 << f.index());
        }
    }

    pub fn all_valid(self) -> bool {
        self == Self::ALL_VALID
    }
}

impl Default for Validity {
    fn default() -> Self {
        Self::ALL_VALID
    }
}

/// The eleven descriptors of one audio file.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub sampling_rate_hz: u32,
    pub temporal_length_s: f64,
    pub rms_energy: f64,
    pub low_energy_rate: f64,
    pub tempo_bpm: f64,
    pub pulse_clarity: f64,
    pub zcr_per_s: f64,
    pub rolloff_hz: f64,
    pub spectral_irregularity: f64,
    pub pitch_hz: f64,
    pub inharmonicity: f64,
    pub validity: Validity,
}

impl FeatureVector {
    pub fn get(&self, f: Feature) -> f64 {
        match f {
            Feature::SamplingRate => f64::from(self.sampling_rate_hz),
            Feature::TemporalLength => self.temporal_length_s,
            Feature::RmsEnergy => self.rms_energy,
            Feature::LowEnergy => self.low_energy_rate,
            Feature::Tempo => self.tempo_bpm,
            Feature::PulseClarity => self.pulse_clarity,
            Feature::ZeroCrossingRate => self.zcr_per_s,
            Feature::Rolloff => self.rolloff_hz,
            Feature::SpectralIrregularity => self.spectral_irregularity,
            Feature::Pitch => self.pitch_hz,
            Feature::Inharmonicity => self.inharmonicity,
        }
    }

    pub fn is_valid(&self, f: Feature) -> bool {
        self.validity.is_valid(f)
    }

    pub fn values(&self) -> [f64; Feature::COUNT] {
        Feature::ALL.map(|f| self.get(f))
    }

    /// Rebuilds a vector from values in canonical order.
    ///
    /// The sampling rate is rounded to the nearest integer.
    pub fn from_values(values: [f64; Feature::COUNT], validity: Validity) -> Self {
        Self {
            sampling_rate_hz: values[0].round().max(0.0) as u32,
            temporal_length_s: values[1],
            rms_energy: values[2],
            low_energy_rate: values[3],
            tempo_bpm: values[4],
            pulse_clarity: values[5],
            zcr_per_s: values[6],
            rolloff_hz: values[7],
            spectral_irregularity: values[8],
            pitch_hz: values[9],
            inharmonicity: values[10],
            validity,
        }
    }
}

/// Search bands and thresholds for the extractors.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractorConfig {
    pub rolloff_threshold: f64,
    pub pitch_min_hz: f64,
    pub pitch_max_hz: f64,
    pub voicing_threshold: f64,
    pub tempo_min_bpm: f64,
    pub tempo_max_bpm: f64,
    /// Peaks below this fraction of the frame maximum are not partials.
    pub peak_floor: f64,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self {
            rolloff_threshold: 0.85,
            pitch_min_hz: 75.0,
            pitch_max_hz: 2400.0,
            voicing_threshold: 0.3,
            tempo_min_bpm: 40.0,
            tempo_max_bpm: 200.0,
            peak_floor: 0.01,
        }
    }
}

pub fn temporal_length(buf: &AudioBuffer) -> f64 {
    buf.duration_s()
}

fn rms_of(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn rms_energy(buf: &AudioBuffer) -> f64 {
    rms_of(buf.samples())
}

pub fn framed_rms(buf: &AudioBuffer, spec: FrameSpec) -> Vec<f64> {
    frame_signal(buf, spec).iter().map(|f| rms_of(f)).collect()
}

/// Fraction of frames whose RMS is strictly below the mean frame RMS.
///
/// The comparison carries a 1e-12 relative margin so that equal frames never
/// count as below a mean that picked up rounding error.
pub fn low_energy_rate(frame_rms: &[f64]) -> f64 {
    if frame_rms.is_empty() {
        return 0.0;
    }
    let mean = frame_rms.iter().sum::<f64>() / frame_rms.len() as f64;
    let cut = mean * (1.0 - 1e-12);
    frame_rms.iter().filter(|&&v| v < cut).count() as f64 / frame_rms.len() as f64
}

/// Sign changes per second; exact zeros never count.
pub fn zcr_per_second(buf: &AudioBuffer) -> f64 {
    let crossings = buf
        .samples()
        .windows(2)
        .filter(|w| w[0] * w[1] < 0.0)
        .count();
    crossings as f64 / buf.duration_s()
}

fn spectral_frames(buf: &AudioBuffer) -> Vec<Spectrum> {
    SpectrumAnalyzer::analyze_all(buf, FrameSpec::spectral())
}

fn rolloff_of(spectra: &[Spectrum], threshold: f64) -> Result<f64, FeatureError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for s in spectra {
        let total = s.energy();
        if total == 0.0 {
            continue;
        }
        let target = threshold * total;
        let mut acc = 0.0;
        let mut bin = s.magnitudes.len() - 1;
        for (k, m) in s.magnitudes.iter().enumerate() {
            acc += m * m;
            if acc >= target {
                bin = k;
                break;
            }
        }
        sum += s.frequency(bin);
        n += 1;
    }
    if n == 0 {
        return Err(FeatureError::AllSilent);
    }
    Ok(sum / n as f64)
}

/// Mean over spectral frames of the lowest frequency below which `threshold`
/// of the frame's energy lies.
pub fn rolloff(buf: &AudioBuffer, threshold: f64) -> Result<f64, FeatureError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(FeatureError::InvalidThreshold(threshold));
    }
    rolloff_of(&spectral_frames(buf), threshold)
}

/// Amplitudes of local spectral maxima above `floor × frame max`, low to high.
/// Neighbours closer than this fraction of the frame maximum count as equal,
/// so flat stretches (an impulse's spectrum) yield no rounding-noise peaks
/// and the peak set does not change with signal gain.
const PEAK_TIE_TOLERANCE: f64 = 1e-9;

fn partials(s: &Spectrum, floor: f64) -> Vec<f64> {
    let m = &s.magnitudes;
    let max = m.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Vec::new();
    }
    let cut = floor * max;
    let tie = PEAK_TIE_TOLERANCE * max;
    (0..m.len())
        .filter(|&k| {
            let left = if k == 0 { 0.0 } else { m[k - 1] };
            let right = m.get(k + 1).copied().unwrap_or(0.0);
            m[k] >= cut && m[k] - left > tie && m[k] - right >= -tie
        })
        .map(|k| m[k])
        .collect()
}

fn irregularity_of(spectra: &[Spectrum], floor: f64) -> Result<f64, FeatureError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for s in spectra {
        let a = partials(s, floor);
        if a.is_empty() {
            continue;
        }
        let energy: f64 = a.iter().map(|v| v * v).sum();
        let diffs: f64 = a
            .iter()
            .zip(a.iter().skip(1).chain(std::iter::once(&0.0)))
            .map(|(x, y)| (x - y).powi(2))
            .sum();
        sum += diffs / energy;
        n += 1;
    }
    if n == 0 {
        return Err(FeatureError::AllSilent);
    }
    Ok(sum / n as f64)
}

/// Jensen irregularity, `Σ (a_k − a_{k+1})² / Σ a_k²` over the spectral
/// peaks of each frame with `a_{N+1} = 0`, averaged over frames with peaks.
pub fn spectral_irregularity(buf: &AudioBuffer) -> Result<f64, FeatureError> {
    irregularity_of(&spectral_frames(buf), ExtractorConfig::default().peak_floor)
}

fn pitch_with(buf: &AudioBuffer, cfg: &ExtractorConfig) -> Result<f64, FeatureError> {
    let sr = f64::from(buf.sample_rate_hz());
    let spec = FrameSpec::framed_default(buf.sample_rate_hz());
    let lag_lo = (sr / cfg.pitch_max_hz).floor() as usize;
    let lag_hi = (sr / cfg.pitch_min_hz).ceil() as usize;

    let mut pitches: Vec<f64> = frame_signal(buf, spec)
        .iter()
        .filter_map(|frame| {
            let max_lag = (lag_hi + 1).min(frame.len() - 1);
            let r = autocorrelation_normalized(frame, max_lag).ok()?;
            if r.all_zero {
                return None;
            }
            let r = r.values;
            let peak = peak_in_band(&r, lag_lo, lag_hi)?;
            if r[peak] < cfg.voicing_threshold {
                return None;
            }
            let lag = peak as f64 + parabolic_offset(r[peak - 1], r[peak], r[peak + 1]);
            Some(sr / lag)
        })
        .collect();
    if pitches.is_empty() {
        return Err(FeatureError::Unvoiced);
    }
    pitches.sort_by(f64::total_cmp);
    let mid = pitches.len() / 2;
    Ok(if pitches.len() % 2 == 1 {
        pitches[mid]
    } else {
        0.5 * (pitches[mid - 1] + pitches[mid])
    })
}

/// Median autocorrelation pitch over voiced 50 ms frames.
pub fn pitch_autocor(buf: &AudioBuffer) -> Result<f64, FeatureError> {
    pitch_with(buf, &ExtractorConfig::default())
}

fn inharmonicity_of(spectra: &[Spectrum], f0: f64) -> Result<f64, FeatureError> {
    if !(f0.is_finite() && f0 > 0.0) {
        return Err(FeatureError::InvalidF0(f0));
    }
    let Some(first) = spectra.first() else {
        return Err(FeatureError::AllSilent);
    };
    let mut mean = vec![0.0; first.magnitudes.len()];
    for s in spectra {
        for (acc, m) in mean.iter_mut().zip(&s.magnitudes) {
            *acc += m;
        }
    }
    let half = f0 / 2.0;
    let (mut weighted, mut total) = (0.0, 0.0);
    for (k, &m) in mean.iter().enumerate() {
        let f = first.frequency(k);
        if f < half {
            continue;
        }
        let harmonic = (f / f0).round().max(1.0) * f0;
        let d = ((f - harmonic).abs() / half).min(1.0);
        weighted += m * d;
        total += m;
    }
    if total == 0.0 {
        return Err(FeatureError::AllSilent);
    }
    Ok(weighted / total)
}

/// Magnitude-weighted distance of the mean spectrum from the harmonic series
/// of `f0`, normalized so a partial halfway between harmonics scores 1.
pub fn inharmonicity(buf: &AudioBuffer, f0: f64) -> Result<f64, FeatureError> {
    inharmonicity_of(&spectral_frames(buf), f0)
}

/// Normalized autocorrelation of the mean-removed onset curve, plus the lag
/// band (in onset frames) matching the configured tempo range.
struct PulseCurve {
    r: Vec<f64>,
    lag_lo: usize,
    lag_hi: usize,
    frames_per_s: f64,
}

const ONSET_SMOOTH_HALF_WIDTH: usize = 2;

fn smooth_triangular(x: &[f64], half: usize) -> Vec<f64> {
    let weights: Vec<f64> = (0..=2 * half)
        .map(|i| (half + 1 - i.abs_diff(half)) as f64)
        .collect();
    (0..x.len())
        .map(|i| {
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (j, w) in weights.iter().enumerate() {
                if let Some(v) = (i + j).checked_sub(half).and_then(|k| x.get(k)) {
                    acc += w * v;
                    wsum += w;
                }
            }
            acc / wsum
        })
        .collect()
}

fn pulse_curve(buf: &AudioBuffer, cfg: &ExtractorConfig) -> Result<PulseCurve, FeatureError> {
    let spec = FrameSpec::onset();
    // A short triangular smoothing keeps a beat whose period is not a whole
    // number of frames from splitting its autocorrelation peak over two lags.
    let mut onset = smooth_triangular(&onset_strength(buf, spec), ONSET_SMOOTH_HALF_WIDTH);
    let mean = onset.iter().sum::<f64>() / onset.len() as f64;
    for v in &mut onset {
        *v -= mean;
    }
    let frames_per_s = f64::from(buf.sample_rate_hz()) / spec.hop() as f64;
    let lag_lo = ((60.0 * frames_per_s / cfg.tempo_max_bpm).floor() as usize).max(1);
    let lag_hi = (60.0 * frames_per_s / cfg.tempo_min_bpm).ceil() as usize;
    if onset.len() < lag_lo + 2 {
        return Err(FeatureError::NoPulse);
    }
    let max_lag = (lag_hi + 1).min(onset.len() - 1);
    let ac = autocorrelation_normalized(&onset, max_lag).map_err(|_| FeatureError::NoPulse)?;
    if ac.all_zero {
        return Err(FeatureError::NoPulse);
    }
    Ok(PulseCurve {
        r: ac.values,
        lag_lo,
        lag_hi: lag_hi.min(max_lag),
        frames_per_s,
    })
}

fn tempo_of(curve: &PulseCurve, cfg: &ExtractorConfig) -> Result<f64, FeatureError> {
    let r = &curve.r;
    let peak = peak_in_band(r, curve.lag_lo, curve.lag_hi).ok_or(FeatureError::NoPulse)?;
    let lag = peak as f64 + parabolic_offset(r[peak - 1], r[peak], r[peak + 1]);
    let bpm = 60.0 * curve.frames_per_s / lag;
    Ok(bpm.clamp(cfg.tempo_min_bpm, cfg.tempo_max_bpm))
}

fn clarity_of(curve: &PulseCurve) -> f64 {
    curve.r[curve.lag_lo..=curve.lag_hi]
        .iter()
        .cloned()
        .fold(0.0, f64::max)
        .clamp(0.0, 1.0)
}

/// Tempo from the strongest periodicity of the spectral-flux onset curve.
pub fn tempo_autocor(buf: &AudioBuffer) -> Result<f64, FeatureError> {
    let cfg = ExtractorConfig::default();
    tempo_of(&pulse_curve(buf, &cfg)?, &cfg)
}

/// Maximum onset-curve autocorrelation inside the tempo band; 0 without a pulse.
pub fn pulse_clarity(buf: &AudioBuffer) -> f64 {
    pulse_curve(buf, &ExtractorConfig::default())
        .map(|c| clarity_of(&c))
        .unwrap_or(0.0)
}

pub fn extract_all(buf: &AudioBuffer) -> Result<FeatureVector, FeatureError> {
    extract_all_with(buf, &ExtractorConfig::default())
}

/// Computes every descriptor. Individual extractor failures are recorded in
/// the validity bits with a 0.0 value; only an entirely silent buffer errors.
pub fn extract_all_with(
    buf: &AudioBuffer,
    cfg: &ExtractorConfig,
) -> Result<FeatureVector, FeatureError> {
    if buf.is_silent() {
        return Err(FeatureError::AllSilent);
    }
    let mut validity = Validity::ALL_VALID;
    let mut keep = |f: Feature, r: Result<f64, FeatureError>| match r {
        Ok(v) => v,
        Err(e) => {
            log::debug!("{f} unavailable: {e}");
            validity.set(f, false);
            0.0
        }
    };

    let spectra = spectral_frames(buf);
    let frame_rms = framed_rms(buf, FrameSpec::framed_default(buf.sample_rate_hz()));
    let curve = pulse_curve(buf, cfg);
    let tempo = keep(
        Feature::Tempo,
        curve.as_ref().map_err(Clone::clone).and_then(|c| tempo_of(c, cfg)),
    );
    let clarity = curve.as_ref().map(clarity_of).unwrap_or(0.0);
    let rolloff = keep(Feature::Rolloff, rolloff_of(&spectra, cfg.rolloff_threshold));
    let irregularity = keep(
        Feature::SpectralIrregularity,
        irregularity_of(&spectra, cfg.peak_floor),
    );
    let pitch = pitch_with(buf, cfg);
    let inharm = keep(
        Feature::Inharmonicity,
        pitch
            .clone()
            .and_then(|f0| inharmonicity_of(&spectra, f0)),
    );
    let pitch = keep(Feature::Pitch, pitch);

    Ok(FeatureVector {
        sampling_rate_hz: buf.sample_rate_hz(),
        temporal_length_s: temporal_length(buf),
        rms_energy: rms_energy(buf),
        low_energy_rate: low_energy_rate(&frame_rms),
        tempo_bpm: tempo,
        pulse_clarity: clarity,
        zcr_per_s: zcr_per_second(buf),
        rolloff_hz: rolloff,
        spectral_irregularity: irregularity,
        pitch_hz: pitch,
        inharmonicity: inharm,
        validity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synthesize, SignalKind, SynthSpec};
    use std::f64::consts::PI;

    const SR: u32 = 44100;

    fn sine(freq: f64, secs: f64, amp: f64) -> AudioBuffer {
        synthesize(&SynthSpec::new(SignalKind::Sine { frequency_hz: freq }, secs, amp, SR)).unwrap()
    }

    fn clicks(bpm: f64, secs: f64) -> AudioBuffer {
        synthesize(&SynthSpec::new(SignalKind::ClickTrain { bpm }, secs, 1.0, SR)).unwrap()
    }

    fn noise(seed: u64, secs: f64) -> AudioBuffer {
        synthesize(&SynthSpec::new(SignalKind::WhiteNoise { seed }, secs, 0.5, SR)).unwrap()
    }

    fn silence(n: usize) -> AudioBuffer {
        AudioBuffer::new(vec![0.0; n], SR).unwrap()
    }

    fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> AudioBuffer {
        AudioBuffer::new((0..n).map(|i| f(i as f64 / f64::from(SR))).collect(), SR).unwrap()
    }

    #[test]
    fn feature_names_round_trip() {
        for f in Feature::ALL {
            assert_eq!(f.name().parse::<Feature>().unwrap(), f);
            assert_eq!(Feature::ALL[f.index()], f);
        }
        assert!("tempo_bpm".parse::<Feature>().is_err());
    }

    #[test]
    fn temporal_length_examples() {
        assert_eq!(temporal_length(&silence(44100)), 1.0);
        assert_eq!(temporal_length(&silence(22050)), 0.5);
    }

    #[test]
    fn rms_examples() {
        assert!((rms_energy(&sine(440.0, 1.0, 1.0)) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
        assert_eq!(rms_energy(&silence(100)), 0.0);
        assert_eq!(rms_energy(&AudioBuffer::new(vec![0.5; 100], SR).unwrap()), 0.5);
    }

    #[test]
    fn framed_rms_examples() {
        let spec = FrameSpec::framed_default(SR);
        let s = framed_rms(&sine(440.0, 1.0, 0.8), spec);
        let (lo, hi) = s
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        assert!((hi - lo) / hi < 0.02);

        assert!(framed_rms(&silence(10_000), spec).iter().all(|&v| v == 0.0));

        // loud first half, silent second half; frames straddling the edge excluded
        let n = SR as usize;
        let half = from_fn(n, |t| if t < 0.5 { 0.8 * (2.0 * PI * 441.0 * t).sin() } else { 0.0 });
        let r = framed_rms(&half, spec);
        for (i, v) in r.iter().enumerate() {
            let (start, end) = (i * spec.hop(), i * spec.hop() + spec.frame_len());
            if end <= n / 2 {
                assert!((v - 0.8 / 2f64.sqrt()).abs() < 0.01, "frame {i}: {v}");
            } else if start >= n / 2 {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn low_energy_examples() {
        assert_eq!(low_energy_rate(&[0.1, 0.1, 0.1]), 0.0);
        assert_eq!(low_energy_rate(&[0.8, 0.0, 0.8, 0.0]), 0.5);
        assert_eq!(low_energy_rate(&[0.3; 7]), 0.0);
    }

    #[test]
    fn zcr_examples() {
        let z = zcr_per_second(&sine(440.0, 1.0, 1.0));
        assert!((z - 880.0).abs() <= 2.0, "{z}");
        assert_eq!(zcr_per_second(&silence(1000)), 0.0);
        assert!(zcr_per_second(&noise(3, 1.0)) > 1000.0);
        // exact zeros between opposite signs do not count
        let b = AudioBuffer::new(vec![1.0, 0.0, -1.0, 0.0, 1.0], 5).unwrap();
        assert_eq!(zcr_per_second(&b), 0.0);
    }

    #[test]
    fn rolloff_of_single_sine() {
        let r = rolloff(&sine(440.0, 1.0, 1.0), 0.85).unwrap();
        let bin = f64::from(SR) / 2048.0;
        assert!((r - 440.0).abs() <= bin, "{r}");
    }

    /// Cumulative-energy oracle over an explicitly built two-partial spectrum.
    #[test]
    fn rolloff_needs_both_partials_of_equal_pair() {
        let b = from_fn(SR as usize, |t| {
            0.45 * (2.0 * PI * 500.0 * t).sin() + 0.45 * (2.0 * PI * 5000.0 * t).sin()
        });
        let r = rolloff(&b, 0.85).unwrap();
        let bin = f64::from(SR) / 2048.0;
        assert!((r - 5000.0).abs() <= bin, "{r}");
        // the lower partial alone carries about half the energy
        let low = rolloff(&b, 0.4).unwrap();
        assert!((low - 500.0).abs() <= bin, "{low}");
    }

    #[test]
    fn rolloff_errors() {
        assert_eq!(rolloff(&silence(5000), 0.85), Err(FeatureError::AllSilent));
        assert_eq!(
            rolloff(&sine(440.0, 0.1, 1.0), 0.0),
            Err(FeatureError::InvalidThreshold(0.0))
        );
        assert!(rolloff(&sine(440.0, 0.1, 1.0), 1.5).is_err());
    }

    #[test]
    fn irregularity_of_pure_and_paired_partials() {
        // bin-centered partials keep the Hann main lobe to three bins
        let bin = f64::from(SR) / 2048.0;
        let single = sine(40.0 * bin, 1.0, 0.9);
        let v = spectral_irregularity(&single).unwrap();
        assert!((v - 1.0).abs() <= 0.05, "{v}");

        let pair = from_fn(SR as usize, |t| {
            0.45 * (2.0 * PI * 40.0 * bin * t).sin() + 0.45 * (2.0 * PI * 90.0 * bin * t).sin()
        });
        let v = spectral_irregularity(&pair).unwrap();
        assert!((v - 0.5).abs() <= 0.05, "{v}");

        assert_eq!(spectral_irregularity(&silence(5000)), Err(FeatureError::AllSilent));
    }

    #[test]
    fn pitch_of_sine_and_harmonic_stack() {
        let p = pitch_autocor(&sine(440.0, 1.0, 1.0)).unwrap();
        assert!((p - 440.0).abs() <= 5.0, "{p}");

        let stack = synthesize(&SynthSpec::new(
            SignalKind::HarmonicStack {
                fundamental_hz: 220.0,
                harmonics: 3,
            },
            1.0,
            0.9,
            SR,
        ))
        .unwrap();
        let p = pitch_autocor(&stack).unwrap();
        assert!((p - 220.0).abs() <= 5.0, "{p}");

        let low = pitch_autocor(&sine(80.0, 1.0, 1.0)).unwrap();
        assert!((low - 80.0).abs() <= 2.0, "{low}");
    }

    #[test]
    fn noise_and_silence_are_unvoiced() {
        assert_eq!(pitch_autocor(&noise(11, 1.0)), Err(FeatureError::Unvoiced));
        assert_eq!(pitch_autocor(&silence(5000)), Err(FeatureError::Unvoiced));
    }

    #[test]
    fn inharmonicity_examples() {
        let stack = synthesize(&SynthSpec::new(
            SignalKind::HarmonicStack {
                fundamental_hz: 440.0,
                harmonics: 4,
            },
            1.0,
            0.9,
            SR,
        ))
        .unwrap();
        let v = inharmonicity(&stack, 440.0).unwrap();
        assert!(v <= 0.1, "{v}");

        let v = inharmonicity(&sine(660.0, 1.0, 1.0), 440.0).unwrap();
        assert!(v >= 0.9, "{v}");

        assert_eq!(inharmonicity(&silence(5000), 440.0), Err(FeatureError::AllSilent));
        assert!(matches!(inharmonicity(&sine(440.0, 0.1, 1.0), 0.0), Err(FeatureError::InvalidF0(_))));
    }

    #[test]
    fn tempo_of_click_trains() {
        let t = tempo_autocor(&clicks(120.0, 8.0)).unwrap();
        assert!((t - 120.0).abs() <= 2.0, "{t}");
        let t = tempo_autocor(&clicks(150.0, 8.0)).unwrap();
        assert!((t - 150.0).abs() <= 2.0, "{t}");
        assert_eq!(tempo_autocor(&silence(SR as usize * 4)), Err(FeatureError::NoPulse));
    }

    #[test]
    fn pulse_clarity_examples() {
        let c = pulse_clarity(&clicks(120.0, 8.0));
        assert!(c >= 0.8, "{c}");
        let c = pulse_clarity(&noise(42, 8.0));
        assert!(c <= 0.3, "{c}");
        assert_eq!(pulse_clarity(&silence(SR as usize * 4)), 0.0);
    }

    #[test]
    fn extract_all_on_sine() {
        let v = extract_all(&sine(440.0, 1.0, 1.0)).unwrap();
        assert_eq!(v.sampling_rate_hz, SR);
        assert!((v.temporal_length_s - 1.0).abs() < 1e-12);
        assert!((v.zcr_per_s - 880.0).abs() <= 2.0);
        assert!((v.pitch_hz - 440.0).abs() <= 5.0);
        assert!((v.rolloff_hz - 440.0).abs() <= 22.0);
        assert!((v.rms_energy - std::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-3);
        assert!(v.is_valid(Feature::Pitch));
        assert!(v.values().iter().all(|x| x.is_finite()));
        assert!(v.rolloff_hz <= f64::from(SR) / 2.0);
    }

    #[test]
    fn extract_all_on_clicks_and_silence() {
        let v = extract_all(&clicks(120.0, 8.0)).unwrap();
        assert!((v.tempo_bpm - 120.0).abs() <= 2.0);
        assert!(v.pulse_clarity >= 0.8);
        assert_eq!(extract_all(&silence(10_000)), Err(FeatureError::AllSilent));
    }

    #[test]
    fn degenerate_fields_are_flagged_not_fatal() {
        let v = extract_all(&noise(5, 2.0)).unwrap();
        assert!(!v.is_valid(Feature::Pitch));
        assert!(!v.is_valid(Feature::Inharmonicity));
        assert_eq!(v.pitch_hz, 0.0);
        assert!(v.is_valid(Feature::Rolloff));
        assert!(v.is_valid(Feature::ZeroCrossingRate));
    }

    #[test]
    fn extraction_is_deterministic() {
        let b = noise(9, 1.5);
        let a = extract_all(&b).unwrap();
        let c = extract_all(&b).unwrap();
        assert_eq!(
            a.values().map(f64::to_bits),
            c.values().map(f64::to_bits)
        );
    }
}
