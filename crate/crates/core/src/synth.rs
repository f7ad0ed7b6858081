//! Deterministic test signals and a labeled synthetic corpus.
//!
//! All randomness comes from [`NoiseRng`], an xorshift64* generator
//! (shifts 12/25/27, multiplier `0x2545F4914F6CDD1D`) whose state is seeded
//! through one splitmix64 step (increment `0x9E3779B97F4A7C15`, multipliers
//! `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`). The same recurrence in any
//! language reproduces the fixtures bit for bit.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::wav::{encode_wav_pcm16, AudioBuffer, WavError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
    #[error("at most {max} classes are available, {requested} requested")]
    TooManyClasses { requested: usize, max: usize },
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// xorshift64* with a splitmix64-scrambled seed.
#[derive(Debug, Clone)]
pub struct NoiseRng {
    state: u64,
}

impl NoiseRng {
    pub fn new(seed: u64) -> Self {
        let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        Self {
            state: if z == 0 { 0x9E37_79B9_7F4A_7C15 } else { z },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `[-1, 1)`.
    pub fn next_signed(&mut self) -> f64 {
        2.0 * self.next_unit() - 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignalKind {
    Sine { frequency_hz: f64 },
    /// Equal-amplitude partials at `k · fundamental_hz` for `k = 1..=harmonics`.
    HarmonicStack { fundamental_hz: f64, harmonics: u32 },
    /// Single-sample unit impulses every `60 / bpm` seconds, starting at t = 0.
    ClickTrain { bpm: f64 },
    WhiteNoise { seed: u64 },
    /// Weighted sum of unit-amplitude components, rescaled by `Σ |weight|`.
    Mix(Vec<(SignalKind, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub kind: SignalKind,
    pub duration_s: f64,
    pub amplitude: f64,
    pub sample_rate_hz: u32,
}

impl SynthSpec {
    pub fn new(kind: SignalKind, duration_s: f64, amplitude: f64, sample_rate_hz: u32) -> Self {
        Self {
            kind,
            duration_s,
            amplitude,
            sample_rate_hz,
        }
    }

    fn sample_count(&self) -> usize {
        (self.duration_s * f64::from(self.sample_rate_hz)).round() as usize
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.sample_rate_hz == 0 {
            return bad("sample rate must be positive".into());
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) || self.sample_count() < 2 {
            return bad(format!("duration {} s yields fewer than 2 samples", self.duration_s));
        }
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return bad(format!("amplitude {} outside (0, 1]", self.amplitude));
        }
        validate_kind(&self.kind, f64::from(self.sample_rate_hz) / 2.0)
    }
}

fn validate_kind(kind: &SignalKind, nyquist: f64) -> Result<(), SynthError> {
    let bad = |m: String| Err(SynthError::InvalidSpec(m));
    match kind {
        SignalKind::Sine { frequency_hz: f } if !(*f > 0.0 && *f < nyquist) => {
            bad(format!("sine frequency {f} Hz outside (0, {nyquist}) Hz"))
        }
        SignalKind::HarmonicStack {
            fundamental_hz: f,
            harmonics: n,
        } if *n == 0 || !(*f > 0.0 && f * f64::from(*n) < nyquist) => {
            bad(format!("{n} harmonics of {f} Hz do not fit below {nyquist} Hz"))
        }
        SignalKind::ClickTrain { bpm } if !(bpm.is_finite() && *bpm > 0.0) => {
            bad(format!("click tempo {bpm} bpm must be positive"))
        }
        SignalKind::Mix(parts) => {
            if parts.is_empty() || parts.iter().all(|(_, w)| *w == 0.0) {
                return bad("mix needs at least one non-zero weight".into());
            }
            if parts.iter().any(|(_, w)| !w.is_finite()) {
                return bad("mix weights must be finite".into());
            }
            parts.iter().try_for_each(|(k, _)| validate_kind(k, nyquist))
        }
        _ => Ok(()),
    }
}

/// Unit-peak rendering of one component.
fn render(kind: &SignalKind, n: usize, sr: f64) -> Vec<f64> {
    match kind {
        SignalKind::Sine { frequency_hz } => (0..n)
            .map(|i| (2.0 * PI * frequency_hz * i as f64 / sr).sin())
            .collect(),
        SignalKind::HarmonicStack {
            fundamental_hz,
            harmonics,
        } => {
            let h = f64::from(*harmonics);
            (0..n)
                .map(|i| {
                    let t = i as f64 / sr;
                    (1..=*harmonics)
                        .map(|k| (2.0 * PI * f64::from(k) * fundamental_hz * t).sin())
                        .sum::<f64>()
                        / h
                })
                .collect()
        }
        SignalKind::ClickTrain { bpm } => {
            let mut out = vec![0.0; n];
            let period = 60.0 / bpm * sr;
            let mut k = 0.0;
            while let Some(slot) = out.get_mut((k * period).round() as usize) {
                *slot = 1.0;
                k += 1.0;
            }
            out
        }
        SignalKind::WhiteNoise { seed } => {
            let mut rng = NoiseRng::new(*seed);
            (0..n).map(|_| rng.next_signed()).collect()
        }
        SignalKind::Mix(parts) => {
            let norm: f64 = parts.iter().map(|(_, w)| w.abs()).sum();
            let mut out = vec![0.0; n];
            for (k, w) in parts {
                for (o, v) in out.iter_mut().zip(render(k, n, sr)) {
                    *o += w / norm * v;
                }
            }
            out
        }
    }
}

/// Renders `spec`; every sample lies in `[-amplitude, amplitude]`.
pub fn synthesize(spec: &SynthSpec) -> Result<AudioBuffer, SynthError> {
    spec.validate()?;
    let samples = render(&spec.kind, spec.sample_count(), f64::from(spec.sample_rate_hz))
        .into_iter()
        .map(|v| spec.amplitude * v)
        .collect();
    Ok(AudioBuffer::new(samples, spec.sample_rate_hz)?)
}

/// Parameter bands of one synthetic class.
///
/// Each file draws a position `u ∈ [0, 1]` and interpolates tempo, noise
/// level, quiet-tail length, off-beat burst level and a small fundamental
/// drift from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassRecipe {
    pub name: &'static str,
    pub bpm: (f64, f64),
    pub fundamental_hz: f64,
    pub harmonics: u32,
    pub noise: (f64, f64),
    pub gain: f64,
    /// Fraction of the file, at the end, played at reduced level.
    pub quiet_tail: (f64, f64),
}

pub const CORPUS_SAMPLE_RATE: u32 = 44100;
pub const CORPUS_DURATION_S: f64 = 6.0;

pub const RECIPES: [ClassRecipe; 8] = [
    ClassRecipe { name: "slow_dark", bpm: (90.0, 110.0), fundamental_hz: 110.0, harmonics: 2, noise: (0.02, 0.07), gain: 0.5, quiet_tail: (0.05, 0.20) },
    ClassRecipe { name: "fast_bright", bpm: (150.0, 170.0), fundamental_hz: 660.0, harmonics: 8, noise: (0.05, 0.20), gain: 0.9, quiet_tail: (0.40, 0.55) },
    ClassRecipe { name: "mid_warm", bpm: (120.0, 135.0), fundamental_hz: 330.0, harmonics: 4, noise: (0.05, 0.14), gain: 0.7, quiet_tail: (0.22, 0.37) },
    ClassRecipe { name: "lento_pure", bpm: (60.0, 70.0), fundamental_hz: 220.0, harmonics: 1, noise: (0.03, 0.12), gain: 0.4, quiet_tail: (0.30, 0.45) },
    ClassRecipe { name: "presto_hiss", bpm: (180.0, 195.0), fundamental_hz: 880.0, harmonics: 6, noise: (0.10, 0.35), gain: 0.8, quiet_tail: (0.10, 0.25) },
    ClassRecipe { name: "walk_reed", bpm: (75.0, 85.0), fundamental_hz: 165.0, harmonics: 10, noise: (0.03, 0.12), gain: 0.6, quiet_tail: (0.45, 0.60) },
    ClassRecipe { name: "groove_bell", bpm: (138.0, 146.0), fundamental_hz: 990.0, harmonics: 3, noise: (0.06, 0.16), gain: 0.55, quiet_tail: (0.15, 0.30) },
    ClassRecipe { name: "drift_organ", bpm: (44.0, 54.0), fundamental_hz: 130.0, harmonics: 12, noise: (0.04, 0.14), gain: 0.45, quiet_tail: (0.35, 0.50) },
];

/// One rendered corpus member.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusFile {
    pub file_id: String,
    pub class_label: String,
    pub samples: Vec<f64>,
}

/// Whether a corpus pins files to its class band edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusKind {
    /// Files 0 and 1 of each class sit at the band edges, independent of the
    /// seed, so the class ranges learned from the corpus span the whole band.
    #[default]
    Training,
    /// Every file is drawn from the band interior; no file coincides with a
    /// training file.
    HeldOut,
}

/// Per-file draw: band position plus the class's fixed click offset (s),
/// tonal phase and noise seed.
struct FileDraw {
    u: f64,
    click_offset_s: f64,
    phase: f64,
    noise_seed: u64,
}

fn draw(class: usize, file: usize, seed: u64, kind: CorpusKind) -> FileDraw {
    // Everything except the band position is fixed per class, so each
    // descriptor is a smooth function of `u` and the band-edge files of a
    // training corpus bracket every interior file.
    let mut class_rng = NoiseRng::new(0xC0FF_EE00 + class as u64);
    let click_offset_s = 0.02 + 0.2 * class_rng.next_unit();
    let phase = 2.0 * PI * class_rng.next_unit();
    let noise_seed = class_rng.next_u64();
    let u = if kind == CorpusKind::Training && file < 2 {
        file as f64
    } else {
        let mut rng = NoiseRng::new(
            seed.wrapping_mul(0x1000_0000_01B3) ^ ((class as u64) << 32) ^ file as u64,
        );
        // stratified: a band tertile, then the middle 60% of it, so files
        // keep clear of the equal-width cut points
        let tertile = (rng.next_u64() % 3) as f64;
        (tertile + 0.2 + 0.6 * rng.next_unit()) / 3.0
    };
    FileDraw {
        u,
        click_offset_s,
        phase,
        noise_seed,
    }
}

const QUIET_TAIL_GAIN: f64 = 0.3;
const F0_DRIFT: f64 = 0.03;
const GHOST_GAIN: f64 = 0.5;
const GHOSTS_PER_BEAT: usize = 3;

fn render_file(recipe: &ClassRecipe, d: &FileDraw) -> Vec<f64> {
    let sr = f64::from(CORPUS_SAMPLE_RATE);
    let n = (CORPUS_DURATION_S * sr).round() as usize;
    let lerp = |(lo, hi): (f64, f64)| lo + d.u * (hi - lo);
    let bpm = lerp(recipe.bpm);
    let noise_level = lerp(recipe.noise);
    // the fundamental drifts up across the band
    let f0 = recipe.fundamental_hz * (1.0 + F0_DRIFT * d.u);

    let tone_weight = 0.5;
    let mut x: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let tone: f64 = (1..=recipe.harmonics)
                .map(|k| (2.0 * PI * f64::from(k) * f0 * t + d.phase).sin())
                .sum::<f64>()
                / f64::from(recipe.harmonics);
            tone_weight * tone
        })
        .collect();

    let mut rng = NoiseRng::new(d.noise_seed);
    for v in &mut x {
        *v += noise_level * rng.next_signed();
    }

    // Clicks are 12 ms exponentially decaying noise bursts.
    let period = 60.0 / bpm * sr;
    let burst = (0.012 * sr) as usize;
    let mut burst_rng = NoiseRng::new(d.noise_seed ^ 0x5EED);
    let mut k = 0.0;
    loop {
        let start = (d.click_offset_s * sr + k * period).round() as usize;
        if start >= n {
            break;
        }
        for j in 0..burst.min(n - start) {
            let env = (-(j as f64) / (burst as f64 / 4.0)).exp();
            x[start + j] += env * burst_rng.next_signed();
        }
        k += 1.0;
    }

    // Off-beat bursts at fixed random times, louder across the band, add
    // aperiodic onsets so pulse clarity falls with `u`.
    let mut ghost_rng = NoiseRng::new(d.noise_seed ^ 0x6057);
    let ghost_gain = d.u.sqrt() * GHOST_GAIN;
    // a fixed count per class, so the draw sequence does not shift with tempo
    let mid_bpm = 0.5 * (recipe.bpm.0 + recipe.bpm.1);
    let ghosts = GHOSTS_PER_BEAT * (CORPUS_DURATION_S * mid_bpm / 60.0).round() as usize;
    for _ in 0..ghosts {
        let start = (ghost_rng.next_unit() * n as f64) as usize;
        for j in 0..burst.min(n - start) {
            let env = (-(j as f64) / (burst as f64 / 4.0)).exp();
            x[start + j] += ghost_gain * env * ghost_rng.next_signed();
        }
    }

    // a quiet tail that lengthens across the band raises the low-energy rate
    let tail_start = ((1.0 - lerp(recipe.quiet_tail)) * n as f64) as usize;
    for v in &mut x[tail_start..] {
        *v *= QUIET_TAIL_GAIN;
    }

    let peak = 1.0 + GHOST_GAIN + tone_weight + recipe.noise.1;
    x.iter().map(|v| recipe.gain * v / peak).collect()
}

/// Renders `files_per_class` files for each of the first `n_classes` recipes.
pub fn corpus_signals(
    n_classes: usize,
    files_per_class: usize,
    seed: u64,
    kind: CorpusKind,
) -> Result<Vec<CorpusFile>, SynthError> {
    if n_classes > RECIPES.len() {
        return Err(SynthError::TooManyClasses {
            requested: n_classes,
            max: RECIPES.len(),
        });
    }
    if n_classes == 0 || files_per_class == 0 {
        return Err(SynthError::InvalidSpec(
            "class and file counts must be positive".into(),
        ));
    }
    let mut out = Vec::with_capacity(n_classes * files_per_class);
    for (c, recipe) in RECIPES.iter().take(n_classes).enumerate() {
        for f in 0..files_per_class {
            out.push(CorpusFile {
                file_id: format!("{}_{:03}", recipe.name, f),
                class_label: recipe.name.to_string(),
                samples: render_file(recipe, &draw(c, f, seed, kind)),
            });
        }
    }
    Ok(out)
}

/// What `generate_corpus` wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    pub wav_paths: Vec<PathBuf>,
    pub labels_path: PathBuf,
}

/// Writes a training corpus: 16-bit 44.1 kHz WAV files plus `labels.csv`
/// (`file_id,class_label`).
pub fn generate_corpus(
    n_classes: usize,
    files_per_class: usize,
    seed: u64,
    out_dir: impl AsRef<Path>,
) -> Result<CorpusManifest, SynthError> {
    generate_corpus_with(n_classes, files_per_class, seed, CorpusKind::Training, out_dir)
}

pub fn generate_corpus_with(
    n_classes: usize,
    files_per_class: usize,
    seed: u64,
    kind: CorpusKind,
    out_dir: impl AsRef<Path>,
) -> Result<CorpusManifest, SynthError> {
    let out_dir = out_dir.as_ref();
    let files = corpus_signals(n_classes, files_per_class, seed, kind)?;
    std::fs::create_dir_all(out_dir)?;
    let mut labels = String::from("file_id,class_label\n");
    let mut wav_paths = Vec::with_capacity(files.len());
    for f in &files {
        let path = out_dir.join(format!("{}.wav", f.file_id));
        std::fs::write(&path, encode_wav_pcm16(&f.samples, CORPUS_SAMPLE_RATE))?;
        labels.push_str(&format!("{},{}\n", f.file_id, f.class_label));
        wav_paths.push(path);
    }
    let labels_path = out_dir.join("labels.csv");
    std::fs::write(&labels_path, labels)?;
    Ok(CorpusManifest {
        wav_paths,
        labels_path,
    })
}
