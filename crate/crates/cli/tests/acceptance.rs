//! Acceptance suite: eight end-to-end criteria, one PASS/FAIL line each.
//!
//! Every criterion runs even if an earlier one fails; the test fails at the
//! end if any did.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use genregauge::classifier::{evaluate_rows, read_results};
use genregauge::features::{
    extract_all, inharmonicity, pitch_autocor, pulse_clarity, rms_energy, rolloff, tempo_autocor,
    zcr_per_second, Feature, FeatureVector,
};
use genregauge::infotheory::{gain, gain_ratio, split_info, DiscreteDataset};
use genregauge::synth::{synthesize, NoiseRng, SignalKind, SynthSpec};
use genregauge::training::{compute_thresholds, select_features, FormulaVariant, GainRatioMatrix};
use genregauge::AudioBuffer;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// 1 & 3: information theory against a brute-force oracle

const ROW_KINDS: usize = 3 * 3 * 2;

fn decode(kind: usize) -> (usize, usize, usize) {
    (kind / 6, (kind / 2) % 3, kind % 2)
}

/// Every multiset of 1..=max_rows rows over two ternary attributes and a
/// binary class. Row order cannot change any of the measures, so multisets
/// cover every distinct dataset.
fn all_datasets(max_rows: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, start: usize, left: usize, out: &mut Vec<Vec<usize>>) {
        if !prefix.is_empty() {
            out.push(prefix.clone());
        }
        if left == 0 {
            return;
        }
        for k in start..ROW_KINDS {
            prefix.push(k);
            extend(prefix, k, left - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), 0, max_rows, &mut out);
    out
}

fn log2_entropy(counts: &[f64]) -> f64 {
    let n: f64 = counts.iter().sum();
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / n;
            -p * p.log2()
        })
        .sum()
}

/// (gain, split_info, gain_ratio) computed from a contingency table.
fn oracle(rows: &[usize], attr: usize) -> (f64, f64, f64) {
    let mut table = [[0.0f64; 2]; 3];
    for &k in rows {
        let (a0, a1, c) = decode(k);
        let v = if attr == 0 { a0 } else { a1 };
        table[v][c] += 1.0;
    }
    let n = rows.len() as f64;
    let class_totals = [
        table.iter().map(|r| r[0]).sum::<f64>(),
        table.iter().map(|r| r[1]).sum::<f64>(),
    ];
    let expected: f64 = table
        .iter()
        .map(|r| (r[0] + r[1]) / n * log2_entropy(r))
        .sum();
    let g = log2_entropy(&class_totals) - expected;
    let sizes: Vec<f64> = table.iter().map(|r| r[0] + r[1]).collect();
    let s = log2_entropy(&sizes);
    let ratio = if s == 0.0 { 0.0 } else { g / s };
    (g, s, ratio)
}

fn library_dataset(rows: &[usize]) -> DiscreteDataset {
    const VALUES: [&str; 3] = ["lo", "mid", "hi"];
    const CLASSES: [&str; 2] = ["yes", "no"];
    let mut ds = DiscreteDataset::new(["a0", "a1"]);
    for &k in rows {
        let (a0, a1, c) = decode(k);
        ds.push([VALUES[a0], VALUES[a1]], CLASSES[c]).unwrap();
    }
    ds
}

fn criterion_1() -> Check {
    let datasets = all_datasets(6);
    let mut worst = 0.0f64;
    for rows in &datasets {
        let ds = library_dataset(rows);
        for (attr, name) in ["a0", "a1"].iter().enumerate() {
            let (g, s, r) = oracle(rows, attr);
            let got = (
                gain(&ds, name).map_err(|e| e.to_string())?,
                split_info(&ds, name).map_err(|e| e.to_string())?,
                gain_ratio(&ds, name).map_err(|e| e.to_string())?,
            );
            for (a, b) in [(got.0, g), (got.1, s), (got.2, r)] {
                worst = worst.max((a - b).abs());
                ensure((a - b).abs() <= 1e-12, || {
                    format!("rows {rows:?} attribute {name}: library {got:?} oracle {:?}", (g, s, r))
                })?;
            }
        }
    }
    Ok(format!("{} datasets, max deviation {worst:.1e}", datasets.len()))
}

fn criterion_3() -> Check {
    let implied_split: f64 = 0.3037 / 0.2428;
    ensure((implied_split - 1.2508).abs() <= 0.005, || {
        format!("implied split info {implied_split}")
    })?;
    let mut checked = 0;
    for rows in all_datasets(6) {
        let ds = library_dataset(&rows);
        for name in ["a0", "a1"] {
            let g = gain(&ds, name).map_err(|e| e.to_string())?;
            let s = split_info(&ds, name).map_err(|e| e.to_string())?;
            let r = gain_ratio(&ds, name).map_err(|e| e.to_string())?;
            let identity = if s == 0.0 {
                r == 0.0
            } else {
                (g - r * s).abs() <= 1e-12
            };
            ensure(identity, || format!("rows {rows:?} {name}: gain {g} ratio {r} split {s}"))?;
            checked += 1;
        }
    }
    Ok(format!(
        "implied split info {implied_split:.4}; gain = ratio x split on {checked} attribute splits"
    ))
}

// ---------------------------------------------------------------------------
// 2 & 4: reference gain-ratio table

struct ReferenceTable {
    features: Vec<Feature>,
    classes: Vec<String>,
    entries: Vec<Vec<f64>>,
    summary: BTreeMap<String, Vec<f64>>,
}

fn reference_table() -> ReferenceTable {
    let text = include_str!("fixtures/reference_gain_ratios.tsv");
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split('\t').collect();
    let features = header[1..].iter().map(|h| h.parse().unwrap()).collect();
    let mut classes = Vec::new();
    let mut entries = Vec::new();
    let mut summary = BTreeMap::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split('\t').collect();
        let values: Vec<f64> = cells[1..].iter().map(|c| c.parse().unwrap()).collect();
        match cells[0] {
            "Max" | "Avg" | "Threshold" => {
                summary.insert(cells[0].to_string(), values);
            }
            name => {
                classes.push(name.to_string());
                entries.push(values);
            }
        }
    }
    ReferenceTable {
        features,
        classes,
        entries,
        summary,
    }
}

fn reference_matrix(t: &ReferenceTable) -> Result<GainRatioMatrix, String> {
    GainRatioMatrix::from_entries(t.classes.clone(), t.features.clone(), t.entries.clone())
        .map_err(|e| e.to_string())
}

fn criterion_2() -> Check {
    let t = reference_table();
    ensure(t.classes.len() == 11 && t.features.len() == 9, || "fixture shape".into())?;
    let m = reference_matrix(&t)?;
    let thresholds = compute_thresholds(&m, FormulaVariant::TableMean);
    let mut worst = 0.0f64;
    for (j, f) in t.features.iter().enumerate() {
        for (row, computed) in [
            ("Max", m.max_row[f]),
            ("Avg", m.avg_row[f]),
            ("Threshold", thresholds[f]),
        ] {
            let printed = t.summary[row][j];
            worst = worst.max((computed - printed).abs());
            ensure((computed - printed).abs() <= 0.0005, || {
                format!("{row} {}: computed {computed:.5}, printed {printed}", f.label())
            })?;
        }
    }
    let selected = select_features(&thresholds, 3).map_err(|e| e.to_string())?;
    let got: BTreeSet<Feature> = selected.iter().copied().collect();
    let want: BTreeSet<Feature> = [Feature::Rolloff, Feature::ZeroCrossingRate, Feature::Tempo].into();
    ensure(got == want, || format!("selected {selected:?}"))?;
    Ok(format!(
        "27 summary cells within {worst:.5}; selected {}",
        selected.iter().map(|f| f.label()).collect::<Vec<_>>().join(", ")
    ))
}

fn criterion_4() -> Check {
    let t = reference_table();
    let m = reference_matrix(&t)?;
    let text = compute_thresholds(&m, FormulaVariant::TextFormula)[&Feature::Rolloff];
    let table = compute_thresholds(&m, FormulaVariant::TableMean)[&Feature::Rolloff];
    ensure((text - 0.6019).abs() <= 0.0005, || format!("text formula {text}"))?;
    ensure((table - 0.4964).abs() <= 0.0005, || format!("table mean {table}"))?;
    Ok(format!("Roll Off: text formula {text:.4}, table mean {table:.4}"))
}

// ---------------------------------------------------------------------------
// 5 & 6: extractors

fn signal(kind: SignalKind, duration_s: f64, amplitude: f64) -> AudioBuffer {
    synthesize(&SynthSpec::new(kind, duration_s, amplitude, 44100)).unwrap()
}

fn within(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || format!("{name}: {got} (want {want} ± {tol})"))
}

fn criterion_5() -> Check {
    let sine = signal(SignalKind::Sine { frequency_hz: 440.0 }, 1.0, 1.0);
    let rms = rms_energy(&sine);
    let zcr = zcr_per_second(&sine);
    let pitch = pitch_autocor(&sine).map_err(|e| e.to_string())?;
    let roll = rolloff(&sine, 0.85).map_err(|e| e.to_string())?;
    let inharm = inharmonicity(&sine, 440.0).map_err(|e| e.to_string())?;
    within("sine rms", rms, std::f64::consts::FRAC_1_SQRT_2, 1e-3)?;
    within("sine zcr", zcr, 880.0, 2.0)?;
    within("sine pitch", pitch, 440.0, 5.0)?;
    within("sine roll-off", roll, 440.0, 22.0)?;
    ensure(inharm <= 0.1, || format!("sine inharmonicity {inharm}"))?;

    let clicks = signal(SignalKind::ClickTrain { bpm: 120.0 }, 8.0, 1.0);
    let tempo = tempo_autocor(&clicks).map_err(|e| e.to_string())?;
    let clarity = pulse_clarity(&clicks);
    within("click tempo", tempo, 120.0, 2.0)?;
    ensure(clarity >= 0.8, || format!("click pulse clarity {clarity}"))?;

    let noise = signal(SignalKind::WhiteNoise { seed: 5 }, 8.0, 0.5);
    let noise_clarity = pulse_clarity(&noise);
    ensure(noise_clarity <= 0.3, || format!("noise pulse clarity {noise_clarity}"))?;

    Ok(format!(
        "sine rms {rms:.4} zcr {zcr:.1} pitch {pitch:.2} roll-off {roll:.1} inharm {inharm:.3}; \
         clicks {tempo:.2} bpm clarity {clarity:.3}; noise clarity {noise_clarity:.3}"
    ))
}

const SCALE_INVARIANT: [Feature; 8] = [
    Feature::ZeroCrossingRate,
    Feature::Rolloff,
    Feature::Pitch,
    Feature::Tempo,
    Feature::PulseClarity,
    Feature::LowEnergy,
    Feature::SpectralIrregularity,
    Feature::Inharmonicity,
];

fn random_signal(rng: &mut NoiseRng) -> AudioBuffer {
    let pick = |rng: &mut NoiseRng, lo: f64, hi: f64| lo + (hi - lo) * rng.next_unit();
    let kind = match rng.next_u64() % 5 {
        0 => SignalKind::Sine {
            frequency_hz: pick(rng, 80.0, 4000.0),
        },
        1 => SignalKind::HarmonicStack {
            fundamental_hz: pick(rng, 80.0, 600.0),
            harmonics: 2 + (rng.next_u64() % 7) as u32,
        },
        2 => SignalKind::ClickTrain {
            bpm: pick(rng, 50.0, 190.0),
        },
        3 => SignalKind::WhiteNoise {
            seed: rng.next_u64(),
        },
        _ => SignalKind::Mix(vec![
            (
                SignalKind::HarmonicStack {
                    fundamental_hz: pick(rng, 100.0, 500.0),
                    harmonics: 4,
                },
                1.0,
            ),
            (
                SignalKind::ClickTrain {
                    bpm: pick(rng, 60.0, 180.0),
                },
                pick(rng, 0.5, 2.0),
            ),
            (
                SignalKind::WhiteNoise {
                    seed: rng.next_u64(),
                },
                pick(rng, 0.05, 0.5),
            ),
        ]),
    };
    let amplitude = pick(rng, 0.05, 0.5);
    signal(kind, 4.0, amplitude)
}

fn relative_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn compare_scaled(base: &FeatureVector, scaled: &FeatureVector, g: f64) -> Result<f64, String> {
    let mut worst = 0.0f64;
    for f in SCALE_INVARIANT {
        ensure(base.is_valid(f) == scaled.is_valid(f), || {
            format!("gain {g}: validity of {} changed", f.name())
        })?;
        let gap = relative_gap(base.get(f), scaled.get(f));
        worst = worst.max(gap);
        ensure(gap <= 1e-6, || {
            format!("gain {g}: {} {} vs {}", f.name(), base.get(f), scaled.get(f))
        })?;
    }
    let want = g * base.rms_energy;
    ensure(relative_gap(scaled.rms_energy, want) <= 1e-9, || {
        format!("gain {g}: rms {} vs {want}", scaled.rms_energy)
    })?;
    Ok(worst)
}

fn criterion_6() -> Check {
    let mut rng = NoiseRng::new(0xA11CE);
    let mut worst = 0.0f64;
    let signals = 12;
    for _ in 0..signals {
        let buf = random_signal(&mut rng);
        let base = extract_all(&buf).map_err(|e| e.to_string())?;
        for g in [0.1, 0.5, 2.0] {
            let scaled = extract_all(&buf.scaled(g)).map_err(|e| e.to_string())?;
            worst = worst.max(compare_scaled(&base, &scaled, g)?);
        }
    }
    Ok(format!(
        "{signals} random signals x 3 gains, max relative change {worst:.1e}"
    ))
}

// ---------------------------------------------------------------------------
// 7 & 8: command-line pipeline on synthetic corpora

const TRAIN_SEED: &str = "42";
const HELD_OUT_SEED: &str = "43";

fn genregauge(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_genregauge"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "genregauge {}: {}\n{}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

/// synth -> extract -> train -> classify -> report inside `dir`.
fn pipeline(dir: &Path) -> Result<f64, String> {
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    genregauge(&["synth", "3", "10", TRAIN_SEED, &p("train")])?;
    genregauge(&["synth", "3", "5", HELD_OUT_SEED, &p("held_out"), "--held-out"])?;
    genregauge(&["extract", &p("train"), "--out", &p("train.csv")])?;
    genregauge(&["train", &p("train.csv"), "--out", &p("model.json"), "--k", "3"])?;
    genregauge(&["classify", &p("held_out"), "--model", &p("model.json"), "--out", &p("results.csv")])?;
    let report = genregauge(&["report", &p("results.csv")])?;
    ensure(report.contains("Successful"), || format!("report output: {report}"))?;

    let rows = read_results(std::fs::File::open(p("results.csv")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure(rows.len() == 15, || format!("{} result rows", rows.len()))?;
    let report = evaluate_rows(&rows).map_err(|e| e.to_string())?;
    Ok(report.accuracy)
}

fn criterion_7(dir: &Path) -> Check {
    let accuracy = pipeline(dir)?;
    ensure(accuracy >= 0.9, || format!("held-out accuracy {:.2}%", 100.0 * accuracy))?;
    let model = std::fs::read_to_string(dir.join("model.json")).map_err(|e| e.to_string())?;
    let doc: serde_json::Value = serde_json::from_str(&model).map_err(|e| e.to_string())?;
    Ok(format!(
        "held-out accuracy {:.2}% with {}",
        100.0 * accuracy,
        doc["selected_features"]
    ))
}

fn criterion_8(first: &Path, second: &Path) -> Check {
    pipeline(second)?;
    for file in ["model.json", "results.csv", "train.csv"] {
        let a = std::fs::read(first.join(file)).map_err(|e| format!("{file}: {e}"))?;
        let b = std::fs::read(second.join(file)).map_err(|e| format!("{file}: {e}"))?;
        ensure(a == b, || format!("{file} differs between runs"))?;
    }
    Ok("model.json, results.csv and train.csv byte-identical across runs".into())
}

// ---------------------------------------------------------------------------

fn run(id: u8, title: &str, budget: Duration, check: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(check))
        .unwrap_or_else(|_| Err("panicked".to_string()))
        .and_then(|detail| {
            let elapsed = start.elapsed();
            if elapsed > budget {
                Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}"))
            } else {
                Ok(detail)
            }
        });
    let elapsed = start.elapsed();
    let line = match &outcome {
        Ok(detail) => format!("criterion {id} PASS  {title}: {detail} [{elapsed:.2?}]"),
        Err(why) => format!("criterion {id} FAIL  {title}: {why} [{elapsed:.2?}]"),
    };
    // straight to the handle: the harness captures println! output of
    // passing tests, and these lines are the report
    let _ = writeln!(std::io::stdout().lock(), "{line}");
    outcome.is_ok()
}

#[test]
fn acceptance_criteria() {
    let _ = writeln!(std::io::stdout().lock());
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let secs = Duration::from_secs;
    let results = [
        run(1, "information measures match brute force", secs(10), criterion_1),
        run(2, "reference gain-ratio table summary rows and selection", secs(1), criterion_2),
        run(3, "gain = ratio x split identity", secs(10), criterion_3),
        run(4, "text formula vs table mean threshold", secs(1), criterion_4),
        run(5, "extractor analytic oracles", secs(30), criterion_5),
        run(6, "amplitude invariance", secs(60), criterion_6),
        run(7, "synthetic corpus held-out accuracy", secs(120), || criterion_7(first.path())),
        run(8, "pipeline determinism", secs(120), || criterion_8(first.path(), second.path())),
    ];
    let failed: Vec<usize> = (1..=8).filter(|&i| !results[i - 1]).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
