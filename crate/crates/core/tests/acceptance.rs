//! Prints one PASS or FAIL line per acceptance criterion. An unmet criterion
//! is reported, not raised; only errors that stop a criterion from being
//! evaluated fail the run.
//!
//! The trained desk system is cached under the cargo target directory, so a
//! second run only retrains what is missing.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semharq::codec::noiseless_token_accuracy;
use semharq::corpus::{build_vocabulary, tokenize_and_pad, Sentence};
use semharq::detector::{evaluate_detector, ConfidenceDetector};
use semharq::experiment::pipeline::{self, Layout, StageLog, TrainedSystem};
use semharq::experiment::results::{paired_column, ResultRow};
use semharq::experiment::ExperimentConfig;
use semharq::harq::HarqScheme;
use semharq::knowledge_base::KbSampleK3;
use semharq::metrics::{accuracy, bleu, mean, paired_bootstrap, recall, BleuConfig};
use semharq::reconstructor::ReconstructorMode;

mod support;

const RESAMPLES: usize = 10_000;

struct Verdict {
    pass: bool,
    detail: String,
}

type Outcome = Result<Verdict, String>;

fn verdict(pass: bool, detail: String) -> Outcome {
    Ok(Verdict { pass, detail })
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn desk_dir() -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-desk")
}

/// Desk defaults; a cache written under different settings is discarded.
fn desk_config() -> Result<ExperimentConfig, String> {
    let config = ExperimentConfig { output_dir: desk_dir(), ..ExperimentConfig::desk() };
    let stored = Layout::new(desk_dir()).config();
    if stored.exists() && std::fs::read_to_string(&stored).map_err(err)? != config.to_document() {
        std::fs::remove_dir_all(desk_dir()).map_err(err)?;
    }
    Ok(config)
}

fn metric_oracles() -> Outcome {
    let vocab = build_vocabulary(&["the cat sat down", "a b"]).map_err(err)?;
    let s = |t: &str| tokenize_and_pad(t, &vocab, 8).unwrap();
    let cfg = BleuConfig::default();
    let cases = [
        (bleu(&s("the cat sat down"), &s("the cat sat"), &cfg), (-1.0f64 / 3.0).exp()),
        (bleu(&s("a a b"), &s("a a a"), &cfg), 2.0 / 3.0),
        (bleu(&s("the cat sat down"), &s("the cat sat down"), &cfg), 1.0),
    ];
    let bleu_error = cases.iter().map(|(got, want)| (got - want).abs()).fold(0.0, f64::max);
    let printed = (cases[0].0 - 0.716531).abs() < 5e-7 && (cases[1].0 - 0.666667).abs() < 5e-7;

    // Detector keyed by the single word of each sample.
    struct Table(Vec<f64>);
    impl ConfidenceDetector for Table {
        fn confidence(&self, s: &Sentence) -> semharq::Result<f64> {
            Ok(self.0[s.ids[0]])
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..200);
        let lambda = rng.gen_range(0.0..1.0);
        let table = Table((0..n).map(|_| rng.gen_range(0.0..1.0)).collect());
        let samples: Vec<KbSampleK3> = (0..n)
            .map(|i| KbSampleK3 { decoded: Sentence::from_ids(&[i], 1).unwrap(), label: rng.gen_bool(0.5) })
            .collect();
        let counts = evaluate_detector(&table, &samples, lambda).map_err(err)?;
        let (mut hits, mut tp, mut positives) = (0usize, 0usize, 0usize);
        for (i, s) in samples.iter().enumerate() {
            let ack = table.0[i] > lambda;
            hits += usize::from(ack == s.label);
            tp += usize::from(ack && s.label);
            positives += usize::from(s.label);
        }
        if accuracy(&counts).map_err(err)? != hits as f64 / n as f64 {
            mismatches += 1;
        }
        match recall(&counts) {
            Ok(r) if positives > 0 && r == tp as f64 / positives as f64 => {}
            Err(_) if positives == 0 => {}
            _ => mismatches += 1,
        }
    }
    verdict(
        bleu_error <= 1e-9 && printed && mismatches == 0,
        format!("BLEU max error {bleu_error:.1e}; accuracy/recall mismatches on 1000 sets: {mismatches}"),
    )
}

fn gradients() -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for (name, check) in support::gradients::LAYERS {
        match check() {
            Ok(e) => worst = worst.max(e),
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{} layer types x 50 shapes, worst relative error {worst:.1e}{}",
            support::gradients::LAYERS.len(),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

/// Trains the desk codec from scratch in a scratch directory.
fn codec_convergence(fresh: &Path) -> Outcome {
    let config = ExperimentConfig { output_dir: fresh.to_path_buf(), ..ExperimentConfig::desk() };
    let layout = Layout::new(fresh);
    let mut log = StageLog::default();
    let corpus = pipeline::prepare_corpus(&config, &layout, &mut log).map_err(err)?;
    let start = Instant::now();
    let codec = pipeline::prepare_codec(&config, &layout, &corpus, &mut log).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    let acc = noiseless_token_accuracy(&codec, &corpus.train).map_err(err)?;
    verdict(
        acc >= 0.99 && secs <= 600.0,
        format!("noiseless token accuracy {acc:.4} after {} epochs in {secs:.0} s", config.codec.epochs),
    )
}

fn combining() -> Outcome {
    match support::invariants::combining(10_000, 41) {
        Ok(()) => verdict(true, "10^4 instances: sums, scale invariance, uniform = equal".into()),
        Err(e) => verdict(false, e),
    }
}

fn protocol() -> Outcome {
    let sessions = support::invariants::sessions(10_000, 42);
    let partition = support::invariants::synonym_partition();
    let detail = match (&sessions, &partition) {
        (Ok(()), Ok(())) => "10^4 sessions; segments tile every (L', M) in [1,30]x[1,6]".to_string(),
        _ => [sessions.clone().err(), partition.clone().err()].into_iter().flatten().collect::<Vec<_>>().join("; "),
    };
    verdict(sessions.is_ok() && partition.is_ok(), detail)
}

struct Sweep {
    lowest: f64,
    highest: f64,
    full: Vec<ResultRow>,
    ablation: Vec<ResultRow>,
    secs: f64,
}

fn run_sweeps(config: &ExperimentConfig, system: &TrainedSystem) -> Result<Sweep, String> {
    let start = Instant::now();
    let full = pipeline::run_sweep(config, system).map_err(err)?;
    pipeline::write_results(config, &full).map_err(err)?;
    let mut ablation = Vec::new();
    for mode in [ReconstructorMode::Off, ReconstructorMode::GeneratorOnly] {
        let rows = pipeline::sweep_schemes(config, system, &[HarqScheme::NO_HARQ], mode).map_err(err)?;
        ablation.extend(rows.into_iter().map(|mut r| {
            r.scheme = mode.as_str().to_string();
            r
        }));
    }
    let snrs = &config.channel.snr_db;
    Ok(Sweep { lowest: snrs[0], highest: snrs[snrs.len() - 1], full, ablation, secs: start.elapsed().as_secs_f64() })
}

fn bleu_of(rows: &[ResultRow], label: &str, snr: f64) -> Vec<f64> {
    paired_column(rows, label, snr, |r| r.bleu)
}

fn lower_bound(a: &[f64], b: &[f64], confidence: f64) -> Result<f64, String> {
    Ok(paired_bootstrap(a, b, RESAMPLES, confidence, 7).map_err(err)?.lower)
}

fn scheme_labels(config: &ExperimentConfig) -> Vec<String> {
    config.harq.schemes.iter().map(|s| s.to_string()).collect()
}

fn low_snr_ordering(config: &ExperimentConfig, sweep: &Sweep) -> Outcome {
    let snr = sweep.lowest;
    let (w, i, n) = (
        bleu_of(&sweep.full, "wc_fc:weighted", snr),
        bleu_of(&sweep.full, "i", snr),
        bleu_of(&sweep.full, "noharq", snr),
    );
    let (w_i, i_n) = (lower_bound(&w, &i, 0.95)?, lower_bound(&i, &n, 0.95)?);
    let (best, gain) = scheme_labels(config)
        .into_iter()
        .filter(|l| l != "noharq")
        .map(|l| {
            let g = mean(&bleu_of(&sweep.full, &l, snr)) / mean(&n) - 1.0;
            (l, g)
        })
        .fold((String::new(), f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    verdict(
        n.len() >= 1000 && w_i > 0.0 && i_n > 0.0 && gain >= 0.10,
        format!(
            "{snr} dB, {} sentences: wc_fc:weighted {:.4} > i {:.4} > noharq {:.4}; 95% lower bounds {w_i:.4}, {i_n:.4}; best {best} +{:.1}%; sweep {:.0} s",
            n.len(),
            mean(&w),
            mean(&i),
            mean(&n),
            100.0 * gain,
            sweep.secs
        ),
    )
}

fn high_snr_convergence(config: &ExperimentConfig, sweep: &Sweep) -> Outcome {
    let means: Vec<(String, f64)> = scheme_labels(config)
        .into_iter()
        .map(|l| {
            let m = mean(&bleu_of(&sweep.full, &l, sweep.highest));
            (l, m)
        })
        .collect();
    let hi = means.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let lo = means.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let gap = hi.1 - lo.1;
    verdict(gap <= 0.03, format!("{} dB: max gap {gap:.4} ({} {:.4} vs {} {:.4})", sweep.highest, hi.0, hi.1, lo.0, lo.1))
}

fn weighted_vs_equal(sweep: &Sweep) -> Outcome {
    let w = bleu_of(&sweep.full, "wc_fc:weighted", sweep.lowest);
    let e = bleu_of(&sweep.full, "wc_fc:equal", sweep.lowest);
    let lb = lower_bound(&w, &e, 0.90)?;
    verdict(
        lb >= 0.0,
        format!("{} dB: weighted {:.4}, equal {:.4}, 90% lower bound of the difference {lb:.4}", sweep.lowest, mean(&w), mean(&e)),
    )
}

fn sc_similarity(sweep: &Sweep) -> Outcome {
    let snr = sweep.lowest;
    let sim = |l: &str| mean(&paired_column(&sweep.full, l, snr, |r| r.similarity));
    let (sc, n, wc) = (sim("sc:weighted"), sim("noharq"), sim("wc_fc:weighted"));
    let gain = sc / n - 1.0;
    let (sc_b, wc_b) = (mean(&bleu_of(&sweep.full, "sc:weighted", snr)), mean(&bleu_of(&sweep.full, "wc_fc:weighted", snr)));
    verdict(
        gain >= 0.10,
        format!(
            "{snr} dB: similarity sc {sc:.4} vs noharq {n:.4} (+{:.1}%); reported: vs wc_fc similarity {wc:.4}, BLEU sc {sc_b:.4} vs wc_fc {wc_b:.4}",
            100.0 * gain
        ),
    )
}

fn detector_sizes(config: &ExperimentConfig, system: &TrainedSystem) -> Outcome {
    let start = Instant::now();
    let point = config.channel.snr_db.len() / 2;
    let layout = Layout::new(&config.output_dir);
    let mut log = StageLog::default();
    let kb = pipeline::prepare_kb(config, &layout, &system.codec, &system.corpus, point, &mut log).map_err(err)?;
    let holdout = kb.k3.len() / 6;
    let largest = kb.k3.len() - holdout;
    let sizes = [largest / 8, largest / 4, largest / 2, largest];
    let points = pipeline::detector_size_sweep(config, &kb.k3, system.corpus.vocab.size(), &sizes, holdout).map_err(err)?;
    let monotone = points.windows(2).all(|w| w[1].accuracy >= w[0].accuracy);
    let last = points.last().expect("four sizes");
    let trend: Vec<String> = points.iter().map(|p| format!("{}:{:.4}", p.size, p.accuracy)).collect();
    verdict(
        monotone && last.recall >= 0.85,
        format!(
            "{} dB, {holdout} held out: accuracy {}; recall at largest {:.4}; {:.0} s",
            config.channel.snr_db[point],
            trend.join(" "),
            last.recall,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn ablation(sweep: &Sweep) -> Outcome {
    let full = bleu_of(&sweep.full, "noharq", sweep.lowest);
    let off = bleu_of(&sweep.ablation, "off", sweep.lowest);
    let lb = lower_bound(&full, &off, 0.95)?;
    let off_hi = mean(&bleu_of(&sweep.ablation, "off", sweep.highest));
    let gen_hi = mean(&bleu_of(&sweep.ablation, "generator_only", sweep.highest));
    verdict(
        lb >= 0.0 && gen_hi <= off_hi,
        format!(
            "{} dB: full {:.4} vs off {:.4}, 95% lower bound {lb:.4}; {} dB: generator_only {gen_hi:.4} vs off {off_hi:.4}",
            sweep.lowest,
            mean(&full),
            mean(&off),
            sweep.highest
        ),
    )
}

fn artifacts(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(err)? {
        let path = entry.map_err(err)?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name.ends_with(".csv") || name.ends_with(".ckpt") || name.ends_with(".bin") {
            out.push((name, std::fs::read(&path).map_err(err)?));
        }
    }
    out.sort();
    Ok(out)
}

fn determinism(fresh_codec: &Path) -> Outcome {
    let (a, b) = (tempfile::tempdir().map_err(err)?, tempfile::tempdir().map_err(err)?);
    pipeline::pipeline(&support::tiny_config(a.path())).map_err(err)?;
    pipeline::pipeline(&support::tiny_config(b.path())).map_err(err)?;
    let (fa, fb) = (artifacts(a.path())?, artifacts(b.path())?);
    let differing: Vec<&str> = fa.iter().zip(&fb).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    let same_set = fa.iter().map(|f| &f.0).eq(fb.iter().map(|f| &f.0));
    let codec_same = std::fs::read(fresh_codec.join("codec.ckpt")).map_err(err)?
        == std::fs::read(Layout::new(desk_dir()).codec()).map_err(err)?;
    verdict(
        same_set && differing.is_empty() && codec_same,
        format!(
            "two tiny pipeline runs: {} CSV/checkpoint/KB files, {} differ; desk codec retrained from scratch {} the cached one",
            fa.len(),
            differing.len(),
            if codec_same { "matches" } else { "differs from" }
        ),
    )
}

fn report(n: usize, name: &str, outcome: Outcome, passed: &mut usize) -> Result<(), String> {
    let v = outcome.map_err(|e| format!("criterion {n} ({name}) could not be evaluated: {e}"))?;
    *passed += usize::from(v.pass);
    println!("criterion {n:>2} {} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    Ok(())
}

fn run() -> Result<usize, String> {
    let mut passed = 0;
    report(1, "metric oracles", metric_oracles(), &mut passed)?;
    report(2, "gradient correctness", gradients(), &mut passed)?;
    let fresh = tempfile::tempdir().map_err(err)?;
    report(3, "codec convergence", codec_convergence(fresh.path()), &mut passed)?;
    report(4, "combining algebra", combining(), &mut passed)?;
    report(5, "protocol invariants", protocol(), &mut passed)?;

    let config = desk_config()?;
    let n = config.channel.snr_db.len();
    eprintln!("building the desk system in {}", config.output_dir.display());
    let system = pipeline::build_system_at(&config, &[0, n - 1]).map_err(err)?;
    let sweep = run_sweeps(&config, &system)?;
    report(6, "low-SNR scheme ordering", low_snr_ordering(&config, &sweep), &mut passed)?;
    report(7, "high-SNR convergence", high_snr_convergence(&config, &sweep), &mut passed)?;
    report(8, "weighted vs equal combining", weighted_vs_equal(&sweep), &mut passed)?;
    report(9, "SC similarity", sc_similarity(&sweep), &mut passed)?;
    report(10, "detector sample-size trend", detector_sizes(&config, &system), &mut passed)?;
    report(11, "reconstructor ablation", ablation(&sweep), &mut passed)?;
    report(12, "determinism", determinism(fresh.path()), &mut passed)?;
    Ok(passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(passed) => {
            println!("acceptance: {passed} of 12 criteria pass");
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("acceptance aborted: {e}");
            ExitCode::FAILURE
        }
    }
}
