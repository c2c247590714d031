//! Train → knowledge base → HARQ modules → sweep, with every stage
//! persisted under the output directory and reused when present.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{derive_seed, mix64, ExperimentConfig};
use super::results::{emit_csv, emit_summary, summarize, ResultRow};
use crate::codec::{noiseless_token_accuracy, train_codec, CodecModel, DecodeTarget};
use crate::corpus::{
    build_vocabulary, generate_synthetic_corpus, load_corpus_file, save_corpus_file, tokenize_and_pad, Sentence,
    SynonymClasses, SynonymTable, Vocabulary,
};
use crate::detector::{evaluate_detector, train_detector, DetectorNet};
use crate::error::{Error, Result};
use crate::harq::{run_session, FadingRounds, HarqModels, HarqScheme};
use crate::knowledge_base::{generate_kb, KbSampleK3, LocalKnowledgeBase, TrainSchedule};
use crate::metrics::{accuracy, bleu, recall, sentence_similarity, SimilarityEmbedder};
use crate::reconstructor::{
    train_discriminator, train_generator, DiscriminatorNet, GeneratorConfig, GeneratorNet, Reconstructor,
    ReconstructorMode,
};
use crate::tensor::{load_checkpoint, save_checkpoint, ParamSet};

/// File names under the output directory.
#[derive(Clone, Debug)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.toml")
    }
    pub fn corpus(&self) -> PathBuf {
        self.root.join("corpus.txt")
    }
    pub fn synonyms(&self) -> PathBuf {
        self.root.join("synonyms.txt")
    }
    pub fn codec(&self) -> PathBuf {
        self.root.join("codec.ckpt")
    }
    pub fn embedder(&self) -> PathBuf {
        self.root.join("embedder.ckpt")
    }
    pub fn kb(&self, point: usize) -> PathBuf {
        self.root.join(format!("kb_snr{point}.bin"))
    }
    pub fn discriminator(&self, point: usize) -> PathBuf {
        self.root.join(format!("disc_snr{point}.ckpt"))
    }
    pub fn generator(&self, point: usize) -> PathBuf {
        self.root.join(format!("gen_snr{point}.ckpt"))
    }
    pub fn detector(&self, point: usize) -> PathBuf {
        self.root.join(format!("det_snr{point}.ckpt"))
    }
    pub fn results(&self) -> PathBuf {
        self.root.join("results.csv")
    }
    pub fn summary(&self) -> PathBuf {
        self.root.join("summary.csv")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Built,
    Loaded,
}

/// What each stage did with its artifact.
#[derive(Clone, Debug, Default)]
pub struct StageLog {
    pub entries: Vec<(PathBuf, Action)>,
}

impl StageLog {
    fn note(&mut self, path: &Path, action: Action) {
        log::info!("{} {}", if action == Action::Built { "built" } else { "loaded" }, path.display());
        self.entries.push((path.to_path_buf(), action));
    }

    pub fn built(&self) -> Vec<&Path> {
        self.entries.iter().filter(|(_, a)| *a == Action::Built).map(|(p, _)| p.as_path()).collect()
    }
}

pub struct CorpusData {
    pub vocab: Vocabulary,
    pub synonyms: SynonymTable,
    pub train: Vec<Sentence>,
    pub test: Vec<Sentence>,
}

/// Everything trained for one sweep point.
pub struct PointModels {
    pub snr_db: f64,
    pub kb: LocalKnowledgeBase,
    pub reconstructor: Reconstructor,
    pub detector: DetectorNet,
}

pub struct TrainedSystem {
    pub corpus: CorpusData,
    pub codec: CodecModel,
    pub embedder: SimilarityEmbedder,
    pub points: Vec<PointModels>,
    pub log: StageLog,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage { stage: name, source: Box::new(e) })
}

/// Writes through a temporary file so an interrupted run never leaves a
/// truncated artifact behind.
fn persist(path: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let tmp = path.with_extension("partial");
    write(&tmp)?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn quantized(params: &ParamSet) -> ParamSet {
    let mut p = params.clone();
    p.quantize_f32();
    p
}

/// Stage 1: the corpus file and synonym classes, split into train and test.
pub fn prepare_corpus(config: &ExperimentConfig, layout: &Layout, log: &mut StageLog) -> Result<CorpusData> {
    let c = &config.corpus;
    let (path, syn_path) = (layout.corpus(), layout.synonyms());
    if path.exists() && syn_path.exists() {
        log.note(&path, Action::Loaded);
    } else {
        let (sentences, classes) = match (&c.path, &c.synonyms) {
            (Some(p), Some(s)) => (load_corpus_file(p)?, SynonymClasses::load(s)?),
            _ => {
                let n = c.train_sentences + c.test_sentences;
                let corpus = generate_synthetic_corpus(derive_seed(config.seed, "corpus"), n, c.min_len, c.max_len)?;
                (corpus.sentences, corpus.synonyms)
            }
        };
        persist(&syn_path, |p| classes.save(p))?;
        persist(&path, |p| save_corpus_file(p, &sentences))?;
        log.note(&path, Action::Built);
    }
    let sentences = load_corpus_file(&path)?;
    let classes = SynonymClasses::load(&syn_path)?;
    let need = c.train_sentences + c.test_sentences;
    if sentences.len() < need {
        return Err(Error::Input(format!("corpus has {} sentences, configuration needs {need}", sentences.len())));
    }
    let sentences = &sentences[..need];
    let vocab = build_vocabulary(sentences)?;
    let synonyms = SynonymTable::build(&classes, &vocab)?;
    let tokens = sentences
        .iter()
        .map(|s| tokenize_and_pad(s, &vocab, c.max_len))
        .collect::<Result<Vec<_>>>()?;
    let (train, test) = tokens.split_at(c.train_sentences);
    Ok(CorpusData { vocab, synonyms, train: train.to_vec(), test: test.to_vec() })
}

/// Stage 2a: the codec, trained through the fading channel.
pub fn prepare_codec(config: &ExperimentConfig, layout: &Layout, corpus: &CorpusData, log: &mut StageLog) -> Result<CodecModel> {
    let cfg = config.codec_config(corpus.vocab.size());
    let path = layout.codec();
    if path.exists() {
        log.note(&path, Action::Loaded);
        return CodecModel::from_params(cfg, load_checkpoint(&path)?);
    }
    let mut model = CodecModel::new(cfg.clone(), derive_seed(config.seed, "codec.init"))?;
    let history = train_codec(&mut model, &corpus.train, &config.codec_training(), DecodeTarget::Tokens)?;
    let model = CodecModel::from_params(cfg, quantized(model.params()))?;
    log::info!(
        "codec: final loss {:.4}, noiseless token accuracy {:.4}",
        history.last().copied().unwrap_or(f64::NAN),
        noiseless_token_accuracy(&model, &corpus.train)?
    );
    persist(&path, |p| save_checkpoint(p, model.params()))?;
    log.note(&path, Action::Built);
    Ok(model)
}

/// Stage 2b: the frozen similarity embedder.
pub fn prepare_embedder(
    config: &ExperimentConfig,
    layout: &Layout,
    corpus: &CorpusData,
    log: &mut StageLog,
) -> Result<SimilarityEmbedder> {
    let cfg = config.codec_config(corpus.vocab.size());
    let path = layout.embedder();
    let model = if path.exists() {
        log.note(&path, Action::Loaded);
        CodecModel::from_params(cfg, load_checkpoint(&path)?)?
    } else {
        let trained = SimilarityEmbedder::train(
            cfg.clone(),
            &corpus.train,
            &corpus.synonyms,
            config.embedder.epochs,
            config.embedder.learning_rate,
            derive_seed(config.seed, "embedder"),
        )?;
        let model = CodecModel::from_params(cfg, quantized(trained.model().params()))?;
        persist(&path, |p| save_checkpoint(p, model.params()))?;
        log.note(&path, Action::Built);
        model
    };
    SimilarityEmbedder::centered(model, &corpus.train)
}

/// Stage 3: the knowledge base of sweep point `point`.
pub fn prepare_kb(
    config: &ExperimentConfig,
    layout: &Layout,
    codec: &CodecModel,
    corpus: &CorpusData,
    point: usize,
    log: &mut StageLog,
) -> Result<LocalKnowledgeBase> {
    let path = layout.kb(point);
    if path.exists() {
        log.note(&path, Action::Loaded);
        return LocalKnowledgeBase::load(&path);
    }
    let channel = config.channel_config().with_snr(config.channel.snr_db[point]);
    let seed = derive_seed(config.seed, &format!("kb.{point}"));
    let mut kb = generate_kb(codec, &channel, &corpus.train, config.kb.transmissions, seed)?;
    if config.kb.rebalance {
        kb = kb.rebalanced(seed);
    }
    log::info!("kb {point}: {} transmissions, abnormal fraction {:.3}", kb.k1.len(), kb.abnormal_fraction());
    persist(&path, |p| kb.save(p))?;
    log.note(&path, Action::Built);
    Ok(kb)
}

fn schedule(epochs: usize, batch_size: usize, learning_rate: f64, seed: u64) -> TrainSchedule {
    TrainSchedule { epochs, batch_size, learning_rate, seed }
}

pub fn generator_config(config: &ExperimentConfig) -> GeneratorConfig {
    GeneratorConfig {
        width: config.codec.channel_dim,
        positions: config.corpus.max_len,
        output: config.reconstructor.generator_output,
        context: config.reconstructor.generator_context,
    }
}

/// Stage 4: discriminator, generator and detector of sweep point `point`.
pub fn prepare_modules(
    config: &ExperimentConfig,
    layout: &Layout,
    kb: &LocalKnowledgeBase,
    vocab_size: usize,
    point: usize,
    log: &mut StageLog,
) -> Result<(Reconstructor, DetectorNet)> {
    let r = &config.reconstructor;
    let width = config.codec.channel_dim;
    let seed = |label: &str| derive_seed(config.seed, &format!("{label}.{point}"));

    let path = layout.discriminator(point);
    let discriminator = if path.exists() {
        log.note(&path, Action::Loaded);
        DiscriminatorNet::from_params(width, r.discriminator_output, load_checkpoint(&path)?)?
    } else {
        let mut net = DiscriminatorNet::new(width, r.discriminator_output, seed("disc.init"))?;
        let s = schedule(r.discriminator_epochs, r.batch_size, r.learning_rate, seed("disc.train"));
        train_discriminator(&mut net, &kb.k1, &s)?;
        let net = DiscriminatorNet::from_params(width, r.discriminator_output, quantized(net.params()))?;
        persist(&path, |p| save_checkpoint(p, net.params()))?;
        log.note(&path, Action::Built);
        net
    };

    let path = layout.generator(point);
    let gcfg = generator_config(config);
    let generator = if path.exists() {
        log.note(&path, Action::Loaded);
        GeneratorNet::from_params(gcfg, load_checkpoint(&path)?)?
    } else {
        let mut net = GeneratorNet::new(gcfg, seed("gen.init"))?;
        let s = schedule(r.generator_epochs, r.batch_size, r.learning_rate, seed("gen.train"));
        train_generator(&mut net, &kb.k2, &s)?;
        let net = GeneratorNet::from_params(gcfg, quantized(net.params()))?;
        persist(&path, |p| save_checkpoint(p, net.params()))?;
        log.note(&path, Action::Built);
        net
    };

    let d = &config.detector;
    let dcfg = config.detector_config(vocab_size);
    let path = layout.detector(point);
    let detector = if path.exists() {
        log.note(&path, Action::Loaded);
        DetectorNet::from_params(dcfg, load_checkpoint(&path)?)?
    } else {
        let mut net = DetectorNet::new(dcfg.clone(), seed("det.init"))?;
        let s = schedule(d.epochs, d.batch_size, d.learning_rate, seed("det.train"));
        train_detector(&mut net, &kb.k3, &s)?;
        let net = DetectorNet::from_params(dcfg, quantized(net.params()))?;
        persist(&path, |p| save_checkpoint(p, net.params()))?;
        log.note(&path, Action::Built);
        net
    };

    let reconstructor = Reconstructor { discriminator, generator, threshold: r.threshold, mode: r.mode };
    Ok((reconstructor, detector))
}

/// Stages 1–4 for the sweep points listed in `points`.
pub fn build_system_at(config: &ExperimentConfig, points: &[usize]) -> Result<TrainedSystem> {
    config.validate()?;
    if let Some(&bad) = points.iter().find(|&&p| p >= config.channel.snr_db.len()) {
        return Err(Error::Config(format!("sweep point {bad} does not exist")));
    }
    let layout = Layout::new(&config.output_dir);
    std::fs::create_dir_all(&layout.root).map_err(|e| Error::io(&layout.root, e))?;
    persist(&layout.config(), |p| std::fs::write(p, config.to_document()).map_err(|e| Error::io(p, e)))?;
    let mut log = StageLog::default();
    let corpus = stage("corpus", prepare_corpus(config, &layout, &mut log))?;
    let codec = stage("codec", prepare_codec(config, &layout, &corpus, &mut log))?;
    let embedder = stage("embedder", prepare_embedder(config, &layout, &corpus, &mut log))?;
    let mut trained = Vec::with_capacity(points.len());
    for &point in points {
        let kb = stage("knowledge base", prepare_kb(config, &layout, &codec, &corpus, point, &mut log))?;
        let (reconstructor, detector) =
            stage("modules", prepare_modules(config, &layout, &kb, corpus.vocab.size(), point, &mut log))?;
        trained.push(PointModels { snr_db: config.channel.snr_db[point], kb, reconstructor, detector });
    }
    Ok(TrainedSystem { corpus, codec, embedder, points: trained, log })
}

/// Artifacts of stages 1–4 not yet on disk.
pub fn missing_artifacts(config: &ExperimentConfig) -> Vec<PathBuf> {
    let l = Layout::new(&config.output_dir);
    let mut paths = vec![l.corpus(), l.synonyms(), l.codec(), l.embedder()];
    for i in 0..config.channel.snr_db.len() {
        paths.extend([l.kb(i), l.discriminator(i), l.generator(i), l.detector(i)]);
    }
    paths.retain(|p| !p.exists());
    paths
}

/// Stages 1–3: corpus, codec and every knowledge base.
pub fn generate_kbs(config: &ExperimentConfig) -> Result<(Vec<LocalKnowledgeBase>, StageLog)> {
    config.validate()?;
    let layout = Layout::new(&config.output_dir);
    std::fs::create_dir_all(&layout.root).map_err(|e| Error::io(&layout.root, e))?;
    let mut log = StageLog::default();
    let corpus = stage("corpus", prepare_corpus(config, &layout, &mut log))?;
    let codec = stage("codec", prepare_codec(config, &layout, &corpus, &mut log))?;
    let kbs = (0..config.channel.snr_db.len())
        .map(|point| stage("knowledge base", prepare_kb(config, &layout, &codec, &corpus, point, &mut log)))
        .collect::<Result<Vec<_>>>()?;
    Ok((kbs, log))
}

/// Stages 1–4 for every sweep point.
pub fn build_system(config: &ExperimentConfig) -> Result<TrainedSystem> {
    let all: Vec<usize> = (0..config.channel.snr_db.len()).collect();
    build_system_at(config, &all)
}

/// Channel stream of one session. Depends only on the SNR point and the
/// sentence, so every scheme sees the same realizations.
pub fn session_seed(channel_seed: u64, snr_db: f64, sentence_id: usize) -> u64 {
    mix64(mix64(channel_seed ^ mix64(snr_db.to_bits())) ^ sentence_id as u64)
}

/// Every scheme on every test sentence at every trained point, ordered by
/// (scheme, SNR, sentence id).
pub fn run_sweep(config: &ExperimentConfig, system: &TrainedSystem) -> Result<Vec<ResultRow>> {
    sweep_schemes(config, system, &config.harq.schemes, config.reconstructor.mode)
}

pub fn sweep_schemes(
    config: &ExperimentConfig,
    system: &TrainedSystem,
    schemes: &[HarqScheme],
    mode: ReconstructorMode,
) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for &scheme in schemes {
        for point in &system.points {
            rows.extend(sweep_point(config, system, point, scheme, mode)?);
        }
    }
    Ok(rows)
}

pub fn sweep_point(
    config: &ExperimentConfig,
    system: &TrainedSystem,
    point: &PointModels,
    scheme: HarqScheme,
    mode: ReconstructorMode,
) -> Result<Vec<ResultRow>> {
    let reconstructor = point.reconstructor.with_mode(mode);
    let models = HarqModels {
        codec: &system.codec,
        reconstructor: &reconstructor,
        detector: &point.detector,
        synonyms: &system.corpus.synonyms,
    };
    let channel = config.channel_config().with_snr(point.snr_db);
    system
        .corpus
        .test
        .par_iter()
        .enumerate()
        .map(|(id, sentence)| {
            let seed = session_seed(config.channel.seed, point.snr_db, id);
            let rounds = FadingRounds { config: channel.clone(), seed };
            let result = run_session(sentence, scheme, &models, &rounds, config.harq.max_rounds, config.detector.lambda)?;
            let b = bleu(sentence, &result.decoded, &config.bleu);
            let sim = sentence_similarity(sentence, &result.decoded, &system.embedder)?;
            Ok(ResultRow::new(scheme, point.snr_db, id, &result, b, sim, seed))
        })
        .collect()
}

/// Writes `results.csv` and `summary.csv`.
pub fn write_results(config: &ExperimentConfig, rows: &[ResultRow]) -> Result<()> {
    let layout = Layout::new(&config.output_dir);
    persist(&layout.results(), |p| emit_csv(rows, p))?;
    persist(&layout.summary(), |p| emit_summary(&summarize(rows), p))
}

/// Stages 1–5.
pub fn pipeline(config: &ExperimentConfig) -> Result<(TrainedSystem, Vec<ResultRow>)> {
    let system = build_system(config)?;
    let rows = stage("sweep", run_sweep(config, &system))?;
    stage("sweep", write_results(config, &rows))?;
    Ok((system, rows))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SizePoint {
    pub size: usize,
    pub accuracy: f64,
    pub recall: f64,
}

/// Trains a fresh detector on nested prefixes of a shuffled K3 and scores
/// each on the same held-out samples.
pub fn detector_size_sweep(
    config: &ExperimentConfig,
    k3: &[KbSampleK3],
    vocab_size: usize,
    sizes: &[usize],
    holdout: usize,
) -> Result<Vec<SizePoint>> {
    let largest = sizes.iter().copied().max().unwrap_or(0);
    if largest + holdout > k3.len() {
        return Err(Error::Input(format!("K3 has {} samples, the sweep needs {}", k3.len(), largest + holdout)));
    }
    let mut order: Vec<usize> = (0..k3.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "size_sweep.split")));
    let held: Vec<KbSampleK3> = order[..holdout].iter().map(|&i| k3[i].clone()).collect();
    let pool: Vec<KbSampleK3> = order[holdout..].iter().map(|&i| k3[i].clone()).collect();
    let d = &config.detector;
    sizes
        .iter()
        .map(|&size| {
            let mut net = DetectorNet::new(config.detector_config(vocab_size), derive_seed(config.seed, "size_sweep.init"))?;
            let s = schedule(d.epochs, d.batch_size, d.learning_rate, derive_seed(config.seed, "size_sweep.train"));
            train_detector(&mut net, &pool[..size], &s)?;
            let counts = evaluate_detector(&net, &held, d.lambda)?;
            Ok(SizePoint { size, accuracy: accuracy(&counts)?, recall: recall(&counts)? })
        })
        .collect()
}
