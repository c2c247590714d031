//! Flat key-value experiment configuration.
//!
//! Keys are dotted (`codec.epochs = 300`); TOML sections are accepted and
//! flattened the same way. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::channel::ChannelConfig;
use crate::codec::{CodecConfig, CodecTrainConfig, TrainingChannel};
use crate::detector::DetectorConfig;
use crate::error::{Error, Result};
use crate::harq::HarqScheme;
use crate::metrics::BleuConfig;
use crate::reconstructor::{DiscriminatorOutput, GeneratorContext, GeneratorOutput, ReconstructorMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    Desk,
    Paper,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Desk => "desk",
            Self::Paper => "paper",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSettings {
    /// Sentence file, one per line; empty means a synthetic corpus.
    pub path: Option<PathBuf>,
    /// Synonym class file used with `path`.
    pub synonyms: Option<PathBuf>,
    pub train_sentences: usize,
    pub test_sentences: usize,
    pub min_len: usize,
    /// Maximum sentence length `L`.
    pub max_len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodecSettings {
    pub embed_dim: usize,
    pub channel_dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub ff_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// SNR range drawn per sentence while training through the channel.
    pub train_snr_min: f64,
    pub train_snr_max: f64,
    /// Train through an identity channel instead.
    pub noiseless: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbedderSettings {
    pub epochs: usize,
    pub learning_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSettings {
    pub paths: usize,
    pub profile: Vec<f64>,
    pub rho: f64,
    pub seed: u64,
    /// Sweep points; one knowledge base and module set per point.
    pub snr_db: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KbSettings {
    pub transmissions: usize,
    pub rebalance: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructorSettings {
    pub mode: ReconstructorMode,
    pub threshold: f64,
    pub discriminator_epochs: usize,
    pub generator_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub discriminator_output: DiscriminatorOutput,
    pub generator_output: GeneratorOutput,
    pub generator_context: GeneratorContext,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorSettings {
    pub lambda: f64,
    pub epochs: usize,
    pub embed_dim: usize,
    pub heads: usize,
    pub ff_dim: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarqSettings {
    pub max_rounds: usize,
    pub schemes: Vec<HarqScheme>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub profile: Profile,
    /// Root of every derived training seed.
    pub seed: u64,
    pub corpus: CorpusSettings,
    pub codec: CodecSettings,
    pub embedder: EmbedderSettings,
    pub channel: ChannelSettings,
    pub kb: KbSettings,
    pub reconstructor: ReconstructorSettings,
    pub detector: DetectorSettings,
    pub harq: HarqSettings,
    pub bleu: BleuConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ExperimentConfig {
    pub fn desk() -> Self {
        Self {
            profile: Profile::Desk,
            seed: 1,
            corpus: CorpusSettings {
                path: None,
                synonyms: None,
                train_sentences: 10000,
                test_sentences: 1000,
                min_len: 4,
                max_len: 12,
            },
            codec: CodecSettings {
                embed_dim: 16,
                channel_dim: 32,
                layers: 2,
                heads: 4,
                ff_dim: 64,
                epochs: 60,
                batch_size: 32,
                learning_rate: 3e-3,
                train_snr_min: 0.0,
                train_snr_max: 30.0,
                noiseless: false,
            },
            embedder: EmbedderSettings { epochs: 40, learning_rate: 3e-3 },
            channel: ChannelSettings {
                paths: 2,
                profile: vec![0.8, 0.2],
                rho: 0.999,
                seed: 7,
                snr_db: vec![0.0, 5.0, 10.0, 20.0],
            },
            kb: KbSettings { transmissions: 30000, rebalance: false },
            reconstructor: ReconstructorSettings {
                mode: ReconstructorMode::Full,
                threshold: 0.5,
                discriminator_epochs: 20,
                generator_epochs: 20,
                batch_size: 64,
                learning_rate: 1e-3,
                discriminator_output: DiscriminatorOutput::Sigmoid,
                generator_output: GeneratorOutput::Linear,
                generator_context: GeneratorContext::Mean,
            },
            detector: DetectorSettings {
                lambda: 0.5,
                epochs: 20,
                embed_dim: 16,
                heads: 4,
                ff_dim: 32,
                batch_size: 64,
                learning_rate: 1e-3,
            },
            harq: HarqSettings {
                max_rounds: 3,
                schemes: ["noharq", "i", "wc_fc:weighted", "wc_fc:equal", "wc_dc:weighted", "wc_dc:equal", "sc:weighted"]
                    .iter()
                    .map(|s| HarqScheme::parse(s).expect("built-in scheme"))
                    .collect(),
            },
            bleu: BleuConfig::default(),
            output_dir: PathBuf::from("runs/desk"),
        }
    }

    /// Full-size settings: `L = 30`, `V = 128`, `D = 16`, three layers of
    /// eight heads, learning rate `1e-4`.
    pub fn paper() -> Self {
        let mut c = Self::desk();
        c.profile = Profile::Paper;
        c.corpus.max_len = 30;
        c.corpus.min_len = 4;
        c.corpus.train_sentences = 20000;
        c.corpus.test_sentences = 2000;
        c.codec.channel_dim = 128;
        c.codec.embed_dim = 16;
        c.codec.layers = 3;
        c.codec.heads = 8;
        c.codec.learning_rate = 1e-4;
        c.codec.batch_size = 64;
        c.codec.epochs = 80;
        c.embedder.learning_rate = 1e-4;
        c.detector.heads = 8;
        c.detector.ff_dim = 64;
        c.detector.learning_rate = 1e-4;
        c.reconstructor.learning_rate = 1e-4;
        c.channel.rho = 0.99;
        c.channel.snr_db = vec![0.0, 3.0, 6.0, 9.0, 12.0, 15.0, 18.0];
        c.kb.transmissions = 20000;
        c.output_dir = PathBuf::from("runs/paper");
        c
    }

    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Desk => Self::desk(),
            Profile::Paper => Self::paper(),
        }
    }

    /// Parses a document, applying its keys over the profile defaults.
    pub fn from_str_with_overrides(text: &str, overrides: &[(String, Value)]) -> Result<Self> {
        let table: Table = text.parse().map_err(|e| Error::Config(format!("cannot parse configuration: {e}")))?;
        let mut entries = Vec::new();
        flatten("", &table, &mut entries);
        entries.extend(overrides.iter().cloned());
        let profile = match entries.iter().rev().find(|(k, _)| k == "profile") {
            Some((_, v)) => match as_str(v, "profile")? {
                "desk" => Profile::Desk,
                "paper" => Profile::Paper,
                other => return Err(Error::Config(format!("unknown profile {other:?}"))),
            },
            None => Profile::Desk,
        };
        let mut config = Self::for_profile(profile);
        for (key, value) in &entries {
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_str_with_overrides(text, &[])
    }

    pub fn load(path: &Path, overrides: &[(String, Value)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read configuration {}: {e}", path.display())))?;
        Self::from_str_with_overrides(&text, overrides)
    }

    /// Applies one flattened key.
    pub fn set(&mut self, key: &str, v: &Value) -> Result<()> {
        match key {
            "profile" => {}
            "seed" => self.seed = as_u64(v, key)?,
            "corpus.path" => self.corpus.path = as_path(v, key)?,
            "corpus.synonyms" => self.corpus.synonyms = as_path(v, key)?,
            "corpus.train_sentences" => self.corpus.train_sentences = as_usize(v, key)?,
            "corpus.test_sentences" => self.corpus.test_sentences = as_usize(v, key)?,
            "corpus.min_len" => self.corpus.min_len = as_usize(v, key)?,
            "corpus.max_len" => self.corpus.max_len = as_usize(v, key)?,
            "codec.embed_dim" => self.codec.embed_dim = as_usize(v, key)?,
            "codec.channel_dim" => self.codec.channel_dim = as_usize(v, key)?,
            "codec.layers" => self.codec.layers = as_usize(v, key)?,
            "codec.heads" => self.codec.heads = as_usize(v, key)?,
            "codec.ff_dim" => self.codec.ff_dim = as_usize(v, key)?,
            "codec.epochs" => self.codec.epochs = as_usize(v, key)?,
            "codec.batch_size" => self.codec.batch_size = as_usize(v, key)?,
            "codec.learning_rate" => self.codec.learning_rate = as_f64(v, key)?,
            "codec.train_snr_min" => self.codec.train_snr_min = as_f64(v, key)?,
            "codec.train_snr_max" => self.codec.train_snr_max = as_f64(v, key)?,
            "codec.noiseless" => self.codec.noiseless = as_bool(v, key)?,
            "embedder.epochs" => self.embedder.epochs = as_usize(v, key)?,
            "embedder.learning_rate" => self.embedder.learning_rate = as_f64(v, key)?,
            "channel.paths" => self.channel.paths = as_usize(v, key)?,
            "channel.profile" => self.channel.profile = as_f64_list(v, key)?,
            "channel.rho" => self.channel.rho = as_f64(v, key)?,
            "channel.seed" => self.channel.seed = as_u64(v, key)?,
            "channel.snr_db" => self.channel.snr_db = as_f64_list(v, key)?,
            "kb.transmissions" => self.kb.transmissions = as_usize(v, key)?,
            "kb.rebalance" => self.kb.rebalance = as_bool(v, key)?,
            "reconstructor.mode" => self.reconstructor.mode = ReconstructorMode::parse(as_str(v, key)?)?,
            "reconstructor.threshold" => self.reconstructor.threshold = as_f64(v, key)?,
            "reconstructor.discriminator_epochs" => self.reconstructor.discriminator_epochs = as_usize(v, key)?,
            "reconstructor.generator_epochs" => self.reconstructor.generator_epochs = as_usize(v, key)?,
            "reconstructor.batch_size" => self.reconstructor.batch_size = as_usize(v, key)?,
            "reconstructor.learning_rate" => self.reconstructor.learning_rate = as_f64(v, key)?,
            "reconstructor.discriminator_output" => {
                self.reconstructor.discriminator_output = match as_str(v, key)? {
                    "sigmoid" => DiscriminatorOutput::Sigmoid,
                    "relu" => DiscriminatorOutput::Relu,
                    other => return Err(invalid(key, other)),
                }
            }
            "reconstructor.generator_output" => {
                self.reconstructor.generator_output = match as_str(v, key)? {
                    "linear" => GeneratorOutput::Linear,
                    "relu" => GeneratorOutput::Relu,
                    other => return Err(invalid(key, other)),
                }
            }
            "reconstructor.generator_context" => {
                self.reconstructor.generator_context = GeneratorContext::parse(as_str(v, key)?)?
            }
            "detector.lambda" => self.detector.lambda = as_f64(v, key)?,
            "detector.epochs" => self.detector.epochs = as_usize(v, key)?,
            "detector.embed_dim" => self.detector.embed_dim = as_usize(v, key)?,
            "detector.heads" => self.detector.heads = as_usize(v, key)?,
            "detector.ff_dim" => self.detector.ff_dim = as_usize(v, key)?,
            "detector.batch_size" => self.detector.batch_size = as_usize(v, key)?,
            "detector.learning_rate" => self.detector.learning_rate = as_f64(v, key)?,
            "harq.max_rounds" => self.harq.max_rounds = as_usize(v, key)?,
            "harq.schemes" => {
                self.harq.schemes = as_str_list(v, key)?
                    .iter()
                    .map(|s| HarqScheme::parse(s))
                    .collect::<Result<Vec<_>>>()?
            }
            "bleu.weights" => self.bleu.weights = as_f64_list(v, key)?,
            "output.dir" => self.output_dir = PathBuf::from(as_str(v, key)?),
            _ => return Err(Error::Config(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.corpus;
        if c.min_len == 0 || c.min_len > c.max_len {
            return Err(Error::Config(format!("sentence lengths {}..={} are invalid", c.min_len, c.max_len)));
        }
        if c.train_sentences == 0 || c.test_sentences == 0 {
            return Err(Error::Config("corpus needs training and test sentences".into()));
        }
        if c.path.is_some() != c.synonyms.is_some() {
            return Err(Error::Config("corpus.path and corpus.synonyms must be set together".into()));
        }
        self.codec_config(1).validate()?;
        if self.codec.train_snr_min > self.codec.train_snr_max {
            return Err(Error::Config("codec training SNR range is reversed".into()));
        }
        self.channel_config().validate()?;
        if self.channel.snr_db.is_empty() || self.channel.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("channel.snr_db needs at least one finite point".into()));
        }
        if self.harq.schemes.is_empty() {
            return Err(Error::Config("harq.schemes is empty".into()));
        }
        if self.harq.max_rounds == 0 {
            return Err(Error::Config("harq.max_rounds must be positive".into()));
        }
        for (name, p) in [("detector.lambda", self.detector.lambda), ("reconstructor.threshold", self.reconstructor.threshold)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if self.detector.heads == 0 || !self.detector.embed_dim.is_multiple_of(self.detector.heads) {
            return Err(Error::Config("detector.embed_dim must be divisible by detector.heads".into()));
        }
        if self.codec.channel_dim < 8 {
            return Err(Error::Config("codec.channel_dim must be at least 8 for the discriminator".into()));
        }
        for (name, n) in [
            ("codec.batch_size", self.codec.batch_size),
            ("reconstructor.batch_size", self.reconstructor.batch_size),
            ("detector.batch_size", self.detector.batch_size),
            ("kb.transmissions", self.kb.transmissions),
        ] {
            if n == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        self.bleu.validate()
    }

    pub fn codec_config(&self, vocab_size: usize) -> CodecConfig {
        CodecConfig {
            vocab_size: vocab_size.max(4),
            max_len: self.corpus.max_len,
            embed_dim: self.codec.embed_dim,
            channel_dim: self.codec.channel_dim,
            layers: self.codec.layers,
            heads: self.codec.heads,
            ff_dim: self.codec.ff_dim,
        }
    }

    pub fn codec_training(&self) -> CodecTrainConfig {
        let channel = if self.codec.noiseless {
            TrainingChannel::Noiseless
        } else {
            TrainingChannel::Fading {
                config: self.channel_config(),
                snr_db: (self.codec.train_snr_min, self.codec.train_snr_max),
            }
        };
        CodecTrainConfig {
            epochs: self.codec.epochs,
            batch_size: self.codec.batch_size,
            learning_rate: self.codec.learning_rate,
            seed: derive_seed(self.seed, "codec.train"),
            channel,
        }
    }

    pub fn detector_config(&self, vocab_size: usize) -> DetectorConfig {
        DetectorConfig {
            vocab_size,
            max_len: self.corpus.max_len,
            embed_dim: self.detector.embed_dim,
            heads: self.detector.heads,
            ff_dim: self.detector.ff_dim,
        }
    }

    /// Channel at the first sweep point.
    pub fn channel_config(&self) -> ChannelConfig {
        ChannelConfig {
            n_paths: self.channel.paths,
            profile: self.channel.profile.clone(),
            snr_db: self.channel.snr_db.first().copied().unwrap_or(0.0),
            rho: self.channel.rho,
            seed: self.channel.seed,
        }
    }

    /// Every key with its resolved value, in a form `parse` accepts.
    pub fn to_document(&self) -> String {
        fn float(x: f64) -> String {
            if x.fract() == 0.0 && x.abs() < 1e15 {
                format!("{x:.1}")
            } else {
                format!("{x:e}")
            }
        }
        fn floats(xs: &[f64]) -> String {
            format!("[{}]", xs.iter().map(|&x| float(x)).collect::<Vec<_>>().join(", "))
        }
        let path = |p: &Option<PathBuf>| format!("{:?}", p.as_ref().map_or(String::new(), |p| p.display().to_string()));
        let schemes: Vec<String> = self.harq.schemes.iter().map(|s| format!("\"{s}\"")).collect();
        let lines = [
            format!("profile = \"{}\"", self.profile.as_str()),
            format!("seed = {}", self.seed),
            format!("corpus.path = {}", path(&self.corpus.path)),
            format!("corpus.synonyms = {}", path(&self.corpus.synonyms)),
            format!("corpus.train_sentences = {}", self.corpus.train_sentences),
            format!("corpus.test_sentences = {}", self.corpus.test_sentences),
            format!("corpus.min_len = {}", self.corpus.min_len),
            format!("corpus.max_len = {}", self.corpus.max_len),
            format!("codec.embed_dim = {}", self.codec.embed_dim),
            format!("codec.channel_dim = {}", self.codec.channel_dim),
            format!("codec.layers = {}", self.codec.layers),
            format!("codec.heads = {}", self.codec.heads),
            format!("codec.ff_dim = {}", self.codec.ff_dim),
            format!("codec.epochs = {}", self.codec.epochs),
            format!("codec.batch_size = {}", self.codec.batch_size),
            format!("codec.learning_rate = {}", float(self.codec.learning_rate)),
            format!("codec.train_snr_min = {}", float(self.codec.train_snr_min)),
            format!("codec.train_snr_max = {}", float(self.codec.train_snr_max)),
            format!("codec.noiseless = {}", self.codec.noiseless),
            format!("embedder.epochs = {}", self.embedder.epochs),
            format!("embedder.learning_rate = {}", float(self.embedder.learning_rate)),
            format!("channel.paths = {}", self.channel.paths),
            format!("channel.profile = {}", floats(&self.channel.profile)),
            format!("channel.rho = {}", float(self.channel.rho)),
            format!("channel.seed = {}", self.channel.seed),
            format!("channel.snr_db = {}", floats(&self.channel.snr_db)),
            format!("kb.transmissions = {}", self.kb.transmissions),
            format!("kb.rebalance = {}", self.kb.rebalance),
            format!("reconstructor.mode = \"{}\"", self.reconstructor.mode.as_str()),
            format!("reconstructor.threshold = {}", float(self.reconstructor.threshold)),
            format!("reconstructor.discriminator_epochs = {}", self.reconstructor.discriminator_epochs),
            format!("reconstructor.generator_epochs = {}", self.reconstructor.generator_epochs),
            format!("reconstructor.batch_size = {}", self.reconstructor.batch_size),
            format!("reconstructor.learning_rate = {}", float(self.reconstructor.learning_rate)),
            format!(
                "reconstructor.discriminator_output = \"{}\"",
                match self.reconstructor.discriminator_output {
                    DiscriminatorOutput::Sigmoid => "sigmoid",
                    DiscriminatorOutput::Relu => "relu",
                }
            ),
            format!(
                "reconstructor.generator_output = \"{}\"",
                match self.reconstructor.generator_output {
                    GeneratorOutput::Linear => "linear",
                    GeneratorOutput::Relu => "relu",
                }
            ),
            format!("reconstructor.generator_context = \"{}\"", self.reconstructor.generator_context.as_str()),
            format!("detector.lambda = {}", float(self.detector.lambda)),
            format!("detector.epochs = {}", self.detector.epochs),
            format!("detector.embed_dim = {}", self.detector.embed_dim),
            format!("detector.heads = {}", self.detector.heads),
            format!("detector.ff_dim = {}", self.detector.ff_dim),
            format!("detector.batch_size = {}", self.detector.batch_size),
            format!("detector.learning_rate = {}", float(self.detector.learning_rate)),
            format!("harq.max_rounds = {}", self.harq.max_rounds),
            format!("harq.schemes = [{}]", schemes.join(", ")),
            format!("bleu.weights = {}", floats(&self.bleu.weights)),
            format!("output.dir = {:?}", self.output_dir.display().to_string()),
        ];
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

/// Mixes a label into the root seed (FNV-1a, then splitmix64).
pub fn derive_seed(root: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    mix64(root ^ h)
}

pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Parses `key=value`, reading the value as TOML and falling back to a bare string.
pub fn parse_override(text: &str) -> Result<(String, Value)> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {text:?} is not key=value")))?;
    let key = key.trim().to_string();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok((key, value))
}

fn flatten(prefix: &str, table: &Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            _ => out.push((key, v.clone())),
        }
    }
}

fn invalid(key: &str, value: impl std::fmt::Display) -> Error {
    Error::Config(format!("invalid value {value} for `{key}`"))
}

fn as_str<'a>(v: &'a Value, key: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| invalid(key, v))
}

fn as_bool(v: &Value, key: &str) -> Result<bool> {
    v.as_bool().ok_or_else(|| invalid(key, v))
}

fn as_u64(v: &Value, key: &str) -> Result<u64> {
    v.as_integer().and_then(|i| u64::try_from(i).ok()).ok_or_else(|| invalid(key, v))
}

fn as_usize(v: &Value, key: &str) -> Result<usize> {
    v.as_integer().and_then(|i| usize::try_from(i).ok()).ok_or_else(|| invalid(key, v))
}

fn as_f64(v: &Value, key: &str) -> Result<f64> {
    match v {
        Value::Float(f) if f.is_finite() => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(invalid(key, v)),
    }
}

fn as_path(v: &Value, key: &str) -> Result<Option<PathBuf>> {
    let s = as_str(v, key)?;
    Ok(if s.is_empty() { None } else { Some(PathBuf::from(s)) })
}

/// Arrays, single numbers, or a string holding an array such as `"[0,4,8]"`.
fn as_f64_list(v: &Value, key: &str) -> Result<Vec<f64>> {
    match v {
        Value::Array(items) => items.iter().map(|x| as_f64(x, key)).collect(),
        Value::String(s) => match parse_override(&format!("x={s}"))?.1 {
            Value::String(_) => Err(invalid(key, v)),
            inner => as_f64_list(&inner, key),
        },
        _ => Ok(vec![as_f64(v, key)?]),
    }
}

fn as_str_list(v: &Value, key: &str) -> Result<Vec<String>> {
    match v {
        Value::Array(items) => items.iter().map(|x| as_str(x, key).map(str::to_string)).collect(),
        Value::String(s) => Ok(s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()),
        _ => Err(invalid(key, v)),
    }
}
