//! Local knowledge base `K = (K1, K2, K3)` collected by simulated
//! transmissions, labeled by a BLEU threshold of 0.9.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{apply_channel, sample_channel_with, ChannelConfig};
use crate::codec::{greedy_decode, CodecModel, SemanticFrame};
use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::metrics::{bleu, BleuConfig};
use crate::tensor::checkpoint::{read_f32s, read_line, write_f32s};

pub const KB_HEADER: &str = "SEMHARQ-KB-1";

/// Sentences scoring at least this BLEU are semantically correct.
pub const BLEU_THRESHOLD: f64 = 0.9;

/// `C = 1` (normal) unless BLEU falls below 0.9.
pub fn label_from_bleu(bleu: f64) -> bool {
    bleu >= BLEU_THRESHOLD
}

#[derive(Clone, Debug, PartialEq)]
pub struct KbSampleK1 {
    pub received: SemanticFrame,
    pub label: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KbSampleK2 {
    pub clean: SemanticFrame,
    pub corrupted: SemanticFrame,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KbSampleK3 {
    pub decoded: Sentence,
    pub label: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KbMetadata {
    pub snr_db: f64,
    pub seed: u64,
    pub transmissions: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalKnowledgeBase {
    pub k1: Vec<KbSampleK1>,
    pub k2: Vec<KbSampleK2>,
    pub k3: Vec<KbSampleK3>,
    pub meta: KbMetadata,
}

/// One simulated transmission; the stored frames are rounded to `f32` so a
/// knowledge base read back from disk equals the one generated.
struct Record {
    clean: SemanticFrame,
    received: SemanticFrame,
    decoded: Sentence,
    label: bool,
}

fn round_f32(frame: SemanticFrame) -> Result<SemanticFrame> {
    let (l, v) = (frame.positions(), frame.width());
    let data = frame.into_features().into_data().into_iter().map(|x| x as f32 as f64).collect();
    SemanticFrame::from_data(l, v, data)
}

/// Per-transmission stream, independent of worker scheduling.
fn transmission_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

fn transmit(codec: &CodecModel, channel: &ChannelConfig, corpus: &[Sentence], seed: u64, index: usize) -> Result<Record> {
    let mut rng = transmission_rng(seed, index);
    let sentence = &corpus[rng.gen_range(0..corpus.len())];
    let clean = codec.encode(sentence)?;
    let realization = sample_channel_with(channel, clean.positions() * clean.width() / 2, &mut rng)?;
    let received = apply_channel(&clean, &realization, channel.noise_variance())?;
    let received = round_f32(received)?;
    let decoded = greedy_decode(&codec.decode_distribution(&received)?);
    let label = label_from_bleu(bleu(sentence, &decoded, &BleuConfig::default()));
    Ok(Record { clean: round_f32(clean)?, received, decoded, label })
}

/// Runs `n_transmissions` encode → channel → decode trials at `channel.snr_db`.
/// Trials run in parallel and are merged in trial order.
pub fn generate_kb(
    codec: &CodecModel,
    channel: &ChannelConfig,
    corpus: &[Sentence],
    n_transmissions: usize,
    seed: u64,
) -> Result<LocalKnowledgeBase> {
    if n_transmissions < 1 {
        return Err(Error::Input("knowledge base needs at least one transmission".into()));
    }
    if corpus.is_empty() {
        return Err(Error::Input("knowledge base needs a nonempty corpus".into()));
    }
    channel.validate()?;
    let records = (0..n_transmissions)
        .into_par_iter()
        .map(|i| transmit(codec, channel, corpus, seed, i))
        .collect::<Result<Vec<_>>>()?;
    let mut kb = LocalKnowledgeBase {
        k1: Vec::with_capacity(n_transmissions),
        k2: Vec::new(),
        k3: Vec::with_capacity(n_transmissions),
        meta: KbMetadata { snr_db: channel.snr_db, seed, transmissions: n_transmissions },
    };
    for r in records {
        if !r.label {
            kb.k2.push(KbSampleK2 { clean: r.clean, corrupted: r.received.clone() });
        }
        kb.k1.push(KbSampleK1 { received: r.received, label: r.label });
        kb.k3.push(KbSampleK3 { decoded: r.decoded, label: r.label });
    }
    Ok(kb)
}

impl LocalKnowledgeBase {
    /// Fraction of K1 samples labeled abnormal.
    pub fn abnormal_fraction(&self) -> f64 {
        if self.k1.is_empty() {
            return 0.0;
        }
        self.k1.iter().filter(|s| !s.label).count() as f64 / self.k1.len() as f64
    }

    /// Downsamples the majority class of K1 and K3 to the minority size.
    /// K2 is untouched.
    pub fn rebalanced(&self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k1 = balance(&self.k1, |s| s.label, &mut rng);
        let k3 = balance(&self.k3, |s| s.label, &mut rng);
        Self { k1, k2: self.k2.clone(), k3, meta: self.meta.clone() }
    }

    /// Keeps the first `n` K3 samples.
    pub fn with_k3_size(&self, n: usize) -> Self {
        let mut out = self.clone();
        out.k3.truncate(n);
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }

    fn shape(&self) -> (usize, usize, usize) {
        let frame = self.k1.first().map(|s| &s.received).or(self.k2.first().map(|s| &s.clean));
        let (l, v) = frame.map_or((0, 0), |f| (f.positions(), f.width()));
        let sl = self.k3.first().map_or(l, |s| s.decoded.ids.len());
        (l, v, sl)
    }

    fn write<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let (l, v, sl) = self.shape();
        writeln!(w, "{KB_HEADER}")?;
        writeln!(w, "snr_db {}", self.meta.snr_db)?;
        writeln!(w, "seed {}", self.meta.seed)?;
        writeln!(w, "transmissions {}", self.meta.transmissions)?;
        writeln!(w, "frame {l}x{v}")?;
        writeln!(w, "sentence {sl}")?;
        writeln!(w, "k1 {}", self.k1.len())?;
        writeln!(w, "k2 {}", self.k2.len())?;
        writeln!(w, "k3 {}", self.k3.len())?;
        writeln!(w, "data")?;
        for s in &self.k1 {
            write_f32s(w, s.received.features().data())?;
        }
        w.write_all(&self.k1.iter().map(|s| s.label as u8).collect::<Vec<_>>())?;
        for s in &self.k2 {
            write_f32s(w, s.clean.features().data())?;
            write_f32s(w, s.corrupted.features().data())?;
        }
        for s in &self.k3 {
            for &id in &s.decoded.ids {
                w.write_all(&(id as u32).to_le_bytes())?;
            }
            w.write_all(&(s.decoded.true_length as u32).to_le_bytes())?;
        }
        w.write_all(&self.k3.iter().map(|s| s.label as u8).collect::<Vec<_>>())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        if read_line(&mut r, path)? != KB_HEADER {
            return Err(Error::format(path, "missing knowledge base header"));
        }
        let mut field = |name: &str| -> Result<String> {
            let line = read_line(&mut r, path)?;
            line.strip_prefix(name)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| Error::format(path, format!("expected `{name}`, found {line:?}")))
        };
        let bad = |what: &str| Error::format(path, format!("invalid {what}"));
        let snr_db: f64 = field("snr_db")?.parse().map_err(|_| bad("snr_db"))?;
        let seed: u64 = field("seed")?.parse().map_err(|_| bad("seed"))?;
        let transmissions: usize = field("transmissions")?.parse().map_err(|_| bad("transmissions"))?;
        let frame = field("frame")?;
        let (l, v) = frame
            .split_once('x')
            .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
            .ok_or_else(|| bad("frame shape"))?;
        let sl: usize = field("sentence")?.parse().map_err(|_| bad("sentence length"))?;
        let n1: usize = field("k1")?.parse().map_err(|_| bad("k1 count"))?;
        let n2: usize = field("k2")?.parse().map_err(|_| bad("k2 count"))?;
        let n3: usize = field("k3")?.parse().map_err(|_| bad("k3 count"))?;
        if read_line(&mut r, path)? != "data" {
            return Err(Error::format(path, "missing data marker"));
        }
        let trunc = |e: std::io::Error| Error::format(path, format!("truncated data: {e}"));
        let frame_of = |data: Vec<f64>| SemanticFrame::from_data(l, v, data);

        let mut received = Vec::with_capacity(n1);
        for _ in 0..n1 {
            received.push(frame_of(read_f32s(&mut r, l * v).map_err(trunc)?)?);
        }
        let labels1 = read_bytes(&mut r, n1).map_err(trunc)?;
        let k1 = received
            .into_iter()
            .zip(labels1)
            .map(|(received, b)| Ok(KbSampleK1 { received, label: parse_label(b, path)? }))
            .collect::<Result<Vec<_>>>()?;
        let mut k2 = Vec::with_capacity(n2);
        for _ in 0..n2 {
            let clean = frame_of(read_f32s(&mut r, l * v).map_err(trunc)?)?;
            let corrupted = frame_of(read_f32s(&mut r, l * v).map_err(trunc)?)?;
            k2.push(KbSampleK2 { clean, corrupted });
        }
        let mut sentences = Vec::with_capacity(n3);
        for _ in 0..n3 {
            let words = read_u32s(&mut r, sl + 1).map_err(trunc)?;
            let true_length = words[sl];
            if true_length > sl {
                return Err(bad("sentence length"));
            }
            sentences.push(Sentence { ids: words[..sl].to_vec(), true_length });
        }
        let labels3 = read_bytes(&mut r, n3).map_err(trunc)?;
        let k3 = sentences
            .into_iter()
            .zip(labels3)
            .map(|(decoded, b)| Ok(KbSampleK3 { decoded, label: parse_label(b, path)? }))
            .collect::<Result<Vec<_>>>()?;
        let mut rest = Vec::new();
        r.read_to_end(&mut rest).map_err(|e| Error::io(path, e))?;
        if !rest.is_empty() {
            return Err(Error::format(path, "trailing bytes after data"));
        }
        Ok(Self { k1, k2, k3, meta: KbMetadata { snr_db, seed, transmissions } })
    }
}

fn parse_label(b: u8, path: &Path) -> Result<bool> {
    match b {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(Error::format(path, format!("label byte {b}"))),
    }
}

fn read_bytes<R: Read>(r: &mut R, n: usize) -> std::io::Result<Vec<u8>> {
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32s<R: Read>(r: &mut R, n: usize) -> std::io::Result<Vec<usize>> {
    let buf = read_bytes(r, n * 4)?;
    Ok(buf.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as usize).collect())
}

fn balance<T: Clone>(items: &[T], label: impl Fn(&T) -> bool, rng: &mut ChaCha8Rng) -> Vec<T> {
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) = (0..items.len()).partition(|&i| label(&items[i]));
    let keep = pos.len().min(neg.len());
    if keep == 0 {
        return items.to_vec();
    }
    pos.shuffle(rng);
    neg.shuffle(rng);
    let mut idx: Vec<usize> = pos[..keep].iter().chain(&neg[..keep]).copied().collect();
    idx.sort_unstable();
    idx.into_iter().map(|i| items[i].clone()).collect()
}

/// Minibatch schedule for the networks trained from a knowledge base.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSchedule {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl TrainSchedule {
    /// Batch size clipped to the part size so small parts still train.
    pub(crate) fn batches<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
        sample_minibatch(len, self.batch_size.min(len), rng)
    }
}

/// Splits one epoch over `len` samples into shuffled minibatches. Every sample
/// appears exactly once; only the last batch may be short.
pub fn sample_minibatch<R: Rng + ?Sized>(len: usize, batch_size: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 || batch_size > len {
        return Err(Error::Input(format!("batch size {batch_size} for a part of {len} samples")));
    }
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(rng);
    Ok(order.chunks(batch_size).map(<[usize]>::to_vec).collect())
}
