//! Discriminator-gated reconstruction of faded frames. A discriminator
//! decides whether a received frame looks normal; abnormal frames are
//! rewritten position by position by a conditional generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codec::{stack_frames, SemanticFrame};
use crate::error::{Error, Result};
use crate::knowledge_base::{KbSampleK1, KbSampleK2, TrainSchedule};
use crate::tensor::{Adam, AdamConfig, Dense, Graph, NodeId, ParamSet, Tensor};

/// Fully connected stack with ReLU between layers.
#[derive(Clone, Debug)]
pub(crate) struct Mlp {
    layers: Vec<Dense>,
}

impl Mlp {
    pub(crate) fn new(params: &mut ParamSet, name: &str, widths: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Dense::new(params, &format!("{name}.{i}"), w[0], w[1], rng))
            .collect();
        Self { layers }
    }

    /// Output before any final activation.
    pub(crate) fn forward(&self, g: &mut Graph, params: &ParamSet, mut x: NodeId) -> Result<NodeId> {
        for (i, layer) in self.layers.iter().enumerate() {
            if i > 0 {
                x = g.relu(x);
            }
            x = layer.forward(g, params, x)?;
        }
        Ok(x)
    }

    pub(crate) fn widths(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self.layers.iter().map(|l| l.inputs).collect();
        w.extend(self.layers.last().map(|l| l.outputs));
        w
    }
}

/// Anything that scores a frame with the probability that it is normal.
pub trait FrameDiscriminator: Send + Sync {
    fn probability(&self, frame: &SemanticFrame) -> Result<f64>;
}

/// Anything that maps a corrupted frame to a corrected one of the same shape.
pub trait FrameGenerator: Send + Sync {
    fn generate(&self, frame: &SemanticFrame) -> Result<SemanticFrame>;
}

/// Final activation of the discriminator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DiscriminatorOutput {
    #[default]
    Sigmoid,
    /// ReLU clipped to 1.
    Relu,
}

/// Final activation of the generator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GeneratorOutput {
    #[default]
    Linear,
    Relu,
}

/// `D_A`: average-pooled frame through `V → V/2 → V/4 → V/8 → 1`.
#[derive(Clone, Debug)]
pub struct DiscriminatorNet {
    width: usize,
    output: DiscriminatorOutput,
    params: ParamSet,
    mlp: Mlp,
}

impl DiscriminatorNet {
    pub fn new(width: usize, output: DiscriminatorOutput, seed: u64) -> Result<Self> {
        if width < 8 {
            return Err(Error::Config(format!("discriminator needs a frame width of at least 8, got {width}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let mlp = Mlp::new(&mut params, "disc", &[width, width / 2, width / 4, width / 8, 1], &mut rng);
        Ok(Self { width, output, params, mlp })
    }

    pub fn from_params(width: usize, output: DiscriminatorOutput, params: ParamSet) -> Result<Self> {
        let mut net = Self::new(width, output, 0)?;
        net.params.assign_from(params)?;
        Ok(net)
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn layer_widths(&self) -> Vec<usize> {
        self.mlp.widths()
    }

    fn forward(&self, g: &mut Graph, frames: NodeId, positions: usize) -> Result<NodeId> {
        let pooled = g.mean_pool(frames, positions)?;
        let z = self.mlp.forward(g, &self.params, pooled)?;
        Ok(match self.output {
            DiscriminatorOutput::Sigmoid => g.sigmoid(z),
            DiscriminatorOutput::Relu => {
                let r = g.relu(z);
                g.clamp01(r)
            }
        })
    }

    fn check(&self, frame: &SemanticFrame) -> Result<()> {
        if frame.width() != self.width {
            return Err(Error::Dimension(format!("frame width {} for a discriminator of width {}", frame.width(), self.width)));
        }
        Ok(())
    }
}

impl FrameDiscriminator for DiscriminatorNet {
    fn probability(&self, frame: &SemanticFrame) -> Result<f64> {
        self.check(frame)?;
        let mut g = Graph::new();
        let x = g.constant(frame.features().clone());
        let p = self.forward(&mut g, x, frame.positions())?;
        Ok(g.value(p).data()[0])
    }
}

/// What each position sees besides its own received vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorContext {
    /// Only the position's own `V` features.
    None,
    /// The position plus the average-pooled frame, `2V` inputs.
    Mean,
    /// The position plus the whole flattened frame, `V + L·V` inputs.
    Frame,
}

impl GeneratorContext {
    pub fn as_str(self) -> &'static str {
        match self {
            GeneratorContext::None => "none",
            GeneratorContext::Mean => "mean",
            GeneratorContext::Frame => "frame",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(GeneratorContext::None),
            "mean" => Ok(GeneratorContext::Mean),
            "frame" => Ok(GeneratorContext::Frame),
            other => Err(Error::Config(format!("unknown generator context {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub width: usize,
    pub positions: usize,
    pub output: GeneratorOutput,
    pub context: GeneratorContext,
}

impl GeneratorConfig {
    pub fn input_width(&self) -> usize {
        match self.context {
            GeneratorContext::None => self.width,
            GeneratorContext::Mean => 2 * self.width,
            GeneratorContext::Frame => self.width * (1 + self.positions),
        }
    }
}

/// `G_A`: per-position `V → 4V → 16V → 4V → V`, optionally conditioned on
/// the rest of the received frame.
#[derive(Clone, Debug)]
pub struct GeneratorNet {
    config: GeneratorConfig,
    params: ParamSet,
    mlp: Mlp,
}

impl GeneratorNet {
    pub fn new(config: GeneratorConfig, seed: u64) -> Result<Self> {
        if config.width == 0 || config.positions == 0 {
            return Err(Error::Config("generator width and positions must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let w = config.width;
        let mlp = Mlp::new(&mut params, "gen", &[config.input_width(), 4 * w, 16 * w, 4 * w, w], &mut rng);
        Ok(Self { config, params, mlp })
    }

    pub fn from_params(config: GeneratorConfig, params: ParamSet) -> Result<Self> {
        let mut net = Self::new(config, 0)?;
        net.params.assign_from(params)?;
        Ok(net)
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn layer_widths(&self) -> Vec<usize> {
        self.mlp.widths()
    }

    /// One input row per position of every frame.
    fn inputs(&self, frames: &[&SemanticFrame]) -> Result<Tensor> {
        let (l, v) = (self.config.positions, self.config.width);
        let cols = self.config.input_width();
        let mut data = Vec::with_capacity(frames.len() * l * cols);
        for f in frames {
            if f.positions() != l || f.width() != v {
                return Err(Error::Dimension(format!(
                    "frame is {}x{}, generator expects {l}x{v}",
                    f.positions(),
                    f.width()
                )));
            }
            let x = f.features().data();
            let mut mean = vec![0.0; v];
            if self.config.context == GeneratorContext::Mean {
                for row in x.chunks(v) {
                    for (m, a) in mean.iter_mut().zip(row) {
                        *m += a / l as f64;
                    }
                }
            }
            for row in x.chunks(v) {
                data.extend_from_slice(row);
                match self.config.context {
                    GeneratorContext::None => {}
                    GeneratorContext::Mean => data.extend_from_slice(&mean),
                    GeneratorContext::Frame => data.extend_from_slice(x),
                }
            }
        }
        Tensor::new(vec![frames.len() * l, cols], data)
    }

    fn forward(&self, g: &mut Graph, rows: NodeId) -> Result<NodeId> {
        let y = self.mlp.forward(g, &self.params, rows)?;
        Ok(match self.config.output {
            GeneratorOutput::Linear => y,
            GeneratorOutput::Relu => g.relu(y),
        })
    }
}

impl FrameGenerator for GeneratorNet {
    fn generate(&self, frame: &SemanticFrame) -> Result<SemanticFrame> {
        let mut g = Graph::new();
        let x = g.constant(self.inputs(&[frame])?);
        let y = self.forward(&mut g, x)?;
        SemanticFrame::new(g.value(y).clone())
    }
}

/// `ỹ`: the frame itself when `p ≥ threshold`, otherwise the generator output.
pub fn reconstruct(
    frame: &SemanticFrame,
    discriminator: &dyn FrameDiscriminator,
    generator: &dyn FrameGenerator,
    threshold: f64,
) -> Result<SemanticFrame> {
    if discriminator.probability(frame)? >= threshold {
        Ok(frame.clone())
    } else {
        generator.generate(frame)
    }
}

/// Ablation switch for the reconstruction stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReconstructorMode {
    #[default]
    Full,
    /// Every frame passes through untouched.
    Off,
    /// Every frame goes through the generator.
    GeneratorOnly,
}

impl ReconstructorMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Off => "off",
            Self::GeneratorOnly => "generator_only",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "off" => Ok(Self::Off),
            "generator_only" => Ok(Self::GeneratorOnly),
            _ => Err(Error::Config(format!("unknown reconstructor mode {s:?}"))),
        }
    }
}

/// Discriminator that reports a fixed probability; realizes the ablations.
#[derive(Clone, Copy, Debug)]
pub struct ConstantDiscriminator(pub f64);

impl FrameDiscriminator for ConstantDiscriminator {
    fn probability(&self, _frame: &SemanticFrame) -> Result<f64> {
        Ok(self.0)
    }
}

/// The reconstruction stage as seen by the protocol engine.
pub trait FrameReconstructor: Send + Sync {
    fn reconstruct(&self, frame: &SemanticFrame) -> Result<SemanticFrame>;
}

/// Reconstruction that returns every frame unchanged.
#[derive(Clone, Copy, Debug, Default)]
pub struct PassThrough;

impl FrameReconstructor for PassThrough {
    fn reconstruct(&self, frame: &SemanticFrame) -> Result<SemanticFrame> {
        Ok(frame.clone())
    }
}

/// Trained pair plus the gate configuration.
#[derive(Clone, Debug)]
pub struct Reconstructor {
    pub discriminator: DiscriminatorNet,
    pub generator: GeneratorNet,
    pub threshold: f64,
    pub mode: ReconstructorMode,
}

impl Reconstructor {
    pub fn apply(&self, frame: &SemanticFrame) -> Result<SemanticFrame> {
        match self.mode {
            ReconstructorMode::Full => reconstruct(frame, &self.discriminator, &self.generator, self.threshold),
            ReconstructorMode::Off => reconstruct(frame, &ConstantDiscriminator(1.0), &self.generator, self.threshold),
            ReconstructorMode::GeneratorOnly => {
                reconstruct(frame, &ConstantDiscriminator(0.0), &self.generator, self.threshold)
            }
        }
    }

    pub fn with_mode(&self, mode: ReconstructorMode) -> Self {
        Self { mode, ..self.clone() }
    }
}

impl FrameReconstructor for Reconstructor {
    fn reconstruct(&self, frame: &SemanticFrame) -> Result<SemanticFrame> {
        self.apply(frame)
    }
}

fn check_finite(value: f64, epoch: usize) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Training { epoch, reason: format!("loss became {value}") })
    }
}

/// Minimizes BCE on `(ŷ, C)` samples. Returns the mean loss of every epoch.
pub fn train_discriminator(net: &mut DiscriminatorNet, k1: &[KbSampleK1], schedule: &TrainSchedule) -> Result<Vec<f64>> {
    let positives = k1.iter().filter(|s| s.label).count();
    if positives == 0 || positives == k1.len() {
        return Err(Error::Training { epoch: 0, reason: "K1 must contain both labels".into() });
    }
    let positions = k1[0].received.positions();
    for s in k1 {
        net.check(&s.received)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut adam = Adam::new(&net.params, AdamConfig::with_learning_rate(schedule.learning_rate))?;
    net.params.zero_grad();
    let mut history = Vec::with_capacity(schedule.epochs);
    for epoch in 0..schedule.epochs {
        let batches = schedule.batches(k1.len(), &mut rng)?;
        let mut total = 0.0;
        for batch in &batches {
            let frames: Vec<SemanticFrame> = batch.iter().map(|&i| k1[i].received.clone()).collect();
            let labels: Vec<f64> = batch.iter().map(|&i| if k1[i].label { 1.0 } else { 0.0 }).collect();
            let mut g = Graph::new();
            let x = g.constant(stack_frames(&frames, positions, net.width)?);
            let p = net.forward(&mut g, x, positions)?;
            let loss = g.bce(p, &labels)?;
            let value = g.value(loss).data()[0];
            check_finite(value, epoch)?;
            g.backward(loss, &mut net.params)?;
            adam.step(&mut net.params);
            total += value;
        }
        history.push(total / batches.len() as f64);
    }
    Ok(history)
}

/// Minimizes per-position MSE between `G_A(ŷ)` and `y` on K2 pairs.
pub fn train_generator(net: &mut GeneratorNet, k2: &[KbSampleK2], schedule: &TrainSchedule) -> Result<Vec<f64>> {
    if k2.is_empty() {
        return Err(Error::Training { epoch: 0, reason: "K2 is empty".into() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut adam = Adam::new(&net.params, AdamConfig::with_learning_rate(schedule.learning_rate))?;
    net.params.zero_grad();
    let mut history = Vec::with_capacity(schedule.epochs);
    for epoch in 0..schedule.epochs {
        let batches = schedule.batches(k2.len(), &mut rng)?;
        let mut total = 0.0;
        for batch in &batches {
            let corrupted: Vec<&SemanticFrame> = batch.iter().map(|&i| &k2[i].corrupted).collect();
            let clean: Vec<SemanticFrame> = batch.iter().map(|&i| k2[i].clean.clone()).collect();
            let mut g = Graph::new();
            let x = g.constant(net.inputs(&corrupted)?);
            let y = net.forward(&mut g, x)?;
            let loss = g.mse(y, stack_frames(&clean, net.config.positions, net.config.width)?)?;
            let value = g.value(loss).data()[0];
            check_finite(value, epoch)?;
            g.backward(loss, &mut net.params)?;
            adam.step(&mut net.params);
            total += value;
        }
        history.push(total / batches.len() as f64);
    }
    Ok(history)
}

/// Mean per-entry squared error of `generate(corrupted)` and of `corrupted`
/// itself against the clean frames.
pub fn generator_mse(generator: &dyn FrameGenerator, pairs: &[KbSampleK2]) -> Result<(f64, f64)> {
    if pairs.is_empty() {
        return Err(Error::Input("no pairs to evaluate".into()));
    }
    let mut generated = 0.0;
    let mut untouched = 0.0;
    for p in pairs {
        generated += generator.generate(&p.corrupted)?.mse(&p.clean);
        untouched += p.corrupted.mse(&p.clean);
    }
    Ok((generated / pairs.len() as f64, untouched / pairs.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn frame(rng: &mut ChaCha8Rng, l: usize, v: usize, shift: f64) -> SemanticFrame {
        SemanticFrame::from_data(l, v, (0..l * v).map(|_| rng.gen_range(-1.0..1.0) + shift).collect()).unwrap()
    }

    struct Shift(f64);

    impl FrameGenerator for Shift {
        fn generate(&self, f: &SemanticFrame) -> Result<SemanticFrame> {
            SemanticFrame::new(Tensor::new(
                f.features().shape().to_vec(),
                f.features().data().iter().map(|x| x + self.0).collect(),
            )?)
        }
    }

    fn gen_config(width: usize, positions: usize, context: GeneratorContext) -> GeneratorConfig {
        GeneratorConfig { width, positions, output: GeneratorOutput::Linear, context }
    }

    #[test]
    fn layer_sizes_follow_width() {
        let d = DiscriminatorNet::new(32, DiscriminatorOutput::Sigmoid, 1).unwrap();
        assert_eq!(d.layer_widths(), vec![32, 16, 8, 4, 1]);
        let g = GeneratorNet::new(gen_config(32, 6, GeneratorContext::None), 1).unwrap();
        assert_eq!(g.layer_widths(), vec![32, 128, 512, 128, 32]);
        let g = GeneratorNet::new(gen_config(32, 6, GeneratorContext::Mean), 1).unwrap();
        assert_eq!(g.layer_widths(), vec![64, 128, 512, 128, 32]);
        let g = GeneratorNet::new(gen_config(32, 6, GeneratorContext::Frame), 1).unwrap();
        assert_eq!(g.layer_widths(), vec![224, 128, 512, 128, 32]);
        assert!(DiscriminatorNet::new(4, DiscriminatorOutput::Sigmoid, 1).is_err());
    }

    #[test]
    fn outputs_are_bounded_shaped_and_repeatable() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for output in [DiscriminatorOutput::Sigmoid, DiscriminatorOutput::Relu] {
            let d = DiscriminatorNet::new(16, output, 3).unwrap();
            for _ in 0..20 {
                let f = frame(&mut rng, 5, 16, 0.0);
                let p = d.probability(&f).unwrap();
                assert!((0.0..=1.0).contains(&p));
                assert_eq!(p, d.probability(&f).unwrap());
            }
        }
        let config = GeneratorConfig { output: GeneratorOutput::Relu, ..gen_config(16, 5, GeneratorContext::Frame) };
        let g = GeneratorNet::new(config, 3).unwrap();
        let f = frame(&mut rng, 5, 16, 0.0);
        let y = g.generate(&f).unwrap();
        assert_eq!(y.features().shape(), &[5, 16]);
        assert!(y.features().data().iter().all(|&v| v >= 0.0));
        assert_eq!(y, g.generate(&f).unwrap());
    }

    #[test]
    fn generator_acts_per_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = GeneratorNet::new(gen_config(8, 3, GeneratorContext::None), 5).unwrap();
        let one = GeneratorNet::from_params(gen_config(8, 1, GeneratorContext::None), g.params().clone()).unwrap();
        let f = frame(&mut rng, 3, 8, 0.0);
        let whole = g.generate(&f).unwrap();
        for r in 0..3 {
            let row = SemanticFrame::from_data(1, 8, f.features().row(r).to_vec()).unwrap();
            let single = one.generate(&row).unwrap();
            for (a, b) in single.features().data().iter().zip(whole.features().row(r)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(matches!(g.generate(&frame(&mut rng, 2, 8, 0.0)), Err(Error::Dimension(_))));
    }

    #[test]
    fn context_lets_other_positions_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let f = frame(&mut rng, 3, 8, 0.0);
        let mut data = f.features().data().to_vec();
        data[20] += 1.0;
        let changed = SemanticFrame::from_data(3, 8, data).unwrap();
        for context in [GeneratorContext::None, GeneratorContext::Mean, GeneratorContext::Frame] {
            let g = GeneratorNet::new(gen_config(8, 3, context), 5).unwrap();
            let a = g.generate(&f).unwrap();
            let b = g.generate(&changed).unwrap();
            let first_row_moved = a.features().row(0) != b.features().row(0);
            assert_eq!(first_row_moved, context != GeneratorContext::None, "{context:?}");
            assert_eq!(GeneratorContext::parse(context.as_str()).unwrap(), context);
        }
    }

    #[test]
    fn gate_branches() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = frame(&mut rng, 4, 8, 0.0);
        let g = Shift(1.0);
        assert_eq!(reconstruct(&f, &ConstantDiscriminator(1.0), &g, 0.5).unwrap(), f);
        assert_eq!(reconstruct(&f, &ConstantDiscriminator(0.5), &g, 0.5).unwrap(), f);
        assert_eq!(reconstruct(&f, &ConstantDiscriminator(0.0), &g, 0.5).unwrap(), g.generate(&f).unwrap());
    }

    #[test]
    fn mixed_batch_routes_per_frame() {
        struct MeanSign;
        impl FrameDiscriminator for MeanSign {
            fn probability(&self, f: &SemanticFrame) -> Result<f64> {
                Ok(if f.features().data().iter().sum::<f64>() > 0.0 { 1.0 } else { 0.0 })
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = Shift(-3.0);
        for i in 0..40 {
            let f = frame(&mut rng, 2, 4, if i % 2 == 0 { 0.7 } else { -0.7 });
            let expected = if f.features().data().iter().sum::<f64>() > 0.0 { f.clone() } else { g.generate(&f).unwrap() };
            assert_eq!(reconstruct(&f, &MeanSign, &g, 0.5).unwrap(), expected);
        }
    }

    #[test]
    fn discriminator_separates_a_toy_kb() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let k1: Vec<KbSampleK1> = (0..200)
            .map(|i| {
                let label = i % 2 == 0;
                KbSampleK1 { received: frame(&mut rng, 3, 8, if label { 0.8 } else { -0.8 }), label }
            })
            .collect();
        let mut d = DiscriminatorNet::new(8, DiscriminatorOutput::Sigmoid, 1).unwrap();
        let schedule = TrainSchedule { epochs: 40, batch_size: 20, learning_rate: 1e-2, seed: 2 };
        let h = train_discriminator(&mut d, &k1, &schedule).unwrap();
        assert!(h.last().unwrap() < &h[0]);
        let correct = k1
            .iter()
            .filter(|s| (d.probability(&s.received).unwrap() > 0.5) == s.label)
            .count();
        assert!(correct as f64 / k1.len() as f64 >= 0.95);

        let single: Vec<KbSampleK1> = k1.iter().filter(|s| s.label).cloned().collect();
        assert!(matches!(train_discriminator(&mut d, &single, &schedule), Err(Error::Training { .. })));
    }

    #[test]
    fn generator_learns_to_denoise() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pairs: Vec<KbSampleK2> = (0..300)
            .map(|_| {
                let clean = frame(&mut rng, 2, 8, 0.0);
                let noisy: Vec<f64> = clean.features().data().iter().map(|x| 0.5 * x + rng.gen_range(-0.05..0.05)).collect();
                KbSampleK2 { corrupted: SemanticFrame::from_data(2, 8, noisy).unwrap(), clean }
            })
            .collect();
        let (train, held) = pairs.split_at(250);
        let mut g = GeneratorNet::new(gen_config(8, 2, GeneratorContext::None), 3).unwrap();
        let schedule = TrainSchedule { epochs: 30, batch_size: 25, learning_rate: 1e-3, seed: 1 };
        train_generator(&mut g, train, &schedule).unwrap();
        let (generated, untouched) = generator_mse(&g, held).unwrap();
        assert!(generated < untouched, "{generated} vs {untouched}");
        assert!(matches!(train_generator(&mut g, &[], &schedule), Err(Error::Training { .. })));
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [ReconstructorMode::Full, ReconstructorMode::Off, ReconstructorMode::GeneratorOnly] {
            assert_eq!(ReconstructorMode::parse(m.as_str()).unwrap(), m);
        }
        assert!(ReconstructorMode::parse("on").is_err());
    }
}
