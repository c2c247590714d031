//! Time-varying multipath Rayleigh fading with additive white Gaussian noise.
//!
//! A frame of `L×V` reals is read as `L·V/2` complex baseband symbols, taking
//! consecutive pairs as I/Q. The received symbol at time `t` is
//! `y(t) = Σ_r h_r(t)·x(t−r) + w(t)` with `x(t) = 0` for `t < 0`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::codec::SemanticFrame;
use crate::error::{Error, Result};
use crate::tensor::LinearMap;

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelConfig {
    /// Number of resolvable paths `R`.
    pub n_paths: usize,
    /// Average power of each path; sums to one so that `E{Σ|h_r|²} = 1`.
    pub profile: Vec<f64>,
    pub snr_db: f64,
    /// AR(1) correlation of each tap between consecutive symbols.
    pub rho: f64,
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            n_paths: 2,
            profile: vec![0.8, 0.2],
            snr_db: 10.0,
            rho: 0.99,
            seed: 7,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Config("channel needs at least one path".into()));
        }
        if self.profile.len() != self.n_paths {
            return Err(Error::Config(format!(
                "power profile has {} entries for {} paths",
                self.profile.len(),
                self.n_paths
            )));
        }
        if self.profile.iter().any(|&p| p.is_nan() || p < 0.0) {
            return Err(Error::Config("path powers must be non-negative".into()));
        }
        let total: f64 = self.profile.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("path powers sum to {total}, expected 1")));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Config(format!("time correlation {} outside [0, 1]", self.rho)));
        }
        if self.snr_db.is_nan() {
            return Err(Error::Config("SNR is NaN".into()));
        }
        Ok(())
    }

    pub fn noise_variance(&self) -> f64 {
        noise_variance_from_snr(self.snr_db)
    }

    pub fn with_snr(&self, snr_db: f64) -> Self {
        Self {
            snr_db,
            ..self.clone()
        }
    }
}

/// Noise variance `N = 10^(−snr/10)` for unit signal power. `+∞` dB gives zero noise.
pub fn noise_variance_from_snr(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Tap gains per path and symbol time plus unit-variance complex noise.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    /// `taps[r][t]`
    pub taps: Vec<Vec<Complex64>>,
    /// `CN(0, 1)` samples; scaled by `√N` when applied.
    pub noise: Vec<Complex64>,
}

impl ChannelRealization {
    /// Time-invariant taps and no noise. `taps = [1]` is the identity channel.
    pub fn fixed(taps: &[Complex64], n_symbols: usize) -> Self {
        Self {
            taps: taps.iter().map(|&h| vec![h; n_symbols]).collect(),
            noise: vec![Complex64::new(0.0, 0.0); n_symbols],
        }
    }

    pub fn identity(n_symbols: usize) -> Self {
        Self::fixed(&[Complex64::new(1.0, 0.0)], n_symbols)
    }

    pub fn n_symbols(&self) -> usize {
        self.noise.len()
    }

    pub fn n_paths(&self) -> usize {
        self.taps.len()
    }

    /// Total instantaneous gain `Σ_r |h_r(t)|²`.
    pub fn gain(&self, t: usize) -> f64 {
        self.taps.iter().map(|tap| tap[t].norm_sqr()).sum()
    }

    fn convolve(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len() / 2;
        let mut y = vec![0.0; x.len()];
        for t in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (r, tap) in self.taps.iter().enumerate() {
                if r > t {
                    break;
                }
                let s = Complex64::new(x[2 * (t - r)], x[2 * (t - r) + 1]);
                acc += tap[t] * s;
            }
            y[2 * t] = acc.re;
            y[2 * t + 1] = acc.im;
        }
        y
    }

    fn convolve_adjoint(&self, g: &[f64]) -> Vec<f64> {
        let n = g.len() / 2;
        let mut out = vec![0.0; g.len()];
        for s in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (r, tap) in self.taps.iter().enumerate() {
                let t = s + r;
                if t >= n {
                    break;
                }
                acc += tap[t].conj() * Complex64::new(g[2 * t], g[2 * t + 1]);
            }
            out[2 * s] = acc.re;
            out[2 * s + 1] = acc.im;
        }
        out
    }

    /// Noise samples scaled to variance `noise_variance`, as interleaved reals.
    pub fn scaled_noise(&self, n_reals: usize, noise_variance: f64) -> Vec<f64> {
        let s = noise_variance.sqrt();
        let mut out = Vec::with_capacity(n_reals);
        for w in &self.noise[..n_reals / 2] {
            out.push(w.re * s);
            out.push(w.im * s);
        }
        out
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Draws taps `h_r(0) ~ CN(0, σ_r²)`, `h_r(t+1) = ρ·h_r(t) + √(1−ρ²)·CN(0, σ_r²)`,
/// and `CN(0, 1)` noise, from the generator `rng`.
pub fn sample_channel_with<R: Rng + ?Sized>(config: &ChannelConfig, n_symbols: usize, rng: &mut R) -> Result<ChannelRealization> {
    config.validate()?;
    if n_symbols == 0 {
        return Err(Error::Input("channel realization needs at least one symbol".into()));
    }
    let innovation = (1.0 - config.rho * config.rho).max(0.0).sqrt();
    let mut taps = Vec::with_capacity(config.n_paths);
    for &power in &config.profile {
        let mut tap = Vec::with_capacity(n_symbols);
        let mut h = complex_gaussian(rng, power);
        tap.push(h);
        for _ in 1..n_symbols {
            if innovation > 0.0 {
                h = h * config.rho + complex_gaussian(rng, power) * innovation;
            }
            tap.push(h);
        }
        taps.push(tap);
    }
    let noise = (0..n_symbols).map(|_| complex_gaussian(rng, 1.0)).collect();
    Ok(ChannelRealization { taps, noise })
}

/// Realization drawn from a generator seeded with `config.seed`.
pub fn sample_channel(config: &ChannelConfig, n_symbols: usize) -> Result<ChannelRealization> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    sample_channel_with(config, n_symbols, &mut rng)
}

/// Passes `frame` through `realization` with noise variance `noise_variance`.
pub fn apply_channel(frame: &SemanticFrame, realization: &ChannelRealization, noise_variance: f64) -> Result<SemanticFrame> {
    let features = frame.features();
    if !features.cols().is_multiple_of(2) {
        return Err(Error::Config(format!("channel width {} is odd", features.cols())));
    }
    let n_reals = features.len();
    if realization.n_symbols() < n_reals / 2 {
        return Err(Error::Input(format!(
            "realization covers {} symbols, frame needs {}",
            realization.n_symbols(),
            n_reals / 2
        )));
    }
    let mut y = realization.convolve(features.data());
    if noise_variance > 0.0 {
        for (v, w) in y.iter_mut().zip(realization.scaled_noise(n_reals, noise_variance)) {
            *v += w;
        }
    }
    SemanticFrame::from_data(features.rows(), features.cols(), y)
}

/// The noise-free part of a batch of channels, as a fixed linear operator
/// for training graphs. Frame `i` of the batch passes through `realizations[i]`.
pub struct BatchChannel {
    pub realizations: Vec<ChannelRealization>,
    pub frame_len: usize,
}

impl LinearMap for BatchChannel {
    fn apply(&self, input: &[f64]) -> Vec<f64> {
        input
            .chunks(self.frame_len)
            .zip(&self.realizations)
            .flat_map(|(x, r)| r.convolve(x))
            .collect()
    }

    fn adjoint(&self, grad_out: &[f64]) -> Vec<f64> {
        grad_out
            .chunks(self.frame_len)
            .zip(&self.realizations)
            .flat_map(|(g, r)| r.convolve_adjoint(g))
            .collect()
    }
}
