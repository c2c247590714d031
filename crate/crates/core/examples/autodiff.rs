//! Fits a two-layer network to a noisy sine with the tape autodiff and Adam,
//! then checks its gradients against central differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semharq::tensor::{gradient_check, Adam, AdamConfig, Dense, Graph, NodeId, ParamSet, Tensor};
use semharq::Result;

struct Net {
    hidden: Dense,
    out: Dense,
}

impl Net {
    fn loss(&self, ps: &ParamSet, x: &Tensor, y: &Tensor) -> Result<(Graph, NodeId)> {
        let mut g = Graph::new();
        let xi = g.constant(x.clone());
        let h = self.hidden.forward(&mut g, ps, xi)?;
        let h = g.sigmoid(h);
        let o = self.out.forward(&mut g, ps, h)?;
        let l = g.mse(o, y.clone())?;
        Ok((g, l))
    }
}

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 64;
    let xs: Vec<f64> = (0..n).map(|i| -3.0 + 6.0 * i as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x.sin() + rng.gen_range(-0.05..0.05)).collect();
    let x = Tensor::new(vec![n, 1], xs)?;
    let y = Tensor::new(vec![n, 1], ys)?;

    let mut ps = ParamSet::new();
    let net = Net { hidden: Dense::new(&mut ps, "hidden", 1, 16, &mut rng), out: Dense::new(&mut ps, "out", 16, 1, &mut rng) };
    let mut adam = Adam::new(&ps, AdamConfig::with_learning_rate(0.02))?;
    for step in 0..=1500 {
        let (g, l) = net.loss(&ps, &x, &y)?;
        if step % 300 == 0 {
            println!("step {step:>4}  mse {:.5}", g.value(l).data()[0]);
        }
        g.backward(l, &mut ps)?;
        adam.step(&mut ps);
    }

    let report = gradient_check(&mut ps, |ps| net.loss(ps, &x, &y), 1e-5, 1e-3)?;
    for p in &report.params {
        println!("{:<14} worst relative error {:.2e}", p.name, p.max_rel_error);
    }
    println!("gradient check {}", if report.passed { "passed" } else { "FAILED" });
    Ok(())
}
