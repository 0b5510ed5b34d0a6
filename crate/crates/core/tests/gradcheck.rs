//! Central finite differences against the tape's analytic gradients.

use dragan_core::dragan::{Critic, DraganConfig, Generator};
use dragan_core::nn::{Activation, BatchNorm1d, Conv1d, Dense, Graph, Mode, Parameter, Tensor, Var};
use dragan_core::rng::{rng_from_seed, Rng};
use rand::Rng as _;

const H: f64 = 1e-4;
const REL_TOL: f64 = 1e-3;
// Below this both gradients are numerically zero.
const ZERO_SCALE: f64 = 1e-8;
const CHECKS: usize = 50;

fn random_tensor(shape: &[usize], rng: &mut Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn perturb_all(params: Vec<&mut Parameter>, rng: &mut Rng) {
    for p in params {
        for v in p.value.data_mut() {
            *v += rng.random_range(-0.5..0.5);
        }
    }
}

/// Compares analytic and numeric gradients at `CHECKS` random parameter
/// entries. Returns the worst relative error.
fn gradcheck<M>(
    model: &mut M,
    params: impl Fn(&mut M) -> Vec<&mut Parameter>,
    loss: impl Fn(&mut M, &mut Graph) -> Var,
    seed: u64,
) -> f64 {
    let mut g = Graph::new();
    let l = loss(model, &mut g);
    g.backward(l).unwrap();
    g.write_grads(params(model));
    drop(g);
    let analytic: Vec<Vec<f64>> = params(model).iter().map(|p| p.grad.data().to_vec()).collect();
    let sizes: Vec<usize> = analytic.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().sum();

    let eval = |model: &mut M| {
        let mut g = Graph::new();
        let l = loss(model, &mut g);
        g.value(l).data()[0]
    };
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..CHECKS {
        let mut flat = rng.random_range(0..total);
        let mut pi = 0;
        while flat >= sizes[pi] {
            flat -= sizes[pi];
            pi += 1;
        }
        let orig = params(model)[pi].value.data()[flat];
        params(model)[pi].value.data_mut()[flat] = orig + H;
        let up = eval(model);
        params(model)[pi].value.data_mut()[flat] = orig - H;
        let down = eval(model);
        params(model)[pi].value.data_mut()[flat] = orig;
        let numeric = (up - down) / (2.0 * H);
        let a = analytic[pi][flat];
        let scale = a.abs().max(numeric.abs());
        let rel = if scale < ZERO_SCALE { 0.0 } else { (a - numeric).abs() / scale };
        assert!(
            rel <= REL_TOL,
            "param {pi}[{flat}]: analytic {a:e} vs numeric {numeric:e} (rel {rel:e})"
        );
        worst = worst.max(rel);
    }
    worst
}

#[test]
fn dense_mse() {
    let mut rng = rng_from_seed(1);
    let x = random_tensor(&[6, 5], &mut rng);
    let target: Vec<f64> = (0..18).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut layer = Dense::new(5, 3, &mut rng).unwrap();
    perturb_all(layer.params_mut().into(), &mut rng);
    gradcheck(
        &mut layer,
        |l| l.params_mut().into(),
        |l, g| {
            let xv = g.constant(x.clone());
            let y = l.forward(g, xv, false).unwrap();
            g.mse(y, &target).unwrap()
        },
        11,
    );
}

#[test]
fn conv1d_same_padding() {
    let mut rng = rng_from_seed(2);
    let x = random_tensor(&[3, 9], &mut rng);
    let target: Vec<f64> = (0..4 * 9).map(|_| rng.random_range(-1.0..1.0)).collect();
    for kernel in [1, 3, 5] {
        let mut layer = Conv1d::new(3, 4, kernel, &mut rng).unwrap();
        perturb_all(layer.params_mut().into(), &mut rng);
        gradcheck(
            &mut layer,
            |l| l.params_mut().into(),
            |l, g| {
                let xv = g.constant(x.clone());
                let y = l.forward(g, xv, false).unwrap();
                g.mse(y, &target).unwrap()
            },
            12 + kernel as u64,
        );
    }
}

struct BnNet {
    dense: Dense,
    bn: BatchNorm1d,
    mode: Mode,
}

impl BnNet {
    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut p: Vec<&mut Parameter> = self.dense.params_mut().into();
        p.extend(self.bn.params_mut());
        p
    }
}

#[test]
fn batchnorm_train_and_eval() {
    let mut rng = rng_from_seed(3);
    let x = random_tensor(&[7, 4], &mut rng);
    let target: Vec<f64> = (0..7 * 5).map(|_| rng.random_range(-1.0..1.0)).collect();
    for mode in [Mode::Train, Mode::Eval] {
        let mut net = BnNet {
            dense: Dense::new(4, 5, &mut rng).unwrap(),
            bn: BatchNorm1d::new(5).unwrap(),
            mode,
        };
        perturb_all(net.params_mut(), &mut rng);
        net.bn.running_mean = (0..5).map(|_| rng.random_range(-0.3..0.3)).collect();
        net.bn.running_var = (0..5).map(|_| rng.random_range(0.5..1.5)).collect();
        gradcheck(
            &mut net,
            BnNet::params_mut,
            |n, g| {
                let xv = g.constant(x.clone());
                let h = n.dense.forward(g, xv, false).unwrap();
                // Running statistics move in train mode but do not enter the
                // train-mode output.
                let y = n.bn.forward(g, h, n.mode, false).unwrap();
                let y = g.sigmoid(y);
                g.mse(y, &target).unwrap()
            },
            20,
        );
    }
}

struct Mlp {
    layers: Vec<Dense>,
    acts: Vec<Activation>,
}

#[test]
fn activation_compositions() {
    let mut rng = rng_from_seed(4);
    let x = random_tensor(&[5, 4], &mut rng);
    let target: Vec<f64> = (0..5 * 2).map(|_| rng.random_range(0.0..1.0)).collect();
    let orders = [
        [Activation::Sigmoid, Activation::Relu, Activation::LeakyRelu],
        [Activation::LeakyRelu, Activation::Sigmoid, Activation::Relu],
        [Activation::Relu, Activation::LeakyRelu, Activation::Sigmoid],
    ];
    for (i, acts) in orders.into_iter().enumerate() {
        let mut net = Mlp {
            layers: vec![
                Dense::new(4, 6, &mut rng).unwrap(),
                Dense::new(6, 5, &mut rng).unwrap(),
                Dense::new(5, 2, &mut rng).unwrap(),
            ],
            acts: acts.to_vec(),
        };
        for l in &mut net.layers {
            perturb_all(l.params_mut().into(), &mut rng);
        }
        gradcheck(
            &mut net,
            |n| n.layers.iter_mut().flat_map(|l| l.params_mut()).collect(),
            |n, g| {
                let mut h = g.constant(x.clone());
                for (l, a) in n.layers.iter().zip(&n.acts) {
                    h = l.forward(g, h, false).unwrap();
                    h = a.apply(g, h);
                }
                g.mse(h, &target).unwrap()
            },
            30 + i as u64,
        );
    }
}

fn small_config() -> DraganConfig {
    DraganConfig {
        z_size: 12,
        gen_hidden_channels: 4,
        critic_layers: vec![10, 8, 6],
        ..DraganConfig::default()
    }
}

struct Stack {
    generator: Generator,
    critic: Critic,
    noise: Tensor,
    critic_mode: Mode,
}

impl Stack {
    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut p = self.generator.params_mut();
        p.extend(self.critic.params_mut());
        p
    }
}

#[test]
fn generator_critic_stack() {
    let cfg = small_config();
    let (d, m) = (3, 6);
    let mut rng = rng_from_seed(5);
    // Train-mode critic batch norm needs at least two rows, so that case
    // scores two noise vectors.
    for (critic_mode, batch) in [(Mode::Eval, 1), (Mode::Train, 2)] {
        let mut stack = Stack {
            generator: Generator::new(&cfg, d, m, &mut rng).unwrap(),
            critic: Critic::new(&cfg, d, m, &mut rng).unwrap(),
            noise: random_tensor(&[batch, cfg.z_size], &mut rng),
            critic_mode,
        };
        for bn in stack.critic.blocks.iter_mut().filter_map(|b| b.batchnorm.as_mut()) {
            bn.running_var.iter_mut().for_each(|v| *v = 0.05);
        }
        gradcheck(
            &mut stack,
            Stack::params_mut,
            |s, g| {
                // Same dropout masks on every evaluation.
                let mut drop_rng = rng_from_seed(99);
                let width = m * (d + 1);
                let mut rows = Vec::new();
                for b in 0..s.noise.shape()[0] {
                    let z = s.noise.data()[b * cfg.z_size..(b + 1) * cfg.z_size].to_vec();
                    let zv = g.constant(Tensor::new(vec![1, cfg.z_size], z).unwrap());
                    let out = s.generator.forward(g, zv, Mode::Train, &mut drop_rng).unwrap();
                    rows.push(g.reshape(out, &[1, width]).unwrap());
                }
                let x = if rows.len() == 1 {
                    rows[0]
                } else {
                    stack_rows(g, &rows, width)
                };
                let c = s.critic.forward(g, x, s.critic_mode, false, &mut drop_rng).unwrap();
                let gap = g.scale(c, -1.0);
                let gap = g.offset(gap, 1.0);
                let sq = g.square(gap);
                g.mean(sq)
            },
            40 + batch as u64,
        );
    }
}

/// Vertical concatenation of `[1, w]` rows via selector matmuls.
fn stack_rows(g: &mut Graph, rows: &[Var], width: usize) -> Var {
    let n = rows.len();
    let mut acc: Option<Var> = None;
    for (i, &r) in rows.iter().enumerate() {
        let mut sel = vec![0.0; n];
        sel[i] = 1.0;
        let s = g.constant(Tensor::new(vec![n, 1], sel).unwrap());
        let placed = g.matmul(s, r).unwrap();
        debug_assert_eq!(g.value(placed).shape(), &[n, width]);
        acc = Some(match acc {
            Some(a) => g.add(a, placed).unwrap(),
            None => placed,
        });
    }
    acc.unwrap()
}
