use dragan_core::nn::{dropout, Dense, Graph, Mode, Optimizer, OptimizerKind, Tensor};
use dragan_core::rng::rng_from_seed;
use proptest::prelude::*;

proptest! {
    #[test]
    fn eval_dropout_is_identity(values in prop::collection::vec(-10.0f64..10.0, 1..64), rate in 0.0f64..0.95) {
        let mut g = Graph::new();
        let x = g.variable(Tensor::new(vec![values.len()], values.clone()).unwrap());
        let y = dropout(&mut g, x, rate, Mode::Eval, &mut rng_from_seed(0)).unwrap();
        prop_assert_eq!(g.value(y).data(), &values[..]);
    }

    #[test]
    fn shared_subexpressions_accumulate(v in -5.0f64..5.0) {
        let mut g = Graph::new();
        let x = g.variable(Tensor::scalar(v));
        let y = g.add(x, x).unwrap();
        let z = g.mul(y, x).unwrap();
        g.backward(z).unwrap();
        // d(2x·x)/dx = 4x
        prop_assert!((g.grad(x).unwrap()[0] - 4.0 * v).abs() <= 1e-12);
    }
}

fn train_trace(kind: OptimizerKind) -> Vec<u64> {
    let mut rng = rng_from_seed(21);
    let mut layer = Dense::new(4, 3, &mut rng).unwrap();
    let mut opt = Optimizer::new(kind, 0.05, layer.params()).unwrap();
    let x = Tensor::new(vec![5, 4], (0..20).map(|i| (i as f64 * 0.7).cos()).collect()).unwrap();
    let target: Vec<f64> = (0..15).map(|i| (i as f64 * 0.3).sin()).collect();
    let mut bits = Vec::new();
    for step in 0..20 {
        let mut g = Graph::new();
        let xv = g.constant(x.clone());
        let h = layer.forward(&mut g, xv, false).unwrap();
        let h = dropout(&mut g, h, 0.3, Mode::Train, &mut rng_from_seed(step)).unwrap();
        let loss = g.mse(h, &target).unwrap();
        bits.push(g.value(loss).data()[0].to_bits());
        g.backward(loss).unwrap();
        g.write_grads(layer.params_mut());
        drop(g);
        opt.step(layer.params_mut()).unwrap();
    }
    bits.extend(layer.weight.value.data().iter().map(|v| v.to_bits()));
    bits
}

#[test]
fn forward_backward_step_is_bit_reproducible() {
    for kind in [OptimizerKind::Sgd, OptimizerKind::Adam, OptimizerKind::RmsProp] {
        assert_eq!(train_trace(kind), train_trace(kind));
    }
}
