//! Central finite-difference checks for layers and composed encoders.

use leafkit::neural::{
    layers::{BatchNorm, Dense, MaxPool},
    EncoderArch, EncoderModel, Layer, LayerSpec, Mode, Tensor,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const REL_TOL: f64 = 1e-4;
/// Both gradients below this magnitude count as agreeing zeros.
const ABS_FLOOR: f64 = 1e-8;

#[derive(Debug)]
pub struct Check {
    pub name: String,
    pub max_rel: f64,
    pub compared: usize,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.compared > 0 && self.max_rel <= REL_TOL
    }
}

fn rel_err(a: f64, n: f64) -> f64 {
    let scale = a.abs().max(n.abs());
    if scale < ABS_FLOOR {
        0.0
    } else {
        (a - n).abs() / scale
    }
}

fn random_tensor(shape: Vec<usize>, rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Check one layer under `L = sum(c * layer(x))` for random `c`, covering the
/// input gradient and every parameter gradient.
pub fn check_layer(name: &str, mut layer: Layer, input_shape: Vec<usize>, eps: f64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = random_tensor(input_shape, &mut rng);
    let seed = 99;
    let loss = |layer: &mut Layer, x: &Tensor, c: Option<&Tensor>| -> (f64, Tensor) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let y = layer.forward(x.clone(), Mode::Train, &mut r).unwrap();
        let l = c.map_or(0.0, |c| y.data().iter().zip(c.data()).map(|(a, b)| a * b).sum());
        (l, y)
    };
    let (_, y) = loss(&mut layer, &x, None);
    let c = random_tensor(y.shape().to_vec(), &mut rng);
    layer.zero_grad();
    let (_, _) = loss(&mut layer, &x, Some(&c));
    let dx = layer.backward(c.clone()).unwrap();
    let grads: Vec<Vec<f64>> = layer.params_mut().into_iter().map(|p| p.1.clone()).collect();

    let mut max_rel: f64 = 0.0;
    let mut compared = 0;
    for i in 0..x.len() {
        let mut xp = x.clone();
        xp.data_mut()[i] += eps;
        let mut xm = x.clone();
        xm.data_mut()[i] -= eps;
        let n = (loss(&mut layer, &xp, Some(&c)).0 - loss(&mut layer, &xm, Some(&c)).0) / (2.0 * eps);
        max_rel = max_rel.max(rel_err(dx.data()[i], n));
        compared += 1;
    }
    for (p, g) in grads.iter().enumerate() {
        for j in 0..g.len() {
            let orig = layer.params_mut()[p].0[j];
            layer.params_mut()[p].0[j] = orig + eps;
            let lp = loss(&mut layer, &x, Some(&c)).0;
            layer.params_mut()[p].0[j] = orig - eps;
            let lm = loss(&mut layer, &x, Some(&c)).0;
            layer.params_mut()[p].0[j] = orig;
            max_rel = max_rel.max(rel_err(g[j], (lp - lm) / (2.0 * eps)));
            compared += 1;
        }
    }
    Check {
        name: name.to_string(),
        max_rel,
        compared,
    }
}

fn randomize_bn(bn: &mut BatchNorm, rng: &mut ChaCha8Rng) {
    for v in bn.gamma.iter_mut().chain(bn.beta.iter_mut()) {
        *v = rng.gen_range(0.5..1.5);
    }
}

/// Every layer type in isolation.
pub fn layer_suite() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let conv2d = Layer::from_spec(
        &LayerSpec::Conv {
            in_channels: 2,
            out_channels: 3,
            kernel: (3, 3),
        },
        &mut rng,
    );
    let conv1d = Layer::from_spec(
        &LayerSpec::Conv {
            in_channels: 2,
            out_channels: 3,
            kernel: (1, 3),
        },
        &mut rng,
    );
    let mut bn4 = BatchNorm::new(3);
    randomize_bn(&mut bn4, &mut rng);
    let mut bn2 = BatchNorm::new(5);
    randomize_bn(&mut bn2, &mut rng);
    let mut dense = Dense::new(6, 4, &mut rng);
    for b in &mut dense.bias {
        *b = rng.gen_range(-0.5..0.5);
    }
    vec![
        check_layer("conv2d 3x3", conv2d, vec![2, 2, 6, 5], 1e-5),
        check_layer("conv1d k=3", conv1d, vec![2, 2, 1, 9], 1e-5),
        check_layer("dense", Layer::Dense(dense), vec![3, 6], 1e-5),
        check_layer("batch-norm spatial", Layer::BatchNorm(bn4), vec![3, 3, 2, 2], 1e-5),
        check_layer("batch-norm flat", Layer::BatchNorm(bn2), vec![4, 5], 1e-5),
        check_layer("max-pool 2x2", Layer::MaxPool(MaxPool::new((2, 2))), vec![2, 2, 5, 4], 1e-6),
        check_layer("max-pool 1x2", Layer::MaxPool(MaxPool::new((1, 2))), vec![2, 2, 1, 7], 1e-6),
        check_layer("relu", Layer::Relu(None), vec![3, 8], 1e-6),
        check_layer("flatten", Layer::Flatten(None), vec![2, 3, 2, 2], 1e-5),
        check_layer("dropout", Layer::from_spec(&LayerSpec::Dropout { rate: 0.3 }, &mut rng), vec![4, 6], 1e-5),
        softmax_ce_check(),
    ]
}

fn softmax_ce_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let logits = random_tensor(vec![4, 5], &mut rng);
    let labels = [0, 3, 4, 1];
    let (_, _, g) = leafkit::neural::softmax_cross_entropy(&logits, &labels).unwrap();
    let eps = 1e-5;
    let mut max_rel: f64 = 0.0;
    for i in 0..logits.len() {
        let mut p = logits.clone();
        p.data_mut()[i] += eps;
        let mut m = logits.clone();
        m.data_mut()[i] -= eps;
        let lp = leafkit::neural::softmax_cross_entropy(&p, &labels).unwrap().0;
        let lm = leafkit::neural::softmax_cross_entropy(&m, &labels).unwrap().0;
        max_rel = max_rel.max(rel_err(g.data()[i], (lp - lm) / (2.0 * eps)));
    }
    Check {
        name: "softmax cross-entropy".into(),
        max_rel,
        compared: logits.len(),
    }
}

/// Whole conv2d encoder plus softmax head, 32x32 RGB, batch of 4, including
/// dropout (fixed mask) and L2. Samples `per_array` entries of each parameter
/// array.
pub fn composed_conv2d_check(per_array: usize) -> Check {
    let arch = EncoderArch::conv2d(3, 32).unwrap();
    let mut model = EncoderModel::new(arch, 4, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let x = random_tensor(vec![4, 3, 32, 32], &mut rng);
    let labels = [0, 1, 2, 3];
    let l2 = 1e-3;
    let eval = |m: &mut EncoderModel| {
        let mut r = ChaCha8Rng::seed_from_u64(5);
        m.compute_gradients(x.clone(), &labels, l2, Mode::Train, &mut r).unwrap().0
    };
    eval(&mut model);
    let grads: Vec<Vec<f64>> = model
        .body
        .params_mut()
        .into_iter()
        .chain(model.head.params_mut())
        .map(|p| p.1.clone())
        .collect();
    let eps = 1e-6;
    let mut max_rel: f64 = 0.0;
    let mut compared = 0;
    let n_body = model.body.params_mut().len();
    for (p, g) in grads.iter().enumerate() {
        let picks: Vec<usize> = (0..per_array.min(g.len())).map(|_| rng.gen_range(0..g.len())).collect();
        for j in picks {
            let set = |m: &mut EncoderModel, v: f64| {
                if p < n_body {
                    m.body.params_mut()[p].0[j] = v;
                } else {
                    m.head.params_mut()[p - n_body].0[j] = v;
                }
            };
            let orig = if p < n_body {
                model.body.params_mut()[p].0[j]
            } else {
                model.head.params_mut()[p - n_body].0[j]
            };
            set(&mut model, orig + eps);
            let lp = eval(&mut model);
            set(&mut model, orig - eps);
            let lm = eval(&mut model);
            set(&mut model, orig);
            max_rel = max_rel.max(rel_err(g[j], (lp - lm) / (2.0 * eps)));
            compared += 1;
        }
    }
    Check {
        name: "conv2d encoder 32x32, batch 4".into(),
        max_rel,
        compared,
    }
}
