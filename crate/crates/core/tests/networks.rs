use std::f64::consts::PI;

use distrl_core::autodiff::{Array, Graph};
use distrl_core::distributions::Distortion;
use distrl_core::envs::suite::{builtin, EnvParams};
use distrl_core::evaluation::pseudo_samples;
use distrl_core::networks::{
    column_means, cosine_embed, cosine_features, dense, pair_encoding, Activation, Checkpoint, ConditionalArch,
    ConditionalNet, QuantileArch, QuantileNetwork,
};
use distrl_core::rng::stream;
use rand::Rng as _;

fn small_arch() -> QuantileArch {
    QuantileArch {
        state_dim: 3,
        num_actions: 2,
        embed_dim: 8,
        cosine_basis: 6,
        width: 10,
    }
}

/// A network with every layer randomly initialized, so its quantile curve is not flat.
fn random_net(seed: u64) -> QuantileNetwork {
    let mut net = QuantileNetwork::new(small_arch(), &mut stream(seed, "init", 0)).unwrap();
    let mut rng = stream(seed, "init", 1);
    let idx = net.params.position("head1.weight").unwrap();
    for v in net.params.get_mut(idx).values_mut() {
        *v = rng.gen_range(-0.5..0.5);
    }
    net
}

fn embed_params(n: usize, d: usize) -> (Array, Array) {
    let mut rng = stream(5, "embed", 0);
    let w = Array::matrix(n, d, (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let b = Array::matrix(1, d, (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect()).unwrap();
    (w, b)
}

#[test]
fn cosine_embed_at_zero_is_relu_of_column_sums() {
    let (w, b) = embed_params(5, 4);
    let out = cosine_embed(0.0, &w, &b).unwrap();
    for j in 0..4 {
        let s: f64 = (0..5).map(|i| w.get(i, j)).sum::<f64>() + b.get(0, j);
        assert!((out.get(0, j) - s.max(0.0)).abs() < 1e-12);
    }
}

#[test]
fn cosine_features_alternate_at_one() {
    let mut g = Graph::new();
    let t = g.constant(Array::column(vec![1.0]));
    let f = cosine_features(&mut g, t, 6).unwrap();
    for (i, v) in g.value(f).values().iter().enumerate() {
        let expect = if i % 2 == 0 { 1.0 } else { -1.0 };
        assert!((v - expect).abs() < 1e-12, "feature {i}: {v}");
    }
    let (w, b) = embed_params(6, 3);
    let out = cosine_embed(1.0, &w, &b).unwrap();
    for j in 0..3 {
        let s: f64 = (0..6).map(|i| if i % 2 == 0 { w.get(i, j) } else { -w.get(i, j) }).sum::<f64>() + b.get(0, j);
        assert!((out.get(0, j) - s.max(0.0)).abs() < 1e-12);
    }
}

#[test]
fn cosine_embed_tau_gradient_matches_finite_differences() {
    let (w, b) = embed_params(8, 5);
    let weights: Vec<f64> = (0..5).map(|j| 0.3 * j as f64 - 0.6).collect();
    let scalar = |tau: f64| -> f64 {
        let out = cosine_embed(tau, &w, &b).unwrap();
        out.values().iter().zip(&weights).map(|(o, c)| o * c).sum()
    };
    for tau in [0.13, 0.41, 0.77] {
        let mut g = Graph::new();
        let t = g.param(Array::column(vec![tau]));
        let feats = cosine_features(&mut g, t, 8).unwrap();
        let wv = g.constant(w.clone());
        let bv = g.constant(b.clone());
        let pre = dense(&mut g, feats, wv, bv).unwrap();
        let out = g.relu(pre);
        let c = g.constant(Array::row(weights.clone()));
        let weighted = g.mul(out, c).unwrap();
        let root = g.sum(weighted);
        let grads = g.backward(root).unwrap();
        let analytic = grads.get(t).unwrap().values()[0];
        let h = 1e-6;
        let fd = (scalar(tau + h) - scalar(tau - h)) / (2.0 * h);
        assert!((fd - analytic).abs() / fd.abs().max(1e-6) < 1e-4, "tau {tau}: fd {fd} vs {analytic}");
    }
}

#[test]
fn cosine_embed_rejects_levels_outside_unit_interval() {
    let (w, b) = embed_params(3, 2);
    assert!(cosine_embed(1.5, &w, &b).is_err());
    assert!(cosine_embed(-0.1, &w, &b).is_err());
}

#[test]
fn zero_output_layer_gives_zero_quantiles() {
    let net = QuantileNetwork::new(small_arch(), &mut stream(1, "init", 0)).unwrap();
    let qv = net.quantile_values(&[1.0, 0.0, 0.5], &[0.0, 0.2, 0.9, 1.0]).unwrap();
    assert!(qv.values().iter().all(|&v| v == 0.0));
}

#[test]
fn single_level_shape() {
    let net = random_net(2);
    let qv = net.quantile_values(&[0.0, 1.0, 0.0], &[0.5]).unwrap();
    assert_eq!(qv.shape(), &[1, 2]);
}

#[test]
fn sampled_mean_matches_dense_integral() {
    let net = random_net(3);
    let state = [0.2, -1.0, 0.7];
    let grid: Vec<f64> = (0..4000).map(|i| (i as f64 + 0.5) / 4000.0).collect();
    let integral = column_means(&net.quantile_values(&state, &grid).unwrap());
    let mut rng = stream(3, "tau", 0);
    let taus: Vec<f64> = (0..64).map(|_| rng.gen::<f64>()).collect();
    let qv = net.quantile_values(&state, &taus).unwrap();
    for a in 0..2 {
        let col: Vec<f64> = (0..64).map(|k| qv.get(k, a)).collect();
        let mean = col.iter().sum::<f64>() / 64.0;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 63.0;
        let se = (var / 64.0).sqrt();
        assert!((mean - integral[a]).abs() <= 3.0 * se, "action {a}: {mean} vs {} (se {se})", integral[a]);
    }
}

#[test]
fn constant_network_has_constant_q() {
    let mut net = QuantileNetwork::new(small_arch(), &mut stream(4, "init", 0)).unwrap();
    let idx = net.params.position("head1.bias").unwrap();
    *net.params.get_mut(idx) = Array::matrix(1, 2, vec![1.5, 1.5]).unwrap();
    let q = net
        .q_value(&[1.0, 2.0, 3.0], 16, Distortion::Identity, &mut stream(0, "tau", 0))
        .unwrap();
    assert_eq!(q, vec![1.5, 1.5]);
}

#[test]
fn median_only_q_is_the_median_estimate() {
    let net = random_net(5);
    let state = [0.0, 0.3, 1.0];
    let q = net.q_value_at(&state, &[0.5], Distortion::Identity).unwrap();
    let med = net.quantile_values(&state, &[0.5]).unwrap();
    assert_eq!(q, med.values().to_vec());
}

#[test]
fn sampled_q_agrees_with_grid_q() {
    let net = random_net(6);
    let state = [1.0, -0.5, 0.25];
    let grid: Vec<f64> = (0..4000).map(|i| (i as f64 + 0.5) / 4000.0).collect();
    let q_grid = net.q_value_at(&state, &grid, Distortion::Identity).unwrap();
    let k = 10_000;
    let mut rng = stream(6, "tau", 0);
    let taus: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
    let qv = net.quantile_values(&state, &taus).unwrap();
    for a in 0..2 {
        let col: Vec<f64> = (0..k).map(|i| qv.get(i, a)).collect();
        let mean = col.iter().sum::<f64>() / k as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        let se = (var / k as f64).sqrt();
        assert!((mean - q_grid[a]).abs() <= 3.0 * se, "action {a}: {mean} vs {}", q_grid[a]);
    }
}

#[test]
fn zero_initialized_generator_and_critic_output_zero() {
    let gen = ConditionalNet::new(ConditionalArch::generator(2, 3, 8), &mut stream(7, "init", 0)).unwrap();
    let critic_arch = ConditionalArch {
        zero_output: true,
        ..ConditionalArch::critic(2, 3, 8)
    };
    let critic = ConditionalNet::new(critic_arch, &mut stream(7, "init", 1)).unwrap();
    for z in [0.0, 0.3, 1.0] {
        assert_eq!(gen.generate(z, &[1.0, 0.0, 0.0, 1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(critic.criticize(z * 5.0 - 2.0, &[0.0, 1.0, 0.0, 0.0, 1.0]).unwrap(), 0.0);
    }
    assert!(gen.generate(1.2, &[1.0, 0.0, 0.0, 1.0, 0.0]).is_err());
}

fn linear_critic(w: f64) -> ConditionalNet {
    let arch = ConditionalArch {
        state_dim: 2,
        num_actions: 2,
        width: 0,
        hidden_layers: 0,
        activation: Activation::Softplus,
        zero_output: true,
    };
    let mut net = ConditionalNet::new(arch, &mut stream(0, "init", 0)).unwrap();
    *net.params.get_mut(0) = Array::column(vec![w, 0.0, 0.0, 0.0, 0.0]);
    net
}

#[test]
fn linear_critic_fixture_scores_and_input_gradient() {
    let critic = linear_critic(-1.75);
    for x in [-2.0, 0.0, 3.5] {
        assert_eq!(critic.criticize(x, &[0.3, 0.7, 1.0, 0.0]).unwrap(), -1.75 * x);
    }
    let mut g = Graph::new();
    let vars = critic.params.bind(&mut g, false);
    let x = g.input(Array::column(vec![0.5, -1.0]));
    let cond = g.constant(Array::from_rows(&[vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 1.0, 1.0, 0.0]]).unwrap());
    let f = critic.forward(&mut g, &vars, x, cond).unwrap();
    let root = g.sum(f);
    let grad = g.input_gradient(root, x).unwrap();
    assert_eq!(g.value(grad).values(), &[-1.75, -1.75]);
}

#[test]
fn pseudo_samples_of_a_constant_generator() {
    let spec = builtin("coin", &EnvParams::default()).unwrap();
    let mut gen = linear_critic(0.0);
    // Same layout as a generator over the coin's (state, action) encoding.
    assert_eq!(gen.arch.cond_dim(), pair_encoding(&spec, 0, 1).len());
    *gen.params.get_mut(1) = Array::matrix(1, 1, vec![0.625]).unwrap();
    let d = pseudo_samples(&gen, &spec, 0, 1, 10_000, &mut stream(0, "z", 0)).unwrap();
    assert_eq!(d.len(), 10_000);
    assert!(d.samples().iter().all(|&v| v == 0.625));
    let one = pseudo_samples(&gen, &spec, 0, 0, 1, &mut stream(0, "z", 0)).unwrap();
    assert_eq!(one.samples(), &[0.625]);
}

#[test]
fn checkpoint_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let q = random_net(8);
    let mut gen = ConditionalNet::new(ConditionalArch::generator(3, 2, 8), &mut stream(8, "init", 2)).unwrap();
    let last = gen.params.position("layer3.weight").unwrap();
    *gen.params.get_mut(last) = Array::column((0..8).map(|i| (i as f64 * PI).sin()).collect());
    let ck = Checkpoint::new("hash", 17).with_quantile("quantile", &q).with_conditional("generator", &gen);
    let path = dir.path().join("ck.json");
    ck.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    let q2 = back.quantile("quantile").unwrap();
    let g2 = back.conditional("generator").unwrap();
    let taus = [0.0, 0.123456789, 0.5, 0.999];
    let state = [0.1, 0.2, 0.3];
    assert_eq!(
        q.quantile_values(&state, &taus).unwrap().values(),
        q2.quantile_values(&state, &taus).unwrap().values()
    );
    let cond = [1.0, 0.0, 0.0, 0.0, 1.0];
    for z in [0.0, 0.37, 1.0] {
        assert_eq!(gen.generate(z, &cond).unwrap().to_bits(), g2.generate(z, &cond).unwrap().to_bits());
    }
    assert!(back.conditional("critic").is_err());
}
