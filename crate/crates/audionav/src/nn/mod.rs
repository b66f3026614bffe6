//! Minimal dense-tensor reverse-mode autodiff with the layer set needed by
//! the waypoint policy: conv2d, fully connected, GRU cell, relu, softmax,
//! categorical sampling, and Adam.
//!
//! Single precision is the working dtype; everything is generic over
//! [`Scalar`] so the gradient-check suites can run in double precision.

mod adam;
mod array;
mod categorical;
mod checkpoint;
pub mod gradcheck;
mod init;
pub mod kernels;
mod layers;
mod params;
mod tape;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use array::{Array, Dtype, Scalar};
pub use categorical::{categorical_sample, entropy, log_prob};
pub use checkpoint::{load_tensors, save_tensors};
pub use init::{fan_in_uniform, gaussian, orthogonal};
pub use layers::{Conv2d, GruCell, Linear};
pub use params::{GraphParams, ParameterSet};
pub use tape::{Graph, Tensor};

#[cfg(test)]
mod op_grad_tests {
    use super::gradcheck::{check_gradients, GradCheck};
    use super::*;
    use crate::seed::{self, Domain};
    use rand::Rng;
    use std::rc::Rc;

    fn randn(rng: &mut rand_chacha::ChaCha8Rng, shape: &[usize]) -> Array<f64> {
        Array::from_vec(shape, (0..shape.iter().product()).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    /// Resample entries too close to a kink for central differences.
    fn randn_away_from(rng: &mut rand_chacha::ChaCha8Rng, shape: &[usize], margin: f64) -> Array<f64> {
        let mut a = randn(rng, shape);
        for v in a.data_mut() {
            while v.abs() < margin {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        a
    }

    #[test]
    fn elementwise_ops_match_finite_differences() {
        let cfg = GradCheck::double_precision();
        let mut rng = seed::rng(10, Domain::ParamInit, 0);
        let a = randn(&mut rng, &[2, 3]);
        let b = randn(&mut rng, &[2, 3]);
        check_gradients(&[a.clone(), b.clone()], |_, t| t[0].add(t[1]).mean(), &cfg).unwrap();
        check_gradients(&[a.clone(), b.clone()], |_, t| t[0].sub(t[1]).mean(), &cfg).unwrap();
        check_gradients(&[a.clone(), b.clone()], |_, t| t[0].mul(t[1]).sum(), &cfg).unwrap();
        check_gradients(&[a.clone()], |_, t| t[0].affine(2.5, -0.5).mean(), &cfg).unwrap();
        check_gradients(&[a.clone()], |_, t| t[0].sigmoid().mean(), &cfg).unwrap();
        check_gradients(&[a.clone()], |_, t| t[0].tanh().mean(), &cfg).unwrap();
        check_gradients(&[a.clone()], |_, t| t[0].exp().mean(), &cfg).unwrap();
        let kinked = randn_away_from(&mut rng, &[2, 3], 1e-3);
        check_gradients(&[kinked], |_, t| t[0].relu().sum(), &cfg).unwrap();
    }

    #[test]
    fn linear_and_conv_match_finite_differences() {
        let cfg = GradCheck::double_precision();
        let mut rng = seed::rng(11, Domain::ParamInit, 0);
        let x = randn(&mut rng, &[2, 5]);
        let w = randn(&mut rng, &[4, 5]);
        let b = randn(&mut rng, &[4]);
        check_gradients(&[x, w, b], |_, t| t[0].linear(t[1], t[2]).tanh().mean(), &cfg).unwrap();

        let x = randn(&mut rng, &[1, 2, 6, 6]);
        let w = randn(&mut rng, &[3, 2, 3, 3]);
        let b = randn(&mut rng, &[3]);
        check_gradients(
            &[x, w, b],
            |_, t| t[0].conv2d(t[1], t[2], 2, 1).tanh().mean(),
            &cfg,
        )
        .unwrap();
    }

    #[test]
    fn softmax_family_matches_finite_differences() {
        let cfg = GradCheck::double_precision();
        let mut rng = seed::rng(12, Domain::ParamInit, 0);
        let x = randn(&mut rng, &[1, 6]);
        check_gradients(&[x.clone()], |_, t| t[0].softmax().mul(t[0]).sum(), &cfg).unwrap();

        let mask = Rc::new(vec![true, false, true, true, false, true]);
        let m1 = mask.clone();
        check_gradients(&[x.clone()], move |_, t| t[0].masked_log_softmax(m1.clone()).pick(3), &cfg)
            .unwrap();
        let m2 = mask.clone();
        check_gradients(
            &[x],
            move |_, t| {
                let lp = t[0].masked_log_softmax(m2.clone());
                lp.masked_entropy(m2.clone())
            },
            &cfg,
        )
        .unwrap();
    }

    #[test]
    fn minmax_style_ops_match_finite_differences() {
        let cfg = GradCheck::double_precision();
        let mut rng = seed::rng(13, Domain::ParamInit, 0);
        // Keep |a-b| and distance from clamp bounds above the FD step.
        let a = randn(&mut rng, &[4]);
        let mut b = randn(&mut rng, &[4]);
        for i in 0..4 {
            while (a.data()[i] - b.data()[i]).abs() < 1e-3 {
                b.data_mut()[i] = rng.gen_range(-1.0..1.0);
            }
        }
        check_gradients(&[a.clone(), b], |_, t| t[0].min2(t[1]).sum(), &cfg).unwrap();
        let mut c = randn(&mut rng, &[4]);
        for v in c.data_mut() {
            while (v.abs() - 0.5).abs() < 1e-3 {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        check_gradients(&[c], |_, t| t[0].clamp(-0.5, 0.5).sum(), &cfg).unwrap();
    }

    #[test]
    fn gru_step_unrolled_matches_finite_differences() {
        let cfg = GradCheck::double_precision();
        let mut params = ParameterSet::<f64>::new(0);
        let mut rng = seed::rng(14, Domain::ParamInit, 0);
        let cell = GruCell::init(&mut params, &mut rng, "gru", 3, 4);
        let mut inputs: Vec<Array<f64>> = Vec::new();
        let names: Vec<String> = params.iter().map(|(n, _)| n.to_string()).collect();
        for (_, a) in params.iter() {
            inputs.push(a.clone());
        }
        // Earliest input of a 3-step unroll goes first.
        let mut data_rng = seed::rng(15, Domain::Dataset, 0);
        let x0 = Array::from_vec(&[1, 3], (0..3).map(|_| data_rng.gen_range(-1.0..1.0)).collect());
        let x1 = Array::from_vec(&[1, 3], (0..3).map(|_| data_rng.gen_range(-1.0..1.0)).collect());
        let x2 = Array::from_vec(&[1, 3], (0..3).map(|_| data_rng.gen_range(-1.0..1.0)).collect());
        inputs.push(x0);
        inputs.push(x1);
        inputs.push(x2);
        let cell2 = cell.clone();
        check_gradients(
            &inputs,
            move |g, t| {
                // Rebind the leaf handles as a parameter map for the cell.
                let mut ps = ParameterSet::<f64>::new(0);
                for (i, n) in names.iter().enumerate() {
                    ps.insert(n.clone(), t[i].value());
                }
                let gp = rebind(g, &names, t);
                let n = names.len();
                let mut h = g.leaf(Array::zeros(&[1, 4]), false);
                for k in 0..3 {
                    h = cell2.forward(&gp, t[n + k], h);
                }
                h.mul(h).sum()
            },
            &cfg,
        )
        .unwrap();
    }

    /// Build a GraphParams view over existing leaf tensors (test helper).
    fn rebind<'g>(
        _g: &'g Graph<f64>,
        names: &[String],
        leaves: &[Tensor<'g, f64>],
    ) -> GraphParams<'g, f64> {
        GraphParams::from_handles(names.iter().cloned().zip(leaves.iter().copied()).collect())
    }
}
