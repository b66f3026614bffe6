//! Layer definitions: thin structs binding named parameters to ops, with a
//! taped forward for training and a kernel-level forward for inference.

use rand_chacha::ChaCha8Rng;

use super::array::{Array, Scalar};
use super::init;
use super::kernels;
use super::params::{GraphParams, ParameterSet};
use super::tape::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Conv2d {
    pub weight: String,
    pub bias: String,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl Conv2d {
    #[allow(clippy::too_many_arguments)]
    pub fn init<T: Scalar>(
        params: &mut ParameterSet<T>,
        rng: &mut ChaCha8Rng,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Self {
        let fan_in = in_channels * kernel * kernel;
        params.insert(
            format!("{name}.w"),
            init::fan_in_uniform(rng, &[out_channels, in_channels, kernel, kernel], fan_in, 1.0),
        );
        params.insert(format!("{name}.b"), Array::zeros(&[out_channels]));
        Conv2d {
            weight: format!("{name}.w"),
            bias: format!("{name}.b"),
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
        }
    }

    /// Output spatial size; errors when the configuration collapses an axis.
    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let ho = kernels::conv_out_dim(h, self.kernel, self.stride, self.padding);
        let wo = kernels::conv_out_dim(w, self.kernel, self.stride, self.padding);
        match (ho, wo) {
            (Some(a), Some(b)) if a > 0 && b > 0 => Ok((a, b)),
            _ => Err(Error::Config(format!(
                "conv {} on {h}x{w} input (k={}, s={}, p={}) has non-positive output",
                self.weight, self.kernel, self.stride, self.padding
            ))),
        }
    }

    pub fn forward<'g, T: Scalar>(
        &self,
        gp: &GraphParams<'g, T>,
        x: Tensor<'g, T>,
    ) -> Tensor<'g, T> {
        x.conv2d(gp.get(&self.weight), gp.get(&self.bias), self.stride, self.padding)
    }

    pub fn infer<T: Scalar>(&self, params: &ParameterSet<T>, x: &Array<T>) -> Array<T> {
        kernels::conv2d_forward(
            x,
            params.get(&self.weight),
            params.get(&self.bias),
            self.stride,
            self.padding,
        )
    }
}

#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: String,
    pub bias: String,
    pub in_features: usize,
    pub out_features: usize,
}

impl Linear {
    pub fn init<T: Scalar>(
        params: &mut ParameterSet<T>,
        rng: &mut ChaCha8Rng,
        name: &str,
        in_features: usize,
        out_features: usize,
        gain: f64,
    ) -> Self {
        params.insert(
            format!("{name}.w"),
            init::fan_in_uniform(rng, &[out_features, in_features], in_features, gain),
        );
        params.insert(format!("{name}.b"), Array::zeros(&[out_features]));
        Linear {
            weight: format!("{name}.w"),
            bias: format!("{name}.b"),
            in_features,
            out_features,
        }
    }

    pub fn forward<'g, T: Scalar>(
        &self,
        gp: &GraphParams<'g, T>,
        x: Tensor<'g, T>,
    ) -> Tensor<'g, T> {
        x.linear(gp.get(&self.weight), gp.get(&self.bias))
    }

    pub fn infer<T: Scalar>(&self, params: &ParameterSet<T>, x: &Array<T>) -> Array<T> {
        kernels::linear_forward(x, params.get(&self.weight), params.get(&self.bias))
    }
}

/// Single GRU cell (causal; the agent consumes observations online).
/// Hidden state values are bounded in (-1, 1).
#[derive(Debug, Clone)]
pub struct GruCell {
    pub name: String,
    pub input_size: usize,
    pub hidden_size: usize,
}

const GATES: [&str; 3] = ["r", "z", "n"];

impl GruCell {
    pub fn init<T: Scalar>(
        params: &mut ParameterSet<T>,
        rng: &mut ChaCha8Rng,
        name: &str,
        input_size: usize,
        hidden_size: usize,
    ) -> Self {
        for gate in GATES {
            params.insert(
                format!("{name}.w_i{gate}"),
                init::fan_in_uniform(rng, &[hidden_size, input_size], input_size, 1.0),
            );
            params.insert(
                format!("{name}.w_h{gate}"),
                init::orthogonal(rng, hidden_size, hidden_size, 1.0),
            );
            params.insert(format!("{name}.b_i{gate}"), Array::zeros(&[hidden_size]));
            params.insert(format!("{name}.b_h{gate}"), Array::zeros(&[hidden_size]));
        }
        GruCell { name: name.to_string(), input_size, hidden_size }
    }

    fn p(&self, what: &str) -> String {
        format!("{}.{what}", self.name)
    }

    /// One step on the tape: returns the next hidden state [1, H].
    pub fn forward<'g, T: Scalar>(
        &self,
        gp: &GraphParams<'g, T>,
        x: Tensor<'g, T>,
        h: Tensor<'g, T>,
    ) -> Tensor<'g, T> {
        let gate = |g: &str| {
            (
                gp.get(&self.p(&format!("w_i{g}"))),
                gp.get(&self.p(&format!("b_i{g}"))),
                gp.get(&self.p(&format!("w_h{g}"))),
                gp.get(&self.p(&format!("b_h{g}"))),
            )
        };
        let (wir, bir, whr, bhr) = gate("r");
        let (wiz, biz, whz, bhz) = gate("z");
        let (win, bin, whn, bhn) = gate("n");
        let r = x.linear(wir, bir).add(h.linear(whr, bhr)).sigmoid();
        let z = x.linear(wiz, biz).add(h.linear(whz, bhz)).sigmoid();
        let n = x.linear(win, bin).add(r.mul(h.linear(whn, bhn))).tanh();
        // h' = (1 - z) * n + z * h
        z.affine(-T::one(), T::one()).mul(n).add(z.mul(h))
    }

    /// Inference-path step through the same kernels.
    pub fn infer<T: Scalar>(
        &self,
        params: &ParameterSet<T>,
        x: &Array<T>,
        h: &Array<T>,
    ) -> Array<T> {
        let lin = |inp: &Array<T>, w: &str, b: &str| {
            kernels::linear_forward(inp, params.get(&self.p(w)), params.get(&self.p(b)))
        };
        let r = lin(x, "w_ir", "b_ir")
            .zip_map(&lin(h, "w_hr", "b_hr"), |a, b| kernels::sigmoid(a + b));
        let z = lin(x, "w_iz", "b_iz")
            .zip_map(&lin(h, "w_hz", "b_hz"), |a, b| kernels::sigmoid(a + b));
        let hn = lin(h, "w_hn", "b_hn");
        let mut n = lin(x, "w_in", "b_in");
        for i in 0..n.numel() {
            let v = n.data()[i] + r.data()[i] * hn.data()[i];
            n.data_mut()[i] = v.tanh();
        }
        let mut out = Array::zeros(h.shape());
        for i in 0..out.numel() {
            out.data_mut()[i] =
                (T::one() - z.data()[i]) * n.data()[i] + z.data()[i] * h.data()[i];
        }
        out
    }
}
