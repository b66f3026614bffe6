use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::nn::{
    adam_step, AdamConfig, AdamState, Array, Conv2d, GraphParams, Graph, Linear, ParameterSet,
    Tensor,
};
use crate::seed::{self, Domain};
use crate::Result;

/// Three conv layers (relu) plus a fully connected head; the desk-scale
/// stand-in for the baselines' VGG-style encoders.
#[derive(Debug, Clone)]
pub struct ConvStack {
    convs: Vec<Conv2d>,
    fc: Linear,
    pub out_dim: usize,
}

impl ConvStack {
    #[allow(clippy::too_many_arguments)]
    pub fn init(
        params: &mut ParameterSet<f32>,
        rng: &mut ChaCha8Rng,
        name: &str,
        in_channels: usize,
        input_hw: (usize, usize),
        base_channels: usize,
        kernels: [usize; 3],
        strides: [usize; 3],
        paddings: [usize; 3],
        out_dim: usize,
    ) -> Result<Self> {
        let mut convs = Vec::new();
        let (mut h, mut w) = input_hw;
        let mut c_in = in_channels;
        for i in 0..3 {
            let c_out = base_channels << i;
            let conv = Conv2d::init(
                params,
                rng,
                &format!("{name}.conv{i}"),
                c_in,
                c_out,
                kernels[i],
                strides[i],
                paddings[i],
            );
            let (ho, wo) = conv.output_hw(h, w)?;
            convs.push(conv);
            (h, w, c_in) = (ho, wo, c_out);
        }
        let fc = Linear::init(params, rng, &format!("{name}.fc"), c_in * h * w, out_dim, 1.0);
        Ok(ConvStack { convs, fc, out_dim })
    }

    /// Inference over a batch [N, C, H, W] -> [N, out_dim].
    pub fn infer(&self, params: &ParameterSet<f32>, x: &Array<f32>) -> Array<f32> {
        let n = x.shape()[0];
        let mut cur = x.clone();
        for conv in &self.convs {
            cur = conv.infer(params, &cur).map(|v| v.max(0.0));
        }
        let flat = cur.numel() / n;
        self.fc.infer(params, &cur.reshaped(&[n, flat]))
    }

    pub fn forward<'g>(&self, gp: &GraphParams<'g, f32>, x: Tensor<'g, f32>) -> Tensor<'g, f32> {
        let n = x.shape()[0];
        let mut cur = x;
        for conv in &self.convs {
            cur = conv.forward(gp, cur).relu();
        }
        let flat: usize = cur.shape().iter().product::<usize>() / n;
        self.fc.forward(gp, cur.reshape(&[n, flat]))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SupervisedTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for SupervisedTrainConfig {
    fn default() -> Self {
        SupervisedTrainConfig {
            epochs: 60,
            batch_size: 32,
            adam: AdamConfig { learning_rate: 1e-3, ..Default::default() },
            seed: 0,
        }
    }
}

/// Stack per-sample [C,H,W] arrays into one batch [N,C,H,W].
pub(crate) fn stack_batch(samples: &[&Array<f32>]) -> Array<f32> {
    let shape = samples[0].shape().to_vec();
    let mut dims = vec![samples.len()];
    dims.extend_from_slice(&shape);
    let mut data = Vec::with_capacity(samples.len() * samples[0].numel());
    for s in samples {
        assert_eq!(s.shape(), shape.as_slice(), "inconsistent sample shapes");
        data.extend_from_slice(s.data());
    }
    Array::from_vec(&dims, data)
}

/// Generic supervised regression loop over batched inputs.
///
/// `forward` builds predictions [N, out] for the minibatch inputs; targets
/// are dense rows. Returns the per-epoch mean training loss.
pub(crate) fn train_regression<F>(
    params: &mut ParameterSet<f32>,
    inputs: &[Vec<Array<f32>>],
    targets: &[Vec<f32>],
    out_dim: usize,
    cfg: &SupervisedTrainConfig,
    forward: F,
) -> Vec<f64>
where
    F: for<'g> Fn(&'g Graph<f32>, &GraphParams<'g, f32>, &[&[Array<f32>]]) -> Tensor<'g, f32>,
{
    assert_eq!(inputs.len(), targets.len());
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut rng = seed::rng(cfg.seed, Domain::Dataset, 1);
    let mut opt = AdamState::new(params);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for _epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let graph = Graph::new();
            let gp = GraphParams::bind(&graph, params);
            let batch_inputs: Vec<Vec<Array<f32>>> = (0..inputs[0].len())
                .map(|slot| chunk.iter().map(|&i| inputs[i][slot].clone()).collect())
                .collect();
            let slots: Vec<&[Array<f32>]> =
                batch_inputs.iter().map(|v| v.as_slice()).collect();
            let pred = forward(&graph, &gp, &slots);
            let mut t = Vec::with_capacity(chunk.len() * out_dim);
            for &i in chunk {
                t.extend_from_slice(&targets[i]);
            }
            let target = graph.leaf(Array::from_vec(&[chunk.len(), out_dim], t), false);
            let diff = pred.sub(target);
            let loss = diff.mul(diff).mean();
            let value = loss.item() as f64;
            graph.backward(loss);
            let grads = gp.grads(&graph, params);
            adam_step(params, &grads, &mut opt, &cfg.adam);
            epoch_loss += value;
            batches += 1;
        }
        curve.push(epoch_loss / batches as f64);
    }
    curve
}

/// 36-way direction-of-arrival classifier over binaural spectrograms
/// (optional alternative to the oracle-plus-noise DoA mode).
#[derive(Debug, Clone)]
pub struct DoaClassifier {
    pub net: ConvStack,
    pub head: Linear,
}

impl DoaClassifier {
    pub fn init(params: &mut ParameterSet<f32>, rng: &mut ChaCha8Rng) -> Result<Self> {
        let net = ConvStack::init(
            params,
            rng,
            "doa",
            2,
            (65, 26),
            8,
            [8, 4, 3],
            [4, 2, 1],
            [2, 1, 1],
            64,
        )?;
        let head = Linear::init(params, rng, "doa.head", 64, crate::audio::DOA_BINS, 1.0);
        Ok(DoaClassifier { net, head })
    }

    /// Most likely bin for one spectrogram [1,2,65,26].
    pub fn predict(&self, params: &ParameterSet<f32>, spec: &Array<f32>) -> usize {
        let feats = self.net.infer(params, spec).map(|v| v.max(0.0));
        let logits = self.head.infer(params, &feats);
        logits
            .data()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap()
    }
}

/// Cross-entropy training for the DoA classifier. Returns per-epoch loss.
pub fn train_doa_classifier(
    classifier: &DoaClassifier,
    params: &mut ParameterSet<f32>,
    specs: &[Array<f32>],
    labels: &[usize],
    cfg: &SupervisedTrainConfig,
) -> Vec<f64> {
    let mut order: Vec<usize> = (0..specs.len()).collect();
    let mut rng = seed::rng(cfg.seed, Domain::Dataset, 2);
    let mut opt = AdamState::new(params);
    let bins = crate::audio::DOA_BINS;
    let mask = std::rc::Rc::new(vec![true; bins]);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let graph = Graph::new();
            let gp = GraphParams::bind(&graph, params);
            let refs: Vec<&Array<f32>> = chunk.iter().map(|&i| &specs[i]).collect();
            let x = graph.leaf(stack_batch(&refs), false);
            let feats = classifier.net.forward(&gp, x).relu();
            let logits = classifier.head.forward(&gp, feats);
            let logp = logits.masked_log_softmax(mask.clone());
            let mut loss = graph.constant(0.0);
            for (row, &i) in chunk.iter().enumerate() {
                loss = loss.add(logp.pick(row * bins + labels[i]));
            }
            let loss = loss.affine(-1.0 / chunk.len() as f32, 0.0);
            let value = loss.item() as f64;
            graph.backward(loss);
            let grads = gp.grads(&graph, params);
            adam_step(params, &grads, &mut opt, &cfg.adam);
            epoch_loss += value;
            batches += 1;
        }
        curve.push(epoch_loss / batches as f64);
    }
    curve
}

/// Single-branch regression net (spectrogram -> R^2), used by the goal
/// predictor.
pub type RegressionNet = ConvStack;
