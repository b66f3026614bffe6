use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::nn::{
    load_tensors, save_tensors, Array, Conv2d, GraphParams, Graph, GruCell, Linear, ParameterSet,
    Tensor,
};
use crate::seed::{self, Domain};
use crate::{Error, Result};

/// Architecture hyperparameters. Defaults follow the reference sizes
/// (embeddings and GRU of 512, geometric crop 200, acoustic crop 20, action
/// map 9); `desk()` shrinks everything for single-core training runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Geometric-map crop side fed to f_g (map cells at 0.1 m).
    pub geometric_crop: usize,
    /// Acoustic-map crop side fed to f_a (environment cells).
    pub acoustic_crop: usize,
    /// Action map side s_w; displacements span +/- s_w/2 cells.
    pub action_map_size: usize,
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    /// Channel count of the first conv layer; doubles per layer.
    pub conv_channels: usize,
    /// Spectrogram input shape [channels, freq, time].
    pub spectrogram_shape: [usize; 3],
    /// Feed the acoustic map (ablation switch).
    pub use_acoustic_map: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            geometric_crop: 200,
            acoustic_crop: 20,
            action_map_size: 9,
            embedding_dim: 512,
            hidden_dim: 512,
            conv_channels: 32,
            spectrogram_shape: [2, 65, 26],
            use_acoustic_map: true,
        }
    }
}

impl ModelConfig {
    /// Small configuration for desk-scale training on one CPU core.
    pub fn desk() -> Self {
        ModelConfig {
            geometric_crop: 48,
            acoustic_crop: 20,
            action_map_size: 9,
            embedding_dim: 128,
            hidden_dim: 128,
            conv_channels: 16,
            spectrogram_shape: [2, 65, 26],
            use_acoustic_map: true,
        }
    }

    pub fn action_cells(&self) -> usize {
        self.action_map_size * self.action_map_size
    }

    fn gru_input_dim(&self) -> usize {
        if self.use_acoustic_map {
            3 * self.embedding_dim
        } else {
            2 * self.embedding_dim
        }
    }
}

/// One waypoint-step observation bundle (inputs to the three encoders).
#[derive(Debug, Clone)]
pub struct StepObservation {
    /// [1, 2, s_g, s_g]
    pub geometric: Array<f32>,
    /// [1, 2, freq, time]
    pub spectrogram: Array<f32>,
    /// [1, 1, s_a, s_a]
    pub acoustic: Array<f32>,
}

struct Encoder {
    convs: Vec<Conv2d>,
    fc: Linear,
}

impl Encoder {
    #[allow(clippy::too_many_arguments)]
    fn init(
        params: &mut ParameterSet<f32>,
        rng: &mut rand_chacha::ChaCha8Rng,
        name: &str,
        in_channels: usize,
        input_hw: (usize, usize),
        kernels: [usize; 3],
        strides: [usize; 3],
        paddings: [usize; 3],
        base_channels: usize,
        embedding: usize,
    ) -> Result<Self> {
        let mut convs = Vec::new();
        let mut c_in = in_channels;
        let (mut h, mut w) = input_hw;
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
            c_in = c_out;
            h = ho;
            w = wo;
        }
        let flat = c_in * h * w;
        let fc = Linear::init(params, rng, &format!("{name}.fc"), flat, embedding, 1.0);
        Ok(Encoder { convs, fc })
    }

    fn infer(&self, params: &ParameterSet<f32>, x: &Array<f32>) -> Array<f32> {
        let mut cur = x.clone();
        for conv in &self.convs {
            cur = conv.infer(params, &cur).map(|v| v.max(0.0));
        }
        let flat = cur.numel();
        self.fc.infer(params, &cur.reshaped(&[1, flat]))
    }

    fn forward<'g>(&self, gp: &GraphParams<'g, f32>, x: Tensor<'g, f32>) -> Tensor<'g, f32> {
        let mut cur = x;
        for conv in &self.convs {
            cur = conv.forward(gp, cur).relu();
        }
        let flat: usize = cur.shape().iter().product();
        self.fc.forward(gp, cur.reshape(&[1, flat]))
    }
}

/// The full waypoint policy. Layer handles are name-bound to a
/// [`ParameterSet`]; forward passes run either on the inference kernels or
/// on the autodiff tape (both through the same numeric code).
pub struct AvWanModel {
    pub config: ModelConfig,
    f_g: Encoder,
    f_b: Encoder,
    f_a: Option<Encoder>,
    gru: GruCell,
    actor: Linear,
    critic: Linear,
}

impl AvWanModel {
    /// Build the model and its freshly initialized parameters.
    pub fn new(config: ModelConfig, init_seed: u64) -> Result<(Self, ParameterSet<f32>)> {
        let mut params = ParameterSet::new(init_seed);
        let mut rng = seed::rng(init_seed, Domain::ParamInit, 0);
        let f_g = Encoder::init(
            &mut params,
            &mut rng,
            "f_g",
            2,
            (config.geometric_crop, config.geometric_crop),
            [8, 4, 3],
            [4, 2, 1],
            [0, 0, 0],
            config.conv_channels,
            config.embedding_dim,
        )?;
        // The spectrogram's 26-frame axis collapses under valid convolution,
        // so f_b pads each layer.
        let f_b = Encoder::init(
            &mut params,
            &mut rng,
            "f_b",
            config.spectrogram_shape[0],
            (config.spectrogram_shape[1], config.spectrogram_shape[2]),
            [8, 4, 3],
            [4, 2, 1],
            [2, 1, 1],
            config.conv_channels,
            config.embedding_dim,
        )?;
        let f_a = if config.use_acoustic_map {
            Some(Encoder::init(
                &mut params,
                &mut rng,
                "f_a",
                1,
                (config.acoustic_crop, config.acoustic_crop),
                [5, 3, 3],
                [2, 1, 1],
                [0, 0, 0],
                config.conv_channels,
                config.embedding_dim,
            )?)
        } else {
            None
        };
        let gru = GruCell::init(&mut params, &mut rng, "gru", config.gru_input_dim(), config.hidden_dim);
        // Near-uniform initial policy: tiny actor gain.
        let actor =
            Linear::init(&mut params, &mut rng, "actor", config.hidden_dim, config.action_cells(), 0.01);
        let critic = Linear::init(&mut params, &mut rng, "critic", config.hidden_dim, 1, 1.0);
        Ok((AvWanModel { config, f_g, f_b, f_a, gru, actor, critic }, params))
    }

    pub fn zero_hidden(&self) -> Array<f32> {
        Array::zeros(&[1, self.config.hidden_dim])
    }

    /// Encoder embeddings (g_t, b_t, a_t); a_t is zeros when the acoustic
    /// path is ablated.
    pub fn encode(
        &self,
        params: &ParameterSet<f32>,
        obs: &StepObservation,
    ) -> (Array<f32>, Array<f32>, Array<f32>) {
        let g = self.f_g.infer(params, &obs.geometric);
        let b = self.f_b.infer(params, &obs.spectrogram);
        let a = match &self.f_a {
            Some(f_a) => f_a.infer(params, &obs.acoustic),
            None => Array::zeros(&[1, self.config.embedding_dim]),
        };
        (g, b, a)
    }

    /// One inference step: actor logits (flat, s_w^2), value estimate, and
    /// the next hidden state.
    pub fn predict(
        &self,
        params: &ParameterSet<f32>,
        obs: &StepObservation,
        hidden: &Array<f32>,
    ) -> (Array<f32>, f32, Array<f32>) {
        let (g, b, a) = self.encode(params, obs);
        let mut fused: Vec<f32> = Vec::with_capacity(self.config.gru_input_dim());
        fused.extend_from_slice(g.data());
        fused.extend_from_slice(b.data());
        if self.f_a.is_some() {
            fused.extend_from_slice(a.data());
        }
        let x = Array::from_vec(&[1, fused.len()], fused);
        let h = self.gru.infer(params, &x, hidden);
        let logits = self.actor.infer(params, &h);
        let value = self.critic.infer(params, &h).data()[0];
        (logits.reshaped(&[self.config.action_cells()]), value, h)
    }

    /// Tape forward over one step; returns (logits, value, next hidden).
    pub fn predict_t<'g>(
        &self,
        graph: &'g Graph<f32>,
        gp: &GraphParams<'g, f32>,
        obs: &StepObservation,
        hidden: Tensor<'g, f32>,
    ) -> (Tensor<'g, f32>, Tensor<'g, f32>, Tensor<'g, f32>) {
        let g = self.f_g.forward(gp, graph.leaf(obs.geometric.clone(), false));
        let b = self.f_b.forward(gp, graph.leaf(obs.spectrogram.clone(), false));
        let parts: Vec<Tensor<f32>> = match &self.f_a {
            Some(f_a) => {
                vec![g, b, f_a.forward(gp, graph.leaf(obs.acoustic.clone(), false))]
            }
            None => vec![g, b],
        };
        let x = Tensor::concat(&parts);
        let h = self.gru.forward(gp, x, hidden);
        let logits = self.actor.forward(gp, h);
        let value = self.critic.forward(gp, h);
        (logits.reshape(&[self.config.action_cells()]), value.reshape(&[1]), h)
    }
}

/// Compatibility manifest stored inside policy checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyManifest {
    pub model: ModelConfig,
    pub cell_size: f64,
    pub map_resolution: f64,
}

const POLICY_MAGIC: &[u8; 8] = b"ANAVPLCY";

/// Write manifest + tensors as one checkpoint file.
pub fn save_policy(path: &Path, manifest: &PolicyManifest, params: &ParameterSet<f32>) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(POLICY_MAGIC);
    let manifest_json = serde_json::to_vec(manifest)?;
    buf.extend_from_slice(&(manifest_json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&manifest_json);
    save_tensors(&mut buf, params)?;
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Load manifest + tensors; the caller validates compatibility against its
/// run configuration.
pub fn load_policy(path: &Path) -> Result<(PolicyManifest, ParameterSet<f32>)> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != POLICY_MAGIC {
        return Err(Error::Checkpoint(format!("{}: not a policy checkpoint", path.display())));
    }
    let mut len = [0u8; 8];
    file.read_exact(&mut len).map_err(|e| Error::io(path, e))?;
    let mut manifest_json = vec![0u8; u64::from_le_bytes(len) as usize];
    file.read_exact(&mut manifest_json).map_err(|e| Error::io(path, e))?;
    let manifest: PolicyManifest = serde_json::from_slice(&manifest_json)?;
    let params = load_tensors::<f32, _>(&mut file)?;
    Ok((manifest, params))
}
